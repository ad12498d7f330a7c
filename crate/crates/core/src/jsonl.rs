//! Line-delimited JSON helpers. One record per line, UTF-8, LF endings.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

pub fn parse_jsonl<T: DeserializeOwned, R: BufRead>(reader: R, source: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source_err| Error::Parse {
            path: source.to_string(),
            line: i + 1,
            source: source_err,
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_jsonl(BufReader::new(file), &path.display().to_string())
}

pub fn write_jsonl_to<T: Serialize, W: Write>(mut writer: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<()> {
    let file = File::create(path)?;
    write_jsonl_to(BufWriter::new(file), items)
}
