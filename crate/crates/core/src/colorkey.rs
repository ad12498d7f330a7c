//! Appearance-index colors and sequence/layout alignment.
//!
//! Repeated words are disambiguated by their appearance index, which is
//! rendered as the word color on the layout side. The color mapping is the
//! plain byte-field split of a 24-bit integer, so it is a bijection between
//! `[0, 2^24)` and RGB.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{BBox, Error, Page, Result, Token};

pub const MAX_INDEX: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u8; 3]", into = "[u8; 3]")]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }
}

impl From<[u8; 3]> for Rgb {
    fn from(c: [u8; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }
}

impl From<Rgb> for [u8; 3] {
    fn from(c: Rgb) -> Self {
        [c.r, c.g, c.b]
    }
}

pub fn encode_index(i: u64) -> Result<Rgb> {
    if i >= MAX_INDEX {
        return Err(Error::IndexRange(i));
    }
    Ok(Rgb::new((i >> 16) as u8, (i >> 8) as u8, i as u8))
}

pub fn decode_color(c: Rgb) -> u64 {
    (u64::from(c.r) << 16) | (u64::from(c.g) << 8) | u64::from(c.b)
}

/// One word of the reading sequence, `(w, i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    #[serde(default)]
    pub page_id: String,
    pub word: String,
    pub appearance_index: u32,
}

/// One word as seen on the rendered page, `(w', c, x0, y0, x1, y1, W, H)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutRecord {
    #[serde(default)]
    pub page_id: String,
    pub word: String,
    pub color: Rgb,
    pub bbox: BBox,
    pub page_width: u32,
    pub page_height: u32,
}

/// Attaches each sequence record to the unique layout record with the same
/// word and the color of its appearance index. Output is in sequence order.
pub fn align(seq: &[SequenceRecord], layout: &[LayoutRecord]) -> Result<Vec<Token>> {
    if seq.len() != layout.len() {
        return Err(Error::AlignmentCount(format!(
            "{} sequence records but {} layout records",
            seq.len(),
            layout.len()
        )));
    }
    let mut by_key: HashMap<(&str, Rgb), usize> = HashMap::with_capacity(layout.len());
    for (j, rec) in layout.iter().enumerate() {
        if by_key.insert((rec.word.as_str(), rec.color), j).is_some() {
            return Err(Error::Alignment {
                word: rec.word.clone(),
                index: decode_color(rec.color) as u32,
                reason: "more than one layout record has this word and color".into(),
            });
        }
    }
    let mut tokens = Vec::with_capacity(seq.len());
    for rec in seq {
        let color = encode_index(rec.appearance_index.into())?;
        let j = by_key
            .remove(&(rec.word.as_str(), color))
            .ok_or_else(|| Error::Alignment {
                word: rec.word.clone(),
                index: rec.appearance_index,
                reason: if tokens.iter().any(|t: &Token| t.key() == (rec.word.as_str(), rec.appearance_index)) {
                    "sequence record repeats an earlier key".into()
                } else {
                    "no layout record has this word and color".into()
                },
            })?;
        tokens.push(Token {
            word: rec.word.clone(),
            bbox: layout[j].bbox,
            appearance_index: rec.appearance_index,
        });
    }
    Ok(tokens)
}

/// Aligns one page's records and builds the page, taking its size from the
/// layout side.
pub fn align_page(id: &str, seq: &[SequenceRecord], layout: &[LayoutRecord]) -> Result<Page> {
    let (width, height) = match layout.first() {
        Some(r) => (r.page_width, r.page_height),
        None => {
            return Err(Error::InvalidPage {
                id: id.into(),
                reason: "no layout records".into(),
            })
        }
    };
    if let Some(r) = layout.iter().find(|r| (r.page_width, r.page_height) != (width, height)) {
        return Err(Error::InvalidPage {
            id: id.into(),
            reason: format!(
                "layout record {:?} reports page size {}x{}, expected {width}x{height}",
                r.word, r.page_width, r.page_height
            ),
        });
    }
    let tokens = align(seq, layout)?;
    Page::new(id, width, height, tokens)
}

/// Splits a page back into the two record streams, layout side in gold order.
pub fn page_records(page: &Page) -> (Vec<SequenceRecord>, Vec<LayoutRecord>) {
    let seq = page
        .tokens
        .iter()
        .map(|t| SequenceRecord {
            page_id: page.id.clone(),
            word: t.word.clone(),
            appearance_index: t.appearance_index,
        })
        .collect();
    let layout = page
        .tokens
        .iter()
        .map(|t| LayoutRecord {
            page_id: page.id.clone(),
            word: t.word.clone(),
            color: encode_index(t.appearance_index.into()).expect("appearance index below 2^24"),
            bbox: t.bbox,
            page_width: page.width,
            page_height: page.height,
        })
        .collect();
    (seq, layout)
}
