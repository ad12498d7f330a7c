//! Deterministic synthetic pages with known reading order.
//!
//! Each page is typeset from a small Zipf-weighted vocabulary into one of a
//! few layout families. Token lists come out in true reading order: columns
//! are read top to bottom one after another, tables row by row and cell by
//! cell. Every typeset line also yields a tight [`LineBox`], listed in
//! reading order.
//!
//! Page `k` of a run depends only on `(seed, k)`, so pages can be produced
//! in any order or in parallel.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptation::LineBox;
use crate::colorkey::{page_records, LayoutRecord, SequenceRecord};
use crate::{BBox, Error, Page, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    SingleColumn,
    TwoColumn,
    ThreeColumn,
    Table,
    Mixed,
}

impl LayoutKind {
    pub const CONCRETE: [LayoutKind; 4] = [
        LayoutKind::SingleColumn,
        LayoutKind::TwoColumn,
        LayoutKind::ThreeColumn,
        LayoutKind::Table,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LayoutKind::SingleColumn => "single_column",
            LayoutKind::TwoColumn => "two_column",
            LayoutKind::ThreeColumn => "three_column",
            LayoutKind::Table => "table",
            LayoutKind::Mixed => "mixed",
        }
    }

    /// Kind encoded in a generated page id (`<kind>-<seed>-<ordinal>`).
    pub fn from_page_id(id: &str) -> Option<LayoutKind> {
        let kind = id.split('-').next()?;
        kind.parse().ok()
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "single_column" => LayoutKind::SingleColumn,
            "two_column" => LayoutKind::TwoColumn,
            "three_column" => LayoutKind::ThreeColumn,
            "table" => LayoutKind::Table,
            "mixed" => LayoutKind::Mixed,
            other => return Err(Error::Geometry(format!("unknown layout kind {other:?}"))),
        })
    }
}

pub const DEFAULT_VOCAB: &[&str] = &[
    "the", "of", "and", "to", "in", "a", "is", "that", "for", "it", "as", "was", "with", "be", "by", "on", "not",
    "he", "this", "are", "or", "his", "from", "at", "which", "but", "have", "an", "had", "they", "you", "were",
    "their", "one", "all", "we", "can", "her", "has", "there", "been", "if", "more", "when", "will", "would",
    "who", "so", "no", "she", "other", "its", "may", "these", "what", "them", "than", "some", "him", "time",
    "into", "only", "do", "could", "new", "about", "two", "then", "first", "any", "like", "very", "made", "over",
    "such", "our", "after", "most", "also", "many", "should", "must", "before", "through", "where", "each",
    "those", "people", "much", "well", "because", "state", "between", "under", "never", "report", "system",
    "number", "table", "value", "total", "invoice", "amount", "date", "section", "page", "form", "policy",
    "account", "market", "result", "figure", "method", "budget", "service", "customer", "project", "quarter",
    "revenue", "document", "analysis", "process", "research", "company", "department", "agreement",
    "information", "development", "management", "government", "education",
];

/// Generator parameters. Geometry is in abstract page units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub layout_kind: LayoutKind,
    pub tokens_min: usize,
    pub tokens_max: usize,
    pub width: u32,
    pub height: u32,
    pub font_height: u32,
    pub column_gap: u32,
    pub word_vocab: Vec<String>,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            layout_kind: LayoutKind::Mixed,
            tokens_min: 50,
            tokens_max: 60,
            width: 1000,
            height: 1414,
            font_height: 36,
            column_gap: 40,
            word_vocab: DEFAULT_VOCAB.iter().map(|w| w.to_string()).collect(),
            seed: 0,
        }
    }
}

const MARGIN: u32 = 60;

impl GenSpec {
    pub fn new(layout_kind: LayoutKind, seed: u64) -> Self {
        Self {
            layout_kind,
            seed,
            ..Self::default()
        }
    }

    fn char_width(&self) -> u32 {
        (self.font_height * 3 / 5).max(1)
    }

    fn word_width(&self, w: &str) -> u32 {
        w.chars().count() as u32 * self.char_width()
    }

    fn content_width(&self) -> u32 {
        self.width.saturating_sub(2 * MARGIN)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Geometry(m));
        if self.tokens_min == 0 || self.tokens_min > self.tokens_max {
            return fail(format!("token range {}..={} is empty", self.tokens_min, self.tokens_max));
        }
        if self.word_vocab.is_empty() || self.word_vocab.iter().any(|w| w.is_empty() || w.contains(char::is_whitespace)) {
            return fail("vocabulary must be non-empty single words".into());
        }
        if self.font_height == 0 {
            return fail("font height must be positive".into());
        }
        let widest = self.word_vocab.iter().map(|w| self.word_width(w)).max().unwrap_or(0);
        let narrowest_column = (self.content_width().saturating_sub(2 * self.column_gap)) / 3;
        if widest > narrowest_column || self.width <= 2 * MARGIN || self.height <= 2 * MARGIN {
            return fail(format!(
                "page {}x{} with font height {} cannot fit the widest word ({widest} units) in a column",
                self.width, self.height, self.font_height
            ));
        }
        Ok(())
    }
}

/// One generated page with its typeset line boxes, both in reading order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPage {
    pub kind: LayoutKind,
    pub page: Page,
    pub lines: Vec<LineBox>,
}

impl GeneratedPage {
    /// The two alignment streams for this page: the reading sequence in gold
    /// order and the colored layout records in a seeded physical order.
    pub fn alignment_streams(&self, seed: u64) -> (Vec<SequenceRecord>, Vec<LayoutRecord>) {
        let (seq, mut layout) = page_records(&self.page);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        layout.shuffle(&mut rng);
        (seq, layout)
    }
}

struct Typesetter<'a> {
    spec: &'a GenSpec,
    words: Vec<String>,
    boxes: Vec<BBox>,
    lines: Vec<BBox>,
}

impl Typesetter<'_> {
    /// Flows `words` into the column `[x_left, x_left + width)` starting at
    /// `top`, ending lines early at the given paragraph breaks. Returns the y just
    /// below the last line.
    fn flow(&mut self, words: &[String], x_left: u32, width: u32, top: u32, pitch: u32, breaks: &[usize]) -> Result<u32> {
        let fh = self.spec.font_height;
        let space = self.spec.char_width();
        let mut y = top;
        let mut x = x_left;
        let mut line_start = self.boxes.len();
        for (k, w) in words.iter().enumerate() {
            let ww = self.spec.word_width(w);
            let new_paragraph = k > 0 && breaks.contains(&k);
            if self.boxes.len() > line_start && (new_paragraph || x + ww > x_left + width) {
                self.close_line(line_start);
                line_start = self.boxes.len();
                y += pitch;
                x = x_left;
            }
            if y + fh > self.spec.height - MARGIN {
                return Err(Error::Geometry(format!(
                    "{} words do not fit in a column of width {width}",
                    words.len()
                )));
            }
            self.words.push(w.clone());
            self.boxes.push(BBox::new(x, y, x + ww, y + fh)?);
            x += ww + space;
        }
        if self.boxes.len() > line_start {
            self.close_line(line_start);
            y += pitch;
        }
        Ok(y)
    }

    fn close_line(&mut self, start: usize) {
        let members = &self.boxes[start..];
        let x0 = members.iter().map(|b| b.x0).min().unwrap_or(0);
        let x1 = members.iter().map(|b| b.x1).max().unwrap_or(0);
        let y0 = members.iter().map(|b| b.y0).min().unwrap_or(0);
        let y1 = members.iter().map(|b| b.y1).max().unwrap_or(0);
        self.lines.push(BBox { x0, y0, x1, y1 });
    }
}

fn paragraph_breaks(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut breaks = Vec::new();
    let mut k = 0;
    loop {
        k += rng.random_range(6..=20);
        if k >= n {
            return breaks;
        }
        breaks.push(k);
    }
}

fn split_counts(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}

/// Generates page `ordinal` of the run described by `spec`.
pub fn generate_page(spec: &GenSpec, ordinal: u64) -> Result<GeneratedPage> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(ordinal);

    let kind = match spec.layout_kind {
        LayoutKind::Mixed => LayoutKind::CONCRETE[rng.random_range(0..LayoutKind::CONCRETE.len())],
        k => k,
    };
    let n = rng.random_range(spec.tokens_min..=spec.tokens_max);
    let weights: Vec<f64> = (0..spec.word_vocab.len()).map(|r| 1.0 / (r as f64 + 10.0)).collect();
    let zipf = WeightedIndex::new(&weights).expect("positive weights");
    let words: Vec<String> = (0..n).map(|_| spec.word_vocab[zipf.sample(&mut rng)].clone()).collect();

    let fh = spec.font_height;
    let mut ts = Typesetter {
        spec,
        words: Vec::with_capacity(n),
        boxes: Vec::with_capacity(n),
        lines: Vec::new(),
    };
    let content_w = spec.content_width();

    match kind {
        LayoutKind::SingleColumn => {
            let pitch = fh * rng.random_range(13..=18) / 10;
            let breaks = paragraph_breaks(&mut rng, n);
            ts.flow(&words, MARGIN, content_w, MARGIN, pitch, &breaks)?;
        }
        LayoutKind::TwoColumn | LayoutKind::ThreeColumn => {
            let columns = if kind == LayoutKind::TwoColumn { 2 } else { 3 };
            let mut top = MARGIN;
            let mut rest: &[String] = &words;
            // optional full-width heading above the columns
            if n > 8 && rng.random_bool(0.5) {
                let title_len = rng.random_range(2..=5);
                let (title, body) = rest.split_at(title_len);
                top = ts.flow(title, MARGIN, content_w, top, fh * 3 / 2, &[])? + fh / 2;
                rest = body;
            }
            let col_w = (content_w - (columns - 1) * spec.column_gap) / columns;
            let pitch = fh * rng.random_range(13..=18) / 10;
            let mut start = 0;
            for (c, count) in split_counts(rest.len(), columns as usize).into_iter().enumerate() {
                let chunk = &rest[start..start + count];
                start += count;
                // each column gets its own baseline offset so rows interleave
                let offset = rng.random_range(0..pitch / 2);
                let breaks = paragraph_breaks(&mut rng, chunk.len());
                let x = MARGIN + c as u32 * (col_w + spec.column_gap);
                ts.flow(chunk, x, col_w, top + offset, pitch, &breaks)?;
            }
        }
        LayoutKind::Table => {
            let cols = rng.random_range(2..=3u32);
            let gap = spec.column_gap;
            let cell_w = (content_w - (cols - 1) * gap) / cols;
            let pitch = fh * 13 / 10;
            let mut top = MARGIN;
            let mut placed = 0;
            while placed < n {
                let mut bottom = top;
                for c in 0..cols {
                    if placed == n {
                        break;
                    }
                    let take = rng.random_range(2..=8).min(n - placed);
                    let cell = &words[placed..placed + take];
                    placed += take;
                    let x = MARGIN + c * (cell_w + gap);
                    // cells wrap inside a narrower text width
                    let text_w = cell_w * rng.random_range(5..=10) / 10;
                    let end = ts.flow(cell, x, text_w.max(spec.char_width() * 12), top, pitch, &[])?;
                    bottom = bottom.max(end);
                }
                top = bottom + fh / 2;
            }
        }
        LayoutKind::Mixed => unreachable!("resolved above"),
    }

    let id = format!("{}-{}-{:06}", kind, spec.seed, ordinal);
    let Typesetter { words, boxes, lines, .. } = ts;
    let page = Page::from_words(id.clone(), spec.width, spec.height, words, boxes)?;
    let lines = lines
        .into_iter()
        .enumerate()
        .map(|(k, bbox)| LineBox {
            line_id: format!("{id}-L{k:03}"),
            page_id: id.clone(),
            bbox,
            text: None,
        })
        .collect::<Vec<_>>();
    let mut generated = GeneratedPage { kind, page, lines };
    fill_line_text(&mut generated);
    Ok(generated)
}

fn fill_line_text(g: &mut GeneratedPage) {
    let assignment = crate::adaptation::assign_tokens(&g.page.tokens, &g.lines).expect("pages have lines");
    for (line, members) in g.lines.iter_mut().zip(&assignment.members) {
        let text: Vec<&str> = members.iter().map(|&t| g.page.tokens[t].word.as_str()).collect();
        line.text = Some(text.join(" "));
    }
}

/// Generates `count` pages, ordinals `0..count`.
pub fn generate(spec: &GenSpec, count: usize) -> Result<Vec<GeneratedPage>> {
    (0..count as u64).map(|k| generate_page(spec, k)).collect()
}
