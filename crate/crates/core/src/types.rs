//! Tokens, pages and order predictions.
//!
//! A [`Page`] stores its tokens in gold reading order; there is no separate
//! permutation field. Anything that presents tokens in another order (the
//! heuristic, a shuffled model input, a PDF-side layout stream) carries an
//! explicit index list back into `Page::tokens`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned box in integer page units, left-top and right-bottom corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[u32; 4]")]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self> {
        if x0 > x1 || y0 > y1 {
            return Err(Error::InvalidBBox {
                x0: x0.into(),
                y0: y0.into(),
                x1: x1.into(),
                y1: y1.into(),
            });
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// Area of the rectangle intersection, zero when disjoint or touching.
    pub fn intersection_area(&self, other: &BBox) -> u64 {
        let w = self.x1.min(other.x1).saturating_sub(self.x0.max(other.x0));
        let h = self.y1.min(other.y1).saturating_sub(self.y0.max(other.y0));
        u64::from(w) * u64::from(h)
    }

    /// Length of the overlap of the two vertical intervals.
    pub fn vertical_overlap(&self, other: &BBox) -> u32 {
        self.y1.min(other.y1).saturating_sub(self.y0.max(other.y0))
    }

    /// Center in doubled coordinates, which keeps it integral.
    pub fn center2(&self) -> (i64, i64) {
        (
            i64::from(self.x0) + i64::from(self.x1),
            i64::from(self.y0) + i64::from(self.y1),
        )
    }

    pub fn within(&self, width: u32, height: u32) -> bool {
        self.x1 <= width && self.y1 <= height
    }

    pub fn translate(&self, dx: u32, dy: u32) -> BBox {
        BBox {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            x1: self.x1 + dx,
            y1: self.y1 + dy,
        }
    }

    pub fn to_array(self) -> [u32; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }
}

impl TryFrom<[i64; 4]> for BBox {
    type Error = Error;

    fn try_from(c: [i64; 4]) -> Result<Self> {
        let invalid = || Error::InvalidBBox {
            x0: c[0],
            y0: c[1],
            x1: c[2],
            y1: c[3],
        };
        let mut v = [0u32; 4];
        for (dst, &src) in v.iter_mut().zip(&c) {
            *dst = u32::try_from(src).map_err(|_| invalid())?;
        }
        BBox::new(v[0], v[1], v[2], v[3]).map_err(|_| invalid())
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub word: String,
    pub bbox: BBox,
    /// Number of earlier occurrences of `word` on the page, in reading order.
    pub appearance_index: u32,
}

impl Token {
    pub fn key(&self) -> (&str, u32) {
        (&self.word, self.appearance_index)
    }
}

/// Appearance index of every word: how many times it occurred before.
pub fn appearance_indices<S: AsRef<str>>(words: &[S]) -> Vec<u32> {
    let mut seen: HashMap<&str, u32> = HashMap::new();
    words
        .iter()
        .map(|w| {
            let c = seen.entry(w.as_ref()).or_insert(0);
            let idx = *c;
            *c += 1;
            idx
        })
        .collect()
}

/// One page of tokens in gold reading order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PageRecord", into = "PageRecord")]
pub struct Page {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub tokens: Vec<Token>,
}

impl Page {
    /// Builds a validated page. Tokens must be in reading order with
    /// appearance indices counting earlier occurrences of each word.
    pub fn new(id: impl Into<String>, width: u32, height: u32, tokens: Vec<Token>) -> Result<Self> {
        let page = Self {
            id: id.into(),
            width,
            height,
            tokens,
        };
        page.validate()?;
        Ok(page)
    }

    /// Builds a page from words and boxes, computing appearance indices.
    pub fn from_words(
        id: impl Into<String>,
        width: u32,
        height: u32,
        words: Vec<String>,
        bboxes: Vec<BBox>,
    ) -> Result<Self> {
        let id = id.into();
        if words.len() != bboxes.len() {
            return Err(Error::InvalidPage {
                id,
                reason: format!("{} words but {} boxes", words.len(), bboxes.len()),
            });
        }
        let indices = appearance_indices(&words);
        let tokens = words
            .into_iter()
            .zip(bboxes)
            .zip(indices)
            .map(|((word, bbox), appearance_index)| Token {
                word,
                bbox,
                appearance_index,
            })
            .collect();
        Self::new(id, width, height, tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn invalid(&self, reason: String) -> Error {
        Error::InvalidPage {
            id: self.id.clone(),
            reason,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(self.invalid("page dimensions must be positive".into()));
        }
        if self.tokens.is_empty() {
            return Err(self.invalid("page has no tokens".into()));
        }
        let expected = appearance_indices(&self.tokens.iter().map(|t| t.word.as_str()).collect::<Vec<_>>());
        for (k, (t, want)) in self.tokens.iter().zip(expected).enumerate() {
            if t.word.is_empty() {
                return Err(self.invalid(format!("token {k} has an empty word")));
            }
            if !t.bbox.within(self.width, self.height) {
                return Err(self.invalid(format!(
                    "token {k} box {:?} exceeds page {}x{}",
                    t.bbox.to_array(),
                    self.width,
                    self.height
                )));
            }
            if t.appearance_index != want {
                return Err(self.invalid(format!(
                    "token {k} ({:?}) has appearance index {}, expected {want}",
                    t.word, t.appearance_index
                )));
            }
        }
        Ok(())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.word.as_str())
    }

    pub fn bboxes(&self) -> Vec<BBox> {
        self.tokens.iter().map(|t| t.bbox).collect()
    }
}

/// JSONL wire form of a page: index-aligned arrays in gold order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PageRecord {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub words: Vec<String>,
    pub bboxes: Vec<BBox>,
    pub appearance_indices: Vec<u32>,
}

impl TryFrom<PageRecord> for Page {
    type Error = Error;

    fn try_from(r: PageRecord) -> Result<Self> {
        if r.words.len() != r.bboxes.len() || r.words.len() != r.appearance_indices.len() {
            return Err(Error::InvalidPage {
                id: r.id,
                reason: format!(
                    "array lengths differ: {} words, {} bboxes, {} appearance indices",
                    r.words.len(),
                    r.bboxes.len(),
                    r.appearance_indices.len()
                ),
            });
        }
        let tokens = r
            .words
            .into_iter()
            .zip(r.bboxes)
            .zip(r.appearance_indices)
            .map(|((word, bbox), appearance_index)| Token {
                word,
                bbox,
                appearance_index,
            })
            .collect();
        Page::new(r.id, r.width, r.height, tokens)
    }
}

impl From<Page> for PageRecord {
    fn from(p: Page) -> Self {
        let mut words = Vec::with_capacity(p.tokens.len());
        let mut bboxes = Vec::with_capacity(p.tokens.len());
        let mut appearance_indices = Vec::with_capacity(p.tokens.len());
        for t in p.tokens {
            words.push(t.word);
            bboxes.push(t.bbox);
            appearance_indices.push(t.appearance_index);
        }
        Self {
            id: p.id,
            width: p.width,
            height: p.height,
            words,
            bboxes,
            appearance_indices,
        }
    }
}

/// Predicted order for one page, as indices into `Page::tokens`.
///
/// Unconstrained decoding may repeat or omit indices; metrics consume
/// [`OrderPrediction::deduplicated`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderPrediction {
    pub page_id: String,
    pub indices: Vec<usize>,
}

impl OrderPrediction {
    pub fn new(page_id: impl Into<String>, indices: Vec<usize>) -> Self {
        Self {
            page_id: page_id.into(),
            indices,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&bad) = self.indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidPage {
                id: self.page_id.clone(),
                reason: format!("predicted index {bad} out of range for {n} tokens"),
            });
        }
        Ok(())
    }

    /// Indices with later repeats dropped, first occurrence kept.
    pub fn deduplicated(&self) -> Vec<usize> {
        let mut seen = std::collections::HashSet::new();
        self.indices.iter().copied().filter(|i| seen.insert(*i)).collect()
    }

    pub fn is_permutation(&self, n: usize) -> bool {
        is_permutation(&self.indices, n)
    }
}

pub fn is_permutation(indices: &[usize], n: usize) -> bool {
    if indices.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Maps a physically ordered token list back onto gold order.
///
/// Returns `p` with `layout_tokens[p[k]] == page.tokens[k]`, matching tokens
/// by their `(word, appearance_index)` key.
pub fn permutation_from_layout_order(page: &Page, layout_tokens: &[Token]) -> Result<Vec<usize>> {
    let mut by_key: HashMap<(&str, u32), usize> = HashMap::with_capacity(layout_tokens.len());
    for (pos, t) in layout_tokens.iter().enumerate() {
        if by_key.insert(t.key(), pos).is_some() {
            return Err(Error::Alignment {
                word: t.word.clone(),
                index: t.appearance_index,
                reason: "key occurs twice in the layout list".into(),
            });
        }
    }
    let mut perm = Vec::with_capacity(page.tokens.len());
    for t in &page.tokens {
        match by_key.remove(&t.key()) {
            Some(pos) => perm.push(pos),
            None => {
                return Err(Error::Alignment {
                    word: t.word.clone(),
                    index: t.appearance_index,
                    reason: "key missing from the layout list".into(),
                })
            }
        }
    }
    if let Some(((word, index), _)) = by_key.into_iter().next() {
        return Err(Error::Alignment {
            word: word.to_string(),
            index,
            reason: "key missing from the page".into(),
        });
    }
    Ok(perm)
}
