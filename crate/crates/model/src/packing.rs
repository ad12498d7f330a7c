//! Packing a page into one encoder sequence.
//!
//! The packed sequence is `[start, source..., target...]`. The start slot and
//! the source tokens form the source segment; target slot `j` re-presents the
//! token that was placed at step `j` (the gold token during training, the
//! previously emitted token at inference). Step 0 is predicted from the start
//! slot and step `k > 0` from target slot `k - 1`.

use ndarray::Array2;
use readorder_core::Page;

use crate::vocab::word_id;
use crate::{ModelConfig, ModelError, Result};

/// Self-attention visibility for a packed sequence whose first `n_src` slots
/// form the source segment and whose last `n_tgt` slots form the target.
///
/// `mask[[i, j]]` is true iff slot `i` may attend to slot `j`: every slot sees
/// the whole source segment, source slots see nothing else, and target slots
/// also see target slots at or left of themselves.
pub fn build_mask(n_src: usize, n_tgt: usize) -> Array2<bool> {
    let len = n_src + n_tgt;
    Array2::from_shape_fn((len, len), |(i, j)| j < n_src || (i >= n_src && j <= i))
}

/// Encoder inputs of one token: hashed word and grid-normalized box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenFeatures {
    pub word: u32,
    /// `[x0, y0, x1, y1]` on the `0..=coord_grid` grid.
    pub coords: [u32; 4],
}

/// Buckets a coordinate: `floor(coord * grid / extent)`.
pub fn normalize_coord(coord: u32, extent: u32, grid: u32) -> u32 {
    (u64::from(coord) * u64::from(grid) / u64::from(extent)) as u32
}

/// Features of every page token, in page (gold) order.
pub fn page_features(page: &Page, config: &ModelConfig) -> Result<Vec<TokenFeatures>> {
    if page.len() > config.max_tokens_per_page {
        return Err(ModelError::TooManyTokens {
            page_id: page.id.clone(),
            tokens: page.len(),
            max: config.max_tokens_per_page,
        });
    }
    let grid = config.coord_grid;
    page.tokens
        .iter()
        .enumerate()
        .map(|(index, t)| {
            let b = t.bbox;
            if !b.within(page.width, page.height) {
                return Err(ModelError::OutOfPage {
                    page_id: page.id.clone(),
                    index,
                    bbox: b.to_array(),
                    width: page.width,
                    height: page.height,
                });
            }
            Ok(TokenFeatures {
                word: word_id(&t.word, config.vocab_size),
                coords: [
                    normalize_coord(b.x0, page.width, grid),
                    normalize_coord(b.y0, page.height, grid),
                    normalize_coord(b.x1, page.width, grid),
                    normalize_coord(b.y1, page.height, grid),
                ],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Start,
    Token(TokenFeatures),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub kind: SlotKind,
    pub position: u32,
    /// 0 for the source segment, 1 for the target segment.
    pub segment: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackedSequence {
    pub slots: Vec<Slot>,
    /// Number of source tokens, excluding the start slot.
    pub n_src: usize,
    pub n_tgt: usize,
    pub mask: Array2<bool>,
    /// Gold source position for each prediction step (empty at inference).
    pub labels: Vec<usize>,
    /// Page token index of each source position.
    pub source_order: Vec<usize>,
}

impl PackedSequence {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Packed index of the slot whose hidden state predicts step `k`.
    pub fn prediction_slot(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            1 + self.n_src + (k - 1)
        }
    }

    pub fn prediction_slots(&self) -> Vec<usize> {
        (0..=self.n_tgt).map(|k| self.prediction_slot(k)).collect()
    }
}

pub fn target_slot(features: TokenFeatures, n_src: usize, step: usize) -> Slot {
    Slot {
        kind: SlotKind::Token(features),
        position: (1 + n_src + step) as u32,
        segment: 1,
    }
}

/// Packs a page whose tokens are presented in `source_order` (page indices).
///
/// With `teacher_forcing`, the target segment holds the first `n - 1` gold
/// tokens and `labels[k]` is the source position of gold token `k`.
pub fn pack(features: &[TokenFeatures], source_order: &[usize], teacher_forcing: bool) -> Result<PackedSequence> {
    let n = features.len();
    if n == 0 {
        return Err(ModelError::Input("cannot pack an empty page".into()));
    }
    if !readorder_core::types::is_permutation(source_order, n) {
        return Err(ModelError::Input(format!(
            "source order is not a permutation of 0..{n}"
        )));
    }
    let mut slots = Vec::with_capacity(2 * n);
    slots.push(Slot {
        kind: SlotKind::Start,
        position: 0,
        segment: 0,
    });
    for (i, &t) in source_order.iter().enumerate() {
        slots.push(Slot {
            kind: SlotKind::Token(features[t]),
            position: (1 + i) as u32,
            segment: 0,
        });
    }
    let (n_tgt, labels) = if teacher_forcing {
        let mut source_pos = vec![0; n];
        for (i, &t) in source_order.iter().enumerate() {
            source_pos[t] = i;
        }
        for (j, f) in features.iter().take(n - 1).enumerate() {
            slots.push(target_slot(*f, n, j));
        }
        (n - 1, source_pos)
    } else {
        (0, Vec::new())
    };
    Ok(PackedSequence {
        mask: build_mask(1 + n, n_tgt),
        slots,
        n_src: n,
        n_tgt,
        labels,
        source_order: source_order.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use readorder_core::BBox;

    #[test]
    fn mask_source_only_is_full() {
        assert!(build_mask(2, 0).iter().all(|&v| v));
    }

    #[test]
    fn mask_two_by_two() {
        let m = build_mask(2, 2);
        let allowed: Vec<Vec<usize>> = (0..4).map(|i| (0..4).filter(|&j| m[[i, j]]).collect()).collect();
        assert_eq!(allowed, vec![vec![0, 1], vec![0, 1], vec![0, 1, 2], vec![0, 1, 2, 3]]);
    }

    proptest! {
        #[test]
        fn mask_contract(n_src in 1usize..40, n_tgt in 0usize..40) {
            let m = build_mask(n_src, n_tgt);
            let len = n_src + n_tgt;
            for i in 0..len {
                for j in 0..len {
                    let expected = match (i < n_src, j < n_src) {
                        (_, true) => true,
                        (true, false) => false,
                        (false, false) => j <= i,
                    };
                    prop_assert_eq!(m[[i, j]], expected);
                }
            }
        }
    }

    #[test]
    fn coordinate_buckets() {
        assert_eq!(normalize_coord(500, 1000, 1000), 500);
        assert_eq!(normalize_coord(707, 1414, 1000), 500);
        assert_eq!(normalize_coord(1414, 1414, 1000), 1000);
        assert_eq!(normalize_coord(1, 3, 1000), 333);
    }

    fn page(n: usize) -> Page {
        Page::from_words(
            "p",
            100,
            100,
            (0..n).map(|i| format!("w{i}")).collect(),
            (0..n as u32).map(|i| BBox::new(i, 0, i + 1, 1).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn packing_teacher_forcing() {
        let cfg = ModelConfig::default();
        let f = page_features(&page(3), &cfg).unwrap();
        let p = pack(&f, &[2, 0, 1], true).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.labels, vec![1, 2, 0]);
        assert_eq!(p.prediction_slots(), vec![0, 4, 5]);
        // target slot j carries gold token j
        assert_eq!(p.slots[4].kind, SlotKind::Token(f[0]));
        assert_eq!(p.slots[5].kind, SlotKind::Token(f[1]));
        assert_eq!(p.slots.iter().map(|s| s.position).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(p.mask, build_mask(4, 2));
        assert!(pack(&f, &[0, 0, 1], true).is_err());
    }

    #[test]
    fn feature_errors() {
        let cfg = ModelConfig {
            max_tokens_per_page: 2,
            ..ModelConfig::default()
        };
        assert!(matches!(page_features(&page(3), &cfg), Err(ModelError::TooManyTokens { .. })));
        let mut p = page(2);
        p.width = 1;
        assert!(matches!(
            page_features(&p, &ModelConfig::default()),
            Err(ModelError::OutOfPage { .. })
        ));
    }
}
