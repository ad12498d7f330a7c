//! Incremental decoding with cached keys and values.
//!
//! Source slots never attend to the target segment, so their keys, values and
//! hidden states are computed once per page. Each decoding step appends one
//! target slot and runs only that row through the encoder.

use std::cmp::Ordering;

use ndarray::{s, Array1, Array2, Axis};
use readorder_core::{OrderPrediction, Page};

use crate::network::{layer_norm, softmax_rows, Model};
use crate::packing::{pack, page_features, target_slot, TokenFeatures};
use crate::params::LayerIds;
use crate::{ModelError, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeOptions {
    /// Beam width; 1 is greedy decoding.
    pub beam: usize,
    /// Forbid pointing at a source position twice.
    pub constrained: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            beam: 1,
            constrained: true,
        }
    }
}

/// Per-page state shared by every hypothesis.
pub struct SourceCache<F> {
    features: Vec<TokenFeatures>,
    source_order: Vec<usize>,
    /// Layer-normed input embeddings of source positions.
    source: Array2<F>,
    /// Keys and values of the source segment (start slot included), per layer.
    kv: Vec<(Array2<F>, Array2<F>)>,
    start_hidden: Array1<F>,
}

impl<F> SourceCache<F> {
    pub fn len(&self) -> usize {
        self.source_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_order.is_empty()
    }
}

#[derive(Clone)]
struct Hypothesis<F> {
    /// Emitted source positions.
    steps: Vec<usize>,
    score: f64,
    used: Vec<bool>,
    /// Target-segment keys and values, per layer.
    kv: Vec<(Array2<F>, Array2<F>)>,
    hidden: Array1<F>,
}

impl<F: Scalar> Model<F> {
    pub fn encode_source(&self, features: &[TokenFeatures], source_order: &[usize]) -> Result<SourceCache<F>> {
        let packed = pack(features, source_order, false)?;
        let cache = self.forward(&packed, None);
        Ok(SourceCache {
            features: features.to_vec(),
            source_order: source_order.to_vec(),
            source: cache.embeddings.slice(s![1..=packed.n_src, ..]).to_owned(),
            kv: cache.layers.iter().map(|l| (l.k.clone(), l.v.clone())).collect(),
            start_hidden: cache.hidden.row(0).to_owned(),
        })
    }

    fn layer_step(&self, x: Array2<F>, lid: &LayerIds, src_kv: &(Array2<F>, Array2<F>), tgt_kv: &mut (Array2<F>, Array2<F>)) -> Array2<F> {
        let dh = self.config.head_dim();
        let scale = F::c(1.0 / (dh as f64).sqrt());
        let proj = |w, b| {
            let mut y = x.dot(&self.w(w));
            y += &self.b(b);
            y
        };
        let q = proj(lid.wq, lid.bq);
        tgt_kv.0.push_row(proj(lid.wk, lid.bk).row(0)).expect("matching width");
        tgt_kv.1.push_row(proj(lid.wv, lid.bv).row(0)).expect("matching width");

        let n_src = src_kv.0.nrows();
        let mut ctx = Array2::zeros(x.raw_dim());
        for h in 0..self.config.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let qh = q.slice(cols);
            let mut scores = Array2::zeros((1, n_src + tgt_kv.0.nrows()));
            scores.slice_mut(s![.., ..n_src]).assign(&qh.dot(&src_kv.0.slice(cols).t()));
            scores.slice_mut(s![.., n_src..]).assign(&qh.dot(&tgt_kv.0.slice(cols).t()));
            scores.mapv_inplace(|v| v * scale);
            softmax_rows(&mut scores);
            let mut c = scores.slice(s![.., ..n_src]).dot(&src_kv.1.slice(cols));
            c += &scores.slice(s![.., n_src..]).dot(&tgt_kv.1.slice(cols));
            ctx.slice_mut(cols).assign(&c);
        }
        let mut attn = ctx.dot(&self.w(lid.wo));
        attn += &self.b(lid.bo);
        let (x1, _) = layer_norm(&(&x + &attn), self.b(lid.ln1_g), self.b(lid.ln1_b));
        let mut pre = x1.dot(&self.w(lid.w1));
        pre += &self.b(lid.b1);
        let mut ffn = pre.mapv(crate::network::gelu).dot(&self.w(lid.w2));
        ffn += &self.b(lid.b2);
        layer_norm(&(&x1 + &ffn), self.b(lid.ln2_g), self.b(lid.ln2_b)).0
    }

    /// Appends the token at source position `pos` as target step `step` and
    /// returns its final hidden state.
    fn target_step(&self, src: &SourceCache<F>, kv: &mut [(Array2<F>, Array2<F>)], step: usize, pos: usize) -> Array1<F> {
        let features = src.features[src.source_order[pos]];
        let slot = target_slot(features, src.len(), step);
        let (mut x, _) = self.embed_slots(&[slot]);
        for ((lid, src_kv), tgt_kv) in self.ids.layers.iter().zip(&src.kv).zip(kv.iter_mut()) {
            x = self.layer_step(x, lid, src_kv, tgt_kv);
        }
        x.remove_axis(Axis(0))
    }

    fn empty_target_kv(&self) -> Vec<(Array2<F>, Array2<F>)> {
        let d = self.config.hidden_dim;
        (0..self.config.layers).map(|_| (Array2::zeros((0, d)), Array2::zeros((0, d)))).collect()
    }

    /// Pointer logits for steps `0..=forced.len()` when the target segment
    /// holds the source positions `forced`. Matches teacher-forced logits.
    pub fn incremental_logits(&self, src: &SourceCache<F>, forced: &[usize]) -> Array2<F> {
        let mut kv = self.empty_target_kv();
        let mut rows = Vec::with_capacity(forced.len() + 1);
        rows.push(src.source.dot(&src.start_hidden));
        for (step, &pos) in forced.iter().enumerate() {
            let h = self.target_step(src, &mut kv, step, pos);
            rows.push(src.source.dot(&h));
        }
        let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
        ndarray::stack(Axis(0), &views).expect("equal widths")
    }

    /// Decodes a full sequence of source positions.
    pub fn decode_positions(&self, src: &SourceCache<F>, opts: DecodeOptions) -> Result<Vec<usize>> {
        if opts.beam == 0 {
            return Err(ModelError::Config("beam width must be at least 1".into()));
        }
        let n = src.len();
        let mut beams = vec![Hypothesis {
            steps: Vec::with_capacity(n),
            score: 0.0,
            used: vec![false; n],
            kv: self.empty_target_kv(),
            hidden: src.start_hidden.clone(),
        }];
        for step in 0..n {
            let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
            for (b, hyp) in beams.iter().enumerate() {
                let logits = src.source.dot(&hyp.hidden);
                let allowed = |pos: usize| !(opts.constrained && hyp.used[pos]);
                let max = (0..n).filter(|&p| allowed(p)).map(|p| logits[p].as_f64()).fold(f64::NEG_INFINITY, f64::max);
                let lse = max + (0..n).filter(|&p| allowed(p)).map(|p| (logits[p].as_f64() - max).exp()).sum::<f64>().ln();
                if !lse.is_finite() {
                    return Err(ModelError::Input("pointer distribution is not finite".into()));
                }
                for pos in (0..n).filter(|&p| allowed(p)) {
                    candidates.push((hyp.score + logits[pos].as_f64() - lse, b, pos));
                }
            }
            // higher score first; ties go to the lexicographically smaller sequence
            candidates.sort_by(|a, b| {
                b.0.total_cmp(&a.0)
                    .then_with(|| beams[a.1].steps.cmp(&beams[b.1].steps))
                    .then_with(|| a.2.cmp(&b.2))
            });
            candidates.truncate(opts.beam);
            let last = step + 1 == n;
            beams = candidates
                .into_iter()
                .map(|(score, b, pos)| {
                    let mut hyp = beams[b].clone();
                    hyp.steps.push(pos);
                    hyp.used[pos] = true;
                    hyp.score = score;
                    if !last {
                        hyp.hidden = self.target_step(src, &mut hyp.kv, step, pos);
                    }
                    hyp
                })
                .collect();
        }
        let best = beams
            .into_iter()
            .min_by(|a, b| match b.score.total_cmp(&a.score) {
                Ordering::Equal => a.steps.cmp(&b.steps),
                o => o,
            })
            .expect("at least one hypothesis");
        Ok(best.steps)
    }

    /// Predicted reading order of `page` as page token indices, with the
    /// tokens presented in `source_order`.
    pub fn predict(&self, page: &Page, source_order: &[usize], opts: DecodeOptions) -> Result<OrderPrediction> {
        let features = page_features(page, &self.config)?;
        let src = self.encode_source(&features, source_order)?;
        let positions = self.decode_positions(&src, opts)?;
        Ok(OrderPrediction {
            page_id: page.id.clone(),
            indices: positions.into_iter().map(|p| source_order[p]).collect(),
        })
    }
}
