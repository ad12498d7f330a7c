//! Flat parameter storage.
//!
//! All weights live in one contiguous vector; [`ParamLayout`] records the
//! name, shape and offset of every tensor. Gradients and optimizer moments
//! share the same layout, which keeps the optimizer, checkpoints and
//! finite-difference checks simple loops over slices.

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{ModelConfig, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl ParamEntry {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LayerIds {
    pub wq: ParamId,
    pub bq: ParamId,
    pub wk: ParamId,
    pub bk: ParamId,
    pub wv: ParamId,
    pub bv: ParamId,
    pub wo: ParamId,
    pub bo: ParamId,
    pub ln1_g: ParamId,
    pub ln1_b: ParamId,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub ln2_g: ParamId,
    pub ln2_b: ParamId,
}

#[derive(Debug, Clone)]
pub struct ParamIds {
    pub word: ParamId,
    pub position: ParamId,
    pub coord_x: ParamId,
    pub coord_y: ParamId,
    pub segment: ParamId,
    pub bos: ParamId,
    pub emb_ln_g: ParamId,
    pub emb_ln_b: ParamId,
    pub layers: Vec<LayerIds>,
}

#[derive(Debug, Clone)]
pub struct ParamLayout {
    pub entries: Vec<ParamEntry>,
    pub total: usize,
}

impl ParamLayout {
    fn push(&mut self, name: String, rows: usize, cols: usize) -> ParamId {
        let id = ParamId(self.entries.len());
        self.entries.push(ParamEntry {
            name,
            rows,
            cols,
            offset: self.total,
        });
        self.total += rows * cols;
        id
    }

    pub fn build(config: &ModelConfig) -> (ParamLayout, ParamIds) {
        let d = config.hidden_dim;
        let f = config.ffn_dim;
        let grid = config.coord_grid as usize + 1;
        let mut l = ParamLayout {
            entries: Vec::new(),
            total: 0,
        };
        let word = l.push("embeddings.word".into(), config.vocab_size, d);
        let position = l.push("embeddings.position".into(), config.max_positions(), d);
        let coord_x = l.push("embeddings.x".into(), grid, d);
        let coord_y = l.push("embeddings.y".into(), grid, d);
        let segment = l.push("embeddings.segment".into(), 2, d);
        let bos = l.push("embeddings.bos".into(), 1, d);
        let emb_ln_g = l.push("embeddings.norm.gamma".into(), 1, d);
        let emb_ln_b = l.push("embeddings.norm.beta".into(), 1, d);
        let layers = (0..config.layers)
            .map(|i| {
                let mut p = |n: &str, r, c| l.push(format!("layer{i}.{n}"), r, c);
                LayerIds {
                    wq: p("attn.q.weight", d, d),
                    bq: p("attn.q.bias", 1, d),
                    wk: p("attn.k.weight", d, d),
                    bk: p("attn.k.bias", 1, d),
                    wv: p("attn.v.weight", d, d),
                    bv: p("attn.v.bias", 1, d),
                    wo: p("attn.out.weight", d, d),
                    bo: p("attn.out.bias", 1, d),
                    ln1_g: p("attn.norm.gamma", 1, d),
                    ln1_b: p("attn.norm.beta", 1, d),
                    w1: p("ffn.in.weight", d, f),
                    b1: p("ffn.in.bias", 1, f),
                    w2: p("ffn.out.weight", f, d),
                    b2: p("ffn.out.bias", 1, d),
                    ln2_g: p("ffn.norm.gamma", 1, d),
                    ln2_b: p("ffn.norm.beta", 1, d),
                }
            })
            .collect();
        let ids = ParamIds {
            word,
            position,
            coord_x,
            coord_y,
            segment,
            bos,
            emb_ln_g,
            emb_ln_b,
            layers,
        };
        (l, ids)
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry {
        &self.entries[id.0]
    }

    pub fn view<'a, F>(&self, data: &'a [F], id: ParamId) -> ArrayView2<'a, F> {
        let e = self.entry(id);
        ArrayView2::from_shape((e.rows, e.cols), &data[e.range()]).expect("layout shape")
    }

    pub fn vector<'a, F>(&self, data: &'a [F], id: ParamId) -> ArrayView1<'a, F> {
        let e = self.entry(id);
        ArrayView1::from(&data[e.range()])
    }

    pub fn view_mut<'a, F>(&self, data: &'a mut [F], id: ParamId) -> ArrayViewMut2<'a, F> {
        let e = self.entry(id);
        ArrayViewMut2::from_shape((e.rows, e.cols), &mut data[e.range()]).expect("layout shape")
    }

    pub fn slice_mut<'a, F>(&self, data: &'a mut [F], id: ParamId) -> &'a mut [F] {
        let e = self.entry(id);
        &mut data[e.range()]
    }
}

/// Fills a table with random Fourier features `amp * sin(w * p + phase)`.
/// Rows for nearby `p` start out similar, which gives position and
/// coordinate tables a smooth initial geometry.
fn fourier_table(rng: &mut ChaCha8Rng, rows: usize, cols: usize, min_wave: f64, max_wave: f64, amp: f64) -> Vec<f64> {
    let (lo, hi) = (min_wave.ln(), max_wave.ln());
    let waves: Vec<(f64, f64)> = (0..cols)
        .map(|_| {
            let wavelength = rng.random_range(lo..hi).exp();
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (std::f64::consts::TAU / wavelength, phase)
        })
        .collect();
    let mut out = Vec::with_capacity(rows * cols);
    for p in 0..rows {
        for &(w, phase) in &waves {
            out.push(amp * (w * p as f64 + phase).sin());
        }
    }
    out
}

pub fn init_params<F: Scalar>(config: &ModelConfig, layout: &ParamLayout, ids: &ParamIds) -> Vec<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut data = vec![0.0f64; layout.total];
    let normal = |std: f64| Normal::new(0.0, std).expect("valid std");

    let fill_normal = |data: &mut [f64], id: ParamId, std: f64, rng: &mut ChaCha8Rng| {
        let dist = normal(std);
        for v in layout.slice_mut(data, id) {
            *v = dist.sample(rng);
        }
    };
    let fill_const = |data: &mut [f64], id: ParamId, c: f64| layout.slice_mut(data, id).fill(c);

    let d = config.hidden_dim;
    let grid = f64::from(config.coord_grid);
    fill_normal(&mut data, ids.word, 0.05, &mut rng);
    for (id, min_wave, max_wave) in [
        (ids.position, 2.0, 2.0 * config.max_positions() as f64),
        (ids.coord_x, grid / 250.0, 4.0 * grid),
        (ids.coord_y, grid / 250.0, 4.0 * grid),
    ] {
        let e = layout.entry(id);
        let table = fourier_table(&mut rng, e.rows, e.cols, min_wave.max(2.0), max_wave, 0.1);
        layout.slice_mut(&mut data, id).copy_from_slice(&table);
    }
    fill_normal(&mut data, ids.segment, 0.02, &mut rng);
    fill_normal(&mut data, ids.bos, 0.1, &mut rng);
    fill_const(&mut data, ids.emb_ln_g, 1.0);
    let wstd = 0.02_f64.max(1.0 / (d as f64).sqrt() * 0.5);
    for l in &ids.layers {
        for id in [l.wq, l.wk, l.wv, l.wo, l.w1] {
            fill_normal(&mut data, id, wstd, &mut rng);
        }
        fill_normal(&mut data, l.w2, 1.0 / (config.ffn_dim as f64).sqrt() * 0.5, &mut rng);
        fill_const(&mut data, l.ln1_g, 1.0);
        fill_const(&mut data, l.ln2_g, 1.0);
    }
    data.into_iter().map(F::c).collect()
}
