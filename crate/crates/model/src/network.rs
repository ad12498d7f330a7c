//! Encoder forward and backward passes and the pointer head.
//!
//! A post-norm transformer encoder runs over the packed sequence. The
//! embedding of every slot is the layer-normed sum of its active embedding
//! families. Step `k` scores source position `i` by the dot product of the
//! source input embedding `e_i` with the final hidden state of the slot that
//! predicts step `k`; a softmax over source positions gives the pointer
//! distribution.
//!
//! Gradients are written by hand. Every forward function returns a cache
//! with exactly what its backward function needs.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::packing::{PackedSequence, Slot, SlotKind};
use crate::params::{init_params, LayerIds, ParamIds, ParamLayout};
use crate::{ModelConfig, ModelError, Result, Scalar};

pub const LN_EPS: f64 = 1e-5;

/// The reading-order model: configuration plus flat parameters.
#[derive(Debug, Clone)]
pub struct Model<F> {
    pub config: ModelConfig,
    pub layout: ParamLayout,
    pub ids: ParamIds,
    pub params: Vec<F>,
}

pub(crate) struct LnCache<F> {
    xhat: Array2<F>,
    rstd: Array1<F>,
}

pub(crate) fn layer_norm<F: Scalar>(x: &Array2<F>, gamma: ArrayView1<F>, beta: ArrayView1<F>) -> (Array2<F>, LnCache<F>) {
    let d = F::c(x.ncols() as f64);
    let eps = F::c(LN_EPS);
    let mut xhat = x.clone();
    let mut rstd = Array1::zeros(x.nrows());
    for (mut row, r) in xhat.rows_mut().into_iter().zip(rstd.iter_mut()) {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|&v| v * v).sum::<F>() / d;
        *r = F::one() / (var + eps).sqrt();
        let rs = *r;
        row.mapv_inplace(|v| v * rs);
    }
    let mut y = xhat.clone();
    Zip::from(y.rows_mut()).for_each(|mut row| {
        Zip::from(&mut row).and(&gamma).and(&beta).for_each(|v, &g, &b| *v = *v * g + b);
    });
    (y, LnCache { xhat, rstd })
}

/// Returns `dx` and accumulates `dgamma`, `dbeta`.
fn layer_norm_backward<F: Scalar>(
    dy: &Array2<F>,
    cache: &LnCache<F>,
    gamma: ArrayView1<F>,
    dgamma: &mut [F],
    dbeta: &mut [F],
) -> Array2<F> {
    let d = F::c(dy.ncols() as f64);
    let mut dx = Array2::zeros(dy.raw_dim());
    for ((dy_row, xhat_row), (mut dx_row, &rstd)) in dy
        .rows()
        .into_iter()
        .zip(cache.xhat.rows())
        .zip(dx.rows_mut().into_iter().zip(cache.rstd.iter()))
    {
        let mut sum_dxhat = F::zero();
        let mut sum_dxhat_xhat = F::zero();
        for (j, (&g, &xh)) in dy_row.iter().zip(xhat_row.iter()).enumerate() {
            dgamma[j] += g * xh;
            dbeta[j] += g;
            let dxh = g * gamma[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh;
        }
        let mean_a = sum_dxhat / d;
        let mean_b = sum_dxhat_xhat / d;
        for (j, (&g, &xh)) in dy_row.iter().zip(xhat_row.iter()).enumerate() {
            dx_row[j] = rstd * (g * gamma[j] - mean_a - xh * mean_b);
        }
    }
    dx
}

const GELU_K: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_C: f64 = 0.044_715;

/// `tanh` through a single exponential; libm's `tanhf` is several times
/// slower and sits on the feed-forward path of every layer.
fn tanh<F: Scalar>(u: F) -> F {
    let two = F::c(2.0);
    F::one() - two / ((two * u).exp() + F::one())
}

/// The tanh term of the GELU approximation at `x`.
fn gelu_tanh<F: Scalar>(x: F) -> F {
    tanh(F::c(GELU_K) * (x + F::c(GELU_C) * x * x * x))
}

fn gelu_with<F: Scalar>(x: F, t: F) -> F {
    F::c(0.5) * x * (F::one() + t)
}

fn gelu_grad_with<F: Scalar>(x: F, t: F) -> F {
    let half = F::c(0.5);
    let c = F::c(GELU_C);
    half * (F::one() + t) + half * x * (F::one() - t * t) * F::c(GELU_K) * (F::one() + F::c(3.0) * c * x * x)
}

pub(crate) fn gelu<F: Scalar>(x: F) -> F {
    gelu_with(x, gelu_tanh(x))
}

#[cfg(test)]
fn gelu_grad<F: Scalar>(x: F) -> F {
    gelu_grad_with(x, gelu_tanh(x))
}

/// Row-wise softmax in place; `-inf` entries become exactly zero.
pub(crate) fn softmax_rows<F: Scalar>(m: &mut Array2<F>) {
    for mut row in m.rows_mut() {
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        row.mapv_inplace(|v| {
            let e = (v - max).exp();
            sum += e;
            e
        });
        row.mapv_inplace(|v| v / sum);
    }
}

/// Additive attention bias: 0 where visible, `-inf` where masked.
fn mask_bias<F: Scalar>(mask: &Array2<bool>) -> Array2<F> {
    mask.mapv(|m| if m { F::zero() } else { F::neg_infinity() })
}

fn add_bias<F: Scalar>(x: &mut Array2<F>, b: ArrayView1<F>) {
    for mut row in x.rows_mut() {
        row += &b;
    }
}

fn accumulate<F: Scalar>(dst: &mut [F], src: impl IntoIterator<Item = F>) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn dropout_mask<F: Scalar>(rows: usize, cols: usize, p: f64, rng: &mut ChaCha8Rng) -> Array2<F> {
    let keep = F::c(1.0 / (1.0 - p));
    Array2::from_shape_simple_fn((rows, cols), || if rng.random::<f64>() < p { F::zero() } else { keep })
}

pub(crate) struct LayerCache<F> {
    x: Array2<F>,
    pub(crate) k: Array2<F>,
    pub(crate) v: Array2<F>,
    q: Array2<F>,
    probs: Vec<Array2<F>>,
    ctx: Array2<F>,
    attn_drop: Option<Array2<F>>,
    ln1: LnCache<F>,
    x1: Array2<F>,
    pre_act: Array2<F>,
    /// GELU tanh term of `pre_act`, kept for the backward pass.
    act_tanh: Array2<F>,
    act: Array2<F>,
    ffn_drop: Option<Array2<F>>,
    ln2: LnCache<F>,
}

pub(crate) struct ForwardCache<F> {
    emb_ln: LnCache<F>,
    /// Layer-normed input embeddings of every slot.
    pub(crate) embeddings: Array2<F>,
    pub(crate) layers: Vec<LayerCache<F>>,
    pub(crate) hidden: Array2<F>,
}

/// Loss of one packed sequence: summed negative log-likelihood over steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceLoss<F> {
    pub sum: F,
    pub steps: usize,
}

impl<F: Scalar> Model<F> {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (layout, ids) = ParamLayout::build(&config);
        let params = init_params(&config, &layout, &ids);
        Ok(Self {
            config,
            layout,
            ids,
            params,
        })
    }

    pub fn from_params(config: ModelConfig, params: Vec<F>) -> Result<Self> {
        config.validate()?;
        let (layout, ids) = ParamLayout::build(&config);
        if params.len() != layout.total {
            return Err(ModelError::Checkpoint(format!(
                "expected {} parameters, found {}",
                layout.total,
                params.len()
            )));
        }
        Ok(Self {
            config,
            layout,
            ids,
            params,
        })
    }

    /// Same model with parameters converted to another precision.
    pub fn cast<G: Scalar>(&self) -> Model<G> {
        Model {
            config: self.config.clone(),
            layout: self.layout.clone(),
            ids: self.ids.clone(),
            params: self.params.iter().map(|&v| G::c(v.as_f64())).collect(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub(crate) fn w(&self, id: crate::params::ParamId) -> ArrayView2<'_, F> {
        self.layout.view(&self.params, id)
    }

    pub(crate) fn b(&self, id: crate::params::ParamId) -> ArrayView1<'_, F> {
        self.layout.vector(&self.params, id)
    }

    /// Raw (pre-norm) embedding of one slot written into `out`.
    pub(crate) fn slot_embedding(&self, slot: &Slot, out: &mut [F]) {
        let ids = &self.ids;
        let mode = self.config.mode;
        let mut add_row = |id, row: usize| {
            let table = self.w(id);
            for (o, &v) in out.iter_mut().zip(table.row(row)) {
                *o += v;
            }
        };
        add_row(ids.position, slot.position as usize);
        add_row(ids.segment, slot.segment as usize);
        match slot.kind {
            SlotKind::Start => add_row(ids.bos, 0),
            SlotKind::Token(f) => {
                if mode.uses_words() {
                    add_row(ids.word, f.word as usize);
                }
                if mode.uses_layout() {
                    add_row(ids.coord_x, f.coords[0] as usize);
                    add_row(ids.coord_y, f.coords[1] as usize);
                    add_row(ids.coord_x, f.coords[2] as usize);
                    add_row(ids.coord_y, f.coords[3] as usize);
                }
            }
        }
    }

    pub(crate) fn embed_slots(&self, slots: &[Slot]) -> (Array2<F>, LnCache<F>) {
        let d = self.config.hidden_dim;
        let mut raw = Array2::zeros((slots.len(), d));
        for (slot, mut row) in slots.iter().zip(raw.rows_mut()) {
            self.slot_embedding(slot, row.as_slice_mut().expect("contiguous row"));
        }
        layer_norm(&raw, self.b(self.ids.emb_ln_g), self.b(self.ids.emb_ln_b))
    }

    /// Layer-normed input embeddings of the source tokens of `packed`.
    pub fn source_embeddings(&self, packed: &PackedSequence) -> Array2<F> {
        let (e, _) = self.embed_slots(&packed.slots[1..=packed.n_src]);
        e
    }

    fn layer_forward(&self, x: Array2<F>, lid: &LayerIds, bias: &Array2<F>, rng: Option<&mut ChaCha8Rng>) -> (Array2<F>, LayerCache<F>) {
        let cfg = &self.config;
        let dh = cfg.head_dim();
        let scale = F::c(1.0 / (dh as f64).sqrt());
        let mut q = x.dot(&self.w(lid.wq));
        add_bias(&mut q, self.b(lid.bq));
        let mut k = x.dot(&self.w(lid.wk));
        add_bias(&mut k, self.b(lid.bk));
        let mut v = x.dot(&self.w(lid.wv));
        add_bias(&mut v, self.b(lid.bv));

        let mut ctx = Array2::zeros(x.raw_dim());
        let mut probs = Vec::with_capacity(cfg.heads);
        for h in 0..cfg.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let mut scores = q.slice(cols).dot(&k.slice(cols).t());
            Zip::from(&mut scores).and(bias).for_each(|s, &b| *s = *s * scale + b);
            softmax_rows(&mut scores);
            ctx.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
            probs.push(scores);
        }
        let mut attn = ctx.dot(&self.w(lid.wo));
        add_bias(&mut attn, self.b(lid.bo));

        let (attn_drop, ffn_drop) = match rng {
            Some(rng) if cfg.dropout > 0.0 => (
                Some(dropout_mask(x.nrows(), x.ncols(), cfg.dropout, rng)),
                Some(dropout_mask(x.nrows(), x.ncols(), cfg.dropout, rng)),
            ),
            _ => (None, None),
        };
        if let Some(m) = &attn_drop {
            attn *= m;
        }
        let (x1, ln1) = layer_norm(&(&x + &attn), self.b(lid.ln1_g), self.b(lid.ln1_b));

        let mut pre_act = x1.dot(&self.w(lid.w1));
        add_bias(&mut pre_act, self.b(lid.b1));
        let act_tanh = pre_act.mapv(gelu_tanh);
        let mut act = pre_act.clone();
        Zip::from(&mut act).and(&act_tanh).for_each(|a, &t| *a = gelu_with(*a, t));
        let mut ffn = act.dot(&self.w(lid.w2));
        add_bias(&mut ffn, self.b(lid.b2));
        if let Some(m) = &ffn_drop {
            ffn *= m;
        }
        let (x2, ln2) = layer_norm(&(&x1 + &ffn), self.b(lid.ln2_g), self.b(lid.ln2_b));
        let cache = LayerCache {
            x,
            k,
            v,
            q,
            probs,
            ctx,
            attn_drop,
            ln1,
            x1,
            pre_act,
            act_tanh,
            act,
            ffn_drop,
            ln2,
        };
        (x2, cache)
    }

    /// Full encoder pass. `rng` enables dropout when the config asks for it.
    pub(crate) fn forward(&self, packed: &PackedSequence, mut rng: Option<&mut ChaCha8Rng>) -> ForwardCache<F> {
        let (embeddings, emb_ln) = self.embed_slots(&packed.slots);
        let bias = mask_bias::<F>(&packed.mask);
        let mut x = embeddings.clone();
        let mut layers = Vec::with_capacity(self.config.layers);
        for lid in &self.ids.layers {
            let (next, cache) = self.layer_forward(x, lid, &bias, rng.as_deref_mut());
            layers.push(cache);
            x = next;
        }
        ForwardCache {
            emb_ln,
            embeddings,
            layers,
            hidden: x,
        }
    }

    /// Teacher-forced pointer logits, one row per prediction step and one
    /// column per source position.
    pub fn logits(&self, packed: &PackedSequence) -> Array2<F> {
        let cache = self.forward(packed, None);
        pointer_logits(&gather_rows(&cache.hidden, &packed.prediction_slots()), &source_rows(&cache.embeddings, packed.n_src))
    }

    pub fn loss(&self, packed: &PackedSequence) -> Result<SequenceLoss<F>> {
        check_labels(packed)?;
        let logits = self.logits(packed);
        Ok(nll(&logits, &packed.labels))
    }

    /// Loss of one packed sequence; adds `scale * d(loss.sum)/d(params)` to
    /// `grad`. `dropout_seed` drives dropout masks when dropout is enabled.
    pub fn loss_and_grad(&self, packed: &PackedSequence, grad: &mut [F], scale: F, dropout_seed: u64) -> Result<SequenceLoss<F>> {
        check_labels(packed)?;
        if grad.len() != self.params.len() {
            return Err(ModelError::Input("gradient buffer has the wrong length".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        let cache = self.forward(packed, Some(&mut rng));
        let pred_slots = packed.prediction_slots();
        let h = gather_rows(&cache.hidden, &pred_slots);
        let e_src = source_rows(&cache.embeddings, packed.n_src);
        let logits = pointer_logits(&h, &e_src);
        let loss = nll(&logits, &packed.labels);

        // d loss / d logits = softmax - onehot, scaled
        let mut dz = logits;
        softmax_rows(&mut dz);
        for (mut row, &label) in dz.rows_mut().into_iter().zip(&packed.labels) {
            row[label] -= F::one();
            row.mapv_inplace(|v| v * scale);
        }
        let dh = dz.dot(&e_src);
        let de_src = dz.t().dot(&h);

        let mut dx = Array2::zeros(cache.hidden.raw_dim());
        for (k, &slot) in pred_slots.iter().enumerate() {
            let mut row = dx.row_mut(slot);
            row += &dh.row(k);
        }
        for (lid, lc) in self.ids.layers.iter().zip(&cache.layers).rev() {
            dx = self.layer_backward(dx, lid, lc, grad);
        }
        dx.slice_mut(s![1..=packed.n_src, ..]).scaled_add(F::one(), &de_src);
        self.embedding_backward(&dx, &cache.emb_ln, &packed.slots, grad);
        Ok(loss)
    }

    fn layer_backward(&self, dx2: Array2<F>, lid: &LayerIds, c: &LayerCache<F>, grad: &mut [F]) -> Array2<F> {
        let cfg = &self.config;
        let layout = &self.layout;
        let dh_dim = cfg.head_dim();
        let scale = F::c(1.0 / (dh_dim as f64).sqrt());

        let dr2 = {
            let (g, b) = two_slices(layout, grad, lid.ln2_g, lid.ln2_b);
            layer_norm_backward(&dx2, &c.ln2, self.b(lid.ln2_g), g, b)
        };
        let mut dffn = dr2.clone();
        if let Some(m) = &c.ffn_drop {
            dffn *= m;
        }
        let mut dx1 = dr2;
        layout.view_mut(grad, lid.w2).scaled_add(F::one(), &c.act.t().dot(&dffn));
        accumulate(layout.slice_mut(grad, lid.b2), dffn.sum_axis(Axis(0)));
        let mut dpre = dffn.dot(&self.w(lid.w2).t());
        Zip::from(&mut dpre)
            .and(&c.pre_act)
            .and(&c.act_tanh)
            .for_each(|d, &z, &t| *d *= gelu_grad_with(z, t));
        layout.view_mut(grad, lid.w1).scaled_add(F::one(), &c.x1.t().dot(&dpre));
        accumulate(layout.slice_mut(grad, lid.b1), dpre.sum_axis(Axis(0)));
        dx1 += &dpre.dot(&self.w(lid.w1).t());

        let dr1 = {
            let (g, b) = two_slices(layout, grad, lid.ln1_g, lid.ln1_b);
            layer_norm_backward(&dx1, &c.ln1, self.b(lid.ln1_g), g, b)
        };
        let mut dattn = dr1.clone();
        if let Some(m) = &c.attn_drop {
            dattn *= m;
        }
        let mut dx = dr1;
        layout.view_mut(grad, lid.wo).scaled_add(F::one(), &c.ctx.t().dot(&dattn));
        accumulate(layout.slice_mut(grad, lid.bo), dattn.sum_axis(Axis(0)));
        let dctx = dattn.dot(&self.w(lid.wo).t());

        let mut dq = Array2::zeros(c.q.raw_dim());
        let mut dk = Array2::zeros(c.k.raw_dim());
        let mut dv = Array2::zeros(c.v.raw_dim());
        for (h, p) in c.probs.iter().enumerate() {
            let cols = s![.., h * dh_dim..(h + 1) * dh_dim];
            let dctx_h = dctx.slice(cols);
            let dp = dctx_h.dot(&c.v.slice(cols).t());
            dv.slice_mut(cols).assign(&p.t().dot(&dctx_h));
            let mut ds = dp;
            for (mut ds_row, p_row) in ds.rows_mut().into_iter().zip(p.rows()) {
                let dot: F = ds_row.iter().zip(p_row.iter()).map(|(&a, &b)| a * b).sum();
                Zip::from(&mut ds_row).and(&p_row).for_each(|d, &pv| *d = pv * (*d - dot) * scale);
            }
            dq.slice_mut(cols).assign(&ds.dot(&c.k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&c.q.slice(cols)));
        }
        for (d, w, b) in [(&dq, lid.wq, lid.bq), (&dk, lid.wk, lid.bk), (&dv, lid.wv, lid.bv)] {
            layout.view_mut(grad, w).scaled_add(F::one(), &c.x.t().dot(d));
            accumulate(layout.slice_mut(grad, b), d.sum_axis(Axis(0)));
            dx += &d.dot(&self.w(w).t());
        }
        dx
    }

    fn embedding_backward(&self, de: &Array2<F>, cache: &LnCache<F>, slots: &[Slot], grad: &mut [F]) {
        let ids = &self.ids;
        let layout = &self.layout;
        let draw = {
            let (g, b) = two_slices(layout, grad, ids.emb_ln_g, ids.emb_ln_b);
            layer_norm_backward(de, cache, self.b(ids.emb_ln_g), g, b)
        };
        let mode = self.config.mode;
        for (slot, drow) in slots.iter().zip(draw.rows()) {
            let mut add = |id, row: usize| {
                let mut table = layout.view_mut(grad, id);
                table.row_mut(row).scaled_add(F::one(), &drow);
            };
            add(ids.position, slot.position as usize);
            add(ids.segment, slot.segment as usize);
            match slot.kind {
                SlotKind::Start => add(ids.bos, 0),
                SlotKind::Token(f) => {
                    if mode.uses_words() {
                        add(ids.word, f.word as usize);
                    }
                    if mode.uses_layout() {
                        add(ids.coord_x, f.coords[0] as usize);
                        add(ids.coord_y, f.coords[1] as usize);
                        add(ids.coord_x, f.coords[2] as usize);
                        add(ids.coord_y, f.coords[3] as usize);
                    }
                }
            }
        }
    }
}

/// Disjoint mutable slices of two parameters.
fn two_slices<'a, F>(layout: &ParamLayout, grad: &'a mut [F], a: crate::params::ParamId, b: crate::params::ParamId) -> (&'a mut [F], &'a mut [F]) {
    let (ra, rb) = (layout.entry(a).range(), layout.entry(b).range());
    assert!(ra.end <= rb.start, "parameters must be ordered");
    let (head, tail) = grad.split_at_mut(rb.start);
    (&mut head[ra], &mut tail[..rb.len()])
}

fn check_labels(packed: &PackedSequence) -> Result<()> {
    if packed.labels.len() != packed.n_tgt + 1 || packed.labels.iter().any(|&l| l >= packed.n_src) {
        return Err(ModelError::Input("packed sequence has no valid teacher-forcing labels".into()));
    }
    Ok(())
}

pub(crate) fn gather_rows<F: Scalar>(m: &Array2<F>, rows: &[usize]) -> Array2<F> {
    m.select(Axis(0), rows)
}

pub(crate) fn source_rows<F: Scalar>(e: &Array2<F>, n_src: usize) -> Array2<F> {
    e.slice(s![1..=n_src, ..]).to_owned()
}

/// `logits[k][i] = e_i · h_k`.
pub fn pointer_logits<F: Scalar>(hidden: &Array2<F>, source: &Array2<F>) -> Array2<F> {
    hidden.dot(&source.t())
}

/// Pointer distribution of one step: softmax of `e_i · h` over `i`.
pub fn pointer_probs<F: Scalar>(h: ArrayView1<F>, source: &Array2<F>) -> Result<Array1<F>> {
    if source.nrows() == 0 {
        return Err(ModelError::Input("no source positions to point at".into()));
    }
    let mut logits = source.dot(&h).insert_axis(Axis(0));
    softmax_rows(&mut logits);
    Ok(logits.remove_axis(Axis(0)))
}

fn nll<F: Scalar>(logits: &Array2<F>, labels: &[usize]) -> SequenceLoss<F> {
    let mut sum = F::zero();
    for (row, &label) in logits.rows().into_iter().zip(labels) {
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<F>().ln();
        sum += lse - row[label];
    }
    SequenceLoss {
        sum,
        steps: labels.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    macro_rules! assert_close {
        ($a:expr, $b:expr, $eps:expr) => {{
            let (a, b): (f64, f64) = ($a, $b);
            assert!((a - b).abs() <= $eps, "{a} vs {b}");
        }};
    }

    #[test]
    fn pointer_probs_symmetry() {
        let source = array![[1.0f64, 2.0], [1.0, 2.0]];
        let p = pointer_probs(array![0.3, -0.7].view(), &source).unwrap();
        assert_close!(p[0], 0.5, 1e-15);
        assert_close!(p[1], 0.5, 1e-15);
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(pointer_probs(array![1.0, 0.0].view(), &empty).is_err());
    }

    #[test]
    fn orthogonal_hidden_gives_uniform() {
        let source = array![[1.0f64, 0.0], [2.0, 0.0], [-3.0, 0.0]];
        let p = pointer_probs(array![0.0, 5.0].view(), &source).unwrap();
        for v in p.iter() {
            assert_close!(*v, 1.0 / 3.0, 1e-15);
        }
    }

    #[test]
    fn softmax_shift_invariant_and_normalized() {
        let mut a = array![[0.5f64, -1.0, 3.0, 2.0]];
        let mut b = a.mapv(|v| v + 123.25);
        softmax_rows(&mut a);
        softmax_rows(&mut b);
        assert_close!(a.sum(), 1.0, 1e-12);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_close!(*x, *y, 1e-12);
        }
        let mut masked = array![[1.0f64, f64::NEG_INFINITY, 1.0]];
        softmax_rows(&mut masked);
        assert_eq!(masked[[0, 1]], 0.0);
        assert_close!(masked[[0, 0]], 0.5, 1e-15);
    }

    #[test]
    fn gelu_derivative_matches_differences() {
        for &x in &[-3.0f64, -0.5, 0.0, 0.7, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert_close!(gelu_grad(x), fd, 1e-8);
        }
    }

    #[test]
    fn tanh_agrees_with_std() {
        for i in -400..=400 {
            let x = f64::from(i) * 0.05;
            assert_close!(tanh(x), x.tanh(), 1e-15);
            assert!((tanh(x as f32) - (x as f32).tanh()).abs() < 1e-6);
        }
        assert_eq!(tanh(1e4f32), 1.0);
        assert_eq!(tanh(-1e4f32), -1.0);
    }

    #[test]
    fn layer_norm_backward_matches_differences() {
        let x = array![[0.3f64, -1.2, 2.0, 0.1], [1.0, 1.5, -0.5, 0.0]];
        let gamma = array![1.1f64, 0.9, -0.4, 2.0];
        let beta = array![0.0f64, 0.1, 0.2, -0.3];
        let w = array![[0.7f64, -0.2, 0.5, 1.3], [0.1, 0.9, -1.1, 0.4]];
        let f = |x: &Array2<f64>| {
            let (y, _) = layer_norm(x, gamma.view(), beta.view());
            (&y * &w).sum()
        };
        let (_, cache) = layer_norm(&x, gamma.view(), beta.view());
        let mut dg = vec![0.0; 4];
        let mut db = vec![0.0; 4];
        let dx = layer_norm_backward(&w, &cache, gamma.view(), &mut dg, &mut db);
        for i in 0..2 {
            for j in 0..4 {
                let h = 1e-6;
                let mut xp = x.clone();
                xp[[i, j]] += h;
                let mut xm = x.clone();
                xm[[i, j]] -= h;
                let fd = (f(&xp) - f(&xm)) / (2.0 * h);
                assert_close!(dx[[i, j]], fd, 1e-7);
            }
        }
        assert_close!(db[0], 0.8, 1e-12);
    }
}
