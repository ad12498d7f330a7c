use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use readorder_core::{BBox, Page};
use readorder_model::network::pointer_logits;
use readorder_model::packing::{pack, page_features};
use readorder_model::{Model, ModelConfig};

const H: f64 = 1e-5;

fn config() -> ModelConfig {
    ModelConfig {
        layers: 2,
        hidden_dim: 16,
        heads: 2,
        ffn_dim: 32,
        max_tokens_per_page: 8,
        coord_grid: 50,
        vocab_size: 32,
        seed: 11,
        ..ModelConfig::default()
    }
}

fn random_page(rng: &mut ChaCha8Rng, n: usize) -> Page {
    let words = (0..n).map(|i| format!("tok{}", rng.random_range(0..5) + i % 2)).collect();
    let boxes = (0..n)
        .map(|_| {
            let x = rng.random_range(0..80);
            let y = rng.random_range(0..80);
            BBox::new(x, y, x + rng.random_range(1..20), y + rng.random_range(1..20)).unwrap()
        })
        .collect();
    Page::from_words("g", 100, 100, words, boxes).unwrap()
}

fn relative_error(a: f64, b: f64) -> f64 {
    // central differences of an O(1) loss carry ~1e-10 of rounding noise, so
    // magnitudes below 1e-6 are compared on an absolute scale; key biases,
    // for one, have an exactly zero gradient
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn full_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut model: Model<f64> = Model::new(config()).unwrap();
    // move norms and biases off their initial constants so they get exercised
    for v in model.params.iter_mut() {
        *v += rng.random_range(-0.05..0.05);
    }
    let page = random_page(&mut rng, 6);
    let features = page_features(&page, &model.config).unwrap();
    let packed = pack(&features, &[4, 1, 5, 0, 3, 2], true).unwrap();

    let mut grad = vec![0.0; model.num_params()];
    model.loss_and_grad(&packed, &mut grad, 1.0, 0).unwrap();

    let mut max_err = 0.0f64;
    let mut checked = 0;
    for i in 0..model.num_params() {
        let orig = model.params[i];
        model.params[i] = orig + H;
        let up = model.loss(&packed).unwrap().sum;
        model.params[i] = orig - H;
        let down = model.loss(&packed).unwrap().sum;
        model.params[i] = orig;
        let fd = (up - down) / (2.0 * H);
        if fd != 0.0 || grad[i] != 0.0 {
            checked += 1;
        }
        max_err = max_err.max(relative_error(grad[i], fd));
    }
    assert!(checked > 1000, "only {checked} parameters influence the loss");
    assert!(max_err < 1e-3, "max relative error {max_err}");
}

fn pointer_nll(h: &Array2<f64>, e: &Array2<f64>, labels: &[usize]) -> f64 {
    let z = pointer_logits(h, e);
    z.rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &l)| {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - row[l]
        })
        .sum()
}

#[test]
fn pointer_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (steps, n, d) = (4, 5, 6);
    let h = Array2::from_shape_fn((steps, d), |_| rng.random_range(-1.0..1.0));
    let e = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
    let labels = [2, 0, 4, 1];

    // analytic: dZ = softmax - onehot; dH = dZ E; dE = dZ^T H
    let mut dz = pointer_logits(&h, &e);
    for (mut row, &l) in dz.rows_mut().into_iter().zip(&labels) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
        row[l] -= 1.0;
    }
    let dh = dz.dot(&e);
    let de = dz.t().dot(&h);

    for (target, analytic) in [(0, &dh), (1, &de)] {
        let shape = analytic.dim();
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let (mut hp, mut hm, mut ep, mut em) = (h.clone(), h.clone(), e.clone(), e.clone());
                if target == 0 {
                    hp[[i, j]] += H;
                    hm[[i, j]] -= H;
                } else {
                    ep[[i, j]] += H;
                    em[[i, j]] -= H;
                }
                let fd = (pointer_nll(&hp, &ep, &labels) - pointer_nll(&hm, &em, &labels)) / (2.0 * H);
                let err = relative_error(analytic[[i, j]], fd);
                assert!(err < 1e-4, "relative error {err} at {target}/{i},{j}");
            }
        }
    }
}

#[test]
fn softmax_normalizes_and_ignores_constant_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = Array2::from_shape_fn((1, 4), |_| rng.random_range(-1.0..1.0));
    let e = Array2::from_shape_fn((7, 4), |_| rng.random_range(-1.0..1.0));
    let p = readorder_model::network::pointer_probs::<f64>(h.row(0), &e).unwrap();
    assert!((p.sum() - 1.0).abs() < 1e-6);
    // a bias constant across candidates leaves the pointer loss unchanged
    let z = pointer_logits(&h, &e);
    let shifted = z.mapv(|v| v + 3.7);
    let lse = |r: ndarray::ArrayView1<f64>| r.iter().map(|v| v.exp()).sum::<f64>().ln();
    for l in 0..7 {
        let a = lse(z.row(0)) - z[[0, l]];
        let b = lse(shifted.row(0)) - shifted[[0, l]];
        assert!((a - b).abs() < 1e-12);
    }
}
