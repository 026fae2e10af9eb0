//! The trainable forward-forward layer: pre-activation, goodness, the pair
//! loss, and exact single-layer gradients for the plain, label-fed and
//! feedback-fed forms.
//!
//! A layer learns in isolation: its inputs (and any feedback input) are
//! constants, so gradients never flow to earlier layers.

use crate::error::{Error, Result};
use crate::num::{adam_step, sigmoid, softplus, AdamConfig, AdamState, Matrix, Rng, Scalar};

/// How per-sample goodness reduces the squared activations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GoodnessReducer {
    /// Sum of squared activations (default).
    Sum,
    /// Mean of squared activations; useful when layer widths vary and a
    /// single threshold must serve all layers.
    Mean,
}

/// Threshold and reducer shared by every goodness evaluation in a network.
#[derive(Clone, Copy, Debug)]
pub struct GoodnessCfg<S> {
    pub theta: S,
    pub reducer: GoodnessReducer,
}

impl<S: Scalar> GoodnessCfg<S> {
    pub fn new(theta: f64, reducer: GoodnessReducer) -> Self {
        GoodnessCfg {
            theta: S::from_f64_lossy(theta),
            reducer,
        }
    }

    fn rho(&self, width: usize) -> S {
        match self.reducer {
            GoodnessReducer::Sum => S::one(),
            GoodnessReducer::Mean => S::one() / S::from_f64_lossy(width.max(1) as f64),
        }
    }
}

/// Per-sample goodness of a batch: the reduced squared activations and the
/// threshold-offset logits fed to the logistic.
#[derive(Clone, Debug)]
pub struct Goodness<S> {
    pub values: Vec<S>,
    pub logits: Vec<S>,
}

impl<S: Scalar> Goodness<S> {
    fn from_activations(h: &Matrix<S>, cfg: &GoodnessCfg<S>) -> Self {
        let rho = cfg.rho(h.cols());
        let values: Vec<S> = h.row_sq_sums().into_iter().map(|v| v * rho).collect();
        let logits = values.iter().map(|&v| v - cfg.theta).collect();
        Goodness { values, logits }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sigmoid(value - theta)` per sample, the probability of "positive".
    pub fn probabilities(&self) -> Vec<S> {
        self.logits.iter().map(|&z| sigmoid(z)).collect()
    }
}

/// One trainable layer's state. `w_label` is present exactly when the layer
/// participates in direct label feeding; `w_fb` exactly when the layer
/// receives a cortical-loop input.
#[derive(Clone, Debug)]
pub struct LayerParams<S> {
    pub w_in: Matrix<S>,
    pub b: Matrix<S>,
    pub w_label: Option<Matrix<S>>,
    pub w_fb: Option<Matrix<S>>,
    pub adam_w_in: AdamState<S>,
    pub adam_b: AdamState<S>,
    pub adam_w_label: Option<AdamState<S>>,
    pub adam_w_fb: Option<AdamState<S>>,
}

impl<S: Scalar> LayerParams<S> {
    /// Seeded initialization: weights uniform in `+-1/sqrt(fan_in)`, biases
    /// zero. Draw order is fixed (`w_in`, then `w_label` when present).
    pub fn init(
        in_dim: usize,
        out_dim: usize,
        label_dim: Option<usize>,
        opt: &AdamConfig,
        rng: &mut Rng,
    ) -> Self {
        let mut w_in = Matrix::zeros(out_dim, in_dim);
        rng.fill_uniform_signed(&mut w_in, 1.0 / (in_dim as f64).sqrt());
        let b = Matrix::zeros(1, out_dim);
        let w_label = label_dim.map(|c| {
            let mut w = Matrix::zeros(out_dim, c);
            rng.fill_uniform_signed(&mut w, 1.0 / (c as f64).sqrt());
            w
        });
        LayerParams {
            adam_w_in: AdamState::new(out_dim, in_dim, opt),
            adam_b: AdamState::new(1, out_dim, opt),
            adam_w_label: w_label.as_ref().map(|w| AdamState::new(w.rows(), w.cols(), opt)),
            adam_w_fb: None,
            w_in,
            b,
            w_label,
            w_fb: None,
        }
    }

    /// Rebuilds a layer from raw tensors with fresh optimizer state
    /// (checkpoint loading).
    pub fn from_tensors(
        w_in: Matrix<S>,
        b: Matrix<S>,
        w_label: Option<Matrix<S>>,
        opt: &AdamConfig,
    ) -> Self {
        LayerParams {
            adam_w_in: AdamState::new(w_in.rows(), w_in.cols(), opt),
            adam_b: AdamState::new(1, b.cols(), opt),
            adam_w_label: w_label.as_ref().map(|w| AdamState::new(w.rows(), w.cols(), opt)),
            adam_w_fb: None,
            w_in,
            b,
            w_label,
            w_fb: None,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w_in.cols()
    }
    pub fn out_dim(&self) -> usize {
        self.w_in.rows()
    }

    pub fn attach_feedback(&mut self, w_fb: Matrix<S>, adam: AdamState<S>) {
        self.w_fb = Some(w_fb);
        self.adam_w_fb = Some(adam);
    }

    pub fn detach_feedback(&mut self) -> Option<(Matrix<S>, AdamState<S>)> {
        match (self.w_fb.take(), self.adam_w_fb.take()) {
            (Some(w), Some(a)) => Some((w, a)),
            _ => None,
        }
    }

    /// True when every parameter entry is finite.
    pub fn all_finite(&self) -> bool {
        self.w_in.all_finite()
            && self.b.all_finite()
            && self.w_label.as_ref().is_none_or(Matrix::all_finite)
            && self.w_fb.as_ref().is_none_or(Matrix::all_finite)
    }

    /// Exact bit equality of every parameter tensor.
    pub fn bit_eq(&self, other: &Self) -> bool {
        fn opt_eq<S: Scalar>(a: &Option<Matrix<S>>, b: &Option<Matrix<S>>) -> bool {
            match (a, b) {
                (Some(x), Some(y)) => x.bit_eq(y),
                (None, None) => true,
                _ => false,
            }
        }
        self.w_in.bit_eq(&other.w_in)
            && self.b.bit_eq(&other.b)
            && opt_eq(&self.w_label, &other.w_label)
            && opt_eq(&self.w_fb, &other.w_fb)
    }
}

/// `s = x * w_in^T + b`, no nonlinearity.
pub fn forward_sum<S: Scalar>(params: &LayerParams<S>, x: &Matrix<S>) -> Result<Matrix<S>> {
    x.matmul_nt(&params.w_in)?.add_row_broadcast(&params.b)
}

/// `s = x * w_in^T + fb * w_fb^T + b` for feedback-receiving cells; plain
/// `forward_sum` when `fb` is absent.
pub fn forward_sum_fb<S: Scalar>(
    params: &LayerParams<S>,
    x: &Matrix<S>,
    fb: Option<&Matrix<S>>,
) -> Result<Matrix<S>> {
    let mut s = x.matmul_nt(&params.w_in)?;
    if let Some(f) = fb {
        let w_fb = params.w_fb.as_ref().ok_or_else(|| {
            Error::VariantMisuse("feedback input supplied but layer has no feedback weights".into())
        })?;
        s.add_in_place(&f.matmul_nt(w_fb)?)?;
    }
    s.add_row_broadcast(&params.b)
}

/// `a = relu(s)`: the only tensor propagated to the next layer, computed
/// before any label enters, so it is identical for every candidate class.
pub fn forward_activation<S: Scalar>(s: &Matrix<S>) -> Matrix<S> {
    s.relu()
}

/// Baseline goodness over a layer's activations.
pub fn goodness_plain<S: Scalar>(a: &Matrix<S>, cfg: &GoodnessCfg<S>) -> Goodness<S> {
    Goodness::from_activations(a, cfg)
}

/// Label-fed goodness: `h = relu(label * w_label^T + s)`, reduced squares.
pub fn goodness_with_label<S: Scalar>(
    params: &LayerParams<S>,
    s: &Matrix<S>,
    label_onehot: &Matrix<S>,
    cfg: &GoodnessCfg<S>,
) -> Result<Goodness<S>> {
    let h = label_activations(params, s, label_onehot)?;
    Ok(Goodness::from_activations(&h, cfg))
}

fn label_activations<S: Scalar>(
    params: &LayerParams<S>,
    s: &Matrix<S>,
    label_onehot: &Matrix<S>,
) -> Result<Matrix<S>> {
    let w_label = params.w_label.as_ref().ok_or_else(|| {
        Error::VariantMisuse("label goodness requested on a layer without label weights".into())
    })?;
    let mut pre = label_onehot.matmul_nt(w_label)?;
    pre.add_in_place(s)?;
    Ok(pre.relu())
}

/// Mean over the batch of `(softplus(-logit_pos) + softplus(logit_neg)) / 2`.
pub fn pair_loss<S: Scalar>(g_pos: &Goodness<S>, g_neg: &Goodness<S>) -> S {
    assert_eq!(g_pos.len(), g_neg.len());
    let n = g_pos.len().max(1);
    let half = S::from_f64_lossy(0.5);
    let mut acc = S::zero();
    for i in 0..g_pos.len() {
        acc += half * (softplus(-g_pos.logits[i]) + softplus(g_neg.logits[i]));
    }
    acc / S::from_f64_lossy(n as f64)
}

/// Diagnostic margin `mean(goodness_neg - goodness_pos)`; reported in
/// training logs, never optimized.
pub fn raw_margin<S: Scalar>(g_pos: &Goodness<S>, g_neg: &Goodness<S>) -> S {
    assert_eq!(g_pos.len(), g_neg.len());
    let n = g_pos.len().max(1);
    let mut acc = S::zero();
    for i in 0..g_pos.len() {
        acc += g_neg.values[i] - g_pos.values[i];
    }
    acc / S::from_f64_lossy(n as f64)
}

/// Inputs to one training step of a single layer. Inputs are constants:
/// no gradient flows through them.
pub enum LayerInputs<'a, S> {
    /// Baseline form: distinct positive/negative inputs, plain goodness.
    Plain {
        x_pos: &'a Matrix<S>,
        x_neg: &'a Matrix<S>,
    },
    /// Label-fed form: one shared input, one-hot label pair, optional frozen
    /// feedback activation.
    Labeled {
        x: &'a Matrix<S>,
        label_pos: &'a Matrix<S>,
        label_neg: &'a Matrix<S>,
        feedback: Option<&'a Matrix<S>>,
    },
}

/// Gradients for every present parameter tensor.
#[derive(Clone, Debug)]
pub struct LayerGrads<S> {
    pub w_in: Matrix<S>,
    pub b: Matrix<S>,
    pub w_label: Option<Matrix<S>>,
    pub w_fb: Option<Matrix<S>>,
}

/// The pair loss as a pure function of `params`; probe target for the
/// finite-difference oracle.
pub fn layer_loss<S: Scalar>(
    params: &LayerParams<S>,
    inputs: &LayerInputs<'_, S>,
    cfg: &GoodnessCfg<S>,
) -> Result<S> {
    match inputs {
        LayerInputs::Plain { x_pos, x_neg } => {
            let g_pos = goodness_plain(&forward_sum(params, x_pos)?.relu(), cfg);
            let g_neg = goodness_plain(&forward_sum(params, x_neg)?.relu(), cfg);
            Ok(pair_loss(&g_pos, &g_neg))
        }
        LayerInputs::Labeled {
            x,
            label_pos,
            label_neg,
            feedback,
        } => {
            let s = forward_sum_fb(params, x, *feedback)?;
            let g_pos = goodness_with_label(params, &s, label_pos, cfg)?;
            let g_neg = goodness_with_label(params, &s, label_neg, cfg)?;
            Ok(pair_loss(&g_pos, &g_neg))
        }
    }
}

/// Exact analytic gradient of the pair loss with respect to each present
/// parameter tensor. Returns `(loss, raw_margin, grads)` so trainers get the
/// diagnostics from the same forward pass.
pub fn layer_gradients<S: Scalar>(
    params: &LayerParams<S>,
    inputs: &LayerInputs<'_, S>,
    cfg: &GoodnessCfg<S>,
) -> Result<(S, S, LayerGrads<S>)> {
    match inputs {
        LayerInputs::Plain { x_pos, x_neg } => grads_plain(params, x_pos, x_neg, cfg),
        LayerInputs::Labeled {
            x,
            label_pos,
            label_neg,
            feedback,
        } => grads_labeled(params, x, label_pos, label_neg, *feedback, cfg),
    }
}

/// Row-scaling coefficients of `dryLoss/d pre-activation` per branch:
/// `-sigmoid(-z_pos) * rho / B` and `+sigmoid(z_neg) * rho / B`.
fn branch_coefficients<S: Scalar>(
    g_pos: &Goodness<S>,
    g_neg: &Goodness<S>,
    rho: S,
) -> (Vec<S>, Vec<S>) {
    let inv_b = S::one() / S::from_f64_lossy(g_pos.len().max(1) as f64);
    let pos = g_pos
        .logits
        .iter()
        .map(|&z| -sigmoid(-z) * rho * inv_b)
        .collect();
    let neg = g_neg
        .logits
        .iter()
        .map(|&z| sigmoid(z) * rho * inv_b)
        .collect();
    (pos, neg)
}

fn grads_plain<S: Scalar>(
    params: &LayerParams<S>,
    x_pos: &Matrix<S>,
    x_neg: &Matrix<S>,
    cfg: &GoodnessCfg<S>,
) -> Result<(S, S, LayerGrads<S>)> {
    let a_pos = forward_sum(params, x_pos)?.relu();
    let a_neg = forward_sum(params, x_neg)?.relu();
    let g_pos = goodness_plain(&a_pos, cfg);
    let g_neg = goodness_plain(&a_neg, cfg);
    let loss = pair_loss(&g_pos, &g_neg);
    let margin = raw_margin(&g_pos, &g_neg);

    let (c_pos, c_neg) = branch_coefficients(&g_pos, &g_neg, cfg.rho(params.out_dim()));
    // relu'(s) at 0 is taken as 0; a itself is zero there, so scaling the
    // activations covers the derivative exactly.
    let d_pos = a_pos.scale_rows(&c_pos);
    let d_neg = a_neg.scale_rows(&c_neg);
    let d_all = d_pos.vstack(&d_neg)?;
    let x_all = x_pos.vstack(x_neg)?;
    let grad_w_in = d_all.matmul_tn(&x_all)?;
    let grad_b = d_all.col_sums();
    Ok((
        loss,
        margin,
        LayerGrads {
            w_in: grad_w_in,
            b: grad_b,
            w_label: None,
            w_fb: None,
        },
    ))
}

fn grads_labeled<S: Scalar>(
    params: &LayerParams<S>,
    x: &Matrix<S>,
    label_pos: &Matrix<S>,
    label_neg: &Matrix<S>,
    feedback: Option<&Matrix<S>>,
    cfg: &GoodnessCfg<S>,
) -> Result<(S, S, LayerGrads<S>)> {
    if feedback.is_some() && params.w_fb.is_none() {
        return Err(Error::VariantMisuse(
            "feedback input supplied but layer has no feedback weights".into(),
        ));
    }
    let s = forward_sum_fb(params, x, feedback)?;
    let h_pos = label_activations(params, &s, label_pos)?;
    let h_neg = label_activations(params, &s, label_neg)?;
    let g_pos = Goodness::from_activations(&h_pos, cfg);
    let g_neg = Goodness::from_activations(&h_neg, cfg);
    let loss = pair_loss(&g_pos, &g_neg);
    let margin = raw_margin(&g_pos, &g_neg);

    let (c_pos, c_neg) = branch_coefficients(&g_pos, &g_neg, cfg.rho(params.out_dim()));
    let d_pos = h_pos.scale_rows(&c_pos);
    let d_neg = h_neg.scale_rows(&c_neg);
    let mut d_sum = d_pos.clone();
    d_sum.add_in_place(&d_neg)?;

    let mut grad_w_label = d_pos.matmul_tn(label_pos)?;
    grad_w_label.add_in_place(&d_neg.matmul_tn(label_neg)?)?;
    let grad_w_in = d_sum.matmul_tn(x)?;
    let grad_b = d_sum.col_sums();
    let grad_w_fb = match feedback {
        Some(f) => Some(d_sum.matmul_tn(f)?),
        None => None,
    };
    Ok((
        loss,
        margin,
        LayerGrads {
            w_in: grad_w_in,
            b: grad_b,
            w_label: Some(grad_w_label),
            w_fb: grad_w_fb,
        },
    ))
}

/// Advances every parameter tensor that has a gradient by one Adam step.
pub fn update<S: Scalar>(params: &mut LayerParams<S>, grads: &LayerGrads<S>) -> Result<()> {
    adam_step(&mut params.w_in, &grads.w_in, &mut params.adam_w_in)?;
    adam_step(&mut params.b, &grads.b, &mut params.adam_b)?;
    if let Some(gl) = &grads.w_label {
        let w = params.w_label.as_mut().ok_or_else(|| {
            Error::VariantMisuse("label gradient supplied for a layer without label weights".into())
        })?;
        let st = params.adam_w_label.as_mut().expect("adam state mirrors w_label");
        adam_step(w, gl, st)?;
    }
    if let Some(gf) = &grads.w_fb {
        let w = params.w_fb.as_mut().ok_or_else(|| {
            Error::VariantMisuse(
                "feedback gradient supplied for a layer without feedback weights".into(),
            )
        })?;
        let st = params.adam_w_fb.as_mut().expect("adam state mirrors w_fb");
        adam_step(w, gf, st)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Rng;

    fn cfg64(theta: f64) -> GoodnessCfg<f64> {
        GoodnessCfg::new(theta, GoodnessReducer::Sum)
    }

    fn random_layer(
        in_dim: usize,
        out_dim: usize,
        label_dim: Option<usize>,
        seed: u64,
    ) -> LayerParams<f64> {
        let mut rng = Rng::seed_from_u64(seed);
        LayerParams::init(in_dim, out_dim, label_dim, &AdamConfig::default(), &mut rng)
    }

    #[test]
    fn forward_sum_hand_case() {
        // x = [1, 2], w_in = I2, b = [0.5, 0.5]  =>  s = [1.5, 2.5]
        let mut p = random_layer(2, 2, None, 1);
        p.w_in = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        p.b = Matrix::from_vec(1, 2, vec![0.5, 0.5]).unwrap();
        let x = Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let s = forward_sum(&p, &x).unwrap();
        assert_eq!(s.data(), &[1.5, 2.5]);
    }

    #[test]
    fn forward_sum_zero_case() {
        let mut p = random_layer(3, 4, None, 2);
        p.b = Matrix::zeros(1, 4);
        let x = Matrix::zeros(2, 3);
        let s = forward_sum(&p, &x).unwrap();
        assert!(s.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_sum_matches_broadcast_oracle() {
        let mut rng = Rng::seed_from_u64(3);
        let p = random_layer(6, 5, None, 3);
        let x = Matrix::from_fn(4, 6, |_, _| rng.uniform_in(-1.0, 1.0));
        let s = forward_sum(&p, &x).unwrap();
        for i in 0..4 {
            for j in 0..5 {
                let mut acc = 0.0;
                for k in 0..6 {
                    acc += x.get(i, k) * p.w_in.get(j, k);
                }
                acc += p.b.get(0, j);
                assert!((s.get(i, j) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn activation_zeroes_negatives_and_ignores_labels() {
        let s = Matrix::from_vec(2, 3, vec![-1.0, 2.0, 0.0, 3.0, -0.5, 1.0]).unwrap();
        let a = forward_activation(&s);
        assert_eq!(a.data(), &[0.0, 2.0, 0.0, 3.0, 0.0, 1.0]);
    }

    #[test]
    fn label_goodness_reduces_to_plain_when_w_label_is_zero() {
        let mut p = random_layer(4, 3, Some(5), 4);
        p.w_label = Some(Matrix::zeros(3, 5));
        let mut rng = Rng::seed_from_u64(40);
        let x = Matrix::from_fn(2, 4, |_, _| rng.uniform_in(-1.0, 1.0));
        let s = forward_sum(&p, &x).unwrap();
        let onehot = Matrix::from_vec(2, 5, {
            let mut v = vec![0.0; 10];
            v[1] = 1.0;
            v[5 + 3] = 1.0;
            v
        })
        .unwrap();
        let cfg = cfg64(2.0);
        let with_label = goodness_with_label(&p, &s, &onehot, &cfg).unwrap();
        let plain = goodness_plain(&s.relu(), &cfg);
        for i in 0..2 {
            assert!((with_label.values[i] - plain.values[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn relu_kills_all_negative_label_columns() {
        // s = 0 and the selected w_label column is all -1  =>  h = 0
        let mut p = random_layer(4, 3, Some(2), 5);
        p.w_label = Some(Matrix::from_vec(3, 2, vec![-1.0, 0.3, -1.0, 0.3, -1.0, 0.3]).unwrap());
        let s = Matrix::zeros(1, 3);
        let onehot = Matrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        let g = goodness_with_label(&p, &s, &onehot, &cfg64(2.0)).unwrap();
        assert_eq!(g.values[0], 0.0);
    }

    #[test]
    fn label_goodness_matches_scalar_loop_oracle() {
        let p = random_layer(5, 4, Some(3), 6);
        let mut rng = Rng::seed_from_u64(60);
        let x = Matrix::from_fn(3, 5, |_, _| rng.uniform_in(-1.0, 1.0));
        let s = forward_sum(&p, &x).unwrap();
        let classes = [0usize, 2, 1];
        let onehot = Matrix::from_fn(3, 3, |r, c| if classes[r] == c { 1.0 } else { 0.0 });
        let cfg = cfg64(1.5);
        let g = goodness_with_label(&p, &s, &onehot, &cfg).unwrap();

        let w_label = p.w_label.as_ref().unwrap();
        for i in 0..3 {
            let mut value = 0.0;
            for j in 0..4 {
                let mut pre = s.get(i, j);
                for k in 0..3 {
                    pre += onehot.get(i, k) * w_label.get(j, k);
                }
                let h = pre.max(0.0);
                value += h * h;
            }
            assert!((g.values[i] - value).abs() < 1e-10);
            assert!((g.logits[i] - (value - 1.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn goodness_zero_activations_and_threshold_point() {
        let cfg = cfg64(2.0);
        let g = goodness_plain(&Matrix::<f64>::zeros(1, 8), &cfg);
        assert_eq!(g.values[0], 0.0);
        assert!((g.probabilities()[0] - 0.11920292202211755).abs() < 1e-12);

        // value == theta  =>  probability exactly 0.5
        let ones = Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let g = goodness_plain(&ones, &cfg);
        assert_eq!(g.values[0], 2.0);
        assert_eq!(g.probabilities()[0], 0.5);
    }

    #[test]
    fn goodness_counts_ones() {
        let k = 7;
        let a = Matrix::from_vec(1, k, vec![1.0; k]).unwrap();
        let g = goodness_plain(&a, &cfg64(0.0));
        assert_eq!(g.values[0], k as f64);
    }

    #[test]
    fn pair_loss_symmetry_point() {
        let g = Goodness {
            values: vec![2.0],
            logits: vec![0.0],
        };
        let loss = pair_loss(&g, &g);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn pair_loss_perfect_separation() {
        let pos = Goodness {
            values: vec![52.0],
            logits: vec![50.0],
        };
        let neg = Goodness {
            values: vec![0.0],
            logits: vec![-50.0],
        };
        assert!(pair_loss(&pos, &neg) < 1e-9);
    }

    #[test]
    fn pair_loss_reference_value() {
        // logit_pos = 0, logit_neg = 2  =>  (ln 2 + ln(1 + e^2)) / 2
        let pos = Goodness {
            values: vec![2.0],
            logits: vec![0.0],
        };
        let neg = Goodness {
            values: vec![4.0],
            logits: vec![2.0],
        };
        let expect = 0.5 * (std::f64::consts::LN_2 + (1.0 + 2.0f64.exp()).ln());
        assert!((expect - 1.410037595801459).abs() < 1e-12);
        assert!((pair_loss(&pos, &neg) - expect).abs() < 1e-12);
    }

    #[test]
    fn dead_units_give_zero_gradients() {
        // all-zero inputs and bias: every pre-activation sits at relu's flat
        // side, so nothing moves.
        let mut p = random_layer(3, 4, Some(2), 7);
        p.b = Matrix::zeros(1, 4);
        p.w_label = Some(Matrix::from_fn(4, 2, |r, c| -1.0 - (r + c) as f64));
        let x = Matrix::zeros(2, 3);
        let lp = Matrix::from_vec(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let ln = Matrix::from_vec(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let (_, _, grads) = layer_gradients(
            &p,
            &LayerInputs::Labeled {
                x: &x,
                label_pos: &lp,
                label_neg: &ln,
                feedback: None,
            },
            &cfg64(2.0),
        )
        .unwrap();
        assert!(grads.w_in.data().iter().all(|&v| v == 0.0));
        assert!(grads.b.data().iter().all(|&v| v == 0.0));
        assert!(grads.w_label.unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn undrawn_class_has_zero_label_gradient() {
        let p = random_layer(3, 4, Some(5), 8);
        let mut rng = Rng::seed_from_u64(80);
        let x = Matrix::from_fn(2, 3, |_, _| rng.uniform_in(0.0, 1.0));
        // classes drawn: {0, 1} positive, {2, 3} negative; class 4 never appears
        let lp = Matrix::from_fn(2, 5, |r, c| if c == r { 1.0 } else { 0.0 });
        let ln = Matrix::from_fn(2, 5, |r, c| if c == r + 2 { 1.0 } else { 0.0 });
        let (_, _, grads) = layer_gradients(
            &p,
            &LayerInputs::Labeled {
                x: &x,
                label_pos: &lp,
                label_neg: &ln,
                feedback: None,
            },
            &cfg64(2.0),
        )
        .unwrap();
        let gl = grads.w_label.unwrap();
        for j in 0..4 {
            assert_eq!(gl.get(j, 4), 0.0, "row {j}");
        }
    }

    #[test]
    fn missing_label_weights_is_variant_misuse() {
        let p = random_layer(3, 4, None, 9);
        let s = Matrix::zeros(1, 4);
        let onehot = Matrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        let err = goodness_with_label(&p, &s, &onehot, &cfg64(2.0)).unwrap_err();
        assert!(matches!(err, Error::VariantMisuse(_)));
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut p = random_layer(3, 4, Some(2), 10);
        let before = p.clone();
        let grads = LayerGrads {
            w_in: Matrix::zeros(4, 3),
            b: Matrix::zeros(1, 4),
            w_label: Some(Matrix::zeros(4, 2)),
            w_fb: None,
        };
        update(&mut p, &grads).unwrap();
        assert!(p.bit_eq(&before));
    }

    #[test]
    fn one_small_step_decreases_loss() {
        // 20 random non-degenerate layers; a tiny-lr step must reduce the
        // pair loss on the same batch every time.
        for seed in 0..20u64 {
            let mut rng = Rng::seed_from_u64(1000 + seed);
            let opt = AdamConfig {
                lr: 1e-3,
                ..AdamConfig::default()
            };
            let mut p = LayerParams::init(6, 5, Some(4), &opt, &mut rng);
            let x = Matrix::from_fn(3, 6, |_, _| rng.uniform_in(0.0, 1.0));
            let classes: Vec<usize> = (0..3).map(|_| rng.below(4)).collect();
            let negs: Vec<usize> = classes.iter().map(|&c| rng.choose_excluding(4, c)).collect();
            let lp = Matrix::from_fn(3, 4, |r, c| if classes[r] == c { 1.0 } else { 0.0 });
            let ln = Matrix::from_fn(3, 4, |r, c| if negs[r] == c { 1.0 } else { 0.0 });
            let inputs = LayerInputs::Labeled {
                x: &x,
                label_pos: &lp,
                label_neg: &ln,
                feedback: None,
            };
            let cfg = cfg64(2.0);
            let (loss_before, _, grads) = layer_gradients(&p, &inputs, &cfg).unwrap();
            update(&mut p, &grads).unwrap();
            let loss_after = layer_loss(&p, &inputs, &cfg).unwrap();
            assert!(
                loss_after < loss_before,
                "seed {seed}: {loss_before} -> {loss_after}"
            );
        }
    }

    #[test]
    fn same_seed_gives_bitwise_identical_updates() {
        let run = || {
            let mut rng = Rng::seed_from_u64(123);
            let mut p = LayerParams::init(5, 4, Some(3), &AdamConfig::default(), &mut rng);
            let x = Matrix::from_fn(4, 5, |_, _| rng.uniform_in(0.0, 1.0));
            let lp = Matrix::from_fn(4, 3, |r, c| if r % 3 == c { 1.0 } else { 0.0 });
            let ln = Matrix::from_fn(4, 3, |r, c| if (r + 1) % 3 == c { 1.0 } else { 0.0 });
            for _ in 0..5 {
                let (_, _, grads) = layer_gradients(
                    &p,
                    &LayerInputs::Labeled {
                        x: &x,
                        label_pos: &lp,
                        label_neg: &ln,
                        feedback: None,
                    },
                    &cfg64(2.0),
                )
                .unwrap();
                update(&mut p, &grads).unwrap();
            }
            p
        };
        assert!(run().bit_eq(&run()));
    }
}
