//! Analytic layer gradients against central finite differences, across
//! plain, label-fed and feedback-fed layers.

use ffcl_core::{
    finite_diff_grad, layer_gradients, layer_loss, AdamConfig, AdamState, GoodnessCfg,
    GoodnessReducer, LayerInputs, LayerParams, Matrix, Rng,
};

const H: f64 = 1e-4;
const REL_TOL: f64 = 1e-4;
/// Entries where both gradients are this small are compared absolutely;
/// relative error on pure rounding noise is meaningless.
const TINY: f64 = 1e-6;

fn check_close(analytic: &Matrix<f64>, numeric: &Matrix<f64>, what: &str, instance: u64) {
    assert_eq!(analytic.shape(), numeric.shape());
    for i in 0..analytic.data().len() {
        let a = analytic.data()[i];
        let n = numeric.data()[i];
        let denom = a.abs().max(n.abs());
        if denom < TINY {
            assert!(
                (a - n).abs() < 1e-7,
                "instance {instance} {what}[{i}]: {a} vs {n}"
            );
        } else {
            let rel = (a - n).abs() / denom;
            assert!(
                rel < REL_TOL,
                "instance {instance} {what}[{i}]: {a} vs {n} (rel {rel})"
            );
        }
    }
}

struct Instance {
    params: LayerParams<f64>,
    x: Matrix<f64>,
    x_neg: Matrix<f64>,
    label_pos: Matrix<f64>,
    label_neg: Matrix<f64>,
    fb: Option<Matrix<f64>>,
    kind: Kind,
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Plain,
    Labeled,
    Feedback,
}

fn one_hot(rows: usize, classes: usize, pick: impl Fn(usize) -> usize) -> Matrix<f64> {
    Matrix::from_fn(rows, classes, |r, c| if pick(r) == c { 1.0 } else { 0.0 })
}

fn build_instance(seed: u64, kind: Kind) -> Instance {
    let mut rng = Rng::seed_from_u64(seed);
    let in_dim = 2 + rng.below(7); // 2..=8
    let out_dim = 2 + rng.below(7);
    let classes = 2 + rng.below(3); // 2..=4
    let batch = 1 + rng.below(4); // 1..=4
    let label_dim = (kind != Kind::Plain).then_some(classes);
    let mut params = LayerParams::init(in_dim, out_dim, label_dim, &AdamConfig::default(), &mut rng);
    // richer parameter scale than the init default, so activations are live
    params.w_in = Matrix::from_fn(out_dim, in_dim, |_, _| rng.uniform_in(-1.0, 1.0));
    params.b = Matrix::from_fn(1, out_dim, |_, _| rng.uniform_in(-0.5, 0.5));
    if let Some(w) = params.w_label.as_mut() {
        *w = Matrix::from_fn(out_dim, classes, |_, _| rng.uniform_in(-1.0, 1.0));
    }
    let fb = if kind == Kind::Feedback {
        let fb_dim = 2 + rng.below(7);
        let w_fb = Matrix::from_fn(out_dim, fb_dim, |_, _| rng.uniform_in(-1.0, 1.0));
        params.attach_feedback(
            w_fb,
            AdamState::new(out_dim, fb_dim, &AdamConfig::default()),
        );
        Some(Matrix::from_fn(batch, fb_dim, |_, _| rng.uniform_in(0.0, 1.0)))
    } else {
        None
    };
    let x = Matrix::from_fn(batch, in_dim, |_, _| rng.uniform_in(0.0, 1.0));
    let x_neg = Matrix::from_fn(batch, in_dim, |_, _| rng.uniform_in(0.0, 1.0));
    let pos_classes: Vec<usize> = (0..batch).map(|_| rng.below(classes)).collect();
    let neg_classes: Vec<usize> = pos_classes
        .iter()
        .map(|&c| rng.choose_excluding(classes, c))
        .collect();
    Instance {
        label_pos: one_hot(batch, classes, |r| pos_classes[r]),
        label_neg: one_hot(batch, classes, |r| neg_classes[r]),
        params,
        x,
        x_neg,
        fb,
        kind,
    }
}

/// Central differences assume the loss is smooth inside the probe interval;
/// an instance with any pre-activation within `10 * H` of relu's kink gets
/// resampled.
fn min_abs_preactivation(inst: &Instance, cfg: &GoodnessCfg<f64>) -> f64 {
    let _ = cfg;
    let pre_of = |x: &Matrix<f64>, label: Option<&Matrix<f64>>| -> f64 {
        let s = ffcl_core::forward_sum_fb(&inst.params, x, inst.fb.as_ref()).unwrap();
        let pre = match label {
            Some(l) => {
                let shift = l.matmul_nt(inst.params.w_label.as_ref().unwrap()).unwrap();
                s.add(&shift).unwrap()
            }
            None => s,
        };
        pre.data().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    };
    match inst.kind {
        Kind::Plain => {
            let a = pre_of(&inst.x, None);
            let b = pre_of(&inst.x_neg, None);
            a.min(b)
        }
        _ => {
            let a = pre_of(&inst.x, Some(&inst.label_pos));
            let b = pre_of(&inst.x, Some(&inst.label_neg));
            a.min(b)
        }
    }
}

fn run_instance(inst: &Instance, cfg: &GoodnessCfg<f64>, id: u64) {
    let inputs = match inst.kind {
        Kind::Plain => LayerInputs::Plain {
            x_pos: &inst.x,
            x_neg: &inst.x_neg,
        },
        _ => LayerInputs::Labeled {
            x: &inst.x,
            label_pos: &inst.label_pos,
            label_neg: &inst.label_neg,
            feedback: inst.fb.as_ref(),
        },
    };
    let (_, _, grads) = layer_gradients(&inst.params, &inputs, cfg).unwrap();

    let loss_with = |mutate: &dyn Fn(&mut LayerParams<f64>, Matrix<f64>), probe: &Matrix<f64>| {
        let mut p = inst.params.clone();
        mutate(&mut p, probe.clone());
        layer_loss(&p, &inputs, cfg).unwrap()
    };

    let fd_w_in = finite_diff_grad(
        |m| loss_with(&|p, m| p.w_in = m, m),
        &inst.params.w_in,
        H,
    );
    check_close(&grads.w_in, &fd_w_in, "w_in", id);

    let fd_b = finite_diff_grad(|m| loss_with(&|p, m| p.b = m, m), &inst.params.b, H);
    check_close(&grads.b, &fd_b, "b", id);

    if let Some(w_label) = &inst.params.w_label {
        let fd = finite_diff_grad(
            |m| loss_with(&|p, m| p.w_label = Some(m), m),
            w_label,
            H,
        );
        check_close(grads.w_label.as_ref().unwrap(), &fd, "w_label", id);
    }
    if let Some(w_fb) = &inst.params.w_fb {
        let fd = finite_diff_grad(
            |m| loss_with(&|p, m| p.w_fb = Some(m), m),
            w_fb,
            H,
        );
        check_close(grads.w_fb.as_ref().unwrap(), &fd, "w_fb", id);
    }
}

fn run_suite(reducer: GoodnessReducer, instances: usize, seed_base: u64) {
    let cfg = GoodnessCfg::new(1.0, reducer);
    let kinds = [Kind::Plain, Kind::Labeled, Kind::Feedback];
    let mut accepted = 0u64;
    let mut seed = seed_base;
    while accepted < instances as u64 {
        let kind = kinds[(accepted % 3) as usize];
        let inst = build_instance(seed, kind);
        seed += 1;
        if min_abs_preactivation(&inst, &cfg) < 10.0 * H {
            continue; // too close to the relu kink for central differences
        }
        run_instance(&inst, &cfg, seed);
        accepted += 1;
    }
}

#[test]
fn analytic_gradients_match_central_differences_sum_reducer() {
    run_suite(GoodnessReducer::Sum, 51, 10_000);
}

#[test]
fn analytic_gradients_match_central_differences_mean_reducer() {
    run_suite(GoodnessReducer::Mean, 18, 20_000);
}
