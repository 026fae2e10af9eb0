//! Instrumented inference: a deliberately plain scalar-loop implementation,
//! independent of the gemm-backed fast path, that bumps a counter for every
//! multiply-accumulate, add and activation it executes.
//!
//! Two jobs: validating the analytic cost model op-for-op, and serving as a
//! straight-line numeric oracle for the fast inference paths.
//!
//! The label sweep is tallied at every unrolled instance (the per-layer
//! accounting prices each instance as a full label-fed layer), while the
//! returned prediction votes with the final instance only, exactly like the
//! production path. Dense one-hot label products are executed dense, since
//! that is what the convention prices. Feedback matmuls land in their own
//! bucket and stay out of the per-layer figure unless requested.

// plain index loops are the point of this module
#![allow(clippy::needless_range_loop)]

use super::{CostOptions, CostReport, LayerCost};
use crate::data::embed_label_border;
use crate::error::{Error, Result};
use crate::net::{Prediction, TrainedNetwork, Variant, NORM_EPS};
use crate::num::{Matrix, Scalar};

#[derive(Clone, Copy, Default)]
struct LayerOps {
    mac_ff: u64,
    add_bias: u64,
    act: u64,
    mac_label: u64,
    add_label_bias: u64,
    mac_fb: u64,
}

impl LayerOps {
    fn conventional(&self, include_feedback: bool) -> u64 {
        let base = self.mac_ff + self.add_bias + self.act + self.mac_label + self.add_label_bias;
        if include_feedback {
            base + self.mac_fb
        } else {
            base
        }
    }
}

fn dot_counted<S: Scalar>(w: &[S], x: &[S], counter: &mut u64) -> S {
    debug_assert_eq!(w.len(), x.len());
    let mut acc = S::zero();
    for i in 0..w.len() {
        acc += w[i] * x[i];
        *counter += 1;
    }
    acc
}

/// `s = W x + b` with per-op counting; returns the pre-activation vector.
fn layer_sum_counted<S: Scalar>(
    net: &TrainedNetwork<S>,
    l: usize,
    x: &[S],
    fb: Option<(&Matrix<S>, &[S])>,
    ops: &mut LayerOps,
) -> Vec<S> {
    let p = &net.layers[l];
    let out_dim = p.out_dim();
    let mut s = Vec::with_capacity(out_dim);
    for j in 0..out_dim {
        let mut v = dot_counted(p.w_in.row(j), x, &mut ops.mac_ff);
        if let Some((w_fb, f)) = fb {
            v += dot_counted(w_fb.row(j), f, &mut ops.mac_fb);
        }
        v += p.b.get(0, j);
        ops.add_bias += 1;
        s.push(v);
    }
    s
}

/// relu with per-evaluation counting; this is the propagation activation the
/// convention prices at one op per neuron.
fn relu_counted<S: Scalar>(s: &[S], ops: &mut LayerOps) -> Vec<S> {
    s.iter()
        .map(|&v| {
            ops.act += 1;
            v.max(S::zero())
        })
        .collect()
}

fn normalize_row<S: Scalar>(a: &[S]) -> Vec<S> {
    let mut sq = S::zero();
    for &v in a {
        sq += v * v;
    }
    let denom = sq.sqrt().max(S::from_f64_lossy(NORM_EPS));
    a.iter().map(|&v| v / denom).collect()
}

fn reduce_goodness<S: Scalar>(h: &[S], net: &TrainedNetwork<S>) -> S {
    let mut acc = S::zero();
    for &v in h {
        acc += v * v;
    }
    match net.config.reducer {
        crate::layer::GoodnessReducer::Sum => acc,
        crate::layer::GoodnessReducer::Mean => acc / S::from_f64_lossy(h.len().max(1) as f64),
    }
}

/// Sweeps all classes through the label weights of layer `l` against the
/// pre-activation `s`; the goodness relu and squared reduction are uncounted
/// by convention.
fn label_sweep_counted<S: Scalar>(
    net: &TrainedNetwork<S>,
    l: usize,
    s: &[S],
    ops: &mut LayerOps,
) -> Result<Vec<S>> {
    let classes = net.config.classes;
    let w_label = net.layers[l].w_label.as_ref().ok_or_else(|| {
        Error::VariantMisuse("label-fed counting on a layer without label weights".into())
    })?;
    let mut onehot = vec![S::zero(); classes];
    let mut out = Vec::with_capacity(classes);
    for class in 0..classes {
        onehot[class] = S::one();
        let mut h = Vec::with_capacity(s.len());
        for j in 0..s.len() {
            let mut pre = dot_counted(w_label.row(j), &onehot, &mut ops.mac_label);
            pre += s[j]; // the pre-activation enters as the bias
            ops.add_label_bias += 1;
            h.push(pre.max(S::zero()));
        }
        out.push(reduce_goodness(&h, net));
        onehot[class] = S::zero();
    }
    Ok(out)
}

fn count_ffl<S: Scalar>(
    net: &TrainedNetwork<S>,
    image: &[S],
    ops: &mut [LayerOps],
) -> Result<Matrix<S>> {
    let classes = net.config.classes;
    let layers = net.num_layers();
    let mut goodness = Matrix::zeros(layers, classes);
    for class in 0..classes {
        let embedded = embed_label_border(image, class, classes)?;
        let mut a = embedded;
        for l in 0..layers {
            let s = layer_sum_counted(net, l, &a, None, &mut ops[l]);
            let raw = relu_counted(&s, &mut ops[l]);
            goodness.set(l, class, reduce_goodness(&raw, net));
            a = if net.config.normalize {
                normalize_row(&raw)
            } else {
                raw
            };
        }
    }
    Ok(goodness)
}

fn count_ffdl<S: Scalar>(
    net: &TrainedNetwork<S>,
    image: &[S],
    ops: &mut [LayerOps],
) -> Result<Matrix<S>> {
    let classes = net.config.classes;
    let layers = net.num_layers();
    let mut goodness = Matrix::zeros(layers, classes);
    let mut a = image.to_vec();
    for l in 0..layers {
        let s = layer_sum_counted(net, l, &a, None, &mut ops[l]);
        for (c, g) in label_sweep_counted(net, l, &s, &mut ops[l])?
            .into_iter()
            .enumerate()
        {
            goodness.set(l, c, g);
        }
        let raw = relu_counted(&s, &mut ops[l]);
        a = if net.config.normalize {
            normalize_row(&raw)
        } else {
            raw
        };
    }
    Ok(goodness)
}

fn count_ffcl<S: Scalar>(
    net: &TrainedNetwork<S>,
    image: &[S],
    ops: &mut [LayerOps],
) -> Result<Matrix<S>> {
    let classes = net.config.classes;
    let layers = net.num_layers();
    let unroll = net.config.unroll;
    let mut goodness = Matrix::zeros(layers, classes);
    // activations per instance, in propagation (normalized) form
    let mut acts: Vec<Vec<Vec<S>>> = Vec::with_capacity(unroll);
    for n in 0..unroll {
        let mut row: Vec<Vec<S>> = Vec::with_capacity(layers);
        for l in 0..layers {
            let input: &[S] = if l == 0 { image } else { &row[l - 1] };
            let fb = net
                .feedback
                .get(&(n, l))
                .map(|p| (&p.w_fb, acts[n - 1][l + 1].as_slice()));
            let s = layer_sum_counted(net, l, input, fb, &mut ops[l]);
            let sweep = label_sweep_counted(net, l, &s, &mut ops[l])?;
            if n == unroll - 1 {
                for (c, g) in sweep.into_iter().enumerate() {
                    goodness.set(l, c, g);
                }
            }
            let raw = relu_counted(&s, &mut ops[l]);
            row.push(if net.config.normalize {
                normalize_row(&raw)
            } else {
                raw
            });
        }
        acts.push(row);
    }
    Ok(goodness)
}

/// Runs inference through the counting path; returns the prediction and the
/// observed per-layer cost under the stated convention.
pub fn infer_counting<S: Scalar>(
    net: &TrainedNetwork<S>,
    image: &[S],
) -> Result<(Prediction<S>, CostReport)> {
    infer_counting_with(net, image, CostOptions::default())
}

pub fn infer_counting_with<S: Scalar>(
    net: &TrainedNetwork<S>,
    image: &[S],
    opts: CostOptions,
) -> Result<(Prediction<S>, CostReport)> {
    if image.len() != net.config.input_dim() {
        return Err(Error::InvalidConfig(format!(
            "image has {} pixels, network expects {}",
            image.len(),
            net.config.input_dim()
        )));
    }
    let layers = net.num_layers();
    let mut ops = vec![LayerOps::default(); layers];
    let goodness = match net.config.variant {
        Variant::Ffl => count_ffl(net, image, &mut ops)?,
        Variant::Ffdl => count_ffdl(net, image, &mut ops)?,
        Variant::Ffcl => count_ffcl(net, image, &mut ops)?,
    };
    let passes = match net.config.variant {
        Variant::Ffl => net.config.classes * layers,
        Variant::Ffdl => layers,
        Variant::Ffcl => net.config.unroll * layers,
    };
    let per_layer: Vec<LayerCost> = ops
        .iter()
        .enumerate()
        .map(|(layer, o)| LayerCost {
            layer,
            flops: o.conventional(opts.include_feedback),
        })
        .collect();
    let total = per_layer.iter().map(|lc| lc.flops).sum();
    let report = CostReport {
        variant: net.config.variant,
        m_list: (0..layers).map(|l| net.config.in_dim(l) as u64).collect(),
        n_list: (0..layers).map(|l| net.config.out_dim(l) as u64).collect(),
        classes: net.config.classes as u64,
        unroll: if net.config.variant == Variant::Ffcl {
            net.config.unroll as u64
        } else {
            1
        },
        per_layer,
        total,
        table_compat: false,
        include_feedback: opts.include_feedback,
    };
    Ok((Prediction::from_goodness(goodness, passes), report))
}

/// Observed per-layer FLOP counts of one inference.
pub fn instrumented_count<S: Scalar>(net: &TrainedNetwork<S>, image: &[S]) -> Result<CostReport> {
    Ok(infer_counting(net, image)?.1)
}
