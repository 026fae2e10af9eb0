//! The three inference procedures and dataset evaluation.
//!
//! The baseline variant re-runs the network once per candidate class; the
//! label-fed variants compute each layer exactly once and sweep the classes
//! through the label weights, which is the whole point of the exercise.

use super::config::Variant;
use super::network::{argmax_row, Prediction, TrainedNetwork};
use crate::data::{embed_label_border_batch, Dataset};
use crate::error::{Error, Result};
use crate::layer::{forward_sum, goodness_plain, GoodnessCfg};
use crate::num::{Matrix, Scalar};

/// Per-layer and whole-model accuracy over a dataset.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub per_layer_accuracy: Vec<f64>,
    pub model_accuracy: f64,
}

fn gcfg<S: Scalar>(net: &TrainedNetwork<S>) -> GoodnessCfg<S> {
    GoodnessCfg::new(net.config.theta, net.config.reducer)
}

/// Per-layer goodness for a batch under the baseline scheme: for every
/// class, embed its one-hot into the image border and run all layers.
/// Returns one `batch x classes` matrix per layer plus the per-sample count
/// of layer forward passes.
fn goodness_batch_ffl<S: Scalar>(
    net: &TrainedNetwork<S>,
    images: &Matrix<S>,
) -> Result<(Vec<Matrix<S>>, usize)> {
    let classes = net.config.classes;
    let layers = net.num_layers();
    let cfg = gcfg(net);
    let mut per_layer = vec![Matrix::zeros(images.rows(), classes); layers];
    let mut passes = 0usize;
    for class in 0..classes {
        let embedded =
            embed_label_border_batch(images, &vec![class; images.rows()], classes)?;
        let mut a = embedded;
        for (layer, goodness) in net.layers.iter().zip(per_layer.iter_mut()) {
            let s = forward_sum(layer, &a)?;
            passes += 1;
            let raw = s.relu();
            let g = goodness_plain(&raw, &cfg);
            for (i, &v) in g.values.iter().enumerate() {
                goodness.set(i, class, v);
            }
            a = if net.config.normalize {
                raw.l2_normalize_rows(S::from_f64_lossy(super::network::NORM_EPS))
            } else {
                raw
            };
        }
    }
    Ok((per_layer, passes / images.rows().max(1)))
}

/// Per-layer goodness under direct label feed: each layer's `s` and `a` are
/// computed once; every class is then scored through the label weights.
fn goodness_batch_ffdl<S: Scalar>(
    net: &TrainedNetwork<S>,
    images: &Matrix<S>,
) -> Result<(Vec<Matrix<S>>, usize)> {
    let layers = net.num_layers();
    let cfg = gcfg(net);
    let mut per_layer = Vec::with_capacity(layers);
    let mut a = images.clone();
    let mut passes = 0usize;
    for l in 0..layers {
        let s = forward_sum(&net.layers[l], &a)?;
        passes += 1;
        per_layer.push(label_sweep(net, l, &s, &cfg)?);
        a = net.propagate_activation(&s);
    }
    Ok((per_layer, passes))
}

/// Per-layer goodness for the unrolled grid: activations for all instances,
/// goodness read from the final instance's layers only.
fn goodness_batch_ffcl<S: Scalar>(
    net: &TrainedNetwork<S>,
    images: &Matrix<S>,
) -> Result<(Vec<Matrix<S>>, usize)> {
    let layers = net.num_layers();
    let cfg = gcfg(net);
    let last = net.config.unroll - 1;
    let grid = net.forward_grid(images, last, layers)?;
    let mut per_layer = Vec::with_capacity(layers);
    for l in 0..layers {
        per_layer.push(label_sweep(net, l, &grid.s[last][l], &cfg)?);
    }
    Ok((per_layer, net.config.unroll * layers))
}

/// Scores every class against one layer's pre-activation.
fn label_sweep<S: Scalar>(
    net: &TrainedNetwork<S>,
    l: usize,
    s: &Matrix<S>,
    cfg: &GoodnessCfg<S>,
) -> Result<Matrix<S>> {
    let classes = net.config.classes;
    let mut out = Matrix::zeros(s.rows(), classes);
    for class in 0..classes {
        let mut onehot = Matrix::zeros(1, classes);
        onehot.set(0, class, S::one());
        // one-hot broadcast: every row uses the same label row
        let w_label = net.layers[l].w_label.as_ref().ok_or_else(|| {
            Error::VariantMisuse("label-fed inference on a layer without label weights".into())
        })?;
        let shift = onehot.matmul_nt(w_label)?; // 1 x out_dim
        let h = s.add_row_broadcast(&shift)?.relu();
        let g = goodness_plain(&h, cfg);
        for (i, &v) in g.values.iter().enumerate() {
            out.set(i, class, v);
        }
    }
    Ok(out)
}

fn goodness_batch<S: Scalar>(
    net: &TrainedNetwork<S>,
    images: &Matrix<S>,
) -> Result<(Vec<Matrix<S>>, usize)> {
    match net.config.variant {
        Variant::Ffl => goodness_batch_ffl(net, images),
        Variant::Ffdl => goodness_batch_ffdl(net, images),
        Variant::Ffcl => goodness_batch_ffcl(net, images),
    }
}

fn predict_single<S: Scalar>(net: &TrainedNetwork<S>, image: &[S]) -> Result<Prediction<S>> {
    if image.len() != net.config.input_dim() {
        return Err(Error::InvalidConfig(format!(
            "image has {} pixels, network expects {}",
            image.len(),
            net.config.input_dim()
        )));
    }
    let x = Matrix::from_row(image);
    let (per_layer, passes) = goodness_batch(net, &x)?;
    let goodness = Matrix::from_fn(per_layer.len(), net.config.classes, |l, c| {
        per_layer[l].get(0, c)
    });
    Ok(Prediction::from_goodness(goodness, passes))
}

/// Baseline inference: `classes x layers` forward passes.
pub fn infer_ffl<S: Scalar>(net: &TrainedNetwork<S>, image: &[S]) -> Result<Prediction<S>> {
    expect(net, Variant::Ffl)?;
    predict_single(net, image)
}

/// Label-fed inference: one forward pass per layer regardless of the class
/// count.
pub fn infer_ffdl<S: Scalar>(net: &TrainedNetwork<S>, image: &[S]) -> Result<Prediction<S>> {
    expect(net, Variant::Ffdl)?;
    predict_single(net, image)
}

/// Unrolled inference: `unroll x layers` forward passes, votes from the
/// final instance.
pub fn infer_ffcl<S: Scalar>(net: &TrainedNetwork<S>, image: &[S]) -> Result<Prediction<S>> {
    expect(net, Variant::Ffcl)?;
    predict_single(net, image)
}

/// Variant-dispatched single-image inference.
pub fn infer<S: Scalar>(net: &TrainedNetwork<S>, image: &[S]) -> Result<Prediction<S>> {
    predict_single(net, image)
}

fn expect<S: Scalar>(net: &TrainedNetwork<S>, want: Variant) -> Result<()> {
    if net.config.variant != want {
        return Err(Error::VariantMisuse(format!(
            "network is {}, expected {}",
            net.config.variant, want
        )));
    }
    Ok(())
}

const EVAL_CHUNK: usize = 512;

/// Fraction of samples each layer's vote — and the summed model vote —
/// classifies correctly.
pub fn evaluate<S: Scalar>(net: &TrainedNetwork<S>, data: &Dataset<S>) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    data.validate()?;
    if data.input_dim() != net.config.input_dim() {
        return Err(Error::InvalidConfig(format!(
            "dataset rows are {}-wide but the network expects {}",
            data.input_dim(),
            net.config.input_dim()
        )));
    }
    let layers = net.num_layers();
    let mut layer_hits = vec![0usize; layers];
    let mut model_hits = 0usize;
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(EVAL_CHUNK) {
        let images = data.images.gather_rows(chunk);
        let (per_layer, _) = goodness_batch(net, &images)?;
        for (row, &sample) in chunk.iter().enumerate() {
            let truth = data.labels[sample];
            let mut summed = vec![S::zero(); net.config.classes];
            for (l, g) in per_layer.iter().enumerate() {
                let grow = g.row(row);
                if argmax_row(grow) == truth {
                    layer_hits[l] += 1;
                }
                for (acc, &v) in summed.iter_mut().zip(grow) {
                    *acc += v;
                }
            }
            if argmax_row(&summed) == truth {
                model_hits += 1;
            }
        }
    }
    let n = data.len() as f64;
    Ok(Evaluation {
        per_layer_accuracy: layer_hits.iter().map(|&h| h as f64 / n).collect(),
        model_accuracy: model_hits as f64 / n,
    })
}
