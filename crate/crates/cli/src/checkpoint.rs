//! Versioned binary checkpoints.
//!
//! Layout (all multi-byte integers and floats little-endian):
//!
//! ```text
//! magic "FFCL" | version u16 | endian_tag u8 (1 = LE) | flags u8
//! variant u8 | reducer u8 | normalize u8 | reserved u8
//! unroll u32 | classes u32 | theta f64
//! ndims u32 | layer_dims u32 x ndims
//! [optimizer lr/beta1/beta2/eps f64 x4, when flags bit0]
//! tensors as f32 payloads in declared order:
//!   per layer: w_in, b, w_label (label-fed variants only)
//!   then per feedback cell (instance-major): w_fb
//!   each tensor followed by adam m, v (f32) and t (u64) when flags bit0
//! sha256 digest of everything above (32 bytes)
//! ```
//!
//! Shared tensors are stored once; only the per-cell feedback tensors grow
//! with the unroll count. Scalars are stored as f32 regardless of the
//! runtime precision, so loading reproduces inference outputs within 1e-6.

use crate::error::{CliError, Result};
use ffcl_core::{
    AdamConfig, AdamState, FeedbackParam, GoodnessReducer, LayerParams, Matrix, NetworkConfig,
    Scalar, TrainedNetwork, Variant,
};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"FFCL";
pub const VERSION: u16 = 1;
const FLAG_OPTIMIZER: u8 = 0b0000_0001;
const ENDIAN_LE: u8 = 1;

fn variant_tag(v: Variant) -> u8 {
    match v {
        Variant::Ffl => 0,
        Variant::Ffdl => 1,
        Variant::Ffcl => 2,
    }
}

fn variant_from_tag(t: u8) -> Result<Variant> {
    match t {
        0 => Ok(Variant::Ffl),
        1 => Ok(Variant::Ffdl),
        2 => Ok(Variant::Ffcl),
        other => Err(CliError::Data(format!("unknown variant tag {other}"))),
    }
}

struct Writer {
    bytes: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.bytes.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    fn tensor<S: Scalar>(&mut self, m: &Matrix<S>) {
        for &v in m.data() {
            self.bytes.extend_from_slice(&v.to_f32_lossy().to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    off: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.off + n > self.bytes.len() {
            return Err(CliError::Data(format!(
                "truncated checkpoint: needed {} bytes, found {}",
                self.off + n,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.off..self.off + n];
        self.off += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn tensor<S: Scalar>(&mut self, rows: usize, cols: usize) -> Result<Matrix<S>> {
        let raw = self.take(rows * cols * 4)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| S::from_f32_lossy(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Matrix::from_vec(rows, cols, data).map_err(|e| CliError::Data(e.to_string()))
    }
}

/// Tensor declaration order shared by save and load.
fn feedback_cells(cfg: &NetworkConfig) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    if cfg.variant == Variant::Ffcl {
        for n in 1..cfg.unroll {
            for l in 0..cfg.num_layers() {
                if cfg.cell_has_feedback(n, l) {
                    cells.push((n, l));
                }
            }
        }
    }
    cells
}

pub fn save_checkpoint<S: Scalar>(
    net: &TrainedNetwork<S>,
    path: &Path,
    with_optimizer: bool,
) -> Result<()> {
    let cfg = &net.config;
    let mut w = Writer { bytes: Vec::new() };
    w.bytes.extend_from_slice(&MAGIC);
    w.u16(VERSION);
    w.u8(ENDIAN_LE);
    w.u8(if with_optimizer { FLAG_OPTIMIZER } else { 0 });
    w.u8(variant_tag(cfg.variant));
    w.u8(match cfg.reducer {
        GoodnessReducer::Sum => 0,
        GoodnessReducer::Mean => 1,
    });
    w.u8(cfg.normalize as u8);
    w.u8(0);
    w.u32(cfg.unroll as u32);
    w.u32(cfg.classes as u32);
    w.f64(cfg.theta);
    w.u32(cfg.layer_dims.len() as u32);
    for &d in &cfg.layer_dims {
        w.u32(d as u32);
    }
    if with_optimizer {
        w.f64(cfg.optimizer.lr);
        w.f64(cfg.optimizer.beta1);
        w.f64(cfg.optimizer.beta2);
        w.f64(cfg.optimizer.eps);
    }

    let emit = |w: &mut Writer, value: &Matrix<S>, adam: Option<&AdamState<S>>| {
        w.tensor(value);
        if let Some(st) = adam {
            w.tensor(st.m());
            w.tensor(st.v());
            w.u64(st.t());
        }
    };
    for p in &net.layers {
        emit(&mut w, &p.w_in, with_optimizer.then_some(&p.adam_w_in));
        emit(&mut w, &p.b, with_optimizer.then_some(&p.adam_b));
        if cfg.variant.uses_label_weights() {
            let wl = p.w_label.as_ref().ok_or_else(|| {
                CliError::Other("label-fed network missing label weights".into())
            })?;
            emit(&mut w, wl, with_optimizer.then(|| p.adam_w_label.as_ref().unwrap()));
        }
    }
    for cell in feedback_cells(cfg) {
        let fb = net.feedback.get(&cell).ok_or_else(|| {
            CliError::Other(format!("network missing feedback tensor {cell:?}"))
        })?;
        emit(&mut w, &fb.w_fb, with_optimizer.then_some(&fb.adam));
    }

    let digest = Sha256::digest(&w.bytes);
    w.bytes.extend_from_slice(&digest);
    std::fs::write(path, &w.bytes)
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<TrainedNetwork<S>> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    if bytes.len() < MAGIC.len() + 2 + 32 {
        return Err(CliError::Data(format!(
            "truncated checkpoint {} ({} bytes)",
            path.display(),
            bytes.len()
        )));
    }
    let (payload, digest) = bytes.split_at(bytes.len() - 32);
    if payload[..4] != MAGIC {
        return Err(CliError::Data(format!(
            "bad checkpoint magic in {}",
            path.display()
        )));
    }
    let expected = Sha256::digest(payload);
    if digest != expected.as_slice() {
        return Err(CliError::Data(format!(
            "checkpoint checksum mismatch in {}",
            path.display()
        )));
    }

    let mut r = Reader {
        bytes: payload,
        off: 4,
    };
    let version = r.u16()?;
    if version != VERSION {
        return Err(CliError::Data(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }
    let endian = r.u8()?;
    if endian != ENDIAN_LE {
        return Err(CliError::Data(format!("unsupported endianness tag {endian}")));
    }
    let flags = r.u8()?;
    let with_optimizer = flags & FLAG_OPTIMIZER != 0;
    let variant = variant_from_tag(r.u8()?)?;
    let reducer = match r.u8()? {
        0 => GoodnessReducer::Sum,
        1 => GoodnessReducer::Mean,
        other => return Err(CliError::Data(format!("unknown reducer tag {other}"))),
    };
    let normalize = r.u8()? != 0;
    let _reserved = r.u8()?;
    let unroll = r.u32()? as usize;
    let classes = r.u32()? as usize;
    let theta = r.f64()?;
    let ndims = r.u32()? as usize;
    let mut layer_dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        layer_dims.push(r.u32()? as usize);
    }
    let optimizer = if with_optimizer {
        AdamConfig {
            lr: r.f64()?,
            beta1: r.f64()?,
            beta2: r.f64()?,
            eps: r.f64()?,
        }
    } else {
        AdamConfig::default()
    };

    let mut cfg = NetworkConfig::new(variant, layer_dims, classes);
    cfg.unroll = unroll;
    cfg.theta = theta;
    cfg.normalize = normalize;
    cfg.reducer = reducer;
    cfg.optimizer = optimizer;

    type SavedAdam<S> = Option<(Matrix<S>, Matrix<S>, u64)>;
    let read_param = |r: &mut Reader, rows: usize, cols: usize| -> Result<(Matrix<S>, SavedAdam<S>)> {
        let value = r.tensor::<S>(rows, cols)?;
        let adam = if with_optimizer {
            let m = r.tensor::<S>(rows, cols)?;
            let v = r.tensor::<S>(rows, cols)?;
            let t = r.u64()?;
            Some((m, v, t))
        } else {
            None
        };
        Ok((value, adam))
    };

    let mut layers = Vec::with_capacity(cfg.num_layers());
    for l in 0..cfg.num_layers() {
        let (out_dim, in_dim) = (cfg.out_dim(l), cfg.in_dim(l));
        let (w_in, a_w) = read_param(&mut r, out_dim, in_dim)?;
        let (b, a_b) = read_param(&mut r, 1, out_dim)?;
        let (w_label, a_l) = if variant.uses_label_weights() {
            let (w, a) = read_param(&mut r, out_dim, classes)?;
            (Some(w), a)
        } else {
            (None, None)
        };
        let mut p = LayerParams::from_tensors(w_in, b, w_label, &cfg.optimizer);
        let restore = |st: &mut AdamState<S>, saved: Option<(Matrix<S>, Matrix<S>, u64)>| {
            if let Some((m, v, t)) = saved {
                st.restore(m, v, t).map_err(|e| CliError::Data(e.to_string()))
            } else {
                Ok(())
            }
        };
        restore(&mut p.adam_w_in, a_w)?;
        restore(&mut p.adam_b, a_b)?;
        if let Some(a) = a_l {
            restore(p.adam_w_label.as_mut().unwrap(), Some(a))?;
        }
        layers.push(p);
    }

    let mut feedback = BTreeMap::new();
    for (n, l) in feedback_cells(&cfg) {
        let (rows, cols) = (cfg.out_dim(l), cfg.fb_dim(l));
        let (w_fb, a) = read_param(&mut r, rows, cols)?;
        let mut adam = AdamState::new(rows, cols, &cfg.optimizer);
        if let Some((m, v, t)) = a {
            adam.restore(m, v, t)
                .map_err(|e| CliError::Data(e.to_string()))?;
        }
        feedback.insert((n, l), FeedbackParam { w_fb, adam });
    }
    if r.off != payload.len() {
        return Err(CliError::Data(format!(
            "checkpoint has {} unexpected trailing payload bytes",
            payload.len() - r.off
        )));
    }

    TrainedNetwork::from_parts(cfg, layers, feedback)
        .map_err(|e| CliError::Data(e.to_string()))
}
