//! Spectral blocks, sort pooling and the link-probability head.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, NetError, Result};

/// Node feature width produced by [`crate::data::node_features`].
pub const INPUT_DIM: usize = 5;

/// Pointwise MLP applied to each Ritz value: two 32-channel ReLU layers and a
/// scalar readout.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterMlp {
    pub w1: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub w3: DMatrix<f64>,
    pub b3: DMatrix<f64>,
}

pub(crate) struct FilterCache {
    pub z1: DMatrix<f64>,
    pub z2: DMatrix<f64>,
    pub out: Vec<f64>,
}

fn relu_mat(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|x| x.max(0.0))
}

fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..bound))
}

impl FilterMlp {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            w1: DMatrix::zeros(hidden, 1),
            b1: DMatrix::zeros(hidden, 1),
            w2: DMatrix::zeros(hidden, hidden),
            b2: DMatrix::zeros(hidden, 1),
            w3: DMatrix::zeros(1, hidden),
            b3: DMatrix::zeros(1, 1),
        }
    }

    /// `f ≡ c`.
    pub fn constant(hidden: usize, c: f64) -> Self {
        let mut f = Self::zeros(hidden);
        f.b3[(0, 0)] = c;
        f
    }

    fn random(hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let h = (6.0 / hidden as f64).sqrt();
        Self {
            w1: uniform(hidden, 1, 1.0, rng),
            b1: uniform(hidden, 1, 1.0, rng),
            w2: uniform(hidden, hidden, h, rng),
            b2: DMatrix::zeros(hidden, 1),
            w3: uniform(1, hidden, h, rng),
            b3: DMatrix::from_element(1, 1, 1.0),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub(crate) fn forward_cached(&self, r: &[f64]) -> FilterCache {
        let x = DMatrix::from_row_slice(1, r.len(), r);
        let mut z1 = &self.w1 * &x;
        for mut col in z1.column_iter_mut() {
            col += &self.b1;
        }
        let mut z2 = &self.w2 * relu_mat(&z1);
        for mut col in z2.column_iter_mut() {
            col += &self.b2;
        }
        let out = (&self.w3 * relu_mat(&z2)).iter().map(|v| v + self.b3[(0, 0)]).collect();
        FilterCache { z1, z2, out }
    }

    /// Filter response for every entry of `r`.
    pub fn eval(&self, r: &[f64]) -> Vec<f64> {
        self.forward_cached(r).out
    }

    /// Accumulates parameter gradients for upstream `dout` into `grad`.
    pub(crate) fn backward(&self, cache: &FilterCache, r: &[f64], dout: &[f64], grad: &mut FilterMlp) {
        let dout = DMatrix::from_row_slice(1, dout.len(), dout);
        let h2 = relu_mat(&cache.z2);
        grad.w3 += &dout * h2.transpose();
        grad.b3[(0, 0)] += dout.sum();
        let mut dz2 = self.w3.transpose() * &dout;
        dz2.zip_apply(&cache.z2, |d, z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let h1 = relu_mat(&cache.z1);
        grad.w2 += &dz2 * h1.transpose();
        grad.b2 += dz2.column_sum();
        let mut dz1 = self.w2.transpose() * &dz2;
        dz1.zip_apply(&cache.z1, |d, z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let x = DMatrix::from_column_slice(r.len(), 1, r);
        grad.w1 += &dz1 * x;
        grad.b1 += dz1.column_sum();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// `σ(V diag(fr) Vᵀ X W)`.
pub fn block_forward(
    v: &DMatrix<f64>,
    fr: &[f64],
    x: &DMatrix<f64>,
    w: &DMatrix<f64>,
    act: Activation,
) -> Result<DMatrix<f64>> {
    if fr.len() != v.ncols() {
        return Err(shape_err("filter response", v.ncols(), fr.len()));
    }
    if x.nrows() != v.nrows() {
        return Err(shape_err("feature rows", v.nrows(), x.nrows()));
    }
    if w.nrows() != x.ncols() {
        return Err(shape_err("mixing weights", x.ncols(), w.nrows()));
    }
    let z = spectral_mix(v, fr, x) * w;
    Ok(match act {
        Activation::Relu => relu_mat(&z),
        Activation::Identity => z,
    })
}

/// `V diag(fr) Vᵀ X`.
fn spectral_mix(v: &DMatrix<f64>, fr: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = v.transpose() * x;
    for (mut row, &f) in a.row_iter_mut().zip(fr) {
        row *= f;
    }
    v * a
}

/// Row order used by sort pooling: last channel descending, then earlier
/// channels descending, then node index ascending.
pub fn sort_order(x: &DMatrix<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| {
        for c in (0..x.ncols()).rev() {
            match x[(b, c)].total_cmp(&x[(a, c)]) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        a.cmp(&b)
    });
    order
}

/// The first `pool_k` rows in [`sort_order`], flattened row by row and zero padded.
pub fn sort_pooling(x: &DMatrix<f64>, pool_k: usize) -> Vec<f64> {
    let d = x.ncols();
    let mut out = vec![0.0; pool_k * d];
    for (slot, &row) in sort_order(x).iter().take(pool_k).enumerate() {
        for c in 0..d {
            out[slot * d + c] = x[(row, c)];
        }
    }
    out
}

/// Clamped binary cross entropy.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub filter: FilterMlp,
    pub w: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    /// Output width of each block; the block count is its length.
    pub widths: Vec<usize>,
    pub filter_hidden: usize,
    pub pool_k: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            widths: vec![16, 16],
            filter_hidden: 32,
            pool_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub blocks: Vec<Block>,
    /// `1 × (pool_k · d_last)`.
    pub head_w: DMatrix<f64>,
    pub head_b: DMatrix<f64>,
    pub pool_k: usize,
}

/// Everything a forward pass computes, kept for the backward pass.
pub(crate) struct ForwardCache {
    pub filters: Vec<FilterCache>,
    /// Block inputs `X_0 .. X_{k-1}` and the final output `X_k`.
    pub xs: Vec<DMatrix<f64>>,
    /// `Vᵀ X_i`.
    pub a: Vec<DMatrix<f64>>,
    /// `V diag(f) Vᵀ X_i`.
    pub c: Vec<DMatrix<f64>>,
    /// Pre-activations.
    pub z: Vec<DMatrix<f64>>,
    pub order: Vec<usize>,
    pub pooled: Vec<f64>,
    pub prob: f64,
}

impl SpectralModel {
    pub fn new(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        Self::with_input_dim(cfg, INPUT_DIM, seed)
    }

    pub fn with_input_dim(cfg: &ModelConfig, input_dim: usize, seed: u64) -> Result<Self> {
        if cfg.widths.is_empty() || cfg.widths.contains(&0) {
            return Err(NetError::InvalidArgument(
                "need at least one block of positive width".into(),
            ));
        }
        if cfg.pool_k == 0 || cfg.filter_hidden == 0 || input_dim == 0 {
            return Err(NetError::InvalidArgument(
                "pool_k, filter width and input width must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut blocks = Vec::with_capacity(cfg.widths.len());
        let mut d_in = input_dim;
        for &d_out in &cfg.widths {
            let bound = (6.0 / (d_in + d_out) as f64).sqrt();
            blocks.push(Block {
                filter: FilterMlp::random(cfg.filter_hidden, &mut rng),
                w: uniform(d_in, d_out, bound, &mut rng),
            });
            d_in = d_out;
        }
        let flat = cfg.pool_k * d_in;
        let bound = (6.0 / (flat + 1) as f64).sqrt();
        Ok(Self {
            blocks,
            head_w: uniform(1, flat, bound, &mut rng),
            head_b: DMatrix::zeros(1, 1),
            pool_k: cfg.pool_k,
        })
    }

    /// Same shapes, all parameters zero.
    pub fn zeros_like(&self) -> Self {
        let mut m = self.clone();
        m.tensors_mut().into_iter().for_each(|(_, t)| t.fill(0.0));
        m
    }

    pub fn input_dim(&self) -> usize {
        self.blocks[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.w.ncols())
    }

    /// Named parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &DMatrix<f64>)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let f = &b.filter;
            out.push((format!("block{i}.filter.w1"), &f.w1));
            out.push((format!("block{i}.filter.b1"), &f.b1));
            out.push((format!("block{i}.filter.w2"), &f.w2));
            out.push((format!("block{i}.filter.b2"), &f.b2));
            out.push((format!("block{i}.filter.w3"), &f.w3));
            out.push((format!("block{i}.filter.b3"), &f.b3));
            out.push((format!("block{i}.w"), &b.w));
        }
        out.push(("head.w".into(), &self.head_w));
        out.push(("head.b".into(), &self.head_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut DMatrix<f64>)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter_mut().enumerate() {
            let f = &mut b.filter;
            out.push((format!("block{i}.filter.w1"), &mut f.w1));
            out.push((format!("block{i}.filter.b1"), &mut f.b1));
            out.push((format!("block{i}.filter.w2"), &mut f.w2));
            out.push((format!("block{i}.filter.b2"), &mut f.b2));
            out.push((format!("block{i}.filter.w3"), &mut f.w3));
            out.push((format!("block{i}.filter.b3"), &mut f.b3));
            out.push((format!("block{i}.w"), &mut b.w));
        }
        out.push(("head.w".into(), &mut self.head_w));
        out.push(("head.b".into(), &mut self.head_b));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// All parameters, tensor by tensor, each column-major.
    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|(_, t)| t.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(shape_err("flat parameters", self.param_count(), flat.len()));
        }
        let mut at = 0;
        for (_, t) in self.tensors_mut() {
            let len = t.len();
            t.as_mut_slice().copy_from_slice(&flat[at..at + len]);
            at += len;
        }
        Ok(())
    }

    /// Name and flat range of every tensor.
    pub fn groups(&self) -> Vec<(String, std::ops::Range<usize>)> {
        let mut at = 0;
        self.tensors()
            .into_iter()
            .map(|(name, t)| {
                let r = at..at + t.len();
                at += t.len();
                (name, r)
            })
            .collect()
    }

    fn check_inputs(&self, v: &DMatrix<f64>, r: &[f64], x0: &DMatrix<f64>) -> Result<()> {
        if r.len() != v.ncols() {
            return Err(shape_err("Ritz values", v.ncols(), r.len()));
        }
        if x0.nrows() != v.nrows() {
            return Err(shape_err("feature rows", v.nrows(), x0.nrows()));
        }
        if x0.ncols() != self.input_dim() {
            return Err(shape_err("feature width", self.input_dim(), x0.ncols()));
        }
        Ok(())
    }

    pub(crate) fn forward_cached(&self, v: &DMatrix<f64>, r: &[f64], x0: &DMatrix<f64>) -> Result<ForwardCache> {
        self.check_inputs(v, r, x0)?;
        let k = self.blocks.len();
        let mut cache = ForwardCache {
            filters: Vec::with_capacity(k),
            xs: vec![x0.clone()],
            a: Vec::with_capacity(k),
            c: Vec::with_capacity(k),
            z: Vec::with_capacity(k),
            order: Vec::new(),
            pooled: Vec::new(),
            prob: 0.0,
        };
        for b in &self.blocks {
            let fc = b.filter.forward_cached(r);
            let x = cache.xs.last().unwrap();
            let a = v.transpose() * x;
            let mut fa = a.clone();
            for (mut row, &f) in fa.row_iter_mut().zip(&fc.out) {
                row *= f;
            }
            let c = v * fa;
            let z = &c * &b.w;
            cache.xs.push(relu_mat(&z));
            cache.filters.push(fc);
            cache.a.push(a);
            cache.c.push(c);
            cache.z.push(z);
        }
        let last = cache.xs.last().unwrap();
        cache.order = sort_order(last);
        cache.pooled = sort_pooling(last, self.pool_k);
        let logit = self.head_w.iter().zip(&cache.pooled).map(|(w, p)| w * p).sum::<f64>() + self.head_b[(0, 0)];
        cache.prob = sigmoid(logit);
        Ok(cache)
    }

    /// Link probability from an eigenbasis `(V, R)` and node features.
    pub fn forward_parts(&self, v: &DMatrix<f64>, r: &[f64], x0: &DMatrix<f64>) -> Result<f64> {
        Ok(self.forward_cached(v, r, x0)?.prob)
    }

    /// Loss gradient of one example accumulated into `grad`; returns the loss.
    pub(crate) fn backward_into(
        &self,
        v: &DMatrix<f64>,
        r: &[f64],
        x0: &DMatrix<f64>,
        label: f64,
        grad: &mut SpectralModel,
    ) -> Result<f64> {
        let cache = self.forward_cached(v, r, x0)?;
        let p = cache.prob;
        let loss = bce_loss(p, label);
        // inside the clamp the loss is flat
        let ds = if (1e-12..=1.0 - 1e-12).contains(&p) {
            p - label
        } else {
            0.0
        };

        grad.head_b[(0, 0)] += ds;
        for (g, x) in grad.head_w.iter_mut().zip(&cache.pooled) {
            *g += ds * x;
        }
        let d = self.output_dim();
        let last = cache.xs.last().unwrap();
        let mut dx = DMatrix::zeros(last.nrows(), d);
        for (slot, &row) in cache.order.iter().take(self.pool_k).enumerate() {
            for c in 0..d {
                dx[(row, c)] = ds * self.head_w[slot * d + c];
            }
        }

        for (i, b) in self.blocks.iter().enumerate().rev() {
            let mut dz = dx;
            dz.zip_apply(&cache.z[i], |g, z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            });
            grad.blocks[i].w += cache.c[i].transpose() * &dz;
            let dc = dz * b.w.transpose();
            let db = v.transpose() * dc;
            let fr = &cache.filters[i].out;
            let dfr: Vec<f64> = (0..fr.len()).map(|k| db.row(k).dot(&cache.a[i].row(k))).collect();
            b.filter
                .backward(&cache.filters[i], r, &dfr, &mut grad.blocks[i].filter);
            let mut da = db;
            for (mut row, &f) in da.row_iter_mut().zip(fr) {
                row *= f;
            }
            dx = v * da;
        }
        Ok(loss)
    }
}

/// Adds `other` into `acc` tensor by tensor.
pub(crate) fn add_assign(acc: &mut SpectralModel, other: &SpectralModel) {
    for ((_, a), (_, b)) in acc.tensors_mut().into_iter().zip(other.tensors()) {
        *a += b;
    }
}
