//! Fully-connected ReLU network with analytic parameter gradients.
//!
//! The architecture is fixed: `L` weight matrices without biases,
//! `f(x) = W_L relu(W_{L-1} relu( ... relu(W_1 x)))`, with `W_1 : m x d`,
//! `W_2 .. W_{L-1} : m x m` and `W_L : 1 x m`. Parameters live in one flat
//! vector of length `p = m*d + (L-2)*m^2 + m`, laid out layer by layer in
//! row-major order; shaped access goes through [`NetworkParams::layer`].
//!
//! Everything is `f64` and scalar-output; batching is a loop at the caller.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Shape and seed of a network. Cheap to copy; two parameter vectors are
/// compatible iff their configs agree on `(input_dim, width, depth)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkConfig {
    input_dim: usize,
    width: usize,
    depth: usize,
    seed: u64,
}

impl NetworkConfig {
    /// Requires `input_dim >= 1`, `width >= 1`, `depth >= 2`.
    pub fn new(input_dim: usize, width: usize, depth: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || width == 0 || depth < 2 {
            return Err(Error::InvalidConfig(
                "network needs input_dim >= 1, width >= 1, depth >= 2".to_string(),
            ));
        }
        Ok(Self {
            input_dim,
            width,
            depth,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total flat parameter count `m*d + (L-2)*m^2 + m`.
    pub fn param_count(&self) -> usize {
        let (d, m, l) = (self.input_dim, self.width, self.depth);
        m * d + (l - 2) * m * m + m
    }

    /// `(rows, cols)` of weight matrix `layer` (0-based, `0..depth`).
    pub fn layer_shape(&self, layer: usize) -> (usize, usize) {
        debug_assert!(layer < self.depth);
        let (d, m) = (self.input_dim, self.width);
        if layer == 0 {
            (m, d)
        } else if layer + 1 == self.depth {
            (1, m)
        } else {
            (m, m)
        }
    }

    /// Range of the flat vector occupied by weight matrix `layer`.
    pub fn layer_range(&self, layer: usize) -> core::ops::Range<usize> {
        let mut start = 0;
        for l in 0..layer {
            let (r, c) = self.layer_shape(l);
            start += r * c;
        }
        let (r, c) = self.layer_shape(layer);
        start..start + r * c
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim
            && self.width == other.width
            && self.depth == other.depth
    }
}

/// Read-only shaped view of one weight matrix inside the flat vector.
#[derive(Debug, Clone, Copy)]
pub struct LayerView<'a> {
    data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
}

impl<'a> LayerView<'a> {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }
}

/// Network parameters: flat vector plus the shapes needed to view it layer
/// by layer. Immutable by convention once handed to a learner snapshot;
/// mutation happens through explicit update methods.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    cfg: NetworkConfig,
    flat: Vec<f64>,
}

impl NetworkParams {
    /// Random initialization: entries of `W_1 .. W_{L-1}` drawn i.i.d. from
    /// `N(0, 2/m)`, entries of `W_L` from `N(0, 1/m)`. Deterministic in the
    /// config seed; layers are filled in order, row-major.
    pub fn init(cfg: NetworkConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let m = cfg.width as f64;
        let hidden = Normal::new(0.0, (2.0 / m).sqrt()).expect("finite std dev");
        let output = Normal::new(0.0, (1.0 / m).sqrt()).expect("finite std dev");
        let mut flat = Vec::with_capacity(cfg.param_count());
        for layer in 0..cfg.depth {
            let (r, c) = cfg.layer_shape(layer);
            let dist = if layer + 1 == cfg.depth { output } else { hidden };
            for _ in 0..r * c {
                flat.push(dist.sample(&mut rng));
            }
        }
        Self { cfg, flat }
    }

    /// All-zero parameters of the given shape.
    pub fn zeros(cfg: NetworkConfig) -> Self {
        let flat = vec![0.0; cfg.param_count()];
        Self { cfg, flat }
    }

    /// Wrap an existing flat vector; length must equal `cfg.param_count()`.
    pub fn from_flat(cfg: NetworkConfig, flat: Vec<f64>) -> Result<Self> {
        if flat.len() != cfg.param_count() {
            return Err(Error::DimensionMismatch {
                expected: cfg.param_count(),
                actual: flat.len(),
            });
        }
        Ok(Self { cfg, flat })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    /// Shaped view of weight matrix `layer`.
    pub fn layer(&self, layer: usize) -> LayerView<'_> {
        let (rows, cols) = self.cfg.layer_shape(layer);
        LayerView {
            data: &self.flat[self.cfg.layer_range(layer)],
            rows,
            cols,
        }
    }

    /// Overwrite weight matrix `layer` from a row-major slice.
    pub fn set_layer(&mut self, layer: usize, entries: &[f64]) -> Result<()> {
        let range = self.cfg.layer_range(layer);
        if entries.len() != range.len() {
            return Err(Error::DimensionMismatch {
                expected: range.len(),
                actual: entries.len(),
            });
        }
        self.flat[range].copy_from_slice(entries);
        Ok(())
    }

    /// Forward evaluation `f(x; theta)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let mut scratch = NetScratch::new(&self.cfg);
        self.forward_with(x, &mut scratch)
    }

    /// Forward evaluation reusing caller-owned scratch buffers.
    pub fn forward_with(&self, x: &[f64], scratch: &mut NetScratch) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.forward_internal(x, scratch))
    }

    /// Analytic gradient of `f(x; .)` with respect to every parameter, in
    /// flat layout. The ReLU subgradient at exactly zero pre-activation is 0.
    pub fn gradient(&self, x: &[f64]) -> Result<GradientVector> {
        let mut scratch = NetScratch::new(&self.cfg);
        let mut out = vec![0.0; self.cfg.param_count()];
        self.accumulate_gradient(x, 1.0, &mut scratch, &mut out)?;
        Ok(GradientVector { flat: out })
    }

    /// Backpropagate `coeff * grad f(x; .)` into `out` (added, not assigned).
    /// This is the hot path shared by loss gradients and UCB terms.
    pub fn accumulate_gradient(
        &self,
        x: &[f64],
        coeff: f64,
        scratch: &mut NetScratch,
        out: &mut [f64],
    ) -> Result<()> {
        self.check_input(x)?;
        if out.len() != self.cfg.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.param_count(),
                actual: out.len(),
            });
        }
        self.forward_internal(x, scratch);
        self.backward_internal(x, coeff, scratch, out);
        Ok(())
    }

    /// Backward-only variant: accumulates `coeff * grad f(x; .)` into `out`
    /// reusing the activations already stored in `scratch`. The caller must
    /// have run [`Self::forward_with`] on the same `x` and `scratch`
    /// immediately before; this lets loss gradients pay for one forward pass
    /// per observation instead of two.
    pub fn backward_from_forward(
        &self,
        x: &[f64],
        coeff: f64,
        scratch: &mut NetScratch,
        out: &mut [f64],
    ) -> Result<()> {
        self.check_input(x)?;
        if out.len() != self.cfg.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.param_count(),
                actual: out.len(),
            });
        }
        self.backward_internal(x, coeff, scratch, out);
        Ok(())
    }

    /// Euclidean distance between two flat parameter vectors of equal shape.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if !self.cfg.same_shape(&other.cfg) {
            return Err(Error::ShapeMismatch(
                "distance requires identical network shapes".to_string(),
            ));
        }
        let mut sum = 0.0;
        for (a, b) in self.flat.iter().zip(other.flat.iter()) {
            let d = a - b;
            sum += d * d;
        }
        Ok(sum.sqrt())
    }

    /// In-place update `theta += scale * v` where `v` shares the flat layout.
    pub fn axpy(&mut self, scale: f64, v: &[f64]) -> Result<()> {
        if v.len() != self.flat.len() {
            return Err(Error::DimensionMismatch {
                expected: self.flat.len(),
                actual: v.len(),
            });
        }
        for (t, g) in self.flat.iter_mut().zip(v.iter()) {
            *t += scale * g;
        }
        Ok(())
    }

    /// Taxicab norm of the flat vector.
    pub fn l1_norm(&self) -> f64 {
        self.flat.iter().map(|v| v.abs()).sum()
    }

    /// Elementwise sign with `sign(0) = +1`, written into `out` (assigned).
    pub fn sign_into(&self, out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(self.flat.iter()) {
            *o = if *v >= 0.0 { 1.0 } else { -1.0 };
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.cfg.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Forward pass, storing pre-activations and activations per hidden
    /// layer in the scratch. Returns the scalar output.
    fn forward_internal(&self, x: &[f64], scratch: &mut NetScratch) -> f64 {
        let m = self.cfg.width;
        let hidden_layers = self.cfg.depth - 1;
        for l in 0..hidden_layers {
            let w = &self.flat[self.cfg.layer_range(l)];
            let (rows, cols) = self.cfg.layer_shape(l);
            debug_assert_eq!(rows, m);
            // split_at_mut juggling avoided by raw index math: input of layer l
            // is x for l == 0, otherwise the previous activation block.
            for r in 0..rows {
                let row = &w[r * cols..(r + 1) * cols];
                let mut z = 0.0;
                if l == 0 {
                    for (wv, xv) in row.iter().zip(x.iter()) {
                        z += wv * xv;
                    }
                } else {
                    let prev = (l - 1) * m;
                    for (c, wv) in row.iter().enumerate() {
                        z += wv * scratch.act[prev + c];
                    }
                }
                scratch.pre[l * m + r] = z;
                scratch.act[l * m + r] = if z > 0.0 { z } else { 0.0 };
            }
        }
        let w_out = &self.flat[self.cfg.layer_range(self.cfg.depth - 1)];
        let last = (hidden_layers - 1) * m;
        let mut f = 0.0;
        for (j, wv) in w_out.iter().enumerate() {
            f += wv * scratch.act[last + j];
        }
        scratch.output = f;
        f
    }

    /// Backward pass for the scalar output, scaled by `coeff`, accumulated
    /// into `out`. Assumes `forward_internal` just ran on the same scratch.
    fn backward_internal(&self, x: &[f64], coeff: f64, scratch: &mut NetScratch, out: &mut [f64]) {
        let m = self.cfg.width;
        let depth = self.cfg.depth;
        let hidden_layers = depth - 1;
        let last = (hidden_layers - 1) * m;

        // Output layer: d f / d W_L[j] = act_last[j].
        let out_range = self.cfg.layer_range(depth - 1);
        for (j, o) in out[out_range.clone()].iter_mut().enumerate() {
            *o += coeff * scratch.act[last + j];
        }

        // delta over the last hidden layer.
        let w_out = &self.flat[out_range];
        for j in 0..m {
            let relu_on = scratch.pre[last + j] > 0.0;
            scratch.delta[j] = if relu_on { coeff * w_out[j] } else { 0.0 };
        }

        // Walk hidden layers backwards.
        for l in (0..hidden_layers).rev() {
            let range = self.cfg.layer_range(l);
            let (rows, cols) = self.cfg.layer_shape(l);
            let w = &self.flat[range.clone()];
            let grad = &mut out[range];
            for r in 0..rows {
                let dr = scratch.delta[r];
                if dr == 0.0 {
                    continue;
                }
                let grow = &mut grad[r * cols..(r + 1) * cols];
                if l == 0 {
                    for (g, xv) in grow.iter_mut().zip(x.iter()) {
                        *g += dr * xv;
                    }
                } else {
                    let prev = (l - 1) * m;
                    for (c, g) in grow.iter_mut().enumerate() {
                        *g += dr * scratch.act[prev + c];
                    }
                }
            }
            if l > 0 {
                let prev = (l - 1) * m;
                for c in 0..cols {
                    let mut s = 0.0;
                    for r in 0..rows {
                        let dr = scratch.delta[r];
                        if dr != 0.0 {
                            s += w[r * cols + c] * dr;
                        }
                    }
                    scratch.next_delta[c] = if scratch.pre[prev + c] > 0.0 { s } else { 0.0 };
                }
                core::mem::swap(&mut scratch.delta, &mut scratch.next_delta);
            }
        }
    }
}

/// Flat gradient vector, same layout as [`NetworkParams::flat`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    flat: Vec<f64>,
}

impl GradientVector {
    pub fn from_flat(flat: Vec<f64>) -> Self {
        Self { flat }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.flat
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.flat.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `|| self - other ||_2`; the gradient-displacement term of the UCB.
    pub fn diff_norm(&self, other: &Self) -> Result<f64> {
        if self.flat.len() != other.flat.len() {
            return Err(Error::DimensionMismatch {
                expected: self.flat.len(),
                actual: other.flat.len(),
            });
        }
        let mut sum = 0.0;
        for (a, b) in self.flat.iter().zip(other.flat.iter()) {
            let d = a - b;
            sum += d * d;
        }
        Ok(sum.sqrt())
    }
}

/// Reusable buffers for forward/backward passes. One per worker; never
/// shared across concurrent evaluations.
#[derive(Debug, Clone)]
pub struct NetScratch {
    pre: Vec<f64>,
    act: Vec<f64>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
    output: f64,
}

impl NetScratch {
    pub fn new(cfg: &NetworkConfig) -> Self {
        let m = cfg.width();
        let hidden = cfg.depth() - 1;
        Self {
            pre: vec![0.0; hidden * m],
            act: vec![0.0; hidden * m],
            delta: vec![0.0; m],
            next_delta: vec![0.0; m],
            output: 0.0,
        }
    }

    /// Scalar output of the last forward pass.
    pub fn last_output(&self) -> f64 {
        self.output
    }

    /// Smallest absolute pre-activation seen in the last forward pass.
    /// Useful for excluding near-kink inputs from finite-difference checks.
    pub fn min_abs_preactivation(&self) -> f64 {
        self.pre
            .iter()
            .map(|z| z.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn hand_net() -> NetworkParams {
        // d=2, m=2, L=2: W1 = I, WL = [1, -1].
        let cfg = NetworkConfig::new(2, 2, 2, 0).unwrap();
        let mut p = NetworkParams::zeros(cfg);
        p.set_layer(0, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        p.set_layer(1, &[1.0, -1.0]).unwrap();
        p
    }

    #[test]
    fn param_count_matches_shape_arithmetic() {
        let cfg = NetworkConfig::new(10, 100, 2, 0).unwrap();
        assert_eq!(cfg.param_count(), 100 * 10 + 100);
        let cfg = NetworkConfig::new(3, 5, 4, 0).unwrap();
        assert_eq!(cfg.param_count(), 5 * 3 + 2 * 25 + 5);
        let p = NetworkParams::init(cfg);
        assert_eq!(p.flat().len(), cfg.param_count());
    }

    #[test]
    fn init_is_deterministic_in_seed() {
        let cfg = NetworkConfig::new(2, 2, 2, 77).unwrap();
        let a = NetworkParams::init(cfg);
        let b = NetworkParams::init(cfg);
        assert_eq!(a.flat(), b.flat());
        let c = NetworkParams::init(NetworkConfig::new(2, 2, 2, 78).unwrap());
        assert_ne!(a.flat(), c.flat());
    }

    #[test]
    fn init_layer_variances_match_scheme() {
        // Gather >= 1e5 entries per regime across seeds; 5% tolerance.
        let mut hidden_entries = Vec::new();
        let mut output_entries = Vec::new();
        let mut seed = 0;
        while hidden_entries.len() < 100_000 || output_entries.len() < 100_000 {
            let cfg = NetworkConfig::new(10, 4096, 2, seed).unwrap();
            let p = NetworkParams::init(cfg);
            hidden_entries.extend_from_slice(p.layer(0).as_slice());
            output_entries.extend_from_slice(p.layer(1).as_slice());
            seed += 1;
        }
        let var = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64
        };
        let m = 4096.0;
        let vh = var(&hidden_entries);
        let vo = var(&output_entries);
        assert!((vh - 2.0 / m).abs() < 0.05 * (2.0 / m), "hidden var {vh}");
        assert!((vo - 1.0 / m).abs() < 0.05 * (1.0 / m), "output var {vo}");
    }

    #[test]
    fn forward_hand_example() {
        let p = hand_net();
        let f = p.forward(&[0.6, 0.8]).unwrap();
        assert!((f - (-0.2)).abs() < 1e-15);
    }

    #[test]
    fn forward_zero_input_is_zero() {
        let cfg = NetworkConfig::new(4, 7, 3, 3).unwrap();
        let p = NetworkParams::init(cfg);
        assert_eq!(p.forward(&[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let p = hand_net();
        assert!(matches!(
            p.forward(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn gradient_hand_example() {
        let p = hand_net();
        let g = p.gradient(&[0.6, 0.8]).unwrap();
        // Layout: W1 row-major (4 entries) then WL (2 entries).
        let expect = [0.6, 0.8, -0.6, -0.8, 0.6, 0.8];
        for (a, b) in g.as_slice().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15, "{:?}", g.as_slice());
        }
    }

    #[test]
    fn gradient_zero_input() {
        let cfg = NetworkConfig::new(3, 5, 3, 9).unwrap();
        let p = NetworkParams::init(cfg);
        let g = p.gradient(&[0.0; 3]).unwrap();
        // Everything below W_L gets zero; d f / d W_L is the (zero) last
        // activation, so the whole gradient vanishes.
        assert!(g.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        for trial in 0..20 {
            let cfg = NetworkConfig::new(3, 5, 3, 1000 + trial).unwrap();
            let p = NetworkParams::init(cfg);
            let x: Vec<f64> = (0..3)
                .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
                .collect();
            let mut scratch = NetScratch::new(&cfg);
            p.forward_with(&x, &mut scratch).unwrap();
            if scratch.min_abs_preactivation() <= 1e-6 {
                continue;
            }
            let g = p.gradient(&x).unwrap();
            let fd = oracles::finite_difference_gradient(
                |theta| {
                    NetworkParams::from_flat(cfg, theta.to_vec())
                        .unwrap()
                        .forward(&x)
                        .unwrap()
                },
                p.flat(),
                1e-4,
            );
            let num: f64 = g
                .as_slice()
                .iter()
                .zip(fd.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den = g.norm().max(1e-12);
            assert!(num / den < 1e-4, "rel err {} at trial {trial}", num / den);
            checked += 1;
        }
        assert!(checked >= 15, "too many kink skips: {checked}");
    }

    #[test]
    fn distance_examples() {
        let cfg = NetworkConfig::new(2, 2, 2, 0).unwrap();
        let a = NetworkParams::init(cfg);
        assert_eq!(a.distance(&a).unwrap(), 0.0);
        let mut b = NetworkParams::zeros(cfg);
        let mut c = NetworkParams::zeros(cfg);
        b.flat_mut()[0] = 1.0;
        c.flat_mut()[1] = 1.0;
        assert!((b.distance(&c).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
        let other = NetworkParams::zeros(NetworkConfig::new(3, 2, 2, 0).unwrap());
        assert!(b.distance(&other).is_err());
    }

    #[test]
    fn distance_matches_direct_recomputation() {
        let cfg = NetworkConfig::new(4, 6, 3, 5).unwrap();
        let a = NetworkParams::init(cfg);
        let b = NetworkParams::init(NetworkConfig::new(4, 6, 3, 6).unwrap());
        let direct: f64 = a
            .flat()
            .iter()
            .zip(b.flat().iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!((a.distance(&b).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn sign_convention_at_zero() {
        let cfg = NetworkConfig::new(1, 1, 2, 0).unwrap();
        let p = NetworkParams::from_flat(cfg, vec![0.5, -0.5]).unwrap();
        let mut s = vec![0.0; 2];
        p.sign_into(&mut s);
        assert_eq!(s, vec![1.0, -1.0]);
        let z = NetworkParams::zeros(cfg);
        z.sign_into(&mut s);
        assert_eq!(s, vec![1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn flat_and_shaped_views_are_bijective(
            d in 1usize..6,
            m in 1usize..6,
            l in 2usize..5,
            seed in any::<u64>(),
        ) {
            let cfg = NetworkConfig::new(d, m, l, seed).unwrap();
            let p = NetworkParams::init(cfg);
            // Reassemble the flat vector from shaped views.
            let mut rebuilt = Vec::new();
            for layer in 0..l {
                let view = p.layer(layer);
                for r in 0..view.rows {
                    for c in 0..view.cols {
                        rebuilt.push(view.at(r, c));
                    }
                }
            }
            prop_assert_eq!(rebuilt.as_slice(), p.flat());
            // And writing every layer back through set_layer is lossless.
            let mut q = NetworkParams::zeros(cfg);
            for layer in 0..l {
                q.set_layer(layer, p.layer(layer).as_slice()).unwrap();
            }
            prop_assert_eq!(q.flat(), p.flat());
        }

        #[test]
        fn forward_is_positively_homogeneous(
            seed in any::<u64>(),
            c in 0.0f64..10.0,
            x in proptest::collection::vec(-2.0f64..2.0, 4),
        ) {
            let cfg = NetworkConfig::new(4, 6, 3, seed).unwrap();
            let p = NetworkParams::init(cfg);
            let fx = p.forward(&x).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let fcx = p.forward(&scaled).unwrap();
            prop_assert!((fcx - c * fx).abs() < 1e-6, "f(cx)={fcx} c*f(x)={}", c * fx);
        }
    }
}
