//! Restricted Boltzmann Machine parameters, energy, conditionals, Gibbs
//! sampling and exact enumeration oracles.
//!
//! Units are binary (`0`/`1`, stored as `u8`) and the temperature is fixed at
//! 1: the model distribution is `P(v, h) = exp(-E(v, h)) / Z` with
//!
//! ```text
//! E(v, h) = -sum_ij w_ij v_i h_j - sum_i a_i v_i - sum_j b_j h_j
//! ```
//!
//! Exact quantities enumerate the smaller layer and marginalise the larger one
//! analytically, so a 16+16 machine costs 2^16 terms.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{check_len, Error, Result};

/// Largest smaller-layer size (in units) accepted by the enumeration oracles.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Visible,
    Hidden,
}

/// Weights `w` (row-major, `n_v x n_h`), visible biases `a`, hidden biases `b`
/// and a connectivity mask. Masked weights are stored as exactly `0.0` and are
/// never written.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmParams {
    n_v: usize,
    n_h: usize,
    w: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    mask: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryConfig {
    pub v: Vec<u8>,
    pub h: Vec<u8>,
}

impl BinaryConfig {
    pub fn new(v: Vec<u8>, h: Vec<u8>) -> Self {
        Self { v, h }
    }

    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        Self {
            v: vec![0; n_v],
            h: vec![0; n_h],
        }
    }

    /// Decodes a joint index: bit `i` (LSB first) is `v_i`, bit `n_v + j` is
    /// `h_j`.
    pub fn from_index(index: u64, n_v: usize, n_h: usize) -> Self {
        let v = (0..n_v).map(|i| ((index >> i) & 1) as u8).collect();
        let h = (0..n_h).map(|j| ((index >> (n_v + j)) & 1) as u8).collect();
        Self { v, h }
    }

    pub fn index(&self) -> u64 {
        let mut idx = 0u64;
        for (k, &bit) in self.v.iter().chain(self.h.iter()).enumerate() {
            idx |= (bit as u64 & 1) << k;
        }
        idx
    }
}

/// Averages of `v_i h_j`, `v_i` and `h_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairStatistics {
    pub n_v: usize,
    pub n_h: usize,
    /// Row-major `n_v x n_h`.
    pub vh: Vec<f64>,
    pub v_mean: Vec<f64>,
    pub h_mean: Vec<f64>,
}

impl PairStatistics {
    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        Self {
            n_v,
            n_h,
            vh: vec![0.0; n_v * n_h],
            v_mean: vec![0.0; n_v],
            h_mean: vec![0.0; n_h],
        }
    }

    pub fn vh(&self, i: usize, j: usize) -> f64 {
        self.vh[i * self.n_h + j]
    }

    /// Adds `weight * v_i h_j` (and the single-unit terms).
    pub fn add(&mut self, v: &[f64], h: &[f64], weight: f64) {
        for (i, &vi) in v.iter().enumerate() {
            self.v_mean[i] += weight * vi;
            if vi == 0.0 {
                continue;
            }
            let row = &mut self.vh[i * self.n_h..(i + 1) * self.n_h];
            let wv = weight * vi;
            for (slot, &hj) in row.iter_mut().zip(h) {
                *slot += wv * hj;
            }
        }
        for (slot, &hj) in self.h_mean.iter_mut().zip(h) {
            *slot += weight * hj;
        }
    }

    pub fn add_binary(&mut self, v: &[u8], h: &[u8]) {
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            self.v_mean[i] += 1.0;
            let row = &mut self.vh[i * self.n_h..(i + 1) * self.n_h];
            for (slot, &hj) in row.iter_mut().zip(h) {
                *slot += hj as f64;
            }
        }
        for (slot, &hj) in self.h_mean.iter_mut().zip(h) {
            *slot += hj as f64;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.vh
            .iter_mut()
            .chain(self.v_mean.iter_mut())
            .chain(self.h_mean.iter_mut())
            .for_each(|x| *x *= factor);
    }

    /// Largest absolute entrywise difference over all three blocks.
    pub fn max_abs_diff(&self, other: &PairStatistics) -> f64 {
        self.vh
            .iter()
            .zip(&other.vh)
            .chain(self.v_mean.iter().zip(&other.v_mean))
            .chain(self.h_mean.iter().zip(&other.h_mean))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Streaming log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

impl RbmParams {
    /// All-zero parameters with a complete mask.
    pub fn zeros(n_v: usize, n_h: usize) -> Result<Self> {
        if n_v == 0 || n_h == 0 {
            return Err(Error::param("n_v/n_h", "both layers need at least one unit"));
        }
        Ok(Self {
            n_v,
            n_h,
            w: vec![0.0; n_v * n_h],
            a: vec![0.0; n_v],
            b: vec![0.0; n_h],
            mask: vec![true; n_v * n_h],
        })
    }

    pub fn from_parts(
        n_v: usize,
        n_h: usize,
        w: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        let mut rbm = Self::zeros(n_v, n_h)?;
        check_len("weights", n_v * n_h, w.len())?;
        check_len("visible biases", n_v, a.len())?;
        check_len("hidden biases", n_h, b.len())?;
        if w.iter().chain(&a).chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::param("rbm", "non-finite parameter"));
        }
        rbm.w = w;
        rbm.a = a;
        rbm.b = b;
        if let Some(mask) = mask {
            rbm = rbm.with_mask(mask)?;
        }
        Ok(rbm)
    }

    /// Replaces the mask and zeroes every weight it removes.
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        check_len("mask", self.n_v * self.n_h, mask.len())?;
        for (w, &keep) in self.w.iter_mut().zip(&mask) {
            if !keep {
                *w = 0.0;
            }
        }
        self.mask = mask;
        Ok(self)
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n_h + j]
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.a
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.b
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_connected(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n_h + j]
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn connection_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Sets a weight; writing a masked entry is an error.
    pub fn set_weight(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if !self.is_connected(i, j) {
            return Err(Error::param("weight", format!("({i}, {j}) is masked")));
        }
        if !value.is_finite() {
            return Err(Error::param("weight", "non-finite value"));
        }
        self.w[i * self.n_h + j] = value;
        Ok(())
    }

    pub fn visible_bias_mut(&mut self) -> &mut [f64] {
        &mut self.a
    }

    pub fn hidden_bias_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }

    /// Calls `f(weight)` for every unmasked weight, in row-major order.
    pub fn update_weights(&mut self, mut f: impl FnMut(usize, usize, &mut f64)) {
        for i in 0..self.n_v {
            for j in 0..self.n_h {
                let k = i * self.n_h + j;
                if self.mask[k] {
                    f(i, j, &mut self.w[k]);
                }
            }
        }
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.w.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// FNV-1a over the bit patterns of every parameter.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in self.w.iter().chain(&self.a).chain(&self.b) {
            for byte in x.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    fn check_config(&self, cfg: &BinaryConfig) -> Result<()> {
        check_len("visible configuration", self.n_v, cfg.v.len())?;
        check_len("hidden configuration", self.n_h, cfg.h.len())
    }

    pub fn energy(&self, cfg: &BinaryConfig) -> Result<f64> {
        self.check_config(cfg)?;
        Ok(self.energy_unchecked(&cfg.v, &cfg.h))
    }

    pub(crate) fn energy_unchecked(&self, v: &[u8], h: &[u8]) -> f64 {
        let mut e = 0.0;
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            e -= self.a[i];
            let row = &self.w[i * self.n_h..(i + 1) * self.n_h];
            for (wij, &hj) in row.iter().zip(h) {
                if hj != 0 {
                    e -= wij;
                }
            }
        }
        for (bj, &hj) in self.b.iter().zip(h) {
            if hj != 0 {
                e -= bj;
            }
        }
        e
    }

    /// `b_j + sum_i w_ij v_i` for every hidden unit.
    pub fn hidden_input(&self, v: &[u8]) -> Vec<f64> {
        let mut out = self.b.clone();
        self.add_hidden_input(v, &mut out);
        out
    }

    fn add_hidden_input(&self, v: &[u8], out: &mut [f64]) {
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0 {
                let row = &self.w[i * self.n_h..(i + 1) * self.n_h];
                for (o, wij) in out.iter_mut().zip(row) {
                    *o += wij;
                }
            }
        }
    }

    /// `a_i + sum_j w_ij h_j` for every visible unit.
    pub fn visible_input(&self, h: &[u8]) -> Vec<f64> {
        let mut out = self.a.clone();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.w[i * self.n_h..(i + 1) * self.n_h];
            for (wij, &hj) in row.iter().zip(h) {
                if hj != 0 {
                    *o += wij;
                }
            }
        }
        out
    }

    /// `P(unit = 1 | other layer)` for every unit of `layer`.
    pub fn conditional(&self, layer: Layer, given: &[u8]) -> Result<Vec<f64>> {
        let mut p = match layer {
            Layer::Hidden => {
                check_len("visible vector", self.n_v, given.len())?;
                self.hidden_input(given)
            }
            Layer::Visible => {
                check_len("hidden vector", self.n_h, given.len())?;
                self.visible_input(given)
            }
        };
        p.iter_mut().for_each(|x| *x = logistic(*x));
        Ok(p)
    }

    pub(crate) fn sample_hidden<R: Rng + ?Sized>(&self, v: &[u8], rng: &mut R, h: &mut [u8]) {
        let input = self.hidden_input(v);
        for (hj, x) in h.iter_mut().zip(input) {
            *hj = (rng.random::<f64>() < logistic(x)) as u8;
        }
    }

    pub(crate) fn sample_visible<R: Rng + ?Sized>(&self, h: &[u8], rng: &mut R, v: &mut [u8]) {
        let input = self.visible_input(h);
        for (vi, x) in v.iter_mut().zip(input) {
            *vi = (rng.random::<f64>() < logistic(x)) as u8;
        }
    }

    /// Alternating block Gibbs sampling: `n_g` rounds of (hidden, visible)
    /// updates starting from `v0`, followed by one last hidden update.
    pub fn gibbs_chain<R: Rng + ?Sized>(
        &self,
        v0: &[u8],
        n_g: usize,
        rng: &mut R,
    ) -> Result<BinaryConfig> {
        check_len("initial visible vector", self.n_v, v0.len())?;
        let mut v = v0.to_vec();
        let mut h = vec![0u8; self.n_h];
        for _ in 0..n_g {
            self.sample_hidden(&v, rng, &mut h);
            self.sample_visible(&h, rng, &mut v);
        }
        self.sample_hidden(&v, rng, &mut h);
        Ok(BinaryConfig { v, h })
    }

    /// Data expectations using the exact hidden conditional for every data
    /// vector.
    pub fn positive_statistics(&self, dataset: &[Vec<u8>]) -> Result<PairStatistics> {
        if dataset.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let mut stats = PairStatistics::zeros(self.n_v, self.n_h);
        for r in dataset {
            check_len("data vector", self.n_v, r.len())?;
            let ph = self.conditional(Layer::Hidden, r)?;
            let rf: Vec<f64> = r.iter().map(|&x| x as f64).collect();
            stats.add(&rf, &ph, 1.0);
        }
        stats.scale(1.0 / dataset.len() as f64);
        Ok(stats)
    }

    /// `F(v) = -sum_i a_i v_i - sum_j ln(1 + exp(b_j + sum_i w_ij v_i))`, so
    /// that `P(v) = exp(-F(v)) / Z`.
    pub fn free_energy(&self, v: &[u8]) -> Result<f64> {
        check_len("visible vector", self.n_v, v.len())?;
        let bias: f64 = self
            .a
            .iter()
            .zip(v)
            .filter(|(_, &vi)| vi != 0)
            .map(|(ai, _)| ai)
            .sum();
        let soft: f64 = self.hidden_input(v).into_iter().map(softplus).sum();
        Ok(-bias - soft)
    }

    /// The layer enumerated by the exact oracles.
    pub fn enumerated_layer(&self) -> Layer {
        if self.n_v <= self.n_h {
            Layer::Visible
        } else {
            Layer::Hidden
        }
    }

    fn check_tractable(&self) -> Result<usize> {
        let k = self.n_v.min(self.n_h);
        if k > ENUMERATION_LIMIT {
            Err(Error::Intractable {
                states_log2: k,
                limit_log2: ENUMERATION_LIMIT,
            })
        } else {
            Ok(k)
        }
    }

    /// Visits every state of the enumerated layer in Gray-code order.
    ///
    /// The callback receives the state, `ln` of its unnormalised marginal
    /// weight, and the conditional probabilities of the other layer.
    pub fn for_each_marginal<F>(&self, mut f: F) -> Result<()>
    where
        F: FnMut(&[u8], f64, &[f64]),
    {
        let k = self.check_tractable()?;
        let layer = self.enumerated_layer();
        let (n_small, n_other) = match layer {
            Layer::Visible => (self.n_v, self.n_h),
            Layer::Hidden => (self.n_h, self.n_v),
        };
        let (small_bias, other_bias) = match layer {
            Layer::Visible => (&self.a, &self.b),
            Layer::Hidden => (&self.b, &self.a),
        };
        // column of w seen from the enumerated unit `u`
        let coupling = |u: usize, o: usize| match layer {
            Layer::Visible => self.w[u * self.n_h + o],
            Layer::Hidden => self.w[o * self.n_h + u],
        };

        let mut state = vec![0u8; n_small];
        let mut input = other_bias.clone();
        let mut bias_sum = 0.0;
        let mut probs = vec![0.0; n_other];
        let total: u64 = 1 << k;
        for g in 0..total {
            if g > 0 {
                let u = g.trailing_zeros() as usize;
                let sign = if state[u] == 0 { 1.0 } else { -1.0 };
                state[u] ^= 1;
                bias_sum += sign * small_bias[u];
                for (o, x) in input.iter_mut().enumerate() {
                    *x += sign * coupling(u, o);
                }
            }
            let mut lw = bias_sum;
            for (p, &x) in probs.iter_mut().zip(&input) {
                let e = (-x.abs()).exp();
                lw += x.max(0.0) + e.ln_1p();
                *p = if x >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            }
            f(&state, lw, &probs);
        }
        Ok(())
    }

    /// `ln Z` at unit temperature.
    pub fn exact_log_partition(&self) -> Result<f64> {
        let mut acc = LogSumExp::default();
        self.for_each_marginal(|_, lw, _| acc.push(lw))?;
        Ok(acc.value())
    }

    /// Exact model expectations `<v_i h_j>`, `<v_i>`, `<h_j>`.
    pub fn exact_model_statistics(&self) -> Result<PairStatistics> {
        let log_z = self.exact_log_partition()?;
        let mut stats = PairStatistics::zeros(self.n_v, self.n_h);
        let layer = self.enumerated_layer();
        let mut small_f = Vec::new();
        self.for_each_marginal(|state, lw, probs| {
            let p = (lw - log_z).exp();
            small_f.clear();
            small_f.extend(state.iter().map(|&x| x as f64));
            match layer {
                Layer::Visible => stats.add(&small_f, probs, p),
                Layer::Hidden => stats.add(probs, &small_f, p),
            }
        })?;
        Ok(stats)
    }

    /// Serialises to the plain-text matrix format: a `RBM n_v n_h` header,
    /// `n_v` rows of weights, the visible biases, the hidden biases, and, for
    /// sparse machines only, a `MASK` line followed by `n_v` rows of `0`/`1`.
    /// Numbers carry 17 significant digits so that parsing is exact.
    pub fn to_text(&self) -> String {
        let mut s = format!("RBM {} {}\n", self.n_v, self.n_h);
        let row = |s: &mut String, xs: &[f64]| {
            let line: Vec<String> = xs.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        };
        for i in 0..self.n_v {
            row(&mut s, &self.w[i * self.n_h..(i + 1) * self.n_h]);
        }
        row(&mut s, &self.a);
        row(&mut s, &self.b);
        if !self.is_complete() {
            s.push_str("MASK\n");
            for i in 0..self.n_v {
                let line: Vec<&str> = self.mask[i * self.n_h..(i + 1) * self.n_h]
                    .iter()
                    .map(|&m| if m { "1" } else { "0" })
                    .collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or(Error::Empty("RBM text"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "RBM" {
            return Err(Error::parse(ln, "expected header `RBM n_v n_h`"));
        }
        let parse_count = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::parse(ln, format!("bad size `{s}`: {e}")))
        };
        let n_v = parse_count(parts[1])?;
        let n_h = parse_count(parts[2])?;

        let mut read_row = |len: usize, what: &str| -> Result<Vec<f64>> {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing {what}")))?;
            let xs = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::parse(ln, format!("bad number `{t}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if xs.len() != len {
                return Err(Error::parse(
                    ln,
                    format!("{what}: expected {len} values, got {}", xs.len()),
                ));
            }
            Ok(xs)
        };
        let mut w = Vec::with_capacity(n_v * n_h);
        for _ in 0..n_v {
            w.extend(read_row(n_h, "weight row")?);
        }
        let a = read_row(n_v, "visible biases")?;
        let b = read_row(n_h, "hidden biases")?;
        let mask = match lines.next() {
            None => None,
            Some((_, "MASK")) => {
                let mut mask = Vec::with_capacity(n_v * n_h);
                for _ in 0..n_v {
                    let (ln, line) = lines
                        .next()
                        .ok_or_else(|| Error::parse(0, "missing mask row"))?;
                    let row = line
                        .split_whitespace()
                        .map(|t| match t {
                            "0" => Ok(false),
                            "1" => Ok(true),
                            _ => Err(Error::parse(ln, format!("bad mask entry `{t}`"))),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if row.len() != n_h {
                        return Err(Error::parse(ln, "mask row length"));
                    }
                    mask.extend(row);
                }
                Some(mask)
            }
            Some((ln, _)) => return Err(Error::parse(ln, "unexpected trailing content")),
        };
        Self::from_parts(n_v, n_h, w, a, b, mask)
    }
}

/// Draws exact samples from the model by first sampling the enumerated layer
/// from its marginal and then the other layer from its conditional.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    rbm: RbmParams,
    layer: Layer,
    states: Vec<u32>,
    cdf: Vec<f64>,
}

impl ExactSampler {
    pub fn new(rbm: &RbmParams) -> Result<Self> {
        let log_z = rbm.exact_log_partition()?;
        let mut states = Vec::new();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        rbm.for_each_marginal(|state, lw, _| {
            let code = state
                .iter()
                .enumerate()
                .fold(0u32, |c, (k, &bit)| c | ((bit as u32) << k));
            acc += (lw - log_z).exp();
            states.push(code);
            cdf.push(acc);
        })?;
        Ok(Self {
            rbm: rbm.clone(),
            layer: rbm.enumerated_layer(),
            states,
            cdf,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BinaryConfig {
        let total = *self.cdf.last().expect("at least one state");
        let u = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        let code = self.states[idx];
        let (n_v, n_h) = (self.rbm.n_v, self.rbm.n_h);
        let decode = |n: usize| (0..n).map(|k| ((code >> k) & 1) as u8).collect::<Vec<u8>>();
        match self.layer {
            Layer::Visible => {
                let v = decode(n_v);
                let mut h = vec![0; n_h];
                self.rbm.sample_hidden(&v, rng, &mut h);
                BinaryConfig { v, h }
            }
            Layer::Hidden => {
                let h = decode(n_h);
                let mut v = vec![0; n_v];
                self.rbm.sample_visible(&h, rng, &mut v);
                BinaryConfig { v, h }
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    pub fn random_rbm(n_v: usize, n_h: usize, scale: f64, seed: u64) -> RbmParams {
        let mut rng = crate::rng::stream(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect()
        };
        let w = draw(n_v * n_h);
        let a = draw(n_v);
        let b = draw(n_h);
        RbmParams::from_parts(n_v, n_h, w, a, b, None).unwrap()
    }

    /// Independent oracle: every joint state, energies re-summed term by term.
    pub fn brute_force_joint(rbm: &RbmParams) -> Vec<(BinaryConfig, f64)> {
        let (n_v, n_h) = (rbm.n_v(), rbm.n_h());
        (0..1u64 << (n_v + n_h))
            .map(|idx| {
                let cfg = BinaryConfig::from_index(idx, n_v, n_h);
                let mut e = 0.0;
                for i in 0..n_v {
                    for j in 0..n_h {
                        e -= rbm.weight(i, j) * cfg.v[i] as f64 * cfg.h[j] as f64;
                    }
                }
                for i in 0..n_v {
                    e -= rbm.visible_bias()[i] * cfg.v[i] as f64;
                }
                for j in 0..n_h {
                    e -= rbm.hidden_bias()[j] * cfg.h[j] as f64;
                }
                (cfg, e)
            })
            .collect()
    }

    pub fn brute_force_probs(rbm: &RbmParams) -> Vec<f64> {
        let joint = brute_force_joint(rbm);
        let z: f64 = joint.iter().map(|(_, e)| (-e).exp()).sum();
        joint.iter().map(|(_, e)| (-e).exp() / z).collect()
    }
}
