//! Lowering an RBM to a logical Ising problem.
//!
//! Spin `s = 2u - 1` for binary `u`. Spins are indexed visible first
//! (`0..n_v`) then hidden (`n_v..n_v + n_h`). Energies use the convention
//!
//! ```text
//! H(s) = -sum_(i,j) J_ij s_i s_j - sum_k h_k s_k
//! ```
//!
//! so that with `J_ij = alpha w_ij / 4`, `A_i = alpha (a_i/2 + sum_j w_ij/4)`
//! and `B_j = alpha (b_j/2 + sum_i w_ij/4)` every energy gap equals `alpha`
//! times the RBM energy gap; lower `H` means higher RBM probability. The
//! constant offset is dropped.

use std::fmt::Write as _;

use crate::error::{check_len, Error, Result};
use crate::rbm::{BinaryConfig, RbmParams};

#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    /// Visible spin index.
    pub i: usize,
    /// Hidden spin index (already offset by `n_v`).
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingProblem {
    pub n_v: usize,
    pub n_h: usize,
    /// One entry per unmasked visible-hidden pair, row-major.
    pub couplings: Vec<Coupling>,
    /// `A_i` followed by `B_j`.
    pub fields: Vec<f64>,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    pub s: Vec<i8>,
}

impl SpinConfig {
    pub fn new(s: Vec<i8>) -> Result<Self> {
        if let Some(bad) = s.iter().find(|&&x| x != 1 && x != -1) {
            return Err(Error::param("spin", format!("{bad} is not +1/-1")));
        }
        Ok(Self { s })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// `s = 2u - 1`; fails on symbols other than 0/1.
pub fn binary_to_spin(bits: &[u8]) -> Result<SpinConfig> {
    bits.iter()
        .map(|&b| match b {
            0 => Ok(-1),
            1 => Ok(1),
            other => Err(Error::param("bit", format!("{other} is not 0/1"))),
        })
        .collect::<Result<Vec<i8>>>()
        .map(|s| SpinConfig { s })
}

pub fn spin_to_binary(spins: &SpinConfig) -> Vec<u8> {
    spins.s.iter().map(|&x| (x > 0) as u8).collect()
}

/// Joins a binary RBM configuration into one spin vector (visible first).
pub fn config_to_spins(cfg: &BinaryConfig) -> Result<SpinConfig> {
    let mut bits = cfg.v.clone();
    bits.extend_from_slice(&cfg.h);
    binary_to_spin(&bits)
}

pub fn spins_to_config(spins: &SpinConfig, n_v: usize) -> BinaryConfig {
    let bits = spin_to_binary(spins);
    BinaryConfig {
        v: bits[..n_v].to_vec(),
        h: bits[n_v..].to_vec(),
    }
}

pub fn to_ising(rbm: &RbmParams, alpha: f64) -> Result<IsingProblem> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
    }
    let (n_v, n_h) = (rbm.n_v(), rbm.n_h());
    let mut fields = vec![0.0; n_v + n_h];
    let mut couplings = Vec::with_capacity(rbm.connection_count());
    for i in 0..n_v {
        fields[i] = alpha * rbm.visible_bias()[i] / 2.0;
    }
    for j in 0..n_h {
        fields[n_v + j] = alpha * rbm.hidden_bias()[j] / 2.0;
    }
    for i in 0..n_v {
        for j in 0..n_h {
            if !rbm.is_connected(i, j) {
                continue;
            }
            let quarter = alpha * rbm.weight(i, j) / 4.0;
            couplings.push(Coupling {
                i,
                j: n_v + j,
                value: quarter,
            });
            fields[i] += quarter;
            fields[n_v + j] += quarter;
        }
    }
    Ok(IsingProblem {
        n_v,
        n_h,
        couplings,
        fields,
        alpha,
    })
}

impl IsingProblem {
    pub fn n_spins(&self) -> usize {
        self.n_v + self.n_h
    }

    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        let couplings = (0..n_v)
            .flat_map(|i| (0..n_h).map(move |j| (i, j)))
            .map(|(i, j)| Coupling {
                i,
                j: n_v + j,
                value: 0.0,
            })
            .collect();
        Self {
            n_v,
            n_h,
            couplings,
            fields: vec![0.0; n_v + n_h],
            alpha: 1.0,
        }
    }

    pub fn max_abs_coupling(&self) -> f64 {
        self.couplings.iter().fold(0.0, |m, c| m.max(c.value.abs()))
    }

    pub fn energy(&self, spins: &SpinConfig) -> Result<f64> {
        check_len("spin configuration", self.n_spins(), spins.len())?;
        Ok(self.energy_unchecked(&spins.s))
    }

    pub(crate) fn energy_unchecked(&self, s: &[i8]) -> f64 {
        let mut e = 0.0;
        for c in &self.couplings {
            e -= c.value * (s[c.i] * s[c.j]) as f64;
        }
        for (h, &x) in self.fields.iter().zip(s) {
            e -= h * x as f64;
        }
        e
    }

    /// Line format: `# ising n_v n_h alpha` header, `i j J` per coupling and
    /// `i h` per field.
    pub fn to_text(&self) -> String {
        let mut s = format!("# ising {} {} {:.16e}\n", self.n_v, self.n_h, self.alpha);
        for (k, h) in self.fields.iter().enumerate() {
            let _ = writeln!(s, "{k} {h:.16e}");
        }
        for c in &self.couplings {
            let _ = writeln!(s, "{} {} {:.16e}", c.i, c.j, c.value);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut problem: Option<IsingProblem> = None;
        let mut couplings = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let ln = n + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks[0] == "#" {
                if toks.len() == 5 && toks[1] == "ising" {
                    let n_v = toks[2].parse().map_err(|_| Error::parse(ln, "bad n_v"))?;
                    let n_h = toks[3].parse().map_err(|_| Error::parse(ln, "bad n_h"))?;
                    let alpha = toks[4].parse().map_err(|_| Error::parse(ln, "bad alpha"))?;
                    let mut p = IsingProblem::zeros(n_v, n_h);
                    p.couplings.clear();
                    p.alpha = alpha;
                    problem = Some(p);
                }
                continue;
            }
            let p = problem
                .as_mut()
                .ok_or_else(|| Error::parse(ln, "missing `# ising` header"))?;
            let index = |t: &str| -> Result<usize> {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(ln, format!("bad index `{t}`")))
            };
            let value = |t: &str| -> Result<f64> {
                t.parse::<f64>()
                    .map_err(|_| Error::parse(ln, format!("bad value `{t}`")))
            };
            match toks.len() {
                2 => {
                    let k = index(toks[0])?;
                    if k >= p.n_spins() {
                        return Err(Error::parse(ln, "field index out of range"));
                    }
                    p.fields[k] = value(toks[1])?;
                }
                3 => {
                    let (i, j) = (index(toks[0])?, index(toks[1])?);
                    if i >= p.n_v || j < p.n_v || j >= p.n_spins() {
                        return Err(Error::parse(ln, "coupling must join visible to hidden"));
                    }
                    couplings.push(Coupling {
                        i,
                        j,
                        value: value(toks[2])?,
                    });
                }
                _ => return Err(Error::parse(ln, "expected `i h` or `i j J`")),
            }
        }
        let mut p = problem.ok_or(Error::Empty("ising text"))?;
        p.couplings = couplings;
        Ok(p)
    }
}
