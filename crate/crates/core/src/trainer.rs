//! The training loop: full-batch steepest ascent on the average
//! log-likelihood with pluggable negative-statistics estimators.
//!
//! Random streams derive from the run seed: child `0` initialises the
//! parameters, path `[1, epoch]` drives that epoch's negative-statistics
//! sampling and path `[2, epoch]` its reconstruction evaluation.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::annealer::{
    forward_sample, make_schedule, reverse_sample, EmulatorConfig, SampleBatch, ScheduleParams,
};
use crate::chimera::{lower_problem, Embedding};
use crate::error::{check_len, Error, Result};
use crate::ising::{binary_to_spin, to_ising, SpinConfig};
use crate::metrics::{delta_probability_with, log_likelihood_with, reconstruction_score};
use crate::parallel::map_indexed;
use crate::rbm::{Layer, PairStatistics, RbmParams};
use crate::rng::SeedTree;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitConfig {
    pub mu: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            mu: 0.0,
            sigma: 2.0,
            lo: -3.0,
            hi: 3.0,
        }
    }
}

/// Draws every weight (row-major, masked entries included and then zeroed),
/// then every visible bias, then every hidden bias from the truncated
/// Gaussian by rejection.
pub fn init_rbm<R: Rng + ?Sized>(
    n_v: usize,
    n_h: usize,
    init: &InitConfig,
    mask: Option<Vec<bool>>,
    rng: &mut R,
) -> Result<RbmParams> {
    if !(init.hi > init.lo) {
        return Err(Error::param("init interval", format!("[{}, {}] is empty", init.lo, init.hi)));
    }
    if !(init.sigma > 0.0 && init.sigma.is_finite()) {
        return Err(Error::param("sigma", "must be positive"));
    }
    if !(init.lo..=init.hi).contains(&init.mu) {
        return Err(Error::param("mu", "must lie inside the truncation interval"));
    }
    let normal = Normal::new(init.mu, init.sigma).expect("checked sigma");
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| loop {
                let x = normal.sample(rng);
                if (init.lo..=init.hi).contains(&x) {
                    break x;
                }
            })
            .collect()
    };
    let mut w = draw(n_v * n_h);
    let a = draw(n_v);
    let b = draw(n_h);
    if let Some(m) = &mask {
        check_len("mask", n_v * n_h, m.len())?;
        for (x, &on) in w.iter_mut().zip(m) {
            if !on {
                *x = 0.0;
            }
        }
    }
    RbmParams::from_parts(n_v, n_h, w, a, b, mask)
}

/// The 80-connection mask for a 16+16 machine: visible group `i / 4` is
/// fully connected to hidden group `i / 4` (64 links), and visible `i` also
/// links to hidden `4 * ((i / 4 + 1) % 4) + i % 4` (16 links).
pub fn sparse_mask() -> Vec<bool> {
    let mut m = vec![false; 256];
    for i in 0..16 {
        let g = i / 4;
        for j in 4 * g..4 * g + 4 {
            m[i * 16 + j] = true;
        }
        m[i * 16 + 4 * ((g + 1) % 4) + i % 4] = true;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Classical { n_g: usize },
    Forward,
    Reverse,
}

impl Method {
    pub fn is_quantum(&self) -> bool {
        !matches!(self, Method::Classical { .. })
    }
}

/// Sampling resources for the annealing estimators.
#[derive(Clone, Debug)]
pub struct Annealer<'a> {
    pub embedding: &'a Embedding,
    pub emulator: EmulatorConfig,
    pub forward: ScheduleParams,
    pub reverse: ScheduleParams,
    pub cycles: usize,
    pub alpha: f64,
}

#[derive(Clone, Debug)]
pub struct NegativeEstimate {
    pub stats: PairStatistics,
    pub break_rate: Option<f64>,
    pub min_energy: f64,
    pub n_samples: usize,
}

fn pool(rbm: &RbmParams, batch: &SampleBatch) -> Result<NegativeEstimate> {
    if batch.is_empty() {
        return Err(Error::Empty("sample batch (every sample discarded)"));
    }
    let mut stats = PairStatistics::zeros(rbm.n_v(), rbm.n_h());
    let mut min_energy = f64::INFINITY;
    for c in batch.configs() {
        stats.add_binary(&c.v, &c.h);
        min_energy = min_energy.min(rbm.energy_unchecked(&c.v, &c.h));
    }
    stats.scale(1.0 / batch.len() as f64);
    Ok(NegativeEstimate {
        stats,
        break_rate: Some(batch.break_rate()),
        min_energy,
        n_samples: batch.len(),
    })
}

/// Reverse-anneal starts: cycles are split into `N_D` contiguous groups (the
/// first `cycles % N_D` groups one cycle longer); every cycle of group `k`
/// starts from data vector `k` with hidden units drawn once from their exact
/// conditional.
pub fn reverse_starts<R: Rng + ?Sized>(
    rbm: &RbmParams,
    dataset: &[Vec<u8>],
    cycles: usize,
    rng: &mut R,
) -> Result<Vec<SpinConfig>> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let n_d = dataset.len();
    let (base, extra) = (cycles / n_d, cycles % n_d);
    let mut starts = Vec::with_capacity(cycles);
    for (k, r) in dataset.iter().enumerate() {
        let group = base + usize::from(k < extra);
        let ph = rbm.conditional(Layer::Hidden, r)?;
        for _ in 0..group {
            let mut bits = r.clone();
            bits.extend(ph.iter().map(|&p| (rng.random::<f64>() < p) as u8));
            starts.push(binary_to_spin(&bits)?);
        }
    }
    Ok(starts)
}

/// Model expectations estimated by the chosen method.
pub fn negative_statistics<R: Rng + ?Sized>(
    rbm: &RbmParams,
    dataset: &[Vec<u8>],
    method: Method,
    annealer: Option<&Annealer<'_>>,
    rng: &mut R,
) -> Result<NegativeEstimate> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    match method {
        Method::Classical { n_g } => {
            let base = SeedTree::new(rng.random::<u64>());
            let finals = map_indexed(dataset.len(), |k| {
                rbm.gibbs_chain(&dataset[k], n_g, &mut base.child(k as u64).rng())
            });
            let mut stats = PairStatistics::zeros(rbm.n_v(), rbm.n_h());
            let mut min_energy = f64::INFINITY;
            for c in finals {
                let c = c?;
                stats.add_binary(&c.v, &c.h);
                min_energy = min_energy.min(rbm.energy_unchecked(&c.v, &c.h));
            }
            stats.scale(1.0 / dataset.len() as f64);
            Ok(NegativeEstimate {
                stats,
                break_rate: None,
                min_energy,
                n_samples: dataset.len(),
            })
        }
        Method::Forward | Method::Reverse => {
            let ann = annealer
                .ok_or_else(|| Error::Embedding("annealing methods need an embedding".into()))?;
            let logical = to_ising(rbm, ann.alpha)?;
            let physical = lower_problem(&logical, ann.embedding)?;
            let batch = if method == Method::Forward {
                let sched = make_schedule(ann.forward)?;
                forward_sample(&physical, &sched, ann.cycles, &ann.emulator, rng)?
            } else {
                let sched = make_schedule(ann.reverse)?;
                let starts = reverse_starts(rbm, dataset, ann.cycles, rng)?;
                reverse_sample(&physical, &starts, &sched, ann.cycles, &ann.emulator, rng)?
            };
            pool(rbm, &batch)
        }
    }
}

/// `w += eta (pos - neg)` on connected entries; biases likewise with the
/// layer means.
pub fn update_step(
    rbm: &RbmParams,
    pos: &PairStatistics,
    neg: &PairStatistics,
    eta: f64,
) -> Result<RbmParams> {
    for s in [pos, neg] {
        check_len("statistics visible size", rbm.n_v(), s.n_v)?;
        check_len("statistics hidden size", rbm.n_h(), s.n_h)?;
    }
    let mut next = rbm.clone();
    let n_h = rbm.n_h();
    next.update_weights(|i, j, w| *w += eta * (pos.vh[i * n_h + j] - neg.vh[i * n_h + j]));
    for (i, a) in next.visible_bias_mut().iter_mut().enumerate() {
        *a += eta * (pos.v_mean[i] - neg.v_mean[i]);
    }
    for (j, b) in next.hidden_bias_mut().iter_mut().enumerate() {
        *b += eta * (pos.h_mean[j] - neg.h_mean[j]);
    }
    Ok(next)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub eta: f64,
    pub method: Method,
    pub init: InitConfig,
    pub seed: u64,
    /// Log-likelihood and dataset-probability cadence (0 disables).
    pub ll_every: usize,
    /// Reconstruction cadence (0 disables).
    pub recon_every: usize,
    pub recon_n_g: usize,
    pub recon_trials: usize,
    pub recon_clamp: BTreeSet<usize>,
    /// Checkpoint cadence (0 disables).
    pub checkpoint_every: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta", "must be positive"));
        }
        if !(self.init.sigma > 0.0) {
            return Err(Error::param("sigma", "must be positive"));
        }
        if self.init.lo != -self.init.hi {
            return Err(Error::param("init interval", "must be symmetric about 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub checksum: u64,
    pub log_likelihood: Option<f64>,
    pub reconstruction: Option<f64>,
    pub delta_total: Option<f64>,
    pub delta_bottom_half: Option<f64>,
    pub per_image: Option<Vec<f64>>,
    /// Diagnostics of the sampling done in this epoch (absent for epoch 0).
    pub break_rate: Option<f64>,
    pub min_sample_energy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub checkpoints: Vec<(usize, RbmParams)>,
    pub final_rbm: RbmParams,
}

fn due(epoch: usize, every: usize) -> bool {
    every > 0 && epoch % every == 0
}

fn evaluate(
    rbm: &RbmParams,
    dataset: &[Vec<u8>],
    config: &TrainConfig,
    epoch: usize,
    tree: SeedTree,
    sampling: Option<&NegativeEstimate>,
) -> Result<EpochRecord> {
    let last = epoch == config.epochs;
    let mut rec = EpochRecord {
        epoch,
        checksum: rbm.checksum(),
        log_likelihood: None,
        reconstruction: None,
        delta_total: None,
        delta_bottom_half: None,
        per_image: None,
        break_rate: sampling.and_then(|s| s.break_rate),
        min_sample_energy: sampling.map(|s| s.min_energy),
    };
    if due(epoch, config.ll_every) || (last && config.ll_every > 0) {
        let log_z = rbm.exact_log_partition()?;
        rec.log_likelihood = Some(log_likelihood_with(rbm, dataset, log_z)?);
        let d = delta_probability_with(rbm, dataset, log_z)?;
        rec.delta_total = Some(d.total);
        rec.delta_bottom_half = Some(d.bottom_half);
        rec.per_image = Some(d.per_image);
    }
    if due(epoch, config.recon_every) || (last && config.recon_every > 0) {
        let mut rng = tree.path(&[2, epoch as u64]).rng();
        rec.reconstruction = Some(reconstruction_score(
            rbm,
            dataset,
            &config.recon_clamp,
            config.recon_n_g,
            config.recon_trials,
            &mut rng,
        )?);
    }
    Ok(rec)
}

fn is_recorded(epoch: usize, config: &TrainConfig) -> bool {
    epoch == 0
        || epoch == config.epochs
        || due(epoch, config.ll_every)
        || due(epoch, config.recon_every)
}

/// Runs `config.epochs` full-batch updates starting from a fresh
/// initialisation (with `mask` applied when given). `observer` sees every
/// record as it is produced.
pub fn train(
    config: &TrainConfig,
    dataset: &[Vec<u8>],
    n_h: usize,
    mask: Option<Vec<bool>>,
    annealer: Option<&Annealer<'_>>,
    mut observer: impl FnMut(&EpochRecord, &RbmParams),
) -> Result<TrainHistory> {
    config.validate()?;
    let n_v = dataset.first().ok_or(Error::Empty("dataset"))?.len();
    if config.method.is_quantum() && annealer.is_none() {
        return Err(Error::Embedding("annealing methods need an embedding".into()));
    }
    let tree = SeedTree::new(config.seed);
    let mut rbm = init_rbm(n_v, n_h, &config.init, mask, &mut tree.child(0).rng())?;
    let mut records = Vec::new();
    let mut checkpoints = Vec::new();

    let rec = evaluate(&rbm, dataset, config, 0, tree, None)?;
    observer(&rec, &rbm);
    records.push(rec);
    if config.checkpoint_every > 0 {
        checkpoints.push((0, rbm.clone()));
    }

    for epoch in 1..=config.epochs {
        let pos = rbm.positive_statistics(dataset)?;
        let mut rng = tree.path(&[1, epoch as u64]).rng();
        let neg = negative_statistics(&rbm, dataset, config.method, annealer, &mut rng)?;
        rbm = update_step(&rbm, &pos, &neg.stats, config.eta)?;
        if is_recorded(epoch, config) {
            let rec = evaluate(&rbm, dataset, config, epoch, tree, Some(&neg))?;
            observer(&rec, &rbm);
            records.push(rec);
        }
        if due(epoch, config.checkpoint_every) {
            checkpoints.push((epoch, rbm.clone()));
        }
    }
    Ok(TrainHistory {
        records,
        checkpoints,
        final_rbm: rbm,
    })
}
