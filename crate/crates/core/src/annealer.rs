//! Classical emulator of an annealer's sampling behaviour.
//!
//! The transverse field is not simulated. Its effect is stood in for by a
//! temperature ladder: at schedule position `s` the physical problem is
//! sampled by single-spin Metropolis at inverse temperature
//!
//! ```text
//! beta(s) = min(s / (t_eff * (1 - s + 1e-3)), 50 / t_eff)
//! ```
//!
//! Time maps to sweeps through `sweeps_per_microsecond`; sweep `k` of `n`
//! uses `s` at the midpoint of its time slice.
//!
//! Chains also move as a whole. Every dynamic sweep is followed by one
//! attempt per chain to flip all of its qubits, made with probability
//! `1 / (1 + exp((s - tunnel_s) / tunnel_width))` and accepted by Metropolis
//! on the non-chain terms. This stands in for collective tunnelling of a
//! logical qubit, which dies out early in the anneal; past `tunnel_s` a
//! chain changes sign only through single-qubit domain-wall moves.
//!
//! Dynamics freeze once `beta(s) >= 1 / t_eff`. Past that point the only
//! allowed moves are chain repairs: a qubit touching a broken chain edge may
//! flip if the flip does not increase the number of broken chain edges, with
//! the usual Metropolis acceptance. Repairs stop once every chain is intact,
//! so `s = 1` is a fixed point and a reverse schedule whose dip never leaves
//! `s = 1` returns its start unchanged.
//!
//! Every (cycle, copy) pair runs on its own random stream derived from one
//! draw of the caller's generator, so a batch is reproducible and does not
//! depend on the thread count.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::chimera::{resolve_chains, ChainPolicy, CopyProblem, PhysicalProblem, PhysicalSample};
use crate::error::{Error, Result};
use crate::ising::{spins_to_config, SpinConfig};
use crate::parallel::map_indexed;
use crate::rbm::BinaryConfig;
use crate::rng::SeedTree;

const EPS: f64 = 1e-3;
const BETA_CAP: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleKind {
    Forward,
    Reverse,
}

/// Piecewise-linear `s(t)` with `t` in microseconds.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealSchedule {
    kind: ScheduleKind,
    points: Vec<(f64, f64)>,
}

impl AnnealSchedule {
    /// Forward schedules run from `s = 0` to `s = 1`. Reverse schedules start
    /// and end at `s = 1` and stay in `(0, 1]` in between.
    pub fn new(kind: ScheduleKind, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Schedule("need at least two breakpoints".into()));
        }
        if points[0].0 != 0.0 {
            return Err(Error::Schedule("first breakpoint must be at t = 0".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) || !w[1].0.is_finite() {
                return Err(Error::Schedule("times must be strictly increasing".into()));
            }
        }
        if points.iter().any(|&(_, s)| !(0.0..=1.0).contains(&s)) {
            return Err(Error::Schedule("s must lie in [0, 1]".into()));
        }
        let (first, last) = (points[0].1, points[points.len() - 1].1);
        match kind {
            ScheduleKind::Forward => {
                if first != 0.0 || last != 1.0 {
                    return Err(Error::Schedule("forward schedules go from s = 0 to s = 1".into()));
                }
            }
            ScheduleKind::Reverse => {
                if first != 1.0 || last != 1.0 {
                    return Err(Error::Schedule("reverse schedules start and end at s = 1".into()));
                }
                if points.iter().any(|&(_, s)| s <= 0.0) {
                    return Err(Error::Schedule("reverse schedules must keep s > 0".into()));
                }
            }
        }
        Ok(Self { kind, points })
    }

    /// `[(0, 0), (t_f, 1)]`.
    pub fn forward(t_f: f64) -> Result<Self> {
        if !(t_f > 0.0 && t_f.is_finite()) {
            return Err(Error::param("anneal_time", "must be positive"));
        }
        Self::new(ScheduleKind::Forward, vec![(0.0, 0.0), (t_f, 1.0)])
    }

    /// Down to `s_pause` in `t_down`, hold for `t_pause`, back up in `t_up`.
    pub fn reverse(t_down: f64, t_pause: f64, t_up: f64, s_pause: f64) -> Result<Self> {
        for (name, t) in [("reverse_time", t_down), ("pause_time", t_pause), ("forward_time", t_up)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if !(s_pause > 0.0 && s_pause < 1.0) {
            return Err(Error::param("s_pause", format!("must lie in (0, 1), got {s_pause}")));
        }
        Self::new(
            ScheduleKind::Reverse,
            vec![
                (0.0, 1.0),
                (t_down, s_pause),
                (t_down + t_pause, s_pause),
                (t_down + t_pause + t_up, 1.0),
            ],
        )
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn duration(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// `s` at time `t`, clamped to the schedule's span.
    pub fn s_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.points[0].1;
        }
        for w in self.points.windows(2) {
            let ((t0, s0), (t1, s1)) = (w[0], w[1]);
            if t <= t1 {
                return s0 + (s1 - s0) * (t - t0) / (t1 - t0);
            }
        }
        self.points[self.points.len() - 1].1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleParams {
    Forward { anneal_time: f64 },
    Reverse {
        reverse_time: f64,
        pause_time: f64,
        forward_time: f64,
        s_pause: f64,
    },
}

impl ScheduleParams {
    pub const DEFAULT_FORWARD: Self = Self::Forward { anneal_time: 2.0 };
    pub const DEFAULT_REVERSE: Self = Self::Reverse {
        reverse_time: 1.0,
        pause_time: 18.0,
        forward_time: 1.0,
        s_pause: 0.2,
    };
}

pub fn make_schedule(params: ScheduleParams) -> Result<AnnealSchedule> {
    match params {
        ScheduleParams::Forward { anneal_time } => AnnealSchedule::forward(anneal_time),
        ScheduleParams::Reverse {
            reverse_time,
            pause_time,
            forward_time,
            s_pause,
        } => AnnealSchedule::reverse(reverse_time, pause_time, forward_time, s_pause),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmulatorConfig {
    /// Device temperature in units of the physical couplings.
    pub t_eff: f64,
    pub sweeps_per_microsecond: f64,
    pub field_noise_sd: f64,
    pub coupling_noise_sd: f64,
    pub chain_policy: ChainPolicy,
    /// Schedule position around which whole-chain (tunnelling) flips die
    /// out. Each dynamic sweep attempts every chain with probability
    /// `1 / (1 + exp((s - tunnel_s) / tunnel_width))`; `tunnel_s <= 0`
    /// disables them.
    pub tunnel_s: f64,
    /// Width of the tunnelling cut-off; 0 gives a hard step at `tunnel_s`.
    pub tunnel_width: f64,
}

impl Default for EmulatorConfig {
    fn default() -> Self {
        Self {
            t_eff: 0.056,
            sweeps_per_microsecond: 50.0,
            field_noise_sd: 0.0,
            coupling_noise_sd: 0.0,
            chain_policy: ChainPolicy::MajorityVote,
            tunnel_s: 0.13,
            tunnel_width: 0.01,
        }
    }
}

impl EmulatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_eff > 0.0 && self.t_eff.is_finite()) {
            return Err(Error::param("t_eff", "must be positive"));
        }
        if !(self.sweeps_per_microsecond >= 1.0 && self.sweeps_per_microsecond.is_finite()) {
            return Err(Error::param("sweeps_per_microsecond", "must be at least 1"));
        }
        if !(self.field_noise_sd >= 0.0) || !(self.coupling_noise_sd >= 0.0) {
            return Err(Error::param("noise_sd", "must be non-negative"));
        }
        if !self.tunnel_s.is_finite() || !(self.tunnel_width >= 0.0 && self.tunnel_width.is_finite()) {
            return Err(Error::param("tunnel", "tunnel_s must be finite and tunnel_width >= 0"));
        }
        Ok(())
    }

    /// Inverse temperature at schedule position `s`.
    pub fn beta(&self, s: f64) -> f64 {
        (s / (self.t_eff * (1.0 - s + EPS))).min(BETA_CAP / self.t_eff)
    }

    /// Probability that a dynamic sweep at `s` attempts a whole-chain flip.
    pub fn tunnel_rate(&self, s: f64) -> f64 {
        if self.tunnel_s <= 0.0 {
            0.0
        } else if self.tunnel_width <= 0.0 {
            if s < self.tunnel_s {
                1.0
            } else {
                0.0
            }
        } else {
            1.0 / (1.0 + ((s - self.tunnel_s) / self.tunnel_width).exp())
        }
    }

    /// Per-sweep inverse temperatures; `None` marks a frozen sweep.
    pub fn ladder(&self, sched: &AnnealSchedule) -> Vec<Option<f64>> {
        self.steps(sched)
            .into_iter()
            .map(|st| (!st.frozen).then_some(st.beta))
            .collect()
    }

    fn steps(&self, sched: &AnnealSchedule) -> Vec<Step> {
        let n = ((sched.duration() * self.sweeps_per_microsecond).round() as usize).max(1);
        let dt = sched.duration() / n as f64;
        let freeze = 1.0 / self.t_eff;
        (0..n)
            .map(|k| {
                let s = sched.s_at((k as f64 + 0.5) * dt);
                let beta = self.beta(s);
                Step {
                    beta,
                    frozen: beta >= freeze,
                    tunnel: self.tunnel_rate(s),
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
struct Step {
    beta: f64,
    frozen: bool,
    tunnel: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogicalSample {
    pub config: BinaryConfig,
    pub copy: usize,
    pub cycle: usize,
    pub breaks: usize,
    /// Hamming distance between the logical start of the anneal and the
    /// output. For forward anneals the start is the majority reading of the
    /// random initial state.
    pub start_distance: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub samples: Vec<LogicalSample>,
    pub schedule: AnnealSchedule,
    /// Anneals performed (cycles times copies).
    pub attempted: usize,
    pub discarded: usize,
    pub total_breaks: usize,
    pub n_units: usize,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Broken chains per chain read out, over every anneal including discarded
    /// ones.
    pub fn break_rate(&self) -> f64 {
        if self.attempted == 0 {
            return 0.0;
        }
        self.total_breaks as f64 / (self.attempted * self.n_units) as f64
    }

    pub fn mean_start_distance(&self) -> f64 {
        if self.samples.is_empty() {
            return f64::NAN;
        }
        let total: usize = self.samples.iter().map(|s| s.start_distance).sum();
        total as f64 / self.samples.len() as f64
    }

    pub fn configs(&self) -> impl Iterator<Item = &BinaryConfig> {
        self.samples.iter().map(|s| &s.config)
    }

    /// `copy,breaks,v,h` with bit strings for `v` and `h`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("copy,breaks,v,h\n");
        for s in &self.samples {
            let bits = |x: &[u8]| x.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect::<String>();
            let _ = writeln!(out, "{},{},{},{}", s.copy, s.breaks, bits(&s.config.v), bits(&s.config.h));
        }
        out
    }
}

/// Compressed adjacency of one copy.
#[derive(Clone, Debug)]
struct Lattice {
    fields: Vec<f64>,
    offsets: Vec<usize>,
    nbr: Vec<u32>,
    coupling: Vec<f64>,
    is_chain: Vec<bool>,
    has_chain_edges: bool,
    /// Chains longer than one qubit, for collective moves.
    chains: Vec<Vec<usize>>,
}

impl Lattice {
    fn new(copy: &CopyProblem) -> Self {
        let n = copy.n_qubits();
        let mut lists: Vec<Vec<(u32, f64, bool)>> = vec![Vec::new(); n];
        for c in &copy.couplers {
            lists[c.a].push((c.b as u32, c.value, c.chain));
            lists[c.b].push((c.a as u32, c.value, c.chain));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let (mut nbr, mut coupling, mut is_chain) = (Vec::new(), Vec::new(), Vec::new());
        offsets.push(0);
        for list in lists {
            for (b, v, c) in list {
                nbr.push(b);
                coupling.push(v);
                is_chain.push(c);
            }
            offsets.push(nbr.len());
        }
        Self {
            fields: copy.fields.clone(),
            offsets,
            nbr,
            coupling,
            has_chain_edges: is_chain.iter().any(|&c| c),
            is_chain,
            chains: copy.chains.iter().filter(|c| c.len() > 1).cloned().collect(),
        }
    }

    /// Gaussian perturbation of fields and non-chain couplers; both directions
    /// of an edge get the same draw.
    fn perturbed<R: Rng + ?Sized>(&self, copy: &CopyProblem, cfg: &EmulatorConfig, rng: &mut R) -> Self {
        let mut noisy = copy.clone();
        if cfg.field_noise_sd > 0.0 {
            let d = Normal::new(0.0, cfg.field_noise_sd).expect("valid sd");
            for h in &mut noisy.fields {
                *h += d.sample(rng);
            }
        }
        if cfg.coupling_noise_sd > 0.0 {
            let d = Normal::new(0.0, cfg.coupling_noise_sd).expect("valid sd");
            for c in noisy.couplers.iter_mut().filter(|c| !c.chain) {
                c.value += d.sample(rng);
            }
        }
        Self::new(&noisy)
    }

    fn local_field(&self, q: usize, spins: &[i8]) -> f64 {
        let mut f = self.fields[q];
        for e in self.offsets[q]..self.offsets[q + 1] {
            f += self.coupling[e] * spins[self.nbr[e] as usize] as f64;
        }
        f
    }

    fn sweep<R: Rng + ?Sized>(&self, spins: &mut [i8], beta: f64, rng: &mut R) {
        for q in 0..spins.len() {
            let de = -2.0 * spins[q] as f64 * self.local_field(q, spins);
            if accept(de, beta, rng) {
                spins[q] = -spins[q];
            }
        }
    }

    /// One Metropolis attempt per chain to flip all of its qubits together.
    /// Chain edges are internal to a chain, so only the other terms change.
    fn chain_sweep<R: Rng + ?Sized>(&self, spins: &mut [i8], beta: f64, rate: f64, rng: &mut R) {
        for chain in &self.chains {
            if rate < 1.0 && rng.random::<f64>() >= rate {
                continue;
            }
            let mut de = 0.0;
            for &q in chain {
                let mut f = self.fields[q];
                for e in self.offsets[q]..self.offsets[q + 1] {
                    if !self.is_chain[e] {
                        f += self.coupling[e] * spins[self.nbr[e] as usize] as f64;
                    }
                }
                de -= 2.0 * spins[q] as f64 * f;
            }
            if accept(de, beta, rng) {
                for &q in chain {
                    spins[q] = -spins[q];
                }
            }
        }
    }

    /// Chain-repair sweep; returns false when no chain edge is broken.
    fn repair_sweep<R: Rng + ?Sized>(&self, spins: &mut [i8], beta: f64, rng: &mut R) -> bool {
        let mut any = false;
        for q in 0..spins.len() {
            let (mut broken, mut intact) = (0, 0);
            for e in self.offsets[q]..self.offsets[q + 1] {
                if self.is_chain[e] {
                    if spins[self.nbr[e] as usize] != spins[q] {
                        broken += 1;
                    } else {
                        intact += 1;
                    }
                }
            }
            if broken == 0 || intact > broken {
                continue;
            }
            any = true;
            let de = -2.0 * spins[q] as f64 * self.local_field(q, spins);
            if accept(de, beta, rng) {
                spins[q] = -spins[q];
            }
        }
        any
    }

    fn run<R: Rng + ?Sized>(&self, spins: &mut [i8], ladder: &[Step], rng: &mut R) {
        let mut settled = false;
        for &Step { beta, frozen, tunnel } in ladder {
            if !frozen {
                self.sweep(spins, beta, rng);
                if tunnel > 0.0 && !self.chains.is_empty() {
                    self.chain_sweep(spins, beta, tunnel, rng);
                }
                settled = false;
            } else if self.has_chain_edges && !settled {
                settled = !self.repair_sweep(spins, beta, rng);
            }
        }
    }
}

/// Metropolis test. Moves beyond `exp(-40)` are rejected without a draw.
#[inline]
fn accept<R: Rng + ?Sized>(de: f64, beta: f64, rng: &mut R) -> bool {
    let x = beta * de;
    x <= 0.0 || (x < 40.0 && rng.random::<f64>() < (-x).exp())
}

fn hamming(a: &[i8], b: &[i8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

enum Start<'a> {
    Random,
    Given(&'a [SpinConfig]),
}

fn run_batch<R: Rng + ?Sized>(
    p: &PhysicalProblem,
    sched: &AnnealSchedule,
    start: Start<'_>,
    cycles: usize,
    cfg: &EmulatorConfig,
    rng: &mut R,
) -> Result<SampleBatch> {
    cfg.validate()?;
    if p.copies.is_empty() {
        return Err(Error::Empty("physical problem copies"));
    }
    let base = SeedTree::new(rng.random::<u64>());
    let ladder = cfg.steps(sched);
    let lattices: Vec<Lattice> = p.copies.iter().map(Lattice::new).collect();
    let n_copies = p.n_copies();
    let noisy = cfg.field_noise_sd > 0.0 || cfg.coupling_noise_sd > 0.0;

    let results = map_indexed(cycles * n_copies, |task| {
        let (cycle, copy) = (task / n_copies, task % n_copies);
        let mut trng = base.path(&[cycle as u64, copy as u64]).rng();
        let problem = &p.copies[copy];
        let owned;
        let lattice = if noisy {
            owned = lattices[copy].perturbed(problem, cfg, &mut trng);
            &owned
        } else {
            &lattices[copy]
        };
        let (mut spins, logical_start) = match &start {
            Start::Random => {
                let spins: Vec<i8> = (0..problem.n_qubits())
                    .map(|_| if trng.random::<bool>() { 1 } else { -1 })
                    .collect();
                let init = PhysicalSample { copy, spins: spins.clone() };
                let read = resolve_chains(&init, &problem.chains, ChainPolicy::MajorityVote, &mut trng);
                (spins, read.spins.expect("majority vote always reads").s)
            }
            Start::Given(starts) => {
                let s = &starts[cycle % starts.len()].s;
                (problem.spread(s), s.clone())
            }
        };
        lattice.run(&mut spins, &ladder, &mut trng);
        let sample = PhysicalSample { copy, spins };
        let read = resolve_chains(&sample, &problem.chains, cfg.chain_policy, &mut trng);
        let out = read.spins.map(|s| {
            let d = hamming(&s.s, &logical_start);
            (spins_to_config(&s, p.n_v), d)
        });
        (cycle, copy, read.breaks, out)
    });

    let mut samples = Vec::with_capacity(results.len());
    let (mut discarded, mut total_breaks) = (0, 0);
    for (cycle, copy, breaks, out) in results {
        total_breaks += breaks;
        match out {
            Some((config, start_distance)) => samples.push(LogicalSample {
                config,
                copy,
                cycle,
                breaks,
                start_distance,
            }),
            None => discarded += 1,
        }
    }
    Ok(SampleBatch {
        samples,
        schedule: sched.clone(),
        attempted: cycles * n_copies,
        discarded,
        total_breaks,
        n_units: p.n_units(),
    })
}

/// Anneals every copy `cycles` times from uniformly random spins.
pub fn forward_sample<R: Rng + ?Sized>(
    p: &PhysicalProblem,
    sched: &AnnealSchedule,
    cycles: usize,
    cfg: &EmulatorConfig,
    rng: &mut R,
) -> Result<SampleBatch> {
    if sched.kind() != ScheduleKind::Forward {
        return Err(Error::Schedule("forward_sample needs a forward schedule".into()));
    }
    run_batch(p, sched, Start::Random, cycles, cfg, rng)
}

/// Anneals every copy `cycles` times from a classical start. Cycle `c` uses
/// `starts[c % starts.len()]` on all copies.
pub fn reverse_sample<R: Rng + ?Sized>(
    p: &PhysicalProblem,
    starts: &[SpinConfig],
    sched: &AnnealSchedule,
    cycles: usize,
    cfg: &EmulatorConfig,
    rng: &mut R,
) -> Result<SampleBatch> {
    if sched.kind() != ScheduleKind::Reverse {
        return Err(Error::Schedule("reverse_sample needs a reverse schedule".into()));
    }
    if starts.is_empty() {
        return Err(Error::Empty("reverse start list"));
    }
    for s in starts {
        crate::error::check_len("reverse start", p.n_units(), s.len())?;
    }
    run_batch(p, sched, Start::Given(starts), cycles, cfg, rng)
}
