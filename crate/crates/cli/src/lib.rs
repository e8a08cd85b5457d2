//! Subcommand implementations for the `rbm-anneal` binary.
//!
//! Randomness: every command derives its streams from `run.seed` through
//! [`SeedTree`]. Training uses the tree rooted at the seed directly; `eval`
//! uses child 3 and `sample` uses child 4, so their outputs never share a
//! stream with a training run of the same seed.

pub mod config;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rbm_anneal::annealer::{forward_sample, make_schedule, reverse_sample, SampleBatch};
use rbm_anneal::bas::{clamp_mask, generate_bas, ClampRegion};
use rbm_anneal::chimera::{embed_rbm, lower_problem, parse_fault_list, Embedding, HardwareGraph, DEFAULT_FAULTS};
use rbm_anneal::ising::to_ising;
use rbm_anneal::metrics::{delta_probability_with, energy_histogram, log_likelihood_with, reconstruction_exact, reconstruction_score};
use rbm_anneal::rbm::RbmParams;
use rbm_anneal::rng::SeedTree;
use rbm_anneal::trainer::{reverse_starts, sparse_mask, train, Annealer, EpochRecord, TrainConfig, TrainHistory};

pub use config::{ConfigError, ExperimentConfig, MaskKind, MethodKind};
use config::{header_line, preset, Faults};

/// Resolves `--config`: a preset name, a config file, or any output file
/// carrying a `# config` header.
pub fn load_config(spec: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = match preset(spec) {
        Some(text) => text.to_string(),
        None => fs::read_to_string(spec).with_context(|| format!("reading config `{spec}`"))?,
    };
    let source = header_line(&text).unwrap_or(&text);
    let mut cfg = ExperimentConfig::parse(source)?;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| ConfigError { key: o.clone(), message: "overrides look like section.key=value".into() })?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn dataset(cfg: &ExperimentConfig) -> Result<Vec<Vec<u8>>> {
    Ok(generate_bas(cfg.bas_m)?.images)
}

/// Pixels held fixed during reconstruction: the outer border, leaving the
/// central block free.
pub fn reconstruction_clamp(cfg: &ExperimentConfig) -> Result<BTreeSet<usize>> {
    Ok(clamp_mask(cfg.bas_m, &ClampRegion::OuterBorder)?)
}

pub fn hardware(cfg: &ExperimentConfig) -> Result<HardwareGraph> {
    let g = HardwareGraph::chimera(cfg.grid, cfg.grid);
    let faults = match &cfg.faults {
        Faults::None => Vec::new(),
        Faults::Default => parse_fault_list(DEFAULT_FAULTS)?,
        Faults::File(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading fault list `{path}`"))?;
            parse_fault_list(&text)?
        }
    };
    Ok(g.with_faults(faults)?)
}

pub fn embedding(cfg: &ExperimentConfig) -> Result<Embedding> {
    let g = hardware(cfg)?;
    let e = embed_rbm(&g, cfg.bas_m * cfg.bas_m, cfg.n_h, cfg.chain_coupling)?;
    if cfg.copies == 0 {
        return Ok(e);
    }
    if cfg.copies > e.n_copies() {
        return Err(rbm_anneal::Error::Placement {
            reason: format!("{} copies requested, the chip holds {}", cfg.copies, e.n_copies()),
            blocking: g.faulty().iter().copied().collect(),
        }
        .into());
    }
    Ok(e.truncated(cfg.copies))
}

fn annealer<'a>(cfg: &ExperimentConfig, e: &'a Embedding) -> Annealer<'a> {
    Annealer {
        embedding: e,
        emulator: cfg.emulator,
        forward: cfg.forward_schedule(),
        reverse: cfg.reverse_schedule(),
        cycles: cfg.cycles,
        alpha: cfg.alpha,
    }
}

pub fn train_config(cfg: &ExperimentConfig) -> Result<TrainConfig> {
    Ok(TrainConfig {
        epochs: cfg.epochs,
        eta: cfg.eta,
        method: cfg.method(),
        init: cfg.init,
        seed: cfg.seed,
        ll_every: cfg.ll_every,
        recon_every: cfg.recon_every,
        recon_n_g: cfg.recon_n_g,
        recon_trials: cfg.recon_trials,
        recon_clamp: reconstruction_clamp(cfg)?,
        checkpoint_every: cfg.checkpoint_every,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.10}")).unwrap_or_default()
}

pub const HISTORY_COLUMNS: &str =
    "epoch,log_likelihood,reconstruction,delta_total,delta_bottom_half,break_rate,min_sample_energy,checksum";

fn history_row(r: &EpochRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{:016x}\n",
        r.epoch,
        opt(r.log_likelihood),
        opt(r.reconstruction),
        opt(r.delta_total),
        opt(r.delta_bottom_half),
        opt(r.break_rate),
        opt(r.min_sample_energy),
        r.checksum
    )
}

/// Trains per the configuration without writing anything.
pub fn train_history(cfg: &ExperimentConfig, observer: impl FnMut(&EpochRecord, &RbmParams)) -> Result<TrainHistory> {
    let data = dataset(cfg)?;
    let tc = train_config(cfg)?;
    let mask = match cfg.mask {
        MaskKind::Complete => None,
        MaskKind::Sparse => Some(sparse_mask()),
    };
    let emb = if tc.method.is_quantum() { Some(embedding(cfg)?) } else { None };
    let ann = emb.as_ref().map(|e| annealer(cfg, e));
    Ok(train(&tc, &data, cfg.n_h, mask, ann.as_ref(), observer)?)
}

/// Files written by [`run_train`].
#[derive(Debug, Clone)]
pub struct TrainOutputs {
    pub history: PathBuf,
    pub per_image: PathBuf,
    pub final_rbm: PathBuf,
    pub checkpoints: Vec<PathBuf>,
}

/// Trains per the configuration and writes `history.csv`, `per_image.csv`,
/// `final.rbm` and `checkpoints/epoch_NNNN.rbm` into `out`. `progress` sees
/// each record as it is produced.
pub fn run_train(cfg: &ExperimentConfig, out: &Path, mut progress: impl FnMut(&EpochRecord)) -> Result<TrainOutputs> {
    let data = dataset(cfg)?;
    let header = cfg.header();
    let mut history = format!("{header}\n{HISTORY_COLUMNS}\n");
    let mut per_image = format!("{header}\nepoch");
    for k in 0..data.len() {
        write!(per_image, ",p{k}")?;
    }
    per_image.push('\n');

    let h = train_history(cfg, |rec, _| {
        history.push_str(&history_row(rec));
        if let Some(p) = &rec.per_image {
            per_image.push_str(&rec.epoch.to_string());
            for x in p {
                per_image.push_str(&format!(",{x:.10e}"));
            }
            per_image.push('\n');
        }
        progress(rec);
    })?;

    fs::create_dir_all(out).with_context(|| format!("creating `{}`", out.display()))?;
    let outputs = TrainOutputs {
        history: out.join("history.csv"),
        per_image: out.join("per_image.csv"),
        final_rbm: out.join("final.rbm"),
        checkpoints: h
            .checkpoints
            .iter()
            .map(|(epoch, _)| out.join("checkpoints").join(format!("epoch_{epoch:04}.rbm")))
            .collect(),
    };
    fs::write(&outputs.history, history)?;
    fs::write(&outputs.per_image, per_image)?;
    fs::write(&outputs.final_rbm, format!("{header}\n{}", h.final_rbm.to_text()))?;
    if !h.checkpoints.is_empty() {
        fs::create_dir_all(out.join("checkpoints"))?;
    }
    for ((_, rbm), path) in h.checkpoints.iter().zip(&outputs.checkpoints) {
        fs::write(path, format!("{header}\n{}", rbm.to_text()))?;
    }
    Ok(outputs)
}

pub fn load_rbm(path: &Path) -> Result<RbmParams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading `{}`", path.display()))?;
    RbmParams::from_text(&text).with_context(|| format!("parsing `{}`", path.display()))
}

fn check_shape(cfg: &ExperimentConfig, rbm: &RbmParams) -> Result<()> {
    if rbm.n_v() != cfg.bas_m * cfg.bas_m || rbm.n_h() != cfg.n_h {
        bail!(
            "checkpoint is {}+{} but the configuration describes {}+{}",
            rbm.n_v(),
            rbm.n_h(),
            cfg.bas_m * cfg.bas_m,
            cfg.n_h
        );
    }
    Ok(())
}

/// `metric,value` table: exact log-likelihood, dataset probability, Monte
/// Carlo and exact reconstruction.
pub fn run_eval(cfg: &ExperimentConfig, rbm: &RbmParams) -> Result<String> {
    check_shape(cfg, rbm)?;
    let data = dataset(cfg)?;
    let clamp = reconstruction_clamp(cfg)?;
    let log_z = rbm.exact_log_partition()?;
    let ll = log_likelihood_with(rbm, &data, log_z)?;
    let d = delta_probability_with(rbm, &data, log_z)?;
    let mut rng = SeedTree::new(cfg.seed).child(3).rng();
    let rec = reconstruction_score(rbm, &data, &clamp, cfg.recon_n_g, cfg.recon_trials, &mut rng)?;
    let rec_exact = reconstruction_exact(rbm, &data, &clamp)?;
    let mut out = format!("{}\nmetric,value\n", cfg.header());
    writeln!(out, "log_z,{log_z:.10}")?;
    writeln!(out, "log_likelihood,{ll:.10}")?;
    writeln!(out, "delta_total,{:.10}", d.total)?;
    writeln!(out, "delta_bottom_half,{:.10}", d.bottom_half)?;
    writeln!(out, "reconstruction,{rec:.10}")?;
    writeln!(out, "reconstruction_exact,{rec_exact:.10}")?;
    writeln!(out, "checksum,{:016x}", rbm.checksum())?;
    Ok(out)
}

/// Draws `anneal.cycles` annealing cycles for the checkpoint under the
/// configured method (forward or reverse).
pub fn sample_batch(cfg: &ExperimentConfig, rbm: &RbmParams) -> Result<SampleBatch> {
    check_shape(cfg, rbm)?;
    let e = embedding(cfg)?;
    let physical = lower_problem(&to_ising(rbm, cfg.alpha)?, &e)?;
    let mut rng = SeedTree::new(cfg.seed).child(4).rng();
    Ok(match cfg.method {
        MethodKind::Reverse => {
            let sched = make_schedule(cfg.reverse_schedule())?;
            let starts = reverse_starts(rbm, &dataset(cfg)?, cfg.cycles, &mut rng)?;
            reverse_sample(&physical, &starts, &sched, cfg.cycles, &cfg.emulator, &mut rng)?
        }
        MethodKind::Forward => {
            let sched = make_schedule(cfg.forward_schedule())?;
            forward_sample(&physical, &sched, cfg.cycles, &cfg.emulator, &mut rng)?
        }
        MethodKind::Classical => bail!("`sample` needs run.method = forward or reverse"),
    })
}

/// Sample CSV, or the energy histogram of the batch when `bins` is given.
pub fn run_sample(cfg: &ExperimentConfig, rbm: &RbmParams, bins: Option<usize>) -> Result<String> {
    let batch = sample_batch(cfg, rbm)?;
    let body = match bins {
        Some(bins) => {
            let h = energy_histogram(rbm, batch.configs(), bins)?;
            format!("# min_energy {:.6}\n{}", h.min_energy, h.to_csv())
        }
        None => batch.to_csv(),
    };
    Ok(format!("{}\n{body}", cfg.header()))
}

/// One row of the `compare` table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub method: String,
    pub seed: u64,
    pub final_epoch: usize,
    pub final_ll: Option<f64>,
    pub best_ll: Option<f64>,
    pub final_delta: Option<f64>,
    pub final_bottom_half: Option<f64>,
    pub final_reconstruction: Option<f64>,
}

/// Reads a `history.csv` written by [`run_train`].
pub fn summarize_history(label: &str, text: &str) -> Result<RunSummary> {
    let header = header_line(text).with_context(|| format!("`{label}` has no config header"))?;
    let cfg = ExperimentConfig::parse(header)?;
    let mut s = RunSummary {
        label: label.to_string(),
        method: cfg.method.name().to_string(),
        seed: cfg.seed,
        final_epoch: 0,
        final_ll: None,
        best_ll: None,
        final_delta: None,
        final_bottom_half: None,
        final_reconstruction: None,
    };
    let parse = |f: &str| -> Result<Option<f64>> {
        if f.is_empty() {
            Ok(None)
        } else {
            Ok(Some(f.parse::<f64>().with_context(|| format!("bad number `{f}` in `{label}`"))?))
        }
    };
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("epoch")) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != HISTORY_COLUMNS.split(',').count() {
            bail!("`{label}`: malformed history row `{line}`");
        }
        s.final_epoch = f[0].parse().with_context(|| format!("bad epoch in `{label}`"))?;
        if let Some(ll) = parse(f[1])? {
            s.final_ll = Some(ll);
            s.best_ll = Some(s.best_ll.map_or(ll, |b: f64| b.max(ll)));
        }
        if let Some(r) = parse(f[2])? {
            s.final_reconstruction = Some(r);
        }
        if let Some(d) = parse(f[3])? {
            s.final_delta = Some(d);
        }
        if let Some(b) = parse(f[4])? {
            s.final_bottom_half = Some(b);
        }
    }
    Ok(s)
}

/// Side-by-side summary of several histories.
pub fn run_compare(histories: &[PathBuf]) -> Result<String> {
    let mut out = String::from("run,method,seed,final_epoch,final_ll,best_ll,delta_total,delta_bottom_half,reconstruction\n");
    for path in histories {
        let text = fs::read_to_string(path).with_context(|| format!("reading `{}`", path.display()))?;
        let s = summarize_history(&path.display().to_string(), &text)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.label,
            s.method,
            s.seed,
            s.final_epoch,
            opt(s.final_ll),
            opt(s.best_ll),
            opt(s.final_delta),
            opt(s.final_bottom_half),
            opt(s.final_reconstruction)
        )?;
    }
    Ok(out)
}

/// Process exit code for an error: 2 for configuration problems, 3 for an
/// embedding that does not fit the chip, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.downcast_ref::<ConfigError>().is_some()) {
        return 2;
    }
    let placement = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<rbm_anneal::Error>(), Some(rbm_anneal::Error::Placement { .. })));
    if placement {
        3
    } else {
        1
    }
}
