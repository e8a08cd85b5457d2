//! Experiment configuration: a plain-text `key = value` file with
//! `[section]` headers. Unknown sections or keys are errors, missing keys
//! take their defaults.
//!
//! The resolved configuration is written back as a single comment line,
//! `# config section.key=value ...`, at the top of every output. That line is
//! itself a valid configuration file.

use std::collections::BTreeMap;
use std::fmt;

use rbm_anneal::annealer::{EmulatorConfig, ScheduleParams};
use rbm_anneal::chimera::ChainPolicy;
use rbm_anneal::trainer::{InitConfig, Method};

pub const HEADER_PREFIX: &str = "# config ";

/// A configuration problem tied to one key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodKind {
    Classical,
    Forward,
    Reverse,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Classical => "classical",
            MethodKind::Forward => "forward",
            MethodKind::Reverse => "reverse",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskKind {
    Complete,
    Sparse,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Faults {
    Default,
    None,
    File(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    // [run]
    pub method: MethodKind,
    pub seed: u64,
    pub epochs: usize,
    pub eta: f64,
    pub bas_m: usize,
    pub n_h: usize,
    pub mask: MaskKind,
    // [init]
    pub init: InitConfig,
    // [classical]
    pub n_g: usize,
    // [anneal]
    pub alpha: f64,
    pub cycles: usize,
    pub anneal_time: f64,
    pub reverse_time: f64,
    pub pause_time: f64,
    pub forward_time: f64,
    pub s_pause: f64,
    // [emulator]
    pub emulator: EmulatorConfig,
    // [embedding]
    pub chain_coupling: f64,
    pub grid: usize,
    pub faults: Faults,
    pub copies: usize,
    // [eval]
    pub ll_every: usize,
    pub recon_every: usize,
    pub recon_n_g: usize,
    pub recon_trials: usize,
    pub checkpoint_every: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: MethodKind::Classical,
            seed: 1,
            epochs: 1000,
            eta: 0.15,
            bas_m: 4,
            n_h: 16,
            mask: MaskKind::Complete,
            init: InitConfig::default(),
            n_g: 200,
            alpha: 0.32,
            cycles: 150,
            anneal_time: 2.0,
            reverse_time: 1.0,
            pause_time: 18.0,
            forward_time: 1.0,
            s_pause: 0.2,
            emulator: EmulatorConfig::default(),
            chain_coupling: -1.0,
            grid: 16,
            faults: Faults::Default,
            copies: 0,
            ll_every: 10,
            recon_every: 100,
            recon_n_g: 500,
            recon_trials: 100,
            checkpoint_every: 100,
        }
    }
}

pub const PRESETS: &[(&str, &str)] = &[
    ("paper_classical", include_str!("../presets/paper_classical.conf")),
    ("paper_forward", include_str!("../presets/paper_forward.conf")),
    ("paper_reverse", include_str!("../presets/paper_reverse.conf")),
    ("paper_sparse", include_str!("../presets/paper_sparse.conf")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| ConfigError::new(key, format!("cannot parse `{value}`: {e}")))
}

fn fmt_f64(x: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{x:?}")
}

impl ExperimentConfig {
    /// Parses a configuration file or a `# config` header line.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (key, value) in Self::pairs(text)? {
            cfg.set(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Flattens the text into `section.key` / value pairs in file order.
    fn pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
        let mut out = Vec::new();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            if let Some(rest) = raw.trim_start().strip_prefix(HEADER_PREFIX.trim_end()) {
                for token in rest.split_whitespace() {
                    let (k, v) = token.split_once('=').ok_or_else(|| {
                        ConfigError::new(token, "header tokens must look like section.key=value")
                    })?;
                    out.push((k.to_string(), v.to_string()));
                }
                continue;
            }
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(format!("line {}", n + 1), format!("expected `key = value`, got `{line}`"))
            })?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            out.push((key, v.trim().to_string()));
        }
        Ok(out)
    }

    /// Sets one `section.key`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value;
        match key {
            "run.method" => {
                self.method = match v {
                    "classical" => MethodKind::Classical,
                    "forward" => MethodKind::Forward,
                    "reverse" => MethodKind::Reverse,
                    _ => return Err(ConfigError::new(key, format!("unknown method `{v}`"))),
                }
            }
            "run.seed" => self.seed = parse_num(key, v)?,
            "run.epochs" => self.epochs = parse_num(key, v)?,
            "run.eta" => self.eta = parse_num(key, v)?,
            "run.bas_m" => self.bas_m = parse_num(key, v)?,
            "run.n_h" => self.n_h = parse_num(key, v)?,
            "run.mask" => {
                self.mask = match v {
                    "complete" => MaskKind::Complete,
                    "sparse" => MaskKind::Sparse,
                    _ => return Err(ConfigError::new(key, format!("unknown mask `{v}`"))),
                }
            }
            "init.mu" => self.init.mu = parse_num(key, v)?,
            "init.sigma" => self.init.sigma = parse_num(key, v)?,
            "init.lo" => self.init.lo = parse_num(key, v)?,
            "init.hi" => self.init.hi = parse_num(key, v)?,
            "classical.n_g" => self.n_g = parse_num(key, v)?,
            "anneal.alpha" => self.alpha = parse_num(key, v)?,
            "anneal.cycles" => self.cycles = parse_num(key, v)?,
            "anneal.anneal_time" => self.anneal_time = parse_num(key, v)?,
            "anneal.reverse_time" => self.reverse_time = parse_num(key, v)?,
            "anneal.pause_time" => self.pause_time = parse_num(key, v)?,
            "anneal.forward_time" => self.forward_time = parse_num(key, v)?,
            "anneal.s_pause" => self.s_pause = parse_num(key, v)?,
            "emulator.t_eff" => self.emulator.t_eff = parse_num(key, v)?,
            "emulator.sweeps_per_microsecond" => self.emulator.sweeps_per_microsecond = parse_num(key, v)?,
            "emulator.field_noise_sd" => self.emulator.field_noise_sd = parse_num(key, v)?,
            "emulator.coupling_noise_sd" => self.emulator.coupling_noise_sd = parse_num(key, v)?,
            "emulator.tunnel_s" => self.emulator.tunnel_s = parse_num(key, v)?,
            "emulator.tunnel_width" => self.emulator.tunnel_width = parse_num(key, v)?,
            "emulator.chain_policy" => {
                self.emulator.chain_policy = match v {
                    "majority" => ChainPolicy::MajorityVote,
                    "discard" => ChainPolicy::Discard,
                    _ => return Err(ConfigError::new(key, format!("unknown chain policy `{v}`"))),
                }
            }
            "embedding.chain_coupling" => self.chain_coupling = parse_num(key, v)?,
            "embedding.grid" => self.grid = parse_num(key, v)?,
            "embedding.faults" => {
                self.faults = match v {
                    "default" => Faults::Default,
                    "none" => Faults::None,
                    path => Faults::File(path.to_string()),
                }
            }
            "embedding.copies" => self.copies = parse_num(key, v)?,
            "eval.ll_every" => self.ll_every = parse_num(key, v)?,
            "eval.recon_every" => self.recon_every = parse_num(key, v)?,
            "eval.recon_n_g" => self.recon_n_g = parse_num(key, v)?,
            "eval.recon_trials" => self.recon_trials = parse_num(key, v)?,
            "eval.checkpoint_every" => self.checkpoint_every = parse_num(key, v)?,
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// Range checks; each failure names the key at fault.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(key, format!("must be positive, got {x}")))
            }
        };
        positive("run.eta", self.eta)?;
        positive("init.sigma", self.init.sigma)?;
        positive("anneal.alpha", self.alpha)?;
        positive("anneal.anneal_time", self.anneal_time)?;
        positive("anneal.reverse_time", self.reverse_time)?;
        positive("anneal.pause_time", self.pause_time)?;
        positive("anneal.forward_time", self.forward_time)?;
        positive("emulator.t_eff", self.emulator.t_eff)?;
        if !(2..=16).contains(&self.bas_m) {
            return Err(ConfigError::new("run.bas_m", "must lie in 2..=16"));
        }
        if self.bas_m * self.bas_m > 20 && self.n_h > 20 {
            return Err(ConfigError::new("run.n_h", "exact metrics need one layer of at most 20 units"));
        }
        if self.n_h == 0 {
            return Err(ConfigError::new("run.n_h", "must be at least 1"));
        }
        if !(self.init.hi > self.init.lo) || self.init.lo != -self.init.hi {
            return Err(ConfigError::new("init.lo", "truncation interval must be non-empty and symmetric about 0"));
        }
        if self.mask == MaskKind::Sparse && (self.bas_m != 4 || self.n_h != 16) {
            return Err(ConfigError::new("run.mask", "the sparse mask is defined for 16+16 machines"));
        }
        if !(self.s_pause > 0.0 && self.s_pause < 1.0) {
            return Err(ConfigError::new("anneal.s_pause", "must lie in (0, 1)"));
        }
        if self.cycles == 0 {
            return Err(ConfigError::new("anneal.cycles", "must be at least 1"));
        }
        if !(self.emulator.sweeps_per_microsecond >= 1.0) {
            return Err(ConfigError::new("emulator.sweeps_per_microsecond", "must be at least 1"));
        }
        if !(self.emulator.field_noise_sd >= 0.0) {
            return Err(ConfigError::new("emulator.field_noise_sd", "must be non-negative"));
        }
        if !(self.emulator.coupling_noise_sd >= 0.0) {
            return Err(ConfigError::new("emulator.coupling_noise_sd", "must be non-negative"));
        }
        if !self.emulator.tunnel_s.is_finite() {
            return Err(ConfigError::new("emulator.tunnel_s", "must be finite"));
        }
        if !(self.emulator.tunnel_width >= 0.0 && self.emulator.tunnel_width.is_finite()) {
            return Err(ConfigError::new("emulator.tunnel_width", "must be finite and non-negative"));
        }
        if !(self.chain_coupling <= 0.0 && self.chain_coupling.is_finite()) {
            return Err(ConfigError::new("embedding.chain_coupling", "must be finite and <= 0"));
        }
        if self.grid == 0 {
            return Err(ConfigError::new("embedding.grid", "must be at least 1"));
        }
        if self.faults == Faults::Default && self.grid != 16 {
            return Err(ConfigError::new("embedding.faults", "the default fault list describes a 16x16 chip"));
        }
        if self.recon_n_g == 0 || self.recon_trials == 0 {
            return Err(ConfigError::new("eval.recon_n_g", "reconstruction needs n_g and trials >= 1"));
        }
        Ok(())
    }

    pub fn method(&self) -> Method {
        match self.method {
            MethodKind::Classical => Method::Classical { n_g: self.n_g },
            MethodKind::Forward => Method::Forward,
            MethodKind::Reverse => Method::Reverse,
        }
    }

    pub fn forward_schedule(&self) -> ScheduleParams {
        ScheduleParams::Forward {
            anneal_time: self.anneal_time,
        }
    }

    pub fn reverse_schedule(&self) -> ScheduleParams {
        ScheduleParams::Reverse {
            reverse_time: self.reverse_time,
            pause_time: self.pause_time,
            forward_time: self.forward_time,
            s_pause: self.s_pause,
        }
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let policy = match self.emulator.chain_policy {
            ChainPolicy::MajorityVote => "majority",
            ChainPolicy::Discard => "discard",
        };
        let faults = match &self.faults {
            Faults::Default => "default".to_string(),
            Faults::None => "none".to_string(),
            Faults::File(p) => p.clone(),
        };
        vec![
            ("run.method", self.method.name().to_string()),
            ("run.seed", self.seed.to_string()),
            ("run.epochs", self.epochs.to_string()),
            ("run.eta", fmt_f64(self.eta)),
            ("run.bas_m", self.bas_m.to_string()),
            ("run.n_h", self.n_h.to_string()),
            (
                "run.mask",
                match self.mask {
                    MaskKind::Complete => "complete",
                    MaskKind::Sparse => "sparse",
                }
                .to_string(),
            ),
            ("init.mu", fmt_f64(self.init.mu)),
            ("init.sigma", fmt_f64(self.init.sigma)),
            ("init.lo", fmt_f64(self.init.lo)),
            ("init.hi", fmt_f64(self.init.hi)),
            ("classical.n_g", self.n_g.to_string()),
            ("anneal.alpha", fmt_f64(self.alpha)),
            ("anneal.cycles", self.cycles.to_string()),
            ("anneal.anneal_time", fmt_f64(self.anneal_time)),
            ("anneal.reverse_time", fmt_f64(self.reverse_time)),
            ("anneal.pause_time", fmt_f64(self.pause_time)),
            ("anneal.forward_time", fmt_f64(self.forward_time)),
            ("anneal.s_pause", fmt_f64(self.s_pause)),
            ("emulator.t_eff", fmt_f64(self.emulator.t_eff)),
            ("emulator.sweeps_per_microsecond", fmt_f64(self.emulator.sweeps_per_microsecond)),
            ("emulator.field_noise_sd", fmt_f64(self.emulator.field_noise_sd)),
            ("emulator.coupling_noise_sd", fmt_f64(self.emulator.coupling_noise_sd)),
            ("emulator.tunnel_s", fmt_f64(self.emulator.tunnel_s)),
            ("emulator.tunnel_width", fmt_f64(self.emulator.tunnel_width)),
            ("emulator.chain_policy", policy.to_string()),
            ("embedding.chain_coupling", fmt_f64(self.chain_coupling)),
            ("embedding.grid", self.grid.to_string()),
            ("embedding.faults", faults),
            ("embedding.copies", self.copies.to_string()),
            ("eval.ll_every", self.ll_every.to_string()),
            ("eval.recon_every", self.recon_every.to_string()),
            ("eval.recon_n_g", self.recon_n_g.to_string()),
            ("eval.recon_trials", self.recon_trials.to_string()),
            ("eval.checkpoint_every", self.checkpoint_every.to_string()),
        ]
    }

    /// The one-line `# config ...` header.
    pub fn header(&self) -> String {
        let body: Vec<String> = self.entries().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{HEADER_PREFIX}{}", body.join(" "))
    }

    /// The same configuration as a sectioned file.
    pub fn to_file(&self) -> String {
        let mut by_section: BTreeMap<&str, Vec<(String, String)>> = BTreeMap::new();
        let mut order = Vec::new();
        for (k, v) in self.entries() {
            let (section, key) = k.split_once('.').expect("sectioned key");
            if !order.contains(&section) {
                order.push(section);
            }
            by_section.entry(section).or_default().push((key.to_string(), v));
        }
        let mut out = String::new();
        for section in order {
            out.push_str(&format!("[{section}]\n"));
            for (k, v) in &by_section[section] {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push('\n');
        }
        out
    }
}

/// Finds the `# config` header of an output file.
pub fn header_line(text: &str) -> Option<&str> {
    text.lines().find(|l| l.starts_with(HEADER_PREFIX))
}
