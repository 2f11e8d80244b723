//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! kind = synthetic          # keys before any header may belong to any section
//! [sampler]
//! sampler = dream
//! alpha = 0.023
//! ```
//!
//! Keys are looked up in a fixed table per section and anything unknown is
//! rejected. A headerless key that exists in several sections (`seed`,
//! `iterations`) belongs to `[run]`. Relative paths are resolved against the
//! directory of the configuration file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use drexel_core::sampler::Init;
use drexel_core::{Landscape, SamplerKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("run", &["kind", "iterations", "repeats", "seed", "thin", "threads"]),
    (
        "model",
        &["energy", "levels", "c", "topology", "side", "spins", "strength", "bias", "periodic", "params", "dataset"],
    ),
    (
        "sampler",
        &["sampler", "alpha", "tau", "alpha_high", "tau_high", "rho", "sigma2", "init", "p_one", "burn_in"],
    ),
    (
        "rbm",
        &[
            "hidden", "cd_k", "learning_rate", "iterations", "batch_size", "seed", "visible", "modes", "per_mode",
            "flip_prob",
        ],
    ),
    ("oracle", &["n_max", "tolerance"]),
    (
        "metrics",
        &[
            "features", "bandwidth", "mmd_samples", "median_points", "jump_threshold", "reference_steps", "reference_burn_in",
            "reference_seed", "curve_every",
        ],
    ),
    ("output", &["dir", "heatmap", "traces"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Synthetic,
    Ising,
    RbmTrain,
    RbmSample,
    OracleCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Synthetic => "synthetic",
            ExperimentKind::Ising => "ising",
            ExperimentKind::RbmTrain => "rbm-train",
            ExperimentKind::RbmSample => "rbm-sample",
            ExperimentKind::OracleCheck => "oracle-check",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            ExperimentKind::Synthetic,
            ExperimentKind::Ising,
            ExperimentKind::RbmTrain,
            ExperimentKind::RbmSample,
            ExperimentKind::OracleCheck,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    /// Kinds that run a sampler and therefore need `[sampler]`.
    pub fn samples(self) -> bool {
        !matches!(self, ExperimentKind::RbmTrain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// `side × side` square lattice.
    Lattice,
    /// Path of `spins` sites.
    Chain,
    /// Every pair of `spins` sites coupled.
    Complete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub kind: ExperimentKind,
    pub iterations: usize,
    pub repeats: usize,
    pub seed: u64,
    pub thin: usize,
    /// 0 lets the pool pick.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub energy: Option<Landscape>,
    pub levels: usize,
    pub topology: Topology,
    pub side: usize,
    pub spins: usize,
    pub strength: f64,
    pub bias: f64,
    pub periodic: bool,
    pub params: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSection {
    pub kind: SamplerKind,
    pub alpha: f64,
    pub tau: f64,
    pub high: Option<(f64, f64)>,
    pub rho: f64,
    pub sigma2: f64,
    pub init: Init,
    /// Leading iterations excluded from the metrics.
    pub burn_in: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmSection {
    pub hidden: usize,
    pub cd_k: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_size: usize,
    /// Training seed; the run seed when absent.
    pub seed: Option<u64>,
    /// Synthetic Bernoulli mixture used when no dataset file is given.
    pub visible: usize,
    pub modes: usize,
    pub per_mode: usize,
    pub flip_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSection {
    pub n_max: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSection {
    pub features: usize,
    /// 0 selects the median heuristic.
    pub bandwidth: f64,
    pub mmd_samples: usize,
    pub median_points: usize,
    pub jump_threshold: f64,
    /// Defaults depend on the experiment kind.
    pub reference_steps: Option<usize>,
    pub reference_burn_in: usize,
    /// Seed of the reference chain; the run seed when absent.
    pub reference_seed: Option<u64>,
    pub curve_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub heatmap: bool,
    /// Write the per-iteration `run_<seed>.csv` files.
    pub traces: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub sampler: Option<SamplerSection>,
    pub rbm: RbmSection,
    pub oracle: OracleSection,
    pub metrics: MetricsSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn repeat_seed(&self, index: usize) -> u64 {
        self.run.seed.wrapping_add(index as u64)
    }

    pub fn rbm_seed(&self) -> u64 {
        self.rbm.seed.unwrap_or(self.run.seed)
    }

    pub fn reference_seed(&self) -> u64 {
        self.metrics.reference_seed.unwrap_or(self.run.seed)
    }
}

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Table {
    entries: BTreeMap<(&'static str, &'static str), Entry>,
    headers: BTreeMap<&'static str, usize>,
}

fn lookup(section: &str, key: &str) -> Option<(&'static str, &'static str)> {
    SECTIONS
        .iter()
        .find(|(s, _)| *s == section)
        .and_then(|(s, keys)| keys.iter().find(|k| **k == key).map(|k| (*s, *k)))
}

fn resolve_headerless(key: &str) -> Option<(&'static str, &'static str)> {
    lookup("run", key).or_else(|| SECTIONS.iter().find_map(|(s, _)| lookup(s, key)))
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn tokenize(text: &str) -> Result<Table, ConfigError> {
    let mut entries = BTreeMap::new();
    let mut headers = BTreeMap::new();
    let mut section: Option<&'static str> = None;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(Some(n), format!("malformed section header `{line}`")))?
                .trim();
            let known = SECTIONS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| err(Some(n), format!("unknown section [{name}]")))?;
            if headers.insert(known.0, n).is_some() {
                return Err(err(Some(n), format!("section [{name}] appears twice")));
            }
            section = Some(known.0);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(Some(n), format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        let mut value = value.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        let slot = match section {
            Some(s) => lookup(s, key).ok_or_else(|| err(Some(n), format!("unknown key `{key}` in section [{s}]")))?,
            None => resolve_headerless(key).ok_or_else(|| err(Some(n), format!("unknown key `{key}`")))?,
        };
        if let Some(prev) = entries.get(&slot) {
            let prev: &Entry = prev;
            return Err(err(
                Some(n),
                format!("key `{key}` in [{}] already set on line {}", slot.0, prev.line),
            ));
        }
        entries.insert(
            slot,
            Entry {
                value: value.to_string(),
                line: n,
                used: false,
            },
        );
    }
    Ok(Table { entries, headers })
}

impl Table {
    fn raw(&mut self, section: &'static str, key: &'static str) -> Option<(&str, usize)> {
        self.entries.get_mut(&(section, key)).map(|e| {
            e.used = true;
            (e.value.as_str(), e.line)
        })
    }

    fn get<T>(&mut self, section: &'static str, key: &'static str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>, ConfigError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => parse(v)
                .map(Some)
                .ok_or_else(|| err(Some(line), format!("`{key}` expects {what}, found `{v}`"))),
        }
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|((s, k), _)| *s == section && *k == key)
            .map(|(_, e)| e.line)
    }

    fn missing(&self, section: &'static str, key: &str, why: &str) -> ConfigError {
        let line = self.headers.get(section).copied().or_else(|| self.line_of("run", "kind"));
        err(line, format!("missing required key `{key}` in [{section}]{why}"))
    }

    fn usize(&mut self, section: &'static str, key: &'static str) -> Result<Option<usize>, ConfigError> {
        self.get(section, key, "a non-negative integer", parse_int)
    }

    fn u64(&mut self, section: &'static str, key: &'static str) -> Result<Option<u64>, ConfigError> {
        self.get(section, key, "a non-negative integer", |v| parse_int(v).map(|x| x as u64))
    }

    fn f64(&mut self, section: &'static str, key: &'static str) -> Result<Option<f64>, ConfigError> {
        self.get(section, key, "a finite number", |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    fn bool(&mut self, section: &'static str, key: &'static str) -> Result<Option<bool>, ConfigError> {
        self.get(section, key, "true or false", |v| match v {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => None,
        })
    }

    fn string(&mut self, section: &'static str, key: &'static str) -> Option<(String, usize)> {
        self.raw(section, key).map(|(v, l)| (v.to_string(), l))
    }
}

/// Integers with optional `_` separators and scientific shorthand (`1e5`).
fn parse_int(v: &str) -> Option<usize> {
    let v = v.replace('_', "");
    if let Ok(x) = v.parse::<usize>() {
        return Some(x);
    }
    let f: f64 = v.parse().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f < 1.8e19).then_some(f as usize)
}

fn positive(line: Option<usize>, key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(err(line, format!("`{key}` must be positive, found {x}")))
    }
}

fn at_least_one(line: Option<usize>, key: &str, x: usize) -> Result<usize, ConfigError> {
    if x >= 1 {
        Ok(x)
    } else {
        Err(err(line, format!("`{key}` must be at least 1")))
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_with_base(text, None)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(None, format!("cannot read {}: {e}", path.display())))?;
    parse_with_base(&text, path.parent())
}

fn parse_with_base(text: &str, base: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    let mut t = tokenize(text)?;
    let resolve = |p: String| -> PathBuf {
        let p = PathBuf::from(p);
        match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p,
        }
    };

    let (kind_str, kind_line) = t.string("run", "kind").ok_or_else(|| err(None, "missing required key `kind`"))?;
    let kind = ExperimentKind::parse(&kind_str).ok_or_else(|| {
        err(
            Some(kind_line),
            format!("unknown kind `{kind_str}` (synthetic | ising | rbm-train | rbm-sample | oracle-check)"),
        )
    })?;

    let seed = t.u64("run", "seed")?.unwrap_or(0);
    let iterations = match t.usize("run", "iterations")? {
        Some(i) => at_least_one(t.line_of("run", "iterations"), "iterations", i)?,
        None if kind.samples() && kind != ExperimentKind::OracleCheck => {
            return Err(t.missing("run", "iterations", ""));
        }
        None => 1,
    };
    let run = RunSection {
        kind,
        iterations,
        repeats: at_least_one(t.line_of("run", "repeats"), "repeats", t.usize("run", "repeats")?.unwrap_or(1))?,
        seed,
        thin: at_least_one(t.line_of("run", "thin"), "thin", t.usize("run", "thin")?.unwrap_or(1))?,
        threads: t.usize("run", "threads")?.unwrap_or(0),
    };

    let energy = match t.string("model", "energy") {
        Some((s, l)) => Some(s.parse::<Landscape>().map_err(|e| err(Some(l), e.to_string()))?),
        None => None,
    };
    let energy = match (energy, t.f64("model", "c")?) {
        (Some(Landscape::SixteenGaussian { .. }), Some(c)) => Some(Landscape::SixteenGaussian { c }),
        (_, Some(_)) => return Err(err(t.line_of("model", "c"), "`c` only applies to energy = 16gaussian")),
        (e, None) => e,
    };
    if kind == ExperimentKind::Synthetic && energy.is_none() {
        return Err(t.missing("model", "energy", " for kind = synthetic"));
    }
    let topology = match t.string("model", "topology") {
        None => Topology::Lattice,
        Some((s, l)) => match s.as_str() {
            "lattice" => Topology::Lattice,
            "chain" => Topology::Chain,
            "complete" => Topology::Complete,
            _ => return Err(err(Some(l), format!("unknown topology `{s}` (lattice | chain | complete)"))),
        },
    };
    let levels = t.usize("model", "levels")?.unwrap_or(256);
    if levels < 2 {
        return Err(err(t.line_of("model", "levels"), "`levels` must be at least 2"));
    }
    let side = t.usize("model", "side")?.unwrap_or(4);
    let spins = t.usize("model", "spins")?;
    if topology != Topology::Lattice && spins.is_none() && kind != ExperimentKind::Synthetic && t.raw("model", "params").is_none() {
        return Err(t.missing("model", "spins", " for chain or complete topology"));
    }
    let model = ModelSection {
        energy,
        levels,
        topology,
        side,
        spins: spins.unwrap_or(side * side),
        strength: t.f64("model", "strength")?.unwrap_or(0.15),
        bias: t.f64("model", "bias")?.unwrap_or(0.0),
        periodic: t.bool("model", "periodic")?.unwrap_or(topology == Topology::Lattice),
        params: t.string("model", "params").map(|(s, _)| resolve(s)),
        dataset: t.string("model", "dataset").map(|(s, _)| resolve(s)),
    };

    let sampler = if kind.samples() {
        Some(parse_sampler(&mut t)?)
    } else {
        None
    };

    let rbm = RbmSection {
        hidden: at_least_one(t.line_of("rbm", "hidden"), "hidden", t.usize("rbm", "hidden")?.unwrap_or(8))?,
        cd_k: at_least_one(t.line_of("rbm", "cd_k"), "cd_k", t.usize("rbm", "cd_k")?.unwrap_or(10))?,
        learning_rate: positive(
            t.line_of("rbm", "learning_rate"),
            "learning_rate",
            t.f64("rbm", "learning_rate")?.unwrap_or(1e-3),
        )?,
        iterations: t.usize("rbm", "iterations")?.unwrap_or(1000),
        batch_size: at_least_one(t.line_of("rbm", "batch_size"), "batch_size", t.usize("rbm", "batch_size")?.unwrap_or(128))?,
        seed: t.u64("rbm", "seed")?,
        visible: at_least_one(t.line_of("rbm", "visible"), "visible", t.usize("rbm", "visible")?.unwrap_or(16))?,
        modes: at_least_one(t.line_of("rbm", "modes"), "modes", t.usize("rbm", "modes")?.unwrap_or(4))?,
        per_mode: at_least_one(t.line_of("rbm", "per_mode"), "per_mode", t.usize("rbm", "per_mode")?.unwrap_or(250))?,
        flip_prob: t.f64("rbm", "flip_prob")?.unwrap_or(0.05),
    };
    if !(0.0..0.5).contains(&rbm.flip_prob) {
        return Err(err(t.line_of("rbm", "flip_prob"), "`flip_prob` must lie in [0, 0.5)"));
    }

    let oracle = OracleSection {
        n_max: at_least_one(t.line_of("oracle", "n_max"), "n_max", t.usize("oracle", "n_max")?.unwrap_or(50))?,
        tolerance: positive(t.line_of("oracle", "tolerance"), "tolerance", t.f64("oracle", "tolerance")?.unwrap_or(1e-10))?,
    };

    let bandwidth = t.f64("metrics", "bandwidth")?.unwrap_or(0.0);
    if bandwidth < 0.0 {
        return Err(err(t.line_of("metrics", "bandwidth"), "`bandwidth` must be non-negative"));
    }
    let metrics = MetricsSection {
        features: at_least_one(t.line_of("metrics", "features"), "features", t.usize("metrics", "features")?.unwrap_or(500))?,
        bandwidth,
        mmd_samples: at_least_one(
            t.line_of("metrics", "mmd_samples"),
            "mmd_samples",
            t.usize("metrics", "mmd_samples")?.unwrap_or(10_000),
        )?,
        median_points: at_least_one(
            t.line_of("metrics", "median_points"),
            "median_points",
            t.usize("metrics", "median_points")?.unwrap_or(1000),
        )?,
        jump_threshold: positive(
            t.line_of("metrics", "jump_threshold"),
            "jump_threshold",
            t.f64("metrics", "jump_threshold")?.unwrap_or(drexel_core::metrics::DEFAULT_JUMP_THRESHOLD),
        )?,
        reference_steps: t.usize("metrics", "reference_steps")?,
        reference_burn_in: t.usize("metrics", "reference_burn_in")?.unwrap_or(1000),
        reference_seed: t.u64("metrics", "reference_seed")?,
        curve_every: at_least_one(
            t.line_of("metrics", "curve_every"),
            "curve_every",
            t.usize("metrics", "curve_every")?.unwrap_or(1000),
        )?,
    };

    let output = OutputSection {
        dir: t.string("output", "dir").map(|(s, _)| resolve(s)).unwrap_or_else(|| PathBuf::from("out")),
        heatmap: t.bool("output", "heatmap")?.unwrap_or(true),
        traces: t.bool("output", "traces")?.unwrap_or(true),
    };

    if let Some(((s, k), e)) = t.entries.iter().find(|(_, e)| !e.used) {
        return Err(err(Some(e.line), format!("key `{k}` in [{s}] does not apply to kind = {}", kind.name())));
    }

    Ok(ExperimentConfig {
        run,
        model,
        sampler,
        rbm,
        oracle,
        metrics,
        output,
    })
}

fn parse_sampler(t: &mut Table) -> Result<SamplerSection, ConfigError> {
    let (name, line) = t
        .string("sampler", "sampler")
        .ok_or_else(|| t.missing("sampler", "sampler", ""))?;
    let kind: SamplerKind = name
        .parse()
        .map_err(|_| err(Some(line), format!("unknown sampler `{name}` (dula | dmala | drexel | dream | bdrexel | bdream)")))?;
    let alpha = t.f64("sampler", "alpha")?.ok_or_else(|| t.missing("sampler", "alpha", ""))?;
    let alpha = positive(t.line_of("sampler", "alpha"), "alpha", alpha)?;
    let tau = positive(t.line_of("sampler", "tau"), "tau", t.f64("sampler", "tau")?.unwrap_or(1.0))?;
    let alpha_high = t.f64("sampler", "alpha_high")?;
    let tau_high = t.f64("sampler", "tau_high")?;
    let rho = t.f64("sampler", "rho")?;
    let sigma2 = t.f64("sampler", "sigma2")?;
    let high = if kind.is_replica() {
        let a = alpha_high.ok_or_else(|| t.missing("sampler", "alpha_high", &format!(" for sampler = {kind}")))?;
        let tt = tau_high.ok_or_else(|| t.missing("sampler", "tau_high", &format!(" for sampler = {kind}")))?;
        Some((
            positive(t.line_of("sampler", "alpha_high"), "alpha_high", a)?,
            positive(t.line_of("sampler", "tau_high"), "tau_high", tt)?,
        ))
    } else {
        for key in ["alpha_high", "tau_high", "rho", "sigma2"] {
            if let Some(l) = t.line_of("sampler", key) {
                return Err(err(Some(l), format!("`{key}` requires a replica sampler, not {kind}")));
            }
        }
        None
    };
    if kind.is_bias_corrected() && sigma2.is_none() {
        return Err(err(Some(line), format!("sampler {kind} requires `sigma2`")));
    }
    if !kind.is_bias_corrected() {
        if let Some(l) = t.line_of("sampler", "sigma2") {
            return Err(err(Some(l), format!("`sigma2` only applies to bdrexel or bdream, not {kind}")));
        }
    }
    let sigma2 = sigma2.unwrap_or(0.0);
    if sigma2 < 0.0 {
        return Err(err(t.line_of("sampler", "sigma2"), "`sigma2` must be non-negative"));
    }
    let rho = rho.unwrap_or(1.0);
    if !(0.0..=1.0).contains(&rho) {
        return Err(err(t.line_of("sampler", "rho"), "`rho` must lie in [0, 1]"));
    }
    let p_one = t.f64("sampler", "p_one")?;
    let init = match t.string("sampler", "init") {
        None => match p_one {
            Some(p) => bernoulli(t, p)?,
            None => Init::Uniform,
        },
        Some((s, l)) => match s.as_str() {
            "uniform" => Init::Uniform,
            "bernoulli" => bernoulli(t, p_one.unwrap_or(0.5))?,
            _ => return Err(err(Some(l), format!("unknown init `{s}` (uniform | bernoulli)"))),
        },
    };
    Ok(SamplerSection {
        kind,
        alpha,
        tau,
        high,
        rho,
        sigma2,
        init,
        burn_in: t.usize("sampler", "burn_in")?.unwrap_or(0),
    })
}

fn bernoulli(t: &Table, p: f64) -> Result<Init, ConfigError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(err(t.line_of("sampler", "p_one"), "`p_one` must lie in [0, 1]"));
    }
    Ok(Init::Bernoulli { p_one: p })
}
