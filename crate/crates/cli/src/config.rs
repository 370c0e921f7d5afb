//! Experiment configuration files: schema, validation and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(key: &str, msg: impl std::fmt::Display) -> Result<T, ConfigError> {
    Err(ConfigError(format!("`{key}`: {msg}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Response,
    Estimation,
    DynamicRange,
    Oqi,
    MultiEnsemble,
    DecayScan,
    AllanQcrb,
    ClockRun,
    XxzSqueezing,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Response,
        Kind::Estimation,
        Kind::DynamicRange,
        Kind::Oqi,
        Kind::MultiEnsemble,
        Kind::DecayScan,
        Kind::AllanQcrb,
        Kind::ClockRun,
        Kind::XxzSqueezing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Response => "response",
            Kind::Estimation => "estimation",
            Kind::DynamicRange => "dynamic-range",
            Kind::Oqi => "oqi",
            Kind::MultiEnsemble => "multi-ensemble",
            Kind::DecayScan => "decay-scan",
            Kind::AllanQcrb => "allan-qcrb",
            Kind::ClockRun => "clock-run",
            Kind::XxzSqueezing => "xxz-squeezing",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Kind::Response => "mean outcome and variance against phase [sensor, phase]",
            Kind::Estimation => "Monte Carlo SME/MLE squared error against phase [sensor, phase, estimation]",
            Kind::DynamicRange => "average estimator variance against prior variance [designs, sweep]",
            Kind::Oqi => "optimal quantum interferometer against prior variance [oqi, sweep]",
            Kind::MultiEnsemble => "attenuated or GHZ-cascade schemes against prior variance [ensemble, sweep]",
            Kind::DecayScan => "FI and QFI under spontaneous emission [decay]",
            Kind::AllanQcrb => "QCRB Allan variance and its optimum [decay]",
            Kind::ClockRun => "closed-loop clock Monte Carlo and Allan deviation [sensor, clock, noise]",
            Kind::XxzSqueezing => "squeezing from power-law XXZ quenches [xxz]",
        }
    }

    /// Sections the kind requires; every other section is rejected.
    pub fn sections(self) -> &'static [&'static str] {
        match self {
            Kind::Response => &["sensor", "phase"],
            Kind::Estimation => &["sensor", "phase", "estimation"],
            Kind::DynamicRange => &["designs", "sweep"],
            Kind::Oqi => &["oqi", "sweep"],
            Kind::MultiEnsemble => &["ensemble", "sweep"],
            Kind::DecayScan | Kind::AllanQcrb => &["decay"],
            Kind::ClockRun => &["sensor", "clock", "noise"],
            Kind::XxzSqueezing => &["xxz"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    /// css, ghz, ghz-balanced, sine, sss, oat
    pub state: String,
    pub n_atoms: usize,
    /// jy, jx, parity-x, parity-plus, parity-minus, phase-op
    pub readout: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl PhaseGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points).map(|i| self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationConfig {
    /// sme or mle
    pub estimator: String,
    pub repetitions: Vec<usize>,
    pub trials: usize,
    /// Unambiguous interval; defaults to the readout's monotone branch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub delta2_min: f64,
    pub delta2_max: f64,
    pub points: usize,
}

impl SweepConfig {
    pub fn values(&self) -> Vec<f64> {
        log_grid(self.delta2_min, self.delta2_max, self.points)
    }
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignsConfig {
    #[serde(default)]
    pub oqi: bool,
    pub sensors: Vec<SensorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OqiConfig {
    pub n_atoms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// attenuated or ghz-cascade
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_total: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_groups: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub n_atoms: usize,
    /// T / T_A grid
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Parent-Hamiltonian ratios of the squeezed family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockSection {
    pub omega0: f64,
    pub t: f64,
    #[serde(default)]
    pub t_dead: f64,
    #[serde(default = "default_gain")]
    pub gain: f64,
    pub cycles: usize,
    /// mmse or sme
    #[serde(default = "default_clock_estimator")]
    pub estimator: String,
}

fn default_gain() -> f64 {
    0.5
}

fn default_clock_estimator() -> String {
    "mmse".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub alpha: i32,
    pub h_alpha: f64,
    pub sample_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxzConfig {
    pub extents: Vec<usize>,
    pub alpha: f64,
    pub chi: f64,
    pub chi_prime: Vec<f64>,
    pub t_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<SensorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimation: Option<EstimationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designs: Option<DesignsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oqi: Option<OqiConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<ClockSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xxz: Option<XxzConfig>,
}

/// Single gaussian prior; used by estimation experiments for the Bayesian columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub delta2: f64,
    #[serde(default)]
    pub mean: f64,
}

pub const STATES: [&str; 6] = ["css", "ghz", "ghz-balanced", "sine", "sss", "oat"];
pub const READOUTS: [&str; 6] = ["jy", "jx", "parity-x", "parity-plus", "parity-minus", "phase-op"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError(format!("malformed config: {}", e.message())))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.message().to_string();
            if path.is_empty() || path == "." {
                ConfigError(msg)
            } else {
                ConfigError(format!("`{path}`: {msg}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let mut add = |on: bool, name: &'static str| {
            if on {
                v.push(name)
            }
        };
        add(self.sensor.is_some(), "sensor");
        add(self.phase.is_some(), "phase");
        add(self.estimation.is_some(), "estimation");
        add(self.prior.is_some(), "prior");
        add(self.sweep.is_some(), "sweep");
        add(self.designs.is_some(), "designs");
        add(self.oqi.is_some(), "oqi");
        add(self.ensemble.is_some(), "ensemble");
        add(self.decay.is_some(), "decay");
        add(self.clock.is_some(), "clock");
        add(self.noise.is_some(), "noise");
        add(self.xxz.is_some(), "xxz");
        v
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let need = self.kind.sections();
        let optional: &[&str] = if self.kind == Kind::Estimation { &["prior"] } else { &[] };
        for s in self.present() {
            if !need.contains(&s) && !optional.contains(&s) {
                return err(s, format!("section is not used by kind `{}`", self.kind.name()));
            }
        }
        for s in need {
            if !self.present().contains(s) {
                return err(s, format!("section is required by kind `{}`", self.kind.name()));
            }
        }
        if let Some(s) = &self.sensor {
            validate_sensor(s, "sensor")?;
        }
        if let Some(p) = &self.phase {
            if p.points == 0 {
                return err("phase.points", "must be at least 1");
            }
            if !(p.min.is_finite() && p.max.is_finite() && p.max >= p.min) {
                return err("phase.max", "must be finite and not below phase.min");
            }
        }
        if let Some(e) = &self.estimation {
            if !matches!(e.estimator.as_str(), "sme" | "mle") {
                return err("estimation.estimator", format!("expected `sme` or `mle`, got `{}`", e.estimator));
            }
            if e.repetitions.is_empty() || e.repetitions.contains(&0) {
                return err("estimation.repetitions", "must be a non-empty list of positive counts");
            }
            if e.trials == 0 {
                return err("estimation.trials", "must be positive");
            }
            if let Some([a, b]) = e.interval {
                if !(a < b) {
                    return err("estimation.interval", "lower end must be below upper end");
                }
            }
        }
        if let Some(p) = &self.prior {
            if !(p.delta2 > 0.0 && p.delta2.is_finite()) {
                return err("prior.delta2", format!("prior variance must be positive, got {}", p.delta2));
            }
            if !p.mean.is_finite() {
                return err("prior.mean", "must be finite");
            }
        }
        if let Some(s) = &self.sweep {
            if !(s.delta2_min > 0.0 && s.delta2_min.is_finite()) {
                return err("sweep.delta2_min", format!("prior variance must be positive, got {}", s.delta2_min));
            }
            if !(s.delta2_max >= s.delta2_min && s.delta2_max.is_finite()) {
                return err("sweep.delta2_max", "must be finite and not below sweep.delta2_min");
            }
            if s.points == 0 {
                return err("sweep.points", "must be at least 1");
            }
        }
        if let Some(d) = &self.designs {
            if d.sensors.is_empty() {
                return err("designs.sensors", "at least one design required");
            }
            let n = d.sensors[0].n_atoms;
            for (i, s) in d.sensors.iter().enumerate() {
                validate_sensor(s, &format!("designs.sensors[{i}]"))?;
                if s.n_atoms != n {
                    return err(&format!("designs.sensors[{i}].n_atoms"), "all designs must share the atom number");
                }
            }
        }
        if let Some(o) = &self.oqi {
            if o.n_atoms == 0 || o.n_atoms > 64 {
                return err("oqi.n_atoms", "must lie in 1..=64");
            }
        }
        if let Some(e) = &self.ensemble {
            match e.scheme.as_str() {
                "attenuated" => {
                    let (Some(n), Some(g)) = (e.n_total, e.n_groups) else {
                        return err("ensemble.n_total", "attenuated scheme needs n_total and n_groups");
                    };
                    if g == 0 || n % (2 * g) != 0 {
                        return err("ensemble.n_groups", "n_total must be divisible by 2 n_groups");
                    }
                    if e.n_pairs.is_some() {
                        return err("ensemble.n_pairs", "not used by the attenuated scheme");
                    }
                }
                "ghz-cascade" => {
                    match e.n_pairs {
                        Some(p) if (1..=12).contains(&p) => {}
                        _ => return err("ensemble.n_pairs", "ghz cascade needs n_pairs in 1..=12"),
                    }
                    if e.n_total.is_some() || e.n_groups.is_some() {
                        return err("ensemble.n_total", "not used by the ghz cascade");
                    }
                }
                other => return err("ensemble.scheme", format!("expected `attenuated` or `ghz-cascade`, got `{other}`")),
            }
        }
        if let Some(d) = &self.decay {
            if d.n_atoms == 0 || d.n_atoms > 64 {
                return err("decay.n_atoms", "must lie in 1..=64");
            }
            if !(d.t_min > 0.0 && d.t_max > d.t_min && d.t_max.is_finite()) {
                return err("decay.t_min", "need 0 < t_min < t_max");
            }
            if d.points < 2 {
                return err("decay.points", "must be at least 2");
            }
            if let Some(r) = &d.ratios {
                if r.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return err("decay.ratios", "ratios must be finite and non-negative");
                }
            }
        }
        if let Some(c) = &self.clock {
            if !(c.omega0 > 0.0 && c.omega0.is_finite()) {
                return err("clock.omega0", "must be positive");
            }
            if !(c.t > 0.0 && c.t.is_finite()) {
                return err("clock.t", "must be positive");
            }
            if !(c.t_dead >= 0.0 && c.t_dead.is_finite()) {
                return err("clock.t_dead", "must be non-negative");
            }
            if !(c.gain > 0.0 && c.gain < 2.0) {
                return err("clock.gain", "must lie in (0, 2)");
            }
            if c.cycles == 0 {
                return err("clock.cycles", "must be positive");
            }
            if !matches!(c.estimator.as_str(), "mmse" | "sme") {
                return err("clock.estimator", format!("expected `mmse` or `sme`, got `{}`", c.estimator));
            }
        }
        if let Some(n) = &self.noise {
            if !(-1..=1).contains(&n.alpha) {
                return err("noise.alpha", "must be -1, 0 or 1");
            }
            if !(n.h_alpha > 0.0 && n.h_alpha.is_finite()) {
                return err("noise.h_alpha", "must be positive");
            }
            if !(n.sample_rate > 0.0 && n.sample_rate.is_finite()) {
                return err("noise.sample_rate", "must be positive");
            }
            if let Some(c) = &self.clock {
                if n.sample_rate * c.t < 16.0 - 1e-9 {
                    return err("noise.sample_rate", "must be at least 16 / clock.t");
                }
            }
        }
        if let Some(x) = &self.xxz {
            let sites: usize = x.extents.iter().product();
            if x.extents.is_empty() || x.extents.len() > 3 || sites < 2 || sites > 14 {
                return err("xxz.extents", "1 to 3 extents with 2..=14 sites in total");
            }
            if x.chi_prime.is_empty() {
                return err("xxz.chi_prime", "at least one anisotropy value");
            }
            if !(x.t_max > 0.0) || x.samples < 2 {
                return err("xxz.t_max", "need t_max > 0 and at least two samples");
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        hash_value(&serde_json::to_value(self).expect("config serializes"))
    }
}

/// SHA-256 hex digest of a JSON value's compact text; object keys are sorted.
pub fn hash_value(v: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}

fn validate_sensor(s: &SensorConfig, at: &str) -> Result<(), ConfigError> {
    if !STATES.contains(&s.state.as_str()) {
        return err(&format!("{at}.state"), format!("unknown state `{}`; expected one of {}", s.state, STATES.join(", ")));
    }
    if !READOUTS.contains(&s.readout.as_str()) {
        return err(&format!("{at}.readout"), format!("unknown readout `{}`; expected one of {}", s.readout, READOUTS.join(", ")));
    }
    if s.n_atoms == 0 || s.n_atoms > 4096 {
        return err(&format!("{at}.n_atoms"), "must lie in 1..=4096");
    }
    match (s.state.as_str(), s.ratio, s.chi_t) {
        ("sss", Some(r), None) if r.is_finite() && r >= 0.0 => {}
        ("sss", _, _) => return err(&format!("{at}.ratio"), "squeezed state needs a finite non-negative ratio and no chi_t"),
        ("oat", None, Some(c)) if c.is_finite() => {}
        ("oat", _, _) => return err(&format!("{at}.chi_t"), "one-axis twisted state needs a finite chi_t and no ratio"),
        (_, Some(_), _) => return err(&format!("{at}.ratio"), format!("not used by state `{}`", s.state)),
        (_, _, Some(_)) => return err(&format!("{at}.chi_t"), format!("not used by state `{}`", s.state)),
        _ => {}
    }
    Ok(())
}
