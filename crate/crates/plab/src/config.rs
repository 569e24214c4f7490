//! TOML experiment configuration, command-line overrides and the resolved
//! form that is embedded in every report.

use std::fmt;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use plab_core::exactlin::parse_rational;
use plab_core::quadric_patches::{VolumeMethod, DEFAULT_SEED};
use plab_core::surfaces::DistanceMode;
use serde::{Deserialize, Serialize};

/// Raised while reading or resolving a configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ParabolaCount,
    InvariantForms,
    NearSurface,
    DeltaCurve,
    Oppenheim,
    PatchCount,
    PatchAudit,
    Diagnostic,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::ParabolaCount => "parabola-count",
            Kind::InvariantForms => "invariant-forms",
            Kind::NearSurface => "near-surface",
            Kind::DeltaCurve => "delta-curve",
            Kind::Oppenheim => "oppenheim",
            Kind::PatchCount => "patch-count",
            Kind::PatchAudit => "patch-audit",
            Kind::Diagnostic => "diagnostic",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Float,
}

impl std::str::FromStr for Mode {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            _ => err(format!("mode must be exact or float, got {s:?}")),
        }
    }
}

/// A number written as a TOML integer, float or string (`"3/4"`, `"0.4"`).
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RatValue {
    Int(i64),
    Float(f64),
    Text(String),
}

/// A single value or a list of them; lists run one experiment per entry.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

impl RatValue {
    fn text(&self) -> String {
        match self {
            RatValue::Int(i) => i.to_string(),
            RatValue::Float(x) => format!("{x:?}"),
            RatValue::Text(s) => s.clone(),
        }
    }
}

fn rational(field: &str, text: &str) -> Result<BigRational, ConfigError> {
    parse_rational(text).map_err(|e| ConfigError(format!("{field}: {e}")))
}

// ---- file layout ----

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<Kind>,
    pub mode: Option<Mode>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub timings: Option<bool>,
    #[serde(rename = "parabola-count")]
    pub parabola_count: Option<ParabolaCountFile>,
    #[serde(rename = "invariant-forms")]
    pub invariant_forms: Option<InvariantFormsFile>,
    #[serde(rename = "near-surface")]
    pub near_surface: Option<NearSurfaceFile>,
    #[serde(rename = "delta-curve")]
    pub delta_curve: Option<DeltaCurveFile>,
    pub oppenheim: Option<OppenheimFile>,
    #[serde(rename = "patch-count")]
    pub patch_count: Option<PatchCountFile>,
    #[serde(rename = "patch-audit")]
    pub patch_audit: Option<PatchAuditFile>,
    pub diagnostic: Option<DiagnosticFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolaCountFile {
    pub generator: Option<String>,
    #[serde(rename = "box")]
    pub box_: Option<String>,
    #[serde(rename = "T")]
    pub t: Option<OneOrMany<RatValue>>,
    pub beta: Option<RatValue>,
    pub bruteforce: Option<bool>,
    pub guard: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantFormsFile {
    pub generator: Option<String>,
    pub height_bound: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticFile {
    pub generator: Option<String>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "T0")]
    pub t0: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearSurfaceFile {
    pub expr: Option<String>,
    pub domain: Option<String>,
    #[serde(rename = "Q")]
    pub q: Option<OneOrMany<u64>>,
    pub eps: Option<RatValue>,
    pub distance: Option<DistanceMode>,
    pub max_work: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaCurveFile {
    pub expr: Option<String>,
    pub domain: Option<String>,
    #[serde(rename = "Q")]
    pub q: Option<u64>,
    pub points: Option<Vec<u64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OppenheimFile {
    pub form: Option<String>,
    pub constraints: Option<String>,
    #[serde(rename = "box")]
    pub box_: Option<String>,
    pub qmax: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchCountFile {
    pub datum: Option<String>,
    #[serde(rename = "Q")]
    pub q: Option<RatValue>,
    pub windows: Option<String>,
    pub volume: Option<VolumeMethod>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchAuditFile {
    pub expr: Option<String>,
    pub domain: Option<String>,
    pub delta: Option<f64>,
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    pub eps: Option<f64>,
    pub samples: Option<u64>,
}

/// Reads a TOML file; unknown keys are rejected.
pub fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<FileConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
}

// ---- overrides ----

/// Values given on the command line; each replaces the matching config key.
#[derive(Debug, Default)]
pub struct Overrides {
    pub mode: Option<String>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub timings: bool,
    /// Experiment keys as `(name, value)` pairs in the block's TOML spelling.
    pub keys: Vec<(&'static str, String)>,
}

impl Overrides {
    fn get(&self, key: &str) -> Option<&str> {
        self.keys.iter().rev().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, text: &str) -> Result<T, ConfigError> {
    text.trim().parse().map_err(|_| ConfigError(format!("{key}: cannot parse {text:?}")))
}

fn list<T: std::str::FromStr>(key: &str, text: &str) -> Result<Vec<T>, ConfigError> {
    text.split(',').map(|s| parse_num(key, s)).collect()
}

fn require<T>(v: Option<T>, kind: Kind, key: &str) -> Result<T, ConfigError> {
    match v {
        Some(v) => Ok(v),
        None => err(format!("{}: missing required key {key:?}", kind.name())),
    }
}

// ---- resolved configuration ----

/// How `ε` is chosen: a literal value or `c·Q^{-k}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EpsSpec {
    Value(String),
    Auto { c: String, k: u32 },
}

impl EpsSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let t = text.trim();
        let Some(rest) = t.strip_prefix("auto:") else {
            rational("eps", t)?;
            return Ok(EpsSpec::Value(t.to_string()));
        };
        let (c, pow) = match rest.split_once('*') {
            Some((c, pow)) => (c.trim(), pow.trim()),
            None => ("1", rest.trim()),
        };
        let Some(k) = pow.strip_prefix("Q^-") else {
            return err(format!("eps: expected auto:[c*]Q^-k, got {text:?}"));
        };
        rational("eps", c)?;
        Ok(EpsSpec::Auto { c: c.to_string(), k: parse_num("eps", k)? })
    }

    pub fn value(&self, q: u64) -> BigRational {
        match self {
            EpsSpec::Value(v) => parse_rational(v).expect("validated"),
            EpsSpec::Auto { c, k } => {
                let c = parse_rational(c).expect("validated");
                c / BigRational::from_integer(num_bigint::BigInt::from(q).pow(*k))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParabolaCount {
    pub generator: String,
    #[serde(rename = "box")]
    pub box_: String,
    #[serde(rename = "T")]
    pub t: Vec<String>,
    pub beta: String,
    pub bruteforce: bool,
    pub guard: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantForms {
    pub generator: String,
    pub height_bound: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostic {
    pub generator: String,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "T0")]
    pub t0: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NearSurface {
    pub expr: String,
    pub domain: String,
    #[serde(rename = "Q")]
    pub q: Vec<u64>,
    pub eps: EpsSpec,
    pub distance: DistanceMode,
    pub max_work: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaCurve {
    pub expr: String,
    pub domain: String,
    #[serde(rename = "Q")]
    pub q: u64,
    pub points: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Oppenheim {
    pub form: String,
    pub constraints: String,
    #[serde(rename = "box")]
    pub box_: String,
    pub qmax: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchCount {
    pub datum: String,
    #[serde(rename = "Q")]
    pub q: String,
    pub windows: String,
    pub volume: VolumeMethod,
}

#[derive(Clone, Debug, Serialize)]
pub struct PatchAudit {
    pub expr: String,
    pub domain: String,
    pub delta: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub eps: f64,
    pub samples: u64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Params {
    ParabolaCount(ParabolaCount),
    InvariantForms(InvariantForms),
    NearSurface(NearSurface),
    DeltaCurve(DeltaCurve),
    Oppenheim(Oppenheim),
    PatchCount(PatchCount),
    PatchAudit(PatchAudit),
    Diagnostic(Diagnostic),
}

/// Everything that determines the content of a report. Execution settings
/// (worker count, output paths) are kept outside so that reports compare
/// byte for byte across them.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub experiment: Kind,
    pub mode: Mode,
    pub seed: u64,
    pub timings: bool,
    pub params: Params,
    #[serde(skip)]
    pub exec: Exec,
}

#[derive(Clone, Debug, Default)]
pub struct Exec {
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    /// Directory that relative input paths in the config file refer to.
    pub base_dir: PathBuf,
}

/// Worker count from `PLAB_THREADS`, else the machine's parallelism.
pub fn default_threads() -> Result<usize, ConfigError> {
    match std::env::var("PLAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => err(format!("PLAB_THREADS must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn rat_text(field: &str, v: RatValue) -> Result<String, ConfigError> {
    let t = v.text();
    rational(field, &t)?;
    Ok(t)
}

/// Merges file values and overrides for the experiment `kind`.
pub fn resolve(kind: Kind, file: FileConfig, base_dir: PathBuf, ov: &Overrides) -> Result<Resolved, ConfigError> {
    if let Some(k) = file.experiment {
        if k != kind {
            return err(format!("config is for {:?} but the subcommand is {:?}", k.name(), kind.name()));
        }
    }
    let mode = match &ov.mode {
        Some(m) => m.parse()?,
        None => file.mode.unwrap_or_default(),
    };
    let threads = match ov.threads.or(file.threads) {
        Some(0) => return err("threads must be positive"),
        Some(n) => n,
        None => default_threads()?,
    };
    let seed = ov.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let timings = ov.timings || file.timings.unwrap_or(false);
    let rel = |p: PathBuf| if p.is_relative() { base_dir.join(p) } else { p };
    let exec = Exec {
        threads,
        output: ov.output.clone().or(file.output.map(rel)),
        csv: ov.csv.clone().or(file.csv.map(rel)),
        base_dir: base_dir.clone(),
    };
    let s = |key: &str, v: Option<String>| ov.get(key).map(str::to_string).or(v);
    let params = match kind {
        Kind::ParabolaCount => {
            let f = file.parabola_count.unwrap_or_default();
            let t = match ov.get("T") {
                Some(list) => list.split(',').map(|x| x.trim().to_string()).collect(),
                None => require(f.t, kind, "T")?.into_vec().into_iter().map(|v| rat_text("T", v)).collect::<Result<Vec<_>, _>>()?,
            };
            if t.is_empty() {
                return err("parabola-count: T is empty");
            }
            for x in &t {
                rational("T", x)?;
            }
            let beta = match ov.get("beta") {
                Some(b) => b.to_string(),
                None => rat_text("beta", require(f.beta, kind, "beta")?)?,
            };
            rational("beta", &beta)?;
            Params::ParabolaCount(ParabolaCount {
                generator: require(s("generator", f.generator), kind, "generator")?,
                box_: require(s("box", f.box_), kind, "box")?,
                t,
                beta,
                bruteforce: match ov.get("bruteforce") {
                    Some(v) => parse_num("bruteforce", v)?,
                    None => f.bruteforce.unwrap_or(false),
                },
                guard: match ov.get("guard") {
                    Some(v) => parse_num("guard", v)?,
                    None => f.guard.unwrap_or(plab_core::parabolas::BRUTE_FORCE_LIMIT),
                },
            })
        }
        Kind::InvariantForms => {
            let f = file.invariant_forms.unwrap_or_default();
            Params::InvariantForms(InvariantForms {
                generator: require(s("generator", f.generator), kind, "generator")?,
                height_bound: match ov.get("height_bound") {
                    Some(v) => parse_num("height_bound", v)?,
                    None => f.height_bound.unwrap_or(50),
                },
            })
        }
        Kind::Diagnostic => {
            let f = file.diagnostic.unwrap_or_default();
            Params::Diagnostic(Diagnostic {
                generator: require(s("generator", f.generator), kind, "generator")?,
                c: match ov.get("C") {
                    Some(v) => parse_num("C", v)?,
                    None => require(f.c, kind, "C")?,
                },
                t0: match ov.get("T0") {
                    Some(v) => parse_num("T0", v)?,
                    None => require(f.t0, kind, "T0")?,
                },
            })
        }
        Kind::NearSurface => {
            let f = file.near_surface.unwrap_or_default();
            let eps = match ov.get("eps") {
                Some(v) => v.to_string(),
                None => f.eps.map(|v| v.text()).unwrap_or_else(|| "auto:Q^-1".into()),
            };
            Params::NearSurface(NearSurface {
                expr: require(s("expr", f.expr), kind, "expr")?,
                domain: require(s("domain", f.domain), kind, "domain")?,
                q: match ov.get("Q") {
                    Some(v) => list("Q", v)?,
                    None => require(f.q, kind, "Q")?.into_vec(),
                },
                eps: EpsSpec::parse(&eps)?,
                distance: match ov.get("distance") {
                    Some(v) => v.parse().map_err(|e| ConfigError(format!("distance: {e}")))?,
                    None => f.distance.unwrap_or(DistanceMode::Vertical),
                },
                max_work: match ov.get("max_work") {
                    Some(v) => parse_num("max_work", v)?,
                    None => f.max_work.unwrap_or(plab_core::surfaces::NearOptions::default().max_work),
                },
            })
        }
        Kind::DeltaCurve => {
            let f = file.delta_curve.unwrap_or_default();
            let q: u64 = match ov.get("Q") {
                Some(v) => parse_num("Q", v)?,
                None => require(f.q, kind, "Q")?,
            };
            let points = match ov.get("points") {
                Some(v) => list("points", v)?,
                None => f.points.unwrap_or_else(|| doubling_grid(q)),
            };
            if points.iter().any(|&p| p == 0 || p > q) {
                return err("delta-curve: points must lie in 1..=Q");
            }
            Params::DeltaCurve(DeltaCurve {
                expr: require(s("expr", f.expr), kind, "expr")?,
                domain: require(s("domain", f.domain), kind, "domain")?,
                q,
                points,
            })
        }
        Kind::Oppenheim => {
            let f = file.oppenheim.unwrap_or_default();
            Params::Oppenheim(Oppenheim {
                form: require(s("form", f.form), kind, "form")?,
                constraints: require(s("constraints", f.constraints), kind, "constraints")?,
                box_: require(s("box", f.box_), kind, "box")?,
                qmax: match ov.get("qmax") {
                    Some(v) => parse_num("qmax", v)?,
                    None => require(f.qmax, kind, "qmax")?,
                },
            })
        }
        Kind::PatchCount => {
            let f = file.patch_count.unwrap_or_default();
            let q = match ov.get("Q") {
                Some(v) => v.to_string(),
                None => rat_text("Q", require(f.q, kind, "Q")?)?,
            };
            rational("Q", &q)?;
            Params::PatchCount(PatchCount {
                datum: require(s("datum", f.datum), kind, "datum")?,
                q,
                windows: require(s("windows", f.windows), kind, "windows")?,
                volume: match ov.get("volume") {
                    Some("monte-carlo" | "montecarlo") => VolumeMethod::MonteCarlo,
                    Some("quadrature") => VolumeMethod::Quadrature,
                    Some(v) => return err(format!("volume must be montecarlo or quadrature, got {v:?}")),
                    None => f.volume.unwrap_or(VolumeMethod::MonteCarlo),
                },
            })
        }
        Kind::PatchAudit => {
            let f = file.patch_audit.unwrap_or_default();
            let q: f64 = match ov.get("Q") {
                Some(v) => parse_num("Q", v)?,
                None => require(f.q, kind, "Q")?,
            };
            Params::PatchAudit(PatchAudit {
                expr: require(s("expr", f.expr), kind, "expr")?,
                domain: require(s("domain", f.domain), kind, "domain")?,
                delta: match ov.get("delta") {
                    Some(v) => parse_num("delta", v)?,
                    None => require(f.delta, kind, "delta")?,
                },
                q,
                eps: match ov.get("eps") {
                    Some(v) => parse_num("eps", v)?,
                    None => f.eps.unwrap_or(1.0 / q),
                },
                samples: match ov.get("samples") {
                    Some(v) => parse_num("samples", v)?,
                    None => f.samples.unwrap_or(200_000),
                },
            })
        }
    };
    if let Params::NearSurface(p) = &params {
        if p.q.is_empty() || p.q.contains(&0) {
            return err("near-surface: Q values must be positive");
        }
    }
    if mode == Mode::Float && matches!(kind, Kind::NearSurface | Kind::PatchAudit) {
        return err(format!("{} has no float mode", kind.name()));
    }
    Ok(Resolved { experiment: kind, mode, seed, timings, params, exec })
}

/// `1, 2, 4, …` up to and including `q`.
fn doubling_grid(q: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |&p| p.checked_mul(2)).take_while(|&p| p < q).collect();
    out.push(q.max(1));
    out
}
