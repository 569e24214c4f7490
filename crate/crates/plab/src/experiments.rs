//! One runner per experiment kind. Each returns the JSON result, an
//! optional CSV series and warnings.

use std::path::Path;

use num_rational::BigRational;
use plab_core::exactlin::{AnyGenerator, Field, Matrix, MatrixInput, NilpotentGenerator, QuadraticNumber, ScalarMode};
use plab_core::fixtures;
use plab_core::parabolas::{count_ratio, enumerate_bruteforce, enumerate_sliced, ThickenedParabolaRegion};
use plab_core::quadforms::{detect_rational_invariant, effectiveness_diagnostic, invariant_form_space, QuadraticForm};
use plab_core::quadric_patches::{oppenheim_search, patch_count, quadric_generator, QuadricDatum, QuadricPatchSpec};
use plab_core::report::CountReport;
use plab_core::surfaces::{
    audit_decomposition, count_rational_near_with, delta_statistic, is_rational_quadric, patch_decomposition, MongeSurface,
    NearOptions,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ConfigError, Mode, Params, Resolved};

/// Failure of a run, classified for the exit code.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(plab_core::Error),
    Io(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<plab_core::Error> for RunError {
    fn from(e: plab_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(plab_core::Error::RegionTooLarge { .. }) => 3,
            _ => 1,
        }
    }
}

/// Input problems found while loading are configuration errors.
fn input<T>(what: &str, r: plab_core::Result<T>) -> Result<T, ConfigError> {
    r.map_err(|e| ConfigError(format!("{what}: {e}")))
}

pub struct Outcome {
    pub result: Value,
    pub csv: Option<Csv>,
    pub warnings: Vec<String>,
}

pub struct Csv {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn render(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish(mut rep: CountReport, timings: bool) -> CountReport {
    if !timings {
        rep.elapsed_ms = None;
    }
    rep
}

// ---- inputs ----

fn read(base: &Path, spec: &str) -> Result<String, ConfigError> {
    let path = base.join(spec);
    std::fs::read_to_string(&path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// `builtin:jordan3`, `builtin:sqrt2-quadric` or a JSON matrix file.
pub fn load_matrix(base: &Path, spec: &str) -> Result<MatrixInput, ConfigError> {
    match spec {
        "builtin:jordan3" => Ok(MatrixInput::from_matrix(&fixtures::jordan3())),
        "builtin:sqrt2-quadric" => {
            let g = input("builtin:sqrt2-quadric", quadric_generator(&fixtures::sqrt2_datum()))?;
            Ok(MatrixInput::from_matrix(g.matrix()))
        }
        s if s.starts_with("builtin:") => Err(ConfigError(format!("unknown builtin {s:?}"))),
        s => input(s, MatrixInput::from_json_str(&read(base, s)?)),
    }
}

fn load_generator(base: &Path, spec: &str, mode: Mode) -> Result<AnyGenerator, ConfigError> {
    let m = load_matrix(base, spec)?;
    input(spec, AnyGenerator::from_input(&m, mode == Mode::Float))
}

/// A quadric datum as JSON: the form's matrix and the basis `z, e, e3, …`,
/// with entries in the matrix format's conventions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumInput {
    pub mode: ScalarMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u64>,
    pub form: Vec<Vec<Value>>,
    pub z: Vec<Value>,
    pub e: Vec<Value>,
    #[serde(default)]
    pub extra: Vec<Vec<Value>>,
}

impl DatumInput {
    fn from_datum<F: Field>(d: &QuadricDatum<F>) -> Self {
        let form = MatrixInput::from_matrix(d.form().matrix());
        let mut rows = vec![d.z().to_vec(), d.e().to_vec()];
        rows.extend(d.extra().iter().cloned());
        let vecs = MatrixInput::from_matrix(&Matrix::from_rows(rows).expect("equal lengths"));
        let mut it = vecs.entries.into_iter();
        Self { mode: form.mode, d: form.d.or(vecs.d), form: form.entries, z: it.next().unwrap(), e: it.next().unwrap(), extra: it.collect() }
    }

    fn matrix(&self, entries: Vec<Vec<Value>>) -> MatrixInput {
        MatrixInput { mode: self.mode, d: self.d, entries }
    }

    fn to_datum<F: Field>(&self) -> plab_core::Result<QuadricDatum<F>> {
        let form = QuadraticForm::new(self.matrix(self.form.clone()).to_field()?)?;
        let mut rows = vec![self.z.clone(), self.e.clone()];
        rows.extend(self.extra.iter().cloned());
        let mut vecs = self.matrix(rows).to_field::<F>()?.to_rows().into_iter();
        let z = vecs.next().expect("z");
        let e = vecs.next().expect("e");
        QuadricDatum::new(form, z, e, vecs.collect())
    }
}

fn load_datum(base: &Path, spec: &str) -> Result<DatumInput, ConfigError> {
    match spec {
        "builtin:sqrt2-quadric" => Ok(DatumInput::from_datum(&fixtures::sqrt2_datum())),
        s if s.starts_with("builtin:") => Err(ConfigError(format!("unknown builtin datum {s:?}"))),
        s => serde_json::from_str(&read(base, s)?).map_err(|e| ConfigError(format!("{s}: {e}"))),
    }
}

fn intervals<F: Field>(what: &str, text: &str) -> Result<Vec<(F, F)>, ConfigError> {
    let raw = input(what, MongeSurface::parse_domain(text))?;
    Ok(raw.iter().map(|(a, b)| (F::from_rational(a), F::from_rational(b))).collect())
}

fn surface(expr: &str, domain: &str) -> Result<MongeSurface, ConfigError> {
    let dom = input("domain", MongeSurface::parse_domain(domain))?;
    input("expr", MongeSurface::new(expr, dom))
}

fn quadric_warning(s: &MongeSurface) -> Vec<String> {
    if is_rational_quadric(s) {
        vec![format!("surface {:?} is a rational quadric; counts near it are not governed by the volume heuristic", s.text())]
    } else {
        Vec::new()
    }
}

fn rat(text: &str) -> BigRational {
    plab_core::exactlin::parse_rational(text).expect("validated during resolution")
}

macro_rules! with_generator {
    ($any:expr, $g:ident => $body:expr) => {
        match $any {
            AnyGenerator::Rational($g) => $body,
            AnyGenerator::Quadratic($g) => $body,
            AnyGenerator::Float($g) => $body,
        }
    };
}

// ---- runners ----

pub fn run(cfg: &Resolved) -> Result<Outcome, RunError> {
    let base = cfg.exec.base_dir.as_path();
    match &cfg.params {
        Params::ParabolaCount(p) => {
            let g = load_generator(base, &p.generator, cfg.mode)?;
            with_generator!(g, g => parabola_count(g, p, cfg.timings))
        }
        Params::InvariantForms(p) => {
            let g = load_generator(base, &p.generator, cfg.mode)?;
            with_generator!(g, g => Ok(invariant_forms(&g, p.height_bound)))
        }
        Params::Diagnostic(p) => {
            let g = load_generator(base, &p.generator, cfg.mode)?;
            let d = with_generator!(g, g => serde_json::to_value(effectiveness_diagnostic(&g, p.c, p.t0)?))
                .map_err(|e| RunError::Io(e.to_string()))?;
            Ok(Outcome { result: d, csv: None, warnings: Vec::new() })
        }
        Params::NearSurface(p) => near_surface(p, cfg.timings),
        Params::DeltaCurve(p) => delta_curve(p, cfg.mode),
        Params::Oppenheim(p) => {
            let form = load_matrix(base, &p.form)?;
            let cons = load_matrix(base, &p.constraints)?;
            let quad = [form.mode, cons.mode].contains(&ScalarMode::Quadratic);
            match (cfg.mode, quad) {
                (Mode::Float, _) => oppenheim::<f64>(&form, &cons, p),
                (Mode::Exact, true) => oppenheim::<QuadraticNumber>(&form, &cons, p),
                (Mode::Exact, false) => oppenheim::<BigRational>(&form, &cons, p),
            }
        }
        Params::PatchCount(p) => {
            let d = load_datum(base, &p.datum)?;
            match (cfg.mode, d.mode) {
                (Mode::Float, _) => patch_count_run::<f64>(&d, p, cfg),
                (Mode::Exact, ScalarMode::Quadratic) => patch_count_run::<QuadraticNumber>(&d, p, cfg),
                (Mode::Exact, _) => patch_count_run::<BigRational>(&d, p, cfg),
            }
        }
        Params::PatchAudit(p) => {
            let s = surface(&p.expr, &p.domain)?;
            let d = patch_decomposition(&s, p.delta, p.q, p.eps)?;
            let audit = audit_decomposition(&d, p.samples, cfg.seed);
            let result = json!({
                "patches": d.len(),
                "shells": d.shells.len(),
                "cone_volume": d.cone_volume(),
                "covered_volume": d.covered_volume(),
                "audit": audit,
            });
            Ok(Outcome { result, csv: None, warnings: quadric_warning(&s) })
        }
    }
}

fn parabola_count<F: Field>(g: NilpotentGenerator<F>, p: &crate::config::ParabolaCount, timings: bool) -> Result<Outcome, RunError> {
    let bx = intervals::<F>("box", &p.box_)?;
    let (lo, hi): (Vec<F>, Vec<F>) = bx.into_iter().unzip();
    let beta = F::from_rational(&rat(&p.beta));
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for t in &p.t {
        let start = std::time::Instant::now();
        let region = input("region", ThickenedParabolaRegion::new(g.clone(), lo.clone(), hi.clone(), F::from_rational(&rat(t)), beta.clone()))?;
        let mut rep = count_ratio(&region);
        if p.bruteforce {
            let brute = enumerate_bruteforce(&region, p.guard)?;
            rep = rep.with_extra("bruteforce_agrees", brute == enumerate_sliced(&region));
        }
        rep.elapsed_ms = Some(start.elapsed().as_millis() as u64);
        let rep = finish(rep, timings);
        rows.push(vec![
            t.clone(),
            p.beta.clone(),
            rep.count.to_string(),
            rep.volume.to_string(),
            rep.predicted.to_string(),
            rep.ratio.to_string(),
            opt(rep.elapsed_ms),
            opt(rep.seed),
        ]);
        runs.push(rep);
    }
    let header = vec!["T", "beta", "count", "volume", "predicted", "ratio", "elapsed_ms", "seed"];
    Ok(Outcome { result: json!({ "runs": runs }), csv: Some(Csv { header, rows }), warnings: Vec::new() })
}

fn invariant_forms<F: Field>(g: &NilpotentGenerator<F>, height_bound: u64) -> Outcome {
    let space = invariant_form_space(g);
    let detection = detect_rational_invariant(&space, height_bound);
    let mut warnings = Vec::new();
    if detection.inconclusive {
        warnings.push("float mode: absence of a rational invariant form is not certified".to_string());
    }
    let result = json!({
        "mode": F::MODE,
        "generator": MatrixInput::from_matrix(g.matrix()),
        "dimension": space.basis.len(),
        "basis": space.basis,
        "rational_invariant": {
            "form": detection.form,
            "inconclusive": detection.inconclusive,
            "method": detection.method,
        },
        "height_bound": height_bound,
    });
    Outcome { result, csv: None, warnings }
}

fn near_surface(p: &crate::config::NearSurface, timings: bool) -> Result<Outcome, RunError> {
    let s = surface(&p.expr, &p.domain)?;
    let opts = NearOptions { max_work: p.max_work, ..NearOptions::default() };
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for &q in &p.q {
        let eps = p.eps.value(q);
        let rep = finish(count_rational_near_with(&s, q, &eps, p.distance, &opts)?, timings);
        rows.push(vec![
            q.to_string(),
            eps.to_string(),
            rep.count.to_string(),
            rep.volume.to_string(),
            rep.predicted.to_string(),
            rep.ratio.to_string(),
            opt(rep.elapsed_ms),
            opt(rep.seed),
        ]);
        runs.push(rep);
    }
    let header = vec!["Q", "eps", "count", "volume", "predicted", "ratio", "elapsed_ms", "seed"];
    Ok(Outcome { result: json!({ "runs": runs }), csv: Some(Csv { header, rows }), warnings: quadric_warning(&s) })
}

fn delta_curve(p: &crate::config::DeltaCurve, mode: Mode) -> Result<Outcome, RunError> {
    let s = surface(&p.expr, &p.domain)?;
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for &q in &p.points {
        let mut d = delta_statistic(&s, q)?;
        if mode == Mode::Float {
            d.exact = None;
        }
        rows.push(vec![q.to_string(), d.delta.to_string(), opt(d.exact.as_ref()), d.min_distance.to_string()]);
        points.push(d);
    }
    let header = vec!["Q", "delta", "delta_exact", "min_distance"];
    Ok(Outcome { result: json!({ "points": points }), csv: Some(Csv { header, rows }), warnings: quadric_warning(&s) })
}

fn oppenheim<F: Field>(form: &MatrixInput, cons: &MatrixInput, p: &crate::config::Oppenheim) -> Result<Outcome, RunError> {
    let pf = input("form", form.to_field::<F>().and_then(QuadraticForm::new))?;
    let a = input("constraints", cons.to_field::<F>())?.to_rows();
    let b = intervals::<F>("box", &p.box_)?;
    let res = oppenheim_search(&pf, &a, &b, p.qmax)?;
    let mut warnings = Vec::new();
    if res.tangency_discriminant == Some(0.0) {
        warnings.push("the constraint plane is tangent to the form's zero set".to_string());
    }
    let result = json!({ "mode": F::MODE, "search": res });
    Ok(Outcome { result, csv: None, warnings })
}

fn patch_count_run<F: Field>(d: &DatumInput, p: &crate::config::PatchCount, cfg: &Resolved) -> Result<Outcome, RunError> {
    let datum = input("datum", d.to_datum::<F>())?;
    let windows = intervals::<F>("windows", &p.windows)?;
    let spec = input("patch set", QuadricPatchSpec::new(datum, F::from_rational(&rat(&p.q)), windows))?;
    let start = std::time::Instant::now();
    let mut rep = patch_count(&spec, p.volume, cfg.seed)?;
    rep.elapsed_ms = Some(start.elapsed().as_millis() as u64);
    let rep = finish(rep, cfg.timings);
    let rows = vec![vec![
        p.q.clone(),
        rep.count.to_string(),
        rep.volume.to_string(),
        rep.predicted.to_string(),
        rep.ratio.to_string(),
        opt(rep.extra.get("count_over_sqrt_q")),
        opt(rep.elapsed_ms),
        opt(rep.seed),
    ]];
    let header = vec!["Q", "count", "volume", "predicted", "ratio", "count_over_sqrt_q", "elapsed_ms", "seed"];
    Ok(Outcome { result: serde_json::to_value(&rep).map_err(|e| RunError::Io(e.to_string()))?, csv: Some(Csv { header, rows }), warnings: Vec::new() })
}

/// Runs `cfg` on a pool of `cfg.exec.threads` workers and renders the
/// report and CSV text.
pub fn execute(cfg: &Resolved) -> Result<(String, Option<String>, Vec<String>), RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.exec.threads)
        .build()
        .map_err(|e| RunError::Io(format!("thread pool: {e}")))?;
    let out = pool.install(|| run(cfg))?;
    let report = json!({
        "experiment": cfg.experiment,
        "config": cfg,
        "result": out.result,
        "warnings": out.warnings,
    });
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| RunError::Io(e.to_string()))?;
    text.push('\n');
    Ok((text, out.csv.map(|c| c.render()), out.warnings))
}
