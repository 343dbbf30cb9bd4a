//! Experiment runner: feeds a source into a table, records error and
//! residual curves, and fits decay rates.
//!
//! An [`ExperimentSpec`] plus its seed determines a run completely. Reports
//! serialize to JSON (invalid numbers become `null`) and to CSV with one
//! row per `(k, n)`.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linspace::{Element, Functional, LinalgError, Shape};
use crate::scalar_eps::{ScalarEpsConfig, ScalarEpsTable};
use crate::sequences::{Sequence, SequenceError, SourceSpec};
use crate::topo_eps::{self, Form, TeaTable, TeaVariant, TopoConfig, TopoEpsTable, TopoOutput, Variant};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("source: {0}")]
    Source(#[from] SequenceError),
    #[error("algorithm: {0}")]
    Linalg(#[from] LinalgError),
    #[error("functional: {0}")]
    Functional(String),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Scalar,
    Tea1,
    Tea2,
    Stea1,
    Stea2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Scalar, Algorithm::Tea1, Algorithm::Tea2, Algorithm::Stea1, Algorithm::Stea2];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Scalar => "scalar",
            Algorithm::Tea1 => "tea1",
            Algorithm::Tea2 => "tea2",
            Algorithm::Stea1 => "stea1",
            Algorithm::Stea2 => "stea2",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm '{s}'"))
    }
}

fn default_form() -> Form {
    Form::Three
}
fn default_p() -> i32 {
    10
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub algo: Algorithm,
    #[serde(default = "default_form")]
    pub form: Form,
    pub max_k: usize,
    #[serde(default = "default_p")]
    pub p: i32,
    #[serde(default = "yes")]
    pub particular_rules: bool,
}

impl AlgorithmSpec {
    pub fn new(algo: Algorithm, max_k: usize) -> Self {
        AlgorithmSpec { algo, form: Form::Three, max_k, p: 10, particular_rules: true }
    }

    pub fn label(&self) -> String {
        match self.algo {
            Algorithm::Stea1 | Algorithm::Stea2 => format!("{}-{}", self.algo.name(), u8::from(self.form)),
            a => a.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalSpec {
    /// `Σ yᵢ xᵢ`; `y` defaults to all ones.
    Dot {
        #[serde(default)]
        y: Option<Vec<f64>>,
    },
    Trace,
    /// `trace(YᵀX)`, `Y` row-major; defaults to all ones.
    TraceY {
        #[serde(default)]
        y: Option<Vec<f64>>,
    },
    Bilinear {
        #[serde(default)]
        u: Option<Vec<f64>>,
        #[serde(default)]
        v: Option<Vec<f64>>,
    },
}

impl Default for FunctionalSpec {
    fn default() -> Self {
        FunctionalSpec::Dot { y: None }
    }
}

impl FunctionalSpec {
    pub fn build(&self, shape: Shape) -> Result<Functional<f64>, HarnessError> {
        let bad = |what: &str, want: usize, got: usize| {
            HarnessError::Functional(format!("{what} has {got} entries, the {shape} input needs {want}"))
        };
        let f = match self {
            FunctionalSpec::Dot { y } => {
                let y = y.clone().unwrap_or_else(|| vec![1.0; shape.len()]);
                if y.len() != shape.len() {
                    return Err(bad("y", shape.len(), y.len()));
                }
                Functional::Dot { y, conjugate: true }
            }
            FunctionalSpec::Trace => Functional::Trace,
            FunctionalSpec::TraceY { y } => {
                let y = y.clone().unwrap_or_else(|| vec![1.0; shape.len()]);
                if y.len() != shape.len() {
                    return Err(bad("Y", shape.len(), y.len()));
                }
                Functional::TraceY(Element::from_f64(shape, &y)?)
            }
            FunctionalSpec::Bilinear { u, v } => {
                let (m, s) = match shape {
                    Shape::Matrix(m, s) => (m, s),
                    _ => return Err(HarnessError::Functional("bilinear needs matrix input".into())),
                };
                let u = u.clone().unwrap_or_else(|| vec![1.0; m]);
                let v = v.clone().unwrap_or_else(|| vec![1.0; s]);
                if u.len() != m {
                    return Err(bad("u", m, u.len()));
                }
                if v.len() != s {
                    return Err(bad("v", s, v.len()));
                }
                Functional::Bilinear { u, v }
            }
        };
        if !f.accepts(shape) {
            return Err(HarnessError::Functional(format!("functional does not apply to {shape} input")));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    InfNormError,
    FrobeniusResidual,
    StabilityMargin,
    RatioSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopRule {
    NTerms { n: usize },
    /// Stop once an entry of the deepest column has residual (or error,
    /// when no residual is available) at most `tau`.
    Residual { tau: f64, max_terms: usize },
}

impl StopRule {
    fn max_terms(&self) -> usize {
        match *self {
            StopRule::NTerms { n } => n,
            StopRule::Residual { max_terms, .. } => max_terms,
        }
    }
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::InfNormError]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub source: SourceSpec,
    pub algorithm: AlgorithmSpec,
    #[serde(default)]
    pub functional: FunctionalSpec,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    pub stop: StopRule,
    /// Store every entry's values in the report.
    #[serde(default)]
    pub keep_values: bool,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }
}

/// Config file holding several experiments as `[[experiment]]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFile {
    pub experiment: Vec<ExperimentSpec>,
}

impl ExperimentFile {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

fn opt(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    /// Half column: the entry is `ε_{2k}^{(n)}`.
    pub k: usize,
    pub n: usize,
    pub valid: bool,
    pub norm_inf: Option<f64>,
    pub error: Option<f64>,
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Option<f64>>>,
}

impl Entry {
    /// Source terms consumed to produce this entry.
    pub fn terms_consumed(&self) -> usize {
        self.n + 2 * self.k + 1
    }
}

/// Plain iterate `S_n` measured the same way as the table entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainEntry {
    pub n: usize,
    pub error: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub label: String,
    pub algorithm: AlgorithmSpec,
    pub shape: String,
    pub n_terms: usize,
    pub sigma: usize,
    pub peak_storage: Option<usize>,
    pub storage_budget: Option<usize>,
    pub entries: Vec<Entry>,
    pub plain: Vec<PlainEntry>,
    #[serde(default)]
    pub stability_margin: BTreeMap<usize, Vec<Option<f64>>>,
    #[serde(default)]
    pub ratio_series: BTreeMap<usize, Vec<(usize, Option<f64>)>>,
    /// Wall time in seconds; not part of the reproducible content.
    pub wall_time: f64,
}

impl RunReport {
    pub fn entry(&self, k: usize, n: usize) -> Option<&Entry> {
        self.entries.iter().find(|e| e.k == k && e.n == n)
    }

    /// Entries of half column `k` ordered by `n`.
    pub fn column(&self, k: usize) -> Vec<&Entry> {
        let mut c: Vec<&Entry> = self.entries.iter().filter(|e| e.k == k).collect();
        c.sort_by_key(|e| e.n);
        c
    }

    pub fn max_k(&self) -> usize {
        self.entries.iter().map(|e| e.k).max().unwrap_or(0)
    }

    /// Errors of column `k` indexed by `n`; invalid or missing values are NaN.
    pub fn error_curve(&self, k: usize) -> Vec<f64> {
        self.column(k).iter().map(|e| e.error.unwrap_or(f64::NAN)).collect()
    }

    pub fn residual_curve(&self, k: usize) -> Vec<f64> {
        self.column(k).iter().map(|e| e.residual.unwrap_or(f64::NAN)).collect()
    }

    pub fn plain_error(&self, n: usize) -> Option<f64> {
        self.plain.get(n).and_then(|p| p.error)
    }

    pub fn plain_residual(&self, n: usize) -> Option<f64> {
        self.plain.get(n).and_then(|p| p.residual)
    }

    /// The report without its wall time, for reproducibility checks.
    pub fn content(&self) -> RunReport {
        RunReport { wall_time: 0.0, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per `(k, n)`: `k,n,valid,norm_inf,error,residual,v0,v1,…`.
    /// Missing numbers are empty fields.
    pub fn to_csv(&self) -> String {
        let width = self.entries.iter().filter_map(|e| e.values.as_ref().map(Vec::len)).max().unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["k", "n", "valid", "norm_inf", "error", "residual"].map(String::from).to_vec();
        header.extend((0..width).map(|i| format!("v{i}")));
        w.write_record(&header).unwrap();
        let f = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
        for e in &self.entries {
            let mut row = vec![e.k.to_string(), e.n.to_string(), (e.valid as u8).to_string(), f(e.norm_inf), f(e.error), f(e.residual)];
            if let Some(v) = &e.values {
                row.extend(v.iter().map(|&x| f(x)));
            }
            row.resize(6 + width, String::new());
            w.write_record(&row).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

enum Table {
    Scalar(ScalarEpsTable<f64>, Functional<f64>),
    Topo(TopoEpsTable<f64>),
    Tea(TeaTable<f64>),
}

impl Table {
    fn new(a: &AlgorithmSpec, functional: Functional<f64>) -> Self {
        match a.algo {
            Algorithm::Scalar => {
                let mut cfg = ScalarEpsConfig::new(2 * a.max_k).with_p(a.p);
                if !a.particular_rules {
                    cfg = cfg.without_rules();
                }
                Table::Scalar(ScalarEpsTable::new(cfg), functional)
            }
            Algorithm::Stea1 | Algorithm::Stea2 => {
                let v = if a.algo == Algorithm::Stea1 { Variant::Stea1 } else { Variant::Stea2 };
                let mut cfg = TopoConfig::new(v, a.form, a.max_k).with_p(a.p);
                if !a.particular_rules {
                    cfg = cfg.without_rules();
                }
                Table::Topo(TopoEpsTable::new(cfg, functional))
            }
            Algorithm::Tea1 => Table::Tea(TeaTable::new(TeaVariant::Tea1, a.max_k, functional)),
            Algorithm::Tea2 => Table::Tea(TeaTable::new(TeaVariant::Tea2, a.max_k, functional)),
        }
    }

    fn append(&mut self, s: Element<f64>) -> Result<Vec<TopoOutput<f64>>, LinalgError> {
        match self {
            Table::Scalar(t, f) => {
                let v = f.apply(&s)?;
                Ok(t.append(v)
                    .into_iter()
                    .filter(|(k, _, _)| k % 2 == 0)
                    .map(|(k, n, x)| TopoOutput { k: k / 2, n, element: Element::scalar(x), valid: x.is_finite() })
                    .collect())
            }
            Table::Topo(t) => t.append(s),
            Table::Tea(t) => t.append(s),
        }
    }

    fn sigma(&self) -> usize {
        match self {
            Table::Scalar(t, ..) => t.sigma(),
            Table::Topo(t) => t.sigma(),
            Table::Tea(_) => 0,
        }
    }

    fn storage(&self) -> (Option<usize>, Option<usize>) {
        match self {
            Table::Scalar(..) => (None, None),
            Table::Topo(t) => (Some(t.peak_storage()), Some(t.storage_budget())),
            Table::Tea(t) => (Some(t.peak_storage()), Some(t.storage_budget())),
        }
    }

    fn scalar_table(&self) -> Option<&ScalarEpsTable<f64>> {
        match self {
            Table::Scalar(t, ..) => Some(t),
            Table::Topo(t) => Some(t.scalar_table()),
            Table::Tea(_) => None,
        }
    }
}

struct Measure<'a> {
    source: &'a dyn Sequence<f64>,
    limit: Option<Element<f64>>,
    scalar_functional: Option<Functional<f64>>,
    want_error: bool,
    want_residual: bool,
}

impl Measure<'_> {
    fn error(&self, x: &Element<f64>) -> Option<f64> {
        if !self.want_error {
            return None;
        }
        let l = self.limit.as_ref()?;
        opt(x.sub(l).ok()?.norm_inf())
    }

    fn residual(&self, x: &Element<f64>) -> Option<f64> {
        if !self.want_residual || self.scalar_functional.is_some() || !x.is_finite() {
            return None;
        }
        self.source.residual(x).and_then(opt)
    }
}

/// Runs one experiment.
pub fn run(spec: &ExperimentSpec) -> Result<RunReport, HarnessError> {
    let start = Instant::now();
    let mut source = spec.source.build(spec.seed)?;
    let shape = source.shape();
    let functional = spec.functional.build(shape)?;
    let scalar_functional = (spec.algorithm.algo == Algorithm::Scalar).then(|| functional.clone());
    let limit = match (&scalar_functional, source.limit()) {
        (Some(f), Some(l)) => Some(Element::scalar(f.apply(&l)?)),
        (None, l) => l,
        _ => None,
    };
    let probe = source.boxed_clone();
    let measure = Measure {
        source: probe.as_ref(),
        limit,
        scalar_functional: scalar_functional.clone(),
        want_error: spec.metrics.contains(&Metric::InfNormError),
        want_residual: spec.metrics.contains(&Metric::FrobeniusResidual),
    };

    let mut table = Table::new(&spec.algorithm, functional);
    let mut entries = Vec::new();
    let mut plain = Vec::new();
    let max_terms = spec.stop.max_terms();
    let mut n_terms = 0;
    while n_terms < max_terms {
        let Some(term) = source.next_term() else { break };
        n_terms += 1;
        let measured = match &scalar_functional {
            Some(f) => Element::scalar(f.apply(&term)?),
            None => term.clone(),
        };
        plain.push(PlainEntry { n: n_terms - 1, error: measure.error(&measured), residual: measure.residual(&term) });
        let mut reached = false;
        for o in table.append(term)? {
            let valid = o.valid && o.element.is_finite();
            let e = Entry {
                k: o.k,
                n: o.n,
                valid,
                norm_inf: if valid { opt(o.element.norm_inf()) } else { None },
                error: if valid { measure.error(&o.element) } else { None },
                residual: if valid { measure.residual(&o.element) } else { None },
                values: spec.keep_values.then(|| o.element.data().iter().map(|&x| opt(x)).collect()),
            };
            if let StopRule::Residual { tau, .. } = spec.stop {
                if o.k == spec.algorithm.max_k && e.residual.or(e.error).is_some_and(|r| r <= tau) {
                    reached = true;
                }
            }
            entries.push(e);
        }
        if reached {
            break;
        }
    }
    if n_terms == 0 {
        return Err(HarnessError::Config("source produced no terms".into()));
    }
    entries.sort_by_key(|e| (e.k, e.n));

    let mut stability_margin = BTreeMap::new();
    let mut ratio_series = BTreeMap::new();
    if let Some(st) = table.scalar_table() {
        if spec.metrics.contains(&Metric::StabilityMargin) {
            for k in 0..spec.algorithm.max_k {
                let m = topo_eps::stability_margin(st, k);
                stability_margin.insert(k, m.into_iter().map(opt).collect());
            }
        }
        if spec.metrics.contains(&Metric::RatioSeries) {
            let r = topo_eps::ratio_series(st);
            for ((k, n), v) in r.values {
                ratio_series.entry(k).or_insert_with(Vec::new).push((n, opt(v)));
            }
        }
    }
    let (peak_storage, storage_budget) = table.storage();
    Ok(RunReport {
        name: spec.name.clone(),
        seed: spec.seed,
        label: spec.algorithm.label(),
        algorithm: spec.algorithm.clone(),
        shape: shape.to_string(),
        n_terms,
        sigma: table.sigma(),
        peak_storage,
        storage_budget,
        entries,
        plain,
        stability_margin,
        ratio_series,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn reports_to_json(reports: &[RunReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

pub fn reports_from_json(text: &str) -> Result<Vec<RunReport>, serde_json::Error> {
    serde_json::from_str(text)
}

/// Runs experiments on up to `jobs` threads (all cores when `None`);
/// results come back in spec order.
pub fn run_all(specs: &[ExperimentSpec], jobs: Option<usize>) -> Vec<Result<RunReport, HarnessError>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build().expect("thread pool");
    pool.install(|| specs.par_iter().map(run).collect())
}

/// Fit result with the window `[start, end)` of indices used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub value: f64,
    /// `exp(intercept)` of the log-linear fit.
    pub constant: f64,
    pub start: usize,
    pub end: usize,
}

const SKIP: usize = 3;

fn window(errors: &[f64]) -> (usize, usize) {
    let end = errors.iter().position(|x| x.is_nan() || x.is_infinite()).unwrap_or(errors.len());
    (SKIP.min(end), end)
}

fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Least-squares fit of `log e_n = log C + n log ρ`; `errors[i]` is the
/// value at `n = i`. The first three entries are discarded, the window
/// stops at the first non-finite value, and non-positive values are dropped.
pub fn fit_geometric(errors: &[f64]) -> Option<Fit> {
    let (start, end) = window(errors);
    let pts: Vec<(f64, f64)> = (start..end).filter(|&i| errors[i] > 0.0).map(|i| (i as f64, errors[i].ln())).collect();
    let (slope, icpt) = least_squares(&pts)?;
    Some(Fit { value: slope.exp(), constant: icpt.exp(), start, end })
}

pub fn fit_geometric_rate(errors: &[f64]) -> Option<f64> {
    fit_geometric(errors).map(|f| f.value)
}

/// Least-squares fit of `log e_n = log C − α log(n + b)`; returns `α`.
pub fn fit_algebraic(errors: &[f64], b: f64) -> Option<Fit> {
    let (start, end) = window(errors);
    let pts: Vec<(f64, f64)> = (start..end)
        .filter(|&i| errors[i] > 0.0)
        .map(|i| ((i as f64 + b).ln(), errors[i].ln()))
        .collect();
    let (slope, icpt) = least_squares(&pts)?;
    Some(Fit { value: -slope, constant: icpt.exp(), start, end })
}

pub fn fit_algebraic_exponent(errors: &[f64], b: f64) -> Option<f64> {
    fit_algebraic(errors, b).map(|f| f.value)
}

/// Iterations needed for column `k` to reach error `≤ tau`: the smallest
/// `n` with `error(k, n) ≤ tau`, counted as `n + 2k` (index of the last
/// term used). Uses residuals when the report has no errors.
pub fn iterations_to_tolerance(report: &RunReport, k: usize, tau: f64) -> Option<usize> {
    report
        .column(k)
        .into_iter()
        .find(|e| e.error.or(e.residual).is_some_and(|x| x <= tau))
        .map(|e| e.n + 2 * e.k)
}

/// Same as [`iterations_to_tolerance`] for the plain iterates.
pub fn plain_iterations_to_tolerance(report: &RunReport, tau: f64) -> Option<usize> {
    report.plain.iter().find(|p| p.error.or(p.residual).is_some_and(|x| x <= tau)).map(|p| p.n)
}

/// Desk-scale experiment protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Table4,
    Table5,
    Kaczmarz,
    Ns,
    Qpow,
    Stein,
}

impl Experiment {
    pub const ALL: [Experiment; 6] =
        [Experiment::Table4, Experiment::Table5, Experiment::Kaczmarz, Experiment::Ns, Experiment::Qpow, Experiment::Stein];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table4 => "table4",
            Experiment::Table5 => "table5",
            Experiment::Kaczmarz => "kaczmarz",
            Experiment::Ns => "ns",
            Experiment::Qpow => "qpow",
            Experiment::Stein => "stein",
        }
    }

    pub fn default_dim(self) -> usize {
        match self {
            Experiment::Table4 | Experiment::Table5 => 50,
            Experiment::Kaczmarz => 100,
            Experiment::Ns | Experiment::Qpow => 10,
            Experiment::Stein => 40,
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReproduceOptions {
    pub dim: Option<usize>,
    pub p: Option<i32>,
    pub seed: u64,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions { dim: None, p: None, seed: 0 }
    }
}

fn spec(name: String, seed: u64, source: SourceSpec, algorithm: AlgorithmSpec, functional: FunctionalSpec, metrics: Vec<Metric>, n: usize) -> ExperimentSpec {
    ExperimentSpec { name, seed, source, algorithm, functional, metrics, stop: StopRule::NTerms { n }, keep_values: false }
}

/// The runs making up a protocol. `table4` and `table5` pair every algorithm
/// with a run that has the particular rules disabled.
pub fn experiment_specs(exp: Experiment, opts: ReproduceOptions) -> Vec<ExperimentSpec> {
    let dim = opts.dim.unwrap_or(exp.default_dim());
    let seed = opts.seed;
    let err = vec![Metric::InfNormError];
    let both = vec![Metric::InfNormError, Metric::FrobeniusResidual];
    let mut out = Vec::new();
    match exp {
        Experiment::Table4 | Experiment::Table5 => {
            let (source, functional, p) = if exp == Experiment::Table4 {
                (SourceSpec::KernelRecurrence { dim, cols: None }, FunctionalSpec::Dot { y: None }, opts.p.unwrap_or(12))
            } else {
                (SourceSpec::KernelRecurrence { dim, cols: Some(dim) }, FunctionalSpec::Trace, opts.p.unwrap_or(7))
            };
            for algo in [Algorithm::Tea1, Algorithm::Tea2, Algorithm::Stea1, Algorithm::Stea2] {
                for rules in [true, false] {
                    if !rules && matches!(algo, Algorithm::Tea1 | Algorithm::Tea2) {
                        continue;
                    }
                    let mut a = AlgorithmSpec::new(algo, 5);
                    a.p = p;
                    a.particular_rules = rules;
                    let tag = if rules { "rules" } else { "norules" };
                    out.push(spec(format!("{}/{}/{tag}", exp.name(), a.label()), seed, source.clone(), a, functional.clone(), err.clone(), 11));
                }
            }
        }
        Experiment::Kaczmarz => {
            for k in [1, 3, 5] {
                let a = AlgorithmSpec::new(Algorithm::Stea2, k);
                let src = SourceSpec::Kaczmarz { dim, identity: false, rows_per_term: None };
                out.push(spec(format!("kaczmarz/k{k}"), seed, src, a, FunctionalSpec::Dot { y: None }, err.clone(), 121));
            }
        }
        Experiment::Ns => {
            for algo in [Algorithm::Stea1, Algorithm::Stea2] {
                let a = AlgorithmSpec::new(algo, 2);
                let src = SourceSpec::Ns { dim, lo: 0.3, hi: 0.49 };
                out.push(spec(format!("ns/{}", a.label()), seed, src, a, FunctionalSpec::Trace, both.clone(), 30));
            }
        }
        Experiment::Qpow => {
            for algo in [Algorithm::Stea1, Algorithm::Stea2] {
                let a = AlgorithmSpec::new(algo, 2);
                let src = SourceSpec::Qpow { dim, q: 0.7, gamma: 1.0, lo: 0.2, hi: 0.45 };
                out.push(spec(format!("qpow/{}", a.label()), seed, src, a, FunctionalSpec::Trace, both.clone(), 30));
            }
        }
        Experiment::Stein => {
            let a = AlgorithmSpec::new(Algorithm::Stea2, 2);
            let src = SourceSpec::Stein { dim, diag: 0.45, off: 0.225, rank: 2 };
            out.push(spec("stein/stea2-3".into(), seed, src, a, FunctionalSpec::Trace, both, 51));
        }
    }
    out
}

/// Text summary of a protocol's reports.
pub fn summarize(exp: Experiment, reports: &[RunReport]) -> String {
    use std::fmt::Write as _;
    let fmt = |x: Option<f64>| x.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
    let mut s = String::new();
    match exp {
        Experiment::Table4 | Experiment::Table5 => {
            let _ = writeln!(s, "{:<26} {:>5} {:>14}", "run", "sigma", "||eps_10^(0)||");
            for r in reports {
                let norm = r.entry(r.algorithm.max_k, 0).and_then(|e| e.norm_inf);
                let _ = writeln!(s, "{:<26} {:>5} {:>14}", r.name, r.sigma, fmt(norm));
            }
        }
        Experiment::Kaczmarz => {
            let _ = writeln!(s, "{:<14} {:>16} {:>16} {:>18}", "run", "plain err @40", "accel err @40", "iters to 1e-10");
            for r in reports {
                let k = r.algorithm.max_k;
                let acc = 40usize.checked_sub(2 * k).and_then(|n| r.entry(k, n)).and_then(|e| e.error);
                let plain_it = plain_iterations_to_tolerance(r, 1e-10).map(|x| x.to_string()).unwrap_or("-".into());
                let acc_it = iterations_to_tolerance(r, k, 1e-10).map(|x| x.to_string()).unwrap_or("-".into());
                let _ = writeln!(s, "{:<14} {:>16} {:>16} {:>9} vs {:>5}", r.name, fmt(r.plain_error(40)), fmt(acc), acc_it, plain_it);
            }
        }
        Experiment::Ns | Experiment::Qpow | Experiment::Stein => {
            let _ = writeln!(s, "{:<16} {:>4} {:>14} {:>14} {:>14}", "run", "N", "plain resid", "accel resid", "accel error");
            for r in reports {
                let k = r.algorithm.max_k;
                let last = r.n_terms - 1;
                for n_total in (2 * k..=last).filter(|n| n % 5 == 0) {
                    let e = r.entry(k, n_total - 2 * k);
                    let _ = writeln!(
                        s,
                        "{:<16} {:>4} {:>14} {:>14} {:>14}",
                        r.name,
                        n_total,
                        fmt(r.plain_residual(n_total)),
                        fmt(e.and_then(|e| e.residual)),
                        fmt(e.and_then(|e| e.error))
                    );
                }
            }
        }
    }
    s
}
