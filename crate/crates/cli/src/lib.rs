//! Command-line front end for `ruinlab`.
//!
//! Every command reads plain-text model files, runs an estimator or an
//! analytic evaluation, and renders the result as CSV or JSON.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use ruinlab::analytic::{exit_low, modified_ruin, sup_law};
use ruinlab::model::parse_model;
use ruinlab::pricing::{boundary_search, gerber_shiu, price_perpetual_put, GSQuery, PenaltyFn, PutContract};
use ruinlab::simulate::{
    estimate_interval_exit, estimate_modified_ruin, estimate_overjump, estimate_recovery_red, estimate_ruin,
    estimate_sup_cdf, estimate_total_deficit, ModelPair, SimOptions,
};
use ruinlab::{McConfig, MCEstimate, ValidatedModel};
use serde_json::{Map, Number, Value};

pub const DEFAULT_SEED: u64 = 20_231_117;
pub const DEFAULT_N: u64 = 1_000_000;
pub const SEED_ENV: &str = "RUINLAB_SEED";
pub const DEFAULT_TOLERANCE: f64 = 3.0;

pub const EXAMPLE_MODEL: &str = include_str!("../../../configs/example.toml");
pub const STAR_MODEL: &str = include_str!("../../../configs/star.toml");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("model `{path}`: {source}")]
    Model { path: String, source: ruinlab::Error },
    #[error(transparent)]
    Core(#[from] ruinlab::Error),
    #[error("empty result set: nothing to write")]
    EmptyReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Validate,
    Ruin,
    Overjump,
    Deficit,
    RedPeriod,
    TwoBoundary,
    ModifiedRuin,
    GerberShiu,
    PricePut,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Ruin, overshoot and modified-process functionals by Monte Carlo and
/// closed-form analytics.
#[derive(Debug, Parser)]
#[command(name = "ruinlab", version, allow_negative_numbers = true)]
pub struct Args {
    pub command: Command,
    /// Model configuration file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Reduced-premium model for the modified process.
    #[arg(long = "model-star")]
    pub model_star: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Discount force.
    #[arg(long)]
    pub s: Option<f64>,
    /// Put strike.
    #[arg(long = "K")]
    pub strike: Option<f64>,
    /// Log exercise boundary.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Replications.
    #[arg(long, default_value_t = DEFAULT_N)]
    pub n: u64,
    /// Master seed [default: 20231117, or $RUINLAB_SEED].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Safe distance below the level beyond which paths count as escaped.
    #[arg(long)]
    pub barrier: Option<f64>,
    /// Worker threads (0 = all cores); results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated grid: x for deficit, y for overjump, β for price-put.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    /// Largest |z| accepted by verify.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub command: Command,
    pub model: Option<PathBuf>,
    pub model_star: Option<PathBuf>,
    pub u: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub s: Option<f64>,
    pub strike: Option<f64>,
    pub beta: Option<f64>,
    pub n: u64,
    pub seed: u64,
    pub horizon: Option<f64>,
    pub barrier: Option<f64>,
    pub workers: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub grid: Option<Vec<f64>>,
    pub tolerance: f64,
}

impl RunRequest {
    /// Resolves the seed: `--seed`, then `env_seed`, then [`DEFAULT_SEED`].
    pub fn from_args(args: Args, env_seed: Option<&str>) -> Result<Self, CliError> {
        let seed = match (args.seed, env_seed) {
            (Some(s), _) => s,
            (None, Some(v)) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV} = `{v}` is not an unsigned integer")))?,
            (None, None) => DEFAULT_SEED,
        };
        if args.n == 0 {
            return Err(CliError::Usage("--n must be at least 1".into()));
        }
        Ok(RunRequest {
            command: args.command,
            model: args.model,
            model_star: args.model_star,
            u: args.u,
            a: args.a,
            b: args.b,
            s: args.s,
            strike: args.strike,
            beta: args.beta,
            n: args.n,
            seed,
            horizon: args.horizon,
            barrier: args.barrier,
            workers: args.workers,
            format: args.format,
            out: args.out,
            grid: args.grid,
            tolerance: args.tolerance,
        })
    }

    fn config(&self) -> McConfig {
        McConfig::new(self.n, self.seed).with_workers(self.workers)
    }

    fn options(&self) -> SimOptions {
        let mut o = SimOptions::default();
        if let Some(h) = self.horizon {
            o = o.with_horizon(h);
        }
        if let Some(l) = self.barrier {
            o = o.with_barrier(l);
        }
        o
    }

    fn need(&self, v: Option<f64>, flag: &str) -> Result<f64, CliError> {
        v.ok_or_else(|| {
            CliError::Usage(format!(
                "missing required parameter --{flag} for `{}`",
                self.command.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
            ))
        })
    }

    fn grid(&self) -> Result<&[f64], CliError> {
        self.grid
            .as_deref()
            .filter(|g| !g.is_empty())
            .ok_or_else(|| CliError::Usage("missing required parameter --grid".into()))
    }

    fn model(&self) -> Result<ValidatedModel, CliError> {
        let path = self
            .model
            .as_deref()
            .ok_or_else(|| CliError::Usage("missing required parameter --model".into()))?;
        load_model(path)
    }

    fn pair(&self) -> Result<ModelPair, CliError> {
        let star = self
            .model_star
            .as_deref()
            .ok_or_else(|| CliError::Usage("missing required parameter --model-star".into()))?;
        Ok(ModelPair::new(self.model()?, load_model(star)?)?)
    }
}

pub fn load_model(path: &Path) -> Result<ValidatedModel, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_text(&text, &path.display().to_string())
}

fn model_from_text(text: &str, name: &str) -> Result<ValidatedModel, CliError> {
    parse_model(text)
        .and_then(|spec| spec.validate())
        .map_err(|source| CliError::Model {
            path: name.to_string(),
            source,
        })
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Empty => String::new(),
            Cell::Text(s) if s.contains([',', '"', '\n', '\r']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Empty => Value::Null,
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

/// Rows under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

pub const ESTIMATE_COLUMNS: [&str; 10] = ["estimand", "u", "a", "b", "s", "n", "value", "stderr", "censored_frac", "seed"];

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Report {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn estimates() -> Self {
        Report::new(&ESTIMATE_COLUMNS)
    }

    fn push_estimate(&mut self, name: &str, u: Option<f64>, a: Option<f64>, b: Option<f64>, s: Option<f64>, e: &MCEstimate) {
        self.rows.push(vec![
            name.into(),
            u.into(),
            a.into(),
            b.into(),
            s.into(),
            Cell::Int(e.n),
            e.value.into(),
            e.stderr.into(),
            e.censored_frac.into(),
            Cell::Int(e.seed),
        ]);
    }
}

/// Renders a nonempty report: CSV with a header row, or a JSON array of
/// row objects.
pub fn render_report(report: &Report, format: Format) -> Result<String, CliError> {
    if report.rows.is_empty() {
        return Err(CliError::EmptyReport);
    }
    match format {
        Format::Csv => {
            let mut s = report.columns.join(",");
            s.push('\n');
            for row in &report.rows {
                let line: Vec<String> = row.iter().map(Cell::csv).collect();
                s.push_str(&line.join(","));
                s.push('\n');
            }
            Ok(s)
        }
        Format::Json => {
            let rows: Vec<Value> = report
                .rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = report
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, v)| (k.to_string(), v.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&Value::Array(rows)).expect("serializable");
            s.push('\n');
            Ok(s)
        }
    }
}

/// One analytic-versus-simulation comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub quantity: String,
    pub analytic: f64,
    pub mc: f64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub tolerance: f64,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new(&["quantity", "analytic", "mc", "stderr", "z", "pass"]);
        for row in &self.rows {
            r.rows.push(vec![
                row.quantity.as_str().into(),
                row.analytic.into(),
                row.mc.into(),
                row.stderr.into(),
                row.z.into(),
                Cell::Bool(row.pass),
            ]);
        }
        r
    }
}

/// Compares the supremum law of `star`, the exit-low curve of `model` and
/// the modified ruin probability of the pair against Monte Carlo.
///
/// `perturb` shifts every analytic value by that many standard errors; a
/// correct harness must fail for large shifts.
pub fn verify(
    model: &ValidatedModel,
    star: &ValidatedModel,
    cfg: &McConfig,
    opts: &SimOptions,
    tolerance: f64,
    perturb: f64,
) -> Result<VerifyReport, CliError> {
    let mut rows = Vec::new();
    let mut add = |quantity: String, analytic: f64, e: &MCEstimate| {
        let analytic = analytic + perturb * e.stderr;
        let z = e.z_score(analytic);
        rows.push(VerifyRow {
            quantity,
            analytic,
            mc: e.value,
            stderr: e.stderr,
            z,
            pass: z.abs() <= tolerance,
        });
    };

    let law = sup_law(star)?;
    let grid = [0.05, 0.1, 0.2, 0.5];
    let cdf = estimate_sup_cdf(star, &grid, cfg, opts)?;
    for (u, e) in grid.iter().zip(&cdf) {
        add(format!("sup_cdf_star[u={u}]"), law.cdf(*u), e);
    }

    for (u, b) in [(0.1, 0.5), (0.2, 0.5), (0.1, 0.3)] {
        let (p, _) = exit_low(model, u, b)?;
        let e = estimate_interval_exit(model, u, b, cfg, opts)?;
        add(format!("exit_low[u={u};b={b}]"), p, &e.lower);
    }

    let pair = ModelPair::new(model.clone(), star.clone())?;
    for (u, b) in [(0.1, 0.3), (0.2, 0.3), (0.1, 0.5)] {
        let phi = modified_ruin(model, star, u, b, b)?;
        let e = estimate_modified_ruin(&pair, u, b, b, cfg, opts)?;
        add(format!("modified_ruin[u={u};a={b};b={b}]"), phi, &e);
    }
    Ok(VerifyReport { tolerance, rows })
}

/// Result of [`run`]: a report and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Outcome {
            report,
            exit_code: EXIT_OK,
        }
    }
}

pub fn run(req: &RunRequest) -> Result<Outcome, CliError> {
    let cfg = req.config();
    let opts = req.options();
    let mut rep = Report::estimates();
    match req.command {
        Command::Validate => {
            let mut r = Report::new(&["model", "states", "stationary_drift", "adjustment_coefficient", "status"]);
            let mut models = Vec::new();
            for path in [&req.model, &req.model_star].into_iter().flatten() {
                let m = load_model(path)?;
                let drift = m.drift()?.stationary_drift;
                r.rows.push(vec![
                    Cell::Text(path.display().to_string()),
                    Cell::Int(m.m() as u64),
                    drift.into(),
                    m.adjustment_coefficient()?.into(),
                    "ok".into(),
                ]);
                models.push(m);
            }
            if models.is_empty() {
                return Err(CliError::Usage("missing required parameter --model".into()));
            }
            if let [m, s] = &models[..] {
                ModelPair::new(m.clone(), s.clone())?;
            }
            return Ok(Outcome::ok(r));
        }
        Command::Ruin => {
            let u = req.need(req.u, "u")?;
            let e = estimate_ruin(&req.model()?, u, &cfg, &opts)?;
            rep.push_estimate("ruin", Some(u), None, None, None, &e);
        }
        Command::Overjump => {
            let u = req.need(req.u, "u")?;
            let s = req.s.unwrap_or(0.0);
            let sample = estimate_overjump(&req.model()?, u, s, &cfg, &opts)?;
            rep.push_estimate("overjump_mass", Some(u), None, None, Some(s), &sample.total_mass());
            for &y in req.grid.as_deref().unwrap_or(&[]) {
                rep.push_estimate(&format!("overshoot_cdf[y={y}]"), Some(u), None, None, Some(s), &sample.overshoot_cdf(y));
            }
        }
        Command::Deficit => {
            let u = req.need(req.u, "u")?;
            let d = estimate_total_deficit(&req.model()?, u, req.grid()?, &cfg, &opts)?;
            for (x, e) in d.grid.iter().zip(&d.cdf) {
                rep.push_estimate(&format!("deficit_cdf[x={x}]"), Some(u), None, None, None, e);
            }
            rep.push_estimate("ruin", Some(u), None, None, None, &d.ruin);
        }
        Command::RedPeriod => {
            let u = req.need(req.u, "u")?;
            let s = req.need(req.s, "s")?;
            let r = estimate_recovery_red(&req.model()?, u, s, &cfg, &opts)?;
            rep.push_estimate("recovery_lt", Some(u), None, None, Some(s), &r.recovery);
            rep.push_estimate("red_period_lt", Some(u), None, None, Some(s), &r.red);
        }
        Command::TwoBoundary => {
            let u = req.need(req.u, "u")?;
            let b = req.need(req.b, "b")?;
            let e = estimate_interval_exit(&req.model()?, u, b, &cfg, &opts)?;
            rep.push_estimate("exit_low", Some(u), None, Some(b), None, &e.lower);
            rep.push_estimate("exit_high", Some(u), None, Some(b), None, &e.upper);
            rep.push_estimate("exit_low_overshoot_mean", Some(u), None, Some(b), None, &e.lower_overshoot_mean);
        }
        Command::ModifiedRuin => {
            let (u, a, b) = (req.need(req.u, "u")?, req.need(req.a, "a")?, req.need(req.b, "b")?);
            let e = estimate_modified_ruin(&req.pair()?, u, a, b, &cfg, &opts)?;
            rep.push_estimate("modified_ruin", Some(u), Some(a), Some(b), None, &e);
        }
        Command::GerberShiu => {
            let (u, a, b) = (req.need(req.u, "u")?, req.need(req.a, "a")?, req.need(req.b, "b")?);
            let s = req.s.unwrap_or(0.0);
            let penalty = match req.strike {
                Some(k) => PenaltyFn::put(k, req.beta.unwrap_or(0.0))?,
                None => PenaltyFn::constant(1.0)?,
            };
            let e = gerber_shiu(&req.pair()?, &GSQuery { u, a, b, s, penalty }, &cfg, &opts)?;
            for w in &e.warnings {
                eprintln!("warning: {w}");
            }
            rep.push_estimate("gerber_shiu", Some(u), Some(a), Some(b), Some(s), &e);
        }
        Command::PricePut => {
            let (u, a, b) = (req.need(req.u, "u")?, req.need(req.a, "a")?, req.need(req.b, "b")?);
            let (strike, s) = (req.need(req.strike, "K")?, req.need(req.s, "s")?);
            let pair = req.pair()?;
            if let Some(betas) = req.grid.as_deref().filter(|g| !g.is_empty()) {
                let search = boundary_search(&pair, u, strike, s, betas, a, b, &cfg, &opts)?;
                let mut r = Report::new(&["beta", "price", "stderr"]);
                for (beta, e) in &search.curve {
                    r.rows.push(vec![(*beta).into(), e.value.into(), e.stderr.into()]);
                }
                return Ok(Outcome::ok(r));
            }
            let beta = req.need(req.beta, "beta")?;
            let e = price_perpetual_put(&pair, &PutContract { strike, beta, s, u }, a, b, &cfg, &opts)?;
            rep.push_estimate("put_price", Some(u), Some(a), Some(b), Some(s), &e);
        }
        Command::Verify => {
            let model = match &req.model {
                Some(p) => load_model(p)?,
                None => model_from_text(EXAMPLE_MODEL, "built-in example")?,
            };
            let star = match &req.model_star {
                Some(p) => load_model(p)?,
                None => model_from_text(STAR_MODEL, "built-in star")?,
            };
            let v = verify(&model, &star, &cfg, &opts, req.tolerance, 0.0)?;
            return Ok(Outcome {
                report: v.to_report(),
                exit_code: if v.pass() { EXIT_OK } else { EXIT_VERIFY_FAILED },
            });
        }
    }
    Ok(Outcome::ok(rep))
}

fn exit_code_for(e: &CliError) -> i32 {
    match e {
        CliError::Usage(_)
        | CliError::Read { .. }
        | CliError::Write { .. }
        | CliError::Model { .. }
        | CliError::Core(_)
        | CliError::EmptyReport => EXIT_INVALID,
    }
}

fn describe(e: &CliError) -> String {
    let mut s = format!("error: {e}");
    let violations = match e {
        CliError::Model { source, .. } | CliError::Core(source) => source.violations(),
        _ => &[],
    };
    for v in violations {
        let _ = write!(s, "\n  [{}] {}", v.code.as_str(), v.message);
    }
    s
}

/// Parses `argv`, runs the command and writes the report to `--out` or
/// standard output. Returns the process exit code.
pub fn main_with<I, T>(argv: I, env_seed: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = RunRequest::from_args(args, env_seed).and_then(|req| {
        let outcome = run(&req)?;
        let doc = render_report(&outcome.report, req.format)?;
        match &req.out {
            Some(path) => fs::write(path, doc).map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })?,
            None => print!("{doc}"),
        }
        Ok(outcome.exit_code)
    });
    match result {
        Ok(code) => {
            if code == EXIT_VERIFY_FAILED {
                eprintln!("verify: at least one comparison exceeded the tolerance");
            }
            code
        }
        Err(e) => {
            eprintln!("{}", describe(&e));
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        let mut r = Report::estimates();
        r.push_estimate("ruin", Some(0.2), None, None, None, &MCEstimate::exact(0.25, 4, 9));
        r
    }

    #[test]
    fn csv_has_header_and_one_row() {
        let csv = render_report(&sample_report(), Format::Csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, ["estimand,u,a,b,s,n,value,stderr,censored_frac,seed", "ruin,0.2,,,,4,0.25,0.0,0.0,9"]);
    }

    #[test]
    fn json_matches_csv_values() {
        let json = render_report(&sample_report(), Format::Json).unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v[0]["value"].as_f64(), Some(0.25));
        assert_eq!(v[0]["a"], Value::Null);
        assert_eq!(v[0]["seed"].as_u64(), Some(9));
    }

    #[test]
    fn empty_report_is_an_error() {
        assert!(matches!(render_report(&Report::estimates(), Format::Csv), Err(CliError::EmptyReport)));
    }

    #[test]
    fn text_cells_are_quoted() {
        assert_eq!(Cell::Text("a,b".into()).csv(), "\"a,b\"");
        assert_eq!(Cell::Text("say \"x\"".into()).csv(), "\"say \"\"x\"\"\"");
    }

    #[test]
    fn seed_resolution_order() {
        let args = |extra: &[&str]| {
            let mut v = vec!["ruinlab", "ruin"];
            v.extend_from_slice(extra);
            Args::try_parse_from(v).unwrap()
        };
        assert_eq!(RunRequest::from_args(args(&[]), None).unwrap().seed, DEFAULT_SEED);
        assert_eq!(RunRequest::from_args(args(&[]), Some("42")).unwrap().seed, 42);
        assert_eq!(RunRequest::from_args(args(&["--seed", "7"]), Some("42")).unwrap().seed, 7);
        assert!(RunRequest::from_args(args(&[]), Some("x")).is_err());
        assert!(RunRequest::from_args(args(&["--n", "0"]), None).is_err());
    }
}
