//! `gwi`: batch front end for model checks, simulation, exact series,
//! predictions and theorem sweeps.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gwi_core::estimate::{geometric_grid, run_replicas, sweep_stationary, sweep_theorem, SweepOptions, SweepReport};
use gwi_core::predict::{prediction_curve, window, Quantity};
use gwi_core::series::{lemma1_ratio, Pgf, PowerSeries};
use gwi_core::simulate::{sample_stationary_x, simulate_coupled, simulate_sn, total_progeny, Outcome, SimBudget};
use gwi_core::{models::validate_spec, Error, Model, ModelSpec};
use serde::Deserialize;
use serde_json::json;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gwi", version, about = "Critical Galton–Watson processes with heavy-tailed immigration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model validation.
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
    /// Replica streams as JSON lines (or CSV).
    Simulate {
        #[command(subcommand)]
        cmd: SimulateCmd,
    },
    /// Exact laws from generating functions.
    Exact {
        #[command(subcommand)]
        cmd: ExactCmd,
    },
    /// Asymptotic predictions over a grid.
    Predict(Params),
    /// Ratio sweeps against the asymptotics.
    Validate {
        #[command(subcommand)]
        cmd: ValidateCmd,
    },
}

#[derive(Subcommand)]
enum ModelCmd {
    Check(Params),
}

#[derive(Subcommand)]
enum SimulateCmd {
    Sn(Params),
    Progeny(Params),
    Coupled(Params),
    Stationary(Params),
}

#[derive(Subcommand)]
enum ExactCmd {
    Sn(Params),
    Yinf(Params),
    Sinf(Params),
    Stationary(Params),
    Progeny(Params),
}

#[derive(Subcommand)]
enum ValidateCmd {
    Theorem1(Params),
    Theorem2(Params),
    Stationary(Params),
    Lemma1(Params),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Family {
    Heavy,
    VeryHeavy,
    Finite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum QuantityArg {
    X,
    T,
    Y,
    Ld,
}

/// Every flag, also accepted as a key of the flat JSON config file.
/// Flags override the file.
#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(deny_unknown_fields, default)]
struct Params {
    /// Flat JSON file with any of these options as keys.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,

    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    cc: Option<f64>,
    /// Offspring pmf, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    xi_pmf: Option<Vec<f64>>,
    /// Immigration pmf, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    eta_pmf: Option<Vec<f64>>,

    #[arg(long)]
    n: Option<usize>,
    /// Horizons for `validate lemma1`, comma separated.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// Evaluation points, comma separated.
    #[arg(long, value_delimiter = ',')]
    x: Option<Vec<f64>>,
    #[arg(long)]
    x_lo: Option<f64>,
    #[arg(long)]
    x_hi: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    /// Replicas; accepts forms like `1e6`.
    #[arg(long)]
    reps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "GWI_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    pop_cap: Option<f64>,
    #[arg(long)]
    gen_cap: Option<f64>,
    #[arg(long)]
    work_cap: Option<f64>,
    /// Ancestors for `simulate progeny`.
    #[arg(long)]
    z0: Option<u64>,
    /// Truncation of the stationary series representation.
    #[arg(long)]
    m: Option<usize>,
    /// Extraction size (power of two).
    #[arg(long = "N", alias = "n-points")]
    #[serde(rename = "N")]
    n_points: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Confidence level of the Wilson intervals.
    #[arg(long)]
    level: Option<f64>,
    /// Skip the exact-series channel of a sweep.
    #[arg(long)]
    no_exact: bool,
    #[arg(long, value_enum)]
    quantity: Option<QuantityArg>,

    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Leave out the timestamp line of CSV output.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        kind: "config",
        message: message.into(),
    }
}

type Res<T> = std::result::Result<T, Failure>;

macro_rules! merge {
    ($flags:expr, $file:expr; $($f:ident),*; $($b:ident),*) => {
        Params { config: None, $($f: $flags.$f.or($file.$f),)* $($b: $flags.$b || $file.$b),* }
    };
}

impl Params {
    fn resolve(self) -> Res<Params> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<Params>(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?
            }
            None => Params::default(),
        };
        Ok(merge!(self, file; family, nu, delta, c1, c2, a, kappa, cc, xi_pmf, eta_pmf, n, ns, x, x_lo, x_hi,
            grid_size, k1, k2, reps, seed, workers, pop_cap, gen_cap, work_cap, z0, m, n_points, tol, level,
            quantity, out, format; no_exact, no_timestamp))
    }

    fn spec(&self) -> Res<ModelSpec> {
        let family = match self.family {
            Some(f) => f,
            None if self.xi_pmf.is_some() || self.eta_pmf.is_some() => Family::Finite,
            None if self.a.is_some() || self.kappa.is_some() || self.cc.is_some() => Family::VeryHeavy,
            None => Family::Heavy,
        };
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| config_error(format!("missing --{name}")));
        Ok(match family {
            Family::Heavy => ModelSpec::heavy(
                need(self.nu, "nu")?,
                need(self.delta, "delta")?,
                need(self.c1, "c1")?,
                need(self.c2, "c2")?,
            ),
            Family::VeryHeavy => ModelSpec::very_heavy(
                need(self.a, "a")?,
                need(self.delta, "delta")?,
                need(self.kappa, "kappa")?,
                need(self.cc, "cc")?,
            ),
            Family::Finite => ModelSpec::finite(
                self.xi_pmf.clone().ok_or_else(|| config_error("missing --xi-pmf"))?,
                self.eta_pmf.clone().ok_or_else(|| config_error("missing --eta-pmf"))?,
            ),
        })
    }

    fn model(&self) -> Res<Model> {
        Ok(Model::new(self.spec()?)?)
    }

    fn count(v: Option<f64>, name: &str, default: u64) -> Res<u64> {
        match v {
            None => Ok(default),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
            Some(v) => Err(config_error(format!("--{name} must be a nonnegative integer, got {v}"))),
        }
    }

    fn reps(&self, default: u64) -> Res<u64> {
        Self::count(self.reps, "reps", default)
    }

    fn n(&self) -> Res<usize> {
        self.n.ok_or_else(|| config_error("missing --n"))
    }

    fn budget(&self) -> Res<SimBudget> {
        let d = SimBudget::default();
        let b = SimBudget {
            pop_cap: Self::count(self.pop_cap, "pop-cap", d.pop_cap)?,
            gen_cap: Self::count(self.gen_cap, "gen-cap", d.gen_cap)?,
            work_cap: Self::count(self.work_cap, "work-cap", d.work_cap)?,
        };
        if b.pop_cap == 0 || b.gen_cap == 0 || b.work_cap == 0 {
            return Err(config_error("caps must be positive"));
        }
        Ok(b)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    fn sweep_options(&self) -> Res<SweepOptions> {
        let level = self.level.unwrap_or(0.95);
        if !(level > 0.0 && level < 1.0) {
            return Err(config_error(format!("--level must lie in (0, 1), got {level}")));
        }
        Ok(SweepOptions {
            reps: self.reps(0)?,
            seed: self.seed.unwrap_or(0),
            workers: self.workers.unwrap_or(0),
            level,
            budget: self.budget()?,
            exact: !self.no_exact,
            tol: self.tol.unwrap_or(1e-10),
        })
    }

    fn grid(&self) -> Res<Vec<f64>> {
        if let Some(x) = &self.x {
            return Ok(x.clone());
        }
        match (self.x_lo, self.x_hi) {
            (Some(lo), Some(hi)) => Ok(geometric_grid(lo, hi, self.grid_size.unwrap_or(12))?),
            _ => Err(config_error("give --x or both --x-lo and --x-hi")),
        }
    }
}

struct Output {
    body: String,
    /// Companion JSON written next to a CSV `--out` file.
    summary: Option<String>,
    csv: bool,
}

fn emit(p: &Params, out: Output) -> Res<()> {
    let mut text = String::new();
    if out.csv && !p.no_timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(text, "# generated_unix={secs}");
    }
    text.push_str(&out.body);
    match &p.out {
        Some(path) => {
            let write = |path: &PathBuf, s: &str| {
                std::fs::write(path, s).map_err(|e| config_error(format!("cannot write {}: {e}", path.display())))
            };
            write(path, &text)?;
            if let Some(s) = out.summary {
                write(&path.with_extension("json"), &s)?;
            }
        }
        None => {
            use std::io::Write as _;
            // a closed downstream pipe (e.g. `| head`) is not an error
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
        }
    }
    Ok(())
}

fn csv_or_json(p: &Params, csv: String, json: String) -> Output {
    match p.format() {
        Format::Csv => Output {
            body: csv,
            summary: Some(json),
            csv: true,
        },
        Format::Json => Output {
            body: json,
            summary: None,
            csv: false,
        },
    }
}

fn model_check(p: Params) -> Res<()> {
    let report = validate_spec(&p.spec()?)?;
    let mut body = serde_json::to_string_pretty(&report).unwrap();
    body.push('\n');
    emit(&p, Output { body, summary: None, csv: false })?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure {
            kind: "check_failed",
            message: report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.clone())
                .collect::<Vec<_>>()
                .join(", "),
        })
    }
}

fn outcome_record(replica: u64, o: Outcome) -> serde_json::Value {
    match o {
        Outcome::Value { value } => json!({"replica": replica, "outcome": "value", "value": value, "aborted": false}),
        Outcome::Aborted { reason, lower_bound } => json!({
            "replica": replica, "outcome": "aborted", "reason": reason, "lower_bound": lower_bound, "aborted": true
        }),
    }
}

fn simulate(cmd: SimulateCmd) -> Res<()> {
    let (kind, p) = match cmd {
        SimulateCmd::Sn(p) => ("sn", p),
        SimulateCmd::Progeny(p) => ("progeny", p),
        SimulateCmd::Coupled(p) => ("coupled", p),
        SimulateCmd::Stationary(p) => ("stationary", p),
    };
    let p = p.resolve()?;
    let model = p.model()?;
    let budget = p.budget()?;
    let reps = p.reps(1)?;
    let seed = p.seed.unwrap_or(0);
    let workers = p.workers.unwrap_or(0);
    let csv = p.format() == Format::Csv;
    let mut body = String::new();
    if kind == "coupled" {
        let n = p.n()?;
        let rows = run_replicas(reps, seed, workers, |_, rng| simulate_coupled(rng, &model, n, &budget));
        if csv {
            body.push_str("replica,s_n,s_n1,s_n2,aborted\n");
        }
        for (i, r) in rows.into_iter().enumerate() {
            match (r, csv) {
                (Ok(s), true) => {
                    let _ = writeln!(body, "{i},{},{},{},false", s.s_n, s.s_n1, s.s_n2);
                }
                (Err(a), true) => {
                    let _ = writeln!(body, "{i},{},,,true", a.lower_bound);
                }
                (Ok(s), false) => {
                    let mut v = serde_json::to_value(&s).unwrap();
                    v["replica"] = json!(i);
                    v["outcome"] = json!("value");
                    v["aborted"] = json!(false);
                    let _ = writeln!(body, "{v}");
                }
                (Err(a), false) => {
                    let o = Outcome::Aborted {
                        reason: a.reason,
                        lower_bound: a.lower_bound,
                    };
                    let _ = writeln!(body, "{}", outcome_record(i as u64, o));
                }
            }
        }
    } else {
        let n = if kind == "sn" { p.n()? } else { 0 };
        let z0 = p.z0.unwrap_or(1);
        let m = p.m.unwrap_or(1000);
        if kind == "progeny" && z0 == 0 {
            return Err(config_error("--z0 must be at least 1"));
        }
        let rows = run_replicas(reps, seed, workers, |_, rng| match kind {
            "sn" => simulate_sn(rng, &model, n, &budget),
            "progeny" => total_progeny(rng, &model, z0, &budget),
            _ => sample_stationary_x(rng, &model, m, &budget),
        });
        if csv {
            body.push_str("replica,value,aborted\n");
        }
        for (i, o) in rows.into_iter().enumerate() {
            if csv {
                let _ = match o {
                    Outcome::Value { value } => writeln!(body, "{i},{value},false"),
                    Outcome::Aborted { lower_bound, .. } => writeln!(body, "{i},{lower_bound},true"),
                };
            } else {
                let _ = writeln!(body, "{}", outcome_record(i as u64, o));
            }
        }
    }
    emit(&p, Output { body, summary: None, csv })
}

fn series_table(s: &PowerSeries) -> String {
    let mut out = String::from("k,mass,tail_lo,tail_hi\n");
    let mut lo: f64 = s.coeffs.iter().sum();
    for (k, c) in s.coeffs.iter().enumerate() {
        lo = (lo - c).max(0.0);
        if k + 1 == s.coeffs.len() {
            lo = 0.0;
        }
        let hi = (lo + s.tail_mass).min(1.0);
        let _ = writeln!(out, "{k},{c:.9e},{lo:.9e},{hi:.9e}");
    }
    let _ = writeln!(out, "tail_mass,{:.9e},,", s.tail_mass);
    out
}

fn exact(cmd: ExactCmd) -> Res<()> {
    let (pgf, p) = match cmd {
        ExactCmd::Sn(p) => (None, p),
        ExactCmd::Yinf(p) => (Some(Pgf::YInf), p),
        ExactCmd::Sinf(p) => (Some(Pgf::SInf), p),
        ExactCmd::Stationary(p) => (Some(Pgf::Stationary), p),
        ExactCmd::Progeny(p) => (Some(Pgf::Progeny), p),
    };
    let p = p.resolve()?;
    let pgf = match pgf {
        Some(g) => g,
        None => Pgf::Sn(p.n()?),
    };
    let model = p.model()?;
    let n_points = p.n_points.unwrap_or(1 << 12);
    let series = pgf.series(&model, n_points)?;
    let json = |rows: serde_json::Value| {
        let mut s = serde_json::to_string_pretty(&json!({"metadata": series.metadata_json(), "rows": rows})).unwrap();
        s.push('\n');
        s
    };
    let out = match &p.x {
        Some(xs) => {
            let mut csv = String::from("x,tail_lo,tail_hi\n");
            let mut rows = Vec::new();
            for &x in xs {
                let (lo, hi) = series.exact_tail(x.floor() as i64)?;
                let _ = writeln!(csv, "{x:.9e},{lo:.9e},{hi:.9e}");
                rows.push(json!({"x": x, "tail_lo": lo, "tail_hi": hi}));
            }
            csv_or_json(&p, csv, json(json!(rows)))
        }
        None => {
            let rows: Vec<_> = series.coeffs.iter().enumerate().map(|(k, c)| json!([k, c])).collect();
            csv_or_json(&p, series_table(&series), json(json!(rows)))
        }
    };
    emit(&p, Output { summary: None, ..out })
}

fn predict(p: Params) -> Res<()> {
    let p = p.resolve()?;
    let model = p.model()?;
    let quantity = match p.quantity.unwrap_or(QuantityArg::Ld) {
        QuantityArg::X => Quantity::X,
        QuantityArg::T => Quantity::T,
        QuantityArg::Y => Quantity::Y,
        QuantityArg::Ld => Quantity::Ld,
    };
    let xs = match (&p.x, p.x_lo, p.n, p.k1, p.k2) {
        (None, None, Some(n), Some(k1), Some(k2)) => {
            let w = window(&model, n, k1, k2)?;
            geometric_grid(w.x_lo, w.x_hi, p.grid_size.unwrap_or(12))?
        }
        _ => p.grid()?,
    };
    let curve = prediction_curve(&model, quantity, p.n, &xs)?;
    let mut json = serde_json::to_string_pretty(&curve).unwrap();
    json.push('\n');
    let out = csv_or_json(&p, curve.to_csv(), json);
    emit(&p, Output { summary: None, ..out })
}

fn report_output(p: &Params, r: &SweepReport) -> Output {
    let mut json = r.to_json();
    json.push('\n');
    csv_or_json(p, r.to_csv(), json)
}

fn validate(cmd: ValidateCmd) -> Res<()> {
    match cmd {
        ValidateCmd::Theorem1(p) | ValidateCmd::Theorem2(p) => {
            // both regimes share the sweep; the model family picks the window
            let p = p.resolve()?;
            let model = p.model()?;
            let opts = p.sweep_options()?;
            let n = p.n()?;
            let k1 = p.k1.ok_or_else(|| config_error("missing --k1"))?;
            let k2 = p.k2.ok_or_else(|| config_error("missing --k2"))?;
            let r = sweep_theorem(&model, n, k1, k2, p.grid_size.unwrap_or(12), &opts)?;
            emit(&p, report_output(&p, &r))
        }
        ValidateCmd::Stationary(p) => {
            let p = p.resolve()?;
            let model = p.model()?;
            let opts = p.sweep_options()?;
            let xs = if p.x.is_none() && p.x_lo.is_none() {
                vec![1e2, 1e3, 1e4]
            } else {
                p.grid()?
            };
            let r = sweep_stationary(&model, &xs, p.m.unwrap_or(1000), &opts)?;
            emit(&p, report_output(&p, &r))
        }
        ValidateCmd::Lemma1(p) => {
            let p = p.resolve()?;
            let model = p.model()?;
            let x = p.x.as_ref().and_then(|v| v.first().copied()).unwrap_or(0.5);
            let ns = p.ns.clone().unwrap_or_else(|| (4..=10).map(|k| 1usize << k).collect());
            let mut csv = String::from("n,ratio\n");
            let mut rows = Vec::new();
            for n in ns {
                let r = lemma1_ratio(&model, n, x)?;
                let _ = writeln!(csv, "{n},{r:.9e}");
                rows.push(json!({"n": n, "ratio": r}));
            }
            let mut json = serde_json::to_string_pretty(&json!({"x": x, "rows": rows})).unwrap();
            json.push('\n');
            emit(&p, csv_or_json(&p, csv, json))
        }
    }
}

fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Command::Model { cmd: ModelCmd::Check(p) } => model_check(p.resolve()?),
        Command::Simulate { cmd } => simulate(cmd),
        Command::Exact { cmd } => exact(cmd),
        Command::Predict(p) => predict(p),
        Command::Validate { cmd } => validate(cmd),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"error": {"kind": f.kind, "message": f.message}}));
            ExitCode::FAILURE
        }
    }
}
