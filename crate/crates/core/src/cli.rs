//! The `spider` command line.
//!
//! Every invocation prints one JSON object `{"manifest": …, "result": …}`
//! (or CSV with the manifest on a leading `#` line). Floats are written with
//! 17 significant digits. Exit codes: 0 success, 1 verification failure,
//! 2 invalid input, 3 numerical tolerance failure, 4 every path hit the step
//! cap.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundary::BoundaryFn;
use crate::domain::{gain, in_stopping_region, Params, State};
use crate::error::Error;
use crate::montecarlo::{
    estimate_payoff_from, Estimate, SimConfig, StoppingRule, DISCRETIZATION_CONSTANT,
};
use crate::numerics::QuadratureConfig;
use crate::value::{self, Region, ValueEvaluator, DEFAULT_TABLE_NODES};
use crate::verify::{run_suite, Suite, SuiteReport, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_CAPPED: i32 = 4;

/// Points in each `--plot-data` file.
const PLOT_POINTS: usize = 201;

#[derive(Debug, Parser)]
#[command(
    name = "spider",
    version,
    about = "Sharp constants for the stopped spider process"
)]
pub struct Cli {
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// U(0,0,0) and C_n for one n.
    Constant(ConstantArgs),
    /// U(0,0,0) and C_n for n = 1..n_max (CSV by default).
    Table(TableArgs),
    /// U at a state, with its region and the gain.
    Value(ValueArgs),
    /// The free boundary f(z), g(y) and the stage-one threshold φ(y − ½).
    Boundary(BoundaryArgs),
    /// Monte Carlo estimate of E[D_τ − τ] under a stopping rule.
    Simulate(SimulateArgs),
    /// Run a property suite (or `all`).
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ConstantArgs {
    #[arg(long)]
    pub n: u32,
    /// Quadrature tolerance (absolute; also caps the relative tolerance).
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Write u_half_half.csv and f_lower.csv into this directory.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TableArgs {
    #[arg(long)]
    pub n_max: u32,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ValueArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub y: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub z: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub n: u32,
    /// Evaluate f(z).
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<f64>,
    /// Evaluate g(y) and φ(y − ½).
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u32,
    /// optimal | fixed-time:T | first-hit-diameter:D | longest-rib:Y
    #[arg(long, default_value = "optimal")]
    pub rule: String,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub step: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000_000)]
    pub max_steps: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Starting state (grid-aligned); defaults to the origin.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub x: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub y: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub z: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: u32,
    /// majorization | seams | kink | neumann | symmetry | n2-reduction | ode |
    /// uy | zsigma | scaling | inequality | all
    #[arg(long)]
    pub suite: String,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub step: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Intervals per axis of the state grids.
    #[arg(long, default_value_t = 12)]
    pub grid: usize,
}

/// Provenance block attached to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, params: &impl Serialize, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            params: serde_json::to_value(params).unwrap_or(Value::Null),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

/// JSON formatter writing every float with 17 significant digits.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// `value` with 17 significant digits (`null` when not finite).
pub fn format_float(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        "null".to_string()
    }
}

/// Serialise compactly with 17-digit floats.
pub fn to_json(value: &impl Serialize) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value
        .serialize(&mut ser)
        .expect("serialising in-memory values cannot fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Parse `args` (including the program name), run the command, write its
/// output to `out` and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Config(_) => EXIT_INPUT,
        Error::Tolerance { .. } | Error::Bracket { .. } | Error::NonConvergence { .. } => {
            EXIT_TOLERANCE
        }
        Error::AllPathsCapped(_) => EXIT_CAPPED,
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> crate::Result<i32> {
    let io_err = |e: io::Error| Error::Config(format!("cannot write output: {e}"));
    let json = |out: &mut dyn Write, manifest: RunManifest, result: Value| -> crate::Result<()> {
        writeln!(
            out,
            "{}",
            to_json(&json!({ "manifest": manifest, "result": result }))
        )
        .map_err(io_err)
    };
    let csv = |out: &mut dyn Write,
               manifest: RunManifest,
               header: &str,
               rows: Vec<String>|
     -> crate::Result<()> {
        writeln!(out, "# {}", to_json(&manifest)).map_err(io_err)?;
        writeln!(out, "{header}").map_err(io_err)?;
        for row in rows {
            writeln!(out, "{row}").map_err(io_err)?;
        }
        Ok(())
    };
    let format = cli.format;
    match &cli.command {
        Command::Constant(a) => {
            let params = Params::new(a.n)?;
            let quad = quadrature(a.tol);
            quad.validate()?;
            let row = constant_row(params, &quad)?;
            if let Some(dir) = &a.plot_data {
                write_plot_data(params, dir)?;
            }
            let manifest = RunManifest::new("constant", a, None);
            if format == Some(Format::Csv) {
                csv(out, manifest, "n,u000,c_n", vec![row.csv()])?;
            } else {
                json(
                    out,
                    manifest,
                    serde_json::to_value(&row).unwrap_or_default(),
                )?;
            }
        }
        Command::Table(a) => {
            if a.n_max < 1 {
                return Err(Error::Domain("n_max must be at least 1".into()));
            }
            let quad = quadrature(a.tol);
            quad.validate()?;
            let rows = (1..=a.n_max)
                .map(|n| constant_row(Params::new(n)?, &quad))
                .collect::<crate::Result<Vec<_>>>()?;
            let increasing = rows.windows(2).all(|w| w[1].c_n >= w[0].c_n);
            let manifest = RunManifest::new("table", a, None);
            if format == Some(Format::Json) {
                json(
                    out,
                    manifest,
                    json!({ "rows": rows, "c_n_increasing": increasing }),
                )?;
            } else {
                csv(
                    out,
                    manifest,
                    "n,u000,c_n",
                    rows.iter().map(ConstantRow::csv).collect(),
                )?;
            }
        }
        Command::Value(a) => {
            let params = Params::new(a.n)?;
            let quad = quadrature(a.tol);
            let state = State::for_params(params, a.x, a.y, a.z)?;
            let (u, region) = value::evaluate(params, &state, &quad)?;
            let g = if params.n() == 1 {
                state.y - state.x * state.x
            } else {
                gain(&state)?
            };
            let (label, branch) = region_parts(region);
            let result = json!({
                "n": a.n,
                "x": state.x,
                "y": state.y,
                "z": state.z,
                "u": u,
                "gain": g,
                "region": label,
                "branch": branch,
                "is_stopping": in_stopping_region(params, &state)?,
            });
            if let Some(dir) = &a.plot_data {
                write_plot_data(params, dir)?;
            }
            let manifest = RunManifest::new("value", a, None);
            if format == Some(Format::Csv) {
                let row = format!(
                    "{},{},{},{},{},{},{},{},{}",
                    a.n,
                    format_float(state.x),
                    format_float(state.y),
                    format_float(state.z),
                    format_float(u),
                    format_float(g),
                    label,
                    branch.map(|b| b.to_string()).unwrap_or_default(),
                    in_stopping_region(params, &state)?
                );
                csv(
                    out,
                    manifest,
                    "n,x,y,z,u,gain,region,branch,is_stopping",
                    vec![row],
                )?;
            } else {
                json(out, manifest, result)?;
            }
        }
        Command::Boundary(a) => {
            let params = Params::new(a.n)?;
            let b = BoundaryFn::new(params)?;
            let f = a.z.map(|z| b.f_lower(z)).transpose()?;
            let g = a.y.map(|y| b.g_upper(y)).transpose()?;
            let threshold = a.y.map(|y| b.phi(y - 0.5)).transpose()?;
            let stage1 = match (a.y, a.z) {
                (Some(y), Some(z)) => Some(b.stage1_satisfied(y, z)),
                _ => None,
            };
            if let Some(dir) = &a.plot_data {
                write_plot_data(params, dir)?;
            }
            let manifest = RunManifest::new("boundary", a, None);
            if format == Some(Format::Csv) {
                let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
                let row = format!(
                    "{},{},{},{},{},{},{}",
                    a.n,
                    opt(a.z),
                    opt(f),
                    opt(a.y),
                    opt(g),
                    opt(threshold),
                    stage1.map(|s| s.to_string()).unwrap_or_default()
                );
                csv(
                    out,
                    manifest,
                    "n,z,f_lower,y,g_upper,phi_y_minus_half,stage1_satisfied",
                    vec![row],
                )?;
            } else {
                let result = json!({
                    "n": a.n,
                    "z": a.z,
                    "f_lower": f,
                    "y": a.y,
                    "g_upper": g,
                    "phi_y_minus_half": threshold,
                    "stage1_satisfied": stage1,
                });
                json(out, manifest, result)?;
            }
        }
        Command::Simulate(a) => {
            let params = Params::new(a.n)?;
            let rule: StoppingRule = a.rule.parse()?;
            let cfg = SimConfig {
                max_steps: a.max_steps,
                threads: a.threads,
                ..SimConfig::new(a.step, a.paths, a.seed)
            };
            let start = State::for_params(params, a.x, a.y, a.z)?;
            let est = estimate_payoff_from(params, &cfg, &rule, &start)?;
            let reference = simulate_reference(params, &rule, &start, &est, cfg.step)?;
            let manifest = RunManifest::new("simulate", a, Some(a.seed));
            if format == Some(Format::Csv) {
                let row = format!(
                    "{},{},{},{},{},{},{},{},{}",
                    format_float(est.mean_payoff),
                    format_float(est.std_err),
                    format_float(est.mean_tau),
                    format_float(est.se_tau),
                    format_float(est.mean_d),
                    format_float(est.se_d),
                    est.paths,
                    est.completed,
                    est.capped
                );
                csv(
                    out,
                    manifest,
                    "mean_payoff,std_err,mean_tau,se_tau,mean_d,se_d,paths,completed,capped",
                    vec![row],
                )?;
            } else {
                let result = json!({
                    "mean_payoff": est.mean_payoff,
                    "std_err": est.std_err,
                    "mean_tau": est.mean_tau,
                    "se_tau": est.se_tau,
                    "mean_d": est.mean_d,
                    "se_d": est.se_d,
                    "paths": est.paths,
                    "completed": est.completed,
                    "capped": est.capped,
                    "reference": reference,
                });
                json(out, manifest, result)?;
            }
        }
        Command::Verify(a) => {
            let params = Params::new(a.n)?;
            let suites: Vec<Suite> = if a.suite == "all" {
                Suite::ALL
                    .into_iter()
                    .filter(|s| *s != Suite::N2Reduction || a.n == 2)
                    .collect()
            } else {
                vec![a.suite.parse()?]
            };
            let cfg = VerifyConfig {
                grid: a.grid,
                paths: a.paths,
                step: a.step,
                seed: a.seed,
                threads: a.threads,
            };
            let reports = suites
                .into_iter()
                .map(|s| run_suite(params, s, &cfg))
                .collect::<crate::Result<Vec<SuiteReport>>>()?;
            let passed = reports.iter().all(|r| r.passed);
            let manifest = RunManifest::new("verify", a, Some(a.seed));
            if format == Some(Format::Csv) {
                let rows = reports
                    .iter()
                    .flat_map(|r| {
                        r.checks.iter().map(move |c| {
                            format!(
                                "{},{},\"{}\",{},{},{},{}",
                                r.suite,
                                r.n,
                                c.name.replace('"', "'"),
                                format_float(c.measured),
                                format_float(c.tolerance),
                                c.samples,
                                c.passed
                            )
                        })
                    })
                    .collect();
                csv(
                    out,
                    manifest,
                    "suite,n,check,measured,tolerance,samples,passed",
                    rows,
                )?;
            } else {
                json(
                    out,
                    manifest,
                    json!({ "passed": passed, "reports": reports }),
                )?;
            }
            return Ok(if passed { EXIT_OK } else { EXIT_VERIFICATION });
        }
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
struct ConstantRow {
    n: u32,
    u000: f64,
    c_n: f64,
    method: &'static str,
}

impl ConstantRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{}",
            self.n,
            format_float(self.u000),
            format_float(self.c_n)
        )
    }
}

fn constant_row(params: Params, quad: &QuadratureConfig) -> crate::Result<ConstantRow> {
    let (u000, method) = match params.n() {
        1 => (0.5, "closed-form"),
        2 => (0.75, "closed-form"),
        _ => (value::u000_with(params, quad)?, "quadrature"),
    };
    Ok(ConstantRow {
        n: params.n(),
        u000,
        c_n: value::best_constant_with(params, quad)?,
        method,
    })
}

/// Quadrature at absolute tolerance `tol`, with the relative tolerance no
/// looser than `tol`.
fn quadrature(tol: f64) -> QuadratureConfig {
    let mut q = QuadratureConfig::with_abs_tol(tol);
    q.rel_tol = q.rel_tol.min(tol);
    q
}

fn region_parts(region: Region) -> (&'static str, Option<u8>) {
    match region {
        Region::SingleRay { branch } => ("single-ray", Some(branch)),
        Region::R1 { branch } => ("R1", Some(branch)),
        Region::R2 => ("R2", None),
        Region::R3 => ("R3", None),
    }
}

/// For the optimal rule, the analytic value and the acceptance band
/// `3·se + DISCRETIZATION_CONSTANT·h`.
fn simulate_reference(
    params: Params,
    rule: &StoppingRule,
    start: &State,
    est: &Estimate,
    step: f64,
) -> crate::Result<Value> {
    if !matches!(rule, StoppingRule::Optimal) {
        return Ok(Value::Null);
    }
    let quad = QuadratureConfig::default();
    let (u, _) = value::evaluate(params, start, &quad)?;
    let band = 3.0 * est.std_err + DISCRETIZATION_CONSTANT * step;
    Ok(json!({
        "value": u,
        "band": band,
        "within_band": (est.mean_payoff - u).abs() <= band,
    }))
}

/// Write `u_half_half.csv` (`s,u`) and `f_lower.csv` (`z,f`) into `dir`.
pub fn write_plot_data(params: Params, dir: &Path) -> crate::Result<()> {
    let io_err =
        |e: io::Error| Error::Config(format!("cannot write plot data to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io_err)?;
    let ev = ValueEvaluator::with_config(params, QuadratureConfig::default(), DEFAULT_TABLE_NODES)?;
    let boundary = ev.boundary();
    let mut u = String::from("s,u\n");
    let mut f = String::from("z,f\n");
    for i in 0..PLOT_POINTS {
        let t = i as f64 / (PLOT_POINTS - 1) as f64;
        let s = -0.5 + 0.5 * t;
        u.push_str(&format!(
            "{},{}\n",
            format_float(s),
            format_float(ev.u_half_half(s)?)
        ));
        let z = -1.0 + t;
        f.push_str(&format!(
            "{},{}\n",
            format_float(z),
            format_float(boundary.f_lower(z)?)
        ));
    }
    fs::write(dir.join("u_half_half.csv"), u).map_err(io_err)?;
    fs::write(dir.join("f_lower.csv"), f).map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let code = run(
            std::iter::once("spider").chain(args.iter().copied()),
            &mut out,
        );
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(0.75), "7.5000000000000000e-1");
        assert_eq!(format_float(f64::NAN), "null");
        let v: f64 = format_float(2f64.sqrt()).parse().unwrap();
        assert_eq!(v, 2f64.sqrt());
        assert_eq!(
            to_json(&json!({"a": 1.0, "b": f64::INFINITY})),
            r#"{"a":1.0000000000000000e0,"b":null}"#
        );
    }

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest::new("constant", &json!({"n": 3, "tol": 1e-10}), Some(9));
        let back: RunManifest = serde_json::from_str(&to_json(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn constant_and_value() {
        let (code, out) = run_str(&["constant", "--n", "2"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["result"]["c_n"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-15);
        let (code, out) = run_str(&["value", "--n", "1", "--x", "0", "--y", "0"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["result"]["u"].as_f64().unwrap(), 0.5);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_str(&["constant", "--n", "0"]).0, EXIT_INPUT);
        assert_eq!(
            run_str(&["value", "--n", "2", "--x", "2", "--y", "1", "--z", "0"]).0,
            EXIT_INPUT
        );
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_INPUT);
        assert_eq!(
            run_str(&["verify", "--n", "3", "--suite", "bogus"]).0,
            EXIT_INPUT
        );
        assert_eq!(
            run_str(&[
                "simulate",
                "--n",
                "2",
                "--rule",
                "fixed-time:5",
                "--paths",
                "4",
                "--max-steps",
                "2"
            ])
            .0,
            EXIT_CAPPED
        );
        assert_eq!(
            exit_code(&Error::NonConvergence { iterations: 3 }),
            EXIT_TOLERANCE
        );
    }
}
