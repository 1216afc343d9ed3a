//! Command-line front end for the `angunc` binary.
//!
//! Tables go to stdout (or `--out`), datasets to files. Every run also
//! emits a [`RunManifest`]: a `<out>.manifest.json` sidecar next to a file
//! output, or a JSON line on stderr when the table went to stdout. Feeding
//! a manifest to `angunc replay` re-runs the recorded invocation.
//!
//! CSV numbers are written like C's `%.12e`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::experiment::{
    default_kappas, dispersion_grid, figure1_dataset, simulate_points, DEstimator,
    MeasurementConfig,
};
use crate::mathieu::{characteristic_value, interlacing_check, Parity};
use crate::optimizer::{ground_functionals, min_state, ConstraintKind, ConstraintTarget};
use crate::vonmises::{kappa_for_dispersion, vm_moments, VonMisesState};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Parser)]
#[command(
    name = "angunc",
    version,
    about = "Angle / angular-momentum minimum-uncertainty states"
)]
pub struct Cli {
    /// Worker threads for parallel sections (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "parameters", rename_all = "kebab-case")]
pub enum Command {
    /// Characteristic values a₂ₙ(q) / b₂ₙ(q).
    Charvals(CharvalsArgs),
    /// Mathieu ground-state uncertainty curve over a q range.
    Sweep(SweepArgs),
    /// Constrained minimum-uncertainty state for a target D² or (ΔL)².
    Minstate(MinstateArgs),
    /// Simulated helicity-scan measurement of von Mises beams.
    Simulate(SimulateArgs),
    /// Theory curves and simulated points for the product-vs-dispersion figure.
    Figure1(Figure1Args),
    /// Re-run the invocation recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityChoice {
    Even,
    Odd,
    Both,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CharvalsArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long, default_value_t = 4)]
    pub max_order: u32,
    #[arg(long, value_enum, default_value_t = ParityChoice::Even)]
    pub parity: ParityChoice,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub q_min: f64,
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    pub q_max: f64,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Logarithmic spacing (needs q_min > 0).
    #[arg(long)]
    pub log: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MinstateArgs {
    /// Target D².
    #[arg(
        long,
        allow_negative_numbers = true,
        required_unless_present = "varl",
        conflicts_with = "varl"
    )]
    pub dispersion: Option<f64>,
    /// Target (ΔL)².
    #[arg(long, allow_negative_numbers = true)]
    pub varl: Option<f64>,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub mean_m: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MeasurementArgs {
    /// Beam concentrations; defaults to 12 beams spanning D in [0.1, 0.99].
    #[arg(long, value_delimiter = ',')]
    pub kappa: Option<Vec<f64>>,
    #[arg(long, default_value_t = 20)]
    pub nmax: u32,
    /// Expected counts per helicity setting; `inf` reads exact weights.
    #[arg(long, default_value_t = 1e4)]
    #[serde(with = "shots_serde")]
    pub shots: f64,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "nominal")]
    #[serde(with = "estimator_serde")]
    pub d_estimator: DEstimator,
}

impl MeasurementArgs {
    fn config(&self) -> MeasurementConfig {
        MeasurementConfig {
            n_max: self.nmax,
            shots: self.shots,
            repeats: self.repeats,
            seed: self.seed,
            d_estimator: self.d_estimator,
        }
    }

    fn kappas(&self) -> Result<Vec<f64>, CliError> {
        match &self.kappa {
            Some(k) => Ok(k.clone()),
            None => Ok(default_kappas()?),
        }
    }
}

mod estimator_serde {
    use super::DEstimator;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DEstimator, s: S) -> Result<S::Ok, S::Error> {
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DEstimator, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// JSON has no infinity, so noiseless runs record `"inf"`.
mod shots_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub measurement: MeasurementArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Figure1Args {
    /// Output directory for the three CSV files and the manifest.
    #[arg(long, default_value = "figure1")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    pub d_min: f64,
    #[arg(long, default_value_t = 0.999)]
    pub d_max: f64,
    #[arg(long, default_value_t = 80)]
    pub points: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub measurement: MeasurementArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub tool_version: String,
    /// Seconds since the Unix epoch; ignored when comparing runs.
    pub timestamp: u64,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub invocation: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

impl RunManifest {
    pub fn new(invocation: &Command, summary: Option<Value>) -> Self {
        let seed = match invocation {
            Command::Simulate(a) => Some(a.measurement.seed),
            Command::Figure1(a) => Some(a.measurement.seed),
            _ => None,
        };
        Self {
            schema_version: SCHEMA_VERSION.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            seed,
            invocation: invocation.clone(),
            summary,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numeric(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Infeasible(_) => 3,
            Self::Io(_) => 4,
            Self::Numeric(_) => 1,
        }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Self::Io(format!("{}: {err}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::InvalidParameter { .. } | Error::InvalidGrid(_) | Error::OutOfDomain(_) => {
                Self::Usage(err.to_string())
            }
            Error::Infeasible { .. } => Self::Infeasible(err.to_string()),
            other => Self::Numeric(other),
        }
    }
}

/// C-style `%.12e`: twelve fraction digits, signed exponent of at least
/// two digits.
pub fn fmt_sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn sci_row(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| fmt_sci(*v)).collect()
}

pub fn charvals_table(args: &CharvalsArgs) -> Result<String, CliError> {
    if args.parity == ParityChoice::Both {
        let chain = interlacing_check(args.q, args.max_order)?;
        return Ok(csv(
            &["order", "parity", "charvalue"],
            chain.iter().map(|c| {
                vec![
                    c.order.to_string(),
                    parity_name(c.parity).into(),
                    fmt_sci(c.value),
                ]
            }),
        ));
    }
    let parity = if args.parity == ParityChoice::Even {
        Parity::Even
    } else {
        Parity::Odd
    };
    let first = if parity == Parity::Even { 0 } else { 2 };
    let rows = (first..=args.max_order)
        .step_by(2)
        .map(|order| {
            let value = characteristic_value(order, args.q, parity)?;
            Ok(vec![
                order.to_string(),
                parity_name(parity).into(),
                fmt_sci(value),
            ])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    if rows.is_empty() {
        return Err(CliError::Usage(format!(
            "no {} orders up to {}",
            parity_name(parity),
            args.max_order
        )));
    }
    Ok(csv(&["order", "parity", "charvalue"], rows))
}

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

fn sweep_grid(args: &SweepArgs) -> Result<Vec<f64>, CliError> {
    if !(args.q_min >= 0.0 && args.q_min.is_finite() && args.q_max.is_finite()) {
        return Err(CliError::Usage(
            "q range must be finite with q_min >= 0".into(),
        ));
    }
    if args.steps == 0 {
        return Err(CliError::Usage("steps must be at least 1".into()));
    }
    if args.steps == 1 {
        return Ok(vec![args.q_min]);
    }
    if args.q_min >= args.q_max {
        return Err(CliError::Usage(format!(
            "q_min {} must be below q_max {}",
            args.q_min, args.q_max
        )));
    }
    let last = (args.steps - 1) as f64;
    if args.log {
        if args.q_min <= 0.0 {
            return Err(CliError::Usage("log spacing needs q_min > 0".into()));
        }
        let (a, b) = (args.q_min.ln(), args.q_max.ln());
        return Ok((0..args.steps)
            .map(|i| (a + (b - a) * i as f64 / last).exp())
            .collect());
    }
    Ok((0..args.steps)
        .map(|i| args.q_min + (args.q_max - args.q_min) * i as f64 / last)
        .collect())
}

pub const SWEEP_HEADER: [&str; 13] = [
    "q",
    "D2",
    "varL",
    "D",
    "dL",
    "product",
    "bound",
    "vm_product_at_same_D",
    "vm_minus_mathieu",
    "product_linear",
    "bound_linear",
    "vm_product_linear_at_same_D",
    "vm_minus_mathieu_linear",
];

/// One sweep row; `product`/`bound` are `D²(ΔL)²` and `(1 − D²)/4`, the
/// `_linear` columns the `D·ΔL` forms.
pub fn sweep_row(q: f64) -> Result<Vec<f64>, Error> {
    let f = ground_functionals(q)?;
    let d2 = f.dispersion_sq;
    let product = d2 * f.var_l;
    let bound = 0.25 * (1.0 - d2);
    let vm = if d2 >= 1.0 {
        0.0
    } else {
        let m = vm_moments(&VonMisesState::with_kappa(kappa_for_dispersion(d2)?)?)?;
        m.dispersion_sq * m.var_l
    };
    Ok(vec![
        q,
        d2,
        f.var_l,
        d2.sqrt(),
        f.var_l.sqrt(),
        product,
        bound,
        vm,
        vm - product,
        product.sqrt(),
        bound.sqrt(),
        vm.sqrt(),
        vm.sqrt() - product.sqrt(),
    ])
}

pub fn sweep_csv(args: &SweepArgs) -> Result<String, CliError> {
    let grid = sweep_grid(args)?;
    let rows = grid
        .par_iter()
        .map(|&q| sweep_row(q))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(csv(&SWEEP_HEADER, rows.iter().map(|r| sci_row(r))))
}

pub fn minstate_json(args: &MinstateArgs) -> Result<String, CliError> {
    let target = match (args.dispersion, args.varl) {
        (Some(d2), None) => ConstraintTarget::fixed_dispersion(d2)?,
        (None, Some(v)) => ConstraintTarget::fixed_var_l(v)?,
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --dispersion or --varl".into(),
            ))
        }
    };
    let r = min_state(&target, args.mean_m)?;
    let achieved = match target.kind {
        ConstraintKind::FixedDispersion => r.report.dispersion_sq,
        ConstraintKind::FixedVarL => r.report.var_l,
    };
    let modes: Vec<Value> = r
        .state
        .modes()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(m, c)| json!({ "m": m, "re": c.re, "im": c.im }))
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "target": target,
        "mean_m": args.mean_m,
        "q": r.q,
        "report": r.report,
        "product_linear": r.report.product_linear(),
        "bound_linear": r.report.bound_linear(),
        "round_trip": {
            "target": target.value,
            "achieved": achieved,
            "error": (achieved - target.value).abs(),
        },
        "modes": modes,
    });
    Ok(serde_json::to_string_pretty(&doc).expect("json serializes") + "\n")
}

pub fn simulate_csv(args: &SimulateArgs) -> Result<String, CliError> {
    let config = args.measurement.config();
    config.validate()?;
    let points = simulate_points(&args.measurement.kappas()?, &config)?;
    Ok(csv(
        &[
            "kappa",
            "D",
            "product",
            "product_err",
            "product_sq",
            "product_sq_err",
        ],
        points.iter().map(|p| {
            sci_row(&[
                p.kappa,
                p.d,
                p.product,
                p.product_err,
                p.product_sq,
                p.product_sq_err,
            ])
        }),
    ))
}

pub const FIGURE1_FILES: [&str; 3] = [
    "theory_mathieu.csv",
    "theory_vonmises.csv",
    "simulated_points.csv",
];

/// File name and contents.
pub type NamedFile = (&'static str, String);

/// The three Figure 1 tables plus a summary for the manifest.
pub fn figure1_files(args: &Figure1Args) -> Result<(Vec<NamedFile>, Value), CliError> {
    let config = args.measurement.config();
    config.validate()?;
    let grid = dispersion_grid(args.d_min, args.d_max, args.points)?;
    let data = figure1_dataset(&grid, &args.measurement.kappas()?, &config)?;

    let mathieu = csv(
        &[
            "D",
            "D2",
            "q",
            "varL",
            "product",
            "bound",
            "product_sq",
            "bound_sq",
            "vm_minus_mathieu",
        ],
        data.mathieu.iter().zip(&data.difference).map(|(r, diff)| {
            sci_row(&[
                r.d,
                r.dispersion_sq,
                r.parameter,
                r.var_l,
                r.product,
                r.bound,
                r.product_sq,
                r.bound_sq,
                *diff,
            ])
        }),
    );
    let vonmises = csv(
        &[
            "D",
            "D2",
            "kappa",
            "varL",
            "product",
            "bound",
            "product_sq",
            "bound_sq",
        ],
        data.vonmises.iter().map(|r| {
            sci_row(&[
                r.d,
                r.dispersion_sq,
                r.parameter,
                r.var_l,
                r.product,
                r.bound,
                r.product_sq,
                r.bound_sq,
            ])
        }),
    );
    let points = csv(
        &[
            "kappa",
            "D",
            "product",
            "product_err",
            "product_sq",
            "product_sq_err",
        ],
        data.points.iter().map(|p| {
            sci_row(&[
                p.kappa,
                p.d,
                p.product,
                p.product_err,
                p.product_sq,
                p.product_sq_err,
            ])
        }),
    );
    let top = data
        .vonmises
        .iter()
        .map(|r| r.product)
        .chain(data.points.iter().map(|p| p.product + p.product_err))
        .fold(0.0, f64::max);
    let summary = json!({
        "axes": {
            "x": { "label": "D", "range": [args.d_min, args.d_max] },
            "y": { "label": "D*dL", "range": [0.0, top] },
            "inset": { "label": "vonmises - mathieu (D*dL)", "range": [0.0, data.max_difference()] },
        },
        "max_vm_minus_mathieu": data.max_difference(),
        "product_convention": "product = D*dL; product_sq = D^2*dL^2",
    });
    Ok((
        FIGURE1_FILES
            .into_iter()
            .zip([mathieu, vonmises, points])
            .collect(),
        summary,
    ))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| CliError::io(path, e))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn emit(content: &str, out: Option<&Path>, invocation: &Command) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_file(path, content)?;
            write_file(
                &sidecar(path),
                &(RunManifest::new(invocation, None).to_json() + "\n"),
            )
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            let compact = serde_json::to_string(&RunManifest::new(invocation, None))
                .expect("manifest serializes");
            eprintln!("{compact}");
            Ok(())
        }
    }
}

/// Runs one command, writing its outputs.
pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Charvals(a) => emit(&charvals_table(a)?, a.out.as_deref(), command),
        Command::Sweep(a) => emit(&sweep_csv(a)?, a.out.as_deref(), command),
        Command::Minstate(a) => emit(&minstate_json(a)?, a.out.as_deref(), command),
        Command::Simulate(a) => emit(&simulate_csv(a)?, a.out.as_deref(), command),
        Command::Figure1(a) => {
            let (files, summary) = figure1_files(a)?;
            fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
            for (name, content) in &files {
                write_file(&a.out.join(name), content)?;
            }
            let manifest = RunManifest::new(command, Some(summary)).to_json();
            write_file(&a.out.join("manifest.json"), &(manifest + "\n"))
        }
        Command::Replay(a) => execute(&replayed(a)?),
    }
}

/// The invocation stored in a manifest, with `--out` overridden if given.
pub fn replayed(args: &ReplayArgs) -> Result<Command, CliError> {
    let text = fs::read_to_string(&args.manifest).map_err(|e| CliError::io(&args.manifest, e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad manifest: {e}")))?;
    let mut command = manifest.invocation;
    if let Some(out) = &args.out {
        match &mut command {
            Command::Charvals(a) => a.out = Some(out.clone()),
            Command::Sweep(a) => a.out = Some(out.clone()),
            Command::Minstate(a) => a.out = Some(out.clone()),
            Command::Simulate(a) => a.out = Some(out.clone()),
            Command::Figure1(a) => a.out = out.clone(),
            Command::Replay(_) => {}
        }
    }
    if matches!(command, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot record a replay".into()));
    }
    Ok(command)
}

/// Parses arguments, configures threads and runs; returns the exit code.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return 1;
        }
    }
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let mut msg = String::new();
            let _ = write!(msg, "error: {e}");
            eprintln!("{msg}");
            e.exit_code()
        }
    }
}
