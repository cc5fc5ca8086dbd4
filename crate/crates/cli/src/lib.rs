//! Batch front end: witnesses, convergence tables, intersections and
//! epsilon scans over built-in families or JSON sequence files.

#![allow(clippy::result_large_err)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use arzela_core::pipeline::{
    convergence_table, scan_epsilon, ConvergenceReport, HypothesisUnmet, ScanRow, ScanStatus,
};
use arzela_core::tree::{verify_against_sequence, VerificationReport};
use arzela_core::{
    exact_intersection_oracle, make_family, run_witness, Family, FamilyParams, FunctionSequence,
    IntervalSet, Rat, WitnessCertificate, WitnessOutcome, WitnessParams,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] arzela_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: arzela_core::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

/// Process exit status: 0 verified, 2 hypothesis unmet, 1 error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok,
    Error,
    HypothesisUnmet,
}

impl Exit {
    pub fn code(self) -> u8 {
        match self {
            Exit::Ok => 0,
            Exit::Error => 1,
            Exit::HypothesisUnmet => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "arzela",
    version,
    about = "Exact witnesses for non-convergent integrals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find a point lying in every tail union and write its certificate.
    Witness(WitnessArgs),
    /// Tabulate exact integrals and probe values.
    Check(CheckArgs),
    /// Intersect the interval sets listed in a file.
    Intersect(IntersectArgs),
    /// Run the witness pipeline for each candidate epsilon.
    ScanEpsilon(ScanArgs),
    /// Check and witness every built-in family.
    Demo(DemoArgs),
    /// Re-check a certificate against its sequence.
    Verify(VerifyArgs),
}

#[derive(Clone, Debug, Args)]
pub struct InputArgs {
    /// Built-in family name.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub family: Option<Family>,
    /// Plateau height for built-in families, in (0, 1].
    #[arg(long, requires = "family", conflicts_with = "spec")]
    pub height: Option<Rat>,
    /// Sequence file (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

impl InputArgs {
    pub fn family(family: Family) -> Self {
        InputArgs {
            family: Some(family),
            height: None,
            spec: None,
        }
    }

    pub fn spec(path: impl Into<PathBuf>) -> Self {
        InputArgs {
            family: None,
            height: None,
            spec: Some(path.into()),
        }
    }

    pub fn load(&self) -> Result<FunctionSequence, CliError> {
        match (&self.family, &self.spec) {
            (Some(family), None) => {
                let mut params = FamilyParams::default();
                if let Some(h) = &self.height {
                    params.height = h.clone();
                }
                Ok(make_family(*family, params)?)
            }
            (None, Some(path)) => {
                let text = read(path)?;
                FunctionSequence::from_json_str(&text).map_err(|source| CliError::Parse {
                    path: path.clone(),
                    source,
                })
            }
            _ => Err(CliError::Usage(
                "exactly one of --family or --spec is required".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Debug, Args)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub eps: Rat,
    /// Number of tail unions N.
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
    /// Largest term index M.
    #[arg(long, default_value_t = 100)]
    pub max_index: usize,
    /// Pruning horizon; defaults to the depth.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Fat-path length threshold; defaults to eps/2.
    #[arg(long)]
    pub lambda: Option<Rat>,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl WitnessArgs {
    pub fn new(input: InputArgs, eps: Rat, depth: usize, max_index: usize) -> Self {
        WitnessArgs {
            input,
            eps,
            depth,
            max_index,
            horizon: None,
            lambda: None,
            output: OutputArgs::default(),
        }
    }

    fn params(&self) -> WitnessParams {
        let mut p = WitnessParams::new(self.eps.clone(), self.depth, self.max_index);
        p.horizon = self.horizon;
        p.lambda = self.lambda.clone();
        p
    }
}

#[derive(Clone, Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 20)]
    pub max_index: usize,
    /// Probe point; repeatable.
    #[arg(long = "probe")]
    pub probes: Vec<Rat>,
    /// Threshold for flagging recurrent probe values.
    #[arg(long, default_value = "1/8")]
    pub eps: Rat,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct IntersectArgs {
    /// File of the form {"sets": [{"intervals": [...]}, ...]}.
    #[arg(long)]
    pub spec: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Candidate epsilon; repeatable.
    #[arg(long = "eps")]
    pub grid: Vec<Rat>,
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
    #[arg(long, default_value_t = 100)]
    pub max_index: usize,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct DemoArgs {
    /// Seed for the random probe points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Certificate file written by `witness`.
    #[arg(long)]
    pub cert: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(output: &OutputArgs, body: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => fs::write(path, body).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn approx(x: &Rat) -> String {
    format!("{:.9}", x.to_f64())
}

fn csv_string(
    write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>,
) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_witness(args: &WitnessArgs) -> Result<WitnessOutcome, CliError> {
    let seq = args.input.load()?;
    Ok(run_witness(&seq, &args.params())?)
}

pub fn render_witness(cert: &WitnessCertificate, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(cert.to_json_pretty() + "\n"),
        Format::Csv => csv_string(|w| {
            w.write_record(["step", "lo", "hi", "lo_approx", "hi_approx"])?;
            for (i, c) in cert.chain.iter().enumerate() {
                w.write_record([
                    (i + 1).to_string(),
                    c.lo().to_string(),
                    c.hi().to_string(),
                    approx(c.lo()),
                    approx(c.hi()),
                ])?;
            }
            w.write_record([
                "witness".to_string(),
                cert.witness.to_string(),
                cert.witness.to_string(),
                approx(&cert.witness),
                approx(&cert.witness),
            ])
        }),
    }
}

pub fn cmd_check(args: &CheckArgs) -> Result<ConvergenceReport, CliError> {
    let seq = args.input.load()?;
    Ok(convergence_table(
        &seq,
        args.max_index,
        &args.probes,
        &args.eps,
    )?)
}

pub fn render_check(report: &ConvergenceReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => json_string(report),
        Format::Csv => csv_string(|w| {
            let mut header = vec!["n".to_string(), "integral".into(), "integral_approx".into()];
            for x in &report.probes {
                header.push(format!("f(x={x})"));
                header.push(format!("f(x={x})_approx"));
            }
            w.write_record(&header)?;
            for row in &report.rows {
                let mut rec = vec![
                    row.n.to_string(),
                    row.integral.to_string(),
                    approx(&row.integral),
                ];
                for v in &row.probe_values {
                    rec.push(v.to_string());
                    rec.push(approx(v));
                }
                w.write_record(&rec)?;
            }
            Ok(())
        }),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectFile {
    pub sets: Vec<IntervalSet>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntersectResult {
    pub intersection: IntervalSet,
    pub total_length: Rat,
}

pub fn intersect_from_str(text: &str) -> Result<IntersectResult, CliError> {
    let file: IntersectFile = serde_json::from_str(text)?;
    let intersection = exact_intersection_oracle(&file.sets);
    let total_length = intersection.total_length();
    Ok(IntersectResult {
        intersection,
        total_length,
    })
}

pub fn cmd_intersect(args: &IntersectArgs) -> Result<IntersectResult, CliError> {
    let text = read(&args.spec)?;
    intersect_from_str(&text).map_err(|e| match e {
        CliError::Json(j) => CliError::Parse {
            path: args.spec.clone(),
            source: j.into(),
        },
        other => other,
    })
}

pub fn render_intersect(result: &IntersectResult, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => json_string(result),
        Format::Csv => csv_string(|w| {
            w.write_record([
                "lo",
                "hi",
                "length",
                "lo_approx",
                "hi_approx",
                "length_approx",
            ])?;
            for iv in result.intersection.intervals() {
                let len = iv.length();
                w.write_record([
                    iv.lo().to_string(),
                    iv.hi().to_string(),
                    len.to_string(),
                    approx(iv.lo()),
                    approx(iv.hi()),
                    approx(&len),
                ])?;
            }
            Ok(())
        }),
    }
}

pub fn cmd_scan_epsilon(args: &ScanArgs) -> Result<Vec<ScanRow>, CliError> {
    let seq = args.input.load()?;
    Ok(scan_epsilon(
        &seq,
        &args.grid,
        args.depth,
        args.max_index,
        args.horizon,
    )?)
}

fn status_name(s: &ScanStatus) -> &'static str {
    match s {
        ScanStatus::Verified => "verified",
        ScanStatus::HypothesisUnmet => "hypothesis-unmet",
        ScanStatus::Error => "error",
    }
}

pub fn render_scan(rows: &[ScanRow], format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => json_string(&rows),
        Format::Csv => csv_string(|w| {
            w.write_record([
                "epsilon",
                "epsilon_approx",
                "survivors",
                "status",
                "witness",
                "witness_approx",
                "detail",
            ])?;
            for r in rows {
                w.write_record([
                    r.epsilon.to_string(),
                    approx(&r.epsilon),
                    r.survivors.to_string(),
                    status_name(&r.status).to_string(),
                    r.witness.as_ref().map(Rat::to_string).unwrap_or_default(),
                    r.witness.as_ref().map(approx).unwrap_or_default(),
                    r.detail.clone().unwrap_or_default(),
                ])?;
            }
            Ok(())
        }),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DemoEntry {
    pub family: String,
    pub epsilon: Rat,
    pub depth: usize,
    pub max_index: usize,
    pub status: ScanStatus,
    pub witness: Option<Rat>,
    pub mode: Option<String>,
    pub exceed_indices: Vec<usize>,
    pub integrals_trending_to_zero: bool,
    pub pointwise_nonconvergence_flagged: bool,
    pub probes: Vec<Rat>,
}

/// Per-family demo settings `(eps, depth, max_index, horizon)`.
fn demo_settings(family: Family) -> (Rat, usize, usize, usize) {
    match family {
        Family::ShrinkingBump => (Rat::new(1, 8), 10, 100, 10),
        Family::SlidingTypewriter => (Rat::new(1, 32), 8, 15, 8),
        Family::FixedPlateau => (Rat::new(1, 8), 10, 10, 10),
        Family::FatPathShrinker => (Rat::new(1, 8), 20, 20, 20),
    }
}

pub fn cmd_demo(args: &DemoArgs) -> Result<Vec<DemoEntry>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut out = Vec::new();
    for family in Family::ALL {
        let seq = make_family(family, FamilyParams::default())?;
        let (eps, depth, max_index, horizon) = demo_settings(family);
        let probes: Vec<Rat> = (0..3)
            .map(|_| Rat::new(rng.gen_range(1..1000), 1000))
            .collect();
        let table = convergence_table(&seq, max_index, &probes, &eps)?;
        let mut params = WitnessParams::new(eps.clone(), depth, max_index);
        params.horizon = Some(horizon);
        let (status, witness, mode, exceed) = match run_witness(&seq, &params)? {
            WitnessOutcome::Verified(run) => (
                ScanStatus::Verified,
                Some(run.certificate.witness.clone()),
                Some(format!("{:?}", run.certificate.mode)),
                run.report.exceed_indices.clone(),
            ),
            WitnessOutcome::HypothesisUnmet(_) => (ScanStatus::HypothesisUnmet, None, None, vec![]),
        };
        out.push(DemoEntry {
            family: family.name().to_string(),
            epsilon: eps,
            depth,
            max_index,
            status,
            witness,
            mode,
            exceed_indices: exceed,
            integrals_trending_to_zero: table.integrals_trending_to_zero,
            pointwise_nonconvergence_flagged: table.pointwise_nonconvergence_flagged,
            probes,
        });
    }
    Ok(out)
}

pub fn render_demo(entries: &[DemoEntry], format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => json_string(&entries),
        Format::Csv => csv_string(|w| {
            w.write_record([
                "family",
                "epsilon",
                "status",
                "witness",
                "witness_approx",
                "exceed_count",
                "integrals_trending_to_zero",
                "pointwise_nonconvergence_flagged",
            ])?;
            for e in entries {
                w.write_record([
                    e.family.clone(),
                    e.epsilon.to_string(),
                    status_name(&e.status).to_string(),
                    e.witness.as_ref().map(Rat::to_string).unwrap_or_default(),
                    e.witness.as_ref().map(approx).unwrap_or_default(),
                    e.exceed_indices.len().to_string(),
                    e.integrals_trending_to_zero.to_string(),
                    e.pointwise_nonconvergence_flagged.to_string(),
                ])?;
            }
            Ok(())
        }),
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<VerificationReport, CliError> {
    let seq = args.input.load()?;
    let text = read(&args.cert)?;
    let cert = WitnessCertificate::from_json_str(&text).map_err(|source| CliError::Parse {
        path: args.cert.clone(),
        source,
    })?;
    Ok(verify_against_sequence(&cert, &seq))
}

fn unmet_message(h: &HypothesisUnmet) -> String {
    format!("hypothesis not met: {}", h.message)
}

/// Runs one subcommand, writing its output, and returns the exit status.
pub fn run(cli: &Cli) -> Result<Exit, CliError> {
    match &cli.command {
        Command::Witness(args) => match cmd_witness(args)? {
            WitnessOutcome::Verified(run) => {
                info!("witness {} verified", run.certificate.witness);
                emit(
                    &args.output,
                    &render_witness(&run.certificate, args.output.format)?,
                )?;
                Ok(Exit::Ok)
            }
            WitnessOutcome::HypothesisUnmet(h) => {
                eprintln!("{}", unmet_message(&h));
                print!("{}", json_string(&h)?);
                Ok(Exit::HypothesisUnmet)
            }
        },
        Command::Check(args) => {
            let report = cmd_check(args)?;
            emit(&args.output, &render_check(&report, args.output.format)?)?;
            Ok(Exit::Ok)
        }
        Command::Intersect(args) => {
            let result = cmd_intersect(args)?;
            emit(
                &args.output,
                &render_intersect(&result, args.output.format)?,
            )?;
            Ok(Exit::Ok)
        }
        Command::ScanEpsilon(args) => {
            let rows = cmd_scan_epsilon(args)?;
            emit(&args.output, &render_scan(&rows, args.output.format)?)?;
            Ok(Exit::Ok)
        }
        Command::Demo(args) => {
            let entries = cmd_demo(args)?;
            emit(&args.output, &render_demo(&entries, args.output.format)?)?;
            Ok(Exit::Ok)
        }
        Command::Verify(args) => {
            let report = cmd_verify(args)?;
            emit(&args.output, &json_string(&report)?)?;
            if let Some(f) = &report.failure {
                eprintln!("verification failed: {:?}: {}", f.clause, f.detail);
            }
            Ok(if report.passed { Exit::Ok } else { Exit::Error })
        }
    }
}
