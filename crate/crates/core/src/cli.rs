//! Command-line front end.
//!
//! Exit status: 0 success (feasible), 1 infeasible or disagreement found,
//! 2 usage or parse error, 3 outside a method's domain.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::closed_form::{all_coded_boundary, ThreeFileParams};
use crate::error::{Error, Result};
use crate::greedy::maximize_lambda_k_greedy;
use crate::lp::{self, LpMode};
use crate::numeric::{fmt_num, parse_rational, ratio, JsonNumber, Rational};
use crate::region::{self, ExportFormat, RegionBoundary, Source};
use crate::routing::{node_loads, DemandVector};
use crate::storage::{enumerate_repair_groups, NodeKind, StorageSystem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rational,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lp,
    Closed,
    Greedy,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<FormatArg> for ExportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ExportFormat::Csv,
            FormatArg::Json => ExportFormat::Json,
            FormatArg::Svg => ExportFormat::Svg,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "srr", version, about = "Service rate regions of erasure-coded storage systems")]
pub struct Cli {
    /// LP arithmetic.
    #[arg(long, global = true, value_enum, env = "SRR_MODE")]
    pub mode: Option<ModeArg>,

    /// Tolerance for float mode.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the repair groups of every file.
    Groups { spec: PathBuf },

    /// Decide whether a demand vector lies in the service rate region.
    Feasible {
        spec: PathBuf,
        /// One demand per file; decimals or fractions such as 1/3.
        #[arg(required = true, allow_negative_numbers = true)]
        lambda: Vec<String>,
        /// Write the witness splitting strategy here as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Largest demand for the last file given the others.
    Maximize {
        spec: PathBuf,
        /// Demands of files 1..K-1.
        #[arg(allow_negative_numbers = true)]
        lambda_hat: Vec<String>,
        #[arg(long, value_enum, default_value = "lp")]
        method: MethodArg,
        /// Write the greedy trace here as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },

    /// Sample the region boundary and export it.
    Region {
        spec: PathBuf,
        #[arg(long)]
        step: Option<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "lp")]
        method: MethodArg,
    },

    /// Compare LP, closed form and greedy on a three-file grid.
    Validate {
        spec: PathBuf,
        #[arg(long)]
        step: Option<String>,
    },
}

/// JSON system description.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpecFile {
    #[serde(rename = "K")]
    pub files: usize,
    #[serde(default)]
    pub mu: Option<JsonNumber>,
    pub systematic: Vec<usize>,
    pub coded: usize,
    #[serde(default)]
    pub mode: Option<ModeName>,
    #[serde(default)]
    pub grid_step: Option<JsonNumber>,
    /// Node order, e.g. `["1", "1", "c", "2"]`; canonical when absent.
    #[serde(default)]
    pub layout: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Rational,
    Float,
}

impl SystemSpecFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
            Error::InvalidSystem(format!("{origin}:{}:{}: {msg}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::InvalidSystem(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn system(&self) -> Result<StorageSystem> {
        if self.systematic.len() != self.files {
            return Err(Error::InvalidSystem(format!("\"systematic\" has {} entries for K = {}", self.systematic.len(), self.files)));
        }
        let mu = self.mu.as_ref().map(|m| m.0.clone()).unwrap_or_else(|| ratio(1, 1));
        let Some(layout) = &self.layout else {
            return StorageSystem::mds_core(&self.systematic, self.coded, mu);
        };
        let mut nodes = Vec::with_capacity(layout.len());
        for entry in layout {
            let kind = if entry.eq_ignore_ascii_case("c") {
                NodeKind::Coded
            } else {
                match entry.parse::<usize>() {
                    Ok(f) if (1..=self.files).contains(&f) => NodeKind::Systematic(f - 1),
                    _ => return Err(Error::InvalidSystem(format!("bad layout entry {entry:?}"))),
                }
            };
            nodes.push(kind);
        }
        let system = StorageSystem::from_nodes(self.files, nodes, mu)?;
        if system.systematic_counts() != self.systematic || system.coded_count() != self.coded {
            return Err(Error::InvalidSystem("layout does not match \"systematic\" and \"coded\" counts".into()));
        }
        Ok(system)
    }
}

struct Context {
    spec: SystemSpecFile,
    system: StorageSystem,
    mode: LpMode,
}

impl Context {
    fn new(cli: &Cli, path: &Path) -> Result<Self> {
        let spec = SystemSpecFile::load(path)?;
        let system = spec.system()?;
        let float = match (cli.mode, spec.mode) {
            (Some(m), _) => m == ModeArg::Float,
            (None, Some(m)) => m == ModeName::Float,
            (None, None) => false,
        };
        let mode = if float {
            match cli.tol {
                Some(t) => LpMode::float_with(t)?,
                None => LpMode::float(),
            }
        } else {
            LpMode::ExactRational
        };
        Ok(Self { spec, system, mode })
    }

    fn step(&self, flag: Option<&String>) -> Result<Rational> {
        match (flag, &self.spec.grid_step) {
            (Some(s), _) => parse_rational(s),
            (None, Some(s)) => Ok(s.0.clone()),
            (None, None) => Ok(ratio(1, 4)),
        }
    }
}

fn parse_values(values: &[String], expected: usize, what: &str) -> Result<Vec<Rational>> {
    if values.len() != expected {
        return Err(Error::Dimension(format!("expected {expected} values for {what}, got {}", values.len())));
    }
    let parsed = values.iter().map(|v| parse_rational(v)).collect::<Result<Vec<_>>>()?;
    if let Some(bad) = parsed.iter().find(|v| v.is_negative()) {
        return Err(Error::InvalidParameter(format!("negative demand {}", fmt_num(bad))));
    }
    Ok(parsed)
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NotInRegion => EXIT_INFEASIBLE,
        Error::UnsupportedParameters(_) | Error::OutOfDomain(_) | Error::UnsupportedFormat(_) => EXIT_DOMAIN,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` and runs the command, returning the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match dispatch(&cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Groups { spec } => cmd_groups(&Context::new(cli, spec)?, out),
        Command::Feasible { spec, lambda, out: path } => cmd_feasible(&Context::new(cli, spec)?, lambda, path.as_deref(), out),
        Command::Maximize { spec, lambda_hat, method, trace } => {
            cmd_maximize(&Context::new(cli, spec)?, lambda_hat, *method, trace.as_deref(), out)
        }
        Command::Region { spec, step, format, out: path, method } => {
            let ctx = Context::new(cli, spec)?;
            let step = ctx.step(step.as_ref())?;
            cmd_region(&ctx, &step, (*format).into(), path.as_deref(), *method, out)
        }
        Command::Validate { spec, step } => {
            let ctx = Context::new(cli, spec)?;
            let step = ctx.step(step.as_ref())?;
            let report = region::cross_validate(&ctx.system, &step, ctx.mode)?;
            write!(out, "{report}")?;
            Ok(if report.is_consistent() { EXIT_OK } else { EXIT_INFEASIBLE })
        }
    }
}

fn cmd_groups(ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let table = enumerate_repair_groups(&ctx.system);
    write!(out, "{table}")?;
    if table.total_groups() == 0 {
        eprintln!("warning: no file recoverable");
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct WitnessFile {
    feasible: bool,
    lambda: Vec<JsonNumber>,
    alpha: Vec<Vec<JsonNumber>>,
    /// Exact fractions, for lossless replay.
    alpha_exact: Vec<Vec<String>>,
    loads: Vec<JsonNumber>,
    binding_nodes: Vec<usize>,
}

fn cmd_feasible(ctx: &Context, lambda: &[String], path: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let demand = DemandVector::new(parse_values(lambda, ctx.system.files(), "lambda")?)?;
    let table = enumerate_repair_groups(&ctx.system);
    let witness = lp::feasible(&ctx.system, &table, &demand, ctx.mode)?;
    let Some(strategy) = witness.strategy.filter(|_| witness.feasible) else {
        writeln!(out, "infeasible")?;
        return Ok(EXIT_INFEASIBLE);
    };
    let binding: Vec<usize> = witness.binding_nodes.iter().map(|n| n.0 + 1).collect();
    let shown: Vec<String> = binding.iter().map(ToString::to_string).collect();
    writeln!(out, "feasible")?;
    writeln!(out, "binding nodes: {}", if shown.is_empty() { "none".into() } else { shown.join(",") })?;
    if let Some(path) = path {
        let loads = node_loads(&table, &strategy, &demand)?;
        let doc = WitnessFile {
            feasible: true,
            lambda: demand.as_slice().iter().cloned().map(JsonNumber).collect(),
            alpha: strategy.alpha.iter().map(|r| r.iter().cloned().map(JsonNumber).collect()).collect(),
            alpha_exact: strategy.alpha.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect(),
            loads: loads.0.into_iter().map(JsonNumber).collect(),
            binding_nodes: binding,
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(path, text)?;
    }
    Ok(EXIT_OK)
}

/// Closed-form value: the all-coded formula for any `K`, the three-file
/// formula otherwise.
fn closed_value(system: &StorageSystem, lambda_hat: &[Rational]) -> Result<Rational> {
    if system.is_all_coded() {
        return all_coded_boundary(system.coded_count(), system.files(), system.mu(), lambda_hat).map(|b| b.value);
    }
    let params = ThreeFileParams::from_system(system)?;
    let value = params.boundary(&lambda_hat[0], &lambda_hat[1])?;
    if value.is_negative() {
        return Err(Error::NotInRegion);
    }
    Ok(value)
}

fn cmd_maximize(ctx: &Context, lambda_hat: &[String], method: MethodArg, trace_path: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let k = ctx.system.files();
    let lambda_hat = parse_values(lambda_hat, k - 1, "lambda_hat")?;
    let system = &ctx.system;
    let lp_value = || -> Result<Rational> {
        let table = enumerate_repair_groups(system);
        lp::boundary_value(system, &table, &lambda_hat, ctx.mode)?.ok_or(Error::NotInRegion)
    };
    let greedy_value = || -> Result<Rational> {
        let (value, trace) = maximize_lambda_k_greedy(system, &lambda_hat)?;
        if let Some(path) = trace_path {
            fs::write(path, trace.to_json_lines())?;
        }
        Ok(value)
    };

    let single = match method {
        MethodArg::Lp => Some(lp_value()),
        MethodArg::Closed => Some(closed_value(system, &lambda_hat)),
        MethodArg::Greedy => Some(greedy_value()),
        MethodArg::All => None,
    };
    if let Some(result) = single {
        return match result {
            Ok(v) => {
                writeln!(out, "{}", fmt_num(&v))?;
                Ok(EXIT_OK)
            }
            Err(Error::NotInRegion) => {
                writeln!(out, "not in region")?;
                Ok(EXIT_INFEASIBLE)
            }
            Err(e) => Err(e),
        };
    }

    let results = [("lp", lp_value()), ("closed", closed_value(system, &lambda_hat)), ("greedy", greedy_value())];
    let mut values: Vec<&Rational> = Vec::new();
    let mut outside = 0;
    for (name, result) in &results {
        match result {
            Ok(v) => {
                writeln!(out, "{name}: {}", fmt_num(v))?;
                values.push(v);
            }
            Err(Error::NotInRegion) => {
                writeln!(out, "{name}: not in region")?;
                outside += 1;
            }
            Err(e @ (Error::UnsupportedParameters(_) | Error::OutOfDomain(_))) => {
                writeln!(out, "{name}: n/a ({e})")?;
            }
            Err(e) => return Err(Error::Solver(format!("{name}: {e}"))),
        }
    }
    let agree = values.windows(2).all(|w| w[0] == w[1]) && (outside == 0 || values.is_empty());
    writeln!(out, "{}", if agree { "agree" } else { "DISAGREE" })?;
    Ok(if agree { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn cmd_region(
    ctx: &Context,
    step: &Rational,
    format: ExportFormat,
    path: Option<&Path>,
    method: MethodArg,
    out: &mut dyn Write,
) -> Result<i32> {
    let sources: &[Source] = match method {
        MethodArg::Lp => &[Source::Lp],
        MethodArg::Closed => &[Source::ClosedForm],
        MethodArg::Greedy => &[Source::Greedy],
        MethodArg::All => &[Source::Lp, Source::ClosedForm, Source::Greedy],
    };
    let mut region: Option<RegionBoundary> = None;
    for &source in sources {
        let part = region::sample_boundary(&ctx.system, step, source, ctx.mode)?;
        match &mut region {
            Some(r) => r.samples.extend(part.samples),
            None => region = Some(part),
        }
    }
    let region = region.expect("at least one source");
    let text = region::render(&region, format)?;
    let max = region.max_value().cloned().unwrap_or_else(Rational::zero);
    let summary = format!("samples: {}, max L: {}", region.samples.len(), fmt_num(&max));
    match path {
        Some(p) => {
            fs::write(p, text)?;
            writeln!(out, "{summary}")?;
        }
        None => {
            out.write_all(text.as_bytes())?;
            eprintln!("{summary}");
        }
    }
    Ok(EXIT_OK)
}
