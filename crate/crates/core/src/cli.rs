//! Command-line driver. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or parse error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::coefkit::{decompose, CoefficientVector};
use crate::costmodel::{recommend, Criterion, GateCostModel, Recommendation};
use crate::dataset::{default_fixture, generate, DatasetFile, GeneratorConfig};
use crate::error::{Error, Result};
use crate::estimate::{Backend, Oracle};
use crate::featuremap::{DataPoint, Family};
use crate::harness::validate::{run_criterion, criteria_for, Level};
use crate::harness::{emit, run_plan, ExperimentPlan, OutputFormat};
use crate::strategies::{infer, sign_of, EstimateReport, InferOptions, PreparedInstance, StrategyId};

const STRATEGY_HELP: &str = "Strategy name or `all`. Names: list-sum-fixed-sampling, \
list-sum-adaptive-sampling, list-sum-fixed-qae, list-sum-adaptive-qae, all-at-once-sampling, \
all-at-once-qae, sample-average";

#[derive(Debug, Parser)]
#[command(name = "qkinfer", version, about = "Simulate and benchmark quantum-kernel inference strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate f(x) once with one strategy (or all of them).
    Infer(InferArgs),
    /// Run a seeded sweep and write results.csv and plotdata.tsv.
    Benchmark(BenchmarkArgs),
    /// Rank the strategies by closed-form query or gate totals.
    Recommend(RecommendArgs),
    /// Run the validation suite.
    Validate(ValidateArgs),
    /// Write a generated dataset file.
    GenFixture(GenFixtureArgs),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Dataset file (JSON).
    #[arg(long)]
    dataset: PathBuf,
    /// Query point as comma-separated reals; defaults to the dataset's query.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, default_value = "analytic2d", help = "Grover backend: analytic2d or fullstate")]
    backend: Backend,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, help = STRATEGY_HELP)]
    strategy: String,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "all", help = STRATEGY_HELP)]
    strategy: String,
    /// Comma-separated epsilon grid.
    #[arg(long, default_value = "0.1,0.05,0.025,0.0125")]
    epsilon: String,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RecommendArgs {
    /// Dataset file; alternatively give --g, --n-terms, --n and --alpha.
    #[arg(long, conflicts_with_all = ["g", "n_terms", "n"])]
    dataset: Option<PathBuf>,
    /// Gates per feature-map query.
    #[arg(long)]
    g: Option<u64>,
    /// Number of training points.
    #[arg(long)]
    n_terms: Option<usize>,
    /// Data qubits.
    #[arg(long)]
    n: Option<usize>,
    /// Coefficients as comma-separated reals.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    epsilon: f64,
    /// queries or gates; both rankings are printed when omitted.
    #[arg(long)]
    criterion: Option<Criterion>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// fast or full.
    #[arg(long, default_value = "fast")]
    level: Level,
    /// Reference dataset; defaults to the committed fixture.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenFixtureArgs {
    #[arg(long)]
    out: PathBuf,
    /// angle_ry_cz, angle_rzrx_ring or identity.
    #[arg(long, default_value = "angle_ry_cz")]
    family: Family,
    #[arg(long, default_value_t = 3)]
    qubits: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 8)]
    points: usize,
    /// Target l1 norm of the coefficients.
    #[arg(long, default_value_t = 1.0)]
    l1: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Infer(a) => cmd_infer(&a, out),
        Command::Benchmark(a) => cmd_benchmark(&a, out),
        Command::Recommend(a) => cmd_recommend(&a, out),
        Command::Validate(a) => cmd_validate(&a, out),
        Command::GenFixture(a) => cmd_gen_fixture(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn parse_reals(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{what}: '{t}' is not a number"))))
        .collect()
}

fn parse_strategies(text: &str) -> Result<Vec<StrategyId>> {
    if text == "all" {
        return Ok(StrategyId::ALL.to_vec());
    }
    text.split(',').map(|t| t.trim().parse()).collect()
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io { path: PathBuf::from("<stdout>"), source: e }
}

fn load_instance(args: &InstanceArgs) -> Result<PreparedInstance> {
    let file = DatasetFile::load(&args.dataset)?;
    let x = args.x.as_deref().map(|s| parse_reals(s, "--x").and_then(DataPoint::new)).transpose()?;
    PreparedInstance::new(file.instance(x)?)
}

fn write_report(out: &mut dyn Write, r: &EstimateReport) -> std::io::Result<()> {
    writeln!(out, "strategy: {}", r.strategy)?;
    writeln!(out, "estimate: {}", r.estimate)?;
    writeln!(out, "exact: {}", r.exact)?;
    writeln!(out, "abs_error: {}", r.abs_error())?;
    writeln!(out, "label: {:+}", sign_of(r))?;
    writeln!(out, "epsilon: {}", r.epsilon_target)?;
    writeln!(out, "delta: {}", r.delta)?;
    writeln!(out, "seed: {}", r.seed)?;
    writeln!(out, "total_queries: {}", r.total_queries())?;
    writeln!(out, "modeled_gates: {}", r.modeled_gates)?;
    for o in Oracle::ALL {
        let c = r.counter.count(o);
        if c > 0 {
            writeln!(out, "calls[{}]: {c}", o.name())?;
        }
    }
    if let Some(a) = &r.allocation {
        let per: Vec<String> = a.per_index.iter().map(u64::to_string).collect();
        writeln!(out, "allocation: {} (total {})", per.join(","), a.total)?;
    }
    Ok(())
}

fn cmd_infer(args: &InferArgs, out: &mut dyn Write) -> Result<i32> {
    let strategies = parse_strategies(&args.strategy)?;
    let prepared = load_instance(&args.instance)?;
    let options = InferOptions { backend: args.instance.backend, ..InferOptions::default() };
    for (i, &s) in strategies.iter().enumerate() {
        let report = infer(s, &prepared, args.epsilon, args.delta, &options, args.seed)?;
        if i > 0 {
            writeln!(out).map_err(io_err)?;
        }
        write_report(out, &report).map_err(io_err)?;
    }
    Ok(0)
}

fn cmd_benchmark(args: &BenchmarkArgs, out: &mut dyn Write) -> Result<i32> {
    let plan = ExperimentPlan {
        instance: DatasetFile::load(&args.instance.dataset)?.instance(
            args.instance.x.as_deref().map(|s| parse_reals(s, "--x").and_then(DataPoint::new)).transpose()?,
        )?,
        strategies: parse_strategies(&args.strategy)?,
        epsilon_grid: parse_reals(&args.epsilon, "--epsilon")?,
        delta: args.delta,
        trials: args.trials,
        base_seed: args.seed,
        options: InferOptions { backend: args.instance.backend, ..InferOptions::default() },
    };
    let result = run_plan(&plan)?;
    let csv = emit(&result, OutputFormat::Csv, &args.out)?;
    let plot = emit(&result, OutputFormat::Plotdata, &args.out)?;
    writeln!(out, "wrote {} rows to {}", result.rows.len(), csv.display()).map_err(io_err)?;
    writeln!(out, "wrote {}", plot.display()).map_err(io_err)?;
    for s in &result.query_slopes {
        writeln!(out, "query slope vs 1/epsilon: {} {:.3} +- {:.3}", s.strategy, s.fit.slope, s.fit.stderr)
            .map_err(io_err)?;
    }
    Ok(0)
}

fn cmd_recommend(args: &RecommendArgs, out: &mut dyn Write) -> Result<i32> {
    let (model, decomp) = match &args.dataset {
        Some(path) => {
            let file = DatasetFile::load(path)?;
            let model = GateCostModel::for_instance(&file.feature_map, file.alpha.len())?;
            (model, decompose(&file.alpha))
        }
        None => {
            let missing = || Error::invalid("give --dataset, or all of --g, --n-terms, --n and --alpha");
            let alpha = CoefficientVector::new(parse_reals(args.alpha.as_deref().ok_or_else(missing)?, "--alpha")?)?;
            let n_terms = args.n_terms.unwrap_or(alpha.len());
            if n_terms != alpha.len() {
                return Err(Error::LengthMismatch { expected: n_terms, got: alpha.len() });
            }
            let model = GateCostModel::new(args.g.ok_or_else(missing)?, n_terms, args.n.ok_or_else(missing)?)?;
            (model, decompose(&alpha))
        }
    };
    let criteria = match args.criterion {
        Some(c) => vec![c],
        None => vec![Criterion::Queries, Criterion::Gates],
    };
    for (i, c) in criteria.into_iter().enumerate() {
        let rec = recommend(&model, &decomp, args.epsilon, c)?;
        if i > 0 {
            writeln!(out).map_err(io_err)?;
        }
        writeln!(out, "ranking by {c} (epsilon {}):", args.epsilon).map_err(io_err)?;
        for (rank, (id, total)) in rec.ranking.iter().enumerate() {
            let mark = match (rank, c) {
                (0, Criterion::Queries) => " ★",
                (0, Criterion::Gates) => " ⋄",
                _ => "",
            };
            writeln!(out, "{:>2}. {:<28} {:.6e}{mark}", rank + 1, id.name(), total).map_err(io_err)?;
        }
        if !Recommendation::in_regime(&model, &decomp, args.epsilon, c) {
            writeln!(out, "note: epsilon is outside the range where this ranking is guaranteed").map_err(io_err)?;
        }
    }
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let fixture = match &args.dataset {
        Some(p) => DatasetFile::load(p)?,
        None => default_fixture(),
    };
    let mut failed = 0;
    for &id in criteria_for(args.level) {
        let outcome = run_criterion(id, &fixture);
        if !outcome.passed {
            failed += 1;
        }
        writeln!(out, "{outcome}").map_err(io_err)?;
    }
    let total = criteria_for(args.level).len();
    writeln!(out, "{} of {total} criteria passed", total - failed).map_err(io_err)?;
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_gen_fixture(args: &GenFixtureArgs, out: &mut dyn Write) -> Result<i32> {
    let file = generate(&GeneratorConfig {
        family: args.family,
        num_qubits: args.qubits,
        num_layers: args.layers,
        num_points: args.points,
        l1_norm: args.l1,
        seed: args.seed,
    })?;
    file.save(&args.out)?;
    writeln!(out, "wrote {}", args.out.display()).map_err(io_err)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(std::iter::once("qkinfer").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_lists_every_strategy() {
        let (code, text, _) = run(&["infer", "--help"]);
        assert_eq!(code, 0);
        for id in StrategyId::ALL {
            assert!(text.contains(id.name()), "{}", id.name());
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&["validate", "--level", "medium"]).0, 2);
        assert_eq!(run(&["frobnicate"]).0, 2);
        assert_eq!(run(&["recommend", "--epsilon", "0.1"]).0, 2);
        assert_eq!(run(&["recommend", "--epsilon", "0.1", "--criterion", "speed"]).0, 2);
    }

    #[test]
    fn recommend_from_raw_parameters() {
        let (code, text, _) =
            run(&["recommend", "--g", "10", "--n", "3", "--alpha", "0.5,-0.25,0.25", "--epsilon", "0.01"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].contains("all-at-once-qae") && lines[1].ends_with('★'));
        let gates = lines.iter().position(|l| l.starts_with("ranking by gates")).unwrap();
        assert!(lines[gates + 1].contains("list-sum-adaptive-qae") && lines[gates + 1].ends_with('⋄'));
        assert_eq!(text.lines().filter(|l| l.contains(". ")).count(), 14);
    }

    #[test]
    fn strategy_lists() {
        assert_eq!(parse_strategies("all").unwrap().len(), 7);
        assert_eq!(parse_strategies("sample-average,all-at-once-qae").unwrap().len(), 2);
        assert!(parse_strategies("fastest").is_err());
        assert_eq!(parse_reals("-1, 2.5", "x").unwrap(), vec![-1.0, 2.5]);
        assert!(parse_reals("1,,2", "x").is_err());
    }
}
