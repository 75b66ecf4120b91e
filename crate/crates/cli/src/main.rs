use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evindex::dependence::PrecisionMatrix;
use evindex::hill::KChoice;
use evindex::maxtest::NullSpec;
use evindex::mc::{compare_tables, run_experiment, run_experiment_with_threads, ExperimentConfig, Hypothesis, McReport, ReferenceTable};
use evindex::procedure::{parse_test_list, run_tests, TestContext, TestSpec};
use evindex::simulate::{draw_alternative, generate_with_diagnostics, DExponent, Model, ModelSpec, SeedSpec};
use evindex::Probability;
use evindex_cli::error::core_exit_code;
use evindex_cli::ingest::{default_names, ingest_csv, write_csv, Dataset, HeaderMode, IngestOptions, Transform};
use evindex_cli::report::{emit_report, write_output, Format, HillPanel, ReportDocument, RunInfo};
use evindex_cli::sweep::sweep_k;
use evindex_cli::{CliError, Result};

/// Tests for equal or specified extreme value indices in high dimensions.
#[derive(Parser)]
#[command(name = "evitest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run tests on a CSV dataset at one k.
    Test(TestArgs),
    /// p-values over a grid of k.
    SweepK(SweepArgs),
    /// Generate a sample from one of the simulation models.
    Simulate(SimulateArgs),
    /// Monte Carlo size/power experiment.
    Mc(McArgs),
    /// Compare a Monte Carlo report with reference rejection rates.
    CompareTables(CompareArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file, one column per dimension.
    input: PathBuf,
    /// The first row is a header (default: detected).
    #[arg(long, conflicts_with = "no_header")]
    header: bool,
    /// The first row is data.
    #[arg(long)]
    no_header: bool,
    /// Multiply all values by -1 (returns → losses).
    #[arg(long, conflicts_with = "transform")]
    negate: bool,
    /// none, negate, or loss (negate and clamp gains to 0).
    #[arg(long)]
    transform: Option<Transform>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let header = match (self.header, self.no_header) {
            (true, _) => HeaderMode::Present,
            (_, true) => HeaderMode::Absent,
            _ => HeaderMode::Auto,
        };
        let transform = if self.negate { Transform::Negate } else { self.transform.unwrap_or_default() };
        ingest_csv(&self.input, &IngestOptions { header, transform })
    }
}

#[derive(Args)]
#[group(id = "null", required = true, multiple = false)]
struct NullArgs {
    /// Null indices γ⁰: one positive value per line, in column order.
    #[arg(long, group = "null")]
    gamma0: Option<PathBuf>,
    /// Test equality of all indices instead.
    #[arg(long, group = "null")]
    equal: bool,
}

#[derive(Args)]
struct TestOpts {
    /// Comma-separated tests: T, T_W, T_Omega(r|file|identity). Starred forms follow --equal.
    #[arg(long, default_value = "T")]
    tests: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Added to the diagonal of Σ̃ before inversion.
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    /// Ω for T_Omega(file): p whitespace-separated rows.
    #[arg(long)]
    omega_file: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// text, json, csv or svg (default: from --out extension, else text).
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    null: NullArgs,
    #[command(flatten)]
    opts: TestOpts,
    #[arg(long)]
    k: usize,
    /// Confidence level of the per-dimension Hill intervals.
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    null: NullArgs,
    #[command(flatten)]
    opts: TestOpts,
    #[arg(long)]
    k_min: usize,
    #[arg(long)]
    k_max: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// Also report Hill estimates with confidence limits at this k.
    #[arg(long)]
    ci_k: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: Model,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// True indices, one per line (default: all 1).
    #[arg(long, conflicts_with = "alternative_k")]
    gamma: Option<PathBuf>,
    /// Draw the sparse alternative calibrated to this k.
    #[arg(long)]
    alternative_k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Model D exponent: reciprocal (-1/γ) or direct (-γ).
    #[arg(long, default_value = "reciprocal", value_parser = parse_d_exponent)]
    d_exponent: DExponent,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, default_value = "A,B,C,D", value_delimiter = ',')]
    models: Vec<Model>,
    #[arg(long, default_value = "T")]
    tests: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value = "50", value_delimiter = ',')]
    p: Vec<usize>,
    #[arg(long, default_value = "50", value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// null or alternative.
    #[arg(long, default_value = "null")]
    hypothesis: Hypothesis,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Does not affect results.
    #[arg(long)]
    threads: Option<usize>,
    /// Use one alternative draw for all replications.
    #[arg(long)]
    fixed_alternative: bool,
    #[arg(long, default_value = "reciprocal", value_parser = parse_d_exponent)]
    d_exponent: DExponent,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json (default: from --out extension, else csv).
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args)]
struct CompareArgs {
    /// JSON report written by `evitest mc`.
    report: PathBuf,
    /// Reference CSV (model,test,hypothesis,p,k,alt_k,rate); default: the bundled table for the report's hypothesis.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0.03)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// text or json.
    #[arg(long)]
    format: Option<Format>,
}

fn parse_d_exponent(s: &str) -> std::result::Result<DExponent, String> {
    match s {
        "reciprocal" => Ok(DExponent::Reciprocal),
        "direct" => Ok(DExponent::Direct),
        _ => Err(format!("expected 'reciprocal' or 'direct', got '{s}'")),
    }
}

fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| CliError::Data {
                source_name: path.display().to_string(),
                message: format!("line {}: cannot parse '{}' as a number", i + 1, l.trim()),
            })
        })
        .collect()
}

fn null_spec(args: &NullArgs, p: usize) -> Result<NullSpec> {
    if args.equal {
        return Ok(NullSpec::Equal);
    }
    let path = args.gamma0.as_ref().expect("clap enforces one of --gamma0/--equal");
    let g = read_vector(path)?;
    if g.len() != p {
        return Err(CliError::usage(format!("{} has {} values but the data have {p} columns", path.display(), g.len())));
    }
    Ok(NullSpec::specified(g)?)
}

fn test_specs(opts: &TestOpts, null: &NullSpec) -> Result<Vec<TestSpec>> {
    let specs = parse_test_list(&opts.tests)?;
    if !null.is_equal() && specs.iter().any(|s| s.equal) {
        return Err(CliError::usage("starred tests test equal indices; use --equal"));
    }
    Ok(specs.into_iter().map(|s| s.with_equal(null.is_equal())).collect())
}

fn context(opts: &TestOpts, p: usize) -> Result<TestContext> {
    let mut ctx = TestContext::new(Probability::new(opts.alpha)?);
    ctx.ridge = opts.ridge;
    if let Some(path) = &opts.omega_file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let omega = PrecisionMatrix::parse_text(&text)?;
        if omega.p() != p {
            return Err(CliError::usage(format!("Ω is {0}x{0} but the data have {p} columns", omega.p())));
        }
        ctx.supplied_omega = Some(omega);
    }
    Ok(ctx)
}

fn run_info(command: &str, data: &DataArgs, ds: &Dataset, null: &NullSpec, opts: &TestOpts) -> RunInfo {
    RunInfo {
        tool: "evitest".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        input: Some(data.input.display().to_string()),
        transform: ds.transform,
        null: null.clone(),
        alpha: opts.alpha,
        ridge: opts.ridge,
    }
}

fn output_format(format: Option<Format>, out: Option<&Path>, fallback: Format) -> Format {
    format.or_else(|| out.and_then(Format::from_path)).unwrap_or(fallback)
}

/// Returns the exit code of the first failed test, if any.
fn cmd_test(a: &TestArgs) -> Result<i32> {
    let ds = a.data.load()?;
    let p = ds.matrix.p();
    let null = null_spec(&a.null, p)?;
    let specs = test_specs(&a.opts, &null)?;
    let ctx = context(&a.opts, p)?;
    let gamma0 = match &null {
        NullSpec::Specified(g) => Some(g.as_slice()),
        NullSpec::Equal => None,
    };
    let results = run_tests(&ds.matrix, a.k, &specs, gamma0, &ctx)?;
    let mut doc = ReportDocument::new(run_info("test", &a.data, &ds, &null, &a.opts), ds.column_names.clone());
    let mut code = 0;
    for (spec, res) in specs.iter().zip(results) {
        if let Err(e) = &res {
            eprintln!("evitest: {spec}: {e}");
            if code == 0 {
                code = core_exit_code(e);
            }
        }
        doc.push(a.k, spec.to_string(), res);
    }
    doc.hill = Some(HillPanel::compute(&ds.matrix, &ds.column_names, a.k, a.ci_level)?);
    let out = a.opts.out.as_deref();
    emit_report(&doc, output_format(a.opts.format, out, Format::Text), out)?;
    Ok(code)
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let ds = a.data.load()?;
    let p = ds.matrix.p();
    let null = null_spec(&a.null, p)?;
    let specs = test_specs(&a.opts, &null)?;
    let ctx = context(&a.opts, p)?;
    let sweep = sweep_k(&ds.matrix, a.k_min, a.k_max, a.step, &null, &specs, &ctx)?;
    let mut doc = ReportDocument::new(run_info("sweep-k", &a.data, &ds, &null, &a.opts), ds.column_names.clone());
    doc.add_sweep(&sweep);
    if let Some(k) = a.ci_k {
        doc.hill = Some(HillPanel::compute(&ds.matrix, &ds.column_names, k, a.ci_level)?);
    }
    let out = a.opts.out.as_deref();
    emit_report(&doc, output_format(a.opts.format, out, Format::Text), out)?;
    Ok(0)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let seed = SeedSpec::new(a.seed, a.stream);
    let gamma = match (&a.gamma, a.alternative_k) {
        (Some(path), _) => read_vector(path)?,
        (None, Some(k)) => {
            let (g, alt) = draw_alternative(a.p, &KChoice::uniform(k, a.p, a.n)?, seed)?;
            eprintln!("evitest: alternative support {:?} with deviations {:?}", alt.support, alt.deltas);
            g
        }
        (None, None) => vec![1.0; a.p],
    };
    if gamma.len() != a.p {
        return Err(CliError::usage(format!("{} indices given for p = {}", gamma.len(), a.p)));
    }
    let spec = ModelSpec::new(a.model, a.n, gamma)?.with_d_exponent(a.d_exponent);
    let generated = generate_with_diagnostics(&spec, seed)?;
    if generated.saturated > 0 {
        eprintln!("evitest: {} values overflowed and were saturated to ±f64::MAX", generated.saturated);
    }
    let mut buf = Vec::new();
    write_csv(&generated.data, &default_names(a.p), &mut buf).map_err(|e| CliError::io("<buffer>", e))?;
    write_output(a.out.as_deref(), std::str::from_utf8(&buf).expect("CSV is UTF-8"))?;
    Ok(0)
}

fn cmd_mc(a: &McArgs) -> Result<i32> {
    let config = ExperimentConfig {
        models: a.models.clone(),
        tests: parse_test_list(&a.tests)?,
        n: a.n,
        p_values: a.p.clone(),
        k_values: a.k.clone(),
        alpha: Probability::new(a.alpha)?,
        replications: a.reps,
        hypothesis: a.hypothesis,
        master_seed: a.seed,
        ridge: a.ridge,
        d_exponent: a.d_exponent,
        fixed_alternative: a.fixed_alternative,
    };
    let report = match a.threads {
        Some(0) => return Err(CliError::usage("--threads must be positive")),
        Some(t) => run_experiment_with_threads(&config, t)?,
        None => run_experiment(&config)?,
    };
    let out = a.out.as_deref();
    let body = match output_format(a.format, out, Format::Csv) {
        Format::Csv => report.to_csv_string(),
        Format::Json => report.to_json(),
        other => return Err(CliError::usage(format!("mc reports are csv or json, not {other:?}"))),
    };
    write_output(out, &body)?;
    Ok(0)
}

fn cmd_compare(a: &CompareArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&a.report).map_err(|e| CliError::io(&a.report, e))?;
    let report = McReport::from_json(&text)?;
    let reference = match &a.reference {
        Some(path) => ReferenceTable::from_path(path)?,
        None => ReferenceTable::builtin(report.provenance.config.hypothesis),
    };
    let diff = compare_tables(&report, &reference, a.tolerance)?;
    let out = a.out.as_deref();
    let body = match output_format(a.format, out, Format::Text) {
        Format::Json => serde_json::to_string_pretty(&diff).expect("diff is serializable"),
        Format::Text => {
            let mut s = String::new();
            for r in &diff.rows {
                s.push_str(&format!(
                    "{} {:<8} p={:<4} k={:<4} observed={:<8} reference={:.2} {}\n",
                    r.model,
                    r.test,
                    r.p,
                    r.k,
                    r.observed.map_or("invalid".to_string(), |x| format!("{x:.3}")),
                    r.reference,
                    if r.flagged { "FLAG" } else { "ok" }
                ));
            }
            s.push_str(&format!(
                "max deviation {:.4}; {} of {} cells beyond tolerance {}\n",
                diff.max_deviation,
                diff.flagged,
                diff.rows.len(),
                diff.tolerance
            ));
            s
        }
        other => return Err(CliError::usage(format!("comparison output is text or json, not {other:?}"))),
    };
    write_output(out, &body)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::SweepK(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Mc(a) => cmd_mc(a),
        Command::CompareTables(a) => cmd_compare(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("evitest: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
