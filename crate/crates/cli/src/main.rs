//! `encompass`: Bayes factors for order-restricted and point-null hypotheses
//! about binomial success probabilities.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use encompass::engine::{DEFAULT_CHUNK_SIZE, PRIOR_STREAM_BASE};
use encompass::oracle::{exact_pairwise_order_prob, grid_order_prob};
use encompass::pipeline::{
    density_csv, density_grid, ingest_trials, parse_counts, parse_trials_csv, run_analysis, run_replication,
    AnalysisPlan, Excluded, StudyReport,
};
use encompass::{proportion_in_region, BetaParams, BinomialObservation, ConstraintSet, Error, StreamKey};
use serde::Deserialize;

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_COMPUTATION: u8 = 3;

/// Grid resolutions used by `oracle-check` when no exact pairwise oracle applies.
const GRID_RESOLUTION_K2: usize = 2000;
const GRID_RESOLUTION_K3: usize = 500;

#[derive(Debug, Parser)]
#[command(name = "encompass", version, about, propagate_version = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Override the plan's random seed (recorded in the report).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Monte Carlo draws per leg; sets both prior and posterior sample counts.
    #[arg(long, global = true, value_name = "INT")]
    samples: Option<u64>,
    /// Write the machine-readable result (JSON report or CSV) to this path.
    #[arg(long, short, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Suppress the human-readable summary (errors and warnings still go to stderr).
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Number of worker threads for sampling (results do not depend on it).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyse one study: Savage-Dickey BF_e0, encompassing BF_er and BF_r0.
    Analyze {
        /// Analysis plan (TOML).
        #[arg(long, value_name = "PATH")]
        plan: PathBuf,
        #[command(flatten)]
        data: DataSource,
    },
    /// Analyse a replication using the original study's posterior as prior.
    Replicate {
        /// Plan of the original study (TOML); its priors are updated.
        #[arg(long, value_name = "PATH")]
        plan: PathBuf,
        /// Aggregated counts of the original study (TOML).
        #[arg(long, value_name = "PATH")]
        original_counts: PathBuf,
        #[command(flatten)]
        data: DataSource,
    },
    /// Compare a Monte Carlo region proportion with an independent oracle (K <= 3).
    OracleCheck(OracleArgs),
    /// Export prior and posterior density curves as CSV.
    Densities {
        /// Analysis plan (TOML).
        #[arg(long, value_name = "PATH")]
        plan: PathBuf,
        #[command(flatten)]
        data: DataSource,
        /// Grid intervals on (0, 1); rows are emitted at i/RESOLUTION, i = 1..RESOLUTION-1.
        #[arg(long, default_value_t = 512, value_name = "INT")]
        resolution: usize,
        /// Only emit rows for this measure.
        #[arg(long, value_name = "NAME")]
        measure: Option<String>,
    },
    /// Check a plan and print its fingerprint and hypotheses.
    ValidatePlan {
        /// Analysis plan (TOML).
        #[arg(long, value_name = "PATH")]
        plan: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct DataSource {
    /// Trial-level data: CSV with columns participant_id,measure,correct.
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Aggregated counts (TOML, one [measure] table with successes and trials).
    #[arg(long, value_name = "PATH")]
    counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Check configuration (TOML with `shapes`, `relations`, optional `expected`).
    #[arg(long, value_name = "PATH", conflicts_with_all = ["shape", "relation"])]
    config: Option<PathBuf>,
    /// Beta shape `ALPHA,BETA` of one coordinate; repeat once per coordinate.
    #[arg(long, value_name = "ALPHA,BETA", value_parser = parse_shape)]
    shape: Vec<(f64, f64)>,
    /// Order relation `I,J` meaning theta[I] < theta[J]; repeatable.
    #[arg(long, value_name = "I,J", value_parser = parse_relation)]
    relation: Vec<(usize, usize)>,
    /// Compare against this probability instead of the computed oracle value.
    #[arg(long, value_name = "P")]
    expected: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleConfig {
    shapes: Vec<(f64, f64)>,
    #[serde(default)]
    relations: Vec<(usize, usize)>,
    expected: Option<f64>,
    seed: Option<u64>,
    samples: Option<u64>,
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String>
where
    T::Err: Display,
{
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated values, got {s:?}"))?;
    let a = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((a, b))
}

fn parse_shape(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s)
}

fn parse_relation(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s)
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_computational() => EXIT_COMPUTATION,
            Error::Unsupported(_) => EXIT_USAGE,
            _ => EXIT_INPUT,
        };
        Failure::new(code, e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Failure::new(EXIT_USAGE, "--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(EXIT_USAGE, format!("cannot configure thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Analyze { plan, data } => {
            let plan = load_plan(plan, g)?;
            let (counts, excluded) = load_data(data, &plan)?;
            let mut report = run_analysis(&plan, &counts)?;
            report.excluded = excluded;
            emit_report(&report, g)
        }
        Command::Replicate {
            plan,
            original_counts,
            data,
        } => {
            let plan = load_plan(plan, g)?;
            let original = parse_counts(&read(original_counts)?, &plan).map_err(|e| located(original_counts, e))?;
            let (counts, excluded) = load_data(data, &plan)?;
            let mut report = run_replication(&plan, &original, &counts)?;
            report.excluded = excluded;
            emit_report(&report, g)
        }
        Command::OracleCheck(args) => oracle_check(args, g),
        Command::Densities {
            plan,
            data,
            resolution,
            measure,
        } => {
            let plan = load_plan(plan, g)?;
            let (counts, _) = load_data(data, &plan)?;
            let posts = encompass::engine::posteriors(&plan.priors, &counts)?;
            let mut rows = density_grid(&plan.priors, &posts, *resolution)?;
            if let Some(name) = measure {
                let k = plan.measure_index(name).ok_or_else(|| {
                    Failure::new(
                        EXIT_INPUT,
                        format!(
                            "measure {name:?} is not in the plan (plan measures: {})",
                            plan.measures.join(", ")
                        ),
                    )
                })?;
                rows.retain(|r| r.measure == k);
            }
            let csv = density_csv(&plan.measures, &rows);
            match &g.output {
                Some(path) => write(path, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::ValidatePlan { plan } => {
            let plan = load_plan(plan, g)?;
            if !g.quiet {
                print!("{}", describe_plan(&plan));
            }
            Ok(())
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| Failure::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display())))
}

fn load_plan(path: &Path, g: &GlobalOpts) -> CliResult<AnalysisPlan> {
    let mut plan = AnalysisPlan::from_toml(&read(path)?).map_err(|e| located(path, e))?;
    if let Some(seed) = g.seed {
        plan.mc.seed = seed;
    }
    if let Some(n) = g.samples {
        plan.mc = plan.mc.samples(n);
    }
    plan.mc.validate()?;
    Ok(plan)
}

/// Prefixes an error message with the file it came from.
fn located(path: &Path, e: Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn load_data(src: &DataSource, plan: &AnalysisPlan) -> CliResult<(Vec<BinomialObservation>, Vec<Excluded>)> {
    match (&src.data, &src.counts) {
        (Some(path), _) => {
            let file = fs::File::open(path)
                .map_err(|e| Failure::new(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))?;
            let records = parse_trials_csv(file).map_err(|e| located(path, e))?;
            let ingested = ingest_trials(records, plan).map_err(|e| located(path, e))?;
            Ok((ingested.counts, ingested.excluded))
        }
        (None, Some(path)) => {
            let counts = parse_counts(&read(path)?, plan).map_err(|e| located(path, e))?;
            Ok((counts, Vec::new()))
        }
        (None, None) => Err(Failure::new(EXIT_USAGE, "one of --data or --counts is required")),
    }
}

fn emit_report(report: &StudyReport, g: &GlobalOpts) -> CliResult {
    if let Some(path) = &g.output {
        write(path, &report.to_json())?;
    }
    if !g.quiet {
        print!("{}", report.render_table());
        if !report.excluded.is_empty() {
            println!("excluded participants: {}", report.excluded.len());
            for e in &report.excluded {
                println!("  {} ({})", e.participant_id, e.rules.join(", "));
            }
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn describe_plan(plan: &AnalysisPlan) -> String {
    let mut lines = vec![
        format!("plan ok, fingerprint {}", plan.fingerprint()),
        format!("measures ({}): {}", plan.k(), plan.measures.join(", ")),
    ];
    for (m, p) in plan.measures.iter().zip(&plan.priors) {
        lines.push(format!("  prior {m}: {p}"));
    }
    if let Some(point) = &plan.point_null {
        let at: Vec<String> = plan
            .measures
            .iter()
            .zip(point.values())
            .map(|(m, v)| format!("{m} = {v}"))
            .collect();
        lines.push(format!("H_0: {}", at.join(", ")));
    }
    if let Some(cs) = &plan.restriction {
        let rel: Vec<String> = cs
            .relations()
            .iter()
            .map(|&(i, j)| format!("{} < {}", plan.measures[i], plan.measures[j]))
            .collect();
        lines.push(format!("H_r: {}", rel.join(", ")));
    }
    lines.push(format!("target: BF_{}", plan.target.symbol()));
    lines.push(format!(
        "monte carlo: seed {}, {} prior / {} posterior draws",
        plan.mc.seed, plan.mc.prior_samples, plan.mc.posterior_samples
    ));
    if !plan.exclusions.is_empty() {
        let rules: Vec<String> = plan.exclusions.iter().map(ToString::to_string).collect();
        lines.push(format!("exclusions: {}", rules.join(", ")));
    }
    lines.join("\n") + "\n"
}

fn oracle_check(args: &OracleArgs, g: &GlobalOpts) -> CliResult {
    let (shapes, relations, expected, seed, samples) = match &args.config {
        Some(path) => {
            let cfg: OracleConfig = toml::from_str(&read(path)?)
                .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
            (
                cfg.shapes,
                cfg.relations,
                args.expected.or(cfg.expected),
                g.seed.or(cfg.seed),
                g.samples.or(cfg.samples),
            )
        }
        None => (
            args.shape.clone(),
            args.relation.clone(),
            args.expected,
            g.seed,
            g.samples,
        ),
    };
    let seed = seed.unwrap_or(0);
    let samples = samples.unwrap_or(encompass::engine::DEFAULT_SAMPLES);
    let k = shapes.len();
    if k == 0 {
        return Err(Failure::new(EXIT_USAGE, "at least one --shape is required"));
    }
    if k > 3 {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("oracle-check supports at most 3 coordinates, got {k}; no exact oracle exists beyond K = 3"),
        ));
    }
    if samples == 0 {
        return Err(Failure::new(EXIT_USAGE, "--samples must be at least 1"));
    }
    if let Some(p) = expected {
        if !(0.0..=1.0).contains(&p) {
            return Err(Failure::new(
                EXIT_USAGE,
                format!("expected value must be a probability, got {p}"),
            ));
        }
    }
    let params: Vec<BetaParams> = shapes
        .iter()
        .map(|&(a, b)| BetaParams::new(a, b))
        .collect::<Result<_, _>>()?;
    let cs = ConstraintSet::new(k, relations)?;

    let (oracle, oracle_kind, oracle_err) = match cs.relations() {
        &[(lo, hi)] if k == 2 => (
            exact_pairwise_order_prob(params[lo], params[hi])?,
            "exact pairwise quadrature".to_string(),
            0.0,
        ),
        _ => {
            let res = if k == 3 { GRID_RESOLUTION_K3 } else { GRID_RESOLUTION_K2 };
            (
                grid_order_prob(&params, &cs, res)?,
                format!("midpoint grid, resolution {res}"),
                1.0 / res as f64,
            )
        }
    };
    let mc = proportion_in_region(
        &params,
        &cs,
        samples,
        StreamKey::new(seed, PRIOR_STREAM_BASE),
        DEFAULT_CHUNK_SIZE,
    )?;
    let estimate = mc.proportion();
    let reference = expected.unwrap_or(oracle);
    let se = (reference * (1.0 - reference) / samples as f64).sqrt();
    // A supplied expected value is taken as exact; the grid oracle carries
    // its own discretisation error.
    let allowance = if expected.is_some() { 0.0 } else { oracle_err };
    let threshold = 3.0 * se + allowance;
    let diff = (estimate - reference).abs();
    let pass = diff <= threshold;

    let relation_text = if cs.relations().is_empty() {
        "none".to_string()
    } else {
        cs.relations()
            .iter()
            .map(|(i, j)| format!("theta[{i}] < theta[{j}]"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let summary = [
        format!(
            "shapes:      {}",
            params.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        ),
        format!("relations:   {relation_text}"),
        format!(
            "mc estimate: {estimate:.6} ({} of {samples} draws, seed {seed})",
            mc.count
        ),
        format!("oracle:      {oracle:.6} ({oracle_kind})"),
        match expected {
            Some(p) => format!("expected:    {p:.6} (user supplied, used as reference)"),
            None => "expected:    oracle".to_string(),
        },
        format!("se:          {se:.3e}"),
        format!("|diff|:      {diff:.3e} (threshold {threshold:.3e})"),
        format!("verdict:     {}", if pass { "PASS" } else { "FAIL" }),
    ]
    .join("\n")
        + "\n";
    if let Some(path) = &g.output {
        write(path, &summary)?;
    }
    if !g.quiet {
        print!("{summary}");
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_COMPUTATION,
            format!(
                "Monte Carlo estimate {estimate:.6} disagrees with reference {reference:.6} beyond {threshold:.3e}"
            ),
        ))
    }
}
