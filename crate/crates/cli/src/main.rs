//! `groupies`: sample multipartite random graphs, count groupie vertices,
//! and compare the counts against exact enumeration, closed-form bounds,
//! and Monte Carlo experiments.
//!
//! All randomness flows from `--seed`; the same argv always produces
//! byte-identical output, regardless of `--threads`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use groupies_core::groupie::{
    degree_profile, groupie_report, report_csv, threshold_counts, Convention, GroupieReport,
    ThresholdCounts,
};
use groupies_core::model::{graph_from_str, graph_to_string, sample, PartitionSpec};
use groupies_core::montecarlo::{
    self, conditional_s_probe, probe_csv, probe_json, scaling_sweep, summary_json, sweep_csv,
    sweep_json, trials_csv, ExperimentConfig, ExperimentResult, ThresholdRule,
};
use groupies_core::oracle::{distribution_csv, distribution_text, exact_groupie_distribution};
use groupies_core::rng::Seed;
use groupies_core::theory::{
    self, concentration_window, expected_degree, heuristic_prediction, degree_laws,
    BinomialLaw,
};

#[derive(Parser)]
#[command(
    name = "groupies",
    version,
    about = "Groupie statistics of random multipartite graphs",
    long_about = "Samples k-partite random graphs with independent cross-part edges and \
                  analyzes groupie vertices: vertices whose squared degree exceeds the sum \
                  of their neighbors' degrees. Includes an exact enumeration oracle for \
                  small specs, closed-form tail bounds, and a deterministic Monte Carlo \
                  harness. Output is a pure function of the arguments; --threads only \
                  changes how fast you get it."
)]
struct Cli {
    /// Cap the worker-thread count (default: all cores). Never affects output bytes.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph and write it in multipartite-v1 format.
    Sample(SampleArgs),
    /// Count groupies in a graph file, or in a freshly sampled graph.
    Analyze(AnalyzeArgs),
    /// Exact distribution of groupie counts by exhaustive enumeration.
    Exact(ExactArgs),
    /// Closed-form table: expected degrees, predictions, degree laws, window.
    Theory(TheoryArgs),
    /// Monte Carlo campaign: sample many graphs, summarize groupie counts.
    Experiment(ExperimentArgs),
    /// Scaling study: one experiment per size, shared part fractions.
    Sweep(SweepArgs),
    /// Sample the degree and neighbor-degree-sum of one probe vertex.
    Probe(ProbeArgs),
}

/// Flags that define a partition spec. Exactly one of --parts/--fractions
/// and exactly one of --p/--probs must be given.
#[derive(Args)]
struct SpecArgs {
    /// Comma-separated part sizes, e.g. 300,300,300.
    #[arg(long, value_delimiter = ',', value_name = "SIZES")]
    parts: Option<Vec<usize>>,

    /// Part fractions (any positive weights); resolved to integer sizes
    /// summing to --n by largest-remainder rounding.
    #[arg(
        long,
        value_delimiter = ',',
        value_name = "WEIGHTS",
        requires = "n",
        conflicts_with = "parts"
    )]
    fractions: Option<Vec<f64>>,

    /// Total vertex count used with --fractions.
    #[arg(long, value_name = "N")]
    n: Option<usize>,

    /// Uniform cross-part edge probability in [0,1].
    #[arg(long, value_name = "P")]
    p: Option<f64>,

    /// CSV file with a symmetric k x k probability matrix; the diagonal
    /// must be zero (no intra-part edges).
    #[arg(long, value_name = "FILE", conflicts_with = "p")]
    probs: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Root seed; the same seed always reproduces the same graph.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (default: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Graph file to read; omit to sample inline from --parts/--p/--seed.
    #[arg(
        long = "in",
        value_name = "FILE",
        conflicts_with_all = ["parts", "fractions", "n", "p", "probs", "seed"]
    )]
    input: Option<PathBuf>,

    #[command(flatten)]
    spec: SpecArgs,

    /// Root seed for inline sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// strict: groupie iff d^2 > S; nonstrict: d^2 >= S.
    #[arg(long, default_value = "strict")]
    convention: Convention,

    /// Also count degrees above this threshold. A degree d counts as above
    /// exactly when d >= floor(UPPER)+1, i.e. d > UPPER as reals.
    #[arg(long, value_name = "UPPER", requires = "lower")]
    upper: Option<f64>,

    /// Degrees below this threshold: d counts when d <= ceil(LOWER)-1,
    /// i.e. d < LOWER as reals.
    #[arg(long, value_name = "LOWER", requires = "upper")]
    lower: Option<f64>,

    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value = "strict")]
    convention: Convention,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoryArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Window half-width multiplier omega (default: ln n).
    #[arg(long, value_name = "VALUE")]
    omega: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// How degree thresholds for exceedance counts are derived. Offsets are
/// coeff * sqrt(ln n) around the rule's center; see --rule.
#[derive(Args)]
struct RuleArgs {
    /// expected-degree: center = first part's expected degree;
    /// quarter-n: center = n/4; absolute: use --upper/--lower directly.
    #[arg(long, value_enum, default_value_t = RuleKind::ExpectedDegree)]
    rule: RuleKind,

    /// Offset coefficient c in center +- c*sqrt(ln n).
    #[arg(long, default_value_t = 50.0)]
    coeff: f64,

    /// Fixed upper threshold (absolute rule). d counts as above when
    /// d >= floor(UPPER)+1.
    #[arg(long, value_name = "UPPER", required_if_eq("rule", "absolute"))]
    upper: Option<f64>,

    /// Fixed lower threshold (absolute rule). d counts as below when
    /// d <= ceil(LOWER)-1.
    #[arg(long, value_name = "LOWER", required_if_eq("rule", "absolute"))]
    lower: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleKind {
    ExpectedDegree,
    QuarterN,
    Absolute,
}

impl RuleArgs {
    fn to_rule(&self) -> ThresholdRule {
        match self.rule {
            RuleKind::ExpectedDegree => ThresholdRule::ExpectedDegreeOffset { coeff: self.coeff },
            RuleKind::QuarterN => ThresholdRule::QuarterNOffset { coeff: self.coeff },
            RuleKind::Absolute => ThresholdRule::Absolute {
                upper: self.upper.expect("required by clap"),
                lower: self.lower.expect("required by clap"),
            },
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Trial count (default: 100000 when the spec is small enough for the
    /// exact oracle, 100 otherwise).
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "strict")]
    convention: Convention,
    /// Window half-width multiplier (default: ln n).
    #[arg(long, value_name = "VALUE")]
    omega: Option<f64>,
    #[command(flatten)]
    rule: RuleArgs,
    /// csv: per-trial counts; json: full summary; text: readable summary.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Part weights shared by every size (resolved per size by
    /// largest-remainder rounding).
    #[arg(long, value_delimiter = ',', value_name = "WEIGHTS", required = true)]
    fractions: Vec<f64>,
    /// Comma-separated total vertex counts, one experiment each.
    #[arg(long = "n-list", value_delimiter = ',', value_name = "NS", required = true)]
    n_list: Vec<usize>,
    /// Uniform cross-part edge probability.
    #[arg(long, value_name = "P")]
    p: Option<f64>,
    /// Probability-matrix CSV shared by every size.
    #[arg(long, value_name = "FILE", conflicts_with = "p")]
    probs: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "strict")]
    convention: Convention,
    #[command(flatten)]
    rule: RuleArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Part whose first vertex is probed.
    #[arg(long, default_value_t = 0)]
    part: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

enum CliError {
    /// Bad input: flags, spec values, or malformed files. Exit 2.
    Validation(String),
    /// Failure while doing otherwise-valid work (I/O). Exit 1.
    Runtime(String),
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Sample(args) => cmd_sample(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Exact(args) => cmd_exact(args),
        Command::Theory(args) => cmd_theory(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Probe(args) => cmd_probe(args),
    }
}

/// Largest-remainder rounding of positive weights to integer sizes
/// summing to n. Ties go to the lower part index.
fn largest_remainder(weights: &[f64], n: usize) -> Result<Vec<usize>, CliError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(CliError::Validation(
            "--fractions entries must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(CliError::Validation(
            "--fractions must have a positive sum".into(),
        ));
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for idx in 0..n - assigned {
        sizes[order[idx % weights.len()]] += 1;
    }
    Ok(sizes)
}

fn load_matrix(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut matrix = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| cell.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                CliError::Validation(format!(
                    "{}: line {}: expected comma-separated numbers",
                    path.display(),
                    lineno + 1
                ))
            })?;
        matrix.push(row);
    }
    for (i, row) in matrix.iter().enumerate() {
        if i < row.len() && row[i] != 0.0 {
            return Err(CliError::Validation(format!(
                "{}: diagonal entry ({i},{i}) must be 0, got {}",
                path.display(),
                row[i]
            )));
        }
    }
    Ok(matrix)
}

impl SpecArgs {
    fn sizes(&self) -> Result<Vec<usize>, CliError> {
        match (&self.parts, &self.fractions) {
            (Some(parts), None) => Ok(parts.clone()),
            (None, Some(fracs)) => largest_remainder(fracs, self.n.expect("clap requires --n")),
            _ => Err(CliError::Validation(
                "give the partition as either --parts or --fractions with --n".into(),
            )),
        }
    }

    fn build(&self) -> Result<PartitionSpec, CliError> {
        let sizes = self.sizes()?;
        match (self.p, &self.probs) {
            (Some(p), None) => PartitionSpec::uniform(sizes, p).map_err(validation),
            (None, Some(path)) => {
                let matrix = load_matrix(path)?;
                PartitionSpec::with_matrix(sizes, matrix).map_err(validation)
            }
            _ => Err(CliError::Validation(
                "give the edge probability as either --p or --probs".into(),
            )),
        }
    }
}

fn build_uniform_or_matrix(
    sizes: Vec<usize>,
    p: Option<f64>,
    probs: &Option<PathBuf>,
) -> Result<PartitionSpec, CliError> {
    match (p, probs) {
        (Some(p), None) => PartitionSpec::uniform(sizes, p).map_err(validation),
        (None, Some(path)) => {
            let matrix = load_matrix(path)?;
            PartitionSpec::with_matrix(sizes, matrix).map_err(validation)
        }
        _ => Err(CliError::Validation(
            "give the edge probability as either --p or --probs".into(),
        )),
    }
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Runtime(format!("stdout: {e}"))),
    }
}

/// `# key = value` provenance lines prepended to text and CSV output.
/// Execution knobs (--threads, --out, --format) are deliberately absent so
/// output bytes depend only on the statistical configuration.
fn comment_block(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (key, value) in pairs {
        let _ = writeln!(out, "# {key} = {value}");
    }
    out
}

fn spec_echo(spec: &PartitionSpec) -> Vec<(&'static str, String)> {
    let parts = spec
        .part_sizes()
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let mut pairs = vec![("parts", parts), ("n", spec.n().to_string())];
    match spec.uniform_p() {
        Some(p) => pairs.push(("p", format!("{p}"))),
        None => {
            let rows = (0..spec.k())
                .map(|i| {
                    (0..spec.k())
                        .map(|j| format!("{}", spec.prob(i, j)))
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect::<Vec<_>>()
                .join(";");
            pairs.push(("matrix", rows));
        }
    }
    pairs
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    let spec = args.spec.build()?;
    let graph = sample(&spec, Seed::new(args.seed));
    write_output(args.out.as_ref(), &graph_to_string(&graph))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let mut echo: Vec<(&'static str, String)> = vec![("command", "analyze".into())];
    let graph = match &args.input {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let graph = graph_from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            echo.push(("input", path.display().to_string()));
            let parts = graph
                .part_sizes()
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",");
            echo.push(("parts", parts));
            graph
        }
        None => {
            let spec = args.spec.build()?;
            echo.extend(spec_echo(&spec));
            echo.push(("seed", args.seed.to_string()));
            sample(&spec, Seed::new(args.seed))
        }
    };
    echo.push(("convention", args.convention.to_string()));

    let profile = degree_profile(&graph);
    let report = groupie_report(&graph, &profile, args.convention);
    let counts = match (args.upper, args.lower) {
        (Some(upper), Some(lower)) => {
            echo.push(("upper", format!("{upper}")));
            echo.push(("lower", format!("{lower}")));
            Some(threshold_counts(&graph, &profile, upper, lower).map_err(validation)?)
        }
        _ => None,
    };

    let content = match args.format {
        Format::Csv => format!(
            "{}{}",
            comment_block(&echo),
            report_csv(&report, counts.as_ref())
        ),
        Format::Text => {
            let mut out = comment_block(&echo);
            out.push_str(&report_text(&report, counts.as_ref()));
            out
        }
        Format::Json => {
            let mut value = report_value(&report, counts.as_ref());
            value["config"] = echo_value(&echo);
            pretty(&value)
        }
    };
    write_output(args.out.as_ref(), &content)
}

fn report_text(report: &GroupieReport, counts: Option<&ThresholdCounts>) -> String {
    let mut out = String::new();
    for (i, &size) in report.part_sizes.iter().enumerate() {
        let _ = write!(
            out,
            "part {i}: size {size}, groupies {}, fraction {:.6}",
            report.per_part[i],
            report.fraction(i)
        );
        if let Some(c) = counts {
            let _ = write!(out, ", above {}, below {}", c.above[i], c.below[i]);
        }
        out.push('\n');
    }
    let n: usize = report.part_sizes.iter().sum();
    let _ = writeln!(
        out,
        "total: size {n}, groupies {}, fraction {:.6}",
        report.total,
        report.total as f64 / n as f64
    );
    out
}

fn report_value(report: &GroupieReport, counts: Option<&ThresholdCounts>) -> Value {
    let parts: Vec<Value> = (0..report.part_sizes.len())
        .map(|i| {
            let mut v = json!({
                "part": i,
                "size": report.part_sizes[i],
                "groupies": report.per_part[i],
                "fraction": report.fraction(i),
            });
            if let Some(c) = counts {
                v["above"] = json!(c.above[i]);
                v["below"] = json!(c.below[i]);
            }
            v
        })
        .collect();
    let n: usize = report.part_sizes.iter().sum();
    let mut value = json!({
        "convention": report.convention.to_string(),
        "parts": parts,
        "total": { "size": n, "groupies": report.total, "fraction": report.total as f64 / n as f64 },
    });
    if let Some(c) = counts {
        value["thresholds"] = json!({ "upper": c.upper, "lower": c.lower });
    }
    value
}

fn echo_value(pairs: &[(&'static str, String)]) -> Value {
    let map: serde_json::Map<String, Value> = pairs
        .iter()
        .map(|(k, v)| ((*k).to_string(), Value::String(v.clone())))
        .collect();
    Value::Object(map)
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("valid json");
    s.push('\n');
    s
}

fn cmd_exact(args: ExactArgs) -> Result<(), CliError> {
    let spec = args.spec.build()?;
    let dist = exact_groupie_distribution(&spec, args.convention).map_err(validation)?;
    let mut echo: Vec<(&'static str, String)> = vec![("command", "exact".into())];
    echo.extend(spec_echo(&spec));
    echo.push(("convention", args.convention.to_string()));

    let content = match args.format {
        Format::Csv => format!("{}{}", comment_block(&echo), distribution_csv(&dist)),
        Format::Text => format!("{}{}", comment_block(&echo), distribution_text(&dist)),
        Format::Json => {
            let exact = dist.exact.as_ref().map(|e| {
                json!({
                    "N": e.n_dist.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                    "per_part": e.part_dists.iter().map(|d| {
                        d.iter().map(|r| r.to_string()).collect::<Vec<_>>()
                    }).collect::<Vec<_>>(),
                    "mean_N": e.mean_n().to_string(),
                    "var_N": e.var_n().to_string(),
                })
            });
            let value = json!({
                "config": echo_value(&echo),
                "pair_count": dist.pair_count,
                "configurations": dist.total_configs,
                "N": dist.n_dist,
                "per_part": dist.part_dists,
                "mean_N": dist.mean_n(),
                "var_N": dist.var_n(),
                "mean_per_part": (0..spec.k()).map(|i| dist.mean_part(i)).collect::<Vec<_>>(),
                "exact": exact,
            });
            pretty(&value)
        }
    };
    write_output(args.out.as_ref(), &content)
}

fn cmd_theory(args: TheoryArgs) -> Result<(), CliError> {
    let spec = args.spec.build()?;
    let omega = args.omega.unwrap_or_else(|| theory::default_omega(spec.n()));
    let mut echo: Vec<(&'static str, String)> = vec![("command", "theory".into())];
    echo.extend(spec_echo(&spec));
    echo.push(("omega", format!("{omega}")));

    let predictions = heuristic_prediction(&spec);
    let laws = degree_laws(&spec).ok();
    let model_laws: Option<Vec<BinomialLaw>> = spec.uniform_p().map(|p| {
        (0..spec.k())
            .map(|i| BinomialLaw {
                trials: (spec.n() - spec.part_size(i)) as u64,
                q: p,
            })
            .collect()
    });
    let window = concentration_window(&spec, omega).ok();

    let mut rows: Vec<(String, String)> = Vec::new();
    for p in &predictions {
        rows.push((format!("mu_{}", p.part + 1), format!("{:.6}", p.mu)));
        rows.push((format!("nu_{}", p.part + 1), format!("{:.6}", p.nu)));
        rows.push((
            format!("prediction_{}", p.part + 1),
            p.prediction.to_string(),
        ));
    }
    if let Some(ml) = &model_laws {
        for (i, law) in ml.iter().enumerate() {
            rows.push((format!("model_degree_law_{}", i + 1), law.to_string()));
        }
    }
    if let Some(l) = &laws {
        rows.push(("literal_degree_law_1".into(), l.literal.to_string()));
    }
    if let Some(w) = &window {
        rows.push(("window_center".into(), format!("{:.6}", w.center)));
        rows.push(("window_half_width".into(), format!("{:.6}", w.half_width)));
        rows.push(("window_lower".into(), format!("{:.6}", w.lower())));
        rows.push(("window_upper".into(), format!("{:.6}", w.upper())));
    }

    let content = match args.format {
        Format::Text => {
            let mut out = comment_block(&echo);
            for (k, v) in &rows {
                let _ = writeln!(out, "{k} = {v}");
            }
            out
        }
        Format::Csv => {
            let mut out = comment_block(&echo);
            out.push_str("key,value\n");
            for (k, v) in &rows {
                let _ = writeln!(out, "{k},{v}");
            }
            out
        }
        Format::Json => {
            let law_value = |law: &BinomialLaw| {
                json!({ "trials": law.trials, "q": law.q, "display": law.to_string() })
            };
            let value = json!({
                "config": echo_value(&echo),
                "omega": omega,
                "expected_degree": (0..spec.k())
                    .map(|i| expected_degree(&spec, i))
                    .collect::<Vec<_>>(),
                "heuristic": predictions.iter().map(|p| json!({
                    "part": p.part,
                    "mu": p.mu,
                    "nu": p.nu,
                    "prediction": p.prediction.to_string(),
                })).collect::<Vec<_>>(),
                "model_degree_laws": model_laws.as_ref().map(|ml| {
                    ml.iter().map(law_value).collect::<Vec<_>>()
                }),
                "literal_degree_law": laws.as_ref().map(|l| law_value(&l.literal)),
                "window": window.as_ref().map(|w| json!({
                    "center": w.center,
                    "half_width": w.half_width,
                    "lower": w.lower(),
                    "upper": w.upper(),
                })),
            });
            pretty(&value)
        }
    };
    write_output(args.out.as_ref(), &content)
}

fn default_trials(spec: &PartitionSpec) -> u64 {
    if spec.cross_pair_count() <= groupies_core::MAX_CROSS_PAIRS as u64 {
        100_000
    } else {
        100
    }
}

fn experiment_echo(config: &ExperimentConfig, result: &ExperimentResult) -> Vec<(&'static str, String)> {
    let mut echo: Vec<(&'static str, String)> = vec![("command", "experiment".into())];
    echo.extend(spec_echo(&config.spec));
    echo.push(("trials", config.trials.to_string()));
    echo.push(("seed", config.seed.root.to_string()));
    echo.push(("convention", config.convention.to_string()));
    echo.push(("omega", format!("{}", config.omega_value)));
    let rule = match config.threshold_rule {
        ThresholdRule::ExpectedDegreeOffset { coeff } => format!("expected-degree coeff {coeff}"),
        ThresholdRule::QuarterNOffset { coeff } => format!("quarter-n coeff {coeff}"),
        ThresholdRule::Absolute { upper, lower } => format!("absolute {upper}/{lower}"),
    };
    echo.push(("threshold_rule", rule));
    echo.push(("threshold_upper", format!("{}", result.thresholds.0)));
    echo.push(("threshold_lower", format!("{}", result.thresholds.1)));
    echo
}

fn experiment_text(result: &ExperimentResult) -> String {
    let mut out = String::new();
    let stat = |s: &montecarlo::SummaryStats| {
        let var = s
            .variance
            .map_or("n/a".to_string(), |v| format!("{v:.6}"));
        format!(
            "mean {:.6}, variance {var}, min {}, max {}",
            s.mean, s.min, s.max
        )
    };
    let _ = writeln!(out, "N: {}", stat(&result.n_summary));
    for (i, s) in result.part_summaries.iter().enumerate() {
        let ci = result.fraction_ci[i]
            .map_or("n/a".to_string(), |(lo, hi)| format!("[{lo:.6}, {hi:.6}]"));
        let _ = writeln!(
            out,
            "N_B{}: {}, fraction {:.6}, ci95 {}",
            i + 1,
            stat(s),
            result.fraction_means[i],
            ci
        );
    }
    for (i, s) in result.above_summaries.iter().enumerate() {
        let _ = writeln!(out, "above_B{}: {}", i + 1, stat(s));
    }
    for (i, s) in result.below_summaries.iter().enumerate() {
        let _ = writeln!(out, "below_B{}: {}", i + 1, stat(s));
    }
    match &result.literal_coverage {
        Some(c) => {
            let per = c
                .per_part
                .iter()
                .enumerate()
                .map(|(i, f)| format!("B{} {:.6}", i + 1, f))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(
                out,
                "literal window [{:.6}, {:.6}]: coverage {per}",
                c.window.lower(),
                c.window.upper()
            );
        }
        None => {
            let _ = writeln!(out, "literal window: n/a (needs exactly 3 parts)");
        }
    }
    for c in &result.empirical_coverage {
        let _ = writeln!(
            out,
            "empirical window B{} [{:.6}, {:.6}]: coverage {:.6}",
            c.part + 1,
            c.window.lower(),
            c.window.upper(),
            c.coverage
        );
    }
    for p in heuristic_prediction(&result.config.spec) {
        let _ = writeln!(
            out,
            "heuristic B{}: mu {:.6}, nu {:.6}, limit fraction {}",
            p.part + 1,
            p.mu,
            p.nu,
            p.prediction
        );
    }
    out
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let spec = args.spec.build()?;
    let trials = args.trials.unwrap_or_else(|| default_trials(&spec));
    if trials == 0 {
        return Err(CliError::Validation("--trials must be at least 1".into()));
    }
    let omega_value = args.omega.unwrap_or_else(|| theory::default_omega(spec.n()));
    let config = ExperimentConfig {
        spec,
        trials,
        seed: Seed::new(args.seed),
        convention: args.convention,
        omega_value,
        threshold_rule: args.rule.to_rule(),
    };
    let result = montecarlo::run(&config);
    let echo = experiment_echo(&config, &result);
    let content = match args.format {
        Format::Csv => format!("{}{}", comment_block(&echo), trials_csv(&result)),
        Format::Text => format!("{}{}", comment_block(&echo), experiment_text(&result)),
        Format::Json => pretty(&summary_json(&result)),
    };
    write_output(args.out.as_ref(), &content)
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.n_list.len() < 2 {
        return Err(CliError::Validation(
            "--n-list needs at least two sizes".into(),
        ));
    }
    if args.trials == 0 {
        return Err(CliError::Validation("--trials must be at least 1".into()));
    }
    let mut specs = Vec::with_capacity(args.n_list.len());
    for &n in &args.n_list {
        let sizes = largest_remainder(&args.fractions, n)?;
        specs.push(build_uniform_or_matrix(sizes, args.p, &args.probs)?);
    }
    let table = scaling_sweep(
        &specs,
        args.trials,
        Seed::new(args.seed),
        args.convention,
        args.rule.to_rule(),
    );

    let mut echo: Vec<(&'static str, String)> = vec![("command", "sweep".into())];
    let fracs = args
        .fractions
        .iter()
        .map(|f| format!("{f}"))
        .collect::<Vec<_>>()
        .join(",");
    echo.push(("fractions", fracs));
    let sizes = specs
        .iter()
        .map(|s| {
            s.part_sizes()
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join(";");
    echo.push(("resolved_parts", sizes));
    match specs[0].uniform_p() {
        Some(p) => echo.push(("p", format!("{p}"))),
        None => echo.push(("probs", args.probs.as_ref().unwrap().display().to_string())),
    }
    echo.push(("trials", args.trials.to_string()));
    echo.push(("seed", args.seed.to_string()));
    echo.push(("convention", args.convention.to_string()));
    let slope = table
        .var_slope
        .map_or("n/a".to_string(), |s| format!("{s:.6}"));
    echo.push(("var_slope", slope.clone()));

    let content = match args.format {
        Format::Csv => format!("{}{}", comment_block(&echo), sweep_csv(&table)),
        Format::Text => {
            let mut out = comment_block(&echo);
            for row in &table.rows {
                let _ = writeln!(
                    out,
                    "n {}: thresholds [{:.6}, {:.6}]",
                    row.n, row.thresholds.1, row.thresholds.0
                );
                for (i, s) in row.part_summaries.iter().enumerate() {
                    let var = s
                        .variance
                        .map_or("n/a".to_string(), |v| format!("{v:.6}"));
                    let avar = row.above_summaries[i]
                        .variance
                        .map_or("n/a".to_string(), |v| format!("{v:.6}"));
                    let _ = writeln!(
                        out,
                        "  B{}: mean {:.6}, variance {var}, fraction {:.6}, above mean {:.6}, above variance {avar}",
                        i + 1,
                        s.mean,
                        row.fraction_means[i],
                        row.above_summaries[i].mean
                    );
                }
            }
            let _ = writeln!(out, "var_slope = {slope}");
            out
        }
        Format::Json => {
            let mut value = sweep_json(&table);
            value["config"] = echo_value(&echo);
            pretty(&value)
        }
    };
    write_output(args.out.as_ref(), &content)
}

fn cmd_probe(args: ProbeArgs) -> Result<(), CliError> {
    let spec = args.spec.build()?;
    if args.part >= spec.k() {
        return Err(CliError::Validation(format!(
            "--part {} out of range for {} parts",
            args.part,
            spec.k()
        )));
    }
    if args.trials == 0 {
        return Err(CliError::Validation("--trials must be at least 1".into()));
    }
    let table = conditional_s_probe(&spec, args.part, args.trials, Seed::new(args.seed));
    let mut echo: Vec<(&'static str, String)> = vec![("command", "probe".into())];
    echo.extend(spec_echo(&spec));
    echo.push(("part", args.part.to_string()));
    echo.push(("probe_vertex", table.probe_vertex.to_string()));
    echo.push(("trials", args.trials.to_string()));
    echo.push(("seed", args.seed.to_string()));

    let content = match args.format {
        Format::Csv => format!("{}{}", comment_block(&echo), probe_csv(&table)),
        Format::Text => {
            let mut out = comment_block(&echo);
            for r in &table.rows {
                let exact = r
                    .exact_mean
                    .map_or("n/a".to_string(), |x| format!("{x:.6}"));
                let flag = if r.low_confidence { " (low confidence)" } else { "" };
                let _ = writeln!(
                    out,
                    "d {}: count {}, mean S {:.6}, formula {:.6}, exact {exact}{flag}",
                    r.d, r.count, r.mean_s, r.formula_mean
                );
            }
            out
        }
        Format::Json => {
            let mut value = probe_json(&table);
            value["config"] = echo_value(&echo);
            pretty(&value)
        }
    };
    write_output(args.out.as_ref(), &content)
}
