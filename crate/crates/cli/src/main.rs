use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nugsdp::baseline::{baseline_cluster, SignatureKind};
use nugsdp::bench::{format_records, format_summary, run_benchmark, solve_dataset, BenchmarkConfig, Method};
use nugsdp::penalty::build_coefficient_matrices;
use nugsdp::rounding::{classification_error, cluster_from_c, ASSIGNMENT_HEADER};
use nugsdp::sdp::{maxkcut_sdp, parse_edge_list, retained_weight, NugSdpVariables, SolverConfig};
use nugsdp::signals::{generate_dataset, read_dataset, sigma_from_noise_level, write_dataset, Dataset};
use nugsdp::{Bandwidth, Error};

const OUTPUT_DIR_VAR: &str = "NUGSDP_OUTPUT_DIR";

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  1  an output file could not be written
  2  usage error, or an input file is missing or malformed
  3  the solver did not converge (outputs are still written)

Every flag can also be given in a --config file of `key = value` lines,
where `key` is the long flag name without dashes; `key = true` enables a
switch. Command-line flags take precedence. Default output files are placed
in $NUGSDP_OUTPUT_DIR when it is set, else in the working directory.";

#[derive(Parser, Debug)]
#[command(name = "nugsdp", version, about = "Simultaneous alignment and classification of signals on the circle", after_help = AFTER_HELP)]
struct Cli {
    /// Flat `key = value` file supplying default flag values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset of shifted, noisy prototype copies.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Solve the relaxation for a dataset, round, and score against its ground truth.
    #[command(args_override_self = true)]
    Solve(SolveArgs),
    /// Cluster a dataset by shift-invariant signatures.
    #[command(args_override_self = true)]
    Baseline(BaselineArgs),
    /// Sweep noise levels comparing the relaxation with signature clustering.
    #[command(args_override_self = true)]
    Benchmark(BenchmarkArgs),
    /// Solve the max-k-cut relaxation of a weighted graph and round it.
    #[command(args_override_self = true)]
    Maxkcut(MaxkcutArgs),
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Cap on inner ADMM iterations summed over all proximal steps.
    #[arg(long, default_value_t = 5000)]
    max_iterations: usize,
    /// Relative tolerance on residuals and objective change.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Initial ADMM penalty parameter.
    #[arg(long, default_value_t = 1.0)]
    penalty: f64,
    /// Keep the penalty parameter fixed.
    #[arg(long)]
    no_adapt: bool,
}

impl SolverArgs {
    fn config(&self, trace: Option<PathBuf>) -> SolverConfig {
        SolverConfig {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            penalty: self.penalty,
            adapt_penalty: !self.no_adapt,
            trace_path: trace,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Number of classes M.
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 15)]
    copies: usize,
    /// Bandwidth K (2K+1 Fourier coefficients per signal).
    #[arg(long, default_value_t = 5)]
    bandwidth: usize,
    /// Noise relative to prototype coefficient RMS; sigma = level / sqrt(2K+1).
    #[arg(long, default_value_t = 0.0, conflicts_with = "sigma")]
    noise_level: f64,
    /// Per-coefficient complex noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    dataset: PathBuf,
    /// Add the equal-class-size constraint.
    #[arg(long)]
    balanced: bool,
    /// Seed of the k-means rounding.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Report CSV destination.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-signal label and shift CSV.
    #[arg(long)]
    assignments: Option<PathBuf>,
    /// Solver trace CSV, one row per proximal step.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the coefficient matrices F̂^(k).
    #[arg(long)]
    dump_coefficients: Option<PathBuf>,
    /// Write the solved C and R_k.
    #[arg(long)]
    dump_variables: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    dataset: PathBuf,
    #[arg(long, default_value = "bispectrum")]
    signature: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-signal label CSV.
    #[arg(long)]
    assignments: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// `full` (copies 15, 20 trials) or `reduced` (copies 6, 10 trials);
    /// explicit --copies/--trials override it.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    copies: Option<usize>,
    #[arg(long)]
    bandwidth: Option<usize>,
    /// Comma-separated noise levels (see `generate --noise-level`).
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated subset of nug, bispectrum, autocorrelation.
    #[arg(long, value_delimiter = ',', default_value = "nug,bispectrum")]
    methods: Vec<String>,
    /// Drop the equal-class-size constraint from the relaxation.
    #[arg(long)]
    unbalanced: bool,
    /// Write 0 for wall_time so reruns are byte-identical.
    #[arg(long)]
    no_wall_time: bool,
    #[command(flatten)]
    solver: SolverArgs,
    /// Per-trial CSV destination.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Per-level summary CSV destination.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MaxkcutArgs {
    /// Edge list with one `i j w` line per edge, 0-indexed.
    graph: PathBuf,
    /// Number of clusters M.
    #[arg(long, default_value_t = 2)]
    classes: usize,
    /// Node count; defaults to one more than the largest index.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    balanced: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the solved Y.
    #[arg(long)]
    dump_y: Option<PathBuf>,
}

/// A failure mapped to its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    /// Library errors on inputs are usage errors, except failed writes.
    fn from_lib(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }

    fn input(e: Error) -> Self {
        Self { code: 2, message: e.to_string() }
    }
}

type CmdResult = Result<u8, Failure>;

fn default_output(name: &str) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if !dir.is_empty() => Path::new(&dir).join(name),
        _ => PathBuf::from(name),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

/// Arguments with the config file's flags inserted right after the
/// subcommand, so that later command-line flags override them.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, Failure> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or_else(|| Failure::usage("--config needs a file"))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::usage(format!("cannot read config {path}: {e}")))?;
    let mut injected = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::usage(format!("{path}:{}: expected `key = value`", lineno + 1)));
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        if key.is_empty() || key == "config" {
            return Err(Failure::usage(format!("{path}:{}: invalid key", lineno + 1)));
        }
        match value {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            _ => {
                injected.push(format!("--{key}"));
                injected.push(value.to_string());
            }
        }
    }
    // The subcommand is the first argument after the program name that is not a flag.
    let pos = rest.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 2);
    match pos {
        Some(p) => {
            rest.splice(p..p, injected);
            Ok(rest)
        }
        None => Err(Failure::usage("a subcommand is required")),
    }
}

fn load_dataset(path: &Path) -> Result<Dataset, Failure> {
    read_dataset(path).map_err(|e| Failure::input(e))
}

fn cmd_generate(a: &GenerateArgs) -> CmdResult {
    if a.copies == 0 {
        return Err(Failure::usage("--copies must be at least 1"));
    }
    let bw = Bandwidth(a.bandwidth);
    let sigma = a.sigma.unwrap_or_else(|| sigma_from_noise_level(a.noise_level, bw));
    let d = generate_dataset(a.classes, a.copies, bw, sigma, a.seed).map_err(Failure::from_lib)?;
    let path = a.output.clone().unwrap_or_else(|| default_output("dataset.txt"));
    write_dataset(&d, &path).map_err(Failure::from_lib)?;
    println!(
        "wrote {}: n={} M={} K={} sigma={} seed={}",
        path.display(),
        d.len(),
        d.num_classes,
        a.bandwidth,
        sigma,
        a.seed
    );
    Ok(0)
}

fn cmd_solve(a: &SolveArgs) -> CmdResult {
    let d = load_dataset(&a.dataset)?;
    if let Some(path) = &a.dump_coefficients {
        let coeffs = build_coefficient_matrices(&d).map_err(Failure::from_lib)?;
        write_file(path, &coeffs.format())?;
    }
    let config = a.solver.config(a.trace.clone());
    config.validate().map_err(Failure::from_lib)?;
    let run = solve_dataset(&d, a.balanced, &config, a.seed).map_err(Failure::from_lib)?;
    let report = &run.report;
    let csv = report.format_csv();
    let path = a.report.clone().unwrap_or_else(|| default_output("report.csv"));
    write_file(&path, &csv)?;
    if let Some(p) = &a.assignments {
        write_file(p, &report.format_assignments())?;
    }
    if let Some(p) = &a.dump_variables {
        write_file(p, &run.solution.variables.format())?;
    }
    print!("{csv}");
    let r = &run.solution.residuals;
    eprintln!(
        "iterations={} converged={} worst_violation={:.3e} primal={:.3e} dual={:.3e}",
        report.iterations,
        report.converged,
        r.worst(),
        r.primal,
        r.dual
    );
    Ok(if report.converged { 0 } else { 3 })
}

fn cmd_baseline(a: &BaselineArgs) -> CmdResult {
    let kind: SignatureKind = a.signature.parse().map_err(Failure::from_lib)?;
    let d = load_dataset(&a.dataset)?;
    let labels = baseline_cluster(&d, kind, d.num_classes, a.seed);
    let err = classification_error(&labels, &d.true_labels, d.num_classes).map_err(Failure::from_lib)?;
    if let Some(p) = &a.assignments {
        let mut out = String::from("index,label\n");
        for (i, l) in labels.iter().enumerate() {
            out.push_str(&format!("{i},{l}\n"));
        }
        write_file(p, &out)?;
    }
    println!("signature={kind} n={} M={} classification_error={err}", d.len(), d.num_classes);
    Ok(0)
}

fn benchmark_config(a: &BenchmarkArgs) -> Result<BenchmarkConfig, Failure> {
    let mut c = BenchmarkConfig::default();
    match a.preset.as_deref() {
        None | Some("full") => {}
        Some("reduced") => {
            c.copies_per_class = 6;
            c.trials = 10;
        }
        Some(other) => return Err(Failure::usage(format!("unknown preset `{other}` (expected full or reduced)"))),
    }
    if let Some(m) = a.classes {
        c.num_classes = m;
    }
    if let Some(x) = a.copies {
        c.copies_per_class = x;
    }
    if let Some(k) = a.bandwidth {
        c.bandwidth = Bandwidth(k);
    }
    if let Some(l) = &a.levels {
        c.noise_levels = l.clone();
    }
    if let Some(t) = a.trials {
        c.trials = t;
    }
    c.master_seed = a.seed;
    c.methods = a
        .methods
        .iter()
        .map(|m| m.trim().parse::<Method>())
        .collect::<Result<_, _>>()
        .map_err(Failure::from_lib)?;
    c.balanced = !a.unbalanced;
    c.record_wall_time = !a.no_wall_time;
    c.solver = a.solver.config(None);
    c.validate().map_err(Failure::from_lib)?;
    Ok(c)
}

fn cmd_benchmark(a: &BenchmarkArgs) -> CmdResult {
    let config = benchmark_config(a)?;
    let records = run_benchmark(&config).map_err(Failure::from_lib)?;
    let out = a.output.clone().unwrap_or_else(|| default_output("benchmark.csv"));
    let summary_path = a.summary.clone().unwrap_or_else(|| default_output("benchmark_summary.csv"));
    write_file(&out, &format_records(&config, &records))?;
    let summary = format_summary(&config, &records);
    write_file(&summary_path, &summary)?;
    print!("{summary}");
    Ok(0)
}

fn cmd_maxkcut(a: &MaxkcutArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.graph)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", a.graph.display())))?;
    let w = parse_edge_list(&text, a.nodes).map_err(|e| Failure::usage(format!("{}: {e}", a.graph.display())))?;
    let n = w.nrows();
    if a.classes > n {
        return Err(Failure::usage(format!("--classes {} exceeds the node count {n}", a.classes)));
    }
    let config = a.solver.config(a.trace.clone());
    let sol = maxkcut_sdp(&w, a.classes, a.balanced, &config).map_err(Failure::from_lib)?;
    if let Some(p) = &a.dump_y {
        let vars = NugSdpVariables { c: sol.y.clone(), r: Vec::new() };
        write_file(p, &vars.format())?;
    }
    let labels = cluster_from_c(&sol.y, a.classes, a.seed).map_err(Failure::from_lib)?;
    println!("{ASSIGNMENT_HEADER}");
    for (i, l) in labels.iter().enumerate() {
        println!("{i},{l},0");
    }
    println!(
        "retained_weight={} bound={} objective={} iterations={} converged={}",
        retained_weight(&w, &labels),
        sol.retained_weight_bound(&w, a.classes),
        sol.objective,
        sol.iterations,
        sol.converged
    );
    Ok(if sol.converged { 0 } else { 3 })
}

fn run() -> CmdResult {
    let args = expand_config(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return Ok(code);
        }
    };
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Maxkcut(a) => cmd_maxkcut(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
