//! `lpbox` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use lpbox::io;
use lpbox::oracle::{brute_force_l1, DEFAULT_ENUMERATION_LIMIT};
use lpbox::problems::{
    build_clustering, build_matching, build_mrf, clustering_params, decode_solution, kmeans,
    spectral_matching, ProblemKind,
};
use lpbox::suite::{records_csv, run_suite, summary_table, SuiteConfig, SuiteKind};
use lpbox::synth::{
    gaussian_blobs, point_matching, random_bqp, rng_for, segmentation_mrf, tv_chain,
};
use lpbox::{
    brute_force_bqp, brute_force_clustering, brute_force_matching, brute_force_mrf, solve_bqp,
    solve_l1, AdmmParams, OracleResult, SolveResult,
};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

mod error;

use error::CliError;

const EXIT_ERROR: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "lpbox", version, about = "Binary programs by box/sphere ADMM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a constrained BQP stored as A.mtx, b.txt and optional constraint files.
    SolveBqp(SolveArgs),
    /// Solve a BQP with an added λ‖Cx‖₁ term (C.mtx, lambda in the manifest).
    SolveL1(SolveArgs),
    /// Minimize a Potts MRF energy (meta, W.mtx, unary.txt).
    SolveMrf(SolveArgs),
    /// Maximize a graph matching score (meta, M.mtx).
    SolveMatching(SolveArgs),
    /// Balanced clustering (meta with features.csv or W.mtx).
    SolveClustering(SolveArgs),
    /// Exact optimum by enumeration.
    Oracle(OracleArgs),
    /// Run the seeded synthetic suites and print a summary table.
    Bench(BenchArgs),
    /// Write a synthetic instance in the input format of the matching solve command.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Initial value of every penalty ρ.
    #[arg(long)]
    rho: Option<f64>,
    /// Per-iteration penalty growth factor.
    #[arg(long)]
    mu: Option<f64>,
    /// Penalty ceiling.
    #[arg(long)]
    rho_max: Option<f64>,
    /// Dual step size in (0, 1].
    #[arg(long)]
    gamma: Option<f64>,
    /// Residual threshold, scaled by √n.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Iteration at which y2 stops updating, or `none`.
    #[arg(long, value_parser = parse_freeze)]
    freeze_y2: Option<Freeze>,
    /// Relative residual target of the inner conjugate gradient solve.
    #[arg(long)]
    pcg_tol: Option<f64>,
}

#[derive(Clone, Copy)]
struct Freeze(Option<usize>);

fn parse_freeze(s: &str) -> Result<Freeze, String> {
    if s == "none" {
        return Ok(Freeze(None));
    }
    s.parse()
        .map(|k| Freeze(Some(k)))
        .map_err(|_| format!("expected an iteration count or `none`, got `{s}`"))
}

impl ParamArgs {
    fn apply(&self, base: AdmmParams) -> AdmmParams {
        let mut p = match self.max_iter {
            Some(m) => AdmmParams {
                rho_init: base.rho_init,
                ..AdmmParams::with_max_iterations(m)
            },
            None => base,
        };
        if let Some(r) = self.rho {
            p.rho_init = [r; 4];
        }
        if let Some(v) = self.mu {
            p.mu = v;
        }
        if let Some(v) = self.rho_max {
            p.rho_max = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.tol {
            p.stop_tol = v;
        }
        if let Some(Freeze(v)) = self.freeze_y2 {
            p.y2_freeze_at = v;
        }
        if let Some(v) = self.pcg_tol {
            p.pcg_tol = v;
        }
        p
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem directory.
    input: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Seed for the initial point.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial point, one value per line; overrides the seeded initialization.
    #[arg(long)]
    x0: Option<PathBuf>,
    /// Output directory for result.json and trace.csv; without it the result goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-iteration trace to trace.csv (requires --out).
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Bqp,
    L1,
    Mrf,
    Matching,
    Clustering,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(value_enum)]
    problem: ProblemArg,
    input: PathBuf,
    /// Output directory for oracle.json; without it the result goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Suites to run; all by default.
    #[arg(long = "suite", value_parser = parse_suite)]
    suites: Vec<SuiteKind>,
    /// Instances per suite; each suite's default otherwise.
    #[arg(long)]
    instances: Option<usize>,
    /// Directory for bench.csv with one row per instance.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add wall times to the table and CSV, which makes output run-dependent.
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    params: ParamArgs,
}

fn parse_suite(s: &str) -> Result<SuiteKind, String> {
    SuiteKind::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = SuiteKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown suite `{s}`; expected one of {}", names.join(", "))
    })
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    problem: ProblemArg,
    /// Variables for bqp and l1, grid side for mrf, points for matching and clustering.
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::SolveBqp(a) => solve(&a, "solve-bqp", load_bqp),
        Command::SolveL1(a) => solve(&a, "solve-l1", load_l1),
        Command::SolveMrf(a) => solve(&a, "solve-mrf", load_mrf),
        Command::SolveMatching(a) => solve(&a, "solve-matching", load_matching),
        Command::SolveClustering(a) => solve(&a, "solve-clustering", load_clustering),
        Command::Oracle(a) => oracle(&a),
        Command::Bench(a) => bench(&a),
        Command::Generate(a) => generate(&a),
    }
}

type SolveFn = Box<dyn FnOnce(&AdmmParams, &[f64]) -> lpbox::Result<SolveResult>>;

/// A loaded problem ready to solve from a given initial point.
struct Loaded {
    dim: usize,
    base_params: AdmmParams,
    /// Seeded initial point used when `--x0` is absent.
    init: Box<dyn FnOnce(u64) -> Vec<f64>>,
    solve: SolveFn,
    kind: Option<ProblemKind>,
    /// Maps the solver's objective to the problem's natural units.
    natural: Box<dyn Fn(&SolveResult) -> f64>,
}

fn init_rng(seed: u64) -> impl Rng {
    rng_for(seed, "cli-init", 0)
}

fn uniform_init(n: usize) -> Box<dyn FnOnce(u64) -> Vec<f64>> {
    Box::new(move |seed| {
        let mut rng = init_rng(seed);
        (0..n).map(|_| rng.random()).collect()
    })
}

fn load_bqp(dir: &Path) -> Result<Loaded, CliError> {
    let p = io::load_bqp(dir)?;
    info!(
        "loaded BQP with n = {}, {} equalities, {} inequalities",
        p.dim(),
        p.n_equalities(),
        p.n_inequalities()
    );
    let n = p.dim();
    Ok(Loaded {
        dim: n,
        base_params: AdmmParams::default(),
        init: uniform_init(n),
        solve: Box::new(move |params, x0| solve_bqp(&p, params, x0)),
        kind: None,
        natural: Box::new(|r| r.objective),
    })
}

fn load_l1(dir: &Path) -> Result<Loaded, CliError> {
    let p = io::load_l1(dir)?;
    info!(
        "loaded ℓ1 problem with n = {}, λ = {}",
        p.base.dim(),
        p.lambda
    );
    let n = p.base.dim();
    Ok(Loaded {
        dim: n,
        base_params: AdmmParams::default(),
        init: uniform_init(n),
        solve: Box::new(move |params, x0| solve_l1(&p, params, x0)),
        kind: None,
        natural: Box::new(|r| r.objective),
    })
}

fn load_mrf(dir: &Path) -> Result<Loaded, CliError> {
    let inst = io::load_mrf(dir)?;
    let p = build_mrf(&inst)?;
    info!(
        "loaded MRF with {} nodes and {} states",
        inst.n_nodes, inst.n_states
    );
    let kind = ProblemKind::Mrf {
        n_nodes: inst.n_nodes,
        n_states: inst.n_states,
    };
    let init_inst = inst.clone();
    Ok(Loaded {
        dim: p.dim(),
        base_params: AdmmParams::default(),
        // uniformly random labels
        init: Box::new(move |seed| {
            let mut rng = init_rng(seed);
            let labels: Vec<usize> = (0..init_inst.n_nodes)
                .map(|_| rng.random_range(0..init_inst.n_states))
                .collect();
            init_inst.encode(&labels)
        }),
        solve: Box::new(move |params, x0| solve_bqp(&p, params, x0)),
        kind: Some(kind),
        natural: Box::new(|r| r.objective),
    })
}

fn load_matching(dir: &Path) -> Result<Loaded, CliError> {
    let inst = io::load_matching(dir)?;
    let p = build_matching(&inst)?;
    info!("loaded matching of {} to {} points", inst.n1, inst.n2);
    let kind = ProblemKind::Matching {
        n1: inst.n1,
        n2: inst.n2,
    };
    let init_inst = inst.clone();
    Ok(Loaded {
        dim: p.dim(),
        base_params: AdmmParams::default(),
        // spectral matching, which needs no randomness
        init: Box::new(move |_| init_inst.encode(&spectral_matching(&init_inst, 100))),
        solve: Box::new(move |params, x0| solve_bqp(&p, params, x0)),
        kind: Some(kind),
        natural: Box::new(move |r| inst.score(&r.x_f64())),
    })
}

fn load_clustering(dir: &Path) -> Result<Loaded, CliError> {
    let inst = io::load_clustering(dir)?;
    let p = build_clustering(&inst)?;
    info!(
        "loaded clustering of {} points into {} clusters",
        inst.n, inst.k
    );
    let kind = ProblemKind::Clustering {
        n: inst.n,
        k: inst.k,
    };
    let init_inst = inst.clone();
    Ok(Loaded {
        dim: p.dim(),
        base_params: clustering_params(),
        // K-means on features, otherwise a random equal-size labeling
        init: Box::new(move |seed| {
            let mut rng = init_rng(seed);
            let labels = match &init_inst.features {
                Some(f) => kmeans(f, init_inst.k, 100, &mut rng),
                None => {
                    let size = init_inst.cluster_size();
                    let mut l: Vec<usize> = (0..init_inst.n).map(|i| i / size).collect();
                    l.shuffle(&mut rng);
                    l
                }
            };
            init_inst.encode(&labels)
        }),
        solve: Box::new(move |params, x0| solve_bqp(&p, params, x0)),
        kind: Some(kind),
        natural: Box::new(|r| r.objective),
    })
}

fn write_or_print(
    out: Option<&Path>,
    file: &str,
    value: &serde_json::Value,
) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let path = dir.join(file);
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(
    args: &SolveArgs,
    command: &str,
    load: fn(&Path) -> Result<Loaded, CliError>,
) -> Result<ExitCode, CliError> {
    if args.trace && args.out.is_none() {
        return Err(CliError::Usage("--trace requires --out".into()));
    }
    let loaded = load(&args.input)?;
    let params = args.params.apply(loaded.base_params.clone());
    let x0 = match &args.x0 {
        Some(path) => io::read_vector(path, loaded.dim)?,
        None => (loaded.init)(args.seed),
    };
    let start = Instant::now();
    let result = (loaded.solve)(&params, &x0)?;
    let wall = start.elapsed().as_secs_f64();
    let solution = loaded.kind.and_then(|k| decode_solution(k, &result.x).ok());
    let value = json!({
        "command": command,
        "status": result.status.as_str(),
        "objective": (loaded.natural)(&result),
        "binariness": result.binariness,
        "eq_residual": result.eq_residual,
        "ineq_residual": result.ineq_residual,
        "feasible": result.feasible,
        "iterations": result.iterations,
        "wall_time_s": wall,
        "seed": args.seed,
        "params": params,
        "x": result.x,
        "solution": solution,
    });
    write_or_print(args.out.as_deref(), "result.json", &value)?;
    if args.trace {
        let dir = args.out.as_deref().expect("checked above");
        let path = dir.join("trace.csv");
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        lpbox::admm::write_trace_csv(&result.trace, std::io::BufWriter::new(file))
            .map_err(|e| CliError::io(&path, e))?;
    }
    if result.converged() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("solver finished with status {}", result.status.as_str());
        Ok(ExitCode::from(EXIT_NOT_CONVERGED))
    }
}

fn oracle(args: &OracleArgs) -> Result<ExitCode, CliError> {
    const BIT_LIMIT: usize = 20;
    let result: OracleResult = match args.problem {
        ProblemArg::Bqp => {
            let p = io::load_bqp(&args.input)?;
            let mut r = brute_force_bqp(&p, BIT_LIMIT)?;
            r.best_objective = p.report.sign * r.best_objective + p.report.offset;
            r
        }
        ProblemArg::L1 => brute_force_l1(&io::load_l1(&args.input)?, BIT_LIMIT)?,
        ProblemArg::Mrf => brute_force_mrf(&io::load_mrf(&args.input)?, DEFAULT_ENUMERATION_LIMIT)?,
        ProblemArg::Matching => brute_force_matching(&io::load_matching(&args.input)?, 7)?,
        ProblemArg::Clustering => brute_force_clustering(
            &io::load_clustering(&args.input)?,
            DEFAULT_ENUMERATION_LIMIT,
        )?,
    };
    if result.is_empty() {
        return Err(CliError::EmptyFeasibleSet);
    }
    let value = json!({
        "best_objective": result.best_objective,
        "best_x": result.best_x,
        "n_feasible": result.n_feasible,
        "n_optima": result.all_optima.len(),
    });
    write_or_print(args.out.as_deref(), "oracle.json", &value)?;
    Ok(ExitCode::SUCCESS)
}

fn bench(args: &BenchArgs) -> Result<ExitCode, CliError> {
    let kinds = if args.suites.is_empty() {
        SuiteKind::ALL.to_vec()
    } else {
        args.suites.clone()
    };
    let mut reports = Vec::new();
    for kind in kinds {
        let mut config = SuiteConfig::new(kind, args.seed);
        config.params = args.params.apply(config.params);
        if let Some(n) = args.instances {
            config.instances = n;
        }
        info!(
            "running suite {} with {} instances",
            kind.name(),
            config.instances
        );
        reports.push(run_suite(kind, &config)?);
    }
    print!("{}", summary_table(&reports, args.timings));
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("bench.csv");
        fs::write(&path, records_csv(&reports, args.timings))
            .map_err(|e| CliError::io(&path, e))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn generate(args: &GenerateArgs) -> Result<ExitCode, CliError> {
    let mut rng = rng_for(args.seed, "cli-generate", 0);
    let n = args.size;
    let out = args.out.as_path();
    match args.problem {
        ProblemArg::Bqp => io::save_bqp(out, &random_bqp(&mut rng, n, 1, 1)?.problem)?,
        ProblemArg::L1 => io::save_l1(out, &tv_chain(&mut rng, n, 0.4, 0.5)?)?,
        ProblemArg::Mrf => io::save_mrf(out, &segmentation_mrf(&mut rng, n, n, 0.5)?)?,
        ProblemArg::Matching => {
            io::save_matching(out, &point_matching(&mut rng, n, 0.02, 0.15)?.0)?
        }
        ProblemArg::Clustering => {
            io::save_clustering(out, &gaussian_blobs(&mut rng, n, 2, 0.2, 0.1)?.0)?
        }
    }
    Ok(ExitCode::SUCCESS)
}
