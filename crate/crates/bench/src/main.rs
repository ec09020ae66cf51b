use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use nsdp_core::problems::{Family, InstanceSpec, DEFAULT_ETA};
use nsdp_core::qsdp::InnerMethod;
use nsdp_core::sqsdp::HessianMode;
use nsdp_bench::runner::exit_code;
use nsdp_bench::table::sci;
use nsdp_bench::{aggregate, aggregate_csv, run, runs_csv, InstanceFile, RunConfig, RunOutput, RunResult, Solver};

#[derive(Parser)]
#[command(name = "nsdp-bench", version, about = "Generate NSDP test instances, run the solvers and tabulate results")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a seeded instance as JSON.
    Gen(GenArgs),
    /// Run one solver on one instance.
    Solve(SolveArgs),
    /// Run solvers over seeds and dimensions and print the aggregate table.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    P1,
    P2,
    P3,
    P4,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::P1 => Family::P1,
            FamilyArg::P2 => Family::P2,
            FamilyArg::P3 => Family::P3,
            FamilyArg::P4 => Family::P4,
        }
    }
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Problem size N.
    #[arg(long)]
    n: Option<usize>,
    /// Number of constraints M (p2 only).
    #[arg(long)]
    m: Option<usize>,
    /// Shift in X − ηI ⪰ O (p4 only).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, env = "NSDP_STAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Zeroed entry of α (p2 only, default last).
    #[arg(long)]
    alpha_zero_index: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnerArg {
    Newton,
    Bb,
}

#[derive(Clone, Copy, ValueEnum)]
enum HessianArg {
    Identity,
    Lagrangian,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON file with `{"sqsdp": {...}, "al": {...}}`; missing keys keep defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    phi0: Option<f64>,
    #[arg(long)]
    psi0: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Outer iteration cap of whichever solver runs.
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    r_tol: Option<f64>,
    #[arg(long, value_enum)]
    inner_method: Option<InnerArg>,
    #[arg(long, value_enum)]
    hessian: Option<HessianArg>,
    #[arg(long)]
    rho0: Option<f64>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        let s = &mut cfg.sqsdp;
        if let Some(v) = self.sigma0 {
            s.sigma0 = v;
        }
        if let Some(v) = self.gamma0 {
            s.gamma0 = v;
        }
        if let Some(v) = self.phi0 {
            s.phi0 = v;
        }
        if let Some(v) = self.psi0 {
            s.psi0 = v;
        }
        if let Some(v) = self.kappa {
            s.kappa = v;
            cfg.al.kappa = v;
        }
        if let Some(v) = self.k_max {
            s.k_max = v;
            cfg.al.k_max = v;
        }
        if let Some(v) = self.r_tol {
            s.r_tol = v;
            cfg.al.eps = v;
        }
        if let Some(v) = self.inner_method {
            s.inner_method = match v {
                InnerArg::Newton => InnerMethod::SemismoothNewton,
                InnerArg::Bb => InnerMethod::BarzilaiBorwein,
            };
        }
        if let Some(v) = self.hessian {
            s.hessian_mode = match v {
                HessianArg::Identity => HessianMode::Identity,
                HessianArg::Lagrangian => HessianMode::Lagrangian,
            };
        }
        if let Some(v) = self.rho0 {
            cfg.al.rho0 = v;
        }
        cfg.sqsdp.validate()?;
        cfg.al.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON written by `gen`; otherwise the family flags are used.
    #[arg(long, conflicts_with_all = ["family", "n", "m", "eta", "alpha_zero_index"])]
    instance: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value_t = Solver::Sqsdp)]
    solver: Solver,
    #[command(flatten)]
    config: ConfigArgs,
    /// RunResult JSON destination (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Per-iteration CSV destination.
    #[arg(long)]
    iter_csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Sizes, `N` or `NxM` for p2; comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<String>,
    /// Solver set, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', required = true, num_args = 1..)]
    solvers: Vec<Solver>,
    /// Number of seeds per size.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First seed.
    #[arg(long, env = "NSDP_STAB_SEED", default_value_t = 0)]
    seed_base: u64,
    #[arg(long)]
    eta: Option<f64>,
    /// Parallel runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    config: ConfigArgs,
    /// Aggregate CSV destination (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Per-run CSV destination.
    #[arg(long)]
    runs_csv: Option<PathBuf>,
    /// Directory for per-run JSON results and iteration CSVs.
    #[arg(long)]
    log_dir: Option<PathBuf>,
}

fn usage_error(kind: ErrorKind, msg: impl std::fmt::Display) -> ! {
    Cli::command().error(kind, msg).exit()
}

fn spec_from(args: &SpecArgs) -> InstanceSpec {
    let (Some(family), Some(n)) = (args.family, args.n) else {
        usage_error(
            ErrorKind::MissingRequiredArgument,
            "--family and --n are required (or --instance for solve)",
        );
    };
    let family = Family::from(family);
    if family == Family::P2 && args.m.is_none() {
        usage_error(ErrorKind::MissingRequiredArgument, "--m is required for family p2");
    }
    if family != Family::P2 && (args.m.is_some() || args.alpha_zero_index.is_some()) {
        usage_error(ErrorKind::ArgumentConflict, "--m and --alpha-zero-index apply to p2 only");
    }
    if family != Family::P4 && args.eta.is_some() {
        usage_error(ErrorKind::ArgumentConflict, "--eta applies to p4 only");
    }
    let spec = InstanceSpec {
        family,
        n,
        m: args.m,
        eta: (family == Family::P4).then(|| args.eta.unwrap_or(DEFAULT_ETA)),
        seed: args.seed,
        alpha_zero_index: args.alpha_zero_index,
    };
    if let Err(e) = spec.validate() {
        usage_error(ErrorKind::ValueValidation, e);
    }
    spec
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let spec = spec_from(&args.spec);
    let inst = InstanceFile::generate(&spec)?;
    let mut json = inst.to_json();
    json.push('\n');
    write_or_print(args.output.as_deref(), &json)?;
    let (n, m, d) = spec.dims();
    eprintln!("{} N={} n={n} m={m} d={d}", spec.family.as_str(), spec.n);
    Ok(0)
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let inst = match &args.instance {
        Some(path) => InstanceFile::read(path)?,
        None => InstanceFile::generate(&spec_from(&args.spec))?,
    };
    let cfg = args.config.build()?;
    let out = match run(&inst, args.solver, &cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: solver failed: {e:#}");
            return Ok(3);
        }
    };
    let mut json = serde_json::to_string_pretty(&out.result)?;
    json.push('\n');
    write_or_print(args.output.as_deref(), &json)?;
    if let Some(p) = &args.iter_csv {
        fs::write(p, &out.iteration_csv).with_context(|| format!("writing {}", p.display()))?;
    }
    eprintln!(
        "{} {}: {} after {} iterations, r = {}",
        inst.spec.family.as_str(),
        args.solver.as_str(),
        out.result.status.as_str(),
        out.result.iters,
        sci(out.result.final_r)
    );
    Ok(exit_code(out.result.status))
}

fn parse_dims(family: Family, text: &str) -> Result<(usize, Option<usize>)> {
    let parts: Vec<&str> = text.split('x').collect();
    let num = |s: &str| s.trim().parse::<usize>().with_context(|| format!("bad size `{text}`"));
    match (family, parts.as_slice()) {
        (Family::P2, [n, m]) => Ok((num(n)?, Some(num(m)?))),
        (Family::P2, _) => bail!("p2 sizes are written NxM, got `{text}`"),
        (_, [n]) => Ok((num(n)?, None)),
        _ => bail!("sizes are written N for {}, got `{text}`", family.as_str()),
    }
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    let family = Family::from(args.family);
    if args.jobs == 0 {
        usage_error(ErrorKind::ValueValidation, "--jobs must be at least 1");
    }
    if family != Family::P4 && args.eta.is_some() {
        usage_error(ErrorKind::ArgumentConflict, "--eta applies to p4 only");
    }
    let cfg = args.config.build()?;
    let mut tasks: Vec<(InstanceSpec, Solver)> = Vec::new();
    for dims in &args.dims {
        let (n, m) = parse_dims(family, dims).unwrap_or_else(|e| usage_error(ErrorKind::ValueValidation, e));
        for seed in args.seed_base..args.seed_base + args.seeds {
            let spec = InstanceSpec {
                family,
                n,
                m,
                eta: (family == Family::P4).then(|| args.eta.unwrap_or(DEFAULT_ETA)),
                seed,
                alpha_zero_index: None,
            };
            if let Err(e) = spec.validate() {
                usage_error(ErrorKind::ValueValidation, e);
            }
            for &solver in &args.solvers {
                tasks.push((spec.clone(), solver));
            }
        }
    }
    if let Some(dir) = &args.log_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let slots: Mutex<Vec<Option<Result<RunOutput>>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..args.jobs.min(tasks.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((spec, solver)) = tasks.get(i) else { break };
                let out = InstanceFile::generate(spec).and_then(|inst| run(&inst, *solver, &cfg));
                slots.lock().expect("no poisoned runs")[i] = Some(out);
            });
        }
    });

    let mut results: Vec<RunResult> = Vec::new();
    let mut error_rows = String::new();
    for ((spec, solver), slot) in tasks.iter().zip(slots.into_inner().expect("no poisoned runs")) {
        let stem = format!(
            "{}_N{}{}_seed{}_{}",
            spec.family.as_str(),
            spec.n,
            spec.m.map_or(String::new(), |m| format!("_M{m}")),
            spec.seed,
            solver.as_str()
        );
        match slot.expect("every task ran") {
            Ok(out) => {
                if let Some(dir) = &args.log_dir {
                    fs::write(dir.join(format!("{stem}.csv")), &out.iteration_csv)?;
                    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&out.result)?)?;
                }
                results.push(out.result);
            }
            Err(e) => {
                eprintln!("{stem}: {e:#}");
                error_rows.push_str(&format!(
                    "{},{},{},{},{},Error,,,,,,,,\n",
                    spec.family.as_str(),
                    spec.n,
                    spec.m.map_or(String::new(), |m| m.to_string()),
                    spec.seed,
                    solver.as_str()
                ));
            }
        }
    }
    let rows = aggregate(&results);
    write_or_print(args.output.as_deref(), &aggregate_csv(&rows))?;
    if let Some(p) = &args.runs_csv {
        let mut text = runs_csv(&results);
        text.push_str(&error_rows);
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
