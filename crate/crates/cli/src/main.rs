use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qtsp::circuits::{schedule, Strategy};
use qtsp::encodings::instance::random_cost_matrix;
use qtsp::encodings::{encode, EncodedProblem, EncodingKind, EncodingSummary, PenaltyPolicy, TspInstance};
use qtsp::optimizer::{aggregate, restarts_at_level, run_experiment, OptimizerConfig, RunRecord};
use qtsp::resources::{self, c_alpha, Exactness, HoeffdingConvention, ResourceReport};
use qtsp::simulator::{build_diagonal, feasible_probability, StateVector};
use qtsp::polynomial::BinaryPolynomial;

const WORKERS_ENV: &str = "QTSP_WORKERS";

#[derive(Parser)]
#[command(name = "qtsp", version, about = "TSP encodings, circuit schedules and QAOA simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an encoding and print its summary as JSON.
    Encode {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Include the full Hamiltonian polynomial.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Schedule the objective Hamiltonian into commuting rounds.
    Schedule {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value = "gray-ancilla")]
        strategy: Strategy,
        /// Include every round and gate.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resource table over a list of N.
    Resources(ResourceArgs),
    /// Optimize one QAOA level from several random starts.
    Simulate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        opt: OptArgs,
        /// Number of QAOA levels.
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best feasible probability per level as CSV.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        opt: OptArgs,
        #[arg(long, default_value_t = 15)]
        rmax: usize,
        /// Random instances to aggregate (random W only).
        #[arg(long, default_value_t = 1)]
        instances: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightSource {
    Zero,
    Random,
    File,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Qubo,
    Hobo,
    Mixed,
    Enum,
}

impl From<Kind> for EncodingKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Qubo => EncodingKind::Qubo,
            Kind::Hobo => EncodingKind::Hobo,
            Kind::Mixed => EncodingKind::Mixed,
            Kind::Enum => EncodingKind::Enum,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Convention {
    #[value(name = "paper")]
    Linear,
    #[value(name = "standard")]
    Squared,
}

impl From<Convention> for HoeffdingConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Linear => HoeffdingConvention::Linear,
            Convention::Squared => HoeffdingConvention::Squared,
        }
    }
}

#[derive(Args, Clone)]
struct InstanceArgs {
    #[arg(long, value_enum, default_value = "zero")]
    w: WeightSource,
    /// Instance JSON, used with `--w file`.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: Option<usize>,
    /// Bits per bunch (mixed encoding only).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    fix_first_city: bool,
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Args, Clone)]
struct OptArgs {
    /// Accepted runs per level; defaults to 100 for W≡0 and 40 otherwise.
    #[arg(long, alias = "samples")]
    restarts: Option<usize>,
    /// Optimizer configuration JSON; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    trajectory_from: Option<usize>,
}

#[derive(Args)]
struct ResourceArgs {
    /// Comma-separated list of N.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    n: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "qubo,hobo,mixed,enum")]
    kinds: Vec<Kind>,
    /// Bits per bunch for mixed rows.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Exponents α for mixed rows, turned into K = ⌊α log₂N⌋.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long, value_enum, default_value = "standard")]
    hoeffding_convention: Convention,
    /// Additive estimation error.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Failure probability.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_instance(args: &InstanceArgs, n: Option<usize>, offset: u64) -> Result<(TspInstance, String)> {
    let need_n = || n.context("--n is required unless --w file is given");
    let (base, id) = match args.w {
        WeightSource::Zero => (TspInstance::zero(need_n()?)?, "zero".to_string()),
        WeightSource::Random => {
            let seed = args.seed.wrapping_add(offset);
            let w = random_cost_matrix(need_n()?, seed);
            (TspInstance::with_policy(w, 1.0, PenaltyPolicy::Safe)?, format!("seed{seed}"))
        }
        WeightSource::File => {
            let path = args.file.as_ref().context("--w file needs --file")?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let inst = TspInstance::from_json(&text)?;
            if let Some(n) = n {
                if n != inst.n {
                    bail!("--n {n} disagrees with the file's {} cities", inst.n);
                }
            }
            (inst, "file".to_string())
        }
    };
    if args.a1.is_none() && args.a2.is_none() && args.b.is_none() {
        return Ok((base, id));
    }
    let inst = TspInstance::new(
        base.w,
        args.a1.unwrap_or(base.a1),
        args.a2.unwrap_or(base.a2),
        args.b.unwrap_or(base.b),
    )?;
    Ok((inst, id))
}

fn build_problem(p: &ProblemArgs, offset: u64) -> Result<(EncodedProblem, String)> {
    let (inst, id) = build_instance(&p.instance, p.n, offset)?;
    let problem = encode(&inst, p.kind.into(), p.k, p.fix_first_city)?;
    Ok((problem, id))
}

fn optimizer_config(opt: &OptArgs, seed: u64, zero_w: bool) -> Result<OptimizerConfig> {
    let mut cfg = match &opt.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).context("parsing optimizer config")?
        }
        None => OptimizerConfig {
            restarts: if zero_w { 100 } else { 40 },
            seed,
            ..Default::default()
        },
    };
    if let Some(r) = opt.restarts {
        cfg.restarts = r;
    }
    if let Some(g) = opt.grad_tol {
        cfg.grad_tol = g;
    }
    if let Some(t) = opt.trajectory_from {
        cfg.trajectory_from = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

#[derive(Serialize)]
struct EncodeOutput {
    #[serde(flatten)]
    summary: EncodingSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    hamiltonian: Option<BinaryPolynomial>,
}

fn cmd_encode(problem: &ProblemArgs, full: bool, out: &Option<PathBuf>) -> Result<()> {
    let (p, _) = build_problem(problem, 0)?;
    let output = EncodeOutput {
        summary: p.summary()?,
        hamiltonian: if full { p.hamiltonian.clone() } else { None },
    };
    emit(out, &to_json(&output)?)
}

fn cmd_schedule(problem: &ProblemArgs, strategy: Strategy, full: bool, out: &Option<PathBuf>) -> Result<()> {
    let (p, _) = build_problem(problem, 0)?;
    let s = schedule(&p, strategy)?;
    if full {
        emit(out, &to_json(&s)?)
    } else {
        emit(out, &to_json(&s.summary())?)
    }
}

fn resource_rows(args: &ResourceArgs) -> Result<Vec<ResourceReport>> {
    if args.n.is_empty() {
        bail!("--n needs at least one value");
    }
    let mut rows = Vec::new();
    for &n in &args.n {
        let (inst, _) = build_instance(&args.instance, Some(n), 0)?;
        for &kind in &args.kinds {
            let kind: EncodingKind = kind.into();
            if kind != EncodingKind::Mixed {
                rows.push(resources::report(kind, n, None, Some(&inst), args.t, args.delta)?);
                continue;
            }
            let mut ks: Vec<usize> = args.k.clone();
            ks.extend(args.alpha.iter().map(|&a| c_alpha(a, n).0));
            if ks.is_empty() {
                ks.push(1);
            }
            ks.dedup();
            for k in ks {
                match resources::report(kind, n, Some(k), Some(&inst), args.t, args.delta) {
                    Ok(r) => rows.push(r),
                    // K outside 1..=⌈log₂N⌉ for this N.
                    Err(qtsp::Error::InvalidArgument(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    Ok(rows)
}

fn fmt_opt(v: Option<u64>, exponential: bool) -> String {
    match v {
        Some(x) => x.to_string(),
        None if exponential => "exponential".into(),
        None => "-".into(),
    }
}

fn resource_table(rows: &[ResourceReport], convention: HoeffdingConvention) -> String {
    let mut s = format!(
        "{:<6} {:>4} {:>3} {:>8} {:>8} {:>14} {:>6} {:>12} {:>12} {:>12} {:>12}\n",
        "kind", "N", "K", "logical", "ancilla", "terms", "flag", "depth_phase", "depth_cnot", "volume", "samples"
    );
    for r in rows {
        let expo = r.terms.exactness == Exactness::Exponential;
        let flag = match r.terms.exactness {
            Exactness::Exact => "exact",
            Exactness::Bound => "bound",
            Exactness::Exponential => "exp",
        };
        let samples = r.measurement.as_ref().map(|m| match convention {
            HoeffdingConvention::Linear => m.samples_linear,
            HoeffdingConvention::Squared => m.samples_squared,
        });
        s += &format!(
            "{:<6} {:>4} {:>3} {:>8} {:>8} {:>14} {:>6} {:>12} {:>12} {:>12} {:>12}\n",
            r.kind.as_str(),
            r.n,
            r.k.map_or("-".into(), |k| k.to_string()),
            r.qubits.logical,
            r.qubits.ancilla,
            fmt_opt(r.terms.value, expo),
            flag,
            fmt_opt(r.depth.phase_gate, expo),
            fmt_opt(r.depth.cnot_rotation, expo),
            fmt_opt(r.volume.phase_gate.or(r.volume.cnot_rotation), expo),
            fmt_opt(samples, false),
        );
        if let Some(m) = &r.mixed {
            s += &format!(
                "       alpha={:.4} C={:.4} terms~{:.1} depth~{:.1} qubits~{:.1}\n",
                m.alpha, m.c_alpha, m.terms, m.depth, m.qubits
            );
        }
    }
    s
}

fn cmd_resources(args: &ResourceArgs) -> Result<()> {
    let rows = resource_rows(args)?;
    if args.json {
        emit(&args.out, &to_json(&rows)?)
    } else {
        emit(&args.out, &resource_table(&rows, args.hoeffding_convention.into()))
    }
}

#[derive(Serialize)]
struct SimulateOutput {
    kind: EncodingKind,
    n: usize,
    r: usize,
    uniform_feasible_prob: f64,
    n_accepted: usize,
    best_energy: Option<RunRecord>,
    best_feasible: Option<RunRecord>,
}

fn period_for(cfg: &OptimizerConfig, p: &EncodedProblem) -> f64 {
    cfg.period.unwrap_or_else(|| p.objective_period())
}

fn cmd_simulate(problem: &ProblemArgs, opt: &OptArgs, r: usize, out: &Option<PathBuf>) -> Result<()> {
    if r == 0 {
        bail!("--r must be at least 1");
    }
    let (p, _) = build_problem(problem, 0)?;
    let cfg = optimizer_config(opt, problem.instance.seed, problem.instance.w == WeightSource::Zero)?;
    let h = build_diagonal(&p)?;
    let runs = restarts_at_level(&h, r, &cfg, period_for(&cfg, &p));
    let pick = |key: fn(&RunRecord) -> f64| {
        runs.iter()
            .min_by(|a, b| key(a).total_cmp(&key(b)))
            .cloned()
    };
    let output = SimulateOutput {
        kind: p.kind,
        n: p.instance.n,
        r,
        uniform_feasible_prob: feasible_probability(&StateVector::uniform(h.num_qubits), &h),
        n_accepted: runs.len(),
        best_energy: pick(|x| x.energy),
        best_feasible: pick(|x| -x.feasible_probability),
    };
    emit(out, &to_json(&output)?)
}

fn csv_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn cmd_sweep(problem: &ProblemArgs, opt: &OptArgs, rmax: usize, instances: usize, out: &Option<PathBuf>) -> Result<()> {
    if instances == 0 {
        bail!("--instances must be at least 1");
    }
    if instances > 1 && problem.instance.w != WeightSource::Random {
        bail!("--instances above 1 needs --w random");
    }
    let cfg = optimizer_config(opt, problem.instance.seed, problem.instance.w == WeightSource::Zero)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    if instances == 1 {
        let (p, id) = build_problem(problem, 0)?;
        let h = build_diagonal(&p)?;
        let res = run_experiment(&h, rmax, &cfg, period_for(&cfg, &p))?;
        wtr.write_record(["encoding", "N", "W_id", "r", "best_feasible_prob", "best_energy", "n_accepted"])?;
        for l in &res.levels {
            wtr.write_record([
                p.kind.as_str().to_string(),
                p.instance.n.to_string(),
                id.clone(),
                l.r.to_string(),
                csv_opt(l.best_feasible_prob),
                csv_opt(l.best_energy),
                l.n_accepted.to_string(),
            ])?;
        }
    } else {
        let mut results = Vec::with_capacity(instances);
        let mut kind = EncodingKind::from(problem.kind);
        let mut n = 0;
        for i in 0..instances {
            let (p, _) = build_problem(problem, i as u64)?;
            kind = p.kind;
            n = p.instance.n;
            let h = build_diagonal(&p)?;
            results.push(run_experiment(&h, rmax, &cfg, period_for(&cfg, &p))?);
        }
        wtr.write_record(["encoding", "N", "r", "mean_best_prob", "min_best_prob", "max_best_prob", "n_instances"])?;
        for a in aggregate(&results, rmax) {
            wtr.write_record([
                kind.as_str().to_string(),
                n.to_string(),
                a.r.to_string(),
                csv_opt(a.mean_best_prob),
                csv_opt(a.min_best_prob),
                csv_opt(a.max_best_prob),
                a.n_instances.to_string(),
            ])?;
        }
    }
    let bytes = wtr.into_inner().context("flushing CSV")?;
    emit(out, &String::from_utf8(bytes)?)
}

fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{WORKERS_ENV}={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_workers()?;
    match &cli.command {
        Command::Encode { problem, full, out } => cmd_encode(problem, *full, out),
        Command::Schedule { problem, strategy, full, out } => cmd_schedule(problem, *strategy, *full, out),
        Command::Resources(args) => cmd_resources(args),
        Command::Simulate { problem, opt, r, out } => cmd_simulate(problem, opt, *r, out),
        Command::Sweep { problem, opt, rmax, instances, out } => cmd_sweep(problem, opt, *rmax, *instances, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
