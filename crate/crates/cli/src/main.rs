//! `mcmc-perf` command-line driver. Every command writes CSV (or PBM) and
//! is deterministic in its non-timing output for a given `--seed`.
//!
//! Exit codes: 0 success, 2 usage or input error, 1 internal error.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcmc_perf::exec::Pool;
use mcmc_perf::glm::{read_csv, synthetic_random, DesignMatrix, ExecPlan, Strategy};
use mcmc_perf::hb::{hb_benchmark, HbBenchConfig, MappingMode};
use mcmc_perf::ising::{denoise, read_pbm, write_pbm, DenoiseParams, PbmFormat};
use mcmc_perf::perf::{parse_grid_config, run_grid, write_records, write_roofline, GridConfig, HardwareDescriptor};
use mcmc_perf::rng::{rng_bench, RngBenchMode, RngBenchRecord, RngDist};
use mcmc_perf::sampler::{run_chain, ChainConfig, GaussianPrior};

#[derive(Parser)]
#[command(name = "mcmc-perf", version, about = "Parallel MCMC kernels: benchmarks, samplers and denoising")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time log-likelihood evaluation over a grid of strategies and sizes.
    Bench(BenchArgs),
    /// Sample a logistic regression posterior with coordinate-wise slice sampling.
    GlmSample(GlmSampleArgs),
    /// Time hierarchical-Bayes sweeps under coarse and fine mappings.
    HbBench(HbBenchArgs),
    /// Restore a noisy binary PBM image with an Ising model.
    IsingDenoise(DenoiseArgs),
    /// Time one-at-a-time against batch random deviate generation.
    RngBench(RngBenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Grid config file (`key = value` lines). Keys it sets override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Row counts.
    #[arg(long = "N", value_delimiter = ',')]
    n: Vec<usize>,
    /// Column counts. Required unless a config file is given.
    #[arg(long = "K", value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "som,plf")]
    strategies: Vec<Strategy>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    workers: Vec<usize>,
    /// Chunk counts, used by plf-chunked only.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    chunks: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Timed evaluations per repetition.
    #[arg(long, default_value_t = 10)]
    evals: usize,
    /// Time log-likelihood plus gradient instead of log-likelihood alone.
    #[arg(long)]
    gradient: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV; a `<out>.roofline.csv` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct GlmSampleArgs {
    /// CSV with columns x_1..x_K,y.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    data: Option<PathBuf>,
    /// Generate `N,K` synthetic data instead of reading a file.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    synthetic: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 100)]
    burnin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "plf")]
    strategy: Strategy,
    #[arg(long, default_value_t = 1)]
    chunks: usize,
    /// Prior standard deviation of every coefficient (prior mean 0).
    #[arg(long, default_value_t = 1.0)]
    prior_sd: f64,
    #[arg(long, value_enum, default_value = "on")]
    diff_update: Switch,
    /// Draws CSV, one row per kept iteration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HbBenchArgs {
    #[arg(long, default_value_t = 20)]
    groups: usize,
    #[arg(long = "K", default_value_t = 50)]
    k: usize,
    /// Mean rows per group.
    #[arg(long, value_delimiter = ',', default_value = "1000,5000,20000")]
    navg: Vec<usize>,
    /// Coordinate sweeps per group per iteration.
    #[arg(long, value_delimiter = ',', default_value = "1,10")]
    neval: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "coarse,fine")]
    modes: Vec<MappingMode>,
    #[arg(long, value_delimiter = ',', default_value = "4")]
    workers: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    sweeps: usize,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PbmKind {
    Plain,
    Raw,
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Coupling between neighboring pixels.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// Weight of the observed pixel.
    #[arg(long, default_value_t = 2.0)]
    bias: f64,
    #[arg(long, default_value_t = 100)]
    sweeps: usize,
    #[arg(long, default_value_t = 20)]
    burnin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep neighbor fields up to date on each flip instead of recomputing.
    #[arg(long)]
    diff_update: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Per-sweep flip-rate CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "plain")]
    format: PbmKind,
}

#[derive(Args)]
struct RngBenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "uniform,normal,gamma,dirichlet")]
    dist: Vec<RngDist>,
    #[arg(long, value_delimiter = ',', default_value = "one-at-a-time,batch")]
    mode: Vec<RngBenchMode>,
    /// Samples per measurement.
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Clock used to convert seconds into cycles.
    #[arg(long, default_value_t = 2.6)]
    clock_ghz: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure { code: 2, msg: msg.to_string() }
}

fn internal(msg: impl std::fmt::Display) -> Failure {
    Failure { code: 1, msg: msg.to_string() }
}

type CmdResult = Result<(), Failure>;

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| usage(format!("cannot create {}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let mut cfg = GridConfig {
        strategies: a.strategies,
        workers: a.workers,
        chunks: a.chunks,
        reps: a.reps,
        evals: a.evals,
        gradient: a.gradient,
        seed: a.seed,
        ..GridConfig::default()
    };
    if !a.n.is_empty() {
        cfg.ns = a.n;
    }
    match &a.config {
        Some(path) => {
            if !a.k.is_empty() {
                cfg.ks = a.k;
            }
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            cfg = parse_grid_config(&text, cfg).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        }
        None if a.k.is_empty() => return Err(usage("--K is required without --config")),
        None => cfg.ks = a.k,
    }
    cfg.validate().map_err(usage)?;

    let records = run_grid(&cfg).map_err(internal)?;
    let mut out = output(a.out.as_deref())?;
    write_records(&records, &mut out).map_err(internal)?;
    if let Some(path) = &a.out {
        let mut side = path.clone().into_os_string();
        side.push(".roofline.csv");
        write_roofline(&cfg.hw, &cfg.ks, create(Path::new(&side))?).map_err(internal)?;
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", records.len());
    }
    Ok(())
}

fn cmd_glm_sample(a: GlmSampleArgs) -> CmdResult {
    let data: DesignMatrix = match (&a.data, &a.synthetic) {
        (Some(path), _) => read_csv(open(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        (None, Some(dims)) => {
            let [n, k] = dims[..] else {
                return Err(usage("--synthetic takes N,K"));
            };
            synthetic_random(n, k, a.seed).map_err(usage)?.0
        }
        (None, None) => return Err(usage("one of --data or --synthetic is required")),
    };
    let prior = GaussianPrior::isotropic(data.n_cols(), 0.0, a.prior_sd).map_err(usage)?;
    let mut cfg = ChainConfig::new(a.iters, a.burnin, a.seed);
    cfg.diff_update = a.diff_update == Switch::On;
    cfg.validate().map_err(usage)?;
    let plan = ExecPlan::new(a.strategy, a.workers, a.chunks).map_err(usage)?;

    let chain = run_chain(&data, &prior, &cfg, &plan).map_err(internal)?;
    if let Some(path) = &a.out {
        chain.write_csv(create(path)?).map_err(internal)?;
    }
    let means: Vec<String> = chain.posterior_mean().iter().map(|m| format!("{m:.6}")).collect();
    println!("posterior_mean,{}", means.join(","));
    eprintln!(
        "{} draws, {} posterior evaluations, {:.3} s",
        chain.draws.len(),
        chain.accept_evals,
        chain.wall_time
    );
    Ok(())
}

fn cmd_hb_bench(a: HbBenchArgs) -> CmdResult {
    let cfg = HbBenchConfig {
        m_groups: a.groups,
        k: a.k,
        navgs: a.navg,
        nevals: a.neval,
        modes: a.modes,
        workers: a.workers,
        sweeps: a.sweeps,
        reps: a.reps,
        seed: a.seed,
    };
    let records = hb_benchmark(&cfg, &HardwareDescriptor::default()).map_err(usage)?;
    write_records(&records, output(a.out.as_deref())?).map_err(internal)
}

fn cmd_ising_denoise(a: DenoiseArgs) -> CmdResult {
    let noisy = read_pbm(open(&a.input)?).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    let params = DenoiseParams {
        w: a.w,
        bias_scale: a.bias,
        sweeps: a.sweeps,
        burnin: a.burnin,
        seed: a.seed,
        diff_update: a.diff_update,
    };
    let pool = Pool::new(a.workers).map_err(usage)?;
    let res = denoise(&noisy, &params, &pool).map_err(usage)?;
    let format = match a.format {
        PbmKind::Plain => PbmFormat::Plain,
        PbmKind::Raw => PbmFormat::Raw,
    };
    write_pbm(create(&a.out)?, &res.image, format).map_err(internal)?;
    if let Some(path) = &a.trace {
        let mut t = create(path)?;
        let write = |t: &mut BufWriter<File>| -> io::Result<()> {
            writeln!(t, "sweep,flips,flip_rate")?;
            for (i, (f, r)) in res.flips.iter().zip(res.flip_rates()).enumerate() {
                writeln!(t, "{i},{f},{r:.6}")?;
            }
            t.flush()
        };
        write(&mut t).map_err(internal)?;
    }
    let changed = noisy.error_rate(&res.image).map_err(internal)?;
    eprintln!(
        "changed {:.2}% of pixels; post-burn-in flip rate {:.4}",
        100.0 * changed,
        res.post_burnin_flip_rate()
    );
    Ok(())
}

fn cmd_rng_bench(a: RngBenchArgs) -> CmdResult {
    let mut out = output(a.out.as_deref())?;
    let mut rows = vec![RngBenchRecord::CSV_HEADER.to_string()];
    for &dist in &a.dist {
        for &mode in &a.mode {
            let r = rng_bench(dist, mode, a.n, a.seed, a.clock_ghz).map_err(usage)?;
            rows.push(r.csv_row());
        }
    }
    writeln!(out, "{}", rows.join("\n")).and_then(|_| out.flush()).map_err(internal)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Bench(a) => cmd_bench(a),
        Command::GlmSample(a) => cmd_glm_sample(a),
        Command::HbBench(a) => cmd_hb_bench(a),
        Command::IsingDenoise(a) => cmd_ising_denoise(a),
        Command::RngBench(a) => cmd_rng_bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
