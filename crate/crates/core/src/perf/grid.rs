use std::str::FromStr;
use std::time::Instant;

use super::{BenchRecord, HardwareDescriptor};
use crate::glm::{make_sharded, synthetic_random, Coefficients, ExecPlan, GlmEvaluator, Strategy};
use crate::rng::{DeviateBuffer, DeviateKind, Stream};
use crate::{Error, Result};

/// Axes and protocol of a benchmark grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub strategies: Vec<Strategy>,
    pub workers: Vec<usize>,
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    /// Only crossed with [`Strategy::PlfChunked`]; other strategies run once
    /// with one chunk.
    pub chunks: Vec<usize>,
    pub reps: usize,
    /// Timed evaluations per repetition.
    pub evals: usize,
    pub warmup: usize,
    pub gradient: bool,
    pub seed: u64,
    pub hw: HardwareDescriptor,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::Som, Strategy::Plf],
            workers: vec![1],
            ns: vec![1000],
            ks: vec![10],
            chunks: vec![1],
            reps: 5,
            evals: 10,
            warmup: 3,
            gradient: false,
            seed: 1,
            hw: HardwareDescriptor::default(),
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::InvalidArgument(format!("grid axis '{name}' is empty")))
            } else {
                Ok(())
            }
        };
        empty("strategies", self.strategies.len())?;
        empty("workers", self.workers.len())?;
        empty("n", self.ns.len())?;
        empty("k", self.ks.len())?;
        empty("chunks", self.chunks.len())?;
        if self.reps == 0 || self.evals == 0 {
            return Err(Error::InvalidArgument("reps and evals must be >= 1".into()));
        }
        self.hw.validate()
    }

    /// Cells in run order: strategy, workers, N, K, chunks.
    pub fn cells(&self) -> Vec<(Strategy, usize, usize, usize, usize)> {
        let mut out = Vec::new();
        for &s in &self.strategies {
            for &w in &self.workers {
                for &n in &self.ns {
                    for &k in &self.ks {
                        if s == Strategy::PlfChunked {
                            for &c in &self.chunks {
                                out.push((s, w, n, k, c));
                            }
                        } else {
                            out.push((s, w, n, k, 1));
                        }
                    }
                }
            }
        }
        out
    }
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<T>().map_err(|_| Error::Parse {
                line,
                column: 0,
                msg: format!("bad value '{v}' for '{key}'"),
            })
        })
        .collect()
}

fn parse_one<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| Error::Parse {
        line,
        column: 0,
        msg: format!("bad value '{value}' for '{key}'"),
    })
}

/// Parses `key = value` lines (`#` comments allowed) on top of `base`.
/// List axes take comma-separated values; hardware fields use their
/// struct names, e.g. `cpu_clock_ghz = 3.0`.
pub fn parse_grid_config(text: &str, base: GridConfig) -> Result<GridConfig> {
    let mut cfg = base;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            column: 1,
            msg: "expected 'key = value'".into(),
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        match key.as_str() {
            "strategies" | "strategy" => cfg.strategies = parse_list(line, &key, value)?,
            "workers" => cfg.workers = parse_list(line, &key, value)?,
            "n" | "rows" => cfg.ns = parse_list(line, &key, value)?,
            "k" | "cols" => cfg.ks = parse_list(line, &key, value)?,
            "chunks" | "n_chunks" => cfg.chunks = parse_list(line, &key, value)?,
            "reps" => cfg.reps = parse_one(line, &key, value)?,
            "evals" => cfg.evals = parse_one(line, &key, value)?,
            "warmup" => cfg.warmup = parse_one(line, &key, value)?,
            "gradient" => cfg.gradient = parse_one(line, &key, value)?,
            "seed" => cfg.seed = parse_one(line, &key, value)?,
            "cpu_clock_ghz" => cfg.hw.cpu_clock_ghz = parse_one(line, &key, value)?,
            "sockets" => cfg.hw.sockets = parse_one(line, &key, value)?,
            "cores_per_socket" => cfg.hw.cores_per_socket = parse_one(line, &key, value)?,
            "vector_bits" => cfg.hw.vector_bits = parse_one(line, &key, value)?,
            "flops_per_lane_per_clock" => cfg.hw.flops_per_lane_per_clock = parse_one(line, &key, value)?,
            "mem_channels_per_socket" => cfg.hw.mem_channels_per_socket = parse_one(line, &key, value)?,
            "bytes_per_channel_per_mem_clock" => cfg.hw.bytes_per_channel_per_mem_clock = parse_one(line, &key, value)?,
            "mem_clock_ghz" => cfg.hw.mem_clock_ghz = parse_one(line, &key, value)?,
            _ => {
                return Err(Error::Parse {
                    line,
                    column: 1,
                    msg: format!("unknown key '{key}'"),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_cell(
    cfg: &GridConfig,
    strategy: Strategy,
    workers: usize,
    data: &crate::glm::DesignMatrix,
    betas: &[Coefficients],
    n_chunks: usize,
) -> Result<BenchRecord> {
    let plan = ExecPlan::new(strategy, workers, n_chunks)?;
    let eval = GlmEvaluator::new(plan)?;
    let sharded = if strategy == Strategy::Sharded {
        Some(make_sharded(data, workers.min(data.n_rows()))?)
    } else {
        None
    };
    let one = |beta: &Coefficients| -> Result<f64> {
        match (&sharded, cfg.gradient) {
            (Some(sh), false) => eval.loglike_sharded(sh, beta),
            (Some(sh), true) => Ok(eval.loglike_grad_sharded(sh, beta)?.f),
            (None, false) => eval.loglike(data, beta),
            (None, true) => Ok(eval.loglike_grad(data, beta)?.f),
        }
    };
    let mut next = betas.iter().cycle();
    for _ in 0..cfg.warmup {
        std::hint::black_box(one(next.next().expect("cycle"))?);
    }
    let mut times = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let t = Instant::now();
        for _ in 0..cfg.evals {
            std::hint::black_box(one(next.next().expect("cycle"))?);
        }
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let label = if cfg.gradient {
        format!("{strategy}-grad")
    } else {
        strategy.to_string()
    };
    Ok(BenchRecord::from_timing(
        label,
        data.n_rows(),
        data.n_cols(),
        workers,
        n_chunks,
        times[times.len() / 2],
        cfg.evals as u64,
        &cfg.hw,
    ))
}

/// Runs every cell sequentially and reports the median repetition. A failing
/// cell yields a flagged record and the grid continues.
pub fn run_grid(cfg: &GridConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    let mut cache: Option<((usize, usize), crate::glm::DesignMatrix, Vec<Coefficients>)> = None;
    for (strategy, workers, n, k, chunks) in cfg.cells() {
        if cache.as_ref().map(|c| c.0) != Some((n, k)) {
            // Coefficients change on every evaluation; X stays fixed.
            let made = synthetic_random(n, k, cfg.seed).and_then(|(data, beta)| {
                let mut z = DeviateBuffer::new(DeviateKind::StdNormal, Stream::new(cfg.seed).split(0x6E1D), 4096);
                let betas = (0..16)
                    .map(|_| Coefficients::new(beta.iter().map(|b| b + 0.1 * z.next()).collect()))
                    .collect::<Result<Vec<_>>>()?;
                Ok((data, betas))
            });
            match made {
                Ok((d, b)) => cache = Some(((n, k), d, b)),
                Err(e) => {
                    cache = None;
                    out.push(BenchRecord::failed(strategy.name(), n, k, workers, chunks, e.to_string()));
                    continue;
                }
            }
        }
        let (_, data, betas) = cache.as_ref().expect("filled above");
        match run_cell(cfg, strategy, workers, data, betas, chunks) {
            Ok(r) => out.push(r),
            Err(e) => out.push(BenchRecord::failed(strategy.name(), n, k, workers, chunks, e.to_string())),
        }
    }
    Ok(out)
}
