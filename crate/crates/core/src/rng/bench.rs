use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use super::{dirichlet_sample, gamma_sample, DeviateBuffer, GammaParams, Stream, DEFAULT_CAPACITY};
use crate::{Error, Result};

/// Topic count used for the Dirichlet benchmark.
pub const DIRICHLET_BENCH_K: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngDist {
    Uniform,
    Normal,
    Gamma,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngBenchMode {
    /// Capacity-1 buffers: every deviate is its own generator call.
    OneAtATime,
    Batch,
}

impl fmt::Display for RngDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RngDist::Uniform => "uniform",
            RngDist::Normal => "normal",
            RngDist::Gamma => "gamma",
            RngDist::Dirichlet => "dirichlet",
        })
    }
}

impl FromStr for RngDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(RngDist::Uniform),
            "normal" => Ok(RngDist::Normal),
            "gamma" => Ok(RngDist::Gamma),
            "dirichlet" => Ok(RngDist::Dirichlet),
            other => Err(Error::InvalidArgument(format!("unknown distribution '{other}'"))),
        }
    }
}

impl fmt::Display for RngBenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RngBenchMode::OneAtATime => "one-at-a-time",
            RngBenchMode::Batch => "batch",
        })
    }
}

impl FromStr for RngBenchMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "one-at-a-time" | "oaat" | "single" => Ok(RngBenchMode::OneAtATime),
            "batch" => Ok(RngBenchMode::Batch),
            other => Err(Error::InvalidArgument(format!("unknown rng mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RngBenchRecord {
    pub dist: RngDist,
    pub mode: RngBenchMode,
    pub n: u64,
    pub cycles_per_sample: f64,
    pub waste_fraction: f64,
}

impl RngBenchRecord {
    pub const CSV_HEADER: &'static str = "dist,mode,n,cycles_per_sample,waste_fraction";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.4},{:.6}",
            self.dist, self.mode, self.n, self.cycles_per_sample, self.waste_fraction
        )
    }
}

/// Times `n` samples of `dist` (for Dirichlet, `n` Gamma samples grouped in
/// draws of [`DIRICHLET_BENCH_K`]) and converts to cycles with `clock_ghz`.
pub fn rng_bench(dist: RngDist, mode: RngBenchMode, n: u64, seed: u64, clock_ghz: f64) -> Result<RngBenchRecord> {
    if n == 0 || !(clock_ghz > 0.0) {
        return Err(Error::InvalidArgument("rng_bench needs n > 0 and a positive clock".into()));
    }
    let cap = match mode {
        RngBenchMode::OneAtATime => 1,
        RngBenchMode::Batch => DEFAULT_CAPACITY,
    };
    let stream = Stream::new(seed);
    let mut u = DeviateBuffer::new(super::DeviateKind::Uniform01, stream.split(0), cap);
    let mut z = DeviateBuffer::new(super::DeviateKind::StdNormal, stream.split(1), cap);

    let start = Instant::now();
    let mut acc = 0u64;
    match dist {
        RngDist::Uniform => {
            for _ in 0..n {
                acc ^= u.next().to_bits();
            }
        }
        RngDist::Normal => {
            for _ in 0..n {
                acc ^= z.next().to_bits();
            }
        }
        RngDist::Gamma => {
            let p = GammaParams::new(2.0, 3.0)?;
            for _ in 0..n {
                acc ^= gamma_sample(&p, &mut u, &mut z)?.to_bits();
            }
        }
        RngDist::Dirichlet => {
            // Jeffreys prior plus a fixed pseudo-count pattern, mixing the
            // shape < 1 and shape >= 1 paths.
            let alphas: Vec<f64> = (0..DIRICHLET_BENCH_K).map(|i| 0.5 + (i % 4) as f64).collect();
            let draws = n.div_ceil(DIRICHLET_BENCH_K as u64);
            for _ in 0..draws {
                acc ^= dirichlet_sample(&alphas, &mut u, &mut z)?[0].to_bits();
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    black_box(acc);

    let samples = match dist {
        RngDist::Dirichlet => n.div_ceil(DIRICHLET_BENCH_K as u64) * DIRICHLET_BENCH_K as u64,
        _ => n,
    };
    let generated = u.generated() + z.generated();
    let consumed = u.consumed() + z.consumed();
    let waste = if generated == 0 {
        0.0
    } else {
        (generated - consumed) as f64 / generated as f64
    };
    Ok(RngBenchRecord {
        dist,
        mode,
        n: samples,
        cycles_per_sample: (clock_ghz * 1e9 * secs / samples as f64).max(f64::MIN_POSITIVE),
        waste_fraction: waste,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_fields_complete_and_positive() {
        for dist in [RngDist::Uniform, RngDist::Normal, RngDist::Gamma, RngDist::Dirichlet] {
            for mode in [RngBenchMode::OneAtATime, RngBenchMode::Batch] {
                let r = rng_bench(dist, mode, 100_000, 1, 2.6).unwrap();
                assert!(r.cycles_per_sample > 0.0 && r.cycles_per_sample.is_finite());
                assert!((0.0..1.0).contains(&r.waste_fraction));
                assert_eq!(r.csv_row().split(',').count(), 5);
            }
        }
    }

    #[test]
    fn gamma_batch_waste_is_small() {
        let r = rng_bench(RngDist::Gamma, RngBenchMode::Batch, 200_000, 3, 2.6).unwrap();
        assert!(r.waste_fraction < 0.15, "{}", r.waste_fraction);
    }

    #[test]
    fn parse_names() {
        assert_eq!("Gamma".parse::<RngDist>().unwrap(), RngDist::Gamma);
        assert_eq!("batch".parse::<RngBenchMode>().unwrap(), RngBenchMode::Batch);
        assert!("cauchy".parse::<RngDist>().is_err());
    }
}
