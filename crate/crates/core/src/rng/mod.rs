//! Deterministic batch random-number generation.
//!
//! Every deviate is a pure function of `(stream key, position)`, so a
//! [`DeviateBuffer`] of any capacity yields exactly the same consumed
//! sequence. Capacity only changes how often [`DeviateBuffer::refill`] runs.

mod bench;
mod buffer;
mod gamma;
mod stream;

pub use bench::{rng_bench, RngBenchMode, RngBenchRecord, RngDist, DIRICHLET_BENCH_K};
pub use buffer::{DeviateBuffer, DeviateKind, DEFAULT_CAPACITY};
pub use gamma::{dirichlet_sample, gamma_sample, GammaParams, MAX_REJECTIONS};
pub use stream::{mix64, Stream};

/// A uniform and a normal buffer drawn from two independent sub-streams of
/// one seed. This is the unit of RNG ownership handed to samplers.
#[derive(Debug, Clone)]
pub struct DeviatePair {
    pub uniform: DeviateBuffer,
    pub normal: DeviateBuffer,
}

impl DeviatePair {
    pub fn new(stream: Stream, capacity: usize) -> Self {
        Self {
            uniform: DeviateBuffer::new(DeviateKind::Uniform01, stream.split(0), capacity),
            normal: DeviateBuffer::new(DeviateKind::StdNormal, stream.split(1), capacity),
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(Stream::new(seed), DEFAULT_CAPACITY)
    }

    pub fn gamma(&mut self, params: &GammaParams) -> crate::Result<f64> {
        gamma_sample(params, &mut self.uniform, &mut self.normal)
    }
}
