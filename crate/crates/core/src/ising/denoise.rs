use super::{color_lattice, gibbs_sweep, gibbs_sweep_diff, BinaryImage, IsingLattice, SweepScratch, ZCache};
use crate::exec::Pool;
use crate::rng::DeviateBuffer;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseParams {
    pub w: f64,
    pub bias_scale: f64,
    pub sweeps: usize,
    pub burnin: usize,
    pub seed: u64,
    pub diff_update: bool,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        Self { w: 1.0, bias_scale: 2.0, sweeps: 100, burnin: 20, seed: 0, diff_update: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseOutput {
    pub image: BinaryImage,
    /// Spins changed in each sweep, burn-in included.
    pub flips: Vec<u64>,
    pub kept_sweeps: usize,
}

impl DenoiseOutput {
    /// Per-sweep flip counts as fractions of the pixel count.
    pub fn flip_rates(&self) -> Vec<f64> {
        let n = self.image.pixels().len() as f64;
        self.flips.iter().map(|&f| f as f64 / n).collect()
    }

    /// Mean flip fraction over the sweeps after burn-in.
    pub fn post_burnin_flip_rate(&self) -> f64 {
        let rates = self.flip_rates();
        let kept = &rates[rates.len() - self.kept_sweeps..];
        if kept.is_empty() {
            0.0
        } else {
            kept.iter().sum::<f64>() / kept.len() as f64
        }
    }
}

/// Restores a noisy binary image by Gibbs sampling an Ising model whose bias
/// favours the observed pixel. Each output pixel is the sign of its
/// post-burn-in mean spin, ties going to +1. The chain starts at the noisy
/// image, so with no kept sweeps the input comes back unchanged.
pub fn denoise(noisy: &BinaryImage, params: &DenoiseParams, pool: &Pool) -> Result<DenoiseOutput> {
    if noisy.is_empty() {
        return Err(Error::InvalidArgument("image is empty".into()));
    }
    let (h, w) = (noisy.height(), noisy.width());
    let s0 = noisy.to_spins();
    let b = s0.iter().map(|&s| params.bias_scale * f64::from(s)).collect();
    let mut lat = IsingLattice::new(h, w, s0.clone(), b, params.w)?;
    let mut part = color_lattice(&lat);
    let mut zc = params.diff_update.then(|| ZCache::new(&lat, &part));
    let mut rng = DeviateBuffer::uniform(params.seed, (h * w).clamp(1, 1 << 16));
    let mut scratch = SweepScratch::default();

    let mut plus = vec![0u32; h * w];
    let mut flips = Vec::with_capacity(params.sweeps);
    for sweep in 0..params.sweeps {
        let f = match zc.as_mut() {
            Some(zc) => gibbs_sweep_diff(&mut lat, &mut part, zc, &mut rng, &mut scratch)?,
            None => gibbs_sweep(&mut lat, &mut part, &mut rng, pool, &mut scratch)?,
        };
        flips.push(f);
        if sweep >= params.burnin {
            for (c, &s) in plus.iter_mut().zip(lat.spins()) {
                *c += u32::from(s > 0);
            }
        }
    }
    let kept = params.sweeps.saturating_sub(params.burnin);
    let image = if kept == 0 {
        noisy.clone()
    } else {
        let spins: Vec<i8> = plus.iter().map(|&c| if 2 * c as usize >= kept { 1 } else { -1 }).collect();
        BinaryImage::from_spins(h, w, &spins)?
    };
    Ok(DenoiseOutput { image, flips, kept_sweeps: kept })
}
