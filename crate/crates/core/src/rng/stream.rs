use wide::f64x4;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_PI: f64 = std::f64::consts::TAU;

/// SplitMix64 output finalizer.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based 64-bit generator: output `i` is `mix64(key + (i + 1) * GOLDEN)`,
/// which is SplitMix64 seeded with `key`. Period 2^64, random access by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self { key: seed }
    }

    /// Derives an independent stream for `(self, id)`.
    pub fn split(&self, id: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(id.wrapping_add(0xD1B5_4A32_D192_ED03))),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline(always)]
    pub fn bits(&self, pos: u64) -> u64 {
        mix64(self.key.wrapping_add(pos.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform on [0, 1) with 52 random bits.
    #[inline(always)]
    pub fn uniform(&self, pos: u64) -> f64 {
        to_unit(self.bits(pos))
    }

    /// Box–Muller pair `p`, built from uniforms `2p` and `2p + 1`.
    pub fn normal_pair(&self, p: u64) -> (f64, f64) {
        let (c, s) = box_muller_x4([self.uniform(2 * p), 0.5, 0.5, 0.5], [self.uniform(2 * p + 1), 0.0, 0.0, 0.0]);
        (c[0], s[0])
    }

    /// Normal deviate at stream position `pos` (even positions take the
    /// cosine half of a pair, odd positions the sine half).
    pub fn normal(&self, pos: u64) -> f64 {
        let (c, s) = self.normal_pair(pos / 2);
        if pos % 2 == 0 {
            c
        } else {
            s
        }
    }

    /// Fills `out` with uniforms at positions `start..`. Long fills use a
    /// wider instruction set when the CPU has one; the values are the same.
    pub fn fill_uniform(&self, start: u64, out: &mut [f64]) {
        let z0 = self.key.wrapping_add(start.wrapping_add(1).wrapping_mul(GOLDEN));
        #[cfg(target_arch = "x86_64")]
        if out.len() >= 64 {
            if std::arch::is_x86_feature_detected!("avx512dq") {
                // SAFETY: the required CPU features were just detected.
                return unsafe { fill_uniform_avx512(z0, out) };
            }
            if std::arch::is_x86_feature_detected!("avx2") {
                // SAFETY: as above.
                return unsafe { fill_uniform_avx2(z0, out) };
            }
        }
        fill_uniform_from(z0, out);
    }

    /// Fills `out` with normals at positions `start..`. A half pair at either
    /// end is computed in full and the other value discarded. Returns the
    /// number of deviates computed, discards included.
    pub fn fill_normal(&self, start: u64, out: &mut [f64]) -> u64 {
        let len = out.len();
        if len == 0 {
            return 0;
        }
        let mut i = 0;
        let mut computed = 0;
        if start % 2 == 1 {
            out[0] = self.normal_pair(start / 2).1;
            i = 1;
            computed += 2;
        }
        let mut pair = (start + i as u64) / 2;
        while i + 8 <= len {
            let mut u1 = [0.0; 4];
            let mut u2 = [0.0; 4];
            for l in 0..4 {
                u1[l] = self.uniform(2 * (pair + l as u64));
                u2[l] = self.uniform(2 * (pair + l as u64) + 1);
            }
            let (c, s) = box_muller_x4(u1, u2);
            for l in 0..4 {
                out[i + 2 * l] = c[l];
                out[i + 2 * l + 1] = s[l];
            }
            i += 8;
            pair += 4;
            computed += 8;
        }
        while i + 1 < len {
            let (c, s) = self.normal_pair(pair);
            out[i] = c;
            out[i + 1] = s;
            i += 2;
            pair += 1;
            computed += 2;
        }
        if i < len {
            out[i] = self.normal_pair(pair).0;
            computed += 2;
        }
        computed
    }
}

#[inline(always)]
fn fill_uniform_from(mut z: u64, out: &mut [f64]) {
    for o in out.iter_mut() {
        *o = to_unit(mix64(z));
        z = z.wrapping_add(GOLDEN);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,avx512dq")]
unsafe fn fill_uniform_avx512(z: u64, out: &mut [f64]) {
    fill_uniform_from(z, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn fill_uniform_avx2(z: u64, out: &mut [f64]) {
    fill_uniform_from(z, out)
}

/// Top 52 bits as a mantissa in [1, 2), shifted down to [0, 1).
#[inline(always)]
fn to_unit(bits: u64) -> f64 {
    f64::from_bits(0x3FF0_0000_0000_0000 | (bits >> 12)) - 1.0
}

/// Box–Muller on four pairs. Every lane goes through the same sequence of
/// IEEE operations, so a pair's value does not depend on its lane or on how
/// many other pairs were computed alongside it.
#[inline(always)]
fn box_muller_x4(u1: [f64; 4], u2: [f64; 4]) -> ([f64; 4], [f64; 4]) {
    let u1 = f64x4::new(u1);
    let u2 = f64x4::new(u2);
    let r = (f64x4::splat(-2.0) * (f64x4::ONE - u1).ln()).sqrt();
    let (s, c) = (f64x4::splat(TWO_PI) * u2).sin_cos();
    ((r * c).to_array(), (r * s).to_array())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_splitmix64() {
        // Reference outputs of SplitMix64 seeded with 0.
        let s = Stream::new(0);
        assert_eq!(s.bits(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(s.bits(1), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn long_fill_matches_positions() {
        let s = Stream::new(12);
        let mut a = vec![0.0; 1000];
        s.fill_uniform(77, &mut a);
        for (i, v) in a.iter().enumerate() {
            assert_eq!(*v, s.uniform(77 + i as u64));
        }
    }

    #[test]
    fn uniform_range() {
        let s = Stream::new(9);
        for i in 0..10_000 {
            let u = s.uniform(i);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_fill_is_position_addressable() {
        let s = Stream::new(3);
        let mut a = vec![0.0; 11];
        s.fill_normal(5, &mut a);
        for (i, v) in a.iter().enumerate() {
            assert_eq!(*v, s.normal(5 + i as u64));
        }
    }

    #[test]
    fn split_streams_differ() {
        let s = Stream::new(1);
        assert_ne!(s.split(0).bits(0), s.split(1).bits(0));
        assert_eq!(s.split(7), s.split(7));
    }

    #[test]
    fn normal_pair_agrees_with_libm() {
        let s = Stream::new(4);
        for p in 0..5000 {
            let (u1, u2) = (s.uniform(2 * p), s.uniform(2 * p + 1));
            let r = (-2.0 * (1.0 - u1).ln()).sqrt();
            let (sn, cs) = (std::f64::consts::TAU * u2).sin_cos();
            let (c, z) = s.normal_pair(p);
            assert!((c - r * cs).abs() <= 1e-13 * (1.0 + r), "{p}");
            assert!((z - r * sn).abs() <= 1e-13 * (1.0 + r), "{p}");
        }
    }
}
