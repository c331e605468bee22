//! Counter-based randomness.
//!
//! Every random draw is addressed by `(seed, stream)`: a sample with index
//! `i` always sees the same numbers no matter which worker evaluates it or in
//! which order. ChaCha is itself a counter-mode generator, so selecting the
//! stream is just setting the nonce.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Number of samples per parallel work unit. Fixed so that reductions are
/// independent of the thread count.
pub const CHUNK: usize = 4096;

/// Random source for one logical sample.
pub struct SampleRng(ChaCha8Rng);

impl SampleRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    /// Derives an independent seed for a named sub-experiment.
    pub fn derive_seed(seed: u64, tag: u64) -> u64 {
        let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        // Box-Muller; the second variate is discarded to keep draws stateless.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Uniform point in the disk `|z - center| <= radius`.
    pub fn in_disk(&mut self, center: Complex64, radius: f64) -> Complex64 {
        let rho = radius * self.uniform().sqrt();
        let theta = TAU * self.uniform();
        center + Complex64::from_polar(rho, theta)
    }

    /// Uniform point in the closed Euclidean ball of `dim` dimensions.
    pub fn in_ball(&mut self, dim: usize, radius: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = radius * self.uniform().powf(1.0 / dim as f64) / norm.max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|x| *x *= scale);
        v
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

#[derive(Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    const EMPTY: Moments = Moments {
        n: 0.0,
        mean: 0.0,
        m2: 0.0,
    };

    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if other.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }
}

/// Mean of `f` over samples `0..n`, each drawing from `SampleRng::new(seed, i)`.
/// Work is split into fixed chunks and merged in chunk order, so the result
/// is bit-identical for any thread count.
pub fn mc_mean<F>(n: usize, seed: u64, f: F) -> MeanEstimate
where
    F: Fn(&mut SampleRng) -> f64 + Sync,
{
    use rayon::prelude::*;
    let chunks: Vec<Moments> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::EMPTY;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                m.push(f(&mut SampleRng::new(seed, i as u64)));
            }
            m
        })
        .collect();
    let m = chunks.into_iter().fold(Moments::EMPTY, Moments::merge);
    let var = if m.n > 1.0 { m.m2 / (m.n - 1.0) } else { 0.0 };
    MeanEstimate {
        mean: m.mean,
        std_error: (var / m.n.max(1.0)).sqrt(),
        n,
    }
}
