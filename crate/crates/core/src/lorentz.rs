//! Lorentz quasi-norms of layered functions `f = Σ 2^k χ_{E_k}`.
//!
//! With disjoint layers the decreasing rearrangement is a step function, so
//! `(∫ (t^{1/p} f*(t))^u dt/t)^{1/u}` integrates plateau by plateau in closed form.

use crate::error::{Error, Result};
use crate::measure::{IndicatorSet, McOptions};
use crate::rng::SampleRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Probes per ordered pair of layers when certifying disjointness.
pub const DISJOINTNESS_PROBES: usize = 10_000;

/// A nonnegative step function given by `(value, volume)` plateaus, in any order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepProfile {
    pub steps: Vec<(f64, f64)>,
}

impl StepProfile {
    pub fn new(steps: Vec<(f64, f64)>) -> Self {
        StepProfile { steps }
    }

    /// `(value, right endpoint)` of each plateau of the rearrangement.
    pub fn rearranged(&self) -> Vec<(f64, f64)> {
        let mut s: Vec<(f64, f64)> = self
            .steps
            .iter()
            .copied()
            .filter(|(v, m)| *v > 0.0 && *m > 0.0)
            .collect();
        s.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut t = 0.0;
        s.into_iter()
            .map(|(v, m)| {
                t += m;
                (v, t)
            })
            .collect()
    }

    /// `f*(t)`.
    pub fn rearrangement_at(&self, t: f64) -> f64 {
        self.rearranged()
            .into_iter()
            .find(|(_, end)| t < *end)
            .map_or(0.0, |(v, _)| v)
    }

    /// `‖f‖_{L^{p,u}}`; `u = ∞` gives `sup_t t^{1/p} f*(t)`.
    pub fn lorentz_norm(&self, p: f64, u: f64) -> f64 {
        let plateaus = self.rearranged();
        if u.is_infinite() {
            return plateaus
                .iter()
                .map(|(v, end)| v * end.powf(1.0 / p))
                .fold(0.0, f64::max);
        }
        let e = u / p;
        let mut start = 0.0f64;
        let mut sum = 0.0;
        for (v, end) in plateaus {
            sum += v.powf(u) * (p / u) * (end.powf(e) - start.powf(e));
            start = end;
        }
        sum.powf(1.0 / u)
    }
}

/// `(p/u)^{1/u} |E|^{1/p}`, the norm of a single indicator.
pub fn indicator_norm(volume: f64, p: f64, u: f64) -> f64 {
    if u.is_infinite() {
        return volume.powf(1.0 / p);
    }
    (p / u).powf(1.0 / u) * volume.powf(1.0 / p)
}

/// `C` with `‖f‖_{p,v} <= C ‖f‖_{p,u}` for `u <= v`: `(u/p)^{1/u - 1/v}`.
pub fn nesting_constant(p: f64, u: f64, v: f64) -> f64 {
    let inv_v = if v.is_infinite() { 0.0 } else { 1.0 / v };
    (u / p).powf(1.0 / u - inv_v)
}

/// Layer exponents with their volumes; the value on layer `k` is `2^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    pub layers: Vec<(i32, f64)>,
}

impl LayerProfile {
    pub fn new(layers: Vec<(i32, f64)>) -> Self {
        LayerProfile { layers }
    }

    pub fn steps(&self) -> StepProfile {
        StepProfile::new(
            self.layers
                .iter()
                .map(|(k, m)| (2f64.powi(*k), *m))
                .collect(),
        )
    }

    pub fn lorentz_norm(&self, p: f64, u: f64) -> f64 {
        self.steps().lorentz_norm(p, u)
    }

    /// `(Σ_k (2^k |E_k|^{1/p})^u)^{1/u}`; `u = ∞` takes the maximum term.
    pub fn discrete_lorentz(&self, p: f64, u: f64) -> f64 {
        let terms = self
            .layers
            .iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|(k, m)| 2f64.powi(*k) * m.powf(1.0 / p));
        if u.is_infinite() {
            return terms.fold(0.0, f64::max);
        }
        terms.map(|t| t.powf(u)).sum::<f64>().powf(1.0 / u)
    }

    /// All layer indices moved by `shift`, i.e. `f` scaled by `2^shift`.
    pub fn shifted(&self, shift: i32) -> LayerProfile {
        LayerProfile::new(self.layers.iter().map(|(k, m)| (k + shift, *m)).collect())
    }

    /// Scales by the power of two nearest to `1 / discrete_lorentz`.
    pub fn normalize(&self, p: f64, u: f64) -> Result<Normalization> {
        let norm = self.discrete_lorentz(p, u);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroFunction);
        }
        let shift = (-norm.log2()).round() as i32;
        Ok(Normalization {
            shift,
            residual: norm * 2f64.powi(shift),
        })
    }
}

/// Result of normalizing: the layer shift and the norm left after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: i32,
    pub residual: f64,
}

/// Zero-hit evidence that the layers of a function are pairwise disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessCertificate {
    pub pairs: usize,
    pub probes_per_pair: usize,
    pub hits: usize,
}

/// Checks sampled cross-membership of every ordered pair of sets.
pub fn certify_disjoint(
    sets: &[&IndicatorSet],
    probes: usize,
    seed: u64,
) -> DisjointnessCertificate {
    let pairs: Vec<(usize, usize)> = (0..sets.len())
        .flat_map(|i| {
            (0..sets.len())
                .filter(move |j| *j != i)
                .map(move |j| (i, j))
        })
        .collect();
    let hits = pairs
        .par_iter()
        .map(|&(i, j)| {
            let s = SampleRng::derive_seed(seed, (i * sets.len() + j) as u64);
            (0..probes)
                .filter(|&n| {
                    sets[i]
                        .sample_point(&mut SampleRng::new(s, n as u64))
                        .is_some_and(|p| sets[j].contains(&p))
                })
                .count()
        })
        .sum();
    DisjointnessCertificate {
        pairs: pairs.len() / 2,
        probes_per_pair: 2 * probes,
        hits,
    }
}

/// `Σ 2^k χ_{E_k}` with pairwise disjoint `E_k`.
#[derive(Debug, Clone)]
pub struct LayeredFunction {
    layers: Vec<(i32, IndicatorSet)>,
    certificate: DisjointnessCertificate,
}

impl LayeredFunction {
    /// Fails unless sampled cross-membership finds no overlap.
    pub fn new(layers: Vec<(i32, IndicatorSet)>, seed: u64) -> Result<Self> {
        let sets: Vec<&IndicatorSet> = layers.iter().map(|(_, s)| s).collect();
        let certificate = certify_disjoint(&sets, DISJOINTNESS_PROBES / 2, seed);
        if certificate.hits > 0 {
            return Err(Error::InvalidArgument(format!(
                "layers overlap: {} cross-membership hits",
                certificate.hits
            )));
        }
        Ok(LayeredFunction {
            layers,
            certificate,
        })
    }

    pub fn layers(&self) -> &[(i32, IndicatorSet)] {
        &self.layers
    }

    pub fn certificate(&self) -> DisjointnessCertificate {
        self.certificate
    }

    /// Layer volumes, exact where the sets allow it.
    pub fn profile(&self, mc: McOptions) -> LayerProfile {
        LayerProfile::new(
            self.layers
                .iter()
                .enumerate()
                .map(|(i, (k, s))| {
                    let seed = SampleRng::derive_seed(mc.seed, i as u64);
                    (*k, s.volume(McOptions::new(mc.samples, seed)).value)
                })
                .collect(),
        )
    }

    pub fn lorentz_norm(&self, p: f64, u: f64, mc: McOptions) -> f64 {
        self.profile(mc).lorentz_norm(p, u)
    }

    pub fn discrete_lorentz(&self, p: f64, u: f64, mc: McOptions) -> f64 {
        self.profile(mc).discrete_lorentz(p, u)
    }

    /// The function scaled by the nearest power of two to
    /// `1 / discrete_lorentz`, with the residual norm.
    pub fn normalize(
        &self,
        p: f64,
        u: f64,
        mc: McOptions,
    ) -> Result<(LayeredFunction, Normalization)> {
        let n = self.profile(mc).normalize(p, u)?;
        let layers = self
            .layers
            .iter()
            .map(|(k, s)| (k + n.shift, s.clone()))
            .collect();
        Ok((
            LayeredFunction {
                layers,
                certificate: self.certificate,
            },
            n,
        ))
    }
}

/// Range of `discrete_lorentz / lorentz_norm` over a sample of functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityEnvelope {
    pub p: f64,
    pub u: f64,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// A random profile with at most `max_layers` distinct layers.
pub fn random_profile(rng: &mut SampleRng, max_layers: usize) -> LayerProfile {
    let n = 1 + (rng.uniform() * max_layers as f64) as usize;
    let mut ks: Vec<i32> = Vec::new();
    while ks.len() < n.min(max_layers) {
        let k = (rng.uniform() * 24.0) as i32 - 12;
        if !ks.contains(&k) {
            ks.push(k);
        }
    }
    LayerProfile::new(
        ks.into_iter()
            .map(|k| (k, 10f64.powf(rng.range(-4.0, 4.0))))
            .collect(),
    )
}

/// Empirical comparability constants between the discrete and true norms.
pub fn comparability_envelope(
    p: f64,
    u: f64,
    samples: usize,
    max_layers: usize,
    seed: u64,
) -> ComparabilityEnvelope {
    let ratios: Vec<f64> = (0..samples)
        .map(|i| {
            let f = random_profile(&mut SampleRng::new(seed, i as u64), max_layers);
            f.discrete_lorentz(p, u) / f.lorentz_norm(p, u)
        })
        .collect();
    ComparabilityEnvelope {
        p,
        u,
        samples,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
    }
}

/// `∫ (t^{1/p} f*(t))^u dt/t` by a midpoint rule after substituting
/// `t = T y^{p/u}`, which removes the endpoint singularity.
pub fn numeric_lorentz_norm(f: &StepProfile, p: f64, u: f64, nodes: usize) -> f64 {
    let plateaus = f.rearranged();
    let total = match plateaus.last() {
        Some((_, t)) => *t,
        None => return 0.0,
    };
    let h = 1.0 / nodes as f64;
    let mut idx = 0;
    let mut sum = 0.0;
    for i in 0..nodes {
        let y = (i as f64 + 0.5) * h;
        let t = total * y.powf(p / u);
        while idx < plateaus.len() && t >= plateaus[idx].1 {
            idx += 1;
        }
        if idx < plateaus.len() {
            sum += plateaus[idx].0.powf(u);
        }
    }
    (sum * h * total.powf(u / p) * p / u).powf(1.0 / u)
}
