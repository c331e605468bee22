//! Clustering of point configurations into bands by chaining through metric
//! balls, with free / quasi-free / bound classification.

use crate::error::{Error, Result};
use crate::rng::SampleRng;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandParams {
    pub d: usize,
    /// Torsion degree `K = N - d`.
    pub k: u32,
    pub alpha1: f64,
    pub beta: f64,
    pub alpha2: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub c_tilde: f64,
}

impl BandParams {
    pub fn new(
        d: usize,
        k: u32,
        (alpha1, beta, alpha2): (f64, f64, f64),
        (delta, delta_prime, c_tilde): (f64, f64, f64),
    ) -> Result<Self> {
        let p = Self {
            d,
            k,
            alpha1,
            beta,
            alpha2,
            delta,
            delta_prime,
            c_tilde,
        };
        p.validate()?;
        Ok(p)
    }

    /// Levels as given, `delta = 0.1 c` with `c` the empirical even-index
    /// separation constant of `config`, `delta' = delta / 2d`, `c~ = delta' / 2`.
    pub fn for_config(
        d: usize,
        k: u32,
        (alpha1, beta, alpha2): (f64, f64, f64),
        config: &PointConfig,
    ) -> Result<Self> {
        let mut p = Self {
            d,
            k,
            alpha1,
            beta,
            alpha2,
            delta: 1.0,
            delta_prime: 0.5,
            c_tilde: 0.25,
        };
        let c = p.empirical_separation(config)?;
        p.delta = 0.1 * c;
        p.delta_prime = p.delta / (2 * d) as f64;
        p.c_tilde = p.delta_prime / 2.0;
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            self.alpha1,
            self.beta,
            self.alpha2,
            self.delta,
            self.delta_prime,
            self.c_tilde,
        ];
        if self.d < 2 {
            return Err(Error::InvalidArgument("d must be at least 2".into()));
        }
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidArgument(
                "levels and radii must be positive".into(),
            ));
        }
        if self.alpha1 > self.alpha2 {
            return Err(Error::InvalidArgument(
                "alpha1 must not exceed alpha2".into(),
            ));
        }
        if self.delta_prime >= self.delta {
            return Err(Error::InvalidArgument(
                "delta_prime must be below delta".into(),
            ));
        }
        Ok(())
    }

    /// `nu = d(d+1) / (4K + 2d(d+1))`.
    pub fn nu(&self) -> f64 {
        let dd = (self.d * (self.d + 1)) as f64;
        dd / (4.0 * f64::from(self.k) + 2.0 * dd)
    }

    pub fn gamma(&self) -> f64 {
        self.alpha1.max(self.beta)
    }

    fn exponent(&self) -> f64 {
        f64::from(self.k) / (self.d * (self.d + 1)) as f64
    }

    /// `(4 pi nu)^{-nu} level^nu`.
    pub fn modulus_floor(&self, level: f64) -> f64 {
        let nu = self.nu();
        (4.0 * PI * nu).powf(-nu) * level.powf(nu)
    }

    /// `min |z_i - z_j| / (alpha1^{1/2} |z_i z_j|^{-K/(d(d+1))})` over `i < j`, `j` even.
    pub fn empirical_separation(&self, config: &PointConfig) -> Result<f64> {
        let mut best = f64::INFINITY;
        for &(j, zj) in config.entries() {
            if j % 2 != 0 {
                continue;
            }
            for &(_, zi) in config.entries().iter().filter(|e| e.0 < j) {
                let r = separation_radius(zi, zj, self.alpha1, self)?;
                best = best.min((zi - zj).norm() / r);
            }
        }
        Ok(if best.is_finite() { best } else { 1.0 })
    }

    fn chains(&self, a: Complex64, b: Complex64) -> bool {
        let r = self.delta * self.alpha1.sqrt() * (a.norm() * b.norm()).powf(-self.exponent());
        (a - b).norm() <= r
    }
}

/// `level^{1/2} |z_i z_j|^{-K/(d(d+1))}`.
pub fn separation_radius(
    zi: Complex64,
    zj: Complex64,
    level: f64,
    params: &BandParams,
) -> Result<f64> {
    if zi.norm() == 0.0 {
        return Err(Error::ZeroModulus(0));
    }
    if zj.norm() == 0.0 {
        return Err(Error::ZeroModulus(1));
    }
    Ok(level.sqrt() * (zi.norm() * zj.norm()).powf(-params.exponent()))
}

/// Points labelled by 1-based original indices, kept sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    entries: Vec<(usize, Complex64)>,
}

impl PointConfig {
    /// Labels `points` as `1..=m`.
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        Self::labelled(
            points
                .into_iter()
                .enumerate()
                .map(|(i, z)| (i + 1, z))
                .collect(),
        )
    }

    pub fn labelled(mut entries: Vec<(usize, Complex64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate index".into()));
        }
        if let Some(e) = entries.iter().find(|e| e.1.norm() == 0.0) {
            return Err(Error::ZeroModulus(e.0));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, Complex64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<Complex64> {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .ok()
            .map(|p| self.entries[p].1)
    }

    fn point(&self, index: usize) -> Complex64 {
        self.get(index).expect("index belongs to the configuration")
    }

    pub fn restrict(&self, indices: &BTreeSet<usize>) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|e| indices.contains(&e.0))
                .copied()
                .collect(),
        }
    }

    /// Multiplies every point by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|(i, z)| (*i, z * lambda)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Floor,
    /// Odd `j` separated at level `beta`.
    OddSeparation,
    /// Even `j < 2d` separated at level `alpha1`.
    EvenSeparation,
    /// `j = 2d` separated at level `alpha2`.
    LastSeparation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredicateCheck {
    pub predicate: Predicate,
    pub j: usize,
    pub i: Option<usize>,
    /// Observed quantity over required quantity; passes when `>= 1`.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredicateReport {
    pub checks: Vec<PredicateCheck>,
}

impl PredicateReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PredicateCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn passes(&self, predicate: Predicate) -> bool {
        self.checks
            .iter()
            .filter(|c| c.predicate == predicate)
            .all(|c| c.pass)
    }
}

fn check(
    predicate: Predicate,
    j: usize,
    i: Option<usize>,
    observed: f64,
    required: f64,
) -> PredicateCheck {
    let margin = observed / required;
    PredicateCheck {
        predicate,
        j,
        i,
        margin,
        pass: margin >= 1.0,
    }
}

/// Predicates constraining index `j` against all earlier indices.
fn index_predicates(
    earlier: &[(usize, Complex64)],
    j: usize,
    zj: Complex64,
    params: &BandParams,
    c: f64,
) -> Vec<PredicateCheck> {
    let last = 2 * params.d;
    let e = 2.0 * params.exponent();
    let mut out = Vec::with_capacity(earlier.len() + 1);
    let floor_level = if j == last {
        params.alpha2
    } else {
        params.gamma()
    };
    out.push(check(
        Predicate::Floor,
        j,
        None,
        zj.norm(),
        params.modulus_floor(floor_level),
    ));
    let half_floor = 0.5 * params.modulus_floor(params.alpha2);
    for &(i, zi) in earlier {
        let gap = (zj - zi).norm();
        let c = if j == last {
            let base = if zi.norm() < half_floor {
                zj.norm()
            } else {
                zi.norm()
            };
            check(
                Predicate::LastSeparation,
                j,
                Some(i),
                gap,
                c * params.alpha2.sqrt() * base.powf(-e),
            )
        } else if j % 2 == 1 {
            check(
                Predicate::OddSeparation,
                j,
                Some(i),
                gap,
                c * params.beta.sqrt() * zi.norm().powf(-e),
            )
        } else {
            check(
                Predicate::EvenSeparation,
                j,
                Some(i),
                gap,
                c * params.alpha1.sqrt() * zi.norm().powf(-e),
            )
        };
        out.push(c);
    }
    out
}

/// Evaluates the modulus floors and the odd / even / last separation
/// predicates with separation constant `c`, for every ordered pair `i < j`.
pub fn check_setup_predicates(
    config: &PointConfig,
    params: &BandParams,
    c: f64,
) -> PredicateReport {
    let entries = config.entries();
    let checks = entries
        .iter()
        .enumerate()
        .flat_map(|(p, &(j, zj))| index_predicates(&entries[..p], j, zj, params, c))
        .collect();
    PredicateReport { checks }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    /// Sorted; the first element is the free index.
    members: Vec<usize>,
}

impl Band {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        assert!(!members.is_empty(), "band must be non-empty");
        Self { members }
    }

    pub fn free(&self) -> usize {
        self.members[0]
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn quasi_free(&self) -> &[usize] {
        if self.members.len() == 2 {
            &self.members[1..]
        } else {
            &[]
        }
    }

    pub fn bound(&self) -> &[usize] {
        if self.members.len() >= 3 {
            &self.members[1..]
        } else {
            &[]
        }
    }
}

/// An index lying in the chaining ball of a member of a band other than its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub index: usize,
    pub assigned_free: usize,
    pub other_free: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandStructure {
    bands: Vec<Band>,
    pub ambiguities: Vec<Ambiguity>,
}

#[derive(Serialize, Deserialize)]
struct BandJson {
    free: usize,
    quasi_free: Vec<usize>,
    bound: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct StructureJson {
    bands: Vec<BandJson>,
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    ambiguities: Vec<Ambiguity>,
}

impl Serialize for BandStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StructureJson {
            bands: self
                .bands
                .iter()
                .map(|b| BandJson {
                    free: b.free(),
                    quasi_free: b.quasi_free().to_vec(),
                    bound: b.bound().to_vec(),
                })
                .collect(),
            k: self.k(),
            m: self.m_free(),
            n: self.n_quasifree(),
            ambiguities: self.ambiguities.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BandStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = StructureJson::deserialize(d)?;
        let bands = j
            .bands
            .into_iter()
            .map(|b| {
                let mut m = vec![b.free];
                m.extend(b.quasi_free);
                m.extend(b.bound);
                Band::new(m)
            })
            .collect();
        let s = BandStructure::from_bands(bands);
        if s.k() != j.k || s.m_free() != j.m || s.n_quasifree() != j.n {
            return Err(serde::de::Error::custom("counts disagree with bands"));
        }
        Ok(BandStructure {
            ambiguities: j.ambiguities,
            ..s
        })
    }
}

impl BandStructure {
    pub fn from_bands(mut bands: Vec<Band>) -> Self {
        bands.sort_by_key(|b| b.free());
        Self {
            bands,
            ambiguities: Vec::new(),
        }
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// Number of indices covered.
    pub fn k(&self) -> usize {
        self.bands.iter().map(Band::len).sum()
    }

    pub fn m_free(&self) -> usize {
        self.bands.len()
    }

    pub fn n_quasifree(&self) -> usize {
        self.bands.iter().filter(|b| b.len() == 2).count()
    }

    pub fn free_plus_quasifree(&self) -> usize {
        self.m_free() + self.n_quasifree()
    }

    pub fn indices(&self) -> BTreeSet<usize> {
        self.bands
            .iter()
            .flat_map(|b| b.members().iter().copied())
            .collect()
    }

    pub fn band_of(&self, index: usize) -> Option<&Band> {
        self.bands.iter().find(|b| b.members.contains(&index))
    }

    /// Every index of `expected` appears in exactly one band and no other index appears.
    pub fn is_partition_of(&self, expected: &BTreeSet<usize>) -> bool {
        let mut seen = BTreeSet::new();
        for b in &self.bands {
            for &i in b.members() {
                if !seen.insert(i) {
                    return false;
                }
            }
        }
        &seen == expected
    }
}

fn chain_from(
    seed: usize,
    config: &PointConfig,
    params: &BandParams,
    assigned: &mut BTreeMap<usize, usize>,
    band_id: usize,
    odd_only: bool,
) -> Vec<usize> {
    let mut members = vec![seed];
    assigned.insert(seed, band_id);
    let mut queue = VecDeque::from([seed]);
    while let Some(a) = queue.pop_front() {
        let za = config.point(a);
        for &(o, zo) in config.entries() {
            if o <= seed || assigned.contains_key(&o) || (odd_only && o % 2 == 0) {
                continue;
            }
            if params.chains(za, zo) {
                assigned.insert(o, band_id);
                members.push(o);
                queue.push_back(o);
            }
        }
    }
    members
}

/// Seeds a band at every even index from the largest down, absorbs by
/// transitive chaining every unassigned odd index above the seed, then
/// repeats from the smallest leftover index.
pub fn build_bands(config: &PointConfig, params: &BandParams) -> BandStructure {
    let mut assigned = BTreeMap::new();
    let mut raw: Vec<Vec<usize>> = Vec::new();
    let evens: Vec<usize> = config
        .entries()
        .iter()
        .rev()
        .map(|e| e.0)
        .filter(|i| i % 2 == 0)
        .collect();
    for j in evens {
        if !assigned.contains_key(&j) {
            let id = raw.len();
            raw.push(chain_from(j, config, params, &mut assigned, id, true));
        }
    }
    while let Some(&(seed, _)) = config
        .entries()
        .iter()
        .find(|e| !assigned.contains_key(&e.0))
    {
        let id = raw.len();
        raw.push(chain_from(seed, config, params, &mut assigned, id, false));
    }

    let mut ambiguities = Vec::new();
    for &(i, zi) in config.entries() {
        let own = assigned[&i];
        let mut others = BTreeSet::new();
        for &(m, zm) in config.entries() {
            let other = assigned[&m];
            if other != own && params.chains(zi, zm) {
                others.insert(other);
            }
        }
        for other in others {
            ambiguities.push(Ambiguity {
                index: i,
                assigned_free: raw[own].iter().copied().min().unwrap(),
                other_free: raw[other].iter().copied().min().unwrap(),
            });
        }
    }
    BandStructure {
        ambiguities,
        ..BandStructure::from_bands(raw.into_iter().map(Band::new).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub partition: bool,
    pub free_is_minimum: bool,
    pub size_at_most_d: bool,
    /// Cross-band separation at level `delta^2 alpha1`.
    pub cross_band_separated: bool,
    /// Smallest `|z_i - z_j| / radius` over cross-band pairs.
    pub cross_band_margin: f64,
    /// Two-sided bracket for quasi-bound indices.
    pub quasi_bound_bracket: bool,
    /// Bound indices within the `delta'^2 alpha1` radius of their free index.
    pub bound_within_delta_prime: bool,
    /// Largest `|z_i - z_free| / radius` over bound indices; passes below 1.
    pub bound_margin: f64,
    /// Same-band moduli within a factor `(1 + delta (4 pi nu)^{1/2})^d`.
    pub same_band_comparable: bool,
}

impl BandReport {
    pub fn all_pass(&self) -> bool {
        self.partition
            && self.free_is_minimum
            && self.size_at_most_d
            && self.cross_band_separated
            && self.quasi_bound_bracket
            && self.bound_within_delta_prime
            && self.same_band_comparable
    }
}

pub fn verify_band_properties(
    structure: &BandStructure,
    config: &PointConfig,
    params: &BandParams,
) -> Result<BandReport> {
    let expected: BTreeSet<usize> = config.entries().iter().map(|e| e.0).collect();
    let mut report = BandReport {
        partition: structure.is_partition_of(&expected),
        free_is_minimum: structure
            .bands()
            .iter()
            .all(|b| b.members().iter().all(|&m| m >= b.free())),
        size_at_most_d: structure.bands().iter().all(|b| b.len() <= params.d),
        cross_band_separated: true,
        cross_band_margin: f64::INFINITY,
        quasi_bound_bracket: true,
        bound_within_delta_prime: true,
        bound_margin: 0.0,
        same_band_comparable: true,
    };
    let bands = structure.bands();
    let lookup = |i: usize| {
        config
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("index {i} not in configuration")))
    };
    for (a, ba) in bands.iter().enumerate() {
        for bb in &bands[a + 1..] {
            for &i in ba.members() {
                for &j in bb.members() {
                    let (zi, zj) = (lookup(i)?, lookup(j)?);
                    let r = params.delta * separation_radius(zi, zj, params.alpha1, params)?;
                    let m = (zi - zj).norm() / r;
                    report.cross_band_margin = report.cross_band_margin.min(m);
                    report.cross_band_separated &= m > 1.0;
                }
            }
        }
        let zf = lookup(ba.free())?;
        for &q in ba.quasi_free() {
            let zq = lookup(q)?;
            let gap = (zq - zf).norm();
            let unit = separation_radius(zq, zf, 1.0, params)?;
            let lower = params.c_tilde * params.beta.sqrt() * unit;
            let upper = params.delta * params.alpha1.sqrt() * unit;
            report.quasi_bound_bracket &= lower < gap && gap <= upper;
        }
        for &b in ba.bound() {
            let zb = lookup(b)?;
            let r = params.delta_prime * separation_radius(zb, zf, params.alpha1, params)?;
            let m = (zb - zf).norm() / r;
            report.bound_margin = report.bound_margin.max(m);
            report.bound_within_delta_prime &= m < 1.0;
        }
        let cbar = params.delta * (4.0 * PI * params.nu()).sqrt();
        let limit = (1.0 + cbar).powi(params.d as i32);
        let mods: Vec<f64> = ba
            .members()
            .iter()
            .map(|&m| lookup(m).map(|z| z.norm()))
            .collect::<Result<_>>()?;
        let (lo, hi) = mods.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), m| {
            (lo.min(*m), hi.max(*m))
        });
        report.same_band_comparable &= hi <= limit * lo;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShrinkOptions {
    pub max_iters: usize,
    /// Lower stop for `delta'`; stands in for the unspecified constant `c_{d,eps}`.
    pub delta_floor: f64,
}

impl Default for ShrinkOptions {
    fn default() -> Self {
        Self {
            max_iters: 20,
            delta_floor: 0.0,
        }
    }
}

/// Rebuilds with `delta <- delta' / d` (keeping `delta' / delta` fixed) until
/// every bound index lies within the `delta'` radius of its free index.
pub fn shrink_and_rebuild(
    config: &PointConfig,
    params: &BandParams,
    options: &ShrinkOptions,
) -> Result<(BandParams, BandStructure)> {
    let ratio = params.delta_prime / params.delta;
    let mut p = *params;
    for iteration in 0..=options.max_iters {
        let s = build_bands(config, &p);
        if verify_band_properties(&s, config, &p)?.bound_within_delta_prime {
            return Ok((p, s));
        }
        if iteration == options.max_iters {
            break;
        }
        p.delta = p.delta_prime / p.d as f64;
        p.delta_prime = p.delta * ratio;
        if p.delta_prime < options.delta_floor {
            return Err(Error::IterationLimit {
                iterations: iteration + 1,
            });
        }
    }
    Err(Error::IterationLimit {
        iterations: options.max_iters,
    })
}

/// Drops the smallest surviving index, reclassifying by band size, until
/// free plus quasi-free indices number `target`.
pub fn eliminate_indices(structure: &BandStructure, target: usize) -> Result<BandStructure> {
    let mut bands: Vec<Band> = structure.bands().to_vec();
    let mut trajectory = Vec::new();
    loop {
        let current = BandStructure::from_bands(bands.clone());
        let count = current.free_plus_quasifree();
        trajectory.push(count);
        if count == target {
            return Ok(current);
        }
        if count < target || current.k() == 0 {
            return Err(Error::TargetUnreachable { target, trajectory });
        }
        let smallest = current.indices().into_iter().next().unwrap();
        bands = current
            .bands()
            .iter()
            .filter_map(|b| {
                let rest: Vec<usize> = b
                    .members()
                    .iter()
                    .copied()
                    .filter(|&m| m != smallest)
                    .collect();
                (!rest.is_empty()).then(|| Band::new(rest))
            })
            .collect();
    }
}

/// Re-bands the band containing the largest index at level `gamma2` with
/// radii `(rho, rho')`, merges the sub-bands back and re-runs elimination
/// down to `d` free plus quasi-free indices.
pub fn two_stage_refine(
    structure: &BandStructure,
    config: &PointConfig,
    params: &BandParams,
    gamma2: f64,
    rho: f64,
    rho_prime: f64,
) -> Result<BandStructure> {
    if !(gamma2 > 0.0 && gamma2 <= params.alpha1) {
        return Err(Error::InvalidArgument("need 0 < gamma2 <= alpha1".into()));
    }
    if !(rho_prime > 0.0 && rho_prime < rho) {
        return Err(Error::InvalidArgument("need 0 < rho' < rho".into()));
    }
    let Some(largest) = structure.indices().into_iter().next_back() else {
        return Ok(structure.clone());
    };
    let target = structure.band_of(largest).unwrap();
    let members: BTreeSet<usize> = target.members().iter().copied().collect();
    let sub_params = BandParams {
        alpha1: gamma2,
        delta: rho,
        delta_prime: rho_prime,
        ..*params
    };
    let sub = build_bands(&config.restrict(&members), &sub_params);
    let mut bands: Vec<Band> = structure
        .bands()
        .iter()
        .filter(|b| b.free() != target.free())
        .cloned()
        .collect();
    bands.extend(sub.bands().iter().cloned());
    eliminate_indices(&BandStructure::from_bands(bands), params.d)
}

/// Rejection sampler for configurations of `2d` points satisfying the
/// modulus floors and separation predicates with constant `c`. Odd points
/// are placed near an earlier point with probability `cluster_prob` so that
/// non-trivial bands occur.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleSampler {
    pub d: usize,
    pub k: u32,
    pub alpha1: f64,
    pub beta: f64,
    pub alpha2: f64,
    pub c: f64,
    pub outer_radius: f64,
    pub cluster_prob: f64,
}

impl AdmissibleSampler {
    pub fn new(d: usize, k: u32) -> Self {
        Self {
            d,
            k,
            alpha1: 1e-2,
            beta: 1e-6,
            alpha2: 2e-2,
            c: 1.0,
            outer_radius: 1.0,
            cluster_prob: 0.6,
        }
    }

    fn levels(&self) -> BandParams {
        BandParams {
            d: self.d,
            k: self.k,
            alpha1: self.alpha1,
            beta: self.beta,
            alpha2: self.alpha2,
            delta: 1.0,
            delta_prime: 0.5,
            c_tilde: 0.25,
        }
    }

    pub fn sample(&self, rng: &mut SampleRng, max_tries: usize) -> Option<PointConfig> {
        let p = self.levels();
        let e = 2.0 * p.exponent();
        let origin = Complex64::new(0.0, 0.0);
        'restart: for _ in 0..max_tries {
            let mut pts: Vec<(usize, Complex64)> = Vec::with_capacity(2 * self.d);
            for j in 1..=2 * self.d {
                let mut placed = false;
                for _ in 0..max_tries {
                    let z = if j % 2 == 1 && j > 1 && rng.uniform() < self.cluster_prob {
                        let (_, zi) = pts[(rng.uniform() * pts.len() as f64) as usize];
                        let lo = self.c * self.beta.sqrt() * zi.norm().powf(-e);
                        let hi = self.c * self.alpha1.sqrt() * zi.norm().powf(-e);
                        let dist = lo * (hi / lo).powf(rng.range(0.1, 1.0)) * 1.5;
                        zi + Complex64::from_polar(dist, rng.range(0.0, 2.0 * PI))
                    } else {
                        rng.in_disk(origin, self.outer_radius)
                    };
                    if z.norm() > self.outer_radius {
                        continue;
                    }
                    if index_predicates(&pts, j, z, &p, self.c)
                        .iter()
                        .all(|c| c.pass)
                    {
                        pts.push((j, z));
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    continue 'restart;
                }
            }
            return PointConfig::labelled(pts).ok();
        }
        None
    }

    /// Default band parameters for a sampled configuration.
    pub fn params_for(&self, config: &PointConfig) -> Result<BandParams> {
        BandParams::for_config(
            self.d,
            self.k,
            (self.alpha1, self.beta, self.alpha2),
            config,
        )
    }
}
