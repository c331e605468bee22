//! Necessary conditions: the trapezoid of admissible exponents, scaling
//! families that recover exponents by log-log fits, and multibump
//! constructions that pin down the Lorentz indices.
//!
//! Expected exponents are computed in exact rational arithmetic; numerical
//! work only produces the measured side.

use crate::curve::{ComplexCurve, Phi, RealPoint};
use crate::error::{Error, Result};
use crate::lorentz::{certify_disjoint, DisjointnessCertificate, StepProfile, DISJOINTNESS_PROBES};
use crate::measure::{Atom, IndicatorSet, McOptions, Operator};
use crate::rng::SampleRng;
use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

type Q = Rational64;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn to_f64(x: Q) -> f64 {
    x.to_f64().unwrap()
}

/// `1/p_d = 2/(d+1)`.
pub fn inv_p_d(d: usize) -> Q {
    q(2, d as i64 + 1)
}

/// `1/q_d = 2(d-1)/(d(d+1))`.
pub fn inv_q_d(d: usize) -> Q {
    let d = d as i64;
    q(2 * (d - 1), d * (d + 1))
}

/// A point `(1/p, 1/q)` of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub inv_p: Q,
    pub inv_q: Q,
}

impl ExponentPair {
    pub fn new(inv_p: Q, inv_q: Q) -> Result<Self> {
        let unit = |x: Q| x >= Q::zero() && x <= Q::one();
        if !unit(inv_p) || !unit(inv_q) {
            return Err(Error::InvalidArgument(format!(
                "({inv_p}, {inv_q}) outside the unit square"
            )));
        }
        Ok(ExponentPair { inv_p, inv_q })
    }

    /// `(1/p_d, 1/q_d)`.
    pub fn vertex(d: usize) -> Self {
        ExponentPair {
            inv_p: inv_p_d(d),
            inv_q: inv_q_d(d),
        }
    }

    /// `(1/q_d', 1/p_d')`.
    pub fn dual_vertex(d: usize) -> Self {
        ExponentPair {
            inv_p: Q::one() - inv_q_d(d),
            inv_q: Q::one() - inv_p_d(d),
        }
    }

    /// Slack of the four defining inequalities; all must be `>= 0`.
    pub fn trapezoid_slack(&self, d: usize) -> [Q; 4] {
        let d = d as i64;
        let (a, b) = (self.inv_p, self.inv_q);
        let half = q(d * (d + 1), 2);
        [
            Q::one() + half * b - half * a,
            Q::from_integer(d) * b - Q::from_integer(d - 1) * a,
            Q::one() + Q::from_integer(d - 1) * b - Q::from_integer(d) * a,
            a - b,
        ]
    }
}

pub fn trapezoid_membership(pq: ExponentPair, d: usize) -> bool {
    pq.trapezoid_slack(d).iter().all(|s| *s >= Q::zero())
}

/// `d/q_d = (d-1)/p_d` and `1 + (d-1)/p_d' = d/q_d'`, exactly.
pub fn duality_identities(d: usize) -> (bool, bool) {
    let di = Q::from_integer(d as i64);
    let dm = Q::from_integer(d as i64 - 1);
    let (ip, iq) = (inv_p_d(d), inv_q_d(d));
    let first = di * iq == dm * ip;
    let second = Q::one() + dm * (Q::one() - ip) == di * (Q::one() - iq);
    (first, second)
}

/// Exponents of a multibump family as `(M exponent, base exponent)` of the
/// ratio between the image lower bound and the input norm.
fn u_le_q_exponents(d: usize, ip: Q, iq: Q, iu: Q) -> (Q, Q) {
    let (di, dm) = (Q::from_integer(d as i64), Q::from_integer(d as i64 - 1));
    (iq - iu, di * iq - dm * ip)
}

fn p_le_v_exponents(d: usize, ip: Q, iq: Q, iv: Q) -> (Q, Q) {
    let (di, dm) = (Q::from_integer(d as i64), Q::from_integer(d as i64 - 1));
    let c = |x: Q| Q::one() - x;
    (c(ip) - c(iv), Q::one() + dm * c(ip) - di * c(iq))
}

/// Checks at every `(1/p, 1/q, 1/u, 1/v)` that the `p_d <= v` family is the
/// `u <= q_d` family of the adjoint: its growth in `M` equals that of the
/// primal family at `(q', p', v', u')`, and its base exponent is the same
/// polynomial in `(1/p, 1/q)`.
pub fn duality_consistency(d: usize, points: &[(Q, Q, Q, Q)]) -> bool {
    let c = |x: Q| Q::one() - x;
    points.iter().all(|&(ip, iq, iu, iv)| {
        let dual = p_le_v_exponents(d, ip, iq, iv);
        let mapped = u_le_q_exponents(d, c(iq), c(ip), c(iv));
        let primal = u_le_q_exponents(d, ip, iq, iu);
        dual.0 == mapped.0 && dual.1 == primal.1
    })
}

/// Lorentz second index, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Index {
    Finite(Q),
    Infinite,
}

impl Index {
    pub fn recip(&self) -> Q {
        match self {
            Index::Finite(x) => x.recip(),
            Index::Infinite => Q::zero(),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Index::Finite(x) => to_f64(*x),
            Index::Infinite => f64::INFINITY,
        }
    }

    /// Hölder conjugate.
    pub fn conjugate(&self) -> Index {
        match self {
            Index::Finite(x) if *x == Q::one() => Index::Infinite,
            Index::Finite(x) => Index::Finite(*x / (*x - Q::one())),
            Index::Infinite => Index::Finite(Q::one()),
        }
    }
}

/// Least-squares line through `(log x, log value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2_fit: f64,
}

impl ScalingFit {
    pub fn fit(radii: &[f64], values: &[f64]) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::InvalidArgument("length mismatch".into()));
        }
        let mut distinct = radii.to_vec();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        if distinct.len() < 3 {
            return Err(Error::InvalidArgument(
                "a fit needs at least 3 distinct abscissae".into(),
            ));
        }
        if radii
            .iter()
            .chain(values)
            .any(|x| *x <= 0.0 || !x.is_finite())
        {
            return Err(Error::InvalidArgument(
                "log-log fit needs positive finite data".into(),
            ));
        }
        let xs: Vec<f64> = radii.iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = values.iter().map(|y| y.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let slope = sxy / sxx;
        let r2_fit = if syy == 0.0 {
            1.0
        } else {
            (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
        };
        Ok(ScalingFit {
            radii: radii.to_vec(),
            values: values.to_vec(),
            slope,
            intercept: my - slope * mx,
            r2_fit,
        })
    }
}

/// Sampling budget shared by the families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyOptions {
    /// Points at which pointwise lower bounds are probed.
    pub probes: usize,
    /// Quadrature cells per side for the operator.
    pub nodes: usize,
    pub volume_samples: usize,
    pub seed: u64,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        FamilyOptions {
            probes: 8,
            nodes: 64,
            volume_samples: 10_000,
            seed: 0,
        }
    }
}

impl FamilyOptions {
    fn volume(&self, tag: u64) -> McOptions {
        McOptions::new(self.volume_samples, SampleRng::derive_seed(self.seed, tag))
    }

    fn probe_seed(&self, tag: u64) -> u64 {
        SampleRng::derive_seed(self.seed, 0x5eed_0000 + tag)
    }
}

/// One line of a family CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub parameter: f64,
    pub measured: f64,
    pub predicted: f64,
    pub ratio: f64,
}

impl FamilyRow {
    pub fn new(parameter: f64, measured: f64, predicted: f64) -> Self {
        FamilyRow {
            parameter,
            measured,
            predicted,
            ratio: measured / predicted,
        }
    }
}

fn moment_curve(d: usize) -> Result<ComplexCurve> {
    ComplexCurve::monomial(d, d as u32)
}

fn require_moment(curve: &ComplexCurve) -> Result<()> {
    match curve.phi() {
        Phi::Monomial(n) if *n as usize == curve.d() => Ok(()),
        _ => Err(Error::InvalidCurve(
            "dilation families need phi(z) = z^d".into(),
        )),
    }
}

fn origin_atom(curve: &ComplexCurve, eps: f64) -> Atom {
    Atom::neighborhood(RealPoint::zeros(curve.d()), eps)
}

fn origin_ball(curve: &ComplexCurve, radius: f64) -> Atom {
    Atom::ball(RealPoint::zeros(curve.d()), radius)
}

/// `r ↦ inf_{D_r B(0,1)} T χ_{D_r N(0,1)} · |D_r B(0,1)|^{1/q}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakNormFamily {
    pub fit: ScalingFit,
    pub expected_slope: Q,
    pub rows: Vec<FamilyRow>,
}

/// `2 + d(d+1)/q`.
pub fn expected_weak_norm_slope(d: usize, q_exp: Q) -> Q {
    let d = d as i64;
    Q::from_integer(2) + Q::from_integer(d * (d + 1)) / q_exp
}

pub fn scaling_family_weak_norm(
    curve: &ComplexCurve,
    r_list: &[f64],
    q_exp: Q,
    opts: FamilyOptions,
) -> Result<WeakNormFamily> {
    require_moment(curve)?;
    if r_list.iter().any(|r| *r <= 0.0 || *r > 1.0) {
        return Err(Error::InvalidArgument("radii must lie in (0, 1]".into()));
    }
    let op = Operator::on_disk(curve);
    let inv_q = to_f64(q_exp.recip());
    let mut values = Vec::new();
    let mut rows = Vec::new();
    for &r in r_list {
        let e = IndicatorSet::single(curve, origin_atom(curve, 1.0).dilated(r))?;
        let g = IndicatorSet::single(curve, origin_ball(curve, 1.0).dilated(r))?;
        let min = op.sampled_minimum(&e, &g, opts.probes, opts.nodes, opts.probe_seed(0), false)?;
        let vol_g = g.volume(opts.volume(0)).value;
        let value = min.min * vol_g.powf(inv_q);
        let predicted = curve.disk_measure(r).unwrap() * vol_g.powf(inv_q);
        values.push(value);
        rows.push(FamilyRow::new(r, value, predicted));
    }
    Ok(WeakNormFamily {
        fit: ScalingFit::fit(r_list, &values)?,
        expected_slope: expected_weak_norm_slope(curve.d(), q_exp),
        rows,
    })
}

/// Volume and weak-norm exponents of the `N(0, ε)` family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonFamily {
    pub volume: ScalingFit,
    pub weak_norm: ScalingFit,
    pub expected_volume_slope: Q,
    pub expected_weak_slope: Q,
    /// `2d/q - 2(d-1)/p`; restricted weak type at `(p, q)` needs it `>= 0`.
    pub necessary_slack: Q,
}

pub fn epsilon_family_check(
    curve: &ComplexCurve,
    eps_list: &[f64],
    p_exp: Q,
    q_exp: Q,
    opts: FamilyOptions,
) -> Result<EpsilonFamily> {
    if eps_list.iter().any(|e| *e <= 0.0 || *e >= 1.0) {
        return Err(Error::InvalidArgument("eps must lie in (0, 1)".into()));
    }
    let d = curve.d() as i64;
    let op = Operator::on_disk(curve);
    let inv_q = to_f64(q_exp.recip());
    let mut vols = Vec::new();
    let mut weak = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        let n = IndicatorSet::single(curve, origin_atom(curve, eps))?;
        let b = IndicatorSet::single(curve, origin_ball(curve, eps))?;
        vols.push(n.volume(opts.volume(i as u64)).value);
        let min = op.sampled_minimum(
            &n,
            &b,
            opts.probes,
            opts.nodes,
            opts.probe_seed(i as u64),
            false,
        )?;
        weak.push(min.min * b.volume(opts.volume(0)).value.powf(inv_q));
    }
    let two_d = Q::from_integer(2 * d);
    Ok(EpsilonFamily {
        volume: ScalingFit::fit(eps_list, &vols)?,
        weak_norm: ScalingFit::fit(eps_list, &weak)?,
        expected_volume_slope: Q::from_integer(2 * (d - 1)),
        expected_weak_slope: two_d / q_exp,
        necessary_slack: two_d / q_exp - Q::from_integer(2 * (d - 1)) / p_exp,
    })
}

/// Centres on the first axis, spaced by four times the largest bounding-box
/// diameter.
fn lattice(curve: &ComplexCurve, atoms: &[Atom], count: usize) -> Vec<RealPoint> {
    let diam = atoms
        .iter()
        .map(|a| a.bbox(curve).diameter())
        .fold(0.0, f64::max);
    let spacing = 4.0 * diam;
    (0..count)
        .map(|j| {
            let mut x = RealPoint::zeros(curve.d());
            x.0[0] = spacing * j as f64;
            x
        })
        .collect()
}

fn certify(curve: &ComplexCurve, atoms: &[Atom], seed: u64) -> Result<DisjointnessCertificate> {
    let sets: Vec<IndicatorSet> = atoms
        .iter()
        .map(|a| IndicatorSet::single(curve, a.clone()))
        .collect::<Result<_>>()?;
    let refs: Vec<&IndicatorSet> = sets.iter().collect();
    let cert = certify_disjoint(&refs, DISJOINTNESS_PROBES / 2, seed);
    if cert.hits > 0 {
        return Err(Error::PlacementFailure(format!(
            "{} cross-membership hits among {} bumps",
            cert.hits,
            atoms.len()
        )));
    }
    Ok(cert)
}

/// Bumps with their placement certificates and the measured pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bumps {
    pub certificates: Vec<DisjointnessCertificate>,
    /// `(value, volume)` of each bump of `f`.
    pub f_steps: Vec<(f64, f64)>,
    /// `(lower bound of the image, volume)` on each target set.
    pub image_steps: Vec<(f64, f64)>,
}

/// Places `sources[j]` and `targets[j]` at lattice point `j`, certifies both
/// families disjoint and measures `value_j * inf_{target_j} T χ_{source_j}`
/// (or `T*` when `adjoint`).
fn build_bumps(
    curve: &ComplexCurve,
    sources: Vec<(f64, Atom)>,
    targets: Vec<Atom>,
    adjoint: bool,
    opts: FamilyOptions,
) -> Result<Bumps> {
    let d = curve.d();
    let n = sources.len();
    let all: Vec<Atom> = sources
        .iter()
        .map(|(_, a)| a.clone())
        .chain(targets.iter().cloned())
        .collect();
    let centres = lattice(curve, &all, n);
    let place = |a: &Atom, c: &RealPoint| a.translated(c);
    let src: Vec<Atom> = sources
        .iter()
        .zip(&centres)
        .map(|((_, a), c)| place(a, c))
        .collect();
    let tgt: Vec<Atom> = targets
        .iter()
        .zip(&centres)
        .map(|(a, c)| place(a, c))
        .collect();
    let certificates = vec![
        certify(curve, &src, opts.probe_seed(101))?,
        certify(curve, &tgt, opts.probe_seed(102))?,
    ];
    let op = Operator::on_disk(curve);
    let mut f_steps = Vec::with_capacity(n);
    let mut image_steps = Vec::with_capacity(n);
    for j in 0..n {
        let s = IndicatorSet::single(curve, src[j].clone())?;
        let t = IndicatorSet::single(curve, tgt[j].clone())?;
        let value = sources[j].0;
        f_steps.push((value, s.volume(opts.volume(j as u64)).value));
        let min = op.sampled_minimum(
            &s,
            &t,
            opts.probes,
            opts.nodes,
            opts.probe_seed(j as u64),
            adjoint,
        )?;
        image_steps.push((
            value * min.min,
            t.volume(opts.volume(1000 + j as u64)).value,
        ));
    }
    debug_assert!(src.iter().all(|a| a.bbox(curve).lo.len() == 2 * d));
    Ok(Bumps {
        certificates,
        f_steps,
        image_steps,
    })
}

/// Fits of `‖f‖_{p_d,u}` and the lower bound of `‖𝒜f‖_{q_d,v}` against `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultibumpFits {
    pub norm: ScalingFit,
    pub lower: ScalingFit,
    pub expected_norm_slope: Q,
    pub expected_lower_slope: Q,
    pub certificates: Vec<DisjointnessCertificate>,
}

/// `f = Σ_{j<=M} ε^{-2(d-1)j/p_d} χ_{N(x_j, ε^j)}`, measured for every `M`
/// in `m_list`.
pub fn multibump_u_le_v(
    d: usize,
    m_list: &[usize],
    eps: f64,
    u: Index,
    v: Index,
    opts: FamilyOptions,
) -> Result<MultibumpFits> {
    let curve = moment_curve(d)?;
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::InvalidArgument("eps must lie in (0, 1)".into()));
    }
    let m_max = m_list.iter().copied().max().unwrap_or(0);
    if m_max == 0 {
        return Err(Error::InvalidArgument("empty M list".into()));
    }
    let p = to_f64(inv_p_d(d).recip());
    let qd = to_f64(inv_q_d(d).recip());
    let sources = (1..=m_max)
        .map(|j| {
            let ej = eps.powi(j as i32);
            let coeff = eps.powf(-2.0 * (d as f64 - 1.0) * j as f64 / p);
            (coeff, origin_atom(&curve, ej))
        })
        .collect();
    let targets = (1..=m_max)
        .map(|j| origin_ball(&curve, eps.powi(j as i32)))
        .collect();
    let bumps = build_bumps(&curve, sources, targets, false, opts)?;
    let mut norms = Vec::new();
    let mut lowers = Vec::new();
    for &m in m_list {
        norms.push(StepProfile::new(bumps.f_steps[..m].to_vec()).lorentz_norm(p, u.as_f64()));
        lowers.push(StepProfile::new(bumps.image_steps[..m].to_vec()).lorentz_norm(qd, v.as_f64()));
    }
    let ms: Vec<f64> = m_list.iter().map(|m| *m as f64).collect();
    Ok(MultibumpFits {
        norm: ScalingFit::fit(&ms, &norms)?,
        lower: ScalingFit::fit(&ms, &lowers)?,
        expected_norm_slope: u.recip(),
        expected_lower_slope: v.recip(),
        certificates: bumps.certificates,
    })
}

/// Measured against predicted values of one multibump construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultibumpReport {
    pub m: usize,
    pub norm: FamilyRow,
    pub lower: FamilyRow,
    pub certificates: Vec<DisjointnessCertificate>,
}

fn require_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument(
            "the construction needs M >= 2".into(),
        ));
    }
    Ok(())
}

/// `f = Σ_{j=1}^M 2^{2j} χ_{D_{r_j} N(x_j, ε_j)}` with `ε_j = 2^{-(M+j)p_d}`,
/// `r_j = 2^{-j}`. The image is bounded below on `D_{r_j} B(x_j, ε_j)` and
/// measured in `L^{q_d,∞}`.
pub fn multibump_u_le_qd(
    d: usize,
    m: usize,
    u: Index,
    opts: FamilyOptions,
) -> Result<MultibumpReport> {
    require_m(m)?;
    let curve = moment_curve(d)?;
    let p = to_f64(inv_p_d(d).recip());
    let qd = to_f64(inv_q_d(d).recip());
    let mut sources = Vec::new();
    let mut targets = Vec::new();
    for j in 1..=m {
        let eps = 2f64.powf(-((m + j) as f64) * p);
        let r = 2f64.powi(-(j as i32));
        sources.push((4f64.powi(j as i32), origin_atom(&curve, eps).dilated(r)));
        targets.push(origin_ball(&curve, eps).dilated(r));
    }
    let bumps = build_bumps(&curve, sources, targets, false, opts)?;
    let mf = m as f64;
    let df = d as f64;
    let norm = StepProfile::new(bumps.f_steps).lorentz_norm(p, u.as_f64());
    let norm_pred = mf.powf(to_f64(u.recip())) * 2f64.powf(-2.0 * mf * (df - 1.0));
    let lower = StepProfile::new(bumps.image_steps).lorentz_norm(qd, f64::INFINITY);
    let lower_pred = mf.powf(1.0 / qd) * 2f64.powf(-2.0 * df * mf * p / qd);
    Ok(MultibumpReport {
        m,
        norm: FamilyRow::new(mf, norm, norm_pred),
        lower: FamilyRow::new(mf, lower, lower_pred),
        certificates: bumps.certificates,
    })
}

/// The set where the adjoint lower bound is probed: `D_r N(0, ε/2)` over
/// parameters `|z| <= 1/2`, away from the rim where `𝒜* χ_{B_{ε,r}}` vanishes.
pub fn adjoint_core(curve: &ComplexCurve, eps: f64, r: f64) -> Atom {
    Atom::CurveNeighborhood {
        x: RealPoint::zeros(curve.d()),
        eps: eps / 2.0,
        domain_radius: 0.5,
    }
    .dilated(r)
}

/// `inf_{core} 𝒜* χ_{D_r B(0,ε)} / (ε² r²)`.
pub fn adjoint_constant(d: usize, eps: f64, r: f64, opts: FamilyOptions) -> Result<f64> {
    let curve = moment_curve(d)?;
    let op = Operator::on_disk(&curve);
    let b = IndicatorSet::single(&curve, origin_ball(&curve, eps).dilated(r))?;
    let core = IndicatorSet::single(&curve, adjoint_core(&curve, eps, r))?;
    let min = op.sampled_minimum(&b, &core, opts.probes, opts.nodes, opts.probe_seed(7), true)?;
    Ok(min.min / (eps * eps * r * r))
}

/// `f = Σ_{j=-1}^{-M} 2^{2j} χ_{D_{r_j} B(x_j, ε_j)}` with `ε_j = 2^{-(j+M)q_d'}`,
/// `r_j = 2^{j q_d'/q_d}`, measured in `L^{q_d', v'}`; the adjoint image is
/// bounded below on the cores of `D_{r_j} N(x_j, ε_j)` and measured in `L^{p_d'}`.
pub fn multibump_pd_le_v(
    d: usize,
    m: usize,
    v: Index,
    opts: FamilyOptions,
) -> Result<MultibumpReport> {
    require_m(m)?;
    let curve = moment_curve(d)?;
    let qd = to_f64(inv_q_d(d).recip());
    let qc = qd / (qd - 1.0);
    let p = to_f64(inv_p_d(d).recip());
    let pc = p / (p - 1.0);
    let mut sources = Vec::new();
    let mut targets = Vec::new();
    for k in 1..=m {
        let j = -(k as i32);
        let eps = 2f64.powf(-((j + m as i32) as f64) * qc);
        let r = 2f64.powf(j as f64 * qc / qd);
        sources.push((4f64.powi(j), origin_ball(&curve, eps).dilated(r)));
        targets.push(adjoint_core(&curve, eps, r));
    }
    let bumps = build_bumps(&curve, sources, targets, true, opts)?;
    let mf = m as f64;
    let df = d as f64;
    let vc = v.conjugate();
    let norm = StepProfile::new(bumps.f_steps).lorentz_norm(qc, vc.as_f64());
    let norm_pred = mf.powf(to_f64(vc.recip())) * 2f64.powf(-2.0 * df * mf);
    let lower = StepProfile::new(bumps.image_steps).lorentz_norm(pc, pc);
    let lower_pred =
        mf.powf(1.0 / pc) * 2f64.powf(-2.0 * mf * qc - 2.0 * mf * (df - 1.0) * qc / pc);
    Ok(MultibumpReport {
        m,
        norm: FamilyRow::new(mf, norm, norm_pred),
        lower: FamilyRow::new(mf, lower, lower_pred),
        certificates: bumps.certificates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vertices_are_tight() {
        for d in 2..=8 {
            let v = ExponentPair::vertex(d);
            assert!(trapezoid_membership(v, d));
            let s = v.trapezoid_slack(d);
            assert_eq!(s[0], Q::zero(), "d={d}");
            assert_eq!(s[1], Q::zero(), "d={d}");
            assert!(trapezoid_membership(ExponentPair::dual_vertex(d), d));
        }
        let one = ExponentPair::new(Q::one(), Q::one()).unwrap();
        assert!(trapezoid_membership(one, 2));
        let zero = ExponentPair::new(Q::zero(), Q::zero()).unwrap();
        assert!(trapezoid_membership(zero, 3));
    }

    #[test]
    fn outside_points() {
        let pq = ExponentPair::new(Q::one(), q(1, 10)).unwrap();
        assert!(pq.trapezoid_slack(2)[0] < Q::zero());
        assert!(!trapezoid_membership(pq, 2));
        assert!(ExponentPair::new(q(3, 2), Q::zero()).is_err());
    }

    #[test]
    fn identities_hold_exactly() {
        for d in 2..=10 {
            assert_eq!(duality_identities(d), (true, true));
        }
        let pts: Vec<(Q, Q, Q, Q)> = (1..5)
            .flat_map(|a| (1..5).map(move |b| (q(a, 5), q(b, 6), q(a, 7), q(b, 3))))
            .collect();
        assert!(duality_consistency(3, &pts));
    }

    #[test]
    fn fit_recovers_power() {
        let r = [0.5, 0.25, 0.125, 0.0625];
        let v: Vec<f64> = r.iter().map(|x: &f64| 3.0 * x.powf(4.0)).collect();
        let f = ScalingFit::fit(&r, &v).unwrap();
        assert_relative_eq!(f.slope, 4.0, max_relative = 1e-12);
        assert_relative_eq!(f.r2_fit, 1.0, max_relative = 1e-12);
        assert!(ScalingFit::fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn index_conjugates() {
        let three_halves = Index::Finite(q(3, 2));
        assert_eq!(three_halves.conjugate(), Index::Finite(Q::from_integer(3)));
        assert_eq!(Index::Finite(Q::one()).conjugate(), Index::Infinite);
        assert_eq!(Index::Infinite.recip(), Q::zero());
    }

    #[test]
    fn expected_slopes() {
        assert_eq!(
            expected_weak_norm_slope(2, Q::from_integer(3)),
            Q::from_integer(4)
        );
        assert_eq!(
            expected_weak_norm_slope(3, Q::from_integer(3)),
            Q::from_integer(6)
        );
    }

    #[test]
    fn weak_norm_family_rejects_degenerate_radii() {
        let c = moment_curve(2).unwrap();
        let opts = FamilyOptions {
            probes: 1,
            nodes: 8,
            volume_samples: 10,
            seed: 0,
        };
        let r = scaling_family_weak_norm(&c, &[1.0, 1.0, 1.0], Q::from_integer(3), opts);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
        let c5 = ComplexCurve::monomial(2, 5).unwrap();
        assert!(
            scaling_family_weak_norm(&c5, &[0.5, 0.25, 0.125], Q::from_integer(3), opts).is_err()
        );
    }

    #[test]
    fn epsilon_weak_slope_is_exact() {
        let c = moment_curve(2).unwrap();
        let opts = FamilyOptions {
            probes: 2,
            nodes: 32,
            volume_samples: 2000,
            seed: 1,
        };
        let f =
            epsilon_family_check(&c, &[0.05, 0.1, 0.2], q(3, 2), Q::from_integer(3), opts).unwrap();
        assert_relative_eq!(f.weak_norm.slope, 4.0 / 3.0, max_relative = 1e-9);
        assert_eq!(f.expected_weak_slope, q(4, 3));
        assert_eq!(f.necessary_slack, Q::zero());
        assert!((f.volume.slope - 2.0).abs() < 0.15);
    }

    #[test]
    fn single_bump_is_finite() {
        let opts = FamilyOptions {
            probes: 2,
            nodes: 24,
            volume_samples: 1000,
            seed: 2,
        };
        let r = multibump_u_le_v(
            2,
            &[1, 2, 3],
            0.125,
            Index::Finite(q(3, 2)),
            Index::Finite(q(3, 2)),
            opts,
        )
        .unwrap();
        assert!(r.norm.values[0].is_finite() && r.lower.values[0] > 0.0);
        assert!(r.certificates.iter().all(|c| c.hits == 0));
    }

    #[test]
    fn m_one_rejected() {
        let opts = FamilyOptions::default();
        assert!(multibump_u_le_qd(2, 1, Index::Finite(q(3, 2)), opts).is_err());
        assert!(multibump_pd_le_v(2, 1, Index::Finite(q(3, 2)), opts).is_err());
    }

    #[test]
    fn adjoint_constant_within_factor_four() {
        let opts = FamilyOptions {
            probes: 8,
            nodes: 48,
            volume_samples: 1000,
            seed: 3,
        };
        let c = adjoint_constant(2, 0.25, 0.5, opts).unwrap();
        assert!((0.25..=4.0).contains(&c), "c = {c}");
    }
}
