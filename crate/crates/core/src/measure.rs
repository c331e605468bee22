//! Indicator sets in `R^{2d}`, the averaging operator along the curve and
//! its adjoint, and pairing functionals built on them.
//!
//! The operator is `T f(x) = ∫_Ω f(x - h(z)) dσ(z)` with `Ω = region ∩ {|z| <= R}`
//! and `dσ = affine_density dμ`; the adjoint uses `x + h(z)`.

use crate::curve::{ComplexCurve, Phi, RealPoint};
use crate::error::{Error, Result};
use crate::region::Region;
use crate::rng::{mc_mean, SampleRng};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::path::Path;

/// Nodes in the fallback net used by curve-neighbourhood membership.
pub const NET_NODES: usize = 512;
/// Relative tolerance on the sampled hypotheses of the trilinear estimates.
pub const HYPOTHESIS_TOLERANCE: f64 = 0.05;

const NET_ROWS: usize = 32;
const REFINE_FROM: usize = 4;
const RAY_ANGLES: usize = 48;
const RAY_SAMPLES: usize = 16;
const BISECTIONS: usize = 20;

/// Volume of the Euclidean unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // V_n = pi^{n/2} / Gamma(n/2 + 1), by the two-step recurrence
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => TAU / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Axis-aligned box `[lo, hi]` in `R^{2d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BBox {
    fn empty(dim: usize) -> Self {
        BBox {
            lo: vec![f64::INFINITY; dim],
            hi: vec![f64::NEG_INFINITY; dim],
        }
    }

    fn union(&mut self, other: &BBox) {
        for i in 0..self.lo.len() {
            self.lo[i] = self.lo[i].min(other.lo[i]);
            self.hi[i] = self.hi[i].max(other.hi[i]);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a > b)
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn diameter(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Projection onto the first coordinate pair.
    pub fn first_pair(&self) -> Rect {
        Rect {
            lo: Complex64::new(self.lo[0], self.lo[1]),
            hi: Complex64::new(self.hi[0], self.hi[1]),
        }
    }

    fn dilate(&self, r: f64) -> BBox {
        let scale = |v: &Vec<f64>| RealPoint(v.clone()).dilate(r).0;
        BBox {
            lo: scale(&self.lo),
            hi: scale(&self.hi),
        }
    }
}

/// Rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: Complex64,
    pub hi: Complex64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.hi.re - self.lo.re).max(0.0) * (self.hi.im - self.lo.im).max(0.0)
    }

    /// `{a - w : w ∈ self}`.
    fn reflect_at(&self, a: Complex64) -> Rect {
        Rect {
            lo: a - self.hi,
            hi: a - self.lo,
        }
    }

    /// `{w - a : w ∈ self}`.
    fn shift(&self, a: Complex64) -> Rect {
        Rect {
            lo: self.lo - a,
            hi: self.hi - a,
        }
    }

    fn clip(&self, radius: f64) -> Rect {
        Rect {
            lo: Complex64::new(self.lo.re.max(-radius), self.lo.im.max(-radius)),
            hi: Complex64::new(self.hi.re.min(radius), self.hi.im.min(radius)),
        }
    }

    fn point(&self, s: f64, t: f64) -> Complex64 {
        Complex64::new(
            self.lo.re + (self.hi.re - self.lo.re) * s,
            self.lo.im + (self.hi.im - self.lo.im) * t,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    Box {
        center: RealPoint,
        half_widths: Vec<f64>,
    },
    Ball {
        center: RealPoint,
        radius: f64,
    },
    /// `N(x, eps) = x - h({|z| <= domain_radius}) + B(0, eps)`.
    CurveNeighborhood {
        x: RealPoint,
        eps: f64,
        #[serde(default = "one")]
        domain_radius: f64,
    },
    /// `D_r` applied to the inner atom.
    Dilated {
        r: f64,
        inner: Box<Atom>,
    },
}

fn one() -> f64 {
    1.0
}

impl Atom {
    pub fn ball(center: RealPoint, radius: f64) -> Atom {
        Atom::Ball { center, radius }
    }

    pub fn neighborhood(x: RealPoint, eps: f64) -> Atom {
        Atom::CurveNeighborhood {
            x,
            eps,
            domain_radius: 1.0,
        }
    }

    pub fn dilated(self, r: f64) -> Atom {
        Atom::Dilated {
            r,
            inner: Box::new(self),
        }
    }

    /// The same atom moved by `v`.
    pub fn translated(&self, v: &RealPoint) -> Atom {
        match self {
            Atom::Box {
                center,
                half_widths,
            } => Atom::Box {
                center: center.add(v),
                half_widths: half_widths.clone(),
            },
            Atom::Ball { center, radius } => Atom::Ball {
                center: center.add(v),
                radius: *radius,
            },
            Atom::CurveNeighborhood {
                x,
                eps,
                domain_radius,
            } => Atom::CurveNeighborhood {
                x: x.add(v),
                eps: *eps,
                domain_radius: *domain_radius,
            },
            Atom::Dilated { r, inner } => Atom::Dilated {
                r: *r,
                inner: Box::new(inner.translated(&v.dilate(1.0 / r))),
            },
        }
    }

    fn dim(&self) -> usize {
        match self {
            Atom::Box { center, .. } | Atom::Ball { center, .. } => center.0.len(),
            Atom::CurveNeighborhood { x, .. } => x.0.len(),
            Atom::Dilated { inner, .. } => inner.dim(),
        }
    }

    /// Closed-form volume, when one exists.
    pub fn exact_volume(&self) -> Option<f64> {
        match self {
            Atom::Box { half_widths, .. } => {
                Some(half_widths.iter().map(|w| 2.0 * w.max(0.0)).product())
            }
            Atom::Ball { center, radius } => {
                let n = center.0.len();
                Some(unit_ball_volume(n) * radius.max(0.0).powi(n as i32))
            }
            Atom::CurveNeighborhood { .. } => None,
            Atom::Dilated { r, inner } => {
                let d = inner.dim() as i32 / 2;
                inner.exact_volume().map(|v| v * r.powi(d * (d + 1)))
            }
        }
    }

    fn is_degenerate(&self) -> bool {
        match self {
            Atom::Box { half_widths, .. } => half_widths.iter().any(|w| *w <= 0.0),
            Atom::Ball { radius, .. } => *radius <= 0.0,
            Atom::CurveNeighborhood {
                eps, domain_radius, ..
            } => *eps <= 0.0 || *domain_radius <= 0.0,
            Atom::Dilated { r, inner } => *r <= 0.0 || inner.is_degenerate(),
        }
    }

    pub fn bbox(&self, curve: &ComplexCurve) -> BBox {
        match self {
            Atom::Box {
                center,
                half_widths,
            } => BBox {
                lo: center
                    .0
                    .iter()
                    .zip(half_widths)
                    .map(|(c, w)| c - w)
                    .collect(),
                hi: center
                    .0
                    .iter()
                    .zip(half_widths)
                    .map(|(c, w)| c + w)
                    .collect(),
            },
            Atom::Ball { center, radius } => BBox {
                lo: center.0.iter().map(|c| c - radius).collect(),
                hi: center.0.iter().map(|c| c + radius).collect(),
            },
            Atom::CurveNeighborhood {
                x,
                eps,
                domain_radius,
            } => {
                let d = curve.d();
                let mut lo = x.0.clone();
                let mut hi = x.0.clone();
                for j in 0..d {
                    let reach = coordinate_bound(curve, j, *domain_radius) + eps;
                    for k in [2 * j, 2 * j + 1] {
                        lo[k] -= reach;
                        hi[k] += reach;
                    }
                }
                BBox { lo, hi }
            }
            Atom::Dilated { r, inner } => inner.bbox(curve).dilate(*r),
        }
    }

    pub fn contains(&self, curve: &ComplexCurve, p: &RealPoint) -> bool {
        match self {
            Atom::Box {
                center,
                half_widths,
            } => {
                p.0.iter()
                    .zip(&center.0)
                    .zip(half_widths)
                    .all(|((x, c), w)| (x - c).abs() <= *w)
            }
            Atom::Ball { center, radius } => {
                p.0.iter()
                    .zip(&center.0)
                    .map(|(x, c)| (x - c).powi(2))
                    .sum::<f64>()
                    <= radius * radius
            }
            Atom::CurveNeighborhood {
                x,
                eps,
                domain_radius,
            } => Tube::new(curve, &p.sub(x), *eps, *domain_radius).contains(),
            Atom::Dilated { r, inner } => inner.contains(curve, &p.dilate(1.0 / r)),
        }
    }

    /// Draws a point of the atom with weight `1 / density`, so that
    /// `E[weight * g(p)] = ∫_atom g`.
    fn sample(&self, curve: &ComplexCurve, rng: &mut SampleRng) -> (RealPoint, f64) {
        self.draw(curve, rng, true)
    }

    /// As [`Atom::sample`]; with `weighted = false` the weight is skipped
    /// (and is meaningless), which saves the preimage area computation.
    fn draw(&self, curve: &ComplexCurve, rng: &mut SampleRng, weighted: bool) -> (RealPoint, f64) {
        match self {
            Atom::Box {
                center,
                half_widths,
            } => {
                let p = center
                    .0
                    .iter()
                    .zip(half_widths)
                    .map(|(c, w)| c + w * (2.0 * rng.uniform() - 1.0))
                    .collect();
                (RealPoint(p), self.exact_volume().unwrap())
            }
            Atom::Ball { center, radius } => {
                let b = rng.in_ball(center.0.len(), *radius);
                (center.add(&RealPoint(b)), self.exact_volume().unwrap())
            }
            Atom::CurveNeighborhood {
                x,
                eps,
                domain_radius,
            } => {
                // p = x - h(z0) + b with z0 uniform in the disk and b uniform in
                // the ball; the density of p is m(p) / (|disk| |ball|).
                let d = curve.d();
                let z0 = rng.in_disk(Complex64::new(0.0, 0.0), *domain_radius);
                let b = RealPoint(rng.in_ball(2 * d, *eps));
                let p = x.sub(&curve.eval(z0)).add(&b);
                if !weighted {
                    return (p, 1.0);
                }
                let tube = Tube::new(curve, &p.sub(x), *eps, *domain_radius);
                let m = tube.preimage_area(z0);
                let mass = PI
                    * domain_radius
                    * domain_radius
                    * unit_ball_volume(2 * d)
                    * eps.powi(2 * d as i32);
                (p, if m > 0.0 { mass / m } else { 0.0 })
            }
            Atom::Dilated { r, inner } => {
                let d = inner.dim() as i32 / 2;
                let (p, w) = inner.draw(curve, rng, weighted);
                (p.dilate(*r), w * r.powi(d * (d + 1)))
            }
        }
    }
}

/// `sup_{|z| <= radius} |h_j(z)|` for the 0-based coordinate `j`.
fn coordinate_bound(curve: &ComplexCurve, j: usize, radius: f64) -> f64 {
    if j + 1 < curve.d() {
        return radius.powi(j as i32 + 1);
    }
    match curve.phi() {
        Phi::Monomial(n) => radius.powi(*n as i32),
        Phi::Poly(c) => c
            .iter()
            .enumerate()
            .map(|(k, a)| a.norm() * radius.powi(k as i32))
            .sum(),
    }
}

/// `sup_{|z| <= radius} |h_j'(z)|` for the 0-based coordinate `j`.
fn lipschitz_bound(curve: &ComplexCurve, j: usize, radius: f64) -> f64 {
    if j + 1 < curve.d() {
        return (j + 1) as f64 * radius.powi(j as i32);
    }
    match curve.phi() {
        Phi::Monomial(0) => 0.0,
        Phi::Monomial(n) => f64::from(*n) * radius.powi(*n as i32 - 1),
        Phi::Poly(c) => c
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| k as f64 * a.norm() * radius.powi(k as i32 - 1))
            .sum(),
    }
}

/// The set `{w : |w| <= radius, |q + h(w)| <= eps}` for a fixed offset `q`;
/// `x + q` lies in `N(x, eps)` iff this set is non-empty.
struct Tube<'a> {
    curve: &'a ComplexCurve,
    q: Vec<Complex64>,
    eps: f64,
    radius: f64,
}

impl<'a> Tube<'a> {
    fn new(curve: &'a ComplexCurve, q: &RealPoint, eps: f64, radius: f64) -> Self {
        Tube {
            curve,
            q: (0..curve.d()).map(|j| q.pair(j)).collect(),
            eps,
            radius,
        }
    }

    fn phi(&self, w: Complex64, wd: Complex64) -> Complex64 {
        match self.curve.phi() {
            Phi::Monomial(n) if *n as usize == self.q.len() => wd,
            _ => self.curve.phi_derivative(w, 0),
        }
    }

    fn dist2(&self, w: Complex64) -> f64 {
        let d = self.q.len();
        let mut p = w;
        let mut s = 0.0;
        for qj in &self.q[..d - 1] {
            s += (qj + p).norm_sqr();
            p *= w;
        }
        s + (self.q[d - 1] + self.phi(w, p)).norm_sqr()
    }

    fn project(&self, w: Complex64) -> Complex64 {
        let n = w.norm();
        if n > self.radius {
            w * (self.radius / n)
        } else {
            w
        }
    }

    /// Projected Gauss-Newton descent on `|q + h(w)|^2`; returns the final
    /// iterate and its squared distance.
    fn descend(&self, mut w: Complex64) -> (Complex64, f64) {
        let d = self.q.len();
        let target = self.eps * self.eps;
        let mut f = self.dist2(w);
        for _ in 0..40 {
            if f <= target {
                break;
            }
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            let mut p = Complex64::new(1.0, 0.0);
            for j in 0..d - 1 {
                let jac = (j + 1) as f64 * p;
                p *= w;
                num += jac.conj() * (self.q[j] + p);
                den += jac.norm_sqr();
            }
            let jac = self.curve.phi_derivative(w, 1);
            num += jac.conj() * (self.q[d - 1] + self.phi(w, p * w));
            den += jac.norm_sqr();
            let step = -num / den;
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..8 {
                let cand = self.project(w + step * t);
                let fc = self.dist2(cand);
                if fc < f {
                    w = cand;
                    f = fc;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved || (step * t).norm() < 1e-13 * (1.0 + w.norm()) {
                break;
            }
        }
        (w, f)
    }

    fn contains(&self) -> bool {
        let target = self.eps * self.eps;
        // the first coordinate pins w to the disk around c
        let c = -self.q[0];
        if c.norm() > self.radius + self.eps {
            return false;
        }
        // the bound must hold along segments from c, which may leave the disk
        let rho = c.norm() + self.eps;
        let mut p = c;
        for j in 1..self.q.len() {
            let hj = if j + 1 < self.q.len() {
                p *= c;
                p
            } else {
                self.phi(c, p * c)
            };
            let lower = (self.q[j] + hj).norm() - lipschitz_bound(self.curve, j, rho) * self.eps;
            if lower > self.eps {
                return false;
            }
        }
        let start = self.project(c);
        let (_, f) = self.descend(start);
        if f <= target {
            return true;
        }
        let mut best = [(f64::INFINITY, start); REFINE_FROM];
        for w in self.net(c) {
            let fw = self.dist2(w);
            if fw <= target {
                return true;
            }
            if fw < best[REFINE_FROM - 1].0 {
                best[REFINE_FROM - 1] = (fw, w);
                best.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            }
        }
        best.iter()
            .filter(|(f, _)| f.is_finite())
            .any(|(_, w)| self.descend(*w).1 <= target)
    }

    /// Grid over the lens `{|w - c| <= eps} ∩ {|w| <= radius}`, laid out in
    /// coordinates along and across the axis through `c`.
    fn net(&self, c: Complex64) -> impl Iterator<Item = Complex64> + '_ {
        let s = c.norm();
        let axis = if s > 0.0 {
            c / s
        } else {
            Complex64::new(1.0, 0.0)
        };
        let across = axis * Complex64::new(0.0, 1.0);
        let umax = self.eps.min(self.radius);
        let (nu, nt) = (NET_ROWS, NET_NODES / NET_ROWS);
        (0..nu).flat_map(move |i| {
            let u = umax * (2.0 * (i as f64 + 0.5) / nu as f64 - 1.0);
            let lo = (s - (self.eps * self.eps - u * u).sqrt())
                .max(-(self.radius * self.radius - u * u).sqrt());
            let hi = (s + (self.eps * self.eps - u * u).sqrt())
                .min((self.radius * self.radius - u * u).sqrt());
            let count = if hi > lo { nt } else { 0 };
            (0..count).map(move |k| {
                let t = lo + (hi - lo) * (k as f64 + 0.5) / nt as f64;
                axis * t + across * u
            })
        })
    }

    fn inside(&self, w: Complex64) -> bool {
        w.norm() <= self.radius && self.dist2(w) <= self.eps * self.eps
    }

    /// Area of the tube's parameter set, by ray casting from a point `z0`
    /// known to lie in it.
    fn preimage_area(&self, z0: Complex64) -> f64 {
        let reach = 2.0 * self.eps;
        let dtheta = TAU / RAY_ANGLES as f64;
        let mut area = 0.0;
        for a in 0..RAY_ANGLES {
            let dir = Complex64::from_polar(1.0, (a as f64 + 0.5) * dtheta);
            let at = |s: f64| self.inside(z0 + dir * s);
            let edge = |mut lo: f64, mut hi: f64, lo_in: bool| {
                for _ in 0..BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if at(mid) == lo_in {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let mut prev_s = 0.0;
            let mut prev_in = true;
            let mut open = Some(0.0);
            for k in 1..=RAY_SAMPLES {
                let s = reach * k as f64 / RAY_SAMPLES as f64;
                let now = at(s);
                if now != prev_in {
                    let b = edge(prev_s, s, prev_in);
                    match open.take() {
                        Some(a0) => area += 0.5 * (b * b - a0 * a0) * dtheta,
                        None => open = Some(b),
                    }
                }
                prev_s = s;
                prev_in = now;
            }
            if let Some(a0) = open {
                area += 0.5 * (reach * reach - a0 * a0) * dtheta;
            }
        }
        area
    }
}

/// Monte Carlo or exact volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub exact: bool,
}

impl VolumeEstimate {
    fn exact(value: f64) -> Self {
        VolumeEstimate {
            value,
            std_error: 0.0,
            n_samples: 0,
            exact: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VolumeMethod {
    /// Sample each atom from its own proposal and weight by `1 / multiplicity`.
    Importance,
    /// Hit-or-miss over the bounding box of the union.
    BoundingBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
}

impl McOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        McOptions { samples, seed }
    }
}

/// A finite union of atoms in `R^{2d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSet {
    curve: ComplexCurve,
    atoms: Vec<Atom>,
}

impl IndicatorSet {
    pub fn new(curve: &ComplexCurve, atoms: Vec<Atom>) -> Result<Self> {
        let dim = 2 * curve.d();
        if let Some(a) = atoms.iter().find(|a| a.dim() != dim) {
            return Err(Error::InvalidArgument(format!(
                "atom of dimension {} in R^{dim}",
                a.dim()
            )));
        }
        Ok(IndicatorSet {
            curve: curve.clone(),
            atoms,
        })
    }

    pub fn empty(curve: &ComplexCurve) -> Self {
        IndicatorSet {
            curve: curve.clone(),
            atoms: Vec::new(),
        }
    }

    pub fn single(curve: &ComplexCurve, atom: Atom) -> Result<Self> {
        Self::new(curve, vec![atom])
    }

    /// A box large enough to contain every point the operator can reach.
    pub fn everything(curve: &ComplexCurve, half_width: f64) -> Self {
        let d = curve.d();
        IndicatorSet {
            curve: curve.clone(),
            atoms: vec![Atom::Box {
                center: RealPoint::zeros(d),
                half_widths: vec![half_width; 2 * d],
            }],
        }
    }

    pub fn curve(&self) -> &ComplexCurve {
        &self.curve
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.iter().all(Atom::is_degenerate)
    }

    pub fn dilated(&self, r: f64) -> IndicatorSet {
        IndicatorSet {
            curve: self.curve.clone(),
            atoms: self.atoms.iter().map(|a| a.clone().dilated(r)).collect(),
        }
    }

    pub fn translated(&self, v: &RealPoint) -> IndicatorSet {
        IndicatorSet {
            curve: self.curve.clone(),
            atoms: self.atoms.iter().map(|a| a.translated(v)).collect(),
        }
    }

    pub fn union(&self, other: &IndicatorSet) -> IndicatorSet {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        IndicatorSet {
            curve: self.curve.clone(),
            atoms,
        }
    }

    pub fn contains(&self, p: &RealPoint) -> bool {
        self.atoms.iter().any(|a| a.contains(&self.curve, p))
    }

    pub fn count_containing(&self, p: &RealPoint) -> usize {
        self.atoms
            .iter()
            .filter(|a| a.contains(&self.curve, p))
            .count()
    }

    pub fn bbox(&self) -> BBox {
        let mut b = BBox::empty(2 * self.curve.d());
        for a in &self.atoms {
            b.union(&a.bbox(&self.curve));
        }
        b
    }

    fn multiplicity(&self, own: usize, p: &RealPoint) -> f64 {
        let others = self
            .atoms
            .iter()
            .enumerate()
            .filter(|(i, a)| *i != own && a.contains(&self.curve, p))
            .count();
        (1 + others) as f64
    }

    /// Weighted draw from atom `i`, with the weight divided by the number of
    /// atoms covering the point so that sums over atoms integrate the union.
    pub fn sample_atom(&self, i: usize, rng: &mut SampleRng) -> (RealPoint, f64) {
        let (p, w) = self.atoms[i].sample(&self.curve, rng);
        if self.atoms.len() == 1 || w == 0.0 {
            return (p, w);
        }
        let m = self.multiplicity(i, &p);
        (p, w / m)
    }

    /// A point of the set, drawn from a uniformly chosen atom. Used to probe
    /// pointwise quantities, not to integrate.
    pub fn sample_point(&self, rng: &mut SampleRng) -> Option<RealPoint> {
        if self.atoms.is_empty() {
            return None;
        }
        let i = ((rng.uniform() * self.atoms.len() as f64) as usize).min(self.atoms.len() - 1);
        Some(self.atoms[i].draw(&self.curve, rng, false).0)
    }

    /// Exact when the set is a single closed-form atom (or empty); otherwise
    /// importance sampling.
    pub fn volume(&self, mc: McOptions) -> VolumeEstimate {
        self.volume_with(mc, VolumeMethod::Importance)
    }

    pub fn volume_with(&self, mc: McOptions, method: VolumeMethod) -> VolumeEstimate {
        if self.atoms.is_empty() {
            return VolumeEstimate::exact(0.0);
        }
        if self.atoms.len() == 1 {
            if let Some(v) = self.atoms[0].exact_volume() {
                return VolumeEstimate::exact(v);
            }
        }
        match method {
            VolumeMethod::Importance => {
                let (value, var) = self.stratified(mc, |_, _| 1.0);
                VolumeEstimate {
                    value,
                    std_error: var.sqrt(),
                    n_samples: mc.samples,
                    exact: false,
                }
            }
            VolumeMethod::BoundingBox => {
                let b = self.bbox();
                let vol = b.volume();
                let e = mc_mean(mc.samples, mc.seed, |rng| {
                    let p = RealPoint(
                        b.lo.iter()
                            .zip(&b.hi)
                            .map(|(lo, hi)| rng.range(*lo, *hi))
                            .collect(),
                    );
                    if self.contains(&p) {
                        vol
                    } else {
                        0.0
                    }
                });
                VolumeEstimate {
                    value: e.mean,
                    std_error: e.std_error,
                    n_samples: mc.samples,
                    exact: false,
                }
            }
        }
    }

    /// Allocation weights for stratified sampling: exact volumes where known,
    /// a short pilot estimate otherwise.
    fn atom_weights(&self, seed: u64) -> Vec<f64> {
        self.atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a.exact_volume().unwrap_or_else(|| {
                    let s = SampleRng::derive_seed(seed, 0x9170 + i as u64);
                    mc_mean(2048, s, |rng| a.sample(&self.curve, rng).1).mean
                })
            })
            .collect()
    }

    /// Stratified estimate of `∫_set g`, returning `(value, variance)`.
    /// Samples are split across atoms in proportion to their volumes and
    /// reduced in atom order.
    fn stratified<G>(&self, mc: McOptions, g: G) -> (f64, f64)
    where
        G: Fn(&RealPoint, &mut SampleRng) -> f64 + Sync,
    {
        let counts = if self.atoms.len() == 1 {
            vec![mc.samples]
        } else {
            allocate(mc.samples, &self.atom_weights(mc.seed))
        };
        let mut value = 0.0;
        let mut var = 0.0;
        for (i, n) in counts.into_iter().enumerate() {
            if n == 0 {
                continue;
            }
            let seed = SampleRng::derive_seed(mc.seed, i as u64);
            let e = mc_mean(n, seed, |rng| {
                let (p, w) = self.sample_atom(i, rng);
                if w == 0.0 {
                    0.0
                } else {
                    w * g(&p, rng)
                }
            });
            value += e.mean;
            var += e.std_error * e.std_error;
        }
        (value, var)
    }
}

/// Splits `n` samples proportionally to `weights`, at least one per
/// positive weight, by largest remainder.
fn allocate(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        let k = weights.len().max(1);
        return (0..weights.len())
            .map(|i| n / k + usize::from(i < n % k))
            .collect();
    }
    let ideal: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = ideal
        .iter()
        .zip(weights)
        .map(|(x, w)| {
            if *w > 0.0 {
                (x.floor() as usize).max(1)
            } else {
                0
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut assigned: usize = counts.iter().sum();
    for &i in order.iter().cycle().take(4 * weights.len()) {
        if assigned >= n {
            break;
        }
        if weights[i] > 0.0 {
            counts[i] += 1;
            assigned += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl PairingEstimate {
    /// Number of combined standard errors separating two estimates.
    pub fn z_score(&self, other: &PairingEstimate) -> f64 {
        let s = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        if s == 0.0 {
            if self.value == other.value {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.value - other.value).abs() / s
        }
    }
}

/// Minimum of a pointwise quantity over probe points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledMinimum {
    pub min: f64,
    pub witness: RealPoint,
    pub probes: usize,
}

/// `T` and `T*` over `Ω = region ∩ {|z| <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub curve: ComplexCurve,
    pub region: Region,
    pub radius: f64,
}

impl Operator {
    pub fn new(curve: &ComplexCurve, region: Region) -> Self {
        Operator {
            curve: curve.clone(),
            region,
            radius: 1.0,
        }
    }

    /// Full unit disk.
    pub fn on_disk(curve: &ComplexCurve) -> Self {
        Self::new(curve, Region::plane())
    }

    fn weight(&self, z: Complex64) -> f64 {
        if z.norm() <= self.radius && self.region.contains(z) {
            self.curve.affine_density(z)
        } else {
            0.0
        }
    }

    /// Parameters `z` that can move `x` into `set`: `x_1 - bbox_1(set)`, clipped.
    fn window(&self, set: &IndicatorSet, x1: Complex64, adjoint: bool) -> Rect {
        let b = set.bbox().first_pair();
        let r = if adjoint {
            b.shift(x1)
        } else {
            b.reflect_at(x1)
        };
        r.clip(self.radius)
    }

    fn apply_generic(&self, set: &IndicatorSet, x: &RealPoint, nodes: usize, adjoint: bool) -> f64 {
        if set.atoms.is_empty() {
            return 0.0;
        }
        let win = self.window(set, x.pair(0), adjoint);
        let area = win.area();
        if area == 0.0 {
            return 0.0;
        }
        let cell = area / (nodes * nodes) as f64;
        let row = |i: usize| {
            let mut buf = RealPoint::zeros(self.curve.d());
            let mut s = 0.0;
            for k in 0..nodes {
                let z = win.point(
                    (i as f64 + 0.5) / nodes as f64,
                    (k as f64 + 0.5) / nodes as f64,
                );
                let w = self.weight(z);
                if w == 0.0 {
                    continue;
                }
                self.curve.eval_into(z, &mut buf.0);
                for (b, xi) in buf.0.iter_mut().zip(&x.0) {
                    *b = if adjoint { xi + *b } else { xi - *b };
                }
                if set.contains(&buf) {
                    s += w;
                }
            }
            s
        };
        let rows: Vec<f64> = (0..nodes).into_par_iter().map(row).collect();
        rows.iter().sum::<f64>() * cell
    }

    /// `T χ_set (x)` by a midpoint rule with `nodes × nodes` cells over the
    /// parameter window that can reach the set.
    pub fn apply(&self, set: &IndicatorSet, x: &RealPoint, nodes: usize) -> f64 {
        self.apply_generic(set, x, nodes, false)
    }

    /// `T* χ_set (y)`.
    pub fn apply_star(&self, set: &IndicatorSet, y: &RealPoint, nodes: usize) -> f64 {
        self.apply_generic(set, y, nodes, true)
    }

    /// `σ(Ω)`, by polar quadrature.
    pub fn domain_measure(&self, nodes: usize) -> f64 {
        let dr = self.radius / nodes as f64;
        let dt = TAU / (4 * nodes) as f64;
        let mut s = 0.0;
        for i in 0..nodes {
            let rho = (i as f64 + 0.5) * dr;
            for k in 0..4 * nodes {
                let z = Complex64::from_polar(rho, (k as f64 + 0.5) * dt);
                s += self.weight(z) * rho * dr * dt;
            }
        }
        s
    }

    fn pairing_generic(
        &self,
        inner: &IndicatorSet,
        outer: &IndicatorSet,
        mc: McOptions,
        adjoint: bool,
    ) -> Result<PairingEstimate> {
        if outer.is_empty() {
            return Err(Error::EmptySet);
        }
        if inner.atoms.is_empty() {
            return Ok(PairingEstimate {
                value: 0.0,
                std_error: 0.0,
                n_samples: mc.samples,
                seed: mc.seed,
            });
        }
        let d = self.curve.d();
        // the parameter is drawn from the same stream right after x, so a
        // dilated pair of sets sees the dilated samples
        let (value, var) = outer.stratified(mc, |x, rng| {
            let win = self.window(inner, x.pair(0), adjoint);
            let area = win.area();
            if area == 0.0 {
                return 0.0;
            }
            let z = win.point(rng.uniform(), rng.uniform());
            let w = self.weight(z);
            if w == 0.0 {
                return 0.0;
            }
            let mut buf = RealPoint::zeros(d);
            self.curve.eval_into(z, &mut buf.0);
            for (b, xi) in buf.0.iter_mut().zip(&x.0) {
                *b = if adjoint { xi + *b } else { xi - *b };
            }
            if inner.contains(&buf) {
                area * w
            } else {
                0.0
            }
        });
        Ok(PairingEstimate {
            value,
            std_error: var.sqrt(),
            n_samples: mc.samples,
            seed: mc.seed,
        })
    }

    /// `⟨T χ_E, χ_F⟩`, sampling `x ∈ F` and one parameter per `x`.
    pub fn pairing(
        &self,
        e: &IndicatorSet,
        f: &IndicatorSet,
        mc: McOptions,
    ) -> Result<PairingEstimate> {
        self.pairing_generic(e, f, mc, false)
    }

    /// `⟨T* χ_F, χ_E⟩`, sampling `y ∈ E`. Equal to `pairing(E, F)` by Fubini.
    pub fn pairing_star(
        &self,
        f: &IndicatorSet,
        e: &IndicatorSet,
        mc: McOptions,
    ) -> Result<PairingEstimate> {
        if e.is_empty() {
            return Err(Error::EmptySet);
        }
        self.pairing_generic(f, e, mc, true)
    }

    /// `⟨T χ_E, χ_F⟩` with `x ∈ F` sampled and `T χ_E (x)` integrated by
    /// quadrature.
    pub fn pairing_quadrature(
        &self,
        e: &IndicatorSet,
        f: &IndicatorSet,
        mc: McOptions,
        nodes: usize,
    ) -> Result<PairingEstimate> {
        if f.is_empty() {
            return Err(Error::EmptySet);
        }
        let (value, var) = f.stratified(mc, |x, _| self.apply(e, x, nodes));
        Ok(PairingEstimate {
            value,
            std_error: var.sqrt(),
            n_samples: mc.samples,
            seed: mc.seed,
        })
    }

    /// Minimum of `T χ_set` (or `T* χ_set`) over `probes` points drawn from `on`.
    pub fn sampled_minimum(
        &self,
        set: &IndicatorSet,
        on: &IndicatorSet,
        probes: usize,
        nodes: usize,
        seed: u64,
        adjoint: bool,
    ) -> Result<SampledMinimum> {
        let points: Vec<RealPoint> = (0..probes)
            .map(|i| on.sample_point(&mut SampleRng::new(seed, i as u64)))
            .collect::<Option<_>>()
            .ok_or(Error::EmptySet)?;
        let mut best: Option<SampledMinimum> = None;
        for p in points {
            let v = self.apply_generic(set, &p, nodes, adjoint);
            if best.as_ref().is_none_or(|b| v < b.min) {
                best = Some(SampledMinimum {
                    min: v,
                    witness: p,
                    probes,
                });
            }
        }
        best.ok_or(Error::EmptySet)
    }
}

/// `α = ⟨Tχ_E, χ_F⟩ / |F|` and `β = ⟨Tχ_E, χ_F⟩ / |E|`, so that
/// `α |F| = β |E|` holds by construction.
pub fn alpha_beta(vol_e: f64, vol_f: f64, pairing: f64) -> Result<(f64, f64)> {
    if vol_e <= 0.0 || vol_f <= 0.0 {
        return Err(Error::EmptySet);
    }
    Ok((pairing / vol_f, pairing / vol_e))
}

/// `p_d = (d + 1) / 2`.
pub fn p_d(d: usize) -> f64 {
    (d as f64 + 1.0) / 2.0
}

/// `q_d = d (d + 1) / (2 (d - 1))`.
pub fn q_d(d: usize) -> f64 {
    let d = d as f64;
    d * (d + 1.0) / (2.0 * (d - 1.0))
}

/// Conjugate exponent.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `⟨Tχ_E, χ_F⟩ / (|E|^{1/p_d} |F|^{1/q_d'})`.
pub fn rwt_ratio(pairing: f64, vol_e: f64, vol_f: f64, d: usize) -> Result<f64> {
    if vol_e <= 0.0 || vol_f <= 0.0 {
        return Err(Error::EmptySet);
    }
    let qp = conjugate(q_d(d));
    Ok(pairing / (vol_e.powf(1.0 / p_d(d)) * vol_f.powf(1.0 / qp)))
}

/// Declared lower bounds for the E-form trilinear estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrilinearE {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
}

/// `|E_2| / (α_1^{d(d+1)/2} (β/α_1)^{d-1} (α_2/α_1)^d)`.
pub fn trilinear_e_ratio(d: usize, vol_e2: f64, t: TrilinearE) -> f64 {
    let d = d as i32;
    let denom = t.alpha1.powi(d * (d + 1) / 2)
        * (t.beta / t.alpha1).powi(d - 1)
        * (t.alpha2 / t.alpha1).powi(d);
    vol_e2 / denom
}

/// Exponents `(r_1, r_2, s_1, s_2)` of the F-form trilinear estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentTuple {
    pub r1: i64,
    pub r2: i64,
    pub s1: i64,
    pub s2: i64,
}

impl ExponentTuple {
    pub fn new(r1: i64, r2: i64, s1: i64, s2: i64) -> Self {
        ExponentTuple { r1, r2, s1, s2 }
    }

    /// The shipped tuple: `(1, 0, 0, 2)` for `d = 2`, `(3, 0, 1, 2)` for `d = 3`.
    pub fn default_for(d: usize) -> Option<Self> {
        match d {
            2 => Some(Self::new(1, 0, 0, 2)),
            3 => Some(Self::new(3, 0, 1, 2)),
            _ => None,
        }
    }

    /// Checks `r1 + r2 = d(d-1)/2`, `s1 + s2 = d` and `s2/q_d' - r2/q_d - 1 > 0`
    /// in exact arithmetic.
    pub fn validate(&self, d: usize) -> Result<()> {
        use num_rational::Rational64 as Q;
        let di = d as i64;
        if [self.r1, self.r2, self.s1, self.s2].iter().any(|x| *x < 0) {
            return Err(Error::BadExponents(format!(
                "{self:?} has a negative entry"
            )));
        }
        if self.r1 + self.r2 != di * (di - 1) / 2 {
            return Err(Error::BadExponents(format!(
                "r1 + r2 = {} but d(d-1)/2 = {}",
                self.r1 + self.r2,
                di * (di - 1) / 2
            )));
        }
        if self.s1 + self.s2 != di {
            return Err(Error::BadExponents(format!(
                "s1 + s2 = {} but d = {di}",
                self.s1 + self.s2
            )));
        }
        let inv_q = Q::new(2 * (di - 1), di * (di + 1));
        let inv_qp = Q::from_integer(1) - inv_q;
        let slack = Q::from_integer(self.s2) * inv_qp - Q::from_integer(self.r2) * inv_q - 1;
        if slack <= Q::from_integer(0) {
            return Err(Error::BadExponents(format!(
                "s2/q' - r2/q - 1 = {slack} is not positive"
            )));
        }
        Ok(())
    }
}

/// Measured bounds for the F-form trilinear estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrilinearF {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// `|F_2| / (α_1^{r_1} α_2^{r_2} β_1^{s_1} β_2^{s_2})`.
pub fn trilinear_f_ratio(d: usize, vol_f2: f64, t: TrilinearF, e: ExponentTuple) -> Result<f64> {
    e.validate(d)?;
    let p = |x: f64, k: i64| x.powi(k as i32);
    Ok(vol_f2 / (p(t.alpha1, e.r1) * p(t.alpha2, e.r2) * p(t.beta1, e.s1) * p(t.beta2, e.s2)))
}

/// Fails unless `measured >= declared (1 - tolerance)`.
pub fn check_hypothesis(name: &str, measured: f64, declared: f64) -> Result<()> {
    if measured < declared * (1.0 - HYPOTHESIS_TOLERANCE) {
        return Err(Error::HypothesisViolated(format!(
            "{name}: sampled minimum {measured:.6e} below declared {declared:.6e}"
        )));
    }
    Ok(())
}

/// Fails unless `lo <= hi` up to the hypothesis tolerance.
pub fn check_order(name: &str, lo: f64, hi: f64) -> Result<()> {
    if lo > hi * (1.0 + HYPOTHESIS_TOLERANCE) {
        return Err(Error::HypothesisViolated(format!(
            "{name}: {lo:.6e} exceeds {hi:.6e}"
        )));
    }
    Ok(())
}

/// Sampling budget for the trilinear checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrilinearOptions {
    pub probes: usize,
    pub nodes: usize,
    pub volume: McOptions,
    pub seed: u64,
}

/// Result of an E-form check: the verified bounds and the ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrilinearEReport {
    pub declared: TrilinearE,
    pub min1: SampledMinimum,
    pub min2: SampledMinimum,
    pub vol_e1: f64,
    pub vol_e2: f64,
    pub vol_g: f64,
    pub ratio: f64,
}

impl Operator {
    /// Verifies `T χ_{E_i} >= α_i` on sampled points of `G` and `α_1 <= α_2`,
    /// then reports the E-form ratio with `β = α_1 |G| / |E_1|`.
    pub fn trilinear_ratio_e(
        &self,
        e1: &IndicatorSet,
        e2: &IndicatorSet,
        g: &IndicatorSet,
        alpha: (f64, f64),
        opts: TrilinearOptions,
    ) -> Result<TrilinearEReport> {
        let d = self.curve.d();
        let (alpha1, alpha2) = alpha;
        check_order("alpha1 <= alpha2", alpha1, alpha2)?;
        let min1 = self.sampled_minimum(e1, g, opts.probes, opts.nodes, opts.seed, false)?;
        let min2 = self.sampled_minimum(e2, g, opts.probes, opts.nodes, opts.seed, false)?;
        check_hypothesis("T chi_E1 on G", min1.min, alpha1)?;
        check_hypothesis("T chi_E2 on G", min2.min, alpha2)?;
        let vol_e1 = e1.volume(opts.volume).value;
        let vol_e2 = e2.volume(opts.volume).value;
        let vol_g = g.volume(opts.volume).value;
        if vol_e1 <= 0.0 || vol_e2 <= 0.0 || vol_g <= 0.0 {
            return Err(Error::EmptySet);
        }
        let declared = TrilinearE {
            alpha1,
            alpha2,
            beta: alpha1 * vol_g / vol_e1,
        };
        Ok(TrilinearEReport {
            declared,
            ratio: trilinear_e_ratio(d, vol_e2, declared),
            min1,
            min2,
            vol_e1,
            vol_e2,
            vol_g,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrilinearFReport {
    pub measured: TrilinearF,
    pub exponents: ExponentTuple,
    pub vol_f1: f64,
    pub vol_f2: f64,
    pub vol_e: f64,
    pub ratio: f64,
}

impl Operator {
    /// Measures `β_i` as sampled minima of `T* χ_{F_i}` on `E`, takes
    /// `α_i = β_i |E| / |F_i|` (a valid average lower bound since the
    /// pointwise bound holds on all of `E`), checks the ordering hypotheses
    /// and reports the F-form ratio.
    pub fn trilinear_ratio_f(
        &self,
        f1: &IndicatorSet,
        f2: &IndicatorSet,
        e: &IndicatorSet,
        exponents: ExponentTuple,
        opts: TrilinearOptions,
    ) -> Result<TrilinearFReport> {
        let d = self.curve.d();
        exponents.validate(d)?;
        let b1 = self.sampled_minimum(f1, e, opts.probes, opts.nodes, opts.seed, true)?;
        let b2 = self.sampled_minimum(f2, e, opts.probes, opts.nodes, opts.seed, true)?;
        let vol_f1 = f1.volume(opts.volume).value;
        let vol_f2 = f2.volume(opts.volume).value;
        let vol_e = e.volume(opts.volume).value;
        if vol_f1 <= 0.0 || vol_f2 <= 0.0 || vol_e <= 0.0 {
            return Err(Error::EmptySet);
        }
        let measured = TrilinearF {
            beta1: b1.min,
            beta2: b2.min,
            alpha1: b1.min * vol_e / vol_f1,
            alpha2: b2.min * vol_e / vol_f2,
        };
        check_order("beta1 <= beta2", measured.beta1, measured.beta2)?;
        check_order("alpha2 <= alpha1", measured.alpha2, measured.alpha1)?;
        Ok(TrilinearFReport {
            ratio: trilinear_f_ratio(d, vol_f2, measured, exponents)?,
            measured,
            exponents,
            vol_f1,
            vol_f2,
            vol_e,
        })
    }
}

/// Appends one row to a pairing log, writing the header for a new file.
pub fn append_pairing_log(
    path: &Path,
    experiment_id: &str,
    e: &PairingEstimate,
) -> std::io::Result<()> {
    let fresh = !path.exists();
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(["experiment_id", "value", "std_error", "n_samples", "seed"])?;
    }
    w.write_record([
        experiment_id.to_string(),
        format!("{:e}", e.value),
        format!("{:e}", e.std_error),
        e.n_samples.to_string(),
        e.seed.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn curve(d: usize) -> ComplexCurve {
        ComplexCurve::monomial(d, d as u32).unwrap()
    }

    fn nbhd(c: &ComplexCurve, eps: f64) -> IndicatorSet {
        IndicatorSet::single(c, Atom::neighborhood(RealPoint::zeros(c.d()), eps)).unwrap()
    }

    fn ball(c: &ComplexCurve, r: f64) -> IndicatorSet {
        IndicatorSet::single(c, Atom::ball(RealPoint::zeros(c.d()), 1.0).dilated(r)).unwrap()
    }

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-15);
        assert_relative_eq!(unit_ball_volume(4), PI * PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(unit_ball_volume(6), PI.powi(3) / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn membership_examples() {
        let c = curve(2);
        let b = Atom::Box {
            center: RealPoint::zeros(2),
            half_widths: vec![1.0; 4],
        };
        assert!(b.contains(&c, &RealPoint::zeros(2)));
        let dil = Atom::ball(RealPoint::zeros(2), 1.0).dilated(2.0);
        assert!(dil.contains(&c, &RealPoint(vec![2.0, 0.0, 0.0, 0.0])));
        assert!(!dil.contains(&c, &RealPoint(vec![2.0001, 0.0, 0.0, 0.0])));
        let n = nbhd(&c, 0.1);
        let p = c.eval(Complex64::new(0.5, 0.0));
        assert!(n.contains(&RealPoint(p.0.iter().map(|x| -x).collect())));
    }

    #[test]
    fn neighbourhood_contains_its_generators() {
        for d in [2, 3, 4] {
            let c = curve(d);
            let n = nbhd(&c, 0.3);
            for i in 0..2000 {
                let mut rng = SampleRng::new(5, i);
                let b = RealPoint(rng.in_ball(2 * d, 0.3 * 0.999));
                let z = rng.in_disk(Complex64::new(0.0, 0.0), 1.0);
                assert!(n.contains(&b.sub(&c.eval(z))), "d={d} sample {i}");
            }
        }
    }

    #[test]
    fn neighbourhood_rejects_far_points() {
        let c = curve(3);
        let n = nbhd(&c, 0.1);
        // first coordinate fine, last coordinate pushed off the curve
        let mut p = c.eval(Complex64::new(-0.4, 0.2));
        p.0.iter_mut().for_each(|x| *x = -*x);
        p.0[4] += 0.5;
        assert!(!n.contains(&p));
        // brute force: nothing on a fine grid of the disk comes within eps
        let q = p.clone();
        let mut nearest = f64::INFINITY;
        for i in 0..400 {
            for k in 0..400 {
                let w = Complex64::new(
                    -1.0 + (i as f64 + 0.5) / 200.0,
                    -1.0 + (k as f64 + 0.5) / 200.0,
                );
                if w.norm() <= 1.0 {
                    nearest = nearest.min(q.add(&c.eval(w)).norm());
                }
            }
        }
        assert!(nearest > 0.1);
    }

    #[test]
    fn dilated_box_volume_is_exact() {
        for d in [2usize, 3] {
            let b = Atom::Box {
                center: RealPoint::zeros(d),
                half_widths: vec![0.5; 2 * d],
            };
            let r: f64 = 0.3;
            let v = b.clone().dilated(r).exact_volume().unwrap();
            assert_relative_eq!(v, r.powi((d * (d + 1)) as i32), max_relative = 1e-14);
        }
        let c = curve(2);
        let e = IndicatorSet::empty(&c);
        assert_eq!(e.volume(McOptions::new(10, 0)).value, 0.0);
    }

    #[test]
    fn neighbourhood_volume_agrees_with_hit_or_miss() {
        let c = curve(2);
        let n = nbhd(&c, 1.0);
        let is = n.volume(McOptions::new(40_000, 1));
        let bb = n.volume_with(McOptions::new(400_000, 2), VolumeMethod::BoundingBox);
        let z = (is.value - bb.value).abs() / (is.std_error.hypot(bb.std_error));
        assert!(z < 3.0, "{is:?} vs {bb:?}");
    }

    #[test]
    fn neighbourhood_volume_is_translation_and_dilation_covariant() {
        let c = curve(3);
        let mc = McOptions::new(2000, 4);
        let base = nbhd(&c, 0.25).volume(mc).value;
        let moved = nbhd(&c, 0.25)
            .translated(&RealPoint(vec![3.0; 6]))
            .volume(mc)
            .value;
        assert_relative_eq!(base, moved, max_relative = 1e-9);
        let dil = nbhd(&c, 0.25).dilated(0.5).volume(mc).value;
        assert_relative_eq!(dil, base * 0.5f64.powi(12), max_relative = 1e-12);
    }

    #[test]
    fn union_volume_counts_overlap_once() {
        let c = curve(2);
        let a = Atom::Box {
            center: RealPoint::zeros(2),
            half_widths: vec![1.0; 4],
        };
        let b = a.translated(&RealPoint(vec![1.0, 0.0, 0.0, 0.0]));
        let u = IndicatorSet::new(&c, vec![a, b]).unwrap();
        let v = u.volume(McOptions::new(20_000, 3));
        // exact: 16 + 16 - 8
        assert!(
            (v.value - 24.0).abs() < 4.0 * v.std_error.max(1e-9),
            "{v:?}"
        );
    }

    #[test]
    fn apply_on_everything_is_domain_measure() {
        for d in [2, 3] {
            let c = curve(d);
            let op = Operator::on_disk(&c);
            let all = IndicatorSet::everything(&c, 100.0);
            let sigma = c.disk_measure(1.0).unwrap();
            for x in [RealPoint::zeros(d), RealPoint(vec![0.3; 2 * d])] {
                assert_relative_eq!(op.apply(&all, &x, 400), sigma, max_relative = 1e-3);
                assert_relative_eq!(op.apply_star(&all, &x, 400), sigma, max_relative = 1e-3);
            }
            assert_eq!(
                op.apply(&IndicatorSet::empty(&c), &RealPoint::zeros(d), 50),
                0.0
            );
            assert_relative_eq!(op.domain_measure(400), sigma, max_relative = 1e-4);
        }
    }

    #[test]
    fn apply_on_neighbourhood_at_unit_scale() {
        // every parameter in the disk reaches N(0,1) from x ∈ B(0,1)
        let c = curve(2);
        let op = Operator::on_disk(&c);
        let n = nbhd(&c, 1.0);
        let sigma = c.disk_measure(1.0).unwrap();
        for i in 0..4 {
            let x = RealPoint(SampleRng::new(8, i).in_ball(4, 1.0));
            assert_relative_eq!(op.apply(&n, &x, 400), sigma, max_relative = 1e-3);
        }
    }

    #[test]
    fn apply_on_dilated_neighbourhood_exceeds_small_disk_measure() {
        // parameters with r < |z| <= 1 also reach D_r N(0,1), so σ(|z| <= r)
        // is a strict lower bound below unit scale
        let c = curve(2);
        let op = Operator::on_disk(&c);
        let r = 0.25;
        let e = nbhd(&c, 1.0).dilated(r);
        let lower = c.disk_measure(r).unwrap();
        for i in 0..4 {
            let x = RealPoint(SampleRng::new(9, i).in_ball(4, 1.0)).dilate(r);
            let v = op.apply(&e, &x, 300);
            assert!(v >= lower * (1.0 - 1e-3), "{v} < {lower}");
        }
        let v0 = op.apply(&e, &RealPoint::zeros(2), 300);
        assert!(v0 > 1.2 * lower);
    }

    #[test]
    fn pairing_with_everything() {
        let c = curve(2);
        let op = Operator::on_disk(&c);
        let all = IndicatorSet::everything(&c, 100.0);
        let f = ball(&c, 0.5);
        let vf = f.volume(McOptions::new(1, 0)).value;
        let p = op.pairing(&all, &f, McOptions::new(50_000, 2)).unwrap();
        let expected = c.disk_measure(1.0).unwrap() * vf;
        assert!(
            (p.value - expected).abs() < 3.0 * p.std_error,
            "{p:?} vs {expected}"
        );
    }

    #[test]
    fn pairing_duality_on_random_instances() {
        let c = curve(2);
        let op = Operator::on_disk(&c);
        for i in 0..3u64 {
            let mut rng = SampleRng::new(77, i);
            let e = nbhd(&c, rng.range(0.3, 0.8)).translated(&RealPoint(rng.in_ball(4, 0.3)));
            let f = IndicatorSet::single(
                &c,
                Atom::ball(RealPoint(rng.in_ball(4, 0.3)), rng.range(0.5, 1.0)),
            )
            .unwrap();
            let a = op.pairing(&e, &f, McOptions::new(20_000, i)).unwrap();
            let b = op.pairing_star(&f, &e, McOptions::new(10_000, i)).unwrap();
            assert!(a.z_score(&b) < 3.0, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn pairing_is_deterministic_and_rejects_empty() {
        let c = curve(2);
        let op = Operator::on_disk(&c);
        let e = nbhd(&c, 0.5);
        let f = ball(&c, 1.0);
        let mc = McOptions::new(5000, 11);
        assert_eq!(
            op.pairing(&e, &f, mc).unwrap(),
            op.pairing(&e, &f, mc).unwrap()
        );
        assert_eq!(
            op.pairing(&e, &IndicatorSet::empty(&c), mc),
            Err(Error::EmptySet)
        );
        assert_eq!(
            op.pairing_star(&f, &IndicatorSet::empty(&c), mc),
            Err(Error::EmptySet)
        );
    }

    #[test]
    fn pairing_is_exactly_covariant_at_small_scales() {
        let c = curve(2);
        let op = Operator::on_disk(&c);
        let mc = McOptions::new(4000, 5);
        let at = |r: f64| {
            op.pairing(&nbhd(&c, 1.0).dilated(r), &ball(&c, r), mc)
                .unwrap()
                .value
        };
        let (a, b) = (at(0.25), at(0.125));
        assert_relative_eq!(b / a, 0.5f64.powi(8), max_relative = 1e-6);
    }

    #[test]
    fn pairing_monotone_in_e() {
        let c = curve(2);
        let op = Operator::on_disk(&c);
        let f = ball(&c, 1.0);
        let mc = McOptions::new(20_000, 3);
        let small = op.pairing(&nbhd(&c, 0.3), &f, mc).unwrap();
        let large = op.pairing(&nbhd(&c, 0.6), &f, mc).unwrap();
        assert!(small.value <= large.value + 3.0 * small.std_error.hypot(large.std_error));
    }

    #[test]
    fn alpha_beta_identity() {
        let (a, b) = alpha_beta(2.0, 3.0, 1.7).unwrap();
        assert_eq!(a * 3.0, b * 2.0);
        let (a, b) = alpha_beta(5.0, 5.0, 1.3).unwrap();
        assert_eq!(a, b);
        assert_eq!(alpha_beta(0.0, 1.0, 1.0), Err(Error::EmptySet));
        assert_eq!(rwt_ratio(1.0, 0.0, 1.0, 2), Err(Error::EmptySet));
    }

    #[test]
    fn rwt_exponents_for_d2() {
        assert_relative_eq!(1.0 / p_d(2), 2.0 / 3.0);
        assert_relative_eq!(1.0 / conjugate(q_d(2)), 2.0 / 3.0);
        assert_relative_eq!(q_d(3), 3.0);
        let r = rwt_ratio(8.0, 8.0, 8.0, 2).unwrap();
        assert_relative_eq!(r, 8.0 / 16.0, max_relative = 1e-14);
    }

    #[test]
    fn trilinear_e_reduces_for_d3() {
        let mut rng = SampleRng::new(1, 1);
        for _ in 0..100 {
            let t = TrilinearE {
                alpha1: rng.range(0.01, 2.0),
                alpha2: rng.range(0.01, 2.0),
                beta: rng.range(0.01, 2.0),
            };
            let v = rng.range(0.1, 10.0);
            let closed = v / (t.alpha1 * t.alpha2.powi(3) * t.beta.powi(2));
            assert_relative_eq!(trilinear_e_ratio(3, v, t), closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn exponent_tuples() {
        assert!(ExponentTuple::new(3, 0, 1, 2).validate(3).is_ok());
        assert!(ExponentTuple::default_for(2).unwrap().validate(2).is_ok());
        // sums right, s2/q' - r2/q - 1 = 2/3 - 1 < 0
        assert!(matches!(
            ExponentTuple::new(3, 0, 2, 1).validate(3),
            Err(Error::BadExponents(_))
        ));
        assert!(matches!(
            ExponentTuple::new(2, 0, 1, 2).validate(3),
            Err(Error::BadExponents(_))
        ));
        assert!(matches!(
            ExponentTuple::new(3, 0, 1, 1).validate(3),
            Err(Error::BadExponents(_))
        ));
        // zero slack: 2 (2/3) - 1/3 - 1 = 0
        assert!(ExponentTuple::new(0, 1, 0, 2).validate(2).is_err());
        let t = TrilinearF {
            alpha1: 1.0,
            alpha2: 1.0,
            beta1: 1.0,
            beta2: 1.0,
        };
        assert!(trilinear_f_ratio(3, 1.0, t, ExponentTuple::new(3, 0, 2, 1)).is_err());
    }

    #[test]
    fn hypothesis_checks() {
        assert!(check_hypothesis("a", 0.96, 1.0).is_ok());
        assert!(matches!(
            check_hypothesis("a", 0.94, 1.0),
            Err(Error::HypothesisViolated(_))
        ));
        assert!(check_order("o", 1.04, 1.0).is_ok());
        assert!(check_order("o", 1.06, 1.0).is_err());
    }

    #[test]
    fn trilinear_e_rejects_overstated_alpha() {
        let c = curve(2);
        let op = Operator::on_disk(&c);
        let e = nbhd(&c, 1.0).dilated(0.5);
        let g = ball(&c, 0.5);
        let opts = TrilinearOptions {
            probes: 4,
            nodes: 64,
            volume: McOptions::new(2000, 1),
            seed: 2,
        };
        let r = op.trilinear_ratio_e(&e, &e, &g, (10.0, 10.0), opts);
        assert!(matches!(r, Err(Error::HypothesisViolated(_))));
        let r = op.trilinear_ratio_e(&e, &e, &g, (0.5, 0.1), opts);
        assert!(matches!(r, Err(Error::HypothesisViolated(_))));
        let ok = op.trilinear_ratio_e(&e, &e, &g, (0.5, 0.5), opts).unwrap();
        assert!(ok.ratio > 0.0 && ok.ratio.is_finite());
    }

    #[test]
    fn allocation_sums() {
        assert_eq!(allocate(100, &[1.0, 1.0, 2.0]), vec![25, 25, 50]);
        assert_eq!(allocate(10, &[1.0, 0.0, 1e-9]).iter().sum::<usize>(), 10);
        assert_eq!(allocate(7, &[0.0, 0.0]).iter().sum::<usize>(), 7);
    }

    #[test]
    fn pairing_log_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let e = PairingEstimate {
            value: 1.5,
            std_error: 0.1,
            n_samples: 10,
            seed: 3,
        };
        append_pairing_log(&path, "a", &e).unwrap();
        append_pairing_log(&path, "b", &e).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "experiment_id,value,std_error,n_samples,seed");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("b,"));
    }
}
