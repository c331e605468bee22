//! The complex Jacobian of `(z_1, ..., z_d) -> sum h(z_i)`, its factorization
//! for monomial curves, region decompositions and empirical lower bounds.

use crate::curve::{ComplexCurve, Phi};
use crate::error::{Error, Result};
use crate::region::{CellMeta, Region, RegionKind};
use crate::rng::SampleRng;
use crate::roots;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Tunable constants of the region construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionParams {
    /// Gap annulus constant `A`.
    pub a: f64,
    /// Dyadic annulus constant `A_1`.
    pub a1: f64,
    /// Sector opening angle.
    pub sector_angle: f64,
    /// Residual tolerance for the roots of `phi'''`.
    pub root_tol: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            a: 4.0,
            a1: 2.0,
            sector_angle: PI / 16.0,
            root_tol: roots::DEFAULT_RESIDUAL_TOL,
        }
    }
}

/// Signed Vandermonde product `prod_{i<j} (z_j - z_i)`.
pub fn vandermonde(zs: &[Complex64]) -> Complex64 {
    let mut v = Complex64::new(1.0, 0.0);
    for j in 1..zs.len() {
        for i in 0..j {
            v *= zs[j] - zs[i];
        }
    }
    v
}

/// `|prod_{i<j} (z_j - z_i)|`, accumulated in moduli.
pub fn vandermonde_abs(zs: &[Complex64]) -> f64 {
    let mut v = 1.0;
    for j in 1..zs.len() {
        for i in 0..j {
            v *= (zs[j] - zs[i]).norm();
        }
    }
    v
}

/// Complete homogeneous symmetric polynomial `Q_m(z_1, ..., z_d)`.
pub fn complete_homogeneous(m: usize, zs: &[Complex64]) -> Complex64 {
    // h[j] = Q_j of the variables seen so far
    let mut h = vec![Complex64::new(0.0, 0.0); m + 1];
    h[0] = Complex64::new(1.0, 0.0);
    for z in zs {
        for j in 1..=m {
            let prev = h[j - 1];
            h[j] += z * prev;
        }
    }
    h[m]
}

fn check_len(curve: &ComplexCurve, zs: &[Complex64]) -> Result<()> {
    if zs.len() != curve.d() {
        return Err(Error::InvalidArgument(format!(
            "expected {} points, got {}",
            curve.d(),
            zs.len()
        )));
    }
    Ok(())
}

/// `det(h'(z_1), ..., h'(z_d))`.
pub fn jacobian_complex(curve: &ComplexCurve, zs: &[Complex64]) -> Result<Complex64> {
    check_len(curve, zs)?;
    let d = curve.d();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for (col, z) in zs.iter().enumerate() {
        for (row, v) in curve.derivative(*z, 1).into_iter().enumerate() {
            m[(row, col)] = v;
        }
    }
    Ok(m.determinant())
}

fn monomial_exponent(curve: &ComplexCurve) -> Result<u32> {
    match curve.phi() {
        Phi::Monomial(n) if *n as usize >= curve.d() => Ok(*n),
        _ => Err(Error::InvalidCurve(
            "operation requires a monomial curve with N >= d".into(),
        )),
    }
}

/// `N (d-1)! V(z) Q_{N-d}(z)`, the closed form of the monomial Jacobian.
pub fn factorized_jacobian(curve: &ComplexCurve, zs: &[Complex64]) -> Result<Complex64> {
    check_len(curve, zs)?;
    let n = monomial_exponent(curve)?;
    let d = curve.d();
    let fact: f64 = (1..d).map(|k| k as f64).product();
    Ok(f64::from(n) * fact * vandermonde(zs) * complete_homogeneous(n as usize - d, zs))
}

/// `|J - N (d-1)! V Q_{N-d}| / (1 + |J|)`.
pub fn factorization_residual(curve: &ComplexCurve, zs: &[Complex64]) -> Result<f64> {
    let j = jacobian_complex(curve, zs)?;
    let f = factorized_jacobian(curve, zs)?;
    Ok((j - f).norm() / (1.0 + j.norm()))
}

fn check_distinct(zs: &[Complex64]) -> Result<()> {
    for j in 1..zs.len() {
        for i in 0..j {
            if zs[i] == zs[j] {
                return Err(Error::DegenerateConfig(format!(
                    "points {i} and {j} coincide"
                )));
            }
        }
    }
    Ok(())
}

/// `|J(z)| / (max_j |z_j|^{N-d} prod_{i<j} |z_j - z_i|)`.
pub fn lower_bound_ratio(curve: &ComplexCurve, zs: &[Complex64]) -> Result<f64> {
    check_len(curve, zs)?;
    let n = monomial_exponent(curve)?;
    check_distinct(zs)?;
    let max = zs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::DegenerateConfig("all points at the origin".into()));
    }
    let denom = max.powi((n as usize - curve.d()) as i32) * vandermonde_abs(zs);
    if denom == 0.0 {
        return Err(Error::DegenerateConfig("vanishing denominator".into()));
    }
    Ok(jacobian_complex(curve, zs)?.norm() / denom)
}

fn third_derivative_coeffs(curve: &ComplexCurve) -> Vec<Complex64> {
    curve
        .phi_coeffs()
        .iter()
        .enumerate()
        .skip(3)
        .map(|(j, c)| c * (j * (j - 1) * (j - 2)) as f64)
        .collect()
}

fn sectors_at(center: Complex64, angle: f64) -> Vec<Region> {
    let count = (TAU / angle - 1e-9).ceil().max(1.0) as usize;
    (0..count)
        .map(|i| {
            let lo = i as f64 * angle;
            let hi = if i + 1 == count {
                TAU
            } else {
                (i + 1) as f64 * angle
            };
            Region::sector_at(center, lo, hi)
        })
        .collect()
}

/// Decomposes the plane into regions on which the Jacobian admits a lower
/// bound: sectors for monomial curves; for `d = 3` polynomial curves, cells
/// `nearest-root cell ∩ sector ∩ annulus` around every root of `phi'''`.
pub fn build_regions(curve: &ComplexCurve, params: &RegionParams) -> Result<Vec<Region>> {
    let origin = Complex64::new(0.0, 0.0);
    let coeffs = match curve.phi() {
        Phi::Monomial(_) => return Ok(sectors_at(origin, params.sector_angle)),
        Phi::Poly(_) => third_derivative_coeffs(curve),
    };
    let all_roots = roots::roots(&coeffs, params.root_tol)?;
    if all_roots.is_empty() {
        let meta = CellMeta {
            k: 0,
            hk: 1.0,
            center: origin,
        };
        return Ok(sectors_at(origin, params.sector_angle)
            .into_iter()
            .map(|s| s.with_meta(meta))
            .collect());
    }
    let centers: Vec<Complex64> = roots::cluster(&all_roots, 1e-6)
        .iter()
        .map(|r| r.value)
        .collect();
    let mut cells = Vec::new();
    for (ci, &u) in centers.iter().enumerate() {
        // distances of every root (with multiplicity) from u; the centre cluster gives zeros
        let mut t: Vec<f64> = all_roots
            .iter()
            .map(|r| {
                let dist = (r - u).norm();
                if dist <= 1e-6 * (1.0 + u.norm()) {
                    0.0
                } else {
                    dist
                }
            })
            .collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = t.len();
        let hk = |k: usize| t[k..].iter().product::<f64>();
        // (lo, hi, k) with 1-based k as in the construction
        let mut annuli: Vec<(f64, f64, usize)> = Vec::new();
        for k in 1..=n {
            let hi = if k < n {
                t[k] / params.a
            } else {
                f64::INFINITY
            };
            annuli.push((params.a * t[k - 1], hi, k));
            if k >= 2 && t[k - 1] > 0.0 {
                annuli.push((t[k - 1] / params.a1, t[k - 1] * params.a1, k));
            }
        }
        annuli.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut floor = 0.0f64;
        for (lo, hi, k) in annuli {
            let lo = lo.max(floor);
            if lo >= hi {
                continue;
            }
            floor = hi;
            let meta = CellMeta {
                k: k as u32,
                hk: hk(k),
                center: u,
            };
            for sector in sectors_at(u, params.sector_angle) {
                let mut parts = Vec::with_capacity(3);
                if centers.len() > 1 {
                    parts.push(Region::new(RegionKind::NearestRootCell {
                        root_index: ci,
                        roots: centers.clone(),
                    }));
                }
                parts.push(sector);
                parts.push(Region::annulus_at(u, lo, hi));
                cells.push(Region::intersection(parts).with_meta(meta));
            }
        }
    }
    Ok(cells)
}

/// `|J| / (H_k |V| max_i |z_i - u|^k)` inside a polynomial cell centred at `u`.
pub fn d3_poly_lower_bound_ratio(
    curve: &ComplexCurve,
    cell: &Region,
    zs: &[Complex64],
) -> Result<f64> {
    check_len(curve, zs)?;
    if curve.d() != 3 {
        return Err(Error::InvalidCurve("requires d = 3".into()));
    }
    let meta = cell
        .meta
        .ok_or_else(|| Error::InvalidArgument("cell carries no torsion data".into()))?;
    if let Some(index) = zs.iter().position(|z| !cell.contains(*z)) {
        return Err(Error::MembershipViolation { index });
    }
    check_distinct(zs)?;
    let max = zs
        .iter()
        .map(|z| (z - meta.center).norm())
        .fold(0.0, f64::max);
    let denom = meta.hk * vandermonde_abs(zs) * max.powi(meta.k as i32);
    if denom == 0.0 {
        return Err(Error::DegenerateConfig("vanishing denominator".into()));
    }
    Ok(jacobian_complex(curve, zs)?.norm() / denom)
}

/// Empirical infimum of a lower-bound ratio over one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub region: Region,
    pub samples: usize,
    pub min_ratio: f64,
    pub min_witness: Vec<Complex64>,
    /// `(sample_count, running_min)` at decade checkpoints and at the end.
    pub convergence_series: Vec<(usize, f64)>,
}

impl LowerBoundReport {
    /// Running minimum after the first `n / 10` samples divided by the
    /// global minimum; values near 1 mean the last decade found nothing new.
    pub fn decade_stability(&self) -> f64 {
        let cut = (self.samples / 10).max(1);
        let early = self
            .convergence_series
            .iter()
            .filter(|(n, _)| *n <= cut)
            .next_back()
            .map(|(_, m)| *m)
            .unwrap_or(f64::INFINITY);
        early / self.min_ratio
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["sample_count", "running_min"]).unwrap();
        for (n, m) in &self.convergence_series {
            w.write_record([n.to_string(), format!("{m:.17e}")])
                .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

fn sampling_domain(region: &Region) -> Region {
    let center = region
        .meta
        .map(|m| m.center)
        .unwrap_or(Complex64::new(0.0, 0.0));
    let mut lo = 0.0f64;
    let mut stack = vec![region];
    while let Some(r) = stack.pop() {
        match &r.kind {
            RegionKind::Intersection(parts) => stack.extend(parts.iter()),
            RegionKind::GapAnnulus { lo: l, .. } => lo = lo.max(*l),
            RegionKind::DyadicAnnulus {
                center_modulus,
                ratio,
                ..
            } => lo = lo.max(center_modulus / ratio),
            _ => {}
        }
    }
    Region::new(RegionKind::Disk {
        center,
        radius: (4.0 * lo).max(1.0),
    })
}

/// Samples `n_samples` configurations of `d` points inside `region` and
/// records the running minimum of the applicable lower-bound ratio.
pub fn estimate_sector_constant(
    curve: &ComplexCurve,
    region: &Region,
    n_samples: usize,
    seed: u64,
) -> Result<LowerBoundReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let envelope = region.envelope(&sampling_domain(region));
    if envelope.area() == 0.0 {
        return Err(Error::DegenerateConfig("region has zero area".into()));
    }
    let d = curve.d();
    let poly = matches!(curve.phi(), Phi::Poly(_));
    let evaluate = |i: usize| -> Result<(f64, Vec<Complex64>)> {
        let mut rng = SampleRng::new(seed, i as u64);
        loop {
            let zs: Vec<Complex64> = (0..d)
                .map(|_| {
                    envelope
                        .sample(&mut rng, 100_000)
                        .ok_or_else(|| Error::DegenerateConfig("region has zero area".into()))
                })
                .collect::<Result<_>>()?;
            let ratio = if poly {
                d3_poly_lower_bound_ratio(curve, region, &zs)
            } else {
                lower_bound_ratio(curve, &zs)
            };
            match ratio {
                Ok(r) => return Ok((r, zs)),
                // coincident draws have probability zero; redraw
                Err(Error::DegenerateConfig(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    };
    let values: Vec<(f64, Vec<Complex64>)> = (0..n_samples)
        .into_par_iter()
        .with_min_len(256)
        .map(evaluate)
        .collect::<Result<_>>()?;

    let mut checkpoints: Vec<usize> = std::iter::successors(Some(1usize), |x| x.checked_mul(10))
        .take_while(|x| *x <= n_samples)
        .collect();
    checkpoints.push((n_samples / 10).max(1));
    checkpoints.push(n_samples);
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let mut series = Vec::with_capacity(checkpoints.len());
    let mut best = f64::INFINITY;
    let mut witness = Vec::new();
    let mut next = 0;
    for (i, (r, zs)) in values.iter().enumerate() {
        if *r < best {
            best = *r;
            witness = zs.clone();
        }
        if checkpoints[next] == i + 1 {
            series.push((i + 1, best));
            next += 1;
        }
    }
    Ok(LowerBoundReport {
        region: region.clone(),
        samples: n_samples,
        min_ratio: best,
        min_witness: witness,
        convergence_series: series,
    })
}

/// Compares the real `2d x 2d` Jacobian of `(z_1..z_d) -> sum h(z_i)`, taken by
/// central differences, against `|J_C|^2`. Returns
/// `||J_R| - |J_C|^2| / (1 + |J_C|^2)`.
pub fn real_jacobian_check(curve: &ComplexCurve, zs: &[Complex64], fd_step: f64) -> Result<f64> {
    check_len(curve, zs)?;
    if fd_step <= 0.0 {
        return Err(Error::InvalidArgument("fd_step must be positive".into()));
    }
    let d = curve.d();
    let map = |pts: &[Complex64]| -> Vec<f64> {
        let mut acc = vec![0.0; 2 * d];
        let mut buf = vec![0.0; 2 * d];
        for z in pts {
            curve.eval_into(*z, &mut buf);
            acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
        }
        acc
    };
    let mut jr = DMatrix::<f64>::zeros(2 * d, 2 * d);
    for col in 0..2 * d {
        let offset = if col % 2 == 0 {
            Complex64::new(fd_step, 0.0)
        } else {
            Complex64::new(0.0, fd_step)
        };
        let mut plus = zs.to_vec();
        let mut minus = zs.to_vec();
        plus[col / 2] += offset;
        minus[col / 2] -= offset;
        let (fp, fm) = (map(&plus), map(&minus));
        for row in 0..2 * d {
            jr[(row, col)] = (fp[row] - fm[row]) / (2.0 * fd_step);
        }
    }
    let jc2 = jacobian_complex(curve, zs)?.norm_sqr();
    Ok((jr.determinant().abs() - jc2).abs() / (1.0 + jc2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn r(x: f64) -> Complex64 {
        c(x, 0.0)
    }

    #[test]
    fn vandermonde_examples() {
        assert_eq!(vandermonde(&[r(0.0), r(1.0)]), r(1.0));
        let w = c(0.2, 0.7);
        assert_eq!(vandermonde(&[w, w, c(1.0, -3.0)]), r(0.0));
        assert_eq!(vandermonde(&[r(1.0), r(2.0), r(3.0)]), r(2.0));
    }

    #[test]
    fn complete_homogeneous_examples() {
        let zs = [c(0.3, 0.1), c(-1.0, 2.0)];
        assert_eq!(complete_homogeneous(0, &zs), r(1.0));
        assert!((complete_homogeneous(1, &zs) - (zs[0] + zs[1])).norm() < 1e-15);
        assert_eq!(complete_homogeneous(2, &[r(1.0); 3]), r(6.0));
    }

    #[test]
    fn jacobian_examples() {
        let (z1, z2) = (c(0.3, -0.2), c(-0.5, 0.9));
        let h = ComplexCurve::monomial(2, 2).unwrap();
        let j = jacobian_complex(&h, &[z1, z2]).unwrap();
        assert!((j - 2.0 * (z2 - z1)).norm() < 1e-14);
        assert_eq!(jacobian_complex(&h, &[z1, z1]).unwrap().norm(), 0.0);
        let h = ComplexCurve::monomial(2, 3).unwrap();
        let j = jacobian_complex(&h, &[z1, z2]).unwrap();
        assert!((j - 3.0 * (z2 - z1) * (z1 + z2)).norm() < 1e-14);
    }

    #[test]
    fn factorization_examples() {
        let h = ComplexCurve::monomial(2, 2).unwrap();
        assert!(factorization_residual(&h, &[c(0.1, 0.4), c(-0.7, 0.2)]).unwrap() < 1e-12);
        let h = ComplexCurve::monomial(3, 3).unwrap();
        let zs = [r(1.0), r(2.0), r(3.0)];
        assert!((jacobian_complex(&h, &zs).unwrap() - r(12.0)).norm() < 1e-12);
        assert!((factorized_jacobian(&h, &zs).unwrap() - r(12.0)).norm() < 1e-12);
        assert!(factorization_residual(&h, &zs).unwrap() < 1e-12);
        let h = ComplexCurve::monomial(4, 7).unwrap();
        let worst = (0..1000u64)
            .map(|i| {
                let mut rng = SampleRng::new(99, i);
                let zs: Vec<_> = (0..4).map(|_| rng.in_disk(r(0.0), 1.0)).collect();
                factorization_residual(&h, &zs).unwrap()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn factorization_rejects_non_monomials() {
        let h = ComplexCurve::monomial(3, 2).unwrap();
        assert!(factorization_residual(&h, &[r(1.0), r(2.0), r(3.0)]).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let h = ComplexCurve::monomial(2, 2).unwrap();
        let v = lower_bound_ratio(&h, &[c(0.3, 0.2), c(-0.1, 0.6)]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!(matches!(
            lower_bound_ratio(&h, &[c(0.3, 0.2), c(0.3, 0.2)]),
            Err(Error::DegenerateConfig(_))
        ));
    }

    #[test]
    fn narrow_sector_ratio_against_grid_oracle() {
        // ratio = 3|z1 + z2| / max(|z1|, |z2|) on the sector of angle eps
        let eps = PI / 8.0;
        let h = ComplexCurve::monomial(2, 3).unwrap();
        let n = 24;
        let mut grid_min = f64::INFINITY;
        let pts: Vec<Complex64> = (1..=n)
            .flat_map(|i| {
                (0..n).map(move |j| {
                    Complex64::from_polar(i as f64 / n as f64, eps * (j as f64 + 0.5) / n as f64)
                })
            })
            .collect();
        for (a, z1) in pts.iter().enumerate() {
            for z2 in &pts[a + 1..] {
                let v = lower_bound_ratio(&h, &[*z1, *z2]).unwrap();
                let oracle = 3.0 * (z1 + z2).norm() / z1.norm().max(z2.norm());
                assert!((v - oracle).abs() < 1e-10);
                assert!(v <= 6.0 + 1e-12);
                grid_min = grid_min.min(v);
            }
        }
        assert!(grid_min >= 3.0 * (eps / 2.0).cos() - 1e-12);
    }

    #[test]
    fn monomial_regions_cover_plane_once() {
        let h = ComplexCurve::monomial(3, 5).unwrap();
        let params = RegionParams {
            sector_angle: PI / 8.0,
            ..Default::default()
        };
        let regions = build_regions(&h, &params).unwrap();
        assert_eq!(regions.len(), 16);
        for i in 0..2000u64 {
            let z = SampleRng::new(5, i).in_disk(r(0.0), 3.0);
            assert_eq!(regions.iter().filter(|g| g.contains(z)).count(), 1);
        }
    }

    #[test]
    fn low_degree_poly_has_single_torsion_class() {
        let h = ComplexCurve::poly(3, vec![r(1.0), r(0.0), r(2.0), c(0.0, 1.0)]).unwrap();
        let regions = build_regions(&h, &RegionParams::default()).unwrap();
        assert_eq!(regions.len(), 32);
        assert!(regions.iter().all(|g| g.meta.unwrap().k == 0));
    }

    #[test]
    fn z6_regions_around_the_triple_root() {
        let mut coeffs = vec![r(0.0); 7];
        coeffs[6] = r(1.0);
        let h = ComplexCurve::poly(3, coeffs).unwrap();
        let regions = build_regions(&h, &RegionParams::default()).unwrap();
        assert!(regions.iter().all(|g| g.meta.unwrap().k == 3));
        assert_eq!(regions.iter().filter(|g| g.contains(r(1.0))).count(), 1);
    }

    #[test]
    fn poly_cells_are_disjoint() {
        // phi''' = 60 (z - 1)(z + 0.5 i) (z - 3): three distinct roots
        let h = ComplexCurve::poly(
            3,
            vec![
                r(0.0),
                r(0.0),
                r(0.0),
                c(-0.5, 0.25) * 10.0 / 60.0 * 6.0,
                r(0.0),
                r(0.0),
            ],
        )
        .unwrap();
        let h = {
            // build phi from the roots of phi''' by integrating three times
            let roots = [r(1.0), c(0.0, -0.5), r(3.0)];
            let mut p = vec![r(1.0)];
            for u in roots {
                let mut next = vec![r(0.0); p.len() + 1];
                for (j, cj) in p.iter().enumerate() {
                    next[j + 1] += cj;
                    next[j] -= cj * u;
                }
                p = next;
            }
            let mut phi = vec![r(0.0); p.len() + 3];
            for (j, cj) in p.iter().enumerate() {
                phi[j + 3] = cj / ((j + 3) * (j + 2) * (j + 1)) as f64;
            }
            let _ = h;
            ComplexCurve::poly(3, phi).unwrap()
        };
        let regions = build_regions(&h, &RegionParams::default()).unwrap();
        assert!(!regions.is_empty());
        for i in 0..5000u64 {
            let z = SampleRng::new(8, i).in_disk(r(1.0), 6.0);
            assert!(regions.iter().filter(|g| g.contains(z)).count() <= 1);
        }
    }

    #[test]
    fn z5_as_poly_matches_monomial_ratio() {
        let mut coeffs = vec![r(0.0); 6];
        coeffs[5] = r(1.0);
        let poly = ComplexCurve::poly(3, coeffs).unwrap();
        let mono = ComplexCurve::monomial(3, 5).unwrap();
        let cells = build_regions(&poly, &RegionParams::default()).unwrap();
        let cell = &cells[0];
        let meta = cell.meta.unwrap();
        assert_eq!((meta.k, meta.hk), (2, 1.0));
        let zs = [
            Complex64::from_polar(0.5, 0.05),
            Complex64::from_polar(0.8, 0.1),
            Complex64::from_polar(0.2, 0.15),
        ];
        let a = d3_poly_lower_bound_ratio(&poly, cell, &zs).unwrap();
        let b = lower_bound_ratio(&mono, &zs).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
        let outside = [zs[0], zs[1], Complex64::from_polar(0.5, 1.0)];
        assert_eq!(
            d3_poly_lower_bound_ratio(&poly, cell, &outside),
            Err(Error::MembershipViolation { index: 2 })
        );
    }

    #[test]
    fn poly_cell_running_minimum_positive() {
        let mut coeffs = vec![r(0.0); 7];
        coeffs[6] = r(1.0);
        coeffs[4] = c(0.3, -0.2);
        let h = ComplexCurve::poly(3, coeffs).unwrap();
        let cells = build_regions(&h, &RegionParams::default()).unwrap();
        let rep = estimate_sector_constant(&h, &cells[cells.len() / 2], 10_000, 3).unwrap();
        assert!(rep.min_ratio > 0.0);
    }

    #[test]
    fn sector_constant_examples() {
        let h = ComplexCurve::monomial(2, 2).unwrap();
        let rep = estimate_sector_constant(&h, &Region::sector(0.3, 0.5), 500, 1).unwrap();
        assert!((rep.min_ratio - 2.0).abs() < 1e-12);
        let h = ComplexCurve::monomial(3, 5).unwrap();
        let s = Region::sector(0.0, PI / 16.0);
        let small = estimate_sector_constant(&h, &s, 1000, 4).unwrap();
        let big = estimate_sector_constant(&h, &s, 2000, 4).unwrap();
        assert!(big.min_ratio <= small.min_ratio);
        let series: Vec<f64> = big.convergence_series.iter().map(|x| x.1).collect();
        assert!(series.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(big, estimate_sector_constant(&h, &s, 2000, 4).unwrap());
    }

    #[test]
    fn holomorphy_examples() {
        let h = ComplexCurve::monomial(2, 2).unwrap();
        let zs = [r(0.3), c(0.7, 0.1)];
        assert!(real_jacobian_check(&h, &zs, 1e-5).unwrap() < 1e-6);
        assert!(real_jacobian_check(&h, &[r(0.3), r(0.3)], 1e-5).unwrap() < 1e-9);
        let h = ComplexCurve::monomial(3, 6).unwrap();
        let zs = [c(1.3, 0.2), c(-1.6, 0.1), c(0.2, -1.9)];
        // the O(h^2) error cancels in the determinant, so truncation only
        // dominates roundoff for fairly large steps
        let coarse = real_jacobian_check(&h, &zs, 1e-1).unwrap();
        let fine = real_jacobian_check(&h, &zs, 1e-3).unwrap();
        assert!(fine < coarse, "{fine} vs {coarse}");
        assert!(real_jacobian_check(&h, &zs, 1e-5).unwrap() < 1e-8);
    }

    #[test]
    fn report_csv_has_two_columns() {
        let h = ComplexCurve::monomial(2, 3).unwrap();
        let rep = estimate_sector_constant(&h, &Region::sector(0.0, 0.2), 100, 0).unwrap();
        let csv = rep.to_csv();
        assert!(csv.starts_with("sample_count,running_min\n"));
        assert_eq!(csv.lines().count(), rep.convergence_series.len() + 1);
        let json = serde_json::to_string(&rep).unwrap();
        let back: LowerBoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.samples, 100);
    }
}
