//! Polynomial roots from the eigenvalues of the companion matrix.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Default bound on `|p(root)| / (sum |c_j| |root|^j)` after polishing.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

/// A root together with its multiplicity after clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn relative_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    let (p, _) = horner(coeffs, z);
    let scale: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c.norm() * z.norm().powi(j as i32))
        .sum();
    p.norm() / scale.max(f64::MIN_POSITIVE)
}

/// All roots (with repetition) of the polynomial with coefficients `coeffs`
/// (constant term first). Leading zero coefficients are ignored.
pub fn roots(coeffs: &[Complex64], residual_tol: f64) -> Result<Vec<Complex64>> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    if c.len() <= 1 {
        return Ok(Vec::new());
    }
    let n = c.len() - 1;
    let lead = c[n];
    // roots at the origin are split off exactly
    let zeros_at_origin = c.iter().take_while(|x| x.norm() == 0.0).count();
    let reduced: Vec<Complex64> = c[zeros_at_origin..].to_vec();
    let m = reduced.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    if m > 0 {
        let mut comp = DMatrix::<Complex64>::zeros(m, m);
        for i in 1..m {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..m {
            comp[(i, m - 1)] = -reduced[i] / lead;
        }
        let eig = comp
            .clone()
            .schur()
            .eigenvalues()
            .ok_or(Error::RootFindingFailure {
                residual: f64::INFINITY,
                tolerance: residual_tol,
            })?;
        for z0 in eig.iter() {
            let mut z = *z0;
            // a few Newton steps; skipped when the derivative vanishes (multiple roots)
            for _ in 0..3 {
                let (p, dp) = horner(&reduced, z);
                if dp.norm() < 1e-12 * p.norm().max(1e-300) || dp.norm() == 0.0 {
                    break;
                }
                let next = z - p / dp;
                if relative_residual(&reduced, next) <= relative_residual(&reduced, z) {
                    z = next;
                } else {
                    break;
                }
            }
            out.push(z);
        }
    }
    let worst = out
        .iter()
        .map(|z| relative_residual(&c, *z))
        .fold(0.0, f64::max);
    if worst > residual_tol {
        return Err(Error::RootFindingFailure {
            residual: worst,
            tolerance: residual_tol,
        });
    }
    Ok(out)
}

/// Merges roots closer than `tol * (1 + max |root|)` into one with multiplicity.
pub fn cluster(roots: &[Complex64], tol: f64) -> Vec<Root> {
    let scale = 1.0 + roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for &z in roots {
        match out.iter_mut().find(|(c, _)| (*c - z).norm() <= tol * scale) {
            Some((c, m)) => {
                *c = (*c * *m as f64 + z) / (*m as f64 + 1.0);
                *m += 1;
            }
            None => out.push((z, 1)),
        }
    }
    out.into_iter()
        .map(|(value, multiplicity)| Root {
            value,
            multiplicity,
        })
        .collect()
}
