//! Complex curves of simple type `h(z) = (z, z^2, ..., z^{d-1}, phi(z))`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Highest polynomial degree accepted for `Phi::Poly`.
pub const DEFAULT_MAX_POLY_DEGREE: usize = 24;

/// The last coordinate of the curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Phi {
    Monomial(u32),
    /// Coefficients in the monomial basis, constant term first.
    Poly(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexCurve {
    d: usize,
    phi: Phi,
}

/// Point of `R^{2d}` laid out as `(Re z_1, Im z_1, ..., Re z_d, Im z_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealPoint(pub Vec<f64>);

impl RealPoint {
    pub fn zeros(d: usize) -> Self {
        RealPoint(vec![0.0; 2 * d])
    }

    pub fn from_complex(zs: &[Complex64]) -> Self {
        RealPoint(zs.iter().flat_map(|z| [z.re, z.im]).collect())
    }

    /// Number of complex coordinate pairs.
    pub fn dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn pair(&self, j: usize) -> Complex64 {
        Complex64::new(self.0[2 * j], self.0[2 * j + 1])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &RealPoint) -> RealPoint {
        RealPoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &RealPoint) -> RealPoint {
        RealPoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Anisotropic dilation `D_r`: the j-th coordinate pair is scaled by `r^j`.
    pub fn dilate(&self, r: f64) -> RealPoint {
        let mut out = self.0.clone();
        let mut scale = 1.0;
        for pair in out.chunks_mut(2) {
            scale *= r;
            pair.iter_mut().for_each(|x| *x *= scale);
        }
        RealPoint(out)
    }
}

/// `D_r x`; see [`RealPoint::dilate`].
pub fn anisotropic_dilate(x: &RealPoint, r: f64) -> RealPoint {
    x.dilate(r)
}

/// `n! / (n - m)!`, zero when `m > n`.
pub fn falling_factorial(n: u32, m: u32) -> f64 {
    if m > n {
        return 0.0;
    }
    (n - m + 1..=n).map(f64::from).product()
}

impl ComplexCurve {
    pub fn monomial(d: usize, n: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidCurve(format!("dimension {d} < 2")));
        }
        Ok(Self {
            d,
            phi: Phi::Monomial(n),
        })
    }

    pub fn poly(d: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        Self::poly_with_max_degree(d, coeffs, DEFAULT_MAX_POLY_DEGREE)
    }

    pub fn poly_with_max_degree(
        d: usize,
        mut coeffs: Vec<Complex64>,
        max_degree: usize,
    ) -> Result<Self> {
        if d != 3 {
            return Err(Error::InvalidCurve(format!(
                "polynomial phi is only supported for d = 3, got d = {d}"
            )));
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        if coeffs.len() - 1 > max_degree {
            return Err(Error::InvalidCurve(format!(
                "degree {} exceeds maximum {max_degree}",
                coeffs.len() - 1
            )));
        }
        Ok(Self {
            d,
            phi: Phi::Poly(coeffs),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    /// `N` for monomials, the degree for polynomials.
    pub fn degree(&self) -> usize {
        match &self.phi {
            Phi::Monomial(n) => *n as usize,
            Phi::Poly(c) => c.len() - 1,
        }
    }

    /// Torsion degree `K = N - d` of a monomial curve with `N >= d`.
    pub fn torsion_degree(&self) -> Option<u32> {
        match self.phi {
            Phi::Monomial(n) if n as usize >= self.d => Some(n - self.d as u32),
            _ => None,
        }
    }

    /// Whether `h(rz) = D_r h(z)` holds exactly.
    pub fn is_moment_curve(&self) -> bool {
        matches!(self.phi, Phi::Monomial(n) if n as usize == self.d)
    }

    /// Coefficients of `phi` in the monomial basis.
    pub fn phi_coeffs(&self) -> Vec<Complex64> {
        match &self.phi {
            Phi::Monomial(n) => {
                let mut c = vec![Complex64::new(0.0, 0.0); *n as usize + 1];
                c[*n as usize] = Complex64::new(1.0, 0.0);
                c
            }
            Phi::Poly(c) => c.clone(),
        }
    }

    /// `phi^{(order)}(z)`, computed from exact coefficient shifts.
    pub fn phi_derivative(&self, z: Complex64, order: u32) -> Complex64 {
        match &self.phi {
            Phi::Monomial(n) => {
                if order > *n {
                    Complex64::new(0.0, 0.0)
                } else {
                    falling_factorial(*n, order) * z.powu(n - order)
                }
            }
            Phi::Poly(c) => {
                let m = order as usize;
                if m >= c.len() {
                    return Complex64::new(0.0, 0.0);
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, cj) in c.iter().enumerate().skip(m).rev() {
                    acc = acc * z + cj * falling_factorial(j as u32, order);
                }
                acc
            }
        }
    }

    /// `h(z)` as complex coordinates.
    pub fn eval_complex(&self, z: Complex64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.d);
        let mut p = z;
        for _ in 1..self.d {
            out.push(p);
            p *= z;
        }
        out.push(self.phi_derivative(z, 0));
        out
    }

    /// Writes `h(z)` into `out` as `2d` reals without allocating.
    pub fn eval_into(&self, z: Complex64, out: &mut [f64]) {
        let mut p = z;
        for j in 0..self.d - 1 {
            out[2 * j] = p.re;
            out[2 * j + 1] = p.im;
            p *= z;
        }
        let last = match self.phi {
            Phi::Monomial(n) if n as usize == self.d => p,
            _ => self.phi_derivative(z, 0),
        };
        out[2 * self.d - 2] = last.re;
        out[2 * self.d - 1] = last.im;
    }

    /// The real embedding of `h(z)` in `R^{2d}`.
    pub fn eval(&self, z: Complex64) -> RealPoint {
        let mut out = vec![0.0; 2 * self.d];
        self.eval_into(z, &mut out);
        RealPoint(out)
    }

    /// Componentwise `order`-th complex derivative of `h` at `z`.
    pub fn derivative(&self, z: Complex64, order: u32) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.d);
        for j in 1..self.d as u32 {
            out.push(if order > j {
                Complex64::new(0.0, 0.0)
            } else {
                falling_factorial(j, order) * z.powu(j - order)
            });
        }
        out.push(self.phi_derivative(z, order));
        out
    }

    /// Density of the affine arclength measure, `|phi^{(d)}(z)|^{4/(d(d+1))}`.
    pub fn affine_density(&self, z: Complex64) -> f64 {
        let d = self.d as f64;
        self.phi_derivative(z, self.d as u32)
            .norm()
            .powf(4.0 / (d * (d + 1.0)))
    }

    /// `sigma({|z| <= r})` for monomial curves, in closed form.
    pub fn disk_measure(&self, r: f64) -> Option<f64> {
        let n = match self.phi {
            Phi::Monomial(n) => n,
            Phi::Poly(_) => return None,
        };
        if (n as usize) < self.d {
            return Some(0.0);
        }
        let d = self.d as f64;
        let e = 4.0 / (d * (d + 1.0));
        let k = f64::from(n) - d;
        let c = falling_factorial(n, self.d as u32).powf(e);
        // integral of |z|^{eK} over the disk = 2 pi r^{eK+2} / (eK+2)
        Some(c * std::f64::consts::TAU * r.powf(e * k + 2.0) / (e * k + 2.0))
    }
}

/// Curve description as it appears in experiment configs:
/// `{"d": 3, "phi": {"monomial": 5}}` or `{"d": 3, "phi": {"coeffs": [[re, im], ...]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub d: usize,
    pub phi: PhiSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiSpec {
    Monomial(u32),
    Coeffs(Vec<[f64; 2]>),
}

impl CurveSpec {
    pub fn build(&self) -> Result<ComplexCurve> {
        match &self.phi {
            PhiSpec::Monomial(n) => ComplexCurve::monomial(self.d, *n),
            PhiSpec::Coeffs(c) => ComplexCurve::poly(
                self.d,
                c.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SampleRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let h = ComplexCurve::monomial(2, 2).unwrap();
        assert_eq!(h.eval(c(0.0, 0.0)).0, vec![0.0; 4]);
        assert_eq!(h.eval(c(1.0, 1.0)).0, vec![1.0, 1.0, 0.0, 2.0]);
        let h3 = ComplexCurve::monomial(3, 3).unwrap();
        let p = h3.eval(c(0.0, 1.0)).0;
        let want = [0.0, 1.0, -1.0, 0.0, 0.0, -1.0];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_examples() {
        let w = c(0.3, -0.7);
        let h = ComplexCurve::monomial(2, 2).unwrap();
        assert_eq!(h.derivative(w, 1), vec![c(1.0, 0.0), 2.0 * w]);
        let h = ComplexCurve::monomial(3, 5).unwrap();
        let d3 = h.derivative(w, 3);
        assert_eq!(d3[0], c(0.0, 0.0));
        assert_eq!(d3[1], c(0.0, 0.0));
        assert!((d3[2] - 60.0 * w * w).norm() < 1e-13);
        let h = ComplexCurve::monomial(3, 2).unwrap();
        assert!(h.derivative(w, 4).iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn density_examples() {
        let z = c(0.4, 0.1);
        let h = ComplexCurve::monomial(2, 2).unwrap();
        assert!((h.affine_density(z) - 2f64.powf(4.0 / 6.0)).abs() < 1e-14);
        let h = ComplexCurve::monomial(3, 3).unwrap();
        assert!((h.affine_density(z) - 6f64.cbrt()).abs() < 1e-14);
        let h = ComplexCurve::monomial(3, 2).unwrap();
        assert_eq!(h.affine_density(z), 0.0);
        let h = ComplexCurve::monomial(3, 7).unwrap();
        let k = 4.0;
        let want = (7.0 * 6.0 * 5.0f64).powf(1.0 / 3.0) * z.norm().powf(4.0 * k / 12.0);
        assert!((h.affine_density(z) - want).abs() < 1e-13);
    }

    #[test]
    fn density_vanishes_only_at_origin() {
        let h = ComplexCurve::monomial(3, 5).unwrap();
        assert_eq!(h.affine_density(c(0.0, 0.0)), 0.0);
        assert!(h.affine_density(c(1e-6, 0.0)) > 0.0);
        let flat = ComplexCurve::monomial(3, 3).unwrap();
        assert!(flat.affine_density(c(0.0, 0.0)) > 0.0);
    }

    #[test]
    fn dilation_examples() {
        let x = RealPoint(vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(x.dilate(1.0), x);
        assert_eq!(x.dilate(2.0).0, vec![2.0, 2.0, 4.0, 4.0]);
    }

    #[test]
    fn dilation_covariance_of_moment_curve() {
        for d in 2..=5 {
            let h = ComplexCurve::monomial(d, d as u32).unwrap();
            for i in 0..100 {
                let mut rng = SampleRng::new(11, i);
                let r = rng.range(0.05, 3.0);
                let z = rng.in_disk(c(0.0, 0.0), 2.0);
                let lhs = h.eval(z * r);
                let rhs = h.eval(z).dilate(r);
                let err = lhs.sub(&rhs).norm() / rhs.norm().max(1e-300);
                assert!(err < 1e-12, "d={d} r={r} err={err}");
            }
        }
    }

    #[test]
    fn dilation_group_law() {
        let mut rng = SampleRng::new(3, 0);
        for _ in 0..100 {
            let x = RealPoint((0..8).map(|_| rng.range(-2.0, 2.0)).collect());
            let (r, s) = (rng.range(0.1, 3.0), rng.range(0.1, 3.0));
            let a = x.dilate(r).dilate(s);
            let b = x.dilate(r * s);
            assert!(a.sub(&b).norm() <= 1e-12 * b.norm());
        }
    }

    #[test]
    fn first_derivative_matches_finite_difference() {
        let h = ComplexCurve::poly(
            3,
            vec![
                c(0.5, 0.0),
                c(0.0, 1.0),
                c(-1.0, 0.2),
                c(0.3, 0.0),
                c(0.0, 0.0),
                c(1.0, 1.0),
            ],
        )
        .unwrap();
        let step = 1e-5;
        let z = c(0.3, -0.4);
        let fwd = h.eval_complex(z + step);
        let bwd = h.eval_complex(z - step);
        let exact = h.derivative(z, 1);
        for j in 0..3 {
            let fd = (fwd[j] - bwd[j]) / (2.0 * step);
            assert!((fd - exact[j]).norm() < 1e-6);
        }
    }

    #[test]
    fn poly_only_in_dimension_three() {
        assert!(ComplexCurve::poly(4, vec![c(1.0, 0.0)]).is_err());
        assert!(ComplexCurve::poly(3, vec![c(1.0, 0.0)]).is_ok());
        assert!(ComplexCurve::poly_with_max_degree(3, vec![c(1.0, 0.0); 10], 5).is_err());
    }

    #[test]
    fn spec_parsing() {
        let s: CurveSpec = serde_json::from_str(r#"{"d": 3, "phi": {"monomial": 5}}"#).unwrap();
        assert_eq!(s.build().unwrap(), ComplexCurve::monomial(3, 5).unwrap());
        let s: CurveSpec = serde_json::from_str(
            r#"{"d": 3, "phi": {"coeffs": [[0,0],[1,0],[0,0],[0,0],[0,0],[0,0],[1,0]]}}"#,
        )
        .unwrap();
        assert_eq!(s.build().unwrap().degree(), 6);
    }

    #[test]
    fn disk_measure_matches_density() {
        let h = ComplexCurve::monomial(2, 2).unwrap();
        let want = std::f64::consts::PI * 0.25 * 2f64.powf(2.0 / 3.0);
        assert!((h.disk_measure(0.5).unwrap() - want).abs() < 1e-14);
    }
}
