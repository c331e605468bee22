//! The complex Jacobian of (z_1, ..., z_d) -> Σ h(z_j) splits into a
//! Vandermonde factor and a complete homogeneous symmetric polynomial.

use avglab::jacobian::{
    complete_homogeneous, factorization_residual, factorized_jacobian, jacobian_complex,
    lower_bound_ratio, real_jacobian_check, vandermonde,
};
use avglab::rng::SampleRng;
use avglab::ComplexCurve;
use num_complex::Complex64;

fn main() -> avglab::Result<()> {
    let h = ComplexCurve::monomial(3, 6)?;
    let mut rng = SampleRng::new(1, 0);
    let zs: Vec<Complex64> = (0..3)
        .map(|_| rng.in_disk(Complex64::new(0.0, 0.0), 1.0))
        .collect();

    println!("V(z)             = {:.6}", vandermonde(&zs));
    println!("Q_3(z)           = {:.6}", complete_homogeneous(3, &zs));
    println!("J by determinant = {:.6}", jacobian_complex(&h, &zs)?);
    println!("J factorized     = {:.6}", factorized_jacobian(&h, &zs)?);
    println!("relative residual {:.2e}", factorization_residual(&h, &zs)?);
    println!(
        "|J_R| vs |J_C|^2 residual {:.2e}",
        real_jacobian_check(&h, &zs, 1e-5)?
    );
    println!("lower-bound ratio {:.4}", lower_bound_ratio(&h, &zs)?);
    Ok(())
}
