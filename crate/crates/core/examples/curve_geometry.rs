//! Points on h(z) = (z, ..., z^{d-1}, z^N), the affine-arclength density and
//! the anisotropic dilation that commutes with the moment curve.

use avglab::curve::anisotropic_dilate;
use avglab::{ComplexCurve, CurveSpec};
use num_complex::Complex64;

fn main() -> avglab::Result<()> {
    let h = ComplexCurve::monomial(3, 5)?;
    let z = Complex64::new(0.6, -0.3);
    println!("h(z) in R^6      = {:?}", h.eval(z).0);
    println!("torsion degree K = {:?}", h.torsion_degree());
    println!("density at z     = {:.6}", h.affine_density(z));
    println!("sigma(|z| <= 1)  = {:.6}", h.disk_measure(1.0).unwrap());

    let m = ComplexCurve::monomial(3, 3)?;
    let r = 0.5;
    let a = m.eval(z * r);
    let b = anisotropic_dilate(&m.eval(z), r);
    let gap = a.sub(&b).norm();
    println!("moment curve: |h(rz) - D_r h(z)| = {gap:.2e}");

    // curves can also come from config-style JSON
    let spec: CurveSpec = serde_json::from_str(
        r#"{"d": 3, "phi": {"coeffs": [[0,0],[0,0],[0,0],[1,0],[0,0],[0.5,0]]}}"#,
    )
    .expect("valid spec");
    let p = spec.build()?;
    println!(
        "polynomial phi of degree {}: phi'''(z) = {:.4}",
        p.degree(),
        p.phi_derivative(z, 3)
    );
    Ok(())
}
