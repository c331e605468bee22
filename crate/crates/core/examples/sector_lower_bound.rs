//! Decomposes the parameter plane into regions and estimates the constant in
//! the Jacobian lower bound on one of them, with its convergence series.

use avglab::jacobian::{build_regions, estimate_sector_constant, RegionParams};
use avglab::ComplexCurve;
use num_complex::Complex64;

fn main() -> avglab::Result<()> {
    let h = ComplexCurve::monomial(3, 5)?;
    let regions = build_regions(&h, &RegionParams::default())?;
    println!("{} sectors for a monomial curve", regions.len());
    let rep = estimate_sector_constant(&h, &regions[0], 20_000, 3)?;
    println!(
        "min ratio {:.4} (decade stability {:.3})",
        rep.min_ratio,
        rep.decade_stability()
    );
    print!("{}", rep.to_csv());

    // d = 3 polynomial curve: cells around the roots of phi'''
    let coeffs = [0.0, 0.0, 0.0, 1.0, 0.3, 0.2]
        .map(|c| Complex64::new(c, 0.0))
        .to_vec();
    let p = ComplexCurve::poly(3, coeffs)?;
    let cells = build_regions(&p, &RegionParams::default())?;
    println!("{} cells for the polynomial curve", cells.len());
    Ok(())
}
