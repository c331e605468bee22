//! Exponents recovered by log-log fits: the weak norm of the dilation family
//! and the volume of thin neighbourhoods N(0, eps).

use avglab::extremizers::{epsilon_family_check, scaling_family_weak_norm, FamilyOptions};
use avglab::ComplexCurve;
use num_rational::Rational64 as Q;

fn main() -> avglab::Result<()> {
    let h = ComplexCurve::monomial(2, 2)?;
    let opts = FamilyOptions::default();
    let radii = [0.5, 0.25, 0.125, 0.0625];
    let w = scaling_family_weak_norm(&h, &radii, Q::from_integer(3), opts)?;
    println!(
        "weak-norm slope {:.4}, expected {}",
        w.fit.slope, w.expected_slope
    );
    for row in &w.rows {
        println!(
            "  r = {:<7} measured {:.4e} predicted {:.4e}",
            row.parameter, row.measured, row.predicted
        );
    }

    let eps = [0.125, 0.0625, 0.03125, 0.015625];
    let e = epsilon_family_check(&h, &eps, Q::new(3, 2), Q::from_integer(3), opts)?;
    println!(
        "volume slope {:.4}, expected {}",
        e.volume.slope, e.expected_volume_slope
    );
    println!(
        "weak slope {:.4}, expected {}",
        e.weak_norm.slope, e.expected_weak_slope
    );
    println!("necessary slack 2d/q - 2(d-1)/p = {}", e.necessary_slack);
    Ok(())
}
