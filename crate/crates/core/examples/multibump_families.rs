//! Sums of disjointly placed bumps whose Lorentz norms grow like M^{1/u},
//! and the two families that pin down the second Lorentz index.

use avglab::extremizers::{
    adjoint_constant, multibump_pd_le_v, multibump_u_le_qd, multibump_u_le_v, FamilyOptions, Index,
};
use num_rational::Rational64 as Q;

fn main() -> avglab::Result<()> {
    let opts = FamilyOptions::default();
    let u = Index::Finite(Q::new(3, 2));
    let fits = multibump_u_le_v(2, &[2, 4, 8], 0.125, u, u, opts)?;
    println!(
        "norm slope {:.4} (expected {})",
        fits.norm.slope, fits.expected_norm_slope
    );
    println!(
        "image lower-bound slope {:.4} (expected {})",
        fits.lower.slope, fits.expected_lower_slope
    );
    println!(
        "disjointness hits: {:?}",
        fits.certificates.iter().map(|c| c.hits).collect::<Vec<_>>()
    );

    for (name, rep) in [
        ("u <= q_d", multibump_u_le_qd(2, 2, u, opts)?),
        ("p_d <= v", multibump_pd_le_v(2, 2, u, opts)?),
    ] {
        println!(
            "{name}: norm ratio {:.3}, image ratio {:.3}",
            rep.norm.ratio, rep.lower.ratio
        );
    }
    println!(
        "adjoint lower-bound constant {:.3}",
        adjoint_constant(2, 0.25, 0.5, opts)?
    );
    Ok(())
}
