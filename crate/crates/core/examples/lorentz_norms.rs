//! Lorentz quasi-norms of layered functions Σ 2^k chi_{E_k}: the exact
//! rearrangement form, the discrete form and normalization.

use avglab::lorentz::{
    comparability_envelope, indicator_norm, numeric_lorentz_norm, LayerProfile, LayeredFunction,
    StepProfile,
};
use avglab::measure::{Atom, IndicatorSet, McOptions};
use avglab::{ComplexCurve, RealPoint};

fn main() -> avglab::Result<()> {
    let (p, u) = (1.5, 2.0);
    println!(
        "single indicator, |E| = 3: closed {:.9}, numeric {:.9}",
        indicator_norm(3.0, p, u),
        numeric_lorentz_norm(&StepProfile::new(vec![(1.0, 3.0)]), p, u, 100_000)
    );

    let f = LayerProfile::new(vec![(0, 2.0), (3, 0.01), (-2, 40.0)]);
    println!(
        "||f||_(p,u) = {:.6}, discrete {:.6}",
        f.lorentz_norm(p, u),
        f.discrete_lorentz(p, u)
    );
    let n = f.normalize(p, u)?;
    println!("normalize: shift {} leaves norm {:.4}", n.shift, n.residual);

    let env = comparability_envelope(p, u, 1000, 10, 5);
    println!(
        "discrete / true over 1000 profiles: [{:.3}, {:.3}]",
        env.min_ratio, env.max_ratio
    );

    // a layered function on disjoint balls in R^4, certified by sampling
    let h = ComplexCurve::monomial(2, 2)?;
    let ball =
        |x: f64, r: f64| IndicatorSet::single(&h, Atom::ball(RealPoint(vec![x, 0.0, 0.0, 0.0]), r));
    let g = LayeredFunction::new(vec![(2, ball(0.0, 0.5)?), (0, ball(3.0, 1.0)?)], 9)?;
    println!("certificate {:?}", g.certificate());
    println!(
        "||g||_(p,u) = {:.6}",
        g.lorentz_norm(p, u, McOptions::new(1, 0))
    );
    Ok(())
}
