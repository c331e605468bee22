//! Volumes of balls and curve neighbourhoods N(x, eps) = x - h(D) + B_eps,
//! by importance sampling and by bounding-box hit-or-miss.

use avglab::measure::{Atom, IndicatorSet, McOptions, VolumeMethod};
use avglab::{ComplexCurve, RealPoint};

fn main() -> avglab::Result<()> {
    let h = ComplexCurve::monomial(2, 2)?;
    let zero = RealPoint::zeros(2);
    let ball = IndicatorSet::single(&h, Atom::ball(zero.clone(), 1.0))?;
    println!(
        "|B(0,1)| = {:.6} (exact)",
        ball.volume(McOptions::new(1, 0)).value
    );

    let n = IndicatorSet::single(&h, Atom::neighborhood(zero.clone(), 0.25))?;
    let is = n.volume(McOptions::new(20_000, 1));
    let bb = n.volume_with(McOptions::new(200_000, 1), VolumeMethod::BoundingBox);
    println!(
        "|N(0,1/4)| importance  {:.5e} +/- {:.1e}",
        is.value, is.std_error
    );
    println!(
        "|N(0,1/4)| bounding box {:.5e} +/- {:.1e}",
        bb.value, bb.std_error
    );

    // D_r scales volumes by r^{d(d+1)}
    let r = 0.5;
    let dn = n.dilated(r).volume(McOptions::new(20_000, 1));
    println!(
        "|D_r N| / |N| = {:.6}, r^6 = {:.6}",
        dn.value / is.value,
        r.powi(6)
    );

    let u = n.union(&ball.translated(&RealPoint(vec![3.0, 0.0, 0.0, 0.0])));
    println!(
        "union of {} atoms: {:.5e}",
        u.atoms().len(),
        u.volume(McOptions::new(20_000, 2)).value
    );
    Ok(())
}
