//! E-form and F-form trilinear ratios on dilation families, with the
//! pointwise hypotheses checked on sampled points.

use avglab::measure::{Atom, ExponentTuple, IndicatorSet, McOptions, Operator, TrilinearOptions};
use avglab::{ComplexCurve, RealPoint};

fn main() -> avglab::Result<()> {
    let h = ComplexCurve::monomial(3, 3)?;
    let op = Operator::on_disk(&h);
    let zero = RealPoint::zeros(3);
    let opts = TrilinearOptions {
        probes: 8,
        nodes: 48,
        volume: McOptions::new(10_000, 1),
        seed: 2,
    };
    let tuple = ExponentTuple::default_for(3).unwrap();
    for r in [0.5, 0.25, 0.125] {
        let e = IndicatorSet::single(&h, Atom::neighborhood(zero.clone(), 1.0).dilated(r))?;
        let g = IndicatorSet::single(&h, Atom::ball(zero.clone(), 1.0).dilated(r))?;
        let core = IndicatorSet::single(&h, Atom::neighborhood(zero.clone(), 0.5).dilated(r))?;
        // T chi_{D_r N(0,1)} >= sigma(|z| <= r) on D_r B(0,1)
        let alpha = h.disk_measure(r).unwrap();
        let re = op.trilinear_ratio_e(&e, &e, &g, (alpha, alpha), opts)?;
        let rf = op.trilinear_ratio_f(&g, &g, &core, tuple, opts)?;
        println!(
            "r = {r:<6} E-form {:.5e} (sampled min {:.4e} >= {alpha:.4e})  F-form {:.5e}",
            re.ratio, re.min1.min, rf.ratio
        );
    }
    for t in [(3, 0, 1, 2), (3, 0, 2, 1)] {
        let t = ExponentTuple::new(t.0, t.1, t.2, t.3);
        println!("{t:?}: {:?}", t.validate(3));
    }
    Ok(())
}
