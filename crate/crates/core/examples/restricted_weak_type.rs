//! The ratio <T chi_E, chi_F> / (|E|^{1/p_d} |F|^{1/q_d'}) along the dilation
//! family E = D_r N(0,1), F = D_r B(0,1) stays flat, and the pairing scales
//! like r^{d(d+1)+2}.

use avglab::extremizers::ScalingFit;
use avglab::measure::{alpha_beta, rwt_ratio, Atom, IndicatorSet, McOptions, Operator};
use avglab::{ComplexCurve, RealPoint};

fn main() -> avglab::Result<()> {
    let h = ComplexCurve::monomial(2, 2)?;
    let op = Operator::on_disk(&h);
    let zero = RealPoint::zeros(2);
    let n = IndicatorSet::single(&h, Atom::neighborhood(zero.clone(), 1.0))?;
    let b = IndicatorSet::single(&h, Atom::ball(zero, 1.0))?;
    let vol_n = n.volume(McOptions::new(20_000, 1)).value;
    let vol_b = b.volume(McOptions::new(1, 0)).value;

    let radii = [0.5, 0.25, 0.125, 0.0625];
    let mut values = Vec::new();
    for &r in &radii {
        let p = op.pairing(&n.dilated(r), &b.dilated(r), McOptions::new(50_000, 3))?;
        let (ve, vf) = (vol_n * r.powi(6), vol_b * r.powi(6));
        let (alpha, beta) = alpha_beta(ve, vf, p.value)?;
        println!(
            "r = {r:<7} pairing {:.4e}  alpha {alpha:.4e}  beta {beta:.4e}  ratio {:.5}",
            p.value,
            rwt_ratio(p.value, ve, vf, 2)?
        );
        values.push(p.value);
    }
    let fit = ScalingFit::fit(&radii, &values)?;
    println!("pairing slope {:.4} (r^2 {:.6})", fit.slope, fit.r2_fit);
    Ok(())
}
