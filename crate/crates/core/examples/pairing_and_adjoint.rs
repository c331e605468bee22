//! <T chi_E, chi_F> estimated from both sides; Fubini makes them agree.

use avglab::measure::{Atom, IndicatorSet, McOptions, Operator};
use avglab::{ComplexCurve, RealPoint};

fn main() -> avglab::Result<()> {
    let h = ComplexCurve::monomial(2, 2)?;
    let op = Operator::on_disk(&h);
    let e = IndicatorSet::single(
        &h,
        Atom::neighborhood(RealPoint(vec![0.1, 0.0, -0.1, 0.2]), 0.5),
    )?;
    let f = IndicatorSet::single(&h, Atom::ball(RealPoint(vec![0.0, 0.2, 0.1, 0.0]), 0.8))?;

    let x = RealPoint::zeros(2);
    println!("T chi_E(0)  = {:.6}", op.apply(&e, &x, 128));
    println!("T* chi_F(0) = {:.6}", op.apply_star(&f, &x, 128));

    let a = op.pairing(&e, &f, McOptions::new(50_000, 1))?;
    let b = op.pairing_star(&f, &e, McOptions::new(50_000, 2))?;
    println!(
        "<T chi_E, chi_F>  = {:.5e} +/- {:.1e}",
        a.value, a.std_error
    );
    println!(
        "<T* chi_F, chi_E> = {:.5e} +/- {:.1e}",
        b.value, b.std_error
    );
    println!("z = {:.2}", a.z_score(&b));
    Ok(())
}
