//! The trapezoid of admissible (1/p, 1/q) and the exact identities between
//! its vertices, in rational arithmetic.

use avglab::extremizers::{duality_identities, trapezoid_membership, ExponentPair};
use num_rational::Rational64 as Q;

fn main() -> avglab::Result<()> {
    for d in 2..=5 {
        let v = ExponentPair::vertex(d);
        let w = ExponentPair::dual_vertex(d);
        println!(
            "d = {d}: vertex ({}, {}), dual vertex ({}, {}), identities {:?}",
            v.inv_p,
            v.inv_q,
            w.inv_p,
            w.inv_q,
            duality_identities(d)
        );
    }
    for (a, b) in [
        (Q::new(1, 2), Q::new(1, 2)),
        (Q::new(2, 3), Q::new(1, 3)),
        (Q::new(1, 2), Q::new(1, 5)),
    ] {
        let pq = ExponentPair::new(a, b)?;
        println!(
            "({a}, {b}) in trapezoid for d = 2: {}",
            trapezoid_membership(pq, 2)
        );
    }
    Ok(())
}
