use avglab::bands::{build_bands, BandParams, PointConfig};
use avglab::curve::anisotropic_dilate;
use avglab::extremizers::{duality_consistency, inv_p_d, inv_q_d, ExponentPair};
use avglab::jacobian::{build_regions, complete_homogeneous, vandermonde, RegionParams};
use avglab::lorentz::{nesting_constant, LayerProfile, StepProfile};
use avglab::measure::{alpha_beta, ExponentTuple};
use avglab::{ComplexCurve, RealPoint};
use num_complex::Complex64;
use num_rational::Rational64 as Q;
use proptest::prelude::*;
use std::collections::BTreeSet;

fn point() -> impl Strategy<Value = Complex64> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r.sqrt(), t))
}

fn points(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(point(), n)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1u64, |acc, i| acc * (n + 1 - i) / i)
}

/// `p^{1/u} (∫ (λ d_f(λ)^{1/p})^u dλ/λ)^{1/u}` from the distribution function.
fn distribution_norm(steps: &[(f64, f64)], p: f64, u: f64) -> f64 {
    let mut levels: Vec<f64> = steps.iter().map(|s| s.0).filter(|v| *v > 0.0).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let mut lo = 0.0;
    let mut sum = 0.0;
    for hi in levels {
        // d_f is constant on (lo, hi)
        let d: f64 = steps.iter().filter(|s| s.0 >= hi).map(|s| s.1).sum();
        sum += d.powf(u / p) * (hi.powf(u) - f64::powf(lo, u)) / u;
        lo = hi;
    }
    (p * sum).powf(1.0 / u)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moment_curve_commutes_with_dilation(z in point(), r in 0.05..3.0f64, d in 2usize..6) {
        let h = ComplexCurve::monomial(d, d as u32).unwrap();
        let lhs = h.eval(z * r);
        let rhs = anisotropic_dilate(&h.eval(z), r);
        for (a, b) in lhs.0.iter().zip(&rhs.0) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn dilation_group_law(x in prop::collection::vec(-2.0..2.0f64, 6), r in 0.1..3.0f64, s in 0.1..3.0f64) {
        let x = RealPoint(x);
        let a = anisotropic_dilate(&anisotropic_dilate(&x, r), s);
        let b = anisotropic_dilate(&x, r * s);
        for (u, v) in a.0.iter().zip(&b.0) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn first_derivative_matches_central_difference(z in point(), n in 3u32..8) {
        let h = ComplexCurve::monomial(3, n).unwrap();
        let step = 1e-5;
        let dh = h.derivative(z, 1);
        let fwd = h.eval_complex(z + step);
        let bwd = h.eval_complex(z - step);
        for j in 0..3 {
            let fd = (fwd[j] - bwd[j]) / (2.0 * step);
            prop_assert!((fd - dh[j]).norm() <= 1e-6 * (1.0 + dh[j].norm()));
        }
    }

    #[test]
    fn vandermonde_flips_under_transposition(zs in points(5), i in 0usize..5, j in 0usize..5) {
        prop_assume!(i != j);
        let mut sw = zs.clone();
        sw.swap(i, j);
        let a = vandermonde(&zs);
        let b = vandermonde(&sw);
        prop_assert!((a + b).norm() <= 1e-13 * a.norm().max(1e-300) + 1e-300);
    }

    #[test]
    fn complete_homogeneous_is_symmetric(zs in points(4), m in 0usize..7, perm in Just(()).prop_perturb(|_, mut rng| {
        let mut v: Vec<usize> = (0..4).collect();
        for k in (1..4).rev() { v.swap(k, rng.random_range(0..=k)); }
        v
    })) {
        let shuffled: Vec<Complex64> = perm.iter().map(|&k| zs[k]).collect();
        let a = complete_homogeneous(m, &zs);
        let b = complete_homogeneous(m, &shuffled);
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn complete_homogeneous_counts_monomials(m in 0usize..12, d in 1usize..7) {
        let ones = vec![Complex64::new(1.0, 0.0); d];
        let want = binomial((m + d - 1) as u64, (d - 1) as u64);
        prop_assert_eq!(complete_homogeneous(m, &ones).re, want as f64);
    }

    #[test]
    fn monomial_sectors_cover_once(z in point(), n in 3u32..7) {
        prop_assume!(z.norm() > 1e-9);
        let h = ComplexCurve::monomial(3, n).unwrap();
        let regions = build_regions(&h, &RegionParams::default()).unwrap();
        prop_assert_eq!(regions.iter().filter(|r| r.contains(z)).count(), 1);
    }

    #[test]
    fn bands_partition_and_are_deterministic(zs in points(6), scale in 0.2..5.0f64) {
        let cfg = PointConfig::new(zs.clone()).unwrap();
        let params = BandParams::new(3, 0, (1e-2, 1e-5, 2e-2), (0.3, 0.05, 0.02)).unwrap();
        let s = build_bands(&cfg, &params);
        let all: BTreeSet<usize> = (1..=6).collect();
        prop_assert!(s.is_partition_of(&all));
        for b in s.bands() {
            prop_assert_eq!(b.free(), *b.members().iter().min().unwrap());
        }
        prop_assert_eq!(&build_bands(&cfg, &params), &s);
        // with K = 0, scaling points by λ and levels by λ² keeps every band
        let scaled = PointConfig::new(zs.iter().map(|z| z * scale).collect()).unwrap();
        let l2 = scale * scale;
        let sp = BandParams::new(3, 0, (1e-2 * l2, 1e-5 * l2, 2e-2 * l2), (0.3, 0.05, 0.02)).unwrap();
        let t = build_bands(&scaled, &sp);
        let members = |x: &avglab::bands::BandStructure| -> Vec<Vec<usize>> {
            x.bands().iter().map(|b| b.members().to_vec()).collect()
        };
        prop_assert_eq!(members(&t), members(&s));
    }

    #[test]
    fn alpha_beta_identity_is_exact(ve in 1e-6..1e6f64, vf in 1e-6..1e6f64, p in 1e-9..1e3f64) {
        let (a, b) = alpha_beta(ve, vf, p).unwrap();
        prop_assert!(rel(a * vf, b * ve) <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn exponent_checker_matches_integer_slack(r1 in 0i64..4, r2 in 0i64..4, s1 in 0i64..4, s2 in 0i64..4) {
        let t = ExponentTuple::new(r1, r2, s1, s2);
        // d = 3: q_d = 3, so s2 (2/3) - r2 (1/3) - 1 > 0 iff 2 s2 - r2 - 3 > 0
        let ok = r1 + r2 == 3 && s1 + s2 == 3 && 2 * s2 - r2 - 3 > 0;
        prop_assert_eq!(t.validate(3).is_ok(), ok);
    }

    #[test]
    fn lorentz_norm_is_homogeneous(layers in prop::collection::btree_map(-8i32..8, 1e-3..1e3f64, 1..10), p in 1.1..4.0f64, u in 0.5..6.0f64, shift in -5i32..5) {
        let f = LayerProfile::new(layers.into_iter().collect());
        let g = f.shifted(shift);
        let c = 2f64.powi(shift);
        prop_assert!(rel(g.lorentz_norm(p, u), c * f.lorentz_norm(p, u)) <= 1e-12);
        prop_assert!(rel(g.discrete_lorentz(p, u), c * f.discrete_lorentz(p, u)) <= 1e-12);
    }

    #[test]
    fn rearrangement_norm_matches_distribution_formula(
        steps in prop::collection::vec((1e-3..1e3f64, 1e-3..1e3f64), 1..10),
        p in 1.1..4.0f64,
        u in 0.5..6.0f64,
    ) {
        let f = StepProfile::new(steps.clone());
        prop_assert!(rel(f.lorentz_norm(p, u), distribution_norm(&steps, p, u)) <= 1e-6);
    }

    #[test]
    fn nesting_constant_bounds_larger_index(
        steps in prop::collection::vec((1e-3..1e3f64, 1e-3..1e3f64), 1..10),
        p in 1.1..4.0f64,
        u in 0.5..4.0f64,
        extra in 0.0..4.0f64,
    ) {
        let f = StepProfile::new(steps);
        let v = u + extra;
        let c = nesting_constant(p, u, v);
        prop_assert!(f.lorentz_norm(p, v) <= c * f.lorentz_norm(p, u) * (1.0 + 1e-12));
        prop_assert!(f.lorentz_norm(p, f64::INFINITY) <= nesting_constant(p, u, f64::INFINITY) * f.lorentz_norm(p, u) * (1.0 + 1e-12));
    }

    #[test]
    fn trapezoid_vertex_is_tight(d in 2usize..9) {
        let slack = ExponentPair::vertex(d).trapezoid_slack(d);
        prop_assert_eq!(slack.iter().filter(|s| **s == Q::from_integer(0)).count() >= 2, true);
        let dual = ExponentPair::dual_vertex(d);
        prop_assert_eq!(dual.inv_p, Q::from_integer(1) - inv_q_d(d));
        prop_assert_eq!(dual.inv_q, Q::from_integer(1) - inv_p_d(d));
    }

    #[test]
    fn adjoint_families_are_dual(d in 2usize..7, a in 1i64..12, b in 1i64..12, c in 1i64..12, e in 1i64..12) {
        let pts = [(Q::new(a, 12), Q::new(b, 12), Q::new(c, 12), Q::new(e, 12))];
        prop_assert!(duality_consistency(d, &pts));
    }
}
