//! Samples an admissible configuration, groups its points into bands and
//! checks the band properties, shrinking the radii when needed.

use avglab::bands::{
    build_bands, check_setup_predicates, shrink_and_rebuild, verify_band_properties,
    AdmissibleSampler, ShrinkOptions,
};
use avglab::rng::SampleRng;

fn main() -> avglab::Result<()> {
    let sampler = AdmissibleSampler::new(3, 1);
    let cfg = sampler
        .sample(&mut SampleRng::new(11, 0), 5000)
        .expect("admissible configuration");
    let params = sampler.params_for(&cfg)?;
    println!(
        "setup predicates hold: {}",
        check_setup_predicates(&cfg, &params, sampler.c).all_pass()
    );

    let s = build_bands(&cfg, &params);
    for b in s.bands() {
        println!(
            "band {:?}: free {}, quasi-free {:?}, bound {:?}",
            b.members(),
            b.free(),
            b.quasi_free(),
            b.bound()
        );
    }
    println!("free + quasi-free = {}", s.free_plus_quasifree());
    let report = verify_band_properties(&s, &cfg, &params)?;
    println!("{report:#?}");
    if !report.bound_within_delta_prime {
        let (p2, _) = shrink_and_rebuild(&cfg, &params, &ShrinkOptions::default())?;
        println!("after shrinking: delta = {:.3e}", p2.delta);
    }
    Ok(())
}
