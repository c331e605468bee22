//! Builds an experiment config in code, runs the suite in memory and prints
//! the assertion lines and the CSV artifacts it would write.

use avglab::cli::{run_suite, ExperimentConfig, Suite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_json(
        r#"{"suite": "jacobian", "seed": 7, "curve": {"d": 3, "phi": {"monomial": 5}},
            "budget": {"samples": 5}, "jacobian": {"factorization_tol": 1e-10}}"#,
    )?;
    let mut lorentz = ExperimentConfig::new(Suite::Lorentz);
    lorentz.budget.samples = Some(100);
    for c in [cfg, lorentz] {
        let out = run_suite(&c)?;
        println!("== {}", c.id());
        for a in &out.assertions {
            println!("{}", a.line());
        }
        for art in &out.artifacts {
            println!(
                "-- {}\n{}",
                art.name,
                String::from_utf8_lossy(&art.contents)
            );
        }
    }
    Ok(())
}
