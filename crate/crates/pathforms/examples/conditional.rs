//! Conditional expectation of the derivative flow against the damped field,
//! tested weakly against random cylindrical test functions.

use pathforms::divergence::{conditional_weak_check, SimSetup};
use pathforms::experiments::random::ConfigRng;
use pathforms::manifold::ManifoldSpec;
use pathforms::mc::McOptions;

fn main() -> pathforms::Result<()> {
    let spec = ManifoldSpec::sphere(2)?;
    let setup = SimSetup::new(spec, 64, 1.0);
    let mut rng = ConfigRng::new(10, 0, spec.ambient_dim(), 1.0);
    let probes: Vec<_> = (0..3).map(|_| rng.one_vector_probe(64)).collect::<Result<_, _>>()?;
    for (k, r) in conditional_weak_check(&setup, &probes, &McOptions::new(10_000, 10))?.iter().enumerate() {
        println!("probe {k}: {:.4} vs {:.4} (SE {:.4}, pass {})", r.estimate, r.target, r.std_error, r.pass);
    }
    Ok(())
}
