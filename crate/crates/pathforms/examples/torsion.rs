//! Bracket and torsion of two H fields by finite differences, then the torsion
//! divergence identity averaged over paths.

use pathforms::divergence::{bracket_torsion_fd, torsion_divergence_check, SimSetup};
use pathforms::experiments::random::ConfigRng;
use pathforms::experiments::structure::FD_EPS;
use pathforms::experiments::TORSION_BIAS;
use pathforms::manifold::ManifoldSpec;
use pathforms::mc::McOptions;

fn main() -> pathforms::Result<()> {
    let spec = ManifoldSpec::sphere(2)?;
    let setup = SimSetup::new(spec, 64, 1.0);
    let mut rng = ConfigRng::new(9, 0, spec.ambient_dim(), 1.0);
    let cfg = rng.torsion_config()?;

    let chain = setup.chain(9, 0)?;
    let bt = bracket_torsion_fd(&chain, &cfg.u1, &cfg.u2, FD_EPS)?;
    let sup = |v: &[pathforms::linalg::Vec4]| v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    println!("sup |[u1, u2]| = {:.4}, sup |T(u1, u2)| = {:.4}", sup(&bt.bracket), sup(&bt.torsion));

    let opts = McOptions::new(4_000, 9).with_bias(TORSION_BIAS * (setup.dt() + FD_EPS * FD_EPS));
    for r in torsion_divergence_check(&setup, &[cfg], FD_EPS, &opts)? {
        println!("E[dphi(Q(u1 ^ u2)) + phi(T)/2] = {:.4e} +- {:.4e} (pass {})", r.estimate, r.std_error, r.pass);
    }
    Ok(())
}
