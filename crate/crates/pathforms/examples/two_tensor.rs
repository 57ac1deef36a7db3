//! Q and R on a wedge of two H fields: the first-order residual of
//! `(1 + Q)(1 - R) - I` and the membership test of the decomposition.

use pathforms::divergence::SimSetup;
use pathforms::experiments::random::ConfigRng;
use pathforms::manifold::ManifoldSpec;
use pathforms::two_tensor::{h2_decompose, inverse_residual, q_apply, structure_solve, wedge2};

fn main() -> pathforms::Result<()> {
    let spec = ManifoldSpec::sphere(2)?;
    for n in [32, 64, 128, 256] {
        let chain = SimSetup::new(spec, n, 1.0).chain(11, 0)?;
        let mut rng = ConfigRng::new(11, 0, spec.ambient_dim(), 1.0);
        let u1 = rng.smooth_field().realize(&chain)?;
        let u2 = rng.smooth_field().realize(&chain)?;
        let g = wedge2(&u1, &u2)?;
        let member = h2_decompose(&structure_solve(&g)?)?;
        let outsider = h2_decompose(&g.add_scaled(2.0, &q_apply(&g)?)?)?;
        println!(
            "N = {n:>4}: inverse residual {:.3e}, |(1+Q)G|_H2 = {:.4}, diagonal mass {:.3e} (member) vs {:.3e} ((1+2Q)G)",
            inverse_residual(&g)?,
            member.norm,
            member.membership_residual,
            outsider.membership_residual
        );
    }
    Ok(())
}
