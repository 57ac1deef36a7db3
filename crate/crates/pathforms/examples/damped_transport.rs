//! Simulate a Brownian path on S², build the damped transport chain and check
//! that `𝒲` and `𝔻/dt` invert each other on a smooth field.

use pathforms::damped::{dd_dt, script_w};
use pathforms::divergence::SimSetup;
use pathforms::experiments::random::ConfigRng;
use pathforms::manifold::ManifoldSpec;

fn main() -> pathforms::Result<()> {
    let spec = ManifoldSpec::sphere(2)?;
    let setup = SimSetup::new(spec, 256, 1.0);
    let chain = setup.chain(7, 0)?;
    let x = chain.point(chain.n_steps());
    println!("x_T = ({:.4}, {:.4}, {:.4})", x[0], x[1], x[2]);
    println!("|W_T| (Frobenius) = {:.4}", chain.w(chain.n_steps()).norm());

    let field = ConfigRng::new(7, 0, spec.ambient_dim(), 1.0).smooth_field().realize(&chain)?;
    let back = dd_dt(&chain, &script_w(&chain, &field.kernel)?)?;
    let err = back.iter().zip(&field.kernel).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("sup |D/dt W k - k| = {err:.2e}");
    Ok(())
}
