//! Kernel operators on ℋ: the pairing identity, skewness of the damped
//! curvature operator and its trace pairing with a rank-one operator.

use pathforms::damped::h_inner;
use pathforms::divergence::SimSetup;
use pathforms::experiments::random::ConfigRng;
use pathforms::manifold::ManifoldSpec;
use pathforms::two_tensor::r_apply;
use pathforms::operator::{pairing_residual, skew_defect, trace_pairing, H2Element, Operator, WedgeSum};

fn main() -> pathforms::Result<()> {
    let spec = ManifoldSpec::sphere(2)?;
    let chain = SimSetup::new(spec, 128, 1.0).chain(3, 0)?;
    let mut rng = ConfigRng::new(3, 0, spec.ambient_dim(), 1.0);
    let a = rng.smooth_field().realize(&chain)?;
    let b = rng.smooth_field().realize(&chain)?;
    let v = rng.smooth_field().realize(&chain)?;
    let l = rng.smooth_field().realize(&chain)?;

    let u = H2Element::new(WedgeSum::single(a.clone(), b.clone()))?;
    println!("pairing residual |<i_v u, l> - <u, v ^ l>| = {:.3e}", pairing_residual(&v, &l, &u)?);

    let k = Operator::Kernel(r_apply(&rng.smooth_grid().realize(&chain))?);
    println!("skew defect |<h, Kk> + <k, Kh>| = {:.3e}", skew_defect(&k, &v, &l)?);

    let rank_one = Operator::FiniteRank(vec![(1.0, a.clone(), b.clone())]);
    let direct = h_inner(&a, &k.apply(&b)?)?;
    println!("trace pairing {:.6} vs <a, K b> = {direct:.6}", trace_pairing(&rank_one, &k)?);
    Ok(())
}
