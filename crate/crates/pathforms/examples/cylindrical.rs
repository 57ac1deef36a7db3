//! Cylindrical functions and one-forms: values, gradients along an H field
//! and the exterior derivative evaluated on a wedge.

use pathforms::cylinder::{CylFn, CylOneForm, Poly};
use pathforms::divergence::SimSetup;
use pathforms::experiments::random::ConfigRng;
use pathforms::manifold::ManifoldSpec;
use pathforms::two_tensor::wedge2;

fn main() -> pathforms::Result<()> {
    let spec = ManifoldSpec::sphere(2)?;
    let chain = SimSetup::new(spec, 128, 1.0).chain(5, 0)?;

    // f = x¹(T/2) · x³(T); variable 4a + c is coordinate c at the a-th time.
    let f = CylFn::new(vec![0.5, 1.0], Poly::new(8, vec![(1.0, vec![(0, 1), (6, 1)])])?)?;
    println!("f(x) = {:.5}", f.eval(&chain)?);

    let mut rng = ConfigRng::new(5, 0, spec.ambient_dim(), 1.0);
    let v = rng.smooth_field().realize(&chain)?;
    println!("df(v) = {:.5}", f.d_cyl(&chain, &v.values)?);

    let phi = CylOneForm::single(f.clone(), 0.75, Poly::coordinate(4, 1))?;
    let w = rng.smooth_field().realize(&chain)?;
    println!("phi(v) = {:.5}", phi.eval(&chain, &v.values)?);
    println!("dphi(v ^ w) = {:.5}", phi.dform_eval(&wedge2(&v, &w)?)?);
    Ok(())
}
