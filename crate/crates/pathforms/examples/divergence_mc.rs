//! Monte Carlo integration by parts: mean of the Skorohod divergence of an
//! adapted field and the rotation-field identity on flat Wiener space.

use pathforms::damped::CmPath;
use pathforms::divergence::{flat_wiener_check, skorohod_mean_check, SimSetup};
use pathforms::experiments::flat_wiener_inputs;
use pathforms::linalg::basis_vec;
use pathforms::manifold::ManifoldSpec;
use pathforms::mc::McOptions;

fn main() -> pathforms::Result<()> {
    let opts = McOptions::new(20_000, 2024);
    let sphere = SimSetup::new(ManifoldSpec::sphere(2)?, 64, 1.0);
    let r = skorohod_mean_check(&sphere, &CmPath::linear(basis_vec(1)), &opts)?;
    println!("E[div h] = {:.4} +- {:.4} (target 0, pass {})", r.estimate, r.std_error, r.pass);

    let flat = SimSetup::new(ManifoldSpec::euclidean(2)?, 64, 1.0);
    let (alpha, phi) = flat_wiener_inputs(1.0)?;
    let fw = flat_wiener_check(&flat, &alpha, &phi, (1.0, -1.0), &opts)?;
    println!("E[dphi(V)]    = {:.4} +- {:.4}", fw.dphi.estimate, fw.dphi.std_error);
    println!("E[phi(div V)] = {:.4} +- {:.4}", fw.phi_div.estimate, fw.phi_div.std_error);
    println!("sum           = {:.4} +- {:.4} (pass {})", fw.combined.estimate, fw.combined.std_error, fw.combined.pass);
    Ok(())
}
