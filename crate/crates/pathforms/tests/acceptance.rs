//! Acceptance criteria 1–13. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Tolerances are pinned below.

use std::process::ExitCode;
use std::time::Instant;

use pathforms::divergence::{conditional_weak_check, flat_wiener_check, rotation_div_check, sample_columns, torsion_divergence_check, torsion_divergence_terms, SimSetup};
use pathforms::experiments::random::ConfigRng;
use pathforms::experiments::report::csv_string;
use pathforms::experiments::structure::{self, RatioOutcome, FD_EPS};
use pathforms::experiments::{control_config, flat_wiener_inputs, run_suite, RunConfig, TORSION_BIAS};
use pathforms::manifold::ManifoldSpec;
use pathforms::mc::{summarize, McOptions, McReport};

const SEED: u64 = 2024;
const EXACT: f64 = 1e-10;
const RATIO: (f64, f64) = (1.6, 2.4);
/// Constant in the `C·Δt` bounds of the refinement criteria.
const C_DT: f64 = 10.0;
/// Constant in the `C·Δt` bounds of residuals that are exact up to rounding on S².
const C_EXACT_DT: f64 = 1.0;

type Outcome = (bool, String);

fn s2() -> ManifoldSpec {
    ManifoldSpec::sphere(2).unwrap()
}

fn mc_line(reps: &[McReport]) -> String {
    let worst = reps.iter().map(|r| (r.estimate - r.target).abs() / r.std_error.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    format!("{} configs, worst |est - target| / SE = {worst:.2}", reps.len())
}

fn ratio_ok(o: &RatioOutcome, dt_fine: f64) -> Outcome {
    let ratios = o.ratios();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(l, h), r| (l.min(*r), h.max(*r)));
    let ok = o.first_order(RATIO.0, RATIO.1, 0.0) && o.max_fine() <= C_DT * dt_fine;
    (
        ok,
        format!(
            "sup residual {:.3e} -> {:.3e} (bound {:.3e}), ratio {:.3}; per-case ratios in [{lo:.3}, {hi:.3}]",
            o.max_coarse(),
            o.max_fine(),
            C_DT * dt_fine,
            o.ensemble_ratio()
        ),
    )
}

fn c1_flat_collapse() -> Outcome {
    let mut worst = 0.0f64;
    for spec in [ManifoldSpec::euclidean(2).unwrap(), ManifoldSpec::flat_torus(2).unwrap()] {
        worst = worst.max(structure::flat_collapse(spec, 64, SEED).unwrap());
        let setup = SimSetup::new(spec, 64, 1.0);
        worst = worst.max(structure::pairing_check(&setup, SEED, 5).unwrap());
    }
    (worst <= EXACT, format!("max residual {worst:.3e}"))
}

fn c2_weitzenbock() -> Outcome {
    let a = structure::weitzenbock_check(s2(), 100, SEED).unwrap();
    let b = structure::weitzenbock_check(ManifoldSpec::sphere(3).unwrap(), 100, SEED).unwrap();
    (a.max(b) <= EXACT, format!("S2 {a:.3e}, S3 {b:.3e}"))
}

fn c3_mutual_inverses() -> Outcome {
    let o = structure::mutual_inverse_sweep(&SimSetup::new(s2(), 64, 1.0), SEED, 20).unwrap();
    ratio_ok(&o, 1.0 / 128.0)
}

fn c4_closed_forms() -> Outcome {
    let (w, w2) = structure::closed_form_check(128, 100, SEED).unwrap();
    let bound = 5.0 / 128.0;
    (w <= bound && w2 <= bound, format!("W {w:.3e}, W2 {w2:.3e}, bound {bound:.3e}"))
}

fn c5_conjugacy() -> Outcome {
    let o = structure::conjugacy_sweep(&SimSetup::new(s2(), 64, 1.0), SEED, 20).unwrap();
    ratio_ok(&o, 1.0 / 128.0)
}

fn c6_pairing() -> Outcome {
    let flat = structure::pairing_check(&SimSetup::new(ManifoldSpec::euclidean(2).unwrap(), 128, 1.0), SEED, 10).unwrap();
    let curved = structure::pairing_check(&SimSetup::new(s2(), 128, 1.0), SEED, 10).unwrap();
    let bound = C_EXACT_DT / 128.0;
    (flat <= EXACT && curved <= bound, format!("flat {flat:.3e}, S2 {curved:.3e} (bound {bound:.3e})"))
}

fn c7_flat_wiener() -> Outcome {
    let setup = SimSetup::new(ManifoldSpec::euclidean(2).unwrap(), 128, 1.0);
    let (alpha, phi) = flat_wiener_inputs(1.0).unwrap();
    let r = flat_wiener_check(&setup, &alpha, &phi, (1.0, -1.0), &McOptions::new(100_000, SEED)).unwrap();
    let ok = r.dphi.pass && r.phi_div.pass && r.combined.pass;
    let line = format!(
        "E[dphi(V)] = {:.4} +- {:.4}, E[phi(div V)] = {:.4} +- {:.4}, sum = {:.4} +- {:.4}",
        r.dphi.estimate, r.dphi.std_error, r.phi_div.estimate, r.phi_div.std_error, r.combined.estimate, r.combined.std_error
    );
    (ok, line)
}

fn c8_rotation() -> Outcome {
    let setup = SimSetup::new(s2(), 128, 1.0);
    let mut r = ConfigRng::new(SEED, 8, 3, 1.0);
    let cases: Vec<_> = (0..5).map(|_| (r.skew_field(), r.cyl_fn().unwrap())).collect();
    let reps = rotation_div_check(&setup, &cases, &McOptions::new(100_000, SEED).with_bias(5.0 / 128.0)).unwrap();
    (reps.iter().all(|r| r.pass), mc_line(&reps))
}

fn c9_torsion() -> Outcome {
    let setup = SimSetup::new(s2(), 128, 1.0);
    let mut r = ConfigRng::new(SEED, 9, 3, 1.0);
    let configs: Vec<_> = (0..5).map(|_| r.torsion_config().unwrap()).collect();
    let opts = McOptions::new(20_000, SEED).with_bias(TORSION_BIAS * (1.0 / 128.0 + FD_EPS * FD_EPS));
    let reps = torsion_divergence_check(&setup, &configs, FD_EPS, &opts).unwrap();
    let (base, f) = control_config(1.0).unwrap();
    let mut scaled = base;
    scaled.u1.coef = Some(f);
    let cols = sample_columns(&setup, &opts, 1, true, |c| {
        let (a, b) = torsion_divergence_terms(c, &scaled.u1, &scaled.u2, &scaled.phi, FD_EPS)?;
        Ok(vec![a + b])
    })
    .unwrap();
    let control = summarize(&cols[0], &opts);
    let z = control.estimate.abs() / control.std_error;
    let ok = reps.iter().all(|r| r.pass) && z > 5.0;
    (ok, format!("{}; control residual {:.4e} = {z:.1} SE", mc_line(&reps), control.estimate))
}

fn c10_conditional() -> Outcome {
    let setup = SimSetup::new(s2(), 128, 1.0);
    let opts = McOptions::new(100_000, SEED);
    let mut r1 = ConfigRng::new(SEED, 10, 3, 1.0);
    let one: Vec<_> = (0..20).map(|_| r1.one_vector_probe(128).unwrap()).collect();
    let a = conditional_weak_check(&setup, &one, &opts).unwrap();
    let mut r2 = ConfigRng::new(SEED, 11, 3, 1.0);
    let two: Vec<_> = (0..20).map(|_| r2.two_vector_probe(128).unwrap()).collect();
    let b = conditional_weak_check(&setup, &two, &opts).unwrap();
    let ok = a.iter().chain(&b).all(|r| r.pass);
    (ok, format!("one-vector: {}; two-vector: {}", mc_line(&a), mc_line(&b)))
}

fn c11_curvature() -> Outcome {
    let (o, defect) = structure::curvature_sweep(&SimSetup::new(s2(), 64, 1.0), SEED, 20).unwrap();
    let (ok, line) = ratio_ok(&o, 1.0 / 128.0);
    (ok && defect <= 1e-8, format!("{line}; skew defect {defect:.3e}"))
}

fn c12_derivation_cartan() -> Outcome {
    let flat = SimSetup::new(ManifoldSpec::euclidean(2).unwrap(), 64, 1.0);
    let curved = SimSetup::new(s2(), 64, 1.0);
    let fd = structure::derivation_check(&flat, SEED, 10).unwrap();
    let fc = structure::cartan_check(&flat, SEED, 5).unwrap();
    let cd = structure::derivation_check(&curved, SEED, 10).unwrap();
    let cc = structure::cartan_check(&curved, SEED, 5).unwrap();
    let bound = C_EXACT_DT / 64.0;
    let ok = fd.max(fc) <= EXACT && cd.max(cc) <= bound;
    (ok, format!("flat derivation {fd:.3e}, cartan {fc:.3e}; S2 derivation {cd:.3e}, cartan {cc:.3e} (bound {bound:.3e})"))
}

fn c13_determinism() -> Outcome {
    let cfg = RunConfig { steps: 16, samples: 300, ..RunConfig::default() };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| csv_string(&run_suite(&cfg).unwrap()).unwrap())
    };
    let four = run(4);
    let one = run(1);
    (four == one, format!("{} CSV bytes, 4 threads vs 1 thread identical: {}", four.len(), four == one))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("flat collapse", c1_flat_collapse),
        ("Weitzenbock identity", c2_weitzenbock),
        ("mutual inverses", c3_mutual_inverses),
        ("damped transport closed forms", c4_closed_forms),
        ("multiplier conjugacy", c5_conjugacy),
        ("pairing identity", c6_pairing),
        ("flat Wiener rotation field", c7_flat_wiener),
        ("rotations are divergence free", c8_rotation),
        ("torsion divergence", c9_torsion),
        ("conditional expectation checks", c10_conditional),
        ("damped curvature kernel", c11_curvature),
        ("derivation and Cartan formula", c12_derivation_cartan),
        ("thread-count determinism", c13_determinism),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.contains(&(k + 1)) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = f();
        println!("criterion {:>2} {:<32} {}  {detail}  [{:.1}s]", k + 1, name, if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
        failed += usize::from(!ok);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
