use proptest::prelude::*;

use pathforms::damped::{dd_dt, h_inner, script_w, HVectorField};
use pathforms::divergence::SimSetup;
use pathforms::linalg::{skew_coords, skew_from_coords, wedge, Vec4, Vec6};
use pathforms::manifold::ManifoldSpec;
use pathforms::mc::{summarize, McOptions};
use pathforms::operator::{skew_defect, Operator};
use pathforms::rng::Driver;
use pathforms::two_tensor::{q_apply, wedge2};

fn vec3() -> impl Strategy<Value = Vec4> {
    prop::array::uniform3(-2.0f64..2.0).prop_map(|a| Vec4::new(a[0], a[1], a[2], 0.0))
}

fn field(chain: &std::sync::Arc<pathforms::damped::DampedChain>, a: Vec4, w: f64) -> HVectorField {
    let p0 = chain.spec().projection(chain.point(0));
    let k = (0..chain.n_steps()).map(|i| chain.par[i] * p0 * a * (w * chain.time(i)).cos()).collect();
    HVectorField::from_kernel(chain, k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn script_w_and_dd_dt_are_inverse(seed in 0u64..1000, a in vec3(), w in 0.0f64..4.0) {
        let chain = SimSetup::new(ManifoldSpec::sphere(2).unwrap(), 32, 1.0).chain(seed, 0).unwrap();
        let h = field(&chain, a, w);
        let back = dd_dt(&chain, &script_w(&chain, &h.kernel).unwrap()).unwrap();
        for (x, y) in back.iter().zip(&h.kernel) {
            prop_assert!((x - y).norm() <= 1e-10 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn h_inner_is_symmetric(seed in 0u64..1000, a in vec3(), b in vec3(), w in 0.0f64..4.0) {
        let chain = SimSetup::new(ManifoldSpec::sphere(2).unwrap(), 32, 1.0).chain(seed, 0).unwrap();
        let (x, y) = (field(&chain, a, w), field(&chain, b, 1.0));
        prop_assert!((h_inner(&x, &y).unwrap() - h_inner(&y, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn q_of_a_wedge_is_skew(seed in 0u64..1000, a in vec3(), b in vec3(), c in vec3(), d in vec3()) {
        let chain = SimSetup::new(ManifoldSpec::sphere(2).unwrap(), 32, 1.0).chain(seed, 0).unwrap();
        let g = wedge2(&field(&chain, a, 1.0), &field(&chain, b, 2.0)).unwrap();
        let op = Operator::Kernel(q_apply(&g).unwrap());
        let defect = skew_defect(&op, &field(&chain, c, 0.5), &field(&chain, d, 3.0)).unwrap();
        prop_assert!(defect < 1e-10);
    }

    #[test]
    fn sphere_paths_stay_on_the_sphere(seed in 0u64..1000, n in 8usize..64) {
        let chain = SimSetup::new(ManifoldSpec::sphere(2).unwrap(), n, 1.0).chain(seed, 3).unwrap();
        for i in 0..=n {
            prop_assert!((chain.point(i).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn skew_coordinates_round_trip(c in prop::array::uniform6(-3.0f64..3.0)) {
        let v = Vec6::from_column_slice(&c);
        prop_assert!((skew_coords(&skew_from_coords(&v)) - v).norm() < 1e-14);
    }

    #[test]
    fn wedge_is_antisymmetric(a in vec3(), b in vec3()) {
        prop_assert!((wedge(&a, &b) + wedge(&b, &a)).norm() < 1e-14);
    }

    #[test]
    fn coarsened_driver_sums_increments(seed in 0u64..1000) {
        let fine = Driver::generate(seed, 0, 32, 1.0, 3).unwrap();
        let coarse = fine.coarsen().unwrap();
        prop_assert_eq!(coarse.n_steps(), 16);
        let (bf, bc) = (fine.brownian(), coarse.brownian());
        for k in 0..=16 {
            prop_assert!((bf[2 * k] - bc[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn summary_is_order_independent(mut xs in prop::collection::vec(-1e3f64..1e3, 100..300)) {
        let opts = McOptions::new(xs.len(), 0);
        let a = summarize(&xs, &opts);
        xs.reverse();
        let b = summarize(&xs, &opts);
        prop_assert!((a.estimate - b.estimate).abs() <= 1e-12 * (1.0 + a.estimate.abs()));
        prop_assert!((a.std_error - b.std_error).abs() <= 1e-9 * (1.0 + a.std_error));
    }
}
