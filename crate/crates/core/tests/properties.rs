use proptest::prelude::*;

use qbfs::constants::muckenhoupt_weight_constant;
use qbfs::dyadic::{GridFunction, Mesh};
use qbfs::operators::OperatorSpec;
use qbfs::spaces::{kothe_dual_norm, norm, SpaceSpec};

fn cells(depth: u32, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, 1usize << depth)
}

fn mesh(depth: u32) -> Mesh {
    Mesh::new(1, depth).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maximal_dominates_its_argument(v in cells(4, 0.0, 10.0)) {
        let f = GridFunction::new(mesh(4), v).unwrap();
        let m = OperatorSpec::DyadicMaximal.apply(&f).unwrap();
        prop_assert!(m.values().iter().zip(f.values()).all(|(a, b)| a >= b));
        let mm = OperatorSpec::DyadicMaximal.apply(&m).unwrap();
        prop_assert!(mm.values().iter().zip(m.values()).all(|(a, b)| a >= b));
    }

    #[test]
    fn weight_constant_at_least_one(w in cells(3, 0.1, 5.0), p in 1.0f64..6.0) {
        let w = GridFunction::new(mesh(3), w).unwrap();
        prop_assert!(muckenhoupt_weight_constant(&w, p).unwrap().value >= 1.0 - 1e-12);
    }

    #[test]
    fn luxemburg_norm_is_a_norm(
        p in prop::collection::vec(1.0f64..5.0, 8),
        f in cells(3, 0.0, 3.0),
        g in cells(3, 0.0, 3.0),
        c in 0.01f64..50.0,
    ) {
        let x = SpaceSpec::variable(p, GridFunction::constant(mesh(3), 1.0)).unwrap();
        let f = GridFunction::new(mesh(3), f).unwrap();
        let g = GridFunction::new(mesh(3), g).unwrap();
        let (nf, ng) = (norm(&x, &f).unwrap(), norm(&x, &g).unwrap());
        let nfg = norm(&x, &f.zip_map(&g, |a, b| a + b)).unwrap();
        prop_assert!(nfg <= (nf + ng) * (1.0 + 1e-9) + 1e-12);
        let ncf = norm(&x, &f.scale(c)).unwrap();
        prop_assert!((ncf - c * nf).abs() <= 1e-9 * (c * nf).max(1e-12));
    }

    #[test]
    fn holder_for_weighted_lebesgue(w in cells(3, 0.2, 4.0), f in cells(3, 0.0, 2.0), g in cells(3, 0.0, 2.0), p in 1.0f64..8.0) {
        let x = SpaceSpec::weighted(p, GridFunction::new(mesh(3), w).unwrap()).unwrap();
        let f = GridFunction::new(mesh(3), f).unwrap();
        let g = GridFunction::new(mesh(3), g).unwrap();
        let d = kothe_dual_norm(&x, &g).unwrap();
        prop_assert!(f.pairing(&g) <= norm(&x, &f).unwrap() * d.upper * (1.0 + 1e-9) + 1e-12);
    }
}
