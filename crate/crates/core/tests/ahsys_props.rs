use std::sync::Arc;

use ahdiag_core::ahsys::{
    composite_eigenvalue, doubling_map, dynamics, gendiag_check, goodearl, untwist, villadsen1, villadsen2_skeleton, GenDiagSystem,
};
use ahdiag_core::geometry::{Graph, GraphPoint};
use ahdiag_core::rational::q;
use proptest::prelude::*;

fn naive_agrees(sys: &GenDiagSystem, n: usize, m: usize) {
    for c in 0..sys.level(n + m).components.len() {
        for w in sys.words(n, m, c) {
            let f = composite_eigenvalue(sys, n, &w).unwrap();
            for z in sys.level(n + m).components[c].samples() {
                let mut p = z.clone();
                for (j, &y) in w.iter().enumerate().rev() {
                    p = sys.step(n + j).entries[y].map.eval(&p).unwrap();
                }
                assert_eq!(f.eval(z).unwrap(), p, "word {w:?} at {z}");
            }
        }
    }
}

fn pt(k: i64) -> GraphPoint {
    GraphPoint::Edge { edge: 0, coord: q(k, 8) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn villadsen_composites(k1 in 1usize..=2, ratio in 1usize..=2, constants in 0usize..=1, p in 1i64..8) {
        let g = Arc::new(Graph::interval());
        let sys = villadsen1(g.clone(), 3, k1, ratio, constants, pt(p)).unwrap();
        prop_assert!(gendiag_check(&sys).holds());
        naive_agrees(&sys, 1, 2);
        naive_agrees(&sys, 2, 1);
        let tw = villadsen2_skeleton(g, 3, k1, ratio, constants, pt(p)).unwrap();
        let u = untwist(&tw);
        prop_assert_eq!(untwist(&u), u.clone());
        prop_assert_eq!(u, untwist(&sys));
    }

    #[test]
    fn goodearl_composites(pts in prop::collection::vec(1i64..8, 3)) {
        let g = Arc::new(Graph::interval());
        let sys = goodearl(g, pts.iter().map(|&k| vec![pt(k)]).collect(), vec![2; 3]).unwrap();
        prop_assert!(gendiag_check(&sys).holds());
        naive_agrees(&sys, 1, 3);
    }
}

#[test]
fn dynamics_composites() {
    let sys = dynamics(doubling_map(), 4, 3).unwrap();
    assert!(gendiag_check(&sys).holds());
    naive_agrees(&sys, 1, 3);
}
