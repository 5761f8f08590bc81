use std::collections::BTreeSet;
use std::sync::Arc;

use ahdiag_core::ahsys::{composite_eigenvalue, goodearl, GenDiagSystem, SpacePoint};
use ahdiag_core::fixtures::{goodearl_dense, goodearl_half, goodearl_stuck, villadsen_untwisted};
use ahdiag_core::geometry::{Graph, GraphPoint};
use ahdiag_core::groupoid::{build_stage, density_report, level_samples, orbits, verify_stage, Arrow, GroupoidStage};
use ahdiag_core::rational::q;
use proptest::prelude::*;

/// Brute force over the arrow list itself, without the stage's own compose.
fn brute_force_axioms(st: &GroupoidStage) {
    let arrows: BTreeSet<&Arrow> = st.arrows.iter().collect();
    let comp = |g: &Arrow, h: &Arrow| -> Option<Arrow> {
        (g.z == h.z && g.word == h.word && g.l0 == h.k0).then(|| Arrow { z: g.z, word: g.word.clone(), k0: g.k0, l0: h.l0 })
    };
    for g in &st.arrows {
        for h in &st.arrows {
            match (comp(g, h), st.compose(g, h)) {
                (Some(x), Ok(y)) => {
                    assert_eq!(x, y);
                    assert!(arrows.contains(&x));
                }
                (None, Err(_)) => {}
                (x, y) => panic!("composability mismatch: {x:?} vs {y:?}"),
            }
        }
    }
}

fn check(sys: &GenDiagSystem, n: usize, m: usize) {
    let samples = level_samples(sys, n + m);
    assert!(samples.len() >= 5);
    let st = build_stage(sys, n, m, &samples).unwrap();
    let laws = verify_stage(sys, &st).unwrap();
    assert!(laws.holds(), "n={n} m={m}: {:?}", laws.messages);
    for zi in 0..samples.len() {
        let per_z = st.arrows.iter().filter(|a| a.z == zi).count();
        assert_eq!(per_z, st.words[zi].len() * sys.rank(n) * sys.rank(n));
    }
    for view in n..=n + m {
        assert!(orbits(&st, view).unwrap().orbits.iter().all(|o| o.size() == sys.rank(view)));
    }
    if st.arrows.len() <= 400 {
        brute_force_axioms(&st);
    }
}

#[test]
fn goodearl_stage_laws() {
    let sys = goodearl_half(5).unwrap();
    for n in 1..=2 {
        for m in 0..=3 {
            check(&sys, n, m);
        }
    }
}

#[test]
fn villadsen_stage_laws() {
    let sys = villadsen_untwisted(4).unwrap();
    for (n, m) in [(1, 0), (1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1)] {
        check(&sys, n, m);
    }
}

#[test]
fn density_separates_dense_and_stuck_schedules() {
    let dense = density_report(&goodearl_dense(7, 2).unwrap(), 1, &q(1, 8), 6).unwrap();
    let m = dense.first_pass().expect("dense schedule should pass");
    assert!(m <= 6);
    let stuck = density_report(&goodearl_stuck(7, 2).unwrap(), 1, &q(1, 8), 6).unwrap();
    assert_eq!(stuck.first_pass(), None, "{}", stuck.summary());
}

fn point() -> impl Strategy<Value = GraphPoint> {
    (1i64..8).prop_map(|k| GraphPoint::Edge { edge: 0, coord: q(k, 8) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_goodearl_stages(pts in prop::collection::vec(point(), 3), s2 in 0usize..2, m in 0usize..=3) {
        let g = Arc::new(Graph::interval());
        let schedule = vec![pts[..1].to_vec(), pts[1..2 + s2].to_vec(), pts[2..].to_vec()];
        let s = schedule.iter().map(|p| p.len() + 1).collect();
        let sys = goodearl(g, schedule, s).unwrap();
        let st = build_stage(&sys, 1, m, &level_samples(&sys, 1 + m)).unwrap();
        let laws = verify_stage(&sys, &st).unwrap();
        prop_assert!(laws.holds(), "{:?}", laws.messages);
        // naive right-to-left evaluation agrees with the normalized composite
        for (zi, ws) in st.words.iter().enumerate() {
            for w in ws.iter().filter(|w| !w.is_empty()) {
                let mut p = st.samples[zi].point.clone();
                for (j, &y) in w.iter().enumerate().rev() {
                    p = sys.step(1 + j).entries[y].map.eval(&p).unwrap();
                }
                prop_assert_eq!(&composite_eigenvalue(&sys, 1, w).unwrap().eval(&st.samples[zi].point).unwrap(), &p);
                prop_assert!(matches!(p, SpacePoint::Graph(_)));
            }
        }
    }
}
