use ahdiag_core::blocks::lipschitz_bound;
use ahdiag_core::diagmaps::{check_unital_injective, diagform_distance_bound, is_maximally_homogeneous};
use ahdiag_core::fixtures::{pipeline_suite, random_element, thirds, with_source_size};
use ahdiag_core::geometry::pl_sup_distance;
use ahdiag_core::perturb::{
    admissible_delta_bound, check_delta, gap_decomposition, make_surjective_mh, maximal_chains, verify_descent, PerturbOptions,
};
use ahdiag_core::rational::q;
use num_traits::Zero;

#[test]
fn random_fixtures_satisfy_all_properties() {
    let mut failures = Vec::new();
    for f in pipeline_suite(60, 1000).unwrap() {
        let phi = &f.phi;
        for j in 0..phi.source().len() {
            let gd = gap_decomposition(phi, j).unwrap();
            for c in maximal_chains(&gd, phi.source().base(j)).chains {
                assert!(c.isolated_points <= phi.total_target_size(), "{}", f.name);
            }
        }
        match make_surjective_mh(phi, &f.delta, &PerturbOptions::default()) {
            Ok((out, log)) => {
                let ui = check_unital_injective(&out);
                assert!(ui.unital && ui.injective, "{}", f.name);
                assert!(is_maximally_homogeneous(&out).holds, "{}", f.name);
                assert!(verify_descent(&out).holds, "{}", f.name);
                assert!(log.bound <= &f.delta + &log.rho, "{}", f.name);
                for (x, y) in phi.targets().iter().zip(out.targets()) {
                    for (a, b) in x.entries.iter().zip(&y.entries) {
                        assert!(pl_sup_distance(&a.map, &b.map).unwrap().value <= log.bound);
                    }
                }
            }
            Err(e) => failures.push(format!("{}: {e}", f.name)),
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn outputs_are_fixed_points_and_bound_generators() {
    for (k, f) in pipeline_suite(12, 77).unwrap().into_iter().enumerate() {
        let (out, log) = make_surjective_mh(&f.phi, &f.delta, &PerturbOptions::default()).unwrap();
        let (again, relog) = make_surjective_mh(&out, &f.delta, &PerturbOptions::default()).unwrap();
        assert_eq!(again, out, "{}", f.name);
        assert!(relog.bound.is_zero() && relog.steps.is_empty());
        let src = f.phi.source().clone();
        let gens: Vec<_> = (0..3).map(|s| random_element(src.clone(), 31 * k as u64 + s).unwrap()).collect();
        for a in &gens {
            let d = diagform_distance_bound(&f.phi, &out, std::slice::from_ref(a)).unwrap();
            assert!(d <= lipschitz_bound(a) * &log.bound, "{}", f.name);
        }
    }
}

#[test]
fn delta_gate_prints_the_bound() {
    // Σ m = 2 for the thirds map, capped at 1/2 either way; Σ m = 4 for
    // two 2×2 entries
    assert_eq!(admissible_delta_bound(&thirds()), q(1, 2));
    assert_eq!(admissible_delta_bound(&with_source_size(&thirds(), 2).unwrap()), q(1, 4));
    let four = ahdiag_core::fixtures::intertwining_schedule(2).unwrap().phi[1].clone();
    assert_eq!(four.total_target_size(), 4);
    assert_eq!(admissible_delta_bound(&four), q(1, 4));
    let err = check_delta(&four, &q(1, 4)).unwrap_err();
    assert!(err.to_string().contains("1/4"), "{err}");
    assert!(check_delta(&four, &q(1, 5)).is_ok());
}
