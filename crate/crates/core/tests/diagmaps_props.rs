use std::sync::Arc;

use ahdiag_core::blocks::{element_eval, element_sup_norm_bounds, lipschitz_bound, Block, Element};
use ahdiag_core::diagmaps::{
    apply_at, check_expectation_commutes, conditional_expectation, fiber_image_dimension, is_maximally_homogeneous,
    max_fiber_image_dimension, CollisionSet, DiagonalForm,
};
use ahdiag_core::fixtures::{pipeline_suite, random_element, random_pl_form, thirds, with_source_size};
use ahdiag_core::geometry::{point_distance, Graph, GraphPoint};
use ahdiag_core::matrix::{Mat, C};
use ahdiag_core::perturb::{make_surjective_mh, PerturbOptions};
use ahdiag_core::rational::{q, sqrt_lower, sqrt_upper};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(g: &Graph, rng: &mut ChaCha8Rng) -> GraphPoint {
    if rng.gen_bool(0.1) {
        return GraphPoint::Vertex(rng.gen_range(0..g.vertex_count()));
    }
    let e = rng.gen_range(0..g.edge_count());
    let k = rng.gen_range(1..997);
    GraphPoint::on_edge(g, e, &g.edge(e).length * q(k, 997)).unwrap()
}

/// MH forms with 2×2 source summands: the thirds map and a few pipeline outputs.
fn mh_forms() -> Vec<DiagonalForm> {
    let mut out = vec![with_source_size(&thirds(), 2).unwrap()];
    for f in pipeline_suite(8, 4242).unwrap() {
        let (psi, _) = make_surjective_mh(&f.phi, &f.delta, &PerturbOptions::default()).unwrap();
        out.push(with_source_size(&psi, 2).unwrap());
    }
    out
}

fn samples(phi: &DiagonalForm, rng: &mut ChaCha8Rng, count: usize) -> Vec<(usize, GraphPoint)> {
    let mut out = Vec::new();
    for i in 0..phi.targets().len() {
        let tree = phi.tree(i).tree();
        out.extend((0..tree.vertex_count()).map(|v| (i, GraphPoint::Vertex(v))));
        while out.len() < count * (i + 1) {
            out.push((i, random_point(tree, rng)));
        }
    }
    out
}

#[test]
fn expectation_square_commutes() {
    let forms = mh_forms();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..24 {
        let phi = &forms[k % forms.len()];
        let a = random_element(phi.source().clone(), 100 + k as u64).unwrap();
        let pts = samples(phi, &mut rng, 60);
        assert!(pts.len() >= 50);
        let rep = check_expectation_commutes(phi, &a, &pts).unwrap();
        assert!(rep.discrepancies.is_empty(), "form {k}: {:?}", rep.discrepancies);
        // the same square, entry by entry
        let pa = conditional_expectation(&a);
        for (i, t) in &pts {
            let lhs = apply_at(phi, &pa, *i, t).unwrap();
            let rhs = apply_at(phi, &a, *i, t).unwrap();
            for r in 0..lhs.size() {
                for c in 0..lhs.size() {
                    let want = if r == c { rhs.get(r, c).clone() } else { C::zero() };
                    assert_eq!(lhs.get(r, c), &want);
                }
            }
        }
    }
}

#[test]
fn expectation_is_an_idempotent_bimodule_map() {
    let b = Arc::new(Block::new(vec![(Arc::new(Graph::star(3)), 3)]).unwrap());
    let d1 = Mat::diag(vec![C::new(q(1, 2), q(1, 3)), C::real(q(-2, 1)), C::new(q(0, 1), q(5, 4))]);
    let d2 = Mat::diag(vec![C::real(q(3, 1)), C::new(q(1, 1), q(-1, 1)), C::real(q(1, 7))]);
    for seed in 0..20 {
        let a = random_element(b.clone(), seed).unwrap();
        let p = conditional_expectation(&a);
        assert_eq!(conditional_expectation(&p), p);
        let dad = a.map_linear(|m| &(&d1 * m) * &d2);
        let lhs = conditional_expectation(&dad);
        let rhs = p.map_linear(|m| &(&d1 * m) * &d2);
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn apply_is_a_unital_star_homomorphism_at_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = Mat::from_rows(vec![vec![C::new(q(1, 2), q(1, 1)), C::real(q(-1, 3))], vec![C::real(q(2, 1)), C::new(q(0, 1), q(-3, 2))]]);
    for (k, phi) in mh_forms().iter().enumerate() {
        let src = phi.source().clone();
        let a = random_element(src.clone(), 500 + k as u64).unwrap();
        let const_m = Element::constant(src.clone(), vec![m.clone(); src.len()]).unwrap();
        let ma = a.map_linear(|x| &m * x);
        let adj = a.map_linear(Mat::adjoint);
        let sum = a.map_linear(|x| &(x + &m) + &x.scale(&q(2, 3)));
        let one = Element::identity(src.clone());
        for (i, t) in samples(phi, &mut rng, 20) {
            let at = |x: &Element| apply_at(phi, x, i, &t).unwrap();
            assert_eq!(at(&ma), &at(&const_m) * &at(&a));
            assert_eq!(at(&adj), at(&a).adjoint());
            assert_eq!(at(&sum), &(&at(&a) + &at(&const_m)) + &at(&a).scale(&q(2, 3)));
            assert_eq!(at(&one), Mat::identity(phi.target().size(i)));
        }
    }
}

#[test]
fn fiber_dimension_is_maximal_exactly_at_mh_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for phi in mh_forms() {
        assert!(is_maximally_homogeneous(&phi).holds);
        for (i, t) in samples(&phi, &mut rng, 200) {
            assert_eq!(fiber_image_dimension(&phi, i, &t).unwrap(), max_fiber_image_dimension(&phi, i));
        }
    }
    let mut bad = 0;
    for seed in 0..60 {
        let phi = random_pl_form(seed).unwrap();
        let rep = is_maximally_homogeneous(&phi);
        for w in &rep.witnesses {
            let t = w.at.point(phi.tree(w.target).tree());
            assert!(fiber_image_dimension(&phi, w.target, &t).unwrap() < max_fiber_image_dimension(&phi, w.target));
            bad += 1;
        }
    }
    assert!(bad > 0);
}

fn locus_contains(tree: &Graph, at: &CollisionSet, t: &GraphPoint) -> bool {
    match at {
        CollisionSet::Point(p) => p == t,
        CollisionSet::Interval { edge, a, b } => t.raw_reps(tree).iter().any(|r| r.edge == *edge && a <= &r.coord && r.coord <= *b),
    }
}

#[test]
fn exact_checker_contains_sampling_oracle() {
    const N: i64 = 10_000;
    let (mut oracle_hits, mut exact_fails) = (0, 0);
    for seed in 0..100 {
        let phi = random_pl_form(5000 + seed).unwrap();
        let rep = is_maximally_homogeneous(&phi);
        if !rep.holds {
            exact_fails += 1;
        }
        let tree = phi.tree(0).tree();
        let entries = phi.entries(0);
        for k in 0..=N {
            let t = match k {
                0 => GraphPoint::Vertex(0),
                N => GraphPoint::Vertex(1),
                _ => GraphPoint::Edge { edge: 0, coord: q(k, N) },
            };
            let vals: Vec<GraphPoint> = entries.iter().map(|e| e.map.eval(&t).unwrap()).collect();
            for s in 0..vals.len() {
                for r in s + 1..vals.len() {
                    if vals[s] == vals[r] {
                        oracle_hits += 1;
                        assert!(!rep.holds, "seed {seed}: oracle collision at {t} but exact checker says MH");
                        assert!(
                            rep.witnesses.iter().any(|w| w.entries == (s, r) && locus_contains(tree, &w.at, &t)),
                            "seed {seed}: collision of entries {s},{r} at {t} not among the witnesses"
                        );
                    }
                }
            }
        }
    }
    assert!(oracle_hits > 0 && exact_fails > 0);
}

/// Largest singular value by power iteration on `AᴴA`, in floating point.
fn op_norm_f64(m: &Mat) -> f64 {
    let n = m.size();
    let f = |c: &C| (c.re.to_f64().unwrap(), c.im.to_f64().unwrap());
    let a: Vec<Vec<(f64, f64)>> = (0..n).map(|i| (0..n).map(|j| f(m.get(i, j))).collect()).collect();
    let mul = |v: &[(f64, f64)], adj: bool| -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let mut s = (0.0, 0.0);
                for j in 0..n {
                    let (x, y) = if adj {
                        let (x, y) = a[j][i];
                        (x, -y)
                    } else {
                        a[i][j]
                    };
                    s.0 += x * v[j].0 - y * v[j].1;
                    s.1 += x * v[j].1 + y * v[j].0;
                }
                s
            })
            .collect()
    };
    let norm = |v: &[(f64, f64)]| v.iter().map(|(x, y)| x * x + y * y).sum::<f64>().sqrt();
    let mut v: Vec<(f64, f64)> = (0..n).map(|i| (1.0 + i as f64 * 0.37, 0.5 - i as f64 * 0.11)).collect();
    let mut est = 0.0;
    for _ in 0..300 {
        let w = mul(&mul(&v, false), true);
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|(x, y)| (x / nw, y / nw)).collect();
        est = norm(&mul(&v, false));
    }
    est
}

#[test]
fn norm_bounds_bracket_sampled_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let g = Arc::new(Graph::figure_eight());
    let b = Arc::new(Block::new(vec![(g.clone(), 2), (Arc::new(Graph::interval()), 3)]).unwrap());
    for seed in 0..5 {
        let a = random_element(b.clone(), seed).unwrap();
        let nb = element_sup_norm_bounds(&a);
        let (lo, hi) = (sqrt_lower(&nb.lower_sq).to_f64().unwrap(), sqrt_upper(&nb.upper_sq).to_f64().unwrap());
        let mut est: f64 = 0.0;
        for j in 0..b.len() {
            let base = b.base(j).clone();
            for e in 0..base.edge_count() {
                for (_, m) in a.knots(j, e) {
                    est = est.max(op_norm_f64(m));
                }
            }
            for _ in 0..500 {
                let p = random_point(&base, &mut rng);
                est = est.max(op_norm_f64(&element_eval(&a, j, &p).unwrap()));
            }
        }
        assert!(lo <= est + 1e-9 && est <= hi + 1e-9, "{lo} <= {est} <= {hi}");
        // Lipschitz, exactly: ‖a(x) − a(y)‖_F² ≤ L² d(x, y)²
        let lip = lipschitz_bound(&a);
        for _ in 0..200 {
            let j = rng.gen_range(0..b.len());
            let base = b.base(j).clone();
            let (x, y) = (random_point(&base, &mut rng), random_point(&base, &mut rng));
            let d = point_distance(&base, &x, &y).unwrap();
            let diff = &element_eval(&a, j, &x).unwrap() - &element_eval(&a, j, &y).unwrap();
            assert!(diff.frobenius_sq() <= &lip * &lip * &d * &d);
        }
    }
}
