//! Homomorphisms between building blocks given by eigenvalue functions on
//! covering trees, with the unitary frame fixed to the identity.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::blocks::{element_eval, lipschitz_bound, Block, Element};
use crate::error::{Error, Result};
use crate::geometry::plmap::{common_refinement, same_graph};
use crate::geometry::{pl_image, pl_sup_distance, ClosedSubset, CoveringTree, GapArc, GraphPoint, PLMap, Piece, RawPoint};
use crate::matrix::Mat;
use crate::rational::{max_q, qi, Q};

/// One eigenvalue function `λ: 𝒟_i → Z_source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub source: usize,
    pub map: PLMap,
}

/// Data attached to one target summand: its covering tree and entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetData {
    pub tree: CoveringTree,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalForm {
    source: Arc<Block>,
    target: Arc<Block>,
    targets: Vec<TargetData>,
}

impl DiagonalForm {
    /// Checks that every eigenvalue function runs from the covering tree of its
    /// target summand into the base of its source summand. Unitality is not
    /// enforced here; see [`check_unital_injective`].
    pub fn new(source: Arc<Block>, target: Arc<Block>, targets: Vec<TargetData>) -> Result<Self> {
        if targets.len() != target.len() {
            return Err(Error::domain(format!("diagonal form lists {} target summands, block has {}", targets.len(), target.len())));
        }
        for (i, td) in targets.iter().enumerate() {
            if !same_graph(td.tree.base(), target.base(i)) {
                return Err(Error::domain(format!("covering tree of target {i} is over the wrong base")));
            }
            for (s, e) in td.entries.iter().enumerate() {
                if e.source >= source.len() {
                    return Err(Error::domain(format!("target {i} entry {s}: unknown source summand {}", e.source)));
                }
                if !same_graph(e.map.domain(), td.tree.tree()) {
                    return Err(Error::domain(format!("target {i} entry {s}: map is not defined on the covering tree")));
                }
                if !same_graph(e.map.codomain(), source.base(e.source)) {
                    return Err(Error::domain(format!("target {i} entry {s}: map does not land in source {}", e.source)));
                }
            }
        }
        Ok(DiagonalForm { source, target, targets })
    }

    pub fn source(&self) -> &Arc<Block> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Block> {
        &self.target
    }

    pub fn targets(&self) -> &[TargetData] {
        &self.targets
    }

    pub fn tree(&self, i: usize) -> &CoveringTree {
        &self.targets[i].tree
    }

    pub fn entries(&self, i: usize) -> &[Entry] {
        &self.targets[i].entries
    }

    /// `Σ_i m_i`.
    pub fn total_target_size(&self) -> usize {
        self.target.summands().iter().map(|(_, m)| m).sum()
    }

    /// Copy with entry `(i, s)` replaced.
    pub fn with_map(&self, i: usize, s: usize, map: PLMap) -> Result<Self> {
        let mut targets = self.targets.clone();
        let e = targets.get_mut(i).and_then(|t| t.entries.get_mut(s)).ok_or_else(|| Error::domain(format!("no entry ({i}, {s})")))?;
        e.map = map;
        DiagonalForm::new(self.source.clone(), self.target.clone(), targets)
    }

    fn check_target(&self, i: usize) -> Result<()> {
        if i < self.targets.len() {
            Ok(())
        } else {
            Err(Error::domain(format!("target summand {i} out of range")))
        }
    }
}

/// Multiset of `(source summand, point)` with multiplicities, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spectrum {
    pub points: Vec<(usize, GraphPoint, usize)>,
}

impl Spectrum {
    pub fn total(&self) -> usize {
        self.points.iter().map(|p| p.2).sum()
    }
}

pub fn spectrum_at(phi: &DiagonalForm, i: usize, t: &GraphPoint) -> Result<Spectrum> {
    phi.check_target(i)?;
    let mut counts: BTreeMap<(usize, GraphPoint), usize> = BTreeMap::new();
    for e in phi.entries(i) {
        *counts.entry((e.source, e.map.eval(t)?)).or_default() += 1;
    }
    Ok(Spectrum { points: counts.into_iter().map(|((j, p), m)| (j, p, m)).collect() })
}

/// Where two eigenvalue functions agree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CollisionSet {
    Point(GraphPoint),
    /// The closed tree-edge interval `[a, b]` on `edge`.
    Interval {
        edge: usize,
        a: Q,
        b: Q,
    },
}

impl CollisionSet {
    pub fn is_isolated(&self) -> bool {
        matches!(self, CollisionSet::Point(_))
    }

    /// A representative tree point.
    pub fn point(&self, tree: &crate::geometry::Graph) -> GraphPoint {
        match self {
            CollisionSet::Point(p) => p.clone(),
            CollisionSet::Interval { edge, a, b } => GraphPoint::on_edge(tree, *edge, (a + b) / qi(2)).expect("interval inside edge"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MhWitness {
    pub target: usize,
    pub entries: (usize, usize),
    pub at: CollisionSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MhReport {
    pub holds: bool,
    pub witnesses: Vec<MhWitness>,
}

enum Sol {
    None,
    All,
    At(Q),
}

fn solve(p: &Piece, c: &Q, a: &Q, b: &Q) -> Sol {
    if p.is_constant() {
        return if &p.x0 == c { Sol::All } else { Sol::None };
    }
    let t = &p.t0 + (c - &p.x0) / p.slope();
    if a <= &t && &t <= b {
        Sol::At(t)
    } else {
        Sol::None
    }
}

fn meet(x: Sol, y: Sol) -> Sol {
    match (x, y) {
        (Sol::None, _) | (_, Sol::None) => Sol::None,
        (Sol::All, s) | (s, Sol::All) => s,
        (Sol::At(u), Sol::At(v)) => {
            if u == v {
                Sol::At(u)
            } else {
                Sol::None
            }
        }
    }
}

/// Exact locus in `[a, b]` where the two pieces denote the same codomain point.
fn piece_collisions(cod: &crate::geometry::Graph, pf: &Piece, pg: &Piece, a: &Q, b: &Q) -> Vec<Sol> {
    let mut out = Vec::new();
    if pf.target == pg.target {
        // x_f(t) - x_g(t) = 0
        let d0 = pf.at(a) - pg.at(a);
        let d1 = pf.at(b) - pg.at(b);
        if d0.is_zero() && d1.is_zero() {
            out.push(Sol::All);
        } else if d0 == d1 {
        } else {
            let t = a + (b - a) * (&d0 / (&d0 - &d1));
            if a <= &t && &t <= b {
                out.push(Sol::At(t));
            }
        }
    }
    let (ef, eg) = (cod.edge(pf.target), cod.edge(pg.target));
    for (cf, vf) in [(Q::zero(), ef.tail), (ef.length.clone(), ef.head)] {
        for (cg, vg) in [(Q::zero(), eg.tail), (eg.length.clone(), eg.head)] {
            if vf == vg {
                out.push(meet(solve(pf, &cf, a, b), solve(pg, &cg, a, b)));
            }
        }
    }
    out
}

/// Collision locus of two eigenvalue functions on a common tree.
pub fn collisions(f: &PLMap, g: &PLMap) -> Vec<CollisionSet> {
    let tree = f.domain();
    let cod = f.codomain();
    let mut out = Vec::new();
    for edge in 0..tree.edge_count() {
        let ts = common_refinement(f, g, edge);
        for w in ts.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let mid = (a + b) / qi(2);
            let (pf, pg) = (f.piece_at(edge, &mid), g.piece_at(edge, &mid));
            for sol in piece_collisions(cod, pf, pg, a, b) {
                match sol {
                    Sol::None => {}
                    Sol::All => out.push(CollisionSet::Interval { edge, a: a.clone(), b: b.clone() }),
                    Sol::At(t) => out.push(CollisionSet::Point(GraphPoint::on_edge(tree, edge, t).expect("within edge"))),
                }
            }
        }
    }
    out.sort();
    out.dedup();
    // merge adjacent intervals and drop points they contain
    let mut merged: Vec<CollisionSet> = Vec::new();
    for c in out.iter().filter(|c| !c.is_isolated()) {
        if let (Some(CollisionSet::Interval { edge: le, b: lb, .. }), CollisionSet::Interval { edge, a, b }) = (merged.last_mut(), c) {
            if le == edge && lb == a {
                *lb = b.clone();
                continue;
            }
        }
        merged.push(c.clone());
    }
    let inside = |p: &GraphPoint| {
        merged.iter().any(|m| match m {
            CollisionSet::Interval { edge, a, b } => p.raw_reps(tree).iter().any(|r| r.edge == *edge && a <= &r.coord && r.coord <= *b),
            CollisionSet::Point(_) => false,
        })
    };
    let points: Vec<CollisionSet> = out.into_iter().filter(|c| matches!(c, CollisionSet::Point(p) if !inside(p))).collect();
    merged.extend(points);
    merged
}

/// Decides maximal homogeneity exactly; witnesses list every collision locus.
pub fn is_maximally_homogeneous(phi: &DiagonalForm) -> MhReport {
    let mut witnesses = Vec::new();
    for (i, td) in phi.targets.iter().enumerate() {
        for s in 0..td.entries.len() {
            for r in s + 1..td.entries.len() {
                let (x, y) = (&td.entries[s], &td.entries[r]);
                if x.source != y.source {
                    continue;
                }
                for at in collisions(&x.map, &y.map) {
                    witnesses.push(MhWitness { target: i, entries: (s, r), at });
                }
            }
        }
    }
    MhReport { holds: witnesses.is_empty(), witnesses }
}

/// `Σ_j #{distinct spectrum points from j} · n_j²`.
pub fn fiber_image_dimension(phi: &DiagonalForm, i: usize, t: &GraphPoint) -> Result<usize> {
    let sp = spectrum_at(phi, i, t)?;
    Ok(sp.points.iter().map(|(j, _, _)| phi.source.size(*j).pow(2)).sum())
}

/// The value `Σ_s n_{j_s}²` attained exactly at maximally homogeneous points.
pub fn max_fiber_image_dimension(phi: &DiagonalForm, i: usize) -> usize {
    phi.entries(i).iter().map(|e| phi.source.size(e.source).pow(2)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitalInjectiveReport {
    pub unital: bool,
    /// `(target summand, Σ n_j over entries, m_i)` for each mismatch.
    pub size_mismatches: Vec<(usize, usize, usize)>,
    pub injective: bool,
    /// Uncovered arcs per source summand.
    pub gaps: Vec<(usize, GapArc)>,
    /// Source summands whose uncovered part contains a cycle.
    pub cyclic_gaps: Vec<usize>,
}

/// Union of the images of all eigenvalue functions into each source base.
pub fn source_images(phi: &DiagonalForm) -> Vec<ClosedSubset> {
    let mut imgs: Vec<ClosedSubset> = (0..phi.source.len()).map(|j| ClosedSubset::empty(phi.source.base(j).clone())).collect();
    for td in &phi.targets {
        for e in &td.entries {
            imgs[e.source] = imgs[e.source].union(&pl_image(&e.map));
        }
    }
    imgs
}

pub fn check_unital_injective(phi: &DiagonalForm) -> UnitalInjectiveReport {
    let mut size_mismatches = Vec::new();
    for (i, td) in phi.targets.iter().enumerate() {
        let sum: usize = td.entries.iter().map(|e| phi.source.size(e.source)).sum();
        let m = phi.target.size(i);
        if sum != m {
            size_mismatches.push((i, sum, m));
        }
    }
    let mut gaps = Vec::new();
    let mut cyclic_gaps = Vec::new();
    for (j, img) in source_images(phi).into_iter().enumerate() {
        if img.is_whole() {
            continue;
        }
        match img.complement_arcs() {
            Ok(arcs) => gaps.extend(arcs.into_iter().map(|a| (j, a))),
            Err(_) => cyclic_gaps.push(j),
        }
    }
    UnitalInjectiveReport {
        unital: size_mismatches.is_empty(),
        size_mismatches,
        injective: gaps.is_empty() && cyclic_gaps.is_empty(),
        gaps,
        cyclic_gaps,
    }
}

fn check_source(phi: &DiagonalForm, a: &Element) -> Result<()> {
    if **a.block() != *phi.source {
        return Err(Error::domain("element does not belong to the source block"));
    }
    Ok(())
}

/// `Φ(a)` at a point `t` of the covering tree of target `i`.
pub fn apply_at(phi: &DiagonalForm, a: &Element, i: usize, t: &GraphPoint) -> Result<Mat> {
    check_source(phi, a)?;
    phi.check_target(i)?;
    let blocks = phi.entries(i).iter().map(|e| element_eval(a, e.source, &e.map.eval(t)?)).collect::<Result<Vec<_>>>()?;
    Ok(Mat::block_diag(&blocks))
}

/// `Φ(a)` as an element of the target block.
///
/// With the identity frame the value over a base point must not depend on the
/// chosen lift; this is verified exactly at every breakpoint of every fiber
/// copy, and a mismatch is reported as invalid input.
pub fn apply_diagform(phi: &DiagonalForm, a: &Element) -> Result<Element> {
    check_source(phi, a)?;
    let mut knots = Vec::with_capacity(phi.targets.len());
    for (i, td) in phi.targets.iter().enumerate() {
        let w = td.tree.base();
        let tree = td.tree.tree();
        let mut per_edge = Vec::with_capacity(w.edge_count());
        for e in 0..w.edge_count() {
            let len = w.edge(e).length.clone();
            let copies: Vec<(usize, bool)> =
                td.tree.edge_map().iter().enumerate().filter(|(_, m)| m.0 == e).map(|(k, m)| (k, m.1)).collect();
            let to_base = |rev: bool, t: Q| if rev { &len - t } else { t };
            let mut cs = vec![Q::zero(), len.clone()];
            for &(k, rev) in &copies {
                for ent in &td.entries {
                    for p in ent.map.pieces(k) {
                        cs.push(to_base(rev, p.t0.clone()));
                        if p.is_constant() {
                            continue;
                        }
                        let (lo, hi) = if p.x0 < p.x1 { (&p.x0, &p.x1) } else { (&p.x1, &p.x0) };
                        for (x, _) in a.knots(ent.source, p.target) {
                            if lo < x && x < hi {
                                cs.push(to_base(rev, &p.t0 + (x - &p.x0) / p.slope()));
                            }
                        }
                    }
                }
            }
            cs.sort();
            cs.dedup();
            let mut ks = Vec::with_capacity(cs.len());
            for c in cs {
                let mut value: Option<Mat> = None;
                for &(k, rev) in &copies {
                    let tc = if rev { tree.edge(k).length.clone() - &c } else { c.clone() };
                    let raw = RawPoint { edge: k, coord: tc }.canonical(tree);
                    let m = apply_at(phi, a, i, &raw)?;
                    match &value {
                        None => value = Some(m),
                        Some(v) if *v != m => {
                            return Err(Error::invalid(format!(
                                "target {i}: value over base edge {} depends on the lift (no descent in the identity frame)",
                                w.edge(e).name
                            )))
                        }
                        _ => {}
                    }
                }
                ks.push((c, value.expect("every base edge is covered")));
            }
            per_edge.push(ks);
        }
        knots.push(per_edge);
    }
    Element::new(phi.target.clone(), knots)
}

/// Pinching onto the canonical diagonal: off-diagonal entries are zeroed.
pub fn conditional_expectation(a: &Element) -> Element {
    a.map_linear(Mat::diagonal_part)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommuteReport {
    pub checked: usize,
    /// `(target summand, tree point)` where the square fails to commute.
    pub discrepancies: Vec<(usize, GraphPoint)>,
}

/// Compares `Φ(P(a))` with `P(Φ(a))` at tree sample points.
pub fn check_expectation_commutes(phi: &DiagonalForm, a: &Element, samples: &[(usize, GraphPoint)]) -> Result<CommuteReport> {
    let pa = conditional_expectation(a);
    let mut discrepancies = Vec::new();
    for (i, t) in samples {
        let lhs = apply_at(phi, &pa, *i, t)?;
        let rhs = apply_at(phi, a, *i, t)?.diagonal_part();
        if lhs != rhs {
            discrepancies.push((*i, t.clone()));
        }
    }
    Ok(CommuteReport { checked: samples.len(), discrepancies })
}

/// `max_a Lip(a) · max_s sup d(λ_s, ω_s)`, an upper bound for `‖Φ(a) − Ψ(a)‖`.
pub fn diagform_distance_bound(phi: &DiagonalForm, psi: &DiagonalForm, gens: &[Element]) -> Result<Q> {
    if phi.source != psi.source || phi.target != psi.target {
        return Err(Error::domain("diagonal forms have different blocks"));
    }
    let mut dist = Q::zero();
    for (i, (x, y)) in phi.targets.iter().zip(&psi.targets).enumerate() {
        if x.tree != y.tree || x.entries.len() != y.entries.len() {
            return Err(Error::domain(format!("target {i}: covering trees or entry counts differ")));
        }
        for (s, (ex, ey)) in x.entries.iter().zip(&y.entries).enumerate() {
            if ex.source != ey.source {
                return Err(Error::domain(format!("target {i} entry {s}: source summands differ")));
            }
            dist = max_q(&dist, &pl_sup_distance(&ex.map, &ey.map)?.value);
        }
    }
    let mut lip = Q::zero();
    for a in gens {
        check_source(phi, a)?;
        lip = max_q(&lip, &lipschitz_bound(a));
    }
    Ok(lip * dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_covering_tree, Graph};
    use crate::matrix::C;
    use crate::rational::q;

    fn interval() -> Arc<Graph> {
        Arc::new(Graph::interval())
    }

    fn affine(g: &Arc<Graph>, a: Q, b: Q) -> PLMap {
        PLMap::from_knots(g.clone(), g.clone(), vec![vec![(Q::zero(), 0, a), (qi(1), 0, b)]]).unwrap()
    }

    /// Interval → interval with the given affine entries, all n_j = 1.
    fn form(maps: Vec<PLMap>) -> DiagonalForm {
        let g = interval();
        let src = Arc::new(Block::new(vec![(g.clone(), 1)]).unwrap());
        let tgt = Arc::new(Block::new(vec![(g.clone(), maps.len())]).unwrap());
        let tree = build_covering_tree(g, 1).unwrap();
        let entries = maps.into_iter().map(|map| Entry { source: 0, map }).collect();
        DiagonalForm::new(src, tgt, vec![TargetData { tree, entries }]).unwrap()
    }

    fn pt(c: Q) -> GraphPoint {
        GraphPoint::on_edge(&Graph::interval(), 0, c).unwrap()
    }

    fn halves() -> DiagonalForm {
        let g = interval();
        form(vec![affine(&g, Q::zero(), q(1, 2)), affine(&g, q(1, 2), qi(1))])
    }

    #[test]
    fn spectrum_examples() {
        let g = interval();
        let id = form(vec![PLMap::identity(g.clone())]);
        assert_eq!(spectrum_at(&id, 0, &pt(q(1, 3))).unwrap().points, vec![(0, pt(q(1, 3)), 1)]);
        let sp = spectrum_at(&halves(), 0, &pt(Q::zero())).unwrap();
        assert_eq!(sp.points, vec![(0, GraphPoint::Vertex(0), 1), (0, pt(q(1, 2)), 1)]);
        let c = PLMap::constant(g.clone(), g.clone(), &pt(q(1, 2))).unwrap();
        let dup = form(vec![c.clone(), c]);
        assert_eq!(spectrum_at(&dup, 0, &pt(q(1, 5))).unwrap().points, vec![(0, pt(q(1, 2)), 2)]);
        assert!(spectrum_at(&dup, 3, &pt(q(1, 5))).is_err());
    }

    #[test]
    fn mh_examples() {
        assert!(is_maximally_homogeneous(&halves()).holds);
        let g = interval();
        let cross = form(vec![PLMap::identity(g.clone()), affine(&g, qi(1), Q::zero())]);
        let rep = is_maximally_homogeneous(&cross);
        assert!(!rep.holds);
        assert_eq!(rep.witnesses.len(), 1);
        assert_eq!(rep.witnesses[0].at, CollisionSet::Point(pt(q(1, 2))));
        assert!(is_maximally_homogeneous(&form(vec![PLMap::identity(g)])).holds);
    }

    #[test]
    fn mh_detects_vertex_coincidence_on_loops() {
        // on the circle, coordinate 0 and coordinate 1 are the same point
        let c = Arc::new(Graph::circle());
        let src = Arc::new(Block::new(vec![(c.clone(), 1)]).unwrap());
        let i = interval();
        let tgt = Arc::new(Block::new(vec![(i.clone(), 2)]).unwrap());
        let f = PLMap::from_knots(i.clone(), c.clone(), vec![vec![(Q::zero(), 0, q(1, 4)), (qi(1), 0, Q::zero())]]).unwrap();
        let g = PLMap::from_knots(i.clone(), c.clone(), vec![vec![(Q::zero(), 0, q(3, 4)), (qi(1), 0, qi(1))]]).unwrap();
        let tree = build_covering_tree(i, 1).unwrap();
        let phi =
            DiagonalForm::new(src, tgt, vec![TargetData { tree, entries: vec![Entry { source: 0, map: f }, Entry { source: 0, map: g }] }])
                .unwrap();
        let rep = is_maximally_homogeneous(&phi);
        assert_eq!(rep.witnesses.len(), 1);
        assert_eq!(rep.witnesses[0].at, CollisionSet::Point(GraphPoint::Vertex(1)));
    }

    #[test]
    fn fiber_dimension_examples() {
        assert_eq!(fiber_image_dimension(&halves(), 0, &GraphPoint::Vertex(0)).unwrap(), 2);
        let g = interval();
        let c = PLMap::constant(g.clone(), g.clone(), &pt(q(1, 2))).unwrap();
        let dup = form(vec![c.clone(), c]);
        assert_eq!(fiber_image_dimension(&dup, 0, &pt(q(1, 2))).unwrap(), 1);
        let src = Arc::new(Block::new(vec![(g.clone(), 3)]).unwrap());
        let tgt = Arc::new(Block::new(vec![(g.clone(), 3)]).unwrap());
        let one = DiagonalForm::new(
            src,
            tgt,
            vec![TargetData {
                tree: build_covering_tree(g.clone(), 1).unwrap(),
                entries: vec![Entry { source: 0, map: PLMap::identity(g) }],
            }],
        )
        .unwrap();
        assert_eq!(fiber_image_dimension(&one, 0, &pt(q(1, 2))).unwrap(), 9);
    }

    #[test]
    fn injectivity_examples() {
        let rep = check_unital_injective(&halves());
        assert!(rep.unital && rep.injective);
        let g = interval();
        let thirds = form(vec![affine(&g, Q::zero(), q(1, 3)), affine(&g, q(2, 3), qi(1))]);
        let rep = check_unital_injective(&thirds);
        assert!(!rep.injective);
        assert_eq!(rep.gaps.len(), 1);
        assert_eq!((&rep.gaps[0].1.start, &rep.gaps[0].1.end), (&pt(q(1, 3)), &pt(q(2, 3))));
        assert!(check_unital_injective(&form(vec![PLMap::identity(g)])).injective);
    }

    fn scalar_t() -> Element {
        let src = Arc::new(Block::new(vec![(interval(), 1)]).unwrap());
        Element::new(src, vec![vec![vec![(Q::zero(), Mat::zeros(1)), (qi(1), Mat::identity(1))]]]).unwrap()
    }

    #[test]
    fn apply_examples() {
        let phi = halves();
        let id = Element::identity(phi.source().clone());
        assert_eq!(apply_diagform(&phi, &id).unwrap(), Element::identity(phi.target().clone()));
        let out = apply_diagform(&phi, &scalar_t()).unwrap();
        let at1 = element_eval(&out, 0, &GraphPoint::Vertex(1)).unwrap();
        assert_eq!(at1, Mat::diag(vec![C::real(q(1, 2)), C::one()]));
        let c = Element::constant(phi.source().clone(), vec![Mat::scalar(1, q(3, 7))]).unwrap();
        let out = apply_diagform(&phi, &c).unwrap();
        assert_eq!(element_eval(&out, 0, &pt(q(1, 9))).unwrap(), Mat::scalar(2, q(3, 7)));
    }

    #[test]
    fn expectation_examples() {
        let g = interval();
        let b = Arc::new(Block::new(vec![(g, 2)]).unwrap());
        let d = Element::constant(b.clone(), vec![Mat::diag(vec![C::one(), C::real(qi(5))])]).unwrap();
        assert_eq!(conditional_expectation(&d), d);
        let e12 = Element::constant(b.clone(), vec![Mat::unit(2, 0, 1)]).unwrap();
        assert_eq!(conditional_expectation(&e12), Element::zero(b.clone()));
        let ones = Element::constant(b.clone(), vec![Mat::from_real_rows(&[vec![qi(1), qi(1)], vec![qi(1), qi(1)]])]).unwrap();
        assert_eq!(conditional_expectation(&ones), Element::identity(b));
    }

    #[test]
    fn distance_bound_examples() {
        let phi = halves();
        let gens = vec![scalar_t()];
        assert_eq!(diagform_distance_bound(&phi, &phi, &gens).unwrap(), Q::zero());
        let g = interval();
        let psi = phi.with_map(0, 0, affine(&g, q(1, 8), q(1, 2))).unwrap();
        assert_eq!(diagform_distance_bound(&phi, &psi, &gens).unwrap(), q(1, 8));
        let c = Element::constant(phi.source().clone(), vec![Mat::scalar(1, qi(4))]).unwrap();
        assert_eq!(diagform_distance_bound(&phi, &psi, &[c]).unwrap(), Q::zero());
    }
}
