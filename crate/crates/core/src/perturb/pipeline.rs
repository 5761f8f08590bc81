use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::descent::verify_descent;
use super::gaps::{gap_decomposition, maximal_chains, ChainStructure, GapDecomposition};
use super::graft::{
    apply_replicated, bump_pieces, fiber_edges, fiber_permutation, max_slope, route, tent_pieces, third, transport, FiberCopy, Modification,
};
use crate::diagmaps::{check_unital_injective, is_maximally_homogeneous, CollisionSet, DiagonalForm, MhReport};
use crate::error::{Error, Result};
use crate::geometry::{pl_sup_distance, GapArc, GraphPoint, Leg};
use crate::rational::{half, max_q, min_q, q, qi, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    pub target: usize,
    pub entry: usize,
    /// An exact preimage of the gap endpoint (may be a tree vertex).
    pub preimage: GraphPoint,
    /// Tree edge and coordinate of the non-vertex point the tent is built at.
    pub edge: usize,
    pub center: Q,
    /// The gap endpoint being reached.
    pub value: GraphPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Tent,
    Repair,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub kind: StepKind,
    pub source: usize,
    pub target: usize,
    pub entry: usize,
    pub edge: usize,
    /// Open neighbourhood `U` and closed set `V ⊂ U` on the tree edge.
    pub u: (Q, Q),
    pub v: (Q, Q),
    /// The unique point of `V` where `peak` is attained.
    pub t_prime: Q,
    pub peak: GraphPoint,
    pub copies: Vec<FiberCopy>,
    /// Endpoints of the covered gap (tent steps).
    pub covered: Option<(GraphPoint, GraphPoint)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationLog {
    pub delta: Q,
    pub rho: Q,
    /// Certified: every entry moved by at most this much.
    pub bound: Q,
    pub chains: Vec<(usize, ChainStructure)>,
    pub steps: Vec<LogEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PerturbOptions {
    pub rho: Option<Q>,
    /// Bump size for the final repair; defaults to `ρ`.
    pub epsilon: Option<Q>,
}

/// Strict upper bound for admissible `δ`: `min(1/2, 1/Σ m_i)`.
pub fn admissible_delta_bound(phi: &DiagonalForm) -> Q {
    let total = phi.total_target_size().max(1) as i64;
    min_q(&q(1, 2), &q(1, total))
}

pub fn check_delta(phi: &DiagonalForm, delta: &Q) -> Result<()> {
    let bound = admissible_delta_bound(phi);
    if !delta.is_positive() || *delta >= bound {
        return Err(Error::DeltaBound { delta: Box::new(delta.clone()), bound: Box::new(bound) });
    }
    Ok(())
}

struct Run<'a> {
    orig: &'a DiagonalForm,
    cur: DiagonalForm,
    /// Modified intervals per `(target, entry, tree edge)`.
    used: BTreeMap<(usize, usize, usize), Vec<(Q, Q)>>,
    rho: Q,
    /// Maximal allowed distance of a tent / a repaired entry from the input.
    tent_limit: Option<Q>,
    repair_limit: Option<Q>,
    steps: Vec<LogEntry>,
}

struct Trial {
    phi: DiagonalForm,
    copies: Vec<FiberCopy>,
    u: (Q, Q),
    v: (Q, Q),
    unresolved: usize,
}

fn dist_to_interval(c: &Q, (lo, hi): &(Q, Q)) -> Q {
    if c < lo {
        lo - c
    } else if c > hi {
        c - hi
    } else {
        Q::zero()
    }
}

fn reversed_legs(legs: &[Leg]) -> Vec<Leg> {
    legs.iter().rev().map(Leg::reversed).collect()
}

impl<'a> Run<'a> {
    fn new(orig: &'a DiagonalForm, rho: Q) -> Self {
        Run { orig, cur: orig.clone(), used: BTreeMap::new(), rho, tent_limit: None, repair_limit: None, steps: Vec::new() }
    }

    fn is_used(&self, i: usize, s: usize, k: usize, t: &Q) -> bool {
        self.used.get(&(i, s, k)).is_some_and(|l| l.iter().any(|(lo, hi)| lo <= t && t <= hi))
    }

    /// Isolated coincidences `(target, entry, tree point, value)` of the
    /// current form.
    fn collisions(&self, rep: &MhReport) -> Vec<(usize, usize, GraphPoint, GraphPoint)> {
        let mut out = Vec::new();
        for w in &rep.witnesses {
            if let CollisionSet::Point(t) = &w.at {
                let i = w.target;
                for s in [w.entries.0, w.entries.1] {
                    let v = self.cur.entries(i)[s].map.eval(t).expect("tree point");
                    out.push((i, s, t.clone(), v));
                }
            }
        }
        out
    }

    fn anchor_candidates(&self, j: usize, a: &GraphPoint, pending: &[(usize, usize, GraphPoint, GraphPoint)]) -> Vec<Anchor> {
        let mut out: Vec<Anchor> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut push = |out: &mut Vec<Anchor>, anchor: Anchor| {
            if seen.insert((anchor.target, anchor.entry, anchor.edge, anchor.center.clone())) {
                out.push(anchor);
            }
        };
        let mut pend: Vec<&(usize, usize, GraphPoint, GraphPoint)> = pending.iter().filter(|p| &p.3 == a).collect();
        pend.sort_by_key(|(i, s, t, _)| match t {
            GraphPoint::Edge { edge, coord } => (self.is_used(*i, *s, *edge, coord), *i, *s),
            GraphPoint::Vertex(_) => (true, *i, *s),
        });
        for (i, s, t, v) in pend {
            if self.cur.entries(*i)[*s].source != j {
                continue;
            }
            if let GraphPoint::Edge { edge, coord } = t {
                push(&mut out, Anchor { target: *i, entry: *s, preimage: t.clone(), edge: *edge, center: coord.clone(), value: v.clone() });
            }
        }
        for (i, td) in self.cur.targets().iter().enumerate() {
            let tree = td.tree.tree();
            for (s, e) in td.entries.iter().enumerate() {
                if e.source != j {
                    continue;
                }
                let cod = e.map.codomain();
                let reps = a.raw_reps(cod);
                for k in 0..tree.edge_count() {
                    for p in e.map.pieces(k) {
                        for r in reps.iter().filter(|r| r.edge == p.target) {
                            let mut centers = Vec::new();
                            let mut preimage = None;
                            if p.is_constant() {
                                if p.x0 == r.coord {
                                    let w = &p.t1 - &p.t0;
                                    for f in [q(1, 2), q(1, 3), q(2, 3)] {
                                        centers.push(&p.t0 + &w * f);
                                    }
                                }
                            } else {
                                let slope = p.slope();
                                let t = &p.t0 + (&r.coord - &p.x0) / &slope;
                                if p.t0 <= t && t <= p.t1 {
                                    if p.t0 < t && t < p.t1 {
                                        centers.push(t.clone());
                                    } else {
                                        let w = min_q(&((&p.t1 - &p.t0) / qi(4)), &(&self.rho / (qi(4) * slope.abs())));
                                        centers.push(if t == p.t0 { &t + w } else { &t - w });
                                    }
                                    preimage = Some(crate::geometry::RawPoint { edge: k, coord: t }.canonical(tree));
                                }
                            }
                            for c in centers {
                                let value = a.clone();
                                let pre = preimage.clone().unwrap_or_else(|| GraphPoint::Edge { edge: k, coord: c.clone() });
                                push(&mut out, Anchor { target: i, entry: s, preimage: pre, edge: k, center: c, value });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Largest admissible half-width of `U` around the anchor center.
    fn room(&self, anchor: &Anchor, slope_budget: &Q) -> Result<Option<Q>> {
        let (i, s, k, c) = (anchor.target, anchor.entry, anchor.edge, &anchor.center);
        let len = &self.cur.tree(i).tree().edge(k).length;
        let mut u = min_q(c, &(len - c));
        let slope = max_slope(&self.cur.entries(i)[s].map, k);
        if slope.is_positive() {
            u = min_q(&u, &(slope_budget / (qi(4) * slope)));
        }
        for k2 in fiber_edges(&self.cur, i, k) {
            let s2 = if k2 == k { s } else { fiber_permutation(self.orig, i, k, k2)?[s] };
            let c2 = transport(&self.cur, i, k, k2, c);
            if let Some(list) = self.used.get(&(i, s2, k2)) {
                for iv in list {
                    u = min_q(&u, &dist_to_interval(&c2, iv));
                }
            }
        }
        Ok(u.is_positive().then_some(u))
    }

    fn distance_ok(&self, phi: &DiagonalForm, i: usize, s: usize, limit: &Option<Q>) -> Result<bool> {
        Ok(match limit {
            None => true,
            Some(l) => pl_sup_distance(&self.orig.entries(i)[s].map, &phi.entries(i)[s].map)?.value <= *l,
        })
    }

    /// Unresolved coincidences: those whose value is not an in-image endpoint
    /// of a still uncovered arc.
    fn unresolved(&self, phi: &DiagonalForm, rep: &MhReport) -> Result<usize> {
        let mut n = 0;
        let mut gaps: BTreeMap<usize, GapDecomposition> = BTreeMap::new();
        for w in &rep.witnesses {
            let CollisionSet::Point(t) = &w.at else { return Ok(usize::MAX) };
            let e = &phi.entries(w.target)[w.entries.0];
            let v = e.map.eval(t)?;
            if let std::collections::btree_map::Entry::Vacant(v) = gaps.entry(e.source) {
                v.insert(gap_decomposition(phi, e.source)?);
            }
            let pending = gaps[&e.source].gaps.iter().any(|g| (g.start == v && g.start_in_image) || (g.end == v && g.end_in_image));
            if !pending {
                n += 1;
            }
        }
        Ok(n)
    }

    fn try_tent(&self, anchor: &Anchor, a: &GraphPoint, legs: &[Leg]) -> Result<Option<Trial>> {
        let (i, s, k, c) = (anchor.target, anchor.entry, anchor.edge, anchor.center.clone());
        if self.is_used(i, s, k, &c) {
            return Ok(None);
        }
        let Some(u0) = self.room(anchor, &self.rho)? else { return Ok(None) };
        let f = &self.cur.entries(i)[s].map;
        let here = f.eval_raw(k, &c).canonical(f.codomain());
        let mut out = route(f.codomain(), &here, a)?;
        out.extend(legs.iter().cloned());
        let mut u = half(&u0);
        for _ in 0..4 {
            let w = third(&u);
            let (lo, hi) = (&c - &w, &c + &w);
            let pieces = tent_pieces(f, k, &lo, &hi, &c, &out);
            let m = Modification { target: i, entry: s, edge: k, lo: lo.clone(), hi: hi.clone(), pieces };
            let (phi, copies) = match apply_replicated(&self.cur, self.orig, &m) {
                Ok(r) => r,
                Err(_) => return Ok(None),
            };
            if self.distance_ok(&phi, i, s, &self.tent_limit)? {
                let rep = is_maximally_homogeneous(&phi);
                if rep.witnesses.iter().all(|w| w.at.is_isolated()) {
                    let unresolved = self.unresolved(&phi, &rep)?;
                    return Ok(Some(Trial { phi, copies, u: (&c - &u, &c + &u), v: (lo, hi), unresolved }));
                }
            }
            u = half(&u);
        }
        Ok(None)
    }

    fn commit(
        &mut self,
        kind: StepKind,
        source: usize,
        anchor: &Anchor,
        trial: Trial,
        peak: GraphPoint,
        covered: Option<(GraphPoint, GraphPoint)>,
    ) {
        for c in &trial.copies {
            self.used.entry((anchor.target, c.entry, c.edge)).or_default().push((c.lo.clone(), c.hi.clone()));
        }
        self.cur = trial.phi;
        self.steps.push(LogEntry {
            kind,
            source,
            target: anchor.target,
            entry: anchor.entry,
            edge: anchor.edge,
            u: trial.u,
            v: trial.v,
            t_prime: anchor.center.clone(),
            peak,
            copies: trial.copies,
            covered,
        });
    }

    /// Covers one arc; `filter` restricts which arcs are eligible.
    fn step(&mut self, filter: &dyn Fn(usize, &GapArc) -> bool) -> Result<bool> {
        let rep = is_maximally_homogeneous(&self.cur);
        let pending = self.collisions(&rep);
        // (priority, source, arc, start point, legs from it, far end)
        let mut options = Vec::new();
        for j in 0..self.cur.source().len() {
            let gd = gap_decomposition(&self.cur, j)?;
            for (r, arc) in gd.gaps.iter().enumerate() {
                if !filter(j, arc) {
                    continue;
                }
                let orient = [
                    (arc.start_in_image, arc.start.clone(), arc.legs.clone(), arc.end.clone()),
                    (arc.end_in_image, arc.end.clone(), reversed_legs(&arc.legs), arc.start.clone()),
                ];
                for (ok, a, legs, b) in orient {
                    if ok {
                        let is_pending = pending.iter().any(|p| p.3 == a);
                        options.push(((!is_pending, j, r), j, arc.clone(), a, legs, b));
                    }
                }
            }
        }
        if options.is_empty() {
            return Ok(false);
        }
        options.sort_by_key(|x| x.0);
        let mut fallback: Option<(usize, Anchor, Trial, GraphPoint, (GraphPoint, GraphPoint))> = None;
        for (_, j, arc, a, legs, b) in &options {
            for anchor in self.anchor_candidates(*j, a, &pending) {
                if let Some(trial) = self.try_tent(&anchor, a, legs)? {
                    let covered = (arc.start.clone(), arc.end.clone());
                    if trial.unresolved == 0 {
                        self.commit(StepKind::Tent, *j, &anchor, trial, b.clone(), Some(covered));
                        return Ok(true);
                    }
                    if fallback.as_ref().is_none_or(|f| trial.unresolved < f.2.unresolved) {
                        fallback = Some((*j, anchor, trial, b.clone(), covered));
                    }
                }
            }
        }
        match fallback {
            Some((j, anchor, trial, b, covered)) => {
                self.commit(StepKind::Tent, j, &anchor, trial, b, Some(covered));
                Ok(true)
            }
            None => {
                let (_, j, arc, ..) = &options[0];
                Err(Error::AnchorNotFound(format!(
                    "source {j}: no eigenvalue function can be extended over gap {}",
                    arc.display(self.cur.source().base(*j))
                )))
            }
        }
    }

    fn repair(&mut self, eps: &Q) -> Result<()> {
        let limit = 4 * is_maximally_homogeneous(&self.cur).witnesses.len() + 8;
        for _ in 0..limit {
            let rep = is_maximally_homogeneous(&self.cur);
            if rep.holds {
                return Ok(());
            }
            if let Some(w) = rep.witnesses.iter().find(|w| !w.at.is_isolated()) {
                return Err(Error::invalid(format!(
                    "target {}: entries {} and {} agree on a whole segment",
                    w.target, w.entries.0, w.entries.1
                )));
            }
            let w = &rep.witnesses[0];
            let i = w.target;
            let CollisionSet::Point(t) = &w.at else { unreachable!() };
            let tree = self.cur.tree(i).tree().clone();
            // window: (tree edge, apex, lo, hi)
            let window = match t {
                GraphPoint::Edge { edge, coord } => {
                    let len = &tree.edge(*edge).length;
                    let eta = half(&min_q(coord, &(len - coord)));
                    (*edge, coord.clone(), coord - &eta, coord + &eta)
                }
                GraphPoint::Vertex(v) if tree.degree(*v) == 1 => {
                    let (k, x) = tree.incidences(*v)[0].clone();
                    let len = tree.edge(k).length.clone();
                    let eta = half(&len);
                    if x.is_zero() {
                        (k, x, Q::zero(), eta)
                    } else {
                        (k, x, &len - eta, len)
                    }
                }
                GraphPoint::Vertex(_) => {
                    return Err(Error::Infeasible(format!("target {i}: coincidence at an interior tree vertex")));
                }
            };
            let mut order = vec![w.entries.1, w.entries.0];
            order.sort_by_key(|&s| (self.is_used(i, s, window.0, &window.1), std::cmp::Reverse(s)));
            let before = rep.witnesses.len();
            if !self.try_bumps(i, &order, &window, eps, before)? {
                return Err(Error::Infeasible(format!(
                    "target {i}: could not separate entries {} and {} at {}",
                    w.entries.0,
                    w.entries.1,
                    t.display(&tree)
                )));
            }
        }
        Err(Error::Infeasible("repair did not converge".into()))
    }

    fn try_bumps(&mut self, i: usize, order: &[usize], window: &(usize, Q, Q, Q), eps: &Q, before: usize) -> Result<bool> {
        let (k, apex, lo0, hi0) = window;
        for &s in order {
            let f = self.cur.entries(i)[s].map.clone();
            for shrink in [qi(1), qi(4), qi(16)] {
                let lo = apex - (apex - lo0) / &shrink;
                let hi = apex + (hi0 - apex) / &shrink;
                for m in [half(eps), -half(eps), eps / qi(6), -(eps / qi(6))] {
                    let Some(pieces) = bump_pieces(&f, *k, &lo, &hi, apex, &m) else { continue };
                    let md = Modification { target: i, entry: s, edge: *k, lo: lo.clone(), hi: hi.clone(), pieces };
                    let Ok((phi, copies)) = apply_replicated(&self.cur, self.orig, &md) else { continue };
                    let rep = is_maximally_homogeneous(&phi);
                    if rep.witnesses.len() >= before || rep.witnesses.iter().any(|w| !w.at.is_isolated()) {
                        continue;
                    }
                    if !self.distance_ok(&phi, i, s, &self.repair_limit)? {
                        continue;
                    }
                    let old = f.eval_raw(*k, apex).canonical(f.codomain());
                    let peak = phi.entries(i)[s].map.eval_raw(*k, apex).canonical(f.codomain());
                    let anchor = Anchor { target: i, entry: s, preimage: old.clone(), edge: *k, center: apex.clone(), value: old };
                    let source = self.cur.entries(i)[s].source;
                    let trial = Trial { phi, copies, u: (lo.clone(), hi.clone()), v: (lo.clone(), hi.clone()), unresolved: 0 };
                    self.commit(StepKind::Repair, source, &anchor, trial, peak, None);
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn bound(&self) -> Result<Q> {
        let mut b = Q::zero();
        for (x, y) in self.orig.targets().iter().zip(self.cur.targets()) {
            for (ex, ey) in x.entries.iter().zip(&y.entries) {
                b = max_q(&b, &pl_sup_distance(&ex.map, &ey.map)?.value);
            }
        }
        Ok(b)
    }
}

/// The first anchor for covering `arc` in source `j`, in the deterministic
/// order (target, entry, tree edge, tree point).
pub fn select_anchor(phi: &DiagonalForm, j: usize, arc: &GapArc, rho: &Q) -> Result<Anchor> {
    let a = if arc.start_in_image {
        &arc.start
    } else if arc.end_in_image {
        &arc.end
    } else {
        return Err(Error::AnchorNotFound("neither gap endpoint lies in an image".into()));
    };
    let run = Run::new(phi, rho.clone());
    run.anchor_candidates(j, a, &[])
        .into_iter()
        .next()
        .ok_or_else(|| Error::AnchorNotFound(format!("no eigenvalue function reaches {}", a.display(phi.source().base(j)))))
}

/// Covers the arcs of one chain, cascading along it.
pub fn perturb_chain(phi: &DiagonalForm, gd: &GapDecomposition, chain: &[usize], rho: &Q) -> Result<(DiagonalForm, Vec<LogEntry>)> {
    let mut run = Run::new(phi, rho.clone());
    let members: Vec<&GapArc> = chain.iter().map(|&r| &gd.gaps[r]).collect();
    let j = gd.source;
    let in_chain =
        |jj: usize, arc: &GapArc| jj == j && members.iter().any(|m| m.legs.iter().any(|l| arc.legs.iter().any(|x| overlaps(l, x))));
    for _ in 0..=2 * members.len() {
        if !run.step(&in_chain)? {
            break;
        }
    }
    Ok((run.cur, run.steps))
}

fn overlaps(a: &Leg, b: &Leg) -> bool {
    let (alo, ahi) = if a.from < a.to { (&a.from, &a.to) } else { (&a.to, &a.from) };
    let (blo, bhi) = if b.from < b.to { (&b.from, &b.to) } else { (&b.to, &b.from) };
    a.edge == b.edge && alo < bhi && blo < ahi
}

/// Removes isolated coincidences by bumps of size at most `epsilon / 2`.
pub fn repair_distinctness(phi: &DiagonalForm, epsilon: &Q) -> Result<DiagonalForm> {
    let mut run = Run::new(phi, epsilon.clone());
    run.repair(epsilon)?;
    Ok(run.cur)
}

pub fn make_surjective_mh(phi: &DiagonalForm, delta: &Q, opts: &PerturbOptions) -> Result<(DiagonalForm, PerturbationLog)> {
    check_delta(phi, delta)?;
    let ui = check_unital_injective(phi);
    if !ui.unital {
        return Err(Error::invalid("input is not unital"));
    }
    if !is_maximally_homogeneous(phi).holds {
        return Err(Error::invalid("input is not maximally homogeneous"));
    }
    if !verify_descent(phi).holds {
        return Err(Error::invalid("input does not descend to the target bases"));
    }
    if let Some(&j) = ui.cyclic_gaps.first() {
        return Err(Error::invalid(format!("source {j}: an uncovered region contains a cycle")));
    }
    let mut shortest: Option<Q> = None;
    let mut chains = Vec::new();
    for j in 0..phi.source().len() {
        let gd = gap_decomposition(phi, j)?;
        for g in &gd.gaps {
            let len = g.length();
            if len > *delta {
                return Err(Error::NotDeltaApproximation { length: Box::new(len), delta: Box::new(delta.clone()) });
            }
            shortest = Some(shortest.map_or(len.clone(), |s| min_q(&s, &len)));
        }
        let cs = maximal_chains(&gd, phi.source().base(j));
        let total = phi.total_target_size();
        if let Some(c) = cs.chains.iter().find(|c| c.isolated_points > total) {
            return Err(Error::invalid(format!(
                "source {j}: a chain has {} isolated image points but only {total} eigenvalue functions exist",
                c.isolated_points
            )));
        }
        chains.push((j, cs));
    }
    let default_rho = match &shortest {
        Some(s) => min_q(&(delta / qi(100)), &half(s)),
        None => delta / qi(100),
    };
    let rho = opts.rho.clone().unwrap_or(default_rho);
    if !rho.is_positive() {
        return Err(Error::InvalidParameter("rho must be positive".into()));
    }
    let eps = opts.epsilon.clone().unwrap_or_else(|| rho.clone());
    let mut run = Run::new(phi, rho.clone());
    run.tent_limit = Some(delta + half(&rho));
    run.repair_limit = Some(delta + &rho);
    let initial: usize = chains.iter().map(|(j, _)| gap_decomposition(phi, *j).map(|g| g.gaps.len()).unwrap_or(0)).sum();
    for _ in 0..=2 * initial + 2 {
        if !run.step(&|_, _| true)? {
            break;
        }
    }
    if !check_unital_injective(&run.cur).injective {
        return Err(Error::Infeasible("gaps remain after the cascade".into()));
    }
    run.repair(&eps)?;
    let bound = run.bound()?;
    if bound > delta + &rho {
        return Err(Error::Infeasible(format!("certified distance {bound} exceeds delta + rho")));
    }
    let log = PerturbationLog { delta: delta.clone(), rho, bound, chains, steps: run.steps };
    Ok((run.cur, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::Block;
    use crate::diagmaps::{Entry, TargetData};
    use crate::geometry::{build_covering_tree, pl_image, CoveringTree, Graph, PLMap};
    use std::sync::Arc;

    fn linear(g: &Arc<Graph>, z: &Arc<Graph>, e: usize, a: Q, b: Q) -> PLMap {
        PLMap::from_knots(g.clone(), z.clone(), vec![vec![(Q::zero(), e, a), (qi(1), e, b)]]).unwrap()
    }

    fn form(z: Arc<Graph>, tree: CoveringTree, maps: Vec<PLMap>) -> DiagonalForm {
        let src = Arc::new(Block::new(vec![(z, 1)]).unwrap());
        let tgt = Arc::new(Block::new(vec![(tree.base().clone(), maps.len())]).unwrap());
        let entries = maps.into_iter().map(|map| Entry { source: 0, map }).collect();
        DiagonalForm::new(src, tgt, vec![TargetData { tree, entries }]).unwrap()
    }

    fn interval_form(maps: Vec<(Q, Q)>) -> DiagonalForm {
        let g = Arc::new(Graph::interval());
        let maps = maps.into_iter().map(|(a, b)| linear(&g, &g, 0, a, b)).collect();
        form(g.clone(), CoveringTree::identity(g).unwrap(), maps)
    }

    fn assert_properties(orig: &DiagonalForm, out: &DiagonalForm, log: &PerturbationLog, delta: &Q) {
        let rep = crate::perturb::verify_properties(orig, out, &log.bound, delta, &log.rho).unwrap();
        assert!(rep.all(), "{rep:?}");
    }

    #[test]
    fn thirds_fixture() {
        let phi = interval_form(vec![(Q::zero(), q(1, 3)), (q(2, 3), qi(1))]);
        let delta = q(1, 3);
        let opts = PerturbOptions { rho: Some(q(1, 100)), epsilon: None };
        let (out, log) = make_surjective_mh(&phi, &delta, &opts).unwrap();
        assert!(log.bound <= q(1, 3) + q(1, 100));
        assert_eq!(log.steps.iter().filter(|s| s.kind == StepKind::Tent).count(), 1);
        assert_properties(&phi, &out, &log, &delta);
    }

    #[test]
    fn injective_input_is_fixed() {
        let phi = interval_form(vec![(Q::zero(), q(1, 2)), (q(1, 2), qi(1))]);
        let (out, log) = make_surjective_mh(&phi, &q(1, 3), &PerturbOptions::default()).unwrap();
        assert_eq!(out, phi);
        assert_eq!(log.bound, Q::zero());
        assert!(log.steps.is_empty());
    }

    #[test]
    fn delta_gate() {
        let phi = interval_form(vec![(Q::zero(), q(1, 5)), (q(1, 5), q(2, 5)), (q(2, 5), q(3, 5)), (q(3, 5), qi(1))]);
        assert_eq!(admissible_delta_bound(&phi), q(1, 4));
        let err = make_surjective_mh(&phi, &q(1, 4), &PerturbOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DeltaBound { ref bound, .. } if **bound == q(1, 4)));
        assert!(check_delta(&phi, &q(1, 5)).is_ok());
    }

    #[test]
    fn long_gap_is_refused() {
        let phi = interval_form(vec![(Q::zero(), q(1, 10)), (q(9, 10), qi(1))]);
        let err = make_surjective_mh(&phi, &q(1, 3), &PerturbOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotDeltaApproximation { .. }));
    }

    #[test]
    fn anchor_at_gap_endpoint() {
        let phi = interval_form(vec![(Q::zero(), q(1, 3)), (q(2, 3), qi(1))]);
        let gd = gap_decomposition(&phi, 0).unwrap();
        let a = select_anchor(&phi, 0, &gd.gaps[0], &q(1, 100)).unwrap();
        assert_eq!((a.target, a.entry), (0, 0));
        assert_eq!(a.preimage, GraphPoint::Vertex(1));
        assert_eq!(a.value, GraphPoint::Edge { edge: 0, coord: q(1, 3) });
        assert!(a.center < qi(1));
    }

    #[test]
    fn constant_entry_anchors() {
        let phi = interval_form(vec![(Q::zero(), q(1, 5)), (q(1, 2), q(1, 2)), (q(4, 5), qi(1))]);
        let gd = gap_decomposition(&phi, 0).unwrap();
        // gap (1/5, 1/2) read from its upper end would use the constant
        let mut arc = gd.gaps[0].clone();
        arc.start_in_image = false;
        let a = select_anchor(&phi, 0, &arc, &q(1, 100)).unwrap();
        assert_eq!(a.entry, 1);
    }

    #[test]
    fn two_gap_chain() {
        let phi = interval_form(vec![(Q::zero(), q(1, 5)), (q(1, 2), q(1, 2)), (q(4, 5), qi(1))]);
        let gd = gap_decomposition(&phi, 0).unwrap();
        let cs = maximal_chains(&gd, phi.source().base(0));
        assert_eq!(cs.chains.len(), 1);
        assert_eq!(cs.chains[0].gaps.len(), 2);
        let (out, steps) = perturb_chain(&phi, &gd, &cs.chains[0].gaps, &q(1, 100)).unwrap();
        assert_eq!(steps.len(), 2);
        assert!(check_unital_injective(&out).injective);
        let delta = q(3, 10);
        let (out, log) = make_surjective_mh(&phi, &delta, &PerturbOptions::default()).unwrap();
        assert_properties(&phi, &out, &log, &delta);
    }

    #[test]
    fn empty_chain_is_identity() {
        let phi = interval_form(vec![(Q::zero(), q(1, 3)), (q(2, 3), qi(1))]);
        let gd = gap_decomposition(&phi, 0).unwrap();
        let (out, steps) = perturb_chain(&phi, &gd, &[], &q(1, 100)).unwrap();
        assert_eq!(out, phi);
        assert!(steps.is_empty());
    }

    #[test]
    fn circle_copies_stay_synchronized() {
        let z = Arc::new(Graph::interval());
        let w = Arc::new(Graph::circle());
        let ct = build_covering_tree(w.clone(), 2).unwrap();
        let tent = |a: Q, b: Q| {
            PLMap::from_knots(w.clone(), z.clone(), vec![vec![(Q::zero(), 0, a.clone()), (q(1, 2), 0, b), (qi(1), 0, a)]]).unwrap()
        };
        let maps = vec![ct.lift(&tent(Q::zero(), q(1, 3))).unwrap(), ct.lift(&tent(qi(1), q(2, 3))).unwrap()];
        let phi = form(z, ct, maps);
        let delta = q(1, 3);
        let (out, log) = make_surjective_mh(&phi, &delta, &PerturbOptions::default()).unwrap();
        let tents: Vec<_> = log.steps.iter().filter(|s| s.kind == StepKind::Tent).collect();
        assert_eq!(tents.len(), 1);
        assert_eq!(tents[0].copies.len(), 4);
        assert!(verify_descent(&out).holds);
        assert_properties(&phi, &out, &log, &delta);
    }

    /// Two entries that trade places between neighbouring fiber copies; the
    /// source is a loop with a short hair that nobody covers.
    #[test]
    fn transposed_fibers() {
        let z = Arc::new(
            Graph::new(
                vec!["v0".into(), "v1".into()],
                vec![("e0".into(), "v0".into(), "v0".into(), qi(1)), ("e1".into(), "v0".into(), "v1".into(), q(1, 8))],
            )
            .unwrap(),
        );
        let w = Arc::new(Graph::circle());
        let ct = build_covering_tree(w.clone(), 2).unwrap();
        let tree = ct.tree().clone();
        // unrolled position of every tree vertex, walking out from t0
        let mut pos: Vec<Option<Q>> = vec![None; tree.vertex_count()];
        pos[0] = Some(Q::zero());
        while pos.iter().any(Option::is_none) {
            for (k, e) in tree.edges().iter().enumerate() {
                let sign = if ct.edge_map()[k].1 { -qi(1) } else { qi(1) };
                match (&pos[e.tail], &pos[e.head]) {
                    (Some(p), None) => pos[e.head] = Some(p + &sign),
                    (None, Some(p)) => pos[e.tail] = Some(p - &sign),
                    _ => {}
                }
            }
        }
        let value = |x: &Q, shift: &Q| {
            let y = x / qi(2) + shift;
            let fl = Q::from_integer(y.floor().to_integer());
            y - fl
        };
        let entry = |shift: Q| {
            let knots = tree
                .edges()
                .iter()
                .map(|e| {
                    let (a, b) = (pos[e.tail].clone().unwrap(), pos[e.head].clone().unwrap());
                    let (xa, xb) = (value(&a, &shift), value(&b, &shift));
                    let xb = if xb < xa && a < b { qi(1) } else { xb };
                    let xa = if xa > xb && a > b {
                        xa
                    } else if xa == Q::zero() && b < a {
                        qi(1)
                    } else {
                        xa
                    };
                    vec![(Q::zero(), 0, xa), (qi(1), 0, xb)]
                })
                .collect();
            PLMap::from_knots(tree.clone(), z.clone(), knots).unwrap()
        };
        let phi = form(z.clone(), ct, vec![entry(Q::zero()), entry(q(1, 2))]);
        assert!(is_maximally_homogeneous(&phi).holds);
        assert!(verify_descent(&phi).holds);
        let perm = fiber_permutation(&phi, 0, 0, 1).unwrap();
        assert!(perm == vec![1, 0] || (0..4).any(|k| fiber_permutation(&phi, 0, 0, k).unwrap() == vec![1, 0]));
        let delta = q(1, 8);
        let (out, log) = make_surjective_mh(&phi, &delta, &PerturbOptions::default()).unwrap();
        let step = &log.steps[0];
        let swapped = step.copies.iter().filter(|c| c.entry != step.entry).count();
        assert!(swapped > 0, "{:?}", step.copies);
        assert!(pl_image(&out.entries(0)[0].map).union(&pl_image(&out.entries(0)[1].map)).is_whole());
        assert_properties(&phi, &out, &log, &delta);
    }

    #[test]
    fn repair_single_collision() {
        // the entries meet only at the end t = 1
        let phi = interval_form(vec![(Q::zero(), qi(1)), (q(1, 2), qi(1))]);
        assert_eq!(is_maximally_homogeneous(&phi).witnesses.len(), 1);
        let eps = q(1, 10);
        let out = repair_distinctness(&phi, &eps).unwrap();
        assert!(is_maximally_homogeneous(&out).holds);
        let moved: Vec<Q> = (0..2).map(|s| pl_sup_distance(&phi.entries(0)[s].map, &out.entries(0)[s].map).unwrap().value).collect();
        assert_eq!(moved.iter().filter(|d| d.is_zero()).count(), 1);
        assert_eq!(moved.iter().max().unwrap(), &half(&eps));
    }

    #[test]
    fn repair_two_collisions() {
        let g = Arc::new(Graph::interval());
        let knots = |pts: &[(Q, Q)]| {
            PLMap::from_knots(g.clone(), g.clone(), vec![pts.iter().map(|(t, x)| (t.clone(), 0, x.clone())).collect()]).unwrap()
        };
        let a = knots(&[(Q::zero(), Q::zero()), (q(1, 4), q(1, 2)), (q(1, 2), Q::zero()), (q(3, 4), q(1, 4)), (qi(1), Q::zero())]);
        let b = knots(&[(Q::zero(), q(1, 2)), (q(1, 2), q(1, 2)), (q(3, 4), q(1, 4)), (qi(1), q(1, 2))]);
        let phi = form(g.clone(), CoveringTree::identity(g).unwrap(), vec![a, b]);
        assert_eq!(is_maximally_homogeneous(&phi).witnesses.len(), 2);
        let out = repair_distinctness(&phi, &q(1, 10)).unwrap();
        assert!(is_maximally_homogeneous(&out).holds);
    }

    #[test]
    fn crossing_cannot_be_repaired() {
        let phi = interval_form(vec![(Q::zero(), qi(1)), (qi(1), Q::zero())]);
        assert!(matches!(repair_distinctness(&phi, &q(1, 10)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn rerun_is_idempotent() {
        let phi = interval_form(vec![(Q::zero(), q(1, 3)), (q(2, 3), qi(1))]);
        let (out, _) = make_surjective_mh(&phi, &q(1, 3), &PerturbOptions::default()).unwrap();
        let (again, log) = make_surjective_mh(&out, &q(1, 3), &PerturbOptions::default()).unwrap();
        assert_eq!(again, out);
        assert_eq!(log.bound, Q::zero());
    }
}
