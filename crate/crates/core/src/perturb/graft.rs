//! Local surgery on eigenvalue functions and its replication over fibers.

use num_traits::{One, Signed, Zero};

use crate::diagmaps::DiagonalForm;
use crate::error::{Error, Result};
use crate::geometry::{geodesic, Graph, GraphPoint, Leg, PLMap, Piece};
use crate::rational::{half, qi, Q};

/// Replacement of entry `entry` of target `target` on `[lo, hi]` of tree
/// edge `edge` by `pieces`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Modification {
    pub target: usize,
    pub entry: usize,
    pub edge: usize,
    pub lo: Q,
    pub hi: Q,
    pub pieces: Vec<Piece>,
}

/// Where a modification was replicated: tree edge, entry and interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberCopy {
    pub edge: usize,
    pub entry: usize,
    pub lo: Q,
    pub hi: Q,
}

/// `f` restricted to `[a, b]` on `edge`, reparametrized affinely onto `[a2, b2]`.
pub(crate) fn compressed(f: &PLMap, edge: usize, a: &Q, b: &Q, a2: &Q, b2: &Q) -> Vec<Piece> {
    let scale = (b2 - a2) / (b - a);
    let map = |t: &Q| a2 + (t - a) * &scale;
    f.pieces(edge)
        .iter()
        .filter(|p| &p.t1 > a && &p.t0 < b)
        .map(|p| {
            let lo = if &p.t0 > a { p.t0.clone() } else { a.clone() };
            let hi = if &p.t1 < b { p.t1.clone() } else { b.clone() };
            let r = p.restrict(&lo, &hi);
            Piece { t0: map(&lo), t1: map(&hi), ..r }
        })
        .collect()
}

/// Spreads `[t0, t1]` over `legs` proportionally to their lengths.
pub(crate) fn lay_legs(t0: &Q, t1: &Q, legs: &[Leg]) -> Vec<Piece> {
    let legs: Vec<&Leg> = legs.iter().filter(|l| l.from != l.to).collect();
    let total: Q = legs.iter().map(|l| l.length()).sum();
    let mut out = Vec::with_capacity(legs.len());
    let mut cursor = t0.clone();
    let mut walked = Q::zero();
    for (k, l) in legs.iter().enumerate() {
        walked += l.length();
        let next = if k + 1 == legs.len() { t1.clone() } else { t0 + (t1 - t0) * (&walked / &total) };
        out.push(Piece { t0: cursor.clone(), t1: next.clone(), target: l.edge, x0: l.from.clone(), x1: l.to.clone() });
        cursor = next;
    }
    out
}

pub(crate) fn reverse_route(legs: &[Leg]) -> Vec<Leg> {
    legs.iter().rev().map(Leg::reversed).collect()
}

/// Legs from `from` to `to`: a straight run when both lie on a common edge,
/// otherwise a geodesic.
pub(crate) fn route(g: &Graph, from: &GraphPoint, to: &GraphPoint) -> Result<Vec<Leg>> {
    if from == to {
        return Ok(Vec::new());
    }
    let mut best: Option<Leg> = None;
    for r in from.raw_reps(g) {
        for s in to.raw_reps(g) {
            if r.edge == s.edge {
                let leg = Leg { edge: r.edge, from: r.coord.clone(), to: s.coord };
                if best.as_ref().is_none_or(|b| leg.length() < b.length()) {
                    best = Some(leg);
                }
            }
        }
    }
    match best {
        Some(l) => Ok(vec![l]),
        None => geodesic(g, from, to),
    }
}

/// A tent on `V = [lo, hi]` peaking at `tp`: the original values are kept
/// (compressed into the outer halves) and the middle walks `out` and back.
pub(crate) fn tent_pieces(f: &PLMap, edge: usize, lo: &Q, hi: &Q, tp: &Q, out: &[Leg]) -> Vec<Piece> {
    let m1 = half(&(lo + tp));
    let m2 = half(&(tp + hi));
    let mut pieces = compressed(f, edge, lo, tp, lo, &m1);
    if out.iter().all(|l| l.from == l.to) {
        let v = f.eval_raw(edge, tp);
        pieces.push(Piece { t0: m1, t1: m2.clone(), target: v.edge, x0: v.coord.clone(), x1: v.coord });
    } else {
        pieces.extend(lay_legs(&m1, tp, out));
        pieces.extend(lay_legs(tp, &m2, &reverse_route(out)));
    }
    pieces.extend(compressed(f, edge, tp, hi, &m2, hi));
    pieces
}

/// Coordinate on tree edge `k2` corresponding to `t` on `k` (same base edge).
pub(crate) fn transport(phi: &DiagonalForm, i: usize, k: usize, k2: usize, t: &Q) -> Q {
    let em = phi.tree(i).edge_map();
    if em[k].1 == em[k2].1 {
        t.clone()
    } else {
        &phi.tree(i).tree().edge(k).length - t
    }
}

fn transport_pieces(phi: &DiagonalForm, i: usize, k: usize, k2: usize, pieces: &[Piece]) -> Vec<Piece> {
    let em = phi.tree(i).edge_map();
    if em[k].1 == em[k2].1 {
        return pieces.to_vec();
    }
    let len = &phi.tree(i).tree().edge(k).length;
    pieces.iter().rev().map(|p| Piece { t0: len - &p.t1, t1: len - &p.t0, target: p.target, x0: p.x1.clone(), x1: p.x0.clone() }).collect()
}

/// Tree edges over the same base edge as `k`, including `k` itself.
pub(crate) fn fiber_edges(phi: &DiagonalForm, i: usize, k: usize) -> Vec<usize> {
    let em = phi.tree(i).edge_map();
    (0..em.len()).filter(|&k2| em[k2].0 == em[k].0).collect()
}

/// The permutation `μ` with `λ_s` on `k` matching `λ_{μ(s)}` on `k2`,
/// read off at a sample point of `k` where the entries are pairwise distinct.
pub fn fiber_permutation(phi: &DiagonalForm, i: usize, k: usize, k2: usize) -> Result<Vec<usize>> {
    let entries = phi.entries(i);
    let tree = phi.tree(i).tree();
    let len = &tree.edge(k).length;
    let mut last_err = None;
    for (num, den) in [(1, 2), (1, 3), (2, 3), (1, 5), (4, 5), (3, 7), (5, 11)] {
        let t = len * crate::rational::q(num, den);
        let t2 = transport(phi, i, k, k2, &t);
        let here: Vec<(usize, GraphPoint)> =
            entries.iter().map(|e| (e.source, e.map.eval_raw(k, &t).canonical(e.map.codomain()))).collect();
        let mut sorted = here.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != here.len() {
            continue;
        }
        let there: Vec<(usize, GraphPoint)> =
            entries.iter().map(|e| (e.source, e.map.eval_raw(k2, &t2).canonical(e.map.codomain()))).collect();
        let perm: Option<Vec<usize>> = here.iter().map(|v| there.iter().position(|w| w == v)).collect();
        match perm {
            Some(p) => return Ok(p),
            None => last_err = Some(format!("target {i}: spectra over tree edges {k} and {k2} differ")),
        }
    }
    Err(Error::invalid(last_err.unwrap_or_else(|| format!("target {i}: no separating sample on tree edge {k}"))))
}

/// Applies `m` and its transported copies on every fiber edge, using the
/// permutations read off from `perm_source` (normally the unmodified input).
pub(crate) fn apply_replicated(phi: &DiagonalForm, perm_source: &DiagonalForm, m: &Modification) -> Result<(DiagonalForm, Vec<FiberCopy>)> {
    let i = m.target;
    let mut out = phi.clone();
    let mut copies = Vec::new();
    for k2 in fiber_edges(phi, i, m.edge) {
        let s2 = if k2 == m.edge { m.entry } else { fiber_permutation(perm_source, i, m.edge, k2)?[m.entry] };
        let (a, b) = (transport(phi, i, m.edge, k2, &m.lo), transport(phi, i, m.edge, k2, &m.hi));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let pieces = transport_pieces(phi, i, m.edge, k2, &m.pieces);
        let map = out.entries(i)[s2]
            .map
            .splice(k2, &lo, &hi, pieces)
            .map_err(|e| Error::invalid(format!("replicating onto tree edge {k2}: {e}")))?;
        out = out.with_map(i, s2, map)?;
        copies.push(FiberCopy { edge: k2, entry: s2, lo, hi });
    }
    Ok((out, copies))
}

/// Replicates a modification over all fiber copies so the result descends.
pub fn descend(phi: &DiagonalForm, m: &Modification) -> Result<(DiagonalForm, Vec<FiberCopy>)> {
    apply_replicated(phi, phi, m)
}

/// `f + m·b` on `[lo, hi]` where `b` is the PL tent with apex 1 at `apex`
/// and 0 at the ends of the window other than the apex; `None` if `f` leaves
/// a single codomain edge there or the bump would leave it.
pub(crate) fn bump_pieces(f: &PLMap, edge: usize, lo: &Q, hi: &Q, apex: &Q, m: &Q) -> Option<Vec<Piece>> {
    let bump = |t: &Q| -> Q {
        let w = if t <= apex { apex - lo } else { hi - apex };
        if w.is_zero() {
            return m.clone();
        }
        m * (Q::one() - (t - apex).abs() / w)
    };
    let mut cuts = vec![lo.clone(), hi.clone(), apex.clone()];
    for p in f.pieces(edge) {
        for t in [&p.t0, &p.t1] {
            if lo < t && t < hi {
                cuts.push(t.clone());
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    let mut out = Vec::new();
    let mut target = None;
    for w in cuts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let p = f.pieces(edge).iter().find(|p| p.t0 <= *a && *b <= p.t1)?;
        if target.replace(p.target).is_some_and(|e| e != p.target) {
            return None;
        }
        let len = &f.codomain().edge(p.target).length;
        let (x0, x1) = (p.at(a) + bump(a), p.at(b) + bump(b));
        for x in [&x0, &x1] {
            if x.is_negative() || x > len {
                return None;
            }
        }
        out.push(Piece { t0: a.clone(), t1: b.clone(), target: p.target, x0, x1 });
    }
    Some(out)
}

/// Largest absolute slope of `f` on a tree edge.
pub(crate) fn max_slope(f: &PLMap, edge: usize) -> Q {
    f.pieces(edge).iter().map(|p| p.slope().abs()).max().unwrap_or_else(Q::zero)
}

/// Tent on `V = [lo, hi]` of entry `(i, s)` reaching `peak` at `tp` via the
/// route `λ(tp) → peak`; replicated over fibers.
#[allow(clippy::too_many_arguments)]
pub fn graft_tent(
    phi: &DiagonalForm,
    i: usize,
    s: usize,
    edge: usize,
    lo: &Q,
    hi: &Q,
    tp: &Q,
    peak: &GraphPoint,
) -> Result<(DiagonalForm, Vec<FiberCopy>)> {
    let f = &phi.entries(i).get(s).ok_or_else(|| Error::domain(format!("no entry ({i}, {s})")))?.map;
    if !(lo < tp && tp < hi) || lo.is_negative() || hi > &f.domain().edge(edge).length {
        return Err(Error::InvalidParameter("tent needs lo < t' < hi inside the tree edge".into()));
    }
    let start = f.eval_raw(edge, tp).canonical(f.codomain());
    let out = route(f.codomain(), &start, peak)?;
    let pieces = tent_pieces(f, edge, lo, hi, tp, &out);
    let m = Modification { target: i, entry: s, edge, lo: lo.clone(), hi: hi.clone(), pieces };
    descend(phi, &m)
}

pub(crate) fn third(x: &Q) -> Q {
    x / qi(3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::Block;
    use crate::diagmaps::{check_unital_injective, Entry, TargetData};
    use crate::geometry::{build_covering_tree, pl_eval};
    use crate::rational::q;
    use std::sync::Arc;

    #[test]
    fn compression_rescales() {
        let g = Arc::new(Graph::interval());
        let id = PLMap::identity(g);
        let p = compressed(&id, 0, &q(1, 2), &qi(1), &q(1, 2), &q(3, 4));
        assert_eq!(p, vec![Piece { t0: q(1, 2), t1: q(3, 4), target: 0, x0: q(1, 2), x1: qi(1) }]);
    }

    #[test]
    fn proportional_legs() {
        let legs = vec![Leg { edge: 0, from: Q::zero(), to: q(1, 4) }, Leg { edge: 1, from: Q::zero(), to: q(3, 4) }];
        let p = lay_legs(&Q::zero(), &qi(1), &legs);
        assert_eq!(p[0].t1, q(1, 4));
        assert_eq!(p[0].slope(), p[1].slope());
    }

    #[test]
    fn tent_covers_gap() {
        let g = Arc::new(Graph::interval());
        let src = Arc::new(Block::new(vec![(g.clone(), 1)]).unwrap());
        let tgt = Arc::new(Block::new(vec![(g.clone(), 2)]).unwrap());
        let tree = build_covering_tree(g.clone(), 1).unwrap();
        let f = PLMap::from_knots(g.clone(), g.clone(), vec![vec![(Q::zero(), 0, Q::zero()), (qi(1), 0, q(1, 3))]]).unwrap();
        let h = PLMap::from_knots(g.clone(), g.clone(), vec![vec![(Q::zero(), 0, q(2, 3)), (qi(1), 0, qi(1))]]).unwrap();
        let phi = crate::diagmaps::DiagonalForm::new(
            src,
            tgt,
            vec![TargetData { tree, entries: vec![Entry { source: 0, map: f }, Entry { source: 0, map: h }] }],
        )
        .unwrap();
        assert!(!check_unital_injective(&phi).injective);
        let peak = GraphPoint::Edge { edge: 0, coord: q(2, 3) };
        let (out, copies) = graft_tent(&phi, 0, 0, 0, &q(3, 4), &qi(1), &q(7, 8), &peak).unwrap();
        assert_eq!(copies.len(), 1);
        assert!(check_unital_injective(&out).injective);
        let w = &out.entries(0)[0].map;
        assert_eq!(pl_eval(w, &GraphPoint::Edge { edge: 0, coord: q(7, 8) }).unwrap(), peak);
        assert_eq!(pl_eval(w, &GraphPoint::Edge { edge: 0, coord: q(1, 2) }).unwrap(), GraphPoint::Edge { edge: 0, coord: q(1, 6) });
    }
}
