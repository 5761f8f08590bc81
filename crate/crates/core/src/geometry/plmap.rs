use std::sync::Arc;

use num_traits::{Signed, Zero};

use super::graph::Graph;
use super::point::{distance_unchecked, GraphPoint, RawPoint};
use super::subset::ClosedSubset;
use crate::error::{Error, Result};
use crate::rational::{fmt_q, qi, Q};

/// One affine segment: domain `[t0, t1]` maps onto target-edge coordinates
/// `x0 ..= x1` (either order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub t0: Q,
    pub t1: Q,
    pub target: usize,
    pub x0: Q,
    pub x1: Q,
}

impl Piece {
    pub fn at(&self, t: &Q) -> Q {
        &self.x0 + self.slope() * (t - &self.t0)
    }

    pub fn slope(&self) -> Q {
        (&self.x1 - &self.x0) / (&self.t1 - &self.t0)
    }

    pub fn is_constant(&self) -> bool {
        self.x0 == self.x1
    }

    pub fn contains(&self, t: &Q) -> bool {
        &self.t0 <= t && t <= &self.t1
    }

    /// The same affine map restricted to `[a, b]`.
    pub fn restrict(&self, a: &Q, b: &Q) -> Piece {
        Piece { t0: a.clone(), t1: b.clone(), target: self.target, x0: self.at(a), x1: self.at(b) }
    }
}

/// A continuous piecewise-linear map between graphs. Each segment maps into a
/// single codomain edge; pieces are kept in a normal form so that derived
/// equality coincides with equality of maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLMap {
    domain: Arc<Graph>,
    codomain: Arc<Graph>,
    edges: Vec<Vec<Piece>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupDistance {
    pub value: Q,
    /// A domain point where the supremum is attained.
    pub witness: GraphPoint,
}

pub(crate) fn same_graph(a: &Arc<Graph>, b: &Arc<Graph>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl PLMap {
    pub fn new(domain: Arc<Graph>, codomain: Arc<Graph>, edges: Vec<Vec<Piece>>) -> Result<Self> {
        if edges.len() != domain.edge_count() {
            return Err(Error::domain(format!("map lists {} domain edges, domain has {}", edges.len(), domain.edge_count())));
        }
        for (ei, pieces) in edges.iter().enumerate() {
            let len = &domain.edge(ei).length;
            let first = pieces.first().ok_or_else(|| Error::domain(format!("domain edge {ei} has no pieces")))?;
            if !first.t0.is_zero() || pieces.last().map(|p| &p.t1) != Some(len) {
                return Err(Error::domain(format!("pieces on domain edge {ei} do not span [0, length]")));
            }
            for (k, p) in pieces.iter().enumerate() {
                if p.t0 >= p.t1 {
                    return Err(Error::domain(format!("empty piece on domain edge {ei}")));
                }
                let tgt =
                    codomain.edges().get(p.target).ok_or_else(|| Error::domain(format!("piece targets unknown edge {}", p.target)))?;
                for x in [&p.x0, &p.x1] {
                    if x.is_negative() || *x > tgt.length {
                        return Err(Error::domain(format!("piece value {} leaves edge {}", fmt_q(x), tgt.name)));
                    }
                }
                if let Some(next) = pieces.get(k + 1) {
                    if next.t0 != p.t1 {
                        return Err(Error::domain(format!("gap between pieces on domain edge {ei}")));
                    }
                    let a = RawPoint { edge: p.target, coord: p.x1.clone() }.canonical(&codomain);
                    let b = RawPoint { edge: next.target, coord: next.x0.clone() }.canonical(&codomain);
                    if a != b {
                        return Err(Error::domain(format!("discontinuity on domain edge {ei} at t = {}", fmt_q(&p.t1))));
                    }
                }
            }
        }
        let map = PLMap { domain, codomain, edges }.normalized();
        for v in 0..map.domain.vertex_count() {
            let mut images = map.domain.incidences(v).into_iter().map(|(e, t)| map.eval_raw(e, &t).canonical(&map.codomain));
            let first = images.next().expect("vertex lies on an edge");
            if images.any(|p| p != first) {
                return Err(Error::domain(format!("map is discontinuous at vertex {}", map.domain.vertex_name(v))));
            }
        }
        Ok(map)
    }

    pub fn identity(g: Arc<Graph>) -> Self {
        let edges = g
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| vec![Piece { t0: Q::zero(), t1: e.length.clone(), target: i, x0: Q::zero(), x1: e.length.clone() }])
            .collect();
        PLMap { domain: g.clone(), codomain: g, edges }
    }

    pub fn constant(domain: Arc<Graph>, codomain: Arc<Graph>, point: &GraphPoint) -> Result<Self> {
        point.check_on(&codomain)?;
        let raw = point.raw_reps(&codomain).remove(0);
        let edges = domain
            .edges()
            .iter()
            .map(|e| vec![Piece { t0: Q::zero(), t1: e.length.clone(), target: raw.edge, x0: raw.coord.clone(), x1: raw.coord.clone() }])
            .collect();
        Ok(PLMap { domain, codomain, edges })
    }

    /// Interval-domain convenience: one affine piece per consecutive knot pair
    /// on the single domain edge. Knots are `(t, target edge, coordinate)`.
    pub fn from_knots(domain: Arc<Graph>, codomain: Arc<Graph>, per_edge: Vec<Vec<(Q, usize, Q)>>) -> Result<Self> {
        let mut edges = Vec::new();
        for knots in per_edge {
            let mut pieces = Vec::new();
            for w in knots.windows(2) {
                let ((ta, ea, xa), (tb, eb, xb)) = (&w[0], &w[1]);
                if ta == tb {
                    continue;
                }
                if ea != eb {
                    return Err(Error::domain("consecutive knots on different target edges"));
                }
                pieces.push(Piece { t0: ta.clone(), t1: tb.clone(), target: *ea, x0: xa.clone(), x1: xb.clone() });
            }
            edges.push(pieces);
        }
        PLMap::new(domain, codomain, edges)
    }

    pub fn domain(&self) -> &Arc<Graph> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<Graph> {
        &self.codomain
    }

    pub fn pieces(&self, edge: usize) -> &[Piece] {
        &self.edges[edge]
    }

    pub fn all_pieces(&self) -> &[Vec<Piece>] {
        &self.edges
    }

    /// Breakpoints `0 = t_0 < ... < t_K = length` on a domain edge.
    pub fn breakpoints(&self, edge: usize) -> Vec<Q> {
        let ps = &self.edges[edge];
        let mut out: Vec<Q> = ps.iter().map(|p| p.t0.clone()).collect();
        out.push(ps.last().expect("nonempty").t1.clone());
        out
    }

    pub fn piece_at(&self, edge: usize, t: &Q) -> &Piece {
        let ps = &self.edges[edge];
        let k = ps.partition_point(|p| p.t1 < *t);
        &ps[k.min(ps.len() - 1)]
    }

    pub fn eval_raw(&self, edge: usize, t: &Q) -> RawPoint {
        let p = self.piece_at(edge, t);
        RawPoint { edge: p.target, coord: p.at(t) }
    }

    pub fn eval(&self, p: &GraphPoint) -> Result<GraphPoint> {
        p.check_on(&self.domain)?;
        let raw = p.raw_reps(&self.domain).remove(0);
        Ok(self.eval_raw(raw.edge, &raw.coord).canonical(&self.codomain))
    }

    /// Replaces the map on `[lo, hi]` of domain edge `edge` by `pieces`, which
    /// must exactly span that interval and match the old values at its ends.
    pub fn splice(&self, edge: usize, lo: &Q, hi: &Q, pieces: Vec<Piece>) -> Result<PLMap> {
        let mut out = Vec::new();
        for p in &self.edges[edge] {
            if &p.t0 < lo {
                let end = if &p.t1 < lo { p.t1.clone() } else { lo.clone() };
                out.push(p.restrict(&p.t0, &end));
            }
        }
        out.extend(pieces);
        for p in &self.edges[edge] {
            if &p.t1 > hi {
                let start = if &p.t0 > hi { p.t0.clone() } else { hi.clone() };
                out.push(p.restrict(&start, &p.t1));
            }
        }
        let mut edges = self.edges.clone();
        edges[edge] = out;
        PLMap::new(self.domain.clone(), self.codomain.clone(), edges)
    }

    fn normalized(mut self) -> Self {
        for pieces in &mut self.edges {
            for p in pieces.iter_mut() {
                if p.is_constant() {
                    let pt = RawPoint { edge: p.target, coord: p.x0.clone() }.canonical(&self.codomain);
                    let raw = pt.raw_reps(&self.codomain).remove(0);
                    p.target = raw.edge;
                    p.x0 = raw.coord.clone();
                    p.x1 = raw.coord;
                }
            }
            let mut merged: Vec<Piece> = Vec::with_capacity(pieces.len());
            for p in pieces.drain(..) {
                if let Some(last) = merged.last_mut() {
                    if last.target == p.target && last.x1 == p.x0 && last.slope() == p.slope() {
                        last.t1 = p.t1;
                        last.x1 = p.x1;
                        continue;
                    }
                }
                merged.push(p);
            }
            *pieces = merged;
        }
        self
    }
}

pub fn pl_eval(f: &PLMap, p: &GraphPoint) -> Result<GraphPoint> {
    f.eval(p)
}

/// `f ∘ g`.
pub fn pl_compose(f: &PLMap, g: &PLMap) -> Result<PLMap> {
    if !same_graph(g.codomain(), f.domain()) {
        return Err(Error::domain("codomain of the inner map differs from the domain of the outer map"));
    }
    let mut edges = Vec::with_capacity(g.edges.len());
    for pieces in &g.edges {
        let mut out = Vec::new();
        for p in pieces {
            if p.is_constant() {
                let v = f.eval_raw(p.target, &p.x0);
                out.push(Piece { t0: p.t0.clone(), t1: p.t1.clone(), target: v.edge, x0: v.coord.clone(), x1: v.coord });
                continue;
            }
            let (lo, hi) = if p.x0 < p.x1 { (&p.x0, &p.x1) } else { (&p.x1, &p.x0) };
            let mut ts = vec![p.t0.clone()];
            let inner: Vec<Q> = f.breakpoints(p.target).into_iter().filter(|x| lo < x && x < hi).collect();
            let slope = p.slope();
            let mut cuts: Vec<Q> = inner.iter().map(|x| &p.t0 + (x - &p.x0) / &slope).collect();
            cuts.sort();
            ts.extend(cuts);
            ts.push(p.t1.clone());
            for w in ts.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let (xa, xb) = (p.at(a), p.at(b));
                let mid = (&xa + &xb) / qi(2);
                let fp = f.piece_at(p.target, &mid);
                out.push(Piece { t0: a.clone(), t1: b.clone(), target: fp.target, x0: fp.at(&xa), x1: fp.at(&xb) });
            }
        }
        edges.push(out);
    }
    PLMap::new(g.domain().clone(), f.codomain().clone(), edges)
}

/// Exact image of `f` as a closed subset of its codomain.
pub fn pl_image(f: &PLMap) -> ClosedSubset {
    let mut intervals = Vec::new();
    for p in f.edges.iter().flatten() {
        let (lo, hi) = if p.x0 <= p.x1 { (&p.x0, &p.x1) } else { (&p.x1, &p.x0) };
        intervals.push((p.target, lo.clone(), hi.clone()));
    }
    ClosedSubset::from_intervals(f.codomain().clone(), intervals, [])
}

/// Value `c0 + c1 * t`.
#[derive(Clone, Debug)]
struct Affine {
    c0: Q,
    c1: Q,
}

impl Affine {
    fn of_piece(p: &Piece) -> Affine {
        let c1 = p.slope();
        Affine { c0: &p.x0 - &c1 * &p.t0, c1 }
    }

    fn constant(c: Q) -> Affine {
        Affine { c0: c, c1: Q::zero() }
    }

    fn add(&self, o: &Affine) -> Affine {
        Affine { c0: &self.c0 + &o.c0, c1: &self.c1 + &o.c1 }
    }

    fn neg(&self) -> Affine {
        Affine { c0: -&self.c0, c1: -&self.c1 }
    }

    fn crossing(&self, o: &Affine) -> Option<Q> {
        let dc1 = &self.c1 - &o.c1;
        (!dc1.is_zero()).then(|| (&o.c0 - &self.c0) / dc1)
    }
}

/// Merged breakpoints of two maps on a domain edge.
pub(crate) fn common_refinement(f: &PLMap, g: &PLMap, edge: usize) -> Vec<Q> {
    let mut ts = f.breakpoints(edge);
    ts.extend(g.breakpoints(edge));
    ts.sort();
    ts.dedup();
    ts
}

/// Exact `sup_t d(f(t), g(t))` with a witness point.
///
/// On each refinement segment the distance is the minimum of finitely many
/// affine route lengths (through either end of each active edge, or directly
/// when both sit on the same edge), so the supremum is attained at a segment
/// end or at a crossing of two route functions.
pub fn pl_sup_distance(f: &PLMap, g: &PLMap) -> Result<SupDistance> {
    if !same_graph(f.domain(), g.domain()) || !same_graph(f.codomain(), g.codomain()) {
        return Err(Error::domain("maps have different domains or codomains"));
    }
    let cod = f.codomain();
    let dom = f.domain();
    let mut best: Option<(Q, usize, Q)> = None;
    for edge in 0..dom.edge_count() {
        let ts = common_refinement(f, g, edge);
        for w in ts.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let mid = (a + b) / qi(2);
            let (pf, pg) = (f.piece_at(edge, &mid), g.piece_at(edge, &mid));
            let (x1, x2) = (Affine::of_piece(pf), Affine::of_piece(pg));
            let (e1, e2) = (cod.edge(pf.target), cod.edge(pg.target));
            let exits = |x: &Affine, len: &Q, tail: usize, head: usize| {
                vec![(tail, x.clone()), (head, Affine::constant(len.clone()).add(&x.neg()))]
            };
            let mut funcs = Vec::new();
            for (u, du) in exits(&x1, &e1.length, e1.tail, e1.head) {
                for (v, dv) in exits(&x2, &e2.length, e2.tail, e2.head) {
                    if let Some(d) = cod.vertex_distance(u, v) {
                        funcs.push(du.add(&Affine::constant(d.clone())).add(&dv));
                    }
                }
            }
            if pf.target == pg.target {
                let diff = x1.add(&x2.neg());
                funcs.push(diff.neg());
                funcs.push(diff);
            }
            let mut cands = vec![a.clone(), b.clone()];
            for i in 0..funcs.len() {
                for j in i + 1..funcs.len() {
                    if let Some(t) = funcs[i].crossing(&funcs[j]) {
                        if a < &t && &t < b {
                            cands.push(t);
                        }
                    }
                }
            }
            for t in cands {
                let p = RawPoint { edge: pf.target, coord: pf.at(&t) }.canonical(cod);
                let q = RawPoint { edge: pg.target, coord: pg.at(&t) }.canonical(cod);
                let d = distance_unchecked(cod, &p, &q);
                if best.as_ref().is_none_or(|(bd, _, _)| d > *bd) {
                    best = Some((d, edge, t));
                }
            }
        }
    }
    let (value, edge, t) = best.expect("domain has an edge");
    Ok(SupDistance { value, witness: GraphPoint::on_edge(dom, edge, t)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn interval() -> Arc<Graph> {
        Arc::new(Graph::interval())
    }

    fn affine(g: &Arc<Graph>, a: Q, b: Q) -> PLMap {
        PLMap::from_knots(g.clone(), g.clone(), vec![vec![(Q::zero(), 0, a), (qi(1), 0, b)]]).unwrap()
    }

    fn pt(g: &Graph, c: Q) -> GraphPoint {
        GraphPoint::on_edge(g, 0, c).unwrap()
    }

    #[test]
    fn eval_examples() {
        let g = interval();
        let id = PLMap::identity(g.clone());
        assert_eq!(pl_eval(&id, &pt(&g, q(1, 3))).unwrap(), pt(&g, q(1, 3)));
        let halve = affine(&g, Q::zero(), q(1, 2));
        assert_eq!(pl_eval(&halve, &GraphPoint::Vertex(1)).unwrap(), pt(&g, q(1, 2)));
        let tent =
            PLMap::from_knots(g.clone(), g.clone(), vec![vec![(Q::zero(), 0, Q::zero()), (q(1, 2), 0, qi(1)), (qi(1), 0, Q::zero())]])
                .unwrap();
        assert_eq!(pl_eval(&tent, &pt(&g, q(3, 4))).unwrap(), pt(&g, q(1, 2)));
        // dense sampling cross-check of the tent t -> 2t, 2 - 2t
        for k in 0..=64 {
            let t = q(k, 64);
            let want = if t <= q(1, 2) { &t * qi(2) } else { qi(2) - &t * qi(2) };
            assert_eq!(pl_eval(&tent, &pt(&g, t)).unwrap(), pt(&g, want));
        }
    }

    #[test]
    fn eval_off_domain_is_error() {
        let g = interval();
        let id = PLMap::identity(g);
        assert!(pl_eval(&id, &GraphPoint::Vertex(7)).is_err());
    }

    #[test]
    fn compose_examples() {
        let g = interval();
        let id = PLMap::identity(g.clone());
        let halve = affine(&g, Q::zero(), q(1, 2));
        assert_eq!(pl_compose(&halve, &id).unwrap(), halve);
        assert_eq!(pl_compose(&halve, &halve).unwrap(), affine(&g, Q::zero(), q(1, 4)));
        let circle = Arc::new(Graph::circle());
        assert!(pl_compose(&halve, &PLMap::identity(circle)).is_err());
    }

    #[test]
    fn image_examples() {
        let g = interval();
        assert!(pl_image(&PLMap::identity(g.clone())).is_whole());
        let c = PLMap::constant(g.clone(), g.clone(), &pt(&g, q(1, 2))).unwrap();
        let img = pl_image(&c);
        assert_eq!(img.intervals(0), &[(q(1, 2), q(1, 2))]);
        let third = affine(&g, Q::zero(), q(1, 3));
        let img = pl_image(&third);
        assert_eq!(img.intervals(0), &[(Q::zero(), q(1, 3))]);
        for k in 0..=30 {
            let p = pt(&g, q(k, 30));
            assert_eq!(img.contains(&p), k <= 10);
        }
    }

    #[test]
    fn sup_distance_examples() {
        let g = interval();
        let id = PLMap::identity(g.clone());
        assert_eq!(pl_sup_distance(&id, &id).unwrap().value, Q::zero());
        let halve = affine(&g, Q::zero(), q(1, 2));
        let d = pl_sup_distance(&id, &halve).unwrap();
        assert_eq!(d.value, q(1, 2));
        assert_eq!(d.witness, GraphPoint::Vertex(1));
        let c1 = PLMap::constant(g.clone(), g.clone(), &pt(&g, q(1, 5))).unwrap();
        let c2 = PLMap::constant(g.clone(), g.clone(), &pt(&g, q(7, 10))).unwrap();
        assert_eq!(pl_sup_distance(&c1, &c2).unwrap().value, q(1, 2));
    }

    #[test]
    fn sup_distance_on_circle_wraps() {
        // f(t) = t and g(t) = t + 1/2 (mod 1): distance is 1/2 everywhere
        let c = Arc::new(Graph::circle());
        let f = PLMap::identity(c.clone());
        let g = PLMap::new(
            c.clone(),
            c.clone(),
            vec![vec![
                Piece { t0: Q::zero(), t1: q(1, 2), target: 0, x0: q(1, 2), x1: qi(1) },
                Piece { t0: q(1, 2), t1: qi(1), target: 0, x0: Q::zero(), x1: q(1, 2) },
            ]],
        )
        .unwrap();
        assert_eq!(pl_sup_distance(&f, &g).unwrap().value, q(1, 2));
    }

    #[test]
    fn rejects_discontinuous_maps() {
        let g = interval();
        let bad = PLMap::new(
            g.clone(),
            g.clone(),
            vec![vec![
                Piece { t0: Q::zero(), t1: q(1, 2), target: 0, x0: Q::zero(), x1: q(1, 4) },
                Piece { t0: q(1, 2), t1: qi(1), target: 0, x0: q(1, 3), x1: qi(1) },
            ]],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn splice_replaces_middle() {
        let g = interval();
        let id = PLMap::identity(g.clone());
        let mid = vec![
            Piece { t0: q(1, 4), t1: q(1, 2), target: 0, x0: q(1, 4), x1: q(3, 4) },
            Piece { t0: q(1, 2), t1: q(3, 4), target: 0, x0: q(3, 4), x1: q(3, 4) },
        ];
        let f = id.splice(0, &q(1, 4), &q(3, 4), mid).unwrap();
        assert_eq!(pl_eval(&f, &pt(&g, q(1, 2))).unwrap(), pt(&g, q(3, 4)));
        assert_eq!(pl_eval(&f, &pt(&g, q(7, 8))).unwrap(), pt(&g, q(7, 8)));
    }
}
