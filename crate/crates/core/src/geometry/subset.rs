use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::Zero;

use super::graph::Graph;
use super::point::{GraphPoint, Leg};
use crate::error::{Error, Result};
use crate::rational::{fmt_q, Q};

/// A closed subset of a graph made of finitely many closed edge intervals and
/// isolated vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedSubset {
    graph: Arc<Graph>,
    /// Per edge: sorted, pairwise disjoint, maximal closed intervals.
    intervals: Vec<Vec<(Q, Q)>>,
    vertices: BTreeSet<usize>,
}

/// One connected component (or split piece) of a complement, traversed as a
/// path from `start` to `end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapArc {
    pub legs: Vec<Leg>,
    pub start: GraphPoint,
    pub end: GraphPoint,
    /// Whether each endpoint belongs to the closed subset the arc avoids.
    pub start_in_image: bool,
    pub end_in_image: bool,
}

impl GapArc {
    pub fn length(&self) -> Q {
        self.legs.iter().map(Leg::length).sum()
    }

    pub fn endpoints(&self) -> [&GraphPoint; 2] {
        [&self.start, &self.end]
    }

    /// Vertices strictly inside the arc.
    pub fn interior_vertices(&self, g: &Graph) -> Vec<usize> {
        let mut out = Vec::new();
        for w in self.legs.windows(2) {
            let e = g.edge(w[0].edge);
            out.push(if w[0].to.is_zero() { e.tail } else { e.head });
        }
        out
    }

    pub fn display(&self, g: &Graph) -> String {
        format!("({}, {})", self.start.display(g), self.end.display(g))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct End {
    seg: usize,
    hi: bool,
}

impl ClosedSubset {
    pub fn from_intervals(
        graph: Arc<Graph>,
        intervals: impl IntoIterator<Item = (usize, Q, Q)>,
        vertices: impl IntoIterator<Item = usize>,
    ) -> Self {
        let mut per_edge: Vec<Vec<(Q, Q)>> = vec![Vec::new(); graph.edge_count()];
        let mut vs: BTreeSet<usize> = vertices.into_iter().collect();
        for (e, lo, hi) in intervals {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let edge = graph.edge(e);
            if lo.is_zero() {
                vs.insert(edge.tail);
            }
            if hi == edge.length {
                vs.insert(edge.head);
            }
            // degenerate endpoint intervals are carried by vertex membership
            if lo == hi && (lo.is_zero() || hi == edge.length) {
                continue;
            }
            per_edge[e].push((lo, hi));
        }
        for list in &mut per_edge {
            list.sort();
            let mut merged: Vec<(Q, Q)> = Vec::with_capacity(list.len());
            for (lo, hi) in list.drain(..) {
                match merged.last_mut() {
                    Some(last) if lo <= last.1 => {
                        if hi > last.1 {
                            last.1 = hi;
                        }
                    }
                    _ => merged.push((lo, hi)),
                }
            }
            *list = merged;
        }
        ClosedSubset { graph, intervals: per_edge, vertices: vs }
    }

    pub fn empty(graph: Arc<Graph>) -> Self {
        ClosedSubset::from_intervals(graph, [], [])
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn intervals(&self, edge: usize) -> &[(Q, Q)] {
        &self.intervals[edge]
    }

    pub fn vertices(&self) -> &BTreeSet<usize> {
        &self.vertices
    }

    pub fn contains(&self, p: &GraphPoint) -> bool {
        match p {
            GraphPoint::Vertex(v) => self.vertices.contains(v),
            GraphPoint::Edge { edge, coord } => {
                self.intervals.get(*edge).is_some_and(|l| l.iter().any(|(lo, hi)| lo <= coord && coord <= hi))
            }
        }
    }

    pub fn union(&self, other: &ClosedSubset) -> ClosedSubset {
        let ivs = self
            .intervals
            .iter()
            .chain(other.intervals.iter())
            .enumerate()
            .flat_map(|(k, l)| {
                let e = k % self.intervals.len();
                l.iter().map(move |(a, b)| (e, a.clone(), b.clone()))
            })
            .collect::<Vec<_>>();
        let vs = self.vertices.iter().chain(other.vertices.iter()).copied().collect::<Vec<_>>();
        ClosedSubset::from_intervals(self.graph.clone(), ivs, vs)
    }

    pub fn is_whole(&self) -> bool {
        self.vertices.len() == self.graph.vertex_count()
            && self.graph.edges().iter().zip(&self.intervals).all(|(e, l)| l.len() == 1 && l[0].0.is_zero() && l[0].1 == e.length)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.intervals.iter().all(Vec::is_empty)
    }

    /// The complement, decomposed into disjoint arcs.
    ///
    /// Complement pieces on edges are glued through uncovered vertices. At an
    /// uncovered vertex the first two incident pieces (in incidence order) are
    /// joined into one arc passing through the vertex; further pieces end at
    /// the vertex without containing it. A complement component containing a
    /// cycle cannot be written as a union of arcs and is reported as an error.
    pub fn complement_arcs(&self) -> Result<Vec<GapArc>> {
        let g = &*self.graph;
        // open complement segments (edge, lo, hi)
        let mut segs: Vec<(usize, Q, Q)> = Vec::new();
        for (e, list) in self.intervals.iter().enumerate() {
            let len = &g.edge(e).length;
            let mut cursor = Q::zero();
            for (lo, hi) in list {
                if *lo > cursor {
                    segs.push((e, cursor.clone(), lo.clone()));
                }
                cursor = hi.clone();
            }
            if cursor < *len {
                segs.push((e, cursor, len.clone()));
            }
        }
        let vertex_of = |end: End| -> Option<usize> {
            let (e, lo, hi) = &segs[end.seg];
            let edge = g.edge(*e);
            let v = match (end.hi, lo.is_zero(), *hi == edge.length) {
                (false, true, _) => edge.tail,
                (true, _, true) => edge.head,
                _ => return None,
            };
            (!self.vertices.contains(&v)).then_some(v)
        };
        // pair ends at uncovered vertices
        let mut partner: Vec<[Option<End>; 2]> = vec![[None, None]; segs.len()];
        for v in 0..g.vertex_count() {
            if self.vertices.contains(&v) {
                continue;
            }
            let mut ends = Vec::new();
            for (e, coord) in g.incidences(v) {
                let at_hi = !coord.is_zero();
                let found = segs.iter().position(|(se, lo, hi)| *se == e && if at_hi { *hi == coord } else { lo.is_zero() });
                if let Some(seg) = found {
                    let end = End { seg, hi: at_hi };
                    if vertex_of(end) == Some(v) && !ends.contains(&end) {
                        ends.push(end);
                    }
                }
            }
            if ends.len() >= 2 {
                let (a, b) = (ends[0], ends[1]);
                partner[a.seg][a.hi as usize] = Some(b);
                partner[b.seg][b.hi as usize] = Some(a);
            }
        }
        let mut used = vec![false; segs.len()];
        let mut arcs = Vec::new();
        for start in 0..segs.len() {
            if used[start] {
                continue;
            }
            // walk backwards to a free end
            let mut cur = End { seg: start, hi: false };
            let mut steps = 0;
            while let Some(p) = partner[cur.seg][cur.hi as usize] {
                cur = End { seg: p.seg, hi: !p.hi };
                steps += 1;
                if steps > segs.len() {
                    let (e, _, _) = segs[start];
                    return Err(Error::domain(format!("complement component through edge {} contains a cycle", g.edge(e).name)));
                }
            }
            // walk forward from `cur` (entering at end `cur`)
            let mut legs = Vec::new();
            let start_end = cur;
            loop {
                used[cur.seg] = true;
                let (e, lo, hi) = &segs[cur.seg];
                let leg = if cur.hi {
                    Leg { edge: *e, from: hi.clone(), to: lo.clone() }
                } else {
                    Leg { edge: *e, from: lo.clone(), to: hi.clone() }
                };
                legs.push(leg);
                let exit = End { seg: cur.seg, hi: !cur.hi };
                match partner[exit.seg][exit.hi as usize] {
                    Some(next) => cur = next,
                    None => {
                        let point = |leg_edge: usize, c: &Q| GraphPoint::on_edge(g, leg_edge, c.clone()).expect("segment point");
                        let first = &legs[0];
                        let last = legs.last().expect("nonempty");
                        let start = point(first.edge, &first.from);
                        let end = point(last.edge, &last.to);
                        let in_image = |end_: End, p: &GraphPoint| vertex_of(end_).is_none() && self.contains(p);
                        arcs.push(GapArc {
                            start_in_image: in_image(start_end, &start),
                            end_in_image: in_image(exit, &end),
                            start,
                            end,
                            legs,
                        });
                        break;
                    }
                }
            }
        }
        Ok(arcs)
    }

    pub fn display(&self) -> String {
        let g = &*self.graph;
        let mut parts = Vec::new();
        for (e, list) in self.intervals.iter().enumerate() {
            for (lo, hi) in list {
                parts.push(format!("{}[{}, {}]", g.edge(e).name, fmt_q(lo), fmt_q(hi)));
            }
        }
        for v in &self.vertices {
            parts.push(format!("v:{}", g.vertex_name(*v)));
        }
        parts.join(" ")
    }
}
