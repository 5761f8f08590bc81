use std::fmt;

use num_traits::{Signed, Zero};

use super::graph::Graph;
use crate::error::{Error, Result};
use crate::rational::{fmt_q, Q};

/// A point of a graph in canonical form: vertices are never represented by
/// an edge endpoint, so derived equality is exact point equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphPoint {
    Vertex(usize),
    /// `0 < coord < length(edge)`.
    Edge {
        edge: usize,
        coord: Q,
    },
}

/// An edge coordinate that may sit on an endpoint (`0 <= coord <= length`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPoint {
    pub edge: usize,
    pub coord: Q,
}

/// A straight run along one edge from coordinate `from` to `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leg {
    pub edge: usize,
    pub from: Q,
    pub to: Q,
}

impl Leg {
    pub fn length(&self) -> Q {
        (&self.to - &self.from).abs()
    }

    pub fn reversed(&self) -> Leg {
        Leg { edge: self.edge, from: self.to.clone(), to: self.from.clone() }
    }
}

impl GraphPoint {
    /// Canonical point for edge coordinate `coord`; endpoints become vertices.
    pub fn on_edge(g: &Graph, edge: usize, coord: Q) -> Result<GraphPoint> {
        let e = g.edges().get(edge).ok_or_else(|| Error::domain(format!("edge index {edge} out of range")))?;
        if coord.is_negative() || coord > e.length {
            return Err(Error::domain(format!("coordinate {} outside edge {} of length {}", fmt_q(&coord), e.name, fmt_q(&e.length))));
        }
        Ok(if coord.is_zero() {
            GraphPoint::Vertex(e.tail)
        } else if coord == e.length {
            GraphPoint::Vertex(e.head)
        } else {
            GraphPoint::Edge { edge, coord }
        })
    }

    pub fn vertex(g: &Graph, v: usize) -> Result<GraphPoint> {
        if v < g.vertex_count() {
            Ok(GraphPoint::Vertex(v))
        } else {
            Err(Error::domain(format!("vertex index {v} out of range")))
        }
    }

    pub fn check_on(&self, g: &Graph) -> Result<()> {
        match self {
            GraphPoint::Vertex(v) if *v < g.vertex_count() => Ok(()),
            GraphPoint::Edge { edge, coord } if *edge < g.edge_count() => {
                let len = &g.edge(*edge).length;
                if coord.is_positive() && coord < len {
                    Ok(())
                } else {
                    Err(Error::domain(format!("non-canonical coordinate {} on edge {edge}", fmt_q(coord))))
                }
            }
            _ => Err(Error::domain(format!("point {self} is not on the graph"))),
        }
    }

    /// All raw representations of the point (one per incident edge end).
    pub fn raw_reps(&self, g: &Graph) -> Vec<RawPoint> {
        match self {
            GraphPoint::Vertex(v) => g.incidences(*v).into_iter().map(|(edge, coord)| RawPoint { edge, coord }).collect(),
            GraphPoint::Edge { edge, coord } => vec![RawPoint { edge: *edge, coord: coord.clone() }],
        }
    }

    /// `(vertex, distance)` pairs through which a path must leave the point.
    fn exits(&self, g: &Graph) -> Vec<(usize, Q)> {
        match self {
            GraphPoint::Vertex(v) => vec![(*v, Q::zero())],
            GraphPoint::Edge { edge, coord } => {
                let e = g.edge(*edge);
                vec![(e.tail, coord.clone()), (e.head, &e.length - coord)]
            }
        }
    }

    pub fn display(&self, g: &Graph) -> String {
        match self {
            GraphPoint::Vertex(v) => format!("v:{}", g.vertex_name(*v)),
            GraphPoint::Edge { edge, coord } => format!("{}:{}", g.edge(*edge).name, fmt_q(coord)),
        }
    }
}

impl fmt::Display for GraphPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphPoint::Vertex(v) => write!(f, "v{v}"),
            GraphPoint::Edge { edge, coord } => write!(f, "e{edge}@{}", fmt_q(coord)),
        }
    }
}

impl RawPoint {
    pub fn canonical(&self, g: &Graph) -> GraphPoint {
        GraphPoint::on_edge(g, self.edge, self.coord.clone()).expect("raw point within its edge")
    }
}

/// Length of a shortest path between two points.
pub fn point_distance(g: &Graph, p: &GraphPoint, q: &GraphPoint) -> Result<Q> {
    p.check_on(g)?;
    q.check_on(g)?;
    Ok(distance_unchecked(g, p, q))
}

pub(crate) fn distance_unchecked(g: &Graph, p: &GraphPoint, q: &GraphPoint) -> Q {
    let mut best: Option<Q> = None;
    let mut offer = |d: Q| {
        if best.as_ref().is_none_or(|b| d < *b) {
            best = Some(d);
        }
    };
    if let (GraphPoint::Edge { edge: e1, coord: c1 }, GraphPoint::Edge { edge: e2, coord: c2 }) = (p, q) {
        if e1 == e2 {
            offer((c1 - c2).abs());
        }
    }
    for (u, du) in p.exits(g) {
        for (v, dv) in q.exits(g) {
            if let Some(d) = g.vertex_distance(u, v) {
                offer(&du + d + &dv);
            }
        }
    }
    best.unwrap_or_else(|| panic!("points {p} and {q} lie in different components"))
}

/// A shortest path from `p` to `q` as a list of legs; empty when `p == q`.
pub fn geodesic(g: &Graph, p: &GraphPoint, q: &GraphPoint) -> Result<Vec<Leg>> {
    p.check_on(g)?;
    q.check_on(g)?;
    if p == q {
        return Ok(Vec::new());
    }
    let target = distance_unchecked(g, p, q);
    if let (GraphPoint::Edge { edge: e1, coord: c1 }, GraphPoint::Edge { edge: e2, coord: c2 }) = (p, q) {
        if e1 == e2 && (c1 - c2).abs() == target {
            return Ok(vec![Leg { edge: *e1, from: c1.clone(), to: c2.clone() }]);
        }
    }
    let exit_legs = |pt: &GraphPoint| -> Vec<(usize, Q, Option<Leg>)> {
        match pt {
            GraphPoint::Vertex(v) => vec![(*v, Q::zero(), None)],
            GraphPoint::Edge { edge, coord } => {
                let e = g.edge(*edge);
                vec![
                    (e.tail, coord.clone(), Some(Leg { edge: *edge, from: coord.clone(), to: Q::zero() })),
                    (e.head, &e.length - coord, Some(Leg { edge: *edge, from: coord.clone(), to: e.length.clone() })),
                ]
            }
        }
    };
    for (u, du, lu) in exit_legs(p) {
        for (v, dv, lv) in exit_legs(q) {
            let Some(d) = g.vertex_distance(u, v) else { continue };
            if &du + d + &dv != target {
                continue;
            }
            let mut legs = Vec::new();
            legs.extend(lu);
            for (edge, fwd) in g.vertex_path(u, v).expect("connected") {
                let e = g.edge(edge);
                let (a, b) = if fwd { (Q::zero(), e.length.clone()) } else { (e.length.clone(), Q::zero()) };
                legs.push(Leg { edge, from: a, to: b });
            }
            legs.extend(lv.map(|l| l.reversed()));
            return Ok(legs);
        }
    }
    Err(Error::domain("points lie in different components"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn interval_endpoints_distance() {
        let g = Graph::interval();
        let p = GraphPoint::on_edge(&g, 0, Q::zero()).unwrap();
        let r = GraphPoint::on_edge(&g, 0, qi(1)).unwrap();
        assert_eq!(point_distance(&g, &p, &r).unwrap(), qi(1));
        assert_eq!(point_distance(&g, &p, &p).unwrap(), Q::zero());
    }

    #[test]
    fn circle_takes_short_way_round() {
        // routes 8/10 directly vs 2/10 through the vertex
        let g = Graph::circle();
        let p = GraphPoint::on_edge(&g, 0, q(1, 10)).unwrap();
        let r = GraphPoint::on_edge(&g, 0, q(9, 10)).unwrap();
        assert_eq!(point_distance(&g, &p, &r).unwrap(), q(1, 5));
    }

    #[test]
    fn canonicalizes_endpoints() {
        let g = Graph::interval();
        assert_eq!(GraphPoint::on_edge(&g, 0, qi(1)).unwrap(), GraphPoint::Vertex(1));
        assert!(GraphPoint::on_edge(&g, 0, qi(2)).is_err());
        let bad = GraphPoint::Edge { edge: 3, coord: q(1, 2) };
        assert!(point_distance(&g, &bad, &GraphPoint::Vertex(0)).is_err());
    }

    #[test]
    fn geodesic_length_matches_distance() {
        let g = Graph::star(3);
        let p = GraphPoint::on_edge(&g, 0, q(1, 3)).unwrap();
        let r = GraphPoint::on_edge(&g, 2, q(3, 4)).unwrap();
        let legs = geodesic(&g, &p, &r).unwrap();
        let total: Q = legs.iter().map(Leg::length).sum();
        assert_eq!(total, point_distance(&g, &p, &r).unwrap());
        assert_eq!(legs.len(), 2);
    }
}
