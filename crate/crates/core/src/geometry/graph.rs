use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, qi, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    pub tail: usize,
    pub head: usize,
    pub length: Q,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }

    /// Coordinates on this edge that represent vertex `v` (two for a loop).
    pub fn coords_of(&self, v: usize) -> Vec<Q> {
        let mut out = Vec::new();
        if self.tail == v {
            out.push(Q::zero());
        }
        if self.head == v {
            out.push(self.length.clone());
        }
        out
    }
}

/// A finite 1-dimensional CW complex with a path metric.
///
/// Vertices and edges are addressed by index; names are kept for I/O.
/// Loops and multi-edges are allowed. Every vertex must lie on some edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_names: Vec<String>,
    edges: Vec<Edge>,
    /// `dist[u][v]`, `None` when disconnected.
    dist: Vec<Vec<Option<Q>>>,
}

impl Graph {
    pub fn new(vertex_names: Vec<String>, edges: Vec<(String, String, String, Q)>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, v) in vertex_names.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::domain(format!("duplicate vertex id {v:?}")));
            }
        }
        let mut seen = BTreeMap::new();
        let mut out = Vec::with_capacity(edges.len());
        for (name, tail, head, length) in edges {
            if seen.insert(name.clone(), ()).is_some() {
                return Err(Error::domain(format!("duplicate edge id {name:?}")));
            }
            if !length.is_positive() {
                return Err(Error::domain(format!("edge {name:?} has non-positive length")));
            }
            let lookup =
                |v: &String| index.get(v).copied().ok_or_else(|| Error::domain(format!("edge {name:?} references unknown vertex {v:?}")));
            let (tail, head) = (lookup(&tail)?, lookup(&head)?);
            out.push(Edge { name, tail, head, length });
        }
        if out.is_empty() {
            return Err(Error::domain("graph has no edges"));
        }
        for (v, name) in vertex_names.iter().enumerate() {
            if !out.iter().any(|e| e.tail == v || e.head == v) {
                return Err(Error::domain(format!("vertex {name:?} lies on no edge")));
            }
        }
        let dist = all_pairs(vertex_names.len(), &out);
        Ok(Graph { vertex_names, edges: out, dist })
    }

    /// Builds a graph with unit-length edges from `(tail, head)` index pairs;
    /// vertices are named `v0, v1, ...` and edges `e0, e1, ...`.
    pub fn from_pairs(n_vertices: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let names = (0..n_vertices).map(|i| format!("v{i}")).collect();
        let edges = pairs.iter().enumerate().map(|(k, &(a, b))| (format!("e{k}"), format!("v{a}"), format!("v{b}"), qi(1))).collect();
        Graph::new(names, edges)
    }

    /// The unit interval: one edge `e0` from `v0` to `v1`.
    pub fn interval() -> Self {
        Graph::from_pairs(2, &[(0, 1)]).expect("static graph")
    }

    /// The circle: a single unit loop at `v0`.
    pub fn circle() -> Self {
        Graph::from_pairs(1, &[(0, 0)]).expect("static graph")
    }

    /// A star with `arms` unit edges from the center `v0` to leaves.
    pub fn star(arms: usize) -> Self {
        let pairs: Vec<_> = (1..=arms).map(|k| (0, k)).collect();
        Graph::from_pairs(arms + 1, &pairs).expect("static graph")
    }

    /// Two unit loops at a single vertex.
    pub fn figure_eight() -> Self {
        Graph::from_pairs(1, &[(0, 0), (0, 0)]).expect("static graph")
    }

    /// A path of `n` unit edges.
    pub fn path(n: usize) -> Self {
        let pairs: Vec<_> = (0..n).map(|k| (k, k + 1)).collect();
        Graph::from_pairs(n + 1, &pairs).expect("static graph")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertex_names[v]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertex_names.iter().position(|v| v == name)
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    /// Edges incident to `v`, with the coordinate of `v` on each (loops twice).
    pub fn incidences(&self, v: usize) -> Vec<(usize, Q)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            for c in e.coords_of(v) {
                out.push((i, c));
            }
        }
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incidences(v).len()
    }

    pub fn vertex_distance(&self, u: usize, v: usize) -> Option<&Q> {
        self.dist[u][v].as_ref()
    }

    pub fn is_connected(&self) -> bool {
        self.dist[0].iter().all(Option::is_some)
    }

    /// True when the graph is connected and has no cycles (including loops).
    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.edges.len() + 1 == self.vertex_names.len()
    }

    pub fn total_length(&self) -> Q {
        self.edges.iter().map(|e| e.length.clone()).sum()
    }

    /// Largest vertex-to-vertex distance plus the longest edge; an upper bound
    /// on the diameter of the metric graph.
    pub fn diameter_bound(&self) -> Q {
        let mut best = Q::zero();
        for row in &self.dist {
            for d in row.iter().flatten() {
                if *d > best {
                    best = d.clone();
                }
            }
        }
        best + self.edges.iter().map(|e| e.length.clone()).max().unwrap_or_else(Q::zero)
    }

    /// Shortest vertex path from `u` to `v` as a list of `(edge, forward)` steps.
    pub fn vertex_path(&self, u: usize, v: usize) -> Option<Vec<(usize, bool)>> {
        self.dist[u][v].as_ref()?;
        let mut path = Vec::new();
        let mut cur = u;
        while cur != v {
            let here = self.dist[cur][v].clone()?;
            let step = self.edges.iter().enumerate().find_map(|(i, e)| {
                let try_step = |from: usize, to: usize, fwd: bool| {
                    (from == cur && self.dist[to][v].as_ref().map(|d| d + &e.length) == Some(here.clone())).then_some((i, fwd, to))
                };
                try_step(e.tail, e.head, true).or_else(|| try_step(e.head, e.tail, false))
            })?;
            path.push((step.0, step.1));
            cur = step.2;
        }
        Some(path)
    }

    /// DOT rendering; vertices and edges in index order.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "graph {} {{", dot_id(name));
        for v in &self.vertex_names {
            let _ = writeln!(s, "  {};", dot_id(v));
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  {} -- {} [label=\"{} ({})\"];",
                dot_id(&self.vertex_names[e.tail]),
                dot_id(&self.vertex_names[e.head]),
                e.name,
                fmt_q(&e.length)
            );
        }
        s.push_str("}\n");
        s
    }
}

pub(crate) fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}

fn all_pairs(n: usize, edges: &[Edge]) -> Vec<Vec<Option<Q>>> {
    let mut d: Vec<Vec<Option<Q>>> = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(Q::zero());
    }
    for e in edges {
        let better = |cur: &Option<Q>| cur.as_ref().is_none_or(|c| e.length < *c);
        if better(&d[e.tail][e.head]) {
            d[e.tail][e.head] = Some(e.length.clone());
            d[e.head][e.tail] = Some(e.length.clone());
        }
    }
    // Floyd–Warshall; rows i and k alias, so index explicitly
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k].clone() else { continue };
            for j in 0..n {
                if let Some(kj) = &d[k][j] {
                    let via = &ik + kj;
                    if d[i][j].as_ref().is_none_or(|c| via < *c) {
                        d[i][j] = Some(via);
                    }
                }
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn standard_graphs() {
        assert!(Graph::interval().is_tree());
        assert!(!Graph::circle().is_tree());
        assert_eq!(Graph::star(3).degree(0), 3);
        assert_eq!(Graph::figure_eight().degree(0), 4);
        assert_eq!(Graph::path(3).vertex_distance(0, 3), Some(&qi(3)));
    }

    #[test]
    fn rejects_bad_graphs() {
        let v = vec!["a".to_string(), "b".to_string()];
        assert!(Graph::new(v.clone(), vec![("e".into(), "a".into(), "c".into(), qi(1))]).is_err());
        assert!(Graph::new(v.clone(), vec![("e".into(), "a".into(), "b".into(), Q::zero())]).is_err());
        let dup = vec![("e".into(), "a".into(), "b".into(), qi(1)), ("e".into(), "b".into(), "a".into(), qi(1))];
        assert!(Graph::new(v, dup).is_err());
    }

    #[test]
    fn disconnected_detected() {
        let g = Graph::from_pairs(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(!g.is_connected());
        assert_eq!(g.vertex_distance(0, 2), None);
    }

    #[test]
    fn vertex_path_follows_shortest_route() {
        let names = vec!["a".into(), "b".into(), "c".into()];
        let g = Graph::new(
            names,
            vec![
                ("ab".into(), "a".into(), "b".into(), q(1, 2)),
                ("bc".into(), "b".into(), "c".into(), q(1, 2)),
                ("ac".into(), "c".into(), "a".into(), qi(2)),
            ],
        )
        .unwrap();
        assert_eq!(g.vertex_path(0, 2).unwrap(), vec![(0, true), (1, true)]);
        assert_eq!(g.vertex_distance(2, 0), Some(&qi(1)));
    }
}
