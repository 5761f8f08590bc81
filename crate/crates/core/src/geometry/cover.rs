use std::sync::Arc;

use num_traits::Zero;

use super::graph::Graph;
use super::plmap::{PLMap, Piece};
use super::point::GraphPoint;
use crate::error::{Error, Result};
use crate::rational::Q;

/// A finite connected piece of the universal covering tree of a base graph,
/// with its edge-isometric projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringTree {
    tree: Arc<Graph>,
    base: Arc<Graph>,
    projection: PLMap,
    /// Tree edge → (base edge, traversed against the base orientation).
    edge_map: Vec<(usize, bool)>,
    vertex_map: Vec<usize>,
}

impl CoveringTree {
    /// The trivial covering of a base that is already a tree.
    pub fn identity(base: Arc<Graph>) -> Result<Self> {
        if !base.is_tree() {
            return Err(Error::domain("identity covering requires a tree base"));
        }
        Ok(CoveringTree {
            tree: base.clone(),
            projection: PLMap::identity(base.clone()),
            edge_map: (0..base.edge_count()).map(|e| (e, false)).collect(),
            vertex_map: (0..base.vertex_count()).collect(),
            base,
        })
    }

    pub fn tree(&self) -> &Arc<Graph> {
        &self.tree
    }

    pub fn base(&self) -> &Arc<Graph> {
        &self.base
    }

    pub fn projection(&self) -> &PLMap {
        &self.projection
    }

    pub fn edge_map(&self) -> &[(usize, bool)] {
        &self.edge_map
    }

    pub fn vertex_map(&self) -> &[usize] {
        &self.vertex_map
    }

    pub fn is_identity(&self) -> bool {
        Arc::ptr_eq(&self.tree, &self.base) || *self.tree == *self.base && self.edge_map.iter().enumerate().all(|(k, &(e, r))| k == e && !r)
    }

    pub fn project(&self, t: &GraphPoint) -> Result<GraphPoint> {
        self.projection.eval(t)
    }

    /// Lifts a map defined on the base to the tree (precomposition with the
    /// projection).
    pub fn lift(&self, f: &PLMap) -> Result<PLMap> {
        super::plmap::pl_compose(f, &self.projection)
    }
}

/// Enumerates reduced edge-walks of length ≤ `radius` from base vertex 0.
/// Bases that are already trees are returned with the identity covering.
pub fn build_covering_tree(w: Arc<Graph>, radius: usize) -> Result<CoveringTree> {
    if !w.is_connected() {
        return Err(Error::domain("covering tree requires a connected base graph"));
    }
    if w.is_tree() {
        return CoveringTree::identity(w);
    }
    if radius == 0 {
        return Err(Error::domain("covering tree radius must be positive"));
    }
    // (base vertex, incoming half-edge, depth)
    let mut nodes: Vec<(usize, Option<(usize, bool)>, usize)> = vec![(0, None, 0)];
    let mut tree_edges: Vec<(usize, usize)> = Vec::new();
    let mut edge_map: Vec<(usize, bool)> = Vec::new();
    let mut k = 0;
    while k < nodes.len() {
        let (u, incoming, depth) = nodes[k];
        if depth < radius {
            for (e, edge) in w.edges().iter().enumerate() {
                for reversed in [false, true] {
                    let (from, to) = if reversed { (edge.head, edge.tail) } else { (edge.tail, edge.head) };
                    if from != u || incoming == Some((e, !reversed)) {
                        continue;
                    }
                    nodes.push((to, Some((e, reversed)), depth + 1));
                    tree_edges.push((k, nodes.len() - 1));
                    edge_map.push((e, reversed));
                }
            }
        }
        k += 1;
    }
    let names = (0..nodes.len()).map(|i| format!("t{i}")).collect();
    let edges = tree_edges
        .iter()
        .zip(&edge_map)
        .enumerate()
        .map(|(i, (&(a, b), &(e, _)))| (format!("d{i}"), format!("t{a}"), format!("t{b}"), w.edge(e).length.clone()))
        .collect();
    let tree = Arc::new(Graph::new(names, edges)?);
    let pieces = edge_map
        .iter()
        .map(|&(e, reversed)| {
            let len = w.edge(e).length.clone();
            let (x0, x1) = if reversed { (len.clone(), Q::zero()) } else { (Q::zero(), len.clone()) };
            vec![Piece { t0: Q::zero(), t1: len, target: e, x0, x1 }]
        })
        .collect();
    let projection = PLMap::new(tree.clone(), w.clone(), pieces)?;
    for e in 0..w.edge_count() {
        if !edge_map.iter().any(|&(b, _)| b == e) {
            return Err(Error::domain(format!("covering tree of radius {radius} misses base edge {}", w.edge(e).name)));
        }
    }
    Ok(CoveringTree { tree, base: w, projection, edge_map, vertex_map: nodes.iter().map(|n| n.0).collect() })
}

/// All tree points over a base point.
pub fn fiber(ct: &CoveringTree, w_point: &GraphPoint) -> Result<Vec<GraphPoint>> {
    w_point.check_on(&ct.base)?;
    Ok(match w_point {
        GraphPoint::Vertex(v) => (0..ct.vertex_map.len()).filter(|&t| ct.vertex_map[t] == *v).map(GraphPoint::Vertex).collect(),
        GraphPoint::Edge { edge, coord } => ct
            .edge_map
            .iter()
            .enumerate()
            .filter(|(_, &(e, _))| e == *edge)
            .map(|(k, &(_, rev))| {
                let c = if rev { &ct.tree.edge(k).length - coord } else { coord.clone() };
                GraphPoint::Edge { edge: k, coord: c }
            })
            .collect(),
    })
}
