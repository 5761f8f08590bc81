use std::collections::BTreeSet;

use crate::diagmaps::{source_images, DiagonalForm};
use crate::error::{Error, Result};
use crate::geometry::{GapArc, Graph, GraphPoint};
use crate::rational::Q;

/// The uncovered part of one source base, as disjoint arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapDecomposition {
    pub source: usize,
    pub gaps: Vec<GapArc>,
}

impl GapDecomposition {
    pub fn total_count(&self) -> usize {
        self.gaps.len()
    }

    pub fn longest(&self) -> Option<Q> {
        self.gaps.iter().map(GapArc::length).max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChainClass {
    /// A line whose internal junctions are not vertices.
    LineNonVertex,
    /// A line with a junction at a vertex of the base.
    LineVertexSplit,
    /// Arms meeting at a vertex that lies inside one of the gaps.
    AsteriskVertexInGap,
    /// Three or more gaps meeting at a vertex covered by an image.
    AsteriskVertexCovered,
}

impl ChainClass {
    pub fn name(self) -> &'static str {
        match self {
            ChainClass::LineNonVertex => "line(non-vertex)",
            ChainClass::LineVertexSplit => "line(vertex split)",
            ChainClass::AsteriskVertexInGap => "asterisk(vertex in gap)",
            ChainClass::AsteriskVertexCovered => "asterisk(vertex covered)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    /// Indices into the decomposition's gap list, in traversal order.
    pub gaps: Vec<usize>,
    pub class: ChainClass,
    /// The points where members touch (shared endpoints or centers).
    pub junctions: Vec<GraphPoint>,
    /// Number of connected components of the complement among the members
    /// (arcs split at an uncovered vertex belong to one component).
    pub components: usize,
    /// Junctions covered only as isolated points of the image, i.e. by
    /// eigenvalue functions that are constant there. At most `Σ m_i` for a
    /// genuine δ-approximation.
    pub isolated_points: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStructure {
    pub chains: Vec<Chain>,
}

/// Exact complement of the images landing in source summand `j`.
pub fn gap_decomposition(phi: &DiagonalForm, j: usize) -> Result<GapDecomposition> {
    if j >= phi.source().len() {
        return Err(Error::domain(format!("source summand {j} out of range")));
    }
    let img = source_images(phi).swap_remove(j);
    let gaps = if img.is_whole() { Vec::new() } else { img.complement_arcs().map_err(|e| Error::invalid(format!("source {j}: {e}")))? };
    Ok(GapDecomposition { source: j, gaps })
}

/// Closure points of an arc that can be shared with another arc.
fn touch_points(arc: &GapArc, g: &Graph) -> Vec<GraphPoint> {
    let mut pts = vec![arc.start.clone(), arc.end.clone()];
    pts.extend(arc.interior_vertices(g).into_iter().map(GraphPoint::Vertex));
    pts
}

/// Groups gaps whose closures meet, and classifies each group.
pub fn maximal_chains(gd: &GapDecomposition, g: &Graph) -> ChainStructure {
    let n = gd.gaps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let touches: Vec<Vec<GraphPoint>> = gd.gaps.iter().map(|a| touch_points(a, g)).collect();
    for a in 0..n {
        for b in a + 1..n {
            if touches[a].iter().any(|p| touches[b].contains(p)) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for a in 0..n {
        let r = find(&mut parent, a);
        match roots.iter().position(|&x| x == r) {
            Some(k) => groups[k].push(a),
            None => {
                roots.push(r);
                groups.push(vec![a]);
            }
        }
    }
    let chains = groups.into_iter().map(|members| classify(gd, g, members)).collect();
    ChainStructure { chains }
}

fn classify(gd: &GapDecomposition, g: &Graph, members: Vec<usize>) -> Chain {
    let mut junctions = BTreeSet::new();
    let mut in_gap_center = false;
    let mut covered_star = false;
    let mut vertex_junction = false;
    for &a in &members {
        let arc = &gd.gaps[a];
        let interior: Vec<GraphPoint> = arc.interior_vertices(g).into_iter().map(GraphPoint::Vertex).collect();
        for &b in &members {
            if a == b {
                continue;
            }
            let other = &gd.gaps[b];
            for p in other.endpoints() {
                if interior.contains(p) {
                    in_gap_center = true;
                    junctions.insert(p.clone());
                }
            }
        }
        for p in arc.endpoints() {
            let sharing = members.iter().filter(|&&b| gd.gaps[b].endpoints().contains(&p)).count();
            if sharing >= 2 {
                junctions.insert(p.clone());
                if matches!(p, GraphPoint::Vertex(_)) {
                    vertex_junction = true;
                }
                if sharing >= 3 {
                    covered_star = true;
                }
            }
        }
    }
    let class = if in_gap_center {
        ChainClass::AsteriskVertexInGap
    } else if covered_star {
        ChainClass::AsteriskVertexCovered
    } else if vertex_junction {
        ChainClass::LineVertexSplit
    } else {
        ChainClass::LineNonVertex
    };
    let components = count_components(gd, g, &members);
    let isolated_points = junctions.iter().filter(|p| is_isolated_point(gd, g, p)).count();
    Chain { gaps: order_members(gd, members), class, junctions: junctions.into_iter().collect(), components, isolated_points }
}

fn is_isolated_point(gd: &GapDecomposition, g: &Graph, p: &GraphPoint) -> bool {
    let directions = match p {
        GraphPoint::Vertex(v) => g.degree(*v),
        GraphPoint::Edge { .. } => 2,
    };
    let mut hits = 0;
    for a in &gd.gaps {
        if a.start_in_image && a.start == *p {
            hits += 1;
        }
        if a.end_in_image && a.end == *p {
            hits += 1;
        }
    }
    hits == directions
}

fn count_components(gd: &GapDecomposition, g: &Graph, members: &[usize]) -> usize {
    let uncovered = |a: usize| -> Vec<GraphPoint> {
        let arc = &gd.gaps[a];
        let mut out: Vec<GraphPoint> = arc.interior_vertices(g).into_iter().map(GraphPoint::Vertex).collect();
        if !arc.start_in_image {
            out.push(arc.start.clone());
        }
        if !arc.end_in_image {
            out.push(arc.end.clone());
        }
        out
    };
    let pts: Vec<Vec<GraphPoint>> = members.iter().map(|&a| uncovered(a)).collect();
    let mut label: Vec<usize> = (0..members.len()).collect();
    loop {
        let mut changed = false;
        for x in 0..members.len() {
            for y in 0..members.len() {
                if label[y] < label[x] && pts[x].iter().any(|p| pts[y].contains(p)) {
                    label[x] = label[y];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut l = label;
    l.sort();
    l.dedup();
    l.len()
}

/// Orders a line chain from one end; other shapes keep index order after the
/// member touching the fewest others.
fn order_members(gd: &GapDecomposition, members: Vec<usize>) -> Vec<usize> {
    if members.len() <= 2 {
        return members;
    }
    let shares = |a: usize, b: usize| gd.gaps[a].endpoints().iter().any(|p| gd.gaps[b].endpoints().contains(p));
    let degree = |a: usize| members.iter().filter(|&&b| b != a && shares(a, b)).count();
    let start = *members.iter().min_by_key(|&&a| (degree(a), a)).expect("nonempty");
    let mut order = vec![start];
    while order.len() < members.len() {
        let last = *order.last().expect("nonempty");
        let next = members.iter().copied().filter(|b| !order.contains(b)).min_by_key(|&b| (!shares(last, b), b)).expect("remaining member");
        order.push(next);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ClosedSubset, GraphPoint};
    use crate::rational::{q, qi};
    use num_traits::Zero;
    use std::sync::Arc;

    fn decomposition(g: &Arc<Graph>, ivs: Vec<(usize, Q, Q)>, vs: Vec<usize>) -> GapDecomposition {
        let s = ClosedSubset::from_intervals(g.clone(), ivs, vs);
        GapDecomposition { source: 0, gaps: s.complement_arcs().unwrap() }
    }

    #[test]
    fn separated_gaps_are_singleton_lines() {
        let g = Arc::new(Graph::interval());
        let gd = decomposition(&g, vec![(0, Q::zero(), q(1, 5)), (0, q(2, 5), q(3, 5)), (0, q(4, 5), qi(1))], vec![]);
        let cs = maximal_chains(&gd, &g);
        assert_eq!(cs.chains.len(), 2);
        assert!(cs.chains.iter().all(|c| c.class == ChainClass::LineNonVertex && c.gaps.len() == 1));
    }

    #[test]
    fn adjacent_gaps_form_one_line() {
        let g = Arc::new(Graph::interval());
        let gd = decomposition(&g, vec![(0, Q::zero(), q(1, 3)), (0, q(1, 2), q(1, 2)), (0, q(2, 3), qi(1))], vec![]);
        let cs = maximal_chains(&gd, &g);
        assert_eq!(cs.chains.len(), 1);
        assert_eq!(cs.chains[0].gaps.len(), 2);
        assert_eq!(cs.chains[0].class, ChainClass::LineNonVertex);
        assert_eq!(cs.chains[0].junctions, vec![GraphPoint::Edge { edge: 0, coord: q(1, 2) }]);
    }

    #[test]
    fn covered_star_center() {
        let g = Arc::new(Graph::star(3));
        let gd = decomposition(&g, (0..3).map(|e| (e, q(1, 2), qi(1))).collect(), vec![0]);
        let cs = maximal_chains(&gd, &g);
        assert_eq!(cs.chains.len(), 1);
        assert_eq!(cs.chains[0].class, ChainClass::AsteriskVertexCovered);
        assert_eq!(cs.chains[0].gaps.len(), 3);
    }

    #[test]
    fn uncovered_star_center() {
        let g = Arc::new(Graph::star(3));
        let gd = decomposition(&g, (0..3).map(|e| (e, q(1, 2), qi(1))).collect(), vec![]);
        let cs = maximal_chains(&gd, &g);
        assert_eq!(cs.chains.len(), 1);
        assert_eq!(cs.chains[0].class, ChainClass::AsteriskVertexInGap);
    }

    #[test]
    fn vertex_junction_on_path() {
        let g = Arc::new(Graph::path(2));
        let gd = decomposition(&g, vec![(0, Q::zero(), q(3, 4)), (1, q(1, 4), qi(1))], vec![1]);
        let cs = maximal_chains(&gd, &g);
        assert_eq!(cs.chains.len(), 1);
        assert_eq!(cs.chains[0].class, ChainClass::LineVertexSplit);
    }
}
