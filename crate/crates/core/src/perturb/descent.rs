use std::collections::BTreeMap;

use num_traits::Zero;

use super::graft::transport;
use crate::diagmaps::{check_unital_injective, is_maximally_homogeneous, DiagonalForm};
use crate::error::Result;
use crate::geometry::{pl_sup_distance, GraphPoint};
use crate::rational::{half, max_q, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentFailure {
    pub target: usize,
    /// The two tree edges over a common base edge.
    pub edges: (usize, usize),
    /// A tree point on the first edge where the spectra differ.
    pub at: GraphPoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentReport {
    pub holds: bool,
    pub failures: Vec<DescentFailure>,
}

/// Checks that the spectrum over each base point does not depend on the lift.
///
/// For every pair of tree edges over the same base edge, both edges are cut at
/// the union of their (transported) breakpoints. On each cut segment every
/// entry is affine, so comparing the multisets of (source, value at start,
/// value at midpoint, value at end) decides equality of spectra on the whole
/// segment exactly.
pub fn verify_descent(phi: &DiagonalForm) -> DescentReport {
    let mut failures = Vec::new();
    for (i, td) in phi.targets().iter().enumerate() {
        let em = td.tree.edge_map();
        let tree = td.tree.tree();
        for k in 0..em.len() {
            for k2 in k + 1..em.len() {
                if em[k].0 != em[k2].0 {
                    continue;
                }
                let mut cuts: Vec<Q> = Vec::new();
                for e in &td.entries {
                    cuts.extend(e.map.breakpoints(k));
                    cuts.extend(e.map.breakpoints(k2).iter().map(|t| transport(phi, i, k2, k, t)));
                }
                cuts.sort();
                cuts.dedup();
                for w in cuts.windows(2) {
                    let pts = [w[0].clone(), half(&(&w[0] + &w[1])), w[1].clone()];
                    let sig = |edge: usize, from: usize| {
                        let mut v: Vec<(usize, Vec<GraphPoint>)> = td
                            .entries
                            .iter()
                            .map(|e| {
                                let vals = pts
                                    .iter()
                                    .map(|t| {
                                        let t2 = transport(phi, i, from, edge, t);
                                        e.map.eval_raw(edge, &t2).canonical(e.map.codomain())
                                    })
                                    .collect();
                                (e.source, vals)
                            })
                            .collect();
                        v.sort();
                        v
                    };
                    if sig(k, k) != sig(k2, k) {
                        let at = crate::geometry::RawPoint { edge: k, coord: pts[1].clone() }.canonical(tree);
                        failures.push(DescentFailure { target: i, edges: (k, k2), at });
                        break;
                    }
                }
            }
        }
    }
    DescentReport { holds: failures.is_empty(), failures }
}

/// The four output properties of the perturbation, each decided exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyReport {
    /// (a) the images cover every source base.
    pub covers: bool,
    /// (b) every entry moved by at most `bound`, and `bound ≤ δ + ρ`.
    pub bound_ok: bool,
    pub max_distance: Q,
    /// (c) maximal homogeneity.
    pub mh: bool,
    /// (d) descent.
    pub descent: bool,
    pub unital: bool,
}

impl PropertyReport {
    pub fn all(&self) -> bool {
        self.covers && self.bound_ok && self.mh && self.descent && self.unital
    }
}

pub fn verify_properties(orig: &DiagonalForm, out: &DiagonalForm, bound: &Q, delta: &Q, rho: &Q) -> Result<PropertyReport> {
    let ui = check_unital_injective(out);
    let mut max_distance = Q::zero();
    for (a, b) in orig.targets().iter().zip(out.targets()) {
        for (x, y) in a.entries.iter().zip(&b.entries) {
            max_distance = max_q(&max_distance, &pl_sup_distance(&x.map, &y.map)?.value);
        }
    }
    Ok(PropertyReport {
        covers: ui.injective,
        bound_ok: max_distance <= *bound && *bound <= delta + rho,
        max_distance,
        mh: is_maximally_homogeneous(out).holds,
        descent: verify_descent(out).holds,
        unital: ui.unital,
    })
}

/// Per-entry sup-distances, keyed by `(target, entry)`.
pub fn entry_distances(orig: &DiagonalForm, out: &DiagonalForm) -> Result<BTreeMap<(usize, usize), Q>> {
    let mut m = BTreeMap::new();
    for (i, (a, b)) in orig.targets().iter().zip(out.targets()).enumerate() {
        for (s, (x, y)) in a.entries.iter().zip(&b.entries).enumerate() {
            m.insert((i, s), pl_sup_distance(&x.map, &y.map)?.value);
        }
    }
    Ok(m)
}
