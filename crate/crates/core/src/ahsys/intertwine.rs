use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::blocks::{Block, Element};
use crate::diagmaps::{apply_at, apply_diagform, diagform_distance_bound, DiagonalForm};
use crate::error::{Error, Result};
use crate::geometry::GraphPoint;
use crate::rational::{fmt_q, half, max_q, sqrt_lower, two_pow_neg, Q};

/// Two systems over the same blocks `A_1, …, A_N`, with finite generator
/// sets `ℱ_n ⊂ A_n`.
#[derive(Debug, Clone)]
pub struct FiniteSystemPair {
    pub blocks: Vec<Arc<Block>>,
    pub phi: Vec<DiagonalForm>,
    pub psi: Vec<DiagonalForm>,
    pub gens: Vec<Vec<Element>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntertwiningVerdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl IntertwiningVerdict {
    pub fn name(self) -> &'static str {
        match self {
            IntertwiningVerdict::Satisfied => "satisfied",
            IntertwiningVerdict::Violated => "violated",
            IntertwiningVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelBound {
    pub n: usize,
    /// Certified upper bound on `max_{a ∈ ℱ_n} ‖φ_n(a) − ψ_n(a)‖`.
    pub upper: Q,
    /// A certified lower bound, computed only when the upper bound does not
    /// settle the comparison.
    pub lower: Option<Q>,
    pub threshold: Q,
    pub verdict: IntertwiningVerdict,
    /// `φ_{n-1}(ℱ_{n-1}) ∪ ψ_{n-1}(ℱ_{n-1}) ⊆ ℱ_n`; `None` when an image
    /// does not descend to the target base.
    pub containment: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntertwiningReport {
    pub levels: Vec<LevelBound>,
}

impl IntertwiningReport {
    pub fn verdict(&self) -> IntertwiningVerdict {
        let bounds = self.levels.iter().map(|l| l.verdict);
        let contained = self.levels.iter().map(|l| l.containment);
        if bounds.clone().any(|v| v == IntertwiningVerdict::Violated) || contained.clone().any(|c| c == Some(false)) {
            IntertwiningVerdict::Violated
        } else if bounds.clone().all(|v| v == IntertwiningVerdict::Satisfied) && contained.clone().all(|c| c == Some(true)) {
            IntertwiningVerdict::Satisfied
        } else {
            IntertwiningVerdict::Inconclusive
        }
    }

    pub fn display(&self) -> String {
        let mut out = String::new();
        for l in &self.levels {
            out.push_str(&format!(
                "level {}: bound {} vs 2^-{} = {}: {}{}\n",
                l.n,
                fmt_q(&l.upper),
                l.n,
                fmt_q(&l.threshold),
                l.verdict.name(),
                match l.containment {
                    Some(true) => "",
                    Some(false) => " (generator containment fails)",
                    None => " (generator containment undecided)",
                }
            ));
        }
        out
    }
}

impl FiniteSystemPair {
    pub fn new(blocks: Vec<Arc<Block>>, phi: Vec<DiagonalForm>, psi: Vec<DiagonalForm>, gens: Vec<Vec<Element>>) -> Result<Self> {
        if blocks.len() < 2 || phi.len() + 1 != blocks.len() || psi.len() != phi.len() || gens.len() != blocks.len() {
            return Err(Error::domain("pair needs N blocks, N-1 steps per system and N generator sets"));
        }
        for (k, (x, y)) in phi.iter().zip(&psi).enumerate() {
            for f in [x, y] {
                if **f.source() != *blocks[k] || **f.target() != *blocks[k + 1] {
                    return Err(Error::domain(format!("step {} does not go from block {} to block {}", k + 1, k + 1, k + 2)));
                }
            }
            for (i, (a, b)) in x.targets().iter().zip(y.targets()).enumerate() {
                let sa: Vec<usize> = a.entries.iter().map(|e| e.source).collect();
                let sb: Vec<usize> = b.entries.iter().map(|e| e.source).collect();
                if a.tree != b.tree || sa != sb {
                    return Err(Error::domain(format!("step {}, target {i}: the two systems differ in shape", k + 1)));
                }
            }
        }
        for (k, g) in gens.iter().enumerate() {
            if g.iter().any(|a| **a.block() != *blocks[k]) {
                return Err(Error::domain(format!("generator set {} has elements of another block", k + 1)));
            }
        }
        Ok(FiniteSystemPair { blocks, phi, psi, gens })
    }

    /// Adds `φ_{n-1}(ℱ_{n-1}) ∪ ψ_{n-1}(ℱ_{n-1})` to every `ℱ_n`, in order,
    /// so that the containment hypothesis holds.
    pub fn close_generators(&mut self) -> Result<()> {
        for n in 1..self.gens.len() {
            let mut add = Vec::new();
            for a in &self.gens[n - 1] {
                for f in [&self.phi[n - 1], &self.psi[n - 1]] {
                    let b = apply_diagform(f, a)?;
                    if !self.gens[n].contains(&b) && !add.contains(&b) {
                        add.push(b);
                    }
                }
            }
            self.gens[n].extend(add);
        }
        Ok(())
    }
}

fn sample_points(phi: &DiagonalForm, psi: &DiagonalForm, i: usize) -> Vec<GraphPoint> {
    let tree = phi.tree(i).tree();
    let mut out: Vec<GraphPoint> = (0..tree.vertex_count()).map(GraphPoint::Vertex).collect();
    for k in 0..tree.edge_count() {
        let mut ts: Vec<Q> = Vec::new();
        for f in [phi, psi] {
            for e in f.entries(i) {
                for p in e.map.pieces(k) {
                    ts.push(p.t0.clone());
                    ts.push(p.t1.clone());
                }
            }
        }
        ts.sort();
        ts.dedup();
        let mids: Vec<Q> = ts.windows(2).map(|w| half(&(&w[0] + &w[1]))).collect();
        let len = &tree.edge(k).length;
        for t in ts.into_iter().chain(mids) {
            if t.is_positive() && t < *len {
                out.push(GraphPoint::Edge { edge: k, coord: t });
            }
        }
    }
    out
}

fn lower_bound(phi: &DiagonalForm, psi: &DiagonalForm, gens: &[Element]) -> Result<Q> {
    let mut best = Q::zero();
    for i in 0..phi.targets().len() {
        let pts = sample_points(phi, psi, i);
        for a in gens {
            for t in &pts {
                let d = &apply_at(phi, a, i, t)? - &apply_at(psi, a, i, t)?;
                // the operator norm dominates every row and column norm
                best = max_q(&best, &sqrt_lower(&d.max_line_norm_sq()));
            }
        }
    }
    Ok(best)
}

pub fn check_approx_intertwining(pair: &FiniteSystemPair, depth: usize) -> Result<IntertwiningReport> {
    if depth == 0 || depth > pair.phi.len() {
        return Err(Error::domain(format!("depth must be between 1 and {}", pair.phi.len())));
    }
    let mut levels = Vec::new();
    for n in 1..=depth {
        let (phi, psi, gens) = (&pair.phi[n - 1], &pair.psi[n - 1], &pair.gens[n - 1]);
        let threshold = two_pow_neg(n as u32);
        let upper = diagform_distance_bound(phi, psi, gens)?;
        let (lower, verdict) = if upper < threshold {
            (None, IntertwiningVerdict::Satisfied)
        } else {
            let lo = lower_bound(phi, psi, gens)?;
            let v = if lo >= threshold { IntertwiningVerdict::Violated } else { IntertwiningVerdict::Inconclusive };
            (Some(lo), v)
        };
        let containment = if n == 1 {
            Some(true)
        } else {
            let mut ok = Some(true);
            'outer: for a in &pair.gens[n - 2] {
                for f in [&pair.phi[n - 2], &pair.psi[n - 2]] {
                    match apply_diagform(f, a) {
                        Ok(b) => {
                            if !gens.contains(&b) {
                                ok = Some(false);
                                break 'outer;
                            }
                        }
                        Err(_) => ok = None,
                    }
                }
            }
            ok
        };
        levels.push(LevelBound { n, upper, lower, threshold, verdict, containment });
    }
    Ok(IntertwiningReport { levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagmaps::{Entry, TargetData};
    use crate::geometry::{CoveringTree, Graph, PLMap};
    use crate::matrix::Mat;
    use crate::rational::{q, qi};

    fn block() -> Arc<Block> {
        Arc::new(Block::new(vec![(Arc::new(Graph::interval()), 1)]).unwrap())
    }

    fn scalar(b: &Arc<Block>, ks: &[(Q, Q)]) -> Element {
        let ks = ks.iter().map(|(t, v)| (t.clone(), Mat::scalar(1, v.clone()))).collect();
        Element::new(b.clone(), vec![vec![ks]]).unwrap()
    }

    fn step(b: &Arc<Block>, end: Q) -> DiagonalForm {
        let g = b.base(0).clone();
        let map = PLMap::from_knots(g.clone(), g.clone(), vec![vec![(Q::zero(), 0, Q::zero()), (qi(1), 0, end)]]).unwrap();
        let td = TargetData { tree: CoveringTree::identity(g).unwrap(), entries: vec![Entry { source: 0, map }] };
        DiagonalForm::new(b.clone(), b.clone(), vec![td]).unwrap()
    }

    fn pair(ends: [Q; 2], gen: &[(Q, Q)]) -> FiniteSystemPair {
        let b = block();
        let id = step(&b, qi(1));
        let gens = vec![vec![scalar(&b, gen)]; 3];
        FiniteSystemPair::new(vec![b.clone(); 3], vec![id.clone(), id], vec![step(&b, ends[0].clone()), step(&b, ends[1].clone())], gens)
            .unwrap()
    }

    fn t() -> Vec<(Q, Q)> {
        vec![(Q::zero(), Q::zero()), (qi(1), qi(1))]
    }

    #[test]
    fn identical_systems() {
        let mut p = pair([qi(1), qi(1)], &t());
        p.close_generators().unwrap();
        let rep = check_approx_intertwining(&p, 2).unwrap();
        assert!(rep.levels.iter().all(|l| l.upper.is_zero() && l.containment == Some(true)));
        assert_eq!(rep.verdict(), IntertwiningVerdict::Satisfied);
    }

    #[test]
    fn lipschitz_slack_is_inconclusive() {
        // a = min(t, 1/10) moves by at most 1/20 under t ↦ t/2, but the
        // certified bound is Lip(a) · 1/2
        let a = [(Q::zero(), Q::zero()), (q(1, 10), q(1, 10)), (qi(1), q(1, 10))];
        let rep = check_approx_intertwining(&pair([q(1, 2), qi(1)], &a), 1).unwrap();
        let l = &rep.levels[0];
        assert_eq!(l.upper, q(1, 2));
        assert!(l.lower.clone().unwrap() <= q(1, 20));
        assert_eq!(l.verdict, IntertwiningVerdict::Inconclusive);
    }

    #[test]
    fn missing_images_break_containment() {
        let p = pair([q(1, 2), qi(1)], &t());
        let rep = check_approx_intertwining(&p, 2).unwrap();
        assert_eq!(rep.levels[1].containment, Some(false));
        assert_eq!(rep.verdict(), IntertwiningVerdict::Violated);
        assert!(check_approx_intertwining(&p, 3).is_err());
        assert!(check_approx_intertwining(&p, 0).is_err());
    }
}
