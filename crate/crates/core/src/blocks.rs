//! Homogeneous building blocks `⊕_j C(Z_j) ⊗ M_{n_j}` and their piecewise-linear
//! matrix-valued elements.

use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::geometry::{Graph, GraphPoint};
use crate::matrix::Mat;
use crate::rational::{max_q, sqrt_upper, Q};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    summands: Vec<(Arc<Graph>, usize)>,
}

impl Block {
    pub fn new(summands: Vec<(Arc<Graph>, usize)>) -> Result<Self> {
        if summands.is_empty() {
            return Err(Error::domain("block needs at least one summand"));
        }
        for (k, (g, n)) in summands.iter().enumerate() {
            if *n == 0 {
                return Err(Error::domain(format!("summand {k} has matrix size 0")));
            }
            if !g.is_connected() {
                return Err(Error::domain(format!("summand {k} has a disconnected base")));
            }
        }
        Ok(Block { summands })
    }

    pub fn summands(&self) -> &[(Arc<Graph>, usize)] {
        &self.summands
    }

    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    pub fn base(&self, j: usize) -> &Arc<Graph> {
        &self.summands[j].0
    }

    pub fn size(&self, j: usize) -> usize {
        self.summands[j].1
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j < self.summands.len() {
            Ok(())
        } else {
            Err(Error::domain(format!("summand index {j} out of range")))
        }
    }
}

/// Knots `(t, value)` along one edge; values are interpolated affinely.
pub type Knots = Vec<(Q, Mat)>;

/// A PL matrix-valued function on every summand of a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    block: Arc<Block>,
    /// `[summand][edge]`.
    knots: Vec<Vec<Knots>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormBounds {
    /// Squared lower bound on the sup operator norm.
    pub lower_sq: Q,
    /// Squared upper bound on the sup operator norm.
    pub upper_sq: Q,
}

impl NormBounds {
    pub fn lower(&self) -> Q {
        crate::rational::sqrt_lower(&self.lower_sq)
    }

    pub fn upper(&self) -> Q {
        sqrt_upper(&self.upper_sq)
    }
}

impl Element {
    pub fn new(block: Arc<Block>, knots: Vec<Vec<Knots>>) -> Result<Self> {
        if knots.len() != block.len() {
            return Err(Error::domain("element does not list every summand"));
        }
        let mut out = Vec::with_capacity(knots.len());
        for (j, per_edge) in knots.into_iter().enumerate() {
            let (g, n) = &block.summands[j];
            if per_edge.len() != g.edge_count() {
                return Err(Error::domain(format!("summand {j}: expected {} edges", g.edge_count())));
            }
            let mut cleaned = Vec::with_capacity(per_edge.len());
            for (e, ks) in per_edge.into_iter().enumerate() {
                let len = &g.edge(e).length;
                if ks.first().map(|k| &k.0) != Some(&Q::zero()) || ks.last().map(|k| &k.0) != Some(len) {
                    return Err(Error::domain(format!("summand {j} edge {e}: knots must span [0, length]")));
                }
                if ks.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::domain(format!("summand {j} edge {e}: knots not increasing")));
                }
                if ks.iter().any(|k| k.1.size() != *n) {
                    return Err(Error::domain(format!("summand {j} edge {e}: matrix size differs from {n}")));
                }
                cleaned.push(simplify(ks));
            }
            for v in 0..g.vertex_count() {
                let mut vals = g.incidences(v).into_iter().map(|(e, t)| {
                    let ks: &Knots = &cleaned[e];
                    if t.is_zero() {
                        ks[0].1.clone()
                    } else {
                        ks[ks.len() - 1].1.clone()
                    }
                });
                let first = vals.next().expect("vertex on an edge");
                if vals.any(|m| m != first) {
                    return Err(Error::domain(format!("summand {j}: discontinuous at vertex {}", g.vertex_name(v))));
                }
            }
            out.push(cleaned);
        }
        Ok(Element { block, knots: out })
    }

    /// Constant function with value `values[j]` on summand `j`.
    pub fn constant(block: Arc<Block>, values: Vec<Mat>) -> Result<Self> {
        if values.len() != block.len() {
            return Err(Error::domain("one value per summand required"));
        }
        let knots = block
            .summands
            .iter()
            .zip(values)
            .map(|((g, _), m)| g.edges().iter().map(|e| vec![(Q::zero(), m.clone()), (e.length.clone(), m.clone())]).collect())
            .collect();
        Element::new(block, knots)
    }

    pub fn identity(block: Arc<Block>) -> Self {
        let vals = block.summands.iter().map(|(_, n)| Mat::identity(*n)).collect();
        Element::constant(block, vals).expect("identity is valid")
    }

    pub fn zero(block: Arc<Block>) -> Self {
        let vals = block.summands.iter().map(|(_, n)| Mat::zeros(*n)).collect();
        Element::constant(block, vals).expect("zero is valid")
    }

    pub fn block(&self) -> &Arc<Block> {
        &self.block
    }

    pub fn knots(&self, summand: usize, edge: usize) -> &Knots {
        &self.knots[summand][edge]
    }

    /// Applies `f` to every knot value (valid for maps that commute with
    /// affine interpolation, e.g. linear maps).
    pub fn map_linear(&self, f: impl Fn(&Mat) -> Mat) -> Element {
        let knots = self.knots.iter().map(|s| s.iter().map(|ks| ks.iter().map(|(t, m)| (t.clone(), f(m))).collect()).collect()).collect();
        Element { block: self.block.clone(), knots }
    }

    pub fn is_constant(&self) -> bool {
        self.knots.iter().all(|s| {
            let first = &s[0][0].1;
            s.iter().all(|ks| ks.iter().all(|(_, m)| m == first))
        })
    }

    pub fn eval_raw(&self, summand: usize, edge: usize, t: &Q) -> Mat {
        let ks = &self.knots[summand][edge];
        let k = ks.partition_point(|(s, _)| s < t);
        if k < ks.len() && &ks[k].0 == t {
            return ks[k].1.clone();
        }
        let (a, b) = (&ks[k - 1], &ks[k]);
        a.1.lerp(&b.1, &((t - &a.0) / (&b.0 - &a.0)))
    }
}

fn simplify(ks: Knots) -> Knots {
    // drop knots where the value is the affine interpolation of its neighbours
    let mut out: Knots = Vec::with_capacity(ks.len());
    for k in ks {
        while out.len() >= 2 {
            let (a, b) = (&out[out.len() - 2], &out[out.len() - 1]);
            let s = (&b.0 - &a.0) / (&k.0 - &a.0);
            if a.1.lerp(&k.1, &s) == b.1 {
                out.pop();
            } else {
                break;
            }
        }
        out.push(k);
    }
    out
}

pub fn element_eval(a: &Element, summand: usize, p: &GraphPoint) -> Result<Mat> {
    a.block.check_index(summand)?;
    let g = a.block.base(summand);
    p.check_on(g)?;
    let raw = p.raw_reps(g).remove(0);
    Ok(a.eval_raw(summand, raw.edge, &raw.coord))
}

/// Certified bounds on `sup_x ‖a(x)‖` from the knot values, in squared form.
///
/// The operator norm is convex along each affine segment, so its maximum is
/// attained at a knot; there it lies between the largest row/column norm and
/// the Frobenius norm.
pub fn element_sup_norm_bounds(a: &Element) -> NormBounds {
    let mut lower_sq = Q::zero();
    let mut upper_sq = Q::zero();
    for (_, m) in a.knots.iter().flatten().flatten() {
        lower_sq = max_q(&lower_sq, &m.max_line_norm_sq());
        upper_sq = max_q(&upper_sq, &m.frobenius_sq());
    }
    NormBounds { lower_sq, upper_sq }
}

/// A Lipschitz constant for `a` with respect to the path metric and the
/// Frobenius norm (hence also the operator norm).
pub fn lipschitz_bound(a: &Element) -> Q {
    let mut best = Q::zero();
    for ks in a.knots.iter().flatten() {
        for w in ks.windows(2) {
            let slope = (&w[1].1 - &w[0].1).frobenius_sq() / ((&w[1].0 - &w[0].0) * (&w[1].0 - &w[0].0));
            best = max_q(&best, &slope);
        }
    }
    sqrt_upper(&best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C;
    use crate::rational::{q, qi};

    fn interval_block(n: usize) -> Arc<Block> {
        Arc::new(Block::new(vec![(Arc::new(Graph::interval()), n)]).unwrap())
    }

    fn scalar_t(b: &Arc<Block>, n: usize) -> Element {
        Element::new(b.clone(), vec![vec![vec![(Q::zero(), Mat::zeros(n)), (qi(1), Mat::identity(n))]]]).unwrap()
    }

    fn at(c: Q) -> GraphPoint {
        GraphPoint::on_edge(&Graph::interval(), 0, c).unwrap()
    }

    #[test]
    fn eval_examples() {
        let b = interval_block(2);
        let id = Element::identity(b.clone());
        assert_eq!(element_eval(&id, 0, &at(q(2, 7))).unwrap(), Mat::identity(2));
        assert_eq!(element_eval(&scalar_t(&b, 2), 0, &at(q(1, 2))).unwrap(), Mat::scalar(2, q(1, 2)));
        let e11 = Element::new(b.clone(), vec![vec![vec![(Q::zero(), Mat::zeros(2)), (qi(1), Mat::unit(2, 0, 0))]]]).unwrap();
        assert_eq!(element_eval(&e11, 0, &at(q(1, 4))).unwrap(), Mat::unit(2, 0, 0).scale(&q(1, 4)));
        assert!(element_eval(&e11, 1, &at(q(1, 4))).is_err());
        assert!(element_eval(&e11, 0, &GraphPoint::Vertex(9)).is_err());
    }

    #[test]
    fn norm_bound_examples() {
        let b = interval_block(2);
        assert_eq!(element_sup_norm_bounds(&Element::zero(b.clone())), NormBounds { lower_sq: Q::zero(), upper_sq: Q::zero() });
        assert_eq!(element_sup_norm_bounds(&Element::identity(b.clone())), NormBounds { lower_sq: qi(1), upper_sq: qi(2) });
        let d = Element::constant(b, vec![Mat::diag(vec![C::one(), C::zero()])]).unwrap();
        assert_eq!(element_sup_norm_bounds(&d), NormBounds { lower_sq: qi(1), upper_sq: qi(1) });
    }

    #[test]
    fn lipschitz_examples() {
        let b = interval_block(1);
        assert_eq!(lipschitz_bound(&Element::identity(b.clone())), Q::zero());
        assert_eq!(lipschitz_bound(&scalar_t(&b, 1)), qi(1));
        let tent =
            Element::new(b.clone(), vec![vec![vec![(Q::zero(), Mat::zeros(1)), (q(1, 2), Mat::identity(1)), (qi(1), Mat::zeros(1))]]])
                .unwrap();
        assert_eq!(lipschitz_bound(&tent), qi(2));
    }

    #[test]
    fn rejects_discontinuity_and_sizes() {
        let g = Arc::new(Graph::circle());
        let b = Arc::new(Block::new(vec![(g, 1)]).unwrap());
        let bad = Element::new(b.clone(), vec![vec![vec![(Q::zero(), Mat::zeros(1)), (qi(1), Mat::identity(1))]]]);
        assert!(bad.is_err());
        let wrong = Element::constant(b, vec![Mat::identity(2)]);
        assert!(wrong.is_err());
    }
}
