use std::sync::Arc;

use num_integer::Integer;
use num_traits::Zero;

use super::mapexpr::{compose, MapExpr};
use super::space::{Space, SpaceHandle, SpacePoint};
use super::system::{Bundle, GenDiagSystem, Level, Step, YEntry};
use crate::error::{Error, Result};
use crate::geometry::{pl_image, Graph, GraphPoint, PLMap};
use crate::rational::{q, Q};

fn levels_with(space: &Space, ranks: &[usize]) -> Result<Vec<Level>> {
    let handle = SpaceHandle::with_default_samples(space.clone())?;
    Ok(ranks.iter().map(|&rank| Level { components: vec![handle.clone()], rank }).collect())
}

fn ranks(s: &[usize]) -> Vec<usize> {
    let mut r = vec![1];
    for &x in s {
        r.push(r.last().unwrap() * x);
    }
    r
}

/// The `k`-th term of the base-2 van der Corput sequence, `k ≥ 1`:
/// 1/2, 1/4, 3/4, 1/8, 5/8, 3/8, 7/8, …
pub fn van_der_corput(mut k: u64) -> Q {
    let mut num = 0i64;
    let mut den = 1i64;
    while k > 0 {
        let (d, r) = k.div_rem(&2);
        num = 2 * num + r as i64;
        den *= 2;
        k = d;
    }
    q(num, den)
}

/// `per_level` points per step on edge 0 of `g`, enumerating the dyadic
/// rationals without repetition.
pub fn dense_schedule(g: &Graph, steps: usize, per_level: usize) -> Vec<Vec<GraphPoint>> {
    let len = &g.edge(0).length;
    let mut k = 0u64;
    (0..steps)
        .map(|_| {
            (0..per_level)
                .map(|_| {
                    k += 1;
                    GraphPoint::Edge { edge: 0, coord: len * van_der_corput(k) }
                })
                .collect()
        })
        .collect()
}

pub fn constant_schedule(p: GraphPoint, steps: usize, per_level: usize) -> Vec<Vec<GraphPoint>> {
    vec![vec![p; per_level]; steps]
}

/// Goodearl-type system over a fixed graph: `𝒴(n) = {id} ∪ {constants at
/// the points of step n}`, with `s_n` entries per step.
pub fn goodearl(base: Arc<Graph>, points: Vec<Vec<GraphPoint>>, s: Vec<usize>) -> Result<GenDiagSystem> {
    if points.len() != s.len() {
        return Err(Error::InvalidParameter(format!("{} point lists for {} steps", points.len(), s.len())));
    }
    let space = Space::Graph(base.clone());
    let mut steps = Vec::new();
    for (n, (pts, &sn)) in points.iter().zip(&s).enumerate() {
        if pts.len() + 1 != sn {
            return Err(Error::InvalidParameter(format!(
                "step {}: s = {sn} but there are {} entries (identity + {} constants)",
                n + 1,
                pts.len() + 1,
                pts.len()
            )));
        }
        let mut entries = vec![YEntry { map: MapExpr::identity(space.clone()), source: 0, target: 0, bundle: Bundle::Trivial { slot: 0 } }];
        for (k, p) in pts.iter().enumerate() {
            p.check_on(&base).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let point = SpacePoint::Graph(p.clone());
            entries.push(YEntry {
                map: MapExpr::constant(space.clone(), space.clone(), point)?,
                source: 0,
                target: 0,
                bundle: Bundle::Trivial { slot: k + 1 },
            });
        }
        steps.push(Step { s: sn, entries });
    }
    GenDiagSystem::new(levels_with(&space, &ranks(&s))?, steps)
}

fn villadsen(
    seed: Arc<Graph>,
    levels: usize,
    k1: usize,
    ratio: usize,
    constants: usize,
    point: GraphPoint,
    twisted: bool,
) -> Result<GenDiagSystem> {
    if levels == 0 || k1 == 0 || ratio == 0 {
        return Err(Error::InvalidParameter("levels, initial exponent and ratio must be positive".into()));
    }
    point.check_on(&seed).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let s = ratio + constants;
    let mut dims = vec![k1];
    for _ in 1..levels {
        dims.push(dims.last().unwrap() * ratio);
    }
    let mut lv = Vec::new();
    for (n, &k) in dims.iter().enumerate() {
        let space = Space::power(seed.clone(), k);
        lv.push(Level { components: vec![SpaceHandle::with_default_samples(space)?], rank: s.pow(n as u32) });
    }
    let mut steps = Vec::new();
    for n in 0..levels - 1 {
        let (k, k2) = (dims[n], dims[n + 1]);
        let dom = Space::power(seed.clone(), k2);
        let cod = Space::power(seed.clone(), k);
        let mut entries = Vec::new();
        for b in 0..ratio {
            entries.push((MapExpr::projection(dom.clone(), (b * k..(b + 1) * k).collect())?, format!("theta_{}_{b}", n + 1)));
        }
        let c = SpacePoint::Tuple(vec![SpacePoint::Graph(point.clone()); k]);
        for b in 0..constants {
            entries.push((MapExpr::constant(dom.clone(), cod.clone(), c.clone())?, format!("theta_{}_{}", n + 1, ratio + b)));
        }
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(slot, (map, tag))| YEntry {
                map,
                source: 0,
                target: 0,
                bundle: if twisted { Bundle::Line { tag } } else { Bundle::Trivial { slot } },
            })
            .collect();
        steps.push(Step { s, entries });
    }
    GenDiagSystem::new(lv, steps)
}

/// Villadsen-type system of the first kind: `Z_n = Y^{k_n}`,
/// `k_{n+1} = ratio · k_n`, with `ratio` block projections and `constants`
/// constant entries per step.
pub fn villadsen1(seed: Arc<Graph>, levels: usize, k1: usize, ratio: usize, constants: usize, point: GraphPoint) -> Result<GenDiagSystem> {
    villadsen(seed, levels, k1, ratio, constants, point, false)
}

/// As [`villadsen1`], with every bundle an opaque line-bundle tag.
pub fn villadsen2_skeleton(
    seed: Arc<Graph>,
    levels: usize,
    k1: usize,
    ratio: usize,
    constants: usize,
    point: GraphPoint,
) -> Result<GenDiagSystem> {
    villadsen(seed, levels, k1, ratio, constants, point, true)
}

/// Dynamics skeleton: `Z_n = Z`, `𝒴(n) = {σ^0, …, σ^{s-1}}` for a
/// piecewise-linear surjection `σ`.
pub fn dynamics(sigma: PLMap, levels: usize, s: usize) -> Result<GenDiagSystem> {
    let z = sigma.domain().clone();
    if **sigma.codomain() != *z {
        return Err(Error::InvalidParameter("sigma must map a graph to itself".into()));
    }
    if !pl_image(&sigma).is_whole() {
        return Err(Error::InvalidParameter("sigma is not surjective".into()));
    }
    if levels == 0 || s == 0 {
        return Err(Error::InvalidParameter("levels and s must be positive".into()));
    }
    let space = Space::Graph(z.clone());
    let mut iterates = vec![MapExpr::identity(space.clone())];
    for _ in 1..s {
        let next = compose(&MapExpr::pl(sigma.clone()), iterates.last().unwrap())?;
        iterates.push(next);
    }
    let entries: Vec<YEntry> = iterates
        .into_iter()
        .enumerate()
        .map(|(slot, map)| YEntry { map, source: 0, target: 0, bundle: Bundle::Trivial { slot } })
        .collect();
    let steps = vec![Step { s, entries }; levels - 1];
    GenDiagSystem::new(levels_with(&space, &ranks(&vec![s; levels - 1]))?, steps)
}

/// The doubling map on the circle: `t ↦ 2t mod 1`.
pub fn doubling_map() -> PLMap {
    let c = Arc::new(Graph::circle());
    PLMap::from_knots(
        c.clone(),
        c,
        vec![vec![(Q::zero(), 0, Q::zero()), (q(1, 2), 0, q(1, 1)), (q(1, 2), 0, Q::zero()), (q(1, 1), 0, q(1, 1))]],
    )
    .expect("static map")
}
