//! Seeded generators for test and benchmark inputs.

use std::sync::Arc;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::{Block, Element, Knots};
use crate::diagmaps::{is_maximally_homogeneous, DiagonalForm, Entry, TargetData};
use crate::error::{Error, Result};
use crate::geometry::{build_covering_tree, CoveringTree, Graph, Leg, PLMap, Piece};
use crate::matrix::{Mat, C};
use crate::rational::{q, qi, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    Interval,
    Circle,
    Star,
    FigureEight,
}

impl BaseKind {
    pub const ALL: [BaseKind; 4] = [BaseKind::Interval, BaseKind::Circle, BaseKind::Star, BaseKind::FigureEight];

    pub fn name(self) -> &'static str {
        match self {
            BaseKind::Interval => "interval",
            BaseKind::Circle => "circle",
            BaseKind::Star => "star",
            BaseKind::FigureEight => "figure-eight",
        }
    }

    pub fn graph(self) -> Graph {
        match self {
            BaseKind::Interval => Graph::interval(),
            BaseKind::Circle => Graph::circle(),
            BaseKind::Star => Graph::star(3),
            BaseKind::FigureEight => Graph::figure_eight(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineFixture {
    pub name: String,
    pub phi: DiagonalForm,
    pub delta: Q,
}

fn single_source(z: Arc<Graph>, tree: CoveringTree, maps: Vec<PLMap>) -> Result<DiagonalForm> {
    let src = Arc::new(Block::new(vec![(z, 1)])?);
    let tgt = Arc::new(Block::new(vec![(tree.base().clone(), maps.len())])?);
    let entries = maps.into_iter().map(|map| Entry { source: 0, map }).collect();
    DiagonalForm::new(src, tgt, vec![TargetData { tree, entries }])
}

/// Interval to interval, entries `t ↦ t/3` and `t ↦ t/3 + 2/3`.
pub fn thirds() -> DiagonalForm {
    let g = Arc::new(Graph::interval());
    let maps = [(Q::zero(), q(1, 3)), (q(2, 3), qi(1))]
        .into_iter()
        .map(|(a, b)| PLMap::from_knots(g.clone(), g.clone(), vec![vec![(Q::zero(), 0, a), (qi(1), 0, b)]]).unwrap())
        .collect();
    single_source(g.clone(), CoveringTree::identity(g).unwrap(), maps).unwrap()
}

/// Maximal edge paths of the base along which segments are planted.
fn tracks(kind: BaseKind, rng: &mut ChaCha8Rng) -> Vec<Vec<Leg>> {
    let fwd = |e: usize| Leg { edge: e, from: Q::zero(), to: qi(1) };
    let back = |e: usize| Leg { edge: e, from: qi(1), to: Q::zero() };
    match kind {
        BaseKind::Interval => vec![vec![fwd(0)]],
        BaseKind::Circle => vec![vec![fwd(0)]],
        BaseKind::Star => {
            if rng.gen_bool(0.5) {
                vec![vec![fwd(0)], vec![fwd(1)], vec![fwd(2)]]
            } else {
                vec![vec![back(0), fwd(1)], vec![fwd(2)]]
            }
        }
        BaseKind::FigureEight => {
            if rng.gen_bool(0.5) {
                vec![vec![fwd(0)], vec![fwd(1)]]
            } else {
                vec![vec![fwd(0), fwd(1)]]
            }
        }
    }
}

/// `k/den · x` for a random `k` in `lo..=hi`.
fn frac(rng: &mut ChaCha8Rng, x: &Q, lo: i64, hi: i64, den: i64) -> Q {
    x * q(rng.gen_range(lo..=hi), den)
}

/// Sorted distinct cut points of `(0, len)`, `n` of them, on a grid of `grid`.
fn cuts(rng: &mut ChaCha8Rng, len: &Q, n: usize, grid: i64) -> Vec<Q> {
    let mut ks: Vec<i64> = (1..grid).collect();
    ks.shuffle(rng);
    let mut ks: Vec<i64> = ks.into_iter().take(n).collect();
    ks.sort();
    ks.into_iter().map(|k| len * q(k, grid)).collect()
}

/// Point at arclength `s` along a track; `prefer_next` picks the following
/// leg at a leg boundary.
fn leg_at(track: &[Leg], s: &Q, mid: &Q) -> (usize, Q) {
    let mut acc = Q::zero();
    for (n, l) in track.iter().enumerate() {
        let len = l.length();
        if *mid <= &acc + &len || n + 1 == track.len() {
            let d = s - &acc;
            let x = if l.from < l.to { &l.from + d } else { &l.from - d };
            return (n, x);
        }
        acc += len;
    }
    unreachable!()
}

/// PL map on the unit edge of `domain` following arclengths `knots`
/// (`(t, s)` pairs) along a track.
fn along_track(domain: &Arc<Graph>, cod: &Arc<Graph>, track: &[Leg], knots: &[(Q, Q)]) -> Result<PLMap> {
    // split at leg boundaries
    let mut bounds = Vec::new();
    let mut acc = Q::zero();
    for l in track {
        acc += l.length();
        bounds.push(acc.clone());
    }
    let mut pts: Vec<(Q, Q)> = Vec::new();
    for w in knots.windows(2) {
        let ((t0, s0), (t1, s1)) = (&w[0], &w[1]);
        pts.push((t0.clone(), s0.clone()));
        let (lo, hi) = if s0 < s1 { (s0, s1) } else { (s1, s0) };
        let mut inner: Vec<(Q, Q)> =
            bounds.iter().filter(|b| lo < *b && *b < hi).map(|b| (t0 + (t1 - t0) * (b - s0) / (s1 - s0), b.clone())).collect();
        inner.sort();
        pts.extend(inner);
    }
    pts.push(knots.last().unwrap().clone());
    let mut pieces = Vec::new();
    for w in pts.windows(2) {
        let ((t0, s0), (t1, s1)) = (&w[0], &w[1]);
        let mid = (s0 + s1) / qi(2);
        let (n, x0) = leg_at(track, s0, &mid);
        let (_, x1) = leg_at(track, s1, &mid);
        pieces.push(Piece { t0: t0.clone(), t1: t1.clone(), target: track[n].edge, x0, x1 });
    }
    PLMap::new(domain.clone(), cod.clone(), vec![pieces])
}

/// Random arclength profile on `[0, 1]` covering `[a, b]`: monotone onto it,
/// or out-and-back when `closed` (so that `s(0) = s(1)`).
fn profile(rng: &mut ChaCha8Rng, a: &Q, b: &Q, closed: bool) -> Vec<(Q, Q)> {
    let (a, b) = if rng.gen_bool(0.5) { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    let lerp = |u: &Q| &a + (&b - &a) * u;
    if closed {
        let turn = q(rng.gen_range(3..=9), 12);
        let mut out = vec![(Q::zero(), a.clone())];
        if rng.gen_bool(0.5) {
            let u = q(rng.gen_range(2..=10), 12);
            out.push((&turn * q(1, 2), lerp(&u)));
        }
        out.push((turn, b.clone()));
        out.push((qi(1), a.clone()));
        out.sort_by(|x, y| x.0.cmp(&y.0));
        // keep the middle sample monotone on its side
        if out.len() == 4 {
            let (s0, s1, s2) = (&out[0].1, &out[1].1, &out[2].1);
            if (s1 - s0) * (s2 - s1) < Q::zero() {
                out.remove(1);
            }
        }
        out
    } else {
        let n = rng.gen_range(0..=2);
        let ts = cuts(rng, &qi(1), n, 12);
        let us = cuts(rng, &qi(1), n, 12);
        let mut out = vec![(Q::zero(), a.clone())];
        out.extend(ts.into_iter().zip(us).map(|(t, u)| (t, lerp(&u))));
        out.push((qi(1), b.clone()));
        out
    }
}

/// A random maximally homogeneous form with planted gaps of length at most
/// `δ < 1/Σ m_i`, over the given source base. Targets are the interval
/// (identity covering) or the circle unrolled to radius 1.
pub fn random_pipeline_fixture(seed: u64, kind: BaseKind) -> Result<PipelineFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Arc::new(kind.graph());
    for _attempt in 0..50 {
        let tr = tracks(kind, &mut rng);
        let m = (tr.len() + rng.gen_range(0..=1usize)).max(2);
        let delta = q(9, 10 * m as i64);
        // segments per track
        let mut per = vec![1usize; tr.len()];
        for _ in tr.len()..m {
            let k = rng.gen_range(0..tr.len());
            per[k] += 1;
        }
        let circle_target = rng.gen_bool(0.4);
        let w = Arc::new(if circle_target { Graph::circle() } else { Graph::interval() });
        let mut maps = Vec::new();
        let mut segs = Vec::new();
        for (track, &n) in tr.iter().zip(&per) {
            let len: Q = track.iter().map(Leg::length).sum();
            let closed_loop = kind == BaseKind::Circle;
            let end_gap = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.3) { Q::zero() } else { frac(rng, &delta, 1, 8, 16) };
            let mut gaps = vec![end_gap(&mut rng)];
            for _ in 1..n {
                gaps.push(frac(&mut rng, &delta, 2, 8, 16));
            }
            gaps.push(if closed_loop { frac(&mut rng, &delta, 2, 8, 16) - &gaps[0] } else { end_gap(&mut rng) });
            if closed_loop && gaps[n] <= Q::zero() {
                gaps[n] = frac(&mut rng, &delta, 1, 4, 16);
            }
            let rest = &len - gaps.iter().sum::<Q>();
            let splits = cuts(&mut rng, &rest, n - 1, 24);
            let mut lens = Vec::new();
            let mut prev = Q::zero();
            for c in splits.iter().chain(std::iter::once(&rest)) {
                lens.push(c - &prev);
                prev = c.clone();
            }
            let mut s = gaps[0].clone();
            for k in 0..n {
                segs.push((track.clone(), s.clone(), &s + &lens[k]));
                s = &s + &lens[k] + &gaps[k + 1];
            }
        }
        for (track, a, b) in &segs {
            let prof = profile(&mut rng, a, b, circle_target);
            maps.push(along_track(&w, &z, track, &prof)?);
        }
        let tree = if circle_target { build_covering_tree(w.clone(), 1)? } else { CoveringTree::identity(w.clone())? };
        let maps = maps.iter().map(|f| tree.lift(f)).collect::<Result<Vec<_>>>()?;
        let phi = single_source(z.clone(), tree, maps)?;
        if is_maximally_homogeneous(&phi).holds {
            let name = format!("{}-{}-m{}-{seed}", kind.name(), if circle_target { "circle" } else { "interval" }, m);
            return Ok(PipelineFixture { name, phi, delta });
        }
    }
    Err(Error::Infeasible(format!("no maximally homogeneous fixture for seed {seed}")))
}

/// `count` fixtures cycling through every base kind.
pub fn pipeline_suite(count: usize, seed: u64) -> Result<Vec<PipelineFixture>> {
    (0..count).map(|n| random_pipeline_fixture(seed.wrapping_add(n as u64), BaseKind::ALL[n % BaseKind::ALL.len()])).collect()
}

/// An arbitrary (not necessarily homogeneous) random form: `m` entries from
/// the interval to a random base, each with a few random knots.
pub fn random_pl_form(seed: u64) -> Result<DiagonalForm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = BaseKind::ALL[rng.gen_range(0..4)];
    let z = Arc::new(kind.graph());
    let w = Arc::new(Graph::interval());
    let m = rng.gen_range(2..=3);
    let mut maps = Vec::new();
    for _ in 0..m {
        let e = rng.gen_range(0..z.edge_count());
        let n = rng.gen_range(0..=3);
        let mut ks = vec![(Q::zero(), e, q(rng.gen_range(0..=6), 6))];
        for t in cuts(&mut rng, &qi(1), n, 8) {
            ks.push((t, e, q(rng.gen_range(0..=6), 6)));
        }
        ks.push((qi(1), e, q(rng.gen_range(0..=6), 6)));
        maps.push(PLMap::from_knots(w.clone(), z.clone(), vec![ks])?);
    }
    single_source(z, CoveringTree::identity(w)?, maps)
}

fn random_mat(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let mut rows = Vec::new();
    for _ in 0..n {
        rows.push((0..n).map(|_| C::new(q(rng.gen_range(-4..=4), 4), q(rng.gen_range(-4..=4), 4))).collect());
    }
    Mat::from_rows(rows)
}

/// Random element of a block with knots on a grid of eighths.
pub fn random_element(block: Arc<Block>, seed: u64) -> Result<Element> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Vec::new();
    for (g, n) in block.summands() {
        let mut per_edge: Vec<Knots> = Vec::new();
        for e in g.edges() {
            let n_inner = rng.gen_range(0..=2);
            let inner = cuts(&mut rng, &e.length, n_inner, 8);
            let mut ks = vec![(Q::zero(), random_mat(&mut rng, *n))];
            ks.extend(inner.into_iter().map(|t| (t, random_mat(&mut rng, *n))));
            ks.push((e.length.clone(), random_mat(&mut rng, *n)));
            per_edge.push(ks);
        }
        // agree at shared vertices: copy the value of the first incidence
        let mut at_vertex: Vec<Option<Mat>> = vec![None; g.vertex_count()];
        for (k, e) in g.edges().iter().enumerate() {
            for (v, first) in [(e.tail, true), (e.head, false)] {
                let slot = if first { 0 } else { per_edge[k].len() - 1 };
                match &at_vertex[v] {
                    Some(mv) => per_edge[k][slot].1 = mv.clone(),
                    None => at_vertex[v] = Some(per_edge[k][slot].1.clone()),
                }
            }
        }
        all.push(per_edge);
    }
    Element::new(block, all)
}

/// The same eigenvalue functions with every source summand of size `n`
/// (target sizes scale accordingly).
pub fn with_source_size(phi: &DiagonalForm, n: usize) -> Result<DiagonalForm> {
    let src = Arc::new(Block::new(phi.source().summands().iter().map(|(g, _)| (g.clone(), n)).collect())?);
    let tgt = Arc::new(Block::new(phi.targets().iter().map(|td| (td.tree.base().clone(), td.entries.len() * n)).collect())?);
    DiagonalForm::new(src, tgt, phi.targets().to_vec())
}

/// Goodearl system over `[0,1]` with every constant at 1/2 and `s_n = 2`.
pub fn goodearl_half(levels: usize) -> Result<crate::ahsys::GenDiagSystem> {
    let g = Arc::new(Graph::interval());
    let half = crate::geometry::GraphPoint::Edge { edge: 0, coord: q(1, 2) };
    crate::ahsys::goodearl(g, crate::ahsys::constant_schedule(half, levels - 1, 1), vec![2; levels - 1])
}

/// Goodearl system over `[0,1]` with `per_level` constants per step running
/// through the dyadic rationals.
pub fn goodearl_dense(levels: usize, per_level: usize) -> Result<crate::ahsys::GenDiagSystem> {
    let g = Arc::new(Graph::interval());
    let pts = crate::ahsys::dense_schedule(&g, levels - 1, per_level);
    crate::ahsys::goodearl(g, pts, vec![per_level + 1; levels - 1])
}

/// As [`goodearl_dense`] but with every constant at 1/2.
pub fn goodearl_stuck(levels: usize, per_level: usize) -> Result<crate::ahsys::GenDiagSystem> {
    let g = Arc::new(Graph::interval());
    let half = crate::geometry::GraphPoint::Edge { edge: 0, coord: q(1, 2) };
    crate::ahsys::goodearl(g, crate::ahsys::constant_schedule(half, levels - 1, per_level), vec![per_level + 1; levels - 1])
}

/// Untwisted second-kind Villadsen skeleton over `[0,1]`: `Z_n = [0,1]^{2^{n-1}}`,
/// two block projections and one constant per step.
pub fn villadsen_untwisted(levels: usize) -> Result<crate::ahsys::GenDiagSystem> {
    let g = Arc::new(Graph::interval());
    let half = crate::geometry::GraphPoint::Edge { edge: 0, coord: q(1, 2) };
    Ok(crate::ahsys::untwist(&crate::ahsys::villadsen2_skeleton(g, levels, 1, 2, 1, half)?))
}

/// `t ⊗ 1_n` on the unit interval.
pub fn scalar_t(block: Arc<Block>) -> Result<Element> {
    let n = block.size(0);
    Element::new(block, vec![vec![vec![(Q::zero(), Mat::zeros(n)), (qi(1), Mat::identity(n))]]])
}

fn interval_step(src: Arc<Block>, tgt: Arc<Block>, maps: Vec<(Q, Q)>) -> Result<DiagonalForm> {
    let g = src.base(0).clone();
    let entries = maps
        .into_iter()
        .map(|(a, b)| {
            PLMap::from_knots(g.clone(), g.clone(), vec![vec![(Q::zero(), 0, a), (qi(1), 0, b)]]).map(|map| Entry { source: 0, map })
        })
        .collect::<Result<Vec<_>>>()?;
    DiagonalForm::new(src, tgt, vec![TargetData { tree: CoveringTree::identity(g)?, entries }])
}

/// A pair of systems over `A_n = C[0,1] ⊗ M_{2^{n-1}}`: `φ_n` has two
/// entries leaving a gap of length `g_n`, and `ψ_n` is its surjective
/// maximally homogeneous perturbation. Each `g_n` is chosen after `ℱ_n` is
/// known, so that `(δ_n + ρ_n) · Lip(ℱ_n) < 2^{-n}`.
pub fn intertwining_schedule(depth: usize) -> Result<crate::ahsys::FiniteSystemPair> {
    use crate::ahsys::FiniteSystemPair;
    use crate::blocks::lipschitz_bound;
    use crate::perturb::{make_surjective_mh, PerturbOptions};
    let g = Arc::new(Graph::interval());
    let blocks: Vec<Arc<Block>> = (0..=depth).map(|k| Block::new(vec![(g.clone(), 1usize << k)]).map(Arc::new)).collect::<Result<_>>()?;
    let mut gens: Vec<Vec<Element>> = Vec::new();
    let mut phi = Vec::new();
    let mut psi = Vec::new();
    for n in 1..=depth {
        let mut fs = vec![scalar_t(blocks[n - 1].clone())?];
        if n > 1 {
            for a in &gens[n - 2] {
                for f in [&phi[n - 2], &psi[n - 2]] {
                    let b = crate::diagmaps::apply_diagform(f, a)?;
                    if !fs.contains(&b) {
                        fs.push(b);
                    }
                }
            }
        }
        let lip = fs.iter().map(lipschitz_bound).max().unwrap_or_else(|| qi(1)).max(qi(1));
        let thr = crate::rational::two_pow_neg(n as u32);
        // δ + ρ ≤ 101/100 δ, and δ = thr / (4 lip) keeps the product below thr/2
        let delta = &thr / (qi(4) * &lip);
        let a = (qi(1) - &delta) / qi(2);
        let f = interval_step(blocks[n - 1].clone(), blocks[n].clone(), vec![(Q::zero(), a.clone()), (&a + &delta, qi(1))])?;
        let (out, _) = make_surjective_mh(&f, &delta, &PerturbOptions::default())?;
        gens.push(fs);
        phi.push(f);
        psi.push(out);
    }
    let mut last = vec![scalar_t(blocks[depth].clone())?];
    for a in &gens[depth - 1] {
        for f in [&phi[depth - 1], &psi[depth - 1]] {
            let b = crate::diagmaps::apply_diagform(f, a)?;
            if !last.contains(&b) {
                last.push(b);
            }
        }
    }
    gens.push(last);
    FiniteSystemPair::new(blocks, phi, psi, gens)
}

/// Scalar systems over `C[0,1]`: identical at level 1; at level 2 the second
/// system uses `t ↦ t/2` instead of the identity, a perturbation of size 1/2.
pub fn planted_violation() -> Result<crate::ahsys::FiniteSystemPair> {
    use crate::ahsys::FiniteSystemPair;
    let g = Arc::new(Graph::interval());
    let b = Arc::new(Block::new(vec![(g, 1)])?);
    let blocks = vec![b.clone(); 3];
    let id = interval_step(b.clone(), b.clone(), vec![(Q::zero(), qi(1))])?;
    let halved = interval_step(b.clone(), b.clone(), vec![(Q::zero(), q(1, 2))])?;
    let gens = vec![vec![scalar_t(b.clone())?]; 3];
    let mut pair = FiniteSystemPair::new(blocks, vec![id.clone(), id.clone()], vec![id, halved], gens)?;
    pair.close_generators()?;
    Ok(pair)
}
