//! Finite truncations of the limit groupoid of a trivial-bundle system.
//!
//! A depth-`m` stage over base level `n` has arrows `(z, w, k₀, l₀)`: a
//! sampled point `z` of a level-`n+m` component, a level-compatible word
//! `w = (y_n, …, y_{n+m-1})` ending there, and matrix indices
//! `k₀, l₀ ∈ {1..r_n}`. Arrows with equal `(z, w)` form a pair groupoid.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::ahsys::{covers, GenDiagSystem, Space, SpacePoint, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{point_distance, GraphPoint};
use crate::rational::{fmt_q, half, Q};

/// A point of a given component at some level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StagePoint {
    pub component: usize,
    pub point: SpacePoint,
}

impl std::fmt::Display for StagePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "c{}:{}", self.component, self.point)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arrow {
    /// Index into the stage's samples.
    pub z: usize,
    pub word: Vec<usize>,
    pub k0: usize,
    pub l0: usize,
}

impl Arrow {
    pub fn is_unit(&self) -> bool {
        self.k0 == self.l0
    }

    pub fn source(&self) -> Arrow {
        Arrow { k0: self.l0, ..self.clone() }
    }

    pub fn range(&self) -> Arrow {
        Arrow { l0: self.k0, ..self.clone() }
    }

    pub fn inverse(&self) -> Arrow {
        Arrow { k0: self.l0, l0: self.k0, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupoidStage {
    pub base_level: usize,
    pub depth: usize,
    pub rank: usize,
    pub samples: Vec<StagePoint>,
    /// Words per sample, lexicographic.
    pub words: Vec<Vec<Vec<usize>>>,
    pub arrows: Vec<Arrow>,
    /// `(z, w) ↦` the images of `z` at levels `n + m, n + m - 1, …, n`,
    /// stored bottom-up: entry `j` lies at level `n + j`.
    trails: BTreeMap<(usize, Vec<usize>), Vec<StagePoint>>,
}

fn word_str(w: &[usize]) -> String {
    w.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
}

/// Pushes `z` down along `w` one letter at a time.
fn trail(sys: &GenDiagSystem, n: usize, z: &StagePoint, w: &[usize]) -> Result<Vec<StagePoint>> {
    let mut out = vec![z.clone()];
    let mut cur = z.clone();
    for (j, &y) in w.iter().enumerate().rev() {
        let e = &sys.step(n + j).entries[y];
        debug_assert_eq!(e.target, cur.component);
        cur = StagePoint { component: e.source, point: e.map.eval(&cur.point)? };
        out.push(cur.clone());
    }
    out.reverse();
    Ok(out)
}

fn check_levels(sys: &GenDiagSystem, n: usize, m: usize) -> Result<()> {
    if n == 0 || n + m > sys.level_count() {
        return Err(Error::domain(format!("levels {n}..{} do not exist (system has {})", n + m, sys.level_count())));
    }
    if !sys.is_trivial_bundle() {
        return Err(Error::Precondition("system has non-trivial line bundles; untwist it first".into()));
    }
    Ok(())
}

fn check_samples(sys: &GenDiagSystem, level: usize, samples: &[StagePoint]) -> Result<()> {
    let comps = &sys.level(level).components;
    for z in samples {
        match comps.get(z.component) {
            Some(c) if c.space().contains(&z.point) => {}
            _ => return Err(Error::domain(format!("sample {z} is not a point of level {level}"))),
        }
    }
    Ok(())
}

/// The declared samples of every component at `level`.
pub fn level_samples(sys: &GenDiagSystem, level: usize) -> Vec<StagePoint> {
    sys.level(level)
        .components
        .iter()
        .enumerate()
        .flat_map(|(c, h)| h.samples().iter().map(move |p| StagePoint { component: c, point: p.clone() }))
        .collect()
}

pub fn build_stage(sys: &GenDiagSystem, n: usize, m: usize, samples: &[StagePoint]) -> Result<GroupoidStage> {
    check_levels(sys, n, m)?;
    check_samples(sys, n + m, samples)?;
    let r = sys.rank(n);
    let mut words = Vec::with_capacity(samples.len());
    let mut arrows = Vec::new();
    let mut trails = BTreeMap::new();
    for (zi, z) in samples.iter().enumerate() {
        let ws = sys.words(n, m, z.component);
        for w in &ws {
            trails.insert((zi, w.clone()), trail(sys, n, z, w)?);
            for k0 in 1..=r {
                for l0 in 1..=r {
                    arrows.push(Arrow { z: zi, word: w.clone(), k0, l0 });
                }
            }
        }
        words.push(ws);
    }
    Ok(GroupoidStage { base_level: n, depth: m, rank: r, samples: samples.to_vec(), words, arrows, trails })
}

impl GroupoidStage {
    pub fn units(&self) -> impl Iterator<Item = &Arrow> {
        self.arrows.iter().filter(|a| a.is_unit())
    }

    pub fn contains(&self, a: &Arrow) -> bool {
        (1..=self.rank).contains(&a.k0) && (1..=self.rank).contains(&a.l0) && self.trails.contains_key(&(a.z, a.word.clone()))
    }

    /// `g ∘ h`, defined when the source of `g` is the range of `h`.
    pub fn compose(&self, g: &Arrow, h: &Arrow) -> Result<Arrow> {
        if !self.contains(g) || !self.contains(h) {
            return Err(Error::Composition("arrow not in stage".into()));
        }
        if g.z != h.z || g.word != h.word || g.l0 != h.k0 {
            return Err(Error::Composition(format!("source of {} differs from range of {}", self.arrow_label(g), self.arrow_label(h))));
        }
        Ok(Arrow { z: g.z, word: g.word.clone(), k0: g.k0, l0: h.l0 })
    }

    /// The image of `(z, w)` at level `level ∈ [n, n + m]`.
    pub fn point_at(&self, z: usize, word: &[usize], level: usize) -> Option<&StagePoint> {
        let t = self.trails.get(&(z, word.to_vec()))?;
        level.checked_sub(self.base_level).and_then(|j| t.get(j))
    }

    /// The arrow `(λ_w(z), k₀, l₀)` of the level-`n` pair groupoid.
    pub fn projection(&self, a: &Arrow) -> Option<(StagePoint, usize, usize)> {
        self.point_at(a.z, &a.word, self.base_level).map(|p| (p.clone(), a.k0, a.l0))
    }

    pub fn arrow_label(&self, a: &Arrow) -> String {
        format!("({}, [{}], {}, {})", self.samples[a.z], word_str(&a.word), a.k0, a.l0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    pub z: usize,
    /// The part of the word above the viewing level.
    pub suffix: Vec<usize>,
    /// `z` pushed down to the viewing level.
    pub value: StagePoint,
    /// Member units as `(prefix, k₀)`, in the order `k₀` major, prefix
    /// minor; the position is the unit's index at the viewing level.
    pub members: Vec<(Vec<usize>, usize)>,
}

impl Orbit {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitReport {
    pub base_level: usize,
    pub depth: usize,
    pub view_base: usize,
    pub orbits: Vec<Orbit>,
}

impl OrbitReport {
    pub fn sizes(&self) -> BTreeSet<usize> {
        self.orbits.iter().map(Orbit::size).collect()
    }
}

fn check_view(stage: &GroupoidStage, view_base: usize) -> Result<usize> {
    let n = stage.base_level;
    if view_base < n || view_base > n + stage.depth {
        return Err(Error::domain(format!("viewing level {view_base} outside {n}..={}", n + stage.depth)));
    }
    Ok(view_base - n)
}

/// Re-indexes every unit at base level `view_base`: a unit `(z, w, k₀)` is
/// split as `w = prefix · suffix` with `|prefix| = view_base - n`, and the
/// units sharing `(z, suffix)` form one orbit.
pub fn orbits(stage: &GroupoidStage, view_base: usize) -> Result<OrbitReport> {
    let cut = check_view(stage, view_base)?;
    let mut groups: BTreeMap<(usize, Vec<usize>), Vec<(usize, Vec<usize>)>> = BTreeMap::new();
    for u in stage.units() {
        let (prefix, suffix) = u.word.split_at(cut);
        groups.entry((u.z, suffix.to_vec())).or_default().push((u.k0, prefix.to_vec()));
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((z, suffix), mut members) in groups {
        members.sort();
        let any = &members[0];
        let mut full = any.1.clone();
        full.extend(suffix.iter().copied());
        let value = stage.point_at(z, &full, view_base).expect("unit in stage").clone();
        out.push(Orbit { z, suffix, value, members: members.into_iter().map(|(k, p)| (p, k)).collect() });
    }
    Ok(OrbitReport { base_level: stage.base_level, depth: stage.depth, view_base, orbits: out })
}

pub fn orbit(stage: &GroupoidStage, unit: &Arrow, view_base: usize) -> Result<Orbit> {
    if !unit.is_unit() || !stage.contains(unit) {
        return Err(Error::domain(format!("{} is not a unit of the stage", stage.arrow_label(unit))));
    }
    let cut = check_view(stage, view_base)?;
    let suffix = &unit.word[cut..];
    let rep = orbits(stage, view_base)?;
    Ok(rep.orbits.into_iter().find(|o| o.z == unit.z && o.suffix == suffix).expect("unit lies in some orbit"))
}

/// Outcome of [`verify_stage`]; each flag is an exact check over all sampled
/// arrows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageLaws {
    pub composable_triples: usize,
    pub axioms: bool,
    pub counting: bool,
    pub projection: bool,
    pub principal: bool,
    pub orbit_sizes: bool,
    pub messages: Vec<String>,
}

impl StageLaws {
    pub fn holds(&self) -> bool {
        self.axioms && self.counting && self.projection && self.principal && self.orbit_sizes
    }
}

/// Checks the groupoid axioms over every composable triple, the arrow
/// count, agreement of the stage projection with the normalized composite
/// `λ_w`, principality, and orbit sizes at every viewing level.
pub fn verify_stage(sys: &GenDiagSystem, stage: &GroupoidStage) -> Result<StageLaws> {
    let (n, m, r) = (stage.base_level, stage.depth, stage.rank);
    let mut messages = Vec::new();
    let mut groups: BTreeMap<(usize, &[usize]), Vec<&Arrow>> = BTreeMap::new();
    for a in &stage.arrows {
        groups.entry((a.z, &a.word)).or_default().push(a);
    }
    let mut triples = 0;
    let mut axioms = true;
    let mut principal = true;
    for arrows in groups.values() {
        for g in arrows {
            let (s, t) = (g.source(), g.range());
            let ok = stage.compose(g, &g.inverse())? == t
                && stage.compose(&g.inverse(), g)? == s
                && stage.compose(&t, g)? == **g
                && stage.compose(g, &s)? == **g;
            if !ok {
                axioms = false;
                messages.push(format!("inverse or unit law fails at {}", stage.arrow_label(g)));
            }
            if s == t && !g.is_unit() {
                principal = false;
                messages.push(format!("{} fixes its source", stage.arrow_label(g)));
            }
            for h in arrows.iter().filter(|h| h.k0 == g.l0) {
                let gh = stage.compose(g, h)?;
                for k in arrows.iter().filter(|k| k.k0 == h.l0) {
                    triples += 1;
                    if stage.compose(&gh, k)? != stage.compose(g, &stage.compose(h, k)?)? {
                        axioms = false;
                        messages.push(format!("associativity fails at {}", stage.arrow_label(g)));
                    }
                }
            }
        }
    }
    let mut counting = true;
    for (zi, z) in stage.samples.iter().enumerate() {
        let expect_words: usize = (n..n + m).map(|k| sys.step(k).s).product();
        let got = stage.arrows.iter().filter(|a| a.z == zi).count();
        if stage.words[zi].len() != expect_words || got != expect_words * r * r {
            counting = false;
            messages.push(format!("{got} arrows over {z}, expected {expect_words} words x {r}^2"));
        }
    }
    let mut projection = true;
    if m > 0 {
        for (zi, w) in groups.keys() {
            let f = crate::ahsys::composite_eigenvalue(sys, n, w)?;
            let direct = f.eval(&stage.samples[*zi].point)?;
            let via = stage.point_at(*zi, w, n).expect("pair in stage");
            if via.point != direct {
                projection = false;
                messages.push(format!("projection of ({}, [{}]) disagrees with the composite", stage.samples[*zi], word_str(w)));
            }
        }
    }
    let mut orbit_sizes = true;
    for view in n..=n + m {
        let rep = orbits(stage, view)?;
        if rep.orbits.iter().any(|o| o.size() != sys.rank(view)) {
            orbit_sizes = false;
            messages.push(format!("orbit sizes {:?} at level {view}, expected r = {}", rep.sizes(), sys.rank(view)));
        }
    }
    Ok(StageLaws { composable_triples: triples, axioms, counting, projection, principal, orbit_sizes, messages })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibrewiseReport {
    pub level: usize,
    /// Source fibres of sampled units of `H_n` that were checked.
    pub fibres_checked: usize,
    pub bijective: bool,
    /// Per level-`n` component: do the `λ_y` cover it?
    pub surjective: Vec<Verdict>,
    pub messages: Vec<String>,
}

impl FibrewiseReport {
    pub fn holds(&self) -> bool {
        self.bijective && self.surjective.iter().all(|v| *v == Verdict::Pass)
    }
}

/// Checks `p_n : H_n → G_n` on samples of level `n + 1`: each source fibre
/// `{(z, y, k, l) : k}` must map bijectively onto the source fibre of the
/// image unit, and the images of the `λ_y` must cover every component.
pub fn check_fibrewise_bijective(sys: &GenDiagSystem, n: usize, samples: &[StagePoint]) -> Result<FibrewiseReport> {
    let stage = build_stage(sys, n, 1, samples)?;
    let mut messages = Vec::new();
    let mut fibres: BTreeMap<(usize, Vec<usize>, usize), Vec<(StagePoint, usize, usize)>> = BTreeMap::new();
    for a in &stage.arrows {
        let p = stage.projection(a).expect("arrow in stage");
        fibres.entry((a.z, a.word.clone(), a.l0)).or_default().push(p);
    }
    let mut bijective = true;
    for ((z, w, l), imgs) in &fibres {
        let base = &imgs[0].0;
        let ks: BTreeSet<usize> = imgs.iter().map(|p| p.1).collect();
        let ok = imgs.iter().all(|p| &p.0 == base && p.2 == *l) && ks.len() == imgs.len() && ks == (1..=stage.rank).collect();
        if !ok {
            bijective = false;
            messages.push(format!("fibre over ({}, [{}], {l}) is not mapped bijectively", stage.samples[*z], word_str(w)));
        }
    }
    let step = sys.step(n);
    let surjective = sys
        .level(n)
        .components
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let maps: Vec<_> = step.entries.iter().filter(|e| e.source == i).map(|e| &e.map).collect();
            let v = covers(h.space(), &maps);
            if v != Verdict::Pass {
                messages.push(format!("component {i} of level {n}: image coverage {}", v.name()));
            }
            v
        })
        .collect();
    Ok(FibrewiseReport { level: n, fibres_checked: fibres.len(), bijective, surjective, messages })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityRow {
    pub m: usize,
    pub values: usize,
    pub net_points: usize,
    /// A net point farther than `ε/2` from every value, if any.
    pub uncovered: Option<StagePoint>,
}

impl DensityRow {
    pub fn dense(&self) -> bool {
        self.uncovered.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityReport {
    pub level: usize,
    pub epsilon: Q,
    pub rows: Vec<DensityRow>,
}

impl DensityReport {
    /// The first depth at which the values were certified `ε`-dense.
    pub fn first_pass(&self) -> Option<usize> {
        self.rows.iter().find(|r| r.dense()).map(|r| r.m)
    }

    pub fn summary(&self) -> String {
        match self.first_pass() {
            Some(m) => format!("epsilon {}: dense at depth {m}", fmt_q(&self.epsilon)),
            None => format!("epsilon {}: density not detected up to depth {}", fmt_q(&self.epsilon), self.rows.last().map_or(0, |r| r.m)),
        }
    }
}

const MAX_NET: usize = 200_000;

fn net(space: &Space, spacing: &Q) -> Result<Vec<SpacePoint>> {
    match space {
        Space::Graph(g) => {
            let mut out: Vec<SpacePoint> = (0..g.vertex_count()).map(|v| SpacePoint::Graph(GraphPoint::Vertex(v))).collect();
            for (k, e) in g.edges().iter().enumerate() {
                let mut t = spacing.clone();
                while t < e.length {
                    out.push(SpacePoint::Graph(GraphPoint::Edge { edge: k, coord: t.clone() }));
                    t += spacing;
                }
            }
            Ok(out)
        }
        Space::Product(fs) => {
            let mut out = vec![Vec::new()];
            for f in fs {
                let pts = net(f, spacing)?;
                if out.len() * pts.len() > MAX_NET {
                    return Err(Error::invalid(format!("epsilon net of {} exceeds {MAX_NET} points", space.display())));
                }
                out = out.iter().flat_map(|pre| pts.iter().map(move |p| [pre.clone(), vec![p.clone()]].concat())).collect();
            }
            Ok(out.into_iter().map(SpacePoint::Tuple).collect())
        }
    }
}

/// Graph metric on graphs, maximum over coordinates on products.
fn distance(space: &Space, a: &SpacePoint, b: &SpacePoint) -> Result<Q> {
    match (space, a, b) {
        (Space::Graph(g), SpacePoint::Graph(x), SpacePoint::Graph(y)) => point_distance(g, x, y),
        (Space::Product(fs), SpacePoint::Tuple(xs), SpacePoint::Tuple(ys)) => {
            let mut best = Q::zero();
            for ((f, x), y) in fs.iter().zip(xs).zip(ys) {
                best = best.max(distance(f, x, y)?);
            }
            Ok(best)
        }
        _ => Err(Error::domain(format!("{a} and {b} are not points of {}", space.display()))),
    }
}

/// For each depth `m ≤ max_m`, pushes the declared samples of level `n + m`
/// down along every word and tests the values against a fixed net of
/// spacing `ε/2` in the level-`n` components. Every net point within `ε/2`
/// of a value certifies that the values are `ε`-dense.
pub fn density_report(sys: &GenDiagSystem, n: usize, epsilon: &Q, max_m: usize) -> Result<DensityReport> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", fmt_q(epsilon))));
    }
    check_levels(sys, n, max_m)?;
    let r = half(epsilon);
    let comps = &sys.level(n).components;
    let nets: Vec<Vec<SpacePoint>> = comps.iter().map(|h| net(h.space(), &r)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for m in 0..=max_m {
        let mut values: BTreeSet<StagePoint> = BTreeSet::new();
        for z in level_samples(sys, n + m) {
            for w in sys.words(n, m, z.component) {
                values.insert(trail(sys, n, &z, &w)?.swap_remove(0));
            }
        }
        let mut uncovered = None;
        'net: for (c, pts) in nets.iter().enumerate() {
            let space = comps[c].space();
            for x in pts {
                let mut hit = false;
                for v in values.iter().filter(|v| v.component == c) {
                    if distance(space, x, &v.point)? <= r {
                        hit = true;
                        break;
                    }
                }
                if !hit {
                    uncovered = Some(StagePoint { component: c, point: x.clone() });
                    break 'net;
                }
            }
        }
        rows.push(DensityRow { m, values: values.len(), net_points: nets.iter().map(Vec::len).sum(), uncovered });
    }
    Ok(DensityReport { level: n, epsilon: epsilon.clone(), rows })
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Units as nodes, every arrow as an edge from its source to its range.
pub fn export_stage_dot(stage: &GroupoidStage) -> String {
    let node = |a: &Arrow, k: usize| format!("u{}_{}_{k}", a.z, a.word.iter().map(usize::to_string).collect::<Vec<_>>().join("_"));
    let mut out = format!("digraph stage_n{}_m{} {{\n", stage.base_level, stage.depth);
    for u in stage.units() {
        let label = format!("({}, [{}], {})", stage.samples[u.z], word_str(&u.word), u.k0);
        let _ = writeln!(out, "  {} [label={}];", node(u, u.k0), dot_quote(&label));
    }
    for a in &stage.arrows {
        let _ = writeln!(out, "  {} -> {} [label={}];", node(a, a.l0), node(a, a.k0), dot_quote(&format!("{},{}", a.k0, a.l0)));
    }
    out.push_str("}\n");
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per orbit: `base_level,depth,z,word,orbit_size`, where `word` is
/// the part of the word above the viewing level.
pub fn export_orbit_csv(stage: &GroupoidStage, report: &OrbitReport) -> String {
    let mut out = String::from("base_level,depth,z,word,orbit_size\n");
    for o in &report.orbits {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            report.view_base,
            report.depth - (report.view_base - report.base_level),
            csv_field(&stage.samples[o.z].to_string()),
            csv_field(&word_str(&o.suffix)),
            o.size()
        );
    }
    out
}
