use std::collections::BTreeSet;

use super::mapexpr::{compose, MapExpr};
use super::space::{Space, SpaceHandle};
use crate::error::{Error, Result};
use crate::geometry::{pl_image, ClosedSubset, GraphPoint};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bundle {
    /// `1 ⊗ e_slot`, a standard rank-one projection.
    Trivial { slot: usize },
    /// An opaque (possibly non-trivial) line bundle.
    Line { tag: String },
}

/// One `y ∈ 𝒴(n)`: `λ_y : Z_{n+1}^{target} → Z_n^{source}` with bundle `q_y`
/// supported on `Z_{n+1}^{target}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YEntry {
    pub map: MapExpr,
    pub source: usize,
    pub target: usize,
    pub bundle: Bundle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub components: Vec<SpaceHandle>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub s: usize,
    pub entries: Vec<YEntry>,
}

/// An inductive system with generalized diagonal connecting maps. Levels are
/// numbered from 1; step `n` goes from level `n` to level `n + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenDiagSystem {
    levels: Vec<Level>,
    steps: Vec<Step>,
}

impl GenDiagSystem {
    /// Checks shapes only (component indices, map domains and codomains);
    /// counting conditions are left to [`gendiag_check`].
    pub fn new(levels: Vec<Level>, steps: Vec<Step>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::domain("system has no levels"));
        }
        if steps.len() + 1 != levels.len() {
            return Err(Error::domain(format!("{} levels need {} steps, got {}", levels.len(), levels.len() - 1, steps.len())));
        }
        for (k, step) in steps.iter().enumerate() {
            let n = k + 1;
            let (lo, hi) = (&levels[k], &levels[k + 1]);
            for (y, e) in step.entries.iter().enumerate() {
                let (Some(src), Some(tgt)) = (lo.components.get(e.source), hi.components.get(e.target)) else {
                    return Err(Error::domain(format!("step {n}, entry {y}: component index out of range")));
                };
                if e.map.domain() != *tgt.space() || e.map.codomain() != *src.space() {
                    return Err(Error::domain(format!(
                        "step {n}, entry {y}: map {} does not go from level {} component {} to level {n} component {}",
                        e.map.describe(),
                        n + 1,
                        e.target,
                        e.source
                    )));
                }
            }
        }
        Ok(GenDiagSystem { levels, steps })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &Level {
        &self.levels[n - 1]
    }

    pub fn rank(&self, n: usize) -> usize {
        self.levels[n - 1].rank
    }

    pub fn step(&self, n: usize) -> &Step {
        &self.steps[n - 1]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn is_trivial_bundle(&self) -> bool {
        self.steps.iter().all(|s| s.entries.iter().all(|e| matches!(e.bundle, Bundle::Trivial { .. })))
    }

    /// Level-compatible words `(y_n, …, y_{n+m-1})` ending in level `n + m`
    /// component `c`, in lexicographic order.
    pub fn words(&self, n: usize, m: usize, c: usize) -> Vec<Vec<usize>> {
        if m == 0 {
            return vec![Vec::new()];
        }
        // build from the top: the last letter maps out of component c
        let mut partial: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), c)];
        for level in (n..n + m).rev() {
            let step = self.step(level);
            let mut next = Vec::new();
            for (suffix, comp) in &partial {
                for (y, e) in step.entries.iter().enumerate() {
                    if e.target == *comp {
                        let mut w = vec![y];
                        w.extend(suffix.iter().copied());
                        next.push((w, e.source));
                    }
                }
            }
            partial = next;
        }
        let mut out: Vec<Vec<usize>> = partial.into_iter().map(|(w, _)| w).collect();
        out.sort();
        out
    }
}

/// `λ_{y_0} ∘ λ_{y_1} ∘ … ∘ λ_{y_{m-1}}` for a word starting at level `n`.
pub fn composite_eigenvalue(sys: &GenDiagSystem, n: usize, word: &[usize]) -> Result<MapExpr> {
    if word.is_empty() {
        return Err(Error::domain("empty word"));
    }
    if n == 0 || n + word.len() > sys.level_count() {
        return Err(Error::domain(format!("word of length {} does not fit from level {n}", word.len())));
    }
    let mut acc: Option<(MapExpr, usize)> = None;
    for (k, &y) in word.iter().enumerate() {
        let step = sys.step(n + k);
        let e = step.entries.get(y).ok_or_else(|| Error::domain(format!("letter {y} out of range at level {}", n + k)))?;
        acc = Some(match acc {
            None => (e.map.clone(), e.target),
            Some((f, comp)) => {
                if e.source != comp {
                    return Err(Error::domain(format!(
                        "letter {y} at level {} lands in component {} but the word continues from component {comp}",
                        n + k,
                        e.source
                    )));
                }
                (compose(&f, &e.map)?, e.target)
            }
        });
    }
    Ok(acc.expect("nonempty").0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepReport {
    pub n: usize,
    pub rank_ok: bool,
    /// Per level-`n+1` component: number of entries landing there vs `s_n`.
    pub unital: Vec<(usize, usize)>,
    pub slots_ok: bool,
    /// Per level-`n` component: do the images of the `λ_y` cover it?
    pub injective: Vec<Verdict>,
    pub twisted: bool,
    pub messages: Vec<String>,
}

impl StepReport {
    pub fn unital_ok(&self) -> bool {
        self.unital.iter().all(|(count, s)| count == s)
    }

    pub fn verdict(&self) -> Verdict {
        if !self.rank_ok || !self.unital_ok() || !self.slots_ok || self.injective.contains(&Verdict::Fail) {
            Verdict::Fail
        } else if self.injective.contains(&Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenDiagReport {
    pub steps: Vec<StepReport>,
}

impl GenDiagReport {
    pub fn verdict(&self) -> Verdict {
        let vs: Vec<Verdict> = self.steps.iter().map(StepReport::verdict).collect();
        if vs.contains(&Verdict::Fail) {
            Verdict::Fail
        } else if vs.contains(&Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict() == Verdict::Pass
    }
}

pub(crate) fn covers(space: &Space, maps: &[&MapExpr]) -> Verdict {
    if maps.iter().any(|f| f.is_surjective_hint() == Some(true)) {
        return Verdict::Pass;
    }
    match space {
        Space::Graph(g) => {
            let mut img = ClosedSubset::empty(g.clone());
            for f in maps {
                match f {
                    MapExpr::Pl(p) => img = img.union(&pl_image(p)),
                    MapExpr::Constant { point, .. } => {
                        let pt = match point.graph_point() {
                            Some(GraphPoint::Vertex(v)) => ClosedSubset::from_intervals(g.clone(), [], [*v]),
                            Some(GraphPoint::Edge { edge, coord }) => {
                                ClosedSubset::from_intervals(g.clone(), [(*edge, coord.clone(), coord.clone())], [])
                            }
                            None => return Verdict::Inconclusive,
                        };
                        img = img.union(&pt);
                    }
                    _ => return Verdict::Inconclusive,
                }
            }
            if img.is_whole() {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        Space::Product(_) => {
            if maps.iter().all(|f| matches!(f, MapExpr::Constant { .. })) {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            }
        }
    }
}

pub fn gendiag_check(sys: &GenDiagSystem) -> GenDiagReport {
    let mut steps = Vec::new();
    for n in 1..sys.level_count() {
        let step = sys.step(n);
        let mut messages = Vec::new();
        let rank_ok = sys.rank(n) * step.s == sys.rank(n + 1);
        if !rank_ok {
            messages.push(format!("r_{} = {} but r_{n} * s_{n} = {}", n + 1, sys.rank(n + 1), sys.rank(n) * step.s));
        }
        let hi = sys.level(n + 1);
        let mut unital = Vec::new();
        let mut slots_ok = true;
        for j in 0..hi.components.len() {
            let here: Vec<&YEntry> = step.entries.iter().filter(|e| e.target == j).collect();
            if here.len() != step.s {
                messages.push(format!("component {j} of level {} receives {} rank-one entries, s_{n} = {}", n + 1, here.len(), step.s));
            }
            unital.push((here.len(), step.s));
            let mut used = BTreeSet::new();
            for e in &here {
                if let Bundle::Trivial { slot } = e.bundle {
                    if slot >= step.s || !used.insert(slot) {
                        slots_ok = false;
                        messages.push(format!("component {j} of level {}: slot {slot} repeated or out of range", n + 1));
                    }
                }
            }
        }
        let lo = sys.level(n);
        let injective = (0..lo.components.len())
            .map(|i| {
                let maps: Vec<&MapExpr> = step.entries.iter().filter(|e| e.source == i).map(|e| &e.map).collect();
                let v = covers(lo.components[i].space(), &maps);
                if v != Verdict::Pass {
                    messages.push(format!("component {i} of level {n}: image coverage {}", v.name()));
                }
                v
            })
            .collect();
        let twisted = step.entries.iter().any(|e| matches!(e.bundle, Bundle::Line { .. }));
        steps.push(StepReport { n, rank_ok, unital, slots_ok, injective, twisted, messages });
    }
    GenDiagReport { steps }
}

/// Replaces every bundle by a standard rank-one projection, numbering slots
/// per target component in entry order.
pub fn untwist(sys: &GenDiagSystem) -> GenDiagSystem {
    let mut out = sys.clone();
    for step in &mut out.steps {
        let mut next_slot = std::collections::BTreeMap::new();
        for e in &mut step.entries {
            let slot = next_slot.entry(e.target).or_insert(0usize);
            e.bundle = Bundle::Trivial { slot: *slot };
            *slot += 1;
        }
    }
    out
}
