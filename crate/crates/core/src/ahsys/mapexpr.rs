use super::space::{Space, SpacePoint};
use crate::error::{Error, Result};
use crate::geometry::{pl_compose, PLMap};

/// A continuous map between spaces, as an expression tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapExpr {
    Identity(Space),
    Constant {
        domain: Space,
        codomain: Space,
        point: SpacePoint,
    },
    Pl(PLMap),
    /// `(x_0, …, x_{k-1}) ↦ (x_{i_0}, …, x_{i_r})`; the codomain is the
    /// product of the selected factors.
    Projection {
        domain: Space,
        indices: Vec<usize>,
    },
    /// `outer ∘ inner`.
    Composite(Box<MapExpr>, Box<MapExpr>),
}

impl MapExpr {
    pub fn identity(s: Space) -> Self {
        MapExpr::Identity(s)
    }

    pub fn constant(domain: Space, codomain: Space, point: SpacePoint) -> Result<Self> {
        if !codomain.contains(&point) {
            return Err(Error::domain(format!("constant value {point} does not lie in the codomain")));
        }
        Ok(MapExpr::Constant { domain, codomain, point })
    }

    pub fn projection(domain: Space, indices: Vec<usize>) -> Result<Self> {
        let k = domain.factors().ok_or_else(|| Error::domain("projection from a non-product space"))?.len();
        if indices.is_empty() || indices.iter().any(|&i| i >= k) {
            return Err(Error::domain(format!("projection indices {indices:?} invalid for {k} factors")));
        }
        Ok(MapExpr::Projection { domain, indices })
    }

    pub fn pl(f: PLMap) -> Self {
        MapExpr::Pl(f)
    }

    pub fn domain(&self) -> Space {
        match self {
            MapExpr::Identity(s) => s.clone(),
            MapExpr::Constant { domain, .. } | MapExpr::Projection { domain, .. } => domain.clone(),
            MapExpr::Pl(f) => Space::Graph(f.domain().clone()),
            MapExpr::Composite(_, g) => g.domain(),
        }
    }

    pub fn codomain(&self) -> Space {
        match self {
            MapExpr::Identity(s) => s.clone(),
            MapExpr::Constant { codomain, .. } => codomain.clone(),
            MapExpr::Pl(f) => Space::Graph(f.codomain().clone()),
            MapExpr::Projection { domain, indices } => {
                let fs = domain.factors().expect("validated");
                Space::Product(indices.iter().map(|&i| fs[i].clone()).collect())
            }
            MapExpr::Composite(f, _) => f.codomain(),
        }
    }

    pub fn eval(&self, p: &SpacePoint) -> Result<SpacePoint> {
        match self {
            MapExpr::Identity(_) => Ok(p.clone()),
            MapExpr::Constant { point, .. } => Ok(point.clone()),
            MapExpr::Pl(f) => match p {
                SpacePoint::Graph(x) => Ok(SpacePoint::Graph(f.eval(x)?)),
                SpacePoint::Tuple(_) => Err(Error::domain("piecewise-linear map applied to a tuple")),
            },
            MapExpr::Projection { indices, .. } => match p {
                SpacePoint::Tuple(xs) => indices
                    .iter()
                    .map(|&i| xs.get(i).cloned().ok_or_else(|| Error::domain("tuple too short for projection")))
                    .collect::<Result<Vec<_>>>()
                    .map(SpacePoint::Tuple),
                SpacePoint::Graph(_) => Err(Error::domain("projection applied to a graph point")),
            },
            MapExpr::Composite(f, g) => f.eval(&g.eval(p)?),
        }
    }

    pub fn is_surjective_hint(&self) -> Option<bool> {
        match self {
            MapExpr::Identity(_) => Some(true),
            MapExpr::Constant { .. } => Some(false),
            MapExpr::Projection { indices, .. } => {
                let mut seen = indices.clone();
                seen.sort_unstable();
                seen.dedup();
                Some(seen.len() == indices.len())
            }
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MapExpr::Identity(_) => "id".into(),
            MapExpr::Constant { point, .. } => format!("const[{point}]"),
            MapExpr::Pl(f) => format!("pl[{} pieces]", f.all_pieces().iter().map(Vec::len).sum::<usize>()),
            MapExpr::Projection { indices, .. } => format!("proj{indices:?}"),
            MapExpr::Composite(f, g) => format!("{} o {}", f.describe(), g.describe()),
        }
    }
}

/// `f ∘ g`, normalized: identities vanish, constants absorb everything on
/// their right and are pushed through maps on their left, projections
/// re-index, piecewise-linear maps compose exactly.
pub fn compose(f: &MapExpr, g: &MapExpr) -> Result<MapExpr> {
    if g.codomain() != f.domain() {
        return Err(Error::domain(format!(
            "cannot compose: inner codomain {} differs from outer domain {}",
            g.codomain().display(),
            f.domain().display()
        )));
    }
    Ok(match (f, g) {
        (MapExpr::Identity(_), _) => g.clone(),
        (_, MapExpr::Identity(_)) => f.clone(),
        (MapExpr::Constant { codomain, point, .. }, _) => {
            MapExpr::Constant { domain: g.domain(), codomain: codomain.clone(), point: point.clone() }
        }
        (_, MapExpr::Constant { domain, point, .. }) => {
            MapExpr::Constant { domain: domain.clone(), codomain: f.codomain(), point: f.eval(point)? }
        }
        (MapExpr::Pl(a), MapExpr::Pl(b)) => MapExpr::Pl(pl_compose(a, b)?),
        (MapExpr::Projection { indices: fi, .. }, MapExpr::Projection { domain, indices: gi }) => {
            MapExpr::Projection { domain: domain.clone(), indices: fi.iter().map(|&k| gi[k]).collect() }
        }
        (_, MapExpr::Composite(g1, g2)) => {
            let h = compose(f, g1)?;
            if matches!(h, MapExpr::Composite(..)) {
                MapExpr::Composite(Box::new(f.clone()), Box::new(g.clone()))
            } else {
                compose(&h, g2)?
            }
        }
        _ => MapExpr::Composite(Box::new(f.clone()), Box::new(g.clone())),
    })
}
