use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Graph, GraphPoint};
use crate::rational::q;

/// A compact connected space: a finite metric graph or a finite product of
/// such (kept symbolic; no geometry on products).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Space {
    Graph(Arc<Graph>),
    Product(Vec<Space>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpacePoint {
    Graph(GraphPoint),
    Tuple(Vec<SpacePoint>),
}

impl Space {
    pub fn power(g: Arc<Graph>, k: usize) -> Space {
        Space::Product(vec![Space::Graph(g); k])
    }

    pub fn as_graph(&self) -> Option<&Arc<Graph>> {
        match self {
            Space::Graph(g) => Some(g),
            Space::Product(_) => None,
        }
    }

    pub fn factors(&self) -> Option<&[Space]> {
        match self {
            Space::Graph(_) => None,
            Space::Product(f) => Some(f),
        }
    }

    pub fn contains(&self, p: &SpacePoint) -> bool {
        match (self, p) {
            (Space::Graph(g), SpacePoint::Graph(x)) => x.check_on(g).is_ok(),
            (Space::Product(fs), SpacePoint::Tuple(xs)) => fs.len() == xs.len() && fs.iter().zip(xs).all(|(f, x)| f.contains(x)),
            _ => false,
        }
    }

    /// Vertices plus the points at 1/4, 1/2, 3/4 of every edge; products
    /// get as many tuples as their first factor has samples, built by
    /// staggering the factor samples.
    pub fn default_samples(&self) -> Vec<SpacePoint> {
        match self {
            Space::Graph(g) => {
                let mut out: Vec<SpacePoint> = (0..g.vertex_count()).map(|v| SpacePoint::Graph(GraphPoint::Vertex(v))).collect();
                for (k, e) in g.edges().iter().enumerate() {
                    for f in [q(1, 4), q(1, 2), q(3, 4)] {
                        out.push(SpacePoint::Graph(GraphPoint::Edge { edge: k, coord: &e.length * f }));
                    }
                }
                out
            }
            Space::Product(fs) => {
                let per: Vec<Vec<SpacePoint>> = fs.iter().map(Space::default_samples).collect();
                let n = per.first().map_or(0, Vec::len);
                (0..n).map(|t| SpacePoint::Tuple(per.iter().enumerate().map(|(i, s)| s[(t + 3 * i) % s.len()].clone()).collect())).collect()
            }
        }
    }

    pub fn display(&self) -> String {
        match self {
            Space::Graph(g) => format!("graph({}v,{}e)", g.vertex_count(), g.edge_count()),
            Space::Product(fs) => {
                if fs.iter().all(|f| f == &fs[0]) && !fs.is_empty() {
                    format!("{}^{}", fs[0].display(), fs.len())
                } else {
                    format!("({})", fs.iter().map(Space::display).collect::<Vec<_>>().join(" x "))
                }
            }
        }
    }
}

impl SpacePoint {
    pub fn display(&self, space: &Space) -> String {
        match (self, space) {
            (SpacePoint::Graph(p), Space::Graph(g)) => p.display(g),
            (SpacePoint::Tuple(xs), Space::Product(fs)) => {
                format!("({})", xs.iter().zip(fs).map(|(x, f)| x.display(f)).collect::<Vec<_>>().join(", "))
            }
            _ => format!("{self}"),
        }
    }

    pub fn graph_point(&self) -> Option<&GraphPoint> {
        match self {
            SpacePoint::Graph(p) => Some(p),
            SpacePoint::Tuple(_) => None,
        }
    }
}

impl fmt::Display for SpacePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpacePoint::Graph(GraphPoint::Vertex(v)) => write!(f, "v{v}"),
            SpacePoint::Graph(GraphPoint::Edge { edge, coord }) => write!(f, "e{edge}:{}", crate::rational::fmt_q(coord)),
            SpacePoint::Tuple(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A space with its finite list of sample points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceHandle {
    space: Space,
    samples: Vec<SpacePoint>,
}

impl SpaceHandle {
    pub fn new(space: Space, samples: Vec<SpacePoint>) -> Result<Self> {
        if let Space::Product(fs) = &space {
            if fs.is_empty() {
                return Err(Error::domain("empty product space"));
            }
        }
        if let Some(p) = samples.iter().find(|p| !space.contains(p)) {
            return Err(Error::domain(format!("sample point {p} does not lie in {}", space.display())));
        }
        Ok(SpaceHandle { space, samples })
    }

    pub fn with_default_samples(space: Space) -> Result<Self> {
        let samples = space.default_samples();
        SpaceHandle::new(space, samples)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn samples(&self) -> &[SpacePoint] {
        &self.samples
    }
}
