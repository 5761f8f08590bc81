//! The system file: a TOML document with a `version` key. Every number that
//! is not an index or a count is written as an exact rational string
//! (`"3"`, `"-1/4"`); complex matrix entries are `"a"` or `"a+bi"`.

use std::sync::Arc;

use ahdiag_core::ahsys::{Bundle, GenDiagSystem, Level, MapExpr, Space, SpaceHandle, SpacePoint, Step, YEntry};
use ahdiag_core::blocks::{Block, Element};
use ahdiag_core::diagmaps::{DiagonalForm, Entry, TargetData};
use ahdiag_core::geometry::{build_covering_tree, CoveringTree, Graph, GraphPoint, PLMap};
use ahdiag_core::matrix::{Mat, C};
use ahdiag_core::rational::{fmt_q, parse_q};
use ahdiag_core::Q;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// document layer

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Doc {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub graphs: Vec<GraphDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocks: Vec<BlockDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagonal_forms: Vec<FormDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<ElementDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gendiag_system: Option<SystemDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<PairDoc>,
    #[serde(default, skip_serializing_if = "RunParams::is_empty")]
    pub run: RunParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub id: String,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub name: String,
    pub tail: String,
    pub head: String,
    pub length: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDoc {
    pub id: String,
    pub summands: Vec<SummandDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummandDoc {
    pub graph: String,
    pub size: usize,
}

/// `[t, codomain edge, coordinate]`.
pub type KnotDoc = [String; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormDoc {
    pub id: String,
    pub source: String,
    pub target: String,
    pub targets: Vec<TargetDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDoc {
    /// Covering-tree radius; absent when the target base is itself a tree
    /// and is used as is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    pub entries: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub source: usize,
    /// Knots per tree edge.
    pub knots: Vec<Vec<KnotDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementDoc {
    pub id: String,
    pub block: String,
    /// Per summand, per edge: `[t, matrix rows]`.
    pub values: Vec<Vec<Vec<(String, Vec<Vec<String>>)>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub levels: Vec<LevelDoc>,
    #[serde(default)]
    pub steps: Vec<StepDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDoc {
    pub rank: usize,
    pub components: Vec<ComponentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub space: SpaceDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<PointDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceDoc {
    Graph(String),
    Power { graph: String, power: usize },
    Product { product: Vec<SpaceDoc> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointDoc {
    Atom(String),
    Tuple(Vec<PointDoc>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDoc {
    pub s: usize,
    pub entries: Vec<YDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YDoc {
    pub source: usize,
    pub target: usize,
    pub map: MapDoc,
    pub bundle: BundleDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MapDoc {
    Identity,
    Constant { point: PointDoc },
    Projection { indices: Vec<usize> },
    Pl { knots: Vec<Vec<KnotDoc>> },
    Composite { via: SpaceDoc, outer: Box<MapDoc>, inner: Box<MapDoc> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BundleDoc {
    Slot { slot: usize },
    Line { line: String },
}

/// Two systems of diagonal forms over common blocks, with generator sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    pub blocks: Vec<String>,
    pub phi: Vec<String>,
    pub psi: Vec<String>,
    pub sets: Vec<Vec<String>>,
    /// Add the images of each set to the next before checking.
    #[serde(default)]
    pub close: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
}

impl RunParams {
    pub fn is_empty(&self) -> bool {
        *self == RunParams::default()
    }
}

// ---------------------------------------------------------------------------
// model layer

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub blocks: Vec<String>,
    pub phi: Vec<String>,
    pub psi: Vec<String>,
    pub sets: Vec<Vec<String>>,
    pub close: bool,
}

/// A validated system file. Items keep their declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    pub graphs: Vec<(String, Arc<Graph>)>,
    pub blocks: Vec<(String, Arc<Block>)>,
    pub forms: Vec<(String, DiagonalForm)>,
    pub elements: Vec<(String, Element)>,
    pub system: Option<GenDiagSystem>,
    pub pair: Option<Pair>,
    pub run: RunParams,
}

fn schema(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Schema(format!("{path}: {msg}"))
}

fn dangling(path: &str, kind: &str, id: &str) -> CliError {
    CliError::Dangling(format!("{path}: unknown {kind} id {id:?}"))
}

fn rational(path: &str, s: &str) -> Result<Q, CliError> {
    parse_q(s).map_err(|_| schema(path, format!("expected an exact rational \"p/q\", found {s:?}")))
}

pub fn parse_complex(s: &str) -> Option<C> {
    let t = s.trim();
    let Some(body) = t.strip_suffix('i') else {
        return parse_q(t).ok().map(C::real);
    };
    let split = body.char_indices().skip(1).filter(|(_, c)| *c == '+' || *c == '-').map(|(i, _)| i).last();
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im.trim_start_matches('+') {
        "" => "1",
        "-" => "-1",
        x => x,
    };
    Some(C::new(parse_q(re).ok()?, parse_q(im).ok()?))
}

pub fn fmt_complex(c: &C) -> String {
    if c.im.is_zero() {
        fmt_q(&c.re)
    } else {
        let sign = if c.im.is_negative() { "-" } else { "+" };
        format!("{}{sign}{}i", fmt_q(&c.re), fmt_q(&c.im.abs()))
    }
}

/// `vertex` or `edge@coord`.
pub fn parse_point(g: &Graph, s: &str) -> Option<GraphPoint> {
    if let Some((e, c)) = s.rsplit_once('@') {
        let edge = g.edge_index(e)?;
        let coord = parse_q(c).ok()?;
        let len = &g.edge(edge).length;
        return if coord.is_zero() {
            Some(GraphPoint::Vertex(g.edge(edge).tail))
        } else if &coord == len {
            Some(GraphPoint::Vertex(g.edge(edge).head))
        } else {
            GraphPoint::on_edge(g, edge, coord).ok()
        };
    }
    g.vertex_index(s).map(GraphPoint::Vertex)
}

pub fn fmt_point(g: &Graph, p: &GraphPoint) -> String {
    match p {
        GraphPoint::Vertex(v) => g.vertex_name(*v).to_string(),
        GraphPoint::Edge { edge, coord } => format!("{}@{}", g.edge(*edge).name, fmt_q(coord)),
    }
}

fn space_point(space: &Space, d: &PointDoc, path: &str) -> Result<SpacePoint, CliError> {
    match (space, d) {
        (Space::Graph(g), PointDoc::Atom(s)) => {
            parse_point(g, s).map(SpacePoint::Graph).ok_or_else(|| schema(path, format!("{s:?} is not a point of the graph")))
        }
        (Space::Product(fs), PointDoc::Tuple(xs)) if fs.len() == xs.len() => Ok(SpacePoint::Tuple(
            fs.iter().zip(xs).enumerate().map(|(i, (f, x))| space_point(f, x, &format!("{path}[{i}]"))).collect::<Result<_, _>>()?,
        )),
        _ => Err(schema(path, format!("point does not match the space {}", space.display()))),
    }
}

fn point_doc(space: &Space, p: &SpacePoint) -> PointDoc {
    match (space, p) {
        (Space::Graph(g), SpacePoint::Graph(x)) => PointDoc::Atom(fmt_point(g, x)),
        (Space::Product(fs), SpacePoint::Tuple(xs)) => PointDoc::Tuple(fs.iter().zip(xs).map(|(f, x)| point_doc(f, x)).collect()),
        _ => unreachable!("validated point"),
    }
}

fn pl_from_knots(domain: &Arc<Graph>, codomain: &Arc<Graph>, knots: &[Vec<KnotDoc>], path: &str) -> Result<PLMap, CliError> {
    if knots.len() != domain.edge_count() {
        return Err(schema(path, format!("{} knot lists for {} domain edges", knots.len(), domain.edge_count())));
    }
    let mut per_edge = Vec::with_capacity(knots.len());
    for (e, ks) in knots.iter().enumerate() {
        let mut out = Vec::with_capacity(ks.len());
        for (k, [t, edge, x]) in ks.iter().enumerate() {
            let p = format!("{path}.knots[{e}][{k}]");
            let idx = codomain.edge_index(edge).ok_or_else(|| dangling(&p, "edge", edge))?;
            out.push((rational(&p, t)?, idx, rational(&p, x)?));
        }
        per_edge.push(out);
    }
    PLMap::from_knots(domain.clone(), codomain.clone(), per_edge).map_err(|e| schema(path, e))
}

fn pl_knots(f: &PLMap) -> Vec<Vec<KnotDoc>> {
    let cod = f.codomain();
    f.all_pieces()
        .iter()
        .map(|pieces| {
            let mut out: Vec<KnotDoc> = Vec::new();
            for (k, p) in pieces.iter().enumerate() {
                let name = cod.edge(p.target).name.clone();
                let first = [fmt_q(&p.t0), name.clone(), fmt_q(&p.x0)];
                if k == 0 || out.last().map(|l| l != &first).unwrap_or(true) {
                    out.push(first);
                }
                out.push([fmt_q(&p.t1), name, fmt_q(&p.x1)]);
            }
            out
        })
        .collect()
}

fn mat_doc(m: &Mat) -> Vec<Vec<String>> {
    m.rows().iter().map(|r| r.iter().map(fmt_complex).collect()).collect()
}

fn tree_radius(ct: &CoveringTree) -> Option<Option<usize>> {
    if ct.is_identity() {
        return Some(None);
    }
    (1..=6).find(|&r| build_covering_tree(ct.base().clone(), r).map(|t| &t == ct).unwrap_or(false)).map(Some)
}

impl Model {
    pub fn graph(&self, id: &str) -> Option<&Arc<Graph>> {
        self.graphs.iter().find(|(k, _)| k == id).map(|(_, g)| g)
    }

    pub fn block(&self, id: &str) -> Option<&Arc<Block>> {
        self.blocks.iter().find(|(k, _)| k == id).map(|(_, b)| b)
    }

    pub fn form(&self, id: &str) -> Option<&DiagonalForm> {
        self.forms.iter().find(|(k, _)| k == id).map(|(_, f)| f)
    }

    pub fn element(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|(k, _)| k == id).map(|(_, e)| e)
    }

    /// Registers `g` unless an equal graph is present; returns its id.
    pub fn intern_graph(&mut self, g: &Arc<Graph>) -> String {
        if let Some((id, _)) = self.graphs.iter().find(|(_, h)| **h == **g) {
            return id.clone();
        }
        let id = (0..).map(|k| format!("g{k}")).find(|id| self.graph(id).is_none()).expect("fresh id");
        self.graphs.push((id.clone(), g.clone()));
        id
    }

    pub fn intern_block(&mut self, b: &Arc<Block>) -> String {
        if let Some((id, _)) = self.blocks.iter().find(|(_, h)| **h == **b) {
            return id.clone();
        }
        for (g, _) in b.summands() {
            self.intern_graph(g);
        }
        let id = (0..).map(|k| format!("A{k}")).find(|id| self.block(id).is_none()).expect("fresh id");
        self.blocks.push((id.clone(), b.clone()));
        id
    }

    pub fn add_form(&mut self, id: &str, f: DiagonalForm) {
        self.intern_block(f.source());
        self.intern_block(f.target());
        for td in f.targets() {
            self.intern_graph(td.tree.base());
        }
        self.forms.retain(|(k, _)| k != id);
        self.forms.push((id.to_string(), f));
    }

    pub fn add_element(&mut self, id: &str, a: Element) {
        self.intern_block(a.block());
        self.elements.retain(|(k, _)| k != id);
        self.elements.push((id.to_string(), a));
    }

    pub fn set_system(&mut self, sys: GenDiagSystem) {
        fn walk(m: &mut Model, s: &Space) {
            match s {
                Space::Graph(g) => {
                    m.intern_graph(g);
                }
                Space::Product(fs) => fs.iter().for_each(|f| walk(m, f)),
            }
        }
        fn walk_map(m: &mut Model, f: &MapExpr) {
            walk(m, &f.domain());
            walk(m, &f.codomain());
            if let MapExpr::Composite(a, b) = f {
                walk_map(m, a);
                walk_map(m, b);
            }
        }
        for l in sys.levels() {
            for c in &l.components {
                walk(self, c.space());
            }
        }
        for s in sys.steps() {
            for e in &s.entries {
                walk_map(self, &e.map);
            }
        }
        self.system = Some(sys);
    }
}

fn graph_id(m: &Model, g: &Graph) -> String {
    m.graphs.iter().find(|(_, h)| **h == *g).map(|(id, _)| id.clone()).expect("interned graph")
}

fn space_doc(m: &Model, s: &Space) -> SpaceDoc {
    match s {
        Space::Graph(g) => SpaceDoc::Graph(graph_id(m, g)),
        Space::Product(fs) => match fs.first() {
            Some(Space::Graph(g)) if fs.iter().all(|f| f == &fs[0]) => SpaceDoc::Power { graph: graph_id(m, g), power: fs.len() },
            _ => SpaceDoc::Product { product: fs.iter().map(|f| space_doc(m, f)).collect() },
        },
    }
}

fn space_from(m: &Model, d: &SpaceDoc, path: &str) -> Result<Space, CliError> {
    let graph = |id: &String| m.graph(id).cloned().ok_or_else(|| dangling(path, "graph", id));
    match d {
        SpaceDoc::Graph(id) => Ok(Space::Graph(graph(id)?)),
        SpaceDoc::Power { graph: id, power } => {
            if *power == 0 {
                return Err(schema(path, "power must be positive"));
            }
            Ok(Space::power(graph(id)?, *power))
        }
        SpaceDoc::Product { product } => {
            if product.is_empty() {
                return Err(schema(path, "empty product"));
            }
            Ok(Space::Product(
                product.iter().enumerate().map(|(i, f)| space_from(m, f, &format!("{path}.product[{i}]"))).collect::<Result<_, _>>()?,
            ))
        }
    }
}

fn map_from(m: &Model, d: &MapDoc, domain: &Space, codomain: &Space, path: &str) -> Result<MapExpr, CliError> {
    let f = match d {
        MapDoc::Identity => {
            if domain != codomain {
                return Err(schema(path, "identity between different spaces"));
            }
            MapExpr::identity(domain.clone())
        }
        MapDoc::Constant { point } => {
            let p = space_point(codomain, point, &format!("{path}.point"))?;
            MapExpr::constant(domain.clone(), codomain.clone(), p).map_err(|e| schema(path, e))?
        }
        MapDoc::Projection { indices } => MapExpr::projection(domain.clone(), indices.clone()).map_err(|e| schema(path, e))?,
        MapDoc::Pl { knots } => match (domain, codomain) {
            (Space::Graph(a), Space::Graph(b)) => MapExpr::pl(pl_from_knots(a, b, knots, path)?),
            _ => return Err(schema(path, "piecewise-linear maps need graph domain and codomain")),
        },
        MapDoc::Composite { via, outer, inner } => {
            let via = space_from(m, via, &format!("{path}.via"))?;
            let g = map_from(m, inner, domain, &via, &format!("{path}.inner"))?;
            let f = map_from(m, outer, &via, codomain, &format!("{path}.outer"))?;
            MapExpr::Composite(Box::new(f), Box::new(g))
        }
    };
    if f.codomain() != *codomain {
        return Err(schema(path, format!("map lands in {}, expected {}", f.codomain().display(), codomain.display())));
    }
    Ok(f)
}

fn map_doc(m: &Model, f: &MapExpr) -> MapDoc {
    match f {
        MapExpr::Identity(_) => MapDoc::Identity,
        MapExpr::Constant { codomain, point, .. } => MapDoc::Constant { point: point_doc(codomain, point) },
        MapExpr::Projection { indices, .. } => MapDoc::Projection { indices: indices.clone() },
        MapExpr::Pl(p) => MapDoc::Pl { knots: pl_knots(p) },
        MapExpr::Composite(a, b) => {
            MapDoc::Composite { via: space_doc(m, &b.codomain()), outer: Box::new(map_doc(m, a)), inner: Box::new(map_doc(m, b)) }
        }
    }
}

fn unique<'a>(ids: impl Iterator<Item = &'a String>, what: &str) -> Result<(), CliError> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CliError::Schema(format!("duplicate {what} id {id:?}")));
        }
    }
    Ok(())
}

pub fn from_doc(doc: &Doc) -> Result<Model, CliError> {
    if doc.version != VERSION {
        return Err(CliError::Schema(format!("version: expected {VERSION}, found {}", doc.version)));
    }
    unique(doc.graphs.iter().map(|g| &g.id), "graph")?;
    unique(doc.blocks.iter().map(|g| &g.id), "block")?;
    unique(doc.diagonal_forms.iter().map(|g| &g.id), "diagonal form")?;
    unique(doc.elements.iter().map(|g| &g.id), "element")?;
    let mut m = Model::default();
    for (i, g) in doc.graphs.iter().enumerate() {
        let path = format!("graphs[{i}]");
        let edges = g
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| Ok((e.name.clone(), e.tail.clone(), e.head.clone(), rational(&format!("{path}.edges[{k}].length"), &e.length)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        if g.vertices.iter().chain(g.edges.iter().map(|e| &e.name)).any(|n| n.contains('@')) {
            return Err(schema(&path, "names may not contain '@'"));
        }
        let graph = Graph::new(g.vertices.clone(), edges).map_err(|e| schema(&path, e))?;
        m.graphs.push((g.id.clone(), Arc::new(graph)));
    }
    for (i, b) in doc.blocks.iter().enumerate() {
        let path = format!("blocks[{i}]");
        let summands = b
            .summands
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let g = m.graph(&s.graph).ok_or_else(|| dangling(&format!("{path}.summands[{k}].graph"), "graph", &s.graph))?;
                Ok((g.clone(), s.size))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        m.blocks.push((b.id.clone(), Arc::new(Block::new(summands).map_err(|e| schema(&path, e))?)));
    }
    for (i, f) in doc.diagonal_forms.iter().enumerate() {
        let path = format!("diagonal_forms[{i}]");
        let src = m.block(&f.source).cloned().ok_or_else(|| dangling(&format!("{path}.source"), "block", &f.source))?;
        let tgt = m.block(&f.target).cloned().ok_or_else(|| dangling(&format!("{path}.target"), "block", &f.target))?;
        if f.targets.len() != tgt.len() {
            return Err(schema(&path, format!("{} targets listed, block {} has {} summands", f.targets.len(), f.target, tgt.len())));
        }
        let mut targets = Vec::new();
        for (j, td) in f.targets.iter().enumerate() {
            let tp = format!("{path}.targets[{j}]");
            let base = tgt.base(j).clone();
            let tree = match td.radius {
                None => CoveringTree::identity(base),
                Some(r) => build_covering_tree(base, r),
            }
            .map_err(|e| schema(&tp, e))?;
            let mut entries = Vec::new();
            for (s, e) in td.entries.iter().enumerate() {
                let ep = format!("{tp}.entries[{s}]");
                if e.source >= src.len() {
                    return Err(schema(&ep, format!("source summand {} out of range", e.source)));
                }
                let map = pl_from_knots(tree.tree(), src.base(e.source), &e.knots, &ep)?;
                entries.push(Entry { source: e.source, map });
            }
            targets.push(TargetData { tree, entries });
        }
        m.forms.push((f.id.clone(), DiagonalForm::new(src, tgt, targets).map_err(|e| schema(&path, e))?));
    }
    for (i, a) in doc.elements.iter().enumerate() {
        let path = format!("elements[{i}]");
        let b = m.block(&a.block).cloned().ok_or_else(|| dangling(&format!("{path}.block"), "block", &a.block))?;
        let mut knots = Vec::new();
        for (j, per_edge) in a.values.iter().enumerate() {
            let mut edges = Vec::new();
            for (e, ks) in per_edge.iter().enumerate() {
                let mut out = Vec::new();
                for (k, (t, rows)) in ks.iter().enumerate() {
                    let p = format!("{path}.values[{j}][{e}][{k}]");
                    let rows = rows
                        .iter()
                        .map(|r| r.iter().map(|x| parse_complex(x).ok_or_else(|| schema(&p, format!("bad matrix entry {x:?}")))).collect())
                        .collect::<Result<Vec<Vec<C>>, CliError>>()?;
                    if rows.iter().any(|r| r.len() != rows.len()) {
                        return Err(schema(&p, "matrix is not square"));
                    }
                    out.push((rational(&p, t)?, Mat::from_rows(rows)));
                }
                edges.push(out);
            }
            knots.push(edges);
        }
        m.elements.push((a.id.clone(), Element::new(b, knots).map_err(|e| schema(&path, e))?));
    }
    if let Some(sd) = &doc.gendiag_system {
        let mut levels = Vec::new();
        for (n, l) in sd.levels.iter().enumerate() {
            let mut comps = Vec::new();
            for (c, comp) in l.components.iter().enumerate() {
                let path = format!("gendiag_system.levels[{n}].components[{c}]");
                let space = space_from(&m, &comp.space, &format!("{path}.space"))?;
                let handle = match &comp.samples {
                    None => SpaceHandle::with_default_samples(space),
                    Some(ps) => {
                        let pts = ps
                            .iter()
                            .enumerate()
                            .map(|(k, p)| space_point(&space, p, &format!("{path}.samples[{k}]")))
                            .collect::<Result<Vec<_>, _>>()?;
                        SpaceHandle::new(space, pts)
                    }
                }
                .map_err(|e| schema(&path, e))?;
                comps.push(handle);
            }
            levels.push(Level { components: comps, rank: l.rank });
        }
        let mut steps = Vec::new();
        for (n, st) in sd.steps.iter().enumerate() {
            let mut entries = Vec::new();
            for (y, e) in st.entries.iter().enumerate() {
                let path = format!("gendiag_system.steps[{n}].entries[{y}]");
                let comp = |lv: usize, c: usize| levels.get(lv).and_then(|l: &Level| l.components.get(c)).map(|h| h.space().clone());
                let dom = comp(n + 1, e.target).ok_or_else(|| schema(&path, "target component out of range"))?;
                let cod = comp(n, e.source).ok_or_else(|| schema(&path, "source component out of range"))?;
                let map = map_from(&m, &e.map, &dom, &cod, &format!("{path}.map"))?;
                let bundle = match &e.bundle {
                    BundleDoc::Slot { slot } => Bundle::Trivial { slot: *slot },
                    BundleDoc::Line { line } => Bundle::Line { tag: line.clone() },
                };
                entries.push(YEntry { map, source: e.source, target: e.target, bundle });
            }
            steps.push(Step { s: st.s, entries });
        }
        m.system = Some(GenDiagSystem::new(levels, steps).map_err(|e| schema("gendiag_system", e))?);
    }
    if let Some(p) = &doc.generators {
        for (k, id) in p.blocks.iter().enumerate() {
            m.block(id).ok_or_else(|| dangling(&format!("generators.blocks[{k}]"), "block", id))?;
        }
        for (name, ids) in [("phi", &p.phi), ("psi", &p.psi)] {
            for (k, id) in ids.iter().enumerate() {
                m.form(id).ok_or_else(|| dangling(&format!("generators.{name}[{k}]"), "diagonal form", id))?;
            }
        }
        for (n, set) in p.sets.iter().enumerate() {
            for (k, id) in set.iter().enumerate() {
                m.element(id).ok_or_else(|| dangling(&format!("generators.sets[{n}][{k}]"), "element", id))?;
            }
        }
        m.pair = Some(Pair { blocks: p.blocks.clone(), phi: p.phi.clone(), psi: p.psi.clone(), sets: p.sets.clone(), close: p.close });
    }
    for (key, v) in [("delta", &doc.run.delta), ("rho", &doc.run.rho), ("epsilon", &doc.run.epsilon)] {
        if let Some(s) = v {
            rational(&format!("run.{key}"), s)?;
        }
    }
    if let Some(f) = &doc.run.form {
        m.form(f).ok_or_else(|| dangling("run.form", "diagonal form", f))?;
    }
    m.run = doc.run.clone();
    Ok(m)
}

pub fn to_doc(m: &Model) -> Doc {
    let graphs = m
        .graphs
        .iter()
        .map(|(id, g)| GraphDoc {
            id: id.clone(),
            vertices: g.vertex_names().to_vec(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeDoc {
                    name: e.name.clone(),
                    tail: g.vertex_name(e.tail).to_string(),
                    head: g.vertex_name(e.head).to_string(),
                    length: fmt_q(&e.length),
                })
                .collect(),
        })
        .collect();
    let blocks = m
        .blocks
        .iter()
        .map(|(id, b)| BlockDoc {
            id: id.clone(),
            summands: b.summands().iter().map(|(g, n)| SummandDoc { graph: graph_id(m, g), size: *n }).collect(),
        })
        .collect();
    let block_id = |b: &Block| m.blocks.iter().find(|(_, x)| **x == *b).map(|(id, _)| id.clone()).expect("interned block");
    let diagonal_forms = m
        .forms
        .iter()
        .map(|(id, f)| FormDoc {
            id: id.clone(),
            source: block_id(f.source()),
            target: block_id(f.target()),
            targets: f
                .targets()
                .iter()
                .map(|td| TargetDoc {
                    radius: tree_radius(&td.tree).expect("covering tree of bounded radius"),
                    entries: td.entries.iter().map(|e| EntryDoc { source: e.source, knots: pl_knots(&e.map) }).collect(),
                })
                .collect(),
        })
        .collect();
    let elements = m
        .elements
        .iter()
        .map(|(id, a)| {
            let b = a.block();
            let values = (0..b.len())
                .map(|j| (0..b.base(j).edge_count()).map(|e| a.knots(j, e).iter().map(|(t, x)| (fmt_q(t), mat_doc(x))).collect()).collect())
                .collect();
            ElementDoc { id: id.clone(), block: block_id(b), values }
        })
        .collect();
    let gendiag_system = m.system.as_ref().map(|sys| SystemDoc {
        levels: sys
            .levels()
            .iter()
            .map(|l| LevelDoc {
                rank: l.rank,
                components: l
                    .components
                    .iter()
                    .map(|h| {
                        let default = h.space().default_samples();
                        ComponentDoc {
                            space: space_doc(m, h.space()),
                            samples: (h.samples() != default.as_slice())
                                .then(|| h.samples().iter().map(|p| point_doc(h.space(), p)).collect()),
                        }
                    })
                    .collect(),
            })
            .collect(),
        steps: sys
            .steps()
            .iter()
            .map(|s| StepDoc {
                s: s.s,
                entries: s
                    .entries
                    .iter()
                    .map(|e| YDoc {
                        source: e.source,
                        target: e.target,
                        map: map_doc(m, &e.map),
                        bundle: match &e.bundle {
                            Bundle::Trivial { slot } => BundleDoc::Slot { slot: *slot },
                            Bundle::Line { tag } => BundleDoc::Line { line: tag.clone() },
                        },
                    })
                    .collect(),
            })
            .collect(),
    });
    let generators = m.pair.as_ref().map(|p| PairDoc {
        blocks: p.blocks.clone(),
        phi: p.phi.clone(),
        psi: p.psi.clone(),
        sets: p.sets.clone(),
        close: p.close,
    });
    Doc { version: VERSION, graphs, blocks, diagonal_forms, elements, gendiag_system, generators, run: m.run.clone() }
}

pub fn parse_str(text: &str) -> Result<Model, CliError> {
    let doc: Doc = toml::from_str(text).map_err(|e| CliError::Schema(e.to_string().trim_end().to_string()))?;
    from_doc(&doc)
}

pub fn parse_file(path: &std::path::Path) -> Result<Model, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_str(&text).map_err(|e| e.in_file(path))
}

pub fn serialize(m: &Model) -> String {
    toml::to_string(&to_doc(m)).expect("document serializes")
}
