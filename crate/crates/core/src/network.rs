//! Electrical networks with a boundary, gauge fields over their edges, and
//! edge subdivision.
//!
//! Vertices are identified by opaque string ids. Internally they are kept in
//! sorted id order, so vertex index 0 is always the smallest id and the
//! interior ordering used by every matrix is the sorted order of interior ids.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sign::Sign;

/// On-disk description of a network, field names fixed by the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub vertices: Vec<String>,
    pub boundary: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub u: String,
    pub v: String,
    pub conductance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Sign>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    DuplicateVertex(String),
    UnknownVertex(String),
    EmptyBoundary,
    EmptyInterior,
    SelfLoop(String),
    DuplicateEdge(String),
    DuplicateEdgeId(String),
    NonPositiveConductance(String),
    NonFiniteConductance(String),
    Disconnected,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::DuplicateVertex(v) => write!(f, "duplicate vertex \"{v}\""),
            ValidationIssue::UnknownVertex(v) => write!(f, "unknown vertex \"{v}\""),
            ValidationIssue::EmptyBoundary => write!(f, "empty boundary"),
            ValidationIssue::EmptyInterior => write!(f, "empty interior"),
            ValidationIssue::SelfLoop(e) => write!(f, "self-loop on edge \"{e}\""),
            ValidationIssue::DuplicateEdge(e) => write!(f, "duplicate edge \"{e}\""),
            ValidationIssue::DuplicateEdgeId(e) => write!(f, "duplicate edge id \"{e}\""),
            ValidationIssue::NonPositiveConductance(e) => {
                write!(f, "non-positive conductance on edge \"{e}\"")
            }
            ValidationIssue::NonFiniteConductance(e) => {
                write!(f, "non-finite conductance on edge \"{e}\"")
            }
            ValidationIssue::Disconnected => write!(f, "graph is disconnected"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.issues.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        write!(f, "{}", self.messages().join("; "))
    }
}

fn edge_label(index: usize, record: &EdgeRecord) -> String {
    record.id.clone().unwrap_or_else(|| format!("e{}", index + 1))
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<NetworkFile> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    /// Checks every network invariant and lists all violations.
    pub fn validate(&self) -> ValidationReport {
        self.validate_with(true)
    }

    fn validate_with(&self, require_connected: bool) -> ValidationReport {
        let mut issues = Vec::new();
        let mut index = HashMap::new();
        for v in &self.vertices {
            if index.insert(v.as_str(), index.len()).is_some() {
                issues.push(ValidationIssue::DuplicateVertex(v.clone()));
            }
        }
        let mut boundary = HashSet::new();
        for b in &self.boundary {
            if !index.contains_key(b.as_str()) {
                issues.push(ValidationIssue::UnknownVertex(b.clone()));
            }
            boundary.insert(b.as_str());
        }
        if boundary.is_empty() {
            issues.push(ValidationIssue::EmptyBoundary);
        }
        if index.keys().all(|v| boundary.contains(v)) {
            issues.push(ValidationIssue::EmptyInterior);
        }

        let mut pairs = HashSet::new();
        let mut ids = HashSet::new();
        let mut dsu: Vec<usize> = (0..index.len()).collect();
        fn find(dsu: &mut [usize], mut x: usize) -> usize {
            while dsu[x] != x {
                dsu[x] = dsu[dsu[x]];
                x = dsu[x];
            }
            x
        }
        for (k, e) in self.edges.iter().enumerate() {
            let label = edge_label(k, e);
            if !ids.insert(label.clone()) {
                issues.push(ValidationIssue::DuplicateEdgeId(label.clone()));
            }
            if !e.conductance.is_finite() {
                issues.push(ValidationIssue::NonFiniteConductance(label.clone()));
            } else if e.conductance <= 0.0 {
                issues.push(ValidationIssue::NonPositiveConductance(label.clone()));
            }
            let (Some(&a), Some(&b)) = (index.get(e.u.as_str()), index.get(e.v.as_str())) else {
                for end in [&e.u, &e.v] {
                    if !index.contains_key(end.as_str()) {
                        issues.push(ValidationIssue::UnknownVertex(end.clone()));
                    }
                }
                continue;
            };
            if a == b {
                issues.push(ValidationIssue::SelfLoop(label));
                continue;
            }
            if !pairs.insert((a.min(b), a.max(b))) {
                issues.push(ValidationIssue::DuplicateEdge(label));
            }
            let (ra, rb) = (find(&mut dsu, a), find(&mut dsu, b));
            dsu[ra] = rb;
        }
        if require_connected && !index.is_empty() {
            let root = find(&mut dsu, 0);
            if (1..index.len()).any(|v| find(&mut dsu, v) != root) {
                issues.push(ValidationIssue::Disconnected);
            }
        }
        ValidationReport { issues }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub u: usize,
    pub v: usize,
    pub conductance: f64,
}

impl Edge {
    /// The endpoint opposite to `x`.
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// A finite connected graph with positive conductances and a non-empty
/// boundary. Immutable once built.
#[derive(Debug, Clone)]
pub struct ElectricalNetwork {
    name: Option<String>,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    is_boundary: Vec<bool>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, usize)>>,
    edge_index: HashMap<(usize, usize), usize>,
    interior: Vec<usize>,
    interior_pos: Vec<Option<usize>>,
    total_conductance: Vec<f64>,
}

impl ElectricalNetwork {
    /// Builds a validated network from its file description and returns the
    /// gauge field stored alongside (all +1 where `sigma` is absent).
    pub fn from_file(file: &NetworkFile) -> Result<(ElectricalNetwork, GaugeField)> {
        Self::build(file, true)
    }

    /// Same as [`from_file`](Self::from_file) but tolerates several connected
    /// components. Used for double covers of trivial gauge fields.
    pub(crate) fn build(file: &NetworkFile, require_connected: bool) -> Result<(ElectricalNetwork, GaugeField)> {
        let known: HashSet<&str> = file.vertices.iter().map(String::as_str).collect();
        for e in &file.edges {
            for end in [&e.u, &e.v] {
                if !known.contains(end.as_str()) {
                    return Err(Error::UnknownVertex(end.clone()));
                }
            }
        }
        let report = file.validate_with(require_connected);
        if !report.is_valid() {
            return Err(Error::Invalid(report));
        }

        let mut ids = file.vertices.clone();
        ids.sort();
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let mut is_boundary = vec![false; ids.len()];
        for b in &file.boundary {
            is_boundary[index[b]] = true;
        }
        let mut edges = Vec::with_capacity(file.edges.len());
        let mut signs = Vec::with_capacity(file.edges.len());
        let mut adjacency = vec![Vec::new(); ids.len()];
        let mut edge_index = HashMap::new();
        let mut total_conductance = vec![0.0; ids.len()];
        for (k, rec) in file.edges.iter().enumerate() {
            let (u, v) = (index[&rec.u], index[&rec.v]);
            adjacency[u].push((v, k));
            adjacency[v].push((u, k));
            edge_index.insert((u.min(v), u.max(v)), k);
            total_conductance[u] += rec.conductance;
            total_conductance[v] += rec.conductance;
            edges.push(Edge { id: edge_label(k, rec), u, v, conductance: rec.conductance });
            signs.push(rec.sigma.unwrap_or(Sign::Plus));
        }
        let interior: Vec<usize> = (0..ids.len()).filter(|&i| !is_boundary[i]).collect();
        let mut interior_pos = vec![None; ids.len()];
        for (p, &i) in interior.iter().enumerate() {
            interior_pos[i] = Some(p);
        }
        let net = ElectricalNetwork {
            name: file.name.clone(),
            ids,
            index,
            is_boundary,
            edges,
            adjacency,
            edge_index,
            interior,
            interior_pos,
            total_conductance,
        };
        Ok((net, GaugeField { signs }))
    }

    /// Parses and validates network JSON text.
    pub fn parse(text: &str) -> Result<(ElectricalNetwork, GaugeField)> {
        Self::from_file(&NetworkFile::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(ElectricalNetwork, GaugeField)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let file = NetworkFile::parse(&text).map_err(|e| match e {
            Error::Parse { context, message } => {
                Error::Parse { context: format!("{}: {}", path.display(), context), message }
            }
            other => other,
        })?;
        Self::from_file(&file)
    }

    /// File description of this network, with `gauge` written into the
    /// per-edge `sigma` fields when given.
    pub fn to_file(&self, gauge: Option<&GaugeField>) -> NetworkFile {
        NetworkFile {
            name: self.name.clone(),
            vertices: self.ids.clone(),
            boundary: self.boundary().map(|b| self.ids[b].clone()).collect(),
            edges: self
                .edges
                .iter()
                .enumerate()
                .map(|(k, e)| EdgeRecord {
                    id: Some(e.id.clone()),
                    u: self.ids[e.u].clone(),
                    v: self.ids[e.v].clone(),
                    conductance: e.conductance,
                    sigma: gauge.map(|g| g.sign(k)),
                })
                .collect(),
        }
    }

    pub fn to_json(&self, gauge: Option<&GaugeField>) -> String {
        serde_json::to_string_pretty(&self.to_file(gauge)).expect("network serializes")
    }

    /// The pendant-triangle network: boundary vertex `b` attached to `x`,
    /// and a triangle `x, y, z`, all conductances 1.
    pub fn pendant_triangle() -> ElectricalNetwork {
        let text = r#"{"name":"PT","vertices":["b","x","y","z"],"boundary":["b"],
            "edges":[{"id":"bx","u":"b","v":"x","conductance":1.0},
                     {"id":"xy","u":"x","v":"y","conductance":1.0},
                     {"id":"yz","u":"y","v":"z","conductance":1.0},
                     {"id":"zx","u":"z","v":"x","conductance":1.0}]}"#;
        Self::parse(text).expect("pendant triangle is valid").0
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn num_vertices(&self) -> usize {
        self.ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(|&v| self.is_boundary[v])
    }

    /// Interior vertices in sorted id order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    /// Position of `v` in the interior ordering.
    pub fn interior_position(&self, v: usize) -> Option<usize> {
        self.interior_pos[v]
    }

    pub fn interior_index(&self, id: &str) -> Result<usize> {
        let v = self.vertex_index(id)?;
        if self.is_boundary[v] {
            return Err(Error::NotInterior(id.to_string()));
        }
        Ok(v)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edge_by_id(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// `(neighbor, edge index)` pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    /// W(x): total conductance of the edges at `x`.
    pub fn total_conductance(&self, v: usize) -> f64 {
        self.total_conductance[v]
    }

    /// Connected components of the subgraph induced on the interior vertices.
    pub fn interior_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.ids.len()];
        let mut out = Vec::new();
        for &s in &self.interior {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &(y, _) in &self.adjacency[x] {
                    if !self.is_boundary[y] && !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                        queue.push_back(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// A ±1 label on every edge of a network, indexed like `network.edges()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GaugeField {
    signs: Vec<Sign>,
}

impl GaugeField {
    pub fn trivial(net: &ElectricalNetwork) -> GaugeField {
        GaugeField { signs: vec![Sign::Plus; net.num_edges()] }
    }

    pub fn from_signs(net: &ElectricalNetwork, signs: Vec<Sign>) -> Result<GaugeField> {
        let g = GaugeField { signs };
        g.check(net)?;
        Ok(g)
    }

    /// The gauge field that is -1 exactly on the listed edge ids.
    pub fn with_minus_edges(net: &ElectricalNetwork, ids: &[&str]) -> Result<GaugeField> {
        let mut signs = vec![Sign::Plus; net.num_edges()];
        for id in ids {
            let e = net.edge_by_id(id).ok_or_else(|| Error::InvalidParameter(format!("unknown edge id \"{id}\"")))?;
            signs[e] = Sign::Minus;
        }
        Ok(GaugeField { signs })
    }

    pub fn check(&self, net: &ElectricalNetwork) -> Result<()> {
        if self.signs.len() != net.num_edges() {
            return Err(Error::SizeMismatch { what: "edges", expected: net.num_edges(), found: self.signs.len() });
        }
        Ok(())
    }

    pub fn sign(&self, e: usize) -> Sign {
        self.signs[e]
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn is_all_plus(&self) -> bool {
        self.signs.iter().all(|s| *s == Sign::Plus)
    }

    pub fn minus_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.signs.iter().enumerate().filter(|(_, s)| s.is_minus()).map(|(e, _)| e)
    }
}

/// A ±1 label on every vertex; acts on gauge fields by conjugation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VertexSigns {
    signs: Vec<Sign>,
}

impl VertexSigns {
    pub fn all_plus(net: &ElectricalNetwork) -> VertexSigns {
        VertexSigns { signs: vec![Sign::Plus; net.num_vertices()] }
    }

    pub fn from_signs(net: &ElectricalNetwork, signs: Vec<Sign>) -> Result<VertexSigns> {
        if signs.len() != net.num_vertices() {
            return Err(Error::SizeMismatch { what: "vertices", expected: net.num_vertices(), found: signs.len() });
        }
        Ok(VertexSigns { signs })
    }

    /// All +1 except -1 at the listed vertex ids.
    pub fn flipping(net: &ElectricalNetwork, ids: &[&str]) -> Result<VertexSigns> {
        let mut signs = vec![Sign::Plus; net.num_vertices()];
        for id in ids {
            signs[net.vertex_index(id)?] = Sign::Minus;
        }
        Ok(VertexSigns { signs })
    }

    pub fn sign(&self, v: usize) -> Sign {
        self.signs[v]
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn negated(&self) -> VertexSigns {
        VertexSigns { signs: self.signs.iter().map(|s| -*s).collect() }
    }

    pub fn flipped_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.signs.iter().enumerate().filter(|(_, s)| s.is_minus()).map(|(v, _)| v)
    }
}

/// G^(N): every edge replaced by a path of `n` edges of conductance `n C(e)`.
#[derive(Debug, Clone)]
pub struct SubdividedNetwork {
    pub network: ElectricalNetwork,
    /// New edge index → original edge index.
    pub parent_edge: Vec<usize>,
    /// Original vertex index → its index in the subdivided network.
    pub parent_vertex: Vec<usize>,
    pub n: usize,
}

impl SubdividedNetwork {
    /// Index in the subdivided network of the `k`-th point (0..=n) along
    /// original edge `e`, counted from `edge.u`.
    pub fn point_on_edge(&self, original: &ElectricalNetwork, e: usize, k: usize) -> usize {
        let edge = original.edge(e);
        if k == 0 {
            self.parent_vertex[edge.u]
        } else if k == self.n {
            self.parent_vertex[edge.v]
        } else {
            self.network.vertex_index(&format!("{}#{}", edge.id, k)).expect("subdivision point exists")
        }
    }
}

/// Subdivides every edge into `n` (odd) edges. New vertices are named
/// `"<edge id>#k"` for k = 1..n-1 counted from the edge's `u` endpoint. On an
/// edge with σ(e) = -1 only the middle new edge carries -1.
pub fn subdivide(net: &ElectricalNetwork, gauge: &GaugeField, n: usize) -> Result<(SubdividedNetwork, GaugeField)> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(Error::InvalidSubdivision(n));
    }
    gauge.check(net)?;
    let mut file = NetworkFile {
        name: net.name.as_ref().map(|s| format!("{s}^({n})")),
        vertices: net.ids.clone(),
        boundary: net.boundary().map(|b| net.ids[b].clone()).collect(),
        edges: Vec::with_capacity(net.num_edges() * n),
    };
    let mut parent_edge = Vec::with_capacity(net.num_edges() * n);
    let middle = n / 2;
    for (e, edge) in net.edges.iter().enumerate() {
        let point = |k: usize| -> String {
            if k == 0 {
                net.ids[edge.u].clone()
            } else if k == n {
                net.ids[edge.v].clone()
            } else {
                format!("{}#{}", edge.id, k)
            }
        };
        for k in 1..n {
            file.vertices.push(point(k));
        }
        for k in 0..n {
            let sigma = if gauge.sign(e).is_minus() && k == middle { Sign::Minus } else { Sign::Plus };
            file.edges.push(EdgeRecord {
                id: Some(if n == 1 { edge.id.clone() } else { format!("{}#{}", edge.id, k + 1) }),
                u: point(k),
                v: point(k + 1),
                conductance: n as f64 * edge.conductance,
                sigma: Some(sigma),
            });
            parent_edge.push(e);
        }
    }
    let (network, new_gauge) = ElectricalNetwork::from_file(&file)?;
    let parent_vertex = net.ids.iter().map(|id| network.index[id]).collect();
    Ok((SubdividedNetwork { network, parent_edge, parent_vertex, n }, new_gauge))
}

/// Parameters for [`random_network`].
#[derive(Debug, Clone, Copy)]
pub struct RandomNetworkParams {
    pub n_interior: usize,
    pub n_boundary: usize,
    /// Edges added on top of a random spanning tree.
    pub extra_edges: usize,
    pub min_conductance: f64,
    pub max_conductance: f64,
}

impl Default for RandomNetworkParams {
    fn default() -> Self {
        RandomNetworkParams { n_interior: 6, n_boundary: 2, extra_edges: 4, min_conductance: 0.2, max_conductance: 3.0 }
    }
}

/// A random connected network: a random spanning tree plus extra random
/// non-duplicate edges. Interior vertices are `v00, v01, ...`, boundary
/// vertices `b0, b1, ...`.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, p: RandomNetworkParams) -> ElectricalNetwork {
    assert!(p.n_interior >= 1 && p.n_boundary >= 1);
    let mut ids: Vec<String> = (0..p.n_interior).map(|i| format!("v{i:02}")).collect();
    ids.extend((0..p.n_boundary).map(|i| format!("b{i}")));
    let n = ids.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = HashSet::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let child = order[k];
        pairs.insert((parent.min(child), parent.max(child)));
    }
    let max_edges = n * (n - 1) / 2;
    let target = (pairs.len() + p.extra_edges).min(max_edges);
    while pairs.len() < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let mut pairs: Vec<_> = pairs.into_iter().collect();
    pairs.sort_unstable();
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| EdgeRecord {
            id: Some(format!("e{k}")),
            u: ids[a].clone(),
            v: ids[b].clone(),
            conductance: rng.random_range(p.min_conductance..p.max_conductance),
            sigma: None,
        })
        .collect();
    let file =
        NetworkFile { name: Some("random".into()), boundary: ids[p.n_interior..].to_vec(), vertices: ids, edges };
    ElectricalNetwork::from_file(&file).expect("random network is valid").0
}

/// Independent fair ±1 signs on every edge.
pub fn random_gauge<R: Rng + ?Sized>(rng: &mut R, net: &ElectricalNetwork) -> GaugeField {
    let signs = (0..net.num_edges()).map(|_| if rng.random_bool(0.5) { Sign::Minus } else { Sign::Plus }).collect();
    GaugeField { signs }
}

/// Independent fair ±1 signs on every vertex.
pub fn random_vertex_signs<R: Rng + ?Sized>(rng: &mut R, net: &ElectricalNetwork) -> VertexSigns {
    let signs = (0..net.num_vertices()).map(|_| if rng.random_bool(0.5) { Sign::Minus } else { Sign::Plus }).collect();
    VertexSigns { signs }
}
