//! Vertex-level encoding of the sign clusters of the metric-graph free field
//! and the topological event that no cluster carries a loop of holonomy -1.
//!
//! Given the vertex values, the field along an edge is an independent
//! Brownian bridge of length 1/C(e). An edge is *open* when that bridge has
//! no zero; for endpoint values `a, b` of equal sign this happens with
//! probability `1 - exp(-2 C(e) a b)`. Open edges and vertex signs determine
//! which vertices share a sign cluster.

use std::collections::VecDeque;

use rand::Rng;

use crate::cover::{lift_edge, Sheet};
use crate::error::{Error, Result};
use crate::gff::{GffKind, GffSample};
use crate::network::{ElectricalNetwork, GaugeField};
use crate::sign::Sign;

/// Union-find where each element stores its parity relative to its parent;
/// `union(a, b, odd)` records that `a` and `b` have opposite colors iff `odd`.
#[derive(Debug, Clone)]
pub struct ParityUnionFind {
    parent: Vec<usize>,
    parity: Vec<bool>,
    rank: Vec<u8>,
}

impl ParityUnionFind {
    pub fn new(n: usize) -> ParityUnionFind {
        ParityUnionFind { parent: (0..n).collect(), parity: vec![false; n], rank: vec![0; n] }
    }

    /// Root of `x` and the parity of `x` relative to it.
    pub fn find(&mut self, x: usize) -> (usize, bool) {
        let mut path = Vec::new();
        let mut r = x;
        while self.parent[r] != r {
            path.push(r);
            r = self.parent[r];
        }
        // compress, accumulating parities from the top of the path down
        let mut acc = false;
        for &v in path.iter().rev() {
            acc ^= self.parity[v];
            self.parity[v] = acc;
            self.parent[v] = r;
        }
        (r, if path.is_empty() { false } else { self.parity[x] })
    }

    /// Returns false when the constraint contradicts earlier ones.
    pub fn union(&mut self, a: usize, b: usize, odd: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return (pa ^ pb) == odd;
        }
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[lo] = hi;
        self.parity[lo] = pa ^ pb ^ odd;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        true
    }
}

/// Vertex signs and open edges of one sample, with the induced partition of
/// interior vertices into clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfiguration {
    vertex_sign: Vec<i8>,
    edge_open: Vec<bool>,
    component_of: Vec<Option<usize>>,
    components: Vec<Vec<usize>>,
}

impl ClusterConfiguration {
    /// Checks that every open edge joins two interior vertices of equal
    /// nonzero sign, then computes the clusters.
    pub fn new(net: &ElectricalNetwork, vertex_sign: Vec<i8>, edge_open: Vec<bool>) -> Result<ClusterConfiguration> {
        if vertex_sign.len() != net.num_vertices() {
            return Err(Error::SizeMismatch {
                what: "vertices",
                expected: net.num_vertices(),
                found: vertex_sign.len(),
            });
        }
        if edge_open.len() != net.num_edges() {
            return Err(Error::SizeMismatch { what: "edges", expected: net.num_edges(), found: edge_open.len() });
        }
        for v in net.boundary() {
            if vertex_sign[v] != 0 {
                return Err(Error::InvalidParameter(format!(
                    "boundary vertex \"{}\" has nonzero sign",
                    net.vertex_id(v)
                )));
            }
        }
        for (k, e) in net.edges().iter().enumerate() {
            let ok = vertex_sign[e.u] == vertex_sign[e.v] && vertex_sign[e.u] != 0;
            if edge_open[k] && !ok {
                return Err(Error::InvalidParameter(format!("edge \"{}\" is open across a sign change", e.id)));
            }
        }
        let mut component_of = vec![None; net.num_vertices()];
        let mut components = Vec::new();
        for &s in net.interior() {
            if component_of[s].is_some() {
                continue;
            }
            let c = components.len();
            component_of[s] = Some(c);
            let mut members = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &(y, e) in net.neighbors(x) {
                    if edge_open[e] && component_of[y].is_none() {
                        component_of[y] = Some(c);
                        members.push(y);
                        queue.push_back(y);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        Ok(ClusterConfiguration { vertex_sign, edge_open, component_of, components })
    }

    /// -1, 0 or +1 per vertex (0 on the boundary).
    pub fn vertex_sign(&self) -> &[i8] {
        &self.vertex_sign
    }

    pub fn edge_open(&self) -> &[bool] {
        &self.edge_open
    }

    pub fn is_open(&self, e: usize) -> bool {
        self.edge_open[e]
    }

    pub fn component_of(&self, v: usize) -> Option<usize> {
        self.component_of[v]
    }

    /// Clusters as sorted lists of interior vertices, ordered by their
    /// smallest member.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn same_cluster(&self, x: usize, y: usize) -> bool {
        matches!((self.component_of[x], self.component_of[y]), (Some(a), Some(b)) if a == b)
    }
}

/// Probability that a Brownian bridge of length 1/C from `a` to `b` stays
/// away from zero.
pub fn bridge_survival_probability(conductance: f64, a: f64, b: f64) -> f64 {
    let ab = a * b;
    if ab > 0.0 {
        -(-2.0 * conductance * ab).exp_m1()
    } else {
        0.0
    }
}

/// Cluster configuration from raw vertex values (boundary entries ignored).
pub fn sample_clusters_from_values<R: Rng + ?Sized>(
    net: &ElectricalNetwork,
    values: &[f64],
    rng: &mut R,
) -> ClusterConfiguration {
    let vertex_sign: Vec<i8> = (0..net.num_vertices())
        .map(|v| if net.is_boundary(v) { 0 } else { Sign::of(values[v]).map_or(0, Sign::to_i8) })
        .collect();
    let edge_open = net
        .edges()
        .iter()
        .map(|e| {
            if net.is_boundary(e.u) || net.is_boundary(e.v) {
                return false;
            }
            let p = bridge_survival_probability(e.conductance, values[e.u], values[e.v]);
            // always draw, so the stream position does not depend on the signs
            let u: f64 = rng.random();
            u < p
        })
        .collect();
    ClusterConfiguration::new(net, vertex_sign, edge_open).expect("sampled configuration is consistent")
}

/// Samples which edges of the metric-graph field carry no zero, given an
/// untwisted vertex sample.
pub fn sample_cluster_configuration<R: Rng + ?Sized>(
    gff: &GffSample,
    net: &ElectricalNetwork,
    rng: &mut R,
) -> Result<ClusterConfiguration> {
    if gff.kind != GffKind::Untwisted {
        return Err(Error::InvalidParameter("cluster sampling needs an untwisted field sample".into()));
    }
    if gff.values.len() != net.num_vertices() {
        return Err(Error::SizeMismatch { what: "vertices", expected: net.num_vertices(), found: gff.values.len() });
    }
    Ok(sample_clusters_from_values(net, &gff.values, rng))
}

/// True iff every cluster, with edge signs σ on its open edges, is balanced,
/// i.e. no cluster contains a cycle of holonomy -1.
pub fn detect_event(config: &ClusterConfiguration, net: &ElectricalNetwork, gauge: &GaugeField) -> bool {
    let mut uf = ParityUnionFind::new(net.num_vertices());
    net.edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| config.edge_open[*k])
        .all(|(k, e)| uf.union(e.u, e.v, gauge.sign(k).is_minus()))
}

/// Same verdict as [`detect_event`], computed by lifting the open subgraph
/// to the double cover: a cluster is balanced iff its preimage is not
/// connected, i.e. no vertex is joined to its own deck image.
pub fn detect_event_by_cover(config: &ClusterConfiguration, net: &ElectricalNetwork, gauge: &GaugeField) -> bool {
    let n = net.num_vertices();
    let node = |v: usize, s: Sheet| 2 * v + usize::from(s == Sheet::Two);
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (k, e) in net.edges().iter().enumerate() {
        if !config.edge_open[k] {
            continue;
        }
        for ((a, sa), (b, sb)) in lift_edge(e.u, e.v, gauge.sign(k)) {
            let (ra, rb) = (find(&mut parent, node(a, sa)), find(&mut parent, node(b, sb)));
            parent[ra] = rb;
        }
    }
    net.interior().iter().all(|&v| find(&mut parent, node(v, Sheet::One)) != find(&mut parent, node(v, Sheet::Two)))
}

/// Sign multipliers τ making the flipped field τφ σ-harmonious on open
/// edges: τ(u) σ(u,v) τ(v) = 1 whenever {u,v} is open. Within each cluster
/// the smallest vertex keeps its sign (τ = +1); clusters without an open -1
/// edge are left untouched. Boundary vertices get +1.
pub fn sign_flip_transform(
    config: &ClusterConfiguration,
    net: &ElectricalNetwork,
    gauge: &GaugeField,
) -> Result<Vec<Sign>> {
    let mut tau = vec![Sign::Plus; net.num_vertices()];
    for comp in &config.components {
        let root = comp[0];
        let mut queue = VecDeque::from([root]);
        let mut visited = std::collections::HashSet::from([root]);
        while let Some(x) = queue.pop_front() {
            for &(y, e) in net.neighbors(x) {
                if !config.edge_open[e] {
                    continue;
                }
                let want = tau[x] * gauge.sign(e);
                if visited.insert(y) {
                    tau[y] = want;
                    queue.push_back(y);
                } else if tau[y] != want {
                    return Err(Error::NotInEvent);
                }
            }
        }
    }
    Ok(tau)
}
