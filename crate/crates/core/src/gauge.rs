//! Holonomy, gauge transformations and gauge equivalence.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::network::{ElectricalNetwork, GaugeField, VertexSigns};
use crate::sign::Sign;

/// A nearest-neighbor path given by vertex indices. A loop is a path whose
/// first and last vertices coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretePath {
    vertices: Vec<usize>,
    edges: Vec<usize>,
}

impl DiscretePath {
    pub fn new(net: &ElectricalNetwork, vertices: Vec<usize>) -> Result<DiscretePath> {
        if vertices.is_empty() {
            return Err(Error::EmptyPath);
        }
        let edges = vertices
            .windows(2)
            .map(|w| {
                net.edge_between(w[0], w[1])
                    .ok_or_else(|| Error::NotAdjacent(net.vertex_id(w[0]).to_string(), net.vertex_id(w[1]).to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscretePath { vertices, edges })
    }

    pub fn from_ids(net: &ElectricalNetwork, ids: &[&str]) -> Result<DiscretePath> {
        let vertices = ids.iter().map(|id| net.vertex_index(id)).collect::<Result<Vec<_>>>()?;
        Self::new(net, vertices)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Edge indices traversed, in order.
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn is_loop(&self) -> bool {
        self.vertices.first() == self.vertices.last()
    }

    pub fn reversed(&self) -> DiscretePath {
        DiscretePath {
            vertices: self.vertices.iter().rev().copied().collect(),
            edges: self.edges.iter().rev().copied().collect(),
        }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn concat(&self, other: &DiscretePath) -> Option<DiscretePath> {
        if self.vertices.last() != other.vertices.first() {
            return None;
        }
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices[1..]);
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Some(DiscretePath { vertices, edges })
    }
}

/// Product of σ over the traversed edges.
pub fn holonomy(gauge: &GaugeField, path: &DiscretePath) -> Sign {
    path.edges.iter().map(|&e| gauge.sign(e)).product()
}

/// Holonomy of a closed vertex sequence given without the repeated endpoint,
/// e.g. a loop skeleton `[x, y, z]` standing for x → y → z → x.
pub fn cyclic_holonomy(net: &ElectricalNetwork, gauge: &GaugeField, cycle: &[usize]) -> Result<Sign> {
    let n = cycle.len();
    if n < 2 {
        return Ok(Sign::Plus);
    }
    (0..n)
        .map(|i| {
            let (a, b) = (cycle[i], cycle[(i + 1) % n]);
            net.edge_between(a, b)
                .map(|e| gauge.sign(e))
                .ok_or_else(|| Error::NotAdjacent(net.vertex_id(a).to_string(), net.vertex_id(b).to_string()))
        })
        .product()
}

/// (σ̂·σ)(x,y) = σ̂(x) σ(x,y) σ̂(y).
pub fn apply_gauge_transform(net: &ElectricalNetwork, vs: &VertexSigns, gauge: &GaugeField) -> Result<GaugeField> {
    gauge.check(net)?;
    VertexSigns::from_signs(net, vs.signs().to_vec())?;
    let signs = net.edges().iter().zip(gauge.signs()).map(|(e, &s)| vs.sign(e.u) * s * vs.sign(e.v)).collect();
    GaugeField::from_signs(net, signs)
}

/// Breadth-first spanning tree from vertex 0 (the smallest id): for each
/// vertex its parent and the connecting edge, in visiting order.
fn bfs_tree(net: &ElectricalNetwork) -> Vec<(usize, Option<(usize, usize)>)> {
    let mut seen = vec![false; net.num_vertices()];
    let mut order = Vec::with_capacity(net.num_vertices());
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    order.push((0, None));
    while let Some(x) = queue.pop_front() {
        for &(y, e) in net.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                order.push((y, Some((x, e))));
                queue.push_back(y);
            }
        }
    }
    order
}

/// Looks for σ̂ with `other = σ̂·gauge`. The returned certificate is the one
/// with σ̂ = +1 at the smallest vertex id; the only other one is its negation.
pub fn are_gauge_equivalent(
    net: &ElectricalNetwork,
    gauge: &GaugeField,
    other: &GaugeField,
) -> Result<Option<VertexSigns>> {
    gauge.check(net)?;
    other.check(net)?;
    // σ̂(x) = hol^σ(tree path) · hol^σ'(tree path), accumulated edge by edge.
    let mut hat = vec![Sign::Plus; net.num_vertices()];
    for (v, link) in bfs_tree(net) {
        if let Some((parent, e)) = link {
            hat[v] = hat[parent] * gauge.sign(e) * other.sign(e);
        }
    }
    let ok = net.edges().iter().enumerate().all(|(k, e)| hat[e.u] * gauge.sign(k) * hat[e.v] == other.sign(k));
    if ok {
        Ok(Some(VertexSigns::from_signs(net, hat)?))
    } else {
        Ok(None)
    }
}

/// A gauge field is trivial when it is gauge equivalent to all +1. Returns
/// the certificate σ̂ with σ = σ̂·(+1) in that case.
pub fn is_trivial(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<Option<VertexSigns>> {
    are_gauge_equivalent(net, &GaugeField::trivial(net), gauge)
}
