//! Grid-level sampler of the metric-graph field.
//!
//! Each edge e = {u, v} is a segment of length L = 1/C(e), parametrized by
//! the distance s from `u`. The field is the linear interpolation of the
//! vertex values plus an independent Brownian bridge W_e vanishing at both
//! ends. On an edge with σ(e) = -1 the far endpoint is seen through the
//! twist: on the first half the field is
//! `W(s) + C((L - s) φ(u) - s φ(v))`, on the second half its negative
//! `-W(s) + C(s φ(v) - (L - s) φ(u))`, so |field| is continuous and the
//! field jumps by a sign at the middle.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gff::GffSampler;
use crate::network::{ElectricalNetwork, GaugeField};
use crate::rng::substream;

/// The two one-sided limits of the field at the middle of a -1 edge;
/// `right == -left` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiddleLimits {
    pub position: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeTrace {
    pub edge: String,
    pub length: f64,
    /// Grid positions in (0, length), measured from the edge's `u` end.
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
    pub middle: Option<MiddleLimits>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricFieldGrid {
    pub vertex_values: Vec<f64>,
    pub edges: Vec<EdgeTrace>,
}

/// Samples the field at `j L / K`, `0 < j < K`, on every edge, where K is
/// the number of grid cells per edge.
#[derive(Debug, Clone)]
pub struct MetricFieldSampler {
    net: ElectricalNetwork,
    gauge: GaugeField,
    cells: usize,
    vertex_sampler: GffSampler,
}

impl MetricFieldSampler {
    pub fn new(net: &ElectricalNetwork, gauge: &GaugeField, cells: usize) -> Result<MetricFieldSampler> {
        if cells < 2 {
            return Err(Error::InvalidParameter(format!("grid needs at least 2 cells per edge, got {cells}")));
        }
        gauge.check(net)?;
        Ok(MetricFieldSampler {
            net: net.clone(),
            gauge: gauge.clone(),
            cells,
            vertex_sampler: GffSampler::twisted(net, gauge)?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MetricFieldGrid {
        let phi = self.vertex_sampler.sample(rng);
        let k = self.cells;
        let edges = self
            .net
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let c = edge.conductance;
                let len = 1.0 / c;
                let twisted = self.gauge.sign(e).is_minus();
                let half = len / 2.0;
                let mut times: Vec<f64> = (1..k).map(|j| j as f64 * len / k as f64).collect();
                // the middle is sampled on -1 edges even when it is not a grid point
                let mid_slot = twisted.then(|| {
                    if k.is_multiple_of(2) {
                        times[k / 2 - 1] = half;
                    } else {
                        times.insert(k / 2, half);
                    }
                    k / 2 - usize::from(k.is_multiple_of(2))
                });
                let bridge = sample_bridge(rng, len, &times);
                let (a, b) = (phi[edge.u], phi[edge.v]);
                let first = |s: f64, w: f64| w + c * ((len - s) * a - s * b);
                let mut positions = Vec::with_capacity(times.len());
                let mut values = Vec::with_capacity(times.len());
                let mut middle = None;
                for (i, (&s, &w)) in times.iter().zip(&bridge).enumerate() {
                    if Some(i) == mid_slot {
                        let left = first(s, w);
                        middle = Some(MiddleLimits { position: s, left, right: -left });
                        continue;
                    }
                    let value = if !twisted {
                        w + c * ((len - s) * a + s * b)
                    } else if s < half {
                        first(s, w)
                    } else {
                        -first(s, w)
                    };
                    positions.push(s);
                    values.push(value);
                }
                EdgeTrace { edge: edge.id.clone(), length: len, positions, values, middle }
            })
            .collect();
        MetricFieldGrid { vertex_values: phi, edges }
    }
}

/// Brownian bridge on [0, len] pinned to 0 at both ends, evaluated at the
/// increasing `times`, sampled point by point from its conditional law.
fn sample_bridge<R: Rng + ?Sized>(rng: &mut R, len: f64, times: &[f64]) -> Vec<f64> {
    let mut w = 0.0;
    let mut t_prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let rest = len - t_prev;
            let mean = w * (len - t) / rest;
            let var = (t - t_prev) * (len - t) / rest;
            let z: f64 = rng.sample(StandardNormal);
            w = mean + var.max(0.0).sqrt() * z;
            t_prev = t;
            w
        })
        .collect()
}

pub fn sample_metric_field(
    net: &ElectricalNetwork,
    gauge: &GaugeField,
    cells: usize,
    seed: u64,
) -> Result<MetricFieldGrid> {
    Ok(MetricFieldSampler::new(net, gauge, cells)?.sample(&mut substream(seed, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::subdivide;
    use crate::rng::run_batches;
    use crate::spectral::twisted_green;
    use crate::stats::{merge_all, Moments};

    fn pt() -> (ElectricalNetwork, GaugeField) {
        let net = ElectricalNetwork::pendant_triangle();
        let g = GaugeField::with_minus_edges(&net, &["yz"]).unwrap();
        (net, g)
    }

    /// Grid values at the subdivision points, read as a field on the
    /// subdivided network, must have that network's twisted Green matrix as
    /// covariance.
    fn check_against_subdivision(net: &ElectricalNetwork, g: &GaugeField, n: usize, seed: u64) {
        let (sub, sub_gauge) = subdivide(net, g, n).unwrap();
        let target = twisted_green(&sub.network, &sub_gauge).unwrap();
        let sampler = MetricFieldSampler::new(net, g, n).unwrap();
        let pts = sub.network.interior().to_vec();
        let m = pts.len();
        let to_sub = |grid: &MetricFieldGrid| {
            let mut out = vec![0.0; sub.network.num_vertices()];
            for v in 0..net.num_vertices() {
                out[sub.parent_vertex[v]] = grid.vertex_values[v];
            }
            for e in 0..net.num_edges() {
                for k in 1..n {
                    out[sub.point_on_edge(net, e, k)] = grid.edges[e].values[k - 1];
                }
            }
            out
        };
        let parts = run_batches(100_000, seed, 0, |rng, len| {
            let mut acc = vec![Moments::default(); m * m];
            for _ in 0..len {
                let f = to_sub(&sampler.sample(rng));
                for i in 0..m {
                    for j in 0..m {
                        acc[i * m + j].push(f[pts[i]] * f[pts[j]]);
                    }
                }
            }
            Ok(acc)
        })
        .unwrap();
        let acc = merge_all(m * m, parts.iter().map(Vec::as_slice));
        for i in 0..m {
            for j in 0..m {
                let a = &acc[i * m + j];
                let t = target.get(pts[i], pts[j]);
                assert!((a.mean() - t).abs() < 4.0 * a.std_error(), "{i},{j}: {} vs {t}", a.mean());
            }
        }
    }

    #[test]
    fn grid_matches_subdivided_green_untwisted() {
        let (net, _) = pt();
        check_against_subdivision(&net, &GaugeField::trivial(&net), 3, 1);
    }

    #[test]
    fn grid_matches_subdivided_green_twisted() {
        let (net, g) = pt();
        check_against_subdivision(&net, &g, 3, 2);
    }

    #[test]
    fn middle_limits_are_exact_negatives() {
        let (net, g) = pt();
        let yz = net.edge_by_id("yz").unwrap();
        for cells in [2, 3, 4, 7] {
            for seed in 0..20 {
                let grid = sample_metric_field(&net, &g, cells, seed).unwrap();
                let mid = grid.edges[yz].middle.expect("middle on -1 edge");
                assert_eq!(mid.right, -mid.left);
                assert_eq!(mid.left.abs(), mid.right.abs());
                assert!((mid.position - grid.edges[yz].length / 2.0).abs() < 1e-15);
                let expected = if cells % 2 == 0 { cells - 2 } else { cells - 1 };
                assert_eq!(grid.edges[yz].positions.len(), expected);
                for (e, t) in grid.edges.iter().enumerate() {
                    if e != yz {
                        assert!(t.middle.is_none());
                        assert_eq!(t.positions.len(), cells - 1);
                    }
                    assert!(t.positions.windows(2).all(|w| w[0] < w[1]));
                    assert!(t.positions.iter().all(|&p| p > 0.0 && p < t.length));
                }
            }
        }
    }

    #[test]
    fn rejects_single_cell() {
        let (net, g) = pt();
        assert!(sample_metric_field(&net, &g, 1, 0).is_err());
    }

    #[test]
    fn reproducible() {
        let (net, g) = pt();
        assert_eq!(sample_metric_field(&net, &g, 5, 3).unwrap(), sample_metric_field(&net, &g, 5, 3).unwrap());
    }
}
