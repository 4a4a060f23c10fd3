//! Exact samplers for the discrete free field, its twisted and double-cover
//! versions, the metric-graph sign-cluster topology, and the Monte Carlo
//! estimators built on top of them.

mod cluster;
mod estimate;
mod metric;

pub use cluster::{
    bridge_survival_probability, detect_event, detect_event_by_cover, sample_cluster_configuration,
    sample_clusters_from_values, sign_flip_transform, ClusterConfiguration, ParityUnionFind,
};
pub use estimate::{
    conditional_moment, conditional_moments, estimate_event_probability, two_point_connectivity, EstimatorReport,
    McConfig,
};
pub use metric::{sample_metric_field, EdgeTrace, MetricFieldGrid, MetricFieldSampler, MiddleLimits};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cover::{DoubleCover, Sheet};
use crate::error::Result;
use crate::network::{ElectricalNetwork, GaugeField};
use crate::rng::substream;
use crate::spectral::{cover_green, green, twisted_green, Factorization, GreenMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GffKind {
    Untwisted,
    Twisted,
    Cover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub stream: u64,
}

/// One field sample, indexed by vertex; boundary entries are exactly 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GffSample {
    pub values: Vec<f64>,
    pub kind: GffKind,
    pub seed: Option<SeedRecord>,
}

/// Draws centered Gaussian vectors with covariance a Green matrix, through
/// the Cholesky factor of that matrix.
#[derive(Debug, Clone)]
pub struct GffSampler {
    kind: GffKind,
    num_vertices: usize,
    order: Vec<usize>,
    factor: DMatrix<f64>,
}

impl GffSampler {
    fn from_green(g: &GreenMatrix, num_vertices: usize, kind: GffKind) -> Result<GffSampler> {
        let factor = Factorization::new(g.matrix(), "Green matrix")?.lower();
        Ok(GffSampler { kind, num_vertices, order: g.order().to_vec(), factor })
    }

    pub fn new(net: &ElectricalNetwork) -> Result<GffSampler> {
        Self::from_green(&green(net)?, net.num_vertices(), GffKind::Untwisted)
    }

    pub fn twisted(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<GffSampler> {
        Self::from_green(&twisted_green(net, gauge)?, net.num_vertices(), GffKind::Twisted)
    }

    pub fn cover(cover: &DoubleCover) -> Result<GffSampler> {
        Self::from_green(&cover_green(cover)?, cover.network().num_vertices(), GffKind::Cover)
    }

    pub fn kind(&self) -> GffKind {
        self.kind
    }

    /// Fills `out` (length = number of vertices) with one sample.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let n = self.order.len();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        out.fill(0.0);
        for (i, &v) in self.order.iter().enumerate() {
            let row = self.factor.row(i);
            out[v] = (0..=i).map(|j| row[j] * z[j]).sum();
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vertices];
        self.sample_into(rng, &mut out);
        out
    }
}

fn seeded(values: Vec<f64>, kind: GffKind, seed: u64) -> GffSample {
    GffSample { values, kind, seed: Some(SeedRecord { seed, stream: 0 }) }
}

pub fn sample_gff(net: &ElectricalNetwork, seed: u64) -> Result<GffSample> {
    let values = GffSampler::new(net)?.sample(&mut substream(seed, 0));
    Ok(seeded(values, GffKind::Untwisted, seed))
}

pub fn sample_twisted_gff(net: &ElectricalNetwork, gauge: &GaugeField, seed: u64) -> Result<GffSample> {
    let values = GffSampler::twisted(net, gauge)?.sample(&mut substream(seed, 0));
    Ok(seeded(values, GffKind::Twisted, seed))
}

/// A cover field sample with its deck-symmetric and deck-antisymmetric
/// parts, (φ ± φ∘ψ)/√2, read on the sheet-1 copy of the base.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverFieldSample {
    pub cover: GffSample,
    pub plus: GffSample,
    pub minus: GffSample,
}

/// Samples the free field of the double cover and projects it.
#[derive(Debug, Clone)]
pub struct CoverSampler {
    cover: DoubleCover,
    sampler: GffSampler,
}

impl CoverSampler {
    pub fn new(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<CoverSampler> {
        let cover = DoubleCover::new(net, gauge)?;
        let sampler = GffSampler::cover(&cover)?;
        Ok(CoverSampler { cover, sampler })
    }

    pub fn double_cover(&self) -> &DoubleCover {
        &self.cover
    }

    /// Returns (cover values, plus projection, minus projection).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let values = self.sampler.sample(rng);
        let base = self.cover.base();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut plus = vec![0.0; base.num_vertices()];
        let mut minus = vec![0.0; base.num_vertices()];
        for &x in base.interior() {
            let one = values[self.cover.lift(x, Sheet::One)];
            let two = values[self.cover.lift(x, Sheet::Two)];
            plus[x] = h * (one + two);
            minus[x] = h * (one - two);
        }
        (values, plus, minus)
    }
}

pub fn sample_cover_gff_and_project(
    net: &ElectricalNetwork,
    gauge: &GaugeField,
    seed: u64,
) -> Result<CoverFieldSample> {
    let sampler = CoverSampler::new(net, gauge)?;
    let (values, plus, minus) = sampler.sample(&mut substream(seed, 0));
    Ok(CoverFieldSample {
        cover: seeded(values, GffKind::Cover, seed),
        plus: seeded(plus, GffKind::Untwisted, seed),
        minus: seeded(minus, GffKind::Twisted, seed),
    })
}
