//! Monte Carlo estimators over the sign-cluster topology.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gff::cluster::{detect_event, sample_clusters_from_values, sign_flip_transform};
use crate::gff::GffSampler;
use crate::network::{ElectricalNetwork, GaugeField};
use crate::rng::run_batches;
use crate::spectral::{det_ratio, green, twisted_green};
use crate::stats::{merge_all, Moments};

/// Sample count, master seed and worker count for an estimator run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub n_samples: u64,
    pub seed: u64,
    /// 0 selects the rayon default; the result does not depend on it.
    pub threads: usize,
}

impl McConfig {
    pub fn new(n_samples: u64, seed: u64) -> McConfig {
        McConfig { n_samples, seed, threads: 0 }
    }

    pub fn with_threads(self, threads: usize) -> McConfig {
        McConfig { threads, ..self }
    }

    fn check(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub n_accepted: u64,
    pub seed: u64,
    pub target: Option<f64>,
}

impl EstimatorReport {
    fn from_moments(m: &Moments, n_samples: u64, seed: u64, target: Option<f64>) -> EstimatorReport {
        EstimatorReport { estimate: m.mean(), std_error: m.std_error(), n_samples, n_accepted: m.n, seed, target }
    }

    /// Distance to the target in standard errors. An exact hit with zero
    /// standard error gives 0.
    pub fn z_score(&self) -> Option<f64> {
        let t = self.target?;
        let d = (self.estimate - t).abs();
        Some(if d == 0.0 { 0.0 } else { d / self.std_error })
    }

    pub fn within(&self, k: f64) -> bool {
        self.z_score().is_some_and(|z| z <= k)
    }
}

fn check_interior(net: &ElectricalNetwork, v: usize) -> Result<()> {
    if v >= net.num_vertices() || net.is_boundary(v) {
        let id = net.vertex_ids().get(v).cloned().unwrap_or_else(|| v.to_string());
        return Err(Error::NotInterior(id));
    }
    Ok(())
}

/// Frequency of the event that no sign cluster carries a loop of holonomy
/// -1, with the determinant ratio as target.
pub fn estimate_event_probability(
    net: &ElectricalNetwork,
    gauge: &GaugeField,
    cfg: &McConfig,
) -> Result<EstimatorReport> {
    cfg.check()?;
    gauge.check(net)?;
    let target = det_ratio(net, gauge)?;
    let sampler = GffSampler::new(net)?;
    let parts = run_batches(cfg.n_samples, cfg.seed, cfg.threads, |rng, len| {
        let mut m = Moments::default();
        let mut values = vec![0.0; net.num_vertices()];
        for _ in 0..len {
            sampler.sample_into(rng, &mut values);
            let config = sample_clusters_from_values(net, &values, rng);
            m.push(if detect_event(&config, net, gauge) { 1.0 } else { 0.0 });
        }
        Ok(m)
    })?;
    let m = merge_all(1, parts.iter().map(std::slice::from_ref))[0];
    let mut report = EstimatorReport::from_moments(&m, cfg.n_samples, cfg.seed, Some(target));
    report.n_accepted = m.sum as u64;
    Ok(report)
}

/// For each pair (x, y), the mean of φ(x)φ(y)τ(x)τ(y) over samples in the
/// event, where τ is the sign flip making the field σ-harmonious on its
/// clusters. Targets are the twisted Green values.
pub fn conditional_moments(
    net: &ElectricalNetwork,
    gauge: &GaugeField,
    pairs: &[(usize, usize)],
    cfg: &McConfig,
) -> Result<Vec<EstimatorReport>> {
    cfg.check()?;
    gauge.check(net)?;
    for &(x, y) in pairs {
        check_interior(net, x)?;
        check_interior(net, y)?;
    }
    let gs = twisted_green(net, gauge)?;
    let sampler = GffSampler::new(net)?;
    let parts = run_batches(cfg.n_samples, cfg.seed, cfg.threads, |rng, len| {
        let mut m = vec![Moments::default(); pairs.len()];
        let mut values = vec![0.0; net.num_vertices()];
        for _ in 0..len {
            sampler.sample_into(rng, &mut values);
            let config = sample_clusters_from_values(net, &values, rng);
            let Ok(tau) = sign_flip_transform(&config, net, gauge) else { continue };
            for (acc, &(x, y)) in m.iter_mut().zip(pairs) {
                acc.push(values[x] * tau[x].to_f64() * values[y] * tau[y].to_f64());
            }
        }
        Ok(m)
    })?;
    let merged = merge_all(pairs.len(), parts.iter().map(Vec::as_slice));
    if merged.first().is_some_and(|m| m.n == 0) {
        return Err(Error::EventNeverOccurred(cfg.n_samples));
    }
    Ok(merged
        .iter()
        .zip(pairs)
        .map(|(m, &(x, y))| EstimatorReport::from_moments(m, cfg.n_samples, cfg.seed, Some(gs.get(x, y))))
        .collect())
}

pub fn conditional_moment(
    net: &ElectricalNetwork,
    gauge: &GaugeField,
    pair: (usize, usize),
    cfg: &McConfig,
) -> Result<EstimatorReport> {
    Ok(conditional_moments(net, gauge, &[pair], cfg)?.remove(0))
}

/// Probability that x and y lie in the same sign cluster of the plain
/// metric-graph field, against (2/π) arcsin(G(x,y) / √(G(x,x) G(y,y))).
pub fn two_point_connectivity(net: &ElectricalNetwork, x: usize, y: usize, cfg: &McConfig) -> Result<EstimatorReport> {
    cfg.check()?;
    check_interior(net, x)?;
    check_interior(net, y)?;
    let g = green(net)?;
    let rho = g.get(x, y) / (g.get(x, x) * g.get(y, y)).sqrt();
    let target = std::f64::consts::FRAC_2_PI * rho.clamp(-1.0, 1.0).asin();
    let sampler = GffSampler::new(net)?;
    let parts = run_batches(cfg.n_samples, cfg.seed, cfg.threads, |rng, len| {
        let mut m = Moments::default();
        let mut values = vec![0.0; net.num_vertices()];
        for _ in 0..len {
            sampler.sample_into(rng, &mut values);
            let config = sample_clusters_from_values(net, &values, rng);
            m.push(if config.same_cluster(x, y) { 1.0 } else { 0.0 });
        }
        Ok(m)
    })?;
    let m = merge_all(1, parts.iter().map(std::slice::from_ref))[0];
    Ok(EstimatorReport::from_moments(&m, cfg.n_samples, cfg.seed, Some(target)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::apply_gauge_transform;
    use crate::network::VertexSigns;

    fn pt() -> (ElectricalNetwork, GaugeField) {
        let net = ElectricalNetwork::pendant_triangle();
        let g = GaugeField::with_minus_edges(&net, &["yz"]).unwrap();
        (net, g)
    }

    #[test]
    fn trivial_gauge_event_is_certain() {
        let (net, _) = pt();
        let r = estimate_event_probability(&net, &GaugeField::trivial(&net), &McConfig::new(5000, 1)).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.target, Some(1.0));
        assert!(r.within(3.0));
        assert_eq!(r.n_accepted, 5000);
    }

    #[test]
    fn pendant_triangle_event_probability() {
        let (net, g) = pt();
        let r = estimate_event_probability(&net, &g, &McConfig::new(100_000, 0)).unwrap();
        let target = (3.0f64 / 7.0).sqrt();
        assert!((r.target.unwrap() - target).abs() < 1e-12);
        assert!(r.within(3.0), "{r:?}");
        assert!(r.estimate - 3.0 * r.std_error > 0.0 && r.estimate + 3.0 * r.std_error < 1.0);
    }

    #[test]
    fn gauge_equivalent_fields_see_identical_events() {
        let (net, g) = pt();
        let vs = VertexSigns::flipping(&net, &["x", "z"]).unwrap();
        let moved = apply_gauge_transform(&net, &vs, &g).unwrap();
        assert_ne!(moved, g);
        let cfg = McConfig::new(20_000, 3);
        let a = estimate_event_probability(&net, &g, &cfg).unwrap();
        let b = estimate_event_probability(&net, &moved, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conditional_moments_match_twisted_green() {
        let (net, g) = pt();
        let x = net.vertex_index("x").unwrap();
        let y = net.vertex_index("y").unwrap();
        let z = net.vertex_index("z").unwrap();
        let r = conditional_moments(&net, &g, &[(x, x), (y, z)], &McConfig::new(100_000, 0)).unwrap();
        assert!((r[0].target.unwrap() - 3.0 / 7.0).abs() < 1e-12);
        assert!((r[1].target.unwrap() + 2.0 / 7.0).abs() < 1e-12);
        for rep in &r {
            assert!(rep.within(3.0), "{rep:?}");
            assert!(rep.n_accepted <= rep.n_samples);
        }

        let trivial = GaugeField::trivial(&net);
        let r = conditional_moment(&net, &trivial, (x, y), &McConfig::new(50_000, 1)).unwrap();
        assert!((r.target.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.n_accepted, 50_000);
        assert!(r.within(3.0), "{r:?}");
    }

    #[test]
    fn arcsine_connectivity() {
        let (net, _) = pt();
        let x = net.vertex_index("x").unwrap();
        let y = net.vertex_index("y").unwrap();
        let r = two_point_connectivity(&net, x, y, &McConfig::new(100_000, 0)).unwrap();
        let target = std::f64::consts::FRAC_2_PI * (0.6f64).sqrt().asin();
        assert!((r.target.unwrap() - target).abs() < 1e-12);
        assert!(r.within(3.0), "{r:?}");

        let r = two_point_connectivity(&net, x, x, &McConfig::new(1000, 0)).unwrap();
        assert_eq!((r.estimate, r.target), (1.0, Some(1.0)));
    }

    #[test]
    fn separated_vertices_never_connect() {
        let (net, _) = ElectricalNetwork::parse(
            r#"{"vertices":["a","b","m"],"boundary":["m"],"edges":[
                {"u":"a","v":"m","conductance":1.0},{"u":"m","v":"b","conductance":2.0}]}"#,
        )
        .unwrap();
        let (a, b) = (net.vertex_index("a").unwrap(), net.vertex_index("b").unwrap());
        let r = two_point_connectivity(&net, a, b, &McConfig::new(2000, 0)).unwrap();
        assert_eq!((r.estimate, r.target), (0.0, Some(0.0)));
    }

    #[test]
    fn rejects_bad_input() {
        let (net, g) = pt();
        let b = net.vertex_index("b").unwrap();
        assert!(matches!(conditional_moment(&net, &g, (b, b), &McConfig::new(10, 0)), Err(Error::NotInterior(_))));
        assert!(estimate_event_probability(&net, &g, &McConfig::new(0, 0)).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let (net, g) = pt();
        let cfg = McConfig::new(10_000, 11);
        let a = estimate_event_probability(&net, &g, &cfg.with_threads(1)).unwrap();
        let b = estimate_event_probability(&net, &g, &cfg.with_threads(4)).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }
}
