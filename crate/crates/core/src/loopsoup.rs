//! Continuous-time random walk loop soups, their occupation fields, the
//! split by holonomy, and Monte Carlo checks of the isomorphism theorems
//! relating them to (twisted) free fields.
//!
//! Sampling uses vertex elimination. With interior vertices ordered
//! v_1 < ... < v_m, a loop is rooted at its smallest vertex v_i and lives in
//! {v_i, ..., v_m}. If r_i is the probability that the jump chain started at
//! v_i returns to v_i before leaving that set, the loops rooted at v_i with
//! k visits to v_i have mass r_i^k / k. Their total, -ln(1 - r_i), equals
//! ln(W(v_i) G_i(v_i, v_i)) with G_i the Green function of the reduced
//! network. Loops that never jump have infinite mass; only their total
//! duration at each vertex is kept.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::cyclic_holonomy;
use crate::network::{ElectricalNetwork, GaugeField};
use crate::rng::{run_batches, substream};
use crate::sign::Sign;
use crate::spectral::{green, twisted_green, Factorization, GreenMatrix};
use crate::stats::{discrepancy, merge_all, Moments};

/// Attempts allowed per excursion before rejection sampling gives up.
pub const REJECTION_CAP: u64 = 1_000_000;

/// A loop with at least one jump, rooted at its smallest vertex.
/// `skeleton[i]` is held for `holding_times[i]`, then the walk jumps to
/// `skeleton[i + 1]` (cyclically).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Loop {
    pub skeleton: Vec<usize>,
    pub holding_times: Vec<f64>,
}

impl Loop {
    pub fn duration(&self) -> f64 {
        self.holding_times.iter().sum()
    }

    pub fn holonomy(&self, net: &ElectricalNetwork, gauge: &GaugeField) -> Result<Sign> {
        cyclic_holonomy(net, gauge, &self.skeleton)
    }
}

/// Which exponential rate governs the durations of jump-free loops at x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OnePointRate {
    /// Intensity e^{-W(x) t} dt / t.
    #[default]
    Conductance,
    /// Intensity e^{-t / G(x,x)} dt / t.
    Green,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopSoupSample {
    pub loops: Vec<Loop>,
    /// Total time spent by jump-free loops at each vertex.
    pub jump_free_time: Vec<f64>,
    pub alpha: f64,
    pub seed: Option<u64>,
}

impl LoopSoupSample {
    pub fn empty(num_vertices: usize, alpha: f64) -> LoopSoupSample {
        LoopSoupSample { loops: Vec::new(), jump_free_time: vec![0.0; num_vertices], alpha, seed: None }
    }

    /// Number of loops that visit at least two vertices.
    pub fn multi_vertex_count(&self) -> usize {
        self.loops.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationField {
    pub local_time: Vec<f64>,
}

pub fn occupation_field(soup: &LoopSoupSample) -> OccupationField {
    let mut local_time = soup.jump_free_time.clone();
    for l in &soup.loops {
        for (&x, &t) in l.skeleton.iter().zip(&l.holding_times) {
            local_time[x] += t;
        }
    }
    OccupationField { local_time }
}

/// Splits a soup into its holonomy +1 and holonomy -1 loops. Jump-free
/// loops have holonomy +1.
pub fn split_by_holonomy(
    soup: &LoopSoupSample,
    net: &ElectricalNetwork,
    gauge: &GaugeField,
) -> Result<(LoopSoupSample, LoopSoupSample)> {
    let mut plus = LoopSoupSample { loops: Vec::new(), ..soup.clone() };
    let mut minus =
        LoopSoupSample { loops: Vec::new(), ..LoopSoupSample::empty(soup.jump_free_time.len(), soup.alpha) };
    minus.seed = soup.seed;
    for l in &soup.loops {
        if l.holonomy(net, gauge)?.is_minus() {
            minus.loops.push(l.clone());
        } else {
            plus.loops.push(l.clone());
        }
    }
    Ok((plus, minus))
}

/// Per-root data of the elimination scheme.
#[derive(Debug, Clone)]
struct Root {
    vertex: usize,
    /// Return probability before leaving {v_i, ..., v_m}.
    r: f64,
}

/// Precomputed sampler for the loop soup of intensity α μ^loop.
#[derive(Debug, Clone)]
pub struct LoopSoupSampler {
    net: ElectricalNetwork,
    alpha: f64,
    rate: OnePointRate,
    roots: Vec<Root>,
    /// Cumulative jump probabilities per vertex, aligned with `net.neighbors`.
    jump_cdf: Vec<Vec<f64>>,
    /// Scale of the Gamma law of the jump-free time per vertex.
    jump_free_scale: Vec<f64>,
}

impl LoopSoupSampler {
    pub fn new(net: &ElectricalNetwork, alpha: f64) -> Result<LoopSoupSampler> {
        Self::with_rate(net, alpha, OnePointRate::default())
    }

    pub fn with_rate(net: &ElectricalNetwork, alpha: f64, rate: OnePointRate) -> Result<LoopSoupSampler> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        let g = green(net)?;
        let interior = net.interior();
        let m = interior.len();
        let mut roots = Vec::with_capacity(m);
        for (i, &v) in interior.iter().enumerate() {
            let w = net.total_conductance(v);
            // without a later neighbour the walk cannot return
            let can_return = net.neighbors(v).iter().any(|&(y, _)| net.interior_position(y).is_some_and(|p| p > i));
            let r = if can_return { (1.0 - 1.0 / (w * reduced_green_at_root(net, i)?)).max(0.0) } else { 0.0 };
            roots.push(Root { vertex: v, r });
        }
        let jump_cdf = (0..net.num_vertices())
            .map(|x| {
                let w = net.total_conductance(x);
                let mut acc = 0.0;
                net.neighbors(x)
                    .iter()
                    .map(|&(_, e)| {
                        acc += net.edge(e).conductance / w;
                        acc
                    })
                    .collect()
            })
            .collect();
        let jump_free_scale = (0..net.num_vertices())
            .map(|x| match (net.is_boundary(x), rate) {
                (true, _) => 0.0,
                (false, OnePointRate::Conductance) => 1.0 / net.total_conductance(x),
                (false, OnePointRate::Green) => g.get(x, x),
            })
            .collect();
        Ok(LoopSoupSampler { net: net.clone(), alpha, rate, roots, jump_cdf, jump_free_scale })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rate(&self) -> OnePointRate {
        self.rate
    }

    /// Return probabilities r_i in interior order.
    pub fn return_probabilities(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.r).collect()
    }

    /// Total mass of loops with at least one jump, Σ -ln(1 - r_i).
    pub fn multi_vertex_mass(&self) -> f64 {
        self.roots.iter().map(|r| -(-r.r).ln_1p()).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LoopSoupSample> {
        let n = self.net.num_vertices();
        let mut soup = LoopSoupSample::empty(n, self.alpha);
        for (i, root) in self.roots.iter().enumerate() {
            if root.r <= 0.0 {
                continue;
            }
            let lambda = -self.alpha * (-root.r).ln_1p();
            let count = Poisson::new(lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng) as u64;
            for _ in 0..count {
                let k = sample_logarithmic(rng, root.r);
                let mut skeleton = Vec::new();
                for _ in 0..k {
                    self.excursion(rng, i, &mut skeleton)?;
                }
                let holding_times = skeleton
                    .iter()
                    .map(|&x| Exp::new(self.net.total_conductance(x)).expect("positive rate").sample(rng))
                    .collect();
                soup.loops.push(Loop { skeleton, holding_times });
            }
        }
        for &x in self.net.interior() {
            let gamma = Gamma::new(self.alpha, self.jump_free_scale[x]).expect("positive parameters");
            soup.jump_free_time[x] = gamma.sample(rng);
        }
        Ok(soup)
    }

    /// Appends one excursion from the i-th root back to it (root included,
    /// final return excluded), conditioned to stay in {v_i, ..., v_m}.
    fn excursion<R: Rng + ?Sized>(&self, rng: &mut R, i: usize, out: &mut Vec<usize>) -> Result<()> {
        let root = self.roots[i].vertex;
        let start = out.len();
        for _ in 0..REJECTION_CAP {
            out.truncate(start);
            out.push(root);
            let mut x = root;
            loop {
                let u: f64 = rng.random();
                let cdf = &self.jump_cdf[x];
                let j = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                let y = self.net.neighbors(x)[j].0;
                if y == root {
                    return Ok(());
                }
                match self.net.interior_position(y) {
                    Some(p) if p > i => {
                        out.push(y);
                        x = y;
                    }
                    _ => break,
                }
            }
        }
        Err(Error::RejectionCap(REJECTION_CAP))
    }
}

/// G_i(v_i, v_i) for the network with v_1, ..., v_{i-1} turned into
/// killing vertices.
fn reduced_green_at_root(net: &ElectricalNetwork, i: usize) -> Result<f64> {
    let kept = &net.interior()[i..];
    let k = kept.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(k, k);
    for (a, &x) in kept.iter().enumerate() {
        m[(a, a)] = net.total_conductance(x);
        for &(y, e) in net.neighbors(x) {
            if let Some(b) = kept.iter().position(|&z| z == y) {
                m[(a, b)] -= net.edge(e).conductance;
            }
        }
    }
    let f = Factorization::new(&m, "reduced Laplacian")?;
    let mut e0 = nalgebra::DMatrix::<f64>::zeros(k, 1);
    e0[(0, 0)] = 1.0;
    Ok(f.solve(&e0)[(0, 0)])
}

/// Inversion sampling of P(K = k) = r^k / (k (-ln(1 - r))), k ≥ 1.
fn sample_logarithmic<R: Rng + ?Sized>(rng: &mut R, r: f64) -> u64 {
    let u: f64 = rng.random();
    let norm = -(-r).ln_1p();
    let mut k = 1u64;
    let mut p = r / norm;
    let mut cum = p;
    while u > cum && p > 0.0 {
        k += 1;
        p *= r * (k - 1) as f64 / k as f64;
        cum += p;
    }
    k
}

pub fn sample_loop_soup(net: &ElectricalNetwork, alpha: f64, seed: u64) -> Result<LoopSoupSample> {
    let mut soup = LoopSoupSampler::new(net, alpha)?.sample(&mut substream(seed, 0))?;
    soup.seed = Some(seed);
    Ok(soup)
}

/// Summary statistics of many independent soups.
#[derive(Debug, Clone, Serialize)]
pub struct SoupStatistics {
    pub alpha: f64,
    pub n_soups: u64,
    /// Loops visiting at least two vertices.
    pub count: Moments,
    /// Indicator that the soup has no loop visiting two vertices.
    pub empty: Moments,
    /// Loops with holonomy -1.
    pub negative_count: Moments,
    /// Per interior vertex (interior order): ℓ^x and (ℓ^x)^2.
    pub occupation: Vec<Moments>,
    pub occupation_sq: Vec<Moments>,
    /// Largest |ℓ(plus) + ℓ(minus) - ℓ| seen over all soups and vertices.
    pub max_split_residual: f64,
}

/// Runs `n_soups` soups and records counts and occupation moments.
pub fn soup_statistics(
    net: &ElectricalNetwork,
    gauge: &GaugeField,
    alpha: f64,
    rate: OnePointRate,
    n_soups: u64,
    seed: u64,
    threads: usize,
) -> Result<SoupStatistics> {
    gauge.check(net)?;
    let sampler = LoopSoupSampler::with_rate(net, alpha, rate)?;
    let interior = net.interior();
    let m = interior.len();
    let width = 3 + 2 * m;
    let parts = run_batches(n_soups, seed, threads, |rng, len| {
        let mut acc = vec![Moments::default(); width];
        let mut residual = 0.0f64;
        for _ in 0..len {
            let soup = sampler.sample(rng)?;
            let (plus, minus) = split_by_holonomy(&soup, net, gauge)?;
            acc[0].push(soup.multi_vertex_count() as f64);
            acc[1].push(minus.multi_vertex_count() as f64);
            acc[2].push(if soup.loops.is_empty() { 1.0 } else { 0.0 });
            let total = occupation_field(&soup).local_time;
            let lp = occupation_field(&plus).local_time;
            let lm = occupation_field(&minus).local_time;
            for (j, &x) in interior.iter().enumerate() {
                acc[3 + j].push(total[x]);
                acc[3 + m + j].push(total[x] * total[x]);
                residual = residual.max((lp[x] + lm[x] - total[x]).abs());
            }
        }
        Ok((acc, residual))
    })?;
    let residual = parts.iter().map(|p| p.1).fold(0.0, f64::max);
    let acc = merge_all(width, parts.iter().map(|p| p.0.as_slice()));
    Ok(SoupStatistics {
        alpha,
        n_soups,
        count: acc[0],
        negative_count: acc[1],
        empty: acc[2],
        occupation: acc[3..3 + m].to_vec(),
        occupation_sq: acc[3 + m..].to_vec(),
        max_split_residual: residual,
    })
}

/// Moments of both sides of the twisted isomorphism at one vertex.
#[derive(Debug, Clone, Serialize)]
pub struct KlVertexReport {
    pub vertex: String,
    pub left_mean: Moments,
    pub right_mean: Moments,
    pub left_second: Moments,
    pub right_second: Moments,
    /// |difference| of the means, and of the second moments, in combined SE.
    pub mean_discrepancy: f64,
    pub second_discrepancy: f64,
    pub domination: DominationCheck,
}

/// Empirical distribution functions of φ_σ(x)^2 and φ(x)^2 at the deciles
/// of the latter. Domination holds when the twisted CDF is not below the
/// plain one by more than `z` standard errors anywhere.
#[derive(Debug, Clone, Serialize)]
pub struct DominationCheck {
    pub thresholds: Vec<f64>,
    pub cdf_twisted: Vec<f64>,
    pub cdf_plain: Vec<f64>,
    pub worst_z: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct KlReport {
    pub n_soups: u64,
    pub seed: u64,
    pub vertices: Vec<KlVertexReport>,
    pub max_mean_discrepancy: f64,
    pub max_second_discrepancy: f64,
    pub domination_holds: bool,
}

/// Compares ℓ^x(L_+) with φ_σ(x)^2 / 2 + ℓ^x(L_-) at α = 1/2, where L_± are
/// the holonomy ±1 parts of one soup and φ_σ is independent of it. Also
/// draws a plain field to test that φ_σ^2 is dominated by φ^2.
pub fn kl_isomorphism_check(
    net: &ElectricalNetwork,
    gauge: &GaugeField,
    n_soups: u64,
    seed: u64,
    threads: usize,
    domination_z: f64,
) -> Result<KlReport> {
    gauge.check(net)?;
    if n_soups < 10 {
        return Err(Error::InvalidParameter("at least 10 soups are needed".into()));
    }
    let sampler = LoopSoupSampler::new(net, 0.5)?;
    let g: GreenMatrix = green(net)?;
    let gs = twisted_green(net, gauge)?;
    let plain_factor = Factorization::new(g.matrix(), "Green matrix")?.lower();
    let twisted_factor = Factorization::new(gs.matrix(), "twisted Green matrix")?.lower();
    let interior = net.interior();
    let m = interior.len();
    let draw = |rng: &mut crate::rng::SampleRng, l: &nalgebra::DMatrix<f64>| -> Vec<f64> {
        let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        (0..m).map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum()).collect()
    };
    let parts = run_batches(n_soups, seed, threads, |rng, len| {
        let mut acc = vec![Moments::default(); 4 * m];
        let mut squares = Vec::with_capacity(len as usize);
        for _ in 0..len {
            let soup = sampler.sample(rng)?;
            let (plus, minus) = split_by_holonomy(&soup, net, gauge)?;
            let lp = occupation_field(&plus).local_time;
            let lm = occupation_field(&minus).local_time;
            let phi_s = draw(rng, &twisted_factor);
            let phi = draw(rng, &plain_factor);
            for (j, &x) in interior.iter().enumerate() {
                let left = lp[x];
                let right = 0.5 * phi_s[j] * phi_s[j] + lm[x];
                acc[j].push(left);
                acc[m + j].push(right);
                acc[2 * m + j].push(left * left);
                acc[3 * m + j].push(right * right);
            }
            squares
                .push((phi_s.iter().map(|v| v * v).collect::<Vec<_>>(), phi.iter().map(|v| v * v).collect::<Vec<_>>()));
        }
        Ok((acc, squares))
    })?;
    let acc = merge_all(4 * m, parts.iter().map(|p| p.0.as_slice()));
    let squares: Vec<&(Vec<f64>, Vec<f64>)> = parts.iter().flat_map(|p| p.1.iter()).collect();
    let n = squares.len() as f64;
    let vertices: Vec<KlVertexReport> = interior
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let mut plain: Vec<f64> = squares.iter().map(|s| s.1[j]).collect();
            plain.sort_by(f64::total_cmp);
            let thresholds: Vec<f64> = (1..10).map(|d| plain[(d * plain.len()) / 10]).collect();
            // side 0 is the twisted square, side 1 the plain one
            let cdf = |side: usize, t: f64| {
                squares.iter().filter(|s| if side == 0 { s.0[j] } else { s.1[j] } <= t).count() as f64 / n
            };
            let cdf_twisted: Vec<f64> = thresholds.iter().map(|&t| cdf(0, t)).collect();
            let cdf_plain: Vec<f64> = thresholds.iter().map(|&t| cdf(1, t)).collect();
            let worst_z = cdf_twisted
                .iter()
                .zip(&cdf_plain)
                .map(|(&a, &b)| {
                    let se = ((a * (1.0 - a) + b * (1.0 - b)) / n).sqrt().max(f64::MIN_POSITIVE);
                    (b - a) / se
                })
                .fold(f64::NEG_INFINITY, f64::max);
            KlVertexReport {
                vertex: net.vertex_id(x).to_string(),
                left_mean: acc[j],
                right_mean: acc[m + j],
                left_second: acc[2 * m + j],
                right_second: acc[3 * m + j],
                mean_discrepancy: discrepancy(&acc[j], &acc[m + j]),
                second_discrepancy: discrepancy(&acc[2 * m + j], &acc[3 * m + j]),
                domination: DominationCheck {
                    thresholds,
                    cdf_twisted,
                    cdf_plain,
                    worst_z,
                    holds: worst_z <= domination_z,
                },
            }
        })
        .collect();
    Ok(KlReport {
        n_soups,
        seed,
        max_mean_discrepancy: vertices.iter().map(|v| v.mean_discrepancy).fold(0.0, f64::max),
        max_second_discrepancy: vertices.iter().map(|v| v.second_discrepancy).fold(0.0, f64::max),
        domination_holds: vertices.iter().all(|v| v.domination.holds),
        vertices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{apply_gauge_transform, DiscretePath};
    use crate::network::{random_gauge, random_network, random_vertex_signs, RandomNetworkParams};
    use crate::spectral::{loop_mass, negative_holonomy_mass};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt() -> (ElectricalNetwork, GaugeField) {
        let net = ElectricalNetwork::pendant_triangle();
        let g = GaugeField::with_minus_edges(&net, &["yz"]).unwrap();
        (net, g)
    }

    /// Oracle for r_i: absorb the jump chain started at v_i by value
    /// iteration on the hitting probabilities of v_i.
    fn return_probability_by_iteration(net: &ElectricalNetwork, i: usize) -> f64 {
        let interior = net.interior();
        let root = interior[i];
        let allowed = |y: usize| net.interior_position(y).is_some_and(|p| p > i);
        let mut h = vec![0.0; net.num_vertices()];
        for _ in 0..20_000 {
            let mut next = vec![0.0; net.num_vertices()];
            for &x in &interior[i + 1..] {
                let w = net.total_conductance(x);
                next[x] = net
                    .neighbors(x)
                    .iter()
                    .map(|&(y, e)| {
                        let hy = if y == root {
                            1.0
                        } else if allowed(y) {
                            h[y]
                        } else {
                            0.0
                        };
                        net.edge(e).conductance / w * hy
                    })
                    .sum();
            }
            h = next;
        }
        let w = net.total_conductance(root);
        net.neighbors(root)
            .iter()
            .map(|&(y, e)| net.edge(e).conductance / w * if allowed(y) { h[y] } else { 0.0 })
            .sum()
    }

    #[test]
    fn return_probabilities_match_iteration_and_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let net = random_network(&mut rng, RandomNetworkParams::default());
            let s = LoopSoupSampler::new(&net, 0.5).unwrap();
            for (i, r) in s.return_probabilities().into_iter().enumerate() {
                assert!((r - return_probability_by_iteration(&net, i)).abs() < 1e-9);
            }
            assert!((s.multi_vertex_mass() - loop_mass(&net).unwrap()).abs() < 1e-10);
        }
        let (net, _) = pt();
        let s = LoopSoupSampler::new(&net, 0.5).unwrap();
        // x: W=3, G_1(x,x)=1 → r=2/3; y: W=2, G on {y,z} = 2/3 → r=1/4; z: r=0
        let r = s.return_probabilities();
        assert!((r[0] - 2.0 / 3.0).abs() < 1e-12 && (r[1] - 0.25).abs() < 1e-12 && r[2].abs() < 1e-12);
    }

    #[test]
    fn logarithmic_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = 0.6;
        let n = 200_000;
        let mut counts = [0u64; 4];
        for _ in 0..n {
            if let Some(c) = counts.get_mut(sample_logarithmic(&mut rng, r) as usize) {
                *c += 1;
            }
        }
        let norm = -(1.0f64 - r).ln();
        for (k, &c) in counts.iter().enumerate().skip(1) {
            let p = r.powi(k as i32) / (k as f64 * norm);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() < 4.0 * se);
        }
    }

    #[test]
    fn loops_respect_adjacency_and_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let net = random_network(&mut rng, RandomNetworkParams::default());
            let s = LoopSoupSampler::new(&net, 1.0).unwrap();
            for _ in 0..50 {
                let soup = s.sample(&mut rng).unwrap();
                for l in &soup.loops {
                    assert!(l.skeleton.len() >= 2);
                    assert_eq!(l.skeleton.len(), l.holding_times.len());
                    let root = l.skeleton[0];
                    for (i, &x) in l.skeleton.iter().enumerate() {
                        assert!(!net.is_boundary(x));
                        assert!(x >= root);
                        let y = l.skeleton[(i + 1) % l.skeleton.len()];
                        assert!(net.edge_between(x, y).is_some());
                    }
                    assert!(l.holding_times.iter().all(|&t| t > 0.0 && t.is_finite()));
                }
                for v in net.boundary() {
                    assert_eq!(soup.jump_free_time[v], 0.0);
                }
            }
        }
    }

    #[test]
    fn occupation_of_empty_soup_is_zero() {
        let soup = LoopSoupSample::empty(4, 0.5);
        assert!(occupation_field(&soup).local_time.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn holonomy_split_examples() {
        let (net, g) = pt();
        let ids = |s: &[&str]| s.iter().map(|v| net.vertex_index(v).unwrap()).collect::<Vec<_>>();
        let mk = |sk: Vec<usize>| Loop { holding_times: vec![0.1; sk.len()], skeleton: sk };
        let soup = LoopSoupSample {
            loops: vec![
                mk(ids(&["x", "y", "z"])),
                mk(ids(&["x", "y"])),
                mk(ids(&["y", "z"])),
                mk(ids(&["x", "y", "z", "x", "y", "z"])),
                mk(ids(&["x", "z", "y", "z"])),
                mk(ids(&["x", "z", "y"])),
            ],
            jump_free_time: vec![0.0, 1.0, 2.0, 3.0],
            alpha: 0.5,
            seed: None,
        };
        let (plus, minus) = split_by_holonomy(&soup, &net, &g).unwrap();
        assert_eq!(minus.loops.len(), 2);
        assert_eq!(plus.loops.len(), 4);
        assert_eq!(plus.jump_free_time, soup.jump_free_time);
        assert!(minus.jump_free_time.iter().all(|&t| t == 0.0));
        let (plus, minus) = split_by_holonomy(&soup, &net, &GaugeField::trivial(&net)).unwrap();
        assert!(minus.loops.is_empty());
        assert_eq!(plus.loops.len(), 6);
        // agrees with the path holonomy of the closed skeleton
        let l = &soup.loops[0];
        let mut closed = l.skeleton.clone();
        closed.push(l.skeleton[0]);
        let path = DiscretePath::new(&net, closed).unwrap();
        assert_eq!(crate::gauge::holonomy(&g, &path), l.holonomy(&net, &g).unwrap());
    }

    #[test]
    fn holonomy_class_is_gauge_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let net = random_network(&mut rng, RandomNetworkParams::default());
            let g = random_gauge(&mut rng, &net);
            let moved = apply_gauge_transform(&net, &random_vertex_signs(&mut rng, &net), &g).unwrap();
            let soup = LoopSoupSampler::new(&net, 2.0).unwrap().sample(&mut rng).unwrap();
            for l in &soup.loops {
                assert_eq!(l.holonomy(&net, &g).unwrap(), l.holonomy(&net, &moved).unwrap());
            }
        }
    }

    #[test]
    fn counts_and_occupation_on_pendant_triangle() {
        let (net, g) = pt();
        let stats = soup_statistics(&net, &g, 0.5, OnePointRate::Conductance, 20_000, 0, 0).unwrap();
        let mass = 4.0f64.ln();
        assert!((stats.count.mean() - 0.5 * mass).abs() < 3.0 * stats.count.std_error(), "{:?}", stats.count);
        // Poisson: variance equals mean; SE of the sample variance ≈ √((λ + 2λ²)/n)
        let lambda = 0.5 * mass;
        let var_se = ((lambda + 2.0 * lambda * lambda) / stats.n_soups as f64).sqrt();
        assert!((stats.count.variance() - lambda).abs() < 3.0 * var_se);
        let neg = 0.5 * negative_holonomy_mass(&net, &g).unwrap();
        assert!((neg - 0.5 * 0.5 * (7.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((stats.negative_count.mean() - neg).abs() < 3.0 * stats.negative_count.std_error());
        let gm = green(&net).unwrap();
        for (j, &x) in net.interior().iter().enumerate() {
            let (m1, m2) = (&stats.occupation[j], &stats.occupation_sq[j]);
            let gxx = gm.get(x, x);
            assert!((m1.mean() - gxx / 2.0).abs() < 3.0 * m1.std_error(), "{j}: {}", m1.mean());
            assert!((m2.mean() - 0.75 * gxx * gxx).abs() < 4.0 * m2.std_error(), "{j}: {}", m2.mean());
        }
        assert!(stats.max_split_residual < 1e-12);
    }

    #[test]
    fn occupation_mean_scales_with_alpha() {
        let (net, g) = pt();
        let gm = green(&net).unwrap();
        for alpha in [0.5, 1.0] {
            let stats = soup_statistics(&net, &g, alpha, OnePointRate::Conductance, 10_000, 7, 0).unwrap();
            for (j, &x) in net.interior().iter().enumerate() {
                let m = &stats.occupation[j];
                assert!((m.mean() - alpha * gm.get(x, x)).abs() < 3.0 * m.std_error());
            }
        }
    }

    #[test]
    fn small_alpha_soups_are_mostly_empty() {
        let (net, g) = pt();
        let stats = soup_statistics(&net, &g, 1e-3, OnePointRate::Conductance, 100_000, 1, 0).unwrap();
        let p = (-1e-3 * 4.0f64.ln()).exp();
        let se = (p * (1.0 - p) / 100_000.0).sqrt();
        assert!((stats.empty.mean() - p).abs() < 4.0 * se, "{} vs {p}", stats.empty.mean());
    }

    #[test]
    fn green_rate_breaks_le_jan() {
        let (net, g) = pt();
        let stats = soup_statistics(&net, &g, 0.5, OnePointRate::Green, 20_000, 0, 0).unwrap();
        let gm = green(&net).unwrap();
        let worst = net
            .interior()
            .iter()
            .enumerate()
            .map(|(j, &x)| (stats.occupation[j].mean() - gm.get(x, x) / 2.0).abs() / stats.occupation[j].std_error())
            .fold(0.0, f64::max);
        assert!(worst > 10.0, "{worst}");
    }

    #[test]
    fn kassel_levy_moments_agree() {
        let (net, g) = pt();
        let r = kl_isomorphism_check(&net, &g, 20_000, 0, 0, 3.0).unwrap();
        assert!(r.max_mean_discrepancy < 4.0, "{r:?}");
        assert!(r.max_second_discrepancy < 4.0, "{r:?}");
        assert!(r.domination_holds);
        let gm = green(&net).unwrap();
        let gs = twisted_green(&net, &g).unwrap();
        for (v, &x) in r.vertices.iter().zip(net.interior()) {
            let target = (gm.get(x, x) + gs.get(x, x)) / 4.0;
            assert!((v.left_mean.mean() - target).abs() < 4.0 * v.left_mean.std_error());
        }

        let trivial = GaugeField::trivial(&net);
        let r = kl_isomorphism_check(&net, &trivial, 5000, 1, 0, 3.0).unwrap();
        for (v, &x) in r.vertices.iter().zip(net.interior()) {
            assert!((v.left_mean.mean() - gm.get(x, x) / 2.0).abs() < 4.0 * v.left_mean.std_error());
            assert!((v.right_mean.mean() - gm.get(x, x) / 2.0).abs() < 4.0 * v.right_mean.std_error());
        }
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let (net, g) = pt();
        assert_eq!(sample_loop_soup(&net, 0.5, 3).unwrap(), sample_loop_soup(&net, 0.5, 3).unwrap());
        let a = soup_statistics(&net, &g, 0.5, OnePointRate::Conductance, 3000, 4, 1).unwrap();
        let b = soup_statistics(&net, &g, 0.5, OnePointRate::Conductance, 3000, 4, 3).unwrap();
        assert_eq!(a.count, b.count);
        assert_eq!(a.occupation, b.occupation);
    }

    #[test]
    fn rejects_bad_alpha() {
        let (net, _) = pt();
        assert!(LoopSoupSampler::new(&net, 0.0).is_err());
        assert!(LoopSoupSampler::new(&net, f64::NAN).is_err());
    }
}
