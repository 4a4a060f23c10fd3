//! Laplacians, Green functions, determinants and the closed-form loop-mass
//! identities built from them.
//!
//! Every matrix is indexed by the interior vertices in sorted id order and
//! carries that ordering. Determinants are handled as logarithms accumulated
//! from Cholesky diagonals.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::cover::{DoubleCover, Sheet};
use crate::error::{Error, Result};
use crate::gauge::apply_gauge_transform;
use crate::network::{subdivide, ElectricalNetwork, GaugeField, VertexSigns};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Untwisted,
    Twisted,
    Cover,
}

/// -Δ (or -Δ_σ) restricted to interior vertices with zero boundary values.
#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    order: Vec<usize>,
    ids: Vec<String>,
    matrix: DMatrix<f64>,
    kind: MatrixKind,
}

/// Cholesky factorization with its log-determinant.
pub struct Factorization {
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl Factorization {
    pub fn new(m: &DMatrix<f64>, what: &str) -> Result<Factorization> {
        let chol = Cholesky::new(m.clone()).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Factorization { chol, log_det })
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }
}

fn assemble(net: &ElectricalNetwork, gauge: Option<&GaugeField>, kind: MatrixKind) -> Result<LaplacianMatrix> {
    if let Some(g) = gauge {
        g.check(net)?;
    }
    let order = net.interior().to_vec();
    let n = order.len();
    let mut matrix = DMatrix::zeros(n, n);
    for (i, &x) in order.iter().enumerate() {
        matrix[(i, i)] = net.total_conductance(x);
    }
    for (k, e) in net.edges().iter().enumerate() {
        if let (Some(i), Some(j)) = (net.interior_position(e.u), net.interior_position(e.v)) {
            let s = gauge.map_or(1.0, |g| g.sign(k).to_f64());
            matrix[(i, j)] -= s * e.conductance;
            matrix[(j, i)] -= s * e.conductance;
        }
    }
    let ids = order.iter().map(|&v| net.vertex_id(v).to_string()).collect();
    Ok(LaplacianMatrix { order, ids, matrix, kind })
}

/// -Δ_G on interior vertices.
pub fn laplacian(net: &ElectricalNetwork) -> LaplacianMatrix {
    assemble(net, None, MatrixKind::Untwisted).expect("untwisted assembly cannot fail")
}

/// -Δ_{G,σ} on interior vertices: off-diagonal entries -σ(x,y) C(x,y).
pub fn twisted_laplacian(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<LaplacianMatrix> {
    assemble(net, Some(gauge), MatrixKind::Twisted)
}

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Vertex indices of the rows, in order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn factorize(&self) -> Result<Factorization> {
        Factorization::new(&self.matrix, "Laplacian")
    }

    pub fn log_det(&self) -> Result<f64> {
        Ok(self.factorize()?.log_det())
    }

    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(&self.ids, &self.matrix, out)
    }
}

#[derive(Debug, Clone)]
pub struct GreenMatrix {
    order: Vec<usize>,
    ids: Vec<String>,
    positions: Vec<Option<usize>>,
    matrix: DMatrix<f64>,
    kind: MatrixKind,
    max_asymmetry: f64,
}

impl GreenMatrix {
    fn from_laplacian(lap: &LaplacianMatrix, num_vertices: usize) -> Result<GreenMatrix> {
        let fact = lap.factorize()?;
        let raw = fact.inverse();
        let max_asymmetry = (&raw - raw.transpose()).amax();
        let matrix = (&raw + raw.transpose()) * 0.5;
        let mut positions = vec![None; num_vertices];
        for (p, &v) in lap.order.iter().enumerate() {
            positions[v] = Some(p);
        }
        Ok(GreenMatrix {
            order: lap.order.clone(),
            ids: lap.ids.clone(),
            positions,
            matrix,
            kind: lap.kind,
            max_asymmetry,
        })
    }

    /// G(x, y) for vertex indices; zero when either vertex is on the boundary.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        match (self.positions[x], self.positions[y]) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => 0.0,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// Largest |G(x,y) - G(y,x)| of the raw inverse, before symmetrization.
    pub fn max_asymmetry(&self) -> f64 {
        self.max_asymmetry
    }

    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(&self.ids, &self.matrix, out)
    }
}

fn write_csv<W: Write>(ids: &[String], m: &DMatrix<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ids)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn green(net: &ElectricalNetwork) -> Result<GreenMatrix> {
    GreenMatrix::from_laplacian(&laplacian(net), net.num_vertices())
}

pub fn twisted_green(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<GreenMatrix> {
    GreenMatrix::from_laplacian(&twisted_laplacian(net, gauge)?, net.num_vertices())
}

/// Green function of the double cover network, indexed by cover vertices.
pub fn cover_green(cover: &DoubleCover) -> Result<GreenMatrix> {
    let mut lap = laplacian(cover.network());
    lap.kind = MatrixKind::Cover;
    GreenMatrix::from_laplacian(&lap, cover.network().num_vertices())
}

/// [det G_σ / det G]^{1/2}, i.e. [det(-Δ) / det(-Δ_σ)]^{1/2}.
pub fn det_ratio(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<f64> {
    let plain = laplacian(net).log_det()?;
    let twisted = twisted_laplacian(net, gauge)?.log_det()?;
    Ok((0.5 * (plain - twisted)).exp())
}

fn log_weight_product(net: &ElectricalNetwork) -> f64 {
    net.interior().iter().map(|&x| net.total_conductance(x).ln()).sum()
}

/// Mass of loops visiting at least two vertices: log(det G · Π W(x)).
pub fn loop_mass(net: &ElectricalNetwork) -> Result<f64> {
    Ok(log_weight_product(net) - laplacian(net).log_det()?)
}

/// Signed mass of multi-vertex loops weighted by holonomy: log(det G_σ · Π W(x)).
pub fn twisted_loop_mass(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<f64> {
    Ok(log_weight_product(net) - twisted_laplacian(net, gauge)?.log_det()?)
}

/// Loop-measure mass of loops with holonomy -1.
pub fn negative_holonomy_mass(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<f64> {
    Ok(0.5 * (loop_mass(net)? - twisted_loop_mass(net, gauge)?))
}

/// Residuals of G = G^db(x₁,y₁) + G^db(x₁,y₂) and G_σ = G^db(x₁,y₁) - G^db(x₁,y₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverGreenReport {
    pub untwisted_residual: f64,
    pub twisted_residual: f64,
    /// max |G^db(ψx̂, ψŷ) - G^db(x̂, ŷ)|
    pub deck_residual: f64,
    /// max |G^db(x₁, y₂)|
    pub max_cross_sheet: f64,
}

pub fn cover_green_relations(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<CoverGreenReport> {
    let cover = DoubleCover::new(net, gauge)?;
    let gdb = cover_green(&cover)?;
    let g = green(net)?;
    let gs = twisted_green(net, gauge)?;
    let mut report =
        CoverGreenReport { untwisted_residual: 0.0, twisted_residual: 0.0, deck_residual: 0.0, max_cross_sheet: 0.0 };
    for &x in net.interior() {
        for &y in net.interior() {
            let same = gdb.get(cover.lift(x, Sheet::One), cover.lift(y, Sheet::One));
            let cross = gdb.get(cover.lift(x, Sheet::One), cover.lift(y, Sheet::Two));
            report.untwisted_residual = report.untwisted_residual.max((g.get(x, y) - (same + cross)).abs());
            report.twisted_residual = report.twisted_residual.max((gs.get(x, y) - (same - cross)).abs());
            report.max_cross_sheet = report.max_cross_sheet.max(cross.abs());
        }
    }
    let cov = cover.network();
    for &a in cov.interior() {
        for &b in cov.interior() {
            let d = (gdb.get(cover.deck(a), cover.deck(b)) - gdb.get(a, b)).abs();
            report.deck_residual = report.deck_residual.max(d);
        }
    }
    Ok(report)
}

/// Determinants of -Δ^db_σ restricted to deck-symmetric (f∘ψ = f) and
/// deck-antisymmetric (f∘ψ = -f) functions vanishing on the boundary, and of
/// the full cover operator. Stored as logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceDeterminants {
    pub log_det_plus: f64,
    pub log_det_minus: f64,
    pub log_det_full: f64,
}

impl SubspaceDeterminants {
    pub fn det_plus(&self) -> f64 {
        self.log_det_plus.exp()
    }

    pub fn det_minus(&self) -> f64 {
        self.log_det_minus.exp()
    }

    pub fn det_full(&self) -> f64 {
        self.log_det_full.exp()
    }
}

pub fn subspace_determinants(net: &ElectricalNetwork, gauge: &GaugeField) -> Result<SubspaceDeterminants> {
    let cover = DoubleCover::new(net, gauge)?;
    let lap = laplacian(cover.network());
    let rows = lap.order().len();
    let n = net.num_interior();
    // Orthonormal bases (δ_{x₁} ± δ_{x₂})/√2 indexed by the interior of the
    // sheet-1 fundamental domain.
    let mut plus = DMatrix::zeros(rows, n);
    let mut minus = DMatrix::zeros(rows, n);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let cover_net = cover.network();
    for (k, &x) in net.interior().iter().enumerate() {
        let one = cover_net.interior_position(cover.lift(x, Sheet::One)).expect("interior lift");
        let two = cover_net.interior_position(cover.lift(x, Sheet::Two)).expect("interior lift");
        plus[(one, k)] = h;
        plus[(two, k)] = h;
        minus[(one, k)] = h;
        minus[(two, k)] = -h;
    }
    let m = lap.matrix();
    let restricted_plus = plus.transpose() * m * &plus;
    let restricted_minus = minus.transpose() * m * &minus;
    Ok(SubspaceDeterminants {
        log_det_plus: Factorization::new(&restricted_plus, "symmetric subspace")?.log_det(),
        log_det_minus: Factorization::new(&restricted_minus, "antisymmetric subspace")?.log_det(),
        log_det_full: lap.log_det()?,
    })
}

/// max |G_{σ̂·σ}(x,y) - σ̂(x) G_σ(x,y) σ̂(y)| over interior pairs.
pub fn gauge_covariance_residual(net: &ElectricalNetwork, gauge: &GaugeField, vs: &VertexSigns) -> Result<f64> {
    let moved = apply_gauge_transform(net, vs, gauge)?;
    let g = twisted_green(net, gauge)?;
    let gm = twisted_green(net, &moved)?;
    let mut worst = 0.0f64;
    for &x in net.interior() {
        for &y in net.interior() {
            let conj = vs.sign(x).to_f64() * g.get(x, y) * vs.sign(y).to_f64();
            worst = worst.max((gm.get(x, y) - conj).abs());
        }
    }
    Ok(worst)
}

/// Largest deviation between the Green functions of G^(n) restricted to the
/// original vertices and those of G, untwisted and twisted by σ^(n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubdivisionResidual {
    pub n: usize,
    pub untwisted: f64,
    pub twisted: f64,
}

pub fn subdivision_residual(net: &ElectricalNetwork, gauge: &GaugeField, n: usize) -> Result<SubdivisionResidual> {
    let (sub, sub_gauge) = subdivide(net, gauge, n)?;
    let g = green(net)?;
    let gs = twisted_green(net, gauge)?;
    let g_sub = green(&sub.network)?;
    let gs_sub = twisted_green(&sub.network, &sub_gauge)?;
    let mut out = SubdivisionResidual { n, untwisted: 0.0, twisted: 0.0 };
    for &x in net.interior() {
        for &y in net.interior() {
            let (xs, ys) = (sub.parent_vertex[x], sub.parent_vertex[y]);
            out.untwisted = out.untwisted.max((g_sub.get(xs, ys) - g.get(x, y)).abs());
            out.twisted = out.twisted.max((gs_sub.get(xs, ys) - gs.get(x, y)).abs());
        }
    }
    Ok(out)
}
