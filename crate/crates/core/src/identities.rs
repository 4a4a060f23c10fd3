//! The exact identity suite: every closed-form relation between Green
//! functions, determinants and loop masses, evaluated as residuals.

use serde::Serialize;

use crate::error::Result;
use crate::gauge::apply_gauge_transform;
use crate::network::{ElectricalNetwork, GaugeField, VertexSigns};
use crate::spectral::{
    cover_green_relations, det_ratio, gauge_covariance_residual, laplacian, negative_holonomy_mass,
    subdivision_residual, subspace_determinants, twisted_laplacian,
};

pub const EXACT_TOLERANCE: f64 = 1e-10;
pub const SUBDIVISION_TOLERANCE: f64 = 1e-8;
pub const SUBDIVISIONS: [usize; 2] = [3, 5];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    /// "absolute" or "relative".
    pub kind: &'static str,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64, kind: &'static str) -> IdentityCheck {
        IdentityCheck { name: name.into(), residual, tolerance, kind }
    }

    pub fn pass(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance
    }
}

/// |a / b - 1| from logarithms.
fn log_relative(log_a: f64, log_b: f64) -> f64 {
    (log_a - log_b).exp_m1().abs()
}

/// Evaluates every identity for `(net, gauge)`; `vs` is the gauge
/// transformation used for the covariance and invariance checks.
pub fn identity_suite(net: &ElectricalNetwork, gauge: &GaugeField, vs: &VertexSigns) -> Result<Vec<IdentityCheck>> {
    let mut out = Vec::new();
    let ratio = det_ratio(net, gauge)?;
    let mu_minus = negative_holonomy_mass(net, gauge)?;
    out.push(IdentityCheck::new(
        "det_ratio_vs_negative_holonomy_mass",
        (ratio - (-mu_minus).exp()).abs(),
        EXACT_TOLERANCE,
        "absolute",
    ));

    let dets = subspace_determinants(net, gauge)?;
    let log_det = laplacian(net).log_det()?;
    let log_det_twisted = twisted_laplacian(net, gauge)?.log_det()?;
    out.push(IdentityCheck::new(
        "det_plus_is_inverse_det_green",
        log_relative(dets.log_det_plus, log_det),
        EXACT_TOLERANCE,
        "relative",
    ));
    out.push(IdentityCheck::new(
        "det_minus_is_inverse_det_twisted_green",
        log_relative(dets.log_det_minus, log_det_twisted),
        EXACT_TOLERANCE,
        "relative",
    ));
    out.push(IdentityCheck::new(
        "subspace_product_is_cover_det",
        log_relative(dets.log_det_plus + dets.log_det_minus, dets.log_det_full),
        EXACT_TOLERANCE,
        "relative",
    ));

    let cover = cover_green_relations(net, gauge)?;
    out.push(IdentityCheck::new("cover_green_sum", cover.untwisted_residual, EXACT_TOLERANCE, "absolute"));
    out.push(IdentityCheck::new("cover_green_difference", cover.twisted_residual, EXACT_TOLERANCE, "absolute"));
    out.push(IdentityCheck::new("cover_green_deck_symmetry", cover.deck_residual, EXACT_TOLERANCE, "absolute"));

    out.push(IdentityCheck::new(
        "gauge_covariance",
        gauge_covariance_residual(net, gauge, vs)?,
        EXACT_TOLERANCE,
        "absolute",
    ));
    let moved = apply_gauge_transform(net, vs, gauge)?;
    out.push(IdentityCheck::new(
        "det_ratio_gauge_invariance",
        (det_ratio(net, &moved)? - ratio).abs(),
        EXACT_TOLERANCE,
        "absolute",
    ));

    for n in SUBDIVISIONS {
        let r = subdivision_residual(net, gauge, n)?;
        out.push(IdentityCheck::new(
            format!("subdivision_{n}_untwisted"),
            r.untwisted,
            SUBDIVISION_TOLERANCE,
            "absolute",
        ));
        out.push(IdentityCheck::new(format!("subdivision_{n}_twisted"), r.twisted, SUBDIVISION_TOLERANCE, "absolute"));
    }
    Ok(out)
}
