//! Gauge-twisted Gaussian free fields on electrical networks.
//!
//! The crate computes the closed-form determinant and loop-mass identities
//! relating the discrete and metric-graph Gaussian free field, its version
//! twisted by a ±1 gauge field, the double cover induced by the gauge field
//! and the random walk loop soup, and checks them by exact Monte Carlo
//! sampling. The central quantity is the probability that no sign cluster of
//! the metric-graph free field carries a loop of holonomy -1, which equals
//! `[det G_σ / det G]^{1/2}`.

pub mod cover;
pub mod error;
pub mod gauge;
pub mod gff;
pub mod identities;
pub mod loopsoup;
pub mod network;
pub mod rng;
pub mod sign;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use network::{ElectricalNetwork, GaugeField, VertexSigns};
pub use sign::Sign;
