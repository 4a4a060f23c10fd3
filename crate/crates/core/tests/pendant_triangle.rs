//! Closed-form values on the pendant triangle: a boundary vertex b attached
//! to x, and a triangle x, y, z, all conductances 1, with the edge yz
//! twisted. Reference values come from 3×3 rational arithmetic done here.

use approx::assert_abs_diff_eq;
use ggff::cover::DoubleCover;
use ggff::gauge::is_trivial;
use ggff::spectral::{det_ratio, green, loop_mass, negative_holonomy_mass, twisted_green, twisted_loop_mass};
use ggff::{ElectricalNetwork, GaugeField};

/// Exact inverse of a 3×3 integer matrix as (adjugate, determinant).
fn adjugate3(m: [[i64; 3]; 3]) -> ([[i64; 3]; 3], i64) {
    let c = |i: usize, j: usize| {
        let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        let s: Vec<usize> = (0..3).filter(|&k| k != j).collect();
        let minor = m[r[0]][s[0]] * m[r[1]][s[1]] - m[r[0]][s[1]] * m[r[1]][s[0]];
        if (i + j).is_multiple_of(2) {
            minor
        } else {
            -minor
        }
    };
    let adj = std::array::from_fn(|j| std::array::from_fn(|i| c(i, j)));
    let det = (0..3).map(|j| m[0][j] * c(0, j)).sum();
    (adj, det)
}

fn setup() -> (ElectricalNetwork, GaugeField) {
    let net = ElectricalNetwork::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/pt.json")).unwrap().0;
    let g = GaugeField::with_minus_edges(&net, &["yz"]).unwrap();
    (net, g)
}

#[test]
fn green_functions_match_rational_inverse() {
    let (net, g) = setup();
    let (adj, det) = adjugate3([[3, -1, -1], [-1, 2, -1], [-1, -1, 2]]);
    let (adj_s, det_s) = adjugate3([[3, -1, -1], [-1, 2, 1], [-1, 1, 2]]);
    assert_eq!((det, det_s), (3, 7));
    let gm = green(&net).unwrap();
    let gs = twisted_green(&net, &g).unwrap();
    let idx: Vec<usize> = ["x", "y", "z"].iter().map(|v| net.vertex_index(v).unwrap()).collect();
    for i in 0..3 {
        for j in 0..3 {
            assert_abs_diff_eq!(gm.get(idx[i], idx[j]), adj[i][j] as f64 / det as f64, epsilon = 1e-13);
            assert_abs_diff_eq!(gs.get(idx[i], idx[j]), adj_s[i][j] as f64 / det_s as f64, epsilon = 1e-13);
        }
    }
    assert_abs_diff_eq!(gs.get(idx[1], idx[2]), -2.0 / 7.0, epsilon = 1e-13);
}

#[test]
fn masses_and_ratio() {
    let (net, g) = setup();
    // Π W = 3·2·2 = 12; det G = 1/3, det G_σ = 1/7
    assert_abs_diff_eq!(loop_mass(&net).unwrap(), (12.0f64 / 3.0).ln(), epsilon = 1e-12);
    assert_abs_diff_eq!(twisted_loop_mass(&net, &g).unwrap(), (12.0f64 / 7.0).ln(), epsilon = 1e-12);
    assert_abs_diff_eq!(negative_holonomy_mass(&net, &g).unwrap(), 0.5 * (7.0f64 / 3.0).ln(), epsilon = 1e-12);
    assert_abs_diff_eq!(det_ratio(&net, &g).unwrap(), (3.0f64 / 7.0).sqrt(), epsilon = 1e-12);
}

#[test]
fn trivial_data_file_is_trivial() {
    let (net, g) = ElectricalNetwork::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/pt_trivial.json")).unwrap();
    assert!(g.is_all_plus());
    assert!(is_trivial(&net, &g).unwrap().is_some());
    assert_abs_diff_eq!(det_ratio(&net, &g).unwrap(), 1.0, epsilon = 1e-14);
}

#[test]
fn twisted_data_file_carries_its_gauge() {
    let (net, g) = ElectricalNetwork::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/pt.json")).unwrap();
    assert_eq!(g, setup().1);
    assert!(is_trivial(&net, &g).unwrap().is_none());
    assert!(DoubleCover::new(&net, &g).unwrap().is_connected());
}
