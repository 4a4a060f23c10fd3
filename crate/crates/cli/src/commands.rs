use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ggff::cover::DoubleCover;
use ggff::gauge::{apply_gauge_transform, are_gauge_equivalent, is_trivial};
use ggff::gff::{
    conditional_moments as estimate_conditional_moments, estimate_event_probability, two_point_connectivity, McConfig,
    MetricFieldSampler,
};
use ggff::identities::identity_suite;
use ggff::loopsoup::{kl_isomorphism_check, soup_statistics, LoopSoupSampler, OnePointRate};
use ggff::network::{random_vertex_signs, NetworkFile};
use ggff::rng::substream;
use ggff::spectral::{
    det_ratio, green, laplacian, loop_mass, negative_holonomy_mass, twisted_green, twisted_laplacian,
    twisted_loop_mass, GreenMatrix,
};
use ggff::{ElectricalNetwork, Error, GaugeField, VertexSigns};
use serde_json::{json, Value};

use crate::report::{Provenance, Report, Verdict};
use crate::{Common, RateArg};

/// Tolerance for quantities that agree up to floating-point summation order.
const ROUNDING: f64 = 1e-12;

fn load(common: &Common) -> Result<(ElectricalNetwork, GaugeField)> {
    ElectricalNetwork::load(&common.network).with_context(|| format!("loading {}", common.network.display()))
}

fn base_inputs(common: &Common) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("network".into(), json!(common.network.display().to_string()));
    m.insert("seed".into(), json!(common.seed));
    m.insert("threads".into(), json!(common.threads));
    m
}

fn inputs(common: &Common, extra: Value) -> Value {
    let mut m = base_inputs(common);
    if let Value::Object(extra) = extra {
        m.extend(extra);
    }
    Value::Object(m)
}

fn vertex(net: &ElectricalNetwork, id: &str) -> Result<usize> {
    let v = net.vertex_index(id)?;
    if net.is_boundary(v) {
        bail!(Error::NotInterior(id.to_string()));
    }
    Ok(v)
}

fn resolve_pairs(net: &ElectricalNetwork, pairs: &[(String, String)], diagonal: bool) -> Result<Vec<(usize, usize)>> {
    if !pairs.is_empty() {
        return pairs.iter().map(|(a, b)| Ok((vertex(net, a)?, vertex(net, b)?))).collect();
    }
    let interior = net.interior();
    let mut out = Vec::new();
    for (i, &x) in interior.iter().enumerate() {
        for &y in &interior[if diagonal { i } else { i + 1 }..] {
            out.push((x, y));
        }
    }
    Ok(out)
}

fn signs_by_id(net: &ElectricalNetwork, vs: &VertexSigns) -> Value {
    let m: serde_json::Map<String, Value> =
        (0..net.num_vertices()).map(|v| (net.vertex_id(v).to_string(), json!(vs.sign(v).to_i8()))).collect();
    Value::Object(m)
}

fn matrix_json(g: &GreenMatrix) -> Value {
    let m = g.matrix();
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    json!({ "ids": g.ids(), "rows": rows })
}

pub fn validate(common: &Common) -> Result<Report> {
    let text = fs::read_to_string(&common.network).with_context(|| format!("reading {}", common.network.display()))?;
    let file = NetworkFile::parse(&text)?;
    let validation = file.validate();
    let mut report = Report::new("validate", inputs(common, json!({})), common.seed);
    report.result("issues", validation.messages());
    report.result("num_vertices", file.vertices.len());
    report.result("num_edges", file.edges.len());
    report.push(Verdict::exact("valid", validation.is_valid(), Provenance::ClosedForm));
    Ok(report.finish())
}

fn write_csv_files(net: &ElectricalNetwork, gauge: &GaugeField, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut open = |name: &str| -> Result<BufWriter<File>> {
        let p = dir.join(name);
        let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        written.push(p);
        Ok(BufWriter::new(f))
    };
    laplacian(net).to_csv(open("laplacian.csv")?)?;
    twisted_laplacian(net, gauge)?.to_csv(open("twisted_laplacian.csv")?)?;
    green(net)?.to_csv(open("green.csv")?)?;
    twisted_green(net, gauge)?.to_csv(open("twisted_green.csv")?)?;
    Ok(written)
}

pub fn identities(common: &Common, csv_dir: Option<&Path>) -> Result<Report> {
    let (net, gauge) = load(common)?;
    let vs = random_vertex_signs(&mut substream(common.seed, 0), &net);
    let extra = json!({ "csv_dir": csv_dir.map(|d| d.display().to_string()) });
    let mut report = Report::new("identities", inputs(common, extra), common.seed);
    report.result("det_ratio", det_ratio(&net, &gauge)?);
    report.result("loop_mass", loop_mass(&net)?);
    report.result("twisted_loop_mass", twisted_loop_mass(&net, &gauge)?);
    report.result("negative_holonomy_mass", negative_holonomy_mass(&net, &gauge)?);
    report.result("gauge_transform", signs_by_id(&net, &vs));
    report.result("green", matrix_json(&green(&net)?));
    report.result("twisted_green", matrix_json(&twisted_green(&net, &gauge)?));
    for check in identity_suite(&net, &gauge, &vs)? {
        report.push(Verdict::identity(&check));
    }
    if let Some(dir) = csv_dir {
        let files: Vec<String> = write_csv_files(&net, &gauge, dir)?.iter().map(|p| p.display().to_string()).collect();
        report.result("csv_files", files);
    }
    Ok(report.finish())
}

pub fn verify_theorem1(common: &Common, samples: u64, z: f64) -> Result<Report> {
    let (net, gauge) = load(common)?;
    let cfg = McConfig { n_samples: samples, seed: common.seed, threads: common.threads };
    let mut report = Report::new("verify-theorem1", inputs(common, json!({ "samples": samples, "z": z })), common.seed);
    let r = estimate_event_probability(&net, &gauge, &cfg)?;
    report.result("estimate", r);
    report.result("negative_holonomy_mass", negative_holonomy_mass(&net, &gauge)?);
    report.push(Verdict::estimate("event_probability", &r, z));
    Ok(report.finish())
}

pub fn conditional_moments(common: &Common, samples: u64, pairs: &[(String, String)], z: f64) -> Result<Report> {
    let (net, gauge) = load(common)?;
    let idx = resolve_pairs(&net, pairs, true)?;
    let cfg = McConfig { n_samples: samples, seed: common.seed, threads: common.threads };
    let names: Vec<String> = idx.iter().map(|&(x, y)| format!("{},{}", net.vertex_id(x), net.vertex_id(y))).collect();
    let extra = json!({ "samples": samples, "pairs": names, "z": z });
    let mut report = Report::new("conditional-moments", inputs(common, extra), common.seed);
    match estimate_conditional_moments(&net, &gauge, &idx, &cfg) {
        Ok(reports) => {
            let rows: Vec<Value> =
                names.iter().zip(&reports).map(|(n, r)| json!({ "pair": n, "estimate": r })).collect();
            report.result("moments", rows);
            for (n, r) in names.iter().zip(&reports) {
                report.push(Verdict::estimate(format!("flipped_moment[{n}]"), r, z));
            }
        }
        Err(e @ Error::EventNeverOccurred(_)) => {
            report.push(Verdict::failed("flipped_moments", Provenance::MonteCarlo, e.to_string()));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(report.finish())
}

pub fn connectivity(common: &Common, samples: u64, pairs: &[(String, String)], z: f64) -> Result<Report> {
    let (net, _) = load(common)?;
    let idx = resolve_pairs(&net, pairs, false)?;
    let cfg = McConfig { n_samples: samples, seed: common.seed, threads: common.threads };
    let names: Vec<String> = idx.iter().map(|&(x, y)| format!("{},{}", net.vertex_id(x), net.vertex_id(y))).collect();
    let extra = json!({ "samples": samples, "pairs": names, "z": z });
    let mut report = Report::new("connectivity", inputs(common, extra), common.seed);
    let mut rows = Vec::new();
    for (n, &(x, y)) in names.iter().zip(&idx) {
        let r = two_point_connectivity(&net, x, y, &cfg)?;
        rows.push(json!({ "pair": n, "estimate": r }));
        report.push(Verdict::estimate(format!("same_cluster[{n}]"), &r, z));
    }
    report.result("connectivity", rows);
    Ok(report.finish())
}

pub struct LoopsoupOptions {
    pub samples: u64,
    pub alpha: f64,
    pub rate: RateArg,
    pub z: f64,
    pub z_second: f64,
    pub dump_loops: Option<PathBuf>,
    pub dump_soups: u64,
}

fn dump_loops(
    net: &ElectricalNetwork,
    gauge: &GaugeField,
    sampler: &LoopSoupSampler,
    seed: u64,
    n: u64,
    path: &Path,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for i in 0..n {
        let soup = sampler.sample(&mut substream(seed, i))?;
        for l in &soup.loops {
            let ids: Vec<&str> = l.skeleton.iter().map(|&v| net.vertex_id(v)).collect();
            let line = json!({
                "soup": i,
                "skeleton": ids,
                "holding_times": l.holding_times,
                "holonomy": l.holonomy(net, gauge)?.to_i8(),
            });
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn loopsoup_test(common: &Common, opts: &LoopsoupOptions) -> Result<Report> {
    let (net, gauge) = load(common)?;
    let rate = match opts.rate {
        RateArg::Conductance => OnePointRate::Conductance,
        RateArg::Green => OnePointRate::Green,
    };
    let extra = json!({
        "samples": opts.samples,
        "alpha": opts.alpha,
        "one_point_rate": rate,
        "z": opts.z,
        "z_second": opts.z_second,
        "dump_loops": opts.dump_loops.as_ref().map(|p| p.display().to_string()),
        "dump_soups": opts.dump_soups,
    });
    let mut report = Report::new("loopsoup-test", inputs(common, extra), common.seed);
    let alpha = opts.alpha;
    let stats = soup_statistics(&net, &gauge, alpha, rate, opts.samples, common.seed, common.threads)?;
    let g = green(&net)?;
    let mass = loop_mass(&net)?;
    let neg = negative_holonomy_mass(&net, &gauge)?;
    report.push(Verdict::moment("loop_count_mean", stats.count.mean(), stats.count.std_error(), alpha * mass, opts.z));
    report.push(Verdict::moment(
        "negative_loop_count_mean",
        stats.negative_count.mean(),
        stats.negative_count.std_error(),
        alpha * neg,
        opts.z,
    ));
    for (j, &x) in net.interior().iter().enumerate() {
        let id = net.vertex_id(x);
        let gxx = g.get(x, x);
        let (m1, m2) = (&stats.occupation[j], &stats.occupation_sq[j]);
        report.push(Verdict::moment(format!("occupation_mean[{id}]"), m1.mean(), m1.std_error(), alpha * gxx, opts.z));
        // ℓ^x is Gamma(α, G(x,x)) distributed
        let second = alpha * (alpha + 1.0) * gxx * gxx;
        report.push(Verdict::moment(
            format!("occupation_second_moment[{id}]"),
            m2.mean(),
            m2.std_error(),
            second,
            opts.z_second,
        ));
    }
    report.push(Verdict::absolute(
        "holonomy_split_preserves_occupation",
        stats.max_split_residual,
        0.0,
        ROUNDING,
        Provenance::ClosedForm,
    ));

    let kl = kl_isomorphism_check(&net, &gauge, opts.samples, common.seed, common.threads, opts.z)?;
    for v in &kl.vertices {
        report.push(Verdict::discrepancy(
            format!("twisted_isomorphism_mean[{}]", v.vertex),
            v.mean_discrepancy,
            opts.z_second,
        ));
        report.push(Verdict::discrepancy(
            format!("twisted_isomorphism_second_moment[{}]", v.vertex),
            v.second_discrepancy,
            opts.z_second,
        ));
        report.push(Verdict::discrepancy(
            format!("stochastic_domination[{}]", v.vertex),
            v.domination.worst_z.max(0.0),
            opts.z,
        ));
    }
    report.result("alpha", alpha);
    report.result("loop_mass", mass);
    report.result("negative_holonomy_mass", neg);
    report.result("statistics", &stats);
    report.result("twisted_isomorphism", &kl);
    if let Some(path) = &opts.dump_loops {
        let sampler = LoopSoupSampler::with_rate(&net, alpha, rate)?;
        dump_loops(&net, &gauge, &sampler, common.seed, opts.dump_soups, path)?;
    }
    Ok(report.finish())
}

pub fn gauge(common: &Common, other: Option<&Path>) -> Result<Report> {
    let (net, sigma) = load(common)?;
    let extra = json!({ "other": other.map(|p| p.display().to_string()) });
    let mut report = Report::new("gauge", inputs(common, extra), common.seed);
    let trivial = is_trivial(&net, &sigma)?;
    let connected = DoubleCover::new(&net, &sigma)?.is_connected();
    report.result("trivial", trivial.is_some());
    report.result("cover_connected", connected);
    report.result("minus_edges", sigma.minus_edges().map(|e| net.edge(e).id.clone()).collect::<Vec<_>>());
    report.push(Verdict::exact(
        "cover_connected_iff_nontrivial",
        connected == trivial.is_none(),
        Provenance::ClosedForm,
    ));
    if let Some(cert) = &trivial {
        report.result("triviality_certificate", signs_by_id(&net, cert));
        let ok = apply_gauge_transform(&net, cert, &GaugeField::trivial(&net))? == sigma;
        report.push(Verdict::exact("triviality_certificate_verified", ok, Provenance::ClosedForm));
    }
    if let Some(path) = other {
        let (other_net, other_sigma) =
            ElectricalNetwork::load(path).with_context(|| format!("loading {}", path.display()))?;
        let same_graph = other_net.vertex_ids() == net.vertex_ids()
            && other_net.edges().iter().zip(net.edges()).all(|(a, b)| (a.u, a.v) == (b.u, b.v))
            && other_net.num_edges() == net.num_edges();
        if !same_graph {
            bail!("{} does not describe the same graph", path.display());
        }
        let equivalent = are_gauge_equivalent(&net, &sigma, &other_sigma)?;
        report.result("equivalent", equivalent.is_some());
        match &equivalent {
            Some(cert) => {
                report.result("equivalence_certificate", signs_by_id(&net, cert));
                let ok = apply_gauge_transform(&net, cert, &sigma)? == other_sigma;
                report.push(Verdict::exact("equivalence_certificate_verified", ok, Provenance::ClosedForm));
            }
            None => {
                // σ and σ' are inequivalent iff σσ' is non-trivial, i.e. its cover is connected
                let product: Vec<_> = sigma.signs().iter().zip(other_sigma.signs()).map(|(&a, &b)| a * b).collect();
                let product = GaugeField::from_signs(&net, product)?;
                let ok = DoubleCover::new(&net, &product)?.is_connected();
                report.push(Verdict::exact("inequivalence_confirmed_by_cover", ok, Provenance::ClosedForm));
            }
        }
    }
    Ok(report.finish())
}

pub fn metric_grid(common: &Common, cells: usize, samples: u64) -> Result<Report> {
    let (net, gauge) = load(common)?;
    let sampler = MetricFieldSampler::new(&net, &gauge, cells)?;
    let mut report =
        Report::new("metric-grid", inputs(common, json!({ "cells": cells, "samples": samples })), common.seed);
    let mut grids = Vec::new();
    let mut negated = true;
    let mut continuous = true;
    for i in 0..samples {
        let grid = sampler.sample(&mut substream(common.seed, i));
        for t in &grid.edges {
            if let Some(m) = t.middle {
                negated &= m.right == -m.left;
                continuous &= m.right.abs() == m.left.abs();
            }
        }
        let vertex_values: serde_json::Map<String, Value> =
            (0..net.num_vertices()).map(|v| (net.vertex_id(v).to_string(), json!(grid.vertex_values[v]))).collect();
        grids.push(json!({ "vertex_values": vertex_values, "edges": grid.edges }));
    }
    report.result("grids", grids);
    report.push(Verdict::exact("middle_limits_negated", negated, Provenance::ClosedForm));
    report.push(Verdict::exact("absolute_value_continuous_at_middle", continuous, Provenance::ClosedForm));
    Ok(report.finish())
}
