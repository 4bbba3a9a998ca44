//! Commands behind the `finehyp` binary: configuration, reports, rendering.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fine::{conical_thinness_violation, fineness_report, Geometry};
use crate::generators::{
    cayley_ball, cycle, left_translation, path, random_tree, regular_tree_ball, star, BallOptions,
    FreeProductSpec, TruncatedSpace,
};
use crate::graph::{
    hyperbolicity_delta, read_graph_file, some_geodesic, threshold_delta, Edge, Vertex,
};
use crate::hilbert::{
    basepoint_matrix, cocycle_norm_sq, decompose_class_general, decompose_class_tree, h_norm_sq,
    measure_k, operator_norm, phi, pi_operator_norm, theta, verify_decomposition,
    DecompositionMethod, FinSuppFunction, GrowthBound, Rational, SignedDecomposition, PHI_BOUND,
};
use crate::partitions::{sphere_partition, ClassIndex};
use crate::triangles::{
    check_normal_triangle, normal_triangle, on_every_geodesic_fast, TriangleConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Delta,
    Audit,
    Verify,
    Report,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphSource {
    File(PathBuf),
    /// `Z*Z3`, `tree:N`, `path:N`, `cycle:N`, `star:N` or `regular:Q`.
    Gen(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// Ignored by `report`, which runs its own fixtures.
    pub source: Option<GraphSource>,
    /// Ball radius for generated spaces.
    pub radius: Option<u32>,
    pub base: Option<Vertex>,
    pub word: Option<String>,
    /// Used as the angle and distance scale instead of the computed one.
    pub delta: Option<u32>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub budget_vertices: usize,
    pub budget_loops: u64,
    /// Largest sphere radius for classes at the basepoint.
    pub max_n: u32,
    /// Largest `d(x, x')` for decompositions and group elements.
    pub max_displacement: u32,
    /// Loop length for the fineness audit.
    pub loop_len: u32,
    pub tree_oracle: bool,
    /// Adds wall-clock timings, which makes output non-reproducible.
    pub timing: bool,
}

impl RunConfig {
    pub fn new(command: Command, source: Option<GraphSource>) -> Self {
        RunConfig {
            command,
            source,
            radius: None,
            base: None,
            word: None,
            delta: None,
            out: None,
            format: Format::Json,
            seed: 0,
            budget_vertices: 5_000,
            budget_loops: 1_000_000,
            max_n: 3,
            max_displacement: 2,
            loop_len: 5,
            tree_oracle: false,
            timing: false,
        }
    }
}

/// One invariant; failures carry a concrete counterexample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Vertex>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
            measured: None,
            bound: None,
            witness: None,
            detail: None,
        }
    }

    fn measured(mut self, m: f64, bound: Option<f64>) -> Self {
        self.measured = Some(m);
        self.bound = bound;
        self
    }

    fn witness(mut self, w: Option<Vec<Vertex>>) -> Self {
        self.witness = w;
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<u32>,
    /// The scale actually multiplying angle and distance constants.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_scale: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<u64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(rename = "cone_224", skip_serializing_if = "Option::is_none")]
    pub cone_size: Option<usize>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub source: String,
    pub vertices: usize,
    pub edges: usize,
    pub base: Vertex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSummary>,
    pub constants: Constants,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, u128>>,
}

impl Report {
    fn new(command: &str) -> Self {
        Report {
            command: command.into(),
            graph: None,
            constants: Constants::default(),
            checks: Vec::new(),
            tables: Vec::new(),
            timing_ms: None,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `0` when every check passes, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    fn time(&mut self, cfg: &RunConfig, label: &str, start: Instant) {
        if cfg.timing {
            self.timing_ms
                .get_or_insert_with(BTreeMap::new)
                .insert(label.into(), start.elapsed().as_millis());
        }
    }
}

/// A loaded graph with its geometry and, for generated groups, the space.
pub struct Fixture {
    pub name: String,
    pub geo: Geometry,
    pub base: Vertex,
    pub space: Option<TruncatedSpace>,
}

fn parse_count(spec: &str, arg: &str) -> Result<usize> {
    arg.parse()
        .map_err(|_| Error::Usage(format!("bad size in generator spec {spec:?}")))
}

/// Builds the graph named by `source`.
pub fn load_fixture(cfg: &RunConfig, source: &GraphSource) -> Result<Fixture> {
    let (name, graph, space) = match source {
        GraphSource::File(p) => (p.display().to_string(), read_graph_file(p)?, None),
        GraphSource::Gen(spec) => {
            let (kind, arg) = spec.split_once(':').unwrap_or((spec.as_str(), ""));
            match kind {
                "tree" => (
                    spec.clone(),
                    random_tree(parse_count(spec, arg)?, cfg.seed)?,
                    None,
                ),
                "path" => (spec.clone(), path(parse_count(spec, arg)?)?, None),
                "cycle" => (spec.clone(), cycle(parse_count(spec, arg)?)?, None),
                "star" => (spec.clone(), star(parse_count(spec, arg)?)?, None),
                "regular" => {
                    let sp = regular_tree_ball(parse_count(spec, arg)?, cfg.radius.unwrap_or(3))?;
                    (spec.clone(), sp.graph.clone(), Some(sp))
                }
                _ => {
                    let fp: FreeProductSpec = spec.parse()?;
                    let opts = BallOptions {
                        budget_vertices: cfg.budget_vertices,
                        ..BallOptions::default()
                    };
                    let sp = cayley_ball(&fp, cfg.radius.unwrap_or(4), &opts)?;
                    (spec.clone(), sp.graph.clone(), Some(sp))
                }
            }
        }
    };
    if graph.vertex_count() > cfg.budget_vertices {
        return Err(Error::BudgetExceeded(format!(
            "{} vertices (budget {})",
            graph.vertex_count(),
            cfg.budget_vertices
        )));
    }
    let base = match (cfg.base, &space) {
        (Some(b), _) if b >= graph.vertex_count() => return Err(Error::UnknownVertex(b)),
        (Some(b), _) => b,
        (None, Some(sp)) => sp.base,
        (None, None) => 0,
    };
    Ok(Fixture {
        name,
        geo: Geometry::new(graph),
        base,
        space,
    })
}

fn summary(fx: &Fixture) -> GraphSummary {
    GraphSummary {
        source: fx.name.clone(),
        vertices: fx.geo.graph.vertex_count(),
        edges: fx.geo.graph.edge_count(),
        base: fx.base,
    }
}

fn source(cfg: &RunConfig) -> Result<&GraphSource> {
    cfg.source
        .as_ref()
        .ok_or_else(|| Error::Usage("a graph source (--graph or --gen) is required".into()))
}

/// `(δ, scale)`: the computed constant and the scale used for thresholds.
fn delta_and_scale(cfg: &RunConfig, fx: &Fixture, report: &mut Report) -> Result<(u32, u32)> {
    let est = hyperbolicity_delta(&fx.geo.graph, &fx.geo.dist, cfg.budget_vertices)?;
    let scale = cfg
        .delta
        .unwrap_or_else(|| threshold_delta(&fx.geo.graph, est.delta));
    report.constants.delta = Some(est.delta);
    report.constants.delta_scale = Some(scale);
    Ok((est.delta, scale))
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    match cfg.command {
        Command::Delta => cmd_delta(cfg),
        Command::Audit => cmd_audit(cfg),
        Command::Verify => cmd_verify(cfg),
        Command::Report => cmd_report(cfg),
    }
}

/// Hyperbolicity constant of the input graph.
pub fn cmd_delta(cfg: &RunConfig) -> Result<Report> {
    let fx = load_fixture(cfg, source(cfg)?)?;
    let mut report = Report::new("delta");
    report.graph = Some(summary(&fx));
    let start = Instant::now();
    let est = hyperbolicity_delta(&fx.geo.graph, &fx.geo.dist, cfg.budget_vertices)?;
    report.time(cfg, "delta", start);
    report.constants.delta = Some(est.delta);
    report.constants.delta_scale = Some(threshold_delta(&fx.geo.graph, est.delta));
    report.checks.push(
        Check::new("delta", true)
            .measured(est.delta as f64, None)
            .witness(est.witness.map(|w| w.to_vec())),
    );
    if fx.geo.graph.is_tree() {
        report.checks.push(
            Check::new("tree_delta_zero", est.delta == 0).witness(est.witness.map(|w| w.to_vec())),
        );
    }
    Ok(report)
}

/// `∠_v(e1, e3) ≤ ∠_v(e1, e2) + ∠_v(e2, e3)` at every vertex.
fn angle_triangle_inequality(geo: &Geometry) -> Option<Vec<Vertex>> {
    for v in geo.graph.vertices() {
        let nb = geo.graph.neighbors(v);
        for &a in nb {
            for &b in nb {
                for &c in nb {
                    if geo.angle(v, a, c) > geo.angle(v, a, b) + geo.angle(v, b, c) {
                        return Some(vec![v, a, b, c]);
                    }
                }
            }
        }
    }
    None
}

/// A triple `(a, b, c)` with `∠_c(a, b) > 12·scale` and a geodesic from `a`
/// to `b` avoiding `c`, scanning unordered pairs `a < b`.
pub fn geodesic_forcing_violation(geo: &Geometry, scale: u32) -> Option<[Vertex; 3]> {
    let n = geo.graph.vertex_count();
    for a in 0..n {
        for b in a + 1..n {
            for c in 0..n {
                if c == a || c == b || !geo.angle_vertices_gt(c, a, b, 12 * scale) {
                    continue;
                }
                if !on_every_geodesic_fast(&geo.dist, c, a, b) {
                    return Some([a, b, c]);
                }
            }
        }
    }
    None
}

fn sample_triples(n: usize, cap: usize, seed: u64) -> Vec<[Vertex; 3]> {
    let all = n * (n + 1) * (n + 2) / 6;
    if all <= cap {
        let mut out = Vec::with_capacity(all);
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    out.push([a, b, c]);
                }
            }
        }
        out
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..cap)
            .map(|_| {
                [
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                ]
            })
            .collect()
    }
}

const TRIPLE_CAP: usize = 20_000;

/// Fineness, cone sizes and the angle propositions.
pub fn cmd_audit(cfg: &RunConfig) -> Result<Report> {
    let fx = load_fixture(cfg, source(cfg)?)?;
    let mut report = Report::new("audit");
    report.graph = Some(summary(&fx));
    audit_into(cfg, &fx, &mut report, "")?;
    Ok(report)
}

fn audit_into(cfg: &RunConfig, fx: &Fixture, report: &mut Report, prefix: &str) -> Result<()> {
    let geo = &fx.geo;
    let (_, scale) = delta_and_scale(cfg, fx, report)?;

    let start = Instant::now();
    let fine = fineness_report(&geo.graph, &geo.dist, cfg.loop_len, cfg.budget_loops)?;
    report.constants.phi = Some(fine.phi);
    let mut uniform = Check::new(format!("{prefix}fineness_uniform"), true)
        .measured(fine.phi as f64, None)
        .detail(format!("L = {}", cfg.loop_len));
    if let Some(sp) = &fx.space {
        // Within one edge orbit, certified counts must agree.
        let mut seen: HashMap<(usize, bool), (u64, Edge)> = HashMap::new();
        for ec in &fine.per_edge {
            if !sp.loops_certified(ec.edge, cfg.loop_len) {
                continue;
            }
            let orbit = sp.edge_orbit(ec.edge);
            let (count, rep) = *seen.entry(orbit).or_insert((ec.count, ec.edge));
            if count != ec.count && uniform.passed {
                let (a, b) = rep.endpoints();
                let (c, d) = ec.edge.endpoints();
                uniform.passed = false;
                uniform.witness = Some(vec![a, b, c, d]);
            }
        }
    }
    report.checks.push(uniform);
    report.time(cfg, &format!("{prefix}fineness"), start);

    let start = Instant::now();
    let rb = geo.dist.row(fx.base);
    let near: Vec<Edge> = geo
        .graph
        .edges()
        .into_iter()
        .filter(|e| {
            let (u, v) = e.endpoints();
            rb[u] <= 1 && rb[v] <= 1
        })
        .collect();
    let mut rows = Vec::new();
    let mut monotone = Check::new(format!("{prefix}cone_monotone"), true);
    for &factor in &[12u32, 50] {
        let theta = factor * scale;
        let mut max = 0;
        for &e in &near {
            let small = geo.cone(e, theta);
            let large = geo.cone(e, 2 * theta);
            max = max.max(small.size());
            if monotone.passed && (!small.contains_edge(e) || !small.edges.is_subset(&large.edges))
            {
                let (u, v) = e.endpoints();
                monotone.passed = false;
                monotone.witness = Some(vec![u, v]);
            }
        }
        rows.push(vec![
            theta.to_string(),
            near.len().to_string(),
            max.to_string(),
        ]);
    }
    report.checks.push(monotone);
    report.tables.push(Table {
        name: format!("{prefix}cone_sizes"),
        columns: vec!["theta".into(), "edges_sampled".into(), "max_size".into()],
        rows,
    });
    report.time(cfg, &format!("{prefix}cones"), start);

    let start = Instant::now();
    let tri = angle_triangle_inequality(geo);
    report
        .checks
        .push(Check::new(format!("{prefix}angle_triangle_inequality"), tri.is_none()).witness(tri));
    let forcing = geodesic_forcing_violation(geo, scale);
    report.checks.push(
        Check::new(
            format!("{prefix}geodesic_forcing_12delta"),
            forcing.is_none(),
        )
        .witness(forcing.map(|w| w.to_vec())),
    );
    report.time(cfg, &format!("{prefix}angles"), start);

    let start = Instant::now();
    let mut cones = HashMap::new();
    let mut thin = Check::new(format!("{prefix}conical_thinness"), true);
    let triples = sample_triples(geo.graph.vertex_count(), TRIPLE_CAP / 4, cfg.seed);
    for [a, b, c] in triples {
        let g = &geo.graph;
        let ab = some_geodesic(g, &geo.dist, a, b);
        let ac = some_geodesic(g, &geo.dist, a, c);
        let bc = some_geodesic(g, &geo.dist, b, c);
        if let Some(e) = conical_thinness_violation(geo, scale, &ab, &ac, &bc, &mut cones) {
            let (u, v) = e.endpoints();
            thin.passed = false;
            thin.witness = Some(vec![a, b, c, u, v]);
            break;
        }
    }
    report.checks.push(thin);
    report.time(cfg, &format!("{prefix}thinness"), start);
    Ok(())
}

/// Normal triangles, partitions, decompositions, the matrix `A`, and the
/// representation bounds.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Report> {
    let fx = load_fixture(cfg, source(cfg)?)?;
    let mut report = Report::new("verify");
    report.graph = Some(summary(&fx));
    verify_into(cfg, &fx, &mut report, "")?;
    Ok(report)
}

fn random_function(rng: &mut ChaCha8Rng, support: &[Vertex], size: usize) -> Vec<(Vertex, i64)> {
    (0..size)
        .map(|_| {
            (
                support[rng.gen_range(0..support.len())],
                rng.gen_range(-3..=3),
            )
        })
        .collect()
}

fn verify_into(cfg: &RunConfig, fx: &Fixture, report: &mut Report, prefix: &str) -> Result<()> {
    let geo = &fx.geo;
    let (g, dm) = (&geo.graph, &geo.dist);
    let x = fx.base;
    let (_, scale) = delta_and_scale(cfg, fx, report)?;
    let tcfg = TriangleConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Normal triangles.
    let start = Instant::now();
    let mut tri_check = Check::new(format!("{prefix}normal_triangles"), true);
    let mut qc_check = Check::new(format!("{prefix}quasi_center_4delta"), true);
    let mut worst = 0u32;
    let triples = sample_triples(g.vertex_count(), TRIPLE_CAP, cfg.seed);
    for &[a, b, c] in &triples {
        match normal_triangle(geo, scale, a, b, c, &tcfg) {
            Ok(t) => {
                worst = worst.max(t.center_radius);
                if t.center_radius > 4 * scale && qc_check.passed {
                    qc_check.passed = false;
                    qc_check.witness = Some(vec![a, b, c, t.center]);
                }
                if tri_check.passed && !check_normal_triangle(geo, scale, &t, &tcfg).all_pass() {
                    tri_check.passed = false;
                    tri_check.witness = Some(vec![a, b, c]);
                }
            }
            Err(e) => {
                if tri_check.passed {
                    tri_check.passed = false;
                    tri_check.witness = Some(vec![a, b, c]);
                    tri_check.detail = Some(e.to_string());
                }
            }
        }
    }
    tri_check.measured = Some(triples.len() as f64);
    report.checks.push(tri_check);
    report
        .checks
        .push(qc_check.measured(worst as f64, Some(4.0 * scale as f64)));
    report.time(cfg, &format!("{prefix}triangles"), start);

    let ecc = dm.eccentricity(x);
    let max_n = cfg.max_n.min(ecc);
    let idx = ClassIndex::new(dm, x, max_n);
    let is_tree = g.is_tree();

    if cfg.tree_oracle && is_tree {
        let mut c = Check::new(format!("{prefix}partition_tree_oracle"), true);
        'outer: for n in 0..=max_n {
            for k in 0..=n {
                if let Some(bad) = tree_partition_mismatch(geo, x, n, k) {
                    c.passed = false;
                    c.witness = Some(vec![x, bad]);
                    c.detail = Some(format!("n = {n}, k = {k}"));
                    break 'outer;
                }
            }
        }
        report.checks.push(c);
    }

    // Norms.
    let ball = dm.ball(x, max_n);
    let mut iso = Check::new(format!("{prefix}theta_isometry"), true);
    let mut phib = Check::new(format!("{prefix}phi_bound"), true);
    let (mut worst_iso, mut worst_phi) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let f = FinSuppFunction::<Complex64>::from_pairs(
            random_function(&mut rng, &ball, 4)
                .into_iter()
                .map(|(v, c)| (v, Complex64::new(c as f64, rng.gen_range(-1.0..1.0)))),
        );
        if f.is_zero() {
            continue;
        }
        let h = h_norm_sq(&idx, &f)?;
        let t = theta(&idx, &f)?.norm_sq();
        worst_iso = worst_iso.max((h - t).abs() / h);
        worst_phi = worst_phi.max(phi(&f).norm_sqr() / h);
    }
    iso.passed = worst_iso <= 1e-9;
    phib.passed = worst_phi <= PHI_BOUND;
    report.checks.push(iso.measured(worst_iso, Some(1e-9)));
    report
        .checks
        .push(phib.measured(worst_phi, Some(PHI_BOUND)));

    // Decompositions and the matrix A.
    let start = Instant::now();
    let partners: Vec<Vertex> = g
        .vertices()
        .filter(|&v| {
            let d = dm.d(x, v);
            d >= 1 && d <= cfg.max_displacement && max_n + d <= dm.eccentricity(v)
        })
        .collect();
    let mut indices = vec![idx.clone()];
    let mut decs_all: Vec<(Vertex, u32, Vec<SignedDecomposition>)> = Vec::new();
    let mut identity = Check::new(format!("{prefix}decomposition_identity"), true);
    let mut fallbacks = 0usize;
    let mut clamped = 0u32;
    for &xp in &partners {
        let d = dm.d(x, xp);
        let idx_p = ClassIndex::new(dm, xp, max_n + d);
        let mut decs = Vec::new();
        for key in idx.keys() {
            let dec = if is_tree {
                let t = decompose_class_tree(g, dm, &idx, &idx_p, key)?;
                if cfg.tree_oracle {
                    let gen = decompose_class_general(geo, scale, &idx, &idx_p, key, &tcfg)?;
                    if gen.method == DecompositionMethod::Greedy {
                        fallbacks += 1;
                    }
                }
                t
            } else {
                decompose_class_general(geo, scale, &idx, &idx_p, key, &tcfg)?
            };
            if dec.method == DecompositionMethod::Greedy {
                fallbacks += 1;
            }
            clamped += dec.clamped;
            if let Err(e) = verify_decomposition(&idx, &idx_p, &dec) {
                if identity.passed {
                    identity.passed = false;
                    identity.witness = Some(vec![x, xp]);
                    identity.detail = Some(e.to_string());
                }
            }
            decs.push(dec);
        }
        decs_all.push((xp, d, decs));
        indices.push(idx_p);
    }
    identity.measured = Some(decs_all.iter().map(|(_, _, d)| d.len()).sum::<usize>() as f64);
    identity.detail.get_or_insert_with(|| {
        format!("{fallbacks} constructive/brute-force disagreements, {clamped} clamped k'")
    });
    report.checks.push(identity);

    let km = measure_k(geo, scale, &indices.iter().collect::<Vec<_>>(), x);
    report.constants.l = Some(km.l);
    report.constants.cone_size = Some(km.cone_size);
    report.constants.k = Some(km.k);
    let bound = if is_tree {
        GrowthBound::Tree
    } else {
        GrowthBound::General { k: km.k as f64 }
    };

    let mut counts = Check::new(format!("{prefix}decomposition_counts"), true);
    let mut mat_id = Check::new(format!("{prefix}matrix_identity"), true);
    let mut mat_norm = Check::new(format!("{prefix}matrix_norm"), true);
    let mut worst_ratio = 0.0f64;
    let mut rows = Vec::new();
    for ((xp, d, decs), idx_p) in decs_all.iter().zip(indices.iter().skip(1)) {
        let (xp, d) = (*xp, *d);
        let a = basepoint_matrix(&idx, idx_p, decs, max_n)?;
        let (row_cap, col_cap) = if is_tree {
            (2 * d as usize + 2, 2 * d as usize + 3)
        } else {
            let c = km.k * (d as usize + 1);
            (c, c)
        };
        let max_pos = decs.iter().map(|d| d.positives.len()).max().unwrap_or(0);
        let max_neg = decs.iter().map(|d| d.negatives.len()).max().unwrap_or(0);
        let (rs, cs) = (a.max_row_support(), a.max_col_support());
        let rows_ok = if is_tree {
            rs <= row_cap
        } else {
            max_pos <= row_cap && max_neg <= row_cap
        };
        if counts.passed && !(rows_ok && cs <= col_cap) {
            counts.passed = false;
            counts.witness = Some(vec![x, xp]);
            counts.detail = Some(format!(
                "row support {rs} (cap {row_cap}), column support {cs} (cap {col_cap})"
            ));
        }
        // A∘Θ_{x'} = Θ_x, exactly, on functions inside both truncations.
        let support: Vec<Vertex> = ball.iter().copied().filter(|&v| idx_p.covers(v)).collect();
        for _ in 0..20 {
            let f = FinSuppFunction::<Rational>::from_pairs(
                random_function(&mut rng, &support, 5)
                    .into_iter()
                    .map(|(v, c)| (v, Rational::from_integer(c as i128))),
            );
            if a.apply(&theta(idx_p, &f)?) != theta(&idx, &f)? && mat_id.passed {
                mat_id.passed = false;
                mat_id.witness = Some(vec![x, xp]);
            }
        }
        let norm = operator_norm(&a.to_sparse(), 1e-8)?;
        let b = bound.eval(d);
        worst_ratio = worst_ratio.max(norm / b);
        if norm > b && mat_norm.passed {
            mat_norm.passed = false;
            mat_norm.witness = Some(vec![x, xp]);
        }
        rows.push(vec![
            xp.to_string(),
            d.to_string(),
            format!("{norm:.6}"),
            format!("{b:.6}"),
            format!("{:.6}", norm / b),
            rs.to_string(),
            cs.to_string(),
            max_pos.to_string(),
            max_neg.to_string(),
        ]);
    }
    report.checks.push(counts.measured(km.k as f64, None));
    report.checks.push(mat_id);
    report
        .checks
        .push(mat_norm.measured(worst_ratio, Some(1.0)));
    report.tables.push(Table {
        name: format!("{prefix}basepoint_matrices"),
        columns: [
            "x_prime",
            "d",
            "norm",
            "bound",
            "ratio",
            "row_support",
            "col_support",
            "positives",
            "negatives",
        ]
        .map(String::from)
        .to_vec(),
        rows,
    });
    report.time(cfg, &format!("{prefix}decompositions"), start);

    if let Some(sp) = &fx.space {
        if x == sp.base {
            let start = Instant::now();
            representation_into(cfg, fx, sp, &bound, report, prefix)?;
            report.time(cfg, &format!("{prefix}representation"), start);
        }
    }
    Ok(())
}

/// The first vertex whose class at `(n, k)` disagrees with grouping by the
/// point of `[x, a]` at distance `k`.
pub fn tree_partition_mismatch(geo: &Geometry, x: Vertex, n: u32, k: u32) -> Option<Vertex> {
    let classes = sphere_partition(&geo.dist, x, n, k);
    for c in &classes {
        let z = some_geodesic(&geo.graph, &geo.dist, x, c.members[0]).at(k as usize);
        let expected: Vec<Vertex> = geo
            .dist
            .sphere(x, n)
            .into_iter()
            .filter(|&a| geo.dist.d(z, a) == n - k)
            .collect();
        if expected != c.members {
            return Some(c.members[0]);
        }
    }
    None
}

fn representation_into(
    cfg: &RunConfig,
    fx: &Fixture,
    sp: &TruncatedSpace,
    bound: &GrowthBound,
    report: &mut Report,
    prefix: &str,
) -> Result<()> {
    let dm = &fx.geo.dist;
    let max_n = sp.radius.min(dm.eccentricity(sp.base));
    let idx = ClassIndex::new(dm, sp.base, max_n);
    let words: Vec<Vertex> = match &cfg.word {
        Some(w) => {
            let nf = sp.spec.parse_word(w)?;
            vec![sp
                .group_vertex(&nf)
                .ok_or_else(|| Error::MissingTruncationData(format!("{w} is outside the ball")))?]
        }
        None => sp
            .group_vertices()
            .filter(|&v| {
                let d = dm.d(sp.base, v);
                d >= 1 && d <= cfg.max_displacement
            })
            .collect(),
    };
    let mut pi = Check::new(format!("{prefix}pi_norm_bound"), true);
    let mut coc = Check::new(format!("{prefix}cocycle_growth"), true);
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for v in words {
        let word = sp.word(v).clone();
        let g = left_translation(sp, &word)?;
        let d = g.displacement;
        let r_dom = max_n.saturating_sub(d);
        let norm = pi_operator_norm(&idx, &g, r_dom)?;
        let b = bound.eval(d);
        worst = worst.max(norm / b);
        if norm > b && pi.passed {
            pi.passed = false;
            pi.witness = Some(vec![v]);
        }
        let c = cocycle_norm_sq(&idx, &g)?;
        let floor = ((d + 1) * (d + 1) + 4) as f64;
        if d > 0 && c < floor && coc.passed {
            coc.passed = false;
            coc.witness = Some(vec![v]);
        }
        rows.push(vec![
            sp.spec.format_word(&word),
            d.to_string(),
            format!("{norm:.6}"),
            format!("{b:.6}"),
            format!("{c:.6}"),
            format!("{floor:.0}"),
        ]);
    }
    report.checks.push(pi.measured(worst, Some(1.0)));
    report.checks.push(coc);
    report.tables.push(Table {
        name: format!("{prefix}representation"),
        columns: [
            "word",
            "d",
            "pi_norm",
            "bound",
            "cocycle_norm_sq",
            "cocycle_floor",
        ]
        .map(String::from)
        .to_vec(),
        rows,
    });
    Ok(())
}

/// The fixtures run by `report`.
pub fn default_fixtures() -> Vec<(GraphSource, Option<u32>)> {
    let mut out: Vec<(GraphSource, Option<u32>)> = vec![
        (GraphSource::Gen("tree:24".into()), None),
        (GraphSource::Gen("regular:3".into()), Some(4)),
    ];
    for n in 3..=8 {
        out.push((GraphSource::Gen(format!("cycle:{n}")), None));
    }
    out.push((GraphSource::Gen("Z2*Z3".into()), Some(4)));
    out.push((GraphSource::Gen("Z*Z".into()), Some(3)));
    out
}

/// Audit and verify over [`default_fixtures`], with a per-fixture summary table.
pub fn cmd_report(cfg: &RunConfig) -> Result<Report> {
    let mut report = Report::new("report");
    let mut rows = Vec::new();
    for (src, radius) in default_fixtures() {
        let mut sub = cfg.clone();
        sub.radius = radius;
        sub.base = None;
        sub.word = None;
        sub.tree_oracle = true;
        let fx = load_fixture(&sub, &src)?;
        let prefix = format!("{}/", fx.name);
        let mut part = Report::new("report");
        let start = Instant::now();
        audit_into(&sub, &fx, &mut part, &prefix)?;
        verify_into(&sub, &fx, &mut part, &prefix)?;
        report.time(cfg, &fx.name, start);
        let passed = part.checks.iter().filter(|c| c.passed).count();
        rows.push(vec![
            fx.name.clone(),
            fx.geo.graph.vertex_count().to_string(),
            fx.geo.graph.edge_count().to_string(),
            part.constants
                .delta
                .map_or(String::new(), |d| d.to_string()),
            part.constants.k.map_or(String::new(), |k| k.to_string()),
            passed.to_string(),
            part.checks.len().to_string(),
        ]);
        report.checks.extend(part.checks);
        report.tables.extend(part.tables);
    }
    report.tables.insert(
        0,
        Table {
            name: "summary".into(),
            columns: [
                "fixture", "vertices", "edges", "delta", "K", "passed", "checks",
            ]
            .map(String::from)
            .to_vec(),
            rows,
        },
    );
    Ok(report)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Canonical rendering: pretty JSON, or CSV with the checks first and then
/// each table under a `# name` line.
pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Csv => {
            let mut s = String::from("check,passed,measured,bound,witness\n");
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            for c in &report.checks {
                let w = c.witness.as_ref().map_or(String::new(), |w| {
                    w.iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                });
                writeln!(
                    s,
                    "{},{},{},{},{}",
                    csv_field(&c.name),
                    c.passed,
                    opt(c.measured),
                    opt(c.bound),
                    w
                )
                .expect("writing to a String");
            }
            for t in &report.tables {
                writeln!(s, "\n# {}", t.name).expect("writing to a String");
                writeln!(s, "{}", t.columns.join(",")).expect("writing to a String");
                for r in &t.rows {
                    let cells: Vec<String> = r.iter().map(|c| csv_field(c)).collect();
                    writeln!(s, "{}", cells.join(",")).expect("writing to a String");
                }
            }
            Ok(s)
        }
    }
}

/// Runs the command and writes the rendering to `cfg.out` or returns it.
pub fn execute(cfg: &RunConfig) -> Result<(Report, String)> {
    let report = run(cfg)?;
    let text = render(&report, cfg.format)?;
    if let Some(p) = &cfg.out {
        std::fs::write(p, &text)?;
    }
    Ok((report, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(cmd: Command, spec: &str) -> RunConfig {
        RunConfig::new(cmd, Some(GraphSource::Gen(spec.into())))
    }

    #[test]
    fn delta_on_tree_and_cycle() {
        let r = cmd_delta(&gen(Command::Delta, "tree:20")).unwrap();
        assert_eq!(r.constants.delta, Some(0));
        assert!(r.all_pass());
        let r = cmd_delta(&gen(Command::Delta, "cycle:6")).unwrap();
        assert_eq!(r.constants.delta, Some(1));
    }

    #[test]
    fn planted_forcing_counterexample() {
        // On C_6 a zero scale makes every angle large, yet opposite vertices
        // have two geodesics.
        let mut cfg = gen(Command::Audit, "cycle:6");
        cfg.delta = Some(0);
        let r = cmd_audit(&cfg).unwrap();
        let c = r.check("geodesic_forcing_12delta").unwrap();
        assert!(!c.passed);
        let w = c.witness.clone().unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn tree_audit_and_verify_pass() {
        let mut cfg = gen(Command::Audit, "tree:25");
        cfg.seed = 3;
        assert!(cmd_audit(&cfg).unwrap().all_pass());
        cfg.command = Command::Verify;
        cfg.tree_oracle = true;
        let r = cmd_verify(&cfg).unwrap();
        assert!(r.all_pass(), "{:#?}", r.checks);
    }

    #[test]
    fn bad_generator_is_a_usage_error() {
        let e = cmd_delta(&gen(Command::Delta, "tree:x")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = cmd_delta(&RunConfig::new(Command::Delta, None)).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn csv_rendering() {
        let r = cmd_delta(&gen(Command::Delta, "cycle:5")).unwrap();
        let csv = render(&r, Format::Csv).unwrap();
        assert!(csv.starts_with("check,passed,measured,bound,witness\ndelta,true,1,,"));
    }
}
