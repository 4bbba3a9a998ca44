//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always print; the process
//! exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use finehyp::cli::{cmd_report, render, Command, Format, RunConfig};
use finehyp::fine::Geometry;
use finehyp::generators::{
    coned_off_ball, cycle, left_translation, random_tree, regular_tree_ball, TruncatedSpace,
};
use finehyp::graph::{bfs_avoiding, threshold_delta, Graph, Vertex};
use finehyp::hilbert::{
    basepoint_matrix, cocycle_norm_sq, decompose_class_general, decompose_class_tree, h_norm_sq,
    measure_k, operator_norm, phi, pi_operator_norm, theta, verify_decomposition,
    DecompositionMethod, FinSuppFunction, GrowthBound, Rational,
};
use finehyp::partitions::{sphere_partition, ClassIndex};
use finehyp::triangles::{check_normal_triangle, normal_triangle, TriangleConfig};

/// `|φ(f)|² / ‖f‖²` ceiling (π²/6 rounded up at the 7th decimal).
const PHI_CEILING: f64 = 1.644_934_2;
const ISOMETRY_TOL: f64 = 1e-9;
const POWER_TOL: f64 = 1e-10;

type Criterion<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (
        t < limit,
        format!("{:.2}s of {}s", t.as_secs_f64(), limit.as_secs()),
    )
}

/// `{a ∈ S(x, n) : the vertex of [x, a] at distance k}` classes, from BFS
/// parent pointers.
fn tree_oracle_classes(g: &Graph, x: Vertex, n: u32, k: u32) -> BTreeSet<BTreeSet<Vertex>> {
    let mut parent = vec![usize::MAX; g.vertex_count()];
    let mut depth = vec![u32::MAX; g.vertex_count()];
    depth[x] = 0;
    let mut queue = std::collections::VecDeque::from([x]);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if depth[w] == u32::MAX {
                depth[w] = depth[v] + 1;
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    let mut groups: BTreeMap<Vertex, BTreeSet<Vertex>> = BTreeMap::new();
    for a in g.vertices().filter(|&a| depth[a] == n) {
        let mut z = a;
        while depth[z] > k {
            z = parent[z];
        }
        groups.entry(z).or_default().insert(a);
    }
    groups.into_values().collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut checked = 0usize;
    for seed in 0..50u64 {
        let size = 10 + (seed as usize * 7) % 51;
        let g = random_tree(size, seed).unwrap();
        let geo = Geometry::new(g.clone());
        for x in g.vertices() {
            let idx = ClassIndex::new(&geo.dist, x, 5);
            for n in 0..=5 {
                for k in 0..=n {
                    let oracle = tree_oracle_classes(&g, x, n, k);
                    let direct: BTreeSet<BTreeSet<Vertex>> = sphere_partition(&geo.dist, x, n, k)
                        .into_iter()
                        .map(|c| c.members.into_iter().collect())
                        .collect();
                    let indexed: BTreeSet<BTreeSet<Vertex>> = idx
                        .classes(n, k)
                        .iter()
                        .map(|c| c.members.iter().copied().collect())
                        .collect();
                    if direct != oracle || indexed != oracle {
                        return outcome(
                            false,
                            format!("seed {seed}, x = {x}, n = {n}, k = {k}: partition differs"),
                        );
                    }
                    checked += 1;
                }
            }
        }
    }
    let (fast, time) = within(start, Duration::from_secs(10));
    outcome(
        fast,
        format!("{checked} (tree, x, n, k) cases agree; {time}"),
    )
}

struct Small {
    geo: Geometry,
    idx: ClassIndex,
}

/// Fixtures for the norm criteria: a random tree, a cycle, a coned ball.
fn norm_fixtures() -> Vec<Small> {
    let mut out = Vec::new();
    for g in [
        random_tree(40, 11).unwrap(),
        cycle(8).unwrap(),
        coned_off_ball(&"Z*Z".parse().unwrap(), 3).unwrap().graph,
    ] {
        let geo = Geometry::new(g);
        let ecc = geo.dist.eccentricity(0);
        let idx = ClassIndex::new(&geo.dist, 0, ecc);
        out.push(Small { geo, idx });
    }
    out
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> FinSuppFunction<Complex64> {
    let size = rng.gen_range(1..=6);
    FinSuppFunction::from_pairs((0..size).map(|_| {
        (
            rng.gen_range(0..n),
            Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        )
    }))
}

fn criterion_2() -> Outcome {
    let fixtures = norm_fixtures();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut samples = 0;
    while samples < 1000 {
        let fx = &fixtures[samples % fixtures.len()];
        let f = random_complex(&mut rng, fx.geo.graph.vertex_count());
        if f.is_zero() {
            continue;
        }
        let h = h_norm_sq(&fx.idx, &f).unwrap();
        let t = theta(&fx.idx, &f).unwrap().norm_sq();
        worst = worst.max((h - t).abs() / h);
        samples += 1;
    }
    let mut deltas = 0;
    for fx in &fixtures {
        for a in fx.geo.graph.vertices() {
            let f = FinSuppFunction::<Rational>::delta(a);
            let d = fx.geo.d(0, a) as i128;
            let want = Rational::from_integer((d + 1).pow(3));
            if h_norm_sq(&fx.idx, &f).unwrap() != want
                || theta(&fx.idx, &f).unwrap().norm_sq() != want
            {
                return outcome(false, format!("‖δ_{a}‖² ≠ (d+1)³"));
            }
            deltas += 1;
        }
    }
    outcome(
        worst <= ISOMETRY_TOL,
        format!("max relative gap {worst:.2e} (tol {ISOMETRY_TOL:.0e}) over {samples} f; {deltas} exact ‖δ_a‖²"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_ratio = 0.0f64;
    let mut by_d: BTreeMap<u32, f64> = BTreeMap::new();
    let mut cases = 0;
    while cases < 200 {
        let g = random_tree(rng.gen_range(15..=60), rng.gen()).unwrap();
        let geo = Geometry::new(g.clone());
        let dm = &geo.dist;
        let x = rng.gen_range(0..g.vertex_count());
        let xp = rng.gen_range(0..g.vertex_count());
        let d = dm.d(x, xp);
        if d == 0 || d > 5 {
            continue;
        }
        let max_n = dm.eccentricity(x);
        let idx = ClassIndex::new(dm, x, max_n);
        let idx_p = ClassIndex::new(dm, xp, max_n + d);
        let decs: Vec<_> = idx
            .keys()
            .map(|key| decompose_class_tree(&g, dm, &idx, &idx_p, key).unwrap())
            .collect();
        for dec in &decs {
            if let Err(e) = verify_decomposition(&idx, &idx_p, dec) {
                return outcome(false, format!("x = {x}, x' = {xp}: {e}"));
            }
        }
        let a = basepoint_matrix(&idx, &idx_p, &decs, max_n).unwrap();
        // Every δ_v, so A∘Θ_{x'} = Θ_x holds on the whole space by linearity.
        for v in g.vertices() {
            let f = FinSuppFunction::<Rational>::delta(v);
            if a.apply(&theta(&idx_p, &f).unwrap()) != theta(&idx, &f).unwrap() {
                return outcome(
                    false,
                    format!("x = {x}, x' = {xp}: A∘Θ_x' δ_{v} ≠ Θ_x δ_{v}"),
                );
            }
        }
        let (rs, cs) = (a.max_row_support(), a.max_col_support());
        if rs > 2 * d as usize + 2 || cs > 2 * d as usize + 3 {
            return outcome(
                false,
                format!("x = {x}, x' = {xp}, d = {d}: row support {rs}, column support {cs}"),
            );
        }
        let norm = operator_norm(&a.to_sparse(), POWER_TOL).unwrap();
        let ratio = norm / GrowthBound::Tree.eval(d);
        if ratio > 1.0 {
            return outcome(
                false,
                format!("x = {x}, x' = {xp}: ‖A‖ = {norm} over bound"),
            );
        }
        worst_ratio = worst_ratio.max(ratio);
        let e = by_d.entry(d).or_insert(0.0);
        *e = e.max(ratio);
        cases += 1;
    }
    let (fast, time) = within(start, Duration::from_secs(60));
    let ratios: Vec<String> = by_d.iter().map(|(d, r)| format!("d={d}:{r:.3}")).collect();
    outcome(
        fast,
        format!(
            "{cases} pairs exact; max ‖A‖/bound {worst_ratio:.3} ({}); {time}",
            ratios.join(" ")
        ),
    )
}

fn criterion_4() -> Outcome {
    let fixtures = norm_fixtures();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut samples = 0;
    while samples < 10_000 {
        let fx = &fixtures[samples % fixtures.len()];
        let f = random_complex(&mut rng, fx.geo.graph.vertex_count());
        if f.is_zero() {
            continue;
        }
        worst = worst.max(phi(&f).norm_sqr() / h_norm_sq(&fx.idx, &f).unwrap());
        samples += 1;
    }
    outcome(
        worst <= PHI_CEILING,
        format!("max |φ|²/‖f‖² = {worst:.6} over {samples} f (ceiling {PHI_CEILING})"),
    )
}

/// Trees, `C_3 … C_8` and coned balls up to radius 4.
fn fixture_matrix() -> Vec<(String, Geometry)> {
    let mut out: Vec<(String, Geometry)> = Vec::new();
    for seed in 0..3u64 {
        out.push((
            format!("tree:30#{seed}"),
            Geometry::new(random_tree(30, seed).unwrap()),
        ));
    }
    out.push((
        "regular:3 R=4".into(),
        Geometry::new(regular_tree_ball(3, 4).unwrap().graph),
    ));
    for n in 3..=8 {
        out.push((format!("C{n}"), Geometry::new(cycle(n).unwrap())));
    }
    for (spec, r) in [("Z2*Z3", 4), ("Z*Z", 4)] {
        let sp = coned_off_ball(&spec.parse().unwrap(), r).unwrap();
        out.push((format!("{spec} R={r}"), Geometry::new(sp.graph)));
    }
    out
}

fn scale_of(geo: &Geometry) -> u32 {
    use finehyp::graph::hyperbolicity_delta;
    let est = hyperbolicity_delta(&geo.graph, &geo.dist, usize::MAX).unwrap();
    threshold_delta(&geo.graph, est.delta)
}

fn criterion_5(fixtures: &[(String, Geometry, u32)]) -> Outcome {
    let mut large = 0u64;
    for (name, geo, scale) in fixtures {
        let n = geo.graph.vertex_count();
        for c in 0..n {
            for a in 0..n {
                if a == c {
                    continue;
                }
                let mut avoiding: Option<Vec<u32>> = None;
                for b in 0..n {
                    if b == a || b == c || !geo.angle_vertices_gt(c, a, b, 12 * scale) {
                        continue;
                    }
                    large += 1;
                    let row =
                        avoiding.get_or_insert_with(|| bfs_avoiding(&geo.graph, a, |v| v == c));
                    if row[b] <= geo.d(a, b) {
                        return outcome(
                            false,
                            format!("{name}: ∠_{c}({a}, {b}) > 12δ but a geodesic avoids {c}"),
                        );
                    }
                }
            }
        }
    }
    outcome(
        true,
        format!(
            "{} graphs, {large} large-angle triples, 0 counterexamples",
            fixtures.len()
        ),
    )
}

fn criterion_6(fixtures: &[(String, Geometry, u32)]) -> Outcome {
    let cfg = TriangleConfig::default();
    let mut triples = 0u64;
    let mut worst = (0u32, 0u32);
    for (name, geo, scale) in fixtures {
        let n = geo.graph.vertex_count();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let t = match normal_triangle(geo, *scale, a, b, c, &cfg) {
                        Ok(t) => t,
                        Err(e) => return outcome(false, format!("{name}: {e}")),
                    };
                    if !check_normal_triangle(geo, *scale, &t, &cfg).all_pass() {
                        return outcome(false, format!("{name}: ({a}, {b}, {c}) fails the check"));
                    }
                    if t.center_radius > 4 * scale {
                        return outcome(
                            false,
                            format!(
                                "{name}: ({a}, {b}, {c}) quasi-center at {} > 4δ",
                                t.center_radius
                            ),
                        );
                    }
                    if t.center_radius > worst.0 {
                        worst = (t.center_radius, *scale);
                    }
                    triples += 1;
                }
            }
        }
    }
    outcome(
        true,
        format!(
            "{triples} ordered triples certified; largest quasi-center distance {} (δ = {})",
            worst.0, worst.1
        ),
    )
}

struct Coned {
    name: &'static str,
    sp: TruncatedSpace,
    geo: Geometry,
    scale: u32,
    k: usize,
}

fn coned_fixtures() -> Vec<Coned> {
    ["Z*Z", "Z2*Z3"]
        .into_iter()
        .map(|name| {
            let sp = coned_off_ball(&name.parse().unwrap(), 5).unwrap();
            let geo = Geometry::new(sp.graph.clone());
            let scale = scale_of(&geo);
            Coned {
                name,
                sp,
                geo,
                scale,
                k: 0,
            }
        })
        .collect()
}

fn criterion_7(fixtures: &mut [Coned]) -> Outcome {
    let start = Instant::now();
    let cfg = TriangleConfig::default();
    let mut details = Vec::new();
    let mut ok = true;
    for fx in fixtures.iter_mut() {
        let dm = &fx.geo.dist;
        let x = fx.sp.base;
        let idx = ClassIndex::new(dm, x, 4);
        let partners: Vec<Vertex> = fx
            .geo
            .graph
            .vertices()
            .filter(|&v| (1..=2).contains(&dm.d(x, v)))
            .collect();
        let mut indices = vec![idx.clone()];
        let mut decs = Vec::new();
        for &xp in &partners {
            let d = dm.d(x, xp);
            let idx_p = ClassIndex::new(dm, xp, 4 + d);
            for key in idx.keys() {
                decs.push((
                    xp,
                    d,
                    decompose_class_general(&fx.geo, fx.scale, &idx, &idx_p, key, &cfg),
                    indices.len(),
                ));
            }
            indices.push(idx_p);
        }
        let km = measure_k(&fx.geo, fx.scale, &indices.iter().collect::<Vec<_>>(), x);
        fx.k = km.k;
        let (mut fallbacks, mut max_pos, mut max_neg) = (0, 0, 0);
        for (xp, d, dec, i) in &decs {
            let dec = match dec {
                Ok(dec) => dec,
                Err(e) => {
                    ok = false;
                    details.push(format!("{}: x' = {xp}: {e}", fx.name));
                    continue;
                }
            };
            if dec.method == DecompositionMethod::Greedy {
                fallbacks += 1;
            }
            if let Err(e) = verify_decomposition(&idx, &indices[*i], dec) {
                ok = false;
                details.push(format!("{}: x' = {xp}: {e}", fx.name));
            }
            let cap = km.k * (*d as usize + 1);
            if dec.positives.len() > cap || dec.negatives.len() > cap {
                ok = false;
                details.push(format!(
                    "{}: x' = {xp}: counts over K(d+1) = {cap}",
                    fx.name
                ));
            }
            max_pos = max_pos.max(dec.positives.len());
            max_neg = max_neg.max(dec.negatives.len());
        }
        details.push(format!(
            "{}: {} decompositions, {fallbacks} disagreements, max ± {max_pos}/{max_neg}, K = {}·{} = {}",
            fx.name,
            decs.len(),
            km.l,
            km.cone_size,
            km.k
        ));
    }
    let (fast, time) = within(start, Duration::from_secs(300));
    details.push(time);
    outcome(ok && fast, details.join("; "))
}

fn criterion_8(fixtures: &[Coned]) -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for fx in fixtures {
        let dm = &fx.geo.dist;
        let idx = ClassIndex::new(dm, fx.sp.base, 5);
        let bound = GrowthBound::General { k: fx.k as f64 };
        let (mut words, mut worst, mut min_gap) = (0, 0.0f64, f64::INFINITY);
        for v in fx.sp.group_vertices() {
            let d = dm.d(fx.sp.base, v);
            if d == 0 || d > 2 {
                continue;
            }
            let g = left_translation(&fx.sp, fx.sp.word(v)).unwrap();
            let word = fx.sp.spec.format_word(fx.sp.word(v));
            let norm = pi_operator_norm(&idx, &g, 5 - d).unwrap();
            if norm > bound.eval(d) {
                ok = false;
                details.push(format!(
                    "{}: ‖π({word})‖ = {norm:.3} > {}",
                    fx.name,
                    bound.eval(d)
                ));
            }
            worst = worst.max(norm / bound.eval(d));
            let c = cocycle_norm_sq(&idx, &g).unwrap();
            let floor = ((d + 1) * (d + 1) + 4) as f64;
            if c < floor {
                ok = false;
                details.push(format!("{}: ‖b({word})‖² = {c} < {floor}", fx.name));
            }
            min_gap = min_gap.min(c - floor);
            words += 1;
        }
        details.push(format!(
            "{}: {words} words, max ‖π‖/bound {worst:.4}, min cocycle margin {min_gap}",
            fx.name
        ));
    }
    outcome(ok, details.join("; "))
}

fn criterion_9() -> Outcome {
    let mut cfg = RunConfig::new(Command::Report, None);
    cfg.seed = 9;
    let mut same = true;
    for format in [Format::Json, Format::Csv] {
        let a = render(&cmd_report(&cfg).unwrap(), format).unwrap();
        let b = render(&cmd_report(&cfg).unwrap(), format).unwrap();
        same &= a == b;
    }
    outcome(same, "two report runs, JSON and CSV, byte-identical".into())
}

fn main() -> ExitCode {
    let matrix: Vec<(String, Geometry, u32)> = fixture_matrix()
        .into_iter()
        .map(|(n, g)| {
            let s = scale_of(&g);
            (n, g, s)
        })
        .collect();
    let mut coned = coned_fixtures();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("tree partition oracle", Box::new(criterion_1)),
        ("isometry and delta norms", Box::new(criterion_2)),
        ("tree decomposition exactness", Box::new(criterion_3)),
        ("functional bound", Box::new(criterion_4)),
        ("angle forcing", Box::new(|| criterion_5(&matrix))),
        ("normal triangles", Box::new(|| criterion_6(&matrix))),
        (
            "general decomposition",
            Box::new(|| criterion_7(&mut coned)),
        ),
    ];
    let mut all = true;
    let mut report = |i: usize, name: &str, o: Outcome| {
        all &= o.passed;
        println!(
            "criterion {i} [{name}]: {} — {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        report(i + 1, name, f());
    }
    report(8, "polynomial growth and cocycle", criterion_8(&coned));
    report(9, "determinism", criterion_9());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
