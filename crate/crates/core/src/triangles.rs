//! Tilde points and the normal form of geodesic triangles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fine::Geometry;
use crate::graph::{
    bfs_avoiding, quasi_center, some_geodesic, DistanceMatrix, GeodesicPath, Graph, Vertex,
    UNREACHABLE,
};

/// Angle multipliers of δ: tilde points need angles `> tilde_factor·δ`,
/// middle segments keep angles `≤ interior_factor·δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleConfig {
    pub tilde_factor: u32,
    pub interior_factor: u32,
}

impl Default for TriangleConfig {
    fn default() -> Self {
        TriangleConfig {
            tilde_factor: 50,
            interior_factor: 100,
        }
    }
}

/// True iff `v` lies on every geodesic from `x` to `y`, decided by deleting
/// `v` and re-running BFS.
pub fn on_every_geodesic(g: &Graph, dm: &DistanceMatrix, v: Vertex, x: Vertex, y: Vertex) -> bool {
    if dm.d(x, v) + dm.d(v, y) != dm.d(x, y) {
        return false;
    }
    let d = bfs_avoiding(g, x, |w| w == v)[y];
    d == UNREACHABLE || d > dm.d(x, y)
}

/// Same predicate as [`on_every_geodesic`] without a BFS: `v` is on every
/// geodesic iff it is the only vertex of `I(x, y)` at its distance from `x`.
pub fn on_every_geodesic_fast(dm: &DistanceMatrix, v: Vertex, x: Vertex, y: Vertex) -> bool {
    let (rx, ry) = (dm.row(x), dm.row(y));
    let dxy = rx[y];
    if rx[v] + ry[v] != dxy {
        return false;
    }
    (0..dm.vertex_count()).all(|u| u == v || rx[u] != rx[v] || rx[u] + ry[u] != dxy)
}

/// Number of interval vertices at each distance from `x`, for `I(x, y)`.
fn level_counts(rx: &[u16], ry: &[u16], dxy: u16) -> Vec<u32> {
    let mut counts = vec![0u32; dxy as usize + 1];
    for (a, b) in rx.iter().zip(ry) {
        if a + b == dxy {
            counts[*a as usize] += 1;
        }
    }
    counts
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TildePoint {
    pub base: Vertex,
    pub others: (Vertex, Vertex),
    pub point: Vertex,
    pub distance_from_base: u32,
}

/// `ã` for the triple `(a; b, c)`: the farthest vertex from `a` that lies on
/// every geodesic to `b` and to `c` with both angles `> tilde_factor·δ`.
///
/// When the candidate is `b` (or `c`) itself the corresponding angle is not
/// defined and that condition is skipped. With no candidate the result is `a`.
pub fn tilde_point(
    geo: &Geometry,
    delta: u32,
    a: Vertex,
    b: Vertex,
    c: Vertex,
    cfg: &TriangleConfig,
) -> Result<TildePoint> {
    let dm = &geo.dist;
    let theta = cfg.tilde_factor * delta;
    let (ra, rb, rc) = (dm.row(a), dm.row(b), dm.row(c));
    let (dab, dac) = (ra[b], ra[c]);
    let levels_b = level_counts(&ra, &rb, dab);
    let levels_c = level_counts(&ra, &rc, dac);

    let mut best: Option<(u16, Vertex)> = None;
    let mut tied = false;
    for v in 0..dm.vertex_count() {
        let lv = ra[v];
        if v == a || lv + rb[v] != dab || lv + rc[v] != dac {
            continue;
        }
        if levels_b[lv as usize] != 1 || levels_c[lv as usize] != 1 {
            continue;
        }
        if v != b && !geo.angle_vertices_gt(v, a, b, theta) {
            continue;
        }
        if v != c && !geo.angle_vertices_gt(v, a, c, theta) {
            continue;
        }
        match best {
            Some((l, _)) if l > lv => {}
            Some((l, _)) if l == lv => tied = true,
            _ => {
                best = Some((lv, v));
                tied = false;
            }
        }
    }
    if tied {
        return Err(Error::ConstructionFailed {
            a,
            b,
            c,
            reason: "two tilde candidates at the same maximal distance".into(),
        });
    }
    let point = best.map_or(a, |(_, v)| v);
    Ok(TildePoint {
        base: a,
        others: (b, c),
        point,
        distance_from_base: ra[point] as u32,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalTriangle {
    pub a: Vertex,
    pub b: Vertex,
    pub c: Vertex,
    /// `[a,b]`, `[a,c]`, `[b,c]`, each oriented from its first letter.
    pub ab: GeodesicPath,
    pub ac: GeodesicPath,
    pub bc: GeodesicPath,
    /// `ã`, `b̃`, `c̃`.
    pub tildes: [Vertex; 3],
    /// Side points: `u ∈ [a,c]`, `v ∈ [b,c]`, `w ∈ [a,b]`.
    pub u: Vertex,
    pub v: Vertex,
    pub w: Vertex,
    /// A vertex minimising the largest distance to `u`, `v`, `w`, and that distance.
    pub center: Vertex,
    pub center_radius: u32,
}

fn concat(parts: &[&GeodesicPath]) -> GeodesicPath {
    let mut vertices = parts[0].vertices.clone();
    for p in &parts[1..] {
        debug_assert_eq!(vertices.last(), p.vertices.first());
        vertices.extend_from_slice(&p.vertices[1..]);
    }
    GeodesicPath { vertices }
}

/// Builds a triangle in normal form and checks it.
///
/// `[a,b] = [a,ã]·[ã,b̃]·[b̃,b]` and likewise for the other sides, with every
/// piece taken from [`some_geodesic`].
pub fn normal_triangle(
    geo: &Geometry,
    delta: u32,
    a: Vertex,
    b: Vertex,
    c: Vertex,
    cfg: &TriangleConfig,
) -> Result<NormalTriangle> {
    let (g, dm) = (&geo.graph, &geo.dist);
    let ta = tilde_point(geo, delta, a, b, c, cfg)?.point;
    let tb = tilde_point(geo, delta, b, a, c, cfg)?.point;
    let tc = tilde_point(geo, delta, c, a, b, cfg)?.point;
    let fail = |reason: String| Error::ConstructionFailed { a, b, c, reason };

    let a_ta = some_geodesic(g, dm, a, ta);
    let b_tb = some_geodesic(g, dm, b, tb);
    let c_tc = some_geodesic(g, dm, c, tc);
    let ab = concat(&[&a_ta, &some_geodesic(g, dm, ta, tb), &b_tb.reversed()]);
    let ac = concat(&[&a_ta, &some_geodesic(g, dm, ta, tc), &c_tc.reversed()]);
    let bc = concat(&[&b_tb, &some_geodesic(g, dm, tb, tc), &c_tc.reversed()]);
    for (name, side) in [("[a,b]", &ab), ("[a,c]", &ac), ("[b,c]", &bc)] {
        if side.len() as u32 != dm.d(side.start(), side.end()) {
            return Err(fail(format!(
                "side {name} through the tilde points has length {} > {}",
                side.len(),
                dm.d(side.start(), side.end())
            )));
        }
    }
    let qc = quasi_center(dm, &ab, &bc, &ac, delta)?;
    let tri = NormalTriangle {
        a,
        b,
        c,
        ab,
        ac,
        bc,
        tildes: [ta, tb, tc],
        u: qc.u,
        v: qc.v,
        w: qc.w,
        center: qc.t,
        center_radius: qc.radius,
    };
    let check = check_normal_triangle(geo, delta, &tri, cfg);
    if !check.all_pass() {
        return Err(fail(format!("normal form check failed: {check:?}")));
    }
    Ok(tri)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalTriangleCheck {
    /// `[a,b]` and `[a,c]` coincide from `a` to `ã`.
    pub shared_at_a: bool,
    /// `[b,a]` and `[b,c]` coincide from `b` to `b̃`.
    pub shared_at_b: bool,
    /// `[c,a]` and `[c,b]` coincide from `c` to `c̃`.
    pub shared_at_c: bool,
    /// Angles along the three middle segments are at most `interior_factor·δ`.
    pub interior_angles: bool,
    /// The three sides are geodesics.
    pub sides_geodesic: bool,
    /// `d(a,ã) ≤ d(a,c̃)` and its five permutations.
    pub tilde_order: bool,
    /// First vertex found violating the interior-angle bound.
    pub witness: Option<Vertex>,
}

impl NormalTriangleCheck {
    /// The four normal-form properties.
    pub fn bullets(&self) -> [bool; 4] {
        [
            self.shared_at_a,
            self.shared_at_b,
            self.shared_at_c,
            self.interior_angles,
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.bullets().iter().all(|&b| b) && self.sides_geodesic && self.tilde_order
    }
}

fn shares_prefix_to(p: &[Vertex], q: &[Vertex], target: Vertex) -> bool {
    match p.iter().position(|&v| v == target) {
        Some(i) => q.len() > i && p[..=i] == q[..=i],
        None => false,
    }
}

/// Verifies the normal-form properties of `t` independently of how it was built.
pub fn check_normal_triangle(
    geo: &Geometry,
    delta: u32,
    t: &NormalTriangle,
    cfg: &TriangleConfig,
) -> NormalTriangleCheck {
    let dm = &geo.dist;
    let [ta, tb, tc] = t.tildes;
    let ba = t.ab.reversed();
    let ca = t.ac.reversed();
    let cb = t.bc.reversed();

    let well_formed = |p: &GeodesicPath, s: Vertex, e: Vertex| {
        p.start() == s
            && p.end() == e
            && p.vertices
                .windows(2)
                .all(|w| geo.graph.has_edge(w[0], w[1]))
            && p.len() as u32 == dm.d(s, e)
    };
    let sides_geodesic = well_formed(&t.ab, t.a, t.b)
        && well_formed(&t.ac, t.a, t.c)
        && well_formed(&t.bc, t.b, t.c);

    let shared_at_a = shares_prefix_to(&t.ab.vertices, &t.ac.vertices, ta);
    let shared_at_b = shares_prefix_to(&ba.vertices, &t.bc.vertices, tb);
    let shared_at_c = shares_prefix_to(&ca.vertices, &cb.vertices, tc);

    // Middle segments: the stretch of each side strictly between its two tildes.
    let theta = cfg.interior_factor * delta;
    let mut witness = None;
    for (side, from, to) in [(&t.ab, ta, tb), (&t.ac, ta, tc), (&t.bc, tb, tc)] {
        let (Some(i), Some(j)) = (side.position(from), side.position(to)) else {
            continue;
        };
        for k in i.min(j) + 1..i.max(j) {
            let (p, v, q) = (side.at(k - 1), side.at(k), side.at(k + 1));
            if geo.graph.has_edge(p, v)
                && geo.graph.has_edge(v, q)
                && geo.angle(v, p, q).exceeds(theta)
                && witness.is_none()
            {
                witness = Some(v);
            }
        }
    }

    let d = |x: Vertex, y: Vertex| dm.d(x, y);
    let tilde_order = d(t.a, ta) <= d(t.a, tc)
        && d(t.a, ta) <= d(t.a, tb)
        && d(t.b, tb) <= d(t.b, ta)
        && d(t.b, tb) <= d(t.b, tc)
        && d(t.c, tc) <= d(t.c, ta)
        && d(t.c, tc) <= d(t.c, tb);

    NormalTriangleCheck {
        shared_at_a,
        shared_at_b,
        shared_at_c,
        interior_angles: witness.is_none(),
        sides_geodesic,
        tilde_order,
        witness,
    }
}
