use std::borrow::Cow;
use std::collections::VecDeque;
use std::fmt;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Graph, Vertex};
use crate::error::{Error, Result};

/// Distance reported by BFS helpers for vertices that cannot be reached.
pub const UNREACHABLE: u32 = u32::MAX;

pub const DEFAULT_DENSE_VERTEX_CAP: usize = 20_000;

const ROW_CACHE: usize = 256;

/// All-pairs graph distances.
///
/// Up to the dense cap this is a flat `n × n` table of `u16`; past it rows are
/// recomputed by BFS and a small LRU of recent rows is kept.
pub struct DistanceMatrix {
    n: usize,
    storage: Storage,
}

enum Storage {
    Dense(Vec<u16>),
    OnDemand {
        graph: Graph,
        cache: Mutex<VecDeque<(Vertex, Vec<u16>)>>,
    },
}

impl fmt::Debug for DistanceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistanceMatrix")
            .field("n", &self.n)
            .field("dense", &self.is_dense())
            .finish()
    }
}

impl DistanceMatrix {
    pub fn new(g: &Graph) -> Self {
        Self::with_cap(g, DEFAULT_DENSE_VERTEX_CAP)
    }

    pub fn with_cap(g: &Graph, cap: usize) -> Self {
        let n = g.vertex_count();
        // u16 entries need every distance below u16::MAX, which n < u16::MAX guarantees.
        if n <= cap.min(u16::MAX as usize - 1) {
            let mut data = vec![0u16; n * n];
            data.par_chunks_mut(n.max(1))
                .enumerate()
                .for_each(|(s, row)| bfs_into(g, s, row));
            DistanceMatrix {
                n,
                storage: Storage::Dense(data),
            }
        } else {
            DistanceMatrix {
                n,
                storage: Storage::OnDemand {
                    graph: g.clone(),
                    cache: Mutex::new(VecDeque::new()),
                },
            }
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    #[inline]
    pub fn d(&self, u: Vertex, v: Vertex) -> u32 {
        match &self.storage {
            Storage::Dense(data) => data[u * self.n + v] as u32,
            Storage::OnDemand { .. } => self.row(u)[v] as u32,
        }
    }

    /// Distances from `u` to every vertex.
    pub fn row(&self, u: Vertex) -> Cow<'_, [u16]> {
        match &self.storage {
            Storage::Dense(data) => Cow::Borrowed(&data[u * self.n..(u + 1) * self.n]),
            Storage::OnDemand { graph, cache } => {
                let mut cache = cache.lock().expect("row cache poisoned");
                if let Some(pos) = cache.iter().position(|(s, _)| *s == u) {
                    let entry = cache.remove(pos).expect("position is in range");
                    let row = entry.1.clone();
                    cache.push_front(entry);
                    return Cow::Owned(row);
                }
                let mut row = vec![0u16; self.n];
                bfs_into(graph, u, &mut row);
                cache.push_front((u, row.clone()));
                cache.truncate(ROW_CACHE);
                Cow::Owned(row)
            }
        }
    }

    pub fn eccentricity(&self, u: Vertex) -> u32 {
        self.row(u).iter().copied().max().unwrap_or(0) as u32
    }

    pub fn diameter(&self) -> u32 {
        (0..self.n).map(|u| self.eccentricity(u)).max().unwrap_or(0)
    }

    /// Vertices at distance exactly `r` from `x`, in increasing order.
    pub fn sphere(&self, x: Vertex, r: u32) -> Vec<Vertex> {
        let row = self.row(x);
        (0..self.n).filter(|&v| row[v] as u32 == r).collect()
    }

    /// Vertices at distance at most `r` from `x`, in increasing order.
    pub fn ball(&self, x: Vertex, r: u32) -> Vec<Vertex> {
        let row = self.row(x);
        (0..self.n).filter(|&v| row[v] as u32 <= r).collect()
    }
}

pub fn all_pairs_distances(g: &Graph) -> DistanceMatrix {
    DistanceMatrix::new(g)
}

fn bfs_into(g: &Graph, s: Vertex, row: &mut [u16]) {
    row.fill(u16::MAX);
    row[s] = 0;
    let mut queue = VecDeque::with_capacity(row.len());
    queue.push_back(s);
    while let Some(u) = queue.pop_front() {
        let du = row[u] + 1;
        for &w in g.neighbors(u) {
            if row[w] == u16::MAX {
                row[w] = du;
                queue.push_back(w);
            }
        }
    }
}

/// BFS from `source` in the subgraph with the vertices selected by `avoid`
/// deleted. Unreached (and deleted) vertices get [`UNREACHABLE`].
pub fn bfs_avoiding(g: &Graph, source: Vertex, avoid: impl Fn(Vertex) -> bool) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; g.vertex_count()];
    if avoid(source) {
        return dist;
    }
    dist[source] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w] == UNREACHABLE && !avoid(w) {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// `I(x, y)`: vertices lying on some geodesic from `x` to `y`, sorted.
pub fn interval(dm: &DistanceMatrix, x: Vertex, y: Vertex) -> Vec<Vertex> {
    let dxy = dm.d(x, y);
    let rx = dm.row(x);
    let ry = dm.row(y);
    (0..dm.vertex_count())
        .filter(|&a| rx[a] as u32 + ry[a] as u32 == dxy)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub vertices: Vec<Vertex>,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn end(&self) -> Vertex {
        *self.vertices.last().expect("geodesics are non-empty")
    }

    /// The vertex at distance `i` from the start.
    pub fn at(&self, i: usize) -> Vertex {
        self.vertices[i]
    }

    pub fn reversed(&self) -> GeodesicPath {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        GeodesicPath { vertices }
    }

    pub fn position(&self, v: Vertex) -> Option<usize> {
        self.vertices.iter().position(|&w| w == v)
    }
}

/// The geodesic that always steps to the smallest-id neighbour closer to `y`.
pub fn some_geodesic(g: &Graph, dm: &DistanceMatrix, x: Vertex, y: Vertex) -> GeodesicPath {
    let ry = dm.row(y);
    let mut vertices = Vec::with_capacity(ry[x] as usize + 1);
    let mut cur = x;
    vertices.push(cur);
    while cur != y {
        let target = ry[cur] - 1;
        cur = *g
            .neighbors(cur)
            .iter()
            .find(|&&w| ry[w] == target)
            .expect("connected graph: some neighbour is closer");
        vertices.push(cur);
    }
    GeodesicPath { vertices }
}

/// Every geodesic from `x` to `y`, in lexicographic order of vertex ids.
///
/// Fails before enumerating anything when the number of geodesics exceeds
/// `cap`.
pub fn all_geodesics(
    g: &Graph,
    dm: &DistanceMatrix,
    x: Vertex,
    y: Vertex,
    cap: usize,
) -> Result<Vec<GeodesicPath>> {
    let ry = dm.row(y);
    let members = interval(dm, x, y);
    // count[v] = number of geodesics from v to y, filled nearest-to-y first.
    let mut order = members.clone();
    order.sort_by_key(|&v| ry[v]);
    let mut count = vec![0u128; dm.vertex_count()];
    for &v in &order {
        count[v] = if v == y {
            1
        } else {
            g.neighbors(v)
                .iter()
                .filter(|&&w| ry[w] + 1 == ry[v])
                .fold(0u128, |acc, &w| acc.saturating_add(count[w]))
        };
    }
    if count[x] > cap as u128 {
        return Err(Error::EnumerationCapExceeded {
            cap,
            count: count[x],
        });
    }

    let mut out = Vec::with_capacity(count[x] as usize);
    let mut stack = vec![x];
    fn walk(
        g: &Graph,
        ry: &[u16],
        y: Vertex,
        stack: &mut Vec<Vertex>,
        out: &mut Vec<GeodesicPath>,
    ) {
        let cur = *stack.last().expect("stack starts non-empty");
        if cur == y {
            out.push(GeodesicPath {
                vertices: stack.clone(),
            });
            return;
        }
        for &w in g.neighbors(cur) {
            if ry[w] + 1 == ry[cur] {
                stack.push(w);
                walk(g, ry, y, stack, out);
                stack.pop();
            }
        }
    }
    walk(g, &ry, y, &mut stack, &mut out);
    Ok(out)
}

/// A half-integer kept as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt(pub i64);

impl HalfInt {
    pub fn from_int(v: i64) -> Self {
        HalfInt(2 * v)
    }

    pub fn doubled(self) -> i64 {
        self.0
    }

    pub fn floor(self) -> i64 {
        self.0.div_euclid(2)
    }

    pub fn ceil(self) -> i64 {
        -(-self.0).div_euclid(2)
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

/// `(x, y)_z`.
pub fn gromov_product(dm: &DistanceMatrix, x: Vertex, y: Vertex, z: Vertex) -> HalfInt {
    HalfInt(dm.d(x, z) as i64 + dm.d(y, z) as i64 - dm.d(x, y) as i64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: u32,
    /// `(x, y, z, m)` with `m ∈ I(x, y)` at distance exactly `delta` from
    /// `I(x, z) ∪ I(y, z)`; absent when `delta` is zero.
    pub witness: Option<[Vertex; 4]>,
}

/// The interval-thinness constant of `g`.
///
/// Cubic in `|V|` (times the average interval size), so graphs with more than
/// `budget_vertices` vertices are refused.
pub fn hyperbolicity_delta(
    g: &Graph,
    dm: &DistanceMatrix,
    budget_vertices: usize,
) -> Result<DeltaEstimate> {
    let n = g.vertex_count();
    if n > budget_vertices {
        return Err(Error::BudgetExceeded(format!(
            "hyperbolicity over {n} vertices (budget {budget_vertices})"
        )));
    }
    if !dm.is_dense() {
        return Err(Error::BudgetExceeded(format!(
            "hyperbolicity needs a dense distance matrix ({n} vertices)"
        )));
    }
    let intervals = IntervalTable::new(dm);

    let mut best = 0u32;
    let mut witness = None;
    // near[w * n + m] = d(m, I(w, z)) for the current z.
    let mut near = vec![0u16; n * n];
    for z in 0..n {
        near.par_chunks_mut(n).enumerate().for_each(|(w, slot)| {
            slot.fill(u16::MAX);
            for &q in intervals.get(w, z) {
                for (s, &d) in slot.iter_mut().zip(dm.row(q as usize).iter()) {
                    *s = (*s).min(d);
                }
            }
        });
        for x in 0..n {
            let rx = dm.row(x);
            for y in x + 1..n {
                // Every m in I(x, y) is within d(x, y) / 2 of x or y.
                if (rx[y] as u32) <= 2 * best + 1 {
                    continue;
                }
                let ry = dm.row(y);
                for &m in intervals.get(x, y) {
                    let m = m as usize;
                    if rx[m] as u32 <= best || ry[m] as u32 <= best {
                        continue;
                    }
                    let v = near[x * n + m].min(near[y * n + m]) as u32;
                    if v > best {
                        best = v;
                        witness = Some([x, y, z, m]);
                    }
                }
            }
        }
    }
    Ok(DeltaEstimate {
        delta: best,
        witness,
    })
}

/// Flat storage of `I(x, y)` for all pairs `x <= y`.
struct IntervalTable {
    n: usize,
    offsets: Vec<usize>,
    members: Vec<u32>,
}

impl IntervalTable {
    fn new(dm: &DistanceMatrix) -> Self {
        let n = dm.vertex_count();
        let per_x: Vec<(Vec<usize>, Vec<u32>)> = (0..n)
            .into_par_iter()
            .map(|x| {
                let rx = dm.row(x);
                let mut lens = Vec::with_capacity(n - x);
                let mut members = Vec::new();
                for y in x..n {
                    let ry = dm.row(y);
                    let dxy = rx[y];
                    let before = members.len();
                    members
                        .extend((0..n as u32).filter(|&a| rx[a as usize] + ry[a as usize] == dxy));
                    lens.push(members.len() - before);
                }
                (lens, members)
            })
            .collect();
        let mut offsets = Vec::with_capacity(n * (n + 1) / 2 + 1);
        let mut members = Vec::new();
        offsets.push(0);
        for (lens, m) in per_x {
            for len in lens {
                offsets.push(offsets.last().unwrap() + len);
            }
            members.extend(m);
        }
        IntervalTable {
            n,
            offsets,
            members,
        }
    }

    fn get(&self, a: Vertex, b: Vertex) -> &[u32] {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        // Row x starts after rows 0..x, which hold n + (n-1) + ... + (n-x+1) pairs.
        let idx = x * self.n - x * x.saturating_sub(1) / 2 + (y - x);
        &self.members[self.offsets[idx]..self.offsets[idx + 1]]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiCenter {
    pub t: Vertex,
    pub u: Vertex,
    pub v: Vertex,
    pub w: Vertex,
    /// `max(d(u,t), d(v,t), d(w,t))`.
    pub radius: u32,
    /// Whether `radius <= 4 * delta` for the delta supplied by the caller.
    pub within_bound: bool,
}

/// Quasi-center of the geodesic triangle with sides `xy`, `yz`, `xz`.
///
/// `u ∈ [x,z]` and `w ∈ [x,y]` sit at distance `⌊(y,z)_x⌋` from `x`, and
/// `v ∈ [y,z]` at `⌊(x,z)_y⌋` from `y`. The returned `t` minimises the largest
/// distance to `u, v, w`; ties go to the smallest id.
pub fn quasi_center(
    dm: &DistanceMatrix,
    xy: &GeodesicPath,
    yz: &GeodesicPath,
    xz: &GeodesicPath,
    delta: u32,
) -> Result<QuasiCenter> {
    let (x, y, z) = (xy.start(), xy.end(), xz.end());
    if yz.start() != y || yz.end() != z || xz.start() != x {
        return Err(Error::Usage(
            "triangle sides must run x→y, y→z and x→z".into(),
        ));
    }
    for side in [xy, yz, xz] {
        if side.len() as u32 != dm.d(side.start(), side.end()) {
            return Err(Error::Usage("triangle side is not a geodesic".into()));
        }
    }
    let px = gromov_product(dm, y, z, x).floor() as usize;
    let py = gromov_product(dm, x, z, y).floor() as usize;
    let (u, v, w) = (xz.at(px), yz.at(py), xy.at(px));
    let (ru, rv, rw) = (dm.row(u), dm.row(v), dm.row(w));
    let (t, radius) = (0..dm.vertex_count())
        .map(|t| (t, ru[t].max(rv[t]).max(rw[t]) as u32))
        .min_by_key(|&(t, r)| (r, t))
        .expect("graphs are non-empty");
    Ok(QuasiCenter {
        t,
        u,
        v,
        w,
        radius,
        within_bound: radius <= 4 * delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn cycle(n: u64) -> Graph {
        build_graph(&(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn small_distances() {
        let p3 = build_graph(&[(0, 1), (1, 2)]).unwrap();
        let dm = all_pairs_distances(&p3);
        assert_eq!(dm.d(0, 2), 2);
        assert_eq!(dm.d(1, 1), 0);
        // C_5, BFS by hand: 0-1-2-3-4-0, so 0→3 goes 0-4-3.
        let c5 = cycle(5);
        assert_eq!(all_pairs_distances(&c5).d(0, 3), 2);
    }

    #[test]
    fn on_demand_matches_dense() {
        let g = cycle(9);
        let dense = DistanceMatrix::new(&g);
        let lazy = DistanceMatrix::with_cap(&g, 3);
        assert!(!lazy.is_dense());
        for u in g.vertices() {
            for v in g.vertices() {
                assert_eq!(dense.d(u, v), lazy.d(u, v));
            }
        }
    }

    #[test]
    fn intervals_and_geodesics_on_c4() {
        let c4 = cycle(4);
        let dm = all_pairs_distances(&c4);
        assert_eq!(interval(&dm, 0, 2), vec![0, 1, 2, 3]);
        let geos = all_geodesics(&c4, &dm, 0, 2, 100).unwrap();
        assert_eq!(geos.len(), 2);
        assert_eq!(geos[0].vertices, vec![0, 1, 2]);
        assert_eq!(some_geodesic(&c4, &dm, 0, 2).vertices, vec![0, 1, 2]);
        assert_eq!(some_geodesic(&c4, &dm, 2, 0).vertices, vec![2, 1, 0]);
        assert!(matches!(
            all_geodesics(&c4, &dm, 0, 2, 1),
            Err(Error::EnumerationCapExceeded { cap: 1, count: 2 })
        ));
        let trivial = all_geodesics(&c4, &dm, 3, 3, 1).unwrap();
        assert_eq!(trivial, vec![GeodesicPath { vertices: vec![3] }]);
    }

    #[test]
    fn gromov_products() {
        let p3 = build_graph(&[(0, 1), (1, 2)]).unwrap();
        let dm = all_pairs_distances(&p3);
        assert_eq!(gromov_product(&dm, 0, 2, 1), HalfInt(0));
        assert_eq!(gromov_product(&dm, 0, 0, 2), HalfInt::from_int(2));
        let c3 = cycle(3);
        let dm = all_pairs_distances(&c3);
        assert_eq!(gromov_product(&dm, 0, 1, 2).to_string(), "0.5");
        assert_eq!(gromov_product(&dm, 0, 1, 2).floor(), 0);
        assert_eq!(gromov_product(&dm, 0, 1, 2).ceil(), 1);
    }

    #[test]
    fn interval_table_indexing() {
        let g = cycle(7);
        let dm = all_pairs_distances(&g);
        let table = IntervalTable::new(&dm);
        for x in g.vertices() {
            for y in g.vertices() {
                let expect: Vec<u32> = interval(&dm, x, y).iter().map(|&v| v as u32).collect();
                assert_eq!(table.get(x, y), expect.as_slice(), "({x},{y})");
            }
        }
    }

    #[test]
    fn delta_budget() {
        let g = cycle(6);
        let dm = all_pairs_distances(&g);
        assert!(matches!(
            hyperbolicity_delta(&g, &dm, 5),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn degenerate_quasi_center() {
        let g = cycle(5);
        let dm = all_pairs_distances(&g);
        let p = GeodesicPath { vertices: vec![2] };
        let qc = quasi_center(&dm, &p, &p, &p, 0).unwrap();
        assert_eq!((qc.t, qc.radius), (2, 0));
    }
}
