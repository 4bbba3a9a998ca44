//! Angles at vertices, cones around edges, and loop counts for fineness.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::ops::Add;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{bfs_avoiding, DistanceMatrix, Edge, GeodesicPath, Graph, Vertex, UNREACHABLE};

/// A non-negative integer or +∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AngleValue {
    Finite(u32),
    Infinite,
}

impl AngleValue {
    fn from_distance(d: u32) -> Self {
        if d == UNREACHABLE {
            AngleValue::Infinite
        } else {
            AngleValue::Finite(d)
        }
    }

    /// `self > theta` for a finite threshold.
    pub fn exceeds(self, theta: u32) -> bool {
        self > AngleValue::Finite(theta)
    }
}

impl Add for AngleValue {
    type Output = AngleValue;

    fn add(self, rhs: AngleValue) -> AngleValue {
        match (self, rhs) {
            (AngleValue::Finite(a), AngleValue::Finite(b)) => a
                .checked_add(b)
                .map_or(AngleValue::Infinite, AngleValue::Finite),
            _ => AngleValue::Infinite,
        }
    }
}

impl fmt::Display for AngleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleValue::Finite(v) => write!(f, "{v}"),
            AngleValue::Infinite => f.write_str("inf"),
        }
    }
}

/// `∠_v(e1, e2)`: distance between the far endpoints in `X ∖ {v}`.
pub fn angle_edges(g: &Graph, v: Vertex, e1: Edge, e2: Edge) -> Result<AngleValue> {
    let (w1, w2) = match (e1.other(v), e2.other(v)) {
        (Some(w1), Some(w2)) => (w1, w2),
        _ => return Err(Error::VertexNotOnEdges { vertex: v }),
    };
    if !g.has_edge(v, w1) || !g.has_edge(v, w2) {
        return Err(Error::VertexNotOnEdges { vertex: v });
    }
    Ok(AngleValue::from_distance(
        bfs_avoiding(g, w1, |x| x == v)[w2],
    ))
}

/// Every angle of the graph, one `deg × deg` block per vertex.
///
/// Rows and columns follow the sorted neighbour list of the vertex.
#[derive(Clone, Debug)]
pub struct AngleTable {
    offsets: Vec<usize>,
    values: Vec<AngleValue>,
}

impl AngleTable {
    pub fn new(g: &Graph) -> Self {
        let blocks: Vec<Vec<AngleValue>> = g
            .vertices()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&v| {
                let nbrs = g.neighbors(v);
                let mut block = Vec::with_capacity(nbrs.len() * nbrs.len());
                for &w1 in nbrs {
                    let dist = bfs_avoiding(g, w1, |x| x == v);
                    block.extend(nbrs.iter().map(|&w2| AngleValue::from_distance(dist[w2])));
                }
                block
            })
            .collect();
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.len());
        }
        AngleTable {
            offsets,
            values: blocks.concat(),
        }
    }

    /// Angle at `v` between the edges to its `i`-th and `j`-th neighbours.
    #[inline]
    pub fn by_index(&self, v: Vertex, i: usize, j: usize) -> AngleValue {
        let deg = ((self.offsets[v + 1] - self.offsets[v]) as f64).sqrt() as usize;
        self.values[self.offsets[v] + i * deg + j]
    }
}

/// A graph with its distances and angles, shared by the geometric routines.
#[derive(Debug)]
pub struct Geometry {
    pub graph: Graph,
    pub dist: DistanceMatrix,
    pub angles: AngleTable,
}

impl Geometry {
    pub fn new(graph: Graph) -> Self {
        let dist = DistanceMatrix::new(&graph);
        let angles = AngleTable::new(&graph);
        Geometry {
            graph,
            dist,
            angles,
        }
    }

    pub fn d(&self, u: Vertex, v: Vertex) -> u32 {
        self.dist.d(u, v)
    }

    /// `∠_v(w1, w2)` for neighbours `w1`, `w2` of `v`.
    pub fn angle(&self, v: Vertex, w1: Vertex, w2: Vertex) -> AngleValue {
        let nbrs = self.graph.neighbors(v);
        let i = nbrs.binary_search(&w1).expect("w1 is a neighbour of v");
        let j = nbrs.binary_search(&w2).expect("w2 is a neighbour of v");
        self.angles.by_index(v, i, j)
    }

    pub fn angle_between(&self, v: Vertex, e1: Edge, e2: Edge) -> Result<AngleValue> {
        match (e1.other(v), e2.other(v)) {
            (Some(w1), Some(w2)) if self.graph.has_edge(v, w1) && self.graph.has_edge(v, w2) => {
                Ok(self.angle(v, w1, w2))
            }
            _ => Err(Error::VertexNotOnEdges { vertex: v }),
        }
    }

    /// `∠_v(a, b) > θ`: some first edges of geodesics `v → a` and `v → b`
    /// make an angle larger than `theta`.
    pub fn angle_vertices_gt(&self, v: Vertex, a: Vertex, b: Vertex, theta: u32) -> bool {
        self.max_vertex_angle(v, a, b)
            .is_some_and(|ang| ang.exceeds(theta))
    }

    /// Largest angle at `v` between first edges of geodesics toward `a` and
    /// `b`; `None` when `v` is `a` or `b`.
    pub fn max_vertex_angle(&self, v: Vertex, a: Vertex, b: Vertex) -> Option<AngleValue> {
        if v == a || v == b {
            return None;
        }
        let (ra, rb) = (self.dist.row(a), self.dist.row(b));
        let nbrs = self.graph.neighbors(v);
        let mut best = None;
        for (i, &w1) in nbrs.iter().enumerate() {
            if ra[w1] + 1 != ra[v] {
                continue;
            }
            for (j, &w2) in nbrs.iter().enumerate() {
                if rb[w2] + 1 != rb[v] {
                    continue;
                }
                let ang = self.angles.by_index(v, i, j);
                if best.is_none_or(|b| ang > b) {
                    best = Some(ang);
                }
            }
        }
        best
    }

    /// `Cone_θ(e)` by breadth-first search over edge chains.
    pub fn cone(&self, e: Edge, theta: u32) -> Cone {
        let mut depth = std::collections::HashMap::new();
        depth.insert(e, 0u32);
        let mut queue = VecDeque::from([e]);
        while let Some(cur) = queue.pop_front() {
            let dcur = depth[&cur];
            if dcur >= theta {
                continue;
            }
            let (p, q) = cur.endpoints();
            for (v, w) in [(p, q), (q, p)] {
                let nbrs = self.graph.neighbors(v);
                let i = nbrs.binary_search(&w).expect("edge endpoint");
                for (j, &w2) in nbrs.iter().enumerate() {
                    let next = Edge::new(v, w2);
                    if depth.contains_key(&next) {
                        continue;
                    }
                    if !self.angles.by_index(v, i, j).exceeds(theta) {
                        depth.insert(next, dcur + 1);
                        queue.push_back(next);
                    }
                }
            }
        }
        let edges: BTreeSet<Edge> = depth.into_keys().collect();
        let vertices = edges
            .iter()
            .flat_map(|e| {
                let (u, v) = e.endpoints();
                [u, v]
            })
            .collect();
        Cone {
            anchor: e,
            theta,
            edges,
            vertices,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cone {
    pub anchor: Edge,
    pub theta: u32,
    pub edges: BTreeSet<Edge>,
    pub vertices: BTreeSet<Vertex>,
}

impl Cone {
    /// Edges plus vertices, since a cone holds both.
    pub fn size(&self) -> usize {
        self.edges.len() + self.vertices.len()
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }
}

/// Simple cycles of length at most `max_len` through `e`, each given by its
/// canonical vertex sequence (smallest rotation or reflection).
///
/// `budget` caps the number of search nodes.
pub fn simple_loops_through(
    g: &Graph,
    dm: &DistanceMatrix,
    e: Edge,
    max_len: u32,
    budget: u64,
) -> Result<BTreeSet<Vec<Vertex>>> {
    let mut found = BTreeSet::new();
    if max_len < 3 {
        return Ok(found);
    }
    let (u, v) = e.endpoints();
    let rv = dm.row(v);
    let mut on_path = vec![false; g.vertex_count()];
    let mut path = vec![u];
    on_path[u] = true;
    let mut nodes = 0u64;

    struct Search<'a> {
        g: &'a Graph,
        rv: &'a [u16],
        target: Vertex,
        max_edges: u32,
        budget: u64,
    }
    fn dfs(
        s: &Search<'_>,
        path: &mut Vec<Vertex>,
        on_path: &mut [bool],
        nodes: &mut u64,
        found: &mut BTreeSet<Vec<Vertex>>,
    ) -> Result<()> {
        *nodes += 1;
        if *nodes > s.budget {
            return Err(Error::BudgetExceeded(format!(
                "loop search exceeded {} nodes",
                s.budget
            )));
        }
        let cur = *path.last().unwrap();
        let len = path.len() as u32 - 1;
        for &w in s.g.neighbors(cur) {
            if w == s.target {
                // A path of one edge is `e` itself.
                if len >= 1 {
                    let mut cycle = path.clone();
                    cycle.push(w);
                    found.insert(canonical_cycle(&cycle));
                }
                continue;
            }
            if on_path[w] || len + 1 + s.rv[w] as u32 > s.max_edges {
                continue;
            }
            on_path[w] = true;
            path.push(w);
            dfs(s, path, on_path, nodes, found)?;
            path.pop();
            on_path[w] = false;
        }
        Ok(())
    }
    let search = Search {
        g,
        rv: &rv,
        target: v,
        max_edges: max_len - 1,
        budget,
    };
    dfs(&search, &mut path, &mut on_path, &mut nodes, &mut found)?;
    Ok(found)
}

/// Lexicographically smallest rotation or reflection of a cycle.
pub fn canonical_cycle(cycle: &[Vertex]) -> Vec<Vertex> {
    let n = cycle.len();
    let mut best: Option<Vec<Vertex>> = None;
    for start in 0..n {
        for dir in [1isize, -1] {
            let cand: Vec<Vertex> = (0..n as isize)
                .map(|i| cycle[(start as isize + dir * i).rem_euclid(n as isize) as usize])
                .collect();
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    best.unwrap_or_default()
}

pub fn count_simple_loops_through(
    g: &Graph,
    dm: &DistanceMatrix,
    e: Edge,
    max_len: u32,
    budget: u64,
) -> Result<u64> {
    Ok(simple_loops_through(g, dm, e, max_len, budget)?.len() as u64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCount {
    pub edge: Edge,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinenessReport {
    #[serde(rename = "L")]
    pub max_len: u32,
    pub per_edge: Vec<EdgeCount>,
    pub phi: u64,
}

/// Loop counts for every edge and their maximum `φ(L)`.
pub fn fineness_report(
    g: &Graph,
    dm: &DistanceMatrix,
    max_len: u32,
    budget_per_edge: u64,
) -> Result<FinenessReport> {
    let per_edge = g
        .edges()
        .into_par_iter()
        .map(|edge| {
            count_simple_loops_through(g, dm, edge, max_len, budget_per_edge)
                .map(|count| EdgeCount { edge, count })
        })
        .collect::<Result<Vec<_>>>()?;
    let phi = per_edge.iter().map(|c| c.count).max().unwrap_or(0);
    Ok(FinenessReport {
        max_len,
        per_edge,
        phi,
    })
}

/// An edge of `[a,b]` that lies in no `Cone_{50δ}` of the edge at the same
/// distance from `a` on `[a,c]` or from `b` on `[b,c]`, if there is one.
///
/// `cones` caches cones by anchor across calls.
pub fn conical_thinness_violation(
    geo: &Geometry,
    delta: u32,
    ab: &GeodesicPath,
    ac: &GeodesicPath,
    bc: &GeodesicPath,
    cones: &mut HashMap<Edge, Cone>,
) -> Option<Edge> {
    let theta = 50 * delta;
    let dab = ab.len();
    let mut in_cone = |anchor: Edge, e: Edge| {
        cones
            .entry(anchor)
            .or_insert_with(|| geo.cone(anchor, theta))
            .contains_edge(e)
    };
    for i in 0..dab {
        let e = Edge::new(ab.at(i), ab.at(i + 1));
        let from_a = (i < ac.len()).then(|| Edge::new(ac.at(i), ac.at(i + 1)));
        let j = dab - i - 1;
        let from_b = (j < bc.len()).then(|| Edge::new(bc.at(j), bc.at(j + 1)));
        let ok = from_a.is_some_and(|m| in_cone(m, e)) || from_b.is_some_and(|m| in_cone(m, e));
        if !ok {
            return Some(e);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cycle, path, random_tree};

    #[test]
    fn angle_arithmetic() {
        use AngleValue::*;
        assert_eq!(Finite(2) + Finite(3), Finite(5));
        assert_eq!(Finite(2) + Infinite, Infinite);
        assert!(Infinite > Finite(u32::MAX));
        assert!(Infinite.exceeds(1_000_000));
        assert!(!Finite(3).exceeds(3));
    }

    #[test]
    fn cycle_angles() {
        for n in 3..9 {
            let g = cycle(n).unwrap();
            let a = angle_edges(&g, 0, Edge::new(0, 1), Edge::new(0, n - 1)).unwrap();
            assert_eq!(a, AngleValue::Finite(n as u32 - 2));
            let same = angle_edges(&g, 0, Edge::new(0, 1), Edge::new(0, 1)).unwrap();
            assert_eq!(same, AngleValue::Finite(0));
        }
        let g = cycle(5).unwrap();
        assert_eq!(
            angle_edges(&g, 2, Edge::new(0, 1), Edge::new(1, 2)),
            Err(Error::VertexNotOnEdges { vertex: 2 })
        );
    }

    #[test]
    fn tree_angles_and_cones() {
        let t = random_tree(25, 3).unwrap();
        let geo = Geometry::new(t.clone());
        for v in t.vertices() {
            for &w1 in t.neighbors(v) {
                for &w2 in t.neighbors(v) {
                    let expect = if w1 == w2 {
                        AngleValue::Finite(0)
                    } else {
                        AngleValue::Infinite
                    };
                    assert_eq!(geo.angle(v, w1, w2), expect);
                }
            }
        }
        for e in t.edges() {
            let c = geo.cone(e, 1000);
            assert_eq!(c.edges.len(), 1);
            assert_eq!(c.size(), 3);
        }
        // Interior vertex of a path separates its ends; an end vertex does not.
        let p = Geometry::new(path(5).unwrap());
        assert!(p.angle_vertices_gt(2, 0, 4, u32::MAX - 1));
        assert!(!p.angle_vertices_gt(3, 0, 1, 0));
    }

    #[test]
    fn c5_vertex_angles() {
        // Brute force: at v = 0 the only first edges toward 1 and 4 are
        // {0,1} and {0,4}, whose far ends are 3 apart once 0 is removed.
        let g = Geometry::new(cycle(5).unwrap());
        assert_eq!(g.max_vertex_angle(0, 1, 4), Some(AngleValue::Finite(3)));
        assert!(g.angle_vertices_gt(0, 1, 4, 2));
        assert!(!g.angle_vertices_gt(0, 1, 4, 3));
    }

    #[test]
    fn cycle_cones() {
        let g = Geometry::new(cycle(5).unwrap());
        let c = g.cone(Edge::new(0, 1), 3);
        assert_eq!((c.edges.len(), c.vertices.len()), (5, 5));
        let c0 = g.cone(Edge::new(0, 1), 0);
        assert_eq!(c0.edges.len(), 1);
        assert_eq!(c0.vertices, BTreeSet::from([0, 1]));
        // Angle 3 at every vertex: θ = 2 admits no turn at all.
        assert_eq!(g.cone(Edge::new(0, 1), 2).edges.len(), 1);
    }

    #[test]
    fn loop_counts() {
        let c5 = cycle(5).unwrap();
        let dm = DistanceMatrix::new(&c5);
        assert_eq!(
            count_simple_loops_through(&c5, &dm, Edge::new(0, 1), 5, 1000).unwrap(),
            1
        );
        assert_eq!(
            count_simple_loops_through(&c5, &dm, Edge::new(0, 1), 4, 1000).unwrap(),
            0
        );
        let rep = fineness_report(&c5, &dm, 5, 1000).unwrap();
        assert_eq!(rep.phi, 1);
        assert!(rep.per_edge.iter().all(|c| c.count == 1));

        let t = random_tree(30, 1).unwrap();
        let dm = DistanceMatrix::new(&t);
        assert_eq!(fineness_report(&t, &dm, 8, 1000).unwrap().phi, 0);

        // K_4: two triangles and two 4-cycles through each edge.
        let k4 =
            crate::graph::build_graph(&[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let dm = DistanceMatrix::new(&k4);
        let rep = fineness_report(&k4, &dm, 4, 1000).unwrap();
        assert!(rep.per_edge.iter().all(|c| c.count == 4));
        assert!(matches!(
            count_simple_loops_through(&k4, &dm, Edge::new(0, 1), 4, 2),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canonical_cycle(&[3, 1, 2]), vec![1, 2, 3]);
        assert_eq!(canonical_cycle(&[3, 2, 1]), vec![1, 2, 3]);
        assert_eq!(canonical_cycle(&[2, 0, 3, 1]), vec![0, 2, 1, 3]);
    }

    #[test]
    fn conical_thinness() {
        let geodesic = |v: &[Vertex]| GeodesicPath {
            vertices: v.to_vec(),
        };
        let t = random_tree(30, 4).unwrap();
        let geo = Geometry::new(t.clone());
        let mut cones = HashMap::new();
        for (a, b, c) in [(0, 17, 29), (5, 5, 12), (3, 22, 8)] {
            let p = |x, y| crate::graph::some_geodesic(&t, &geo.dist, x, y);
            let (ab, ac, bc) = (p(a, b), p(a, c), p(b, c));
            assert_eq!(
                conical_thinness_violation(&geo, 0, &ab, &ac, &bc, &mut cones),
                None
            );
        }

        // Opposite arcs of C_6 only fall into each other's cones once θ ≥ 4.
        let geo = Geometry::new(cycle(6).unwrap());
        let (ab, ac, bc) = (
            geodesic(&[0, 1, 2, 3]),
            geodesic(&[0, 5, 4, 3]),
            geodesic(&[3]),
        );
        assert_eq!(
            conical_thinness_violation(&geo, 0, &ab, &ac, &bc, &mut HashMap::new()),
            Some(Edge::new(0, 1))
        );
        assert_eq!(
            conical_thinness_violation(&geo, 1, &ab, &ac, &bc, &mut HashMap::new()),
            None
        );
    }
}
