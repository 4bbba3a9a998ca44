//! Undirected simple graphs and their metric.
//!
//! A [`Graph`] is immutable once built: adjacency lists are sorted, symmetric,
//! free of loops and parallel edges, and the graph is connected. Vertices are
//! dense indices `0..n`.

mod io;
mod metric;

pub use io::{read_edge_list, read_graph_file, read_json, write_edge_list, write_json};
pub use metric::{
    all_geodesics, all_pairs_distances, bfs_avoiding, gromov_product, hyperbolicity_delta,
    interval, quasi_center, some_geodesic, DeltaEstimate, DistanceMatrix, GeodesicPath, HalfInt,
    QuasiCenter, DEFAULT_DENSE_VERTEX_CAP, UNREACHABLE,
};

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;

/// An unordered edge, stored with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(Vertex, Vertex);

impl Edge {
    /// Panics on a loop; graphs never contain one.
    pub fn new(u: Vertex, v: Vertex) -> Self {
        assert_ne!(u, v, "an edge needs two distinct endpoints");
        if u < v {
            Edge(u, v)
        } else {
            Edge(v, u)
        }
    }

    pub fn endpoints(self) -> (Vertex, Vertex) {
        (self.0, self.1)
    }

    pub fn contains(self, v: Vertex) -> bool {
        self.0 == v || self.1 == v
    }

    /// The endpoint opposite `v`, if `v` is on the edge.
    pub fn other(self, v: Vertex) -> Option<Vertex> {
        if self.0 == v {
            Some(self.1)
        } else if self.1 == v {
            Some(self.0)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<Vertex>>,
    labels: Vec<Option<String>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph on the vertices `0..n`.
    pub fn new(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        Self::with_labels(n, edges, vec![None; n])
    }

    pub fn with_labels(
        n: usize,
        edges: &[(Vertex, Vertex)],
        labels: Vec<Option<String>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if labels.len() != n {
            return Err(Error::Usage(format!(
                "{} labels for {} vertices",
                labels.len(),
                n
            )));
        }
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n {
                return Err(Error::UnknownVertex(u));
            }
            if v >= n {
                return Err(Error::UnknownVertex(v));
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            let e = Edge::new(u, v);
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let g = Graph {
            adj,
            labels,
            edge_count: seen.len(),
        };
        let components = g.component_count();
        if components != 1 {
            return Err(Error::DisconnectedGraph { components });
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertices(&self) -> std::ops::Range<Vertex> {
        0..self.adj.len()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn label(&self, v: Vertex) -> Option<&str> {
        self.labels.get(v).and_then(|l| l.as_deref())
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (u, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| Edge(u, v)));
        }
        out
    }

    /// Edges incident to `v`, ordered by the opposite endpoint.
    pub fn incident_edges(&self, v: Vertex) -> impl Iterator<Item = Edge> + '_ {
        self.adj[v].iter().map(move |&w| Edge::new(v, w))
    }

    pub fn is_tree(&self) -> bool {
        self.edge_count + 1 == self.vertex_count()
    }

    fn component_count(&self) -> usize {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }
}

/// The δ used in angle thresholds such as `∠ > 12δ` and in the `4δ`
/// quasi-center bound.
///
/// Trees keep `0`, so "`> 0`" separates distinct edges there. Any other graph
/// gets at least `1`: interval thinness can be `0` without the graph being a
/// tree (every block a clique, e.g. `K_4`), and the threshold statements fail
/// with a zero constant on such graphs.
pub fn threshold_delta(g: &Graph, delta: u32) -> u32 {
    if g.is_tree() {
        0
    } else {
        delta.max(1)
    }
}

/// Builds a graph from an edge list over arbitrary integer ids.
///
/// Ids are compacted in increasing order, so `[(3, 7)]` becomes the single
/// edge `{0, 1}`.
pub fn build_graph(edge_list: &[(u64, u64)]) -> Result<Graph> {
    let ids: BTreeSet<u64> = edge_list.iter().flat_map(|&(u, v)| [u, v]).collect();
    let index: BTreeMap<u64, Vertex> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let edges: Vec<(Vertex, Vertex)> = edge_list
        .iter()
        .map(|&(u, v)| (index[&u], index[&v]))
        .collect();
    Graph::new(ids.len(), &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_and_triangle() {
        let p3 = build_graph(&[(0, 1), (1, 2)]).unwrap();
        assert_eq!(p3.vertex_count(), 3);
        assert_eq!(p3.edge_count(), 2);
        assert!(p3.is_tree());

        let c3 = build_graph(&[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(c3.edge_count(), 3);
        assert_eq!(c3.neighbors(0), &[1, 2]);
        assert!(!c3.is_tree());
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            build_graph(&[(0, 1), (2, 3)]),
            Err(Error::DisconnectedGraph { components: 2 })
        );
        assert_eq!(build_graph(&[(0, 0)]), Err(Error::SelfLoop(0)));
        assert_eq!(
            build_graph(&[(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge(0, 1))
        );
        assert_eq!(build_graph(&[]), Err(Error::EmptyGraph));
    }

    #[test]
    fn ids_are_compacted() {
        let g = build_graph(&[(10, 30), (30, 20)]).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert!(g.has_edge(0, 2));
        assert!(g.has_edge(1, 2));
        assert!(!g.has_edge(0, 1));
    }

    #[test]
    fn edge_helpers() {
        let e = Edge::new(5, 2);
        assert_eq!(e.endpoints(), (2, 5));
        assert_eq!(e.other(2), Some(5));
        assert_eq!(e.other(3), None);
        assert!(e.contains(5));
    }
}
