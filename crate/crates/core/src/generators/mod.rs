//! Test fixtures and group-theoretic graph families.

mod coned;
mod free_product;

pub use coned::{
    cayley_ball, coned_off_ball, left_translation, regular_tree_ball, BallOptions, TruncatedSpace,
    VertexKind, DEFAULT_MAX_RADIUS,
};
pub use free_product::{Factor, FreeProductSpec, NormalForm, MAX_FACTORS};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::Usage(format!("cycle needs n >= 3, got {n}")));
    }
    let edges: Vec<(Vertex, Vertex)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::new(n, &edges)
}

pub fn path(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let edges: Vec<(Vertex, Vertex)> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::new(n, &edges)
}

/// `K_{1,m}` with the centre as vertex 0.
pub fn star(m: usize) -> Result<Graph> {
    let edges: Vec<(Vertex, Vertex)> = (1..=m).map(|i| (0, i)).collect();
    Graph::new(m + 1, &edges)
}

/// Uniform random recursive tree: vertex `i` hangs off a uniformly chosen
/// earlier vertex. Same seed, same tree.
pub fn random_tree(n: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(Vertex, Vertex)> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    Graph::new(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures() {
        let c5 = cycle(5).unwrap();
        assert_eq!((c5.vertex_count(), c5.edge_count()), (5, 5));
        assert!(cycle(2).is_err());
        assert_eq!(path(1).unwrap().vertex_count(), 1);
        let t = random_tree(20, 7).unwrap();
        assert_eq!(t.edge_count(), 19);
        assert_eq!(t, random_tree(20, 7).unwrap());
        assert_eq!(star(4).unwrap().degree(0), 4);
    }
}
