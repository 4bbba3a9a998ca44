//! Truncated (coned-off) Cayley graphs of free products.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::free_product::{Factor, FreeProductSpec, NormalForm};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, Vertex};
use crate::hilbert::PartialGroupAction;

/// Largest radius accepted unless the caller raises it.
pub const DEFAULT_MAX_RADIUS: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexKind {
    Group,
    /// Apex of the coset `rep · H_factor`.
    Cone {
        factor: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Group(NormalForm),
    Cone(NormalForm, usize),
}

#[derive(Clone, Debug)]
pub struct BallOptions {
    /// Add a cone vertex per coset of each factor.
    pub coned: bool,
    /// Largest |exponent| allowed in a ℤ syllable; keeps balls finite.
    pub window: u32,
    pub max_radius: u32,
    pub budget_vertices: usize,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions {
            coned: true,
            window: 2,
            max_radius: DEFAULT_MAX_RADIUS,
            budget_vertices: 200_000,
        }
    }
}

/// A finite ball around the identity, together with the group data behind
/// every vertex.
#[derive(Clone, Debug)]
pub struct TruncatedSpace {
    pub graph: Graph,
    pub base: Vertex,
    pub radius: u32,
    pub spec: FreeProductSpec,
    pub options: BallOptions,
    kinds: Vec<VertexKind>,
    /// Group element, or coset representative for cone vertices.
    words: Vec<NormalForm>,
    level: Vec<u32>,
    complete: Vec<bool>,
    index: HashMap<Key, Vertex>,
}

impl TruncatedSpace {
    pub fn kind(&self, v: Vertex) -> VertexKind {
        self.kinds[v]
    }

    pub fn word(&self, v: Vertex) -> &NormalForm {
        &self.words[v]
    }

    /// Distance from the base.
    pub fn level(&self, v: Vertex) -> u32 {
        self.level[v]
    }

    /// Whether every neighbour `v` has in the full graph is present here.
    pub fn is_complete(&self, v: Vertex) -> bool {
        self.complete[v]
    }

    pub fn group_vertex(&self, w: &NormalForm) -> Option<Vertex> {
        self.index.get(&Key::Group(w.clone())).copied()
    }

    pub fn cone_vertex(&self, w: &NormalForm, factor: usize) -> Option<Vertex> {
        self.index
            .get(&Key::Cone(w.coset_rep(factor), factor))
            .copied()
    }

    pub fn group_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.graph
            .vertices()
            .filter(|&v| self.kinds[v] == VertexKind::Group)
    }

    /// Orbit type of an edge under left translation: the factor whose coset
    /// contains it, and whether it is a cone edge.
    pub fn edge_orbit(&self, e: Edge) -> (usize, bool) {
        let (u, v) = e.endpoints();
        match (self.kinds[u], self.kinds[v]) {
            (VertexKind::Cone { factor }, _) | (_, VertexKind::Cone { factor }) => (factor, true),
            _ => {
                let (wu, wv) = (&self.words[u], &self.words[v]);
                let longer = if wu.syllables.len() >= wv.syllables.len() {
                    wu
                } else {
                    wv
                };
                (longer.last_factor().expect("non-identity endpoint"), false)
            }
        }
    }

    /// Whether every simple loop of length ≤ `max_len` through `e` in the full
    /// coned-off graph is present in this ball.
    ///
    /// Simple loops stay inside one coset block (the block graph is a tree),
    /// so it is enough that the block is materialized far enough around `e`.
    pub fn loops_certified(&self, e: Edge, max_len: u32) -> bool {
        let (factor, _) = self.edge_orbit(e);
        let (u, v) = e.endpoints();
        let member = if self.kinds[u] == VertexKind::Group {
            u
        } else {
            v
        };
        let rep = self.words[member].coset_rep(factor);
        let Some(apex) = self.index.get(&Key::Cone(rep.clone(), factor)).copied() else {
            // Without cones a free product Cayley graph is a tree apart from
            // the cycles of finite factors.
            return match self.spec.factors()[factor] {
                Factor::Infinite => true,
                Factor::Finite(m) => (0..m as i64).all(|k| {
                    self.group_vertex(
                        &self
                            .spec
                            .multiply(&rep, &self.spec.generator_power(factor, k)),
                    )
                    .is_some()
                }),
            };
        };
        match self.spec.factors()[factor] {
            Factor::Finite(_) => self.complete[apex],
            Factor::Infinite => {
                let exp_of = |x: Vertex| match self.kinds[x] {
                    VertexKind::Cone { .. } => None,
                    VertexKind::Group => Some(
                        self.words[x]
                            .syllables
                            .last()
                            .filter(|s| {
                                s.0 == factor && self.words[x].syllables.len() > rep.syllables.len()
                            })
                            .map_or(0, |s| s.1),
                    ),
                };
                let reach = max_len as i64 - 2;
                let (lo, hi) = match (exp_of(u), exp_of(v)) {
                    (Some(a), Some(b)) => {
                        let (a, b) = (a.min(b), a.max(b));
                        (b - reach, a + reach)
                    }
                    (Some(a), None) | (None, Some(a)) => (a - reach, a + reach),
                    (None, None) => unreachable!("cone vertices are never adjacent"),
                };
                (lo..=hi).all(|k| {
                    self.group_vertex(
                        &self
                            .spec
                            .multiply(&rep, &self.spec.generator_power(factor, k)),
                    )
                    .is_some()
                })
            }
        }
    }
}

/// Ball of radius `r` around the identity in the Cayley graph of `spec`,
/// coned off when `opts.coned` is set.
///
/// Vertices are numbered in breadth-first order, so the identity is vertex 0.
pub fn cayley_ball(spec: &FreeProductSpec, r: u32, opts: &BallOptions) -> Result<TruncatedSpace> {
    if r > opts.max_radius {
        return Err(Error::BudgetExceeded(format!(
            "radius {r} above the cap of {}",
            opts.max_radius
        )));
    }
    let window = opts.window as i64;
    let admissible = |w: &NormalForm| {
        w.syllables
            .iter()
            .all(|&(f, e)| spec.factors()[f] != Factor::Infinite || e.abs() <= window)
    };

    let mut keys: Vec<Key> = vec![Key::Group(spec.identity())];
    let mut level = vec![0u32];
    let mut complete = Vec::new();
    let mut index: HashMap<Key, Vertex> = HashMap::from([(keys[0].clone(), 0)]);
    let mut edges = BTreeSet::new();
    let mut queue = VecDeque::from([0usize]);

    while let Some(v) = queue.pop_front() {
        let mut all_present = true;
        for nb in neighbours(spec, &keys[v], window, opts.coned) {
            let present = match &nb {
                Key::Group(w) | Key::Cone(w, _) => admissible(w),
            };
            if !present {
                all_present = false;
                continue;
            }
            let id = match index.get(&nb) {
                Some(&id) => id,
                None if level[v] < r => {
                    let id = keys.len();
                    if id >= opts.budget_vertices {
                        return Err(Error::BudgetExceeded(format!(
                            "ball of radius {r} in {spec} exceeds {} vertices",
                            opts.budget_vertices
                        )));
                    }
                    index.insert(nb.clone(), id);
                    keys.push(nb);
                    level.push(level[v] + 1);
                    queue.push_back(id);
                    id
                }
                None => {
                    all_present = false;
                    continue;
                }
            };
            edges.insert(Edge::new(v, id));
        }
        // BFS pops in id order, so `complete` lines up with ids.
        debug_assert_eq!(complete.len(), v);
        complete.push(all_present);
    }

    let n = keys.len();
    let (kinds, words): (Vec<_>, Vec<_>) = keys
        .iter()
        .map(|k| match k {
            Key::Group(w) => (VertexKind::Group, w.clone()),
            Key::Cone(w, f) => (VertexKind::Cone { factor: *f }, w.clone()),
        })
        .unzip();
    let labels = keys
        .iter()
        .map(|k| {
            Some(match k {
                Key::Group(w) => spec.format_word(w),
                Key::Cone(w, f) => format!("{}<{}>", spec.format_word(w), spec.letter(*f)),
            })
        })
        .collect();
    let pairs: Vec<(Vertex, Vertex)> = edges.iter().map(|e| e.endpoints()).collect();
    let graph = Graph::with_labels(n, &pairs, labels)?;
    Ok(TruncatedSpace {
        graph,
        base: 0,
        radius: r,
        spec: spec.clone(),
        options: opts.clone(),
        kinds,
        words,
        level,
        complete,
        index,
    })
}

/// Neighbours in the full (untruncated) graph, in a fixed order. ℤ cosets are
/// listed only up to `window` since they are infinite.
fn neighbours(spec: &FreeProductSpec, key: &Key, window: i64, coned: bool) -> Vec<Key> {
    let mut out = Vec::new();
    match key {
        Key::Group(g) => {
            for (f, factor) in spec.factors().iter().enumerate() {
                let steps: &[i64] = match factor {
                    Factor::Finite(2) => &[1],
                    _ => &[1, -1],
                };
                for &s in steps {
                    out.push(Key::Group(spec.multiply(g, &spec.generator_power(f, s))));
                }
                if coned {
                    out.push(Key::Cone(g.coset_rep(f), f));
                }
            }
        }
        Key::Cone(rep, f) => {
            let exps: Vec<i64> = match spec.factors()[*f] {
                Factor::Finite(m) => (0..m as i64).collect(),
                // One past the window so completeness is reported honestly.
                Factor::Infinite => (-window - 1..=window + 1).collect(),
            };
            for k in exps {
                out.push(Key::Group(spec.multiply(rep, &spec.generator_power(*f, k))));
            }
        }
    }
    out
}

/// Coned-off ball with the default options and window.
pub fn coned_off_ball(spec: &FreeProductSpec, r: u32) -> Result<TruncatedSpace> {
    cayley_ball(spec, r, &BallOptions::default())
}

/// Ball of radius `r` in the `q`-regular tree, realised as the Cayley graph
/// of the free product of `q` copies of ℤ/2.
pub fn regular_tree_ball(q: usize, r: u32) -> Result<TruncatedSpace> {
    if q < 2 {
        return Err(Error::Usage("regular trees need valence at least 2".into()));
    }
    let spec = FreeProductSpec::unchecked(vec![Factor::Finite(2); q])?;
    let opts = BallOptions {
        coned: false,
        max_radius: u32::MAX,
        ..BallOptions::default()
    };
    cayley_ball(&spec, r, &opts)
}

/// Left multiplication by `word`, defined wherever the image is in the ball.
pub fn left_translation(space: &TruncatedSpace, word: &NormalForm) -> Result<PartialGroupAction> {
    let spec = &space.spec;
    let map: Vec<Option<Vertex>> = space
        .graph
        .vertices()
        .map(|v| {
            let image = spec.multiply(word, &space.words[v]);
            match space.kinds[v] {
                VertexKind::Group => space.group_vertex(&image),
                VertexKind::Cone { factor } => space.cone_vertex(&image, factor),
            }
        })
        .collect();
    if map[space.base].is_none() {
        return Err(Error::EmptyDomain(format!(
            "{} moves the base outside the ball",
            spec.format_word(word)
        )));
    }
    PartialGroupAction::new(spec.format_word(word), map, space.base, &space.graph)
}
