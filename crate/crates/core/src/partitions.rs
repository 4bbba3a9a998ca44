//! Partitions of spheres by distance profiles to inner balls.
//!
//! For a basepoint `x`, two vertices `a, b` of the sphere `S_x^n` fall in the
//! same class at level `k` when `d(a, z) = d(b, z)` for every `z ∈ B(x, k)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::fine::Geometry;
use crate::graph::{DistanceMatrix, Edge, Vertex};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereClass {
    pub basepoint: Vertex,
    pub n: u32,
    pub k: u32,
    /// Sorted.
    pub members: Vec<Vertex>,
    /// Distances from any member to the vertices of `B(x, k)`, in id order.
    pub profile: Vec<u16>,
}

impl SphereClass {
    pub fn contains(&self, v: Vertex) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

/// Position of a class inside a [`ClassIndex`]: the `i`-th class at `(n, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassKey {
    pub n: u32,
    pub k: u32,
    pub i: u32,
}

/// Partition of `S_x^n` at level `k`, computed directly from full profiles.
/// Classes come in lexicographic profile order.
pub fn sphere_partition(dm: &DistanceMatrix, x: Vertex, n: u32, k: u32) -> Vec<SphereClass> {
    assert!(k <= n, "sphere_partition needs k <= n");
    let ball = dm.ball(x, k);
    let mut groups: HashMap<Vec<u16>, Vec<Vertex>> = HashMap::new();
    for a in dm.sphere(x, n) {
        let row = dm.row(a);
        let profile: Vec<u16> = ball.iter().map(|&z| row[z]).collect();
        groups.entry(profile).or_default().push(a);
    }
    let mut classes: Vec<SphereClass> = groups
        .into_iter()
        .map(|(profile, members)| SphereClass {
            basepoint: x,
            n,
            k,
            members,
            profile,
        })
        .collect();
    classes.sort_by(|p, q| p.profile.cmp(&q.profile));
    classes
}

/// All classes `I_i^{n,k,x}` for `n ≤ max_n`: the index set `U_x`.
#[derive(Clone, Debug)]
pub struct ClassIndex {
    pub basepoint: Vertex,
    pub max_n: u32,
    /// `classes[n][k]`.
    classes: Vec<Vec<Vec<SphereClass>>>,
    /// `class_of[a][k]` for `d(x, a) ≤ max_n`, empty otherwise.
    class_of: Vec<Vec<u32>>,
    /// Flat numbering of keys, in `(n, k, i)` order.
    offsets: Vec<Vec<usize>>,
    len: usize,
}

impl ClassIndex {
    /// Builds the index by refining level `k` into level `k + 1` with the
    /// distances to `S_x^{k+1}`, then sorting each level by full profile.
    pub fn new(dm: &DistanceMatrix, x: Vertex, max_n: u32) -> Self {
        let nv = dm.vertex_count();
        let rx = dm.row(x);
        let mut spheres: Vec<Vec<Vertex>> = vec![Vec::new(); max_n as usize + 1];
        for v in 0..nv {
            if (rx[v] as u32) <= max_n {
                spheres[rx[v] as usize].push(v);
            }
        }
        let balls: Vec<Vec<Vertex>> = (0..=max_n).map(|k| dm.ball(x, k)).collect();

        let mut classes = Vec::with_capacity(max_n as usize + 1);
        let mut class_of = vec![Vec::new(); nv];
        for n in 0..=max_n {
            let sphere = &spheres[n as usize];
            for &a in sphere {
                class_of[a] = vec![0u32; n as usize + 1];
            }
            let mut per_k: Vec<Vec<SphereClass>> = Vec::with_capacity(n as usize + 1);
            // Provisional ids at the previous level, before sorting.
            let mut prev: Vec<u32> = vec![0; sphere.len()];
            for k in 0..=n {
                let ring = &spheres[k as usize];
                let mut ids: HashMap<(u32, Vec<u16>), u32> = HashMap::new();
                let mut cur = Vec::with_capacity(sphere.len());
                for (pos, &a) in sphere.iter().enumerate() {
                    let row = dm.row(a);
                    let key = (prev[pos], ring.iter().map(|&z| row[z]).collect());
                    let next = ids.len() as u32;
                    cur.push(*ids.entry(key).or_insert(next));
                }
                let mut groups: Vec<Vec<Vertex>> = vec![Vec::new(); ids.len()];
                for (pos, &a) in sphere.iter().enumerate() {
                    groups[cur[pos] as usize].push(a);
                }
                let ball = &balls[k as usize];
                let mut level: Vec<SphereClass> = groups
                    .into_iter()
                    .map(|members| {
                        let row = dm.row(members[0]);
                        SphereClass {
                            basepoint: x,
                            n,
                            k,
                            profile: ball.iter().map(|&z| row[z]).collect(),
                            members,
                        }
                    })
                    .collect();
                level.sort_by(|p, q| p.profile.cmp(&q.profile));
                for (i, c) in level.iter().enumerate() {
                    for &a in &c.members {
                        class_of[a][k as usize] = i as u32;
                    }
                }
                per_k.push(level);
                prev = cur;
            }
            classes.push(per_k);
        }

        let mut offsets = Vec::with_capacity(classes.len());
        let mut len = 0;
        for per_k in &classes {
            let mut row = Vec::with_capacity(per_k.len());
            for level in per_k {
                row.push(len);
                len += level.len();
            }
            offsets.push(row);
        }
        let index = ClassIndex {
            basepoint: x,
            max_n,
            classes,
            class_of,
            offsets,
            len,
        };
        if cfg!(debug_assertions) {
            index.check_refinement().expect("class index is laminar");
        }
        index
    }

    /// Classes at `(n, k)`; empty past `max_n`.
    pub fn classes(&self, n: u32, k: u32) -> &[SphereClass] {
        self.classes
            .get(n as usize)
            .and_then(|per_k| per_k.get(k as usize))
            .map_or(&[], |v| v.as_slice())
    }

    pub fn class(&self, key: ClassKey) -> &SphereClass {
        &self.classes[key.n as usize][key.k as usize][key.i as usize]
    }

    /// The class of `a` at level `k`, if `a` is indexed and `k ≤ d(x, a)`.
    pub fn class_of(&self, a: Vertex, k: u32) -> Option<ClassKey> {
        let ks = self.class_of.get(a)?;
        let i = *ks.get(k as usize)?;
        Some(ClassKey {
            n: ks.len() as u32 - 1,
            k,
            i,
        })
    }

    /// Whether `a` lies within `max_n` of the basepoint.
    pub fn covers(&self, a: Vertex) -> bool {
        self.class_of.get(a).is_some_and(|ks| !ks.is_empty())
    }

    /// Number of classes in the index.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Position of `key` in the flat `(n, k, i)` numbering.
    pub fn flat(&self, key: ClassKey) -> usize {
        self.offsets[key.n as usize][key.k as usize] + key.i as usize
    }

    pub fn keys(&self) -> impl Iterator<Item = ClassKey> + '_ {
        self.classes.iter().enumerate().flat_map(|(n, per_k)| {
            per_k.iter().enumerate().flat_map(move |(k, level)| {
                (0..level.len()).map(move |i| ClassKey {
                    n: n as u32,
                    k: k as u32,
                    i: i as u32,
                })
            })
        })
    }

    /// Every class at `(n, k + 1)` lies in one class at `(n, k)`, and each
    /// level partitions its sphere.
    pub fn check_refinement(&self) -> Result<(), String> {
        for (n, per_k) in self.classes.iter().enumerate() {
            let sphere_len = per_k
                .first()
                .map_or(0, |l| l.iter().map(|c| c.members.len()).sum());
            for (k, level) in per_k.iter().enumerate() {
                let total: usize = level.iter().map(|c| c.members.len()).sum();
                if total != sphere_len {
                    return Err(format!("level ({n},{k}) does not partition the sphere"));
                }
                if k == 0 {
                    continue;
                }
                for c in level {
                    let parent = self.class_of[c.members[0]][k - 1];
                    if c.members.iter().any(|&a| self.class_of[a][k - 1] != parent) {
                        return Err(format!("class at ({n},{k}) straddles two parents"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Points of `B(x, k)` nearest to the class: distance exactly `n − k`.
pub fn min_distance_points(dm: &DistanceMatrix, c: &SphereClass) -> Vec<Vertex> {
    let row = dm.row(c.members[0]);
    dm.ball(c.basepoint, c.k)
        .into_iter()
        .filter(|&z| row[z] as u32 == c.n - c.k)
        .collect()
}

/// The largest number of classes at one `(n, k)` sharing a minimal-distance
/// point, with a `(n, k, z)` that attains it.
pub fn classes_per_min_point(
    dm: &DistanceMatrix,
    index: &ClassIndex,
) -> (usize, Option<(u32, u32, Vertex)>) {
    let mut best = (0, None);
    for n in 0..=index.max_n {
        for k in 0..=n {
            let mut count: HashMap<Vertex, usize> = HashMap::new();
            for c in index.classes(n, k) {
                for z in min_distance_points(dm, c) {
                    *count.entry(z).or_default() += 1;
                }
            }
            for (z, c) in count {
                if c > best.0
                    || (c == best.0 && best.1.is_some_and(|(bn, bk, bz)| (n, k, z) < (bn, bk, bz)))
                {
                    best = (c, Some((n, k, z)));
                }
            }
        }
    }
    best
}

/// Which vertex set is enough to pin down the class of `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Determination {
    /// `B(x, k) ∩ B(z, 3δ)`.
    Ball,
    /// The vertices of `Cone_{50δ}(e)` for each edge `e` entering `z` from `S_x^{k-1}`
    /// along a geodesic to `a`.
    Cone,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterminationReport {
    pub holds: bool,
    /// `(a, a', z)` where `a'` agrees with `a` on the test set yet sits in another class.
    pub witness: Option<(Vertex, Vertex, Vertex)>,
}

/// Exhaustive check that distances to a small set near a minimal-distance
/// point determine the class at `(n, k)`.
///
/// The competitors `a'` range over `S_x^n`; for vertices off the sphere the
/// statement is not true in general.
pub fn local_determination_check(
    geo: &Geometry,
    index: &ClassIndex,
    n: u32,
    k: u32,
    delta: u32,
    variant: Determination,
) -> DeterminationReport {
    let dm = &geo.dist;
    let x = index.basepoint;
    let sphere = dm.sphere(x, n);
    let ok = DeterminationReport {
        holds: true,
        witness: None,
    };
    if k == 0 {
        return ok;
    }
    let rx = dm.row(x);
    for &a in &sphere {
        let ra = dm.row(a);
        let own = index.class_of(a, k);
        let c = index.class(own.expect("sphere vertex is indexed"));
        for z in min_distance_points(dm, c) {
            let tests: Vec<Vec<Vertex>> = match variant {
                Determination::Ball => {
                    let rz = dm.row(z);
                    vec![(0..dm.vertex_count())
                        .filter(|&w| rx[w] as u32 <= k && rz[w] as u32 <= 3 * delta)
                        .collect()]
                }
                Determination::Cone => geo
                    .graph
                    .neighbors(z)
                    .iter()
                    .filter(|&&y| rx[y] as u32 + 1 == k && ra[y] == ra[z] + 1)
                    .map(|&y| {
                        geo.cone(Edge::new(y, z), 50 * delta)
                            .vertices
                            .into_iter()
                            .collect()
                    })
                    .collect(),
            };
            for test in tests {
                for &b in &sphere {
                    if index.class_of(b, k) == own {
                        continue;
                    }
                    let rb = dm.row(b);
                    if test.iter().all(|&w| ra[w] == rb[w]) {
                        return DeterminationReport {
                            holds: false,
                            witness: Some((a, b, z)),
                        };
                    }
                }
            }
        }
    }
    ok
}
