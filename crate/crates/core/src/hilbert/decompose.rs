//! Writing a class at one basepoint as a signed combination of classes at another.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fine::Geometry;
use crate::graph::{gromov_product, some_geodesic, DistanceMatrix, Graph, Vertex};
use crate::partitions::{ClassIndex, ClassKey};
use crate::triangles::{normal_triangle, TriangleConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionMethod {
    /// `x = x'`.
    Identity,
    /// Closed formulas along `[x, x']` in a tree.
    Tree,
    /// Per-member case analysis on normal triangles.
    Constructive,
    /// Top-down cover of the laminar family at `x'`.
    Greedy,
}

/// `1_target = Σ 1_P − Σ 1_N` with `P` at basepoint `x` and `N` at `x'`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedDecomposition {
    pub x: Vertex,
    pub x_prime: Vertex,
    /// Key in the index at `x`.
    pub target: ClassKey,
    /// Keys in the index at `x'`.
    pub positives: Vec<ClassKey>,
    pub negatives: Vec<ClassKey>,
    pub method: DecompositionMethod,
    /// Why the constructive attempt was abandoned, when it was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<String>,
    /// Members whose `k'` had to be lowered to `n'`.
    pub clamped: u32,
    /// Members per case 1–4 of the constructive analysis.
    pub cases: [u32; 4],
    /// Smallest and largest `n'` referenced.
    pub n_range: Option<(u32, u32)>,
}

impl SignedDecomposition {
    fn new(
        idx_x: &ClassIndex,
        idx_xp: &ClassIndex,
        target: ClassKey,
        positives: BTreeSet<ClassKey>,
        negatives: BTreeSet<ClassKey>,
        method: DecompositionMethod,
    ) -> Self {
        let n_range = positives.iter().chain(negatives.iter()).map(|k| k.n).fold(
            None,
            |acc: Option<(u32, u32)>, n| {
                Some(acc.map_or((n, n), |(lo, hi)| (lo.min(n), hi.max(n))))
            },
        );
        SignedDecomposition {
            x: idx_x.basepoint,
            x_prime: idx_xp.basepoint,
            target,
            positives: positives.into_iter().collect(),
            negatives: negatives.into_iter().collect(),
            method,
            discrepancy: None,
            clamped: 0,
            cases: [0; 4],
            n_range,
        }
    }
}

/// Checks the indicator identity, disjointness of positives and of
/// negatives, and that each negative sits one level below exactly one positive.
pub fn verify_decomposition(
    idx_x: &ClassIndex,
    idx_xp: &ClassIndex,
    dec: &SignedDecomposition,
) -> Result<()> {
    let mismatch = |msg: String| Err(Error::DecompositionMismatch(msg));
    let target = idx_x.class(dec.target);
    let mut owner: HashMap<Vertex, ClassKey> = HashMap::new();
    for &p in &dec.positives {
        for &a in &idx_xp.class(p).members {
            if let Some(q) = owner.insert(a, p) {
                return mismatch(format!("positives {q:?} and {p:?} overlap at {a}"));
            }
        }
    }
    let mut removed: HashSet<Vertex> = HashSet::new();
    for &neg in &dec.negatives {
        let c = idx_xp.class(neg);
        let parent = match owner.get(&c.members[0]) {
            Some(&p) if p.n == neg.n && p.k + 1 == neg.k => p,
            _ => {
                return mismatch(format!(
                    "negative {neg:?} is not one level below a positive"
                ))
            }
        };
        for &a in &c.members {
            if owner.get(&a) != Some(&parent) {
                return mismatch(format!("negative {neg:?} leaves its positive {parent:?}"));
            }
            if !removed.insert(a) {
                return mismatch(format!("negatives overlap at {a}"));
            }
        }
    }
    for &a in owner.keys() {
        if !removed.contains(&a) && !target.contains(a) {
            return mismatch(format!("{a} is covered but not in the target"));
        }
    }
    for &a in &target.members {
        if !owner.contains_key(&a) || removed.contains(&a) {
            return mismatch(format!("{a} is in the target but not covered"));
        }
    }
    Ok(())
}

fn require_covered(idx_xp: &ClassIndex, a: Vertex) -> Result<()> {
    if idx_xp.covers(a) {
        Ok(())
    } else {
        Err(Error::MissingTruncationData(format!(
            "vertex {a} lies beyond radius {} of {}",
            idx_xp.max_n, idx_xp.basepoint
        )))
    }
}

fn n_of(idx: &ClassIndex, a: Vertex) -> u32 {
    idx.class_of(a, 0).expect("covered vertex").n
}

/// Class at `x'` of the vertices at distance `n'` whose geodesics from `x'`
/// pass through `z` (with `d(x', z) = k'`). Tree-only: it is unique if non-empty.
fn tree_class_through(
    dm: &DistanceMatrix,
    idx_xp: &ClassIndex,
    n_p: i64,
    k_p: i64,
    z: Vertex,
) -> Result<Option<ClassKey>> {
    if k_p < 0 || n_p < k_p {
        return Ok(None);
    }
    let (n_p, k_p) = (n_p as u32, k_p as u32);
    if n_p > idx_xp.max_n {
        return Err(Error::MissingTruncationData(format!(
            "sphere {n_p} around {} is not indexed (max {})",
            idx_xp.basepoint, idx_xp.max_n
        )));
    }
    let rz = dm.row(z);
    Ok(idx_xp
        .classes(n_p, k_p)
        .iter()
        .position(|c| rz[c.members[0]] as u32 == n_p - k_p)
        .map(|i| ClassKey {
            n: n_p,
            k: k_p,
            i: i as u32,
        }))
}

/// Decomposition along the geodesic `[x, x']` of a tree.
///
/// With `z` the point of `[x, a]` at distance `k` (the same for every member):
/// off `[x, x']` the class is a single class at `x'`; at `z = x_{i0}` it is
/// `Σ_{i ≥ i0} I_{x_i}^{n−2i+d, d−i} − I_{x_{i−1}}^{n−2i+d, d−i+1}`.
pub fn decompose_class_tree(
    g: &Graph,
    dm: &DistanceMatrix,
    idx_x: &ClassIndex,
    idx_xp: &ClassIndex,
    key: ClassKey,
) -> Result<SignedDecomposition> {
    if !g.is_tree() {
        return Err(Error::NotATree);
    }
    let (x, xp) = (idx_x.basepoint, idx_xp.basepoint);
    let c = idx_x.class(key);
    let (n, k) = (key.n as i64, key.k as i64);
    let a = c.members[0];
    let z = some_geodesic(g, dm, x, a).at(k as usize);
    let d = dm.d(x, xp) as i64;
    let mut pos = BTreeSet::new();
    let mut neg = BTreeSet::new();
    if dm.d(x, z) + dm.d(z, xp) != d as u32 {
        for &m in &c.members {
            require_covered(idx_xp, m)?;
        }
        let kp = dm.d(xp, z);
        pos.insert(idx_xp.class_of(a, kp).expect("k' <= n'"));
    } else {
        let path = some_geodesic(g, dm, x, xp);
        for i in k..=d {
            let np = n - 2 * i + d;
            if let Some(p) = tree_class_through(dm, idx_xp, np, d - i, path.at(i as usize))? {
                pos.insert(p);
                if i > 0 {
                    if let Some(q) =
                        tree_class_through(dm, idx_xp, np, d - i + 1, path.at(i as usize - 1))?
                    {
                        neg.insert(q);
                    }
                }
            }
        }
    }
    let method = if x == xp {
        DecompositionMethod::Identity
    } else {
        DecompositionMethod::Tree
    };
    Ok(SignedDecomposition::new(
        idx_x, idx_xp, key, pos, neg, method,
    ))
}

/// Covers `members` by classes at `x'`, descending the laminar family from
/// level 0. A class is taken whole when it lies inside the set, or with its
/// outside children subtracted when every child is inside or outside and the
/// outside ones are the minority; otherwise the search descends.
pub fn decompose_greedy(
    idx_xp: &ClassIndex,
    members: &[Vertex],
) -> Result<(BTreeSet<ClassKey>, BTreeSet<ClassKey>)> {
    let inside: HashSet<Vertex> = members.iter().copied().collect();
    let mut pos = BTreeSet::new();
    let mut neg = BTreeSet::new();
    let mut stack: Vec<ClassKey> = Vec::new();
    let mut roots = BTreeSet::new();
    for &a in members {
        require_covered(idx_xp, a)?;
        roots.insert(idx_xp.class_of(a, 0).expect("covered"));
    }
    stack.extend(roots.into_iter().rev());
    while let Some(key) = stack.pop() {
        let c = idx_xp.class(key);
        let hits = c.members.iter().filter(|a| inside.contains(a)).count();
        if hits == c.members.len() {
            pos.insert(key);
            continue;
        }
        // A partial class has k < n: level n classes are singletons.
        let mut children: BTreeSet<ClassKey> = BTreeSet::new();
        for &a in &c.members {
            children.insert(idx_xp.class_of(a, key.k + 1).expect("k + 1 <= n"));
        }
        let (mut full, mut empty, mut partial) = (Vec::new(), Vec::new(), Vec::new());
        for ch in children {
            let m = &idx_xp.class(ch).members;
            let h = m.iter().filter(|a| inside.contains(a)).count();
            if h == m.len() {
                full.push(ch);
            } else if h == 0 {
                empty.push(ch);
            } else {
                partial.push(ch);
            }
        }
        if partial.is_empty() && empty.len() < full.len() {
            pos.insert(key);
            neg.extend(empty);
        } else {
            pos.extend(full);
            stack.extend(partial.into_iter().rev());
        }
    }
    Ok((pos, neg))
}

/// The decomposition of the class `key` at `x` in terms of classes at `x'`,
/// assembled member by member from normal triangles `[x, x', a]`.
///
/// `delta` is the scale multiplying every angle and distance constant. If
/// the constructive result fails [`verify_decomposition`], the greedy laminar
/// cover is used instead and the reason recorded in `discrepancy`.
pub fn decompose_class_general(
    geo: &Geometry,
    delta: u32,
    idx_x: &ClassIndex,
    idx_xp: &ClassIndex,
    key: ClassKey,
    cfg: &TriangleConfig,
) -> Result<SignedDecomposition> {
    let (x, xp) = (idx_x.basepoint, idx_xp.basepoint);
    let c = idx_x.class(key);
    for &a in &c.members {
        require_covered(idx_xp, a)?;
    }
    if x == xp {
        let pos = BTreeSet::from([idx_xp.class_of(c.members[0], key.k).expect("k <= n")]);
        return Ok(SignedDecomposition::new(
            idx_x,
            idx_xp,
            key,
            pos,
            BTreeSet::new(),
            DecompositionMethod::Identity,
        ));
    }
    match constructive(geo, delta, idx_x, idx_xp, key, cfg) {
        Ok(dec) => match verify_decomposition(idx_x, idx_xp, &dec) {
            Ok(()) => Ok(dec),
            Err(e) => fallback(idx_x, idx_xp, key, dec.clamped, dec.cases, e.to_string()),
        },
        Err(e @ Error::ConstructionFailed { .. }) => {
            fallback(idx_x, idx_xp, key, 0, [0; 4], e.to_string())
        }
        Err(e) => Err(e),
    }
}

fn fallback(
    idx_x: &ClassIndex,
    idx_xp: &ClassIndex,
    key: ClassKey,
    clamped: u32,
    cases: [u32; 4],
    reason: String,
) -> Result<SignedDecomposition> {
    let (pos, neg) = decompose_greedy(idx_xp, &idx_x.class(key).members)?;
    let mut dec =
        SignedDecomposition::new(idx_x, idx_xp, key, pos, neg, DecompositionMethod::Greedy);
    dec.discrepancy = Some(reason);
    dec.clamped = clamped;
    dec.cases = cases;
    verify_decomposition(idx_x, idx_xp, &dec)?;
    Ok(dec)
}

fn constructive(
    geo: &Geometry,
    delta: u32,
    idx_x: &ClassIndex,
    idx_xp: &ClassIndex,
    key: ClassKey,
    cfg: &TriangleConfig,
) -> Result<SignedDecomposition> {
    let dm = &geo.dist;
    let (x, xp) = (idx_x.basepoint, idx_xp.basepoint);
    let (n, k) = (key.n, key.k);
    // Each member contributes a piece `P − ⋃N`; pieces are nested or disjoint.
    let mut pieces: BTreeMap<ClassKey, BTreeSet<ClassKey>> = BTreeMap::new();
    let mut clamped = 0;
    let mut cases = [0u32; 4];
    for &a in &idx_x.class(key).members {
        let np = n_of(idx_xp, a);
        if n == 0 {
            // The class is {x}; its singleton class at x' is exact.
            pieces
                .entry(idx_xp.class_of(a, np).expect("k' = n'"))
                .or_default();
            cases[0] += 1;
            continue;
        }
        let tri = normal_triangle(geo, delta, x, xp, a, cfg)?;
        let z = tri.ac.at(k as usize);
        let at = tri.tildes[2];
        let pos_at = dm.d(x, at);
        let pos_u = gromov_product(dm, xp, a, x).floor() as u32;
        let d_v = gromov_product(dm, x, a, xp).floor() as u32;
        let d_at = dm.d(xp, at);
        let d_z = dm.d(xp, z);
        let (case, kp) = if k > pos_at || (at == a && k == n) {
            (0, d_z)
        } else if k <= pos_u && d_at >= d_v + 8 * delta {
            (1, d_v + 8 * delta)
        } else if k > pos_u && d_at >= d_z + 3 * delta {
            (2, d_z + 3 * delta)
        } else {
            (3, d_at)
        };
        cases[case] += 1;
        let kp = if kp > np {
            clamped += 1;
            np
        } else {
            kp
        };
        let p = idx_xp.class_of(a, kp).expect("k' <= n'");
        let negs = pieces.entry(p).or_default();
        // With ã = x only k = 0 reaches this case, and every member of the
        // positive class already belongs to the target.
        if case == 3 && kp < np && at != x {
            for &b in &idx_xp.class(p).members {
                if !geo.angle_vertices_gt(at, x, b, 24 * delta) {
                    negs.insert(idx_xp.class_of(b, kp + 1).expect("k'+1 <= n'"));
                }
            }
        }
    }
    // Keep the maximal pieces.
    let inside = |p: ClassKey, q: ClassKey, negs: &BTreeSet<ClassKey>| {
        let m = idx_xp.class(p).members[0];
        p != q
            && p.n == q.n
            && q.k < p.k
            && idx_xp.class_of(m, q.k) == Some(q)
            && !negs.iter().any(|&nk| idx_xp.class_of(m, nk.k) == Some(nk))
    };
    let mut pos = BTreeSet::new();
    let mut neg = BTreeSet::new();
    for (&p, negs) in &pieces {
        if !pieces.iter().any(|(&q, qn)| inside(p, q, qn)) {
            pos.insert(p);
            neg.extend(negs.iter().copied());
        }
    }
    // The angle test only certifies membership one way, so a removed class
    // can reappear as another member's piece: `P − N + N = P − (N ∖ N)`.
    let cancel: Vec<ClassKey> = pos
        .iter()
        .filter(|p| neg.contains(p) && pieces[p].is_empty())
        .copied()
        .collect();
    for p in cancel {
        pos.remove(&p);
        neg.remove(&p);
    }
    let mut dec = SignedDecomposition::new(
        idx_x,
        idx_xp,
        key,
        pos,
        neg,
        DecompositionMethod::Constructive,
    );
    dec.clamped = clamped;
    dec.cases = cases;
    Ok(dec)
}
