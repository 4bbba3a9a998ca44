//! The weighted space `H_x`, its isometry onto `ℓ²(U_x)`, and the linear
//! algebra relating different basepoints.

mod action;
mod decompose;
mod matrix;

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fine::Geometry;
use crate::graph::Vertex;
use crate::partitions::{classes_per_min_point, ClassIndex, ClassKey};

pub use action::{cocycle_norm_sq, pi_apply, pi_operator_norm, PartialGroupAction};
pub use decompose::{
    decompose_class_general, decompose_class_tree, decompose_greedy, verify_decomposition,
    DecompositionMethod, SignedDecomposition,
};
pub use matrix::{basepoint_matrix, operator_norm, BasepointMatrix, SparseMatrix};

/// Exact rationals used where identities should hold on the nose.
pub type Rational = Ratio<i128>;

/// Coefficients for finitely supported functions.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// `|z|²` lives here.
    type Real: Clone
        + Debug
        + PartialOrd
        + Zero
        + Add<Output = Self::Real>
        + Mul<Output = Self::Real>;

    fn from_i64(v: i64) -> Self;
    /// `p / q`.
    fn ratio(p: i64, q: i64) -> Self;
    fn abs_sq(&self) -> Self::Real;
    fn real_from_i64(v: i64) -> Self::Real;
    fn real_to_f64(r: &Self::Real) -> f64;
}

impl Scalar for Complex64 {
    type Real = f64;

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn ratio(p: i64, q: i64) -> Self {
        Complex64::new(p as f64 / q as f64, 0.0)
    }
    fn abs_sq(&self) -> f64 {
        self.norm_sqr()
    }
    fn real_from_i64(v: i64) -> f64 {
        v as f64
    }
    fn real_to_f64(r: &f64) -> f64 {
        *r
    }
}

impl Scalar for f64 {
    type Real = f64;

    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn ratio(p: i64, q: i64) -> Self {
        p as f64 / q as f64
    }
    fn abs_sq(&self) -> f64 {
        self * self
    }
    fn real_from_i64(v: i64) -> f64 {
        v as f64
    }
    fn real_to_f64(r: &f64) -> f64 {
        *r
    }
}

impl Scalar for Rational {
    type Real = Rational;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(v as i128)
    }
    fn ratio(p: i64, q: i64) -> Self {
        Rational::new(p as i128, q as i128)
    }
    fn abs_sq(&self) -> Rational {
        self * self
    }
    fn real_from_i64(v: i64) -> Rational {
        Rational::from_integer(v as i128)
    }
    fn real_to_f64(r: &Rational) -> f64 {
        *r.numer() as f64 / *r.denom() as f64
    }
}

/// A function on vertices with finite support; zero values are never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinSuppFunction<T = Complex64> {
    values: BTreeMap<Vertex, T>,
}

impl<T: Scalar> Default for FinSuppFunction<T> {
    fn default() -> Self {
        FinSuppFunction {
            values: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> FinSuppFunction<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The indicator `δ_a`.
    pub fn delta(a: Vertex) -> Self {
        let mut f = Self::zero();
        f.set(a, T::from_i64(1));
        f
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Vertex, T)>) -> Self {
        let mut f = Self::zero();
        for (v, t) in pairs {
            f.add_at(v, t);
        }
        f
    }

    pub fn set(&mut self, v: Vertex, t: T) {
        if t.is_zero() {
            self.values.remove(&v);
        } else {
            self.values.insert(v, t);
        }
    }

    pub fn add_at(&mut self, v: Vertex, t: T) {
        let cur = self.get(v);
        self.set(v, cur + t);
    }

    pub fn get(&self, v: Vertex) -> T {
        self.values.get(&v).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, &T)> + '_ {
        self.values.iter().map(|(&v, t)| (v, t))
    }

    pub fn support(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.values.keys().copied()
    }

    pub fn support_size(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::from_pairs(self.iter().map(|(v, t)| (v, c.clone() * t.clone())))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (v, t) in other.iter() {
            out.add_at(v, t.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (v, t) in other.iter() {
            out.add_at(v, -t.clone());
        }
        out
    }
}

fn check_support<T: Scalar>(index: &ClassIndex, f: &FinSuppFunction<T>) -> Result<()> {
    match f.support().find(|&a| !index.covers(a)) {
        Some(vertex) => Err(Error::SupportOutsideIndex {
            vertex,
            max_n: index.max_n,
        }),
        None => Ok(()),
    }
}

/// `‖f‖²_{H_x} = Σ_n (n+1)² Σ_k Σ_i |Σ_{a ∈ I_i^{n,k,x}} f(a)|²`, summed class by class.
pub fn h_norm_sq<T: Scalar>(index: &ClassIndex, f: &FinSuppFunction<T>) -> Result<T::Real> {
    check_support(index, f)?;
    let mut levels: Vec<bool> = vec![false; index.max_n as usize + 1];
    for a in f.support() {
        levels[index.class_of(a, 0).expect("covered").n as usize] = true;
    }
    let mut total = T::Real::zero();
    for n in (0..=index.max_n).filter(|&n| levels[n as usize]) {
        let w = T::real_from_i64((n as i64 + 1) * (n as i64 + 1));
        for k in 0..=n {
            for c in index.classes(n, k) {
                let s = c.members.iter().fold(T::zero(), |acc, &a| acc + f.get(a));
                total = total + w.clone() * s.abs_sq();
            }
        }
    }
    Ok(total)
}

/// Coordinates of `Θ_x f` in `ℓ²(U_x)`; zero coordinates are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector<T = Complex64> {
    pub entries: BTreeMap<ClassKey, T>,
}

impl<T: Scalar> ThetaVector<T> {
    pub fn norm_sq(&self) -> T::Real {
        self.entries
            .values()
            .fold(T::Real::zero(), |acc, t| acc + t.abs_sq())
    }

    pub fn get(&self, key: ClassKey) -> T {
        self.entries.get(&key).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `Θ_x f`: the entry at `(n, k, i)` is `(n+1)·Σ_{a ∈ I_i^{n,k,x}} f(a)`.
pub fn theta<T: Scalar>(index: &ClassIndex, f: &FinSuppFunction<T>) -> Result<ThetaVector<T>> {
    check_support(index, f)?;
    let mut sums: BTreeMap<ClassKey, T> = BTreeMap::new();
    for (a, t) in f.iter() {
        let n = index.class_of(a, 0).expect("covered").n;
        for k in 0..=n {
            let key = index.class_of(a, k).expect("k <= n");
            let e = sums.entry(key).or_insert_with(T::zero);
            *e = e.clone() + t.clone();
        }
    }
    let entries = sums
        .into_iter()
        .filter(|(_, s)| !s.is_zero())
        .map(|(key, s)| (key, T::from_i64(key.n as i64 + 1) * s))
        .collect();
    Ok(ThetaVector { entries })
}

/// `φ(f) = Σ_a f(a)`.
pub fn phi<T: Scalar>(f: &FinSuppFunction<T>) -> T {
    f.iter().fold(T::zero(), |acc, (_, t)| acc + t.clone())
}

/// `Σ_{n ≥ 0} 1/(n+1)² = π²/6`, the bound on `|φ(f)|² / ‖f‖²`.
pub const PHI_BOUND: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Polynomial bound on `‖A‖` (and `‖π(g)‖`) as a function of `d = d(x, x')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GrowthBound {
    /// `√(2d+2)·√(2d+3)·(d+1)`.
    Tree,
    /// `(K·d + K)·(d+1)`.
    General { k: f64 },
}

impl GrowthBound {
    pub fn eval(&self, d: u32) -> f64 {
        let d = d as f64;
        match *self {
            GrowthBound::Tree => (2.0 * d + 2.0).sqrt() * (2.0 * d + 3.0).sqrt() * (d + 1.0),
            GrowthBound::General { k } => (k * d + k) * (d + 1.0),
        }
    }
}

/// The constant `K = L·|Cone_{224δ}(ê)|` as measured on a finite graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeasurement {
    /// Most classes at one `(n, k)` sharing a minimal-distance point.
    pub l: usize,
    /// Largest `|Cone_{224δ}(e)|` (edges plus vertices) over the sampled edges.
    pub cone_size: usize,
    pub cone_edge: Option<(Vertex, Vertex)>,
    pub k: usize,
}

/// Measures `K` from the given class indices and the cones of the edges
/// with both endpoints within distance 1 of `anchor`.
pub fn measure_k(
    geo: &Geometry,
    delta: u32,
    indices: &[&ClassIndex],
    anchor: Vertex,
) -> KMeasurement {
    let l = indices
        .iter()
        .map(|idx| classes_per_min_point(&geo.dist, idx).0)
        .max()
        .unwrap_or(0);
    let ra = geo.dist.row(anchor);
    let mut best: (usize, Option<(Vertex, Vertex)>) = (0, None);
    for e in geo.graph.edges() {
        let (u, v) = e.endpoints();
        if ra[u] > 1 || ra[v] > 1 {
            continue;
        }
        let size = geo.cone(e, 224 * delta).size();
        if size > best.0 {
            best = (size, Some((u, v)));
        }
    }
    KMeasurement {
        l,
        cone_size: best.0,
        cone_edge: best.1,
        k: l * best.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{path, star};
    use crate::graph::DistanceMatrix;

    fn index_of(g: &crate::graph::Graph, x: Vertex, max_n: u32) -> ClassIndex {
        ClassIndex::new(&DistanceMatrix::new(g), x, max_n)
    }

    #[test]
    fn delta_norms() {
        let g = path(6).unwrap();
        let idx = index_of(&g, 0, 5);
        let f = FinSuppFunction::<Rational>::delta(0);
        assert_eq!(h_norm_sq(&idx, &f).unwrap(), Rational::from_integer(1));
        for n0 in 0..6i128 {
            let f = FinSuppFunction::<Rational>::delta(n0 as usize);
            assert_eq!(
                h_norm_sq(&idx, &f).unwrap(),
                Rational::from_integer((n0 + 1).pow(3))
            );
        }
    }

    #[test]
    fn star_leaf_difference() {
        let g = star(4).unwrap();
        let idx = index_of(&g, 0, 1);
        let f = FinSuppFunction::<Rational>::from_pairs([
            (1, Rational::from_integer(1)),
            (2, Rational::from_integer(-1)),
        ]);
        assert_eq!(h_norm_sq(&idx, &f).unwrap(), Rational::from_integer(8));
        assert_eq!(phi(&f), Rational::zero());
    }

    #[test]
    fn theta_of_delta_and_zero() {
        let g = star(3).unwrap();
        let idx = index_of(&g, 1, 2);
        let f = FinSuppFunction::<Rational>::delta(2);
        let t = theta(&idx, &f).unwrap();
        assert_eq!(t.entries.len(), 3);
        for (key, v) in &t.entries {
            assert_eq!(key.n, 2);
            assert_eq!(*v, Rational::from_integer(3));
        }
        assert!(theta(&idx, &FinSuppFunction::<Rational>::zero())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn support_outside_index() {
        let g = path(5).unwrap();
        let idx = index_of(&g, 0, 2);
        let f = FinSuppFunction::<Complex64>::delta(4);
        assert_eq!(
            h_norm_sq(&idx, &f),
            Err(Error::SupportOutsideIndex {
                vertex: 4,
                max_n: 2
            })
        );
    }

    #[test]
    fn zeros_are_dropped() {
        let mut f = FinSuppFunction::<f64>::delta(3);
        f.add_at(3, -1.0);
        assert!(f.is_zero());
    }

    #[test]
    fn growth_bounds() {
        assert!((GrowthBound::Tree.eval(0) - 6f64.sqrt()).abs() < 1e-12);
        assert_eq!(GrowthBound::General { k: 3.0 }.eval(2), 27.0);
    }
}
