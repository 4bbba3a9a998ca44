//! The change-of-basepoint matrix and a sparse largest-singular-value solver.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decompose::SignedDecomposition;
use super::{Scalar, ThetaVector};
use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::partitions::{ClassIndex, ClassKey};

/// Coordinate-format real matrix, entries sorted by `(row, col)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.retain(|e| e.2 != 0.0);
        entries.sort_by_key(|e| (e.0, e.1));
        SparseMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &(r, c, x) in &self.entries {
            out[r] += x * v[c];
        }
        out
    }

    pub fn mul_t_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for &(r, c, x) in &self.entries {
            out[c] += x * v[r];
        }
        out
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for &(r, c, x) in &self.entries {
            m[(r, c)] += x;
        }
        m
    }

    /// `row,col,value` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,value\n");
        for &(r, c, x) in &self.entries {
            writeln!(s, "{r},{c},{x}").expect("writing to a String");
        }
        s
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Iteration cap for [`operator_norm`].
pub const POWER_ITERATION_CAP: usize = 10_000;

/// Largest singular value by power iteration on `MᵀM` from a fixed seeded
/// start vector; stops once the estimate moves by less than `tol` relatively.
pub fn operator_norm(m: &SparseMatrix, tol: f64) -> Result<f64> {
    if m.entries.is_empty() {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..m.cols).map(|_| rng.gen_range(0.5..1.5)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut est = 0.0f64;
    for _ in 0..POWER_ITERATION_CAP {
        let mut w = m.mul_t_vec(&m.mul_vec(&v));
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        // ‖MᵀMv‖ for unit v tends to σ².
        let next = nw.sqrt();
        w.iter_mut().for_each(|x| *x /= nw);
        v = w;
        if (next - est).abs() <= tol * next {
            return Ok(next);
        }
        est = next;
    }
    Err(Error::NonConvergence {
        iterations: POWER_ITERATION_CAP,
    })
}

/// One nonzero of `A`: sign and the ratio `(n+1)/(n'+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub row: ClassKey,
    pub col: ClassKey,
    pub sign: i8,
    pub num: u32,
    pub den: u32,
}

/// `A : ℓ²(U_{x'}) → ℓ²(U_x)` with `A∘Θ_{x'} = Θ_x` on the rows it covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasepointMatrix {
    pub x: Vertex,
    pub x_prime: Vertex,
    /// Rows cover every class at `x` with `n ≤ valid_n`.
    pub valid_n: u32,
    pub rows: Vec<ClassKey>,
    pub cols: Vec<ClassKey>,
    /// Sorted by `(row, col)`.
    pub entries: Vec<MatrixEntry>,
}

/// Assembles `A` from decompositions of every class at `x` with `n ≤ valid_n`.
pub fn basepoint_matrix(
    idx_x: &ClassIndex,
    idx_xp: &ClassIndex,
    decompositions: &[SignedDecomposition],
    valid_n: u32,
) -> Result<BasepointMatrix> {
    let by_target: BTreeMap<ClassKey, &SignedDecomposition> =
        decompositions.iter().map(|d| (d.target, d)).collect();
    let rows: Vec<ClassKey> = idx_x.keys().filter(|k| k.n <= valid_n).collect();
    let mut entries = Vec::new();
    for &row in &rows {
        let dec = by_target
            .get(&row)
            .ok_or_else(|| Error::IncompleteCover(format!("({}, {}, {})", row.n, row.k, row.i)))?;
        for (list, sign) in [(&dec.positives, 1i8), (&dec.negatives, -1i8)] {
            for &col in list.iter() {
                entries.push(MatrixEntry {
                    row,
                    col,
                    sign,
                    num: row.n + 1,
                    den: col.n + 1,
                });
            }
        }
    }
    entries.sort_by_key(|e| (e.row, e.col));
    Ok(BasepointMatrix {
        x: idx_x.basepoint,
        x_prime: idx_xp.basepoint,
        valid_n,
        rows,
        cols: idx_xp.keys().collect(),
        entries,
    })
}

impl BasepointMatrix {
    /// `A·θ`, keyed by classes at `x`.
    pub fn apply<T: Scalar>(&self, theta: &ThetaVector<T>) -> ThetaVector<T> {
        let mut out: BTreeMap<ClassKey, T> = BTreeMap::new();
        for e in &self.entries {
            let t = theta.get(e.col);
            if t.is_zero() {
                continue;
            }
            let c = T::ratio(e.sign as i64 * e.num as i64, e.den as i64);
            let slot = out.entry(e.row).or_insert_with(T::zero);
            *slot = slot.clone() + c * t;
        }
        out.retain(|_, v| !v.is_zero());
        ThetaVector { entries: out }
    }

    fn support_counts(&self) -> (BTreeMap<ClassKey, usize>, BTreeMap<ClassKey, usize>) {
        let (mut r, mut c) = (BTreeMap::new(), BTreeMap::new());
        for e in &self.entries {
            *r.entry(e.row).or_insert(0) += 1;
            *c.entry(e.col).or_insert(0) += 1;
        }
        (r, c)
    }

    pub fn max_row_support(&self) -> usize {
        self.support_counts().0.into_values().max().unwrap_or(0)
    }

    pub fn max_col_support(&self) -> usize {
        self.support_counts().1.into_values().max().unwrap_or(0)
    }

    /// Largest `|entry|`.
    pub fn max_coefficient(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.num as f64 / e.den as f64)
            .fold(0.0, f64::max)
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let rpos: BTreeMap<ClassKey, usize> =
            self.rows.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let cpos: BTreeMap<ClassKey, usize> =
            self.cols.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        SparseMatrix::new(
            self.rows.len(),
            self.cols.len(),
            self.entries
                .iter()
                .map(|e| {
                    (
                        rpos[&e.row],
                        cpos[&e.col],
                        e.sign as f64 * e.num as f64 / e.den as f64,
                    )
                })
                .collect(),
        )
    }

    /// `row,col,value` with rows and columns written as `n:k:i`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,value\n");
        for e in &self.entries {
            let sign = if e.sign < 0 { "-" } else { "" };
            writeln!(
                s,
                "{}:{}:{},{}:{}:{},{sign}{}/{}",
                e.row.n, e.row.k, e.row.i, e.col.n, e.col.k, e.col.i, e.num, e.den
            )
            .expect("writing to a String");
        }
        s
    }
}
