//! Partial graph automorphisms and the representation they induce.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{h_norm_sq, theta, FinSuppFunction, Scalar};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::partitions::ClassIndex;

/// A graph automorphism germ: an injective, adjacency-preserving map defined
/// on part of a finite graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialGroupAction {
    pub label: String,
    map: Vec<Option<Vertex>>,
    inverse: Vec<Option<Vertex>>,
    pub base: Vertex,
    /// `d(base, g·base)`.
    pub displacement: u32,
}

impl PartialGroupAction {
    /// Checks injectivity and adjacency preservation on the domain.
    pub fn new(label: String, map: Vec<Option<Vertex>>, base: Vertex, g: &Graph) -> Result<Self> {
        let n = g.vertex_count();
        if map.len() != n {
            return Err(Error::Usage(format!(
                "action map has {} entries for {n} vertices",
                map.len()
            )));
        }
        let mut inverse = vec![None; n];
        for (v, image) in map.iter().enumerate() {
            if let Some(w) = *image {
                if w >= n {
                    return Err(Error::UnknownVertex(w));
                }
                if inverse[w].replace(v).is_some() {
                    return Err(Error::Usage(format!("action is not injective at {w}")));
                }
            }
        }
        for e in g.edges() {
            let (u, v) = e.endpoints();
            if let (Some(a), Some(b)) = (map[u], map[v]) {
                if !g.has_edge(a, b) {
                    return Err(Error::Usage(format!(
                        "action does not preserve the edge {{{u}, {v}}}"
                    )));
                }
            }
        }
        let image =
            map[base].ok_or_else(|| Error::EmptyDomain(format!("{label}: base unmapped")))?;
        let displacement = crate::graph::bfs_avoiding(g, base, |_| false)[image];
        Ok(PartialGroupAction {
            label,
            map,
            inverse,
            base,
            displacement,
        })
    }

    pub fn identity(g: &Graph, base: Vertex) -> Self {
        let map = g.vertices().map(Some).collect::<Vec<_>>();
        PartialGroupAction {
            label: "e".into(),
            inverse: map.clone(),
            map,
            base,
            displacement: 0,
        }
    }

    /// `g·v`, when defined.
    pub fn apply(&self, v: Vertex) -> Option<Vertex> {
        self.map.get(v).copied().flatten()
    }

    /// `g⁻¹·v`, when `v` is in the image.
    pub fn preimage(&self, v: Vertex) -> Option<Vertex> {
        self.inverse.get(v).copied().flatten()
    }

    pub fn domain(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.map
            .iter()
            .enumerate()
            .filter_map(|(v, w)| w.map(|_| v))
    }

    pub fn image_of_base(&self) -> Vertex {
        self.map[self.base].expect("base is always in the domain")
    }
}

/// `π(g)f = f ∘ g⁻¹`, i.e. `π(g)δ_a = δ_{g·a}`.
pub fn pi_apply<T: Scalar>(
    action: &PartialGroupAction,
    f: &FinSuppFunction<T>,
) -> Result<FinSuppFunction<T>> {
    let mut out = FinSuppFunction::zero();
    for (a, t) in f.iter() {
        let ga = action.apply(a).ok_or(Error::SupportOutsideDomain(a))?;
        out.set(ga, t.clone());
    }
    Ok(out)
}

fn missing(index: &ClassIndex, v: Vertex) -> Error {
    Error::MissingTruncationData(format!(
        "vertex {v} lies beyond radius {} of {}",
        index.max_n, index.basepoint
    ))
}

/// Gram matrix of `Θ_x` applied to `δ_{b}` for `b` in `basis`.
fn gram(index: &ClassIndex, basis: &[Vertex]) -> Result<DMatrix<f64>> {
    let mut by_key: std::collections::BTreeMap<_, Vec<(usize, f64)>> = Default::default();
    for (j, &b) in basis.iter().enumerate() {
        if !index.covers(b) {
            return Err(missing(index, b));
        }
        let t = theta(index, &FinSuppFunction::<f64>::delta(b))?;
        for (key, v) in t.entries {
            by_key.entry(key).or_default().push((j, v));
        }
    }
    let mut g = DMatrix::zeros(basis.len(), basis.len());
    for col in by_key.values() {
        for &(i, vi) in col {
            for &(j, vj) in col {
                g[(i, j)] += vi * vj;
            }
        }
    }
    Ok(g)
}

/// `‖π(g)‖` on functions supported in `B(x, r_dom)`, measured in `H_x`:
/// the largest `√λ` with `G_2 v = λ G_1 v`, where `G_1`, `G_2` are the Gram
/// matrices of `δ_a` and `δ_{g·a}`.
///
/// Vertices of the ball that `g` does not map into the indexed range are
/// left out of the domain; a ball with no such vertex is an error.
pub fn pi_operator_norm(
    index: &ClassIndex,
    action: &PartialGroupAction,
    r_dom: u32,
) -> Result<f64> {
    if r_dom > index.max_n {
        return Err(Error::MissingTruncationData(format!(
            "domain radius {r_dom} exceeds indexed radius {}",
            index.max_n
        )));
    }
    let (basis, images): (Vec<Vertex>, Vec<Vertex>) = (0..=r_dom)
        .flat_map(|n| {
            index
                .classes(n, 0)
                .iter()
                .flat_map(|c| c.members.iter().copied())
        })
        .filter_map(|a| {
            action
                .apply(a)
                .filter(|&ga| index.covers(ga))
                .map(|ga| (a, ga))
        })
        .unzip();
    if basis.is_empty() {
        return Err(Error::EmptyDomain(action.label.clone()));
    }
    let g1 = gram(index, &basis)?;
    let g2 = gram(index, &images)?;
    let chol = nalgebra::Cholesky::new(g1).ok_or_else(|| {
        Error::DecompositionMismatch("Gram matrix of the basis is not positive definite".into())
    })?;
    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(basis.len(), basis.len()))
        .expect("Cholesky factor is invertible");
    let c = &linv * g2 * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let top = nalgebra::SymmetricEigen::new(c)
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    Ok(top.sqrt())
}

/// `‖δ_e − π(g)δ_e‖²_{H_e}` with `e` the basepoint of `index`.
pub fn cocycle_norm_sq(index: &ClassIndex, action: &PartialGroupAction) -> Result<f64> {
    if action.base != index.basepoint {
        return Err(Error::Usage(format!(
            "action base {} differs from index basepoint {}",
            action.base, index.basepoint
        )));
    }
    let ge = action.image_of_base();
    if !index.covers(ge) {
        return Err(missing(index, ge));
    }
    let e = FinSuppFunction::<Complex64>::delta(index.basepoint);
    let c = e.minus(&pi_apply(action, &e)?);
    h_norm_sq(index, &c)
}
