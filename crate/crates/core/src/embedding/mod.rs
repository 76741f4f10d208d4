//! Isometric embeddings as jets: the second-order embedding system, the
//! Cartan-Janet induction for nonsingular metrics, Cauchy data on the
//! hypersurface `x_n = 0` for admissible singular metrics, and solves of the
//! augmented system away from the singular point.

mod cartan_janet;
mod points;
mod singular;
mod system;

pub use cartan_janet::{
    build_nonsingular_data, cartan_janet_metric_order, embed_cartan_janet, CartanJanetOptions,
};
pub use points::{augmentation_rows, solve_at_base_points, PointSolve};
pub use singular::{
    build_singular_data, build_singular_data_at, perturbation_estimate, singular_metric_order, FrameData,
    PerturbationEstimate, SingularData, SingularOptions,
};
pub use system::{pair_index, tangential_pairs, EmbeddingSystem};

use crate::error::{Error, Result};
use crate::jet::{dot, Jet, JetMatrix};
use crate::scalar::Scalar;

/// Ambient dimension `n(n+1)/2` of a Cartan-Janet embedding.
pub fn cartan_janet_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Ambient dimension `(n² + 3n − 4)/2` of the embedding of an admissible singular metric.
pub fn singular_ambient_dim(n: usize) -> usize {
    (n * n + 3 * n - 4) / 2
}

/// A map into Euclidean space, one jet per ambient coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingJet<C> {
    pub components: Vec<Jet<C>>,
    /// Base point of the expansion in source coordinates.
    pub base_point: Vec<f64>,
}

impl<C: Scalar> EmbeddingJet<C> {
    pub fn new(components: Vec<Jet<C>>, base_point: Vec<f64>) -> Self {
        EmbeddingJet {
            components,
            base_point,
        }
    }

    pub fn ambient(&self) -> usize {
        self.components.len()
    }

    pub fn nvars(&self) -> usize {
        self.components.first().map_or(0, Jet::nvars)
    }

    pub fn order(&self) -> usize {
        self.components.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn partial(&self, var: usize) -> Vec<Jet<C>> {
        partial(&self.components, var)
    }
}

/// Cauchy data `(u0, u1)` on `x_n = 0`.
#[derive(Clone, Debug)]
pub struct CauchyData<C> {
    pub u0: Vec<Jet<C>>,
    pub u1: Vec<Jet<C>>,
    /// Perturbation scale used (`μ` for nonsingular data, `ε` for singular data).
    pub scale: C,
    pub attempts: usize,
}

impl<C: Scalar> CauchyData<C> {
    pub fn ambient(&self) -> usize {
        self.u0.len()
    }

    /// Truncates `u0` to `order` and `u1` to `order - 1`, as a second-order solve expects.
    pub fn truncated(&self, order: usize) -> CauchyData<C> {
        CauchyData {
            u0: self.u0.iter().map(|j| j.truncate(order)).collect(),
            u1: self.u1.iter().map(|j| j.truncate(order.saturating_sub(1))).collect(),
            scale: self.scale.clone(),
            attempts: self.attempts,
        }
    }
}

pub(crate) fn partial<C: Scalar>(v: &[Jet<C>], var: usize) -> Vec<Jet<C>> {
    v.iter().map(|c| c.differentiate(var)).collect()
}

pub(crate) fn vec_add<C: Scalar>(a: &[Jet<C>], b: &[Jet<C>]) -> Result<Vec<Jet<C>>> {
    a.iter().zip(b).map(|(x, y)| x.checked_add(y)).collect()
}

pub(crate) fn vec_scale<C: Scalar>(a: &[Jet<C>], s: &Jet<C>) -> Result<Vec<Jet<C>>> {
    a.iter().map(|x| x.checked_mul(s)).collect()
}

pub(crate) fn norm_sq<C: Scalar>(a: &[Jet<C>]) -> Jet<C> {
    dot(a, a)
}

/// The vector orthogonal to `rows` (`m − 1` vectors in `m` dimensions) whose
/// components are the cofactors along an appended last row.
pub(crate) fn cross_product<C: Scalar>(rows: &[Vec<Jet<C>>]) -> Result<Vec<Jet<C>>> {
    let m = rows.len() + 1;
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Dimension(format!(
            "cross product needs {} vectors of length {m}",
            m - 1
        )));
    }
    if m == 1 {
        return Err(Error::Dimension("cross product in one dimension".into()));
    }
    (0..m)
        .map(|i| {
            let minor = JetMatrix::from_fn(m - 1, m - 1, |r, c| {
                let col = if c < i { c } else { c + 1 };
                rows[r][col].clone()
            });
            let d = minor.det()?;
            Ok(if (m - 1 + i) % 2 == 1 { -d } else { d })
        })
        .collect()
}

/// Constant unit vector `e_index` in `dim` dimensions, as jets.
pub(crate) fn unit_vector<C: Scalar>(dim: usize, index: usize, nvars: usize, order: usize) -> Vec<Jet<C>> {
    (0..dim)
        .map(|i| {
            if i == index {
                Jet::one(nvars, order)
            } else {
                Jet::zero(nvars, order)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn ambient_dimensions() {
        assert_eq!(cartan_janet_dim(2), 3);
        assert_eq!(cartan_janet_dim(3), 6);
        assert_eq!(singular_ambient_dim(2), 3);
        assert_eq!(singular_ambient_dim(3), 7);
    }

    #[test]
    fn cross_product_is_orthogonal() {
        let x = Jet::<Rational>::var(1, 3, 0);
        let one = Jet::<Rational>::one(1, 3);
        let a = vec![one.clone(), x.clone(), &x * &x];
        let b = vec![x.clone(), one.clone(), Jet::zero(1, 3)];
        let nu = cross_product(&[a.clone(), b.clone()]).unwrap();
        assert!(dot(&nu, &a).is_zero());
        assert!(dot(&nu, &b).is_zero());
        // classical formula for the third component: a1 b2 - a2 b1 = 1 - x^2
        assert_eq!(nu[2], Jet::from_terms(1, 3, [(vec![0], Rational::from_i64(1)), (vec![2], Rational::from_i64(-1))]));
    }
}
