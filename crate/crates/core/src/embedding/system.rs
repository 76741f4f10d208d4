//! The second-order embedding system solved for `∂_nn u`.
//!
//! For a metric with tangential block `g_kl`, cross terms `b_k = g_kn` and
//! normal component `g_nn`, differentiating the isometry equations in `x_n`
//! gives
//!
//! ```text
//! ∂_n u  · ∂_nn u = ½ ∂_n g_nn
//! ∂_k u  · ∂_nn u = ∂_n b_k − ½ ∂_k g_nn
//! ∂_kl u · ∂_nn u = ∂_kn u · ∂_ln u + ½ ∂_n(∂_k b_l + ∂_l b_k) − ½ ∂_nn g_kl − ½ ∂_kl g_nn
//! ```
//!
//! optionally augmented by `e · ∂_nn u = 0` for fixed constant vectors `e`.

use crate::error::{Error, Result};
use crate::jet::{dot, Jet, JetMatrix};
use crate::metric::MetricJet;
use crate::scalar::Scalar;

/// Pairs `(k, l)` with `k <= l < m`, in row order.
pub fn tangential_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|k| (k..m).map(move |l| (k, l))).collect()
}

/// Position of `(k, l)` (either order) in [`tangential_pairs`].
pub fn pair_index(m: usize, k: usize, l: usize) -> usize {
    let (k, l) = if k <= l { (k, l) } else { (l, k) };
    k * m + l - k - k * k.saturating_sub(1) / 2
}

#[derive(Clone, Debug)]
pub struct EmbeddingSystem<C> {
    n: usize,
    ambient: usize,
    extra_rows: Vec<Vec<C>>,
    rhs_n: Jet<C>,
    rhs_k: Vec<Jet<C>>,
    rhs_kl: Vec<Jet<C>>,
}

impl<C: Scalar> EmbeddingSystem<C> {
    /// `extra_rows` are constant vectors `e` adding the equations `e · ∂_nn u = 0`.
    pub fn new(g: &MetricJet<C>, ambient: usize, extra_rows: Vec<Vec<C>>) -> Result<Self> {
        let n = g.dim();
        let m = n - 1;
        let equations = n + m * n / 2 + extra_rows.len();
        if equations != ambient {
            return Err(Error::Dimension(format!(
                "embedding system has {equations} equations for {ambient} unknowns"
            )));
        }
        if extra_rows.iter().any(|r| r.len() != ambient) {
            return Err(Error::Dimension("extra rows must have the ambient dimension".into()));
        }
        let last = n - 1;
        let half = C::from_ratio(1, 2);
        let gnn = g.g_nn();
        let b = g.cross_terms();
        let rhs_n = gnn.differentiate(last).scale(&half);
        let rhs_k = (0..m)
            .map(|k| b[k].differentiate(last).checked_sub(&gnn.differentiate(k).scale(&half)))
            .collect::<Result<_>>()?;
        let rhs_kl = tangential_pairs(m)
            .into_iter()
            .map(|(k, l)| {
                let cross = b[l]
                    .differentiate(k)
                    .checked_add(&b[k].differentiate(l))?
                    .differentiate(last)
                    .scale(&half);
                let gkl = g.get(k, l).differentiate(last).differentiate(last).scale(&half);
                let gnn_kl = gnn.differentiate(k).differentiate(l).scale(&half);
                cross.checked_sub(&gkl)?.checked_sub(&gnn_kl)
            })
            .collect::<Result<_>>()?;
        Ok(EmbeddingSystem {
            n,
            ambient,
            extra_rows,
            rhs_n,
            rhs_k,
            rhs_kl,
        })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Rows of the principal matrix: `∂_j u`, `∂_n u`, `∂_jk u`, then the extra rows.
    pub fn rows(&self, u: &[Jet<C>]) -> Result<Vec<Vec<Jet<C>>>> {
        if u.len() != self.ambient {
            return Err(Error::Dimension(format!(
                "embedding system for {} components applied to {}",
                self.ambient,
                u.len()
            )));
        }
        let n = self.n;
        let m = n - 1;
        let nvars = u[0].nvars();
        let order = u.iter().map(Jet::order).min().unwrap_or(0);
        let first: Vec<Vec<Jet<C>>> = (0..n).map(|k| super::partial(u, k)).collect();
        let mut rows: Vec<Vec<Jet<C>>> = first.clone();
        for (k, l) in tangential_pairs(m) {
            rows.push(super::partial(&first[k], l));
        }
        for e in &self.extra_rows {
            rows.push(e.iter().map(|c| Jet::constant(nvars, order, c.clone())).collect());
        }
        Ok(rows)
    }

    /// Principal matrix and right-hand side at the partial solution `u`.
    pub fn build(&self, u: &[Jet<C>]) -> Result<(JetMatrix<C>, Vec<Jet<C>>)> {
        let n = self.n;
        let m = n - 1;
        let last = n - 1;
        let rows = self.rows(u)?;
        let nvars = u[0].nvars();
        let mut rhs = Vec::with_capacity(self.ambient);
        rhs.extend(self.rhs_k.iter().cloned());
        rhs.push(self.rhs_n.clone());
        let dn: Vec<Vec<Jet<C>>> = (0..m).map(|k| super::partial(&rows[k], last)).collect();
        for (idx, (k, l)) in tangential_pairs(m).into_iter().enumerate() {
            rhs.push(dot(&dn[k], &dn[l]).checked_add(&self.rhs_kl[idx])?);
        }
        for _ in &self.extra_rows {
            rhs.push(Jet::zero(nvars, u[0].order()));
        }
        Ok((JetMatrix::from_rows(rows)?, rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_indexing_matches_enumeration() {
        for m in 1..5 {
            for (i, (k, l)) in tangential_pairs(m).into_iter().enumerate() {
                assert_eq!(pair_index(m, k, l), i);
                assert_eq!(pair_index(m, l, k), i);
            }
        }
    }
}
