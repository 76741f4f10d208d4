//! Residuals and certificates: every constructed embedding, Cauchy datum and
//! frame is checked here, and the reports are what callers gate on.

use serde::Serialize;

use crate::embedding::{tangential_pairs, CauchyData, SingularData};
use crate::error::Result;
use crate::jet::{dot, Jet, JetMatrix};
use crate::metric::MetricJet;
use crate::scalar::{Mode, Scalar};

/// Relative float tolerance applied to residual coefficients.
pub const FLOAT_RESIDUAL_TOL: f64 = 1e-9;

/// Residual tolerance: zero in exact mode, `1e-9 · max(1, scale)` in float mode.
pub fn tolerance_for<C: Scalar>(scale: f64) -> f64 {
    match C::MODE {
        Mode::Exact => 0.0,
        Mode::Float => FLOAT_RESIDUAL_TOL * scale.max(1.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquationResidual {
    pub id: String,
    /// Highest total degree checked.
    pub order: usize,
    /// Largest coefficient magnitude up to `order`.
    pub max_abs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub equations: Vec<EquationResidual>,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    /// Checks each residual jet's coefficients up to total degree `order`.
    pub fn from_residuals<C: Scalar>(residuals: Vec<(String, Jet<C>)>, order: usize, tolerance: f64) -> Self {
        let equations: Vec<EquationResidual> = residuals
            .into_iter()
            .map(|(id, r)| {
                let checked = order.min(r.order());
                let max_abs = r
                    .terms()
                    .filter(|(k, _)| k.total_degree() <= checked)
                    .map(|(_, v)| v.abs_f64())
                    .fold(0.0, f64::max);
                let exact_zero = r.terms().all(|(k, _)| k.total_degree() > checked);
                let pass = checked == order
                    && match C::MODE {
                        Mode::Exact => exact_zero,
                        Mode::Float => max_abs <= tolerance,
                    };
                EquationResidual {
                    id,
                    order: checked,
                    max_abs,
                    pass,
                }
            })
            .collect();
        let pass = equations.iter().all(|e| e.pass);
        ResidualReport {
            equations,
            tolerance,
            pass,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.equations.iter().map(|e| e.max_abs).fold(0.0, f64::max)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.equations.iter().filter(|e| !e.pass).map(|e| e.id.as_str()).collect()
    }
}

/// Isometry residuals of `u` against `g`: `‖∂_n u‖² − g_nn`, `∂_k u·∂_n u − b_k`,
/// `∂_k u·∂_l u − g_kl`, checked to order `K − 1`.
pub fn first_order_residual<C: Scalar>(u: &[Jet<C>], g: &MetricJet<C>, tolerance: f64) -> ResidualReport {
    let n = g.dim();
    let last = n - 1;
    let order = u.iter().map(Jet::order).min().unwrap_or(0).saturating_sub(1);
    let du: Vec<Vec<Jet<C>>> = (0..n)
        .map(|k| u.iter().map(|c| c.differentiate(k)).collect())
        .collect();
    let mut residuals = Vec::new();
    residuals.push(("normal_length".to_string(), &dot(&du[last], &du[last]) - g.g_nn()));
    for k in 0..last {
        residuals.push((
            format!("normal_tangent[{}]", k + 1),
            &dot(&du[k], &du[last]) - g.get(k, last),
        ));
    }
    for (k, l) in tangential_pairs(last) {
        residuals.push((
            format!("tangential[{},{}]", k + 1, l + 1),
            &dot(&du[k], &du[l]) - g.get(k, l),
        ));
    }
    ResidualReport::from_residuals(residuals, order, tolerance)
}

/// The isometry residuals of a solution of the second-order system: zero
/// exactly when the constrained data propagated to a genuine embedding.
pub fn equivalence_check<C: Scalar>(u: &[Jet<C>], g: &MetricJet<C>, tolerance: f64) -> ResidualReport {
    first_order_residual(u, g, tolerance)
}

/// Constraints the Cauchy data must satisfy on `x_n = 0`:
/// `‖u1‖² = g_nn`, `∂_k u0·u1 = b_k`, `∂_k u0·∂_l u0 = g_kl` and
/// `∂_kl u0·u1 = ½(∂_k b_l + ∂_l b_k − ∂_n g_kl)`, checked to `order`.
pub fn constraint_residual<C: Scalar>(
    data: &CauchyData<C>,
    g: &MetricJet<C>,
    order: usize,
    tolerance: f64,
) -> Result<ResidualReport> {
    let n = g.dim();
    let m = n - 1;
    let last = n - 1;
    let restricted = g.restrict_to_hypersurface();
    let half = C::from_ratio(1, 2);
    let du0: Vec<Vec<Jet<C>>> = (0..m)
        .map(|k| data.u0.iter().map(|c| c.differentiate(k)).collect())
        .collect();
    let mut residuals = Vec::new();
    residuals.push((
        "u1_length".to_string(),
        dot(&data.u1, &data.u1).checked_sub(restricted.get(last, last))?,
    ));
    for k in 0..m {
        residuals.push((
            format!("u1_tangent[{}]", k + 1),
            dot(&du0[k], &data.u1).checked_sub(restricted.get(k, last))?,
        ));
    }
    for (k, l) in tangential_pairs(m) {
        residuals.push((
            format!("u0_metric[{},{}]", k + 1, l + 1),
            dot(&du0[k], &du0[l]).checked_sub(restricted.get(k, l))?,
        ));
    }
    for (k, l) in tangential_pairs(m) {
        let gamma = g
            .get(l, last)
            .differentiate(k)
            .checked_add(&g.get(k, last).differentiate(l))?
            .checked_sub(&g.get(k, l).differentiate(last))?
            .restrict_zero(last)
            .scale(&half);
        let du0kl: Vec<Jet<C>> = du0[k].iter().map(|c| c.differentiate(l)).collect();
        residuals.push((
            format!("u1_curvature[{},{}]", k + 1, l + 1),
            dot(&du0kl, &data.u1).checked_sub(&gamma)?,
        ));
    }
    Ok(ResidualReport::from_residuals(residuals, order, tolerance))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankCertificate {
    /// Determinant at the base point.
    pub det_at_base: f64,
    pub pass: bool,
}

/// Determinant of a square frame; passes when it is nonzero at the base point.
pub fn rank_certificate<C: Scalar>(rows: Vec<Vec<Jet<C>>>) -> Result<RankCertificate> {
    let det = JetMatrix::from_rows(rows)?.det()?;
    let c = det.constant_term();
    Ok(RankCertificate {
        det_at_base: c.to_f64(),
        pass: !c.is_zero(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularRankCertificate {
    /// `Δ(0)`, expected zero.
    pub det_at_origin: f64,
    /// Every monomial of `Δ` without `x_1` has zero coefficient.
    pub divisible_by_x1: bool,
    pub delta0_at_origin: f64,
    pub d1_delta_at_origin: f64,
    pub pass: bool,
}

pub fn singular_rank_certificate<C: Scalar>(data: &SingularData<C>) -> SingularRankCertificate {
    let tol = crate::metric::structural_tol::<C>();
    let delta = &data.delta;
    let divisible = delta
        .terms()
        .all(|(k, v)| k.get(0) > 0 || v.abs_f64() <= tol);
    let d0 = data.delta0_at_origin().map_or(0.0, |c| c.to_f64());
    let d1 = data.d1_delta_at_base().to_f64();
    let det0 = delta.constant_term().to_f64();
    SingularRankCertificate {
        det_at_origin: det0,
        divisible_by_x1: divisible,
        delta0_at_origin: d0,
        d1_delta_at_origin: d1,
        pass: divisible && d0.abs() > tol && d1.abs() > tol && det0.abs() <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn normal_direction_curving_is_detected() {
        // u = (x1, x2, x2^2) against the flat metric: ‖∂_2 u‖² − 1 = 4 x2²
        let k = 4;
        let x1 = Jet::<Rational>::var(2, k, 0);
        let x2 = Jet::<Rational>::var(2, k, 1);
        let u = vec![x1, x2.clone(), &x2 * &x2];
        let report = first_order_residual(&u, &MetricJet::flat(2, k), 0.0);
        assert!(!report.pass);
        assert_eq!(report.failing(), vec!["normal_length"]);
        assert_eq!(report.equations[0].max_abs, 4.0);
    }

    #[test]
    fn duplicated_frame_vector_has_zero_determinant() {
        let one = Jet::<Rational>::one(1, 2);
        let x = Jet::<Rational>::var(1, 2, 0);
        let row = vec![one.clone(), x.clone()];
        let cert = rank_certificate(vec![row.clone(), row]).unwrap();
        assert!(!cert.pass);
        assert_eq!(cert.det_at_base, 0.0);
    }
}
