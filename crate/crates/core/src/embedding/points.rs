//! Solves of the augmented embedding system about hypersurface points away
//! from the singular origin, where the frame determinant is nonzero.

use super::singular::{build_singular_data_at, singular_metric_order, SingularOptions};
use super::system::EmbeddingSystem;
use super::{cartan_janet_dim, singular_ambient_dim, EmbeddingJet};
use crate::ck::{solve_second_order, SecondOrderProblem};
use crate::error::{Error, Result};
use crate::metric::MetricJet;
use crate::par::{par_map, ExecPolicy};
use crate::scalar::Scalar;
use crate::verify::{first_order_residual, tolerance_for, ResidualReport};

#[derive(Clone, Debug)]
pub struct PointSolve {
    /// Hypersurface coordinates `x'` of the base point.
    pub point: Vec<f64>,
    pub embedding: EmbeddingJet<f64>,
    /// Isometry residuals against the metric expanded about `(x', 0)`.
    pub residual: ResidualReport,
    /// Frame determinant `Δ(x')`.
    pub delta: f64,
}

/// Constant rows `e_a`, `a = 2..n−1`, closing the augmented system.
pub fn augmentation_rows<C: Scalar>(n: usize) -> Vec<Vec<C>> {
    let ambient = singular_ambient_dim(n);
    let wdim = cartan_janet_dim(n) - 1;
    (1..n - 1)
        .map(|a| {
            let mut e = vec![C::zero(); ambient];
            e[wdim + a] = C::one();
            e
        })
        .collect()
}

fn solve_one(
    g: &MetricJet<f64>,
    point: &[f64],
    eps: f64,
    order: usize,
    options: &SingularOptions<f64>,
) -> Result<PointSolve> {
    let n = g.dim();
    if point.len() != n - 1 {
        return Err(Error::Dimension(format!("base point must have {} coordinates", n - 1)));
    }
    let mut full = point.to_vec();
    full.push(0.0);
    let local = g.recenter(&full, true)?;
    let data = build_singular_data_at(&local, point, &eps, order, options)?;
    let system = EmbeddingSystem::new(&local, singular_ambient_dim(n), augmentation_rows(n))?;
    let truncated = data.data.truncated(order);
    let problem = SecondOrderProblem {
        nvars: n,
        order,
        u0: truncated.u0,
        u1: truncated.u1,
    };
    let u = solve_second_order(&problem, |u| system.build(u))?;
    let scale = local.matrix().constant_part_f64().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let residual = first_order_residual(&u, &local, tolerance_for::<f64>(scale));
    Ok(PointSolve {
        point: point.to_vec(),
        embedding: EmbeddingJet::new(u, full),
        residual,
        delta: data.delta.constant_term(),
    })
}

/// Builds the singular Cauchy data about each `(x', 0)` and solves the
/// augmented system there. The metric (expanded about the origin) is
/// recentered at each point, so it should be known to well above
/// `singular_metric_order(n, order)`; polynomial metrics are recentered exactly.
///
/// At `x' = 0` the frame determinant vanishes and the result is a
/// characteristic error.
pub fn solve_at_base_points(
    g: &MetricJet<f64>,
    points: &[Vec<f64>],
    eps: f64,
    order: usize,
    options: &SingularOptions<f64>,
    policy: ExecPolicy,
) -> Vec<Result<PointSolve>> {
    let n = g.dim();
    if g.order() < singular_metric_order(n, order) {
        let err = Error::InsufficientOrder {
            what: "metric for base-point solves".into(),
            have: g.order(),
            need: singular_metric_order(n, order),
        };
        return points.iter().map(|_| Err(err.clone())).collect();
    }
    par_map(policy, points, |p| solve_one(g, p, eps, order, options))
}
