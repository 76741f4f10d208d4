//! Cauchy data for a metric with an admissible singularity at the origin.
//!
//! On the hypersurface `x_n = 0` the data live in `E^{N+n−2}`, `N = n(n+1)/2`:
//!
//! * `V` is a small oscillating perturbation with nondegenerate second
//!   derivatives: `V_a = ε⁵ sin(x_{n−1}/ε⁴) sin(x_a/ε²)` for `a < n − 1` and
//!   `V_{n−1} = −ε⁵ cos(x_{n−1}/ε⁴)`;
//! * `v` embeds `ĝ = ḡ − ∂V·∂V` (Cartan-Janet), `w = (v, V)` and `u0 = (w, 0)`;
//! * the normal field `N` solves `N·∂_j w = 0`, `N·∂_jk w = h_jk`;
//! * `G = sqrt((g_nn(x', 0) − ‖N‖²)/‖x'‖²)` and `u1 = N + Σ_j x_j G e_j`
//!   with `e_j` the appended coordinate directions.
//!
//! The frame determinant `Δ = det(∂_j u0, u1, ∂_jk u0, e_2, …, e_{n−1})`
//! factors as `x_1 Δ_0`.

use nalgebra::DVector;

use super::cartan_janet::{cartan_janet_metric_order, embed_cartan_janet, CartanJanetOptions};
use super::system::tangential_pairs;
use super::{cartan_janet_dim, norm_sq, partial, singular_ambient_dim, unit_vector, vec_add, vec_scale, CauchyData};
use crate::error::{Error, Result};
use crate::jet::{cos_jet, dot, sin_jet, Jet, JetMatrix};
use crate::metric::{is_positive_definite_at_base, structural_tol, AdmissibleMetric, MetricJet};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SingularOptions<C> {
    /// Initial perturbation scale; halved on failure.
    pub eps: C,
    pub max_attempts: usize,
    pub cartan_janet: CartanJanetOptions<C>,
}

impl<C: Scalar> Default for SingularOptions<C> {
    fn default() -> Self {
        SingularOptions {
            eps: C::from_ratio(1, 4),
            max_attempts: 6,
            cartan_janet: CartanJanetOptions::default(),
        }
    }
}

/// Unit normals spanning the second-derivative directions of `w`, and the
/// appended coordinate directions, all at the base point.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FrameData {
    pub normals: Vec<Vec<f64>>,
    pub appended: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SingularData<C> {
    /// `u0` known to `order + 2`, `u1` to `order`.
    pub data: CauchyData<C>,
    pub order: usize,
    /// Base point `x'` of the expansion.
    pub base: Vec<C>,
    pub perturbation: Vec<Jet<C>>,
    pub normal_field: Vec<Jet<C>>,
    pub g_factor: Jet<C>,
    pub delta: Jet<C>,
    /// `Δ / x_1`, only at the origin.
    pub delta0: Option<Jet<C>>,
    pub frame: FrameData,
}

impl<C: Scalar> SingularData<C> {
    pub fn eps(&self) -> &C {
        &self.data.scale
    }

    /// `Δ_0(0)`, equal to `∂_1 Δ(0)`.
    pub fn delta0_at_origin(&self) -> Option<C> {
        self.delta0.as_ref().map(Jet::constant_term)
    }

    pub fn d1_delta_at_base(&self) -> C {
        let mut e = vec![0; self.delta.nvars()];
        e[0] = 1;
        self.delta.coeff(&e)
    }
}

/// Metric order needed to build singular data of order `k` for dimension `n`.
pub fn singular_metric_order(n: usize, k: usize) -> usize {
    (k + 1).max(cartan_janet_metric_order(n - 1, k + 2))
}

/// Builds the data at the origin, halving `ε` until `ĝ` is positive definite,
/// `G`'s radicand is positive and `Δ_0(0) ≠ 0`.
pub fn build_singular_data<C: Scalar>(
    a: &AdmissibleMetric<C>,
    order: usize,
    options: &SingularOptions<C>,
) -> Result<SingularData<C>> {
    let n = a.dim();
    let base = vec![C::zero(); n - 1];
    let mut eps = options.eps.clone();
    let attempts = options.max_attempts.max(1);
    let mut last_err = None;
    for attempt in 1..=attempts {
        match build_singular_data_at(&a.metric, &base, &eps, order, options) {
            Ok(mut d) => {
                d.data.attempts = attempt;
                return Ok(d);
            }
            Err(
                e @ (Error::NonSquare(_)
                | Error::InsufficientOrder { .. }
                | Error::NotDivisible { .. }
                | Error::Dimension(_)),
            ) => return Err(e),
            Err(e) => last_err = Some(e),
        }
        eps = eps * C::from_ratio(1, 2);
    }
    Err(Error::RetryExhausted {
        what: "singular data eps".into(),
        attempts,
        last: Box::new(last_err.expect("at least one attempt")),
    })
}

/// Builds the data about the hypersurface point `base` for a metric already
/// expanded about `(base, 0)`, with a fixed `ε`.
pub fn build_singular_data_at<C: Scalar>(
    g: &MetricJet<C>,
    base: &[C],
    eps: &C,
    order: usize,
    options: &SingularOptions<C>,
) -> Result<SingularData<C>> {
    let n = g.dim();
    if n < 2 {
        return Err(Error::Dimension("singular data needs n >= 2".into()));
    }
    let m = n - 1;
    if base.len() != m {
        return Err(Error::Dimension(format!("base point must have {m} coordinates")));
    }
    let need = singular_metric_order(n, order);
    if g.order() < need {
        return Err(Error::InsufficientOrder {
            what: "metric for singular data".into(),
            have: g.order(),
            need,
        });
    }
    let last = n - 1;
    let ord0 = order + 2;
    let at_origin = base.iter().all(Scalar::is_zero);
    let tol = structural_tol::<C>();

    let restricted = g.restrict_to_hypersurface();
    let gbar = restricted.tangential_block();
    let gnn0 = restricted.get(last, last).clone();
    let minus_half = C::from_ratio(-1, 2);
    let h: Vec<Jet<C>> = tangential_pairs(m)
        .into_iter()
        .map(|(j, k)| g.get(j, k).differentiate(last).restrict_zero(last).scale(&minus_half))
        .collect();

    // ∂V·∂V must reach the order the hypersurface embedding needs; away from
    // the origin ∂V has a constant term, so V needs one order more than that
    let perturbation = perturbation_jets(m, cartan_janet_metric_order(m, ord0).max(ord0) + 1, eps, base)?;
    let dv: Vec<Vec<Jet<C>>> = (0..m).map(|k| partial(&perturbation, k)).collect();
    let ghat = MetricJet::from_fn(m, |j, k| gbar.get(j, k) - &dot(&dv[j], &dv[k]))?;
    if !is_positive_definite_at_base(ghat.matrix())? {
        return Err(Error::Numeric("perturbed metric is not positive definite".into()));
    }
    if ghat.order() < cartan_janet_metric_order(m, ord0) {
        return Err(Error::InsufficientOrder {
            what: "perturbed hypersurface metric".into(),
            have: ghat.order(),
            need: cartan_janet_metric_order(m, ord0),
        });
    }
    let v = embed_cartan_janet(&ghat, ord0, &options.cartan_janet)?;
    let mut w = v.components;
    w.extend(perturbation.iter().cloned());
    let wdim = cartan_janet_dim(n) - 1;
    debug_assert_eq!(w.len(), wdim);
    let ambient = singular_ambient_dim(n);

    // frame rows ∂_j w, ∂_jk w and the linear system for N
    let dw: Vec<Vec<Jet<C>>> = (0..m).map(|k| partial(&w, k)).collect();
    let mut rows = dw.clone();
    for (j, k) in tangential_pairs(m) {
        rows.push(partial(&dw[j], k));
    }
    let t = JetMatrix::from_rows(rows.clone())?;
    let mut rhs: Vec<Jet<C>> = (0..m).map(|_| Jet::zero(m, order)).collect();
    rhs.extend(h.iter().cloned());
    let nw = t.solve(&rhs)?;

    let xs: Vec<Jet<C>> = (0..m)
        .map(|j| Jet::var(m, ord0 + 2, j).add_constant(&base[j]))
        .collect();
    let xsq = norm_sq(&xs);
    let numerator = gnn0.checked_sub(&norm_sq(&nw))?;
    let quotient = if at_origin {
        numerator.divide_with_tolerance(&xsq, tol)?
    } else {
        numerator.checked_mul(&xsq.reciprocal()?)?
    };
    if !quotient.constant_term().is_positive() {
        return Err(Error::NegativeRadicand {
            what: "G".into(),
            value: quotient.constant_term().to_f64(),
        });
    }
    let g_factor = quotient.sqrt()?;

    let zeros = |k: usize| (0..k).map(|_| Jet::zero(m, ord0)).collect::<Vec<_>>();
    let mut normal_field = nw.clone();
    normal_field.extend(zeros(m));
    let mut u0 = w.clone();
    u0.extend(zeros(m));
    let mut u1 = normal_field.clone();
    for (j, xj) in xs.iter().enumerate() {
        let e = unit_vector::<C>(ambient, wdim + j, m, ord0);
        u1 = vec_add(&u1, &vec_scale(&e, &xj.checked_mul(&g_factor)?)?)?;
    }
    let u0: Vec<Jet<C>> = u0.into_iter().map(|c| c.truncate(ord0)).collect();
    let u1: Vec<Jet<C>> = u1.into_iter().map(|c| c.truncate(order)).collect();

    let delta = frame_determinant(&u0, &u1, m, wdim)?;
    let delta0 = if at_origin {
        let x1 = Jet::var(m, delta.order() + 1, 0);
        let d0 = delta.divide_with_tolerance(&x1, tol)?;
        if d0.constant_term().abs_f64() <= tol {
            return Err(Error::Numeric("Δ_0(0) vanishes".into()));
        }
        Some(d0)
    } else {
        None
    };

    let frame = frame_at_base(&rows, m, wdim, ambient);
    Ok(SingularData {
        data: CauchyData {
            u0,
            u1,
            scale: eps.clone(),
            attempts: 1,
        },
        order,
        base: base.to_vec(),
        perturbation,
        normal_field,
        g_factor,
        delta,
        delta0,
        frame,
    })
}

/// `V` expanded about `base` to order `ord`, in `m` variables.
fn perturbation_jets<C: Scalar>(m: usize, ord: usize, eps: &C, base: &[C]) -> Result<Vec<Jet<C>>> {
    let e2 = eps.clone() * eps.clone();
    let e4 = e2.clone() * e2.clone();
    let e5 = e4.clone() * eps.clone();
    let k4 = e4.inv().ok_or_else(|| Error::Numeric("eps must be nonzero".into()))?;
    let k2 = e2.inv().expect("nonzero");
    let top = m - 1;
    let mut v = Vec::with_capacity(m);
    for a in 0..top {
        let s_top = sin_jet(m, ord, top, &k4, &(base[top].clone() * k4.clone()))?;
        let s_a = sin_jet(m, ord, a, &k2, &(base[a].clone() * k2.clone()))?;
        v.push(s_top.checked_mul(&s_a)?.truncate(ord).scale(&e5));
    }
    let c_top = cos_jet(m, ord, top, &k4, &(base[top].clone() * k4.clone()))?;
    v.push(c_top.scale(&-e5));
    Ok(v)
}

/// `det(∂_j u0, u1, ∂_jk u0, e_2, …, e_m)` where `e_j` is ambient direction `wdim + j − 1`.
pub(crate) fn frame_determinant<C: Scalar>(u0: &[Jet<C>], u1: &[Jet<C>], m: usize, wdim: usize) -> Result<Jet<C>> {
    let ambient = u0.len();
    let nvars = u0[0].nvars();
    let order = u1.iter().map(Jet::order).min().unwrap_or(0);
    let first: Vec<Vec<Jet<C>>> = (0..m).map(|k| partial(u0, k)).collect();
    let mut rows = first.clone();
    rows.push(u1.to_vec());
    for (j, k) in tangential_pairs(m) {
        rows.push(partial(&first[j], k));
    }
    for a in 1..m {
        rows.push(unit_vector(ambient, wdim + a, nvars, order));
    }
    JetMatrix::from_rows(rows)?.det()
}

fn frame_at_base<C: Scalar>(rows: &[Vec<Jet<C>>], m: usize, wdim: usize, ambient: usize) -> FrameData {
    let at_base = |r: &Vec<Jet<C>>| DVector::from_iterator(r.len(), r.iter().map(|c| c.constant_term().to_f64()));
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut normals = Vec::new();
    for (idx, r) in rows.iter().enumerate() {
        let mut vec = at_base(r);
        for b in &basis {
            let c = vec.dot(b);
            vec -= b * c;
        }
        let norm = vec.norm();
        if norm < 1e-14 {
            continue;
        }
        vec /= norm;
        if idx >= m {
            let mut full = vec.as_slice().to_vec();
            full.resize(ambient, 0.0);
            normals.push(full);
        }
        basis.push(vec);
    }
    let appended = (0..m)
        .map(|j| {
            let mut e = vec![0.0; ambient];
            e[wdim + j] = 1.0;
            e
        })
        .collect();
    FrameData { normals, appended }
}

/// Sampled bound `|∂_i V · ∂_j V| < C ε²` on the ball `‖x'‖ < ε⁵`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PerturbationEstimate {
    pub eps: f64,
    pub max_abs: f64,
    /// `max_abs / ε²`.
    pub constant: f64,
    pub samples: usize,
}

/// Evaluates `∂_i V · ∂_j V` in closed form on a grid of `per_axis` points per
/// coordinate inside the ball `‖x'‖ < ε⁵` of the hypersurface (dimension `m`).
pub fn perturbation_estimate(m: usize, eps: f64, per_axis: usize) -> PerturbationEstimate {
    let r = eps.powi(5);
    let (e2, e4) = (eps * eps, eps.powi(4));
    let top = m - 1;
    let grad = |x: &[f64]| -> Vec<Vec<f64>> {
        // grad[c][i] = ∂_i V_c
        let mut out = vec![vec![0.0; m]; m];
        let (st, ct) = (x[top] / e4).sin_cos();
        for a in 0..top {
            let (sa, ca) = (x[a] / e2).sin_cos();
            out[a][top] = eps * ct * sa;
            out[a][a] = eps.powi(3) * st * ca;
        }
        out[top][top] = eps * st;
        out
    };
    let axis: Vec<f64> = (0..per_axis.max(2))
        .map(|i| -r + 2.0 * r * i as f64 / (per_axis.max(2) - 1) as f64)
        .collect();
    let mut idx = vec![0usize; m];
    let mut max_abs: f64 = 0.0;
    let mut samples = 0;
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        if x.iter().map(|v| v * v).sum::<f64>() < r * r {
            let gv = grad(&x);
            for i in 0..m {
                for j in 0..m {
                    let s: f64 = (0..m).map(|c| gv[c][i] * gv[c][j]).sum();
                    max_abs = max_abs.max(s.abs());
                }
            }
            samples += 1;
        }
        let mut d = 0;
        while d < m {
            idx[d] += 1;
            if idx[d] < axis.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == m {
            break;
        }
    }
    PerturbationEstimate {
        eps,
        max_abs,
        constant: max_abs / (eps * eps),
        samples,
    }
}
