//! Local isometric embedding of a nonsingular metric into `E^{n(n+1)/2}` by
//! induction on the dimension.
//!
//! For `n = 1` the embedding is the arclength `∫ sqrt(g_11)`. For `n ≥ 2` the
//! Cauchy data on `x_n = 0` are `u0 = (v, μQ, 0)` where `Q` collects the
//! quadratics `x_a x_m` (`a < m`) and `x_m²/2` (`m` the last hypersurface
//! variable) and `v` embeds `ḡ − μ² ∂Q·∂Q` one dimension lower. The normal
//! derivative `u1` solves the linear constraints in the span of
//! `{∂_k u0, ∂_kl u0}` and takes the remaining length along their common
//! normal; the second-order system then propagates the data off `x_n = 0`.

use super::system::{tangential_pairs, EmbeddingSystem};
use super::{cartan_janet_dim, cross_product, norm_sq, partial, vec_add, vec_scale, CauchyData, EmbeddingJet};
use crate::ck::{solve_second_order, SecondOrderProblem};
use crate::error::{Error, Result};
use crate::jet::{dot, Jet, JetMatrix};
use crate::metric::{is_positive_definite_at_base, MetricJet};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct CartanJanetOptions<C> {
    /// Initial scale of the quadratic perturbation `μQ`.
    pub mu: C,
    /// Doublings of `μ` tried before giving up.
    pub max_attempts: usize,
}

impl<C: Scalar> Default for CartanJanetOptions<C> {
    fn default() -> Self {
        CartanJanetOptions {
            mu: C::one(),
            max_attempts: 8,
        }
    }
}

/// Metric order needed to embed an `n`-dimensional metric to order `k`.
pub fn cartan_janet_metric_order(n: usize, k: usize) -> usize {
    match n {
        0 | 1 => k.saturating_sub(1),
        _ => k + n - 2,
    }
}

/// Embeds `g` into `E^{n(n+1)/2}` to order `order`.
pub fn embed_cartan_janet<C: Scalar>(
    g: &MetricJet<C>,
    order: usize,
    options: &CartanJanetOptions<C>,
) -> Result<EmbeddingJet<C>> {
    let n = g.dim();
    let need = cartan_janet_metric_order(n, order);
    if g.order() < need {
        return Err(Error::InsufficientOrder {
            what: format!("metric for a {n}-dimensional embedding"),
            have: g.order(),
            need,
        });
    }
    if !is_positive_definite_at_base(g.matrix())? {
        return Err(Error::Numeric("metric is not positive definite at the base point".into()));
    }
    if n == 1 {
        let arclength = g.get(0, 0).truncate(need).sqrt()?.antiderivative(0);
        return Ok(EmbeddingJet::new(vec![arclength.truncate(order)], vec![0.0]));
    }
    let data = build_nonsingular_data(g, order, options)?;
    let system = EmbeddingSystem::new(g, cartan_janet_dim(n), Vec::new())?;
    let problem = SecondOrderProblem {
        nvars: n,
        order,
        u0: data.u0,
        u1: data.u1,
    };
    let u = solve_second_order(&problem, |u| system.build(u))?;
    Ok(EmbeddingJet::new(u, vec![0.0; n]))
}

/// Cauchy data on `x_n = 0` for the Cartan-Janet step; `u0` is known to
/// `order + 1` and `u1` to `order − 1`.
pub fn build_nonsingular_data<C: Scalar>(
    g: &MetricJet<C>,
    order: usize,
    options: &CartanJanetOptions<C>,
) -> Result<CauchyData<C>> {
    let n = g.dim();
    if n < 2 {
        return Err(Error::Dimension("hypersurface data needs n >= 2".into()));
    }
    if order < 2 {
        return Err(Error::InsufficientOrder {
            what: "Cartan-Janet data".into(),
            have: order,
            need: 2,
        });
    }
    let m = n - 1;
    let last = n - 1;
    let restricted = g.restrict_to_hypersurface();
    let gbar = restricted.tangential_block();
    let b0: Vec<Jet<C>> = (0..m).map(|k| restricted.get(k, last).clone()).collect();
    let gnn0 = restricted.get(last, last).clone();
    let half = C::from_ratio(1, 2);
    // Γ_{n,kl} = ½(∂_k b_l + ∂_l b_k − ∂_n g_kl) on x_n = 0
    let gamma: Vec<Jet<C>> = tangential_pairs(m)
        .into_iter()
        .map(|(k, l)| {
            let bl = g.get(l, last).differentiate(k);
            let bk = g.get(k, last).differentiate(l);
            let gkl = g.get(k, l).differentiate(last);
            Ok(bl.checked_add(&bk)?.checked_sub(&gkl)?.restrict_zero(last).scale(&half))
        })
        .collect::<Result<_>>()?;
    let mut rhs = b0;
    rhs.extend(gamma);

    let mut mu = options.mu.clone();
    let mut last_err = None;
    let attempts = options.max_attempts.max(1);
    for attempt in 1..=attempts {
        match nonsingular_attempt(&gbar, &gnn0, &rhs, &mu, order, options) {
            Ok((u0, u1)) => {
                return Ok(CauchyData {
                    u0,
                    u1,
                    scale: mu,
                    attempts: attempt,
                })
            }
            // a non-square radicand does not improve with μ
            Err(e @ Error::NonSquare(_)) => return Err(e),
            Err(e) => last_err = Some(e),
        }
        mu = mu * C::from_i64(2);
    }
    Err(Error::RetryExhausted {
        what: "Cartan-Janet perturbation scale".into(),
        attempts,
        last: Box::new(last_err.expect("at least one attempt")),
    })
}

fn nonsingular_attempt<C: Scalar>(
    gbar: &JetMatrix<C>,
    gnn0: &Jet<C>,
    rhs: &[Jet<C>],
    mu: &C,
    order: usize,
    options: &CartanJanetOptions<C>,
) -> Result<(Vec<Jet<C>>, Vec<Jet<C>>)> {
    let m = gbar.rows();
    let q_order = order + 1;
    let mut q = Vec::with_capacity(m);
    for a in 0..m {
        let mut e = vec![0; m];
        let c = if a + 1 < m {
            e[a] = 1;
            e[m - 1] = 1;
            mu.clone()
        } else {
            e[m - 1] = 2;
            mu.clone() * C::from_ratio(1, 2)
        };
        q.push(Jet::monomial(m, q_order, &e, c));
    }
    let dq: Vec<Vec<Jet<C>>> = (0..m).map(|k| partial(&q, k)).collect();
    let inner = MetricJet::from_fn(m, |j, k| {
        let corr = dot(&dq[j], &dq[k]);
        gbar.get(j, k) - &corr
    })?;
    let v = embed_cartan_janet(&inner, order + 1, options)?;
    let mut u0 = v.components;
    u0.extend(q);
    u0.push(Jet::zero(m, q_order));

    let mut rows: Vec<Vec<Jet<C>>> = (0..m).map(|k| partial(&u0, k)).collect();
    for (k, l) in tangential_pairs(m) {
        let r = partial(&rows[k], l);
        rows.push(r);
    }
    let t = JetMatrix::from_rows(rows.clone())?;
    let gram = t.mul(&t.transpose())?;
    let y = gram.solve(rhs)?;
    let p = t.transpose().mul_vec(&y)?;
    let nu = cross_product(&rows)?;
    let radicand = gnn0.checked_sub(&norm_sq(&p))?.checked_mul(&norm_sq(&nu).reciprocal()?)?;
    if !radicand.constant_term().is_positive() {
        return Err(Error::NegativeRadicand {
            what: "normal length of u1".into(),
            value: radicand.constant_term().to_f64(),
        });
    }
    let lambda = radicand.sqrt()?;
    let u1 = vec_add(&p, &vec_scale(&nu, &lambda)?)?;
    let u1: Vec<Jet<C>> = u1.into_iter().map(|c| c.truncate(order - 1)).collect();
    Ok((u0, u1))
}
