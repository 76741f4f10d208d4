//! Principal symbol of the second-order embedding system, linearized at the
//! Cauchy data.
//!
//! The symbol is read off the second-order part of the equations
//!
//! ```text
//! F_k  = ∂_k u · ∂_nn u            F_n = ∂_n u · ∂_nn u
//! F_kl = ∂_kl u · ∂_nn u − ∂_kn u · ∂_ln u      F_e = e · ∂_nn u
//! ```
//!
//! by differentiating each equation in every second derivative `∂_ab u_c`
//! (central differences, exact since the equations are quadratic) and
//! weighting with `p_a p_b`. The coefficients are evaluated on
//! `ũ = u0 + x_n u1`; at `p = dx_n` only the `∂_nn` column survives, which is
//! the frame matrix of the data.

use super::symbol::PrincipalSymbol;
use crate::embedding::{tangential_pairs, CauchyData};
use crate::error::{Error, Result};
use crate::jet::{dot, Jet, JetMatrix};
use crate::scalar::{Mode, Scalar};

/// Derivative arrays of `u`: first derivatives by variable, second by pair `a ≤ b`.
struct Derivatives<C> {
    first: Vec<Vec<Jet<C>>>,
    second: Vec<Vec<Jet<C>>>,
}

fn pair_position(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    tangential_pairs(n).iter().position(|&p| p == (a, b)).expect("pair in range")
}

/// Second-order part of the (optionally augmented) embedding equations.
fn principal_part<C: Scalar>(d: &Derivatives<C>, n: usize, extra_rows: &[Vec<C>]) -> Vec<Jet<C>> {
    let m = n - 1;
    let nn = &d.second[pair_position(n, m, m)];
    let mut out = Vec::new();
    for k in 0..m {
        out.push(dot(&d.first[k], nn));
    }
    out.push(dot(&d.first[m], nn));
    for (k, l) in tangential_pairs(m) {
        let kl = &d.second[pair_position(n, k, l)];
        let kn = &d.second[pair_position(n, k, m)];
        let ln = &d.second[pair_position(n, l, m)];
        out.push(&dot(kl, nn) - &dot(kn, ln));
    }
    for e in extra_rows {
        let nvars = nn[0].nvars();
        let order = nn[0].order();
        let e: Vec<Jet<C>> = e.iter().map(|c| Jet::constant(nvars, order, c.clone())).collect();
        out.push(dot(&e, nn));
    }
    out
}

/// The symbol `𝒜_jk(x, p) = Σ_{a≤b} ∂F_j/∂(∂_ab u_k) p_a p_b` with weights
/// `m_k = 2`, `n_j = 0`, as a polynomial in `(x, p)`.
pub fn embedding_symbol<C: Scalar>(data: &CauchyData<C>, extra_rows: &[Vec<C>]) -> Result<PrincipalSymbol<C>> {
    let dim = data.ambient();
    let Some(first) = data.u0.first() else {
        return Err(Error::Dimension("empty Cauchy data".into()));
    };
    let n = first.nvars() + 1;
    let m = n - 1;
    let equations = n + m * n / 2 + extra_rows.len();
    if equations != dim {
        return Err(Error::Dimension(format!("{equations} equations for {dim} unknowns")));
    }
    let last = n - 1;
    let u: Vec<Jet<C>> = data
        .u0
        .iter()
        .zip(&data.u1)
        .map(|(a, b)| a.insert_var(last).checked_add(&b.insert_var(last).mul_var_power(last, 1)))
        .collect::<Result<_>>()?;
    let derivs = Derivatives {
        first: (0..n).map(|a| u.iter().map(|c| c.differentiate(a)).collect()).collect(),
        second: tangential_pairs(n)
            .iter()
            .map(|&(a, b)| u.iter().map(|c| c.differentiate(a).differentiate(b)).collect())
            .collect(),
    };
    let half = C::from_ratio(1, 2);
    let pairs = tangential_pairs(n);
    let lift = |c: &Jet<C>| (0..n).fold(c.clone(), |acc, _| acc.insert_var(acc.nvars()));
    let mut entries: Vec<Vec<Option<Jet<C>>>> = vec![vec![None; dim]; dim];
    for (pi, &(a, b)) in pairs.iter().enumerate() {
        for k in 0..dim {
            let shifted = |sign: i64| {
                let mut d = Derivatives {
                    first: derivs.first.clone(),
                    second: derivs.second.clone(),
                };
                d.second[pi][k] = d.second[pi][k].add_constant(&C::from_i64(sign));
                principal_part(&d, n, extra_rows)
            };
            let plus = shifted(1);
            let minus = shifted(-1);
            for j in 0..dim {
                let coeff = (&plus[j] - &minus[j]).scale(&half);
                if coeff.is_zero() {
                    continue;
                }
                let term = lift(&coeff).mul_var_power(n + a, 1).mul_var_power(n + b, 1);
                entries[j][k] = Some(match entries[j][k].take() {
                    Some(e) => e.checked_add(&term)?,
                    None => term,
                });
            }
        }
    }
    let order = derivs.second[0][0].order() + 2;
    let matrix = JetMatrix::from_fn(dim, dim, |j, k| {
        entries[j][k].take().unwrap_or_else(|| Jet::zero(2 * n, order))
    });
    PrincipalSymbol::system(n, matrix, vec![2; dim], vec![0; dim])
}

/// `det 𝒜(x′, 0, dx_n)` as a jet in the hypersurface coordinates.
pub fn conormal_determinant<C: Scalar>(symbol: &PrincipalSymbol<C>, order: usize) -> Result<Jet<C>> {
    let n = symbol.n();
    let s = Jet::var(n, order + 1, n - 1);
    Ok(symbol.on_surface(&s, &vec![C::zero(); n])?.restrict_zero(n - 1))
}

/// `r` with `a = r·b` coefficientwise up to `order`, if such a nonzero `r` exists.
///
/// Float jets are compared with a relative tolerance of `1e-9`.
pub fn proportionality_factor<C: Scalar>(a: &Jet<C>, b: &Jet<C>, order: usize) -> Option<C> {
    let (a, b) = (a.truncate(order), b.truncate(order));
    if a.order() < order || b.order() < order {
        return None;
    }
    let (key, bv) = b.terms().next()?;
    let r = a.coeff_at(key) / bv.clone();
    if r.is_zero() {
        return None;
    }
    let diff = &a - &b.scale(&r);
    let same = match C::MODE {
        Mode::Exact => diff.is_zero(),
        Mode::Float => diff.max_abs_coeff() <= 1e-9 * a.max_abs_coeff().max(1.0),
    };
    same.then_some(r)
}
