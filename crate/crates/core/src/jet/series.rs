//! Univariate series applied to jets, and elementary generator jets.

use super::{Jet, MultiIndex};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

impl<C: Scalar> Jet<C> {
    /// Evaluates `sum_k coeffs[k] * t^k` for a jet `t` with zero constant term.
    fn apply_series(t: &Jet<C>, coeffs: &[C]) -> Jet<C> {
        debug_assert!(t.constant_term().is_zero());
        let order = t.order;
        let mut acc = Jet::zero(t.nvars, order);
        for c in coeffs.iter().rev() {
            acc = acc.mul_truncated(t, order).add_constant(c);
        }
        acc.truncate(order)
    }

    /// `(self / a0) - 1` where `a0` is the constant term.
    fn normalized_tail(&self, a0: &C) -> Jet<C> {
        let inv = a0.inv().expect("caller checked a unit");
        let mut t = self.scale(&inv);
        t.terms.remove(&MultiIndex::ZERO);
        t
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn reciprocal(&self) -> Result<Jet<C>> {
        let a0 = self.constant_term();
        if a0.is_zero() {
            return Err(Error::NonUnit("reciprocal"));
        }
        let t = self.normalized_tail(&a0);
        let coeffs: Vec<C> = (0..=self.order)
            .map(|k| if k % 2 == 0 { C::one() } else { -C::one() })
            .collect();
        Ok(Jet::apply_series(&t, &coeffs).scale(&a0.inv().expect("unit")))
    }

    pub fn checked_div(&self, other: &Jet<C>) -> Result<Jet<C>> {
        self.checked_mul(&other.reciprocal()?)
    }

    /// Square root with positive constant term.
    ///
    /// Exact mode needs the constant term to be a rational square.
    pub fn sqrt(&self) -> Result<Jet<C>> {
        let a0 = self.constant_term();
        if a0.is_zero() {
            return Err(Error::NonUnit("sqrt"));
        }
        if !a0.is_positive() {
            return Err(Error::NegativeRadicand {
                what: "sqrt".into(),
                value: a0.to_f64(),
            });
        }
        let s0 = a0
            .sqrt()
            .ok_or_else(|| Error::NonSquare(format!("{a0:?}")))?;
        let t = self.normalized_tail(&a0);
        // binomial(1/2, k) via the ratio (1/2 - k) / (k + 1)
        let mut coeffs = Vec::with_capacity(self.order + 1);
        let mut c = C::one();
        for k in 0..=self.order {
            coeffs.push(c.clone());
            let k = k as i64;
            c = c * C::from_ratio(1 - 2 * k, 2 * (k + 1));
        }
        Ok(Jet::apply_series(&t, &coeffs).scale(&s0))
    }
}

/// Taylor coefficients `f^{(k)}(x0) lambda^k / k!` for k = 0..=order, given the
/// derivative cycle of `f` at `x0`.
fn scaled_taylor<C: Scalar>(cycle: &[C], lambda: &C, order: usize) -> Vec<C> {
    let mut out = Vec::with_capacity(order + 1);
    let mut factor = C::one();
    for k in 0..=order {
        out.push(cycle[k % cycle.len()].clone() * factor.clone());
        factor = factor * lambda.clone() / C::from_i64(k as i64 + 1);
    }
    out
}

fn univariate<C: Scalar>(nvars: usize, order: usize, var: usize, coeffs: Vec<C>) -> Jet<C> {
    let mut j = Jet::zero(nvars, order);
    for (k, c) in coeffs.into_iter().enumerate() {
        j.insert(MultiIndex::unit(var).with(var, k as u32), c);
    }
    j
}

fn transcendental_error(what: &str) -> Error {
    Error::Numeric(format!(
        "{what} at a nonzero argument is not rational; use float mode"
    ))
}

/// `sin(lambda * x_var + shift)`.
pub fn sin_jet<C: Scalar>(nvars: usize, order: usize, var: usize, lambda: &C, shift: &C) -> Result<Jet<C>> {
    let (s, c) = shift.sin_cos().ok_or_else(|| transcendental_error("sin"))?;
    let cycle = [s.clone(), c.clone(), -s, -c];
    Ok(univariate(nvars, order, var, scaled_taylor(&cycle, lambda, order)))
}

/// `cos(lambda * x_var + shift)`.
pub fn cos_jet<C: Scalar>(nvars: usize, order: usize, var: usize, lambda: &C, shift: &C) -> Result<Jet<C>> {
    let (s, c) = shift.sin_cos().ok_or_else(|| transcendental_error("cos"))?;
    let cycle = [c.clone(), -s.clone(), -c, s];
    Ok(univariate(nvars, order, var, scaled_taylor(&cycle, lambda, order)))
}

/// `exp(lambda * x_var + shift)`.
pub fn exp_jet<C: Scalar>(nvars: usize, order: usize, var: usize, lambda: &C, shift: &C) -> Result<Jet<C>> {
    let e = shift.exp().ok_or_else(|| transcendental_error("exp"))?;
    Ok(univariate(nvars, order, var, scaled_taylor(&[e], lambda, order)))
}

/// Inverse of a map `f: (R^n, 0) → (R^n, 0)` with invertible linear part.
///
/// Fixed-point iteration `h ↦ A⁻¹(x − N(h))`, where `A` is the linear part and
/// `N = f − A`, gains one degree per step. The result satisfies
/// `f ∘ h = id` to the order of `f`.
pub fn inverse_map<C: Scalar>(f: &[Jet<C>]) -> Result<Vec<Jet<C>>> {
    let n = f.len();
    if n == 0 || f.iter().any(|c| c.nvars() != n) {
        return Err(Error::Dimension("inverse_map needs n components in n variables".into()));
    }
    if let Some(i) = f.iter().position(|c| !c.constant_term().is_zero()) {
        return Err(Error::NonzeroInnerConstant { index: i });
    }
    let order = f.iter().map(Jet::order).min().unwrap_or(0);
    let linear = super::JetMatrix::from_fn(n, n, |i, j| {
        Jet::constant(n, order, f[i].coeff_at(MultiIndex::unit(j)))
    });
    let lu = linear.lu().map_err(|_| Error::NonUnit("linear part of the map is singular"))?;
    let nonlinear: Vec<Jet<C>> = f
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (0..n).fold(c.clone(), |acc, j| {
                &acc - &Jet::var(n, order, j).scale(&linear.get(i, j).constant_term())
            })
        })
        .collect();
    let ids: Vec<Jet<C>> = (0..n).map(|j| Jet::var(n, order, j)).collect();
    let mut h = lu.solve(&ids)?;
    for _ in 1..order {
        let nh = nonlinear
            .iter()
            .map(|c| c.compose(&h))
            .collect::<Result<Vec<_>>>()?;
        let rhs: Vec<Jet<C>> = ids.iter().zip(&nh).map(|(x, v)| x - v).collect();
        h = lu.solve(&rhs)?.into_iter().map(|c| c.truncate(order)).collect();
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn reciprocal_of_one_minus_x_is_geometric() {
        let one_minus_x = Jet::<Rational>::from_terms(1, 5, [(vec![0], r(1, 1)), (vec![1], r(-1, 1))]);
        let inv = one_minus_x.reciprocal().unwrap();
        for k in 0..=5 {
            assert_eq!(inv.coeff(&[k]), r(1, 1));
        }
        assert_eq!(inv.order(), 5);
    }

    #[test]
    fn sqrt_of_one_plus_x_matches_binomial_series() {
        let j = Jet::<Rational>::from_terms(1, 3, [(vec![0], r(4, 1)), (vec![1], r(4, 1))]);
        let s = j.sqrt().unwrap();
        // 2 sqrt(1 + x) = 2 + x - x^2/4 + x^3/8
        assert_eq!(s.coeff(&[0]), r(2, 1));
        assert_eq!(s.coeff(&[1]), r(1, 1));
        assert_eq!(s.coeff(&[2]), r(-1, 4));
        assert_eq!(s.coeff(&[3]), r(1, 8));
        assert!(matches!(Jet::<Rational>::constant(1, 2, r(2, 1)).sqrt(), Err(Error::NonSquare(_))));
    }

    #[test]
    fn inverse_of_a_quadratic_map() {
        // f(x, y) = (x + y², y − x²)
        let x = Jet::<Rational>::var(2, 4, 0);
        let y = Jet::<Rational>::var(2, 4, 1);
        let f = vec![&x + &y.square(), &y - &x.square()];
        let h = inverse_map(&f).unwrap();
        for (i, c) in f.iter().enumerate() {
            let back = c.compose(&h).unwrap();
            assert_eq!(back.truncate(4), Jet::var(2, 4, i));
        }
        let singular = vec![x.square(), y.clone()];
        assert!(inverse_map(&singular).is_err());
    }

    #[test]
    fn generators_match_closed_forms() {
        let s = sin_jet::<f64>(2, 7, 1, &2.0, &0.3).unwrap();
        let c = cos_jet::<f64>(2, 7, 1, &2.0, &0.3).unwrap();
        let e = exp_jet::<f64>(2, 7, 0, &-1.0, &0.5).unwrap();
        let x = 0.01;
        assert!((s.eval(&[0.0, x]) - (2.0 * x + 0.3).sin()).abs() < 1e-15);
        assert!((c.eval(&[0.0, x]) - (2.0 * x + 0.3).cos()).abs() < 1e-15);
        assert!((e.eval(&[x, 0.0]) - (-x + 0.5).exp()).abs() < 1e-15);
        assert!(sin_jet::<Rational>(1, 3, 0, &r(1, 1), &r(1, 2)).is_err());
    }
}
