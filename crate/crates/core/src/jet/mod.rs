//! Sparse multivariate truncated power series ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a function at a base point up
//! to a total degree called its *order*: every coefficient of degree at most
//! `order` is known (absent entries are zero), nothing beyond it is.
//!
//! Multiplication tracks valuations, so `x * x` at order 2 is known to order
//! 3. Sums are known to the smaller of the two orders.

mod matrix;
mod multi_index;
mod series;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub use matrix::{JetLu, JetMatrix};
pub use multi_index::{MultiIndex, MAX_EXPONENT, MAX_VARS};
pub use series::{cos_jet, exp_jet, inverse_map, sin_jet};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct Jet<C> {
    nvars: usize,
    order: usize,
    terms: BTreeMap<MultiIndex, C>,
}

impl<C: Scalar> Jet<C> {
    pub fn zero(nvars: usize, order: usize) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables");
        Jet {
            nvars,
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, order: usize, value: C) -> Self {
        let mut j = Jet::zero(nvars, order);
        j.insert(MultiIndex::ZERO, value);
        j
    }

    pub fn one(nvars: usize, order: usize) -> Self {
        Jet::constant(nvars, order, C::one())
    }

    /// The coordinate function `x_var`.
    pub fn var(nvars: usize, order: usize, var: usize) -> Self {
        assert!(var < nvars, "variable {var} out of range for {nvars} variables");
        let mut j = Jet::zero(nvars, order);
        j.insert(MultiIndex::unit(var), C::one());
        j
    }

    pub fn monomial(nvars: usize, order: usize, exponents: &[u32], coeff: C) -> Self {
        assert_eq!(exponents.len(), nvars);
        let mut j = Jet::zero(nvars, order);
        j.insert(MultiIndex::new(exponents), coeff);
        j
    }

    /// Builds a jet from `(exponents, coefficient)` pairs, summing duplicates.
    pub fn from_terms<I>(nvars: usize, order: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, C)>,
    {
        let mut j = Jet::zero(nvars, order);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars);
            j.accumulate(MultiIndex::new(&e), c);
        }
        j
    }

    pub(crate) fn from_map(nvars: usize, order: usize, terms: BTreeMap<MultiIndex, C>) -> Self {
        let mut j = Jet {
            nvars,
            order,
            terms,
        };
        j.terms.retain(|k, v| k.total_degree() <= order && !v.is_zero());
        j
    }

    #[inline]
    fn insert(&mut self, key: MultiIndex, value: C) {
        if key.total_degree() <= self.order && !value.is_zero() {
            self.terms.insert(key, value);
        } else {
            self.terms.remove(&key);
        }
    }

    #[inline]
    fn accumulate(&mut self, key: MultiIndex, value: C) {
        if key.total_degree() > self.order || value.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(c) => {
                let sum = c.clone() + value;
                if sum.is_zero() {
                    self.terms.remove(&key);
                } else {
                    *c = sum;
                }
            }
            None => {
                self.terms.insert(key, value);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, &C)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exponents: &[u32]) -> C {
        self.coeff_at(MultiIndex::new(exponents))
    }

    pub fn coeff_at(&self, key: MultiIndex) -> C {
        self.terms.get(&key).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coeff_at(MultiIndex::ZERO)
    }

    /// Lowest total degree carrying a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.terms.keys().next().map(|k| k.total_degree())
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().next_back().map(|k| k.total_degree())
    }

    /// Lowest-degree nonzero term, formatted for diagnostics.
    pub fn leading_term(&self) -> String {
        match self.terms.iter().next() {
            Some((k, v)) => format!("{:?}*x^{:?}", v, k),
            None => "0".to_string(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }

    /// Drops every term above degree `order` and lowers the order accordingly.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Jet::from_map(self.nvars, order, self.terms.clone())
    }

    pub fn map<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Jet<D> {
        Jet::from_map(
            self.nvars,
            self.order,
            self.terms.iter().map(|(k, v)| (*k, f(v))).collect(),
        )
    }

    pub fn to_f64(&self) -> Jet<f64> {
        self.map(|c| c.to_f64())
    }

    fn check_context(&self, other: &Self, op: &str) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::Context(format!(
                "{op}: {} vs {} variables",
                self.nvars, other.nvars
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_context(other, "add")?;
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        for (k, v) in &other.terms {
            out.accumulate(*k, v.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_context(other, "sub")?;
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        for (k, v) in &other.terms {
            out.accumulate(*k, -v.clone());
        }
        Ok(out)
    }

    /// Order to which the product of `self` and `other` is known.
    fn product_order(&self, other: &Self) -> usize {
        match (self.valuation(), other.valuation()) {
            (Some(va), Some(vb)) => (self.order + vb).min(other.order + va),
            (None, Some(vb)) => self.order + vb,
            (Some(va), None) => other.order + va,
            (None, None) => self.order + other.order + 1,
        }
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_context(other, "mul")?;
        let order = self.product_order(other);
        Ok(self.mul_truncated(other, order))
    }

    /// Product truncated at `order` (never beyond what is known).
    pub fn mul_truncated(&self, other: &Self, order: usize) -> Self {
        let order = order.min(self.product_order(other));
        let mut out = Jet::zero(self.nvars, order);
        for (ka, va) in &self.terms {
            let da = ka.total_degree();
            if da > order {
                break;
            }
            for (kb, vb) in &other.terms {
                if da + kb.total_degree() > order {
                    break;
                }
                out.accumulate(ka.add(*kb), va.clone() * vb.clone());
            }
        }
        out
    }

    pub fn scale(&self, factor: &C) -> Self {
        if factor.is_zero() {
            return Jet::zero(self.nvars, self.order);
        }
        Jet::from_map(
            self.nvars,
            self.order,
            self.terms
                .iter()
                .map(|(k, v)| (*k, v.clone() * factor.clone()))
                .collect(),
        )
    }

    pub fn add_constant(&self, c: &C) -> Self {
        let mut out = self.clone();
        out.accumulate(MultiIndex::ZERO, c.clone());
        out
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, exponent: u32) -> Self {
        let mut out = Jet::one(self.nvars, self.order);
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }

    /// Formal partial derivative; the order drops by one.
    pub fn differentiate(&self, var: usize) -> Self {
        assert!(var < self.nvars, "variable {var} out of range");
        if self.order == 0 {
            return Jet::zero(self.nvars, 0);
        }
        let mut out = Jet::zero(self.nvars, self.order - 1);
        for (k, v) in &self.terms {
            let e = k.get(var);
            if e > 0 {
                out.insert(k.with(var, e - 1), v.clone() * C::from_i64(e as i64));
            }
        }
        out
    }

    /// Antiderivative along `var` vanishing on `x_var = 0`; the order rises by one.
    pub fn antiderivative(&self, var: usize) -> Self {
        assert!(var < self.nvars, "variable {var} out of range");
        let mut out = Jet::zero(self.nvars, self.order + 1);
        for (k, v) in &self.terms {
            let e = k.get(var) + 1;
            let c = v.clone() / C::from_i64(e as i64);
            out.insert(k.with(var, e), c);
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.differentiate(i)).collect()
    }

    pub fn eval(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.nvars);
        let mut powers: Vec<Vec<C>> = Vec::with_capacity(self.nvars);
        let max = self.order;
        for x in point {
            let mut p = vec![C::one()];
            for i in 1..=max {
                let next = p[i - 1].clone() * x.clone();
                p.push(next);
            }
            powers.push(p);
        }
        let mut acc = C::zero();
        for (k, v) in &self.terms {
            let mut t = v.clone();
            for (i, pw) in powers.iter().enumerate() {
                let e = k.get(i) as usize;
                if e > 0 {
                    t = t * pw[e].clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Coefficient of `x_var^power`, as a jet in the remaining variables.
    pub fn slice(&self, var: usize, power: u32) -> Self {
        let order = self.order.saturating_sub(power as usize);
        let mut out = Jet::zero(self.nvars - 1, order);
        for (k, v) in &self.terms {
            if k.get(var) == power {
                out.insert(k.remove_var(var, self.nvars), v.clone());
            }
        }
        if (power as usize) > self.order {
            out.terms.clear();
        }
        out
    }

    /// Restriction to the hyperplane `x_var = 0`.
    pub fn restrict_zero(&self, var: usize) -> Self {
        self.slice(var, 0)
    }

    /// Adds an independent variable at position `var` that the jet does not depend on.
    pub fn insert_var(&self, var: usize) -> Self {
        assert!(var <= self.nvars);
        Jet::from_map(
            self.nvars + 1,
            self.order,
            self.terms
                .iter()
                .map(|(k, v)| (k.insert_var(var, self.nvars), v.clone()))
                .collect(),
        )
    }

    /// Multiplies by `x_var^power` (exact; the order rises by `power`).
    pub fn mul_var_power(&self, var: usize, power: u32) -> Self {
        let shift = MultiIndex::new(&{
            let mut e = vec![0; self.nvars];
            e[var] = power;
            e
        });
        Jet::from_map(
            self.nvars,
            self.order + power as usize,
            self.terms.iter().map(|(k, v)| (k.add(shift), v.clone())).collect(),
        )
    }

    /// Reorders variables: variable `i` of `self` becomes variable `perm[i]`.
    pub fn permute_vars(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.nvars);
        Jet::from_map(
            self.nvars,
            self.order,
            self.terms
                .iter()
                .map(|(k, v)| {
                    let mut e = vec![0; self.nvars];
                    for (i, &p) in perm.iter().enumerate() {
                        e[p] = k.get(i);
                    }
                    (MultiIndex::new(&e), v.clone())
                })
                .collect(),
        )
    }

    /// Substitutes the constant `value` for `x_var`, removing the variable.
    ///
    /// Exact only when the jet is polynomial in `x_var` (e.g. a symbol in the
    /// fiber variables); the order is kept as is.
    pub fn substitute_var(&self, var: usize, value: &C) -> Self {
        let mut out = Jet::zero(self.nvars - 1, self.order);
        for (k, v) in &self.terms {
            let e = k.get(var);
            let mut c = v.clone();
            for _ in 0..e {
                c = c * value.clone();
            }
            out.accumulate(k.remove_var(var, self.nvars), c);
        }
        out
    }

    /// Treats `self` as a polynomial and substitutes jets for its variables.
    ///
    /// The result is known to the smallest order among `inners`; no constant
    /// term condition is imposed.
    pub fn substitute(&self, inners: &[Jet<C>]) -> Result<Jet<C>> {
        if inners.len() != self.nvars {
            return Err(Error::Dimension(format!(
                "substitute: {} inner jets for {} variables",
                inners.len(),
                self.nvars
            )));
        }
        let Some(first) = inners.first() else {
            return Err(Error::Dimension("substitute: no inner jets".into()));
        };
        let nv = first.nvars;
        if let Some(bad) = inners.iter().find(|j| j.nvars != nv) {
            return Err(Error::Context(format!(
                "substitute: inner jets over {} and {} variables",
                nv, bad.nvars
            )));
        }
        let order = inners.iter().map(|j| j.order).min().unwrap_or(0);
        Ok(self.substitute_truncated(inners, order))
    }

    fn substitute_truncated(&self, inners: &[Jet<C>], order: usize) -> Jet<C> {
        let nv = inners[0].nvars;
        let mut max_exp = vec![0u32; self.nvars];
        for k in self.terms.keys() {
            for (i, m) in max_exp.iter_mut().enumerate() {
                *m = (*m).max(k.get(i));
            }
        }
        let powers: Vec<Vec<Jet<C>>> = inners
            .iter()
            .zip(&max_exp)
            .map(|(inner, &m)| {
                let inner = inner.truncate(order);
                let mut p = vec![Jet::one(nv, order)];
                for e in 1..=m as usize {
                    let next = p[e - 1].mul_truncated(&inner, order);
                    p.push(next);
                }
                p
            })
            .collect();
        let mut acc: BTreeMap<MultiIndex, C> = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut prod: Option<Jet<C>> = None;
            for (i, pw) in powers.iter().enumerate() {
                let e = k.get(i) as usize;
                if e == 0 {
                    continue;
                }
                prod = Some(match prod {
                    None => pw[e].clone(),
                    Some(p) => p.mul_truncated(&pw[e], order),
                });
            }
            match prod {
                None => add_into(&mut acc, MultiIndex::ZERO, c.clone()),
                Some(p) => {
                    for (kk, vv) in p.terms {
                        add_into(&mut acc, kk, vv * c.clone());
                    }
                }
            }
        }
        Jet::from_map(nv, order, acc)
    }

    /// Taylor composition `self(inners(x))` at the base point.
    ///
    /// Every inner jet must have a zero constant term.
    pub fn compose(&self, inners: &[Jet<C>]) -> Result<Jet<C>> {
        for (i, inner) in inners.iter().enumerate() {
            if !inner.constant_term().is_zero() {
                return Err(Error::NonzeroInnerConstant { index: i });
            }
        }
        let composed = self.substitute(inners)?;
        let vmin = inners.iter().filter_map(|j| j.valuation()).min();
        let order = match vmin {
            Some(v) => ((self.order + 1) * v - 1).min(composed.order),
            None => composed.order,
        };
        Ok(composed.truncate(order))
    }

    /// Re-expands the jet about `base` (coordinates relative to the current base point).
    ///
    /// In exact mode a jet whose highest stored degree reaches its order may
    /// have a tail that recentering would silently drop; this is refused unless
    /// `accept_truncation` is set.
    pub fn recenter(&self, base: &[C], accept_truncation: bool) -> Result<Jet<C>> {
        if base.len() != self.nvars {
            return Err(Error::Dimension(format!(
                "recenter: base point has {} coordinates, jet has {} variables",
                base.len(),
                self.nvars
            )));
        }
        if base.iter().all(|b| b.is_zero()) {
            return Ok(self.clone());
        }
        if C::MODE == crate::scalar::Mode::Exact
            && !accept_truncation
            && self.max_degree() == Some(self.order)
            && self.order > 0
        {
            return Err(Error::RecenterTruncation);
        }
        let mut acc: BTreeMap<MultiIndex, C> = BTreeMap::new();
        for (k, c) in &self.terms {
            let alpha = k.exponents(self.nvars);
            // expand prod_i (y_i + b_i)^{alpha_i}
            let mut partial: Vec<(Vec<u32>, C)> = vec![(Vec::new(), c.clone())];
            for (i, &a) in alpha.iter().enumerate() {
                let mut next = Vec::new();
                for (e, coeff) in &partial {
                    for beta in 0..=a {
                        let mut cc = coeff.clone() * C::from_i64(binomial(a, beta) as i64);
                        for _ in 0..(a - beta) {
                            cc = cc * base[i].clone();
                        }
                        if cc.is_zero() {
                            continue;
                        }
                        let mut ee = e.clone();
                        ee.push(beta);
                        next.push((ee, cc));
                    }
                }
                partial = next;
            }
            for (e, cc) in partial {
                let key = MultiIndex::new(&e);
                if key.total_degree() <= self.order {
                    add_into(&mut acc, key, cc);
                }
            }
        }
        Ok(Jet::from_map(self.nvars, self.order, acc))
    }

    /// Exact quotient `self / divisor` for a divisor vanishing at the base point.
    ///
    /// The divisor's lowest homogeneous part (degree `d`) drives a degree-by-degree
    /// division; the quotient is known to `order - d`. Any nonzero remainder
    /// within the known range is reported as [`Error::NotDivisible`].
    pub fn divide_exact(&self, divisor: &Jet<C>) -> Result<Jet<C>> {
        self.divide_with_tolerance(divisor, 0.0)
    }

    /// [`Jet::divide_exact`] that discards remainder coefficients of magnitude
    /// at most `tol` (for float jets carrying rounding noise).
    pub fn divide_with_tolerance(&self, divisor: &Jet<C>, tol: f64) -> Result<Jet<C>> {
        self.check_context(divisor, "divide")?;
        let Some(d) = divisor.valuation() else {
            return Err(Error::NotDivisible {
                divisor: "0".into(),
                degree: 0,
            });
        };
        let order = self.order.min(divisor.order);
        if order < d {
            return Ok(Jet::zero(self.nvars, 0));
        }
        let q_order = order - d;
        let low: Vec<(MultiIndex, C)> = divisor
            .terms
            .iter()
            .filter(|(k, _)| k.total_degree() == d)
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        // lexicographic leading monomial of the lowest part
        let (lead_key, lead_coeff) = low
            .iter()
            .max_by_key(|(k, _)| k.lex_key())
            .cloned()
            .expect("nonempty lowest part");
        let lead_inv = lead_coeff.inv().expect("nonzero coefficient");
        let mut rem = self.truncate(order).terms;
        let mut quotient: BTreeMap<MultiIndex, C> = BTreeMap::new();
        rem.retain(|k, v| k.total_degree() >= d || v.abs_f64() > tol);
        if let Some((k, _)) = rem.iter().next() {
            if k.total_degree() < d {
                return Err(Error::NotDivisible {
                    divisor: divisor.leading_term(),
                    degree: k.total_degree(),
                });
            }
        }
        for deg in d..=order {
            loop {
                let lead = rem
                    .iter()
                    .filter(|(k, _)| k.total_degree() == deg)
                    .max_by_key(|(k, _)| k.lex_key())
                    .map(|(k, v)| (*k, v.clone()));
                let Some((k, v)) = lead else { break };
                let Some(t) = monomial_quotient(k, lead_key, self.nvars) else {
                    if v.abs_f64() <= tol {
                        rem.remove(&k);
                        continue;
                    }
                    return Err(Error::NotDivisible {
                        divisor: divisor.leading_term(),
                        degree: deg,
                    });
                };
                let tc = v * lead_inv.clone();
                for (dk, dv) in &divisor.terms {
                    let key = t.add(*dk);
                    if key.total_degree() > order {
                        continue;
                    }
                    add_into(&mut rem, key, -(tc.clone() * dv.clone()));
                }
                add_into(&mut quotient, t, tc);
            }
        }
        Ok(Jet::from_map(self.nvars, q_order, quotient))
    }
}

fn monomial_quotient(num: MultiIndex, den: MultiIndex, nvars: usize) -> Option<MultiIndex> {
    let mut e = Vec::with_capacity(nvars);
    for i in 0..nvars {
        let (a, b) = (num.get(i), den.get(i));
        if a < b {
            return None;
        }
        e.push(a - b);
    }
    Some(MultiIndex::new(&e))
}

pub(crate) fn add_into<C: Scalar>(map: &mut BTreeMap<MultiIndex, C>, key: MultiIndex, value: C) {
    if value.is_zero() {
        return;
    }
    match map.get_mut(&key) {
        Some(c) => {
            let sum = c.clone() + value;
            if sum.is_zero() {
                map.remove(&key);
            } else {
                *c = sum;
            }
        }
        None => {
            map.insert(key, value);
        }
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r * (n - i) as u64 / (i + 1) as u64;
    }
    r
}

impl<C: fmt::Debug> fmt::Debug for Jet<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet[{} vars, order {}]{{", self.nvars, self.order)?;
        for (i, (k, v)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{:?}: {:?}", k, v)?;
        }
        f.write_str("}")
    }
}

// Operators panic on context mismatch; use the `checked_*` methods for fallible arithmetic.

impl<C: Scalar> Add for &Jet<C> {
    type Output = Jet<C>;
    fn add(self, rhs: &Jet<C>) -> Jet<C> {
        self.checked_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<C: Scalar> Sub for &Jet<C> {
    type Output = Jet<C>;
    fn sub(self, rhs: &Jet<C>) -> Jet<C> {
        self.checked_sub(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<C: Scalar> Mul for &Jet<C> {
    type Output = Jet<C>;
    fn mul(self, rhs: &Jet<C>) -> Jet<C> {
        self.checked_mul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<C: Scalar> Neg for &Jet<C> {
    type Output = Jet<C>;
    fn neg(self) -> Jet<C> {
        self.scale(&-C::one())
    }
}

impl<C: Scalar> Add for Jet<C> {
    type Output = Jet<C>;
    fn add(self, rhs: Jet<C>) -> Jet<C> {
        &self + &rhs
    }
}

impl<C: Scalar> Sub for Jet<C> {
    type Output = Jet<C>;
    fn sub(self, rhs: Jet<C>) -> Jet<C> {
        &self - &rhs
    }
}

impl<C: Scalar> Mul for Jet<C> {
    type Output = Jet<C>;
    fn mul(self, rhs: Jet<C>) -> Jet<C> {
        &self * &rhs
    }
}

impl<C: Scalar> Neg for Jet<C> {
    type Output = Jet<C>;
    fn neg(self) -> Jet<C> {
        -&self
    }
}

/// Dot product of two equally long vectors of jets.
pub fn dot<C: Scalar>(a: &[Jet<C>], b: &[Jet<C>]) -> Jet<C> {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    let mut it = a.iter().zip(b);
    let (x, y) = it.next().expect("dot of empty vectors");
    let mut acc = x * y;
    for (x, y) in it {
        acc = &acc + &(x * y);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn x(nvars: usize, order: usize, var: usize) -> Jet<Rational> {
        Jet::var(nvars, order, var)
    }

    #[test]
    fn difference_of_squares() {
        let one = Jet::<Rational>::one(1, 2);
        let p = (&one + &x(1, 2, 0)) * (&one - &x(1, 2, 0));
        assert_eq!(p, Jet::from_terms(1, 2, [(vec![0], q(1, 1)), (vec![2], q(-1, 1))]));
    }

    #[test]
    fn multinomial_square() {
        let s = &(&x(3, 2, 0) + &x(3, 2, 1)) + &x(3, 2, 2);
        let sq = s.square();
        for i in 0..3 {
            for j in i..3 {
                let mut e = vec![0; 3];
                e[i] += 1;
                e[j] += 1;
                assert_eq!(sq.coeff(&e), q(if i == j { 1 } else { 2 }, 1));
            }
        }
        assert_eq!(sq.num_terms(), 6);
    }

    #[test]
    fn products_know_their_valuation() {
        let a = x(2, 2, 0);
        assert_eq!((&a * &a).order(), 3);
        assert_eq!((&a + &Jet::one(2, 5)).order(), 2);
    }

    #[test]
    fn derivatives() {
        let j = Jet::monomial(2, 3, &[2, 1], q(1, 1));
        assert_eq!(j.differentiate(0), Jet::monomial(2, 2, &[1, 1], q(2, 1)));
        assert!(x(2, 3, 0).differentiate(1).is_zero());
        assert_eq!(Jet::<Rational>::one(1, 0).differentiate(0).order(), 0);
        let f = Jet::from_terms(2, 4, [(vec![1, 0], q(3, 1)), (vec![2, 2], q(-1, 5))]);
        assert_eq!(f.antiderivative(1).differentiate(1), f);
    }

    #[test]
    fn composition() {
        let outer = Jet::monomial(1, 3, &[2], q(1, 1));
        let inner = &x(2, 3, 0) + &x(2, 3, 1);
        let c = outer.compose(&[inner]).unwrap();
        assert_eq!(c, Jet::from_terms(2, 3, [(vec![2, 0], q(1, 1)), (vec![1, 1], q(2, 1)), (vec![0, 2], q(1, 1))]));
        let outer = Jet::from_terms(2, 4, [(vec![1, 2], q(1, 1)), (vec![3, 0], q(-2, 1))]);
        assert_eq!(outer.compose(&[x(2, 4, 0), x(2, 4, 1)]).unwrap(), outer);
        let err = outer.compose(&[x(2, 4, 0).add_constant(&q(1, 1)), x(2, 4, 1)]).unwrap_err();
        assert!(matches!(err, Error::NonzeroInnerConstant { index: 0 }));
    }

    #[test]
    fn exp_of_log_is_the_identity_shift() {
        let k = 5;
        let exp = crate::jet::exp_jet::<Rational>(1, k, 0, &q(1, 1), &q(0, 1)).unwrap();
        let log1p = Jet::from_terms(1, k, (1..=k as i64).map(|i| (vec![i as u32], q(if i % 2 == 1 { 1 } else { -1 }, i))));
        let c = exp.compose(&[log1p]).unwrap();
        assert_eq!(c, Jet::from_terms(1, k, [(vec![0], q(1, 1)), (vec![1], q(1, 1))]));
    }

    #[test]
    fn recentering() {
        let sq = Jet::monomial(1, 3, &[2], q(1, 1));
        let shifted = sq.recenter(&[q(1, 1)], false).unwrap();
        assert_eq!(shifted, Jet::from_terms(1, 3, [(vec![0], q(1, 1)), (vec![1], q(2, 1)), (vec![2], q(1, 1))]));
        let c = Jet::constant(2, 2, q(7, 3));
        assert_eq!(c.recenter(&[q(1, 1), q(-4, 1)], false).unwrap(), c);
        let k = 6;
        let exp = crate::jet::exp_jet::<f64>(1, k + 30, 0, &1.0, &0.0).unwrap();
        let at1 = exp.recenter(&[1.0], true).unwrap();
        let mut fact = 1.0;
        for i in 0..=k {
            if i > 0 {
                fact *= i as f64;
            }
            assert!((at1.coeff(&[i as u32]) - std::f64::consts::E / fact).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_division_and_remainders() {
        let x1 = x(2, 4, 0);
        let f = &(&x1 * &x(2, 4, 1)) + &x1.pow(3);
        assert_eq!(f.divide_exact(&x1).unwrap(), &x(2, 3, 1) + &x(2, 3, 0).pow(2));
        let g = &f + &x(2, 4, 1).pow(2);
        assert!(matches!(g.divide_exact(&x1), Err(Error::NotDivisible { .. })));
    }

    #[test]
    fn permutation_and_substitution() {
        let j = Jet::monomial(3, 4, &[1, 2, 0], q(1, 1));
        assert_eq!(j.permute_vars(&[2, 0, 1]), Jet::monomial(3, 4, &[2, 0, 1], q(1, 1)));
        assert_eq!(j.substitute_var(1, &q(3, 1)), Jet::monomial(2, 4, &[1, 0], q(9, 1)));
        assert_eq!(j.slice(1, 2), Jet::monomial(2, 2, &[1, 0], q(1, 1)));
    }
}
