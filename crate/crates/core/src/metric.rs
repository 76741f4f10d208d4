//! Riemannian metrics as symmetric matrices of jets, admissibility of an
//! isolated singularity, and the coordinate change removing the cross terms
//! `g_jn`.
//!
//! Index conventions: the last coordinate `x_n` is variable `n - 1`; the
//! tangential block is `g_jk` for `j, k < n - 1`; the cross terms are
//! `b_j = g_{j,n-1}`.

use nalgebra::{DMatrix, DVector};

use crate::ck::{solve_first_order, FirstOrderProblem};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetMatrix};
use crate::scalar::{Mode, Scalar};

/// Coefficient tolerance for structural zero tests in float mode.
pub const FLOAT_STRUCTURE_TOL: f64 = 1e-10;

pub(crate) fn structural_tol<C: Scalar>() -> f64 {
    match C::MODE {
        Mode::Exact => 0.0,
        Mode::Float => FLOAT_STRUCTURE_TOL,
    }
}

/// True when every stored coefficient of degree `<= max_degree` is within `tol` of zero.
pub(crate) fn vanishes_to<C: Scalar>(j: &Jet<C>, max_degree: usize, tol: f64) -> bool {
    j.terms()
        .all(|(k, v)| k.total_degree() > max_degree || v.abs_f64() <= tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet<C> {
    g: JetMatrix<C>,
}

impl<C: Scalar> MetricJet<C> {
    /// Checks squareness, exact symmetry and that entries live in `n` variables.
    pub fn new(g: JetMatrix<C>) -> Result<Self> {
        let n = g.rows();
        if n == 0 || g.cols() != n {
            return Err(Error::Dimension(format!("metric must be square, got {}x{}", g.rows(), g.cols())));
        }
        for i in 0..n {
            for j in 0..n {
                if g.get(i, j).nvars() != n {
                    return Err(Error::Dimension(format!(
                        "metric entry ({}, {}) has {} variables, expected {n}",
                        i + 1,
                        j + 1,
                        g.get(i, j).nvars()
                    )));
                }
                if j > i && g.get(i, j) != g.get(j, i) {
                    return Err(Error::Schema(format!("metric is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(MetricJet { g })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Jet<C>) -> Result<Self> {
        MetricJet::new(JetMatrix::from_fn(n, n, |i, j| if i <= j { f(i, j) } else { f(j, i) }))
    }

    /// Euclidean metric `δ_ij`.
    pub fn flat(n: usize, order: usize) -> Self {
        MetricJet {
            g: JetMatrix::identity(n, n, order),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.rows()
    }

    pub fn order(&self) -> usize {
        (0..self.dim())
            .flat_map(|i| (0..self.dim()).map(move |j| (i, j)))
            .map(|(i, j)| self.g.get(i, j).order())
            .min()
            .unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet<C> {
        self.g.get(i, j)
    }

    pub fn matrix(&self) -> &JetMatrix<C> {
        &self.g
    }

    pub fn g_nn(&self) -> &Jet<C> {
        let n = self.dim();
        self.g.get(n - 1, n - 1)
    }

    /// Cross terms `b_j = g_{j n}`, `j < n - 1`.
    pub fn cross_terms(&self) -> Vec<Jet<C>> {
        let n = self.dim();
        (0..n - 1).map(|j| self.g.get(j, n - 1).clone()).collect()
    }

    /// Tangential block `(g_jk)`, `j, k < n - 1`.
    pub fn tangential(&self) -> JetMatrix<C> {
        let m = self.dim() - 1;
        JetMatrix::from_fn(m, m, |i, j| self.g.get(i, j).clone())
    }

    pub fn map(&self, f: impl Fn(&Jet<C>) -> Jet<C>) -> Self {
        MetricJet { g: self.g.map(f) }
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|j| j.truncate(order))
    }

    pub fn to_f64(&self) -> MetricJet<f64> {
        MetricJet {
            g: JetMatrix::from_fn(self.dim(), self.dim(), |i, j| self.g.get(i, j).to_f64()),
        }
    }

    pub fn recenter(&self, base: &[C], accept_truncation: bool) -> Result<Self> {
        Ok(MetricJet {
            g: self.g.try_map(|j| j.recenter(base, accept_truncation))?,
        })
    }

    /// Restriction of every component to `x_n = 0`.
    pub fn restrict_to_hypersurface(&self) -> JetMatrix<C> {
        let last = self.dim() - 1;
        self.g.map(|j| j.restrict_zero(last))
    }

    /// True when the cross terms vanish to the metric's order (within the float tolerance).
    pub fn is_normal_form(&self) -> bool {
        let tol = structural_tol::<C>();
        self.cross_terms().iter().all(|b| vanishes_to(b, usize::MAX, tol))
    }

    /// Pullback `φ*g` with components `Σ g_γδ(φ) ∂_α φ_γ ∂_β φ_δ`.
    ///
    /// `phi` must fix the base point (zero constant terms).
    pub fn pullback(&self, phi: &[Jet<C>]) -> Result<Self> {
        let n = self.dim();
        if phi.len() != n {
            return Err(Error::Dimension(format!("pullback by a map with {} components into {n} dims", phi.len())));
        }
        let composed = self.g.try_map(|e| e.compose(phi))?;
        let jac: Vec<Vec<Jet<C>>> = phi.iter().map(|p| p.gradient()).collect();
        // t[γ][β] = Σ_δ g_γδ(φ) ∂_β φ_δ
        let mut t = vec![Vec::with_capacity(n); n];
        for (gamma, row) in t.iter_mut().enumerate() {
            for beta in 0..n {
                let mut acc = composed.get(gamma, 0).checked_mul(&jac[0][beta])?;
                for (delta, jd) in jac.iter().enumerate().skip(1) {
                    acc = acc.checked_add(&composed.get(gamma, delta).checked_mul(&jd[beta])?)?;
                }
                row.push(acc);
            }
        }
        let mut entries = vec![vec![Jet::zero(phi[0].nvars(), 0); n]; n];
        for alpha in 0..n {
            for beta in alpha..n {
                let mut acc = jac[0][alpha].checked_mul(&t[0][beta])?;
                for gamma in 1..n {
                    acc = acc.checked_add(&jac[gamma][alpha].checked_mul(&t[gamma][beta])?)?;
                }
                entries[beta][alpha] = acc.clone();
                entries[alpha][beta] = acc;
            }
        }
        MetricJet::new(JetMatrix::from_rows(entries)?)
    }
}

/// Leading principal minors of the constant part are all positive.
pub fn is_positive_definite_at_base<C: Scalar>(m: &JetMatrix<C>) -> Result<bool> {
    for k in 1..=m.rows() {
        let minor = JetMatrix::from_fn(k, k, |i, j| Jet::constant(0, 0, m.get(i, j).constant_term()));
        if !minor.det()?.constant_term().is_positive() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A metric in normal form with an admissible singularity at the origin:
/// `g_nn = (‖x'‖² + x_n^{2l}) F₀` with `F₀(0) > 0`, a positive-definite
/// tangential block, and `∂_n g_jk(x', 0) = O(‖x'‖²)`.
#[derive(Clone, Debug)]
pub struct AdmissibleMetric<C> {
    pub metric: MetricJet<C>,
    pub l: u32,
    /// `F₀` in `n` variables, known to the metric's order minus two.
    pub f0: Jet<C>,
    /// `F(x') = F₀(x', 0)`.
    pub f: Jet<C>,
    /// Induced metric `ḡ_jk = g_jk(x', 0)` on the hypersurface.
    pub gbar: JetMatrix<C>,
    /// `h_jk = −½ ∂_n g_jk(x', 0)`.
    pub h: JetMatrix<C>,
}

/// `‖x'‖² + x_n^{2l}` in `n` variables.
pub fn singular_factor<C: Scalar>(n: usize, order: usize, l: u32) -> Jet<C> {
    let mut terms = Vec::with_capacity(n);
    for j in 0..n - 1 {
        let mut e = vec![0; n];
        e[j] = 2;
        terms.push((e, C::one()));
    }
    let mut e = vec![0; n];
    e[n - 1] = 2 * l;
    terms.push((e, C::one()));
    Jet::from_terms(n, order, terms)
}

impl<C: Scalar> AdmissibleMetric<C> {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Rebuilds `g` from `(F₀, l, g_jk)`.
    pub fn resynthesize(&self) -> Result<MetricJet<C>> {
        let n = self.dim();
        let order = self.metric.order();
        let gnn = self.f0.checked_mul(&singular_factor(n, order, self.l))?.truncate(order);
        MetricJet::from_fn(n, |i, j| {
            if i == n - 1 && j == n - 1 {
                gnn.clone()
            } else if i == n - 1 || j == n - 1 {
                Jet::zero(n, order)
            } else {
                self.metric.get(i, j).clone()
            }
        })
    }
}

/// Checks the admissible-singularity conditions, collecting every violation.
pub fn check_admissible<C: Scalar>(g: &MetricJet<C>, l: u32) -> Result<AdmissibleMetric<C>> {
    let n = g.dim();
    if n < 2 {
        return Err(Error::NotAdmissible(vec!["dimension must be at least 2".into()]));
    }
    if l == 0 {
        return Err(Error::NotAdmissible(vec!["l must be at least 1".into()]));
    }
    let tol = structural_tol::<C>();
    let last = n - 1;
    let mut violations = Vec::new();
    if !g.is_normal_form() {
        violations.push("cross terms g_jn do not vanish (metric is not in normal form)".to_string());
    }
    let order = g.order();
    let factor = singular_factor::<C>(n, order, l);
    let f0 = match g.g_nn().divide_with_tolerance(&factor, tol) {
        Ok(f0) => Some(f0),
        Err(e) => {
            violations.push(format!("g_nn is not divisible by |x'|^2 + x_n^{}: {e}", 2 * l));
            None
        }
    };
    if let Some(f0) = &f0 {
        let c = f0.constant_term();
        if !c.is_positive() || c.abs_f64() <= tol {
            violations.push(format!("F0(0) = {} is not positive", c.to_f64()));
        }
    }
    let tangential = g.tangential();
    if !is_positive_definite_at_base(&tangential)? {
        violations.push("tangential block is not positive definite at the origin".to_string());
    }
    let half = C::from_ratio(-1, 2);
    let h = tangential.map(|e| e.differentiate(last).restrict_zero(last).scale(&half));
    for i in 0..n - 1 {
        for j in i..n - 1 {
            if !vanishes_to(h.get(i, j), 1, tol) {
                violations.push(format!(
                    "h_{}{} = -1/2 d_n g_{}{}(x', 0) has terms of degree below 2",
                    i + 1,
                    j + 1,
                    i + 1,
                    j + 1
                ));
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::NotAdmissible(violations));
    }
    let f0 = f0.expect("divisible when no violations");
    Ok(AdmissibleMetric {
        metric: g.clone(),
        l,
        f: f0.restrict_zero(last),
        f0,
        gbar: g.restrict_to_hypersurface().tangential_block(),
        h,
    })
}

impl<C: Scalar> JetMatrix<C> {
    /// Upper-left `(n-1)x(n-1)` block.
    pub fn tangential_block(&self) -> JetMatrix<C> {
        let m = self.rows() - 1;
        JetMatrix::from_fn(m, m, |i, j| self.get(i, j).clone())
    }
}

/// Result of the cross-term positivity test `b·(g')⁻¹b < g_nn`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PositivityReport {
    /// Largest value of `b·(g')⁻¹b − g_nn` over the sample grid.
    pub max_excess: f64,
    /// Grid point attaining `max_excess`.
    pub worst_point: Vec<f64>,
    pub b_vanishes_at_origin: bool,
    pub pass: bool,
}

/// Evaluates `b·(g')⁻¹b − g_nn` on a uniform grid of `points` per axis over
/// `[-radius, radius]^n` (origin excluded).
pub fn positivity_certificate<C: Scalar>(g: &MetricJet<C>, radius: f64, points: usize) -> Result<PositivityReport> {
    let n = g.dim();
    if n < 2 {
        return Err(Error::Dimension("positivity certificate needs n >= 2".into()));
    }
    let gf = g.to_f64();
    let tangential = gf.tangential();
    let b = gf.cross_terms();
    let m = n - 1;
    let b_zero = b.iter().all(|bj| bj.constant_term().abs() <= structural_tol::<C>());
    let g0 = DMatrix::from_row_slice(m, m, &tangential.constant_part_f64());
    if g0.clone().lu().determinant().abs() < 1e-14 {
        return Err(Error::Positivity("tangential block is singular at the origin".into()));
    }
    let axis: Vec<f64> = if points <= 1 {
        vec![radius]
    } else {
        (0..points)
            .map(|i| -radius + 2.0 * radius * i as f64 / (points - 1) as f64)
            .collect()
    };
    let mut best = f64::NEG_INFINITY;
    let mut worst_point = vec![0.0; n];
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        if x.iter().any(|&v| v != 0.0) {
            let gt = DMatrix::from_fn(m, m, |i, j| tangential.get(i, j).eval(&x));
            let bv = DVector::from_iterator(m, b.iter().map(|bj| bj.eval(&x)));
            let value = match gt.lu().solve(&bv) {
                Some(sol) => bv.dot(&sol) - gf.g_nn().eval(&x),
                None => f64::INFINITY,
            };
            if value > best {
                best = value;
                worst_point = x;
            }
        }
        let mut d = 0;
        while d < n {
            idx[d] += 1;
            if idx[d] < axis.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == n {
            break;
        }
    }
    let gnn0 = gf.g_nn().constant_term();
    let origin_ok = b_zero || gnn0 > 0.0;
    Ok(PositivityReport {
        max_excess: best,
        worst_point,
        b_vanishes_at_origin: b_zero,
        pass: origin_ok && best < 0.0,
    })
}

/// Linear map `L` with `Lᵀ H L = I` for a symmetric positive-definite `H`
/// (row-major, `dim x dim`); used to bring the partial Hessian of `g_nn` to
/// the identity before calling [`check_admissible`].
pub fn diagonalizing_transform(hessian: &[f64], dim: usize) -> Result<Vec<f64>> {
    let h = DMatrix::from_row_slice(dim, dim, hessian);
    let chol = nalgebra::Cholesky::new(h)
        .ok_or_else(|| Error::Numeric("quadratic form is not positive definite".into()))?;
    // H = R Rᵀ with R lower triangular, so L = R⁻ᵀ
    let r_t = chol.l().transpose();
    let l = r_t
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    Ok(l.transpose().as_slice().to_vec())
}

/// Output of [`normal_form_transform`].
#[derive(Clone, Debug)]
pub struct NormalForm<C> {
    /// Tangential displacement `f_j(x̄)`; the coordinate change is `x = (x̄' + f(x̄), x̄_n)`.
    pub displacement: Vec<Jet<C>>,
    /// Pulled-back metric, known to one order less than the input.
    pub metric: MetricJet<C>,
    pub eps: C,
    pub attempts: usize,
}

/// Removes the cross terms `g_jn` by a coordinate change `x' = x̄' + f(x̄)`.
///
/// `f` solves `g'(φ) ∂_n f = −b(φ)` with `φ = (x̄' + f, x̄_n)`, starting from
/// `f(x̄', 0) = eps (g'(0))⁻¹ x̄'`; eps is halved while the resulting Jacobian
/// is singular, at most `max_attempts` times.
pub fn normal_form_transform<C: Scalar>(g: &MetricJet<C>, eps: C, max_attempts: usize) -> Result<NormalForm<C>> {
    let n = g.dim();
    if n < 2 {
        return Err(Error::Dimension("normal form needs n >= 2".into()));
    }
    let tol = structural_tol::<C>();
    let b = g.cross_terms();
    if b.iter().any(|bj| bj.constant_term().abs_f64() > tol) {
        return Err(Error::Positivity("cross terms b_j must vanish at the origin".into()));
    }
    let g0 = JetMatrix::from_fn(n - 1, n - 1, |i, j| Jet::constant(0, 0, g.get(i, j).constant_term()));
    let g0_lu = g0
        .lu()
        .map_err(|_| Error::Numeric("tangential block is singular at the origin".into()))?;
    let order = g.order();
    let mut eps = eps;
    let mut last_err = None;
    for attempt in 1..=max_attempts.max(1) {
        match normal_form_attempt(g, &b, &g0_lu, &eps, order) {
            Ok((displacement, metric)) => {
                return Ok(NormalForm {
                    displacement,
                    metric,
                    eps,
                    attempts: attempt,
                })
            }
            Err(e) => last_err = Some(e),
        }
        eps = eps * C::from_ratio(1, 2);
    }
    Err(Error::RetryExhausted {
        what: "normal form eps".into(),
        attempts: max_attempts.max(1),
        last: Box::new(last_err.expect("at least one attempt")),
    })
}

fn normal_form_attempt<C: Scalar>(
    g: &MetricJet<C>,
    b: &[Jet<C>],
    g0_lu: &crate::jet::JetLu<C>,
    eps: &C,
    order: usize,
) -> Result<(Vec<Jet<C>>, MetricJet<C>)> {
    let n = g.dim();
    let m = n - 1;
    // initial data: eps (g'(0))⁻¹ x̄'
    let mut initial = Vec::with_capacity(m);
    let columns: Vec<Vec<Jet<C>>> = (0..m)
        .map(|l| {
            let e: Vec<Jet<C>> = (0..m)
                .map(|i| Jet::constant(0, 0, if i == l { eps.clone() } else { C::zero() }))
                .collect();
            g0_lu.solve(&e)
        })
        .collect::<Result<_>>()?;
    for j in 0..m {
        let terms = (0..m).map(|l| {
            let mut e = vec![0; m];
            e[l] = 1;
            (e, columns[l][j].constant_term())
        });
        initial.push(Jet::from_terms(m, order, terms));
    }
    let problem = FirstOrderProblem {
        nvars: n,
        order,
        initial,
    };
    let tangential = g.tangential();
    let displacement = solve_first_order(&problem, |f| {
        let phi = coordinate_change(f, n, f[0].order());
        let gt = tangential.try_map(|e| e.compose(&phi))?;
        let rhs: Vec<Jet<C>> = b.iter().map(|bj| bj.compose(&phi).map(|c| -c)).collect::<Result<_>>()?;
        gt.solve(&rhs)
    })?;
    let phi = coordinate_change(&displacement, n, order);
    let jac = JetMatrix::from_fn(n, n, |i, j| Jet::constant(0, 0, phi[i].differentiate(j).constant_term()));
    if jac.det()?.constant_term().abs_f64() <= structural_tol::<C>() {
        return Err(Error::Numeric("coordinate change has singular Jacobian at the origin".into()));
    }
    let pulled = g.pullback(&phi)?;
    let tol = match C::MODE {
        Mode::Exact => 0.0,
        Mode::Float => FLOAT_STRUCTURE_TOL * (1.0 + g.matrix().constant_part_f64().iter().fold(0.0f64, |a, v| a.max(v.abs()))),
    };
    let check_order = order.saturating_sub(1);
    for (j, bj) in pulled.cross_terms().iter().enumerate() {
        if !vanishes_to(bj, check_order, tol) {
            return Err(Error::Numeric(format!(
                "transformed cross term b_{} does not vanish (leading {})",
                j + 1,
                bj.leading_term()
            )));
        }
    }
    // the cross terms vanish to the known order; store them as exact zeros
    let cleaned = MetricJet::from_fn(n, |i, j| {
        if (i == n - 1) != (j == n - 1) {
            Jet::zero(n, pulled.get(i, j).order())
        } else {
            pulled.get(i, j).clone()
        }
    })?;
    Ok((displacement, cleaned))
}

/// `φ = (x̄' + f, x̄_n)`.
fn coordinate_change<C: Scalar>(f: &[Jet<C>], n: usize, order: usize) -> Vec<Jet<C>> {
    let mut phi: Vec<Jet<C>> = f
        .iter()
        .enumerate()
        .map(|(j, fj)| &Jet::var(n, order, j) + fj)
        .collect();
    phi.push(Jet::var(n, order, n - 1));
    phi
}
