//! Cauchy-Kovalevskaya power-series solvers.
//!
//! Both solvers expand the unknowns in the last variable `x_n` with jet
//! coefficients in the remaining variables and fill in one power of `x_n` per
//! step. The right-hand side is re-evaluated on the partial solution at every
//! step; the coefficient of `x_n^m` in the evaluation depends only on the
//! coefficients already fixed.

use crate::error::{Error, Result};
use crate::jet::{Jet, JetLu, JetMatrix};
use crate::scalar::Scalar;

/// `∂_n f = Φ(f)` with `f(·, 0)` given.
#[derive(Clone, Debug)]
pub struct FirstOrderProblem<C> {
    /// Number of independent variables `n`; `x_n` is variable `n - 1`.
    pub nvars: usize,
    pub order: usize,
    /// Initial data on `x_n = 0`, jets in `n - 1` variables.
    pub initial: Vec<Jet<C>>,
}

/// `M(u) ∂_nn u = R(u)` with `u(·, 0) = u0`, `∂_n u(·, 0) = u1`.
#[derive(Clone, Debug)]
pub struct SecondOrderProblem<C> {
    pub nvars: usize,
    pub order: usize,
    pub u0: Vec<Jet<C>>,
    pub u1: Vec<Jet<C>>,
}

/// Lifts a jet on `x_n = 0` to `n` variables and multiplies by `x_n^power`.
fn lift<C: Scalar>(j: &Jet<C>, last: usize, power: u32) -> Jet<C> {
    j.insert_var(last).mul_var_power(last, power)
}

fn require_order<C: Scalar>(what: &str, jets: &[Jet<C>], need: usize) -> Result<()> {
    if let Some(j) = jets.iter().find(|j| j.order() < need) {
        return Err(Error::InsufficientOrder {
            what: what.to_string(),
            have: j.order(),
            need,
        });
    }
    Ok(())
}

fn check_data_vars<C: Scalar>(jets: &[Jet<C>], nvars: usize) -> Result<()> {
    if nvars == 0 {
        return Err(Error::Dimension("a Cauchy problem needs at least one variable".into()));
    }
    if let Some(j) = jets.iter().find(|j| j.nvars() != nvars - 1) {
        return Err(Error::Dimension(format!(
            "Cauchy data must have {} variables, found {}",
            nvars - 1,
            j.nvars()
        )));
    }
    Ok(())
}

/// Solves `∂_n f = Φ(f)`; `rhs` receives the current partial solution (jets in
/// `n` variables) and returns `Φ` componentwise.
///
/// The result satisfies `∂_n f − Φ(f) = 0` to order `K − 1`.
pub fn solve_first_order<C, F>(problem: &FirstOrderProblem<C>, rhs: F) -> Result<Vec<Jet<C>>>
where
    C: Scalar,
    F: Fn(&[Jet<C>]) -> Result<Vec<Jet<C>>>,
{
    let n = problem.nvars;
    let k = problem.order;
    check_data_vars(&problem.initial, n)?;
    require_order("initial data", &problem.initial, k)?;
    let last = n - 1;
    let mut f: Vec<Jet<C>> = problem
        .initial
        .iter()
        .map(|j| lift(&j.truncate(k), last, 0))
        .collect();
    for m in 0..k {
        let phi = rhs(&f).map_err(|e| e.at_order(m))?;
        if phi.len() != f.len() {
            return Err(Error::Dimension(format!(
                "right-hand side returned {} components for {} unknowns",
                phi.len(),
                f.len()
            ))
            .at_order(m));
        }
        let inv = C::from_ratio(1, m as i64 + 1);
        for (fi, p) in f.iter_mut().zip(&phi) {
            let c = p.slice(last, m as u32).scale(&inv);
            if c.order() + m + 1 < k {
                return Err(Error::InsufficientOrder {
                    what: "right-hand side".into(),
                    have: p.order(),
                    need: k - 1,
                }
                .at_order(m));
            }
            *fi = fi.checked_add(&lift(&c, last, m as u32 + 1))?.truncate(k);
        }
    }
    Ok(f)
}

/// Factors the principal matrix on the data, failing with a characteristic
/// error when its determinant vanishes at the base point.
pub fn principal_factorization<C, F>(problem: &SecondOrderProblem<C>, system: &F) -> Result<JetLu<C>>
where
    C: Scalar,
    F: Fn(&[Jet<C>]) -> Result<(JetMatrix<C>, Vec<Jet<C>>)>,
{
    let u = initial_guess(problem)?;
    let (m, _) = system(&u)?;
    let last = problem.nvars - 1;
    m.map(|e| e.restrict_zero(last)).lu()
}

fn initial_guess<C: Scalar>(problem: &SecondOrderProblem<C>) -> Result<Vec<Jet<C>>> {
    let n = problem.nvars;
    let k = problem.order;
    check_data_vars(&problem.u0, n)?;
    check_data_vars(&problem.u1, n)?;
    if problem.u0.len() != problem.u1.len() {
        return Err(Error::Dimension(format!(
            "u0 has {} components, u1 has {}",
            problem.u0.len(),
            problem.u1.len()
        )));
    }
    if k < 2 {
        return Err(Error::InsufficientOrder {
            what: "second-order solve".into(),
            have: k,
            need: 2,
        });
    }
    require_order("u0", &problem.u0, k)?;
    require_order("u1", &problem.u1, k - 1)?;
    let last = n - 1;
    Ok(problem
        .u0
        .iter()
        .zip(&problem.u1)
        .map(|(a, b)| {
            let a = lift(&a.truncate(k), last, 0);
            let b = lift(&b.truncate(k - 1), last, 1);
            &a + &b
        })
        .collect())
}

/// Solves `M(u) ∂_nn u = R(u)`. `system` receives the partial solution and
/// returns `(M, R)`; `M` must be square of the unknowns' size.
///
/// The result matches the data on `x_n = 0` and satisfies
/// `M ∂_nn u − R = 0` to order `K − 2`.
pub fn solve_second_order<C, F>(problem: &SecondOrderProblem<C>, system: F) -> Result<Vec<Jet<C>>>
where
    C: Scalar,
    F: Fn(&[Jet<C>]) -> Result<(JetMatrix<C>, Vec<Jet<C>>)>,
{
    let k = problem.order;
    let last = problem.nvars - 1;
    let mut u = initial_guess(problem)?;
    let dim = u.len();
    let (m0, _) = system(&u)?;
    if m0.rows() != dim || m0.cols() != dim {
        return Err(Error::Dimension(format!(
            "principal matrix is {}x{} for {} unknowns",
            m0.rows(),
            m0.cols(),
            dim
        )));
    }
    let lu = m0.map(|e| e.restrict_zero(last)).lu()?;
    for m in 0..=(k - 2) {
        let step = (|| -> Result<Vec<Jet<C>>> {
            let (mat, rhs) = system(&u)?;
            let unn: Vec<Jet<C>> = u
                .iter()
                .map(|c| c.differentiate(last).differentiate(last))
                .collect();
            let lhs = mat.mul_vec(&unn)?;
            let residual: Vec<Jet<C>> = lhs
                .iter()
                .zip(&rhs)
                .map(|(a, b)| a.checked_sub(b).map(|r| r.slice(last, m as u32)))
                .collect::<Result<_>>()?;
            lu.solve(&residual)
        })()
        .map_err(|e| e.at_order(m))?;
        let factor = -C::from_ratio(1, ((m + 2) * (m + 1)) as i64);
        for (ui, c) in u.iter_mut().zip(&step) {
            let c = c.scale(&factor);
            if c.order() + m + 2 < k {
                return Err(Error::InsufficientOrder {
                    what: "second-order system".into(),
                    have: c.order() + m + 2,
                    need: k,
                }
                .at_order(m));
            }
            *ui = ui.checked_add(&lift(&c, last, m as u32 + 2))?.truncate(k);
        }
    }
    Ok(u)
}
