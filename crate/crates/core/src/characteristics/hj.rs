//! Hamilton-Jacobi phase `∂_t ξ + g(x, ∂_x ξ) = 0`, `ξ(0, x) = s(x)`, and the
//! map `(t, x) ↦ (ξ(t, x), x)`.

use super::flow::{strip_end, Hamiltonian};
use super::symbol::PrincipalSymbol;
use crate::ck::{solve_first_order, FirstOrderProblem};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::{Mode, Scalar};

/// `|∂_t ξ|` below this counts as lying on the branch locus in float evaluation.
pub const BRANCH_TOL: f64 = 1e-12;

pub const DEFAULT_TRUST_RADIUS: f64 = 2.0;

#[derive(Clone, Debug)]
pub struct UniformizationMap<C> {
    /// `ξ(t, x)` in `n + 1` variables, `t` first.
    pub xi: Jet<C>,
    /// `∂_t ξ`; its zero set is the branch locus.
    pub dt_xi: Jet<C>,
    pub order: usize,
    /// Evaluation is refused outside this Euclidean radius in `(t, x)`.
    pub trust_radius: f64,
}

/// Solves for `ξ` as a power series in `t` with the first-order recursion.
///
/// The residual `∂_t ξ + g(x, ∂_x ξ)` vanishes to order `K − 1`. Requires a
/// symbol of degree at least one and `s` known to order `K`.
pub fn solve_hj_series<C: Scalar>(symbol: &PrincipalSymbol<C>, s: &Jet<C>, order: usize) -> Result<UniformizationMap<C>> {
    let n = symbol.n();
    if symbol.degree() == 0 {
        return Err(Error::Symbol("the symbol does not depend on p (degree 0)".into()));
    }
    if s.nvars() != n {
        return Err(Error::Dimension(format!("surface function must have {n} variables")));
    }
    if order == 0 {
        return Err(Error::InsufficientOrder {
            what: "phase".into(),
            have: 0,
            need: 1,
        });
    }
    // internally t is the last variable
    let problem = FirstOrderProblem {
        nvars: n + 1,
        order,
        initial: vec![s.clone()],
    };
    let xs: Vec<Jet<C>> = (0..n).map(|i| Jet::var(n + 1, order, i)).collect();
    let xi = solve_first_order(&problem, |f| {
        let ps: Vec<Jet<C>> = (0..n).map(|i| f[0].differentiate(i)).collect();
        Ok(vec![-symbol.on_jets(&xs, &ps)?])
    })?
    .remove(0);
    let perm: Vec<usize> = (0..=n).map(|i| if i == n { 0 } else { i + 1 }).collect();
    let xi = xi.permute_vars(&perm);
    Ok(UniformizationMap {
        dt_xi: xi.differentiate(0),
        xi,
        order,
        trust_radius: DEFAULT_TRUST_RADIUS,
    })
}

impl<C: Scalar> UniformizationMap<C> {
    pub fn n(&self) -> usize {
        self.xi.nvars() - 1
    }

    pub fn with_trust_radius(mut self, radius: f64) -> Self {
        self.trust_radius = radius;
        self
    }

    /// `∂_t ξ + g(x, ∂_x ξ)`, which vanishes to order `K − 1`.
    pub fn residual(&self, symbol: &PrincipalSymbol<C>) -> Result<Jet<C>> {
        let n = self.n();
        let xs: Vec<Jet<C>> = (1..=n).map(|i| Jet::var(n + 1, self.order, i)).collect();
        let ps: Vec<Jet<C>> = (1..=n).map(|i| self.xi.differentiate(i)).collect();
        let g = symbol.on_jets(&xs, &ps)?;
        Ok(self.dt_xi.checked_add(&g)?.truncate(self.order - 1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniformizedPoint {
    pub xi: f64,
    pub dt_xi: f64,
    /// `∂_t ξ = 0` within tolerance (exact zero in exact mode).
    pub on_branch_locus: bool,
}

pub fn uniformize_eval<C: Scalar>(map: &UniformizationMap<C>, t: f64, x: &[f64]) -> Result<UniformizedPoint> {
    if x.len() != map.n() {
        return Err(Error::Dimension(format!("point must have {} coordinates", map.n())));
    }
    let norm = (t * t + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if norm > map.trust_radius {
        return Err(Error::OutsideTrustRegion {
            norm,
            radius: map.trust_radius,
        });
    }
    let z: Vec<f64> = std::iter::once(t).chain(x.iter().copied()).collect();
    let (xi, dt_xi, on) = match C::MODE {
        Mode::Exact => {
            let zc: Vec<C> = z.iter().map(|v| exact_from_f64::<C>(*v)).collect::<Result<_>>()?;
            let d = map.dt_xi.eval(&zc);
            (map.xi.eval(&zc).to_f64(), d.to_f64(), d.is_zero())
        }
        Mode::Float => {
            let d = map.dt_xi.to_f64().eval(&z);
            (map.xi.to_f64().eval(&z), d, d.abs() <= BRANCH_TOL)
        }
    };
    Ok(UniformizedPoint {
        xi,
        dt_xi,
        on_branch_locus: on,
    })
}

/// Exact value of a finite double.
fn exact_from_f64<C: Scalar>(v: f64) -> Result<C> {
    let r = crate::Rational::from_float(v).ok_or_else(|| Error::Numeric(format!("{v} is not finite")))?;
    Ok(C::from_rational(&r))
}

#[derive(Clone, Debug)]
pub struct ShootingOptions {
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            step: 1e-3,
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// `ξ(t, x)` by strip shooting: finds `y` with `x(t; y) = x` by damped Newton
/// (seed `y = x`, finite-difference Jacobian) and returns `ξ(t; y)`.
pub fn shoot_xi<C: Scalar>(
    symbol: &PrincipalSymbol<C>,
    s: &Jet<f64>,
    t: f64,
    x: &[f64],
    opts: &ShootingOptions,
) -> Result<f64> {
    let h = Hamiltonian::new(symbol);
    let n = h.n();
    if x.len() != n || s.nvars() != n {
        return Err(Error::Dimension(format!("shooting needs {n} coordinates")));
    }
    let miss = |y: &[f64]| -> (Vec<f64>, f64) {
        let (xe, xi) = strip_end(&h, y, s, t, opts.step);
        (xe.iter().zip(x).map(|(a, b)| a - b).collect(), xi)
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut y = x.to_vec();
    let (mut r, mut xi) = miss(&y);
    for _ in 0..opts.max_iter {
        if norm(&r) <= opts.tol {
            return Ok(xi);
        }
        let d = 1e-6;
        let mut jac = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let (mut yp, mut ym) = (y.clone(), y.clone());
            yp[j] += d;
            ym[j] -= d;
            let (rp, _) = miss(&yp);
            let (rm, _) = miss(&ym);
            for i in 0..n {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * d);
            }
        }
        let delta = jac
            .lu()
            .solve(&nalgebra::DVector::from_vec(r.clone()))
            .ok_or_else(|| Error::Numeric(format!("singular strip Jacobian at y = {y:?} (branch locus)")))?;
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(delta.iter()).map(|(a, b)| a - damping * b).collect();
            let (rt, xt) = miss(&trial);
            if norm(&rt) < norm(&r) || damping < 1e-4 {
                y = trial;
                r = rt;
                xi = xt;
                break;
            }
            damping /= 2.0;
        }
    }
    if norm(&r) <= opts.tol {
        Ok(xi)
    } else {
        Err(Error::Numeric(format!("strip shooting did not converge (miss {:e})", norm(&r))))
    }
}
