//! Bicharacteristic strips: classical fourth-order Runge-Kutta integration of
//! `dx/dt = ∂_p g`, `dp/dt = −∂_x g`, `dξ/dt = p·∂_p g − g`.

use nalgebra::DMatrix;

use super::symbol::{PrincipalSymbol, SymbolKind};
use crate::error::{Error, Result};
use crate::jet::{Jet, MultiIndex};
use crate::scalar::Scalar;

/// Velocities below this norm count as a degenerate (stationary) strip.
pub const ZERO_VELOCITY_TOL: f64 = 1e-12;

/// Float evaluator of a principal symbol and its gradient.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n: usize,
    kind: Evaluator,
}

#[derive(Clone, Debug)]
enum Evaluator {
    Scalar {
        g: Jet<f64>,
        grad: Vec<Jet<f64>>,
    },
    /// Entries of `𝒜` (row-major) and their nonzero partials `partials[v]`
    /// as `(entry, polynomial)`.
    System {
        dim: usize,
        max_degree: usize,
        entries: Vec<Poly>,
        partials: Vec<Vec<(usize, Poly)>>,
    },
}

/// Flat polynomial evaluated against a shared table of powers.
#[derive(Clone, Debug)]
struct Poly(Vec<(MultiIndex, f64)>);

impl Poly {
    fn new(j: &Jet<f64>) -> Self {
        Poly(j.terms().map(|(k, v)| (k, *v)).collect())
    }

    fn degree(&self) -> usize {
        self.0.iter().map(|(k, _)| k.total_degree()).max().unwrap_or(0)
    }

    fn eval(&self, powers: &[Vec<f64>]) -> f64 {
        self.0
            .iter()
            .map(|(k, c)| {
                powers
                    .iter()
                    .enumerate()
                    .fold(*c, |t, (i, pw)| t * pw[k.get(i) as usize])
            })
            .sum()
    }
}

/// `powers[i][e] = z_i^e` for `e ≤ max`.
fn power_table(z: &[f64], max: usize) -> Vec<Vec<f64>> {
    z.iter()
        .map(|&x| {
            std::iter::successors(Some(1.0), |p| Some(p * x))
                .take(max + 1)
                .collect()
        })
        .collect()
}

fn det(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        1.0
    } else {
        a.clone().lu().determinant()
    }
}

/// Transposed adjugate (the cofactor matrix), valid for singular `a`.
fn cofactors(a: &DMatrix<f64>) -> DMatrix<f64> {
    let d = a.nrows();
    DMatrix::from_fn(d, d, |i, j| {
        let minor = a.clone().remove_row(i).remove_column(j);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * det(&minor)
    })
}

impl Hamiltonian {
    pub fn new<C: Scalar>(symbol: &PrincipalSymbol<C>) -> Self {
        let n = symbol.n();
        let kind = match symbol.to_f64().kind() {
            SymbolKind::Scalar(g) => Evaluator::Scalar {
                grad: g.gradient(),
                g: g.clone(),
            },
            SymbolKind::System { matrix, .. } => {
                let dim = matrix.rows();
                let jets: Vec<&Jet<f64>> = (0..dim * dim).map(|e| matrix.get(e / dim, e % dim)).collect();
                let entries: Vec<Poly> = jets.iter().map(|e| Poly::new(e)).collect();
                let partials = (0..2 * n)
                    .map(|v| {
                        jets.iter()
                            .enumerate()
                            .map(|(idx, e)| (idx, e.differentiate(v)))
                            .filter(|(_, d)| !d.is_zero())
                            .map(|(idx, d)| (idx, Poly::new(&d)))
                            .collect()
                    })
                    .collect();
                Evaluator::System {
                    dim,
                    max_degree: entries.iter().map(Poly::degree).max().unwrap_or(0),
                    entries,
                    partials,
                }
            }
        };
        Hamiltonian { n, kind }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn point(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        assert_eq!(p.len(), self.n);
        x.iter().chain(p).copied().collect()
    }

    pub fn value(&self, x: &[f64], p: &[f64]) -> f64 {
        let z = self.point(x, p);
        match &self.kind {
            Evaluator::Scalar { g, .. } => g.eval(&z),
            Evaluator::System {
                dim,
                max_degree,
                entries,
                ..
            } => {
                let powers = power_table(&z, *max_degree);
                det(&DMatrix::from_iterator(*dim, *dim, entries.iter().map(|e| e.eval(&powers))).transpose())
            }
        }
    }

    /// `(g, ∂g)` with the gradient ordered `(∂_x g, ∂_p g)`.
    ///
    /// Determinant gradients use `∂ det 𝒜 = Σ cof(𝒜)_jk ∂𝒜_jk`.
    pub fn value_and_gradient(&self, x: &[f64], p: &[f64]) -> (f64, Vec<f64>) {
        let z = self.point(x, p);
        match &self.kind {
            Evaluator::Scalar { g, grad } => (g.eval(&z), grad.iter().map(|d| d.eval(&z)).collect()),
            Evaluator::System {
                dim,
                max_degree,
                entries,
                partials,
            } => {
                let d = *dim;
                let powers = power_table(&z, *max_degree);
                let a = DMatrix::from_iterator(d, d, entries.iter().map(|e| e.eval(&powers))).transpose();
                let cof = cofactors(&a);
                let grad = partials
                    .iter()
                    .map(|pv| pv.iter().map(|(idx, e)| cof[(idx / d, idx % d)] * e.eval(&powers)).sum())
                    .collect();
                (det(&a), grad)
            }
        }
    }

    /// Right-hand side of the strip equations on the state `(x, p, ξ)`.
    fn field(&self, state: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (x, p) = (&state[..n], &state[n..2 * n]);
        let (g, grad) = self.value_and_gradient(x, p);
        let mut out = Vec::with_capacity(2 * n + 1);
        out.extend_from_slice(&grad[n..]);
        out.extend(grad[..n].iter().map(|v| -v));
        let euler: f64 = p.iter().zip(&grad[n..]).map(|(a, b)| a * b).sum();
        out.push(euler - g);
        out
    }

    fn rk4_step(&self, state: &[f64], h: f64) -> Vec<f64> {
        let axpy = |a: &[f64], k: &[f64], s: f64| a.iter().zip(k).map(|(a, k)| a + s * k).collect::<Vec<_>>();
        let k1 = self.field(state);
        let k2 = self.field(&axpy(state, &k1, h / 2.0));
        let k3 = self.field(&axpy(state, &k2, h / 2.0));
        let k4 = self.field(&axpy(state, &k3, h));
        state
            .iter()
            .enumerate()
            .map(|(i, s)| s + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct FlowOptions {
    /// Integration time; may be negative.
    pub t_end: f64,
    pub step: f64,
    /// Bound on `|g(x(t), p(t)) − g₀|`.
    pub drift_tol: f64,
    /// How many times the step may be halved after a drift violation.
    pub max_halvings: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            t_end: 1.0,
            step: 1e-3,
            drift_tol: 1e-8,
            max_halvings: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StripSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub xi: f64,
    /// `g(x(t), p(t)) − g₀`.
    pub drift: f64,
}

#[derive(Clone, Debug)]
pub struct CharStrip {
    /// Starting point `x(0)`.
    pub y: Vec<f64>,
    pub g0: f64,
    /// Step size actually used after any halvings.
    pub step: f64,
    pub halvings: usize,
    /// Samples on the grid of the requested step.
    pub samples: Vec<StripSample>,
    pub max_drift: f64,
    /// `|∂_p g|` at the start.
    pub initial_speed: f64,
}

impl CharStrip {
    pub fn is_stationary(&self) -> bool {
        self.initial_speed <= ZERO_VELOCITY_TOL
    }

    pub fn last(&self) -> &StripSample {
        self.samples.last().expect("a strip has at least its initial sample")
    }
}

fn steps_for(t_end: f64, step: f64) -> usize {
    ((t_end.abs() / step).round() as usize).max(1)
}

/// Integrates the strip with data `x(0) = y`, `p(0) = p0`, `ξ(0) = xi0`.
pub fn integrate_strip(h: &Hamiltonian, y: &[f64], p0: &[f64], xi0: f64, opts: &FlowOptions) -> Result<CharStrip> {
    let n = h.n();
    if y.len() != n || p0.len() != n {
        return Err(Error::Dimension(format!("strip data must have {n} coordinates")));
    }
    if !(opts.step > 0.0) {
        return Err(Error::Numeric("integration step must be positive".into()));
    }
    let (g0, grad0) = h.value_and_gradient(y, p0);
    let initial_speed = grad0[n..].iter().map(|v| v * v).sum::<f64>().sqrt();
    let base_steps = steps_for(opts.t_end, opts.step);
    let mut last_drift = 0.0;
    for halvings in 0..=opts.max_halvings {
        let refine = 1usize << halvings;
        let steps = base_steps * refine;
        let dt = opts.t_end / steps as f64;
        let mut state: Vec<f64> = y.iter().chain(p0).copied().chain([xi0]).collect();
        let mut samples = Vec::with_capacity(base_steps + 1);
        let mut max_drift = 0.0f64;
        let mut ok = true;
        samples.push(StripSample {
            t: 0.0,
            x: y.to_vec(),
            p: p0.to_vec(),
            xi: xi0,
            drift: 0.0,
        });
        for i in 1..=steps {
            state = h.rk4_step(&state, dt);
            if state.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("strip from {y:?} left the finite range at t = {}", i as f64 * dt)));
            }
            if i % refine != 0 {
                continue;
            }
            let drift = h.value(&state[..n], &state[n..2 * n]) - g0;
            max_drift = max_drift.max(drift.abs());
            if drift.abs() > opts.drift_tol {
                ok = false;
                last_drift = drift.abs();
                break;
            }
            samples.push(StripSample {
                t: i as f64 * dt,
                x: state[..n].to_vec(),
                p: state[n..2 * n].to_vec(),
                xi: state[2 * n],
                drift,
            });
        }
        if ok {
            return Ok(CharStrip {
                y: y.to_vec(),
                g0,
                step: opts.step / refine as f64,
                halvings,
                samples,
                max_drift,
                initial_speed,
            });
        }
    }
    Err(Error::Drift {
        drift: last_drift,
        tol: opts.drift_tol,
        halvings: opts.max_halvings,
    })
}

/// Strip issued from `y` with `p(0) = ∂s(y)`, `ξ(0) = s(y)`.
pub fn hamilton_flow<C: Scalar>(
    symbol: &PrincipalSymbol<C>,
    y: &[f64],
    s: &Jet<f64>,
    opts: &FlowOptions,
) -> Result<CharStrip> {
    let h = Hamiltonian::new(symbol);
    flow_from_surface(&h, y, s, opts)
}

pub(crate) fn flow_from_surface(h: &Hamiltonian, y: &[f64], s: &Jet<f64>, opts: &FlowOptions) -> Result<CharStrip> {
    if s.nvars() != h.n() {
        return Err(Error::Dimension(format!("surface function must have {} variables", h.n())));
    }
    let p0: Vec<f64> = s.gradient().iter().map(|d| d.eval(y)).collect();
    integrate_strip(h, y, &p0, s.eval(y), opts)
}

/// End state `(x(t), ξ(t))` of the strip from `y`, stepping with at most `step`.
pub(crate) fn strip_end(h: &Hamiltonian, y: &[f64], s: &Jet<f64>, t: f64, step: f64) -> (Vec<f64>, f64) {
    let n = h.n();
    let steps = steps_for(t, step);
    let dt = t / steps as f64;
    let p0: Vec<f64> = s.gradient().iter().map(|d| d.eval(y)).collect();
    let mut state: Vec<f64> = y.iter().chain(&p0).copied().chain([s.eval(y)]).collect();
    if t != 0.0 {
        for _ in 0..steps {
            state = h.rk4_step(&state, dt);
        }
    }
    (state[..n].to_vec(), state[2 * n])
}
