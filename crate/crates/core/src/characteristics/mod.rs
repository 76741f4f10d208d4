//! Characteristic analysis of a Cauchy problem on a hypersurface `s = 0`:
//! principal symbols, the characteristic and non-exceptionality tests,
//! bicharacteristic strips, the Hamilton-Jacobi phase that uniformizes a
//! solution ramified along the characteristic conoid, and conoid sampling.

mod conoid;
mod embedding_symbol;
mod flow;
mod hj;
mod symbol;

pub use conoid::{conoid_sample, strips_csv, ConoidOptions, ConoidSample};
pub use embedding_symbol::{conormal_determinant, embedding_symbol, proportionality_factor};
pub use flow::{hamilton_flow, integrate_strip, CharStrip, FlowOptions, Hamiltonian, StripSample, ZERO_VELOCITY_TOL};
pub use hj::{
    shoot_xi, solve_hj_series, uniformize_eval, ShootingOptions, UniformizationMap, UniformizedPoint, BRANCH_TOL,
    DEFAULT_TRUST_RADIUS,
};
pub use symbol::{PrincipalSymbol, SymbolKind};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::scalar::{Mode, Scalar};

/// Float values at most this large count as zero.
pub const FLOAT_ZERO_TOL: f64 = 1e-12;

fn vanishes<C: Scalar>(c: &C) -> bool {
    match C::MODE {
        Mode::Exact => c.is_zero(),
        Mode::Float => c.abs_f64() <= FLOAT_ZERO_TOL,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicTest<C> {
    /// `g(x, ∂s(x))`, or `det 𝒜(x, ∂s(x))` for a system.
    pub value: C,
    pub characteristic: bool,
}

pub fn is_characteristic<C: Scalar>(symbol: &PrincipalSymbol<C>, x: &[C], s: &Jet<C>) -> Result<CharacteristicTest<C>> {
    if x.len() != symbol.n() || s.nvars() != symbol.n() {
        return Err(Error::Dimension(format!("point and surface need {} coordinates", symbol.n())));
    }
    let p: Vec<C> = s.gradient().iter().map(|d| d.eval(x)).collect();
    let value = symbol.eval(x, &p)?;
    Ok(CharacteristicTest {
        characteristic: vanishes(&value),
        value,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Exceptionality<C> {
    /// The restriction of `c(x) = g(x, ∂s(x))` to the surface has a nonzero
    /// derivative along `direction`.
    NonExceptional { direction: Vec<C>, derivative: C },
    /// Every tangential derivative vanishes; exceptionality is not decided.
    Inconclusive,
}

impl<C> Exceptionality<C> {
    pub fn is_non_exceptional(&self) -> bool {
        matches!(self, Exceptionality::NonExceptional { .. })
    }
}

/// Sufficient test for a non-exceptional characteristic point: some derivative
/// of `c(x) = g(x, ∂s(x))` tangent to `s = 0` at `x` is nonzero.
///
/// Tangent directions are the coordinate vectors projected orthogonally to
/// `∇s(x)`; the first one with a nonzero derivative is the witness.
pub fn is_nonexceptional<C: Scalar>(symbol: &PrincipalSymbol<C>, x: &[C], s: &Jet<C>) -> Result<Exceptionality<C>> {
    let test = is_characteristic(symbol, x, s)?;
    if !test.characteristic {
        return Err(Error::Symbol(format!(
            "point is not characteristic (value {:e})",
            test.value.to_f64()
        )));
    }
    let c = symbol.on_surface(s, x)?;
    let grad_c: Vec<C> = (0..symbol.n()).map(|i| c.coeff_at(crate::MultiIndex::unit(i))).collect();
    tangential_witness(&grad_c, &s.gradient().iter().map(|d| d.eval(x)).collect::<Vec<_>>())
}

/// First tangent direction (projected coordinate vector) along which `grad` is nonzero.
fn tangential_witness<C: Scalar>(grad: &[C], normal: &[C]) -> Result<Exceptionality<C>> {
    let nn = normal.iter().fold(C::zero(), |a, v| a + v.clone() * v.clone());
    let inv = nn
        .inv()
        .ok_or_else(|| Error::Symbol("surface function has a vanishing gradient".into()))?;
    for i in 0..normal.len() {
        let direction: Vec<C> = (0..normal.len())
            .map(|j| {
                let e = if i == j { C::one() } else { C::zero() };
                e - normal[i].clone() * normal[j].clone() * inv.clone()
            })
            .collect();
        if direction.iter().all(vanishes) {
            continue;
        }
        let derivative = grad
            .iter()
            .zip(&direction)
            .fold(C::zero(), |a, (g, d)| a + g.clone() * d.clone());
        if !vanishes(&derivative) {
            return Ok(Exceptionality::NonExceptional { direction, derivative });
        }
    }
    Ok(Exceptionality::Inconclusive)
}
