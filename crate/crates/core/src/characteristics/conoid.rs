//! Sampling of the characteristic conoid: the union of bicharacteristics
//! issued from a characteristic point.

use std::fmt::Write as _;

use super::flow::{integrate_strip, CharStrip, FlowOptions, Hamiltonian};
use super::symbol::PrincipalSymbol;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::par::{par_map, ExecPolicy};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct ConoidOptions {
    /// Covectors `λ ∂s(vertex)` per start point, `λ` spread over `[−1, 1] \ {0}`.
    pub rays: usize,
    pub flow: FlowOptions,
    /// Further start points (e.g. neighbouring characteristic points); their
    /// strips start with `p = ∂s(y)`, `ξ = s(y)`.
    pub nearby: Vec<Vec<f64>>,
}

impl Default for ConoidOptions {
    fn default() -> Self {
        ConoidOptions {
            rays: 8,
            flow: FlowOptions::default(),
            nearby: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConoidSample {
    pub vertex: Vec<f64>,
    pub strips: Vec<CharStrip>,
    /// Some strip from the vertex has zero initial velocity, so the conoid
    /// degenerates to a point there.
    pub possibly_exceptional: bool,
}

fn ray_scales(rays: usize) -> Vec<f64> {
    let half = rays.div_ceil(2).max(1) as f64;
    (0..rays)
        .map(|r| {
            let mag = (r / 2 + 1) as f64 / half;
            if r % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

pub fn conoid_sample<C: Scalar>(
    symbol: &PrincipalSymbol<C>,
    vertex: &[f64],
    s: &Jet<f64>,
    opts: &ConoidOptions,
    policy: ExecPolicy,
) -> Result<ConoidSample> {
    let h = Hamiltonian::new(symbol);
    let n = h.n();
    if vertex.len() != n || s.nvars() != n {
        return Err(Error::Dimension(format!("conoid vertex and surface need {n} coordinates")));
    }
    let grad = s.gradient();
    let ds: Vec<f64> = grad.iter().map(|d| d.eval(vertex)).collect();
    let g = h.value(vertex, &ds);
    if g.abs() > 1e-12 {
        return Err(Error::Symbol(format!("conoid vertex {vertex:?} is not characteristic (g = {g:e})")));
    }
    let xi0 = s.eval(vertex);
    let mut starts: Vec<(Vec<f64>, Vec<f64>, f64)> = ray_scales(opts.rays)
        .into_iter()
        .map(|l| (vertex.to_vec(), ds.iter().map(|v| l * v).collect(), xi0))
        .collect();
    let from_vertex = starts.len();
    for y in &opts.nearby {
        if y.len() != n {
            return Err(Error::Dimension(format!("start point {y:?} needs {n} coordinates")));
        }
        starts.push((y.clone(), grad.iter().map(|d| d.eval(y)).collect(), s.eval(y)));
    }
    let strips = par_map(policy, &starts, |(y, p, xi)| integrate_strip(&h, y, p, *xi, &opts.flow))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let possibly_exceptional = strips[..from_vertex].iter().any(CharStrip::is_stationary);
    Ok(ConoidSample {
        vertex: vertex.to_vec(),
        strips,
        possibly_exceptional,
    })
}

/// CSV with header `t,x1..xn,p1..pn,xi,g_drift`, one row per sample.
pub fn strips_csv(strips: &[CharStrip], n: usize) -> String {
    let mut out = String::from("t");
    for prefix in ["x", "p"] {
        for i in 1..=n {
            let _ = write!(out, ",{prefix}{i}");
        }
    }
    out.push_str(",xi,g_drift\n");
    for strip in strips {
        for s in &strip.samples {
            let _ = write!(out, "{}", s.t);
            for v in s.x.iter().chain(&s.p) {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{},{}", s.xi, s.drift);
        }
    }
    out
}
