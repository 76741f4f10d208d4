//! JSON formats: the metric input document and jet coefficient lists.
//!
//! A metric document lists the upper-triangular entries `g_ij` (indices start
//! at 1) as polynomial terms `[e1, …, en, num, den]`, optionally plus
//! generators `coeff · sin/cos/exp(λ x_var)`. Instead of (or besides) a metric
//! it may carry a scalar principal symbol `g(x, p)` with a surface `s` and a
//! vertex, for characteristic analysis alone.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::characteristics::PrincipalSymbol;
use crate::error::{Error, Result};
use crate::jet::{cos_jet, exp_jet, sin_jet, Jet};
use crate::metric::MetricJet;
use crate::scalar::{parse_rational, Mode, Rational, Scalar};

/// An integer or a rational written as a string (`"3"`, `"-1/4"`, `"0.5"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Text(String),
}

impl Number {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            Number::Int(v) => Ok(Rational::from_integer((*v).into())),
            Number::Text(t) => parse_rational(t).ok_or_else(|| Error::Schema(format!("not a rational: {t:?}"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    #[serde(default)]
    pub sin: Option<Number>,
    #[serde(default)]
    pub cos: Option<Number>,
    #[serde(default)]
    pub exp: Option<Number>,
    /// 1-based variable the generator depends on.
    pub var: usize,
    #[serde(default)]
    pub coeff: Option<Number>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    #[serde(default)]
    pub terms: Vec<Vec<Number>>,
    #[serde(default)]
    pub generators: Vec<Generator>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolInput {
    /// Terms `[e(x1..xn), e(p1..pn), num, den]` of a polynomial homogeneous in `p`.
    pub terms: Vec<Vec<Number>>,
    /// Terms `[e1..en, num, den]` of the surface function `s`.
    pub surface: Vec<Vec<Number>>,
    /// Characteristic point on `s = 0`; the origin when omitted.
    #[serde(default)]
    pub vertex: Option<Vec<Number>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricInput {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "exact")]
    pub mode: Mode,
    /// Singularity exponent `l` of the admissible form; 1 when omitted.
    #[serde(default)]
    pub l: Option<u32>,
    #[serde(default)]
    pub entries: Vec<Entry>,
    #[serde(default)]
    pub scalar_symbol: Option<SymbolInput>,
}

fn exact() -> Mode {
    Mode::Exact
}

impl MetricInput {
    /// Parses and validates a document.
    pub fn from_json(text: &str) -> Result<Self> {
        let input: MetricInput = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 || n > crate::jet::MAX_VARS / 2 {
            return Err(Error::Schema(format!("n must lie in 1..={}", crate::jet::MAX_VARS / 2)));
        }
        if self.k == 0 {
            return Err(Error::Schema("K must be positive".into()));
        }
        if self.entries.is_empty() && self.scalar_symbol.is_none() {
            return Err(Error::Schema("document has neither metric entries nor a scalar_symbol".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if e.i == 0 || e.j == 0 || e.i > n || e.j > n {
                return Err(Error::Schema(format!("entry ({}, {}) out of range 1..={n}", e.i, e.j)));
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::Schema(format!("entry ({}, {}) given twice", e.i, e.j)));
            }
            parse_terms(&e.terms, n)?;
            for g in &e.generators {
                generator_parts(g, n)?;
            }
        }
        if let Some(s) = &self.scalar_symbol {
            parse_terms(&s.terms, 2 * n)?;
            parse_terms(&s.surface, n)?;
            if let Some(v) = &s.vertex {
                if v.len() != n {
                    return Err(Error::Schema(format!("vertex needs {n} coordinates")));
                }
                v.iter().map(Number::to_rational).collect::<Result<Vec<_>>>()?;
            }
        }
        Ok(())
    }

    pub fn has_metric(&self) -> bool {
        !self.entries.is_empty()
    }

    pub fn singular_exponent(&self) -> u32 {
        self.l.unwrap_or(1)
    }

    /// The metric expanded to `order`; missing entries are zero.
    pub fn metric<C: Scalar>(&self, order: usize) -> Result<MetricJet<C>> {
        let n = self.n;
        let mut g = vec![vec![Jet::zero(n, order); n]; n];
        for e in &self.entries {
            let mut jet = jet_from_terms(&e.terms, n, order)?;
            for gen in &e.generators {
                let (kind, lambda, var, coeff) = generator_parts(gen, n)?;
                let lambda = C::from_rational(&lambda);
                let zero = C::zero();
                let f = match kind {
                    "sin" => sin_jet(n, order, var, &lambda, &zero)?,
                    "cos" => cos_jet(n, order, var, &lambda, &zero)?,
                    _ => exp_jet(n, order, var, &lambda, &zero)?,
                };
                jet = &jet + &f.scale(&C::from_rational(&coeff));
            }
            let (i, j) = (e.i - 1, e.j - 1);
            g[i][j] = jet.clone();
            g[j][i] = jet;
        }
        MetricJet::from_fn(n, |i, j| g[i][j].clone())
    }

    /// The scalar symbol, surface (to order `K`) and vertex, if present.
    pub fn symbol<C: Scalar>(&self) -> Result<Option<(PrincipalSymbol<C>, Jet<C>, Vec<C>)>> {
        let Some(s) = &self.scalar_symbol else {
            return Ok(None);
        };
        let n = self.n;
        let terms = parse_terms(&s.terms, 2 * n)?;
        let degree = terms.iter().map(|(e, _)| e.iter().sum::<u32>() as usize).max().unwrap_or(0);
        let g = Jet::from_terms(2 * n, degree, terms.into_iter().map(|(e, c)| (e, C::from_rational(&c))));
        let sym = PrincipalSymbol::scalar(n, g).map_err(|e| Error::Schema(format!("scalar_symbol: {e}")))?;
        let surface = jet_from_terms(&s.surface, n, self.k)?;
        let vertex = match &s.vertex {
            Some(v) => v
                .iter()
                .map(|c| c.to_rational().map(|r| C::from_rational(&r)))
                .collect::<Result<Vec<_>>>()?,
            None => vec![C::zero(); n],
        };
        Ok(Some((sym, surface, vertex)))
    }
}

fn generator_parts(g: &Generator, n: usize) -> Result<(&'static str, Rational, usize, Rational)> {
    let kinds: Vec<(&'static str, &Number)> = [("sin", &g.sin), ("cos", &g.cos), ("exp", &g.exp)]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect();
    let [(kind, lambda)] = kinds[..] else {
        return Err(Error::Schema("a generator names exactly one of sin, cos, exp".into()));
    };
    if g.var == 0 || g.var > n {
        return Err(Error::Schema(format!("generator variable {} out of range 1..={n}", g.var)));
    }
    let coeff = match &g.coeff {
        Some(c) => c.to_rational()?,
        None => Rational::from_integer(1.into()),
    };
    Ok((kind, lambda.to_rational()?, g.var - 1, coeff))
}

fn parse_terms(terms: &[Vec<Number>], nvars: usize) -> Result<Vec<(Vec<u32>, Rational)>> {
    terms
        .iter()
        .map(|t| {
            if t.len() != nvars + 2 {
                return Err(Error::Schema(format!("term {t:?} needs {nvars} exponents, num and den")));
            }
            let exps = t[..nvars]
                .iter()
                .map(|e| match e {
                    Number::Int(v) if (0..=u32::MAX as i64).contains(v) => Ok(*v as u32),
                    _ => Err(Error::Schema(format!("exponent {e:?} is not a non-negative integer"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let num = t[nvars].to_rational()?;
            let den = t[nvars + 1].to_rational()?;
            if num::Zero::is_zero(&den) {
                return Err(Error::Schema(format!("term {t:?} has a zero denominator")));
            }
            Ok((exps, num / den))
        })
        .collect()
}

fn jet_from_terms<C: Scalar>(terms: &[Vec<Number>], nvars: usize, order: usize) -> Result<Jet<C>> {
    let parsed = parse_terms(terms, nvars)?;
    Ok(Jet::from_terms(nvars, order, parsed.into_iter().map(|(e, c)| (e, C::from_rational(&c)))))
}

/// A scalar as JSON: exact values as `"num/den"` strings, floats as numbers
/// (non-finite floats as strings).
pub fn scalar_json<C: Scalar>(c: &C) -> Value {
    match c.to_rational() {
        Some(r) => Value::String(r.to_string()),
        None => float_json(c.to_f64()),
    }
}

pub fn float_json(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or_else(|| Value::String(v.to_string()), Value::Number)
}

fn integer_json(v: &num::BigInt) -> Value {
    use num::ToPrimitive;
    v.to_i64().map_or_else(|| Value::String(v.to_string()), |i| json!(i))
}

/// Coefficients of a jet in graded order: `[multi-index, num, den]` in exact
/// mode, `[multi-index, value]` in float mode.
pub fn jet_json<C: Scalar>(j: &Jet<C>) -> Value {
    let terms: Vec<Value> = j
        .terms()
        .map(|(k, v)| {
            let e = k.exponents(j.nvars());
            match v.to_rational() {
                Some(r) => json!([e, integer_json(r.numer()), integer_json(r.denom())]),
                None => json!([e, float_json(v.to_f64())]),
            }
        })
        .collect();
    json!({ "nvars": j.nvars(), "order": j.order(), "terms": terms })
}
