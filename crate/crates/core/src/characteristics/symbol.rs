use crate::error::{Error, Result};
use crate::jet::{Jet, JetMatrix};
use crate::scalar::Scalar;

/// Principal symbol of a scalar operator or of a quasi-linear system.
///
/// Symbols are polynomials in `2n` variables: the base coordinates `x_0..x_{n-1}`
/// followed by the fiber coordinates `p_0..p_{n-1}`. The `x` dependence may be
/// a truncated series; the `p` dependence is exact.
#[derive(Clone, Debug)]
pub struct PrincipalSymbol<C> {
    n: usize,
    degree: usize,
    kind: SymbolKind<C>,
}

#[derive(Clone, Debug)]
pub enum SymbolKind<C> {
    /// `g(x, p) = Σ_{|α|=m} a_α(x) p^α`.
    Scalar(Jet<C>),
    /// Matrix `𝒜_jk(x, p)` with entries homogeneous of degree `m_k − n_j` in `p`;
    /// the determinant is the characteristic form.
    System {
        matrix: JetMatrix<C>,
        unknown_weights: Vec<usize>,
        equation_weights: Vec<usize>,
    },
}

/// Degree of `j` in the fiber variables when every term has the same degree.
fn fiber_degree<C: Scalar>(j: &Jet<C>, n: usize) -> Result<Option<usize>> {
    let mut degree = None;
    for (k, _) in j.terms() {
        let d: usize = (n..2 * n).map(|i| k.get(i) as usize).sum();
        match degree {
            None => degree = Some(d),
            Some(e) if e != d => {
                return Err(Error::Symbol(format!(
                    "symbol is not homogeneous in p (degrees {e} and {d})"
                )))
            }
            _ => {}
        }
    }
    Ok(degree)
}

impl<C: Scalar> PrincipalSymbol<C> {
    pub fn scalar(n: usize, g: Jet<C>) -> Result<Self> {
        if n == 0 || g.nvars() != 2 * n {
            return Err(Error::Dimension(format!(
                "a symbol in {n} dimensions is a jet in {} variables, found {}",
                2 * n,
                g.nvars()
            )));
        }
        let degree = fiber_degree(&g, n)?.ok_or_else(|| Error::Symbol("zero symbol".into()))?;
        Ok(PrincipalSymbol {
            n,
            degree,
            kind: SymbolKind::Scalar(g),
        })
    }

    /// Entry `(j, k)` must be homogeneous of degree `unknown_weights[k] − equation_weights[j]`.
    pub fn system(
        n: usize,
        matrix: JetMatrix<C>,
        unknown_weights: Vec<usize>,
        equation_weights: Vec<usize>,
    ) -> Result<Self> {
        let d = matrix.rows();
        if matrix.cols() != d || unknown_weights.len() != d || equation_weights.len() != d {
            return Err(Error::Dimension("system symbol must be square with one weight per row and column".into()));
        }
        for j in 0..d {
            for k in 0..d {
                let e = matrix.get(j, k);
                if e.nvars() != 2 * n {
                    return Err(Error::Dimension(format!("symbol entry over {} variables", e.nvars())));
                }
                if let Some(deg) = fiber_degree(e, n)? {
                    if deg + equation_weights[j] != unknown_weights[k] {
                        return Err(Error::Symbol(format!(
                            "entry ({j}, {k}) has degree {deg}, weights require {}",
                            unknown_weights[k] as i64 - equation_weights[j] as i64
                        )));
                    }
                }
            }
        }
        let degree = unknown_weights.iter().sum::<usize>() - equation_weights.iter().sum::<usize>();
        Ok(PrincipalSymbol {
            n,
            degree,
            kind: SymbolKind::System {
                matrix,
                unknown_weights,
                equation_weights,
            },
        })
    }

    /// Number of base coordinates.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Homogeneity degree `m` of `g` (or of `det 𝒜`) in `p`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn kind(&self) -> &SymbolKind<C> {
        &self.kind
    }

    pub fn is_system(&self) -> bool {
        matches!(self.kind, SymbolKind::System { .. })
    }

    /// `g(x, p)` (or `det 𝒜(x, p)`) with jets substituted for `x` and `p`.
    pub fn on_jets(&self, xs: &[Jet<C>], ps: &[Jet<C>]) -> Result<Jet<C>> {
        if xs.len() != self.n || ps.len() != self.n {
            return Err(Error::Dimension(format!("symbol needs {} base and fiber arguments", self.n)));
        }
        let inners: Vec<Jet<C>> = xs.iter().chain(ps).cloned().collect();
        match &self.kind {
            SymbolKind::Scalar(g) => g.substitute(&inners),
            SymbolKind::System { matrix, .. } => matrix.try_map(|e| e.substitute(&inners))?.det(),
        }
    }

    pub fn eval(&self, x: &[C], p: &[C]) -> Result<C> {
        let as_jets = |v: &[C]| v.iter().map(|c| Jet::constant(0, 0, c.clone())).collect::<Vec<_>>();
        if x.len() != self.n || p.len() != self.n {
            return Err(Error::Dimension(format!("symbol needs {} base and fiber coordinates", self.n)));
        }
        Ok(self.on_jets(&as_jets(x), &as_jets(p))?.constant_term())
    }

    /// `c(x) = g(x, ∂s(x))` as a jet about `base` (coordinates relative to `base`).
    ///
    /// `s` is treated as a polynomial; the result is known to order `s.order() − 1`.
    pub fn on_surface(&self, s: &Jet<C>, base: &[C]) -> Result<Jet<C>> {
        if s.nvars() != self.n || base.len() != self.n {
            return Err(Error::Dimension(format!("surface function must have {} variables", self.n)));
        }
        if s.order() == 0 {
            return Err(Error::InsufficientOrder {
                what: "surface function".into(),
                have: 0,
                need: 1,
            });
        }
        let order = s.order() - 1;
        let at_origin = base.iter().all(Scalar::is_zero);
        let xs: Vec<Jet<C>> = (0..self.n)
            .map(|i| Jet::var(self.n, order, i).add_constant(&base[i]))
            .collect();
        let ps = s
            .gradient()
            .into_iter()
            .map(|d| if at_origin { Ok(d) } else { d.recenter(base, true) })
            .collect::<Result<Vec<_>>>()?;
        self.on_jets(&xs, &ps)
    }

    pub fn to_f64(&self) -> PrincipalSymbol<f64> {
        let kind = match &self.kind {
            SymbolKind::Scalar(g) => SymbolKind::Scalar(g.to_f64()),
            SymbolKind::System {
                matrix,
                unknown_weights,
                equation_weights,
            } => SymbolKind::System {
                matrix: JetMatrix::from_fn(matrix.rows(), matrix.cols(), |i, j| matrix.get(i, j).to_f64()),
                unknown_weights: unknown_weights.clone(),
                equation_weights: equation_weights.clone(),
            },
        };
        PrincipalSymbol {
            n: self.n,
            degree: self.degree,
            kind,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn laplacian_symbol_is_quadratic() {
        let g = Jet::from_terms(4, 2, [(vec![0, 0, 2, 0], q(1, 1)), (vec![0, 0, 0, 2], q(1, 1))]);
        let sym = PrincipalSymbol::scalar(2, g).unwrap();
        assert_eq!(sym.degree(), 2);
        assert_eq!(sym.eval(&[q(3, 1), q(5, 1)], &[q(1, 1), q(2, 1)]).unwrap(), q(5, 1));
    }

    #[test]
    fn inhomogeneous_symbol_is_rejected() {
        let g = Jet::from_terms(2, 2, [(vec![0, 1], q(1, 1)), (vec![0, 2], q(1, 1))]);
        assert!(matches!(PrincipalSymbol::scalar(1, g), Err(Error::Symbol(_))));
    }

    #[test]
    fn system_degree_is_the_weight_sum() {
        // diag(p0², x0 p1²) in two dimensions
        let p0sq = Jet::monomial(4, 3, &[0, 0, 2, 0], q(1, 1));
        let xp1sq = Jet::monomial(4, 3, &[1, 0, 0, 2], q(1, 1));
        let m = JetMatrix::from_rows(vec![vec![p0sq, Jet::zero(4, 3)], vec![Jet::zero(4, 3), xp1sq]]).unwrap();
        let sym = PrincipalSymbol::system(2, m, vec![2, 2], vec![0, 0]).unwrap();
        assert_eq!(sym.degree(), 4);
        assert_eq!(sym.eval(&[q(2, 1), q(0, 1)], &[q(1, 1), q(3, 1)]).unwrap(), q(18, 1));
    }

    #[test]
    fn surface_restriction_of_transport() {
        // g = p0, s = x1 − x0²: c = ∂_0 s = −2 x0
        let g = Jet::monomial(4, 1, &[0, 0, 1, 0], q(1, 1));
        let sym = PrincipalSymbol::scalar(2, g).unwrap();
        let s = Jet::from_terms(2, 4, [(vec![0, 1], q(1, 1)), (vec![2, 0], q(-1, 1))]);
        let c = sym.on_surface(&s, &[q(0, 1), q(0, 1)]).unwrap();
        assert_eq!(c, Jet::monomial(2, 3, &[1, 0], q(-2, 1)));
        // about (1, 0) the same function reads −2 − 2 y0
        let c1 = sym.on_surface(&s, &[q(1, 1), q(0, 1)]).unwrap();
        assert_eq!(c1.constant_term(), q(-2, 1));
        assert_eq!(c1.coeff(&[1, 0]), q(-2, 1));
    }
}
