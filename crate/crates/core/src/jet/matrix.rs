//! Dense matrices with jet entries.

use super::Jet;
use crate::error::{Error, Result};
use crate::scalar::{Mode, Scalar};

/// Pivots whose magnitude falls below this fraction of the largest constant
/// entry are treated as zero in float mode.
const FLOAT_PIVOT_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct JetMatrix<C> {
    rows: usize,
    cols: usize,
    entries: Vec<Jet<C>>,
}

impl<C: Scalar> JetMatrix<C> {
    pub fn from_rows(rows: Vec<Vec<Jet<C>>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        let entries: Vec<Jet<C>> = rows.into_iter().flatten().collect();
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.nvars() != first.nvars()) {
                return Err(Error::Context("matrix entries over different variables".into()));
            }
        }
        Ok(JetMatrix {
            rows: nrows,
            cols: ncols,
            entries,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Jet<C>) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        JetMatrix { rows, cols, entries }
    }

    pub fn identity(dim: usize, nvars: usize, order: usize) -> Self {
        JetMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Jet::one(nvars, order)
            } else {
                Jet::zero(nvars, order)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet<C> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Jet<C>) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Jet<C>] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        JetMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map(&self, f: impl Fn(&Jet<C>) -> Jet<C>) -> Self {
        JetMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn try_map(&self, f: impl Fn(&Jet<C>) -> Result<Jet<C>>) -> Result<Self> {
        Ok(JetMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub fn mul(&self, other: &JetMatrix<C>) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "matrix product {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = self.get(i, 0).checked_mul(other.get(0, j))?;
                for k in 1..self.cols {
                    acc = acc.checked_add(&self.get(i, k).checked_mul(other.get(k, j))?)?;
                }
                out.push(acc);
            }
        }
        Ok(JetMatrix {
            rows: self.rows,
            cols: other.cols,
            entries: out,
        })
    }

    pub fn mul_vec(&self, v: &[Jet<C>]) -> Result<Vec<Jet<C>>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matrix with {} columns times vector of length {}",
                self.cols,
                v.len()
            )));
        }
        (0..self.rows)
            .map(|i| {
                let mut acc = self.get(i, 0).checked_mul(&v[0])?;
                for k in 1..self.cols {
                    acc = acc.checked_add(&self.get(i, k).checked_mul(&v[k])?)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// Constant terms as a row-major `f64` matrix.
    pub fn constant_part_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.constant_term().to_f64()).collect()
    }

    /// Determinant by cofactor expansion over column subsets.
    ///
    /// Division-free, so it is correct even when the constant part is singular.
    pub fn det(&self) -> Result<Jet<C>> {
        if self.rows != self.cols {
            return Err(Error::Dimension("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Err(Error::Dimension("determinant of an empty matrix".into()));
        }
        if n > 16 {
            return Err(Error::Dimension(format!("determinant of a {n}x{n} matrix is too large")));
        }
        let nvars = self.entries[0].nvars();
        let order = self.entries.iter().map(Jet::order).min().unwrap_or(0);
        // partial[mask] = signed sum over assignments of the first |mask| rows to the columns in mask
        let mut partial: Vec<Option<Jet<C>>> = vec![None; 1 << n];
        partial[0] = Some(Jet::one(nvars, order + n));
        for mask in 0usize..(1 << n) {
            let Some(acc) = partial[mask].take() else { continue };
            let row = mask.count_ones() as usize;
            if row == n {
                partial[mask] = Some(acc);
                continue;
            }
            for col in 0..n {
                if mask & (1 << col) != 0 || self.get(row, col).is_zero() {
                    continue;
                }
                let inversions = (mask >> (col + 1)).count_ones();
                let mut term = acc.checked_mul(self.get(row, col))?;
                if inversions % 2 == 1 {
                    term = -term;
                }
                let next = mask | (1 << col);
                partial[next] = Some(match partial[next].take() {
                    Some(p) => p.checked_add(&term)?,
                    None => term,
                });
            }
        }
        Ok(partial[(1 << n) - 1]
            .take()
            .unwrap_or_else(|| Jet::zero(nvars, order)))
    }

    /// LU factorization with pivots chosen among entries with invertible constant term.
    pub fn lu(&self) -> Result<JetLu<C>> {
        if self.rows != self.cols {
            return Err(Error::Dimension("LU of a non-square matrix".into()));
        }
        let n = self.rows;
        let scale = self
            .entries
            .iter()
            .map(|e| e.constant_term().abs_f64())
            .fold(0.0, f64::max);
        let mut a = self.entries.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivot_inv = Vec::with_capacity(n);
        for k in 0..n {
            let candidate = (k..n)
                .filter(|&i| {
                    let c = a[i * n + k].constant_term();
                    match C::MODE {
                        Mode::Exact => !c.is_zero(),
                        Mode::Float => c.abs_f64() > FLOAT_PIVOT_REL * scale && !c.is_zero(),
                    }
                })
                .max_by(|&i, &j| {
                    let ci = a[i * n + k].constant_term().abs_f64();
                    let cj = a[j * n + k].constant_term().abs_f64();
                    ci.total_cmp(&cj).then(j.cmp(&i))
                });
            let Some(p) = candidate else {
                let det = self.det()?;
                return Err(Error::Characteristic {
                    leading: det.leading_term(),
                });
            };
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = a[k * n + k].reciprocal()?;
            for i in (k + 1)..n {
                if a[i * n + k].is_zero() {
                    continue;
                }
                let factor = a[i * n + k].checked_mul(&inv)?;
                for j in (k + 1)..n {
                    let update = factor.checked_mul(&a[k * n + j])?;
                    a[i * n + j] = a[i * n + j].checked_sub(&update)?;
                }
                a[i * n + k] = factor;
            }
            pivot_inv.push(inv);
        }
        Ok(JetLu {
            n,
            lu: a,
            perm,
            pivot_inv,
        })
    }

    pub fn solve(&self, rhs: &[Jet<C>]) -> Result<Vec<Jet<C>>> {
        self.lu()?.solve(rhs)
    }
}

/// A reusable LU factorization `P A = L U` over jets.
#[derive(Clone, Debug)]
pub struct JetLu<C> {
    n: usize,
    lu: Vec<Jet<C>>,
    perm: Vec<usize>,
    pivot_inv: Vec<Jet<C>>,
}

impl<C: Scalar> JetLu<C> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[Jet<C>]) -> Result<Vec<Jet<C>>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(Error::Dimension(format!(
                "LU of size {n} applied to vector of length {}",
                rhs.len()
            )));
        }
        let mut y: Vec<Jet<C>> = self.perm.iter().map(|&p| rhs[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let l = &self.lu[i * n + j];
                if !l.is_zero() {
                    y[i] = y[i].checked_sub(&l.checked_mul(&y[j])?)?;
                }
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let u = &self.lu[i * n + j];
                if !u.is_zero() {
                    y[i] = y[i].checked_sub(&u.checked_mul(&y[j])?)?;
                }
            }
            y[i] = y[i].checked_mul(&self.pivot_inv[i])?;
        }
        Ok(y)
    }
}
