//! Matrix polynomials over the free group algebra.
//!
//! An element of `M_m(C[F_n])` is stored as a finite map from reduced words to
//! nonzero `m x m` complex coefficient matrices, `b = Σ_w B_w ⊗ w`. The
//! involution is `(B ⊗ w)* = B† ⊗ w⁻¹`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::words::ReducedWord;

/// Relative magnitude below which coefficient entries are dropped after arithmetic.
pub const PRUNE_REL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial {
    m: usize,
    n: usize,
    terms: BTreeMap<ReducedWord, ComplexMatrix>,
}

impl MatrixPolynomial {
    pub fn zero(m: usize, n: usize) -> Self {
        assert!(m >= 1, "coefficient size must be positive");
        MatrixPolynomial {
            m,
            n,
            terms: BTreeMap::new(),
        }
    }

    /// `λ·I_m ⊗ e`.
    pub fn scalar(m: usize, n: usize, value: C64) -> Self {
        let mut p = Self::zero(m, n);
        p.add_term(
            ReducedWord::identity(),
            ComplexMatrix::identity(m).scale(value),
        )
        .expect("identity term is always valid");
        p
    }

    pub fn one(m: usize, n: usize) -> Self {
        Self::scalar(m, n, C64::new(1.0, 0.0))
    }

    /// `coef ⊗ word` for a single term.
    pub fn monomial(n: usize, word: ReducedWord, coef: ComplexMatrix) -> Result<Self> {
        let mut p = Self::zero(coef.rows(), n);
        p.add_term(word, coef)?;
        Ok(p)
    }

    /// Collects `(word, matrix)` terms, summing repeated words.
    pub fn from_terms(
        m: usize,
        n: usize,
        terms: impl IntoIterator<Item = (ReducedWord, ComplexMatrix)>,
    ) -> Result<Self> {
        let mut p = Self::zero(m, n);
        for (w, c) in terms {
            p.add_term(w, c)?;
        }
        p.prune();
        Ok(p)
    }

    /// Adds `coef ⊗ word` in place. Does not prune.
    pub fn add_term(&mut self, word: ReducedWord, coef: ComplexMatrix) -> Result<()> {
        if coef.rows() != self.m || coef.cols() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "coefficient is {}x{}, expected {}x{}",
                coef.rows(),
                coef.cols(),
                self.m,
                self.m
            )));
        }
        if word.max_generator() > self.n {
            return Err(Error::MalformedLetter {
                letter: word.max_generator() as i32,
                n: self.n,
            });
        }
        match self.terms.get_mut(&word) {
            Some(existing) => *existing = &*existing + &coef,
            None => {
                if coef.max_abs() > 0.0 {
                    self.terms.insert(word, coef);
                }
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<ReducedWord, ComplexMatrix> {
        &self.terms
    }

    pub fn coefficient(&self, w: &ReducedWord) -> Option<&ComplexMatrix> {
        self.terms.get(w)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest entry magnitude over all coefficients.
    pub fn max_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(ComplexMatrix::max_abs)
            .fold(0.0, f64::max)
    }

    /// Maximal word length `d` in the support.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(ReducedWord::len).max().unwrap_or(0)
    }

    /// Changes the ambient generator count. Fails if a word uses a larger index.
    pub fn with_generators(mut self, n: usize) -> Result<Self> {
        if let Some(w) = self.terms.keys().find(|w| w.max_generator() > n) {
            return Err(Error::MalformedLetter {
                letter: w.max_generator() as i32,
                n,
            });
        }
        self.n = n;
        Ok(self)
    }

    /// Zeroes entries below `PRUNE_REL · max_coeff` and removes empty terms.
    pub fn prune(&mut self) {
        let cutoff = PRUNE_REL * self.max_coeff();
        self.terms.retain(|_, c| {
            for r in 0..c.rows() {
                for k in 0..c.cols() {
                    if c[(r, k)].norm() < cutoff {
                        c[(r, k)] = ZERO;
                    }
                }
            }
            c.max_abs() > 0.0
        });
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.m != other.m || self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "(m={}, n={}) vs (m={}, n={})",
                self.m, self.n, other.m, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone())?;
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zero(self.m, self.n);
        for (w, c) in &self.terms {
            out.terms.insert(w.clone(), c.scale(s));
        }
        out.prune();
        out
    }

    /// Ring product: `(ab)_w = Σ_{uv = w} A_u B_v`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(self.m, self.n);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.mul(v), a.matmul(b))?;
            }
        }
        out.prune();
        Ok(out)
    }

    /// `b*`: coefficient at `w` becomes `(B_{w⁻¹})†`.
    pub fn involute(&self) -> Self {
        let mut out = Self::zero(self.m, self.n);
        for (w, c) in &self.terms {
            out.terms.insert(w.inverse(), c.adjoint());
        }
        out
    }

    /// Max-norm of the coefficients of `b - b*`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut dev: f64 = 0.0;
        let zero = ComplexMatrix::zeros(self.m, self.m);
        for (w, c) in &self.terms {
            let partner = self.terms.get(&w.inverse()).unwrap_or(&zero);
            dev = dev.max((c - &partner.adjoint()).max_abs());
        }
        dev
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_defect() <= tol
    }

    /// Normalized canonical trace `(1/m) Σ_i (B_e)_ii`.
    pub fn trace(&self) -> C64 {
        self.terms
            .get(&ReducedWord::identity())
            .map_or(ZERO, |b| b.trace() / self.m as f64)
    }

    /// Max-norm of the coefficient difference `self - other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let zero = ComplexMatrix::zeros(self.m, self.m);
        let mut dev: f64 = 0.0;
        for (w, c) in &self.terms {
            let o = other.terms.get(w).unwrap_or(&zero);
            dev = dev.max((c - o).max_abs());
        }
        for (w, c) in &other.terms {
            if !self.terms.contains_key(w) {
                dev = dev.max(c.max_abs());
            }
        }
        Ok(dev)
    }
}

/// `Σ_k a_k* a_k`. The empty list gives the zero polynomial of the stated shape.
pub fn hermitian_square_sum(
    m: usize,
    n: usize,
    factors: &[MatrixPolynomial],
) -> Result<MatrixPolynomial> {
    let mut out = MatrixPolynomial::zero(m, n);
    for a in factors {
        if a.m != m || a.n != n {
            return Err(Error::DimensionMismatch(format!(
                "factor has (m={}, n={}), expected (m={m}, n={n})",
                a.m, a.n
            )));
        }
        let sq = a.involute().multiply(a)?;
        for (w, c) in sq.terms {
            out.add_term(w, c)?;
        }
    }
    out.prune();
    // Exact symmetrization: rounding in the products can leave ulp-level asymmetry.
    let sym = symmetrize(&out);
    Ok(sym)
}

/// `(b + b*) / 2`.
pub fn symmetrize(b: &MatrixPolynomial) -> MatrixPolynomial {
    let mut out = MatrixPolynomial::zero(b.m, b.n);
    for (w, c) in &b.terms {
        out.add_term(w.clone(), c.scale_real(0.5)).unwrap();
        out.add_term(w.inverse(), c.adjoint().scale_real(0.5))
            .unwrap();
    }
    out.prune();
    out
}

/// JSON form: `{"m":..,"n":..,"terms":[{"word":"x1*x2^-1","matrix":[[[re,im],..],..]},..]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolynomialJson {
    pub m: usize,
    pub n: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub word: String,
    pub matrix: MatrixJson,
}

/// Row-major nested `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(a: &ComplexMatrix) -> MatrixJson {
    (0..a.rows())
        .map(|r| a.row(r).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect();
    let a = ComplexMatrix::from_rows(&rows)?;
    if !a.is_finite() {
        return Err(Error::Parse("non-finite matrix entry".into()));
    }
    Ok(a)
}

pub fn vector_to_json(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_json(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

impl From<&MatrixPolynomial> for PolynomialJson {
    fn from(p: &MatrixPolynomial) -> Self {
        PolynomialJson {
            m: p.m,
            n: p.n,
            terms: p
                .terms
                .iter()
                .map(|(w, c)| TermJson {
                    word: w.to_string(),
                    matrix: matrix_to_json(c),
                })
                .collect(),
        }
    }
}

impl TryFrom<&PolynomialJson> for MatrixPolynomial {
    type Error = Error;

    fn try_from(j: &PolynomialJson) -> Result<Self> {
        if j.m == 0 {
            return Err(Error::Parse("m must be positive".into()));
        }
        let mut p = MatrixPolynomial::zero(j.m, j.n);
        for t in &j.terms {
            let w: ReducedWord = t.word.parse()?;
            p.add_term(w, matrix_from_json(&t.matrix)?)?;
        }
        // Terms are stored exactly as given so that JSON round-trips bit for bit;
        // only all-zero coefficient matrices are dropped.
        p.terms.retain(|_, c| c.max_abs() > 0.0);
        Ok(p)
    }
}

impl MatrixPolynomial {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PolynomialJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: PolynomialJson = serde_json::from_str(s)?;
        MatrixPolynomial::try_from(&j)
    }
}
