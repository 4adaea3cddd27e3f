//! Dense complex linear algebra at desk scale.
//!
//! Everything here works on small row-major matrices (a few hundred rows at
//! most). The Hermitian eigensolver is a cyclic Jacobi method, which is slow
//! asymptotically but accurate to a few ulps of `‖A‖` and has no external
//! dependency.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative Hermiticity tolerance accepted by [`herm_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a matrix from row vectors. Rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(ComplexMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Column vector.
    pub fn column(v: &[C64]) -> Self {
        ComplexMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |A - A†|` entrywise.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }

    /// Deviation `max |A†A - I|` from having orthonormal columns.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().matmul(self);
        (&g - &Self::identity(self.cols)).max_abs()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A ⊗ B`.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self[(r0 + r, c0 + c)] = block[(r, c)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> ComplexMatrix {
        Self::from_fn(rows, cols, |r, c| self[(r0 + r, c0 + c)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Hermitian inner product `Σ conj(a_i) b_i`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermEig {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |r, c| {
            let mut s = ZERO;
            for k in 0..n {
                if fv[k] != 0.0 {
                    s += v[(r, k)] * v[(c, k)].conj() * fv[k];
                }
            }
            s
        })
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The input is symmetrized before iterating; it must be Hermitian to within
/// `1e-10 · max|A|`.
pub fn herm_eig(a: &ComplexMatrix) -> Result<HermEig> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::DegenerateNumerics("non-finite matrix entry".into()));
    }
    let scale = a.max_abs();
    let dev = a.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);
    let fro = m.frobenius();
    if fro == 0.0 || n == 1 {
        return Ok(sorted(m, v));
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-16 * fro {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q, fro);
            }
        }
    }
    Ok(sorted(m, v))
}

fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, fro: f64) {
    let n = m.rows();
    let apq = m[(p, q)];
    let abs = apq.norm();
    if abs <= 1e-300 || abs <= 1e-19 * fro {
        m[(p, q)] = ZERO;
        m[(q, p)] = ZERO;
        return;
    }
    let phase = apq / abs;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * abs);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = [[c, s], [-s·conj(φ), c·conj(φ)]] on the (p, q) plane.
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c + akq * jqp;
        m[(k, q)] = akp * s + akq * jqq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c + aqk * jqp.conj();
        m[(q, k)] = apk * s + aqk * jqq.conj();
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(app - t * abs, 0.0);
    m[(q, q)] = C64::new(aqq + t * abs, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * jqp;
        v[(k, q)] = vkp * s + vkq * jqq;
    }
}

fn sorted(m: ComplexMatrix, v: ComplexMatrix) -> HermEig {
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    HermEig { values, vectors }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(a)?.min())
}

/// Principal square root of a PSD matrix; eigenvalues in `[-clamp_tol, 0)` are
/// treated as zero.
pub fn psd_sqrt(a: &ComplexMatrix, clamp_tol: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(a)?;
    if eig.min() < -clamp_tol {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(eig.apply(|l| l.max(0.0).sqrt()))
}

/// Rank-revealing factorization `A = L L†` of a PSD matrix.
///
/// The rank counts eigenvalues above `rank_tol · λ_max`; `L` has exactly that
/// many columns.
pub fn rank_factor(a: &ComplexMatrix, rank_tol: f64) -> Result<(ComplexMatrix, usize)> {
    let eig = herm_eig(a)?;
    let lmax = eig.max().max(0.0);
    if eig.min() < -1e-6 * a.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    let rank = if lmax == 0.0 {
        0
    } else {
        eig.values.iter().filter(|&&l| l > rank_tol * lmax).count()
    };
    let n = a.rows();
    let l = ComplexMatrix::from_fn(n, rank, |r, c| eig.vectors[(r, c)] * eig.values[c].sqrt());
    Ok((l, rank))
}

/// Singular values in descending order, via the eigenvalues of `A†A`.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let g = a.adjoint().matmul(a);
    Ok(herm_eig(&g)?
        .values
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect())
}

/// Orthonormalizes the columns of `a` in order with two passes of modified
/// Gram-Schmidt. Columns that are (numerically) dependent on earlier ones are
/// replaced by unit vectors completing the basis, so the result is always
/// unitary when `a` is square.
pub fn orthonormalize_columns(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(a.cols());
    let mut next_unit = 0;
    for c in 0..a.cols() {
        let mut v = a.col(c);
        let orig = norm(&v);
        project_out(&mut v, &basis);
        let mut nv = norm(&v);
        if nv <= 1e-10 * orig.max(scale) || nv == 0.0 {
            // Complete with the first standard basis vector that is not
            // already spanned.
            loop {
                assert!(next_unit < n, "cannot complete basis: too many columns");
                let mut e = vec![ZERO; n];
                e[next_unit] = ONE;
                next_unit += 1;
                project_out(&mut e, &basis);
                let ne = norm(&e);
                if ne > 1e-3 {
                    v = e;
                    nv = ne;
                    break;
                }
            }
        }
        for z in &mut v {
            *z /= nv;
        }
        basis.push(v);
    }
    ComplexMatrix::from_fn(n, basis.len(), |r, c| basis[c][r])
}

fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for b in basis {
            let proj = inner(b, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= proj * y;
            }
        }
    }
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the diagonal
/// of `R` made positive (Gram-Schmidt produces exactly that normalization).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    assert!(n >= 1, "dimension must be positive");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    });
    orthonormalize_columns(&g)
}

/// [`haar_unitary`] with a fresh generator seeded from `seed`.
pub fn haar_unitary_seeded(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_unitary(n, &mut rng)
}

/// Dense real symmetric PSD system solved through a pivoted Cholesky
/// factorization. Pivots below `tol · max diag` are dropped, which restricts
/// the solve to a maximal independent subset of rows.
#[derive(Clone, Debug)]
pub struct PivotedCholesky {
    n: usize,
    /// Selected pivot indices, in elimination order.
    pivots: Vec<usize>,
    /// Lower-triangular factor of the selected principal submatrix, row-major
    /// `rank x rank`.
    factor: Vec<f64>,
}

impl PivotedCholesky {
    pub fn new(a: &[f64], n: usize, tol: f64) -> Self {
        assert_eq!(a.len(), n * n);
        let mut work = a.to_vec();
        let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0, f64::max);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rank = 0;
        // Outer-product pivoted Cholesky on the permuted working copy; row k
        // of `l` holds column k of the factor for the permuted order.
        let mut l = vec![0.0; n * n];
        for k in 0..n {
            let (best, best_val) = (k..n).map(|i| (i, work[perm[i] * n + perm[i]])).fold(
                (k, f64::NEG_INFINITY),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
            if best_val <= tol * max_diag || best_val <= 0.0 {
                break;
            }
            perm.swap(k, best);
            for j in 0..k {
                l.swap(k * n + j, best * n + j);
            }
            let pk = perm[k];
            let d = work[pk * n + pk].sqrt();
            l[k * n + k] = d;
            for i in k + 1..n {
                let pi = perm[i];
                l[i * n + k] = work[pi * n + pk] / d;
            }
            for i in k + 1..n {
                let pi = perm[i];
                for j in k + 1..=i {
                    let pj = perm[j];
                    let upd = l[i * n + k] * l[j * n + k];
                    work[pi * n + pj] -= upd;
                    if pi != pj {
                        work[pj * n + pi] -= upd;
                    }
                }
            }
            rank += 1;
        }
        let pivots = perm[..rank].to_vec();
        let mut factor = vec![0.0; rank * rank];
        for i in 0..rank {
            for j in 0..=i {
                factor[i * rank + j] = l[i * n + j];
            }
        }
        PivotedCholesky { n, pivots, factor }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Solves `A x = b` using only the pivot rows and columns; the other
    /// entries of `x` are zero.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let r = self.rank();
        let mut y: Vec<f64> = self.pivots.iter().map(|&p| b[p]).collect();
        for i in 0..r {
            let mut s = y[i];
            for j in 0..i {
                s -= self.factor[i * r + j] * y[j];
            }
            y[i] = s / self.factor[i * r + i];
        }
        for i in (0..r).rev() {
            let mut s = y[i];
            for j in i + 1..r {
                s -= self.factor[j * r + i] * y[j];
            }
            y[i] = s / self.factor[i * r + i];
        }
        let mut x = vec![0.0; self.n];
        for (i, &p) in self.pivots.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}
