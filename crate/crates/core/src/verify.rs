//! Offline certificate checking. Every quantity is recomputed from the
//! certificate and `b` with polynomial arithmetic and dense linear algebra;
//! no solver output is trusted.

use std::collections::HashMap;

use serde_json::Value;

use crate::algebra::{hermitian_square_sum, matrix_from_json, vector_from_json, MatrixPolynomial};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, inner, norm, ComplexMatrix, C64, ZERO};
use crate::soscert::{
    default_eps_sos, GramCertificate, GramCertificateJson, MomentCertificate, MomentCertificateJson,
};
use crate::witness::WitnessJson;
use crate::words::{enumerate_basis, ReducedWord};

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub eps_psd: f64,
    /// `None` means `1e-6 · (1 + max |B_w|)`.
    pub eps_sos: Option<f64>,
    pub unitarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_psd: 1e-8,
            eps_sos: None,
            unitarity: 1e-8,
        }
    }
}

fn reject<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Rejected(msg.into()))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        reject(msg())
    }
}

/// Dispatches on the certificate's `kind` field and returns a one-line summary.
pub fn verify_certificate(text: &str, b: &MatrixPolynomial, tol: &Tolerances) -> Result<String> {
    let value: Value = serde_json::from_str(text)?;
    match value.get("kind").and_then(Value::as_str) {
        Some("sos") => {
            let j: GramCertificateJson = serde_json::from_value(value)?;
            verify_sos(&GramCertificate::from_json_value(&j)?, b, tol)
        }
        Some("moment") => {
            let j: MomentCertificateJson = serde_json::from_value(value)?;
            verify_moment(&MomentCertificate::from_json_value(&j)?, b, tol)
        }
        Some("witness") => {
            let j: WitnessJson = serde_json::from_value(value)?;
            verify_witness(&j, b, tol)
        }
        Some(other) => reject(format!("unknown certificate kind \"{other}\"")),
        None => reject("certificate has no \"kind\" field"),
    }
}

fn check_shape(
    m: usize,
    n: usize,
    degree: usize,
    basis: &[ReducedWord],
    b: &MatrixPolynomial,
) -> Result<()> {
    ensure(m == b.m() && n == b.n(), || {
        format!(
            "certificate is for (m={m}, n={n}), polynomial is (m={}, n={})",
            b.m(),
            b.n()
        )
    })?;
    ensure(basis == enumerate_basis(n, degree).as_slice(), || {
        format!("basis is not the shortlex word basis of degree {degree}")
    })
}

fn check_hermitian_psd(a: &ComplexMatrix, dim: usize, what: &str, eps_psd: f64) -> Result<f64> {
    ensure(a.rows() == dim && a.cols() == dim, || {
        format!("{what} is {}x{}, expected {dim}x{dim}", a.rows(), a.cols())
    })?;
    ensure(a.is_finite(), || format!("{what} has non-finite entries"))?;
    let dev = a.hermitian_deviation();
    ensure(dev <= 1e-9 * a.max_abs().max(1.0), || {
        format!("{what} is not Hermitian (deviation {dev:e})")
    })?;
    let min = herm_eig(a)?.min();
    ensure(min >= -eps_psd, || {
        format!("{what} has eigenvalue {min:e} < -{eps_psd:e}")
    })?;
    Ok(min)
}

/// `Σ_{v,w} G_{vw} ⊗ v⁻¹w` for a Gram matrix on `basis`.
fn gram_polynomial(
    gram: &ComplexMatrix,
    basis: &[ReducedWord],
    m: usize,
    n: usize,
) -> Result<MatrixPolynomial> {
    let mut p = MatrixPolynomial::zero(m, n);
    for (pv, v) in basis.iter().enumerate() {
        let v_inv = v.inverse();
        for (pw, w) in basis.iter().enumerate() {
            let block = gram.block(pv * m, pw * m, m, m);
            p.add_term(v_inv.mul(w), block)?;
        }
    }
    p.prune();
    Ok(p)
}

pub fn verify_sos(
    cert: &GramCertificate,
    b: &MatrixPolynomial,
    tol: &Tolerances,
) -> Result<String> {
    let (m, n) = (cert.m, cert.n);
    check_shape(m, n, cert.degree, &cert.basis, b)?;
    let eps_sos = tol.eps_sos.unwrap_or_else(|| default_eps_sos(b));
    let min = check_hermitian_psd(&cert.gram, cert.basis.len() * m, "Gram matrix", tol.eps_psd)?;

    let gram_gap = gram_polynomial(&cert.gram, &cert.basis, m, n)?.distance(b)?;
    ensure(gram_gap <= eps_sos, || {
        format!("Gram matrix reproduces b only to {gram_gap:e} > {eps_sos:e}")
    })?;

    for (k, a) in cert.factors.iter().enumerate() {
        ensure(a.m() == m && a.n() == n, || {
            format!("factor {k} has the wrong shape")
        })?;
        if let Some(w) = a
            .terms()
            .keys()
            .find(|w| cert.basis.binary_search(w).is_err())
        {
            return reject(format!("factor {k} uses word {w} outside the basis"));
        }
    }
    let residual = hermitian_square_sum(m, n, &cert.factors)?.distance(b)?;
    ensure(residual <= eps_sos, || {
        format!("factors reproduce b only to {residual:e} > {eps_sos:e}")
    })?;
    ensure(
        (cert.residual - residual).abs() <= 1e-12 + 1e-6 * residual && cert.residual.is_finite(),
        || {
            format!(
                "reported residual {:e} differs from recomputed {residual:e}",
                cert.residual
            )
        },
    )?;
    Ok(format!(
        "valid SOS certificate: {} factors, residual {residual:.3e}, min Gram eigenvalue {min:.3e}",
        cert.factors.len()
    ))
}

pub fn verify_moment(
    cert: &MomentCertificate,
    b: &MatrixPolynomial,
    tol: &Tolerances,
) -> Result<String> {
    let m = cert.m;
    check_shape(m, cert.n, cert.degree, &cert.basis, b)?;
    let dim = cert.basis.len() * m;
    let moment = &cert.moment;
    let min = check_hermitian_psd(moment, dim, "moment matrix", tol.eps_psd)?;

    // One representative entry per (g, i, j); every other entry must agree.
    let mut first: HashMap<(ReducedWord, usize, usize), C64> = HashMap::new();
    for (pv, v) in cert.basis.iter().enumerate() {
        let v_inv = v.inverse();
        for (pw, w) in cert.basis.iter().enumerate() {
            let g = v_inv.mul(w);
            for i in 0..m {
                for j in 0..m {
                    let z = moment[(pv * m + i, pw * m + j)];
                    let rep = *first.entry((g.clone(), i, j)).or_insert(z);
                    ensure((rep - z).norm() <= 1e-9, || {
                        format!("moment entries for ({g}, {i}, {j}) disagree")
                    })?;
                }
            }
        }
    }
    let mass: f64 = (0..m).map(|j| moment[(j, j)].re).sum();
    ensure((mass - 1.0).abs() <= 1e-9, || {
        format!("normalization is {mass}, expected 1")
    })?;

    let mut objective = ZERO;
    for (g, bg) in b.terms() {
        for i in 0..m {
            for j in 0..m {
                let f = first.get(&(g.inverse(), j, i)).ok_or_else(|| {
                    Error::Rejected(format!("word {g} of b is outside the certificate's reach"))
                })?;
                objective += bg[(i, j)] * f;
            }
        }
    }
    let objective = objective.re;
    ensure(objective < 0.0, || {
        format!("objective {objective:e} is not negative")
    })?;
    ensure(
        (objective - cert.objective).abs() <= 1e-9 * (1.0 + objective.abs()),
        || {
            format!(
                "reported objective {} differs from recomputed {objective}",
                cert.objective
            )
        },
    )?;
    Ok(format!(
        "valid moment certificate: f(b) = {objective:.6e}, min eigenvalue {min:.3e}"
    ))
}

/// Image of `b` under the representation, as `Σ_g B_g ⊗ π(g)`.
fn represent(unitaries: &[ComplexMatrix], dim: usize, b: &MatrixPolynomial) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(b.m() * dim, b.m() * dim);
    for (g, bg) in b.terms() {
        let mut pg = ComplexMatrix::identity(dim);
        for &l in g.letters() {
            let u = &unitaries[l.unsigned_abs() as usize - 1];
            pg = if l > 0 {
                pg.matmul(u)
            } else {
                pg.matmul(&u.adjoint())
            };
        }
        out = &out + &bg.kron(&pg);
    }
    out
}

pub fn verify_witness(j: &WitnessJson, b: &MatrixPolynomial, tol: &Tolerances) -> Result<String> {
    ensure(j.kind == "witness", || format!("kind is \"{}\"", j.kind))?;
    ensure(j.m == b.m() && j.n == b.n(), || {
        format!(
            "witness is for (m={}, n={}), polynomial is (m={}, n={})",
            j.m,
            j.n,
            b.m(),
            b.n()
        )
    })?;
    ensure(j.dim > 0 && j.unitaries.len() == j.n, || {
        format!("expected {} unitaries of positive size", j.n)
    })?;
    let unitaries = j
        .unitaries
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    for (k, u) in unitaries.iter().enumerate() {
        ensure(u.rows() == j.dim && u.cols() == j.dim, || {
            format!(
                "unitary {} is {}x{}, expected {}x{1}",
                k + 1,
                u.rows(),
                u.cols(),
                j.dim
            )
        })?;
        let defect = u.unitarity_defect();
        ensure(defect <= tol.unitarity, || {
            format!(
                "unitary {} has defect {defect:e} > {:e}",
                k + 1,
                tol.unitarity
            )
        })?;
    }
    let xi = vector_from_json(&j.xi);
    ensure(xi.len() == j.m * j.dim, || {
        format!("xi has length {}, expected {}", xi.len(), j.m * j.dim)
    })?;
    let len = norm(&xi);
    ensure((len - 1.0).abs() <= 1e-9, || {
        format!("xi has norm {len}, expected 1")
    })?;

    let rho = represent(&unitaries, j.dim, b);
    let dev = rho.hermitian_deviation();
    ensure(dev <= 1e-9 * (1.0 + rho.max_abs()), || {
        format!("image of b is not Hermitian (deviation {dev:e})")
    })?;
    let value = inner(&xi, &rho.mul_vec(&xi)).re;
    ensure(value < 0.0, || {
        format!("recomputed value {value:e} is not negative")
    })?;
    ensure(
        (value - j.value).abs() <= 1e-9 * (1.0 + value.abs()),
        || format!("reported value {} differs from recomputed {value}", j.value),
    )?;
    let lambda_min = herm_eig(&rho.hermitian_part())?.min();
    ensure(
        (lambda_min - j.lambda_min).abs() <= 1e-8 * (1.0 + lambda_min.abs()),
        || {
            format!(
                "reported lambda_min {} differs from recomputed {lambda_min}",
                j.lambda_min
            )
        },
    )?;
    Ok(format!(
        "valid witness: N = {}, value {value:.6e}, lambda_min {lambda_min:.6e}",
        j.dim
    ))
}
