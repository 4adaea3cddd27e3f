//! From a moment certificate to a finite-dimensional unitary representation
//! under which `b` is not positive semidefinite.
//!
//! The pipeline is: factor the moment matrix (GNS space), compress each
//! generator to a contraction on that space, dilate each contraction to a
//! unitary on twice the dimension, and evaluate `b` at the resulting
//! representation against the vector built from the identity-word
//! coordinates.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{
    matrix_from_json, matrix_to_json, vector_from_json, vector_to_json, MatrixJson,
    MatrixPolynomial,
};
use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig, inner, norm, orthonormalize_columns, rank_factor, ComplexMatrix, C64, ZERO,
};
use crate::soscert::MomentCertificate;
use crate::words::{enumerate_basis, ReducedWord};

/// Default PSD slack for moment matrices.
pub const EPS_PSD: f64 = 1e-8;
const CONSISTENCY_TOL: f64 = 1e-6;
const NORMALIZATION_TOL: f64 = 1e-9;
const GNS_RANK_TOL: f64 = 1e-9;
const CONTRACTION_TOL: f64 = 1e-6;
const UNITARITY_TOL: f64 = 1e-8;

/// Checks Hermiticity, basis shape, word consistency, normalization and
/// positivity of a moment certificate. Returns the moment matrix with
/// consistency enforced by averaging.
pub fn validate_moment(cert: &MomentCertificate, eps_psd: f64) -> Result<ComplexMatrix> {
    let m = cert.m;
    if m == 0 || cert.n == 0 {
        return Err(Error::InvalidMoment("m and n must be positive".into()));
    }
    if cert.basis != enumerate_basis(cert.n, cert.degree) {
        return Err(Error::InvalidMoment(format!(
            "basis is not the degree-{} word basis on {} generators",
            cert.degree, cert.n
        )));
    }
    let dim = cert.basis.len() * m;
    let raw = &cert.moment;
    if raw.rows() != dim || raw.cols() != dim {
        return Err(Error::InvalidMoment(format!(
            "moment matrix is {}x{}, expected {dim}x{dim}",
            raw.rows(),
            raw.cols()
        )));
    }
    if !raw.is_finite() {
        return Err(Error::InvalidMoment("non-finite entry".into()));
    }
    let dev = raw.hermitian_deviation();
    if dev > 1e-9 * raw.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let herm = raw.hermitian_part();

    let mut groups: HashMap<(ReducedWord, usize, usize), (C64, usize)> = HashMap::new();
    let key = |pv: usize, pw: usize, i: usize, j: usize| {
        (cert.basis[pv].inverse().mul(&cert.basis[pw]), i, j)
    };
    for pv in 0..cert.basis.len() {
        for pw in 0..cert.basis.len() {
            for i in 0..m {
                for j in 0..m {
                    let acc = groups.entry(key(pv, pw, i, j)).or_insert((ZERO, 0));
                    acc.0 += herm[(pv * m + i, pw * m + j)];
                    acc.1 += 1;
                }
            }
        }
    }
    let mut moment = ComplexMatrix::zeros(dim, dim);
    let mut worst: f64 = 0.0;
    for pv in 0..cert.basis.len() {
        for pw in 0..cert.basis.len() {
            for i in 0..m {
                for j in 0..m {
                    let (sum, count) = groups[&key(pv, pw, i, j)];
                    let mean = sum / count as f64;
                    let (r, s) = (pv * m + i, pw * m + j);
                    worst = worst.max((herm[(r, s)] - mean).norm());
                    moment[(r, s)] = mean;
                }
            }
        }
    }
    if worst > CONSISTENCY_TOL {
        return Err(Error::InvalidMoment(format!(
            "entries sharing a group element differ by {worst:e}"
        )));
    }
    let mass: f64 = (0..m).map(|j| moment[(j, j)].re).sum();
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidMoment(format!(
            "identity mass is {mass}, expected 1"
        )));
    }
    let min = herm_eig(&moment)?.min();
    if min < -eps_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(moment)
}

/// Truncated GNS space: `moment = L L†` with `coords(j, w)` the conjugated
/// row `(w, j)` of `L`, so that `⟨coords(r), coords(s)⟩ = moment[r, s]`.
#[derive(Clone, Debug)]
pub struct GnsSpace {
    pub m: usize,
    pub basis: Vec<ReducedWord>,
    pub factor: ComplexMatrix,
    pub rank: usize,
}

impl GnsSpace {
    pub fn coords(&self, row: usize, word_pos: usize) -> Vec<C64> {
        let r = word_pos * self.m + row;
        (0..self.rank).map(|k| self.factor[(r, k)].conj()).collect()
    }

    pub fn position(&self, w: &ReducedWord) -> Option<usize> {
        self.basis.binary_search(w).ok()
    }
}

pub fn gns_space(cert: &MomentCertificate) -> Result<GnsSpace> {
    let moment = validate_moment(cert, EPS_PSD)?;
    let (factor, rank) = rank_factor(&moment, GNS_RANK_TOL)?;
    Ok(GnsSpace {
        m: cert.m,
        basis: cert.basis.clone(),
        factor,
        rank,
    })
}

/// Compresses each generator to a contraction on the GNS space: the
/// minimum-norm least-squares map sending `coords(j, u)` to `coords(j, x_k u)`
/// over every `u` with `x_k u` still in the basis.
pub fn compress_generators(gns: &GnsSpace, n: usize) -> Result<Vec<ComplexMatrix>> {
    (1..=n as i32).map(|k| compress_one(gns, k)).collect()
}

fn compress_one(gns: &GnsSpace, letter: i32) -> Result<ComplexMatrix> {
    let h = gns.rank;
    let mut sources = Vec::new();
    let mut targets = Vec::new();
    for (pu, u) in gns.basis.iter().enumerate() {
        let Some(pt) = gns.position(&u.left_mul_letter(letter)) else {
            continue;
        };
        for j in 0..gns.m {
            sources.push(gns.coords(j, pu));
            targets.push(gns.coords(j, pt));
        }
    }
    let p = sources.len();
    let x = ComplexMatrix::from_fn(h, p, |r, c| sources[c][r]);
    let y = ComplexMatrix::from_fn(h, p, |r, c| targets[c][r]);
    let eig = herm_eig(&x.matmul(&x.adjoint()))?;
    let lmax = eig.max();
    let mut sigma_max = f64::INFINITY;
    // Smallest pseudo-inverse cutoff that yields a contraction.
    for cutoff in [1e-13, 1e-11, 1e-9, 1e-7] {
        let pinv = eig.apply(|l| if l > cutoff * lmax { 1.0 / l } else { 0.0 });
        let c = y.matmul(&x.adjoint()).matmul(&pinv);
        let sv = herm_eig(&c.adjoint().matmul(&c))?;
        sigma_max = sv.max().max(0.0).sqrt();
        if sigma_max <= 1.0 + CONTRACTION_TOL {
            return Ok(if sigma_max > 1.0 {
                let v = &sv.vectors;
                let shrink = ComplexMatrix::from_fn(h, h, |r, s| {
                    (0..h)
                        .map(|k| {
                            let sk = sv.values[k].max(0.0).sqrt();
                            let f = if sk > 1.0 { 1.0 / sk } else { 1.0 };
                            v[(r, k)] * v[(s, k)].conj() * f
                        })
                        .sum()
                });
                c.matmul(&shrink)
            } else {
                c
            });
        }
    }
    Err(Error::ContractionViolation(sigma_max))
}

/// Square roots `(√(I - C†C), √(I - CC†))` computed in one shared singular
/// basis, so that `C·√(I - C†C) = √(I - CC†)·C` holds to rounding.
pub fn defect_roots(c: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !c.is_square() {
        return Err(Error::NotSquare {
            rows: c.rows(),
            cols: c.cols(),
        });
    }
    let h = c.rows();
    let eig = herm_eig(&c.adjoint().matmul(c))?;
    let sigma: Vec<f64> = eig
        .values
        .iter()
        .map(|l| l.clamp(0.0, 1.0).sqrt())
        .collect();
    if eig.max() > 1.0 + 2.0 * CONTRACTION_TOL {
        return Err(Error::ContractionViolation(eig.max().sqrt()));
    }
    let v = &eig.vectors;
    let cv = c.matmul(v);
    let cutoff = 1e-8 * sigma.first().copied().unwrap_or(0.0).max(1e-300);
    let left = ComplexMatrix::from_fn(h, h, |r, k| {
        if sigma[k] > cutoff {
            cv[(r, k)] / sigma[k]
        } else {
            ZERO
        }
    });
    let w = orthonormalize_columns(&left);
    let gaps: Vec<f64> = sigma
        .iter()
        .map(|s| (1.0 - s * s).max(0.0).sqrt())
        .collect();
    let sandwich = |basis: &ComplexMatrix| {
        ComplexMatrix::from_fn(h, h, |r, s| {
            (0..h)
                .map(|k| basis[(r, k)] * basis[(s, k)].conj() * gaps[k])
                .sum()
        })
    };
    Ok((sandwich(v), sandwich(&w)))
}

/// `[[C, -√(I - CC†)], [√(I - C†C), C†]]`.
pub fn dilate(c: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = c.rows();
    let (right, left) = defect_roots(c)?;
    let mut u = ComplexMatrix::zeros(2 * h, 2 * h);
    u.set_block(0, 0, c);
    u.set_block(0, h, &left.scale_real(-1.0));
    u.set_block(h, 0, &right);
    u.set_block(h, h, &c.adjoint());
    let defect = u.unitarity_defect();
    if defect > UNITARITY_TOL {
        return Err(Error::DegenerateNumerics(format!(
            "dilation unitarity defect {defect:e}"
        )));
    }
    Ok(u)
}

/// `n` unitaries of size `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRep {
    pub dim: usize,
    pub unitaries: Vec<ComplexMatrix>,
}

impl FiniteRep {
    pub fn new(dim: usize, unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch(
                "representation dimension must be positive".into(),
            ));
        }
        if unitaries.iter().any(|u| u.rows() != dim || u.cols() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "unitaries must be {dim}x{dim}"
            )));
        }
        Ok(FiniteRep { dim, unitaries })
    }

    pub fn n(&self) -> usize {
        self.unitaries.len()
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.unitaries
            .iter()
            .map(|u| u.unitarity_defect())
            .fold(0.0, f64::max)
    }

    /// Image of a word: letters multiply left to right, inverses use `U†`.
    pub fn word_matrix(&self, w: &ReducedWord) -> ComplexMatrix {
        let mut out = ComplexMatrix::identity(self.dim);
        for &l in w.letters() {
            let u = &self.unitaries[l.unsigned_abs() as usize - 1];
            out = if l > 0 {
                out.matmul(u)
            } else {
                out.matmul(&u.adjoint())
            };
        }
        out
    }
}

/// `ρ_m(b) = Σ_g B_g ⊗ π(g)`, with entry `(i·N + r, j·N + s) = Σ_g (B_g)_ij π(g)[r, s]`.
pub fn evaluate_rep(rep: &FiniteRep, b: &MatrixPolynomial) -> Result<ComplexMatrix> {
    if rep.n() != b.n() {
        return Err(Error::DimensionMismatch(format!(
            "representation has {} generators, polynomial {}",
            rep.n(),
            b.n()
        )));
    }
    let (m, dim) = (b.m(), rep.dim);
    let mut out = ComplexMatrix::zeros(m * dim, m * dim);
    for (g, bg) in b.terms() {
        let pg = rep.word_matrix(g);
        for i in 0..m {
            for j in 0..m {
                let coef = bg[(i, j)];
                if coef == ZERO {
                    continue;
                }
                for r in 0..dim {
                    for s in 0..dim {
                        out[(i * dim + r, j * dim + s)] += coef * pg[(r, s)];
                    }
                }
            }
        }
    }
    let scale = b.max_coeff().max(1.0) * b.terms().len().max(1) as f64;
    let dev = out.hermitian_deviation();
    if b.is_symmetric(1e-12 * b.max_coeff()) && dev > 1e-9 * scale {
        return Err(Error::DegenerateNumerics(format!(
            "representation image deviates from Hermitian by {dev:e}"
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub m: usize,
    pub rep: FiniteRep,
    /// Unit vector in `ℂ^{m·N}`.
    pub xi: Vec<C64>,
    /// `⟨ξ, ρ_m(b) ξ⟩`.
    pub value: f64,
    pub lambda_min: f64,
    /// Moment objective `f(b)` the witness was built from.
    pub objective: f64,
    /// `⟨ξ, ρ_m(b) ξ⟩` before normalizing `ξ`.
    pub unnormalized_value: f64,
}

/// Builds a unitary representation and a unit vector on which `b` pairs
/// negatively, from a moment certificate with negative objective.
pub fn extract_witness(cert: &MomentCertificate, b: &MatrixPolynomial) -> Result<WitnessReport> {
    if cert.objective >= 0.0 {
        return Err(Error::WitnessFailed(format!(
            "moment objective {} is not negative",
            cert.objective
        )));
    }
    if b.m() != cert.m || b.n() != cert.n {
        return Err(Error::DimensionMismatch(format!(
            "certificate is for (m={}, n={}), polynomial is (m={}, n={})",
            cert.m,
            cert.n,
            b.m(),
            b.n()
        )));
    }
    let gns = gns_space(cert)?;
    let contractions = compress_generators(&gns, cert.n)?;
    let unitaries = contractions
        .iter()
        .map(dilate)
        .collect::<Result<Vec<_>>>()?;
    let h = gns.rank;
    let rep = FiniteRep::new(2 * h, unitaries)?;
    let dim = rep.dim;
    let mut xi = vec![ZERO; cert.m * dim];
    for j in 0..cert.m {
        for (k, z) in gns.coords(j, 0).into_iter().enumerate() {
            xi[j * dim + k] = z;
        }
    }
    let rho = evaluate_rep(&rep, b)?;
    let raw = inner(&xi, &rho.mul_vec(&xi)).re;
    let len = norm(&xi);
    if len == 0.0 {
        return Err(Error::WitnessFailed("identity coordinates vanish".into()));
    }
    for z in &mut xi {
        *z /= len;
    }
    let value = inner(&xi, &rho.mul_vec(&xi)).re;
    let lambda_min = herm_eig(&rho.hermitian_part())?.min();
    if value >= 0.0 {
        return Err(Error::WitnessFailed(format!(
            "constructed pairing {value:e} is not negative"
        )));
    }
    Ok(WitnessReport {
        m: cert.m,
        rep,
        xi,
        value,
        lambda_min,
        objective: cert.objective,
        unnormalized_value: raw,
    })
}

/// Largest deviation between the first block of `π(w)(coords(j, e), 0)` and
/// `coords(j, w)` over basis words `w` and rows `j`.
pub fn dilation_fidelity(gns: &GnsSpace, rep: &FiniteRep) -> f64 {
    let h = gns.rank;
    let mut worst: f64 = 0.0;
    for j in 0..gns.m {
        let mut start = vec![ZERO; rep.dim];
        start[..h].copy_from_slice(&gns.coords(j, 0));
        for (pw, w) in gns.basis.iter().enumerate() {
            let image = rep.word_matrix(w).mul_vec(&start);
            let target = gns.coords(j, pw);
            let dev = image[..h]
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b).norm())
                .chain(image[h..].iter().map(|z| z.norm()))
                .fold(0.0, f64::max);
            worst = worst.max(dev);
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessJson {
    pub kind: String,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub dim: usize,
    pub unitaries: Vec<MatrixJson>,
    pub xi: Vec<[f64; 2]>,
    pub value: f64,
    pub lambda_min: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
}

impl WitnessReport {
    pub fn to_json_value(&self) -> WitnessJson {
        WitnessJson {
            kind: "witness".into(),
            m: self.m,
            n: self.rep.n(),
            dim: self.rep.dim,
            unitaries: self.rep.unitaries.iter().map(matrix_to_json).collect(),
            xi: vector_to_json(&self.xi),
            value: self.value,
            lambda_min: self.lambda_min,
            objective: Some(self.objective),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json_value())?)
    }
}

impl WitnessJson {
    /// Parses the representation and vector, checking only their shapes.
    pub fn parts(&self) -> Result<(FiniteRep, Vec<C64>)> {
        if self.kind != "witness" {
            return Err(Error::Parse(format!(
                "expected kind \"witness\", found \"{}\"",
                self.kind
            )));
        }
        let unitaries = self
            .unitaries
            .iter()
            .map(matrix_from_json)
            .collect::<Result<Vec<_>>>()?;
        if unitaries.len() != self.n {
            return Err(Error::Parse(format!(
                "{} unitaries listed for n = {}",
                unitaries.len(),
                self.n
            )));
        }
        let rep = FiniteRep::new(self.dim, unitaries)?;
        let xi = vector_from_json(&self.xi);
        if xi.len() != self.m * self.dim
            || xi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Parse(
                "xi has the wrong length or non-finite entries".into(),
            ));
        }
        Ok((rep, xi))
    }
}
