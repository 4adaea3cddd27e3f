//! Sum-of-Hermitian-squares certification via the Gram matrix method.
//!
//! The variable is a Hermitian matrix `G` indexed by `(word, row)` pairs of a
//! truncated word basis, laid out word-block-major (`index = word_pos·m + row`).
//! `b = Σ_k a_k* a_k` with factors supported on the basis exactly when some PSD
//! `G` satisfies, for every reachable group element `g` and entry `(i, j)`,
//!
//! ```text
//! Σ_{v⁻¹w = g} G[(v,i),(w,j)] = (B_g)_ij .
//! ```
//!
//! When no such `G` exists the solver's Farkas multipliers form a moment matrix
//! whose pairing with `b` is negative.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{
    hermitian_square_sum, matrix_from_json, matrix_to_json, symmetrize, MatrixJson,
    MatrixPolynomial, PolynomialJson,
};
use crate::error::{Error, Result};
use crate::linalg::{rank_factor, ComplexMatrix, C64, ONE, ZERO};
use crate::sdp::{self, SdpConfig, SdpOutcome, SdpProblem};
use crate::words::{enumerate_basis, ReducedWord};

/// Tolerance for accepting `b` as symmetric, relative to `1 + max |B_w|`.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// `1e-6 · (1 + max |B_w| entry)`.
pub fn default_eps_sos(b: &MatrixPolynomial) -> f64 {
    1e-6 * (1.0 + b.max_coeff())
}

/// Gram system of `b` together with the indexing it was built on.
#[derive(Clone, Debug)]
pub struct GramSystem {
    pub problem: SdpProblem,
    pub basis: Vec<ReducedWord>,
    pub m: usize,
    pub n: usize,
    pub degree: usize,
}

/// Builds the Gram system of `b` on words of length at most `degree`.
///
/// Each complex equation is merged with its conjugate partner `(g⁻¹, j, i)` and
/// then split into a real and an imaginary Hermitian constraint; the
/// self-conjugate equations (`g = e`, `i = j`) stay single and real.
pub fn build_gram_system(b: &MatrixPolynomial, degree: usize) -> Result<GramSystem> {
    let deviation = b.symmetry_defect();
    if deviation > SYMMETRY_TOL * (1.0 + b.max_coeff()) {
        return Err(Error::NotSymmetric { deviation });
    }
    if let Some(w) = b.terms().keys().find(|w| w.len() > 2 * degree) {
        return Err(Error::DegreeTooSmall {
            degree,
            word: w.to_string(),
        });
    }
    let b = symmetrize(b);
    let (m, n) = (b.m(), b.n());
    let basis = enumerate_basis(n, degree);

    // Unordered index pairs {(v,i), (w,j)} grouped by canonical key (g, i, j).
    let mut groups: HashMap<(ReducedWord, usize, usize), Vec<(usize, usize)>> = HashMap::new();
    let mut order: Vec<(ReducedWord, usize, usize)> = Vec::new();
    for (pv, v) in basis.iter().enumerate() {
        let v_inv = v.inverse();
        for (pw, w) in basis.iter().enumerate() {
            let g = v_inv.mul(w);
            let g_inv = g.inverse();
            for i in 0..m {
                for j in 0..m {
                    if (&g_inv, j, i) < (&g, i, j) {
                        continue;
                    }
                    let key = (g.clone(), i, j);
                    let list = groups.entry(key.clone()).or_insert_with(|| {
                        order.push(key);
                        Vec::new()
                    });
                    list.push((pv * m + i, pw * m + j));
                }
            }
        }
    }
    order.sort();

    let half = C64::new(0.5, 0.0);
    let half_i = C64::new(0.0, 0.5);
    let mut problem = SdpProblem::new(basis.len() * m);
    for key in &order {
        let (g, i, j) = key;
        let pairs = &groups[key];
        let c = b.coefficient(g).map_or(ZERO, |bg| bg[(*i, *j)]);
        if g.is_identity() && i == j {
            problem.add_constraint(pairs.iter().map(|&(r, s)| (r, s, ONE)).collect(), c.re)?;
            continue;
        }
        let re = pairs
            .iter()
            .flat_map(|&(r, s)| [(r, s, half), (s, r, half)])
            .collect();
        problem.add_constraint(re, c.re)?;
        let im = pairs
            .iter()
            .flat_map(|&(r, s)| [(r, s, half_i), (s, r, -half_i)])
            .collect();
        problem.add_constraint(im, c.im)?;
    }
    Ok(GramSystem {
        problem,
        basis,
        m,
        n,
        degree,
    })
}

/// Factors `a_k` with `Σ a_k* a_k = Σ_{v,w} G_{vw} ⊗ v⁻¹w`: column `k` of a
/// rank factor of `G` becomes a factor whose row `k mod m` at word `w` is the
/// conjugated `w`-block of the column.
pub fn extract_factors(
    gram: &ComplexMatrix,
    basis: &[ReducedWord],
    m: usize,
    n: usize,
) -> Result<Vec<MatrixPolynomial>> {
    if gram.rows() != basis.len() * m || !gram.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix is {}x{}, basis needs {}",
            gram.rows(),
            gram.cols(),
            basis.len() * m
        )));
    }
    let (l, rank) = rank_factor(gram, 1e-12)?;
    let mut factors = Vec::with_capacity(rank);
    for k in 0..rank {
        let slot = k % m;
        let mut a = MatrixPolynomial::zero(m, n);
        for (pw, w) in basis.iter().enumerate() {
            let mut coef = ComplexMatrix::zeros(m, m);
            for j in 0..m {
                coef[(slot, j)] = l[(pw * m + j, k)].conj();
            }
            if coef.max_abs() > 0.0 {
                a.add_term(w.clone(), coef)?;
            }
        }
        a.prune();
        if !a.is_zero() {
            factors.push(a);
        }
    }
    Ok(factors)
}

#[derive(Clone, Debug)]
pub struct GramCertificate {
    pub degree: usize,
    pub m: usize,
    pub n: usize,
    pub basis: Vec<ReducedWord>,
    pub gram: ComplexMatrix,
    pub factors: Vec<MatrixPolynomial>,
    /// Max coefficient error of `b - Σ a_k* a_k`.
    pub residual: f64,
}

/// Truncated state: `moment[(v,i),(w,j)] = f_ij(v⁻¹w)` with `Σ_j f_jj(e) = 1`.
#[derive(Clone, Debug)]
pub struct MomentCertificate {
    pub degree: usize,
    pub m: usize,
    pub n: usize,
    pub basis: Vec<ReducedWord>,
    pub moment: ComplexMatrix,
    /// `f(b) = Σ_g Σ_ij (B_g)_ij f_ji(g⁻¹)`.
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub enum Certification {
    Sos(GramCertificate),
    Moment(MomentCertificate),
    Inconclusive { degree: usize, iterations: usize },
}

/// Decides SOS membership of `b` with factors of length at most `degree`.
pub fn certify_sos(b: &MatrixPolynomial, degree: usize, cfg: &SdpConfig) -> Result<Certification> {
    let system = build_gram_system(b, degree)?;
    match sdp::solve(&system.problem, cfg)? {
        SdpOutcome::Feasible(point) => {
            let factors = extract_factors(&point.gram, &system.basis, system.m, system.n)?;
            let recon = hermitian_square_sum(system.m, system.n, &factors)?;
            let residual = recon.distance(b)?;
            let eps_sos = default_eps_sos(b);
            if residual > eps_sos {
                return Err(Error::DegenerateNumerics(format!(
                    "factor reconstruction residual {residual:e} exceeds {eps_sos:e}"
                )));
            }
            Ok(Certification::Sos(GramCertificate {
                degree,
                m: system.m,
                n: system.n,
                basis: system.basis,
                gram: point.gram,
                factors,
                residual,
            }))
        }
        SdpOutcome::Infeasible(cert) => {
            let moment = normalize_moment(&cert.dual, system.m)?;
            let objective = moment_objective(&moment, &system.basis, system.m, b)?.re;
            Ok(Certification::Moment(MomentCertificate {
                degree,
                m: system.m,
                n: system.n,
                basis: system.basis,
                moment,
                objective,
            }))
        }
        SdpOutcome::Inconclusive { iterations, .. } => {
            Ok(Certification::Inconclusive { degree, iterations })
        }
    }
}

/// Scales a dual matrix so that `Σ_j f_jj(e) = 1` (the identity word sits at
/// basis position 0).
fn normalize_moment(dual: &ComplexMatrix, m: usize) -> Result<ComplexMatrix> {
    let mass: f64 = (0..m).map(|j| dual[(j, j)].re).sum();
    if !(mass > 0.0) {
        return Err(Error::InvalidMoment(
            "dual matrix has no mass on the identity word".into(),
        ));
    }
    Ok(dual.hermitian_part().scale_real(1.0 / mass))
}

/// `f(b) = Σ_g Σ_ij (B_g)_ij f_ji(g⁻¹)`, reading `f` off the moment matrix.
pub fn moment_objective(
    moment: &ComplexMatrix,
    basis: &[ReducedWord],
    m: usize,
    b: &MatrixPolynomial,
) -> Result<C64> {
    if b.m() != m {
        return Err(Error::DimensionMismatch(format!(
            "polynomial has m={}, certificate m={m}",
            b.m()
        )));
    }
    let locate = locate_pairs(basis);
    let mut total = ZERO;
    for (g, bg) in b.terms() {
        let g_inv = g.inverse();
        let &(pv, pw) = locate.get(&g_inv).ok_or_else(|| Error::DegreeTooSmall {
            degree: basis.iter().map(|w| w.len()).max().unwrap_or(0),
            word: g.to_string(),
        })?;
        for i in 0..m {
            for j in 0..m {
                total += bg[(i, j)] * moment[(pv * m + j, pw * m + i)];
            }
        }
    }
    Ok(total)
}

/// One basis pair `(v, w)` with `v⁻¹w = g` for each reachable `g`.
pub fn locate_pairs(basis: &[ReducedWord]) -> HashMap<ReducedWord, (usize, usize)> {
    let mut out = HashMap::new();
    for (pv, v) in basis.iter().enumerate() {
        let v_inv = v.inverse();
        for (pw, w) in basis.iter().enumerate() {
            out.entry(v_inv.mul(w)).or_insert((pv, pw));
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramCertificateJson {
    pub kind: String,
    pub degree: usize,
    pub m: usize,
    pub n: usize,
    pub basis: Vec<String>,
    pub gram: MatrixJson,
    pub factors: Vec<PolynomialJson>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentCertificateJson {
    pub kind: String,
    pub degree: usize,
    pub m: usize,
    pub n: usize,
    pub basis: Vec<String>,
    pub moment: MatrixJson,
    pub objective: f64,
}

fn parse_basis(words: &[String]) -> Result<Vec<ReducedWord>> {
    words.iter().map(|w| w.parse()).collect()
}

fn expect_kind(kind: &str, expected: &str) -> Result<()> {
    if kind == expected {
        Ok(())
    } else {
        Err(Error::Parse(format!(
            "expected kind \"{expected}\", found \"{kind}\""
        )))
    }
}

impl GramCertificate {
    pub fn to_json_value(&self) -> GramCertificateJson {
        GramCertificateJson {
            kind: "sos".into(),
            degree: self.degree,
            m: self.m,
            n: self.n,
            basis: self.basis.iter().map(|w| w.to_string()).collect(),
            gram: matrix_to_json(&self.gram),
            factors: self.factors.iter().map(PolynomialJson::from).collect(),
            residual: self.residual,
        }
    }

    pub fn from_json_value(j: &GramCertificateJson) -> Result<Self> {
        expect_kind(&j.kind, "sos")?;
        Ok(GramCertificate {
            degree: j.degree,
            m: j.m,
            n: j.n,
            basis: parse_basis(&j.basis)?,
            gram: matrix_from_json(&j.gram)?,
            factors: j
                .factors
                .iter()
                .map(MatrixPolynomial::try_from)
                .collect::<Result<_>>()?,
            residual: j.residual,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json_value())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_value(&serde_json::from_str(s)?)
    }
}

impl MomentCertificate {
    pub fn to_json_value(&self) -> MomentCertificateJson {
        MomentCertificateJson {
            kind: "moment".into(),
            degree: self.degree,
            m: self.m,
            n: self.n,
            basis: self.basis.iter().map(|w| w.to_string()).collect(),
            moment: matrix_to_json(&self.moment),
            objective: self.objective,
        }
    }

    pub fn from_json_value(j: &MomentCertificateJson) -> Result<Self> {
        expect_kind(&j.kind, "moment")?;
        Ok(MomentCertificate {
            degree: j.degree,
            m: j.m,
            n: j.n,
            basis: parse_basis(&j.basis)?,
            moment: matrix_from_json(&j.moment)?,
            objective: j.objective,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json_value())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_value(&serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;
    use crate::polytext::parse_polynomial;
    use proptest::prelude::*;

    fn poly(s: &str) -> MatrixPolynomial {
        parse_polynomial(s, None).unwrap()
    }

    fn dense(p: &SdpProblem, t: usize) -> ComplexMatrix {
        let mut a = ComplexMatrix::zeros(p.dim(), p.dim());
        for &(r, s, v) in &p.constraints()[t].entries {
            a[(r, s)] += v;
        }
        a
    }

    #[test]
    fn gram_system_of_two_plus_cos() {
        let sys = build_gram_system(&poly("2 + x1 + x1^-1"), 1).unwrap();
        assert_eq!(sys.problem.dim(), 3);
        // g = e: diagonal ones, rhs 2.
        let e = dense(&sys.problem, 0);
        assert_eq!(e, ComplexMatrix::from_real_diag(&[1.0, 1.0, 1.0]));
        assert_eq!(sys.problem.constraints()[0].rhs, 2.0);
        // Hand solution G = v v†, v = (1, 1, 0) satisfies every constraint.
        let v = ComplexMatrix::column(&[ONE, ONE, ZERO]);
        assert!(sys.problem.residual(&v.matmul(&v.adjoint())) < 1e-15);
        // G[e,x] + G[x^-1,e] = 1 appears as the real part of the g = x1 equation.
        let x = "x1".parse::<ReducedWord>().unwrap();
        let pos = |w: &ReducedWord| sys.basis.iter().position(|b| b == w).unwrap();
        let (pe, px, pxi) = (pos(&ReducedWord::identity()), pos(&x), pos(&x.inverse()));
        let found = sys.problem.constraints().iter().any(|c| {
            c.rhs == 1.0
                && c.entries.iter().any(|&(r, s, _)| (r, s) == (pe, px))
                && c.entries.iter().any(|&(r, s, _)| (r, s) == (pxi, pe))
        });
        assert!(found);
    }

    #[test]
    fn gram_system_of_constant() {
        let sys = build_gram_system(&poly("1"), 0).unwrap();
        assert_eq!(sys.problem.dim(), 1);
        assert_eq!(sys.problem.constraints().len(), 1);
        assert_eq!(sys.problem.constraints()[0].rhs, 1.0);
    }

    #[test]
    fn gram_system_matrix_identity_block() {
        let b = poly("[[1, x1], [x1^-1, 1]]");
        let sys = build_gram_system(&b, 1).unwrap();
        assert_eq!(sys.problem.dim(), 6);
        // The g = e block reproduces the identity: G = I_6 / 3 satisfies it.
        let g = ComplexMatrix::identity(6).scale_real(1.0 / 3.0);
        let vals = sys.problem.apply(&g);
        let mut hits = 0;
        for (t, c) in sys.problem.constraints().iter().enumerate() {
            let diag_e = c.entries.iter().all(|&(r, s, _)| r == s);
            if diag_e {
                assert!((vals[t] - 1.0).abs() < 1e-15);
                assert_eq!(c.rhs, 1.0);
                hits += 1;
            }
        }
        assert_eq!(hits, 2);
    }

    #[test]
    fn gram_system_errors() {
        assert!(matches!(
            build_gram_system(&poly("x1"), 1),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            build_gram_system(&poly("3 + x1^3 + x1^-3"), 1),
            Err(Error::DegreeTooSmall { .. })
        ));
    }

    #[test]
    fn extract_single_factor() {
        let sys = build_gram_system(&poly("2 + x1 + x1^-1"), 1).unwrap();
        let v = ComplexMatrix::column(&[ONE, ONE, ZERO]);
        let f = extract_factors(&v.matmul(&v.adjoint()), &sys.basis, 1, 1).unwrap();
        assert_eq!(f.len(), 1);
        let recon = hermitian_square_sum(1, 1, &f).unwrap();
        assert!(recon.distance(&poly("2 + x1 + x1^-1")).unwrap() < 1e-14);
        // Up to a global phase the factor is 1 + x1.
        let a = &f[0];
        let e = a.coefficient(&ReducedWord::identity()).unwrap()[(0, 0)];
        let x = a.coefficient(&ReducedWord::generator(1)).unwrap()[(0, 0)];
        assert!((e.norm() - 1.0).abs() < 1e-12 && (x - e).norm() < 1e-12);
    }

    #[test]
    fn extract_identity_factors() {
        let basis = vec![ReducedWord::identity()];
        let f = extract_factors(&ComplexMatrix::identity(1), &basis, 1, 1).unwrap();
        assert_eq!(f.len(), 1);
        assert!(
            hermitian_square_sum(1, 1, &f)
                .unwrap()
                .distance(&poly("1"))
                .unwrap()
                < 1e-15
        );

        let f = extract_factors(&ComplexMatrix::identity(2), &basis, 2, 1).unwrap();
        assert_eq!(f.len(), 2);
        let id = MatrixPolynomial::one(2, 1);
        assert!(
            hermitian_square_sum(2, 1, &f)
                .unwrap()
                .distance(&id)
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn certify_two_plus_cos() {
        let b = poly("2 + x1 + x1^-1");
        match certify_sos(&b, 1, &SdpConfig::default()).unwrap() {
            Certification::Sos(c) => {
                assert!(c.residual <= 1e-7);
                assert!(min_eigenvalue(&c.gram).unwrap() >= -1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certify_minus_one_gives_trivial_state() {
        let b = poly("-1");
        match certify_sos(&b, 0, &SdpConfig::default()).unwrap() {
            Certification::Moment(c) => {
                assert!((c.objective + 1.0).abs() < 1e-12);
                assert!((c.moment[(0, 0)].re - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn objective_sign_on_trivial_state() {
        // All-ones moment matrix is evaluation at the trivial representation.
        let basis = enumerate_basis(1, 1);
        let ones = ComplexMatrix::from_fn(3, 3, |_, _| ONE);
        let f = moment_objective(&ones, &basis, 1, &poly("1 - x1 - x1^-1")).unwrap();
        assert!((f - C64::new(-1.0, 0.0)).norm() < 1e-15);
        let f = moment_objective(&ones, &basis, 1, &poly("-1")).unwrap();
        assert!((f - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn certify_matrix_example() {
        let b = poly("[[2, x1], [x1^-1, 2]]");
        match certify_sos(&b, 1, &SdpConfig::default()).unwrap() {
            Certification::Sos(c) => assert!(c.residual <= 1e-7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certify_refutes_one_minus_cos() {
        let b = poly("1 - x1 - x1^-1");
        match certify_sos(&b, 1, &SdpConfig::default()).unwrap() {
            Certification::Moment(c) => {
                assert!(c.objective < 0.0);
                assert!(min_eigenvalue(&c.moment).unwrap() >= -1e-8);
                let mass: f64 = (0..c.m).map(|j| c.moment[(j, j)].re).sum();
                assert!((mass - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn moment_certificate_is_consistent() {
        let b = poly("[[1, 2*x1], [2*x1^-1, 1]]");
        let c = match certify_sos(&b, 1, &SdpConfig::default()).unwrap() {
            Certification::Moment(c) => c,
            other => panic!("{other:?}"),
        };
        let m = c.m;
        let mut seen: HashMap<(ReducedWord, usize, usize), C64> = HashMap::new();
        for (pv, v) in c.basis.iter().enumerate() {
            for (pw, w) in c.basis.iter().enumerate() {
                let g = v.inverse().mul(w);
                for i in 0..m {
                    for j in 0..m {
                        let z = c.moment[(pv * m + i, pw * m + j)];
                        let prev = *seen.entry((g.clone(), i, j)).or_insert(z);
                        assert!((prev - z).norm() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn certificate_json_round_trip() {
        let b = poly("2 + x1 + x1^-1");
        let Certification::Sos(c) = certify_sos(&b, 1, &SdpConfig::default()).unwrap() else {
            panic!()
        };
        let back = GramCertificate::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back.gram, c.gram);
        assert_eq!(back.basis, c.basis);
        assert_eq!(back.factors, c.factors);
        assert!(MomentCertificate::from_json(&c.to_json().unwrap()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn sos_round_trip(
            m in 1usize..=2,
            seeds in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * 5 * 4),
            count in 1usize..=2,
        ) {
            let basis = enumerate_basis(2, 1);
            let mut factors = Vec::new();
            let mut it = seeds.iter();
            for _ in 0..count {
                let mut a = MatrixPolynomial::zero(m, 2);
                for w in &basis {
                    let coef = ComplexMatrix::from_fn(m, m, |_, _| {
                        let &(re, im) = it.next().unwrap();
                        C64::new(re, im)
                    });
                    a.add_term(w.clone(), coef).unwrap();
                }
                factors.push(a);
            }
            let b = hermitian_square_sum(m, 2, &factors).unwrap();
            match certify_sos(&b, 1, &SdpConfig::default()).unwrap() {
                Certification::Sos(c) => {
                    let recon = hermitian_square_sum(m, 2, &c.factors).unwrap();
                    prop_assert!(recon.distance(&b).unwrap() <= 1e-6);
                }
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }
}
