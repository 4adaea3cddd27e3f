//! Browser bindings: certify a polynomial, plot its one-dimensional spectrum
//! curve, and sample random unitary representations.

use fgsos::linalg::{herm_eig, ComplexMatrix, C64};
use fgsos::polytext::{format_polynomial, parse_polynomial};
use fgsos::repsample::sample_and_test;
use fgsos::sdp::SdpConfig;
use fgsos::soscert::{certify_sos, Certification};
use fgsos::witness::{evaluate_rep, extract_witness, FiniteRep};
use fgsos::MatrixPolynomial;
use wasm_bindgen::prelude::*;

fn parse(text: &str) -> Result<MatrixPolynomial, String> {
    parse_polynomial(text.trim(), None).map_err(|e| e.to_string())
}

/// Tries degrees `⌈deg/2⌉` and one above; reports the first conclusive answer.
pub fn check_text(text: &str) -> Result<String, String> {
    let b = parse(text)?;
    let start = b.degree().div_ceil(2);
    let cfg = SdpConfig::default();
    let mut notes = Vec::new();
    for degree in start..=start + 1 {
        match certify_sos(&b, degree, &cfg).map_err(|e| e.to_string())? {
            Certification::Sos(cert) => {
                let mut out = format!(
                    "sum of squares at degree {degree} (residual {:.1e})\n",
                    cert.residual
                );
                for (k, a) in cert.factors.iter().enumerate() {
                    out.push_str(&format!("a_{} = {}\n", k + 1, format_polynomial(a)));
                }
                return Ok(out);
            }
            Certification::Moment(cert) => match extract_witness(&cert, &b) {
                Ok(w) => {
                    return Ok(format!(
                        "not positive: a {}-dimensional unitary representation gives <xi, b xi> = {:.6}\nlowest eigenvalue there: {:.6}\n",
                        w.rep.dim, w.value, w.lambda_min
                    ))
                }
                Err(e) => notes.push(format!("degree {degree}: witness failed ({e})")),
            },
            Certification::Inconclusive { iterations, .. } => {
                notes.push(format!("degree {degree}: no decision after {iterations} iterations"))
            }
        }
    }
    Ok(format!("inconclusive\n{}\n", notes.join("\n")))
}

/// `λ_min(b(e^{iθ}))` at `points` equally spaced angles, for one generator.
pub fn curve(text: &str, points: usize) -> Result<Vec<f64>, String> {
    let b = parse(text)?;
    if b.n() > 1 {
        return Err("the curve needs a polynomial in x1 only".into());
    }
    let b = b.with_generators(1).map_err(|e| e.to_string())?;
    (0..points.max(2))
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / points.max(2) as f64;
            let u = ComplexMatrix::from_fn(1, 1, |_, _| C64::from_polar(1.0, theta));
            let rep = FiniteRep::new(1, vec![u]).map_err(|e| e.to_string())?;
            let rho = evaluate_rep(&rep, &b).map_err(|e| e.to_string())?;
            Ok(herm_eig(&rho.hermitian_part())
                .map_err(|e| e.to_string())?
                .min())
        })
        .collect()
}

pub fn sample_text(text: &str, dim: usize, count: usize, seed: u64) -> Result<f64, String> {
    let b = parse(text)?;
    sample_and_test(&b, &[dim], count, seed)
        .map(|r| r.min_lambda)
        .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn check(text: &str) -> Result<String, JsValue> {
    check_text(text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn spectrum_curve(text: &str, points: usize) -> Result<Vec<f64>, JsValue> {
    curve(text, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sample_min(text: &str, dim: usize, count: usize, seed: u64) -> Result<f64, JsValue> {
    sample_text(text, dim, count, seed).map_err(|e| JsValue::from_str(&e))
}
