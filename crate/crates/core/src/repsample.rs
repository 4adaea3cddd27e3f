//! Empirical falsification: evaluate `b` under Haar-random unitary
//! representations and under a grid of one-dimensional representations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{matrix_to_json, MatrixJson, MatrixPolynomial};
use crate::error::{Error, Result};
use crate::linalg::{haar_unitary, herm_eig, ComplexMatrix, C64};
use crate::witness::{evaluate_rep, FiniteRep};

/// Default cap on `n · grid^n` for the grid oracle.
pub const DEFAULT_GRID_BUDGET: u128 = 20_000_000;
pub const DEFAULT_DIMS: [usize; 4] = [1, 2, 4, 8];

#[derive(Clone, Debug)]
pub struct SampleReport {
    pub seed: u64,
    pub dims: Vec<usize>,
    /// Samples drawn per dimension.
    pub count: usize,
    pub min_lambda: f64,
    /// Representation attaining the minimum, kept only when it is negative.
    pub argmin: Option<FiniteRep>,
}

/// Generator stream for sample `index`, independent of evaluation order.
fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `count` representations per dimension with independent Haar
/// generators and returns the smallest eigenvalue of `ρ_m(b)` seen.
pub fn sample_and_test(
    b: &MatrixPolynomial,
    dims: &[usize],
    count: usize,
    seed: u64,
) -> Result<SampleReport> {
    if count == 0 {
        return Err(Error::InvalidProblem(
            "sample count must be at least 1".into(),
        ));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidProblem("dimensions must be positive".into()));
    }
    let mut best = f64::INFINITY;
    let mut argmin = None;
    let mut index = 0u64;
    for &dim in dims {
        for _ in 0..count {
            let mut rng = sample_rng(seed, index);
            index += 1;
            let unitaries = (0..b.n()).map(|_| haar_unitary(dim, &mut rng)).collect();
            let rep = FiniteRep::new(dim, unitaries)?;
            let rho = evaluate_rep(&rep, b)?;
            let lambda = herm_eig(&rho.hermitian_part())?.min();
            if lambda < best {
                best = lambda;
                argmin = Some(rep);
            }
        }
    }
    Ok(SampleReport {
        seed,
        dims: dims.to_vec(),
        count,
        min_lambda: best,
        argmin: argmin.filter(|_| best < 0.0),
    })
}

#[derive(Clone, Debug)]
pub struct GridReport {
    pub grid: usize,
    pub evaluations: u128,
    pub min_lambda: f64,
    /// Angles `θ_k` of the minimizing character `x_k ↦ e^{iθ_k}`.
    pub argmin: Vec<f64>,
}

/// Minimum of `λ_min(b(e^{iθ_1}, …, e^{iθ_n}))` over the uniform grid
/// `θ_k ∈ {2πt/grid}`. One-dimensional representations factor through the
/// abelianization, so each word contributes `e^{i⟨θ, exponents⟩}`.
pub fn scalar_grid_oracle(b: &MatrixPolynomial, grid: usize, budget: u128) -> Result<GridReport> {
    if grid < 2 {
        return Err(Error::InvalidProblem("grid needs at least 2 points".into()));
    }
    let n = b.n();
    let evaluations = (grid as u128)
        .checked_pow(n as u32)
        .and_then(|p| p.checked_mul(n.max(1) as u128))
        .unwrap_or(u128::MAX);
    if evaluations > budget {
        return Err(Error::BudgetExceeded {
            evaluations,
            budget,
        });
    }
    let m = b.m();
    let terms: Vec<(Vec<i64>, &ComplexMatrix)> = b
        .terms()
        .iter()
        .map(|(w, c)| {
            let mut exps = vec![0i64; n];
            for &l in w.letters() {
                exps[l.unsigned_abs() as usize - 1] += l.signum() as i64;
            }
            (exps, c)
        })
        .collect();
    let step = std::f64::consts::TAU / grid as f64;
    let mut idx = vec![0usize; n];
    let mut best = f64::INFINITY;
    let mut argmin = vec![0.0; n];
    loop {
        let mut mat = ComplexMatrix::zeros(m, m);
        for (exps, c) in &terms {
            let phase: f64 = exps
                .iter()
                .zip(&idx)
                .map(|(&e, &t)| e as f64 * t as f64 * step)
                .sum();
            let z = C64::from_polar(1.0, phase);
            for i in 0..m {
                for j in 0..m {
                    mat[(i, j)] += c[(i, j)] * z;
                }
            }
        }
        let lambda = if m == 1 {
            mat[(0, 0)].re
        } else {
            herm_eig(&mat.hermitian_part())?.min()
        };
        if lambda < best {
            best = lambda;
            argmin = idx.iter().map(|&t| t as f64 * step).collect();
        }
        // Odometer over the grid.
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < grid {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    if terms.is_empty() {
        best = 0.0;
    }
    Ok(GridReport {
        grid,
        evaluations,
        min_lambda: best,
        argmin,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepJson {
    #[serde(rename = "N")]
    pub dim: usize,
    pub unitaries: Vec<MatrixJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleReportJson {
    pub kind: String,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub count: usize,
    pub min_lambda: f64,
    pub argmin: Option<RepJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridReportJson {
    pub kind: String,
    pub grid: usize,
    pub evaluations: u128,
    pub min_lambda: f64,
    pub argmin_theta: Vec<f64>,
}

impl SampleReport {
    pub fn to_json(&self) -> Result<String> {
        let j = SampleReportJson {
            kind: "sample".into(),
            seed: self.seed,
            dims: self.dims.clone(),
            count: self.count,
            min_lambda: self.min_lambda,
            argmin: self.argmin.as_ref().map(|rep| RepJson {
                dim: rep.dim,
                unitaries: rep.unitaries.iter().map(matrix_to_json).collect(),
            }),
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }
}

impl GridReport {
    pub fn to_json(&self) -> Result<String> {
        let j = GridReportJson {
            kind: "grid".into(),
            grid: self.grid,
            evaluations: self.evaluations,
            min_lambda: self.min_lambda,
            argmin_theta: self.argmin.clone(),
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }
}
