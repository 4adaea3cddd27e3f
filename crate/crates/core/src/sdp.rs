//! Hermitian semidefinite feasibility with Farkas certificates.
//!
//! Decides whether `{G ⪰ 0 : ⟨A_t, G⟩ = c_t for all t}` is nonempty, where the
//! `A_t` are Hermitian and `⟨X, Y⟩ = Re tr(X† Y)`. The main loop alternates
//! projections between the affine subspace and a (slightly shifted) PSD cone.
//! Two exits are checked along the way:
//!
//! * the affine iterate is itself PSD, or a low-rank Levenberg-Marquardt
//!   polish of the cone iterate (`G = L L†`) drives the residual to zero;
//! * the displacement between the cone iterate and its affine projection is
//!   `A*(y)` for an explicit `y`, which is a Farkas certificate as soon as
//!   `A*(y) ⪰ 0` and `Σ y_t c_t < 0`.
//!
//! Every reported outcome is re-checked against its invariants before it is
//! returned; nothing is trusted from the iteration itself.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{herm_eig, ComplexMatrix, PivotedCholesky, C64, ZERO};

/// `⟨A, G⟩ = rhs` with `A` given by its nonzero entries. The entry list must
/// describe a Hermitian matrix (both `(r, s)` and `(s, r)` present).
#[derive(Clone, Debug)]
pub struct Constraint {
    pub entries: Vec<(usize, usize, C64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    dim: usize,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpConfig {
    /// Max constraint residual accepted for a feasible point.
    pub eps_feas: f64,
    /// Min eigenvalue slack for PSD checks on `G` and on the dual matrix.
    pub eps_psd: f64,
    /// Required Farkas gap; `None` means `1e-6 · ‖c‖`.
    pub delta_gap: Option<f64>,
    pub max_iters: usize,
}

impl Default for SdpConfig {
    fn default() -> Self {
        SdpConfig {
            eps_feas: 1e-7,
            eps_psd: 1e-8,
            delta_gap: None,
            max_iters: 50_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FeasiblePoint {
    pub gram: ComplexMatrix,
    /// `max_t |⟨A_t, G⟩ - c_t|`.
    pub residual: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

/// Multipliers `y` with `Z = Σ y_t A_t ⪰ -eps_psd` and `Σ y_t c_t ≤ -delta_gap`,
/// normalized to `tr Z = 1` (or `Z = 0` when the affine constraints alone are
/// inconsistent).
#[derive(Clone, Debug)]
pub struct FarkasCertificate {
    pub multipliers: Vec<f64>,
    pub dual: ComplexMatrix,
    pub gap: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub enum SdpOutcome {
    Feasible(FeasiblePoint),
    Infeasible(FarkasCertificate),
    Inconclusive {
        iterations: usize,
        /// Distance between the final cone and affine iterates.
        distance: f64,
    },
}

impl SdpProblem {
    pub fn new(dim: usize) -> Self {
        SdpProblem {
            dim,
            constraints: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Adds `⟨A, G⟩ = rhs`. Duplicate entries are summed; the result must be
    /// Hermitian.
    pub fn add_constraint(&mut self, entries: Vec<(usize, usize, C64)>, rhs: f64) -> Result<()> {
        let mut acc: HashMap<(usize, usize), C64> = HashMap::new();
        for (r, s, a) in entries {
            if r >= self.dim || s >= self.dim {
                return Err(Error::InvalidProblem(format!(
                    "entry ({r}, {s}) outside dimension {}",
                    self.dim
                )));
            }
            *acc.entry((r, s)).or_insert(ZERO) += a;
        }
        let scale = acc.values().map(|z| z.norm()).fold(0.0, f64::max);
        let mut dev: f64 = 0.0;
        for (&(r, s), &a) in &acc {
            let b = acc.get(&(s, r)).copied().unwrap_or(ZERO);
            dev = dev.max((a - b.conj()).norm());
        }
        if dev > 1e-12 * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        if !rhs.is_finite() {
            return Err(Error::InvalidProblem("non-finite right-hand side".into()));
        }
        let mut entries: Vec<(usize, usize, C64)> = acc
            .into_iter()
            .filter(|(_, a)| *a != ZERO)
            .map(|((r, s), a)| (r, s, a))
            .collect();
        entries.sort_by_key(|&(r, s, _)| (r, s));
        self.constraints.push(Constraint { entries, rhs });
        Ok(())
    }

    /// Adds `⟨A, G⟩ = rhs` for a dense Hermitian `A`.
    pub fn add_dense_constraint(&mut self, a: &ComplexMatrix, rhs: f64) -> Result<()> {
        if a.rows() != self.dim || a.cols() != self.dim {
            return Err(Error::InvalidProblem(
                "constraint matrix has wrong size".into(),
            ));
        }
        let dev = a.hermitian_deviation();
        if dev > 1e-12 * a.max_abs() {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let mut entries = Vec::new();
        for r in 0..self.dim {
            for s in 0..self.dim {
                if a[(r, s)] != ZERO {
                    entries.push((r, s, a[(r, s)]));
                }
            }
        }
        self.add_constraint(entries, rhs)
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    /// `A(X)_t = ⟨A_t, X⟩`.
    pub fn apply(&self, x: &ComplexMatrix) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| {
                c.entries
                    .iter()
                    .map(|&(r, s, a)| (a.conj() * x[(r, s)]).re)
                    .sum()
            })
            .collect()
    }

    /// `A*(y) = Σ_t y_t A_t`.
    pub fn adjoint(&self, y: &[f64]) -> ComplexMatrix {
        let mut z = ComplexMatrix::zeros(self.dim, self.dim);
        for (c, &yt) in self.constraints.iter().zip(y) {
            if yt == 0.0 {
                continue;
            }
            for &(r, s, a) in &c.entries {
                z[(r, s)] += a * yt;
            }
        }
        z
    }

    /// `max_t |⟨A_t, X⟩ - c_t|`.
    pub fn residual(&self, x: &ComplexMatrix) -> f64 {
        self.apply(x)
            .iter()
            .zip(&self.constraints)
            .map(|(v, c)| (v - c.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Dense `A A*` as a row-major `T x T` matrix.
    fn gram(&self) -> Vec<f64> {
        let t = self.constraints.len();
        let mut by_pos: HashMap<(usize, usize), Vec<(usize, C64)>> = HashMap::new();
        for (k, c) in self.constraints.iter().enumerate() {
            for &(r, s, a) in &c.entries {
                by_pos.entry((r, s)).or_default().push((k, a));
            }
        }
        let mut g = vec![0.0; t * t];
        for list in by_pos.values() {
            for &(i, a) in list {
                for &(j, b) in list {
                    g[i * t + j] += (a.conj() * b).re;
                }
            }
        }
        g
    }
}

/// Affine projector onto `{X : A(X) = c}` restricted to a maximal independent
/// subset of constraints.
struct AffineProjector<'a> {
    problem: &'a SdpProblem,
    chol: PivotedCholesky,
    gram: Vec<f64>,
    rhs: Vec<f64>,
}

impl<'a> AffineProjector<'a> {
    fn new(problem: &'a SdpProblem) -> Self {
        let gram = problem.gram();
        let t = problem.constraints.len();
        let chol = PivotedCholesky::new(&gram, t, 1e-12);
        AffineProjector {
            problem,
            chol,
            gram,
            rhs: problem.rhs(),
        }
    }

    /// Returns `(Π(X), y)` with `X - Π(X) = A*(y)`.
    fn project(&self, x: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>) {
        let ax = self.problem.apply(x);
        let r: Vec<f64> = ax.iter().zip(&self.rhs).map(|(a, c)| a - c).collect();
        let y = self.chol.solve(&r);
        let corr = self.problem.adjoint(&y);
        (x - &corr, y)
    }

    /// Multipliers `y` with `A*(y) = 0` and `⟨y, c⟩ < 0`, when the affine
    /// constraints are inconsistent.
    fn affine_inconsistency(&self, x0: &ComplexMatrix, tol: f64) -> Option<Vec<f64>> {
        let t = self.rhs.len();
        let ax = self.problem.apply(x0);
        let (worst, res) = (0..t)
            .map(|k| (k, ax[k] - self.rhs[k]))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
        if res.abs() <= tol {
            return None;
        }
        let col: Vec<f64> = (0..t).map(|i| self.gram[i * t + worst]).collect();
        let alpha = self.chol.solve(&col);
        let sign = res.signum();
        let y: Vec<f64> = (0..t)
            .map(|k| sign * (if k == worst { 1.0 } else { 0.0 } - alpha[k]))
            .collect();
        Some(y)
    }
}

fn clamp_eigenvalues(x: &ComplexMatrix, floor: f64) -> Result<(ComplexMatrix, f64)> {
    let eig = herm_eig(x)?;
    let min = eig.min();
    let q = eig.apply(|l| l.max(floor));
    Ok((q, min))
}

/// Solves the feasibility problem. Deterministic for fixed inputs.
pub fn solve(problem: &SdpProblem, cfg: &SdpConfig) -> Result<SdpOutcome> {
    if problem.dim == 0 {
        return Err(Error::InvalidProblem("dimension must be positive".into()));
    }
    if problem.constraints.is_empty() {
        return Err(Error::InvalidProblem(
            "at least one constraint is required".into(),
        ));
    }
    let rhs = problem.rhs();
    let c_norm = rhs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let delta_gap = cfg.delta_gap.unwrap_or(1e-6 * c_norm);
    let scale = rhs.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1e-300);
    let proj = AffineProjector::new(problem);

    let (x0, _) = proj.project(&ComplexMatrix::zeros(problem.dim, problem.dim));
    if let Some(y) = proj.affine_inconsistency(&x0, cfg.eps_feas) {
        let gap: f64 = y.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        return Ok(SdpOutcome::Infeasible(FarkasCertificate {
            dual: problem.adjoint(&y),
            multipliers: y,
            gap,
            min_eigenvalue: 0.0,
            iterations: 0,
        }));
    }

    // Multipliers realizing the identity, when it lies in the range of A*.
    let identity_multipliers = {
        let id = ComplexMatrix::identity(problem.dim);
        let y = proj.chol.solve(&problem.apply(&id));
        let resid = (&id - &problem.adjoint(&y)).max_abs();
        (resid <= 1e-10).then_some(y)
    };

    let mut shift = 1e-3 * scale / problem.dim as f64;
    let mut x = x0;
    let mut best_distance = f64::INFINITY;
    let mut stall = 0usize;
    let mut next_polish = 20usize;
    let mut distance = f64::INFINITY;

    for it in 1..=cfg.max_iters {
        // x is affine-feasible here.
        let (q, min_x) = clamp_eigenvalues(&x, shift)?;
        if min_x >= -cfg.eps_psd {
            if let Some(f) = accept_feasible(problem, &x, cfg, it) {
                return Ok(SdpOutcome::Feasible(f));
            }
        }
        let (x_next, y) = proj.project(&q);
        distance = (&q - &x_next).frobenius();

        if it % 5 == 0 || it <= 3 {
            if let Some(cert) = farkas_from(
                problem,
                &y,
                identity_multipliers.as_deref(),
                &rhs,
                cfg,
                delta_gap,
                it,
            )? {
                return Ok(SdpOutcome::Infeasible(cert));
            }
        }

        if it == next_polish && distance <= 1e-1 * scale {
            next_polish *= 2;
            let (q0, _) = clamp_eigenvalues(&x_next, 0.0)?;
            if let Some(f) = polish(problem, &q0, cfg, it)? {
                return Ok(SdpOutcome::Feasible(f));
            }
        } else if it == next_polish {
            next_polish += 20;
        }

        if distance < 0.99 * best_distance {
            best_distance = distance;
            stall = 0;
        } else {
            stall += 1;
        }
        if stall >= 50 && shift > 0.0 {
            shift *= 0.1;
            if shift < 1e-12 * scale {
                shift = 0.0;
            }
            stall = 0;
            best_distance = f64::INFINITY;
        }
        x = x_next;
    }

    let (q0, _) = clamp_eigenvalues(&x, 0.0)?;
    if let Some(f) = polish(problem, &q0, cfg, cfg.max_iters)? {
        return Ok(SdpOutcome::Feasible(f));
    }
    Ok(SdpOutcome::Inconclusive {
        iterations: cfg.max_iters,
        distance,
    })
}

fn accept_feasible(
    problem: &SdpProblem,
    g: &ComplexMatrix,
    cfg: &SdpConfig,
    iterations: usize,
) -> Option<FeasiblePoint> {
    let g = g.hermitian_part();
    let residual = problem.residual(&g);
    let min = herm_eig(&g).ok()?.min();
    (residual <= cfg.eps_feas && min >= -cfg.eps_psd).then_some(FeasiblePoint {
        gram: g,
        residual,
        min_eigenvalue: min,
        iterations,
    })
}

fn farkas_from(
    problem: &SdpProblem,
    y: &[f64],
    identity_multipliers: Option<&[f64]>,
    rhs: &[f64],
    cfg: &SdpConfig,
    delta_gap: f64,
    iterations: usize,
) -> Result<Option<FarkasCertificate>> {
    let mut y = y.to_vec();
    let mut z = problem.adjoint(&y).hermitian_part();
    let mut min = herm_eig(&z)?.min();
    if let (Some(yi), true) = (identity_multipliers, min < 0.0) {
        let eta = -min;
        for (a, b) in y.iter_mut().zip(yi) {
            *a += eta * b;
        }
        z = problem.adjoint(&y).hermitian_part();
        min = herm_eig(&z)?.min();
    }
    let tr = z.trace().re;
    if tr <= 0.0 || !tr.is_finite() {
        return Ok(None);
    }
    for a in &mut y {
        *a /= tr;
    }
    let z = z.scale_real(1.0 / tr);
    let min = min / tr;
    let gap: f64 = y.iter().zip(rhs).map(|(a, b)| a * b).sum();
    if min >= -cfg.eps_psd && gap <= -delta_gap && gap < 0.0 {
        Ok(Some(FarkasCertificate {
            multipliers: y,
            dual: z,
            gap,
            min_eigenvalue: min,
            iterations,
        }))
    } else {
        Ok(None)
    }
}

/// Levenberg-Marquardt on `A(L L†) = c` starting from factors of `q0`.
///
/// An overparametrized factor converges slowly because the surplus columns
/// have zero first-order effect, so each rank up to the numerical rank is
/// tried; a second round restarts from the best factor found.
fn polish(
    problem: &SdpProblem,
    q0: &ComplexMatrix,
    cfg: &SdpConfig,
    iterations: usize,
) -> Result<Option<FeasiblePoint>> {
    let d = problem.dim;
    let tol = cfg.eps_feas * 1e-3;
    let mut start = q0.clone();
    for _ in 0..2 {
        let eig = herm_eig(&start)?;
        let lmax = eig.max();
        if !(lmax > 0.0) {
            return Ok(None);
        }
        let mut best: Option<(f64, ComplexMatrix)> = None;
        for r in candidate_ranks(&eig.values) {
            let l0 = ComplexMatrix::from_fn(d, r, |i, k| {
                eig.vectors[(i, k)] * eig.values[k].max(lmax * 1e-8).sqrt()
            });
            let (l, inf) = levenberg_marquardt(problem, l0, tol);
            if inf <= tol {
                let g = l.matmul(&l.adjoint()).hermitian_part();
                if let Some(f) = accept_feasible(problem, &g, cfg, iterations) {
                    return Ok(Some(f));
                }
            }
            if best.as_ref().is_none_or(|(b, _)| inf < *b) {
                best = Some((inf, l));
            }
        }
        match best {
            Some((_, l)) => start = l.matmul(&l.adjoint()),
            None => return Ok(None),
        }
    }
    Ok(None)
}

/// Every rank up to the numerical rank, then full rank.
fn candidate_ranks(values: &[f64]) -> Vec<usize> {
    let d = values.len();
    let lmax = values.first().copied().unwrap_or(0.0);
    let numerical = values.iter().filter(|&&l| l > 1e-9 * lmax).count();
    let mut ranks: Vec<usize> = (1..=numerical).collect();
    if numerical < d {
        ranks.push(d);
    }
    ranks
}

/// Returns the final factor and its max residual; stops early once the
/// residual stalls.
fn levenberg_marquardt(
    problem: &SdpProblem,
    mut l: ComplexMatrix,
    tol: f64,
) -> (ComplexMatrix, f64) {
    let d = l.rows();
    let r = l.cols();
    let nvar = 2 * d * r;
    let t = problem.constraints.len();
    let rhs = problem.rhs();
    let residual = |l: &ComplexMatrix| -> Vec<f64> {
        let g = l.matmul(&l.adjoint());
        problem
            .apply(&g)
            .iter()
            .zip(&rhs)
            .map(|(a, c)| a - c)
            .collect()
    };
    let norm2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut res = residual(&l);
    let mut history = vec![max_abs(&res)];
    let mut mu = 1e-6;
    for k in 0..60 {
        let inf = history[k];
        if inf <= tol || (k >= 8 && inf > 0.5 * history[k - 8]) {
            break;
        }
        // Rows of the Jacobian: d/dL ⟨A_t, L L†⟩ = 2 A_t L as a real vector.
        let mut jac = vec![0.0; t * nvar];
        for (k, c) in problem.constraints.iter().enumerate() {
            let row = &mut jac[k * nvar..(k + 1) * nvar];
            for &(i, s, a) in &c.entries {
                for col in 0..r {
                    let v = a * l[(s, col)] * 2.0;
                    row[2 * (i * r + col)] += v.re;
                    row[2 * (i * r + col) + 1] += v.im;
                }
            }
        }
        let base = norm2(&res);
        let mut improved = false;
        for _ in 0..12 {
            let step = lm_step(&jac, &res, t, nvar, mu);
            let trial = ComplexMatrix::from_fn(d, r, |i, col| {
                let k = 2 * (i * r + col);
                l[(i, col)] - C64::new(step[k], step[k + 1])
            });
            let trial_res = residual(&trial);
            if norm2(&trial_res) < base {
                l = trial;
                res = trial_res;
                mu = (mu / 10.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
        history.push(max_abs(&res));
    }
    let inf = max_abs(&res);
    (l, inf)
}

/// Solves `min ‖J δ - res‖² + μ‖J‖²‖δ‖²` using whichever normal system is smaller.
fn lm_step(jac: &[f64], res: &[f64], t: usize, nvar: usize, mu: f64) -> Vec<f64> {
    if t <= nvar {
        let mut a = vec![0.0; t * t];
        for i in 0..t {
            let ri = &jac[i * nvar..(i + 1) * nvar];
            for j in 0..=i {
                let rj = &jac[j * nvar..(j + 1) * nvar];
                let v: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
                a[i * t + j] = v;
                a[j * t + i] = v;
            }
        }
        let damp = mu * (0..t).map(|i| a[i * t + i]).fold(0.0, f64::max).max(1e-300);
        for i in 0..t {
            a[i * t + i] += damp;
        }
        let u = PivotedCholesky::new(&a, t, 0.0).solve(res);
        let mut step = vec![0.0; nvar];
        for i in 0..t {
            let ri = &jac[i * nvar..(i + 1) * nvar];
            for (s, x) in step.iter_mut().zip(ri) {
                *s += x * u[i];
            }
        }
        step
    } else {
        let mut a = vec![0.0; nvar * nvar];
        let mut g = vec![0.0; nvar];
        for k in 0..t {
            let row = &jac[k * nvar..(k + 1) * nvar];
            for i in 0..nvar {
                if row[i] == 0.0 {
                    continue;
                }
                g[i] += row[i] * res[k];
                for j in 0..nvar {
                    a[i * nvar + j] += row[i] * row[j];
                }
            }
        }
        let damp = mu
            * (0..nvar)
                .map(|i| a[i * nvar + i])
                .fold(0.0, f64::max)
                .max(1e-300);
        for i in 0..nvar {
            a[i * nvar + i] += damp;
        }
        PivotedCholesky::new(&a, nvar, 0.0).solve(&g)
    }
}
