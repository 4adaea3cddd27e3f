//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion fails.
//!
//! Polynomial products, representation images and certificate quantities are
//! recomputed here with plain word lists and dense matrices rather than the
//! library's own evaluation routines.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use fgsos::algebra::{matrix_to_json, MatrixPolynomial};
use fgsos::cli;
use fgsos::linalg::{haar_unitary, herm_eig, psd_sqrt, ComplexMatrix, C64};
use fgsos::repsample::scalar_grid_oracle;
use fgsos::soscert::GramCertificate;
use fgsos::witness::{dilate, WitnessJson};
use fgsos::words::{reduce, ReducedWord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Terms = BTreeMap<Vec<i32>, ComplexMatrix>;
type Criterion = fn(&mut State) -> Outcome;

const ZERO: C64 = C64::new(0.0, 0.0);

fn report(line: &str) {
    // Bypasses test output capture so the summary lands in the log.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- oracles

/// Stack-based free reduction.
fn oracle_reduce(raw: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(raw.len());
    for &l in raw {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

fn oracle_inverse(w: &[i32]) -> Vec<i32> {
    w.iter().rev().map(|l| -l).collect()
}

fn oracle_mul(u: &[i32], v: &[i32]) -> Vec<i32> {
    let mut raw = u.to_vec();
    raw.extend_from_slice(v);
    oracle_reduce(&raw)
}

fn terms_of(p: &MatrixPolynomial) -> Terms {
    p.terms()
        .iter()
        .map(|(w, c)| (w.letters().to_vec(), c.clone()))
        .collect()
}

fn accumulate(acc: &mut Terms, w: Vec<i32>, c: &ComplexMatrix) {
    match acc.get_mut(&w) {
        Some(e) => *e = &*e + c,
        None => {
            acc.insert(w, c.clone());
        }
    }
}

fn oracle_product(a: &Terms, b: &Terms) -> Terms {
    let mut out = Terms::new();
    for (u, x) in a {
        for (v, y) in b {
            accumulate(&mut out, oracle_mul(u, v), &x.matmul(y));
        }
    }
    out
}

fn oracle_star(a: &Terms) -> Terms {
    a.iter()
        .map(|(w, c)| (oracle_inverse(w), c.adjoint()))
        .collect()
}

fn oracle_square_sum(factors: &[Terms]) -> Terms {
    let mut out = Terms::new();
    for a in factors {
        for (w, c) in oracle_product(&oracle_star(a), a) {
            accumulate(&mut out, w, &c);
        }
    }
    out
}

/// Max-norm of the coefficientwise difference.
fn oracle_distance(a: &Terms, b: &Terms, m: usize) -> f64 {
    let zero = ComplexMatrix::zeros(m, m);
    a.keys()
        .chain(b.keys())
        .map(|w| (a.get(w).unwrap_or(&zero) - b.get(w).unwrap_or(&zero)).max_abs())
        .fold(0.0, f64::max)
}

fn oracle_scale(a: &Terms) -> f64 {
    a.values().map(|c| c.max_abs()).fold(0.0, f64::max)
}

fn to_poly(m: usize, n: usize, t: &Terms) -> MatrixPolynomial {
    MatrixPolynomial::from_terms(
        m,
        n,
        t.iter()
            .map(|(w, c)| (reduce(w, n).expect("valid letters"), c.clone())),
    )
    .expect("valid terms")
}

/// Image of a word under a list of unitaries, by repeated multiplication.
fn oracle_word_matrix(unitaries: &[ComplexMatrix], w: &[i32], dim: usize) -> ComplexMatrix {
    w.iter().fold(ComplexMatrix::identity(dim), |acc, &l| {
        let u = &unitaries[l.unsigned_abs() as usize - 1];
        if l > 0 {
            acc.matmul(u)
        } else {
            acc.matmul(&u.adjoint())
        }
    })
}

/// `Σ_w B_w ⊗ ρ(w)` with the coefficient index outermost.
fn oracle_image(b: &Terms, unitaries: &[ComplexMatrix], m: usize, dim: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(m * dim, m * dim);
    for (w, c) in b {
        let r = oracle_word_matrix(unitaries, w, dim);
        for i in 0..m {
            for j in 0..m {
                for p in 0..dim {
                    for q in 0..dim {
                        out[(i * dim + p, j * dim + q)] += c[(i, j)] * r[(p, q)];
                    }
                }
            }
        }
    }
    out
}

fn quad_form(a: &ComplexMatrix, v: &[C64]) -> C64 {
    let av = a.mul_vec(v);
    v.iter().zip(&av).map(|(x, y)| x.conj() * y).sum()
}

fn unitarity_gap(u: &ComplexMatrix) -> f64 {
    (&u.adjoint().matmul(u) - &ComplexMatrix::identity(u.rows())).frobenius()
}

fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, m, |_, _| random_complex(rng))
}

// ---------------------------------------------------------------- harness

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().expect("temporary directory"),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write_poly(&self, name: &str, p: &MatrixPolynomial) -> PathBuf {
        let path = self.path(name);
        std::fs::write(&path, p.to_json().unwrap()).unwrap();
        path
    }
}

fn run_cli(args: &[&str]) -> i32 {
    let mut full = vec!["fgsos"];
    full.extend_from_slice(args);
    cli::run(full)
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

struct State {
    ws: Workspace,
    /// `(polynomial file, certificate file, m, b terms)` for criterion 1.
    sos: Vec<(PathBuf, PathBuf, usize, Terms)>,
    /// `(polynomial file, witness file, moment file, b terms, m)` for criterion 2.
    refuted: Vec<(PathBuf, PathBuf, PathBuf, Terms, usize)>,
    boundary: Option<(PathBuf, PathBuf)>,
}

// ---------------------------------------------------------------- criteria

/// Random `a` with support on words of length at most one over two generators.
fn random_factor(rng: &mut ChaCha8Rng, m: usize) -> Terms {
    let words: [&[i32]; 5] = [&[], &[1], &[-1], &[2], &[-2]];
    let mut t = Terms::new();
    for w in words {
        if rng.random_bool(0.7) {
            t.insert(w.to_vec(), random_matrix(rng, m));
        }
    }
    if t.is_empty() {
        t.insert(vec![], random_matrix(rng, m));
    }
    t
}

fn criterion_1(st: &mut State) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let m = rng.random_range(1..=2);
        let k = rng.random_range(1..=3);
        let factors: Vec<Terms> = (0..k).map(|_| random_factor(&mut rng, m)).collect();
        let b = oracle_square_sum(&factors);
        let input = st
            .ws
            .write_poly(&format!("sos{case}.json"), &to_poly(m, 2, &b));
        let cert_path = st.ws.path(&format!("sos{case}.cert.json"));
        let code = run_cli(&["check", p(&input), "--out", p(&cert_path)]);
        ensure(code == cli::EXIT_SOS, || {
            format!("case {case}: check exited {code}")
        })?;
        let cert = GramCertificate::from_json(&std::fs::read_to_string(&cert_path).unwrap())
            .map_err(|e| format!("case {case}: unreadable certificate: {e}"))?;
        let rebuilt = oracle_square_sum(&cert.factors.iter().map(terms_of).collect::<Vec<_>>());
        let residual = oracle_distance(&rebuilt, &b, m);
        ensure(residual <= 1e-6, || {
            format!("case {case}: residual {residual:e}")
        })?;
        worst = worst.max(residual);
        st.sos.push((input, cert_path, m, b));
    }
    Ok(format!(
        "50/50 certified, worst reconstruction residual {worst:.2e}"
    ))
}

/// Oracle objective `Σ_g Σ_ij (B_g)_ij M[(v, j), (w, i)]` with `v⁻¹w = g⁻¹`.
fn oracle_objective(cert_json: &Value, b: &Terms, m: usize) -> Result<f64, String> {
    let basis: Vec<Vec<i32>> = cert_json["basis"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            s.as_str()
                .unwrap()
                .parse::<ReducedWord>()
                .unwrap()
                .letters()
                .to_vec()
        })
        .collect();
    let moment = json_matrix(&cert_json["moment"]);
    let mut total = ZERO;
    for (g, c) in b {
        let target = oracle_inverse(g);
        let (pv, pw) = basis
            .iter()
            .enumerate()
            .flat_map(|(i, v)| basis.iter().enumerate().map(move |(j, w)| (i, j, v, w)))
            .find(|(_, _, v, w)| oracle_mul(&oracle_inverse(v), w) == target)
            .map(|(i, j, _, _)| (i, j))
            .ok_or_else(|| format!("word {g:?} unreachable from the basis"))?;
        for i in 0..m {
            for j in 0..m {
                total += c[(i, j)] * moment[(pv * m + j, pw * m + i)];
            }
        }
    }
    Ok(total.re)
}

fn json_matrix(v: &Value) -> ComplexMatrix {
    let rows: Vec<Vec<C64>> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r.as_array()
                .unwrap()
                .iter()
                .map(|z| C64::new(z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
                .collect()
        })
        .collect();
    ComplexMatrix::from_rows(&rows).unwrap()
}

fn criterion_2(st: &mut State) -> Outcome {
    let cases: [(&str, usize, Terms); 2] = [
        ("1 - x1 - x1^-1", 1, {
            let mut t = Terms::new();
            t.insert(vec![], ComplexMatrix::identity(1));
            t.insert(vec![1], ComplexMatrix::identity(1).scale_real(-1.0));
            t.insert(vec![-1], ComplexMatrix::identity(1).scale_real(-1.0));
            t
        }),
        ("[[1, 2*x1], [2*x1^-1, 1]]", 2, {
            let two = C64::new(2.0, 0.0);
            let mut t = Terms::new();
            t.insert(vec![], ComplexMatrix::identity(2));
            t.insert(
                vec![1],
                ComplexMatrix::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { two } else { ZERO }),
            );
            t.insert(
                vec![-1],
                ComplexMatrix::from_fn(2, 2, |i, j| if (i, j) == (1, 0) { two } else { ZERO }),
            );
            t
        }),
    ];
    let mut lines = Vec::new();
    for (idx, (text, m, b)) in cases.into_iter().enumerate() {
        let input = st.ws.path(&format!("refute{idx}.txt"));
        std::fs::write(&input, text).unwrap();
        let wit = st.ws.path(&format!("refute{idx}.witness.json"));
        let mom = st.ws.path(&format!("refute{idx}.moment.json"));
        let code = run_cli(&[
            "check",
            p(&input),
            "--out",
            p(&wit),
            "--moment-out",
            p(&mom),
        ]);
        ensure(code == cli::EXIT_REFUTED, || {
            format!("{text}: check exited {code}")
        })?;
        let wj: WitnessJson = serde_json::from_value(read_json(&wit)).map_err(|e| e.to_string())?;
        let (rep, xi) = wj.parts().map_err(|e| e.to_string())?;
        let unitarity = rep.unitaries.iter().map(unitarity_gap).fold(0.0, f64::max);
        ensure(unitarity <= 1e-8, || {
            format!("{text}: unitarity defect {unitarity:e}")
        })?;
        let rho = oracle_image(&b, &rep.unitaries, m, rep.dim);
        let value = quad_form(&rho, &xi).re;
        ensure(value < 0.0, || {
            format!("{text}: pairing {value:e} is not negative")
        })?;
        let lambda = herm_eig(&rho.hermitian_part()).unwrap().min();
        let grid = scalar_grid_oracle(&to_poly(m, 1, &b), 360, u128::MAX)
            .unwrap()
            .min_lambda;
        ensure((grid + 1.0).abs() <= 1e-9, || {
            format!("{text}: grid minimum {grid} != -1")
        })?;
        ensure(lambda >= grid - 1e-4, || {
            format!("{text}: lambda_min {lambda} below grid {grid}")
        })?;
        lines.push(format!(
            "{text}: N={} value {value:.4} lambda_min {lambda:.4}",
            rep.dim
        ));
        st.refuted.push((input, wit, mom, b, m));
    }
    Ok(lines.join("; "))
}

fn random_contraction(rng: &mut ChaCha8Rng, h: usize) -> ComplexMatrix {
    let a = haar_unitary(h, rng);
    let b = haar_unitary(h, rng);
    let sigma: Vec<f64> = (0..h)
        .map(|_| match rng.random_range(0..5) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        })
        .collect();
    a.matmul(&ComplexMatrix::from_real_diag(&sigma)).matmul(&b)
}

fn criterion_3(_: &mut State) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst_u, mut worst_i): (f64, f64) = (0.0, 0.0);
    for case in 0..200 {
        let h = rng.random_range(1..=12);
        let c = random_contraction(&mut rng, h);
        let u = dilate(&c).map_err(|e| format!("case {case}: {e}"))?;
        let du = unitarity_gap(&u);
        ensure(du <= 1e-8, || {
            format!("case {case}: unitarity defect {du:e}")
        })?;
        ensure((&u.block(0, 0, h, h) - &c).max_abs() == 0.0, || {
            format!("case {case}: top-left block is not C")
        })?;
        let right = u.block(h, 0, h, h);
        let left = u.block(0, h, h, h).scale_real(-1.0);
        let di = (&c.matmul(&right) - &left.matmul(&c)).frobenius();
        ensure(di <= 1e-8, || {
            format!("case {case}: intertwining residual {di:e}")
        })?;
        // The blocks must be the actual defect square roots.
        let id = ComplexMatrix::identity(h);
        let want_r = psd_sqrt(&(&id - &c.adjoint().matmul(&c)).hermitian_part(), 1e-10).unwrap();
        let want_l = psd_sqrt(&(&id - &c.matmul(&c.adjoint())).hermitian_part(), 1e-10).unwrap();
        let dev = (&right - &want_r)
            .max_abs()
            .max((&left - &want_l).max_abs());
        ensure(dev <= 1e-6, || {
            format!("case {case}: defect root off by {dev:e}")
        })?;
        worst_u = worst_u.max(du);
        worst_i = worst_i.max(di);
    }
    Ok(format!(
        "200/200 dilations, worst unitarity {worst_u:.1e}, worst intertwining {worst_i:.1e}"
    ))
}

fn criterion_4(st: &mut State) -> Outcome {
    let mut lines = Vec::new();
    ensure(!st.refuted.is_empty(), || {
        "no refuted instances from criterion 2".into()
    })?;
    for (_, wit, mom, b, m) in &st.refuted {
        let mj = read_json(mom);
        let wj: WitnessJson = serde_json::from_value(read_json(wit)).unwrap();
        let (rep, xi) = wj.parts().unwrap();
        let moment = json_matrix(&mj["moment"]);
        // ξ' has squared length equal to the identity block's trace.
        let len2: f64 = (0..*m).map(|j| moment[(j, j)].re).sum();
        let raw = quad_form(&oracle_image(b, &rep.unitaries, *m, rep.dim), &xi).re * len2;
        let f = oracle_objective(&mj, b, *m)?;
        let reported = mj["objective"].as_f64().unwrap();
        ensure((f - reported).abs() <= 1e-9 * (1.0 + f.abs()), || {
            format!("reported objective {reported} but moment gives {f}")
        })?;
        let tol = 1e-6 * (1.0 + f.abs());
        ensure((raw - f).abs() <= tol, || {
            format!("pairing {raw} vs objective {f}")
        })?;
        lines.push(format!("f(b) = {f:.6}, pairing {raw:.6}"));
    }
    Ok(lines.join("; "))
}

fn criterion_5(st: &mut State) -> Outcome {
    ensure(st.sos.len() == 50, || {
        format!("only {} certified instances", st.sos.len())
    })?;
    let mut worst = f64::INFINITY;
    for (case, (input, _, _, _)) in st.sos.iter().enumerate() {
        let out = st.ws.path(&format!("sample{case}.json"));
        let seed = format!("{}", 500 + case);
        let code = run_cli(&[
            "sample",
            p(input),
            "--dims",
            "1,2,4,8",
            "--count",
            "75",
            "--seed",
            &seed,
            "--out",
            p(&out),
        ]);
        let j = read_json(&out);
        let lambda = j["min_lambda"].as_f64().unwrap();
        ensure(
            j["count"].as_u64() == Some(75) && j["dims"].as_array().map(Vec::len) == Some(4),
            || format!("case {case}: unexpected sample layout"),
        )?;
        ensure(lambda >= -1e-8, || {
            format!("case {case}: lambda_min {lambda:e}")
        })?;
        ensure(code == 0, || format!("case {case}: sample exited {code}"))?;
        worst = worst.min(lambda);
    }
    Ok(format!("50 x 300 samples, smallest lambda_min {worst:.3e}"))
}

fn criterion_6(st: &mut State) -> Outcome {
    let input = st.ws.path("boundary.txt");
    std::fs::write(&input, "2 + x1 + x1^-1").unwrap();
    let cert = st.ws.path("boundary.sos.json");
    let code = run_cli(&[
        "check",
        p(&input),
        "--degree",
        "1",
        "--max-degree",
        "1",
        "--out",
        p(&cert),
    ]);
    ensure(code == cli::EXIT_SOS, || format!("check exited {code}"))?;
    let j = read_json(&cert);
    ensure(j["degree"].as_u64() == Some(1), || {
        format!("certified at degree {}", j["degree"])
    })?;
    let grid_out = st.ws.path("boundary.grid.json");
    let code = run_cli(&["oracle", p(&input), "--grid", "360", "--out", p(&grid_out)]);
    ensure(code == 0, || format!("oracle exited {code}"))?;
    let g = read_json(&grid_out)["min_lambda"].as_f64().unwrap();
    // Independent: 2 + 2cos(θ) on the same grid.
    let direct = (0..360)
        .map(|t| 2.0 + 2.0 * (std::f64::consts::TAU * t as f64 / 360.0).cos())
        .fold(f64::INFINITY, f64::min);
    ensure(g.abs() <= 1e-3 && (g - direct).abs() <= 1e-12, || {
        format!("grid minimum {g}, direct {direct}")
    })?;
    st.boundary = Some((input, cert));
    Ok(format!("SOS at degree 1, grid minimum {g:.1e}"))
}

fn random_word(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> Vec<i32> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| {
            let g = rng.random_range(1..=n as i32);
            if rng.random_bool(0.5) {
                g
            } else {
                -g
            }
        })
        .collect()
}

fn random_poly(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Terms {
    let mut t = Terms::new();
    for _ in 0..rng.random_range(0..=5) {
        let w = oracle_reduce(&random_word(rng, n, 4));
        let c = random_matrix(rng, m).scale_real(10f64.powi(rng.random_range(-3..=3)));
        accumulate(&mut t, w, &c);
    }
    t
}

fn criterion_7(_: &mut State) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let rel = 1e-12;
    for case in 0..1000 {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(1..=3);
        // Free reduction: agrees with the stack oracle and is idempotent.
        let raw = random_word(&mut rng, n, 10);
        let w = reduce(&raw, n).map_err(|e| e.to_string())?;
        ensure(w.letters() == oracle_reduce(&raw).as_slice(), || {
            format!("case {case}: reduce({raw:?})")
        })?;
        let again = reduce(w.letters(), n).unwrap();
        ensure(again == w && w.is_reduced(), || {
            format!("case {case}: reduction not idempotent")
        })?;

        let (ta, tb) = (random_poly(&mut rng, m, n), random_poly(&mut rng, m, n));
        let (a, b) = (to_poly(m, n, &ta), to_poly(m, n, &tb));
        let scale = 1.0
            + oracle_scale(&ta) * oracle_scale(&tb) * 5.0
            + oracle_scale(&ta)
            + oracle_scale(&tb);
        let tol = rel * scale;
        let check = |lhs: &MatrixPolynomial, rhs: &Terms, what: &str| -> Result<(), String> {
            let d = oracle_distance(&terms_of(lhs), rhs, m);
            ensure(d <= tol, || format!("case {case}: {what} off by {d:e}"))
        };
        let ab = a.multiply(&b).unwrap();
        check(&ab, &oracle_product(&ta, &tb), "product")?;
        check(
            &ab.involute(),
            &oracle_product(&oracle_star(&tb), &oracle_star(&ta)),
            "(ab)* = b*a*",
        )?;
        check(&a.involute().involute(), &ta, "a** = a")?;
        let lambda = random_complex(&mut rng);
        let mut want = oracle_star(&ta);
        for c in want.values_mut() {
            *c = c.scale(lambda.conj());
        }
        for (w, c) in oracle_star(&tb) {
            accumulate(&mut want, w, &c);
        }
        check(
            &a.scale(lambda).add(&b).unwrap().involute(),
            &want,
            "(λa + b)* = λ̄a* + b*",
        )?;

        // Faithful trace: τ(a*a) = (1/m) Σ_w ‖A_w‖², zero exactly when a = 0.
        let ta = if case % 10 == 0 { Terms::new() } else { ta };
        let a = to_poly(m, n, &ta);
        let tau = a.involute().multiply(&a).unwrap().trace();
        let want: f64 = ta.values().map(|c| c.frobenius().powi(2)).sum::<f64>() / m as f64;
        ensure(
            (tau.re - want).abs() <= rel * want.max(f64::MIN_POSITIVE)
                && tau.im.abs() <= rel * want,
            || format!("case {case}: trace {tau} vs {want}"),
        )?;
        let nonzero = ta.values().any(|c| c.max_abs() > 0.0);
        ensure((tau.re > 0.0) == nonzero && tau.re >= 0.0, || {
            format!("case {case}: trace {tau} for nonzero={nonzero}")
        })?;
    }
    Ok("1000 cases: reduction, involution and trace laws hold".into())
}

/// Each tampering edits one aspect of a valid certificate.
type Tamper = (&'static str, fn(&mut Value));

fn entry(v: &mut Value, r: usize, c: usize) -> &mut Value {
    &mut v[r][c]
}

fn bump(z: &mut Value, dre: f64, dim: f64) {
    z[0] = (z[0].as_f64().unwrap() + dre).into();
    z[1] = (z[1].as_f64().unwrap() + dim).into();
}

fn scale_all(v: &mut Value, s: f64) {
    for row in v.as_array_mut().unwrap() {
        for z in row.as_array_mut().unwrap() {
            z[0] = (z[0].as_f64().unwrap() * s).into();
            z[1] = (z[1].as_f64().unwrap() * s).into();
        }
    }
}

const SOS_TAMPERS: [Tamper; 8] = [
    ("gram diagonal scaled", |j| {
        bump(entry(&mut j["gram"], 0, 0), 0.5, 0.0)
    }),
    ("gram made non-Hermitian", |j| {
        bump(entry(&mut j["gram"], 0, 1), 0.0, 1e-3)
    }),
    ("gram made indefinite", |j| {
        let last = j["gram"].as_array().unwrap().len() - 1;
        let z = entry(&mut j["gram"], last, last);
        z[0] = (-1.0).into();
    }),
    ("factor coefficient perturbed", |j| {
        let t = &mut j["factors"][0]["terms"][0]["matrix"][0][0];
        bump(t, 1e-3, 0.0);
    }),
    ("factor duplicated", |j| {
        let f = j["factors"].as_array_mut().unwrap();
        f.push(f[0].clone());
    }),
    ("basis words swapped", |j| {
        j["basis"].as_array_mut().unwrap().swap(1, 2)
    }),
    ("degree field altered", |j| {
        j["degree"] = (j["degree"].as_u64().unwrap() + 1).into()
    }),
    ("reported residual falsified", |j| {
        j["residual"] = 0.25.into()
    }),
];

const WITNESS_TAMPERS: [Tamper; 6] = [
    ("unitary perturbed", |j| {
        bump(entry(&mut j["unitaries"][0], 0, 0), 1e-3, 0.0)
    }),
    ("xi rescaled", |j| {
        for z in j["xi"].as_array_mut().unwrap() {
            z[0] = (z[0].as_f64().unwrap() * 2.0).into();
            z[1] = (z[1].as_f64().unwrap() * 2.0).into();
        }
    }),
    ("value sign flipped", |j| {
        j["value"] = (-j["value"].as_f64().unwrap()).into()
    }),
    ("lambda_min falsified", |j| {
        j["lambda_min"] = (j["lambda_min"].as_f64().unwrap() - 1.0).into()
    }),
    ("unitaries replaced by identity", |j| {
        let dim = j["N"].as_u64().unwrap() as usize;
        let id = matrix_to_json(&ComplexMatrix::identity(dim));
        for u in j["unitaries"].as_array_mut().unwrap() {
            *u = serde_json::to_value(&id).unwrap();
        }
    }),
    ("dimension field altered", |j| {
        j["N"] = (j["N"].as_u64().unwrap() + 1).into()
    }),
];

const MOMENT_TAMPERS: [Tamper; 6] = [
    ("objective sign flipped", |j| {
        j["objective"] = (-j["objective"].as_f64().unwrap()).into()
    }),
    ("normalization broken", |j| scale_all(&mut j["moment"], 2.0)),
    ("consistency broken", |j| {
        // Two pairs reaching the identity word in different ways must agree.
        let last = j["moment"].as_array().unwrap().len() - 1;
        let z = entry(&mut j["moment"], last, last);
        bump(z, 0.2, 0.0);
    }),
    ("moment made non-Hermitian", |j| {
        bump(entry(&mut j["moment"], 0, 1), 0.0, 0.3)
    }),
    ("moment made indefinite", |j| {
        let z = entry(&mut j["moment"], 0, 1);
        z[0] = 5.0.into();
        z[1] = 0.0.into();
        let z = entry(&mut j["moment"], 1, 0);
        z[0] = 5.0.into();
        z[1] = 0.0.into();
    }),
    ("kind relabeled", |j| j["kind"] = "sos".into()),
];

fn criterion_8(st: &mut State) -> Outcome {
    let mut emitted: Vec<(PathBuf, PathBuf)> = st
        .sos
        .iter()
        .map(|(i, c, _, _)| (i.clone(), c.clone()))
        .collect();
    for (input, wit, mom, _, _) in &st.refuted {
        emitted.push((input.clone(), wit.clone()));
        emitted.push((input.clone(), mom.clone()));
    }
    if let Some(pair) = &st.boundary {
        emitted.push(pair.clone());
    }
    ensure(emitted.len() == 55, || {
        format!("expected 55 emitted certificates, have {}", emitted.len())
    })?;
    for (input, cert) in &emitted {
        let code = run_cli(&["verify", p(cert), "--against", p(input)]);
        ensure(code == 0, || {
            format!("{} rejected (exit {code})", cert.display())
        })?;
    }

    // Tamper with a two-by-two SOS certificate, the first witness and the first moment.
    let (sos_in, sos_cert) = st
        .sos
        .iter()
        .find(|(_, _, m, b)| *m == 2 && b.keys().any(|w| w.len() == 2))
        .map(|(i, c, _, _)| (i.clone(), c.clone()))
        .ok_or("no m = 2 instance")?;
    let (ref_in, wit, mom, _, _) = st.refuted[0].clone();
    let groups: [(&PathBuf, &PathBuf, &[Tamper]); 3] = [
        (&sos_in, &sos_cert, &SOS_TAMPERS),
        (&ref_in, &wit, &WITNESS_TAMPERS),
        (&ref_in, &mom, &MOMENT_TAMPERS),
    ];
    let mut rejected = 0;
    for (input, cert, tampers) in groups {
        let original = read_json(cert);
        for (name, tamper) in tampers {
            let mut j = original.clone();
            tamper(&mut j);
            let path = st.ws.path("tampered.json");
            std::fs::write(&path, serde_json::to_string(&j).unwrap()).unwrap();
            let code = run_cli(&["verify", p(&path), "--against", p(input)]);
            ensure(code == cli::EXIT_INVALID, || {
                format!("tampering '{name}' accepted (exit {code})")
            })?;
            rejected += 1;
        }
    }
    ensure(rejected == 20, || {
        format!("ran {rejected} tamperings, expected 20")
    })?;
    Ok(format!(
        "{} certificates verified, 20/20 tamperings rejected",
        emitted.len()
    ))
}

#[test]
fn acceptance() {
    let mut st = State {
        ws: Workspace::new(),
        sos: Vec::new(),
        refuted: Vec::new(),
        boundary: None,
    };
    let criteria: [(&str, Criterion); 8] = [
        ("SOS round-trip", criterion_1),
        ("refutation soundness", criterion_2),
        ("dilation identities", criterion_3),
        ("agreement check", criterion_4),
        ("forward-direction sampling", criterion_5),
        ("boundary case", criterion_6),
        ("algebra laws", criterion_7),
        ("certificate independence", criterion_8),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = f(&mut st);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => report(&format!(
                "PASS criterion {}: {name}: {detail} ({secs:.1}s)",
                k + 1
            )),
            Err(detail) => {
                report(&format!(
                    "FAIL criterion {}: {name}: {detail} ({secs:.1}s)",
                    k + 1
                ));
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
