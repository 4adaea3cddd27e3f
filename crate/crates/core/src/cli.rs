//! Command-line front end. Exit codes are the machine contract:
//! 0 = SOS certificate (or valid certificate under `verify`), 10 = refuted,
//! 20 = inconclusive, 1 = malformed input or invalid certificate.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::algebra::MatrixPolynomial;
use crate::error::{Error, Result};
use crate::polytext::{format_polynomial, parse_polynomial};
use crate::repsample::{sample_and_test, scalar_grid_oracle, DEFAULT_GRID_BUDGET};
use crate::sdp::SdpConfig;
use crate::soscert::{certify_sos, Certification, GramCertificate, MomentCertificate};
use crate::verify::{verify_certificate, Tolerances};
use crate::witness::{extract_witness, WitnessReport};

pub const EXIT_SOS: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_REFUTED: i32 = 10;
pub const EXIT_INCONCLUSIVE: i32 = 20;

#[derive(Parser, Debug)]
#[command(
    name = "fgsos",
    version,
    about = "Certify or refute positivity of matrix polynomials over free groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for an SOS certificate, escalating the degree; emit a witness on refutation.
    Check {
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Where to write the certificate (default: next to the input).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the moment certificate behind a witness.
        #[arg(long)]
        moment_out: Option<PathBuf>,
    },
    /// Print SOS factors in the polynomial text grammar.
    Decompose {
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Build a witness from a given moment certificate.
    Witness {
        input: PathBuf,
        #[arg(long)]
        moment: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate under Haar-random unitary representations.
    Sample {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 4, 8])]
        dims: Vec<usize>,
        /// Samples per dimension.
        #[arg(long, default_value_t = 75)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        eps_psd: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimize over a grid of one-dimensional representations.
    Oracle {
        input: PathBuf,
        #[arg(long, default_value_t = 360)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_BUDGET)]
        budget: u128,
        #[arg(long, default_value_t = 1e-8)]
        eps_psd: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a certificate against a polynomial without running the solver.
    Verify {
        certificate: PathBuf,
        #[arg(long)]
        against: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        eps_psd: f64,
        #[arg(long)]
        eps_sos: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Starting basis degree (default: half the polynomial's degree, rounded up).
    #[arg(long)]
    degree: Option<usize>,
    /// Last degree tried (default: starting degree + 1).
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long, default_value_t = 1e-7)]
    eps_feas: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps_psd: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iters: usize,
}

impl SolverArgs {
    fn config(&self) -> SdpConfig {
        SdpConfig {
            eps_feas: self.eps_feas,
            eps_psd: self.eps_psd,
            max_iters: self.max_iters,
            ..SdpConfig::default()
        }
    }

    fn degrees(&self, b: &MatrixPolynomial) -> std::ops::RangeInclusive<usize> {
        let start = self.degree.unwrap_or(b.degree().div_ceil(2));
        let end = self.max_degree.unwrap_or(start + 1).max(start);
        start..=end
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Check {
            input,
            solver,
            out,
            moment_out,
        } => check(&input, &solver, out, moment_out),
        Command::Decompose { input, solver } => decompose(&input, &solver),
        Command::Witness { input, moment, out } => {
            let b = load_polynomial(&input)?;
            let cert = MomentCertificate::from_json(&fs::read_to_string(&moment)?)?;
            match extract_witness(&cert, &b) {
                Ok(w) => {
                    let path = out.unwrap_or_else(|| sibling(&moment, "witness"));
                    write_witness(&w, &path)?;
                    Ok(EXIT_REFUTED)
                }
                Err(
                    e @ (Error::WitnessFailed(_)
                    | Error::ContractionViolation(_)
                    | Error::DegenerateNumerics(_)),
                ) => {
                    println!("no witness: {e}");
                    Ok(EXIT_INCONCLUSIVE)
                }
                Err(e) => Err(e),
            }
        }
        Command::Sample {
            input,
            dims,
            count,
            seed,
            eps_psd,
            out,
        } => {
            let b = load_polynomial(&input)?;
            let report = sample_and_test(&b, &dims, count, seed)?;
            println!(
                "min lambda over {} samples (dims {dims:?}, seed {seed}): {:.6e}",
                count * dims.len(),
                report.min_lambda
            );
            if let Some(path) = out {
                fs::write(&path, report.to_json()?)?;
            }
            Ok(if report.min_lambda < -eps_psd {
                EXIT_REFUTED
            } else {
                0
            })
        }
        Command::Oracle {
            input,
            grid,
            budget,
            eps_psd,
            out,
        } => {
            let b = load_polynomial(&input)?;
            let report = scalar_grid_oracle(&b, grid, budget)?;
            println!(
                "grid minimum ({grid} points per generator): {:.6e} at theta = {:?}",
                report.min_lambda, report.argmin
            );
            if let Some(path) = out {
                fs::write(&path, report.to_json()?)?;
            }
            Ok(if report.min_lambda < -eps_psd {
                EXIT_REFUTED
            } else {
                0
            })
        }
        Command::Verify {
            certificate,
            against,
            eps_psd,
            eps_sos,
        } => {
            let b = load_polynomial(&against)?;
            let tol = Tolerances {
                eps_psd,
                eps_sos,
                ..Tolerances::default()
            };
            match verify_certificate(&fs::read_to_string(&certificate)?, &b, &tol) {
                Ok(summary) => {
                    println!("{summary}");
                    Ok(0)
                }
                Err(e) => {
                    println!("invalid: {e}");
                    Ok(EXIT_INVALID)
                }
            }
        }
    }
}

/// Reads a polynomial as JSON, or as the text grammar when the file does not
/// start with `{`.
pub fn load_polynomial(path: &Path) -> Result<MatrixPolynomial> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        MatrixPolynomial::from_json(&text)
    } else {
        parse_polynomial(text.trim(), None)
    }
}

fn sibling(input: &Path, tag: &str) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    input.with_file_name(format!("{stem}.{tag}.json"))
}

fn write_witness(w: &WitnessReport, path: &Path) -> Result<()> {
    fs::write(path, w.to_json()?)?;
    println!(
        "refuted: witness of dimension {} with value {:.6e} (lambda_min {:.6e}) written to {}",
        w.rep.dim,
        w.value,
        w.lambda_min,
        path.display()
    );
    Ok(())
}

enum Search {
    Sos(GramCertificate),
    Refuted(MomentCertificate, WitnessReport),
    Inconclusive(String),
}

fn search(b: &MatrixPolynomial, solver: &SolverArgs) -> Result<Search> {
    let cfg = solver.config();
    let mut last = String::from("no degree tried");
    for degree in solver.degrees(b) {
        match certify_sos(b, degree, &cfg)? {
            Certification::Sos(cert) => return Ok(Search::Sos(cert)),
            Certification::Moment(cert) => {
                println!(
                    "no SOS certificate at degree {degree} (moment objective {:.6e})",
                    cert.objective
                );
                match extract_witness(&cert, b) {
                    Ok(w) => return Ok(Search::Refuted(cert, w)),
                    Err(e) => last = format!("witness extraction failed at degree {degree}: {e}"),
                }
            }
            Certification::Inconclusive { iterations, .. } => {
                last =
                    format!("solver inconclusive at degree {degree} after {iterations} iterations");
            }
        }
        println!("{last}");
    }
    Ok(Search::Inconclusive(last))
}

fn check(
    input: &Path,
    solver: &SolverArgs,
    out: Option<PathBuf>,
    moment_out: Option<PathBuf>,
) -> Result<i32> {
    let b = load_polynomial(input)?;
    match search(&b, solver)? {
        Search::Sos(cert) => {
            let path = out.unwrap_or_else(|| sibling(input, "sos"));
            fs::write(&path, cert.to_json()?)?;
            println!(
                "SOS: {} factors at degree {}, residual {:.3e}, certificate written to {}",
                cert.factors.len(),
                cert.degree,
                cert.residual,
                path.display()
            );
            Ok(EXIT_SOS)
        }
        Search::Refuted(moment, w) => {
            if let Some(path) = moment_out {
                fs::write(&path, moment.to_json()?)?;
            }
            let path = out.unwrap_or_else(|| sibling(input, "witness"));
            write_witness(&w, &path)?;
            Ok(EXIT_REFUTED)
        }
        Search::Inconclusive(reason) => {
            println!("inconclusive: {reason}");
            Ok(EXIT_INCONCLUSIVE)
        }
    }
}

fn decompose(input: &Path, solver: &SolverArgs) -> Result<i32> {
    let b = load_polynomial(input)?;
    match search(&b, solver)? {
        Search::Sos(cert) => {
            println!("b = sum of a_k* a_k with residual {:.3e}", cert.residual);
            for (k, a) in cert.factors.iter().enumerate() {
                println!("a_{} = {}", k + 1, format_polynomial(a));
            }
            Ok(EXIT_SOS)
        }
        Search::Refuted(..) => {
            println!("not a sum of squares: refuted by a unitary representation (run `check` for the witness)");
            Ok(EXIT_REFUTED)
        }
        Search::Inconclusive(reason) => {
            println!("inconclusive: {reason}");
            Ok(EXIT_INCONCLUSIVE)
        }
    }
}
