//! Command-line front end: feasibility checks, feedback synthesis with all
//! implemented methods, field-of-values boundary export, and the benchmark
//! harness.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 infeasible pair,
//! 3 solver non-convergence.

mod bench_cmd;
mod config;
mod io;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use dissipator::constructors::{
    block_parametrized_feedback, default_skelton_params, pencil_minimize, seeded_valid_h2,
    shift_for_strictness, skelton_feedback, spectral_feedback,
};
use dissipator::error::Error as SolverError;
use dissipator::fov::{flat_segment, fov_boundary, FovBoundary};
use dissipator::gradient_flow::{default_m, outer_solve, GlOptions, Variant};
use dissipator::model::{is_dissipatable, verify_dissipating, ControlPair, FeedbackResult};

use config::{resolve, resolve_jobs, resolve_seed, FileConfig};
use report::{matrix_checksum, matrix_rows, Convergence, InputDigest, KPayload, RunReport};

#[derive(Parser)]
#[command(
    name = "dissipator",
    version,
    about = "Dissipative feedback synthesis for matrix pairs (A, B)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CliFamily {
    Example1,
    Example1b,
    Grcar,
    Clustered,
    RandomFeasible,
    RandomInfeasible,
}

impl From<CliFamily> for dissipator::bench::Family {
    fn from(f: CliFamily) -> Self {
        use dissipator::bench::Family;
        match f {
            CliFamily::Example1 => Family::Example1,
            CliFamily::Example1b => Family::Example1b,
            CliFamily::Grcar => Family::Grcar,
            CliFamily::Clustered => Family::Clustered,
            CliFamily::RandomFeasible => Family::RandomFeasible,
            CliFamily::RandomInfeasible => Family::RandomInfeasible,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Two-phase gradient flow minimizing the Frobenius norm
    Gl,
    /// Gradient flow on the positive-part functional
    #[value(name = "gl+")]
    GlPlus,
    /// Invariant-subspace constructor K = Y X^{-1}
    Spectral,
    /// Classical parametrization with default (R, L)
    Skelton,
    /// Norm minimization over definite pencils
    Pencil,
    /// Eigenvector-block parametrization
    Block,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Gl => "gl",
            Method::GlPlus => "gl+",
            Method::Spectral => "spectral",
            Method::Skelton => "skelton",
            Method::Pencil => "pencil",
            Method::Block => "block",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the pair can be made dissipative
    Check {
        /// System matrix file (.csv or .mtx)
        a: PathBuf,
        /// Control matrix file (.csv or .mtx)
        b: PathBuf,
        /// Classification tolerance; defaults to 1e-8 (1 + ||A||_F)
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compute a dissipating feedback and write a JSON run report
    Solve {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Number of rightmost eigenvalues driven by the gradient flow
        #[arg(long)]
        m: Option<usize>,
        /// Shift A by delta I before solving; both classifications reported
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Outer iteration budget (gl/gl+) or objective evaluations (pencil)
        #[arg(long)]
        max_iter: Option<usize>,
        /// Report path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Sample the field-of-values boundary of A or A - BK
    Fov {
        a: PathBuf,
        /// Control matrix; requires a feedback file
        #[arg(requires = "k")]
        b: Option<PathBuf>,
        /// Feedback matrix forming the closed loop A - BK
        k: Option<PathBuf>,
        #[arg(long, default_value_t = 720)]
        angles: usize,
        /// Near-null tolerance for the flat-segment test
        #[arg(long)]
        tol: Option<f64>,
        /// Output file: .json for a single JSON document, anything else
        /// writes CSV plus a .meta.json sidecar
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark preset or a family seed sweep; writes CSVs and a
    /// manifest
    Bench {
        /// Published-table preset
        #[arg(long, value_enum, required_unless_present = "family")]
        preset: Option<bench_cmd::Preset>,
        /// Generator family for a custom seed sweep
        #[arg(long, value_enum, conflicts_with = "preset")]
        family: Option<CliFamily>,
        /// JSON parameters for --family, e.g. '{"n": 30, "shift": 0.52}'
        #[arg(long, default_value = "")]
        params: String,
        /// Restrict the methods a preset or sweep runs (comma separated)
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Seeds for the generator-driven presets (comma separated)
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Worker threads; defaults to the logical core count
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<io::ParseError> for Failure {
    fn from(e: io::ParseError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let code = match e {
            SolverError::NotDissipatable(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep clap's rendered help/usage text but normalize the code
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_pair(a: &Path, b: &Path) -> Result<ControlPair, Failure> {
    let a = io::read_matrix(a)?;
    let b = io::read_matrix(b)?;
    ControlPair::new(a, b).map_err(Failure::from)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Check { a, b, tol, config } => cmd_check(&a, &b, tol, config.as_deref()),
        Command::Solve {
            a,
            b,
            method,
            m,
            delta,
            seed,
            tol,
            max_iter,
            out,
            config,
        } => cmd_solve(
            &a,
            &b,
            method,
            m,
            delta,
            seed,
            tol,
            max_iter,
            out.as_deref(),
            config.as_deref(),
        ),
        Command::Fov {
            a,
            b,
            k,
            angles,
            tol,
            out,
        } => cmd_fov(&a, b.as_deref(), k.as_deref(), angles, tol, &out),
        Command::Bench {
            preset,
            family,
            params,
            methods,
            seeds,
            jobs,
            out,
            config,
        } => {
            let file = FileConfig::load(config.as_deref()).map_err(Failure::usage)?;
            let seeds = seeds.unwrap_or_else(|| vec![resolve_seed(None, &file).max(1)]);
            if seeds.is_empty() {
                return Err(Failure::usage("at least one seed is required"));
            }
            let jobs = resolve_jobs(jobs, &file);
            match (preset, family) {
                (Some(preset), None) => {
                    bench_cmd::run(preset, methods.as_deref(), &seeds, jobs, &out)
                        .map_err(Failure::usage)?;
                }
                (None, Some(family)) => {
                    bench_cmd::run_family(
                        family.into(),
                        &params,
                        methods.as_deref(),
                        &seeds,
                        jobs,
                        &out,
                    )
                    .map_err(Failure::usage)?;
                }
                _ => return Err(Failure::usage("exactly one of --preset or --family")),
            }
            Ok(0)
        }
    }
}

fn feasibility_json(pair: &ControlPair, tol: f64) -> Result<(serde_json::Value, bool), Failure> {
    let report = is_dissipatable(pair, tol)?;
    let value = json!({
        "feasible": report.feasible,
        "margin": report.margin,
        "tolerance": report.tolerance,
        "n": pair.n(),
        "q": pair.q(),
        "restricted_spectrum": report.restricted_spectrum,
    });
    Ok((value, report.feasible))
}

fn cmd_check(a: &Path, b: &Path, tol: Option<f64>, config: Option<&Path>) -> Result<u8, Failure> {
    let file = FileConfig::load(config).map_err(Failure::usage)?;
    let pair = load_pair(a, b)?;
    let tol = resolve(tol, None, file.tol, pair.default_tolerance());
    let (value, feasible) = feasibility_json(&pair, tol)?;
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
    Ok(if feasible { 0 } else { 2 })
}

struct SolveOutcome {
    result: FeedbackResult,
    eps_star: Option<f64>,
    f_final: Option<f64>,
}

fn dispatch_method(
    pair: &ControlPair,
    method: Method,
    m: Option<usize>,
    seed: u64,
    max_iter: Option<usize>,
) -> Result<SolveOutcome, Failure> {
    let outcome = match method {
        Method::Gl | Method::GlPlus => {
            let variant = if method == Method::Gl {
                Variant::Plain
            } else {
                Variant::Plus
            };
            let m = match m {
                Some(m) => m,
                None => default_m(pair, variant)?,
            };
            let opts = GlOptions {
                max_outer: max_iter.unwrap_or(80),
                ..Default::default()
            };
            let (result, trace) = outer_solve(pair, m, variant, &opts)?;
            SolveOutcome {
                result,
                eps_star: Some(trace.eps_star),
                f_final: trace.iterates.last().map(|it| it.f),
            }
        }
        Method::Spectral => SolveOutcome {
            result: spectral_feedback(pair)?,
            eps_star: None,
            f_final: None,
        },
        Method::Skelton => {
            let params = default_skelton_params(pair)?;
            SolveOutcome {
                result: skelton_feedback(pair, &params)?,
                eps_star: None,
                f_final: None,
            }
        }
        Method::Pencil => {
            let search = pencil_minimize(pair, max_iter.unwrap_or(10_000), seed)?;
            SolveOutcome {
                result: search.result,
                eps_star: None,
                f_final: None,
            }
        }
        Method::Block => {
            let h2 = if seed == 0 {
                nalgebra::DMatrix::zeros(pair.q(), pair.n())
            } else {
                seeded_valid_h2(pair, seed, 0.5)?
            };
            SolveOutcome {
                result: block_parametrized_feedback(pair, &h2)?,
                eps_star: None,
                f_final: None,
            }
        }
    };
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    a_path: &Path,
    b_path: &Path,
    method: Method,
    m: Option<usize>,
    delta: Option<f64>,
    seed: Option<u64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    out: Option<&Path>,
    config: Option<&Path>,
) -> Result<u8, Failure> {
    let started = Instant::now();
    let file = FileConfig::load(config).map_err(Failure::usage)?;
    let seed = resolve_seed(seed, &file);
    let max_iter = resolve(max_iter, None, file.max_iter, usize::MAX);
    let max_iter = if max_iter == usize::MAX {
        None
    } else {
        Some(max_iter)
    };
    let pair = load_pair(a_path, b_path)?;
    let tol = resolve(tol, None, file.tol, pair.default_tolerance());

    let (feasibility, feasible) = feasibility_json(&pair, tol)?;
    if !feasible {
        println!(
            "{}",
            serde_json::to_string_pretty(&feasibility).expect("json")
        );
        return Ok(2);
    }

    let delta = delta.unwrap_or(0.0);
    let solve_pair = if delta > 0.0 {
        shift_for_strictness(&pair, delta)?
    } else {
        pair.clone()
    };

    let outcome = dispatch_method(&solve_pair, method, m, seed, max_iter)?;
    let result = outcome.result;

    let shifted = if delta > 0.0 {
        let original = verify_dissipating(&pair, &result.k, tol)?;
        Some(report::ShiftedReport {
            delta,
            classification_shifted: result.classification,
            classification_original: original.classification,
        })
    } else {
        None
    };

    let (classification, rightmost) = match &shifted {
        Some(s) => {
            let original = verify_dissipating(&pair, &result.k, tol)?;
            (s.classification_original, original.spectrum)
        }
        None => (result.classification, result.sym_spectrum.clone()),
    };

    let k_payload = if pair.n() * pair.q() <= report::INLINE_LIMIT {
        KPayload {
            inline: Some(matrix_rows(&result.k)),
            file: None,
        }
    } else {
        let k_path = match out {
            Some(p) => {
                let mut path = p.to_path_buf();
                path.set_extension("k.csv");
                path
            }
            None => PathBuf::from("dissipator_k.csv"),
        };
        std::fs::write(&k_path, io::matrix_to_csv(&result.k))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", k_path.display())))?;
        KPayload {
            inline: None,
            file: Some(k_path.display().to_string()),
        }
    };

    let rightmost_keep = rightmost.iter().take(10).copied().collect();
    let report = RunReport {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        method: method.name().to_string(),
        parameters: json!({
            "m": m,
            "delta": if delta > 0.0 { Some(delta) } else { None },
            "tol": tol,
            "max_iter": max_iter,
        }),
        input: InputDigest {
            n: pair.n(),
            q: pair.q(),
            norm_a_frobenius: pair.a().norm(),
            norm_b_frobenius: pair.b().norm(),
            checksum_a: matrix_checksum(pair.a()),
            checksum_b: matrix_checksum(pair.b()),
        },
        k: k_payload,
        norm_frobenius: result.norm_frobenius,
        norm_spectral: result.norm_spectral,
        classification,
        rightmost: rightmost_keep,
        convergence: Convergence {
            converged: result.converged,
            iterations: result.iterations,
            eps_star: outcome.eps_star,
            f_final: outcome.f_final,
            warnings: result.warnings.clone(),
        },
        shifted,
        seed,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };

    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{text}"),
    }
    Ok(if result.converged { 0 } else { 3 })
}

fn cmd_fov(
    a_path: &Path,
    b_path: Option<&Path>,
    k_path: Option<&Path>,
    angles: usize,
    tol: Option<f64>,
    out: &Path,
) -> Result<u8, Failure> {
    let a = io::read_matrix(a_path)?;
    let mut boundary: FovBoundary;
    match (b_path, k_path) {
        (Some(bp), Some(kp)) => {
            let b = io::read_matrix(bp)?;
            let k = io::read_matrix(kp)?;
            let pair = ControlPair::new(a, b)?;
            let tol = tol.unwrap_or_else(|| pair.default_tolerance());
            let closed = pair.closed_loop(&k)?;
            boundary = fov_boundary(&closed, angles)?;
            boundary.flat_segment = match flat_segment(&pair, &k, tol) {
                Ok(sigma) => Some(sigma),
                Err(SolverError::NoFlatSegment(_)) | Err(SolverError::PreconditionViolated(_)) => {
                    None
                }
                Err(e) => return Err(e.into()),
            };
        }
        (None, None) => {
            boundary = fov_boundary(&a, angles)?;
        }
        _ => return Err(Failure::usage("--b and --k must be given together")),
    }

    let is_json = out.extension().and_then(|e| e.to_str()) == Some("json");
    if is_json {
        std::fs::write(out, boundary.to_json())
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", out.display())))?;
    } else {
        std::fs::write(out, boundary.to_csv())
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", out.display())))?;
        let sidecar = {
            let mut s = out.as_os_str().to_owned();
            s.push(".meta.json");
            PathBuf::from(s)
        };
        let meta = json!({
            "abscissa": boundary.abscissa,
            "flat_segment_sigma": boundary.flat_segment,
            "num_points": boundary.points.len(),
        });
        std::fs::write(&sidecar, serde_json::to_string_pretty(&meta).expect("json"))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", sidecar.display())))?;
    }
    Ok(0)
}
