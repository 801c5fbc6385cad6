use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use auxetica::cubic::{symmetric_determinant, InvariantRecord, TernaryCubic, MONOMIAL_LABELS};
use auxetica::decision::{decide, simulate_path, DecisionOptions, DecisionReport, SimulationOptions};
use auxetica::deformation::{build_system, parametrize};
use auxetica::document::{
    certificate_json, cubic_json, float_value, invariants_json, k_short, read_document, read_framework, report_json,
    trajectory_record_json, write_framework, Document,
};
use auxetica::framework::SYM_LABELS;
use auxetica::lab::{family_framework, sampling_oracle, OracleOptions};
use auxetica::poly::real_roots_f64;
use auxetica::scalar::{format_float, parse_rational};
use auxetica::{Error, Rational, Scalar};

/// Frameworks with more vertex orbits than this default to float mode.
const EXACT_MAX_N: usize = 50;

const EXIT_IO: u8 = 3;
const EXIT_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "auxetica", version, about = "Decide strictly auxetic deformations of 3D periodic frameworks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct ModeFlags {
    /// Exact rational arithmetic (default for n <= 50).
    #[arg(long, conflicts_with = "float")]
    exact: bool,
    /// Floating-point arithmetic (default for n > 50).
    #[arg(long)]
    float: bool,
    /// Relative tolerance for float-mode zero tests.
    #[arg(long, value_name = "REL")]
    tolerance: Option<f64>,
    /// Machine-readable JSON output.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the decision on one or more framework documents.
    Decide {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        mode: ModeFlags,
        /// Cross-check the verdict with the sampling oracle.
        #[arg(long)]
        oracle: bool,
        /// Seed of the oracle refinement.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parallel jobs for multiple files.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print S, T, Δ, J, k and the cubic of a framework, pencil or cubic document.
    Invariants {
        file: PathBuf,
        #[command(flatten)]
        mode: ModeFlags,
    },
    /// Write the two-orbit family framework at parameter λ.
    Family {
        #[arg(allow_hyphen_values = true)]
        lambda: String,
        out: PathBuf,
    },
    /// Print the auxetic infinitesimal deformation, if any.
    Deform {
        file: PathBuf,
        #[command(flatten)]
        mode: ModeFlags,
    },
    /// Simulate an auxetic trajectory; writes one JSON record per line.
    Simulate {
        file: PathBuf,
        out: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        tau: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[command(flatten)]
        mode: ModeFlags,
    },
    /// Sample the determinant curve in the chart X+Y+Z=1 as polylines.
    Plot {
        file: PathBuf,
        out: PathBuf,
        /// Number of rays through the chart centre.
        #[arg(long, default_value_t = 720)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_IO),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io(_) | Error::Document { .. } => EXIT_IO,
                _ => EXIT_FAILURE,
            })
        }
    }
}

fn options(mode: &ModeFlags) -> auxetica::Result<DecisionOptions> {
    let mut opts = DecisionOptions::default();
    if let Some(t) = mode.tolerance {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Document { location: "--tolerance".into(), message: format!("must lie in (0, 1), got {t}") });
        }
        opts.rank.relative = t;
        opts.invariants.singular_rel = t;
        opts.definiteness = t;
    }
    Ok(opts)
}

fn use_exact(mode: &ModeFlags, n: usize) -> bool {
    if mode.exact {
        true
    } else if mode.float {
        false
    } else {
        n <= EXACT_MAX_N
    }
}

fn run(cli: Cli) -> auxetica::Result<u8> {
    match cli.command {
        Command::Decide { files, mode, oracle, seed, jobs } => {
            let opts = options(&mode)?;
            let outputs = run_batch(&files, jobs.max(1), |path| decide_file(path, &mode, &opts, oracle, seed));
            let mut code = 0u8;
            for out in outputs {
                match out {
                    Ok((text, c)) => {
                        print!("{text}");
                        code = code.max(c);
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        code = code.max(match e {
                            Error::Io(_) | Error::Document { .. } => EXIT_IO,
                            _ => EXIT_FAILURE,
                        });
                    }
                }
            }
            Ok(code)
        }
        Command::Invariants { file, mode } => invariants(&file, &mode),
        Command::Family { lambda, out } => {
            let l = parse_rational(&lambda)
                .map_err(|e| Error::Document { location: "lambda".into(), message: e.to_string() })?;
            write_file(&out, &write_framework(&family_framework(&l)))?;
            Ok(0)
        }
        Command::Deform { file, mode } => deform(&file, &mode),
        Command::Simulate { file, out, tau, steps, mode } => simulate(&file, &out, tau, steps, &mode),
        Command::Plot { file, out, samples } => plot(&file, &out, samples),
    }
}

fn run_batch<F>(files: &[PathBuf], jobs: usize, f: F) -> Vec<auxetica::Result<(String, u8)>>
where
    F: Fn(&Path) -> auxetica::Result<(String, u8)> + Sync,
{
    if jobs <= 1 || files.len() <= 1 {
        return files.iter().map(|p| f(p)).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new((0..files.len()).map(|_| None).collect::<Vec<_>>());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(files.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= files.len() {
                    break;
                }
                let r = f(&files[i]);
                results.lock().expect("no poisoned workers")[i] = Some(r);
            });
        }
    });
    results.into_inner().expect("no poisoned workers").into_iter().map(|r| r.expect("every file ran")).collect()
}

fn write_file(path: &Path, text: &str) -> auxetica::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn decide_file(
    path: &Path,
    mode: &ModeFlags,
    opts: &DecisionOptions,
    oracle: bool,
    seed: u64,
) -> auxetica::Result<(String, u8)> {
    let fw = read_framework(path)?;
    let (text, code) = if use_exact(mode, fw.n()) {
        render_decision(path, &decide(&fw, opts)?, mode.json, oracle, seed)
    } else {
        render_decision(path, &decide(&fw.to_f64(), opts)?, mode.json, oracle, seed)
    };
    Ok((text, code))
}

fn render_decision<T: Scalar>(
    path: &Path,
    r: &DecisionReport<T>,
    as_json: bool,
    oracle: bool,
    seed: u64,
) -> (String, u8) {
    let oracle_result = match (&r.pencil, oracle) {
        (Some(p), true) => Some(sampling_oracle(p, &OracleOptions { seed, ..Default::default() })),
        _ => None,
    };
    let code = r.verdict.exit_code() as u8;
    if as_json {
        let mut v = report_json(r);
        let o = v.as_object_mut().expect("report is an object");
        o.insert("file".into(), json!(path.display().to_string()));
        if let Some(found) = oracle_result {
            o.insert(
                "oracle".into(),
                match found {
                    auxetica::lab::OracleOutcome::FoundPd(d) => json!({"found_pd": d.map(float_value)}),
                    auxetica::lab::OracleOutcome::NoneFound => json!({"found_pd": null}),
                },
            );
        }
        return (format!("{}\n", serde_json::to_string_pretty(&v).expect("JSON values serialize")), code);
    }
    let mut s = String::new();
    let mut line = |t: String| {
        s.push_str(&t);
        s.push('\n');
    };
    line(format!("file: {}", path.display()));
    line(format!("mode: {}", if T::EXACT { "exact" } else { "float" }));
    line(format!("orbits: n = {}, m = {}, rank = {}", r.n, r.m, r.rank.map_or("-".into(), |k| k.to_string())));
    for w in &r.warnings {
        line(format!("warning: {w}"));
    }
    if let Some(p) = &r.pencil {
        let [x, y, z] = p.free_variable_labels();
        line(format!("free variables: X = wdot{x}, Y = wdot{y}, Z = wdot{z}"));
    }
    if let Some(inv) = &r.invariants {
        line(format!("S = {}", inv.s.repr()));
        line(format!("T = {}", inv.t.repr()));
        line(format!("Delta = {}", inv.delta.repr()));
        if let Some(j) = &inv.j {
            line(format!("J = {}", j.repr()));
        }
        if let Some(k) = &inv.k {
            line(format!("k = {} ({})", k_short(k.k), format_float(k.k)));
        }
    }
    if let Some(t) = &r.step4 {
        line(format!("preimage of (1:1:1): ({})", t.point.map(format_float).join(", ")));
        line(format!("definiteness: {}", t.class));
    }
    if let Some(d) = &r.diagnosis {
        line(format!("diagnosis: {}: {}", d.condition, d.detail));
    }
    if let Some(c) = &r.certificate {
        line(format!("certificate wdot: {}", symmetric_text(&c.gram_velocity.entries)));
    }
    if let Some(o) = oracle_result {
        line(format!(
            "oracle: {}",
            match o {
                auxetica::lab::OracleOutcome::FoundPd(d) => format!("FOUND_PD at ({})", d.map(format_float).join(", ")),
                auxetica::lab::OracleOutcome::NoneFound => "NONE_FOUND".into(),
            }
        ));
    }
    line(format!("verdict: {}", r.verdict));
    (s, code)
}

fn symmetric_text<T: Scalar>(entries: &[T; 6]) -> String {
    SYM_LABELS.iter().zip(entries).map(|(l, v)| format!("{l}={}", v.repr())).collect::<Vec<_>>().join(" ")
}

fn invariants(path: &Path, mode: &ModeFlags) -> auxetica::Result<u8> {
    let opts = options(mode)?;
    let cubic: TernaryCubic<Rational> = match read_document(path)? {
        Document::Cubic(c) => c,
        Document::Pencil(forms) => symmetric_determinant(&forms),
        Document::Framework(fw) => {
            let sys = build_system(&fw);
            match parametrize(&sys, opts.rank) {
                Ok(p) => symmetric_determinant(&p.forms),
                Err(d) => {
                    println!("not regular: {}: {}", d.condition, d.detail);
                    return Ok(2);
                }
            }
        }
    };
    if cubic.is_zero() {
        return Err(Error::ZeroCubic);
    }
    if mode.float {
        print_invariants(&cubic.to_f64(), &opts, mode.json)
    } else {
        print_invariants(&cubic, &opts, mode.json)
    }
}

fn print_invariants<T: Scalar>(c: &TernaryCubic<T>, opts: &DecisionOptions, as_json: bool) -> auxetica::Result<u8> {
    let inv = InvariantRecord::compute(c, opts.invariants)?;
    if as_json {
        let v = json!({"cubic": cubic_json(c), "invariants": invariants_json(&inv)});
        println!("{}", serde_json::to_string_pretty(&v).expect("JSON values serialize"));
        return Ok(0);
    }
    for (label, coef) in MONOMIAL_LABELS.iter().zip(&c.coeffs) {
        println!("{label}: {}", coef.repr());
    }
    println!("S = {}", inv.s.repr());
    println!("T = {}", inv.t.repr());
    match &inv.j {
        Some(j) => {
            println!("Delta = {}", inv.delta.repr());
            println!("J = {}", j.repr());
        }
        None => println!("Delta = {} (singular cubic)", inv.delta.repr()),
    }
    if let Some(k) = &inv.k {
        println!("k = {} ({})", k_short(k.k), format_float(k.k));
    }
    Ok(0)
}

fn deform(path: &Path, mode: &ModeFlags) -> auxetica::Result<u8> {
    let fw = read_framework(path)?;
    let opts = options(mode)?;
    if use_exact(mode, fw.n()) {
        print_deformation(&decide(&fw, &opts)?, mode.json)
    } else {
        print_deformation(&decide(&fw.to_f64(), &opts)?, mode.json)
    }
}

fn print_deformation<T: Scalar>(r: &DecisionReport<T>, as_json: bool) -> auxetica::Result<u8> {
    if as_json {
        let v = json!({
            "verdict": r.verdict,
            "certificate": r.certificate.as_ref().map(certificate_json),
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("JSON values serialize"));
        return Ok(r.verdict.exit_code() as u8);
    }
    println!("verdict: {}", r.verdict);
    match &r.certificate {
        Some(c) => {
            println!("(X, Y, Z) = ({})", c.xyz.iter().map(Scalar::repr).collect::<Vec<_>>().join(", "));
            let full = c.gram_velocity.full();
            println!("wdot =");
            for row in &full {
                println!("  [{}]", row.iter().map(Scalar::repr).collect::<Vec<_>>().join(", "));
            }
            for (i, q) in c.vertex_velocities.iter().enumerate() {
                println!("qdot{} = ({})", i + 1, q.iter().map(Scalar::repr).collect::<Vec<_>>().join(", "));
            }
            println!("residual = {}", format_float(c.residual));
        }
        None => {
            if let Some(d) = &r.diagnosis {
                println!("diagnosis: {}: {}", d.condition, d.detail);
            }
        }
    }
    Ok(r.verdict.exit_code() as u8)
}

fn simulate(path: &Path, out: &Path, tau: f64, steps: usize, mode: &ModeFlags) -> auxetica::Result<u8> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Document { location: "--tau".into(), message: format!("must be positive, got {tau}") });
    }
    let fw = read_framework(path)?;
    let opts = SimulationOptions { tau, steps, decision: options(mode)?, ..Default::default() };
    let traj = if use_exact(mode, fw.n()) { simulate_path(&fw, &opts)? } else { simulate_path(&fw.to_f64(), &opts)? };
    let file = std::fs::File::create(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let mut w = std::io::BufWriter::new(file);
    for r in &traj.records {
        writeln!(w, "{}", trajectory_record_json(r)).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    println!("records: {}", traj.records.len());
    println!("max drift: {}", format_float(traj.max_drift()));
    if let Some(reason) = &traj.stop_reason {
        println!("stopped: {reason}");
    }
    Ok(0)
}

fn plot(path: &Path, out: &Path, samples: usize) -> auxetica::Result<u8> {
    let cubic: TernaryCubic<f64> = match read_document(path)? {
        Document::Cubic(c) => c.to_f64(),
        Document::Pencil(forms) => symmetric_determinant(&forms).to_f64(),
        Document::Framework(fw) => {
            let pencil = parametrize(&build_system(&fw), Default::default()).map_err(|d| {
                Error::InvalidFramework(format!("not regular: {}: {}", d.condition, d.detail))
            })?;
            symmetric_determinant(&pencil.forms).to_f64()
        }
    };
    let centre = [1.0 / 3.0; 3];
    let u = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let v = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
    let mut branches: Vec<Vec<[f64; 2]>> = vec![Vec::new(); 3];
    let samples = samples.max(8);
    for i in 0..samples {
        let theta = std::f64::consts::PI * i as f64 / samples as f64;
        let (c, s) = (theta.cos(), theta.sin());
        let dir: [f64; 3] = std::array::from_fn(|k| c * u[k] + s * v[k]);
        let at = |t: f64| cubic.eval(&std::array::from_fn(|k| centre[k] + t * dir[k]));
        // Interpolate the restriction at t = -1, 0, 1, 2.
        let (fm, f0, f1, f2) = (at(-1.0), at(0.0), at(1.0), at(2.0));
        let a3 = (f2 - 3.0 * f1 + 3.0 * f0 - fm) / 6.0;
        let a2 = (f1 + fm) / 2.0 - f0;
        let a1 = f1 - f0 - a2 - a3;
        for (b, t) in real_roots_f64(&[f0, a1, a2, a3]).into_iter().enumerate() {
            branches[b.min(2)].push([t * c, t * s]);
        }
    }
    let doc = json!({
        "chart": "X+Y+Z=1",
        "origin": centre.map(float_value),
        "axes": [u.map(float_value), v.map(float_value)],
        "polylines": branches
            .iter()
            .filter(|b| !b.is_empty())
            .map(|b| b.iter().map(|p| p.map(float_value)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    });
    write_file(out, &format!("{}\n", serde_json::to_string_pretty(&doc).expect("JSON values serialize")))?;
    Ok(0)
}
