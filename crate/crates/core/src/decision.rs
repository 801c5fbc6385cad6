//! End-to-end decision, certificates and trajectory simulation.

use std::fmt;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cubic::{symmetric_determinant, DiscriminantSign, InvariantRecord, InvariantTolerances, TernaryCubic};
use crate::deformation::{
    build_system, check_independence, parametrize_kernel, GramVelocityPencil, RankTolerance, RegularityCondition,
    RegularityDiagnosis,
};
use crate::error::{Error, Result};
use crate::framework::{PeriodicFramework, SymmetricMatrix3};
use crate::hesse::{hesse_frame, HesseFrame, HesseTolerances};
use crate::scalar::{rationalize, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Auxetic,
    NotAuxetic,
    NotRegular,
}

impl Verdict {
    /// Process exit code of the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Auxetic => 0,
            Verdict::NotAuxetic => 1,
            Verdict::NotRegular => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Auxetic => "AUXETIC",
            Verdict::NotAuxetic => "NOT_AUXETIC",
            Verdict::NotRegular => "NOT_REGULAR",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Definiteness {
    PosDef,
    NegDef,
    Indefinite,
    Degenerate,
}

impl fmt::Display for Definiteness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Definiteness::PosDef => "POS_DEF",
            Definiteness::NegDef => "NEG_DEF",
            Definiteness::Indefinite => "INDEFINITE",
            Definiteness::Degenerate => "DEGENERATE",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    pub fn of<T: Scalar>() -> Self {
        if T::EXACT {
            Mode::Exact
        } else {
            Mode::Float
        }
    }
}

/// Sylvester minors in exact mode (degenerate iff `det = 0`), eigenvalues in
/// float mode (degenerate iff `|λ|min <= tol · |λ|max`).
pub fn classify_definiteness<T: Scalar>(m: &SymmetricMatrix3<T>, tol: f64) -> Definiteness {
    if T::EXACT {
        if m.det().is_zero() {
            return Definiteness::Degenerate;
        }
        if m.is_positive_definite() {
            Definiteness::PosDef
        } else if m.scale(&-T::one()).is_positive_definite() {
            Definiteness::NegDef
        } else {
            Definiteness::Indefinite
        }
    } else {
        classify_eigenvalues(&m.to_f64().eigenvalues(), tol)
    }
}

fn classify_eigenvalues(eig: &[f64; 3], tol: f64) -> Definiteness {
    let scale = eig.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if !(scale > 0.0) || eig.iter().any(|v| v.abs() <= tol * scale) {
        Definiteness::Degenerate
    } else if eig.iter().all(|&v| v > 0.0) {
        Definiteness::PosDef
    } else if eig.iter().all(|&v| v < 0.0) {
        Definiteness::NegDef
    } else {
        Definiteness::Indefinite
    }
}

/// What to do when a numerical stage (root isolation, inflections, Hesse
/// transform) fails on a framework that passed the regularity checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailurePolicy {
    /// Report NOT_REGULAR with the failure as detail.
    NotRegular,
    /// Return the error.
    Error,
}

#[derive(Clone, Copy, Debug)]
pub struct DecisionOptions {
    pub rank: RankTolerance,
    pub invariants: InvariantTolerances,
    pub hesse: HesseTolerances,
    /// Relative eigenvalue threshold for DEGENERATE at Step 4.
    pub definiteness: f64,
    /// Relative residual bound for float certificates.
    pub residual: f64,
    /// Tolerance of the rational approximation of the Step-4 point.
    pub rationalize: f64,
    pub failures: FailurePolicy,
}

impl Default for DecisionOptions {
    fn default() -> Self {
        Self {
            rank: RankTolerance::default(),
            invariants: InvariantTolerances::default(),
            hesse: HesseTolerances::default(),
            definiteness: 1e-10,
            residual: 1e-9,
            rationalize: 1e-12,
            failures: FailurePolicy::NotRegular,
        }
    }
}

/// `(q̇, ω̇)` at a point `(X, Y, Z)` of the pencil.
#[derive(Clone, Debug, PartialEq)]
pub struct InfinitesimalDeformation<T> {
    pub xyz: [T; 3],
    pub gram_velocity: SymmetricMatrix3<T>,
    /// Velocities of vertices `1..n`; vertex 0 is pinned.
    pub vertex_velocities: Vec<[T; 3]>,
    /// Max absolute value of a linearized edge equation.
    pub residual: f64,
}

impl<T: Scalar> InfinitesimalDeformation<T> {
    pub fn to_f64(&self) -> InfinitesimalDeformation<f64> {
        InfinitesimalDeformation {
            xyz: self.xyz.clone().map(|v| v.to_f64()),
            gram_velocity: self.gram_velocity.to_f64(),
            vertex_velocities: self.vertex_velocities.iter().map(|q| q.clone().map(|v| v.to_f64())).collect(),
            residual: self.residual,
        }
    }
}

/// Step-4 data: the Hesse frame and the matrix at the preimage of `(1:1:1)`.
#[derive(Clone, Debug, Serialize)]
pub struct DefinitenessTest {
    pub frame: HesseFrame,
    /// Point substituted into the pencil (float).
    pub point: [f64; 3],
    pub matrix: [f64; 6],
    pub eigenvalues: [f64; 3],
    pub class: Definiteness,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Timing {
    pub elimination_secs: f64,
    pub total_secs: f64,
    /// Exact-mode elimination operation count (0 in float mode).
    pub elimination_ops: u64,
}

#[derive(Clone, Debug)]
pub struct DecisionReport<T> {
    pub verdict: Verdict,
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    pub rank: Option<usize>,
    pub pencil: Option<GramVelocityPencil<T>>,
    pub cubic: Option<TernaryCubic<T>>,
    pub invariants: Option<InvariantRecord<T>>,
    pub step4: Option<DefinitenessTest>,
    pub diagnosis: Option<RegularityDiagnosis>,
    pub certificate: Option<InfinitesimalDeformation<T>>,
    pub warnings: Vec<String>,
    pub timing: Timing,
}

impl<T> DecisionReport<T> {
    fn set_not_regular(&mut self, condition: RegularityCondition, detail: impl Into<String>) {
        self.verdict = Verdict::NotRegular;
        self.diagnosis = Some(RegularityDiagnosis::new(condition, detail));
    }
}

/// Runs the full decision on a valid framework.
pub fn decide<T: Scalar>(fw: &PeriodicFramework<T>, opts: &DecisionOptions) -> Result<DecisionReport<T>> {
    let start = Instant::now();
    let validation = fw.validate();
    if !validation.is_valid() {
        return Err(Error::InvalidFramework(validation.violations.join("; ")));
    }
    let mut report = DecisionReport {
        verdict: Verdict::NotAuxetic,
        mode: Mode::of::<T>(),
        n: fw.n(),
        m: fw.m(),
        rank: None,
        pencil: None,
        cubic: None,
        invariants: None,
        step4: None,
        diagnosis: None,
        certificate: None,
        warnings: validation.warnings,
        timing: Timing::default(),
    };
    let result = run_pipeline(fw, opts, &mut report);
    report.timing.total_secs = start.elapsed().as_secs_f64();
    match result {
        Ok(()) => Ok(report),
        Err(e) if opts.failures == FailurePolicy::NotRegular && is_numerical(&e) => {
            report.set_not_regular(RegularityCondition::SmoothCubic, format!("numerical failure: {e}"));
            Ok(report)
        }
        Err(e) => Err(e),
    }
}

fn is_numerical(e: &Error) -> bool {
    matches!(
        e,
        Error::Singular
            | Error::NoRealSelection(_)
            | Error::InflectionFailure(_)
            | Error::SingularPoint
            | Error::NotTwoComponents(_)
            | Error::VerifyFailed(_)
    )
}

fn run_pipeline<T: Scalar>(
    fw: &PeriodicFramework<T>,
    opts: &DecisionOptions,
    report: &mut DecisionReport<T>,
) -> Result<()> {
    let sys = build_system(fw);
    let t0 = Instant::now();
    let independence = check_independence(&sys, opts.rank);
    report.timing.elimination_secs = t0.elapsed().as_secs_f64();
    report.timing.elimination_ops = independence.kernel.ops;
    report.rank = Some(independence.rank);
    if let Some(d) = independence.diagnosis {
        report.verdict = Verdict::NotRegular;
        report.diagnosis = Some(d);
        return Ok(());
    }
    let pencil = match parametrize_kernel(&sys, &independence.kernel, opts.rank) {
        Ok(p) => p,
        Err(d) => {
            report.verdict = Verdict::NotRegular;
            report.diagnosis = Some(d);
            return Ok(());
        }
    };
    let cubic = symmetric_determinant(&pencil.forms);
    report.pencil = Some(pencil.clone());
    report.cubic = Some(cubic.clone());
    let scale = cubic.coeffs.iter().fold(0.0f64, |a, c| a.max(c.to_f64().abs()));
    if cubic.coeffs.iter().all(|c| c.is_zero_within(opts.invariants.singular_rel)) || !(scale > 0.0) {
        report.set_not_regular(RegularityCondition::SmoothCubic, "determinant of the pencil vanishes identically");
        return Ok(());
    }
    let invariants = InvariantRecord::compute(&cubic, opts.invariants)?;
    let sign = invariants.delta_sign;
    let k = invariants.k.as_ref().map(|h| h.k);
    report.invariants = Some(invariants);
    match sign {
        DiscriminantSign::Zero => {
            report.set_not_regular(RegularityCondition::SmoothCubic, "cubic is singular (Δ = 0)");
            return Ok(());
        }
        DiscriminantSign::Neg => {
            // Connected real curve: the pencil meets the definite cone only at 0.
            report.verdict = Verdict::NotAuxetic;
            return Ok(());
        }
        DiscriminantSign::Pos => {}
    }
    let k = k.ok_or(Error::Singular)?;
    let frame = hesse_frame(&cubic, k, &opts.hesse)?;
    let p = frame.preimage.0;
    let matrix = pencil.eval_f64(&p);
    let eigenvalues = matrix.eigenvalues();
    let float_class = classify_eigenvalues(&eigenvalues, opts.definiteness);
    let (xyz, class): ([T; 3], Definiteness) = if T::EXACT {
        let lead = p.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let xyz: [T; 3] = p.map(|c| T::from_rational(&rationalize(c / lead, opts.rationalize)));
        let class = classify_definiteness(&pencil.eval(&xyz), opts.definiteness);
        (xyz, class)
    } else {
        (p.map(|c| T::from_rational(&Rational::from_float(c).unwrap_or_default())), float_class)
    };
    report.step4 = Some(DefinitenessTest { frame, point: p, matrix: matrix.entries, eigenvalues, class: float_class });
    if float_class == Definiteness::Degenerate || class == Definiteness::Degenerate {
        report.set_not_regular(
            RegularityCondition::SmoothCubic,
            "matrix at the Hesse preimage of (1:1:1) is degenerate",
        );
        return Ok(());
    }
    let xyz = match class {
        Definiteness::PosDef => xyz,
        Definiteness::NegDef => xyz.map(|v| -v),
        _ => {
            report.verdict = Verdict::NotAuxetic;
            return Ok(());
        }
    };
    report.certificate = Some(certificate(fw, &pencil, &xyz, opts.residual)?);
    report.verdict = Verdict::Auxetic;
    Ok(())
}

/// Evaluates the pencil and its back map at `xyz` and checks the linearized
/// edge equations: exactly in exact mode, relative to `tol` in float mode.
pub fn certificate<T: Scalar>(
    fw: &PeriodicFramework<T>,
    pencil: &GramVelocityPencil<T>,
    xyz: &[T; 3],
    tol: f64,
) -> Result<InfinitesimalDeformation<T>> {
    let sys = build_system(fw);
    let unknowns = pencil.unknowns(xyz);
    let rows = sys.apply(&unknowns);
    let residual = rows.iter().fold(0.0f64, |a, r| a.max(r.to_f64().abs()));
    let ok = if T::EXACT {
        rows.iter().all(|r| r.is_zero())
    } else {
        let row_scale = sys.matrix.iter().fold(0.0f64, |a, c| a.max(c.to_f64().abs()));
        let x_scale = unknowns.iter().fold(0.0f64, |a, c| a.max(c.to_f64().abs()));
        residual <= tol * (row_scale * x_scale * unknowns.len() as f64).max(f64::MIN_POSITIVE)
    };
    if !ok {
        return Err(Error::ResidualExceeded(residual));
    }
    Ok(InfinitesimalDeformation {
        xyz: xyz.clone(),
        gram_velocity: pencil.eval(xyz),
        vertex_velocities: pencil.vertex_velocities(xyz),
        residual,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct SimulationOptions {
    pub tau: f64,
    pub steps: usize,
    /// Bound on `max |ℓ² − ℓ₀²| / ℓ₀²` after projection.
    pub projection_tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    pub decision: DecisionOptions,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            steps: 50,
            projection_tol: 1e-10,
            max_newton: 20,
            max_halvings: 10,
            decision: DecisionOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    /// Accumulated time.
    pub tau: f64,
    pub framework: PeriodicFramework<f64>,
    /// Direction used to leave this configuration (`None` on the last record).
    pub gram_velocity: Option<SymmetricMatrix3<f64>>,
    /// `max_e |ℓ_e² − ℓ_e²(0)| / ℓ_e²(0)` after projection.
    pub drift: f64,
    /// Same quantity for the unprojected predictor of the step that produced
    /// this record; `O(h²)` in the step size `h`.
    pub predictor_defect: f64,
    /// Step size actually used to reach this record (after halvings).
    pub step_size: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub step_size: f64,
    /// Why the run ended before `steps`, if it did.
    pub stop_reason: Option<String>,
}

impl Trajectory {
    pub fn max_drift(&self) -> f64 {
        self.records.iter().fold(0.0, |a, r| a.max(r.drift))
    }

    pub fn max_predictor_defect(&self) -> f64 {
        self.records.iter().fold(0.0, |a, r| a.max(r.predictor_defect))
    }
}

/// Flattened state `(q_1, …, q_{n−1}, ω)`.
fn state_of(fw: &PeriodicFramework<f64>) -> DVector<f64> {
    let mut v: Vec<f64> = fw.vertices()[1..].iter().flatten().copied().collect();
    v.extend_from_slice(&fw.gram().entries);
    DVector::from_vec(v)
}

fn framework_at(template: &PeriodicFramework<f64>, s: &DVector<f64>) -> PeriodicFramework<f64> {
    let n = template.n();
    let mut vertices = vec![[0.0; 3]];
    for i in 1..n {
        vertices.push(std::array::from_fn(|k| s[3 * (i - 1) + k]));
    }
    let off = 3 * (n - 1);
    let gram = SymmetricMatrix3::new(std::array::from_fn(|i| s[off + i]));
    template.with_state(vertices, gram)
}

fn relative_deviation(fw: &PeriodicFramework<f64>, reference: &[f64]) -> f64 {
    fw.edge_lengths_sq()
        .iter()
        .zip(reference)
        .fold(0.0, |a, (l, l0)| a.max((l - l0).abs() / l0.abs()))
}

/// Minimum-norm Newton correction onto the fixed-length manifold.
fn project(
    template: &PeriodicFramework<f64>,
    mut s: DVector<f64>,
    reference: &[f64],
    opts: &SimulationOptions,
) -> Option<(DVector<f64>, f64)> {
    for _ in 0..opts.max_newton {
        let fw = framework_at(template, &s);
        let lengths = fw.edge_lengths_sq();
        let g = DVector::from_iterator(lengths.len(), lengths.iter().zip(reference).map(|(l, l0)| l - l0));
        let j: DMatrix<f64> = build_system(&fw).matrix;
        let jjt = &j * j.transpose();
        let y = jjt.lu().solve(&g)?;
        s -= j.transpose() * y;
        let dev = relative_deviation(&framework_at(template, &s), reference);
        if !dev.is_finite() {
            return None;
        }
        if dev < opts.projection_tol {
            return Some((s, dev));
        }
    }
    None
}

/// Follows the auxetic direction field from `fw` with predictor steps of size
/// `tau` and Newton projection back onto the fixed edge lengths. The lattice
/// combinatorics (edge shifts) never change.
pub fn simulate_path<T: Scalar>(fw: &PeriodicFramework<T>, opts: &SimulationOptions) -> Result<Trajectory> {
    let first = decide(fw, &opts.decision)?;
    let Some(cert) = first.certificate else {
        let reason = match (&first.verdict, &first.diagnosis) {
            (_, Some(d)) => format!("{} ({}: {})", first.verdict, d.condition, d.detail),
            (v, None) => v.to_string(),
        };
        return Err(Error::NotAuxeticAtStart(reason));
    };
    let mut current = fw.to_f64();
    let reference = current.edge_lengths_sq();
    let mut records = vec![TrajectoryRecord {
        tau: 0.0,
        framework: current.clone(),
        gram_velocity: None,
        drift: 0.0,
        predictor_defect: 0.0,
        step_size: 0.0,
    }];
    let mut direction = Some(cert.to_f64());
    let mut stop_reason = None;
    let mut time = 0.0;
    for step in 0..opts.steps {
        let d = match direction.take() {
            Some(d) => d,
            None => match next_direction(&current, &opts.decision) {
                Ok(d) => d,
                Err(reason) => {
                    stop_reason = Some(format!("step {step}: {reason}"));
                    break;
                }
            },
        };
        let norm = frobenius(&d.gram_velocity);
        let mut velocity: Vec<f64> = d.vertex_velocities.iter().flatten().map(|v| v / norm).collect();
        velocity.extend(d.gram_velocity.entries.iter().map(|v| v / norm));
        let velocity = DVector::from_vec(velocity);
        records.last_mut().expect("non-empty").gram_velocity = Some(d.gram_velocity.scale(&(1.0 / norm)));

        let s0 = state_of(&current);
        let mut h = opts.tau;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let predicted = &s0 + &velocity * h;
            let defect = relative_deviation(&framework_at(&current, &predicted), &reference);
            if let Some((s, drift)) = project(&current, predicted, &reference, opts) {
                accepted = Some((s, drift, defect, h));
                break;
            }
            h /= 2.0;
        }
        let Some((s, drift, defect, h)) = accepted else {
            let dev = relative_deviation(&framework_at(&current, &(&s0 + &velocity * h)), &reference);
            return Err(Error::ProjectionDiverged(dev));
        };
        current = framework_at(&current, &s);
        time += h;
        records.push(TrajectoryRecord {
            tau: time,
            framework: current.clone(),
            gram_velocity: None,
            drift,
            predictor_defect: defect,
            step_size: h,
        });
        if !current.gram().is_positive_definite() {
            stop_reason = Some(format!("step {}: Gram matrix left the positive-definite cone", step + 1));
            break;
        }
    }
    Ok(Trajectory { records, step_size: opts.tau, stop_reason })
}

/// Float decision at a configuration whose coordinates may have drifted out
/// of `[0,1)`; integer translations leave the linear system unchanged.
fn next_direction(
    current: &PeriodicFramework<f64>,
    opts: &DecisionOptions,
) -> std::result::Result<InfinitesimalDeformation<f64>, String> {
    let reduced = PeriodicFramework::new(current.vertices().to_vec(), current.edges().to_vec(), current.gram().clone())
        .map_err(|e| e.to_string())?;
    let report = decide(&reduced, opts).map_err(|e| e.to_string())?;
    match report.certificate {
        Some(c) => Ok(c),
        None => Err(match report.diagnosis {
            Some(d) => format!("{} ({}: {})", report.verdict, d.condition, d.detail),
            None => report.verdict.to_string(),
        }),
    }
}

fn frobenius(m: &SymmetricMatrix3<f64>) -> f64 {
    let e = &m.entries;
    (e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + 2.0 * (e[3] * e[3] + e[4] * e[4] + e[5] * e[5])).sqrt()
}
