//! Real inflection points and the projective map to Hesse normal form.
//!
//! Inflection points are the common zeros of the cubic and its Hessian. They
//! are found by moving to a generic rational frame, eliminating one affine
//! variable with a Sylvester resultant (a degree-9 polynomial computed by
//! exact evaluation and interpolation), isolating its real roots with Sturm
//! sequences and polishing each point with Newton's method on the pair
//! `(f, Hess f)`.

use nalgebra::{Matrix3, Vector3};
use num_traits::{One, Zero};
use serde::Serialize;

pub use crate::cubic::hessian_cubic;
use crate::cubic::TernaryCubic;
use crate::error::{Error, Result};
use crate::poly::{near_real_roots_f64, real_roots_f64, QPoly};
use crate::scalar::{rational_to_f64, rationalize, Rational, Scalar};

/// Unit-norm homogeneous coordinates, first non-zero coordinate positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectivePoint(pub [f64; 3]);

/// Line `a·x + b·y + c·z = 0`, normalized like [`ProjectivePoint`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProjectiveLine(pub [f64; 3]);

fn normalize(v: [f64; 3]) -> Option<[f64; 3]> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let mut out = v.map(|c| c / norm);
    // "First non-zero" with a tolerance so tiny round-off does not flip signs.
    let lead = out.iter().find(|c| c.abs() > 1e-12).copied().unwrap_or(0.0);
    if lead < 0.0 {
        out = out.map(|c| -c);
    }
    Some(out)
}

impl ProjectivePoint {
    pub fn new(v: [f64; 3]) -> Option<Self> {
        normalize(v).map(Self)
    }

    /// Angle-free distance between projective points (sign-insensitive).
    pub fn distance(&self, other: &Self) -> f64 {
        let d = |s: f64| (0..3).map(|i| (self.0[i] - s * other.0[i]).powi(2)).sum::<f64>().sqrt();
        d(1.0).min(d(-1.0))
    }
}

impl ProjectiveLine {
    pub fn new(v: [f64; 3]) -> Option<Self> {
        normalize(v).map(Self)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        ProjectivePoint(self.0).distance(&ProjectivePoint(other.0))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HesseTolerances {
    /// Residual of `f` and `Hess f` (normalized) at an accepted inflection.
    pub root_residual: f64,
    /// Max relative deviation of the pullback from a Hesse cubic.
    pub verify: f64,
    pub collinearity: f64,
}

impl Default for HesseTolerances {
    fn default() -> Self {
        Self { root_residual: 1e-12, verify: 1e-8, collinearity: 1e-10 }
    }
}

/// `L` with `X = L·x`: Hesse-frame coordinates `x` to pencil-frame `X`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectiveTransform {
    pub matrix: [[f64; 3]; 3],
    /// Ratio of extreme singular values of `matrix`.
    pub condition: f64,
    /// Max relative coefficient deviation of `c∘L` from `λ·Hesse(k)`.
    pub deviation: f64,
    /// The scalar `λ`.
    pub scale: f64,
}

impl ProjectiveTransform {
    pub fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| (0..3).map(|j| self.matrix[i][j] * x[j]).sum())
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Fixed generic frames tried in order; the first one with all nine
/// inflection points in the affine chart and distinct first coordinates is
/// used.
fn generic_frames() -> Vec<[[Rational; 3]; 3]> {
    vec![
        [[q(1, 1), q(2, 7), q(-3, 11)], [q(1, 5), q(1, 1), q(2, 13)], [q(-1, 3), q(3, 17), q(1, 1)]],
        [[q(2, 1), q(-1, 3), q(1, 2)], [q(1, 7), q(1, 1), q(-2, 5)], [q(3, 4), q(1, 9), q(1, 1)]],
        [[q(1, 1), q(5, 8), q(1, 3)], [q(-3, 4), q(1, 1), q(1, 5)], [q(1, 6), q(-4, 7), q(1, 1)]],
        [[q(3, 1), q(1, 1), q(-1, 1)], [q(1, 1), q(-2, 1), q(1, 1)], [q(1, 2), q(1, 3), q(1, 1)]],
    ]
}

/// Coefficients of `f(u, v, 1)` as a polynomial in `v`, each a polynomial in
/// `u`: `result[d]` is the coefficient of `v^d`.
fn coefficients_in_v(c: &TernaryCubic<Rational>) -> [QPoly; 4] {
    std::array::from_fn(|d| {
        let mut coeffs = vec![Rational::zero(); 4];
        for (e, coef) in crate::cubic::MONOMIALS.iter().zip(c.coeffs.iter()) {
            if e[1] as usize == d {
                coeffs[e[0] as usize] += coef;
            }
        }
        QPoly::new(coeffs)
    })
}

fn det_rational(mut m: Vec<Vec<Rational>>) -> Rational {
    let n = m.len();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= &pivot;
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for j in col..n {
                let sub = &factor * &m[col][j];
                m[r][j] -= sub;
            }
        }
    }
    det
}

/// Resultant in `v` of two polynomials of degree exactly 3 in `v`.
fn sylvester_det(a: &[Rational; 4], b: &[Rational; 4]) -> Rational {
    let mut m = vec![vec![Rational::zero(); 6]; 6];
    for r in 0..3 {
        for d in 0..4 {
            m[r][r + d] = a[3 - d].clone();
            m[r + 3][r + d] = b[3 - d].clone();
        }
    }
    det_rational(m)
}

/// `Res_v(f(u,v,1), g(u,v,1))` as a polynomial in `u` of degree at most 9.
fn resultant_in_u(f: &[QPoly; 4], g: &[QPoly; 4]) -> QPoly {
    let nodes: Vec<Rational> = (0..10).map(|i| Rational::from_integer(i.into())).collect();
    let values: Vec<Rational> = nodes
        .iter()
        .map(|u| {
            let a: [Rational; 4] = std::array::from_fn(|d| f[d].eval(u));
            let b: [Rational; 4] = std::array::from_fn(|d| g[d].eval(u));
            sylvester_det(&a, &b)
        })
        .collect();
    // Lagrange interpolation.
    let mut out = QPoly::zero();
    for (i, (xi, yi)) in nodes.iter().zip(&values).enumerate() {
        if yi.is_zero() {
            continue;
        }
        let mut basis = QPoly::new(vec![Rational::one()]);
        let mut denom = Rational::one();
        for (j, xj) in nodes.iter().enumerate() {
            if i != j {
                basis = basis.mul(&QPoly::new(vec![-xj.clone(), Rational::one()]));
                denom *= xi - xj;
            }
        }
        out = out.sub(&basis.scale(&(-(yi / denom))));
    }
    out
}

/// Scale-free residual of a cubic at a point.
fn relative_value(c: &TernaryCubic<f64>, p: &[f64; 3]) -> f64 {
    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let unit = p.map(|x| x / norm);
    let scale = c.coeffs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    c.eval(&unit).abs() / scale
}

fn newton_polish(f: &TernaryCubic<f64>, h: &TernaryCubic<f64>, mut u: f64, mut v: f64) -> (f64, f64) {
    for _ in 0..30 {
        let p = [u, v, 1.0];
        let (fv, hv) = (f.eval(&p), h.eval(&p));
        let (gf, gh) = (f.gradient(&p), h.gradient(&p));
        let det = gf[0] * gh[1] - gf[1] * gh[0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let du = (fv * gh[1] - hv * gf[1]) / det;
        let dv = (gf[0] * hv - gh[0] * fv) / det;
        u -= du;
        v -= dv;
        if du.abs() <= 1e-17 * u.abs().max(1.0) && dv.abs() <= 1e-17 * v.abs().max(1.0) {
            break;
        }
    }
    (u, v)
}

fn inflections_in_frame(
    f: &TernaryCubic<Rational>,
    frame: &[[Rational; 3]; 3],
    tol: &HesseTolerances,
) -> std::result::Result<Vec<ProjectivePoint>, String> {
    let fg = f.compose(frame);
    let hg = hessian_cubic(&fg);
    let fv = coefficients_in_v(&fg);
    let hv = coefficients_in_v(&hg);
    if fv[3].is_zero() || hv[3].is_zero() {
        return Err("point at infinity on the v-axis".into());
    }
    let res = resultant_in_u(&fv, &hv);
    if res.is_zero() {
        return Err("cubic and Hessian share a component".into());
    }
    if res.degree() != Some(9) {
        return Err(format!("resultant has degree {:?}; inflection at infinity", res.degree()));
    }
    let f64c = fg.to_f64();
    let h64 = hg.to_f64();
    let g64 = Matrix3::from_fn(|i, j| rational_to_f64(&frame[i][j]));
    let mut points: Vec<ProjectivePoint> = Vec::new();
    // Approximate roots only seed the polish; the residual check below is
    // what accepts a point.
    let lead = res.coeffs()[9].clone();
    let scaled: Vec<f64> = res.coeffs().iter().map(|c| rational_to_f64(&(c / &lead))).collect();
    for u0 in near_real_roots_f64(&scaled, 1e-3) {
        let cubic_v: Vec<f64> = (0..4).map(|d| fv[d].eval_f64(u0)).collect();
        let best = real_roots_f64(&cubic_v)
            .into_iter()
            .map(|v0| (relative_value(&h64, &[u0, v0, 1.0]), v0))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((_, v0)) = best else { continue };
        let (u1, v1) = newton_polish(&f64c, &h64, u0, v0);
        let p = [u1, v1, 1.0];
        if relative_value(&f64c, &p) > tol.root_residual || relative_value(&h64, &p) > tol.root_residual {
            continue;
        }
        let back = g64 * Vector3::new(u1, v1, 1.0);
        let Some(point) = ProjectivePoint::new([back[0], back[1], back[2]]) else { continue };
        if points.iter().all(|q| q.distance(&point) > 1e-8) {
            points.push(point);
        }
    }
    Ok(points)
}

/// The three real inflection points of a non-singular cubic.
pub fn real_inflections<T: Scalar>(c: &TernaryCubic<T>, tol: &HesseTolerances) -> Result<[ProjectivePoint; 3]> {
    // Short continued-fraction rationals keep the resultant small; the
    // perturbation is removed by the Newton polish.
    let scale = c.coeffs.iter().fold(0.0f64, |a, v| a.max(v.to_f64().abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InflectionFailure("zero cubic".into()));
    }
    let f: TernaryCubic<Rational> =
        TernaryCubic::new(std::array::from_fn(|i| rationalize(c.coeffs[i].to_f64() / scale, 1e-15)));
    if f.is_zero() {
        return Err(Error::InflectionFailure("zero cubic".into()));
    }
    let mut last = String::new();
    for frame in generic_frames() {
        match inflections_in_frame(&f, &frame, tol) {
            Ok(points) if points.len() == 3 => {
                let pts = [points[0], points[1], points[2]];
                let det = Matrix3::from_fn(|i, j| pts[i].0[j]).determinant();
                if det.abs() > tol.collinearity {
                    return Err(Error::InflectionFailure(format!("inflection points not collinear (det {det:e})")));
                }
                return Ok(pts);
            }
            Ok(points) => last = format!("found {} real inflection points", points.len()),
            Err(e) => last = e,
        }
    }
    Err(Error::InflectionFailure(last))
}

/// Tangent line `∇f(p)` at a point of the curve.
pub fn tangent_at<T: Scalar>(c: &TernaryCubic<T>, p: &ProjectivePoint) -> Result<ProjectiveLine> {
    let f = c.to_f64();
    let g = f.gradient(&p.0);
    let scale = f.coeffs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    if norm <= 1e-10 * scale {
        return Err(Error::SingularPoint);
    }
    ProjectiveLine::new(g).ok_or(Error::SingularPoint)
}

/// Line through (approximately) collinear points: smallest right singular
/// vector of the stacked points.
pub fn line_through(points: &[ProjectivePoint; 3]) -> ProjectiveLine {
    let m = Matrix3::from_fn(|i, j| points[i].0[j]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("three singular values");
    let row = vt.row(idx);
    ProjectiveLine::new([row[0], row[1], row[2]]).expect("unit singular vector")
}

/// The projective map taking the inflection line to `x+y+z=0` and the three
/// tangents (in the given order) to `kx+y+z=0`, `x+ky+z=0`, `x+y+kz=0`.
pub fn to_hesse<T: Scalar>(
    c: &TernaryCubic<T>,
    k: f64,
    inflections: &[ProjectivePoint; 3],
    tangents: &[ProjectiveLine; 3],
    tol: &HesseTolerances,
) -> Result<ProjectiveTransform> {
    if !(k > 1.0) {
        return Err(Error::NotTwoComponents(k));
    }
    let a0 = line_through(inflections);
    let a = Matrix3::from_fn(|i, j| tangents[j].0[i]);
    let b = Matrix3::new(k, 1.0, 1.0, 1.0, k, 1.0, 1.0, 1.0, k);
    let a_inv = a.try_inverse().ok_or_else(|| Error::InflectionFailure("tangent lines are concurrent".into()))?;
    let b_inv = b.try_inverse().ok_or(Error::NotTwoComponents(k))?;
    let alpha = a_inv * Vector3::from(a0.0);
    let beta = b_inv * Vector3::new(1.0, 1.0, 1.0);
    if alpha.iter().any(|x| x.abs() < 1e-12) {
        return Err(Error::InflectionFailure("lines not in general position".into()));
    }
    let d = Matrix3::from_diagonal(&Vector3::from_fn(|i, _| beta[i] / alpha[i]));
    // M maps source lines to target lines; X = L x with L = Mᵗ.
    let m = b * d * a_inv;
    let l = m.transpose();
    let matrix: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| l[(i, j)]));

    let pulled = c.to_f64().compose(&matrix);
    let target = TernaryCubic::<f64>::hesse(k);
    let scale = (pulled.coeffs[0] + pulled.coeffs[1] + pulled.coeffs[2]) / 3.0;
    let max = pulled.coeffs.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let deviation = pulled
        .coeffs
        .iter()
        .zip(target.coeffs.iter())
        .map(|(g, h)| (g - scale * h).abs() / max)
        .fold(0.0, f64::max);
    if !(deviation <= tol.verify) {
        return Err(Error::VerifyFailed(deviation));
    }
    let sv = l.singular_values();
    let condition = sv.max() / sv.min();
    Ok(ProjectiveTransform { matrix, condition, deviation, scale })
}

/// `L·(1,1,1)`, normalized.
pub fn preimage_unit(l: &ProjectiveTransform) -> ProjectivePoint {
    ProjectivePoint::new(l.apply(&[1.0, 1.0, 1.0])).expect("invertible transform")
}

/// Everything Step 4 needs from the curve: inflections, tangents, `L`.
#[derive(Clone, Debug, Serialize)]
pub struct HesseFrame {
    pub k: f64,
    pub inflections: [ProjectivePoint; 3],
    pub tangents: [ProjectiveLine; 3],
    pub transform: ProjectiveTransform,
    pub preimage: ProjectivePoint,
}

pub fn hesse_frame<T: Scalar>(c: &TernaryCubic<T>, k: f64, tol: &HesseTolerances) -> Result<HesseFrame> {
    if !(k > 1.0) {
        return Err(Error::NotTwoComponents(k));
    }
    let inflections = real_inflections(c, tol)?;
    let tangents = [
        tangent_at(c, &inflections[0])?,
        tangent_at(c, &inflections[1])?,
        tangent_at(c, &inflections[2])?,
    ];
    let transform = to_hesse(c, k, &inflections, &tangents, tol)?;
    let preimage = preimage_unit(&transform);
    Ok(HesseFrame { k, inflections, tangents, transform, preimage })
}
