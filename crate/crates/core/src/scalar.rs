//! Number types shared by the exact and floating-point pipelines.
//!
//! Every algebraic stage of the engine is generic over [`Scalar`]. Two
//! implementations exist: [`Rational`] (arbitrary precision, the default) and
//! `f64` (for large inputs). Zero tests go through [`Scalar::is_zero_within`]
//! so that the exact mode never uses a tolerance.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::ParseNumberError;

pub type Rational = BigRational;

/// Field operations plus the few mode-specific hooks the pipeline needs.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// `true` for arbitrary-precision rationals.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;

    /// Exact mode: `self == 0`. Float mode: `|self| <= tol`.
    fn is_zero_within(&self, tol: f64) -> bool;

    /// Human/machine representation: `p/q` for rationals, 12 significant
    /// digits for floats.
    fn repr(&self) -> String;

    /// Rank and kernel basis of a dense matrix.
    fn null_space(a: &DMatrix<Self>, rank_tol: f64) -> NullSpace<Self>;

    fn sign_within(&self, tol: f64) -> i8 {
        if self.is_zero_within(tol) {
            0
        } else if *self > Self::zero() {
            1
        } else {
            -1
        }
    }
}

/// Result of a kernel computation.
#[derive(Clone, Debug)]
pub struct NullSpace<T> {
    pub rank: usize,
    pub basis: Vec<DVector<T>>,
    /// Arithmetic operations spent in the forward elimination (exact mode);
    /// zero when the backend does not count.
    pub ops: u64,
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn is_zero_within(&self, _tol: f64) -> bool {
        self.is_zero()
    }

    fn repr(&self) -> String {
        format_rational(self)
    }

    fn null_space(a: &DMatrix<Self>, _rank_tol: f64) -> NullSpace<Self> {
        bareiss_null_space(a)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn is_zero_within(&self, tol: f64) -> bool {
        self.abs() <= tol
    }

    fn repr(&self) -> String {
        format_float(*self)
    }

    fn null_space(a: &DMatrix<Self>, rank_tol: f64) -> NullSpace<Self> {
        svd_null_space(a, rank_tol)
    }
}

/// Converts with correct rounding for huge numerators/denominators, where a
/// naive `n as f64 / d as f64` would overflow to inf/inf.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Shift both to ~64 significant bits before dividing.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 64).max(0);
    let shift_d = (db - 64).max(0);
    let n = (r.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift_n - shift_d) as i32)
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Twelve significant digits, trailing zeros trimmed.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, v);
        trim_zeros(&s)
    } else {
        let s = format!("{:.11e}", v);
        match s.split_once('e') {
            Some((m, e)) => format!("{}e{}", trim_zeros(m), e),
            None => s,
        }
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Parses `"p/q"`, integers and decimals (`"0.125"`, `"-1.5e-3"`) exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ParseNumberError> {
    let t = s.trim();
    let err = || ParseNumberError(t.to_string());
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e = i32::from_str(&t[pos + 1..]).map_err(|_| err())?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| err())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Exact binary value of a finite float.
pub fn rational_from_f64(v: f64) -> Rational {
    Rational::from_float(v).unwrap_or_else(Rational::zero)
}

/// Continued-fraction approximation: the first convergent within
/// `tol * max(1, |v|)` of `v`.
pub fn rationalize(v: f64, tol: f64) -> Rational {
    let target = tol * v.abs().max(1.0);
    let negative = v < 0.0;
    let mut x = v.abs();
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    for _ in 0..64 {
        let a = x.floor();
        let ai = BigInt::from_f64(a).unwrap_or_default();
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let approx = Rational::new(p1.clone(), q1.clone());
        if (rational_to_f64(&approx) - v.abs()).abs() <= target {
            break;
        }
        let frac = x - a;
        if frac < 1e-300 {
            break;
        }
        x = 1.0 / frac;
    }
    let r = Rational::new(p1, q1);
    if negative {
        -r
    } else {
        r
    }
}

fn lcm_of_denominators(row: impl Iterator<Item = Rational>) -> BigInt {
    row.fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Fraction-free (Bareiss) forward elimination followed by rational back
/// substitution for a kernel basis.
fn bareiss_null_space(a: &DMatrix<Rational>) -> NullSpace<Rational> {
    let (rows, cols) = a.shape();
    let mut m: Vec<Vec<BigInt>> = (0..rows)
        .map(|i| {
            let l = lcm_of_denominators((0..cols).map(|j| a[(i, j)].clone()));
            (0..cols)
                .map(|j| {
                    let v = &a[(i, j)];
                    v.numer() * (&l / v.denom())
                })
                .collect()
        })
        .collect();

    let mut ops: u64 = 0;
    let mut prev = BigInt::one();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let (head, tail) = m.split_at_mut(r + 1);
        let pivot_row = &head[r];
        for row in tail.iter_mut() {
            let factor = row[c].clone();
            for j in (c + 1)..cols {
                let v = &pivot_row[c] * &row[j] - &factor * &pivot_row[j];
                row[j] = v.div_floor(&prev);
                ops += 3;
            }
            row[c] = BigInt::zero();
        }
        // Rows above the current one keep their (already eliminated) zero
        // below-pivot structure; entries left of c are zero by construction.
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    let rank = pivots.len();

    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let basis = free
        .iter()
        .map(|&f| {
            let mut x = vec![Rational::zero(); cols];
            x[f] = Rational::one();
            for (pr, &pc) in pivots.iter().enumerate().rev() {
                let mut acc = Rational::zero();
                for j in (pc + 1)..cols {
                    if !m[pr][j].is_zero() && !x[j].is_zero() {
                        acc += Rational::from_integer(m[pr][j].clone()) * &x[j];
                    }
                }
                x[pc] = -acc / Rational::from_integer(m[pr][pc].clone());
            }
            DVector::from_vec(x)
        })
        .collect();
    NullSpace { rank, basis, ops }
}

/// Numerical rank via singular values; kernel from the right singular vectors
/// of the zero-padded square matrix.
fn svd_null_space(a: &DMatrix<f64>, rank_tol: f64) -> NullSpace<f64> {
    let (rows, cols) = a.shape();
    let n = rows.max(cols);
    let mut sq = DMatrix::<f64>::zeros(n, cols);
    sq.view_mut((0, 0), (rows, cols)).copy_from(a);
    let svd = sq.svd(false, true);
    let sigma = svd.singular_values.clone();
    let vt = svd.v_t.expect("requested v_t");
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    let rank = sigma.iter().filter(|&&s| s > rank_tol * smax && smax > 0.0).count();
    let basis = order[rank..]
        .iter()
        .map(|&i| vt.row(i).transpose().into_owned())
        .collect();
    NullSpace { rank, basis, ops: 0 }
}

/// Sign of a big integer as -1/0/1.
pub fn bigint_sign(v: &BigInt) -> i8 {
    match v.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}
