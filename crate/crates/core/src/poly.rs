//! Dense univariate polynomials over the rationals with Sturm-sequence real
//! root isolation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::{rational_to_f64, Rational};

/// Coefficients stored lowest degree first; no trailing zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct QPoly {
    coeffs: Vec<Rational>,
}

/// A real root known to lie in `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RootInterval {
    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.midpoint())
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

impl QPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rational_to_f64(c))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * Rational::from_integer((i as i64).into()))
                .collect(),
        )
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => self.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
                    let b = other.coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
                    a - b
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.coeffs[dd].clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Rational::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while rem.len() > dd && !rem.is_empty() {
            let shift = rem.len() - 1 - dd;
            let factor = rem.last().unwrap() / &lead;
            for (i, c) in divisor.coeffs.iter().enumerate() {
                rem[shift + i] -= &factor * c;
            }
            quot[shift] = factor;
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.primitive();
        }
        a.monic()
    }

    /// Positive multiple with coprime integer coefficients.
    pub fn primitive(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let lcm = self.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self.coeffs.iter().map(|c| (c * Rational::from_integer(lcm.clone())).to_integer()).collect();
        let content = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        Self::new(ints.into_iter().map(|c| Rational::from_integer(c / &content)).collect())
    }

    /// `self / gcd(self, self')`: same roots, all simple.
    pub fn square_free(&self) -> Self {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            self.clone()
        } else {
            self.div_rem(&g).0
        }
    }

    /// Cauchy bound rounded up to a power of two: every real root lies in
    /// `(-B, B)`, and bisection midpoints stay dyadic.
    pub fn root_bound(&self) -> Rational {
        let lead = self.leading().expect("root bound of zero polynomial").abs();
        let max = self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| c.abs() / &lead)
            .fold(Rational::zero(), |a, b| if b > a { b } else { a });
        let cauchy = max + Rational::one();
        let mut bound = Rational::one();
        while bound < cauchy {
            bound *= Rational::from_integer(2.into());
        }
        bound
    }

    /// Real roots as disjoint isolating intervals, in increasing order. Each
    /// interval holds exactly one distinct root; multiplicities are ignored.
    pub fn isolate_real_roots(&self) -> Vec<RootInterval> {
        if self.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let sturm = SturmChain::new(&self.square_free());
        self.isolate_with(&sturm)
    }

    fn isolate_with(&self, sturm: &SturmChain) -> Vec<RootInterval> {
        let bound = self.root_bound();
        let mut out = Vec::new();
        let mut stack = vec![(-bound.clone(), bound)];
        while let Some((a, b)) = stack.pop() {
            let count = sturm.count_in(&a, &b);
            match count {
                0 => {}
                1 => out.push(RootInterval { lo: a, hi: b }),
                _ => {
                    let mid = (&a + &b) / Rational::from_integer(2.into());
                    stack.push((mid.clone(), b));
                    stack.push((a, mid));
                }
            }
        }
        out.sort_by(|x, y| x.lo.cmp(&y.lo));
        out
    }

    /// Isolates, then refines every root until the interval width is below
    /// `rel_tol * max(1, |root|)`.
    pub fn real_roots(&self, rel_tol: f64) -> Vec<RootInterval> {
        if self.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let sf = self.square_free().primitive();
        let chain = SturmChain::new(&sf);
        self.isolate_with(&chain)
            .into_iter()
            .map(|iv| refine(&sf, &chain, iv, rel_tol))
            .collect()
    }
}

/// Real roots of a float polynomial (lowest degree first) from the
/// eigenvalues of its companion matrix, sorted. Leading coefficients below
/// `1e-13` of the largest are dropped.
pub fn real_roots_f64(coeffs: &[f64]) -> Vec<f64> {
    near_real_roots_f64(coeffs, 1e-7)
}

/// Real parts of the complex roots whose imaginary part is at most
/// `rel_im · max(1, |re|)`; callers that polish afterwards use a loose bound so
/// that no real root is lost to rounding.
pub fn near_real_roots_f64(coeffs: &[f64], rel_im: f64) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let Some(deg) = (0..coeffs.len()).rev().find(|&d| coeffs[d].abs() > 1e-13 * scale) else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    // Substituting x = r·w with r the geometric root-size estimate puts the
    // roots near the unit circle; the unbalanced QR loses clustered small
    // roots otherwise.
    let monic: Vec<f64> = coeffs[..deg].iter().map(|c| c / coeffs[deg]).collect();
    let r = monic
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| c.abs().powf(1.0 / (deg - i) as f64))
        .fold(0.0f64, f64::max);
    let r = if r > 0.0 && r.is_finite() { r } else { 1.0 };
    let companion = nalgebra::DMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -monic[i] / r.powi((deg - i) as i32)
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= rel_im * z.re.abs().max(1.0))
        .map(|z| z.re * r)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

/// Sturm sequence of a square-free polynomial.
struct SturmChain {
    polys: Vec<QPoly>,
}

impl SturmChain {
    // Positive rescaling keeps every sign, so members are stored primitive.
    fn new(p: &QPoly) -> Self {
        let mut polys = vec![p.primitive(), p.derivative().primitive()];
        loop {
            let n = polys.len();
            if polys[n - 1].is_zero() {
                polys.pop();
                break;
            }
            let (_, r) = polys[n - 2].div_rem(&polys[n - 1]);
            if r.is_zero() {
                break;
            }
            polys.push(r.scale(&-Rational::one()).primitive());
        }
        Self { polys }
    }

    fn sign_changes(&self, x: &Rational) -> usize {
        let signs: Vec<i8> = self
            .polys
            .iter()
            .map(|p| {
                let v = p.eval(x);
                if v.is_zero() {
                    0
                } else if v.is_positive() {
                    1
                } else {
                    -1
                }
            })
            .filter(|&s| s != 0)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Number of distinct roots in `(a, b]`.
    fn count_in(&self, a: &Rational, b: &Rational) -> usize {
        self.sign_changes(a).saturating_sub(self.sign_changes(b))
    }
}

fn sign(v: &Rational) -> i8 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

fn refine(p: &QPoly, chain: &SturmChain, mut iv: RootInterval, rel_tol: f64) -> RootInterval {
    let two = Rational::from_integer(2.into());
    // Past ~200 halvings the width is far below anything an f64 can use.
    for _ in 0..256 {
        if p.eval(&iv.hi).is_zero() {
            return RootInterval { lo: iv.hi.clone(), hi: iv.hi };
        }
        let scale = rational_to_f64(&iv.hi.abs()).max(1.0);
        if rational_to_f64(&iv.width()) <= rel_tol * scale {
            return iv;
        }
        let mid = (&iv.lo + &iv.hi) / &two;
        let sm = sign(&p.eval(&mid));
        if sm == 0 {
            return RootInterval { lo: mid.clone(), hi: mid };
        }
        let (sl, sh) = (sign(&p.eval(&iv.lo)), sign(&p.eval(&iv.hi)));
        let root_left = if sl != 0 && sl != sh {
            sm != sl
        } else {
            chain.count_in(&iv.lo, &mid) == 1
        };
        if root_left {
            iv.hi = mid;
        } else {
            iv.lo = mid;
        }
    }
    iv
}
