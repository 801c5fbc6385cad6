//! Ternary cubic forms and their classical invariants.
//!
//! Coefficients are stored in the monomial order
//! `x³, y³, z³, x²y, x²z, xy², y²z, xz², yz², xyz` (see [`MONOMIALS`]).
//!
//! The Aronhold invariants are produced by the symbolic method: `S` is the
//! bracket product `[abc][abd][acd][bcd]` and `T` is
//! `[abc][abd][ace][bcf][def]²`, each applied as a determinantal differential
//! operator to copies of the form. The expanded polynomials (25 and 103 terms)
//! are built once and rescaled so that on `x³ + y³ + z³ − 3kxyz`
//!
//! ```text
//! S = −k/2 − k⁴/16,    T = 1 + 5k³/2 − k⁶/8.
//! ```

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::poly::{QPoly, RootInterval};
use crate::scalar::{rational_from_f64, Rational, Scalar};

/// Exponent triples of the ten cubic monomials, in storage order.
pub const MONOMIALS: [[u32; 3]; 10] = [
    [3, 0, 0],
    [0, 3, 0],
    [0, 0, 3],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [0, 2, 1],
    [1, 0, 2],
    [0, 1, 2],
    [1, 1, 1],
];

pub const MONOMIAL_LABELS: [&str; 10] = ["x^3", "y^3", "z^3", "x^2y", "x^2z", "xy^2", "y^2z", "xz^2", "yz^2", "xyz"];

fn monomial_index(e: [u32; 3]) -> usize {
    MONOMIALS.iter().position(|&m| m == e).expect("not a cubic monomial")
}

/// `a·X + b·Y + c·Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm<T>(pub [T; 3]);

impl<T: Scalar> LinearForm<T> {
    pub fn zero() -> Self {
        Self([T::zero(), T::zero(), T::zero()])
    }

    pub fn unit(i: usize) -> Self {
        let mut c = [T::zero(), T::zero(), T::zero()];
        c[i] = T::one();
        Self(c)
    }

    pub fn eval(&self, p: &[T; 3]) -> T {
        (0..3).fold(T::zero(), |acc, i| acc + self.0[i].clone() * p[i].clone())
    }

    pub fn to_f64(&self) -> LinearForm<f64> {
        LinearForm(std::array::from_fn(|i| self.0[i].to_f64()))
    }
}

/// Sparse homogeneous polynomial in three variables, used for intermediate
/// products.
#[derive(Clone, Debug)]
struct Poly3<T> {
    terms: BTreeMap<[u32; 3], T>,
}

impl<T: Scalar> Poly3<T> {
    fn from_linear(l: &LinearForm<T>) -> Self {
        let mut terms = BTreeMap::new();
        for (i, c) in l.0.iter().enumerate() {
            if !c.is_zero() {
                let mut e = [0; 3];
                e[i] = 1;
                terms.insert(e, c.clone());
            }
        }
        Self { terms }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<[u32; 3], T> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                let v = ca.clone() * cb.clone();
                match terms.get_mut(&e) {
                    Some(acc) => *acc = acc.clone() + v,
                    None => {
                        terms.insert(e, v);
                    }
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self { terms }
    }

    fn add_scaled(&mut self, other: &Self, s: &T) {
        for (e, c) in &other.terms {
            let v = c.clone() * s.clone();
            match self.terms.get_mut(e) {
                Some(acc) => *acc = acc.clone() + v,
                None => {
                    self.terms.insert(*e, v);
                }
            }
        }
        self.terms.retain(|_, c| !c.is_zero());
    }

    fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }
}

/// Homogeneous cubic in `(x, y, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TernaryCubic<T> {
    pub coeffs: [T; 10],
}

impl<T: Scalar> TernaryCubic<T> {
    pub fn new(coeffs: [T; 10]) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(std::array::from_fn(|_| T::zero()))
    }

    /// `x³ + y³ + z³ − 3kxyz`.
    pub fn hesse(k: T) -> Self {
        let mut c = Self::zero();
        for i in 0..3 {
            c.coeffs[i] = T::one();
        }
        c.coeffs[9] = -(T::from_i64(3) * k);
        c
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Coefficient of `x^a y^b z^c`.
    pub fn coeff(&self, e: [u32; 3]) -> &T {
        &self.coeffs[monomial_index(e)]
    }

    fn from_poly(p: &Poly3<T>) -> Self {
        let mut c = Self::zero();
        for (e, v) in &p.terms {
            c.coeffs[monomial_index(*e)] = v.clone();
        }
        c
    }

    pub fn eval(&self, p: &[T; 3]) -> T {
        MONOMIALS.iter().zip(self.coeffs.iter()).fold(T::zero(), |acc, (e, c)| {
            let mut term = c.clone();
            for (v, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = term * p[v].clone();
                }
            }
            acc + term
        })
    }

    pub fn gradient(&self, p: &[T; 3]) -> [T; 3] {
        std::array::from_fn(|v| {
            MONOMIALS.iter().zip(self.coeffs.iter()).fold(T::zero(), |acc, (e, c)| {
                if e[v] == 0 {
                    return acc;
                }
                let mut term = c.clone() * T::from_i64(e[v] as i64);
                for (w, &k) in e.iter().enumerate() {
                    let power = if w == v { k - 1 } else { k };
                    for _ in 0..power {
                        term = term * p[w].clone();
                    }
                }
                acc + term
            })
        })
    }

    /// Matrix of second partial derivatives; entry `(i, j)` is a linear form.
    pub fn second_derivatives(&self) -> [[LinearForm<T>; 3]; 3] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut out = LinearForm::<T>::zero();
                for (e, c) in MONOMIALS.iter().zip(self.coeffs.iter()) {
                    let mut e = *e;
                    let mut factor = c.clone();
                    for v in [i, j] {
                        if e[v] == 0 {
                            factor = T::zero();
                            break;
                        }
                        factor = factor * T::from_i64(e[v] as i64);
                        e[v] -= 1;
                    }
                    if factor.is_zero() {
                        continue;
                    }
                    let var = e.iter().position(|&k| k == 1).expect("degree one remainder");
                    out.0[var] = out.0[var].clone() + factor;
                }
                out
            })
        })
    }

    /// Substitutes `X = L·x`: returns `g(x) = f(L x)`. Row `i` of `l` expresses
    /// the old variable `i` in the new ones.
    pub fn compose(&self, l: &[[T; 3]; 3]) -> Self {
        let subs: [Poly3<T>; 3] = std::array::from_fn(|i| Poly3::from_linear(&LinearForm(l[i].clone())));
        let mut out = Poly3::zero();
        for (e, c) in MONOMIALS.iter().zip(self.coeffs.iter()) {
            if c.is_zero() {
                continue;
            }
            let mut term = Poly3 { terms: BTreeMap::from([([0, 0, 0], T::one())]) };
            for (v, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    term = term.mul(&subs[v]);
                }
            }
            out.add_scaled(&term, c);
        }
        Self::from_poly(&out)
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.coeffs.clone().map(|c| c * s.clone()))
    }

    pub fn to_f64(&self) -> TernaryCubic<f64> {
        TernaryCubic::new(std::array::from_fn(|i| self.coeffs[i].to_f64()))
    }

    pub fn to_rational(&self) -> TernaryCubic<Rational> {
        TernaryCubic::new(std::array::from_fn(|i| to_rational(&self.coeffs[i])))
    }
}

/// Exact rational value of a scalar (floats convert bit-exactly).
pub fn to_rational<T: Scalar>(v: &T) -> Rational {
    if T::EXACT {
        // The only exact scalar is `Rational`.
        let any: &dyn std::any::Any = v;
        any.downcast_ref::<Rational>().cloned().expect("exact scalar is Rational")
    } else {
        rational_from_f64(v.to_f64())
    }
}

/// Determinant of a symmetric 3x3 matrix whose entries are linear forms,
/// given in the `(11, 22, 33, 23, 13, 12)` storage order.
pub fn symmetric_determinant<T: Scalar>(entries: &[LinearForm<T>; 6]) -> TernaryCubic<T> {
    let p: Vec<Poly3<T>> = entries.iter().map(Poly3::from_linear).collect();
    let (a11, a22, a33, a23, a13, a12) = (&p[0], &p[1], &p[2], &p[3], &p[4], &p[5]);
    let mut det = Poly3::zero();
    let two = T::from_i64(2);
    det.add_scaled(&a11.mul(a22).mul(a33), &T::one());
    det.add_scaled(&a12.mul(a23).mul(a13), &two);
    det.add_scaled(&a11.mul(a23).mul(a23), &-T::one());
    det.add_scaled(&a22.mul(a13).mul(a13), &-T::one());
    det.add_scaled(&a33.mul(a12).mul(a12), &-T::one());
    TernaryCubic::from_poly(&det)
}

/// Determinant of the matrix of second partials.
pub fn hessian_cubic<T: Scalar>(c: &TernaryCubic<T>) -> TernaryCubic<T> {
    let h = c.second_derivatives();
    let entries = [
        h[0][0].clone(),
        h[1][1].clone(),
        h[2][2].clone(),
        h[1][2].clone(),
        h[0][2].clone(),
        h[0][1].clone(),
    ];
    symmetric_determinant(&entries)
}

/// Expanded invariant polynomial: integer weights on products of coefficient
/// indices.
struct InvariantPoly {
    terms: Vec<(Vec<usize>, i64)>,
}

const PERMUTATIONS: [([usize; 3], i64); 6] = [
    ([0, 1, 2], 1),
    ([1, 2, 0], 1),
    ([2, 0, 1], 1),
    ([0, 2, 1], -1),
    ([2, 1, 0], -1),
    ([1, 0, 2], -1),
];

/// Expands a bracket monomial `Π [l0 l1 l2]` acting on copies of the form.
/// A third-order derivative of the form with multi-index α equals
/// `α! · c_α`.
fn expand_brackets(brackets: &[[usize; 3]], letters: usize) -> InvariantPoly {
    let mut acc: BTreeMap<Vec<usize>, i64> = BTreeMap::new();
    let mut choice = vec![0usize; brackets.len()];
    let factorial = |k: u32| -> i64 { (1..=k as i64).product() };
    loop {
        let mut sign = 1;
        let mut exps = vec![[0u32; 3]; letters];
        for (b, &ci) in brackets.iter().zip(&choice) {
            let (perm, s) = PERMUTATIONS[ci];
            sign *= s;
            for (slot, &letter) in b.iter().enumerate() {
                exps[letter][perm[slot]] += 1;
            }
        }
        let mut key = Vec::with_capacity(letters);
        let mut weight = sign;
        for e in &exps {
            key.push(monomial_index(*e));
            weight *= factorial(e[0]) * factorial(e[1]) * factorial(e[2]);
        }
        key.sort_unstable();
        *acc.entry(key).or_insert(0) += weight;

        // Odometer over the 6^len choices.
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                let terms = acc.into_iter().filter(|(_, w)| *w != 0).collect();
                return InvariantPoly { terms };
            }
            choice[pos] += 1;
            if choice[pos] < PERMUTATIONS.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

fn s_poly() -> &'static InvariantPoly {
    static S: OnceLock<InvariantPoly> = OnceLock::new();
    S.get_or_init(|| expand_brackets(&[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]], 4))
}

fn t_poly() -> &'static InvariantPoly {
    static T: OnceLock<InvariantPoly> = OnceLock::new();
    T.get_or_init(|| expand_brackets(&[[0, 1, 2], [0, 1, 3], [0, 2, 4], [1, 2, 5], [3, 4, 5], [3, 4, 5]], 6))
}

/// `S = raw · S_RESCALE.0 / S_RESCALE.1` pins the Hesse-family values.
pub const S_RESCALE: (i64, i64) = (-1, 31104);
/// Same for `T`.
pub const T_RESCALE: (i64, i64) = (-1, 279936);

fn eval_invariant<T: Scalar>(poly: &InvariantPoly, c: &TernaryCubic<T>, rescale: (i64, i64)) -> T {
    let raw = poly.terms.iter().fold(T::zero(), |acc, (idx, w)| {
        let prod = idx.iter().fold(T::from_i64(*w), |p, &i| p * c.coeffs[i].clone());
        acc + prod
    });
    raw * T::from_i64(rescale.0) / T::from_i64(rescale.1)
}

pub fn aronhold_s<T: Scalar>(c: &TernaryCubic<T>) -> T {
    eval_invariant(s_poly(), c, S_RESCALE)
}

pub fn aronhold_t<T: Scalar>(c: &TernaryCubic<T>) -> T {
    eval_invariant(t_poly(), c, T_RESCALE)
}

/// Number of terms in the expanded `S` and `T` polynomials.
pub fn invariant_term_counts() -> (usize, usize) {
    (s_poly().terms.len(), t_poly().terms.len())
}

/// `(4S)³ + T²`, the weight-12 combination that vanishes exactly on singular
/// cubics. On the Hesse family it equals `(1 − k³)³`.
pub fn singularity_form<T: Scalar>(s: &T, t: &T) -> T {
    let four_s = T::from_i64(4) * s.clone();
    four_s.clone() * four_s.clone() * four_s + t.clone() * t.clone()
}

/// Discriminant with the real-topology sign: positive for two-component
/// curves (Hesse `k > 1`), negative for connected ones. Equals
/// `−((4S)³ + T²)`.
pub fn discriminant<T: Scalar>(s: &T, t: &T) -> T {
    -singularity_form(s, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiscriminantSign {
    Neg,
    Zero,
    Pos,
}

/// Sign of `Δ`, with a tolerance relative to `|4S|³ + T²` in float mode.
pub fn discriminant_sign<T: Scalar>(s: &T, t: &T, rel_tol: f64) -> DiscriminantSign {
    let d = discriminant(s, t);
    let four_s = 4.0 * s.to_f64();
    let scale = four_s.abs().powi(3) + t.to_f64().powi(2);
    match d.sign_within(rel_tol * scale) {
        0 => DiscriminantSign::Zero,
        1 => DiscriminantSign::Pos,
        _ => DiscriminantSign::Neg,
    }
}

/// `J = (4S)³ / ((4S)³ + T²)`.
pub fn modulus_j<T: Scalar>(s: &T, t: &T, rel_tol: f64) -> Result<T> {
    if discriminant_sign(s, t, rel_tol) == DiscriminantSign::Zero {
        return Err(Error::Singular);
    }
    let four_s = T::from_i64(4) * s.clone();
    let num = four_s.clone() * four_s.clone() * four_s;
    Ok(num / singularity_form(s, t))
}

/// `S(k) = −k/2 − k⁴/16`.
pub fn hesse_s(k: f64) -> f64 {
    -k / 2.0 - k.powi(4) / 16.0
}

/// `T(k) = 1 + 5k³/2 − k⁶/8`.
pub fn hesse_t(k: f64) -> f64 {
    1.0 + 2.5 * k.powi(3) - k.powi(6) / 8.0
}

/// `J(k) = k³(k³+8)³ / (64 (k³−1)³)`.
pub fn hesse_j<T: Scalar>(k: &T) -> T {
    let u = k.clone() * k.clone() * k.clone();
    let a = u.clone() + T::from_i64(8);
    let b = u.clone() - T::one();
    u * a.clone() * a.clone() * a / (T::from_i64(64) * b.clone() * b.clone() * b)
}

/// The real Hesse parameter of a non-singular cubic.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct HesseParameter {
    pub k: f64,
    /// Certified enclosure `[lo, hi]` of `k` (from the exact isolating
    /// interval of `u = k³`).
    pub interval: (f64, f64),
    /// Both real candidates of the `u`-quartic, as `k` values.
    pub candidates: Vec<f64>,
    /// Set when two real roots in `u` were closer than the merge threshold.
    pub merged_roots: bool,
}

/// Classification data of a cubic.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantRecord<T> {
    pub s: T,
    pub t: T,
    pub delta: T,
    pub delta_sign: DiscriminantSign,
    /// `None` when `Δ = 0` (J infinite).
    pub j: Option<T>,
    pub k: Option<HesseParameter>,
}

/// Tolerances for the invariant stage (float mode only; exact mode tests
/// zero exactly).
#[derive(Clone, Copy, Debug)]
pub struct InvariantTolerances {
    pub singular_rel: f64,
    pub root_merge: f64,
}

impl Default for InvariantTolerances {
    fn default() -> Self {
        Self { singular_rel: 1e-10, root_merge: 1e-8 }
    }
}

impl<T: Scalar> InvariantRecord<T> {
    /// Computes `S, T, Δ, J` and, when `Δ ≠ 0`, the Hesse parameter.
    pub fn compute(c: &TernaryCubic<T>, tol: InvariantTolerances) -> Result<Self> {
        let s = aronhold_s(c);
        let t = aronhold_t(c);
        let delta = discriminant(&s, &t);
        let delta_sign = discriminant_sign(&s, &t, tol.singular_rel);
        let (j, k) = if delta_sign == DiscriminantSign::Zero {
            (None, None)
        } else {
            let j = modulus_j(&s, &t, tol.singular_rel)?;
            let k = hesse_parameter(&s, &t, &j, tol)?;
            (Some(j), Some(k))
        };
        Ok(Self { s, t, delta, delta_sign, j, k })
    }
}

/// `u(u+8)³ − 64J(u−1)³` with `u = k³`.
pub fn hesse_quartic(j: &Rational) -> QPoly {
    let r = |v: i64| Rational::from_integer(v.into());
    let j64 = j * r(64);
    QPoly::new(vec![
        j64.clone(),
        r(512) - j * r(192),
        r(192) + j * r(192),
        r(24) - j64,
        r(1),
    ])
}

/// Solves `64J(k³−1)³ = k³(k³+8)³` for the two real `k` and keeps the one
/// whose `T(k)` has the sign of `T` (or, when `T = 0`, whose `S(k)` has the
/// sign of `S`). When `Δ > 0` the selected `k` must exceed 1.
pub fn hesse_parameter<T: Scalar>(s: &T, t: &T, j: &T, tol: InvariantTolerances) -> Result<HesseParameter> {
    let sign = discriminant_sign(s, t, tol.singular_rel);
    if sign == DiscriminantSign::Zero {
        return Err(Error::Singular);
    }
    let quartic = hesse_quartic(&to_rational(j));
    let mut roots: Vec<RootInterval> = quartic.real_roots(1e-17);
    let mut merged = false;
    let mut i = 1;
    while i < roots.len() {
        let (a, b) = (roots[i - 1].to_f64(), roots[i].to_f64());
        if (b - a).abs() <= tol.root_merge * a.abs().max(b.abs()).max(1.0) {
            roots.remove(i);
            merged = true;
        } else {
            i += 1;
        }
    }
    let candidates: Vec<(f64, (f64, f64))> = roots
        .iter()
        .map(|iv| {
            let u = iv.to_f64();
            let lo = crate::scalar::rational_to_f64(&iv.lo).cbrt();
            let hi = crate::scalar::rational_to_f64(&iv.hi).cbrt();
            (u.cbrt(), (lo, hi))
        })
        .collect();
    let ks: Vec<f64> = candidates.iter().map(|c| c.0).collect();
    if candidates.len() != 2 && !merged {
        return Err(Error::NoRealSelection(format!(
            "expected two real roots of the k³-quartic, found {}",
            candidates.len()
        )));
    }

    // T(k) depends on u = k³ only. The zero test for T is scaled by the
    // weight-6 quantity |4S|^(3/2) + |T|.
    let scale = (4.0 * s.to_f64()).abs().powf(1.5) + t.to_f64().abs();
    let use_t = !t.is_zero_within(tol.singular_rel * scale);
    let target = if use_t { t.sign_within(0.0) } else { s.sign_within(0.0) };
    let matching: Vec<&(f64, (f64, f64))> = candidates
        .iter()
        .filter(|(k, _)| {
            let v = if use_t { hesse_t(*k) } else { hesse_s(*k) };
            (v > 0.0 && target > 0) || (v < 0.0 && target < 0)
        })
        .collect();
    let chosen = match matching.as_slice() {
        [one] => **one,
        [] => {
            return Err(Error::NoRealSelection(format!(
                "no candidate among {ks:?} matches the sign of {}",
                if use_t { "T" } else { "S" }
            )))
        }
        _ => {
            return Err(Error::NoRealSelection(format!(
                "candidates {ks:?} do not have opposite signs"
            )))
        }
    };
    if sign == DiscriminantSign::Pos && chosen.0 <= 1.0 {
        return Err(Error::NoRealSelection(format!(
            "positive discriminant but selected k = {} is not > 1",
            chosen.0
        )));
    }
    Ok(HesseParameter { k: chosen.0, interval: chosen.1, candidates: ks, merged_roots: merged })
}
