//! Test families with closed-form ground truth, synthetic frameworks and a
//! brute-force sampling oracle.
//!
//! The oracle is one-sided: `FoundPd` is a proof (a positive-definite point of
//! the pencil), `NoneFound` is only evidence. It is never used by
//! [`crate::decision::decide`].

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decision::Verdict;
use crate::deformation::GramVelocityPencil;
use crate::framework::{EdgeOrbit, PeriodicFramework, SymmetricMatrix3};
use crate::scalar::{Rational, Scalar};

/// Period shifts of the six edges of the one-parameter family.
pub const FAMILY_SHIFTS: [[i64; 3]; 6] = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [0, 1, 1], [1, 0, 1]];

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Two vertex orbits, vertex 1 at `λ(1,1,1)`, joined to the lattice points
/// `e1, e2, e3, e1+e2, e2+e3, e3+e1` of vertex 0; cubic lattice.
pub fn family_framework(lambda: &Rational) -> PeriodicFramework<Rational> {
    let zero = Rational::zero();
    PeriodicFramework::new(
        vec![[zero.clone(), zero.clone(), zero], [lambda.clone(), lambda.clone(), lambda.clone()]],
        FAMILY_SHIFTS.iter().map(|s| EdgeOrbit::new(1, 0, *s)).collect(),
        SymmetricMatrix3::identity(),
    )
    .expect("family edges reference existing vertices")
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyGroundTruth {
    pub lambda: Rational,
    /// `λ(1−λ)`.
    pub ell: Rational,
    /// `ℓ / (2 − 6ℓ)`, the common off-diagonal ratio of the pencil.
    pub mu: Rational,
    /// `μ²(2μ−1)`: the pencil determinant is `XYZ + ρ(X+Y+Z)³`.
    pub rho: Rational,
    pub verdict: Verdict,
    /// Pencil value at `(1,1,1)`: ones on the diagonal, `3μ` elsewhere.
    pub certificate: SymmetricMatrix3<Rational>,
}

/// Values of `λ` where the determinant cubic is singular (`ρ ∈ {0, −1/27}`).
pub fn family_non_regular() -> [Rational; 5] {
    [r(0, 1), r(1, 3), r(1, 2), r(2, 3), r(1, 1)]
}

pub fn family_ground_truth(lambda: &Rational) -> FamilyGroundTruth {
    let one = Rational::one();
    let ell = lambda * (&one - lambda);
    let mu = &ell / (r(2, 1) - r(6, 1) * &ell);
    let rho = &mu * &mu * (r(2, 1) * &mu - &one);
    let verdict = if rho.is_zero() || rho == r(-1, 27) {
        Verdict::NotRegular
    } else if mu > r(-1, 6) && mu < r(1, 3) {
        Verdict::Auxetic
    } else {
        Verdict::NotAuxetic
    };
    let off = r(3, 1) * &mu;
    let certificate = SymmetricMatrix3::new([one.clone(), one.clone(), one, off.clone(), off.clone(), off]);
    FamilyGroundTruth { lambda: lambda.clone(), ell, mu, rho, verdict, certificate }
}

/// `ρ(k) = −(k²+k+1) / (3(k+2)³)`: the family coefficient matching Hesse
/// parameter `k`.
pub fn family_rho_from_k(k: f64) -> f64 {
    -(k * k + k + 1.0) / (3.0 * (k + 2.0).powi(3))
}

/// `count` distinct rationals `p/q` with `q ∈ [5, 97]`, in `(−1/2, 3/2)`,
/// avoiding the non-regular set. Deterministic in `seed`.
pub fn family_lambda_sweep(count: usize, seed: u64) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let excluded = family_non_regular();
    let mut out: Vec<Rational> = Vec::with_capacity(count);
    while out.len() < count {
        let q: i64 = rng.random_range(5..=97);
        let p: i64 = rng.random_range(-(q / 2) + 1..(3 * q + 1) / 2);
        let l = r(p, q);
        if !excluded.contains(&l) && !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

/// A random framework with `n` vertex orbits and three edge orbits leaving
/// each vertex (so `m = 3n`): no loops, no repeated orbit (an edge and its
/// reverse with negated shift are the same orbit), coordinates with
/// denominator 101 and a random diagonally dominant Gram matrix. Generic,
/// hence regular with high probability for `n >= 2`.
pub fn random_framework(n: usize, seed: u64) -> PeriodicFramework<Rational> {
    assert!(n >= 2, "loop-free frameworks need two vertex orbits");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = vec![[Rational::zero(), Rational::zero(), Rational::zero()]];
    for _ in 1..n {
        vertices.push(std::array::from_fn(|_| r(rng.random_range(1..101), 101)));
    }
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::with_capacity(3 * n);
    for tail in 0..n {
        while edges.len() < 3 * (tail + 1) {
            let head = rng.random_range(0..n);
            if head == tail {
                continue;
            }
            let shift: [i64; 3] = std::array::from_fn(|_| rng.random_range(-1..=1));
            let key = if tail < head { (tail, head, shift) } else { (head, tail, shift.map(|s| -s)) };
            if seen.insert(key) {
                edges.push(EdgeOrbit::new(tail, head, shift));
            }
        }
    }
    let off: [i64; 3] = std::array::from_fn(|_| rng.random_range(-20..=20));
    let diag: [i64; 3] = std::array::from_fn(|_| rng.random_range(60..=90));
    let gram = SymmetricMatrix3::new([
        r(diag[0], 10),
        r(diag[1], 10),
        r(diag[2], 10),
        r(off[0], 10),
        r(off[1], 10),
        r(off[2], 10),
    ]);
    PeriodicFramework::new(vertices, edges, gram).expect("indices are in range")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleOutcome {
    /// A unit direction where the pencil is positive definite.
    FoundPd([f64; 3]),
    NoneFound,
}

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    /// Number of Fibonacci-sphere directions.
    pub grid: usize,
    /// Number of seeded local-ascent samples after the grid.
    pub refinement: usize,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { grid: 4096, refinement: 10_000, seed: 0 }
    }
}

/// `i`-th of `count` nearly uniform points on the unit sphere.
fn fibonacci_direction(i: usize, count: usize) -> [f64; 3] {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
    let rad = (1.0 - z * z).max(0.0).sqrt();
    let phi = golden * i as f64;
    [rad * phi.cos(), rad * phi.sin(), z]
}

fn is_pd(m: &SymmetricMatrix3<f64>) -> bool {
    m.leading_minors().iter().all(|d| *d > 0.0)
}

/// Smallest eigenvalue over the Frobenius-type scale of the matrix.
fn normalized_min_eigenvalue(m: &SymmetricMatrix3<f64>) -> f64 {
    let eig = m.eigenvalues();
    let scale = eig.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if scale > 0.0 {
        eig[0] / scale
    } else {
        f64::NEG_INFINITY
    }
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|c| c / n)
}

/// Searches the unit sphere of `(X, Y, Z)` for a positive-definite pencil
/// value: a Fibonacci grid first (in enumeration order), then a seeded local
/// ascent on the normalized smallest eigenvalue starting from the best grid
/// direction.
pub fn sampling_oracle<T: Scalar>(pencil: &GramVelocityPencil<T>, opts: &OracleOptions) -> OracleOutcome {
    let p = pencil.to_f64();
    let eval = |d: &[f64; 3]| p.eval(d);
    let mut best = ([0.0, 0.0, 1.0], f64::NEG_INFINITY);
    let grid = opts.grid.max(1);
    for i in 0..grid {
        let d = fibonacci_direction(i, grid);
        let m = eval(&d);
        if is_pd(&m) {
            return OracleOutcome::FoundPd(d);
        }
        if opts.refinement > 0 {
            let score = normalized_min_eigenvalue(&m);
            if score > best.1 {
                best = (d, score);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut radius = 0.5;
    for _ in 0..opts.refinement {
        let candidate = unit(std::array::from_fn(|k| best.0[k] + radius * (rng.random::<f64>() * 2.0 - 1.0)));
        let m = eval(&candidate);
        if is_pd(&m) {
            return OracleOutcome::FoundPd(candidate);
        }
        let score = normalized_min_eigenvalue(&m);
        if score > best.1 {
            best = (candidate, score);
        } else {
            radius = (radius * 0.98).max(1e-9);
        }
    }
    OracleOutcome::NoneFound
}

impl OracleOutcome {
    pub fn found(&self) -> bool {
        matches!(self, OracleOutcome::FoundPd(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubic::{symmetric_determinant, LinearForm};
    use crate::deformation::{build_system, parametrize, RankTolerance};
    use crate::scalar::parse_rational;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn ground_truth_values() {
        let g = family_ground_truth(&q("1/6"));
        assert_eq!(g.mu, q("5/42"));
        assert_eq!(g.verdict, Verdict::Auxetic);
        let g = family_ground_truth(&q("5/12"));
        assert_eq!(g.rho, q("-1225/59319"));
        assert_eq!(g.verdict, Verdict::NotAuxetic);
        let g = family_ground_truth(&q("1/2"));
        assert_eq!((g.mu.clone(), g.rho.clone()), (q("1/2"), q("0")));
        assert_eq!(g.verdict, Verdict::NotRegular);
        for l in family_non_regular() {
            assert_eq!(family_ground_truth(&l).verdict, Verdict::NotRegular);
        }
    }

    #[test]
    fn involution_symmetry() {
        for l in ["1/7", "2/9", "-3/5", "11/4"] {
            let a = family_ground_truth(&q(l));
            let b = family_ground_truth(&(Rational::one() - q(l)));
            assert_eq!((a.mu, a.rho), (b.mu, b.rho));
        }
    }

    #[test]
    fn family_pencil_determinant_has_rho() {
        for l in ["1/6", "5/12", "2/7"] {
            let pencil = parametrize(&build_system(&family_framework(&q(l))), RankTolerance::default()).unwrap();
            let c = symmetric_determinant(&pencil.forms);
            let rho = family_ground_truth(&q(l)).rho;
            // XYZ + ρ(X+Y+Z)³: x³ has ρ, x²y has 3ρ, xyz has 1 + 6ρ.
            assert_eq!(c.coeffs[0], rho);
            assert_eq!(c.coeffs[3], &rho * q("3"));
            assert_eq!(c.coeffs[9], q("1") + &rho * q("6"));
        }
    }

    #[test]
    fn reduction_keeps_edge_vectors() {
        let a = family_framework(&q("7/6"));
        let b = family_framework(&q("1/6"));
        assert_eq!(a.vertices(), b.vertices());
        for (ea, eb) in a.edges().iter().zip(b.edges()) {
            let va = a.edge_vector(ea).unwrap();
            let vb = b.edge_vector(eb).unwrap();
            assert_eq!(va.iter().zip(&vb).map(|(x, y)| x - y).collect::<Vec<_>>(), vec![q("-1"); 3]);
        }
    }

    #[test]
    fn sweep_avoids_singular_values() {
        let sweep = family_lambda_sweep(100, 7);
        assert_eq!(sweep.len(), 100);
        let bad = family_non_regular();
        assert!(sweep.iter().all(|l| !bad.contains(l)));
        assert_eq!(sweep, family_lambda_sweep(100, 7));
    }

    #[test]
    fn random_framework_shape() {
        let fw = random_framework(10, 3);
        assert_eq!((fw.n(), fw.m()), (10, 30));
        assert!(fw.validate().is_valid());
        assert_eq!(fw, random_framework(10, 3));
    }

    #[test]
    fn oracle_on_diagonal_pencil() {
        let forms = [
            LinearForm::unit(0),
            LinearForm::unit(1),
            LinearForm::unit(2),
            LinearForm::zero(),
            LinearForm::zero(),
            LinearForm::zero(),
        ];
        let pencil = GramVelocityPencil::<f64> { forms, free_variables: [0, 1, 2], back_map: Vec::new() };
        let OracleOutcome::FoundPd(d) = sampling_oracle(&pencil, &OracleOptions::default()) else {
            panic!("diagonal pencil has a positive octant");
        };
        assert!(d.iter().all(|c| *c > 0.0));
    }

    #[test]
    fn oracle_on_family() {
        let opts = OracleOptions::default();
        let yes = parametrize(&build_system(&family_framework(&q("1/6"))), RankTolerance::default()).unwrap();
        assert!(sampling_oracle(&yes, &opts).found());
        let no = parametrize(&build_system(&family_framework(&q("5/12"))), RankTolerance::default()).unwrap();
        assert_eq!(sampling_oracle(&no, &opts), OracleOutcome::NoneFound);
    }

    #[test]
    fn rho_k_relation_at_golden_case() {
        let rho = family_ground_truth(&q("1/6")).rho;
        let k = 25.6407;
        let rel = (family_rho_from_k(k) - rho.to_f64()).abs() / rho.to_f64().abs();
        assert!(rel < 1e-5, "{rel}");
    }
}
