//! Periodic frameworks in lattice coordinates.
//!
//! A framework is stored as its quotient data: one representative per vertex
//! orbit (lattice coordinates, vertex 0 at the origin), one representative per
//! edge orbit (tail, head and an integer period shift) and the Gram matrix of
//! the chosen lattice basis.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric 3x3 matrix stored as `(11, 22, 33, 23, 13, 12)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix3<T> {
    pub entries: [T; 6],
}

/// Labels of the six stored entries, in storage order.
pub const SYM_LABELS: [&str; 6] = ["11", "22", "33", "23", "13", "12"];

/// `(row, col)` of each stored entry.
pub const SYM_POSITIONS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Storage slot of the full-matrix position `(i, j)`.
pub fn sym_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) => 3,
        (0, 2) => 4,
        (0, 1) => 5,
        _ => panic!("index ({i}, {j}) outside a 3x3 matrix"),
    }
}

impl<T: Scalar> SymmetricMatrix3<T> {
    pub fn new(entries: [T; 6]) -> Self {
        Self { entries }
    }

    pub fn identity() -> Self {
        let (z, o) = (T::zero(), T::one());
        Self::new([o.clone(), o.clone(), o, z.clone(), z.clone(), z])
    }

    pub fn scaled_identity(c: T) -> Self {
        let z = T::zero();
        Self::new([c.clone(), c.clone(), c, z.clone(), z.clone(), z])
    }

    /// Builds from a full matrix, or `None` if it is not symmetric.
    pub fn from_full(m: &[[T; 3]; 3]) -> Option<Self> {
        for i in 0..3 {
            for j in 0..i {
                if m[i][j] != m[j][i] {
                    return None;
                }
            }
        }
        Some(Self::new([
            m[0][0].clone(),
            m[1][1].clone(),
            m[2][2].clone(),
            m[1][2].clone(),
            m[0][2].clone(),
            m[0][1].clone(),
        ]))
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[sym_index(i, j)]
    }

    pub fn full(&self) -> [[T; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.get(i, j).clone()))
    }

    pub fn mul_vec(&self, v: &[T; 3]) -> [T; 3] {
        std::array::from_fn(|i| {
            (0..3).fold(T::zero(), |acc, j| acc + self.get(i, j).clone() * v[j].clone())
        })
    }

    /// `vᵗ M v`.
    pub fn quad_form(&self, v: &[T; 3]) -> T {
        let mv = self.mul_vec(v);
        (0..3).fold(T::zero(), |acc, i| acc + mv[i].clone() * v[i].clone())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.entries.clone().map(|e| e * c.clone()))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(std::array::from_fn(|i| self.entries[i].clone() + other.entries[i].clone()))
    }

    /// Leading principal minors `(d1, d2, d3)`.
    pub fn leading_minors(&self) -> [T; 3] {
        let a = self.full();
        let d1 = a[0][0].clone();
        let d2 = a[0][0].clone() * a[1][1].clone() - a[0][1].clone() * a[1][0].clone();
        [d1, d2, self.det()]
    }

    pub fn det(&self) -> T {
        let a = self.full();
        a[0][0].clone() * (a[1][1].clone() * a[2][2].clone() - a[1][2].clone() * a[2][1].clone())
            - a[0][1].clone() * (a[1][0].clone() * a[2][2].clone() - a[1][2].clone() * a[2][0].clone())
            + a[0][2].clone() * (a[1][0].clone() * a[2][1].clone() - a[1][1].clone() * a[2][0].clone())
    }

    /// Sylvester's criterion with strict signs.
    pub fn is_positive_definite(&self) -> bool {
        self.leading_minors().iter().all(|d| *d > T::zero())
    }

    pub fn to_f64(&self) -> SymmetricMatrix3<f64> {
        SymmetricMatrix3::new(std::array::from_fn(|i| self.entries[i].to_f64()))
    }

    pub fn to_matrix3(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.get(i, j).to_f64())
    }
}

impl SymmetricMatrix3<f64> {
    pub fn eigenvalues(&self) -> [f64; 3] {
        let eig = self.to_matrix3().symmetric_eigenvalues();
        let mut v = [eig[0], eig[1], eig[2]];
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }
}

/// One edge orbit: an edge from the representative of `tail` to the translate
/// by `shift` of the representative of `head`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeOrbit {
    pub tail: usize,
    pub head: usize,
    pub shift: [i64; 3],
}

impl EdgeOrbit {
    pub fn new(tail: usize, head: usize, shift: [i64; 3]) -> Self {
        Self { tail, head, shift }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFramework<T> {
    vertices: Vec<[T; 3]>,
    edges: Vec<EdgeOrbit>,
    gram: SymmetricMatrix3<T>,
}

/// Outcome of [`PeriodicFramework::validate`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl<T: Scalar> PeriodicFramework<T> {
    /// Builds a framework, reducing every vertex coordinate into `[0, 1)` and
    /// absorbing the integer parts into the edge shifts.
    pub fn new(vertices: Vec<[T; 3]>, edges: Vec<EdgeOrbit>, gram: SymmetricMatrix3<T>) -> Result<Self> {
        let n = vertices.len();
        for e in &edges {
            for index in [e.tail, e.head] {
                if index >= n {
                    return Err(Error::IndexOutOfRange { index, n });
                }
            }
        }
        let mut reduced = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for q in vertices {
            let t: [i64; 3] = std::array::from_fn(|k| floor_i64(&q[k]));
            reduced.push(std::array::from_fn(|k| q[k].clone() - T::from_i64(t[k])));
            offsets.push(t);
        }
        // q_head + s - q_tail is preserved when q = q' + t.
        let edges = edges
            .into_iter()
            .map(|e| {
                let (th, tt) = (offsets[e.head], offsets[e.tail]);
                EdgeOrbit::new(e.tail, e.head, std::array::from_fn(|k| e.shift[k] + th[k] - tt[k]))
            })
            .collect();
        Ok(Self { vertices: reduced, edges, gram })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[[T; 3]] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeOrbit] {
        &self.edges
    }

    pub fn gram(&self) -> &SymmetricMatrix3<T> {
        &self.gram
    }

    /// `q_head + shift - q_tail`.
    pub fn edge_vector(&self, e: &EdgeOrbit) -> Result<[T; 3]> {
        let n = self.n();
        let qi = self.vertices.get(e.tail).ok_or(Error::IndexOutOfRange { index: e.tail, n })?;
        let qj = self.vertices.get(e.head).ok_or(Error::IndexOutOfRange { index: e.head, n })?;
        Ok(std::array::from_fn(|k| qj[k].clone() + T::from_i64(e.shift[k]) - qi[k].clone()))
    }

    /// `eᵗ ω e` for the edge vector `e`.
    pub fn edge_length_sq(&self, e: &EdgeOrbit) -> Result<T> {
        Ok(self.gram.quad_form(&self.edge_vector(e)?))
    }

    pub fn edge_lengths_sq(&self) -> Vec<T> {
        self.edges
            .iter()
            .map(|e| self.edge_length_sq(e).expect("edges are range-checked at construction"))
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if let Some(q0) = self.vertices.first() {
            if q0.iter().any(|c| !c.is_zero()) {
                report.violations.push("vertex 0 is not at the origin".to_string());
            }
        } else {
            report.violations.push("framework has no vertices".to_string());
        }
        for (i, q) in self.vertices.iter().enumerate() {
            if q.iter().any(|c| *c < T::zero() || *c >= T::one()) {
                report.violations.push(format!("vertex {i} coordinates outside [0,1)"));
            }
        }
        if !self.gram.is_positive_definite() {
            report.violations.push("gram not positive definite".to_string());
        }
        for (k, e) in self.edges.iter().enumerate() {
            match self.edge_vector(e) {
                Ok(v) if v.iter().all(|c| c.is_zero()) => {
                    report.violations.push(format!("edge {k} has zero edge vector"));
                }
                Ok(_) => {}
                Err(err) => report.violations.push(format!("edge {k}: {err}")),
            }
        }
        if self.m() != 3 * self.n() {
            report
                .warnings
                .push(format!("m ≠ 3n (m = {}, n = {})", self.m(), self.n()));
        }
        report
    }

    pub fn with_gram(&self, gram: SymmetricMatrix3<T>) -> Self {
        Self { gram, ..self.clone() }
    }

    /// Replaces the coordinates of vertices `1..n` and the Gram matrix without
    /// re-reducing coordinates; used by the trajectory integrator, where
    /// vertices drift continuously and shifts must stay fixed.
    pub fn with_state(&self, vertices: Vec<[T; 3]>, gram: SymmetricMatrix3<T>) -> Self {
        assert_eq!(vertices.len(), self.n());
        Self { vertices, edges: self.edges.clone(), gram }
    }

    pub fn to_f64(&self) -> PeriodicFramework<f64> {
        PeriodicFramework {
            vertices: self.vertices.iter().map(|q| q.clone().map(|c| c.to_f64())).collect(),
            edges: self.edges.clone(),
            gram: self.gram.to_f64(),
        }
    }
}

fn floor_i64<T: Scalar>(v: &T) -> i64 {
    v.to_f64().floor() as i64 + floor_correction(v)
}

// `to_f64` may round a rational just below an integer up to that integer.
fn floor_correction<T: Scalar>(v: &T) -> i64 {
    let f = v.to_f64().floor() as i64;
    let base = T::from_i64(f);
    if *v < base {
        -1
    } else if *v >= base + T::one() {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::scalar::parse_rational;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn family(lambda: &str) -> PeriodicFramework<Rational> {
        let l = q(lambda);
        let targets = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [0, 1, 1], [1, 0, 1]];
        PeriodicFramework::new(
            vec![[q("0"), q("0"), q("0")], [l.clone(), l.clone(), l]],
            targets.iter().map(|&s| EdgeOrbit::new(1, 0, s)).collect(),
            SymmetricMatrix3::identity(),
        )
        .unwrap()
    }

    #[test]
    fn family_edge_vectors() {
        let fw = family("1/6");
        assert_eq!(fw.edge_vector(&fw.edges()[0]).unwrap(), [q("5/6"), q("-1/6"), q("-1/6")]);
        let fw = family("5/12");
        assert_eq!(fw.edge_vector(&fw.edges()[3]).unwrap(), [q("7/12"), q("7/12"), q("-5/12")]);
    }

    #[test]
    fn loop_edge_is_pure_period() {
        let fw = PeriodicFramework::new(
            vec![[q("0"), q("0"), q("0")], [q("1/5"), q("2/7"), q("3/11")]],
            vec![EdgeOrbit::new(1, 1, [1, 0, 0])],
            SymmetricMatrix3::identity(),
        )
        .unwrap();
        assert_eq!(fw.edge_vector(&fw.edges()[0]).unwrap(), [q("1"), q("0"), q("0")]);
        assert_eq!(fw.edge_length_sq(&fw.edges()[0]).unwrap(), q("1"));
    }

    #[test]
    fn squared_lengths() {
        let fw = family("1/6");
        let e = fw.edges()[0].clone();
        assert_eq!(fw.edge_length_sq(&e).unwrap(), q("3/4"));
        let doubled = fw.with_gram(SymmetricMatrix3::scaled_identity(q("2")));
        assert_eq!(doubled.edge_length_sq(&e).unwrap(), q("3/2"));
    }

    #[test]
    fn out_of_range_index() {
        let fw = family("1/6");
        assert_eq!(
            fw.edge_vector(&EdgeOrbit::new(0, 5, [0, 0, 0])),
            Err(Error::IndexOutOfRange { index: 5, n: 2 })
        );
        let built = PeriodicFramework::<Rational>::new(
            vec![[q("0"), q("0"), q("0")]],
            vec![EdgeOrbit::new(0, 1, [0, 0, 0])],
            SymmetricMatrix3::identity(),
        );
        assert!(matches!(built, Err(Error::IndexOutOfRange { index: 1, n: 1 })));
    }

    #[test]
    fn coordinates_reduced_with_shifts_absorbed() {
        let fw = family("7/6");
        assert_eq!(fw.vertices()[1], [q("1/6"), q("1/6"), q("1/6")]);
        // Edge vectors are unchanged by the reduction.
        assert_eq!(fw.edge_vector(&fw.edges()[0]).unwrap(), [q("-1/6"), q("-7/6"), q("-7/6")]);
        let neg = family("-1/4");
        assert_eq!(neg.vertices()[1], [q("3/4"), q("3/4"), q("3/4")]);
        assert_eq!(neg.edge_vector(&neg.edges()[0]).unwrap(), [q("5/4"), q("1/4"), q("1/4")]);
    }

    #[test]
    fn validation() {
        let fw = family("1/6");
        let r = fw.validate();
        assert!(r.is_valid(), "{r:?}");
        assert!(r.warnings.is_empty());
        assert_eq!(fw.m(), 3 * fw.n());

        let bad = fw.with_gram(SymmetricMatrix3::new([q("1"), q("-1"), q("1"), q("0"), q("0"), q("0")]));
        assert!(bad.validate().violations.contains(&"gram not positive definite".to_string()));

        let five = PeriodicFramework::new(
            fw.vertices().to_vec(),
            fw.edges()[..5].to_vec(),
            SymmetricMatrix3::identity(),
        )
        .unwrap();
        let r = five.validate();
        assert!(r.is_valid());
        assert!(r.warnings.iter().any(|w| w.starts_with("m ≠ 3n")));

        let zero_edge = PeriodicFramework::new(
            fw.vertices().to_vec(),
            vec![EdgeOrbit::new(1, 1, [0, 0, 0])],
            SymmetricMatrix3::identity(),
        )
        .unwrap();
        assert!(zero_edge.validate().violations.iter().any(|v| v.contains("zero edge vector")));
    }

    #[test]
    fn symmetric_storage_order() {
        let m = SymmetricMatrix3::new([q("1"), q("2"), q("3"), q("4"), q("5"), q("6")]);
        assert_eq!(*m.get(1, 2), q("4"));
        assert_eq!(*m.get(2, 0), q("5"));
        assert_eq!(*m.get(1, 0), q("6"));
        assert_eq!(SymmetricMatrix3::from_full(&m.full()), Some(m));
        let asym = [[q("1"), q("2"), q("0")], [q("3"), q("1"), q("0")], [q("0"), q("0"), q("1")]];
        assert_eq!(SymmetricMatrix3::from_full(&asym), None);
    }

    #[test]
    fn exact_floor_near_integers() {
        let almost = q("99999999999999999999/100000000000000000000");
        assert_eq!(floor_i64(&almost), 0);
        assert_eq!(floor_i64(&q("-1/100000000000000000000")), -1);
        assert_eq!(floor_i64(&q("3")), 3);
    }
}
