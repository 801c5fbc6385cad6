//! Infinitesimal periodic deformations.
//!
//! Differentiating the squared edge lengths `eᵗ ω e` gives one linear
//! equation per edge orbit,
//!
//! ```text
//! ⟨ω̇ e, e⟩ + 2⟨ω e, q̇_head − q̇_tail⟩ = 0,
//! ```
//!
//! in the `3(n−1)` vertex velocities (vertex 0 is pinned at the origin) and
//! the six entries of `ω̇`. A regular framework has a three-dimensional
//! solution space that projects injectively onto the `ω̇` coordinates; this
//! module checks that and expresses everything in terms of three `ω̇`
//! entries `(X, Y, Z)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cubic::LinearForm;
use crate::framework::{PeriodicFramework, SymmetricMatrix3, SYM_LABELS, SYM_POSITIONS};
use crate::scalar::{NullSpace, Scalar};

/// Coefficient matrix of the linearized edge-length equations.
#[derive(Clone, Debug)]
pub struct InfinitesimalSystem<T> {
    pub matrix: DMatrix<T>,
    /// Number of vertex orbits.
    pub n: usize,
    pub column_labels: Vec<String>,
}

impl<T: Scalar> InfinitesimalSystem<T> {
    pub fn m(&self) -> usize {
        self.matrix.nrows()
    }

    /// Index of the first Gram-velocity column.
    pub fn gram_offset(&self) -> usize {
        3 * (self.n - 1)
    }

    /// Row values `A·v` for an unknown vector `v`.
    pub fn apply(&self, v: &DVector<T>) -> DVector<T> {
        let (rows, cols) = self.matrix.shape();
        DVector::from_fn(rows, |i, _| {
            (0..cols).fold(T::zero(), |acc, j| acc + self.matrix[(i, j)].clone() * v[j].clone())
        })
    }
}

/// Which regularity condition failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegularityCondition {
    /// `m = 3n`.
    Count,
    /// The edge constraints are linearly independent.
    Independence,
    /// Flexes project injectively onto Gram velocities.
    Projection,
    /// The determinant cubic is non-singular.
    SmoothCubic,
}

impl fmt::Display for RegularityCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Count => "COUNT",
            Self::Independence => "INDEPENDENCE",
            Self::Projection => "PROJECTION",
            Self::SmoothCubic => "SMOOTH_CUBIC",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegularityDiagnosis {
    pub condition: RegularityCondition,
    pub detail: String,
}

impl RegularityDiagnosis {
    pub fn new(condition: RegularityCondition, detail: impl Into<String>) -> Self {
        Self { condition, detail: detail.into() }
    }
}

/// The image of the flex space in symmetric matrices, written in three free
/// Gram-velocity entries `(X, Y, Z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramVelocityPencil<T> {
    /// One linear form per `ω̇` entry, storage order `(11,22,33,23,13,12)`.
    pub forms: [LinearForm<T>; 6],
    /// Storage indices of the entries used as `X`, `Y`, `Z`.
    pub free_variables: [usize; 3],
    /// `q̇` coordinates of vertices `1..n`, flattened, as linear forms.
    pub back_map: Vec<LinearForm<T>>,
}

impl<T: Scalar> GramVelocityPencil<T> {
    pub fn eval(&self, xyz: &[T; 3]) -> SymmetricMatrix3<T> {
        SymmetricMatrix3::new(std::array::from_fn(|i| self.forms[i].eval(xyz)))
    }

    pub fn vertex_velocities(&self, xyz: &[T; 3]) -> Vec<[T; 3]> {
        self.back_map
            .chunks(3)
            .map(|c| std::array::from_fn(|k| c[k].eval(xyz)))
            .collect()
    }

    /// Full unknown vector `(q̇_1, …, q̇_{n−1}, ω̇)` at `xyz`.
    pub fn unknowns(&self, xyz: &[T; 3]) -> DVector<T> {
        let values: Vec<T> = self
            .back_map
            .iter()
            .chain(self.forms.iter())
            .map(|f| f.eval(xyz))
            .collect();
        DVector::from_vec(values)
    }

    pub fn free_variable_labels(&self) -> [&'static str; 3] {
        self.free_variables.map(|i| SYM_LABELS[i])
    }

    pub fn to_f64(&self) -> GramVelocityPencil<f64> {
        GramVelocityPencil {
            forms: std::array::from_fn(|i| self.forms[i].to_f64()),
            free_variables: self.free_variables,
            back_map: self.back_map.iter().map(LinearForm::to_f64).collect(),
        }
    }

    /// Matrix of linear forms as a float function of `(X, Y, Z)`.
    pub fn eval_f64(&self, xyz: &[f64; 3]) -> SymmetricMatrix3<f64> {
        SymmetricMatrix3::new(std::array::from_fn(|i| {
            (0..3).map(|v| self.forms[i].0[v].to_f64() * xyz[v]).sum()
        }))
    }
}

/// Tolerances for the float backend.
#[derive(Clone, Copy, Debug)]
pub struct RankTolerance {
    /// Singular values below `relative × largest` count as zero.
    pub relative: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self { relative: 1e-9 }
    }
}

pub fn build_system<T: Scalar>(fw: &PeriodicFramework<T>) -> InfinitesimalSystem<T> {
    let n = fw.n();
    let cols = 3 * (n - 1) + 6;
    let offset = 3 * (n - 1);
    let mut matrix = DMatrix::from_element(fw.m(), cols, T::zero());
    let two = T::from_i64(2);
    for (row, e) in fw.edges().iter().enumerate() {
        let v = fw.edge_vector(e).expect("edges are range-checked at construction");
        for (slot, &(i, j)) in SYM_POSITIONS.iter().enumerate() {
            let mut c = v[i].clone() * v[j].clone();
            if i != j {
                c = c * two.clone();
            }
            matrix[(row, offset + slot)] = c;
        }
        let wv = fw.gram().mul_vec(&v);
        for (vertex, sign) in [(e.head, T::one()), (e.tail, -T::one())] {
            if vertex == 0 {
                continue;
            }
            for k in 0..3 {
                let col = 3 * (vertex - 1) + k;
                let add = sign.clone() * two.clone() * wv[k].clone();
                matrix[(row, col)] = matrix[(row, col)].clone() + add;
            }
        }
    }
    let mut column_labels = Vec::with_capacity(cols);
    for vertex in 1..n {
        for axis in ["1", "2", "3"] {
            column_labels.push(format!("qdot{vertex}_{axis}"));
        }
    }
    column_labels.extend(SYM_LABELS.iter().map(|l| format!("wdot{l}")));
    InfinitesimalSystem { matrix, n, column_labels }
}

/// Rank of the system and the COUNT / INDEPENDENCE checks.
#[derive(Clone, Debug)]
pub struct IndependenceReport<T> {
    pub rank: usize,
    pub kernel: NullSpace<T>,
    pub diagnosis: Option<RegularityDiagnosis>,
}

pub fn check_independence<T: Scalar>(sys: &InfinitesimalSystem<T>, tol: RankTolerance) -> IndependenceReport<T> {
    let kernel = T::null_space(&sys.matrix, tol.relative);
    let rank = kernel.rank;
    let (m, n) = (sys.m(), sys.n);
    let diagnosis = if m != 3 * n {
        Some(RegularityDiagnosis::new(
            RegularityCondition::Count,
            format!("{m} edge orbits for {n} vertex orbits; need m = 3n = {}", 3 * n),
        ))
    } else if rank < m {
        Some(RegularityDiagnosis::new(
            RegularityCondition::Independence,
            format!("edge constraints have rank {rank} < m = {m}"),
        ))
    } else {
        None
    };
    IndependenceReport { rank, kernel, diagnosis }
}

/// Kernel, projection check and free-variable selection in one go.
pub fn parametrize<T: Scalar>(
    sys: &InfinitesimalSystem<T>,
    tol: RankTolerance,
) -> Result<GramVelocityPencil<T>, RegularityDiagnosis> {
    let report = check_independence(sys, tol);
    if let Some(d) = report.diagnosis {
        return Err(d);
    }
    parametrize_kernel(sys, &report.kernel, tol)
}

/// Builds the pencil from a precomputed kernel basis.
pub fn parametrize_kernel<T: Scalar>(
    sys: &InfinitesimalSystem<T>,
    kernel: &NullSpace<T>,
    tol: RankTolerance,
) -> Result<GramVelocityPencil<T>, RegularityDiagnosis> {
    if kernel.basis.len() != 3 {
        return Err(RegularityDiagnosis::new(
            RegularityCondition::Independence,
            format!("deformation space has dimension {}, expected 3", kernel.basis.len()),
        ));
    }
    let offset = sys.gram_offset();
    // 6x3 projection of the kernel basis onto the Gram-velocity coordinates.
    let proj = |row: usize, col: usize| kernel.basis[col][offset + row].clone();

    let triples: Vec<[usize; 3]> = (0..6)
        .flat_map(|a| (a + 1..6).flat_map(move |b| (b + 1..6).map(move |c| [a, b, c])))
        .collect();
    let minor = |t: &[usize; 3]| -> [[T; 3]; 3] { std::array::from_fn(|i| std::array::from_fn(|j| proj(t[i], j))) };

    let chosen = if T::EXACT {
        triples.iter().find(|t| !det3(&minor(t)).is_zero()).copied()
    } else {
        // Kernel columns are orthonormal in float mode, so determinants of
        // the minors are directly comparable.
        let best = triples
            .iter()
            .map(|t| (det3(&minor(t)).to_f64().abs(), *t))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        let full = DMatrix::from_fn(6, 3, |i, j| proj(i, j).to_f64());
        let sigma = full.singular_values();
        let smax = sigma.max();
        let smin = sigma.min();
        match best {
            Some((_, t)) if smax > 0.0 && smin > tol.relative * smax => Some(t),
            _ => None,
        }
    };
    let Some(free) = chosen else {
        return Err(RegularityDiagnosis::new(
            RegularityCondition::Projection,
            "a non-trivial flex leaves the Gram matrix unchanged (projection onto ω̇ has rank < 3)",
        ));
    };

    let inv = inverse3(&minor(&free));
    // Coefficients of row r in (X, Y, Z): proj(r, ·) · inv.
    let combine = |value: &dyn Fn(usize) -> T| -> LinearForm<T> {
        LinearForm(std::array::from_fn(|v| {
            (0..3).fold(T::zero(), |acc, j| acc + value(j) * inv[j][v].clone())
        }))
    };
    let mut forms: [LinearForm<T>; 6] = std::array::from_fn(|r| combine(&|j| proj(r, j)));
    for (v, &slot) in free.iter().enumerate() {
        forms[slot] = LinearForm::unit(v);
    }
    let back_map = (0..offset)
        .map(|row| combine(&|j| kernel.basis[j][row].clone()))
        .collect();
    Ok(GramVelocityPencil { forms, free_variables: free, back_map })
}

pub(crate) fn det3<T: Scalar>(a: &[[T; 3]; 3]) -> T {
    a[0][0].clone() * (a[1][1].clone() * a[2][2].clone() - a[1][2].clone() * a[2][1].clone())
        - a[0][1].clone() * (a[1][0].clone() * a[2][2].clone() - a[1][2].clone() * a[2][0].clone())
        + a[0][2].clone() * (a[1][0].clone() * a[2][1].clone() - a[1][1].clone() * a[2][0].clone())
}

pub(crate) fn inverse3<T: Scalar>(a: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let det = det3(a);
    let c = |i: usize, j: usize| a[i % 3][j % 3].clone();
    // Adjugate via cyclic cofactors.
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let cof = c(j + 1, i + 1) * c(j + 2, i + 2) - c(j + 1, i + 2) * c(j + 2, i + 1);
            cof / det.clone()
        })
    })
}
