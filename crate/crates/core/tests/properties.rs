use auxetica::cubic::{aronhold_s, aronhold_t, singularity_form, InvariantRecord, TernaryCubic};
use auxetica::decision::{decide, simulate_path, DecisionOptions, SimulationOptions, Verdict};
use auxetica::deformation::{build_system, parametrize, RankTolerance};
use auxetica::document::{parse_framework, write_framework};
use auxetica::hesse::{hesse_frame, real_inflections, HesseTolerances};
use auxetica::lab::{family_framework, random_framework};
use auxetica::{EdgeOrbit, PeriodicFramework, Rational, SymmetricMatrix3};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn pow(x: &Rational, e: u32) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * x)
}

fn det3(m: &[[Rational; 3]; 3]) -> Rational {
    &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1]) - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
        + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
}

fn rational_in(lo: i64, hi: i64) -> impl Strategy<Value = Rational> {
    (1i64..=12).prop_flat_map(move |d| (lo * d..=hi * d).prop_map(move |n| r(n, d)))
}

fn matrix() -> impl Strategy<Value = [[Rational; 3]; 3]> {
    proptest::collection::vec((-5i64..=5, 1i64..=3), 9)
        .prop_map(|v| std::array::from_fn(|i| std::array::from_fn(|j| r(v[3 * i + j].0, v[3 * i + j].1))))
        .prop_filter("invertible", |m| !det3(m).is_zero())
}

/// Verdict and modulus, the two outputs that must not depend on presentation.
fn outcome(fw: &PeriodicFramework<Rational>) -> (Verdict, Option<Rational>) {
    let report = decide(fw, &DecisionOptions::default()).expect("decide");
    (report.verdict, report.invariants.and_then(|i| i.j))
}

fn relabel(fw: &PeriodicFramework<Rational>, perm: &[usize]) -> PeriodicFramework<Rational> {
    let mut vertices = vec![fw.vertices()[0].clone(); fw.n()];
    for (old, &new) in perm.iter().enumerate() {
        vertices[new] = fw.vertices()[old].clone();
    }
    // Vertex 0 anchors the gauge, so translate the new first vertex to the
    // origin; edge vectors are unchanged.
    let origin = vertices[0].clone();
    for v in &mut vertices {
        for k in 0..3 {
            v[k] -= &origin[k];
        }
    }
    let edges = fw.edges().iter().map(|e| EdgeOrbit::new(perm[e.tail], perm[e.head], e.shift)).collect();
    PeriodicFramework::new(vertices, edges, fw.gram().clone()).unwrap()
}

fn small_framework() -> impl Strategy<Value = PeriodicFramework<Rational>> {
    (2usize..=4, any::<u64>()).prop_map(|(n, seed)| random_framework(n, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_shifts_leave_lengths_and_verdict(fw in small_framework(), t in proptest::array::uniform3(-3i64..=3), pick in 0usize..4) {
        let i = pick % fw.n();
        let mut vertices = fw.vertices().to_vec();
        for k in 0..3 {
            vertices[i][k] += r(t[k], 1);
        }
        let edges: Vec<EdgeOrbit> = fw
            .edges()
            .iter()
            .map(|e| {
                let mut s = e.shift;
                for k in 0..3 {
                    if e.head == i { s[k] -= t[k]; }
                    if e.tail == i { s[k] += t[k]; }
                }
                EdgeOrbit::new(e.tail, e.head, s)
            })
            .collect();
        let raw_lengths: Vec<Rational> = edges
            .iter()
            .map(|e| {
                let v: [Rational; 3] = std::array::from_fn(|k| &vertices[e.head][k] + r(e.shift[k], 1) - &vertices[e.tail][k]);
                fw.gram().quad_form(&v)
            })
            .collect();
        prop_assert_eq!(&raw_lengths, &fw.edge_lengths_sq());
        let shifted = PeriodicFramework::new(vertices, edges, fw.gram().clone()).unwrap();
        prop_assert_eq!(outcome(&shifted), outcome(&fw));
    }

    #[test]
    fn relabeling_and_edge_order_leave_the_verdict(fw in small_framework(), seed in any::<u64>()) {
        let n = fw.n();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left((seed as usize) % n);
        let base = outcome(&fw);
        prop_assert_eq!(outcome(&relabel(&fw, &perm)), base.clone());
        let mut edges = fw.edges().to_vec();
        edges.reverse();
        let m = edges.len();
        edges.rotate_left((seed as usize) % m);
        let reordered = PeriodicFramework::new(fw.vertices().to_vec(), edges, fw.gram().clone()).unwrap();
        prop_assert_eq!(outcome(&reordered), base);
    }

    #[test]
    fn gram_scaling_scales_lengths_and_keeps_the_verdict(fw in small_framework(), c in rational_in(1, 4)) {
        prop_assume!(c > Rational::zero());
        let scaled = fw.with_gram(fw.gram().scale(&c));
        for (a, b) in scaled.edge_lengths_sq().iter().zip(fw.edge_lengths_sq()) {
            prop_assert_eq!(a, &(&b * &c));
        }
        prop_assert_eq!(outcome(&scaled), outcome(&fw));
    }

    #[test]
    fn cholesky_factor_reproduces_lengths(fw in small_framework()) {
        let f = fw.to_f64();
        let l = f.gram().to_matrix3().cholesky().expect("positive definite").l();
        for e in f.edges() {
            let v = f.edge_vector(e).unwrap();
            let w = l.transpose() * nalgebra::Vector3::new(v[0], v[1], v[2]);
            let want = f.edge_length_sq(e).unwrap();
            prop_assert!((w.norm_squared() - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn pencil_points_solve_the_system_exactly(fw in small_framework(), xyz in proptest::array::uniform3(-4i64..=4)) {
        let sys = build_system(&fw);
        let Ok(pencil) = parametrize(&sys, RankTolerance::default()) else { return Ok(()); };
        let p = xyz.map(|v| r(v, 1));
        prop_assert!(sys.apply(&pencil.unknowns(&p)).iter().all(|v| v.is_zero()));
        // Linearity in the free variables.
        let unit = |i: usize| std::array::from_fn::<Rational, 3, _>(|k| if k == i { Rational::one() } else { Rational::zero() });
        let mut sum = SymmetricMatrix3::new(std::array::from_fn(|_| Rational::zero()));
        for i in 0..3 {
            sum = sum.add(&pencil.eval(&unit(i)).scale(&p[i]));
        }
        prop_assert_eq!(sum, pencil.eval(&p));
    }

    #[test]
    fn documents_round_trip(fw in small_framework()) {
        prop_assert_eq!(parse_framework(&write_framework(&fw)).unwrap(), fw);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hesse_invariants_follow_the_closed_forms(k in rational_in(-5, 5)) {
        let c = TernaryCubic::hesse(k.clone());
        let (s, t) = (aronhold_s(&c), aronhold_t(&c));
        prop_assert_eq!(&s, &(-&k / r(2, 1) - pow(&k, 4) / r(16, 1)));
        prop_assert_eq!(&t, &(Rational::one() + r(5, 2) * pow(&k, 3) - pow(&k, 6) / r(8, 1)));
        prop_assert_eq!(singularity_form(&s, &t), pow(&(Rational::one() - pow(&k, 3)), 3));
    }

    #[test]
    fn hesse_parameter_round_trips(k in rational_in(1, 30)) {
        prop_assume!(k > Rational::one());
        let inv = InvariantRecord::compute(&TernaryCubic::hesse(k.clone()), Default::default()).unwrap();
        let want = auxetica::scalar::rational_to_f64(&k);
        let got = inv.k.unwrap().k;
        prop_assert!((got - want).abs() <= 1e-9 * want, "{} vs {}", got, want);
    }

    #[test]
    fn invariants_have_weights_four_and_six(coeffs in proptest::array::uniform10(-4i64..=4), m in matrix()) {
        let c = TernaryCubic::new(coeffs.map(|v| r(v, 1)));
        let g = c.compose(&m);
        let det = det3(&m);
        prop_assert_eq!(aronhold_s(&g), aronhold_s(&c) * pow(&det, 4));
        prop_assert_eq!(aronhold_t(&g), aronhold_t(&c) * pow(&det, 6));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn inflections_are_collinear_and_the_preimage_is_off_the_curve(k in rational_in(2, 20), m in matrix()) {
        prop_assume!(k > r(6, 5));
        let c = TernaryCubic::hesse(k.clone()).compose(&m);
        let tol = HesseTolerances::default();
        let pts = real_inflections(&c, &tol).unwrap();
        let det = nalgebra::Matrix3::from_fn(|i, j| pts[i].0[j]).determinant();
        prop_assert!(det.abs() < 1e-10);
        let frame = hesse_frame(&c, auxetica::scalar::rational_to_f64(&k), &tol).unwrap();
        let f = c.to_f64();
        let scale = f.coeffs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(f.eval(&frame.preimage.0).abs() > 1e-8 * scale);
    }

    #[test]
    fn family_pencil_is_symmetric_under_reflection(lambda in rational_in(-1, 2)) {
        let ell = &lambda * (Rational::one() - &lambda);
        prop_assume!(r(2, 1) - r(6, 1) * &ell != Rational::zero());
        let pencil = |l: &Rational| parametrize(&build_system(&family_framework(l)), RankTolerance::default());
        let (Ok(a), Ok(b)) = (pencil(&lambda), pencil(&(Rational::one() - &lambda))) else { return Ok(()); };
        let mu = &ell / (r(2, 1) - r(6, 1) * &ell);
        for form in &a.forms[3..] {
            prop_assert!(form.0.iter().all(|v| *v == mu));
        }
        prop_assert_eq!(a.forms, b.forms);
    }
}

#[test]
fn gram_eigenvalues_grow_along_the_trajectory() {
    let tau = 1e-3;
    for lambda in [r(1, 10), r(1, 6), r(1, 4), r(4, 5)] {
        let opts = SimulationOptions { tau, steps: 20, ..Default::default() };
        let path = simulate_path(&family_framework(&lambda), &opts).unwrap();
        for w in path.records.windows(2) {
            let (a, b) = (w[0].framework.gram().eigenvalues(), w[1].framework.gram().eigenvalues());
            for i in 0..3 {
                assert!(b[i] - a[i] >= -10.0 * tau * tau, "λ = {lambda}: {a:?} → {b:?}");
            }
        }
    }
}
