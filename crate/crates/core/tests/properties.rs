use cartanflow::linalg::{c, commutator, dagger, frob, hermitian_eigen, matrix_from_json, matrix_to_json, svd, trace_form};
use cartanflow::random::{random_k, random_p};
use cartanflow::reduction::{closed_form_density, moment_map};
use cartanflow::slice::{embed_radial, radial_decompose};
use cartanflow::{make_space, Cmat, Kind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_matrix(n: usize) -> impl Strategy<Value = Cmat> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n * n)
        .prop_map(move |v| Cmat::from_iterator(n, n, v.into_iter().map(|(a, b)| c(a, b))))
}

fn arb_kind() -> impl Strategy<Value = Kind> {
    prop::sample::select(Kind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trace_form_bilinear_symmetric(x in arb_matrix(4), y in arb_matrix(4), z in arb_matrix(4), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let lhs = trace_form(&(&x * c(a, 0.0) + &y * c(b, 0.0)), &z).unwrap();
        let rhs = a * trace_form(&x, &z).unwrap() + b * trace_form(&y, &z).unwrap();
        let scale = (frob(&x) + frob(&y)) * frob(&z) * 9.0;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-14));
        prop_assert_eq!(trace_form(&x, &y).unwrap(), trace_form(&y, &x).unwrap());
    }

    #[test]
    fn jacobi_identity(x in arb_matrix(3), y in arb_matrix(3), z in arb_matrix(3)) {
        let br = |a: &Cmat, b: &Cmat| commutator(a, b).unwrap();
        let sum = br(&x, &br(&y, &z)) + br(&y, &br(&z, &x)) + br(&z, &br(&x, &y));
        let scale = frob(&x) * frob(&y) * frob(&z);
        prop_assert!(frob(&sum) <= 1e-10 * scale.max(1e-14));
    }

    #[test]
    fn dagger_is_an_involution(x in arb_matrix(5)) {
        prop_assert_eq!(dagger(&dagger(&x)), x);
    }

    #[test]
    fn matrix_json_round_trip_is_bit_exact(x in arb_matrix(3)) {
        prop_assert_eq!(matrix_from_json(&matrix_to_json(&x)).unwrap(), x);
    }

    #[test]
    fn radial_coordinates_are_k_invariant(kind in arb_kind(), seed in any::<u64>()) {
        let s = make_space(kind, 3, 2).unwrap_or_else(|_| make_space(kind, 0, 3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_p(&s, &mut rng);
        let k = random_k(&s, &mut rng);
        let y = &k * &x * k.adjoint();
        let qx = radial_decompose(&s, &x).unwrap().q;
        let qy = radial_decompose(&s, &y).unwrap().q;
        for (a, b) in qx.iter().zip(&qy) {
            prop_assert!((a - b).abs() <= 1e-9 * frob(&x).max(1.0));
        }
    }

    #[test]
    fn radial_of_embedded_chamber_point(kind in arb_kind(), seed in any::<u64>()) {
        let s = make_space(kind, 4, 3).unwrap_or_else(|_| make_space(kind, 0, 4).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = cartanflow::random::random_chamber_point(&s, &mut rng, 1.0, 0.01);
        let back = radial_decompose(&s, &embed_radial(&s, &q).unwrap().matrix).unwrap().q;
        for (a, b) in q.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn moment_map_is_equivariant(kind in arb_kind(), seed in any::<u64>()) {
        let s = make_space(kind, 3, 2).unwrap_or_else(|_| make_space(kind, 0, 3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x1, x2, k) = (random_p(&s, &mut rng), random_p(&s, &mut rng), random_k(&s, &mut rng));
        let ad = |x: &Cmat| &k * x * k.adjoint();
        let lhs = moment_map(&s, &ad(&x1), &ad(&x2)).unwrap().matrix;
        let rhs = ad(&moment_map(&s, &x1, &x2).unwrap().matrix);
        prop_assert!(frob(&(lhs - rhs)) <= 1e-10 * (frob(&x1) * frob(&x2)).max(1.0));
    }

    #[test]
    fn closed_density_is_weyl_invariant(a in 0.1f64..3.0, b in 0.1f64..3.0, d in 0.1f64..3.0) {
        // permutations and sign changes for bdi(4,3); permutations for ai(3)
        let s = make_space(Kind::Bdi, 4, 3).unwrap();
        let base = closed_form_density(&s, &[a, b, d]);
        for q in [[b, a, d], [d, b, a], [-a, b, d], [a, -b, -d]] {
            prop_assert!((closed_form_density(&s, &q) - base).abs() <= 1e-12 * base.max(1e-300));
        }
        let t = make_space(Kind::Ai, 0, 3).unwrap();
        let q = [a, b - a, -b];
        let base = closed_form_density(&t, &q);
        prop_assert!((closed_form_density(&t, &[q[1], q[2], q[0]]) - base).abs() <= 1e-12 * base.max(1e-300));
    }
}

#[test]
fn large_eigen_and_svd_reconstruct() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    use rand_distr::{Distribution, StandardNormal};
    let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
    let x = Cmat::from_fn(40, 40, |_, _| c(g(), g()));
    let h = &x + x.adjoint();
    let (ev, u) = hermitian_eigen(&h).unwrap();
    assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    let d = diag(&ev);
    assert!(frob(&(&u * d * u.adjoint() - &h)) <= 1e-10 * frob(&h));
    let (uu, s, v) = svd(&x);
    assert!(s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|&v| v >= 0.0));
    let d = diag(&s);
    assert!(frob(&(&uu * d * v.adjoint() - &x)) <= 1e-10 * frob(&x));
}

fn diag(v: &[f64]) -> Cmat {
    Cmat::from_fn(v.len(), v.len(), |i, j| if i == j { c(v[i], 0.0) } else { c(0.0, 0.0) })
}
