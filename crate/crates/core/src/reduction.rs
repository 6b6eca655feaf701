//! Moment map, the angular momentum `l = [r, H(q)]`, the operator
//! `A_q = ad(E) ad(q)` and the slice densities.
//!
//! All matrices act between the fixed orthonormal bases of `a_perp`
//! (inner product `trace_form`) and `zk_perp` (inner product
//! `-trace_form`).

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, bracket, frob, frob_inner, threshold, Cmat, Rmat};
use crate::random::random_chamber_point;
use crate::slice::{SliceCoordinates, WALL_TOL};
use crate::spaces::{self, AlgebraElement, Kind, RestrictedRoot, SpaceDescriptor, Subspace};

/// `(q, p, l)` with `l` in `zk_perp`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub l: Cmat,
}

/// Matrix of `A_q` in the `zk_perp` basis.
#[derive(Debug, Clone)]
pub struct AqOperator {
    pub matrix: Rmat,
    pub q: Vec<f64>,
    pub e: Vec<f64>,
}

/// `mu(X1, X2) = [X2, X1]`.
pub fn moment_map(space: &SpaceDescriptor, x1: &Cmat, x2: &Cmat) -> Result<AlgebraElement> {
    space.check_in_p(x1)?;
    space.check_in_p(x2)?;
    Ok(AlgebraElement::new(Subspace::K, bracket(x2, x1)))
}

/// `l = [r, H(q)]`.
pub fn l_from_slice(space: &SpaceDescriptor, s: &SliceCoordinates) -> Result<Cmat> {
    if s.q.len() != space.coord_len() {
        return Err(Error::Contract(format!("{}: q has wrong length", space.label())));
    }
    Ok(bracket(&s.r, &space.radial_matrix(&s.q)))
}

/// Matrix of `r -> [r, H(q)]` from `a_perp` to `zk_perp`.
pub(crate) fn l_matrix(space: &SpaceDescriptor, q: &[f64]) -> Rmat {
    let h = space.radial_matrix(q);
    let ap = space.basis_ref(Subspace::APerp);
    let zk = space.basis_ref(Subspace::ZkPerp);
    let mut l = Rmat::zeros(zk.len(), ap.len());
    for (j, r) in ap.iter().enumerate() {
        let img = bracket(r, &h);
        for (i, z) in zk.iter().enumerate() {
            l[(i, j)] = frob_inner(z, &img);
        }
    }
    l
}

pub(crate) fn require_off_wall(space: &SpaceDescriptor, q: &[f64]) -> Result<()> {
    let mr = spaces::min_root_value(space, q);
    if mr <= WALL_TOL {
        return Err(Error::Degenerate(format!(
            "{}: min |alpha(q)| = {mr:.3e} is within the wall tolerance",
            space.label()
        )));
    }
    Ok(())
}

/// Coordinates of `x` in a stored basis.
pub(crate) fn coords_in(space: &SpaceDescriptor, which: Subspace, x: &Cmat) -> DVector<f64> {
    let b = space.basis_ref(which);
    DVector::from_iterator(b.len(), b.iter().map(|v| frob_inner(v, x)))
}

pub(crate) fn element_in(space: &SpaceDescriptor, which: Subspace, v: &DVector<f64>) -> Cmat {
    let b = space.basis_ref(which);
    let n = space.ambient_dim();
    let mut out = Cmat::zeros(n, n);
    for (x, &t) in b.iter().zip(v.iter()) {
        out += x * linalg::c(t, 0.0);
    }
    out
}

/// Solve `[r, H(q)] = l` for `r` in `a_perp`.
pub fn r_from_l(space: &SpaceDescriptor, q: &[f64], l: &Cmat) -> Result<Cmat> {
    require_off_wall(space, q)?;
    let lc = coords_in(space, Subspace::ZkPerp, l);
    let rc = linalg::solve(&l_matrix(space, q), &lc)
        .ok_or_else(|| Error::Degenerate(format!("{}: ad(H(q)) is singular", space.label())))?;
    Ok(element_in(space, Subspace::APerp, &rc))
}

/// `A_q = ad(H(E)) ad(H(q))` on `zk_perp` with `E` the generic point of
/// the descriptor.
pub fn a_q_matrix(space: &SpaceDescriptor, q: &[f64]) -> Result<AqOperator> {
    if q.len() != space.coord_len() {
        return Err(Error::Contract(format!("{}: q has wrong length", space.label())));
    }
    let e = space.generic_point();
    let he = space.radial_matrix(&e);
    let hq = space.radial_matrix(q);
    let zk = space.basis_ref(Subspace::ZkPerp);
    let d = zk.len();
    let mut a = Rmat::zeros(d, d);
    for (j, xi) in zk.iter().enumerate() {
        let img = bracket(&he, &bracket(&hq, xi));
        for (i, z) in zk.iter().enumerate() {
            a[(i, j)] = frob_inner(z, &img);
        }
    }
    Ok(AqOperator { matrix: a, q: q.to_vec(), e })
}

/// `|det|` of `r -> [r, H(q)]` between the orthonormal bases.
pub fn jacobian_density(space: &SpaceDescriptor, q: &[f64]) -> f64 {
    linalg::abs_det(&l_matrix(space, q))
}

/// Root product `prod |alpha(q)|^mult` over a given root table.
pub fn root_product_density(roots: &[RestrictedRoot], q: &[f64]) -> f64 {
    roots.iter().map(|r| r.eval(q).abs().powi(r.multiplicity as i32)).product()
}

/// Closed density. aiii and bdi use their classical closed forms; the
/// remaining classes use the root product.
pub fn closed_form_density(space: &SpaceDescriptor, q: &[f64]) -> f64 {
    let (m, n) = (space.m(), space.n());
    match space.kind() {
        Kind::Aiii | Kind::Bdi => {
            let aiii = space.kind() == Kind::Aiii;
            let single = if aiii { 2 * (m - n) as i32 + 1 } else { (m - n) as i32 };
            let pair = if aiii { 2 } else { 1 };
            let mut v = 1.0;
            for i in 0..n {
                v *= q[i].powi(single);
                for j in i + 1..n {
                    v *= (q[i] * q[i] - q[j] * q[j]).powi(pair);
                }
            }
            v.abs()
        }
        _ => root_product_density(&spaces::restricted_roots(space), q),
    }
}

/// Number of random chamber points the density ratio is checked at.
pub const CONSTANT_SAMPLES: usize = 100;
/// Relative tolerance for the constancy of the density ratio.
pub const CONSTANT_TOL: f64 = 1e-8;

/// `jacobian_density / closed_form_density`, estimated at the generic point
/// and checked constant over [`CONSTANT_SAMPLES`] random chamber points.
pub fn density_constant(space: &SpaceDescriptor) -> Result<f64> {
    space
        .density_constant_cell()
        .get_or_init(|| calibrate(space, |q| closed_form_density(space, q)))
        .clone()
}

/// Same calibration against the root product of an arbitrary root table.
/// Used as a negative control with a corrupted table.
pub fn density_constant_with_roots(space: &SpaceDescriptor, roots: &[RestrictedRoot]) -> Result<f64> {
    calibrate(space, |q| root_product_density(roots, q))
}

fn calibrate(space: &SpaceDescriptor, closed: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let e = space.generic_point();
    let c0 = jacobian_density(space, &e) / closed(&e);
    if !c0.is_finite() || c0 <= 0.0 {
        return Err(Error::Consistency(format!("{}: density ratio at E is {c0}", space.label())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    let mut worst = 0.0f64;
    for _ in 0..CONSTANT_SAMPLES {
        let q = random_chamber_point(space, &mut rng, 1.0, 0.05);
        let ratio = jacobian_density(space, &q) / closed(&q);
        worst = worst.max((ratio - c0).abs() / c0);
    }
    if worst > CONSTANT_TOL {
        return Err(Error::Consistency(format!(
            "{}: density ratio varies by {worst:.3e} (relative) over the chamber",
            space.label()
        )));
    }
    Ok(c0)
}

/// Reduce a phase-space point to `(q, p, l)`.
pub fn reduce(space: &SpaceDescriptor, x: &Cmat, y: &Cmat) -> Result<(ReducedState, Cmat)> {
    let (s, k) = crate::slice::slice_of(space, x, y)?;
    let l = l_from_slice(space, &s)?;
    Ok((ReducedState { q: s.q, p: s.p, l }, k))
}

/// Checks that `l` is anti-Hermitian and orthogonal to `z_k(a)`.
pub fn check_reduced_l(space: &SpaceDescriptor, l: &Cmat) -> Result<()> {
    let thr = threshold(frob(l), 1e-10);
    if frob(&(l + l.adjoint())) > thr {
        return Err(Error::Validation("l is not anti-Hermitian".into()));
    }
    for xi in space.basis_ref(Subspace::MCentralizer) {
        if frob_inner(xi, l).abs() > thr {
            return Err(Error::Validation("l has a component along z_k(a)".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::random::{random_k, random_p};
    use crate::spaces::make_space;

    #[test]
    fn moment_map_basics() {
        let s = make_space(Kind::Aiii, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_p(&s, &mut rng);
        assert_eq!(frob(&moment_map(&s, &x, &x).unwrap().matrix), 0.0);
        let h1 = s.radial_matrix(&[2.0, 1.0]);
        let h2 = s.radial_matrix(&[0.5, 0.25]);
        assert!(frob(&moment_map(&s, &h1, &h2).unwrap().matrix) < 1e-15);
        let y = random_p(&s, &mut rng);
        let mu = moment_map(&s, &x, &y).unwrap().matrix;
        assert!(frob(&(&mu + mu.adjoint())) < 1e-12);
        // block diagonal: the off-diagonal blocks vanish
        for i in 0..3 {
            for j in 3..5 {
                assert!(mu[(i, j)].norm() < 1e-12 && mu[(j, i)].norm() < 1e-12);
            }
        }
        assert!(moment_map(&s, &linalg::unit(5, 0, 0, c(0.0, 1.0)), &x).is_err());
    }

    #[test]
    fn l_vanishes_for_trivial_inputs() {
        let s = make_space(Kind::Aiii, 2, 1).unwrap();
        let r = s.basis_ref(Subspace::APerp)[0].clone();
        let zero = SliceCoordinates { q: vec![1.0], p: vec![0.0], r: Cmat::zeros(3, 3) };
        assert_eq!(frob(&l_from_slice(&s, &zero).unwrap()), 0.0);
        let at0 = SliceCoordinates { q: vec![0.0], p: vec![0.0], r };
        assert_eq!(frob(&l_from_slice(&s, &at0).unwrap()), 0.0);
    }

    #[test]
    fn l_is_orthogonal_to_centralizer_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kind in Kind::ALL {
            let s = make_space(kind, 3, 3).unwrap();
            let x = random_p(&s, &mut rng);
            let y = random_p(&s, &mut rng);
            let (sl, _) = crate::slice::slice_of(&s, &x, &y).unwrap();
            let l = l_from_slice(&s, &sl).unwrap();
            check_reduced_l(&s, &l).unwrap();
            let r = r_from_l(&s, &sl.q, &l).unwrap();
            assert!(frob(&(&r - &sl.r)) < 1e-9 * frob(&sl.r).max(1.0), "{kind}");
        }
    }

    #[test]
    fn r_from_l_rejects_walls() {
        let s = make_space(Kind::Aiii, 3, 2).unwrap();
        assert!(matches!(r_from_l(&s, &[1.0, 1.0], &Cmat::zeros(5, 5)), Err(Error::Degenerate(_))));
        assert_eq!(frob(&r_from_l(&s, &[2.0, 1.0], &Cmat::zeros(5, 5)).unwrap()), 0.0);
    }

    #[test]
    fn a_q_zero_and_symmetric() {
        let s = make_space(Kind::Cii, 2, 2).unwrap();
        assert_eq!(a_q_matrix(&s, &[0.0, 0.0]).unwrap().matrix.norm(), 0.0);
        let a = a_q_matrix(&s, &[1.3, 0.4]).unwrap().matrix;
        assert!((&a - a.transpose()).norm() < 1e-10);
    }

    #[test]
    fn a_q_spectrum_is_linear_in_q_on_su21() {
        // one root space per f_1 and 2 f_1; eigenvalues scale with q_1
        let s = make_space(Kind::Aiii, 2, 1).unwrap();
        let (v1, _) = linalg::symmetric_eigen(&a_q_matrix(&s, &[1.0]).unwrap().matrix);
        let (v2, _) = linalg::symmetric_eigen(&a_q_matrix(&s, &[2.0]).unwrap().matrix);
        for (a, b) in v1.iter().zip(&v2) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
        // alpha(E) alpha(q) with E = 1, q = 1: roots f_1 (mult 2) and 2 f_1
        let mut want = [4.0, 1.0, 1.0];
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in v1.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{v1:?}");
        }
    }

    #[test]
    fn su21_density_ratio_is_eight() {
        let s = make_space(Kind::Aiii, 2, 1).unwrap();
        let r = jacobian_density(&s, &[2.0]) / jacobian_density(&s, &[1.0]);
        assert!((r - 8.0).abs() < 1e-12);
        assert_eq!(closed_form_density(&s, &[2.0]), 8.0);
    }

    #[test]
    fn bdi32_closed_form_example() {
        let s = make_space(Kind::Bdi, 3, 2).unwrap();
        assert_eq!(closed_form_density(&s, &[2.0, 1.0]), 6.0);
        assert_eq!(closed_form_density(&s, &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn wall_points_have_zero_jacobian() {
        let s = make_space(Kind::Ai, 0, 3).unwrap();
        assert!(jacobian_density(&s, &[1.0, 1.0, -2.0]) < 1e-12);
        assert!(jacobian_density(&s, &[1.0, 0.0, -1.0]) > 0.1);
    }

    #[test]
    fn density_constants() {
        let s = make_space(Kind::Aiii, 2, 1).unwrap();
        assert!((density_constant(&s).unwrap() - 2.0).abs() < 1e-12);
        let s = make_space(Kind::Ai, 0, 2).unwrap();
        assert!((density_constant(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corrupted_table_fails_calibration() {
        let s = make_space(Kind::Aiii, 3, 2).unwrap();
        let mut roots = spaces::restricted_roots(&s);
        roots[0].multiplicity += 1;
        assert!(matches!(density_constant_with_roots(&s, &roots), Err(Error::Consistency(_))));
    }

    #[test]
    fn moment_map_is_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in Kind::ALL {
            let s = make_space(kind, 3, 2).unwrap();
            let x1 = random_p(&s, &mut rng);
            let x2 = random_p(&s, &mut rng);
            let k = random_k(&s, &mut rng);
            let ad = |x: &Cmat| &k * x * k.adjoint();
            let lhs = moment_map(&s, &ad(&x1), &ad(&x2)).unwrap().matrix;
            let rhs = ad(&moment_map(&s, &x1, &x2).unwrap().matrix);
            assert!(frob(&(lhs - rhs)) < 1e-10 * frob(&x1) * frob(&x2), "{kind}");
        }
    }
}
