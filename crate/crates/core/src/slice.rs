//! Radial coordinates on `p0` and the exact slice for the residual
//! `M`-action.
//!
//! `radial_decompose` writes `X = k H(q) k^dagger` with `q` in the closed
//! chamber and `k` in `K`, using a factorization adapted to each class:
//!
//! | class       | factorization                                  |
//! |-------------|------------------------------------------------|
//! | aiii        | complex SVD of the off-diagonal block          |
//! | bdi         | real SVD, determinant signs pushed onto `M`    |
//! | cii         | SVD with symplectic pairing `v -> J conj(v)`   |
//! | ai, a2      | symmetric / Hermitian eigen-decomposition      |
//! | aii         | Hermitian eigen with quaternionic pairing      |
//! | diii        | Youla form of a skew-symmetric block           |
//! | ci          | Takagi form of a complex symmetric block       |

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c, frob, frob_inner, threshold, Cmat, Rmat, C64};
use crate::spaces::{self, AlgebraElement, Kind, SpaceDescriptor, Subspace};

/// Minimum `|alpha(q)|` for a point to count as strictly inside the chamber.
pub const WALL_TOL: f64 = 1e-8;

/// Radial coordinates (see [`SpaceDescriptor::coord_len`] for the length).
pub type RadialPoint = Vec<f64>;

/// Linear coordinates `(q, p, r)` on `a x a x a_perp`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceCoordinates {
    pub q: RadialPoint,
    pub p: Vec<f64>,
    pub r: Cmat,
}

/// Output of [`exact_slice_reduce`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSliceElement {
    pub coords: SliceCoordinates,
    /// Set when some reduction step had nothing to act on (a vanishing
    /// block vector or root component), so the phase there is arbitrary.
    pub non_generic: bool,
}

#[derive(Debug, Clone)]
pub struct RadialDecomposition {
    pub q: RadialPoint,
    pub k: Cmat,
}

/// Result of [`slice_contains`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SliceCheck {
    pub contained: bool,
    pub diagnostic: Option<String>,
}

impl SliceCheck {
    fn ok() -> Self {
        SliceCheck { contained: true, diagnostic: None }
    }
    fn fail(msg: String) -> Self {
        SliceCheck { contained: false, diagnostic: Some(msg) }
    }
}

pub fn embed_radial(space: &SpaceDescriptor, q: &[f64]) -> Result<AlgebraElement> {
    if q.len() != space.coord_len() {
        return Err(Error::Contract(format!(
            "{}: radial point has length {}, expected {}",
            space.label(),
            q.len(),
            space.coord_len()
        )));
    }
    if space.kind().traceless_coordinates() {
        let s: f64 = q.iter().sum();
        let scale = q.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        if s.abs() > 1e-12 * scale {
            return Err(Error::Validation(format!(
                "{}: radial coordinates must sum to zero (sum {s:.3e})",
                space.label()
            )));
        }
    }
    Ok(AlgebraElement::new(Subspace::A, space.radial_matrix(q)))
}

/// `Ad(k) H(q) = k H(q) k^dagger`.
pub fn reassemble(space: &SpaceDescriptor, q: &[f64], k: &Cmat) -> Cmat {
    k * space.radial_matrix(q) * k.adjoint()
}

fn block(x: &Cmat, r0: usize, c0: usize, rows: usize, cols: usize) -> Cmat {
    x.view((r0, c0), (rows, cols)).into_owned()
}

fn block_diag(a: &Cmat, b: &Cmat) -> Cmat {
    let (p, q) = (a.nrows(), b.nrows());
    let mut m = Cmat::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p)).copy_from(a);
    m.view_mut((p, p), (q, q)).copy_from(b);
    m
}

/// Multiply by a scalar phase so the determinant becomes one. Scalars act
/// trivially under `Ad`, so this never changes the reconstruction.
fn fix_det(k: Cmat) -> Cmat {
    let d = k.determinant();
    let n = k.nrows() as f64;
    k * C64::from_polar(1.0, -d.arg() / n)
}

fn real_part(x: &Cmat) -> Rmat {
    x.map(|z| z.re)
}

fn complexify(x: &Rmat) -> Cmat {
    x.map(|v| c(v, 0.0))
}

fn conj_vec(v: &DVector<C64>) -> DVector<C64> {
    v.map(|z| z.conj())
}

fn j_apply(v: &DVector<C64>) -> DVector<C64> {
    // J = [[0, -I], [I, 0]]
    let h = v.len() / 2;
    let mut out = DVector::zeros(v.len());
    for i in 0..h {
        out[i] = -v[h + i];
        out[h + i] = v[i];
    }
    out
}

/// Radial decomposition `X = k H(q) k^dagger`.
pub fn radial_decompose(space: &SpaceDescriptor, x: &Cmat) -> Result<RadialDecomposition> {
    space.check_in_p(x)?;
    let (m, n) = (space.m(), space.n());
    let out = match space.kind() {
        Kind::Aiii => {
            let b = block(x, 0, m, m, n);
            let (u, sigma, v) = linalg::svd(&b);
            let mut ul = Cmat::zeros(m, m);
            for j in 0..n {
                ul.set_column(m - 1 - j, &u.column(j));
            }
            for j in n..m {
                ul.set_column(j - n, &u.column(j));
            }
            let k = fix_det(block_diag(&ul, &v));
            RadialDecomposition { q: sigma, k }
        }
        Kind::Bdi => {
            let b = real_part(&block(x, 0, m, m, n));
            let (u, sigma, mut v) = linalg::real_svd(&b);
            let mut ul = Rmat::zeros(m, m);
            for j in 0..n {
                ul.set_column(m - 1 - j, &u.column(j));
            }
            for j in n..m {
                ul.set_column(j - n, &u.column(j));
            }
            let mut q = sigma;
            if v.determinant() < 0.0 {
                // flip the pair (u_n, v_n): keeps q_n, fixes det on the right
                let last = v.column(n - 1) * -1.0;
                v.set_column(n - 1, &last);
                let col = ul.column(m - n) * -1.0;
                ul.set_column(m - n, &col);
            }
            if ul.determinant() < 0.0 {
                if m > n {
                    let col = ul.column(0) * -1.0;
                    ul.set_column(0, &col);
                } else {
                    // m = n: the sign lands on q_n (D-type chamber)
                    let col = ul.column(0) * -1.0;
                    ul.set_column(0, &col);
                    q[n - 1] = -q[n - 1];
                }
            }
            let k = complexify(&block_diag_real(&ul, &v));
            RadialDecomposition { q, k }
        }
        Kind::Cii => decompose_cii(space, x),
        Kind::Ai => {
            let (vals, mut o) = linalg::symmetric_eigen(&real_part(x));
            if o.determinant() < 0.0 {
                let col = o.column(n - 1) * -1.0;
                o.set_column(n - 1, &col);
            }
            RadialDecomposition { q: vals, k: complexify(&o) }
        }
        Kind::A2 => {
            let (vals, u) = linalg::hermitian_eigen(x)?;
            RadialDecomposition { q: vals, k: fix_det(u) }
        }
        Kind::Aii => {
            let (_, u) = linalg::hermitian_eigen(x)?;
            let cands = (0..2 * n).map(|j| u.column(j).into_owned());
            let (firsts, seconds) =
                complete_pairs(linalg::paired_gram_schmidt(cands, n, 0.5, |v| j_apply(&conj_vec(v))), n, 2 * n);
            let mut k = Cmat::zeros(2 * n, 2 * n);
            let mut q = Vec::with_capacity(n);
            for j in 0..n {
                k.set_column(j, &firsts[j]);
                k.set_column(n + j, &seconds[j]);
                q.push((firsts[j].adjoint() * x * &firsts[j])[(0, 0)].re);
            }
            // restore mean zero exactly lost to rounding
            let mean = q.iter().sum::<f64>() / n as f64;
            q.iter_mut().for_each(|v| *v -= mean);
            RadialDecomposition { q, k }
        }
        Kind::Diii => decompose_diii(space, x),
        Kind::Ci => decompose_ci(space, x),
    };
    Ok(out)
}

fn block_diag_real(a: &Rmat, b: &Rmat) -> Rmat {
    let (p, q) = (a.nrows(), b.nrows());
    let mut m = Rmat::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p)).copy_from(a);
    m.view_mut((p, p), (q, q)).copy_from(b);
    m
}

/// Top up a paired Gram-Schmidt result with standard basis vectors when
/// the candidates ran out (degenerate spectra).
fn complete_pairs(
    (mut firsts, mut seconds): (Vec<DVector<C64>>, Vec<DVector<C64>>),
    pairs: usize,
    dim: usize,
) -> (Vec<DVector<C64>>, Vec<DVector<C64>>) {
    if firsts.len() < pairs {
        let done = firsts.len();
        let seeds = firsts.iter().chain(seconds.iter()).cloned().collect::<Vec<_>>();
        let cands = (0..dim).map(|i| {
            let mut e = DVector::zeros(dim);
            e[i] = c(1.0, 0.0);
            e
        });
        let (f2, s2) = linalg::paired_gram_schmidt(
            seeds.into_iter().chain(cands),
            pairs,
            1e-3,
            |v| j_apply(&conj_vec(v)),
        );
        firsts = f2;
        seconds = s2;
        debug_assert!(firsts.len() >= done);
    }
    (firsts, seconds)
}

fn decompose_cii(space: &SpaceDescriptor, x: &Cmat) -> RadialDecomposition {
    let (m, n) = (space.m(), space.n());
    let b = block(x, 0, 2 * m, 2 * m, 2 * n);
    let (_, _, v) = linalg::svd(&b);
    let cands = (0..2 * n).map(|j| v.column(j).into_owned());
    let (vf, vs) = complete_pairs(
        linalg::paired_gram_schmidt(cands, n, 0.5, |w| j_apply(&conj_vec(w))),
        n,
        2 * n,
    );
    let scale = frob(&b);
    let mut q = Vec::with_capacity(n);
    let mut us = Vec::with_capacity(n);
    for vj in &vf {
        let bv = &b * vj;
        let nrm = bv.norm();
        q.push(nrm);
        if nrm > threshold(scale, 1e-12) {
            us.push(bv / c(nrm, 0.0));
        }
    }
    let cands = us.into_iter().chain((0..2 * m).map(|i| {
        let mut e = DVector::zeros(2 * m);
        e[i] = c(1.0, 0.0);
        e
    }));
    let (uf, us2) = linalg::paired_gram_schmidt(cands, m, 1e-3, |w| j_apply(&conj_vec(w)));
    let mut ul = Cmat::zeros(2 * m, 2 * m);
    for j in 0..n {
        ul.set_column(m - 1 - j, &uf[j]);
        ul.set_column(2 * m - 1 - j, &us2[j]);
    }
    for t in n..m {
        ul.set_column(t - n, &uf[t]);
        ul.set_column(m + t - n, &us2[t]);
    }
    let mut ur = Cmat::zeros(2 * n, 2 * n);
    for j in 0..n {
        ur.set_column(j, &vf[j]);
        ur.set_column(n + j, &vs[j]);
    }
    RadialDecomposition { q, k: block_diag(&ul, &ur) }
}

fn decompose_diii(space: &SpaceDescriptor, x: &Cmat) -> RadialDecomposition {
    let n = space.n();
    let half = n / 2;
    let z = block(x, 0, n, n, n);
    let zz = &z * z.adjoint();
    let (vals, w) = linalg::hermitian_eigen(&zz).expect("Z Z^dagger is Hermitian");
    let top = vals.first().copied().unwrap_or(0.0);
    let live = vals.iter().filter(|&&l| l > threshold(top, 1e-24)).count() / 2;
    let partner = |u: &DVector<C64>| {
        let zu = -(&z * conj_vec(u));
        let nrm = zu.norm();
        zu / c(nrm, 0.0)
    };
    let cands = (0..n).map(|j| w.column(j).into_owned());
    let (f, s) = linalg::paired_gram_schmidt(cands, live.min(half), 0.5, partner);
    let mut cols: Vec<DVector<C64>> = Vec::with_capacity(n);
    let mut q = vec![0.0; half];
    for j in 0..f.len() {
        q[j] = (f[j].adjoint() * &z * conj_vec(&s[j]))[(0, 0)].re;
        cols.push(f[j].clone());
        cols.push(s[j].clone());
    }
    let cols = linalg::complete_orthonormal(cols, n);
    let u = linalg::columns_to_matrix(&cols, n);
    let ubar = u.map(|v| v.conj());
    RadialDecomposition { q, k: block_diag(&u, &ubar) }
}

fn decompose_ci(space: &SpaceDescriptor, x: &Cmat) -> RadialDecomposition {
    let n = space.n();
    let b = block(x, 0, n, n, n);
    let mut t = Rmat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = b[(i, j)];
            t[(i, j)] = z.re;
            t[(i, n + j)] = z.im;
            t[(n + i, j)] = z.im;
            t[(n + i, n + j)] = -z.re;
        }
    }
    let (vals, w) = linalg::symmetric_eigen(&t);
    // (x; y) has partner (-y; x) with eigenvalue of opposite sign
    let cands = (0..2 * n).map(|j| w.column(j).map(|v| c(v, 0.0)));
    let (f, _) = linalg::paired_gram_schmidt(cands, n, 0.5, |v| {
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            out[i] = -v[n + i];
            out[n + i] = v[i];
        }
        out
    });
    let mut u = Cmat::zeros(n, n);
    let mut q = Vec::with_capacity(n);
    for (j, wj) in f.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = c(wj[i].re, wj[n + i].re);
        }
        let tw = &t * wj.map(|z| z.re);
        q.push(tw.dot(&wj.map(|z| z.re)));
    }
    let _ = vals;
    let ubar = u.map(|v| v.conj());
    RadialDecomposition { q, k: block_diag(&u, &ubar) }
}

/// Split a phase-space point `(X, Y)` into slice coordinates: `X` is
/// brought to `H(q)` by `k`, and `k^dagger Y k` is split into its
/// `a`-part `H(p)` and `a_perp`-part `r`.
pub fn slice_of(space: &SpaceDescriptor, x: &Cmat, y: &Cmat) -> Result<(SliceCoordinates, Cmat)> {
    space.check_in_p(y)?;
    let dec = radial_decompose(space, x)?;
    let yk = dec.k.adjoint() * y * &dec.k;
    let ha = space.basis_of(Subspace::A).project(&yk);
    let mut p = space.radial_coords_of(&ha);
    if space.kind().traceless_coordinates() {
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        p.iter_mut().for_each(|v| *v -= mean);
    }
    let mut r = &yk - space.radial_matrix(&p);
    // Hermitian part only; removes the rounding-level anti-Hermitian residue
    r = (&r + r.adjoint()) * c(0.5, 0.0);
    Ok((SliceCoordinates { q: dec.q, p, r }, dec.k))
}

fn check_generic(space: &SpaceDescriptor, q: &[f64]) -> Result<()> {
    if let Some(v) = spaces::chamber_violation(space, q, WALL_TOL) {
        return Err(Error::Validation(format!("{}: q outside the chamber: {v}", space.label())));
    }
    let mr = spaces::min_root_value(space, q);
    if mr <= WALL_TOL {
        return Err(Error::Degenerate(format!(
            "{}: q lies on a chamber wall (min |alpha(q)| = {mr:.3e})",
            space.label()
        )));
    }
    Ok(())
}

fn check_a_perp(space: &SpaceDescriptor, r: &Cmat) -> Result<()> {
    space.check_in_p(r)?;
    let thr = threshold(frob(r), 1e-10);
    for (i, a) in space.basis_ref(Subspace::A).iter().enumerate() {
        let t = frob_inner(a, r);
        if t.abs() > thr {
            return Err(Error::Validation(format!(
                "{}: r has component {t:.3e} along a basis vector {i}",
                space.label()
            )));
        }
    }
    Ok(())
}

/// Row index `m - 1 - i` of the off-diagonal block: row `i` of the
/// reversed bottom square `C`.
fn c_entry(b: &Cmat, m: usize, i: usize, j: usize) -> C64 {
    b[(m - 1 - i, j)]
}

/// Components of the root spaces for `f_i - f_j` and `f_i + f_j` read off
/// the pair `C[i][j], C[j][i]`.
fn pair_components(b: &Cmat, m: usize, i: usize, j: usize) -> (C64, C64) {
    let w = c_entry(b, m, i, j);
    let z = c_entry(b, m, j, i);
    ((w + z.conj()) * 0.5, (w - z.conj()) * 0.5)
}

/// Unitary `Q` with `Q^dagger V` upper triangular and positive on the
/// diagonal (modified Gram-Schmidt, completed by standard basis vectors).
/// Returns whether some column was numerically dependent.
fn flag_basis(v: &Cmat, tol: f64) -> (Cmat, bool) {
    let (k, n) = v.shape();
    let mut cols: Vec<DVector<C64>> = Vec::with_capacity(k);
    let mut non_generic = false;
    for j in 0..n.min(k) {
        let mut w = v.column(j).into_owned();
        for q in &cols {
            let proj = q.dotc(&w);
            w -= q * proj;
        }
        let nrm = w.norm();
        if nrm > tol {
            cols.push(w / c(nrm, 0.0));
        } else {
            non_generic = true;
            let len = cols.len();
            cols = linalg::complete_orthonormal(cols, len + 1);
        }
    }
    let cols = linalg::complete_orthonormal(cols, k);
    (linalg::columns_to_matrix(&cols, k), non_generic)
}

/// Bring `r` into the exact slice by an element of `M = Z_K(a)`.
///
/// aiii: the `U(m-n)` factor of `M` makes the `f_i`-block vectors a
/// positive upper-triangular flag; the torus then rotates each simple
/// component `f_i - f_{i+1}` to the positive reals (falling back to
/// `f_i + f_{i+1}` when the former vanishes). Both components of a pair
/// see the same torus phase, and the `2 f_i` components are fixed by `M`.
///
/// bdi: the same recipe over the reals with signs in place of phases.
pub fn exact_slice_reduce(space: &SpaceDescriptor, s: &SliceCoordinates) -> Result<(ExactSliceElement, Cmat)> {
    match space.kind() {
        Kind::Aiii | Kind::Bdi => {}
        other => {
            return Err(Error::Unsupported(format!("exact slice reduction is implemented for aiii and bdi, not {other}")))
        }
    }
    check_generic(space, &s.q)?;
    check_a_perp(space, &s.r)?;
    let (m, n) = (space.m(), space.n());
    let kk = m - n;
    let b = block(&s.r, 0, m, m, n);
    let tol = threshold(frob(&s.r), 1e-10);
    let (mel, non_generic) = if space.kind() == Kind::Aiii {
        reduce_aiii(&b, m, n, kk, tol)
    } else {
        reduce_bdi(&b, m, n, kk, tol)
    };
    let r = &mel * &s.r * mel.adjoint();
    let r = (&r + r.adjoint()) * c(0.5, 0.0);
    let coords = SliceCoordinates { q: s.q.clone(), p: s.p.clone(), r };
    Ok((ExactSliceElement { coords, non_generic }, mel))
}

fn reduce_aiii(b: &Cmat, m: usize, n: usize, kk: usize, tol: f64) -> (Cmat, bool) {
    let top = block(b, 0, 0, kk, n);
    let (q, mut non_generic) = flag_basis(&top, tol);
    let mut phi = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let (zm, zp) = pair_components(b, m, i, i + 1);
        let step = if zm.norm() > tol {
            zm.arg()
        } else if zp.norm() > tol {
            zp.arg()
        } else {
            non_generic = true;
            0.0
        };
        phi[i + 1] = phi[i] + step;
    }
    let mut d = Cmat::identity(kk, kk);
    for i in 0..kk.min(n) {
        d[(i, i)] = C64::from_polar(1.0, phi[i]);
    }
    let mut ul = Cmat::zeros(m, m);
    ul.view_mut((0, 0), (kk, kk)).copy_from(&(d * q.adjoint()));
    for i in 0..n {
        ul[(m - 1 - i, m - 1 - i)] = C64::from_polar(1.0, phi[i]);
    }
    let ur = Cmat::from_diagonal(&DVector::from_iterator(n, phi.iter().map(|&t| C64::from_polar(1.0, t))));
    (fix_det(block_diag(&ul, &ur)), non_generic)
}

fn reduce_bdi(b: &Cmat, m: usize, n: usize, kk: usize, tol: f64) -> (Cmat, bool) {
    let mut non_generic = false;
    let mut eps = vec![1.0f64; n];
    for i in 0..n.saturating_sub(1) {
        let (zm, zp) = pair_components(b, m, i, i + 1);
        let s = if zm.re.abs() > tol {
            zm.re.signum()
        } else if zp.re.abs() > tol {
            zp.re.signum()
        } else {
            non_generic = true;
            1.0
        };
        eps[i + 1] = eps[i] * s;
    }
    if eps.iter().product::<f64>() < 0.0 {
        if n % 2 == 1 {
            eps.iter_mut().for_each(|e| *e = -*e);
        } else {
            // product of signs is pinned by SO(n); the last sign is an invariant
            eps[n - 1] = -eps[n - 1];
        }
    }
    let top = block(b, 0, 0, kk, n);
    let (q, ng) = flag_basis(&top, tol);
    non_generic |= ng;
    let q = q.map(|z| c(z.re, 0.0));
    let mut d = Rmat::identity(kk, kk);
    for i in 0..kk.min(n) {
        d[(i, i)] = eps[i];
    }
    let mut utop = d * real_part(&q).transpose();
    if kk > 0 && utop.determinant() < 0.0 {
        // flip an unused direction when there is one, else the last flag row
        let row = utop.row(kk - 1) * -1.0;
        utop.set_row(kk - 1, &row);
    }
    let mut ul = Rmat::zeros(m, m);
    ul.view_mut((0, 0), (kk, kk)).copy_from(&utop);
    for i in 0..n {
        ul[(m - 1 - i, m - 1 - i)] = eps[i];
    }
    let ur = Rmat::from_diagonal(&DVector::from_vec(eps));
    (complexify(&block_diag_real(&ul, &ur)), non_generic)
}

/// Membership test for the exact slice. For aiii and bdi this checks the
/// canonical pattern; for the other classes only `a_perp` membership.
pub fn slice_contains(space: &SpaceDescriptor, s: &SliceCoordinates) -> SliceCheck {
    if let Err(e) = check_a_perp(space, &s.r) {
        return SliceCheck::fail(e.to_string());
    }
    if !matches!(space.kind(), Kind::Aiii | Kind::Bdi) {
        return SliceCheck::ok();
    }
    let (m, n) = (space.m(), space.n());
    let kk = m - n;
    let b = block(&s.r, 0, m, m, n);
    let tol = threshold(frob(&s.r), 1e-10);
    let real = space.kind() == Kind::Bdi;
    if real {
        for i in 0..m {
            for j in 0..n {
                if b[(i, j)].im.abs() > tol {
                    return SliceCheck::fail(format!("entry B[{i}][{j}] is not real"));
                }
            }
        }
    }
    for j in 0..kk.min(n) {
        for i in j + 1..kk {
            if b[(i, j)].norm() > tol {
                return SliceCheck::fail(format!("flag entry B[{i}][{j}] below the diagonal is nonzero"));
            }
        }
        let d = b[(j, j)];
        if d.im.abs() > tol {
            return SliceCheck::fail(format!("flag entry B[{j}][{j}] is not real"));
        }
        let sign_free = real && kk <= n && j == kk - 1;
        if !sign_free && d.re < -tol {
            return SliceCheck::fail(format!("flag entry B[{j}][{j}] is negative"));
        }
    }
    for i in 0..n.saturating_sub(1) {
        if real && n % 2 == 0 && i == n - 2 {
            continue;
        }
        let (zm, zp) = pair_components(&b, m, i, i + 1);
        let (z, name) = if zm.norm() > tol { (zm, "f_i-f_{i+1}") } else { (zp, "f_i+f_{i+1}") };
        if z.norm() <= tol {
            continue;
        }
        if z.im.abs() > tol || z.re < -tol {
            return SliceCheck::fail(format!("simple component {name} at i={} is not positive real", i + 1));
        }
    }
    SliceCheck::ok()
}

/// Number of independent real constraints imposed by the aiii exact-slice
/// pattern: the flag conditions on the `f_i`-block vectors plus one phase
/// per simple pair.
pub fn exact_slice_constraint_count(space: &SpaceDescriptor) -> Result<usize> {
    if space.kind() != Kind::Aiii {
        return Err(Error::Unsupported("constraint count is defined for aiii".into()));
    }
    let (m, n) = (space.m(), space.n());
    let kk = m - n;
    let flag: usize = (1..=kk.min(n)).map(|j| 2 * kk - 2 * j + 1).sum();
    Ok(flag + n - 1)
}

/// Dimension of the `M`-orbit through `r`: the rank of `xi -> [xi, r]` on
/// the Lie algebra of `M`.
pub fn m_orbit_dimension(space: &SpaceDescriptor, r: &Cmat) -> usize {
    let basis = space.basis_ref(Subspace::MCentralizer);
    if basis.is_empty() {
        return 0;
    }
    let nn = space.ambient_dim();
    let mut t = Rmat::zeros(2 * nn * nn, basis.len());
    for (col, xi) in basis.iter().enumerate() {
        let br = linalg::bracket(xi, r);
        for (row, z) in br.iter().enumerate() {
            t[(2 * row, col)] = z.re;
            t[(2 * row + 1, col)] = z.im;
        }
    }
    let (_, sigma, _) = linalg::real_svd(&t);
    let top = sigma.first().copied().unwrap_or(0.0);
    sigma.iter().filter(|&&s| s > 1e-9 * top.max(1e-300)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::make_space;
    use crate::random::{random_k, random_p};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embed_su21_pattern() {
        let s = make_space(Kind::Aiii, 2, 1).unwrap();
        let h = embed_radial(&s, &[2.5]).unwrap().matrix;
        // B = (0, a1)^T sits in rows 0..2 of column 2
        assert_eq!(h[(1, 2)], c(2.5, 0.0));
        assert_eq!(h[(2, 1)], c(2.5, 0.0));
        assert_eq!(h[(0, 2)], c(0.0, 0.0));
        assert!(embed_radial(&s, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn embed_zero_is_zero() {
        for kind in Kind::ALL {
            let s = make_space(kind, 3, 3).unwrap();
            let h = embed_radial(&s, &vec![0.0; s.coord_len()]).unwrap().matrix;
            assert_eq!(frob(&h), 0.0, "{kind}");
        }
    }

    #[test]
    fn norm_constant_matches_embedding() {
        for kind in Kind::ALL {
            let s = make_space(kind, 3, 2).unwrap();
            let mut q: Vec<f64> = (0..s.coord_len()).map(|i| 1.0 + i as f64 * 0.7).collect();
            if kind.traceless_coordinates() {
                let mean = q.iter().sum::<f64>() / q.len() as f64;
                q.iter_mut().for_each(|v| *v -= mean);
            }
            let h = embed_radial(&s, &q).unwrap().matrix;
            let want = s.norm_constant() * q.iter().map(|v| v * v).sum::<f64>();
            assert!((linalg::tf(&h, &h) - want).abs() < 1e-12 * want, "{kind}");
        }
    }

    #[test]
    fn aiii_q_matches_singular_values() {
        let s = make_space(Kind::Aiii, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_p(&s, &mut rng);
        let dec = radial_decompose(&s, &x).unwrap();
        let (_, sigma, _) = linalg::svd(&block(&x, 0, 3, 3, 2));
        for (a, b) in dec.q.iter().zip(&sigma) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ai_q_matches_eigenvalues() {
        let s = make_space(Kind::Ai, 0, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_p(&s, &mut rng);
        let dec = radial_decompose(&s, &x).unwrap();
        let (vals, _) = linalg::hermitian_eigen(&x).unwrap();
        for (a, b) in dec.q.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_every_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in Kind::ALL {
            for (m, n) in [(2, 1), (3, 2), (3, 3), (4, 4), (4, 5)] {
                let Ok(s) = make_space(kind, m.max(n), n) else { continue };
                for _ in 0..5 {
                    let x = random_p(&s, &mut rng);
                    let dec = radial_decompose(&s, &x).unwrap();
                    let res = frob(&(reassemble(&s, &dec.q, &dec.k) - &x));
                    assert!(res <= 1e-9 * frob(&x), "{} residual {res:e}", s.label());
                    assert!(s.k_group_residual(&dec.k) < 1e-9, "{} k not in K", s.label());
                    assert!(spaces::chamber_violation(&s, &dec.q, 1e-10).is_none(), "{} {:?}", s.label(), dec.q);
                }
            }
        }
    }

    #[test]
    fn radial_points_are_fixed() {
        for kind in Kind::ALL {
            let s = make_space(kind, 3, 3).unwrap();
            let q = s.generic_point();
            let dec = radial_decompose(&s, &s.radial_matrix(&q)).unwrap();
            for (a, b) in dec.q.iter().zip(&q) {
                assert!((a - b).abs() < 1e-10, "{kind}: {:?} vs {q:?}", dec.q);
            }
        }
    }

    #[test]
    fn q_is_k_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for kind in Kind::ALL {
            let s = make_space(kind, 3, 2).unwrap();
            let x = random_p(&s, &mut rng);
            let k = random_k(&s, &mut rng);
            let q1 = radial_decompose(&s, &x).unwrap().q;
            let q2 = radial_decompose(&s, &(&k * &x * k.adjoint())).unwrap().q;
            for (a, b) in q1.iter().zip(&q2) {
                assert!((a - b).abs() < 1e-9, "{kind}");
            }
        }
    }

    #[test]
    fn non_p_input_is_rejected() {
        let s = make_space(Kind::Aiii, 2, 1).unwrap();
        let x = linalg::unit(3, 0, 1, c(1.0, 0.0));
        assert!(matches!(radial_decompose(&s, &x), Err(Error::Validation(_))));
    }

    fn random_slice(s: &SpaceDescriptor, rng: &mut ChaCha8Rng) -> SliceCoordinates {
        let x = random_p(s, rng);
        let y = random_p(s, rng);
        slice_of(s, &x, &y).unwrap().0
    }

    #[test]
    fn su31_flag_vector_becomes_norm() {
        let s = make_space(Kind::Aiii, 3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sl = random_slice(&s, &mut rng);
        let before = block(&sl.r, 0, 3, 2, 1);
        let (out, mel) = exact_slice_reduce(&s, &sl).unwrap();
        let after = block(&out.coords.r, 0, 3, 2, 1);
        assert!((after[(0, 0)].re - before.norm()).abs() < 1e-12);
        assert!(after[(0, 0)].im.abs() < 1e-12 && after[(1, 0)].norm() < 1e-12);
        assert!(s.k_group_residual(&mel) < 1e-12);
    }

    #[test]
    fn reduction_is_idempotent_and_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for (kind, m, n) in [(Kind::Aiii, 3, 2), (Kind::Aiii, 4, 2), (Kind::Bdi, 4, 2), (Kind::Bdi, 3, 3), (Kind::Bdi, 4, 3)] {
            let s = make_space(kind, m, n).unwrap();
            for _ in 0..10 {
                let sl = random_slice(&s, &mut rng);
                let (once, mel) = exact_slice_reduce(&s, &sl).unwrap();
                assert!((frob(&once.coords.r) - frob(&sl.r)).abs() < 1e-10 * frob(&sl.r));
                let h = s.radial_matrix(&sl.q);
                assert!(frob(&(&mel * &h - &h * &mel)) < 1e-12, "{} m does not centralize a", s.label());
                let (twice, _) = exact_slice_reduce(&s, &once.coords).unwrap();
                assert!(frob(&(&twice.coords.r - &once.coords.r)) < 1e-10, "{}", s.label());
                let check = slice_contains(&s, &once.coords);
                assert!(check.contained, "{}: {:?}", s.label(), check.diagnostic);
            }
        }
    }

    #[test]
    fn slice_contains_rejects_bad_entries() {
        let s = make_space(Kind::Aiii, 3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (out, _) = exact_slice_reduce(&s, &random_slice(&s, &mut rng)).unwrap();
        let mut r = out.coords.r.clone();
        let v = r[(0, 3)];
        r[(0, 3)] = -v;
        r[(3, 0)] = -v.conj();
        let bad = SliceCoordinates { r, ..out.coords.clone() };
        let check = slice_contains(&s, &bad);
        assert!(!check.contained);
        assert!(check.diagnostic.unwrap().contains("B[0][0]"));

        let s = make_space(Kind::Bdi, 3, 2).unwrap();
        let (out, _) = exact_slice_reduce(&s, &random_slice(&s, &mut rng)).unwrap();
        let mut r = out.coords.r.clone();
        r[(0, 3)] += c(0.0, 0.3);
        r[(3, 0)] += c(0.0, -0.3);
        let check = slice_contains(&s, &SliceCoordinates { r, ..out.coords });
        assert!(!check.contained);
    }

    #[test]
    fn wall_points_are_degenerate() {
        let s = make_space(Kind::Aiii, 3, 2).unwrap();
        let sl = SliceCoordinates { q: vec![1.0, 1.0], p: vec![0.0, 0.0], r: Cmat::zeros(5, 5) };
        assert!(matches!(exact_slice_reduce(&s, &sl), Err(Error::Degenerate(_))));
    }

    #[test]
    fn canonical_input_is_fixed() {
        let s = make_space(Kind::Aiii, 3, 1).unwrap();
        let mut r = Cmat::zeros(4, 4);
        r[(0, 3)] = c(0.8, 0.0);
        r[(3, 0)] = c(0.8, 0.0);
        let sl = SliceCoordinates { q: vec![1.0], p: vec![0.0], r: r.clone() };
        let (out, mel) = exact_slice_reduce(&s, &sl).unwrap();
        assert!(frob(&(out.coords.r - r)) < 1e-15);
        assert!(frob(&(mel.map(|z| z * mel[(0, 0)].conj()) - Cmat::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn constraint_counts() {
        let counts: Vec<usize> = [(2, 1), (3, 1), (3, 2)]
            .iter()
            .map(|&(m, n)| exact_slice_constraint_count(&make_space(Kind::Aiii, m, n).unwrap()).unwrap())
            .collect();
        assert_eq!(counts, vec![1, 3, 2]);
    }
}
