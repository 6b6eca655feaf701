//! Dense complex matrix primitives and the trace form.
//!
//! Everything downstream works with `N x N` complex matrices sitting inside
//! `sl(N, C)`. Tolerances are relative to the Frobenius norm with an
//! absolute floor of `1e-14`, so the zero matrix is handled uniformly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix, row/column indexed as usual.
pub type Cmat = DMatrix<C64>;

/// Dense real matrix.
pub type Rmat = DMatrix<f64>;

pub const ABS_FLOOR: f64 = 1e-14;

pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(n: usize) -> Cmat {
    Cmat::zeros(n, n)
}

pub fn identity(n: usize) -> Cmat {
    Cmat::identity(n, n)
}

/// `E_{ij}` scaled by `z`.
pub fn unit(n: usize, i: usize, j: usize, z: C64) -> Cmat {
    let mut m = zeros(n);
    m[(i, j)] = z;
    m
}

pub fn frob(x: &Cmat) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Residual threshold `tol * ||x||_F`, floored at `ABS_FLOOR`.
pub fn threshold(scale: f64, tol: f64) -> f64 {
    (tol * scale).max(ABS_FLOOR)
}

fn check_square_pair(x: &Cmat, y: &Cmat, what: &str) -> Result<()> {
    if !x.is_square() || !y.is_square() || x.nrows() != y.nrows() {
        return Err(Error::Contract(format!(
            "{what}: need square matrices of equal size, got {}x{} and {}x{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(())
}

/// `[X, Y] = XY - YX`.
pub fn commutator(x: &Cmat, y: &Cmat) -> Result<Cmat> {
    check_square_pair(x, y, "commutator")?;
    Ok(bracket(x, y))
}

/// Unchecked bracket for internal use where sizes are known to agree.
pub(crate) fn bracket(x: &Cmat, y: &Cmat) -> Cmat {
    x * y - y * x
}

/// `Re tr(XY)`.
pub fn trace_form(x: &Cmat, y: &Cmat) -> Result<f64> {
    check_square_pair(x, y, "trace_form")?;
    Ok(tf(x, y))
}

/// Unchecked `Re tr(XY)`, computed without forming the product. Terms are
/// added in index pairs `(i, k), (k, i)` so swapping the arguments gives a
/// bit-identical result.
pub(crate) fn tf(x: &Cmat, y: &Cmat) -> f64 {
    let n = x.nrows();
    let term = |i: usize, k: usize| {
        let (a, b) = (x[(i, k)], y[(k, i)]);
        a.re * b.re - a.im * b.im
    };
    let mut acc = 0.0;
    for i in 0..n {
        acc += term(i, i);
        for k in i + 1..n {
            acc += term(i, k) + term(k, i);
        }
    }
    acc
}

/// Real Frobenius inner product `Re tr(X Y^dagger)`.
pub(crate) fn frob_inner(x: &Cmat, y: &Cmat) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum()
}

pub fn dagger(x: &Cmat) -> Cmat {
    x.adjoint()
}

pub fn is_hermitian(x: &Cmat, tol: f64) -> bool {
    x.is_square() && frob(&(x - x.adjoint())) <= threshold(frob(x), tol)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
///
/// Returns `(lambda, U)` with `X = U diag(lambda) U^dagger`.
pub fn hermitian_eigen(x: &Cmat) -> Result<(Vec<f64>, Cmat)> {
    if !x.is_square() {
        return Err(Error::Contract("hermitian_eigen: matrix is not square".into()));
    }
    if !is_hermitian(x, 1e-10) {
        return Err(Error::Validation(
            "hermitian_eigen: input is not Hermitian within 1e-10 relative".into(),
        ));
    }
    if x.nrows() == 0 {
        return Ok((vec![], Cmat::zeros(0, 0)));
    }
    // symmetrize so the solver sees an exactly Hermitian matrix
    let h = (x + x.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let order = descending_order(eig.eigenvalues.as_slice());
    let n = x.nrows();
    let mut vecs = Cmat::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[src]);
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((vals, vecs))
}

/// Real symmetric eigen-decomposition, eigenvalues descending.
pub fn symmetric_eigen(x: &Rmat) -> (Vec<f64>, Rmat) {
    if x.nrows() == 0 {
        return (vec![], Rmat::zeros(0, 0));
    }
    let h = (x + x.transpose()) * 0.5;
    let eig = h.symmetric_eigen();
    let order = descending_order(eig.eigenvalues.as_slice());
    let n = x.nrows();
    let mut vecs = Rmat::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[src]);
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

fn descending_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    // stable sort keeps solver order on ties
    idx.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap_or(std::cmp::Ordering::Equal));
    idx
}

/// Full singular value decomposition `X = U Sigma V^dagger`.
///
/// `U` is `rows x rows`, `V` is `cols x cols`, both unitary; `sigma` has
/// `min(rows, cols)` entries in descending order.
pub fn svd(x: &Cmat) -> (Cmat, Vec<f64>, Cmat) {
    let (r, cdim) = x.shape();
    let k = r.min(cdim);
    if k == 0 {
        return (identity(r), vec![], identity(cdim));
    }
    let s = x.clone().svd(true, true);
    let u = s.u.expect("svd computed with u");
    let v = s.v_t.expect("svd computed with v_t").adjoint();
    let order = descending_order(s.singular_values.as_slice());
    let mut uu: Vec<DVector<C64>> = Vec::with_capacity(r);
    let mut vv: Vec<DVector<C64>> = Vec::with_capacity(cdim);
    let mut sigma = Vec::with_capacity(k);
    for &j in &order {
        sigma.push(s.singular_values[j]);
        uu.push(u.column(j).into_owned());
        vv.push(v.column(j).into_owned());
    }
    let uu = complete_orthonormal(uu, r);
    let vv = complete_orthonormal(vv, cdim);
    (columns_to_matrix(&uu, r), sigma, columns_to_matrix(&vv, cdim))
}

/// Real SVD with full orthogonal factors, singular values descending.
pub fn real_svd(x: &Rmat) -> (Rmat, Vec<f64>, Rmat) {
    let (r, cdim) = x.shape();
    let k = r.min(cdim);
    if k == 0 {
        return (Rmat::identity(r, r), vec![], Rmat::identity(cdim, cdim));
    }
    let s = x.clone().svd(true, true);
    let u = s.u.expect("svd computed with u");
    let v = s.v_t.expect("svd computed with v_t").transpose();
    let order = descending_order(s.singular_values.as_slice());
    let mut uu: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut vv: Vec<DVector<f64>> = Vec::with_capacity(cdim);
    let mut sigma = Vec::with_capacity(k);
    for &j in &order {
        sigma.push(s.singular_values[j]);
        uu.push(u.column(j).into_owned());
        vv.push(v.column(j).into_owned());
    }
    let uu = complete_orthonormal_real(uu, r);
    let vv = complete_orthonormal_real(vv, cdim);
    let mut um = Rmat::zeros(r, r);
    for (j, col) in uu.iter().enumerate() {
        um.set_column(j, col);
    }
    let mut vm = Rmat::zeros(cdim, cdim);
    for (j, col) in vv.iter().enumerate() {
        vm.set_column(j, col);
    }
    (um, sigma, vm)
}

pub(crate) fn columns_to_matrix(cols: &[DVector<C64>], rows: usize) -> Cmat {
    let mut m = Cmat::zeros(rows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        m.set_column(j, col);
    }
    m
}

/// Extend an orthonormal family to a basis of `C^dim` by Gram-Schmidt over
/// the standard basis vectors.
pub(crate) fn complete_orthonormal(mut cols: Vec<DVector<C64>>, dim: usize) -> Vec<DVector<C64>> {
    let mut e = 0;
    while cols.len() < dim && e < dim {
        let mut v = DVector::<C64>::zeros(dim);
        v[e] = c(1.0, 0.0);
        e += 1;
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let nrm = v.norm();
        if nrm > 1e-6 {
            cols.push(v / c(nrm, 0.0));
        }
    }
    cols
}

pub(crate) fn complete_orthonormal_real(mut cols: Vec<DVector<f64>>, dim: usize) -> Vec<DVector<f64>> {
    let mut e = 0;
    while cols.len() < dim && e < dim {
        let mut v = DVector::<f64>::zeros(dim);
        v[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dot(&v);
                v -= q * proj;
            }
        }
        let nrm = v.norm();
        if nrm > 1e-6 {
            cols.push(v / nrm);
        }
    }
    cols
}

/// Gram-Schmidt over `candidates` that also adds `partner(v)` for every
/// accepted `v`. Used for quaternionic and Takagi-type factorizations where
/// basis vectors come in structured pairs. Stops once `pairs` vectors are
/// accepted; candidates whose residual falls below `accept` are skipped.
pub(crate) fn paired_gram_schmidt<F>(
    candidates: impl IntoIterator<Item = DVector<C64>>,
    pairs: usize,
    accept: f64,
    partner: F,
) -> (Vec<DVector<C64>>, Vec<DVector<C64>>)
where
    F: Fn(&DVector<C64>) -> DVector<C64>,
{
    let mut firsts: Vec<DVector<C64>> = Vec::with_capacity(pairs);
    let mut seconds: Vec<DVector<C64>> = Vec::with_capacity(pairs);
    for cand in candidates {
        if firsts.len() == pairs {
            break;
        }
        let mut v = cand;
        for _ in 0..2 {
            for q in firsts.iter().chain(seconds.iter()) {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let nrm = v.norm();
        if nrm <= accept {
            continue;
        }
        let v = v / c(nrm, 0.0);
        let mut w = partner(&v);
        // partner is orthogonal in exact arithmetic; clean up rounding
        for q in firsts.iter().chain(seconds.iter()).chain(std::iter::once(&v)) {
            let proj = q.dotc(&w);
            w -= q * proj;
        }
        let wn = w.norm();
        let w = w / c(wn, 0.0);
        firsts.push(v);
        seconds.push(w);
    }
    (firsts, seconds)
}

/// `exp(A)` for an anti-Hermitian `A`, via the eigen-decomposition of `iA`.
pub fn unitary_exp(a: &Cmat) -> Result<Cmat> {
    let h = a * c(0.0, 1.0);
    let (vals, u) = hermitian_eigen(&h)?;
    let n = a.nrows();
    let mut d = Cmat::zeros(n, n);
    for (i, &l) in vals.iter().enumerate() {
        // exp(A) = exp(-i H)
        d[(i, i)] = C64::from_polar(1.0, -l);
    }
    Ok(&u * d * u.adjoint())
}

/// `|det|` of a real square matrix via pivoted LU.
pub fn abs_det(m: &Rmat) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant().abs()
}

/// Solve `m x = b` with pivoted LU; `None` when `m` is singular.
pub fn solve(m: &Rmat, b: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().lu().solve(b)
}

/// Repo-wide matrix JSON layout: `{"rows", "cols", "data": [[re, im], ...]}`,
/// row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &Cmat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<Cmat> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Validation("matrix json: empty dimensions".into()));
        }
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Validation(format!(
                "matrix json: {} entries for a {}x{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("matrix json: non-finite entry".into()));
        }
        Ok(Cmat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            c(re, im)
        }))
    }
}

pub fn matrix_to_json(m: &Cmat) -> String {
    serde_json::to_string(&MatrixJson::from_matrix(m)).expect("finite matrix serializes")
}

pub fn matrix_from_json(s: &str) -> Result<Cmat> {
    let mj: MatrixJson =
        serde_json::from_str(s).map_err(|e| Error::Validation(format!("matrix json: {e}")))?;
    mj.to_matrix()
}
