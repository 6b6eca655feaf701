//! Registry of the classical noncompact symmetric spaces handled by the
//! crate, together with their Cartan data.
//!
//! Every class is realised as a real form `g0` of `sl(N, C)` cut out by a
//! small set of commuting real-linear involutions (plus tracelessness where
//! needed). The Cartan involution is `X -> -X^dagger`, so `k0` is the
//! anti-Hermitian part and `p0` the Hermitian part of `g0`.
//!
//! Bases are built once per descriptor (modified Gram-Schmidt over
//! projected elementary matrices, lexicographic in the matrix index) and
//! shared between clones.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, bracket, c, frob, frob_inner, threshold, Cmat, Rmat};

/// Membership tolerance for `g0`, `k0`, `p0` (relative).
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// The eight classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// `SU(m,n) / S(U(m) x U(n))`
    Aiii,
    /// `SO(m,n)_0 / SO(m) x SO(n)`
    Bdi,
    /// `Sp(m,n) / Sp(m) x Sp(n)`, complex size `2m + 2n`
    Cii,
    /// `SL(n,R) / SO(n)`
    Ai,
    /// `SL(n,H) / Sp(n)`
    Aii,
    /// `SO*(2n) / U(n)`
    Diii,
    /// `Sp(n,R) / U(n)`
    Ci,
    /// `SL(n,C) / SU(n)`, the type II space of Hermitian matrices
    A2,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Aiii,
        Kind::Bdi,
        Kind::Cii,
        Kind::Ai,
        Kind::Aii,
        Kind::Diii,
        Kind::Ci,
        Kind::A2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Aiii => "aiii",
            Kind::Bdi => "bdi",
            Kind::Cii => "cii",
            Kind::Ai => "ai",
            Kind::Aii => "aii",
            Kind::Diii => "diii",
            Kind::Ci => "ci",
            Kind::A2 => "a2",
        }
    }

    pub fn two_parameter(self) -> bool {
        matches!(self, Kind::Aiii | Kind::Bdi | Kind::Cii)
    }

    /// Classes whose `a` is a traceless diagonal; radial coordinates then
    /// carry one redundant entry (they sum to zero).
    pub fn traceless_coordinates(self) -> bool {
        matches!(self, Kind::Ai | Kind::Aii | Kind::A2)
    }

    pub fn description(self) -> &'static str {
        match self {
            Kind::Aiii => "SU(m,n)/S(U(m)xU(n))",
            Kind::Bdi => "SO(m,n)/SO(m)xSO(n)",
            Kind::Cii => "Sp(m,n)/Sp(m)xSp(n)",
            Kind::Ai => "SL(n,R)/SO(n)",
            Kind::Aii => "SL(n,H)/Sp(n)",
            Kind::Diii => "SO*(2n)/U(n)",
            Kind::Ci => "Sp(n,R)/U(n)",
            Kind::A2 => "SL(n,C)/SU(n)",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown class '{s}'")))
    }
}

/// Which subspace an element lives in, also used as the basis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    G,
    K,
    P,
    A,
    APerp,
    /// Lie algebra of `M = Z_K(a)`.
    MCentralizer,
    /// Orthogonal complement of `z_k(a)` in `k`.
    ZkPerp,
}

impl FromStr for Subspace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "g" => Subspace::G,
            "k" => Subspace::K,
            "p" => Subspace::P,
            "a" => Subspace::A,
            "a_perp" => Subspace::APerp,
            "m_centralizer" => Subspace::MCentralizer,
            "zk_perp" => Subspace::ZkPerp,
            _ => return Err(Error::Validation(format!("unknown subspace selector '{s}'"))),
        })
    }
}

/// A matrix together with the subspace it claims to inhabit.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub subspace: Subspace,
    pub matrix: Cmat,
}

impl AlgebraElement {
    pub fn new(subspace: Subspace, matrix: Cmat) -> Self {
        AlgebraElement { subspace, matrix }
    }
}

/// Orthonormal basis of a subspace: positive definite under `trace_form`
/// on the `p` side, under `-trace_form` on the `k` side.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    pub which: Subspace,
    pub vectors: Vec<Cmat>,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Real coordinates of `x` (assumed to lie in the span).
    pub fn coords(&self, x: &Cmat) -> DVector<f64> {
        DVector::from_iterator(self.vectors.len(), self.vectors.iter().map(|b| frob_inner(b, x)))
    }

    pub fn element(&self, coords: &DVector<f64>) -> Cmat {
        let n = self.vectors.first().map_or(0, |b| b.nrows());
        let mut out = Cmat::zeros(n, n);
        for (b, &t) in self.vectors.iter().zip(coords.iter()) {
            out += b * c(t, 0.0);
        }
        out
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, x: &Cmat) -> Cmat {
        self.element(&self.coords(x))
    }
}

/// Restricted root `alpha(q) = sum coeffs_i q_i` with its real multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RestrictedRoot {
    pub coeffs: Vec<i32>,
    pub multiplicity: usize,
}

impl RestrictedRoot {
    pub fn eval(&self, q: &[f64]) -> f64 {
        self.coeffs.iter().zip(q).map(|(&a, &x)| a as f64 * x).sum()
    }

    /// Human readable label such as `f1-f2` or `2f1`.
    pub fn label(&self) -> String {
        let mut s = String::new();
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if a < 0 {
                s.push('-');
            } else if !s.is_empty() {
                s.push('+');
            }
            if a.abs() != 1 {
                s.push_str(&a.abs().to_string());
            }
            s.push_str(&format!("f{}", i + 1));
        }
        s
    }
}

/// Defining relations of `g0`, each a real-linear involution `sigma` with
/// `g0 = { X : sigma(X) = X }`, plus tracelessness.
#[derive(Debug, Clone)]
enum Relation {
    /// `X = -I X^dagger I` for a signature matrix `I`.
    IndefiniteUnitary(Cmat),
    /// `X = conj(X)`.
    Real,
    /// `X = J conj(X) J^-1` for `J` with `J^2 = -1`.
    Quaternionic(Cmat),
    /// `X = -S X^T S` for a real symmetric `S` with `S^2 = 1`.
    Orthogonal(Cmat),
    /// `X = J X^T J` for a real `J` with `J^2 = -1`, i.e. `X^T J + J X = 0`.
    Symplectic(Cmat),
    Traceless,
}

impl Relation {
    fn name(&self) -> &'static str {
        match self {
            Relation::IndefiniteUnitary(_) => "X^dagger I + I X = 0 (indefinite unitary)",
            Relation::Real => "X = conj(X) (real)",
            Relation::Quaternionic(_) => "X J = J conj(X) (quaternionic)",
            Relation::Orthogonal(_) => "X^T S + S X = 0 (complex orthogonal)",
            Relation::Symplectic(_) => "X^T J + J X = 0 (complex symplectic)",
            Relation::Traceless => "tr X = 0",
        }
    }

    fn apply(&self, x: &Cmat) -> Cmat {
        match self {
            Relation::IndefiniteUnitary(i) => -(i * x.adjoint() * i),
            Relation::Real => x.map(|z| z.conj()),
            Relation::Quaternionic(j) => -(j * x.map(|z| z.conj()) * j),
            Relation::Orthogonal(s) => -(s * x.transpose() * s),
            Relation::Symplectic(j) => j * x.transpose() * j,
            Relation::Traceless => x.clone(),
        }
    }

    /// Residual of the corresponding group-level relation for `g` in `K`.
    fn group_residual(&self, g: &Cmat) -> f64 {
        match self {
            Relation::IndefiniteUnitary(i) => frob(&(g.adjoint() * i * g - i)),
            Relation::Real => g.iter().map(|z| z.im * z.im).sum::<f64>().sqrt(),
            Relation::Quaternionic(j) => frob(&(g * j - j * g.map(|z| z.conj()))),
            Relation::Orthogonal(s) => frob(&(g.transpose() * s * g - s)),
            Relation::Symplectic(j) => frob(&(g.transpose() * j * g - j)),
            Relation::Traceless => 0.0,
        }
    }
}

fn signature(p: usize, q: usize) -> Cmat {
    let mut m = Cmat::zeros(p + q, p + q);
    for i in 0..p {
        m[(i, i)] = c(1.0, 0.0);
    }
    for i in p..p + q {
        m[(i, i)] = c(-1.0, 0.0);
    }
    m
}

/// `[[0, -I], [I, 0]]` of size `2k`.
pub(crate) fn j_matrix(k: usize) -> Cmat {
    let mut m = Cmat::zeros(2 * k, 2 * k);
    for i in 0..k {
        m[(i, k + i)] = c(-1.0, 0.0);
        m[(k + i, i)] = c(1.0, 0.0);
    }
    m
}

fn swap_matrix(k: usize) -> Cmat {
    let mut m = Cmat::zeros(2 * k, 2 * k);
    for i in 0..k {
        m[(i, k + i)] = c(1.0, 0.0);
        m[(k + i, i)] = c(1.0, 0.0);
    }
    m
}

fn block_diag(a: &Cmat, b: &Cmat) -> Cmat {
    let (p, q) = (a.nrows(), b.nrows());
    let mut m = Cmat::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p)).copy_from(a);
    m.view_mut((p, p), (q, q)).copy_from(b);
    m
}

#[derive(Debug)]
struct Bases {
    k: Vec<Cmat>,
    p: Vec<Cmat>,
    a: Vec<Cmat>,
    a_perp: Vec<Cmat>,
    m: Vec<Cmat>,
    zk_perp: Vec<Cmat>,
}

/// One symmetric-space class with its parameters.
#[derive(Clone)]
pub struct SpaceDescriptor {
    kind: Kind,
    m: usize,
    n: usize,
    dim: usize,
    real_rank: usize,
    relations: Arc<Vec<Relation>>,
    bases: Arc<OnceLock<Bases>>,
    density_constant: Arc<OnceLock<Result<f64>>>,
}

impl fmt::Debug for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceDescriptor")
            .field("kind", &self.kind)
            .field("m", &self.m)
            .field("n", &self.n)
            .field("dim", &self.dim)
            .field("real_rank", &self.real_rank)
            .finish()
    }
}

impl PartialEq for SpaceDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.m == other.m && self.n == other.n
    }
}

/// Summary row used by `spaces list`.
#[derive(Debug, Clone, Serialize)]
pub struct SpaceSummary {
    pub kind: Kind,
    pub name: &'static str,
    pub m: usize,
    pub n: usize,
    pub ambient_dim: usize,
    pub dim_p: usize,
    pub real_rank: usize,
    pub dim_m: usize,
    pub roots: Vec<RootSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootSummary {
    pub root: String,
    pub coeffs: Vec<i32>,
    pub multiplicity: usize,
}

/// Validate parameters and build a descriptor. For single-parameter kinds
/// `m` is ignored and recorded as 0.
pub fn make_space(kind: Kind, m: usize, n: usize) -> Result<SpaceDescriptor> {
    if n < 1 {
        return Err(Error::Validation(format!("{kind}: n must be at least 1")));
    }
    let m = if kind.two_parameter() {
        if m < n {
            return Err(Error::Validation(format!("{kind}: need m >= n, got m={m}, n={n}")));
        }
        m
    } else {
        0
    };
    let (dim, real_rank, relations) = match kind {
        Kind::Aiii => (m + n, n, vec![Relation::IndefiniteUnitary(signature(m, n)), Relation::Traceless]),
        Kind::Bdi => (m + n, n, vec![Relation::Real, Relation::IndefiniteUnitary(signature(m, n))]),
        Kind::Cii => (
            2 * m + 2 * n,
            n,
            vec![
                Relation::IndefiniteUnitary(signature(2 * m, 2 * n)),
                Relation::Quaternionic(block_diag(&j_matrix(m), &j_matrix(n))),
            ],
        ),
        Kind::Ai | Kind::Aii | Kind::A2 => {
            if n < 2 {
                return Err(Error::Validation(format!("{kind}: need n >= 2 for positive real rank")));
            }
            let rels = match kind {
                Kind::Ai => vec![Relation::Real, Relation::Traceless],
                Kind::Aii => vec![Relation::Quaternionic(j_matrix(n)), Relation::Traceless],
                _ => vec![Relation::Traceless],
            };
            let dim = if kind == Kind::Aii { 2 * n } else { n };
            (dim, n - 1, rels)
        }
        Kind::Diii => {
            if n < 2 {
                return Err(Error::Validation("diii: need n >= 2 for positive real rank".into()));
            }
            (2 * n, n / 2, vec![Relation::Quaternionic(j_matrix(n)), Relation::Orthogonal(swap_matrix(n))])
        }
        Kind::Ci => (
            2 * n,
            n,
            vec![Relation::IndefiniteUnitary(signature(n, n)), Relation::Symplectic(j_matrix(n))],
        ),
    };
    Ok(SpaceDescriptor {
        kind,
        m,
        n,
        dim,
        real_rank,
        relations: Arc::new(relations),
        bases: Arc::new(OnceLock::new()),
        density_constant: Arc::new(OnceLock::new()),
    })
}

impl SpaceDescriptor {
    pub fn kind(&self) -> Kind {
        self.kind
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    /// Ambient matrix size `N`.
    pub fn ambient_dim(&self) -> usize {
        self.dim
    }
    pub fn real_rank(&self) -> usize {
        self.real_rank
    }

    /// Length of a radial coordinate vector. Equals the real rank except
    /// for the traceless classes, where all `n` diagonal entries are kept.
    pub fn coord_len(&self) -> usize {
        if self.kind.traceless_coordinates() {
            self.n
        } else {
            self.real_rank
        }
    }

    pub fn label(&self) -> String {
        if self.kind.two_parameter() {
            format!("{}({},{})", self.kind, self.m, self.n)
        } else {
            format!("{}({})", self.kind, self.n)
        }
    }

    /// `dim p0` from class theory.
    pub fn theoretical_dim_p(&self) -> usize {
        let (m, n) = (self.m, self.n);
        match self.kind {
            Kind::Aiii => 2 * m * n,
            Kind::Bdi => m * n,
            Kind::Cii => 4 * m * n,
            Kind::Ai => n * (n + 1) / 2 - 1,
            Kind::Aii => 2 * n * n - n - 1,
            Kind::Diii => n * (n - 1),
            Kind::Ci => n * (n + 1),
            Kind::A2 => n * n - 1,
        }
    }

    /// `dim k0` from class theory.
    pub fn theoretical_dim_k(&self) -> usize {
        let (m, n) = (self.m, self.n);
        match self.kind {
            Kind::Aiii => m * m + n * n - 1,
            Kind::Bdi => m * (m - 1) / 2 + n * (n - 1) / 2,
            Kind::Cii => m * (2 * m + 1) + n * (2 * n + 1),
            Kind::Ai => n * (n - 1) / 2,
            Kind::Aii => n * (2 * n + 1),
            Kind::Diii => n * n,
            Kind::Ci => n * n,
            Kind::A2 => n * n - 1,
        }
    }

    /// Cartan-involution splitting constant: `trace_form(H(q), H(q)) = c |q|^2`.
    pub fn norm_constant(&self) -> f64 {
        match self.kind {
            Kind::Aiii | Kind::Bdi | Kind::Ci | Kind::Aii => 2.0,
            Kind::Cii | Kind::Diii => 4.0,
            Kind::Ai | Kind::A2 => 1.0,
        }
    }

    pub fn summary(&self) -> SpaceSummary {
        SpaceSummary {
            kind: self.kind,
            name: self.kind.description(),
            m: self.m,
            n: self.n,
            ambient_dim: self.dim,
            dim_p: self.theoretical_dim_p(),
            real_rank: self.real_rank,
            dim_m: self.basis_of(Subspace::MCentralizer).dim(),
            roots: restricted_roots(self)
                .into_iter()
                .map(|r| RootSummary { root: r.label(), coeffs: r.coeffs.clone(), multiplicity: r.multiplicity })
                .collect(),
        }
    }

    /// Checks every defining relation of `g0`; the error names the first
    /// one violated.
    pub fn check_in_g(&self, x: &Cmat) -> Result<()> {
        if !x.is_square() || x.nrows() != self.dim {
            return Err(Error::Contract(format!(
                "{}: expected {}x{} matrix, got {}x{}",
                self.label(),
                self.dim,
                self.dim,
                x.nrows(),
                x.ncols()
            )));
        }
        let thr = threshold(frob(x), MEMBERSHIP_TOL);
        for rel in self.relations.iter() {
            let res = match rel {
                Relation::Traceless => x.trace().norm(),
                other => frob(&(other.apply(x) - x)),
            };
            if res > thr {
                return Err(Error::Validation(format!(
                    "{}: element violates {} (residual {res:.3e})",
                    self.label(),
                    rel.name()
                )));
            }
        }
        Ok(())
    }

    pub fn check_in_p(&self, x: &Cmat) -> Result<()> {
        self.check_in_g(x)?;
        if frob(&(x - x.adjoint())) > threshold(frob(x), MEMBERSHIP_TOL) {
            return Err(Error::Validation(format!("{}: element is not Hermitian, so not in p", self.label())));
        }
        Ok(())
    }

    pub fn check_in_k(&self, x: &Cmat) -> Result<()> {
        self.check_in_g(x)?;
        if frob(&(x + x.adjoint())) > threshold(frob(x), MEMBERSHIP_TOL) {
            return Err(Error::Validation(format!("{}: element is not anti-Hermitian, so not in k", self.label())));
        }
        Ok(())
    }

    /// Largest residual among the group-level relations defining `K`
    /// (unitarity, determinant one, and the class relations).
    pub fn k_group_residual(&self, g: &Cmat) -> f64 {
        let n = self.dim;
        let mut worst = frob(&(g.adjoint() * g - Cmat::identity(n, n)));
        worst = worst.max((g.determinant() - c(1.0, 0.0)).norm());
        for rel in self.relations.iter() {
            worst = worst.max(rel.group_residual(g));
        }
        worst
    }

    /// Orthogonal projector onto `g0` (w.r.t. `Re tr(X Y^dagger)`).
    pub(crate) fn project_g(&self, x: &Cmat) -> Cmat {
        let mut y = x.clone();
        for rel in self.relations.iter() {
            if !matches!(rel, Relation::Traceless) {
                y = (&y + rel.apply(&y)) * c(0.5, 0.0);
            }
        }
        if self.relations.iter().any(|r| matches!(r, Relation::Traceless)) {
            let t = y.trace() / c(self.dim as f64, 0.0);
            for i in 0..self.dim {
                y[(i, i)] -= t;
            }
        }
        y
    }

    pub(crate) fn density_constant_cell(&self) -> &OnceLock<Result<f64>> {
        &self.density_constant
    }

    fn bases(&self) -> &Bases {
        self.bases.get_or_init(|| build_bases(self))
    }

    /// Orthonormal basis for a subspace. `G` returns the `k` basis followed
    /// by the `p` basis.
    pub fn basis_of(&self, which: Subspace) -> SubspaceBasis {
        let b = self.bases();
        let vectors = match which {
            Subspace::G => b.k.iter().chain(b.p.iter()).cloned().collect(),
            Subspace::K => b.k.clone(),
            Subspace::P => b.p.clone(),
            Subspace::A => b.a.clone(),
            Subspace::APerp => b.a_perp.clone(),
            Subspace::MCentralizer => b.m.clone(),
            Subspace::ZkPerp => b.zk_perp.clone(),
        };
        SubspaceBasis { which, vectors }
    }

    pub(crate) fn basis_ref(&self, which: Subspace) -> &[Cmat] {
        let b = self.bases();
        match which {
            Subspace::K => &b.k,
            Subspace::P => &b.p,
            Subspace::A => &b.a,
            Subspace::APerp => &b.a_perp,
            Subspace::MCentralizer => &b.m,
            Subspace::ZkPerp => &b.zk_perp,
            Subspace::G => panic!("basis_ref: G has no single stored basis"),
        }
    }

    /// The radial element `H(q)` in `a`, without validating `q`.
    pub(crate) fn radial_matrix(&self, q: &[f64]) -> Cmat {
        let nn = self.dim;
        let (m, n) = (self.m, self.n);
        let mut x = Cmat::zeros(nn, nn);
        match self.kind {
            Kind::Aiii | Kind::Bdi => {
                for (j, &v) in q.iter().enumerate() {
                    let (r, col) = (m - 1 - j, m + j);
                    x[(r, col)] = c(v, 0.0);
                    x[(col, r)] = c(v, 0.0);
                }
            }
            Kind::Cii => {
                let off = 2 * m;
                for (j, &v) in q.iter().enumerate() {
                    for (r, col) in [(m - 1 - j, j), (2 * m - 1 - j, n + j)] {
                        x[(r, off + col)] = c(v, 0.0);
                        x[(off + col, r)] = c(v, 0.0);
                    }
                }
            }
            Kind::Ai | Kind::A2 => {
                for (j, &v) in q.iter().enumerate() {
                    x[(j, j)] = c(v, 0.0);
                }
            }
            Kind::Aii => {
                for (j, &v) in q.iter().enumerate() {
                    x[(j, j)] = c(v, 0.0);
                    x[(n + j, n + j)] = c(v, 0.0);
                }
            }
            Kind::Diii => {
                // X = [[0, Z], [-conj(Z), 0]] with Z block-diagonal 2x2 rotations
                for (j, &v) in q.iter().enumerate() {
                    let (a, b) = (2 * j, 2 * j + 1);
                    x[(a, n + b)] = c(v, 0.0);
                    x[(b, n + a)] = c(-v, 0.0);
                    x[(n + a, b)] = c(-v, 0.0);
                    x[(n + b, a)] = c(v, 0.0);
                }
            }
            Kind::Ci => {
                for (j, &v) in q.iter().enumerate() {
                    x[(j, n + j)] = c(v, 0.0);
                    x[(n + j, j)] = c(v, 0.0);
                }
            }
        }
        x
    }

    /// Coordinate directions spanning `a`: unit vectors, or consecutive
    /// differences for the traceless classes.
    pub(crate) fn coordinate_directions(&self) -> Vec<Vec<f64>> {
        let len = self.coord_len();
        if self.kind.traceless_coordinates() {
            (0..len - 1)
                .map(|i| {
                    let mut v = vec![0.0; len];
                    v[i] = 1.0;
                    v[i + 1] = -1.0;
                    v
                })
                .collect()
        } else {
            (0..len)
                .map(|i| {
                    let mut v = vec![0.0; len];
                    v[i] = 1.0;
                    v
                })
                .collect()
        }
    }

    /// The generic point `e = (r, r-1, ..., 1)`, shifted to mean zero for the
    /// traceless classes.
    pub fn generic_point(&self) -> Vec<f64> {
        let len = self.coord_len();
        if self.kind.traceless_coordinates() {
            let mid = (len as f64 + 1.0) / 2.0;
            (0..len).map(|i| mid - (i + 1) as f64).collect()
        } else {
            (0..len).map(|i| (len - i) as f64).collect()
        }
    }

    /// Radial coordinates of an element of `a` (inverse of `radial_matrix`).
    pub(crate) fn radial_coords_of(&self, h: &Cmat) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        match self.kind {
            Kind::Aiii | Kind::Bdi => (0..n).map(|j| h[(m - 1 - j, m + j)].re).collect(),
            Kind::Cii => (0..n)
                .map(|j| 0.5 * (h[(m - 1 - j, 2 * m + j)].re + h[(2 * m - 1 - j, 2 * m + n + j)].re))
                .collect(),
            Kind::Ai | Kind::A2 => (0..n).map(|j| h[(j, j)].re).collect(),
            Kind::Aii => (0..n).map(|j| 0.5 * (h[(j, j)].re + h[(n + j, n + j)].re)).collect(),
            Kind::Diii => (0..n / 2).map(|j| h[(2 * j, n + 2 * j + 1)].re).collect(),
            Kind::Ci => (0..n).map(|j| h[(j, n + j)].re).collect(),
        }
    }
}

/// Split `X` in `g0` into its `k0` component.
pub fn project_k(space: &SpaceDescriptor, x: &Cmat) -> Result<AlgebraElement> {
    space.check_in_g(x)?;
    Ok(AlgebraElement::new(Subspace::K, (x - x.adjoint()) * c(0.5, 0.0)))
}

/// The `p0` component, computed as `X - project_k(X)` so the two parts
/// reassemble `X` up to a single rounding per entry.
pub fn project_p(space: &SpaceDescriptor, x: &Cmat) -> Result<AlgebraElement> {
    let k = project_k(space, x)?;
    Ok(AlgebraElement::new(Subspace::P, x - k.matrix))
}

pub fn basis_of(space: &SpaceDescriptor, which: Subspace) -> SubspaceBasis {
    space.basis_of(which)
}

/// Modified Gram-Schmidt (two passes) against `basis`, appending `v` when
/// its residual norm exceeds `drop_tol`.
fn mgs_push(basis: &mut Vec<Cmat>, mut v: Cmat, drop_tol: f64) -> bool {
    for _ in 0..2 {
        for b in basis.iter() {
            let t = frob_inner(b, &v);
            v -= b * c(t, 0.0);
        }
    }
    let nrm = frob(&v);
    if nrm > drop_tol {
        basis.push(v / c(nrm, 0.0));
        true
    } else {
        false
    }
}

fn build_bases(space: &SpaceDescriptor) -> Bases {
    let nn = space.dim;
    let mut k = Vec::new();
    let mut p = Vec::new();
    let dim_k = space.theoretical_dim_k();
    let dim_p = space.theoretical_dim_p();
    'outer: for i in 0..nn {
        for j in 0..nn {
            for z in [c(1.0, 0.0), c(0.0, 1.0)] {
                let g = space.project_g(&linalg::unit(nn, i, j, z));
                if frob(&g) < 1e-12 {
                    continue;
                }
                let kp = (&g - g.adjoint()) * c(0.5, 0.0);
                let pp = (&g + g.adjoint()) * c(0.5, 0.0);
                if k.len() < dim_k {
                    mgs_push(&mut k, kp, 1e-8);
                }
                if p.len() < dim_p {
                    mgs_push(&mut p, pp, 1e-8);
                }
                if k.len() == dim_k && p.len() == dim_p {
                    break 'outer;
                }
            }
        }
    }
    assert_eq!(k.len(), dim_k, "{}: k basis has wrong dimension", space.label());
    assert_eq!(p.len(), dim_p, "{}: p basis has wrong dimension", space.label());

    let mut a = Vec::new();
    for dir in space.coordinate_directions() {
        mgs_push(&mut a, space.radial_matrix(&dir), 1e-8);
    }
    assert_eq!(a.len(), space.real_rank);

    let mut a_perp = a.clone();
    for v in &p {
        mgs_push(&mut a_perp, v.clone(), 1e-8);
    }
    let a_perp: Vec<Cmat> = a_perp.split_off(a.len());
    assert_eq!(a_perp.len(), dim_p - space.real_rank);

    // z_k(a) is the kernel of xi -> ([xi, a_1], ..., [xi, a_r]) on k
    let rows = 2 * nn * nn * a.len();
    let mut t = Rmat::zeros(rows, k.len());
    for (col, b) in k.iter().enumerate() {
        let mut row = 0;
        for h in &a {
            let br = bracket(b, h);
            for z in br.iter() {
                t[(row, col)] = z.re;
                t[(row + 1, col)] = z.im;
                row += 2;
            }
        }
    }
    let gram = t.transpose() * &t;
    let (vals, vecs) = linalg::symmetric_eigen(&gram);
    let top = vals.first().copied().unwrap_or(0.0).max(1.0);
    let mut m = Vec::new();
    let mut zk_perp = Vec::new();
    for (idx, &lam) in vals.iter().enumerate() {
        let mut el = Cmat::zeros(nn, nn);
        for (j, b) in k.iter().enumerate() {
            el += b * c(vecs[(j, idx)], 0.0);
        }
        if lam > 1e-9 * top {
            mgs_push(&mut zk_perp, el, 1e-8);
        } else {
            mgs_push(&mut m, el, 1e-8);
        }
    }
    assert_eq!(zk_perp.len(), a_perp.len(), "{}: dim zk_perp != dim a_perp", space.label());
    Bases { k, p, a, a_perp, m, zk_perp }
}

/// Tabulated positive restricted roots with real multiplicities (the real
/// dimension each root contributes to `a_perp`).
pub fn restricted_roots(space: &SpaceDescriptor) -> Vec<RestrictedRoot> {
    let (m, n) = (space.m, space.n);
    let len = space.coord_len();
    let single = |i: usize, a: i32| {
        let mut v = vec![0; len];
        v[i] = a;
        v
    };
    let pair = |i: usize, j: usize, sj: i32| {
        let mut v = vec![0; len];
        v[i] = 1;
        v[j] = sj;
        v
    };
    let mut out = Vec::new();
    let mut push = |coeffs: Vec<i32>, mult: usize| {
        if mult > 0 {
            out.push(RestrictedRoot { coeffs, multiplicity: mult });
        }
    };
    // (mult f_i, mult 2 f_i, mult f_i - f_j, mult f_i + f_j) for BC-type classes
    let bc = match space.kind {
        Kind::Aiii => Some((2 * (m - n), 1, 2, 2)),
        Kind::Bdi => Some((m - n, 0, 1, 1)),
        Kind::Cii => Some((4 * (m - n), 3, 4, 4)),
        Kind::Ci => Some((0, 1, 1, 1)),
        Kind::Diii => Some((if n % 2 == 1 { 4 } else { 0 }, 1, 4, 4)),
        _ => None,
    };
    match bc {
        Some((mf, m2f, mdiff, msum)) => {
            for i in 0..len {
                push(single(i, 1), mf);
                push(single(i, 2), m2f);
            }
            for i in 0..len {
                for j in i + 1..len {
                    push(pair(i, j, -1), mdiff);
                    push(pair(i, j, 1), msum);
                }
            }
        }
        None => {
            let mult = match space.kind {
                Kind::Ai => 1,
                Kind::A2 => 2,
                Kind::Aii => 4,
                _ => unreachable!(),
            };
            for i in 0..len {
                for j in i + 1..len {
                    push(pair(i, j, -1), mult);
                }
            }
        }
    }
    out.sort();
    out
}

/// Positive roots that are not a sum of two positive roots.
pub fn simple_roots(space: &SpaceDescriptor) -> Vec<RestrictedRoot> {
    let roots = restricted_roots(space);
    roots
        .iter()
        .filter(|r| {
            !roots.iter().any(|a| {
                roots.iter().any(|b| a.coeffs.iter().zip(&b.coeffs).zip(&r.coeffs).all(|((x, y), z)| x + y == *z))
            })
        })
        .cloned()
        .collect()
}

/// Recover the restricted roots numerically from the spectra of
/// `A_q = ad(E) ad(q)` on `zk_perp`.
///
/// The operators `A_q` commute and act on each root plane by
/// `alpha(E) alpha(q)`. The eigenspaces of `A_q*` at a generic `q*` separate
/// the roots; Rayleigh quotients at `E` and at the coordinate directions
/// then give `alpha(E)` and the coefficients, which are rounded to integers.
pub fn numeric_roots(space: &SpaceDescriptor) -> Result<Vec<RestrictedRoot>> {
    let len = space.coord_len();
    let e = space.generic_point();
    // generic interior point with incommensurate coordinates
    let mut qstar: Vec<f64> = (0..len)
        .map(|i| (len - i) as f64 + 0.1 * ((i + 2) as f64).sqrt() + 0.05 * (i as f64).sin())
        .collect();
    if space.kind.traceless_coordinates() {
        let mean = qstar.iter().sum::<f64>() / len as f64;
        qstar.iter_mut().for_each(|x| *x -= mean);
    }
    let astar = crate::reduction::a_q_matrix(space, &qstar)?.matrix;
    let (vals, vecs) = linalg::symmetric_eigen(&astar);
    let scale = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);

    // cluster eigenvalues
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match clusters.last_mut() {
            Some(cl) if (vals[*cl.last().unwrap()] - v).abs() <= 1e-7 * scale => cl.push(i),
            _ => clusters.push(vec![i]),
        }
    }

    let directions = space.coordinate_directions();
    let a_e = crate::reduction::a_q_matrix(space, &e)?.matrix;
    let a_dirs: Vec<Rmat> = directions
        .iter()
        .map(|d| crate::reduction::a_q_matrix(space, d).map(|a| a.matrix))
        .collect::<Result<_>>()?;

    let mut found: Vec<RestrictedRoot> = Vec::new();
    for cl in clusters {
        let basis = Rmat::from_fn(vecs.nrows(), cl.len(), |r, j| vecs[(r, cl[j])]);
        let rayleigh = |a: &Rmat| (basis.transpose() * a * &basis).trace() / cl.len() as f64;
        let lam_e = rayleigh(&a_e);
        if lam_e <= 0.0 {
            return Err(Error::Consistency(format!(
                "{}: A_E has non-positive eigenvalue {lam_e:.3e} on a root space",
                space.label()
            )));
        }
        let alpha_e = lam_e.sqrt();
        let along: Vec<f64> = a_dirs.iter().map(|a| rayleigh(a) / alpha_e).collect();
        // coefficients: alpha(direction_i) = along_i, plus sum zero when traceless
        let coeffs: Vec<f64> = if space.kind.traceless_coordinates() {
            let mut sys = Rmat::zeros(len, len);
            let mut rhs = DVector::zeros(len);
            for (i, d) in directions.iter().enumerate() {
                for (j, &x) in d.iter().enumerate() {
                    sys[(i, j)] = x;
                }
                rhs[i] = along[i];
            }
            for j in 0..len {
                sys[(len - 1, j)] = 1.0;
            }
            let sol = linalg::solve(&sys, &rhs)
                .ok_or_else(|| Error::Consistency("numeric_roots: singular coordinate system".into()))?;
            sol.iter().copied().collect()
        } else {
            along
        };
        let rounded: Vec<i32> = coeffs.iter().map(|x| x.round() as i32).collect();
        let resid = coeffs
            .iter()
            .zip(&rounded)
            .fold(0.0f64, |acc, (x, &r)| acc.max((x - r as f64).abs()));
        if resid > 1e-6 {
            return Err(Error::Consistency(format!(
                "{}: root fit residual {resid:.3e} exceeds 1e-6 (coefficients {coeffs:?})",
                space.label()
            )));
        }
        match found.iter_mut().find(|r| r.coeffs == rounded) {
            Some(r) => r.multiplicity += cl.len(),
            None => found.push(RestrictedRoot { coeffs: rounded, multiplicity: cl.len() }),
        }
    }
    found.sort();
    Ok(found)
}

/// Checks that a radial point lies in the closed chamber (every positive
/// root non-negative within `tol`, coordinates summing to zero for the
/// traceless classes).
pub fn chamber_violation(space: &SpaceDescriptor, q: &[f64], tol: f64) -> Option<String> {
    if space.kind.traceless_coordinates() {
        let s: f64 = q.iter().sum();
        let scale = q.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        if s.abs() > tol * scale {
            return Some(format!("coordinates must sum to zero, got {s:.3e}"));
        }
    }
    for root in restricted_roots(space) {
        let v = root.eval(q);
        if v < -tol {
            return Some(format!("root {} is negative ({v:.3e})", root.label()));
        }
    }
    None
}

/// Smallest `|alpha(q)|` over positive roots; infinite when there are none.
pub fn min_root_value(space: &SpaceDescriptor, q: &[f64]) -> f64 {
    restricted_roots(space).iter().map(|r| r.eval(q).abs()).fold(f64::INFINITY, f64::min)
}


/// Lie-algebra dimension check helper used by reports.
pub fn dim_a_perp(space: &SpaceDescriptor) -> usize {
    space.theoretical_dim_p() - space.real_rank()
}
