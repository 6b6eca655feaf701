//! Random elements used by tests, the CLI and the sampler.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{self, c, Cmat};
use crate::spaces::{self, SpaceDescriptor, Subspace};

/// Standard Gaussian element of `p0`: independent normals on the
/// orthonormal `p` basis.
pub fn random_p<R: Rng + ?Sized>(space: &SpaceDescriptor, rng: &mut R) -> Cmat {
    gaussian_in(space.basis_ref(Subspace::P), space.ambient_dim(), rng)
}

/// Gaussian element of `k0`.
pub fn random_k_algebra<R: Rng + ?Sized>(space: &SpaceDescriptor, rng: &mut R) -> Cmat {
    gaussian_in(space.basis_ref(Subspace::K), space.ambient_dim(), rng)
}

/// `exp` of a Gaussian element of `k0`, an element of the identity
/// component of `K`.
pub fn random_k<R: Rng + ?Sized>(space: &SpaceDescriptor, rng: &mut R) -> Cmat {
    let a = random_k_algebra(space, rng);
    linalg::unitary_exp(&a).expect("k0 elements are anti-Hermitian")
}

/// Element of the identity component of `M = Z_K(a)`.
pub fn random_m<R: Rng + ?Sized>(space: &SpaceDescriptor, rng: &mut R) -> Cmat {
    let a = gaussian_in(space.basis_ref(Subspace::MCentralizer), space.ambient_dim(), rng);
    linalg::unitary_exp(&a).expect("m elements are anti-Hermitian")
}

pub(crate) fn gaussian_in<R: Rng + ?Sized>(basis: &[Cmat], n: usize, rng: &mut R) -> Cmat {
    let mut x = Cmat::zeros(n, n);
    for b in basis {
        let g: f64 = StandardNormal.sample(rng);
        x += b * c(g, 0.0);
    }
    x
}

/// Chamber point with every positive root at least `gap * max|q_i|`,
/// drawn by sorting Gaussian coordinates and rejecting points near walls.
pub fn random_chamber_point<R: Rng + ?Sized>(space: &SpaceDescriptor, rng: &mut R, scale: f64, gap: f64) -> Vec<f64> {
    loop {
        let q = chamber_candidate(space, rng, scale);
        let top = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if top > 0.0 && spaces::min_root_value(space, &q) >= gap * top {
            return q;
        }
    }
}

fn chamber_candidate<R: Rng + ?Sized>(space: &SpaceDescriptor, rng: &mut R, scale: f64) -> Vec<f64> {
    let len = space.coord_len();
    let mut q: Vec<f64> = (0..len)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            g * scale
        })
        .collect();
    if space.kind().traceless_coordinates() {
        q.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mean = q.iter().sum::<f64>() / len as f64;
        q.iter_mut().for_each(|v| *v -= mean);
        return q;
    }
    q.iter_mut().for_each(|v| *v = v.abs());
    q.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // the D-type chamber of bdi(n, n) lets the last coordinate take either sign
    if space.kind() == spaces::Kind::Bdi && space.m() == space.n() && rng.random::<bool>() {
        q[len - 1] = -q[len - 1];
    }
    q
}
