//! Gaussian sampling on `p0` and the radial densities it induces.
//!
//! Sample `i` of a run with root seed `s` is drawn from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`. Shards are
//! contiguous index ranges whose counts are summed, so the histogram does
//! not depend on the number of workers.
//!
//! The theoretical density is handled in chamber coordinates: `s_j` is the
//! value of the `j`-th simple root, the chamber is the positive orthant in
//! `s`, and `q` depends linearly on `s`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Cmat, Rmat};
use crate::quadrature;
use crate::random::random_p;
use crate::reduction::{closed_form_density, density_constant};
use crate::slice::radial_decompose;
use crate::spaces::{self, Kind, SpaceDescriptor};

/// Kolmogorov 99% coefficient: `P(sqrt(n) D > 1.628) = 0.01`.
pub const KS_COEFF_99: f64 = 1.628;
/// Widening of the Kolmogorov band to absorb evaluating the CDF only at bin edges.
pub const KS_BAND: f64 = 1.5;
/// Largest real rank for which the normalization is computed.
pub const MAX_THEORY_RANK: usize = 4;

/// The `index`-th draw of the run with root seed `seed`.
pub fn sample_indexed(space: &SpaceDescriptor, seed: u64, index: u64) -> Cmat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    random_p(space, &mut rng)
}

/// Gaussian element of `p0` with density proportional to
/// `exp(-trace_form(X, X) / 2)`.
pub fn sample_p_gaussian(space: &SpaceDescriptor, seed: u64) -> Cmat {
    sample_indexed(space, seed, 0)
}

/// Histogram of each radial coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialHistogram {
    pub space: String,
    pub sample_count: u64,
    pub seed: u64,
    pub bins: usize,
    /// `edges[i]` has `bins + 1` entries for coordinate `i`.
    pub edges: Vec<Vec<f64>>,
    pub counts: Vec<Vec<u64>>,
}

impl RadialHistogram {
    /// `count / (n * width)` per bin.
    pub fn empirical_density(&self, coord: usize) -> Vec<f64> {
        let e = &self.edges[coord];
        self.counts[coord]
            .iter()
            .enumerate()
            .map(|(b, &k)| k as f64 / (self.sample_count as f64 * (e[b + 1] - e[b])))
            .collect()
    }

    /// Empirical CDF at each edge.
    pub fn empirical_cdf(&self, coord: usize) -> Vec<f64> {
        let mut acc = 0u64;
        let mut out = vec![0.0];
        for &k in &self.counts[coord] {
            acc += k;
            out.push(acc as f64 / self.sample_count as f64);
        }
        out
    }

    /// Integral of the empirical density under the bin rule.
    pub fn total_mass(&self, coord: usize) -> f64 {
        let e = &self.edges[coord];
        self.empirical_density(coord).iter().enumerate().map(|(b, d)| d * (e[b + 1] - e[b])).sum()
    }
}

/// Radius beyond which the Gaussian radial mass is negligible.
pub fn radial_cutoff(space: &SpaceDescriptor) -> f64 {
    ((space.theoretical_dim_p() as f64).sqrt() + 8.0) / space.norm_constant().sqrt()
}

/// Bin range of each coordinate, fixed in advance from the class so that
/// it does not depend on the data.
pub fn histogram_ranges(space: &SpaceDescriptor) -> Vec<(f64, f64)> {
    let r = radial_cutoff(space);
    let len = space.coord_len();
    let no_roots = spaces::restricted_roots(space).is_empty();
    (0..len)
        .map(|i| {
            let signed = no_roots
                || (space.kind().traceless_coordinates() && i > 0)
                || (space.kind() == Kind::Bdi && space.m() == space.n() && i == len - 1);
            if signed {
                (-r, r)
            } else {
                (0.0, r)
            }
        })
        .collect()
}

fn bin_of(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = ((x - lo) / (hi - lo) * bins as f64).floor();
    // out-of-range samples are clamped into the edge bins
    if t.is_nan() || t < 0.0 {
        0
    } else {
        (t as usize).min(bins - 1)
    }
}

fn shard_counts(space: &SpaceDescriptor, seed: u64, range: std::ops::Range<u64>, ranges: &[(f64, f64)], bins: usize) -> Result<Vec<Vec<u64>>> {
    let mut counts = vec![vec![0u64; bins]; ranges.len()];
    for i in range {
        let q = radial_decompose(space, &sample_indexed(space, seed, i))?.q;
        for (c, (&v, &(lo, hi))) in q.iter().zip(ranges).enumerate() {
            counts[c][bin_of(v, lo, hi, bins)] += 1;
        }
    }
    Ok(counts)
}

/// Histogram of the radial coordinates of `count` Gaussian draws, computed
/// on `threads` workers.
pub fn radial_histogram(space: &SpaceDescriptor, count: u64, bins: usize, seed: u64, threads: usize) -> Result<RadialHistogram> {
    if count < 1 {
        return Err(Error::Validation("count must be at least 1".into()));
    }
    if bins < 2 {
        return Err(Error::Validation("bins must be at least 2".into()));
    }
    let threads = threads.max(1);
    let ranges = histogram_ranges(space);
    let shards: Vec<std::ops::Range<u64>> = (0..threads as u64)
        .map(|t| (count * t / threads as u64)..(count * (t + 1) / threads as u64))
        .collect();
    let parts: Vec<Vec<Vec<u64>>> = if threads == 1 {
        vec![shard_counts(space, seed, 0..count, &ranges, bins)?]
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Validation(format!("cannot start {threads} workers: {e}")))?;
        pool.install(|| {
            shards
                .par_iter()
                .map(|r| shard_counts(space, seed, r.clone(), &ranges, bins))
                .collect::<Result<Vec<_>>>()
        })?
    };
    let mut counts = vec![vec![0u64; bins]; ranges.len()];
    for part in parts {
        for (acc, p) in counts.iter_mut().zip(part) {
            for (a, b) in acc.iter_mut().zip(p) {
                *a += b;
            }
        }
    }
    let edges = ranges
        .iter()
        .map(|&(lo, hi)| (0..=bins).map(|b| lo + (hi - lo) * b as f64 / bins as f64).collect())
        .collect();
    Ok(RadialHistogram { space: space.label(), sample_count: count, seed, bins, edges, counts })
}

/// Normalized radial density of the Gaussian ensemble on the chamber.
#[derive(Debug, Clone)]
pub struct RadialTheory {
    space: SpaceDescriptor,
    /// `q = map * s`.
    map: Rmat,
    /// `|det|` of the map from `s` to the free coordinates of `q`.
    jac: f64,
    /// `int f(q(s)) ds` over the chamber.
    z: f64,
    /// Same integral by a box rule, kept as a cross-check.
    z_box: f64,
}

/// Relative tolerance for the panel-doubling quadrature.
const QUAD_TOL: f64 = 1e-10;
/// Estimates that fail to reach `QUAD_TOL` are still accepted within this.
const QUAD_ACCEPT: f64 = 1e-7;

impl RadialTheory {
    pub fn new(space: &SpaceDescriptor) -> Result<Self> {
        let rank = space.real_rank();
        if rank > MAX_THEORY_RANK {
            return Err(Error::Unsupported(format!(
                "{}: normalization is computed for real rank <= {MAX_THEORY_RANK}",
                space.label()
            )));
        }
        let simple = spaces::simple_roots(space);
        if simple.len() != rank {
            return Err(Error::Unsupported(format!("{}: chamber has no simple-root coordinates", space.label())));
        }
        let len = space.coord_len();
        // rows: simple roots, then the trace for the traceless classes
        let mut a = Rmat::zeros(len, len);
        for (i, r) in simple.iter().enumerate() {
            for (j, &cf) in r.coeffs.iter().enumerate() {
                a[(i, j)] = cf as f64;
            }
        }
        if space.kind().traceless_coordinates() {
            for j in 0..len {
                a[(len - 1, j)] = 1.0;
            }
        }
        let inv = a.try_inverse().ok_or_else(|| Error::Consistency("simple roots are not independent".into()))?;
        let map = inv.columns(0, rank).into_owned();
        let jac = linalg::abs_det(&map.rows(0, rank).into_owned());
        let mut th = RadialTheory { space: space.clone(), map, jac, z: 1.0, z_box: 1.0 };
        let w = th.q1_weights();
        if w.iter().any(|&x| x <= 0.0) {
            return Err(Error::Consistency(format!("{}: q_1 is not a positive combination of simple roots", space.label())));
        }
        let big = radial_cutoff(space) * len as f64;
        th.z = quadrature::simplex_integral(&|s: &[f64]| th.weight_s(s), &w, big, QUAD_TOL, QUAD_ACCEPT)?;
        let smax = 2.0 * big;
        th.z_box = quadrature::adaptive_box(&|s: &[f64]| th.weight_s(s), &vec![0.0; rank], &vec![smax; rank], QUAD_TOL, QUAD_ACCEPT)?;
        Ok(th)
    }

    fn q_of(&self, s: &[f64]) -> Vec<f64> {
        (0..self.map.nrows()).map(|i| (0..s.len()).map(|j| self.map[(i, j)] * s[j]).sum()).collect()
    }

    fn q1_weights(&self) -> Vec<f64> {
        self.map.row(0).iter().copied().collect()
    }

    /// Unnormalized density in `s`.
    fn weight_s(&self, s: &[f64]) -> f64 {
        let q = self.q_of(s);
        let c = self.space.norm_constant();
        closed_form_density(&self.space, &q) * (-0.5 * c * q.iter().map(|v| v * v).sum::<f64>()).exp()
    }

    /// Density w.r.t. Lebesgue measure on the free coordinates of `q`
    /// (all of them, or the first `n - 1` for the traceless classes).
    pub fn density(&self, q: &[f64]) -> f64 {
        if spaces::chamber_violation(&self.space, q, 1e-12).is_some() {
            return 0.0;
        }
        let c = self.space.norm_constant();
        closed_form_density(&self.space, q) * (-0.5 * c * q.iter().map(|v| v * v).sum::<f64>()).exp() / (self.z * self.jac)
    }

    /// `P(q_1 <= x)`.
    pub fn cdf_q1(&self, x: f64) -> Result<f64> {
        let w = self.q1_weights();
        let f = quadrature::simplex_integral(&|s: &[f64]| self.weight_s(s), &w, x, QUAD_TOL, QUAD_ACCEPT)?;
        Ok(f / self.z)
    }

    /// Box-rule integral of the normalized density; one up to quadrature error.
    pub fn normalization_check(&self) -> f64 {
        self.z_box / self.z
    }
}

/// Normalized radial density at `q` (zero outside the chamber).
pub fn theoretical_radial_density(space: &SpaceDescriptor, q: &[f64]) -> Result<f64> {
    Ok(RadialTheory::new(space)?.density(q))
}

/// Sup distance between the empirical and theoretical CDFs of `q_1` over
/// the bin edges.
pub fn ks_statistic(hist: &RadialHistogram, theory: &RadialTheory) -> Result<f64> {
    let emp = hist.empirical_cdf(0);
    let mut worst = 0.0f64;
    for (e, f) in hist.edges[0].iter().zip(&emp) {
        worst = worst.max((theory.cdf_q1(*e)? - f).abs());
    }
    Ok(worst)
}

/// `KS_BAND * KS_COEFF_99 / sqrt(n)`.
pub fn ks_threshold(n: u64) -> f64 {
    KS_BAND * KS_COEFF_99 / (n as f64).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub constant_ratio_ok: bool,
    pub constant: Option<f64>,
    pub normalization: f64,
    pub ks_statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Density calibration plus the goodness-of-fit test on `q_1`.
pub fn verify_density(space: &SpaceDescriptor, count: u64, bins: usize, seed: u64, threads: usize) -> Result<VerifyReport> {
    let constant = density_constant(space).ok();
    let theory = RadialTheory::new(space)?;
    let hist = radial_histogram(space, count, bins, seed, threads)?;
    let ks = ks_statistic(&hist, &theory)?;
    let threshold = ks_threshold(count);
    let normalization = theory.normalization_check();
    let pass = constant.is_some() && ks <= threshold && (normalization - 1.0).abs() <= 1e-6;
    Ok(VerifyReport { constant_ratio_ok: constant.is_some(), constant, normalization, ks_statistic: ks, threshold, pass })
}

/// One CSV row per bin of `q_1`, then the other coordinates. The
/// theoretical column is the bin average of the `q_1` marginal and is
/// `None` for the other coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct HistogramRow {
    pub coord: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
    pub empirical_density: f64,
    pub theoretical_density: Option<f64>,
}

pub fn histogram_rows(hist: &RadialHistogram, theory: Option<&RadialTheory>) -> Result<Vec<HistogramRow>> {
    let mut rows = Vec::new();
    for coord in 0..hist.counts.len() {
        let e = &hist.edges[coord];
        let emp = hist.empirical_density(coord);
        let cdf: Option<Vec<f64>> = match (coord, theory) {
            (0, Some(t)) => Some(e.iter().map(|&x| t.cdf_q1(x)).collect::<Result<_>>()?),
            _ => None,
        };
        for b in 0..hist.bins {
            rows.push(HistogramRow {
                coord,
                bin_lo: e[b],
                bin_hi: e[b + 1],
                count: hist.counts[coord][b],
                empirical_density: emp[b],
                theoretical_density: cdf.as_ref().map(|f| (f[b + 1] - f[b]) / (e[b + 1] - e[b])),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob_inner, tf};
    use crate::spaces::{make_space, Subspace};

    #[test]
    fn fixed_seed_is_bit_identical() {
        let s = make_space(Kind::Aiii, 3, 2).unwrap();
        assert_eq!(sample_p_gaussian(&s, 42), sample_p_gaussian(&s, 42));
        assert_ne!(sample_p_gaussian(&s, 42), sample_p_gaussian(&s, 43));
        assert_ne!(sample_indexed(&s, 42, 1), sample_indexed(&s, 42, 2));
        s.check_in_p(&sample_p_gaussian(&s, 1)).unwrap();
    }

    #[test]
    fn chi_square_mean() {
        let s = make_space(Kind::Aiii, 2, 1).unwrap();
        let n = 100_000u64;
        let mean = (0..n).map(|i| { let x = sample_indexed(&s, 7, i); tf(&x, &x) }).sum::<f64>() / n as f64;
        let d = s.theoretical_dim_p() as f64;
        assert!((mean - d).abs() <= 3.0 * (2.0 * d / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn coordinates_are_uncorrelated() {
        let s = make_space(Kind::Bdi, 2, 1).unwrap();
        let b = s.basis_of(Subspace::P);
        let n = 20_000u64;
        let mut acc = 0.0;
        for i in 0..n {
            let x = sample_indexed(&s, 3, i);
            acc += frob_inner(&b.vectors[0], &x) * frob_inner(&b.vectors[1], &x);
        }
        assert!((acc / n as f64).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn single_sample_is_unit_mass() {
        let s = make_space(Kind::Ai, 0, 2).unwrap();
        let h = radial_histogram(&s, 1, 8, 5, 1).unwrap();
        assert_eq!(h.counts[0].iter().sum::<u64>(), 1);
        assert_eq!(h.counts[0].iter().filter(|&&c| c > 0).count(), 1);
        assert!((h.total_mass(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sharding_does_not_change_counts() {
        let s = make_space(Kind::Aiii, 3, 2).unwrap();
        let a = radial_histogram(&s, 2000, 16, 11, 1).unwrap();
        let b = radial_histogram(&s, 2000, 16, 11, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn su21_density_normalized_with_known_mode() {
        let s = make_space(Kind::Aiii, 2, 1).unwrap();
        let th = RadialTheory::new(&s).unwrap();
        assert!((th.normalization_check() - 1.0).abs() < 1e-6);
        assert!((th.cdf_q1(50.0).unwrap() - 1.0).abs() < 1e-9);
        // q^3 exp(-q^2) has its mode at sqrt(3/2)
        let mode = (1.5f64).sqrt();
        let d0 = th.density(&[mode]);
        assert!(d0 > th.density(&[mode - 1e-3]) && d0 > th.density(&[mode + 1e-3]));
        assert_eq!(th.density(&[0.0]), 0.0);
        // normalized q^3 exp(-q^2) has constant 2
        assert!((d0 - 2.0 * mode.powi(3) * (-1.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rank_two_normalization() {
        for (kind, m, n) in [(Kind::Ai, 0, 3), (Kind::Bdi, 3, 2), (Kind::Bdi, 2, 2)] {
            let s = make_space(kind, m, n).unwrap();
            let th = RadialTheory::new(&s).unwrap();
            assert!((th.normalization_check() - 1.0).abs() < 1e-6, "{}", s.label());
        }
    }
}
