//! Level dynamics: the free flow `X -> X + tY` on `p x p` and its reduction
//! to `(q, p, l)`.
//!
//! With `r` in `a_perp` solving `[r, H(q)] = l` and `xi` in `zk_perp`
//! solving `[xi, H(q)] = r`, the reduced Hamiltonian is
//! `H = c |p|^2 / 2 + |r|^2 / 2` (`c` the norm constant of the radial
//! embedding) and the equations of motion read
//!
//! ```text
//! dq/dt   = p
//! dp_i/dt = trace_form([r, xi], H(e_i)) / c
//! dl/dt   = [l, xi]
//! ```
//!
//! Here `p` is the radial velocity; the canonical momentum is `c p`.

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, bracket, c, tf, Cmat, Rmat};
use crate::random::random_p;
use crate::reduction::{coords_in, element_in, l_matrix, reduce, require_off_wall, ReducedState};
use crate::slice::{radial_decompose, WALL_TOL};
use crate::spaces::{self, SpaceDescriptor, Subspace};

/// Integration stops once `min |alpha(q)|` drops below this.
pub const ABORT_TOL: f64 = 10.0 * WALL_TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Cmat,
    pub y: Cmat,
}

/// `(X + tY, Y)`.
pub fn direct_flow(start: &PhasePoint, t: f64) -> PhasePoint {
    PhasePoint { x: &start.x + &start.y * c(t, 0.0), y: start.y.clone() }
}

#[derive(Debug, Clone)]
pub struct Tangent {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
    pub dl: Cmat,
}

/// Partial derivatives of the reduced Hamiltonian; `dl` holds coordinates
/// in the `zk_perp` basis.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
    pub dl: DVector<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    pub l_spectrum: Vec<Vec<f64>>,
    /// Why integration stopped early, if it did.
    pub abort: Option<String>,
    #[serde(skip)]
    pub states: Vec<ReducedState>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub times: Vec<f64>,
    pub q_direct: Vec<Vec<f64>>,
    pub q_reduced: Vec<Vec<f64>>,
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
    pub energy_drift: f64,
    pub spectrum_drift: f64,
    pub truncated: Option<String>,
}

/// Solved quantities at one point of the reduced phase space.
struct Frame {
    r: Cmat,
    xi: Cmat,
    rc: DVector<f64>,
    xic: DVector<f64>,
}

fn frame(space: &SpaceDescriptor, q: &[f64], lc: &DVector<f64>) -> Result<Frame> {
    require_off_wall(space, q)?;
    let lm: Rmat = l_matrix(space, q);
    let lu = lm.clone().lu();
    let rc = lu
        .solve(lc)
        .ok_or_else(|| Error::Degenerate(format!("{}: ad(H(q)) is singular", space.label())))?;
    let xic = lm
        .transpose()
        .lu()
        .solve(&rc)
        .ok_or_else(|| Error::Degenerate(format!("{}: ad(H(q)) is singular", space.label())))?;
    Ok(Frame {
        r: element_in(space, Subspace::APerp, &rc),
        xi: element_in(space, Subspace::ZkPerp, &xic),
        rc,
        xic,
    })
}

fn unit_radial(space: &SpaceDescriptor, i: usize) -> Cmat {
    let mut e = vec![0.0; space.coord_len()];
    e[i] = 1.0;
    space.radial_matrix(&e)
}

fn check_state(space: &SpaceDescriptor, s: &ReducedState) -> Result<()> {
    let len = space.coord_len();
    if s.q.len() != len || s.p.len() != len {
        return Err(Error::Contract(format!("{}: q and p need length {len}", space.label())));
    }
    if s.l.nrows() != space.ambient_dim() || !s.l.is_square() {
        return Err(Error::Contract(format!("{}: l has the wrong shape", space.label())));
    }
    Ok(())
}

/// `H(q, p, l) = c |p|^2 / 2 + |r_from_l(q, l)|^2 / 2`.
pub fn reduced_hamiltonian(space: &SpaceDescriptor, s: &ReducedState) -> Result<f64> {
    check_state(space, s)?;
    let lc = coords_in(space, Subspace::ZkPerp, &s.l);
    let f = frame(space, &s.q, &lc)?;
    Ok(energy(space, &s.p, &f.rc))
}

fn energy(space: &SpaceDescriptor, p: &[f64], rc: &DVector<f64>) -> f64 {
    0.5 * space.norm_constant() * p.iter().map(|v| v * v).sum::<f64>() + 0.5 * rc.norm_squared()
}

/// Analytic gradient: `dH/dq_i = trace_form([xi, r], H(e_i))`,
/// `dH/dp = c p`, `dH/dl = xi`.
pub fn hamiltonian_gradient(space: &SpaceDescriptor, s: &ReducedState) -> Result<Gradient> {
    check_state(space, s)?;
    let lc = coords_in(space, Subspace::ZkPerp, &s.l);
    let f = frame(space, &s.q, &lc)?;
    let xr = bracket(&f.xi, &f.r);
    let dq = (0..space.coord_len()).map(|i| tf(&xr, &unit_radial(space, i))).collect();
    let cn = space.norm_constant();
    Ok(Gradient { dq, dp: s.p.iter().map(|v| cn * v).collect(), dl: f.xic })
}

/// Central differences of [`reduced_hamiltonian`] with step `h`.
pub fn finite_difference_gradient(space: &SpaceDescriptor, s: &ReducedState, h: f64) -> Result<Gradient> {
    check_state(space, s)?;
    let lc = coords_in(space, Subspace::ZkPerp, &s.l);
    let ham = |q: &[f64], p: &[f64], lc: &DVector<f64>| -> Result<f64> {
        let f = frame(space, q, lc)?;
        Ok(energy(space, p, &f.rc))
    };
    let mut dq = Vec::with_capacity(s.q.len());
    for i in 0..s.q.len() {
        let (mut qp, mut qm) = (s.q.clone(), s.q.clone());
        qp[i] += h;
        qm[i] -= h;
        dq.push((ham(&qp, &s.p, &lc)? - ham(&qm, &s.p, &lc)?) / (2.0 * h));
    }
    let mut dp = Vec::with_capacity(s.p.len());
    for i in 0..s.p.len() {
        let (mut pp, mut pm) = (s.p.clone(), s.p.clone());
        pp[i] += h;
        pm[i] -= h;
        dp.push((ham(&s.q, &pp, &lc)? - ham(&s.q, &pm, &lc)?) / (2.0 * h));
    }
    let mut dl = DVector::zeros(lc.len());
    for j in 0..lc.len() {
        let (mut lp, mut lm) = (lc.clone(), lc.clone());
        lp[j] += h;
        lm[j] -= h;
        dl[j] = (ham(&s.q, &s.p, &lp)? - ham(&s.q, &s.p, &lm)?) / (2.0 * h);
    }
    Ok(Gradient { dq, dp, dl })
}

/// Right-hand side in coordinates `(q, p, l_c)`.
fn field(space: &SpaceDescriptor, q: &[f64], p: &[f64], lc: &DVector<f64>) -> Result<(Vec<f64>, Vec<f64>, DVector<f64>)> {
    let f = frame(space, q, lc)?;
    let cn = space.norm_constant();
    let rx = bracket(&f.r, &f.xi);
    let dp = (0..q.len()).map(|i| tf(&rx, &unit_radial(space, i)) / cn).collect();
    let l = element_in(space, Subspace::ZkPerp, lc);
    let dl = coords_in(space, Subspace::ZkPerp, &bracket(&l, &f.xi));
    Ok((p.to_vec(), dp, dl))
}

/// `(dq, dp, dl)` at a reduced state.
pub fn reduced_vector_field(space: &SpaceDescriptor, s: &ReducedState) -> Result<Tangent> {
    check_state(space, s)?;
    let lc = coords_in(space, Subspace::ZkPerp, &s.l);
    let (dq, dp, dl) = field(space, &s.q, &s.p, &lc)?;
    Ok(Tangent { dq, dp, dl: element_in(space, Subspace::ZkPerp, &dl) })
}

/// Eigenvalues of the Hermitian matrix `i l`, descending.
pub fn l_spectrum(l: &Cmat) -> Vec<f64> {
    let h = l * c(0.0, 1.0);
    let h = (&h + h.adjoint()) * c(0.5, 0.0);
    linalg::hermitian_eigen(&h).map(|(v, _)| v).unwrap_or_default()
}

type Coords = (Vec<f64>, Vec<f64>, DVector<f64>);

fn axpy(y: &Coords, h: f64, k: &Coords) -> Coords {
    (
        y.0.iter().zip(&k.0).map(|(a, b)| a + h * b).collect(),
        y.1.iter().zip(&k.1).map(|(a, b)| a + h * b).collect(),
        &y.2 + &k.2 * h,
    )
}

fn rk4_step(space: &SpaceDescriptor, y: &Coords, h: f64) -> Result<Coords> {
    let f = |s: &Coords| field(space, &s.0, &s.1, &s.2);
    let k1 = f(y)?;
    let k2 = f(&axpy(y, h / 2.0, &k1))?;
    let k3 = f(&axpy(y, h / 2.0, &k2))?;
    let k4 = f(&axpy(y, h, &k3))?;
    let mut out = y.clone();
    for i in 0..out.0.len() {
        out.0[i] += h / 6.0 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]);
        out.1[i] += h / 6.0 * (k1.1[i] + 2.0 * k2.1[i] + 2.0 * k3.1[i] + k4.1[i]);
    }
    out.2 += (&k1.2 + &k2.2 * 2.0 + &k3.2 * 2.0 + &k4.2) * (h / 6.0);
    Ok(out)
}

/// Fixed-step RK4 on `[0, t_max]`. Stops early, with the reason recorded,
/// when `q` comes within [`ABORT_TOL`] of a wall.
pub fn integrate_reduced(space: &SpaceDescriptor, initial: &ReducedState, t_max: f64, steps: usize) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::Validation("steps must be positive".into()));
    }
    if !t_max.is_finite() {
        return Err(Error::Validation("t_max must be finite".into()));
    }
    check_state(space, initial)?;
    let h = t_max / steps as f64;
    let mut y: Coords = (initial.q.clone(), initial.p.clone(), coords_in(space, Subspace::ZkPerp, &initial.l));
    let mut traj = Trajectory {
        times: vec![],
        q: vec![],
        p: vec![],
        energy: vec![],
        l_spectrum: vec![],
        abort: None,
        states: vec![],
    };
    for step in 0..=steps {
        let mr = spaces::min_root_value(space, &y.0);
        if mr < ABORT_TOL {
            traj.abort = Some(format!("wall approach at t = {:.6}: min |alpha(q)| = {mr:.3e}", step as f64 * h));
            break;
        }
        let f = frame(space, &y.0, &y.2)?;
        let l = element_in(space, Subspace::ZkPerp, &y.2);
        traj.times.push(step as f64 * h);
        traj.q.push(y.0.clone());
        traj.p.push(y.1.clone());
        traj.energy.push(energy(space, &y.1, &f.rc));
        traj.l_spectrum.push(l_spectrum(&l));
        traj.states.push(ReducedState { q: y.0.clone(), p: y.1.clone(), l });
        if step == steps {
            break;
        }
        match rk4_step(space, &y, h) {
            Ok(next) => y = next,
            Err(e) => {
                traj.abort = Some(format!("step at t = {:.6} failed: {e}", step as f64 * h));
                break;
            }
        }
    }
    Ok(traj)
}

/// `times[i] = i * t_max / steps`.
pub fn uniform_grid(t_max: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| t_max * i as f64 / steps as f64).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Radial coordinates of `X + tY` against the reduced flow started from
/// the reduction of `(X, Y)`. The grid must start at 0 and increase; one
/// RK4 step is taken per grid interval.
pub fn compare_with_oracle(space: &SpaceDescriptor, start: &PhasePoint, t_grid: &[f64]) -> Result<OracleReport> {
    if t_grid.first() != Some(&0.0) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("time grid must start at 0 and increase strictly".into()));
    }
    let (state, _) = reduce(space, &start.x, &start.y)?;
    let mut y: Coords = (state.q.clone(), state.p.clone(), coords_in(space, Subspace::ZkPerp, &state.l));
    let l0 = l_spectrum(&state.l);
    let f0 = frame(space, &y.0, &y.2)?;
    let e0 = energy(space, &y.1, &f0.rc);
    let mut rep = OracleReport {
        times: vec![],
        q_direct: vec![],
        q_reduced: vec![],
        deviation: vec![],
        max_deviation: 0.0,
        energy_drift: 0.0,
        spectrum_drift: 0.0,
        truncated: None,
    };
    for (i, &t) in t_grid.iter().enumerate() {
        if i > 0 {
            match rk4_step(space, &y, t - t_grid[i - 1]) {
                Ok(next) => y = next,
                Err(e) => {
                    rep.truncated = Some(format!("reduced flow failed before t = {t}: {e}"));
                    break;
                }
            }
        }
        let qd = radial_decompose(space, &direct_flow(start, t).x)?.q;
        let mr = spaces::min_root_value(space, &qd).min(spaces::min_root_value(space, &y.0));
        if mr < ABORT_TOL {
            rep.truncated = Some(format!("wall approach at t = {t}: min |alpha(q)| = {mr:.3e}"));
            break;
        }
        let f = frame(space, &y.0, &y.2)?;
        let e = energy(space, &y.1, &f.rc);
        rep.energy_drift = rep.energy_drift.max((e - e0).abs() / e0.abs().max(1.0));
        let spec = l_spectrum(&element_in(space, Subspace::ZkPerp, &y.2));
        rep.spectrum_drift = rep.spectrum_drift.max(max_abs_diff(&spec, &l0));
        let dev = max_abs_diff(&qd, &y.0);
        rep.max_deviation = rep.max_deviation.max(dev);
        rep.times.push(t);
        rep.q_direct.push(qd);
        rep.q_reduced.push(y.0.clone());
        rep.deviation.push(dev);
    }
    Ok(rep)
}

/// Draw Gaussian `(X, Y)` until the direct trajectory keeps
/// `min |alpha(q(t))| >= gap` on the grid (checked at every grid time).
pub fn sample_generic_start<R: Rng + ?Sized>(
    space: &SpaceDescriptor,
    rng: &mut R,
    t_grid: &[f64],
    gap: f64,
) -> Result<PhasePoint> {
    for _ in 0..1000 {
        let start = PhasePoint { x: random_p(space, rng), y: random_p(space, rng) };
        let mut ok = true;
        for &t in t_grid {
            let q = radial_decompose(space, &direct_flow(&start, t).x)?.q;
            if spaces::min_root_value(space, &q) < gap {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(start);
        }
    }
    Err(Error::Degenerate(format!("{}: no start stayed {gap} away from the walls", space.label())))
}

/// Applies `(p, l) -> (-p, -l)`, the time reversal of the reduced flow.
pub fn time_reversed(s: &ReducedState) -> ReducedState {
    ReducedState { q: s.q.clone(), p: s.p.iter().map(|v| -v).collect(), l: -&s.l }
}
