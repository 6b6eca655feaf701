//! Tensor Gauss-Legendre quadrature on boxes and simplices.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// Legendre recurrence).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite rule on a box with `panels` equal panels per axis.
pub fn tensor_box(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], panels: usize, order: usize) -> f64 {
    let dim = lo.len();
    let (gx, gw) = gauss_legendre(order);
    // 1-d composite nodes per axis
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..dim)
        .map(|d| {
            let h = (hi[d] - lo[d]) / panels as f64;
            let mut nodes = Vec::with_capacity(panels * order);
            let mut weights = Vec::with_capacity(panels * order);
            for p in 0..panels {
                let a = lo[d] + p as f64 * h;
                for (x, w) in gx.iter().zip(&gw) {
                    nodes.push(a + 0.5 * h * (x + 1.0));
                    weights.push(0.5 * h * w);
                }
            }
            (nodes, weights)
        })
        .collect();
    let per = panels * order;
    let total = per.pow(dim as u32);
    let mut point = vec![0.0; dim];
    let mut sum = 0.0;
    for flat in 0..total {
        let mut rest = flat;
        let mut weight = 1.0;
        for d in 0..dim {
            let i = rest % per;
            rest /= per;
            point[d] = axes[d].0[i];
            weight *= axes[d].1[i];
        }
        sum += weight * f(&point);
    }
    sum
}

/// Largest per-axis panel count for a given dimension (keeps the number of
/// evaluations in the low millions).
fn max_panels(dim: usize, order: usize) -> usize {
    let budget = 4.0e6f64;
    let per_axis = budget.powf(1.0 / dim as f64) / order as f64;
    (per_axis.floor() as usize).clamp(1, 256)
}

/// Panel doubling until successive estimates agree to `rel_tol`. Fails when
/// the budget runs out before agreement within `accept_tol`.
pub fn adaptive_box(
    f: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    rel_tol: f64,
    accept_tol: f64,
) -> Result<f64> {
    let order = 12;
    let cap = max_panels(lo.len(), order);
    let mut panels = 1;
    let mut prev = tensor_box(f, lo, hi, panels, order);
    loop {
        if panels * 2 > cap {
            break;
        }
        panels *= 2;
        let cur = tensor_box(f, lo, hi, panels, order);
        let change = (cur - prev).abs();
        prev = cur;
        if change <= rel_tol * cur.abs().max(1e-300) {
            return Ok(cur);
        }
        if panels * 2 > cap {
            if change <= accept_tol * cur.abs().max(1e-300) {
                return Ok(cur);
            }
            return Err(Error::Consistency(format!(
                "quadrature did not converge: last relative change {:.3e}",
                change / cur.abs().max(1e-300)
            )));
        }
    }
    Ok(prev)
}

/// `int g(s) ds` over `{ s >= 0, w . s <= x }` with positive weights `w`,
/// mapped onto the unit cube by the collapsed (Duffy) coordinates.
pub fn simplex_integral(g: &dyn Fn(&[f64]) -> f64, w: &[f64], x: f64, rel_tol: f64, accept_tol: f64) -> Result<f64> {
    let r = w.len();
    if x <= 0.0 {
        return Ok(0.0);
    }
    let scale: f64 = x.powi(r as i32) / w.iter().product::<f64>();
    let h = |u: &[f64]| {
        let mut s = vec![0.0; r];
        let mut left = 1.0;
        let mut jac = 1.0;
        for i in 0..r {
            let t = left * u[i];
            s[i] = x * t / w[i];
            jac *= left;
            left *= 1.0 - u[i];
        }
        g(&s) * jac
    };
    let lo = vec![0.0; r];
    let hi = vec![1.0; r];
    Ok(scale * adaptive_box(&h, &lo, &hi, rel_tol, accept_tol)?)
}
