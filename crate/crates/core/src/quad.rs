//! Quadrature building blocks.
//!
//! Everything on (0, ∞) is integrated in the log variable x = ln r with
//! composite Gauss–Legendre panels.  Algebraic endpoint behaviour r^a turns
//! into exponential decay e^{ax}, and the oscillatory factor r^{iτ} of a
//! Mellin kernel becomes a plain e^{iτx} that a fixed panel width resolves.
//! (Tanh-sinh on (0,1] would cluster nodes exactly where r^{iτ} oscillates
//! without bound.)

use crate::{Error, Result, C64};
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on [−1, 1], Newton on the three-term
/// recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

pub const PANEL_ORDER: usize = 16;

pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

pub fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(32))
}

/// Composite 16-point Gauss–Legendre on [a, b] with `panels` panels.
pub fn gl_composite(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gl16();
    let h = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(panels * PANEL_ORDER);
    let mut w = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in gx.iter().zip(gw) {
            x.push(mid + 0.5 * h * xi);
            w.push(0.5 * h * wi);
        }
    }
    (x, w)
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gl_composite(a, b, panels);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}

/// Nodes and weights on the x = ln r line, truncated where the envelope dies.
#[derive(Debug, Clone)]
pub struct LogGrid {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct LogGridOptions {
    pub panel: f64,
    /// Relative envelope level at which a side is considered finished.
    pub rel_tol: f64,
    /// Consecutive quiet panels required before stopping.
    pub quiet_panels: usize,
    pub x_cap: f64,
}

impl Default for LogGridOptions {
    fn default() -> Self {
        LogGridOptions { panel: 0.25, rel_tol: 1e-17, quiet_panels: 6, x_cap: 700.0 }
    }
}

/// Build a log-line grid for the envelope `env(x) ≥ 0` (typically
/// e^{cx}|h(e^x)|), growing panels outward from x = 0 on both sides.
/// Errors with DivergentTransform when a side reaches the cap still loud.
pub fn log_grid<E: Fn(f64) -> f64>(env: E, opts: LogGridOptions) -> Result<LogGrid> {
    let (gx, gw) = gl16();
    let h = opts.panel;
    let mut xs: Vec<f64> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    let mut peak = 0.0f64;
    let mut sides = [(Vec::new(), Vec::new(), Vec::new()), (Vec::new(), Vec::new(), Vec::new())];
    // panel masses per side; the global peak is needed before deciding quietness,
    // so grow both sides in lockstep
    let mut done = [false, false];
    let mut quiet = [0usize, 0usize];
    let mut p = 0usize;
    while !(done[0] && done[1]) {
        for side in 0..2 {
            if done[side] {
                continue;
            }
            let sign = if side == 0 { 1.0 } else { -1.0 };
            let mid = sign * (p as f64 + 0.5) * h;
            if mid.abs() > opts.x_cap {
                return Err(Error::DivergentTransform(format!(
                    "integrand envelope not decayed at x = {mid:.1} (ln r)"
                )));
            }
            let mut mass = 0.0;
            for (xi, wi) in gx.iter().zip(gw) {
                let x = mid + 0.5 * h * xi;
                let e = env(x);
                if !e.is_finite() {
                    return Err(Error::DivergentTransform(format!("envelope not finite at x = {x:.3}")));
                }
                mass += 0.5 * h * wi * e;
                sides[side].0.push(x);
                sides[side].1.push(0.5 * h * wi);
            }
            sides[side].2.push(mass);
            peak = peak.max(mass);
            if mass <= opts.rel_tol * peak || peak == 0.0 {
                quiet[side] += 1;
            } else {
                quiet[side] = 0;
            }
            if quiet[side] >= opts.quiet_panels && p >= 4 {
                done[side] = true;
            }
        }
        p += 1;
    }
    // left side reversed so x is increasing
    let (lx, lw, _) = &sides[1];
    for i in (0..lx.len()).rev() {
        xs.push(lx[i]);
        ws.push(lw[i]);
    }
    let (rx, rw, _) = &sides[0];
    xs.extend_from_slice(rx);
    ws.extend_from_slice(rw);
    Ok(LogGrid { x: xs, w: ws })
}

/// ∫₀^∞ h(r) r^{s−1} dr for one complex s, on the log line.
pub fn mellin_point<H: Fn(f64) -> f64>(h: H, s: C64) -> Result<C64> {
    let c = s.re;
    let panel = (8.0 / s.im.abs().max(1e-300)).min(0.25);
    let env = |x: f64| (c * x).exp() * h(x.exp()).abs();
    let g = log_grid(env, LogGridOptions { panel, ..Default::default() })?;
    Ok(g.x.iter().zip(&g.w).map(|(&x, &w)| (s * x).exp() * (w * h(x.exp()))).sum())
}

/// ∫₀^∞ g(r) dr for a real integrand.
pub fn half_line<G: Fn(f64) -> f64>(g: G) -> Result<f64> {
    let env = |x: f64| (x.exp() * g(x.exp())).abs();
    let grid = log_grid(env, LogGridOptions::default())?;
    Ok(grid.x.iter().zip(&grid.w).map(|(&x, &w)| w * x.exp() * g(x.exp())).sum())
}

/// ∫_a^b with an adaptive doubling of panels until two levels agree.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mut n = 4;
    let mut prev = integrate(&f, a, b, n);
    while n < 1 << 14 {
        n *= 2;
        let cur = integrate(&f, a, b, n);
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}
