//! Mellin transforms on vertical lines, the identities built on them, and
//! the weighted (Kondrat'ev-type) norms on both sides of the transform.
//!
//! Conventions: h̃(s) = ∫₀^∞ r^{s−1}h(r)dr, h(r) = (1/2π)∫ r^{−c−iτ}h̃(c+iτ)dτ.

use crate::quad::{self, LogGridOptions};
use crate::special::Strip;
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineRule {
    Trapezoid,
    GaussLegendrePanels,
}

/// The line Re s = `re`, truncated to |Im s| ≤ `im_max`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VerticalLine {
    pub re: f64,
    pub im_max: f64,
    pub n_nodes: usize,
    pub rule: LineRule,
}

pub const DEFAULT_IM_MAX: f64 = 40.0;
pub const DEFAULT_NODES: usize = 4096;
/// Largest allowed |g| at the line ends, relative to max |g|.
pub const DEFAULT_TAIL_TOL: f64 = 1e-9;

impl VerticalLine {
    pub fn new(re: f64, im_max: f64, n_nodes: usize, rule: LineRule) -> Result<Self> {
        if !(im_max > 0.0) {
            return Err(Error::Config(format!("line truncation im_max = {im_max} must be positive")));
        }
        if n_nodes < 16 {
            return Err(Error::Config(format!("line needs at least 16 nodes, got {n_nodes}")));
        }
        if rule == LineRule::GaussLegendrePanels && n_nodes % quad::PANEL_ORDER != 0 {
            return Err(Error::Config(format!("panel rule needs a multiple of 16 nodes, got {n_nodes}")));
        }
        Ok(VerticalLine { re, im_max, n_nodes, rule })
    }

    pub fn default_at(re: f64) -> Self {
        VerticalLine { re, im_max: DEFAULT_IM_MAX, n_nodes: DEFAULT_NODES, rule: LineRule::Trapezoid }
    }

    /// Imaginary parts τ_j of the nodes (increasing, symmetric about 0) and
    /// their weights.
    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        match self.rule {
            LineRule::Trapezoid => {
                let n = self.n_nodes;
                let d = 2.0 * self.im_max / (n - 1) as f64;
                let t = (0..n).map(|j| -self.im_max + j as f64 * d).collect();
                let mut w = vec![d; n];
                w[0] = 0.5 * d;
                w[n - 1] = 0.5 * d;
                (t, w)
            }
            LineRule::GaussLegendrePanels => {
                quad::gl_composite(-self.im_max, self.im_max, self.n_nodes / quad::PANEL_ORDER)
            }
        }
    }

    pub fn points(&self) -> Vec<C64> {
        self.nodes().0.into_iter().map(|t| C64::new(self.re, t)).collect()
    }

    pub fn shifted(&self, dre: f64) -> Self {
        VerticalLine { re: self.re + dre, ..*self }
    }
}

/// Values of a transform at the nodes of a line.
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    pub line: VerticalLine,
    pub values: Vec<C64>,
    pub strip: Strip,
}

impl SpectralFunction {
    /// Sample a closed-form transform; the line must lie inside its strip.
    pub fn from_fn<F>(line: VerticalLine, strip: Strip, f: F) -> Result<Self>
    where
        F: Fn(C64) -> Result<C64> + Sync,
    {
        if !strip.contains(C64::new(line.re, 0.0)) {
            return Err(Error::DivergentTransform(format!(
                "abscissa {} outside the strip ({}, {})",
                line.re, strip.re_min, strip.re_max
            )));
        }
        let values = line.points().par_iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?;
        Ok(SpectralFunction { line, values, strip })
    }

    pub fn zero(line: VerticalLine, strip: Strip) -> Self {
        SpectralFunction { line, values: vec![C64::new(0.0, 0.0); line.n_nodes], strip }
    }

    pub fn scaled(&self, a: f64) -> Self {
        SpectralFunction { values: self.values.iter().map(|v| v * a).collect(), ..self.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// max over j of |g(c+iτ_j) − conj g(c−iτ_j)|, relative to max |g|.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.values.len();
        let mut worst = 0.0f64;
        for j in 0..n {
            worst = worst.max((self.values[j] - self.values[n - 1 - j].conj()).norm());
        }
        worst / self.max_abs().max(f64::MIN_POSITIVE)
    }

    fn check_tail(&self, tol: f64) -> Result<()> {
        let peak = self.max_abs();
        let end = self.values[0].norm().max(self.values[self.values.len() - 1].norm());
        if end > tol * peak {
            return Err(Error::TailTooFat { value: end / peak.max(f64::MIN_POSITIVE), tol });
        }
        Ok(())
    }

    /// Multiply pointwise by m(s) on the same line.
    pub fn map<F: Fn(C64, C64) -> C64>(&self, m: F) -> Self {
        let pts = self.line.points();
        let values = pts.iter().zip(&self.values).map(|(&s, &v)| m(s, v)).collect();
        SpectralFunction { values, ..self.clone() }
    }

    /// Transform of h^{(k)}: (−1)^k(s−1)…(s−k)h̃(s−k), which lives on the
    /// line shifted right by k.
    pub fn derivative_transform(&self, k: u32) -> Result<Self> {
        let line = self.line.shifted(k as f64);
        let strip = Strip { re_min: self.strip.re_min + k as f64, re_max: self.strip.re_max + k as f64 };
        if !strip.contains(C64::new(line.re, 0.0)) {
            return Err(Error::StripViolation(format!("Re s = {} after a shift by {k}", line.re)));
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let values = line
            .points()
            .iter()
            .zip(&self.values)
            .map(|(&s, &v)| (1..=k).fold(v * sign, |acc, j| acc * (s - j as f64)))
            .collect();
        Ok(SpectralFunction { line, values, strip })
    }

    /// Transform of (r d/dr)^k h: (−s)^k h̃(s) on the same line.
    pub fn euler_derivative_transform(&self, k: u32) -> Self {
        self.map(|s, v| v * (-s).powu(k))
    }
}

/// Closed-form derivative transform on a requested line: errors when the
/// line, shifted back by k, leaves the strip of h̃.
pub fn derivative_transform_on<F>(h_tilde: F, strip: Strip, k: u32, line: VerticalLine) -> Result<SpectralFunction>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    let back = line.re - k as f64;
    if !strip.contains(C64::new(back, 0.0)) {
        return Err(Error::StripViolation(format!(
            "Re(s−{k}) = {back} outside ({}, {})",
            strip.re_min, strip.re_max
        )));
    }
    let base = SpectralFunction::from_fn(line.shifted(-(k as f64)), strip, h_tilde)?;
    base.derivative_transform(k)
}

/// Quadrature forward transform of a real callback on every node of `line`.
/// The x = ln r grid is built once and shared by all nodes.
pub fn forward_mellin<H>(h: H, line: VerticalLine, strip: Strip) -> Result<SpectralFunction>
where
    H: Fn(f64) -> f64 + Sync,
{
    let c = line.re;
    let panel = (8.0 / line.im_max).min(0.25);
    let env = |x: f64| (c * x).exp() * h(x.exp()).abs();
    let grid = quad::log_grid(env, LogGridOptions { panel, ..Default::default() })?;
    // e^{cx}h(e^x)w, then e^{iτx} per node
    let base: Vec<(f64, f64)> = grid.x.iter().zip(&grid.w).map(|(&x, &w)| (x, w * (c * x).exp() * h(x.exp()))).collect();
    let (taus, _) = line.nodes();
    let values = taus
        .par_iter()
        .map(|&t| base.iter().fold(C64::new(0.0, 0.0), |acc, &(x, b)| acc + C64::from_polar(b, t * x)))
        .collect();
    Ok(SpectralFunction { line, values, strip })
}

/// h(r) = (1/2π)∫ r^{−c−iτ}g(c+iτ)dτ.
pub fn inverse_mellin(g: &SpectralFunction, r: f64) -> Result<C64> {
    inverse_mellin_tol(g, r, DEFAULT_TAIL_TOL)
}

pub fn inverse_mellin_tol(g: &SpectralFunction, r: f64, tail_tol: f64) -> Result<C64> {
    if !(r > 0.0) {
        return Err(Error::Config(format!("inverse transform needs r > 0, got {r}")));
    }
    g.check_tail(tail_tol)?;
    Ok(inverse_unchecked(g, r))
}

fn inverse_unchecked(g: &SpectralFunction, r: f64) -> C64 {
    let (taus, w) = g.line.nodes();
    let lr = r.ln();
    let scale = (-g.line.re * lr).exp() / (2.0 * PI);
    let mut acc = C64::new(0.0, 0.0);
    for ((t, w), v) in taus.iter().zip(&w).zip(&g.values) {
        acc += v * C64::from_polar(*w, -t * lr);
    }
    acc * scale
}

pub fn inverse_mellin_grid(g: &SpectralFunction, rs: &[f64]) -> Result<Vec<C64>> {
    g.check_tail(DEFAULT_TAIL_TOL)?;
    if let Some(r) = rs.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::Config(format!("inverse transform needs r > 0, got {r}")));
    }
    Ok(rs.par_iter().map(|&r| inverse_unchecked(g, r)).collect())
}

fn same_line(have: f64, want: f64) -> Result<()> {
    if (have - want).abs() > 1e-12 * (1.0 + want.abs()) {
        return Err(Error::LineMismatch { have, want });
    }
    Ok(())
}

/// ∫ F(τ)dτ over the whole line for a nonnegative integrand sampled at the
/// nodes, plus a power-law estimate of what lies beyond ±im_max (fitted
/// between |τ| = T/2 and T).  Returns (total, tail part).
pub fn line_integral_with_tail(line: &VerticalLine, f: &[f64]) -> (f64, f64) {
    let (t, w) = line.nodes();
    let body: f64 = f.iter().zip(&w).map(|(f, w)| f * w).sum();
    let peak = f.iter().fold(0.0f64, |m, v| m.max(*v));
    let n = f.len();
    let mut tail = 0.0;
    for (end, mid) in [(0usize, n / 4), (n - 1, n - 1 - n / 4)] {
        let (fe, fm) = (f[end], f[mid]);
        if fe <= 1e-14 * peak || fm <= fe {
            continue;
        }
        let p = (fm / fe).ln() / (t[end] / t[mid]).abs().ln();
        if p > 1.05 {
            tail += fe * t[end].abs() / (p - 1.0);
        }
    }
    (body + tail, tail)
}

/// Spectral side of Parseval: (1/2π)∫|g(a+iτ)|²dτ = ∫₀^∞|h|²r^{2a−1}dr.
pub fn parseval_norm(g: &SpectralFunction, a: f64) -> Result<f64> {
    same_line(g.line.re, a)?;
    let f: Vec<f64> = g.values.iter().map(|v| v.norm_sqr()).collect();
    Ok(line_integral_with_tail(&g.line, &f).0 / (2.0 * PI))
}

/// Physical side of Parseval: ∫₀^∞|h|²r^{2a−1}dr.
pub fn weighted_l2_physical<H: Fn(f64) -> f64>(h: H, a: f64) -> Result<f64> {
    quad::half_line(|r| h(r).powi(2) * r.powf(2.0 * a - 1.0))
}

/// (1/2π)∫ r^{−s}h̃(s)g̃(s) dτ, the transform side of ∫₀^∞h(r/t)g(t)dt/t.
pub fn mellin_convolve(h: &SpectralFunction, g: &SpectralFunction, r: f64) -> Result<C64> {
    same_line(g.line.re, h.line.re)?;
    if h.line != g.line {
        return Err(Error::Config("convolution factors sampled on different node sets".into()));
    }
    let common = Strip { re_min: h.strip.re_min.max(g.strip.re_min), re_max: h.strip.re_max.min(g.strip.re_max) };
    if !common.contains(C64::new(h.line.re, 0.0)) {
        return Err(Error::DivergentTransform(format!(
            "no common strip at Re s = {} ((h) {:?}, (g) {:?})",
            h.line.re, h.strip, g.strip
        )));
    }
    let prod = SpectralFunction {
        line: h.line,
        values: h.values.iter().zip(&g.values).map(|(a, b)| a * b).collect(),
        strip: common,
    };
    inverse_mellin(&prod, r)
}

/// Direct quadrature of ∫₀^∞ h(r/t)g(t)dt/t, as ∫ h(re^{−x})g(e^x)dx.
pub fn mellin_convolve_direct<H, G>(h: H, g: G, r: f64) -> Result<f64>
where
    H: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let f = |x: f64| h(r * (-x).exp()) * g(x.exp());
    let grid = quad::log_grid(|x| f(x).abs(), LogGridOptions { panel: 0.125, ..Default::default() })?;
    Ok(grid.x.iter().zip(&grid.w).map(|(&x, &w)| w * f(x)).sum())
}

/// Sobolev index k and weight μ of H^{k+½}_μ(ℝ₊) and H^{k+1}_μ.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormParams {
    pub k: u32,
    pub mu: f64,
}

impl NormParams {
    /// Enforces −1 < μ−k−2 < −1/2.
    pub fn new(k: u32, mu: f64) -> Result<Self> {
        let e = mu - k as f64 - 2.0;
        if !(e > -1.0 && e < -0.5) {
            return Err(Error::Config(format!(
                "weight window −1 < μ−k−2 < −1/2 violated: μ−k−2 = {e} (k = {k}, μ = {mu})"
            )));
        }
        Ok(NormParams { k, mu })
    }

    /// ν = 2(μ−k)−1.
    pub fn nu(&self) -> f64 {
        2.0 * (self.mu - self.k as f64) - 1.0
    }
}

/// (∫|g|²(1+|s|)^{2k+1}dτ/2π)^{½} on Re s = μ−k.
pub fn half_norm_spectral(g: &SpectralFunction, p: NormParams) -> Result<f64> {
    half_norm_index(g, p.k, p.mu)
}

/// As [`half_norm_spectral`] without the weight-window check, for the
/// shifted indices (k+2 etc.) used on the solution.
pub fn half_norm_index(g: &SpectralFunction, k: u32, mu: f64) -> Result<f64> {
    same_line(g.line.re, mu - k as f64)?;
    let (t, _) = g.line.nodes();
    let e = 2 * k as i32 + 1;
    let f: Vec<f64> = t
        .iter()
        .zip(&g.values)
        .map(|(&t, v)| v.norm_sqr() * (1.0 + C64::new(g.line.re, t).norm()).powi(e))
        .collect();
    Ok((line_integral_with_tail(&g.line, &f).0 / (2.0 * PI)).sqrt())
}

/// Physical H^{k+½}_μ(ℝ₊) norm: Σ_l ∫ r^{2(μ−k+l)−1}|h^{(l)}|²dr plus the
/// seminorm ∫ r^{2μ}∫₀^r |h^{(k)}(r+ρ) − h^{(k)}(r)|²dρ/ρ² dr.  `d(r, l)`
/// returns h^{(l)}(r).
pub fn half_norm_physical<D>(d: D, p: NormParams) -> Result<f64>
where
    D: Fn(f64, u32) -> f64 + Sync,
{
    let k = p.k;
    let mut total = 0.0;
    for l in 0..=k {
        let a = p.mu - k as f64 + l as f64;
        total += weighted_l2_physical(|r| d(r, l), a)?;
    }
    total += half_seminorm(|r| d(r, k), p.mu)?;
    Ok(total.sqrt())
}

/// ∫₀^∞ r^{2μ}∫₀^r |D(r+ρ)−D(r)|²dρ/ρ² dr, inner variable ρ = ru.  In
/// x = ln r this is ∫ e^{2μx}∫₀¹|D(e^x(1+u))−D(e^x)|²u^{−2}du dx.
pub fn half_seminorm<D: Fn(f64) -> f64>(d: D, mu: f64) -> Result<f64> {
    let (ux, uw) = quad::gl_composite(0.0, 1.0, 4);
    let inner = |x: f64| {
        let r = x.exp();
        let d0 = d(r);
        let s: f64 = ux.iter().zip(&uw).map(|(&u, &w)| w * ((d(r * (1.0 + u)) - d0) / u).powi(2)).sum();
        (2.0 * mu * x).exp() * s
    };
    let grid = quad::log_grid(|x| inner(x).abs(), LogGridOptions { panel: 0.25, rel_tol: 1e-15, ..Default::default() })?;
    Ok(grid.x.iter().zip(&grid.w).map(|(&x, &w)| w * inner(x)).sum())
}

/// A field sampled on a tensor grid: r log-spaced (uniform in ln r), θ
/// uniform including both ends.  `values[i][j]` = p(r_i, θ_j).
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl PolarGrid {
    pub fn sample<P: Fn(f64, f64) -> f64 + Sync>(r: Vec<f64>, theta: Vec<f64>, p: P) -> Self {
        let values = r.par_iter().map(|&ri| theta.iter().map(|&t| p(ri, t)).collect()).collect();
        PolarGrid { r, theta, values }
    }

    fn every_other(&self) -> PolarGrid {
        let r: Vec<f64> = self.r.iter().step_by(2).copied().collect();
        let theta: Vec<f64> = self.theta.iter().step_by(2).copied().collect();
        let values = self.values.iter().step_by(2).map(|row| row.iter().step_by(2).copied().collect()).collect();
        PolarGrid { r, theta, values }
    }
}

/// Second-order first difference of uniformly spaced samples (one-sided at
/// the ends).
fn diff(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d
}

fn trapezoid(v: &[f64], h: f64) -> f64 {
    let n = v.len();
    h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1]))
}

fn polar_norm_sq(g: &PolarGrid, p: NormParams) -> Result<f64> {
    let (nr, nt) = (g.r.len(), g.theta.len());
    if nr < 2 * p.k as usize + 3 || nt < 2 * p.k as usize + 3 {
        return Err(Error::GridTooCoarse(format!("{nr}×{nt} grid for k = {}", p.k)));
    }
    let hx = (g.r[nr - 1] / g.r[0]).ln() / (nr - 1) as f64;
    let ht = (g.theta[nt - 1] - g.theta[0]) / (nt - 1) as f64;
    let k = p.k as usize;
    // rx[l][i][j] = (r∂r)^l p = ∂x^l p
    let mut cur: Vec<Vec<f64>> = g.values.clone();
    let mut acc = vec![0.0; nr];
    for l in 0..=k {
        // θ-derivatives of the current radial derivative, orders 0..k−l
        for (i, row) in cur.iter().enumerate() {
            let mut d = row.clone();
            for m in 0..=(k - l) {
                if m > 0 {
                    d = diff(&d, ht);
                }
                let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
                acc[i] += trapezoid(&sq, ht);
            }
        }
        if l < k {
            // next radial derivative, column by column
            let mut next = vec![vec![0.0; nt]; nr];
            for j in 0..nt {
                let col: Vec<f64> = cur.iter().map(|row| row[j]).collect();
                for (i, v) in diff(&col, hx).into_iter().enumerate() {
                    next[i][j] = v;
                }
            }
            cur = next;
        }
    }
    // ∫ r^{2(μ−k)+1}(…)dr = ∫ e^{(2(μ−k)+2)x}(…)dx
    let e = 2.0 * (p.mu - k as f64) + 2.0;
    let radial: Vec<f64> = g.r.iter().zip(&acc).map(|(r, a)| r.powf(e) * a).collect();
    Ok(trapezoid(&radial, hx))
}

/// ‖p‖_{k,μ} from polar samples by finite differences; the spacing error is
/// estimated against the every-other-point subgrid.
pub fn weighted_norm_polar(g: &PolarGrid, p: NormParams) -> Result<f64> {
    let fine = polar_norm_sq(g, p)?.sqrt();
    let coarse = polar_norm_sq(&g.every_other(), p)?.sqrt();
    let est = (fine - coarse).abs() / 3.0;
    if est > 0.1 * fine {
        return Err(Error::GridTooCoarse(format!("difference error {est:.3e} against norm {fine:.3e}")));
    }
    Ok(fine)
}

/// ‖p‖_{k,μ} with exact polar derivatives: `d(r, θ, l, m)` returns
/// (r∂r)^l ∂θ^m p.
pub fn weighted_norm_polar_exact<D>(d: D, p: NormParams) -> Result<f64>
where
    D: Fn(f64, f64, u32, u32) -> f64 + Sync,
{
    let k = p.k;
    let (tx, tw) = quad::gl_composite(-PI, PI, 16);
    let e = 2.0 * (p.mu - k as f64) + 1.0;
    let integrand = |r: f64| {
        let mut s = 0.0;
        for l in 0..=k {
            for m in 0..=(k - l) {
                s += tx.iter().zip(&tw).map(|(&t, &w)| w * d(r, t, l, m).powi(2)).sum::<f64>();
            }
        }
        r.powf(e) * s
    };
    Ok(quad::half_line(integrand)?.sqrt())
}

/// The Cartesian H^k_μ(Ω) norm Σ_{|a|≤k}∫|x|^{2(μ−k+|a|)}|D^a p|²dx,
/// integrated in polar coordinates.  `d(x1, x2, a1, a2)` returns
/// ∂₁^{a1}∂₂^{a2}p.
pub fn weighted_norm_cartesian<D>(d: D, p: NormParams) -> Result<f64>
where
    D: Fn(f64, f64, u32, u32) -> f64 + Sync,
{
    let k = p.k;
    let (tx, tw) = quad::gl_composite(-PI, PI, 16);
    let integrand = |r: f64| {
        let mut s = 0.0;
        for order in 0..=k {
            let wgt = r.powf(2.0 * (p.mu - k as f64 + order as f64));
            for a1 in 0..=order {
                let a2 = order - a1;
                let ang: f64 =
                    tx.iter().zip(&tw).map(|(&t, &w)| w * d(r * t.cos(), r * t.sin(), a1, a2).powi(2)).sum();
                s += wgt * ang;
            }
        }
        s * r
    };
    Ok(quad::half_line(integrand)?.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_nodes_symmetric() {
        let l = VerticalLine::new(0.5, 10.0, 17, LineRule::Trapezoid).unwrap();
        let (t, w) = l.nodes();
        assert_eq!(t.len(), 17);
        assert!(t[8].abs() < 1e-15 && (t[0] + t[16]).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 20.0).abs() < 1e-12);
        assert!(VerticalLine::new(0.5, 10.0, 8, LineRule::Trapezoid).is_err());
        assert!(VerticalLine::new(0.5, 10.0, 40, LineRule::GaussLegendrePanels).is_err());
    }

    #[test]
    fn finite_difference_orders() {
        let x: Vec<f64> = (0..21).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = x.iter().map(|x| x * x).collect();
        let d = diff(&v, 0.1);
        for (xi, di) in x.iter().zip(&d) {
            assert!((di - 2.0 * xi).abs() < 1e-12);
        }
    }
}
