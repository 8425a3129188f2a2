//! The spectral solution q̃(λ) of the difference equation
//! κ₀d(λ+1) + ω(λ)d(λ) = −f̃(λ+2)/(λ+1), d = q̃·tan λπ, in three equivalent
//! integral forms, and its inversion to the physical q(r), p(r, θ).
//!
//! All three forms share the factor
//!   G(λ, ζ) = (κ₀π)^ζ · K(λ+1)/K(λ+ζ+1) · f̃(λ+ζ+2)/(λ(λ+ζ+1)) / (2i sin πζ),
//! integrated over ζ: along L₀,ε (up the imaginary axis, detouring left of
//! ζ = 0), as a principal value along the axis, or along Re ζ = ϑ after
//! extracting the residue at 0.
//!
//! On a trapezoid line the ζ-sums become correlations: with ζ on the τ-grid
//! the λ+ζ-dependent part b(λ+ζ+1) = f̃(λ+ζ+2)/((λ+ζ+1)K(λ+ζ+1)) is
//! tabulated once and shared by every node.

use crate::mellin::{LineRule, NormParams, SpectralFunction, VerticalLine, DEFAULT_IM_MAX, DEFAULT_NODES, DEFAULT_TAIL_TOL};
use crate::quad;
use crate::source::{check_compatibility, SourceTerm, DEFAULT_COMPAT_REL_TOL};
use crate::special::{ln_k, Strip, I};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub k: u32,
    pub mu: f64,
    /// Line carrying q̃ for q, q′, q″ and the norms; in (−1, −½).
    pub inversion_line_re: f64,
    /// Line carrying p and its θ-derivatives; in (−½, 0), right of the
    /// pole of 1/cos λπ at −½.
    pub field_line_re: f64,
    pub contour_eps: f64,
    /// Accepted for configuration compatibility; the folded PV integrand
    /// needs no excision (see `q_tilde_pv`).
    pub pv_reg_width: f64,
    pub y_max: f64,
    /// ϑ of the split contour; `None` picks (ν−1)/2 + 0.15.
    pub vartheta: Option<f64>,
    pub line_im_max: f64,
    pub line_nodes: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub tail_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            kappa1: 1.0,
            kappa2: 1.0,
            k: 0,
            mu: 1.25,
            inversion_line_re: -0.75,
            field_line_re: -0.25,
            contour_eps: 0.25,
            pv_reg_width: 1e-3,
            y_max: 12.0,
            vartheta: None,
            line_im_max: DEFAULT_IM_MAX,
            line_nodes: DEFAULT_NODES,
            r_min: 1e-3,
            r_max: 1e3,
            n_r: 400,
            n_theta: 256,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

fn violated(what: &str, detail: String) -> Error {
    Error::Config(format!("{what} violated: {detail}"))
}

impl SolverParams {
    pub fn kappa0(&self) -> f64 {
        2.0 * self.kappa2
    }

    pub fn nu(&self) -> f64 {
        2.0 * (self.mu - self.k as f64) - 1.0
    }

    pub fn vartheta(&self) -> f64 {
        self.vartheta.unwrap_or((self.nu() - 1.0) / 2.0 + 0.15)
    }

    /// α = 2 + 2ϑ − ν.
    pub fn alpha(&self) -> f64 {
        2.0 + 2.0 * self.vartheta() - self.nu()
    }

    pub fn norm_params(&self) -> Result<NormParams> {
        NormParams::new(self.k, self.mu)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa1 > 0.0) {
            return Err(violated("κ₁ > 0", format!("κ₁ = {}", self.kappa1)));
        }
        if !(self.kappa2 > 0.0) {
            return Err(violated("κ₂ > 0", format!("κ₂ = {}", self.kappa2)));
        }
        self.norm_params()?;
        let (nu, th) = (self.nu(), self.vartheta());
        if !(th > (nu - 1.0) / 2.0 && th < nu / 2.0) {
            return Err(violated("(ν−1)/2 < ϑ < ν/2", format!("ϑ = {th}, ν = {nu}")));
        }
        let c = self.inversion_line_re;
        if !(c > -1.0 && c < -0.5) {
            return Err(violated("−1 < inversion_line_re < −1/2", format!("{c}")));
        }
        let c = self.field_line_re;
        if !(c > -0.5 && c < 0.0) {
            return Err(violated("−1/2 < field_line_re < 0", format!("{c}")));
        }
        if !(self.contour_eps > 0.0 && self.contour_eps < 0.5) {
            return Err(violated("0 < contour_eps < 1/2", format!("{}", self.contour_eps)));
        }
        if !(self.pv_reg_width > 0.0) {
            return Err(violated("pv_reg_width > 0", format!("{}", self.pv_reg_width)));
        }
        if !(self.y_max >= 4.0) {
            return Err(violated("y_max ≥ 4", format!("{}", self.y_max)));
        }
        if !(self.r_min > 0.0 && self.r_max > self.r_min) {
            return Err(violated("0 < r_min < r_max", format!("[{}, {}]", self.r_min, self.r_max)));
        }
        if self.n_r < 8 || self.n_theta < 8 {
            return Err(violated("n_r, n_theta ≥ 8", format!("{} × {}", self.n_r, self.n_theta)));
        }
        if !(self.tail_tol > 0.0) {
            return Err(violated("tail_tol > 0", format!("{}", self.tail_tol)));
        }
        self.inversion_line()?;
        Ok(())
    }

    pub fn inversion_line(&self) -> Result<VerticalLine> {
        VerticalLine::new(self.inversion_line_re, self.line_im_max, self.line_nodes, LineRule::Trapezoid)
    }

    pub fn field_line(&self) -> Result<VerticalLine> {
        VerticalLine::new(self.field_line_re, self.line_im_max, self.line_nodes, LineRule::Trapezoid)
    }

    /// Log-spaced r_min … r_max.
    pub fn r_grid(&self) -> Vec<f64> {
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        let n = self.n_r;
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    /// n_theta uniform points on (−π, π].
    pub fn theta_grid(&self) -> Vec<f64> {
        let n = self.n_theta;
        (1..=n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
    }
}

/// b(z) = f̃(z+1)/(z·K(z)).
fn b_factor(z: C64, f: &SourceTerm) -> Result<C64> {
    Ok(f.mellin(z + 1.0)? * (-ln_k(z)?).exp() / z)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().fold(f64::INFINITY, |m, &x| m.min(x))
}

/// Step of the folded PV rule for Re λ = c: a fifth of the distance from the
/// y-axis to the nearest singularity of the integrand (1/sinh at ±i, 1/K,
/// 1/(λ+iy+1), and the strip edges of f̃), which puts the trapezoid error at
/// e^{−10π}.
fn pv_step(c: f64, f: &SourceTerm) -> f64 {
    let s = f.strip();
    min_of(&[1.0, 0.5 - c, c + 2.0, (c + 1.0).abs(), c + 2.0 - s.re_min, s.re_max - c - 2.0]) / 5.0
}

/// Same for the trapezoid along Re ζ = ϑ.
fn split_step(c: f64, th: f64, f: &SourceTerm) -> f64 {
    let s = f.strip();
    let z = c + th + 1.0;
    min_of(&[th, 1.0 - th, z + 1.0, 1.5 - z, z.abs(), z + 1.0 - s.re_min, s.re_max - z - 1.0]) / 5.0
}

fn need_re(lambda: C64, lo: f64, hi: f64) -> Result<()> {
    if lambda.re > lo && lambda.re < hi {
        Ok(())
    } else {
        Err(Error::Domain { arg: format!("λ = {lambda}"), re_min: lo, re_max: hi })
    }
}

/// λ·q̃(λ) from the PV form; analytic through λ = 0, so it also yields the
/// residue there.
///
/// The PV is folded onto y > 0: the integrand (g(y) − g(−y))/(2 sinh πy) is
/// bounded at 0 (the odd singular part cancels exactly), so the midpoint
/// rule applies without excision.
fn lambda_q_pv(lambda: C64, f: &SourceTerm, p: &SolverParams) -> Result<C64> {
    need_re(lambda, -1.0, 0.5)?;
    let h = pv_step(lambda.re, f);
    let m = (p.y_max / h).round().max(1.0) as usize;
    let lkp = (p.kappa0() * PI).ln();
    let lk1 = ln_k(lambda + 1.0)?;
    let g = |y: f64| -> Result<C64> { Ok((I * y * lkp + lk1).exp() * b_factor(lambda + 1.0 + I * y, f)?) };
    let mut acc = C64::new(0.0, 0.0);
    let mut last = 0.0;
    for j in 0..m {
        let y = (j as f64 + 0.5) * h;
        let t = (g(y)? - g(-y)?) / (2.0 * (PI * y).sinh());
        acc += t * h;
        last = t.norm();
    }
    let pole = f.mellin(lambda + 2.0)? / (2.0 * (lambda + 1.0));
    let total = -I * acc - pole;
    tail_check(last / PI, total.norm() + pole.norm(), p.tail_tol)?;
    Ok(total)
}

fn tail_check(tail: f64, scale: f64, tol: f64) -> Result<()> {
    if scale > 0.0 && tail > tol * scale {
        return Err(Error::TailTooFat { value: tail / scale, tol });
    }
    Ok(())
}

/// q̃(λ) = −i·PV∫(κ₀π)^{iy}K(λ+1)/K(λ+iy+1)·f̃(λ+iy+2)/(λ(λ+iy+1))·dy/(2 sinh πy)
///        − f̃(λ+2)/(2λ(λ+1)),
/// for Re λ ∈ (−1, ½), λ ≠ 0 (the wider range serves the shifted point
/// λ+1 of the difference-equation check).
pub fn q_tilde_pv(lambda: C64, f: &SourceTerm, p: &SolverParams) -> Result<C64> {
    if lambda.norm() == 0.0 {
        return Err(Error::Pole("q̃ at λ = 0".into()));
    }
    Ok(lambda_q_pv(lambda, f, p)? / lambda)
}

/// −Res_{λ=0} q̃: the constant the line integrals tend to as r → ∞.
pub fn q_infinity(f: &SourceTerm, p: &SolverParams) -> Result<f64> {
    Ok(-lambda_q_pv(C64::new(0.0, 0.0), f, p)?.re)
}

/// ∫ over L₀,ε of g: up the imaginary axis for |Im ζ| ∈ [ε, Y], around the
/// left half of |ζ| = ε.  `axis_dist` is the distance of the nearest
/// integrand singularity from the axis, which caps the panel width.
fn l0_eps_integral<G>(g: G, eps: f64, y_max: f64, axis_dist: f64) -> Result<(C64, f64, f64)>
where
    G: Fn(C64) -> Result<C64>,
{
    let (gx, gw) = quad::gl16();
    let mut acc = C64::new(0.0, 0.0);
    let mut peak = 0.0f64;
    let width = (0.8 * axis_dist).min(0.2);
    let mut a = eps;
    let mut first = true;
    while a < y_max {
        let b = if first { (2.0 * eps).min(y_max) } else { (a + width).min(y_max) };
        first = false;
        for (x, w) in gx.iter().zip(gw) {
            let eta = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let (up, down) = (g(C64::new(0.0, eta))?, g(C64::new(0.0, -eta))?);
            peak = peak.max(up.norm()).max(down.norm());
            acc += I * (up + down) * (0.5 * (b - a) * w);
        }
        a = b;
    }
    // semicircle from −iε through −ε to +iε: φ runs from 3π/2 down to π/2
    let (lo, hi) = (0.5 * PI, 1.5 * PI);
    let panels = 4;
    let dp = (hi - lo) / panels as f64;
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * dp;
        for (x, w) in gx.iter().zip(gw) {
            let phi = mid + 0.5 * dp * x;
            let e = C64::from_polar(eps, phi);
            let v = g(e)?;
            peak = peak.max(v.norm());
            acc -= v * I * e * (0.5 * dp * w);
        }
    }
    let tail = (g(C64::new(0.0, y_max))?.norm() + g(C64::new(0.0, -y_max))?.norm()) / PI;
    Ok((acc, tail, peak))
}

/// The pole of 1/(λ+ζ+1) sits at ζ* = −(λ+1), left of the axis; it must stay
/// outside the indentation.
fn check_indentation(lambda: C64, eps: f64) -> Result<()> {
    let d = (lambda + 1.0).norm();
    if d <= eps * 1.02 {
        return Err(Error::ContourPoleClash(format!(
            "pole ζ = −(λ+1) at distance {d:.4} lies on or inside the indentation of radius ε = {eps}; use ε < {d:.4}"
        )));
    }
    Ok(())
}

/// q̃(λ) = ∫_{L₀,ε} G(λ, ζ) dζ, Re λ ∈ (−1, −½).
pub fn q_tilde_contour(lambda: C64, f: &SourceTerm, p: &SolverParams) -> Result<C64> {
    need_re(lambda, -1.0, -0.5)?;
    check_indentation(lambda, p.contour_eps)?;
    let lkp = (p.kappa0() * PI).ln();
    let lk1 = ln_k(lambda + 1.0)?;
    let g = |z: C64| -> Result<C64> {
        Ok((z * lkp + lk1).exp() * b_factor(lambda + z + 1.0, f)? / (lambda * 2.0 * I * (z * PI).sin()))
    };
    let (v, tail, peak) = l0_eps_integral(g, p.contour_eps, p.y_max, lambda.re + 1.0)?;
    tail_check(tail, v.norm().max(peak * 1e-3), p.tail_tol)?;
    Ok(v)
}

/// h(λ) = −f̃(λ+2)/(κ₀(λ+1)d₀(λ+1)), right side of y(λ+1) − y(λ) = h(λ).
pub fn h_rhs(lambda: C64, f: &SourceTerm, p: &SolverParams) -> Result<C64> {
    let k0 = p.kappa0();
    let z = lambda + 1.0;
    let ln_d0 = I * z * PI + (C64::new(0.5, 0.0) - z) * (k0 * PI).ln() + ln_k(z)?;
    Ok(-f.mellin(lambda + 2.0)? * (-ln_d0).exp() / (k0 * z))
}

/// y(λ) = (1/2i)∫_{L₀,ε} h(λ+ζ)(cot ζπ + i)dζ.  Defined by the integral
/// wherever it converges; the solution property holds for Re λ ∈ (−1, −½).
pub fn y_contour(lambda: C64, f: &SourceTerm, p: &SolverParams) -> Result<C64> {
    need_re(lambda, -1.0, 0.5)?;
    check_indentation(lambda, p.contour_eps)?;
    // cot ζπ + i = e^{iπζ}/sin πζ
    let g = |z: C64| -> Result<C64> { Ok(h_rhs(lambda + z, f, p)? * (I * PI * z).exp() / ((z * PI).sin() * 2.0 * I)) };
    // h(λ+ζ) carries e^{−iπζ}-type growth from 1/d₀ that the cot factor only
    // tames below Im ζ ≈ −Im λ, so the window follows λ
    let y = p.y_max + lambda.im.abs();
    let (v, tail, peak) = l0_eps_integral(g, p.contour_eps, y, (lambda.re + 1.0).abs())?;
    tail_check(tail, v.norm().max(peak * 1e-3), p.tail_tol)?;
    Ok(v)
}

/// (q̃₁, q̃₂): q̃₁ = −f̃(λ+2)/(λ(λ+1)) is the residue of G at ζ = 0 picked up
/// when L₀,ε is moved to Re ζ = ϑ; q̃₂ is the integral over that line.
pub fn q_split(lambda: C64, f: &SourceTerm, p: &SolverParams) -> Result<(C64, C64)> {
    need_re(lambda, -1.0, -0.5)?;
    let th = p.vartheta();
    let q1 = -f.mellin(lambda + 2.0)? / (lambda * (lambda + 1.0));
    let h = split_step(lambda.re, th, f);
    let m = (p.y_max / h).round() as i64;
    let lkp = (p.kappa0() * PI).ln();
    let lk1 = ln_k(lambda + 1.0)?;
    let mut acc = C64::new(0.0, 0.0);
    let mut ends = 0.0;
    for j in -m..=m {
        let z = C64::new(th, j as f64 * h);
        let v = (z * lkp + lk1).exp() * b_factor(lambda + z + 1.0, f)? / (lambda * 2.0 * I * (z * PI).sin());
        acc += v * I * h;
        if j.abs() == m {
            ends += v.norm();
        }
    }
    tail_check(ends / PI, acc.norm() + q1.norm(), p.tail_tol)?;
    Ok((q1, acc))
}

/// Residual of κ₀d(λ+1) + ω(λ)d(λ) + f̃(λ+2)/(λ+1) with d = q̃ tan λπ, both
/// q̃ values from the PV form.  Returns (|residual|, |f̃(λ+2)/(λ+1)|).
pub fn difference_residual(lambda: C64, f: &SourceTerm, p: &SolverParams) -> Result<(f64, f64)> {
    let d = |l: C64| -> Result<C64> { Ok(q_tilde_pv(l, f, p)? * (l * PI).tan()) };
    let rhs = f.mellin(lambda + 2.0)? / (lambda + 1.0);
    let w = crate::special::omega(lambda)?.value;
    let res = p.kappa0() * d(lambda + 1.0)? + w * d(lambda)? + rhs;
    Ok((res.norm(), rhs.norm()))
}

/// Node layout for correlations on a trapezoid line: the ζ-grid is the
/// τ-grid refined by an integer factor, so every λ_j + ζ_m is a table point.
struct Table {
    refine: usize,
    pad: usize,
    b: Vec<C64>,
}

impl Table {
    fn build(line: &VerticalLine, refine: usize, pad: usize, b: impl Fn(f64) -> Result<C64> + Sync) -> Result<Self> {
        let (tau, _) = line.nodes();
        let delta = (tau[1] - tau[0]) / refine as f64;
        let len = (tau.len() - 1) * refine + 2 * pad + 1;
        let tau0 = tau[0];
        let b = (0..len)
            .into_par_iter()
            .map(|e| b(tau0 + (e as f64 - pad as f64) * delta))
            .collect::<Result<Vec<_>>>()?;
        Ok(Table { refine, pad, b })
    }

    /// Σ_m c_m b(τ_j + o_m δ) for node j.
    fn correlate(&self, j: usize, terms: &[(i64, C64)]) -> C64 {
        let base = (j * self.refine + self.pad) as i64;
        terms.iter().fold(C64::new(0.0, 0.0), |acc, &(o, c)| acc + c * self.b[(base + o) as usize])
    }
}

fn need_trapezoid(line: &VerticalLine) -> Result<()> {
    if line.rule != LineRule::Trapezoid {
        return Err(Error::Config("full-line evaluation needs a trapezoid line".into()));
    }
    Ok(())
}

/// Solution strip of q̃: between its poles at −1 and 0.
pub const Q_STRIP: Strip = Strip { re_min: -1.0, re_max: 0.0 };

/// q̃ at every node of a trapezoid line with Re λ ∈ (−1, 0), via the PV form
/// as a correlation.  Returns the values and the PV step used.
pub fn q_tilde_line(line: VerticalLine, f: &SourceTerm, p: &SolverParams) -> Result<(SpectralFunction, f64)> {
    need_trapezoid(&line)?;
    let c = line.re;
    need_re(C64::new(c, 0.0), -1.0, 0.0)?;
    let (tau, _) = line.nodes();
    let dtau = tau[1] - tau[0];
    let ht = pv_step(c, f);
    let refine = (2.0 * dtau / ht).ceil().max(1.0) as usize;
    let delta = dtau / refine as f64;
    let stride = ((ht / (2.0 * delta)).floor() as usize).max(1);
    let h = 2.0 * stride as f64 * delta;
    let m = (p.y_max / h).round().max(1.0) as usize;
    let lkp = (p.kappa0() * PI).ln();
    let mut terms = Vec::with_capacity(2 * m);
    for j in 0..m {
        let o = ((2 * j + 1) * stride) as i64;
        let y = o as f64 * delta;
        let s = 2.0 * (PI * y).sinh();
        terms.push((o, (I * y * lkp).exp() * (h / s)));
        terms.push((-o, -(-I * y * lkp).exp() * (h / s)));
    }
    let pad = ((2 * m - 1) * stride).max(1);
    let table = Table::build(&line, refine, pad, |u| b_factor(C64::new(c + 1.0, u), f))?;
    let ends = [terms[terms.len() - 2], terms[terms.len() - 1]];
    let rows = tau
        .par_iter()
        .enumerate()
        .map(|(j, &t)| {
            let l = C64::new(c, t);
            let k1 = ln_k(l + 1.0)?.exp();
            let pv = table.correlate(j, &terms);
            let pole = f.mellin(l + 2.0)? / (2.0 * (l + 1.0));
            let tail = (k1 * table.correlate(j, &ends)).norm() / (h * PI);
            Ok(((-I * k1 * pv - pole) / l, tail / l.norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<C64> = rows.iter().map(|r| r.0).collect();
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let tail = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    tail_check(tail, peak, p.tail_tol)?;
    Ok((SpectralFunction { line, values, strip: Q_STRIP }, h))
}

/// (q̃₁, q̃₂) at every node of a trapezoid line with Re λ ∈ (−1, −½).
pub fn split_on_line(line: VerticalLine, f: &SourceTerm, p: &SolverParams) -> Result<(SpectralFunction, SpectralFunction)> {
    need_trapezoid(&line)?;
    let c = line.re;
    need_re(C64::new(c, 0.0), -1.0, -0.5)?;
    let th = p.vartheta();
    let (tau, _) = line.nodes();
    let dtau = tau[1] - tau[0];
    let ht = split_step(c, th, f);
    let refine = (dtau / ht).ceil().max(1.0) as usize;
    let delta = dtau / refine as f64;
    let stride = ((ht / delta).floor() as usize).max(1);
    let h = stride as f64 * delta;
    let m = (p.y_max / h).round().max(1.0) as i64;
    let lkp = (p.kappa0() * PI).ln();
    let terms: Vec<(i64, C64)> = (-m..=m)
        .map(|j| {
            let o = j * stride as i64;
            let z = C64::new(th, o as f64 * delta);
            (o, (z * lkp).exp() * h / ((z * PI).sin() * 2.0))
        })
        .collect();
    let pad = (m as usize * stride).max(1);
    let table = Table::build(&line, refine, pad, |u| b_factor(C64::new(c + th + 1.0, u), f))?;
    let rows = tau
        .par_iter()
        .enumerate()
        .map(|(j, &t)| {
            let l = C64::new(c, t);
            let k1 = ln_k(l + 1.0)?.exp();
            let q1 = -f.mellin(l + 2.0)? / (l * (l + 1.0));
            Ok((q1, k1 * table.correlate(j, &terms) / l))
        })
        .collect::<Result<Vec<_>>>()?;
    let strip = Strip { re_min: -1.0, re_max: -0.5 };
    Ok((
        SpectralFunction { line, values: rows.iter().map(|r| r.0).collect(), strip },
        SpectralFunction { line, values: rows.iter().map(|r| r.1).collect(), strip },
    ))
}

/// A real inverse transform r ↦ (1/2π)∫ r^{−λ}m(λ)g(λ)dτ reduced to the
/// nodes with τ ≥ 0 (conjugate symmetry), the far tail where |g|(1+|λ|)² is
/// negligible dropped.
#[derive(Debug, Clone)]
pub struct LineSeries {
    pub lambda: Vec<C64>,
    coef: Vec<C64>,
}

impl LineSeries {
    pub fn new(g: &SpectralFunction) -> Self {
        let (tau, w) = g.line.nodes();
        let pts = g.line.points();
        let size: Vec<f64> = pts.iter().zip(&g.values).map(|(l, v)| v.norm() * (1.0 + l.norm()).powi(2)).collect();
        let peak = size.iter().fold(0.0f64, |m, &v| m.max(v));
        let tol = 1e-3 * g.line.im_max / g.line.n_nodes as f64;
        let mut lambda = Vec::new();
        let mut coef = Vec::new();
        let mut keep = 0;
        for j in 0..tau.len() {
            if tau[j] < -tol {
                continue;
            }
            let factor = if tau[j].abs() <= tol { 1.0 } else { 2.0 };
            lambda.push(pts[j]);
            coef.push(g.values[j] * (factor * w[j] / (2.0 * PI)));
            if size[j] >= 1e-17 * peak {
                keep = lambda.len();
            }
        }
        lambda.truncate(keep);
        coef.truncate(keep);
        LineSeries { lambda, coef }
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Re Σ_j c_j m(λ_j) r^{−λ_j}.
    pub fn eval<M: Fn(C64) -> C64>(&self, r: f64, m: M) -> f64 {
        let lr = r.ln();
        self.lambda.iter().zip(&self.coef).map(|(&l, &c)| (c * m(l) * (-l * lr).exp()).re).sum()
    }

    /// Same with a table of multipliers m_k(λ_j) shared across r; one row
    /// per k.
    fn eval_rows(&self, r: f64, table: &[Vec<C64>]) -> Vec<f64> {
        let lr = r.ln();
        let b: Vec<C64> = self.lambda.iter().zip(&self.coef).map(|(&l, &c)| c * (-l * lr).exp()).collect();
        table.iter().map(|row| row.iter().zip(&b).map(|(m, b)| (m * b).re).sum()).collect()
    }
}

/// cos(λθ)/cos(λπ): the θ-profile of p̃ with u ≡ 0, v = q̃.
pub fn p_profile(l: C64, theta: f64) -> C64 {
    (l * theta).cos() / (l * PI).cos()
}

/// ∂_θ of [`p_profile`]: −λ sin(λθ)/cos(λπ).
pub fn p_profile_theta(l: C64, theta: f64) -> C64 {
    -l * (l * theta).sin() / (l * PI).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Diagnostics {
    /// y-step of the folded PV rule on the inversion and the field line.
    pub pv_step: f64,
    pub pv_step_field: f64,
    /// Line nodes (τ ≥ 0) actually summed after tail trimming.
    pub nodes_used: usize,
    pub nodes_used_field: usize,
    /// |q̃| at the line ends relative to max |q̃|.
    pub tail_ratio: f64,
    pub tail_ratio_field: f64,
    /// max_r |Im q(r)| / max_r |q(r)| from the full (two-sided) line sum.
    pub imag_leakage: f64,
    pub conjugate_asymmetry: f64,
    /// −Res_{λ=0} q̃, subtracted from q and p.
    pub q_inf: f64,
}

/// Everything a run produces.  q, p are the decaying solution
/// (line integrals minus q_∞); q_tilde is the weighted-space representative.
#[derive(Debug, Clone)]
pub struct SolutionBundle {
    pub params: SolverParams,
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub q_tilde: SpectralFunction,
    pub q_tilde_field: SpectralFunction,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub q_second: Vec<f64>,
    /// p[i][j] = p(r_i, θ_j).
    pub p: Vec<Vec<f64>>,
    pub p_theta_plus: Vec<f64>,
    pub p_theta_minus: Vec<f64>,
    pub diagnostics: Diagnostics,
    inv: LineSeries,
    field: LineSeries,
}

fn end_ratio(g: &SpectralFunction) -> f64 {
    let n = g.values.len();
    g.values[0].norm().max(g.values[n - 1].norm()) / g.max_abs().max(f64::MIN_POSITIVE)
}

impl SolutionBundle {
    pub fn q_inf(&self) -> f64 {
        self.diagnostics.q_inf
    }

    /// Re of the inverse transform of m(λ)q̃(λ) on the inversion line.
    pub fn inversion_eval<M: Fn(C64) -> C64>(&self, r: f64, m: M) -> f64 {
        self.inv.eval(r, m)
    }

    /// Same on the field line.
    pub fn field_eval<M: Fn(C64) -> C64>(&self, r: f64, m: M) -> f64 {
        self.field.eval(r, m)
    }

    pub fn q_at(&self, r: f64) -> f64 {
        self.inv.eval(r, |_| C64::new(1.0, 0.0)) - self.q_inf()
    }

    pub fn q_prime_at(&self, r: f64) -> f64 {
        self.inv.eval(r, |l| -l) / r
    }

    pub fn q_second_at(&self, r: f64) -> f64 {
        self.inv.eval(r, |l| l * (l + 1.0)) / (r * r)
    }

    pub fn p_at(&self, r: f64, theta: f64) -> f64 {
        self.field.eval(r, |l| p_profile(l, theta)) - self.q_inf()
    }

    pub fn p_theta_at(&self, r: f64, theta: f64) -> f64 {
        self.field.eval(r, |l| p_profile_theta(l, theta))
    }
}

fn inverted(series: &LineSeries, rs: &[f64], m: impl Fn(C64) -> C64 + Sync, scale: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    rs.par_iter().map(|&r| series.eval(r, &m) * scale(r)).collect()
}

fn inversion_series(f: &SourceTerm, p: &SolverParams) -> Result<(SpectralFunction, f64, LineSeries)> {
    p.validate()?;
    let (g, h) = q_tilde_line(p.inversion_line()?, f, p)?;
    tail_check(end_ratio(&g), 1.0, p.tail_tol)?;
    let s = LineSeries::new(&g);
    Ok((g, h, s))
}

fn field_series(f: &SourceTerm, p: &SolverParams) -> Result<(SpectralFunction, f64, LineSeries)> {
    p.validate()?;
    let (g, h) = q_tilde_line(p.field_line()?, f, p)?;
    tail_check(end_ratio(&g), 1.0, p.tail_tol)?;
    let s = LineSeries::new(&g);
    Ok((g, h, s))
}

/// q(r) − q_∞ on the given radii.
pub fn q_physical(rs: &[f64], f: &SourceTerm, p: &SolverParams) -> Result<Vec<f64>> {
    let (_, _, s) = inversion_series(f, p)?;
    let qi = q_infinity(f, p)?;
    Ok(inverted(&s, rs, |_| C64::new(1.0, 0.0), |_| 1.0).into_iter().map(|v| v - qi).collect())
}

pub fn q_prime(rs: &[f64], f: &SourceTerm, p: &SolverParams) -> Result<Vec<f64>> {
    let (_, _, s) = inversion_series(f, p)?;
    Ok(inverted(&s, rs, |l| -l, |r| 1.0 / r))
}

pub fn q_second(rs: &[f64], f: &SourceTerm, p: &SolverParams) -> Result<Vec<f64>> {
    let (_, _, s) = inversion_series(f, p)?;
    Ok(inverted(&s, rs, |l| l * (l + 1.0), |r| 1.0 / (r * r)))
}

/// (q′₁, q′₂) on the given radii from the split on the inversion line.
pub fn split_q_prime(rs: &[f64], f: &SourceTerm, p: &SolverParams) -> Result<(Vec<f64>, Vec<f64>)> {
    p.validate()?;
    let (g1, g2) = split_on_line(p.inversion_line()?, f, p)?;
    let (s1, s2) = (LineSeries::new(&g1), LineSeries::new(&g2));
    Ok((inverted(&s1, rs, |l| -l, |r| 1.0 / r), inverted(&s2, rs, |l| -l, |r| 1.0 / r)))
}

fn p_table(series: &LineSeries, thetas: &[f64], m: impl Fn(C64, f64) -> C64 + Sync) -> Vec<Vec<C64>> {
    thetas.par_iter().map(|&t| series.lambda.iter().map(|&l| m(l, t)).collect()).collect()
}

fn p_grid(series: &LineSeries, rs: &[f64], thetas: &[f64], q_inf: f64) -> Vec<Vec<f64>> {
    let table = p_table(series, thetas, p_profile);
    rs.par_iter().map(|&r| series.eval_rows(r, &table).into_iter().map(|v| v - q_inf).collect()).collect()
}

/// p(r, θ) − q_∞ on the tensor grid, inverted on the field line.
pub fn reconstruct_p(rs: &[f64], thetas: &[f64], f: &SourceTerm, p: &SolverParams) -> Result<Vec<Vec<f64>>> {
    if let Some(t) = thetas.iter().find(|t| !(**t > -PI && **t <= PI)) {
        return Err(Error::Config(format!("θ = {t} outside (−π, π]")));
    }
    let (_, _, s) = field_series(f, p)?;
    Ok(p_grid(&s, rs, thetas, q_infinity(f, p)?))
}

/// (p_θ(r, π), p_θ(r, −π)) from p̃_θ(λ, ±π) = ∓λ q̃(λ) tan λπ.
pub fn p_theta_traces(rs: &[f64], f: &SourceTerm, p: &SolverParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, _, s) = field_series(f, p)?;
    Ok(traces(&s, rs))
}

fn traces(s: &LineSeries, rs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let plus = inverted(s, rs, |l| -l * (l * PI).tan(), |_| 1.0);
    let minus = inverted(s, rs, |l| l * (l * PI).tan(), |_| 1.0);
    (plus, minus)
}

/// max_r |Im q(r)| / max_r |Re q(r)| from the two-sided line sum.
fn imag_leakage(g: &SpectralFunction, rs: &[f64]) -> f64 {
    let (tau, w) = g.line.nodes();
    let c = g.line.re;
    let (re, im) = rs
        .par_iter()
        .map(|&r| {
            let lr = r.ln();
            let v: C64 = tau.iter().zip(&w).zip(&g.values).map(|((&t, &w), &q)| q * w * (-C64::new(c, t) * lr).exp()).sum();
            (v.re.abs(), v.im.abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    im / re.max(f64::MIN_POSITIVE)
}

/// Full solve on the parameter grids.  Rejects sources with nonzero mean.
pub fn solve(f: &SourceTerm, p: &SolverParams) -> Result<SolutionBundle> {
    p.validate()?;
    check_compatibility(f, DEFAULT_COMPAT_REL_TOL)?;
    let (g, h, inv) = inversion_series(f, p)?;
    let (gf, hf, field) = field_series(f, p)?;
    let q_inf = q_infinity(f, p)?;
    let r = p.r_grid();
    let theta = p.theta_grid();
    let q = inverted(&inv, &r, |_| C64::new(1.0, 0.0), |_| 1.0).into_iter().map(|v| v - q_inf).collect();
    let q_prime = inverted(&inv, &r, |l| -l, |r| 1.0 / r);
    let q_second = inverted(&inv, &r, |l| l * (l + 1.0), |r| 1.0 / (r * r));
    let pg = p_grid(&field, &r, &theta, q_inf);
    let (p_theta_plus, p_theta_minus) = traces(&field, &r);
    let diagnostics = Diagnostics {
        pv_step: h,
        pv_step_field: hf,
        nodes_used: inv.len(),
        nodes_used_field: field.len(),
        tail_ratio: end_ratio(&g),
        tail_ratio_field: end_ratio(&gf),
        imag_leakage: if f.is_zero() { 0.0 } else { imag_leakage(&g, &r) },
        conjugate_asymmetry: if f.is_zero() { 0.0 } else { g.conjugate_asymmetry() },
        q_inf,
    };
    Ok(SolutionBundle {
        params: *p,
        r,
        theta,
        q_tilde: g,
        q_tilde_field: gf,
        q,
        q_prime,
        q_second,
        p: pg,
        p_theta_plus,
        p_theta_minus,
        diagnostics,
        inv,
        field,
    })
}
