//! Complex special functions: Γ, ω(λ) = λ·cot(λπ), the product K(λ) and the
//! objects built from it (K₀, K₁, the pilot solution d₀).
//!
//! All gamma products and ratios are formed in log space.  K itself is
//! evaluated through Barnes' G-function, which is what the infinite product
//! telescopes to; the literal product is kept as [`k_product_direct`] and is
//! used to cross-check the closed form.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// ζ′(−1)
const ZETA_PRIME_M1: f64 = -0.165_421_143_700_450_93;

/// Real-part interval of an analyticity strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strip {
    pub re_min: f64,
    pub re_max: f64,
}

impl Strip {
    pub fn new(re_min: f64, re_max: f64) -> Result<Self> {
        if !(re_min < re_max) {
            return Err(Error::Degenerate(format!("empty strip ({re_min}, {re_max})")));
        }
        Ok(Strip { re_min, re_max })
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re > self.re_min && z.re < self.re_max
    }

    fn check(&self, z: C64) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::Domain { arg: fmt_c(z), re_min: self.re_min, re_max: self.re_max })
        }
    }
}

/// Strip of analyticity of K (and of d₀).
pub const K_STRIP: Strip = Strip { re_min: -0.5, re_max: 2.0 };
/// Strip where 1/K is analytic.
pub const INV_K_STRIP: Strip = Strip { re_min: -1.0, re_max: 1.5 };
pub const K0_STRIP: Strip = Strip { re_min: -1.0, re_max: 0.5 };
pub const K1_STRIP: Strip = Strip { re_min: -1.5, re_max: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEval {
    pub value: C64,
    pub est_rel_err: f64,
}

pub(crate) fn fmt_c(z: C64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn is_nonpositive_integer(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// ln(1+x) without cancellation for small |x|.
pub(crate) fn ln_1p(x: C64) -> C64 {
    let u = C64::new(1.0, 0.0) + x;
    let d = u - 1.0;
    if d == C64::new(0.0, 0.0) {
        x
    } else {
        u.ln() * (x / d)
    }
}

/// ln sin(πz), stable for large |Im z| (the sine itself overflows near |Im z| ≈ 230).
pub fn ln_sin_pi(z: C64) -> C64 {
    let w = z * PI;
    if z.im.abs() < 5.0 {
        return w.sin().ln();
    }
    // sin w = e^{-iw}(e^{2iw} − 1)/(2i) for Im w > 0, mirrored below.
    if z.im > 0.0 {
        -I * w + ((I * w * 2.0).exp() - 1.0).ln() - (I * 2.0).ln()
    } else {
        I * w + (C64::new(1.0, 0.0) - (-I * w * 2.0).exp()).ln() - (I * 2.0).ln()
    }
}

/// cot(πz), switching to exponential forms away from the real axis.
pub fn cot_pi(z: C64) -> C64 {
    let w = z * PI;
    if z.im.abs() <= 20.0 {
        return w.cos() / w.sin();
    }
    if z.im > 0.0 {
        let e = (I * w * 2.0).exp();
        I * (e + 1.0) / (e - 1.0)
    } else {
        let e = (-I * w * 2.0).exp();
        I * (e + 1.0) / (C64::new(1.0, 0.0) - e)
    }
}

// Lanczos coefficients, g = 607/128, 15 terms.
const LANCZOS_G_SHIFT: f64 = 671.0 / 128.0;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_09;
const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

fn lanczos_series(z: C64) -> C64 {
    let mut ser = C64::new(LANCZOS_C0, 0.0);
    let mut y = z;
    for c in LANCZOS {
        y += 1.0;
        ser += c / y;
    }
    ser
}

fn ln_gamma_right(z: C64) -> C64 {
    let t = z + LANCZOS_G_SHIFT;
    (z + 0.5) * t.ln() - t + (lanczos_series(z) * SQRT_2PI / z).ln()
}

/// Principal-sheet-agnostic log-gamma: exp(ln_gamma(z)) = Γ(z).  The
/// imaginary part is only defined modulo 2π.
pub fn ln_gamma(z: C64) -> Result<C64> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole(format!("Γ at {}", fmt_c(z))));
    }
    if z.re < 0.5 {
        Ok(LN_PI - ln_sin_pi(z) - ln_gamma_right(C64::new(1.0, 0.0) - z))
    } else {
        Ok(ln_gamma_right(z))
    }
}

/// lnΓ(a) − lnΓ(b) without the O(n ln n) cancellation of two separate calls.
/// Both arguments need Re ≥ ½.
fn ln_gamma_ratio_right(a: C64, b: C64) -> C64 {
    let d = a - b;
    let tb = b + LANCZOS_G_SHIFT;
    d * tb.ln() + (a + 0.5) * ln_1p(d / tb) - d + (lanczos_series(a) / lanczos_series(b)).ln()
        - ln_1p(d / b)
}

fn ln_gamma_ratio(a: C64, b: C64) -> Result<C64> {
    if a.re >= 0.5 && b.re >= 0.5 {
        Ok(ln_gamma_ratio_right(a, b))
    } else {
        Ok(ln_gamma(a)? - ln_gamma(b)?)
    }
}

pub fn gamma(z: C64) -> Result<ComplexEval> {
    let lg = ln_gamma(z)?;
    let scale = (z.norm() / 100.0).max(1.0);
    Ok(ComplexEval { value: lg.exp(), est_rel_err: 2e-13 * scale })
}

/// ω(λ) = λ·cot(λπ); ω(0) = 1/π.
pub fn omega(lambda: C64) -> Result<ComplexEval> {
    if lambda.im == 0.0 && lambda.re != 0.0 && lambda.re.fract() == 0.0 {
        return Err(Error::Pole(format!("ω at {}", fmt_c(lambda))));
    }
    if lambda.norm() < 1e-4 {
        let x2 = (lambda * PI) * (lambda * PI);
        let v = (C64::new(1.0, 0.0) - x2 / 3.0 - x2 * x2 / 45.0) / PI;
        return Ok(ComplexEval { value: v, est_rel_err: 1e-16 });
    }
    Ok(ComplexEval { value: lambda * cot_pi(lambda), est_rel_err: 1e-14 })
}

/// arg ω(λ) from the explicit real form
/// ω ∝ (λ₁ sin 2πλ₁ + λ₂ sinh 2πλ₂) + i(λ₂ sin 2πλ₁ − λ₁ sinh 2πλ₂)
/// (the proportionality factor is positive), evaluated with atan2 so the
/// result is exact modulo 2π, not only for large λ₂.
pub fn arg_omega(lambda: C64) -> Result<f64> {
    let (l1, l2) = (lambda.re, lambda.im);
    let x = 2.0 * PI * l2;
    // divide both parts by cosh x to avoid overflow
    let sech = 2.0 * (-x.abs()).exp() / (1.0 + (-2.0 * x.abs()).exp());
    let th = x.tanh();
    let s = (2.0 * PI * l1).sin();
    let num = l2 * s * sech - l1 * th;
    let den = l1 * s * sech + l2 * th;
    if den.abs() <= 1e-13 * (l1.abs() + l2.abs()) {
        return Err(Error::Degenerate(format!("arg ω denominator vanishes at {}", fmt_c(lambda))));
    }
    Ok(num.atan2(den))
}

const BERNOULLI: [f64; 8] = [
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
];

/// ln G(1+w) for large |w| (Re w ≳ 10).
fn ln_barnes_g1_asym(w: C64) -> C64 {
    let lw = w.ln();
    let w2 = w * w;
    let mut acc = w2 * 0.5 * lw - w2 * 0.75 + w * (0.5 * LN_2PI) - lw / 12.0 + ZETA_PRIME_M1;
    let inv_w2 = w2.inv();
    let mut p = inv_w2;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let k = (k + 1) as f64;
        acc += p * (b / (4.0 * k * (k + 1.0)));
        p *= inv_w2;
    }
    acc
}

/// ln G(1+z) for Barnes' G, via upward shift by 12 and the asymptotic series.
/// Exponentiates to G(1+z); the imaginary part is defined modulo 2π.
pub fn ln_barnes_g1(z: C64) -> Result<C64> {
    const M: usize = 12;
    let mut acc = ln_barnes_g1_asym(z + M as f64);
    acc -= ln_gamma(z + 1.0)? * M as f64;
    for i in 1..M {
        let zi = z + i as f64;
        if zi == C64::new(0.0, 0.0) {
            return Err(Error::Pole(format!("G zero at 1+{}", fmt_c(z))));
        }
        acc -= zi.ln() * (M - i) as f64;
    }
    Ok(acc)
}

/// ln K(λ) from the Barnes-G closed form
/// K(λ) = π^{λ−½} G(1+λ) G(3/2−λ) / (G(½+λ) G(2−λ)),
/// valid wherever no G-factor hits a zero (poles of K at λ = −½, −3/2, …
/// and λ = 2, 3, …; zeros at λ = −1, −2, … and λ = 3/2, 5/2, …).
pub fn ln_k(lambda: C64) -> Result<C64> {
    let half = C64::new(0.5, 0.0);
    let one = C64::new(1.0, 0.0);
    Ok((lambda - 0.5) * LN_PI + ln_barnes_g1(lambda)? + ln_barnes_g1(half - lambda)?
        - ln_barnes_g1(lambda - 0.5)?
        - ln_barnes_g1(one - lambda)?)
}

fn k_closed_rel_err(lambda: C64) -> f64 {
    let w = (lambda + 20.0).norm();
    4e-17 * (200.0 + w * w * w.ln())
}

/// K(λ) on its strip of analyticity (−½, 2).
pub fn k_product(lambda: C64) -> Result<ComplexEval> {
    K_STRIP.check(lambda)?;
    Ok(ComplexEval { value: ln_k(lambda)?.exp(), est_rel_err: k_closed_rel_err(lambda) })
}

/// 1/K(μ) on its strip of analyticity (−1, 3/2); zero at the poles of K.
pub fn inv_k(mu: C64) -> Result<C64> {
    INV_K_STRIP.check(mu)?;
    match ln_k(mu) {
        Ok(l) => Ok((-l).exp()),
        Err(Error::Pole(_)) if mu.im == 0.0 && mu.re == -0.5 => Ok(C64::new(0.0, 0.0)),
        Err(e) => Err(e),
    }
}

/// Truncation control for [`k_product_direct`].
#[derive(Debug, Clone, Copy)]
pub struct ProductOptions {
    pub cap: usize,
    /// Stop once a log-factor drops below this (after at least 100 factors).
    pub factor_tol: f64,
    /// NonConvergence when the estimated relative error at the cap exceeds this.
    pub tol: f64,
}

impl Default for ProductOptions {
    fn default() -> Self {
        ProductOptions { cap: 100_000, factor_tol: 1e-14, tol: 1e-9 }
    }
}

/// Neumaier summation, componentwise.
#[derive(Default)]
struct CompensatedSum {
    sum: C64,
    comp: C64,
}

impl CompensatedSum {
    fn add(&mut self, x: C64) {
        fn step(s: &mut f64, c: &mut f64, x: f64) {
            let t = *s + x;
            *c += if s.abs() >= x.abs() { (*s - t) + x } else { (x - t) + *s };
            *s = t;
        }
        step(&mut self.sum.re, &mut self.comp.re, x.re);
        step(&mut self.sum.im, &mut self.comp.im, x.im);
    }

    fn value(&self) -> C64 {
        self.sum + self.comp
    }
}

fn log_factor(n: usize, lambda: C64) -> Result<C64> {
    let nf = n as f64;
    let one = C64::new(1.0, 0.0);
    let a = ln_gamma_ratio(lambda + (nf - 0.5), lambda + nf)?;
    let b = ln_gamma_ratio(one * (nf + 1.0) - lambda, one * (nf + 0.5) - lambda)?;
    // (n/(n−½))^{2λ−1}
    let c = -(lambda * 2.0 - 1.0) * (-0.5 / nf).ln_1p();
    Ok(a + b + c)
}

/// Bernoulli numbers B_0..B_17.
fn bernoulli_number(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => -0.5,
        2 => 1.0 / 6.0,
        m if m % 2 == 1 => 0.0,
        m => BERNOULLI[m / 2 - 2],
    }
}

fn bernoulli_poly(m: usize, x: C64) -> C64 {
    let mut binom = 1.0;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=m {
        acc += x.powu((m - j) as u32) * (binom * bernoulli_number(j));
        binom *= (m - j) as f64 / (j + 1) as f64;
    }
    acc
}

const FACTOR_SERIES_TERMS: usize = 16;
/// Factors from here on use the 1/n expansion.
const FACTOR_SERIES_FROM: usize = 64;

/// Coefficients e_k of L_n = Σ_k e_k n^{−k}, from the Bernoulli-polynomial
/// expansion of lnΓ(n+a) − lnΓ(n+b).  e_1 vanishes identically.
fn factor_series(lambda: C64) -> [C64; FACTOR_SERIES_TERMS + 1] {
    let one = C64::new(1.0, 0.0);
    let mut e = [C64::new(0.0, 0.0); FACTOR_SERIES_TERMS + 1];
    for (k, ek) in e.iter_mut().enumerate().skip(2) {
        let m = k + 1;
        let d = bernoulli_poly(m, lambda - 0.5) - bernoulli_poly(m, lambda)
            + bernoulli_poly(m, one - lambda)
            - bernoulli_poly(m, one * 0.5 - lambda);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        *ek = d * (sign / (k * m) as f64) + (lambda * 2.0 - 1.0) / (k as f64 * 2f64.powi(k as i32));
    }
    e
}

/// Hurwitz ζ(s, a) for integer s ≥ 2 and a ≳ 20 (Euler–Maclaurin).
fn hurwitz_zeta(s: usize, a: f64) -> f64 {
    let sf = s as f64;
    let mut acc = a.powf(1.0 - sf) / (sf - 1.0) + 0.5 * a.powf(-sf);
    let mut rising = sf; // s(s+1)…(s+2j−2)
    let mut fact = 2.0; // (2j)!
    for j in 1..=6 {
        acc += bernoulli_number(2 * j) / fact * rising * a.powf(-sf - 2.0 * j as f64 + 1.0);
        rising *= (sf + 2.0 * j as f64 - 1.0) * (sf + 2.0 * j as f64);
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
    }
    acc
}

/// The defining infinite product, summed in log space.  Early factors come
/// from Γ-ratios, later ones from their exact 1/n expansion; the remainder
/// beyond the truncation point is summed analytically with Hurwitz ζ.
pub fn k_product_direct(lambda: C64, opts: ProductOptions) -> Result<ComplexEval> {
    K_STRIP.check(lambda)?;
    let cap = opts.cap.max(100);
    let e = factor_series(lambda);
    let series = |n: usize| {
        let x = 1.0 / n as f64;
        e.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
    };
    let mut sum = CompensatedSum::default();
    let mut n_used = cap;
    for n in 1..=cap {
        let l = if n < FACTOR_SERIES_FROM { log_factor(n, lambda)? } else { series(n) };
        sum.add(l);
        if n >= 100 && l.norm() < opts.factor_tol {
            n_used = n;
            break;
        }
    }
    let a = (n_used + 1) as f64;
    let tail = (2..=FACTOR_SERIES_TERMS).fold(C64::new(0.0, 0.0), |acc, k| acc + e[k] * hurwitz_zeta(k, a));
    // dropped series order, Γ-ratio rounding, summation rounding
    let trunc = e[FACTOR_SERIES_TERMS].norm() * (FACTOR_SERIES_FROM as f64).powi(-(FACTOR_SERIES_TERMS as i32) + 1);
    let est = trunc + 6e-15 * FACTOR_SERIES_FROM as f64 * (1.0 + lambda.norm()) + 1e-17 * n_used as f64 + 1e-15;
    if est > opts.tol {
        return Err(Error::NonConvergence(est));
    }
    Ok(ComplexEval { value: (sum.value() + tail).exp(), est_rel_err: est })
}

/// K₀(λ) = 1/((λ+1)K(λ+1)), analytic for Re λ ∈ (−1, ½).
pub fn k0(lambda: C64) -> Result<ComplexEval> {
    K0_STRIP.check(lambda)?;
    let lk = ln_k(lambda + 1.0)?;
    Ok(ComplexEval {
        value: (-lk).exp() / (lambda + 1.0),
        est_rel_err: k_closed_rel_err(lambda + 1.0),
    })
}

/// K₁(λ) = K(λ)·cot(λπ), analytic for Re λ ∈ (−3/2, 0).  Evaluated as
/// K(λ+1)/(πλ) (functional relation), which covers the part of the strip
/// where K itself has its pole at −½.
pub fn k1(lambda: C64) -> Result<ComplexEval> {
    K1_STRIP.check(lambda)?;
    let lk = ln_k(lambda + 1.0)?;
    Ok(ComplexEval {
        value: lk.exp() / (lambda * PI),
        est_rel_err: k_closed_rel_err(lambda + 1.0),
    })
}

/// Pilot solution d₀(λ) = e^{iλπ}(κ₀π)^{½−λ}K(λ) of κ₀d(λ+1) + ω(λ)d(λ) = 0.
pub fn d0(lambda: C64, kappa0: f64) -> Result<ComplexEval> {
    if !(kappa0 > 0.0) {
        return Err(Error::Degenerate(format!("κ₀ = {kappa0} must be positive")));
    }
    K_STRIP.check(lambda)?;
    let l = I * lambda * PI + (C64::new(0.5, 0.0) - lambda) * (kappa0 * PI).ln() + ln_k(lambda)?;
    Ok(ComplexEval { value: l.exp(), est_rel_err: k_closed_rel_err(lambda) })
}

/// Default threshold |Im λ| for the asymptotic main term.
pub const M_ASYM: f64 = 10.0;

/// Main term |ω|^{λ₁−½}·exp(−λ₂ arg ω) of the large-|Im λ| asymptotics of
/// |K(λ)|.  Real and positive: it models the modulus only.
pub fn k_asymptotic(lambda: C64, m_asym: f64) -> Result<ComplexEval> {
    if lambda.im.abs() < m_asym {
        return Err(Error::Domain {
            arg: format!("|Im λ| = {} below the asymptotic threshold {m_asym}", lambda.im.abs()),
            re_min: f64::NAN,
            re_max: f64::NAN,
        });
    }
    let w = omega(lambda)?.value;
    let arg = arg_omega(lambda)?;
    let v = ((lambda.re - 0.5) * w.norm().ln() - lambda.im * arg).exp();
    Ok(ComplexEval { value: C64::new(v, 0.0), est_rel_err: 1.0 / lambda.im.abs() })
}
