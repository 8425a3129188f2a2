//! Numerical certification of the kernel estimates behind the tip
//! condition: Φ(s, ζ), the partition of the (η, τ) plane, the region-wise
//! majorants, the kernels G₁/G₂ and the r^{α−1} bound on q′₂.

use crate::mellin::{half_norm_spectral, SpectralFunction, VerticalLine};
use crate::solver::{split_q_prime, SolverParams};
use crate::source::SourceTerm;
use crate::special::{arg_omega, ln_k, ln_sin_pi, I};
use crate::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;

/// The admissible window of (σ, ϑ) for Φ: ϑ ∈ (0, 1) and
/// σ ∈ (max{−½, −ϑ}, min{2, 3/2 − ϑ}).
pub fn check_phi_window(sigma: f64, vartheta: f64) -> Result<()> {
    if !(vartheta > 0.0 && vartheta < 1.0) {
        return Err(Error::Config(format!("0 < ϑ < 1 violated: ϑ = {vartheta}")));
    }
    let (lo, hi) = ((-0.5f64).max(-vartheta), 2.0f64.min(1.5 - vartheta));
    if !(sigma > lo && sigma < hi) {
        return Err(Error::Config(format!(
            "max{{−1/2, −ϑ}} < σ < min{{2, 3/2 − ϑ}} violated: σ = {sigma}, window ({lo}, {hi})"
        )));
    }
    Ok(())
}

/// ln Φ(s, ζ), Φ = K(s)/((s+ζ)K(s+ζ)) · 1/(e^{iπζ} − e^{−iπζ}).  Log form
/// keeps the far field (where e^{π|η|} overflows) representable.
pub fn ln_phi(s: C64, zeta: C64) -> Result<C64> {
    if zeta.im == 0.0 && zeta.re.fract() == 0.0 {
        return Err(Error::Pole(format!("Φ at integer ζ = {}", zeta.re)));
    }
    let z = s + zeta;
    if z.norm() == 0.0 {
        return Err(Error::Pole("Φ at s + ζ = 0".into()));
    }
    Ok(ln_k(s)? - z.ln() - ln_k(z)? - (2.0 * I).ln() - ln_sin_pi(zeta))
}

pub fn phi(s: C64, zeta: C64) -> Result<C64> {
    check_phi_window(s.re, zeta.re)?;
    Ok(ln_phi(s, zeta)?.exp())
}

/// Regions of the (η, τ) plane for a given M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Region {
    S0,
    S1,
    S2p,
    S2pp,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8p,
    S8pp,
    S9,
    S10,
    S11,
    S12,
}

impl Region {
    /// Listed order, which also resolves ties on shared boundaries.
    pub const ALL: [Region; 15] = [
        Region::S0,
        Region::S1,
        Region::S2p,
        Region::S2pp,
        Region::S3,
        Region::S4,
        Region::S5,
        Region::S6,
        Region::S7,
        Region::S8p,
        Region::S8pp,
        Region::S9,
        Region::S10,
        Region::S11,
        Region::S12,
    ];

    pub fn name(self) -> &'static str {
        use Region::*;
        match self {
            S0 => "Σ0",
            S1 => "Σ1",
            S2p => "Σ2′",
            S2pp => "Σ2″",
            S3 => "Σ3",
            S4 => "Σ4",
            S5 => "Σ5",
            S6 => "Σ6",
            S7 => "Σ7",
            S8p => "Σ8′",
            S8pp => "Σ8″",
            S9 => "Σ9",
            S10 => "Σ10",
            S11 => "Σ11",
            S12 => "Σ12",
        }
    }

    /// Membership; `closed` relaxes every strict inequality.
    fn contains(self, eta: f64, tau: f64, m: f64, closed: bool) -> bool {
        use Region::*;
        let lt = |a: f64, b: f64| if closed { a <= b } else { a < b };
        let (e, t) = (eta, tau);
        match self {
            S0 => e.abs() <= 3.0 * m && t.abs() <= 2.0 * m,
            S1 => lt(3.0 * m, e) && t.abs() <= 2.0 * m,
            S2p => lt(0.0, e) && lt(2.0 * m, t),
            S2pp => lt(-t / 2.0, e) && lt(e, 0.0) && lt(2.0 * m, t),
            S3 => lt(m - t, e) && lt(e, -t / 2.0) && lt(2.0 * m, t),
            S4 => lt(-m - t, e) && lt(e, m - t) && lt(2.0 * m, t),
            S5 => lt(-1.5 * t, e) && lt(e, -m - t) && lt(2.0 * m, t),
            S6 => lt(e, -1.5 * t) && lt(2.0 * m, t),
            S7 => lt(e, -3.0 * m) && lt(t.abs(), 2.0 * m),
            S8p => lt(e, 0.0) && lt(t, -2.0 * m),
            S8pp => lt(0.0, e) && lt(e, -t / 2.0) && lt(t, -2.0 * m),
            S9 => lt(-t / 2.0, e) && lt(e, -t - m) && lt(t, -2.0 * m),
            S10 => lt(-t - m, e) && lt(e, m - t) && lt(t, -2.0 * m),
            S11 => lt(m - t, e) && lt(e, -1.5 * t) && lt(t, -2.0 * m),
            S12 => lt(-1.5 * t, e) && lt(t, -2.0 * m),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The region of (η, τ); boundary points go to the first region in listed
/// order whose closure contains them.
pub fn classify(eta: f64, tau: f64, m: f64) -> Region {
    Region::ALL
        .into_iter()
        .find(|r| r.contains(eta, tau, m, true))
        .expect("the closed regions cover the plane")
}

/// Regions whose interior (all inequalities strict, except the closed Σ0)
/// contains the point: exactly one off the region boundaries.
pub fn open_memberships(eta: f64, tau: f64, m: f64) -> Vec<Region> {
    Region::ALL.into_iter().filter(|r| r.contains(eta, tau, m, false)).collect()
}

/// Membership in the four auxiliary cones and the two inequalities
/// |τ| ≥ 2|η+τ| (wide) and |τ| ≤ 2|η+τ| (narrow).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Cones {
    pub omega: [bool; 4],
    pub wide: bool,
    pub narrow: bool,
}

impl Cones {
    /// Ω₁ ∪ Ω₂ ⇒ wide, Ω₃ ∪ Ω₄ ⇒ narrow.
    pub fn consistent(&self) -> bool {
        (!(self.omega[0] || self.omega[1]) || self.wide) && (!(self.omega[2] || self.omega[3]) || self.narrow)
    }
}

pub fn cone_inequalities(eta: f64, tau: f64) -> Cones {
    let (e, t) = (eta, tau);
    let o1 = t > 0.0 && -2.0 * e / 3.0 < t && t < -2.0 * e;
    let o2 = t < 0.0 && -2.0 * e < t && t < -2.0 * e / 3.0;
    let o3 = (e <= 0.0 && -2.0 * e < t) || (e > 0.0 && t > -2.0 * e / 3.0);
    let o4 = (e <= 0.0 && t < -2.0 * e / 3.0) || (e > 0.0 && t < -2.0 * e);
    let s = 2.0 * (e + t).abs();
    Cones { omega: [o1, o2, o3, o4], wide: t.abs() >= s, narrow: t.abs() <= s }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FuzzReport {
    pub m: f64,
    pub n_points: usize,
    /// Points with no label / with more than one open-region label.
    pub gaps: usize,
    pub overlaps: usize,
    /// Points where `classify` disagrees with the unique open membership.
    pub mismatches: usize,
    pub cone_violations: usize,
    pub counts: Vec<(Region, usize)>,
}

impl FuzzReport {
    pub fn is_partition(&self) -> bool {
        self.gaps == 0 && self.overlaps == 0 && self.mismatches == 0
    }
}

/// Uniform points on [−8M, 8M]² (every region is hit) plus a quarter on a
/// 50× wider box, from a seeded generator.
pub fn partition_fuzz(m: f64, n: usize, seed: u64) -> FuzzReport {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let l = if i % 4 == 3 { 400.0 * m } else { 8.0 * m };
            (rng.gen_range(-l..l), rng.gen_range(-l..l))
        })
        .collect();
    let (mut gaps, mut overlaps, mut mismatches, mut cones) = (0, 0, 0, 0);
    let mut counts = vec![0usize; Region::ALL.len()];
    for &(e, t) in &pts {
        let open = open_memberships(e, t, m);
        let c = classify(e, t, m);
        match open.len() {
            0 => gaps += 1,
            1 if open[0] != c => mismatches += 1,
            1 => {}
            _ => overlaps += 1,
        }
        counts[c as usize] += 1;
        if !cone_inequalities(e, t).consistent() {
            cones += 1;
        }
    }
    FuzzReport {
        m,
        n_points: n,
        gaps,
        overlaps,
        mismatches,
        cone_violations: cones,
        counts: Region::ALL.into_iter().zip(counts).collect(),
    }
}

/// Which majorant of |Φ| is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Majorant {
    /// e^{−π|η|/4}[(1+|τ|)^{−1−ϑ} + e^{−π|τ|/4}] on the whole plane.
    Master,
    /// e^{−π|η|} on Σ1, Σ7.
    StripDecay,
    /// |τ|^{−1−ϑ}e^{−(π−ε)|η|} on Σ2′, Σ2″, Σ6, Σ8′, Σ8″, Σ12.
    Algebraic,
    /// |η|^{σ−½}e^{−π|η|/2}e^{−π|τ|/4} on Σ3, Σ5, Σ9, Σ11.
    DoubleExponential,
    /// e^{−(π/2−ε)|τ|}e^{−π|η|/2} on Σ4, Σ10.
    Exchange,
}

impl Majorant {
    pub const ALL: [Majorant; 5] =
        [Majorant::Master, Majorant::StripDecay, Majorant::Algebraic, Majorant::DoubleExponential, Majorant::Exchange];

    pub fn name(self) -> &'static str {
        match self {
            Majorant::Master => "master",
            Majorant::StripDecay => "strip_decay",
            Majorant::Algebraic => "algebraic",
            Majorant::DoubleExponential => "double_exponential",
            Majorant::Exchange => "exchange",
        }
    }

    pub fn regions(self) -> &'static [Region] {
        use Region::*;
        match self {
            Majorant::Master => &Region::ALL,
            Majorant::StripDecay => &[S1, S7],
            Majorant::Algebraic => &[S2p, S2pp, S6, S8p, S8pp, S12],
            Majorant::DoubleExponential => &[S3, S5, S9, S11],
            Majorant::Exchange => &[S4, S10],
        }
    }

    /// ln of the majorant (without its constant).
    pub fn ln_value(self, eta: f64, tau: f64, sigma: f64, vartheta: f64, eps: f64) -> f64 {
        let (ae, at) = (eta.abs(), tau.abs());
        match self {
            Majorant::Master => {
                let a = -(1.0 + vartheta) * (1.0 + at).ln();
                let b = -PI * at / 4.0;
                -PI * ae / 4.0 + a.max(b) + (1.0 + (-(a - b).abs()).exp()).ln()
            }
            Majorant::StripDecay => -PI * ae,
            Majorant::Algebraic => -(1.0 + vartheta) * at.ln() - (PI - eps) * ae,
            Majorant::DoubleExponential => (sigma - 0.5) * ae.ln() - PI * ae / 2.0 - PI * at / 4.0,
            Majorant::Exchange => -(PI / 2.0 - eps) * at - PI * ae / 2.0,
        }
    }
}

/// Grid for the bound checks: η, τ ∈ [−extent, extent] with the given step.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundGrid {
    pub extent: f64,
    pub step: f64,
}

impl Default for BoundGrid {
    fn default() -> Self {
        BoundGrid { extent: 50.0, step: 0.5 }
    }
}

impl BoundGrid {
    fn axis(&self, offset: f64) -> Vec<f64> {
        let n = (self.extent / self.step).round() as i64;
        (-n..=n).map(|i| (i as f64 + offset) * self.step).filter(|x| x.abs() <= self.extent).collect()
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RegionWorst {
    pub region: Region,
    pub eta: f64,
    pub tau: f64,
    /// |Φ| / majorant at the worst point.
    pub ratio: f64,
}

/// A measured decay exponent against the claimed one.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RateCheck {
    pub what: String,
    pub measured: f64,
    pub claimed: f64,
    /// Sharp exponents are checked within 10% both ways; majorant
    /// exponents only need the measured decay to be at least 90% of them.
    pub two_sided: bool,
    pub ok: bool,
}

impl RateCheck {
    fn new(what: &str, measured: f64, claimed: f64, two_sided: bool) -> Self {
        let ok = if two_sided {
            (measured - claimed).abs() <= 0.1 * claimed.abs()
        } else {
            measured >= 0.9 * claimed
        };
        RateCheck { what: what.into(), measured, claimed, two_sided, ok }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundCheck {
    pub majorant: Majorant,
    pub sigma: f64,
    pub vartheta: f64,
    pub m: f64,
    pub eps: f64,
    pub n_points: usize,
    /// Minimal C on the fitting grid.
    pub constant: f64,
    /// Points of the half-step-shifted validation grid where
    /// |Φ| > 1.5·C·majorant.
    pub violations: usize,
    pub worst: Vec<RegionWorst>,
    pub rates: Vec<RateCheck>,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.constant.is_finite() && self.violations == 0 && self.rates.iter().all(|r| r.ok)
    }
}

/// Log-ratio ln|Φ| − ln majorant at the region points of one grid.
fn log_ratios(maj: Majorant, sigma: f64, vartheta: f64, m: f64, eps: f64, axis: &[f64]) -> Result<Vec<(Region, f64, f64, f64)>> {
    let regions = maj.regions();
    let pts: Vec<(f64, f64)> = axis.iter().flat_map(|&e| axis.iter().map(move |&t| (e, t))).collect();
    pts.par_iter()
        .filter_map(|&(e, t)| {
            let r = classify(e, t, m);
            regions.contains(&r).then_some((r, e, t))
        })
        .map(|(r, e, t)| {
            let l = ln_phi(C64::new(sigma, t), C64::new(vartheta, e))?.re;
            Ok((r, e, t, l - maj.ln_value(e, t, sigma, vartheta, eps)))
        })
        .collect()
}

/// Fits the minimal constant of `maj` on its regions of the grid, validates
/// it on the shifted grid and measures the decay exponents the majorant
/// claims (see [`decay_rates`]).
pub fn check_bound(maj: Majorant, sigma: f64, vartheta: f64, m: f64, eps: f64, grid: BoundGrid) -> Result<BoundCheck> {
    check_phi_window(sigma, vartheta)?;
    if !(m > 0.0) || !(eps >= 0.0 && eps < PI / 4.0) {
        return Err(Error::Config(format!("M > 0 and 0 ≤ ε < π/4 required: M = {m}, ε = {eps}")));
    }
    let fit = log_ratios(maj, sigma, vartheta, m, eps, &grid.axis(0.0))?;
    if fit.is_empty() {
        return Err(Error::GridTooCoarse(format!("no grid points in the regions of {}", maj.name())));
    }
    let ln_c = fit.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.3));
    let mut worst: Vec<RegionWorst> = Vec::new();
    for r in maj.regions() {
        if let Some(p) = fit.iter().filter(|p| p.0 == *r).max_by(|a, b| a.3.total_cmp(&b.3)) {
            worst.push(RegionWorst { region: *r, eta: p.1, tau: p.2, ratio: p.3.exp() });
        }
    }
    let val = log_ratios(maj, sigma, vartheta, m, eps, &grid.axis(0.5))?;
    let violations = val.iter().filter(|p| p.3 > ln_c + 1.5f64.ln()).count();
    Ok(BoundCheck {
        majorant: maj,
        sigma,
        vartheta,
        m,
        eps,
        n_points: fit.len(),
        constant: ln_c.exp(),
        violations,
        worst,
        rates: decay_rates(maj, sigma, vartheta, m, eps, grid.extent)?,
    })
}

fn ln_abs_phi(sigma: f64, tau: f64, vartheta: f64, eta: f64) -> Result<f64> {
    Ok(ln_phi(C64::new(sigma, tau), C64::new(vartheta, eta))?.re)
}

/// Least-squares slope of ln|Φ| along a path p(x), x ∈ [a, b], against x
/// (or ln x when `log_x`); returned as a decay rate (minus the slope).
fn path_rate(a: f64, b: f64, log_x: bool, p: impl Fn(f64) -> (f64, f64), sigma: f64, vartheta: f64) -> Result<f64> {
    let n = 21;
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let x = a + (b - a) * i as f64 / (n - 1) as f64;
        let (eta, tau) = p(x);
        pts.push((if log_x { x.ln() } else { x }, ln_abs_phi(sigma, tau, vartheta, eta)?));
    }
    let nf = n as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |s, q| (s.0 + q.0, s.1 + q.1));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |s, q| (s.0 + q.0 * q.0, s.1 + q.0 * q.1));
    Ok(-(nf * sxy - sx * sy) / (nf * sxx - sx * sx))
}

/// Decay exponents of |Φ| measured along rays inside the majorant's regions
/// (outer half of the extent), against the exponents the majorant claims.
/// Each ray is measured in both directions (τ ↦ −τ, η ↦ −η mirror) and
/// the slower one is reported.
pub fn decay_rates(maj: Majorant, sigma: f64, vartheta: f64, m: f64, eps: f64, extent: f64) -> Result<Vec<RateCheck>> {
    let (a, b) = (extent / 2.0, extent);
    let both = |p: &dyn Fn(f64, f64) -> (f64, f64), log_x: bool| -> Result<f64> {
        let r1 = path_rate(a, b, log_x, |x| p(x, 1.0), sigma, vartheta)?;
        let r2 = path_rate(a, b, log_x, |x| p(x, -1.0), sigma, vartheta)?;
        Ok(r1.min(r2))
    };
    let t0 = 0.0;
    Ok(match maj {
        Majorant::Master => vec![
            RateCheck::new("η-rate at τ = 0", both(&|x, g| (g * x, t0), false)?, PI / 4.0, false),
            RateCheck::new("τ-exponent at η = 0", both(&|x, g| (0.0, g * x), true)?, 1.0 + vartheta, true),
        ],
        Majorant::StripDecay => vec![RateCheck::new(
            "η-rate at τ = M",
            both(&|x, g| (g * x.max(3.0 * m), g * m), false)?,
            PI,
            false,
        )],
        Majorant::Algebraic => vec![
            RateCheck::new("τ-exponent at η = ½", both(&|x, g| (g * 0.5, g * x.max(2.0 * m)), true)?, 1.0 + vartheta, true),
            RateCheck::new("η-rate at τ = 3M", both(&|x, g| (g * x, g * 3.0 * m), false)?, PI - eps, false),
        ],
        Majorant::DoubleExponential => {
            // along η = −(3/4)τ through Σ3 / Σ9: claimed e^{−(3π/8 + π/4)|τ|}
            vec![RateCheck::new(
                "rate along η = −3τ/4",
                both(&|x, g| (-0.75 * g * x, g * x), false)?,
                0.75 * PI / 2.0 + PI / 4.0,
                false,
            )]
        }
        Majorant::Exchange => vec![RateCheck::new(
            "rate along η = −τ",
            both(&|x, g| (-g * x, g * x), false)?,
            PI / 2.0 - eps + PI / 2.0,
            false,
        )],
    })
}

/// Ψ₁, Ψ₂ of the explicit form of ω, arg ω = atan2(Ψ₁, Ψ₂):
/// Ψ₁ = τ sin 2πσ − σ sinh 2πτ, Ψ₂ = σ sin 2πσ + τ sinh 2πτ,
/// both divided by cosh 2πτ (the ratio is all that matters).
pub fn psi12(s: C64) -> (f64, f64) {
    let (sg, t) = (s.re, s.im);
    let x = 2.0 * PI * t;
    let sech = 2.0 * (-x.abs()).exp() / (1.0 + (-2.0 * x.abs()).exp());
    let sn = (2.0 * PI * sg).sin();
    (t * sn * sech - sg * x.tanh(), sg * sn * sech + t * x.tanh())
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PsiDiagnostics {
    pub psi_s: (f64, f64),
    pub psi_sz: (f64, f64),
    /// (Ψ₁(s+ζ)Ψ₂(s) − Ψ₁(s)Ψ₂(s+ζ)) / (Ψ₂(s)Ψ₂(s+ζ) + Ψ₁(s)Ψ₁(s+ζ)).
    pub psi0: f64,
    /// arg ω(s+ζ) − arg ω(s) from the special-function layer.
    pub arg_difference: f64,
    /// |arctan Ψ₀ − arg difference| reduced modulo π.
    pub identity_error: f64,
}

/// The arctan-difference identity for the phase of ω between s and s+ζ.
pub fn psi_diagnostics(s: C64, zeta: C64) -> Result<PsiDiagnostics> {
    let (a1, a2) = psi12(s);
    let (b1, b2) = psi12(s + zeta);
    let den = a2 * b2 + a1 * b1;
    let num = b1 * a2 - a1 * b2;
    if den.abs() <= 1e-300 || (a2 == 0.0 && a1 == 0.0) || (b2 == 0.0 && b1 == 0.0) {
        return Err(Error::Degenerate(format!("Ψ denominators vanish at s = {s}, ζ = {zeta}")));
    }
    let psi0 = num / den;
    let diff = arg_omega(s + zeta)? - arg_omega(s)?;
    let e = (psi0.atan() - diff).rem_euclid(PI);
    Ok(PsiDiagnostics { psi_s: (a1, a2), psi_sz: (b1, b2), psi0, arg_difference: diff, identity_error: e.min(PI - e) })
}

/// sup |τ(arg ω(s+ζ) − arg ω(s))| over the Σ2′ points of the grid.
pub fn tau_scaled_arg_sup(sigma: f64, vartheta: f64, m: f64, grid: BoundGrid) -> Result<f64> {
    let axis = grid.axis(0.0);
    let mut sup = 0.0f64;
    for &e in &axis {
        for &t in &axis {
            if classify(e, t, m) == Region::S2p {
                let d = arg_omega(C64::new(sigma + vartheta, t + e))? - arg_omega(C64::new(sigma, t))?;
                sup = sup.max((t * d).abs());
            }
        }
    }
    Ok(sup)
}

/// Default ε in the (π − ε) and (π/2 − ε) majorant exponents.
pub const DEFAULT_EPS: f64 = 0.2;

/// Quadrature for the kernels: trapezoid on τ ∈ [−tau_max, tau_max] and
/// η ∈ [−eta_max, eta_max].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelQuad {
    pub tau_max: f64,
    pub tau_step: f64,
    pub eta_max: f64,
    pub eta_step: f64,
    /// Largest accepted tail estimate, relative to ∫|integrand|.
    pub tail_tol: f64,
}

impl Default for KernelQuad {
    fn default() -> Self {
        KernelQuad { tau_max: 100.0, tau_step: 0.1, eta_max: 14.0, eta_step: 0.1, tail_tol: 1e-2 }
    }
}

fn symmetric_nodes(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).round() as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

/// The s-window in which G₁ may be evaluated: max{−½, −ϑ} < σ < min{½, ϑ}.
pub fn check_kernel_window(sigma: f64, vartheta: f64) -> Result<()> {
    let (lo, hi) = ((-0.5f64).max(-vartheta), 0.5f64.min(vartheta));
    if !(vartheta > 0.0 && vartheta < 1.0 && sigma > lo && sigma < hi) {
        return Err(Error::Config(format!(
            "max{{−1/2, −ϑ}} < σ < min{{1/2, ϑ}} violated: σ = {sigma}, ϑ = {vartheta}"
        )));
    }
    Ok(())
}

/// Tail of ∫ g(τ)t^{−iτ}dτ beyond ±T for g ~ |τ|^{−1−ϑ}: |g(T)|·T/ϑ without
/// oscillation, |g(T)|/|ln t| with it.
fn tail_estimate(g_ends: f64, t: f64, tau_max: f64, vartheta: f64) -> f64 {
    g_ends * (tau_max / vartheta).min(1.0 / t.ln().abs().max(1e-300))
}

/// G₁(t, ζ) = −(1/2πi)∫_{Re s = σ} t^{−s}(κ₀π)^ζ Φ(s, ζ) ds.
pub fn kernel_g1(t: f64, zeta: C64, sigma: f64, kappa0: f64, quad: KernelQuad) -> Result<C64> {
    check_kernel_window(sigma, zeta.re)?;
    if !(t > 0.0 && kappa0 > 0.0) {
        return Err(Error::Config(format!("t > 0 and κ₀ > 0 required: t = {t}, κ₀ = {kappa0}")));
    }
    let lt = t.ln();
    let taus = symmetric_nodes(quad.tau_max, quad.tau_step);
    let vals: Vec<C64> = taus
        .par_iter()
        .map(|&tau| {
            let s = C64::new(sigma, tau);
            Ok((ln_phi(s, zeta)? - s * lt).exp())
        })
        .collect::<Result<_>>()?;
    let sum: C64 = vals.iter().sum::<C64>() * quad.tau_step;
    let l1: f64 = vals.iter().map(|v| v.norm()).sum::<f64>() * quad.tau_step;
    let ends = vals[0].norm() + vals[vals.len() - 1].norm();
    let tail = tail_estimate(ends, t, quad.tau_max, zeta.re);
    if tail > quad.tail_tol * l1 {
        return Err(Error::TailTooFat { value: tail / l1, tol: quad.tail_tol });
    }
    Ok(-(zeta * (kappa0 * PI).ln()).exp() * sum / (2.0 * PI))
}

/// G₂(t, ϑ, r) = i∫(r/t)^{iη}G₁(t, ϑ+iη)dη, with Φ tabulated once on the
/// (τ, η) grid so that each evaluation is a double sum.
pub struct G2Kernel {
    pub vartheta: f64,
    pub sigma: f64,
    pub kappa0: f64,
    pub quad: KernelQuad,
    taus: Vec<f64>,
    etas: Vec<f64>,
    /// Φ(σ+iτ_j, ϑ+iη_i), row j.
    table: Vec<Vec<C64>>,
}

impl G2Kernel {
    pub fn new(vartheta: f64, sigma: f64, kappa0: f64, quad: KernelQuad) -> Result<Self> {
        check_kernel_window(sigma, vartheta)?;
        if !(kappa0 > 0.0) {
            return Err(Error::Config(format!("κ₀ > 0 violated: κ₀ = {kappa0}")));
        }
        let taus = symmetric_nodes(quad.tau_max, quad.tau_step);
        let etas = symmetric_nodes(quad.eta_max, quad.eta_step);
        let table = taus
            .par_iter()
            .map(|&tau| {
                etas.iter().map(|&eta| Ok(ln_phi(C64::new(sigma, tau), C64::new(vartheta, eta))?.exp())).collect()
            })
            .collect::<Result<_>>()?;
        Ok(G2Kernel { vartheta, sigma, kappa0, quad, taus, etas, table })
    }

    /// G₂ at (t, r); the imaginary part is quadrature noise (the integrand
    /// pairs (τ, η) with (−τ, −η) into a real sum).
    pub fn eval(&self, t: f64, r: f64) -> Result<C64> {
        if !(t > 0.0 && r > 0.0) {
            return Err(Error::Config(format!("t, r > 0 required: t = {t}, r = {r}")));
        }
        let x = (r * self.kappa0 * PI / t).ln();
        let lt = t.ln();
        let phase: Vec<C64> = self.etas.iter().map(|&e| C64::from_polar(1.0, e * x)).collect();
        let inner: Vec<C64> = self
            .table
            .par_iter()
            .zip(&self.taus)
            .map(|(row, &tau)| {
                let a: C64 = row.iter().zip(&phase).map(|(v, p)| v * p).sum();
                a * C64::from_polar(1.0, -tau * lt) * self.quad.eta_step
            })
            .collect();
        let h = self.quad.tau_step;
        let sum: C64 = inner.iter().sum::<C64>() * h;
        let l1: f64 = inner.iter().map(|v| v.norm()).sum::<f64>() * h;
        let ends = inner[0].norm() + inner[inner.len() - 1].norm();
        let tail = tail_estimate(ends, t, self.quad.tau_max, self.vartheta);
        if tail > self.quad.tail_tol * l1 {
            return Err(Error::TailTooFat { value: tail / l1, tol: self.quad.tail_tol });
        }
        let pre = -I / (2.0 * PI) * t.powf(-self.sigma) * (self.kappa0 * PI).powf(self.vartheta);
        Ok(pre * sum)
    }
}

/// G₂ at a single point (tabulates Φ; prefer [`G2Kernel`] for sweeps).
pub fn kernel_g2(t: f64, vartheta: f64, r: f64, kappa0: f64, sigma: f64, quad: KernelQuad) -> Result<C64> {
    G2Kernel::new(vartheta, sigma, kappa0, quad)?.eval(t, r)
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 * p.0, a.1 + p.0 * p.1));
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct G2BoundCheck {
    pub vartheta: f64,
    /// Exponent of the bound, σ ∈ (0, min{½, ϑ}).
    pub sigma: f64,
    pub t: Vec<f64>,
    pub g2: Vec<f64>,
    /// max |Im G₂| / max |G₂|.
    pub imag_ratio: f64,
    /// sup |G₂|/t^{σ} (t ≤ 1) and sup |G₂|·t^{σ} (t > 1).
    pub constant: f64,
    /// Log-log slopes of |G₂| on t ≤ 1 and t > 1 (fitted on the outer
    /// halves of the grid).
    pub slope_small_t: f64,
    pub slope_large_t: f64,
    pub slopes_ok: bool,
}

/// The |G₂| ≤ C t^{±σ} bound on `n` log-spaced t in [t_min, 1/t_min].
/// The kernel's own contour sits at σ_c (any point of its window).
pub fn check_g2_bound(vartheta: f64, sigma: f64, sigma_c: f64, kappa0: f64, r: f64, t_min: f64, n: usize, quad: KernelQuad) -> Result<G2BoundCheck> {
    if !(sigma > 0.0 && sigma < 0.5f64.min(vartheta)) {
        return Err(Error::Config(format!("0 < σ < min{{1/2, ϑ}} violated: σ = {sigma}, ϑ = {vartheta}")));
    }
    if !(t_min > 0.0 && t_min < 1.0 && n >= 8) {
        return Err(Error::InsufficientRange(format!("need t_min < 1 and ≥ 8 points, got {t_min}, {n}")));
    }
    let k = G2Kernel::new(vartheta, sigma_c, kappa0, quad)?;
    let t: Vec<f64> = (0..n).map(|i| t_min.powf(1.0 - 2.0 * i as f64 / (n - 1) as f64)).collect();
    let vals: Vec<C64> = t.iter().map(|&t| k.eval(t, r)).collect::<Result<_>>()?;
    let g2: Vec<f64> = vals.iter().map(|v| v.re).collect();
    let max = vals.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let imag = vals.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    let constant = t
        .iter()
        .zip(&vals)
        .map(|(&t, v)| v.norm() / if t <= 1.0 { t.powf(sigma) } else { t.powf(-sigma) })
        .fold(0.0f64, f64::max);
    let side = |lo: f64, hi: f64| {
        let pts: Vec<(f64, f64)> =
            t.iter().zip(&vals).filter(|(t, _)| **t >= lo && **t <= hi).map(|(t, v)| (t.ln(), v.norm().ln())).collect();
        fit_slope(&pts)
    };
    let slope_small_t = side(t_min, t_min.sqrt());
    let slope_large_t = side(1.0 / t_min.sqrt(), 1.0 / t_min);
    Ok(G2BoundCheck {
        vartheta,
        sigma,
        imag_ratio: imag / max,
        constant,
        slopes_ok: slope_small_t >= sigma && slope_large_t <= -sigma,
        slope_small_t,
        slope_large_t,
        t,
        g2,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Q2TipCheck {
    pub alpha: f64,
    pub f_norm: f64,
    /// sup over r ∈ [1e−3, 1] of |q′₂(r)| / (r^{α−1}‖f‖); 0 for f ≡ 0.
    pub constant: f64,
    /// sup |q′₂|/r^{α−1} (no norm), for the scaling check.
    pub sup_ratio: f64,
    /// Log-log slope of |q′₂| on [1e−3, 1e−2]; None for f ≡ 0.
    pub slope: Option<f64>,
    pub slope_ok: bool,
    /// |q′₂| at the smallest radius, which extrapolates q′₂(0).
    pub q2_at_rmin: f64,
}

/// The r^{α−1}‖f‖ bound on q′₂ from the split of the solution.
pub fn check_q2_tip_bound(f: &SourceTerm, params: &SolverParams) -> Result<Q2TipCheck> {
    params.validate()?;
    let alpha = params.alpha();
    let rs: Vec<f64> = (0..31).map(|i| 1e-3 * 10f64.powf(i as f64 / 10.0)).collect();
    if f.is_zero() {
        return Ok(Q2TipCheck { alpha, f_norm: 0.0, constant: 0.0, sup_ratio: 0.0, slope: None, slope_ok: true, q2_at_rmin: 0.0 });
    }
    let np = params.norm_params()?;
    let line = VerticalLine { re: params.mu - params.k as f64, ..params.inversion_line()? };
    let ft = SpectralFunction::from_fn(line, f.strip(), |s| f.mellin(s))?;
    let f_norm = half_norm_spectral(&ft, np)?;
    let (_, q2) = split_q_prime(&rs, f, params)?;
    let sup_ratio = rs.iter().zip(&q2).map(|(r, q)| q.abs() / r.powf(alpha - 1.0)).fold(0.0f64, f64::max);
    let pts: Vec<(f64, f64)> = rs.iter().zip(&q2).take(11).filter(|(_, q)| **q != 0.0).map(|(r, q)| (r.ln(), q.abs().ln())).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientRange("q′₂ vanishes on [1e−3, 1e−2]".into()));
    }
    let slope = fit_slope(&pts);
    Ok(Q2TipCheck {
        alpha,
        f_norm,
        constant: sup_ratio / f_norm,
        sup_ratio,
        slope: Some(slope),
        slope_ok: slope >= alpha - 1.0 - 0.1,
        q2_at_rmin: q2[0].abs(),
    })
}
