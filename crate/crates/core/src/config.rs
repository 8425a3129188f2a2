//! Run configuration: a flat `key = value` file with `#` comments, then
//! `--key value` overrides on top.  Every key has a default, so an empty file
//! is a valid config.

use crate::bounds::{check_kernel_window, check_phi_window, BoundGrid, KernelQuad, DEFAULT_EPS};
use crate::solver::SolverParams;
use crate::source::{load_sampled, make_gamma_pair, FamilyParams, SourceTerm};
use crate::verify::{DECAY_RATIO_MAX, NORM_RATIO_BOUND};
use crate::{Error, Result, C64};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    GammaPair(FamilyParams),
    /// Two-column `r,f` samples.
    Csv(PathBuf),
    Zero,
}

impl SourceSpec {
    pub fn build(&self) -> Result<SourceTerm> {
        match self {
            SourceSpec::GammaPair(p) => make_gamma_pair(p.a, p.b, p.c, p.d),
            SourceSpec::Csv(path) => load_sampled(path),
            SourceSpec::Zero => Ok(SourceTerm::zero()),
        }
    }
}

/// Settings for `crack bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSettings {
    /// Re s for Φ and the majorants.
    pub sigma: f64,
    /// Threshold M of the (η, τ) regions.
    pub m: f64,
    pub eps: f64,
    pub grid: BoundGrid,
    /// M values for the partition fuzz.
    pub fuzz_m: Vec<f64>,
    pub fuzz_points: usize,
    pub fuzz_seed: u64,
    /// Exponent of the G₂ bound and the contour the kernel is built on;
    /// `None` means ¾·min{½, ϑ}.
    pub g2_sigma: Option<f64>,
    pub g2_contour: Option<f64>,
    pub g2_r: f64,
    pub g2_t_min: f64,
    pub g2_points: usize,
    pub quad: KernelQuad,
}

impl Default for BoundsSettings {
    fn default() -> Self {
        BoundsSettings {
            sigma: 0.25,
            m: 5.0,
            eps: DEFAULT_EPS,
            grid: BoundGrid::default(),
            fuzz_m: vec![1.0, 5.0, 20.0],
            fuzz_points: 1_000_000,
            fuzz_seed: 1,
            g2_sigma: None,
            g2_contour: None,
            g2_r: 1.0,
            g2_t_min: 0.1,
            g2_points: 20,
            quad: KernelQuad::default(),
        }
    }
}

/// Tolerances for `crack verify` and `crack norms`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub laplace: f64,
    pub order_min: f64,
    pub trace: f64,
    pub ode: f64,
    pub jump: f64,
    pub second_order: f64,
    pub sign_ratio_min: f64,
    pub polynomial: f64,
    pub decay_ratio_max: f64,
    pub norm_ratio_bound: f64,
    pub norm_stability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            laplace: 1e-4,
            order_min: 1.8,
            trace: 1e-6,
            ode: 1e-4,
            jump: 1e-6,
            second_order: 1e-4,
            sign_ratio_min: 10.0,
            polynomial: 1e-12,
            decay_ratio_max: DECAY_RATIO_MAX,
            norm_ratio_bound: NORM_RATIO_BOUND,
            norm_stability: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverParams,
    pub source: SourceSpec,
    pub bounds: BoundsSettings,
    pub tol: Tolerances,
    pub sign_audit: bool,
    /// Relative step of the Cartesian Laplace stencil.
    pub stencil_h: f64,
    pub poly_points: usize,
    pub poly_seed: u64,
    /// Points for `crack special`.
    pub points: Vec<C64>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            solver: SolverParams::default(),
            source: SourceSpec::GammaPair(FamilyParams { a: 2.0, b: 1.0, c: 1.0, d: 1.0 }),
            bounds: BoundsSettings::default(),
            tol: Tolerances::default(),
            sign_audit: true,
            stencil_h: 2e-3,
            poly_points: 100,
            poly_seed: 0,
            points: vec![C64::new(-0.25, 0.0), C64::new(-0.25, 2.0), C64::new(-0.1, -5.0), C64::new(-0.4, 12.0)],
            out: PathBuf::from("out"),
        }
    }
}

/// Splits a config file into (key, value) pairs, keeping line numbers for
/// error messages.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {line:?}", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// `--key value` pairs from the tail of the command line.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(k) = it.next() {
        let key = k.strip_prefix("--").ok_or_else(|| Error::Config(format!("expected --key, got {k:?}")))?;
        let v = it.next().ok_or_else(|| Error::Config(format!("--{key} needs a value")))?;
        out.push((key.replace('-', "_"), v.clone()));
    }
    Ok(out)
}

fn num(key: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::Config(format!("{key}: not a finite number: {v:?}"))),
    }
}

fn auto(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: not a non-negative integer: {v:?}")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got {v:?}"))),
    }
}

/// `re,im` pairs separated by `;`; a bare number is real.
pub fn parse_points(v: &str) -> Result<Vec<C64>> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s.split_once(',') {
            Some((a, b)) => Ok(C64::new(num("points", a.trim())?, num("points", b.trim())?)),
            None => Ok(C64::new(num("points", s)?, 0.0)),
        })
        .collect()
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Reads `path` (if given), applies `overrides`, validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                parse_pairs(&text)?
            }
            None => Vec::new(),
        };
        pairs.extend_from_slice(overrides);
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut c = RunConfig::default();
        // the family parameters may come in any order relative to `source`
        let mut fam = FamilyParams { a: 2.0, b: 1.0, c: 1.0, d: 1.0 };
        let mut kind = "gamma_pair".to_string();
        let mut csv: Option<PathBuf> = None;
        for (k, v) in pairs {
            match k.as_str() {
                "source" => kind = v.clone(),
                "source_a" => fam.a = num(k, v)?,
                "source_b" => fam.b = num(k, v)?,
                "source_c" => fam.c = num(k, v)?,
                "source_d" => fam.d = num(k, v)?,
                "source_csv" => csv = Some(PathBuf::from(v)),
                _ => c.set(k, v)?,
            }
        }
        c.source = match kind.as_str() {
            "gamma_pair" => SourceSpec::GammaPair(fam),
            "zero" => SourceSpec::Zero,
            "csv" => SourceSpec::Csv(csv.ok_or_else(|| Error::Config("source = csv needs source_csv".into()))?),
            other => return Err(Error::Config(format!("source: expected gamma_pair, csv or zero, got {other:?}"))),
        };
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, k: &str, v: &str) -> Result<()> {
        let s = &mut self.solver;
        let b = &mut self.bounds;
        let t = &mut self.tol;
        match k {
            "kappa1" => s.kappa1 = num(k, v)?,
            "kappa2" => s.kappa2 = num(k, v)?,
            "k" => s.k = int(k, v)?,
            "mu" => s.mu = num(k, v)?,
            "vartheta" => s.vartheta = auto(k, v)?,
            "inversion_line_re" => s.inversion_line_re = num(k, v)?,
            "field_line_re" => s.field_line_re = num(k, v)?,
            "contour_eps" => s.contour_eps = num(k, v)?,
            "pv_reg_width" => s.pv_reg_width = num(k, v)?,
            "y_max" => s.y_max = num(k, v)?,
            "line_im_max" => s.line_im_max = num(k, v)?,
            "line_nodes" => s.line_nodes = int(k, v)?,
            "r_min" => s.r_min = num(k, v)?,
            "r_max" => s.r_max = num(k, v)?,
            "n_r" => s.n_r = int(k, v)?,
            "n_theta" => s.n_theta = int(k, v)?,
            "tail_tol" => s.tail_tol = num(k, v)?,
            "sigma" => b.sigma = num(k, v)?,
            "region_m" => b.m = num(k, v)?,
            "eps" => b.eps = num(k, v)?,
            "grid_extent" => b.grid.extent = num(k, v)?,
            "grid_step" => b.grid.step = num(k, v)?,
            "fuzz_m" => b.fuzz_m = list(k, v)?,
            "fuzz_points" => b.fuzz_points = int(k, v)?,
            "fuzz_seed" => b.fuzz_seed = int(k, v)?,
            "g2_sigma" => b.g2_sigma = auto(k, v)?,
            "g2_contour" => b.g2_contour = auto(k, v)?,
            "g2_r" => b.g2_r = num(k, v)?,
            "g2_t_min" => b.g2_t_min = num(k, v)?,
            "g2_points" => b.g2_points = int(k, v)?,
            "kernel_tau_max" => b.quad.tau_max = num(k, v)?,
            "kernel_tau_step" => b.quad.tau_step = num(k, v)?,
            "kernel_eta_max" => b.quad.eta_max = num(k, v)?,
            "kernel_eta_step" => b.quad.eta_step = num(k, v)?,
            "kernel_tail_tol" => b.quad.tail_tol = num(k, v)?,
            "tol_laplace" => t.laplace = num(k, v)?,
            "order_min" => t.order_min = num(k, v)?,
            "tol_trace" => t.trace = num(k, v)?,
            "tol_ode" => t.ode = num(k, v)?,
            "tol_jump" => t.jump = num(k, v)?,
            "tol_second_order" => t.second_order = num(k, v)?,
            "sign_ratio_min" => t.sign_ratio_min = num(k, v)?,
            "tol_polynomial" => t.polynomial = num(k, v)?,
            "decay_ratio_max" => t.decay_ratio_max = num(k, v)?,
            "norm_ratio_bound" => t.norm_ratio_bound = num(k, v)?,
            "norm_stability" => t.norm_stability = num(k, v)?,
            "sign_audit" => self.sign_audit = boolean(k, v)?,
            "stencil_h" => self.stencil_h = num(k, v)?,
            "poly_points" => self.poly_points = int(k, v)?,
            "poly_seed" => self.poly_seed = int(k, v)?,
            "points" => self.points = parse_points(v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key {k:?}"))),
        }
        Ok(())
    }

    pub fn g2_sigma(&self) -> f64 {
        self.bounds.g2_sigma.unwrap_or(0.75 * 0.5f64.min(self.solver.vartheta()))
    }

    pub fn g2_contour(&self) -> f64 {
        self.bounds.g2_contour.unwrap_or(0.75 * 0.5f64.min(self.solver.vartheta()))
    }

    /// Checks every parameter window; the message names the inequality.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let th = self.solver.vartheta();
        check_phi_window(self.bounds.sigma, th)?;
        check_kernel_window(self.g2_contour(), th)?;
        let b = &self.bounds;
        let gs = self.g2_sigma();
        if !(gs > 0.0 && gs < 0.5f64.min(th)) {
            return Err(Error::Config(format!("0 < g2_sigma < min{{1/2, ϑ}} violated: g2_sigma = {gs}, ϑ = {th}")));
        }
        if !(b.m > 0.0) || b.fuzz_m.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::Config("M > 0 violated (region_m, fuzz_m)".into()));
        }
        if !(b.eps > 0.0 && b.eps < std::f64::consts::FRAC_PI_4) {
            return Err(Error::Config(format!("0 < eps < π/4 violated: eps = {}", b.eps)));
        }
        if !(b.grid.step > 0.0 && b.grid.extent >= 4.0 * b.grid.step) {
            return Err(Error::Config("grid_step > 0 and grid_extent ≥ 4·grid_step violated".into()));
        }
        if !(self.stencil_h > 0.0 && self.stencil_h < 0.1) {
            return Err(Error::Config(format!("0 < stencil_h < 0.1 violated: {}", self.stencil_h)));
        }
        if let SourceSpec::GammaPair(p) = &self.source {
            if !(p.a > 0.0 && p.b > 0.0 && p.c > 0.0 && p.d > 0.0) {
                return Err(Error::Config(format!("gamma pair parameters a, b, c, d > 0 violated: {p:?}")));
            }
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order; feeding this back
    /// through `from_pairs` reproduces the config.  `out` is left out: it
    /// says where results go, not what they are.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let s = &self.solver;
        let b = &self.bounds;
        let t = &self.tol;
        let mut e: Vec<(&'static str, String)> = Vec::new();
        match &self.source {
            SourceSpec::GammaPair(p) => {
                e.push(("source", "gamma_pair".into()));
                e.extend([("source_a", p.a), ("source_b", p.b), ("source_c", p.c), ("source_d", p.d)].map(|(k, v)| (k, format!("{v:?}"))));
            }
            SourceSpec::Csv(path) => {
                e.push(("source", "csv".into()));
                e.push(("source_csv", path.display().to_string()));
            }
            SourceSpec::Zero => e.push(("source", "zero".into())),
        }
        let f = |x: f64| format!("{x:?}");
        e.extend([
            ("kappa1", f(s.kappa1)),
            ("kappa2", f(s.kappa2)),
            ("k", s.k.to_string()),
            ("mu", f(s.mu)),
            ("vartheta", s.vartheta.map_or("auto".into(), f)),
            ("inversion_line_re", f(s.inversion_line_re)),
            ("field_line_re", f(s.field_line_re)),
            ("contour_eps", f(s.contour_eps)),
            ("pv_reg_width", f(s.pv_reg_width)),
            ("y_max", f(s.y_max)),
            ("line_im_max", f(s.line_im_max)),
            ("line_nodes", s.line_nodes.to_string()),
            ("r_min", f(s.r_min)),
            ("r_max", f(s.r_max)),
            ("n_r", s.n_r.to_string()),
            ("n_theta", s.n_theta.to_string()),
            ("tail_tol", f(s.tail_tol)),
            ("sigma", f(b.sigma)),
            ("region_m", f(b.m)),
            ("eps", f(b.eps)),
            ("grid_extent", f(b.grid.extent)),
            ("grid_step", f(b.grid.step)),
            ("fuzz_m", join(&b.fuzz_m)),
            ("fuzz_points", b.fuzz_points.to_string()),
            ("fuzz_seed", b.fuzz_seed.to_string()),
            ("g2_sigma", b.g2_sigma.map_or("auto".into(), f)),
            ("g2_contour", b.g2_contour.map_or("auto".into(), f)),
            ("g2_r", f(b.g2_r)),
            ("g2_t_min", f(b.g2_t_min)),
            ("g2_points", b.g2_points.to_string()),
            ("kernel_tau_max", f(b.quad.tau_max)),
            ("kernel_tau_step", f(b.quad.tau_step)),
            ("kernel_eta_max", f(b.quad.eta_max)),
            ("kernel_eta_step", f(b.quad.eta_step)),
            ("kernel_tail_tol", f(b.quad.tail_tol)),
            ("tol_laplace", f(t.laplace)),
            ("order_min", f(t.order_min)),
            ("tol_trace", f(t.trace)),
            ("tol_ode", f(t.ode)),
            ("tol_jump", f(t.jump)),
            ("tol_second_order", f(t.second_order)),
            ("sign_ratio_min", f(t.sign_ratio_min)),
            ("tol_polynomial", f(t.polynomial)),
            ("decay_ratio_max", f(t.decay_ratio_max)),
            ("norm_ratio_bound", f(t.norm_ratio_bound)),
            ("norm_stability", f(t.norm_stability)),
            ("sign_audit", self.sign_audit.to_string()),
            ("stencil_h", f(self.stencil_h)),
            ("poly_points", self.poly_points.to_string()),
            ("poly_seed", self.poly_seed.to_string()),
            ("points", self.points.iter().map(|z| format!("{:?},{:?}", z.re, z.im)).collect::<Vec<_>>().join(";")),
        ]);
        e
    }

    /// `echo()` as a config file.
    pub fn to_text(&self) -> String {
        self.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
