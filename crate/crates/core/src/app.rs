//! The `crack` subcommands as library calls: each runs its stages, writes
//! artifacts into one directory and reports whether every check passed.
//!
//! Everything written here is a pure function of the config; wall-clock
//! timings go to `timing.json`, which is not part of the inventory.

use crate::bounds::{
    check_bound, check_g2_bound, check_q2_tip_bound, classify, ln_phi, partition_fuzz, tau_scaled_arg_sup, Majorant,
};
use crate::config::RunConfig;
use crate::solver::{solve, SolutionBundle, SolverParams};
use crate::source::{builtin_family, SourceTerm};
use crate::special::{d0, gamma, k0, k1, k_product, omega, ComplexEval};
use crate::verify::*;
use crate::{Error, Result, C64};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST_FORMAT: u32 = 1;

/// 17 significant digits, enough for a lossless f64 round trip.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    b.push(b'\n');
    Ok(b)
}

#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub ok: bool,
    pub error: Option<String>,
    /// Stage-specific error estimates and diagnostics.
    pub estimates: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub format: u32,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
    pub files: Vec<FileEntry>,
    pub passed: bool,
}

/// One pass/fail line of a command's summary.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    /// `"<="` or `">="`.
    pub op: &'static str,
    pub limit: f64,
    pub passed: bool,
}

impl CheckLine {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        CheckLine { name: name.into(), value, op: "<=", limit, passed: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        CheckLine { name: name.into(), value, op: ">=", limit, passed: value >= limit }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        CheckLine { name: name.into(), value: ok as u8 as f64, op: ">=", limit: 1.0, passed: ok }
    }
}

pub fn summary_table(checks: &[CheckLine]) -> String {
    let w = checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<w$}  {:>12}  {:2}  {:>10}  result\n", "check", "value", "", "limit");
    for c in checks {
        s += &format!(
            "{:<w$}  {:>12.4e}  {:2}  {:>10.2e}  {}\n",
            c.name,
            c.value,
            c.op,
            c.limit,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    s
}

/// Collects artifacts, checksums and stage records for one run.
pub struct RunDir {
    dir: PathBuf,
    command: String,
    config: BTreeMap<String, String>,
    files: Vec<FileEntry>,
    stages: Vec<StageRecord>,
    timing: BTreeMap<String, f64>,
}

impl RunDir {
    pub fn new(dir: &Path, command: &str, cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            command: command.into(),
            config: cfg.echo().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            files: Vec::new(),
            stages: Vec::new(),
            timing: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let sha256 = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.files.push(FileEntry { name: name.into(), bytes: bytes.len() as u64, sha256 });
        Ok(())
    }

    /// Runs one stage, timing it and recording its outcome; errors come
    /// back tagged with the stage name.
    pub fn stage<T, F, E>(&mut self, name: &str, run: F, estimates: E) -> Result<T>
    where
        F: FnOnce() -> Result<T>,
        E: FnOnce(&T) -> serde_json::Value,
    {
        let t0 = Instant::now();
        let out = run();
        self.timing.insert(name.into(), t0.elapsed().as_secs_f64());
        match out {
            Ok(v) => {
                self.stages.push(StageRecord { stage: name.into(), ok: true, error: None, estimates: estimates(&v) });
                Ok(v)
            }
            Err(e) => {
                self.stages.push(StageRecord {
                    stage: name.into(),
                    ok: false,
                    error: Some(e.to_string()),
                    estimates: serde_json::Value::Null,
                });
                Err(e.at(name))
            }
        }
    }

    /// Writes config.txt, timing.json and manifest.json.  The config file
    /// is inventoried, the timing file is not.
    pub fn finish(mut self, passed: bool) -> Result<Manifest> {
        let text: String = self.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        self.write("config.txt", text.as_bytes())?;
        let timing = json_bytes(&self.timing)?;
        std::fs::write(self.dir.join("timing.json"), timing)?;
        let m = Manifest {
            command: self.command,
            format: MANIFEST_FORMAT,
            version: env!("CARGO_PKG_VERSION").into(),
            config: self.config,
            stages: self.stages,
            files: self.files,
            passed,
        };
        std::fs::write(self.dir.join("manifest.json"), json_bytes(&m)?)?;
        Ok(m)
    }

    /// Records a failed run so the directory still has a manifest.
    pub fn abort(self, err: &Error) -> Error {
        let _ = self.finish(false);
        err.clone()
    }
}

/// What a command returns to the front end.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub checks: Vec<CheckLine>,
    pub manifest: Manifest,
}

fn value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn with_dir<F>(cfg: &RunConfig, out: &Path, command: &str, body: F) -> Result<Outcome>
where
    F: FnOnce(&mut RunDir) -> Result<Vec<CheckLine>>,
{
    let mut run = RunDir::new(out, command, cfg)?;
    match body(&mut run) {
        Ok(checks) => {
            let passed = checks.iter().all(|c| c.passed);
            let manifest = run.finish(passed)?;
            Ok(Outcome { passed, checks, manifest })
        }
        Err(e) => Err(run.abort(&e)),
    }
}

fn build_source(run: &mut RunDir, cfg: &RunConfig) -> Result<SourceTerm> {
    run.stage("source", || cfg.source.build(), |f| serde_json::json!({ "family": f.family, "provenance": format!("{:?}", f.provenance) }))
}

fn run_solver(run: &mut RunDir, f: &SourceTerm, p: &SolverParams) -> Result<SolutionBundle> {
    run.stage("solve", || solve(f, p), |b| value(&b.diagnostics))
}

/// q.csv, p.csv, traces.csv.
pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    with_dir(cfg, out, "solve", |run| {
        let f = build_source(run, cfg)?;
        let b = run_solver(run, &f, &cfg.solver)?;
        let q = csv_bytes(
            &["r", "q", "q_prime", "q_second"],
            (0..b.r.len()).map(|i| vec![fmt_num(b.r[i]), fmt_num(b.q[i]), fmt_num(b.q_prime[i]), fmt_num(b.q_second[i])]),
        )?;
        run.write("q.csv", &q)?;
        let p = csv_bytes(
            &["r", "theta", "p"],
            b.r.iter()
                .zip(&b.p)
                .flat_map(|(&r, row)| b.theta.iter().zip(row).map(move |(&t, &v)| vec![fmt_num(r), fmt_num(t), fmt_num(v)])),
        )?;
        run.write("p.csv", &p)?;
        let tr = run.stage(
            "traces",
            || {
                let rows: Vec<Vec<String>> = (0..b.r.len())
                    .map(|i| {
                        let r = b.r[i];
                        [r, b.p_at(r, PI), b.p_at(r, -PI), b.p_theta_plus[i], b.p_theta_minus[i], b.q[i], f.eval(r)]
                            .map(fmt_num)
                            .to_vec()
                    })
                    .collect();
                csv_bytes(&["r", "p_plus", "p_minus", "p_theta_plus", "p_theta_minus", "q", "f"], rows)
            },
            |_| serde_json::Value::Null,
        )?;
        run.write("traces.csv", &tr)?;
        let d = &b.diagnostics;
        Ok(vec![
            CheckLine::at_most("imag_leakage", d.imag_leakage, 1e-8),
            CheckLine::at_most("tail_ratio", d.tail_ratio, cfg.solver.tail_tol),
        ])
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PolynomialRun {
    pub degree: usize,
    pub reports: Vec<ResidualReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckLine>,
    pub reports: Vec<ResidualReport>,
    pub sign_audit: Option<SignAudit>,
    pub tip_decay: TipDecayReport,
    pub polynomial: Vec<PolynomialRun>,
}

/// Coefficient sets of the polynomial exact solutions, degrees 0–4.
pub const POLYNOMIAL_CASES: [&[f64]; 5] =
    [&[1.0], &[0.5, -1.0], &[1.0, 0.3, -0.7], &[0.0, 1.0, 0.0, 0.4], &[0.2, -0.1, 0.3, 0.5, -0.25]];

pub fn interior_points() -> Vec<(f64, f64)> {
    [0.05, 0.3, 1.0, 3.0, 20.0]
        .iter()
        .flat_map(|&r| [-2.5, -1.0, 0.0, 0.7, 2.0, 2.8].iter().map(move |&t| (r, t)))
        .collect()
}

pub fn tip_radii() -> Vec<f64> {
    (0..10).map(|i| 1e-3 * 10f64.powf(i as f64 / 9.0)).collect()
}

/// Zero residuals have no convergence order; that counts as a pass.
fn order_or_exact(rep: &ResidualReport) -> f64 {
    match rep.order {
        Some(o) => o,
        None if rep.max_abs == 0.0 => f64::INFINITY,
        None => f64::NAN,
    }
}

/// The residual suite against an existing solution.
pub fn verify_bundle(cfg: &RunConfig, b: &SolutionBundle, f: &SourceTerm) -> Result<VerifyReport> {
    let tol = &cfg.tol;
    let (k1, k2) = (cfg.solver.kappa1, cfg.solver.kappa2);
    let probe = SolverProbe { bundle: b, source: f };
    let mid: Vec<f64> = b.r.iter().copied().filter(|r| (1e-2..=1e2).contains(r)).collect();
    let mut checks = Vec::new();
    let mut reports = Vec::new();

    let lap = laplace_residual(&probe, &interior_points(), cfg.stencil_h)?;
    checks.push(CheckLine::at_most("laplace_stencil", lap.max_rel, tol.laplace));
    checks.push(CheckLine::at_least("laplace_stencil_order", order_or_exact(&lap), tol.order_min));
    reports.push(lap);
    let grid = laplace_residual_grid(&b.r, &b.theta, &b.p, 1e-2, 1e2)?;
    checks.push(CheckLine::at_least("laplace_grid_order", order_or_exact(&grid), tol.order_min));
    reports.push(grid);

    for rep in bc_residuals(&probe, &mid, k1) {
        checks.push(CheckLine::at_most(&rep.check, rep.max_rel, tol.trace));
        reports.push(rep);
    }
    let ode = ode_residual(&probe, &mid, k2, 1.0);
    checks.push(CheckLine::at_most(&ode.check, ode.max_rel, tol.ode));
    reports.push(ode);
    let audit = if cfg.sign_audit {
        let a = sign_audit(&probe, &mid, k2);
        if !f.is_zero() {
            checks.push(CheckLine::at_least("sign_audit_ratio", a.ratio, tol.sign_ratio_min));
            checks.push(CheckLine::flag(&format!("sign_audit_prefers_{}", a.preferred), a.preferred == "printed"));
        }
        Some(a)
    } else {
        None
    };

    let v = venttsel_residuals(&probe, &mid, &tip_radii(), k1, k2);
    checks.push(CheckLine::at_most(&v[0].check, v[0].max_rel, tol.jump));
    checks.push(CheckLine::at_most(&v[1].check, v[1].max_rel, tol.second_order));
    let tip_order = if v[2].max_abs == 0.0 { f64::INFINITY } else { v[2].order.unwrap_or(f64::NAN) };
    checks.push(CheckLine { name: "venttsel_tip_slope".into(), value: tip_order, op: ">", limit: 0.0, passed: tip_order > 0.0 });
    reports.extend(v);

    let td = tip_and_decay_checks(b)?;
    let slope = td.tip_slope.unwrap_or(f64::INFINITY);
    checks.push(CheckLine::at_least("tip_slope", slope, td.tip_threshold));
    checks.push(CheckLine::at_most("decay_ratio", td.decay_ratio, tol.decay_ratio_max));

    let mut polynomial = Vec::new();
    for (deg, fc) in POLYNOMIAL_CASES.iter().enumerate() {
        let o = PolynomialOracle::new(fc.to_vec(), 0.4, -0.2);
        let reps = polynomial_oracle_check(&o, cfg.poly_points, cfg.poly_seed + deg as u64, k1, k2);
        let worst = reps.iter().fold(0.0f64, |m, r| m.max(r.max_abs));
        checks.push(CheckLine::at_most(&format!("polynomial_degree_{deg}"), worst, tol.polynomial));
        polynomial.push(PolynomialRun { degree: deg, reports: reps });
    }
    Ok(VerifyReport { checks, reports, sign_audit: audit, tip_decay: td, polynomial })
}

/// residuals.json and summary.txt; fails if any residual is over tolerance.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    with_dir(cfg, out, "verify", |run| {
        let f = build_source(run, cfg)?;
        let b = run_solver(run, &f, &cfg.solver)?;
        let rep = run.stage(
            "residuals",
            || verify_bundle(cfg, &b, &f),
            |r| serde_json::json!({ "failed": r.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect::<Vec<_>>() }),
        )?;
        run.write("residuals.json", &json_bytes(&rep)?)?;
        run.write("summary.txt", summary_table(&rep.checks).as_bytes())?;
        Ok(rep.checks)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormRun {
    pub source: NormReport,
    /// The same ratio with twice the line nodes and twice the truncation.
    pub refined: NormReport,
    pub stability: f64,
    pub family: Vec<(Option<crate::source::FamilyParams>, NormReport)>,
    pub family_max_ratio: f64,
    pub ratio_bound: f64,
}

pub fn norm_run(cfg: &RunConfig, f: &SourceTerm) -> Result<NormRun> {
    let p = cfg.solver;
    let source = norm_estimate(f, &p)?;
    let fine = SolverParams { line_nodes: 2 * p.line_nodes, line_im_max: 2.0 * p.line_im_max, ..p };
    let refined = norm_estimate(f, &fine)?;
    let stability = if source.degenerate { 0.0 } else { (refined.ratio - source.ratio).abs() / source.ratio };
    let family = builtin_family()?
        .into_iter()
        .map(|g| Ok((g.family, norm_estimate(&g, &p)?)))
        .collect::<Result<Vec<_>>>()?;
    let family_max_ratio = family.iter().fold(0.0f64, |m, (_, r)| m.max(r.ratio));
    Ok(NormRun { source, refined, stability, family, family_max_ratio, ratio_bound: cfg.tol.norm_ratio_bound })
}

pub fn norm_checks(cfg: &RunConfig, n: &NormRun) -> Vec<CheckLine> {
    vec![
        CheckLine::flag("ratio_finite", n.source.ratio.is_finite()),
        CheckLine::at_most("ratio_stability", n.stability, cfg.tol.norm_stability),
        CheckLine::at_most("ratio", n.source.ratio, cfg.tol.norm_ratio_bound),
        CheckLine::at_most("family_max_ratio", n.family_max_ratio, cfg.tol.norm_ratio_bound),
    ]
}

/// norms.json.
pub fn cmd_norms(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    with_dir(cfg, out, "norms", |run| {
        let f = build_source(run, cfg)?;
        let n = run.stage("norms", || norm_run(cfg, &f), |n| serde_json::json!({ "tail_fraction": n.source.tail_fraction }))?;
        let checks = norm_checks(cfg, &n);
        run.write("norms.json", &json_bytes(&serde_json::json!({ "norms": n, "checks": checks }))?)?;
        Ok(checks)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsRun {
    pub fuzz: Vec<crate::bounds::FuzzReport>,
    pub bounds: Vec<crate::bounds::BoundCheck>,
    pub tau_scaled_arg_sup: f64,
    pub g2: crate::bounds::G2BoundCheck,
    pub q2_tip: crate::bounds::Q2TipCheck,
}

pub fn bounds_run(cfg: &RunConfig, f: &SourceTerm) -> Result<BoundsRun> {
    let b = &cfg.bounds;
    let th = cfg.solver.vartheta();
    let fuzz = b.fuzz_m.iter().enumerate().map(|(i, &m)| partition_fuzz(m, b.fuzz_points, b.fuzz_seed + i as u64)).collect();
    let bounds = Majorant::ALL
        .iter()
        .map(|&m| check_bound(m, b.sigma, th, b.m, b.eps, b.grid))
        .collect::<Result<Vec<_>>>()?;
    let sup = tau_scaled_arg_sup(b.sigma, th, b.m, b.grid)?;
    let g2 = check_g2_bound(th, cfg.g2_sigma(), cfg.g2_contour(), cfg.solver.kappa0(), b.g2_r, b.g2_t_min, b.g2_points, b.quad)?;
    let q2_tip = check_q2_tip_bound(f, &cfg.solver)?;
    Ok(BoundsRun { fuzz, bounds, tau_scaled_arg_sup: sup, g2, q2_tip })
}

pub fn bounds_checks(r: &BoundsRun) -> Vec<CheckLine> {
    let mut c = Vec::new();
    for z in &r.fuzz {
        c.push(CheckLine::flag(&format!("partition_m{}", z.m), z.is_partition() && z.cone_violations == 0));
    }
    for b in &r.bounds {
        c.push(CheckLine::flag(&format!("bound_{}", b.majorant.name()), b.passed()));
    }
    c.push(CheckLine::flag("g2_constant_finite", r.g2.constant.is_finite()));
    c.push(CheckLine::at_least("g2_slope_small_t", r.g2.slope_small_t, r.g2.sigma));
    c.push(CheckLine::at_most("g2_slope_large_t", r.g2.slope_large_t, -r.g2.sigma));
    c.push(CheckLine::flag("q2_tip_bound", r.q2_tip.constant.is_finite() && r.q2_tip.slope_ok));
    c
}

/// regions.csv (the (η, τ) grid with region labels, ln|Φ| and the master
/// majorant) and constants.json.
pub fn cmd_bounds(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    with_dir(cfg, out, "bounds", |run| {
        let f = build_source(run, cfg)?;
        let r = run.stage("bounds", || bounds_run(cfg, &f), |r| serde_json::json!({ "g2_imag_ratio": r.g2.imag_ratio }))?;
        let b = &cfg.bounds;
        let th = cfg.solver.vartheta();
        let n = (b.grid.extent / b.grid.step).round() as i64;
        let axis: Vec<f64> = (-n..=n).map(|i| i as f64 * b.grid.step).collect();
        let mut rows = Vec::with_capacity(axis.len() * axis.len());
        for &eta in &axis {
            for &tau in &axis {
                let lp = ln_phi(C64::new(b.sigma, tau), C64::new(th, eta)).map(|v| v.re).unwrap_or(f64::NAN);
                let lm = Majorant::Master.ln_value(eta, tau, b.sigma, th, b.eps);
                rows.push(vec![fmt_num(eta), fmt_num(tau), classify(eta, tau, b.m).name().to_string(), fmt_num(lp), fmt_num(lm)]);
            }
        }
        run.write("regions.csv", &csv_bytes(&["eta", "tau", "region", "ln_abs_phi", "ln_master"], rows)?)?;
        let checks = bounds_checks(&r);
        run.write("constants.json", &json_bytes(&serde_json::json!({ "bounds": r, "checks": checks }))?)?;
        Ok(checks)
    })
}

/// One row of the special-function table; `None` where the function is
/// undefined at the point, with the reason in `errors`.
#[derive(Debug, Clone)]
pub struct SpecialRow {
    pub point: C64,
    pub values: Vec<Option<C64>>,
    pub errors: Vec<String>,
}

pub const SPECIAL_COLUMNS: [&str; 6] = ["gamma", "omega", "k", "k0", "k1", "d0"];

pub fn special_rows(points: &[C64], kappa0: f64) -> Vec<SpecialRow> {
    points
        .iter()
        .map(|&z| {
            let evals: [Result<ComplexEval>; 6] = [gamma(z), omega(z), k_product(z), k0(z), k1(z), d0(z, kappa0)];
            let mut errors = Vec::new();
            let values = evals
                .into_iter()
                .zip(SPECIAL_COLUMNS)
                .map(|(e, name)| match e {
                    Ok(v) => Some(v.value),
                    Err(e) => {
                        errors.push(format!("{name}({z}): {e}"));
                        None
                    }
                })
                .collect();
            SpecialRow { point: z, values, errors }
        })
        .collect()
}

/// special.csv: Γ, ω, K, K₀, K₁, d₀ at the configured points (NaN where
/// undefined, which also fails the run).
pub fn cmd_special(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    with_dir(cfg, out, "special", |run| {
        let k0v = cfg.solver.kappa0();
        let rows = run.stage(
            "special",
            || Ok(special_rows(&cfg.points, k0v)),
            |rows| serde_json::json!({ "errors": rows.iter().flat_map(|r| r.errors.clone()).collect::<Vec<_>>() }),
        )?;
        let mut header = vec!["re".to_string(), "im".to_string()];
        for c in SPECIAL_COLUMNS {
            header.push(format!("{c}_re"));
            header.push(format!("{c}_im"));
        }
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        let body = rows.iter().map(|r| {
            let mut v = vec![fmt_num(r.point.re), fmt_num(r.point.im)];
            for x in &r.values {
                let x = x.unwrap_or(C64::new(f64::NAN, f64::NAN));
                v.push(fmt_num(x.re));
                v.push(fmt_num(x.im));
            }
            v
        });
        run.write("special.csv", &csv_bytes(&h, body)?)?;
        let bad = rows.iter().map(|r| r.errors.len()).sum::<usize>();
        Ok(vec![CheckLine::at_most("undefined_values", bad as f64, 0.0)])
    })
}

pub fn run_command(name: &str, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    match name {
        "solve" => cmd_solve(cfg, out),
        "verify" => cmd_verify(cfg, out),
        "norms" => cmd_norms(cfg, out),
        "bounds" => cmd_bounds(cfg, out),
        "special" => cmd_special(cfg, out),
        _ => Err(Error::Config(format!("unknown command {name:?}"))),
    }
}
