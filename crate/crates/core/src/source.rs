//! The datum f on the crack line, parameterized by r = −x₁ > 0.

use crate::quad::{self, LogGridOptions};
use crate::special::{ln_gamma, Strip};
use crate::{Error, Result, C64};
use std::path::Path;

/// One term A·r^{a−1}e^{−br}.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GammaTerm {
    pub amp: f64,
    pub a: f64,
    pub b: f64,
}

impl GammaTerm {
    fn eval(&self, r: f64) -> f64 {
        self.amp * r.powf(self.a - 1.0) * (-self.b * r).exp()
    }

    /// A·Γ(s+a−1)·b^{−(s+a−1)}
    fn mellin(&self, s: C64) -> Result<C64> {
        let z = s + (self.a - 1.0);
        Ok((ln_gamma(z)? - z * self.b.ln()).exp() * self.amp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FamilyParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Sampled,
}

/// Sampled data: PCHIP interpolant on [r₀, r_N], constant f(r₀) below,
/// fitted C·e^{−γr} above.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    slopes: Vec<f64>,
    pub tail_c: f64,
    pub tail_gamma: f64,
    /// Log-line quadrature (x_i, w_i f(e^{x_i})) shared by every transform
    /// evaluation.
    nodes: Vec<(f64, f64)>,
    tail_nodes: usize,
}

#[derive(Debug, Clone)]
enum Kind {
    Gamma(Vec<GammaTerm>),
    Sampled(Box<Sampled>, f64),
}

#[derive(Debug, Clone)]
pub struct SourceTerm {
    kind: Kind,
    strip: Strip,
    pub family: Option<FamilyParams>,
    pub provenance: Provenance,
}

/// Real parts on which sampled transforms are resolved.
const SAMPLED_STRIP: Strip = Strip { re_min: 0.25, re_max: 5.0 };

impl SourceTerm {
    pub fn zero() -> Self {
        SourceTerm {
            kind: Kind::Gamma(Vec::new()),
            strip: Strip { re_min: f64::NEG_INFINITY, re_max: f64::INFINITY },
            family: None,
            provenance: Provenance::ClosedForm,
        }
    }

    /// Σ A·r^{a−1}e^{−br}; need not have zero mean (see
    /// [`validate_compatibility`]).
    pub fn from_terms(terms: Vec<GammaTerm>) -> Result<Self> {
        for t in &terms {
            if !(t.a > 0.0 && t.b > 0.0) || !t.amp.is_finite() {
                return Err(Error::Config(format!("gamma term needs a, b > 0: {t:?}")));
            }
        }
        let amin = terms.iter().map(|t| t.a).fold(f64::INFINITY, f64::min);
        let re_min = if terms.is_empty() { f64::NEG_INFINITY } else { 1.0 - amin };
        Ok(SourceTerm {
            kind: Kind::Gamma(terms),
            strip: Strip { re_min, re_max: f64::INFINITY },
            family: None,
            provenance: Provenance::ClosedForm,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Gamma(ts) => ts.iter().map(|t| t.eval(r)).sum(),
            Kind::Sampled(s, scale) => scale * s.eval(r),
        }
    }

    /// f̃(s) = ∫₀^∞ r^{s−1}f(r)dr.
    pub fn mellin(&self, s: C64) -> Result<C64> {
        if !self.strip.contains(s) {
            return Err(Error::Domain { arg: format!("f̃ at {s}"), re_min: self.strip.re_min, re_max: self.strip.re_max });
        }
        match &self.kind {
            Kind::Gamma(ts) => ts.iter().try_fold(C64::new(0.0, 0.0), |acc, t| Ok(acc + t.mellin(s)?)),
            Kind::Sampled(d, scale) => Ok(d.mellin(s) * *scale),
        }
    }

    pub fn strip(&self) -> Strip {
        self.strip
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            Kind::Gamma(ts) => ts.iter().all(|t| t.amp == 0.0),
            Kind::Sampled(_, scale) => *scale == 0.0,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        let kind = match &self.kind {
            Kind::Gamma(ts) => Kind::Gamma(ts.iter().map(|t| GammaTerm { amp: t.amp * k, ..*t }).collect()),
            Kind::Sampled(d, s) => Kind::Sampled(d.clone(), s * k),
        };
        SourceTerm { kind, ..self.clone() }
    }

    /// f + g for closed-form sources.
    pub fn plus(&self, other: &SourceTerm) -> Result<Self> {
        match (&self.kind, &other.kind) {
            (Kind::Gamma(a), Kind::Gamma(b)) => {
                let mut t = a.clone();
                t.extend_from_slice(b);
                let mut s = SourceTerm::from_terms(t)?;
                s.strip = Strip {
                    re_min: self.strip.re_min.max(other.strip.re_min),
                    re_max: self.strip.re_max.min(other.strip.re_max),
                };
                Ok(s)
            }
            _ => Err(Error::Config("sums are only formed for closed-form sources".into())),
        }
    }

    /// Sample range of tabulated data.
    pub fn sample_range(&self) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Sampled(d, _) => Some((d.r[0], d.r[d.r.len() - 1])),
            _ => None,
        }
    }

    /// Share of |f̃(s)| contributed by the extrapolated tail (sampled data).
    pub fn tail_fraction(&self, s: C64) -> f64 {
        match &self.kind {
            Kind::Sampled(d, _) => {
                let full = d.mellin(s).norm();
                let tail: C64 = d.nodes[d.nodes.len() - d.tail_nodes..]
                    .iter()
                    .map(|&(x, wf)| (s * x).exp() * wf)
                    .sum();
                tail.norm() / full.max(f64::MIN_POSITIVE)
            }
            _ => 0.0,
        }
    }

    pub fn l1_abs(&self) -> Result<f64> {
        quad::half_line(|r| self.eval(r).abs()).map_err(non_integrable)
    }
}

fn non_integrable(e: Error) -> Error {
    match e {
        Error::DivergentTransform(m) => Error::NonIntegrable(m),
        e => e,
    }
}

/// f(r) = A·r^{a−1}e^{−br} − B·r^{c−1}e^{−dr} with A·Γ(a)b^{−a} =
/// B·Γ(c)d^{−c} = 1, so that ∫f = 0.
pub fn make_gamma_pair(a: f64, b: f64, c: f64, d: f64) -> Result<SourceTerm> {
    if !(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0) {
        return Err(Error::Config(format!("gamma pair needs a, b, c, d > 0: ({a}, {b}, {c}, {d})")));
    }
    if a == c && b == d {
        return Err(Error::DegenerateFamily(format!("(a, b) = (c, d) = ({a}, {b}) gives f ≡ 0")));
    }
    let amp = |p: f64, q: f64| Ok::<f64, Error>((p * q.ln() - ln_gamma(C64::new(p, 0.0))?.re).exp());
    let mut s = SourceTerm::from_terms(vec![
        GammaTerm { amp: amp(a, b)?, a, b },
        GammaTerm { amp: -amp(c, d)?, a: c, b: d },
    ])?;
    s.family = Some(FamilyParams { a, b, c, d });
    Ok(s)
}

/// The closed-form sources used for sweeps: (a, b, c, d) of
/// [`make_gamma_pair`].
pub const BUILTIN_FAMILY: [FamilyParams; 5] = [
    FamilyParams { a: 2.0, b: 1.0, c: 1.0, d: 1.0 },
    FamilyParams { a: 1.5, b: 1.0, c: 1.0, d: 1.0 },
    FamilyParams { a: 3.0, b: 1.0, c: 1.0, d: 1.0 },
    FamilyParams { a: 3.0, b: 2.0, c: 1.0, d: 1.0 },
    FamilyParams { a: 2.0, b: 1.0, c: 1.5, d: 2.0 },
];

pub fn builtin_family() -> Result<Vec<SourceTerm>> {
    BUILTIN_FAMILY.iter().map(|p| make_gamma_pair(p.a, p.b, p.c, p.d)).collect()
}

/// ∫₀^∞ f dr.
pub fn validate_compatibility(f: &SourceTerm) -> Result<f64> {
    match &f.kind {
        Kind::Sampled(d, scale) => Ok(scale * d.integral()),
        _ => quad::half_line(|r| f.eval(r)).map_err(non_integrable),
    }
}

pub const DEFAULT_COMPAT_REL_TOL: f64 = 1e-8;

/// Refuses f when |∫f| exceeds `rel_tol`·‖f‖_{L¹}; returns the integral.
pub fn check_compatibility(f: &SourceTerm, rel_tol: f64) -> Result<f64> {
    let i = validate_compatibility(f)?;
    if f.is_zero() {
        return Ok(i);
    }
    let l1 = match &f.kind {
        Kind::Sampled(d, scale) => scale.abs() * d.l1(),
        _ => f.l1_abs()?,
    };
    if i.abs() > rel_tol * l1 {
        return Err(Error::Compatibility(format!(
            "∫f dr = {i:.3e} is {:.3e} of ‖f‖_L¹ = {l1:.3e} (tolerance {rel_tol:.1e}); f must have zero mean",
            i.abs() / l1
        )));
    }
    Ok(i)
}

impl Sampled {
    fn eval(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r <= self.r[0] {
            return self.f[0];
        }
        if r >= self.r[n - 1] {
            return self.tail_c * (-self.tail_gamma * r).exp();
        }
        let i = self.r.partition_point(|&x| x <= r) - 1;
        let h = self.r[i + 1] - self.r[i];
        let t = (r - self.r[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.f[i] + h10 * h * self.slopes[i] + h01 * self.f[i + 1] + h11 * h * self.slopes[i + 1]
    }

    fn mellin(&self, s: C64) -> C64 {
        self.nodes.iter().map(|&(x, wf)| (s * x).exp() * wf).sum()
    }

    /// Exact integral of the piecewise model.
    fn integral(&self) -> f64 {
        let n = self.r.len();
        let mut acc = self.f[0] * self.r[0];
        for i in 0..n - 1 {
            let h = self.r[i + 1] - self.r[i];
            // ∫ of the Hermite cubic
            acc += h * (self.f[i] + self.f[i + 1]) / 2.0 + h * h * (self.slopes[i] - self.slopes[i + 1]) / 12.0;
        }
        if self.tail_gamma > 0.0 {
            acc += self.tail_c / self.tail_gamma * (-self.tail_gamma * self.r[n - 1]).exp();
        }
        acc
    }

    fn l1(&self) -> f64 {
        let (x, w) = (&self.r, &self.f);
        let mut acc = w[0].abs() * x[0];
        // fine trapezoid on each interval of the interpolant
        for i in 0..x.len() - 1 {
            let m = 8;
            let h = (x[i + 1] - x[i]) / m as f64;
            for j in 0..m {
                let a = self.eval(x[i] + j as f64 * h).abs();
                let b = self.eval(x[i] + (j + 1) as f64 * h).abs();
                acc += 0.5 * h * (a + b);
            }
        }
        acc + self.tail_c.abs() / self.tail_gamma * (-self.tail_gamma * x[x.len() - 1]).exp()
    }
}

/// Fritsch–Carlson/Butland slopes (as in PCHIP): shape preserving, C¹.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = del[0];
        d[1] = del[0];
        return d;
    }
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut e = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if e * d0 <= 0.0 {
            e = 0.0;
        } else if d0 * d1 <= 0.0 && e.abs() > 3.0 * d0.abs() {
            e = 3.0 * d0;
        }
        e
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

/// Least-squares ln|f| = ln C − γr over the last decade of samples.
fn fit_tail(r: &[f64], f: &[f64]) -> Result<(f64, f64)> {
    let n = r.len();
    let r_end = r[n - 1];
    let idx: Vec<usize> = (0..n).filter(|&i| r[i] >= r_end / 10.0).collect();
    if idx.len() < 3 {
        return Err(Error::TailFitFailure(format!("only {} samples in the last decade", idx.len())));
    }
    let sign = f[n - 1].signum();
    if f[n - 1] == 0.0 || idx.iter().any(|&i| f[i] * sign <= 0.0) {
        return Err(Error::TailFitFailure("sign change or zero inside the last decade".into()));
    }
    let m = idx.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &i in &idx {
        let (x, y) = (r[i], (f[i] * sign).ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let den = m * sxx - sx * sx;
    if den <= 0.0 {
        return Err(Error::TailFitFailure("degenerate abscissae in the last decade".into()));
    }
    let slope = (m * sxy - sx * sy) / den;
    if !(slope < 0.0) {
        return Err(Error::TailFitFailure(format!("fitted tail does not decay (rate {:.3e})", -slope)));
    }
    // anchor the fitted rate at the last sample so the model is continuous
    let gamma = -slope;
    Ok((f[n - 1] * (gamma * r_end).exp(), gamma))
}

/// Read `r,f` rows (header required, `#` comments).
pub fn load_sampled<P: AsRef<Path>>(path: P) -> Result<SourceTerm> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_sampled(&text)
}

pub fn parse_sampled(text: &str) -> Result<SourceTerm> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if headers.len() == 0 {
        return Err(Error::Format("empty file".into()));
    }
    if headers.len() != 2 || &headers[0] != "r" || &headers[1] != "f" {
        return Err(Error::Format(format!("expected header `r,f`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let (mut r, mut f) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::Format(format!("row {}: expected 2 fields", row + 1)));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(format!("row {}: `{s}`: {e}", row + 1)));
        let (ri, fi) = (parse(&rec[0])?, parse(&rec[1])?);
        if !ri.is_finite() || !fi.is_finite() || ri <= 0.0 {
            return Err(Error::Format(format!("row {}: need finite f and r > 0", row + 1)));
        }
        if let Some(&prev) = r.last() {
            if ri <= prev {
                return Err(Error::NonMonotoneGrid(row + 1));
            }
        }
        r.push(ri);
        f.push(fi);
    }
    if r.len() < 4 {
        return Err(Error::Format(format!("need at least 4 samples, found {}", r.len())));
    }
    from_samples(r, f)
}

pub fn from_samples(r: Vec<f64>, f: Vec<f64>) -> Result<SourceTerm> {
    let slopes = pchip_slopes(&r, &f);
    let (tail_c, tail_gamma) = fit_tail(&r, &f)?;
    let mut d = Sampled { r, f, slopes, tail_c, tail_gamma, nodes: Vec::new(), tail_nodes: 0 };
    // one log-line grid wide enough for every Re s in the sampled strip
    let (c_lo, c_hi) = (SAMPLED_STRIP.re_min, SAMPLED_STRIP.re_max);
    let env = |x: f64| ((c_lo * x).exp() + (c_hi * x).exp()) * d.eval(x.exp()).abs();
    let opts = LogGridOptions { panel: 0.125, rel_tol: 1e-18, ..Default::default() };
    let grid = quad::log_grid(env, opts).map_err(non_integrable)?;
    let x_end = d.r[d.r.len() - 1].ln();
    let mut nodes: Vec<(f64, f64)> = grid.x.iter().zip(&grid.w).map(|(&x, &w)| (x, w * d.eval(x.exp()))).collect();
    // move tail nodes to the end for tail_fraction
    nodes.sort_by(|a, b| (a.0 > x_end).cmp(&(b.0 > x_end)).then(a.0.total_cmp(&b.0)));
    d.tail_nodes = nodes.iter().filter(|n| n.0 > x_end).count();
    d.nodes = nodes;
    Ok(SourceTerm {
        kind: Kind::Sampled(Box::new(d), 1.0),
        strip: SAMPLED_STRIP,
        family: None,
        provenance: Provenance::Sampled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_linear_data() {
        let x = [0.0, 0.5, 1.5, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|x| 3.0 * x - 1.0).collect();
        for d in pchip_slopes(&x, &y) {
            assert!((d - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn tail_fit_recovers_rate() {
        let r: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let f: Vec<f64> = r.iter().map(|r| 2.0 * (-0.7 * r).exp()).collect();
        let (c, g) = fit_tail(&r, &f).unwrap();
        assert!((g - 0.7).abs() < 1e-12 && (c - 2.0).abs() < 1e-10);
    }
}
