use crack_core::bounds::*;
use crack_core::solver::SolverParams;
use crack_core::source::{make_gamma_pair, SourceTerm};
use crack_core::{Error, C64};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const SIGMA: f64 = 0.25;
const THETA: f64 = 0.4;

#[test]
fn phi_at_the_half_point() {
    // K(½) = K(1) = 1, so Φ = 1/(1·1·2i)
    let v = phi(c(0.5, 0.0), c(0.5, 0.0)).unwrap();
    assert!((v - c(0.0, -0.5)).norm() < 1e-12, "{v}");
}

#[test]
fn phi_mirror_symmetry() {
    // the 1/(2i sin πζ) factor flips sign under conjugation
    for (s, z) in [(c(0.25, 3.0), c(0.4, -2.0)), (c(-0.1, 17.0), c(0.7, 5.5)), (c(1.0, -40.0), c(0.3, 33.0))] {
        let a = phi(s, z).unwrap();
        let b = phi(s.conj(), z.conj()).unwrap();
        assert!((b + a.conj()).norm() <= 1e-12 * a.norm(), "{s} {z}");
    }
}

#[test]
fn phi_window_and_poles() {
    assert!(matches!(phi(c(1.2, 0.0), c(0.4, 0.0)), Err(Error::Config(_))));
    assert!(matches!(phi(c(0.2, 0.0), c(1.0, 0.0)), Err(Error::Config(_))));
    assert!(matches!(ln_phi(c(0.2, 0.0), c(1.0, 0.0)), Err(Error::Pole(_))));
}

#[test]
fn phi_decays_at_rate_pi_in_eta() {
    // the algebraic prefactor slows the approach to π like 1/η
    let l = |e: f64| ln_phi(c(SIGMA, 0.0), c(THETA, e)).unwrap().re;
    for g in [1.0, -1.0] {
        let r1 = (l(5.0 * g) - l(10.0 * g)) / 5.0;
        let r2 = (l(10.0 * g) - l(15.0 * g)) / 5.0;
        assert!((r2 - PI).abs() < 0.15 && (r2 - PI).abs() <= (r1 - PI).abs() + 1e-9, "{r1} {r2}");
    }
}

#[test]
fn region_examples() {
    assert_eq!(classify(0.0, 0.0, 5.0), Region::S0);
    assert_eq!(classify(20.0, 0.0, 5.0), Region::S1);
    assert_eq!(classify(-1.0, 20.0, 5.0), Region::S2pp);
    assert_eq!(classify(-20.0, 0.0, 5.0), Region::S7);
    assert_eq!(classify(-20.0, 20.0, 5.0), Region::S4);
    assert_eq!(classify(20.0, -20.0, 5.0), Region::S10);
    assert_eq!(classify(-40.0, 20.0, 5.0), Region::S6);
    assert_eq!(classify(40.0, -20.0, 5.0), Region::S12);
    // the boundary rays η = 0 go to the first listed closure
    assert_eq!(classify(0.0, 20.0, 5.0), Region::S2p);
    assert_eq!(classify(0.0, -20.0, 5.0), Region::S8p);
    assert_eq!(Region::S2pp.to_string(), "Σ2″");
}

#[test]
fn classification_is_a_partition() {
    for (m, seed) in [(1.0, 11), (5.0, 12), (20.0, 13)] {
        let r = partition_fuzz(m, 1_000_000, seed);
        assert!(r.is_partition(), "{r:?}");
        assert_eq!(r.cone_violations, 0);
        assert!(r.counts.iter().all(|(_, n)| *n > 1000), "{r:?}");
    }
}

#[test]
fn cone_examples() {
    let b = cone_inequalities(-3.0, 2.0);
    assert!(!b.omega[0], "τ = 2 is on the edge of Ω₁");
    assert!(b.wide && b.narrow, "|2| = 2|−1|");
    let o = cone_inequalities(0.0, 5.0);
    assert!(o.omega[2] && o.narrow && o.consistent());
}

fn default_check(m: Majorant) -> &'static BoundCheck {
    static CHECKS: OnceLock<Vec<BoundCheck>> = OnceLock::new();
    let all = CHECKS.get_or_init(|| {
        Majorant::ALL.iter().map(|&m| check_bound(m, SIGMA, THETA, 5.0, DEFAULT_EPS, BoundGrid::default()).unwrap()).collect()
    });
    all.iter().find(|c| c.majorant == m).unwrap()
}

#[test]
fn master_bound_holds() {
    let b = default_check(Majorant::Master);
    assert!(b.passed(), "{b:?}");
    assert_eq!(b.worst.len(), 15);
    assert_eq!(b.n_points, 201 * 201);
    let tau = b.rates.iter().find(|r| r.two_sided).unwrap();
    assert!((tau.measured - 1.4).abs() < 0.01, "{tau:?}");
}

#[test]
fn per_region_refinements_hold() {
    for m in [Majorant::StripDecay, Majorant::Algebraic, Majorant::DoubleExponential, Majorant::Exchange] {
        let b = default_check(m);
        assert!(b.passed(), "{b:?}");
        assert_eq!(b.worst.len(), m.regions().len());
    }
}

#[test]
fn bound_check_rejects_bad_windows() {
    let g = BoundGrid::default();
    assert!(matches!(check_bound(Majorant::Master, 1.3, 0.4, 5.0, 0.2, g), Err(Error::Config(_))));
    assert!(matches!(check_bound(Majorant::Master, 0.25, 0.4, 0.0, 0.2, g), Err(Error::Config(_))));
}

#[test]
fn rate_checks_are_one_or_two_sided() {
    // a measured exponential rate far above the claim is fine, an algebraic
    // exponent off by 20% is not
    for r in &default_check(Majorant::Master).rates {
        if r.two_sided {
            assert!((r.measured - r.claimed).abs() <= 0.1 * r.claimed);
        } else {
            assert!(r.measured > 3.0 * r.claimed);
        }
    }
}

#[test]
fn arctan_difference_identity() {
    let (a, b) = (1.0f64, 0.5f64);
    assert!((a.atan() - b.atan() - ((a - b) / (1.0 + a * b)).atan()).abs() < 1e-15);
    let d = psi_diagnostics(c(0.25, 12.0), c(0.4, 3.0)).unwrap();
    assert!(d.identity_error < 1e-10, "{d:?}");
    for (s, z) in [(c(0.1, 11.0), c(0.3, 40.0)), (c(0.25, 30.0), c(0.6, -5.0)), (c(0.3, -15.0), c(0.2, -1.0))] {
        assert!(psi_diagnostics(s, z).unwrap().identity_error < 1e-10, "{s} {z}");
    }
}

#[test]
fn tau_scaled_phase_difference_is_bounded() {
    let g = BoundGrid::default();
    let a = tau_scaled_arg_sup(SIGMA, THETA, 5.0, g).unwrap();
    let b = tau_scaled_arg_sup(SIGMA, THETA, 5.0, BoundGrid { extent: 100.0, step: 1.0 }).unwrap();
    assert!(a.is_finite() && a < 1.0);
    assert!(b <= 1.05 * a, "{a} vs {b}");
}

fn g2_check() -> &'static G2BoundCheck {
    static C: OnceLock<G2BoundCheck> = OnceLock::new();
    C.get_or_init(|| check_g2_bound(0.4, 0.3, 0.3, 2.0, 1.0, 0.1, 20, KernelQuad::default()).unwrap())
}

#[test]
fn g2_bound_holds() {
    let g = g2_check();
    assert!(g.constant.is_finite() && g.constant > 0.0);
    assert!(g.slopes_ok, "{g:?}");
    assert_eq!(g.t.len(), 20);
    // at t = 1 both branches of the bound coincide
    assert_eq!(1f64.powf(g.sigma), 1f64.powf(-g.sigma));
}

#[test]
fn g2_is_real() {
    assert!(g2_check().imag_ratio < 1e-8);
}

#[test]
fn g2_does_not_depend_on_the_contour() {
    let q = KernelQuad::default();
    let a = G2Kernel::new(0.4, 0.3, 2.0, q).unwrap();
    let b = G2Kernel::new(0.4, -0.2, 2.0, q).unwrap();
    for t in [0.2, 0.7, 3.0] {
        let (x, y) = (a.eval(t, 1.0).unwrap(), b.eval(t, 1.0).unwrap());
        assert!((x - y).norm() <= 2e-3 * x.norm(), "t = {t}: {x} vs {y}");
    }
}

#[test]
fn g1_tail_is_guarded() {
    let q = KernelQuad::default();
    assert!(kernel_g1(0.1, c(0.4, 0.5), 0.3, 2.0, q).unwrap().norm() > 0.0);
    // no oscillation at t = 1: the τ^{−1−ϑ} tail is too fat for the window
    assert!(matches!(kernel_g1(1.0, c(0.4, 0.5), 0.3, 2.0, q), Err(Error::TailTooFat { .. })));
    assert!(matches!(kernel_g1(0.5, c(0.4, 0.0), 0.45, 2.0, q), Err(Error::Config(_))));
}

#[test]
fn q2_tip_bound() {
    let f = make_gamma_pair(2.0, 1.0, 1.0, 1.0).unwrap();
    let p = SolverParams::default();
    let a = check_q2_tip_bound(&f, &p).unwrap();
    assert!(a.constant.is_finite() && a.slope_ok, "{a:?}");
    assert!(a.slope.unwrap() >= 0.2);
    assert!(a.q2_at_rmin < 1e-2);
    let b = check_q2_tip_bound(&f.scaled(2.0), &p).unwrap();
    assert!((b.sup_ratio / a.sup_ratio - 2.0).abs() < 1e-10);
    assert!((b.constant - a.constant).abs() < 1e-10);
}

#[test]
fn q2_tip_bound_zero_source() {
    let z = check_q2_tip_bound(&SourceTerm::zero(), &SolverParams::default()).unwrap();
    assert_eq!(z.constant, 0.0);
    assert!(z.slope_ok && z.slope.is_none());
}

fn mirror(r: Region) -> Region {
    use Region::*;
    match r {
        S0 => S0,
        S1 => S7,
        S7 => S1,
        S2p => S8p,
        S8p => S2p,
        S2pp => S8pp,
        S8pp => S2pp,
        S3 => S9,
        S9 => S3,
        S4 => S10,
        S10 => S4,
        S5 => S11,
        S11 => S5,
        S6 => S12,
        S12 => S6,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn admissible_vartheta_gives_alpha_in_one_two(k in 0u32..3, e in -0.999f64..-0.501, u in 0.001f64..0.999) {
        let mu = e + k as f64 + 2.0;
        let nu = 2.0 * (mu - k as f64) - 1.0;
        let th = (nu - 1.0) / 2.0 + u * 0.5;
        let p = SolverParams { k, mu, vartheta: Some(th), ..Default::default() };
        prop_assert!(p.validate().is_ok());
        prop_assert!(p.alpha() > 1.0 && p.alpha() < 2.0);
        prop_assert!(p.vartheta() > 0.0 && p.vartheta() < 1.0);
    }

    #[test]
    fn every_point_gets_one_label(eta in -500.0f64..500.0, tau in -500.0f64..500.0, m in 0.5f64..30.0) {
        let open = open_memberships(eta, tau, m);
        prop_assert!(open.len() <= 1);
        if let [r] = open.as_slice() {
            prop_assert_eq!(*r, classify(eta, tau, m));
        }
        prop_assert!(cone_inequalities(eta, tau).consistent());
    }

    #[test]
    fn majorants_are_mirror_symmetric(eta in -50.0f64..50.0, tau in 10.5f64..50.0) {
        for m in Majorant::ALL {
            let a = m.ln_value(eta, tau, SIGMA, THETA, DEFAULT_EPS);
            let b = m.ln_value(-eta, -tau, SIGMA, THETA, DEFAULT_EPS);
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert_eq!(mirror(classify(eta, tau, 5.0)), classify(-eta, -tau, 5.0));
    }
}
