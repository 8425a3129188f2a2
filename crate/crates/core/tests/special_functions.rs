use crack_core::special::*;
use crack_core::{Error, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

/// Test-side log-gamma: Stirling series after an upward shift, reflection
/// below ½.  Shares nothing with the Lanczos path in the library.
fn ln_gamma_stirling(z: C64) -> C64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return C64::new(PI.ln(), 0.0) - s.ln() - ln_gamma_stirling(C64::new(1.0, 0.0) - z);
    }
    let mut shift = C64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 40.0 {
        shift += w.ln();
        w += 1.0;
    }
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0];
    let mut acc = (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln();
    let w2 = w * w;
    let mut p = w.inv();
    for (k, bk) in b.iter().enumerate() {
        let n = 2.0 * (k as f64 + 1.0);
        acc += p * (bk / (n * (n - 1.0)));
        p /= w2;
    }
    acc - shift
}

// Frozen with mpmath (30 digits).
const GAMMA_ORACLE: [(f64, f64, f64, f64); 5] = [
    (1.0, 1.0, 0.49801566811835604, -0.15494982830181069),
    (-3.7, 2.2, -0.00061190872038372045, 0.00034663630649002413),
    (20.5, -30.0, -10979079558.975664, -2006287968.2396137),
    (-45.3, 0.4, -2.2692798387234686e-57, 4.0357517371682341e-57),
    (0.1, 90.0, 1.6298941473363203e-62, 3.2168386248808301e-63),
];

// K(λ) from the defining product, summed with mpmath nsum at 30 digits.
const K_ORACLE: [(f64, f64, f64, f64); 6] = [
    (0.25, 2.0, -0.30502900740397253, 0.55454612247136165),
    (1.3, -0.7, 2.0138970276605853, 0.23123921539491857),
    (-0.3, 0.5, 0.59253976085430999, -0.19962590591173537),
    (0.75, 0.0, 1.0360056410586538, 0.0),
    (1.9, 3.0, -18.804162428419798, -15.107479574120845),
    (0.5, 15.0, 0.70020033583202885, -0.71394641934861891),
];

#[test]
fn gamma_known_values() {
    assert!((gamma(c(0.5, 0.0)).unwrap().value.re - 1.77245385090552).abs() < 1e-13);
    assert!((gamma(c(5.0, 0.0)).unwrap().value.re - 24.0).abs() < 1e-11);
    for (re, im, vr, vi) in GAMMA_ORACLE {
        let g = gamma(c(re, im)).unwrap();
        assert!(rel(g.value, c(vr, vi)) < 1e-12, "Γ({re}+{im}i)");
        assert!(g.est_rel_err < 1e-11);
    }
}

#[test]
fn gamma_poles() {
    for n in 0..5 {
        assert!(matches!(gamma(c(-(n as f64), 0.0)), Err(Error::Pole(_))));
    }
}

#[test]
fn omega_examples() {
    assert!((omega(c(0.0, 0.0)).unwrap().value - 1.0 / PI).norm() < 1e-15);
    assert!(omega(c(0.5, 0.0)).unwrap().value.norm() < 1e-15);
    let w = omega(c(0.0, 1.0)).unwrap().value;
    assert!((w - 1.00374187319732).norm() < 1e-12);
    assert!(matches!(omega(c(-3.0, 0.0)), Err(Error::Pole(_))));
    // overflow-safe far from the axis
    let w = omega(c(0.3, 300.0)).unwrap().value;
    assert!(w.re.is_finite() && w.im.is_finite());
    assert!((w - c(0.3, 300.0) * c(0.0, -1.0)).norm() < 1e-10);
}

#[test]
fn arg_omega_examples() {
    let l = c(0.25, 10.0);
    let a = arg_omega(l).unwrap();
    let d = (a - omega(l).unwrap().value.arg()).rem_euclid(2.0 * PI);
    assert!(d.min(2.0 * PI - d) < 1e-10);
    // |arg ω| ≤ C/|λ₂| with C fitted once: arg ω → −λ₁/λ₂
    for y in [10.0, 20.0, 40.0, 80.0] {
        assert!(arg_omega(c(0.25, y)).unwrap().abs() * y < 0.26);
    }
    assert!(matches!(arg_omega(c(0.5, 0.0)), Err(Error::Degenerate(_))));
    assert!(matches!(arg_omega(c(0.0, 0.0)), Err(Error::Degenerate(_))));
}

#[test]
fn k_frozen_product_values() {
    for (re, im, vr, vi) in K_ORACLE {
        let k = k_product(c(re, im)).unwrap();
        assert!(rel(k.value, c(vr, vi)) < 1e-12, "K({re}+{im}i)");
        assert!(k.est_rel_err < 1e-11);
    }
}

#[test]
fn k_trivial_points() {
    assert!((k_product(c(0.5, 0.0)).unwrap().value - 1.0).norm() < 1e-10);
    assert!((k_product(c(0.0, 0.0)).unwrap().value - 1.0).norm() < 1e-10);
    assert!(matches!(k_product(c(-0.6, 0.0)), Err(Error::Domain { .. })));
    assert!(matches!(k_product(c(2.0, 1.0)), Err(Error::Domain { .. })));
}

#[test]
fn k_direct_product_matches_oracle() {
    for (re, im, vr, vi) in K_ORACLE.iter() {
        let k = k_product_direct(c(*re, *im), ProductOptions::default()).unwrap();
        let err = rel(k.value, c(*vr, *vi));
        assert!(err < 1e-11, "K({re}+{im}i): {err:e}");
        assert!(err <= k.est_rel_err, "estimate {:e} vs {err:e}", k.est_rel_err);
    }
    let half = k_product_direct(c(0.5, 0.0), ProductOptions::default()).unwrap();
    assert!((half.value - 1.0).norm() < 1e-14);
}

#[test]
fn k_direct_truncation_stability() {
    let l = c(0.25, 1.0);
    let a = k_product_direct(l, ProductOptions { cap: 20_000, factor_tol: 0.0, tol: 1e-6 }).unwrap();
    let b = k_product_direct(l, ProductOptions { cap: 40_000, factor_tol: 0.0, tol: 1e-6 }).unwrap();
    assert!(rel(a.value, b.value) < 1e-13);
    assert!(a.est_rel_err < 1e-11);
}

#[test]
fn functional_relation_example() {
    let l = c(0.25, 2.0);
    let lhs = k_product(l + 1.0).unwrap().value;
    let rhs = omega(l).unwrap().value * k_product(l).unwrap().value * PI;
    assert!(rel(lhs, rhs) < 1e-8);
}

#[test]
fn k0_k1_examples() {
    assert!((k0(c(-0.5, 0.0)).unwrap().value - 2.0).norm() < 1e-12);
    let v = k0(c(0.25, 1.0)).unwrap();
    assert!(v.value.norm().is_finite() && v.est_rel_err <= 1e-8);
    // K₁ at −½: K has its pole there and cot its zero; the product is
    // K(½)/(π·(−½)) = −2/π by the functional relation.
    assert!((k1(c(-0.5, 0.0)).unwrap().value + 2.0 / PI).norm() < 1e-12);
    // inside the overlap of the strips the defining form applies directly
    let l = c(-0.2, 0.7);
    let direct = k_product(l).unwrap().value * cot_pi(l);
    assert!(rel(k1(l).unwrap().value, direct) < 1e-12);
    assert!(k0(c(0.6, 0.0)).is_err());
    assert!(k1(c(0.1, 0.0)).is_err());
}

#[test]
fn d0_examples() {
    let r = d0(c(1.25, 0.0), 2.0).unwrap().value / d0(c(0.25, 0.0), 2.0).unwrap().value;
    assert!((r + 0.125).norm() < 1e-12);
    let v = d0(c(0.5, 0.0), 2.0).unwrap().value;
    assert!((v.norm() - 1.0).abs() < 1e-12 && (v.arg() - PI / 2.0).abs() < 1e-12);
    let l = c(0.25, 3.0);
    let res = d0(l + 1.0, 1.0).unwrap().value + omega(l).unwrap().value * d0(l, 1.0).unwrap().value;
    assert!(res.norm() <= 1e-8 * d0(l, 1.0).unwrap().value.norm());
}

#[test]
fn k_asymptotic_examples() {
    assert!(k_asymptotic(c(0.5, 2.0), M_ASYM).is_err());
    // r₁ = ln|K| − ln(main term) stays O(1) and settles as |Im λ| grows
    let r1 = |y: f64| {
        let l = c(0.5, y);
        k_product(l).unwrap().value.norm().ln() - k_asymptotic(l, M_ASYM).unwrap().value.re.ln()
    };
    let (a, b, d) = (r1(15.0), r1(25.0), r1(40.0));
    assert!(a.abs() < 1.0 && b.abs() < 1.0 && d.abs() < 1.0);
    assert!((d - b).abs() < (b - a).abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn gamma_matches_stirling(re in -50.0f64..50.0, im in -100.0f64..100.0) {
        prop_assume!(im.abs() > 1e-3 || (re - re.round()).abs() > 1e-3);
        let z = c(re, im);
        let d = (ln_gamma(z).unwrap() - ln_gamma_stirling(z)).exp() - 1.0;
        prop_assert!(d.norm() < 1e-12, "{z}: {}", d.norm());
    }

    #[test]
    fn conjugate_symmetry(re in -0.45f64..1.95, im in -30.0f64..30.0) {
        let z = c(re, im);
        let g = gamma(z).unwrap().value;
        prop_assert!(rel(gamma(z.conj()).unwrap().value, g.conj()) < 1e-14);
        let w = omega(z).unwrap().value;
        prop_assert!((omega(z.conj()).unwrap().value - w.conj()).norm() <= 1e-14 * (1.0 + w.norm()));
        let k = k_product(z).unwrap().value;
        prop_assert!(rel(k_product(z.conj()).unwrap().value, k.conj()) < 1e-12);
    }

    #[test]
    fn functional_relation(re in -0.49f64..0.99, im in -20.0f64..20.0) {
        let l = c(re, im);
        prop_assume!(l.norm() > 1e-6);
        let lhs = k_product(l + 1.0).unwrap().value;
        let rhs = omega(l).unwrap().value * k_product(l).unwrap().value * PI;
        prop_assert!(rel(lhs, rhs) < 1e-8);
    }

    #[test]
    fn pilot_solution_homogeneous(re in -0.49f64..0.99, im in -20.0f64..20.0, ki in 0usize..4) {
        let kappa0 = [0.5, 1.0, 2.0, 10.0][ki];
        let l = c(re, im);
        let d = d0(l, kappa0).unwrap().value;
        let res = d0(l + 1.0, kappa0).unwrap().value * kappa0 + omega(l).unwrap().value * d;
        prop_assert!(res.norm() <= 1e-8 * d.norm());
    }

    #[test]
    fn arg_omega_matches_arg(re in -3.0f64..3.0, im in -60.0f64..60.0) {
        prop_assume!(im.abs() > 1e-2);
        let l = c(re, im);
        let a = arg_omega(l).unwrap();
        let d = (a - omega(l).unwrap().value.arg()).rem_euclid(2.0 * PI);
        prop_assert!(d.min(2.0 * PI - d) < 1e-10);
    }
}
