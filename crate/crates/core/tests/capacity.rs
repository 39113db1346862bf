mod oracles;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use sympcap::capacity::*;
use sympcap::nonsqueezing::SeparableSystem;
use sympcap::plane::PlaneSelector;
use sympcap::potential::Potential1D;
use sympcap::symplectic::{random_symplectic, PhaseVector, QuadraticHamiltonian};

fn shell(m: DMatrix<f64>, e: f64) -> EnergyShellRegion {
    EnergyShellRegion::new(QuadraticHamiltonian::new(m).unwrap(), e).unwrap()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn ball_volume_and_capacity_identity() {
    for r in [0.3, 1.0, 2.5] {
        let c1 = capacity_ball(r, 1).unwrap().finite().unwrap();
        for n in 1..=8 {
            let c = capacity_ball(r, n).unwrap();
            assert!(c.exact);
            assert_eq!(c.finite().unwrap(), c1);
            let lhs = volume_ball(r, n).unwrap() * factorial(n);
            let rhs = c1.powi(n as i32);
            assert!(((lhs - rhs) / rhs).abs() <= 1e-12, "N={n}, R={r}");
        }
    }
}

#[test]
fn bad_radius_and_dimension() {
    assert_eq!(capacity_ball(-1.0, 2).unwrap_err().kind(), "InvalidInput");
    assert_eq!(capacity_ball(1.0, 0).unwrap_err().kind(), "DimensionError");
}

#[test]
fn cylinders() {
    let z = Cylinder::conjugate(2, 1.5, 3).unwrap();
    assert_eq!(capacity_cylinder(&z).unwrap(), CapacityValue::exact(PI * 2.25));
    for plane in [PlaneSelector::PositionPair(1, 2), PlaneSelector::MomentumPair(1, 2), PlaneSelector::Mixed(1, 2)] {
        let z = Cylinder::new(plane, 1.0, 2).unwrap();
        assert_eq!(capacity_cylinder(&z).unwrap_err().kind(), "UnsupportedRegion");
    }
    assert!(Cylinder::conjugate(3, 1.0, 2).is_err());
}

#[test]
fn anisotropic_ellipsoid_against_orbit_integration() {
    // H = (p1^2 + q1^2)/2 + (p2^2 + 9 q2^2)/2 at E = 1: the fast mode has omega = 3
    let h = QuadraticHamiltonian::oscillator(1.0, &[1.0, 3.0]).unwrap();
    let region = EnergyShellRegion::new(h.clone(), 1.0).unwrap();
    let cap = capacity_ellipsoid(&region).unwrap().finite().unwrap();
    assert!((cap - 2.0 * PI / 3.0).abs() < 1e-12);

    // fast-mode orbit: all energy in (q2, p2), starting at the turning point
    let z0 = [0.0, (2.0f64).sqrt() / 3.0, 0.0, 0.0];
    let oracle = oracles::quadratic_orbit_action(h.matrix(), &z0, 2.0 * PI / 3.0, 4000);
    assert!((oracle - cap).abs() < 1e-9, "{oracle} vs {cap}");
    let slow = [(2.0f64).sqrt(), 0.0, 0.0, 0.0];
    let slow_action = oracles::quadratic_orbit_action(h.matrix(), &slow, 2.0 * PI, 4000);
    assert!(slow_action > cap);

    // a random symplectic change of coordinates does not move it
    for seed in 0..10 {
        let s = random_symplectic(2, 0.6, seed).unwrap();
        let moved = EnergyShellRegion::new(h.conjugated(&s).unwrap(), 1.0).unwrap();
        let c = capacity_ellipsoid(&moved).unwrap().finite().unwrap();
        assert!((c - cap).abs() <= 1e-8 * cap);
        // the transported orbit has the same action
        let z = s.inverse().apply(&PhaseVector::new(z0.to_vec()).unwrap()).unwrap();
        let a = oracles::quadratic_orbit_action(moved.hamiltonian.matrix(), z.as_slice(), 2.0 * PI / 3.0, 4000);
        assert!((a - cap).abs() < 1e-8, "seed {seed}: {a}");
    }
}

#[test]
fn energy_shell_validation() {
    let h = QuadraticHamiltonian::isotropic_oscillator(1, 1.0, 1.0).unwrap();
    assert_eq!(EnergyShellRegion::new(h, 0.0).unwrap_err().kind(), "InvalidInput");
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let err = EnergyShellRegion::new(QuadraticHamiltonian::new(m).unwrap(), 1.0).unwrap_err();
    assert_eq!(err.kind(), "NotPositiveDefinite");
}

#[test]
fn capacity_json_shape() {
    let v: serde_json::Value = serde_json::to_value(CapacityValue::exact(1.5)).unwrap();
    assert_eq!(v, serde_json::json!({"value": 1.5, "exact": true}));
    let v: serde_json::Value = serde_json::to_value(CapacityValue::infinite()).unwrap();
    assert_eq!(v, serde_json::json!({"value": "inf", "exact": true}));
    let back: CapacityValue = serde_json::from_value(v).unwrap();
    assert_eq!(back, CapacityValue::infinite());
}

#[test]
fn bottle_fixture_values() {
    for (r_big, r_neck) in [(1.0, 0.5), (2.0, 1.0)] {
        let f = bordeaux_bottle_fixture(r_big, r_neck, 2).unwrap();
        assert_eq!(f.capacity, CapacityValue::exact(PI * r_big * r_big));
        assert_eq!(f.neck_loop_action, PI * r_neck * r_neck);
        assert!(f.neck_loop_action < f.capacity.finite().unwrap());
        assert_eq!(f.report.inner_samples, SANDWICH_SAMPLES);
        assert_eq!(f.report.oracle_hits, SANDWICH_SAMPLES);
        // the neck really sticks out of the ball
        let mut z = vec![0.0; 4];
        z[1] = 2.5 * r_big;
        assert!((f.oracle)(&z));
        assert!(!Ball::centered(2, r_big).unwrap().contains(&z));
    }
    assert_eq!(bordeaux_bottle_fixture(1.0, 1.0, 2).unwrap_err().kind(), "InvalidNeck");
    assert_eq!(bordeaux_bottle_fixture(1.0, 0.0, 2).unwrap_err().kind(), "InvalidNeck");
    assert_eq!(bordeaux_bottle_fixture(1.0, 0.5, 1).unwrap_err().kind(), "DimensionError");
}

fn cert(oracle: MembershipOracle, hi: f64) -> SandwichCertificate {
    SandwichCertificate::new(
        Ball::centered(2, 1.0).unwrap(),
        Cylinder::conjugate(1, 1.0, 2).unwrap(),
        oracle,
        (vec![-hi; 4], vec![hi; 4]),
    )
}

#[test]
fn sandwich_rejects_bad_certificates() {
    // region smaller than the ball
    let small: MembershipOracle = Arc::new(|z: &[f64]| z.iter().map(|x| x * x).sum::<f64>() <= 0.81);
    let err = capacity_sandwich(&cert(small, 1.0)).unwrap_err();
    assert_eq!(err.kind(), "CertificateInvalid");

    // region leaking out of the cylinder in the (q1, p1) plane
    let fat: MembershipOracle = Arc::new(|z: &[f64]| z[0] * z[0] + z[2] * z[2] <= 1.44 && z[1].abs() <= 1.0 && z[3].abs() <= 1.0);
    let err = capacity_sandwich(&cert(fat, 1.5)).unwrap_err();
    assert_eq!(err.kind(), "CertificateInvalid");

    // the cylinder itself, truncated, is a valid sandwich
    let ok: MembershipOracle = Arc::new(|z: &[f64]| z[0] * z[0] + z[2] * z[2] <= 1.0 && z[1].abs() <= 1.0 && z[3].abs() <= 1.0);
    let out = capacity_sandwich(&cert(ok, 1.0)).unwrap();
    assert_eq!(out.capacity, CapacityValue::exact(PI));
}

#[test]
fn separable_estimate_matches_quadrature_for_quartic() {
    let sys = SeparableSystem::new(vec![Potential1D::quartic(1.0, 1.0).unwrap()]).unwrap();
    let e = 0.8;
    let est = capacity_separable_estimate(&sys, e).unwrap();
    assert!(!est.exact);
    // oint p dq = 2 int sqrt(2 (E - q^4/4)) dq, with q = a sin(t) to tame the endpoints
    let a = (4.0 * e).powf(0.25);
    let f = |t: f64| {
        let q = a * t.sin();
        (2.0 * (e - 0.25 * q.powi(4))).max(0.0).sqrt() * a * t.cos()
    };
    let oracle = 2.0 * oracles::adaptive_simpson(&f, -PI / 2.0, PI / 2.0, 1e-12);
    let got = est.finite().unwrap();
    assert!(((got - oracle) / oracle).abs() < 1e-5, "{got} vs {oracle}");
}

#[test]
fn separable_estimate_picks_fast_mode() {
    let sys = SeparableSystem::new(vec![
        Potential1D::harmonic(1.0, 1.0).unwrap(),
        Potential1D::harmonic(1.0, 2.0).unwrap(),
    ])
    .unwrap();
    let est = capacity_separable_estimate(&sys, 1.0).unwrap().finite().unwrap();
    assert!((est - PI).abs() < 1e-5 * PI);
}

fn pd_strategy(max_dof: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_dof).prop_flat_map(|n| (Just(n), prop::collection::vec(-1.0..1.0f64, 4 * n * n)))
}

fn pd(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let b = DMatrix::from_row_slice(2 * n, 2 * n, entries);
    b.transpose() * &b + DMatrix::identity(2 * n, 2 * n) * 0.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minimal_action_equals_capacity((n, entries) in pd_strategy(4), e in 0.1..10.0f64) {
        let region = shell(pd(n, &entries), e);
        let c = capacity_ellipsoid(&region).unwrap().finite().unwrap();
        let a = minimal_action_quadratic(&region).unwrap();
        prop_assert!((c - a.action).abs() <= 1e-12 * c);
        prop_assert!((a.action - 2.0 * PI * e / a.orbit_frequency).abs() <= 1e-12 * c);
    }

    #[test]
    fn capacity_is_symplectic_invariant((n, entries) in pd_strategy(4), seed in any::<u64>()) {
        let region = shell(pd(n, &entries), 1.0);
        let c = capacity_ellipsoid(&region).unwrap().finite().unwrap();
        let s = random_symplectic(n, 0.5, seed).unwrap();
        let moved = EnergyShellRegion::new(region.hamiltonian.conjugated(&s).unwrap(), 1.0).unwrap();
        let c2 = capacity_ellipsoid(&moved).unwrap().finite().unwrap();
        prop_assert!((c - c2).abs() <= 1e-8 * c);
    }

    #[test]
    fn capacity_is_monotone_under_inclusion((n, entries) in pd_strategy(3), extra in prop::collection::vec(-1.0..1.0f64, 36)) {
        // M2 >= M1 means {H2 <= E} sits inside {H1 <= E}
        let m1 = pd(n, &entries);
        let c = DMatrix::from_row_slice(2 * n, 2 * n, &extra[..4 * n * n]);
        let m2 = &m1 + c.transpose() * &c;
        let big = capacity_ellipsoid(&shell(m1, 1.0)).unwrap().finite().unwrap();
        let small = capacity_ellipsoid(&shell(m2, 1.0)).unwrap().finite().unwrap();
        prop_assert!(small <= big * (1.0 + 1e-10));
    }

    #[test]
    fn isotropic_capacity(n in 1usize..=4, m in 0.1..10.0f64, w in 0.1..10.0f64, e in 0.01..100.0f64) {
        let region = EnergyShellRegion::new(QuadraticHamiltonian::isotropic_oscillator(n, m, w).unwrap(), e).unwrap();
        let c = capacity_ellipsoid(&region).unwrap().finite().unwrap();
        let want = 2.0 * PI * e / w;
        prop_assert!(((c - want) / want).abs() <= 1e-12);
    }

    #[test]
    fn bottle_neck_strictly_smaller(r in 0.2..5.0f64, frac in 0.05..0.95f64) {
        let f = bordeaux_bottle_fixture(r, r * frac, 2).unwrap();
        prop_assert!(f.neck_loop_action < f.capacity.finite().unwrap());
    }
}
