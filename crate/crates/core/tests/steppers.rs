use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use approx::assert_relative_eq;
use etdfem_core::fem::{Mesh1D, NodalSource, PointwiseSource, SemiDiscreteSystem, ZeroSource};
use etdfem_core::steppers::*;
use etdfem_core::tfrac::{QuadratureRule, TemperedParams};
use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;

fn scalar_system(b: f64, source: Arc<dyn NodalSource>) -> SemiDiscreteSystem {
    let m = DMatrix::from_element(1, 1, b);
    SemiDiscreteSystem {
        mesh: Mesh1D::new(2).unwrap(),
        params: TemperedParams::new(1.5, 1.0).unwrap(),
        p: DMatrix::identity(1, 1),
        g: m.clone(),
        b: m,
        source,
    }
}

struct Square;

impl NodalSource for Square {
    fn eval(&self, _t: f64, u: &DVector<f64>) -> DVector<f64> {
        u.map(|v| v * v)
    }
    fn jacobian_diag(&self, _t: f64, u: &DVector<f64>) -> Option<DVector<f64>> {
        Some(u * 2.0)
    }
}

struct Counting(AtomicUsize, f64);

impl NodalSource for Counting {
    fn eval(&self, _t: f64, u: &DVector<f64>) -> DVector<f64> {
        self.0.fetch_add(1, Ordering::SeqCst);
        DVector::from_element(u.len(), self.1)
    }
    fn jacobian_diag(&self, _t: f64, _u: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }
}

fn zero(n: usize) -> Arc<dyn NodalSource> {
    Arc::new(ZeroSource { dofs: n })
}

#[test]
fn scalar_etd_steps() {
    let sys = scalar_system(1.0, zero(1));
    let ops = FactoredOperators::etd_rdp(&sys.b, 0.1).unwrap();
    let u = DVector::from_element(1, 1.0);
    let v = etd_rdp_step(&sys, &ops, 0.0, &u, 0.1).unwrap();
    let hand = 9.0 / (1.0 + 1.0 / 30.0) - 8.0 / 1.025;
    assert!((v[0] - hand).abs() <= 1e-9);
    assert!((v[0] - 0.904_799_370_6).abs() <= 1e-9);
    assert_relative_eq!(v[0], rdp_rational(-0.1).unwrap(), max_relative = 1e-14);
    let w = etd1_step(&sys, &ops, 0.0, &u, 0.1).unwrap();
    assert_relative_eq!(w[0], 1.0 / 1.1, max_relative = 1e-15);
}

#[test]
fn etd1_pure_quadrature() {
    let sys = scalar_system(0.0, Arc::new(Counting(AtomicUsize::new(0), 3.0)));
    let ops = FactoredOperators::etd_rdp(&sys.b, 0.25).unwrap();
    let u = DVector::from_element(1, 2.0);
    assert_relative_eq!(etd1_step(&sys, &ops, 0.0, &u, 0.25).unwrap()[0], 2.0 + 0.75, max_relative = 1e-15);
}

#[test]
fn etd1_is_consistent() {
    let b = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
    let mut sys = scalar_system(1.0, zero(2));
    sys.mesh = Mesh1D::new(3).unwrap();
    sys.b = b.clone();
    let u = DVector::from_vec(vec![1.0, -0.5]);
    let bu = (&b * &u).norm();
    for tau in [1e-2, 1e-3, 1e-4] {
        let ops = FactoredOperators::etd_rdp(&b, tau).unwrap();
        let v = etd1_step(&sys, &ops, 0.0, &u, tau).unwrap();
        assert!((&v - &u).norm() <= tau * bu + 10.0 * tau * tau * bu * b.norm());
    }
}

#[test]
fn constant_source_matches_variation_of_constants() {
    let c = 2.0;
    let tau = 0.1;
    let sys = scalar_system(1.0, Arc::new(Counting(AtomicUsize::new(0), c)));
    let ops = FactoredOperators::etd_rdp(&sys.b, tau).unwrap();
    let v = etd_rdp_step(&sys, &ops, 0.0, &DVector::zeros(1), tau).unwrap();
    let exact = (1.0 - (-tau).exp()) * c;
    assert!((v[0] - exact).abs() <= c * tau.powi(3), "{} vs {exact}", v[0]);
}

#[test]
fn source_evaluated_twice_per_step() {
    let counter = Arc::new(Counting(AtomicUsize::new(0), 1.0));
    let sys = scalar_system(1.0, counter.clone());
    let cfg = StepperConfig::new(Scheme::EtdRdp, 0.125, 1.0).unwrap();
    integrate(&sys, &DVector::from_element(1, 0.5), &cfg).unwrap();
    assert_eq!(counter.0.load(Ordering::SeqCst), 16);
}

#[test]
fn scalar_cn_steps() {
    let sys = scalar_system(1.0, zero(1));
    let cfg = StepperConfig::new(Scheme::CrankNicolson, 0.1, 1.0).unwrap();
    let ops = FactoredOperators::crank_nicolson(&sys.b, 0.1).unwrap();
    let (v, it) = cn_step(&sys, &ops, 0.0, &DVector::from_element(1, 1.0), 0.1, &cfg).unwrap();
    assert_eq!(it, 1);
    assert!((v[0] - 0.95 / 1.05).abs() <= 2.0 * f64::EPSILON);

    let sys = scalar_system(0.0, Arc::new(Square));
    let ops = FactoredOperators::crank_nicolson(&sys.b, 0.1).unwrap();
    let (v, it) = cn_step(&sys, &ops, 0.0, &DVector::from_element(1, 1.0), 0.1, &cfg).unwrap();
    let root = (1.0 - 0.79f64.sqrt()) / 0.1;
    // stopping on |R| <= 1e-6 with |R'| ~ 0.89 bounds the error by ~1.1e-6
    assert!((v[0] - root).abs() <= 1.2e-6, "{} vs {root}", v[0]);
    let residual = v[0] - 1.0 - 0.05 * (1.0 + v[0] * v[0]);
    assert!(residual.abs() <= 1e-6);
    assert!((2..=5).contains(&it));

    let ops = FactoredOperators::crank_nicolson(&sys.b, 0.0).unwrap();
    let (v, it) = cn_step(&sys, &ops, 0.0, &DVector::from_element(1, 0.7), 0.0, &cfg).unwrap();
    assert_eq!(v[0], 0.7);
    assert_eq!(it, 1);
}

#[test]
fn cn_newton_failure_is_reported() {
    let sys = scalar_system(0.0, Arc::new(Square));
    let mut cfg = StepperConfig::new(Scheme::CrankNicolson, 1.0, 1.0).unwrap();
    cfg.newton_max_iter = 3;
    // v = 10 + 0.5(100 + v²) has no real root
    let ops = FactoredOperators::crank_nicolson(&sys.b, 1.0).unwrap();
    let err = cn_step(&sys, &ops, 0.0, &DVector::from_element(1, 10.0), 1.0, &cfg);
    assert!(matches!(err, Err(etdfem_core::Error::NewtonDivergence { .. })));
}

#[test]
fn mismatched_operators_rejected() {
    let sys = scalar_system(1.0, zero(1));
    let ops = FactoredOperators::crank_nicolson(&sys.b, 0.1).unwrap();
    assert!(etd_rdp_step(&sys, &ops, 0.0, &DVector::zeros(1), 0.1).is_err());
    let ops = FactoredOperators::etd_rdp(&sys.b, 0.1).unwrap();
    assert!(etd_rdp_step(&sys, &ops, 0.0, &DVector::zeros(1), 0.2).is_err());
}

fn fem_system(n: usize) -> SemiDiscreteSystem {
    let mesh = Mesh1D::new(n).unwrap();
    let p = TemperedParams::new(1.6, 1.0).unwrap();
    SemiDiscreteSystem::assemble(&mesh, &p, &QuadratureRule::default(), zero(mesh.dofs())).unwrap()
}

/// `r(-τB)` from explicit inverses.
fn dense_rational(b: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let n = b.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let num = &id - b * (5.0 * tau / 12.0);
    let d1 = (&id + b * (tau / 4.0)).try_inverse().unwrap();
    let d2 = (&id + b * (tau / 3.0)).try_inverse().unwrap();
    num * d1 * d2
}

#[test]
fn homogeneous_trajectory_matches_dense_rational() {
    let sys = fem_system(16);
    let tau = 1.0 / 32.0;
    let r = dense_rational(&sys.b, tau);
    let u0 = sys.mesh.interpolate(|x| x * (1.0 - x) * (1.0 + x));
    let cfg = StepperConfig::new(Scheme::EtdRdp, tau, 1.0).unwrap();
    let traj = integrate(&sys, &u0, &cfg).unwrap();
    let mut dense = u0.clone();
    for m in 1..=32 {
        dense = &r * dense;
        let dev = (&traj.states[m] - &dense).amax();
        assert!(dev <= 1e-11 * u0.amax(), "step {m}: {dev}");
    }
    assert_eq!(traj.times.len(), 33);
    assert_relative_eq!(traj.times[32], 1.0);
}

#[test]
fn zero_steps_return_initial_data() {
    let sys = fem_system(8);
    let u0 = sys.mesh.interpolate(|x| x.sin());
    for scheme in [Scheme::EtdRdp, Scheme::CrankNicolson] {
        let cfg = StepperConfig::new(scheme, 0.1, 0.0).unwrap();
        let traj = integrate(&sys, &u0, &cfg).unwrap();
        assert_eq!(traj.states.len(), 1);
        assert_eq!(traj.last(), &u0);
    }
}

#[test]
fn runs_are_bitwise_reproducible() {
    let sys = fem_system(32);
    let sys = sys.with_source(Arc::new(PointwiseSource::new(&sys.mesh, |x, t, u| x * (-t).exp() - u * u, None)));
    let u0 = sys.mesh.interpolate(|x| (std::f64::consts::PI * x).sin());
    let cfg = StepperConfig::new(Scheme::EtdRdp, 1.0 / 16.0, 1.0).unwrap();
    let a = integrate(&sys, &u0, &cfg).unwrap();
    let b = integrate(&sys, &u0, &cfg).unwrap();
    assert_eq!(a.states, b.states);
}

#[test]
fn cn_with_state_independent_source_never_iterates() {
    let sys = fem_system(16);
    let sys = sys.with_source(Arc::new(PointwiseSource::new(&sys.mesh, |x, t, _| x * (-t).exp(), None)));
    let cfg = StepperConfig::new(Scheme::CrankNicolson, 1.0 / 8.0, 1.0).unwrap();
    let traj = integrate(&sys, &DVector::zeros(15), &cfg).unwrap();
    assert_eq!(traj.newton_iters, 8);
}

#[test]
fn rational_accuracy_and_stability() {
    for k in 1..=50 {
        let z = -0.5 * k as f64 / 50.0;
        let r = rdp_rational(z).unwrap();
        assert!((r - z.exp()).abs() / z.abs().powi(3) <= 0.25);
        assert!((rdp_partial_fractions(z).unwrap() - r).abs() <= 1e-14);
    }
    for k in 0..=240 {
        let y = 10f64.powf(-6.0 + 12.0 * k as f64 / 240.0);
        for s in [1.0, -1.0] {
            let r = rdp_rational_complex(Complex::new(0.0, s * y)).unwrap();
            assert!(r.norm() <= 1.0 + 1e-15, "y={y}: {}", r.norm());
        }
    }
    assert!(rdp_rational(-1e8).unwrap().abs() <= 1e-6);
}

fn random_spd(seed: &[f64], n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()] + 0.1 * (i as f64 - j as f64));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partial_fraction_matrix_identities(n in 1usize..=8, seed in prop::collection::vec(-2.0f64..2.0, 64)) {
        let b = random_spd(&seed, n);
        let tau = 0.1;
        let id = DMatrix::<f64>::identity(n, n);
        let third = (&id + &b * (tau / 3.0)).try_inverse().unwrap();
        let quarter = (&id + &b * (tau / 4.0)).try_inverse().unwrap();
        let product = &quarter * &third;
        let split = &third * 4.0 - &quarter * 3.0;
        prop_assert!((&product - &split).amax() <= 1e-12);
        let sixth = (&id + &b * (tau / 6.0)) * &quarter * &third;
        let split = &third * 2.0 - &quarter;
        prop_assert!((&sixth - &split).amax() <= 1e-12);
        let r = (&id - &b * (5.0 * tau / 12.0)) * &quarter * &third;
        let split = &third * 9.0 - &quarter * 8.0;
        prop_assert!((&r - &split).amax() <= 1e-12 * (1.0 + r.amax()));
    }

    #[test]
    fn rational_matches_exponential_to_third_order(z in -0.5f64..-1e-3) {
        let r = rdp_rational(z).unwrap();
        prop_assert!((r - z.exp()).abs() <= 0.25 * z.abs().powi(3));
    }
}
