use std::f64::consts::PI;
use std::sync::Arc;

use etdfem_core::fem::{assemble_stiffness, Mesh1D, SemiDiscreteSystem, ZeroSource};
use etdfem_core::oracle;
use etdfem_core::problems::{example1, example2};
use etdfem_core::specfun::{gamma_fn, lower_incomplete_gamma};
use etdfem_core::steppers::{
    integrate, rdp_partial_fractions, rdp_rational, FactoredOperators, Scheme, StepperConfig,
};
use etdfem_core::tfrac::{check_fourier_symbol, check_semigroup_adjoint, QuadratureRule, TemperedParams};
use etdfem_core::Result;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::run::manufactured_residual;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    AtMost,
    /// negative control: the deviation has to exceed the threshold
    Exceeds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub deviation: f64,
    pub threshold: f64,
    pub expect: Expect,
    pub error: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && match self.expect {
                Expect::AtMost => self.deviation <= self.threshold,
                Expect::Exceeds => self.deviation > self.threshold,
            }
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let rel = match self.expect {
            Expect::AtMost => "<=",
            Expect::Exceeds => ">",
        };
        match &self.error {
            Some(e) => format!("{verdict} {:<40} error: {e}", self.name),
            None => format!(
                "{verdict} {:<40} deviation {:.3e} (need {rel} {:.1e})",
                self.name, self.deviation, self.threshold
            ),
        }
    }
}

/// `max_ij |G_ij - tridiag(-1, 2, -1)/h| / (2/h)` at `N = 8`.
pub fn classical_limit_deviation(p: &TemperedParams) -> Result<f64> {
    let mesh = Mesh1D::new(8)?;
    let g = assemble_stiffness(&mesh, p, &QuadratureRule::default())?;
    let h = mesh.h();
    let classical = DMatrix::from_fn(7, 7, |i, j| match i.abs_diff(j) {
        0 => 2.0 / h,
        1 => -1.0 / h,
        _ => 0.0,
    });
    Ok((g - classical).amax() / (2.0 / h))
}

/// Largest gap between assembled entries and the adaptive double
/// quadrature.
pub fn stiffness_oracle_deviation(n: usize, p: &TemperedParams, tol: f64) -> Result<f64> {
    let mesh = Mesh1D::new(n)?;
    let g = assemble_stiffness(&mesh, p, &QuadratureRule::default())?;
    let mut worst: f64 = 0.0;
    for i in 0..mesh.dofs() {
        for j in i..mesh.dofs() {
            let o = oracle::stiffness_entry(n, p, i + 1, j + 1, tol)?;
            worst = worst.max((g[(i, j)] - o).abs());
        }
    }
    Ok(worst)
}

/// `r(-τB)` through dense inverses, `(I - 5τB/12)(I + τB/3)⁻¹(I + τB/4)⁻¹`.
pub fn dense_rational(b: &DMatrix<f64>, tau: f64) -> Option<DMatrix<f64>> {
    let n = b.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let third = (&id + b * (tau / 3.0)).try_inverse()?;
    let quarter = (&id + b * (tau / 4.0)).try_inverse()?;
    Some((&id - b * (5.0 * tau / 12.0)) * third * quarter)
}

fn system16() -> Result<SemiDiscreteSystem> {
    let mesh = Mesh1D::new(16)?;
    let p = TemperedParams::new(1.6, 1.0)?;
    SemiDiscreteSystem::assemble(&mesh, &p, &QuadratureRule::default(), Arc::new(ZeroSource { dofs: mesh.dofs() }))
}

/// Homogeneous ETD-RDP trajectory against repeated dense `r(-τB)`.
pub fn etd_trajectory_deviation() -> Result<f64> {
    let sys = system16()?;
    let tau = 1.0 / 16.0;
    let r = dense_rational(&sys.b, tau).ok_or(etdfem_core::Error::SingularMatrix("dense rational"))?;
    let u0 = DVector::from_fn(sys.dofs(), |i, _| ((i + 1) as f64 * PI / 16.0).sin());
    let traj = integrate(&sys, &u0, &StepperConfig::new(Scheme::EtdRdp, tau, 1.0)?)?;
    let mut u = u0;
    let mut worst: f64 = 0.0;
    for state in traj.states.iter().skip(1) {
        u = &r * u;
        worst = worst.max((state - &u).amax());
    }
    Ok(worst)
}

/// `9(I + τB/3)⁻¹ - 8(I + τB/4)⁻¹` against the product form.
pub fn partial_fraction_deviation() -> Result<f64> {
    let sys = system16()?;
    let tau = 1.0 / 16.0;
    let n = sys.dofs();
    let id = DMatrix::<f64>::identity(n, n);
    let ops = FactoredOperators::etd_rdp(&sys.b, tau)?;
    let FactoredOperators::EtdRdp { third, quarter, .. } = &ops else {
        unreachable!("etd_rdp builds ETD factorisations")
    };
    let singular = etdfem_core::Error::SingularMatrix("partial fractions");
    let a = third.solve(&id).ok_or(singular.clone())?;
    let b = quarter.solve(&id).ok_or(singular.clone())?;
    let pf = a * 9.0 - b * 8.0;
    let product = dense_rational(&sys.b, tau).ok_or(singular)?;
    let mut worst = (pf - product).amax();
    for k in 0..200 {
        let z = -(k as f64) * 0.5;
        worst = worst.max((rdp_partial_fractions(z)? - rdp_rational(z)?).abs());
    }
    Ok(worst)
}

type Job = Box<dyn Fn() -> Result<f64> + Send + Sync>;

fn job(f: impl Fn() -> Result<f64> + Send + Sync + 'static) -> Job {
    Box::new(f)
}

/// Runs every self-check; the summary passes when all checks do.
pub fn run_validate() -> Vec<Check> {
    let p16 = TemperedParams::new(1.6, 1.0).expect("valid");
    let jobs: Vec<(&'static str, f64, Expect, Job)> = vec![
        (
            "gamma(1/2)^2 = pi",
            1e-14,
            Expect::AtMost,
            job(|| Ok((gamma_fn(0.5)?.powi(2) - PI).abs() / PI)),
        ),
        (
            "gamma reflection at 0.3",
            1e-13,
            Expect::AtMost,
            job(|| {
                let lhs = gamma_fn(0.3)? * gamma_fn(0.7)?;
                let rhs = PI / (0.3 * PI).sin();
                Ok((lhs - rhs).abs() / rhs)
            }),
        ),
        (
            "incomplete gamma recurrence a=-1.6",
            1e-12,
            Expect::AtMost,
            job(|| {
                let (a, x) = (-1.6, 0.7f64);
                let lhs = lower_incomplete_gamma(a + 1.0, x)?;
                let rhs = a * lower_incomplete_gamma(a, x)? - x.powf(a) * (-x).exp();
                Ok((lhs - rhs).abs() / lhs.abs())
            }),
        ),
        (
            "fourier symbol alpha=1.6 lambda=1",
            1e-6,
            Expect::AtMost,
            job(move || check_fourier_symbol(&p16, 0.5)),
        ),
        (
            "fourier symbol alpha=1.2 lambda=0.5",
            1e-6,
            Expect::AtMost,
            job(|| check_fourier_symbol(&TemperedParams::new(1.2, 0.5)?, 0.5)),
        ),
        (
            "semigroup (0.6, 0.6, 1)",
            1e-7,
            Expect::AtMost,
            job(|| Ok(check_semigroup_adjoint(0.6, 0.6, 1.0)?.semigroup)),
        ),
        (
            "adjoint (0.6, 1)",
            1e-7,
            Expect::AtMost,
            job(|| Ok(check_semigroup_adjoint(0.6, 0.6, 1.0)?.adjoint)),
        ),
        (
            "inverse D I (0.6, 1)",
            1e-9,
            Expect::AtMost,
            job(|| Ok(check_semigroup_adjoint(0.6, 0.6, 1.0)?.inverse)),
        ),
        (
            "semigroup lambda=0 (0.3, 0.9)",
            1e-7,
            Expect::AtMost,
            job(|| Ok(check_semigroup_adjoint(0.3, 0.9, 0.0)?.semigroup)),
        ),
        (
            "stiffness vs oracle N=4",
            1e-8,
            Expect::AtMost,
            job(move || stiffness_oracle_deviation(4, &p16, 1e-10)),
        ),
        (
            "stiffness vs oracle N=8 lambda=0",
            1e-7,
            Expect::AtMost,
            job(|| stiffness_oracle_deviation(8, &TemperedParams::new(1.5, 0.0)?, 1e-9)),
        ),
        (
            "classical limit",
            0.01,
            Expect::AtMost,
            job(|| classical_limit_deviation(&TemperedParams::new(1.999, 1e-8)?)),
        ),
        (
            "flipped C_alpha breaks classical limit",
            0.01,
            Expect::Exceeds,
            job(|| classical_limit_deviation(&TemperedParams::new(1.999, 1e-8)?.with_flipped_sign())),
        ),
        (
            "manufactured residual example 1",
            1e-7,
            Expect::AtMost,
            job(|| manufactured_residual(&example1(&TemperedParams::new(1.6, 1.0)?)?, 20, 11)),
        ),
        (
            "manufactured residual example 2",
            1e-7,
            Expect::AtMost,
            job(|| manufactured_residual(&example2(&TemperedParams::new(1.6, 1.0)?, 1e-14)?, 20, 12)),
        ),
        (
            "rdp rational r(-0.1)",
            1e-9,
            Expect::AtMost,
            job(|| Ok((rdp_rational(-0.1)? - (9.0 / (1.0 + 1.0 / 30.0) - 8.0 / 1.025)).abs())),
        ),
        (
            "crank-nicolson scalar factor",
            1e-15,
            Expect::AtMost,
            job(|| {
                let tau = 0.1;
                let b = DMatrix::from_element(1, 1, 1.0);
                let ops = FactoredOperators::crank_nicolson(&b, tau)?;
                let FactoredOperators::CrankNicolson { plus_lu, minus, .. } = &ops else {
                    unreachable!("crank_nicolson builds CN factorisations")
                };
                let v = plus_lu
                    .solve(&(minus * DVector::from_element(1, 1.0)))
                    .ok_or(etdfem_core::Error::SingularMatrix("scalar"))?;
                Ok((v[0] - (1.0 - tau / 2.0) / (1.0 + tau / 2.0)).abs())
            }),
        ),
        ("partial fractions", 1e-12, Expect::AtMost, job(partial_fraction_deviation)),
        ("etd-rdp trajectory vs r(-tau B)^m", 1e-11, Expect::AtMost, job(etd_trajectory_deviation)),
    ];
    jobs.into_par_iter()
        .map(|(name, threshold, expect, f)| match f() {
            Ok(deviation) => Check {
                name,
                deviation,
                threshold,
                expect,
                error: None,
            },
            Err(e) => Check {
                name,
                deviation: f64::NAN,
                threshold,
                expect,
                error: Some(e.to_string()),
            },
        })
        .collect()
}
