//! Time integrators for `U' + BU = F(t, U)`.
//!
//! The exponential scheme replaces `e^{-τB}` by the rational function
//! `r(z) = (1 + 5z/12) / ((1 - z/4)(1 - z/3))` evaluated at `z = -τB`,
//! written in partial fractions so each step costs one predictor solve and
//! two independent corrector solves with matrices factored once.

use std::time::{Duration, Instant};

use nalgebra::{Complex, DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::fem::SemiDiscreteSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    EtdRdp,
    CrankNicolson,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::EtdRdp => "etdrdp",
            Scheme::CrankNicolson => "cn",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "etdrdp" | "etd-rdp" | "etd_rdp" => Ok(Scheme::EtdRdp),
            "cn" | "crank-nicolson" => Ok(Scheme::CrankNicolson),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub tau: f64,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub t_end: f64,
}

impl StepperConfig {
    pub fn new(scheme: Scheme, tau: f64, t_end: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            scheme,
            newton_tol: 1e-6,
            newton_max_iter: 50,
            t_end,
        };
        cfg.steps()?;
        Ok(cfg)
    }

    /// Number of steps `t_end / τ`, which must be whole.
    pub fn steps(&self) -> Result<usize> {
        if !(self.tau > 0.0 && self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need tau > 0 and t_end >= 0, got tau={} t_end={}",
                self.tau, self.t_end
            )));
        }
        let m = (self.t_end / self.tau).round();
        if (m * self.tau - self.t_end).abs() > 1e-9 * self.t_end.max(self.tau) {
            return Err(Error::InvalidParameter(format!(
                "t_end={} is not a whole number of steps of {}",
                self.t_end, self.tau
            )));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::InvalidParameter("Newton tolerance and iteration cap must be positive".into()));
        }
        Ok(m as usize)
    }
}

fn pole_check(d1: f64, d2: f64, z: f64) -> Result<()> {
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::Pole {
            function: "rdp_rational",
            at: z,
        });
    }
    Ok(())
}

/// `r(z) = (1 + 5z/12) / ((1 - z/4)(1 - z/3))`.
pub fn rdp_rational(z: f64) -> Result<f64> {
    let (d1, d2) = (1.0 - z / 4.0, 1.0 - z / 3.0);
    pole_check(d1, d2, z)?;
    if z.is_infinite() {
        return Ok(0.0);
    }
    Ok((1.0 + 5.0 * z / 12.0) / (d1 * d2))
}

pub fn rdp_rational_complex(z: Complex<f64>) -> Result<Complex<f64>> {
    let d1 = Complex::new(1.0, 0.0) - z / 4.0;
    let d2 = Complex::new(1.0, 0.0) - z / 3.0;
    if d1.norm() == 0.0 || d2.norm() == 0.0 {
        return Err(Error::Pole {
            function: "rdp_rational",
            at: z.re,
        });
    }
    Ok((Complex::new(1.0, 0.0) + z * (5.0 / 12.0)) / (d1 * d2))
}

/// Partial-fraction form `9/(1 - z/3) - 8/(1 - z/4)`.
pub fn rdp_partial_fractions(z: f64) -> Result<f64> {
    let (d1, d2) = (1.0 - z / 4.0, 1.0 - z / 3.0);
    pole_check(d1, d2, z)?;
    Ok(9.0 / d2 - 8.0 / d1)
}

type Lu = LU<f64, Dyn, Dyn>;

fn shifted(b: &DMatrix<f64>, c: f64) -> DMatrix<f64> {
    let mut m = b * c;
    for i in 0..m.nrows() {
        m[(i, i)] += 1.0;
    }
    m
}

fn factor(m: DMatrix<f64>, what: &'static str) -> Result<Lu> {
    let lu = m.lu();
    if !lu.is_invertible() {
        return Err(Error::SingularMatrix(what));
    }
    Ok(lu)
}

fn solve(lu: &Lu, rhs: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    lu.solve(rhs).ok_or(Error::SingularMatrix(what))
}

/// Resolvent factorisations reused by every step of one run.
pub enum FactoredOperators {
    EtdRdp {
        tau: f64,
        /// `I + τB`
        full: Lu,
        /// `I + τB/3`
        third: Lu,
        /// `I + τB/4`
        quarter: Lu,
    },
    CrankNicolson {
        tau: f64,
        /// `I + τB/2` as a matrix (Newton Jacobians are built from it)
        plus: DMatrix<f64>,
        plus_lu: Lu,
        /// `I - τB/2`
        minus: DMatrix<f64>,
    },
}

impl FactoredOperators {
    pub fn etd_rdp(b: &DMatrix<f64>, tau: f64) -> Result<Self> {
        Ok(Self::EtdRdp {
            tau,
            full: factor(shifted(b, tau), "I + tau B")?,
            third: factor(shifted(b, tau / 3.0), "I + tau B / 3")?,
            quarter: factor(shifted(b, tau / 4.0), "I + tau B / 4")?,
        })
    }

    pub fn crank_nicolson(b: &DMatrix<f64>, tau: f64) -> Result<Self> {
        let plus = shifted(b, 0.5 * tau);
        Ok(Self::CrankNicolson {
            tau,
            plus_lu: factor(plus.clone(), "I + tau B / 2")?,
            plus,
            minus: shifted(b, -0.5 * tau),
        })
    }

    pub fn for_scheme(scheme: Scheme, b: &DMatrix<f64>, tau: f64) -> Result<Self> {
        match scheme {
            Scheme::EtdRdp => Self::etd_rdp(b, tau),
            Scheme::CrankNicolson => Self::crank_nicolson(b, tau),
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            Self::EtdRdp { tau, .. } | Self::CrankNicolson { tau, .. } => *tau,
        }
    }

    fn check(&self, tau: f64) -> Result<()> {
        if self.tau() != tau {
            return Err(Error::InvalidParameter(format!(
                "operators were factored for tau={}, step requested tau={tau}",
                self.tau()
            )));
        }
        Ok(())
    }
}

fn etd_parts(ops: &FactoredOperators) -> Result<(&Lu, &Lu, &Lu)> {
    match ops {
        FactoredOperators::EtdRdp {
            full, third, quarter, ..
        } => Ok((full, third, quarter)),
        _ => Err(Error::InvalidParameter("ETD step needs ETD-RDP factorisations".into())),
    }
}

/// First-order predictor `(I + τB)⁻¹ (U + τF(t, U))`.
pub fn etd1_step(sys: &SemiDiscreteSystem, ops: &FactoredOperators, t: f64, u: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
    ops.check(tau)?;
    let (full, _, _) = etd_parts(ops)?;
    let f0 = sys.source.eval(t, u);
    solve(full, &(u + &f0 * tau), "I + tau B")
}

/// One ETD-RDP predictor–corrector step.
pub fn etd_rdp_step(sys: &SemiDiscreteSystem, ops: &FactoredOperators, t: f64, u: &DVector<f64>, tau: f64) -> Result<DVector<f64>> {
    ops.check(tau)?;
    let (full, third, quarter) = etd_parts(ops)?;
    let f0 = sys.source.eval(t, u);
    let predicted = solve(full, &(u + &f0 * tau), "I + tau B")?;
    let f1 = sys.source.eval(t + tau, &predicted);
    let rhs_third = u * 9.0 + &f0 * (2.0 * tau) + &f1 * tau;
    let rhs_quarter = u * -8.0 - &f0 * (1.5 * tau) - &f1 * (0.5 * tau);
    let (a, b) = rayon::join(
        || solve(third, &rhs_third, "I + tau B / 3"),
        || solve(quarter, &rhs_quarter, "I + tau B / 4"),
    );
    Ok(a? + b?)
}

/// One Crank–Nicolson step solved by Newton's method; returns the new state
/// and the number of Newton iterations (at least one).
pub fn cn_step(
    sys: &SemiDiscreteSystem,
    ops: &FactoredOperators,
    t: f64,
    u: &DVector<f64>,
    tau: f64,
    cfg: &StepperConfig,
) -> Result<(DVector<f64>, usize)> {
    ops.check(tau)?;
    let FactoredOperators::CrankNicolson {
        plus, plus_lu, minus, ..
    } = ops
    else {
        return Err(Error::InvalidParameter("CN step needs CN factorisations".into()));
    };
    let half = 0.5 * tau;
    let known = minus * u + sys.source.eval(t, u) * half;
    let t1 = t + tau;

    if sys.source.jacobian_diag(t1, u).is_none() {
        let rhs = &known + sys.source.eval(t1, u) * half;
        return Ok((solve(plus_lu, &rhs, "I + tau B / 2")?, 1));
    }

    let residual = |v: &DVector<f64>| plus * v - &known - sys.source.eval(t1, v) * half;
    let mut v = u.clone();
    let mut r = residual(&v);
    let mut iters = 0;
    loop {
        let d = sys
            .source
            .jacobian_diag(t1, &v)
            .expect("source reported a Jacobian above");
        let mut jac = plus.clone();
        for i in 0..d.len() {
            jac[(i, i)] -= half * d[i];
        }
        let lu = factor(jac, "Newton Jacobian")?;
        v -= solve(&lu, &r, "Newton Jacobian")?;
        iters += 1;
        r = residual(&v);
        let norm = r.amax();
        if !norm.is_finite() {
            return Err(Error::NewtonDivergence {
                residual: norm,
                iterations: iters,
            });
        }
        if norm <= cfg.newton_tol {
            return Ok((v, iters));
        }
        if iters >= cfg.newton_max_iter {
            return Err(Error::NewtonDivergence {
                residual: norm,
                iterations: iters,
            });
        }
    }
}

/// States at every time level of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// factorisation plus stepping
    pub wall_time: Duration,
    pub newton_iters: usize,
}

impl Trajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory holds the initial state")
    }
}

pub fn integrate(sys: &SemiDiscreteSystem, u0: &DVector<f64>, cfg: &StepperConfig) -> Result<Trajectory> {
    let steps = cfg.steps()?;
    if u0.len() != sys.dofs() {
        return Err(Error::InvalidParameter(format!(
            "initial vector has {} entries, system has {}",
            u0.len(),
            sys.dofs()
        )));
    }
    let start = Instant::now();
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut newton_iters = 0;
    if steps > 0 {
        let ops = FactoredOperators::for_scheme(cfg.scheme, &sys.b, cfg.tau)?;
        let mut u = u0.clone();
        for m in 0..steps {
            let t = m as f64 * cfg.tau;
            u = match cfg.scheme {
                Scheme::EtdRdp => etd_rdp_step(sys, &ops, t, &u, cfg.tau)?,
                Scheme::CrankNicolson => {
                    let (v, it) = cn_step(sys, &ops, t, &u, cfg.tau, cfg)?;
                    newton_iters += it;
                    v
                }
            };
            times.push((m + 1) as f64 * cfg.tau);
            states.push(u.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        wall_time: start.elapsed(),
        newton_iters,
    })
}
