use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use etdfem_core::fem::{Mesh1D, SemiDiscreteSystem};
use etdfem_core::oracle;
use etdfem_core::problems::{problem, BenchmarkProblem};
use etdfem_core::steppers::{integrate, Scheme, StepperConfig, Trajectory};
use etdfem_core::tfrac::{QuadratureRule, TemperedParams};
use etdfem_core::Result;
use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::report::{bench_csv, observed_order, rel_linf_error, BenchRow, ConvergenceReport, ConvergenceRow, CSV_VERSION};
use crate::CliError;

fn params(cfg: &RunConfig, alpha: f64) -> Result<TemperedParams> {
    TemperedParams::new(alpha, cfg.lambda)
}

fn build(cfg: &RunConfig, prob: &BenchmarkProblem, n: usize) -> Result<SemiDiscreteSystem> {
    let mesh = Mesh1D::new(n)?;
    let sys = prob.build_system(&mesh, &QuadratureRule::default(), cfg.cache_dir.as_deref())?;
    if cfg.dump_matrices {
        let prefix = format!("ex{}_a{}_n{}", prob.id.number(), prob.params.alpha(), n);
        sys.dump_matrices(&cfg.out.join("matrices"), &prefix)?;
    }
    Ok(sys)
}

/// `max(0, max u - 1) + max(0, -min u)`
pub fn overshoot(u: &DVector<f64>) -> f64 {
    (u.max() - 1.0).max(0.0) + (-u.min()).max(0.0)
}

/// Largest `|u_t - Lu - f|` at the exact solution over `points` random
/// `(x, t)`, with `L` applied by the adaptive oracle.
pub fn manufactured_residual(prob: &BenchmarkProblem, points: usize, seed: u64) -> Result<f64> {
    let q = QuadratureRule::default();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x: f64 = rng.random_range(0.01..0.99);
        let t: f64 = rng.random_range(0.0..1.0);
        let Some(u) = prob.exact(x, t) else {
            return Err(etdfem_core::Error::Precondition("problem has no exact solution".into()));
        };
        let lu = (-t).exp() * oracle::riesz(&prob.profile, &prob.params, x, 1e-11)?;
        let f = prob.source_at(x, t, u, &q)?;
        worst = worst.max((-u - lu - f).abs());
    }
    Ok(worst)
}

fn oracle_gate(cfg: &RunConfig, prob: &BenchmarkProblem) -> std::result::Result<(), CliError> {
    if cfg.oracle && prob.has_exact() {
        let r = manufactured_residual(prob, 20, cfg.seed)?;
        if r > 1e-7 {
            return Err(CliError::Validation(format!(
                "manufactured residual {r:e} exceeds 1e-7 for alpha = {}",
                prob.params.alpha()
            )));
        }
    }
    Ok(())
}

/// Restriction of a fine nodal vector to the interior nodes of a coarser
/// nested mesh.
fn restrict(fine: &DVector<f64>, n_fine: usize, n_coarse: usize) -> DVector<f64> {
    let ratio = n_fine / n_coarse;
    DVector::from_fn(n_coarse - 1, |i, _| fine[(i + 1) * ratio - 1])
}

struct AlphaRun {
    rows: Vec<ConvergenceRow>,
}

fn converge_alpha(cfg: &RunConfig, alpha: f64, levels: &[(usize, f64)]) -> std::result::Result<AlphaRun, CliError> {
    let p = params(cfg, alpha)?;
    let prob = problem(cfg.example, &p)?;
    oracle_gate(cfg, &prob)?;
    let mut systems: BTreeMap<usize, std::result::Result<SemiDiscreteSystem, String>> = BTreeMap::new();
    let mut system = |n: usize| -> std::result::Result<SemiDiscreteSystem, String> {
        systems
            .entry(n)
            .or_insert_with(|| build(cfg, &prob, n).map_err(|e| e.to_string()))
            .clone()
    };

    // no closed form: compare with a fine ETD-RDP run instead
    let reference = if prob.has_exact() {
        None
    } else {
        let tau_min = levels.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
        let tau_ref = tau_min / cfg.reference_refine as f64;
        let run = system(cfg.reference_n).and_then(|sys| {
            let sc = StepperConfig::new(Scheme::EtdRdp, tau_ref, cfg.t_end).map_err(|e| e.to_string())?;
            integrate(&sys, &prob.initial_vector(&sys.mesh), &sc)
                .map(|t| t.last().clone())
                .map_err(|e| e.to_string())
        });
        Some(run)
    };

    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        let mut previous: Option<f64> = None;
        for &(n, tau) in levels {
            let mut row = ConvergenceRow {
                alpha,
                h: 1.0 / n as f64,
                tau,
                scheme,
                rel_linf_error: None,
                observed_order: None,
                wall_time_s: 0.0,
                newton_iters_total: 0,
                failure: None,
            };
            let outcome = system(n).and_then(|sys| {
                let sc = StepperConfig::new(scheme, tau, cfg.t_end).map_err(|e| e.to_string())?;
                let traj = integrate(&sys, &prob.initial_vector(&sys.mesh), &sc).map_err(|e| e.to_string())?;
                let target = match &reference {
                    None => prob.exact_vector(&sys.mesh, cfg.t_end).expect("exact solution"),
                    Some(Ok(r)) => restrict(r, cfg.reference_n, n),
                    Some(Err(e)) => return Err(format!("reference run: {e}")),
                };
                let err = rel_linf_error(&target, traj.last()).map_err(|e| e.to_string())?;
                Ok((traj, err))
            });
            match outcome {
                Ok((traj, err)) => {
                    row.rel_linf_error = Some(err);
                    row.observed_order = previous.and_then(|e| observed_order(e, err).ok());
                    row.wall_time_s = traj.wall_time.as_secs_f64();
                    row.newton_iters_total = traj.newton_iters;
                    previous = Some(err);
                }
                Err(e) => {
                    row.failure = Some(e);
                    previous = None;
                }
            }
            rows.push(row);
        }
    }
    Ok(AlphaRun { rows })
}

/// Error and observed order per `(alpha, scheme, level)`. Failed rows are
/// recorded and the run continues.
pub fn run_convergence(cfg: &RunConfig) -> std::result::Result<ConvergenceReport, CliError> {
    cfg.validate()?;
    let levels = cfg.levels()?;
    let runs: Vec<_> = cfg
        .alphas
        .par_iter()
        .map(|&alpha| converge_alpha(cfg, alpha, &levels))
        .collect();
    let mut rows = Vec::new();
    for run in runs {
        rows.extend(run?.rows);
    }
    rows.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then(a.scheme.cmp(&b.scheme))
            .then(b.tau.total_cmp(&a.tau))
    });
    Ok(ConvergenceReport {
        example: cfg.example,
        lambda: cfg.lambda,
        t_end: cfg.t_end,
        rows,
    })
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

/// Factorisation plus stepping time of both schemes on one shared
/// assembly, median of three runs.
pub fn run_bench(cfg: &RunConfig) -> std::result::Result<Vec<BenchRow>, CliError> {
    cfg.validate()?;
    let levels = cfg.levels()?;
    let &[(n, tau)] = levels.as_slice() else {
        return Err(CliError::Config("bench takes exactly one (N, tau) pair".into()));
    };
    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        let p = params(cfg, alpha)?;
        let prob = problem(cfg.example, &p)?;
        let sys = build(cfg, &prob, n)?;
        let u0 = prob.initial_vector(&sys.mesh);
        let mut row = BenchRow {
            example: cfg.example,
            alpha,
            n,
            tau,
            etdrdp_s: None,
            cn_s: None,
            cn_newton_iters: 0,
        };
        for &scheme in &cfg.schemes {
            let sc = StepperConfig::new(scheme, tau, cfg.t_end)?;
            let mut times = Vec::new();
            let mut iters = 0;
            for _ in 0..3 {
                let traj: Trajectory = integrate(&sys, &u0, &sc)?;
                times.push(traj.wall_time);
                iters = traj.newton_iters;
            }
            let t = median(times).as_secs_f64();
            match scheme {
                Scheme::EtdRdp => row.etdrdp_s = Some(t),
                Scheme::CrankNicolson => {
                    row.cn_s = Some(t);
                    row.cn_newton_iters = iters;
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_bench(cfg: &RunConfig, rows: &[BenchRow]) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("bench.csv");
    std::fs::write(&path, bench_csv(rows))?;
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub tag: String,
    pub scheme: Scheme,
    pub trajectory: Trajectory,
    /// nodes including both boundaries
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub exact: Option<Vec<f64>>,
}

impl SolveOutput {
    pub fn csv(&self, cfg: &RunConfig) -> String {
        let mut out = format!(
            "# etdfem solution v{CSV_VERSION} example={} alpha={} lambda={} n={} tau={} t_end={} scheme={}\n",
            cfg.example.number(),
            cfg.alphas[0],
            cfg.lambda,
            self.x.len() - 1,
            self.trajectory.times.get(1).copied().unwrap_or(0.0),
            cfg.t_end,
            self.scheme.name()
        );
        match &self.exact {
            Some(ex) => {
                out.push_str("x,u_num,u_exact,abs_err\n");
                for ((x, u), e) in self.x.iter().zip(&self.u).zip(ex) {
                    let _ = writeln!(out, "{x},{u:e},{e:e},{:e}", (u - e).abs());
                }
            }
            None => {
                out.push_str("x,u_num\n");
                for (x, u) in self.x.iter().zip(&self.u) {
                    let _ = writeln!(out, "{x},{u:e}");
                }
            }
        }
        out
    }

    /// Long-format `t,x,u` of every `every`-th time level.
    pub fn snapshots_csv(&self, every: usize) -> String {
        let mut out = format!("# etdfem snapshots v{CSV_VERSION}\nt,x,u\n");
        let every = every.max(1);
        for (k, (t, state)) in self.trajectory.times.iter().zip(&self.trajectory.states).enumerate() {
            if k % every != 0 && k + 1 != self.trajectory.times.len() {
                continue;
            }
            let full = with_boundaries(state);
            for (x, u) in self.x.iter().zip(&full) {
                let _ = writeln!(out, "{t},{x},{u:e}");
            }
        }
        out
    }
}

fn with_boundaries(u: &DVector<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(u.len() + 2);
    v.push(0.0);
    v.extend(u.iter());
    v.push(0.0);
    v
}

/// One run per selected scheme at a single `(alpha, N, τ)`.
pub fn run_solve(cfg: &RunConfig) -> std::result::Result<Vec<SolveOutput>, CliError> {
    let levels = cfg.levels()?;
    let (&[alpha], &[(n, tau)]) = (cfg.alphas.as_slice(), levels.as_slice()) else {
        return Err(CliError::Config("solve takes a single alpha, N and tau".into()));
    };
    let p = params(cfg, alpha)?;
    let prob = problem(cfg.example, &p)?;
    oracle_gate(cfg, &prob)?;
    let sys = build(cfg, &prob, n)?;
    let mesh = sys.mesh;
    let x: Vec<f64> = (0..=n).map(|i| mesh.node(i)).collect();
    let exact = prob.exact_vector(&mesh, cfg.t_end).map(|e| with_boundaries(&e));
    let mut outs = Vec::new();
    for &scheme in &cfg.schemes {
        let sc = StepperConfig::new(scheme, tau, cfg.t_end)?;
        let trajectory = integrate(&sys, &prob.initial_vector(&mesh), &sc)?;
        outs.push(SolveOutput {
            tag: format!("ex{}_a{}_n{}_{}", cfg.example.number(), alpha, n, scheme.name()),
            scheme,
            u: with_boundaries(trajectory.last()),
            trajectory,
            x: x.clone(),
            exact: exact.clone(),
        });
    }
    Ok(outs)
}

pub fn write_solve(cfg: &RunConfig, outs: &[SolveOutput], snapshot_every: Option<usize>) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.out)?;
    let mut paths = Vec::new();
    for o in outs {
        let path = cfg.out.join(format!("solution_{}.csv", o.tag));
        std::fs::write(&path, o.csv(cfg))?;
        paths.push(path);
        if let Some(every) = snapshot_every {
            let path = cfg.out.join(format!("solution_{}_snapshots.csv", o.tag));
            std::fs::write(&path, o.snapshots_csv(every))?;
            paths.push(path);
        }
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overshoot_measure() {
        assert_eq!(overshoot(&DVector::from_vec(vec![0.0, 0.5, 1.0])), 0.0);
        let v = overshoot(&DVector::from_vec(vec![-0.25, 1.5]));
        assert_eq!(v, 0.75);
    }

    #[test]
    fn restriction_picks_shared_nodes() {
        let fine = DVector::from_fn(7, |i, _| (i + 1) as f64 / 8.0);
        let c = restrict(&fine, 8, 4);
        assert_eq!(c.as_slice(), &[0.25, 0.5, 0.75]);
    }
}
