use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use etdfem_core::problems::ProblemId;
use etdfem_core::steppers::Scheme;
use etdfem_core::{Error, Result};
use nalgebra::DVector;

/// Bumped whenever a column is added, removed or reordered.
pub const CSV_VERSION: u32 = 1;

/// `‖u - ũ‖_∞ / ‖u‖_∞`.
pub fn rel_linf_error(u_exact: &DVector<f64>, u_num: &DVector<f64>) -> Result<f64> {
    if u_exact.len() != u_num.len() {
        return Err(Error::InvalidParameter(format!(
            "vectors differ in length: {} vs {}",
            u_exact.len(),
            u_num.len()
        )));
    }
    let norm = u_exact.amax();
    if !(norm > 0.0) {
        return Err(Error::Precondition("reference solution has zero max norm".into()));
    }
    Ok((u_exact - u_num).amax() / norm)
}

/// `log₂(e_coarse / e_fine)` for a halving of the step.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) {
        return Err(Error::Precondition(format!(
            "errors must be positive, got {e_coarse:e} and {e_fine:e}"
        )));
    }
    Ok((e_coarse / e_fine).log2())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub h: f64,
    pub tau: f64,
    pub scheme: Scheme,
    pub rel_linf_error: Option<f64>,
    /// against the previous level of the same `(alpha, scheme)`
    pub observed_order: Option<f64>,
    pub wall_time_s: f64,
    pub newton_iters_total: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub example: ProblemId,
    pub lambda: f64,
    pub t_end: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn rows_for(&self, alpha: f64, scheme: Scheme) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows
            .iter()
            .filter(move |r| r.alpha == alpha && r.scheme == scheme)
    }

    pub fn errors(&self, alpha: f64, scheme: Scheme) -> Vec<Option<f64>> {
        self.rows_for(alpha, scheme).map(|r| r.rel_linf_error).collect()
    }

    /// Orders between consecutive levels; the first level has none.
    pub fn orders(&self, alpha: f64, scheme: Scheme) -> Vec<Option<f64>> {
        self.rows_for(alpha, scheme).skip(1).map(|r| r.observed_order).collect()
    }

    pub fn alphas(&self) -> Vec<f64> {
        let mut a: Vec<f64> = self.rows.iter().map(|r| r.alpha).collect();
        a.sort_by(f64::total_cmp);
        a.dedup();
        a
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.failure.is_some())
    }

    pub fn to_csv(&self, alpha: f64) -> String {
        let mut out = format!(
            "# etdfem convergence v{CSV_VERSION} example={} lambda={} t_end={}\n",
            self.example.number(),
            self.lambda,
            self.t_end
        );
        out.push_str("alpha,h,tau,scheme,rel_linf_error,observed_order,wall_time_s,newton_iters_total,status\n");
        for r in self.rows.iter().filter(|r| r.alpha == alpha) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{},{}",
                r.alpha,
                r.h,
                r.tau,
                r.scheme.name(),
                opt(r.rel_linf_error),
                opt(r.observed_order),
                r.wall_time_s,
                r.newton_iters_total,
                r.failure.as_deref().map_or("ok".to_string(), |f| format!("failed: {}", f.replace(',', ";")))
            );
        }
        out
    }

    /// One `convergence_<example>_<alpha>.csv` per alpha.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for alpha in self.alphas() {
            let path = dir.join(format!("convergence_{}_{}.csv", self.example.number(), alpha));
            std::fs::write(&path, self.to_csv(alpha))?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:e}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub example: ProblemId,
    pub alpha: f64,
    pub n: usize,
    pub tau: f64,
    pub etdrdp_s: Option<f64>,
    pub cn_s: Option<f64>,
    pub cn_newton_iters: usize,
}

impl BenchRow {
    /// `(1 - t_ETD / t_CN) · 100`
    pub fn improvement_pct(&self) -> Option<f64> {
        Some((1.0 - self.etdrdp_s? / self.cn_s?) * 100.0)
    }
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("# etdfem bench v{CSV_VERSION} median of 3 runs; assembly excluded\n");
    out.push_str("example,alpha,n,tau,etdrdp_s,cn_s,improvement_pct,cn_newton_iters\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.example.number(),
            r.alpha,
            r.n,
            r.tau,
            r.etdrdp_s.map_or(String::new(), |v| format!("{v:.6}")),
            r.cn_s.map_or(String::new(), |v| format!("{v:.6}")),
            r.improvement_pct().map_or(String::new(), |v| format!("{v:.2}")),
            r.cn_newton_iters
        );
    }
    out
}
