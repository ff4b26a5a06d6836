use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use etdfem_core::problems::ProblemId;
use etdfem_core::steppers::Scheme;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSel {
    Etdrdp,
    Cn,
    Both,
}

impl SchemeSel {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeSel::Etdrdp => vec![Scheme::EtdRdp],
            SchemeSel::Cn => vec![Scheme::CrankNicolson],
            SchemeSel::Both => vec![Scheme::EtdRdp, Scheme::CrankNicolson],
        }
    }
}

/// Accepts plain reals and fractions such as `1/32`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            a / b
        }
        None => s.parse().map_err(|e| format!("{s}: {e}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s}: not a finite number"))
    }
}

/// Every setting that may come from the config file or the command line.
/// Command-line values win.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overrides {
    /// Benchmark problem
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub example: Option<u8>,
    /// Comma-separated fractional orders in (1, 2)
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    pub alpha: Option<Vec<f64>>,
    /// Tempering rate
    #[arg(long, value_parser = parse_real)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeSel>,
    /// Number of refinement levels, starting from h = 1/4 (or tau = 1/4 at fixed h)
    #[arg(long)]
    pub levels: Option<usize>,
    /// Comma-separated element counts
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Comma-separated time steps; fractions allowed
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    pub tau: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_real)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Check the manufactured residual through the adaptive oracle before running
    #[arg(long)]
    pub oracle: Option<bool>,
    /// Directory for cached nodal source data
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Also write P, G and B as CSV
    #[arg(long)]
    pub dump_matrices: Option<bool>,
    /// Element count of the reference solution for Example 3
    #[arg(long)]
    pub reference_n: Option<usize>,
    /// Reference time step is the finest tau divided by this
    #[arg(long)]
    pub reference_refine: Option<usize>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// `self` overridden by whatever `over` sets.
    pub fn merged(self, over: Overrides) -> Self {
        Self {
            example: over.example.or(self.example),
            alpha: over.alpha.or(self.alpha),
            lambda: over.lambda.or(self.lambda),
            scheme: over.scheme.or(self.scheme),
            levels: over.levels.or(self.levels),
            n: over.n.or(self.n),
            tau: over.tau.or(self.tau),
            t_end: over.t_end.or(self.t_end),
            out: over.out.or(self.out),
            threads: over.threads.or(self.threads),
            seed: over.seed.or(self.seed),
            oracle: over.oracle.or(self.oracle),
            cache_dir: over.cache_dir.or(self.cache_dir),
            dump_matrices: over.dump_matrices.or(self.dump_matrices),
            reference_n: over.reference_n.or(self.reference_n),
            reference_refine: over.reference_refine.or(self.reference_refine),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Solve,
    Converge,
    Bench,
    Validate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: ProblemId,
    pub alphas: Vec<f64>,
    pub lambda: f64,
    pub n: Vec<usize>,
    /// empty means `τ = h` at every level
    pub tau: Vec<f64>,
    pub t_end: f64,
    pub schemes: Vec<Scheme>,
    pub out: PathBuf,
    /// reserved; nothing in the numerics is random
    pub seed: u64,
    pub oracle: bool,
    pub cache_dir: Option<PathBuf>,
    pub dump_matrices: bool,
    pub reference_n: usize,
    pub reference_refine: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            example: ProblemId::Linear1,
            alphas: vec![1.2, 1.4, 1.6, 1.8],
            lambda: 1.0,
            n: vec![4, 8, 16, 32],
            tau: Vec::new(),
            t_end: 1.0,
            schemes: vec![Scheme::EtdRdp, Scheme::CrankNicolson],
            out: PathBuf::from("out"),
            seed: 0,
            oracle: false,
            cache_dir: None,
            dump_matrices: false,
            reference_n: 512,
            reference_refine: 16,
        }
    }
}

fn halvings(start: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| start / (1u64 << k) as f64).collect()
}

impl RunConfig {
    /// Fills in per-task defaults and applies the overrides.
    pub fn resolve(task: Task, ov: &Overrides) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let example = ov.example.unwrap_or(match task {
            Task::Bench => 2,
            _ => 1,
        });
        cfg.example = ProblemId::from_number(example).map_err(|e| CliError::Config(e.to_string()))?;
        let levels = ov.levels.unwrap_or(4);
        if levels == 0 {
            return Err(CliError::Config("levels must be at least 1".into()));
        }
        match task {
            Task::Converge if cfg.example == ProblemId::Nonsmooth3 => {
                cfg.n = vec![cfg.reference_n];
                cfg.tau = halvings(0.25, levels);
            }
            Task::Converge | Task::Validate => {
                cfg.n = halvings(1.0, levels).iter().map(|v| (4.0 / v) as usize).collect();
            }
            Task::Bench => {
                cfg.n = vec![512];
                cfg.tau = vec![1.0 / 32.0];
            }
            Task::Solve => {
                cfg.alphas = vec![1.6];
                cfg.n = vec![32];
                cfg.tau = vec![1.0 / 32.0];
            }
        }
        if let Some(v) = &ov.alpha {
            cfg.alphas = v.clone();
        }
        if let Some(v) = ov.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = ov.scheme {
            cfg.schemes = v.schemes();
        }
        if let Some(v) = &ov.n {
            cfg.n = v.clone();
            if ov.tau.is_none() && task != Task::Bench && task != Task::Solve {
                cfg.tau.clear();
            }
        }
        if let Some(v) = &ov.tau {
            cfg.tau = v.clone();
        }
        if let Some(v) = ov.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = &ov.out {
            cfg.out = v.clone();
        }
        cfg.seed = ov.seed.unwrap_or(cfg.seed);
        cfg.oracle = ov.oracle.unwrap_or(false);
        cfg.cache_dir = ov.cache_dir.clone();
        cfg.dump_matrices = ov.dump_matrices.unwrap_or(false);
        cfg.reference_n = ov.reference_n.unwrap_or(cfg.reference_n);
        cfg.reference_refine = ov.reference_refine.unwrap_or(cfg.reference_refine);
        cfg.check(task == Task::Solve)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.check(false)
    }

    /// A single solve may stop at `t_end = 0` and just echo the data.
    fn check(&self, allow_zero_time: bool) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.alphas.is_empty() {
            return bad("no alpha values".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 1.0 && **a < 2.0)) {
            return bad(format!("alpha must lie in (1, 2), got {a}"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !((self.t_end > 0.0 || (allow_zero_time && self.t_end == 0.0)) && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.schemes.is_empty() {
            return bad("no scheme selected".into());
        }
        for &n in self.n.iter().chain(std::iter::once(&self.reference_n)) {
            if !(4..=512).contains(&n) || !n.is_power_of_two() {
                return bad(format!("element counts must be powers of two in [4, 512], got {n}"));
            }
        }
        if self.reference_refine == 0 {
            return bad("reference refinement must be at least 1".into());
        }
        let levels = self.levels()?;
        for (_, tau) in &levels {
            let steps = self.t_end / tau;
            if !(*tau > 0.0) || (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
                return bad(format!("t_end = {} is not a whole number of steps of {tau}", self.t_end));
            }
        }
        Ok(())
    }

    /// `(N, τ)` per refinement level.
    pub fn levels(&self) -> Result<Vec<(usize, f64)>, CliError> {
        let levels: Vec<(usize, f64)> = if self.tau.is_empty() {
            self.n.iter().map(|&n| (n, 1.0 / n as f64)).collect()
        } else if self.n.len() == 1 {
            self.tau.iter().map(|&t| (self.n[0], t)).collect()
        } else if self.n.len() == self.tau.len() {
            self.n.iter().copied().zip(self.tau.iter().copied()).collect()
        } else {
            return Err(CliError::Config(format!(
                "{} mesh sizes and {} time steps cannot be paired",
                self.n.len(),
                self.tau.len()
            )));
        };
        if levels.is_empty() {
            return Err(CliError::Config("no refinement levels".into()));
        }
        for w in levels.windows(2) {
            if ((w[0].1 / w[1].1) - 2.0).abs() > 1e-12 {
                return Err(CliError::Config(format!(
                    "time steps must halve from level to level, got {} then {}",
                    w[0].1, w[1].1
                )));
            }
        }
        Ok(levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_real("1/32").unwrap(), 0.03125);
        assert_eq!(parse_real(" 0.5 ").unwrap(), 0.5);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: Overrides = toml::from_str("example = 2\nalpha = [1.3, 1.5]\nlambda = 2.0\nscheme = \"cn\"").unwrap();
        let flags = Overrides {
            lambda: Some(0.5),
            ..Default::default()
        };
        let m = file.merged(flags);
        assert_eq!(m.example, Some(2));
        assert_eq!(m.lambda, Some(0.5));
        assert_eq!(m.scheme, Some(SchemeSel::Cn));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Overrides>("alpah = [1.5]").is_err());
    }

    #[test]
    fn default_grids() {
        let c = RunConfig::resolve(Task::Converge, &Overrides::default()).unwrap();
        assert_eq!(c.levels().unwrap(), vec![(4, 0.25), (8, 0.125), (16, 0.0625), (32, 0.03125)]);
        let ov = Overrides {
            example: Some(3),
            levels: Some(3),
            ..Default::default()
        };
        let c = RunConfig::resolve(Task::Converge, &ov).unwrap();
        assert_eq!(c.levels().unwrap(), vec![(512, 0.25), (512, 0.125), (512, 0.0625)]);
    }

    #[test]
    fn misaligned_taus_refused() {
        let ov = Overrides {
            n: Some(vec![64]),
            tau: Some(vec![0.25, 0.1]),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(Task::Converge, &ov), Err(CliError::Config(_))));
        let ov = Overrides {
            n: Some(vec![6]),
            ..Default::default()
        };
        assert!(RunConfig::resolve(Task::Converge, &ov).is_err());
    }
}
