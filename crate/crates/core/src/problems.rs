//! The three benchmark problems and their manufactured sources.
//!
//! Every example separates as `u = X(x) e^{-t}` (Example 3 borrows the
//! source of Example 1), so the source at a node is
//! `N(u) + e^{-t}(-X - LX) - N(X e^{-t})` with `LX` the Riesz-tempered
//! operator applied to the profile. `LX` is computed once per mesh and can be
//! cached on disk.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fem::{assemble_mass, Mesh1D, NodalSource, SemiDiscreteSystem};
use crate::field::ScalarField;
use crate::quadrature::cached_legendre;
use crate::specfun::{gamma_fn, lower_incomplete_gamma};
use crate::tfrac::{apply_riesz_tempered, apply_riesz_tempered_many, QuadratureRule, TemperedParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemId {
    Linear1,
    Nonlinear2,
    Nonsmooth3,
}

impl ProblemId {
    pub fn number(&self) -> u8 {
        match self {
            ProblemId::Linear1 => 1,
            ProblemId::Nonlinear2 => 2,
            ProblemId::Nonsmooth3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(ProblemId::Linear1),
            2 => Ok(ProblemId::Nonlinear2),
            3 => Ok(ProblemId::Nonsmooth3),
            _ => Err(Error::InvalidParameter(format!("unknown example {n}, expected 1, 2 or 3"))),
        }
    }
}

/// Pointwise reaction term `N(u)` and its derivative.
#[derive(Debug, Clone, Copy)]
pub struct Reaction {
    pub n: fn(f64) -> f64,
    pub dn: fn(f64) -> f64,
}

pub const SQUARE: Reaction = Reaction {
    n: |u| u * u,
    dn: |u| 2.0 * u,
};

#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub id: ProblemId,
    pub params: TemperedParams,
    pub initial: ScalarField,
    /// spatial profile `X` of the manufactured solution `X(x) e^{-t}`
    pub profile: ScalarField,
    pub reaction: Option<Reaction>,
    has_exact: bool,
    series_tol: f64,
}

/// `-2 λ^{6-α} cos(πα/2) Γ(-α)`, the amplitude of Example 1.
pub fn example1_amplitude(p: &TemperedParams) -> Result<f64> {
    let a = p.alpha();
    Ok(-2.0 * p.lambda().powf(6.0 - a) * (0.5 * PI * a).cos() * gamma_fn(-a)?)
}

fn example1_profile(p: &TemperedParams) -> Result<ScalarField> {
    let amp = example1_amplitude(p)?;
    Ok(ScalarField::bubble(3, 3).combine(amp, &ScalarField::polynomial(vec![]), 0.0))
}

pub fn example1(p: &TemperedParams) -> Result<BenchmarkProblem> {
    if !(p.lambda() > 0.0) {
        return Err(Error::InvalidParameter(
            "Example 1 needs lambda > 0; its amplitude carries lambda^(6 - alpha)".into(),
        ));
    }
    let profile = example1_profile(p)?;
    Ok(BenchmarkProblem {
        id: ProblemId::Linear1,
        params: *p,
        initial: profile.clone(),
        profile,
        reaction: None,
        has_exact: true,
        series_tol: 1e-14,
    })
}

pub fn example2(p: &TemperedParams, series_tol: f64) -> Result<BenchmarkProblem> {
    if !(series_tol > 0.0) {
        return Err(Error::InvalidParameter("series tolerance must be positive".into()));
    }
    let profile = ScalarField::bubble(2, 2);
    Ok(BenchmarkProblem {
        id: ProblemId::Nonlinear2,
        params: *p,
        initial: profile.clone(),
        profile,
        reaction: Some(SQUARE),
        has_exact: true,
        series_tol,
    })
}

/// Box initial data on `[0.25, 0.75)` driven by the source of Example 1.
pub fn example3(p: &TemperedParams) -> Result<BenchmarkProblem> {
    let profile = if p.lambda() > 0.0 {
        example1_profile(p)?
    } else {
        ScalarField::polynomial(vec![])
    };
    Ok(BenchmarkProblem {
        id: ProblemId::Nonsmooth3,
        params: *p,
        initial: ScalarField::indicator(0.25, 0.75)?,
        profile,
        reaction: None,
        has_exact: false,
        series_tol: 1e-14,
    })
}

pub fn problem(id: ProblemId, p: &TemperedParams) -> Result<BenchmarkProblem> {
    match id {
        ProblemId::Linear1 => example1(p),
        ProblemId::Nonlinear2 => example2(p, 1e-14),
        ProblemId::Nonsmooth3 => example3(p),
    }
}

impl BenchmarkProblem {
    pub fn has_exact(&self) -> bool {
        self.has_exact
    }

    pub fn exact(&self, x: f64, t: f64) -> Option<f64> {
        self.has_exact.then(|| self.profile.value(x) * (-t).exp())
    }

    pub fn exact_vector(&self, mesh: &Mesh1D, t: f64) -> Option<DVector<f64>> {
        self.has_exact
            .then(|| mesh.interpolate(|x| self.profile.value(x)) * (-t).exp())
    }

    pub fn initial_vector(&self, mesh: &Mesh1D) -> DVector<f64> {
        mesh.interpolate(|x| self.initial.value(x))
    }

    /// `f(x, t, u)` with the operator applied to the profile on the spot.
    pub fn source_at(&self, x: f64, t: f64, u: f64, q: &QuadratureRule) -> Result<f64> {
        let lx = apply_riesz_tempered(&self.profile, &self.params, x, q)?;
        Ok(self.source_from(self.profile.value(x), lx, t, u))
    }

    fn source_from(&self, x_val: f64, lx: f64, t: f64, u: f64) -> f64 {
        let decay = (-t).exp();
        let forcing = decay * (-x_val - lx);
        match self.reaction {
            Some(r) => (r.n)(u) + forcing - (r.n)(x_val * decay),
            None => forcing,
        }
    }

    /// Nodal source with `LX` computed (or read from `cache`) for `mesh`.
    pub fn nodal_source(&self, mesh: &Mesh1D, q: &QuadratureRule, cache: Option<&Path>) -> Result<ManufacturedSource> {
        self.nodal_source_with(mesh, q, cache, LoadRule::default())
    }

    pub fn nodal_source_with(
        &self,
        mesh: &Mesh1D,
        q: &QuadratureRule,
        cache: Option<&Path>,
        rule: LoadRule,
    ) -> Result<ManufacturedSource> {
        let nodes = mesh.interior_nodes();
        let compute = || match rule {
            LoadRule::Nodal => apply_riesz_tempered_many(&self.profile, &self.params, &nodes, q),
            LoadRule::Projected => projected_lx(&self.profile, &self.params, mesh, q),
        };
        let lx = match cache {
            Some(dir) => {
                let path = lx_cache_path(dir, self.profile_tag(), mesh, &self.params, rule);
                match read_lx_cache(&path, mesh, &self.params, q, rule)? {
                    Some(v) => v,
                    None => {
                        let v = compute()?;
                        write_lx_cache(&path, mesh, &self.params, q, rule, &v)?;
                        v
                    }
                }
            }
            None => compute()?,
        };
        Ok(ManufacturedSource {
            profile: nodes.iter().map(|x| self.profile.value(*x)).collect(),
            lx,
            reaction: self.reaction,
        })
    }

    /// Assembles `P`, `G`, `B` and attaches the nodal source.
    pub fn build_system(&self, mesh: &Mesh1D, q: &QuadratureRule, cache: Option<&Path>) -> Result<SemiDiscreteSystem> {
        let source = self.nodal_source(mesh, q, cache)?;
        SemiDiscreteSystem::assemble(mesh, &self.params, q, Arc::new(source))
    }

    fn profile_tag(&self) -> &'static str {
        match self.id {
            ProblemId::Linear1 | ProblemId::Nonsmooth3 => "x3",
            ProblemId::Nonlinear2 => "x2",
        }
    }

    pub fn series_tol(&self) -> f64 {
        self.series_tol
    }
}

/// How the operator part of the forcing enters the nodal source vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadRule {
    /// `LX` collocated at the nodes.
    Nodal,
    /// Coefficients `P⁻¹ [(LX, φ_i)]`, so `P F` is the Galerkin load. `LX`
    /// behaves like `x^{3-α}` at the walls and its nodal interpolant costs
    /// spatial order for small `α`.
    #[default]
    Projected,
}

impl LoadRule {
    fn tag(self) -> &'static str {
        match self {
            LoadRule::Nodal => "nodal",
            LoadRule::Projected => "projected",
        }
    }
}

fn projected_lx(profile: &ScalarField, p: &TemperedParams, mesh: &Mesh1D, q: &QuadratureRule) -> Result<Vec<f64>> {
    let gl = cached_legendre(q.legendre_nodes)?;
    let h = mesh.h();
    let n = mesh.n_elements();
    let points: Vec<f64> = (0..n)
        .flat_map(|e| {
            let mid = (e as f64 + 0.5) * h;
            gl.nodes.iter().map(move |t| mid + 0.5 * h * t)
        })
        .collect();
    let values = apply_riesz_tempered_many(profile, p, &points, q)?;
    let mut load = DVector::zeros(mesh.dofs());
    for e in 0..n {
        let lo = e as f64 * h;
        for (k, w) in gl.weights.iter().enumerate() {
            let s = points[e * gl.nodes.len() + k];
            let fw = 0.5 * h * w * values[e * gl.nodes.len() + k];
            let right = (s - lo) / h;
            if e >= 1 {
                load[e - 1] += fw * (1.0 - right);
            }
            if e + 1 < n {
                load[e] += fw * right;
            }
        }
    }
    let coeffs = assemble_mass(mesh)
        .lu()
        .solve(&load)
        .ok_or(Error::SingularMatrix("mass matrix"))?;
    Ok(coeffs.iter().copied().collect())
}

/// Source of `U' + BU = F` built from a separable manufactured solution.
#[derive(Debug, Clone)]
pub struct ManufacturedSource {
    /// `X(x_i)`
    pub profile: Vec<f64>,
    /// `(LX)(x_i)`, or its projection coefficients
    pub lx: Vec<f64>,
    pub reaction: Option<Reaction>,
}

impl NodalSource for ManufacturedSource {
    fn eval(&self, t: f64, u: &DVector<f64>) -> DVector<f64> {
        let decay = (-t).exp();
        DVector::from_iterator(
            u.len(),
            (0..u.len()).map(|i| {
                let x = self.profile[i];
                let forcing = decay * (-x - self.lx[i]);
                match self.reaction {
                    Some(r) => (r.n)(u[i]) + forcing - (r.n)(x * decay),
                    None => forcing,
                }
            }),
        )
    }

    fn jacobian_diag(&self, _t: f64, u: &DVector<f64>) -> Option<DVector<f64>> {
        self.reaction.map(|r| u.map(r.dn))
    }
}

const LX_HEADER: &str = "# etdfem-lx v1";

fn lx_cache_path(dir: &Path, tag: &str, mesh: &Mesh1D, p: &TemperedParams, rule: LoadRule) -> PathBuf {
    dir.join(format!(
        "lx_{tag}_{}_n{}_a{}_l{}.txt",
        rule.tag(),
        mesh.n_elements(),
        p.alpha(),
        p.lambda()
    ))
}

fn lx_header(mesh: &Mesh1D, p: &TemperedParams, q: &QuadratureRule, rule: LoadRule) -> String {
    format!(
        "{LX_HEADER} rule={} N={} alpha={:e} lambda={:e} tol={:e} legendre={} jacobi={}",
        rule.tag(),
        mesh.n_elements(),
        p.alpha(),
        p.lambda(),
        q.oracle_tol,
        q.legendre_nodes,
        q.jacobi_nodes
    )
}

/// Reads cached `LX` values; `None` when the file is missing or was written
/// for different parameters.
pub fn read_lx_cache(
    path: &Path,
    mesh: &Mesh1D,
    p: &TemperedParams,
    q: &QuadratureRule,
    rule: LoadRule,
) -> Result<Option<Vec<f64>>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut lines = text.lines();
    if lines.next() != Some(lx_header(mesh, p, q, rule).as_str()) {
        return Ok(None);
    }
    let values: std::result::Result<Vec<f64>, _> = lines.filter(|l| !l.trim().is_empty()).map(str::parse).collect();
    match values {
        Ok(v) if v.len() == mesh.dofs() => Ok(Some(v)),
        _ => Ok(None),
    }
}

pub fn write_lx_cache(
    path: &Path,
    mesh: &Mesh1D,
    p: &TemperedParams,
    q: &QuadratureRule,
    rule: LoadRule,
    values: &[f64],
) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = lx_header(mesh, p, q, rule);
    out.push('\n');
    for v in values {
        let _ = writeln!(out, "{v:e}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Literal transcription of the printed closed-form source of Example 1,
/// `g_1 … g_9` with the undefined `g_4` omitted. Kept for cross-checking
/// only.
pub fn example1_paper_source(p: &TemperedParams, x: f64, t: f64) -> Result<f64> {
    let a = p.alpha();
    let l = p.lambda();
    if !(l > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!("x must lie in (0, 1), got {x}")));
    }
    let gl = |z: f64| lower_incomplete_gamma(z, x * l);
    let gr = |z: f64| lower_incomplete_gamma(z, l - x * l);
    let (x2, x3, x4, x5, x6) = (x * x, x.powi(3), x.powi(4), x.powi(5), x.powi(6));
    let l2 = l * l;
    let l3 = l2 * l;
    let l4 = l3 * l;
    let l5 = l4 * l;
    let q = 5.0 * (x - 1.0) * x + 1.0;

    let g1 = 3.0 * l5 * (x - 1.0).powi(2) * x2 * (2.0 * x - 1.0) * gl(1.0 - a)?;
    let g2 = -l5 * x6 * gl(-a)? + 3.0 * l5 * x5 * gl(-a)? - 3.0 * l5 * x4 * gl(-a)? - 15.0 * l3 * x4 * gr(2.0 - a)?
        + l5 * x3 * gl(-a)?
        - l5 * (x - 1.0).powi(3) * x3 * gr(-a)?
        + 30.0 * l3 * x3 * gr(2.0 - a)?;
    let g3 = 20.0 * l2 * x3 * gl(3.0 - a)? - 20.0 * l2 * x3 * gr(3.0 - a)? - 30.0 * l2 * x2 * gl(3.0 - a)?
        - 3.0 * l4 * (x - 1.0).powi(2) * (2.0 * x - 1.0) * x2 * gr(1.0 - a)?
        - 18.0 * l3 * x2 * gr(2.0 - a)?
        + 30.0 * l2 * x2 * gr(3.0 - a)?;
    let g5 = -15.0 * l * x2 * gl(4.0 - a)? - 3.0 * l3 * (x - 1.0) * q * x * gl(2.0 - a)? - 15.0 * l * x2 * gr(4.0 - a)?;
    let g6 = 3.0 * l3 * x * gr(2.0 - a)? + 12.0 * l2 * x * gl(3.0 - a)? - 12.0 * l2 * x * gr(3.0 - a)? - l2 * gl(3.0 - a)?
        + l2 * gr(3.0 - a)?
        + 15.0 * l * x * gl(4.0 - a)?
        + 15.0 * l * x * gr(4.0 - a)?;
    let g7 = 6.0 * x * gl(5.0 - a)? - 6.0 * x * gr(5.0 - a)? - 3.0 * l * gl(4.0 - a)? - 3.0 * l * gr(4.0 - a)? - 3.0 * gl(5.0 - a)?
        + 3.0 * gr(5.0 - a)?;
    let g8 = 2.0
        * gamma_fn(2.0 - a)?
        * (a.powi(4) - 14.0 * a.powi(3) + 71.0 * a * a - 154.0 * a
            + 3.0 * (a - 3.0) * (a - 2.0) * l2 * q
            + 3.0 * l4 * (x - 1.0) * x * q
            + 120.0);
    let g9 = -gl(6.0 - a)? - gr(6.0 - a)?;

    let decay = (-t).exp();
    let lead = 2.0 * l.powf(6.0 - a) * (0.5 * PI * a).cos() * gamma_fn(-a)? * decay * x3 * (1.0 - x).powi(3);
    Ok(lead + decay * (g1 + l * (g2 + g3 + g5 + g6 + g7) + g8 + g9))
}

/// How to read the printed series of Example 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesReading {
    /// As printed: `Γ(m+1-α)` denominators, `x^{k+m}` in `H`, and the
    /// prefactor `e^{-λ(x+1)}` on `H̄`.
    Literal,
    /// `Γ(k+m+1-α)` denominators, `x^{k+m-α}` and `(1-x)^{k+m-α}`, and the
    /// prefactor `e^{-λ(1-x)}` on `H̄`.
    Corrected,
}

const A_COEFFS: [(i32, f64); 3] = [(2, 1.0), (3, -2.0), (4, 1.0)];

/// `Σ_k Σ_m λ^k Γ(k+m+1) A_m / (k! Γ(·)) y^{k+m-shift}`.
fn h_series(lambda: f64, alpha: f64, y: f64, reading: SeriesReading, left: bool, tol: f64) -> Result<f64> {
    const MAX_TERMS: usize = 10_000;
    let mut total = 0.0;
    for (m, am) in A_COEFFS {
        let m = m as f64;
        let mut converged = false;
        for k in 0..MAX_TERMS {
            let kf = k as f64;
            let ln_ratio = crate::specfun::ln_gamma(kf + m + 1.0)? - crate::specfun::ln_gamma(kf + 1.0)?;
            let denom = match reading {
                SeriesReading::Literal => gamma_fn(m + 1.0 - alpha)?,
                SeriesReading::Corrected => gamma_fn(kf + m + 1.0 - alpha)?,
            };
            let expo = match (reading, left) {
                (SeriesReading::Literal, true) => kf + m,
                _ => kf + m - alpha,
            };
            let lam_k = if k == 0 { 1.0 } else { lambda.powi(k as i32) };
            let term = am * lam_k * ln_ratio.exp() / denom * y.powf(expo);
            total += term;
            if (k > 2 && term.abs() < tol) || lambda == 0.0 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                what: "Example 2 H-series",
                iterations: MAX_TERMS,
            });
        }
    }
    Ok(total)
}

/// Example 2 source assembled from the printed series under `reading`.
pub fn example2_paper_source(p: &TemperedParams, x: f64, t: f64, u: f64, reading: SeriesReading, tol: f64) -> Result<f64> {
    let a = p.alpha();
    let l = p.lambda();
    let xx = x * x * (1.0 - x) * (1.0 - x);
    let h = h_series(l, a, x, reading, true, tol)?;
    let hbar = h_series(l, a, 1.0 - x, reading, false, tol)?;
    let right_prefactor = match reading {
        SeriesReading::Literal => (-l * (x + 1.0)).exp(),
        SeriesReading::Corrected => (-l * (1.0 - x)).exp(),
    };
    let decay = (-t).exp();
    let bracket = (-l * x).exp() * h + right_prefactor * hbar - 2.0 * l.powf(a) * xx;
    Ok(u * u - xx * decay - xx * xx * decay * decay + decay / (2.0 * (0.5 * a * PI).cos()) * bracket)
}
