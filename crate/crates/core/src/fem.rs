//! Uniform meshes, the hat basis, and Galerkin assembly of the mass and
//! tempered-fractional stiffness matrices.
//!
//! On a uniform mesh the left derivative of `φ_j` is a translate of
//! `Ψ(y) = D^{μ,λ}_+ φ_1(y)` and the right derivative of `φ_i` a reflected
//! translate, so every cross term reduces to
//! `T(k) = ∫_0^{kh} Ψ(y) Ψ(kh - y) dy` and
//! `g_ij = -C_α [T(i-j+2) + T(j-i+2)] + 2 C_α λ^α p_ij`.
//! `Ψ` is tabulated once on a graded composite rule that is symmetric on
//! each element, which turns `T` into a discrete correlation.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::quadrature::cached_legendre;
use crate::tfrac::{left_derivative, tempered_derivative, QuadratureRule, Side, TemperedParams};

/// Uniform partition of `[0, 1]` into `n_elements` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mesh1D {
    n_elements: usize,
}

impl Mesh1D {
    pub fn new(n_elements: usize) -> Result<Self> {
        if n_elements < 2 {
            return Err(Error::InvalidParameter(format!(
                "mesh needs at least 2 elements, got {n_elements}"
            )));
        }
        Ok(Self { n_elements })
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_elements as f64
    }

    /// Number of interior nodes (unknowns).
    pub fn dofs(&self) -> usize {
        self.n_elements - 1
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n_elements as f64
    }

    /// Interior node coordinates `x_1 … x_{N-1}`.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.n_elements).map(|i| self.node(i)).collect()
    }

    /// Hat function of interior node `i`.
    pub fn hat(&self, i: usize) -> Result<ScalarField> {
        if i == 0 || i >= self.n_elements {
            return Err(Error::InvalidParameter(format!("node {i} is not interior")));
        }
        ScalarField::hat(self.node(i), self.h())
    }

    /// Nodal interpolant of `f` at the interior nodes.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.dofs(), self.interior_nodes().into_iter().map(f))
    }
}

pub fn assemble_mass(mesh: &Mesh1D) -> DMatrix<f64> {
    let n = mesh.dofs();
    let h = mesh.h();
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 * h / 3.0,
        1 => h / 6.0,
        _ => 0.0,
    })
}

/// Composite rule on `[0, 1]` graded geometrically towards both ends, with
/// nodes symmetric about `1/2`: node `q` mirrors node `len - 1 - q`.
#[derive(Debug, Clone)]
pub struct GradedRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GradedRule {
    pub fn new(q: &QuadratureRule) -> Result<Self> {
        q.validate()?;
        let leg = cached_legendre(q.legendre_nodes)?;
        // panel edges on [0, 1/2]
        let mut edges = vec![0.0];
        for l in (0..q.grading_levels).rev() {
            edges.push(0.5 * q.grading_ratio.powi(l as i32 + 1));
        }
        edges.push(0.5);
        let mut half_nodes = Vec::new();
        let mut half_weights = Vec::new();
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let rad = 0.5 * (hi - lo);
            for (t, wt) in leg.nodes.iter().zip(&leg.weights) {
                half_nodes.push(mid + rad * t);
                half_weights.push(rad * wt);
            }
        }
        let mut nodes = half_nodes.clone();
        let mut weights = half_weights.clone();
        for (t, w) in half_nodes.iter().zip(&half_weights).rev() {
            nodes.push(1.0 - t);
            weights.push(*w);
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Values of `Ψ` on every element `m < elements` at the graded nodes.
fn tabulate_psi(mesh: &Mesh1D, p: &TemperedParams, q: &QuadratureRule, rule: &GradedRule, elements: usize) -> Result<Vec<Vec<f64>>> {
    let h = mesh.h();
    let phi1 = ScalarField::hat(h, h)?;
    (0..elements)
        .into_par_iter()
        .map(|m| {
            rule.nodes
                .iter()
                .map(|t| left_derivative(&phi1, p.lambda(), p.mu(), 1, (m as f64 + t) * h, q))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

/// The correlation sums `T(k)` for `k = 1..=n_elements`, index `k - 1`.
pub fn cross_correlations(mesh: &Mesh1D, p: &TemperedParams, q: &QuadratureRule) -> Result<Vec<f64>> {
    let rule = GradedRule::new(q)?;
    let n = mesh.n_elements();
    let psi = tabulate_psi(mesh, p, q, &rule, n)?;
    let h = mesh.h();
    let len = rule.len();
    Ok((1..=n)
        .into_par_iter()
        .map(|k| {
            let mut sum = 0.0;
            for m in 0..k {
                let a = &psi[m];
                let b = &psi[k - 1 - m];
                for qi in 0..len {
                    sum += rule.weights[qi] * a[qi] * b[len - 1 - qi];
                }
            }
            h * sum
        })
        .collect())
}

/// Tempered-fractional stiffness matrix on the interior nodes.
pub fn assemble_stiffness(mesh: &Mesh1D, p: &TemperedParams, q: &QuadratureRule) -> Result<DMatrix<f64>> {
    let t = cross_correlations(mesh, p, q)?;
    let n = mesh.dofs();
    let h = mesh.h();
    let c = p.c_alpha();
    let reaction = 2.0 * c * p.lambda().powf(p.alpha());
    let corr = |k: isize| if k >= 1 { t[(k - 1) as usize] } else { 0.0 };
    let g = DMatrix::from_fn(n, n, |i, j| {
        let d = i as isize - j as isize;
        let mass = match d.unsigned_abs() {
            0 => 2.0 * h / 3.0,
            1 => h / 6.0,
            _ => 0.0,
        };
        -c * (corr(d + 2) + corr(2 - d)) + reaction * mass
    });
    check_symmetry(&g)?;
    Ok(g)
}

fn check_symmetry(g: &DMatrix<f64>) -> Result<()> {
    let scale = g.amax();
    let asym = (g - g.transpose()).amax();
    if asym > 1e-6 * scale {
        return Err(Error::Asymmetric { asymmetry: asym, scale });
    }
    Ok(())
}

/// One stiffness entry (1-based interior indices) by direct outer
/// quadrature of pointwise derivatives of the two hat functions.
pub fn stiffness_entry(mesh: &Mesh1D, p: &TemperedParams, i: usize, j: usize, q: &QuadratureRule) -> Result<f64> {
    let phi_i = mesh.hat(i)?;
    let phi_j = mesh.hat(j)?;
    let rule = GradedRule::new(q)?;
    let h = mesh.h();
    let mu = p.mu();
    let mut cross = 0.0;
    for e in 0..mesh.n_elements() {
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = (e as f64 + t) * h;
            let a = tempered_derivative(&phi_j, p, Side::Left, mu, x, q)? * tempered_derivative(&phi_i, p, Side::Right, mu, x, q)?;
            let b = tempered_derivative(&phi_j, p, Side::Right, mu, x, q)? * tempered_derivative(&phi_i, p, Side::Left, mu, x, q)?;
            cross += w * h * (a + b);
        }
    }
    let mass = match i.abs_diff(j) {
        0 => 2.0 * h / 3.0,
        1 => h / 6.0,
        _ => 0.0,
    };
    let c = p.c_alpha();
    Ok(-c * cross + 2.0 * c * p.lambda().powf(p.alpha()) * mass)
}

/// Right-hand side of `U' + BU = F(t, U)` at the interior nodes.
pub trait NodalSource: Send + Sync {
    fn eval(&self, t: f64, u: &DVector<f64>) -> DVector<f64>;

    /// Diagonal of `∂F/∂U`, or `None` when `F` does not depend on `U`.
    fn jacobian_diag(&self, t: f64, u: &DVector<f64>) -> Option<DVector<f64>>;
}

/// `F ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroSource {
    pub dofs: usize,
}

impl NodalSource for ZeroSource {
    fn eval(&self, _t: f64, _u: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.dofs)
    }

    fn jacobian_diag(&self, _t: f64, _u: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }
}

type PointFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// Nodal collocation `F_i = f(x_i, t, U_i)` of a pointwise source.
pub struct PointwiseSource {
    nodes: Vec<f64>,
    f: Box<PointFn>,
    dfdu: Option<Box<PointFn>>,
}

impl PointwiseSource {
    pub fn new(
        mesh: &Mesh1D,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        dfdu: Option<Box<PointFn>>,
    ) -> Self {
        Self {
            nodes: mesh.interior_nodes(),
            f: Box::new(f),
            dfdu,
        }
    }
}

impl NodalSource for PointwiseSource {
    fn eval(&self, t: f64, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(u.len(), self.nodes.iter().zip(u.iter()).map(|(x, v)| (self.f)(*x, t, *v)))
    }

    fn jacobian_diag(&self, t: f64, u: &DVector<f64>) -> Option<DVector<f64>> {
        self.dfdu
            .as_ref()
            .map(|d| DVector::from_iterator(u.len(), self.nodes.iter().zip(u.iter()).map(|(x, v)| d(*x, t, *v))))
    }
}

/// `P U' + G U = P F`, stored with `B = P⁻¹G`.
#[derive(Clone)]
pub struct SemiDiscreteSystem {
    pub mesh: Mesh1D,
    pub params: TemperedParams,
    pub p: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub source: Arc<dyn NodalSource>,
}

impl std::fmt::Debug for SemiDiscreteSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SemiDiscreteSystem")
            .field("mesh", &self.mesh)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

impl SemiDiscreteSystem {
    pub fn assemble(mesh: &Mesh1D, p: &TemperedParams, q: &QuadratureRule, source: Arc<dyn NodalSource>) -> Result<Self> {
        let g = assemble_stiffness(mesh, p, q)?;
        Self::from_stiffness(mesh, p, g, source)
    }

    /// Builds the system around an already assembled stiffness matrix, so
    /// several sources can share one assembly.
    pub fn from_stiffness(mesh: &Mesh1D, p: &TemperedParams, g: DMatrix<f64>, source: Arc<dyn NodalSource>) -> Result<Self> {
        let mass = assemble_mass(mesh);
        let b = mass
            .clone()
            .lu()
            .solve(&g)
            .ok_or(Error::SingularMatrix("mass matrix"))?;
        Ok(Self {
            mesh: *mesh,
            params: *p,
            p: mass,
            g,
            b,
            source,
        })
    }

    pub fn dofs(&self) -> usize {
        self.mesh.dofs()
    }

    pub fn with_source(&self, source: Arc<dyn NodalSource>) -> Self {
        Self {
            source,
            ..self.clone()
        }
    }

    /// Eigenvalues of `B`, which are real since `B` is similar to the
    /// symmetric `L⁻¹ G L⁻ᵀ` with `P = L Lᵀ`.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let chol = Cholesky::new(self.p.clone()).ok_or(Error::SingularMatrix("mass matrix"))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix("mass factor"))?;
        let s = &linv * &self.g * linv.transpose();
        let s = (&s + s.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Writes `P`, `G` and `B` as `<prefix>_P.csv` etc. in `dir`.
    pub fn dump_matrices(&self, dir: &Path, prefix: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, m) in [("P", &self.p), ("G", &self.g), ("B", &self.b)] {
            std::fs::write(dir.join(format!("{prefix}_{name}.csv")), matrix_csv(m))?;
        }
        Ok(())
    }
}

/// Row-major CSV with round-trip precision.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:e}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}
