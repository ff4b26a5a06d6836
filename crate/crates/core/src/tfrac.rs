//! Tempered Riemann–Liouville integrals and derivatives of fields on `[0, 1]`,
//! the Riesz-tempered operator, and numerical identity checks.
//!
//! Derivatives are evaluated in Caputo form. For a piecewise smooth field
//! with zero extension, writing `c_k = e^{-λs} (e^{λs} f)^{(k)}` and
//! `n = ⌈ν⌉`,
//!
//! ```text
//! D^{ν,λ}_+ f(x) = Σ_b Σ_{k<n} [c_k]_b e^{-λ(x-b)} (x-b)^{k-ν} / Γ(k+1-ν)
//!                + 1/Γ(n-ν) ∫_0^x (x-s)^{n-1-ν} e^{-λ(x-s)} c_n(s) ds
//! ```
//!
//! where `[c_k]_b` is the jump of `c_k` at breakpoint `b < x`. The kernel
//! integral is split at the breakpoints; the panel touching `x` uses a
//! Gauss–Jacobi rule carrying `(x-s)^β` and the rest is covered by
//! Gauss–Legendre panels whose width grows geometrically with the distance
//! from `x`.

use std::f64::consts::PI;

use nalgebra::Complex;

type Complex64 = Complex<f64>;

use crate::error::{Error, Result};
use crate::field::{Piece, ScalarField};
use crate::quadrature::{cached_jacobi, cached_legendre, GaussRule};
use crate::specfun::gamma_fn;

/// Order, tempering rate and Riesz scaling of the operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperedParams {
    alpha: f64,
    lambda: f64,
    c_alpha: f64,
    mu: f64,
}

impl TemperedParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (1, 2), got {alpha}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        Ok(Self {
            alpha,
            lambda,
            c_alpha: -1.0 / (2.0 * (0.5 * PI * alpha).cos()),
            mu: 0.5 * alpha,
        })
    }

    /// Copy with the Riesz constant negated. Only useful as a negative
    /// control in validation runs.
    pub fn with_flipped_sign(mut self) -> Self {
        self.c_alpha = -self.c_alpha;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Node counts for the fixed-order rules and the tolerance of the adaptive
/// reference integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureRule {
    /// Gauss–Legendre nodes per panel.
    pub legendre_nodes: usize,
    /// Gauss–Jacobi nodes on the panel carrying the kernel singularity.
    pub jacobi_nodes: usize,
    /// Number of geometric levels towards each end of a graded element
    /// (used by the stiffness assembly).
    pub grading_levels: usize,
    /// Ratio between successive graded panels, in `(0, 1)`.
    pub grading_ratio: f64,
    pub oracle_tol: f64,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            legendre_nodes: 12,
            jacobi_nodes: 24,
            grading_levels: 10,
            grading_ratio: 0.25,
            oracle_tol: 1e-10,
        }
    }
}

impl QuadratureRule {
    pub fn validate(&self) -> Result<()> {
        if self.legendre_nodes < 4 || self.jacobi_nodes < 4 {
            return Err(Error::InvalidParameter(format!(
                "quadrature node counts must be at least 4, got {} / {}",
                self.legendre_nodes, self.jacobi_nodes
            )));
        }
        if !(self.grading_ratio > 0.0 && self.grading_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grading ratio must lie in (0, 1), got {}",
                self.grading_ratio
            )));
        }
        if !(self.oracle_tol > 0.0) {
            return Err(Error::InvalidParameter("oracle tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// `Σ_j C(k,j) λ^{k-j} f^{(j)}(s)`, i.e. `e^{-λs} (e^{λs} f)^{(k)}`.
pub(crate) fn tempered_combo(piece: &Piece, lambda: f64, k: usize, s: f64) -> f64 {
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 0..=k {
        let lam_pow = if k == j { 1.0 } else { lambda.powi((k - j) as i32) };
        acc += binom * lam_pow * piece.eval(s, j);
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Widest panel allowed before the exponential factor needs resolving.
fn panel_cap(lambda: f64) -> f64 {
    if lambda > 0.0 {
        (6.0 / lambda).min(0.5)
    } else {
        0.5
    }
}

/// `∫_a^c (x-s)^β e^{-λ(x-s)} g(s) ds` for `a < c ≤ x`.
pub(crate) fn kernel_panel(
    x: f64,
    beta: f64,
    lambda: f64,
    a: f64,
    c: f64,
    g: &dyn Fn(f64) -> f64,
    leg: &GaussRule,
    jac: Option<&GaussRule>,
) -> f64 {
    if c <= a {
        return 0.0;
    }
    let cap = panel_cap(lambda);
    let far = x - a;
    let mut sum = 0.0;
    let mut near = x - c;
    if near <= 0.0 {
        let len = far.min(cap);
        let jac = jac.expect("Jacobi rule required when the panel touches x");
        let half = 0.5 * len;
        let mut s = 0.0;
        for (t, w) in jac.nodes.iter().zip(&jac.weights) {
            let r = half * (1.0 - t);
            s += w * (-lambda * r).exp() * g(x - r);
        }
        sum += s * half.powf(beta + 1.0);
        near = len;
    }
    while near < far {
        let next = (2.0 * near).min(near + cap).min(far);
        let lo = x - next;
        let hi = x - near;
        sum += leg.integrate(lo, hi, |s| {
            let r = x - s;
            r.powf(beta) * (-lambda * r).exp() * g(s)
        });
        near = next;
    }
    sum
}

/// Reflected evaluation point and field for the requested side.
fn oriented(f: &ScalarField, side: Side, x: f64) -> (std::borrow::Cow<'_, ScalarField>, f64) {
    match side {
        Side::Left => (std::borrow::Cow::Borrowed(f), x),
        Side::Right => (std::borrow::Cow::Owned(f.mirrored()), 1.0 - x),
    }
}

fn check_point(x: f64) -> Result<()> {
    if !(-1e-14..=1.0 + 1e-14).contains(&x) {
        return Err(Error::InvalidParameter(format!("evaluation point {x} outside [0, 1]")));
    }
    Ok(())
}

/// Left kernel integral of `c_k` over all pieces, split at breakpoints.
fn left_kernel(f: &ScalarField, x: f64, beta: f64, lambda: f64, k: usize, q: &QuadratureRule) -> Result<f64> {
    let leg = cached_legendre(q.legendre_nodes)?;
    let jac = cached_jacobi(q.jacobi_nodes, beta, 0.0)?;
    let mut total = 0.0;
    for piece in f.pieces() {
        if piece.lo >= x {
            break;
        }
        let c = piece.hi.min(x);
        let g = |s: f64| tempered_combo(piece, lambda, k, s);
        total += kernel_panel(x, beta, lambda, piece.lo, c, &g, &leg, Some(&jac));
    }
    Ok(total)
}

/// Tempered integral of arbitrary positive order.
pub fn tempered_integral_order(
    f: &ScalarField,
    order: f64,
    lambda: f64,
    side: Side,
    x: f64,
    q: &QuadratureRule,
) -> Result<f64> {
    if !(order > 0.0) {
        return Err(Error::InvalidParameter(format!("integral order must be positive, got {order}")));
    }
    check_point(x)?;
    let (f, x) = oriented(f, side, x);
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(left_kernel(&f, x, order - 1.0, lambda, 0, q)? / gamma_fn(order)?)
}

/// Tempered integral of order `p.alpha()`.
pub fn tempered_integral(f: &ScalarField, p: &TemperedParams, side: Side, x: f64, q: &QuadratureRule) -> Result<f64> {
    tempered_integral_order(f, p.alpha, p.lambda, side, x, q)
}

/// Tempered derivative of any positive order, rate `p.lambda()`.
pub fn tempered_derivative(
    f: &ScalarField,
    p: &TemperedParams,
    side: Side,
    order: f64,
    x: f64,
    q: &QuadratureRule,
) -> Result<f64> {
    tempered_derivative_rate(f, p.lambda, side, order, x, q)
}

pub fn tempered_derivative_rate(
    f: &ScalarField,
    lambda: f64,
    side: Side,
    order: f64,
    x: f64,
    q: &QuadratureRule,
) -> Result<f64> {
    if !(order > 0.0) {
        return Err(Error::InvalidParameter(format!("derivative order must be positive, got {order}")));
    }
    check_point(x)?;
    let (f, x) = oriented(f, side, x);
    let x = x.clamp(0.0, 1.0);
    let boundary = f.value(0.0);
    if boundary.abs() > 1e-14 {
        return Err(Error::Precondition(format!(
            "field must vanish at the {} boundary, found {boundary:e}",
            match side {
                Side::Left => "left",
                Side::Right => "right",
            }
        )));
    }
    let n = order.ceil() as usize;
    if f.max_derivative() < n {
        return Err(Error::InvalidParameter(format!(
            "field provides {} derivatives, order {order} needs {n}",
            f.max_derivative()
        )));
    }
    left_derivative(&f, lambda, order, n, x, q)
}

pub(crate) fn left_derivative(f: &ScalarField, lambda: f64, order: f64, n: usize, x: f64, q: &QuadratureRule) -> Result<f64> {
    if order == n as f64 {
        // integer order: local operator, right-continuous at breakpoints
        return Ok(f
            .pieces()
            .iter()
            .find(|p| x >= p.lo && (x < p.hi || (x == 1.0 && p.hi == 1.0)))
            .map_or(0.0, |p| tempered_combo(p, lambda, n, x)));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for k in 0..n {
        let expo = k as f64 - order;
        let scale = 1.0 / gamma_fn(k as f64 + 1.0 - order)?;
        for (b, jump) in f.jumps(|p, s| tempered_combo(p, lambda, k, s)) {
            if b >= x || jump == 0.0 {
                continue;
            }
            let r = x - b;
            total += scale * jump * (-lambda * r).exp() * r.powf(expo);
        }
    }
    let beta = n as f64 - 1.0 - order;
    total += left_kernel(f, x, beta, lambda, n, q)? / gamma_fn(n as f64 - order)?;
    Ok(total)
}

/// `C_α [D^{α,λ}_+ f + D^{α,λ}_- f - 2λ^α f](x)`.
pub fn apply_riesz_tempered(f: &ScalarField, p: &TemperedParams, x: f64, q: &QuadratureRule) -> Result<f64> {
    let mirrored = f.mirrored();
    apply_riesz_with_mirror(f, &mirrored, p, x, q)
}

/// [`apply_riesz_tempered`] at many points, reusing the reflected field.
pub fn apply_riesz_tempered_many(f: &ScalarField, p: &TemperedParams, xs: &[f64], q: &QuadratureRule) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    let mirrored = f.mirrored();
    xs.par_iter()
        .map(|&x| apply_riesz_with_mirror(f, &mirrored, p, x, q))
        .collect()
}

fn apply_riesz_with_mirror(
    f: &ScalarField,
    mirrored: &ScalarField,
    p: &TemperedParams,
    x: f64,
    q: &QuadratureRule,
) -> Result<f64> {
    check_point(x)?;
    let x = x.clamp(0.0, 1.0);
    for (g, side) in [(f, "left"), (mirrored, "right")] {
        if g.value(0.0).abs() > 1e-14 {
            return Err(Error::Precondition(format!("field must vanish at the {side} boundary")));
        }
    }
    if f.max_derivative() < 2 {
        return Err(Error::InvalidParameter("Riesz operator needs two field derivatives".into()));
    }
    let left = left_derivative(f, p.lambda, p.alpha, 2, x, q)?;
    let right = left_derivative(mirrored, p.lambda, p.alpha, 2, 1.0 - x, q)?;
    let local = 2.0 * p.lambda.powf(p.alpha) * f.value(x);
    Ok(p.c_alpha * (left + right - local))
}

/// Compares the numerically computed left tempered integral of order
/// `p.alpha()` of a centred Gaussian on the real line with the symbol
/// `(λ + iω)^{-α}` applied to its transform. Returns the largest absolute
/// deviation over the band where the transform is significant.
pub fn check_fourier_symbol(p: &TemperedParams, test_width: f64) -> Result<f64> {
    check_fourier_symbol_order(p.alpha, p.lambda, test_width)
}

pub fn check_fourier_symbol_order(order: f64, lambda: f64, width: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(
            "Fourier check needs lambda > 0 so the integral decays".into(),
        ));
    }
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!("test width must be positive, got {width}")));
    }
    const GRID: usize = 1 << 12;
    let gauss = move |x: f64| (-0.5 * (x / width).powi(2)).exp();
    // I f(x) ~ x^{α-1} e^{-λx} for large x
    let left = -12.0 * width;
    let mut right = 12.0 * width;
    while (order - 1.0) * right.ln() - lambda * right > -40.0 {
        right *= 1.25;
    }
    let dx = (right - left) / GRID as f64;
    let leg = cached_legendre(16)?;
    let jac = cached_jacobi(32, order - 1.0, 0.0)?;
    let inv_gamma = 1.0 / gamma_fn(order)?;

    // panels no wider than the Gaussian scale
    let panel = 0.5 * width.min(1.0 / lambda);
    let values: Vec<f64> = {
        use rayon::prelude::*;
        (0..GRID)
            .into_par_iter()
            .map(|j| {
                let x = left + j as f64 * dx;
                let lo = left.min(x - 12.0 * width);
                line_kernel(x, order - 1.0, lambda, lo, &gauss, panel, &leg, &jac) * inv_gamma
            })
            .collect()
    };

    let band = 6.0 / width;
    let samples = 200;
    let mut worst: f64 = 0.0;
    for m in 0..=samples {
        let omega = -band + 2.0 * band * m as f64 / samples as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            let x = left + j as f64 * dx;
            acc += Complex64::from_polar(*v * dx, -omega * x);
        }
        let fhat = width * (2.0 * PI).sqrt() * (-0.5 * (omega * width).powi(2)).exp();
        let symbol = Complex64::new(lambda, omega).powf(-order);
        worst = worst.max((acc - symbol * fhat).norm());
    }
    Ok(worst)
}

/// `∫_lo^x (x-s)^β e^{-λ(x-s)} g(s) ds` with panels at most `panel` wide.
#[allow(clippy::too_many_arguments)]
fn line_kernel(
    x: f64,
    beta: f64,
    lambda: f64,
    lo: f64,
    g: &dyn Fn(f64) -> f64,
    panel: f64,
    leg: &GaussRule,
    jac: &GaussRule,
) -> f64 {
    let far = x - lo;
    if far <= 0.0 {
        return 0.0;
    }
    let len = far.min(panel);
    let half = 0.5 * len;
    let mut sum = 0.0;
    for (t, w) in jac.nodes.iter().zip(&jac.weights) {
        let r = half * (1.0 - t);
        sum += w * (-lambda * r).exp() * g(x - r);
    }
    sum *= half.powf(beta + 1.0);
    let mut near = len;
    while near < far {
        let next = (2.0 * near).min(near + panel).min(far);
        sum += leg.integrate(x - next, x - near, |s| {
            let r = x - s;
            r.powf(beta) * (-lambda * r).exp() * g(s)
        });
        near = next;
    }
    sum
}

/// Deviations reported by [`check_semigroup_adjoint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityDeviations {
    /// `max |I^a I^b f - I^{a+b} f|`
    pub semigroup: f64,
    /// `|⟨I_+^a f, g⟩ - ⟨f, I_-^a g⟩|`
    pub adjoint: f64,
    /// `max |D^a I^a f - f|`
    pub inverse: f64,
}

/// Smooth bump used by the identity checks, split into pieces so the
/// kernel panels resolve it.
pub fn identity_test_field(center: f64, width: f64) -> ScalarField {
    const PIECES: usize = 20;
    let pieces = (0..PIECES)
        .map(|i| {
            let lo = i as f64 / PIECES as f64;
            let hi = (i + 1) as f64 / PIECES as f64;
            Piece::new(lo, hi, move |x, k| gaussian_derivative(x - center, width, k))
        })
        .collect();
    ScalarField::from_pieces(pieces, crate::field::Smoothness::Smooth, 8).expect("valid partition")
}

/// `d^k/dx^k exp(-x²/(2w²))` via probabilists' Hermite polynomials.
fn gaussian_derivative(x: f64, w: f64, k: usize) -> f64 {
    let z = x / w;
    let (mut h_prev, mut h) = (0.0, 1.0);
    for m in 0..k {
        let next = z * h - m as f64 * h_prev;
        h_prev = h;
        h = next;
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * h * (-0.5 * z * z).exp() / w.powi(k as i32)
}

/// Checks the semigroup, adjoint and left-inverse identities of the
/// tempered integrals of orders `a` and `b` at rate `lambda` on fixed
/// Gaussian test fields.
pub fn check_semigroup_adjoint(a: f64, b: f64, lambda: f64) -> Result<IdentityDeviations> {
    if !(a > 0.0 && b > 0.0 && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "orders must be positive and lambda non-negative, got ({a}, {b}, {lambda})"
        )));
    }
    let q = QuadratureRule::default();
    let f = identity_test_field(0.45, 0.06);
    let g = identity_test_field(0.6, 0.07);
    let probes: Vec<f64> = (1..40).map(|i| i as f64 / 40.0).collect();

    // inner integral as a field; its derivatives are integrals of f's
    let inner = integral_field(&f, b, lambda, &q);
    let mut semigroup: f64 = 0.0;
    for &x in &probes {
        let lhs = tempered_integral_order(&inner, a, lambda, Side::Left, x, &q)?;
        let rhs = tempered_integral_order(&f, a + b, lambda, Side::Left, x, &q)?;
        semigroup = semigroup.max((lhs - rhs).abs());
    }

    let leg = cached_legendre(q.legendre_nodes)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..40 {
        let lo = i as f64 / 40.0;
        let hi = lo + 1.0 / 40.0;
        for (t, w) in leg.nodes.iter().zip(&leg.weights) {
            let x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
            let wt = 0.5 * (hi - lo) * w;
            lhs += wt * tempered_integral_order(&f, a, lambda, Side::Left, x, &q)? * g.value(x);
            rhs += wt * f.value(x) * tempered_integral_order(&g, a, lambda, Side::Right, x, &q)?;
        }
    }
    let adjoint = (lhs - rhs).abs();

    let integrated = integral_field(&f, a, lambda, &q);
    let mut inverse: f64 = 0.0;
    for &x in &probes {
        let d = tempered_derivative_rate(&integrated, lambda, Side::Left, a, x, &q)?;
        inverse = inverse.max((d - f.value(x)).abs());
    }
    Ok(IdentityDeviations {
        semigroup,
        adjoint,
        inverse,
    })
}

/// The field `x ↦ I^{order,λ}_+ f(x)`; derivative `k` is `I^{order,λ}_+ f^{(k)}`,
/// valid because `f` and its derivatives vanish at the left end.
fn integral_field(f: &ScalarField, order: f64, lambda: f64, q: &QuadratureRule) -> ScalarField {
    let f = f.clone();
    let q = *q;
    let max_d = f.max_derivative().saturating_sub(1);
    let breaks = f.breakpoints();
    let pieces = breaks
        .windows(2)
        .map(|w| {
            let f = f.clone();
            Piece::new(w[0], w[1], move |x, k| {
                let fk = derivative_field(&f, k);
                tempered_integral_order(&fk, order, lambda, Side::Left, x, &q).unwrap_or(f64::NAN)
            })
        })
        .collect();
    ScalarField::from_pieces(pieces, crate::field::Smoothness::Smooth, max_d).expect("valid partition")
}

/// `f^{(k)}` as a field in its own right.
fn derivative_field(f: &ScalarField, k: usize) -> ScalarField {
    if k == 0 {
        return f.clone();
    }
    let pieces = f
        .pieces()
        .iter()
        .map(|p| {
            let p = p.clone();
            Piece::new(p.lo, p.hi, move |x, j| p.eval(x, j + k))
        })
        .collect();
    ScalarField::from_pieces(pieces, f.class(), f.max_derivative().saturating_sub(k)).expect("valid partition")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn params_validate() {
        assert!(TemperedParams::new(1.0, 1.0).is_err());
        assert!(TemperedParams::new(2.0, 1.0).is_err());
        assert!(TemperedParams::new(1.5, -0.1).is_err());
        let p = TemperedParams::new(1.6, 1.0).unwrap();
        assert!(p.c_alpha() > 0.0);
        assert_eq!(p.mu(), 0.8);
        assert_eq!(p.with_flipped_sign().c_alpha(), -p.c_alpha());
    }

    #[test]
    fn power_rule_integral() {
        let one = ScalarField::polynomial(vec![1.0]);
        let q = QuadratureRule::default();
        for x in [0.0, 0.1, 0.5, 1.0] {
            let v = tempered_integral_order(&one, 0.8, 0.0, Side::Left, x, &q).unwrap();
            assert_relative_eq!(v, x.powf(0.8) / gamma_fn(1.8).unwrap(), max_relative = 1e-13, epsilon = 1e-15);
        }
    }

    #[test]
    fn half_derivative_of_identity() {
        let f = ScalarField::polynomial(vec![0.0, 1.0]);
        let q = QuadratureRule::default();
        let v = tempered_derivative_rate(&f, 0.0, Side::Left, 0.5, 1.0, &q).unwrap();
        assert_relative_eq!(v, 2.0 / PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn nonzero_boundary_rejected() {
        let f = ScalarField::polynomial(vec![1.0, 1.0]);
        let q = QuadratureRule::default();
        let err = tempered_derivative_rate(&f, 1.0, Side::Left, 0.5, 0.5, &q);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn integer_order_is_local() {
        let f = ScalarField::bubble(2, 1);
        let q = QuadratureRule::default();
        let x = 0.3;
        let v = tempered_derivative_rate(&f, 2.0, Side::Left, 1.0, x, &q).unwrap();
        assert_relative_eq!(v, f.derivative(x, 1) + 2.0 * f.value(x), max_relative = 1e-14);
        let r = tempered_derivative_rate(&f, 2.0, Side::Right, 1.0, x, &q).unwrap();
        assert_relative_eq!(r, -f.derivative(x, 1) + 2.0 * f.value(x), max_relative = 1e-14);
    }

    #[test]
    fn gaussian_derivatives() {
        let w = 0.3;
        for x in [-0.4, 0.1, 0.7] {
            let g = |y: f64| gaussian_derivative(y, w, 0);
            let fd = (g(x + 1e-5) - g(x - 1e-5)) / 2e-5;
            assert_relative_eq!(gaussian_derivative(x, w, 1), fd, max_relative = 1e-8);
            let g1 = |y: f64| gaussian_derivative(y, w, 2);
            let fd3 = (g1(x + 1e-5) - g1(x - 1e-5)) / 2e-5;
            assert_relative_eq!(gaussian_derivative(x, w, 3), fd3, max_relative = 1e-7);
        }
    }
}
