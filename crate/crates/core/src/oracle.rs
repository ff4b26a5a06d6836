//! Reference evaluators built on globally adaptive Gauss–Kronrod quadrature.
//!
//! These share no quadrature with the production paths: kernel endpoint
//! singularities `r^β` are removed by the substitution `w = r^{1+β}` and
//! the remaining smooth integrals are bisected to an absolute tolerance.
//! They are slow and meant for validation and fixture generation only.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::quadrature::adaptive_integrate;
use crate::specfun::gamma_fn;
use crate::tfrac::{tempered_combo, Side, TemperedParams};

/// `∫_a^c (x-s)^β e^{-λ(x-s)} g(s) ds` for `a < c ≤ x`.
fn kernel(x: f64, beta: f64, lambda: f64, a: f64, c: f64, g: &dyn Fn(f64) -> f64, tol: f64) -> Result<f64> {
    let r0 = x - c;
    let r1 = x - a;
    if r1 <= r0 {
        return Ok(0.0);
    }
    if beta < 0.0 {
        let e = 1.0 + beta;
        let p = 1.0 / e;
        let v = adaptive_integrate(
            |w| {
                let r = w.powf(p);
                (-lambda * r).exp() * g(x - r)
            },
            r0.powf(e),
            r1.powf(e),
            tol * e,
        )?;
        Ok(v / e)
    } else {
        adaptive_integrate(|r| r.powf(beta) * (-lambda * r).exp() * g(x - r), r0, r1, tol)
    }
}

fn oriented(f: &ScalarField, side: Side, x: f64) -> (ScalarField, f64) {
    match side {
        Side::Left => (f.clone(), x),
        Side::Right => (f.mirrored(), 1.0 - x),
    }
}

fn piecewise_kernel(f: &ScalarField, x: f64, beta: f64, lambda: f64, k: usize, tol: f64) -> Result<f64> {
    let count = f.pieces().len().max(1) as f64;
    let mut total = 0.0;
    for piece in f.pieces() {
        if piece.lo >= x {
            break;
        }
        let g = |s: f64| tempered_combo(piece, lambda, k, s);
        total += kernel(x, beta, lambda, piece.lo, piece.hi.min(x), &g, tol / count)?;
    }
    Ok(total)
}

/// Tempered integral of positive `order`.
pub fn tempered_integral(f: &ScalarField, order: f64, lambda: f64, side: Side, x: f64, tol: f64) -> Result<f64> {
    let (f, x) = oriented(f, side, x);
    if x <= 0.0 {
        return Ok(0.0);
    }
    let g = gamma_fn(order)?;
    Ok(piecewise_kernel(&f, x, order - 1.0, lambda, 0, tol * g)? / g)
}

/// Tempered derivative of positive non-integer `order`.
pub fn tempered_derivative(f: &ScalarField, order: f64, lambda: f64, side: Side, x: f64, tol: f64) -> Result<f64> {
    if order.fract() == 0.0 {
        return Err(Error::InvalidParameter("oracle handles non-integer orders only".into()));
    }
    let (f, x) = oriented(f, side, x);
    if x <= 0.0 {
        return Ok(0.0);
    }
    let n = order.ceil() as usize;
    let mut total = 0.0;
    for k in 0..n {
        let scale = 1.0 / gamma_fn(k as f64 + 1.0 - order)?;
        for (b, jump) in f.jumps(|p, s| tempered_combo(p, lambda, k, s)) {
            if b < x && jump != 0.0 {
                let r = x - b;
                total += scale * jump * (-lambda * r).exp() * r.powf(k as f64 - order);
            }
        }
    }
    let g = gamma_fn(n as f64 - order)?;
    total += piecewise_kernel(&f, x, n as f64 - 1.0 - order, lambda, n, tol * g)? / g;
    Ok(total)
}

/// Riesz-tempered operator `C_α [D_+ f + D_- f - 2λ^α f](x)`.
pub fn riesz(f: &ScalarField, p: &TemperedParams, x: f64, tol: f64) -> Result<f64> {
    let tol = tol / (2.0 * p.c_alpha().abs().max(1.0));
    let left = tempered_derivative(f, p.alpha(), p.lambda(), Side::Left, x, tol)?;
    let right = tempered_derivative(f, p.alpha(), p.lambda(), Side::Right, x, tol)?;
    Ok(p.c_alpha() * (left + right - 2.0 * p.lambda().powf(p.alpha()) * f.value(x)))
}

/// Stiffness entry `g_ij` on the uniform mesh with `n_elements` elements,
/// interior node indices `1 ≤ i, j ≤ n_elements - 1`, by adaptive outer
/// quadrature of adaptive pointwise derivatives.
pub fn stiffness_entry(n_elements: usize, p: &TemperedParams, i: usize, j: usize, tol: f64) -> Result<f64> {
    if n_elements < 2 || i == 0 || j == 0 || i >= n_elements || j >= n_elements {
        return Err(Error::InvalidParameter(format!(
            "entry ({i}, {j}) outside the interior of a {n_elements}-element mesh"
        )));
    }
    let h = 1.0 / n_elements as f64;
    let phi_i = ScalarField::hat(i as f64 * h, h)?;
    let phi_j = ScalarField::hat(j as f64 * h, h)?;
    let (mu, lam) = (p.mu(), p.lambda());
    let inner_tol = 1e-3 * tol;
    let cross = |u: &ScalarField, v: &ScalarField| -> Result<f64> {
        let mut total = 0.0;
        for e in 0..n_elements {
            let (lo, hi) = (e as f64 * h, (e + 1) as f64 * h);
            let mut failure = None;
            let value = adaptive_integrate(
                |x| {
                    let a = tempered_derivative(u, mu, lam, Side::Left, x, inner_tol);
                    let b = tempered_derivative(v, mu, lam, Side::Right, x, inner_tol);
                    match (a, b) {
                        (Ok(a), Ok(b)) => a * b,
                        (Err(e), _) | (_, Err(e)) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                lo,
                hi,
                tol / (4.0 * n_elements as f64),
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            total += value;
        }
        Ok(total)
    };
    let mass = match i.abs_diff(j) {
        0 => 2.0 * h / 3.0,
        1 => h / 6.0,
        _ => 0.0,
    };
    let c = p.c_alpha();
    Ok(-c * cross(&phi_j, &phi_i)? - c * cross(&phi_i, &phi_j)? + 2.0 * c * lam.powf(p.alpha()) * mass)
}
