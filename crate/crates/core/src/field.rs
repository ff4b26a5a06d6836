//! Evaluable functions on `[0, 1]`, zero-extended outside the interval.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type PieceFn = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;

/// Smoothness class of a [`ScalarField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    PiecewiseLinear,
    PiecewiseConstant,
}

/// One smooth branch of a field on `[lo, hi)`; `eval(x, k)` is the `k`-th
/// derivative of the branch at `x`.
#[derive(Clone)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    eval: PieceFn,
}

impl Piece {
    pub fn new(lo: f64, hi: f64, eval: impl Fn(f64, usize) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            lo,
            hi,
            eval: Arc::new(eval),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, k: usize) -> f64 {
        (self.eval)(x, k)
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Piece").field("lo", &self.lo).field("hi", &self.hi).finish()
    }
}

/// A real function on `[0, 1]` built from smooth pieces. Outside the pieces
/// (and outside `[0, 1]`) the field is zero.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pieces: Vec<Piece>,
    class: Smoothness,
    /// highest derivative order the pieces can evaluate
    max_derivative: usize,
}

impl ScalarField {
    pub fn from_pieces(mut pieces: Vec<Piece>, class: Smoothness, max_derivative: usize) -> Result<Self> {
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for p in &pieces {
            if !(p.lo >= 0.0 && p.hi <= 1.0 && p.lo < p.hi) {
                return Err(Error::InvalidParameter(format!(
                    "piece [{}, {}] must be a non-empty subinterval of [0, 1]",
                    p.lo, p.hi
                )));
            }
        }
        if pieces.windows(2).any(|w| w[1].lo < w[0].hi) {
            return Err(Error::InvalidParameter("field pieces overlap".into()));
        }
        Ok(Self {
            pieces,
            class,
            max_derivative,
        })
    }

    /// A smooth field on all of `[0, 1]` given by its derivatives
    /// `eval(x, k)` for `k <= max_derivative`.
    pub fn smooth(max_derivative: usize, eval: impl Fn(f64, usize) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            pieces: vec![Piece::new(0.0, 1.0, eval)],
            class: Smoothness::Smooth,
            max_derivative,
        }
    }

    /// Polynomial with coefficients in ascending powers.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let coeffs = Arc::new(coeffs);
        Self::smooth(usize::MAX, move |x, k| poly_derivative(&coeffs, x, k))
    }

    /// `x^a (1 - x)^b` expanded as a polynomial.
    pub fn bubble(a: u32, b: u32) -> Self {
        let mut coeffs = vec![0.0; (a + b + 1) as usize];
        // (1 - x)^b = Σ C(b, j) (-x)^j
        let mut binom = 1.0;
        for j in 0..=b {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[(a + j) as usize] = sign * binom;
            binom = binom * (b - j) as f64 / (j + 1) as f64;
        }
        Self::polynomial(coeffs)
    }

    /// Hat function with peak 1 at `center` and half-width `h`.
    pub fn hat(center: f64, h: f64) -> Result<Self> {
        let lo = center - h;
        let hi = center + h;
        if !(h > 0.0 && lo >= -1e-14 && hi <= 1.0 + 1e-14) {
            return Err(Error::InvalidParameter(format!(
                "hat support [{lo}, {hi}] must lie inside [0, 1]"
            )));
        }
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        let rise = Piece::new(lo, center, move |x, k| match k {
            0 => (x - lo) / h,
            1 => 1.0 / h,
            _ => 0.0,
        });
        let fall = Piece::new(center, hi, move |x, k| match k {
            0 => (hi - x) / h,
            1 => -1.0 / h,
            _ => 0.0,
        });
        Self::from_pieces(vec![rise, fall], Smoothness::PiecewiseLinear, usize::MAX)
    }

    /// Piecewise constant field: `values[i]` on `[breaks[i], breaks[i+1])`.
    pub fn piecewise_constant(breaks: &[f64], values: &[f64]) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::InvalidParameter(
                "piecewise constant field needs one more breakpoint than values".into(),
            ));
        }
        let pieces = breaks
            .windows(2)
            .zip(values)
            .filter(|(_, &v)| v != 0.0)
            .map(|(w, &v)| Piece::new(w[0], w[1], move |_, k| if k == 0 { v } else { 0.0 }))
            .collect();
        Self::from_pieces(pieces, Smoothness::PiecewiseConstant, usize::MAX)
    }

    /// Indicator of the half-open interval `[a, b)`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        Self::piecewise_constant(&[a, b], &[1.0])
    }

    pub fn class(&self) -> Smoothness {
        self.class
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn max_derivative(&self) -> usize {
        self.max_derivative
    }

    fn piece_at(&self, x: f64) -> Option<&Piece> {
        let last_hi = self.pieces.last().map(|p| p.hi);
        self.pieces
            .iter()
            .find(|p| (x >= p.lo && x < p.hi) || (x == p.hi && Some(p.hi) == last_hi && p.hi == 1.0))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.piece_at(x).map_or(0.0, |p| p.eval(x, 0))
    }

    /// `k`-th derivative inside a piece (right-continuous at breakpoints).
    pub fn derivative(&self, x: f64, k: usize) -> f64 {
        self.piece_at(x).map_or(0.0, |p| p.eval(x, k))
    }

    /// Sorted, de-duplicated piece endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pieces.iter().flat_map(|p| [p.lo, p.hi]).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Jump `f^{(k)}(b+) - f^{(k)}(b-)` of a derivative combination at each
    /// breakpoint; `combo(piece, x)` evaluates the combination on a piece.
    pub(crate) fn jumps(&self, combo: impl Fn(&Piece, f64) -> f64) -> Vec<(f64, f64)> {
        self.breakpoints()
            .into_iter()
            .map(|b| {
                let right = self.pieces.iter().find(|p| p.lo == b).map_or(0.0, |p| combo(p, b));
                let left = self.pieces.iter().find(|p| p.hi == b).map_or(0.0, |p| combo(p, b));
                (b, right - left)
            })
            .collect()
    }

    /// The reflected field `y ↦ f(1 - y)`.
    pub fn mirrored(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .rev()
            .map(|p| {
                let inner = Arc::clone(&p.eval);
                Piece {
                    lo: 1.0 - p.hi,
                    hi: 1.0 - p.lo,
                    eval: Arc::new(move |y, k| {
                        let v = inner(1.0 - y, k);
                        if k % 2 == 0 {
                            v
                        } else {
                            -v
                        }
                    }),
                }
            })
            .collect();
        Self {
            pieces,
            class: self.class,
            max_derivative: self.max_derivative,
        }
    }

    /// Linear combination `a·self + b·other` on the common refinement.
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> Self {
        let f = self.clone();
        let g = other.clone();
        let mut breaks = self.breakpoints();
        breaks.extend(other.breakpoints());
        breaks.push(0.0);
        breaks.push(1.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let pieces = breaks
            .windows(2)
            .map(|w| {
                let (f, g) = (f.clone(), g.clone());
                let mid = 0.5 * (w[0] + w[1]);
                let pf = f.piece_at(mid).cloned();
                let pg = g.piece_at(mid).cloned();
                Piece::new(w[0], w[1], move |x, k| {
                    a * pf.as_ref().map_or(0.0, |p| p.eval(x, k)) + b * pg.as_ref().map_or(0.0, |p| p.eval(x, k))
                })
            })
            .collect();
        let class = match (self.class, other.class) {
            (Smoothness::Smooth, Smoothness::Smooth) => Smoothness::Smooth,
            (Smoothness::PiecewiseConstant, _) | (_, Smoothness::PiecewiseConstant) => Smoothness::PiecewiseConstant,
            _ => Smoothness::PiecewiseLinear,
        };
        Self {
            pieces,
            class,
            max_derivative: self.max_derivative.min(other.max_derivative),
        }
    }
}

fn poly_derivative(coeffs: &[f64], x: f64, k: usize) -> f64 {
    if k >= coeffs.len() {
        return 0.0;
    }
    // Horner on the k-th derivative coefficients
    let mut acc = 0.0;
    for p in (k..coeffs.len()).rev() {
        let factor: f64 = ((p - k + 1)..=p).map(|m| m as f64).product();
        acc = acc * x + coeffs[p] * factor;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bubble_matches_closed_form() {
        let f = ScalarField::bubble(3, 3);
        for x in [0.1, 0.5, 0.77] {
            let exact: f64 = x * x * x * (1.0 - x) * (1.0 - x) * (1.0 - x);
            assert_relative_eq!(f.value(x), exact, max_relative = 1e-13);
            let d1 = 3.0 * x * x * (1.0 - x).powi(3) - 3.0 * x.powi(3) * (1.0 - x).powi(2);
            assert_relative_eq!(f.derivative(x, 1), d1, max_relative = 1e-12);
        }
        assert_eq!(f.value(-0.2), 0.0);
        assert_eq!(f.value(1.3), 0.0);
    }

    #[test]
    fn hat_values_and_jumps() {
        let f = ScalarField::hat(0.5, 0.25).unwrap();
        assert_eq!(f.value(0.5), 1.0);
        assert_relative_eq!(f.value(0.375), 0.5);
        assert_eq!(f.value(0.1), 0.0);
        let jumps = f.jumps(|p, x| p.eval(x, 1));
        assert_eq!(jumps.len(), 3);
        assert_relative_eq!(jumps[0].1, 4.0);
        assert_relative_eq!(jumps[1].1, -8.0);
        assert_relative_eq!(jumps[2].1, 4.0);
        let values = f.jumps(|p, x| p.eval(x, 0));
        assert!(values.iter().all(|(_, j)| j.abs() < 1e-15));
    }

    #[test]
    fn indicator_is_half_open() {
        let g = ScalarField::indicator(0.25, 0.75).unwrap();
        assert_eq!(g.value(0.25), 1.0);
        assert_eq!(g.value(0.75), 0.0);
        assert_eq!(g.value(0.1), 0.0);
        assert_eq!(g.value(0.5), 1.0);
    }

    #[test]
    fn mirror_flips_odd_derivatives() {
        let f = ScalarField::polynomial(vec![0.0, 1.0, 2.0]);
        let m = f.mirrored();
        assert_relative_eq!(m.value(0.2), f.value(0.8));
        assert_relative_eq!(m.derivative(0.2, 1), -f.derivative(0.8, 1));
        assert_relative_eq!(m.derivative(0.2, 2), f.derivative(0.8, 2));
    }

    #[test]
    fn rejects_overlapping_pieces() {
        let p1 = Piece::new(0.0, 0.6, |_, _| 1.0);
        let p2 = Piece::new(0.5, 1.0, |_, _| 1.0);
        assert!(ScalarField::from_pieces(vec![p1, p2], Smoothness::PiecewiseConstant, 0).is_err());
    }
}
