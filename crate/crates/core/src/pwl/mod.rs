//! Continuous piecewise-linear functions of the stock holding `y`.
//!
//! A [`PwlFunction`] is stored as its value at `y = 0`, a strictly increasing
//! list of breakpoints and one slope per piece (`breakpoints.len() + 1`
//! slopes, the first covering `(-inf, b_1)` and the last `(b_last, +inf)`).
//! Continuity is implied by the representation. Every constructor
//! canonicalizes, so adjacent slopes always differ by more than the merge
//! tolerance.

mod envelope;
mod restrict;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

pub use restrict::SlopeInterval;

/// Relative tolerance under which two adjacent slopes are merged.
pub const SLOPE_MERGE_TOL: f64 = 1e-12;

/// Inline storage; lattice functions rarely exceed a handful of pieces.
pub(crate) type Buf = SmallVec<[f64; 8]>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PwlError {
    #[error("breakpoints must be strictly increasing (index {index})")]
    UnsortedBreakpoints { index: usize },
    #[error("expected {expected} slopes for the given breakpoints, got {got}")]
    SlopeCount { expected: usize, got: usize },
    #[error("non-finite input to piecewise-linear function")]
    NonFinite,
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("invalid slope interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error(
        "slope restriction is unbounded below: asymptotic slopes ({left}, {right}) vs interval [{lo}, {hi}]"
    )]
    Unbounded { left: f64, right: f64, lo: f64, hi: f64 },
}

pub(crate) fn slopes_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= SLOPE_MERGE_TOL * a.abs().max(b.abs())
}

/// Serializable, not necessarily canonical, form of a [`PwlFunction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlParts {
    pub anchor_y: f64,
    pub anchor_value: f64,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl PwlParts {
    /// Validates the parts, merges pieces with equal slopes and re-anchors at `y = 0`.
    pub fn canonicalize(self) -> Result<PwlFunction, PwlError> {
        let PwlParts {
            anchor_y,
            anchor_value,
            breakpoints,
            slopes,
        } = self;
        if slopes.len() != breakpoints.len() + 1 {
            return Err(PwlError::SlopeCount {
                expected: breakpoints.len() + 1,
                got: slopes.len(),
            });
        }
        if !anchor_y.is_finite()
            || !anchor_value.is_finite()
            || breakpoints.iter().chain(&slopes).any(|v| !v.is_finite())
        {
            return Err(PwlError::NonFinite);
        }
        if let Some(index) = breakpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(PwlError::UnsortedBreakpoints { index: index + 1 });
        }

        let value_at_zero = if anchor_y == 0.0 {
            anchor_value
        } else {
            integrate(&breakpoints, &slopes, anchor_y, anchor_value, 0.0)
        };
        Ok(PwlFunction::from_sorted(&breakpoints, &slopes, value_at_zero))
    }
}

/// Value at `to` of the function with the given pieces that takes `from_value` at `from`.
fn integrate(breakpoints: &[f64], slopes: &[f64], from: f64, from_value: f64, to: f64) -> f64 {
    let mut value = from_value;
    let mut x = from;
    if to >= from {
        let mut piece = breakpoints.partition_point(|&b| b <= from);
        while piece < breakpoints.len() && breakpoints[piece] < to {
            value += slopes[piece] * (breakpoints[piece] - x);
            x = breakpoints[piece];
            piece += 1;
        }
        value + slopes[piece] * (to - x)
    } else {
        let mut piece = breakpoints.partition_point(|&b| b < from);
        while piece > 0 && breakpoints[piece - 1] > to {
            value -= slopes[piece] * (x - breakpoints[piece - 1]);
            x = breakpoints[piece - 1];
            piece -= 1;
        }
        value - slopes[piece] * (x - to)
    }
}

/// A continuous piecewise-linear function on the whole real line, in canonical form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PwlParts", into = "PwlParts")]
pub struct PwlFunction {
    breakpoints: Buf,
    slopes: Buf,
    value_at_zero: f64,
}

impl Default for PwlFunction {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl TryFrom<PwlParts> for PwlFunction {
    type Error = PwlError;

    fn try_from(parts: PwlParts) -> Result<Self, Self::Error> {
        parts.canonicalize()
    }
}

impl From<PwlFunction> for PwlParts {
    fn from(f: PwlFunction) -> Self {
        PwlParts {
            anchor_y: 0.0,
            anchor_value: f.value_at_zero,
            breakpoints: f.breakpoints.to_vec(),
            slopes: f.slopes.to_vec(),
        }
    }
}

impl PwlFunction {
    /// Builds a function from an anchor point, breakpoints and slopes, canonicalizing it.
    pub fn new(
        anchor_y: f64,
        anchor_value: f64,
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
    ) -> Result<Self, PwlError> {
        PwlParts {
            anchor_y,
            anchor_value,
            breakpoints,
            slopes,
        }
        .canonicalize()
    }

    pub fn constant(value: f64) -> Self {
        Self::linear(0.0, value)
    }

    /// The line `y -> value_at_zero + slope * y`.
    pub fn linear(slope: f64, value_at_zero: f64) -> Self {
        PwlFunction {
            breakpoints: Buf::new(),
            slopes: smallvec::smallvec![slope],
            value_at_zero,
        }
    }

    /// Merges equal adjacent slopes. Breakpoints must already be strictly increasing.
    pub(crate) fn from_sorted(breakpoints: &[f64], slopes: &[f64], value_at_zero: f64) -> Self {
        debug_assert_eq!(slopes.len(), breakpoints.len() + 1);
        let mut out_breaks = Buf::with_capacity(breakpoints.len());
        let mut out_slopes = Buf::with_capacity(slopes.len());
        out_slopes.push(slopes[0]);
        for (&b, &s) in breakpoints.iter().zip(&slopes[1..]) {
            let run = *out_slopes.last().unwrap();
            if !slopes_equal(run, s) {
                out_breaks.push(b);
                out_slopes.push(s);
            }
        }
        PwlFunction {
            breakpoints: out_breaks,
            slopes: out_slopes,
            value_at_zero,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    /// `(anchor_y, anchor_value)`; the anchor of a canonical function is always `y = 0`.
    pub fn anchor(&self) -> (f64, f64) {
        (0.0, self.value_at_zero)
    }

    pub fn piece_count(&self) -> usize {
        self.slopes.len()
    }

    /// Leftmost and rightmost slopes.
    pub fn asymptotic_slopes(&self) -> (f64, f64) {
        (self.slopes[0], *self.slopes.last().unwrap())
    }

    pub fn is_convex(&self) -> bool {
        self.slopes.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn to_parts(&self) -> PwlParts {
        self.clone().into()
    }

    pub fn evaluate(&self, y: f64) -> f64 {
        if y == 0.0 {
            return self.value_at_zero;
        }
        integrate(&self.breakpoints, &self.slopes, 0.0, self.value_at_zero, y)
    }

    /// Function values at every breakpoint, integrated outward from `y = 0`.
    pub fn knot_values(&self) -> Buf {
        let n = self.breakpoints.len();
        let mut values: Buf = smallvec::smallvec![0.0; n];
        let split = self.breakpoints.partition_point(|&b| b < 0.0);
        // the piece containing 0 is `split`
        let mut x = 0.0;
        let mut v = self.value_at_zero;
        for i in split..n {
            v += self.slopes[i] * (self.breakpoints[i] - x);
            x = self.breakpoints[i];
            values[i] = v;
        }
        x = 0.0;
        v = self.value_at_zero;
        for i in (0..split).rev() {
            v -= self.slopes[i + 1] * (x - self.breakpoints[i]);
            x = self.breakpoints[i];
            values[i] = v;
        }
        values
    }

    /// `c * f` for `c > 0`.
    pub fn scale(&self, c: f64) -> Result<Self, PwlError> {
        if !c.is_finite() {
            return Err(PwlError::NonFinite);
        }
        if c <= 0.0 {
            return Err(PwlError::NonPositiveScale(c));
        }
        if c == 1.0 {
            return Ok(self.clone());
        }
        let slopes: Buf = self.slopes.iter().map(|s| s * c).collect();
        Ok(Self::from_sorted(&self.breakpoints, &slopes, self.value_at_zero * c))
    }

    /// `y -> -f(y)`. Exact.
    pub fn negate(&self) -> Self {
        PwlFunction {
            breakpoints: self.breakpoints.clone(),
            slopes: self.slopes.iter().map(|s| -s).collect(),
            value_at_zero: -self.value_at_zero,
        }
    }

    /// `y -> f(-y)`. Exact.
    pub fn reflect(&self) -> Self {
        PwlFunction {
            breakpoints: self.breakpoints.iter().rev().map(|b| -b).collect(),
            slopes: self.slopes.iter().rev().map(|s| -s).collect(),
            value_at_zero: self.value_at_zero,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq3() -> PwlFunction {
        // 130 + 144 (y+1)^- - 96 (y+1)^+
        PwlFunction::new(-1.0, 130.0, vec![-1.0], vec![-144.0, -96.0]).unwrap()
    }

    #[test]
    fn evaluates_expense_function_pieces() {
        let f = eq3();
        assert_eq!(f.value_at_zero(), 34.0);
        assert_eq!(f.evaluate(-1.0), 130.0);
        assert_eq!(f.evaluate(-2.0), -144.0 * -2.0 - 14.0);
        assert_eq!(f.evaluate(1.0), -96.0 + 34.0);
        assert_eq!(f.asymptotic_slopes(), (-144.0, -96.0));
    }

    #[test]
    fn zero_function_is_zero_everywhere() {
        let f = PwlFunction::constant(0.0);
        for y in [-1e6, -3.5, 0.0, 2.0, 1e9] {
            assert_eq!(f.evaluate(y), 0.0);
        }
    }

    #[test]
    fn canonicalize_merges_equal_slopes() {
        let f = PwlFunction::new(0.0, 1.0, vec![2.0], vec![-2.0, -2.0]).unwrap();
        assert!(f.breakpoints().is_empty());
        assert_eq!(f.slopes(), &[-2.0]);

        let g = PwlFunction::new(0.0, 0.0, vec![0.0, 1.0], vec![-2.0, -2.0 + 1e-15, -1.0]).unwrap();
        assert_eq!(g.breakpoints(), &[1.0]);
        assert_eq!(g.slopes(), &[-2.0, -1.0]);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let f = eq3();
        let again = f.to_parts().canonicalize().unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn canonicalize_rejects_bad_breakpoints() {
        assert_eq!(
            PwlFunction::new(0.0, 0.0, vec![1.0, 1.0], vec![0.0, 1.0, 2.0]),
            Err(PwlError::UnsortedBreakpoints { index: 1 })
        );
        assert_eq!(
            PwlFunction::new(0.0, 0.0, vec![2.0, 1.0], vec![0.0, 1.0, 2.0]),
            Err(PwlError::UnsortedBreakpoints { index: 1 })
        );
        assert!(matches!(
            PwlFunction::new(0.0, 0.0, vec![1.0], vec![0.0]),
            Err(PwlError::SlopeCount { .. })
        ));
        assert_eq!(
            PwlFunction::new(0.0, f64::NAN, vec![], vec![0.0]),
            Err(PwlError::NonFinite)
        );
    }

    #[test]
    fn reanchoring_from_either_side() {
        let left = PwlFunction::new(-3.0, 7.0, vec![-2.0, 1.0], vec![1.0, -1.0, 2.0]).unwrap();
        // f(-3)=7, f(-2)=8, f(0)=6, f(1)=5
        assert_eq!(left.value_at_zero(), 6.0);
        assert_eq!(left.evaluate(1.0), 5.0);
        assert_eq!(left.evaluate(3.0), 9.0);
        let right = PwlFunction::new(3.0, 9.0, vec![-2.0, 1.0], vec![1.0, -1.0, 2.0]).unwrap();
        assert_eq!(left, right);
        assert_eq!(left.knot_values().as_slice(), &[8.0, 5.0]);
    }

    #[test]
    fn scale_is_linear() {
        let f = PwlFunction::linear(-144.0, -14.0);
        assert_eq!(f.scale(1.0).unwrap(), f);
        assert_eq!(f.scale(0.5).unwrap(), PwlFunction::linear(-72.0, -7.0));
        assert_eq!(f.scale(0.0), Err(PwlError::NonPositiveScale(0.0)));
        assert_eq!(f.scale(-2.0), Err(PwlError::NonPositiveScale(-2.0)));
    }

    #[test]
    fn reflect_and_negate_are_exact_involutions() {
        let f = eq3();
        assert_eq!(f.reflect().reflect(), f);
        assert_eq!(f.negate().negate(), f);
        assert_eq!(f.reflect().evaluate(1.0), f.evaluate(-1.0));
    }

    #[test]
    fn serde_roundtrip_canonicalizes() {
        let json = r#"{"anchor_y": 95.0, "anchor_value": 0.0, "breakpoints": [95.0, 105.0], "slopes": [0.0, 1.0, 0.0]}"#;
        let f: PwlFunction = serde_json::from_str(json).unwrap();
        assert_eq!(f.evaluate(100.0), 5.0);
        assert_eq!(f.evaluate(200.0), 10.0);
        let back: PwlFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
