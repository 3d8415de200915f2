//! Slope restriction: the infimal convolution of a function with the cone
//! `x -> hi * x` (x >= 0), `x -> lo * x` (x < 0).
//!
//! The result is the largest function below `f` whose slopes all lie in
//! `[lo, hi]`. It is computed by two monotone sweeps. The right-to-left sweep
//! lowers `f` until every slope is at least `lo`, the left-to-right sweep
//! lowers the result until every slope is at most `hi`.

use serde::{Deserialize, Serialize};

use smallvec::SmallVec;

use super::{PwlError, PwlFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeInterval {
    lo: f64,
    hi: f64,
}

impl SlopeInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, PwlError> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(PwlError::InvalidInterval { lo, hi });
        }
        Ok(SlopeInterval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, slope: f64) -> bool {
        self.lo <= slope && slope <= self.hi
    }
}

#[derive(Clone, Copy)]
enum Source {
    Input,
    Ray { x0: f64, v0: f64 },
}

/// Largest minorant of `f` with every slope at most `hi`:
/// `y -> inf_{y' <= y} f(y') + hi * (y - y')`.
fn cap_slopes_from_left(f: &PwlFunction, hi: f64) -> PwlFunction {
    let bps = f.breakpoints();
    let slopes = f.slopes();
    debug_assert!(slopes[0] <= hi);
    if slopes.iter().all(|&s| s <= hi) {
        return f.clone();
    }
    let knots = f.knot_values();
    let m = bps.len();

    let mut starts: SmallVec<[f64; 16]> = SmallVec::with_capacity(2 * m + 1);
    let mut out_slopes: SmallVec<[f64; 16]> = SmallVec::with_capacity(2 * m + 1);
    let mut sources: SmallVec<[Source; 16]> = SmallVec::with_capacity(2 * m + 1);
    starts.push(f64::NEG_INFINITY);
    out_slopes.push(slopes[0]);
    sources.push(Source::Input);

    let mut state = Source::Input;
    for k in 1..=m {
        let a = bps[k - 1];
        let b = if k == m { f64::INFINITY } else { bps[k] };
        let s = slopes[k];
        match state {
            Source::Input => {
                if s <= hi {
                    starts.push(a);
                    out_slopes.push(s);
                    sources.push(Source::Input);
                } else {
                    state = Source::Ray {
                        x0: a,
                        v0: knots[k - 1],
                    };
                    starts.push(a);
                    out_slopes.push(hi);
                    sources.push(state);
                }
            }
            Source::Ray { x0, v0 } => {
                if s < hi {
                    let gap = knots[k - 1] - (v0 + hi * (a - x0));
                    let c = if gap <= 0.0 { a } else { a + gap / (hi - s) };
                    if c < b {
                        state = Source::Input;
                        starts.push(c);
                        out_slopes.push(s);
                        sources.push(Source::Input);
                    }
                }
            }
        }
    }

    let at_zero = starts.partition_point(|&x| x <= 0.0) - 1;
    let value_at_zero = match sources[at_zero] {
        Source::Input => f.value_at_zero(),
        Source::Ray { x0, v0 } => v0 + hi * (0.0 - x0),
    };
    PwlFunction::from_sorted(&starts[1..], &out_slopes, value_at_zero)
}

impl PwlFunction {
    /// The largest function below `self` with all slopes in `iv`.
    ///
    /// Fails with [`PwlError::Unbounded`] when the leftmost slope exceeds
    /// `iv.hi()` or the rightmost slope is below `iv.lo()`; the infimum is
    /// then `-inf` everywhere.
    pub fn restrict_slopes(&self, iv: SlopeInterval) -> Result<PwlFunction, PwlError> {
        let (left, right) = self.asymptotic_slopes();
        if left > iv.hi || right < iv.lo {
            return Err(PwlError::Unbounded {
                left,
                right,
                lo: iv.lo,
                hi: iv.hi,
            });
        }
        if self.slopes().iter().all(|&s| iv.contains(s)) {
            return Ok(self.clone());
        }
        let floored = if self.slopes().iter().all(|&s| s >= iv.lo) {
            self.clone()
        } else {
            cap_slopes_from_left(&self.reflect(), -iv.lo).reflect()
        };
        Ok(cap_slopes_from_left(&floored, iv.hi))
    }

    /// Slope restriction specialised to convex inputs: clip every slope into
    /// `iv` and reconnect at a point where the subgradient meets `iv`.
    /// Returns `None` if `self` is not convex.
    pub fn restrict_slopes_convex(&self, iv: SlopeInterval) -> Option<Result<PwlFunction, PwlError>> {
        if !self.is_convex() {
            return None;
        }
        let (left, right) = self.asymptotic_slopes();
        if left > iv.hi || right < iv.lo {
            return Some(Err(PwlError::Unbounded {
                left,
                right,
                lo: iv.lo,
                hi: iv.hi,
            }));
        }
        let slopes = self.slopes();
        let bps = self.breakpoints();
        // first piece with slope >= lo; f is retained at its left end
        let first = slopes.partition_point(|&s| s < iv.lo);
        let clipped: Vec<f64> = slopes.iter().map(|&s| s.clamp(iv.lo, iv.hi)).collect();
        let result = if first == 0 {
            // leftmost piece already within [lo, hi]: f is retained on it
            if bps.is_empty() {
                PwlFunction::from_sorted(&[], &clipped, self.value_at_zero())
            } else {
                let knot = self.knot_values()[0];
                PwlFunction::new(bps[0], knot, bps.to_vec(), clipped).expect("sorted")
            }
        } else {
            let knot = self.knot_values()[first - 1];
            PwlFunction::new(bps[first - 1], knot, bps.to_vec(), clipped).expect("sorted")
        };
        Some(Ok(result))
    }
}
