//! Pointwise maximum and minimum by a coordinated sweep over the union of
//! both breakpoint sets.

use smallvec::SmallVec;

use super::{slopes_equal, Buf, PwlFunction};

/// Relative tolerance under which two function values count as a tie.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    F,
    G,
}

/// Values of `sign * f` at `grid` and its slopes on the `grid.len() + 1`
/// intervals the grid induces. `grid` must contain every breakpoint of `f`.
fn sample(f: &PwlFunction, grid: &[f64], sign: f64) -> (Buf, Buf) {
    let knots = f.knot_values();
    let bps = f.breakpoints();
    let slopes = f.slopes();
    let mut values = Buf::with_capacity(grid.len());
    let mut interval_slopes = Buf::with_capacity(grid.len() + 1);
    interval_slopes.push(slopes[0]);
    let mut j = 0;
    for &x in grid {
        let v = if j < bps.len() && bps[j] == x {
            j += 1;
            knots[j - 1]
        } else if j >= 1 {
            knots[j - 1] + slopes[j] * (x - bps[j - 1])
        } else if !bps.is_empty() {
            knots[0] + slopes[0] * (x - bps[0])
        } else {
            f.value_at_zero() + slopes[0] * x
        };
        values.push(sign * v);
        interval_slopes.push(sign * slopes[j]);
    }
    interval_slopes[0] *= sign;
    (values, interval_slopes)
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Buf {
    let mut out = Buf::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last() != Some(&x) {
            out.push(x);
        }
    }
    out
}

/// `y -> dir * max(dir * f(y), dir * g(y))`: the upper envelope for
/// `dir = 1`, the lower one for `dir = -1`.
fn envelope(f: &PwlFunction, g: &PwlFunction, dir: f64) -> PwlFunction {
    if f == g {
        return f.clone();
    }
    let mut grid = merge_sorted(f.breakpoints(), g.breakpoints());
    if grid.is_empty() {
        grid.push(0.0);
    }
    let (fv, fs) = sample(f, &grid, dir);
    let (gv, gs) = sample(g, &grid, dir);

    let sign = |k: usize| -> i8 {
        let d = fv[k] - gv[k];
        let tol = TIE_TOL * (1.0 + fv[k].abs() + gv[k].abs());
        if d > tol {
            1
        } else if d < -tol {
            -1
        } else {
            0
        }
    };
    let by_sign = |s: i8, fallback: Side| match s {
        1 => Side::F,
        -1 => Side::G,
        _ => fallback,
    };

    let mut starts: SmallVec<[f64; 16]> = SmallVec::with_capacity(2 * grid.len() + 2);
    let mut slopes: SmallVec<[f64; 16]> = SmallVec::with_capacity(2 * grid.len() + 2);
    let mut sides: SmallVec<[Side; 16]> = SmallVec::with_capacity(2 * grid.len() + 2);
    let mut push = |start: f64, side: Side, interval: usize| {
        starts.push(start);
        slopes.push(match side {
            Side::F => fs[interval],
            Side::G => gs[interval],
        });
        sides.push(side);
    };

    let last = grid.len() - 1;

    // left ray
    {
        let s = sign(0);
        let far = if slopes_equal(fs[0], gs[0]) {
            by_sign(s, Side::F)
        } else if fs[0] < gs[0] {
            Side::F
        } else {
            Side::G
        };
        let near = by_sign(s, far);
        let c = grid[0] - (fv[0] - gv[0]) / (fs[0] - gs[0]);
        if near != far && c < grid[0] && c.is_finite() {
            push(f64::NEG_INFINITY, far, 0);
            push(c, near, 0);
        } else {
            push(f64::NEG_INFINITY, near, 0);
        }
    }

    for k in 1..=last {
        let (a, b) = (grid[k - 1], grid[k]);
        let (sa, sb) = (sign(k - 1), sign(k));
        if sa * sb == -1 {
            let (da, db) = (fv[k - 1] - gv[k - 1], fv[k] - gv[k]);
            let c = a + da / (da - db) * (b - a);
            let (first, second) = if sa > 0 {
                (Side::F, Side::G)
            } else {
                (Side::G, Side::F)
            };
            if a < c && c < b {
                push(a, first, k);
                push(c, second, k);
            } else if c <= a {
                push(a, second, k);
            } else {
                push(a, first, k);
            }
        } else {
            push(a, if sa + sb >= 0 { Side::F } else { Side::G }, k);
        }
    }

    // right ray
    {
        let k = last + 1;
        let a = grid[last];
        let s = sign(last);
        let far = if slopes_equal(fs[k], gs[k]) {
            by_sign(s, Side::F)
        } else if fs[k] > gs[k] {
            Side::F
        } else {
            Side::G
        };
        let near = by_sign(s, far);
        let c = a - (fv[last] - gv[last]) / (fs[k] - gs[k]);
        if near != far && c > a && c.is_finite() {
            push(a, near, k);
            push(c, far, k);
        } else {
            push(a, far, k);
        }
    }

    let at_zero = starts.partition_point(|&x| x <= 0.0) - 1;
    let value_at_zero = match sides[at_zero] {
        Side::F => f.value_at_zero(),
        Side::G => g.value_at_zero(),
    };
    if dir < 0.0 {
        for s in slopes.iter_mut() {
            *s = -*s;
        }
    }
    PwlFunction::from_sorted(&starts[1..], &slopes, value_at_zero)
}

impl PwlFunction {
    /// `y -> max(f(y), g(y))`.
    pub fn pointwise_max(&self, other: &PwlFunction) -> PwlFunction {
        envelope(self, other, 1.0)
    }

    /// `y -> min(f(y), g(y))`. The result need not be convex.
    pub fn pointwise_min(&self, other: &PwlFunction) -> PwlFunction {
        envelope(self, other, -1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eq3() -> PwlFunction {
        PwlFunction::new(-1.0, 130.0, vec![-1.0], vec![-144.0, -96.0]).unwrap()
    }

    fn eq4() -> PwlFunction {
        PwlFunction::new(-1.0, 130.0, vec![-1.0], vec![-100.0, -200.0 / 3.0]).unwrap()
    }

    #[test]
    fn max_of_child_expense_functions() {
        let w = eq3().pointwise_max(&eq4());
        assert_eq!(w.breakpoints(), &[-1.0]);
        assert_eq!(w.slopes(), &[-144.0, -200.0 / 3.0]);
        assert!((w.evaluate(-1.0) - 130.0).abs() < 1e-12);
    }

    #[test]
    fn max_matches_grid_brute_force_on_child_functions() {
        let (f, g) = (eq3(), eq4());
        let w = f.pointwise_max(&g);
        for i in -5000..=5000 {
            let y = i as f64 * 1e-3;
            let brute = f.evaluate(y).max(g.evaluate(y));
            assert!((w.evaluate(y) - brute).abs() < 1e-9, "y={y}");
        }
    }

    #[test]
    fn max_and_min_of_symmetric_lines() {
        let up = PwlFunction::linear(1.0, 0.0);
        let down = PwlFunction::linear(-1.0, 0.0);
        let abs = up.pointwise_max(&down);
        assert_eq!(abs.breakpoints(), &[0.0]);
        assert_eq!(abs.slopes(), &[-1.0, 1.0]);
        assert_eq!(abs.evaluate(-3.0), 3.0);
        let neg_abs = up.pointwise_min(&down);
        assert_eq!(neg_abs.slopes(), &[1.0, -1.0]);
        assert_eq!(neg_abs.evaluate(2.5), -2.5);
    }

    #[test]
    fn idempotent_on_equal_inputs() {
        let f = eq3();
        assert_eq!(f.pointwise_max(&f), f);
        assert_eq!(f.pointwise_min(&f), f);
    }

    #[test]
    fn parallel_lines_pick_the_larger() {
        let lo = PwlFunction::linear(-3.0, 1.0);
        let hi = PwlFunction::linear(-3.0, 2.0);
        assert_eq!(lo.pointwise_max(&hi), hi);
        assert_eq!(lo.pointwise_min(&hi), lo);
    }

    #[test]
    fn min_returns_dominated_function() {
        // buyer-side shape: u below v everywhere
        let u = PwlFunction::new(1.0, -130.0, vec![1.0], vec![-120.0, -80.0]).unwrap();
        let v = PwlFunction::new(1.0, -110.17, vec![1.0], vec![-120.0, -80.0]).unwrap();
        assert_eq!(u.pointwise_min(&v), u);
    }

    #[test]
    fn crossing_on_a_ray() {
        let f = PwlFunction::new(0.0, 0.0, vec![0.0], vec![0.0, 1.0]).unwrap();
        let g = PwlFunction::constant(2.0);
        let h = f.pointwise_max(&g);
        assert_eq!(h.breakpoints(), &[2.0]);
        assert_eq!(h.evaluate(5.0), 5.0);
        assert_eq!(h.evaluate(-5.0), 2.0);
    }

    fn arb_pwl() -> impl Strategy<Value = PwlFunction> {
        (0usize..6)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec(-5.0f64..5.0, n),
                    prop::collection::vec(-50.0f64..50.0, n + 1),
                    -20.0f64..20.0,
                )
            })
            .prop_filter_map("distinct breakpoints", |(mut bps, slopes, v0)| {
                bps.sort_by(f64::total_cmp);
                bps.dedup();
                let slopes = slopes[..bps.len() + 1].to_vec();
                PwlFunction::new(0.0, v0, bps, slopes).ok()
            })
    }

    proptest! {
        #[test]
        fn envelope_is_pointwise(f in arb_pwl(), g in arb_pwl(), ys in prop::collection::vec(-8.0f64..8.0, 50)) {
            let hi = f.pointwise_max(&g);
            let lo = f.pointwise_min(&g);
            for y in ys {
                let (a, b) = (f.evaluate(y), g.evaluate(y));
                let tol = 1e-9 * (1.0 + a.abs() + b.abs());
                prop_assert!((hi.evaluate(y) - a.max(b)).abs() <= tol);
                prop_assert!((lo.evaluate(y) - a.min(b)).abs() <= tol);
            }
        }

        #[test]
        fn envelope_is_commutative(f in arb_pwl(), g in arb_pwl(), ys in prop::collection::vec(-8.0f64..8.0, 20)) {
            let fg = f.pointwise_max(&g);
            let gf = g.pointwise_max(&f);
            for y in ys {
                prop_assert!((fg.evaluate(y) - gf.evaluate(y)).abs() <= 1e-9 * (1.0 + fg.evaluate(y).abs()));
            }
        }

        #[test]
        fn envelope_is_associative(f in arb_pwl(), g in arb_pwl(), h in arb_pwl(), ys in prop::collection::vec(-8.0f64..8.0, 20)) {
            let left = f.pointwise_max(&g).pointwise_max(&h);
            let right = f.pointwise_max(&g.pointwise_max(&h));
            for y in ys {
                prop_assert!((left.evaluate(y) - right.evaluate(y)).abs() <= 1e-8 * (1.0 + left.evaluate(y).abs()));
            }
        }
    }
}
