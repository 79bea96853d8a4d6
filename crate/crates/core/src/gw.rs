//! Branching-process fixed points: the cut probabilities `Q_r` and `P_r`
//! on the infinite complete (k-1)-ary tree, their integral `s_k`, and the
//! two-critical-clause boost `B(r)`.
//!
//! `Q_r` and `P_r` are the smallest roots in `[0,1]` of
//! `Q = (r + (1-r) Q)^(k-1)` and `P = r + (1-r) P^(k-1)`; both equal 1 for
//! `r >= (k-2)/(k-1)`. For k = 3 they have closed forms.

use crate::quad;

/// Residual bound for the general-k fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// The disjunction `a + b - ab` on probabilities.
pub fn or(a: f64, b: f64) -> f64 {
    a + b - a * b
}

/// The threshold `(k-2)/(k-1)` above which `Q = P = 1`.
pub fn threshold(k: usize) -> f64 {
    (k as f64 - 2.0) / (k as f64 - 1.0)
}

/// Smallest root of `Q = (r + (1-r) Q)^(k-1)`.
///
/// k = 3 uses the closed form `(r/(1-r))^2`; other widths go through the
/// fixed-point iteration.
pub fn q(k: usize, r: f64) -> f64 {
    assert!(k >= 3, "need k >= 3");
    assert!((0.0..=1.0).contains(&r), "r out of [0,1]");
    if r >= threshold(k) {
        return 1.0;
    }
    if k == 3 {
        let v = r / (1.0 - r);
        return v * v;
    }
    q_fixed_point(k, r)
}

/// The iteration route to the smallest root, valid for any `k >= 3` below
/// the threshold: iterate the monotone map from 0 (the iterates increase to
/// the smallest fixed point), then polish with Newton. A Newton step is
/// only accepted while it stays on the near side of the root; an overshoot
/// is resolved by bisection, so the residual bound holds arbitrarily close
/// to the threshold where plain iteration stalls.
pub fn q_fixed_point(k: usize, r: f64) -> f64 {
    assert!(r < threshold(k));
    let e = (k - 1) as i32;
    let map = |x: f64| (r + (1.0 - r) * x).powi(e);
    let g = |x: f64| map(x) - x;
    let mut x = 0.0f64;
    for _ in 0..200 {
        let next = map(x);
        if next - x < 1e-17 {
            break;
        }
        x = next;
    }
    for _ in 0..200 {
        let gx = g(x);
        if gx < FIXED_POINT_TOL * 0.01 {
            break;
        }
        let dg = (k - 1) as f64 * (1.0 - r) * (r + (1.0 - r) * x).powi(e - 1) - 1.0;
        let mut next = (x - gx / dg).clamp(x, 1.0);
        if g(next) < 0.0 {
            // Crossed the root: bisect back inside (x, next).
            let (mut lo, mut hi) = (x, next);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if g(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            next = lo;
        }
        if next - x < 1e-18 {
            break;
        }
        x = next;
    }
    debug_assert!(g(x).abs() < FIXED_POINT_TOL);
    x
}

/// Smallest root of `P = r ∨ P^(k-1)`, i.e. `r + (1-r) Q`.
pub fn p(k: usize, r: f64) -> f64 {
    if k == 3 {
        return if r < 0.5 { r / (1.0 - r) } else { 1.0 };
    }
    or(r, q(k, r))
}

/// `s_k = ∫_0^1 Q_r dr`, the cut probability of the infinite complete tree
/// with the threshold averaged over the root placement. For r above the
/// threshold the integrand is exactly 1.
pub fn s(k: usize) -> f64 {
    let thr = threshold(k);
    quad::integrate(|r| q(k, r), 0.0, thr, 1e-11) + (1.0 - thr)
}

/// Derivative of `Q_r` at k = 3: `2r/(1-r)^3` below 1/2, zero above
/// (where `Q` is constant).
pub fn q_prime(r: f64) -> f64 {
    if r < 0.5 {
        2.0 * r / (1.0 - r).powi(3)
    } else {
        0.0
    }
}

/// The cut-probability boost available to a variable with two critical
/// clauses: `1 + (1-2r)^2 (1-2r+2r^2)/(1-r)^2` below 1/2 and 1 above.
pub fn b_twocc(r: f64) -> f64 {
    if r >= 0.5 {
        1.0
    } else {
        let t = 1.0 - 2.0 * r;
        1.0 + t * t * (1.0 - 2.0 * r + 2.0 * r * r) / ((1.0 - r) * (1.0 - r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn q3_values() {
        assert_eq!(q(3, 0.0), 0.0);
        assert!((q(3, 1.0 / 3.0) - 0.25).abs() < 1e-15);
        assert_eq!(q(3, 0.5), 1.0);
        assert_eq!(q(3, 0.9), 1.0);
    }

    #[test]
    fn q5_matches_bisection_oracle() {
        // Independent oracle: bisect the quartic x = (0.5 + 0.5 x)^4 for its
        // smallest root; g(x) = map(x) - x is positive below it.
        let map = |x: f64| (0.5 + 0.5 * x).powi(4);
        let (mut lo, mut hi) = (0.0f64, 0.999f64);
        assert!(map(hi) - hi < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if map(mid) - mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let got = q(5, 0.5);
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
        assert!(got > 0.0 && got < 1.0);
        // Frozen from the oracle.
        assert!((got - 0.087378025).abs() < 1e-8);
    }

    #[test]
    fn residual_bound_holds_on_grid() {
        for k in 3..=7 {
            for i in 0..=1000 {
                let r = i as f64 / 1000.0;
                let v = q(k, r);
                let residual = (r + (1.0 - r) * v).powi(k as i32 - 1) - v;
                assert!(
                    residual.abs() < FIXED_POINT_TOL,
                    "k={k} r={r} residual={residual}"
                );
            }
        }
    }

    #[test]
    fn q3_closed_form_matches_general_iteration() {
        for i in 0..1000 {
            let r = 0.5 * i as f64 / 1000.0;
            assert!((q(3, r) - q_fixed_point(3, r)).abs() < 1e-11, "r={r}");
        }
    }

    #[test]
    fn p_is_r_or_q_on_grid() {
        for k in 3..=6 {
            for i in 0..=500 {
                let r = i as f64 / 500.0;
                assert!((p(k, r) - or(r, q(k, r))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn p3_value() {
        assert!((p(3, 0.25) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p(4, 0.0), 0.0);
        assert_eq!(p(6, 0.0), 0.0);
    }

    #[test]
    fn s3_closed_form() {
        // Closed form: integrating (r/(1-r))^2 over [0,1/2] gives 3/2 - 2 ln 2.
        let expected = 2.0 - 2.0 * LN2;
        assert!((s(3) - expected).abs() < 1e-10);
        assert!((f64::powf(2.0, 1.0 - s(3)) - 1.3070319).abs() < 1e-5);
    }

    #[test]
    fn s_k_trend_and_monotonicity() {
        let s10 = s(10);
        let asymptotic = std::f64::consts::PI.powi(2) / (6.0 * 10.0);
        assert!(
            (s10 - asymptotic).abs() / asymptotic < 0.15,
            "s(10)={s10} vs {asymptotic}"
        );
        let mut prev = s(3);
        for k in 4..=10 {
            let cur = s(k);
            assert!(cur < prev, "s not decreasing at k={k}");
            prev = cur;
        }
    }

    #[test]
    fn q_prime_matches_finite_differences() {
        assert_eq!(q_prime(0.0), 0.0);
        assert!((q_prime(0.25) - 0.5 / 0.75f64.powi(3)).abs() < 1e-12);
        for i in 1..100 {
            let r = 0.49 * i as f64 / 100.0;
            let h = 1e-6;
            let fd = (q(3, r + h) - q(3, r - h)) / (2.0 * h);
            assert!((q_prime(r) - fd).abs() < 1e-6, "r={r}");
        }
    }

    #[test]
    fn q_and_p_bounds_and_convexity() {
        for k in 3..=7 {
            let thr = threshold(k);
            let ratio = (k as f64 - 1.0) / (k as f64 - 2.0);
            let grid: Vec<f64> = (0..=400).map(|i| thr * i as f64 / 400.0).collect();
            for &r in &grid {
                let pv = p(k, r);
                assert!(
                    pv >= r - 1e-12 && pv <= ratio * r + 1e-12,
                    "P bounds k={k} r={r}"
                );
                // Q = P^(k-1) inherits the ratio bound on the whole interval.
                assert!(
                    q(k, r) <= (ratio * r).powi(k as i32 - 1) + 1e-12,
                    "Q bound k={k} r={r}"
                );
            }
            // The e-form of the Q bound only holds where it is used, at
            // small r: ratio^(k-1) itself exceeds e for every finite k.
            for i in 0..=100 {
                let r = i as f64 / 1600.0;
                assert!(
                    q(k, r) <= std::f64::consts::E * r.powi(k as i32 - 1) + 1e-12,
                    "e-form Q bound k={k} r={r}"
                );
            }
            // Convexity of P: second divided differences are nonnegative.
            for w in grid.windows(3) {
                let dd = p(k, w[2]) - 2.0 * p(k, w[1]) + p(k, w[0]);
                assert!(dd >= -1e-9, "P convexity k={k} at {}", w[1]);
            }
        }
    }

    #[test]
    fn b_twocc_values_and_monotonicity() {
        assert_eq!(b_twocc(0.5), 1.0);
        assert_eq!(b_twocc(0.7), 1.0);
        assert!((b_twocc(0.0) - 2.0).abs() < 1e-15);
        let mut prev = b_twocc(0.0);
        for i in 1..=500 {
            let r = 0.5 * i as f64 / 500.0;
            let cur = b_twocc(r);
            assert!(cur <= prev + 1e-12, "B not decreasing at r={r}");
            prev = cur;
        }
    }
}
