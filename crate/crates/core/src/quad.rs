//! Adaptive Simpson quadrature.
//!
//! The integrands in this crate are piecewise smooth with a handful of known
//! kinks (support ends, the branch point of `delta_max`, the fixed-point
//! threshold `(k-2)/(k-1)`), so callers pass explicit split points and the
//! adaptive rule handles the smooth pieces.

struct Panel {
    a: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    b: f64,
    whole: f64,
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, p: Panel, tol: f64, depth: usize) -> f64 {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(p.fa, flm, p.fm, m - p.a);
    let right = simpson(p.fm, frm, p.fb, p.b - m);
    let delta = left + right - p.whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        let pl = Panel {
            a: p.a,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            b: m,
            whole: left,
        };
        let pr = Panel {
            a: m,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            b: p.b,
            whole: right,
        };
        adaptive(f, pl, 0.5 * tol, depth - 1) + adaptive(f, pr, 0.5 * tol, depth - 1)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    adaptive(
        &f,
        Panel {
            a,
            fa,
            fm,
            fb,
            b,
            whole,
        },
        tol,
        52,
    )
}

/// Integrates over `[a, b]` splitting at every interior point of `cuts`.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cuts: &[f64], tol: f64) -> f64 {
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let per = tol / pts.len() as f64;
    pts.windows(2).map(|w| integrate(&f, w[0], w[1], per)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 8.0).abs() < 1e-10);
    }

    #[test]
    fn log_integral() {
        // int_0^1 ln(1+x) dx = 2 ln 2 - 1
        let v = integrate(|x| (1.0 + x).ln(), 0.0, 1.0, 1e-12);
        assert!((v - (2.0 * std::f64::consts::LN_2 - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn split_handles_kink() {
        let f = |x: f64| if x < 0.5 { x } else { 1.0 - x };
        let v = integrate_split(f, 0.0, 1.0, &[0.5], 1e-12);
        assert!((v - 0.25).abs() < 1e-11);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        // int_0^(1/2) sqrt(1-2r) dr = 1/3
        let v = integrate(|r| (1.0 - 2.0 * r).max(0.0).sqrt(), 0.0, 0.5, 1e-12);
        assert!((v - 1.0 / 3.0).abs() < 1e-9);
    }
}
