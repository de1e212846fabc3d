//! Adaptive Simpson quadrature with optional breakpoints.

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, [a, b], [fa, fm, fb], whole, tol, 50)
}

fn recurse<F: Fn(f64) -> f64>(f: &F, [a, b]: [f64; 2], [fa, fm, fb]: [f64; 3], whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, [a, m], [fa, flm, fm], left, 0.5 * tol, depth - 1)
        + recurse(f, [m, b], [fm, frm, fb], right, 0.5 * tol, depth - 1)
}

/// Splits `[a, b]` at the interior `breaks` and integrates each piece.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.insert(0, a);
    pts.push(b);
    let pieces = (pts.len() - 1) as f64;
    pts.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_kink_and_root_singularity() {
        assert!((adaptive_simpson(&|x: f64| x.powi(3), 0.0, 2.0, 1e-14) - 4.0).abs() < 1e-13);
        let v = integrate_with_breaks(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-14);
        assert!((v - (0.045 + 0.245)).abs() < 1e-13);
        let s = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((s - 2.0 / 3.0).abs() < 1e-10);
    }
}
