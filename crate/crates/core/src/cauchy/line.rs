//! One-dimensional integrals behind the kernel-mass, line and tail bounds.

/// Adaptive Simpson with the usual `(S₂ − S₁)/15` correction.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_T^∞ dt / (A + t^{1+ε})` for `T > 0`, via `u = t^{−ε}`, which turns it
/// into `(1/ε) ∫_0^{T^{−ε}} du / (1 + A u^{(1+ε)/ε})`: bounded, monotone and
/// on a finite interval.
pub(crate) fn tail_integral(a_const: f64, epsilon: f64, t: f64) -> f64 {
    let upper = t.powf(-epsilon);
    let expo = (1.0 + epsilon) / epsilon;
    let g = move |u: f64| 1.0 / (1.0 + a_const * u.powf(expo));
    adaptive_simpson(&g, 0.0, upper, 1e-15 * upper.max(1e-300)) / epsilon
}

/// `∫_0^∞ dr / (A + r^{1+ε})`.
pub(crate) fn half_line_integral(a_const: f64, epsilon: f64) -> f64 {
    let p = 1.0 + epsilon;
    let near = adaptive_simpson(&|r: f64| 1.0 / (a_const + r.powf(p)), 0.0, 1.0, 1e-14);
    near + tail_integral(a_const, epsilon, 1.0)
}
