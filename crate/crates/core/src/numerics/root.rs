/// Finds the root of an increasing function on a bracket `[lo, hi]` with
/// `f(lo) <= 0 <= f(hi)`. `f` returns the function value and its derivative;
/// Newton steps are taken when they stay inside the bracket, otherwise the
/// bracket is bisected.
pub(crate) fn solve_increasing(
    mut f: impl FnMut(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    start: f64,
    x_tol: f64,
) -> f64 {
    let mut x = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if dfx > 0.0 && dfx.is_finite() { x - fx / dfx } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= x_tol * x.abs().max(1.0) || hi - lo <= x_tol * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}
