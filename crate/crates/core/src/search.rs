//! Derivative-free maximization of unimodal functions on an interval.

use crate::scalar::Real;

/// Maximizer found by [`golden_max`].
#[derive(Debug, Clone, Copy)]
pub struct LineMax<T> {
    pub x: T,
    pub value: T,
    pub evaluations: usize,
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
///
/// Stops when the bracket width falls below `width`. When the two interior values
/// tie (e.g. on a zero plateau) the bracket moves right.
pub fn golden_max<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, width: T) -> LineMax<T> {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    while b - a > width {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    // Compare the final interior point with both ends so boundary optima are exact.
    let mid = (a + b) / T::lit(2.0);
    let mut best = LineMax { x: mid, value: f(mid), evaluations: evaluations + 1 };
    for end in [lo, hi] {
        let v = f(end);
        best.evaluations += 1;
        if v > best.value || (v == best.value && end == hi) {
            best.x = end;
            best.value = v;
        }
    }
    best
}

/// Golden-section search preceded by a coarse grid scan that narrows the bracket to
/// the two cells around the best grid point. Guards against flat regions where the
/// function is exactly zero over part of the interval.
pub fn bracketed_golden_max<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    lo: T,
    hi: T,
    grid: usize,
    width: T,
) -> LineMax<T> {
    if hi <= lo {
        let v = f(lo);
        return LineMax { x: lo, value: v, evaluations: 1 };
    }
    let n = grid.max(3);
    let step = (hi - lo) / T::lit(n as f64);
    let mut best_i = 0;
    let mut best_v = T::neg_infinity();
    for i in 0..=n {
        let x = lo + step * T::lit(i as f64);
        let v = f(x);
        if v >= best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + step * T::lit(best_i.saturating_sub(1) as f64);
    let b = (lo + step * T::lit((best_i + 1).min(n) as f64)).min(hi);
    let mut found = golden_max(&mut f, a, b, width);
    found.evaluations += n + 1;
    if best_v > found.value {
        found.x = lo + step * T::lit(best_i as f64);
        found.value = best_v;
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let m = golden_max(|x: f64| -(x - 1.3).powi(2), -5.0, 5.0, 1e-9);
        assert!((m.x - 1.3).abs() < 1e-8);
    }

    #[test]
    fn boundary_maximum() {
        let m = golden_max(|x: f64| x, 0.0, 2.0, 1e-9);
        assert_eq!(m.x, 2.0);
        let m = golden_max(|x: f64| -x, 0.0, 2.0, 1e-9);
        assert_eq!(m.x, 0.0);
    }

    #[test]
    fn plateau_then_peak() {
        let f = |x: f64| if x < 3.0 { 0.0 } else { (-(x - 4.0).powi(2)).exp() };
        let m = bracketed_golden_max(f, 0.0, 10.0, 40, 1e-9);
        assert!((m.x - 4.0).abs() < 1e-6);
    }
}
