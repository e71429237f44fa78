//! Quadrature and overflow-safe exponential helpers.

/// Exponents above this are handled in log space.
pub const LOG_SPACE_THRESHOLD: f64 = 500.0;

/// `ln |e^x - 1|` without overflow for large `x`.
pub fn ln_abs_expm1(x: f64) -> f64 {
    if x > LOG_SPACE_THRESHOLD {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().abs().ln()
    }
}

/// Composite Simpson rule on `[a, b]` with `n` intervals (`n` is rounded up to even).
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    if h == 0.0 {
        return 0.0;
    }
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Outcome of a Simpson refinement sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub coarse: f64,
    pub fine: f64,
    /// Richardson-extrapolated value `fine + (fine - coarse) / 15`.
    pub value: f64,
    pub intervals: usize,
}

/// Doubles the interval count starting from `n` until two successive Simpson
/// estimates agree to `rel_tol`, up to `max_doublings` times. Returns the
/// last pair either way; `converged` tells the caller which case it got.
pub fn simpson_refine<F>(
    mut estimate: F,
    n: usize,
    rel_tol: f64,
    max_doublings: u32,
) -> (Refined, bool)
where
    F: FnMut(usize) -> f64,
{
    let mut n = n.max(2);
    let mut coarse = estimate(n);
    let mut last = Refined {
        coarse,
        fine: coarse,
        value: coarse,
        intervals: n,
    };
    for _ in 0..max_doublings {
        n *= 2;
        let fine = estimate(n);
        last = Refined {
            coarse,
            fine,
            value: fine + (fine - coarse) / 15.0,
            intervals: n,
        };
        if (fine - coarse).abs() <= rel_tol * fine.abs().max(f64::MIN_POSITIVE) {
            return (last, true);
        }
        coarse = fine;
    }
    (last, false)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ln_abs_expm1_matches_direct_form_below_threshold() {
        for &x in &[-30.0, -1.0, -1e-8, 1e-8, 1.0, 40.0, 499.0] {
            let direct = f64::exp_m1(x).abs().ln();
            assert!((ln_abs_expm1(x) - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
        assert!((ln_abs_expm1(800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_reports_non_convergence() {
        let (r, ok) = simpson_refine(|n| 1.0 / n as f64, 10, 1e-12, 2);
        assert!(!ok);
        assert_eq!(r.intervals, 40);
    }

    #[test]
    fn normal_cdf_symmetry() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.3) + normal_cdf(-1.3) - 1.0).abs() < 1e-14);
    }
}
