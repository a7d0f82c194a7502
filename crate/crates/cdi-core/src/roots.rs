//! Safeguarded scalar root finding: Newton iteration inside a sign-change
//! bracket, falling back to bisection whenever a Newton step is invalid.

/// Outcome of a failed solve, carrying the last residual for diagnostics.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NoConvergence {
    pub last_residual: f64,
    pub iterations: u32,
}

pub(crate) struct RootConfig {
    /// Absolute tolerance on |f(x)|.
    pub tol_f: f64,
    /// Relative tolerance on the bracket width.
    pub tol_x: f64,
    pub max_iter: u32,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            tol_f: 1e-12,
            tol_x: 1e-15,
            max_iter: 100,
        }
    }
}

/// Finds the root of `f` in `[lo, hi]`. `f` returns `(value, derivative)`.
///
/// Requires a sign change over the bracket; infinite values are accepted
/// (their sign is still meaningful), NaN is not. The bracket endpoints are
/// never returned without evaluation, so a root exactly at an endpoint is
/// handled.
pub(crate) fn newton_bisect<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    cfg: &RootConfig,
) -> Result<f64, NoConvergence>
where
    F: FnMut(f64) -> (f64, f64),
{
    debug_assert!(lo <= hi);
    let (f_lo, _) = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let (f_hi, _) = f(hi);
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(NoConvergence {
            last_residual: if f_lo.is_nan() { f_lo } else { f_hi },
            iterations: 0,
        });
    }

    let mut a = lo;
    let mut b = hi;
    let mut fa = f_lo;
    let mut x = 0.5 * (a + b);
    let mut last = f64::INFINITY;
    for it in 0..cfg.max_iter {
        let (fx, dfx) = f(x);
        last = fx;
        if fx == 0.0 || fx.abs() <= cfg.tol_f {
            return Ok(x);
        }
        if fx.is_nan() {
            return Err(NoConvergence {
                last_residual: fx,
                iterations: it,
            });
        }
        if (fx > 0.0) == (fa > 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        if (b - a).abs() <= cfg.tol_x * a.abs().max(b.abs()).max(1e-300) {
            return Ok(x);
        }
        // Newton candidate, kept only if it lands strictly inside the bracket.
        let step = fx / dfx;
        let candidate = x - step;
        x = if candidate.is_finite() && candidate > a && candidate < b {
            candidate
        } else {
            0.5 * (a + b)
        };
    }
    Err(NoConvergence {
        last_residual: last,
        iterations: cfg.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    #[test]
    fn finds_cubic_root() {
        let f = |x: f64| (x * x * x - 2.0, 3.0 * x * x);
        let r = newton_bisect(f, 0.0, 2.0, &RootConfig::default()).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn survives_infinite_endpoint_values() {
        // exp overflow at the left end; sign is still usable
        let f = |x: f64| (x * x - math::exp(200.0 / x), 0.0);
        let r = newton_bisect(f, 1e-3, 1e4, &RootConfig::default()).unwrap();
        assert!((r * r - math::exp(200.0 / r)).abs() < 1e-6 * r * r);
    }

    #[test]
    fn rejects_no_sign_change() {
        let f = |x: f64| (x * x + 1.0, 2.0 * x);
        assert!(newton_bisect(f, -1.0, 1.0, &RootConfig::default()).is_err());
    }

    #[test]
    fn root_at_endpoint() {
        let f = |x: f64| (x - 1.0, 1.0);
        let r = newton_bisect(f, 1.0, 2.0, &RootConfig::default()).unwrap();
        assert_eq!(r, 1.0);
    }
}
