//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Brent's method (bisection / secant / inverse quadratic interpolation).
///
/// `f(low)` and `f(high)` must have opposite signs (or one be zero).
/// Stops when the bracket is narrower than `xtol` or after `max_iter`
/// iterations.
pub fn brent<F>(mut f: F, low: f64, high: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (low, high);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange {
            low,
            high,
            grad_low: fa,
            grad_high: fb,
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::RootNotFound {
        iterations: max_iter,
        width: (c - b).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-14, 60).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn reports_missing_sign_change() {
        let err = brent(|x| Ok(x * x + 1.0), -1.0, 2.0, 1e-12, 60).unwrap_err();
        match err {
            Error::NoSignChange {
                grad_low,
                grad_high,
                ..
            } => {
                assert_eq!(grad_low, 2.0);
                assert_eq!(grad_high, 5.0);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn endpoint_root() {
        assert_eq!(brent(|x| Ok(x - 1.0), 1.0, 3.0, 1e-12, 60).unwrap(), 1.0);
    }
}
