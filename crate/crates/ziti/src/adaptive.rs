//! Adaptive Simpson integration.
//!
//! Used to compute the profile constants and as a reference integrator for
//! the basis Gram matrix and for catalog values without a closed form.

use crate::{Error, Real, Result};

/// Default absolute tolerance.
pub const TOL: f64 = 1e-12;
/// Default maximal bisection depth.
pub const MAX_DEPTH: usize = 60;
const MIN_DEPTH: usize = 4;

struct Seg<T> {
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: usize,
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Subintervals are bisected until the Richardson estimate falls below their
/// share of `tol` or below the round-off level of the scalar type. Reaching
/// `max_depth` without that is reported as an error.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    tol: T,
    max_depth: usize,
) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let eval = |x: T| -> Result<T> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("x = {}", x.as_f64())))
        }
    };
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let fifteen = T::lit(15.0);
    let floor = T::lit(4.0) * T::epsilon();

    let m = (a + b) / two;
    let (fa, fm, fb) = (eval(a)?, eval(m)?, eval(b)?);
    let mut stack = vec![Seg {
        a,
        b,
        fa,
        fm,
        fb,
        whole: (b - a) / six * (fa + T::lit(4.0) * fm + fb),
        tol,
        depth: 0,
    }];
    let mut total = T::zero();
    let mut comp = T::zero();
    while let Some(s) = stack.pop() {
        let m = (s.a + s.b) / two;
        let lm = (s.a + m) / two;
        let rm = (m + s.b) / two;
        let (flm, frm) = (eval(lm)?, eval(rm)?);
        let left = (m - s.a) / six * (s.fa + T::lit(4.0) * flm + s.fm);
        let right = (s.b - m) / six * (s.fm + T::lit(4.0) * frm + s.fb);
        let delta = left + right - s.whole;
        let settled = s.depth >= MIN_DEPTH
            && (delta.abs() <= fifteen * s.tol
                || delta.abs() <= floor * (left.abs() + right.abs())
                || lm <= s.a
                || rm >= s.b);
        if settled {
            // Kahan summation keeps thousands of leaves from eating the tolerance.
            let y = left + right + delta / fifteen - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
        } else if s.depth >= max_depth {
            return Err(Error::Integration {
                a: s.a.as_f64(),
                b: s.b.as_f64(),
            });
        } else {
            let tol = s.tol / two;
            let depth = s.depth + 1;
            stack.push(Seg {
                a: s.a,
                b: m,
                fa: s.fa,
                fm: flm,
                fb: s.fm,
                whole: left,
                tol,
                depth,
            });
            stack.push(Seg {
                a: m,
                b: s.b,
                fa: s.fm,
                fm: frm,
                fb: s.fb,
                whole: right,
                tol,
                depth,
            });
        }
    }
    Ok(total)
}

/// [`adaptive_simpson`] with the default tolerance and depth.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T) -> Result<T> {
    adaptive_simpson(f, a, b, T::lit(TOL), MAX_DEPTH)
}
