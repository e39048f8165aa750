// Float helpers; `core` has no libm.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::sqrt(x * x + y * y)
}

/// `|s|^(e-2) s`, with value 0 at `s = 0`.
#[inline]
pub(crate) fn signed_pow(s: f64, e: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        let a = s.abs();
        a.copysign(s) * libm::pow(a, e - 2.0)
    }
}
