//! Float intrinsics that live in `std` but not in `core`.

#[cfg(feature = "std")]
pub(crate) fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

#[cfg(not(feature = "std"))]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[cfg(feature = "std")]
pub(crate) fn exp(x: f64) -> f64 {
    x.exp()
}

#[cfg(not(feature = "std"))]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[cfg(feature = "std")]
pub(crate) fn expm1(x: f64) -> f64 {
    x.exp_m1()
}

#[cfg(not(feature = "std"))]
pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[cfg(feature = "std")]
pub(crate) fn log10(x: f64) -> f64 {
    x.log10()
}

#[cfg(not(feature = "std"))]
pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[cfg(feature = "std")]
pub(crate) fn abs(x: f64) -> f64 {
    x.abs()
}

#[cfg(not(feature = "std"))]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[cfg(feature = "std")]
pub(crate) fn floor(x: f64) -> f64 {
    x.floor()
}

#[cfg(not(feature = "std"))]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Exact integer power by repeated multiplication. `powi` is std-only.
pub(crate) fn ipow(x: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    let mut base = x;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}
