//! Scalar float primitives, routed through `libm` when built without std.

#[cfg(feature = "std")]
macro_rules! float_fn {
    ($name:ident, $libm:ident, 1) => {
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            f64::$name(x)
        }
    };
}

#[cfg(not(feature = "std"))]
macro_rules! float_fn {
    ($name:ident, $libm:ident, 1) => {
        #[inline(always)]
        pub(crate) fn $name(x: f64) -> f64 {
            libm::$libm(x)
        }
    };
}

float_fn!(exp, exp, 1);
float_fn!(ln, log, 1);
float_fn!(ln_1p, log1p, 1);
float_fn!(sqrt, sqrt, 1);
float_fn!(abs, fabs, 1);
float_fn!(cos, cos, 1);

/// ln Γ(x); libm on both paths since std has no lgamma.
#[inline(always)]
pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// ln(1 + e^x) without overflow on either tail.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 36.0 {
        x
    } else if x < -36.0 {
        exp(x)
    } else {
        ln_1p(exp(x))
    }
}
