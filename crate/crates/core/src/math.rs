// Float intrinsics: the platform libm under `std`, the pure-Rust `libm`
// crate otherwise.

#[cfg(feature = "std")]
mod imp {
    #[inline]
    pub(crate) fn exp(x: f64) -> f64 {
        x.exp()
    }

    #[inline]
    pub(crate) fn ln(x: f64) -> f64 {
        x.ln()
    }

    #[inline]
    pub(crate) fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }

    #[inline]
    pub(crate) fn ceil(x: f64) -> f64 {
        x.ceil()
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    #[inline]
    pub(crate) fn exp(x: f64) -> f64 {
        libm::exp(x)
    }

    #[inline]
    pub(crate) fn ln(x: f64) -> f64 {
        libm::log(x)
    }

    #[inline]
    pub(crate) fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }

    #[inline]
    pub(crate) fn ceil(x: f64) -> f64 {
        libm::ceil(x)
    }
}

pub(crate) use imp::*;
