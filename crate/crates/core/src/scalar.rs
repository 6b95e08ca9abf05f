//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use nalgebra as na;
use num_complex::Complex;
use num_traits as nt;

/// Real floating point type the simulator is generic over.
///
/// The tolerance hooks return the thresholds that the invariants in this
/// crate are checked against. For `f64` they are the documented values
/// (`1e-10` for Hermiticity/trace/positivity, `1e-12` for state norms);
/// `f32` gets thresholds scaled to its precision.
pub trait Real:
    Copy + Debug + Display + Send + Sync + nt::FloatConst + nt::FromPrimitive + na::RealField + 'static
{
    /// Tolerance on invariants that should hold up to accumulated rounding.
    fn check_tol() -> Self;
    /// Tolerance on the unit norm of pure states.
    fn norm_tol() -> Self;
    /// Default relative tolerance for adaptive quadrature.
    fn quad_rel_tol() -> Self;

    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("finite literal")
    }

    /// Lossy conversion to `f64` for reporting.
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn check_tol() -> Self {
        1e-10
    }
    fn norm_tol() -> Self {
        1e-12
    }
    fn quad_rel_tol() -> Self {
        1e-9
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn check_tol() -> Self {
        1e-4
    }
    fn norm_tol() -> Self {
        1e-5
    }
    fn quad_rel_tol() -> Self {
        1e-5
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Shorthand for building a complex number from `f64` parts.
#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// `e^{i theta}`.
#[inline]
pub fn phase<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Complex exponential.
#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.re.exp();
    Complex::new(r * z.im.cos(), r * z.im.sin())
}

/// Complex modulus.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}
