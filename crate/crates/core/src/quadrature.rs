//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature on finite intervals.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::scalar::Real;

// Kronrod abscissae on [-1, 1], positive half, outermost first. Odd indices
// are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077968200652349,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions<T: Real> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_segments: usize,
}

impl<T: Real> Default for QuadratureOptions<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::quad_rel_tol(),
            abs_tol: T::zero(),
            max_segments: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T: Real> {
    pub value: T,
    pub error: T,
    pub segments: usize,
}

#[derive(Clone, Copy, Debug)]
struct Segment<T: Real> {
    a: T,
    b: T,
    value: T,
    error: T,
    roundoff: T,
}

/// One 21-point Kronrod rule on `[a, b]` with the embedded Gauss estimate
/// as error indicator.
fn gk21<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Segment<T> {
    let half = T::lit(0.5);
    let center = (a + b) * half;
    let half_len = (b - a) * half;
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[10]);
    let mut gauss = T::zero();
    let mut abs_sum = fc.abs() * T::lit(WGK[10]);
    for j in 0..10 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let w = T::lit(WGK[j]);
        kronrod += w * (f1 + f2);
        abs_sum += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let value = kronrod * half_len;
    let roundoff = T::lit(50.0) * T::default_epsilon() * abs_sum * half_len.abs();
    let error = ((kronrod - gauss) * half_len).abs().max(roundoff);
    Segment {
        a,
        b,
        value,
        error,
        roundoff,
    }
}

/// Integrates `f` over `[a, b]`, starting from `initial_panels` equal panels
/// and bisecting the panel with the largest error until the total error
/// estimate is below `max(abs_tol, rel_tol * |value|)`, or below the
/// accumulated rounding floor when that is larger.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    initial_panels: usize,
    opts: &QuadratureOptions<T>,
) -> Result<Estimate<T>> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Parameter(format!(
            "invalid integration interval [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: T::zero(),
            segments: 0,
        });
    }
    let panels = initial_panels.clamp(1, opts.max_segments.max(1));
    let width = (b - a) / T::lit(panels as f64);
    let mut segments: Vec<Segment<T>> = (0..panels)
        .map(|i| {
            let lo = a + width * T::lit(i as f64);
            let hi = if i + 1 == panels {
                b
            } else {
                a + width * T::lit((i + 1) as f64)
            };
            gk21(&f, lo, hi)
        })
        .collect();

    let totals = |segs: &[Segment<T>]| {
        segs.iter()
            .fold((T::zero(), T::zero(), T::zero()), |(v, e, r), s| {
                (v + s.value, e + s.error, r + s.roundoff)
            })
    };
    let (mut value, mut error, mut roundoff) = totals(&segments);
    loop {
        if !(value.is_finite() && error.is_finite()) {
            return Err(Error::Quadrature {
                estimate: value.to_f64(),
                error_bound: error.to_f64(),
            });
        }
        let target = opts
            .abs_tol
            .max(opts.rel_tol * value.abs())
            .max(roundoff * T::lit(2.0));
        if error <= target {
            break;
        }
        if segments.len() >= opts.max_segments {
            return Err(Error::Quadrature {
                estimate: value.to_f64(),
                error_bound: error.to_f64(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, be), (i, s)| {
                if s.error > be {
                    (i, s.error)
                } else {
                    (bi, be)
                }
            });
        let seg = segments.swap_remove(worst);
        let mid = (seg.a + seg.b) * T::lit(0.5);
        if !(mid > seg.a && mid < seg.b) {
            // Interval cannot be split further at this precision.
            return Err(Error::Quadrature {
                estimate: value.to_f64(),
                error_bound: error.to_f64(),
            });
        }
        let left = gk21(&f, seg.a, mid);
        let right = gk21(&f, mid, seg.b);
        value += left.value + right.value - seg.value;
        error += left.error + right.error - seg.error;
        roundoff += left.roundoff + right.roundoff - seg.roundoff;
        segments.push(left);
        segments.push(right);
    }
    let (value, error, _) = totals(&segments);
    Ok(Estimate {
        value,
        error,
        segments: segments.len(),
    })
}
