//! Phase damping of the system+apparatus state by a thermal bosonic bath.
//!
//! The apparatus couples to the bath through `sigma_z^A sum_k (g_k b_k^+ + g_k^* b_k)`.
//! In the `|s a>` basis every element of `rho_SA` evolves independently:
//!
//! ```text
//! <s_p a_p| rho(t) |s_q a_q> = e^{-i w0 t (s_p - s_q)} e^{-i w0 t (a_p - a_q)}
//!                              e^{-(a_p - a_q)^2 I1(t)} <s_p a_p| rho(0) |s_q a_q>
//! I1(t) = ∫_0^∞ dw J(w) (1 - cos wt) / w^2 coth(beta w / 2)
//! ```
//!
//! For a discrete bath the integral becomes a sum over modes.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hilbert::{validate_density, ComplexMatrix, DensityOperator};
use crate::quadrature::{integrate, Estimate, QuadratureOptions};
use crate::scalar::{cexp, phase, Real};

/// Bath temperature. Zero temperature is kept explicit so that
/// `coth(beta w / 2)` is exactly 1 instead of overflowing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Temperature<T: Real> {
    Zero,
    Beta(T),
}

impl<T: Real> Temperature<T> {
    /// `beta = +inf` maps to [`Temperature::Zero`].
    pub fn from_beta(beta: T) -> Result<Self> {
        if !(beta > T::zero()) {
            return Err(Error::Parameter(format!(
                "inverse temperature must be positive, got {beta}"
            )));
        }
        if beta.is_finite() {
            Ok(Temperature::Beta(beta))
        } else {
            Ok(Temperature::Zero)
        }
    }

    pub fn beta(&self) -> Option<T> {
        match *self {
            Temperature::Zero => None,
            Temperature::Beta(b) => Some(b),
        }
    }

    /// `coth(beta * omega / 2)` for `omega > 0`.
    pub fn coth_half(&self, omega: T) -> T {
        match *self {
            Temperature::Zero => T::one(),
            Temperature::Beta(beta) => {
                let x = beta * omega * T::lit(0.5);
                if x < T::lit(1e-6) {
                    T::one() / x + x / T::lit(3.0)
                } else {
                    T::one() / x.tanh()
                }
            }
        }
    }
}

/// One bath oscillator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode<T: Real> {
    pub omega: T,
    pub coupling: Complex<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BathSpec<T: Real> {
    /// Finite set of oscillators.
    Discrete {
        modes: Vec<Mode<T>>,
        temperature: Temperature<T>,
    },
    /// Continuum with `J(w) = eta w e^{-w / omega_c}`.
    Ohmic {
        eta: T,
        omega_c: T,
        temperature: Temperature<T>,
    },
}

impl<T: Real> BathSpec<T> {
    pub fn discrete(modes: Vec<Mode<T>>, temperature: Temperature<T>) -> Result<Self> {
        for (k, m) in modes.iter().enumerate() {
            if !(m.omega.is_finite() && m.omega > T::zero()) {
                return Err(Error::Parameter(format!(
                    "mode {k}: frequency must be positive, got {}",
                    m.omega
                )));
            }
            if !(m.coupling.re.is_finite() && m.coupling.im.is_finite()) {
                return Err(Error::Parameter(format!(
                    "mode {k}: coupling must be finite"
                )));
            }
        }
        Ok(BathSpec::Discrete { modes, temperature })
    }

    pub fn ohmic(eta: T, omega_c: T, temperature: Temperature<T>) -> Result<Self> {
        if !(eta.is_finite() && eta > T::zero()) {
            return Err(Error::Parameter(format!("eta must be positive, got {eta}")));
        }
        if !(omega_c.is_finite() && omega_c > T::zero()) {
            return Err(Error::Parameter(format!(
                "omega_c must be positive, got {omega_c}"
            )));
        }
        Ok(BathSpec::Ohmic {
            eta,
            omega_c,
            temperature,
        })
    }

    pub fn temperature(&self) -> Temperature<T> {
        match self {
            BathSpec::Discrete { temperature, .. } | BathSpec::Ohmic { temperature, .. } => {
                *temperature
            }
        }
    }
}

/// Spectral density `J(omega)` of a continuum bath.
pub fn spectral_density<T: Real>(spec: &BathSpec<T>, omega: T) -> Result<T> {
    if !(omega >= T::zero()) {
        return Err(Error::Parameter(format!(
            "omega must be nonnegative, got {omega}"
        )));
    }
    match spec {
        BathSpec::Ohmic { eta, omega_c, .. } => Ok(*eta * omega * (-omega / *omega_c).exp()),
        BathSpec::Discrete { .. } => Err(Error::Parameter(
            "a discrete bath has no pointwise spectral density; use i1_discrete".into(),
        )),
    }
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::Parameter(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// Integrand of `I1` for the ohmic family, with the `omega -> 0` limit
/// filled in analytically.
fn ohmic_integrand<T: Real>(eta: T, omega_c: T, temperature: Temperature<T>, t: T, omega: T) -> T {
    if omega <= T::zero() {
        return match temperature {
            Temperature::Zero => T::zero(),
            Temperature::Beta(beta) => eta * t * t / beta,
        };
    }
    let s = (omega * t * T::lit(0.5)).sin();
    // J(w)(1 - cos wt)/w^2 = eta e^{-w/wc} 2 sin^2(wt/2) / w
    eta * (-omega / omega_c).exp() * T::lit(2.0) * s * s / omega * temperature.coth_half(omega)
}

/// `I1(t)` for an ohmic bath by adaptive quadrature, with the achieved
/// error bound. The bound includes a closed-form estimate of the truncated
/// tail beyond the upper integration limit.
pub fn i1_integral_with<T: Real>(
    spec: &BathSpec<T>,
    t: T,
    opts: &QuadratureOptions<T>,
) -> Result<Estimate<T>> {
    check_time(t)?;
    let (eta, omega_c, temperature) = match spec {
        BathSpec::Ohmic {
            eta,
            omega_c,
            temperature,
        } => (*eta, *omega_c, *temperature),
        BathSpec::Discrete { .. } => {
            return Err(Error::Parameter(
                "i1_integral needs a continuum bath; use i1_discrete".into(),
            ))
        }
    };
    if t == T::zero() {
        return Ok(Estimate {
            value: T::zero(),
            error: T::zero(),
            segments: 0,
        });
    }
    let upper = omega_c * T::lit(50.0).max(T::lit(10.0) / (omega_c * t));
    // About two panels per oscillation of cos(wt).
    let periods = (upper * t / T::pi()).to_f64().ceil();
    let panels = (periods as usize).clamp(8, opts.max_segments / 2);
    let mut est = integrate(
        |w| ohmic_integrand(eta, omega_c, temperature, t, w),
        T::zero(),
        upper,
        panels,
        opts,
    )?;

    // Beyond `upper`: integrand <= eta e^{-w/wc} (2/upper) coth(beta upper/2).
    let tail = eta * T::lit(2.0) / upper
        * temperature.coth_half(upper)
        * omega_c
        * (-upper / omega_c).exp();
    est.error += tail;
    Ok(est)
}

/// `I1(t)` for an ohmic bath.
pub fn i1_integral<T: Real>(spec: &BathSpec<T>, t: T) -> Result<T> {
    Ok(i1_integral_with(spec, t, &QuadratureOptions::default())?.value)
}

/// Discrete analogue of `I1`: `sum_k |g_k|^2 (1 - cos w_k t)/w_k^2 coth(beta w_k / 2)`.
pub fn i1_discrete<T: Real>(spec: &BathSpec<T>, t: T) -> Result<T> {
    check_time(t)?;
    match spec {
        BathSpec::Discrete { modes, temperature } => Ok(modes
            .iter()
            .map(|m| {
                let s = (m.omega * t * T::lit(0.5)).sin();
                m.coupling.norm_sqr() * T::lit(2.0) * s * s / (m.omega * m.omega)
                    * temperature.coth_half(m.omega)
            })
            .fold(T::zero(), |a, b| a + b)),
        BathSpec::Ohmic { .. } => Err(Error::Parameter("i1_discrete needs a discrete bath".into())),
    }
}

/// `I1(t)` for either kind of bath.
pub fn decoherence_exponent<T: Real>(spec: &BathSpec<T>, t: T) -> Result<T> {
    match spec {
        BathSpec::Discrete { .. } => i1_discrete(spec, t),
        BathSpec::Ohmic { .. } => i1_integral(spec, t),
    }
}

/// `varphi_k(t) = (1 - e^{i w t}) / w`.
pub fn varphi<T: Real>(omega: T, t: T) -> Complex<T> {
    (Complex::new(T::one(), T::zero()) - phase(omega * t)) / omega
}

/// Scalar prefactor of the bath-coupled propagator,
/// `exp(-sum |g|^2/w varphi^*) exp(i t sum |g|^2/w) exp(1/2 sum |g|^2 |varphi|^2)`.
/// It has unit modulus and cancels from `rho`.
pub fn phi_prefactor<T: Real>(spec: &BathSpec<T>, t: T) -> Result<Complex<T>> {
    check_time(t)?;
    let modes = match spec {
        BathSpec::Discrete { modes, .. } => modes,
        BathSpec::Ohmic { .. } => {
            return Err(Error::Parameter(
                "phi_prefactor needs a discrete bath".into(),
            ))
        }
    };
    let mut exponent = Complex::new(T::zero(), T::zero());
    for m in modes {
        let g2 = m.coupling.norm_sqr();
        let v = varphi(m.omega, t);
        exponent -= v.conj() * (g2 / m.omega);
        exponent += Complex::new(T::zero(), t * g2 / m.omega);
        exponent += Complex::new(g2 * v.norm_sqr() * T::lit(0.5), T::zero());
    }
    Ok(cexp(exponent))
}

/// `sigma_z` labels `(s, a)` of basis index `i` in `|++>, |+->, |-+>, |-->`.
pub fn labels(i: usize) -> (i32, i32) {
    let s = if i < 2 { 1 } else { -1 };
    let a = if i.is_multiple_of(2) { 1 } else { -1 };
    (s, a)
}

fn check_label(x: i32) -> Result<()> {
    if x == 1 || x == -1 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "sigma_z label must be +1 or -1, got {x}"
        )))
    }
}

/// Maps one element `<s_p a_p|rho(0)|s_q a_q>` to time `t` given `I1(t)`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_element<T: Real>(
    rho0_elem: Complex<T>,
    s_p: i32,
    a_p: i32,
    s_q: i32,
    a_q: i32,
    omega0: T,
    i1: T,
    t: T,
) -> Result<Complex<T>> {
    for x in [s_p, a_p, s_q, a_q] {
        check_label(x)?;
    }
    if s_p == s_q && a_p == a_q {
        return Ok(rho0_elem);
    }
    let ds = T::lit((s_p - s_q) as f64);
    let da = T::lit((a_p - a_q) as f64);
    let rotation = phase(-omega0 * t * (ds + da));
    let damping = (-da * da * i1).exp();
    Ok(rho0_elem * rotation * damping)
}

/// Applies the element map to a full 4x4 state for a precomputed `I1(t)`.
pub fn evolve_density_with_i1<T: Real>(
    rho0: &DensityOperator<T>,
    omega0: T,
    i1: T,
    t: T,
) -> Result<DensityOperator<T>> {
    if rho0.dims() != [2, 2] {
        return Err(Error::Dimension(format!(
            "expected a 2x2 system+apparatus state, got {:?}",
            rho0.dims()
        )));
    }
    let mut entries = Vec::with_capacity(16);
    for p in 0..4 {
        let (s_p, a_p) = labels(p);
        for q in 0..4 {
            let (s_q, a_q) = labels(q);
            entries.push(evolve_element(
                rho0.get(p, q),
                s_p,
                a_p,
                s_q,
                a_q,
                omega0,
                i1,
                t,
            )?);
        }
    }
    validate_density(ComplexMatrix::from_row_major(4, 4, entries)?, &[2, 2])
}

/// `rho_SA(t)` under phase damping by `spec`.
pub fn evolve_density<T: Real>(
    rho0: &DensityOperator<T>,
    omega0: T,
    spec: &BathSpec<T>,
    t: T,
) -> Result<DensityOperator<T>> {
    let i1 = decoherence_exponent(spec, t)?;
    evolve_density_with_i1(rho0, omega0, i1, t)
}

/// Time series of the decoherence exponent and the `|++><--|` coherence.
#[derive(Clone, Debug)]
pub struct CoherenceCurve<T: Real> {
    pub times: Vec<T>,
    pub i1_values: Vec<T>,
    /// `(1, 4)` element of `rho_SA(t)`.
    pub coherence_14: Vec<Complex<T>>,
    pub states: Vec<DensityOperator<T>>,
}

impl<T: Real> CoherenceCurve<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn coherence_curve<T: Real>(
    rho0: &DensityOperator<T>,
    omega0: T,
    spec: &BathSpec<T>,
    times: &[T],
) -> Result<CoherenceCurve<T>> {
    check_ascending(times)?;
    let mut curve = CoherenceCurve {
        times: times.to_vec(),
        i1_values: Vec::with_capacity(times.len()),
        coherence_14: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let i1 = decoherence_exponent(spec, t)?;
        let rho = evolve_density_with_i1(rho0, omega0, i1, t)?;
        curve.i1_values.push(i1);
        curve.coherence_14.push(rho.get(0, 3));
        curve.states.push(rho);
    }
    Ok(curve)
}

pub(crate) fn check_ascending<T: Real>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Parameter("time grid is empty".into()));
    }
    for &t in times {
        check_time(t)?;
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("time grid must be ascending".into()));
    }
    Ok(())
}
