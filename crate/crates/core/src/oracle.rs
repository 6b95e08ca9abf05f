//! Brute-force reference for the phase-damping map.
//!
//! The full Hamiltonian on `S (x) A (x) mode_1 (x) ... (x) mode_K` is
//!
//! ```text
//! H = w0 (sz^S + sz^A) + sz^A sum_k (g_k b_k^+ + g_k^* b_k) + sum_k w_k b_k^+ b_k
//! ```
//!
//! with every mode truncated at `n_max` quanta. Two evaluation routes exist:
//!
//! * [`DenseOracle`] exponentiates the whole matrix. Exact but limited to
//!   a few thousand dimensions.
//! * [`FactorizedOracle`] uses that `H` is diagonal in `|s a>` and a sum of
//!   commuting single-mode terms inside each block, so the bath trace
//!   factorizes over modes into `(n_max+1)`-dimensional problems. This is the
//!   same truncated model, just evaluated without forming the product space.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::bath::{evolve_density_with_i1, i1_discrete, labels, BathSpec, Mode, Temperature};
use crate::error::{Error, Result};
use crate::hilbert::{validate_density, ComplexMatrix, DensityOperator, HermitianEigen};
use crate::scalar::{phase, Real};

pub const DEFAULT_DIMENSION_CAP: usize = 16384;
pub const DEFAULT_TAIL_LIMIT: f64 = 1e-6;
const MAX_CUTOFF: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedBath<T: Real> {
    modes: Vec<Mode<T>>,
    n_max: usize,
    temperature: Temperature<T>,
}

impl<T: Real> TruncatedBath<T> {
    /// Any cutoff is accepted here; adequacy is checked where it matters.
    pub fn new(modes: Vec<Mode<T>>, n_max: usize, temperature: Temperature<T>) -> Result<Self> {
        BathSpec::discrete(modes.clone(), temperature)?;
        Ok(Self {
            modes,
            n_max,
            temperature,
        })
    }

    /// Smallest common cutoff with every per-mode tail below `limit`.
    pub fn with_adequate_cutoff(
        modes: Vec<Mode<T>>,
        temperature: Temperature<T>,
        limit: T,
    ) -> Result<Self> {
        let mut bath = Self::new(modes, 0, temperature)?;
        bath.n_max = bath.suggested_cutoff(limit)?;
        Ok(bath)
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn temperature(&self) -> Temperature<T> {
        self.temperature
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self {
            n_max,
            ..self.clone()
        }
    }

    pub fn spec(&self) -> BathSpec<T> {
        BathSpec::Discrete {
            modes: self.modes.clone(),
            temperature: self.temperature,
        }
    }

    /// Product-space dimension `4 (n_max+1)^K`, `None` on overflow.
    pub fn total_dimension(&self) -> Option<usize> {
        let per = self.n_max.checked_add(1)?;
        let k = u32::try_from(self.modes.len()).ok()?;
        per.checked_pow(k)?.checked_mul(4)
    }

    /// Thermal weight above the cutoff, `sum_{n > n_max} e^{-n beta w}(1 - e^{-beta w}) = e^{-(n_max+1) beta w}`.
    pub fn thermal_tail(&self, mode: usize) -> T {
        thermal_tail(self.modes[mode].omega, self.temperature, self.n_max)
    }

    /// Weight pushed above the cutoff by the coupling. The state of a mode is
    /// a thermal state displaced by at most `2|g|/w`; its occupation spread is
    /// estimated by a Poisson tail of mean `(2|g|/w)^2 (2 n_bar + 1)`.
    pub fn displacement_tail(&self, mode: usize) -> T {
        displacement_tail(&self.modes[mode], self.temperature, self.n_max)
    }

    pub fn mode_tail(&self, mode: usize) -> T {
        self.thermal_tail(mode) + self.displacement_tail(mode)
    }

    /// Declared bound on the elementwise truncation error of the reduced state
    /// for times up to `horizon`. Per mode it adds the renormalization error
    /// `2 q` of the truncated initial state and a Duhamel estimate
    /// `2 |g| sqrt(n_max+1) horizon sqrt(q)` of the flux through the top level,
    /// where `q` is [`mode_tail`](Self::mode_tail).
    pub fn truncation_bound(&self, horizon: T) -> T {
        let top = T::lit((self.n_max + 1) as f64).sqrt();
        (0..self.modes.len())
            .map(|k| {
                let q = self.mode_tail(k);
                let g = self.modes[k].coupling.norm_sqr().sqrt();
                T::lit(2.0) * (q + g * top * horizon * q.sqrt())
            })
            .fold(T::zero(), |a, b| a + b)
    }

    fn suggested_cutoff(&self, limit: T) -> Result<usize> {
        let mut best = 0;
        for m in &self.modes {
            let n = (0..=MAX_CUTOFF)
                .find(|&n| {
                    thermal_tail(m.omega, self.temperature, n)
                        + displacement_tail(m, self.temperature, n)
                        < limit
                })
                .ok_or_else(|| {
                    Error::Parameter(format!("no cutoff up to {MAX_CUTOFF} reaches tail {limit}"))
                })?;
            best = best.max(n);
        }
        Ok(best)
    }

    /// Errors with the first mode whose tail is not below `limit`.
    pub fn check_adequacy(&self, limit: T) -> Result<()> {
        for k in 0..self.modes.len() {
            let tail = self.mode_tail(k);
            if !(tail < limit) {
                return Err(Error::InadequateCutoff {
                    mode: k,
                    n_max: self.n_max,
                    tail: tail.to_f64(),
                    limit: limit.to_f64(),
                    suggested: self.suggested_cutoff(limit).unwrap_or(MAX_CUTOFF),
                });
            }
        }
        Ok(())
    }

    /// Per-mode Fock populations `e^{-n beta w} / Z`, renormalized on `0..=n_max`.
    pub fn thermal_populations(&self) -> Vec<Vec<T>> {
        self.modes
            .iter()
            .map(|m| {
                let mut p: Vec<T> = match self.temperature {
                    Temperature::Zero => (0..=self.n_max)
                        .map(|n| if n == 0 { T::one() } else { T::zero() })
                        .collect(),
                    Temperature::Beta(beta) => (0..=self.n_max)
                        .map(|n| (-T::lit(n as f64) * beta * m.omega).exp())
                        .collect(),
                };
                let z = p.iter().fold(T::zero(), |a, &b| a + b);
                p.iter_mut().for_each(|x| *x /= z);
                p
            })
            .collect()
    }
}

fn thermal_tail<T: Real>(omega: T, temperature: Temperature<T>, n_max: usize) -> T {
    match temperature {
        Temperature::Zero => T::zero(),
        Temperature::Beta(beta) => (-T::lit((n_max + 1) as f64) * beta * omega).exp(),
    }
}

fn displacement_tail<T: Real>(mode: &Mode<T>, temperature: Temperature<T>, n_max: usize) -> T {
    let d = T::lit(2.0) * mode.coupling.norm_sqr().sqrt() / mode.omega;
    let n_bar = match temperature {
        Temperature::Zero => T::zero(),
        Temperature::Beta(beta) => T::one() / ((beta * mode.omega).exp() - T::one()),
    };
    poisson_tail(d * d * (T::lit(2.0) * n_bar + T::one()), n_max)
}

/// `P(N > n)` for `N ~ Poisson(lambda)`, summed upward to avoid cancellation.
fn poisson_tail<T: Real>(lambda: T, n: usize) -> T {
    if lambda <= T::zero() {
        return T::zero();
    }
    let lambda = lambda.to_f64();
    let j0 = (n + 1) as f64;
    let mut log_term = -lambda + j0 * lambda.ln() - ln_factorial(n + 1);
    let mut sum = 0.0;
    let mut j = j0;
    loop {
        let term = log_term.exp();
        sum += term;
        if term <= 1e-18 * sum && j > lambda || j > j0 + 10_000.0 {
            break;
        }
        j += 1.0;
        log_term += lambda.ln() - j.ln();
    }
    T::lit(sum.min(1.0))
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Thermal state of the truncated bath on the product Fock space.
pub fn thermal_state<T: Real>(bath: &TruncatedBath<T>) -> Result<DensityOperator<T>> {
    thermal_state_with(bath, T::lit(DEFAULT_TAIL_LIMIT), DEFAULT_DIMENSION_CAP)
}

pub fn thermal_state_with<T: Real>(
    bath: &TruncatedBath<T>,
    limit: T,
    cap: usize,
) -> Result<DensityOperator<T>> {
    bath.check_adequacy(limit)?;
    let dims = vec![bath.n_max + 1; bath.modes.len()];
    let dim = bath
        .total_dimension()
        .map(|d| d / 4)
        .filter(|&d| d <= cap)
        .ok_or(Error::DimensionCap {
            required: bath.total_dimension().map_or(usize::MAX, |d| d / 4),
            cap,
        })?;
    let pops = bath.thermal_populations();
    let diag: Vec<Complex<T>> = (0..dim)
        .map(|idx| {
            let mut rest = idx;
            let mut p = T::one();
            for k in (0..pops.len()).rev() {
                p *= pops[k][rest % (bath.n_max + 1)];
                rest /= bath.n_max + 1;
            }
            Complex::new(p, T::zero())
        })
        .collect();
    validate_density(
        ComplexMatrix::diagonal(&diag),
        if dims.is_empty() { &[1] } else { &dims },
    )
}

/// Truncated annihilation operator, `b|n> = sqrt(n)|n-1>`.
pub fn annihilation<T: Real>(n_max: usize) -> ComplexMatrix<T> {
    let d = n_max + 1;
    let m = DMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            Complex::new(T::lit(c as f64).sqrt(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    ComplexMatrix::from_dmatrix_unchecked(m)
}

/// Truncated creation operator, `b^+|n> = sqrt(n+1)|n+1>` for `n < n_max`.
pub fn creation<T: Real>(n_max: usize) -> ComplexMatrix<T> {
    annihilation(n_max).adjoint()
}

/// Full Hamiltonian, ordered `S, A, mode_1, ..., mode_K`.
pub fn build_total_hamiltonian<T: Real>(
    omega0: T,
    bath: &TruncatedBath<T>,
) -> Result<ComplexMatrix<T>> {
    build_total_hamiltonian_with_cap(omega0, bath, DEFAULT_DIMENSION_CAP)
}

pub fn build_total_hamiltonian_with_cap<T: Real>(
    omega0: T,
    bath: &TruncatedBath<T>,
    cap: usize,
) -> Result<ComplexMatrix<T>> {
    if !omega0.is_finite() {
        return Err(Error::Parameter("omega0 must be finite".into()));
    }
    let dim = bath
        .total_dimension()
        .filter(|&d| d <= cap)
        .ok_or(Error::DimensionCap {
            required: bath.total_dimension().unwrap_or(usize::MAX),
            cap,
        })?;
    let per = bath.n_max + 1;
    let nb = dim / 4;
    let k = bath.modes.len();
    let zero = Complex::new(T::zero(), T::zero());
    let mut h = DMatrix::from_element(dim, dim, zero);
    let mut occ = vec![0usize; k];
    for sa in 0..4 {
        let (s, a) = labels(sa);
        let a_t = T::lit(a as f64);
        let spin_energy = omega0 * T::lit((s + a) as f64);
        for bi in 0..nb {
            let mut rest = bi;
            for j in (0..k).rev() {
                occ[j] = rest % per;
                rest /= per;
            }
            let row = sa * nb + bi;
            let bath_energy = occ
                .iter()
                .zip(&bath.modes)
                .fold(T::zero(), |e, (&n, m)| e + m.omega * T::lit(n as f64));
            h[(row, row)] = Complex::new(spin_energy + bath_energy, T::zero());
            let mut stride = 1;
            for j in (0..k).rev() {
                if occ[j] < bath.n_max {
                    // <n+1| a g b^+ |n> = a g sqrt(n+1); the b term is the transpose conjugate.
                    let up = row + stride;
                    let amp = bath.modes[j].coupling * (a_t * T::lit((occ[j] + 1) as f64).sqrt());
                    h[(up, row)] = amp;
                    h[(row, up)] = amp.conj();
                }
                stride *= per;
            }
        }
    }
    Ok(ComplexMatrix::from_dmatrix_unchecked(h))
}

fn check_rho_sa<T: Real>(rho: &DensityOperator<T>) -> Result<()> {
    if rho.dims() != [2, 2] {
        return Err(Error::Dimension(format!(
            "expected a 2x2 system+apparatus state, got {:?}",
            rho.dims()
        )));
    }
    Ok(())
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero() && t.is_finite()) {
        return Err(Error::Parameter(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// Dense evolution of the full product space. The eigendecomposition of the
/// Hamiltonian is computed once and reused for every time.
#[derive(Clone, Debug)]
pub struct DenseOracle<T: Real> {
    omega0: T,
    dims: Vec<usize>,
    eigen: HermitianEigen<T>,
    rho_bath: DensityOperator<T>,
}

impl<T: Real> DenseOracle<T> {
    pub fn new(bath: &TruncatedBath<T>, omega0: T, limit: T, cap: usize) -> Result<Self> {
        let h = build_total_hamiltonian_with_cap(omega0, bath, cap)?;
        let rho_bath = thermal_state_with(bath, limit, cap)?;
        let mut dims = vec![2, 2];
        dims.extend(std::iter::repeat_n(bath.n_max + 1, bath.modes.len()));
        Ok(Self {
            omega0,
            dims,
            eigen: HermitianEigen::new(&h)?,
            rho_bath,
        })
    }

    pub fn omega0(&self) -> T {
        self.omega0
    }

    pub fn propagator(&self, t: T) -> Result<ComplexMatrix<T>> {
        check_time(t)?;
        Ok(self.eigen.exp(Complex::new(T::zero(), -t)))
    }

    /// `U (rho_SA (x) rho_B) U^+` on the full space.
    pub fn evolve_full(&self, rho_sa0: &DensityOperator<T>, t: T) -> Result<DensityOperator<T>> {
        check_rho_sa(rho_sa0)?;
        let u = self.propagator(t)?;
        let total = rho_sa0.tensor(&self.rho_bath);
        let total = validate_density(total.into_matrix(), &self.dims)?;
        total.conjugate_by(&u)
    }

    pub fn evolve(&self, rho_sa0: &DensityOperator<T>, t: T) -> Result<DensityOperator<T>> {
        if t == T::zero() {
            check_rho_sa(rho_sa0)?;
            return Ok(rho_sa0.clone());
        }
        self.evolve_full(rho_sa0, t)?.partial_trace(&[0, 1])
    }
}

#[derive(Clone, Debug)]
struct ModePropagator<T: Real> {
    populations: Vec<T>,
    /// Eigendecompositions of `w n + a (g b^+ + g^* b)` for `a = +1, -1`.
    sectors: [HermitianEigen<T>; 2],
}

impl<T: Real> ModePropagator<T> {
    fn new(mode: &Mode<T>, n_max: usize, populations: Vec<T>) -> Result<Self> {
        let b = annihilation::<T>(n_max);
        let bd = b.adjoint();
        let number = ComplexMatrix::diagonal(
            &(0..=n_max)
                .map(|n| Complex::new(mode.omega * T::lit(n as f64), T::zero()))
                .collect::<Vec<_>>(),
        );
        let coupling = &bd.scale(mode.coupling) + &b.scale(mode.coupling.conj());
        let plus = &number + &coupling;
        let minus = &number - &coupling;
        Ok(Self {
            populations,
            sectors: [HermitianEigen::new(&plus)?, HermitianEigen::new(&minus)?],
        })
    }

    /// `[Tr(rho U_-^+ U_+), Tr(rho U_+^+ U_-)]`.
    fn cross_factors(&self, t: T) -> [Complex<T>; 2] {
        let scale = Complex::new(T::zero(), -t);
        let up = self.sectors[0].exp(scale);
        let um = self.sectors[1].exp(scale);
        let m = um.adjoint().as_dmatrix() * up.as_dmatrix();
        let f = self
            .populations
            .iter()
            .enumerate()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (n, &p)| {
                acc + m[(n, n)] * p
            });
        [f, f.conj()]
    }
}

/// Exact evolution of the truncated model without forming the product space.
#[derive(Clone, Debug)]
pub struct FactorizedOracle<T: Real> {
    omega0: T,
    modes: Vec<ModePropagator<T>>,
}

impl<T: Real> FactorizedOracle<T> {
    pub fn new(bath: &TruncatedBath<T>, omega0: T, limit: T) -> Result<Self> {
        bath.check_adequacy(limit)?;
        Self::new_unchecked(bath, omega0)
    }

    /// Skips the cutoff adequacy check.
    pub fn new_unchecked(bath: &TruncatedBath<T>, omega0: T) -> Result<Self> {
        if !omega0.is_finite() {
            return Err(Error::Parameter("omega0 must be finite".into()));
        }
        let pops = bath.thermal_populations();
        let modes = bath
            .modes
            .iter()
            .zip(pops)
            .map(|(m, p)| ModePropagator::new(m, bath.n_max, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { omega0, modes })
    }

    pub fn evolve(&self, rho_sa0: &DensityOperator<T>, t: T) -> Result<DensityOperator<T>> {
        check_rho_sa(rho_sa0)?;
        check_time(t)?;
        if t == T::zero() {
            return Ok(rho_sa0.clone());
        }
        let mut cross = [Complex::new(T::one(), T::zero()); 2];
        for m in &self.modes {
            let f = m.cross_factors(t);
            cross[0] *= f[0];
            cross[1] *= f[1];
        }
        let mut entries = Vec::with_capacity(16);
        for p in 0..4 {
            let (s_p, a_p) = labels(p);
            for q in 0..4 {
                let (s_q, a_q) = labels(q);
                let rot = phase(-self.omega0 * t * T::lit(((s_p - s_q) + (a_p - a_q)) as f64));
                let bath = match (a_p, a_q) {
                    (1, -1) => cross[0],
                    (-1, 1) => cross[1],
                    _ => Complex::new(T::one(), T::zero()),
                };
                entries.push(rho_sa0.get(p, q) * rot * bath);
            }
        }
        validate_density(ComplexMatrix::from_row_major(4, 4, entries)?, &[2, 2])
    }
}

/// Reduced `rho_SA(t)` from the exact truncated model.
pub fn evolve_exact<T: Real>(
    rho_sa0: &DensityOperator<T>,
    bath: &TruncatedBath<T>,
    omega0: T,
    t: T,
) -> Result<DensityOperator<T>> {
    FactorizedOracle::new(bath, omega0, T::lit(DEFAULT_TAIL_LIMIT))?.evolve(rho_sa0, t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport<T: Real> {
    pub times: Vec<T>,
    pub max_abs_diff: Vec<T>,
    pub truncation_bound: T,
}

impl<T: Real> OracleReport<T> {
    pub fn worst(&self) -> T {
        self.max_abs_diff.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

/// Elementwise distance between the exact reduced state and the closed-form
/// map (with the discrete `I1`) at each time.
pub fn compare_analytic<T: Real>(
    rho_sa0: &DensityOperator<T>,
    bath: &TruncatedBath<T>,
    omega0: T,
    times: &[T],
) -> Result<OracleReport<T>> {
    let oracle = FactorizedOracle::new(bath, omega0, T::lit(DEFAULT_TAIL_LIMIT))?;
    compare_with(&oracle, rho_sa0, bath, omega0, times)
}

/// As [`compare_analytic`] with a prebuilt oracle, which may skip the
/// adequacy check.
pub fn compare_with<T: Real>(
    oracle: &FactorizedOracle<T>,
    rho_sa0: &DensityOperator<T>,
    bath: &TruncatedBath<T>,
    omega0: T,
    times: &[T],
) -> Result<OracleReport<T>> {
    let spec = bath.spec();
    let max_abs_diff = times
        .iter()
        .map(|&t| {
            let exact = oracle.evolve(rho_sa0, t)?;
            let analytic = evolve_density_with_i1(rho_sa0, omega0, i1_discrete(&spec, t)?, t)?;
            Ok(exact.max_abs_diff(&analytic))
        })
        .collect::<Result<Vec<T>>>()?;
    let horizon = times.iter().fold(T::zero(), |a, &b| a.max(b));
    Ok(OracleReport {
        times: times.to_vec(),
        max_abs_diff,
        truncation_bound: bath.truncation_bound(horizon),
    })
}

/// Modes at `w_k = 2 k omega_c / K`, `k = 1..=K`, covering `(0, 2 omega_c]`.
pub fn stratified_frequencies<T: Real>(k: usize, omega_c: T) -> Vec<T> {
    (1..=k)
        .map(|j| T::lit(2.0 * j as f64 / k as f64) * omega_c)
        .collect()
}

/// Riemann discretization of the ohmic density on the stratified grid:
/// `|g_k|^2 = J(w_k) dw`.
pub fn ohmic_modes<T: Real>(k: usize, eta: T, omega_c: T) -> Vec<Mode<T>> {
    let dw = T::lit(2.0) * omega_c / T::lit(k as f64);
    stratified_frequencies(k, omega_c)
        .into_iter()
        .map(|w| Mode {
            omega: w,
            coupling: Complex::new((eta * w * (-w / omega_c).exp() * dw).sqrt(), T::zero()),
        })
        .collect()
}
