//! Von Neumann pre-measurement of a qubit by a qubit apparatus, and the
//! alternative `(x, y)` bases that make the outcome of a pre-measurement
//! ambiguous.
//!
//! All matrices are in the `|++>, |+->, |-+>, |-->` basis with `hbar = 1`.

use nalgebra::DVector;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hilbert::{pauli_x, pauli_z, tensor_product, ComplexMatrix, JointState};
use crate::scalar::{cabs, cexp, phase, Real};

/// Single-qubit state vector.
pub type Ket<T> = DVector<Complex<T>>;

/// Parameters of the general pre-measurement unitary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaParams<T: Real> {
    pub delta22: Complex<T>,
    pub phi24: T,
    pub phi32: T,
}

impl<T: Real> DeltaParams<T> {
    pub fn new(delta22: Complex<T>, phi24: T, phi32: T) -> Result<Self> {
        let p = Self {
            delta22,
            phi24,
            phi32,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        let m = cabs(self.delta22);
        if !(m.is_finite() && self.phi24.is_finite() && self.phi32.is_finite()) {
            return Err(Error::Parameter("non-finite Delta parameters".into()));
        }
        if m > T::one() + T::default_epsilon() {
            return Err(Error::Parameter(format!("|delta22| = {m} exceeds 1")));
        }
        Ok(())
    }
}

/// The most general 4x4 unitary mapping `(a, 0, b, 0)` to `(a, 0, 0, b)`.
pub fn build_delta<T: Real>(p: &DeltaParams<T>) -> Result<ComplexMatrix<T>> {
    p.check()?;
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let d22 = p.delta22;
    let modsq = d22.norm_sqr();
    let off = Complex::new((T::one() - modsq).max(T::zero()).sqrt(), T::zero());
    let d24 = phase(p.phi24) * off;
    let d32 = phase(p.phi32) * off;
    let d34 = -phase(p.phi24 + p.phi32) * d22.conj();
    #[rustfmt::skip]
    let entries = vec![
        one,  zero, zero, zero,
        zero, d22,  zero, d24,
        zero, d32,  zero, d34,
        zero, zero, one,  zero,
    ];
    ComplexMatrix::from_row_major(4, 4, entries)
}

/// `(g/4)(1 - sigma_z)_S ⊗ (1 - sigma_x)_A`; eigenvalues `{0, 0, 0, g}`.
pub fn build_h_sa<T: Real>(g: T) -> ComplexMatrix<T> {
    let one = ComplexMatrix::identity(2);
    let s = (&one - &pauli_z()).scale(Complex::new(g / T::lit(4.0), T::zero()));
    let a = &one - &pauli_x();
    tensor_product(&s, &a)
}

/// Closed-form `exp(-i H_SA t)`.
pub fn premeasurement_unitary<T: Real>(g: T, t: T) -> Result<ComplexMatrix<T>> {
    if !(t >= T::zero()) || !t.is_finite() || !g.is_finite() {
        return Err(Error::Parameter(format!(
            "invalid time {t} or coupling {g}"
        )));
    }
    let e = cexp(Complex::new(T::zero(), -g * t));
    let half = T::lit(0.5);
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let diag = (one + e) * half;
    let off = (one - e) * half;
    #[rustfmt::skip]
    let entries = vec![
        one,  zero, zero, zero,
        zero, one,  zero, zero,
        zero, zero, diag, off,
        zero, zero, off,  diag,
    ];
    ComplexMatrix::from_row_major(4, 4, entries)
}

/// Settings of the pre-measurement stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PremeasurementConfig<T: Real> {
    /// Level splitting of `H_S` and `H_A`.
    pub omega0: T,
    /// System-apparatus coupling.
    pub g: T,
    /// Odd multiple selecting `tau_pm = n_odd * pi / |g|`.
    pub n_odd: u32,
}

impl<T: Real> PremeasurementConfig<T> {
    pub fn new(omega0: T, g: T, n_odd: u32) -> Result<Self> {
        let cfg = Self { omega0, g, n_odd };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if !self.g.is_finite() || self.g == T::zero() {
            return Err(Error::Parameter(format!(
                "coupling g must be finite and nonzero, got {}",
                self.g
            )));
        }
        if !self.omega0.is_finite() {
            return Err(Error::Parameter("omega0 must be finite".into()));
        }
        if self.n_odd.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "n_odd must be odd, got {}",
                self.n_odd
            )));
        }
        Ok(())
    }

    pub fn tau_pm(&self) -> T {
        T::lit(self.n_odd as f64) * T::pi() / self.g.abs()
    }
}

fn check_normalized<T: Real>(a: Complex<T>, b: Complex<T>) -> Result<()> {
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if !norm.is_finite() || (norm - T::one()).abs() > T::norm_tol() {
        return Err(Error::NotNormalized {
            norm: norm.to_f64(),
        });
    }
    Ok(())
}

/// Free evolution of `(s_+|+> + s_-|->)|+>` under `omega0 (sigma_z^S + sigma_z^A)`
/// for `dt`, dropping the apparatus' global phase.
pub fn free_evolve<T: Real>(
    s_plus: Complex<T>,
    s_minus: Complex<T>,
    dt: T,
    omega0: T,
) -> Result<(Complex<T>, Complex<T>)> {
    check_normalized(s_plus, s_minus)?;
    let theta = omega0 * dt;
    Ok((s_plus * phase(-theta), s_minus * phase(theta)))
}

/// Evolves `(a|+> + b|->)|+>` under `H_SA` for `tau_pm`, giving `a|++> + b|-->`.
pub fn premeasure<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    cfg: &PremeasurementConfig<T>,
) -> Result<JointState<T>> {
    check_normalized(a, b)?;
    cfg.check()?;
    let zero = Complex::new(T::zero(), T::zero());
    let initial = DVector::from_vec(vec![a, zero, b, zero]);
    let u = premeasurement_unitary(cfg.g, cfg.tau_pm())?;
    JointState::new(vec![2, 2], u.apply(&initial)?)
}

/// Direction `(x, y)` of the observable `x sigma_x + y sigma_y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XYBasisParams<T: Real> {
    pub x: T,
    pub y: T,
}

impl<T: Real> XYBasisParams<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || (x == T::zero() && y == T::zero()) {
            return Err(Error::Parameter(format!(
                "(x, y) = ({x}, {y}) does not define a basis"
            )));
        }
        Ok(Self { x, y })
    }

    /// `arg(x + i y)`.
    pub fn angle(&self) -> T {
        self.y.atan2(self.x)
    }

    pub fn radius(&self) -> T {
        self.x.hypot(self.y)
    }
}

/// Eigenvectors `|+>_xy`, `|->_xy` of `x sigma_x + y sigma_y` with
/// eigenvalues `+sqrt(x^2+y^2)` and `-sqrt(x^2+y^2)`.
///
/// Both are `(sqrt((x-iy)/(x+iy)) |+> ± |->)/sqrt(2)`; the square root is
/// taken as `e^{-i arg(x+iy)}`, the branch for which `|+>_xy` belongs to the
/// positive eigenvalue for every `(x, y)`.
pub fn xy_eigenbasis<T: Real>(p: &XYBasisParams<T>) -> Result<(Ket<T>, Ket<T>)> {
    let p = XYBasisParams::new(p.x, p.y)?;
    let h = T::FRAC_1_SQRT_2();
    let root = phase(-p.angle()) * h;
    let lower = Complex::new(h, T::zero());
    Ok((
        DVector::from_vec(vec![root, lower]),
        DVector::from_vec(vec![root, -lower]),
    ))
}

/// Unitary whose columns are `|++>_xy, |+->_xy, |-+>_xy, |-->_xy`.
pub fn xy_product_basis<T: Real>(p: &XYBasisParams<T>) -> Result<ComplexMatrix<T>> {
    let (plus, minus) = xy_eigenbasis(p)?;
    let single = ComplexMatrix::from_row_major(2, 2, vec![plus[0], minus[0], plus[1], minus[1]])?;
    Ok(tensor_product(&single, &single))
}

/// Coefficients of a two-qubit state in the `|±±>_xy` basis, in the order
/// `++, +-, -+, --`.
pub fn express_in_xy<T: Real>(
    state: &JointState<T>,
    p: &XYBasisParams<T>,
) -> Result<[Complex<T>; 4]> {
    if state.dims() != [2, 2] {
        return Err(Error::Dimension(format!(
            "expected a 2x2 state, got dims {:?}",
            state.dims()
        )));
    }
    let w = xy_product_basis(p)?;
    let c = w.adjoint().apply(state.amplitudes())?;
    Ok([c[0], c[1], c[2], c[3]])
}

/// Inverse of [`express_in_xy`].
pub fn from_xy<T: Real>(coeffs: &[Complex<T>; 4], p: &XYBasisParams<T>) -> Result<JointState<T>> {
    let w = xy_product_basis(p)?;
    JointState::new(vec![2, 2], w.apply(&DVector::from_column_slice(coeffs))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expm_hermitian, pauli_y, HermitianEigen};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn swap_lower_block() -> ComplexMatrix<f64> {
        ComplexMatrix::from_real_rows(
            4,
            4,
            &[
                1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.,
            ],
        )
        .unwrap()
    }

    fn random_unit_pair(rng: &mut ChaCha8Rng) -> (C, C) {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (c(v[0] / n, v[1] / n), c(v[2] / n, v[3] / n))
    }

    #[test]
    fn delta_reduces_to_swap() {
        let d = build_delta(&DeltaParams::new(c(1.0, 0.0), PI, 0.0).unwrap()).unwrap();
        assert!(d.max_abs_diff(&swap_lower_block()) < 1e-15);
    }

    #[test]
    fn delta_maps_premeasurement_input() {
        let d = build_delta(&DeltaParams::new(c(0.0, 0.0), 0.0, 0.0).unwrap()).unwrap();
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let out = d
            .apply(&DVector::from_vec(vec![a, c(0., 0.), b, c(0., 0.)]))
            .unwrap();
        let expected = DVector::from_vec(vec![a, c(0., 0.), c(0., 0.), b]);
        assert!((out - expected).camax() < 1e-15);
    }

    #[test]
    fn delta_rejects_large_modulus() {
        assert!(DeltaParams::new(c(0.9, 0.5), 0.0, 0.0).is_err());
        let bad = DeltaParams {
            delta22: c(1.5, 0.0),
            phi24: 0.0,
            phi32: 0.0,
        };
        assert!(build_delta(&bad).is_err());
    }

    #[test]
    fn delta_family_unitary_and_solves_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let r: f64 = rng.random_range(0.0..=1.0);
            let th: f64 = rng.random_range(0.0..2.0 * PI);
            let p = DeltaParams::new(
                c(r * th.cos(), r * th.sin()),
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
            )
            .unwrap();
            let d = build_delta(&p).unwrap();
            assert!(d.unitarity_residual() < 1e-12);
            // The five unitarity conditions on the free entries.
            let e = |i: usize, j: usize| d.get(i - 1, j - 1);
            assert!(e(1, 2).norm_sqr() + e(1, 4).norm_sqr() < 1e-24);
            assert!(e(4, 2).norm_sqr() + e(4, 4).norm_sqr() < 1e-24);
            assert_relative_eq!(
                e(2, 2).norm_sqr() + e(2, 4).norm_sqr(),
                1.0,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                e(3, 2).norm_sqr() + e(3, 4).norm_sqr(),
                1.0,
                epsilon = 1e-12
            );
            assert!((e(2, 2) * e(3, 2).conj() + e(2, 4) * e(3, 4).conj()).norm() < 1e-12);
            for _ in 0..100 {
                let (a, b) = random_unit_pair(&mut rng);
                let out = d
                    .apply(&DVector::from_vec(vec![a, c(0., 0.), b, c(0., 0.)]))
                    .unwrap();
                let expected = DVector::from_vec(vec![a, c(0., 0.), c(0., 0.), b]);
                assert!((out - expected).camax() < 1e-10);
            }
        }
    }

    #[test]
    fn h_sa_matrix_and_spectrum() {
        let h = build_h_sa(2.0);
        let expected = ComplexMatrix::from_real_rows(
            4,
            4,
            &[
                0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 1., -1., 0., 0., -1., 1.,
            ],
        )
        .unwrap();
        assert!(h.max_abs_diff(&expected) < 1e-15);

        let g: f64 = 1.7;
        let eig = HermitianEigen::<f64>::new(&build_h_sa(g)).unwrap();
        let mut ev = eig.eigenvalues.clone();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in ev.iter().zip([0.0, 0.0, 0.0, g]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        let top = ev.len() - 1;
        let idx = eig
            .eigenvalues
            .iter()
            .position(|&x| (x - ev[top]).abs() < 1e-12)
            .unwrap();
        let v = normalize(eig.eigenvectors.column(idx).into_owned());
        let want = normalize(DVector::from_vec(vec![
            c(0., 0.),
            c(0., 0.),
            c(FRAC_1_SQRT_2, 0.),
            c(-FRAC_1_SQRT_2, 0.),
        ]));
        assert!((v - want).camax() < 1e-12);
    }

    fn normalize(v: DVector<C>) -> DVector<C> {
        crate::hilbert::normalize_global_phase(&v)
    }

    #[test]
    fn unitary_at_zero_and_tau_pm() {
        let g = 0.8;
        assert!(
            premeasurement_unitary(g, 0.0)
                .unwrap()
                .max_abs_diff(&ComplexMatrix::identity(4))
                < 1e-15
        );
        let u = premeasurement_unitary(g, PI / g).unwrap();
        assert!(u.max_abs_diff(&swap_lower_block()) < 1e-12);
        assert!(premeasurement_unitary(g, -1.0).is_err());
    }

    #[test]
    fn unitary_matches_eigendecomposition() {
        let g = 1.3;
        let h = build_h_sa(g);
        for k in 0..50 {
            let t = k as f64 * 0.2;
            let closed = premeasurement_unitary(g, t).unwrap();
            let numeric = expm_hermitian(&h, c(0.0, -t)).unwrap();
            assert!(closed.max_abs_diff(&numeric) < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn unitary_is_periodic() {
        let g = 2.1;
        let period = 2.0 * PI / g;
        for k in 0..20 {
            let t = 0.37 * k as f64;
            let a = premeasurement_unitary(g, t).unwrap();
            let b = premeasurement_unitary(g, t + period).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-10);
        }
    }

    #[test]
    fn free_evolution_phases() {
        let w = 1.9;
        let (a, b) = free_evolve(c(1.0, 0.0), c(0.0, 0.0), 0.4, w).unwrap();
        assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(b.norm(), 0.0);
        let h = FRAC_1_SQRT_2;
        let (a, b) = free_evolve(c(h, 0.0), c(h, 0.0), 0.0, w).unwrap();
        assert_eq!((a, b), (c(h, 0.0), c(h, 0.0)));
        let (a, b) = free_evolve(c(h, 0.0), c(h, 0.0), PI / (2.0 * w), w).unwrap();
        assert!((a - c(0.0, -h)).norm() < 1e-15);
        assert!((b - c(0.0, h)).norm() < 1e-15);
        assert!(free_evolve(c(1.0, 0.0), c(1.0, 0.0), 0.0, w).is_err());
    }

    #[test]
    fn premeasure_examples() {
        let cfg = PremeasurementConfig::new(1.0, 0.7, 1).unwrap();
        let s = premeasure(c(1.0, 0.0), c(0.0, 0.0), &cfg).unwrap();
        assert!((s.amplitude(0) - c(1.0, 0.0)).norm() < 1e-12);
        let h = FRAC_1_SQRT_2;
        let s = premeasure(c(h, 0.0), c(h, 0.0), &cfg).unwrap();
        for (i, want) in [h, 0.0, 0.0, h].iter().enumerate() {
            assert!((s.amplitude(i) - c(*want, 0.0)).norm() < 1e-12);
        }
        let s = premeasure(c(0.6, 0.0), c(0.0, 0.8), &cfg).unwrap();
        for (i, want) in [c(0.6, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.8)]
            .iter()
            .enumerate()
        {
            assert!((s.amplitude(i) - want).norm() < 1e-12);
        }
        assert!(premeasure(c(0.6, 0.0), c(0.6, 0.0), &cfg).is_err());
    }

    #[test]
    fn premeasure_odd_multiples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 3, 5, 7] {
            let cfg = PremeasurementConfig::new(0.3, -1.4, n).unwrap();
            let (a, b) = random_unit_pair(&mut rng);
            let s = premeasure(a, b, &cfg).unwrap();
            assert!(s.amplitude(1).norm() < 1e-12 && s.amplitude(2).norm() < 1e-12);
            assert!((s.amplitude(0) - a).norm() < 1e-12 && (s.amplitude(3) - b).norm() < 1e-12);
        }
        assert!(PremeasurementConfig::new(0.3, 1.0, 2).is_err());
        assert!(PremeasurementConfig::new(0.3, 0.0, 1).is_err());
    }

    #[test]
    fn xy_basis_reduces_to_sigma_x_and_sigma_y() {
        let h = FRAC_1_SQRT_2;
        let (p, m) = xy_eigenbasis(&XYBasisParams::new(1.0, 0.0).unwrap()).unwrap();
        assert!((p - DVector::from_vec(vec![c(h, 0.), c(h, 0.)])).camax() < 1e-15);
        assert!((m - DVector::from_vec(vec![c(h, 0.), c(-h, 0.)])).camax() < 1e-15);

        let (p, m) = xy_eigenbasis(&XYBasisParams::new(0.0, 1.0).unwrap()).unwrap();
        let want_p = normalize(DVector::from_vec(vec![c(h, 0.), c(0., h)]));
        let want_m = normalize(DVector::from_vec(vec![c(h, 0.), c(0., -h)]));
        assert!((normalize(p) - want_p).camax() < 1e-15);
        assert!((normalize(m) - want_m).camax() < 1e-15);

        assert!(XYBasisParams::new(0.0, 0.0).is_err());
    }

    #[test]
    fn xy_basis_eigen_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (x, y) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let p = XYBasisParams::new(x, y).unwrap();
            let o2 = &pauli_x::<f64>().scale(c(x, 0.0)) + &pauli_y().scale(c(y, 0.0));
            let r = p.radius();
            let (plus, minus) = xy_eigenbasis(&p).unwrap();
            assert!((o2.apply(&plus).unwrap() - plus.map(|z| z * r)).norm() < 1e-12);
            assert!((o2.apply(&minus).unwrap() + minus.map(|z| z * r)).norm() < 1e-12);
            assert_relative_eq!(plus.norm(), 1.0, epsilon = 1e-14);
            assert!(plus.dotc(&minus).norm() < 1e-14);
        }
    }

    #[test]
    fn ambiguous_state_in_xy_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p = XYBasisParams::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
                .unwrap();
            let ratio = c(p.x, p.y) / c(p.x, -p.y);
            let a = c(FRAC_1_SQRT_2, 0.0) * phase(rng.random_range(0.0..6.0));
            let b = a * ratio;
            let s = JointState::from_slice(vec![2, 2], &[a, c(0., 0.), c(0., 0.), b]).unwrap();
            let co = express_in_xy(&s, &p).unwrap();
            assert!(co[1].norm() < 1e-12 && co[2].norm() < 1e-12);
            // Coefficient pattern (a (x+iy)/(x-iy) + b)/2 on |++>_xy.
            assert!((co[0] - (a * ratio + b) * 0.5).norm() < 1e-12);
            assert!((co[3] - co[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn bell_state_at_x_axis() {
        let h = FRAC_1_SQRT_2;
        let s = JointState::from_slice(vec![2, 2], &[c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)])
            .unwrap();
        let co = express_in_xy(&s, &XYBasisParams::new(1.0, 0.0).unwrap()).unwrap();
        for (got, want) in co.iter().zip([h, 0.0, 0.0, h]) {
            assert!((got - c(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn xy_round_trip_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let v: Vec<C> = (0..4)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let v: Vec<C> = v.into_iter().map(|z| z / n).collect();
            let s = JointState::from_slice(vec![2, 2], &v).unwrap();
            let p = XYBasisParams::new(rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0))
                .unwrap();
            let co = express_in_xy(&s, &p).unwrap();
            assert_relative_eq!(
                co.iter().map(|z| z.norm_sqr()).sum::<f64>(),
                1.0,
                epsilon = 1e-14
            );
            let back = from_xy(&co, &p).unwrap();
            assert!(back.distance(&s) < 1e-12);
        }
    }
}
