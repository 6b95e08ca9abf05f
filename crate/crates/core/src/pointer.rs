//! Coherence measures, decoherence time and pointer-basis selection.

use nalgebra::DVector;
use num_complex::Complex;

use crate::bath::CoherenceCurve;
use crate::error::{Error, Result};
use crate::hilbert::{tensor_product, ComplexMatrix, DensityOperator, JointState};
use crate::measurement::{express_in_xy, xy_product_basis, XYBasisParams};
use crate::scalar::{phase, Real};

/// Single-qubit basis used on both S and A.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisKind<T: Real> {
    /// Eigenbasis of `x sigma_x + y sigma_y`.
    Xy(XYBasisParams<T>),
    /// `|0'> = cos(theta/2)|+> + e^{i phi} sin(theta/2)|->` and its orthogonal
    /// partner. `theta = 0` is the pointer basis.
    Bloch { theta: T, phi: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisCandidate<T: Real> {
    pub kind: BasisKind<T>,
    pub label: String,
}

impl<T: Real> BasisCandidate<T> {
    pub fn pointer() -> Self {
        Self::bloch(T::zero(), T::zero())
    }

    pub fn bloch(theta: T, phi: T) -> Self {
        Self {
            kind: BasisKind::Bloch { theta, phi },
            label: format!("bloch(theta={theta:.6}, phi={phi:.6})"),
        }
    }

    pub fn xy(p: XYBasisParams<T>) -> Self {
        Self {
            kind: BasisKind::Xy(p),
            label: format!("xy(x={:.6}, y={:.6})", p.x, p.y),
        }
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self.kind, BasisKind::Bloch { theta, .. } if theta == T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            BasisKind::Xy(p) => XYBasisParams::new(p.x, p.y).map(|_| ()),
            BasisKind::Bloch { theta, phi } if theta.is_finite() && phi.is_finite() => Ok(()),
            BasisKind::Bloch { .. } => Err(Error::Parameter(format!(
                "{}: angles must be finite",
                self.label
            ))),
        }
    }

    /// 4x4 unitary whose columns are the candidate product basis.
    pub fn product_basis(&self) -> Result<ComplexMatrix<T>> {
        self.validate()?;
        match self.kind {
            BasisKind::Xy(p) => xy_product_basis(&p),
            BasisKind::Bloch { theta, phi } => {
                let half = theta * T::lit(0.5);
                let (s, c) = (half.sin(), half.cos());
                let c = Complex::new(c, T::zero());
                let single = ComplexMatrix::from_row_major(
                    2,
                    2,
                    vec![c, -phase(-phi) * s, phase(phi) * s, c],
                )?;
                Ok(tensor_product(&single, &single))
            }
        }
    }
}

/// Squared Frobenius norm of the off-diagonal part of `rho` in the
/// candidate basis.
pub fn coherence_norm<T: Real>(rho: &DensityOperator<T>, basis: &BasisCandidate<T>) -> Result<T> {
    if rho.dims() != [2, 2] {
        return Err(Error::Dimension(format!(
            "expected a 2x2 state, got {:?}",
            rho.dims()
        )));
    }
    let w = basis.product_basis()?;
    let r = w.adjoint().as_dmatrix() * rho.matrix().as_dmatrix() * w.as_dmatrix();
    let mut total = T::zero();
    for p in 0..4 {
        for q in 0..4 {
            if p != q {
                total += r[(p, q)].norm_sqr();
            }
        }
    }
    Ok(total)
}

/// First time at which `|rho_14(t)| / |rho_14(0)|` drops to `threshold`,
/// linearly interpolated between grid points.
pub fn decoherence_time<T: Real>(curve: &CoherenceCurve<T>, threshold: T) -> Result<T> {
    if curve.is_empty() {
        return Err(Error::Parameter("coherence curve is empty".into()));
    }
    if !(threshold > T::zero() && threshold <= T::one()) {
        return Err(Error::Parameter(format!(
            "threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let c0 = curve.coherence_14[0].norm_sqr().sqrt();
    if !(c0 > T::zero()) {
        return Err(Error::Parameter(
            "initial coherence |rho_14(0)| vanishes".into(),
        ));
    }
    let ratio = |i: usize| curve.coherence_14[i].norm_sqr().sqrt() / c0;
    if ratio(0) <= threshold {
        return Ok(curve.times[0]);
    }
    for i in 1..curve.len() {
        let (r0, r1) = (ratio(i - 1), ratio(i));
        if r1 <= threshold {
            let (t0, t1) = (curve.times[i - 1], curve.times[i]);
            return Ok(t0 + (t1 - t0) * (r0 - threshold) / (r0 - r1));
        }
    }
    Err(Error::ThresholdNotReached {
        threshold: threshold.to_f64(),
        final_ratio: ratio(curve.len() - 1).to_f64(),
    })
}

/// `e^{-1}`, the default decoherence threshold.
pub fn default_threshold<T: Real>() -> T {
    T::one() / T::E()
}

#[derive(Clone, Debug)]
pub struct ScanReport<T: Real> {
    pub candidates: Vec<(BasisCandidate<T>, T)>,
    pub minimizer: BasisCandidate<T>,
    pub minimum: T,
    /// Distance from the minimum to the next-smallest norm.
    pub margin: T,
    pub tolerance: T,
    pub is_unique: bool,
}

pub const MIN_SCAN_ALTERNATIVES: usize = 50;

/// Coherence norm of `rho` over every candidate; the minimizer is unique when
/// every other candidate is larger by more than `tolerance`.
pub fn pointer_scan<T: Real>(
    rho: &DensityOperator<T>,
    grid: &[BasisCandidate<T>],
    tolerance: T,
) -> Result<ScanReport<T>> {
    if !grid.iter().any(BasisCandidate::is_pointer) {
        return Err(Error::Parameter(
            "scan grid must contain the pointer basis (theta = 0)".into(),
        ));
    }
    if grid.len() < MIN_SCAN_ALTERNATIVES + 1 {
        return Err(Error::Parameter(format!(
            "scan grid needs at least {MIN_SCAN_ALTERNATIVES} candidates besides the pointer basis, got {}",
            grid.len() - 1
        )));
    }
    let candidates = grid
        .iter()
        .map(|b| Ok((b.clone(), coherence_norm(rho, b)?)))
        .collect::<Result<Vec<_>>>()?;
    // First minimum wins ties, so the order of the grid decides the report.
    let (best, minimum) =
        candidates
            .iter()
            .enumerate()
            .fold((0, candidates[0].1), |(bi, bv), (i, (_, v))| {
                if *v < bv {
                    (i, *v)
                } else {
                    (bi, bv)
                }
            });
    let margin = candidates
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, (_, v))| *v - minimum)
        .fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b));
    Ok(ScanReport {
        minimizer: candidates[best].0.clone(),
        candidates,
        minimum,
        margin,
        tolerance,
        is_unique: margin > tolerance,
    })
}

/// Pointer basis followed by `n_theta x n_phi` Bloch candidates with
/// `theta_i = i (pi/2) / n_theta`, `i = 1..=n_theta`, and
/// `phi_j = 2 pi j / n_phi`, `j = 0..n_phi`.
pub fn bloch_grid<T: Real>(n_theta: usize, n_phi: usize) -> Vec<BasisCandidate<T>> {
    let mut grid = vec![BasisCandidate::pointer()];
    for i in 1..=n_theta {
        let theta = T::FRAC_PI_2() * T::lit(i as f64 / n_theta as f64);
        for j in 0..n_phi {
            grid.push(BasisCandidate::bloch(
                theta,
                T::TAU() * T::lit(j as f64 / n_phi as f64),
            ));
        }
    }
    grid
}

/// The 10x10 grid plus the pointer basis.
pub fn default_grid<T: Real>() -> Vec<BasisCandidate<T>> {
    bloch_grid(10, 10)
}

/// Directions `(cos a, sin a)` for `a = k pi / n`, `k = 0..n`. Since
/// `(x, y)` and `(-x, -y)` give the same basis up to labels, half a turn
/// covers every basis.
pub fn xy_direction_grid<T: Real>(n: usize) -> Vec<XYBasisParams<T>> {
    (0..n)
        .map(|k| {
            let a = T::pi() * T::lit(k as f64 / n as f64);
            XYBasisParams {
                x: a.cos(),
                y: a.sin(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmbiguityReport<T: Real> {
    /// Grid points where the `+-` and `-+` coefficients vanish.
    pub correlated: Vec<XYBasisParams<T>>,
    /// Grid points where the `++` and `--` coefficients vanish.
    pub anticorrelated: Vec<XYBasisParams<T>>,
    /// `arg(x + i y)` (mod pi) solving `b = a (x+iy)/(x-iy)`, when `|a| = |b|`.
    pub correlated_angle: Option<T>,
    /// Same for `b = -a (x+iy)/(x-iy)`.
    pub anticorrelated_angle: Option<T>,
}

impl<T: Real> AmbiguityReport<T> {
    /// An alternative product basis with a measurement-like form exists.
    pub fn found(&self) -> bool {
        !(self.correlated.is_empty() && self.anticorrelated.is_empty())
    }
}

/// Searches the grid for `xy` bases in which the pure state
/// `a|++> + b|-->` again has the correlated (or anticorrelated) form.
pub fn ambiguity_check<T: Real>(
    psi: &JointState<T>,
    grid: &[XYBasisParams<T>],
    tolerance: T,
) -> Result<AmbiguityReport<T>> {
    if psi.dims() != [2, 2] {
        return Err(Error::Dimension(format!(
            "expected a 2x2 state, got {:?}",
            psi.dims()
        )));
    }
    let (a, b) = (psi.amplitude(0), psi.amplitude(3));
    let off = psi.amplitude(1).norm_sqr() + psi.amplitude(2).norm_sqr();
    if off.sqrt() > T::check_tol() {
        return Err(Error::Parameter(
            "state is not of the form a|++> + b|-->".into(),
        ));
    }
    let small = |z: Complex<T>| z.norm_sqr().sqrt() < tolerance;
    let mut report = AmbiguityReport {
        correlated: vec![],
        anticorrelated: vec![],
        correlated_angle: None,
        anticorrelated_angle: None,
    };
    for p in grid {
        let c = express_in_xy(psi, p)?;
        if small(c[1]) && small(c[2]) {
            report.correlated.push(*p);
        }
        if small(c[0]) && small(c[3]) {
            report.anticorrelated.push(*p);
        }
    }
    let (ma, mb) = (a.norm_sqr().sqrt(), b.norm_sqr().sqrt());
    if ma > T::zero() && (ma - mb).abs() < tolerance {
        let ratio = b / a;
        let wrap = |x: T| {
            let y = x % T::pi();
            if y < T::zero() {
                y + T::pi()
            } else {
                y
            }
        };
        report.correlated_angle = Some(wrap(ratio.im.atan2(ratio.re) * T::lit(0.5)));
        report.anticorrelated_angle = Some(wrap((-ratio.im).atan2(-ratio.re) * T::lit(0.5)));
    }
    Ok(report)
}

/// `rho` expressed in the candidate basis.
pub fn in_basis<T: Real>(
    rho: &DensityOperator<T>,
    basis: &BasisCandidate<T>,
) -> Result<ComplexMatrix<T>> {
    let w = basis.product_basis()?;
    ComplexMatrix::from_dmatrix(
        w.adjoint().as_dmatrix() * rho.matrix().as_dmatrix() * w.as_dmatrix(),
    )
}

/// Column `k` of the candidate basis.
pub fn basis_vector<T: Real>(basis: &BasisCandidate<T>, k: usize) -> Result<DVector<Complex<T>>> {
    let w = basis.product_basis()?;
    if k >= 4 {
        return Err(Error::Dimension(format!("basis index {k} out of range")));
    }
    Ok(w.as_dmatrix().column(k).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{coherence_curve, BathSpec, Temperature};
    use crate::measurement::{premeasure, PremeasurementConfig};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn diag(p: f64, q: f64) -> DensityOperator<f64> {
        crate::hilbert::validate_density(
            ComplexMatrix::diagonal(&[c(p, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(q, 0.0)]),
            &[2, 2],
        )
        .unwrap()
    }

    fn pure(a: Complex<f64>, b: Complex<f64>) -> JointState<f64> {
        JointState::from_slice(vec![2, 2], &[a, c(0.0, 0.0), c(0.0, 0.0), b]).unwrap()
    }

    #[test]
    fn bloch_basis_is_unitary_and_pointer_is_identity() {
        assert_eq!(
            BasisCandidate::<f64>::pointer().product_basis().unwrap(),
            ComplexMatrix::identity(4)
        );
        for b in default_grid::<f64>() {
            assert!(b.product_basis().unwrap().unitarity_residual() < 1e-14);
        }
    }

    #[test]
    fn equator_matches_xy_basis_up_to_phases() {
        // theta = pi/2 spans the same rays as the xy basis at angle phi.
        let phi: f64 = 0.7;
        let xy = BasisCandidate::xy(XYBasisParams::new(phi.cos(), phi.sin()).unwrap());
        let bl = BasisCandidate::bloch(PI / 2.0, phi);
        let rho = pure(c(0.6, 0.0), c(0.0, 0.8)).density();
        assert_relative_eq!(
            coherence_norm(&rho, &xy).unwrap(),
            coherence_norm(&rho, &bl).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn coherence_norm_examples() {
        let h = FRAC_1_SQRT_2;
        let mixed = diag(0.5, 0.5);
        assert_eq!(
            coherence_norm(&mixed, &BasisCandidate::pointer()).unwrap(),
            0.0
        );
        let x = BasisCandidate::xy(XYBasisParams::new(1.0, 0.0).unwrap());
        // diag(1/2, 0, 0, 1/2) in the x basis: (|v><v| + |w><w|)/8 with v all
        // ones and w the parity signs, so 1/4 wherever w_p = w_q. Four such
        // off-diagonal entries give 4/16.
        assert_relative_eq!(coherence_norm(&mixed, &x).unwrap(), 0.25, epsilon = 1e-15);
        // Bell state in the pointer basis: two off-diagonals of modulus 1/2.
        let bell = pure(c(h, 0.0), c(h, 0.0)).density();
        assert_relative_eq!(
            coherence_norm(&bell, &BasisCandidate::pointer()).unwrap(),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn coherence_norm_ignores_relabeling() {
        let rho = pure(c(0.6, 0.1), c(0.3, -0.734_846_922_834_953_4)).density();
        let b = BasisCandidate::bloch(0.9, 1.3);
        let w = b.product_basis().unwrap();
        let perm = [2usize, 0, 3, 1];
        let cols: Vec<Complex<f64>> = (0..4)
            .flat_map(|r| perm.iter().map(move |&k| (r, k)))
            .map(|(r, k)| w.get(r, k))
            .collect();
        let wp = ComplexMatrix::from_row_major(4, 4, cols).unwrap();
        let rp = wp.adjoint().as_dmatrix() * rho.matrix().as_dmatrix() * wp.as_dmatrix();
        let mut norm = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                if p != q {
                    norm += rp[(p, q)].norm_sqr();
                }
            }
        }
        assert_relative_eq!(norm, coherence_norm(&rho, &b).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn decohered_states_select_the_pointer_basis() {
        for (p, q) in [(0.5, 0.5), (0.36, 0.64), (0.9, 0.1)] {
            let rho = diag(p, q);
            let report = pointer_scan(&rho, &default_grid(), 1e-8).unwrap();
            assert!(report.minimizer.is_pointer());
            assert!(report.is_unique);
            assert!(report.margin > 1e-6);
            for (b, v) in &report.candidates {
                if !b.is_pointer() {
                    assert!(*v > 0.0);
                }
            }
            for p in xy_direction_grid::<f64>(16) {
                assert!(coherence_norm(&rho, &BasisCandidate::xy(p)).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn maximally_mixed_state_is_degenerate() {
        let rho = crate::hilbert::validate_density(
            ComplexMatrix::identity(4).scale(c(0.25, 0.0)),
            &[2, 2],
        )
        .unwrap();
        let report = pointer_scan(&rho, &default_grid(), 1e-8).unwrap();
        assert!(!report.is_unique);
        assert!(report.candidates.iter().all(|(_, v)| v.abs() < 1e-15));
    }

    #[test]
    fn partial_decoherence_shrinks_margin() {
        let h = FRAC_1_SQRT_2;
        let bell = pure(c(h, 0.0), c(h, 0.0)).density();
        let spec = BathSpec::ohmic(1.0, 1.0, Temperature::Zero).unwrap();
        let curve = coherence_curve(&bell, 0.0, &spec, &[0.5, 2.0, 20.0]).unwrap();
        let margins: Vec<f64> = curve
            .states
            .iter()
            .map(|rho| {
                let r = pointer_scan(rho, &default_grid(), 1e-8).unwrap();
                assert!(r.minimizer.is_pointer());
                r.margin
            })
            .collect();
        let full = pointer_scan(&diag(0.5, 0.5), &default_grid(), 1e-8)
            .unwrap()
            .margin;
        assert!(margins[0] < margins[1] && margins[1] < margins[2] && margins[2] <= full + 1e-15);
    }

    #[test]
    fn scan_grid_requirements() {
        let rho = diag(0.5, 0.5);
        assert!(pointer_scan(&rho, &default_grid()[1..], 1e-8).is_err());
        assert!(pointer_scan(&rho, &bloch_grid(5, 5), 1e-8).is_err());
        assert_eq!(default_grid::<f64>().len(), 101);
    }

    #[test]
    fn decoherence_time_zero_temperature() {
        let h = FRAC_1_SQRT_2;
        let bell = pure(c(h, 0.0), c(h, 0.0)).density();
        let spec = BathSpec::ohmic(1.0, 1.0, Temperature::Zero).unwrap();
        let times: Vec<f64> = (0..=2000).map(|i| i as f64 * 1e-3).collect();
        let curve = coherence_curve(&bell, 0.3, &spec, &times).unwrap();
        let t1 = decoherence_time(&curve, default_threshold()).unwrap();
        assert_relative_eq!(t1, 0.805_432_350_169_850_2, epsilon = 1e-6);
        assert_eq!(decoherence_time(&curve, 1.0).unwrap(), 0.0);
        let later = decoherence_time(&curve, 0.1).unwrap();
        assert!(later > t1);
        assert!(matches!(
            decoherence_time(&curve, 1e-9),
            Err(Error::ThresholdNotReached { .. })
        ));
    }

    #[test]
    fn stronger_coupling_decoheres_faster() {
        let h = FRAC_1_SQRT_2;
        let bell = pure(c(h, 0.0), c(h, 0.0)).density();
        let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        let mut prev = f64::INFINITY;
        for eta in [0.5, 1.0, 2.0] {
            let spec = BathSpec::ohmic(eta, 1.0, Temperature::Beta(2.0)).unwrap();
            let curve = coherence_curve(&bell, 1.0, &spec, &times).unwrap();
            let t1 = decoherence_time(&curve, default_threshold()).unwrap();
            assert!(t1 <= prev);
            prev = t1;
        }
    }

    #[test]
    fn decoherence_time_needs_initial_coherence() {
        let spec = BathSpec::ohmic(1.0, 1.0, Temperature::Zero).unwrap();
        let curve = coherence_curve(&diag(0.5, 0.5), 0.0, &spec, &[0.0, 1.0]).unwrap();
        assert!(decoherence_time(&curve, 0.5).is_err());
    }

    #[test]
    fn ambiguity_examples() {
        let h = FRAC_1_SQRT_2;
        let grid = xy_direction_grid::<f64>(24);

        let r = ambiguity_check(&pure(c(h, 0.0), c(h, 0.0)), &grid, 1e-10).unwrap();
        assert!(r.found());
        assert_eq!(r.correlated.len(), 1);
        assert!(r.correlated[0].y.abs() < 1e-15 && r.correlated[0].x > 0.0);
        assert_eq!(r.correlated_angle, Some(0.0));
        // b = a e^{2 i alpha} with alpha = pi/2 also holds for b = -a.
        assert!((r.anticorrelated_angle.unwrap() - PI / 2.0).abs() < 1e-15);

        let r = ambiguity_check(&pure(c(1.0, 0.0), c(0.0, 0.0)), &grid, 1e-10).unwrap();
        assert!(!r.found());
        assert_eq!(r.correlated_angle, None);

        // b/a = i: alpha = pi/4, the diagonal x = y.
        let r = ambiguity_check(&pure(c(h, 0.0), c(0.0, h)), &grid, 1e-10).unwrap();
        assert_eq!(r.correlated.len(), 1);
        assert!((r.correlated[0].x - r.correlated[0].y).abs() < 1e-15);
        assert!((r.correlated_angle.unwrap() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn unequal_weights_have_no_alternative() {
        let r = ambiguity_check(
            &pure(c(0.6, 0.0), c(0.8, 0.0)),
            &xy_direction_grid::<f64>(360),
            1e-10,
        )
        .unwrap();
        assert!(!r.found());
    }

    #[test]
    fn equal_weight_premeasurements_are_ambiguous_then_decohere_uniquely() {
        let cfg = PremeasurementConfig::new(0.0, 1.0, 1).unwrap();
        let h = FRAC_1_SQRT_2;
        for k in 0..12 {
            let b = c(h, 0.0) * phase(PI * k as f64 / 6.0);
            let psi = premeasure(c(h, 0.0), b, &cfg).unwrap();
            let r = ambiguity_check(&psi, &xy_direction_grid(12), 1e-10).unwrap();
            assert!(r.found(), "k = {k}");
            let rho = diag(psi.amplitude(0).norm_sqr(), psi.amplitude(3).norm_sqr());
            assert!(pointer_scan(&rho, &default_grid(), 1e-8).unwrap().is_unique);
        }
    }
}
