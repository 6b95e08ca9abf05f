//! Envariance and branch counting.
//!
//! A pure state `c0|s0 a0> + c1|s1 a1>` is envariant under the system swap
//! `U_S` when an operation `U_A` on the environment alone undoes it. That
//! happens exactly when `|c0| = |c1|`. Unequal weights are reduced to the
//! equal case by splitting each branch into `a` and `b` equal-weight
//! sub-branches, after which the probabilities follow by counting.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::hilbert::{ComplexMatrix, JointState};
use crate::scalar::{phase, Real};

/// Schmidt form `sum_i c_i |s_i> |a_i>`.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition<T: Real> {
    /// Sorted by decreasing modulus.
    pub coefficients: Vec<Complex<T>>,
    pub basis_s: Vec<DVector<Complex<T>>>,
    pub basis_a: Vec<DVector<Complex<T>>>,
}

impl<T: Real> SchmidtDecomposition<T> {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> DVector<Complex<T>> {
        let ds = self.basis_s.first().map_or(0, |v| v.len());
        let da = self.basis_a.first().map_or(0, |v| v.len());
        let mut out = DVector::from_element(ds * da, Complex::new(T::zero(), T::zero()));
        for ((c, s), a) in self
            .coefficients
            .iter()
            .zip(&self.basis_s)
            .zip(&self.basis_a)
        {
            out += s.kronecker(a) * *c;
        }
        out
    }
}

const SCHMIDT_CUTOFF: f64 = 1e-12;

/// Splits `psi` after its first `split` subsystems.
///
/// Phase convention: the first component of modulus above `1e-12` of every
/// `|s_i>` and `|a_i>` is real and positive; the remaining phase sits in `c_i`.
pub fn schmidt_decompose<T: Real>(
    psi: &JointState<T>,
    split: usize,
) -> Result<SchmidtDecomposition<T>> {
    let dims = psi.dims();
    if split == 0 || split >= dims.len() {
        return Err(Error::Subsystems(format!(
            "split {split} must separate the {} subsystems into two parts",
            dims.len()
        )));
    }
    let ds: usize = dims[..split].iter().product();
    let da: usize = dims[split..].iter().product();
    let m = DMatrix::from_fn(ds, da, |i, j| psi.amplitude(i * da + j));
    let svd = m.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => {
            return Err(Error::Parameter(
                "singular value decomposition did not converge".into(),
            ))
        }
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| {
        svd.singular_values[y]
            .partial_cmp(&svd.singular_values[x])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut out = SchmidtDecomposition {
        coefficients: vec![],
        basis_s: vec![],
        basis_a: vec![],
    };
    for k in order {
        let sigma = svd.singular_values[k];
        if sigma <= T::lit(SCHMIDT_CUTOFF) {
            continue;
        }
        let (s, ps) = fix_phase(u.column(k).into_owned());
        let (a, pa) = fix_phase(vt.row(k).transpose());
        out.coefficients.push(ps * pa * sigma);
        out.basis_s.push(s);
        out.basis_a.push(a);
    }
    Ok(out)
}

/// Returns `(v e^{-i theta}, e^{i theta})` with the leading significant entry
/// of the first made real and positive.
fn fix_phase<T: Real>(v: DVector<Complex<T>>) -> (DVector<Complex<T>>, Complex<T>) {
    let lead = v
        .iter()
        .find(|z| z.norm_sqr().sqrt() > T::lit(SCHMIDT_CUTOFF))
        .copied();
    match lead {
        Some(z) => {
            let p = phase(z.im.atan2(z.re));
            (v * p.conj(), p)
        }
        None => (v, Complex::new(T::one(), T::zero())),
    }
}

fn check_pair<T: Real>(basis: &[DVector<Complex<T>>]) -> Result<usize> {
    if basis.len() != 2 {
        return Err(Error::Dimension(format!(
            "need exactly two basis vectors, got {}",
            basis.len()
        )));
    }
    let d = basis[0].len();
    if basis[1].len() != d || d < 2 {
        return Err(Error::Dimension(
            "basis vectors must share a dimension of at least 2".into(),
        ));
    }
    let tol = T::check_tol();
    let n0 = basis[0].norm_squared();
    let n1 = basis[1].norm_squared();
    let overlap = basis[0].dotc(&basis[1]).norm_sqr().sqrt();
    if (n0 - T::one()).abs() > tol || (n1 - T::one()).abs() > tol || overlap > tol {
        return Err(Error::Parameter("basis vectors are not orthonormal".into()));
    }
    Ok(d)
}

/// `e^{i t}|v1><v0| + e^{-i t}|v0><v1|` plus the identity on the orthogonal
/// complement.
fn phased_swap<T: Real>(t: T, basis: &[DVector<Complex<T>>]) -> Result<ComplexMatrix<T>> {
    let d = check_pair(basis)?;
    let (v0, v1) = (&basis[0], &basis[1]);
    let p0 = v0 * v0.adjoint();
    let p1 = v1 * v1.adjoint();
    let m = DMatrix::identity(d, d) - p0 - p1
        + v1 * v0.adjoint() * phase(t)
        + v0 * v1.adjoint() * phase(-t);
    ComplexMatrix::from_dmatrix(m)
}

/// `U_S = e^{i phi}|s1><s0| + e^{-i phi}|s0><s1|`.
pub fn swap_system<T: Real>(phi: T, basis_s: &[DVector<Complex<T>>]) -> Result<ComplexMatrix<T>> {
    phased_swap(phi, basis_s)
}

/// `U_A = e^{i chi}|a1><a0| + e^{-i chi}|a0><a1|` with `chi = phi1 - phi0 - phi`,
/// which undoes [`swap_system`] on `|c|(e^{i phi0}|s0 a0> + e^{i phi1}|s1 a1>)`.
pub fn counter_swap<T: Real>(
    phi: T,
    phi0: T,
    phi1: T,
    basis_a: &[DVector<Complex<T>>],
) -> Result<ComplexMatrix<T>> {
    phased_swap(phi1 - phi0 - phi, basis_a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equality {
    Exact,
    UpToGlobalPhase,
}

/// `|| (U_S (x) U_A) psi - psi ||`, or its minimum over a global phase.
pub fn reversal_residual<T: Real>(
    psi: &JointState<T>,
    u_s: &ComplexMatrix<T>,
    u_a: &ComplexMatrix<T>,
    mode: Equality,
) -> Result<T> {
    let dims = psi.dims();
    if dims.len() != 2
        || u_s.rows() != dims[0]
        || u_a.rows() != dims[1]
        || !u_s.is_square()
        || !u_a.is_square()
    {
        return Err(Error::Dimension(format!(
            "operators {}x{} and {}x{} do not act on a bipartite state with dims {dims:?}",
            u_s.rows(),
            u_s.cols(),
            u_a.rows(),
            u_a.cols()
        )));
    }
    let full = crate::hilbert::tensor_product(u_s, u_a);
    let out = full.apply(psi.amplitudes())?;
    let diff = match mode {
        Equality::Exact => (&out - psi.amplitudes()).norm(),
        Equality::UpToGlobalPhase => {
            // min_theta |out e^{i theta} - psi|^2 = 2 - 2 |<out|psi>|.
            let overlap = out.dotc(psi.amplitudes()).norm_sqr().sqrt();
            (T::lit(2.0) - T::lit(2.0) * overlap).max(T::zero()).sqrt()
        }
    };
    Ok(diff)
}

/// `U_A U_S |psi> = |psi>` within `tol` (strict).
pub fn is_envariant<T: Real>(
    psi: &JointState<T>,
    u_s: &ComplexMatrix<T>,
    u_a: &ComplexMatrix<T>,
    tol: T,
    mode: Equality,
) -> Result<bool> {
    Ok(reversal_residual(psi, u_s, u_a, mode)? < tol)
}

/// Equal-weight refinement of `c0|s0>|a0> + c1|s1>|a1>` into `a + b` branches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FineGrainedState<T: Real> {
    pub a_count: u64,
    pub b_count: u64,
    pub phi0: T,
    pub phi1: T,
}

pub const FINE_GRAIN_TOL: f64 = 1e-9;
pub const MATERIALIZE_CAP: u64 = 1024;

impl<T: Real> FineGrainedState<T> {
    pub fn total(&self) -> u64 {
        self.a_count + self.b_count
    }

    /// Shared branch modulus `1/sqrt(a + b)`.
    pub fn branch_modulus(&self) -> T {
        T::one() / T::lit(self.total() as f64).sqrt()
    }

    /// Branch `k` lies in the `s1` sector when `k >= a`.
    pub fn branch_amplitude(&self, k: u64) -> Complex<T> {
        let phi = if k < self.a_count {
            self.phi0
        } else {
            self.phi1
        };
        phase(phi) * self.branch_modulus()
    }

    /// Explicit state on `S (x) M (x) E` with dims `[2, n, n]`, `n = a + b`:
    /// branch `k` is `|s(k)>|m_k>|e_k>`.
    pub fn materialize(&self) -> Result<JointState<T>> {
        let n = self.total();
        if n > MATERIALIZE_CAP {
            return Err(Error::DimensionCap {
                required: n as usize,
                cap: MATERIALIZE_CAP as usize,
            });
        }
        let n = n as usize;
        let mut v = DVector::from_element(2 * n * n, Complex::new(T::zero(), T::zero()));
        for k in 0..n {
            let s = usize::from(k as u64 >= self.a_count);
            v[self.index(s, k, k)] = self.branch_amplitude(k as u64);
        }
        JointState::new(vec![2, n, n], v)
    }

    fn index(&self, s: usize, m: usize, e: usize) -> usize {
        let n = self.total() as usize;
        (s * n + m) * n + e
    }

    /// Swaps branches `k` and `l` on `S (x) M` with phase `phi`, then undoes it
    /// with a phased swap of `|e_k>`, `|e_l>`. Returns the residual
    /// `|| U_E U_SM psi - psi ||` on the materialized state.
    pub fn branch_swap_residual(&self, k: usize, l: usize, phi: T) -> Result<T> {
        let n = self.total() as usize;
        if k >= n || l >= n || k == l {
            return Err(Error::Parameter(format!(
                "branches {k}, {l} must be distinct and below {n}"
            )));
        }
        let psi = self.materialize()?;
        let sector = |j: usize| usize::from(j as u64 >= self.a_count);
        let theta = |j: usize| {
            if j as u64 >= self.a_count {
                self.phi1
            } else {
                self.phi0
            }
        };
        let chi = theta(l) - theta(k) - phi;
        let (sk, sl) = (sector(k), sector(l));
        let amps = psi.amplitudes();
        let mut out = amps.clone();
        for s in 0..2 {
            for m in 0..n {
                for e in 0..n {
                    let z = amps[self.index(s, m, e)];
                    if z == Complex::new(T::zero(), T::zero()) {
                        continue;
                    }
                    out[self.index(s, m, e)] -= z;
                    // U_SM: |s_k m_k> -> e^{i phi}|s_l m_l>, |s_l m_l> -> e^{-i phi}|s_k m_k>.
                    let (s2, m2, z) = if (s, m) == (sk, k) {
                        (sl, l, z * phase(phi))
                    } else if (s, m) == (sl, l) {
                        (sk, k, z * phase(-phi))
                    } else {
                        (s, m, z)
                    };
                    // U_E: |e_k> -> e^{i chi}|e_l>, |e_l> -> e^{-i chi}|e_k>.
                    let (e2, z) = if e == k {
                        (l, z * phase(chi))
                    } else if e == l {
                        (k, z * phase(-chi))
                    } else {
                        (e, z)
                    };
                    out[self.index(s2, m2, e2)] += z;
                }
            }
        }
        Ok((out - amps).norm())
    }
}

/// Refines `c0|s0 a0> + c1|s1 a1>` into `a + b` equal branches; needs
/// `|c0|^2 = a/(a+b)` and `|c1|^2 = b/(a+b)` within `1e-9`.
pub fn fine_grain<T: Real>(
    c0: Complex<T>,
    c1: Complex<T>,
    a_count: u64,
    b_count: u64,
) -> Result<FineGrainedState<T>> {
    if a_count == 0 || b_count == 0 {
        return Err(Error::Parameter("branch counts must be positive".into()));
    }
    let n = T::lit((a_count + b_count) as f64);
    let r0 = (c0.norm_sqr() - T::lit(a_count as f64) / n).abs();
    let r1 = (c1.norm_sqr() - T::lit(b_count as f64) / n).abs();
    let residual = r0.max(r1);
    if !(residual <= T::lit(FINE_GRAIN_TOL)) {
        return Err(Error::CountMismatch {
            residual: residual.to_f64(),
        });
    }
    Ok(FineGrainedState {
        a_count,
        b_count,
        phi0: c0.im.atan2(c0.re),
        phi1: c1.im.atan2(c1.re),
    })
}

/// Branch-counting probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BornCounts {
    pub p0: Ratio<u64>,
    pub p1: Ratio<u64>,
}

impl BornCounts {
    pub fn to_f64(&self) -> (f64, f64) {
        let f = |r: Ratio<u64>| *r.numer() as f64 / *r.denom() as f64;
        (f(self.p0), f(self.p1))
    }
}

/// `P(s0) = a/(a+b)`, `P(s1) = b/(a+b)`, exactly.
pub fn born_by_counting<T: Real>(state: &FineGrainedState<T>) -> BornCounts {
    let n = state.total();
    BornCounts {
        p0: Ratio::new(state.a_count, n),
        p1: Ratio::new(state.b_count, n),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalApprox {
    pub a_count: u64,
    pub b_count: u64,
    /// `1/(a + b)`.
    pub gap: f64,
}

/// Largest `n = a + b <= cap` with `a/n <= p < (a+1)/n` and both counts
/// positive. Fails when `p < 1/cap` or `p >= 1 - 1/cap`, where no such
/// split exists.
pub fn rational_approx(p: f64, cap: u64) -> Result<RationalApprox> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    if cap < 2 {
        return Err(Error::Parameter(format!(
            "denominator cap must be at least 2, got {cap}"
        )));
    }
    for n in (2..=cap).rev() {
        let nf = n as f64;
        let mut a = (p * nf).floor() as u64;
        if (a as f64) / nf > p {
            a -= 1;
        } else if ((a + 1) as f64) / nf <= p {
            a += 1;
        }
        if a >= 1 && a < n {
            return Ok(RationalApprox {
                a_count: a,
                b_count: n - a,
                gap: 1.0 / nf,
            });
        }
    }
    Err(Error::Parameter(format!(
        "p = {p} has no split with positive counts and a + b <= {cap}"
    )))
}

/// Smallest `a + b <= cap` with `|a/(a+b) - p| <= tol`, for weights that are
/// rational up to rounding.
pub fn exact_counts(p: f64, cap: u64, tol: f64) -> Result<(u64, u64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    for n in 2..=cap {
        let a = (p * n as f64).round() as u64;
        if a >= 1 && a < n && (a as f64 / n as f64 - p).abs() <= tol {
            return Ok((a, n - a));
        }
    }
    Err(Error::CountMismatch { residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn two(c0: C, c1: C) -> JointState<f64> {
        JointState::from_slice(vec![2, 2], &[c0, c(0.0, 0.0), c(0.0, 0.0), c1]).unwrap()
    }

    fn std_basis() -> Vec<DVector<C>> {
        vec![
            DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]),
        ]
    }

    /// Singular values of a 2x2 matrix from the eigenvalues of `M^+ M`.
    fn svd2_oracle(m: [C; 4]) -> (f64, f64) {
        let [p, q, r, s] = m;
        let tr = p.norm_sqr() + q.norm_sqr() + r.norm_sqr() + s.norm_sqr();
        let det = (p * s - q * r).norm_sqr();
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        (
            ((tr + disc) / 2.0).sqrt(),
            ((tr - disc) / 2.0).max(0.0).sqrt(),
        )
    }

    #[test]
    fn schmidt_examples() {
        let h = FRAC_1_SQRT_2;
        let d = schmidt_decompose(&two(c(1.0, 0.0), c(0.0, 0.0)), 1).unwrap();
        assert_eq!(d.rank(), 1);
        assert!((d.coefficients[0] - c(1.0, 0.0)).norm() < 1e-15);

        let d = schmidt_decompose(&two(c(h, 0.0), c(h, 0.0)), 1).unwrap();
        assert_eq!(d.rank(), 2);
        for z in &d.coefficients {
            assert!((z.norm() - h).abs() < 1e-15);
        }

        let d = schmidt_decompose(&two(c(0.6, 0.0), c(0.8, 0.0)), 1).unwrap();
        assert!((d.coefficients[0].norm() - 0.8).abs() < 1e-15);
        assert!((d.coefficients[1].norm() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn schmidt_matches_independent_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let v: Vec<C> = (0..4)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let v: Vec<C> = v.iter().map(|z| z / n).collect();
            let psi = JointState::from_slice(vec![2, 2], &v).unwrap();
            let d = schmidt_decompose(&psi, 1).unwrap();
            let (s0, s1) = svd2_oracle([v[0], v[1], v[2], v[3]]);
            assert!((d.coefficients[0].norm() - s0).abs() < 1e-10);
            if s1 > 1e-12 {
                assert!((d.coefficients[1].norm() - s1).abs() < 1e-10);
            }
            assert!((d.reconstruct() - psi.amplitudes()).norm() < 1e-10);
            for (b, name) in [(&d.basis_s, "s"), (&d.basis_a, "a")] {
                for i in 0..b.len() {
                    let lead = b[i].iter().find(|z| z.norm() > 1e-12).unwrap();
                    assert!(lead.im.abs() < 1e-14 && lead.re > 0.0, "{name}");
                    for j in 0..b.len() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((b[i].dotc(&b[j]) - c(want, 0.0)).norm() < 1e-10);
                    }
                }
            }
            let sq: f64 = d.coefficients.iter().map(|z| z.norm_sqr()).sum();
            assert!((sq - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn schmidt_is_idempotent() {
        let v = [c(0.3, 0.2), c(-0.1, 0.5), c(0.4, -0.3), c(0.2, 0.1)];
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi = JointState::from_slice(vec![2, 2], &v.map(|z| z / n)).unwrap();
        let d1 = schmidt_decompose(&psi, 1).unwrap();
        let again = JointState::new(vec![2, 2], d1.reconstruct()).unwrap();
        let d2 = schmidt_decompose(&again, 1).unwrap();
        for k in 0..2 {
            assert!((d1.coefficients[k] - d2.coefficients[k]).norm() < 1e-12);
            assert!((&d1.basis_s[k] - &d2.basis_s[k]).norm() < 1e-12);
            assert!((&d1.basis_a[k] - &d2.basis_a[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn schmidt_on_uneven_split() {
        let psi = JointState::<f64>::basis(vec![2, 3, 2], 7).unwrap();
        let d = schmidt_decompose(&psi, 1).unwrap();
        assert_eq!(d.rank(), 1);
        assert_eq!(d.basis_s[0].len(), 2);
        assert_eq!(d.basis_a[0].len(), 6);
        assert!(schmidt_decompose(&psi, 3).is_err());
    }

    #[test]
    fn swap_properties() {
        let s = swap_system(0.0, &std_basis()).unwrap();
        assert_eq!(s, crate::hilbert::pauli_x());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let phi = rng.random_range(-PI..PI);
            let u = swap_system(phi, &std_basis()).unwrap();
            assert!(u.unitarity_residual() < 1e-12);
            assert!((&u * &u).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        }
        let bad = vec![std_basis()[0].clone(), std_basis()[0].clone()];
        assert!(swap_system(0.1, &bad).is_err());
    }

    #[test]
    fn swap_acts_as_identity_off_the_pair() {
        let e =
            |i: usize| DVector::from_fn(3, |r, _| if r == i { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let u = swap_system(0.4, &[e(0), e(2)]).unwrap();
        assert!((u.get(1, 1) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((u.get(2, 0) - phase(0.4)).norm() < 1e-15);
        assert!(u.unitarity_residual() < 1e-14);
    }

    #[test]
    fn bell_state_is_envariant() {
        let h = FRAC_1_SQRT_2;
        let psi = two(c(h, 0.0), c(h, 0.0));
        let us = swap_system(0.0, &std_basis()).unwrap();
        let ua = counter_swap(0.0, 0.0, 0.0, &std_basis()).unwrap();
        assert_eq!(ua, crate::hilbert::pauli_x());
        assert!(is_envariant(&psi, &us, &ua, 1e-10, Equality::Exact).unwrap());
    }

    #[test]
    fn random_phases_equal_moduli_reverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = FRAC_1_SQRT_2;
        for _ in 0..100 {
            let (p0, p1, phi) = (
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
                rng.random_range(-PI..PI),
            );
            let psi = two(phase(p0) * h, phase(p1) * h);
            let d = schmidt_decompose(&psi, 1).unwrap();
            let (q0, q1) = (d.coefficients[0].arg(), d.coefficients[1].arg());
            let us = swap_system(phi, &d.basis_s).unwrap();
            let ua = counter_swap(phi, q0, q1, &d.basis_a).unwrap();
            assert!(reversal_residual(&psi, &us, &ua, Equality::Exact).unwrap() < 1e-10);
        }
    }

    #[test]
    fn unequal_moduli_do_not_reverse() {
        let psi = two(c(0.8, 0.0), c(0.6, 0.0));
        let us = swap_system(0.0, &std_basis()).unwrap();
        let ua = counter_swap(0.0, 0.0, 0.0, &std_basis()).unwrap();
        let r = reversal_residual(&psi, &us, &ua, Equality::Exact).unwrap();
        assert!((r - 0.2 * 2f64.sqrt()).abs() < 1e-15);
        assert!(r > 0.1);
        assert!(!is_envariant(&psi, &us, &ua, 1e-10, Equality::UpToGlobalPhase).unwrap());
    }

    #[test]
    fn product_state_with_one_sided_swap() {
        let psi = JointState::basis(vec![2, 2], 0).unwrap();
        let us = swap_system(0.0, &std_basis()).unwrap();
        let id = ComplexMatrix::identity(2);
        assert!(!is_envariant(&psi, &us, &id, 1e-10, Equality::Exact).unwrap());
        let h = FRAC_1_SQRT_2;
        let sym = JointState::from_slice(
            vec![2, 2],
            &[c(h, 0.0), c(0.0, 0.0), c(h, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert!(is_envariant(&sym, &us, &id, 1e-10, Equality::Exact).unwrap());
    }

    #[test]
    fn strict_tolerance_and_global_phase_mode() {
        let psi = JointState::basis(vec![2, 2], 0).unwrap();
        let id = ComplexMatrix::identity(2);
        let minus = id.scale(c(-1.0, 0.0));
        let r = reversal_residual(&psi, &minus, &id, Equality::Exact).unwrap();
        assert_eq!(r, 2.0);
        assert!(!is_envariant(&psi, &minus, &id, 2.0, Equality::Exact).unwrap());
        assert!(is_envariant(&psi, &minus, &id, 2.0 + 1e-12, Equality::Exact).unwrap());
        assert!(is_envariant(&psi, &minus, &id, 1e-10, Equality::UpToGlobalPhase).unwrap());
    }

    #[test]
    fn fine_grain_examples() {
        let h = FRAC_1_SQRT_2;
        let s = fine_grain(c(h, 0.0), c(h, 0.0), 1, 1).unwrap();
        assert!((s.branch_modulus() - h).abs() < 1e-15);
        let s = fine_grain(c(0.5, 0.0), c(0.0, 0.75f64.sqrt()), 1, 3).unwrap();
        assert!((s.branch_modulus() - 0.5).abs() < 1e-15);
        assert_eq!(born_by_counting(&s).to_f64(), (0.25, 0.75));
        let s = fine_grain(c(0.4f64.sqrt(), 0.0), c(0.6f64.sqrt(), 0.0), 2, 3).unwrap();
        assert!((s.branch_modulus() - 0.2f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            born_by_counting(&s),
            BornCounts {
                p0: Ratio::new(2, 5),
                p1: Ratio::new(3, 5)
            }
        );
        assert!(matches!(
            fine_grain(c(h, 0.0), c(h, 0.0), 1, 3),
            Err(Error::CountMismatch { .. })
        ));
        assert!(fine_grain(c(1.0, 0.0), c(0.0, 0.0), 1, 0).is_err());
    }

    #[test]
    fn counting_reproduces_rational_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=100u64 {
            for a in 1..n {
                let b = n - a;
                let c0 = phase(rng.random_range(-PI..PI)) * (a as f64 / n as f64).sqrt();
                let c1 = phase(rng.random_range(-PI..PI)) * (b as f64 / n as f64).sqrt();
                let born = born_by_counting(&fine_grain(c0, c1, a, b).unwrap());
                assert_eq!(born.p0, Ratio::new(a, n));
                assert_eq!(born.p0 + born.p1, Ratio::from_integer(1));
                assert!((born.to_f64().0 - c0.norm_sqr()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn materialized_branches_are_equal_and_envariant() {
        let s = fine_grain(c(0.5, 0.0), phase(1.1) * 0.75f64.sqrt(), 1, 3).unwrap();
        let psi = s.materialize().unwrap();
        assert_eq!(psi.dims(), &[2, 4, 4]);
        let nz: Vec<f64> = psi
            .amplitudes()
            .iter()
            .map(|z| z.norm())
            .filter(|&m| m > 0.0)
            .collect();
        assert_eq!(nz.len(), 4);
        assert!(nz.iter().all(|m| (m - 0.5).abs() < 1e-15));
        for (k, l) in [(0, 1), (0, 3), (1, 2)] {
            assert!(s.branch_swap_residual(k, l, 0.3).unwrap() < 1e-12);
        }
        let big = FineGrainedState::<f64> {
            a_count: 600,
            b_count: 600,
            phi0: 0.0,
            phi1: 0.0,
        };
        assert!(matches!(big.materialize(), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn rational_approx_examples() {
        let r = rational_approx(1.0 / 3.0, 3).unwrap();
        assert_eq!((r.a_count, r.b_count), (1, 2));
        assert!((r.gap - 1.0 / 3.0).abs() < 1e-15);

        let p = 1.0 / PI;
        let r = rational_approx(p, 10_000).unwrap();
        let n = (r.a_count + r.b_count) as f64;
        assert_eq!(n, 10_000.0);
        assert!(r.a_count as f64 / n <= p && p < (r.a_count + 1) as f64 / n);
        assert!((r.a_count as f64 / n - p).abs() <= 1e-4);
        assert!(r.gap <= 1e-4);

        // Exhaustive search: among all n <= cap, no larger admissible n exists
        // and floor(p n) is the unique count satisfying the interval condition.
        assert!(rational_approx(p, 3).is_err());
        for n in 4..=200u64 {
            let r = rational_approx(p, n).unwrap();
            let cnt = (1..n)
                .filter(|&a| a as f64 / n as f64 <= p && p < (a + 1) as f64 / n as f64)
                .count();
            assert_eq!(cnt, 1);
            assert_eq!(r.a_count + r.b_count, n);
        }
    }

    #[test]
    fn gap_shrinks_with_cap() {
        let p = 2f64.sqrt() - 1.0;
        let mut cap = 8;
        while cap < 100_000 {
            assert!(
                rational_approx(p, 2 * cap).unwrap().gap <= rational_approx(p, cap).unwrap().gap
            );
            cap *= 2;
        }
    }

    #[test]
    fn rational_approx_edges() {
        assert!(rational_approx(0.0, 10).is_err());
        assert!(rational_approx(0.5, 1).is_err());
        assert!(rational_approx(0.01, 50).is_err());
        let r = rational_approx(0.01, 200).unwrap();
        assert!(r.a_count >= 1);
        assert_eq!(exact_counts(0.25, 100, 1e-12).unwrap(), (1, 3));
        assert_eq!(exact_counts(0.4, 100, 1e-12).unwrap(), (2, 3));
    }
}
