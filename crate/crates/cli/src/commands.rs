use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use pointer_sim::bath::{
    decoherence_exponent, evolve_density_with_i1, i1_discrete, Mode, Temperature,
};
use pointer_sim::envariance::{
    born_by_counting, counter_swap, exact_counts, fine_grain, rational_approx, reversal_residual,
    swap_system, Equality,
};
use pointer_sim::hilbert::{DensityOperator, JointState};
use pointer_sim::measurement::{premeasure, premeasurement_unitary, PremeasurementConfig};
use pointer_sim::oracle::{DenseOracle, FactorizedOracle, TruncatedBath};
use pointer_sim::pointer::{
    ambiguity_check, bloch_grid, pointer_scan, xy_direction_grid, BasisCandidate, BasisKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    from_complex, to_complex, DecohereConfig, EnvarianceConfig, ModesConfig, OracleConfig,
    OracleRoute, Pair, PremeasureConfig, ScanConfig, ScanState,
};
use crate::error::CliError;

/// Largest fine-grained branch count for which the branch swap is checked on
/// the materialized state.
const BRANCH_SWAP_LIMIT: u64 = 128;

pub const DECOHERE_HEADER: [&str; 7] = [
    "t",
    "I1",
    "re_rho14",
    "im_rho14",
    "abs_rho14",
    "pop_pp",
    "pop_mm",
];
pub const ORACLE_HEADER: [&str; 3] = ["t", "max_abs_diff", "truncation_bound"];

/// Bytes to write plus a failure that is reported after they are written.
#[derive(Debug)]
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub summary: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(bytes: Vec<u8>, summary: String) -> Self {
        Self {
            bytes,
            summary,
            failure: None,
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

fn json<S: Serialize>(value: &S) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn pure_density(amps: &[Complex64]) -> Result<DensityOperator<f64>, CliError> {
    Ok(JointState::from_slice(vec![2, 2], amps)?.density())
}

#[derive(Serialize)]
struct PremeasureReport {
    tau_pm: f64,
    amplitudes: Vec<Pair>,
    unitary: Vec<Vec<Pair>>,
}

pub fn premeasure_cmd(cfg: &PremeasureConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let pm = PremeasurementConfig::new(cfg.omega0, cfg.g, cfg.n_odd)?;
    let state = premeasure(to_complex(cfg.a), to_complex(cfg.b), &pm)?;
    let u = premeasurement_unitary(cfg.g, pm.tau_pm())?;
    let report = PremeasureReport {
        tau_pm: pm.tau_pm(),
        amplitudes: state
            .amplitudes()
            .iter()
            .map(|z| from_complex(*z))
            .collect(),
        unitary: (0..4)
            .map(|r| (0..4).map(|c| from_complex(u.get(r, c))).collect())
            .collect(),
    };
    Ok(Outcome::ok(
        json(&report)?,
        format!("tau_pm = {:.6}", report.tau_pm),
    ))
}

pub fn decohere_cmd(cfg: &DecohereConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let spec = cfg.bath.spec()?;
    let times = cfg.times.points()?;
    let (a, b) = (to_complex(cfg.a), to_complex(cfg.b));
    let zero = Complex64::new(0.0, 0.0);
    let rho0 = pure_density(&[a, zero, zero, b])?;
    let rows = times
        .par_iter()
        .map(|&t| {
            let i1 = decoherence_exponent(&spec, t)?;
            let rho = evolve_density_with_i1(&rho0, cfg.omega0, i1, t)?;
            Ok((t, i1, rho.get(0, 3), rho.get(0, 0).re, rho.get(3, 3).re))
        })
        .collect::<Result<Vec<_>, pointer_sim::Error>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DECOHERE_HEADER)?;
    for &(t, i1, z, pp, mm) in &rows {
        w.write_record([
            fmt(t),
            fmt(i1),
            fmt(z.re),
            fmt(z.im),
            fmt(z.norm()),
            fmt(pp),
            fmt(mm),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Output(e.to_string()))?;
    let last = rows.last().map_or(0.0, |r| r.2.norm());
    Ok(Outcome::ok(
        bytes,
        format!("{} rows, final |rho14| = {last:.3e}", rows.len()),
    ))
}

/// Bath modes of an oracle run; stratified couplings come from the seeded RNG.
pub fn oracle_modes(cfg: &OracleConfig) -> Vec<Mode<f64>> {
    match &cfg.modes {
        ModesConfig::Stratified {
            count,
            omega_max,
            g_range,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (1..=*count)
                .map(|k| Mode {
                    omega: omega_max * k as f64 / *count as f64,
                    coupling: Complex64::new(rng.random_range(g_range[0]..=g_range[1]), 0.0),
                })
                .collect()
        }
        ModesConfig::Explicit { modes } => modes
            .iter()
            .map(|m| Mode {
                omega: m.omega,
                coupling: to_complex(m.g),
            })
            .collect(),
    }
}

/// Cutoff-checked bath for an oracle run.
pub fn oracle_bath(cfg: &OracleConfig) -> Result<TruncatedBath<f64>, CliError> {
    let temperature = match cfg.beta {
        None => Temperature::Zero,
        Some(b) => Temperature::from_beta(b)?,
    };
    let modes = oracle_modes(cfg);
    let bath = match cfg.n_max {
        Some(n) => TruncatedBath::new(modes, n, temperature)?,
        None => TruncatedBath::with_adequate_cutoff(modes, temperature, cfg.tail_limit)?,
    };
    if cfg.enforce_adequacy {
        bath.check_adequacy(cfg.tail_limit)?;
    }
    Ok(bath)
}

/// Per-time `max |rho_exact - rho_analytic|` for an oracle config.
pub fn oracle_diffs(
    cfg: &OracleConfig,
    bath: &TruncatedBath<f64>,
) -> Result<Vec<(f64, f64)>, CliError> {
    let times = cfg.times.points()?;
    let amps: Vec<Complex64> = cfg.amplitudes.iter().map(|p| to_complex(*p)).collect();
    let rho0 = pure_density(&amps)?;
    let spec = bath.spec();
    let limit = if cfg.enforce_adequacy {
        cfg.tail_limit
    } else {
        f64::INFINITY
    };
    let analytic = |t: f64| -> pointer_sim::Result<DensityOperator<f64>> {
        evolve_density_with_i1(&rho0, cfg.omega0, i1_discrete(&spec, t)?, t)
    };
    let diffs = match cfg.route {
        OracleRoute::Factorized => {
            let oracle = if cfg.enforce_adequacy {
                FactorizedOracle::new(bath, cfg.omega0, limit)?
            } else {
                FactorizedOracle::new_unchecked(bath, cfg.omega0)?
            };
            times
                .par_iter()
                .map(|&t| Ok((t, oracle.evolve(&rho0, t)?.max_abs_diff(&analytic(t)?))))
                .collect::<pointer_sim::Result<Vec<_>>>()?
        }
        OracleRoute::Dense => {
            let oracle = DenseOracle::new(bath, cfg.omega0, limit, cfg.dimension_cap)?;
            times
                .par_iter()
                .map(|&t| Ok((t, oracle.evolve(&rho0, t)?.max_abs_diff(&analytic(t)?))))
                .collect::<pointer_sim::Result<Vec<_>>>()?
        }
    };
    Ok(diffs)
}

pub fn oracle_cmd(cfg: &OracleConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let bath = oracle_bath(cfg)?;
    let diffs = oracle_diffs(cfg, &bath)?;
    let horizon = diffs.iter().fold(0.0f64, |m, d| m.max(d.0));
    let bound = bath.truncation_bound(horizon);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ORACLE_HEADER)?;
    for &(t, d) in &diffs {
        w.write_record([fmt(t), fmt(d), fmt(bound)])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Output(e.to_string()))?;
    let worst = diffs.iter().fold(0.0f64, |m, d| m.max(d.1));
    let summary = format!(
        "n_max = {}, worst diff = {worst:.3e}, tolerance = {:.1e}",
        bath.n_max(),
        cfg.tolerance
    );
    let failure = (worst.is_nan() || worst >= cfg.tolerance).then(|| {
        CliError::Tolerance(format!(
            "max |rho_exact - rho_analytic| = {worst:e} is not below {:e}",
            cfg.tolerance
        ))
    });
    Ok(Outcome {
        bytes,
        summary,
        failure,
    })
}

#[derive(Serialize)]
struct CandidateEntry {
    label: String,
    theta: f64,
    phi: f64,
    coherence: f64,
}

#[derive(Serialize)]
struct AmbiguityEntry {
    ancestor: Vec<Pair>,
    correlated: Vec<[f64; 2]>,
    anticorrelated: Vec<[f64; 2]>,
    correlated_angle: Option<f64>,
    anticorrelated_angle: Option<f64>,
    found: bool,
}

#[derive(Serialize)]
struct ScanOutput {
    candidates: Vec<CandidateEntry>,
    minimizer: CandidateEntry,
    minimizer_is_pointer: bool,
    minimum: f64,
    margin: f64,
    tolerance: f64,
    unique: bool,
    ambiguity: AmbiguityEntry,
}

fn candidate_entry(c: &BasisCandidate<f64>, coherence: f64) -> CandidateEntry {
    let (theta, phi) = match c.kind {
        BasisKind::Bloch { theta, phi } => (theta, phi),
        BasisKind::Xy(p) => (FRAC_PI_2, p.y.atan2(p.x)),
    };
    CandidateEntry {
        label: c.label.clone(),
        theta,
        phi,
        coherence,
    }
}

/// The scanned state and its pure pre-measurement ancestor `a|++> + b|-->`.
pub fn scan_states(state: &ScanState) -> Result<(DensityOperator<f64>, JointState<f64>), CliError> {
    let zero = Complex64::new(0.0, 0.0);
    let (a, b, i1) = match state {
        ScanState::Decohered {
            populations: [p, q],
        } => (
            Complex64::new(p.sqrt(), 0.0),
            Complex64::new(q.sqrt(), 0.0),
            f64::INFINITY,
        ),
        ScanState::Premeasured { a, b, i1 } => (to_complex(*a), to_complex(*b), *i1),
    };
    let psi = JointState::from_slice(vec![2, 2], &[a, zero, zero, b])?;
    let rho = if i1.is_infinite() {
        let diag = [a.norm_sqr(), 0.0, 0.0, b.norm_sqr()].map(|x| Complex64::new(x, 0.0));
        let m = pointer_sim::hilbert::ComplexMatrix::diagonal(&diag);
        pointer_sim::hilbert::validate_density(m, &[2, 2])?
    } else {
        evolve_density_with_i1(&psi.density(), 0.0, i1, 0.0)?
    };
    Ok((rho, psi))
}

/// Bloch grid plus `random_candidates` seeded draws.
pub fn scan_grid(cfg: &ScanConfig) -> Vec<BasisCandidate<f64>> {
    let mut grid = bloch_grid(cfg.n_theta, cfg.n_phi);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.random_candidates {
        let theta = FRAC_PI_2 * (1.0 - rng.random::<f64>());
        grid.push(BasisCandidate::bloch(theta, TAU * rng.random::<f64>()));
    }
    grid
}

pub fn scan_cmd(cfg: &ScanConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let (rho, psi) = scan_states(&cfg.state)?;
    let grid = scan_grid(cfg);
    let report = pointer_scan(&rho, &grid, cfg.tolerance)?;
    let amb = ambiguity_check(&psi, &xy_direction_grid(cfg.ambiguity_directions), 1e-10)?;
    let out = ScanOutput {
        candidates: report
            .candidates
            .iter()
            .map(|(c, v)| candidate_entry(c, *v))
            .collect(),
        minimizer: candidate_entry(&report.minimizer, report.minimum),
        minimizer_is_pointer: report.minimizer.is_pointer(),
        minimum: report.minimum,
        margin: report.margin,
        tolerance: report.tolerance,
        unique: report.is_unique,
        ambiguity: AmbiguityEntry {
            ancestor: psi.amplitudes().iter().map(|z| from_complex(*z)).collect(),
            correlated: amb.correlated.iter().map(|p| [p.x, p.y]).collect(),
            anticorrelated: amb.anticorrelated.iter().map(|p| [p.x, p.y]).collect(),
            correlated_angle: amb.correlated_angle,
            anticorrelated_angle: amb.anticorrelated_angle,
            found: amb.found(),
        },
    };
    let summary = format!(
        "minimizer {} (coherence {:.3e}, margin {:.3e}, unique {}), ancestor ambiguity {}",
        out.minimizer.label, out.minimum, out.margin, out.unique, out.ambiguity.found
    );
    Ok(Outcome::ok(json(&out)?, summary))
}

#[derive(Serialize)]
struct CountingEntry {
    exact: bool,
    a_count: u64,
    b_count: u64,
    p0: String,
    p1: String,
    p0_value: f64,
    p1_value: f64,
    gap: f64,
    branch_swap_residual: Option<f64>,
}

#[derive(Serialize)]
struct SweepEntry {
    c0: Pair,
    c1: Pair,
    modulus_gap: f64,
    residual: f64,
    envariant: bool,
}

#[derive(Serialize)]
struct EnvarianceOutput {
    c0: Pair,
    c1: Pair,
    phi: f64,
    probabilities: [f64; 2],
    modulus_gap: f64,
    reversal_residual: f64,
    envariant: bool,
    counting: CountingEntry,
    sweep: Vec<SweepEntry>,
}

/// Residual of the system swap followed by the environment counter-swap,
/// both in the standard basis.
pub fn swap_reversal(c0: Complex64, c1: Complex64, phi: f64) -> Result<f64, CliError> {
    let zero = Complex64::new(0.0, 0.0);
    let psi = JointState::from_slice(vec![2, 2], &[c0, zero, zero, c1])?;
    let e0 = JointState::<f64>::basis(vec![2], 0)?.amplitudes().clone();
    let e1 = JointState::<f64>::basis(vec![2], 1)?.amplitudes().clone();
    let basis = [e0, e1];
    let us = swap_system(phi, &basis)?;
    let ua = counter_swap(phi, c0.arg(), c1.arg(), &basis)?;
    Ok(reversal_residual(&psi, &us, &ua, Equality::Exact)?)
}

fn counting(
    cfg: &EnvarianceConfig,
    c0: Complex64,
    c1: Complex64,
) -> Result<CountingEntry, CliError> {
    let p = c0.norm_sqr();
    let (exact, a, b, gap) = match exact_counts(p, cfg.denominator_cap, 1e-12) {
        Ok((a, b)) => (true, a, b, 0.0),
        Err(_) => {
            let r = rational_approx(p, cfg.denominator_cap)?;
            (false, r.a_count, r.b_count, r.gap)
        }
    };
    let n = a + b;
    let (p0_value, p1_value) = (a as f64 / n as f64, b as f64 / n as f64);
    let branch_swap_residual = if exact && n <= BRANCH_SWAP_LIMIT {
        let state = fine_grain(c0, c1, a, b)?;
        let counts = born_by_counting(&state);
        if counts.to_f64() != (p0_value, p1_value) {
            return Err(CliError::Numerical(format!(
                "branch count {}/{n} disagrees with the fine-grained state",
                a
            )));
        }
        Some(state.branch_swap_residual(0, (n - 1) as usize, cfg.phi)?)
    } else {
        None
    };
    Ok(CountingEntry {
        exact,
        a_count: a,
        b_count: b,
        p0: format!("{a}/{n}"),
        p1: format!("{b}/{n}"),
        p0_value,
        p1_value,
        gap,
        branch_swap_residual,
    })
}

pub fn envariance_cmd(cfg: &EnvarianceConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let (c0, c1) = (to_complex(cfg.c0), to_complex(cfg.c1));
    let residual = swap_reversal(c0, c1, cfg.phi)?;
    let counting = if c0.norm_sqr() > 0.0 && c1.norm_sqr() > 0.0 {
        counting(cfg, c0, c1)?
    } else {
        return Err(CliError::Config("c0 and c1 must both be nonzero".into()));
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.sweep_points;
    let params: Vec<(f64, f64, f64)> = (0..n)
        .map(|i| {
            let theta = if n == 1 {
                FRAC_PI_2 / 2.0
            } else {
                FRAC_PI_2 * i as f64 / (n - 1) as f64
            };
            (theta, TAU * rng.random::<f64>(), TAU * rng.random::<f64>())
        })
        .collect();
    let sweep = params
        .par_iter()
        .map(|&(theta, p0, p1)| {
            let s0 = Complex64::from_polar(theta.cos(), p0);
            let s1 = Complex64::from_polar(theta.sin(), p1);
            let r = swap_reversal(s0, s1, cfg.phi)?;
            Ok(SweepEntry {
                c0: from_complex(s0),
                c1: from_complex(s1),
                modulus_gap: (s0.norm() - s1.norm()).abs(),
                residual: r,
                envariant: r < cfg.tolerance,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let out = EnvarianceOutput {
        c0: cfg.c0,
        c1: cfg.c1,
        phi: cfg.phi,
        probabilities: [c0.norm_sqr(), c1.norm_sqr()],
        modulus_gap: (c0.norm() - c1.norm()).abs(),
        reversal_residual: residual,
        envariant: residual < cfg.tolerance,
        counting,
        sweep,
    };
    let summary = format!(
        "reversal residual {:.3e} (envariant {}), counted p = ({}, {})",
        out.reversal_residual, out.envariant, out.counting.p0, out.counting.p1
    );
    Ok(Outcome::ok(json(&out)?, summary))
}
