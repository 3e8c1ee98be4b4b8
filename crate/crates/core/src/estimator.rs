//! Ramsey fringes, phase sensitivity, and the decoherence-limited atom number.

use std::f64::consts::{PI, TAU};
use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::error::{require_positive, Error, Result};
use crate::register::{noiseless_p_up, Backend, Detunings, TrajectorySampler, DEFAULT_DENSE_CAP};
use crate::schedule::{build_schedule_with, survival_probability, DecoherenceParams, StepTimes};

#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    pub detunings: Vec<f64>,
    pub p_up: Vec<f64>,
    pub n_atoms: usize,
    pub ramsey_time: f64,
    pub trajectories_per_point: usize,
}

/// Decoherence applied during a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub params: DecoherenceParams,
    pub step_times: StepTimes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub backend: Backend,
    pub dense_cap: usize,
    /// Microwave head detuning Δω′, rad/s.
    pub delta_omega_head: f64,
    pub trajectories: usize,
    pub seed: u64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            backend: Backend::Branch,
            dense_cap: DEFAULT_DENSE_CAP,
            delta_omega_head: 0.0,
            trajectories: 1,
            seed: 0,
        }
    }
}

/// Uniform detuning grid spanning `periods` fringe periods centred on zero.
pub fn centred_grid(n_atoms: usize, ramsey_time: f64, periods: f64, points: usize) -> Vec<f64> {
    let period = TAU / (n_atoms as f64 * ramsey_time);
    let half = 0.5 * periods * period;
    if points == 1 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| -half + 2.0 * half * i as f64 / (points - 1) as f64)
        .collect()
}

/// Mean head-↑ probability at each detuning. Without noise the value is the
/// exact simulated one; with noise it is averaged over trajectories, each
/// grid point drawing from its own seed stream.
pub fn fringe_scan(
    n_atoms: usize,
    ramsey_time: f64,
    detuning_grid: &[f64],
    noise: Option<&NoiseModel>,
    settings: &ScanSettings,
) -> Result<FringeScan> {
    if detuning_grid.is_empty() {
        return Err(Error::InvalidInput("detuning grid is empty".into()));
    }
    if noise.is_some() && settings.trajectories < 1 {
        return Err(Error::InvalidInput("noisy scan needs at least one trajectory".into()));
    }
    let schedule = match noise {
        Some(model) => Some(build_schedule_with(n_atoms, &model.step_times, ramsey_time)?),
        None => None,
    };
    let p_up = detuning_grid
        .par_iter()
        .enumerate()
        .map(|(index, &dw)| {
            let detunings = Detunings::new(dw, settings.delta_omega_head);
            let p = noiseless_p_up(n_atoms, settings.backend, detunings, ramsey_time, settings.dense_cap)?;
            Ok(match (noise, &schedule) {
                (Some(model), Some(schedule)) => TrajectorySampler::new(schedule, model.params, p)
                    .run_batch(settings.seed, index as u64, settings.trajectories)
                    .mean_p_up,
                _ => p,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FringeScan {
        detunings: detuning_grid.to_vec(),
        p_up,
        n_atoms,
        ramsey_time,
        trajectories_per_point: if noise.is_some() { settings.trajectories } else { 1 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub contrast: f64,
    /// Fringe period in detuning, rad/s; `None` for a flat scan.
    pub fringe_period: Option<f64>,
    pub offset: f64,
    pub cos_coefficient: f64,
    pub sin_coefficient: f64,
}

/// Least-squares `c + a cos(ωx) + b sin(ωx)` at fixed ω; returns (a, b, c, ssr).
fn fit_at(x: &[f64], y: &[f64], omega: f64) -> (f64, f64, f64, f64) {
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let basis = [(omega * xi).cos(), (omega * xi).sin(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            r[i] += basis[i] * yi;
        }
    }
    let sol = solve3(m, r).unwrap_or([0.0, 0.0, y.iter().sum::<f64>() / y.len() as f64]);
    let ssr = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let f = sol[0] * (omega * xi).cos() + sol[1] * (omega * xi).sin() + sol[2];
            (yi - f).powi(2)
        })
        .sum();
    (sol[0], sol[1], sol[2], ssr)
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        r.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (target, source) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *target -= f * source;
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (r[row] - s) / m[row][row];
    }
    Some(x)
}

/// Sinusoid fit of a scan: coarse frequency search up to the grid's Nyquist
/// limit, then golden-section refinement of the residual minimum.
pub fn analyze_fringe(scan: &FringeScan) -> Result<FringeFit> {
    let x = &scan.detunings;
    let y = &scan.p_up;
    if x.len() != y.len() || x.len() < 4 {
        return Err(Error::InvalidInput("fringe fit needs at least 4 equal-length samples".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let flat = FringeFit {
        contrast: 0.0,
        fringe_period: None,
        offset: mean,
        cos_coefficient: 0.0,
        sin_coefficient: 0.0,
    };
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi - lo < 1e-9 {
        return Ok(flat);
    }

    let x_min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = x_max - x_min;
    let mut sorted = x.clone();
    sorted.sort_by(f64::total_cmp);
    let min_step = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(span > 0.0) || !min_step.is_finite() {
        return Err(Error::InvalidInput("fringe scan needs distinct detunings".into()));
    }
    let omega_lo = 0.5 * TAU / span;
    let omega_hi = PI / min_step;
    let d_omega = TAU / span / 8.0;
    let mut best = (omega_lo, f64::INFINITY);
    let mut omega = omega_lo;
    while omega <= omega_hi {
        let ssr = fit_at(x, y, omega).3;
        if ssr < best.1 {
            best = (omega, ssr);
        }
        omega += d_omega;
    }
    let (mut a, mut b) = ((best.0 - d_omega).max(omega_lo * 0.5), best.0 + d_omega);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let ssr = |w: f64| fit_at(x, y, w).3;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (ssr(c), ssr(d));
    while b - a > 1e-13 * best.0 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = ssr(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = ssr(d);
        }
    }
    let omega = 0.5 * (a + b);
    let (ca, sb, offset, ssr_fit) = fit_at(x, y, omega);
    let amplitude = (ca * ca + sb * sb).sqrt();

    // Amplitude not resolved above the residual scatter: treat as flat.
    let dof = (x.len() as f64 - 4.0).max(1.0);
    let resid_sigma = (ssr_fit / dof).sqrt();
    if amplitude < 3.0 * resid_sigma * (2.0 / x.len() as f64).sqrt() {
        return Ok(flat);
    }
    Ok(FringeFit {
        contrast: (2.0 * amplitude).min(1.0),
        fringe_period: Some(TAU / omega),
        offset,
        cos_coefficient: ca,
        sin_coefficient: sb,
    })
}

/// Shot-noise-limited frequency uncertainty of the GHZ protocol at the
/// steepest fringe point, `1 / (C N T sqrt(shots))`, rad/s.
pub fn phase_sensitivity(contrast: f64, n_atoms: usize, ramsey_time: f64, shots: u64) -> Result<f64> {
    if !(contrast > 0.0 && contrast <= 1.0) {
        return Err(Error::UndefinedSensitivity(contrast));
    }
    check_counts(n_atoms, shots)?;
    require_positive("ramsey_time", ramsey_time)?;
    Ok(1.0 / (contrast * n_atoms as f64 * ramsey_time * (shots as f64).sqrt()))
}

/// Standard-quantum-limit uncertainty for N unentangled atoms, rad/s.
pub fn sql_baseline(n_atoms: usize, ramsey_time: f64, shots: u64) -> Result<f64> {
    check_counts(n_atoms, shots)?;
    require_positive("ramsey_time", ramsey_time)?;
    Ok(1.0 / ((n_atoms as f64).sqrt() * ramsey_time * (shots as f64).sqrt()))
}

fn check_counts(n_atoms: usize, shots: u64) -> Result<()> {
    if n_atoms < 1 {
        return Err(Error::InvalidAtomCount(n_atoms));
    }
    if shots < 1 {
        return Err(Error::InvalidInput("shots must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionReport {
    pub contrast: f64,
    pub fringe_period: f64,
    pub sigma_delta_omega: f64,
    pub sql_sigma: f64,
    pub gain_over_sql: f64,
}

impl PrecisionReport {
    pub fn new(contrast: f64, fringe_period: f64, n_atoms: usize, ramsey_time: f64, shots: u64) -> Result<Self> {
        require_positive("fringe_period", fringe_period)?;
        let sigma = phase_sensitivity(contrast, n_atoms, ramsey_time, shots)?;
        let sql = sql_baseline(n_atoms, ramsey_time, shots)?;
        Ok(Self {
            contrast,
            fringe_period,
            sigma_delta_omega: sigma,
            sql_sigma: sql,
            gain_over_sql: sql / sigma,
        })
    }

    /// Report from a fitted scan.
    pub fn from_scan(scan: &FringeScan, shots: u64) -> Result<Self> {
        let fit = analyze_fringe(scan)?;
        let period = fit.fringe_period.ok_or(Error::UndefinedSensitivity(fit.contrast))?;
        Self::new(fit.contrast, period, scan.n_atoms, scan.ramsey_time, shots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomNumberPoint {
    pub n_atoms: usize,
    pub total_duration: f64,
    pub survival: f64,
    /// C(N)·N, the contrast-weighted Heisenberg gain.
    pub effective_gain: f64,
    pub gain_over_sql: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomNumberOptimum {
    pub n_opt: usize,
    pub best: AtomNumberPoint,
    pub curve: Vec<AtomNumberPoint>,
}

/// Maximizes `survival(N)·N` over the integer range at fixed Ramsey time.
pub fn optimize_atom_number(
    params: &DecoherenceParams,
    step_times: &StepTimes,
    ramsey_time: f64,
    n_range: RangeInclusive<usize>,
) -> Result<AtomNumberOptimum> {
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo < 1 || hi < lo {
        return Err(Error::InvalidInput(format!("invalid atom-number range {lo}..={hi}")));
    }
    let curve = (lo..=hi)
        .map(|n| {
            let schedule = build_schedule_with(n, step_times, ramsey_time)?;
            let survival = survival_probability(&schedule, n, params);
            Ok(AtomNumberPoint {
                n_atoms: n,
                total_duration: schedule.total_duration(),
                survival,
                effective_gain: survival * n as f64,
                gain_over_sql: survival * (n as f64).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = curve
        .iter()
        .fold(curve[0], |best, p| if p.effective_gain > best.effective_gain { *p } else { best });
    Ok(AtomNumberOptimum {
        n_opt: best.n_atoms,
        best,
        curve,
    })
}
