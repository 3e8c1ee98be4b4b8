//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs under `cargo test` without the libtest harness so
//! the report is always printed.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ghz_clock::estimator::{analyze_fringe, fringe_scan, FringeScan, NoiseModel, PrecisionReport, ScanSettings};
use ghz_clock::lattice::{
    closed_form_overlap_depth, locate_well, min_required_intensity, optical_potential_curve, trap_frequencies,
    well_depth, Hyperfine, LatticeConfig, Role, SpeciesOptics,
};
use ghz_clock::model::{compute_budget, BudgetInputs};
use ghz_clock::rates::{interaction_energy, phase_gate_duration, photon_scattering_time};
use ghz_clock::register::{
    backend_crosscheck, expected_checkpoint, random_gate_sequence, run_protocol, Backend, Stage, TrajectorySampler,
};
use ghz_clock::schedule::{build_schedule_with, survival_probability};
use ghz_clock::units::{bohr_to_m, kw_per_cm2_to_si, mass_from_u, si_to_kw_per_cm2};
use ghz_clock_cli::table::read_column;
use ghz_clock_cli::{run_command, Command as CliCommand, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GHZ_FIDELITY_TOL: f64 = 1e-10;
const GHZ_RUNTIME_LIMIT_S: f64 = 10.0;
const FRINGE_TOL: f64 = 1e-10;
const LARGE_SCAN_RUNTIME_LIMIT_S: f64 = 60.0;
const BACKEND_TOL: f64 = 1e-9;
const REFERENCE_FACTOR: f64 = 2.0;
const REFERENCE_INTENSITY_KW_CM2: f64 = 20.0;
const REFERENCE_TAU_SR_S: f64 = 10.0;
const REFERENCE_TAU_AL_S: f64 = 8.0;
const REFERENCE_GATE_S: f64 = 20e-6;
const MC_TRAJECTORIES: usize = 100_000;
const MC_SIGMAS: f64 = 3.0;
const SQL_GAIN_TOL: f64 = 1e-9;
const DEPTH_TOL: f64 = 1e-9;
const CURVATURE_TOL: f64 = 1e-6;

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn within_factor(value: f64, reference: f64, factor: f64) -> bool {
    value >= reference / factor && value <= reference * factor
}

fn reference_species() -> [SpeciesOptics; 3] {
    [
        SpeciesOptics::strontium_88(),
        SpeciesOptics::aluminium_27_up(),
        SpeciesOptics::aluminium_27_down(),
    ]
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut worst = 1.0f64;
    for n in 2..=12 {
        let run = run_protocol(n, Backend::Dense, 0.0, 0.0, 1.0).map_err(|e| e.to_string())?;
        let target = expected_checkpoint(Stage::Ghz, n, 0.0).map_err(|e| e.to_string())?;
        let f = run.checkpoint(Stage::Ghz).expect("checkpoint").fidelity_with(&target).map_err(|e| e.to_string())?;
        worst = worst.min(f);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!("min fidelity 1 - {:.2e} (tol {GHZ_FIDELITY_TOL:e}), {elapsed:.2} s", 1.0 - worst);
    if worst >= 1.0 - GHZ_FIDELITY_TOL && elapsed < GHZ_RUNTIME_LIMIT_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fringe_deviation(scan: &FringeScan, head: f64) -> f64 {
    scan.detunings
        .iter()
        .zip(&scan.p_up)
        .map(|(dw, p)| {
            let chi = (scan.n_atoms as f64 * dw + head) * scan.ramsey_time;
            (p - (chi / 2.0).sin().powi(2)).abs()
        })
        .fold(0.0, f64::max)
}

fn criterion_2() -> Verdict {
    let t = 0.01;
    let head = 37.0; // Δω′, rad/s
    let mut worst = 0.0f64;
    for (n, backend) in [(1usize, Backend::Dense), (5, Backend::Dense), (10, Backend::Dense)] {
        let grid = ghz_clock::estimator::centred_grid(n, t, 3.0, 100);
        let settings = ScanSettings {
            backend,
            delta_omega_head: head,
            ..ScanSettings::default()
        };
        let scan = fringe_scan(n, t, &grid, None, &settings).map_err(|e| e.to_string())?;
        worst = worst.max(fringe_deviation(&scan, head));
    }
    let start = Instant::now();
    let grid = ghz_clock::estimator::centred_grid(1000, t, 3.0, 100);
    let settings = ScanSettings {
        backend: Backend::Branch,
        delta_omega_head: head,
        ..ScanSettings::default()
    };
    let scan = fringe_scan(1000, t, &grid, None, &settings).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    worst = worst.max(fringe_deviation(&scan, head));
    let detail = format!("max |p_up - sin²| = {worst:.2e} (tol {FRINGE_TOL:e}); N=1000 scan {elapsed:.2} s");
    if worst <= FRINGE_TOL && elapsed < LARGE_SCAN_RUNTIME_LIMIT_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..200 {
        let gates = random_gate_sequence(8, 60, 1_000 + seed);
        worst = worst.max(backend_crosscheck(8, &gates).map_err(|e| e.to_string())?);
    }
    let detail = format!("max amplitude deviation {worst:.2e} over 200 sequences (tol {BACKEND_TOL:e})");
    if worst < BACKEND_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Verdict {
    let lattice = LatticeConfig::blue_magic(1.0).map_err(|e| e.to_string())?;
    let req = min_required_intensity(&reference_species(), &lattice, 5.0).map_err(|e| e.to_string())?;
    let kw = si_to_kw_per_cm2(req.intensity);
    let detail = format!(
        "I_L = {kw:.2} kW/cm² (reference {REFERENCE_INTENSITY_KW_CM2}, factor {REFERENCE_FACTOR}), binding {}",
        req.binding_species
    );
    if within_factor(kw, REFERENCE_INTENSITY_KW_CM2, REFERENCE_FACTOR) && req.binding_species.starts_with("Al") {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn operating_lattice() -> Result<LatticeConfig, String> {
    let lattice = LatticeConfig::blue_magic(1.0).map_err(|e| e.to_string())?;
    let req = min_required_intensity(&reference_species(), &lattice, 5.0).map_err(|e| e.to_string())?;
    lattice
        .with_intensity(req.intensity)
        .and_then(|l| l.with_transverse_intensity(req.intensity))
        .map_err(|e| e.to_string())
}

fn criterion_5() -> Verdict {
    let lattice = operating_lattice()?;
    let [sr, al, _] = reference_species();
    let tau = |s: &SpeciesOptics| {
        photon_scattering_time(s, lattice.intensity(), well_depth(&lattice, s), lattice.lambda_m()).map_err(|e| e.to_string())
    };
    let (tau_sr, tau_al) = (tau(&sr)?, tau(&al)?);
    let detail = format!(
        "τ_Sr = {tau_sr:.2} s (reference {REFERENCE_TAU_SR_S}), τ_Al = {tau_al:.2} s (reference {REFERENCE_TAU_AL_S}), factor {REFERENCE_FACTOR}"
    );
    if within_factor(tau_sr, REFERENCE_TAU_SR_S, REFERENCE_FACTOR) && within_factor(tau_al, REFERENCE_TAU_AL_S, REFERENCE_FACTOR) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Verdict {
    let lattice = operating_lattice()?;
    let [sr, al, _] = reference_species();
    let w_al = trap_frequencies(&lattice, &al).map_err(|e| e.to_string())?;
    let w_sr = trap_frequencies(&lattice, &sr).map_err(|e| e.to_string())?;
    let de = interaction_energy(bohr_to_m(100.0), al.mass(), sr.mass(), w_al.as_array(), w_sr.as_array())
        .map_err(|e| e.to_string())?;
    let gate = phase_gate_duration(de, PI).map_err(|e| e.to_string())?;
    let detail = format!("τ_gate = {:.2} μs (reference {}, factor {REFERENCE_FACTOR})", gate * 1e6, REFERENCE_GATE_S * 1e6);
    if within_factor(gate, REFERENCE_GATE_S, REFERENCE_FACTOR) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Verdict {
    let budget = compute_budget(&BudgetInputs::reference_defaults()).map_err(|e| e.to_string())?;
    let noise = NoiseModel {
        params: budget.decoherence,
        step_times: budget.step_times,
    };
    let m = MC_TRAJECTORIES as f64;
    let mut lines = Vec::new();
    let mut ok = true;
    for (index, (n, t)) in [(10usize, 0.1), (100, 0.01), (1000, 0.001)].into_iter().enumerate() {
        let schedule = build_schedule_with(n, &noise.step_times, t).map_err(|e| e.to_string())?;
        let survival = survival_probability(&schedule, n, &noise.params);

        // Scattered fraction.
        let batch = TrajectorySampler::new(&schedule, noise.params, 0.0).run_batch(77, 1_000 + index as u64, MC_TRAJECTORIES);
        let p = 1.0 - survival;
        let sigma_p = (p * (1.0 - p) / m).sqrt();
        let z_p = (batch.scattered_fraction() - p) / sigma_p;

        // Contrast from a noisy scan over two full fringe periods. With K
        // evenly spaced phases the fitted contrast is (2/K)·Σcos²χ_k(1−f_k),
        // whose binomial error is (2/K)·sqrt(Σcos⁴χ_k · s(1−s)/M).
        let k = 40;
        let chis: Vec<f64> = (0..k).map(|i| -TAU + 2.0 * TAU * i as f64 / k as f64).collect();
        let grid: Vec<f64> = chis.iter().map(|chi| chi / (n as f64 * t)).collect();
        let settings = ScanSettings {
            trajectories: MC_TRAJECTORIES,
            seed: 2024 + index as u64,
            ..ScanSettings::default()
        };
        let scan = fringe_scan(n, t, &grid, Some(&noise), &settings).map_err(|e| e.to_string())?;
        let contrast = analyze_fringe(&scan).map_err(|e| e.to_string())?.contrast;
        let sum_cos4: f64 = chis.iter().map(|c| c.cos().powi(4)).sum();
        let sigma_c = 2.0 / k as f64 * (sum_cos4 * survival * (1.0 - survival) / m).sqrt();
        let z_c = (contrast - survival) / sigma_c;

        ok &= z_p.abs() <= MC_SIGMAS && z_c.abs() <= MC_SIGMAS;
        lines.push(format!(
            "N={n},T={t}: scattered z={z_p:+.2}, contrast {contrast:.5} vs e^-Λ {survival:.5} z={z_c:+.2}"
        ));
    }
    let detail = format!("{} ({MC_TRAJECTORIES} trajectories, {MC_SIGMAS}σ)", lines.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8(out: &Path) -> Verdict {
    let mut worst = 0.0f64;
    for n in [1usize, 4, 100, 1000] {
        let t = 0.01;
        let grid = ghz_clock::estimator::centred_grid(n, t, 3.0, 61);
        let scan = fringe_scan(n, t, &grid, None, &ScanSettings::default()).map_err(|e| e.to_string())?;
        let report = PrecisionReport::from_scan(&scan, 1).map_err(|e| e.to_string())?;
        worst = worst.max((report.gain_over_sql / (n as f64).sqrt() - 1.0).abs());
    }
    let config = RunConfig::default();
    let outcome = run_command(CliCommand::Optimize, &config, out).map_err(|e| e.to_string())?;
    let gains = read_column(&outcome.table, "effective_gain").map_err(|e| e.to_string())?;
    let ns = read_column(&outcome.table, "n_atoms").map_err(|e| e.to_string())?;
    let (best, _) = gains
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bg), (i, &g)| if g > bg { (i, g) } else { (bi, bg) });
    let n_max = ns[best];
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&outcome.metadata).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let ramsey = meta["results"]["ramsey_time_s"].as_f64();
    let detail = format!(
        "max |gain/√N - 1| = {worst:.2e} (tol {SQL_GAIN_TOL:e}); optimum N = {n_max} at recorded T = {} s",
        ramsey.map_or("<missing>".to_string(), |t| t.to_string())
    );
    if worst <= SQL_GAIN_TOL && (100.0..=10_000.0).contains(&n_max) && ramsey == Some(config.protocol.ramsey_time_s) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fd_frequency(lattice: &LatticeConfig, s: &SpeciesOptics) -> f64 {
    let z0 = locate_well(lattice, s).minimum.z;
    let h = lattice.lambda_m() * 2e-4;
    let z = [z0 - 2.0 * h, z0 - h, z0, z0 + h, z0 + 2.0 * h];
    let u = optical_potential_curve(lattice, s, &z);
    let curvature = (-u[0] + 16.0 * u[1] - 30.0 * u[2] + 16.0 * u[3] - u[4]) / (12.0 * h * h);
    (curvature / s.mass()).sqrt()
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_depth, mut worst_freq) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let alpha = rng.random_range(-1000.0..-10.0);
        let rho = rng.random_range(-1.5..1.5);
        let delta = rng.random_range(0.05..0.6) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let kw = rng.random_range(1.0..200.0);
        let lambda = rng.random_range(300e-9..1100e-9);
        let phi = rng.random_range(0.0..PI);
        let s = SpeciesOptics::head("draw", mass_from_u(rng.random_range(1.0..200.0)), alpha, rho, Role::HeadUp, Hyperfine {
            f: 1.0,
            m_f: 0.0,
        })
        .map_err(|e| e.to_string())?;
        let lattice = LatticeConfig::new(lambda, kw_per_cm2_to_si(kw), delta, 0.0, kw_per_cm2_to_si(kw))
            .map_err(|e| e.to_string())?;
        let closed = closed_form_overlap_depth(&lattice, &s);
        let numeric = well_depth(&lattice, &s);
        worst_depth = worst_depth.max((numeric - closed).abs() / closed);

        let shifted = lattice.with_phi(phi);
        let analytic = trap_frequencies(&shifted, &s).map_err(|e| e.to_string())?.axial;
        worst_freq = worst_freq.max((analytic - fd_frequency(&shifted, &s)).abs() / analytic);
    }
    let detail = format!(
        "100 draws: depth rel. error {worst_depth:.2e} (tol {DEPTH_TOL:e}), frequency rel. error {worst_freq:.2e} (tol {CURVATURE_TOL:e})"
    );
    if worst_depth <= DEPTH_TOL && worst_freq <= CURVATURE_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10(root: &Path) -> Verdict {
    let config = root.join("sweep.json");
    std::fs::write(
        &config,
        r#"{
            "run": {"trajectories": 2000, "seed": 31},
            "sweep": {"axes": [
                {"key": "protocol.n_atoms", "values": [10, 100, 1000]},
                {"key": "protocol.ramsey_time_s", "values": [0.001, 0.01]},
                {"key": "lattice.delta", "values": [0.2, 0.25]}
            ]}
        }"#,
    )
    .map_err(|e| e.to_string())?;
    let mut bodies = Vec::new();
    for (run, jobs) in [("a", "1"), ("b", "4")] {
        let out = root.join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_ghz-clock"))
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--jobs", jobs])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("sweep failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        bodies.push(std::fs::read(out.join("sweep.csv")).map_err(|e| e.to_string())?);
    }
    let rows = bodies[0].iter().filter(|&&b| b == b'\n').count() - 1;
    let detail = format!("{rows} rows, {} bytes, runs with 1 and 4 threads", bodies[0].len());
    if bodies[0] == bodies[1] && rows == 12 {
        Ok(format!("byte-identical; {detail}"))
    } else {
        Err(format!("outputs differ; {detail}"))
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<Criterion> = vec![
        ("GHZ construction", Box::new(criterion_1)),
        ("fringe law", Box::new(criterion_2)),
        ("backend equivalence", Box::new(criterion_3)),
        ("intensity checkpoint", Box::new(criterion_4)),
        ("lifetime checkpoint", Box::new(criterion_5)),
        ("gate-time checkpoint", Box::new(criterion_6)),
        ("decoherence consistency", Box::new(criterion_7)),
        ("metrological gain", Box::new(|| criterion_8(dir.path()))),
        ("potential correctness", Box::new(criterion_9)),
        ("sweep determinism", Box::new(|| criterion_10(dir.path()))),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
