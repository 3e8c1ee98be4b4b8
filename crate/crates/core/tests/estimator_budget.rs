use std::f64::consts::TAU;

use ghz_clock::estimator::{
    analyze_fringe, centred_grid, fringe_scan, optimize_atom_number, NoiseModel, PrecisionReport, ScanSettings,
};
use ghz_clock::model::{compute_budget, BudgetInputs};
use ghz_clock::register::Backend;
use ghz_clock::schedule::{build_schedule_with, survival_probability, DecoherenceParams, StepTimes};

fn times() -> StepTimes {
    StepTimes {
        gate_time: 17.6e-6,
        transport_time: 10e-6,
        pulse_time: 0.0,
    }
}

#[test]
fn fringe_period_shrinks_as_one_over_n() {
    let t = 0.01;
    let settings = ScanSettings::default();
    let single_period = TAU / t;
    for n in [1usize, 10, 100, 1000] {
        let grid = centred_grid(n, t, 3.0, 61);
        let scan = fringe_scan(n, t, &grid, None, &settings).unwrap();
        let fit = analyze_fringe(&scan).unwrap();
        let period = fit.fringe_period.unwrap();
        assert!((period * n as f64 / single_period - 1.0).abs() < 1e-6, "N={n}: {period}");
        assert!((fit.contrast - 1.0).abs() < 1e-6);
        // Exact law at each grid point.
        for (dw, p) in scan.detunings.iter().zip(&scan.p_up) {
            let chi = n as f64 * dw * t;
            assert!((p - (chi / 2.0).sin().powi(2)).abs() < 1e-10);
        }
    }
}

#[test]
fn noisy_contrast_matches_survival() {
    let t = 0.01;
    let n = 100;
    let params = DecoherenceParams::new(9.56, 7.14, 0.0).unwrap();
    let noise = NoiseModel {
        params,
        step_times: times(),
    };
    let settings = ScanSettings {
        trajectories: 20_000,
        seed: 5,
        ..ScanSettings::default()
    };
    let grid = centred_grid(n, t, 2.0, 41);
    let scan = fringe_scan(n, t, &grid, Some(&noise), &settings).unwrap();
    let fit = analyze_fringe(&scan).unwrap();
    let schedule = build_schedule_with(n, &times(), t).unwrap();
    let s = survival_probability(&schedule, n, &params);
    // Binomial scatter on the scattered fraction propagates to ≲ 1e-2 on the contrast.
    assert!((fit.contrast - s).abs() < 0.01, "contrast {} survival {s}", fit.contrast);
}

#[test]
fn noisy_scan_is_reproducible_and_seed_sensitive() {
    let noise = NoiseModel {
        params: DecoherenceParams::new(1.0, 1.0, 0.0).unwrap(),
        step_times: times(),
    };
    let grid = centred_grid(10, 0.1, 1.0, 9);
    let run = |seed| {
        let settings = ScanSettings {
            trajectories: 500,
            seed,
            ..ScanSettings::default()
        };
        fringe_scan(10, 0.1, &grid, Some(&noise), &settings).unwrap()
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1).p_up, run(2).p_up);
}

#[test]
fn dense_and_branch_scans_agree() {
    let grid = centred_grid(9, 0.02, 2.0, 21);
    let scan = |backend| {
        let settings = ScanSettings {
            backend,
            ..ScanSettings::default()
        };
        fringe_scan(9, 0.02, &grid, None, &settings).unwrap()
    };
    let (a, b) = (scan(Backend::Dense), scan(Backend::Branch));
    for (x, y) in a.p_up.iter().zip(&b.p_up) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn optimum_invariant_under_rate_time_rescaling() {
    let params = DecoherenceParams::new(9.56, 7.14, 0.0).unwrap();
    let t = 0.01;
    let base = optimize_atom_number(&params, &times(), t, 1..=2000).unwrap();
    for factor in [0.5, 3.0, 10.0] {
        let scaled = optimize_atom_number(&params.rescaled_rates(factor), &times().rescaled(1.0 / factor), t / factor, 1..=2000)
            .unwrap();
        assert_eq!(scaled.n_opt, base.n_opt, "factor {factor}");
    }
}

#[test]
fn optimum_matches_stationarity_of_log_gain() {
    // d/dN [ln N − Λ(N)] = 0 with Λ = (T + 2N·t_step)(N/τc + 1/τh).
    let params = DecoherenceParams::new(9.56, 7.14, 0.0).unwrap();
    let t = 0.01;
    let step = times().gate_time + times().transport_time;
    let g = |n: f64| 1.0 / n - (2.0 * step * (n / params.tau_scatter_clock + 1.0 / params.tau_scatter_head)
        + (t + 2.0 * n * step) / params.tau_scatter_clock);
    let (mut lo, mut hi) = (1.0, 1e5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let opt = optimize_atom_number(&params, &times(), t, 1..=10_000).unwrap();
    assert!((opt.n_opt as f64 - lo).abs() <= 1.0, "{} vs continuous {lo}", opt.n_opt);
}

#[test]
fn budget_defaults_feed_an_interior_optimum() {
    let budget = compute_budget(&BudgetInputs::reference_defaults()).unwrap();
    let opt = optimize_atom_number(&budget.decoherence, &budget.step_times, 0.01, 1..=10_000).unwrap();
    assert!(opt.n_opt >= 100 && opt.n_opt <= 10_000, "{}", opt.n_opt);
    let report = PrecisionReport::new(opt.best.survival, 1.0, opt.n_opt, 0.01, 1).unwrap();
    assert!(report.gain_over_sql > 1.0);
}
