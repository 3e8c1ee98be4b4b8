//! The six pipelines. Each writes one CSV table plus its metadata sidecar
//! into the output directory and returns a JSON summary.

use std::path::{Path, PathBuf};

use ghz_clock::estimator::{
    analyze_fringe, fringe_scan, optimize_atom_number, phase_sensitivity, sql_baseline, NoiseModel, ScanSettings,
};
use ghz_clock::lattice::{recoil_energy, trap_frequencies, transport_feasibility, well_depth, worst_case_phase};
use ghz_clock::rates::photon_scattering_time;
use ghz_clock::model::{compute_budget, ClockBudget};
use ghz_clock::register::{expected_checkpoint, run_protocol_with_cap, Detunings, TrajectorySampler};
use ghz_clock::schedule::{build_schedule_with, exposure, survival_probability};
use ghz_clock::units::si_to_kw_per_cm2;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{self, RunConfig};
use crate::error::CliError;
use crate::table::{config_hash, write_metadata, write_table, Cell, Metadata, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Feasibility,
    Schedule,
    Simulate,
    Scan,
    Optimize,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Feasibility => "feasibility",
            Command::Schedule => "schedule",
            Command::Simulate => "simulate",
            Command::Scan => "scan",
            Command::Optimize => "optimize",
            Command::Sweep => "sweep",
        }
    }
}

/// Files written by a command and its headline results.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: PathBuf,
    pub metadata: PathBuf,
    pub results: Map<String, Value>,
}

impl Outcome {
    pub fn summary_line(&self, command: Command) -> String {
        json!({
            "command": command.name(),
            "table": self.table.display().to_string(),
            "metadata": self.metadata.display().to_string(),
            "results": self.results,
        })
        .to_string()
    }
}

type Results = Map<String, Value>;

pub fn run_command(command: Command, config: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let (table, results) = match command {
        Command::Feasibility => feasibility(config, out_dir)?,
        Command::Schedule => schedule(config)?,
        Command::Simulate => simulate(config)?,
        Command::Scan => scan(config)?,
        Command::Optimize => optimize(config)?,
        Command::Sweep => sweep(config)?,
    };
    let path = out_dir.join(format!("{}.csv", command.name()));
    write_table(&table, &path)?;
    let metadata = write_metadata(&metadata_for(command, config, results.clone()), &path)?;
    Ok(Outcome {
        table: path,
        metadata,
        results,
    })
}

fn metadata_for(command: Command, config: &RunConfig, results: Results) -> Metadata {
    Metadata {
        command: command.name().into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: config_hash(&config::to_json(config)),
        seed: config.run.seed,
        backend: config.backend().label().into(),
        results,
    }
}

fn budget(config: &RunConfig) -> Result<ClockBudget, CliError> {
    Ok(compute_budget(&config.budget_inputs()?)?)
}

fn budget_results(b: &ClockBudget, out: &mut Results) {
    out.insert("intensity_kW_cm2".into(), json!(si_to_kw_per_cm2(b.lattice.intensity())));
    out.insert(
        "transverse_intensity_kW_cm2".into(),
        json!(si_to_kw_per_cm2(b.lattice.transverse_intensity())),
    );
    out.insert("binding_species".into(), json!(b.requirement.binding_species));
    out.insert("gate_time_s".into(), json!(b.step_times.gate_time));
    out.insert("transport_time_s".into(), json!(b.step_times.transport_time));
    out.insert("pulse_time_s".into(), json!(b.step_times.pulse_time));
    out.insert("tau_scatter_clock_s".into(), finite_or_null(b.decoherence.tau_scatter_clock));
    out.insert("tau_scatter_head_s".into(), finite_or_null(b.decoherence.tau_scatter_head));
    out.insert("extra_loss_rate_per_s".into(), json!(b.decoherence.extra_loss_rate));
}

/// JSON has no infinity; an absent channel is written as `null`.
fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn feasibility(config: &RunConfig, out_dir: &Path) -> Result<(Table, Results), CliError> {
    let species = config.species_set()?;
    let report = transport_feasibility(species.head_up.rho(), species.head_down.rho(), config.lattice.delta)?;
    let mut results = Results::new();
    results.insert("feasible".into(), json!(report.feasible));
    results.insert("violated_constraints".into(), json!(report.violated_constraints));
    results.insert("margin".into(), json!(report.margin));
    if !report.feasible {
        // Record the report before failing so the diagnosis survives.
        let path = out_dir.join("feasibility.csv");
        write_table(&feasibility_table(), &path)?;
        write_metadata(&metadata_for(Command::Feasibility, config, results), &path)?;
        return Err(ghz_clock::Error::Infeasible(report).into());
    }

    let b = budget(config)?;
    budget_results(&b, &mut results);
    results.insert("interaction_energy_J".into(), json!(b.interaction_energy));

    let mut table = feasibility_table();
    let lattice = &b.lattice;
    for (s, req) in species.to_list().iter().zip(&b.requirement.per_species) {
        let phase = worst_case_phase(s.role());
        let worst = well_depth(&lattice.with_phi(phase), s);
        let overlap = well_depth(lattice, s);
        let recoil = recoil_energy(s.mass(), lattice.lambda_m())?;
        let trap = trap_frequencies(lattice, s)?;
        let tau = photon_scattering_time(s, lattice.intensity(), overlap, lattice.lambda_m())?;
        table.push(vec![
            s.name().into(),
            s.role().label().into(),
            s.alpha_scalar_au().into(),
            s.rho().into(),
            phase.into(),
            worst.into(),
            overlap.into(),
            recoil.into(),
            (worst / recoil).into(),
            si_to_kw_per_cm2(req.required_intensity).into(),
            trap.axial.into(),
            trap.radial_1.into(),
            trap.radial_2.into(),
            tau.into(),
        ]);
    }
    Ok((table, results))
}

fn feasibility_table() -> Table {
    Table::new([
        "species",
        "role",
        "alpha_scalar_au",
        "rho",
        "worst_case_phase_rad",
        "worst_case_depth_J",
        "overlap_depth_J",
        "recoil_energy_J",
        "worst_case_depth_over_recoil",
        "required_intensity_kW_cm2",
        "axial_frequency_rad_s",
        "radial_frequency_1_rad_s",
        "radial_frequency_2_rad_s",
        "scattering_lifetime_s",
    ])
}

fn schedule(config: &RunConfig) -> Result<(Table, Results), CliError> {
    let b = budget(config)?;
    let n = config.protocol.n_atoms;
    let s = build_schedule_with(n, &b.step_times, config.protocol.ramsey_time_s)?;
    let mut table = Table::new(["index", "kind", "site", "start_s", "duration_s"]);
    for (i, (step, start)) in s.steps().iter().zip(s.start_times()).enumerate() {
        table.push(vec![
            i.into(),
            step.kind.label().into(),
            step.site.map_or(Cell::Text(String::new()), Cell::from),
            start.into(),
            step.duration.into(),
        ]);
    }
    let mut results = Results::new();
    results.insert("n_atoms".into(), json!(n));
    results.insert("ramsey_time_s".into(), json!(config.protocol.ramsey_time_s));
    results.insert("total_duration_s".into(), json!(s.total_duration()));
    results.insert("entanglement_duration_s".into(), json!(s.entanglement_duration()));
    results.insert("exposure".into(), finite_or_null(exposure(&s, n, &b.decoherence)));
    results.insert("survival".into(), json!(survival_probability(&s, n, &b.decoherence)));
    budget_results(&b, &mut results);
    Ok((table, results))
}

fn detunings(config: &RunConfig) -> Detunings {
    Detunings::new(config.protocol.delta_omega_rad_s, config.protocol.delta_omega_head_rad_s)
}

fn simulate(config: &RunConfig) -> Result<(Table, Results), CliError> {
    let p = &config.protocol;
    let d = detunings(config);
    let run = run_protocol_with_cap(p.n_atoms, config.backend(), d, p.ramsey_time_s, config.run.dense_cap)?;
    let chi = run.ramsey_phase;
    let mut table = Table::new(["stage", "fidelity", "rank"]);
    for cp in &run.checkpoints {
        let reference = expected_checkpoint(cp.stage, p.n_atoms, chi)?;
        table.push(vec![
            cp.stage.label().into(),
            cp.state.fidelity_with(&reference)?.into(),
            cp.state.rank().map_or(Cell::Text(String::new()), Cell::from),
        ]);
    }
    let mut results = Results::new();
    results.insert("n_atoms".into(), json!(p.n_atoms));
    results.insert("ramsey_time_s".into(), json!(p.ramsey_time_s));
    results.insert("ramsey_phase_rad".into(), json!(chi));
    results.insert("p_up".into(), json!(run.p_up()));
    results.insert("p_up_expected".into(), json!((chi / 2.0).sin().powi(2)));
    results.insert("max_rank".into(), json!(run.max_rank));
    if config.run.trajectories > 0 {
        let b = budget(config)?;
        let s = build_schedule_with(p.n_atoms, &b.step_times, p.ramsey_time_s)?;
        let batch = TrajectorySampler::new(&s, b.decoherence, run.p_up()).run_batch(
            config.run.seed,
            0,
            config.run.trajectories,
        );
        results.insert("trajectories".into(), json!(batch.trajectories));
        results.insert("scattered_fraction".into(), json!(batch.scattered_fraction()));
        results.insert("p_up_noisy".into(), json!(batch.mean_p_up));
        results.insert("survival".into(), json!(survival_probability(&s, p.n_atoms, &b.decoherence)));
        budget_results(&b, &mut results);
    }
    Ok((table, results))
}

fn noise_model(config: &RunConfig) -> Result<Option<(NoiseModel, ClockBudget)>, CliError> {
    if config.run.trajectories == 0 {
        return Ok(None);
    }
    let b = budget(config)?;
    Ok(Some((
        NoiseModel {
            params: b.decoherence,
            step_times: b.step_times,
        },
        b,
    )))
}

fn scan(config: &RunConfig) -> Result<(Table, Results), CliError> {
    let p = &config.protocol;
    if p.n_atoms < 1 {
        return Err(ghz_clock::Error::InvalidAtomCount(p.n_atoms).into());
    }
    let grid = config.detuning_grid(p.n_atoms);
    let noise = noise_model(config)?;
    let settings = ScanSettings {
        backend: config.backend(),
        dense_cap: config.run.dense_cap,
        delta_omega_head: p.delta_omega_head_rad_s,
        trajectories: config.run.trajectories,
        seed: config.run.seed,
    };
    let scan = fringe_scan(p.n_atoms, p.ramsey_time_s, &grid, noise.as_ref().map(|(m, _)| m), &settings)?;
    let mut table = Table::new(["detuning_rad_s", "p_up"]);
    for (x, y) in scan.detunings.iter().zip(&scan.p_up) {
        table.push(vec![(*x).into(), (*y).into()]);
    }
    let mut results = Results::new();
    results.insert("n_atoms".into(), json!(p.n_atoms));
    results.insert("ramsey_time_s".into(), json!(p.ramsey_time_s));
    results.insert("points".into(), json!(grid.len()));
    results.insert("trajectories_per_point".into(), json!(scan.trajectories_per_point));
    if grid.len() >= 4 {
        let fit = analyze_fringe(&scan)?;
        results.insert("contrast".into(), json!(fit.contrast));
        results.insert("fringe_period_rad_s".into(), json!(fit.fringe_period));
        results.insert("offset".into(), json!(fit.offset));
        if fit.contrast > 0.0 && p.ramsey_time_s > 0.0 {
            let sigma = phase_sensitivity(fit.contrast, p.n_atoms, p.ramsey_time_s, config.run.shots)?;
            let sql = sql_baseline(p.n_atoms, p.ramsey_time_s, config.run.shots)?;
            results.insert("sigma_delta_omega_rad_s".into(), json!(sigma));
            results.insert("sql_sigma_rad_s".into(), json!(sql));
            results.insert("gain_over_sql".into(), json!(sql / sigma));
        }
    }
    if let Some((model, b)) = &noise {
        let s = build_schedule_with(p.n_atoms, &model.step_times, p.ramsey_time_s)?;
        results.insert("survival".into(), json!(survival_probability(&s, p.n_atoms, &model.params)));
        budget_results(b, &mut results);
    }
    Ok((table, results))
}

fn optimize(config: &RunConfig) -> Result<(Table, Results), CliError> {
    let b = budget(config)?;
    let r = &config.run.n_range;
    let t = config.protocol.ramsey_time_s;
    let opt = optimize_atom_number(&b.decoherence, &b.step_times, t, r.min..=r.max)?;
    let mut table = Table::new(["n_atoms", "total_duration_s", "survival", "effective_gain", "gain_over_sql"]);
    for pt in &opt.curve {
        table.push(vec![
            pt.n_atoms.into(),
            pt.total_duration.into(),
            pt.survival.into(),
            pt.effective_gain.into(),
            pt.gain_over_sql.into(),
        ]);
    }
    let mut results = Results::new();
    results.insert("n_opt".into(), json!(opt.n_opt));
    results.insert("ramsey_time_s".into(), json!(t));
    results.insert("survival_at_n_opt".into(), json!(opt.best.survival));
    results.insert("effective_gain_at_n_opt".into(), json!(opt.best.effective_gain));
    results.insert("n_min".into(), json!(r.min));
    results.insert("n_max".into(), json!(r.max));
    budget_results(&b, &mut results);
    Ok((table, results))
}

/// Cartesian product of the axis value lists, first axis varying slowest.
fn cartesian(lengths: &[usize]) -> Vec<Vec<usize>> {
    let mut points = vec![Vec::new()];
    for &len in lengths {
        points = points
            .into_iter()
            .flat_map(|p| {
                (0..len).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    points
}

const SWEEP_RESULT_COLUMNS: [&str; 12] = [
    "status",
    "n_atoms",
    "ramsey_time_s",
    "intensity_kW_cm2",
    "gate_time_s",
    "tau_scatter_clock_s",
    "tau_scatter_head_s",
    "total_duration_s",
    "survival",
    "sigma_delta_omega_rad_s",
    "gain_over_sql",
    "scattered_fraction",
];

fn sweep(config: &RunConfig) -> Result<(Table, Results), CliError> {
    let axes = &config.sweep.axes;
    let base = serde_json::to_value(config).expect("config serializes");
    let points = cartesian(&axes.iter().map(|a| a.values.len()).collect::<Vec<_>>());

    // Build every point's config up front so a bad value fails the sweep.
    let configs = points
        .iter()
        .map(|idx| {
            let mut doc = base.clone();
            for (axis, &i) in axes.iter().zip(idx) {
                config::set_path(&mut doc, &axis.key, axis.values[i].clone())?;
            }
            config::from_value(doc)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rows: Vec<Vec<Cell>> = configs
        .par_iter()
        .enumerate()
        .map(|(index, c)| sweep_point(c, index as u64))
        .collect();

    let mut table = Table::new(axes.iter().map(|a| a.key.clone()).chain(SWEEP_RESULT_COLUMNS.map(String::from)));
    for (idx, row) in points.iter().zip(rows) {
        let mut cells: Vec<Cell> = axes.iter().zip(idx).map(|(a, &i)| Cell::from(&a.values[i])).collect();
        cells.extend(row);
        table.push(cells);
    }
    let mut results = Results::new();
    results.insert("points".into(), json!(points.len()));
    results.insert("axes".into(), json!(axes.iter().map(|a| a.key.clone()).collect::<Vec<_>>()));
    results.insert("trajectories_per_point".into(), json!(config.run.trajectories));
    Ok((table, results))
}

/// One sweep row. Physics errors are recorded in the status column rather
/// than aborting the sweep.
fn sweep_point(config: &RunConfig, stream: u64) -> Vec<Cell> {
    match sweep_values(config, stream) {
        Ok(cells) => cells,
        Err(e) => {
            let mut cells = vec![Cell::Text(e.code_name().into())];
            cells.extend((1..SWEEP_RESULT_COLUMNS.len()).map(|_| Cell::Text(String::new())));
            cells
        }
    }
}

fn sweep_values(config: &RunConfig, stream: u64) -> Result<Vec<Cell>, CliError> {
    let n = config.protocol.n_atoms;
    let t = config.protocol.ramsey_time_s;
    let b = budget(config)?;
    let s = build_schedule_with(n, &b.step_times, t)?;
    let survival = survival_probability(&s, n, &b.decoherence);
    let (sigma, gain) = if survival > 0.0 && t > 0.0 {
        let sigma = phase_sensitivity(survival, n, t, config.run.shots)?;
        (Cell::Float(sigma), Cell::Float(sql_baseline(n, t, config.run.shots)? / sigma))
    } else {
        (Cell::Text(String::new()), Cell::Text(String::new()))
    };
    let scattered = if config.run.trajectories > 0 {
        let batch = TrajectorySampler::new(&s, b.decoherence, 0.5).run_batch(config.run.seed, stream, config.run.trajectories);
        Cell::Float(batch.scattered_fraction())
    } else {
        Cell::Text(String::new())
    };
    Ok(vec![
        "ok".into(),
        n.into(),
        t.into(),
        si_to_kw_per_cm2(b.lattice.intensity()).into(),
        b.step_times.gate_time.into(),
        b.decoherence.tau_scatter_clock.into(),
        b.decoherence.tau_scatter_head.into(),
        s.total_duration().into(),
        survival.into(),
        sigma,
        gain,
        scattered,
    ])
}
