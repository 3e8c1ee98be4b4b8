//! Run configuration: a strict JSON schema in human-scale units, converted to
//! SI at the boundary.
//!
//! Every key is optional; omitted keys take the Sr/Al defaults below. Unit
//! suffixes are part of the key names (`_nm`, `_kW_cm2`, `_us`, `_s`, `_au`).

use std::path::Path;

use ghz_clock::lattice::{Hyperfine, LatticeConfig, Role, SpeciesOptics};
use ghz_clock::model::{BudgetInputs, SpeciesSet};
use ghz_clock::register::Backend;
use ghz_clock::units::{bohr_to_m, kw_per_cm2_to_si, mass_from_u, nm_to_m, us_to_s};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub species: SpeciesTable,
    pub lattice: LatticeSection,
    pub protocol: ProtocolSection,
    pub noise: NoiseSection,
    pub run: RunSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesTable {
    pub clock: ClockSpecies,
    pub head_up: HeadSpecies,
    pub head_down: HeadSpecies,
}

impl Default for SpeciesTable {
    fn default() -> Self {
        Self {
            clock: ClockSpecies::default(),
            head_up: HeadSpecies {
                name: "Al-27 |3,-3>".into(),
                mass_u: 26.981_538_4,
                alpha_scalar_au: -340.0,
                rho: -1.25,
                f: 3.0,
                m_f: -3.0,
            },
            head_down: HeadSpecies {
                name: "Al-27 |2,-2>".into(),
                mass_u: 26.981_538_4,
                alpha_scalar_au: -340.0,
                rho: 0.84,
                f: 2.0,
                m_f: -2.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockSpecies {
    pub name: String,
    pub mass_u: f64,
    pub alpha_scalar_au: f64,
}

impl Default for ClockSpecies {
    fn default() -> Self {
        Self {
            name: "Sr-88".into(),
            mass_u: 87.905_612_5,
            alpha_scalar_au: -470.0,
        }
    }
}

/// Head-atom state. The two head states have different defaults, so a head
/// entry is either omitted entirely or given in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadSpecies {
    pub name: String,
    pub mass_u: f64,
    pub alpha_scalar_au: f64,
    pub rho: f64,
    pub f: f64,
    pub m_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub lambda_m_nm: f64,
    /// `null`: the minimum intensity that keeps every species trapped.
    #[serde(rename = "intensity_kW_cm2")]
    pub intensity_kw_cm2: Option<f64>,
    pub delta: f64,
    pub phi_rad: f64,
    /// `null`: equal to the lattice intensity.
    #[serde(rename = "transverse_intensity_kW_cm2")]
    pub transverse_intensity_kw_cm2: Option<f64>,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            lambda_m_nm: 389.9,
            intensity_kw_cm2: None,
            delta: 0.25,
            phi_rad: 0.0,
            transverse_intensity_kw_cm2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub n_atoms: usize,
    pub ramsey_time_s: f64,
    pub a_scatt_au: f64,
    pub transport_time_us: f64,
    /// `null`: πħ/δE from the computed trap frequencies.
    pub gate_time_us: Option<f64>,
    pub pulse_time_us: f64,
    pub depth_factor: f64,
    pub delta_omega_rad_s: f64,
    pub delta_omega_head_rad_s: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            n_atoms: 1000,
            ramsey_time_s: 0.01,
            a_scatt_au: 100.0,
            transport_time_us: 10.0,
            gate_time_us: None,
            pulse_time_us: 0.0,
            depth_factor: 5.0,
            delta_omega_rad_s: 0.0,
            delta_omega_head_rad_s: 0.0,
        }
    }
}

/// A lifetime given in seconds, derived from the lattice (`"computed"`), or
/// absent altogether (`"none"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lifetime {
    Seconds(f64),
    Keyword(LifetimeKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LifetimeKeyword {
    Computed,
    None,
}

impl Default for Lifetime {
    fn default() -> Self {
        Lifetime::Keyword(LifetimeKeyword::Computed)
    }
}

impl Lifetime {
    fn override_seconds(self) -> Option<f64> {
        match self {
            Lifetime::Seconds(s) => Some(s),
            Lifetime::Keyword(LifetimeKeyword::Computed) => None,
            Lifetime::Keyword(LifetimeKeyword::None) => Some(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub clock_lifetime_s: Lifetime,
    pub head_lifetime_s: Lifetime,
    pub extra_loss_rate_per_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendName {
    Dense,
    #[default]
    Branch,
}

impl From<BackendName> for Backend {
    fn from(b: BackendName) -> Self {
        match b {
            BackendName::Dense => Backend::Dense,
            BackendName::Branch => Backend::Branch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub backend: BackendName,
    /// Monte Carlo trajectories per point; 0 disables noise sampling.
    pub trajectories: usize,
    pub seed: u64,
    pub dense_cap: usize,
    pub shots: u64,
    pub detuning_grid: DetuningGrid,
    pub n_range: NRange,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            backend: BackendName::Branch,
            trajectories: 0,
            seed: 0,
            dense_cap: ghz_clock::register::DEFAULT_DENSE_CAP,
            shots: 1,
            detuning_grid: DetuningGrid::default(),
            n_range: NRange::default(),
        }
    }
}

/// Uniform grid. Without explicit bounds it spans `periods` fringe periods of
/// the configured register, centred on zero detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetuningGrid {
    pub points: usize,
    pub periods: f64,
    pub start_rad_s: Option<f64>,
    pub stop_rad_s: Option<f64>,
}

impl Default for DetuningGrid {
    fn default() -> Self {
        Self {
            points: 101,
            periods: 3.0,
            start_rad_s: None,
            stop_rad_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NRange {
    pub min: usize,
    pub max: usize,
}

impl Default for NRange {
    fn default() -> Self {
        Self { min: 1, max: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axes: Vec<SweepAxis>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axes: vec![
                SweepAxis {
                    key: "protocol.n_atoms".into(),
                    values: [10, 100, 1000].map(serde_json::Value::from).to_vec(),
                },
                SweepAxis {
                    key: "protocol.ramsey_time_s".into(),
                    values: [0.001, 0.01, 0.1].map(serde_json::Value::from).to_vec(),
                },
            ],
        }
    }
}

/// One sweep dimension: a dotted config path and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<serde_json::Value>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let value: serde_json::Value = if text.trim().is_empty() {
        serde_json::Value::Object(Default::default())
    } else {
        serde_json::from_str(text).map_err(|e| CliError::ConfigSyntax {
            path: String::new(),
            message: e.to_string(),
        })?
    };
    from_value(value)
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// Typed decoding with field-path diagnostics, then range validation.
pub fn from_value(value: serde_json::Value) -> Result<RunConfig, CliError> {
    let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| CliError::ConfigSyntax {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn to_json(config: &RunConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}

fn range_error(path: &str, message: impl Into<String>) -> CliError {
    CliError::ConfigRange {
        path: path.into(),
        message: message.into(),
    }
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(range_error(path, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(range_error(path, format!("must be non-negative and finite, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(range_error(path, format!("must be finite, got {v}")))
    }
}

impl RunConfig {
    /// Range checks on every physical field. The protocol size is left to
    /// the commands, which report it with its own exit code.
    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.species;
        positive("species.clock.mass_u", s.clock.mass_u)?;
        finite("species.clock.alpha_scalar_au", s.clock.alpha_scalar_au)?;
        for (key, head) in [("head_up", &s.head_up), ("head_down", &s.head_down)] {
            positive(&format!("species.{key}.mass_u"), head.mass_u)?;
            finite(&format!("species.{key}.alpha_scalar_au"), head.alpha_scalar_au)?;
            finite(&format!("species.{key}.rho"), head.rho)?;
            non_negative(&format!("species.{key}.f"), head.f)?;
            finite(&format!("species.{key}.m_f"), head.m_f)?;
            if head.m_f.abs() > head.f {
                return Err(range_error(&format!("species.{key}.m_f"), "|m_f| must not exceed f"));
            }
        }

        let l = &self.lattice;
        positive("lattice.lambda_m_nm", l.lambda_m_nm)?;
        if let Some(i) = l.intensity_kw_cm2 {
            positive("lattice.intensity_kW_cm2", i)?;
        }
        if let Some(i) = l.transverse_intensity_kw_cm2 {
            non_negative("lattice.transverse_intensity_kW_cm2", i)?;
        }
        if !(l.delta.abs() <= 1.0) {
            return Err(range_error("lattice.delta", format!("|delta| must be at most 1, got {}", l.delta)));
        }
        if l.delta == 0.0 {
            return Err(range_error("lattice.delta", "a balanced lattice (delta = 0) cannot transport the head"));
        }
        finite("lattice.phi_rad", l.phi_rad)?;

        let p = &self.protocol;
        non_negative("protocol.ramsey_time_s", p.ramsey_time_s)?;
        positive("protocol.a_scatt_au", p.a_scatt_au.abs())?;
        non_negative("protocol.transport_time_us", p.transport_time_us)?;
        if let Some(g) = p.gate_time_us {
            non_negative("protocol.gate_time_us", g)?;
        }
        non_negative("protocol.pulse_time_us", p.pulse_time_us)?;
        non_negative("protocol.depth_factor", p.depth_factor)?;
        if p.depth_factor == 0.0 && l.intensity_kw_cm2.is_none() {
            return Err(range_error(
                "protocol.depth_factor",
                "must be positive unless lattice.intensity_kW_cm2 is given",
            ));
        }
        finite("protocol.delta_omega_rad_s", p.delta_omega_rad_s)?;
        finite("protocol.delta_omega_head_rad_s", p.delta_omega_head_rad_s)?;

        for (key, lifetime) in [
            ("noise.clock_lifetime_s", self.noise.clock_lifetime_s),
            ("noise.head_lifetime_s", self.noise.head_lifetime_s),
        ] {
            if let Lifetime::Seconds(v) = lifetime {
                positive(key, v)?;
            }
        }
        non_negative("noise.extra_loss_rate_per_s", self.noise.extra_loss_rate_per_s)?;

        let r = &self.run;
        if r.shots < 1 {
            return Err(range_error("run.shots", "must be at least 1"));
        }
        if r.dense_cap < 1 || r.dense_cap > 26 {
            return Err(range_error("run.dense_cap", "must lie in 1..=26"));
        }
        let g = &r.detuning_grid;
        if g.points < 1 {
            return Err(range_error("run.detuning_grid.points", "must be at least 1"));
        }
        positive("run.detuning_grid.periods", g.periods)?;
        match (g.start_rad_s, g.stop_rad_s) {
            (Some(a), Some(b)) => {
                finite("run.detuning_grid.start_rad_s", a)?;
                finite("run.detuning_grid.stop_rad_s", b)?;
                if g.points > 1 && !(b > a) {
                    return Err(range_error("run.detuning_grid.stop_rad_s", "must exceed start_rad_s"));
                }
            }
            (None, None) => {}
            _ => {
                return Err(range_error(
                    "run.detuning_grid",
                    "start_rad_s and stop_rad_s must be given together",
                ))
            }
        }
        if r.n_range.min < 1 {
            return Err(range_error("run.n_range.min", "must be at least 1"));
        }
        if r.n_range.max < r.n_range.min {
            return Err(range_error("run.n_range.max", "must not be below run.n_range.min"));
        }

        for (i, axis) in self.sweep.axes.iter().enumerate() {
            if axis.key.starts_with("sweep") || axis.key.split('.').count() < 2 {
                return Err(range_error(
                    &format!("sweep.axes[{i}].key"),
                    format!("'{}' is not a sweepable config path", axis.key),
                ));
            }
            if axis.values.is_empty() {
                return Err(range_error(&format!("sweep.axes[{i}].values"), "must not be empty"));
            }
        }
        Ok(())
    }

    pub fn backend(&self) -> Backend {
        self.run.backend.into()
    }

    pub fn species_set(&self) -> Result<SpeciesSet, CliError> {
        let s = &self.species;
        let clock = SpeciesOptics::clock(s.clock.name.clone(), mass_from_u(s.clock.mass_u), s.clock.alpha_scalar_au)?;
        let head = |h: &HeadSpecies, role| {
            SpeciesOptics::head(
                h.name.clone(),
                mass_from_u(h.mass_u),
                h.alpha_scalar_au,
                h.rho,
                role,
                Hyperfine { f: h.f, m_f: h.m_f },
            )
        };
        Ok(SpeciesSet {
            clock,
            head_up: head(&s.head_up, Role::HeadUp)?,
            head_down: head(&s.head_down, Role::HeadDown)?,
        })
    }

    /// Lattice geometry in SI; intensities are placeholders until the budget
    /// settles them.
    pub fn lattice_geometry(&self) -> Result<LatticeConfig, CliError> {
        let l = &self.lattice;
        Ok(LatticeConfig::new(
            nm_to_m(l.lambda_m_nm),
            l.intensity_kw_cm2.map_or(1.0, kw_per_cm2_to_si),
            l.delta,
            l.phi_rad,
            0.0,
        )?)
    }

    pub fn budget_inputs(&self) -> Result<BudgetInputs, CliError> {
        let p = &self.protocol;
        Ok(BudgetInputs {
            species: self.species_set()?,
            lattice: self.lattice_geometry()?,
            intensity: self.lattice.intensity_kw_cm2.map(kw_per_cm2_to_si),
            transverse_intensity: self.lattice.transverse_intensity_kw_cm2.map(kw_per_cm2_to_si),
            depth_factor: p.depth_factor,
            a_scatt: bohr_to_m(p.a_scatt_au),
            transport_time: us_to_s(p.transport_time_us),
            pulse_time: us_to_s(p.pulse_time_us),
            gate_time: p.gate_time_us.map(us_to_s),
            tau_clock: self.noise.clock_lifetime_s.override_seconds(),
            tau_head: self.noise.head_lifetime_s.override_seconds(),
            extra_loss_rate: self.noise.extra_loss_rate_per_s,
        })
    }

    /// Detuning grid in rad/s for `n_atoms` and the configured Ramsey time.
    pub fn detuning_grid(&self, n_atoms: usize) -> Vec<f64> {
        let g = &self.run.detuning_grid;
        match (g.start_rad_s, g.stop_rad_s) {
            (Some(a), Some(b)) if g.points > 1 => (0..g.points)
                .map(|i| a + (b - a) * i as f64 / (g.points - 1) as f64)
                .collect(),
            (Some(a), _) => vec![a],
            _ => ghz_clock::estimator::centred_grid(n_atoms.max(1), self.protocol.ramsey_time_s, g.periods, g.points),
        }
    }
}

/// Replaces the value at a dotted path of a JSON document.
pub fn set_path(doc: &mut serde_json::Value, key: &str, value: serde_json::Value) -> Result<(), CliError> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let map = node.as_object_mut().ok_or_else(|| {
            range_error(key, format!("'{}' is not an object", parts[..depth].join(".")))
        })?;
        if depth + 1 == parts.len() {
            if !map.contains_key(*part) {
                return Err(CliError::ConfigSyntax {
                    path: key.into(),
                    message: "unknown config key".into(),
                });
            }
            map.insert((*part).to_string(), value);
            return Ok(());
        }
        node = map.get_mut(*part).ok_or_else(|| CliError::ConfigSyntax {
            path: key.into(),
            message: "unknown config key".into(),
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(parse_config("{}").unwrap(), c);
        assert_eq!(c.lattice.lambda_m_nm, 389.9);
        assert_eq!(c.lattice.delta, 0.25);
        assert_eq!(c.species.clock.alpha_scalar_au, -470.0);
        assert_eq!(c.species.head_up.rho, -1.25);
    }

    #[test]
    fn delta_out_of_range_names_its_path() {
        let err = parse_config(r#"{"lattice": {"delta": 1.5}}"#).unwrap_err();
        assert!(matches!(&err, CliError::ConfigRange { path, .. } if path == "lattice.delta"), "{err:?}");
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let err = parse_config(r#"{"lattice": {"wavelength": 1.0}}"#).unwrap_err();
        match err {
            CliError::ConfigSyntax { path, message } => {
                assert_eq!(path, "lattice.wavelength");
                assert!(message.contains("wavelength"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type_error_reports_nested_path() {
        let err = parse_config(r#"{"protocol": {"n_atoms": "many"}}"#).unwrap_err();
        assert!(matches!(&err, CliError::ConfigSyntax { path, .. } if path == "protocol.n_atoms"), "{err:?}");
    }

    #[test]
    fn malformed_json_is_a_syntax_error() {
        assert!(matches!(parse_config("{"), Err(CliError::ConfigSyntax { .. })));
    }

    #[test]
    fn serialization_round_trips() {
        let text = r#"{
            "lattice": {"intensity_kW_cm2": 30.0, "delta": -0.5},
            "noise": {"clock_lifetime_s": 12.5, "head_lifetime_s": "none"},
            "run": {"backend": "dense", "detuning_grid": {"start_rad_s": -1.0, "stop_rad_s": 1.0}}
        }"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.noise.clock_lifetime_s, Lifetime::Seconds(12.5));
        assert_eq!(parse_config(&to_json(&c)).unwrap(), c);
        let d = RunConfig::default();
        assert_eq!(parse_config(&to_json(&d)).unwrap(), d);
    }

    #[test]
    fn lifetime_keywords() {
        let c = parse_config(r#"{"noise": {"head_lifetime_s": "computed", "clock_lifetime_s": "none"}}"#).unwrap();
        let inputs = c.budget_inputs().unwrap();
        assert_eq!(inputs.tau_head, None);
        assert_eq!(inputs.tau_clock, Some(f64::INFINITY));
        assert!(parse_config(r#"{"noise": {"head_lifetime_s": "forever"}}"#).is_err());
        assert!(matches!(
            parse_config(r#"{"noise": {"head_lifetime_s": -1}}"#),
            Err(CliError::ConfigRange { .. })
        ));
    }

    #[test]
    fn set_path_rejects_unknown_keys() {
        let mut doc = serde_json::to_value(RunConfig::default()).unwrap();
        set_path(&mut doc, "protocol.n_atoms", 7.into()).unwrap();
        assert_eq!(from_value(doc.clone()).unwrap().protocol.n_atoms, 7);
        assert!(set_path(&mut doc, "protocol.atoms", 7.into()).is_err());
    }

    #[test]
    fn explicit_grid_is_inclusive() {
        let c = parse_config(r#"{"run": {"detuning_grid": {"points": 5, "start_rad_s": -2, "stop_rad_s": 2}}}"#).unwrap();
        assert_eq!(c.detuning_grid(3), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }
}
