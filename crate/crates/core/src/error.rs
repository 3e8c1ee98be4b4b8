use crate::lattice::FeasibilityReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("{what} must be finite and non-negative, got {value}")]
    Negative { what: &'static str, value: f64 },

    #[error("transport criteria are only defined for 0 < delta <= 1, got {0}")]
    UndefinedMisbalance(f64),

    #[error("state-selective transport is infeasible: {}", .0.violated_constraints.join(", "))]
    Infeasible(FeasibilityReport),

    #[error("species {species} is untrapped (well depth {depth} J)")]
    Untrapped { species: String, depth: f64 },

    #[error("interaction energy is zero: no collisional phase")]
    NoInteraction,

    #[error("invalid protocol size: n_atoms = {0}, need at least 1")]
    InvalidAtomCount(usize),

    #[error("dense backend holds at most {cap} clock atoms, requested {n_atoms}")]
    Capacity { n_atoms: usize, cap: usize },

    #[error("branch representation exceeded rank bound {bound}")]
    RankExceeded { bound: usize },

    #[error("gate matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("site {site} out of range for {n_atoms} clock atoms")]
    SiteOutOfRange { site: usize, n_atoms: usize },

    #[error("registers of different size or backend cannot be compared")]
    IncompatibleStates,

    #[error("phase sensitivity undefined for contrast {0}")]
    UndefinedSensitivity(f64),

    #[error("missing species with role {0}")]
    MissingSpecies(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub(crate) fn require_positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositive { what, value })
    }
}

pub(crate) fn require_non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Negative { what, value })
    }
}
