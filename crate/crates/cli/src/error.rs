//! CLI errors and their exit codes.
//!
//! | code | meaning                                             |
//! |------|-----------------------------------------------------|
//! | 0    | success                                             |
//! | 2    | command-line usage error                            |
//! | 3    | config syntax error, wrong type, or unknown key     |
//! | 4    | config value out of range                           |
//! | 5    | invalid protocol size (fewer than one clock atom)   |
//! | 6    | head transport infeasible for the chosen lattice    |
//! | 7    | other physics error (untrapped species, bad input)  |
//! | 8    | simulation capacity exceeded (dense cap, rank bound)|
//! | 9    | I/O failure                                         |
//! | 10   | inconsistent output table                           |

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Usage { message: String },
    #[error("config error at '{path}': {message}")]
    ConfigSyntax { path: String, message: String },
    #[error("config value out of range at '{path}': {message}")]
    ConfigRange { path: String, message: String },
    #[error(transparent)]
    Physics(#[from] ghz_clock::Error),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("table error: {0}")]
    Table(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ghz_clock::Error as E;
        match self {
            CliError::Usage { .. } => 2,
            CliError::ConfigSyntax { .. } => 3,
            CliError::ConfigRange { .. } => 4,
            CliError::Physics(E::InvalidAtomCount(_)) => 5,
            CliError::Physics(E::Infeasible(_)) => 6,
            CliError::Physics(E::Capacity { .. } | E::RankExceeded { .. }) => 8,
            CliError::Physics(_) => 7,
            CliError::Io { .. } => 9,
            CliError::Table(_) => 10,
        }
    }

    /// Stable machine-readable name of the error class.
    pub fn code_name(&self) -> &'static str {
        match self.exit_code() {
            2 => "usage",
            3 => "config_syntax",
            4 => "config_range",
            5 => "invalid_protocol_size",
            6 => "infeasible_transport",
            7 => "physics",
            8 => "capacity",
            9 => "io",
            _ => "table",
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn to_json_line(&self) -> String {
        let mut value = json!({
            "error": self.code_name(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            CliError::ConfigSyntax { path, .. } | CliError::ConfigRange { path, .. } => {
                value["path"] = json!(path);
            }
            CliError::Physics(ghz_clock::Error::Infeasible(report)) => {
                value["violated_constraints"] = json!(report.violated_constraints);
                value["margin"] = json!(report.margin);
            }
            _ => {}
        }
        value.to_string()
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let errors = [
            CliError::Usage { message: String::new() },
            CliError::ConfigSyntax { path: String::new(), message: String::new() },
            CliError::ConfigRange { path: String::new(), message: String::new() },
            ghz_clock::Error::InvalidAtomCount(0).into(),
            ghz_clock::Error::Infeasible(ghz_clock::lattice::FeasibilityReport {
                feasible: false,
                violated_constraints: vec![],
                margin: -1.0,
            })
            .into(),
            ghz_clock::Error::NoInteraction.into(),
            ghz_clock::Error::Capacity { n_atoms: 30, cap: 14 }.into(),
            CliError::Io { path: String::new(), message: String::new() },
            CliError::Table(String::new()),
        ];
        let mut codes: Vec<i32> = errors.iter().map(CliError::exit_code).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), errors.len());
        assert!(!codes.contains(&0));
    }

    #[test]
    fn json_line_carries_path() {
        let e = CliError::ConfigRange { path: "lattice.delta".into(), message: "x".into() };
        let v: serde_json::Value = serde_json::from_str(&e.to_json_line()).unwrap();
        assert_eq!(v["path"], "lattice.delta");
        assert_eq!(v["exit_code"], 4);
    }
}
