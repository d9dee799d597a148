use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("no Hamiltonian cycle found: {reason}")]
    NoHamiltonianCycle { partial: Vec<usize>, reason: String },

    #[error(transparent)]
    Core(#[from] epinet::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

/// The JSON body printed for a failed command or a failed sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub partial_path: Option<Vec<usize>>,
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Failures caught before any computation starts.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            CliError::Config { .. }
                | CliError::Usage(_)
                | CliError::Json { .. }
                | CliError::Core(epinet::Error::InvalidParameter { .. })
                | CliError::Core(epinet::Error::NegativeCoefficient { .. })
                | CliError::Core(epinet::Error::Parse { .. })
                | CliError::Core(epinet::Error::InvalidCycle(_))
        )
    }

    pub fn kind(&self) -> &'static str {
        use epinet::Error as E;
        match self {
            CliError::Config { .. } => "config",
            CliError::Usage(_) => "usage",
            CliError::NoHamiltonianCycle { .. } => "hamiltonian_not_found",
            CliError::Io { .. } | CliError::Core(E::Io(_)) => "io",
            CliError::Json { .. } => "json",
            CliError::Core(e) => match e {
                E::InvalidParameter { .. } => "invalid_parameter",
                E::Parse { .. } => "parse",
                E::Instability { .. } => "instability",
                E::OutOfBounds { .. } => "out_of_bounds",
                E::BoundViolation { .. } => "bound_violation",
                E::NegativeCoefficient { .. } => "negative_coefficient",
                E::NotConverged { .. } => "not_converged",
                E::InvalidCycle(_) => "invalid_cycle",
                E::Io(_) => "io",
            },
        }
    }

    pub fn body(&self) -> ErrorBody {
        let field = match self {
            CliError::Config { field, .. } => Some(field.clone()),
            CliError::Core(epinet::Error::InvalidParameter { name, .. }) => Some(name.clone()),
            _ => None,
        };
        let partial_path = match self {
            CliError::NoHamiltonianCycle { partial, .. } => Some(partial.clone()),
            _ => None,
        };
        ErrorBody {
            kind: self.kind().to_string(),
            message: self.to_string(),
            field,
            partial_path,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.body() }).to_string()
    }
}
