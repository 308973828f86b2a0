use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("cannot parse config {path}: {message}")]
    Parse { path: String, message: String },

    #[error("config schema violation: {0}")]
    Schema(String),

    #[error("invalid config value `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("writing {file}: {message}")]
    Output { file: String, message: String },

    #[error(transparent)]
    Core(#[from] hmet_core::Error),
}

impl HarnessError {
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        HarnessError::Invalid {
            key: key.to_owned(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// `"parse"`, `"schema"`, `"invalid"` or `"runtime"`.
    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Parse { .. } => "parse",
            HarnessError::Schema(_) => "schema",
            HarnessError::Invalid { .. } => "invalid",
            _ => "runtime",
        }
    }

    /// 2 for configuration problems, 3 for everything that fails later.
    pub fn exit_code(&self) -> u8 {
        match self.category() {
            "runtime" => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
