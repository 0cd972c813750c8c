use std::path::PathBuf;

use thiserror::Error;

/// Pipeline stage names used to tag failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Paths,
    Tuning,
    Auxiliary,
    Control,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Paths => "paths",
            Stage::Tuning => "tuning",
            Stage::Auxiliary => "auxiliary",
            Stage::Control => "control",
            Stage::Report => "report",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error in `{field}`: {message}")]
    Format { field: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(
        "adaptive filter diverged at sample {sample} (non-finite coefficient); \
         retry with a smaller {step_name}"
    )]
    Divergence {
        sample: usize,
        step_name: &'static str,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: Stage) -> Self {
        match self {
            tagged @ Error::Stage { .. } => tagged,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The underlying error with any stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// Process exit code: 1 configuration/argument, 2 divergence, 3 I/O or file format.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Divergence { .. } => 2,
            Error::Io { .. } | Error::Format { .. } => 3,
            _ => 1,
        }
    }
}
