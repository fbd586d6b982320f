use std::fmt;

use thiserror::Error;

/// Library module an error originated in. Rendered into the CLI error prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    SpecialFn,
    SpinStates,
    Parity,
    PhaseSpace,
    Convolution,
    Tomography,
    Radon,
    Io,
    Cli,
}

impl Module {
    pub fn as_str(self) -> &'static str {
        match self {
            Module::SpecialFn => "specialfn",
            Module::SpinStates => "spinstates",
            Module::Parity => "parity",
            Module::PhaseSpace => "phasespace",
            Module::Convolution => "convolution",
            Module::Tomography => "tomography",
            Module::Radon => "radon",
            Module::Io => "io",
            Module::Cli => "cli",
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("{module}: {msg}")]
    Domain { module: Module, msg: String },

    /// A weight γ_j^{-s} (or similar) left the representable range.
    #[error("{module}: weight for rank j = {j} is ill-conditioned (log10 |w| = {log10_weight:.1})")]
    Conditioning {
        module: Module,
        j: usize,
        log10_weight: f64,
    },

    /// Data failed a consistency check (trace, reality, normalisation).
    #[error("{module}: {msg}")]
    Integrity { module: Module, msg: String },

    /// A caller broke a structural precondition (non-axial kernel, odd content, ...).
    #[error("{module}: {msg}")]
    Contract { module: Module, msg: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("io: malformed input: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl Error {
    pub(crate) fn domain(module: Module, msg: impl Into<String>) -> Self {
        Error::Domain {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn integrity(module: Module, msg: impl Into<String>) -> Self {
        Error::Integrity {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn contract(module: Module, msg: impl Into<String>) -> Self {
        Error::Contract {
            module,
            msg: msg.into(),
        }
    }

    pub fn module(&self) -> Module {
        match self {
            Error::Domain { module, .. }
            | Error::Conditioning { module, .. }
            | Error::Integrity { module, .. }
            | Error::Contract { module, .. } => *module,
            Error::Io(_) | Error::Parse(_) => Module::Io,
        }
    }

    /// Short machine-readable error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Conditioning { .. } => "conditioning",
            Error::Integrity { .. } => "integrity",
            Error::Contract { .. } => "contract",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
