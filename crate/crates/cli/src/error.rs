use std::path::{Path, PathBuf};

use dwn_core::dataset::DatasetError;
use dwn_core::encoder::EncodeError;
use dwn_core::hdl::HdlError;
use dwn_core::model::ModelError;
use dwn_core::netlist::NetlistError;
use dwn_core::quantize::QuantizeError;
use dwn_core::simulator::SimError;
use dwn_core::trainer::TrainError;

/// Exit codes, also listed in `dwn --help`.
pub mod code {
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const VALIDATION: i32 = 4;
    pub const QUANTIZE: i32 = 5;
    pub const NO_FEASIBLE_WIDTH: i32 = 6;
    pub const NETLIST: i32 = 7;
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(code::USAGE, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(code::VALIDATION, message)
    }

    pub fn read(path: &Path, e: std::io::Error) -> Self {
        Self::new(code::IO, format!("cannot read {}: {e}", path.display()))
    }

    pub fn write(path: &Path, e: std::io::Error) -> Self {
        Self::new(code::IO, format!("cannot write {}: {e}", path.display()))
    }

    /// Prefixes the message with the file it concerns.
    pub fn in_file(mut self, path: &PathBuf) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

macro_rules! map_error {
    ($($ty:ty => $code:expr),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($code, e.to_string())
            }
        })*
    };
}

map_error! {
    DatasetError => code::VALIDATION,
    ModelError => code::VALIDATION,
    EncodeError => code::VALIDATION,
    SimError => code::VALIDATION,
    TrainError => code::VALIDATION,
    NetlistError => code::NETLIST,
    HdlError => code::NETLIST,
}

impl From<QuantizeError> for CliError {
    fn from(e: QuantizeError) -> Self {
        let code = match e {
            QuantizeError::Simulation(_) | QuantizeError::Model(_) | QuantizeError::Baseline(_) => {
                code::VALIDATION
            }
            QuantizeError::Capacity { .. } | QuantizeError::Format(_) => code::QUANTIZE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new(code::OTHER, e.to_string())
    }
}
