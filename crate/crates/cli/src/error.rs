use gcf_core::estimates::EstimateError;
use gcf_core::flow::FlowError;
use gcf_core::geometry::GeometryError;
use gcf_core::minkowski::OdeError;
use gcf_core::regularity::RegularityError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{module} error: {message}")]
    Pipeline { module: &'static str, message: String },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn pipeline(module: &'static str, err: impl std::fmt::Display) -> Self {
        CliError::Pipeline {
            module,
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Pipeline { .. } => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::pipeline("io", e)
    }
}

macro_rules! from_module {
    ($t:ty, $name:literal) => {
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::pipeline($name, e)
            }
        }
    };
}

from_module!(GeometryError, "geometry");
from_module!(FlowError, "flow");
from_module!(EstimateError, "estimates");
from_module!(OdeError, "minkowski");
from_module!(RegularityError, "regularity");
