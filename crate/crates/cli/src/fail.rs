use fkgap::bounds::MethodError;
use fkgap::Error;
use std::fmt;

pub const EXIT_CHECK: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// An error on its way to the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

/// Bad input is a configuration error; everything else is numerical.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Syntax { .. }
        | Error::UnknownFunction { .. }
        | Error::UnknownIdentifier { .. }
        | Error::UnboundParameter(_)
        | Error::NonPositiveSigma { .. }
        | Error::InadmissibleWeight(_)
        | Error::NonNormalizable(_)
        | Error::Precondition(_)
        | Error::Config(_) => EXIT_CONFIG,
        Error::Domain { .. }
        | Error::NanIntegrand { .. }
        | Error::NotConverged { .. }
        | Error::Degenerate(_)
        | Error::Underflow { .. }
        | Error::LikelyExplosive { .. }
        | Error::WeightOverflow { .. } => EXIT_NUMERIC,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<MethodError> for Failure {
    fn from(e: MethodError) -> Failure {
        Failure {
            code: exit_code(&e.source),
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
