use std::fmt;

use kgjoint::ErrorKind;

/// Everything a command can fail with, mapped onto process exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numeric(String),
    Core(kgjoint::Error),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 3,
            Failure::Core(e) => match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numeric => 3,
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => f.write_str(m),
            Failure::Core(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for Failure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Failure::Core(e) => Some(e),
            _ => None,
        }
    }
}

impl From<kgjoint::Error> for Failure {
    fn from(e: kgjoint::Error) -> Self {
        Failure::Core(e)
    }
}
