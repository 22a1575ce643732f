use std::fmt;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub const USAGE: i32 = 1;
pub const NUMERIC: i32 = 2;

pub fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: USAGE,
        message: message.into(),
    }
}

pub fn numeric(message: impl Into<String>) -> Failure {
    Failure {
        code: NUMERIC,
        message: message.into(),
    }
}

impl From<larch::Error> for Failure {
    fn from(e: larch::Error) -> Self {
        numeric(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        numeric(format!("i/o error: {e}"))
    }
}
