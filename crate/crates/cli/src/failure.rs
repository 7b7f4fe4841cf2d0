use std::fmt;

/// A failed run together with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const INVARIANT: u8 = 1;
pub const NO_CONVERGENCE: u8 = 2;
pub const CONFIG: u8 = 3;

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: CONFIG, message: message.into() }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self { code: INVARIANT, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<groundstate::Error> for Failure {
    fn from(e: groundstate::Error) -> Self {
        use groundstate::Error::*;
        let code = match e {
            CaseBPositivity { .. } | ZeroNorm { .. } | NoCrossing | Eigen(_) => INVARIANT,
            Config(_) | Grid(_) | NonMonotoneH { .. } | NegativeH { .. } | NoBracket { .. } | NearEigenvalue { .. } => {
                CONFIG
            }
        };
        Self { code, message: e.to_string() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Self::config(format!("{e:#}"))
    }
}
