use std::fmt;

use qaperture::aperture::ApertureError;
use qaperture::comms::CommsError;
use qaperture::estimation::EstimationError;
use qaperture::quantum::QuantumError;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent configuration or input files (exit 2).
    Config(String),
    /// A model, solver or output step failed (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

/// Nested variant names of an error, outermost first, from its `Debug` form.
fn variant_path(debug: &str) -> String {
    let mut names = Vec::new();
    for part in debug.split('(') {
        let name: String = part.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect();
        if name.is_empty() || !name.starts_with(|c: char| c.is_ascii_uppercase()) {
            break;
        }
        names.push(name);
        if part.contains(' ') || part.contains('{') {
            break;
        }
    }
    names.join("/")
}

fn classify<E: fmt::Debug + fmt::Display>(e: E) -> CliError {
    let path = variant_path(&format!("{e:?}"));
    let msg = format!("{path}: {e}");
    if path.ends_with("InvalidParameter") {
        CliError::Config(msg)
    } else {
        CliError::Numerical(msg)
    }
}

macro_rules! from_module {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                classify(e)
            }
        }
    )*};
}

from_module!(QuantumError, ApertureError, EstimationError, CommsError);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_nested_variants() {
        let e = CommsError::Aperture(ApertureError::Quantum(QuantumError::SingularSystem { pivot_ratio: 1e-20 }));
        let c = CliError::from(e);
        assert_eq!(c.exit_code(), 3);
        assert!(c.to_string().contains("Aperture/Quantum/SingularSystem"), "{c}");
        let c = CliError::from(ApertureError::InvalidParameter("x".into()));
        assert_eq!(c.exit_code(), 2);
        assert!(CliError::from(CommsError::LockFailure { metric: 0.0, threshold: 0.1 }).to_string().contains("LockFailure"));
    }
}
