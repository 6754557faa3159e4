use std::path::Path;

use serde_json::{json, Value};

/// Exit status 2 for malformed input, 3 for failed mathematical preconditions.
#[derive(Debug)]
pub enum CliError {
    Schema(String),
    Precondition { invariant: String, message: String },
}

impl CliError {
    pub fn schema(msg: impl Into<String>) -> Self {
        CliError::Schema(msg.into())
    }

    pub fn precondition(invariant: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Precondition { invariant: invariant.into(), message: msg.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Schema(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Precondition { .. } => 3,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Schema(m) => json!({"error": {"kind": "schema", "exit_code": 2, "message": m}}),
            CliError::Precondition { invariant, message } => json!({
                "error": {"kind": "precondition", "exit_code": 3, "invariant": invariant, "message": message}
            }),
        }
    }
}

impl From<cohft::frobenius::FrobeniusError> for CliError {
    fn from(e: cohft::frobenius::FrobeniusError) -> Self {
        use cohft::frobenius::FrobeniusError as F;
        match e {
            F::Malformed(m) => CliError::Schema(m),
            F::Scalar(s) => CliError::Schema(s.to_string()),
            F::NotSemisimple => CliError::precondition("semisimple", e.to_string()),
            F::NonRationalSplitting(_) => CliError::precondition("rational_splitting", e.to_string()),
            other => CliError::precondition("frobenius", other.to_string()),
        }
    }
}

impl From<cohft::correlator::EngineError> for CliError {
    fn from(e: cohft::correlator::EngineError) -> Self {
        use cohft::correlator::EngineError as E;
        match e {
            E::Malformed(m) => CliError::Schema(m),
            E::NotSymplectic => CliError::precondition("symplectic", e.to_string()),
            E::SeriesOrder { .. } => CliError::precondition("series_order", e.to_string()),
            E::Frobenius(f) => f.into(),
            other => CliError::precondition("engine", other.to_string()),
        }
    }
}

impl From<cohft::reconstruction::ReconstructionError> for CliError {
    fn from(e: cohft::reconstruction::ReconstructionError) -> Self {
        use cohft::reconstruction::ReconstructionError as R;
        match e {
            R::EulerData(m) => CliError::precondition("euler_data", m),
            R::UnsolvableBlock { .. } => CliError::precondition("rmatrix_block", e.to_string()),
            R::EvenHodgeTerm => CliError::schema(e.to_string()),
            R::Frobenius(f) => f.into(),
            R::Engine(x) => x.into(),
        }
    }
}

impl From<cohft::nodal::NodalError> for CliError {
    fn from(e: cohft::nodal::NodalError) -> Self {
        CliError::precondition("nodal", e.to_string())
    }
}

impl From<cohft::series::SeriesError> for CliError {
    fn from(e: cohft::series::SeriesError) -> Self {
        CliError::schema(e.to_string())
    }
}

impl From<cohft::tft::TftError> for CliError {
    fn from(e: cohft::tft::TftError) -> Self {
        CliError::precondition("tft", e.to_string())
    }
}
