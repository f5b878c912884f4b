use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("matrix is singular to working precision (pivot {pivot:e}, threshold {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },

    #[error(
        "newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate hamiltonian: transverse momentum hessian block is singular")]
    DegenerateHamiltonian,

    #[error("lex error at byte {offset}: unexpected character {found:?}")]
    Lex { offset: usize, found: char },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("catalog error: {0}")]
    Catalog(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("vector field evaluation failed at stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            got,
        })
    }
}
