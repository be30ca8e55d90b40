use thiserror::Error;

/// A diagnostic from one of the text parsers. `line` is 1-based; 0 means
/// the input had no line structure (a single literal).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn at_line(mut self, line: usize) -> Self {
        if self.line == 0 {
            self.line = line;
        }
        self
    }
}

/// Umbrella error for front-ends that drive several modules in sequence.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Space(#[from] crate::gmet::SpaceError),
    #[error(transparent)]
    Lifting(#[from] crate::liftings::LiftingError),
    #[error(transparent)]
    Term(#[from] crate::terms::TermError),
    #[error(transparent)]
    Theory(#[from] crate::theory::TheoryError),
    #[error(transparent)]
    Saturation(#[from] crate::saturation::SaturationError),
    #[error(transparent)]
    Algebra(#[from] crate::freealg::AlgebraError),
    #[error(transparent)]
    Dist(#[from] crate::distributions::DistError),
}
