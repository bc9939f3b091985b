//! Exit-code discipline: 0 success, 1 partial or analysis failure, 2
//! invalid input.

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration, flags, or file contents the operator must fix.
    Invalid(String),
    /// The command ran but could not fully succeed.
    Partial(String),
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure::Invalid(msg.into())
    }

    pub fn partial(msg: impl Into<String>) -> Self {
        Failure::Partial(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Partial(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Partial(m) => m,
        }
    }
}
