use thiserror::Error;

/// One rule whose pushed length does not match the class of its action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityViolation {
    pub rule: String,
    pub expected: usize,
    pub found: usize,
}

impl std::fmt::Display for VisibilityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "rule `{}` pushes {} symbol(s), its action class requires {}",
            self.rule, self.found, self.expected
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: undeclared {kind} `{name}`")]
    Undeclared {
        line: usize,
        kind: &'static str,
        name: String,
    },

    #[error("visibility violated by {} rule(s): {}", .0.len(), join_violations(.0))]
    Visibility(Vec<VisibilityViolation>),

    #[error("invalid name `{name}`: {reason}")]
    InvalidName { name: String, reason: &'static str },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("cannot parse configuration `{0}`")]
    BadConfiguration(String),

    #[error("stack heights differ: {left} vs {right}")]
    HeightMismatch { left: usize, right: usize },

    #[error("system is not a {0}")]
    WrongClass(&'static str),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("the configurations are related; there is no attacker witness")]
    Related,

    #[error("process is not regular")]
    NotRegular,

    #[error("{0}")]
    Invalid(String),
}

fn join_violations(v: &[VisibilityViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
