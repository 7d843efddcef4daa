use feedcap::FeedcapError;

/// CLI failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid input: bad flags, malformed config, out-of-domain values.
    Input(String),
    /// The solver found no feasible parameters.
    Infeasible(String),
    /// Filesystem failure.
    Io(String),
    /// A statistical or numerical tolerance gate failed.
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
            CliError::Tolerance(_) => 5,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m)
            | CliError::Infeasible(m)
            | CliError::Io(m)
            | CliError::Tolerance(m) => write!(f, "{m}"),
        }
    }
}

impl From<FeedcapError> for CliError {
    fn from(e: FeedcapError) -> Self {
        match e {
            FeedcapError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_table() {
        assert_eq!(CliError::input("x").exit_code(), 2);
        assert_eq!(CliError::Infeasible("x".into()).exit_code(), 3);
        assert_eq!(CliError::Io("x".into()).exit_code(), 4);
        assert_eq!(CliError::Tolerance("x".into()).exit_code(), 5);
        // solver infeasibility maps onto exit 3
        let e: CliError = FeedcapError::Infeasible("no pair".into()).into();
        assert_eq!(e.exit_code(), 3);
        // domain validation maps onto exit 2
        let e: CliError = FeedcapError::NonPositivePower(0.0).into();
        assert_eq!(e.exit_code(), 2);
    }
}
