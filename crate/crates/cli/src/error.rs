use fpp_core::Error as CoreError;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("a master seed is required: pass --seed <u64> or set `seed` in the config")]
    MissingSeed,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0} hard invariant violation(s); see invariant_violations in the aggregates file")]
    Invariant(usize),
    #[error("interrupted; partial records were written with a truncation marker")]
    Interrupted,
}

impl CliError {
    /// 1 for usage, config and input errors, 2 for invariant violations
    /// found during an experiment, 130 after Ctrl-C.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 2,
            CliError::Interrupted => 130,
            _ => 1,
        }
    }

    /// Extra advice printed under the error message.
    pub fn guidance(&self) -> Option<String> {
        match self {
            CliError::Core(CoreError::TooManyCandidates { found, limit }) => Some(format!(
                "the instance has {found} candidate points but exact search is capped at {limit}; \
                 drop --exact to fall back to the local-search heuristic, shrink t or the window, \
                 or raise solver.max_exact_points (at most 24) in the config"
            )),
            CliError::Core(CoreError::BadTarget(_)) => Some(
                "targets look like {\"kind\": \"vertical_line\", \"x\": 4}, {\"kind\": \"point\", \"at\": [x, y]}, \
                 {\"kind\": \"segment\", \"a\": [x, y], \"b\": [x, y]} or \
                 {\"kind\": \"line\", \"origin\": [x, y], \"direction\": [dx, dy]}"
                    .into(),
            ),
            _ => None,
        }
    }
}
