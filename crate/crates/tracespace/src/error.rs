use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{line}:1: duplicate capacity declaration for `{name}`")]
    DuplicateCapacityDecl { name: String, line: usize },
    #[error("unsupported program shape: {0}")]
    UnsupportedShape(String),
    #[error("thread {thread}: V({resource}) at tick {tick} without a matching P")]
    UnmatchedUnlock { thread: usize, resource: String, tick: u32 },
    #[error("thread {thread}: P({resource}) at tick {tick} while already holding it")]
    NestedRelock { thread: usize, resource: String, tick: u32 },
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("representative search stuck at counters {0:?}")]
    StuckRepresentative(Vec<u32>),
    #[error("shadow state is dead on its own")]
    InternalDeadState,
    #[error("{0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::DuplicateCapacityDecl { .. } => 1,
            Error::UnsupportedShape(_) => 2,
            Error::UnmatchedUnlock { .. } | Error::NestedRelock { .. } => 3,
            Error::CapExceeded(_) => 4,
            Error::StuckRepresentative(_) | Error::InternalDeadState | Error::Io(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
