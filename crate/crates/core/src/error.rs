use thiserror::Error;

/// Errors raised by the channel-system model and its execution engine.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("messages must have at least one part")]
    EmptyMessage,
    #[error("malformed message text: {0}")]
    BadMessage(String),
    #[error("duplicate process name {0}")]
    DuplicateProcess(String),
    #[error("duplicate channel {0}")]
    DuplicateChannel(String),
    #[error("channel {channel}: endpoint {process} is not a declared process")]
    UnknownChannelEndpoint { channel: String, process: String },
    #[error("channel source and destination must differ: {0}")]
    SelfChannel(String),
    #[error("channel {channel}: capacity must be 0 or 1, got {capacity}")]
    BadCapacity { channel: String, capacity: u8 },
    #[error("process {process}: unknown variable `{var}`")]
    UnknownVariable { process: String, var: String },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("initial value {value} of `{var}` violates its domain")]
    InitOutOfDomain { var: String, value: String },
    #[error("process {0}: initial condition is not satisfied by the initial evaluation")]
    UnsatisfiableInit(String),
    #[error("transition references unknown channel {0}")]
    UnknownChannel(String),
    #[error("process {process} does not take part in channel {channel}")]
    NotAnEndpoint { process: String, channel: String },
    #[error("malformed configuration: {0}")]
    BadConfiguration(String),
    #[error("transition is not enabled in the given configuration: {0}")]
    NotEnabled(String),
    #[error("effect evaluation failed: {0}")]
    EffectFailed(String),
    #[error("replay diverged at step {step}: chose {chosen} of {available} enabled transitions")]
    ReplayDiverged {
        step: u64,
        chosen: usize,
        available: usize,
    },
}

/// Parse errors for the declarative text formats, carrying position info.
/// `file` is empty when parsing from memory.
#[derive(Debug, Error)]
#[error("{file}:{line}:{col}: {msg}")]
pub struct ParseError {
    pub file: String,
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError {
            file: String::new(),
            line,
            col,
            msg: msg.into(),
        }
    }

    /// Attaches a file name for reporting.
    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = file.into();
        self
    }
}
