use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {msg}", location(*line, key))]
    Config { line: usize, key: String, msg: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] qnic_core::Error),

    #[error(transparent)]
    Protocol(#[from] qnic_protostack::ProtocolError),

    #[error(transparent)]
    Hardware(#[from] qnic_hwsim::HwError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// Outputs were written but at least one point is insecure.
    #[error("{0}")]
    Insecure(String),
}

fn location(line: usize, key: &str) -> String {
    match (line, key.is_empty()) {
        (0, true) => String::new(),
        (0, false) => format!(" (key '{key}')"),
        (l, true) => format!(" at line {l}"),
        (l, false) => format!(" at line {l} (key '{key}')"),
    }
}

impl CliError {
    pub fn config(line: usize, key: &str, msg: &str) -> Self {
        CliError::Config {
            line,
            key: key.to_string(),
            msg: msg.to_string(),
        }
    }

    pub fn is_insecure(&self) -> bool {
        use qnic_protostack::ProtocolError as P;
        matches!(
            self,
            CliError::Insecure(_)
                | CliError::Core(qnic_core::Error::InsecureChannel { .. })
                | CliError::Protocol(P::Core(qnic_core::Error::InsecureChannel { .. }))
        )
    }

    /// 2 for an insecure channel, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        if self.is_insecure() {
            2
        } else {
            1
        }
    }
}
