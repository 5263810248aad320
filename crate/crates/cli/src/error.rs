use std::fmt;

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "usage",
            msg: msg.into(),
        }
    }

    pub fn violations(msg: impl Into<String>) -> Self {
        Self {
            code: 6,
            kind: "violation",
            msg: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.msg.replace('\n', " ");
        write!(f, "wdist-error[{}] {}: {}", self.code, self.kind, msg)
    }
}

impl From<wdist::Error> for CliError {
    fn from(e: wdist::Error) -> Self {
        use wdist::Error as E;
        let (code, kind, msg) = match e {
            E::Parameter(m) => (2, "parameter", m),
            E::Dimension(m) => (2, "dimension", m),
            E::Generation { bin, msg } => (3, "generation", format!("bin {bin}: {msg}")),
            E::Divergence { epoch, msg } => (4, "divergence", format!("epoch {epoch}: {msg}")),
            E::Singular(m) => (4, "singular", m),
            E::Compatibility(m) => (5, "compatibility", m),
            E::Parse { line: Some(l), msg } => (1, "parse", format!("line {l}: {msg}")),
            E::Parse { line: None, msg } => (1, "parse", msg),
            E::Io(io) => (1, "io", io.to_string()),
        };
        Self { code, kind, msg }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        wdist::Error::Io(e).into()
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        wdist::Error::from(e).into()
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        wdist::Error::from(e).into()
    }
}

pub type CliResult<T> = Result<T, CliError>;
