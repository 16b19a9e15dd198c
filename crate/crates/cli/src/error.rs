use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or inconsistent configuration; `path` is the dotted config key.
    #[error("config error at '{path}': {message}")]
    Config { path: String, message: String },

    /// A core module failed while running the configuration.
    #[error("{module} error (config '{path}'): {source}")]
    Numerical {
        module: &'static str,
        path: String,
        #[source]
        source: tdsmat::Error,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { path: path.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Attaches the responsible config key to a core error.
pub trait At<T> {
    fn at(self, path: &str) -> Result<T, CliError>;
}

impl<T> At<T> for tdsmat::Result<T> {
    fn at(self, path: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Numerical { module: e.module(), path: path.to_string(), source: e })
    }
}
