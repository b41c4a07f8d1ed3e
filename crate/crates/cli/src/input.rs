use std::path::Path;

use equimarginal::ProblemInstance;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: invalid number '{token}'")]
    Parse { line: usize, token: String },
    #[error("line {line}: coefficient {value} must be positive")]
    Nonpositive { line: usize, value: f64 },
    #[error("no coefficients found")]
    Empty,
    #[error(transparent)]
    Instance(#[from] equimarginal::Error),
}

/// Parses coefficient text: one value per line or comma-separated values,
/// with blank lines and `#` comments skipped.
pub fn parse_instance_text(text: &str) -> Result<ProblemInstance, InputError> {
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        for token in trimmed.split(',') {
            let token = token.trim();
            let value: f64 = token.parse().map_err(|_| InputError::Parse {
                line,
                token: token.to_string(),
            })?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(InputError::Nonpositive { line, value });
            }
            values.push(value);
        }
    }
    if values.is_empty() {
        return Err(InputError::Empty);
    }
    Ok(ProblemInstance::new(values)?)
}

pub fn read_instance_csv(path: &Path) -> Result<ProblemInstance, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance_text(&text)
}
