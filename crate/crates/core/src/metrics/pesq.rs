use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::Command;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::MetricError;

const LAST_NUMBER: &str = r"[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?";

/// External wide-band PESQ tool.
///
/// `command` is split on whitespace; `{clean}` and `{degraded}` inside any
/// argument are replaced by the file paths. The score is the last match of
/// `pattern` in stdout (capture group 1 if present), defaulting to the last
/// number printed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PesqAdapter {
    pub command: String,
    #[serde(default)]
    pub pattern: Option<String>,
}

impl PesqAdapter {
    pub fn new(command: impl Into<String>) -> Self {
        Self { command: command.into(), pattern: None }
    }

    fn argv(&self, clean: &Path, degraded: &Path) -> Result<(PathBuf, Vec<String>), MetricError> {
        let mut parts = self.command.split_whitespace().map(|p| {
            p.replace("{clean}", &clean.to_string_lossy()).replace("{degraded}", &degraded.to_string_lossy())
        });
        let program = parts.next().ok_or_else(|| MetricError::InvalidArgument("empty PESQ command".into()))?;
        Ok((PathBuf::from(program), parts.collect()))
    }

    /// Extracts the score from adapter output.
    pub fn parse_output(&self, stdout: &str) -> Result<f64, MetricError> {
        let re = Regex::new(self.pattern.as_deref().unwrap_or(LAST_NUMBER))
            .map_err(|e| MetricError::InvalidArgument(format!("PESQ pattern: {e}")))?;
        let parse_err = || MetricError::PesqParse { output: stdout.to_string() };
        let caps = re.captures_iter(stdout).last().ok_or_else(parse_err)?;
        let text = caps.get(1).or_else(|| caps.get(0)).ok_or_else(parse_err)?.as_str();
        let value: f64 = text.trim().parse().map_err(|_| parse_err())?;
        if !(-0.5..=4.5).contains(&value) {
            return Err(MetricError::PesqRange { value });
        }
        Ok(value)
    }
}

/// Runs the adapter on two WAV files. `Ok(None)` means the adapter program
/// could not be found, in which case PESQ is reported as unavailable.
pub fn pesq_external(clean_path: &Path, degraded_path: &Path, adapter: &PesqAdapter) -> Result<Option<f64>, MetricError> {
    let (program, args) = adapter.argv(clean_path, degraded_path)?;
    let output = match Command::new(&program).args(&args).output() {
        Ok(o) => o,
        Err(e) if matches!(e.kind(), ErrorKind::NotFound | ErrorKind::PermissionDenied) => {
            log::warn!("PESQ adapter {} unavailable: {e}", program.display());
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    if !output.status.success() {
        return Err(MetricError::PesqFailed {
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    adapter.parse_output(&String::from_utf8_lossy(&output.stdout)).map(Some)
}
