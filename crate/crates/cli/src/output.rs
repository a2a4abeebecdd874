//! Result files.

use std::io::Write;
use std::path::Path;

use sas_core::PredictionInterval;

use crate::error::{CliError, CliResult};

/// Shortest decimal form that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Header of the per-target results file.
pub const RESULTS_HEADER: &str = "x_id,theta_hat,v_hat,ci_lo,ci_hi,point_response";

/// One results line: `θ̂` and `V̂` for the standardized target, the interval
/// and point prediction on the response scale.
pub fn results_line(id: &str, interval: &PredictionInterval) -> String {
    format!(
        "{},{},{},{},{},{}",
        id,
        fmt_f64(interval.theta_hat),
        fmt_f64(interval.v_hat),
        fmt_f64(interval.ci_response.0),
        fmt_f64(interval.ci_response.1),
        fmt_f64(interval.point_response)
    )
}
