pub mod bench;
pub mod check;
pub mod ica;
pub mod jd;

use std::path::{Path, PathBuf};

use crate::trace::TraceFile;
use crate::{CliError, FormatArg};

/// Writes a trace in the selected format; `stem` is the file name without
/// extension.
pub fn write_trace(
    dir: &Path,
    stem: &str,
    format: FormatArg,
    trace: &TraceFile,
) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    match format {
        FormatArg::Json => {
            let path = dir.join(format!("{stem}.trace.json"));
            std::fs::write(&path, trace.to_json())?;
            Ok(path)
        }
        FormatArg::Csv => {
            let iters = dir.join(format!("{stem}.iters.csv"));
            std::fs::write(&iters, trace.iterations_csv())?;
            let summary = dir.join(format!("{stem}.summary.csv"));
            std::fs::write(&summary, trace.summary_csv())?;
            Ok(iters)
        }
    }
}
