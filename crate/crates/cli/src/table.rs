use std::path::Path;

use crate::error::CliError;

/// Write a CSV table with a header row. Floats use the shortest
/// round-trip representation.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let with_path = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(with_path)?;
    w.write_record(header).map_err(with_path)?;
    for row in rows {
        w.write_record(&row).map_err(with_path)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e9)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e9).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}
