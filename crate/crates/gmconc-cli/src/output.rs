//! Output formatting: significant-digit floats, RFC-4180 CSV quoting, and
//! the stdout-or-file writer.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};

/// Significant digits used in CSV output. Enough to diff regressions without
/// noise in the last bits.
pub const CSV_SIG_DIGITS: usize = 12;

/// Format with a fixed number of significant digits, plain decimal where the
/// magnitude allows and scientific notation otherwise.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if exponent < -4 || exponent >= sig as i32 {
        format!("{:.*e}", sig - 1, x)
    } else {
        let decimals = (sig as i32 - 1 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

/// Quote a CSV field per RFC 4180: fields containing commas, quotes or line
/// breaks are wrapped in double quotes with inner quotes doubled.
pub fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Join fields into one CSV record.
pub fn csv_record<I: IntoIterator<Item = String>>(fields: I) -> String {
    fields
        .into_iter()
        .map(|f| csv_field(&f))
        .collect::<Vec<_>>()
        .join(",")
}

/// Write `content` to the given path, or to stdout when no path is set.
pub fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            Ok(())
        }
    }
}
