use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// Seventeen significant digits, '.' decimal.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Optional cell: empty when missing.
pub fn cell(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_csv(path: Option<&Path>, header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
    let mut out = sink(path)?;
    let result = (|| {
        writeln!(out, "{header}")?;
        for row in rows {
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()
    })();
    match result {
        // A closed reader (e.g. `| head`) is not an error.
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
