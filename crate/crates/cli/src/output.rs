use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};
use stqp_core::matrix::format_f64;

pub const SCHEMA: u32 = 1;

/// Compact JSON with every float written to 17 significant digits.
struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        CompactFormatter.write_f32(w, v)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Prints the report, or writes it to `json_out` when given.
pub fn emit<T: Serialize>(value: &T, json_out: Option<&Path>) -> Result<()> {
    let text = to_json(value)?;
    match json_out {
        Some(p) => write_atomic(p, &text),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let v = vec![0.1, -1.0 / 3.0, 2e-300, 0.0, f64::MAX];
        let s = to_json(&v).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(s.contains("1.0000000000000001e-1"));
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(to_json(&vec![f64::NAN]).unwrap(), "[null]\n");
    }
}
