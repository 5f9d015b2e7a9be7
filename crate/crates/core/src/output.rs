//! Text serialization shared by the library writers and the CLI.
//!
//! Reals are printed with 17 significant digits in scientific notation,
//! which round-trips every `f64` exactly and does not depend on locale.

use std::io::{self, Write};

/// Formats `v` with 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a two-column CSV with the given header; `\n` line endings.
pub fn write_csv_pairs<W: Write + ?Sized>(
    out: &mut W,
    header: (&str, &str),
    rows: impl IntoIterator<Item = (f64, f64)>,
) -> io::Result<()> {
    writeln!(out, "{},{}", header.0, header.1)?;
    for (a, b) in rows {
        writeln!(out, "{},{}", format_real(a), format_real(b))?;
    }
    Ok(())
}

/// Incremental writer for a JSON array of `[a, b]` pairs.
pub struct JsonPairWriter<W: Write> {
    out: W,
    first: bool,
}

impl<W: Write> JsonPairWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        out.write_all(b"[")?;
        Ok(Self { out, first: true })
    }

    pub fn push(&mut self, a: f64, b: f64) -> io::Result<()> {
        if !self.first {
            self.out.write_all(b",")?;
        }
        self.first = false;
        write!(self.out, "[{},{}]", format_real(a), format_real(b))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.write_all(b"]\n")?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.0, 1.0, 1.0 / 3.0, 5.0 / 12.0, 1e-300, 0.1 + 0.2, f64::MIN_POSITIVE] {
            let s = format_real(v);
            let digits = s.split('e').next().unwrap().replace(['.', '-'], "");
            assert_eq!(digits.len(), 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn json_pairs_parse() {
        let mut w = JsonPairWriter::new(Vec::new()).unwrap();
        w.push(0.0, 0.0).unwrap();
        w.push(1.0 / 3.0, 0.5).unwrap();
        let bytes = w.finish().unwrap();
        let parsed: Vec<(f64, f64)> = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(parsed, vec![(0.0, 0.0), (1.0 / 3.0, 0.5)]);
    }
}
