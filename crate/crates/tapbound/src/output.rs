// SPDX-License-Identifier: Apache-2.0

//! CSV and text report writers.
//!
//! CSV files are comma-separated with a header row. Floats are written with
//! 17 significant digits, plain decimal for exponents in `-5..=16` and
//! scientific otherwise, independent of locale.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Formats `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .expect("`{:e}` output always carries an exponent");
    if (-5..=16).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, v)
    } else {
        sci
    }
}

/// A CSV table held in memory until written.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(io(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "0.10000000000000001");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000");
        assert_eq!(fmt_f64(12.5), "12.500000000000000");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000");
        assert_eq!(fmt_f64(1e-7), "9.9999999999999995e-8");
        assert_eq!(fmt_f64(2.5e20), "2.5000000000000000e20");
        assert_eq!(fmt_f64(-2.5e-3), "-0.0025000000000000001");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn formatted_values_round_trip() {
        for v in [
            0.1,
            1.0 / 3.0,
            6.02e23,
            1e-300,
            123456.789,
            0.632_120_558_828_557_7,
        ] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.row(["1", "x"]);
        assert_eq!(String::from_utf8(t.into_bytes()).unwrap(), "a,b\n1,x\n");
    }
}
