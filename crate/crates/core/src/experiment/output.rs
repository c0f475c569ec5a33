//! CSV emission.
//!
//! Every file starts with `#` comment lines naming the table, the config
//! hash and the master seed, followed by a header row. Rows are flushed as
//! they are written so that an aborted run keeps its finished rows.

use std::io::Write;

use crate::error::Result;

pub struct CsvSink<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W, table: &str, config_hash: &str, seed: u64, columns: &[&str]) -> Result<Self> {
        writeln!(out, "# table={table}")?;
        writeln!(out, "# config_hash={config_hash}")?;
        writeln!(out, "# seed={seed}")?;
        writeln!(out, "{}", columns.join(","))?;
        out.flush()?;
        Ok(Self {
            out,
            columns: columns.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        assert_eq!(fields.len(), self.columns, "row width");
        writeln!(self.out, "{}", fields.join(","))?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Empty field for undefined values.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
