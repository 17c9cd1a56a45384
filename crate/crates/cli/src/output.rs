//! CSV rows and their writer.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

pub const HEADER: [&str; 9] = ["experiment", "n", "theta", "s", "p", "r_opt", "value", "transmissivity", "extra"];
const SIG_DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub experiment: &'static str,
    pub n: usize,
    pub theta: f64,
    pub s: f64,
    pub p: f64,
    pub r_opt: f64,
    pub value: f64,
    pub transmissivity: f64,
    pub extra: String,
}

impl CsvRow {
    pub fn failed(&self) -> bool {
        self.extra.contains("failed:")
    }

    fn record(&self) -> [String; 9] {
        [
            self.experiment.to_string(),
            self.n.to_string(),
            fmt_sig(self.theta),
            fmt_sig(self.s),
            fmt_sig(self.p),
            fmt_sig(self.r_opt),
            fmt_sig(self.value),
            fmt_sig(self.transmissivity),
            self.extra.clone(),
        ]
    }
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros dropped.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Streams rows to a file or stdout.
pub struct CsvSink {
    writer: csv::Writer<Box<dyn Write>>,
    path: Option<PathBuf>,
    rows: usize,
}

impl CsvSink {
    pub fn create(path: Option<&Path>) -> anyhow::Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
            None => Box::new(io::stdout().lock()),
        };
        Self::from_writer(out, path.map(Path::to_path_buf))
    }

    pub fn from_writer(out: Box<dyn Write>, path: Option<PathBuf>) -> anyhow::Result<Self> {
        let mut sink = CsvSink { writer: csv::Writer::from_writer(out), path, rows: 0 };
        sink.writer.write_record(HEADER).map_err(|e| sink.context(e))?;
        Ok(sink)
    }

    fn context(&self, e: csv::Error) -> anyhow::Error {
        match &self.path {
            Some(p) => anyhow::Error::new(e).context(format!("writing {}", p.display())),
            None => anyhow::Error::new(e).context("writing to stdout"),
        }
    }

    pub fn write(&mut self, row: &CsvRow) -> anyhow::Result<()> {
        self.writer.write_record(row.record()).map_err(|e| self.context(e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(mut self) -> anyhow::Result<usize> {
        self.writer.flush().map_err(|e| self.context(e.into()))?;
        Ok(self.rows)
    }
}
