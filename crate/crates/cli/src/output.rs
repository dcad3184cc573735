//! Output sinks and the CSV/JSON encodings. Every number is written with
//! 17 significant digits; lines end in `\n`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use threshold_diffusion::format::format_g17;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Format as ValueEnum>::from_str(s, true)
            .map_err(|_| CliError::Args(format!("unknown format '{s}' (csv or json)")))
    }
}

/// Standard output, or a file that is deleted again if the command fails.
pub enum Sink {
    Stdout(io::Stdout),
    File { path: PathBuf, out: BufWriter<File> },
}

impl Sink {
    /// Opens the destination before any work is done, so an unwritable path
    /// fails fast.
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Sink::Stdout(io::stdout())),
            Some(p) => {
                let file = File::create(p).map_err(|e| CliError::io(p, e))?;
                Ok(Sink::File {
                    path: p.to_path_buf(),
                    out: BufWriter::new(file),
                })
            }
        }
    }

    fn path(&self) -> &Path {
        match self {
            Sink::Stdout(_) => Path::new("<stdout>"),
            Sink::File { path, .. } => path,
        }
    }

    /// Runs `f` against the sink and maps write failures to I/O errors.
    pub fn write_with(&mut self, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
        let result = match self {
            Sink::Stdout(s) => {
                let mut lock = s.lock();
                f(&mut lock).and_then(|_| lock.flush())
            }
            Sink::File { out, .. } => f(out).and_then(|_| out.flush()),
        };
        result.map_err(|e| CliError::io(self.path(), e))
    }

    /// Removes a partially written file.
    pub fn discard(self) {
        if let Sink::File { path, out } = self {
            drop(out);
            let _ = std::fs::remove_file(path);
        }
    }
}

/// Rows sharing a label, e.g. one `(t, x)` pair of a density sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub labels: Vec<(&'static str, f64)>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub blocks: Vec<Block>,
}

impl Table {
    pub fn single(columns: &'static [&'static str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            columns,
            blocks: vec![Block { labels: vec![], rows }],
        }
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    /// One block prints as plain CSV. Several blocks are separated by a
    /// blank line and each opens with a `# name=value,...` comment line
    /// before repeating the header.
    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        let many = self.blocks.len() > 1;
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                out.write_all(b"\n")?;
            }
            if many {
                let label: Vec<String> = block
                    .labels
                    .iter()
                    .map(|(k, v)| format!("{k}={}", format_g17(*v)))
                    .collect();
                writeln!(out, "# {}", label.join(","))?;
            }
            writeln!(out, "{}", self.columns.join(","))?;
            for row in &block.rows {
                let cells: Vec<String> = row.iter().map(|&v| format_g17(v)).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Ok(())
    }

    /// A flat array of objects carrying the block labels and the columns.
    pub fn write_json(&self, out: &mut dyn Write) -> io::Result<()> {
        out.write_all(b"[")?;
        let mut first = true;
        for block in &self.blocks {
            for row in &block.rows {
                let fields: Vec<String> = block
                    .labels
                    .iter()
                    .copied()
                    .chain(self.columns.iter().copied().zip(row.iter().copied()))
                    .map(|(k, v)| format!("\"{k}\":{}", json_number(v)))
                    .collect();
                out.write_all(if first { b"\n  " } else { b",\n  " })?;
                write!(out, "{{{}}}", fields.join(","))?;
                first = false;
            }
        }
        out.write_all(if first { b"]\n" } else { b"\n]\n" })
    }
}

/// JSON has no NaN or infinity; those become `null`.
pub fn json_number(v: f64) -> String {
    if v.is_finite() {
        format_g17(v)
    } else {
        "null".into()
    }
}
