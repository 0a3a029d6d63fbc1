//! CSV and JSON file handling with fixed schemas.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, CliResult};

/// Machine-format number: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

/// Writes a CSV file from preformatted fields.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| write_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

/// Pretty JSON whose floats carry 17 significant digits, like the CSV files.
struct Sig17(PrettyFormatter<'static>);

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> CliResult<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Data(format!("cannot serialize: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = to_json_string(value)?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| write_err(path, e))?;
    w.flush().map_err(|e| write_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| write_err(path, e))
}

/// Reads a CSV whose header must equal `header` exactly.
///
/// Row numbers in errors count the header as line 1.
pub fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> CliResult<Vec<T>> {
    if !path.is_file() {
        return Err(CliError::Config(format!("input file {} does not exist", path.display())));
    }
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let found = r
        .headers()
        .map_err(|e| CliError::Data(format!("{}: unreadable header: {e}", path.display())))?
        .clone();
    let found: Vec<&str> = found.iter().map(str::trim).collect();
    if found != header {
        let detail = header
            .iter()
            .zip(found.iter().map(Some).chain(std::iter::repeat(None)))
            .enumerate()
            .find(|(_, (want, got))| got.map(|g| g != *want).unwrap_or(true))
            .map(|(i, (want, got))| match got {
                Some(g) => format!("column {} is '{g}', expected '{want}'", i + 1),
                None => format!("missing column '{want}'"),
            })
            .unwrap_or_else(|| format!("unexpected column '{}'", found[header.len()]));
        return Err(CliError::Data(format!(
            "{}: {detail} (expected header {})",
            path.display(),
            header.join(",")
        )));
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| CliError::Data(format!("{}: row {}: {}", path.display(), i + 2, csv_reason(&e)))))
        .collect()
}

fn csv_reason(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(f) => format!("field {}: {}", f + 1, err.kind()),
            None => err.kind().to_string(),
        },
        _ => e.to_string(),
    }
}

/// Standard file names inside a simulation directory.
pub struct SimFiles {
    pub panel: PathBuf,
    pub households: PathBuf,
    pub intervals: PathBuf,
    pub engel: PathBuf,
    pub counterfactual: PathBuf,
    pub truth: PathBuf,
}

impl SimFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            panel: dir.join("panel.csv"),
            households: dir.join("households.csv"),
            intervals: dir.join("intervals.csv"),
            engel: dir.join("engel_cells.csv"),
            counterfactual: dir.join("counterfactual.csv"),
            truth: dir.join("truth.json"),
        }
    }
}
