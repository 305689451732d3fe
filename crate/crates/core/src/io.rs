//! Artifact files: CSV and JSON with a provenance header, and the output-directory lock.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Who wrote a file and from which config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub config_hash: String,
    pub command: String,
}

impl Header {
    pub fn new(config_hash: impl Into<String>, command: impl Into<String>) -> Self {
        Header { config_hash: config_hash.into(), command: command.into() }
    }

    pub fn line(&self) -> String {
        format!("# rotwave {VERSION} command={} config_sha256={}", self.command, self.config_hash)
    }

    fn json(&self) -> Value {
        json!({ "tool": "rotwave", "version": VERSION, "command": self.command, "config_sha256": self.config_hash })
    }
}

/// Writes through a temporary sibling and renames, so readers never see partial files.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_csv<I, R>(path: &Path, header: &Header, columns: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    let mut buf = header.line().into_bytes();
    buf.push(b'\n');
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(columns).map_err(csv_err)?;
    for r in rows {
        let r = r.as_ref();
        if r.len() != columns.len() {
            return Err(Error::InvalidArgument(format!("row has {} cells, expected {}", r.len(), columns.len())));
        }
        w.write_record(r).map_err(csv_err)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &buf)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// Header comment lines, the column names and the rows of a CSV written by [`write_csv`].
pub struct CsvTable {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path)?;
    let comments = text.lines().take_while(|l| l.starts_with('#')).map(|l| l[1..].trim().to_string()).collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let columns: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if columns.is_empty() || columns.iter().all(String::is_empty) {
        return Err(Error::InvalidArgument(format!("{} has no column line", path.display())));
    }
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()).map_err(csv_err))
        .collect::<Result<_>>()?;
    Ok(CsvTable { comments, columns, rows })
}

/// `{"header": ..., "data": value}` pretty-printed with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, header: &Header, value: &T) -> Result<()> {
    let doc = json!({ "header": header.json(), "data": serde_json::to_value(value)? });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let data = doc.get("data").cloned().ok_or_else(|| Error::InvalidArgument(format!("{} has no data block", path.display())))?;
    Ok(serde_json::from_value(data)?)
}

/// Field as `x,y,v0,v1,..`. Values use the shortest representation that round-trips.
pub fn write_field(path: &Path, header: &Header, field: &Field) -> Result<()> {
    let g = field.grid();
    let mut cols = vec!["x".to_string(), "y".to_string()];
    cols.extend((0..field.ncomp()).map(|c| format!("v{c}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let rows = (0..g.nodes()).map(|k| {
        let (x, y) = g.position(k);
        let mut r = vec![x.to_string(), y.to_string()];
        r.extend(field.at(k).iter().map(|v| v.to_string()));
        r
    });
    write_csv(path, header, &cols, rows)
}

fn parse(s: &str, path: &Path) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::InvalidArgument(format!("{}: cannot parse '{s}' as a number", path.display())))
}

/// Reads a field written by [`write_field`] onto `grid`.
pub fn read_field(path: &Path, grid: Grid2D) -> Result<Field> {
    let t = read_csv(path)?;
    let ncomp = t.columns.len().saturating_sub(2);
    if ncomp == 0 || t.rows.len() != grid.nodes() {
        return Err(Error::InvalidArgument(format!(
            "{} holds {} nodes with {} components; the configured grid has {} nodes",
            path.display(),
            t.rows.len(),
            ncomp,
            grid.nodes()
        )));
    }
    let mut values = Vec::with_capacity(grid.nodes() * ncomp);
    for (k, r) in t.rows.iter().enumerate() {
        let (x, y) = grid.position(k);
        let (fx, fy) = (parse(&r[0], path)?, parse(&r[1], path)?);
        if (fx - x).abs() > 1e-9 || (fy - y).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("{}: node {k} is not on the configured grid", path.display())));
        }
        for c in &r[2..] {
            values.push(parse(c, path)?);
        }
    }
    Field::from_values(grid, ncomp, values)
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub const FILE: &'static str = ".rotwave.lock";

    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(Self::FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(OutputLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Config(format!(
                "output directory {} is in use by another run (remove {} if it is stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2D::new(1.0, 0.25).unwrap();
        let f = Field::from_fn(g, 2, |x, y| vec![(x * 1.3).sin() / 3.0, y.exp() * 1e-17]);
        let h = Header::new("abc", "test");
        let p = dir.path().join("f.csv");
        write_field(&p, &h, &f).unwrap();
        let back = read_field(&p, g).unwrap();
        assert_eq!(back, f);
        let t = read_csv(&p).unwrap();
        assert!(t.comments[0].contains("config_sha256=abc"));
        assert!(read_field(&p, Grid2D::new(1.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn json_wrapper() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        write_json(&p, &Header::new("h", "c"), &vec![1.5, 2.0]).unwrap();
        let v: Vec<f64> = read_json(&p).unwrap();
        assert_eq!(v, vec![1.5, 2.0]);
        let raw = fs::read_to_string(&p).unwrap();
        assert!(raw.contains("\"config_sha256\": \"h\""));
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutputLock::acquire(dir.path()).unwrap();
        assert!(OutputLock::acquire(dir.path()).is_err());
        drop(a);
        assert!(OutputLock::acquire(dir.path()).is_ok());
    }
}
