//! CSV and key = value report I/O.
//!
//! Numbers are written as `{:.16e}` (17 significant digits, lossless for
//! `f64`). Every file is written to a temporary sibling and renamed into
//! place, so a failed run never leaves a partial file behind.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn atomic_write<F>(path: &Path, fill: F) -> Result<PathBuf>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(path.to_path_buf())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
    atomic_write(path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row.iter().map(|&x| fmt_f64(x)))
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Data {
            path: "<csv>".into(),
            message: format!("{other:?}"),
        },
    }
}

/// Ordered `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(&mut self, key: &str, v: f64) -> &mut Self {
        self.entries.push((key.to_string(), fmt_f64(v)));
        self
    }

    pub fn text(&mut self, key: &str, v: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), v.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        let text = self.render();
        atomic_write(path, |out| Ok(out.write_all(text.as_bytes())?))
    }
}

/// Reads the named columns of a headed numeric CSV. Each entry of `columns`
/// lists accepted header names for one column, first match wins.
pub fn read_columns(path: &Path, columns: &[&[&str]]) -> Result<Vec<Vec<f64>>> {
    let where_ = path.display().to_string();
    let data_err = |message: String| Error::Data {
        path: where_.clone(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| data_err(e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| data_err(format!("unreadable header: {e}")))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(data_err("file is empty (no header)".into()));
    }
    let idx: Vec<usize> = columns
        .iter()
        .map(|names| {
            names
                .iter()
                .find_map(|n| header.iter().position(|h| h == *n))
                .ok_or_else(|| data_err(format!("missing column '{}'", names.join("' or '"))))
        })
        .collect::<Result<_>>()?;

    let mut out = vec![Vec::new(); columns.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            data_err(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        for (c, &j) in idx.iter().enumerate() {
            let field = rec.get(j).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| data_err(format!("line {line}: '{field}' is not a number")))?;
            if !v.is_finite() {
                return Err(data_err(format!("line {line}: non-finite value '{field}'")));
            }
            out[c].push(v);
        }
    }
    if out.first().is_some_and(Vec::is_empty) {
        return Err(data_err("no data rows".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_numbers_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let rows = vec![
            vec![0.1, -1.0 / 3.0],
            vec![6.02214076e23, f64::MIN_POSITIVE],
        ];
        write_csv(&p, &["x", "y"], &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("x,y\n1.0000000000000001e-1,"));
        let cols = read_columns(&p, &[&["x"], &["z", "y"]]).unwrap();
        assert_eq!(cols[0], vec![0.1, 6.02214076e23]);
        assert_eq!(cols[1], vec![-1.0 / 3.0, f64::MIN_POSITIVE]);
    }

    #[test]
    fn read_errors_name_the_problem() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        std::fs::write(&p, "x,y\n1,2\n3,oops\n").unwrap();
        let e = read_columns(&p, &[&["x"], &["y"]]).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let e = read_columns(&p, &[&["w"]]).unwrap_err().to_string();
        assert!(e.contains("missing column 'w'"), "{e}");
        std::fs::write(&p, "").unwrap();
        assert!(read_columns(&p, &[&["x"]]).is_err());
        std::fs::write(&p, "x\n").unwrap();
        assert!(read_columns(&p, &[&["x"]])
            .unwrap_err()
            .to_string()
            .contains("no data"));
    }

    #[test]
    fn report_renders_in_order() {
        let mut r = Report::new();
        r.num("b", 0.5).text("a", "yes");
        assert_eq!(r.render(), "b = 5.0000000000000000e-1\na = yes\n");
        assert_eq!(r.get("a"), Some("yes"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("r.txt");
        r.write(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), r.render());
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
