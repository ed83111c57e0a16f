//! CSV tables with a units comment line, and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt_f(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.is_finite() {
        format!("{v:.11e}")
    } else {
        format!("{v}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f(*v),
            Cell::I(v) => v.to_string(),
            Cell::B(v) => u8::from(*v).to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub struct Table {
    pub name: String,
    units: String,
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, units: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            units: units.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

/// Collects written tables for the manifest.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<(String, usize)>,
}

impl OutDir {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, t: &Table) -> anyhow::Result<()> {
        let file = format!("{}.csv", t.name);
        let path = self.dir.join(&file);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(w, "# units: {}", t.units)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&t.header)?;
        for row in &t.rows {
            csv.write_record(row.iter().map(Cell::render))?;
        }
        csv.flush()?;
        self.written.push((file, t.len()));
        Ok(())
    }

    /// Writes `manifest.csv` listing every table written so far.
    pub fn finish(mut self) -> anyhow::Result<Vec<(String, usize)>> {
        let mut m = Table::new("manifest", "file name, data rows excluding header and units line", &["file", "rows"]);
        for (f, n) in &self.written {
            m.push(vec![f.as_str().into(), (*n).into()]);
        }
        let listed = self.written.clone();
        self.write(&m)?;
        Ok(listed)
    }
}

/// Reads a `t_start, u` control table; `#` lines are comments.
pub fn read_control(path: &Path) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening control file {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("control file {} lacks column {name:?}", path.display()))
    };
    let (it, iu) = (col("t_start")?, col("u")?);
    let mut starts = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> anyhow::Result<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>().with_context(|| format!("control file row {}: bad number {s:?}", line + 1))
        };
        starts.push(parse(it)?);
        values.push(parse(iu)?);
    }
    if starts.is_empty() {
        anyhow::bail!("control file {} has no rows", path.display());
    }
    Ok((starts, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_twelve_significant_digits() {
        assert_eq!(fmt_f(1.0), "1.00000000000e0");
        assert_eq!(fmt_f(-0.0123456789012345), "-1.23456789012e-2");
        assert_eq!(fmt_f(0.0), "0");
    }

    #[test]
    fn tables_have_units_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(dir.path()).unwrap();
        let mut t = Table::new("demo", "t in s", &["t", "ok"]);
        t.push(vec![1.5.into(), true.into()]);
        out.write(&t).unwrap();
        let listed = out.finish().unwrap();
        assert_eq!(listed, vec![("demo.csv".to_string(), 1)]);
        let text = std::fs::read_to_string(dir.path().join("demo.csv")).unwrap();
        assert_eq!(text, "# units: t in s\nt,ok\n1.50000000000e0,1\n");
        let manifest = std::fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
        assert!(manifest.contains("demo.csv,1"));
    }

    #[test]
    fn control_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        std::fs::write(&p, "# volts\nt_start, u\n0, 1.0\n100, -0.5\n").unwrap();
        let (t, u) = read_control(&p).unwrap();
        assert_eq!(t, vec![0.0, 100.0]);
        assert_eq!(u, vec![1.0, -0.5]);
        std::fs::write(&p, "t_start,v\n0,1\n").unwrap();
        assert!(read_control(&p).is_err());
    }
}
