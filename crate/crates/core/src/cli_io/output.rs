//! Persistence: metadata headers, CSV time series, binary field snapshots.
//! Every file is written to a temporary sibling and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Space, SpectralGrid};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"RH2D";
pub const SNAPSHOT_VERSION: u32 = 1;
/// Version of the output layout recorded in every metadata header.
pub const FORMAT_VERSION: &str = "1";

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Ordered `# key=value` lines placed at the top of every text output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            // values stay on one line
            let v = v.replace('\n', " ");
            writeln!(s, "# {k}={v}").unwrap();
        }
        s
    }

    /// Reads the leading `# key=value` block of a text file's contents.
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .map_while(|l| l.strip_prefix("# "))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Metadata { entries }
    }
}

/// Writes a text file made of the metadata header followed by `body`.
pub fn write_text(path: &Path, meta: &Metadata, body: &str) -> Result<()> {
    let mut text = meta.render();
    text.push_str(body);
    write_atomic(path, text.as_bytes())
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub fn timeseries_header(probes: usize) -> String {
    let mut cols: Vec<String> = [
        "t",
        "mass",
        "energy_paper",
        "energy_cons",
        "sup",
        "wk1",
        "wk2",
        "wk3",
        "wk4",
        "hn",
        "E1",
        "E2",
        "S",
        "ratio_E1",
        "ratio_E2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((0..probes).map(|i| format!("B_probe_{i}")));
    cols.join(",")
}

pub fn timeseries_row(r: &DiagnosticsRecord) -> String {
    let mut vals = vec![
        r.t,
        r.mass,
        r.energy_paper,
        r.energy_cons,
        r.sup,
        r.wk[0],
        r.wk[1],
        r.wk[2],
        r.wk[3],
        r.hn,
        r.e1,
        r.e2,
        r.s_norm,
        r.ratio_e1,
        r.ratio_e2,
    ];
    vals.extend(&r.b_probes);
    vals.iter()
        .map(|v| fmt_f64(*v))
        .collect::<Vec<_>>()
        .join(",")
}

/// Complete CSV document for a sequence of records.
pub fn timeseries_csv(records: &[DiagnosticsRecord], probes: usize) -> String {
    let mut s = timeseries_header(probes);
    s.push('\n');
    for r in records {
        s.push_str(&timeseries_row(r));
        s.push('\n');
    }
    s
}

/// Splits a CSV document (after its metadata header) into column names and numeric rows.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidParameter("empty CSV".into()))?;
    let cols: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row = l
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidParameter(format!("CSV row {}: {e}", i + 1)))?;
        if row.len() != cols.len() {
            return Err(Error::InvalidParameter(format!(
                "CSV row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                cols.len()
            )));
        }
        rows.push(row);
    }
    Ok((cols, rows))
}

/// Encodes a field in the little-endian snapshot layout.
pub fn encode_snapshot(u: &ComplexField, t: f64) -> Vec<u8> {
    let grid = u.grid();
    let mut buf = Vec::with_capacity(29 + 16 * grid.len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.half_width().to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    buf.push(match u.space() {
        Space::Physical => 0,
        Space::Frequency => 1,
    });
    for v in u.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    buf
}

/// Decodes a snapshot, returning the field and its time.
pub fn decode_snapshot(bytes: &[u8]) -> Result<(ComplexField, f64)> {
    let bad = |m: &str| Error::Snapshot(m.to_string());
    if bytes.len() < 29 {
        return Err(bad("truncated header"));
    }
    if &bytes[0..4] != SNAPSHOT_MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let n = u32_at(8) as usize;
    let l = f64_at(12);
    let t = f64_at(20);
    let space = match bytes[28] {
        0 => Space::Physical,
        1 => Space::Frequency,
        other => return Err(Error::Snapshot(format!("bad space tag {other}"))),
    };
    let grid = SpectralGrid::new(n, l).map_err(|e| Error::Snapshot(e.to_string()))?;
    let payload = &bytes[29..];
    if payload.len() != 16 * n * n {
        return Err(Error::Snapshot(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            16 * n * n
        )));
    }
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Ok((ComplexField::new(&grid, values, space), t))
}

pub fn write_snapshot(path: &Path, u: &ComplexField, t: f64) -> Result<()> {
    write_atomic(path, &encode_snapshot(u, t))
}

pub fn read_snapshot(path: &Path) -> Result<(ComplexField, f64)> {
    decode_snapshot(&fs::read(path)?)
}
