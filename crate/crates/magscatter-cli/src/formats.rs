//! On-disk formats: binary fields, CSV tables, and atomic writes.
//!
//! Binary field layout (all little-endian):
//!   bytes 0..16   magic "MAGSCATTER_FLD01"
//!   bytes 16..20  u32 dim (2 or 3)
//!   bytes 20..24  u32 points_per_axis
//!   bytes 24..32  f64 half_width
//!   bytes 32..36  u32 complex flag (0 = real, 1 = complex)
//!   bytes 36..    f64 samples, x-fastest; complex data interleaved re, im
//!
//! CSV: ',' separator, '.' decimal, one header row.

use magscatter::fields::{make_grid, Grid};
use magscatter::Complex;
use std::io;
use std::path::Path;

pub const MAGIC: &[u8; 16] = b"MAGSCATTER_FLD01";

/// Write via a temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn field_header(grid: &Grid, complex: bool) -> Vec<u8> {
    let mut buf = Vec::with_capacity(36);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(grid.dim as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.points_per_axis as u32).to_le_bytes());
    buf.extend_from_slice(&grid.half_width.to_le_bytes());
    buf.extend_from_slice(&(complex as u32).to_le_bytes());
    buf
}

pub fn write_field_complex(path: &Path, grid: &Grid, data: &[Complex]) -> io::Result<()> {
    assert_eq!(data.len(), grid.len());
    let mut buf = field_header(grid, true);
    for v in data {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    atomic_write(path, &buf)
}

pub fn write_field_real(path: &Path, grid: &Grid, data: &[f64]) -> io::Result<()> {
    assert_eq!(data.len(), grid.len());
    let mut buf = field_header(grid, false);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    atomic_write(path, &buf)
}

/// Returns (grid, samples, complex_flag); real fields are widened to complex
/// with zero imaginary part.
pub fn read_field(path: &Path) -> Result<(Grid, Vec<Complex>, bool), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if bytes.len() < 36 || &bytes[..16] != MAGIC {
        return Err(format!("{}: not a field file (bad magic)", path.display()));
    }
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    let m = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
    let half_width = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let complex = u32::from_le_bytes(bytes[32..36].try_into().unwrap()) != 0;
    let grid = make_grid(dim, half_width, m).map_err(|e| e.to_string())?;
    let n = grid.len();
    let expect = 36 + n * 8 * if complex { 2 } else { 1 };
    if bytes.len() != expect {
        return Err(format!("{}: payload is {} bytes, expected {expect}", path.display(), bytes.len()));
    }
    let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    let data = (0..n)
        .map(|i| {
            if complex {
                Complex::new(f64_at(36 + 16 * i), f64_at(36 + 16 * i + 8))
            } else {
                Complex::new(f64_at(36 + 8 * i), 0.0)
            }
        })
        .collect();
    Ok((grid, data, complex))
}

pub fn format_float(v: f64) -> String {
    format!("{v:.15e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| format!("{}: empty CSV", path.display()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}
