//! Binary field and record formats, CSV sidecars and PGM export.
//!
//! Field files (`PATF`): 32-byte header `b"PATF"`, `u32 nx`, `u32 ny`,
//! `u32` reserved (zero), `f64 dx`, `f64 dy`, then `nx·ny` little-endian
//! `f64` values in row-major order (`i + nx·j`). The grid origin is not
//! stored; loaded fields are centred on the origin.
//!
//! Record files (`PATR`): 20-byte header `b"PATR"`, `u32 n_nodes`,
//! `u32 n_samples`, `f64 dt`, then step-major `f64` samples. Node positions
//! live in a CSV sidecar `index,x,y,weight,lambda`.

use crate::error::{PatError, Result};
use crate::media::{Grid2D, ScalarField2D};
use crate::record::{ObservationRecord, RecordNode};
use std::fs;
use std::path::{Path, PathBuf};

pub const PATF_MAGIC: &[u8; 4] = b"PATF";
pub const PATR_MAGIC: &[u8; 4] = b"PATR";
pub const PATF_HEADER: usize = 32;
pub const PATR_HEADER: usize = 20;

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(b[off..off + 4].try_into().unwrap())
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().unwrap())
}

fn payload(bytes: &[u8], header: usize, count: usize) -> Result<Vec<f64>> {
    let need = count
        .checked_mul(8)
        .and_then(|n| n.checked_add(header))
        .ok_or_else(|| PatError::Format("declared size overflows".into()))?;
    if bytes.len() != need {
        return Err(PatError::Format(format!("expected {need} bytes, found {}", bytes.len())));
    }
    Ok(bytes[header..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn encode_patf(f: &ScalarField2D) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(PATF_HEADER + 8 * g.len());
    out.extend_from_slice(PATF_MAGIC);
    out.extend_from_slice(&(g.nx as u32).to_le_bytes());
    out.extend_from_slice(&(g.ny as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&g.dx.to_le_bytes());
    out.extend_from_slice(&g.dy.to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_patf(bytes: &[u8]) -> Result<ScalarField2D> {
    if bytes.len() < PATF_HEADER || &bytes[..4] != PATF_MAGIC {
        return Err(PatError::Format("not a PATF field file".into()));
    }
    let nx = u32_at(bytes, 4) as usize;
    let ny = u32_at(bytes, 8) as usize;
    let dx = f64_at(bytes, 16);
    let dy = f64_at(bytes, 24);
    let count = nx.checked_mul(ny).ok_or_else(|| PatError::Format("grid size overflows".into()))?;
    let values = payload(bytes, PATF_HEADER, count)?;
    if !(dx.is_finite() && dy.is_finite()) {
        return Err(PatError::Format("non-finite spacing".into()));
    }
    let grid = Grid2D::new(nx, ny, dx, dy, -0.5 * (nx as f64 - 1.0) * dx, -0.5 * (ny as f64 - 1.0) * dy)
        .map_err(|e| PatError::Format(e.to_string()))?;
    ScalarField2D::from_values(grid, values).map_err(|e| PatError::Format(e.to_string()))
}

pub fn write_field(path: &Path, f: &ScalarField2D) -> Result<()> {
    fs::write(path, encode_patf(f))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ScalarField2D> {
    decode_patf(&fs::read(path)?)
}

/// Raw contents of a PATR file before node positions are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub n_nodes: usize,
    pub n_samples: usize,
    pub dt: f64,
    pub samples: Vec<f64>,
}

pub fn encode_patr(r: &ObservationRecord) -> Vec<u8> {
    let s = r.raw_samples();
    let mut out = Vec::with_capacity(PATR_HEADER + 8 * s.len());
    out.extend_from_slice(PATR_MAGIC);
    out.extend_from_slice(&(r.n_nodes() as u32).to_le_bytes());
    out.extend_from_slice(&(r.n_samples() as u32).to_le_bytes());
    out.extend_from_slice(&r.dt.to_le_bytes());
    for v in s {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_patr(bytes: &[u8]) -> Result<RawRecord> {
    if bytes.len() < PATR_HEADER || &bytes[..4] != PATR_MAGIC {
        return Err(PatError::Format("not a PATR record file".into()));
    }
    let n_nodes = u32_at(bytes, 4) as usize;
    let n_samples = u32_at(bytes, 8) as usize;
    let dt = f64_at(bytes, 12);
    if n_nodes == 0 {
        return Err(PatError::Format("record declares no nodes".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(PatError::Format(format!("invalid time step {dt}")));
    }
    let count = n_nodes
        .checked_mul(n_samples)
        .ok_or_else(|| PatError::Format("record size overflows".into()))?;
    let samples = payload(bytes, PATR_HEADER, count)?;
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(PatError::Format("record contains non-finite samples".into()));
    }
    Ok(RawRecord { n_nodes, n_samples, dt, samples })
}

pub fn encode_nodes_csv(nodes: &[RecordNode]) -> String {
    let mut s = String::from("index,x,y,weight,lambda\n");
    for (k, n) in nodes.iter().enumerate() {
        s.push_str(&format!("{k},{},{},{},{}\n", n.x, n.y, n.weight, n.lambda));
    }
    s
}

pub fn decode_nodes_csv(text: &str) -> Result<Vec<RecordNode>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "index,x,y,weight,lambda" => {}
        _ => return Err(PatError::Format("node sidecar lacks the expected header".into())),
    }
    let mut nodes = Vec::new();
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(PatError::Format(format!("sidecar row {k}: expected 5 columns")));
        }
        if cols[0].parse::<usize>().ok() != Some(k) {
            return Err(PatError::Format(format!("sidecar row {k}: index out of sequence")));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| PatError::Format(format!("sidecar row {k}: bad number {s:?}")))
        };
        let node = RecordNode { x: num(cols[1])?, y: num(cols[2])?, weight: num(cols[3])?, lambda: num(cols[4])? };
        if node.weight < 0.0 || node.lambda < 0.0 {
            return Err(PatError::Format(format!("sidecar row {k}: negative weight or λ")));
        }
        nodes.push(node);
    }
    Ok(nodes)
}

/// Joins a decoded PATR payload with its node list.
pub fn assemble_record(raw: RawRecord, nodes: Vec<RecordNode>) -> Result<ObservationRecord> {
    if raw.n_nodes != nodes.len() {
        return Err(PatError::Format(format!(
            "record has {} nodes but the sidecar lists {}",
            raw.n_nodes,
            nodes.len()
        )));
    }
    ObservationRecord::from_samples(nodes, raw.dt, raw.samples)
}

/// Sidecar path next to a record file: `data.patr` → `data.nodes.csv`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("nodes.csv")
}

pub fn write_record(path: &Path, r: &ObservationRecord) -> Result<()> {
    fs::write(path, encode_patr(r))?;
    fs::write(sidecar_path(path), encode_nodes_csv(&r.nodes))?;
    Ok(())
}

pub fn read_record(path: &Path) -> Result<ObservationRecord> {
    let raw = decode_patr(&fs::read(path)?)?;
    let nodes = decode_nodes_csv(&fs::read_to_string(sidecar_path(path))?)?;
    assemble_record(raw, nodes)
}

/// Binary 8-bit PGM; values are clamped to `[lo, hi]` and the top image row
/// is the largest `y`.
pub fn encode_pgm(f: &ScalarField2D, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !(hi > lo) {
        return Err(PatError::Config(format!("empty value window [{lo}, {hi}]")));
    }
    let g = f.grid();
    let mut out = format!("P5\n{} {}\n255\n", g.nx, g.ny).into_bytes();
    for j in (0..g.ny).rev() {
        for i in 0..g.nx {
            let t = ((f.at(i, j) - lo) / (hi - lo)).clamp(0.0, 1.0);
            out.push((t * 255.0).round() as u8);
        }
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, f: &ScalarField2D, lo: f64, hi: f64) -> Result<()> {
    fs::write(path, encode_pgm(f, lo, hi)?)?;
    Ok(())
}
