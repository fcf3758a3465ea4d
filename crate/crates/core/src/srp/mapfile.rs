//! Binary exchange format for sequences of likelihood maps.
//!
//! Layout (little endian):
//!
//! ```text
//! file header   magic "SLMX" | version u16 = 1 | flags u16 = 0 | n_maps u32 | reserved u32 = 0
//! per map       n_el u32 | n_az u32 | el_start f64 | el_step f64 | az_start f64 | az_step f64
//!               iteration u32 | peak_index u32 | peak_value f32 | scale u32 (0 raw, 1 normalized, 2 shifted)
//!               n_el * n_az values, f32, row-major (elevation rows)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::srp::{DoaGrid, LikelihoodMap, MapScale};

const MAGIC: &[u8; 4] = b"SLMX";
const VERSION: u16 = 1;
const FILE_HEADER: usize = 16;
const RECORD_HEADER: usize = 56;

/// One map of a detection sequence. `iteration` counts from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MapRecord {
    pub grid: DoaGrid,
    pub iteration: u32,
    pub peak_index: u32,
    pub peak_value: f32,
    pub map: LikelihoodMap,
}

pub fn encode_maps(records: &[MapRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for r in records {
        let g = &r.grid;
        out.extend_from_slice(&(g.n_el() as u32).to_le_bytes());
        out.extend_from_slice(&(g.n_az() as u32).to_le_bytes());
        for v in [g.el_start_deg(), g.el_step_deg(), g.az_start_deg(), g.az_step_deg()] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&r.iteration.to_le_bytes());
        out.extend_from_slice(&r.peak_index.to_le_bytes());
        out.extend_from_slice(&r.peak_value.to_le_bytes());
        let scale: u32 = match r.map.scale() {
            MapScale::Raw => 0,
            MapScale::Normalized => 1,
            MapScale::Shifted => 2,
        };
        out.extend_from_slice(&scale.to_le_bytes());
        for &v in r.map.values() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| ingest("truncated map file"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

fn ingest(msg: &str) -> Error {
    Error::Ingest(msg.to_string())
}

pub fn decode_maps(bytes: &[u8]) -> Result<Vec<MapRecord>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(ingest("bad magic"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Ingest(format!("unsupported map file version {version}")));
    }
    if r.u16()? != 0 {
        return Err(ingest("unknown flags"));
    }
    let n_maps = r.u32()? as usize;
    if r.u32()? != 0 {
        return Err(ingest("reserved field not zero"));
    }
    if n_maps > r.remaining() / RECORD_HEADER {
        return Err(ingest("map count exceeds file size"));
    }
    debug_assert_eq!(r.pos, FILE_HEADER);
    let mut out = Vec::with_capacity(n_maps);
    for _ in 0..n_maps {
        let n_el = r.u32()? as usize;
        let n_az = r.u32()? as usize;
        let (es, ed, as_, ad) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        let grid = DoaGrid::new(es, ed, n_el, as_, ad, n_az).map_err(|e| Error::Ingest(e.to_string()))?;
        let iteration = r.u32()?;
        let peak_index = r.u32()?;
        let peak_value = r.f32()?;
        let scale = match r.u32()? {
            0 => MapScale::Raw,
            1 => MapScale::Normalized,
            2 => MapScale::Shifted,
            _ => return Err(ingest("unknown map scale")),
        };
        if peak_index as usize >= grid.len() {
            return Err(ingest("peak index outside grid"));
        }
        if !peak_value.is_finite() {
            return Err(ingest("non-finite peak value"));
        }
        let raw = r.take(grid.len().checked_mul(4).ok_or_else(|| ingest("grid too large"))?)?;
        let values: Vec<f64> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        let map = LikelihoodMap::new(values, n_el, n_az, scale).map_err(|e| Error::Ingest(e.to_string()))?;
        out.push(MapRecord { grid, iteration, peak_index, peak_value, map });
    }
    if r.remaining() != 0 {
        return Err(ingest("trailing bytes after last map"));
    }
    Ok(out)
}

pub fn export_map_sequence(path: &Path, records: &[MapRecord]) -> Result<()> {
    std::fs::write(path, encode_maps(records))?;
    Ok(())
}

/// Read a map sequence and check it against the analysis grid. Maps must
/// appear in iteration order 1, 2, ...
pub fn import_map_sequence(path: &Path, expected: &DoaGrid) -> Result<Vec<MapRecord>> {
    let records = decode_maps(&std::fs::read(path)?)?;
    for (i, r) in records.iter().enumerate() {
        if !r.grid.matches(expected) {
            return Err(Error::GridMismatch(format!(
                "map {} uses a {}x{} grid, analysis grid is {}x{}",
                i + 1,
                r.grid.n_el(),
                r.grid.n_az(),
                expected.n_el(),
                expected.n_az()
            )));
        }
        if r.iteration as usize != i + 1 {
            return Err(Error::Ingest(format!("map {} has iteration index {}", i + 1, r.iteration)));
        }
    }
    Ok(records)
}
