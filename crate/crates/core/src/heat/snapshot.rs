//! Binary snapshots: magic, little-endian header length, JSON header, then the values as
//! little-endian `f64`.

use super::{CarnotChart, ChartDescription, HeatError, HeatField};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;

const MAGIC: &[u8; 8] = b"TCDSNAP1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub chart: ChartDescription,
    pub time: f64,
    pub absorbed: f64,
    pub len: usize,
}

pub fn write_snapshot(field: &HeatField, mut w: impl Write) -> Result<(), HeatError> {
    let io = |e: std::io::Error| HeatError::Snapshot(e.to_string());
    let header = SnapshotHeader {
        chart: field.chart.describe(),
        time: field.time,
        absorbed: field.absorbed,
        len: field.values.len(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| HeatError::Snapshot(e.to_string()))?;
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&(json.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    let mut buf = Vec::with_capacity(8 * field.values.len());
    for v in &field.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(io)?;
    w.flush().map_err(io)
}

/// Reads a snapshot and rebuilds its chart.
pub fn read_snapshot(mut r: impl Read) -> Result<HeatField, HeatError> {
    let io = |e: std::io::Error| HeatError::Snapshot(e.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(HeatError::Snapshot("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(io)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json).map_err(io)?;
    let header: SnapshotHeader = serde_json::from_slice(&json).map_err(|e| HeatError::Snapshot(e.to_string()))?;
    let sc = header.chart.structure.to_structure().map_err(|e| HeatError::Snapshot(e.to_string()))?;
    let chart: Arc<CarnotChart> = CarnotChart::new(&sc, header.chart.config.clone())?;
    if chart.len() != header.len {
        return Err(HeatError::Snapshot(format!("header length {} does not match chart {}", header.len, chart.len())));
    }
    let mut bytes = vec![0u8; 8 * header.len];
    r.read_exact(&mut bytes).map_err(io)?;
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(HeatField { chart, values, time: header.time, absorbed: header.absorbed })
}
