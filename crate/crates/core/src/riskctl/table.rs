//! Columnar loss export: `config_id,sample_id,loss_kind,value`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mc,
    Md,
    Fa,
    Pa,
}

impl LossKind {
    /// `[A, B]` for a loss of this kind with at most `k_max` sources.
    pub fn bounds(self, k_max: usize) -> (f64, f64) {
        match self {
            LossKind::Mc | LossKind::Md | LossKind::Fa => (0.0, k_max as f64),
            LossKind::Pa => (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub config_id: usize,
    pub sample_id: usize,
    pub loss_kind: LossKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossTable {
    pub rows: Vec<LossRow>,
}

impl LossTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parse a table and check every value against the bounds for `k_max`.
    pub fn read_csv<R: Read>(input: R, k_max: usize) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in rd.deserialize::<LossRow>() {
            let row = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let (a, b) = row.loss_kind.bounds(k_max);
            if !(row.value >= a && row.value <= b) {
                return Err(Error::Parse(format!(
                    "{:?} loss {} of sample {} outside [{a}, {b}]",
                    row.loss_kind, row.value, row.sample_id
                )));
            }
            rows.push(row);
        }
        Ok(LossTable { rows })
    }

    /// Values of one kind and configuration, in sample-id order.
    pub fn series(&self, config_id: usize, kind: LossKind) -> Vec<f64> {
        let mut v: Vec<(usize, f64)> = self
            .rows
            .iter()
            .filter(|r| r.config_id == config_id && r.loss_kind == kind)
            .map(|r| (r.sample_id, r.value))
            .collect();
        v.sort_by_key(|x| x.0);
        v.into_iter().map(|x| x.1).collect()
    }
}
