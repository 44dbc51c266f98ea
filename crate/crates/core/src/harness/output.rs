//! Result rows and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measured point: a metric at one SDR for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub sdr_db: f64,
    pub metric: String,
    pub value: f64,
    pub std_error: f64,
    /// `key=value` pairs joined by `;` (method, init, precoder, ...).
    pub meta: String,
    pub config_hash: String,
}

impl ResultRow {
    /// Value of `key` inside `meta`.
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .split(';')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }
}

/// Sorts rows by SDR, then metric, then meta.
pub fn canonical_order(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.sdr_db
            .total_cmp(&b.sdr_db)
            .then_with(|| a.metric.cmp(&b.metric))
            .then_with(|| a.meta.cmp(&b.meta))
    });
}

pub fn write_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(["experiment", "sdr_db", "metric", "value", "std_error", "meta", "config_hash"])
            .map_err(csv_error)?;
    }
    for row in rows {
        if !row.value.is_finite() {
            return Err(Error::Config {
                field: "value".into(),
                reason: format!("non-finite value in row {row:?}"),
            });
        }
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
