use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::dataset::{DemandMeter, FeederDataset, MeterAttributes, MeterId, NetMeter, PvMeter, Truth};
use super::series::{PowerSeries, SeriesRole};
use crate::error::{Error, Result};

/// Kind of reading in the meter CSV.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterKind {
    NativeDemand,
    PvGeneration,
    NetDemand,
}

impl MeterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeterKind::NativeDemand => "native_demand",
            MeterKind::PvGeneration => "pv_generation",
            MeterKind::NetDemand => "net_demand",
        }
    }
}

impl FromStr for MeterKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "native_demand" => Ok(MeterKind::NativeDemand),
            "pv_generation" => Ok(MeterKind::PvGeneration),
            "net_demand" => Ok(MeterKind::NetDemand),
            other => Err(format!("unknown kind `{other}`")),
        }
    }
}

/// One row of the meter CSV. Generation is positive here.
#[derive(Clone, Debug, PartialEq)]
pub struct MeterRecord {
    pub timestamp: DateTime<Utc>,
    pub meter_id: MeterId,
    pub kind: MeterKind,
    pub value: f64,
    pub line: usize,
}

/// Names of the four columns in the meter CSV header.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub timestamp: String,
    pub meter: String,
    pub kind: String,
    pub value: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            meter: "meter_id".into(),
            kind: "kind".into(),
            value: "kw".into(),
        }
    }
}

fn parse_timestamp(raw: &str) -> std::result::Result<DateTime<Utc>, String> {
    let raw = raw.trim();
    let ts = DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .or_else(|_| {
            NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S")
                .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S"))
                .map(|n| n.and_utc())
        })
        .map_err(|_| format!("invalid timestamp `{raw}`"))?;
    if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
        return Err(format!("timestamp `{raw}` is not hour-aligned"));
    }
    Ok(ts)
}

/// Parses and validates every row; rows come back in file order.
pub fn read_meter_records<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<Vec<MeterRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing column `{name}`"),
            })
    };
    let (ts_col, id_col, kind_col, value_col) = (
        column(&mapping.timestamp)?,
        column(&mapping.meter)?,
        column(&mapping.kind)?,
        column(&mapping.value)?,
    );

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| -> Result<&str> {
            row.get(i).ok_or_else(|| Error::Parse {
                line,
                message: "row has too few fields".into(),
            })
        };
        let bad = |message: String| Error::Parse { line, message };

        let timestamp = parse_timestamp(field(ts_col)?).map_err(bad)?;
        let meter_id = field(id_col)?.to_string();
        if meter_id.is_empty() {
            return Err(bad("empty meter id".into()));
        }
        let kind: MeterKind = field(kind_col)?.parse().map_err(bad)?;
        let raw = field(value_col)?;
        let value: f64 = raw
            .parse()
            .map_err(|_| bad(format!("invalid value `{raw}`")))?;
        if !value.is_finite() {
            return Err(bad(format!("value `{raw}` is not finite")));
        }
        if kind == MeterKind::PvGeneration && value < 0.0 {
            return Err(bad(format!("pv_generation must be non-negative, found {value}")));
        }
        out.push(MeterRecord {
            timestamp,
            meter_id,
            kind,
            value,
            line,
        });
    }
    Ok(out)
}

/// Reads a meter CSV into a dataset. Meters are classified by the kinds
/// they report: demand only, demand + generation, or net (optionally with
/// demand + generation as ground truth).
pub fn ingest_csv(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<FeederDataset> {
    let file = BufReader::new(File::open(path)?);
    ingest_reader(file, mapping)
}

pub fn ingest_reader<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<FeederDataset> {
    let records = read_meter_records(reader, mapping)?;
    dataset_from_records(records)
}

pub(crate) fn dataset_from_records(records: Vec<MeterRecord>) -> Result<FeederDataset> {
    if records.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "file has no data rows".into(),
        });
    }
    let mut series: BTreeMap<MeterId, BTreeMap<MeterKind, Vec<(DateTime<Utc>, f64)>>> =
        BTreeMap::new();
    for rec in records {
        let rows = series
            .entry(rec.meter_id.clone())
            .or_default()
            .entry(rec.kind)
            .or_default();
        if let Some(&(prev, _)) = rows.last() {
            if rec.timestamp == prev {
                return Err(Error::Duplicate {
                    meter: rec.meter_id,
                    timestamp: rec.timestamp,
                });
            }
            if rec.timestamp < prev {
                return Err(Error::Parse {
                    line: rec.line,
                    message: format!(
                        "timestamps for meter {} ({}) are not increasing",
                        rec.meter_id,
                        rec.kind.as_str()
                    ),
                });
            }
        }
        rows.push((rec.timestamp, rec.value));
    }

    let first = series
        .values()
        .flat_map(|k| k.values())
        .filter_map(|rows| rows.first().map(|r| r.0))
        .min()
        .expect("non-empty");
    let last = series
        .values()
        .flat_map(|k| k.values())
        .filter_map(|rows| rows.last().map(|r| r.0))
        .max()
        .expect("non-empty");
    let len = (last - first).num_hours() as usize + 1;

    let mut dense: BTreeMap<MeterId, BTreeMap<MeterKind, Vec<f64>>> = BTreeMap::new();
    for (id, kinds) in series {
        for (kind, rows) in kinds {
            if rows.len() != len {
                let mut present = rows.iter().map(|r| r.0).peekable();
                let mut missing = Vec::new();
                for i in 0..len {
                    let t = first + Duration::hours(i as i64);
                    if present.peek() == Some(&t) {
                        present.next();
                    } else {
                        missing.push(t);
                    }
                }
                return Err(Error::Gap {
                    meter: id,
                    kind: kind.as_str().into(),
                    missing,
                });
            }
            dense
                .entry(id.clone())
                .or_default()
                .insert(kind, rows.into_iter().map(|r| r.1).collect());
        }
    }

    let mut observed_demand = Vec::new();
    let mut observed_pairs = Vec::new();
    let mut net_only = Vec::new();
    for (id, mut kinds) in dense {
        let demand = kinds.remove(&MeterKind::NativeDemand);
        let generation = kinds.remove(&MeterKind::PvGeneration);
        let net = kinds.remove(&MeterKind::NetDemand);
        let injection = |g: Vec<f64>| -> Result<PowerSeries> {
            PowerSeries::new(
                first,
                SeriesRole::SolarInjection,
                g.into_iter().map(|v| 0.0 - v).collect(),
            )
        };
        match (net, demand, generation) {
            (None, Some(d), None) => observed_demand.push(DemandMeter {
                demand: PowerSeries::new(first, SeriesRole::NativeDemand, d)?,
                id,
            }),
            (None, Some(d), Some(g)) => observed_pairs.push(PvMeter {
                demand: PowerSeries::new(first, SeriesRole::NativeDemand, d)?,
                injection: injection(g)?,
                id,
            }),
            (Some(n), None, None) => net_only.push(NetMeter {
                net: PowerSeries::new(first, SeriesRole::NetDemand, n)?,
                truth: None,
                id,
            }),
            (Some(n), Some(d), Some(g)) => net_only.push(NetMeter {
                net: PowerSeries::new(first, SeriesRole::NetDemand, n)?,
                truth: Some(Truth {
                    demand: PowerSeries::new(first, SeriesRole::NativeDemand, d)?,
                    injection: injection(g)?,
                }),
                id,
            }),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "meter {id} reports an unsupported combination of kinds"
                )))
            }
        }
    }

    FeederDataset::new(
        observed_demand,
        observed_pairs,
        net_only,
        BTreeMap::new(),
        BTreeMap::new(),
    )
}

/// Reads a grouping file: a JSON object mapping group name to meter ids.
pub fn read_groups(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<MeterId>>> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

pub fn read_attributes(path: impl AsRef<Path>) -> Result<BTreeMap<MeterId, MeterAttributes>> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

fn format_ts(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Writes every series of `dataset` in the meter CSV format, generation
/// positive. Values use shortest round-trip formatting, so re-ingesting the
/// file reproduces the dataset bit for bit.
pub fn write_meter_csv<W: Write>(dataset: &FeederDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "meter_id", "kind", "kw"])?;
    let stamps: Vec<String> = (0..dataset.len())
        .map(|i| format_ts(dataset.timestamp(i)))
        .collect();

    let mut emit = |id: &str, kind: MeterKind, values: &mut dyn Iterator<Item = f64>| -> Result<()> {
        for (ts, v) in stamps.iter().zip(values) {
            w.write_record([ts.as_str(), id, kind.as_str(), &v.to_string()])?;
        }
        Ok(())
    };

    for m in dataset.observed_demand() {
        emit(&m.id, MeterKind::NativeDemand, &mut m.demand.values().iter().copied())?;
    }
    for m in dataset.observed_pairs() {
        emit(&m.id, MeterKind::NativeDemand, &mut m.demand.values().iter().copied())?;
        emit(
            &m.id,
            MeterKind::PvGeneration,
            &mut m.injection.values().iter().map(|v| 0.0 - v),
        )?;
    }
    for m in dataset.net_only() {
        emit(&m.id, MeterKind::NetDemand, &mut m.net.values().iter().copied())?;
        if let Some(t) = &m.truth {
            emit(&m.id, MeterKind::NativeDemand, &mut t.demand.values().iter().copied())?;
            emit(
                &m.id,
                MeterKind::PvGeneration,
                &mut t.injection.values().iter().map(|v| 0.0 - v),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}
