//! Domain types and file ingestion for KPI bundles.
//!
//! A bundle on disk is a directory with a `catalog.json` (array of entries
//! carrying id, domain, labels, optional service, data file and sampling
//! interval) plus one CSV per KPI with a `timestamp,value` header. Values are
//! normalized onto a uniform timestamp grid at ingestion; holes in the grid
//! and empty value cells become explicit missing-mask entries.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sampling interval assumed when a catalog entry does not carry one.
pub const DEFAULT_INTERVAL_SECS: u64 = 60;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: timestamp {current} does not increase over {previous}")]
    NonMonotoneTimestamp {
        line: usize,
        previous: i64,
        current: i64,
    },
    #[error("line {line}: timestamp {timestamp} is off the {interval}s grid starting at {start}")]
    OffGridTimestamp {
        line: usize,
        timestamp: i64,
        start: i64,
        interval: u64,
    },
    #[error("series {id}: {reason}")]
    InvalidSeries { id: String, reason: String },
    #[error("catalog: duplicate id {id}")]
    DuplicateId { id: String },
    #[error("catalog schema: {0}")]
    Schema(String),
    #[error("missing file: {path}")]
    MissingFile { path: PathBuf },
    #[error("series {id}: {source}")]
    InSeries {
        id: String,
        #[source]
        source: Box<ModelError>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One KPI: uniformly sampled values on a fixed timestamp grid.
///
/// Missing observations are represented by an explicit mask rather than
/// sentinel numbers; positions with `missing_mask[i] == true` hold an
/// unspecified placeholder and must not be read as data.
#[derive(Debug, Clone)]
pub struct KpiSeries {
    id: String,
    start_time: i64,
    interval: u64,
    values: Vec<f64>,
    missing_mask: Vec<bool>,
}

impl KpiSeries {
    pub fn new(
        id: impl Into<String>,
        start_time: i64,
        interval: u64,
        values: Vec<f64>,
        missing_mask: Vec<bool>,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        if values.is_empty() {
            return Err(ModelError::InvalidSeries {
                id,
                reason: "must hold at least one value".into(),
            });
        }
        if values.len() != missing_mask.len() {
            return Err(ModelError::InvalidSeries {
                id,
                reason: format!(
                    "values ({}) and missing mask ({}) lengths differ",
                    values.len(),
                    missing_mask.len()
                ),
            });
        }
        if interval == 0 {
            return Err(ModelError::InvalidSeries {
                id,
                reason: "interval must be positive".into(),
            });
        }
        for (i, (&v, &missing)) in values.iter().zip(&missing_mask).enumerate() {
            if !missing && !v.is_finite() {
                return Err(ModelError::InvalidSeries {
                    id,
                    reason: format!("non-finite value {v} at index {i}"),
                });
            }
        }
        Ok(Self {
            id,
            start_time,
            interval,
            values,
            missing_mask,
        })
    }

    /// Series with no missing observations.
    pub fn from_values(
        id: impl Into<String>,
        start_time: i64,
        interval: u64,
        values: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let mask = vec![false; values.len()];
        Self::new(id, start_time, interval, values, mask)
    }

    /// Derived series carrying the same identity but new (complete) values.
    pub fn with_values(&self, values: Vec<f64>, interval: u64) -> Result<Self, ModelError> {
        let mask = vec![false; values.len()];
        Self::new(self.id.clone(), self.start_time, interval, values, mask)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn interval(&self) -> u64 {
        self.interval
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing_mask
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_missing(&self) -> bool {
        self.missing_mask.iter().any(|&m| m)
    }
}

impl PartialEq for KpiSeries {
    /// Placeholder values at masked positions do not participate in equality.
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.start_time == other.start_time
            && self.interval == other.interval
            && self.missing_mask == other.missing_mask
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.missing_mask)
                .all(|((a, b), &missing)| missing || a == b)
    }
}

/// Attribute block of one catalog entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KpiAttributes {
    /// Coarse-grained domain, e.g. "grpc" or "node".
    pub domain: String,
    /// Fine-grained labels.
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    /// Owning service, used to partition strong-correlation KPIs.
    #[serde(default)]
    pub service: Option<String>,
}

impl KpiAttributes {
    /// Counter-style KPIs are marked in the catalog; cumulative-vs-gauge
    /// semantics cannot be inferred from the values alone.
    pub fn is_cumulative(&self) -> bool {
        self.labels.get("cumulative").map(String::as_str) == Some("true")
    }
}

/// One row of `catalog.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    #[serde(flatten)]
    pub attrs: KpiAttributes,
    /// Data file path, relative to the bundle directory.
    pub file: String,
    /// Sampling interval in seconds.
    #[serde(default = "default_interval")]
    pub interval: u64,
}

fn default_interval() -> u64 {
    DEFAULT_INTERVAL_SECS
}

/// Ordered set of catalog entries with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiCatalog {
    entries: Vec<CatalogEntry>,
}

impl KpiCatalog {
    pub fn new(entries: Vec<CatalogEntry>) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for entry in &entries {
            if !seen.insert(entry.id.clone()) {
                return Err(ModelError::DuplicateId {
                    id: entry.id.clone(),
                });
            }
            if entry.attrs.domain.is_empty() {
                return Err(ModelError::Schema(format!(
                    "entry {}: domain must be non-empty",
                    entry.id
                )));
            }
            if entry.interval == 0 {
                return Err(ModelError::Schema(format!(
                    "entry {}: interval must be positive",
                    entry.id
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Position of `id` in catalog order.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A catalog plus the series it references, validated to match one-to-one.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiBundle {
    catalog: KpiCatalog,
    series: BTreeMap<String, KpiSeries>,
}

impl KpiBundle {
    pub fn new(catalog: KpiCatalog, series: BTreeMap<String, KpiSeries>) -> Result<Self, ModelError> {
        for id in catalog.ids() {
            if !series.contains_key(id) {
                return Err(ModelError::InvalidSeries {
                    id: id.to_string(),
                    reason: "catalog entry has no series".into(),
                });
            }
        }
        for id in series.keys() {
            if catalog.get(id).is_none() {
                return Err(ModelError::InvalidSeries {
                    id: id.clone(),
                    reason: "series has no catalog entry".into(),
                });
            }
        }
        Ok(Self { catalog, series })
    }

    pub fn catalog(&self) -> &KpiCatalog {
        &self.catalog
    }

    pub fn series(&self, id: &str) -> Option<&KpiSeries> {
        self.series.get(id)
    }

    pub fn series_map(&self) -> &BTreeMap<String, KpiSeries> {
        &self.series
    }

    /// Entries and series in catalog order.
    pub fn iter(&self) -> impl Iterator<Item = (&CatalogEntry, &KpiSeries)> {
        self.catalog
            .entries()
            .iter()
            .map(move |e| (e, &self.series[&e.id]))
    }

    pub fn len(&self) -> usize {
        self.catalog.len()
    }

    pub fn is_empty(&self) -> bool {
        self.catalog.is_empty()
    }
}

/// Parse one KPI CSV (`timestamp,value` header) onto a uniform grid.
///
/// Grid holes and empty value cells become missing-mask entries. Timestamps
/// must be strictly increasing and aligned to `interval`.
pub fn parse_series(csv_text: &str, id: &str, interval: u64) -> Result<KpiSeries, ModelError> {
    if interval == 0 {
        return Err(ModelError::InvalidSeries {
            id: id.to_string(),
            reason: "interval must be positive".into(),
        });
    }
    let mut lines = csv_text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "timestamp,value" => {}
        Some((_, header)) => {
            return Err(ModelError::MalformedRow {
                line: 1,
                reason: format!("expected header `timestamp,value`, got `{}`", header.trim_end()),
            })
        }
        None => {
            return Err(ModelError::InvalidSeries {
                id: id.to_string(),
                reason: "empty file".into(),
            })
        }
    }

    let mut start_time: Option<i64> = None;
    let mut prev_ts: Option<i64> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut mask: Vec<bool> = Vec::new();

    for (idx, raw) in lines {
        let line = idx + 1; // 1-based, counting the header
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let mut fields = row.splitn(3, ',');
        let ts_field = fields.next().unwrap_or("");
        let value_field = fields.next().ok_or_else(|| ModelError::MalformedRow {
            line,
            reason: "expected two comma-separated fields".into(),
        })?;
        if fields.next().is_some() {
            return Err(ModelError::MalformedRow {
                line,
                reason: "expected exactly two fields".into(),
            });
        }
        let ts: i64 = ts_field.trim().parse().map_err(|e| ModelError::MalformedRow {
            line,
            reason: format!("bad timestamp `{ts_field}`: {e}"),
        })?;
        if let Some(prev) = prev_ts {
            if ts <= prev {
                return Err(ModelError::NonMonotoneTimestamp {
                    line,
                    previous: prev,
                    current: ts,
                });
            }
        }
        let start = *start_time.get_or_insert(ts);
        let offset = ts - start;
        if offset % interval as i64 != 0 {
            return Err(ModelError::OffGridTimestamp {
                line,
                timestamp: ts,
                start,
                interval,
            });
        }
        let index = (offset / interval as i64) as usize;
        // Back-fill grid holes since the previous row.
        while values.len() < index {
            values.push(f64::NAN);
            mask.push(true);
        }
        let trimmed = value_field.trim();
        if trimmed.is_empty() {
            values.push(f64::NAN);
            mask.push(true);
        } else {
            let v: f64 = trimmed.parse().map_err(|e| ModelError::MalformedRow {
                line,
                reason: format!("bad value `{trimmed}`: {e}"),
            })?;
            if !v.is_finite() {
                return Err(ModelError::MalformedRow {
                    line,
                    reason: format!("non-finite value `{trimmed}`"),
                });
            }
            values.push(v);
            mask.push(false);
        }
        prev_ts = Some(ts);
    }

    let start = start_time.ok_or_else(|| ModelError::InvalidSeries {
        id: id.to_string(),
        reason: "no data rows".into(),
    })?;
    KpiSeries::new(id, start, interval, values, mask)
}

fn read_to_string(path: &Path) -> Result<String, ModelError> {
    if !path.exists() {
        return Err(ModelError::MissingFile {
            path: path.to_path_buf(),
        });
    }
    fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load a bundle directory (`catalog.json` plus referenced CSVs).
pub fn load_bundle(dir: &Path) -> Result<KpiBundle, ModelError> {
    let catalog_path = dir.join("catalog.json");
    let text = read_to_string(&catalog_path)?;
    let entries: Vec<CatalogEntry> =
        serde_json::from_str(&text).map_err(|e| ModelError::Schema(e.to_string()))?;
    let catalog = KpiCatalog::new(entries)?;

    let mut series = BTreeMap::new();
    for entry in catalog.entries() {
        let path = dir.join(&entry.file);
        let csv = read_to_string(&path)?;
        let parsed = parse_series(&csv, &entry.id, entry.interval).map_err(|e| {
            ModelError::InSeries {
                id: entry.id.clone(),
                source: Box::new(e),
            }
        })?;
        series.insert(entry.id.clone(), parsed);
    }
    KpiBundle::new(catalog, series)
}

/// Write a bundle directory; `load_bundle` on the result reproduces the input.
pub fn save_bundle(bundle: &KpiBundle, dir: &Path) -> Result<(), ModelError> {
    fs::create_dir_all(dir).map_err(|source| ModelError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let catalog_path = dir.join("catalog.json");
    let mut json = serde_json::to_string_pretty(bundle.catalog.entries())
        .map_err(|e| ModelError::Schema(e.to_string()))?;
    json.push('\n');
    fs::write(&catalog_path, json).map_err(|source| ModelError::Io {
        path: catalog_path.clone(),
        source,
    })?;

    for (entry, series) in bundle.iter() {
        let path = dir.join(&entry.file);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| ModelError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        let mut csv = String::from("timestamp,value\n");
        for (i, (&v, &missing)) in series.values().iter().zip(series.missing_mask()).enumerate() {
            let ts = series.start_time() + i as i64 * series.interval() as i64;
            if missing {
                csv.push_str(&format!("{ts},\n"));
            } else {
                csv.push_str(&format!("{ts},{v}\n"));
            }
        }
        fs::write(&path, csv).map_err(|source| ModelError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_complete_series() {
        let s = parse_series("timestamp,value\n0,1.0\n60,2.0", "a", 60).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0]);
        assert!(!s.has_missing());
        assert_eq!(s.start_time(), 0);
    }

    #[test]
    fn parse_reconstructs_grid_holes() {
        let s = parse_series("timestamp,value\n0,1.0\n120,3.0", "a", 60).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.missing_mask(), &[false, true, false]);
        assert_eq!(s.values()[0], 1.0);
        assert_eq!(s.values()[2], 3.0);
    }

    #[test]
    fn parse_rejects_non_monotone_timestamps() {
        let err = parse_series("timestamp,value\n60,1.0\n0,2.0", "a", 60).unwrap_err();
        assert!(matches!(err, ModelError::NonMonotoneTimestamp { line: 3, .. }));
    }

    #[test]
    fn parse_empty_cell_is_missing() {
        let s = parse_series("timestamp,value\n0,1.0\n60,\n120,3.0", "a", 60).unwrap();
        assert_eq!(s.missing_mask(), &[false, true, false]);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_series("timestamp,value\n0,1.0\n60,zap", "a", 60).unwrap_err();
        match err {
            ModelError::MalformedRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_off_grid_timestamp() {
        let err = parse_series("timestamp,value\n0,1.0\n90,2.0", "a", 60).unwrap_err();
        assert!(matches!(err, ModelError::OffGridTimestamp { line: 3, .. }));
    }

    #[test]
    fn parse_rejects_non_finite_literals() {
        let err = parse_series("timestamp,value\n0,NaN", "a", 60).unwrap_err();
        assert!(matches!(err, ModelError::MalformedRow { line: 2, .. }));
    }

    #[test]
    fn non_missing_positions_are_never_nan() {
        let s = parse_series("timestamp,value\n0,1.0\n180,2.5\n240,\n300,0.5", "a", 60).unwrap();
        for (&v, &missing) in s.values().iter().zip(s.missing_mask()) {
            if !missing {
                assert!(v.is_finite());
            }
        }
    }

    #[test]
    fn series_validation_rejects_bad_shapes() {
        assert!(KpiSeries::new("a", 0, 60, vec![], vec![]).is_err());
        assert!(KpiSeries::new("a", 0, 60, vec![1.0], vec![false, true]).is_err());
        assert!(KpiSeries::new("a", 0, 0, vec![1.0], vec![false]).is_err());
        assert!(KpiSeries::new("a", 0, 60, vec![f64::NAN], vec![false]).is_err());
        // NaN under the mask is the expected placeholder.
        assert!(KpiSeries::new("a", 0, 60, vec![f64::NAN], vec![true]).is_ok());
    }

    fn entry(id: &str, domain: &str, file: &str) -> CatalogEntry {
        CatalogEntry {
            id: id.into(),
            attrs: KpiAttributes {
                domain: domain.into(),
                labels: BTreeMap::new(),
                service: None,
            },
            file: file.into(),
            interval: 60,
        }
    }

    #[test]
    fn catalog_rejects_duplicate_ids() {
        let err = KpiCatalog::new(vec![entry("a", "grpc", "a.csv"), entry("a", "node", "b.csv")])
            .unwrap_err();
        assert!(matches!(err, ModelError::DuplicateId { .. }));
    }

    fn demo_bundle() -> KpiBundle {
        let catalog = KpiCatalog::new(vec![
            CatalogEntry {
                id: "grpc_req".into(),
                attrs: KpiAttributes {
                    domain: "grpc".into(),
                    labels: BTreeMap::from([("cumulative".into(), "true".into())]),
                    service: Some("frontend".into()),
                },
                file: "grpc_req.csv".into(),
                interval: 60,
            },
            entry("node_cpu", "node", "node_cpu.csv"),
        ])
        .unwrap();
        let mut series = BTreeMap::new();
        series.insert(
            "grpc_req".to_string(),
            KpiSeries::from_values("grpc_req", 0, 60, vec![1.0, 2.0, 4.0]).unwrap(),
        );
        series.insert(
            "node_cpu".to_string(),
            KpiSeries::new(
                "node_cpu",
                0,
                60,
                vec![0.5, f64::NAN, 0.7],
                vec![false, true, false],
            )
            .unwrap(),
        );
        KpiBundle::new(catalog, series).unwrap()
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = demo_bundle();
        save_bundle(&bundle, dir.path()).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        assert_eq!(loaded, bundle);
    }

    #[test]
    fn load_reports_missing_series_file() {
        let dir = tempfile::tempdir().unwrap();
        let catalog = serde_json::json!([
            {"id": "a", "domain": "grpc", "labels": {}, "service": null, "file": "a.csv"}
        ]);
        fs::write(dir.path().join("catalog.json"), catalog.to_string()).unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        assert!(matches!(err, ModelError::MissingFile { .. }));
    }

    #[test]
    fn load_reports_duplicate_catalog_ids() {
        let dir = tempfile::tempdir().unwrap();
        let catalog = serde_json::json!([
            {"id": "a", "domain": "grpc", "file": "a.csv"},
            {"id": "a", "domain": "node", "file": "b.csv"}
        ]);
        fs::write(dir.path().join("catalog.json"), catalog.to_string()).unwrap();
        fs::write(dir.path().join("a.csv"), "timestamp,value\n0,1\n").unwrap();
        fs::write(dir.path().join("b.csv"), "timestamp,value\n0,1\n").unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateId { .. }));
    }

    #[test]
    fn load_reports_schema_violations() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("catalog.json"), "[{\"id\": 42}]").unwrap();
        let err = load_bundle(dir.path()).unwrap_err();
        assert!(matches!(err, ModelError::Schema(_)));
    }

    #[test]
    fn load_two_kpi_bundle() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&demo_bundle(), dir.path()).unwrap();
        let bundle = load_bundle(dir.path()).unwrap();
        assert_eq!(bundle.len(), 2);
        assert!(bundle.series("grpc_req").is_some());
        assert!(bundle.catalog().get("grpc_req").unwrap().attrs.is_cumulative());
    }
}
