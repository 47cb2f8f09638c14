//! KPI-based evaluation of workload simulation quality on microservice systems.
//!
//! The library compares KPI time series captured under an original workload
//! against those captured under a simulated one. It is organized as a small
//! pipeline plus a family of similarity metrics:
//!
//! * [`model`] — KPI series/catalog/bundle types and file ingestion.
//! * [`metrics`] — similarity metrics (ESBD, SBD, banded DTW) behind a
//!   name-keyed [`metrics::MetricRegistry`].
//! * [`preprocess`] — imputation, differentiation, resampling, Kalman
//!   denoising and standardisation.
//! * [`filter`] — domain-knowledge and chaos-experiment partitioning into
//!   strong/weak correlation KPI sets.
//! * [`cluster`] — DTW-based density-adaptive DBSCAN with medoid extraction
//!   to compress the weak-correlation set.
//! * [`evaluate`] — score aggregation into weak/strong/overall quality scores.
//! * [`synth`] — deterministic synthetic KPI generator for experiments and
//!   demo data.

pub mod cluster;
pub mod evaluate;
pub mod filter;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod synth;

pub use cluster::{compress, ClusterConfig, ClusterResult, CompressOutput};
pub use evaluate::{evaluate_bundles, EvalConfig, EvaluationReport};
pub use filter::{chaos_filter, domain_filter, ChaosRunTriple, FilterConfig, PartitionResult};
pub use metrics::{dtw, esbd, shape_distance, DtwConfig, EsbdConfig, MetricRegistry};
pub use model::{load_bundle, save_bundle, KpiBundle, KpiCatalog, KpiSeries};
pub use preprocess::{preprocess_bundle, run_pipeline, PreprocessConfig};
pub use synth::{generate_series, sweep, SynthSpec};
