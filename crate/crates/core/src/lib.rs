//! Mobility-report analysis toolkit.
//!
//! The pipeline reads Community Mobility Report style CSV files, fills missing
//! cells, summarises the six place categories into a radar-area circulation
//! indicator, removes weekly seasonality with STL, and runs exploratory spatial
//! autocorrelation (global Moran's I, Moran scatterplot, LISA) over contiguity
//! weights built from GeoJSON boundaries.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod category;
pub mod error;
pub mod indicator;
pub mod ingest;
pub mod pipeline;
pub mod render;
pub mod spatial;
pub mod timeseries;

pub use category::Category;
pub use error::{Error, Result};
