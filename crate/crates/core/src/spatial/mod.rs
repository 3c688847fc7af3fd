//! Contiguity weights and Moran statistics.

mod geometry;
mod lisa;
mod moran;
mod permutation;
mod weights;

pub(crate) use geometry::feature_id;
pub use geometry::{parse_geojson, GeoCollection, Point, RegionGeometry, Ring};
pub use lisa::{lisa_classify, ClusterLabel, LisaRegion, LisaResult, Tier};
pub use moran::{
    moran_global, moran_local, moran_scatter, spatial_lag, standardize_values, LocalMoran,
    MoranScatter, Quadrant, ScatterPoint, ValueField,
};
pub use permutation::{
    lisa_permutation, moran_permutation, MoranGlobalResult, Sampling, Sidedness,
};
pub use weights::{
    adjacency, attach_islands_knn, queen_adjacency, rook_adjacency, row_standardize, Contiguity,
    SpatialWeights, WeightMode, DEFAULT_SNAP_TOL,
};
