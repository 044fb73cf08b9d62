//! Correlation-based taxonomies of multivariate time series.
//!
//! The pipeline turns a wide table of monthly prices into log returns,
//! Pearson correlations and the metric distance `d = sqrt(2 (1 - c))`, then
//! builds:
//!
//! * the minimum spanning tree (Kruskal), with bootstrap link reliability;
//! * the single-linkage hierarchical tree, whose cophenetic distances are
//!   the subdominant ultrametric of `d`;
//! * the average-linkage (UPGMA) hierarchical tree.
//!
//! Results export as CSV matrices, Graphviz DOT, JSON and Newick.

pub mod bootstrap;
pub mod corrnet;
pub mod error;
pub mod export;
pub mod hierarchy;
pub mod ingest;
pub mod mst;
pub mod newick;
pub mod pipeline;
pub mod synthetic;
pub mod union_find;

pub use bootstrap::{link_reliability, resample_rows, BootstrapReport};
pub use corrnet::{correlation_to_distance, pearson_matrix, CorrelationMatrix, DistanceMatrix};
pub use error::{Error, ErrorClass, Result};
pub use hierarchy::{
    average_linkage, cophenetic_matrix, cut_clusters, single_linkage, Dendrogram, Linkage, UltrametricMatrix,
};
pub use ingest::{compute_log_returns, load_csv, PriceTable, ReturnsMatrix};
pub use mst::{kruskal_mst, tree_path_max, SpanningTree, TreeEdge};
pub use newick::{export_newick, parse_newick};
pub use pipeline::{run_pipeline, RunConfig};
