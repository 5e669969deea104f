//! Multi-hop drone backhaul planning in urban maps with building-mounted
//! reflective surfaces (RIS).
//!
//! The pipeline: an [`ObstacleMap`](geometry::ObstacleMap) yields candidate
//! relay positions and a visibility graph; the radio model turns each line of
//! sight (or RIS reflection) into a link budget; routing picks the
//! penalised-path-loss route from the macro base station; coverage and raster
//! modules summarise reachability over candidates and over a grid.

pub mod coverage;
pub mod geometry;
pub mod graph;
pub mod radio;
pub mod raster;
pub mod routing;
pub mod scenario;

pub use coverage::{coverage_curve, min_hop_map, reachable_set, CoverageRow};
pub use geometry::{
    build_visibility_graph, candidate_points, segment_blocked, visible, Building, GeometryError,
    ObstacleMap, Point2D, Rect, VisibilityGraph,
};
pub use graph::{augment_with_ris, edge_cost, AugmentedGraph, Edge, EdgeKind, GraphError, RisSite};
pub use radio::{
    pl_direct_db, pl_ris_db, rate_bps, snr_db, LinkBudget, LinkRequirement, RadioError,
    RadioParams,
};
pub use raster::{rasterize_rate_map, RasterCell, RateRaster};
pub use routing::{bottleneck_rate, shortest_path, shortest_path_within, PathResult, RouteTree};
pub use scenario::{load_scenario, madrid_like_scenario, GridLayout, Scenario, ScenarioError};
