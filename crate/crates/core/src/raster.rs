//! Achievable-rate maps over a regular grid, and their PGM/CSV encodings.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::geometry::Point2D;
use crate::graph::{AugmentedGraph, Edge, GraphError};
use crate::radio::LinkRequirement;
use crate::routing::{RouteRef, RouteTree};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RasterCell {
    /// Centre inside or on the boundary of a building.
    Building,
    /// No route within the hop budget.
    NoCoverage,
    /// Bottleneck rate of the selected route, bit/s. Infinite at the MBS.
    Covered(f64),
}

impl RasterCell {
    pub fn rate_bps(&self) -> Option<f64> {
        match *self {
            RasterCell::Covered(r) => Some(r),
            _ => None,
        }
    }
}

/// Row-major grid, row 0 at the lowest `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRaster {
    pub origin: Point2D,
    pub spacing: f64,
    pub width: usize,
    pub height: usize,
    pub cells: Vec<RasterCell>,
}

impl RateRaster {
    pub fn cell_center(&self, col: usize, row: usize) -> Point2D {
        grid_center(self.origin, self.spacing, col, row)
    }

    pub fn get(&self, col: usize, row: usize) -> RasterCell {
        self.cells[row * self.width + col]
    }

    /// Largest finite covered rate, 0 when nothing finite is covered.
    pub fn max_finite_rate(&self) -> f64 {
        self.cells
            .iter()
            .filter_map(RasterCell::rate_bps)
            .filter(|r| r.is_finite())
            .fold(0.0, f64::max)
    }
}

fn grid_center(origin: Point2D, spacing: f64, col: usize, row: usize) -> Point2D {
    Point2D::new(
        origin.x + (col as f64 + 0.5) * spacing,
        origin.y + (row as f64 + 0.5) * spacing,
    )
}

/// Route selected for one point of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRoute {
    /// MBS first. A point that is not a graph node appears last with index
    /// `node_count()` of the base graph.
    pub node_sequence: Vec<usize>,
    /// One record per hop; a final hop to a probe point has `b == node_count()`.
    pub edges: Vec<Edge>,
    pub hop_count: usize,
    pub total_cost: f64,
    pub bottleneck_rate_bps: f64,
}

/// Routes arbitrary map points through a fixed backhaul graph, each point
/// attached as an independent probe. Read-only after construction.
pub struct ProbeRouter<'a> {
    scenario: &'a Scenario,
    graph: &'a AugmentedGraph,
    tree: RouteTree,
    req: LinkRequirement,
    penalty_p: f64,
    n_max: Option<usize>,
}

impl<'a> ProbeRouter<'a> {
    pub fn new(
        scenario: &'a Scenario,
        graph: &'a AugmentedGraph,
        snr_min_db: f64,
        n_max: Option<usize>,
        penalty_p: f64,
    ) -> Result<Self, GraphError> {
        let req = LinkRequirement::from_snr_db(snr_min_db);
        let tree = match n_max {
            Some(0) => return Err(GraphError::ZeroHopBudget),
            Some(h) => RouteTree::hop_bounded(graph, &req, penalty_p, h)?,
            None => RouteTree::unbounded(graph, &req, penalty_p)?,
        };
        Ok(Self {
            scenario,
            graph,
            tree,
            req,
            penalty_p,
            n_max,
        })
    }

    /// `None` when `p` lies inside or on a building.
    pub fn route(&self, p: Point2D) -> Option<Option<PointRoute>> {
        if self.scenario.map.is_obstructed(p) {
            return None;
        }
        if let Some(node) = self.graph.node_at(p) {
            return Some(self.tree.best(node).map(|r| self.point_route(r, None)));
        }
        let links = self.graph.probe_links(p, &self.scenario.map);
        let r = self
            .tree
            .extend_to_leaf(&links, &self.req, self.penalty_p, self.n_max)
            .map(|(k, r)| self.point_route(r, Some(links[k])));
        Some(r)
    }

    fn point_route(&self, r: RouteRef, last: Option<Edge>) -> PointRoute {
        let prefix = self.tree.materialize(self.graph, r);
        let mut node_sequence = prefix.node_sequence;
        let mut edges: Vec<Edge> = prefix.edge_ids.iter().map(|&id| *self.graph.edge(id)).collect();
        if let Some(link) = last {
            node_sequence.push(link.b);
            edges.push(link);
        }
        PointRoute {
            node_sequence,
            hop_count: r.hops,
            edges,
            total_cost: r.cost,
            bottleneck_rate_bps: r.bottleneck_rate_bps,
        }
    }

    pub fn cell(&self, p: Point2D) -> RasterCell {
        match self.route(p) {
            None => RasterCell::Building,
            Some(None) => RasterCell::NoCoverage,
            Some(Some(r)) => RasterCell::Covered(r.bottleneck_rate_bps),
        }
    }
}

/// Grid dimensions for `scenario`: `floor(extent / spacing)` cells per axis,
/// at least one.
pub fn grid_shape(scenario: &Scenario) -> (usize, usize) {
    let b = scenario.map.bounds();
    let s = scenario.experiment.grid_spacing_m;
    let w = ((b.width() / s).floor() as usize).max(1);
    let h = ((b.height() / s).floor() as usize).max(1);
    (w, h)
}

/// Rate map of `g` under the scenario's least-strict requirement and hop
/// budget. Cells are evaluated in parallel; each is independent.
pub fn rasterize_rate_map(
    scenario: &Scenario,
    g: &AugmentedGraph,
) -> Result<RateRaster, GraphError> {
    let exp = &scenario.experiment;
    let router = ProbeRouter::new(
        scenario,
        g,
        exp.least_strict_snr_db(),
        Some(exp.n_max),
        exp.penalty_p,
    )?;
    let (width, height) = grid_shape(scenario);
    let origin = scenario.map.bounds().min;
    let spacing = exp.grid_spacing_m;
    let cells = (0..width * height)
        .into_par_iter()
        .map(|k| router.cell(grid_center(origin, spacing, k % width, k / width)))
        .collect();
    Ok(RateRaster {
        origin,
        spacing,
        width,
        height,
        cells,
    })
}

/// Grey level of the building marker.
pub const PGM_BUILDING: u8 = 0;
/// Grey level of the no-coverage marker.
pub const PGM_NO_COVERAGE: u8 = 1;
/// Grey level of the MBS cell (infinite rate).
pub const PGM_MBS: u8 = 255;
const PGM_RATE_LO: u8 = 2;
const PGM_RATE_SPAN: f64 = 253.0;

/// Grey level for a cell. Finite rates map linearly onto `2..=255` with
/// `full_scale_bps` at the top, clamped.
pub fn pgm_level(cell: RasterCell, full_scale_bps: f64) -> u8 {
    match cell {
        RasterCell::Building => PGM_BUILDING,
        RasterCell::NoCoverage => PGM_NO_COVERAGE,
        RasterCell::Covered(r) if r.is_infinite() => PGM_MBS,
        RasterCell::Covered(r) => {
            let frac = if full_scale_bps > 0.0 {
                (r / full_scale_bps).clamp(0.0, 1.0)
            } else {
                0.0
            };
            PGM_RATE_LO + (frac * PGM_RATE_SPAN).round() as u8
        }
    }
}

/// Plain (P2) PGM, north up: the first written row is the highest `y`.
pub fn write_pgm<W: Write>(raster: &RateRaster, full_scale_bps: f64, out: &mut W) -> io::Result<()> {
    writeln!(out, "P2")?;
    writeln!(
        out,
        "# levels: 0 building, 1 no coverage, 2..255 rate linear to {full_scale_bps:.0} bit/s, 255 also MBS"
    )?;
    writeln!(out, "{} {}", raster.width, raster.height)?;
    writeln!(out, "255")?;
    for row in (0..raster.height).rev() {
        let line: Vec<String> = (0..raster.width)
            .map(|col| pgm_level(raster.get(col, row), full_scale_bps).to_string())
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// CSV with columns `x,y,rate_bps,status`, row-major from the lowest `y`.
/// `status` is one of `covered`, `mbs`, `no_coverage`, `building`; the rate
/// is empty unless covered, `inf` at the MBS.
pub fn write_csv<W: Write>(raster: &RateRaster, out: &mut W) -> io::Result<()> {
    writeln!(out, "x,y,rate_bps,status")?;
    for row in 0..raster.height {
        for col in 0..raster.width {
            let c = raster.cell_center(col, row);
            let (rate, status) = match raster.get(col, row) {
                RasterCell::Building => (String::new(), "building"),
                RasterCell::NoCoverage => (String::new(), "no_coverage"),
                RasterCell::Covered(r) if r.is_infinite() => ("inf".to_string(), "mbs"),
                RasterCell::Covered(r) => (format!("{r:.3}"), "covered"),
            };
            writeln!(out, "{:.3},{:.3},{},{}", c.x, c.y, rate, status)?;
        }
    }
    Ok(())
}
