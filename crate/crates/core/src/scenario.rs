//! Scenario documents: obstacle map, macro base station, RIS sites, candidate
//! drone positions, radio constants and experiment settings.
//!
//! Documents are JSON. Omitted radio fields fall back to [`RadioParams::default`],
//! an omitted experiment block to [`Experiment::default`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    build_visibility_graph, candidate_points, Building, GeometryError, ObstacleMap, Point2D, Rect,
    VisibilityGraph, GEOM_EPS,
};
use crate::graph::{augment_with_ris, AugmentedGraph, GraphError, RisSite};
use crate::radio::{RadioError, RadioParams};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Malformed(String),
    #[error("invalid bounds: {0}")]
    Bounds(GeometryError),
    #[error("building {index}: {source}")]
    Building {
        index: usize,
        source: GeometryError,
    },
    #[error("building {0} extends outside the map bounds")]
    BuildingOutOfBounds(usize),
    #[error("macro base station at ({0}, {1}) lies outside the map bounds")]
    MbsOutOfBounds(f64, f64),
    #[error("macro base station lies inside building {0}")]
    MbsInsideBuilding(usize),
    #[error("RIS {index}: {source}")]
    Ris { index: usize, source: GraphError },
    #[error("candidate offset must be positive, got {0}")]
    CandidateOffset(f64),
    #[error("candidate point {index} {reason}")]
    Candidate { index: usize, reason: String },
    #[error("radio parameters: {0}")]
    Radio(#[from] RadioError),
    #[error("experiment needs at least one SNR requirement")]
    EmptySnrList,
    #[error("SNR requirement {0} is not finite")]
    NonFiniteSnr(f64),
    #[error("hop budget n_max must be at least 1")]
    ZeroHopBudget,
    #[error("hop penalty must be non-negative, got {0}")]
    NegativePenalty(f64),
    #[error("grid spacing must be positive, got {0} m")]
    NonPositiveSpacing(f64),
    #[error("grid generator: {0}")]
    Generator(String),
    #[error("graph construction: {0}")]
    Graph(#[from] GraphError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
}

/// How candidate drone positions are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum CandidateSpec {
    /// Building corners pushed outward by `offset_m`, optionally with edge midpoints.
    Corners { offset_m: f64, midpoints: bool },
    Explicit(Vec<Point2D>),
}

impl Default for CandidateSpec {
    fn default() -> Self {
        CandidateSpec::Corners {
            offset_m: 1.0,
            midpoints: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment {
    /// Per-hop SNR requirements to sweep, dB.
    pub snr_min_db: Vec<f64>,
    /// Largest hop budget.
    pub n_max: usize,
    /// Per-hop routing penalty, dB.
    pub penalty_p: f64,
    /// Rate-map cell size, m.
    pub grid_spacing_m: f64,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            snr_min_db: vec![41.0, 31.0, 21.0, 11.0],
            n_max: 8,
            penalty_p: 200.0,
            grid_spacing_m: 10.0,
        }
    }
}

impl Experiment {
    /// The requirement that admits the most links.
    pub fn least_strict_snr_db(&self) -> f64 {
        self.snr_min_db
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.snr_min_db.is_empty() {
            return Err(ScenarioError::EmptySnrList);
        }
        if let Some(&s) = self.snr_min_db.iter().find(|s| !s.is_finite()) {
            return Err(ScenarioError::NonFiniteSnr(s));
        }
        if self.n_max == 0 {
            return Err(ScenarioError::ZeroHopBudget);
        }
        if !(self.penalty_p >= 0.0 && self.penalty_p.is_finite()) {
            return Err(ScenarioError::NegativePenalty(self.penalty_p));
        }
        if !(self.grid_spacing_m > 0.0 && self.grid_spacing_m.is_finite()) {
            return Err(ScenarioError::NonPositiveSpacing(self.grid_spacing_m));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map: ObstacleMap,
    pub mbs: Point2D,
    pub ris_sites: Vec<RisSite>,
    pub candidates: CandidateSpec,
    pub radio: RadioParams,
    pub experiment: Experiment,
}

// ---- document layer ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    /// `[xmin, ymin, xmax, ymax]`
    bounds: [f64; 4],
    buildings: Vec<Vec<[f64; 2]>>,
    mbs: [f64; 2],
    #[serde(default)]
    ris: Vec<RisDoc>,
    #[serde(default)]
    candidates: CandidatesDoc,
    #[serde(default)]
    radio: RadioParams,
    #[serde(default)]
    experiment: Experiment,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RisDoc {
    pos: [f64; 2],
    normal: [f64; 2],
}

fn default_offset() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
enum CandidatesDoc {
    Corners {
        #[serde(default = "default_offset")]
        offset_m: f64,
        #[serde(default)]
        midpoints: bool,
    },
    Explicit {
        points: Vec<[f64; 2]>,
    },
}

impl Default for CandidatesDoc {
    fn default() -> Self {
        CandidatesDoc::Corners {
            offset_m: default_offset(),
            midpoints: false,
        }
    }
}

fn pt(a: [f64; 2]) -> Point2D {
    Point2D::new(a[0], a[1])
}

fn arr(p: Point2D) -> [f64; 2] {
    [p.x, p.y]
}

/// Parses and validates a scenario document.
pub fn load_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc =
        serde_json::from_str(document).map_err(|e| ScenarioError::Malformed(e.to_string()))?;
    let bounds = Rect::new(
        Point2D::new(doc.bounds[0], doc.bounds[1]),
        Point2D::new(doc.bounds[2], doc.bounds[3]),
    )
    .map_err(ScenarioError::Bounds)?;
    let buildings = doc
        .buildings
        .into_iter()
        .enumerate()
        .map(|(index, verts)| {
            Building::new(verts.into_iter().map(pt).collect())
                .map_err(|source| ScenarioError::Building { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let ris_sites = doc
        .ris
        .iter()
        .enumerate()
        .map(|(index, r)| {
            let normal = pt(r.normal).normalized().ok_or(ScenarioError::Ris {
                index,
                source: GraphError::BadRisNormal(index),
            })?;
            Ok(RisSite {
                position: pt(r.pos),
                normal,
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    let candidates = match doc.candidates {
        CandidatesDoc::Corners {
            offset_m,
            midpoints,
        } => CandidateSpec::Corners {
            offset_m,
            midpoints,
        },
        CandidatesDoc::Explicit { points } => {
            CandidateSpec::Explicit(points.into_iter().map(pt).collect())
        }
    };
    Scenario::new(
        bounds,
        buildings,
        pt(doc.mbs),
        ris_sites,
        candidates,
        doc.radio,
        doc.experiment,
    )
}

impl Scenario {
    /// Assembles and validates a scenario.
    pub fn new(
        bounds: Rect,
        buildings: Vec<Building>,
        mbs: Point2D,
        ris_sites: Vec<RisSite>,
        candidates: CandidateSpec,
        radio: RadioParams,
        experiment: Experiment,
    ) -> Result<Self, ScenarioError> {
        let map = ObstacleMap::new(bounds, buildings).map_err(|e| match e {
            GeometryError::BuildingOutOfBounds(i) => ScenarioError::BuildingOutOfBounds(i),
            other => ScenarioError::Geometry(other),
        })?;
        let scenario = Scenario {
            map,
            mbs,
            ris_sites,
            candidates,
            radio,
            experiment,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bounds = self.map.bounds();
        if !self.mbs.is_finite() || !bounds.contains(self.mbs) {
            return Err(ScenarioError::MbsOutOfBounds(self.mbs.x, self.mbs.y));
        }
        if let Some(i) = self.map.building_containing(self.mbs) {
            return Err(ScenarioError::MbsInsideBuilding(i));
        }
        for (index, r) in self.ris_sites.iter().enumerate() {
            r.validate(index, &self.map)
                .map_err(|source| ScenarioError::Ris { index, source })?;
        }
        match &self.candidates {
            CandidateSpec::Corners { offset_m, .. } => {
                if !(*offset_m > 0.0 && offset_m.is_finite()) {
                    return Err(ScenarioError::CandidateOffset(*offset_m));
                }
            }
            CandidateSpec::Explicit(points) => {
                for (index, p) in points.iter().enumerate() {
                    if !p.is_finite() || !bounds.contains(*p) {
                        return Err(ScenarioError::Candidate {
                            index,
                            reason: "lies outside the map bounds".into(),
                        });
                    }
                    if let Some(b) = self.map.building_containing(*p) {
                        return Err(ScenarioError::Candidate {
                            index,
                            reason: format!("lies inside building {b}"),
                        });
                    }
                }
            }
        }
        self.radio.validate()?;
        self.experiment.validate()?;
        Ok(())
    }

    /// Candidate positions in a fixed order, without repeats and without any
    /// point that coincides with the MBS or a RIS.
    pub fn candidate_positions(&self) -> Result<Vec<Point2D>, ScenarioError> {
        let raw = match &self.candidates {
            CandidateSpec::Corners {
                offset_m,
                midpoints,
            } => candidate_points(&self.map, *offset_m, *midpoints)?,
            CandidateSpec::Explicit(points) => points.clone(),
        };
        let mut out: Vec<Point2D> = Vec::with_capacity(raw.len());
        for p in raw {
            let clashes = p.distance(self.mbs) <= GEOM_EPS
                || self
                    .ris_sites
                    .iter()
                    .any(|r| r.position.distance(p) <= GEOM_EPS)
                || out.iter().any(|q| q.distance(p) <= GEOM_EPS);
            if !clashes {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Graph node positions: the MBS (index 0) followed by the candidates.
    pub fn node_positions(&self) -> Result<Vec<Point2D>, ScenarioError> {
        let mut nodes = vec![self.mbs];
        nodes.extend(self.candidate_positions()?);
        Ok(nodes)
    }

    pub fn visibility_graph(&self) -> Result<VisibilityGraph, ScenarioError> {
        Ok(build_visibility_graph(&self.node_positions()?, &self.map)?)
    }

    /// Backhaul graph over `vg`, with or without this scenario's RIS sites.
    pub fn backhaul_graph(
        &self,
        vg: &VisibilityGraph,
        with_ris: bool,
    ) -> Result<AugmentedGraph, ScenarioError> {
        let ris: &[RisSite] = if with_ris { &self.ris_sites } else { &[] };
        Ok(augment_with_ris(vg, 0, ris, &self.map, &self.radio)?)
    }

    /// Serializes to the JSON document format.
    pub fn to_json(&self) -> String {
        let b = self.map.bounds();
        let doc = ScenarioDoc {
            bounds: [b.min.x, b.min.y, b.max.x, b.max.y],
            buildings: self
                .map
                .buildings()
                .iter()
                .map(|bld| bld.vertices().iter().copied().map(arr).collect())
                .collect(),
            mbs: arr(self.mbs),
            ris: self
                .ris_sites
                .iter()
                .map(|r| RisDoc {
                    pos: arr(r.position),
                    normal: arr(r.normal),
                })
                .collect(),
            candidates: match &self.candidates {
                CandidateSpec::Corners {
                    offset_m,
                    midpoints,
                } => CandidatesDoc::Corners {
                    offset_m: *offset_m,
                    midpoints: *midpoints,
                },
                CandidateSpec::Explicit(points) => CandidatesDoc::Explicit {
                    points: points.iter().copied().map(arr).collect(),
                },
            },
            radio: self.radio,
            experiment: self.experiment.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("scenario documents always serialize")
    }
}

/// Parameters of the rectangular street-grid generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLayout {
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub block_w: f64,
    pub block_h: f64,
    pub street_w: f64,
    /// Leave the central block open and put two RIS panels on the facades
    /// facing each other across it. Needs an odd block count on both axes.
    pub ris_center_square: bool,
}

impl GridLayout {
    pub fn new(
        blocks_x: usize,
        blocks_y: usize,
        block_w: f64,
        block_h: f64,
        street_w: f64,
        ris_center_square: bool,
    ) -> Self {
        Self {
            blocks_x,
            blocks_y,
            block_w,
            block_h,
            street_w,
            ris_center_square,
        }
    }

    fn pitch_x(&self) -> f64 {
        self.block_w + self.street_w
    }

    fn pitch_y(&self) -> f64 {
        self.block_h + self.street_w
    }

    fn block_origin(&self, i: usize, j: usize) -> Point2D {
        Point2D::new(
            self.street_w + i as f64 * self.pitch_x(),
            self.street_w + j as f64 * self.pitch_y(),
        )
    }
}

/// A Madrid-like street grid: `blocks_x * blocks_y` rectangular blocks with
/// streets between them and around the edge, the macro BS at the map centre
/// and candidates at the block corners (1 m offset).
///
/// When the centre falls inside a block (odd counts without the open square),
/// the MBS moves to the nearest street intersection, lowest `y` then lowest
/// `x` on ties.
pub fn madrid_like_scenario(layout: GridLayout) -> Result<Scenario, ScenarioError> {
    let GridLayout {
        blocks_x,
        blocks_y,
        block_w,
        block_h,
        street_w,
        ris_center_square,
    } = layout;
    if blocks_x == 0 || blocks_y == 0 {
        return Err(ScenarioError::Generator("need at least one block per axis".into()));
    }
    for (name, v) in [("block_w", block_w), ("block_h", block_h), ("street_w", street_w)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ScenarioError::Generator(format!("{name} must be positive")));
        }
    }
    let square = if ris_center_square {
        if blocks_x % 2 == 0 || blocks_y % 2 == 0 || blocks_x < 3 {
            return Err(ScenarioError::Generator(
                "the central square needs odd block counts and at least 3 columns".into(),
            ));
        }
        Some((blocks_x / 2, blocks_y / 2))
    } else {
        None
    };

    let width = blocks_x as f64 * block_w + (blocks_x + 1) as f64 * street_w;
    let height = blocks_y as f64 * block_h + (blocks_y + 1) as f64 * street_w;
    let bounds = Rect::new(Point2D::new(0.0, 0.0), Point2D::new(width, height))
        .map_err(ScenarioError::Bounds)?;

    let mut buildings = Vec::with_capacity(blocks_x * blocks_y);
    for j in 0..blocks_y {
        for i in 0..blocks_x {
            if square == Some((i, j)) {
                continue;
            }
            let lo = layout.block_origin(i, j);
            let hi = Point2D::new(lo.x + block_w, lo.y + block_h);
            buildings.push(Building::rectangle(lo, hi)?);
        }
    }
    let map = ObstacleMap::new(bounds, buildings.clone())?;

    let mut ris_sites = Vec::new();
    if let Some((ci, cj)) = square {
        let west = layout.block_origin(ci - 1, cj);
        let east = layout.block_origin(ci + 1, cj);
        let mid_y = west.y + 0.5 * block_h;
        ris_sites.push(RisSite {
            position: Point2D::new(west.x + block_w, mid_y),
            normal: Point2D::new(1.0, 0.0),
        });
        ris_sites.push(RisSite {
            position: Point2D::new(east.x, mid_y),
            normal: Point2D::new(-1.0, 0.0),
        });
    }

    let centre = bounds.center();
    let mbs = if map.is_obstructed(centre) {
        let mut best: Option<(f64, Point2D)> = None;
        for jy in 0..=blocks_y {
            for ix in 0..=blocks_x {
                let p = Point2D::new(
                    0.5 * street_w + ix as f64 * layout.pitch_x(),
                    0.5 * street_w + jy as f64 * layout.pitch_y(),
                );
                let d = p.distance(centre);
                if best.is_none_or(|(bd, _)| d < bd - GEOM_EPS) {
                    best = Some((d, p));
                }
            }
        }
        best.expect("grid has intersections").1
    } else {
        centre
    };

    Scenario::new(
        bounds,
        buildings,
        mbs,
        ris_sites,
        CandidateSpec::default(),
        RadioParams::default(),
        Experiment::default(),
    )
}
