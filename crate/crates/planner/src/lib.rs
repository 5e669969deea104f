//! Experiment runner: loads or generates a scenario, builds the backhaul
//! graphs with and without RIS, and writes plot-ready CSV/PGM tables.
//!
//! Every command computes all of its outputs in memory first and writes the
//! files at the end, so a failed run leaves no partial set behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use backhaul_core::coverage::{coverage_curve, min_hop_map};
use backhaul_core::geometry::Point2D;
use backhaul_core::graph::{AugmentedGraph, Edge, EdgeKind, GraphError};
use backhaul_core::radio::LinkRequirement;
use backhaul_core::raster::{rasterize_rate_map, write_csv, write_pgm, PointRoute, ProbeRouter};
use backhaul_core::scenario::{
    load_scenario, madrid_like_scenario, GridLayout, Scenario, ScenarioError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadArgs(String),
    #[error("invalid scenario: {0}")]
    Validation(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 bad arguments, 3 scenario validation, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::BadArgs(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Validation(ScenarioError::Graph(e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    File(PathBuf),
    Generate(GridLayout),
}

/// Experiment settings given on the command line; each replaces the
/// scenario's own value when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub snr_min_db: Option<Vec<f64>>,
    pub n_max: Option<usize>,
    pub penalty_p: Option<f64>,
    pub grid_spacing_m: Option<f64>,
}

/// Everything a command needs. All computation is deterministic; there is
/// no random seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ScenarioSource,
    pub overrides: Overrides,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(source: ScenarioSource, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            source,
            overrides: Overrides::default(),
            out_dir: out_dir.into(),
        }
    }

    pub fn load(&self) -> Result<Scenario, CliError> {
        let mut s = match &self.source {
            ScenarioSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                load_scenario(&text)?
            }
            ScenarioSource::Generate(layout) => madrid_like_scenario(*layout)?,
        };
        let o = &self.overrides;
        if let Some(v) = &o.snr_min_db {
            s.experiment.snr_min_db = v.clone();
        }
        if let Some(v) = o.n_max {
            s.experiment.n_max = v;
        }
        if let Some(v) = o.penalty_p {
            s.experiment.penalty_p = v;
        }
        if let Some(v) = o.grid_spacing_m {
            s.experiment.grid_spacing_m = v;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    NoRis,
    Ris,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::NoRis => "no_ris",
            Variant::Ris => "ris",
        }
    }
}

/// A scenario with its backhaul graph per variant. The RIS variant exists
/// only when the scenario has RIS sites.
pub struct Prepared {
    pub scenario: Scenario,
    pub variants: Vec<(Variant, AugmentedGraph)>,
}

impl Prepared {
    pub fn new(scenario: Scenario) -> Result<Self, CliError> {
        let vg = scenario.visibility_graph()?;
        let mut variants = vec![(Variant::NoRis, scenario.backhaul_graph(&vg, false)?)];
        if !scenario.ris_sites.is_empty() {
            variants.push((Variant::Ris, scenario.backhaul_graph(&vg, true)?));
        }
        Ok(Self { scenario, variants })
    }

    pub fn graph(&self, v: Variant) -> Option<&AugmentedGraph> {
        self.variants.iter().find(|(w, _)| *w == v).map(|(_, g)| g)
    }
}

/// Shortest decimal rendering of a requirement, for file names.
pub fn snr_tag(snr_min_db: f64) -> String {
    format!("{snr_min_db}")
}

fn write_outputs(out_dir: &Path, files: Vec<(String, Vec<u8>)>) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

/// `hops_<snr>db_<variant>.csv` per requirement and variant, columns
/// `x,y,min_hops`; candidates beyond the hop budget read `unreachable`.
pub fn hops_map_files(p: &Prepared) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let exp = &p.scenario.experiment;
    let mut files = Vec::new();
    for &snr in &exp.snr_min_db {
        for (variant, g) in &p.variants {
            let hops = min_hop_map(g, &LinkRequirement::from_snr_db(snr), exp.n_max)?;
            let mut text = String::from("x,y,min_hops\n");
            for i in g.candidate_indices() {
                let pos = g.nodes()[i].position;
                let value = hops[i].map_or_else(|| "unreachable".to_string(), |h| h.to_string());
                writeln!(text, "{:.3},{:.3},{}", pos.x, pos.y, value).expect("string write");
            }
            files.push((
                format!("hops_{}db_{}.csv", snr_tag(snr), variant.label()),
                text.into_bytes(),
            ));
        }
    }
    Ok(files)
}

/// `rate_<variant>.pgm` and `rate_<variant>.csv`. Both variants share the
/// grey-level full scale so the images compare directly.
pub fn rate_heatmap_files(p: &Prepared) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let rasters = p
        .variants
        .iter()
        .map(|(v, g)| Ok((*v, rasterize_rate_map(&p.scenario, g)?)))
        .collect::<Result<Vec<_>, GraphError>>()?;
    let full_scale = rasters
        .iter()
        .map(|(_, r)| r.max_finite_rate())
        .fold(0.0, f64::max);
    let mut files = Vec::new();
    for (v, r) in &rasters {
        let mut pgm = Vec::new();
        write_pgm(r, full_scale, &mut pgm).expect("in-memory write");
        let mut csv = Vec::new();
        write_csv(r, &mut csv).expect("in-memory write");
        files.push((format!("rate_{}.pgm", v.label()), pgm));
        files.push((format!("rate_{}.csv", v.label()), csv));
    }
    Ok(files)
}

/// `coverage.csv` with columns `snr_min_db,n,ris_variant,reached,total`.
pub fn coverage_bars_files(p: &Prepared) -> Result<Vec<(String, Vec<u8>)>, CliError> {
    let exp = &p.scenario.experiment;
    let without = p.graph(Variant::NoRis).expect("always present");
    let with = p.graph(Variant::Ris).unwrap_or(without);
    let rows = coverage_curve(without, with, exp.n_max, &exp.snr_min_db)?;
    let mut text = String::from("snr_min_db,n,ris_variant,reached,total\n");
    for r in rows {
        let variant = if r.ris { Variant::Ris } else { Variant::NoRis };
        if p.graph(variant).is_none() {
            continue;
        }
        writeln!(
            text,
            "{},{},{},{},{}",
            snr_tag(r.snr_min_db),
            r.n,
            variant.label(),
            r.reached,
            r.total
        )
        .expect("string write");
    }
    Ok(vec![("coverage.csv".to_string(), text.into_bytes())])
}

pub fn cmd_hops_map(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = Prepared::new(config.load()?)?;
    write_outputs(&config.out_dir, hops_map_files(&p)?)
}

pub fn cmd_rate_heatmap(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = Prepared::new(config.load()?)?;
    write_outputs(&config.out_dir, rate_heatmap_files(&p)?)
}

pub fn cmd_coverage_bars(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = Prepared::new(config.load()?)?;
    write_outputs(&config.out_dir, coverage_bars_files(&p)?)
}

/// Hops map, rate heatmap and coverage bars from one graph build.
pub fn cmd_all(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = Prepared::new(config.load()?)?;
    let mut files = hops_map_files(&p)?;
    files.extend(rate_heatmap_files(&p)?);
    files.extend(coverage_bars_files(&p)?);
    write_outputs(&config.out_dir, files)
}

/// Why a destination could not be reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unreachable {
    /// Not even a chain of line-of-sight hops leads there.
    NoLosChain,
    /// Line-of-sight chains exist but each has a hop below the requirement.
    RateThreshold,
    /// Feasible routes exist but all need more hops than allowed.
    HopBudget,
}

impl Unreachable {
    pub fn describe(self) -> &'static str {
        match self {
            Unreachable::NoLosChain => "no line-of-sight chain",
            Unreachable::RateThreshold => "rate threshold",
            Unreachable::HopBudget => "hop budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathOutcome {
    Reached(PointRoute),
    Unreachable(Unreachable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantPath {
    pub snr_min_db: f64,
    pub variant: Variant,
    pub outcome: PathOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathReport {
    pub dst: Point2D,
    pub n_max: usize,
    pub entries: Vec<VariantPath>,
    pub files: Vec<PathBuf>,
}

impl PathReport {
    pub fn entry(&self, snr_min_db: f64, variant: Variant) -> Option<&VariantPath> {
        self.entries
            .iter()
            .find(|e| e.snr_min_db == snr_min_db && e.variant == variant)
    }
}

fn route_to(
    p: &Prepared,
    g: &AugmentedGraph,
    dst: Point2D,
    snr: f64,
    n_max: Option<usize>,
) -> Result<Option<PointRoute>, CliError> {
    let router = ProbeRouter::new(&p.scenario, g, snr, n_max, p.scenario.experiment.penalty_p)?;
    Ok(router.route(dst).flatten())
}

fn classify(
    p: &Prepared,
    g: &AugmentedGraph,
    dst: Point2D,
    snr: f64,
) -> Result<Unreachable, CliError> {
    if route_to(p, g, dst, f64::NEG_INFINITY, None)?.is_none() {
        Ok(Unreachable::NoLosChain)
    } else if route_to(p, g, dst, snr, None)?.is_none() {
        Ok(Unreachable::RateThreshold)
    } else {
        Ok(Unreachable::HopBudget)
    }
}

fn node_label(g: &AugmentedGraph, i: usize) -> String {
    if i == g.mbs_index() {
        "MBS".to_string()
    } else if i >= g.node_count() {
        "destination".to_string()
    } else {
        format!("candidate {i}")
    }
}

fn kind_label(kind: EdgeKind) -> String {
    match kind {
        EdgeKind::Direct => "direct".to_string(),
        EdgeKind::ViaRis(r) => format!("ris{r}"),
    }
}

fn position(g: &AugmentedGraph, dst: Point2D, i: usize) -> Point2D {
    g.nodes().get(i).map_or(dst, |n| n.position)
}

/// Orients a route edge along the direction of travel.
fn hop_ends(e: &Edge, from: usize) -> (usize, usize) {
    (from, e.other(from))
}

/// Routes the MBS to `dst` under every requirement and variant, within the
/// hop budget, and writes `path.txt` and `path.csv`.
pub fn cmd_path(config: &RunConfig, dst: Point2D) -> Result<PathReport, CliError> {
    let scenario = config.load()?;
    let bounds = scenario.map.bounds();
    if !dst.is_finite() || !bounds.contains(dst) {
        return Err(CliError::BadArgs(format!(
            "destination ({}, {}) lies outside the map bounds",
            dst.x, dst.y
        )));
    }
    if scenario.map.is_obstructed(dst) {
        return Err(CliError::BadArgs(format!(
            "destination ({}, {}) lies inside a building",
            dst.x, dst.y
        )));
    }
    let p = Prepared::new(scenario)?;
    let exp = p.scenario.experiment.clone();

    let mut entries = Vec::new();
    for &snr in &exp.snr_min_db {
        for (variant, g) in &p.variants {
            let outcome = match route_to(&p, g, dst, snr, Some(exp.n_max))? {
                Some(r) => PathOutcome::Reached(r),
                None => PathOutcome::Unreachable(classify(&p, g, dst, snr)?),
            };
            entries.push(VariantPath {
                snr_min_db: snr,
                variant: *variant,
                outcome,
            });
        }
    }

    let mut txt = String::new();
    let mut csv = String::from(
        "snr_min_db,ris_variant,status,hop,from,to,kind,d1_m,d2_m,pl_db,snr_db,rate_bps,bottleneck_rate_bps\n",
    );
    writeln!(
        txt,
        "destination ({:.3}, {:.3}), hop budget {}",
        dst.x, dst.y, exp.n_max
    )
    .expect("string write");
    for e in &entries {
        let g = p.graph(e.variant).expect("variant built");
        let head = format!("{} dB, {}", snr_tag(e.snr_min_db), e.variant.label());
        match &e.outcome {
            PathOutcome::Unreachable(why) => {
                writeln!(txt, "\n[{head}] unreachable: {}", why.describe()).expect("string write");
                writeln!(
                    csv,
                    "{},{},unreachable: {},,,,,,,,,,",
                    snr_tag(e.snr_min_db),
                    e.variant.label(),
                    why.describe()
                )
                .expect("string write");
            }
            PathOutcome::Reached(r) => {
                let bottleneck = if r.bottleneck_rate_bps.is_infinite() {
                    "inf".to_string()
                } else {
                    format!("{:.3}", r.bottleneck_rate_bps)
                };
                writeln!(
                    txt,
                    "\n[{head}] {} hop(s), bottleneck rate {} bit/s",
                    r.hop_count, bottleneck
                )
                .expect("string write");
                let seq: Vec<String> = r.node_sequence.iter().map(|&i| node_label(g, i)).collect();
                writeln!(txt, "  route: {}", seq.join(" -> ")).expect("string write");
                if r.edges.is_empty() {
                    writeln!(
                        csv,
                        "{},{},reached,0,MBS,MBS,,,,,,,{}",
                        snr_tag(e.snr_min_db),
                        e.variant.label(),
                        bottleneck
                    )
                    .expect("string write");
                }
                for (k, edge) in r.edges.iter().enumerate() {
                    let (from, to) = hop_ends(edge, r.node_sequence[k]);
                    let (pf, pt) = (position(g, dst, from), position(g, dst, to));
                    let d2 = match edge.kind {
                        EdgeKind::Direct => String::new(),
                        EdgeKind::ViaRis(_) => format!("{:.3}", edge.d2_m),
                    };
                    writeln!(
                        txt,
                        "  hop {}: {} ({:.3}, {:.3}) -> {} ({:.3}, {:.3}) {}, d1 {:.3} m{}, PL {:.3} dB, SNR {:.3} dB, rate {:.3} bit/s",
                        k + 1,
                        node_label(g, from),
                        pf.x,
                        pf.y,
                        node_label(g, to),
                        pt.x,
                        pt.y,
                        kind_label(edge.kind),
                        edge.d1_m,
                        if d2.is_empty() { String::new() } else { format!(", d2 {d2} m") },
                        edge.pl_db,
                        edge.snr_db,
                        edge.rate_bps
                    )
                    .expect("string write");
                    writeln!(
                        csv,
                        "{},{},reached,{},{},{},{},{:.3},{},{:.3},{:.3},{:.3},{}",
                        snr_tag(e.snr_min_db),
                        e.variant.label(),
                        k + 1,
                        node_label(g, from),
                        node_label(g, to),
                        kind_label(edge.kind),
                        edge.d1_m,
                        d2,
                        edge.pl_db,
                        edge.snr_db,
                        edge.rate_bps,
                        bottleneck
                    )
                    .expect("string write");
                }
            }
        }
    }
    let files = write_outputs(
        &config.out_dir,
        vec![
            ("path.txt".to_string(), txt.into_bytes()),
            ("path.csv".to_string(), csv.into_bytes()),
        ],
    )?;
    Ok(PathReport {
        dst,
        n_max: exp.n_max,
        entries,
        files,
    })
}

/// Parses `x,y`.
pub fn parse_point(s: &str) -> Result<Point2D, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected X,Y, got {s:?}"));
    }
    let x: f64 = parts[0].parse().map_err(|_| format!("bad number {:?}", parts[0]))?;
    let y: f64 = parts[1].parse().map_err(|_| format!("bad number {:?}", parts[1]))?;
    Ok(Point2D::new(x, y))
}

/// Parses `blocks_x,blocks_y,block_w,block_h,street_w`.
pub fn parse_layout(s: &str, ris_center_square: bool) -> Result<GridLayout, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(format!(
            "expected blocks_x,blocks_y,block_w,block_h,street_w, got {s:?}"
        ));
    }
    let count = |t: &str| -> Result<usize, String> {
        t.parse::<usize>()
            .map_err(|_| format!("block count must be a non-negative integer, got {t:?}"))
    };
    let length = |t: &str| -> Result<f64, String> {
        t.parse::<f64>().map_err(|_| format!("bad length {t:?}"))
    };
    Ok(GridLayout::new(
        count(parts[0])?,
        count(parts[1])?,
        length(parts[2])?,
        length(parts[3])?,
        length(parts[4])?,
        ris_center_square,
    ))
}
