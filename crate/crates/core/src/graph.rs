//! The backhaul connectivity graph: LOS hops from the visibility graph plus
//! virtual LOS hops reflected through building-mounted RIS panels.
//!
//! The graph is a multigraph. A node pair can be joined by one direct edge
//! and by one reflected edge per RIS that both endpoints face; routing picks
//! among them by cost.

use thiserror::Error;

use crate::geometry::{visible_unchecked, ObstacleMap, Point2D, VisibilityGraph, GEOM_EPS};
use crate::radio::{pl_direct_db, pl_ris_db, LinkBudget, LinkRequirement, RadioParams};

/// Tolerance for a RIS position to count as lying on a facade.
pub const FACADE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node index {0} out of range")]
    NoSuchNode(usize),
    #[error("hop penalty must be non-negative, got {0}")]
    NegativePenalty(f64),
    #[error("edge {edge} has non-positive routing cost {cost}")]
    NonPositiveCost { edge: usize, cost: f64 },
    #[error("hop budget must be at least 1")]
    ZeroHopBudget,
    #[error("graphs do not share the same node set")]
    NodeSetMismatch,
    #[error("RIS {0} normal is not a unit vector")]
    BadRisNormal(usize),
    #[error("RIS {0} position is not on any building facade")]
    RisOffFacade(usize),
    #[error("RIS {0} normal does not point out of its facade")]
    RisFacingInward(usize),
    #[error("RIS {ris} coincides with graph node {node}")]
    RisOnNode { ris: usize, node: usize },
}

/// A reflecting surface on a building facade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisSite {
    pub position: Point2D,
    /// Outward facade normal, unit length.
    pub normal: Point2D,
}

impl RisSite {
    /// Whether `p` is on the reflecting side (strict half-plane test).
    pub fn faces(&self, p: Point2D) -> bool {
        (p - self.position).dot(self.normal) > 0.0
    }

    /// Front side and unobstructed.
    pub fn serves(&self, p: Point2D, map: &ObstacleMap) -> bool {
        self.faces(p)
            && p.distance(self.position) > GEOM_EPS
            && visible_unchecked(p, self.position, map)
    }

    /// Checks unit normal, facade placement and outward orientation.
    pub fn validate(&self, index: usize, map: &ObstacleMap) -> Result<(), GraphError> {
        if !self.position.is_finite() || (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(GraphError::BadRisNormal(index));
        }
        let building = map
            .buildings()
            .iter()
            .find(|b| b.on_boundary(self.position, FACADE_TOL))
            .ok_or(GraphError::RisOffFacade(index))?;
        let probe = self.position + self.normal * 1e-3;
        if building.strictly_contains(probe) {
            return Err(GraphError::RisFacingInward(index));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Direct,
    ViaRis(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Mbs,
    Candidate,
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub position: Point2D,
    pub role: NodeRole,
}

/// One hop. For direct edges `d2_m` is zero; for reflected edges `d1_m` is
/// the leg from `a` to the RIS and `d2_m` the leg from the RIS to `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
    pub d1_m: f64,
    pub d2_m: f64,
    pub pl_db: f64,
    pub snr_db: f64,
    pub rate_bps: f64,
}

impl Edge {
    pub fn other(&self, from: usize) -> usize {
        if from == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn feasible(&self, req: &LinkRequirement) -> bool {
        req.admits(self.snr_db)
    }
}

/// Link budget of a direct hop. Hops shorter than the reference distance are
/// evaluated at the reference distance.
pub fn direct_budget(d: f64, p: &RadioParams) -> LinkBudget {
    let pl = pl_direct_db(d.max(p.d0), p).expect("distance clamped to d0");
    LinkBudget::from_path_loss(pl, p)
}

/// Link budget of a reflected hop, clamped like [`direct_budget`].
pub fn ris_budget(d1: f64, d2: f64, p: &RadioParams) -> LinkBudget {
    let m2 = f64::from(p.m_surfaces).powi(2);
    let floor = p.d0 / m2;
    let (d1, d2) = if m2 * (d1 + d2) < p.d0 {
        (0.5 * floor, 0.5 * floor)
    } else {
        (d1.max(f64::MIN_POSITIVE), d2.max(f64::MIN_POSITIVE))
    };
    let pl = pl_ris_db(d1, d2, p).expect("distance clamped to d0");
    LinkBudget::from_path_loss(pl, p)
}

#[derive(Debug, Clone)]
pub struct AugmentedGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
    mbs_index: usize,
    ris_sites: Vec<RisSite>,
    /// Per RIS, ascending indices of the nodes it serves.
    ris_served: Vec<Vec<usize>>,
    radio: RadioParams,
}

impl AugmentedGraph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// Edge ids incident to `node`, in ascending id order.
    pub fn incident(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn mbs_index(&self) -> usize {
        self.mbs_index
    }

    pub fn ris_sites(&self) -> &[RisSite] {
        &self.ris_sites
    }

    pub fn radio(&self) -> &RadioParams {
        &self.radio
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn candidate_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.role == NodeRole::Candidate)
            .map(|(i, _)| i)
    }

    /// Node whose position coincides with `p`, if any.
    pub fn node_at(&self, p: Point2D) -> Option<usize> {
        self.nodes.iter().position(|n| n.position.distance(p) <= GEOM_EPS)
    }

    fn push_edge(&mut self, edge: Edge) {
        let id = self.edges.len();
        self.adjacency[edge.a].push(id);
        self.adjacency[edge.b].push(id);
        self.edges.push(edge);
    }

    /// Builds a graph from explicit parts; used by tests and tools that
    /// assemble synthetic topologies. Adjacency is derived from edge order.
    pub fn from_parts(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        mbs_index: usize,
        radio: RadioParams,
    ) -> Result<Self, GraphError> {
        if mbs_index >= nodes.len() {
            return Err(GraphError::NoSuchNode(mbs_index));
        }
        let mut g = AugmentedGraph {
            adjacency: vec![Vec::new(); nodes.len()],
            nodes,
            edges: Vec::with_capacity(edges.len()),
            mbs_index,
            ris_sites: Vec::new(),
            ris_served: Vec::new(),
            radio,
        };
        for e in edges {
            if e.a >= g.nodes.len() || e.b >= g.nodes.len() {
                return Err(GraphError::NoSuchNode(e.a.max(e.b)));
            }
            g.push_edge(e);
        }
        Ok(g)
    }

    /// Links a probe at `pos` would get: direct hops to every visible node in
    /// index order, then reflected hops per RIS (in RIS order) to every node
    /// served by the same RIS. The existing node is endpoint `a`, the probe
    /// (index `node_count()`) is endpoint `b`.
    pub fn probe_links(&self, pos: Point2D, map: &ObstacleMap) -> Vec<Edge> {
        let probe = self.nodes.len();
        let mut links = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.position.distance(pos);
            if d > GEOM_EPS && visible_unchecked(n.position, pos, map) {
                links.push(make_edge(i, probe, EdgeKind::Direct, d, 0.0, &self.radio));
            }
        }
        for (r, ris) in self.ris_sites.iter().enumerate() {
            if !ris.serves(pos, map) {
                continue;
            }
            let d2 = ris.position.distance(pos);
            for &i in &self.ris_served[r] {
                let d1 = self.nodes[i].position.distance(ris.position);
                if self.nodes[i].position.distance(pos) > GEOM_EPS {
                    links.push(make_edge(i, probe, EdgeKind::ViaRis(r), d1, d2, &self.radio));
                }
            }
        }
        links
    }

    /// Copy of the graph with one extra probe node at `pos` wired up as in
    /// [`probe_links`](Self::probe_links). Returns the graph and the probe index.
    pub fn with_probe(&self, pos: Point2D, map: &ObstacleMap) -> (AugmentedGraph, usize) {
        let links = self.probe_links(pos, map);
        let mut g = self.clone();
        let probe = g.nodes.len();
        g.nodes.push(Node {
            position: pos,
            role: NodeRole::Probe,
        });
        g.adjacency.push(Vec::new());
        for (r, ris) in g.ris_sites.iter().enumerate() {
            if ris.serves(pos, map) {
                g.ris_served[r].push(probe);
            }
        }
        for e in links {
            g.push_edge(e);
        }
        (g, probe)
    }

    /// Same nodes, direct edges only.
    pub fn without_ris(&self) -> AugmentedGraph {
        let nodes = self.nodes.clone();
        let edges = self
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Direct)
            .copied()
            .collect();
        let mut g = AugmentedGraph::from_parts(nodes, edges, self.mbs_index, self.radio)
            .expect("subset of a valid graph");
        g.ris_served = Vec::new();
        g
    }
}

fn make_edge(a: usize, b: usize, kind: EdgeKind, d1: f64, d2: f64, p: &RadioParams) -> Edge {
    let budget = match kind {
        EdgeKind::Direct => direct_budget(d1, p),
        EdgeKind::ViaRis(_) => ris_budget(d1, d2, p),
    };
    Edge {
        a,
        b,
        kind,
        d1_m: d1,
        d2_m: d2,
        pl_db: budget.pl_db,
        snr_db: budget.snr_db,
        rate_bps: budget.rate_bps,
    }
}

/// Attaches link budgets to every LOS edge of `vg` and adds one reflected
/// edge per RIS for every unordered node pair that the RIS serves on its
/// front side. Direct edges come first (in `vg` order), then reflected edges
/// grouped by RIS.
pub fn augment_with_ris(
    vg: &VisibilityGraph,
    mbs_index: usize,
    ris: &[RisSite],
    map: &ObstacleMap,
    p: &RadioParams,
) -> Result<AugmentedGraph, GraphError> {
    if mbs_index >= vg.nodes.len() {
        return Err(GraphError::NoSuchNode(mbs_index));
    }
    for (r, site) in ris.iter().enumerate() {
        site.validate(r, map)?;
        if let Some(node) = vg
            .nodes
            .iter()
            .position(|n| n.distance(site.position) <= GEOM_EPS)
        {
            return Err(GraphError::RisOnNode { ris: r, node });
        }
    }
    let nodes: Vec<Node> = vg
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &position)| Node {
            position,
            role: if i == mbs_index {
                NodeRole::Mbs
            } else {
                NodeRole::Candidate
            },
        })
        .collect();
    let mut g = AugmentedGraph::from_parts(nodes, Vec::new(), mbs_index, *p)?;
    for e in &vg.edges {
        g.push_edge(make_edge(e.a, e.b, EdgeKind::Direct, e.length_m, 0.0, p));
    }
    g.ris_sites = ris.to_vec();
    g.ris_served = ris
        .iter()
        .map(|site| {
            (0..g.nodes.len())
                .filter(|&i| site.serves(g.nodes[i].position, map))
                .collect()
        })
        .collect();
    for (r, site) in ris.iter().enumerate() {
        let served = g.ris_served[r].clone();
        for (k, &i) in served.iter().enumerate() {
            for &j in &served[k + 1..] {
                let d1 = g.nodes[i].position.distance(site.position);
                let d2 = site.position.distance(g.nodes[j].position);
                g.push_edge(make_edge(i, j, EdgeKind::ViaRis(r), d1, d2, p));
            }
        }
    }
    Ok(g)
}

/// Routing cost of one hop: path loss plus the per-hop penalty when the hop
/// meets the requirement, `f64::INFINITY` otherwise.
pub fn edge_cost(edge: &Edge, req: &LinkRequirement, penalty_p: f64) -> f64 {
    if edge.feasible(req) {
        edge.pl_db + penalty_p
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_visibility_graph, Building, Rect};
    use crate::radio::{pl_ris_db, rate_bps, snr_db};
    use approx::assert_relative_eq;

    fn p(x: f64, y: f64) -> Point2D {
        Point2D::new(x, y)
    }

    fn wall_map() -> ObstacleMap {
        // One wall between x = -1 and x = 1; a RIS sits on its top facade.
        let bounds = Rect::new(p(-100.0, -100.0), p(100.0, 100.0)).unwrap();
        let wall = Building::rectangle(p(-1.0, -50.0), p(1.0, 10.0)).unwrap();
        ObstacleMap::new(bounds, vec![wall]).unwrap()
    }

    fn top_ris() -> RisSite {
        RisSite {
            position: p(0.0, 10.0),
            normal: p(0.0, 1.0),
        }
    }

    #[test]
    fn blocked_pair_gets_single_reflected_edge() {
        let map = wall_map();
        let low = [p(-20.0, 5.0), p(20.0, 15.0)];
        let vg3 = build_visibility_graph(&low, &map).unwrap();
        assert!(vg3.edges.is_empty());
        // (-20, 5) is below the facade plane, so the RIS does not serve it.
        let g = augment_with_ris(&vg3, 0, &[top_ris()], &map, &RadioParams::default()).unwrap();
        assert!(g.edges().is_empty());

        let both_up = [p(-20.0, 10.5), p(20.0, 30.0)];
        let blocked_map = {
            let bounds = Rect::new(p(-100.0, -100.0), p(100.0, 100.0)).unwrap();
            let wall = Building::rectangle(p(-1.0, -50.0), p(1.0, 10.0)).unwrap();
            let screen = Building::rectangle(p(-5.0, 12.0), p(-4.0, 40.0)).unwrap();
            ObstacleMap::new(bounds, vec![wall, screen]).unwrap()
        };
        let vg4 = build_visibility_graph(&both_up, &blocked_map).unwrap();
        assert!(vg4.edges.is_empty(), "screen blocks the direct path");
        let g = augment_with_ris(&vg4, 0, &[top_ris()], &blocked_map, &RadioParams::default())
            .unwrap();
        assert_eq!(g.edges().len(), 1);
        let e = g.edge(0);
        assert_eq!(e.kind, EdgeKind::ViaRis(0));
        let d1 = both_up[0].distance(top_ris().position);
        let d2 = both_up[1].distance(top_ris().position);
        assert_relative_eq!(e.pl_db, pl_ris_db(d1, d2, g.radio()).unwrap(), epsilon = 1e-12);
        assert_relative_eq!(e.rate_bps, rate_bps(snr_db(e.pl_db, g.radio()), g.radio()));
    }

    #[test]
    fn node_behind_facade_not_served() {
        let ris = top_ris();
        assert!(!ris.faces(p(5.0, 9.0)));
        assert!(!ris.faces(p(5.0, 10.0)), "in-plane points are not served");
        assert!(ris.faces(p(5.0, 10.5)));
    }

    #[test]
    fn no_ris_keeps_visibility_edges() {
        let map = wall_map();
        let pts = [p(-20.0, 20.0), p(20.0, 20.0), p(-20.0, -20.0), p(20.0, -20.0)];
        let vg = build_visibility_graph(&pts, &map).unwrap();
        let g = augment_with_ris(&vg, 0, &[], &map, &RadioParams::default()).unwrap();
        assert_eq!(g.edges().len(), vg.edges.len());
        for (e, v) in g.edges().iter().zip(&vg.edges) {
            assert_eq!((e.a, e.b, e.kind), (v.a, v.b, EdgeKind::Direct));
            assert_eq!(e.pl_db, pl_direct_db(v.length_m, g.radio()).unwrap());
        }
    }

    #[test]
    fn direct_and_reflected_edges_coexist() {
        let map = wall_map();
        let pts = [p(-20.0, 20.0), p(20.0, 20.0)];
        let vg = build_visibility_graph(&pts, &map).unwrap();
        let g = augment_with_ris(&vg, 0, &[top_ris()], &map, &RadioParams::default()).unwrap();
        let kinds: Vec<EdgeKind> = g.edges().iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EdgeKind::Direct, EdgeKind::ViaRis(0)]);
        assert_eq!(g.incident(0), &[0, 1]);
    }

    #[test]
    fn ris_validation() {
        let map = wall_map();
        let off = RisSite {
            position: p(30.0, 30.0),
            normal: p(0.0, 1.0),
        };
        assert_eq!(off.validate(0, &map), Err(GraphError::RisOffFacade(0)));
        let inward = RisSite {
            position: p(0.0, 10.0),
            normal: p(0.0, -1.0),
        };
        assert_eq!(inward.validate(1, &map), Err(GraphError::RisFacingInward(1)));
        let skewed = RisSite {
            position: p(0.0, 10.0),
            normal: p(0.0, 2.0),
        };
        assert_eq!(skewed.validate(2, &map), Err(GraphError::BadRisNormal(2)));
        top_ris().validate(3, &map).unwrap();
    }

    #[test]
    fn edge_cost_branches() {
        let req = LinkRequirement::from_snr_db(41.0);
        let mk = |kind, pl: f64| {
            let b = LinkBudget::from_path_loss(pl, &RadioParams::default());
            Edge {
                a: 0,
                b: 1,
                kind,
                d1_m: 1.0,
                d2_m: 0.0,
                pl_db: pl,
                snr_db: b.snr_db,
                rate_bps: b.rate_bps,
            }
        };
        assert_relative_eq!(edge_cost(&mk(EdgeKind::Direct, 81.6), &req, 10.0), 91.6);
        assert_relative_eq!(edge_cost(&mk(EdgeKind::ViaRis(0), 72.04), &req, 10.0), 82.04);
        assert_eq!(edge_cost(&mk(EdgeKind::Direct, 110.5), &req, 10.0), f64::INFINITY);
        assert_eq!(edge_cost(&mk(EdgeKind::Direct, 110.0), &req, 0.0), 110.0);
    }

    #[test]
    fn short_hops_clamped_to_reference_distance() {
        let p = RadioParams::default();
        assert_eq!(direct_budget(1.0, &p), direct_budget(5.0, &p));
        assert_eq!(direct_budget(1.0, &p).pl_db, 39.0);
        let tiny = ris_budget(0.1, 0.1, &p);
        assert_relative_eq!(tiny.pl_db, 39.0 - 15.0, epsilon = 1e-12);
    }
}
