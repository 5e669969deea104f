//! Minimum-cost backhaul routes from the macro base station.
//!
//! Hop cost is path loss plus a fixed per-hop penalty; hops that miss the
//! requirement are excluded. Routes are ordered by total cost, then hop count,
//! then the lexicographic node sequence, which makes every query
//! deterministic even on symmetric maps.
//!
//! Two searches share that order: a plain node-level Dijkstra, and a layered
//! one over `(node, hops)` states for a bounded number of hops.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::{edge_cost, AugmentedGraph, Edge, EdgeKind, GraphError};
use crate::radio::LinkRequirement;

/// A route from the MBS to some node.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Starts at the MBS, ends at the destination.
    pub node_sequence: Vec<usize>,
    /// Edge ids into the graph the path was computed on.
    pub edge_ids: Vec<usize>,
    pub edge_kinds: Vec<EdgeKind>,
    pub hop_count: usize,
    /// `f64::INFINITY` for the zero-hop path.
    pub bottleneck_rate_bps: f64,
    pub total_cost: f64,
}

/// Throughput of a path: the slowest hop. The zero-hop path to the MBS itself
/// has no limiting hop and reports `f64::INFINITY`.
pub fn bottleneck_rate(path: &PathResult) -> f64 {
    path.bottleneck_rate_bps
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    cost: f64,
    hops: usize,
    node: usize,
    state: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.hops.cmp(&self.hops))
            .then(other.node.cmp(&self.node))
            .then(other.state.cmp(&self.state))
    }
}

/// Single-source search result. With a hop bound, states are `(node, hops)`
/// pairs laid out layer by layer; without one, a state is a node.
#[derive(Debug, Clone)]
pub struct RouteTree {
    node_count: usize,
    max_hops: Option<usize>,
    cost: Vec<f64>,
    hops: Vec<usize>,
    /// `(previous state, edge id)`.
    pred: Vec<Option<(usize, usize)>>,
    bottleneck: Vec<f64>,
}

/// Location of a route inside a [`RouteTree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteRef {
    pub state: usize,
    pub cost: f64,
    pub hops: usize,
    pub bottleneck_rate_bps: f64,
}

fn routing_costs(
    g: &AugmentedGraph,
    req: &LinkRequirement,
    penalty_p: f64,
) -> Result<Vec<f64>, GraphError> {
    if !(penalty_p >= 0.0 && penalty_p.is_finite()) {
        return Err(GraphError::NegativePenalty(penalty_p));
    }
    g.edges()
        .iter()
        .enumerate()
        .map(|(id, e)| {
            let c = edge_cost(e, req, penalty_p);
            if c <= 0.0 {
                Err(GraphError::NonPositiveCost { edge: id, cost: c })
            } else {
                Ok(c)
            }
        })
        .collect()
}

impl RouteTree {
    /// Unbounded search over feasible edges.
    pub fn unbounded(
        g: &AugmentedGraph,
        req: &LinkRequirement,
        penalty_p: f64,
    ) -> Result<Self, GraphError> {
        Self::search(g, req, penalty_p, None)
    }

    /// Search restricted to routes of at most `max_hops` edges.
    pub fn hop_bounded(
        g: &AugmentedGraph,
        req: &LinkRequirement,
        penalty_p: f64,
        max_hops: usize,
    ) -> Result<Self, GraphError> {
        Self::search(g, req, penalty_p, Some(max_hops))
    }

    fn state_of(&self, node: usize, h: usize) -> usize {
        match self.max_hops {
            Some(_) => h * self.node_count + node,
            None => node,
        }
    }

    fn node_of(&self, state: usize) -> usize {
        state % self.node_count
    }

    fn search(
        g: &AugmentedGraph,
        req: &LinkRequirement,
        penalty_p: f64,
        max_hops: Option<usize>,
    ) -> Result<Self, GraphError> {
        let costs = routing_costs(g, req, penalty_p)?;
        let n = g.node_count();
        let layers = max_hops.map_or(1, |h| h + 1);
        let total = n * layers;
        let mut tree = RouteTree {
            node_count: n,
            max_hops,
            cost: vec![f64::INFINITY; total],
            hops: vec![usize::MAX; total],
            pred: vec![None; total],
            bottleneck: vec![f64::INFINITY; total],
        };
        let mut settled = vec![false; total];
        let src = g.mbs_index();
        tree.cost[src] = 0.0;
        tree.hops[src] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry {
            cost: 0.0,
            hops: 0,
            node: src,
            state: src,
        });

        while let Some(top) = heap.pop() {
            let s = top.state;
            if settled[s] || top.cost != tree.cost[s] || top.hops != tree.hops[s] {
                continue;
            }
            settled[s] = true;
            let h = tree.hops[s];
            if max_hops.is_some_and(|limit| h >= limit) {
                continue;
            }
            let u = top.node;
            for &id in g.incident(u) {
                let c = costs[id];
                if c.is_infinite() {
                    continue;
                }
                let edge = g.edge(id);
                let v = edge.other(u);
                let ns = tree.state_of(v, h + 1);
                if settled[ns] {
                    continue;
                }
                let nc = tree.cost[s] + c;
                let nh = h + 1;
                if tree.improves(ns, s, nc, nh) {
                    tree.cost[ns] = nc;
                    tree.hops[ns] = nh;
                    tree.pred[ns] = Some((s, id));
                    tree.bottleneck[ns] = tree.bottleneck[s].min(edge.rate_bps);
                    heap.push(HeapEntry {
                        cost: nc,
                        hops: nh,
                        node: v,
                        state: ns,
                    });
                }
            }
        }
        Ok(tree)
    }

    /// Whether reaching `target` from `from` with `(cost, hops)` beats the
    /// label `target` currently holds.
    fn improves(&self, target: usize, from: usize, cost: f64, hops: usize) -> bool {
        match cost.total_cmp(&self.cost[target]) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => match hops.cmp(&self.hops[target]) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => match self.pred[target] {
                    Some((prev, _)) if prev != from => {
                        self.state_nodes(from) < self.state_nodes(prev)
                    }
                    _ => false,
                },
            },
        }
    }

    /// Node sequence of the route stored at `state`, MBS first.
    pub fn state_nodes(&self, state: usize) -> Vec<usize> {
        let mut seq = vec![self.node_of(state)];
        let mut cur = state;
        while let Some((prev, _)) = self.pred[cur] {
            seq.push(self.node_of(prev));
            cur = prev;
        }
        seq.reverse();
        seq
    }

    fn state_edges(&self, state: usize) -> Vec<usize> {
        let mut ids = Vec::new();
        let mut cur = state;
        while let Some((prev, id)) = self.pred[cur] {
            ids.push(id);
            cur = prev;
        }
        ids.reverse();
        ids
    }

    /// Best route to `node` using at most `limit` hops (clamped to the tree's
    /// own bound). `None` when unreachable.
    pub fn best_within(&self, node: usize, limit: Option<usize>) -> Option<RouteRef> {
        if node >= self.node_count {
            return None;
        }
        let to_ref = |s: usize| {
            self.cost[s].is_finite().then(|| RouteRef {
                state: s,
                cost: self.cost[s],
                hops: self.hops[s],
                bottleneck_rate_bps: self.bottleneck[s],
            })
        };
        match self.max_hops {
            None => to_ref(node).filter(|r| limit.is_none_or(|l| r.hops <= l)),
            Some(bound) => {
                let top = limit.map_or(bound, |l| l.min(bound));
                (0..=top)
                    .filter_map(|h| to_ref(self.state_of(node, h)))
                    .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.hops.cmp(&b.hops)))
            }
        }
    }

    pub fn best(&self, node: usize) -> Option<RouteRef> {
        self.best_within(node, None)
    }

    /// Materializes the best route to `node`.
    pub fn path(&self, g: &AugmentedGraph, node: usize) -> Option<PathResult> {
        self.best(node).map(|r| self.materialize(g, r))
    }

    pub fn materialize(&self, g: &AugmentedGraph, r: RouteRef) -> PathResult {
        let edge_ids = self.state_edges(r.state);
        PathResult {
            node_sequence: self.state_nodes(r.state),
            edge_kinds: edge_ids.iter().map(|&id| g.edge(id).kind).collect(),
            hop_count: edge_ids.len(),
            edge_ids,
            bottleneck_rate_bps: r.bottleneck_rate_bps,
            total_cost: r.cost,
        }
    }

    /// Best route to a leaf that is not part of the searched graph, reached
    /// through one of `links` (each joining an existing node `a` to the leaf).
    /// Equivalent to adding the leaf and its links to the graph and searching
    /// again, because a route ending at the leaf never passes through it
    /// earlier. Returns the chosen link index with the combined route.
    pub fn extend_to_leaf(
        &self,
        links: &[Edge],
        req: &LinkRequirement,
        penalty_p: f64,
        max_hops: Option<usize>,
    ) -> Option<(usize, RouteRef)> {
        let prefix_limit = match max_hops {
            Some(0) => return None,
            Some(h) => Some(h - 1),
            None => None,
        };
        let mut best: Option<(usize, RouteRef, usize)> = None;
        for (k, link) in links.iter().enumerate() {
            let c = edge_cost(link, req, penalty_p);
            if c.is_infinite() {
                continue;
            }
            let Some(prefix) = self.best_within(link.a, prefix_limit) else {
                continue;
            };
            let cand = RouteRef {
                state: prefix.state,
                cost: prefix.cost + c,
                hops: prefix.hops + 1,
                bottleneck_rate_bps: prefix.bottleneck_rate_bps.min(link.rate_bps),
            };
            let better = match &best {
                None => true,
                Some((_, cur, cur_state)) => match cand
                    .cost
                    .total_cmp(&cur.cost)
                    .then(cand.hops.cmp(&cur.hops))
                {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        prefix.state != *cur_state
                            && self.state_nodes(prefix.state) < self.state_nodes(*cur_state)
                    }
                },
            };
            if better {
                best = Some((k, cand, prefix.state));
            }
        }
        best.map(|(k, r, _)| (k, r))
    }
}

fn check_node(g: &AugmentedGraph, node: usize) -> Result<(), GraphError> {
    if node < g.node_count() {
        Ok(())
    } else {
        Err(GraphError::NoSuchNode(node))
    }
}

/// Minimum-cost all-feasible route from the MBS to `dst`, or `None` when no
/// such route exists. `dst == mbs` yields the empty zero-hop path.
pub fn shortest_path(
    g: &AugmentedGraph,
    dst: usize,
    req: &LinkRequirement,
    penalty_p: f64,
) -> Result<Option<PathResult>, GraphError> {
    check_node(g, dst)?;
    Ok(RouteTree::unbounded(g, req, penalty_p)?.path(g, dst))
}

/// Like [`shortest_path`], restricted to routes of at most `max_hops` edges.
pub fn shortest_path_within(
    g: &AugmentedGraph,
    dst: usize,
    req: &LinkRequirement,
    penalty_p: f64,
    max_hops: usize,
) -> Result<Option<PathResult>, GraphError> {
    check_node(g, dst)?;
    Ok(RouteTree::hop_bounded(g, req, penalty_p, max_hops)?.path(g, dst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2D;
    use crate::graph::{Node, NodeRole};
    use crate::radio::{LinkBudget, RadioParams};

    pub(crate) fn edge(a: usize, b: usize, kind: EdgeKind, pl: f64) -> Edge {
        let lb = LinkBudget::from_path_loss(pl, &RadioParams::default());
        Edge {
            a,
            b,
            kind,
            d1_m: 1.0,
            d2_m: 0.0,
            pl_db: pl,
            snr_db: lb.snr_db,
            rate_bps: lb.rate_bps,
        }
    }

    pub(crate) fn graph(n: usize, edges: Vec<Edge>) -> AugmentedGraph {
        let nodes = (0..n)
            .map(|i| Node {
                position: Point2D::new(i as f64, 0.0),
                role: if i == 0 { NodeRole::Mbs } else { NodeRole::Candidate },
            })
            .collect();
        AugmentedGraph::from_parts(nodes, edges, 0, RadioParams::default()).unwrap()
    }

    const REQ41: LinkRequirement = LinkRequirement { snr_min_db: 41.0 };

    #[test]
    fn single_direct_edge() {
        let g = graph(2, vec![edge(0, 1, EdgeKind::Direct, 80.0)]);
        let p = shortest_path(&g, 1, &REQ41, 200.0).unwrap().unwrap();
        assert_eq!(p.node_sequence, vec![0, 1]);
        assert_eq!(p.hop_count, 1);
        assert_eq!(p.edge_kinds, vec![EdgeKind::Direct]);
        assert_eq!(p.total_cost, 280.0);
        assert_eq!(bottleneck_rate(&p), g.edge(0).rate_bps);
    }

    #[test]
    fn detour_around_infeasible_edge() {
        // 0-2 misses 41 dB (PL 120 > 110); 0-1-2 is feasible.
        let g = graph(
            3,
            vec![
                edge(0, 2, EdgeKind::Direct, 120.0),
                edge(0, 1, EdgeKind::Direct, 90.0),
                edge(1, 2, EdgeKind::Direct, 95.0),
            ],
        );
        let p = shortest_path(&g, 2, &REQ41, 10.0).unwrap().unwrap();
        assert_eq!(p.node_sequence, vec![0, 1, 2]);
        assert_eq!(p.total_cost, 205.0);
        // looser requirement: direct edge wins
        let loose = LinkRequirement::from_snr_db(11.0);
        let p = shortest_path(&g, 2, &loose, 10.0).unwrap().unwrap();
        assert_eq!(p.node_sequence, vec![0, 2]);
    }

    #[test]
    fn zero_hop_path_to_mbs() {
        let g = graph(2, vec![edge(0, 1, EdgeKind::Direct, 80.0)]);
        let p = shortest_path(&g, 0, &REQ41, 200.0).unwrap().unwrap();
        assert_eq!(p.hop_count, 0);
        assert_eq!(p.node_sequence, vec![0]);
        assert!(p.edge_kinds.is_empty());
        assert_eq!(bottleneck_rate(&p), f64::INFINITY);
    }

    #[test]
    fn unreachable_and_bad_inputs() {
        let g = graph(3, vec![edge(0, 1, EdgeKind::Direct, 80.0)]);
        assert_eq!(shortest_path(&g, 2, &REQ41, 200.0).unwrap(), None);
        assert_eq!(
            shortest_path(&g, 7, &REQ41, 200.0),
            Err(GraphError::NoSuchNode(7))
        );
        assert_eq!(
            shortest_path(&g, 1, &REQ41, -1.0),
            Err(GraphError::NegativePenalty(-1.0))
        );
    }

    #[test]
    fn parallel_edges_pick_cheaper() {
        let g = graph(
            2,
            vec![
                edge(0, 1, EdgeKind::Direct, 100.0),
                edge(0, 1, EdgeKind::ViaRis(0), 90.0),
                edge(0, 1, EdgeKind::ViaRis(1), 95.0),
            ],
        );
        let p = shortest_path(&g, 1, &REQ41, 0.0).unwrap().unwrap();
        assert_eq!(p.edge_kinds, vec![EdgeKind::ViaRis(0)]);
        assert_eq!(p.edge_ids, vec![1]);
    }

    #[test]
    fn ties_break_on_hops_then_sequence() {
        // Two equal-cost two-hop routes 0-2-3 and 0-1-3: lexicographic wins.
        let g = graph(
            4,
            vec![
                edge(0, 2, EdgeKind::Direct, 50.0),
                edge(2, 3, EdgeKind::Direct, 50.0),
                edge(0, 1, EdgeKind::Direct, 50.0),
                edge(1, 3, EdgeKind::Direct, 50.0),
            ],
        );
        let p = shortest_path(&g, 3, &REQ41, 0.0).unwrap().unwrap();
        assert_eq!(p.node_sequence, vec![0, 1, 3]);

        // Equal cost, different hop counts: fewer hops wins.
        let g = graph(
            3,
            vec![
                edge(0, 1, EdgeKind::Direct, 50.0),
                edge(1, 2, EdgeKind::Direct, 50.0),
                edge(0, 2, EdgeKind::Direct, 100.0),
            ],
        );
        let p = shortest_path(&g, 2, &REQ41, 0.0).unwrap().unwrap();
        assert_eq!(p.node_sequence, vec![0, 2]);
    }

    #[test]
    fn hop_bound_forces_costlier_route() {
        // Cheap 3-hop chain versus an expensive direct hop.
        let g = graph(
            4,
            vec![
                edge(0, 1, EdgeKind::Direct, 30.0),
                edge(1, 2, EdgeKind::Direct, 30.0),
                edge(2, 3, EdgeKind::Direct, 40.0),
                edge(0, 3, EdgeKind::Direct, 105.0),
            ],
        );
        let free = shortest_path(&g, 3, &REQ41, 0.0).unwrap().unwrap();
        assert_eq!(free.hop_count, 3);
        let bounded = shortest_path_within(&g, 3, &REQ41, 0.0, 2).unwrap().unwrap();
        assert_eq!(bounded.node_sequence, vec![0, 3]);
        assert_eq!(shortest_path_within(&g, 2, &REQ41, 0.0, 1).unwrap(), None);
    }

    #[test]
    fn bottleneck_is_slowest_hop() {
        let p = RadioParams::default();
        // SNR 41 dB and 21 dB hops.
        let g = graph(
            3,
            vec![
                edge(0, 1, EdgeKind::Direct, 110.0),
                edge(1, 2, EdgeKind::Direct, 130.0),
            ],
        );
        let path = shortest_path(&g, 2, &LinkRequirement::from_snr_db(11.0), 200.0)
            .unwrap()
            .unwrap();
        let slow = crate::radio::rate_bps(21.0, &p);
        assert_eq!(bottleneck_rate(&path), slow);
        assert!((slow / 1e6 - 107.3).abs() < 0.05);
        assert!((g.edge(0).rate_bps / 1e6 - 209.1).abs() < 0.05);
    }

    #[test]
    fn leaf_extension_matches_full_search() {
        let g = graph(
            3,
            vec![
                edge(0, 1, EdgeKind::Direct, 60.0),
                edge(1, 2, EdgeKind::Direct, 60.0),
            ],
        );
        let links = vec![
            edge(0, 3, EdgeKind::Direct, 115.0),
            edge(1, 3, EdgeKind::Direct, 70.0),
            edge(2, 3, EdgeKind::Direct, 50.0),
        ];
        let mut all = g.edges().to_vec();
        all.extend(links.iter().copied());
        let full = graph(4, all);
        for limit in [1usize, 2, 3, 5] {
            let tree = RouteTree::hop_bounded(&g, &REQ41, 20.0, limit).unwrap();
            let leaf = tree.extend_to_leaf(&links, &REQ41, 20.0, Some(limit));
            let direct = shortest_path_within(&full, 3, &REQ41, 20.0, limit).unwrap();
            match (leaf, direct) {
                (None, None) => {}
                (Some((_, r)), Some(p)) => {
                    assert_eq!(r.cost, p.total_cost);
                    assert_eq!(r.hops, p.hop_count);
                    assert_eq!(r.bottleneck_rate_bps, p.bottleneck_rate_bps);
                }
                other => panic!("mismatch at limit {limit}: {other:?}"),
            }
        }
    }
}
