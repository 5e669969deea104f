//! Hop-count maps and reachable-set counting.

use std::collections::{BTreeSet, VecDeque};

use crate::graph::{AugmentedGraph, GraphError};
use crate::radio::LinkRequirement;

/// Fewest feasible hops from the MBS to every node, `None` beyond `n_max`.
/// A reflected hop counts as one hop.
pub fn min_hop_map(
    g: &AugmentedGraph,
    req: &LinkRequirement,
    n_max: usize,
) -> Result<Vec<Option<usize>>, GraphError> {
    if n_max == 0 {
        return Err(GraphError::ZeroHopBudget);
    }
    let mut hops = vec![None; g.node_count()];
    let src = g.mbs_index();
    hops[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let h = hops[u].expect("queued nodes are labelled");
        if h >= n_max {
            continue;
        }
        for &id in g.incident(u) {
            let e = g.edge(id);
            if !e.feasible(req) {
                continue;
            }
            let v = e.other(u);
            if hops[v].is_none() {
                hops[v] = Some(h + 1);
                queue.push_back(v);
            }
        }
    }
    Ok(hops)
}

/// Candidate nodes whose backhaul can be closed within `n` hops, every hop
/// meeting `snr_min_db`.
pub fn reachable_set(
    g: &AugmentedGraph,
    n: usize,
    snr_min_db: f64,
) -> Result<BTreeSet<usize>, GraphError> {
    let hops = min_hop_map(g, &LinkRequirement::from_snr_db(snr_min_db), n)?;
    Ok(g.candidate_indices().filter(|&i| hops[i].is_some()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub snr_min_db: f64,
    pub n: usize,
    pub ris: bool,
    pub reached: usize,
    pub total: usize,
}

/// Reachable-candidate counts for every `(snr_min, n, variant)` with
/// `n = 1..=n_max`. Rows are ordered by requirement (input order), then
/// variant (without RIS first), then `n`.
pub fn coverage_curve(
    g_without_ris: &AugmentedGraph,
    g_with_ris: &AugmentedGraph,
    n_max: usize,
    snr_min_list: &[f64],
) -> Result<Vec<CoverageRow>, GraphError> {
    let same_nodes = g_without_ris.node_count() == g_with_ris.node_count()
        && g_without_ris.mbs_index() == g_with_ris.mbs_index()
        && g_without_ris
            .nodes()
            .iter()
            .zip(g_with_ris.nodes())
            .all(|(a, b)| a == b);
    if !same_nodes {
        return Err(GraphError::NodeSetMismatch);
    }
    let total = g_without_ris.candidate_indices().count();
    let mut rows = Vec::with_capacity(snr_min_list.len() * 2 * n_max);
    for &snr in snr_min_list {
        for (ris, g) in [(false, g_without_ris), (true, g_with_ris)] {
            let hops = min_hop_map(g, &LinkRequirement::from_snr_db(snr), n_max)?;
            let mut per_hop = vec![0usize; n_max + 1];
            for i in g.candidate_indices() {
                if let Some(h) = hops[i] {
                    per_hop[h] += 1;
                }
            }
            let mut reached = per_hop[0];
            for n in 1..=n_max {
                reached += per_hop[n];
                rows.push(CoverageRow {
                    snr_min_db: snr,
                    n,
                    ris,
                    reached,
                    total,
                });
            }
        }
    }
    Ok(rows)
}
