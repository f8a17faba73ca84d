//! Connectivity-constrained agglomerative clustering with Ward linkage on
//! embedding rows, dendrogram construction, and dendrogram cutting into an
//! islanding plan.
//!
//! Cluster ids follow the stepwise convention: leaves are `0..N-1` and the
//! cluster created by merge `m` has id `N + m`. In constrained mode only
//! cluster pairs joined by at least one in-service branch may merge, so a
//! disconnected grid yields a forest with one tree per component and the
//! feasible island counts start at the component count.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BusGraph, BusId};
use crate::layers::WeightLayer;

/// One agglomeration step. `left < right` are the merged cluster ids and
/// `height` is the Ward distance between them at merge time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Stepwise dendrogram (possibly a forest in constrained mode).
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<MergeStep>,
}

impl Dendrogram {
    /// Number of clusters remaining after all merges (1 for a full tree).
    pub fn tree_count(&self) -> usize {
        self.n_leaves - self.merges.len()
    }

    /// Leaf memberships of every active cluster after `level` merges,
    /// keyed by cluster id. Level 0 is all singletons.
    pub fn clusters_at_level(&self, level: usize) -> BTreeMap<usize, Vec<usize>> {
        let mut members: BTreeMap<usize, Vec<usize>> =
            (0..self.n_leaves).map(|i| (i, vec![i])).collect();
        for (step, merge) in self.merges.iter().take(level).enumerate() {
            let mut left = members.remove(&merge.left).expect("left cluster active");
            let mut right = members.remove(&merge.right).expect("right cluster active");
            left.append(&mut right);
            left.sort_unstable();
            members.insert(self.n_leaves + step, left);
        }
        members
    }
}

fn triangle_index(a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    b * (b - 1) / 2 + a
}

/// Agglomerative Ward clustering over the rows of `points` (N x K).
///
/// Squared inter-cluster distances start as squared Euclidean distances
/// between rows and are updated with the variance-minimizing recurrence
/// d(u,v)^2 = [(|v|+|s|) d(v,s)^2 + (|v|+|t|) d(v,t)^2 - |v| d(s,t)^2] / T
/// where u = s+t and T = |s|+|t|+|v|. At every step the admissible pair
/// with the smallest distance merges; ties break toward the smaller cluster
/// id, then the smaller partner id.
///
/// `constraint` restricts admissible pairs to clusters joined by a positive
/// entry of the given weight matrix (pass the in-service topology layer);
/// `None` runs unconstrained.
pub fn ward_cluster(points: &DMatrix<f64>, constraint: Option<&WeightLayer>) -> Result<Dendrogram> {
    let n = points.nrows();
    if let Some(layer) = constraint {
        if layer.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: layer.n(),
            });
        }
    }
    if n == 0 {
        return Ok(Dendrogram {
            n_leaves: 0,
            merges: Vec::new(),
        });
    }

    let id_capacity = 2 * n - 1;
    let mut squared = vec![0.0_f64; triangle_index(0, id_capacity.max(2))];
    let mut adjacent = vec![false; squared.len()];
    let mut sizes = vec![0usize; id_capacity];

    for i in 0..n {
        sizes[i] = 1;
    }
    for j in 1..n {
        for i in 0..j {
            let mut d2 = 0.0;
            for c in 0..points.ncols() {
                let diff = points[(i, c)] - points[(j, c)];
                d2 += diff * diff;
            }
            squared[triangle_index(i, j)] = d2;
        }
    }
    if let Some(layer) = constraint {
        for j in 1..n {
            for i in 0..j {
                adjacent[triangle_index(i, j)] = layer.weights[(i, j)] > 0.0;
            }
        }
    }

    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let pair = triangle_index(a, b);
                if constraint.is_some() && !adjacent[pair] {
                    continue;
                }
                let d2 = squared[pair];
                if best.map_or(true, |(best_d2, _, _)| d2 < best_d2) {
                    best = Some((d2, a, b));
                }
            }
        }
        let Some((d2_st, s, t)) = best else {
            break; // forest: no admissible pair remains
        };

        let u = n + merges.len();
        let merged_size = sizes[s] + sizes[t];
        for &v in &active {
            if v == s || v == t {
                continue;
            }
            let d2_vs = squared[triangle_index(v.min(s), v.max(s))];
            let d2_vt = squared[triangle_index(v.min(t), v.max(t))];
            let total = (sizes[v] + merged_size) as f64;
            let d2_uv = ((sizes[v] + sizes[s]) as f64 * d2_vs
                + (sizes[v] + sizes[t]) as f64 * d2_vt
                - sizes[v] as f64 * d2_st)
                / total;
            squared[triangle_index(v, u)] = d2_uv;
            if constraint.is_some() {
                adjacent[triangle_index(v, u)] = adjacent[triangle_index(v.min(s), v.max(s))]
                    || adjacent[triangle_index(v.min(t), v.max(t))];
            }
        }
        sizes[u] = merged_size;
        active.retain(|&id| id != s && id != t);
        active.push(u);
        merges.push(MergeStep {
            left: s,
            right: t,
            height: d2_st.max(0.0).sqrt(),
            size: merged_size,
        });
    }

    Ok(Dendrogram {
        n_leaves: n,
        merges,
    })
}

/// Bus-to-island assignment with the lines whose opening realizes it.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandingPlan {
    pub k: usize,
    /// Bus sets, each sorted, ordered by smallest member.
    pub islands: Vec<Vec<BusId>>,
    /// Island index per dense bus index.
    pub assignment: Vec<usize>,
    /// In-service branches crossing islands, smaller endpoint first.
    pub lines_to_open: Vec<(BusId, BusId)>,
    /// Height of the first undone merge; `None` when no merge was undone.
    pub cut_height: Option<f64>,
}

/// Cuts a dendrogram into exactly `k` islands by undoing the last merges,
/// then derives the crossing lines from the in-service topology.
pub fn cut(dendrogram: &Dendrogram, k: usize, graph: &BusGraph) -> Result<IslandingPlan> {
    let n = dendrogram.n_leaves;
    if graph.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: graph.n(),
        });
    }
    let min_k = dendrogram.tree_count();
    if k < 1 || k < min_k || k > n {
        return Err(Error::InfeasibleK {
            k,
            min: min_k.max(1),
            max: n,
        });
    }

    let kept = n - k;
    let clusters = dendrogram.clusters_at_level(kept);
    let mut islands: Vec<Vec<usize>> = clusters.into_values().collect();
    islands.sort_by_key(|members| members[0]);

    let mut assignment = vec![0usize; n];
    for (island, members) in islands.iter().enumerate() {
        for &bus in members {
            assignment[bus] = island;
        }
    }

    let mut lines_to_open: Vec<(BusId, BusId)> = graph
        .in_service_branches()
        .filter(|b| assignment[b.from.0] != assignment[b.to.0])
        .map(|b| {
            let (a, z) = b.key();
            (BusId(a), BusId(z))
        })
        .collect();
    lines_to_open.sort();

    Ok(IslandingPlan {
        k,
        islands: islands
            .into_iter()
            .map(|members| members.into_iter().map(BusId).collect())
            .collect(),
        assignment,
        lines_to_open,
        cut_height: if kept < dendrogram.merges.len() {
            Some(dendrogram.merges[kept].height)
        } else {
            None
        },
    })
}

impl IslandingPlan {
    /// True when every island contains exactly one generator bus.
    pub fn separates_generators(&self, graph: &BusGraph) -> bool {
        self.islands.iter().all(|island| {
            island
                .iter()
                .filter(|&&bus| graph.is_generator(bus))
                .count()
                == 1
        })
    }
}
