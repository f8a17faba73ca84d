//! Partition-quality metrics: cluster volume, boundary, conductance, the
//! exact k-way expansion constant by exhaustive enumeration on small graphs,
//! and verification of the spectral lower bound lambda_k / 2 <= rho(k).
//!
//! Two conductance definitions coexist. `PaperLiteral` divides the boundary
//! by the intra-cluster (ordered-pair) weight sum; `Standard` divides by the
//! smaller of the degree-sum volumes of the cluster and its complement, which
//! keeps conductance in [0, 1] and is the form the spectral bound is stated
//! for. Bound checks always use `Standard`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::IslandingPlan;
use crate::layers::{LayerKind, WeightLayer};
use crate::spectral::{eigendecompose, laplacian, SpectrumReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConductanceMode {
    PaperLiteral,
    Standard,
}

/// Boundary weight of an island: total weight from inside to outside,
/// accumulated over unordered crossing pairs in global index order (so the
/// value is bit-identical for an island and its complement).
pub fn boundary(layer: &WeightLayer, inside: &[bool]) -> f64 {
    let n = layer.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if inside[i] != inside[j] {
                total += layer.weights[(i, j)];
            }
        }
    }
    total
}

fn intra_volume(layer: &WeightLayer, inside: &[bool]) -> f64 {
    let n = layer.n();
    let mut unordered = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if inside[i] && inside[j] {
                unordered += layer.weights[(i, j)];
            }
        }
    }
    2.0 * unordered
}

fn degree_volume(degrees: &[f64], inside: &[bool], flag: bool) -> f64 {
    degrees
        .iter()
        .zip(inside)
        .filter(|(_, &m)| m == flag)
        .map(|(d, _)| d)
        .sum()
}

fn membership(n: usize, island: &[usize]) -> Result<Vec<bool>> {
    if island.is_empty() {
        return Err(Error::EmptyIsland);
    }
    let mut inside = vec![false; n];
    for &bus in island {
        if bus >= n {
            return Err(Error::DimensionMismatch { expected: n, got: bus + 1 });
        }
        inside[bus] = true;
    }
    Ok(inside)
}

fn quotient(boundary: f64, volume: f64) -> f64 {
    if volume > 0.0 {
        boundary / volume
    } else if boundary > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Volume, boundary and conductance of one island under the given mode.
pub fn island_metrics(
    layer: &WeightLayer,
    island: &[usize],
    mode: ConductanceMode,
) -> Result<(f64, f64, f64)> {
    let inside = membership(layer.n(), island)?;
    let b = boundary(layer, &inside);
    match mode {
        ConductanceMode::PaperLiteral => {
            let vol = intra_volume(layer, &inside);
            Ok((vol, b, quotient(b, vol)))
        }
        ConductanceMode::Standard => {
            let degrees = layer.degrees();
            let vol = degree_volume(&degrees, &inside, true);
            let vol_rest = degree_volume(&degrees, &inside, false);
            Ok((vol, b, quotient(b, vol.min(vol_rest))))
        }
    }
}

/// Conductance of one island.
pub fn conductance(layer: &WeightLayer, island: &[usize], mode: ConductanceMode) -> Result<f64> {
    island_metrics(layer, island, mode).map(|(_, _, phi)| phi)
}

/// Hard cap on exact partition enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 12;

fn max_conductance_of_partition(
    layer: &WeightLayer,
    degrees: &[f64],
    assignment: &[usize],
    k: usize,
) -> f64 {
    let n = layer.n();
    let total_volume: f64 = degrees.iter().sum();
    let mut volumes = vec![0.0; k];
    let mut boundaries = vec![0.0; k];
    for i in 0..n {
        volumes[assignment[i]] += degrees[i];
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if assignment[i] != assignment[j] {
                let w = layer.weights[(i, j)];
                boundaries[assignment[i]] += w;
                boundaries[assignment[j]] += w;
            }
        }
    }
    let mut worst = 0.0_f64;
    for block in 0..k {
        let phi = quotient(
            boundaries[block],
            volumes[block].min(total_volume - volumes[block]),
        );
        worst = worst.max(phi);
    }
    worst
}

/// Exact k-way expansion constant: the minimum over every partition of the
/// buses into exactly k non-empty blocks of the worst per-block standard
/// conductance. Exponential; guarded to n <= 12.
pub fn k_way_expansion_bruteforce(layer: &WeightLayer, k: usize) -> Result<f64> {
    let n = layer.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::BruteForceTooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if k < 1 || k > n {
        return Err(Error::InfeasibleK { k, min: 1, max: n });
    }
    let degrees = layer.degrees();
    let mut assignment = vec![0usize; n];
    let mut best = f64::INFINITY;

    // Restricted-growth enumeration: element 0 is pinned to block 0 and
    // element i may open at most one new block; prune branches that can no
    // longer reach exactly k blocks.
    fn recurse(
        layer: &WeightLayer,
        degrees: &[f64],
        assignment: &mut [usize],
        position: usize,
        used: usize,
        k: usize,
        best: &mut f64,
    ) {
        let n = assignment.len();
        if position == n {
            if used == k {
                let worst = max_conductance_of_partition(layer, degrees, assignment, k);
                if worst < *best {
                    *best = worst;
                }
            }
            return;
        }
        if used + (n - position) < k {
            return; // not enough elements left to open the remaining blocks
        }
        let open_limit = (used + 1).min(k);
        for block in 0..open_limit {
            assignment[position] = block;
            let next_used = used.max(block + 1);
            recurse(layer, degrees, assignment, position + 1, next_used, k, best);
        }
    }

    recurse(layer, &degrees, &mut assignment, 1, 1, k, &mut best);
    Ok(best)
}

/// Outcome of checking the spectral bounds for one (layer, k) pair.
#[derive(Debug, Clone, Serialize)]
pub struct CheegerReport {
    pub k: usize,
    pub lambda_k: f64,
    pub rho_k: f64,
    /// lambda_k / 2, the constant-free lower bound on rho(k).
    pub lower_bound: f64,
    pub lower_bound_holds: bool,
    /// sqrt(lambda_k): the upper-bound side scales with this, but its
    /// constant is unknown, so it is reported rather than asserted.
    pub sqrt_lambda_k: f64,
    /// sqrt(lambda_k / delta^3), the gap-assumption form of the bound.
    pub independent_bound: f64,
    pub delta: f64,
}

pub const CHEEGER_TOL: f64 = 1e-9;

/// Verifies lambda_k / 2 <= rho(k) with rho(k) by exhaustive enumeration.
/// `delta` must lie in (0, 1/3).
pub fn cheeger_check(
    spectrum: &SpectrumReport,
    layer: &WeightLayer,
    k: usize,
    delta: f64,
) -> Result<CheegerReport> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::CaseSchema(format!(
            "delta must lie in (0, 1/3), got {delta}"
        )));
    }
    if k < 1 || k > spectrum.n() {
        return Err(Error::InfeasibleK {
            k,
            min: 1,
            max: spectrum.n(),
        });
    }
    let rho_k = k_way_expansion_bruteforce(layer, k)?;
    let lambda_k = spectrum.lambda(k);
    let lower_bound = lambda_k / 2.0;
    Ok(CheegerReport {
        k,
        lambda_k,
        rho_k,
        lower_bound,
        lower_bound_holds: lower_bound <= rho_k + CHEEGER_TOL,
        sqrt_lambda_k: lambda_k.max(0.0).sqrt(),
        independent_bound: (lambda_k.max(0.0) / delta.powi(3)).sqrt(),
        delta,
    })
}

/// Per-island quality figures for one layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IslandQuality {
    pub island: usize,
    pub size: usize,
    pub volume: f64,
    pub boundary: f64,
    #[serde(with = "crate::export::maybe_infinite")]
    pub conductance: f64,
}

/// Quality table of a whole partition against one layer, with the spectral
/// bound context for the partition's k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionQuality {
    pub layer: LayerKind,
    pub mode: ConductanceMode,
    pub islands: Vec<IslandQuality>,
    #[serde(with = "crate::export::maybe_infinite")]
    pub worst_conductance: f64,
    pub lambda_k: f64,
    /// lambda_k / 2.
    pub cheeger_lower: f64,
    pub sqrt_lambda_k: f64,
    /// sqrt(lambda_k / delta^3).
    pub cheeger_upper_independent: f64,
    pub delta: f64,
}

/// Scores a plan against every given layer: per-island volume, boundary and
/// conductance plus the layer spectrum's bound quantities at k = |islands|.
pub fn score_plan(
    plan: &IslandingPlan,
    layers: &[WeightLayer],
    mode: ConductanceMode,
    delta: f64,
) -> Result<Vec<PartitionQuality>> {
    let mut tables = Vec::with_capacity(layers.len());
    for layer in layers {
        if layer.n() != plan.assignment.len() {
            return Err(Error::DimensionMismatch {
                expected: plan.assignment.len(),
                got: layer.n(),
            });
        }
        let spectrum = eigendecompose(&laplacian(layer, true))?;
        let lambda_k = spectrum.lambda(plan.k.min(spectrum.n()));
        let mut islands = Vec::with_capacity(plan.islands.len());
        let mut worst = 0.0_f64;
        for (index, island) in plan.islands.iter().enumerate() {
            let members: Vec<usize> = island.iter().map(|b| b.0).collect();
            let (volume, b, phi) = island_metrics(layer, &members, mode)?;
            worst = worst.max(phi);
            islands.push(IslandQuality {
                island: index,
                size: members.len(),
                volume,
                boundary: b,
                conductance: phi,
            });
        }
        tables.push(PartitionQuality {
            layer: layer.kind,
            mode,
            islands,
            worst_conductance: worst,
            lambda_k,
            cheeger_lower: lambda_k / 2.0,
            sqrt_lambda_k: lambda_k.max(0.0).sqrt(),
            cheeger_upper_independent: (lambda_k.max(0.0) / delta.powi(3)).sqrt(),
            delta,
        });
    }
    Ok(tables)
}
