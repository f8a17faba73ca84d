//! End-to-end islanding pipeline: weight layers from the (post-outage)
//! grid, normalized Laplacians, eigengap-driven embedding dimension,
//! subspace fusion, constrained Ward clustering, dendrogram cut and
//! quality scoring. Everything is deterministic: identical inputs and
//! configuration produce identical outputs, bit for bit.

use crate::error::{Error, Result};
use crate::grid::{BusGraph, MeasurementSet};
use crate::hierarchy::{cut, ward_cluster, Dendrogram, IslandingPlan};
use crate::layers::{
    admittance_layer, coherency_layer_from_measurements, powerflow_layer, topology_layer,
    CoherencyMode, LayerKind, NegativePolicy, WeightLayer,
};
use crate::manifold::{unified_embedding, unified_spectrum, unify, UnifiedLaplacian};
use crate::quality::{score_plan, ConductanceMode, PartitionQuality};
use crate::spectral::{eigendecompose, laplacian, select_k, LaplacianView, SpectrumReport};

/// Fully explicit pipeline configuration. `Default` gives the reference
/// behavior: all four layers, alpha 0.5, automatic K and island count,
/// edge-restricted clamped coherency, standard conductance reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    /// Layers to fuse, in order (the order also breaks selection ties).
    pub layers: Vec<LayerKind>,
    /// Subspace-fusion trade-off weight, >= 0.
    pub alpha: f64,
    /// Embedding dimension override; `None` selects by eigengap vote.
    pub embedding_k: Option<usize>,
    /// Island-count override; `None` uses the embedding dimension.
    pub islands: Option<usize>,
    pub coherency_mode: CoherencyMode,
    pub negative_policy: NegativePolicy,
    /// Drop measurement samples before this time. `None` keeps everything.
    pub window_start: Option<f64>,
    pub conductance_mode: ConductanceMode,
    /// Gap parameter for the K-independent bound report, in (0, 1/3).
    pub delta: f64,
    /// Renormalize embedding rows to the unit sphere before clustering.
    pub row_normalize: bool,
    /// Restrict merges to topology-adjacent clusters.
    pub constrained: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            layers: LayerKind::ALL.to_vec(),
            alpha: 0.5,
            embedding_k: None,
            islands: None,
            coherency_mode: CoherencyMode::EdgeRestricted,
            negative_policy: NegativePolicy::Clamp,
            window_start: None,
            conductance_mode: ConductanceMode::Standard,
            delta: 0.3,
            row_normalize: false,
            constrained: true,
        }
    }
}

/// Builds the configured weight layers from a (post-outage) graph, each
/// max-normalized so heterogeneous magnitudes share one range.
pub fn build_layers(
    graph: &BusGraph,
    measurements: Option<&MeasurementSet>,
    cfg: &PlanConfig,
) -> Result<Vec<WeightLayer>> {
    if cfg.layers.is_empty() {
        return Err(Error::CaseSchema("at least one layer must be enabled".into()));
    }
    let mut layers = Vec::with_capacity(cfg.layers.len());
    for kind in &cfg.layers {
        let layer = match kind {
            LayerKind::Topology => topology_layer(graph),
            LayerKind::Admittance => admittance_layer(graph)?,
            LayerKind::PowerFlow => powerflow_layer(graph)?,
            LayerKind::FrequencyCoherency => {
                let measurements = measurements.ok_or(Error::MissingMeasurements)?;
                let (layer, _) = coherency_layer_from_measurements(
                    measurements,
                    graph,
                    cfg.window_start,
                    cfg.coherency_mode,
                    cfg.negative_policy,
                )?;
                layer
            }
        };
        layers.push(layer.max_normalized());
    }
    Ok(layers)
}

/// Per-layer spectra, the unified matrix and its spectrum, plus the
/// embedding dimension that was selected or imposed.
#[derive(Debug, Clone)]
pub struct SpectralAnalysis {
    pub layers: Vec<WeightLayer>,
    pub laplacians: Vec<LaplacianView>,
    pub layer_reports: Vec<(LayerKind, SpectrumReport)>,
    pub unified: UnifiedLaplacian,
    pub unified_report: SpectrumReport,
    pub embedding_k: usize,
}

/// Majority vote over the per-layer eigengap argmaxes. Each layer votes for
/// its own normalized-eigengap argmax over indices `2..=N-1`; the most
/// frequent vote wins and ties resolve to the earliest voting layer in the
/// configured order. Graphs too small to vote (N < 3) fall back to K = 1.
pub fn auto_embedding_k(reports: &[(LayerKind, SpectrumReport)]) -> Result<usize> {
    let n = reports
        .first()
        .map(|(_, r)| r.n())
        .ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
    if n < 3 {
        return Ok(1);
    }
    let mut votes = Vec::with_capacity(reports.len());
    for (_, report) in reports {
        votes.push(select_k(report, 2, n - 1)?);
    }
    let top = votes
        .iter()
        .map(|candidate| votes.iter().filter(|v| *v == candidate).count())
        .max()
        .expect("at least one vote");
    Ok(*votes
        .iter()
        .find(|candidate| votes.iter().filter(|v| v == candidate).count() == top)
        .expect("plurality winner exists"))
}

/// Runs the spectral half of the pipeline: layers, Laplacians, per-layer
/// spectra, embedding-dimension choice and the unified matrix.
pub fn analyze_spectra(
    graph: &BusGraph,
    measurements: Option<&MeasurementSet>,
    cfg: &PlanConfig,
) -> Result<SpectralAnalysis> {
    let layers = build_layers(graph, measurements, cfg)?;
    let laplacians: Vec<LaplacianView> =
        layers.iter().map(|layer| laplacian(layer, true)).collect();
    let mut layer_reports = Vec::with_capacity(layers.len());
    for lap in &laplacians {
        let mut report = eigendecompose(lap)?;
        if lap.n() >= 3 {
            report.selected_k = select_k(&report, 2, lap.n() - 1).ok();
        }
        layer_reports.push((lap.source, report));
    }
    let embedding_k = match cfg.embedding_k {
        Some(k) => {
            if k < 1 || k > graph.n() {
                return Err(Error::EmbeddingDim { k, n: graph.n() });
            }
            k
        }
        None => auto_embedding_k(&layer_reports)?,
    };
    let unified = unify(&laplacians, embedding_k, cfg.alpha)?;
    let mut unified_report = unified_spectrum(&unified)?;
    unified_report.selected_k = Some(embedding_k);
    Ok(SpectralAnalysis {
        layers,
        laplacians,
        layer_reports,
        unified,
        unified_report,
        embedding_k,
    })
}

/// Everything a planning run produces.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: IslandingPlan,
    pub dendrogram: Dendrogram,
    pub analysis: SpectralAnalysis,
    pub quality: Vec<PartitionQuality>,
}

/// End-to-end planning on an already-outaged graph. The island count
/// defaults to the embedding dimension when not overridden.
pub fn plan_islands(
    graph: &BusGraph,
    measurements: Option<&MeasurementSet>,
    cfg: &PlanConfig,
) -> Result<PlanOutcome> {
    let analysis = analyze_spectra(graph, measurements, cfg)?;
    let mut points = unified_embedding(&analysis.unified, analysis.embedding_k)?;
    if cfg.row_normalize {
        for mut row in points.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }
    let topology = topology_layer(graph);
    let constraint = cfg.constrained.then_some(&topology);
    let dendrogram = ward_cluster(&points, constraint)?;
    let islands_k = cfg.islands.unwrap_or(analysis.embedding_k);
    let plan = cut(&dendrogram, islands_k, graph)?;
    let quality = score_plan(&plan, &analysis.layers, cfg.conductance_mode, cfg.delta)?;
    Ok(PlanOutcome {
        plan,
        dendrogram,
        analysis,
        quality,
    })
}
