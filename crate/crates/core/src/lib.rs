//! Intentional-islanding planning for transmission grids by multi-layer
//! spectral clustering.
//!
//! The pipeline builds several edge-weight views of the same grid (pure
//! topology, admittance magnitude, average power flow, and measured
//! frequency coherency), turns each into a normalized Laplacian, picks an
//! embedding dimension from the normalized eigengaps, fuses the per-layer
//! spectral embeddings into one unified matrix, and clusters buses with
//! connectivity-constrained Ward linkage. Cutting the resulting dendrogram
//! yields an islanding plan — a bus partition plus the transmission lines
//! to open — which is then scored with conductance metrics and spectral
//! bounds.
//!
//! Everything is deterministic; there is no randomness anywhere in the
//! pipeline, so identical inputs give byte-identical artifacts.

pub mod dynamics;
pub mod error;
pub mod export;
pub mod grid;
pub mod hierarchy;
pub mod layers;
pub mod manifold;
pub mod pipeline;
pub mod quality;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{
    load_case, load_measurements, parse_case, save_case, Branch, BranchStatus, BusGraph, BusId,
    CaseFile, FrequencySeries, MeasurementSet,
};
pub use hierarchy::{cut, ward_cluster, Dendrogram, IslandingPlan, MergeStep};
pub use layers::{
    admittance_layer, coherency_layer, coherency_matrix, frequency_deviation, powerflow_layer,
    topology_layer, CoherencyMatrix, CoherencyMode, LayerKind, NegativePolicy, WeightLayer,
};
pub use manifold::{embed, unified_embedding, unify, EmbeddingSet, UnifiedLaplacian};
pub use pipeline::{analyze_spectra, build_layers, plan_islands, PlanConfig, PlanOutcome};
pub use quality::{
    cheeger_check, conductance, k_way_expansion_bruteforce, score_plan, CheegerReport,
    ConductanceMode, PartitionQuality,
};
pub use spectral::{
    eigendecompose, eigengaps, laplacian, select_k, LaplacianView, SpectrumReport,
};
