//! Resolved run configuration. After defaulting, every field is explicit;
//! the serialized form alone reproduces a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use islander_core::layers::{CoherencyMode, LayerKind, NegativePolicy};
use islander_core::pipeline::PlanConfig;
use islander_core::quality::ConductanceMode;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: PathBuf,
    pub measurements: Option<PathBuf>,
    /// Unordered label pairs of lines to outage before planning.
    pub outages: Vec<(String, String)>,
    pub layers: Vec<LayerKind>,
    pub alpha: f64,
    /// Embedding dimension; `None` means select by eigengap vote. The
    /// resolved config written next to the artifacts always carries the
    /// value actually used.
    pub embedding_k: Option<usize>,
    /// Island count; `None` follows the embedding dimension.
    pub islands: Option<usize>,
    pub coherency_mode: CoherencyMode,
    pub negative_cc: NegativePolicy,
    /// Explicit start of the coherency window, seconds.
    pub window_start: Option<f64>,
    /// Disturbance time; with `idle` it derives the window start when no
    /// explicit `window_start` is given.
    pub event_time: Option<f64>,
    pub idle: f64,
    pub conductance_mode: ConductanceMode,
    pub delta: f64,
    pub row_normalize: bool,
    pub export_layers: bool,
    /// Always true: the pipeline has no randomness to seed.
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: PathBuf::new(),
            measurements: None,
            outages: Vec::new(),
            layers: LayerKind::ALL.to_vec(),
            alpha: 0.5,
            embedding_k: None,
            islands: None,
            coherency_mode: CoherencyMode::EdgeRestricted,
            negative_cc: NegativePolicy::Clamp,
            window_start: None,
            event_time: None,
            idle: 0.5,
            conductance_mode: ConductanceMode::Standard,
            delta: 0.3,
            row_normalize: false,
            export_layers: false,
            deterministic: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
    }

    /// Effective start of the coherency window: explicit value first, then
    /// event time plus idle, otherwise the full series.
    pub fn effective_window_start(&self) -> Option<f64> {
        self.window_start
            .or_else(|| self.event_time.map(|t| t + self.idle))
    }

    pub fn plan_config(&self) -> PlanConfig {
        PlanConfig {
            layers: self.layers.clone(),
            alpha: self.alpha,
            embedding_k: self.embedding_k,
            islands: self.islands,
            coherency_mode: self.coherency_mode,
            negative_policy: self.negative_cc,
            window_start: self.effective_window_start(),
            conductance_mode: self.conductance_mode,
            delta: self.delta,
            row_normalize: self.row_normalize,
            constrained: true,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }
}
