//! Plain-text artifact formats: dense layer CSV, eigengap tables, the
//! dendrogram as JSON and Newick, the plan document and the quality report.
//! Floats are written with the shortest round-trip representation, so
//! identical runs produce byte-identical files.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::grid::BusGraph;
use crate::hierarchy::{Dendrogram, IslandingPlan, MergeStep};
use crate::layers::{CoherencyMatrix, WeightLayer};
use crate::quality::PartitionQuality;
use crate::spectral::SpectrumReport;

/// Serializes possibly-infinite conductances: finite values as numbers,
/// infinities as the string "inf" (JSON has no infinity literal).
pub mod maybe_infinite {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_f64(*value)
        } else {
            serializer.serialize_str("inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Ok(v),
            Raw::Text(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Text(s) => Err(D::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}

/// Dense N x N CSV of a weight matrix, one row per line.
pub fn layer_csv(layer: &WeightLayer) -> String {
    matrix_csv(&layer.weights)
}

/// Dense N x N CSV of a coherency-coefficient matrix.
pub fn coherency_csv(cc: &CoherencyMatrix) -> String {
    matrix_csv(&cc.values)
}

fn matrix_csv(matrix: &nalgebra::DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", matrix[(i, j)]).expect("string write");
        }
        out.push('\n');
    }
    out
}

/// Eigengap table for one or more named spectra. Rows are 1-based pairs
/// (lambda_i, lambda_{i+1}) with the raw and normalized gap.
pub fn eigengaps_csv(tables: &[(String, &SpectrumReport)]) -> String {
    let mut out = String::from("layer,i,lambda_i,lambda_next,gamma,gamma_n\n");
    for (name, report) in tables {
        for i in 1..report.n() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                name,
                i,
                report.eigenvalues[i - 1],
                report.eigenvalues[i],
                report.gaps[i - 1],
                report.gaps_normalized[i - 1]
            )
            .expect("string write");
        }
    }
    out
}

/// Dendrogram with bus labels, serializable as JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DendrogramDocument {
    pub leaves: Vec<String>,
    pub merges: Vec<MergeStep>,
}

impl DendrogramDocument {
    pub fn new(dendrogram: &Dendrogram, graph: &BusGraph) -> Self {
        Self {
            leaves: graph.labels().to_vec(),
            merges: dendrogram.merges.clone(),
        }
    }
}

/// Newick rendering of the dendrogram forest, one tree per line. Branch
/// lengths are the height drop from parent to child (leaves sit at height
/// zero).
pub fn newick(dendrogram: &Dendrogram, graph: &BusGraph) -> String {
    let n = dendrogram.n_leaves;
    let heights: Vec<f64> = dendrogram.merges.iter().map(|m| m.height).collect();
    let height_of = |id: usize| if id < n { 0.0 } else { heights[id - n] };

    fn render(
        id: usize,
        dendrogram: &Dendrogram,
        graph: &BusGraph,
        height_of: &dyn Fn(usize) -> f64,
        out: &mut String,
    ) {
        let n = dendrogram.n_leaves;
        if id < n {
            out.push_str(&escape_label(graph.label(crate::grid::BusId(id))));
        } else {
            let merge = &dendrogram.merges[id - n];
            out.push('(');
            for (index, child) in [merge.left, merge.right].into_iter().enumerate() {
                if index > 0 {
                    out.push(',');
                }
                render(child, dendrogram, graph, height_of, out);
                write!(out, ":{}", height_of(id) - height_of(child)).expect("string write");
            }
            out.push(')');
        }
    }

    // Roots are the ids never consumed by a later merge.
    let mut consumed = vec![false; 2 * n.max(1)];
    for merge in &dendrogram.merges {
        consumed[merge.left] = true;
        consumed[merge.right] = true;
    }
    let mut out = String::new();
    for id in (0..n + dendrogram.merges.len()).filter(|&id| !consumed[id]) {
        render(id, dendrogram, graph, &height_of, &mut out);
        out.push_str(";\n");
    }
    out
}

fn escape_label(label: &str) -> String {
    if label
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
    {
        label.to_string()
    } else {
        format!("'{}'", label.replace('\'', "''"))
    }
}

/// One island of the plan document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IslandDocument {
    pub id: usize,
    pub buses: Vec<String>,
    pub generators: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineDocument {
    pub from: String,
    pub to: String,
}

/// The plan artifact: islands, lines to open, cut height and per-layer
/// quality tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanDocument {
    pub k: usize,
    pub cut_height: Option<f64>,
    pub islands: Vec<IslandDocument>,
    pub lines_to_open: Vec<LineDocument>,
    pub quality: Vec<PartitionQuality>,
}

impl PlanDocument {
    pub fn new(plan: &IslandingPlan, graph: &BusGraph, quality: Vec<PartitionQuality>) -> Self {
        Self {
            k: plan.k,
            cut_height: plan.cut_height,
            islands: plan
                .islands
                .iter()
                .enumerate()
                .map(|(id, buses)| IslandDocument {
                    id,
                    buses: buses.iter().map(|b| graph.label(*b).to_string()).collect(),
                    generators: buses
                        .iter()
                        .filter(|b| graph.is_generator(**b))
                        .map(|b| graph.label(*b).to_string())
                        .collect(),
                })
                .collect(),
            lines_to_open: plan
                .lines_to_open
                .iter()
                .map(|(a, b)| LineDocument {
                    from: graph.label(*a).to_string(),
                    to: graph.label(*b).to_string(),
                })
                .collect(),
            quality,
        }
    }
}

fn format_phi(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.6}")
    } else {
        "inf".to_string()
    }
}

/// Human-readable quality tables, one section per layer.
pub fn quality_text(tables: &[PartitionQuality]) -> String {
    let mut out = String::new();
    for table in tables {
        writeln!(out, "layer: {} ({:?} conductance)", table.layer, table.mode)
            .expect("string write");
        writeln!(
            out,
            "  {:<8} {:>6} {:>14} {:>14} {:>14}",
            "island", "size", "volume", "boundary", "conductance"
        )
        .expect("string write");
        for island in &table.islands {
            writeln!(
                out,
                "  {:<8} {:>6} {:>14.6} {:>14.6} {:>14}",
                island.island,
                island.size,
                island.volume,
                island.boundary,
                format_phi(island.conductance)
            )
            .expect("string write");
        }
        writeln!(
            out,
            "  worst conductance: {}",
            format_phi(table.worst_conductance)
        )
        .expect("string write");
        writeln!(
            out,
            "  lambda_k = {:.6}; lower bound lambda_k/2 = {:.6}; sqrt(lambda_k) = {:.6}; sqrt(lambda_k/delta^3) = {:.6} (delta = {})",
            table.lambda_k,
            table.cheeger_lower,
            table.sqrt_lambda_k,
            table.cheeger_upper_independent,
            table.delta
        )
        .expect("string write");
        out.push('\n');
    }
    out
}
