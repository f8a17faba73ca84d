//! Edge-weight layers: topology, admittance, power flow, and frequency
//! coherency. Each layer is an N x N symmetric nonnegative matrix with zero
//! diagonal over the same dense bus indexing, with nonzeros restricted to
//! in-service branches (the coherency layer can optionally be dense).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BusGraph, BusId, FrequencySeries, MeasurementSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Topology,
    Admittance,
    PowerFlow,
    FrequencyCoherency,
}

impl LayerKind {
    pub const ALL: [LayerKind; 4] = [
        LayerKind::Topology,
        LayerKind::Admittance,
        LayerKind::PowerFlow,
        LayerKind::FrequencyCoherency,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::Topology => "topology",
            LayerKind::Admittance => "admittance",
            LayerKind::PowerFlow => "power_flow",
            LayerKind::FrequencyCoherency => "frequency_coherency",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "topology" => Ok(LayerKind::Topology),
            "admittance" => Ok(LayerKind::Admittance),
            "power_flow" => Ok(LayerKind::PowerFlow),
            "frequency_coherency" => Ok(LayerKind::FrequencyCoherency),
            other => Err(format!(
                "unknown layer {other:?}; expected one of topology, admittance, power_flow, frequency_coherency"
            )),
        }
    }
}

/// One symmetric nonnegative weight matrix over the bus set.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightLayer {
    pub kind: LayerKind,
    pub weights: DMatrix<f64>,
}

impl WeightLayer {
    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    /// Largest entry (0 for an all-zero layer).
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Divides by the largest entry so heterogeneous layers share a unified
    /// magnitude range. An all-zero layer is returned unchanged.
    pub fn max_normalized(&self) -> WeightLayer {
        let max = self.max_weight();
        if max <= 0.0 {
            return self.clone();
        }
        WeightLayer {
            kind: self.kind,
            weights: &self.weights / max,
        }
    }

    /// Degree of each bus: row sums of the weight matrix.
    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.weights.row(i).iter().sum())
            .collect()
    }
}

fn edge_layer(graph: &BusGraph, kind: LayerKind, weight: impl Fn(&crate::grid::Branch) -> f64) -> WeightLayer {
    let n = graph.n();
    let mut w = DMatrix::zeros(n, n);
    for branch in graph.in_service_branches() {
        let value = weight(branch);
        w[(branch.from.0, branch.to.0)] = value;
        w[(branch.to.0, branch.from.0)] = value;
    }
    WeightLayer { kind, weights: w }
}

/// Connectivity layer: 1 on every in-service branch.
pub fn topology_layer(graph: &BusGraph) -> WeightLayer {
    edge_layer(graph, LayerKind::Topology, |_| 1.0)
}

/// Admittance-magnitude layer: 1/sqrt(R^2 + X^2) on every in-service branch.
/// A shorter electrical distance means a stronger tie.
pub fn admittance_layer(graph: &BusGraph) -> Result<WeightLayer> {
    for branch in graph.in_service_branches() {
        if branch.resistance == 0.0 && branch.reactance == 0.0 {
            return Err(Error::ZeroImpedance {
                from: graph.label(branch.from).to_string(),
                to: graph.label(branch.to).to_string(),
            });
        }
    }
    Ok(edge_layer(graph, LayerKind::Admittance, |b| {
        1.0 / b.resistance.hypot(b.reactance)
    }))
}

/// Average absolute active-power flow per branch: (|P_ij| + |P_ji|) / 2.
pub fn powerflow_layer(graph: &BusGraph) -> Result<WeightLayer> {
    for branch in graph.in_service_branches() {
        if branch.flow_from.is_none() || branch.flow_to.is_none() {
            return Err(Error::MissingFlows {
                from: graph.label(branch.from).to_string(),
                to: graph.label(branch.to).to_string(),
            });
        }
    }
    Ok(edge_layer(graph, LayerKind::PowerFlow, |b| {
        let p_from = b.flow_from.expect("checked above");
        let p_to = b.flow_to.expect("checked above");
        (p_from.abs() + p_to.abs()) / 2.0
    }))
}

/// Per-unit frequency deviation from consecutive phase-angle samples:
/// the forward difference of the angle divided by dt, scaled by 1/omega_0.
/// Output length is one less than the sample count.
pub fn frequency_deviation(series: &FrequencySeries, omega0: f64) -> Result<Vec<f64>> {
    let dt = series.dt();
    if !(dt > 0.0) {
        return Err(Error::MeasurementSchema("zero timestep".into()));
    }
    Ok(series
        .angles
        .windows(2)
        .map(|w| (w[1] - w[0]) / dt / omega0)
        .collect())
}

/// Pairwise cosine similarity of frequency-deviation vectors, in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CoherencyMatrix {
    pub values: DMatrix<f64>,
    /// Time interval the deviation vectors were taken from.
    pub window: (f64, f64),
}

/// Cosine similarity of two deviation vectors. A zero vector carries no
/// dynamic evidence of coherency, so any pair involving one scores 0.
pub fn coherency_coefficient(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm_a = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (norm_a * norm_b))
}

/// Builds the full coherency-coefficient matrix from one deviation vector
/// per bus. The diagonal is 1; all vectors must share one length >= 1.
pub fn coherency_matrix(deviations: &[Vec<f64>], window: (f64, f64)) -> Result<CoherencyMatrix> {
    let n = deviations.len();
    if let Some(first) = deviations.first() {
        if first.is_empty() {
            return Err(Error::LengthMismatch(0, 0));
        }
        for d in deviations {
            if d.len() != first.len() {
                return Err(Error::LengthMismatch(first.len(), d.len()));
            }
        }
    }
    let mut values = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let c = coherency_coefficient(&deviations[i], &deviations[j])?;
            values[(i, j)] = c;
            values[(j, i)] = c;
        }
    }
    Ok(CoherencyMatrix { values, window })
}

/// Builds deviation vectors for every bus of the graph out of a measurement
/// set, optionally trimming each series to `t >= window_start`. Every bus
/// must be covered; absent buses are an error, never defaulted.
pub fn deviation_vectors(
    measurements: &MeasurementSet,
    graph: &BusGraph,
    window_start: Option<f64>,
) -> Result<(Vec<Vec<f64>>, (f64, f64))> {
    let mut missing: Vec<String> = measurements
        .missing
        .iter()
        .map(|b| graph.label(*b).to_string())
        .collect();
    missing.sort();
    if !missing.is_empty() {
        return Err(Error::MissingSeries(missing.join(", ")));
    }
    let omega0 = graph.nominal_omega();
    let mut vectors = Vec::with_capacity(graph.n());
    let mut window = (f64::NAN, f64::NAN);
    for i in 0..graph.n() {
        let series = measurements
            .series
            .get(&BusId(i))
            .ok_or_else(|| Error::MissingSeries(graph.label(BusId(i)).to_string()))?;
        let trimmed = match window_start {
            Some(start) => series.from_time(start).ok_or_else(|| {
                Error::InconsistentWindow(format!(
                    "window start {start} leaves fewer than 2 samples for bus {}",
                    graph.label(BusId(i))
                ))
            })?,
            None => series.clone(),
        };
        window = (trimmed.timestamps[0], trimmed.timestamps[trimmed.len() - 1]);
        vectors.push(frequency_deviation(&trimmed, omega0)?);
    }
    Ok((vectors, window))
}

/// Where the coherency layer places weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherencyMode {
    /// Weights only on in-service branches (the literal reading).
    EdgeRestricted,
    /// Weights on every off-diagonal pair.
    Dense,
}

/// How negative coherency coefficients map to nonnegative weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativePolicy {
    /// clamp(cc, 0, 1): incoherent pairs become weightless ties.
    Clamp,
    /// (cc + 1) / 2: shifts [-1, 1] onto [0, 1].
    Shift,
}

fn coherency_weight(cc: f64, policy: NegativePolicy) -> f64 {
    match policy {
        NegativePolicy::Clamp => cc.clamp(0.0, 1.0),
        NegativePolicy::Shift => ((cc + 1.0) / 2.0).clamp(0.0, 1.0),
    }
}

/// Coherency weight layer from a coefficient matrix.
pub fn coherency_layer(
    cc: &CoherencyMatrix,
    graph: &BusGraph,
    mode: CoherencyMode,
    policy: NegativePolicy,
) -> Result<WeightLayer> {
    let n = graph.n();
    if cc.values.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cc.values.nrows(),
        });
    }
    let mut w = DMatrix::zeros(n, n);
    match mode {
        CoherencyMode::EdgeRestricted => {
            for branch in graph.in_service_branches() {
                let (i, j) = (branch.from.0, branch.to.0);
                let value = coherency_weight(cc.values[(i, j)], policy);
                w[(i, j)] = value;
                w[(j, i)] = value;
            }
        }
        CoherencyMode::Dense => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let value = coherency_weight(cc.values[(i, j)], policy);
                    w[(i, j)] = value;
                    w[(j, i)] = value;
                }
            }
        }
    }
    Ok(WeightLayer {
        kind: LayerKind::FrequencyCoherency,
        weights: w,
    })
}

/// End-to-end coherency layer from raw measurements.
pub fn coherency_layer_from_measurements(
    measurements: &MeasurementSet,
    graph: &BusGraph,
    window_start: Option<f64>,
    mode: CoherencyMode,
    policy: NegativePolicy,
) -> Result<(WeightLayer, CoherencyMatrix)> {
    let (vectors, window) = deviation_vectors(measurements, graph, window_start)?;
    let cc = coherency_matrix(&vectors, window)?;
    let layer = coherency_layer(&cc, graph, mode, policy)?;
    Ok((layer, cc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_case, Branch, BranchStatus};
    use approx::assert_relative_eq;

    fn path_graph() -> BusGraph {
        parse_case(
            r#"{
            "buses": [{"label": "1"}, {"label": "2"}, {"label": "3"}],
            "branches": [
                {"from": "1", "to": "2", "r_pu": 0.0, "x_pu": 0.1, "p_from_mw": 10.0, "p_to_mw": -9.5},
                {"from": "2", "to": "3", "r_pu": 3.0, "x_pu": 4.0, "p_from_mw": 0.0, "p_to_mw": 0.0}
            ]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn topology_marks_branches_with_ones() {
        let layer = topology_layer(&path_graph());
        let w = &layer.weights;
        assert_eq!(w[(0, 1)], 1.0);
        assert_eq!(w[(1, 0)], 1.0);
        assert_eq!(w[(1, 2)], 1.0);
        assert_eq!(w[(2, 1)], 1.0);
        assert_eq!(w[(0, 2)], 0.0);
        assert_eq!(w[(0, 0)], 0.0);
    }

    #[test]
    fn branchless_graph_gives_zero_matrix() {
        let graph = parse_case(r#"{"buses": [{"label": "a"}, {"label": "b"}], "branches": []}"#)
            .unwrap();
        let layer = topology_layer(&graph);
        assert!(layer.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn admittance_is_inverse_impedance_magnitude() {
        let layer = admittance_layer(&path_graph()).unwrap();
        // (R, X) = (3, 4): |Z| = 5 so the weight is 0.2.
        assert_relative_eq!(layer.weights[(1, 2)], 0.2, max_relative = 1e-15);
        // (R, X) = (0, 0.5) would give 2.0; here (0, 0.1) gives 10.
        assert_relative_eq!(layer.weights[(0, 1)], 10.0, max_relative = 1e-15);
    }

    #[test]
    fn admittance_guards_zero_impedance() {
        // Bypass ingestion validation to exercise the layer-level guard.
        let graph = BusGraph::new_unchecked(
            vec!["a".into(), "b".into()],
            vec![false, false],
            vec![Branch {
                from: BusId(0),
                to: BusId(1),
                resistance: 0.0,
                reactance: 0.0,
                flow_from: None,
                flow_to: None,
                status: BranchStatus::InService,
            }],
            60.0,
        );
        assert!(matches!(
            admittance_layer(&graph),
            Err(Error::ZeroImpedance { .. })
        ));
    }

    #[test]
    fn powerflow_averages_absolute_flows() {
        let layer = powerflow_layer(&path_graph()).unwrap();
        assert_relative_eq!(layer.weights[(0, 1)], 9.75, max_relative = 1e-15);
        // Zero flow keeps the edge in the topology but weightless here.
        assert_eq!(layer.weights[(1, 2)], 0.0);
    }

    #[test]
    fn powerflow_requires_flow_values() {
        let graph = parse_case(
            r#"{
            "buses": [{"label": "a"}, {"label": "b"}],
            "branches": [{"from": "a", "to": "b", "r_pu": 0.0, "x_pu": 0.1}]
        }"#,
        )
        .unwrap();
        assert!(matches!(
            powerflow_layer(&graph),
            Err(Error::MissingFlows { .. })
        ));
    }

    #[test]
    fn powerflow_scales_homogeneously() {
        let base = path_graph();
        let scaled = parse_case(
            r#"{
            "buses": [{"label": "1"}, {"label": "2"}, {"label": "3"}],
            "branches": [
                {"from": "1", "to": "2", "r_pu": 0.0, "x_pu": 0.1, "p_from_mw": 30.0, "p_to_mw": -28.5},
                {"from": "2", "to": "3", "r_pu": 3.0, "x_pu": 4.0, "p_from_mw": 0.0, "p_to_mw": 0.0}
            ]
        }"#,
        )
        .unwrap();
        let w1 = powerflow_layer(&base).unwrap();
        let w3 = powerflow_layer(&scaled).unwrap();
        for (a, b) in w1.weights.iter().zip(w3.weights.iter()) {
            assert_relative_eq!(3.0 * a, *b, max_relative = 1e-12);
        }
    }

    #[test]
    fn deviation_of_constant_angles_is_zero() {
        let s = FrequencySeries::new(BusId(0), vec![0.0, 0.1, 0.2], vec![1.0, 1.0, 1.0], "a")
            .unwrap();
        let dev = frequency_deviation(&s, 2.0 * std::f64::consts::PI * 60.0).unwrap();
        assert_eq!(dev, vec![0.0, 0.0]);
    }

    #[test]
    fn linear_ramp_gives_constant_deviation() {
        let omega0 = 2.0 * std::f64::consts::PI * 60.0;
        let eps = 0.01;
        let timestamps: Vec<f64> = (0..5).map(|k| k as f64 * 0.02).collect();
        let angles: Vec<f64> = timestamps.iter().map(|t| omega0 * eps * t).collect();
        let s = FrequencySeries::new(BusId(0), timestamps, angles, "a").unwrap();
        let dev = frequency_deviation(&s, omega0).unwrap();
        assert_eq!(dev.len(), 4);
        for d in dev {
            assert_relative_eq!(d, eps, max_relative = 1e-12);
        }
    }

    #[test]
    fn deviation_hand_example() {
        let omega0 = 2.0 * std::f64::consts::PI * 60.0;
        let s = FrequencySeries::new(BusId(0), vec![0.0, 0.1, 0.2], vec![0.0, 0.1, 0.3], "a")
            .unwrap();
        let dev = frequency_deviation(&s, omega0).unwrap();
        // Forward differences 1.0 and 2.0 rad/s scaled by 1/omega0.
        assert_relative_eq!(dev[0], 2.6525823848649226e-3, max_relative = 1e-12);
        assert_relative_eq!(dev[1], 5.305164769729845e-3, max_relative = 1e-12);
    }

    #[test]
    fn coherency_of_identical_vectors_is_one() {
        let c = coherency_coefficient(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(c, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn coherency_of_orthogonal_vectors_is_zero() {
        let c = coherency_coefficient(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn coherency_of_antiphase_vectors_is_minus_one() {
        let c = coherency_coefficient(&[1.0, 1.0], &[-1.0, -1.0]).unwrap();
        assert_relative_eq!(c, -1.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_vector_scores_zero_against_everything() {
        let m = coherency_matrix(
            &[vec![0.0, 0.0], vec![1.0, 2.0], vec![2.0, 4.0]],
            (0.0, 1.0),
        )
        .unwrap();
        assert_eq!(m.values[(0, 1)], 0.0);
        assert_eq!(m.values[(0, 2)], 0.0);
        assert_eq!(m.values[(0, 0)], 1.0);
        assert_relative_eq!(m.values[(1, 2)], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn mismatched_deviation_lengths_rejected() {
        assert!(matches!(
            coherency_matrix(&[vec![1.0, 2.0], vec![1.0]], (0.0, 1.0)),
            Err(Error::LengthMismatch(2, 1))
        ));
    }

    fn cc_matrix(values: &[(usize, usize, f64)], n: usize) -> CoherencyMatrix {
        let mut m = DMatrix::identity(n, n);
        for &(i, j, v) in values {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        CoherencyMatrix {
            values: m,
            window: (0.0, 1.0),
        }
    }

    #[test]
    fn coherency_layer_clamps_on_branches() {
        let graph = path_graph();
        let cc = cc_matrix(&[(0, 1, 0.9), (1, 2, -0.4), (0, 2, 0.7)], 3);
        let layer =
            coherency_layer(&cc, &graph, CoherencyMode::EdgeRestricted, NegativePolicy::Clamp)
                .unwrap();
        assert_eq!(layer.weights[(0, 1)], 0.9);
        assert_eq!(layer.weights[(1, 2)], 0.0);
        // (0, 2) is not a branch: stays zero in edge-restricted mode.
        assert_eq!(layer.weights[(0, 2)], 0.0);
    }

    #[test]
    fn coherency_layer_shift_policy() {
        let graph = path_graph();
        let cc = cc_matrix(&[(0, 1, 0.9), (1, 2, -0.4)], 3);
        let layer =
            coherency_layer(&cc, &graph, CoherencyMode::EdgeRestricted, NegativePolicy::Shift)
                .unwrap();
        assert_relative_eq!(layer.weights[(0, 1)], 0.95, max_relative = 1e-15);
        assert_relative_eq!(layer.weights[(1, 2)], 0.3, max_relative = 1e-15);
    }

    #[test]
    fn dense_mode_fills_all_pairs() {
        let graph = path_graph();
        let cc = cc_matrix(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], 3);
        let layer =
            coherency_layer(&cc, &graph, CoherencyMode::Dense, NegativePolicy::Clamp).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { 1.0 };
                assert_eq!(layer.weights[(i, j)], expected);
            }
        }
    }

    #[test]
    fn max_normalization_scales_largest_entry_to_one() {
        let layer = powerflow_layer(&path_graph()).unwrap().max_normalized();
        assert_relative_eq!(layer.max_weight(), 1.0, max_relative = 1e-15);
        let zero = WeightLayer {
            kind: LayerKind::Topology,
            weights: DMatrix::zeros(2, 2),
        };
        assert_eq!(zero.max_normalized().weights, zero.weights);
    }
}
