//! Grid domain model: buses, branches, measurement series, and ingestion.
//!
//! Bus labels are arbitrary strings externally and are mapped to dense
//! indices `0..N-1` at ingestion; every matrix in the crate is indexed by
//! the dense index. Parallel branches are merged when a case is loaded so
//! that each unordered bus pair carries at most one branch.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense bus index, `0..N-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BusId(pub usize);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchStatus {
    InService,
    Outaged,
}

/// Transmission line between two buses, with electrical parameters in
/// per-unit and measured active-power flows in MW.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    /// Series resistance, per-unit. Non-negative.
    pub resistance: f64,
    /// Series reactance, per-unit.
    pub reactance: f64,
    /// Active power entering the branch at `from`, MW. `None` when the case
    /// carries no flow data for this branch.
    pub flow_from: Option<f64>,
    /// Active power entering the branch at `to`, MW (normally negative of
    /// `flow_from` minus losses).
    pub flow_to: Option<f64>,
    pub status: BranchStatus,
}

impl Branch {
    pub fn is_in_service(&self) -> bool {
        self.status == BranchStatus::InService
    }

    /// Unordered endpoint pair with the smaller index first.
    pub fn key(&self) -> (usize, usize) {
        let (a, b) = (self.from.0, self.to.0);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// Immutable grid topology: bus labels, merged branches, generator tags and
/// the nominal system frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct BusGraph {
    labels: Vec<String>,
    label_index: BTreeMap<String, usize>,
    is_generator: Vec<bool>,
    branches: Vec<Branch>,
    nominal_frequency_hz: f64,
}

impl BusGraph {
    /// Builds a validated graph. Branch endpoints must be distinct and in
    /// range, at most one branch per unordered pair, and every in-service
    /// branch must have nonzero impedance.
    pub fn new(
        labels: Vec<String>,
        is_generator: Vec<bool>,
        branches: Vec<Branch>,
        nominal_frequency_hz: f64,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::CaseSchema("case must contain at least one bus".into()));
        }
        if labels.len() != is_generator.len() {
            return Err(Error::CaseSchema("bus/generator flag count mismatch".into()));
        }
        if !(nominal_frequency_hz.is_finite() && nominal_frequency_hz > 0.0) {
            return Err(Error::CaseSchema(format!(
                "nominal frequency must be positive, got {nominal_frequency_hz}"
            )));
        }
        let mut label_index = BTreeMap::new();
        for (i, label) in labels.iter().enumerate() {
            if label_index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateBusLabel(label.clone()));
            }
        }
        let graph = Self {
            labels,
            label_index,
            is_generator,
            branches,
            nominal_frequency_hz,
        };
        graph.validate_branches()?;
        Ok(graph)
    }

    /// Test-only constructor that skips branch validation, used to exercise
    /// downstream guards against graphs the normal ingestion path rejects.
    #[doc(hidden)]
    pub fn new_unchecked(
        labels: Vec<String>,
        is_generator: Vec<bool>,
        branches: Vec<Branch>,
        nominal_frequency_hz: f64,
    ) -> Self {
        let label_index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Self {
            labels,
            label_index,
            is_generator,
            branches,
            nominal_frequency_hz,
        }
    }

    fn validate_branches(&self) -> Result<()> {
        let n = self.n();
        let mut seen = BTreeMap::new();
        for branch in &self.branches {
            if branch.from.0 >= n || branch.to.0 >= n {
                return Err(Error::UnknownBus(format!(
                    "branch index {}-{} out of range",
                    branch.from, branch.to
                )));
            }
            if branch.from == branch.to {
                return Err(Error::SelfLoop {
                    from: self.label(branch.from).to_string(),
                    to: self.label(branch.to).to_string(),
                });
            }
            if let Some(prev) = seen.insert(branch.key(), ()) {
                let _ = prev;
                return Err(Error::CaseSchema(format!(
                    "more than one branch between {} and {} after merging",
                    self.label(branch.from),
                    self.label(branch.to)
                )));
            }
            self.validate_impedance(branch)?;
        }
        Ok(())
    }

    fn validate_impedance(&self, branch: &Branch) -> Result<()> {
        if !branch.resistance.is_finite() || !branch.reactance.is_finite() {
            return Err(Error::CaseSchema(format!(
                "branch {}-{} has non-finite impedance",
                self.label(branch.from),
                self.label(branch.to)
            )));
        }
        if branch.resistance < 0.0 {
            return Err(Error::NegativeResistance {
                from: self.label(branch.from).to_string(),
                to: self.label(branch.to).to_string(),
            });
        }
        if branch.is_in_service() && branch.resistance == 0.0 && branch.reactance == 0.0 {
            return Err(Error::ZeroImpedance {
                from: self.label(branch.from).to_string(),
                to: self.label(branch.to).to_string(),
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, bus: BusId) -> &str {
        &self.labels[bus.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn bus_by_label(&self, label: &str) -> Option<BusId> {
        self.label_index.get(label).copied().map(BusId)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn in_service_branches(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| b.is_in_service())
    }

    pub fn is_generator(&self, bus: BusId) -> bool {
        self.is_generator[bus.0]
    }

    pub fn generator_buses(&self) -> Vec<BusId> {
        (0..self.n())
            .filter(|&i| self.is_generator[i])
            .map(BusId)
            .collect()
    }

    pub fn nominal_frequency_hz(&self) -> f64 {
        self.nominal_frequency_hz
    }

    /// Nominal angular frequency omega_0 = 2*pi*f_nom, rad/s.
    pub fn nominal_omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.nominal_frequency_hz
    }

    /// Returns a copy with the named branches marked outaged. Each pair must
    /// match an in-service branch (order-insensitive); bus count and branch
    /// list length are preserved.
    pub fn apply_outage(&self, lines: &[(BusId, BusId)]) -> Result<BusGraph> {
        let mut out = self.clone();
        for &(a, b) in lines {
            if a.0 >= self.n() || b.0 >= self.n() {
                return Err(Error::UnknownBus(format!("outage endpoint {a}-{b}")));
            }
            let key = if a.0 <= b.0 { (a.0, b.0) } else { (b.0, a.0) };
            let hit = out
                .branches
                .iter_mut()
                .find(|br| br.key() == key && br.is_in_service());
            match hit {
                Some(branch) => branch.status = BranchStatus::Outaged,
                None => {
                    return Err(Error::NoSuchBranch {
                        from: self.label(a).to_string(),
                        to: self.label(b).to_string(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Resolves label pairs to bus indices and applies the outage.
    pub fn apply_outage_labels(&self, lines: &[(String, String)]) -> Result<BusGraph> {
        let mut resolved = Vec::with_capacity(lines.len());
        for (a, b) in lines {
            let a = self
                .bus_by_label(a)
                .ok_or_else(|| Error::UnknownBus(a.clone()))?;
            let b = self
                .bus_by_label(b)
                .ok_or_else(|| Error::UnknownBus(b.clone()))?;
            resolved.push((a, b));
        }
        self.apply_outage(&resolved)
    }

    /// Connected components of the in-service topology. Isolated buses count
    /// as their own component. Returns a component id per bus.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut adjacency = vec![Vec::new(); n];
        for branch in self.in_service_branches() {
            adjacency[branch.from.0].push(branch.to.0);
            adjacency[branch.to.0].push(branch.from.0);
        }
        let mut component = vec![usize::MAX; n];
        let mut count = 0;
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            component[start] = count;
            while let Some(v) = stack.pop() {
                for &w in &adjacency[v] {
                    if component[w] == usize::MAX {
                        component[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        component
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }

    /// Serializes back to the case-file document form (label-preserving).
    pub fn to_case(&self) -> CaseFile {
        CaseFile {
            nominal_frequency_hz: Some(self.nominal_frequency_hz),
            buses: self
                .labels
                .iter()
                .zip(&self.is_generator)
                .map(|(label, &is_generator)| CaseBus {
                    label: label.clone(),
                    is_generator,
                })
                .collect(),
            branches: self
                .branches
                .iter()
                .map(|b| CaseBranch {
                    from: self.label(b.from).to_string(),
                    to: self.label(b.to).to_string(),
                    r_pu: b.resistance,
                    x_pu: b.reactance,
                    p_from_mw: b.flow_from,
                    p_to_mw: b.flow_to,
                    status: b.status,
                })
                .collect(),
        }
    }
}

/// On-disk case document: `nominal_frequency_hz`, `buses`, `branches`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    /// Defaults to 60 Hz when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nominal_frequency_hz: Option<f64>,
    pub buses: Vec<CaseBus>,
    pub branches: Vec<CaseBranch>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseBus {
    pub label: String,
    #[serde(default)]
    pub is_generator: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseBranch {
    pub from: String,
    pub to: String,
    pub r_pu: f64,
    pub x_pu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_from_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_to_mw: Option<f64>,
    #[serde(default = "default_status")]
    pub status: BranchStatus,
}

fn default_status() -> BranchStatus {
    BranchStatus::InService
}

const DEFAULT_NOMINAL_HZ: f64 = 60.0;

/// Loads and validates a case file. Parallel branches between the same bus
/// pair are merged: impedances combine in parallel (complex), flows sum.
pub fn load_case(path: impl AsRef<Path>) -> Result<BusGraph> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_case(&text)
}

pub fn parse_case(text: &str) -> Result<BusGraph> {
    let doc: CaseFile =
        serde_json::from_str(text).map_err(|e| Error::CaseSchema(e.to_string()))?;
    case_to_graph(doc)
}

pub fn case_to_graph(doc: CaseFile) -> Result<BusGraph> {
    let labels: Vec<String> = doc.buses.iter().map(|b| b.label.clone()).collect();
    let is_generator: Vec<bool> = doc.buses.iter().map(|b| b.is_generator).collect();
    let mut label_index = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        if label_index.insert(label.clone(), i).is_some() {
            return Err(Error::DuplicateBusLabel(label.clone()));
        }
    }

    let mut raw = Vec::with_capacity(doc.branches.len());
    for cb in &doc.branches {
        let from = *label_index
            .get(&cb.from)
            .ok_or_else(|| Error::UnknownBus(cb.from.clone()))?;
        let to = *label_index
            .get(&cb.to)
            .ok_or_else(|| Error::UnknownBus(cb.to.clone()))?;
        raw.push(Branch {
            from: BusId(from),
            to: BusId(to),
            resistance: cb.r_pu,
            reactance: cb.x_pu,
            flow_from: cb.p_from_mw,
            flow_to: cb.p_to_mw,
            status: cb.status,
        });
    }

    let merged = merge_parallel(raw);
    BusGraph::new(
        labels,
        is_generator,
        merged,
        doc.nominal_frequency_hz.unwrap_or(DEFAULT_NOMINAL_HZ),
    )
}

/// Groups branches by unordered endpoint pair and collapses each group to a
/// single branch. In-service members dominate: if any member is in service
/// the merged branch is in service and only in-service members contribute
/// impedance and flow; a group of outaged branches merges to an outaged one.
fn merge_parallel(branches: Vec<Branch>) -> Vec<Branch> {
    let mut groups: BTreeMap<(usize, usize), Vec<Branch>> = BTreeMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for b in branches {
        let key = b.key();
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(b);
    }

    let mut merged = Vec::with_capacity(order.len());
    for key in order {
        let group = groups.remove(&key).expect("group exists");
        if group.len() == 1 {
            merged.push(group.into_iter().next().expect("single member"));
            continue;
        }
        let any_in_service = group.iter().any(|b| b.is_in_service());
        let members: Vec<&Branch> = group
            .iter()
            .filter(|b| b.is_in_service() == any_in_service)
            .collect();
        let first = members[0];
        let orient = (first.from, first.to);

        // Parallel combination of complex impedances via admittance sums.
        let (mut g, mut susceptance) = (0.0_f64, 0.0_f64);
        for b in &members {
            let d = b.resistance * b.resistance + b.reactance * b.reactance;
            if d == 0.0 {
                // Zero-impedance member dominates the parallel combination;
                // keep it so validation rejects the case downstream.
                g = f64::INFINITY;
                break;
            }
            g += b.resistance / d;
            susceptance += -b.reactance / d;
        }
        let (resistance, reactance) = if g.is_infinite() {
            (0.0, 0.0)
        } else {
            let y2 = g * g + susceptance * susceptance;
            (g / y2, -susceptance / y2)
        };

        let sum_flow = |pick: fn(&Branch) -> Option<f64>, flip: fn(&Branch) -> Option<f64>| {
            let mut total = 0.0;
            for b in &members {
                // Respect each member's own orientation relative to `orient`.
                let v = if (b.from, b.to) == orient { pick(b) } else { flip(b) };
                match v {
                    Some(x) => total += x,
                    None => return None,
                }
            }
            Some(total)
        };

        merged.push(Branch {
            from: orient.0,
            to: orient.1,
            resistance,
            reactance,
            flow_from: sum_flow(|b| b.flow_from, |b| b.flow_to),
            flow_to: sum_flow(|b| b.flow_to, |b| b.flow_from),
            status: if any_in_service {
                BranchStatus::InService
            } else {
                BranchStatus::Outaged
            },
        });
    }
    merged
}

pub fn save_case(graph: &BusGraph, path: impl AsRef<Path>) -> Result<()> {
    let text = case_json(graph);
    let mut file = std::fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub fn case_json(graph: &BusGraph) -> String {
    let mut text = serde_json::to_string_pretty(&graph.to_case()).expect("case serializes");
    text.push('\n');
    text
}

/// Voltage phase angles sampled at a uniform timestep for one bus.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySeries {
    pub bus: BusId,
    pub timestamps: Vec<f64>,
    pub angles: Vec<f64>,
}

/// Relative tolerance on timestep uniformity.
pub const TIMESTEP_RTOL: f64 = 1e-9;

impl FrequencySeries {
    pub fn new(bus: BusId, timestamps: Vec<f64>, angles: Vec<f64>, label: &str) -> Result<Self> {
        if timestamps.len() < 2 {
            return Err(Error::TooFewSamples(label.to_string()));
        }
        if timestamps.len() != angles.len() {
            return Err(Error::MeasurementSchema(format!(
                "bus {label}: {} timestamps but {} angles",
                timestamps.len(),
                angles.len()
            )));
        }
        let dt = (timestamps[timestamps.len() - 1] - timestamps[0])
            / (timestamps.len() - 1) as f64;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::MeasurementSchema(format!(
                "bus {label}: timestamps must be strictly increasing"
            )));
        }
        for w in timestamps.windows(2) {
            let step = w[1] - w[0];
            if step <= 0.0 || (step - dt).abs() > TIMESTEP_RTOL * dt {
                return Err(Error::NonUniformTimestep {
                    bus: label.to_string(),
                    step,
                    reference: dt,
                });
            }
        }
        Ok(Self {
            bus,
            timestamps,
            angles,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Uniform timestep, seconds.
    pub fn dt(&self) -> f64 {
        (self.timestamps[self.len() - 1] - self.timestamps[0]) / (self.len() - 1) as f64
    }

    /// Sub-series with `t >= start` (small tolerance for grid alignment).
    /// Returns `None` when fewer than 2 samples remain.
    pub fn from_time(&self, start: f64) -> Option<FrequencySeries> {
        let eps = TIMESTEP_RTOL * self.dt().max(1.0);
        let begin = self.timestamps.partition_point(|&t| t < start - eps);
        if self.len() - begin < 2 {
            return None;
        }
        Some(FrequencySeries {
            bus: self.bus,
            timestamps: self.timestamps[begin..].to_vec(),
            angles: self.angles[begin..].to_vec(),
        })
    }
}

/// Parsed measurement file: one series per bus present, plus the buses of
/// the graph that the file does not cover (reported, never defaulted).
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub series: BTreeMap<BusId, FrequencySeries>,
    pub missing: Vec<BusId>,
}

impl MeasurementSet {
    pub fn window(&self) -> Option<(f64, f64)> {
        self.series.values().next().map(|s| {
            (
                s.timestamps[0],
                s.timestamps[s.len() - 1],
            )
        })
    }
}

#[derive(Debug, Deserialize)]
struct MeasurementRow {
    time_s: f64,
    bus: String,
    angle_rad: f64,
}

/// Loads the `time_s,bus,angle_rad` CSV. Every bus in the file must exist in
/// the graph; every series must be uniform and cover the same time window.
pub fn load_measurements(path: impl AsRef<Path>, graph: &BusGraph) -> Result<MeasurementSet> {
    let file = std::fs::File::open(path)?;
    read_measurements(file, graph)
}

pub fn read_measurements(reader: impl Read, graph: &BusGraph) -> Result<MeasurementSet> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    {
        let headers = csv_reader
            .headers()
            .map_err(|e| Error::MeasurementSchema(e.to_string()))?;
        let expected = ["time_s", "bus", "angle_rad"];
        if headers.iter().ne(expected) {
            return Err(Error::MeasurementSchema(format!(
                "expected header {expected:?}, got {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
    }

    let mut per_bus: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for record in csv_reader.deserialize() {
        let row: MeasurementRow = record.map_err(|e| Error::MeasurementSchema(e.to_string()))?;
        let bus = graph
            .bus_by_label(&row.bus)
            .ok_or_else(|| Error::UnknownBus(row.bus.clone()))?;
        let entry = per_bus.entry(bus.0).or_default();
        entry.0.push(row.time_s);
        entry.1.push(row.angle_rad);
    }

    let mut series = BTreeMap::new();
    for (bus, (timestamps, angles)) in per_bus {
        let s = FrequencySeries::new(BusId(bus), timestamps, angles, graph.label(BusId(bus)))?;
        series.insert(BusId(bus), s);
    }

    if let Some(reference) = series.values().next() {
        for s in series.values() {
            if s.len() != reference.len()
                || (s.timestamps[0] - reference.timestamps[0]).abs()
                    > TIMESTEP_RTOL * reference.dt().max(1.0)
            {
                return Err(Error::InconsistentWindow(format!(
                    "bus {} covers a different window than bus {}",
                    graph.label(s.bus),
                    graph.label(reference.bus)
                )));
            }
        }
    }

    let missing = (0..graph.n())
        .map(BusId)
        .filter(|b| !series.contains_key(b))
        .collect();
    Ok(MeasurementSet { series, missing })
}

/// Writes series in the measurement CSV format, rows ordered by time then
/// dense bus index.
pub fn write_measurements(
    series: &BTreeMap<BusId, FrequencySeries>,
    graph: &BusGraph,
    mut writer: impl Write,
) -> Result<()> {
    writeln!(writer, "time_s,bus,angle_rad")?;
    let buses: Vec<&FrequencySeries> = series.values().collect();
    if buses.is_empty() {
        return Ok(());
    }
    let samples = buses[0].len();
    for t in 0..samples {
        for s in &buses {
            writeln!(
                writer,
                "{},{},{}",
                s.timestamps[t],
                graph.label(s.bus),
                s.angles[t]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus_case() -> &'static str {
        r#"{
            "buses": [{"label": "a", "is_generator": true}, {"label": "b"}],
            "branches": [{"from": "a", "to": "b", "r_pu": 0.0, "x_pu": 0.1}]
        }"#
    }

    #[test]
    fn minimal_case_loads() {
        let graph = parse_case(two_bus_case()).unwrap();
        assert_eq!(graph.n(), 2);
        assert_eq!(graph.branches().len(), 1);
        assert_eq!(graph.nominal_frequency_hz(), 60.0);
        assert!(graph.is_generator(BusId(0)));
        assert!(!graph.is_generator(BusId(1)));
    }

    #[test]
    fn unknown_branch_endpoint_rejected() {
        let text = r#"{
            "buses": [{"label": "a"}, {"label": "b"}],
            "branches": [{"from": "a", "to": "bus99", "r_pu": 0.0, "x_pu": 0.1}]
        }"#;
        match parse_case(text) {
            Err(Error::UnknownBus(label)) => assert_eq!(label, "bus99"),
            other => panic!("expected unknown-bus error, got {other:?}"),
        }
    }

    #[test]
    fn parallel_branches_merge_in_parallel() {
        // Two x = 0.2 reactances in parallel combine to x = 0.1.
        let text = r#"{
            "buses": [{"label": "a"}, {"label": "b"}],
            "branches": [
                {"from": "a", "to": "b", "r_pu": 0.0, "x_pu": 0.2, "p_from_mw": 5.0, "p_to_mw": -5.0},
                {"from": "b", "to": "a", "r_pu": 0.0, "x_pu": 0.2, "p_from_mw": -5.0, "p_to_mw": 5.0}
            ]
        }"#;
        let graph = parse_case(text).unwrap();
        assert_eq!(graph.branches().len(), 1);
        let b = &graph.branches()[0];
        assert!((b.reactance - 0.1).abs() < 1e-15);
        assert_eq!(b.resistance, 0.0);
        assert_eq!(b.flow_from, Some(10.0));
        assert_eq!(b.flow_to, Some(-10.0));
    }

    #[test]
    fn parallel_merge_splits_resistance_evenly() {
        // Two identical (3, 4) impedances halve to (1.5, 2).
        let text = r#"{
            "buses": [{"label": "a"}, {"label": "b"}],
            "branches": [
                {"from": "a", "to": "b", "r_pu": 3.0, "x_pu": 4.0},
                {"from": "a", "to": "b", "r_pu": 3.0, "x_pu": 4.0}
            ]
        }"#;
        let graph = parse_case(text).unwrap();
        let b = &graph.branches()[0];
        assert!((b.resistance - 1.5).abs() < 1e-12);
        assert!((b.reactance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_label_rejected() {
        let text = r#"{
            "buses": [{"label": "a"}, {"label": "a"}],
            "branches": []
        }"#;
        assert!(matches!(parse_case(text), Err(Error::DuplicateBusLabel(_))));
    }

    #[test]
    fn zero_impedance_rejected() {
        let text = r#"{
            "buses": [{"label": "a"}, {"label": "b"}],
            "branches": [{"from": "a", "to": "b", "r_pu": 0.0, "x_pu": 0.0}]
        }"#;
        assert!(matches!(parse_case(text), Err(Error::ZeroImpedance { .. })));
    }

    #[test]
    fn outaged_zero_impedance_allowed() {
        let text = r#"{
            "buses": [{"label": "a"}, {"label": "b"}],
            "branches": [{"from": "a", "to": "b", "r_pu": 0.0, "x_pu": 0.0, "status": "outaged"}]
        }"#;
        let graph = parse_case(text).unwrap();
        assert_eq!(graph.in_service_branches().count(), 0);
    }

    #[test]
    fn self_loop_rejected() {
        let text = r#"{
            "buses": [{"label": "a"}, {"label": "b"}],
            "branches": [{"from": "a", "to": "a", "r_pu": 0.0, "x_pu": 0.1}]
        }"#;
        assert!(matches!(parse_case(text), Err(Error::SelfLoop { .. })));
    }

    #[test]
    fn case_roundtrip_preserves_graph() {
        let text = r#"{
            "nominal_frequency_hz": 50.0,
            "buses": [{"label": "g1", "is_generator": true}, {"label": "l1"}, {"label": "l2"}],
            "branches": [
                {"from": "g1", "to": "l1", "r_pu": 0.01, "x_pu": 0.1, "p_from_mw": 20.0, "p_to_mw": -19.5},
                {"from": "l1", "to": "l2", "r_pu": 0.02, "x_pu": 0.2, "status": "outaged"}
            ]
        }"#;
        let graph = parse_case(text).unwrap();
        let roundtripped = parse_case(&case_json(&graph)).unwrap();
        assert_eq!(graph, roundtripped);
    }

    #[test]
    fn outage_marks_branch_and_keeps_buses() {
        let graph = parse_case(two_bus_case()).unwrap();
        let out = graph
            .apply_outage(&[(BusId(1), BusId(0))])
            .unwrap();
        assert_eq!(out.n(), 2);
        assert_eq!(out.branches().len(), 1);
        assert_eq!(out.in_service_branches().count(), 0);
        assert_eq!(out.component_count(), 2);
    }

    #[test]
    fn empty_outage_is_identity() {
        let graph = parse_case(two_bus_case()).unwrap();
        let out = graph.apply_outage(&[]).unwrap();
        assert_eq!(graph, out);
    }

    #[test]
    fn self_pair_outage_rejected() {
        let graph = parse_case(two_bus_case()).unwrap();
        assert!(matches!(
            graph.apply_outage(&[(BusId(0), BusId(0))]),
            Err(Error::NoSuchBranch { .. })
        ));
    }

    #[test]
    fn outage_of_missing_branch_rejected() {
        let text = r#"{
            "buses": [{"label": "a"}, {"label": "b"}, {"label": "c"}],
            "branches": [{"from": "a", "to": "b", "r_pu": 0.0, "x_pu": 0.1}]
        }"#;
        let graph = parse_case(text).unwrap();
        assert!(matches!(
            graph.apply_outage_labels(&[("a".into(), "c".into())]),
            Err(Error::NoSuchBranch { .. })
        ));
    }

    fn measurement_csv() -> String {
        let mut text = String::from("time_s,bus,angle_rad\n");
        for step in 0..5 {
            let t = step as f64 * 0.01;
            for bus in ["a", "b", "c"] {
                text.push_str(&format!("{t},{bus},0.0\n"));
            }
        }
        text
    }

    fn three_bus_graph() -> BusGraph {
        parse_case(
            r#"{
            "buses": [{"label": "a"}, {"label": "b"}, {"label": "c"}],
            "branches": [
                {"from": "a", "to": "b", "r_pu": 0.0, "x_pu": 0.1},
                {"from": "b", "to": "c", "r_pu": 0.0, "x_pu": 0.1}
            ]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn measurements_parse_per_bus() {
        let graph = three_bus_graph();
        let set = read_measurements(measurement_csv().as_bytes(), &graph).unwrap();
        assert_eq!(set.series.len(), 3);
        assert!(set.missing.is_empty());
        for s in set.series.values() {
            assert_eq!(s.len(), 5);
            assert!((s.dt() - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn non_uniform_timestep_rejected() {
        let graph = three_bus_graph();
        let csv = "time_s,bus,angle_rad\n0,a,0\n0.01,a,0\n0.03,a,0\n";
        assert!(matches!(
            read_measurements(csv.as_bytes(), &graph),
            Err(Error::NonUniformTimestep { .. })
        ));
    }

    #[test]
    fn unknown_measurement_bus_rejected() {
        let graph = three_bus_graph();
        let csv = "time_s,bus,angle_rad\n0,zz,0\n0.01,zz,0\n";
        match read_measurements(csv.as_bytes(), &graph) {
            Err(Error::UnknownBus(label)) => assert_eq!(label, "zz"),
            other => panic!("expected unknown-bus error, got {other:?}"),
        }
    }

    #[test]
    fn short_series_rejected() {
        let graph = three_bus_graph();
        let csv = "time_s,bus,angle_rad\n0,a,0\n";
        assert!(matches!(
            read_measurements(csv.as_bytes(), &graph),
            Err(Error::TooFewSamples(_))
        ));
    }

    #[test]
    fn missing_buses_are_reported() {
        let graph = three_bus_graph();
        let csv = "time_s,bus,angle_rad\n0,a,0\n0.01,a,0\n";
        let set = read_measurements(csv.as_bytes(), &graph).unwrap();
        assert_eq!(set.missing, vec![BusId(1), BusId(2)]);
    }

    #[test]
    fn mismatched_windows_rejected() {
        let graph = three_bus_graph();
        let csv = "time_s,bus,angle_rad\n0,a,0\n0.01,a,0\n0.01,b,0\n0.02,b,0\n0.02,a,0\n";
        // Bus a has 3 samples, bus b has 2.
        assert!(matches!(
            read_measurements(csv.as_bytes(), &graph),
            Err(Error::InconsistentWindow(_))
        ));
    }

    #[test]
    fn measurement_roundtrip() {
        let graph = three_bus_graph();
        let set = read_measurements(measurement_csv().as_bytes(), &graph).unwrap();
        let mut out = Vec::new();
        write_measurements(&set.series, &graph, &mut out).unwrap();
        let reparsed = read_measurements(out.as_slice(), &graph).unwrap();
        assert_eq!(set.series, reparsed.series);
    }

    #[test]
    fn from_time_trims_leading_samples() {
        let s = FrequencySeries::new(
            BusId(0),
            vec![0.0, 0.1, 0.2, 0.3],
            vec![1.0, 2.0, 3.0, 4.0],
            "a",
        )
        .unwrap();
        let trimmed = s.from_time(0.15).unwrap();
        assert_eq!(trimmed.timestamps, vec![0.2, 0.3]);
        assert_eq!(trimmed.angles, vec![3.0, 4.0]);
        assert!(s.from_time(0.25).is_none());
    }
}
