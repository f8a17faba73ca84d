//! Implementations of the five subcommands.

use std::fs;
use std::path::Path;

use islander_core::dynamics::{simulate, SwingConfig};
use islander_core::export::{
    coherency_csv, eigengaps_csv, layer_csv, newick, quality_text, DendrogramDocument,
    PlanDocument,
};
use islander_core::grid::{load_case, load_measurements, write_measurements, BusGraph, BusId};
use islander_core::hierarchy::IslandingPlan;
use islander_core::layers::{coherency_layer_from_measurements, CoherencyMode, NegativePolicy};
use islander_core::pipeline::{analyze_spectra, build_layers, plan_islands};
use islander_core::quality::{score_plan, ConductanceMode};
use islander_core::spectral::SpectrumReport;
use islander_core::LayerKind;

use crate::config::RunConfig;
use crate::{CliError, CoherencyArgs, EigengapArgs, PipelineArgs, PlanArgs, ScoreArgs, SimulateArgs};

fn parse_outage(spec: &str) -> Result<(String, String), CliError> {
    match spec.split_once(':') {
        Some((from, to)) if !from.is_empty() && !to.is_empty() => {
            Ok((from.to_string(), to.to_string()))
        }
        _ => Err(CliError::Input(format!(
            "outage must be FROM:TO bus labels, got {spec:?}"
        ))),
    }
}

fn parse_enum<T: std::str::FromStr<Err = String>>(value: &str) -> Result<T, CliError> {
    value.parse().map_err(CliError::Input)
}

fn parse_coherency_mode(value: &str) -> Result<CoherencyMode, CliError> {
    match value {
        "edge_restricted" => Ok(CoherencyMode::EdgeRestricted),
        "dense" => Ok(CoherencyMode::Dense),
        other => Err(CliError::Input(format!(
            "coherency mode must be edge_restricted or dense, got {other:?}"
        ))),
    }
}

fn parse_negative_cc(value: &str) -> Result<NegativePolicy, CliError> {
    match value {
        "clamp" => Ok(NegativePolicy::Clamp),
        "shift" => Ok(NegativePolicy::Shift),
        other => Err(CliError::Input(format!(
            "negative-cc policy must be clamp or shift, got {other:?}"
        ))),
    }
}

fn parse_conductance_mode(value: &str) -> Result<ConductanceMode, CliError> {
    match value {
        "standard" => Ok(ConductanceMode::Standard),
        "paper_literal" => Ok(ConductanceMode::PaperLiteral),
        other => Err(CliError::Input(format!(
            "conductance mode must be standard or paper_literal, got {other:?}"
        ))),
    }
}

/// Builds the resolved configuration from flags, or loads a previously
/// written one when `--config` is given.
fn resolve_config(args: &PipelineArgs) -> Result<RunConfig, CliError> {
    if let Some(path) = &args.config {
        if args.case.is_some() {
            return Err(CliError::Input(
                "--config replaces --case and the other pipeline flags".into(),
            ));
        }
        return RunConfig::load(path);
    }
    let mut config = RunConfig {
        case: args
            .case
            .clone()
            .ok_or_else(|| CliError::Input("--case is required (or pass --config)".into()))?,
        ..RunConfig::default()
    };
    config.measurements = args.measurements.clone();
    for spec in &args.outages {
        config.outages.push(parse_outage(spec)?);
    }
    if !args.layers.is_empty() {
        config.layers = args
            .layers
            .iter()
            .map(|name| parse_enum::<LayerKind>(name))
            .collect::<Result<_, _>>()?;
    }
    if let Some(alpha) = args.alpha {
        config.alpha = alpha;
    }
    config.embedding_k = args.k;
    config.islands = args.islands;
    if let Some(mode) = &args.coherency_mode {
        config.coherency_mode = parse_coherency_mode(mode)?;
    }
    if let Some(policy) = &args.negative_cc {
        config.negative_cc = parse_negative_cc(policy)?;
    }
    config.window_start = args.window_start;
    config.event_time = args.event_time;
    if let Some(idle) = args.idle {
        config.idle = idle;
    }
    if let Some(mode) = &args.conductance_mode {
        config.conductance_mode = parse_conductance_mode(mode)?;
    }
    if let Some(delta) = args.delta {
        config.delta = delta;
    }
    config.row_normalize = args.row_normalize;
    config.export_layers = args.export_layers;
    Ok(config)
}

struct LoadedInputs {
    graph: BusGraph,
    measurements: Option<islander_core::grid::MeasurementSet>,
}

fn load_inputs(config: &RunConfig) -> Result<LoadedInputs, CliError> {
    let base = load_case(&config.case)?;
    let graph = base.apply_outage_labels(&config.outages)?;
    let measurements = match &config.measurements {
        Some(path) => {
            let set = load_measurements(path, &graph)?;
            if !set.missing.is_empty() {
                let labels: Vec<&str> =
                    set.missing.iter().map(|b| graph.label(*b)).collect();
                eprintln!(
                    "warning: measurements missing for bus(es): {}",
                    labels.join(", ")
                );
            }
            Some(set)
        }
        None => None,
    };
    Ok(LoadedInputs {
        graph,
        measurements,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)?;
    Ok(())
}

fn spectra_tables<'a>(
    layer_reports: &'a [(LayerKind, SpectrumReport)],
    unified: &'a SpectrumReport,
) -> Vec<(String, &'a SpectrumReport)> {
    let mut tables: Vec<(String, &SpectrumReport)> = layer_reports
        .iter()
        .map(|(kind, report)| (kind.name().to_string(), report))
        .collect();
    tables.push(("unified".to_string(), unified));
    tables
}

pub fn cmd_plan(args: PlanArgs) -> Result<(), CliError> {
    let mut config = resolve_config(&args.pipeline)?;
    let inputs = load_inputs(&config)?;
    let outcome = plan_islands(
        &inputs.graph,
        inputs.measurements.as_ref(),
        &config.plan_config(),
    )?;

    // Freeze the resolved choices so the written config replays exactly.
    config.embedding_k = Some(outcome.analysis.embedding_k);
    config.islands = Some(outcome.plan.k);
    config.window_start = config.effective_window_start();

    let out = &args.out;
    fs::create_dir_all(out)?;
    let graph = &inputs.graph;

    let plan_document = PlanDocument::new(&outcome.plan, graph, outcome.quality.clone());
    let mut plan_json = serde_json::to_string_pretty(&plan_document)
        .map_err(|e| CliError::Input(e.to_string()))?;
    plan_json.push('\n');
    write_text(&out.join("plan.json"), &plan_json)?;

    let dendrogram_document = DendrogramDocument::new(&outcome.dendrogram, graph);
    let mut dendrogram_json = serde_json::to_string_pretty(&dendrogram_document)
        .map_err(|e| CliError::Input(e.to_string()))?;
    dendrogram_json.push('\n');
    write_text(&out.join("dendrogram.json"), &dendrogram_json)?;
    write_text(
        &out.join("dendrogram.newick"),
        &newick(&outcome.dendrogram, graph),
    )?;

    let tables = spectra_tables(
        &outcome.analysis.layer_reports,
        &outcome.analysis.unified_report,
    );
    write_text(&out.join("eigengaps.csv"), &eigengaps_csv(&tables))?;
    write_text(&out.join("quality.txt"), &quality_text(&outcome.quality))?;
    write_text(&out.join("resolved-config.json"), &config.to_json())?;

    if config.export_layers {
        let layer_dir = out.join("layers");
        fs::create_dir_all(&layer_dir)?;
        for layer in &outcome.analysis.layers {
            write_text(
                &layer_dir.join(format!("{}.csv", layer.kind)),
                &layer_csv(layer),
            )?;
        }
    }

    println!("embedding dimension K = {}", outcome.analysis.embedding_k);
    println!("islands: {}", outcome.plan.islands.len());
    for (index, island) in outcome.plan.islands.iter().enumerate() {
        let labels: Vec<&str> = island.iter().map(|b| graph.label(*b)).collect();
        println!("  island {index}: {}", labels.join(", "));
    }
    let lines: Vec<String> = outcome
        .plan
        .lines_to_open
        .iter()
        .map(|(a, b)| format!("{}-{}", graph.label(*a), graph.label(*b)))
        .collect();
    println!(
        "lines to open: {}",
        if lines.is_empty() {
            "none".to_string()
        } else {
            lines.join(", ")
        }
    );
    println!("artifacts written to {}", out.display());
    Ok(())
}

pub fn cmd_eigengap(args: EigengapArgs) -> Result<(), CliError> {
    let config = resolve_config(&args.pipeline)?;
    let inputs = load_inputs(&config)?;
    let analysis = analyze_spectra(
        &inputs.graph,
        inputs.measurements.as_ref(),
        &config.plan_config(),
    )?;
    fs::create_dir_all(&args.out)?;
    let tables = spectra_tables(&analysis.layer_reports, &analysis.unified_report);
    write_text(&args.out.join("eigengaps.csv"), &eigengaps_csv(&tables))?;
    println!("embedding dimension K = {}", analysis.embedding_k);
    println!("eigengap tables written to {}", args.out.join("eigengaps.csv").display());
    Ok(())
}

pub fn cmd_coherency(args: CoherencyArgs) -> Result<(), CliError> {
    let config = resolve_config(&args.pipeline)?;
    let inputs = load_inputs(&config)?;
    let measurements = inputs
        .measurements
        .as_ref()
        .ok_or(CliError::Core(islander_core::Error::MissingMeasurements))?;
    let (layer, cc) = coherency_layer_from_measurements(
        measurements,
        &inputs.graph,
        config.effective_window_start(),
        config.coherency_mode,
        config.negative_cc,
    )?;
    fs::create_dir_all(&args.out)?;
    write_text(&args.out.join("coherency_matrix.csv"), &coherency_csv(&cc))?;
    write_text(&args.out.join("coherency_layer.csv"), &layer_csv(&layer))?;
    println!(
        "coherency window: [{}, {}] s; matrices written to {}",
        cc.window.0,
        cc.window.1,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let graph = load_case(&args.case)?;
    let mut cfg = SwingConfig::for_graph(&graph);
    cfg.dt = args.dt;
    cfg.horizon = args.horizon;
    cfg.event_time = args.event_time;
    cfg.idle = args.idle;
    for i in 0..graph.n() {
        cfg.inertia[i] = if graph.is_generator(BusId(i)) {
            args.gen_inertia
        } else {
            args.load_inertia
        };
        cfg.damping[i] = args.damping;
    }
    for spec in &args.inertia_overrides {
        let (label, value) = spec.split_once('=').ok_or_else(|| {
            CliError::Input(format!("inertia override must be LABEL=VALUE, got {spec:?}"))
        })?;
        let bus = graph
            .bus_by_label(label)
            .ok_or_else(|| CliError::Core(islander_core::Error::UnknownBus(label.to_string())))?;
        cfg.inertia[bus.0] = value
            .parse()
            .map_err(|e| CliError::Input(format!("inertia override {spec:?}: {e}")))?;
    }
    for spec in &args.outages {
        let (from, to) = parse_outage(spec)?;
        let from = graph
            .bus_by_label(&from)
            .ok_or_else(|| CliError::Core(islander_core::Error::UnknownBus(from.clone())))?;
        let to = graph
            .bus_by_label(&to)
            .ok_or_else(|| CliError::Core(islander_core::Error::UnknownBus(to.clone())))?;
        cfg.outage.push((from, to));
    }

    let output = simulate(&graph, &cfg)?;
    if output.drift_flagged {
        eprintln!("warning: net injection nonzero with zero damping; angles may drift unboundedly");
    }
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut buffer = Vec::new();
    write_measurements(&output.series, &graph, &mut buffer)?;
    fs::write(&args.out, buffer)?;
    println!(
        "wrote {} samples x {} buses to {}",
        output.series.values().next().map_or(0, |s| s.len()),
        output.series.len(),
        args.out.display()
    );
    Ok(())
}

/// Rebuilds an `IslandingPlan` from a plan document against the given graph.
fn plan_from_document(
    document: &PlanDocument,
    graph: &BusGraph,
) -> Result<IslandingPlan, CliError> {
    let n = graph.n();
    let mut assignment = vec![usize::MAX; n];
    let mut islands = Vec::with_capacity(document.islands.len());
    for (index, island) in document.islands.iter().enumerate() {
        let mut members = Vec::with_capacity(island.buses.len());
        for label in &island.buses {
            let bus = graph
                .bus_by_label(label)
                .ok_or_else(|| CliError::Core(islander_core::Error::UnknownBus(label.clone())))?;
            if assignment[bus.0] != usize::MAX {
                return Err(CliError::Input(format!(
                    "bus {label:?} appears in more than one island"
                )));
            }
            assignment[bus.0] = index;
            members.push(bus);
        }
        members.sort();
        islands.push(members);
    }
    if assignment.iter().any(|&a| a == usize::MAX) {
        return Err(CliError::Input(
            "plan does not cover every bus of the case".into(),
        ));
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
        k: document.islands.len(),
        islands,
        assignment,
        lines_to_open,
        cut_height: document.cut_height,
    })
}

pub fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let mut config = resolve_config(&args.pipeline)?;
    // Without measurements a bare score defaults to the static layers.
    if args.pipeline.layers.is_empty() && config.measurements.is_none() {
        config.layers = vec![
            LayerKind::Topology,
            LayerKind::Admittance,
            LayerKind::PowerFlow,
        ];
    }
    let inputs = load_inputs(&config)?;
    let text = fs::read_to_string(&args.plan)
        .map_err(|e| CliError::Input(format!("cannot read plan {}: {e}", args.plan.display())))?;
    let document: PlanDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("plan {}: {e}", args.plan.display())))?;
    let plan = plan_from_document(&document, &inputs.graph)?;
    let layers = build_layers(
        &inputs.graph,
        inputs.measurements.as_ref(),
        &config.plan_config(),
    )?;
    let quality = score_plan(&plan, &layers, config.conductance_mode, config.delta)?;
    let report = quality_text(&quality);
    print!("{report}");
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        write_text(&out.join("quality.txt"), &report)?;
        let mut json = serde_json::to_string_pretty(&quality)
            .map_err(|e| CliError::Input(e.to_string()))?;
        json.push('\n');
        write_text(&out.join("quality.json"), &json)?;
    }
    Ok(())
}
