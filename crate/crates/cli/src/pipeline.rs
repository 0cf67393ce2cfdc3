//! Stage orchestration: generate -> correlate -> train -> decode ->
//! evaluate, with per-pixel work parallelized and every byte of output a
//! pure function of (config, seed).

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use corrnet_core::correlation::{
    bin_stats, build_correlation_graph, pixel_voxel_correlation, strength_correlation,
    voxel_coupling, BinStats, CorrelationGraph,
};
use corrnet_core::dataset::{
    generate_random_stimuli, generate_shape_stimuli, GroundTruth, ResponseSet, ShapeFamily,
    Standardizer, StimulusSet, DIGIT_SHAPE_COUNT, GEOMETRY_SHAPE_COUNT,
};
use corrnet_core::eval::{
    bin_heatmap, bin_recovery, patch_scale_accuracy, pixel_accuracy, span_accuracy, AccuracyReport,
    BinRecovery, PatchCurve,
};
use corrnet_core::matrix::Matrix;
use corrnet_core::rng::{derive_seed, fnv1a_continue};
use corrnet_core::snn::{decode_image_snn, train_pixel_tempotron, TempotronModel};
use corrnet_core::svm::{decode_image_svm, train_pixel_svm, LinearPixelModel};
use corrnet_core::topology::{
    adaptive_radii, delaunay3d, position_prior, topological_neighborhood, RadiusMode, TopologyGraph,
};

use crate::config::{Decoder, PipelineConfig};
use crate::error::{CliError, Result};
use crate::io;

/// In-memory working set: standardized train/test splits plus the
/// generator's ground truth.
pub struct WorkingSet {
    pub train_stim: StimulusSet,
    pub train_resp: ResponseSet,
    pub test_stim: StimulusSet,
    pub test_resp: ResponseSet,
    pub truth: Option<GroundTruth>,
    pub train_digest: u64,
    pub test_digest: u64,
}

fn digest_matrix(m: &Matrix) -> u64 {
    let mut h = 0xcbf29ce484222325;
    for v in m.data() {
        h = fnv1a_continue(h, &v.to_bits().to_le_bytes());
    }
    h
}

/// Generate the synthetic benchmark: random training patterns, shape test
/// patterns, one shared brain (responses synthesized jointly so the
/// layout and fields are identical across splits), then z-scoring fitted
/// on the training split only.
pub fn generate_working_set(cfg: &PipelineConfig) -> Result<WorkingSet> {
    let train_stim = generate_random_stimuli(
        cfg.train_trials,
        cfg.rows,
        cfg.cols,
        derive_seed(cfg.seed, "stimuli-train", 0),
    )?;
    let test_stim = generate_shape_stimuli(
        &[ShapeFamily::Geometry, ShapeFamily::Digits],
        cfg.rows,
        cfg.cols,
        cfg.test_repetitions,
    )?;

    let n_train = train_stim.n_trials();
    let n_test = test_stim.n_trials();
    let d2 = train_stim.n_pixels();
    let mut stacked = Vec::with_capacity((n_train + n_test) * d2);
    stacked.extend_from_slice(train_stim.values().data());
    stacked.extend_from_slice(test_stim.values().data());
    let combined = StimulusSet::new(
        Matrix::from_vec(n_train + n_test, d2, stacked)?,
        cfg.rows,
        cfg.cols,
    )?;

    let mut synth = cfg.synth.clone();
    synth.seed = derive_seed(cfg.seed, "dataset", 0);
    let (responses, truth) = corrnet_core::dataset::synthesize_responses(&combined, &synth)?;

    let d1 = responses.n_voxels();
    let split = |rows: std::ops::Range<usize>| -> Result<ResponseSet> {
        let mut data = Vec::with_capacity(rows.len() * d1);
        for i in rows {
            data.extend_from_slice(responses.values().row(i));
        }
        let values = Matrix::from_vec(data.len() / d1, d1, data)?;
        Ok(ResponseSet::new(values, responses.layout().clone())?)
    };
    let train_raw = split(0..n_train)?;
    let test_raw = split(n_train..n_train + n_test)?;

    let stats = Standardizer::fit(&train_raw)?;
    let train_resp = stats.apply(&train_raw)?;
    let test_resp = stats.apply(&test_raw)?;

    let train_digest = digest_matrix(train_resp.values());
    let test_digest = digest_matrix(test_resp.values());
    Ok(WorkingSet {
        train_stim,
        train_resp,
        test_stim,
        test_resp,
        truth: Some(truth),
        train_digest,
        test_digest,
    })
}

/// Load a previously generated working set from `<out>/dataset`,
/// standardizing with training statistics when the stored data is raw.
pub fn load_working_set(out: &Path) -> Result<WorkingSet> {
    let (train_stim, train_loaded) = io::read_dataset(&out.join("dataset/train"))?;
    let (test_stim, test_loaded) = io::read_dataset(&out.join("dataset/test"))?;
    let (train_resp, test_resp) = if train_loaded.standardized() {
        (train_loaded, test_loaded)
    } else {
        let stats = Standardizer::fit(&train_loaded)?;
        (stats.apply(&train_loaded)?, stats.apply(&test_loaded)?)
    };
    let rf_path = out.join("dataset/rf.csv");
    let truth = if rf_path.exists() {
        Some(io::read_rf(
            &rf_path,
            train_resp.n_voxels(),
            train_stim.n_pixels(),
        )?)
    } else {
        None
    };
    let train_digest = digest_matrix(train_resp.values());
    let test_digest = digest_matrix(test_resp.values());
    Ok(WorkingSet {
        train_stim,
        train_resp,
        test_stim,
        test_resp,
        truth,
        train_digest,
        test_digest,
    })
}

/// One radius mode's graph with the radii that produced it.
pub struct ModeGraph {
    pub mode: RadiusMode,
    pub radii: Vec<f64>,
    pub graph: CorrelationGraph,
}

/// Both correlation graphs plus the shared triangulation.
pub struct GraphBundle {
    pub topology: TopologyGraph,
    pub svm: ModeGraph,
    pub snn: ModeGraph,
}

/// Build the Delaunay prior and the correlation graph for both radius
/// modes (the triangulation, strength matrix, and pixel correlations are
/// shared; only the adaptive radii differ).
pub fn build_graphs(cfg: &PipelineConfig, data: &WorkingSet) -> Result<GraphBundle> {
    let layout = data.train_resp.layout().clone();
    let topology = delaunay3d(&layout)?;
    let strength = strength_correlation(&data.train_resp)?;
    let pixvox = pixel_voxel_correlation(&data.train_resp, &data.train_stim)?;

    let build_mode = |mode: RadiusMode| -> Result<ModeGraph> {
        let radii = adaptive_radii(&topology, &layout, mode)?;
        let neigh = topological_neighborhood(&topology, &layout, &radii, mode)?;
        let prior = position_prior(&neigh);
        let coupling = voxel_coupling(&strength, &prior, cfg.eps_cv)?;
        let graph = build_correlation_graph(&coupling, pixvox.values(), &layout, cfg.eps_corr)?;
        Ok(ModeGraph { mode, radii, graph })
    };
    let svm = build_mode(RadiusMode::SvmMinEdge)?;
    let snn = build_mode(RadiusMode::SnnMeanDistance)?;
    Ok(GraphBundle { topology, svm, snn })
}

/// Trained per-pixel models of one decoder.
pub enum Models {
    Svm(Vec<LinearPixelModel>),
    Snn(Vec<TempotronModel>),
}

/// The graph a decoder reads its bins from.
pub fn decoder_graph<'a>(
    decoder: Decoder,
    graphs: Option<&'a GraphBundle>,
    full: &'a CorrelationGraph,
) -> Result<&'a CorrelationGraph> {
    match decoder {
        Decoder::PureSvm | Decoder::PureSnn => Ok(full),
        Decoder::Svm => Ok(&graphs
            .ok_or_else(|| CliError::Config("svm decoder needs the correlation graphs".into()))?
            .svm
            .graph),
        Decoder::Snn => Ok(&graphs
            .ok_or_else(|| CliError::Config("snn decoder needs the correlation graphs".into()))?
            .snn
            .graph),
    }
}

/// Train one decoder on every pixel (parallel; per-pixel seed streams
/// keep results independent of the schedule).
pub fn train_decoder(
    cfg: &PipelineConfig,
    decoder: Decoder,
    data: &WorkingSet,
    graph: &CorrelationGraph,
) -> Result<Models> {
    let d2 = data.train_stim.n_pixels();
    let n = data.train_stim.n_trials();
    let features_of = |k: usize| -> (Matrix, Vec<u8>) {
        let bin = graph.bin(k);
        let mut feats = Vec::with_capacity(n * bin.len());
        for i in 0..n {
            let row = data.train_resp.values().row(i);
            for &j in bin {
                feats.push(row[j as usize]);
            }
        }
        let labels: Vec<u8> = (0..n)
            .map(|i| data.train_stim.values().get(i, k) as u8)
            .collect();
        (Matrix::from_vec(n, bin.len(), feats).unwrap(), labels)
    };

    match decoder {
        Decoder::Svm | Decoder::PureSvm => {
            let models: corrnet_core::Result<Vec<_>> = (0..d2)
                .into_par_iter()
                .map(|k| {
                    let (features, labels) = features_of(k);
                    train_pixel_svm(&features, &labels, graph.bin(k), &cfg.svm)
                })
                .collect();
            Ok(Models::Svm(models?))
        }
        Decoder::Snn | Decoder::PureSnn => {
            let models: corrnet_core::Result<Vec<_>> = (0..d2)
                .into_par_iter()
                .map(|k| {
                    let (features, labels) = features_of(k);
                    let seed = derive_seed(cfg.seed, decoder.name(), k as u64);
                    train_pixel_tempotron(&features, &labels, graph.bin(k), &cfg.snn, seed)
                })
                .collect();
            Ok(Models::Snn(models?))
        }
    }
}

/// Decode every trial of a response set into a trials x pixels binary
/// matrix.
pub fn decode_set(
    cfg: &PipelineConfig,
    models: &Models,
    responses: &ResponseSet,
    graph: &CorrelationGraph,
) -> Result<Matrix> {
    let n = responses.n_trials();
    let d2 = graph.n_pixels();
    let rows_out: corrnet_core::Result<Vec<Vec<u8>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let response = responses.values().row(i);
            let img = match models {
                Models::Svm(m) => decode_image_svm(m, response, graph, cfg.rows, cfg.cols)?,
                Models::Snn(m) => {
                    decode_image_snn(m, response, graph, &cfg.snn, cfg.rows, cfg.cols)?
                }
            };
            Ok(img.pixels)
        })
        .collect();
    let mut data = Vec::with_capacity(n * d2);
    for row in rows_out? {
        data.extend(row.into_iter().map(|p| p as f64));
    }
    Ok(Matrix::from_vec(n, d2, data)?)
}

/// Accuracy splits reported for one decoder.
pub struct MethodEval {
    pub decoder: Decoder,
    pub train_report: AccuracyReport,
    pub test_report: AccuracyReport,
    /// (split name, mean accuracy, std over trials)
    pub splits: Vec<(&'static str, f64, f64)>,
    pub patch: PatchCurve,
}

/// Trial ranges of the two shape categories in the test set.
pub fn category_spans(test_repetitions: usize) -> [(&'static str, std::ops::Range<usize>); 2] {
    let geo = GEOMETRY_SHAPE_COUNT * test_repetitions;
    let dig = DIGIT_SHAPE_COUNT * test_repetitions;
    [("geometry", 0..geo), ("digit", geo..geo + dig)]
}

/// Evaluate one decoder's train/test predictions.
pub fn evaluate_method(
    cfg: &PipelineConfig,
    decoder: Decoder,
    predicted_train: &Matrix,
    predicted_test: &Matrix,
    data: &WorkingSet,
) -> Result<MethodEval> {
    let train_report = pixel_accuracy(
        predicted_train,
        data.train_stim.values(),
        cfg.rows,
        cfg.cols,
        decoder.name(),
    )?;
    let test_report = pixel_accuracy(
        predicted_test,
        data.test_stim.values(),
        cfg.rows,
        cfg.cols,
        decoder.name(),
    )?;
    let mut splits = Vec::new();
    let (m, s) = span_accuracy(
        predicted_train,
        data.train_stim.values(),
        0..predicted_train.rows(),
    )?;
    splits.push(("train", m, s));
    let (m, s) = span_accuracy(
        predicted_test,
        data.test_stim.values(),
        0..predicted_test.rows(),
    )?;
    splits.push(("test", m, s));
    for (name, span) in category_spans(cfg.test_repetitions) {
        let (m, s) = span_accuracy(predicted_test, data.test_stim.values(), span)?;
        splits.push((name, m, s));
    }
    let patch = patch_scale_accuracy(&test_report);
    Ok(MethodEval {
        decoder,
        train_report,
        test_report,
        splits,
        patch,
    })
}

/// Everything a full run produces, ready for reporting.
pub struct RunReport {
    pub config_echo: String,
    pub train_digest: u64,
    pub test_digest: u64,
    pub svm_stats: BinStats,
    pub snn_stats: BinStats,
    pub svm_recovery: Option<BinRecovery>,
    pub snn_recovery: Option<BinRecovery>,
    pub methods: Vec<MethodEval>,
    /// (stage, seconds); excluded from deterministic artifacts.
    pub timings: Vec<(String, f64)>,
}

/// report.csv: one row per enabled decoder and split, fixed column order.
pub fn render_report_csv(report: &RunReport) -> String {
    let mut s = String::from("method,split,mean_accuracy,std_over_trials\n");
    for method in &report.methods {
        for (split, mean, std) in &method.splits {
            let _ = writeln!(s, "{},{split},{mean},{std}", method.decoder.name());
        }
    }
    s
}

fn render_patch_curve_csv(patch: &PatchCurve) -> String {
    let mut s = String::from("scale,mean_accuracy\n");
    for (i, v) in patch.values.iter().enumerate() {
        let _ = writeln!(s, "{},{v}", i + 1);
    }
    s
}

fn heatmap_to_pgm(map: &Matrix) -> Matrix {
    let max = map.data().iter().fold(0.0f64, |a, &b| a.max(b)).max(1.0);
    let mut out = Matrix::zeros(map.rows(), map.cols());
    for r in 0..map.rows() {
        for c in 0..map.cols() {
            out.set(r, c, (map.get(r, c) / max * 255.0).round());
        }
    }
    out
}

fn scale255(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            out.set(r, c, (m.get(r, c) * 255.0).round());
        }
    }
    out
}

/// Run the full pipeline and write every artifact under `cfg.out`.
/// Partial outputs are removed if any stage fails.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    let mut tracker = io::OutputTracker::new();
    match run_pipeline_inner(cfg, &mut tracker) {
        Ok(report) => {
            tracker.commit();
            Ok(report)
        }
        Err(e) => {
            tracker.rollback();
            Err(e)
        }
    }
}

fn run_pipeline_inner(cfg: &PipelineConfig, tracker: &mut io::OutputTracker) -> Result<RunReport> {
    let out = cfg.out.as_path();
    io::ensure_dir(out)?;
    let config_echo = cfg.echo();
    tracker.text(&out.join("config_effective.txt"), &config_echo)?;

    let mut timings: Vec<(String, f64)> = Vec::new();
    let clock = Instant::now();

    // generate
    let data = generate_working_set(cfg).map_err(|e| e.in_stage("gen"))?;
    timings.push(("gen".into(), clock.elapsed().as_secs_f64()));

    // correlate
    let clock = Instant::now();
    let graphs = build_graphs(cfg, &data).map_err(|e| e.in_stage("corr"))?;
    timings.push(("corr".into(), clock.elapsed().as_secs_f64()));

    let d1 = data.train_resp.n_voxels();
    let d2 = data.train_stim.n_pixels();
    let full = CorrelationGraph::all_voxels(d1, d2);

    // train + decode + evaluate per decoder
    let mut methods = Vec::new();
    let mut decoded = Vec::new();
    let mut trained = Vec::new();
    for &decoder in &cfg.decoders {
        let graph = decoder_graph(decoder, Some(&graphs), &full)?;
        let clock = Instant::now();
        let models = train_decoder(cfg, decoder, &data, graph).map_err(|e| e.in_stage("train"))?;
        timings.push((
            format!("train {}", decoder.name()),
            clock.elapsed().as_secs_f64(),
        ));

        let clock = Instant::now();
        let predicted_train =
            decode_set(cfg, &models, &data.train_resp, graph).map_err(|e| e.in_stage("decode"))?;
        let predicted_test =
            decode_set(cfg, &models, &data.test_resp, graph).map_err(|e| e.in_stage("decode"))?;
        timings.push((
            format!("decode {}", decoder.name()),
            clock.elapsed().as_secs_f64(),
        ));
        let eval = evaluate_method(cfg, decoder, &predicted_train, &predicted_test, &data)
            .map_err(|e| e.in_stage("eval"))?;
        methods.push(eval);
        decoded.push((decoder, predicted_train, predicted_test));
        trained.push((decoder, models));
    }

    let svm_stats = bin_stats(&graphs.svm.graph);
    let snn_stats = bin_stats(&graphs.snn.graph);
    let (svm_recovery, snn_recovery) = match &data.truth {
        Some(truth) => (
            Some(bin_recovery(&graphs.svm.graph, truth).map_err(CliError::from)?),
            Some(bin_recovery(&graphs.snn.graph, truth).map_err(CliError::from)?),
        ),
        None => (None, None),
    };

    let report = RunReport {
        config_echo,
        train_digest: data.train_digest,
        test_digest: data.test_digest,
        svm_stats,
        snn_stats,
        svm_recovery,
        snn_recovery,
        methods,
        timings,
    };

    write_artifacts(cfg, tracker, &data, &graphs, &trained, &decoded, &report)?;
    Ok(report)
}

/// Write dataset, graph dumps, models, predictions, images, and reports.
fn write_artifacts(
    cfg: &PipelineConfig,
    tracker: &mut io::OutputTracker,
    data: &WorkingSet,
    graphs: &GraphBundle,
    trained: &[(Decoder, Models)],
    decoded: &[(Decoder, Matrix, Matrix)],
    report: &RunReport,
) -> Result<()> {
    let out = cfg.out.as_path();
    write_dataset_artifacts(out, data, tracker)?;
    write_graph_artifacts(out, graphs, tracker)?;
    for (decoder, models) in trained {
        write_model_artifacts(cfg, out, *decoder, models, tracker)?;
    }
    for (decoder, predicted_train, predicted_test) in decoded {
        write_decoded_artifacts(cfg, out, *decoder, predicted_train, predicted_test, tracker)?;
    }
    write_eval_artifacts(
        cfg,
        out,
        &graphs.svm.graph,
        &graphs.snn.graph,
        report,
        tracker,
    )?;
    tracker.text(&out.join("run_summary.txt"), &render_summary(report))?;
    Ok(())
}

pub fn write_dataset_artifacts(
    out: &Path,
    data: &WorkingSet,
    tracker: &mut io::OutputTracker,
) -> Result<()> {
    let train = out.join("dataset/train");
    io::write_dataset(&train, &data.train_stim, &data.train_resp)?;
    let test = out.join("dataset/test");
    io::write_dataset(&test, &data.test_stim, &data.test_resp)?;
    for dir in [&train, &test] {
        for file in ["meta.txt", "stimuli.csv", "responses.csv", "positions.csv"] {
            tracker.record(&dir.join(file));
        }
    }
    if let Some(truth) = &data.truth {
        let rf = out.join("dataset/rf.csv");
        io::write_rf(&rf, truth)?;
        tracker.record(&rf);
    }
    Ok(())
}

pub fn write_graph_artifacts(
    out: &Path,
    graphs: &GraphBundle,
    tracker: &mut io::OutputTracker,
) -> Result<()> {
    for mode in [&graphs.svm, &graphs.snn] {
        let dir = out.join(match mode.mode {
            RadiusMode::SvmMinEdge => "graph_svm",
            RadiusMode::SnnMeanDistance => "graph_snn",
        });
        io::ensure_dir(&dir)?;
        io::write_edges_csv(&dir.join("edges.csv"), &graphs.topology.edges())?;
        io::write_radii_csv(&dir.join("radii.csv"), &mode.radii)?;
        io::write_bins_csv(&dir.join("bins.csv"), mode.graph.bins())?;
        io::write_matrix_csv(&dir.join("weights.csv"), mode.graph.weights())?;
        io::write_binary_matrix_csv(&dir.join("corr.csv"), mode.graph.corr())?;
        for file in [
            "edges.csv",
            "radii.csv",
            "bins.csv",
            "weights.csv",
            "corr.csv",
        ] {
            tracker.record(&dir.join(file));
        }
    }
    Ok(())
}

pub fn write_model_artifacts(
    cfg: &PipelineConfig,
    out: &Path,
    decoder: Decoder,
    models: &Models,
    tracker: &mut io::OutputTracker,
) -> Result<()> {
    let dir = out.join("models");
    io::ensure_dir(&dir)?;
    let tag = file_tag(decoder);
    match models {
        Models::Svm(m) => {
            let path = dir.join(format!("{tag}_models.csv"));
            io::write_svm_models(&path, m)?;
            tracker.record(&path);
        }
        Models::Snn(m) => {
            let wpath = dir.join(format!("{tag}_models.csv"));
            let rpath = dir.join(format!("{tag}_ranges.csv"));
            io::write_snn_models(&wpath, &rpath, m)?;
            let ppath = dir.join("sim_params.txt");
            io::write_sim_params(&ppath, &cfg.snn)?;
            tracker.record(&wpath);
            tracker.record(&rpath);
            tracker.record(&ppath);
        }
    }
    Ok(())
}

pub fn write_decoded_artifacts(
    cfg: &PipelineConfig,
    out: &Path,
    decoder: Decoder,
    predicted_train: &Matrix,
    predicted_test: &Matrix,
    tracker: &mut io::OutputTracker,
) -> Result<()> {
    let tag = file_tag(decoder);
    let train_path = out.join(format!("decoded/decoded_train_{tag}.csv"));
    io::write_matrix_csv(&train_path, predicted_train)?;
    tracker.record(&train_path);
    let test_path = out.join(format!("decoded/decoded_test_{tag}.csv"));
    io::write_matrix_csv(&test_path, predicted_test)?;
    tracker.record(&test_path);
    for i in 0..predicted_test.rows() {
        let mut img = Matrix::zeros(cfg.rows, cfg.cols);
        for k in 0..predicted_test.cols() {
            img.set(k / cfg.cols, k % cfg.cols, predicted_test.get(i, k) * 255.0);
        }
        let path = out.join(format!("decoded/{tag}/trial_{i:03}.pgm"));
        io::write_pgm(&path, &img, 255)?;
        tracker.record(&path);
    }
    Ok(())
}

/// report.csv plus per-method accuracy maps, patch curves, and the bin
/// heat maps of both radius modes.
pub fn write_eval_artifacts(
    cfg: &PipelineConfig,
    out: &Path,
    svm_graph: &CorrelationGraph,
    snn_graph: &CorrelationGraph,
    report: &RunReport,
    tracker: &mut io::OutputTracker,
) -> Result<()> {
    tracker.text(&out.join("report.csv"), &render_report_csv(report))?;
    for method in &report.methods {
        let tag = file_tag(method.decoder);
        let acc_path = out.join(format!("eval/pixel_accuracy_{tag}.csv"));
        io::write_matrix_csv(&acc_path, &method.test_report.per_pixel)?;
        tracker.record(&acc_path);
        tracker.text(
            &out.join(format!("eval/patch_curve_{tag}.csv")),
            &render_patch_curve_csv(&method.patch),
        )?;
        let map_path = out.join(format!("eval/accuracy_map_{tag}.pgm"));
        io::write_pgm(&map_path, &scale255(&method.test_report.per_pixel), 255)?;
        tracker.record(&map_path);
    }
    let svm_map = bin_heatmap(svm_graph, cfg.rows, cfg.cols)?;
    let snn_map = bin_heatmap(snn_graph, cfg.rows, cfg.cols)?;
    for (name, map) in [("svm", &svm_map), ("snn", &snn_map)] {
        let csv_path = out.join(format!("eval/bin_heatmap_{name}.csv"));
        io::write_matrix_csv(&csv_path, map)?;
        tracker.record(&csv_path);
        let pgm_path = out.join(format!("eval/heatmap_{name}.pgm"));
        io::write_pgm(&pgm_path, &heatmap_to_pgm(map), 255)?;
        tracker.record(&pgm_path);
    }
    Ok(())
}

/// File-name fragment for a decoder (`pure-svm` -> `pure_svm`).
pub fn file_tag(decoder: Decoder) -> String {
    decoder.name().replace('-', "_")
}

fn render_summary(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "train_digest={:016x}", report.train_digest);
    let _ = writeln!(s, "test_digest={:016x}", report.test_digest);
    let _ = writeln!(
        s,
        "bins_svm: mean_size={} utilization={}",
        report.svm_stats.mean_size, report.svm_stats.utilization
    );
    let _ = writeln!(
        s,
        "bins_snn: mean_size={} utilization={}",
        report.snn_stats.mean_size, report.snn_stats.utilization
    );
    if let Some(rec) = &report.svm_recovery {
        let _ = writeln!(
            s,
            "recovery_svm: precision={} recall={} f1={} skipped={}",
            rec.mean_precision, rec.mean_recall, rec.mean_f1, rec.skipped
        );
    }
    if let Some(rec) = &report.snn_recovery {
        let _ = writeln!(
            s,
            "recovery_snn: precision={} recall={} f1={} skipped={}",
            rec.mean_precision, rec.mean_recall, rec.mean_f1, rec.skipped
        );
    }
    for method in &report.methods {
        for (split, mean, std) in &method.splits {
            let _ = writeln!(
                s,
                "accuracy {} {split}: mean={mean} std={std}",
                method.decoder.name()
            );
        }
    }
    for (stage, secs) in &report.timings {
        let _ = writeln!(s, "timing {stage}: {secs:.3}s");
    }
    s
}
