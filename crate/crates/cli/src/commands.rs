//! File-staged subcommands. Each stage reads its predecessors' artifacts
//! from the output directory and writes its own, so the pipeline can be
//! driven step by step; `run` executes everything in memory.

use std::path::Path;

use corrnet_core::correlation::{bin_stats, CorrelationGraph};
use corrnet_core::eval::bin_recovery;

use crate::config::{Decoder, PipelineConfig};
use crate::error::{CliError, Result};
use crate::io;
use crate::pipeline::{
    self, build_graphs, evaluate_method, file_tag, generate_working_set, load_working_set, Models,
    RunReport,
};

/// Which subcommand to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Gen,
    Corr,
    Train,
    Decode,
    Eval,
    Run,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gen" => Ok(Command::Gen),
            "corr" => Ok(Command::Corr),
            "train" => Ok(Command::Train),
            "decode" => Ok(Command::Decode),
            "eval" => Ok(Command::Eval),
            "run" => Ok(Command::Run),
            other => Err(CliError::Config(format!(
                "unknown subcommand `{other}` (expected gen, corr, train, decode, eval, run)"
            ))),
        }
    }
}

fn echo_config(cfg: &PipelineConfig, tracker: &mut io::OutputTracker) -> Result<()> {
    io::ensure_dir(&cfg.out)?;
    tracker.text(&cfg.out.join("config_effective.txt"), &cfg.echo())
}

/// Load the graph a decoder trains/decodes against from the staged
/// `bins.csv` dumps (pure decoders get the all-voxels graph).
fn staged_graph(decoder: Decoder, out: &Path, d1: usize, d2: usize) -> Result<CorrelationGraph> {
    let dir = match decoder {
        Decoder::Svm => "graph_svm",
        Decoder::Snn => "graph_snn",
        Decoder::PureSvm | Decoder::PureSnn => {
            return Ok(CorrelationGraph::all_voxels(d1, d2));
        }
    };
    let bins = io::read_bins_csv(&out.join(dir).join("bins.csv"), d2, d1)?;
    Ok(CorrelationGraph::from_bins(bins, d1)?)
}

pub fn execute(cmd: Command, cfg: &PipelineConfig) -> Result<()> {
    let mut tracker = io::OutputTracker::new();
    let result = execute_inner(cmd, cfg, &mut tracker);
    match result {
        Ok(()) => {
            tracker.commit();
            Ok(())
        }
        Err(e) => {
            tracker.rollback();
            Err(e)
        }
    }
}

fn execute_inner(
    cmd: Command,
    cfg: &PipelineConfig,
    tracker: &mut io::OutputTracker,
) -> Result<()> {
    match cmd {
        Command::Gen => {
            echo_config(cfg, tracker)?;
            let data = generate_working_set(cfg).map_err(|e| e.in_stage("gen"))?;
            pipeline::write_dataset_artifacts(&cfg.out, &data, tracker)?;
            println!(
                "gen: wrote {} train and {} test trials to {}",
                data.train_stim.n_trials(),
                data.test_stim.n_trials(),
                cfg.out.join("dataset").display()
            );
            Ok(())
        }
        Command::Corr => {
            echo_config(cfg, tracker)?;
            let data = load_working_set(&cfg.out).map_err(|e| e.in_stage("corr"))?;
            let graphs = build_graphs(cfg, &data).map_err(|e| e.in_stage("corr"))?;
            pipeline::write_graph_artifacts(&cfg.out, &graphs, tracker)?;
            let svm = bin_stats(&graphs.svm.graph);
            let snn = bin_stats(&graphs.snn.graph);
            println!(
                "corr: svm bins mean {:.2} util {:.2}; snn bins mean {:.2} util {:.2}",
                svm.mean_size, svm.utilization, snn.mean_size, snn.utilization
            );
            Ok(())
        }
        Command::Train => {
            echo_config(cfg, tracker)?;
            let data = load_working_set(&cfg.out).map_err(|e| e.in_stage("train"))?;
            let d1 = data.train_resp.n_voxels();
            let d2 = data.train_stim.n_pixels();
            for &decoder in &cfg.decoders {
                let graph =
                    staged_graph(decoder, &cfg.out, d1, d2).map_err(|e| e.in_stage("train"))?;
                let models = pipeline::train_decoder(cfg, decoder, &data, &graph)
                    .map_err(|e| e.in_stage("train"))?;
                pipeline::write_model_artifacts(cfg, &cfg.out, decoder, &models, tracker)?;
                println!("train: {} models written", decoder.name());
            }
            Ok(())
        }
        Command::Decode => {
            echo_config(cfg, tracker)?;
            let data = load_working_set(&cfg.out).map_err(|e| e.in_stage("decode"))?;
            let d1 = data.train_resp.n_voxels();
            let d2 = data.train_stim.n_pixels();
            for &decoder in &cfg.decoders {
                let graph =
                    staged_graph(decoder, &cfg.out, d1, d2).map_err(|e| e.in_stage("decode"))?;
                let models =
                    read_models(decoder, &cfg.out, d2).map_err(|e| e.in_stage("decode"))?;
                let predicted_train = pipeline::decode_set(cfg, &models, &data.train_resp, &graph)
                    .map_err(|e| e.in_stage("decode"))?;
                let predicted_test = pipeline::decode_set(cfg, &models, &data.test_resp, &graph)
                    .map_err(|e| e.in_stage("decode"))?;
                pipeline::write_decoded_artifacts(
                    cfg,
                    &cfg.out,
                    decoder,
                    &predicted_train,
                    &predicted_test,
                    tracker,
                )?;
                println!("decode: {} reconstructions written", decoder.name());
            }
            Ok(())
        }
        Command::Eval => {
            echo_config(cfg, tracker)?;
            let data = load_working_set(&cfg.out).map_err(|e| e.in_stage("eval"))?;
            let d1 = data.train_resp.n_voxels();
            let d2 = data.train_stim.n_pixels();
            let mut methods = Vec::new();
            for &decoder in &cfg.decoders {
                let tag = file_tag(decoder);
                let predicted_train = io::read_matrix_csv(
                    &cfg.out.join(format!("decoded/decoded_train_{tag}.csv")),
                    Some(d2),
                )
                .map_err(|e| e.in_stage("eval"))?;
                let predicted_test = io::read_matrix_csv(
                    &cfg.out.join(format!("decoded/decoded_test_{tag}.csv")),
                    Some(d2),
                )
                .map_err(|e| e.in_stage("eval"))?;
                methods.push(
                    evaluate_method(cfg, decoder, &predicted_train, &predicted_test, &data)
                        .map_err(|e| e.in_stage("eval"))?,
                );
            }
            let svm_graph =
                staged_graph(Decoder::Svm, &cfg.out, d1, d2).map_err(|e| e.in_stage("eval"))?;
            let snn_graph =
                staged_graph(Decoder::Snn, &cfg.out, d1, d2).map_err(|e| e.in_stage("eval"))?;
            let (svm_recovery, snn_recovery) = match &data.truth {
                Some(truth) => (
                    Some(bin_recovery(&svm_graph, truth).map_err(CliError::from)?),
                    Some(bin_recovery(&snn_graph, truth).map_err(CliError::from)?),
                ),
                None => (None, None),
            };
            let report = RunReport {
                config_echo: cfg.echo(),
                train_digest: data.train_digest,
                test_digest: data.test_digest,
                svm_stats: bin_stats(&svm_graph),
                snn_stats: bin_stats(&snn_graph),
                svm_recovery,
                snn_recovery,
                methods,
                timings: Vec::new(),
            };
            pipeline::write_eval_artifacts(
                cfg, &cfg.out, &svm_graph, &snn_graph, &report, tracker,
            )?;
            print_accuracy_table(&report);
            Ok(())
        }
        Command::Run => {
            let report = pipeline::run_pipeline(cfg)?;
            print_accuracy_table(&report);
            Ok(())
        }
    }
}

fn read_models(decoder: Decoder, out: &Path, d2: usize) -> Result<Models> {
    let dir = out.join("models");
    let tag = file_tag(decoder);
    match decoder {
        Decoder::Svm | Decoder::PureSvm => Ok(Models::Svm(io::read_svm_models(
            &dir.join(format!("{tag}_models.csv")),
            d2,
        )?)),
        Decoder::Snn | Decoder::PureSnn => Ok(Models::Snn(io::read_snn_models(
            &dir.join(format!("{tag}_models.csv")),
            &dir.join(format!("{tag}_ranges.csv")),
            d2,
        )?)),
    }
}

fn print_accuracy_table(report: &RunReport) {
    for method in &report.methods {
        for (split, mean, std) in &method.splits {
            println!(
                "{:<10} {:<9} accuracy {:.4} +/- {:.4}",
                method.decoder.name(),
                split,
                mean,
                std
            );
        }
    }
}
