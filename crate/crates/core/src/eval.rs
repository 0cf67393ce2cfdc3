//! Pixel-wise accuracy reports, patch-scale curves, bin heat maps,
//! bin-recovery scoring, and the binary PGM encoder.

use alloc::string::String;

use alloc::vec::Vec;

use crate::correlation::CorrelationGraph;
use crate::dataset::GroundTruth;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-pixel reconstruction accuracy over a set of trials.
#[derive(Debug, Clone)]
pub struct AccuracyReport {
    /// Accuracy per pixel, as a rows x cols matrix.
    pub per_pixel: Matrix,
    /// Mean of the per-pixel accuracies.
    pub mean: f64,
    /// Method tag carried through to reports.
    pub method: String,
}

/// Mean accuracy over centered s x s patches, s = 1..=min(rows, cols).
#[derive(Debug, Clone, PartialEq)]
pub struct PatchCurve {
    pub values: Vec<f64>,
}

/// Pixel-wise agreement between predicted and true binary trials. For
/// {0,1} values the per-pixel squared Euclidean distance reduces to a
/// disagreement count, so accuracy is the fraction of matching trials.
pub fn pixel_accuracy(
    predicted: &Matrix,
    truth: &Matrix,
    rows: usize,
    cols: usize,
    method: &str,
) -> Result<AccuracyReport> {
    if predicted.rows() != truth.rows() || predicted.cols() != truth.cols() {
        return Err(Error::invalid("predicted/truth shapes differ"));
    }
    if predicted.cols() != rows * cols {
        return Err(Error::invalid("pixel count does not match the image grid"));
    }
    let n = predicted.rows();
    if n == 0 {
        return Err(Error::invalid("accuracy needs at least one trial"));
    }
    let mut per_pixel = Matrix::zeros(rows, cols);
    let mut total = 0.0;
    for k in 0..rows * cols {
        let mut agree = 0usize;
        for i in 0..n {
            if predicted.get(i, k) == truth.get(i, k) {
                agree += 1;
            }
        }
        let acc = agree as f64 / n as f64;
        per_pixel.set(k / cols, k % cols, acc);
        total += acc;
    }
    Ok(AccuracyReport {
        per_pixel,
        mean: total / (rows * cols) as f64,
        method: String::from(method),
    })
}

/// Mean accuracy over the trials in `span` (used for the per-category
/// splits of a test set), plus the standard deviation of per-trial
/// accuracies over that span.
pub fn span_accuracy(
    predicted: &Matrix,
    truth: &Matrix,
    span: core::ops::Range<usize>,
) -> Result<(f64, f64)> {
    if predicted.rows() != truth.rows() || predicted.cols() != truth.cols() {
        return Err(Error::invalid("predicted/truth shapes differ"));
    }
    if span.end > predicted.rows() || span.is_empty() {
        return Err(Error::invalid("trial span out of range"));
    }
    let d2 = predicted.cols();
    let mut per_trial = Vec::with_capacity(span.len());
    for i in span {
        let mut agree = 0usize;
        for k in 0..d2 {
            if predicted.get(i, k) == truth.get(i, k) {
                agree += 1;
            }
        }
        per_trial.push(agree as f64 / d2 as f64);
    }
    let n = per_trial.len() as f64;
    let mean = per_trial.iter().sum::<f64>() / n;
    let var = per_trial
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / n;
    Ok((mean, libm::sqrt(var)))
}

/// Accuracy of centered square patches of growing scale. The offset of an
/// s x s patch is floor((rows - s) / 2) on both axes, and the value at
/// the full scale equals the overall mean exactly.
pub fn patch_scale_accuracy(report: &AccuracyReport) -> PatchCurve {
    let rows = report.per_pixel.rows();
    let cols = report.per_pixel.cols();
    let max_s = rows.min(cols);
    let mut values = Vec::with_capacity(max_s);
    for s in 1..=max_s {
        let top = (rows - s) / 2;
        let left = (cols - s) / 2;
        let mut sum = 0.0;
        for r in top..top + s {
            for c in left..left + s {
                sum += report.per_pixel.get(r, c);
            }
        }
        values.push(sum / (s * s) as f64);
    }
    PatchCurve { values }
}

/// Map each bin's size onto its pixel's image coordinates.
pub fn bin_heatmap(graph: &CorrelationGraph, rows: usize, cols: usize) -> Result<Matrix> {
    if graph.n_pixels() != rows * cols {
        return Err(Error::invalid("graph pixel count does not match the grid"));
    }
    let mut map = Matrix::zeros(rows, cols);
    for k in 0..graph.n_pixels() {
        map.set(k / cols, k % cols, graph.bin(k).len() as f64);
    }
    Ok(map)
}

/// Precision/recall/F1 of the recovered bins against the ground-truth
/// relevance sets.
#[derive(Debug, Clone)]
pub struct BinRecovery {
    /// (precision, recall, f1) per pixel; `None` where the truth set is
    /// empty (those pixels are skipped and counted).
    pub per_pixel: Vec<Option<(f64, f64, f64)>>,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub skipped: usize,
}

/// Compare every bin with the voxels whose receptive field covers the
/// pixel.
pub fn bin_recovery(graph: &CorrelationGraph, truth: &GroundTruth) -> Result<BinRecovery> {
    let d2 = graph.n_pixels();
    if truth.rf().cols() != d2 || truth.rf().rows() != graph.n_voxels() {
        return Err(Error::invalid(
            "ground truth shape does not match the graph",
        ));
    }
    let mut per_pixel = Vec::with_capacity(d2);
    let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
    let mut scored = 0usize;
    let mut skipped = 0usize;
    for k in 0..d2 {
        let truth_set = truth.relevant_voxels(k);
        if truth_set.is_empty() {
            per_pixel.push(None);
            skipped += 1;
            continue;
        }
        let bin = graph.bin(k);
        let hit = bin
            .iter()
            .filter(|m| truth_set.binary_search(m).is_ok())
            .count() as f64;
        let precision = if bin.is_empty() {
            0.0
        } else {
            hit / bin.len() as f64
        };
        let recall = hit / truth_set.len() as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_pixel.push(Some((precision, recall, f1)));
        sp += precision;
        sr += recall;
        sf += f1;
        scored += 1;
    }
    if scored == 0 {
        return Err(Error::invalid("every pixel had an empty truth set"));
    }
    Ok(BinRecovery {
        per_pixel,
        mean_precision: sp / scored as f64,
        mean_recall: sr / scored as f64,
        mean_f1: sf / scored as f64,
        skipped,
    })
}

/// Encode a matrix as a binary PGM (P5) byte stream. Entries must already
/// lie in [0, max_val]; they are rounded to the nearest integer.
pub fn encode_pgm(image: &Matrix, max_val: u8) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(image.rows() * image.cols() + 32);
    out.extend_from_slice(b"P5\n");
    push_decimal(&mut out, image.cols());
    out.push(b' ');
    push_decimal(&mut out, image.rows());
    out.push(b'\n');
    push_decimal(&mut out, max_val as usize);
    out.push(b'\n');
    for &v in image.data() {
        if !(0.0..=max_val as f64).contains(&v) {
            return Err(Error::invalid("pgm entries must lie in [0, max_val]"));
        }
        out.push(libm::round(v) as u8);
    }
    Ok(out)
}

fn push_decimal(out: &mut Vec<u8>, value: usize) {
    let mut buf = [0u8; 20];
    let mut v = value;
    let mut i = buf.len();
    loop {
        i -= 1;
        buf[i] = b'0' + (v % 10) as u8;
        v /= 10;
        if v == 0 {
            break;
        }
    }
    out.extend_from_slice(&buf[i..]);
}
