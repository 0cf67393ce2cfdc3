//! Per-pixel soft-margin linear SVM trained by dual coordinate ascent.
//!
//! The bias is folded into the weight vector as a constant feature, which
//! turns the dual into a pure box-constrained problem; each coordinate
//! update is an exact one-variable maximization, so the dual objective
//! never decreases. Coordinates are visited cyclically, keeping the
//! solver deterministic without any seed plumbing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::correlation::CorrelationGraph;
use crate::dataset::BinaryImage;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Solver settings for one pixel model.
#[derive(Debug, Clone)]
pub struct SvmConfig {
    /// Soft-margin trade-off.
    pub c: f64,
    /// KKT residual (max projected gradient) required to stop.
    pub tolerance: f64,
    /// Cap on coordinate updates; `None` means 10 * N * features.
    pub max_updates: Option<u64>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tolerance: 1e-3,
            max_updates: None,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::invalid("svm C must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("svm tolerance must be positive"));
        }
        Ok(())
    }
}

/// Convergence data kept alongside each trained pixel model.
#[derive(Debug, Clone)]
pub struct SvmDiagnostics {
    /// Dual objective after each epoch.
    pub objective_per_epoch: Vec<f64>,
    /// Final dual objective.
    pub objective: f64,
    /// Max projected-gradient magnitude over the last epoch.
    pub kkt_residual: f64,
    /// Completed epochs.
    pub epochs: u64,
    /// Whether the tolerance was met before the update cap.
    pub converged: bool,
    /// Final dual variables (one per training trial).
    pub alphas: Vec<f64>,
}

/// Linear decision rule for one pixel over its bin's voxels.
#[derive(Debug, Clone)]
pub struct LinearPixelModel {
    /// One weight per bin member (index-aligned with `members`).
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Voxel indices this model reads, ascending.
    pub members: Vec<u32>,
    /// Set when training labels were all identical; predictions return it.
    pub constant: Option<u8>,
    pub diagnostics: SvmDiagnostics,
}

impl LinearPixelModel {
    fn constant_model(members: Vec<u32>, value: u8) -> Self {
        LinearPixelModel {
            weights: vec![0.0; members.len()],
            bias: 0.0,
            members,
            constant: Some(value),
            diagnostics: SvmDiagnostics {
                objective_per_epoch: Vec::new(),
                objective: 0.0,
                kkt_residual: 0.0,
                epochs: 0,
                converged: true,
                alphas: Vec::new(),
            },
        }
    }
}

/// Train one pixel's soft-margin SVM on its bin features.
///
/// `labels` are the raw {0,1} pixel values; they are mapped to -1/+1
/// internally. An all-same-label input short-circuits to a constant model
/// with zero solver iterations.
pub fn train_pixel_svm(
    features: &Matrix,
    labels: &[u8],
    members: &[u32],
    cfg: &SvmConfig,
) -> Result<LinearPixelModel> {
    cfg.validate()?;
    let n = features.rows();
    let f = features.cols();
    if labels.len() != n {
        return Err(Error::invalid("label count differs from trial count"));
    }
    if members.len() != f {
        return Err(Error::invalid("member count differs from feature count"));
    }
    if n == 0 {
        return Err(Error::invalid("training needs at least one trial"));
    }
    if !features.all_finite() {
        return Err(Error::invalid("features must be finite"));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }

    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Ok(LinearPixelModel::constant_model(members.to_vec(), first));
    }

    let y: Vec<f64> = labels.iter().map(|&l| 2.0 * l as f64 - 1.0).collect();
    // squared norms of the bias-augmented rows
    let qdiag: Vec<f64> = (0..n)
        .map(|i| features.row(i).iter().map(|x| x * x).sum::<f64>() + 1.0)
        .collect();

    let mut w = vec![0.0; f];
    let mut bias = 0.0;
    let mut alpha = vec![0.0; n];
    let max_updates = cfg
        .max_updates
        .unwrap_or(10 * n as u64 * f.max(1) as u64)
        .max(n as u64);

    let mut updates = 0u64;
    let mut epochs = 0u64;
    let mut kkt = f64::INFINITY;
    let mut converged = false;
    let mut objective_per_epoch = Vec::new();

    while updates < max_updates {
        let mut epoch_kkt = 0.0f64;
        for i in 0..n {
            if updates >= max_updates {
                break;
            }
            updates += 1;
            let xi = features.row(i);
            let margin = dot(&w, xi) + bias;
            let g = y[i] * margin - 1.0;
            // projected gradient at the box boundary
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == cfg.c {
                g.max(0.0)
            } else {
                g
            };
            epoch_kkt = epoch_kkt.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / qdiag[i]).clamp(0.0, cfg.c);
                let delta = (alpha[i] - old) * y[i];
                axpy(delta, xi, &mut w);
                bias += delta;
            }
        }
        epochs += 1;
        kkt = epoch_kkt;
        let obj: f64 = alpha.iter().sum::<f64>() - 0.5 * (dot(&w, &w) + bias * bias);
        objective_per_epoch.push(obj);
        if epoch_kkt <= cfg.tolerance {
            converged = true;
            break;
        }
    }

    let objective = objective_per_epoch.last().copied().unwrap_or(0.0);
    Ok(LinearPixelModel {
        weights: w,
        bias,
        members: members.to_vec(),
        constant: None,
        diagnostics: SvmDiagnostics {
            objective_per_epoch,
            objective,
            kkt_residual: kkt,
            epochs,
            converged,
            alphas: alpha,
        },
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Predict one pixel: 1 iff the decision value is non-negative (boundary
/// points classify as 1).
pub fn predict_pixel_svm(model: &LinearPixelModel, feature: &[f64]) -> Result<u8> {
    if let Some(v) = model.constant {
        return Ok(v);
    }
    if feature.len() != model.weights.len() {
        return Err(Error::invalid(format!(
            "feature length {} does not match model width {}",
            feature.len(),
            model.weights.len()
        )));
    }
    Ok((dot(&model.weights, feature) + model.bias >= 0.0) as u8)
}

/// Reconstruct a full image from one response vector: each pixel's model
/// reads the response restricted to that pixel's bin.
pub fn decode_image_svm(
    models: &[LinearPixelModel],
    response: &[f64],
    graph: &CorrelationGraph,
    rows: usize,
    cols: usize,
) -> Result<BinaryImage> {
    if models.len() != graph.n_pixels() || rows * cols != graph.n_pixels() {
        return Err(Error::invalid(
            "need exactly one model per pixel of the correlation graph",
        ));
    }
    let mut pixels = Vec::with_capacity(models.len());
    let mut feature = Vec::new();
    for (k, model) in models.iter().enumerate() {
        feature.clear();
        for &j in graph.bin(k) {
            let j = j as usize;
            if j >= response.len() {
                return Err(Error::invalid("bin index outside the response vector"));
            }
            feature.push(response[j]);
        }
        pixels.push(predict_pixel_svm(model, &feature)?);
    }
    BinaryImage::new(rows, cols, pixels)
}
