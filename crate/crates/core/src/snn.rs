//! Tempotron spiking decoder: latency spike encoding of bin features, a
//! leaky-integrate-and-fire membrane driven by a normalized double
//! exponential PSP kernel, and the bright/dark error learning rule.
//!
//! Stronger responses spike earlier. The membrane trace is the plain PSP
//! sum on a fixed time grid; classification ends at the first threshold
//! crossing (recorded as a reset to the rest potential), while learning
//! reads the pre-reset maximum of the trace.

use alloc::vec;
use alloc::vec::Vec;

use crate::correlation::CorrelationGraph;
use crate::dataset::BinaryImage;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Simulation and learning constants (times in ms).
#[derive(Debug, Clone)]
pub struct SimParams {
    /// Membrane time constant.
    pub tau_m: f64,
    /// Synaptic time constant (tau_m = 4 * tau_s by default).
    pub tau_s: f64,
    /// Firing threshold.
    pub v_thre: f64,
    /// Reset/rest potential.
    pub v_rest: f64,
    /// Membrane resistance (dimensionless bookkeeping constant).
    pub membrane_resistance: f64,
    /// Encoding window: spikes land in [0, window].
    pub window: f64,
    /// Simulation step.
    pub dt: f64,
    /// Learning rate.
    pub lr: f64,
    /// Training epoch cap.
    pub max_epochs: u32,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            tau_m: 20.0,
            tau_s: 5.0,
            v_thre: 1.0,
            v_rest: 0.6,
            membrane_resistance: 1.0,
            window: 100.0,
            dt: 1.0,
            lr: 0.005,
            max_epochs: 500,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_m > self.tau_s && self.tau_s > 0.0) {
            return Err(Error::invalid("need tau_m > tau_s > 0"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("dt must be positive"));
        }
        if !(self.window >= self.dt) {
            return Err(Error::invalid("window must cover at least one step"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }

    /// Closed-form location of the PSP kernel peak.
    pub fn kernel_peak_time(&self) -> f64 {
        (self.tau_m * self.tau_s / (self.tau_m - self.tau_s)) * libm::log(self.tau_m / self.tau_s)
    }

    /// Normalization constant making the kernel peak exactly 1.
    pub fn kernel_v0(&self) -> f64 {
        let s = self.kernel_peak_time();
        1.0 / (libm::exp(-s / self.tau_m) - libm::exp(-s / self.tau_s))
    }

    /// Normalized PSP kernel K(s); zero for s < 0.
    pub fn kernel(&self, s: f64) -> f64 {
        if s < 0.0 {
            0.0
        } else {
            self.kernel_v0() * (libm::exp(-s / self.tau_m) - libm::exp(-s / self.tau_s))
        }
    }

    /// Number of grid points covering [0, window + 5 tau_m].
    pub fn grid_len(&self) -> usize {
        (libm::ceil((self.window + 5.0 * self.tau_m) / self.dt) as usize) + 1
    }
}

/// Latency-coded spike times, one optional spike per afferent.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    /// Spike time per afferent, in ms within [0, window].
    pub times: Vec<f64>,
}

impl SpikeTrain {
    pub fn n_afferents(&self) -> usize {
        self.times.len()
    }
}

/// Per-afferent encoding range frozen from the training features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingRange {
    pub min: f64,
    pub max: f64,
}

/// Trained Tempotron for one pixel.
#[derive(Debug, Clone)]
pub struct TempotronModel {
    /// Synaptic weight per bin member (index-aligned with `members`).
    pub weights: Vec<f64>,
    /// Voxel indices this model reads, ascending.
    pub members: Vec<u32>,
    /// Train-set min/max per afferent, used by the latency code.
    pub ranges: Vec<EncodingRange>,
    /// Misclassified trials per epoch.
    pub errors_per_epoch: Vec<u32>,
    /// Whether training hit zero errors before the epoch cap.
    pub converged: bool,
}

/// What one membrane simulation produced.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub fired: bool,
    /// Grid time of the pre-reset trace maximum (earliest tie wins).
    pub t_max: f64,
    /// Pre-reset maximum potential.
    pub v_max: f64,
    /// Sampled trace with the post-crossing reset applied.
    pub trace: Vec<f64>,
}

/// Latency code: the strongest in-range response spikes at t = 0, the
/// weakest at t = window; times snap to the dt grid. Constant-range
/// afferents emit the latest (least influential) spike.
pub fn encode_spikes(
    feature: &[f64],
    ranges: &[EncodingRange],
    params: &SimParams,
) -> Result<SpikeTrain> {
    if feature.len() != ranges.len() {
        return Err(Error::invalid("feature/range length mismatch"));
    }
    let mut times = Vec::with_capacity(feature.len());
    for (x, r) in feature.iter().zip(ranges) {
        let span = r.max - r.min;
        let t = if span <= 0.0 {
            params.window
        } else {
            let u = ((x - r.min) / span).clamp(0.0, 1.0);
            let raw = (1.0 - u) * params.window;
            libm::round(raw / params.dt) * params.dt
        };
        times.push(t);
    }
    Ok(SpikeTrain { times })
}

/// Evaluate the PSP-sum membrane on the dt grid.
pub fn simulate_membrane(
    spikes: &SpikeTrain,
    model: &TempotronModel,
    params: &SimParams,
) -> Result<SimOutcome> {
    if spikes.n_afferents() != model.weights.len() {
        return Err(Error::invalid("spike train width differs from model width"));
    }
    let len = params.grid_len();
    let v0 = params.kernel_v0();

    // kernel table on the grid, shared by every afferent
    let mut kernel = Vec::with_capacity(len);
    for g in 0..len {
        let s = g as f64 * params.dt;
        kernel.push(v0 * (libm::exp(-s / params.tau_m) - libm::exp(-s / params.tau_s)));
    }

    let mut trace = vec![params.v_rest; len];
    for (w, &t) in model.weights.iter().zip(&spikes.times) {
        if *w == 0.0 {
            continue;
        }
        let offset = libm::round(t / params.dt) as usize;
        if offset >= len {
            continue;
        }
        let span = len - offset;
        for (dst, k) in trace[offset..].iter_mut().zip(&kernel[..span]) {
            *dst += w * k;
        }
    }

    // pre-reset maximum, earliest grid point on ties
    let mut max_idx = 0;
    let mut v_max = trace[0];
    for (g, &v) in trace.iter().enumerate() {
        if v > v_max {
            v_max = v;
            max_idx = g;
        }
    }
    let t_max = max_idx as f64 * params.dt;

    // first crossing ends integration for classification
    let crossing = trace.iter().position(|&v| v >= params.v_thre);
    let fired = crossing.is_some();
    if let Some(cross) = crossing {
        for v in trace.iter_mut().skip(cross + 1) {
            *v = params.v_rest;
        }
    }

    Ok(SimOutcome {
        fired,
        t_max,
        v_max,
        trace,
    })
}

/// Apply the Tempotron learning rule for one labeled trial. Correct
/// classifications change nothing; a bright error (should have fired)
/// adds the kernel mass of every spike before t_max, a dark error
/// subtracts the same amount.
pub fn tempotron_update(
    model: &mut TempotronModel,
    spikes: &SpikeTrain,
    label: u8,
    params: &SimParams,
) -> Result<bool> {
    if label > 1 {
        return Err(Error::invalid("label must be 0 or 1"));
    }
    let outcome = simulate_membrane(spikes, model, params)?;
    let sign = match (label, outcome.fired) {
        (1, false) => 1.0, // bright error
        (0, true) => -1.0, // dark error
        _ => return Ok(false),
    };
    for (w, &t) in model.weights.iter_mut().zip(&spikes.times) {
        if t < outcome.t_max {
            *w += sign * params.lr * params.kernel(outcome.t_max - t);
        }
    }
    Ok(true)
}

/// Train one pixel's Tempotron: weights start from a seeded uniform draw
/// in [0, 0.01], trials are revisited in a seeded shuffled order each
/// epoch, and training stops at the first error-free epoch or the cap.
pub fn train_pixel_tempotron(
    features: &Matrix,
    labels: &[u8],
    members: &[u32],
    params: &SimParams,
    seed: u64,
) -> Result<TempotronModel> {
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
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }

    // encoding ranges frozen from the training features
    let mut ranges = Vec::with_capacity(f);
    for j in 0..f {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let v = features.get(i, j);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        ranges.push(EncodingRange { min: lo, max: hi });
    }

    let mut rng = Rng::from_seed(seed);
    let mut model = TempotronModel {
        weights: (0..f).map(|_| rng.next_f64() * 0.01).collect(),
        members: members.to_vec(),
        ranges,
        errors_per_epoch: Vec::new(),
        converged: false,
    };

    // spike trains are fixed by the frozen ranges; encode once
    let trains: Vec<SpikeTrain> = (0..n)
        .map(|i| encode_spikes(features.row(i), &model.ranges, params))
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..params.max_epochs {
        rng.shuffle(&mut order);
        let mut errors = 0u32;
        for &i in &order {
            if tempotron_update(&mut model, &trains[i], labels[i], params)? {
                errors += 1;
            }
        }
        model.errors_per_epoch.push(errors);
        if errors == 0 {
            model.converged = true;
            break;
        }
    }
    Ok(model)
}

/// Predict one pixel: encode the bin feature with the frozen training
/// ranges and report whether the membrane fires.
pub fn predict_pixel_tempotron(
    model: &TempotronModel,
    feature: &[f64],
    params: &SimParams,
) -> Result<u8> {
    let spikes = encode_spikes(feature, &model.ranges, params)?;
    Ok(simulate_membrane(&spikes, model, params)?.fired as u8)
}

/// Reconstruct a full image from one response vector with per-pixel
/// Tempotron models.
pub fn decode_image_snn(
    models: &[TempotronModel],
    response: &[f64],
    graph: &CorrelationGraph,
    params: &SimParams,
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
        pixels.push(predict_pixel_tempotron(model, &feature, params)?);
    }
    BinaryImage::new(rows, cols, pixels)
}
