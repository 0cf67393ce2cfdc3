//! Stimulus/response data model and the synthetic retinotopic benchmark
//! generator.
//!
//! The generator lays voxels on a jittered 3D grid, gives each relevant
//! voxel a 2D Gaussian receptive field whose center follows a smooth
//! retinotopic map of the voxel's grid coordinates, and emits responses as
//! the receptive-field-weighted sum of active pixels plus Gaussian noise.
//! The known receptive fields double as ground truth for scoring how well
//! the correlation graph recovers each pixel's informative voxel set.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{BinMatrix, Matrix};
use crate::rng::{derive_seed, Rng};

/// Binary stimulus patterns: one row per trial, pixels in row-major image
/// order (`pixel k` sits at image row `k / cols`, column `k % cols`).
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSet {
    values: Matrix,
    rows: usize,
    cols: usize,
}

impl StimulusSet {
    pub fn new(values: Matrix, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("stimulus grid dimensions must be positive"));
        }
        if values.cols() != rows * cols {
            return Err(Error::invalid(format!(
                "stimulus matrix has {} pixel columns, grid is {rows}x{cols}",
                values.cols()
            )));
        }
        if values.rows() == 0 {
            return Err(Error::invalid("stimulus set needs at least one trial"));
        }
        if values.data().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::invalid("stimulus entries must be 0 or 1"));
        }
        Ok(StimulusSet { values, rows, cols })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_trials(&self) -> usize {
        self.values.rows()
    }

    pub fn n_pixels(&self) -> usize {
        self.values.cols()
    }
}

/// A single decoded rows x cols binary image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != rows * cols {
            return Err(Error::invalid("pixel buffer does not match image size"));
        }
        if pixels.iter().any(|&p| p > 1) {
            return Err(Error::invalid("binary image entries must be 0 or 1"));
        }
        Ok(BinaryImage { rows, cols, pixels })
    }
}

/// 3D voxel positions in millimeters (world frame).
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelLayout {
    positions: Vec<[f64; 3]>,
}

/// Positions closer than this are considered duplicates at load time.
pub const DUPLICATE_TOLERANCE_MM: f64 = 1e-9;

impl VoxelLayout {
    pub fn new(positions: Vec<[f64; 3]>) -> Result<Self> {
        for (j, p) in positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid(format!("voxel {j} has non-finite position")));
            }
        }
        // duplicates break the triangulation and d(j,m)=0 divisions downstream
        for j in 0..positions.len() {
            for m in (j + 1)..positions.len() {
                if distance(&positions[j], &positions[m]) <= DUPLICATE_TOLERANCE_MM {
                    return Err(Error::invalid(format!(
                        "voxels {j} and {m} share a position (tolerance {DUPLICATE_TOLERANCE_MM} mm)"
                    )));
                }
            }
        }
        Ok(VoxelLayout { positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, j: usize) -> [f64; 3] {
        self.positions[j]
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// Euclidean distance between voxels j and l in mm.
    pub fn distance(&self, j: usize, l: usize) -> f64 {
        distance(&self.positions[j], &self.positions[l])
    }
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    libm::sqrt(dx * dx + dy * dy + dz * dz)
}

/// Real-valued voxel responses, one row per trial, paired with the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSet {
    values: Matrix,
    layout: VoxelLayout,
    standardized: bool,
    constant_voxels: Vec<u32>,
}

impl ResponseSet {
    pub fn new(values: Matrix, layout: VoxelLayout) -> Result<Self> {
        if values.cols() != layout.len() {
            return Err(Error::invalid(format!(
                "response matrix has {} voxel columns but layout has {}",
                values.cols(),
                layout.len()
            )));
        }
        if !values.all_finite() {
            return Err(Error::invalid("responses must be finite"));
        }
        Ok(ResponseSet {
            values,
            layout,
            standardized: false,
            constant_voxels: Vec::new(),
        })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn layout(&self) -> &VoxelLayout {
        &self.layout
    }

    pub fn n_trials(&self) -> usize {
        self.values.rows()
    }

    pub fn n_voxels(&self) -> usize {
        self.values.cols()
    }

    pub fn standardized(&self) -> bool {
        self.standardized
    }

    /// Voxels whose training variance was zero (zeroed by standardization).
    pub fn constant_voxels(&self) -> &[u32] {
        &self.constant_voxels
    }

    /// Reconstruct a set that was standardized elsewhere (e.g. loaded from
    /// disk with its standardized flag set).
    pub fn with_standardized_flag(mut self, standardized: bool) -> Self {
        self.standardized = standardized;
        self
    }
}

/// Per-voxel z-scoring statistics frozen from a training set, applied to
/// test data so no test statistics leak into the decoders.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
    constant: Vec<u32>,
}

impl Standardizer {
    /// Fit per-voxel mean and sample standard deviation (N-1 denominator).
    pub fn fit(responses: &ResponseSet) -> Result<Self> {
        let n = responses.n_trials();
        if n < 2 {
            return Err(Error::invalid("standardization needs at least 2 trials"));
        }
        let d1 = responses.n_voxels();
        let values = responses.values();
        let mut mean = vec![0.0; d1];
        let mut std = vec![0.0; d1];
        let mut constant = Vec::new();
        for j in 0..d1 {
            let mut sum = 0.0;
            for i in 0..n {
                sum += values.get(i, j);
            }
            let mu = sum / n as f64;
            let mut ss = 0.0;
            for i in 0..n {
                let d = values.get(i, j) - mu;
                ss += d * d;
            }
            let var = ss / (n - 1) as f64;
            mean[j] = mu;
            if var == 0.0 {
                constant.push(j as u32);
                std[j] = 0.0;
            } else {
                std[j] = libm::sqrt(var);
            }
        }
        Ok(Standardizer {
            mean,
            std,
            constant,
        })
    }

    /// Z-score with the fitted statistics; zero-variance voxels map to 0.
    pub fn apply(&self, responses: &ResponseSet) -> Result<ResponseSet> {
        if responses.n_voxels() != self.mean.len() {
            return Err(Error::invalid(
                "standardizer fitted on a different voxel count",
            ));
        }
        let n = responses.n_trials();
        let d1 = responses.n_voxels();
        let mut out = Matrix::zeros(n, d1);
        for i in 0..n {
            for j in 0..d1 {
                let v = if self.std[j] == 0.0 {
                    0.0
                } else {
                    (responses.values().get(i, j) - self.mean[j]) / self.std[j]
                };
                out.set(i, j, v);
            }
        }
        Ok(ResponseSet {
            values: out,
            layout: responses.layout.clone(),
            standardized: true,
            constant_voxels: self.constant.clone(),
        })
    }

    pub fn constant_voxels(&self) -> &[u32] {
        &self.constant
    }
}

/// Per-voxel z-score over trials. Idempotent; zero-variance voxels become
/// all-zero columns and are flagged.
pub fn standardize(responses: &ResponseSet) -> Result<ResponseSet> {
    let stats = Standardizer::fit(responses)?;
    stats.apply(responses)
}

/// Configuration of the synthetic retinotopic generator.
#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    /// Voxel grid dimensions (x, y, z); x and y drive the retinotopic map.
    pub grid: [usize; 3],
    /// Voxel pitch in mm per axis.
    pub pitch: [f64; 3],
    /// Positional jitter as a fraction of the pitch, in [0, 0.4].
    pub jitter: f64,
    /// Receptive-field center width in pixels.
    pub rf_sigma: f64,
    /// Amplitude of the broad surround component relative to the center
    /// peak (0 disables the surround).
    pub surround_amp: f64,
    /// Surround width as a multiple of `rf_sigma`.
    pub surround_scale: f64,
    /// Response gain.
    pub gain: f64,
    /// Signal-to-noise ratio; `f64::INFINITY` produces noiseless data.
    pub snr: f64,
    /// Fraction of the noise variance shared across all voxels per trial
    /// (the global signal of fMRI recordings), in [0, 1).
    pub noise_global: f64,
    /// Fraction of voxels carrying pure noise, in [0, 1).
    pub irrelevant: f64,
    /// When set, voxel density mapped onto the central half of the image
    /// is double the peripheral density.
    pub center_weight: bool,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            // a thin cortical slab: wide retinotopic coverage, two voxels
            // deep, 512 voxels total
            grid: [16, 16, 2],
            pitch: [1.875, 1.875, 3.0],
            jitter: 0.25,
            rf_sigma: 0.3,
            surround_amp: 0.9,
            surround_scale: 3.0,
            gain: 1.0,
            snr: 2.0,
            noise_global: 0.3,
            irrelevant: 0.3,
            center_weight: true,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.iter().any(|&g| g == 0) {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        if self.pitch.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::invalid("pitch must be positive"));
        }
        if !(self.jitter >= 0.0 && self.jitter <= 0.4) {
            return Err(Error::invalid("jitter fraction must lie in [0, 0.4]"));
        }
        if !(self.snr > 0.0) {
            return Err(Error::invalid("snr must be positive"));
        }
        if !(self.noise_global >= 0.0 && self.noise_global < 1.0) {
            return Err(Error::invalid("noise_global must lie in [0, 1)"));
        }
        if !(self.irrelevant >= 0.0 && self.irrelevant < 1.0) {
            return Err(Error::invalid("irrelevant fraction must lie in [0, 1)"));
        }
        if !(self.rf_sigma > 0.0) {
            return Err(Error::invalid("rf_sigma must be positive"));
        }
        if !(self.surround_amp >= 0.0 && self.surround_amp < 1.0) {
            return Err(Error::invalid("surround_amp must lie in [0, 1)"));
        }
        if !(self.surround_scale >= 1.0) {
            return Err(Error::invalid("surround_scale must be at least 1"));
        }
        if !(self.gain > 0.0) {
            return Err(Error::invalid("gain must be positive"));
        }
        Ok(())
    }
}

/// Fraction of a voxel's receptive-field peak above which a pixel counts
/// as belonging to that voxel's true inverse receptive field.
pub const RELEVANCE_THRESHOLD: f64 = 0.25;

/// Known receptive fields of the generated dataset plus the derived
/// voxel-pixel relevance sets used as bin-recovery oracles.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    rf: Matrix,
    relevance: BinMatrix,
}

impl GroundTruth {
    /// Derive relevance from receptive fields: a pixel is relevant to a
    /// voxel when its weight reaches 25% of that voxel's peak weight.
    pub fn from_rf(rf: Matrix) -> Result<Self> {
        if rf.data().iter().any(|&v| v < 0.0) {
            return Err(Error::invalid(
                "receptive-field weights must be non-negative",
            ));
        }
        let (d1, d2) = (rf.rows(), rf.cols());
        let mut relevance = BinMatrix::zeros(d1, d2);
        for j in 0..d1 {
            let peak = rf.row(j).iter().fold(0.0f64, |a, &b| a.max(b));
            if peak > 0.0 {
                for k in 0..d2 {
                    relevance.set(j, k, rf.get(j, k) >= RELEVANCE_THRESHOLD * peak);
                }
            }
        }
        Ok(GroundTruth { rf, relevance })
    }

    pub fn rf(&self) -> &Matrix {
        &self.rf
    }

    pub fn relevance(&self) -> &BinMatrix {
        &self.relevance
    }

    /// True voxel set for pixel k: all voxels whose field covers it.
    pub fn relevant_voxels(&self, k: usize) -> Vec<u32> {
        (0..self.rf.rows())
            .filter(|&j| self.relevance.get(j, k))
            .map(|j| j as u32)
            .collect()
    }

    /// Whether voxel j carries any signal at all.
    pub fn voxel_is_relevant(&self, j: usize) -> bool {
        self.rf.row(j).iter().any(|&v| v > 0.0)
    }
}

/// Independent fair Bernoulli draw per pixel per trial.
pub fn generate_random_stimuli(
    count: usize,
    rows: usize,
    cols: usize,
    seed: u64,
) -> Result<StimulusSet> {
    if count == 0 {
        return Err(Error::invalid("trial count must be at least 1"));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("stimulus grid dimensions must be positive"));
    }
    let d2 = rows * cols;
    let mut rng = Rng::from_seed(seed);
    let mut data = Vec::with_capacity(count * d2);
    for _ in 0..count * d2 {
        data.push(if rng.next_bool() { 1.0 } else { 0.0 });
    }
    StimulusSet::new(Matrix::from_vec(count, d2, data)?, rows, cols)
}

/// Families of built-in test shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeFamily {
    Geometry,
    Digits,
}

/// Number of templates in the geometry family.
pub const GEOMETRY_SHAPE_COUNT: usize = 10;
/// Number of templates in the digits family.
pub const DIGIT_SHAPE_COUNT: usize = 10;

/// 5x7 digit stencils, row-major, one string row per scanline.
const DIGIT_STENCILS: [[&str; 7]; 10] = [
    [
        " ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### ",
    ],
    [
        "  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### ",
    ],
    [
        " ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####",
    ],
    [
        " ### ", "#   #", "    #", "  ## ", "    #", "#   #", " ### ",
    ],
    [
        "   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # ",
    ],
    [
        "#####", "#    ", "#### ", "    #", "    #", "#   #", " ### ",
    ],
    [
        " ### ", "#    ", "#    ", "#### ", "#   #", "#   #", " ### ",
    ],
    [
        "#####", "    #", "   # ", "  #  ", " #   ", " #   ", " #   ",
    ],
    [
        " ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### ",
    ],
    [
        " ### ", "#   #", "#   #", " ####", "    #", "    #", " ### ",
    ],
];

fn rasterize_digit(digit: usize, rows: usize, cols: usize) -> Result<Vec<f64>> {
    if rows < 7 || cols < 5 {
        return Err(Error::invalid(format!(
            "digit stencil (5x7) does not fit a {rows}x{cols} grid"
        )));
    }
    let top = (rows - 7) / 2;
    let left = (cols - 5) / 2;
    let mut img = vec![0.0; rows * cols];
    for (dr, line) in DIGIT_STENCILS[digit].iter().enumerate() {
        for (dc, ch) in line.bytes().enumerate() {
            if ch == b'#' {
                img[(top + dr) * cols + (left + dc)] = 1.0;
            }
        }
    }
    Ok(img)
}

/// Geometry templates are drawn procedurally onto the full grid so they
/// scale with the requested dimensions. `frame` sets exactly the border.
fn rasterize_geometry(index: usize, rows: usize, cols: usize) -> Result<Vec<f64>> {
    if rows < 5 || cols < 5 {
        return Err(Error::invalid(format!(
            "geometry templates need at least a 5x5 grid, got {rows}x{cols}"
        )));
    }
    let mut img = vec![0.0; rows * cols];
    let mut put = |r: usize, c: usize| img[r * cols + c] = 1.0;
    let bar = 2.min(rows.min(cols) / 4).max(1); // stroke thickness
    let rmid = rows / 2;
    let cmid = cols / 2;
    match index {
        // plus: full-length centered horizontal and vertical bars
        0 => {
            for r in 0..rows {
                for c in (cmid - bar / 2)..(cmid - bar / 2 + bar) {
                    put(r, c);
                }
            }
            for c in 0..cols {
                for r in (rmid - bar / 2)..(rmid - bar / 2 + bar) {
                    put(r, c);
                }
            }
        }
        // square: filled centered block, half the grid on each side
        1 => {
            let h = rows / 2;
            let w = cols / 2;
            let top = (rows - h) / 2;
            let left = (cols - w) / 2;
            for r in top..top + h {
                for c in left..left + w {
                    put(r, c);
                }
            }
        }
        // cross: both diagonals
        2 => {
            for r in 0..rows {
                let c1 = r * (cols - 1) / (rows - 1).max(1);
                let c2 = cols - 1 - c1;
                put(r, c1);
                put(r, c2);
            }
        }
        // frame: exactly the border pixels
        3 => {
            for c in 0..cols {
                put(0, c);
                put(rows - 1, c);
            }
            for r in 0..rows {
                put(r, 0);
                put(r, cols - 1);
            }
        }
        // letter T
        4 => {
            for r in 0..bar {
                for c in 0..cols {
                    put(r, c);
                }
            }
            for r in 0..rows {
                for c in (cmid - bar / 2)..(cmid - bar / 2 + bar) {
                    put(r, c);
                }
            }
        }
        // letter L
        5 => {
            for r in 0..rows {
                for c in 0..bar {
                    put(r, c);
                }
            }
            for r in rows - bar..rows {
                for c in 0..cols {
                    put(r, c);
                }
            }
        }
        // letter H
        6 => {
            for r in 0..rows {
                for c in 0..bar {
                    put(r, c);
                    put(r, cols - 1 - c);
                }
            }
            for r in (rmid - bar / 2)..(rmid - bar / 2 + bar) {
                for c in 0..cols {
                    put(r, c);
                }
            }
        }
        // letter U
        7 => {
            for r in 0..rows {
                for c in 0..bar {
                    put(r, c);
                    put(r, cols - 1 - c);
                }
            }
            for r in rows - bar..rows {
                for c in 0..cols {
                    put(r, c);
                }
            }
        }
        // diamond: filled L1 ball
        8 => {
            let radius = (rows.min(cols) / 2) as isize;
            for r in 0..rows {
                for c in 0..cols {
                    let dr = (r as isize * 2 + 1 - rows as isize).abs();
                    let dc = (c as isize * 2 + 1 - cols as isize).abs();
                    if dr + dc <= radius * 2 {
                        put(r, c);
                    }
                }
            }
        }
        // stairs: descending 2x2 steps along the diagonal
        9 => {
            let step = 2;
            let mut r = 0;
            let mut c = 0;
            while r < rows && c < cols {
                for rr in r..(r + step).min(rows) {
                    for cc in c..(c + step).min(cols) {
                        put(rr, cc);
                    }
                }
                r += step;
                c += step;
            }
        }
        _ => return Err(Error::invalid("unknown geometry template")),
    }
    Ok(img)
}

/// Rasterize the requested shape families, each shape repeated
/// `repetitions` times as exact copies (noise enters only via responses).
pub fn generate_shape_stimuli(
    families: &[ShapeFamily],
    rows: usize,
    cols: usize,
    repetitions: usize,
) -> Result<StimulusSet> {
    if families.is_empty() {
        return Err(Error::invalid("shape catalog must be nonempty"));
    }
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    let d2 = rows
        .checked_mul(cols)
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::invalid("stimulus grid dimensions must be positive"))?;
    let mut data = Vec::new();
    for family in families {
        let count = match family {
            ShapeFamily::Geometry => GEOMETRY_SHAPE_COUNT,
            ShapeFamily::Digits => DIGIT_SHAPE_COUNT,
        };
        for s in 0..count {
            let img = match family {
                ShapeFamily::Geometry => rasterize_geometry(s, rows, cols)?,
                ShapeFamily::Digits => rasterize_digit(s, rows, cols)?,
            };
            for _ in 0..repetitions {
                data.extend_from_slice(&img);
            }
        }
    }
    let n = data.len() / d2;
    StimulusSet::new(Matrix::from_vec(n, d2, data)?, rows, cols)
}

/// Monotone map of a normalized coordinate that doubles the density of
/// receptive-field centers over the central half of the image axis.
fn center_warp(u: f64) -> f64 {
    if u < 1.0 / 6.0 {
        1.5 * u
    } else if u <= 5.0 / 6.0 {
        0.25 + 0.75 * (u - 1.0 / 6.0)
    } else {
        0.75 + 1.5 * (u - 5.0 / 6.0)
    }
}

/// Generate voxel positions, receptive fields, and noisy responses for the
/// given stimuli. Deterministic in `cfg.seed`.
pub fn synthesize_responses(
    stimuli: &StimulusSet,
    cfg: &SyntheticConfig,
) -> Result<(ResponseSet, GroundTruth)> {
    cfg.validate()?;
    let [nx, ny, nz] = cfg.grid;
    let d1 = nx * ny * nz;
    if d1 < 4 {
        return Err(Error::invalid(format!(
            "voxel grid yields {d1} voxels; at least 4 are required"
        )));
    }
    let (rows, cols) = (stimuli.rows(), stimuli.cols());
    let d2 = stimuli.n_pixels();
    let n = stimuli.n_trials();

    // jittered grid positions, x fastest
    let mut pos_rng = Rng::from_seed(derive_seed(cfg.seed, "synth-positions", 0));
    let mut positions = Vec::with_capacity(d1);
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let jx = (pos_rng.next_f64() - 0.5) * cfg.jitter * cfg.pitch[0];
                let jy = (pos_rng.next_f64() - 0.5) * cfg.jitter * cfg.pitch[1];
                let jz = (pos_rng.next_f64() - 0.5) * cfg.jitter * cfg.pitch[2];
                positions.push([
                    ix as f64 * cfg.pitch[0] + jx,
                    iy as f64 * cfg.pitch[1] + jy,
                    iz as f64 * cfg.pitch[2] + jz,
                ]);
            }
        }
    }
    let layout = VoxelLayout::new(positions)?;

    // which voxels carry no signal
    let n_irrelevant = libm::floor(cfg.irrelevant * d1 as f64) as usize;
    let mut sel_rng = Rng::from_seed(derive_seed(cfg.seed, "synth-relevance", 0));
    let perm = sel_rng.permutation(d1);
    let mut irrelevant = vec![false; d1];
    for &j in perm.iter().take(n_irrelevant) {
        irrelevant[j] = true;
    }

    // receptive fields from the retinotopic map of the voxel's (x, y)
    // position; the jitter makes voxels stacked along z distinct sensors.
    // A sharp center carries the decodable signal; the weak wide surround
    // models pooled background activity (it raises the mean signal level,
    // which the noise scale is tied to, without blurring the center).
    let mut rf = Matrix::zeros(d1, d2);
    let center_denom = 2.0 * cfg.rf_sigma * cfg.rf_sigma;
    let sigma_s = cfg.surround_scale * cfg.rf_sigma;
    let surround_denom = 2.0 * sigma_s * sigma_s;
    for j in 0..d1 {
        if irrelevant[j] {
            continue;
        }
        let pos = layout.position(j);
        let mut ux = (pos[0] / cfg.pitch[0] + 0.5) / nx as f64;
        let mut uy = (pos[1] / cfg.pitch[1] + 0.5) / ny as f64;
        if cfg.center_weight {
            ux = center_warp(ux.clamp(0.0, 1.0));
            uy = center_warp(uy.clamp(0.0, 1.0));
        }
        let cx = ux * cols as f64 - 0.5;
        let cy = uy * rows as f64 - 0.5;
        for k in 0..d2 {
            let px = (k % cols) as f64;
            let py = (k / cols) as f64;
            let dsq = (px - cx) * (px - cx) + (py - cy) * (py - cy);
            let field = libm::exp(-dsq / center_denom)
                + cfg.surround_amp * libm::exp(-dsq / surround_denom);
            rf.set(j, k, field);
        }
    }

    // clean responses and the noise scale
    let mut clean = Matrix::zeros(n, d1);
    let mut clean_sum = 0.0;
    let mut clean_count = 0usize;
    for i in 0..n {
        let trial = stimuli.values().row(i);
        for j in 0..d1 {
            if irrelevant[j] {
                continue;
            }
            let mut acc = 0.0;
            let field = rf.row(j);
            for k in 0..d2 {
                if trial[k] != 0.0 {
                    acc += field[k];
                }
            }
            let v = cfg.gain * acc;
            clean.set(i, j, v);
            clean_sum += v;
            clean_count += 1;
        }
    }
    let sigma = if cfg.snr.is_infinite() || clean_count == 0 {
        0.0
    } else {
        (clean_sum / clean_count as f64) / cfg.snr
    };

    // noise splits into a per-trial global component shared by every
    // voxel and an independent private remainder; the per-voxel marginal
    // deviation stays exactly sigma
    let shared = libm::sqrt(cfg.noise_global);
    let private = libm::sqrt(1.0 - cfg.noise_global);
    let mut noise_rng = Rng::from_seed(derive_seed(cfg.seed, "synth-noise", 0));
    let mut global_rng = Rng::from_seed(derive_seed(cfg.seed, "synth-noise-global", 0));
    let mut values = Matrix::zeros(n, d1);
    for i in 0..n {
        let g = if sigma > 0.0 {
            global_rng.next_normal()
        } else {
            0.0
        };
        for j in 0..d1 {
            let noise = if sigma > 0.0 {
                sigma * (shared * g + private * noise_rng.next_normal())
            } else {
                0.0
            };
            values.set(i, j, clean.get(i, j) + noise);
        }
    }

    let responses = ResponseSet::new(values, layout)?;
    let truth = GroundTruth::from_rf(rf)?;
    Ok((responses, truth))
}

/// Per-trial shape family labels in the order `generate_shape_stimuli`
/// emits them; used to split evaluation by category.
pub fn shape_trial_families(families: &[ShapeFamily], repetitions: usize) -> Vec<ShapeFamily> {
    let mut out = Vec::new();
    for family in families {
        let count = match family {
            ShapeFamily::Geometry => GEOMETRY_SHAPE_COUNT,
            ShapeFamily::Digits => DIGIT_SHAPE_COUNT,
        };
        for _ in 0..count * repetitions {
            out.push(*family);
        }
    }
    out
}

/// Convenience used by error messages and meta files.
pub fn family_name(family: ShapeFamily) -> &'static str {
    match family {
        ShapeFamily::Geometry => "geometry",
        ShapeFamily::Digits => "digit",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_stimuli_shape_and_determinism() {
        let s = generate_random_stimuli(352, 12, 12, 7).unwrap();
        assert_eq!(s.n_trials(), 352);
        assert_eq!(s.n_pixels(), 144);
        let s2 = generate_random_stimuli(352, 12, 12, 7).unwrap();
        assert_eq!(s.values(), s2.values());
        let s3 = generate_random_stimuli(352, 12, 12, 8).unwrap();
        assert_ne!(s.values(), s3.values());
    }

    #[test]
    fn random_stimuli_single_pixel() {
        let s = generate_random_stimuli(1, 1, 1, 3).unwrap();
        let v = s.values().get(0, 0);
        assert!(v == 0.0 || v == 1.0);
    }

    #[test]
    fn random_stimuli_pixel_means_near_half() {
        // law-of-large-numbers check over 1000 trials
        let s = generate_random_stimuli(1000, 12, 12, 42).unwrap();
        for k in 0..s.n_pixels() {
            let mean: f64 = (0..1000).map(|i| s.values().get(i, k)).sum::<f64>() / 1000.0;
            assert!((0.45..=0.55).contains(&mean), "pixel {k} mean {mean}");
        }
    }

    #[test]
    fn random_stimuli_rejects_zero_dims() {
        assert!(generate_random_stimuli(0, 12, 12, 1).is_err());
        assert!(generate_random_stimuli(10, 0, 12, 1).is_err());
        assert!(generate_random_stimuli(10, 12, 0, 1).is_err());
    }

    #[test]
    fn shape_stimuli_counts() {
        let both = [ShapeFamily::Geometry, ShapeFamily::Digits];
        let s = generate_shape_stimuli(&both, 12, 12, 4).unwrap();
        assert_eq!(s.n_trials(), 80); // 20 shapes x 4 repetitions

        let digits = generate_shape_stimuli(&[ShapeFamily::Digits], 12, 12, 1).unwrap();
        assert_eq!(digits.n_trials(), 10);
    }

    #[test]
    fn shape_stimuli_binary_and_frame_is_border() {
        let geo = generate_shape_stimuli(&[ShapeFamily::Geometry], 12, 12, 1).unwrap();
        for v in geo.values().data() {
            assert!(*v == 0.0 || *v == 1.0);
        }
        // frame is template index 3
        let frame = geo.values().row(3);
        for r in 0..12 {
            for c in 0..12 {
                let expected = r == 0 || r == 11 || c == 0 || c == 11;
                assert_eq!(frame[r * 12 + c] == 1.0, expected, "({r},{c})");
            }
        }
    }

    #[test]
    fn shape_repeats_are_exact_copies() {
        let s = generate_shape_stimuli(&[ShapeFamily::Digits], 12, 12, 3).unwrap();
        for shape in 0..10 {
            let base = s.values().row(shape * 3);
            for rep in 1..3 {
                assert_eq!(s.values().row(shape * 3 + rep), base);
            }
        }
    }

    #[test]
    fn shape_template_too_large_errors() {
        assert!(generate_shape_stimuli(&[ShapeFamily::Digits], 4, 4, 1).is_err());
        assert!(generate_shape_stimuli(&[ShapeFamily::Geometry], 3, 3, 1).is_err());
    }

    #[test]
    fn shape_catalog_must_be_nonempty() {
        assert!(generate_shape_stimuli(&[], 12, 12, 1).is_err());
    }

    #[test]
    fn standardize_basic_column() {
        let layout = VoxelLayout::new(alloc::vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let values = Matrix::from_vec(3, 2, alloc::vec![1.0, 5.0, 2.0, 5.0, 3.0, 5.0]).unwrap();
        let resp = ResponseSet::new(values, layout).unwrap();
        let std = standardize(&resp).unwrap();
        assert!(std.standardized());
        // (1,2,3) -> (-1,0,1) with the N-1 sample std
        assert_eq!(std.values().column(0), alloc::vec![-1.0, 0.0, 1.0]);
        // constant column -> zeros, flagged
        assert_eq!(std.values().column(1), alloc::vec![0.0, 0.0, 0.0]);
        assert_eq!(std.constant_voxels(), &[1]);
    }

    #[test]
    fn standardize_idempotent() {
        let layout = VoxelLayout::new(alloc::vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let values =
            Matrix::from_vec(4, 2, alloc::vec![0.3, -1.0, 2.7, 0.5, -1.4, 2.0, 0.9, 0.1]).unwrap();
        let resp = ResponseSet::new(values, layout).unwrap();
        let once = standardize(&resp).unwrap();
        let twice = standardize(&once).unwrap();
        for (a, b) in once.values().data().iter().zip(twice.values().data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_needs_two_trials() {
        let layout = VoxelLayout::new(alloc::vec![[0.0, 0.0, 0.0]]).unwrap();
        let values = Matrix::from_vec(1, 1, alloc::vec![1.0]).unwrap();
        let resp = ResponseSet::new(values, layout).unwrap();
        assert!(standardize(&resp).is_err());
    }

    #[test]
    fn duplicate_positions_rejected() {
        let dup = VoxelLayout::new(alloc::vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0]
        ]);
        assert!(dup.is_err());
    }

    #[test]
    fn synthesize_noiseless_zero_trial() {
        // an all-zero stimulus at sigma = 0 produces all-zero responses
        let mut cfg = SyntheticConfig::default();
        cfg.grid = [4, 4, 2];
        cfg.snr = f64::INFINITY;
        let stim = StimulusSet::new(Matrix::zeros(1, 144), 12, 12).unwrap();
        let (resp, _) = synthesize_responses(&stim, &cfg).unwrap();
        assert!(resp.values().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn synthesize_single_relevant_voxel_peak() {
        // noiseless, one relevant voxel, one active pixel under its peak:
        // the response is exactly gain * rf_peak
        let mut cfg = SyntheticConfig::default();
        cfg.grid = [2, 2, 1];
        cfg.snr = f64::INFINITY;
        cfg.irrelevant = 0.75; // 3 of 4 voxels are pure noise
        cfg.gain = 1.7;
        cfg.center_weight = false;
        cfg.seed = 5;

        // find the relevant voxel and its peak pixel via ground truth
        let probe = generate_random_stimuli(1, 12, 12, 1).unwrap();
        let (_, truth) = synthesize_responses(&probe, &cfg).unwrap();
        let relevant: Vec<usize> = (0..4).filter(|&j| truth.voxel_is_relevant(j)).collect();
        assert_eq!(relevant.len(), 1);
        let j = relevant[0];
        let (peak_k, peak_v) =
            truth
                .rf()
                .row(j)
                .iter()
                .enumerate()
                .fold(
                    (0, 0.0),
                    |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc },
                );

        let mut pixels = alloc::vec![0.0; 144];
        pixels[peak_k] = 1.0;
        let stim = StimulusSet::new(Matrix::from_vec(1, 144, pixels).unwrap(), 12, 12).unwrap();
        let (resp, truth2) = synthesize_responses(&stim, &cfg).unwrap();
        // same seed -> same fields
        assert_eq!(truth2.rf().get(j, peak_k), peak_v);
        let expected = cfg.gain * peak_v;
        assert_eq!(resp.values().get(0, j), expected);
    }

    #[test]
    fn synthesize_snr_recovered_from_residual() {
        // empirical SNR (mean clean signal over noise sigma) within 15%
        let cfg = SyntheticConfig::default();
        let stim = generate_random_stimuli(352, 12, 12, 42).unwrap();
        let (resp, truth) = synthesize_responses(&stim, &cfg).unwrap();
        let n = stim.n_trials();
        let d1 = resp.n_voxels();
        let mut clean_sum = 0.0;
        let mut clean_cnt = 0usize;
        let mut resid_ss = 0.0;
        let mut resid_cnt = 0usize;
        for i in 0..n {
            for j in 0..d1 {
                let mut acc = 0.0;
                for k in 0..144 {
                    acc += truth.rf().get(j, k) * stim.values().get(i, k);
                }
                let clean = cfg.gain * acc;
                if truth.voxel_is_relevant(j) {
                    clean_sum += clean;
                    clean_cnt += 1;
                }
                let r = resp.values().get(i, j) - clean;
                resid_ss += r * r;
                resid_cnt += 1;
            }
        }
        let mean_clean = clean_sum / clean_cnt as f64;
        let sigma_emp = libm::sqrt(resid_ss / resid_cnt as f64);
        let snr_emp = mean_clean / sigma_emp;
        assert!(
            (snr_emp - cfg.snr).abs() <= 0.15 * cfg.snr,
            "empirical snr {snr_emp} vs configured {}",
            cfg.snr
        );
    }

    #[test]
    fn synthesize_deterministic() {
        let cfg = SyntheticConfig::default();
        let stim = generate_random_stimuli(20, 12, 12, 9).unwrap();
        let (a, ta) = synthesize_responses(&stim, &cfg).unwrap();
        let (b, tb) = synthesize_responses(&stim, &cfg).unwrap();
        assert_eq!(a.values(), b.values());
        assert_eq!(a.layout().positions(), b.layout().positions());
        assert_eq!(ta.rf(), tb.rf());
    }

    #[test]
    fn synthesize_rejects_tiny_grid() {
        let mut cfg = SyntheticConfig::default();
        cfg.grid = [3, 1, 1];
        let stim = generate_random_stimuli(2, 12, 12, 1).unwrap();
        assert!(synthesize_responses(&stim, &cfg).is_err());
    }

    #[test]
    fn retinotopy_correlation_decays_with_center_distance() {
        // strict monotonicity for the pure-center field
        retinotopy_decay_case(0.0, 0.03);
        // the default surround adds a long-range correlation floor whose
        // border truncation wobbles a little across pair positions
        retinotopy_decay_case(SyntheticConfig::default().surround_amp, 0.05);
    }

    fn retinotopy_decay_case(surround_amp: f64, slack: f64) {
        // noiseless responses: correlation between relevant voxels falls
        // monotonically with the distance between their RF centers
        let mut cfg = SyntheticConfig::default();
        cfg.snr = f64::INFINITY;
        cfg.irrelevant = 0.0;
        cfg.center_weight = false;
        cfg.surround_amp = surround_amp;
        let stim = generate_random_stimuli(4000, 12, 12, 17).unwrap();
        let (resp, truth) = synthesize_responses(&stim, &cfg).unwrap();
        let d1 = resp.n_voxels();

        // RF center of voxel j = argmax pixel, in image coordinates,
        // limited to voxels with interior centers to avoid edge truncation
        let center = |j: usize| {
            let row = truth.rf().row(j);
            let (k, _) =
                row.iter().enumerate().fold(
                    (0, 0.0),
                    |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc },
                );
            ((k % 12) as f64, (k / 12) as f64)
        };
        let interior: Vec<usize> = (0..d1)
            .filter(|&j| {
                let (x, y) = center(j);
                x >= 3.5 && x <= 7.5 && y >= 3.5 && y <= 7.5
            })
            .collect();
        assert!(interior.len() >= 10);

        let pearson = |a: usize, b: usize| {
            let n = resp.n_trials() as f64;
            let (mut sa, mut sb) = (0.0, 0.0);
            for i in 0..resp.n_trials() {
                sa += resp.values().get(i, a);
                sb += resp.values().get(i, b);
            }
            let (ma, mb) = (sa / n, sb / n);
            let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
            for i in 0..resp.n_trials() {
                let xa = resp.values().get(i, a) - ma;
                let xb = resp.values().get(i, b) - mb;
                num += xa * xb;
                da += xa * xa;
                db += xb * xb;
            }
            num / libm::sqrt(da * db)
        };

        // 20 pairs sampled deterministically, sorted by center distance
        let mut rng = Rng::from_seed(23);
        let mut pairs = Vec::new();
        while pairs.len() < 20 {
            let a = interior[rng.next_below(interior.len() as u64) as usize];
            let b = interior[rng.next_below(interior.len() as u64) as usize];
            if a == b {
                continue;
            }
            let (ax, ay) = center(a);
            let (bx, by) = center(b);
            let d = libm::hypot(ax - bx, ay - by);
            pairs.push((d, pearson(a, b)));
        }
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for w in pairs.windows(2) {
            if w[1].0 > w[0].0 + 1e-9 {
                assert!(
                    w[1].1 <= w[0].1 + slack,
                    "correlation rose with distance: {:?} -> {:?}",
                    w[0],
                    w[1]
                );
            }
        }
    }
}
