//! Strength correlations, voxel coupling, and the probabilistic
//! correlation graph that assigns every pixel its voxel bin.
//!
//! All correlations are computed on standardized (z-scored) inputs so the
//! covariance form equals the Pearson correlation and the 0.1/0.5
//! thresholds are unit-free. Bin construction is deterministic: seeds are
//! processed in ascending voxel order and argmax ties break to the
//! smallest index.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{ResponseSet, StimulusSet, VoxelLayout};
use crate::error::{Error, Result};
use crate::matrix::{BinMatrix, Matrix};

/// Voxel-voxel coupling: strength correlation gated by the topological
/// prior and thresholded into the binary Cv matrix.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    strength: Matrix,
    joint: Matrix,
    cv: BinMatrix,
    eps_cv: f64,
}

impl CouplingMatrix {
    pub fn strength(&self) -> &Matrix {
        &self.strength
    }

    pub fn joint(&self) -> &Matrix {
        &self.joint
    }

    pub fn cv(&self) -> &BinMatrix {
        &self.cv
    }

    pub fn eps_cv(&self) -> f64 {
        self.eps_cv
    }

    pub fn n_voxels(&self) -> usize {
        self.cv.rows()
    }
}

/// Pixel-voxel correlations with the constant-pixel flags.
#[derive(Debug, Clone)]
pub struct PixelVoxelCorr {
    values: Matrix, // D2 x D1
    constant_pixels: Vec<u32>,
}

impl PixelVoxelCorr {
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Pixels that were constant over the training trials (zero rows).
    pub fn constant_pixels(&self) -> &[u32] {
        &self.constant_pixels
    }
}

/// The per-pixel correlation graph: updated weights, the binary Corr
/// matrix, and the voxel bins.
#[derive(Debug, Clone)]
pub struct CorrelationGraph {
    weights: Matrix, // D2 x D1
    pixvox: Matrix,  // D2 x D1 initialization
    corr: BinMatrix, // D2 x D1
    bins: Vec<Vec<u32>>,
    eps_corr: f64,
    /// Bayes denominator p(bin_k); fixed to 1 and carried for reporting.
    pub p_bin: f64,
}

impl CorrelationGraph {
    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn pixvox(&self) -> &Matrix {
        &self.pixvox
    }

    pub fn corr(&self) -> &BinMatrix {
        &self.corr
    }

    pub fn bins(&self) -> &[Vec<u32>] {
        &self.bins
    }

    pub fn bin(&self, k: usize) -> &[u32] {
        &self.bins[k]
    }

    pub fn eps_corr(&self) -> f64 {
        self.eps_corr
    }

    pub fn n_pixels(&self) -> usize {
        self.bins.len()
    }

    pub fn n_voxels(&self) -> usize {
        self.corr.cols()
    }

    /// Rebuild a graph from stored bins (weights are not retained by the
    /// bin dump; decoders only read the bins).
    pub fn from_bins(bins: Vec<Vec<u32>>, d1: usize) -> Result<Self> {
        let d2 = bins.len();
        let mut corr = BinMatrix::zeros(d2, d1);
        for (k, bin) in bins.iter().enumerate() {
            if bin.is_empty() {
                return Err(Error::invalid(format!("bin {k} is empty")));
            }
            for &m in bin {
                if m as usize >= d1 {
                    return Err(Error::invalid(format!("bin {k} references voxel {m}")));
                }
                corr.set(k, m as usize, true);
            }
        }
        Ok(CorrelationGraph {
            weights: Matrix::zeros(d2, d1),
            pixvox: Matrix::zeros(d2, d1),
            corr,
            bins,
            eps_corr: 0.0,
            p_bin: 1.0,
        })
    }

    /// The graph used by the pure baselines: every pixel's bin holds every
    /// voxel, so decoders see the full response vector.
    pub fn all_voxels(d1: usize, d2: usize) -> Self {
        let all: Vec<u32> = (0..d1 as u32).collect();
        let mut corr = BinMatrix::zeros(d2, d1);
        for k in 0..d2 {
            for j in 0..d1 {
                corr.set(k, j, true);
            }
        }
        CorrelationGraph {
            weights: Matrix::zeros(d2, d1),
            pixvox: Matrix::zeros(d2, d1),
            corr,
            bins: vec![all; d2],
            eps_corr: 0.0,
            p_bin: 1.0,
        }
    }
}

/// Summary statistics of a correlation graph's bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinStats {
    pub mean_size: f64,
    pub utilization: f64,
}

/// Pearson correlation matrix between voxel response columns, using the
/// N-1 sample convention throughout. Zero-variance voxels correlate 0 with
/// everything and 1 with themselves.
pub fn strength_correlation(responses: &ResponseSet) -> Result<Matrix> {
    let n = responses.n_trials();
    if n < 2 {
        return Err(Error::invalid(
            "strength correlation needs at least 2 trials",
        ));
    }
    let d1 = responses.n_voxels();
    let values = responses.values();

    // center columns and collect their deviation norms
    let mut dev = Matrix::zeros(n, d1);
    let mut norm = vec![0.0; d1];
    for j in 0..d1 {
        let mut sum = 0.0;
        for i in 0..n {
            sum += values.get(i, j);
        }
        let mean = sum / n as f64;
        let mut ss = 0.0;
        for i in 0..n {
            let d = values.get(i, j) - mean;
            dev.set(i, j, d);
            ss += d * d;
        }
        norm[j] = libm::sqrt(ss);
    }

    let mut out = Matrix::zeros(d1, d1);
    for j in 0..d1 {
        out.set(j, j, 1.0);
        for m in (j + 1)..d1 {
            let r = if norm[j] == 0.0 || norm[m] == 0.0 {
                0.0
            } else {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += dev.get(i, j) * dev.get(i, m);
                }
                dot / (norm[j] * norm[m])
            };
            out.set(j, m, r);
            out.set(m, j, r);
        }
    }
    Ok(out)
}

/// Gate the strength correlation by the binary prior and threshold the
/// signed joint value at eps_cv.
pub fn voxel_coupling(strength: &Matrix, prior: &BinMatrix, eps_cv: f64) -> Result<CouplingMatrix> {
    let d1 = strength.rows();
    if strength.cols() != d1 || prior.rows() != d1 || prior.cols() != d1 {
        return Err(Error::invalid("strength/prior shape mismatch"));
    }
    let mut joint = Matrix::zeros(d1, d1);
    let mut cv = BinMatrix::zeros(d1, d1);
    for j in 0..d1 {
        for m in 0..d1 {
            let p = if prior.get(j, m) { 1.0 } else { 0.0 };
            let v = strength.get(j, m) * p;
            joint.set(j, m, v);
            cv.set(j, m, v >= eps_cv);
        }
    }
    Ok(CouplingMatrix {
        strength: strength.clone(),
        joint,
        cv,
        eps_cv,
    })
}

/// Pearson correlation between every pixel's label column and every
/// voxel's (standardized) response column. Constant pixels produce zero
/// rows and are flagged.
pub fn pixel_voxel_correlation(
    responses: &ResponseSet,
    stimuli: &StimulusSet,
) -> Result<PixelVoxelCorr> {
    if !responses.standardized() {
        return Err(Error::invalid(
            "pixel-voxel correlation requires standardized responses",
        ));
    }
    let n = responses.n_trials();
    if stimuli.n_trials() != n {
        return Err(Error::invalid(format!(
            "stimuli have {} trials but responses have {n}",
            stimuli.n_trials()
        )));
    }
    if n < 2 {
        return Err(Error::invalid(
            "pixel-voxel correlation needs at least 2 trials",
        ));
    }
    let d1 = responses.n_voxels();
    let d2 = stimuli.n_pixels();
    let denom = (n - 1) as f64;

    let mut values = Matrix::zeros(d2, d1);
    let mut constant_pixels = Vec::new();
    let mut zp = vec![0.0; n];
    for k in 0..d2 {
        let mut sum = 0.0;
        for i in 0..n {
            sum += stimuli.values().get(i, k);
        }
        let mean = sum / n as f64;
        let mut ss = 0.0;
        for i in 0..n {
            let d = stimuli.values().get(i, k) - mean;
            zp[i] = d;
            ss += d * d;
        }
        if ss == 0.0 {
            constant_pixels.push(k as u32);
            continue; // row stays zero
        }
        let std = libm::sqrt(ss / denom);
        for z in zp.iter_mut() {
            *z /= std;
        }
        for j in 0..d1 {
            let mut acc = 0.0;
            for i in 0..n {
                acc += zp[i] * responses.values().get(i, j);
            }
            values.set(k, j, acc / denom);
        }
    }
    Ok(PixelVoxelCorr {
        values,
        constant_pixels,
    })
}

/// Iterative construction of the probabilistic correlation graph.
///
/// For each pixel, every voxel whose pixel correlation reaches eps_corr
/// seeds the bin with its coupled voxels; members are weighted by the
/// capped distance ratio k_t/d from the seed and weights only ever grow.
/// A pixel with no qualifying seed falls back to its single best voxel,
/// and a bin whose thresholded member set would be empty keeps the full
/// seeded set, so every bin is nonempty.
pub fn build_correlation_graph(
    coupling: &CouplingMatrix,
    pixvox: &Matrix,
    layout: &VoxelLayout,
    eps_corr: f64,
) -> Result<CorrelationGraph> {
    let d1 = coupling.n_voxels();
    let d2 = pixvox.rows();
    if pixvox.cols() != d1 {
        return Err(Error::invalid(
            "pixvox column count differs from voxel count",
        ));
    }
    if layout.len() != d1 {
        return Err(Error::invalid("layout size differs from voxel count"));
    }
    if !(0.0..=1.0).contains(&eps_corr) {
        return Err(Error::invalid("eps_corr must lie in [0, 1]"));
    }

    let mut weights = Matrix::zeros(d2, d1);
    let mut corr = BinMatrix::zeros(d2, d1);
    let mut bins = Vec::with_capacity(d2);

    for k in 0..d2 {
        let init = pixvox.row(k);
        let w = weights.row_mut(k);
        w.copy_from_slice(init);

        let mut in_bin = vec![false; d1];
        let mut members: Vec<u32> = Vec::new();

        let mut seeded = false;
        for j in 0..d1 {
            if init[j] >= eps_corr {
                seeded = true;
                seed_update(coupling, layout, init, w, &mut in_bin, &mut members, j);
            }
        }
        if !seeded {
            // argmax over current weights, ties to the smallest index
            let mut best = 0;
            for j in 1..d1 {
                if w[j] > w[best] {
                    best = j;
                }
            }
            seed_update(coupling, layout, init, w, &mut in_bin, &mut members, best);
        }

        let mut bin: Vec<u32> = members
            .iter()
            .copied()
            .filter(|&m| w[m as usize] >= eps_corr)
            .collect();
        if bin.is_empty() {
            // keep the full seeded set so the bin is never empty
            bin = members.clone();
        }
        bin.sort_unstable();
        for &m in &bin {
            corr.set(k, m as usize, true);
        }
        bins.push(bin);
    }

    Ok(CorrelationGraph {
        weights,
        pixvox: pixvox.clone(),
        corr,
        bins,
        eps_corr,
        p_bin: 1.0,
    })
}

/// One pass of the seed body: absorb the seed's coupled voxels into the
/// cumulative member set, then raise member weights by the distance-scaled
/// correlation. The seed itself keeps scale 1 (k_t/d would divide by 0).
fn seed_update(
    coupling: &CouplingMatrix,
    layout: &VoxelLayout,
    init: &[f64],
    w: &mut [f64],
    in_bin: &mut [bool],
    members: &mut Vec<u32>,
    j: usize,
) {
    let d1 = in_bin.len();
    for m in 0..d1 {
        if coupling.cv.get(j, m) && !in_bin[m] {
            in_bin[m] = true;
            members.push(m as u32);
        }
    }
    // nearest other member of the cumulative set at this moment
    let mut k_t = f64::INFINITY;
    for &m in members.iter() {
        let m = m as usize;
        if m != j {
            k_t = k_t.min(layout.distance(j, m));
        }
    }
    for &m in members.iter() {
        let m = m as usize;
        let topo = if m == j {
            1.0
        } else {
            (k_t / layout.distance(j, m)).min(1.0)
        };
        let candidate = init[m] * topo;
        if candidate > w[m] {
            w[m] = candidate;
        }
    }
}

/// Mean bin size and the fraction of voxels used by at least one bin.
pub fn bin_stats(graph: &CorrelationGraph) -> BinStats {
    let d1 = graph.n_voxels();
    let d2 = graph.n_pixels();
    let mut used = vec![false; d1];
    let mut total = 0usize;
    for bin in graph.bins() {
        total += bin.len();
        for &m in bin {
            used[m as usize] = true;
        }
    }
    BinStats {
        mean_size: total as f64 / d2 as f64,
        utilization: used.iter().filter(|&&u| u).count() as f64 / d1 as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{standardize, ResponseSet, StimulusSet, VoxelLayout};
    use crate::matrix::Matrix;
    use crate::rng::Rng;

    fn response(values: Matrix) -> ResponseSet {
        let d1 = values.cols();
        let positions = (0..d1)
            .map(|j| [j as f64 * 2.0, 0.5 * j as f64, 0.0])
            .collect();
        ResponseSet::new(values, VoxelLayout::new(positions).unwrap()).unwrap()
    }

    #[test]
    fn self_and_anti_correlation() {
        // v1 = v0 gives 1, v2 = -v0 (after centering) gives -1
        let values =
            Matrix::from_vec(3, 3, vec![1.0, 1.0, -1.0, 2.0, 2.0, -2.0, 4.0, 4.0, -4.0]).unwrap();
        let r = strength_correlation(&response(values)).unwrap();
        assert!((r.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((r.get(0, 2) + 1.0).abs() < 1e-12);
        assert_eq!(r.get(2, 2), 1.0);
    }

    #[test]
    fn strength_matches_direct_formula() {
        // direct transcription of the covariance-over-std form
        let mut rng = Rng::from_seed(8);
        let n = 5;
        let d1 = 4;
        let mut data = vec![0.0; n * d1];
        for v in data.iter_mut() {
            *v = rng.next_normal();
        }
        let values = Matrix::from_vec(n, d1, data).unwrap();
        let r = strength_correlation(&response(values.clone())).unwrap();
        for j in 0..d1 {
            for m in 0..d1 {
                let vj = values.column(j);
                let vm = values.column(m);
                let mj = vj.iter().sum::<f64>() / n as f64;
                let mm = vm.iter().sum::<f64>() / n as f64;
                let mut cov = 0.0;
                let mut dj = 0.0;
                let mut dm = 0.0;
                for i in 0..n {
                    cov += (vj[i] - mj) * (vm[i] - mm);
                    dj += (vj[i] - mj) * (vj[i] - mj);
                    dm += (vm[i] - mm) * (vm[i] - mm);
                }
                // N-1 denominators cancel between numerator and stds
                let expected = (cov / (n - 1) as f64)
                    / (libm::sqrt(dj / (n - 1) as f64) * libm::sqrt(dm / (n - 1) as f64));
                assert!(
                    (r.get(j, m) - expected).abs() < 1e-12,
                    "entry ({j},{m}): {} vs {}",
                    r.get(j, m),
                    expected
                );
            }
        }
    }

    #[test]
    fn strength_pearson_matrix_properties() {
        let mut rng = Rng::from_seed(100);
        let mut data = vec![0.0; 12 * 6];
        for v in data.iter_mut() {
            *v = rng.next_normal();
        }
        // make one column constant to exercise the zero-variance rule
        let mut values = Matrix::from_vec(12, 6, data).unwrap();
        for i in 0..12 {
            values.set(i, 5, 3.25);
        }
        let r = strength_correlation(&response(values)).unwrap();
        for j in 0..6 {
            assert_eq!(r.get(j, j), 1.0);
            for m in 0..6 {
                assert!((r.get(j, m) - r.get(m, j)).abs() < 1e-12);
                assert!(r.get(j, m).abs() <= 1.0 + 1e-12);
            }
        }
        for m in 0..5 {
            assert_eq!(r.get(5, m), 0.0);
        }
    }

    #[test]
    fn strength_needs_two_trials() {
        let values = Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(strength_correlation(&response(values)).is_err());
    }

    #[test]
    fn coupling_gates_and_thresholds() {
        let strength = Matrix::from_vec(2, 2, vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        let mut prior = BinMatrix::zeros(2, 2);
        prior.set(0, 0, true);
        prior.set(1, 1, true);
        // prior gate: strength 0.5 with prior 0 -> joint 0, cv 0
        let c = voxel_coupling(&strength, &prior, 0.1).unwrap();
        assert_eq!(c.joint().get(0, 1), 0.0);
        assert!(!c.cv().get(0, 1));
        assert!(c.cv().get(0, 0));

        // sub-threshold strength with prior 1 -> cv 0
        let strength = Matrix::from_vec(2, 2, vec![1.0, 0.09, 0.09, 1.0]).unwrap();
        prior.set(0, 1, true);
        prior.set(1, 0, true);
        let c = voxel_coupling(&strength, &prior, 0.1).unwrap();
        assert!((c.joint().get(0, 1) - 0.09).abs() < 1e-15);
        assert!(!c.cv().get(0, 1));

        // signed comparison: -0.8 < 0.1 -> cv 0
        let strength = Matrix::from_vec(2, 2, vec![1.0, -0.8, -0.8, 1.0]).unwrap();
        let c = voxel_coupling(&strength, &prior, 0.1).unwrap();
        assert!(!c.cv().get(0, 1));
        // diagonal survives
        assert!(c.cv().get(0, 0) && c.cv().get(1, 1));
    }

    fn stimuli(values: Matrix, rows: usize, cols: usize) -> StimulusSet {
        StimulusSet::new(values, rows, cols).unwrap()
    }

    #[test]
    fn pixvox_self_correlation() {
        // a pixel equal to a voxel's standardized response correlates 1
        let raw = Matrix::from_vec(4, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let resp = standardize(&response(raw)).unwrap();
        let stim = stimuli(
            Matrix::from_vec(4, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
            1,
            1,
        );
        let pv = pixel_voxel_correlation(&resp, &stim).unwrap();
        assert!((pv.values().get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pixvox_constant_pixel_flagged() {
        let raw = Matrix::from_vec(3, 2, vec![1.0, 0.0, 2.0, 1.0, 3.0, -1.0]).unwrap();
        let resp = standardize(&response(raw)).unwrap();
        let stim = stimuli(
            Matrix::from_vec(3, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, 0.0]).unwrap(),
            1,
            2,
        );
        let pv = pixel_voxel_correlation(&resp, &stim).unwrap();
        assert_eq!(pv.constant_pixels(), &[0]);
        assert_eq!(pv.values().row(0), &[0.0, 0.0]);
        assert!(pv.values().row(1).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn pixvox_requires_standardized_responses() {
        let raw = Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let stim = stimuli(Matrix::from_vec(3, 1, vec![0.0, 1.0, 0.0]).unwrap(), 1, 1);
        assert!(pixel_voxel_correlation(&response(raw), &stim).is_err());
    }

    #[test]
    fn pixvox_trial_mismatch_errors() {
        let raw = Matrix::from_vec(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let resp = standardize(&response(raw)).unwrap();
        let stim = stimuli(
            Matrix::from_vec(4, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap(),
            1,
            1,
        );
        assert!(pixel_voxel_correlation(&resp, &stim).is_err());
    }

    #[test]
    fn pixvox_matches_direct_formula() {
        // direct evaluation on z-scored inputs over 6 random trials
        let mut rng = Rng::from_seed(55);
        let n = 6;
        let mut rdata = vec![0.0; n * 3];
        for v in rdata.iter_mut() {
            *v = rng.next_normal();
        }
        let resp = standardize(&response(Matrix::from_vec(n, 3, rdata).unwrap())).unwrap();
        let mut sdata = vec![0.0; n * 2];
        for v in sdata.iter_mut() {
            *v = if rng.next_bool() { 1.0 } else { 0.0 };
        }
        // ensure no constant pixels in this fixture
        sdata[0] = 1.0;
        sdata[2] = 0.0;
        sdata[1] = 0.0;
        sdata[3] = 1.0;
        let stim = stimuli(Matrix::from_vec(n, 2, sdata).unwrap(), 1, 2);
        let pv = pixel_voxel_correlation(&resp, &stim).unwrap();
        for k in 0..2 {
            for j in 0..3 {
                let p = stim.values().column(k);
                let v = resp.values().column(j);
                let mp = p.iter().sum::<f64>() / n as f64;
                let sp =
                    libm::sqrt(p.iter().map(|x| (x - mp) * (x - mp)).sum::<f64>() / (n - 1) as f64);
                let zp: Vec<f64> = p.iter().map(|x| (x - mp) / sp).collect();
                let mut acc = 0.0;
                for i in 0..n {
                    acc += (v[i] - 0.0) * zp[i]; // responses already z-scored
                }
                let expected = acc / (n - 1) as f64;
                assert!((pv.values().get(k, j) - expected).abs() < 1e-12);
            }
        }
    }

    fn line_layout(d1: usize) -> VoxelLayout {
        VoxelLayout::new((0..d1).map(|j| [j as f64, 0.0, 0.0]).collect()).unwrap()
    }

    fn full_coupling(d1: usize) -> CouplingMatrix {
        let mut strength = Matrix::zeros(d1, d1);
        let mut prior = BinMatrix::zeros(d1, d1);
        for j in 0..d1 {
            for m in 0..d1 {
                strength.set(j, m, 1.0);
                prior.set(j, m, true);
            }
        }
        voxel_coupling(&strength, &prior, 0.1).unwrap()
    }

    #[test]
    fn graph_hand_trace_two_voxels() {
        // pixvox = (0.8, 0.6), mutual coupling, eps 0.5:
        // both voxels seed, topo factors are 1, weights stay (0.8, 0.6)
        let coupling = full_coupling(2);
        let pixvox = Matrix::from_vec(1, 2, vec![0.8, 0.6]).unwrap();
        let g = build_correlation_graph(&coupling, &pixvox, &line_layout(2), 0.5).unwrap();
        assert_eq!(g.weights().row(0), &[0.8, 0.6]);
        assert_eq!(g.bin(0), &[0, 1]);
        assert!(g.corr().get(0, 0) && g.corr().get(0, 1));
    }

    #[test]
    fn graph_fallback_seeds_argmax_once() {
        // all correlations below eps: the best voxel seeds once and the
        // bin is still nonempty
        let coupling = full_coupling(3);
        let pixvox = Matrix::from_vec(1, 3, vec![0.2, 0.4, 0.3]).unwrap();
        let g = build_correlation_graph(&coupling, &pixvox, &line_layout(3), 0.5).unwrap();
        assert!(!g.bin(0).is_empty());
        // Cv row of the argmax voxel (1) couples everyone here
        assert_eq!(g.bin(0), &[0, 1, 2]);
    }

    #[test]
    fn graph_single_voxel_universe() {
        let coupling = full_coupling(1);
        let pixvox = Matrix::from_vec(1, 1, vec![0.9]).unwrap();
        let layout = VoxelLayout::new(vec![[0.0, 0.0, 0.0]]).unwrap();
        let g = build_correlation_graph(&coupling, &pixvox, &layout, 0.5).unwrap();
        assert_eq!(g.bin(0), &[0]);
        assert_eq!(g.weights().get(0, 0), 0.9);

        // below-threshold single voxel falls back and keeps bin {0}
        let pixvox = Matrix::from_vec(1, 1, vec![0.1]).unwrap();
        let g = build_correlation_graph(&coupling, &pixvox, &layout, 0.5).unwrap();
        assert_eq!(g.bin(0), &[0]);
    }

    #[test]
    fn graph_distance_scaling_caps_at_one() {
        // voxel 0 seeds; voxel 2 sits twice as far as voxel 1, so its
        // weight gets half the topo factor
        let coupling = full_coupling(3);
        let pixvox = Matrix::from_vec(1, 3, vec![0.9, 0.1, 0.4]).unwrap();
        let g = build_correlation_graph(&coupling, &pixvox, &line_layout(3), 0.5).unwrap();
        // seed 0: k_t = d(0,1) = 1; topo(1) = 1, topo(2) = 1/2
        // w1 = max(0.1, 0.1*1) = 0.1; w2 = max(0.4, 0.4*0.5) = 0.4
        assert!((g.weights().get(0, 0) - 0.9).abs() < 1e-15);
        assert!((g.weights().get(0, 1) - 0.1).abs() < 1e-15);
        assert!((g.weights().get(0, 2) - 0.4).abs() < 1e-15);
        assert_eq!(g.bin(0), &[0]);
    }

    #[test]
    fn graph_monotone_in_eps_corr() {
        let mut rng = Rng::from_seed(6);
        let d1 = 6;
        let coupling = full_coupling(d1);
        let mut data = vec![0.0; 2 * d1];
        for v in data.iter_mut() {
            *v = rng.next_f64();
        }
        let pixvox = Matrix::from_vec(2, d1, data).unwrap();
        let layout = line_layout(d1);
        let mut previous: Option<Vec<Vec<u32>>> = None;
        for eps in [0.7, 0.5, 0.3] {
            let g = build_correlation_graph(&coupling, &pixvox, &layout, eps).unwrap();
            if let Some(prev) = &previous {
                for k in 0..2 {
                    for m in &prev[k] {
                        assert!(
                            g.bin(k).contains(m),
                            "lowering eps_corr to {eps} dropped voxel {m} from bin {k}"
                        );
                    }
                }
            }
            previous = Some(g.bins().to_vec());
        }
    }

    #[test]
    fn graph_rejects_bad_eps() {
        let coupling = full_coupling(2);
        let pixvox = Matrix::from_vec(1, 2, vec![0.8, 0.6]).unwrap();
        assert!(build_correlation_graph(&coupling, &pixvox, &line_layout(2), 1.5).is_err());
    }

    #[test]
    fn stats_counts_and_utilization() {
        // bins {0,1} and {1,2} over 4 voxels: mean 2, utilization 3/4
        let coupling = full_coupling(4);
        let pixvox = Matrix::from_vec(2, 4, vec![0.9, 0.8, 0.0, 0.0, 0.0, 0.8, 0.9, 0.0]).unwrap();
        // restrict coupling so each seed only pulls its own pair
        let mut strength = Matrix::zeros(4, 4);
        let mut prior = BinMatrix::zeros(4, 4);
        for j in 0..4 {
            strength.set(j, j, 1.0);
            prior.set(j, j, true);
        }
        for (a, b) in [(0, 1), (1, 2)] {
            strength.set(a, b, 1.0);
            strength.set(b, a, 1.0);
            prior.set(a, b, true);
            prior.set(b, a, true);
        }
        let coupling2 = voxel_coupling(&strength, &prior, 0.1).unwrap();
        drop(coupling);
        let g = build_correlation_graph(&coupling2, &pixvox, &line_layout(4), 0.5).unwrap();
        assert_eq!(g.bin(0), &[0, 1]);
        assert_eq!(g.bin(1), &[1, 2]);
        let stats = bin_stats(&g);
        assert_eq!(stats.mean_size, 2.0);
        assert_eq!(stats.utilization, 0.75);
    }

    #[test]
    fn stats_full_utilization() {
        let g = CorrelationGraph::all_voxels(5, 3);
        let stats = bin_stats(&g);
        assert_eq!(stats.mean_size, 5.0);
        assert_eq!(stats.utilization, 1.0);
    }

    #[test]
    fn scale_invariance_through_standardization() {
        // scaling a raw response column by c > 0 leaves pixvox unchanged
        let mut rng = Rng::from_seed(13);
        let n = 8;
        let mut data = vec![0.0; n * 3];
        for v in data.iter_mut() {
            *v = rng.next_normal();
        }
        let raw = Matrix::from_vec(n, 3, data).unwrap();
        let mut scaled = raw.clone();
        for i in 0..n {
            scaled.set(i, 1, scaled.get(i, 1) * 37.5);
        }
        let mut sdata = vec![0.0; n];
        for v in sdata.iter_mut() {
            *v = if rng.next_bool() { 1.0 } else { 0.0 };
        }
        sdata[0] = 1.0;
        sdata[1] = 0.0;
        let stim = stimuli(Matrix::from_vec(n, 1, sdata).unwrap(), 1, 1);
        let a = pixel_voxel_correlation(&standardize(&response(raw)).unwrap(), &stim).unwrap();
        let b = pixel_voxel_correlation(&standardize(&response(scaled)).unwrap(), &stim).unwrap();
        for j in 0..3 {
            assert!((a.values().get(0, j) - b.values().get(0, j)).abs() < 1e-12);
        }
    }
}
