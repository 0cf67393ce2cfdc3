//! File formats: dataset directories, graph dumps, model tables,
//! prediction matrices, reports, and PGM images.
//!
//! All CSV files are comma-separated with LF line endings and no header
//! unless stated otherwise. Floats are written with Rust's shortest
//! round-trip formatting (at most 17 significant digits), so store/load
//! reproduces every value exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use corrnet_core::dataset::{GroundTruth, ResponseSet, StimulusSet, VoxelLayout};
use corrnet_core::eval::encode_pgm;
use corrnet_core::matrix::Matrix;
use corrnet_core::snn::{EncodingRange, SimParams, TempotronModel};
use corrnet_core::svm::{LinearPixelModel, SvmDiagnostics};

use crate::error::{CliError, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::format(path.display().to_string(), None, "file is missing")
        } else {
            CliError::io(path.display().to_string(), e)
        }
    })
}

fn format_matrix_csv(m: &Matrix, integer: bool) -> String {
    let mut s = String::new();
    for row in m.iter_rows() {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                s.push(',');
            }
            if integer {
                let _ = write!(s, "{}", *v as i64);
            } else {
                let _ = write!(s, "{v}");
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    write_text(path, &format_matrix_csv(m, false))
}

pub fn read_matrix_csv(path: &Path, expect_cols: Option<usize>) -> Result<Matrix> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    let mut data = Vec::new();
    let mut cols = expect_cols;
    let mut rows = 0usize;
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut count = 0usize;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::format(&name, Some(idx + 1), format!("bad number `{field}`"))
            })?;
            data.push(v);
            count += 1;
        }
        match cols {
            Some(expected) if expected != count => {
                return Err(CliError::format(
                    &name,
                    Some(idx + 1),
                    format!("expected {expected} columns, found {count}"),
                ));
            }
            None => cols = Some(count),
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    if rows == 0 {
        return Err(CliError::format(&name, None, "file holds no rows"));
    }
    Matrix::from_vec(rows, cols, data).map_err(CliError::Core)
}

// --- dataset directories ---

/// Write `meta.txt`, `stimuli.csv`, `responses.csv`, `positions.csv`.
pub fn write_dataset(dir: &Path, stimuli: &StimulusSet, responses: &ResponseSet) -> Result<()> {
    ensure_dir(dir)?;
    let meta = format!(
        "n={}\nd1={}\nd2={}\nrows={}\ncols={}\nstandardized={}\n",
        stimuli.n_trials(),
        responses.n_voxels(),
        stimuli.n_pixels(),
        stimuli.rows(),
        stimuli.cols(),
        responses.standardized() as u8,
    );
    write_text(&dir.join("meta.txt"), &meta)?;
    write_text(
        &dir.join("stimuli.csv"),
        &format_matrix_csv(stimuli.values(), true),
    )?;
    write_matrix_csv(&dir.join("responses.csv"), responses.values())?;
    let mut pos = String::new();
    for p in responses.layout().positions() {
        let _ = writeln!(pos, "{},{},{}", p[0], p[1], p[2]);
    }
    write_text(&dir.join("positions.csv"), &pos)
}

fn parse_meta(path: &Path) -> Result<std::collections::BTreeMap<String, String>> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    let mut map = std::collections::BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::format(
                &name,
                Some(idx + 1),
                format!("expected key=value, got `{line}`"),
            )
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn meta_usize(
    map: &std::collections::BTreeMap<String, String>,
    path: &Path,
    key: &str,
) -> Result<usize> {
    let raw = map.get(key).ok_or_else(|| {
        CliError::format(
            path.display().to_string(),
            None,
            format!("missing key `{key}`"),
        )
    })?;
    raw.parse().map_err(|_| {
        CliError::format(
            path.display().to_string(),
            None,
            format!("key `{key}` has bad value `{raw}`"),
        )
    })
}

/// Load a dataset directory, cross-checking every dimension in the meta
/// file against the matrices.
pub fn read_dataset(dir: &Path) -> Result<(StimulusSet, ResponseSet)> {
    let meta_path = dir.join("meta.txt");
    let meta = parse_meta(&meta_path)?;
    let n = meta_usize(&meta, &meta_path, "n")?;
    let d1 = meta_usize(&meta, &meta_path, "d1")?;
    let d2 = meta_usize(&meta, &meta_path, "d2")?;
    let rows = meta_usize(&meta, &meta_path, "rows")?;
    let cols = meta_usize(&meta, &meta_path, "cols")?;
    let standardized = meta_usize(&meta, &meta_path, "standardized")? != 0;

    let stim_path = dir.join("stimuli.csv");
    let stim = read_matrix_csv(&stim_path, Some(d2))?;
    if stim.rows() != n {
        return Err(CliError::format(
            stim_path.display().to_string(),
            None,
            format!("meta says n={n} but found {} rows", stim.rows()),
        ));
    }
    let resp_path = dir.join("responses.csv");
    let resp = read_matrix_csv(&resp_path, Some(d1))?;
    if resp.rows() != n {
        return Err(CliError::format(
            resp_path.display().to_string(),
            None,
            format!("meta says n={n} but found {} rows", resp.rows()),
        ));
    }
    let pos_path = dir.join("positions.csv");
    let pos = read_matrix_csv(&pos_path, Some(3))?;
    if pos.rows() != d1 {
        return Err(CliError::format(
            pos_path.display().to_string(),
            None,
            format!("meta says d1={d1} but found {} positions", pos.rows()),
        ));
    }
    let positions: Vec<[f64; 3]> = pos.iter_rows().map(|r| [r[0], r[1], r[2]]).collect();
    let layout = VoxelLayout::new(positions)?;
    let stimuli = StimulusSet::new(stim, rows, cols)?;
    let responses = ResponseSet::new(resp, layout)?.with_standardized_flag(standardized);
    Ok((stimuli, responses))
}

pub fn write_rf(path: &Path, truth: &GroundTruth) -> Result<()> {
    write_matrix_csv(path, truth.rf())
}

pub fn read_rf(path: &Path, d1: usize, d2: usize) -> Result<GroundTruth> {
    let rf = read_matrix_csv(path, Some(d2))?;
    if rf.rows() != d1 {
        return Err(CliError::format(
            path.display().to_string(),
            None,
            format!("expected {d1} voxel rows, found {}", rf.rows()),
        ));
    }
    GroundTruth::from_rf(rf).map_err(CliError::Core)
}

// --- graph dumps ---

pub fn write_edges_csv(path: &Path, edges: &[(u32, u32)]) -> Result<()> {
    let mut s = String::new();
    for (a, b) in edges {
        let _ = writeln!(s, "{a},{b}");
    }
    write_text(path, &s)
}

pub fn write_radii_csv(path: &Path, radii: &[f64]) -> Result<()> {
    let mut s = String::new();
    for (j, r) in radii.iter().enumerate() {
        let _ = writeln!(s, "{j},{r}");
    }
    write_text(path, &s)
}

pub fn write_bins_csv(path: &Path, bins: &[Vec<u32>]) -> Result<()> {
    let mut s = String::new();
    for (k, bin) in bins.iter().enumerate() {
        let _ = write!(s, "{k}");
        for m in bin {
            let _ = write!(s, ",{m}");
        }
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn read_bins_csv(path: &Path, d2: usize, d1: usize) -> Result<Vec<Vec<u32>>> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    let mut bins = vec![Vec::new(); d2];
    let mut seen = vec![false; d2];
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let k: usize = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|_| CliError::format(&name, Some(idx + 1), "bad pixel index"))?;
        if k >= d2 {
            return Err(CliError::format(
                &name,
                Some(idx + 1),
                format!("pixel index {k} out of range (d2={d2})"),
            ));
        }
        let mut members = Vec::new();
        for f in fields {
            let m: u32 = f.trim().parse().map_err(|_| {
                CliError::format(&name, Some(idx + 1), format!("bad voxel index `{f}`"))
            })?;
            if m as usize >= d1 {
                return Err(CliError::format(
                    &name,
                    Some(idx + 1),
                    format!("voxel index {m} out of range (d1={d1})"),
                ));
            }
            members.push(m);
        }
        if members.is_empty() {
            return Err(CliError::format(&name, Some(idx + 1), "empty bin"));
        }
        bins[k] = members;
        seen[k] = true;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(CliError::format(
            &name,
            None,
            format!("pixel {k} has no bin row"),
        ));
    }
    Ok(bins)
}

pub fn write_binary_matrix_csv(path: &Path, m: &corrnet_core::matrix::BinMatrix) -> Result<()> {
    let mut s = String::new();
    for r in 0..m.rows() {
        for (c, b) in m.row(r).iter().enumerate() {
            if c > 0 {
                s.push(',');
            }
            let _ = write!(s, "{b}");
        }
        s.push('\n');
    }
    write_text(path, &s)
}

// --- model tables ---

/// svm_models.csv: `pixel,w0,member:weight,...` with constant models
/// written as `pixel,const,<value>`.
pub fn write_svm_models(path: &Path, models: &[LinearPixelModel]) -> Result<()> {
    let mut s = String::new();
    for (k, m) in models.iter().enumerate() {
        if let Some(v) = m.constant {
            let _ = writeln!(s, "{k},const,{v}");
            continue;
        }
        let _ = write!(s, "{k},{}", m.bias);
        for (j, w) in m.members.iter().zip(&m.weights) {
            let _ = write!(s, ",{j}:{w}");
        }
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn read_svm_models(path: &Path, d2: usize) -> Result<Vec<LinearPixelModel>> {
    let text = read_text(path)?;
    let name = path.display().to_string();
    let blank =
        |members: Vec<u32>, weights: Vec<f64>, bias: f64, constant: Option<u8>| LinearPixelModel {
            weights,
            bias,
            members,
            constant,
            diagnostics: SvmDiagnostics {
                objective_per_epoch: Vec::new(),
                objective: 0.0,
                kkt_residual: 0.0,
                epochs: 0,
                converged: true,
                alphas: Vec::new(),
            },
        };
    let mut models: Vec<Option<LinearPixelModel>> = (0..d2).map(|_| None).collect();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let k: usize = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|_| CliError::format(&name, Some(idx + 1), "bad pixel index"))?;
        if k >= d2 {
            return Err(CliError::format(
                &name,
                Some(idx + 1),
                "pixel index out of range",
            ));
        }
        let second = fields
            .next()
            .ok_or_else(|| CliError::format(&name, Some(idx + 1), "truncated row"))?;
        if second == "const" {
            let v: u8 = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| CliError::format(&name, Some(idx + 1), "bad constant value"))?;
            models[k] = Some(blank(Vec::new(), Vec::new(), 0.0, Some(v)));
            continue;
        }
        let bias: f64 = second
            .parse()
            .map_err(|_| CliError::format(&name, Some(idx + 1), "bad bias"))?;
        let mut members = Vec::new();
        let mut weights = Vec::new();
        for f in fields {
            let (j, w) = f
                .split_once(':')
                .ok_or_else(|| CliError::format(&name, Some(idx + 1), "expected member:weight"))?;
            members.push(
                j.parse()
                    .map_err(|_| CliError::format(&name, Some(idx + 1), "bad member index"))?,
            );
            weights.push(
                w.parse()
                    .map_err(|_| CliError::format(&name, Some(idx + 1), "bad weight"))?,
            );
        }
        models[k] = Some(blank(members, weights, bias, None));
    }
    models
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            m.ok_or_else(|| CliError::format(&name, None, format!("pixel {k} has no model row")))
        })
        .collect()
}

/// snn_models.csv: `pixel,member:weight,...`; the latency-code ranges go
/// to a sibling `snn_ranges.csv` as `pixel,member:min:max,...`.
pub fn write_snn_models(path: &Path, ranges_path: &Path, models: &[TempotronModel]) -> Result<()> {
    let mut s = String::new();
    let mut r = String::new();
    for (k, m) in models.iter().enumerate() {
        let _ = write!(s, "{k}");
        let _ = write!(r, "{k}");
        for ((j, w), range) in m.members.iter().zip(&m.weights).zip(&m.ranges) {
            let _ = write!(s, ",{j}:{w}");
            let _ = write!(r, ",{j}:{}:{}", range.min, range.max);
        }
        s.push('\n');
        r.push('\n');
    }
    write_text(path, &s)?;
    write_text(ranges_path, &r)
}

pub fn read_snn_models(path: &Path, ranges_path: &Path, d2: usize) -> Result<Vec<TempotronModel>> {
    let wtext = read_text(path)?;
    let rtext = read_text(ranges_path)?;
    let name = path.display().to_string();
    let rname = ranges_path.display().to_string();
    let mut models: Vec<Option<TempotronModel>> = (0..d2).map(|_| None).collect();
    for (idx, line) in wtext.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let k: usize = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|_| CliError::format(&name, Some(idx + 1), "bad pixel index"))?;
        if k >= d2 {
            return Err(CliError::format(
                &name,
                Some(idx + 1),
                "pixel index out of range",
            ));
        }
        let mut members = Vec::new();
        let mut weights = Vec::new();
        for f in fields {
            let (j, w) = f
                .split_once(':')
                .ok_or_else(|| CliError::format(&name, Some(idx + 1), "expected member:weight"))?;
            members.push(
                j.parse()
                    .map_err(|_| CliError::format(&name, Some(idx + 1), "bad member index"))?,
            );
            weights.push(
                w.parse()
                    .map_err(|_| CliError::format(&name, Some(idx + 1), "bad weight"))?,
            );
        }
        models[k] = Some(TempotronModel {
            weights,
            members,
            ranges: Vec::new(),
            errors_per_epoch: Vec::new(),
            converged: true,
        });
    }
    for (idx, line) in rtext.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let k: usize = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|_| CliError::format(&rname, Some(idx + 1), "bad pixel index"))?;
        let model = models
            .get_mut(k)
            .and_then(|m| m.as_mut())
            .ok_or_else(|| CliError::format(&rname, Some(idx + 1), "ranges for unknown model"))?;
        for f in fields {
            let mut parts = f.split(':');
            let _j = parts.next();
            let min: f64 = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| CliError::format(&rname, Some(idx + 1), "bad range min"))?;
            let max: f64 = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| CliError::format(&rname, Some(idx + 1), "bad range max"))?;
            model.ranges.push(EncodingRange { min, max });
        }
        if model.ranges.len() != model.weights.len() {
            return Err(CliError::format(
                &rname,
                Some(idx + 1),
                "range count differs from weight count",
            ));
        }
    }
    models
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            m.ok_or_else(|| CliError::format(&name, None, format!("pixel {k} has no model row")))
        })
        .collect()
}

// --- images ---

/// Write a matrix as a binary PGM file.
pub fn write_pgm(path: &Path, image: &Matrix, max_val: u8) -> Result<()> {
    let bytes = encode_pgm(image, max_val)?;
    write_bytes(path, &bytes)
}

/// Paths of the artifacts one pipeline run produces under its output
/// directory; used to wipe partial results when a stage fails.
#[derive(Debug, Default)]
pub struct OutputTracker {
    written: Vec<PathBuf>,
}

impl OutputTracker {
    pub fn new() -> Self {
        OutputTracker::default()
    }

    pub fn text(&mut self, path: &Path, text: &str) -> Result<()> {
        write_text(path, text)?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn bytes(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_bytes(path, bytes)?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    /// Note a file some other writer already produced.
    pub fn record(&mut self, path: &Path) {
        self.written.push(path.to_path_buf());
    }

    /// Remove everything written so far.
    pub fn rollback(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }

    pub fn commit(&mut self) {
        self.written.clear();
    }
}

/// The SNN decode stage needs the same simulation constants training
/// used; carry them next to the models.
pub fn write_sim_params(path: &Path, params: &SimParams) -> Result<()> {
    let s = format!(
        "tau_m={}\ntau_s={}\nv_thre={}\nv_rest={}\nwindow={}\ndt={}\nlr={}\nmax_epochs={}\n",
        params.tau_m,
        params.tau_s,
        params.v_thre,
        params.v_rest,
        params.window,
        params.dt,
        params.lr,
        params.max_epochs
    );
    write_text(path, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use corrnet_core::dataset::{generate_random_stimuli, SyntheticConfig};

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("corrnet-io-tests").join(name);
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn dataset_roundtrip_is_exact() {
        let dir = tmp("roundtrip");
        let stim = generate_random_stimuli(6, 4, 4, 3).unwrap();
        let mut cfg = SyntheticConfig::default();
        cfg.grid = [2, 2, 2];
        let (resp, _) = corrnet_core::dataset::synthesize_responses(&stim, &cfg).unwrap();
        write_dataset(&dir, &stim, &resp).unwrap();
        let (stim2, resp2) = read_dataset(&dir).unwrap();
        assert_eq!(stim.values(), stim2.values());
        assert_eq!(resp.values(), resp2.values());
        assert_eq!(resp.layout().positions(), resp2.layout().positions());
        assert!(!resp2.standardized());
    }

    #[test]
    fn missing_positions_names_file() {
        let dir = tmp("missing-pos");
        let stim = generate_random_stimuli(4, 2, 2, 5).unwrap();
        let mut cfg = SyntheticConfig::default();
        cfg.grid = [2, 2, 1];
        let (resp, _) = corrnet_core::dataset::synthesize_responses(&stim, &cfg).unwrap();
        write_dataset(&dir, &stim, &resp).unwrap();
        fs::remove_file(dir.join("positions.csv")).unwrap();
        match read_dataset(&dir) {
            Err(CliError::Format { file, .. }) => assert!(file.contains("positions.csv")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn meta_dimension_mismatch_detected() {
        let dir = tmp("meta-mismatch");
        let stim = generate_random_stimuli(4, 2, 2, 5).unwrap();
        let mut cfg = SyntheticConfig::default();
        cfg.grid = [2, 2, 1];
        let (resp, _) = corrnet_core::dataset::synthesize_responses(&stim, &cfg).unwrap();
        write_dataset(&dir, &stim, &resp).unwrap();
        // claim one more voxel than responses.csv provides
        let meta = fs::read_to_string(dir.join("meta.txt")).unwrap();
        let meta = meta.replace("d1=4", "d1=5");
        fs::write(dir.join("meta.txt"), meta).unwrap();
        match read_dataset(&dir) {
            Err(CliError::Format { file, line, .. }) => {
                assert!(file.contains("responses.csv"));
                assert!(line.is_some());
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bins_roundtrip() {
        let dir = tmp("bins");
        let bins = vec![vec![0, 3, 7], vec![2], vec![1, 2]];
        let path = dir.join("bins.csv");
        write_bins_csv(&path, &bins).unwrap();
        let loaded = read_bins_csv(&path, 3, 8).unwrap();
        assert_eq!(bins, loaded);
    }

    #[test]
    fn svm_model_roundtrip() {
        let dir = tmp("svm-models");
        let path = dir.join("svm_models.csv");
        let model = LinearPixelModel {
            weights: vec![0.25, -1.5e-7],
            bias: 0.125,
            members: vec![3, 9],
            constant: None,
            diagnostics: SvmDiagnostics {
                objective_per_epoch: vec![],
                objective: 0.0,
                kkt_residual: 0.0,
                epochs: 0,
                converged: true,
                alphas: vec![],
            },
        };
        let constant = LinearPixelModel {
            weights: vec![],
            bias: 0.0,
            members: vec![],
            constant: Some(1),
            diagnostics: model.diagnostics.clone(),
        };
        write_svm_models(&path, &[model.clone(), constant]).unwrap();
        let loaded = read_svm_models(&path, 2).unwrap();
        assert_eq!(loaded[0].weights, model.weights);
        assert_eq!(loaded[0].bias, model.bias);
        assert_eq!(loaded[0].members, model.members);
        assert_eq!(loaded[1].constant, Some(1));
    }

    #[test]
    fn snn_model_roundtrip() {
        let dir = tmp("snn-models");
        let wpath = dir.join("snn_models.csv");
        let rpath = dir.join("snn_ranges.csv");
        let model = TempotronModel {
            weights: vec![0.003, 0.0071],
            members: vec![1, 4],
            ranges: vec![
                EncodingRange {
                    min: -1.25,
                    max: 2.5,
                },
                EncodingRange {
                    min: 0.0,
                    max: 0.125,
                },
            ],
            errors_per_epoch: vec![],
            converged: true,
        };
        write_snn_models(&wpath, &rpath, &[model.clone()]).unwrap();
        let loaded = read_snn_models(&wpath, &rpath, 1).unwrap();
        assert_eq!(loaded[0].weights, model.weights);
        assert_eq!(loaded[0].members, model.members);
        assert_eq!(loaded[0].ranges, model.ranges);
    }

    #[test]
    fn matrix_csv_bad_field_has_context() {
        let dir = tmp("bad-field");
        let path = dir.join("m.csv");
        fs::write(&path, "1.0,2.0\n3.0,oops\n").unwrap();
        match read_matrix_csv(&path, Some(2)) {
            Err(CliError::Format { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
