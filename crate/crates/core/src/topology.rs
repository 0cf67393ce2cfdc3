//! Delaunay-based structural prior over the voxel layout.
//!
//! The triangulation is built with an incremental Bowyer-Watson insertion
//! into a large enclosing tetrahedron. Voxel grids are maximally degenerate
//! (many cospherical subsets), so the geometric predicates evaluate a
//! symbolically perturbed copy of every point: each index receives a fixed
//! pseudo-random offset around 1e-8 of the layout extent, applied only
//! inside the predicates. That keeps every orientation/insphere sign far
//! above floating-point noise while the reported coordinates stay exact.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::VoxelLayout;
use crate::error::{Error, Result};
use crate::matrix::BinMatrix;
use crate::rng::{fnv1a_continue, hash_positions, Rng};

/// Relative scale of the symbolic perturbation applied inside predicates.
const PERTURBATION_SCALE: f64 = 1e-8;
/// How far the enclosing tetrahedron's vertices sit beyond the data.
const SUPER_FACTOR: f64 = 3000.0;
/// Relative tolerance below which the input counts as flat.
const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Delaunay edge set and tetrahedra over a voxel layout.
#[derive(Debug, Clone)]
pub struct TopologyGraph {
    n: usize,
    neighbors: Vec<Vec<u32>>,
    tetrahedra: Vec<[u32; 4]>,
}

impl TopologyGraph {
    /// Build a graph from an explicit edge list (no tetrahedra). Useful for
    /// constructing priors over layouts that cannot be triangulated.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::invalid("edge endpoint out of range"));
            }
            if a == b {
                return Err(Error::invalid("self-edges are not allowed"));
            }
            neighbors[a as usize].push(b);
            neighbors[b as usize].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(TopologyGraph {
            n,
            neighbors,
            tetrahedra: Vec::new(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    /// Sorted Delaunay neighbors of voxel j.
    pub fn neighbors(&self, j: usize) -> &[u32] {
        &self.neighbors[j]
    }

    pub fn has_edge(&self, j: usize, m: usize) -> bool {
        self.neighbors[j].binary_search(&(m as u32)).is_ok()
    }

    /// Tetrahedra as ascending index quadruples.
    pub fn tetrahedra(&self) -> &[[u32; 4]] {
        &self.tetrahedra
    }

    /// All edges as (j, m) pairs with j < m.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for j in 0..self.n {
            for &m in &self.neighbors[j] {
                if (j as u32) < m {
                    out.push((j as u32, m));
                }
            }
        }
        out
    }
}

/// Which self-adaptive radius rule a neighborhood was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusMode {
    /// Shortest incident Delaunay edge.
    SvmMinEdge,
    /// Mean distance to every voxel (self term included).
    SnnMeanDistance,
}

/// Per-voxel adaptive radii and the topological neighborhoods they induce.
#[derive(Debug, Clone)]
pub struct NeighborhoodSet {
    mode: RadiusMode,
    radii: Vec<f64>,
    members: Vec<Vec<u32>>,
}

impl NeighborhoodSet {
    pub fn mode(&self) -> RadiusMode {
        self.mode
    }

    pub fn radius(&self, j: usize) -> f64 {
        self.radii[j]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Sorted member indices of Tbin_j (always contains j).
    pub fn members(&self, j: usize) -> &[u32] {
        &self.members[j]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

// --- geometric predicates over perturbed coordinates ---

struct Predicates {
    points: Vec<[f64; 3]>, // real points then 4 super vertices
    deltas: Vec<[f64; 3]>,
}

impl Predicates {
    fn perturbed(&self, i: usize) -> [f64; 3] {
        let p = self.points[i];
        let d = self.deltas[i];
        [p[0] + d[0], p[1] + d[1], p[2] + d[2]]
    }

    /// Sign of det[b-a; c-a; d-a]: positive when (a,b,c,d) has positive
    /// orientation.
    fn orient(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let pa = self.perturbed(a);
        let pb = self.perturbed(b);
        let pc = self.perturbed(c);
        let pd = self.perturbed(d);
        orient3d_raw(&pa, &pb, &pc, &pd)
    }

    /// Positive when e lies strictly inside the circumsphere of the
    /// positively oriented tetrahedron (a,b,c,d). The raw determinant is
    /// negative for interior points under this crate's orientation
    /// convention, hence the sign flip.
    fn in_sphere(&self, tet: [usize; 4], e: usize) -> f64 {
        let pe = self.perturbed(e);
        let mut m = [[0.0; 4]; 4];
        for (row, &v) in tet.iter().enumerate() {
            let p = self.perturbed(v);
            let dx = p[0] - pe[0];
            let dy = p[1] - pe[1];
            let dz = p[2] - pe[2];
            m[row] = [dx, dy, dz, dx * dx + dy * dy + dz * dz];
        }
        -det4(&m)
    }
}

fn orient3d_raw(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3], d: &[f64; 3]) -> f64 {
    let bx = b[0] - a[0];
    let by = b[1] - a[1];
    let bz = b[2] - a[2];
    let cx = c[0] - a[0];
    let cy = c[1] - a[1];
    let cz = c[2] - a[2];
    let dx = d[0] - a[0];
    let dy = d[1] - a[1];
    let dz = d[2] - a[2];
    bx * (cy * dz - cz * dy) - by * (cx * dz - cz * dx) + bz * (cx * dy - cy * dx)
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut det = 0.0;
    for col in 0..4 {
        let mut sub = [[0.0; 3]; 3];
        for r in 1..4 {
            let mut cc = 0;
            for c in 0..4 {
                if c == col {
                    continue;
                }
                sub[r - 1][cc] = m[r][c];
                cc += 1;
            }
        }
        let minor = sub[0][0] * (sub[1][1] * sub[2][2] - sub[1][2] * sub[2][1])
            - sub[0][1] * (sub[1][0] * sub[2][2] - sub[1][2] * sub[2][0])
            + sub[0][2] * (sub[1][0] * sub[2][1] - sub[1][1] * sub[2][0]);
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        det += sign * m[0][col] * minor;
    }
    det
}

#[derive(Debug, Clone)]
struct Tet {
    v: [usize; 4], // positively oriented under the perturbed predicates
    alive: bool,
}

/// Incremental Bowyer-Watson tetrahedralization of the voxel layout.
///
/// Points are inserted in a fixed shuffled order derived from a content
/// hash of the positions, so the result is a pure function of the layout.
pub fn delaunay3d(layout: &VoxelLayout) -> Result<TopologyGraph> {
    let n = layout.len();
    if n < 4 {
        return Err(Error::invalid(format!(
            "triangulation needs at least 4 voxels, got {n}"
        )));
    }
    let points = layout.positions();

    // bounding box and characteristic scale
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for axis in 0..3 {
            lo[axis] = lo[axis].min(p[axis]);
            hi[axis] = hi[axis].max(p[axis]);
        }
    }
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0f64, f64::max);
    let scale = extent.max(1.0);

    reject_flat_input(points, scale)?;

    let center = [
        0.5 * (lo[0] + hi[0]),
        0.5 * (lo[1] + hi[1]),
        0.5 * (lo[2] + hi[2]),
    ];
    let big = SUPER_FACTOR * scale;
    let s3 = 1.0 / libm::sqrt(3.0);
    let super_dirs = [[s3, s3, s3], [s3, -s3, -s3], [-s3, s3, -s3], [-s3, -s3, s3]];

    let mut all_points: Vec<[f64; 3]> = points.to_vec();
    for dir in &super_dirs {
        all_points.push([
            center[0] + big * dir[0],
            center[1] + big * dir[1],
            center[2] + big * dir[2],
        ]);
    }

    // index-derived symbolic perturbation, fixed by the content hash
    let content = hash_positions(points);
    let total = all_points.len();
    let mut deltas = Vec::with_capacity(total);
    for i in 0..total {
        let mut h = fnv1a_continue(content, &(i as u64).to_le_bytes());
        let mut unit = [0.0; 3];
        for u in &mut unit {
            h = fnv1a_continue(h, b"x");
            *u = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0;
        }
        let magnitude = PERTURBATION_SCALE * scale * (i as f64 + 1.0) / total as f64;
        deltas.push([
            unit[0] * magnitude,
            unit[1] * magnitude,
            unit[2] * magnitude,
        ]);
    }
    let pred = Predicates {
        points: all_points,
        deltas,
    };

    // initial enclosing tetrahedron
    let sv = [n, n + 1, n + 2, n + 3];
    let mut tets = Vec::with_capacity(8 * n);
    tets.push(make_tet(&pred, sv)?);

    // fixed shuffled insertion order
    let mut order: Vec<usize> = (0..n).collect();
    Rng::from_seed(content).shuffle(&mut order);

    for &p in &order {
        insert_point(&pred, &mut tets, p)?;
    }

    // collect output: tetrahedra with only real vertices, and every
    // real-real edge of the final triangulation (edges appearing solely in
    // hull cells adjacent to a super vertex are still Delaunay edges of
    // the real point set, witnessed by that cell's empty circumsphere)
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut tetrahedra = Vec::new();
    for tet in tets.iter().filter(|t| t.alive) {
        let real: Vec<usize> = tet.v.iter().copied().filter(|&v| v < n).collect();
        if real.len() == 4 {
            // cospherical hull faces of degenerate inputs can leave cells
            // that are flat in the unperturbed coordinates; they carry no
            // volume and are reported through their edges only
            let vol = orient3d_raw(
                &points[real[0]],
                &points[real[1]],
                &points[real[2]],
                &points[real[3]],
            );
            if vol.abs() > DEGENERACY_TOLERANCE * scale * scale * scale {
                let mut quad = [
                    real[0] as u32,
                    real[1] as u32,
                    real[2] as u32,
                    real[3] as u32,
                ];
                quad.sort_unstable();
                tetrahedra.push(quad);
            }
        }
        for i in 0..real.len() {
            for j in (i + 1)..real.len() {
                neighbors[real[i]].push(real[j] as u32);
                neighbors[real[j]].push(real[i] as u32);
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
        list.dedup();
    }
    tetrahedra.sort_unstable();
    tetrahedra.dedup();

    Ok(TopologyGraph {
        n,
        neighbors,
        tetrahedra,
    })
}

/// Find four affinely independent points or report degenerate input.
fn reject_flat_input(points: &[[f64; 3]], scale: f64) -> Result<()> {
    let n = points.len();
    let a = 0;
    let mut b = None;
    for i in 1..n {
        if crate::dataset::distance(&points[a], &points[i]) > DEGENERACY_TOLERANCE * scale {
            b = Some(i);
            break;
        }
    }
    let b = b.ok_or_else(|| Error::DegenerateGeometry("all voxels coincide".into()))?;
    let mut c = None;
    for i in 1..n {
        if i == b {
            continue;
        }
        let ab = sub(&points[b], &points[a]);
        let ai = sub(&points[i], &points[a]);
        let cr = cross(&ab, &ai);
        if norm(&cr) > DEGENERACY_TOLERANCE * scale * scale {
            c = Some(i);
            break;
        }
    }
    let c = c.ok_or_else(|| Error::DegenerateGeometry("all voxels are collinear".into()))?;
    for i in 1..n {
        if i == b || i == c {
            continue;
        }
        let vol = orient3d_raw(&points[a], &points[b], &points[c], &points[i]);
        if vol.abs() > DEGENERACY_TOLERANCE * scale * scale * scale {
            return Ok(());
        }
    }
    Err(Error::DegenerateGeometry("all voxels are coplanar".into()))
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &[f64; 3]) -> f64 {
    libm::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
}

fn make_tet(pred: &Predicates, mut v: [usize; 4]) -> Result<Tet> {
    let o = pred.orient(v[0], v[1], v[2], v[3]);
    if o == 0.0 {
        return Err(Error::InternalInvariant(
            "degenerate tetrahedron after perturbation".into(),
        ));
    }
    if o < 0.0 {
        v.swap(2, 3);
    }
    Ok(Tet { v, alive: true })
}

fn insert_point(pred: &Predicates, tets: &mut Vec<Tet>, p: usize) -> Result<()> {
    // cavity: every live tetrahedron whose circumsphere contains p
    let mut bad = Vec::new();
    for (idx, tet) in tets.iter().enumerate() {
        if tet.alive && pred.in_sphere(tet.v, p) > 0.0 {
            bad.push(idx);
        }
    }
    if bad.is_empty() {
        return Err(Error::InternalInvariant(
            "no cavity found for inserted point".into(),
        ));
    }

    // boundary faces appear exactly once among cavity cells
    let mut face_count: BTreeMap<[usize; 3], u32> = BTreeMap::new();
    for &idx in &bad {
        let v = tets[idx].v;
        for omit in 0..4 {
            let mut face = [0usize; 3];
            let mut w = 0;
            for (i, &vv) in v.iter().enumerate() {
                if i != omit {
                    face[w] = vv;
                    w += 1;
                }
            }
            face.sort_unstable();
            *face_count.entry(face).or_insert(0) += 1;
        }
    }
    for &idx in &bad {
        tets[idx].alive = false;
    }
    for (face, count) in face_count {
        if count == 1 {
            tets.push(make_tet(pred, [face[0], face[1], face[2], p])?);
        }
    }
    Ok(())
}

/// Self-adaptive radius for voxel j under the given mode.
pub fn adaptive_radius(
    graph: &TopologyGraph,
    layout: &VoxelLayout,
    j: usize,
    mode: RadiusMode,
) -> Result<f64> {
    if j >= layout.len() {
        return Err(Error::invalid("voxel index out of range"));
    }
    match mode {
        RadiusMode::SvmMinEdge => {
            let mut best = f64::INFINITY;
            for &m in graph.neighbors(j) {
                best = best.min(layout.distance(j, m as usize));
            }
            if best.is_finite() {
                Ok(best)
            } else {
                Err(Error::InternalInvariant(format!(
                    "voxel {j} has no Delaunay neighbors"
                )))
            }
        }
        RadiusMode::SnnMeanDistance => {
            // the mean runs over every voxel, self term included
            let d1 = layout.len();
            let sum: f64 = (0..d1).map(|l| layout.distance(j, l)).sum();
            Ok(sum / d1 as f64)
        }
    }
}

/// Radii for all voxels in one mode.
pub fn adaptive_radii(
    graph: &TopologyGraph,
    layout: &VoxelLayout,
    mode: RadiusMode,
) -> Result<Vec<f64>> {
    (0..layout.len())
        .map(|j| adaptive_radius(graph, layout, j, mode))
        .collect()
}

/// Tbin_j = {j} ∪ Delaunay neighbors of j ∪ {l : d(j,l) <= radius_j}.
pub fn topological_neighborhood(
    graph: &TopologyGraph,
    layout: &VoxelLayout,
    radii: &[f64],
    mode: RadiusMode,
) -> Result<NeighborhoodSet> {
    let d1 = layout.len();
    if radii.len() != d1 || graph.n_vertices() != d1 {
        return Err(Error::invalid(
            "radii/graph/layout sizes disagree in topological_neighborhood",
        ));
    }
    let mut members = Vec::with_capacity(d1);
    for j in 0..d1 {
        let mut set: Vec<u32> = graph.neighbors(j).to_vec();
        set.push(j as u32);
        for l in 0..d1 {
            if layout.distance(j, l) <= radii[j] {
                set.push(l as u32);
            }
        }
        set.sort_unstable();
        set.dedup();
        members.push(set);
    }
    Ok(NeighborhoodSet {
        mode,
        radii: radii.to_vec(),
        members,
    })
}

/// p(POS): row j marks the members of Tbin_j. Not necessarily symmetric
/// because radii differ per voxel; the diagonal is always set.
pub fn position_prior(neigh: &NeighborhoodSet) -> BinMatrix {
    let d1 = neigh.len();
    let mut prior = BinMatrix::zeros(d1, d1);
    for j in 0..d1 {
        for &m in neigh.members(j) {
            prior.set(j, m as usize, true);
        }
    }
    prior
}
