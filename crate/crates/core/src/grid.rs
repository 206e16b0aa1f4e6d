//! Lattice graphs approximating a domain at dyadic level `k`.
//!
//! [`build_cube_complex`] grows the face-connected family of side-`2^{-k}`
//! cubes whose clearance to the boundary exceeds `c1·2^{-k}`, starting from
//! the cubes that contain the base point. Adjacent vertices are the endpoints
//! of cube edges. [`build_edge_graph`] is the older segment-based grid kept for
//! comparison: it follows lattice segments that stay in the domain and can
//! therefore enter channels too thin to hold a cube.
//!
//! Vertices are ordered lexicographically by integer coordinates, and the
//! neighbor list of every vertex is sorted by vertex id.

use std::collections::VecDeque;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::DomainSpec;
use crate::quadrature;

/// Largest number of lattice sites a construction may scan.
const MAX_LATTICE_SITES: usize = 1 << 28;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("level must satisfy 1 <= k <= 30, got {0}")]
    InvalidLevel(u32),
    #[error("c1 must lie in (0,1), got {0}")]
    InvalidC1(f64),
    #[error("lattice of {0} sites exceeds the construction limit")]
    LatticeTooLarge(usize),
    #[error("function has {got} values, grid has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("function belongs to grid {got:016x}, not {expected:016x}")]
    GridMismatch { expected: u64, got: u64 },
    #[error("non-finite value at vertex {0}")]
    NonFinite(usize),
    #[error("invalid grid data: {0}")]
    Invalid(String),
}

/// Cube `Π_j [i_j 2^{-k}, (i_j + 1) 2^{-k}]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CubeIndex(pub Vec<i64>);

impl CubeIndex {
    pub fn bounds(&self, k: u32) -> (Vec<f64>, Vec<f64>) {
        let h = spacing(k);
        (
            self.0.iter().map(|&i| i as f64 * h).collect(),
            self.0.iter().map(|&i| (i + 1) as f64 * h).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GridTag {
    CubeBased,
    EdgeBased,
}

impl fmt::Display for GridTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridTag::CubeBased => "cubeBased",
            GridTag::EdgeBased => "edgeBased",
        })
    }
}

/// Lattice spacing `2^{-k}`.
pub fn spacing(k: u32) -> f64 {
    (-(k as f64)).exp2()
}

/// Row-major box of integer lattice sites, axis 0 most significant, so linear
/// order coincides with lexicographic order.
#[derive(Debug, Clone, PartialEq)]
struct LatticeBox {
    origin: Vec<i64>,
    extents: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl LatticeBox {
    fn new(origin: Vec<i64>, extents: Vec<usize>) -> Result<Self, GridError> {
        let d = extents.len();
        let mut strides = vec![1usize; d];
        let mut len = 1usize;
        for j in (0..d).rev() {
            strides[j] = len;
            len = len
                .checked_mul(extents[j])
                .filter(|&n| n <= MAX_LATTICE_SITES)
                .ok_or(GridError::LatticeTooLarge(usize::MAX))?;
        }
        if len > MAX_LATTICE_SITES {
            return Err(GridError::LatticeTooLarge(len));
        }
        Ok(Self {
            origin,
            extents,
            strides,
            len,
        })
    }

    fn linear(&self, site: &[i64]) -> Option<usize> {
        let mut lin = 0;
        for j in 0..site.len() {
            let off = site[j] - self.origin[j];
            if off < 0 || off as usize >= self.extents[j] {
                return None;
            }
            lin += off as usize * self.strides[j];
        }
        Some(lin)
    }

    fn site(&self, mut lin: usize, out: &mut [i64]) {
        for j in 0..self.extents.len() {
            out[j] = self.origin[j] + (lin / self.strides[j]) as i64;
            lin %= self.strides[j];
        }
    }

    /// Linear offset of the `+e_axis` neighbor, if inside the box.
    fn step_up(&self, lin: usize, axis: usize) -> Option<usize> {
        let coord = (lin / self.strides[axis]) % self.extents[axis];
        (coord + 1 < self.extents[axis]).then(|| lin + self.strides[axis])
    }

    fn step_down(&self, lin: usize, axis: usize) -> Option<usize> {
        let coord = (lin / self.strides[axis]) % self.extents[axis];
        (coord > 0).then(|| lin - self.strides[axis])
    }
}

/// Level-`k` lattice graph with degrees `v_k` and measure `m_k = v_k 2^{-kd}/(2d)`.
#[derive(Clone)]
pub struct GridGraph {
    level: u32,
    dimension: usize,
    c1: Option<f64>,
    tag: GridTag,
    lattice: LatticeBox,
    slot: Vec<u32>,
    coords: Vec<i64>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    measure: Vec<f64>,
    cubes: Vec<CubeIndex>,
    edge_count: usize,
    id: u64,
}

impl fmt::Debug for GridGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridGraph")
            .field("level", &self.level)
            .field("dimension", &self.dimension)
            .field("tag", &self.tag)
            .field("vertices", &self.len())
            .field("edges", &self.edge_count)
            .field("id", &format_args!("{:016x}", self.id))
            .finish()
    }
}

const NO_VERTEX: u32 = u32::MAX;

impl GridGraph {
    /// Assemble from a vertex mask and per-axis edge marks over `lattice`
    /// (edge `(x, x + e_j)` is marked at `x`).
    fn assemble(
        level: u32,
        c1: Option<f64>,
        tag: GridTag,
        lattice: LatticeBox,
        is_vertex: &[bool],
        edge_marks: &[Vec<bool>],
        cubes: Vec<CubeIndex>,
    ) -> Self {
        let d = lattice.extents.len();
        let mut slot = vec![NO_VERTEX; lattice.len];
        let mut coords = Vec::new();
        let mut site = vec![0i64; d];
        let mut order = Vec::new();
        for (lin, _) in is_vertex.iter().enumerate().filter(|(_, v)| **v) {
            slot[lin] = order.len() as u32;
            order.push(lin);
            lattice.site(lin, &mut site);
            coords.extend_from_slice(&site);
        }
        let mut offsets = Vec::with_capacity(order.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for &lin in &order {
            // -e_0, …, -e_{d-1}, +e_{d-1}, …, +e_0 is ascending lexicographic order.
            for axis in 0..d {
                if let Some(down) = lattice.step_down(lin, axis) {
                    if edge_marks[axis][down] {
                        neighbors.push(slot[down] as usize);
                    }
                }
            }
            for axis in (0..d).rev() {
                if edge_marks[axis][lin] {
                    let up = lattice.step_up(lin, axis).expect("marked edge inside lattice");
                    neighbors.push(slot[up] as usize);
                }
            }
            offsets.push(neighbors.len());
        }
        let unit = spacing(level).powi(d as i32) / (2 * d) as f64;
        let measure = offsets.windows(2).map(|w| (w[1] - w[0]) as f64 * unit).collect();
        let edge_count = neighbors.len() / 2;
        let mut g = Self {
            level,
            dimension: d,
            c1,
            tag,
            lattice,
            slot,
            coords,
            offsets,
            neighbors,
            measure,
            cubes,
            edge_count,
            id: 0,
        };
        g.id = g.compute_id();
        g
    }

    fn compute_id(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.level.hash(&mut h);
        self.dimension.hash(&mut h);
        self.tag.hash(&mut h);
        self.c1.map(f64::to_bits).hash(&mut h);
        self.coords.hash(&mut h);
        self.neighbors.hash(&mut h);
        h.finish()
    }

    fn empty(level: u32, dimension: usize, c1: Option<f64>, tag: GridTag) -> Self {
        let lattice = LatticeBox::new(vec![0; dimension], vec![1; dimension]).expect("unit box");
        let marks = vec![vec![false; 1]; dimension];
        Self::assemble(level, c1, tag, lattice, &[false], &marks, Vec::new())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn c1(&self) -> Option<f64> {
        self.c1
    }

    pub fn tag(&self) -> GridTag {
        self.tag
    }

    pub fn spacing(&self) -> f64 {
        spacing(self.level)
    }

    /// Identity used to tie [`GridFunction`]s to their grid.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Integer lattice coordinates of vertex `id`.
    pub fn vertex(&self, id: usize) -> &[i64] {
        &self.coords[id * self.dimension..(id + 1) * self.dimension]
    }

    pub fn position(&self, id: usize) -> Vec<f64> {
        let h = self.spacing();
        self.vertex(id).iter().map(|&i| i as f64 * h).collect()
    }

    pub fn vertex_id(&self, site: &[i64]) -> Option<usize> {
        if site.len() != self.dimension {
            return None;
        }
        self.lattice
            .linear(site)
            .map(|lin| self.slot[lin])
            .filter(|&s| s != NO_VERTEX)
            .map(|s| s as usize)
    }

    /// Vertex whose lattice site is nearest to `p` (rounding each coordinate).
    pub fn nearest_vertex(&self, p: &[f64]) -> Option<usize> {
        let scale = self.spacing().recip();
        let site: Vec<i64> = p.iter().map(|x| (x * scale).round() as i64).collect();
        self.vertex_id(&site)
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.neighbors[self.offsets[id]..self.offsets[id + 1]]
    }

    pub fn degree(&self, id: usize) -> usize {
        self.offsets[id + 1] - self.offsets[id]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.len()).map(|i| self.degree(i)).collect()
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn cubes(&self) -> &[CubeIndex] {
        &self.cubes
    }

    /// Unordered edges `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j))
        })
    }

    pub fn to_export(&self) -> GridExport {
        GridExport {
            level: self.level,
            c1: self.c1,
            tag: self.tag,
            vertices: (0..self.len()).map(|i| self.vertex(i).to_vec()).collect(),
            edges: self.edges().map(|(i, j)| [i, j]).collect(),
            degrees: self.degrees(),
            measure: self.measure.clone(),
        }
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_export()).expect("grid export serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex_digest(self.to_json().as_bytes())
    }

    /// Rebuild from an export, checking that degrees and measure match the edges.
    pub fn from_export(export: &GridExport) -> Result<Self, GridError> {
        check_level(export.level)?;
        if let Some(c1) = export.c1 {
            check_c1(c1)?;
        }
        let n = export.vertices.len();
        if n == 0 {
            let d = 1;
            return Ok(Self::empty(export.level, d, export.c1, export.tag));
        }
        let d = export.vertices[0].len();
        if d == 0 || export.vertices.iter().any(|v| v.len() != d) {
            return Err(GridError::Invalid("inconsistent vertex dimensions".into()));
        }
        if export.vertices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GridError::Invalid("vertices must be strictly increasing".into()));
        }
        let mut origin = export.vertices[0].clone();
        let mut top = export.vertices[0].clone();
        for v in &export.vertices {
            for j in 0..d {
                origin[j] = origin[j].min(v[j]);
                top[j] = top[j].max(v[j]);
            }
        }
        let extents = (0..d).map(|j| (top[j] - origin[j] + 1) as usize).collect();
        let lattice = LatticeBox::new(origin, extents)?;
        let mut is_vertex = vec![false; lattice.len];
        for v in &export.vertices {
            is_vertex[lattice.linear(v).expect("inside own box")] = true;
        }
        let mut marks = vec![vec![false; lattice.len]; d];
        for &[a, b] in &export.edges {
            let (va, vb) = match (export.vertices.get(a), export.vertices.get(b)) {
                (Some(va), Some(vb)) if a < b => (va, vb),
                _ => return Err(GridError::Invalid(format!("bad edge [{a}, {b}]"))),
            };
            let diff: Vec<i64> = vb.iter().zip(va).map(|(x, y)| x - y).collect();
            let axis = match diff.iter().position(|&x| x != 0) {
                Some(j) if diff[j] == 1 && diff.iter().filter(|&&x| x != 0).count() == 1 => j,
                _ => return Err(GridError::Invalid(format!("edge [{a}, {b}] is not a lattice step"))),
            };
            marks[axis][lattice.linear(va).expect("inside own box")] = true;
        }
        let g = Self::assemble(
            export.level,
            export.c1,
            export.tag,
            lattice,
            &is_vertex,
            &marks,
            Vec::new(),
        );
        if g.degrees() != export.degrees {
            return Err(GridError::Invalid("degrees disagree with edges".into()));
        }
        if g
            .measure
            .iter()
            .zip(&export.measure)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1e-300))
            || g.measure.len() != export.measure.len()
        {
            return Err(GridError::Invalid("measure disagrees with degrees".into()));
        }
        Ok(g)
    }
}

/// JSON grid exchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridExport {
    pub level: u32,
    pub c1: Option<f64>,
    pub tag: GridTag,
    pub vertices: Vec<Vec<i64>>,
    pub edges: Vec<[usize; 2]>,
    pub degrees: Vec<usize>,
    pub measure: Vec<f64>,
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn check_level(k: u32) -> Result<(), GridError> {
    if (1..=30).contains(&k) {
        Ok(())
    } else {
        Err(GridError::InvalidLevel(k))
    }
}

fn check_c1(c1: f64) -> Result<(), GridError> {
    if c1 > 0.0 && c1 < 1.0 {
        Ok(())
    } else {
        Err(GridError::InvalidC1(c1))
    }
}

/// Cube-index box covering the domain's bounding box at level `k`.
fn cube_lattice(spec: &DomainSpec, k: u32) -> Result<LatticeBox, GridError> {
    let scale = spacing(k).recip();
    let (lo, hi) = spec.bounding_box();
    let origin: Vec<i64> = lo.iter().map(|x| (x * scale).floor() as i64).collect();
    let extents = hi
        .iter()
        .zip(&origin)
        .map(|(x, o)| ((x * scale).ceil() as i64 - o).max(1) as usize)
        .collect();
    LatticeBox::new(origin, extents)
}

/// Cube indices of every closed level-`k` cube containing `p`.
fn cubes_containing(p: &[f64], k: u32) -> Vec<Vec<i64>> {
    let scale = spacing(k).recip();
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for &x in p {
        let m = x * scale;
        let choices: Vec<i64> = if m.fract() == 0.0 {
            vec![m as i64 - 1, m as i64]
        } else {
            vec![m.floor() as i64]
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |&c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    out
}

/// Cube complex `A_k` and its vertex graph `D_k`.
///
/// Returns an empty grid when no qualifying cube contains the base point.
pub fn build_cube_complex(spec: &DomainSpec, k: u32, c1: f64) -> Result<GridGraph, GridError> {
    check_level(k)?;
    check_c1(c1)?;
    let d = spec.dimension();
    let cubes = cube_lattice(spec, k)?;
    let threshold = c1 * spacing(k);

    const UNSEEN: u8 = 0;
    const ACCEPTED: u8 = 1;
    const REJECTED: u8 = 2;
    let mut state = vec![UNSEEN; cubes.len];
    let mut site = vec![0i64; d];
    let qualifies = |lin: usize, site: &mut [i64]| {
        cubes.site(lin, site);
        spec.cube_clearance(&CubeIndex(site.to_vec()), k) > threshold
    };

    let mut queue = VecDeque::new();
    for seed in cubes_containing(spec.base_point(), k) {
        if let Some(lin) = cubes.linear(&seed) {
            if state[lin] == UNSEEN {
                state[lin] = if qualifies(lin, &mut site) {
                    queue.push_back(lin);
                    ACCEPTED
                } else {
                    REJECTED
                };
            }
        }
    }
    while let Some(lin) = queue.pop_front() {
        for axis in 0..d {
            for next in [cubes.step_down(lin, axis), cubes.step_up(lin, axis)]
                .into_iter()
                .flatten()
            {
                if state[next] != UNSEEN {
                    continue;
                }
                state[next] = if qualifies(next, &mut site) {
                    queue.push_back(next);
                    ACCEPTED
                } else {
                    REJECTED
                };
            }
        }
    }

    let accepted: Vec<usize> = (0..cubes.len).filter(|&i| state[i] == ACCEPTED).collect();
    if accepted.is_empty() {
        return Ok(GridGraph::empty(k, d, Some(c1), GridTag::CubeBased));
    }

    let vertices = LatticeBox::new(
        cubes.origin.clone(),
        cubes.extents.iter().map(|e| e + 1).collect(),
    )?;
    let mut is_vertex = vec![false; vertices.len];
    let mut marks = vec![vec![false; vertices.len]; d];
    let mut cube_list = Vec::with_capacity(accepted.len());
    let mut corner = vec![0i64; d];
    for &lin in &accepted {
        cubes.site(lin, &mut site);
        cube_list.push(CubeIndex(site.clone()));
        for bits in 0..(1usize << d) {
            for j in 0..d {
                corner[j] = site[j] + ((bits >> (d - 1 - j)) & 1) as i64;
            }
            let v = vertices.linear(&corner).expect("corner inside vertex box");
            is_vertex[v] = true;
            for (axis, m) in marks.iter_mut().enumerate() {
                if (bits >> (d - 1 - axis)) & 1 == 0 {
                    m[v] = true;
                }
            }
        }
    }
    Ok(GridGraph::assemble(
        k,
        Some(c1),
        GridTag::CubeBased,
        vertices,
        &is_vertex,
        &marks,
        cube_list,
    ))
}

/// Segment-based comparison grid: the connected set of lattice segments lying
/// in `D`, seeded at the segment endpoint nearest the base point (ties broken
/// lexicographically).
pub fn build_edge_graph(spec: &DomainSpec, k: u32) -> Result<GridGraph, GridError> {
    check_level(k)?;
    let d = spec.dimension();
    let h = spacing(k);
    let scale = h.recip();
    let (lo, hi) = spec.bounding_box();
    let origin: Vec<i64> = lo.iter().map(|x| (x * scale).floor() as i64).collect();
    let extents = hi
        .iter()
        .zip(&origin)
        .map(|(x, o)| ((x * scale).ceil() as i64 - o + 1) as usize)
        .collect();
    let lattice = LatticeBox::new(origin, extents)?;

    let mut site = vec![0i64; d];
    let mut pos = vec![0.0; d];
    let position = |lin: usize, site: &mut [i64], pos: &mut [f64]| {
        lattice.site(lin, site);
        for j in 0..d {
            pos[j] = site[j] as f64 * h;
        }
    };
    let inside: Vec<bool> = (0..lattice.len)
        .map(|lin| {
            position(lin, &mut site, &mut pos);
            spec.region().contains(&pos)
        })
        .collect();

    let mut marks = vec![vec![false; lattice.len]; d];
    let mut other = vec![0.0; d];
    for lin in (0..lattice.len).filter(|&i| inside[i]) {
        position(lin, &mut site, &mut pos);
        for axis in 0..d {
            if let Some(up) = lattice.step_up(lin, axis) {
                if inside[up] {
                    other.copy_from_slice(&pos);
                    other[axis] += h;
                    marks[axis][lin] = spec.segment_inside(&pos, &other);
                }
            }
        }
    }

    let incident = |lin: usize| {
        (0..d).any(|axis| {
            marks[axis][lin] || lattice.step_down(lin, axis).is_some_and(|dn| marks[axis][dn])
        })
    };
    let x0 = spec.base_point();
    let mut seed = None;
    let mut best = f64::INFINITY;
    for lin in (0..lattice.len).filter(|&i| inside[i] && incident(i)) {
        position(lin, &mut site, &mut pos);
        let dist: f64 = pos.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist < best {
            best = dist;
            seed = Some(lin);
        }
    }
    let Some(seed) = seed else {
        return Ok(GridGraph::empty(k, d, None, GridTag::EdgeBased));
    };

    let mut in_component = vec![false; lattice.len];
    in_component[seed] = true;
    let mut queue = VecDeque::from([seed]);
    while let Some(lin) = queue.pop_front() {
        for axis in 0..d {
            let mut visit = |next: usize| {
                if !in_component[next] {
                    in_component[next] = true;
                    queue.push_back(next);
                }
            };
            if marks[axis][lin] {
                visit(lattice.step_up(lin, axis).expect("marked edge inside lattice"));
            }
            if let Some(dn) = lattice.step_down(lin, axis) {
                if marks[axis][dn] {
                    visit(dn);
                }
            }
        }
    }
    for m in &mut marks {
        for (lin, mark) in m.iter_mut().enumerate() {
            *mark &= in_component[lin];
        }
    }
    Ok(GridGraph::assemble(
        k,
        None,
        GridTag::EdgeBased,
        lattice,
        &in_component,
        &marks,
        Vec::new(),
    ))
}

/// Real values indexed by the vertices of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
    grid_id: u64,
}

impl GridFunction {
    pub fn new(grid: &GridGraph, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            grid_id: grid.id(),
        })
    }

    pub fn constant(grid: &GridGraph, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
            grid_id: grid.id(),
        }
    }

    /// Pointwise evaluation at vertex positions.
    pub fn from_fn(grid: &GridGraph, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        Self {
            values,
            grid_id: grid.id(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_id(&self) -> u64 {
        self.grid_id
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_grid(&self, grid: &GridGraph) -> Result<(), GridError> {
        if self.grid_id != grid.id() {
            return Err(GridError::GridMismatch {
                expected: grid.id(),
                got: self.grid_id,
            });
        }
        Ok(())
    }
}

/// `E_k f`: constant `f(x)` on the half-open cell `Π [x_i - h/2, x_i + h/2)`.
#[derive(Debug, Clone, Copy)]
pub struct PiecewiseConstant<'a> {
    grid: &'a GridGraph,
    values: &'a [f64],
}

impl PiecewiseConstant<'_> {
    pub fn eval(&self, z: &[f64]) -> f64 {
        let scale = self.grid.spacing().recip();
        let site: Vec<i64> = z.iter().map(|x| (x * scale + 0.5).floor() as i64).collect();
        self.grid.vertex_id(&site).map_or(0.0, |i| self.values[i])
    }
}

pub fn extend_to_domain<'a>(
    grid: &'a GridGraph,
    f: &'a GridFunction,
) -> Result<PiecewiseConstant<'a>, GridError> {
    f.check_grid(grid)?;
    Ok(PiecewiseConstant {
        grid,
        values: f.values(),
    })
}

/// `π_k u`: cell averages of `u` by tensor Gauss quadrature.
pub fn restrict_to_grid(
    grid: &GridGraph,
    u: impl Fn(&[f64]) -> f64,
) -> Result<GridFunction, GridError> {
    let h = grid.spacing();
    let volume = h.powi(grid.dimension() as i32);
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.position(i);
        let lo: Vec<f64> = x.iter().map(|c| c - 0.5 * h).collect();
        let hi: Vec<f64> = x.iter().map(|c| c + 0.5 * h).collect();
        let mut finite = true;
        let v = quadrature::integrate_box(&lo, &hi, |z| {
            let y = u(z);
            finite &= y.is_finite();
            y
        }) / volume;
        if !finite || !v.is_finite() {
            return Err(GridError::NonFinite(i));
        }
        values.push(v);
    }
    GridFunction::new(grid, values)
}

pub fn total_measure(grid: &GridGraph) -> f64 {
    grid.measure().iter().sum()
}
