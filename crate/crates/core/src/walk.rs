//! Simple random walks on lattice grids.
//!
//! The discrete-time walk jumps every `2^{-2k}` time units to a uniformly
//! chosen neighbor; between jumps the path is interpolated linearly (`X^k`)
//! or frozen at the last jump (`Y^k`). The continuous-time walk uses the same
//! jump chain with exponential holding times of mean `2^{-2k}`.
//!
//! Paths store vertex ids; coordinates are materialized through the grid.
//! Jump times `j·2^{-2k}` are exact in binary floating point, so lookups by
//! time round toward the earlier step without drift.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridGraph;
use crate::rng::RandomSource;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("grid is empty")]
    EmptyGrid,
    #[error("vertex {0} has no neighbors")]
    IsolatedVertex(usize),
    #[error("vertex {0} is not in the grid")]
    UnknownVertex(usize),
    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),
    #[error("expected the {expected:?} discipline")]
    WrongDiscipline { expected: Discipline },
    #[error("time {t} exceeds the path horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("linear paths can only be reversed at a knot time, got {0}")]
    NotAKnot(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Discipline {
    DiscreteTime,
    ExponentialHolding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StartMode {
    FixedVertex(usize),
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WalkConfig {
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    pub discipline: Discipline,
    pub start: StartMode,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(WalkError::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.replicas == 0 {
            return Err(WalkError::InvalidConfig("replicas must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Interpolation {
    /// Piecewise linear between knots (`X^k`).
    Linear,
    /// Frozen at the last dyadic step (`Y^k`).
    Step,
    /// Right-continuous jumps (continuous-time walk).
    Jump,
}

/// A lattice trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    times: Vec<f64>,
    vertices: Vec<usize>,
    interpolation: Interpolation,
    horizon: f64,
}

impl PathSample {
    pub fn new(
        times: Vec<f64>,
        vertices: Vec<usize>,
        interpolation: Interpolation,
        horizon: f64,
    ) -> Result<Self, WalkError> {
        if times.is_empty() || times.len() != vertices.len() || times[0] != 0.0 {
            return Err(WalkError::InvalidConfig(
                "path needs equal-length times and vertices starting at time 0".into(),
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(WalkError::InvalidConfig("path times must increase".into()));
        }
        Ok(Self {
            times,
            vertices,
            interpolation,
            horizon,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the last knot at or before `t`.
    fn knot_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Vertex held at time `t` (right-continuous lookup).
    pub fn vertex_at(&self, t: f64) -> usize {
        self.vertices[self.knot_at(t)]
    }

    /// Position at time `t` under the path's interpolation.
    pub fn position_at(&self, grid: &GridGraph, t: f64) -> Vec<f64> {
        let i = self.knot_at(t);
        let here = grid.position(self.vertices[i]);
        if self.interpolation != Interpolation::Linear || i + 1 == self.len() {
            return here;
        }
        let there = grid.position(self.vertices[i + 1]);
        let frac = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        here.iter()
            .zip(&there)
            .map(|(a, b)| a + frac * (b - a))
            .collect()
    }

    /// Left limit `ω(t-)`, with `ω(0-) = ω(0)`.
    pub fn left_limit_at(&self, grid: &GridGraph, t: f64) -> Vec<f64> {
        match self.interpolation {
            Interpolation::Linear => self.position_at(grid, t),
            _ => {
                let i = self.times.partition_point(|&s| s < t).saturating_sub(1);
                grid.position(self.vertices[i])
            }
        }
    }

    /// The step process `Y^k` of a discrete-time path.
    pub fn step_process(&self) -> PathSample {
        PathSample {
            interpolation: Interpolation::Step,
            ..self.clone()
        }
    }
}

/// One uniform neighbor draw.
pub fn step_discrete(grid: &GridGraph, vertex: usize, rng: &mut RandomSource) -> Result<usize, WalkError> {
    if vertex >= grid.len() {
        return Err(WalkError::UnknownVertex(vertex));
    }
    let nb = grid.neighbors(vertex);
    if nb.is_empty() {
        return Err(WalkError::IsolatedVertex(vertex));
    }
    Ok(nb[rng.random_range(0..nb.len())])
}

/// Alias table for starting points drawn from `m_k / Σ m_k`.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    table: WeightedAliasIndex<f64>,
}

impl StationarySampler {
    pub fn new(grid: &GridGraph) -> Result<Self, WalkError> {
        if grid.is_empty() {
            return Err(WalkError::EmptyGrid);
        }
        let table = WeightedAliasIndex::new(grid.measure().to_vec())
            .map_err(|e| WalkError::InvalidConfig(format!("stationary weights: {e}")))?;
        Ok(Self { table })
    }

    pub fn sample(&self, rng: &mut RandomSource) -> usize {
        self.table.sample(rng)
    }
}

pub fn sample_stationary_start(grid: &GridGraph, rng: &mut RandomSource) -> Result<usize, WalkError> {
    Ok(StationarySampler::new(grid)?.sample(rng))
}

/// Starting vertex for one replica.
pub fn start_vertex(
    grid: &GridGraph,
    start: StartMode,
    sampler: Option<&StationarySampler>,
    rng: &mut RandomSource,
) -> Result<usize, WalkError> {
    if grid.is_empty() {
        return Err(WalkError::EmptyGrid);
    }
    match start {
        StartMode::FixedVertex(v) if v < grid.len() => Ok(v),
        StartMode::FixedVertex(v) => Err(WalkError::UnknownVertex(v)),
        StartMode::Stationary => match sampler {
            Some(s) => Ok(s.sample(rng)),
            None => sample_stationary_start(grid, rng),
        },
    }
}

/// Number of jumps the discrete walk makes on `[0, horizon]`: `⌈T·2^{2k}⌉`.
pub fn discrete_steps(level: u32, horizon: f64) -> usize {
    (horizon * (2.0 * level as f64).exp2()).ceil() as usize
}

/// Discrete-time walk `X^k` on `[0, T]`, linearly interpolated.
pub fn simulate_discrete(
    grid: &GridGraph,
    cfg: &WalkConfig,
    rng: &mut RandomSource,
) -> Result<PathSample, WalkError> {
    cfg.validate()?;
    if cfg.discipline != Discipline::DiscreteTime {
        return Err(WalkError::WrongDiscipline {
            expected: Discipline::DiscreteTime,
        });
    }
    let mut v = start_vertex(grid, cfg.start, None, rng)?;
    let steps = discrete_steps(grid.level(), cfg.horizon);
    let dt = (-2.0 * grid.level() as f64).exp2();
    let mut times = Vec::with_capacity(steps + 1);
    let mut vertices = Vec::with_capacity(steps + 1);
    times.push(0.0);
    vertices.push(v);
    for j in 1..=steps {
        v = step_discrete(grid, v, rng)?;
        times.push(j as f64 * dt);
        vertices.push(v);
    }
    Ok(PathSample {
        times,
        vertices,
        interpolation: Interpolation::Linear,
        horizon: cfg.horizon,
    })
}

/// Continuous-time walk with exponential holding times of mean `2^{-2k}`.
pub fn simulate_continuous(
    grid: &GridGraph,
    cfg: &WalkConfig,
    rng: &mut RandomSource,
) -> Result<PathSample, WalkError> {
    cfg.validate()?;
    if cfg.discipline != Discipline::ExponentialHolding {
        return Err(WalkError::WrongDiscipline {
            expected: Discipline::ExponentialHolding,
        });
    }
    let mut v = start_vertex(grid, cfg.start, None, rng)?;
    let holding = holding_distribution(grid.level());
    let mut times = vec![0.0];
    let mut vertices = vec![v];
    let mut t = holding.sample(rng);
    while t <= cfg.horizon {
        v = step_discrete(grid, v, rng)?;
        times.push(t);
        vertices.push(v);
        t += holding.sample(rng);
    }
    Ok(PathSample {
        times,
        vertices,
        interpolation: Interpolation::Jump,
        horizon: cfg.horizon,
    })
}

/// Exponential holding law with rate `2^{2k}`.
pub fn holding_distribution(level: u32) -> Exp<f64> {
    Exp::new((2.0 * level as f64).exp2()).expect("positive rate")
}

/// Time reversal `r_t(ω)(s) = ω((t-s)-)` for `s ≤ t`, and `ω(0)` afterwards.
///
/// Step and jump paths reverse into right-continuous jump paths. Linear paths
/// are continuous, so `r_t` is plain reflection of the knots; `t` must then be a
/// knot time for the result to stay on lattice vertices.
pub fn reverse_path(p: &PathSample, t: f64) -> Result<PathSample, WalkError> {
    if !(t <= p.horizon) || t < 0.0 {
        return Err(WalkError::BeyondHorizon { t, horizon: p.horizon });
    }
    match p.interpolation {
        Interpolation::Linear => {
            let last = p.knot_at(t);
            if p.times[last] != t {
                return Err(WalkError::NotAKnot(t));
            }
            Ok(PathSample {
                times: (0..=last).rev().map(|i| t - p.times[i]).collect(),
                vertices: (0..=last).rev().map(|i| p.vertices[i]).collect(),
                interpolation: Interpolation::Linear,
                horizon: t,
            })
        }
        Interpolation::Step | Interpolation::Jump => {
            // Knots strictly before t; the value held just before t comes first.
            let last = p.times.partition_point(|&s| s < t).saturating_sub(1);
            let mut times = vec![0.0];
            let mut vertices = vec![p.vertices[last]];
            for i in (1..=last).rev() {
                times.push(t - p.times[i]);
                vertices.push(p.vertices[i - 1]);
            }
            Ok(PathSample {
                times,
                vertices,
                interpolation: Interpolation::Jump,
                horizon: t,
            })
        }
    }
}

/// CSV rows `replica,time,vertex,x1..xd` for a set of paths.
pub fn paths_to_csv(grid: &GridGraph, paths: &[(usize, PathSample)]) -> String {
    let mut out = String::from("replica,time,vertex");
    for j in 1..=grid.dimension() {
        let _ = write!(out, ",x{j}");
    }
    out.push('\n');
    for (replica, p) in paths {
        for (t, &v) in p.times.iter().zip(&p.vertices) {
            let _ = write!(out, "{replica},{t},{v}");
            for x in grid.position(v) {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
    }
    out
}

/// The `2d` unit steps in ascending lexicographic order, matching the
/// neighbor order of interior grid vertices.
pub fn free_directions(d: usize) -> Vec<Vec<i64>> {
    let mut dirs = Vec::with_capacity(2 * d);
    for axis in 0..d {
        let mut e = vec![0; d];
        e[axis] = -1;
        dirs.push(e);
    }
    for axis in (0..d).rev() {
        let mut e = vec![0; d];
        e[axis] = 1;
        dirs.push(e);
    }
    dirs
}

/// One step of the free simple random walk on `ℤ^d`, drawing from the same
/// stream layout as [`step_discrete`].
pub fn step_free(site: &mut [i64], dirs: &[Vec<i64>], rng: &mut RandomSource) {
    let e = &dirs[rng.random_range(0..dirs.len())];
    for (x, de) in site.iter_mut().zip(e) {
        *x += de;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_builtin_domain, BuiltinDomain};
    use crate::grid::{build_cube_complex, GridExport, GridTag};

    fn nine() -> GridGraph {
        let sq = make_builtin_domain(&BuiltinDomain::unit_square(), None).unwrap();
        build_cube_complex(&sq, 2, 0.5).unwrap()
    }

    fn cfg(horizon: f64, discipline: Discipline, start: StartMode) -> WalkConfig {
        WalkConfig {
            horizon,
            replicas: 1,
            seed: 1,
            discipline,
            start,
        }
    }

    /// 3σ binomial band for frequency `p` over `n` draws.
    fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        (count as f64 - n as f64 * p).abs() <= 3.0 * sigma
    }

    #[test]
    fn uniform_neighbor_choice() {
        let g = nine();
        let mut rng = RandomSource::new(5, 0);
        let n = 100_000;
        for (vertex, deg) in [(0usize, 2usize), (4, 4)] {
            assert_eq!(g.degree(vertex), deg);
            let mut counts = std::collections::HashMap::new();
            for _ in 0..n {
                *counts.entry(step_discrete(&g, vertex, &mut rng).unwrap()).or_insert(0) += 1;
            }
            assert_eq!(counts.len(), deg);
            for &c in counts.values() {
                assert!(within_3_sigma(c, n, 1.0 / deg as f64), "count {c}");
            }
        }
    }

    #[test]
    fn fixed_seed_reproduces_sequence() {
        let g = nine();
        let run = || {
            let mut rng = RandomSource::new(99, 4);
            let mut v = 4;
            (0..50)
                .map(|_| {
                    v = step_discrete(&g, v, &mut rng).unwrap();
                    v
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn one_step_midpoint() {
        let g = nine();
        let dt = 1.0 / 16.0;
        let p = simulate_discrete(
            &g,
            &cfg(dt, Discipline::DiscreteTime, StartMode::FixedVertex(4)),
            &mut RandomSource::new(3, 0),
        )
        .unwrap();
        assert_eq!(p.len(), 2);
        let mid = p.position_at(&g, dt / 2.0);
        let (a, b) = (g.position(p.vertices()[0]), g.position(p.vertices()[1]));
        for j in 0..2 {
            assert_eq!(mid[j], 0.5 * (a[j] + b[j]));
        }
    }

    #[test]
    fn step_and_linear_processes_stay_close() {
        let g = nine();
        let p = simulate_discrete(
            &g,
            &cfg(3.0, Discipline::DiscreteTime, StartMode::Stationary),
            &mut RandomSource::new(8, 0),
        )
        .unwrap();
        let y = p.step_process();
        let dt = 1.0 / 16.0;
        for i in 0..p.len() * 8 {
            let t = i as f64 * dt / 8.0;
            let (a, b) = (p.position_at(&g, t), y.position_at(&g, t));
            let dist = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!(dist <= g.spacing());
            if i % 8 == 0 {
                assert_eq!(a, b);
            }
        }
        for (i, &t) in p.times().iter().enumerate() {
            assert_eq!(t, i as f64 * dt);
        }
    }

    #[test]
    fn isolated_vertex_is_an_error() {
        let single = GridGraph::from_export(&GridExport {
            level: 2,
            c1: Some(0.5),
            tag: GridTag::CubeBased,
            vertices: vec![vec![1, 1]],
            edges: vec![],
            degrees: vec![0],
            measure: vec![0.0],
        })
        .unwrap();
        let err = simulate_discrete(
            &single,
            &cfg(1.0, Discipline::DiscreteTime, StartMode::FixedVertex(0)),
            &mut RandomSource::new(1, 0),
        )
        .unwrap_err();
        assert_eq!(err, WalkError::IsolatedVertex(0));
    }

    #[test]
    fn empty_grid_is_an_error() {
        let sq = make_builtin_domain(&BuiltinDomain::unit_square(), None).unwrap();
        let empty = build_cube_complex(&sq, 1, 0.5).unwrap();
        for d in [Discipline::DiscreteTime, Discipline::ExponentialHolding] {
            let c = cfg(1.0, d, StartMode::Stationary);
            let r = match d {
                Discipline::DiscreteTime => simulate_discrete(&empty, &c, &mut RandomSource::new(1, 0)),
                Discipline::ExponentialHolding => simulate_continuous(&empty, &c, &mut RandomSource::new(1, 0)),
            };
            assert_eq!(r.unwrap_err(), WalkError::EmptyGrid);
        }
    }

    #[test]
    fn holding_times_have_mean_dyadic_step() {
        let level = 3;
        let exp = holding_distribution(level);
        let mut rng = RandomSource::new(17, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| exp.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean / (1.0 / 64.0) - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn continuous_jump_counts_are_poisson() {
        let g = nine();
        let horizon = 2.0;
        let c = cfg(horizon, Discipline::ExponentialHolding, StartMode::FixedVertex(4));
        let reps = 10_000;
        let counts: Vec<f64> = (0..reps)
            .map(|r| {
                let p = simulate_continuous(&g, &c, &mut RandomSource::new(21, r)).unwrap();
                (p.len() - 1) as f64
            })
            .collect();
        let lambda = horizon * 16.0;
        let mean = counts.iter().sum::<f64>() / reps as f64;
        let se = (lambda / reps as f64).sqrt();
        assert!((mean - lambda).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn stationary_start_weights() {
        let g = nine();
        let sampler = StationarySampler::new(&g).unwrap();
        let mut rng = RandomSource::new(12, 0);
        let n = 100_000;
        let center = g.vertex_id(&[2, 2]).unwrap();
        let hits = (0..n).filter(|_| sampler.sample(&mut rng) == center).count();
        assert!(within_3_sigma(hits, n, 1.0 / 6.0), "hits {hits}");
    }

    fn hand_path() -> PathSample {
        // vertices 0 on [0,1), 1 on [1,2.5), 2 on [2.5, 4]
        PathSample::new(vec![0.0, 1.0, 2.5], vec![0, 1, 2], Interpolation::Jump, 4.0).unwrap()
    }

    #[test]
    fn reversal_of_jump_path_by_hand() {
        let p = hand_path();
        let r = reverse_path(&p, 4.0).unwrap();
        // r(s) = ω((4-s)-): 2 on [0,1.5), 1 on [1.5,3), 0 on [3, ∞)
        assert_eq!(r.times(), &[0.0, 1.5, 3.0]);
        assert_eq!(r.vertices(), &[2, 1, 0]);
        // reversal at a jump time uses the left limit
        let r2 = reverse_path(&p, 2.5).unwrap();
        assert_eq!(r2.times(), &[0.0, 1.5]);
        assert_eq!(r2.vertices(), &[1, 0]);
        assert!(matches!(reverse_path(&p, 5.0), Err(WalkError::BeyondHorizon { .. })));
    }

    #[test]
    fn reversal_endpoint_identities_and_involution() {
        let g = nine();
        let p = simulate_continuous(
            &g,
            &cfg(1.0, Discipline::ExponentialHolding, StartMode::Stationary),
            &mut RandomSource::new(4, 2),
        )
        .unwrap();
        let t = 0.7;
        let r = reverse_path(&p, t).unwrap();
        let eps = 1e-12;
        assert_eq!(r.position_at(&g, eps), p.left_limit_at(&g, t));
        assert_eq!(r.position_at(&g, 0.0), p.left_limit_at(&g, t));
        assert_eq!(r.left_limit_at(&g, t), p.position_at(&g, 0.0));
        assert_eq!(r.position_at(&g, t), p.position_at(&g, 0.0));
        let rr = reverse_path(&r, t).unwrap();
        for i in 1..200 {
            let s = i as f64 * t / 200.0;
            if p.times().contains(&s) {
                continue;
            }
            assert_eq!(rr.position_at(&g, s), p.left_limit_at(&g, s));
        }
    }

    #[test]
    fn constant_path_reverses_to_itself() {
        let p = PathSample::new(vec![0.0], vec![3], Interpolation::Jump, 2.0).unwrap();
        let r = reverse_path(&p, 2.0).unwrap();
        assert_eq!(r.vertices(), &[3]);
        assert_eq!(r.times(), &[0.0]);
    }

    #[test]
    fn linear_reversal_requires_knot() {
        let g = nine();
        let p = simulate_discrete(
            &g,
            &cfg(1.0, Discipline::DiscreteTime, StartMode::FixedVertex(0)),
            &mut RandomSource::new(4, 0),
        )
        .unwrap();
        assert!(matches!(reverse_path(&p, 0.3), Err(WalkError::NotAKnot(_))));
        let r = reverse_path(&p, 0.5).unwrap();
        for i in 0..=40 {
            let s = i as f64 * 0.5 / 40.0;
            let (a, b) = (r.position_at(&g, s), p.position_at(&g, 0.5 - s));
            for j in 0..2 {
                assert!((a[j] - b[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn free_directions_match_interior_neighbor_order() {
        let g = nine();
        let c = g.vertex_id(&[2, 2]).unwrap();
        let dirs = free_directions(2);
        for (e, &nb) in dirs.iter().zip(g.neighbors(c)) {
            let site: Vec<i64> = g.vertex(c).iter().zip(e).map(|(x, d)| x + d).collect();
            assert_eq!(g.vertex(nb), &site[..]);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = nine();
        let p = PathSample::new(vec![0.0, 0.0625], vec![4, 3], Interpolation::Linear, 0.0625).unwrap();
        let csv = paths_to_csv(&g, &[(0, p)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "replica,time,vertex,x1,x2");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,0,4,0.5,0.5"));
    }
}
