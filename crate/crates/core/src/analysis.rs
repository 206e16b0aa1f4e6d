//! Continuum oracles and Monte Carlo diagnostics for the lattice walks.
//!
//! The limit of the walks is reflecting Brownian motion with generator
//! `(1/(2d))Δ`. On boxes its transition density is a product of cosine
//! series ([`HeatKernelOracle`]), and the exit-time law from a box started at
//! its center is a product of sine series ([`box_exit_survival`]).
//!
//! Lattice positions are histogrammed by spreading each vertex's unit mass
//! uniformly over its cell `x + [-h/2, h/2)^d` (clipped to the oracle box).
//! This keeps bin masses free of aliasing between the `2^{-k}` lattice and
//! arbitrary bin edges.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DomainError, DomainSpec};
use crate::grid::{self, GridError, GridGraph};
use crate::rng::{run_replicas, RandomSource};
use crate::walk::{
    self, discrete_steps, holding_distribution, Discipline, StartMode, StationarySampler,
    WalkConfig, WalkError,
};
use rand_distr::Distribution;

/// Series tail allowed at the truncation cutoff.
pub const SERIES_TAIL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("{terms} series terms are too few at t = {t}; need {needed}")]
    InsufficientTruncation { terms: usize, needed: usize, t: f64 },
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("start vertex is not inside the sub-box")]
    StartNotInside,
    #[error("sub-box is not interior to the grid: {0}")]
    SubBoxNotInterior(String),
    #[error("bins must be positive")]
    InvalidBins,
    #[error("this test needs a {0} start")]
    WrongStart(&'static str),
}

/// Truncated Neumann heat kernel on the box `Π [lower_i, lower_i + L_i]` for
/// the generator `(1/(2d))Δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HeatKernelOracle {
    lower: Vec<f64>,
    lengths: Vec<f64>,
    terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub error_bound: f64,
}

impl HeatKernelOracle {
    pub fn new(lower: Vec<f64>, lengths: Vec<f64>, terms: usize) -> Result<Self, AnalysisError> {
        if lower.is_empty() || lower.len() != lengths.len() || lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(AnalysisError::GeometryMismatch(
                "oracle box needs positive side lengths".into(),
            ));
        }
        Ok(Self {
            lower,
            lengths,
            terms,
        })
    }

    /// Oracle on the unit interval or square, etc.
    pub fn unit(d: usize, terms: usize) -> Self {
        Self {
            lower: vec![0.0; d],
            lengths: vec![1.0; d],
            terms,
        }
    }

    /// Oracle with enough terms for every `t ≥ t_min`.
    pub fn for_time(lower: Vec<f64>, lengths: Vec<f64>, t_min: f64) -> Result<Self, AnalysisError> {
        if !(t_min > 0.0) {
            return Err(AnalysisError::NonPositiveTime(t_min));
        }
        let d = lengths.len();
        let terms = lengths
            .iter()
            .map(|&l| required_terms(l, d, t_min))
            .max()
            .unwrap_or(1);
        Self::new(lower, lengths, terms)
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.lengths).map(|(a, l)| a + l).collect()
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// Exponent rate `π²/(2d L²)` of the `n = 1` mode on `axis`.
    fn rate(&self, axis: usize) -> f64 {
        let l = self.lengths[axis];
        PI * PI / (2.0 * self.dimension() as f64 * l * l)
    }

    fn check_time(&self, t: f64) -> Result<(), AnalysisError> {
        if !(t > 0.0) {
            return Err(AnalysisError::NonPositiveTime(t));
        }
        let d = self.dimension();
        let needed = self
            .lengths
            .iter()
            .map(|&l| required_terms(l, d, t))
            .max()
            .unwrap_or(1);
        if self.terms < needed {
            return Err(AnalysisError::InsufficientTruncation {
                terms: self.terms,
                needed,
                t,
            });
        }
        Ok(())
    }

    /// Bound on the dropped tail `(2/L) Σ_{n > N} e^{-a n² t}` for one axis.
    fn axis_tail(&self, axis: usize, t: f64) -> f64 {
        let a = self.rate(axis) * t;
        let n = (self.terms + 1) as f64;
        let first = (-a * n * n).exp();
        let ratio = (-a * (2.0 * n + 1.0)).exp();
        2.0 / self.lengths[axis] * first / (1.0 - ratio).max(f64::MIN_POSITIVE)
    }

    fn axis_kernel(&self, axis: usize, t: f64, x: f64, y: f64) -> f64 {
        let l = self.lengths[axis];
        let (x, y) = (x - self.lower[axis], y - self.lower[axis]);
        let a = self.rate(axis) * t;
        let mut sum = 0.0;
        for n in 1..=self.terms {
            let nf = n as f64;
            sum += (-a * nf * nf).exp() * (nf * PI * x / l).cos() * (nf * PI * y / l).cos();
        }
        1.0 / l + 2.0 / l * sum
    }

    /// `∫_{lo}^{hi} p_t(x, y) dy` along one axis, term by term.
    pub fn axis_mass(&self, axis: usize, t: f64, x: f64, lo: f64, hi: f64) -> f64 {
        let l = self.lengths[axis];
        let (x, lo, hi) = (x - self.lower[axis], lo - self.lower[axis], hi - self.lower[axis]);
        let a = self.rate(axis) * t;
        let mut sum = 0.0;
        for n in 1..=self.terms {
            let nf = n as f64;
            let k = nf * PI / l;
            sum += (-a * nf * nf).exp() * (k * x).cos() * ((k * hi).sin() - (k * lo).sin()) / k;
        }
        (hi - lo) / l + 2.0 / l * sum
    }

    /// Truncated `p_t(x, y)` with a bound on the truncation error.
    pub fn kernel(&self, t: f64, x: &[f64], y: &[f64]) -> Result<KernelValue, AnalysisError> {
        self.check_time(t)?;
        let d = self.dimension();
        if x.len() != d || y.len() != d {
            return Err(AnalysisError::GeometryMismatch("point dimension".into()));
        }
        let factors: Vec<f64> = (0..d).map(|i| self.axis_kernel(i, t, x[i], y[i])).collect();
        let tails: Vec<f64> = (0..d).map(|i| self.axis_tail(i, t)).collect();
        let value = factors.iter().product();
        let error_bound = (0..d)
            .map(|i| {
                tails[i]
                    * (0..d)
                        .filter(|&j| j != i)
                        .map(|j| factors[j].abs() + tails[j])
                        .product::<f64>()
            })
            .sum();
        Ok(KernelValue { value, error_bound })
    }

    /// Masses `∫_bin p_t(x, y) dy` over `bins` equal bins per axis, row-major.
    pub fn bin_masses(&self, t: f64, x: &[f64], bins: usize) -> Result<Vec<f64>, AnalysisError> {
        self.check_time(t)?;
        if bins == 0 {
            return Err(AnalysisError::InvalidBins);
        }
        let per_axis: Vec<Vec<f64>> = (0..self.dimension())
            .map(|i| {
                let w = self.lengths[i] / bins as f64;
                (0..bins)
                    .map(|b| {
                        let lo = self.lower[i] + b as f64 * w;
                        self.axis_mass(i, t, x[i], lo, lo + w)
                    })
                    .collect()
            })
            .collect();
        Ok(outer_product(&per_axis))
    }
}

/// Smallest `N` with `e^{-(N+1)² π² t / (2d L²)} < SERIES_TAIL`.
pub fn required_terms(length: f64, d: usize, t: f64) -> usize {
    let a = PI * PI * t / (2.0 * d as f64 * length * length);
    let n = ((-SERIES_TAIL.ln()) / a).sqrt();
    (n.ceil() as usize).max(1)
}

fn outer_product(per_axis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for axis in per_axis {
        out = out
            .iter()
            .flat_map(|&p| axis.iter().map(move |&q| p * q))
            .collect();
    }
    out
}

/// Axis-aligned box used for binning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BinBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub bins: usize,
}

impl BinBox {
    pub fn of_oracle(oracle: &HeatKernelOracle, bins: usize) -> Self {
        Self {
            lower: oracle.lower.clone(),
            upper: oracle.upper(),
            bins,
        }
    }

    pub fn total_bins(&self) -> usize {
        self.bins.pow(self.lower.len() as u32)
    }

    /// Per-axis `(bin, fraction)` pairs for the cell of width `h` centered at `x`.
    fn axis_cell(&self, axis: usize, x: f64, h: f64) -> Vec<(usize, f64)> {
        let (lo, hi) = (self.lower[axis], self.upper[axis]);
        let a = (x - 0.5 * h).max(lo);
        let b = (x + 0.5 * h).min(hi);
        if b <= a {
            return Vec::new();
        }
        let w = (hi - lo) / self.bins as f64;
        let first = (((a - lo) / w).floor() as usize).min(self.bins - 1);
        let last = ((((b - lo) / w).ceil() as usize).max(1) - 1).min(self.bins - 1);
        (first..=last)
            .filter_map(|bin| {
                let overlap = b.min(lo + (bin + 1) as f64 * w) - a.max(lo + bin as f64 * w);
                (overlap > 0.0).then(|| (bin, overlap / (b - a)))
            })
            .collect()
    }

    /// Add `weight` spread over the lattice cell of `x` into `hist`.
    pub fn deposit(&self, hist: &mut [f64], x: &[f64], h: f64, weight: f64) {
        let mut cells: Vec<(usize, f64)> = vec![(0, weight)];
        for axis in 0..x.len() {
            let parts = self.axis_cell(axis, x[axis], h);
            cells = cells
                .iter()
                .flat_map(|&(idx, w)| parts.iter().map(move |&(b, f)| (idx * self.bins + b, w * f)))
                .collect();
        }
        for (idx, w) in cells {
            hist[idx] += w;
        }
    }
}

/// `½ Σ |p_i - q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn check_grid_in_box(grid: &GridGraph, bins: &BinBox) -> Result<(), AnalysisError> {
    if grid.dimension() != bins.lower.len() {
        return Err(AnalysisError::GeometryMismatch(format!(
            "grid dimension {} vs oracle dimension {}",
            grid.dimension(),
            bins.lower.len()
        )));
    }
    for v in 0..grid.len() {
        let x = grid.position(v);
        if x
            .iter()
            .zip(bins.lower.iter().zip(&bins.upper))
            .any(|(c, (a, b))| c < a || c > b)
        {
            return Err(AnalysisError::GeometryMismatch(format!(
                "vertex {v} at {x:?} lies outside the oracle box"
            )));
        }
    }
    Ok(())
}

/// Vertices (with weights) representing the walk's law at time `t`.
///
/// The discrete-time chain is periodic on bipartite grids, so its marginal
/// averages the two steps `⌊t 2^{2k}⌋` and `⌊t 2^{2k}⌋ + 1` that bracket `t`.
fn marginal_draw(
    grid: &GridGraph,
    discipline: Discipline,
    start: usize,
    t: f64,
    rng: &mut RandomSource,
) -> Result<[(usize, f64); 2], WalkError> {
    let mut v = start;
    match discipline {
        Discipline::DiscreteTime => {
            let j = (t * (2.0 * grid.level() as f64).exp2()).floor() as usize;
            for _ in 0..j {
                v = walk::step_discrete(grid, v, rng)?;
            }
            let next = walk::step_discrete(grid, v, rng)?;
            Ok([(v, 0.5), (next, 0.5)])
        }
        Discipline::ExponentialHolding => {
            let holding = holding_distribution(grid.level());
            let mut clock = holding.sample(rng);
            while clock <= t {
                v = walk::step_discrete(grid, v, rng)?;
                clock += holding.sample(rng);
            }
            Ok([(v, 1.0), (v, 0.0)])
        }
    }
}

/// Normalized histogram of the walk's position at time `t` over `cfg.replicas` replicas.
pub fn empirical_marginal(
    grid: &GridGraph,
    cfg: &WalkConfig,
    t: f64,
    bins: &BinBox,
) -> Result<Vec<f64>, AnalysisError> {
    cfg.validate()?;
    if !(t > 0.0) {
        return Err(AnalysisError::NonPositiveTime(t));
    }
    if bins.bins == 0 {
        return Err(AnalysisError::InvalidBins);
    }
    check_grid_in_box(grid, bins)?;
    let sampler = match cfg.start {
        StartMode::Stationary => Some(StationarySampler::new(grid)?),
        StartMode::FixedVertex(_) => None,
    };
    let draws = run_replicas(cfg.seed, cfg.replicas, |_, rng| {
        let start = walk::start_vertex(grid, cfg.start, sampler.as_ref(), rng)?;
        marginal_draw(grid, cfg.discipline, start, t, rng)
    });
    let h = grid.spacing();
    let mut hist = vec![0.0; bins.total_bins()];
    for draw in draws {
        for (v, w) in draw? {
            if w > 0.0 {
                bins.deposit(&mut hist, &grid.position(v), h, w);
            }
        }
    }
    let total: f64 = hist.iter().sum();
    for m in &mut hist {
        *m /= total;
    }
    Ok(hist)
}

/// Histogram of the normalized measure `m_k`, spread over lattice cells.
pub fn stationary_pushforward(grid: &GridGraph, bins: &BinBox) -> Result<Vec<f64>, AnalysisError> {
    check_grid_in_box(grid, bins)?;
    let mut hist = vec![0.0; bins.total_bins()];
    let total = grid::total_measure(grid);
    for (v, m) in grid.measure().iter().enumerate() {
        bins.deposit(&mut hist, &grid.position(v), grid.spacing(), m / total);
    }
    Ok(hist)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarginalComparison {
    pub level: u32,
    pub time: f64,
    pub replicas: usize,
    pub bins: usize,
    pub start: Vec<f64>,
    pub empirical: Vec<f64>,
    pub oracle: Vec<f64>,
    pub total_variation: f64,
    pub walk: WalkConfig,
    pub grid_fingerprint: String,
    pub assumptions: Vec<String>,
}

impl MarginalComparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,empirical,oracle\n");
        for (i, (e, o)) in self.empirical.iter().zip(&self.oracle).enumerate() {
            out.push_str(&format!("{i},{e},{o}\n"));
        }
        out
    }
}

/// Compare the walk's law at time `t`, from a fixed start, with the reflecting
/// Brownian motion kernel on the oracle box.
pub fn marginal_test(
    grid: &GridGraph,
    cfg: &WalkConfig,
    oracle: &HeatKernelOracle,
    t: f64,
    bins: usize,
) -> Result<MarginalComparison, AnalysisError> {
    let StartMode::FixedVertex(start) = cfg.start else {
        return Err(AnalysisError::WrongStart("fixed-vertex"));
    };
    if start >= grid.len() {
        return Err(WalkError::UnknownVertex(start).into());
    }
    let binbox = BinBox::of_oracle(oracle, bins);
    let x0 = grid.position(start);
    let oracle_masses = oracle.bin_masses(t, &x0, bins)?;
    let empirical = empirical_marginal(grid, cfg, t, &binbox)?;
    Ok(MarginalComparison {
        level: grid.level(),
        time: t,
        replicas: cfg.replicas,
        bins,
        start: x0,
        total_variation: total_variation(&empirical, &oracle_masses),
        empirical,
        oracle: oracle_masses,
        walk: cfg.clone(),
        grid_fingerprint: grid.fingerprint(),
        assumptions: vec!["boundary of the domain has zero Lebesgue measure".into()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OccupationReport {
    pub level: u32,
    pub steps_per_replica: usize,
    pub replicas: usize,
    pub frequencies: Vec<f64>,
    pub expected: Vec<f64>,
    pub total_variation: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    /// Largest `|C(x→y) - C(y→x)| / sqrt(C(x→y) + C(y→x))` over edges.
    pub max_transition_z: f64,
    /// Edges whose asymmetry exceeds three standard errors.
    pub asymmetric_edges: usize,
    pub walk: WalkConfig,
    pub grid_fingerprint: String,
}

impl OccupationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,frequency,expected\n");
        for (i, (f, e)) in self.frequencies.iter().zip(&self.expected).enumerate() {
            out.push_str(&format!("{i},{f},{e}\n"));
        }
        out
    }
}

/// Long-run visit frequencies and ordered transition counts of the
/// discrete-time chain from a stationary start.
pub fn occupation_test(grid: &GridGraph, cfg: &WalkConfig) -> Result<OccupationReport, AnalysisError> {
    cfg.validate()?;
    if cfg.start != StartMode::Stationary {
        return Err(AnalysisError::WrongStart("stationary"));
    }
    let sampler = StationarySampler::new(grid)?;
    let steps = discrete_steps(grid.level(), cfg.horizon);
    let n = grid.len();
    // Transition counts indexed by CSR slot of the (from, to) pair.
    let slot_of = |x: usize, y: usize| -> usize {
        let base: usize = (0..x).map(|i| grid.degree(i)).sum();
        base + grid.neighbors(x).iter().position(|&z| z == y).expect("adjacent")
    };
    let mut slot_base = vec![0usize; n + 1];
    for x in 0..n {
        slot_base[x + 1] = slot_base[x] + grid.degree(x);
    }
    let per_replica = run_replicas(cfg.seed, cfg.replicas, |_, rng| -> Result<_, WalkError> {
        let mut visits = vec![0u64; n];
        let mut moves = vec![0u64; slot_base[n]];
        let mut v = sampler.sample(rng);
        for _ in 0..steps {
            visits[v] += 1;
            let nb = grid.neighbors(v);
            if nb.is_empty() {
                return Err(WalkError::IsolatedVertex(v));
            }
            let pick = rand::Rng::random_range(rng, 0..nb.len());
            moves[slot_base[v] + pick] += 1;
            v = nb[pick];
        }
        Ok((visits, moves))
    });
    let mut visits = vec![0u64; n];
    let mut moves = vec![0u64; slot_base[n]];
    for r in per_replica {
        let (vi, mo) = r?;
        visits.iter_mut().zip(vi).for_each(|(a, b)| *a += b);
        moves.iter_mut().zip(mo).for_each(|(a, b)| *a += b);
    }
    let total = visits.iter().sum::<u64>() as f64;
    let frequencies: Vec<f64> = visits.iter().map(|&c| c as f64 / total).collect();
    let mass = grid::total_measure(grid);
    let expected: Vec<f64> = grid.measure().iter().map(|m| m / mass).collect();
    let chi_square = visits
        .iter()
        .zip(&expected)
        .map(|(&c, &p)| {
            let e = p * total;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let mut max_z: f64 = 0.0;
    let mut asymmetric = 0;
    for (x, y) in grid.edges() {
        let (a, b) = (moves[slot_of(x, y)] as f64, moves[slot_of(y, x)] as f64);
        if a + b > 0.0 {
            let z = (a - b).abs() / (a + b).sqrt();
            max_z = max_z.max(z);
            if z > 3.0 {
                asymmetric += 1;
            }
        }
    }
    Ok(OccupationReport {
        level: grid.level(),
        steps_per_replica: steps,
        replicas: cfg.replicas,
        total_variation: total_variation(&frequencies, &expected),
        frequencies,
        expected,
        chi_square,
        degrees_of_freedom: n.saturating_sub(1),
        max_transition_z: max_z,
        asymmetric_edges: asymmetric,
        walk: cfg.clone(),
        grid_fingerprint: grid.fingerprint(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreviceReport {
    pub level: u32,
    pub c1: f64,
    pub cube_vertices: usize,
    pub edge_vertices: usize,
    pub cube_channel_vertices: usize,
    pub edge_channel_vertices: usize,
    /// Fraction of normalized `m_k` mass on channel vertices.
    pub cube_channel_mass: f64,
    pub edge_channel_mass: f64,
    pub cube_grid_fingerprint: String,
    pub edge_grid_fingerprint: String,
}

fn channel_stats(spec: &DomainSpec, g: &GridGraph) -> (usize, f64) {
    let mass = grid::total_measure(g);
    let mut count = 0;
    let mut inside = 0.0;
    for v in 0..g.len() {
        if spec.in_crevice(&g.position(v)) {
            count += 1;
            inside += g.measure()[v];
        }
    }
    (count, if mass > 0.0 { inside / mass } else { 0.0 })
}

/// How far each grid construction reaches into the domain's marked channels.
pub fn crevice_penetration(spec: &DomainSpec, k: u32, c1: f64) -> Result<CreviceReport, AnalysisError> {
    let cube = grid::build_cube_complex(spec, k, c1)?;
    let edge = grid::build_edge_graph(spec, k)?;
    let (cube_channel_vertices, cube_channel_mass) = channel_stats(spec, &cube);
    let (edge_channel_vertices, edge_channel_mass) = channel_stats(spec, &edge);
    Ok(CreviceReport {
        level: k,
        c1,
        cube_vertices: cube.len(),
        edge_vertices: edge.len(),
        cube_channel_vertices,
        edge_channel_vertices,
        cube_channel_mass,
        edge_channel_mass,
        cube_grid_fingerprint: cube.fingerprint(),
        edge_grid_fingerprint: edge.fingerprint(),
    })
}

/// Survival `P(τ > t)` of Brownian motion with generator `(1/(2d))Δ`, started
/// at the center of a box with the given half-widths.
pub fn box_exit_survival(half_widths: &[f64], d: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let diffusivity = 1.0 / (2.0 * d as f64);
    half_widths
        .iter()
        .map(|&a| {
            let l = 2.0 * a;
            let rate = diffusivity * PI * PI * t / (l * l);
            // odd n up to where e^{-rate n²} is negligible
            let n_max = ((40.0 / rate).sqrt().ceil() as usize).clamp(1, 1_000_000);
            let mut sum = 0.0;
            let mut n = 1;
            while n <= n_max {
                let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                sum += sign * 4.0 / (n as f64 * PI) * (-rate * (n * n) as f64).exp();
                n += 2;
            }
            sum.clamp(0.0, 1.0)
        })
        .product()
}

/// Mean exit time from the box center, by the eigenfunction expansion
/// `Σ Π c_{n_i} / Σ λ_{n_i}` over odd multi-indices.
pub fn box_exit_mean(half_widths: &[f64], d: usize) -> f64 {
    let diffusivity = 1.0 / (2.0 * d as f64);
    let terms = match half_widths.len() {
        1 => 20_001,
        2 => 401,
        _ => 61,
    };
    let coeffs: Vec<(f64, Vec<f64>)> = (0..terms)
        .step_by(2)
        .map(|m| {
            let n = m + 1;
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign * 4.0 / (n as f64 * PI);
            let lambdas = half_widths
                .iter()
                .map(|&a| diffusivity * (n as f64 * PI / (2.0 * a)).powi(2))
                .collect();
            (c, lambdas)
        })
        .collect();
    let dims = half_widths.len();
    let mut idx = vec![0usize; dims];
    let mut total = 0.0;
    loop {
        let mut c = 1.0;
        let mut lambda = 0.0;
        for (axis, &i) in idx.iter().enumerate() {
            c *= coeffs[i].0;
            lambda += coeffs[i].1[axis];
        }
        total += c / lambda;
        let mut axis = 0;
        loop {
            if axis == dims {
                return total;
            }
            idx[axis] += 1;
            if idx[axis] < coeffs.len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SubBox {
    pub fn centered(center: &[f64], half_width: f64) -> Self {
        Self {
            lower: center.iter().map(|c| c - half_width).collect(),
            upper: center.iter().map(|c| c + half_width).collect(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (b - a)).collect()
    }

    fn contains_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(c, (a, b))| c > a && c < b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExitTimeReport {
    pub level: u32,
    pub replicas: usize,
    pub sub_box: SubBox,
    pub start: Vec<f64>,
    pub empirical_mean: f64,
    pub oracle_mean: f64,
    pub relative_error: f64,
    pub ks_distance: f64,
    pub walk: WalkConfig,
    pub grid_fingerprint: String,
}

/// Lattice sites of the closed box must be vertices, and sites strictly
/// inside must have full degree, so that the walk is free until it exits.
fn check_sub_box(grid: &GridGraph, sub: &SubBox) -> Result<(), AnalysisError> {
    let d = grid.dimension();
    if sub.lower.len() != d || sub.upper.len() != d {
        return Err(AnalysisError::GeometryMismatch("sub-box dimension".into()));
    }
    let scale = grid.spacing().recip();
    let lo: Vec<i64> = sub.lower.iter().map(|x| (x * scale).ceil() as i64).collect();
    let hi: Vec<i64> = sub.upper.iter().map(|x| (x * scale).floor() as i64).collect();
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return Err(AnalysisError::SubBoxNotInterior("box holds no lattice site".into()));
    }
    let mut site = lo.clone();
    loop {
        let Some(v) = grid.vertex_id(&site) else {
            return Err(AnalysisError::SubBoxNotInterior(format!("{site:?} is not a vertex")));
        };
        let pos = grid.position(v);
        if sub.contains_open(&pos) && grid.degree(v) != 2 * d {
            return Err(AnalysisError::SubBoxNotInterior(format!(
                "{site:?} touches the grid boundary"
            )));
        }
        let mut axis = 0;
        loop {
            if axis == d {
                return Ok(());
            }
            site[axis] += 1;
            if site[axis] <= hi[axis] {
                break;
            }
            site[axis] = lo[axis];
            axis += 1;
        }
    }
}

/// Number of steps until the walk from `start` first leaves the open box.
pub fn exit_steps(
    grid: &GridGraph,
    sub: &SubBox,
    start: usize,
    rng: &mut RandomSource,
) -> Result<u64, WalkError> {
    let h = grid.spacing();
    let inside = |v: usize| {
        grid.vertex(v)
            .iter()
            .zip(sub.lower.iter().zip(&sub.upper))
            .all(|(&i, (a, b))| (i as f64 * h) > *a && (i as f64 * h) < *b)
    };
    let mut v = start;
    let mut steps = 0u64;
    loop {
        v = walk::step_discrete(grid, v, rng)?;
        steps += 1;
        if !inside(v) {
            return Ok(steps);
        }
    }
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < samples.len() {
        let mut j = i;
        while j < samples.len() && samples[j] == samples[i] {
            j += 1;
        }
        let f = cdf(samples[i]);
        worst = worst.max((i as f64 / n - f).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    worst
}

/// First exit time of the discrete-time walk from a sub-box, started at its
/// center, against the Brownian exit law for `(1/(2d))Δ`.
pub fn exit_time_test(
    grid: &GridGraph,
    cfg: &WalkConfig,
    sub: &SubBox,
) -> Result<ExitTimeReport, AnalysisError> {
    cfg.validate()?;
    check_sub_box(grid, sub)?;
    let center = sub.center();
    let start = grid.nearest_vertex(&center).ok_or(AnalysisError::StartNotInside)?;
    let start_pos = grid.position(start);
    if !sub.contains_open(&start_pos) {
        return Err(AnalysisError::StartNotInside);
    }
    let d = grid.dimension();
    let dt = (-2.0 * grid.level() as f64).exp2();
    let steps = run_replicas(cfg.seed, cfg.replicas, |_, rng| exit_steps(grid, sub, start, rng));
    let mut times = steps
        .into_iter()
        .map(|s| s.map(|n| n as f64 * dt))
        .collect::<Result<Vec<f64>, _>>()?;
    let empirical_mean = times.iter().sum::<f64>() / times.len() as f64;
    let half = sub.half_widths();
    let oracle_mean = box_exit_mean(&half, d);
    let ks = ks_distance(&mut times, |t| 1.0 - box_exit_survival(&half, d, t));
    Ok(ExitTimeReport {
        level: grid.level(),
        replicas: cfg.replicas,
        sub_box: sub.clone(),
        start: start_pos,
        empirical_mean,
        oracle_mean,
        relative_error: empirical_mean / oracle_mean - 1.0,
        ks_distance: ks,
        walk: cfg.clone(),
        grid_fingerprint: grid.fingerprint(),
    })
}
