//! Transition operator, generator and discrete energies on a grid.
//!
//! With `m_k(x) = v_k(x) 2^{-kd}/(2d)` and `Q_k f(x)` the neighbor average,
//!
//! ```text
//! E^k(f, f) = (1/(2d)) Σ_{x~y} 2^{-(d-2)k} (f(x) - f(y))²  =  2^{2k} (f - Q_k f, f)_{m_k}
//! ```
//!
//! where the sum runs over unordered adjacent pairs. The energy sum
//! `2^{k(2-d)} Σ_{x~y} (f(x) - f(y))²` uses the same pairs and equals `2d·E^k`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functions::TestFunction;
use crate::grid::{self, GridError, GridFunction, GridGraph, GridTag};
use crate::quadrature;
use crate::walk::{Interpolation, PathSample};

/// Largest grid for which operator powers are checked densely.
pub const MAX_POWER_CHECK_VERTICES: usize = 2000;

/// Absolute slack allowed in the power-contraction inequalities.
pub const CONTRACTION_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("grid has {vertices} vertices, power checks allow at most {limit}")]
    TooLarge { vertices: usize, limit: usize },
    #[error("contraction chain violated at j = {j}: {lhs} > {rhs}")]
    ContractionViolated { j: usize, lhs: f64, rhs: f64 },
    #[error("path does not belong to this grid: {0}")]
    PathMismatch(String),
    #[error("continuum energy needs a cube-based grid")]
    NotCubeBased,
    #[error("non-finite gradient at {0:?}")]
    NonFiniteGradient(Vec<f64>),
}

/// `Q_k` bound to one grid.
#[derive(Debug, Clone, Copy)]
pub struct TransitionOperator<'a> {
    grid: &'a GridGraph,
}

impl<'a> TransitionOperator<'a> {
    pub fn new(grid: &'a GridGraph) -> Self {
        Self { grid }
    }

    pub fn apply_values(&self, f: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            let nb = self.grid.neighbors(x);
            *o = nb.iter().map(|&y| f[y]).sum::<f64>() / nb.len() as f64;
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction, OperatorError> {
        f.check_grid(self.grid)?;
        let mut out = vec![0.0; self.grid.len()];
        self.apply_values(f.values(), &mut out);
        Ok(GridFunction::new(self.grid, out)?)
    }
}

/// `(Q_k f)(x) = (1/v_k(x)) Σ_{y~x} f(y)`.
pub fn apply_q(grid: &GridGraph, f: &GridFunction) -> Result<GridFunction, OperatorError> {
    TransitionOperator::new(grid).apply(f)
}

/// `L_k f = Q_k f - f`.
pub fn apply_generator(grid: &GridGraph, f: &GridFunction) -> Result<GridFunction, OperatorError> {
    let q = apply_q(grid, f)?;
    let values = q.values().iter().zip(f.values()).map(|(a, b)| a - b).collect();
    Ok(GridFunction::new(grid, values)?)
}

/// `(f, g)_{m_k}`.
pub fn inner_product(grid: &GridGraph, f: &GridFunction, g: &GridFunction) -> Result<f64, OperatorError> {
    f.check_grid(grid)?;
    g.check_grid(grid)?;
    Ok(weighted_dot(grid.measure(), f.values(), g.values()))
}

fn weighted_dot(m: &[f64], a: &[f64], b: &[f64]) -> f64 {
    m.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

fn check_path(grid: &GridGraph, path: &PathSample) -> Result<(), OperatorError> {
    if path.interpolation() == Interpolation::Jump {
        return Err(OperatorError::PathMismatch("expected a discrete-time path".into()));
    }
    let dt = (-2.0 * grid.level() as f64).exp2();
    for (j, &t) in path.times().iter().enumerate() {
        if t != j as f64 * dt {
            return Err(OperatorError::PathMismatch(format!("knot {j} at time {t}")));
        }
    }
    let v = path.vertices();
    if let Some(&bad) = v.iter().find(|&&x| x >= grid.len()) {
        return Err(OperatorError::PathMismatch(format!("vertex {bad} out of range")));
    }
    for w in v.windows(2) {
        if w[0] != w[1] && !grid.neighbors(w[0]).contains(&w[1]) {
            return Err(OperatorError::PathMismatch(format!(
                "{} and {} are not adjacent",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// `M_j = f(Y_j) - f(Y_0) - Σ_{i<j} L_k f(Y_i)` along a discrete-time path.
pub fn compensator(
    grid: &GridGraph,
    path: &PathSample,
    f: &GridFunction,
) -> Result<Vec<f64>, OperatorError> {
    check_path(grid, path)?;
    let lf = apply_generator(grid, f)?;
    let (fv, lv) = (f.values(), lf.values());
    let v = path.vertices();
    let mut out = Vec::with_capacity(v.len());
    let mut drift = 0.0;
    for (j, &x) in v.iter().enumerate() {
        if j > 0 {
            drift += lv[v[j - 1]];
        }
        out.push(fv[x] - fv[v[0]] - drift);
    }
    Ok(out)
}

fn squared_differences(grid: &GridGraph, f: &[f64], g: &[f64]) -> f64 {
    grid.edges()
        .map(|(x, y)| (f[x] - f[y]) * (g[x] - g[y]))
        .sum()
}

/// `2^{k(2-d)} Σ_{x~y} (f(x) - f(y))²` over unordered adjacent pairs.
pub fn energy_sum(grid: &GridGraph, f: &GridFunction) -> Result<f64, OperatorError> {
    f.check_grid(grid)?;
    let scale = ((2.0 - grid.dimension() as f64) * grid.level() as f64).exp2();
    Ok(scale * squared_differences(grid, f.values(), f.values()))
}

/// Polarized form `E^k(f, g)`.
pub fn dirichlet_bilinear(
    grid: &GridGraph,
    f: &GridFunction,
    g: &GridFunction,
) -> Result<f64, OperatorError> {
    f.check_grid(grid)?;
    g.check_grid(grid)?;
    let d = grid.dimension() as f64;
    let scale = ((2.0 - d) * grid.level() as f64).exp2() / (2.0 * d);
    Ok(scale * squared_differences(grid, f.values(), g.values()))
}

/// `E^k(f, f)`.
pub fn dirichlet_form(grid: &GridGraph, f: &GridFunction) -> Result<f64, OperatorError> {
    dirichlet_bilinear(grid, f, f)
}

/// `2^{2k} (f - Q_k f, f)_{m_k}`: the quadratic-form side of the identity.
pub fn quadratic_form(grid: &GridGraph, f: &GridFunction) -> Result<f64, OperatorError> {
    let q = apply_q(grid, f)?;
    let diff: Vec<f64> = f.values().iter().zip(q.values()).map(|(a, b)| a - b).collect();
    let scale = (2.0 * grid.level() as f64).exp2();
    Ok(scale * weighted_dot(grid.measure(), &diff, f.values()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContractionRow {
    pub j: usize,
    /// `(f - Q^{2j} f, f)`
    pub lhs: f64,
    /// `j (f - Q² f, f)`
    pub middle: f64,
    /// `2j (f - Q f, f)`
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContractionReport {
    pub rows: Vec<ContractionRow>,
    /// Smallest of `middle - lhs` and `rhs - middle` over all rows.
    pub min_slack: f64,
}

/// Checks `(f - Q^{2j} f, f) ≤ j (f - Q² f, f) ≤ 2j (f - Q f, f)` for `j = 1..=j_max`.
pub fn power_contraction_check(
    grid: &GridGraph,
    f: &GridFunction,
    j_max: usize,
) -> Result<ContractionReport, OperatorError> {
    f.check_grid(grid)?;
    if grid.len() > MAX_POWER_CHECK_VERTICES {
        return Err(OperatorError::TooLarge {
            vertices: grid.len(),
            limit: MAX_POWER_CHECK_VERTICES,
        });
    }
    let q = TransitionOperator::new(grid);
    let m = grid.measure();
    let fv = f.values();
    let norm = weighted_dot(m, fv, fv);
    let mut power = fv.to_vec();
    let mut scratch = vec![0.0; fv.len()];
    q.apply_values(&power, &mut scratch);
    std::mem::swap(&mut power, &mut scratch);
    let one = norm - weighted_dot(m, &power, fv);
    q.apply_values(&power, &mut scratch);
    std::mem::swap(&mut power, &mut scratch);
    let two = norm - weighted_dot(m, &power, fv);

    let mut rows = Vec::with_capacity(j_max);
    let mut min_slack = f64::INFINITY;
    for j in 1..=j_max {
        if j > 1 {
            for _ in 0..2 {
                q.apply_values(&power, &mut scratch);
                std::mem::swap(&mut power, &mut scratch);
            }
        }
        let row = ContractionRow {
            j,
            lhs: norm - weighted_dot(m, &power, fv),
            middle: j as f64 * two,
            rhs: 2.0 * j as f64 * one,
        };
        for (lo, hi) in [(row.lhs, row.middle), (row.middle, row.rhs)] {
            if hi - lo < -CONTRACTION_SLACK {
                return Err(OperatorError::ContractionViolated { j, lhs: lo, rhs: hi });
            }
            min_slack = min_slack.min(hi - lo);
        }
        rows.push(row);
    }
    Ok(ContractionReport { rows, min_slack })
}

/// `∫_{D_k} |∇φ|²` over the accepted cubes, 3-point Gauss per axis.
pub fn continuum_energy(
    grid: &GridGraph,
    gradient: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<f64, OperatorError> {
    if grid.tag() != GridTag::CubeBased {
        return Err(OperatorError::NotCubeBased);
    }
    let mut bad = None;
    let mut total = 0.0;
    for cube in grid.cubes() {
        let (lo, hi) = cube.bounds(grid.level());
        total += quadrature::integrate_box(&lo, &hi, |x| {
            let g = gradient(x);
            let v: f64 = g.iter().map(|c| c * c).sum();
            if !v.is_finite() && bad.is_none() {
                bad = Some(x.to_vec());
            }
            v
        });
    }
    match bad {
        Some(x) => Err(OperatorError::NonFiniteGradient(x)),
        None => Ok(total),
    }
}

/// One row of the energy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnergyReport {
    pub domain: String,
    pub level: u32,
    pub c1: Option<f64>,
    pub function_id: String,
    pub energy_sum: f64,
    pub dirichlet_form: f64,
    pub continuum_integral: f64,
    /// `energySum / continuumIntegral - 1`, or 0 when both vanish.
    pub rel_error: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str =
        "domain,k,c1,functionId,energySum,dirichletForm,continuumIntegral,relError";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.domain,
            self.level,
            self.c1.map(|c| c.to_string()).unwrap_or_default(),
            self.function_id,
            self.energy_sum,
            self.dirichlet_form,
            self.continuum_integral,
            self.rel_error
        )
    }
}

/// Energies of `π_k φ` next to `∫_{D_k} |∇φ|²`.
pub fn energy_report(
    domain: &str,
    grid: &GridGraph,
    function: TestFunction,
) -> Result<EnergyReport, OperatorError> {
    let f = grid::restrict_to_grid(grid, |x| function.value(x))?;
    let energy_sum = energy_sum(grid, &f)?;
    let dirichlet_form = dirichlet_form(grid, &f)?;
    let continuum_integral = continuum_energy(grid, |x| function.gradient(x))?;
    let rel_error = if continuum_integral == 0.0 {
        if energy_sum == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        energy_sum / continuum_integral - 1.0
    };
    Ok(EnergyReport {
        domain: domain.to_string(),
        level: grid.level(),
        c1: grid.c1(),
        function_id: function.id().to_string(),
        energy_sum,
        dirichlet_form,
        continuum_integral,
        rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_builtin_domain, BuiltinDomain};
    use crate::grid::{build_cube_complex, GridExport};
    use crate::rng::RandomSource;
    use crate::walk::{simulate_discrete, Discipline, StartMode, WalkConfig};
    use rand::Rng;

    fn nine() -> GridGraph {
        let sq = make_builtin_domain(&BuiltinDomain::unit_square(), None).unwrap();
        build_cube_complex(&sq, 2, 0.5).unwrap()
    }

    /// a - b - c at level 1 in d = 1.
    fn three_path() -> GridGraph {
        GridGraph::from_export(&GridExport {
            level: 1,
            c1: None,
            tag: GridTag::EdgeBased,
            vertices: vec![vec![0], vec![1], vec![2]],
            edges: vec![[0, 1], [1, 2]],
            degrees: vec![1, 2, 1],
            measure: vec![0.25, 0.5, 0.25],
        })
        .unwrap()
    }

    fn two_cycle() -> GridGraph {
        GridGraph::from_export(&GridExport {
            level: 1,
            c1: None,
            tag: GridTag::EdgeBased,
            vertices: vec![vec![0], vec![1]],
            edges: vec![[0, 1]],
            degrees: vec![1, 1],
            measure: vec![0.25, 0.25],
        })
        .unwrap()
    }

    fn random_fn(g: &GridGraph, rng: &mut RandomSource) -> GridFunction {
        GridFunction::new(g, (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn q_on_three_vertex_path() {
        let g = three_path();
        let f = GridFunction::new(&g, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(apply_q(&g, &f).unwrap().values(), &[1.0, 1.0, 1.0]);
        assert_eq!(apply_generator(&g, &f).unwrap().values(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn q_is_stochastic_and_symmetric() {
        let g = nine();
        let c = GridFunction::constant(&g, 3.5);
        assert_eq!(apply_q(&g, &c).unwrap().values(), c.values());
        assert!(apply_generator(&g, &c).unwrap().values().iter().all(|&v| v == 0.0));
        let mut rng = RandomSource::new(2, 0);
        for _ in 0..20 {
            let (f, h) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
            let a = inner_product(&g, &apply_q(&g, &f).unwrap(), &h).unwrap();
            let b = inner_product(&g, &f, &apply_q(&g, &h).unwrap()).unwrap();
            assert!((a - b).abs() < 1e-12);
            let lf = apply_generator(&g, &f).unwrap();
            let one = GridFunction::constant(&g, 1.0);
            assert!(inner_product(&g, &lf, &one).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn energy_examples_on_nine_vertex_grid() {
        let g = nine();
        let f = GridFunction::from_fn(&g, |x| x[0]);
        assert!((energy_sum(&g, &f).unwrap() - 0.375).abs() < 1e-15);
        assert!((dirichlet_form(&g, &f).unwrap() - 0.09375).abs() < 1e-15);
        assert!((quadratic_form(&g, &f).unwrap() - 0.09375).abs() < 1e-14);
        let c = GridFunction::constant(&g, 2.0);
        assert_eq!(energy_sum(&g, &c).unwrap(), 0.0);
    }

    #[test]
    fn energy_sum_is_2d_times_dirichlet_form() {
        let g = nine();
        let mut rng = RandomSource::new(6, 0);
        for _ in 0..10 {
            let f = random_fn(&g, &mut rng);
            let e = energy_sum(&g, &f).unwrap();
            let q = dirichlet_form(&g, &f).unwrap();
            assert!((e - 4.0 * q).abs() < 1e-12);
        }
    }

    #[test]
    fn bilinear_form_is_symmetric_and_nonnegative() {
        let g = nine();
        let mut rng = RandomSource::new(7, 0);
        for _ in 0..10 {
            let (f, h) = (random_fn(&g, &mut rng), random_fn(&g, &mut rng));
            let a = dirichlet_bilinear(&g, &f, &h).unwrap();
            let b = dirichlet_bilinear(&g, &h, &f).unwrap();
            assert!((a - b).abs() < 1e-14);
            assert!(dirichlet_form(&g, &f).unwrap() >= 0.0);
        }
    }

    #[test]
    fn two_cycle_flip_eigenvector() {
        let g = two_cycle();
        let f = GridFunction::new(&g, vec![1.0, -1.0]).unwrap();
        let r = power_contraction_check(&g, &f, 5).unwrap();
        // Q f = -f, Q² f = f: lhs = middle = 0, rhs = 2j·2(f,f)
        let norm = 0.5;
        for row in &r.rows {
            assert!(row.lhs.abs() < 1e-15);
            assert!(row.middle.abs() < 1e-15);
            assert!((row.rhs - 2.0 * row.j as f64 * 2.0 * norm).abs() < 1e-14);
        }
    }

    #[test]
    fn contraction_chain_on_random_functions() {
        let g = nine();
        let mut rng = RandomSource::new(8, 0);
        for _ in 0..50 {
            let f = random_fn(&g, &mut rng);
            let r = power_contraction_check(&g, &f, 20).unwrap();
            assert!(r.min_slack >= -CONTRACTION_SLACK);
        }
        let c = GridFunction::constant(&g, 1.0);
        let r = power_contraction_check(&g, &c, 3).unwrap();
        for row in r.rows {
            assert!(row.lhs.abs() < 1e-15 && row.middle.abs() < 1e-15 && row.rhs.abs() < 1e-15);
        }
    }

    #[test]
    fn power_check_rejects_large_grids() {
        let sq = make_builtin_domain(&BuiltinDomain::unit_square(), None).unwrap();
        let g = build_cube_complex(&sq, 6, 0.5).unwrap();
        let f = GridFunction::constant(&g, 1.0);
        assert!(matches!(
            power_contraction_check(&g, &f, 1),
            Err(OperatorError::TooLarge { .. })
        ));
    }

    #[test]
    fn compensator_basics() {
        let g = nine();
        let cfg = WalkConfig {
            horizon: 1.0 / 16.0,
            replicas: 1,
            seed: 0,
            discipline: Discipline::DiscreteTime,
            start: StartMode::FixedVertex(4),
        };
        let p = simulate_discrete(&g, &cfg, &mut RandomSource::new(1, 0)).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0] * x[0] + x[1]);
        let m = compensator(&g, &p, &f).unwrap();
        let qf = apply_q(&g, &f).unwrap();
        let (x0, x1) = (p.vertices()[0], p.vertices()[1]);
        assert_eq!(m[0], 0.0);
        assert!((m[1] - (f.values()[x1] - qf.values()[x0])).abs() < 1e-15);
        let c = GridFunction::constant(&g, 1.0);
        assert!(compensator(&g, &p, &c).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn compensator_rejects_foreign_paths() {
        let g = nine();
        let f = GridFunction::constant(&g, 1.0);
        let jump = PathSample::new(vec![0.0, 0.3], vec![0, 1], Interpolation::Jump, 1.0).unwrap();
        assert!(matches!(compensator(&g, &jump, &f), Err(OperatorError::PathMismatch(_))));
        let teleport =
            PathSample::new(vec![0.0, 1.0 / 16.0], vec![0, 8], Interpolation::Linear, 1.0).unwrap();
        assert!(matches!(compensator(&g, &teleport, &f), Err(OperatorError::PathMismatch(_))));
    }

    #[test]
    fn continuum_energy_examples() {
        let g = nine();
        assert_eq!(continuum_energy(&g, |x| vec![0.0; x.len()]).unwrap(), 0.0);
        let area = continuum_energy(&g, |x| TestFunction::Linear.gradient(x)).unwrap();
        assert!((area - 0.25).abs() < 1e-15);
        assert!(matches!(
            continuum_energy(&g, |_| vec![f64::NAN, 0.0]),
            Err(OperatorError::NonFiniteGradient(_))
        ));
    }
}
