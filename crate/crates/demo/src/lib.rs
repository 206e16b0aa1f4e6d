//! Browser bindings: build grids, sample walk paths, and compare an interval
//! marginal with the Neumann heat kernel. Every export returns a JSON string.

use rbm_lattice::analysis::{self, HeatKernelOracle};
use rbm_lattice::domain::{make_builtin_domain, BuiltinDomain, DomainSpec};
use rbm_lattice::grid::{build_cube_complex, build_edge_graph, GridGraph, GridTag};
use rbm_lattice::walk::{simulate_continuous, simulate_discrete, Discipline, StartMode, WalkConfig};
use rbm_lattice::RandomSource;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest grid the page will draw.
pub const MAX_VERTICES: usize = 200_000;

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GridView {
    pub tag: GridTag,
    pub level: u32,
    pub spacing: f64,
    pub positions: Vec<Vec<f64>>,
    pub edges: Vec<[usize; 2]>,
    pub in_channel: Vec<bool>,
    pub channel_vertices: usize,
    pub bounding_box: (Vec<f64>, Vec<f64>),
    pub base_point: Vec<f64>,
    pub fingerprint: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathView {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MarginalView {
    pub bins: usize,
    pub empirical: Vec<f64>,
    pub oracle: Vec<f64>,
    pub total_variation: f64,
    pub oracle_terms: usize,
}

fn domain(domain_json: &str) -> Result<DomainSpec, String> {
    let builtin: BuiltinDomain = serde_json::from_str(domain_json).map_err(|e| e.to_string())?;
    make_builtin_domain(&builtin, None).map_err(|e| e.to_string())
}

fn grid(spec: &DomainSpec, k: u32, c1: f64, tag: &str) -> Result<GridGraph, String> {
    let g = match tag {
        "cubeBased" => build_cube_complex(spec, k, c1),
        "edgeBased" => build_edge_graph(spec, k),
        other => return Err(format!("unknown grid tag {other}")),
    }
    .map_err(|e| e.to_string())?;
    if g.len() > MAX_VERTICES {
        return Err(format!("{} vertices is too many to draw", g.len()));
    }
    Ok(g)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Grid for a catalog domain given as JSON, e.g. `{"name": "comb", "widthBase": 4}`.
pub fn grid_view(domain_json: &str, k: u32, c1: f64, tag: &str) -> Result<String, String> {
    let spec = domain(domain_json)?;
    let g = grid(&spec, k, c1, tag)?;
    let positions: Vec<Vec<f64>> = (0..g.len()).map(|v| g.position(v)).collect();
    let in_channel: Vec<bool> = positions.iter().map(|p| spec.in_crevice(p)).collect();
    to_json(&GridView {
        tag: g.tag(),
        level: g.level(),
        spacing: g.spacing(),
        edges: g.edges().map(|(a, b)| [a, b]).collect(),
        channel_vertices: in_channel.iter().filter(|&&c| c).count(),
        in_channel,
        positions,
        bounding_box: spec.bounding_box(),
        base_point: spec.base_point().to_vec(),
        fingerprint: g.fingerprint(),
    })
}

/// `count` walk paths on `[0, horizon]` from the stationary law.
#[allow(clippy::too_many_arguments)]
pub fn paths_view(
    domain_json: &str,
    k: u32,
    c1: f64,
    tag: &str,
    horizon: f64,
    count: usize,
    seed: u64,
    continuous: bool,
) -> Result<String, String> {
    let spec = domain(domain_json)?;
    let g = grid(&spec, k, c1, tag)?;
    let cfg = WalkConfig {
        horizon,
        replicas: count,
        seed,
        discipline: if continuous {
            Discipline::ExponentialHolding
        } else {
            Discipline::DiscreteTime
        },
        start: StartMode::Stationary,
    };
    let paths = (0..count)
        .map(|r| {
            let mut rng = RandomSource::new(seed, r as u64);
            let p = if continuous {
                simulate_continuous(&g, &cfg, &mut rng)
            } else {
                simulate_discrete(&g, &cfg, &mut rng)
            }
            .map_err(|e| e.to_string())?;
            Ok(PathView {
                times: p.times().to_vec(),
                positions: p.vertices().iter().map(|&v| g.position(v)).collect(),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&paths)
}

/// Walk on the unit interval from 1/2 against the reflecting Brownian kernel at time `t`.
pub fn marginal_view(
    k: u32,
    t: f64,
    replicas: usize,
    bins: usize,
    seed: u64,
    continuous: bool,
) -> Result<String, String> {
    let spec = domain(r#"{"name": "rectangle", "lower": [0], "upper": [1]}"#)?;
    let g = grid(&spec, k, 0.5, "cubeBased")?;
    let start = g.nearest_vertex(&[0.5]).ok_or("grid misses the midpoint")?;
    let cfg = WalkConfig {
        horizon: t,
        replicas,
        seed,
        discipline: if continuous {
            Discipline::ExponentialHolding
        } else {
            Discipline::DiscreteTime
        },
        start: StartMode::FixedVertex(start),
    };
    let oracle = HeatKernelOracle::for_time(vec![0.0], vec![1.0], t).map_err(|e| e.to_string())?;
    let r = analysis::marginal_test(&g, &cfg, &oracle, t, bins).map_err(|e| e.to_string())?;
    to_json(&MarginalView {
        bins,
        empirical: r.empirical,
        oracle: r.oracle,
        total_variation: r.total_variation,
        oracle_terms: oracle.terms(),
    })
}

#[wasm_bindgen(js_name = buildGrid)]
pub fn build_grid(domain_json: &str, k: u32, c1: f64, tag: &str) -> Result<String, JsValue> {
    grid_view(domain_json, k, c1, tag).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = samplePaths)]
#[allow(clippy::too_many_arguments)]
pub fn sample_paths(
    domain_json: &str,
    k: u32,
    c1: f64,
    tag: &str,
    horizon: f64,
    count: usize,
    seed: u64,
    continuous: bool,
) -> Result<String, JsValue> {
    paths_view(domain_json, k, c1, tag, horizon, count, seed, continuous)
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = intervalMarginal)]
pub fn interval_marginal(
    k: u32,
    t: f64,
    replicas: usize,
    bins: usize,
    seed: u64,
    continuous: bool,
) -> Result<String, JsValue> {
    marginal_view(k, t, replicas, bins, seed, continuous).map_err(|e| JsValue::from_str(&e))
}
