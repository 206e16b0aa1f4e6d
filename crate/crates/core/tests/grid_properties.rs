use proptest::prelude::*;
use rbm_lattice::domain::{make_builtin_domain, BuiltinDomain, CombDomainParams, DomainSpec};
use rbm_lattice::grid::{self, build_cube_complex, build_edge_graph, CubeIndex, GridGraph, GridTag};

fn connected(g: &GridGraph) -> bool {
    if g.is_empty() {
        return true;
    }
    let mut seen = vec![false; g.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in g.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn check_invariants(spec: &DomainSpec, g: &GridGraph) {
    let d = g.dimension();
    assert!(connected(g), "grid is connected");
    let cell = g.spacing().powi(d as i32) / (2.0 * d as f64);
    for v in 0..g.len() {
        let deg = g.degree(v);
        assert!(deg >= 1 && deg <= 2 * d);
        assert!((g.measure()[v] - deg as f64 * cell).abs() < 1e-15);
        for &w in g.neighbors(v) {
            assert!(g.neighbors(w).contains(&v), "adjacency is symmetric");
            let steps: i64 = g
                .vertex(v)
                .iter()
                .zip(g.vertex(w))
                .map(|(a, b)| (a - b).abs())
                .sum();
            assert_eq!(steps, 1);
            assert!(spec.segment_inside(&g.position(v), &g.position(w)), "edges lie in D");
        }
    }
    if g.tag() == GridTag::CubeBased {
        let c1 = g.c1().unwrap();
        for cube in g.cubes() {
            assert!(spec.cube_clearance(cube, g.level()) > c1 * g.spacing());
        }
    }
}

fn rectangle(lower: Vec<f64>, upper: Vec<f64>) -> DomainSpec {
    make_builtin_domain(&BuiltinDomain::Rectangle { lower, upper }, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rectangle_grids_satisfy_invariants(
        x0 in -1.0f64..0.0, y0 in -1.0f64..0.0,
        w in 0.3f64..1.5, h in 0.3f64..1.5,
        k in 2u32..6, c1 in 0.05f64..0.95,
    ) {
        let spec = rectangle(vec![x0, y0], vec![x0 + w, y0 + h]);
        let g = build_cube_complex(&spec, k, c1).unwrap();
        check_invariants(&spec, &g);
        let e = build_edge_graph(&spec, k).unwrap();
        check_invariants(&spec, &e);
    }

    #[test]
    fn disk_grids_satisfy_invariants(r in 0.4f64..1.2, k in 2u32..6, c1 in 0.05f64..0.95) {
        let spec = make_builtin_domain(
            &BuiltinDomain::Disk { center: vec![0.1, -0.2], radius: r },
            None,
        ).unwrap();
        let g = build_cube_complex(&spec, k, c1).unwrap();
        check_invariants(&spec, &g);
    }

    #[test]
    fn construction_is_deterministic(k in 2u32..6, c1 in 0.1f64..0.9) {
        let spec = make_builtin_domain(&BuiltinDomain::SlitDisk, None).unwrap();
        let a = build_cube_complex(&spec, k, c1).unwrap();
        let b = build_cube_complex(&spec, k, c1).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        check_invariants(&spec, &a);
        let round = GridGraph::from_export(&a.to_export()).unwrap();
        prop_assert_eq!(round.fingerprint(), a.fingerprint());
    }

    #[test]
    fn larger_c1_gives_fewer_cubes(k in 3u32..6, a in 0.05f64..0.5, b in 0.5f64..0.95) {
        let spec = make_builtin_domain(&BuiltinDomain::KochPrefractal { level: 2 }, None).unwrap();
        let loose = build_cube_complex(&spec, k, a).unwrap();
        let tight = build_cube_complex(&spec, k, b).unwrap();
        prop_assert!(tight.cubes().len() <= loose.cubes().len());
        for cube in tight.cubes() {
            prop_assert!(loose.cubes().contains(cube));
        }
    }

    #[test]
    fn clearance_shrinks_with_the_box(i in 0i64..14, j in 0i64..14) {
        // a level-4 cube is contained in its level-3 parent
        let spec = make_builtin_domain(&BuiltinDomain::KochPrefractal { level: 3 }, None).unwrap();
        let child = spec.cube_clearance(&CubeIndex(vec![i, j]), 4);
        let parent = spec.cube_clearance(&CubeIndex(vec![i / 2, j / 2]), 3);
        prop_assert!(parent <= child + 1e-15);
    }

    #[test]
    fn positive_clearance_cubes_lie_inside(
        i in -8i64..8, j in 0i64..8, u in 0.0f64..1.0, v in 0.0f64..1.0,
    ) {
        let spec = make_builtin_domain(
            &BuiltinDomain::comb(CombDomainParams::geometric(4.0, 3)),
            None,
        ).unwrap();
        let cube = CubeIndex(vec![i, j]);
        let c = spec.cube_clearance(&cube, 3);
        if c > 0.0 {
            let (lo, hi) = cube.bounds(3);
            let p = [lo[0] + u * (hi[0] - lo[0]), lo[1] + v * (hi[1] - lo[1])];
            prop_assert!(spec.contains_point(&p).unwrap());
        }
    }
}

#[test]
fn comb_cubes_never_meet_thin_channels() {
    let params = CombDomainParams::geometric(4.0, 3);
    let spec = make_builtin_domain(&BuiltinDomain::comb(params.clone()), None).unwrap();
    for k in 3..=6 {
        let c1 = 0.5;
        let h = grid::spacing(k);
        if !params.channels().all(|(_, w)| h * (1.0 + c1) > w) {
            continue;
        }
        let g = build_cube_complex(&spec, k, c1).unwrap();
        check_invariants(&spec, &g);
        for cube in g.cubes() {
            let (lo, hi) = cube.bounds(k);
            for (n, w) in params.channels() {
                let a = 1.0 / n as f64;
                assert!(!(lo[0] < a && hi[0] > -a && lo[1] < a + w && hi[1] > a));
            }
        }
    }
}

#[test]
fn edge_graph_strictly_contains_cube_grid_with_lattice_wide_channel() {
    let k = 4;
    let spec = make_builtin_domain(
        &BuiltinDomain::comb(CombDomainParams::uniform(grid::spacing(k), 3)),
        None,
    )
    .unwrap();
    let cube = build_cube_complex(&spec, k, 0.5).unwrap();
    let edge = build_edge_graph(&spec, k).unwrap();
    check_invariants(&spec, &edge);
    for v in 0..cube.len() {
        assert!(edge.vertex_id(cube.vertex(v)).is_some());
    }
    assert!(edge.len() > cube.len());
    assert!((0..edge.len()).any(|v| spec.in_crevice(&edge.position(v))));
}

#[test]
fn measure_of_square_grid_approaches_area() {
    let spec = rectangle(vec![0.0, 0.0], vec![1.0, 1.0]);
    let masses: Vec<f64> = (2..=7)
        .map(|k| grid::total_measure(&build_cube_complex(&spec, k, 0.5).unwrap()))
        .collect();
    assert!(masses.windows(2).all(|w| w[1] > w[0]));
    assert!(masses[5] > 0.95 && masses[5] < 1.0);
}
