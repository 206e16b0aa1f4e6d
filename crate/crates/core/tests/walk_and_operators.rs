use proptest::prelude::*;
use rand::Rng;
use rbm_lattice::domain::{make_builtin_domain, BuiltinDomain};
use rbm_lattice::grid::{build_cube_complex, GridFunction, GridGraph};
use rbm_lattice::operators::{self, TransitionOperator};
use rbm_lattice::walk::{
    reverse_path, simulate_continuous, simulate_discrete, Discipline, Interpolation, StartMode,
    WalkConfig,
};
use rbm_lattice::RandomSource;

fn slit_grid(k: u32) -> GridGraph {
    let spec = make_builtin_domain(&BuiltinDomain::SlitDisk, None).unwrap();
    build_cube_complex(&spec, k, 0.5).unwrap()
}

fn config(seed: u64, discipline: Discipline) -> WalkConfig {
    WalkConfig {
        horizon: 0.5,
        replicas: 1,
        seed,
        discipline,
        start: StartMode::Stationary,
    }
}

fn random_values(n: usize, rng: &mut RandomSource) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn discrete_paths_move_along_edges(seed in any::<u64>(), k in 2u32..5) {
        let g = slit_grid(k);
        let mut rng = RandomSource::new(seed, 0);
        let p = simulate_discrete(&g, &config(seed, Discipline::DiscreteTime), &mut rng).unwrap();
        for w in p.vertices().windows(2) {
            prop_assert!(g.neighbors(w[0]).contains(&w[1]));
        }
        let dt = (-2.0 * k as f64).exp2();
        for (i, t) in p.times().iter().enumerate() {
            prop_assert!((t - i as f64 * dt).abs() < 1e-12 || i == p.len() - 1);
        }
    }

    #[test]
    fn continuous_paths_move_along_edges(seed in any::<u64>()) {
        let g = slit_grid(3);
        let mut rng = RandomSource::new(seed, 1);
        let p = simulate_continuous(&g, &config(seed, Discipline::ExponentialHolding), &mut rng).unwrap();
        prop_assert_eq!(p.interpolation(), Interpolation::Jump);
        for w in p.vertices().windows(2) {
            prop_assert!(g.neighbors(w[0]).contains(&w[1]));
        }
        prop_assert!(p.times().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn same_seed_same_path(seed in any::<u64>()) {
        let g = slit_grid(3);
        let cfg = config(seed, Discipline::DiscreteTime);
        let a = simulate_discrete(&g, &cfg, &mut RandomSource::new(seed, 4)).unwrap();
        let b = simulate_discrete(&g, &cfg, &mut RandomSource::new(seed, 4)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reversal_twice_restores_jump_paths(seed in any::<u64>(), frac in 0.05f64..0.95) {
        let g = slit_grid(3);
        let cfg = config(seed, Discipline::ExponentialHolding);
        let p = simulate_continuous(&g, &cfg, &mut RandomSource::new(seed, 2)).unwrap();
        let t = frac * cfg.horizon;
        let once = reverse_path(&p, t).unwrap();
        let twice = reverse_path(&once, t).unwrap();
        // r_t r_t ω = ω on [0, t) away from jump times
        for i in 0..50 {
            let s = t * (i as f64 + 0.37) / 50.0;
            if p.times().iter().any(|&u| (u - s).abs() < 1e-9) {
                continue;
            }
            prop_assert_eq!(twice.vertex_at(s), p.vertex_at(s));
        }
    }

    #[test]
    fn q_is_self_adjoint_and_markov(seed in any::<u64>(), k in 2u32..5) {
        let g = slit_grid(k);
        let mut rng = RandomSource::new(seed, 0);
        let f = GridFunction::new(&g, random_values(g.len(), &mut rng)).unwrap();
        let h = GridFunction::new(&g, random_values(g.len(), &mut rng)).unwrap();
        let qf = operators::apply_q(&g, &f).unwrap();
        let qh = operators::apply_q(&g, &h).unwrap();
        let lhs = operators::inner_product(&g, &qf, &h).unwrap();
        let rhs = operators::inner_product(&g, &f, &qh).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        let one = GridFunction::constant(&g, 1.0);
        let q1 = TransitionOperator::new(&g).apply(&one).unwrap();
        prop_assert!(q1.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
        // the generator has m-mean zero
        let lf = operators::apply_generator(&g, &f).unwrap();
        prop_assert!(operators::inner_product(&g, &lf, &one).unwrap().abs() < 1e-12);
    }

    #[test]
    fn energies_are_nonnegative_and_consistent(seed in any::<u64>(), k in 2u32..5) {
        let g = slit_grid(k);
        let mut rng = RandomSource::new(seed, 9);
        let f = GridFunction::new(&g, random_values(g.len(), &mut rng)).unwrap();
        let e = operators::dirichlet_form(&g, &f).unwrap();
        let q = operators::quadratic_form(&g, &f).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!((e - q).abs() <= 1e-10 * e.max(1.0));
        // d = 2: energySum = 2d · E^k
        let s = operators::energy_sum(&g, &f).unwrap();
        prop_assert!((s - 4.0 * e).abs() <= 1e-10 * s.max(1.0));
    }
}
