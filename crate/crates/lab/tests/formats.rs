use bloomlab::config::{Experiment, ExperimentConfig};
use bloomlab::experiments::{run, write_output};
use bloomlab::io::{format_grid_function, format_sparse_family, parse_grid_function, parse_sparse_family, read_csv_columns};
use bloomlab_core::dyadic::{carve_greedy_achieved, DyadicCube, DyadicTree};
use bloomlab_core::{Dim, Grid, GridFunction};
use proptest::prelude::*;

fn grid(two: bool, n: usize, corner: f64, side: f64) -> Grid {
    if two {
        Grid::new(Dim::Two, &[corner, -corner], side, n).unwrap()
    } else {
        Grid::new(Dim::One, &[corner], side, n).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_functions_round_trip(
        two in any::<bool>(),
        n in 1usize..12,
        corner in -5.0f64..5.0,
        side in 0.1f64..10.0,
        seed in prop::collection::vec(-1e6f64..1e6, 1..20),
    ) {
        let g = grid(two, n, corner, side);
        let f = GridFunction::new(g, (0..g.len()).map(|i| seed[i % seed.len()] / (i + 1) as f64).collect()).unwrap();
        let back = parse_grid_function(&format_grid_function(&f)).unwrap();
        prop_assert_eq!(back.samples(), f.samples());
        prop_assert_eq!(back.grid().n(), g.n());
        prop_assert_eq!(back.grid().corner(), g.corner());
        prop_assert_eq!(back.grid().side(), g.side());
    }

    #[test]
    fn sparse_families_round_trip(two in any::<bool>(), picks in prop::collection::vec(0usize..85, 1..16)) {
        let g = grid(two, if two { 16 } else { 64 }, 0.0, 1.0);
        let tree = DyadicTree::over_grid(g).unwrap();
        let all = tree.cubes_to_depth(3);
        let mut cubes: Vec<DyadicCube> = picks.iter().map(|&i| all[i % all.len()]).collect();
        cubes.sort();
        cubes.dedup();
        let Ok(fam) = carve_greedy_achieved(&tree, &cubes) else { return Ok(()); };
        let back = parse_sparse_family(&format_sparse_family(&fam)).unwrap();
        prop_assert_eq!(back.cubes(), fam.cubes());
        prop_assert_eq!(back.carve_outs(), fam.carve_outs());
        prop_assert_eq!(back.alpha(), fam.alpha());
    }

    #[test]
    fn config_hash_follows_canonical_text(seed in any::<u64>(), n in 2usize..5000) {
        let mut a = ExperimentConfig::defaults(Experiment::Decompose);
        a.seed = seed;
        a.n = n;
        let b = ExperimentConfig::parse(&a.canonical(), None).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
        prop_assert_eq!(a.hash().len(), 16);
        let mut c = a.clone();
        c.seed = seed.wrapping_add(1);
        prop_assert_ne!(a.hash(), c.hash());
    }
}

#[test]
fn written_tables_carry_the_hash_and_regenerate_plots() {
    let mut cfg = ExperimentConfig::defaults(Experiment::BloomFailure);
    cfg.n = 1 << 12;
    cfg.eps_exponents = vec![1, 2, 3];
    let out = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_output(dir.path(), &cfg, &out).unwrap();
    let text = std::fs::read_to_string(dir.path().join("bloom_failure.csv")).unwrap();
    let (cols, rows) = read_csv_columns(&text).unwrap();
    assert_eq!(cols[0], "config_hash");
    assert!(rows.iter().all(|r| r[0] == cfg.hash()));
    let svg = std::fs::read_to_string(dir.path().join("bloom_failure.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let checks = std::fs::read_to_string(dir.path().join("checks.csv")).unwrap();
    assert!(checks.lines().count() > 1);
}
