use bloomlab_core::dyadic::{verify_sparse, DyadicTree};
use bloomlab_core::oscillation::{
    decomposition_lambda, john_stromberg_upper, local_mean_osc, oscillation_sup, sparse_decompose, OscillationQuery,
};
use bloomlab_core::weights::{
    ap_constant, bmo_eta_norm, doubling_constant, level_set_gamma, reverse_jensen, BloomSetup, CubeDictionary, Weight,
};
use bloomlab_core::{Cube, Dim, Grid, GridFunction};
use proptest::prelude::*;

fn sym(n: usize) -> Grid {
    Grid::symmetric(Dim::One, 1.0, n).unwrap()
}

fn anchored(g: &Grid) -> CubeDictionary {
    CubeDictionary::origin_anchored(g, &CubeDictionary::ladder(g)).unwrap()
}

#[test]
fn power_weight_ap_constants() {
    let g = sym(1 << 14);
    let d = anchored(&g);
    let half = ap_constant(&Weight::power(&g, 0.5).unwrap(), 2.0, &d).unwrap();
    assert!((4.0 / 3.0 - 1e-2..=4.0 / 3.0 + 1e-2).contains(&half), "{half}");
    let quarter = ap_constant(&Weight::power(&g, 0.25).unwrap(), 2.0, &d).unwrap();
    assert!((quarter - 16.0 / 15.0).abs() < 1e-2, "{quarter}");
}

#[test]
fn doubling_of_square_root_weight() {
    let g = sym(1 << 12);
    let d = CubeDictionary::standard(&g, 6).unwrap();
    let c = doubling_constant(&Weight::power(&g, 0.5).unwrap(), 2.0, &d).unwrap();
    assert!(c <= 2f64.powf(1.5) + 1e-2, "{c}");
    assert!(c >= 2f64.powf(1.5) - 1e-2);
}

#[test]
fn reverse_jensen_holds_for_tested_weights() {
    let g = sym(1 << 11);
    let d = CubeDictionary::standard(&g, 6).unwrap();
    let weights = [
        Weight::power(&g, -0.5).unwrap(),
        Weight::power(&g, 0.25).unwrap(),
        Weight::power(&g, 0.5).unwrap(),
        Weight::two_level(&g, 1.0).unwrap(),
        Weight::constant(&g, 3.0).unwrap(),
    ];
    for w in &weights {
        let gamma = level_set_gamma(w, &d).unwrap();
        assert!(gamma > 0.0 && gamma <= 1.0 + 1e-12);
        for delta in [0.25, 0.5, 0.75] {
            let rj = reverse_jensen(w, delta, &d).unwrap();
            assert!(rj.holds, "{:?} δ = {delta}: {rj:?}", w.tag());
        }
    }
}

#[test]
fn equal_weights_give_unit_bloom_weight() {
    let g = sym(256);
    let mu = Weight::power(&g, 0.3).unwrap();
    let s = BloomSetup::new(mu.clone(), mu, 2.0, 2).unwrap();
    assert!(s.nu.samples().iter().all(|&v| v == 1.0));
    assert!(s.eta.samples().iter().all(|&v| v == 1.0));
    let b = g.sample(|x| x[0].abs().sqrt()).unwrap();
    let d = CubeDictionary::standard(&g, 5).unwrap();
    let one = Weight::constant(&g, 1.0).unwrap();
    assert_eq!(bmo_eta_norm(&b, &s.eta, &d).unwrap(), bmo_eta_norm(&b, &one, &d).unwrap());
}

#[test]
fn bmo_to_oscillation_constant_is_stable() {
    for a in [0.0, 0.5] {
        let c: Vec<f64> = [512usize, 1024]
            .iter()
            .map(|&n| {
                let g = sym(n);
                let f = g.sample(|x| if x[0] < 0.3 { 1.0 } else { -1.0 } + if x[0] > -0.6 { 0.5 } else { 0.0 }).unwrap();
                let eta = Weight::power(&g, a).unwrap();
                let d = CubeDictionary::standard(&g, 7).unwrap();
                let lam = decomposition_lambda(1);
                bmo_eta_norm(&f, &eta, &d).unwrap() / oscillation_sup(&f, &eta, &d, lam).unwrap()
            })
            .collect();
        assert!(c.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(c[0] / c[1] <= 2.0 && c[1] / c[0] <= 2.0, "a = {a}: {c:?}");
    }
}

fn integer_steps(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-40i32..40).prop_map(f64::from), n)
}

fn positive_steps(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..20.0, n)
}

fn step_weight(g: Grid, v: Vec<f64>) -> Weight {
    let n = v.len();
    let per = g.len() / n;
    Weight::new(GridFunction::new(g, (0..g.len()).map(|i| v[i / per]).collect()).unwrap()).unwrap()
}

proptest! {
    #[test]
    fn ap_constant_is_at_least_one(v in positive_steps(8), p in 1.2f64..4.0) {
        let g = sym(64);
        let d = CubeDictionary::standard(&g, 4).unwrap();
        let w = step_weight(g, v.clone());
        let c = ap_constant(&w, p, &d).unwrap();
        prop_assert!(c >= 1.0 - 1e-12);
        let constant = v.iter().all(|&x| x == v[0]);
        prop_assert_eq!(constant, (c - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn ap_duality(a in -0.9f64..0.9, p in 1.3f64..4.0) {
        let g = sym(512);
        let d = CubeDictionary::standard(&g, 6).unwrap();
        let w = Weight::power(&g, a).unwrap();
        let pp = p / (p - 1.0);
        let primal = ap_constant(&w, p, &d).unwrap();
        let dual = ap_constant(&w.pow(1.0 - pp), pp, &d).unwrap();
        prop_assert!((dual / primal.powf(pp - 1.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn holder_bound_for_interpolated_weights(a in -0.9f64..0.9, b in -0.9f64..0.9, m in 1u32..4, p in 1.5f64..3.0) {
        let g = sym(512);
        let d = CubeDictionary::standard(&g, 6).unwrap();
        let lam = Weight::power(&g, a).unwrap();
        let mu = Weight::power(&g, b).unwrap();
        let cl = ap_constant(&lam, p, &d).unwrap();
        let cm = ap_constant(&mu, p, &d).unwrap();
        for i in 0..=m {
            let t = f64::from(i) / f64::from(m);
            let mixed = ap_constant(&lam.interpolate(&mu, t).unwrap(), p, &d).unwrap();
            prop_assert!(mixed <= cl.powf(1.0 - t) * cm.powf(t) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn bmo_norm_invariances(v in integer_steps(16), c in -50.0f64..50.0, s in -4.0f64..4.0) {
        let g = sym(128);
        let d = CubeDictionary::standard(&g, 5).unwrap();
        let eta = Weight::power(&g, 0.4).unwrap();
        let b = GridFunction::new(g, (0..128).map(|i| v[i / 8]).collect()).unwrap();
        let base = bmo_eta_norm(&b, &eta, &d).unwrap();
        let shifted = bmo_eta_norm(&b.map(|x| x + c).unwrap(), &eta, &d).unwrap();
        let scaled = bmo_eta_norm(&b.scale(s), &eta, &d).unwrap();
        prop_assert!((shifted - base).abs() <= 1e-12 * (base + c.abs()));
        prop_assert!((scaled - s.abs() * base).abs() <= 1e-12 * s.abs() * base);
    }

    #[test]
    fn oscillation_shift_and_scale(v in integer_steps(64), c in -100i32..100, k in -8i32..8, lo in 0usize..48, len in 8usize..16) {
        let g = Grid::new(Dim::One, &[0.0], 64.0, 64).unwrap();
        let f = GridFunction::new(g, v).unwrap();
        let q = Cube::interval(lo as f64, len as f64).unwrap();
        let lam = 0.25;
        let osc = |h: &GridFunction| local_mean_osc(&OscillationQuery::new(h, q, lam).unwrap()).unwrap().0;
        let base = osc(&f);
        prop_assert_eq!(osc(&f.map(|x| x + f64::from(c)).unwrap()), base);
        prop_assert_eq!(osc(&f.scale(f64::from(k))), f64::from(k.abs()) * base);
    }

    #[test]
    fn oscillation_decreases_in_lambda(v in prop::collection::vec(-5.0f64..5.0, 64), lo in 0usize..32, len in 16usize..32) {
        let g = Grid::new(Dim::One, &[0.0], 64.0, 64).unwrap();
        let f = GridFunction::new(g, v).unwrap();
        let q = Cube::interval(lo as f64, len as f64).unwrap();
        let mut prev = f64::INFINITY;
        for j in 1..16 {
            let lam = f64::from(j) / 16.0;
            if lam * (len as f64) < 1.0 {
                continue;
            }
            let w = local_mean_osc(&OscillationQuery::new(&f, q, lam).unwrap()).unwrap().0;
            prop_assert!(w <= prev);
            prev = w;
        }
    }

    #[test]
    fn chebyshev_side_of_john_stromberg(v in prop::collection::vec(-5.0f64..5.0, 32), a in -0.5f64..0.8, j in 1u32..8) {
        let g = sym(128);
        let f = GridFunction::new(g, (0..128).map(|i| v[i / 4]).collect()).unwrap();
        let eta = Weight::power(&g, a).unwrap();
        let d = CubeDictionary::standard(&g, 4).unwrap();
        let r = john_stromberg_upper(&f, &eta, &d, f64::from(j) / 16.0).unwrap();
        prop_assert!(r.holds, "{:?}", r);
    }

    #[test]
    fn decomposition_of_random_steps(v in prop::collection::vec(-3.0f64..3.0, 32)) {
        let g = Grid::new(Dim::One, &[0.0], 1.0, 256).unwrap();
        let f = GridFunction::new(g, (0..256).map(|i| v[i / 8]).collect()).unwrap();
        let tree = DyadicTree::over_grid(g).unwrap();
        let r = sparse_decompose(&f, &tree).unwrap();
        prop_assert_eq!(verify_sparse(&r.family), Ok(()));
        prop_assert!(r.family.alpha() >= 0.5);
        prop_assert!(r.pointwise_defect <= 1e-12);
        prop_assert!(r.exceptional_cells.is_empty());
        prop_assert!(r.family.max_packing_ratio() <= 2.0 + 1e-12);
    }
}
