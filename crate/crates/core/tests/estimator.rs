use laguerre_sieve::density::{Exponential, GenericDensity};
use laguerre_sieve::estimator::{bic_with, parse_grid, ParameterCount};
use laguerre_sieve::laguerre::best_approx;
use laguerre_sieve::simulator::{sample_dataset, GeneratorConfig};
use laguerre_sieve::transmission::dataset_loglik;
use laguerre_sieve::{
    bic, fit, select_model, FitOptions, LaguerreDensity, Observation, QuadratureConfig,
};

fn synthetic(seed: u64, n: usize) -> (Vec<Observation>, GeneratorConfig) {
    let cfg = GeneratorConfig {
        n,
        seed,
        ..GeneratorConfig::default()
    };
    (sample_dataset(&cfg).unwrap(), cfg)
}

#[test]
fn zero_degrees_give_exponentials() {
    let (data, cfg) = synthetic(3, 40);
    let em = cfg.exposure_model().unwrap();
    let f = fit(&data, &em, 0, 0, &FitOptions::with_seed(1)).unwrap();
    assert_eq!(f.phi_i_hat.theta(), &[1.0]);
    assert_eq!(f.phi_g_hat.theta(), &[1.0]);
    let e = LaguerreDensity::exponential();
    let direct = dataset_loglik(&data, &em, &e, &e, &QuadratureConfig::default()).unwrap();
    assert!((f.loglik - direct).abs() < 1e-9, "{} vs {direct}", f.loglik);
    assert_eq!(f.bic, -2.0 * f.loglik);
}

#[test]
fn fit_beats_the_truth_projections() {
    let q = QuadratureConfig::default();
    for seed in [1, 2, 3] {
        let (data, cfg) = synthetic(seed, 40);
        let em = cfg.exposure_model().unwrap();
        let pi = best_approx(cfg.phi_i_true.as_dyn(), 2).unwrap();
        let pg = best_approx(cfg.phi_g_true.as_dyn(), 2).unwrap();
        let at_projection = dataset_loglik(&data, &em, &pi, &pg, &q).unwrap();
        let f = fit(&data, &em, 2, 2, &FitOptions::with_seed(seed)).unwrap();
        assert!(
            f.loglik >= at_projection - 1e-6,
            "seed {seed}: {} < {at_projection}",
            f.loglik
        );
    }
}

#[test]
fn same_seed_gives_identical_results() {
    let (data, cfg) = synthetic(8, 40);
    let em = cfg.exposure_model().unwrap();
    let opts = FitOptions::with_seed(21);
    let a = fit(&data, &em, 2, 1, &opts).unwrap();
    let b = fit(&data, &em, 2, 1, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn loglik_is_invariant_under_sign_flips() {
    let (data, cfg) = synthetic(4, 40);
    let em = cfg.exposure_model().unwrap();
    let q = QuadratureConfig::default();
    let f = fit(&data, &em, 2, 2, &FitOptions::with_seed(4)).unwrap();
    let (i, g) = (&f.phi_i_hat, &f.phi_g_hat);
    let base = dataset_loglik(&data, &em, i, g, &q).unwrap();
    // the fit may use the moment strategy, which carries about 1e-8 of cancellation
    assert!((base - f.loglik).abs() < 1e-7);
    for (a, b) in [
        (i.negated(), g.clone()),
        (i.clone(), g.negated()),
        (i.negated(), g.negated()),
    ] {
        let v = dataset_loglik(&data, &em, &a, &b, &q).unwrap();
        assert!((v - base).abs() < 1e-9);
    }
}

#[test]
fn final_loglik_dominates_every_start() {
    let (data, cfg) = synthetic(5, 40);
    let em = cfg.exposure_model().unwrap();
    let f = fit(&data, &em, 2, 2, &FitOptions::with_seed(9)).unwrap();
    assert!(f.starts.len() >= 5);
    for s in &f.starts {
        assert!(s.final_loglik >= s.initial_loglik);
        assert!(f.loglik >= s.initial_loglik);
        assert!(f.loglik >= s.final_loglik);
    }
    let best = f.starts.iter().find(|s| s.index == f.best_start).unwrap();
    assert_eq!(best.final_loglik, f.loglik);
}

#[test]
fn bic_arithmetic() {
    assert_eq!(bic(-100.0, 2, 2, 40), 200.0 + 4.0 * 40f64.ln());
    assert!((bic(-100.0, 2, 2, 40) - 214.7555).abs() < 1e-4);
    assert_eq!(bic(-57.25, 0, 0, 13), 114.5);
    assert_eq!(
        bic_with(-100.0, 2, 2, 40, ParameterCount::Coefficients),
        200.0 + 6.0 * 40f64.ln()
    );
}

#[test]
fn single_cell_grid_selects_that_cell() {
    let (data, cfg) = synthetic(6, 40);
    let em = cfg.exposure_model().unwrap();
    let opts = FitOptions::with_seed(2);
    let s = select_model(&data, &em, &[(1, 2)], &opts).unwrap();
    assert_eq!(s.best, (1, 2));
    assert_eq!(s.table.len(), 1);
    assert_eq!(s.best_fit, fit(&data, &em, 1, 2, &opts).unwrap());
}

#[test]
fn exponential_truth_selects_zero_degrees() {
    let exp = GenericDensity::new(Exponential::new(1.0).unwrap());
    let grid = parse_grid("0..1x0..1").unwrap();
    let mut hits = 0;
    for seed in 0..20 {
        let cfg = GeneratorConfig {
            n: 200,
            seed,
            phi_i_true: exp.clone(),
            phi_g_true: exp.clone(),
            ..GeneratorConfig::default()
        };
        let data = sample_dataset(&cfg).unwrap();
        let em = cfg.exposure_model().unwrap();
        let s = select_model(&data, &em, &grid, &FitOptions::with_seed(seed)).unwrap();
        let finite = s.table.iter().filter(|c| c.bic.is_some_and(f64::is_finite));
        assert_eq!(finite.count(), 4);
        if s.best == (0, 0) {
            hits += 1;
        }
    }
    assert!(hits > 10, "(0,0) selected in {hits} of 20 seeds");
}

#[test]
fn larger_degree_does_not_lose_likelihood() {
    let mut ok = 0;
    for seed in 0..10 {
        let (data, cfg) = synthetic(100 + seed, 40);
        let em = cfg.exposure_model().unwrap();
        let opts = FitOptions::with_seed(seed);
        let small = fit(&data, &em, 2, 2, &opts).unwrap();
        let large = fit(&data, &em, 3, 2, &opts).unwrap();
        if small.loglik <= large.loglik + 1e-4 {
            ok += 1;
        }
    }
    assert!(ok > 5, "nested inequality held in {ok} of 10 seeds");
}

#[test]
fn grid_table_has_a_unique_minimum() {
    let (data, cfg) = synthetic(12, 40);
    let em = cfg.exposure_model().unwrap();
    let grid = parse_grid("1..4x1..4").unwrap();
    let s = select_model(&data, &em, &grid, &FitOptions::with_seed(12)).unwrap();
    let bics: Vec<f64> = s.table.iter().map(|c| c.bic.unwrap()).collect();
    assert!(bics.iter().all(|b| b.is_finite()));
    let min = bics.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(bics.iter().filter(|&&b| b == min).count(), 1);
    let cell = s.table.iter().find(|c| c.bic == Some(min)).unwrap();
    assert_eq!((cell.m1, cell.m2), s.best);
    assert_eq!(s.best_fit.bic, min);
}

#[test]
fn invalid_inputs_are_rejected() {
    let (data, cfg) = synthetic(1, 10);
    let em = cfg.exposure_model().unwrap();
    let opts = FitOptions::default();
    assert!(fit(&[], &em, 1, 1, &opts).is_err());
    assert!(select_model(&data, &em, &[], &opts).is_err());
    let bad = FitOptions {
        n_starts: 0,
        ..FitOptions::default()
    };
    assert!(fit(&data, &em, 1, 1, &bad).is_err());
    let unknown = FitOptions {
        strategy: "nope".into(),
        ..FitOptions::default()
    };
    assert!(fit(&data, &em, 1, 1, &unknown).is_err());
}

#[test]
fn grid_parsing() {
    assert_eq!(parse_grid("1..2x3").unwrap(), vec![(1, 3), (2, 3)]);
    assert_eq!(parse_grid("0..=1X0..1").unwrap().len(), 4);
    assert_eq!(parse_grid("1..4x1..4").unwrap().len(), 16);
    assert!(parse_grid("3..1x1").is_err());
    assert!(parse_grid("1..4").is_err());
    assert!(parse_grid("ax1").is_err());
}

#[test]
fn fit_result_round_trips_through_json() {
    let (data, cfg) = synthetic(2, 30);
    let em = cfg.exposure_model().unwrap();
    let f = fit(&data, &em, 1, 1, &FitOptions::with_seed(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fit.json");
    std::fs::write(&path, serde_json::to_string_pretty(&f).unwrap()).unwrap();
    let back = laguerre_sieve::FitResult::read_json(&path).unwrap();
    assert_eq!(back, f);
}
