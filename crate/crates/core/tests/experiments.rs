//! End-to-end checks of the tests on simulated data.

use evindex::dependence::{tail_dependence_matrix, wald_test};
use evindex::hill::{hill_estimates, KChoice};
use evindex::maxtest::{run_max_test, NullSpec};
use evindex::mc::{run_experiment, ExperimentConfig, Hypothesis};
use evindex::procedure::TestSpec;
use evindex::simulate::{generate, Model, ModelSpec, SeedSpec};
use evindex::{DataMatrix, Probability};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn pareto_panel(n: usize, p: usize, gamma: &[f64], seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (0..p)
        .map(|j| (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-gamma[j])).collect())
        .collect();
    DataMatrix::from_columns(cols).unwrap()
}

fn rejection_rate(reps: u64, f: impl Fn(u64) -> bool + Sync) -> f64 {
    (0..reps).into_par_iter().filter(|&r| f(r)).count() as f64 / reps as f64
}

#[test]
fn iid_pareto_size_and_power() {
    let (n, p, k) = (1000, 50, 50);
    let ks = KChoice::uniform(k, p, n).unwrap();
    let alpha = Probability::default();
    let ones = vec![1.0; p];
    let size = rejection_rate(1000, |r| {
        run_max_test(&pareto_panel(n, p, &ones, r), &ks, &NullSpec::unit(p), alpha).unwrap().reject
    });
    assert!((0.02..=0.11).contains(&size), "size {size}");

    let mut perturbed = ones.clone();
    perturbed[7] = 1.0 + 2.0 * ((p as f64).ln() / k as f64).sqrt();
    let power = rejection_rate(300, |r| {
        run_max_test(&pareto_panel(n, p, &perturbed, 10_000 + r), &ks, &NullSpec::unit(p), alpha)
            .unwrap()
            .reject
    });
    assert!(power > 0.5, "power {power}");
}

#[test]
fn wald_is_oversized_in_high_dimension() {
    let (n, p, k) = (1000, 50, 50);
    let ks = KChoice::uniform(k, p, n).unwrap();
    let ones = vec![1.0; p];
    let size = rejection_rate(500, |r| {
        wald_test(&pareto_panel(n, p, &ones, 50_000 + r), &ks, &NullSpec::unit(p), Probability::default(), 0.0)
            .unwrap()
            .reject
    });
    assert!(size > 0.08, "Wald size {size}");
}

#[test]
fn monte_carlo_null_band() {
    let mut c = ExperimentConfig::new(vec![Model::B], vec![TestSpec::T], vec![50], vec![50]);
    c.replications = 400;
    c.master_seed = 99;
    let cell = &run_experiment(&c).unwrap().cells[0];
    let (lo, hi) = cell.interval(2.576).unwrap();
    assert!(lo <= 0.12 && hi >= 0.04, "{cell:?}");
}

#[test]
fn equal_index_test_on_scaled_null() {
    // a common index different from 1 is still the null for T*
    let spec = ModelSpec::new(Model::C, 1000, vec![0.5; 40]).unwrap();
    let ks = KChoice::uniform(50, 40, 1000).unwrap();
    let rate = rejection_rate(300, |r| {
        let data = generate(&spec, SeedSpec::new(5, r)).unwrap();
        run_max_test(&data, &ks, &NullSpec::Equal, Probability::default()).unwrap().reject
    });
    assert!(rate < 0.15, "T* size {rate}");
}

#[test]
fn alternative_experiment_has_power() {
    let mut c = ExperimentConfig::new(vec![Model::B], vec![TestSpec::T, TestSpec::T_STAR], vec![50], vec![50]);
    c.replications = 200;
    c.hypothesis = Hypothesis::Alternative;
    let rep = run_experiment(&c).unwrap();
    for cell in &rep.cells {
        assert!(cell.rejection_rate.unwrap() > 0.7, "{cell:?}");
    }
}

#[test]
fn hill_and_sigma_on_generated_panel() {
    let data = generate(&ModelSpec::null(Model::D, 4000, 8).unwrap(), SeedSpec::new(1, 1)).unwrap();
    let est = hill_estimates(&data, &KChoice::uniform(200, 8, 4000).unwrap()).unwrap();
    for g in est.gamma_hat {
        assert!((g - 1.0).abs() < 0.3, "{g}");
    }
    let s = tail_dependence_matrix(&data, 200).unwrap();
    for j in 0..8 {
        assert_eq!(s.get(j, j), 1.0);
    }
}
