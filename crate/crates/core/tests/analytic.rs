//! Closed-form and brute-force checks of the analytic building blocks.

use approx::assert_abs_diff_eq;
use edgecache::oracle::{crp_oracle, gradient_oracle, set_partitions};
use edgecache::seed::rng_from_seed;
use edgecache::{crp_log_prob, crp_sample, zipf_pmf, CrpConfig, SeatingOutcome};

#[test]
fn zipf_pmf_sums_to_one() {
    for alpha in [0.0, 0.5, 1.0, 2.0, 4.0] {
        for f in [1, 2, 32, 1000] {
            let pmf = zipf_pmf(alpha, f).unwrap();
            assert_eq!(pmf.len(), f);
            assert_abs_diff_eq!(pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!(pmf.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

#[test]
fn zipf_head_matches_harmonic_number() {
    let h: f64 = (1..=32).map(|i| 1.0 / (i as f64).powi(2)).sum();
    let pmf = zipf_pmf(2.0, 32).unwrap();
    assert_abs_diff_eq!(pmf[0], 1.0 / h, epsilon = 1e-12);
    assert_abs_diff_eq!(pmf[0], 0.61951, epsilon = 1e-5);
}

#[test]
fn crp_partitions_carry_unit_mass() {
    let report = crp_oracle(6, &[0.5, 1.0, 2.0, 10.0]).unwrap();
    assert!(report.passed(), "{report:?}");
}

/// Probability of a seating computed customer by customer.
fn sequential_prob(assignment: &[usize], beta: f64) -> f64 {
    let mut occupancy: Vec<usize> = Vec::new();
    let mut p = 1.0;
    for (i, &table) in assignment.iter().enumerate() {
        let denom = beta + i as f64;
        if table == occupancy.len() {
            p *= beta / denom;
            occupancy.push(1);
        } else {
            p *= occupancy[table] as f64 / denom;
            occupancy[table] += 1;
        }
    }
    p
}

#[test]
fn log_prob_equals_sequential_product() {
    for n in 1..=6 {
        for assignment in set_partitions(n) {
            for beta in [0.3, 1.0, 7.5] {
                let outcome = SeatingOutcome::from_assignment(assignment.clone()).unwrap();
                let lp = crp_log_prob(&outcome, beta).unwrap();
                assert_abs_diff_eq!(lp.exp(), sequential_prob(&assignment, beta), epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn expected_table_count() {
    let (beta, n) = (100.0, 32);
    let p: Vec<f64> = (0..n).map(|i| beta / (beta + i as f64)).collect();
    let mean: f64 = p.iter().sum();
    let var: f64 = p.iter().map(|q| q * (1.0 - q)).sum();
    assert_abs_diff_eq!(mean, 27.885, epsilon = 1e-3);

    let draws = 4000;
    let cfg = CrpConfig::new(beta, n, 1).unwrap();
    let mut rng = rng_from_seed(11);
    let total: usize = (0..draws).map(|_| crp_sample(&cfg, &mut rng).unwrap().occupied_tables()).sum();
    let sample_mean = total as f64 / draws as f64;
    let bound = 3.0 * (var / draws as f64).sqrt();
    assert!((sample_mean - mean).abs() < bound, "mean {sample_mean} vs {mean} ± {bound}");
}

#[test]
fn gradient_matches_finite_differences() {
    let report = gradient_oracle(50, 0);
    assert_eq!(report.cases, 50);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn low_beta_columns_are_heavy_tailed() {
    let cfg = CrpConfig::new(2.0, 32, 8).unwrap();
    let heavy = (0..100)
        .filter(|&seed| {
            let out = crp_sample(&cfg, &mut rng_from_seed(seed)).unwrap();
            let top = *out.occupancy().iter().max().unwrap() as f64;
            top / out.selections() as f64 >= 1.0 / out.occupied_tables() as f64
        })
        .count();
    assert!(heavy >= 95, "{heavy} of 100 seeds");
}
