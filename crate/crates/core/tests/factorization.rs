//! Behavioural checks of collaborative filtering and transfer learning on the
//! synthetic benchmark.

use std::collections::HashSet;

use edgecache::factorization::{train, JointProblem};
use edgecache::seed::rng_from_seed;
use edgecache::{
    cf_fit, make_correspondence, make_popularity, predict_matrix, sparsify, tl_fit, CorrespondenceMap,
    FactorModel, FitSettings, Rating, RatingsMatrix, TlWeights, ZipfLaw,
};
use ndarray::Array2;

const K: usize = 8;
const MU: f64 = 0.1;

struct Benchmark {
    truth: Array2<f64>,
    target: RatingsMatrix<f64>,
    hidden: Vec<(usize, usize)>,
}

/// 32×32 coherence-0.9 popularity observed at 4% density.
fn benchmark(seed: u64) -> Benchmark {
    let mut rng = rng_from_seed(seed);
    let zipf = ZipfLaw::new(2.0, 32).unwrap();
    let pop = make_popularity(&zipf, 32, 0.9, &mut rng).unwrap();
    let target = sparsify(&pop, 0.04, &mut rng).unwrap();
    let seen: HashSet<(usize, usize)> = target.triplets().iter().map(|r| (r.user, r.content)).collect();
    let hidden = (0..32).flat_map(|u| (0..32).map(move |f| (u, f))).filter(|c| !seen.contains(c)).collect();
    Benchmark { truth: pop.per_user(), target, hidden }
}

impl Benchmark {
    /// Source domain holding exactly the target's unobserved cells.
    fn hidden_copy(&self) -> RatingsMatrix<f64> {
        let triplets = self.hidden.iter().map(|&(user, content)| Rating { user, content, value: self.truth[(user, content)] }).collect();
        RatingsMatrix::new(32, 32, triplets).unwrap()
    }

    fn held_out_rmse(&self, model: &FactorModel<f64>) -> f64 {
        let pred = predict_matrix(model, 32, 32).unwrap();
        let sse: f64 = self.hidden.iter().map(|&c| (pred[c] - self.truth[c]).powi(2)).sum();
        (sse / self.hidden.len() as f64).sqrt()
    }
}

fn weights(alpha_source: f64) -> TlWeights<f64> {
    TlWeights::new(alpha_source, 1.0, MU).unwrap()
}

#[test]
fn zero_source_weight_reproduces_cf_bit_for_bit() {
    let settings = FitSettings::default();
    for seed in 0..5 {
        let b = benchmark(seed);
        let source = b.hidden_copy();
        let cf = cf_fit(&b.target, K, MU, &settings, &mut rng_from_seed(100 + seed)).unwrap();
        let tl = tl_fit(&b.target, &source, &CorrespondenceMap::identity(32, 32), weights(0.0), K, &settings, &mut rng_from_seed(100 + seed))
            .unwrap();
        assert_eq!(predict_matrix(&cf, 32, 32).unwrap(), predict_matrix(&tl, 32, 32).unwrap());
    }
}

#[test]
fn objective_never_increases() {
    let settings = FitSettings::default();
    for seed in 0..20 {
        let b = benchmark(seed);
        let source = b.hidden_copy();
        let corr = make_correspondence(0.5, 32, 32, &mut rng_from_seed(seed)).unwrap();
        let problems = [
            JointProblem::single(&b.target, K, MU, &settings, &mut rng_from_seed(seed)).unwrap(),
            JointProblem::joint(&b.target, &source, &corr, weights(1.0), K, &settings, &mut rng_from_seed(seed)).unwrap(),
        ];
        for mut problem in problems {
            let mut trajectory = Vec::new();
            train(&mut problem, &settings, |_, v| trajectory.push(v));
            assert_eq!(trajectory.len(), settings.epochs + 1);
            for (epoch, w) in trajectory.windows(2).enumerate() {
                assert!(w[1] <= w[0], "seed {seed} epoch {epoch}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn transfer_helps_with_true_correspondence_and_hurts_without() {
    let settings = FitSettings::default();
    let (mut tl_good, mut cf, mut tl_bad) = (0.0, 0.0, 0.0);
    let seeds = 20;
    for seed in 0..seeds {
        let b = benchmark(seed);
        let source = b.hidden_copy();
        let init = |label: u64| rng_from_seed(1000 * seed + label);
        cf += b.held_out_rmse(&cf_fit(&b.target, K, MU, &settings, &mut init(1)).unwrap());
        let perfect = CorrespondenceMap::identity(32, 32);
        tl_good += b.held_out_rmse(&tl_fit(&b.target, &source, &perfect, weights(1.0), K, &settings, &mut init(2)).unwrap());
        let shuffled = make_correspondence(0.0, 32, 32, &mut init(3)).unwrap();
        tl_bad += b.held_out_rmse(&tl_fit(&b.target, &source, &shuffled, weights(1.0), K, &settings, &mut init(4)).unwrap());
    }
    let n = seeds as f64;
    let (tl_good, cf, tl_bad) = (tl_good / n, cf / n, tl_bad / n);
    assert!(tl_good < cf && cf < tl_bad, "tl(1) {tl_good} cf {cf} tl(0) {tl_bad}");
}

#[test]
fn argsort_survives_rating_scale() {
    // With μ = 0, ratings ×4, init ×2 and step ÷4 the whole trajectory scales
    // by exactly 2 per factor, so predictions scale by exactly 4.
    let base = FitSettings { learning_rate: 0.02, epochs: 300, init_scale: 0.05 };
    let scaled = FitSettings { learning_rate: 0.005, epochs: 300, init_scale: 0.1 };
    for seed in 0..5 {
        let b = benchmark(seed);
        let a = cf_fit(&b.target, K, 0.0, &base, &mut rng_from_seed(seed)).unwrap();
        let c = cf_fit(&b.target.scaled(4.0), K, 0.0, &scaled, &mut rng_from_seed(seed)).unwrap();
        let (pa, pc) = (predict_matrix(&a, 32, 32).unwrap(), predict_matrix(&c, 32, 32).unwrap());
        for f in 0..32 {
            let order = |p: &Array2<f64>| {
                let mut idx: Vec<usize> = (0..32).collect();
                idx.sort_by(|&x, &y| p[(y, f)].partial_cmp(&p[(x, f)]).unwrap().then(x.cmp(&y)));
                idx
            };
            assert_eq!(order(&pa), order(&pc), "seed {seed} column {f}");
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let settings = FitSettings::default();
    let b = benchmark(3);
    let target32 = RatingsMatrix::new(
        32,
        32,
        b.target.triplets().iter().map(|r| Rating { user: r.user, content: r.content, value: r.value as f32 }).collect(),
    )
    .unwrap();
    let m64 = cf_fit(&b.target, K, MU, &settings, &mut rng_from_seed(8)).unwrap();
    let m32 = cf_fit(&target32, K, 0.1f32, &FitSettings::default(), &mut rng_from_seed(8)).unwrap();
    let (p64, p32) = (predict_matrix(&m64, 32, 32).unwrap(), predict_matrix(&m32, 32, 32).unwrap());
    let worst = p64.iter().zip(p32.iter()).map(|(a, &b)| (a - b as f64).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-4, "max difference {worst}");
}

#[test]
fn full_rank_fit_interpolates_observed_matrix() {
    let b = benchmark(1);
    let full = RatingsMatrix::from_dense(&b.truth).unwrap();
    let settings = FitSettings { learning_rate: 0.02, epochs: 20_000, init_scale: 0.3 };
    let model = cf_fit(&full, 32, 0.0, &settings, &mut rng_from_seed(1)).unwrap();
    let pred = predict_matrix(&model, 32, 32).unwrap();
    let rmse = ((&pred - &b.truth).mapv(|d| d * d).sum() / 1024.0).sqrt();
    assert!(rmse < 1e-3, "rmse {rmse}");
}
