//! One Monte Carlo realization: popularity, trace, training data, fits,
//! placements and a paired delivery replay per policy.
//!
//! [`Realizer`] keeps the last product of every stage together with the
//! inputs it was built from, so consecutive grid points of a sweep recompute
//! only the stages their axis touches. Every stage draws from its own
//! labelled stream, which makes a cached product identical to a fresh one.

use ndarray::Array2;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Policy};
use crate::delivery::{simulate, DeliveryReport, Metrics};
use crate::demand::{make_popularity, sample_trace, sparsify, Association, PopularityMatrix, RequestTrace, ZipfLaw};
use crate::error::{Result, ResultExt};
use crate::factorization::{cf_fit, make_correspondence, predict_matrix, tl_fit, CorrespondenceMap, FactorModel};
use crate::placement::{place_greedy, place_random, scores_with_scope, CachePlan};
use crate::ratings::RatingsMatrix;
use crate::seed::SeedPlan;
use crate::source::{crp_to_ratings, CrpConfig};

/// Metrics of every configured policy on one shared trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationResult {
    pub seed: u64,
    /// Hex SHA-256 of the request trace every policy was replayed against.
    pub trace_digest: String,
    pub outcomes: Vec<(Policy, Metrics<f64>)>,
}

impl RealizationResult {
    pub fn metrics(&self, policy: Policy) -> Option<&Metrics<f64>> {
        self.outcomes.iter().find(|(p, _)| *p == policy).map(|(_, m)| m)
    }
}

/// Runs one realization from scratch.
pub fn run_realization(cfg: &ExperimentConfig, seed: u64) -> Result<RealizationResult> {
    Realizer::default().run(cfg, seed)
}

/// Everything one realization produced, for inspection and dumps.
#[derive(Debug, Clone)]
pub struct RealizationArtifacts {
    pub result: RealizationResult,
    pub reports: Vec<(Policy, DeliveryReport<f64>)>,
    /// Target-restricted fitted models.
    pub cf_model: Option<FactorModel<f64>>,
    pub tl_model: Option<FactorModel<f64>>,
}

pub fn realization_artifacts(cfg: &ExperimentConfig, seed: u64) -> Result<RealizationArtifacts> {
    let mut r = Realizer::default();
    let (trace_digest, outcomes, reports) = r.execute(cfg, seed)?;
    let needs = |p| cfg.policy_order().contains(&p);
    Ok(RealizationArtifacts {
        result: RealizationResult { seed, trace_digest, outcomes },
        reports,
        cf_model: r.cf.slot.filter(|_| needs(Policy::Cf)).map(|(_, m)| m),
        tl_model: r.tl.slot.filter(|_| needs(Policy::Tl)).map(|(_, m)| m),
    })
}

type Key = Vec<u64>;

/// Single-entry memo keyed by the exact inputs of a stage.
#[derive(Debug)]
struct Memo<V> {
    slot: Option<(Key, V)>,
}

impl<V> Default for Memo<V> {
    fn default() -> Self {
        Self { slot: None }
    }
}

impl<V> Memo<V> {
    fn get_or_try(&mut self, key: Key, build: impl FnOnce() -> Result<V>) -> Result<&V> {
        if self.slot.as_ref().is_none_or(|(k, _)| *k != key) {
            self.slot = Some((key, build()?));
        }
        Ok(&self.slot.as_ref().expect("memo filled").1)
    }
}

#[derive(Debug)]
struct World {
    assoc: Association,
    popularity: PopularityMatrix<f64>,
}

#[derive(Debug)]
struct Training {
    cf: RatingsMatrix<f64>,
    tl: RatingsMatrix<f64>,
}

#[derive(Debug)]
struct Trace {
    trace: RequestTrace,
    digest: String,
}

/// Stage cache for realizations that share a seed.
#[derive(Debug, Default)]
pub struct Realizer {
    world: Memo<World>,
    training: Memo<Training>,
    trace: Memo<Trace>,
    cf: Memo<FactorModel<f64>>,
    source: Memo<RatingsMatrix<f64>>,
    correspondence: Memo<CorrespondenceMap>,
    tl: Memo<FactorModel<f64>>,
}

fn bits(values: &[f64]) -> Key {
    values.iter().map(|v| v.to_bits()).collect()
}

fn join(parts: &[&Key]) -> Key {
    parts.iter().flat_map(|k| k.iter().copied()).collect()
}

impl Realizer {
    pub fn run(&mut self, cfg: &ExperimentConfig, seed: u64) -> Result<RealizationResult> {
        self.execute(cfg, seed).map(|(digest, outcomes, _)| RealizationResult { seed, trace_digest: digest, outcomes })
    }

    #[allow(clippy::type_complexity)]
    fn execute(
        &mut self,
        cfg: &ExperimentConfig,
        seed: u64,
    ) -> Result<(String, Vec<(Policy, Metrics<f64>)>, Vec<(Policy, DeliveryReport<f64>)>)> {
        cfg.validate()?;
        let seeds = SeedPlan::new(seed);
        let policies = cfg.policy_order();
        let needs_cf = policies.contains(&Policy::Cf);
        let needs_tl = policies.contains(&Policy::Tl);

        let world_key = {
            let mut k = vec![seed, cfg.m_tar as u64, cfg.n_tar as u64, cfg.f_tar as u64];
            k.extend(bits(&[cfg.alpha, cfg.coherence]));
            k
        };
        let world = self.world.get_or_try(world_key.clone(), || {
            let assoc = Association::uniform(cfg.n_tar, cfg.m_tar, &mut seeds.rng("association"))?;
            let zipf = ZipfLaw::new(cfg.alpha, cfg.f_tar)?;
            let popularity = make_popularity(&zipf, cfg.n_tar, cfg.coherence, &mut seeds.rng("popularity"))?;
            Ok(World { assoc, popularity })
        })
        .context("building ground-truth popularity")?;
        let (assoc, popularity) = (world.assoc.clone(), world.popularity.clone());

        let trace_key = join(&[&world_key, &vec![cfg.t as u64], &bits(&[cfg.lambda])]);
        let trace = self
            .trace
            .get_or_try(trace_key, || {
                let trace = sample_trace(&popularity, &assoc, cfg.lambda, cfg.t, &mut seeds.rng("trace"))?;
                let digest = trace_digest(&trace);
                Ok(Trace { trace, digest })
            })
            .context("sampling the request trace")?;
        let (trace, digest) = (trace.trace.clone(), trace.digest.clone());

        let fit_key = join(&[
            &vec![cfg.rank as u64, cfg.epochs as u64],
            &bits(&[cfg.mu, cfg.learning_rate, cfg.init_scale]),
        ]);
        let training_key = join(&[&world_key, &bits(&[cfg.cf_density, cfg.tl_density])]);
        if needs_cf || needs_tl {
            self.training
                .get_or_try(training_key.clone(), || {
                    // Both draws replay the same shuffle, so the CF cells are a
                    // subset of the TL cells.
                    let cf = sparsify(&popularity, cfg.cf_density, &mut seeds.rng("training"))?;
                    let tl = sparsify(&popularity, cfg.tl_density, &mut seeds.rng("training"))?;
                    Ok(Training { cf, tl })
                })
                .context("sampling training ratings")?;
        }

        let mut predictions: Vec<(Policy, Array2<f64>)> = Vec::new();
        for &policy in &policies {
            let pred = match policy {
                Policy::GroundTruth => popularity.per_user(),
                Policy::Random => continue,
                Policy::Cf => {
                    let ratings = &self.training.slot.as_ref().expect("training sampled").1.cf;
                    let model = self
                        .cf
                        .get_or_try(join(&[&training_key, &fit_key]), || {
                            cf_fit(ratings, cfg.rank, cfg.mu, &cfg.fit_settings(), &mut seeds.rng("cf-init"))
                        })
                        .context("fitting collaborative filtering")?;
                    predict_matrix(model, cfg.n_tar, cfg.f_tar)?
                }
                Policy::Tl => {
                    let model = self.tl_model(cfg, &seeds, &training_key, &fit_key).context("fitting transfer learning")?;
                    predict_matrix(model, cfg.n_tar, cfg.f_tar)?
                }
            };
            predictions.push((policy, pred));
        }

        let catalog = cfg.catalog()?;
        let budgets = cfg.storage_budgets();
        let links = cfg.links()?;
        let mut outcomes = Vec::with_capacity(policies.len());
        let mut reports = Vec::with_capacity(policies.len());
        for &policy in &policies {
            let plan: CachePlan<f64> = match policy {
                Policy::Random => place_random(&catalog, &budgets, &mut seeds.rng("random-placement"))?,
                _ => {
                    let pred = &predictions.iter().find(|(p, _)| *p == policy).expect("prediction computed").1;
                    let scores = scores_with_scope(pred, &assoc, cfg.score_scope.into())?;
                    place_greedy(&scores, &catalog, &budgets)?
                }
            };
            let (metrics, report) =
                simulate(&trace, &plan, &links, &catalog).context(format!("simulating the {policy} plan"))?;
            outcomes.push((policy, metrics));
            reports.push((policy, report));
        }
        Ok((digest, outcomes, reports))
    }

    fn tl_model(
        &mut self,
        cfg: &ExperimentConfig,
        seeds: &SeedPlan,
        training_key: &Key,
        fit_key: &Key,
    ) -> Result<&FactorModel<f64>> {
        let source_key = join(&[
            &vec![seeds.base(), cfg.n_d2d() as u64, cfg.crp_rounds as u64, cfg.f_0 as u64],
            &bits(&[cfg.beta]),
        ]);
        let source = self
            .source
            .get_or_try(source_key.clone(), || {
                let crp = CrpConfig { beta: cfg.beta, n_customers: cfg.n_d2d(), n_rounds: cfg.crp_rounds, unseen_contents: cfg.f_0 };
                crp_to_ratings(&crp, &mut seeds.rng("crp"))
            })?
            .clone();

        let corr_key = join(&[
            &vec![seeds.base(), source.n_contents() as u64, source.n_users() as u64, cfg.n_tar as u64, cfg.f_tar as u64],
            &bits(&[cfg.correspondence_ratio]),
        ]);
        let corr = self
            .correspondence
            .get_or_try(corr_key.clone(), || {
                source_correspondence(
                    cfg.correspondence_ratio,
                    (source.n_contents(), cfg.f_tar),
                    (source.n_users(), cfg.n_tar),
                    seeds,
                )
            })?
            .clone();

        let target = &self.training.slot.as_ref().expect("training sampled").1.tl;
        let weights_key = bits(&[cfg.alpha_source, cfg.alpha_target]);
        self.tl
            .get_or_try(join(&[training_key, fit_key, &source_key, &corr_key, &weights_key]), || {
                let model = tl_fit(
                    target,
                    &source,
                    &corr,
                    cfg.tl_weights(),
                    cfg.rank,
                    &cfg.fit_settings(),
                    &mut seeds.rng("tl-init"),
                )?;
                Ok(model.target())
            })
    }
}

/// Correspondence between the overlapping index ranges of source and target;
/// source entities past the target range stay unmapped.
fn source_correspondence(
    ratio: f64,
    (source_contents, target_contents): (usize, usize),
    (source_users, target_users): (usize, usize),
    seeds: &SeedPlan,
) -> Result<CorrespondenceMap> {
    let shared_contents = source_contents.min(target_contents);
    let shared_users = source_users.min(target_users);
    let base = make_correspondence(ratio, shared_contents, shared_users, &mut seeds.rng("correspondence"))?;
    let pad = |map: &[Option<usize>], len: usize| {
        let mut v = map.to_vec();
        v.resize(len, None);
        v
    };
    CorrespondenceMap::new(pad(base.content_map(), source_contents), pad(base.user_map(), source_users))
}

/// Hex SHA-256 over `(slot, user, station, content)` of every request.
pub fn trace_digest(trace: &RequestTrace) -> String {
    let mut h = Sha256::new();
    h.update((trace.horizon() as u64).to_le_bytes());
    for r in trace.requests() {
        for v in [r.slot, r.user, r.station, r.content] {
            h.update((v as u64).to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SweepAxis;

    fn small() -> ExperimentConfig {
        ExperimentConfig { epochs: 60, ..ExperimentConfig::default() }
    }

    #[test]
    fn cached_stages_match_fresh_runs() {
        let base = small();
        let mut realizer = Realizer::default();
        for axis in [SweepAxis::Storage, SweepAxis::Correspondence, SweepAxis::Lambda] {
            for value in [axis.default_grid()[3], axis.default_grid()[9]] {
                let cfg = axis.apply(&base, value);
                assert_eq!(realizer.run(&cfg, 5).unwrap(), run_realization(&cfg, 5).unwrap());
            }
        }
    }

    #[test]
    fn every_policy_shares_one_trace() {
        let r = run_realization(&small(), 3).unwrap();
        let counts: Vec<usize> = r.outcomes.iter().map(|(_, m)| m.requests).collect();
        assert_eq!(r.outcomes.len(), 4);
        assert!(counts.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(r.trace_digest.len(), 64);
    }

    #[test]
    fn zero_storage_makes_policies_identical() {
        let cfg = SweepAxis::Storage.apply(&small(), 0.0);
        let r = run_realization(&cfg, 8).unwrap();
        let first = r.outcomes[0].1;
        assert!(r.outcomes.iter().all(|(_, m)| *m == first));
    }

    #[test]
    fn subset_of_policies() {
        let cfg = ExperimentConfig { policies: vec![Policy::Tl, Policy::Random], ..small() };
        let r = run_realization(&cfg, 1).unwrap();
        assert_eq!(r.outcomes.iter().map(|(p, _)| *p).collect::<Vec<_>>(), vec![Policy::Random, Policy::Tl]);
    }
}
