//! Fixture generators shared by the integration suites.
#![allow(dead_code)]

use edgecache::seed::rng_from_seed;
use edgecache::{
    make_popularity, sample_trace, Association, CachePlan, Catalog, DeliveryReport, LinkBudget, RequestTrace,
    ZipfLaw,
};
use ndarray::Array2;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// A trace at the default network scale with two nested cache plans.
pub struct NestedFixture {
    pub trace: RequestTrace,
    pub links: LinkBudget<f64>,
    pub catalog: Catalog<f64>,
    pub small: CachePlan<f64>,
    pub large: CachePlan<f64>,
}

/// λ ∈ [1, 3], ΣC ∈ [1, 8], 4 stations, 32 users and contents, T = 128; the
/// larger plan adds random contents to the smaller one.
pub fn nested_fixture(seed: u64) -> NestedFixture {
    let mut rng = rng_from_seed(seed);
    let lambda = rng.gen_range(1.0..3.0);
    let sum_c = rng.gen_range(1.0..8.0);
    let zipf = ZipfLaw::new(2.0, 32).unwrap();
    let pop = make_popularity(&zipf, 32, 0.9, &mut rng).unwrap();
    let assoc = Association::uniform(32, 4, &mut rng).unwrap();
    let trace = sample_trace(&pop, &assoc, lambda, 128, &mut rng).unwrap();
    let catalog = Catalog::uniform(32, 1.0, 1.0).unwrap();
    let links = LinkBudget::split(sum_c, 32.0, 4).unwrap();
    let (p_small, p_extra) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5));
    let small = Array2::from_shape_fn((4, 32), |_| rng.gen_bool(p_small));
    let large = Array2::from_shape_fn((4, 32), |(m, f)| small[(m, f)] || rng.gen_bool(p_extra));
    let budgets = vec![32.0; 4];
    NestedFixture {
        trace,
        links,
        small: CachePlan::new(small, budgets.clone(), &catalog).unwrap(),
        large: CachePlan::new(large, budgets, &catalog).unwrap(),
        catalog,
    }
}

/// Upper-tail p-value of a Pearson chi-square statistic.
pub fn chi_square_p(observed: &[f64], expected: &[f64], dof: f64) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

/// Byte-conservation and per-slot capacity violations in a delivery report.
/// Station totals are rebuilt from the per-request rate histories.
pub fn delivery_violations(
    report: &DeliveryReport<f64>,
    links: &LinkBudget<f64>,
    catalog: &Catalog<f64>,
    horizon: usize,
) -> Vec<String> {
    const TOL: f64 = 1e-9;
    let mut out = Vec::new();
    let m = links.n_stations();
    let mut wireless = Array2::<f64>::zeros((m, horizon));
    let mut backhaul = Array2::<f64>::zeros((m, horizon));
    for r in &report.records {
        let id = r.request_id;
        let size = catalog.size(r.content);
        if (r.wireless_rates.iter().sum::<f64>() - r.wireless_mbit).abs() > TOL
            || (r.backhaul_rates.iter().sum::<f64>() - r.backhaul_mbit).abs() > TOL
        {
            out.push(format!("request {id}: rates do not add up to the delivered bits"));
        }
        if r.backhaul_mbit > size + TOL || (r.cached && r.backhaul_mbit != 0.0) {
            out.push(format!("request {id}: backhaul {} Mbit", r.backhaul_mbit));
        }
        match r.completion {
            Some(_) => {
                if (r.wireless_mbit - size).abs() > TOL || (!r.cached && (r.backhaul_mbit - size).abs() > TOL) {
                    out.push(format!("request {id}: completed without exactly L bits"));
                }
            }
            None if r.satisfied => out.push(format!("request {id}: unfinished but satisfied")),
            None => {}
        }
        for (i, (&w, &b)) in r.wireless_rates.iter().zip(&r.backhaul_rates).enumerate() {
            wireless[(r.station, r.arrival + i)] += w;
            backhaul[(r.station, r.arrival + i)] += b;
        }
    }
    for s in 0..m {
        for t in 0..horizon {
            if wireless[(s, t)] > links.wireless(s) + TOL || backhaul[(s, t)] > links.backhaul(s) + TOL {
                out.push(format!("station {s} slot {t}: over capacity"));
            }
        }
    }
    out
}
