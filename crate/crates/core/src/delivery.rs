//! Slot-based delivery of a request trace under a fixed cache plan.
//!
//! Time advances in 1 s slots. In every slot each station splits its wireless
//! capacity equally among its active requests; requests for uncached contents
//! are additionally capped by an equal share of the station's backhaul, which
//! relays exactly the bits delivered over the air in the same slot.

use std::io::Write;

use crate::demand::{Catalog, RequestTrace};
use crate::error::{Error, Result};
use crate::placement::CachePlan;
use crate::scalar::Scalar;

/// Per-station backhaul capacity `C_m` and wireless capacity `C'_m`, in Mbit/s.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget<T> {
    backhaul: Vec<T>,
    wireless: Vec<T>,
}

impl<T: Scalar> LinkBudget<T> {
    pub fn new(backhaul: Vec<T>, wireless: Vec<T>) -> Result<Self> {
        if backhaul.is_empty() || backhaul.len() != wireless.len() {
            return Err(Error::invalid("one backhaul and one wireless capacity per station"));
        }
        let positive = |c: &T| *c > T::zero() && c.is_finite();
        if !backhaul.iter().all(positive) || !wireless.iter().all(positive) {
            return Err(Error::invalid("link capacities must be positive and finite"));
        }
        let n = T::of_usize(backhaul.len());
        let mean_backhaul = backhaul.iter().copied().sum::<T>() / n;
        let mean_wireless = wireless.iter().copied().sum::<T>() / n;
        if !(mean_backhaul < mean_wireless) {
            return Err(Error::invalid(format!(
                "mean backhaul capacity {mean_backhaul} must be below mean wireless capacity {mean_wireless}"
            )));
        }
        Ok(Self { backhaul, wireless })
    }

    /// Splits network totals equally over `n_stations`.
    pub fn split(total_backhaul: T, total_wireless: T, n_stations: usize) -> Result<Self> {
        if n_stations == 0 {
            return Err(Error::invalid("need at least one station"));
        }
        let n = T::of_usize(n_stations);
        Self::new(vec![total_backhaul / n; n_stations], vec![total_wireless / n; n_stations])
    }

    pub fn n_stations(&self) -> usize {
        self.backhaul.len()
    }

    pub fn backhaul(&self, station: usize) -> T {
        self.backhaul[station]
    }

    pub fn wireless(&self, station: usize) -> T {
        self.wireless[station]
    }
}

/// Delivery history of one request.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestRecord<T> {
    pub request_id: usize,
    pub content: usize,
    pub station: usize,
    pub cached: bool,
    /// Arrival slot `τ`.
    pub arrival: usize,
    /// End of the slot in which the last bit arrived (`τ'`), if it did.
    pub completion: Option<usize>,
    /// Backhaul rate `R_d(t)` for `t = arrival, arrival + 1, …` while active.
    pub backhaul_rates: Vec<T>,
    /// Wireless rate `R'_d(t)` over the same slots.
    pub wireless_rates: Vec<T>,
    pub backhaul_mbit: T,
    pub wireless_mbit: T,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeliveryReport<T> {
    pub records: Vec<RequestRecord<T>>,
}

impl<T: Scalar> DeliveryReport<T> {
    /// Writes the per-request CSV
    /// `request_id,content,station,arrival,completion,satisfied,backhaul_mbit`.
    /// Unfinished requests have an empty completion field.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["request_id", "content", "station", "arrival", "completion", "satisfied", "backhaul_mbit"])?;
        for r in &self.records {
            w.write_record([
                r.request_id.to_string(),
                r.content.to_string(),
                r.station.to_string(),
                r.arrival.to_string(),
                r.completion.map(|c| c.to_string()).unwrap_or_default(),
                r.satisfied.to_string(),
                r.backhaul_mbit.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Satisfaction ratio `η` and backhaul load `ρ` over all `D` requests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics<T> {
    pub satisfaction_ratio: T,
    pub backhaul_load: T,
    pub requests: usize,
    /// Set when the trace was empty; both ratios are then reported as 0.
    pub degenerate: bool,
}

impl<T: Scalar> Metrics<T> {
    pub fn from_records(records: &[RequestRecord<T>], catalog: &Catalog<T>) -> Self {
        if records.is_empty() {
            return Self { satisfaction_ratio: T::zero(), backhaul_load: T::zero(), requests: 0, degenerate: true };
        }
        let d = T::of_usize(records.len());
        let satisfied = records.iter().filter(|r| r.satisfied).count();
        let load = records
            .iter()
            .map(|r| r.backhaul_mbit / catalog.size(r.content))
            .fold(T::zero(), |a, v| a + v);
        Self {
            satisfaction_ratio: T::of_usize(satisfied) / d,
            backhaul_load: load / d,
            requests: records.len(),
            degenerate: false,
        }
    }

    pub fn offload(&self) -> T {
        T::one() - self.backhaul_load
    }
}

/// Backhaul offloading gain `ρ_b − ρ_a` and satisfaction gain `η_a − η_b`
/// of policy `a` over policy `b`.
pub fn offloading_gain<T: Scalar>(a: &Metrics<T>, b: &Metrics<T>) -> (T, T) {
    (b.backhaul_load - a.backhaul_load, a.satisfaction_ratio - b.satisfaction_ratio)
}

struct Active<T> {
    record: usize,
    remaining: T,
}

/// Replays `trace` against `plan` until the trace horizon.
///
/// Requests still unfinished at the horizon count as unsatisfied and
/// contribute the backhaul bits they actually consumed.
pub fn simulate<T: Scalar>(
    trace: &RequestTrace,
    plan: &CachePlan<T>,
    links: &LinkBudget<T>,
    catalog: &Catalog<T>,
) -> Result<(Metrics<T>, DeliveryReport<T>)> {
    let n_stations = links.n_stations();
    if plan.n_stations() != n_stations || plan.n_contents() != catalog.len() {
        return Err(Error::invalid("plan, links and catalog dimensions disagree"));
    }
    if let Some(r) = trace
        .requests()
        .iter()
        .find(|r| r.station >= n_stations || r.content >= catalog.len())
    {
        return Err(Error::invalid(format!(
            "request for content {} at station {} is out of range",
            r.content, r.station
        )));
    }
    let eps = T::of(1e-9);
    let mut records: Vec<RequestRecord<T>> = trace
        .requests()
        .iter()
        .enumerate()
        .map(|(request_id, r)| RequestRecord {
            request_id,
            content: r.content,
            station: r.station,
            cached: plan.is_cached(r.station, r.content),
            arrival: r.slot,
            completion: None,
            backhaul_rates: Vec::new(),
            wireless_rates: Vec::new(),
            backhaul_mbit: T::zero(),
            wireless_mbit: T::zero(),
            satisfied: false,
        })
        .collect();

    let mut active: Vec<Vec<Active<T>>> = (0..n_stations).map(|_| Vec::new()).collect();
    let mut next = 0;
    for slot in 0..trace.horizon() {
        while next < records.len() && records[next].arrival == slot {
            let size = catalog.size(records[next].content);
            active[records[next].station].push(Active { record: next, remaining: size });
            next += 1;
        }
        for (m, requests) in active.iter_mut().enumerate() {
            if requests.is_empty() {
                continue;
            }
            let uncached = requests.iter().filter(|a| !records[a.record].cached).count();
            let wireless_share = links.wireless(m) / T::of_usize(requests.len());
            let backhaul_share = if uncached > 0 {
                links.backhaul(m) / T::of_usize(uncached)
            } else {
                T::zero()
            };
            for a in requests.iter_mut() {
                let rec = &mut records[a.record];
                let mut rate = a.remaining.min(wireless_share);
                if !rec.cached {
                    rate = rate.min(backhaul_share);
                }
                let relayed = if rec.cached { T::zero() } else { rate };
                rec.wireless_rates.push(rate);
                rec.backhaul_rates.push(relayed);
                rec.wireless_mbit = rec.wireless_mbit + rate;
                rec.backhaul_mbit = rec.backhaul_mbit + relayed;
                a.remaining = a.remaining - rate;
                let size = catalog.size(rec.content);
                if a.remaining <= eps * size {
                    a.remaining = T::zero();
                    let completion = slot + 1;
                    rec.completion = Some(completion);
                    let duration = T::of_usize(completion - rec.arrival);
                    rec.satisfied = size / duration >= catalog.bitrate(rec.content);
                }
            }
            requests.retain(|a| a.remaining > T::zero());
        }
    }
    let metrics = Metrics::from_records(&records, catalog);
    Ok((metrics, DeliveryReport { records }))
}
