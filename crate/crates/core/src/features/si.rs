//! Per-address statistical indicators: amount (PAI), degree (PDI), time
//! (PTI) and their combinations (CI), plus merged-edge re-evaluations.
//!
//! An *event* is one incident edge of the address: an in-event receives
//! value (`tx -> address`), an out-event spends it (`address -> tx`).
//! Events are ordered by timestamp, then edge id. Sums are taken in integer
//! satoshi and converted to BTC on emission. A zero denominator or an empty
//! series yields 0, and standard deviations are population deviations.

use crate::error::Result;
use crate::features::manifest::{si_ids, CI_IDS, MERGED_IDS, PAI_IDS, PDI_IDS, PTI_IDS, SI_LEN};
use crate::features::stats::{ratio, Stats};
use crate::graph::{NodeId, TxGraph};

pub const SATS_PER_BTC: f64 = 100_000_000.0;
pub const SECONDS_PER_DAY: u64 = 86_400;

/// Ordered `(id, value)` pairs for one indicator family.
pub type FeatureMap = Vec<(&'static str, f64)>;

pub fn btc(sats: u64) -> f64 {
    sats as f64 / SATS_PER_BTC
}

fn signed_btc(sats: i128) -> f64 {
    sats as f64 / SATS_PER_BTC
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub incoming: bool,
    pub sats: u64,
    pub timestamp: u64,
}

/// Incident edges of `node` as chronologically ordered events.
pub fn events(g: &TxGraph, node: NodeId) -> Vec<Event> {
    let mut keyed: Vec<(u64, u32, Event)> = g
        .incident_edges(node)
        .into_iter()
        .map(|id| {
            let e = g.edge(id);
            let ev = Event {
                incoming: e.target == node,
                sats: e.attr.amount_sats,
                timestamp: e.attr.timestamp,
            };
            (ev.timestamp, id.0, ev)
        })
        .collect();
    keyed.sort_unstable_by_key(|&(ts, id, _)| (ts, id));
    keyed.into_iter().map(|(_, _, ev)| ev).collect()
}

/// Amount series of one address, split by direction.
#[derive(Debug, Clone, Default)]
pub struct AmountSeries {
    pub incoming: Vec<u64>,
    pub outgoing: Vec<u64>,
}

impl AmountSeries {
    pub fn from_events(events: &[Event]) -> Self {
        let mut s = AmountSeries::default();
        for e in events {
            if e.incoming {
                s.incoming.push(e.sats);
            } else {
                s.outgoing.push(e.sats);
            }
        }
        s
    }

    pub fn total_in(&self) -> u64 {
        self.incoming.iter().sum()
    }

    pub fn total_out(&self) -> u64 {
        self.outgoing.iter().sum()
    }
}

fn btc_series(sats: &[u64]) -> Vec<f64> {
    sats.iter().map(|&s| btc(s)).collect()
}

fn shares(sats: &[u64], total: u64) -> Vec<f64> {
    if total == 0 {
        return vec![0.0; sats.len()];
    }
    sats.iter().map(|&s| s as f64 / total as f64).collect()
}

fn range_sats(sats: &[u64]) -> u64 {
    match (sats.iter().max(), sats.iter().min()) {
        (Some(max), Some(min)) => max - min,
        _ => 0,
    }
}

fn pai_values(events: &[Event]) -> [f64; 21] {
    let s = AmountSeries::from_events(events);
    let (tin, tout) = (s.total_in(), s.total_out());
    let ins = Stats::of(&btc_series(&s.incoming));
    let outs = Stats::of(&btc_series(&s.outgoing));
    let all: Vec<f64> = events.iter().map(|e| btc(e.sats)).collect();
    let (rin, rout) = (range_sats(&s.incoming), range_sats(&s.outgoing));
    let share_in = Stats::of(&shares(&s.incoming, tin));
    let share_out = Stats::of(&shares(&s.outgoing, tout));
    [
        btc(tin),
        btc(tout),
        signed_btc(tin as i128 - tout as i128),
        ratio(tin as f64, tout as f64),
        ins.min,
        ins.max,
        outs.min,
        outs.max,
        btc(rin),
        btc(rout),
        ratio(rin as f64, tin as f64),
        ratio(rout as f64, tout as f64),
        ins.std,
        outs.std,
        Stats::of(&all).std,
        share_in.min,
        share_in.max,
        share_out.min,
        share_out.max,
        share_in.std,
        share_out.std,
    ]
}

fn pdi_values(g: &TxGraph, node: NodeId) -> [f64; 7] {
    let din = g.in_edges(node).len() as f64;
    let dout = g.out_edges(node).len() as f64;
    let dall = din + dout;
    [
        din,
        dout,
        dall,
        ratio(din, dall),
        ratio(dout, dall),
        ratio(din, dout),
        din - dout,
    ]
}

/// One UTC day on which the address had at least one event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActiveDay {
    pub day: u64,
    pub in_sats: u64,
    pub out_sats: u64,
    pub in_degree: u64,
    pub out_degree: u64,
    pub last_timestamp: u64,
}

impl ActiveDay {
    pub fn events(&self) -> u64 {
        self.in_degree + self.out_degree
    }
}

/// Time structure of an address's events.
#[derive(Debug, Clone, Default)]
pub struct ActivityCalendar {
    pub first: u64,
    pub last: u64,
    pub days: Vec<ActiveDay>,
    /// Chronological gaps between consecutive events, in seconds.
    pub gaps: Vec<u64>,
}

impl ActivityCalendar {
    pub fn from_events(events: &[Event]) -> Self {
        let (Some(first), Some(last)) = (events.first(), events.last()) else {
            return ActivityCalendar::default();
        };
        let mut days: Vec<ActiveDay> = Vec::new();
        for e in events {
            let day = e.timestamp / SECONDS_PER_DAY;
            if days.last().map(|d| d.day) != Some(day) {
                days.push(ActiveDay {
                    day,
                    ..ActiveDay::default()
                });
            }
            let d = days.last_mut().expect("pushed above");
            if e.incoming {
                d.in_sats += e.sats;
                d.in_degree += 1;
            } else {
                d.out_sats += e.sats;
                d.out_degree += 1;
            }
            d.last_timestamp = e.timestamp;
        }
        let gaps = events
            .windows(2)
            .map(|w| w[1].timestamp - w[0].timestamp)
            .collect();
        ActivityCalendar {
            first: first.timestamp,
            last: last.timestamp,
            days,
            gaps,
        }
    }

    /// Fractional days between first and last event.
    pub fn life_days(&self) -> f64 {
        (self.last - self.first) as f64 / SECONDS_PER_DAY as f64
    }

    pub fn active_days(&self) -> usize {
        self.days.len()
    }
}

fn pti_values(cal: &ActivityCalendar) -> [f64; 13] {
    let life = cal.life_days();
    let active = cal.active_days() as f64;
    let per_day: Vec<f64> = cal.days.iter().map(|d| d.events() as f64).collect();
    let counts = Stats::of(&per_day);
    let gaps: Vec<f64> = cal.gaps.iter().map(|&g| g as f64).collect();
    let gap = Stats::of(&gaps);
    [
        life,
        active,
        ratio(active, life),
        counts.min,
        counts.max,
        counts.avg,
        counts.max - counts.min,
        counts.std,
        gap.min,
        gap.max,
        gap.avg,
        gap.max - gap.min,
        gap.std,
    ]
}

fn per_gap(events: &[Event], f: impl Fn(&Event, f64) -> f64) -> Vec<f64> {
    events
        .windows(2)
        .map(|w| {
            let gap = (w[1].timestamp - w[0].timestamp) as f64;
            if gap == 0.0 {
                0.0
            } else {
                f(&w[1], gap)
            }
        })
        .collect()
}

fn ci_values(events: &[Event], pai: &[f64; 21], pdi: &[f64; 7], cal: &ActivityCalendar) -> Vec<f64> {
    let life = cal.life_days();
    let over_life = |xs: &[f64]| -> Vec<f64> { xs.iter().map(|&x| ratio(x, life)).collect() };

    let day_in: Vec<f64> = cal.days.iter().map(|d| btc(d.in_sats)).collect();
    let day_out: Vec<f64> = cal.days.iter().map(|d| btc(d.out_sats)).collect();
    let deg_in: Vec<f64> = cal.days.iter().map(|d| d.in_degree as f64).collect();
    let deg_out: Vec<f64> = cal.days.iter().map(|d| d.out_degree as f64).collect();
    let deg_all: Vec<f64> = cal.days.iter().map(|d| d.events() as f64).collect();

    let amount_rate_in = per_gap(events, |e, gap| if e.incoming { btc(e.sats) / gap } else { 0.0 });
    let amount_rate_out = per_gap(events, |e, gap| if e.incoming { 0.0 } else { btc(e.sats) / gap });
    let degree_rate_in = per_gap(events, |e, gap| if e.incoming { 1.0 / gap } else { 0.0 });
    let degree_rate_out = per_gap(events, |e, gap| if e.incoming { 0.0 } else { 1.0 / gap });
    let degree_accel_in = per_gap(events, |e, gap| if e.incoming { 1.0 / gap / gap } else { 0.0 });
    let degree_accel_out = per_gap(events, |e, gap| if e.incoming { 0.0 } else { 1.0 / gap / gap });

    // cumulative amount-per-edge through each active day, over elapsed days
    let (mut cin, mut cout, mut din, mut dout) = (0u64, 0u64, 0u64, 0u64);
    let mut ra3_in = Vec::with_capacity(cal.days.len());
    let mut ra3_out = Vec::with_capacity(cal.days.len());
    for d in &cal.days {
        cin += d.in_sats;
        cout += d.out_sats;
        din += d.in_degree;
        dout += d.out_degree;
        let elapsed = (d.last_timestamp - cal.first) as f64 / SECONDS_PER_DAY as f64;
        ra3_in.push(ratio(ratio(btc(cin), din as f64), elapsed));
        ra3_out.push(ratio(ratio(btc(cout), dout as f64), elapsed));
    }

    let a_in = Stats::of(&day_in);
    let a_out = Stats::of(&day_out);
    let r_in = Stats::of(&over_life(&day_in));
    let r_out = Stats::of(&over_life(&day_out));
    let ar_in = Stats::of(&amount_rate_in);
    let ar_out = Stats::of(&amount_rate_out);
    let d_in = Stats::of(&deg_in);
    let d_out = Stats::of(&deg_out);
    let v_in = Stats::of(&over_life(&deg_in));
    let v_out = Stats::of(&over_life(&deg_out));
    let v_all = Stats::of(&over_life(&deg_all));
    let dr_in = Stats::of(&degree_rate_in);
    let dr_out = Stats::of(&degree_rate_out);
    let ra3i = Stats::of(&ra3_in);
    let ra3o = Stats::of(&ra3_out);
    let ra4i = Stats::of(&degree_accel_in);
    let ra4o = Stats::of(&degree_accel_out);

    let (total_in, total_out) = (pai[0], pai[1]);
    let (deg_in_total, deg_out_total) = (pdi[0], pdi[1]);
    let values = vec![
        ratio(total_in, deg_in_total),
        ratio(total_out, deg_out_total),
        ratio(pai[2], pdi[6]),
        a_in.avg, a_out.avg,
        a_in.min, a_in.max, a_out.min, a_out.max,
        r_in.avg, r_out.avg,
        r_in.min, r_in.max, r_out.min, r_out.max,
        r_in.std, r_out.std,
        ar_in.avg, ar_out.avg,
        ar_in.min, ar_in.max, ar_out.min, ar_out.max,
        ar_in.std, ar_out.std,
        d_in.avg, d_out.avg,
        d_in.min, d_in.max, d_out.min, d_out.max,
        v_in.avg, v_out.avg, v_all.avg,
        v_in.min, v_in.max, v_out.min, v_out.max, v_all.min, v_all.max,
        v_in.std, v_out.std, v_all.std,
        dr_in.avg, dr_out.avg,
        dr_in.min, dr_in.max, dr_out.min, dr_out.max,
        dr_in.std, dr_out.std,
        ra3i.avg, ra3i.min, ra3i.max, ra3i.std,
        ra3o.avg, ra3o.min, ra3o.max, ra3o.std,
        ra4i.avg, ra4i.min, ra4i.max, ra4i.std,
        ra4o.avg, ra4o.min, ra4o.max, ra4o.std,
    ];
    debug_assert_eq!(values.len(), CI_IDS.len());
    values
}

fn zip(ids: &[&'static str], values: &[f64]) -> FeatureMap {
    ids.iter()
        .zip(values)
        .map(|(&id, &v)| (id, finite(v)))
        .collect()
}

fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

pub fn compute_pai(g: &TxGraph, address: &str) -> Result<FeatureMap> {
    let node = g.address(address)?;
    Ok(zip(&PAI_IDS, &pai_values(&events(g, node))))
}

pub fn compute_pdi(g: &TxGraph, address: &str) -> Result<FeatureMap> {
    let node = g.address(address)?;
    Ok(zip(&PDI_IDS, &pdi_values(g, node)))
}

pub fn compute_pti(g: &TxGraph, address: &str) -> Result<FeatureMap> {
    let node = g.address(address)?;
    let cal = ActivityCalendar::from_events(&events(g, node));
    Ok(zip(&PTI_IDS, &pti_values(&cal)))
}

pub fn compute_ci(g: &TxGraph, address: &str) -> Result<FeatureMap> {
    let node = g.address(address)?;
    let ev = events(g, node);
    let cal = ActivityCalendar::from_events(&ev);
    let values = ci_values(&ev, &pai_values(&ev), &pdi_values(g, node), &cal);
    Ok(zip(&CI_IDS, &values))
}

/// The 132 statistical indicators of one address, in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct SiFeatures {
    values: Vec<f64>,
}

impl SiFeatures {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        si_ids().iter().position(|&i| i == id).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        si_ids().into_iter().zip(self.values.iter().copied())
    }
}

/// All statistical indicators for `address`. `merged` must be
/// `g.merge_parallel_edges()`; it supplies the `-R` columns.
pub fn compute_si(g: &TxGraph, merged: &TxGraph, address: &str) -> Result<SiFeatures> {
    let node = g.address(address)?;
    let merged_node = merged.address(address)?;
    Ok(si_for_nodes(g, node, merged, merged_node))
}

pub(crate) fn si_for_nodes(g: &TxGraph, node: NodeId, merged: &TxGraph, merged_node: NodeId) -> SiFeatures {
    let ev = events(g, node);
    let cal = ActivityCalendar::from_events(&ev);
    let pai = pai_values(&ev);
    let pdi = pdi_values(g, node);
    let pti = pti_values(&cal);
    let ci = ci_values(&ev, &pai, &pdi, &cal);
    let merged_pai = pai_values(&events(merged, merged_node));
    let merged_pdi = pdi_values(merged, merged_node);

    let mut values = Vec::with_capacity(SI_LEN);
    values.extend(pai);
    values.extend(pdi);
    values.extend(pti);
    values.extend(ci);
    values.extend(merged_pai);
    values.extend(&merged_pdi[..3]);
    debug_assert_eq!(values.len(), SI_LEN);
    debug_assert_eq!(MERGED_IDS.len(), 24);
    for v in &mut values {
        *v = finite(*v);
    }
    SiFeatures { values }
}
