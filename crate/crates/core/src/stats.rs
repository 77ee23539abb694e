//! Estimators over outcome series: coincidence counts, correlators, the
//! CHSH and CH parameters, singles fractions and the coincidence-rate
//! scan versus analyzer angle difference.
//!
//! Every pairing is estimated on its own slots and normalised by its own
//! count, since in a real log the four setting pairs never share slots.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{
    run, Angles, EngineError, RunConfig, RunLog, SettingA, SettingB, SettingPair, SettingsSchedule,
    SlotRecord, Station,
};
use crate::model::Outcome;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("no ±1 coincidences at pairing {0}; correlator undefined")]
    UndefinedCorrelator(SettingPair),
    #[error("setting pair {0} never measured")]
    MissingPairing(SettingPair),
    #[error("scan needs at least one angle difference")]
    EmptyScan,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Joint outcome tallies of one setting pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoincidenceCounts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
    /// Slots where at least one station recorded 0.
    pub zero: u64,
    pub total: u64,
}

impl CoincidenceCounts {
    pub fn add(&mut self, a: Outcome, b: Outcome) {
        self.total += 1;
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.pp += 1,
            (Outcome::Plus, Outcome::Minus) => self.pm += 1,
            (Outcome::Minus, Outcome::Plus) => self.mp += 1,
            (Outcome::Minus, Outcome::Minus) => self.mm += 1,
            _ => self.zero += 1,
        }
    }

    /// Slots where both stations gave ±1.
    pub fn coincidences(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }

    /// `Σ a·b` over the ±1 coincidences.
    pub fn product_sum(&self) -> i64 {
        (self.pp + self.mm) as i64 - (self.pm + self.mp) as i64
    }
}

/// `E = (N++ + N-- - N+- - N-+) / (N++ + N-- + N+- + N-+)`.
pub fn correlator(pair: SettingPair, counts: &CoincidenceCounts) -> Result<f64, StatsError> {
    match counts.coincidences() {
        0 => Err(StatsError::UndefinedCorrelator(pair)),
        n => Ok(counts.product_sum() as f64 / n as f64),
    }
}

/// Partitions slots by the setting pair applied and tallies joint outcomes.
pub fn count_coincidences(records: &[SlotRecord]) -> BTreeMap<SettingPair, CoincidenceCounts> {
    let mut map: BTreeMap<SettingPair, CoincidenceCounts> = BTreeMap::new();
    for r in records {
        map.entry(r.pair())
            .or_default()
            .add(r.outcome_a, r.outcome_b);
    }
    map
}

fn lookup(
    counts: &BTreeMap<SettingPair, CoincidenceCounts>,
    pair: SettingPair,
) -> Result<CoincidenceCounts, StatsError> {
    counts
        .get(&pair)
        .copied()
        .ok_or(StatsError::MissingPairing(pair))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChshResult {
    /// Correlators in [`SettingPair::ALL`] order.
    pub correlators: [f64; 4],
    pub counts: [CoincidenceCounts; 4],
    pub s: f64,
}

impl ChshResult {
    pub fn e(&self, pair: SettingPair) -> f64 {
        let i = SettingPair::ALL.iter().position(|&p| p == pair).unwrap();
        self.correlators[i]
    }

    /// Binomial standard error of `S`, from `Var(E) = (1 - E²)/n` per pairing.
    pub fn std_error(&self) -> f64 {
        self.correlators
            .iter()
            .zip(&self.counts)
            .map(|(e, c)| (1.0 - e * e) / c.coincidences() as f64)
            .sum::<f64>()
            .sqrt()
    }
}

/// `S = |E(α,β) − E(α,β′)| + |E(α′,β) + E(α′,β′)|`.
pub fn chsh_from_counts(
    counts: &BTreeMap<SettingPair, CoincidenceCounts>,
) -> Result<ChshResult, StatsError> {
    let mut c = [CoincidenceCounts::default(); 4];
    let mut e = [0.0; 4];
    for (k, &pair) in SettingPair::ALL.iter().enumerate() {
        c[k] = lookup(counts, pair)?;
        e[k] = correlator(pair, &c[k])?;
    }
    let [e_ab, e_abp, e_apb, e_apbp] = e;
    Ok(ChshResult {
        correlators: e,
        counts: c,
        s: (e_ab - e_abp).abs() + (e_apb + e_apbp).abs(),
    })
}

pub fn chsh(log: &RunLog) -> Result<ChshResult, StatsError> {
    chsh_from_counts(&count_coincidences(&log.records))
}

/// CH parameter on the "+1" detectors only, every term a per-pairing
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChResult {
    pub j: f64,
    pub p_ab: f64,
    pub p_ab_prime: f64,
    pub p_a_prime_b: f64,
    pub p_a_prime_b_prime: f64,
    /// Frequency of +1 at A over all slots with setting α.
    pub p_a: f64,
    /// Frequency of +1 at B over all slots with setting β.
    pub p_b: f64,
}

/// `J = P(ab) + P(ab′) + P(a′b) − P(a′b′) − P(a) − P(b)` with outcomes
/// re-encoded as +1 → 1, anything else → 0.
pub fn ch_from_counts(
    counts: &BTreeMap<SettingPair, CoincidenceCounts>,
) -> Result<ChResult, StatsError> {
    let joint = |pair| -> Result<f64, StatsError> {
        let c = lookup(counts, pair)?;
        Ok(c.pp as f64 / c.total as f64)
    };
    let ab = lookup(counts, SettingPair::ALPHA_BETA)?;
    let abp = lookup(counts, SettingPair::ALPHA_BETA_PRIME)?;
    let apb = lookup(counts, SettingPair::ALPHA_PRIME_BETA)?;
    let a_plus = (ab.pp + ab.pm + abp.pp + abp.pm) as f64;
    let b_plus = (ab.pp + ab.mp + apb.pp + apb.mp) as f64;

    let p_ab = joint(SettingPair::ALPHA_BETA)?;
    let p_ab_prime = joint(SettingPair::ALPHA_BETA_PRIME)?;
    let p_a_prime_b = joint(SettingPair::ALPHA_PRIME_BETA)?;
    let p_a_prime_b_prime = joint(SettingPair::ALPHA_PRIME_BETA_PRIME)?;
    let p_a = a_plus / (ab.total + abp.total) as f64;
    let p_b = b_plus / (ab.total + apb.total) as f64;
    Ok(ChResult {
        j: p_ab + p_ab_prime + p_a_prime_b - p_a_prime_b_prime - p_a - p_b,
        p_ab,
        p_ab_prime,
        p_a_prime_b,
        p_a_prime_b_prime,
        p_a,
        p_b,
    })
}

pub fn ch(log: &RunLog) -> Result<ChResult, StatsError> {
    ch_from_counts(&count_coincidences(&log.records))
}

/// Share of +1 among the detections of one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singles {
    pub plus: u64,
    pub detections: u64,
}

impl Singles {
    pub fn fraction(&self) -> f64 {
        self.plus as f64 / self.detections as f64
    }

    /// Binomial sigma of the fraction around 1/2.
    pub fn sigma(&self) -> f64 {
        (0.25 / self.detections as f64).sqrt()
    }
}

pub fn singles<'a>(records: impl IntoIterator<Item = &'a SlotRecord>, station: Station) -> Singles {
    let mut s = Singles {
        plus: 0,
        detections: 0,
    };
    for r in records {
        let o = r.outcome(station);
        s.detections += o.is_detection() as u64;
        s.plus += (o == Outcome::Plus) as u64;
    }
    s
}

/// Singles of `station` restricted to slots where its own setting is `setting`.
pub fn singles_at_a(records: &[SlotRecord], setting: SettingA) -> Singles {
    singles(
        records.iter().filter(|r| r.setting_a == setting),
        Station::A,
    )
}

pub fn singles_at_b(records: &[SlotRecord], setting: SettingB) -> Singles {
    singles(
        records.iter().filter(|r| r.setting_b == setting),
        Station::B,
    )
}

/// One point of the coincidence-rate scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub delta: f64,
    /// `N++ / N` with the contextual instruction.
    pub rate_on: f64,
    /// `N++ / N` without it.
    pub rate_off: f64,
}

/// Runs `base` at `β = α + Δ` for every `Δ`, with and without the contextual
/// instruction, each run on its own seed derived from the base seed.
pub fn curve_scan(base: &RunConfig, deltas: &[f64]) -> Result<Vec<CurvePoint>, StatsError> {
    if deltas.is_empty() {
        return Err(StatsError::EmptyScan);
    }
    deltas
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| {
            let alpha = base.angles.alpha;
            let mut cfg = base.clone();
            cfg.angles = Angles::new(alpha, alpha, alpha + delta, alpha + delta);
            cfg.schedule = SettingsSchedule::constant(cfg.n_slots, SettingPair::ALPHA_BETA);
            let rate = |contextual: bool, k: u64| -> Result<f64, StatsError> {
                let mut c = cfg.clone().with_contextual(contextual);
                c.source.seed = base.source.seed.wrapping_add(2 * i as u64 + k);
                let log = run(&c)?;
                let pp = log
                    .records
                    .iter()
                    .filter(|r| r.outcome_a == Outcome::Plus && r.outcome_b == Outcome::Plus)
                    .count();
                Ok(pp as f64 / log.records.len() as f64)
            };
            Ok(CurvePoint {
                delta,
                rate_on: rate(true, 0)?,
                rate_off: rate(false, 1)?,
            })
        })
        .collect()
}
