//! Key/value summaries and plot tables. Keys are always written in the
//! same order; statistics that cannot be computed are written `undefined`.

use std::fmt::Write as _;

use crate::engine::{SettingA, SettingB, SettingPair, SlotRecord};
use crate::sica::LocalityDiff;
use crate::stats::{
    ch_from_counts, chsh_from_counts, correlator, count_coincidences, singles_at_a, singles_at_b,
    CurvePoint,
};

const SUMMARY_HEADER: &str = "# wqm-summary v1";

fn pair_key(p: SettingPair) -> &'static str {
    match (p.a, p.b) {
        (SettingA::Alpha, SettingB::Beta) => "alpha_beta",
        (SettingA::Alpha, SettingB::BetaPrime) => "alpha_beta_prime",
        (SettingA::AlphaPrime, SettingB::Beta) => "alpha_prime_beta",
        (SettingA::AlphaPrime, SettingB::BetaPrime) => "alpha_prime_beta_prime",
    }
}

fn num<E>(v: Result<f64, E>) -> String {
    match v {
        Ok(x) if x.is_finite() => x.to_string(),
        _ => "undefined".into(),
    }
}

/// Counts, correlators, S, J and singles fractions of a slot log.
pub fn format_summary(records: &[SlotRecord]) -> String {
    let counts = count_coincidences(records);
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("slots", records.len().to_string());
    let zero = records
        .iter()
        .filter(|r| !(r.outcome_a.is_detection() && r.outcome_b.is_detection()))
        .count();
    kv("zero_slots", zero.to_string());

    for p in SettingPair::ALL {
        let c = counts.get(&p).copied().unwrap_or_default();
        let key = pair_key(p);
        kv(&format!("counts.{key}.total"), c.total.to_string());
        kv(&format!("counts.{key}.pp"), c.pp.to_string());
        kv(&format!("counts.{key}.pm"), c.pm.to_string());
        kv(&format!("counts.{key}.mp"), c.mp.to_string());
        kv(&format!("counts.{key}.mm"), c.mm.to_string());
        kv(&format!("counts.{key}.zero"), c.zero.to_string());
    }
    for p in SettingPair::ALL {
        let e = counts
            .get(&p)
            .ok_or(())
            .and_then(|c| correlator(p, c).map_err(|_| ()));
        kv(&format!("e.{}", pair_key(p)), num(e));
    }
    let chsh = chsh_from_counts(&counts);
    kv("s", num(chsh.as_ref().map(|r| r.s)));
    kv("s_sigma", num(chsh.as_ref().map(|r| r.std_error())));
    kv("j", num(ch_from_counts(&counts).map(|r| r.j)));

    let frac = |s: crate::stats::Singles| {
        if s.detections == 0 {
            "undefined".to_string()
        } else {
            s.fraction().to_string()
        }
    };
    kv(
        "singles.a.alpha",
        frac(singles_at_a(records, SettingA::Alpha)),
    );
    kv(
        "singles.a.alpha_prime",
        frac(singles_at_a(records, SettingA::AlphaPrime)),
    );
    kv(
        "singles.b.beta",
        frac(singles_at_b(records, SettingB::Beta)),
    );
    kv(
        "singles.b.beta_prime",
        frac(singles_at_b(records, SettingB::BetaPrime)),
    );
    format!("{SUMMARY_HEADER}\n{out}")
}

/// Tab-separated `(Δ, rate with contextual instruction, rate without,
/// cos²Δ/2)` table.
pub fn format_scan(points: &[CurvePoint]) -> String {
    let mut out =
        String::from("# wqm-scan v1\ndelta\trate_contextual_on\trate_contextual_off\tcos2_half\n");
    for p in points {
        let qm = p.delta.cos().powi(2) / 2.0;
        writeln!(out, "{}\t{}\t{}\t{qm:.6}", p.delta, p.rate_on, p.rate_off).unwrap();
    }
    out
}

/// Slots whose outcome at the fixed-setting station changed, with the
/// outcome before and after.
pub fn format_diff(diff: &LocalityDiff, original: &[SlotRecord], replay: &[SlotRecord]) -> String {
    let mut out = String::from("# wqm-diff v1\n");
    writeln!(out, "fixed_station = {}", diff.fixed_station).unwrap();
    writeln!(out, "changed_slots = {}", diff.slots.len()).unwrap();
    let mut i = 0;
    for &slot in &diff.slots {
        while original[i].slot != slot {
            i += 1;
        }
        writeln!(
            out,
            "{slot}\t{}\t{}",
            original[i].outcome(diff.fixed_station),
            replay[i].outcome(diff.fixed_station)
        )
        .unwrap();
    }
    out
}
