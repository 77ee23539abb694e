//! Time-stamp series: one tab-separated line per slot,
//! `slot  setting_a  setting_b  a  b`, after a version header.

use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, IoError};
use crate::engine::{SettingA, SettingB, SlotRecord};
use crate::model::Outcome;

pub const TSV_HEADER: &str = "# wqm-tsv v1";

pub fn format_tsv(records: &[SlotRecord]) -> String {
    let mut out = String::with_capacity(24 * records.len() + 16);
    out.push_str(TSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.slot,
            r.setting_a.label(),
            r.setting_b.label(),
            r.outcome_a,
            r.outcome_b
        )
        .unwrap();
    }
    out
}

fn parse_outcome(s: &str) -> Option<Outcome> {
    match s {
        "+1" => Some(Outcome::Plus),
        "-1" => Some(Outcome::Minus),
        "0" => Some(Outcome::Zero),
        _ => None,
    }
}

pub fn parse_tsv(text: &str) -> Result<Vec<SlotRecord>, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, TSV_HEADER)) => {}
        _ => return Err(IoError::parse(1, format!("expected header `{TSV_HEADER}`"))),
    }
    let mut records: Vec<SlotRecord> = Vec::new();
    for (no, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(IoError::parse(
                no,
                format!("expected 5 fields, found {}", f.len()),
            ));
        }
        let slot: u64 = f[0]
            .parse()
            .map_err(|_| IoError::parse(no, format!("bad slot `{}`", f[0])))?;
        if let Some(prev) = records.last() {
            if slot <= prev.slot {
                return Err(IoError::parse(
                    no,
                    format!("slot {slot} does not follow {}", prev.slot),
                ));
            }
        }
        let setting_a = match f[1] {
            "alpha" => SettingA::Alpha,
            "alpha'" => SettingA::AlphaPrime,
            s => return Err(IoError::parse(no, format!("bad A setting `{s}`"))),
        };
        let setting_b = match f[2] {
            "beta" => SettingB::Beta,
            "beta'" => SettingB::BetaPrime,
            s => return Err(IoError::parse(no, format!("bad B setting `{s}`"))),
        };
        let outcome = |s: &str| {
            parse_outcome(s).ok_or_else(|| IoError::parse(no, format!("bad outcome `{s}`")))
        };
        records.push(SlotRecord {
            slot,
            setting_a,
            setting_b,
            outcome_a: outcome(f[3])?,
            outcome_b: outcome(f[4])?,
        });
    }
    Ok(records)
}

pub fn read_tsv(path: &Path) -> Result<Vec<SlotRecord>, IoError> {
    parse_tsv(&read_file(path)?).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, Angles, RunConfig, SettingsSchedule};
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let r = SlotRecord {
            slot: 3,
            setting_a: SettingA::AlphaPrime,
            setting_b: SettingB::Beta,
            outcome_a: Outcome::Minus,
            outcome_b: Outcome::Zero,
        };
        assert_eq!(format_tsv(&[r]), "# wqm-tsv v1\n3\talpha'\tbeta\t-1\t0\n");
        assert_eq!(format_tsv(&[]), "# wqm-tsv v1\n");
    }

    #[test]
    fn simulated_log_round_trips() {
        let cfg = RunConfig::new(500, Angles::new(0.0, 0.8, 0.4, 1.2), 3)
            .with_schedule(SettingsSchedule::random(500, 3));
        let log = run(&cfg).unwrap();
        let text = format_tsv(&log.records);
        assert_eq!(parse_tsv(&text).unwrap(), log.records);
    }

    #[test]
    fn malformed_lines_rejected() {
        let bad = [
            ("", 1),
            ("# wqm-tsv v2\n", 1),
            ("# wqm-tsv v1\n1\talpha\tbeta\t+1\n", 2),
            ("# wqm-tsv v1\n1\talpha\tbeta\t+1\t2\n", 2),
            ("# wqm-tsv v1\n1\tbeta\tbeta\t+1\t-1\n", 2),
            (
                "# wqm-tsv v1\n2\talpha\tbeta\t+1\t-1\n2\talpha\tbeta\t+1\t-1\n",
                3,
            ),
            ("# wqm-tsv v1\nx\talpha\tbeta\t+1\t-1\n", 2),
            ("# wqm-tsv v1\n1\talpha\tbeta\t1\t-1\n", 2),
        ];
        for (text, line) in bad {
            match parse_tsv(text) {
                Err(IoError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    proptest! {
        #[test]
        fn arbitrary_records_round_trip(
            raw in proptest::collection::vec((1u64..5, any::<bool>(), any::<bool>(), -1i8..=1, -1i8..=1), 0..50)
        ) {
            let mut slot = 0;
            let records: Vec<SlotRecord> = raw
                .iter()
                .map(|&(step, a, b, x, y)| {
                    slot += step;
                    SlotRecord {
                        slot,
                        setting_a: if a { SettingA::Alpha } else { SettingA::AlphaPrime },
                        setting_b: if b { SettingB::Beta } else { SettingB::BetaPrime },
                        outcome_a: Outcome::from_i8(x).unwrap(),
                        outcome_b: Outcome::from_i8(y).unwrap(),
                    }
                })
                .collect();
            prop_assert_eq!(parse_tsv(&format_tsv(&records)).unwrap(), records);
        }
    }
}
