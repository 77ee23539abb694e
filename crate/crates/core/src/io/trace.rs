//! Hidden-variable trace: the run configuration (lines prefixed `@`), the
//! four initial gate memories and the emitted vector of every slot.
//! Floats are written in shortest round-trip form, so a replay reads back
//! exactly the values the original run consumed.

use std::fmt::Write as _;
use std::path::Path;

use super::config::{format_config, parse_config_lines};
use super::{read_file, IoError};
use crate::engine::{HvTrace, RunConfig};
use crate::model::PolarizationVector;

const TRACE_HEADER: &str = "# wqm-trace v1";

pub fn format_trace(config: &RunConfig, trace: &HvTrace) -> Result<String, IoError> {
    let mut out = String::with_capacity(48 * trace.pairs.len() + 512);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for line in format_config(config)?.lines() {
        writeln!(out, "@{line}").unwrap();
    }
    let [ap, am, bp, bm] = trace.initial_memories;
    writeln!(out, "memories\t{ap}\t{am}\t{bp}\t{bm}").unwrap();
    for (i, v) in trace.pairs.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}", i + 1, v.modulus(), v.angle()).unwrap();
    }
    Ok(out)
}

fn float(no: usize, s: &str) -> Result<f64, IoError> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| IoError::parse(no, format!("bad number `{s}`")))
}

pub fn parse_trace(text: &str) -> Result<(RunConfig, HvTrace), IoError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect();
    if lines.first().map(|l| l.1) != Some(TRACE_HEADER) {
        return Err(IoError::parse(
            1,
            format!("expected header `{TRACE_HEADER}`"),
        ));
    }
    let config_end = 1 + lines[1..]
        .iter()
        .take_while(|l| l.1.starts_with('@'))
        .count();
    let config = parse_config_lines(lines[1..config_end].iter().map(|&(no, l)| (no, &l[1..])))?;

    let (mem_no, mem_line) = *lines
        .get(config_end)
        .ok_or_else(|| IoError::parse(config_end + 1, "missing memories line"))?;
    let f: Vec<&str> = mem_line.split('\t').collect();
    if f.len() != 5 || f[0] != "memories" {
        return Err(IoError::parse(
            mem_no,
            "expected `memories` and four values",
        ));
    }
    let mut initial_memories = [0.0; 4];
    for (m, s) in initial_memories.iter_mut().zip(&f[1..]) {
        *m = float(mem_no, s)?;
    }

    let mut pairs = Vec::with_capacity(config.n_slots);
    for &(no, line) in &lines[config_end + 1..] {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(IoError::parse(
                no,
                format!("expected 3 fields, found {}", f.len()),
            ));
        }
        if f[0].parse::<usize>().ok() != Some(pairs.len() + 1) {
            return Err(IoError::parse(
                no,
                format!("expected slot {}", pairs.len() + 1),
            ));
        }
        let (modulus, angle) = (float(no, f[1])?, float(no, f[2])?);
        if modulus < 0.0 {
            return Err(IoError::parse(no, "negative modulus"));
        }
        pairs.push(PolarizationVector::new(modulus, angle));
    }
    if pairs.len() != config.n_slots {
        return Err(IoError::parse(
            lines.len(),
            format!(
                "trace has {} slots, config says {}",
                pairs.len(),
                config.n_slots
            ),
        ));
    }
    Ok((
        config,
        HvTrace {
            initial_memories,
            pairs,
        },
    ))
}

pub fn read_trace(path: &Path) -> Result<(RunConfig, HvTrace), IoError> {
    parse_trace(&read_file(path)?).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, simulate, Angles, SettingsSchedule};
    use crate::model::{MemoryInit, ModulusLaw};

    #[test]
    fn trace_round_trips_bit_for_bit() {
        let mut cfg = RunConfig::new(300, Angles::new(0.1, 0.9, 0.5, 1.3), 11)
            .with_schedule(SettingsSchedule::random(300, 11));
        cfg.memory_init = MemoryInit::Independent;
        cfg.source.modulus_law = ModulusLaw::Uniform { lo: 0.5, hi: 1.5 };
        let log = run(&cfg).unwrap();
        let text = format_trace(&cfg, log.trace.as_ref().unwrap()).unwrap();
        let (cfg2, trace2) = parse_trace(&text).unwrap();
        assert_eq!(cfg2, cfg);
        assert_eq!(Some(&trace2), log.trace.as_ref());
        assert_eq!(simulate(&cfg2, trace2).unwrap().records, log.records);
    }

    #[test]
    fn truncated_trace_rejected() {
        let cfg = RunConfig::new(4, Angles::new(0.0, 0.8, 0.4, 1.2), 1);
        let log = run(&cfg).unwrap();
        let text = format_trace(&cfg, log.trace.as_ref().unwrap()).unwrap();
        let cut: String = text
            .lines()
            .take(text.lines().count() - 1)
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(parse_trace(&cut), Err(IoError::Parse { .. })));
        let bad = text.replace("\n3\t", "\n7\t");
        assert!(matches!(parse_trace(&bad), Err(IoError::Parse { .. })));
        assert!(parse_trace("# wqm-tsv v1\n").is_err());
    }
}
