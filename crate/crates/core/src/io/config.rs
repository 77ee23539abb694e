//! `key = value` run configuration. Blank lines and `#` comments are
//! ignored, unknown and repeated keys are errors.
//!
//! ```text
//! n_slots = 1000000
//! alpha = 0
//! alpha_prime = pi/4
//! beta = pi/8
//! beta_prime = 3pi/8
//! seed = 7
//! schedule = random
//! role_policy = switch-at(10, 20)
//! ```

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, IoError};
use crate::engine::{
    Angles, RolePolicy, RunConfig, SettingA, SettingB, SettingPair, SettingsSchedule, Station,
};
use crate::geometry::StationGeometry;
use crate::model::{AngleLaw, MemoryInit, ModulusLaw};

const KEYS: [&str; 13] = [
    "n_slots",
    "alpha",
    "alpha_prime",
    "beta",
    "beta_prime",
    "threshold_u",
    "seed",
    "contextual",
    "schedule",
    "role_policy",
    "source.angle_law",
    "source.modulus_law",
    "memory_init",
];

/// Parses an angle in radians: a decimal number or a multiple of `pi`
/// such as `pi/8`, `-3pi/8`, `0.5*pi`. Anything that looks like degrees is
/// refused.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    if lower.contains("deg") || t.contains('°') {
        return Err(format!("angle `{t}` is in degrees; give radians"));
    }
    let value = match lower.find("pi") {
        None => t
            .parse::<f64>()
            .map_err(|_| format!("cannot parse angle `{t}`"))?,
        Some(at) => {
            let (head, tail) = (&lower[..at], &lower[at + 2..]);
            let head = head.trim().trim_end_matches('*').trim();
            let coef = match head {
                "" | "+" => 1.0,
                "-" => -1.0,
                h => h
                    .parse::<f64>()
                    .map_err(|_| format!("cannot parse angle `{t}`"))?,
            };
            let tail = tail.trim();
            let div = if tail.is_empty() {
                1.0
            } else {
                tail.strip_prefix('/')
                    .and_then(|d| d.trim().parse::<f64>().ok())
                    .filter(|d| *d != 0.0)
                    .ok_or_else(|| format!("cannot parse angle `{t}`"))?
            };
            coef * PI / div
        }
    };
    if !value.is_finite() {
        return Err(format!("angle `{t}` is not finite"));
    }
    if value.abs() > TAU {
        return Err(format!(
            "angle `{t}` exceeds 2pi in magnitude; angles are radians, not degrees"
        ));
    }
    Ok(value)
}

/// Comma-separated angles.
pub fn parse_angle_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_angle).collect()
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_f64(v: &str) -> Result<f64, String> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected a finite number, got `{v}`"))
}

/// Splits `name(x, y)` into `("name", ["x", "y"])`; a bare word has no args.
fn call(v: &str) -> Result<(&str, Vec<&str>), String> {
    match v.split_once('(') {
        None => Ok((v, Vec::new())),
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| format!("missing `)` in `{v}`"))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            Ok((name.trim(), args))
        }
    }
}

fn numbers(args: &[&str]) -> Result<Vec<f64>, String> {
    args.iter().map(|a| parse_f64(a)).collect()
}

fn parse_pair(a: &str, b: &str) -> Result<SettingPair, String> {
    let a = match a {
        "alpha" => SettingA::Alpha,
        "alpha'" => SettingA::AlphaPrime,
        _ => return Err(format!("unknown A setting `{a}`")),
    };
    let b = match b {
        "beta" => SettingB::Beta,
        "beta'" => SettingB::BetaPrime,
        _ => return Err(format!("unknown B setting `{b}`")),
    };
    Ok(SettingPair::new(a, b))
}

fn parse_schedule(v: &str, n: usize, seed: u64) -> Result<SettingsSchedule, String> {
    match call(v)? {
        ("block", a) if a.is_empty() => Ok(SettingsSchedule::block(n)),
        ("random", a) if a.is_empty() => Ok(SettingsSchedule::random(n, seed)),
        ("constant", a) if a.len() == 2 => {
            Ok(SettingsSchedule::constant(n, parse_pair(a[0], a[1])?))
        }
        _ => Err(format!(
            "schedule must be block, random or constant(<a>, <b>), got `{v}`"
        )),
    }
}

fn parse_role_policy(v: &str, n: usize) -> Result<RolePolicy, String> {
    match call(v)? {
        ("fixed", a) if a == ["A"] => Ok(RolePolicy::Fixed(Station::A)),
        ("fixed", a) if a == ["B"] => Ok(RolePolicy::Fixed(Station::B)),
        ("alternate", a) if a.is_empty() => Ok(RolePolicy::SwitchAt((2..=n as u64).collect())),
        ("switch-at", a) => a
            .iter()
            .map(|s| s.parse::<u64>().map_err(|_| format!("bad slot `{s}`")))
            .collect::<Result<_, _>>()
            .map(RolePolicy::SwitchAt),
        ("from-geometry", a) if a.len() == 4 || a.len() == 5 => {
            let x = numbers(&a)?;
            Ok(RolePolicy::FromGeometry(StationGeometry {
                source: x[0],
                station_a: x[1],
                station_b: x[2],
                speed: x[3],
                emission_time: x.get(4).copied().unwrap_or(0.0),
            }))
        }
        _ => Err(format!(
            "role_policy must be fixed(A), fixed(B), alternate, switch-at(<slots>) \
             or from-geometry(<source>, <a>, <b>, <speed>[, <t0>]), got `{v}`"
        )),
    }
}

fn parse_angle_law(v: &str) -> Result<AngleLaw, String> {
    match call(v)? {
        ("uniform", a) if a.is_empty() => Ok(AngleLaw::Uniform),
        ("fixed", a) if a.len() == 1 => Ok(AngleLaw::Fixed(parse_angle(a[0])?)),
        _ => Err(format!(
            "source.angle_law must be uniform or fixed(<angle>), got `{v}`"
        )),
    }
}

fn parse_modulus_law(v: &str) -> Result<ModulusLaw, String> {
    match call(v)? {
        ("threshold", a) if a.is_empty() => Ok(ModulusLaw::ThresholdMatched),
        ("constant", a) if a.len() == 1 => Ok(ModulusLaw::Constant(parse_f64(a[0])?)),
        ("uniform", a) if a.len() == 2 => {
            let x = numbers(&a)?;
            Ok(ModulusLaw::Uniform { lo: x[0], hi: x[1] })
        }
        _ => Err(format!(
            "source.modulus_law must be threshold, constant(<m>) or uniform(<lo>, <hi>), got `{v}`"
        )),
    }
}

fn parse_memory_init(v: &str) -> Result<MemoryInit, String> {
    match v {
        "balanced" => Ok(MemoryInit::Balanced),
        "complementary" => Ok(MemoryInit::Complementary),
        "independent" => Ok(MemoryInit::Independent),
        _ => Err(format!(
            "memory_init must be balanced, complementary or independent, got `{v}`"
        )),
    }
}

/// Parses and validates `(line number, text)` pairs.
pub(crate) fn parse_config_lines<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<RunConfig, IoError> {
    let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut last_line = 0;
    for (no, raw) in lines {
        last_line = no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| IoError::parse(no, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let Some(&key) = KEYS.iter().find(|&&k| k == key) else {
            return Err(IoError::parse(no, format!("unknown key `{key}`")));
        };
        if entries.insert(key, (no, value)).is_some() {
            return Err(IoError::parse(no, format!("key `{key}` given twice")));
        }
    }

    let get = |key: &str| entries.get(key).copied();
    let required = |key: &str| {
        get(key).ok_or_else(|| IoError::parse(last_line, format!("missing key `{key}`")))
    };
    fn field<T>(
        entry: (usize, &str),
        f: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<T, IoError> {
        f(entry.1).map_err(|m| IoError::parse(entry.0, m))
    }

    let n_slots = field(required("n_slots")?, |v| {
        v.parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("n_slots must be a positive integer, got `{v}`"))
    })?;
    let seed = field(required("seed")?, |v| {
        v.parse::<u64>()
            .map_err(|_| format!("seed must be a non-negative integer, got `{v}`"))
    })?;
    let angles = Angles::new(
        field(required("alpha")?, parse_angle)?,
        field(required("alpha_prime")?, parse_angle)?,
        field(required("beta")?, parse_angle)?,
        field(required("beta_prime")?, parse_angle)?,
    );

    let mut config = RunConfig::new(n_slots, angles, seed);
    if let Some(e) = get("threshold_u") {
        config.threshold = field(e, parse_f64)?;
    }
    if let Some(e) = get("contextual") {
        config.contextual = field(e, parse_bool)?;
    }
    if let Some(e) = get("schedule") {
        config.schedule = field(e, |v| parse_schedule(v, n_slots, seed))?;
    }
    if let Some(e) = get("role_policy") {
        config.role_policy = field(e, |v| parse_role_policy(v, n_slots))?;
    }
    if let Some(e) = get("source.angle_law") {
        config.source.angle_law = field(e, parse_angle_law)?;
    }
    if let Some(e) = get("source.modulus_law") {
        config.source.modulus_law = field(e, parse_modulus_law)?;
    }
    if let Some(e) = get("memory_init") {
        config.memory_init = field(e, parse_memory_init)?;
    }
    config.validate()?;
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<RunConfig, IoError> {
    parse_config_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
}

pub fn read_config(path: &Path) -> Result<RunConfig, IoError> {
    parse_config(&read_file(path)?).map_err(|e| e.in_file(path))
}

fn schedule_value(config: &RunConfig) -> Result<String, IoError> {
    let s = &config.schedule;
    let n = config.n_slots;
    if *s == SettingsSchedule::block(n) {
        return Ok("block".into());
    }
    if *s == SettingsSchedule::random(n, config.source.seed) {
        return Ok("random".into());
    }
    match s.pairs().first() {
        Some(&p) if *s == SettingsSchedule::constant(n, p) => {
            Ok(format!("constant({}, {})", p.a.label(), p.b.label()))
        }
        _ => Err(IoError::parse(
            0,
            "schedule cannot be written as a config value",
        )),
    }
}

fn role_value(config: &RunConfig) -> String {
    match &config.role_policy {
        RolePolicy::Fixed(s) => format!("fixed({s})"),
        RolePolicy::SwitchAt(slots) if slots.iter().copied().eq(2..=config.n_slots as u64) => {
            "alternate".into()
        }
        RolePolicy::SwitchAt(slots) => {
            let list: Vec<String> = slots.iter().map(u64::to_string).collect();
            format!("switch-at({})", list.join(", "))
        }
        RolePolicy::FromGeometry(g) => format!(
            "from-geometry({}, {}, {}, {}, {})",
            g.source, g.station_a, g.station_b, g.speed, g.emission_time
        ),
    }
}

/// Writes `config` back as a document `parse_config` maps to the same value.
pub fn format_config(config: &RunConfig) -> Result<String, IoError> {
    let a = &config.angles;
    let angle_law = match config.source.angle_law {
        AngleLaw::Uniform => "uniform".to_string(),
        AngleLaw::Fixed(x) => format!("fixed({x})"),
    };
    let modulus_law = match config.source.modulus_law {
        ModulusLaw::ThresholdMatched => "threshold".to_string(),
        ModulusLaw::Constant(m) => format!("constant({m})"),
        ModulusLaw::Uniform { lo, hi } => format!("uniform({lo}, {hi})"),
    };
    let memory_init = match config.memory_init {
        MemoryInit::Balanced => "balanced",
        MemoryInit::Complementary => "complementary",
        MemoryInit::Independent => "independent",
    };
    let values = [
        config.n_slots.to_string(),
        a.alpha.to_string(),
        a.alpha_prime.to_string(),
        a.beta.to_string(),
        a.beta_prime.to_string(),
        config.threshold.to_string(),
        config.source.seed.to_string(),
        config.contextual.to_string(),
        schedule_value(config)?,
        role_value(config),
        angle_law,
        modulus_law,
        memory_init.to_string(),
    ];
    let mut out = String::new();
    for (k, v) in KEYS.iter().zip(values) {
        writeln!(out, "{k} = {v}").unwrap();
    }
    Ok(out)
}
