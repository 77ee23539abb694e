//! The slot-by-slot run loop: pair emission, master/slave measurement with
//! the contextual collapse, settings schedules and exact counterfactual
//! replay from a recorded hidden-variable trace.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{assign_roles, GeometryError, StationGeometry};
use crate::model::{
    station_measure, AnalyzerAxis, GateMemory, MemoryInit, ModulusLaw, Outcome, PairSourceConfig,
    PolarizationVector,
};

/// ChaCha stream ids, so that changing one consumer never shifts another.
const STREAM_PAIRS: u64 = 0;
const STREAM_MEMORIES: u64 = 1;
const STREAM_SCHEDULE: u64 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed role switch list: {0}")]
    MalformedSwitchList(String),
    #[error("run log carries no hidden-variable trace")]
    MissingTrace,
    #[error("invalid hidden-variable trace: {0}")]
    BadTrace(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Station {
    A,
    B,
}

impl Station {
    pub fn other(self) -> Self {
        match self {
            Station::A => Station::B,
            Station::B => Station::A,
        }
    }
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Station::A => "A",
            Station::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SettingA {
    Alpha,
    AlphaPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SettingB {
    Beta,
    BetaPrime,
}

impl SettingA {
    pub fn label(self) -> &'static str {
        match self {
            SettingA::Alpha => "alpha",
            SettingA::AlphaPrime => "alpha'",
        }
    }
}

impl SettingB {
    pub fn label(self) -> &'static str {
        match self {
            SettingB::Beta => "beta",
            SettingB::BetaPrime => "beta'",
        }
    }
}

/// The setting applied at each station in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SettingPair {
    pub a: SettingA,
    pub b: SettingB,
}

impl SettingPair {
    pub const fn new(a: SettingA, b: SettingB) -> Self {
        Self { a, b }
    }

    pub const ALPHA_BETA: Self = Self::new(SettingA::Alpha, SettingB::Beta);
    pub const ALPHA_BETA_PRIME: Self = Self::new(SettingA::Alpha, SettingB::BetaPrime);
    pub const ALPHA_PRIME_BETA: Self = Self::new(SettingA::AlphaPrime, SettingB::Beta);
    pub const ALPHA_PRIME_BETA_PRIME: Self = Self::new(SettingA::AlphaPrime, SettingB::BetaPrime);

    pub const ALL: [Self; 4] = [
        Self::ALPHA_BETA,
        Self::ALPHA_BETA_PRIME,
        Self::ALPHA_PRIME_BETA,
        Self::ALPHA_PRIME_BETA_PRIME,
    ];
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.a.label(), self.b.label())
    }
}

/// The two analyzer angles available at each station, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub beta: f64,
    pub beta_prime: f64,
}

impl Angles {
    pub fn new(alpha: f64, alpha_prime: f64, beta: f64, beta_prime: f64) -> Self {
        Self {
            alpha,
            alpha_prime,
            beta,
            beta_prime,
        }
    }

    pub fn a(&self, s: SettingA) -> f64 {
        match s {
            SettingA::Alpha => self.alpha,
            SettingA::AlphaPrime => self.alpha_prime,
        }
    }

    pub fn b(&self, s: SettingB) -> f64 {
        match s {
            SettingB::Beta => self.beta,
            SettingB::BetaPrime => self.beta_prime,
        }
    }

    fn all_finite(&self) -> bool {
        [self.alpha, self.alpha_prime, self.beta, self.beta_prime]
            .iter()
            .all(|a| a.is_finite())
    }
}

/// Per-slot settings for a whole run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingsSchedule {
    pairs: Vec<SettingPair>,
}

impl SettingsSchedule {
    /// Order of the four quarters in a block schedule: A holds alpha for the
    /// first half, B holds beta for the middle two quarters.
    pub const BLOCK_ORDER: [SettingPair; 4] = [
        SettingPair::ALPHA_BETA_PRIME,
        SettingPair::ALPHA_BETA,
        SettingPair::ALPHA_PRIME_BETA,
        SettingPair::ALPHA_PRIME_BETA_PRIME,
    ];

    pub fn from_pairs(pairs: Vec<SettingPair>) -> Self {
        Self { pairs }
    }

    /// Four contiguous quarters; when `n` is not a multiple of four the
    /// leading quarters take one extra slot each.
    pub fn block(n: usize) -> Self {
        let sizes = Self::block_sizes(n);
        let pairs = Self::BLOCK_ORDER
            .iter()
            .zip(sizes)
            .flat_map(|(&p, len)| std::iter::repeat_n(p, len))
            .collect();
        Self { pairs }
    }

    pub fn block_sizes(n: usize) -> [usize; 4] {
        let (q, r) = (n / 4, n % 4);
        std::array::from_fn(|k| q + usize::from(k < r))
    }

    /// Independent fair coin per station per slot.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_SCHEDULE);
        let pairs = (0..n)
            .map(|_| {
                let a = if rng.random::<bool>() {
                    SettingA::AlphaPrime
                } else {
                    SettingA::Alpha
                };
                let b = if rng.random::<bool>() {
                    SettingB::BetaPrime
                } else {
                    SettingB::Beta
                };
                SettingPair::new(a, b)
            })
            .collect();
        Self { pairs }
    }

    pub fn constant(n: usize, pair: SettingPair) -> Self {
        Self {
            pairs: vec![pair; n],
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[SettingPair] {
        &self.pairs
    }

    pub fn is_block(&self) -> bool {
        *self == Self::block(self.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RolePolicy {
    Fixed(Station),
    /// A starts as master; roles flip before each listed (1-based) slot.
    SwitchAt(Vec<u64>),
    /// Master chosen once from the light-cone layout.
    FromGeometry(StationGeometry),
}

impl Default for RolePolicy {
    fn default() -> Self {
        RolePolicy::Fixed(Station::A)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_slots: usize,
    pub angles: Angles,
    pub threshold: f64,
    pub source: PairSourceConfig,
    pub memory_init: MemoryInit,
    pub schedule: SettingsSchedule,
    pub contextual: bool,
    pub role_policy: RolePolicy,
}

impl RunConfig {
    /// Block schedule, `u = 1`, default source, contextual on, A master.
    pub fn new(n_slots: usize, angles: Angles, seed: u64) -> Self {
        Self {
            n_slots,
            angles,
            threshold: 1.0,
            source: PairSourceConfig::new(seed),
            memory_init: MemoryInit::default(),
            schedule: SettingsSchedule::block(n_slots),
            contextual: true,
            role_policy: RolePolicy::default(),
        }
    }

    pub fn with_schedule(mut self, schedule: SettingsSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_contextual(mut self, contextual: bool) -> Self {
        self.contextual = contextual;
        self
    }

    pub fn with_role_policy(mut self, policy: RolePolicy) -> Self {
        self.role_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::InvalidConfig(msg));
        if self.n_slots == 0 {
            return bad("n_slots must be at least 1".into());
        }
        if self.schedule.len() != self.n_slots {
            return bad(format!(
                "schedule has {} slots, expected {}",
                self.schedule.len(),
                self.n_slots
            ));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return bad(format!(
                "threshold must be positive, got {}",
                self.threshold
            ));
        }
        if !self.angles.all_finite() {
            return bad("analyzer angles must be finite".into());
        }
        match self.source.angle_law {
            crate::model::AngleLaw::Fixed(a) if !a.is_finite() => {
                return bad("fixed source angle must be finite".into())
            }
            _ => {}
        }
        match self.source.modulus_law {
            ModulusLaw::Constant(m) if !(m.is_finite() && m >= 0.0) => {
                return bad(format!("constant modulus must be non-negative, got {m}"))
            }
            ModulusLaw::Uniform { lo, hi }
                if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) =>
            {
                return bad(format!(
                    "uniform modulus law needs 0 <= lo <= hi, got [{lo}, {hi})"
                ))
            }
            _ => {}
        }
        match &self.role_policy {
            RolePolicy::SwitchAt(slots) => {
                if slots.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(EngineError::MalformedSwitchList(
                        "slots must be strictly increasing".into(),
                    ));
                }
                if let Some(&s) = slots.iter().find(|&&s| s == 0 || s > self.n_slots as u64) {
                    return Err(EngineError::MalformedSwitchList(format!(
                        "slot {s} outside 1..={}",
                        self.n_slots
                    )));
                }
            }
            RolePolicy::FromGeometry(g) => g.validate()?,
            RolePolicy::Fixed(_) => {}
        }
        Ok(())
    }
}

/// One time slot: settings applied and outcomes recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    pub setting_a: SettingA,
    pub setting_b: SettingB,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
}

impl SlotRecord {
    pub fn pair(&self) -> SettingPair {
        SettingPair::new(self.setting_a, self.setting_b)
    }

    pub fn outcome(&self, station: Station) -> Outcome {
        match station {
            Station::A => self.outcome_a,
            Station::B => self.outcome_b,
        }
    }
}

/// Everything the run consumed from the random source: initial memories
/// `[A+, A-, B+, B-]` and the emitted vector of every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct HvTrace {
    pub initial_memories: [f64; 4],
    pub pairs: Vec<PolarizationVector>,
}

impl HvTrace {
    /// Draws the trace for `config` from its seed.
    pub fn draw(config: &RunConfig) -> Self {
        let u = config.threshold;
        let mut mem_rng = ChaCha8Rng::seed_from_u64(config.source.seed);
        mem_rng.set_stream(STREAM_MEMORIES);
        let initial_memories = match config.memory_init {
            MemoryInit::Balanced => [u / 2.0; 4],
            MemoryInit::Complementary => {
                let mut open_unit = || loop {
                    let r: f64 = mem_rng.random();
                    if r > 0.0 {
                        break r;
                    }
                };
                let (ra, rb) = (open_unit(), open_unit());
                [ra * u, u - ra * u, rb * u, u - rb * u].map(|m| m.min(u * (1.0 - f64::EPSILON)))
            }
            MemoryInit::Independent => std::array::from_fn(|_| mem_rng.random::<f64>() * u),
        };

        let mut rng = ChaCha8Rng::seed_from_u64(config.source.seed);
        rng.set_stream(STREAM_PAIRS);
        let pairs = (0..config.n_slots)
            .map(|_| config.source.emit_pair(u, &mut rng).0)
            .collect();
        Self {
            initial_memories,
            pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub config: RunConfig,
    pub records: Vec<SlotRecord>,
    pub trace: Option<HvTrace>,
}

impl RunLog {
    pub fn angle_a(&self, rec: &SlotRecord) -> f64 {
        self.config.angles.a(rec.setting_a)
    }

    pub fn angle_b(&self, rec: &SlotRecord) -> f64 {
        self.config.angles.b(rec.setting_b)
    }

    /// Applied analyzer angle of `station` in every slot.
    pub fn applied_angles(&self, station: Station) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| match station {
                Station::A => self.angle_a(r),
                Station::B => self.angle_b(r),
            })
            .collect()
    }

    pub fn outcomes(&self, station: Station) -> impl Iterator<Item = Outcome> + '_ {
        self.records.iter().map(move |r| r.outcome(station))
    }
}

/// Runs the experiment described by `config`.
pub fn run(config: &RunConfig) -> Result<RunLog, EngineError> {
    config.validate()?;
    let trace = HvTrace::draw(config);
    simulate(config, trace)
}

/// Re-runs a logged experiment on its recorded trace with different angles
/// and, optionally, a different schedule.
pub fn counterfactual_replay(
    log: &RunLog,
    alt_angles: Angles,
    alt_schedule: Option<SettingsSchedule>,
) -> Result<RunLog, EngineError> {
    let trace = log.trace.clone().ok_or(EngineError::MissingTrace)?;
    let mut config = log.config.clone();
    config.angles = alt_angles;
    if let Some(schedule) = alt_schedule {
        config.schedule = schedule;
    }
    config.validate()?;
    simulate(&config, trace)
}

/// Runs `config` on an explicit trace instead of drawing one.
pub fn simulate(config: &RunConfig, trace: HvTrace) -> Result<RunLog, EngineError> {
    config.validate()?;
    let u = config.threshold;
    if trace.pairs.len() != config.n_slots {
        return Err(EngineError::BadTrace(format!(
            "trace has {} slots, expected {}",
            trace.pairs.len(),
            config.n_slots
        )));
    }
    if let Some(m) = trace
        .initial_memories
        .iter()
        .find(|m| !(m.is_finite() && (0.0..u).contains(*m)))
    {
        return Err(EngineError::BadTrace(format!(
            "initial memory {m} outside [0, {u})"
        )));
    }

    let [ap, am, bp, bm] = trace.initial_memories;
    let mut mem_a = (GateMemory::new(ap, u), GateMemory::new(am, u));
    let mut mem_b = (GateMemory::new(bp, u), GateMemory::new(bm, u));

    let mut master = match &config.role_policy {
        RolePolicy::Fixed(s) => *s,
        RolePolicy::SwitchAt(_) => Station::A,
        RolePolicy::FromGeometry(g) => assign_roles(g)?.master,
    };
    let switches: &[u64] = match &config.role_policy {
        RolePolicy::SwitchAt(s) => s,
        _ => &[],
    };
    let mut next_switch = 0;

    let records = trace
        .pairs
        .iter()
        .zip(config.schedule.pairs())
        .enumerate()
        .map(|(i, (&emitted, &settings))| {
            let slot = i as u64 + 1;
            if switches.get(next_switch) == Some(&slot) {
                master = master.other();
                next_switch += 1;
            }
            let axis_a = AnalyzerAxis::new(config.angles.a(settings.a));
            let axis_b = AnalyzerAxis::new(config.angles.b(settings.b));

            let (first_axis, second_axis, first_mem, second_mem) = match master {
                Station::A => (axis_a, axis_b, &mut mem_a, &mut mem_b),
                Station::B => (axis_b, axis_a, &mut mem_b, &mut mem_a),
            };
            let m1 = station_measure(emitted, first_axis, first_mem.0, first_mem.1);
            *first_mem = (m1.plus, m1.minus);
            let slave_vec = match m1.fired_axis {
                Some(axis) if config.contextual => emitted.aligned_to(axis),
                _ => emitted,
            };
            let m2 = station_measure(slave_vec, second_axis, second_mem.0, second_mem.1);
            *second_mem = (m2.plus, m2.minus);

            let (outcome_a, outcome_b) = match master {
                Station::A => (m1.outcome, m2.outcome),
                Station::B => (m2.outcome, m1.outcome),
            };
            SlotRecord {
                slot,
                setting_a: settings.a,
                setting_b: settings.b,
                outcome_a,
                outcome_b,
            }
        })
        .collect();

    Ok(RunLog {
        config: config.clone(),
        records,
        trace: Some(trace),
    })
}
