//! Real-space vector hidden variables, the non-Boolean projection, and the
//! threshold-memory detection mechanism.
//!
//! Every photon of a pair carries a [`PolarizationVector`]. An analyzer
//! projects it onto the axes of its two gates; the squared modulus of each
//! projection is poured into that gate's [`GateMemory`], and a gate fires
//! when its memory reaches the threshold `u`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;

/// Reduces an angle to the canonical polarization-axis range `[0, π)`.
pub fn reduce_axis(angle: f64) -> f64 {
    let r = angle.rem_euclid(PI);
    // rem_euclid can round up to exactly π for tiny negative inputs.
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// The hidden variable carried by one photon: a modulus and a plane axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationVector {
    modulus: f64,
    angle: f64,
}

impl PolarizationVector {
    /// Builds a vector; the angle is reduced to `[0, π)`.
    ///
    /// Panics if `modulus` is negative or either argument is not finite.
    pub fn new(modulus: f64, angle: f64) -> Self {
        assert!(
            modulus.is_finite() && modulus >= 0.0,
            "modulus must be finite and non-negative, got {modulus}"
        );
        assert!(angle.is_finite(), "angle must be finite, got {angle}");
        Self {
            modulus,
            angle: reduce_axis(angle),
        }
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Squared modulus, in threshold (energy) units.
    pub fn energy(&self) -> f64 {
        self.modulus * self.modulus
    }

    /// Same modulus, redirected along `axis`.
    pub fn aligned_to(&self, axis: AnalyzerAxis) -> Self {
        Self {
            modulus: self.modulus,
            angle: axis.angle(),
        }
    }
}

/// Orientation of a polarizer gate, in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerAxis(f64);

impl AnalyzerAxis {
    pub fn new(angle: f64) -> Self {
        assert!(angle.is_finite(), "axis angle must be finite, got {angle}");
        Self(reduce_axis(angle))
    }

    pub fn angle(&self) -> f64 {
        self.0
    }

    /// Axis of the companion (−1) gate.
    pub fn orthogonal(&self) -> Self {
        Self(reduce_axis(self.0 + FRAC_PI_2))
    }
}

/// Projection of `vec` onto `axis`: the result lies along the axis with
/// modulus `|V·cos(v − axis)|`.
pub fn project(vec: PolarizationVector, axis: AnalyzerAxis) -> PolarizationVector {
    PolarizationVector {
        modulus: vec.modulus * (vec.angle - axis.angle()).cos().abs(),
        angle: axis.angle(),
    }
}

/// Accumulator of one detector gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateMemory {
    accumulator: f64,
    threshold: f64,
}

impl GateMemory {
    /// Panics unless `threshold > 0` and `0 <= accumulator < threshold`.
    pub fn new(accumulator: f64, threshold: f64) -> Self {
        assert!(
            threshold.is_finite() && threshold > 0.0,
            "threshold must be positive, got {threshold}"
        );
        assert!(
            (0.0..threshold).contains(&accumulator),
            "accumulator {accumulator} outside [0, {threshold})"
        );
        Self {
            accumulator,
            threshold,
        }
    }

    pub fn accumulator(&self) -> f64 {
        self.accumulator
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Adds `energy` to the memory; fires once and subtracts the threshold once
/// if the sum reaches it.
///
/// A single step carrying more than one threshold of energy still fires only
/// once, so the remainder may then exceed `u` until the next step. The
/// default source never does this.
pub fn gate_step(memory: GateMemory, energy: f64) -> (GateMemory, bool) {
    debug_assert!(energy >= 0.0, "negative energy {energy}");
    let mut acc = memory.accumulator + energy;
    let fired = acc >= memory.threshold;
    if fired {
        acc = (acc - memory.threshold).max(0.0);
    }
    (
        GateMemory {
            accumulator: acc,
            threshold: memory.threshold,
        },
        fired,
    )
}

/// Detection result of one station in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
    /// A measurement was made but no gate fired.
    Zero,
}

impl Outcome {
    pub fn as_i8(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
            Outcome::Zero => 0,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            0 => Some(Outcome::Zero),
            _ => None,
        }
    }

    pub fn is_detection(self) -> bool {
        self != Outcome::Zero
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
            Outcome::Zero => "0",
        })
    }
}

/// Result of [`station_measure`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub outcome: Outcome,
    /// Axis of the gate that produced the outcome, `None` for [`Outcome::Zero`].
    pub fired_axis: Option<AnalyzerAxis>,
    pub plus: GateMemory,
    pub minus: GateMemory,
}

/// One station's measurement: both gates take their share of the vector's
/// energy and step their memories.
///
/// If both gates fire in the same step, the gate whose memory was fuller
/// before subtraction wins (ties go to +1); both memories are still
/// decremented.
pub fn station_measure(
    vec: PolarizationVector,
    analyzer: AnalyzerAxis,
    plus: GateMemory,
    minus: GateMemory,
) -> Measurement {
    let minus_axis = analyzer.orthogonal();
    let e_plus = project(vec, analyzer).energy();
    let e_minus = project(vec, minus_axis).energy();
    let pre_plus = plus.accumulator + e_plus;
    let pre_minus = minus.accumulator + e_minus;
    let (plus, fired_plus) = gate_step(plus, e_plus);
    let (minus, fired_minus) = gate_step(minus, e_minus);

    let outcome = match (fired_plus, fired_minus) {
        (true, true) if pre_plus >= pre_minus => Outcome::Plus,
        (true, true) => Outcome::Minus,
        (true, false) => Outcome::Plus,
        (false, true) => Outcome::Minus,
        (false, false) => Outcome::Zero,
    };
    let fired_axis = match outcome {
        Outcome::Plus => Some(analyzer),
        Outcome::Minus => Some(minus_axis),
        Outcome::Zero => None,
    };
    Measurement {
        outcome,
        fired_axis,
        plus,
        minus,
    }
}

/// Law of the per-pair polarization angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleLaw {
    /// Uniform on `[0, π)`: an unpolarized beam.
    Uniform,
    /// Every pair polarized along the same axis.
    Fixed(f64),
}

/// Law of the per-pair modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModulusLaw {
    /// Constant modulus with `V² = u`.
    ThresholdMatched,
    Constant(f64),
    /// Uniform on `[lo, hi)`.
    Uniform {
        lo: f64,
        hi: f64,
    },
}

/// How the four gate memories are initialised at the start of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemoryInit {
    /// Every gate starts at `u/2`.
    #[default]
    Balanced,
    /// Per station, `+1` starts at `r·u` and `−1` at `(1 − r)·u`, with `r`
    /// drawn from the run seed.
    Complementary,
    /// All four memories drawn independently and uniformly on `[0, u)`.
    Independent,
}

/// Configuration of the entangled-pair source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSourceConfig {
    pub angle_law: AngleLaw,
    pub modulus_law: ModulusLaw,
    pub seed: u64,
}

impl PairSourceConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            angle_law: AngleLaw::Uniform,
            modulus_law: ModulusLaw::ThresholdMatched,
            seed,
        }
    }

    /// Draws one pair. Both photons carry the same vector at emission.
    pub fn emit_pair<R: Rng + ?Sized>(
        &self,
        threshold: f64,
        rng: &mut R,
    ) -> (PolarizationVector, PolarizationVector) {
        let angle = match self.angle_law {
            AngleLaw::Uniform => rng.random::<f64>() * PI,
            AngleLaw::Fixed(a) => a,
        };
        let modulus = match self.modulus_law {
            ModulusLaw::ThresholdMatched => threshold.sqrt(),
            ModulusLaw::Constant(m) => m,
            ModulusLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        };
        let v = PolarizationVector::new(modulus, angle);
        (v, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    const EPS: f64 = 1e-12;

    #[test]
    fn project_parallel_is_identity() {
        let p = project(PolarizationVector::new(1.0, 0.0), AnalyzerAxis::new(0.0));
        assert_eq!(p, PolarizationVector::new(1.0, 0.0));
    }

    #[test]
    fn project_orthogonal_is_zero() {
        let p = project(
            PolarizationVector::new(1.0, 0.0),
            AnalyzerAxis::new(FRAC_PI_2),
        );
        assert!(p.modulus() < EPS);
        assert!((p.angle() - FRAC_PI_2).abs() < EPS);
    }

    #[test]
    fn project_at_sixty_degrees_halves() {
        let p = project(
            PolarizationVector::new(2.0, FRAC_PI_3),
            AnalyzerAxis::new(0.0),
        );
        assert!((p.modulus() - 1.0).abs() < EPS);
        assert_eq!(p.angle(), 0.0);
    }

    #[test]
    fn angles_are_canonical() {
        assert!((PolarizationVector::new(1.0, PI + 0.25).angle() - 0.25).abs() < EPS);
        assert!((PolarizationVector::new(1.0, -0.25).angle() - (PI - 0.25)).abs() < EPS);
        assert_eq!(AnalyzerAxis::new(FRAC_PI_2).orthogonal().angle(), 0.0);
        assert_eq!(reduce_axis(-1e-18), 0.0);
    }

    #[test]
    fn gate_step_examples() {
        let (m, fired) = gate_step(GateMemory::new(0.9, 1.0), 0.2);
        assert!(fired);
        assert!((m.accumulator() - 0.1).abs() < EPS);

        let (m, fired) = gate_step(GateMemory::new(0.0, 1.0), 0.0);
        assert!(!fired);
        assert_eq!(m.accumulator(), 0.0);

        let mut m = GateMemory::new(0.0, 1.0);
        let fires: Vec<bool> = (0..6)
            .map(|_| {
                let (next, f) = gate_step(m, 0.5);
                m = next;
                f
            })
            .collect();
        assert_eq!(fires, [false, true, false, true, false, true]);
    }

    #[test]
    fn gate_step_oversized_energy_fires_once() {
        let (m, fired) = gate_step(GateMemory::new(0.5, 1.0), 2.0);
        assert!(fired);
        assert!((m.accumulator() - 1.5).abs() < EPS);
    }

    #[test]
    fn measure_parallel_vector_fires_plus() {
        let u = 1.0;
        let m = station_measure(
            PolarizationVector::new(1.0, 0.0),
            AnalyzerAxis::new(0.0),
            GateMemory::new(u - 0.5, u),
            GateMemory::new(u - 0.5, u),
        );
        assert_eq!(m.outcome, Outcome::Plus);
        assert_eq!(m.fired_axis, Some(AnalyzerAxis::new(0.0)));
        assert!((m.plus.accumulator() - 0.5).abs() < EPS);
        assert!((m.minus.accumulator() - 0.5).abs() < EPS);
    }

    #[test]
    fn measure_diagonal_vector_from_empty_memories_is_zero() {
        let m = station_measure(
            PolarizationVector::new(1.0, FRAC_PI_4),
            AnalyzerAxis::new(0.0),
            GateMemory::new(0.0, 1.0),
            GateMemory::new(0.0, 1.0),
        );
        assert_eq!(m.outcome, Outcome::Zero);
        assert_eq!(m.fired_axis, None);
    }

    #[test]
    fn measure_both_fire_resolves_to_fuller_gate() {
        let v = PolarizationVector::new(1.0, FRAC_PI_4);
        let m = station_measure(
            v,
            AnalyzerAxis::new(0.0),
            GateMemory::new(0.6, 1.0),
            GateMemory::new(0.9, 1.0),
        );
        assert_eq!(m.outcome, Outcome::Minus);
        assert_eq!(m.fired_axis, Some(AnalyzerAxis::new(FRAC_PI_2)));
        assert!(m.plus.accumulator() < 0.2 && m.minus.accumulator() < 0.5);

        let m = station_measure(
            v,
            AnalyzerAxis::new(0.0),
            GateMemory::new(0.75, 1.0),
            GateMemory::new(0.75, 1.0),
        );
        assert_eq!(m.outcome, Outcome::Plus);
    }

    #[test]
    fn unpolarized_singles_are_half() {
        let source = PairSourceConfig::new(11);
        let mut rng = ChaCha8Rng::seed_from_u64(source.seed);
        for analyzer in [0.0, 0.4, 1.3, 2.9] {
            let axis = AnalyzerAxis::new(analyzer);
            let (mut plus, mut minus) = (GateMemory::new(0.5, 1.0), GateMemory::new(0.5, 1.0));
            let (mut n_plus, mut n_det) = (0u32, 0u32);
            let n = 100_000;
            for _ in 0..n {
                let (v, _) = source.emit_pair(1.0, &mut rng);
                let m = station_measure(v, axis, plus, minus);
                plus = m.plus;
                minus = m.minus;
                n_det += m.outcome.is_detection() as u32;
                n_plus += (m.outcome == Outcome::Plus) as u32;
            }
            let frac = n_plus as f64 / n_det as f64;
            let sigma = (0.25 / n_det as f64).sqrt();
            assert!(
                (frac - 0.5).abs() < 4.0 * sigma,
                "analyzer {analyzer}: {frac}"
            );
        }
    }

    #[test]
    fn emit_pair_is_deterministic_and_equal() {
        let source = PairSourceConfig::new(99);
        let draw = |k: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(source.seed);
            (0..k)
                .map(|_| source.emit_pair(1.0, &mut rng))
                .last()
                .unwrap()
        };
        let (a, b) = draw(17);
        assert_eq!(a, b);
        assert_eq!(draw(17), (a, b));
        assert_eq!(a.modulus(), 1.0);
    }

    #[test]
    fn emitted_angles_pass_uniform_chi_square() {
        // chi-square against 20 equiprobable bins, 4 sigma above the mean
        let bins = 20usize;
        let n = 100_000usize;
        let source = PairSourceConfig::new(2024);
        let mut rng = ChaCha8Rng::seed_from_u64(source.seed);
        let mut hist = vec![0u32; bins];
        for _ in 0..n {
            let (v, _) = source.emit_pair(1.0, &mut rng);
            hist[((v.angle() / PI) * bins as f64) as usize] += 1;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = hist
            .iter()
            .map(|&h| (h as f64 - expected).powi(2) / expected)
            .sum();
        let dof = (bins - 1) as f64;
        assert!(chi2 < dof + 4.0 * (2.0 * dof).sqrt(), "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn project_is_idempotent(m in 0.0f64..10.0, v in -10.0f64..10.0, a in -10.0f64..10.0) {
            let axis = AnalyzerAxis::new(a);
            let once = project(PolarizationVector::new(m, v), axis);
            let twice = project(once, axis);
            prop_assert!((once.modulus() - twice.modulus()).abs() < 1e-12);
            prop_assert_eq!(once.angle(), twice.angle());
        }

        #[test]
        fn orthogonal_gates_split_energy(m in 0.0f64..10.0, v in -10.0f64..10.0, a in -10.0f64..10.0) {
            let vec = PolarizationVector::new(m, v);
            let axis = AnalyzerAxis::new(a);
            let total = project(vec, axis).energy() + project(vec, axis.orthogonal()).energy();
            prop_assert!((total - vec.energy()).abs() < 1e-9 * (1.0 + vec.energy()));
        }

        #[test]
        fn projection_does_not_commute(v in 0.0f64..PI, a in 0.0f64..PI, b in 0.0f64..PI) {
            let vec = PolarizationVector::new(1.0, v);
            let (ea, eb) = (AnalyzerAxis::new(a), AnalyzerAxis::new(b));
            let ab = project(project(vec, ea), eb);
            let ba = project(project(vec, eb), ea);
            // Moduli agree only when both pass through the same cos(a-b) factor
            // and the final axes differ unless a == b.
            prop_assume!((a - b).abs() > 1e-6 && ab.modulus() > 1e-9);
            prop_assert_ne!(ab, ba);
        }

        #[test]
        fn firing_count_tracks_total_energy(energies in proptest::collection::vec(0.0f64..1.0, 1..400)) {
            let mut m = GateMemory::new(0.0, 1.0);
            let mut fires = 0u64;
            for &e in &energies {
                let (next, f) = gate_step(m, e);
                m = next;
                fires += f as u64;
                prop_assert!(m.accumulator() >= 0.0 && m.accumulator() < 1.0);
            }
            let total: f64 = energies.iter().sum();
            prop_assert!(fires == total.floor() as u64 || fires == total.ceil() as u64,
                "fires {} for total {}", fires, total);
        }
    }
}
