//! Outcome tables with empty boxes, legitimate reordering (condensation)
//! and executable checks of the CHSH / CH arithmetic bounds.
//!
//! Rows are always ordered `a, b, a′, b′`. An empty box is a measurement
//! that was never performed; it is not the outcome 0.

mod feasibility;

use std::fmt;

use thiserror::Error;

use crate::engine::{
    RunLog, SettingA, SettingB, SettingPair, SettingsSchedule, SlotRecord, Station,
};
use crate::model::Outcome;

pub use feasibility::{
    condense, feasibility_by_counts, Condensation, Condensed, Feasibility, JointCounts,
    PairCountMatrix, Series, Witness,
};

#[derive(Debug, Error, PartialEq)]
pub enum SicaError {
    #[error("outcome table is malformed: {0}")]
    MalformedTable(String),
    #[error("log does not follow the four-block schedule")]
    NotBlockSchedule,
    #[error("pair count matrices have unequal totals {0:?}")]
    UnequalTotals([u64; 4]),
    #[error("bound check failed: {0}")]
    BoundViolation(String),
    #[error("logs are not replay-compatible: {0}")]
    NotReplayCompatible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Plus,
    Minus,
    Zero,
    Empty,
}

impl From<Outcome> for Cell {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Plus => Cell::Plus,
            Outcome::Minus => Cell::Minus,
            Outcome::Zero => Cell::Zero,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cell::Plus => "+",
            Cell::Minus => "-",
            Cell::Zero => "0",
            Cell::Empty => ".",
        })
    }
}

pub const ROW_LABELS: [&str; 4] = ["a", "b", "a'", "b'"];

/// Four rows over the recorded slots, one setting per station per column.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    rows: [Vec<Cell>; 4],
}

impl OutcomeTable {
    pub fn new(rows: [Vec<Cell>; 4]) -> Result<Self, SicaError> {
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SicaError::MalformedTable(
                "rows have different lengths".into(),
            ));
        }
        let filled = |r: &[Cell], i: usize| u8::from(r[i] != Cell::Empty);
        for i in 0..n {
            let a_set = filled(&rows[0], i) + filled(&rows[2], i);
            let b_set = filled(&rows[1], i) + filled(&rows[3], i);
            if a_set != 1 || b_set != 1 {
                return Err(SicaError::MalformedTable(format!(
                    "column {} must hold exactly one a-row and one b-row outcome",
                    i + 1
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Lays records out by the setting each station applied.
    pub fn from_records(records: &[SlotRecord]) -> Self {
        let mut rows: [Vec<Cell>; 4] = Default::default();
        for r in records {
            let (a_row, ap_row) = match r.setting_a {
                SettingA::Alpha => (Cell::from(r.outcome_a), Cell::Empty),
                SettingA::AlphaPrime => (Cell::Empty, Cell::from(r.outcome_a)),
            };
            let (b_row, bp_row) = match r.setting_b {
                SettingB::Beta => (Cell::from(r.outcome_b), Cell::Empty),
                SettingB::BetaPrime => (Cell::Empty, Cell::from(r.outcome_b)),
            };
            rows[0].push(a_row);
            rows[1].push(b_row);
            rows[2].push(ap_row);
            rows[3].push(bp_row);
        }
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> &[Vec<Cell>; 4] {
        &self.rows
    }

    pub fn pairing(&self, column: usize) -> SettingPair {
        let a = if self.rows[0][column] != Cell::Empty {
            SettingA::Alpha
        } else {
            SettingA::AlphaPrime
        };
        let b = if self.rows[1][column] != Cell::Empty {
            SettingB::Beta
        } else {
            SettingB::BetaPrime
        };
        SettingPair::new(a, b)
    }

    /// The (A, B) cells of one column.
    pub fn column_pair(&self, column: usize) -> (Cell, Cell) {
        let pair = self.pairing(column);
        let a = match pair.a {
            SettingA::Alpha => self.rows[0][column],
            SettingA::AlphaPrime => self.rows[2][column],
        };
        let b = match pair.b {
            SettingB::Beta => self.rows[1][column],
            SettingB::BetaPrime => self.rows[3][column],
        };
        (a, b)
    }
}

impl fmt::Display for OutcomeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, row) in ROW_LABELS.iter().zip(&self.rows) {
            write!(f, "{label:<3}")?;
            for c in row {
                write!(f, " {c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Builds the empty-box table of a block-schedule log.
pub fn build_table(records: &[SlotRecord]) -> Result<OutcomeTable, SicaError> {
    let pairs: Vec<SettingPair> = records.iter().map(SlotRecord::pair).collect();
    if pairs.is_empty() || !SettingsSchedule::from_pairs(pairs).is_block() {
        return Err(SicaError::NotBlockSchedule);
    }
    Ok(OutcomeTable::from_records(records))
}

/// A table with no empty boxes: four aligned ±1 series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensedTable {
    rows: [Vec<i8>; 4],
}

impl CondensedTable {
    pub fn new(rows: [Vec<i8>; 4]) -> Result<Self, SicaError> {
        let m = rows[0].len();
        if m == 0 {
            return Err(SicaError::MalformedTable("condensed table is empty".into()));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(SicaError::MalformedTable(
                "rows have different lengths".into(),
            ));
        }
        if rows.iter().flatten().any(|&v| v != 1 && v != -1) {
            return Err(SicaError::MalformedTable(
                "condensed cells must be ±1".into(),
            ));
        }
        Ok(Self { rows })
    }

    /// Builds a table from `(a, b, a′, b′)` columns.
    pub fn from_columns(cols: &[[i8; 4]]) -> Result<Self, SicaError> {
        let rows = std::array::from_fn(|r| cols.iter().map(|c| c[r]).collect());
        Self::new(rows)
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows[0].is_empty()
    }

    pub fn rows(&self) -> &[Vec<i8>; 4] {
        &self.rows
    }

    pub fn column(&self, i: usize) -> [i8; 4] {
        std::array::from_fn(|r| self.rows[r][i])
    }

    pub fn columns(&self) -> impl Iterator<Item = [i8; 4]> + '_ {
        (0..self.len()).map(|i| self.column(i))
    }

    /// Columns in sorted order, for comparisons up to column order.
    pub fn sorted_columns(&self) -> Vec<[i8; 4]> {
        let mut cols: Vec<_> = self.columns().collect();
        cols.sort_unstable();
        cols
    }
}

impl fmt::Display for CondensedTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, row) in ROW_LABELS.iter().zip(&self.rows) {
            write!(f, "{label:<3}")?;
            for &v in row {
                f.write_str(if v > 0 { " +" } else { " -" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// `|b − b′| + |b + b′|`; equals 2 for every ±1 pair.
pub fn column_certificate(b: i8, b_prime: i8) -> i32 {
    (b as i32 - b_prime as i32).abs() + (b as i32 + b_prime as i32).abs()
}

/// CHSH on the shared index set, `(|Σab − Σab′| + |Σa′b + Σa′b′|) / M`,
/// checked against 2 together with the per-column certificate.
pub fn verify_chsh_bound(table: &CondensedTable) -> Result<f64, SicaError> {
    let [a, b, ap, bp] = table.rows();
    let dot = |x: &[i8], y: &[i8]| -> i64 { x.iter().zip(y).map(|(&p, &q)| (p * q) as i64).sum() };
    for (i, (&bi, &bpi)) in b.iter().zip(bp).enumerate() {
        let cert = column_certificate(bi, bpi);
        if cert != 2 {
            return Err(SicaError::BoundViolation(format!(
                "column {} certificate is {cert}, not 2",
                i + 1
            )));
        }
    }
    let m = table.len() as f64;
    let s = ((dot(a, b) - dot(a, bp)).abs() + (dot(ap, b) + dot(ap, bp)).abs()) as f64 / m;
    if s > 2.0 {
        return Err(SicaError::BoundViolation(format!("S = {s} exceeds 2")));
    }
    Ok(s)
}

/// One CH term on 0/1-encoded outcomes:
/// `T = a(b + b′) + a′(b − b′) − a − b`.
pub fn ch_term(a: i32, a_prime: i32, b: i32, b_prime: i32) -> i32 {
    a * (b + b_prime) + a_prime * (b - b_prime) - a - b
}

/// Re-encodes the table to 0/1 (+1 → 1, −1 → 0), checks every `T_i ≤ 0` and
/// returns `J = Σ T_i`.
pub fn verify_ch_bound(table: &CondensedTable) -> Result<i64, SicaError> {
    let bit = |v: i8| i32::from(v > 0);
    let mut j = 0i64;
    for (i, [a, b, ap, bp]) in table.columns().enumerate() {
        let t = ch_term(bit(a), bit(ap), bit(b), bit(bp));
        if t > 0 {
            return Err(SicaError::BoundViolation(format!("T_{} = {t} > 0", i + 1)));
        }
        j += t as i64;
    }
    Ok(j)
}

/// Slots where the station whose setting was held fixed recorded a
/// different outcome in the replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalityDiff {
    pub fixed_station: Station,
    pub slots: Vec<u64>,
}

/// Compares two runs on the same hidden-variable trace that differ only in
/// one station's settings.
pub fn sica_locality_diff(original: &RunLog, replay: &RunLog) -> Result<LocalityDiff, SicaError> {
    let incompatible = |m: &str| Err(SicaError::NotReplayCompatible(m.into()));
    match (&original.trace, &replay.trace) {
        (Some(x), Some(y)) if x == y => {}
        (Some(_), Some(_)) => return incompatible("hidden-variable traces differ"),
        _ => return incompatible("both logs need a hidden-variable trace"),
    }
    if original.records.len() != replay.records.len()
        || original
            .records
            .iter()
            .zip(&replay.records)
            .any(|(x, y)| x.slot != y.slot)
    {
        return incompatible("slot indices differ");
    }
    let same = |s: Station| original.applied_angles(s) == replay.applied_angles(s);
    let fixed_station = if same(Station::B) {
        Station::B
    } else if same(Station::A) {
        Station::A
    } else {
        return incompatible("settings changed at both stations");
    };
    let slots = original
        .records
        .iter()
        .zip(&replay.records)
        .filter(|(x, y)| x.outcome(fixed_station) != y.outcome(fixed_station))
        .map(|(x, _)| x.slot)
        .collect();
    Ok(LocalityDiff {
        fixed_station,
        slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn tight_table() -> CondensedTable {
        CondensedTable::new([
            vec![-1, 1, -1, 1],
            vec![-1, 1, -1, 1],
            vec![-1, 1, 1, -1],
            vec![1, -1, 1, -1],
        ])
        .unwrap()
    }

    #[test]
    fn tight_table_chsh_is_two() {
        let t = tight_table();
        let [a, b, ap, bp] = t.rows();
        let dot = |x: &[i8], y: &[i8]| x.iter().zip(y).map(|(&p, &q)| (p * q) as i32).sum::<i32>();
        assert_eq!(
            (dot(a, b), dot(a, bp), dot(ap, b), dot(ap, bp)),
            (4, -4, 0, 0)
        );
        assert_eq!(verify_chsh_bound(&t), Ok(2.0));
        assert!(verify_ch_bound(&t).unwrap() <= 0);
    }

    #[test]
    fn identical_b_rows_reduce_first_term() {
        let a = vec![1, -1, 1, 1, -1];
        let b = vec![1, 1, -1, 1, -1];
        let ap = vec![-1, -1, 1, 1, 1];
        let t = CondensedTable::new([a, b.clone(), ap.clone(), b.clone()]).unwrap();
        let sum_apb: i32 = ap.iter().zip(&b).map(|(&x, &y)| (x * y) as i32).sum();
        let s = verify_chsh_bound(&t).unwrap();
        assert_eq!(s, 2.0 * sum_apb.abs() as f64 / 5.0);
    }

    #[test]
    fn ch_term_cases() {
        for b in 0..=1 {
            for bp in 0..=1 {
                assert_eq!(ch_term(0, 1, b, bp), -bp);
                assert_eq!(ch_term(0, 0, b, bp), -b);
                assert_eq!(ch_term(1, 0, b, bp), bp - 1);
                assert_eq!(ch_term(1, 1, b, bp), b - 1);
            }
        }
        assert_eq!(ch_term(0, 0, 0, 0), 0);
    }

    #[test]
    fn malformed_tables_rejected() {
        use Cell::*;
        let bad = OutcomeTable::new([vec![Plus], vec![Plus], vec![Minus], vec![Empty]]);
        assert!(matches!(bad, Err(SicaError::MalformedTable(_))));
        let ragged = OutcomeTable::new([vec![Plus], vec![Plus, Plus], vec![Empty], vec![Empty]]);
        assert!(matches!(ragged, Err(SicaError::MalformedTable(_))));
        assert!(CondensedTable::new([vec![0], vec![1], vec![1], vec![1]]).is_err());
        assert!(CondensedTable::new([vec![], vec![], vec![], vec![]]).is_err());
    }

    #[test]
    fn zero_outcomes_are_not_empty_boxes() {
        let records: Vec<SlotRecord> = SettingsSchedule::block(4)
            .pairs()
            .iter()
            .enumerate()
            .map(|(i, p)| SlotRecord {
                slot: i as u64 + 1,
                setting_a: p.a,
                setting_b: p.b,
                outcome_a: if i == 1 { Outcome::Zero } else { Outcome::Plus },
                outcome_b: Outcome::Plus,
            })
            .collect();
        let t = build_table(&records).unwrap();
        assert_eq!(t.rows()[0][1], Cell::Zero);
        assert_eq!(t.rows()[2][1], Cell::Empty);
        assert_eq!(t.column_pair(1), (Cell::Zero, Cell::Plus));
        // every non-empty cell is +1 except the zero
        let plus = t
            .rows()
            .iter()
            .flatten()
            .filter(|&&c| c == Cell::Plus)
            .count();
        assert_eq!(plus, 7);
        assert!(OutcomeTable::new(t.rows().clone()).is_ok());
    }

    #[test]
    fn non_block_logs_rejected() {
        let records: Vec<SlotRecord> = SettingsSchedule::random(8, 1)
            .pairs()
            .iter()
            .enumerate()
            .map(|(i, p)| SlotRecord {
                slot: i as u64 + 1,
                setting_a: p.a,
                setting_b: p.b,
                outcome_a: Outcome::Plus,
                outcome_b: Outcome::Plus,
            })
            .collect();
        assert_eq!(build_table(&records), Err(SicaError::NotBlockSchedule));
        assert_eq!(build_table(&[]), Err(SicaError::NotBlockSchedule));
    }

    proptest! {
        #[test]
        fn random_condensed_tables_respect_bounds(
            cols in proptest::collection::vec(proptest::array::uniform4(prop::bool::ANY), 1..=100)
        ) {
            let cols: Vec<[i8; 4]> = cols
                .iter()
                .map(|c| c.map(|b| if b { 1 } else { -1 }))
                .collect();
            let t = CondensedTable::from_columns(&cols).unwrap();
            let s = verify_chsh_bound(&t).unwrap();
            prop_assert!(s <= 2.0);
            prop_assert!(verify_ch_bound(&t).unwrap() <= 0);
            for [_, b, _, bp] in t.columns() {
                let (d, p) = ((b - bp).abs(), (b + bp).abs());
                prop_assert!((d == 2 && p == 0) || (d == 0 && p == 2));
            }
        }
    }
}
