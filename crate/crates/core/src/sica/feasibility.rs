//! Condensation as a counting problem.
//!
//! Reordering only permutes `(a_k, b_k)` pairs inside their own setting-pair
//! block, so a legitimate reordering exists iff there are non-negative
//! integer counts over the 16 joint columns `(a, b, a′, b′)` whose four
//! pairwise projections equal the observed 2×2 count matrices.
//!
//! The search runs over `k = #(a = +, a′ = +)`. Once the `(a, a′)` overlap is
//! fixed, `b` only talks to `(a, a′)` and so does `b′`; each side is a 2×2×2
//! table with all three two-way margins fixed, which leaves exactly one free
//! cell with an explicit feasible interval. Any two conditional
//! distributions with equal totals can then be coupled.

use std::fmt;

use crate::engine::SettingPair;
use crate::sica::{Cell, CondensedTable, OutcomeTable, SicaError};

/// Index of ±1 in count arrays: `+1 → 0`, `−1 → 1`.
fn idx(v: i8) -> usize {
    usize::from(v < 0)
}

fn sign(i: usize) -> i8 {
    if i == 0 {
        1
    } else {
        -1
    }
}

fn pair_index(pair: SettingPair) -> usize {
    SettingPair::ALL.iter().position(|&p| p == pair).unwrap()
}

/// One 2×2 joint-outcome count matrix per setting pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCountMatrix {
    /// `[pair in SettingPair::ALL order][a: + / −][b: + / −]`
    counts: [[[u64; 2]; 2]; 4],
}

impl PairCountMatrix {
    pub fn new(counts: [[[u64; 2]; 2]; 4]) -> Self {
        Self { counts }
    }

    /// Sets the matrix of one pair from `[[N++, N+−], [N−+, N−−]]`.
    pub fn with(mut self, pair: SettingPair, m: [[u64; 2]; 2]) -> Self {
        self.counts[pair_index(pair)] = m;
        self
    }

    /// Counts the ±1 columns of `table`; columns with a 0 are skipped and
    /// their number returned alongside.
    pub fn from_table(table: &OutcomeTable) -> (Self, usize) {
        let mut counts = [[[0u64; 2]; 2]; 4];
        let mut dropped = 0;
        for col in 0..table.len() {
            let (a, b) = match table.column_pair(col) {
                (Cell::Zero, _) | (_, Cell::Zero) => {
                    dropped += 1;
                    continue;
                }
                (a, b) => (a, b),
            };
            let to_i = |c: Cell| usize::from(c == Cell::Minus);
            counts[pair_index(table.pairing(col))][to_i(a)][to_i(b)] += 1;
        }
        (Self { counts }, dropped)
    }

    pub fn get(&self, pair: SettingPair, a: i8, b: i8) -> u64 {
        self.counts[pair_index(pair)][idx(a)][idx(b)]
    }

    pub fn matrix(&self, pair: SettingPair) -> [[u64; 2]; 2] {
        self.counts[pair_index(pair)]
    }

    pub fn totals(&self) -> [u64; 4] {
        self.counts.map(|m| m.iter().flatten().sum())
    }

    /// `Σ a·b` of one pairing.
    pub fn product_sum(&self, pair: SettingPair) -> i64 {
        let m = self.matrix(pair);
        (m[0][0] + m[1][1]) as i64 - (m[0][1] + m[1][0]) as i64
    }

    fn signed(&self, pair: SettingPair) -> [[i64; 2]; 2] {
        self.matrix(pair).map(|r| r.map(|v| v as i64))
    }
}

/// One station-setting series, seen in the two blocks that share it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    A,
    B,
    APrime,
    BPrime,
}

impl Series {
    pub fn label(self) -> &'static str {
        match self {
            Series::A => "a",
            Series::B => "b",
            Series::APrime => "a'",
            Series::BPrime => "b'",
        }
    }

    /// The two pairings sharing this series and whether the series is the
    /// row (A side) of their matrices.
    fn blocks(self) -> (SettingPair, SettingPair, bool) {
        match self {
            Series::A => (SettingPair::ALPHA_BETA, SettingPair::ALPHA_BETA_PRIME, true),
            Series::B => (
                SettingPair::ALPHA_BETA,
                SettingPair::ALPHA_PRIME_BETA,
                false,
            ),
            Series::APrime => (
                SettingPair::ALPHA_PRIME_BETA,
                SettingPair::ALPHA_PRIME_BETA_PRIME,
                true,
            ),
            Series::BPrime => (
                SettingPair::ALPHA_BETA_PRIME,
                SettingPair::ALPHA_PRIME_BETA_PRIME,
                false,
            ),
        }
    }
}

/// Why no legitimate reordering exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// Blocks of different length can never be aligned element by element.
    UnequalBlocks { sizes: [u64; 4] },
    /// A series has a different number of +1 in the two blocks that record it.
    MarginalMismatch {
        series: Series,
        first: (SettingPair, [u64; 2]),
        second: (SettingPair, [u64; 2]),
    },
    /// `sign · (C(αβ) + C(αβ′) + C(α′β) + C(α′β′) − 2·C(odd)) ≤ 2M` fails,
    /// with `C` the product sum of a block.
    ChshBound {
        odd: SettingPair,
        sign: i8,
        value: i64,
        bound: u64,
    },
    /// Margins pass every linear check above but admit no integer filling.
    NoIntegerFilling,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::UnequalBlocks { sizes } => {
                write!(f, "blocks have unequal lengths {sizes:?}")
            }
            Witness::MarginalMismatch {
                series,
                first,
                second,
            } => write!(
                f,
                "series {} has (+1: {}, -1: {}) under {} but (+1: {}, -1: {}) under {}",
                series.label(),
                first.1[0],
                first.1[1],
                first.0,
                second.1[0],
                second.1[1],
                second.0
            ),
            Witness::ChshBound {
                odd,
                sign,
                value,
                bound,
            } => write!(
                f,
                "{}(C[alpha/beta] + C[alpha/beta'] + C[alpha'/beta] + C[alpha'/beta'] - 2 C[{odd}]) = {value} > 2M = {bound}",
                if *sign > 0 { "+" } else { "-" }
            ),
            Witness::NoIntegerFilling => f.write_str("no non-negative integer joint filling exists"),
        }
    }
}

/// Counts over the 16 joint columns, `[a][b][a′][b′]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JointCounts {
    cells: [[[[u64; 2]; 2]; 2]; 2],
}

impl JointCounts {
    pub fn get(&self, a: i8, b: i8, a_prime: i8, b_prime: i8) -> u64 {
        self.cells[idx(a)][idx(b)][idx(a_prime)][idx(b_prime)]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().flatten().flatten().sum()
    }

    /// Non-zero cells as `((a, b, a′, b′), count)`.
    pub fn iter(&self) -> impl Iterator<Item = ([i8; 4], u64)> + '_ {
        (0..16usize).filter_map(move |k| {
            let (i, j, l, m) = (k >> 3 & 1, k >> 2 & 1, k >> 1 & 1, k & 1);
            let n = self.cells[i][j][l][m];
            (n > 0).then_some(([sign(i), sign(j), sign(l), sign(m)], n))
        })
    }

    /// Pairwise projections back onto the four setting pairs.
    pub fn margins(&self) -> PairCountMatrix {
        let mut out = PairCountMatrix::default();
        for ([a, b, ap, bp], n) in self.iter() {
            out.counts[pair_index(SettingPair::ALPHA_BETA)][idx(a)][idx(b)] += n;
            out.counts[pair_index(SettingPair::ALPHA_BETA_PRIME)][idx(a)][idx(bp)] += n;
            out.counts[pair_index(SettingPair::ALPHA_PRIME_BETA)][idx(ap)][idx(b)] += n;
            out.counts[pair_index(SettingPair::ALPHA_PRIME_BETA_PRIME)][idx(ap)][idx(bp)] += n;
        }
        out
    }

    /// One condensed column per unit of count.
    pub fn to_table(&self) -> Result<CondensedTable, SicaError> {
        let cols: Vec<[i8; 4]> = self
            .iter()
            .flat_map(|(col, n)| std::iter::repeat_n(col, n as usize))
            .collect();
        CondensedTable::from_columns(&cols)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(JointCounts),
    Infeasible(Witness),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

fn marginal(m: &PairCountMatrix, pair: SettingPair, row_side: bool) -> [u64; 2] {
    let x = m.matrix(pair);
    if row_side {
        [x[0][0] + x[0][1], x[1][0] + x[1][1]]
    } else {
        [x[0][0] + x[1][0], x[0][1] + x[1][1]]
    }
}

/// Fills `t[a][a′][c]` from its margins `x[a][c]`, `y[a′][c]` and `w[a][a′]`.
/// The only free cell is `z = t[+][+][+]`.
fn fill_three_way(
    x: [[i64; 2]; 2],
    y: [[i64; 2]; 2],
    w: [[i64; 2]; 2],
) -> Option<[[[i64; 2]; 2]; 2]> {
    let c_plus = x[0][0] + x[1][0];
    let lo = 0
        .max(x[0][0] - w[0][1])
        .max(y[0][0] - w[1][0])
        .max(x[0][0] + y[0][0] - c_plus);
    let hi = w[0][0]
        .min(x[0][0])
        .min(y[0][0])
        .min(w[1][1] - c_plus + x[0][0] + y[0][0]);
    if lo > hi {
        return None;
    }
    let z = lo;
    let mut t = [[[0i64; 2]; 2]; 2];
    t[0][0][0] = z;
    t[0][0][1] = w[0][0] - z;
    t[0][1][0] = x[0][0] - z;
    t[1][0][0] = y[0][0] - z;
    t[0][1][1] = w[0][1] - t[0][1][0];
    t[1][0][1] = w[1][0] - t[1][0][0];
    t[1][1][0] = c_plus - t[0][0][0] - t[0][1][0] - t[1][0][0];
    t[1][1][1] = w[1][1] - t[1][1][0];
    debug_assert!(t.iter().flatten().flatten().all(|&v| v >= 0));
    Some(t)
}

/// Decides whether the four count matrices admit a joint filling, returning
/// one when they do.
pub fn feasibility_by_counts(counts: &PairCountMatrix) -> Result<Feasibility, SicaError> {
    let totals = counts.totals();
    if totals.iter().any(|&t| t != totals[0]) {
        return Err(SicaError::UnequalTotals(totals));
    }
    let m = totals[0] as i64;

    for series in [Series::A, Series::B, Series::APrime, Series::BPrime] {
        let (p, q, row_side) = series.blocks();
        let (first, second) = (marginal(counts, p, row_side), marginal(counts, q, row_side));
        if first != second {
            return Ok(Feasibility::Infeasible(Witness::MarginalMismatch {
                series,
                first: (p, first),
                second: (q, second),
            }));
        }
    }

    let c_sum: i64 = SettingPair::ALL
        .iter()
        .map(|&p| counts.product_sum(p))
        .sum();
    for odd in SettingPair::ALL {
        for s in [1i64, -1] {
            let value = s * (c_sum - 2 * counts.product_sum(odd));
            if value > 2 * m {
                return Ok(Feasibility::Infeasible(Witness::ChshBound {
                    odd,
                    sign: s as i8,
                    value,
                    bound: 2 * m as u64,
                }));
            }
        }
    }

    let ab = counts.signed(SettingPair::ALPHA_BETA);
    let abp = counts.signed(SettingPair::ALPHA_BETA_PRIME);
    let apb = counts.signed(SettingPair::ALPHA_PRIME_BETA);
    let apbp = counts.signed(SettingPair::ALPHA_PRIME_BETA_PRIME);
    let a_plus = ab[0][0] + ab[0][1];
    let ap_plus = apb[0][0] + apb[0][1];

    let k_lo = 0.max(a_plus + ap_plus - m);
    let k_hi = a_plus.min(ap_plus);
    for k in k_lo..=k_hi {
        let w = [[k, a_plus - k], [ap_plus - k, m - a_plus - ap_plus + k]];
        let Some(t) = fill_three_way(ab, apb, w) else {
            continue;
        };
        let Some(s) = fill_three_way(abp, apbp, w) else {
            continue;
        };
        let mut joint = JointCounts::default();
        for i in 0..2 {
            for l in 0..2 {
                let (tb, sb) = (t[i][l], s[i][l]);
                let n00 = tb[0].min(sb[0]);
                let n01 = tb[0] - n00;
                let n10 = sb[0] - n00;
                let n11 = tb[1] - n10;
                joint.cells[i][0][l][0] = n00 as u64;
                joint.cells[i][0][l][1] = n01 as u64;
                joint.cells[i][1][l][0] = n10 as u64;
                joint.cells[i][1][l][1] = n11 as u64;
            }
        }
        debug_assert_eq!(joint.margins(), *counts);
        return Ok(Feasibility::Feasible(joint));
    }
    Ok(Feasibility::Infeasible(Witness::NoIntegerFilling))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condensed {
    Table(CondensedTable),
    Infeasible(Witness),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condensation {
    /// Columns skipped because a station recorded 0.
    pub dropped_zero_slots: usize,
    pub result: Condensed,
}

/// Condenses `table` when a legitimate reordering exists. Condensed columns
/// follow the order of the (α, β) block.
pub fn condense(table: &OutcomeTable) -> Result<Condensation, SicaError> {
    if table.is_empty() {
        return Err(SicaError::MalformedTable("table has no columns".into()));
    }
    OutcomeTable::new(table.rows().clone())?;
    let (counts, dropped_zero_slots) = PairCountMatrix::from_table(table);
    let sizes = counts.totals();
    let infeasible = |witness| {
        Ok(Condensation {
            dropped_zero_slots,
            result: Condensed::Infeasible(witness),
        })
    };
    if sizes.iter().any(|&s| s != sizes[0]) {
        return infeasible(Witness::UnequalBlocks { sizes });
    }
    if sizes[0] == 0 {
        return Err(SicaError::MalformedTable(
            "no ±1 columns to condense".into(),
        ));
    }
    let mut joint = match feasibility_by_counts(&counts)? {
        Feasibility::Feasible(j) => j,
        Feasibility::Infeasible(w) => return infeasible(w),
    };

    let mut cols = Vec::with_capacity(sizes[0] as usize);
    for col in 0..table.len() {
        if table.pairing(col) != SettingPair::ALPHA_BETA {
            continue;
        }
        let (a, b) = match table.column_pair(col) {
            (Cell::Plus, b) => (1i8, b),
            (Cell::Minus, b) => (-1, b),
            _ => continue,
        };
        let b = match b {
            Cell::Plus => 1i8,
            Cell::Minus => -1,
            _ => continue,
        };
        let (ap, bp) = [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)]
            .into_iter()
            .find(|&(ap, bp)| joint.get(a, b, ap, bp) > 0)
            .expect("joint filling covers every (a, b) column");
        joint.cells[idx(a)][idx(b)][idx(ap)][idx(bp)] -= 1;
        cols.push([a, b, ap, bp]);
    }
    Ok(Condensation {
        dropped_zero_slots,
        result: Condensed::Table(CondensedTable::from_columns(&cols)?),
    })
}
