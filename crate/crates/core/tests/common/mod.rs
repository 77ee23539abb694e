#![allow(dead_code)]

use wqm::engine::SettingPair;
use wqm::sica::PairCountMatrix;

/// The four blocks of a table as lists of `(A outcome, B outcome)`, in
/// `SettingPair::ALL` order.
pub type Blocks = [Vec<(i8, i8)>; 4];

pub fn counts_of(blocks: &Blocks) -> PairCountMatrix {
    let mut m = PairCountMatrix::default();
    for (pair, block) in SettingPair::ALL.iter().zip(blocks) {
        let mut c = [[0u64; 2]; 2];
        for &(x, y) in block {
            c[usize::from(x < 0)][usize::from(y < 0)] += 1;
        }
        m = m.with(*pair, c);
    }
    m
}

/// Brute-force search for within-block permutations that align the four
/// blocks column by column. The (α, β) block is kept in its own order; for
/// each of its columns an unused (α, β′), (α′, β) and (α′, β′) element is
/// tried in turn.
pub fn oracle_reorderable(blocks: &Blocks) -> bool {
    let m = blocks[0].len();
    if blocks.iter().any(|b| b.len() != m) {
        return false;
    }
    let mut used = [vec![false; m], vec![false; m], vec![false; m]];
    search(blocks, 0, &mut used)
}

fn search(blocks: &Blocks, k: usize, used: &mut [Vec<bool>; 3]) -> bool {
    let m = blocks[0].len();
    if k == m {
        return true;
    }
    let (a, b) = blocks[0][k];
    for i in 0..m {
        let (a1, bp) = blocks[1][i];
        if used[0][i] || a1 != a {
            continue;
        }
        used[0][i] = true;
        for j in 0..m {
            let (ap, b1) = blocks[2][j];
            if used[1][j] || b1 != b {
                continue;
            }
            used[1][j] = true;
            for l in 0..m {
                if used[2][l] || blocks[3][l] != (ap, bp) {
                    continue;
                }
                used[2][l] = true;
                if search(blocks, k + 1, used) {
                    return true;
                }
                used[2][l] = false;
                // every unused (ap, bp) element is interchangeable
                break;
            }
            used[1][j] = false;
        }
        used[0][i] = false;
    }
    false
}

pub const VALUES: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Every multiset of `m` pairs, as sorted lists.
pub fn multisets(m: usize) -> Vec<Vec<(i8, i8)>> {
    fn go(start: usize, left: usize, cur: &mut Vec<(i8, i8)>, out: &mut Vec<Vec<(i8, i8)>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for (i, &v) in VALUES.iter().enumerate().skip(start) {
            cur.push(v);
            go(i, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, &mut Vec::new(), &mut out);
    out
}
