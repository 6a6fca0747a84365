//! Minimum-cost bipartite assignment (Hungarian method with potentials).
//!
//! Generic over any ordered numeric cost, so integer and rational costs are
//! solved exactly.

use num_traits::Num;

use crate::matrix::CostMatrix;

/// Outcome of an assignment: matched `(row, col)` pairs plus the leftovers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchResult {
    pub matched: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl MatchResult {
    pub fn unmatched(rows: usize, cols: usize) -> Self {
        Self {
            matched: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
        }
    }

    /// Total cost of the matched pairs, summed in row order.
    pub fn total<C: Copy + Num>(&self, cost: &CostMatrix<C>) -> C {
        let mut pairs = self.matched.clone();
        pairs.sort_unstable();
        pairs
            .iter()
            .fold(C::zero(), |acc, &(r, c)| acc + cost.get(r, c))
    }

    pub fn col_of(&self, row: usize) -> Option<usize> {
        self.matched
            .iter()
            .find(|(r, _)| *r == row)
            .map(|(_, c)| *c)
    }
}

/// Square assignment. Returns the column chosen for every row.
///
/// Ties resolve toward the lowest column index scanned first, so equal inputs
/// always produce equal outputs.
fn solve_square<C: Copy + Num + PartialOrd>(
    n: usize,
    cost: impl Fn(usize, usize) -> C,
) -> Vec<usize> {
    // 1-based potentials; index 0 is the virtual source column.
    let mut u = vec![C::zero(); n + 1];
    let mut v = vec![C::zero(); n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<C>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta: Option<C> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if minv[j].is_none_or(|m| cur < m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].expect("set above");
                if delta.is_none_or(|d| mj < d) {
                    delta = Some(mj);
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else if let Some(m) = minv[j] {
                    minv[j] = Some(m - delta);
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Minimum-total-cost assignment with an optional acceptance gate.
///
/// With a gate, entries are capped at the gate before solving (leaving a pair
/// unmatched costs the gate) and any pair whose cost reaches the gate is
/// reported unmatched. Rectangular inputs are padded with a constant.
pub fn hungarian<C: Copy + Num + PartialOrd>(cost: &CostMatrix<C>, gate: Option<C>) -> MatchResult {
    let (rows, cols) = cost.shape();
    if rows == 0 || cols == 0 {
        return MatchResult::unmatched(rows, cols);
    }
    let n = rows.max(cols);
    let pad = gate.unwrap_or_else(C::zero);
    let entry = |r: usize, c: usize| {
        if r >= rows || c >= cols {
            return pad;
        }
        let v = cost.get(r, c);
        match gate {
            Some(g) if v > g => g,
            _ => v,
        }
    };
    let assignment = solve_square(n, entry);
    let mut result = MatchResult::default();
    let mut col_taken = vec![false; cols];
    for (r, &c) in assignment.iter().enumerate().take(rows) {
        let accepted = c < cols && gate.is_none_or(|g| cost.get(r, c) < g);
        if accepted {
            result.matched.push((r, c));
            col_taken[c] = true;
        } else {
            result.unmatched_rows.push(r);
        }
    }
    result.unmatched_cols = (0..cols).filter(|c| !col_taken[*c]).collect();
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive minimum over all injective row-to-column maps.
    fn brute_force(cost: &CostMatrix<i64>) -> i64 {
        fn go(cost: &CostMatrix<i64>, row: usize, used: &mut Vec<bool>) -> i64 {
            if row == cost.rows() {
                return 0;
            }
            let mut best = i64::MAX;
            for c in 0..cost.cols() {
                if !used[c] {
                    used[c] = true;
                    best = best.min(cost.get(row, c) + go(cost, row + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost.cols()])
    }

    fn assert_partition(m: &MatchResult, rows: usize, cols: usize) {
        let mut r: Vec<usize> = m
            .matched
            .iter()
            .map(|p| p.0)
            .chain(m.unmatched_rows.iter().copied())
            .collect();
        let mut c: Vec<usize> = m
            .matched
            .iter()
            .map(|p| p.1)
            .chain(m.unmatched_cols.iter().copied())
            .collect();
        r.sort_unstable();
        c.sort_unstable();
        assert_eq!(r, (0..rows).collect::<Vec<_>>());
        assert_eq!(c, (0..cols).collect::<Vec<_>>());
    }

    #[test]
    fn two_by_two_example() {
        let cost = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let m = hungarian(&cost, Some(10.0));
        assert_eq!(m.matched, vec![(0, 0), (1, 1)]);
        assert_eq!(m.total(&cost), 2.0);
    }

    #[test]
    fn gate_demotes_expensive_pairs() {
        let cost = CostMatrix::from_rows(&[vec![0.9]]).unwrap();
        let m = hungarian(&cost, Some(0.5));
        assert!(m.matched.is_empty());
        assert_eq!(m.unmatched_rows, vec![0]);
        assert_eq!(m.unmatched_cols, vec![0]);
    }

    #[test]
    fn gate_prefers_leaving_pairs_open() {
        // without capping, the two 0.79 entries beat 0.1 + 100
        let cost = CostMatrix::from_rows(&[vec![0.1, 0.79], vec![0.79, 100.0]]).unwrap();
        let m = hungarian(&cost, Some(0.8));
        assert_eq!(m.matched, vec![(0, 0)]);
        assert_eq!(m.unmatched_rows, vec![1]);
        assert_eq!(m.unmatched_cols, vec![1]);
    }

    #[test]
    fn empty_inputs() {
        let m = hungarian(&CostMatrix::<f64>::filled(0, 3, 0.0), None);
        assert_eq!(m.unmatched_cols, vec![0, 1, 2]);
        let m = hungarian(&CostMatrix::<f64>::filled(2, 0, 0.0), Some(1.0));
        assert_eq!(m.unmatched_rows, vec![0, 1]);
    }

    #[test]
    fn rectangular_inputs() {
        let cost = CostMatrix::from_rows(&[vec![5, 1, 9], vec![2, 8, 7]]).unwrap();
        let m = hungarian(&cost, None);
        assert_eq!(m.matched, vec![(0, 1), (1, 0)]);
        assert_eq!(m.unmatched_cols, vec![2]);
        let tall = CostMatrix::from_rows(&[vec![4], vec![1], vec![3]]).unwrap();
        let m = hungarian(&tall, None);
        assert_eq!(m.matched, vec![(1, 0)]);
        assert_partition(&m, 3, 1);
    }

    #[test]
    fn deterministic_under_ties() {
        let cost = CostMatrix::filled(4, 4, 1);
        let a = hungarian(&cost, None);
        assert_eq!(a, hungarian(&cost, None));
        assert_eq!(a.matched.len(), 4);
    }

    #[test]
    fn random_five_by_five_matches_permutations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let cost = CostMatrix::from_fn(5, 5, |_, _| rng.random_range(0..1000i64));
            assert_eq!(hungarian(&cost, None).total(&cost), brute_force(&cost));
        }
    }

    #[test]
    fn thousand_instances_up_to_seven_square() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000);
        for _ in 0..1000 {
            let rows = rng.random_range(1..=7usize);
            let cols = rng.random_range(rows..=7usize);
            let cost = CostMatrix::from_fn(rows, cols, |_, _| rng.random_range(-100..100i64));
            let m = hungarian(&cost, None);
            assert_partition(&m, rows, cols);
            assert_eq!(m.total(&cost), brute_force(&cost));
        }
    }

    proptest! {
        #[test]
        fn optimal_on_small_integer_matrices(rows in 1usize..=6, cols in 1usize..=6, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (r, c) = (rows.min(cols), rows.max(cols));
            let cost = CostMatrix::from_fn(r, c, |_, _| rng.random_range(-50..50i64));
            let m = hungarian(&cost, None);
            assert_partition(&m, r, c);
            prop_assert_eq!(m.matched.len(), r);
            prop_assert_eq!(m.total(&cost), brute_force(&cost));
        }

        #[test]
        fn gated_results_partition(rows in 0usize..6, cols in 0usize..6, vals in prop::collection::vec(0.0..1.0f64, 36), gate in 0.1..1.0f64) {
            let cost = CostMatrix::from_fn(rows, cols, |r, c| vals[r * 6 + c]);
            let m = hungarian(&cost, Some(gate));
            assert_partition(&m, rows, cols);
            for &(r, c) in &m.matched {
                prop_assert!(cost.get(r, c) < gate);
            }
        }
    }
}
