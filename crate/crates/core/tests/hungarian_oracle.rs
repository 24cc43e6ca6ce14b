// Copyright 2026 The bilevel-sched Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use bilevel_sched::hungarian::{solve_assignment, CostMatrix, FORBIDDEN};
use proptest::prelude::*;

/// Minimum over injective row-to-column maps, by enumeration.
fn brute(rows: &[Vec<u64>]) -> Option<u64> {
    fn go(rows: &[Vec<u64>], r: usize, used: &mut Vec<bool>) -> Option<u64> {
        if r == rows.len() {
            return Some(0);
        }
        let mut best: Option<u64> = None;
        for c in 0..used.len() {
            if used[c] || rows[r][c] == FORBIDDEN {
                continue;
            }
            used[c] = true;
            if let Some(rest) = go(rows, r + 1, used) {
                let v = rest + rows[r][c];
                best = Some(best.map_or(v, |b| b.min(v)));
            }
            used[c] = false;
        }
        best
    }
    let cols = rows.first().map_or(0, |r| r.len());
    go(rows, 0, &mut vec![false; cols])
}

fn matrix(max_rows: usize, max_extra: usize) -> impl Strategy<Value = Vec<Vec<u64>>> {
    (1..=max_rows, 0..=max_extra).prop_flat_map(|(r, extra)| {
        prop::collection::vec(prop::collection::vec(0u64..100, r + extra), r)
    })
}

fn check(rows: &[Vec<u64>]) -> Result<(), TestCaseError> {
    let m = CostMatrix::from_rows(rows.to_vec()).unwrap();
    match (solve_assignment(&m), brute(rows)) {
        (Ok(a), Some(b)) => {
            prop_assert_eq!(a.total_cost, b);
            let mut cols = a.columns.clone();
            let sum: u64 = a.columns.iter().enumerate().map(|(r, &c)| rows[r][c]).sum();
            prop_assert_eq!(sum, a.total_cost);
            cols.sort_unstable();
            cols.dedup();
            prop_assert_eq!(cols.len(), rows.len());
        }
        (Err(_), None) => {}
        (got, want) => prop_assert!(false, "solver {:?} vs enumeration {:?}", got, want),
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn square_matches_enumeration(rows in matrix(7, 0)) {
        check(&rows)?;
    }

    #[test]
    fn rectangular_matches_enumeration(rows in matrix(5, 3)) {
        check(&rows)?;
    }

    #[test]
    fn forbidden_entries_respected(
        rows in matrix(5, 1),
        mask in prop::collection::vec(prop::bool::weighted(0.3), 36),
    ) {
        let mut rows = rows;
        let mut k = 0;
        for row in rows.iter_mut() {
            for v in row.iter_mut() {
                if mask[k % mask.len()] {
                    *v = FORBIDDEN;
                }
                k += 1;
            }
        }
        check(&rows)?;
    }

    #[test]
    fn row_shift_and_scale_equivariance(rows in matrix(6, 2), shift in 0u64..50, scale in 1u64..6) {
        let base = solve_assignment(&CostMatrix::from_rows(rows.clone()).unwrap()).unwrap();
        let shifted: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let s = solve_assignment(&CostMatrix::from_rows(shifted).unwrap()).unwrap();
        prop_assert_eq!(s.total_cost, base.total_cost + shift * rows.len() as u64);
        let scaled: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        let s = solve_assignment(&CostMatrix::from_rows(scaled).unwrap()).unwrap();
        prop_assert_eq!(s.total_cost, base.total_cost * scale);
    }

    #[test]
    fn padding_with_a_dominated_column_changes_nothing(rows in matrix(6, 0)) {
        let base = solve_assignment(&CostMatrix::from_rows(rows.clone()).unwrap()).unwrap();
        let padded: Vec<Vec<u64>> = rows.iter().map(|r| {
            let mut r = r.clone();
            r.push(1000);
            r
        }).collect();
        let p = solve_assignment(&CostMatrix::from_rows(padded).unwrap()).unwrap();
        prop_assert_eq!(p.total_cost, base.total_cost);
    }
}
