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

//! Minimum-cost rectangular assignment.
//!
//! Rectangular `R x C` problems (`R <= C`) are padded with zero-cost dummy
//! rows and solved with the O(n^3) shortest-augmenting-path form of the
//! Hungarian method. Among all co-optimal matchings the lexicographically
//! smallest column vector is returned: every optimal matching is a perfect
//! matching on the zero-reduced-cost edges of the final duals, so the
//! lexicographic choice is made greedily on that subgraph.

use crate::error::{Error, Result};

/// Marks a disallowed row/column pair.
pub const FORBIDDEN: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, fill: u64) -> Result<Self> {
        if rows > cols {
            return Err(Error::Argument(format!(
                "assignment needs rows <= cols, got {rows}x{cols}"
            )));
        }
        Ok(CostMatrix {
            rows,
            cols,
            data: vec![fill; rows * cols],
        })
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Argument("ragged cost matrix".into()));
        }
        let mut m = CostMatrix::new(r, c, 0)?;
        for (i, row) in rows.into_iter().enumerate() {
            m.data[i * c..(i + 1) * c].copy_from_slice(&row);
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// `columns[r]` is the column matched to row `r`.
    pub columns: Vec<usize>,
    pub total_cost: u64,
}

pub fn solve_assignment(costs: &CostMatrix) -> Result<Assignment> {
    let (rows, n) = (costs.rows, costs.cols);
    if rows == 0 {
        return Ok(Assignment {
            columns: Vec::new(),
            total_cost: 0,
        });
    }
    for r in 0..rows {
        if (0..n).all(|c| costs.get(r, c) == FORBIDDEN) {
            return Err(Error::InfeasibleAssignment { row: r });
        }
    }

    let max_finite = costs
        .data
        .iter()
        .copied()
        .filter(|&v| v != FORBIDDEN)
        .max()
        .unwrap_or(0) as i128;
    // Any matching that touches a forbidden entry costs more than every
    // matching that does not.
    let big = (max_finite + 1) * n as i128 + 1;
    let a = |i: usize, j: usize| -> i128 {
        // 1-based; rows beyond `rows` are zero-cost dummies.
        if i > rows {
            0
        } else {
            match costs.get(i - 1, j - 1) {
                FORBIDDEN => big,
                v => v as i128,
            }
        }
    };

    let inf = i128::MAX / 4;
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = a(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    // row -> col (0-based)
    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    for (r, &c) in row_to_col.iter().enumerate().take(rows) {
        if costs.get(r, c) == FORBIDDEN {
            return Err(Error::InfeasibleAssignment { row: r });
        }
    }

    let tight = |r: usize, c: usize| -> bool { a(r + 1, c + 1) - u[r + 1] - v[c + 1] == 0 };
    lexicographic_refine(n, rows, &mut row_to_col, &tight);

    let columns: Vec<usize> = row_to_col[..rows].to_vec();
    let total_cost = columns
        .iter()
        .enumerate()
        .map(|(r, &c)| costs.get(r, c))
        .sum();
    Ok(Assignment {
        columns,
        total_cost,
    })
}

/// Rewrites a perfect matching on the tight subgraph into the
/// lexicographically smallest one for the first `real_rows` rows.
fn lexicographic_refine(
    n: usize,
    real_rows: usize,
    row_to_col: &mut [usize],
    tight: &dyn Fn(usize, usize) -> bool,
) {
    let mut col_to_row = vec![usize::MAX; n];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let mut row_fixed = vec![false; n];
    let mut col_fixed = vec![false; n];

    for r in 0..real_rows {
        let current = row_to_col[r];
        for c in 0..n {
            if col_fixed[c] || !tight(r, c) {
                continue;
            }
            if c == current {
                break;
            }
            // Tentatively take r -> c and re-match the displaced row.
            let displaced = col_to_row[c];
            row_to_col[r] = c;
            col_to_row[c] = r;
            row_to_col[displaced] = usize::MAX;
            col_to_row[current] = usize::MAX;
            row_fixed[r] = true;
            col_fixed[c] = true;
            let mut seen = vec![false; n];
            if augment(
                displaced,
                tight,
                &row_fixed,
                &col_fixed,
                row_to_col,
                &mut col_to_row,
                &mut seen,
            ) {
                row_fixed[r] = false;
                col_fixed[c] = false;
                break;
            }
            // Revert.
            row_fixed[r] = false;
            col_fixed[c] = false;
            row_to_col[r] = current;
            col_to_row[current] = r;
            row_to_col[displaced] = c;
            col_to_row[c] = displaced;
        }
        row_fixed[r] = true;
        col_fixed[row_to_col[r]] = true;
    }
}

fn augment(
    r: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    row_fixed: &[bool],
    col_fixed: &[bool],
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
    seen: &mut [bool],
) -> bool {
    let n = col_to_row.len();
    for c in 0..n {
        if col_fixed[c] || seen[c] || !tight(r, c) {
            continue;
        }
        seen[c] = true;
        let other = col_to_row[c];
        if other == usize::MAX
            || (!row_fixed[other]
                && augment(other, tight, row_fixed, col_fixed, row_to_col, col_to_row, seen))
        {
            row_to_col[r] = c;
            col_to_row[c] = r;
            return true;
        }
    }
    false
}
