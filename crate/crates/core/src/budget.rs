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

//! Wall-clock and step budgets shared by all search procedures.
//!
//! Every search loop calls [`Meter::step`] once per atomic unit of work (one
//! neighbor evaluation, one node evaluation). Under a [`Budget::Steps`] budget
//! the run is fully deterministic; under [`Budget::Wall`] the overrun is
//! bounded by a single atomic step.

use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Unlimited,
    Wall(Duration),
    Steps(u64),
}

impl Budget {
    pub fn from_secs_f64(secs: f64) -> Self {
        Budget::Wall(Duration::from_secs_f64(secs.max(0.0)))
    }

    /// Splits the budget into `(fraction, 1 - fraction)` parts.
    pub fn split(self, fraction: f64) -> (Budget, Budget) {
        let fraction = fraction.clamp(0.0, 1.0);
        match self {
            Budget::Unlimited => (Budget::Unlimited, Budget::Unlimited),
            Budget::Wall(d) => {
                let first = d.mul_f64(fraction);
                (Budget::Wall(first), Budget::Wall(d.saturating_sub(first)))
            }
            Budget::Steps(s) => {
                let first = ((s as f64) * fraction).floor() as u64;
                (Budget::Steps(first), Budget::Steps(s - first.min(s)))
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Budget::Unlimited => false,
            Budget::Wall(d) => d.is_zero(),
            Budget::Steps(s) => *s == 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Meter {
    budget: Budget,
    start: Instant,
    steps: u64,
    exhausted: bool,
}

impl Meter {
    pub fn new(budget: Budget) -> Self {
        Meter {
            budget,
            start: Instant::now(),
            steps: 0,
            exhausted: budget.is_zero(),
        }
    }

    pub fn unlimited() -> Self {
        Self::new(Budget::Unlimited)
    }

    /// Consumes one step. Returns `false` once the budget is exhausted; the
    /// caller must stop before doing the work the step stands for.
    pub fn step(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        match self.budget {
            Budget::Unlimited => {}
            Budget::Steps(limit) => {
                if self.steps >= limit {
                    self.exhausted = true;
                    return false;
                }
            }
            Budget::Wall(limit) => {
                if self.start.elapsed() >= limit {
                    self.exhausted = true;
                    return false;
                }
            }
        }
        self.steps += 1;
        true
    }

    /// Claims up to `want` steps at once for a batch of parallel work and
    /// returns how many were granted.
    pub fn claim(&mut self, want: usize) -> usize {
        let granted = if let Budget::Steps(limit) = self.budget {
            want.min(limit.saturating_sub(self.steps) as usize)
        } else if self.step() {
            self.steps -= 1;
            want
        } else {
            0
        };
        self.steps += granted as u64;
        if granted < want {
            self.exhausted = true;
        }
        granted
    }

    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }
}
