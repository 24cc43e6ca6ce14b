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

//! Multi-start local search. A lower-bound-free beam search harvests a list
//! of diverse complete schedules, then local search runs from each of them,
//! best first, until the time budget runs out.

use std::collections::HashSet;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::budget::{Budget, Meter};
use crate::error::Result;
use crate::follower::{compute_blocks, BlockSchedule};
use crate::localsearch::{initial_schedule, run_ls_schedule, LsConfig, LsVariant};
use crate::model::{Instance, Objectives, Solution};
use crate::rbs::{run_rbs_with, NullBound, RbsConfig, SolutionSink};

#[derive(Debug, Clone)]
struct Entry {
    w: u64,
    seq: u64,
    key: (Vec<u64>, u64),
    schedule: BlockSchedule,
}

#[derive(Debug, Default)]
struct PoolState {
    leaves: Vec<Entry>,
    aux: Vec<Entry>,
    keys: HashSet<(Vec<u64>, u64)>,
    seq: u64,
}

/// Bounded list of start solutions. Leaves are kept ahead of auxiliary
/// completions, which only fill the room the leaves leave free.
#[derive(Debug)]
pub struct SeedPool {
    capacity: usize,
    state: Mutex<PoolState>,
}

impl SeedPool {
    pub fn new(capacity: usize) -> Self {
        SeedPool {
            capacity: capacity.max(1),
            state: Mutex::new(PoolState::default()),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Inserts into a list sorted by `(w, seq)`, keeping at most `cap`.
    /// Returns the evicted entry, or the rejected one.
    fn insert(list: &mut Vec<Entry>, entry: Entry, cap: usize) -> Option<Entry> {
        let at = list.partition_point(|e| (e.w, e.seq) <= (entry.w, entry.seq));
        if list.len() >= cap && at >= cap {
            return Some(entry);
        }
        list.insert(at, entry);
        if list.len() > cap {
            list.pop()
        } else {
            None
        }
    }

    /// Final seeds in ascending `W`, ties by insertion order.
    pub fn into_seeds(self) -> Vec<(u64, BlockSchedule)> {
        let state = self.state.into_inner().unwrap_or_else(|e| e.into_inner());
        let room = self.capacity.saturating_sub(state.leaves.len());
        let mut all: Vec<Entry> = state.leaves;
        all.extend(state.aux.into_iter().take(room));
        all.sort_by_key(|e| (e.w, e.seq));
        all.into_iter().map(|e| (e.w, e.schedule)).collect()
    }

    pub fn len(&self) -> usize {
        let state = self.state.lock().unwrap_or_else(|e| e.into_inner());
        (state.leaves.len() + state.aux.len()).min(self.capacity)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl SolutionSink for SeedPool {
    fn offer(&self, schedule: &BlockSchedule, w: u64, leaf: bool) {
        let mut guard = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let state = &mut *guard;
        let key = (schedule.selection_key(), w);
        let seq = state.seq;
        state.seq += 1;
        if state.keys.contains(&key) {
            // A leaf displaces an auxiliary entry with the same key.
            if !leaf {
                return;
            }
            match state.aux.iter().position(|e| e.key == key) {
                Some(idx) => {
                    state.aux.remove(idx);
                }
                None => return,
            }
            state.keys.remove(&key);
        }
        let entry = Entry {
            w,
            seq,
            key: key.clone(),
            schedule: schedule.clone(),
        };
        let list = if leaf { &mut state.leaves } else { &mut state.aux };
        state.keys.insert(key);
        if let Some(out) = Self::insert(list, entry, self.capacity) {
            state.keys.remove(&out.key);
        }
    }
}

#[derive(Debug, Clone)]
pub struct MslsConfig {
    pub beam_width: usize,
    pub k: usize,
    /// Share of the budget given to the local search phase.
    pub ls_fraction: f64,
    pub budget: Budget,
    pub ls_variant: LsVariant,
    pub ls_max_rounds: Option<usize>,
}

impl MslsConfig {
    pub fn new(beam_width: usize, k: usize, ls_fraction: f64) -> Self {
        MslsConfig {
            beam_width: beam_width.max(1),
            k: k.max(1),
            ls_fraction: ls_fraction.clamp(0.0, 1.0),
            budget: Budget::Unlimited,
            ls_variant: LsVariant::Assignment,
            ls_max_rounds: None,
        }
    }

    /// Width, seed count, and budget split from the fitted defaults.
    pub fn for_instance(instance: &Instance) -> Self {
        let p = crate::params::msls_params(
            instance.job_count() as u64,
            instance.machine_count() as u64,
        );
        Self::new(p.beam_width, p.k, p.ls_fraction)
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_variant(mut self, variant: LsVariant) -> Self {
        self.ls_variant = variant;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct MslsStats {
    pub seeds_generated: usize,
    pub seeds_processed: usize,
    /// `W` of every seed, in processing order.
    pub seed_ws: Vec<u64>,
    pub fallback_w: u64,
    /// The pool was empty and the initial solution was used.
    pub fallback: bool,
    pub rbs_leaves: u64,
    pub budget_hit: bool,
    pub phase1: Duration,
    pub phase2: Duration,
    pub steps: u64,
}

#[derive(Debug, Clone)]
pub struct MslsOutcome {
    pub schedule: BlockSchedule,
    pub solution: Solution,
    pub objectives: Objectives,
    pub stats: MslsStats,
}

pub fn run_msls(instance: &Instance, config: &MslsConfig) -> Result<MslsOutcome> {
    let blocks = compute_blocks(instance.n, &instance.machines);
    let (ls_budget, rbs_budget) = config.budget.split(config.ls_fraction);
    let mut stats = MslsStats::default();

    let fallback = initial_schedule(instance, &blocks);
    stats.fallback_w = fallback.weighted_tardy(instance, &blocks);
    let mut best = (stats.fallback_w, fallback);

    let pool = SeedPool::new(config.k);
    let rbs_cfg = RbsConfig::new(config.beam_width, 0.0)
        .with_lower_bound(Arc::new(NullBound))
        .with_pool(&pool);
    let mut meter1 = Meter::new(rbs_budget);
    let rbs = run_rbs_with(instance, &blocks, &rbs_cfg, &mut meter1)?;
    stats.phase1 = meter1.elapsed();
    stats.rbs_leaves = rbs.stats.leaves;
    stats.steps += meter1.steps();
    if rbs.objectives.weighted_tardy < best.0 {
        best = (rbs.objectives.weighted_tardy, rbs.schedule);
    }

    let seeds = pool.into_seeds();
    stats.seeds_generated = seeds.len();
    stats.fallback = seeds.is_empty();
    if let Some((w, s)) = seeds.first() {
        if *w < best.0 {
            best = (*w, s.clone());
        }
    }

    let mut ls_cfg = LsConfig::new(config.ls_variant);
    ls_cfg.max_rounds = config.ls_max_rounds;
    let mut meter2 = Meter::new(ls_budget);
    for (w, seed) in seeds {
        if meter2.exhausted() {
            break;
        }
        stats.seeds_processed += 1;
        stats.seed_ws.push(w);
        let out = run_ls_schedule(instance, &blocks, seed, &ls_cfg, &mut meter2, &mut |_| {});
        let lw = out.objectives.weighted_tardy;
        if lw < best.0 {
            best = (lw, out.schedule);
        }
    }
    stats.phase2 = meter2.elapsed();
    stats.steps += meter2.steps();
    stats.budget_hit = meter1.exhausted() || meter2.exhausted();

    let (_, schedule) = best;
    let solution = schedule.to_solution(instance, &blocks);
    let objectives = schedule.objectives(instance, &blocks);
    Ok(MslsOutcome {
        schedule,
        solution,
        objectives,
        stats,
    })
}
