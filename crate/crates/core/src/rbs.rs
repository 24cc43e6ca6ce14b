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

//! Recovering beam search over simultaneous leader and follower decisions.
//!
//! Jobs are decided one at a time in SPT order. Each decision either places
//! the job in a free position of the first block that still needs jobs, or
//! removes it. Nodes are ranked by `alpha * LB + (1 - alpha) * UB`, where UB
//! comes from completing the partial schedule heuristically. After each
//! truncation the surviving nodes try to repair earlier decisions by trading
//! removed jobs for scheduled ones.

use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;

use crate::budget::{Budget, Meter};
use crate::error::Result;
use crate::follower::{compute_blocks, settle_ties, BlockSchedule, BlockStructure, Slot};
use crate::localsearch::{complete_partial, first_open_block, initial_schedule, leader_swap_within};
use crate::model::{Instance, JobIdx, Objectives, Solution};

/// Denominator of the fixed-point `alpha`.
pub const ALPHA_SCALE: u64 = 1_000_000;

const REMOVE: u16 = u16::MAX;

/// Bound on the weighted tardiness of every completion of a partial schedule.
pub trait LowerBound: Send + Sync {
    fn bound(&self, instance: &Instance, blocks: &BlockStructure, partial: &BlockSchedule) -> u64;
}

/// Weight of placed jobs that are already late. Placed completion times are
/// final because positions fill front to back.
#[derive(Debug, Clone, Copy, Default)]
pub struct IncurredTardiness;

impl LowerBound for IncurredTardiness {
    fn bound(&self, instance: &Instance, blocks: &BlockStructure, partial: &BlockSchedule) -> u64 {
        partial.weighted_tardy(instance, blocks)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NullBound;

impl LowerBound for NullBound {
    fn bound(&self, _: &Instance, _: &BlockStructure, _: &BlockSchedule) -> u64 {
        0
    }
}

/// Receives every complete schedule the search produces.
pub trait SolutionSink: Sync {
    fn offer(&self, schedule: &BlockSchedule, weighted_tardy: u64, leaf: bool);
}

#[derive(Clone)]
pub struct RbsConfig<'a> {
    pub beam_width: usize,
    /// `alpha` in millionths.
    pub alpha_micro: u64,
    pub budget: Budget,
    pub lower_bound: Arc<dyn LowerBound>,
    pub pool: Option<&'a dyn SolutionSink>,
}

impl<'a> RbsConfig<'a> {
    pub fn new(beam_width: usize, alpha: f64) -> Self {
        RbsConfig {
            beam_width: beam_width.max(1),
            alpha_micro: alpha_to_micro(alpha),
            budget: Budget::Unlimited,
            lower_bound: Arc::new(IncurredTardiness),
            pool: None,
        }
    }

    /// Unbounded width, which enumerates every block-structured schedule.
    pub fn exhaustive() -> Self {
        Self::new(usize::MAX, 0.0)
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_lower_bound(mut self, bound: Arc<dyn LowerBound>) -> Self {
        self.lower_bound = bound;
        self
    }

    pub fn with_pool(mut self, pool: &'a dyn SolutionSink) -> Self {
        self.pool = Some(pool);
        self
    }
}

pub fn alpha_to_micro(alpha: f64) -> u64 {
    (alpha.clamp(0.0, 1.0) * ALPHA_SCALE as f64).round() as u64
}

#[derive(Debug, Clone, Default)]
pub struct RbsStats {
    pub levels: usize,
    pub nodes_expanded: u64,
    pub nodes_evaluated: u64,
    pub leaves: u64,
    pub recoveries: u64,
    pub budget_hit: bool,
    /// No node could be evaluated; the result is the initial solution.
    pub fallback: bool,
    pub steps: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct RbsOutcome {
    pub schedule: BlockSchedule,
    pub solution: Solution,
    pub objectives: Objectives,
    pub stats: RbsStats,
}

#[derive(Debug, Clone)]
pub struct BeamNode {
    pub partial: BlockSchedule,
    /// Position in the SPT order of the next undecided job.
    pub next: usize,
    pub removed: Vec<JobIdx>,
    pub path: Vec<u16>,
    pub lb: u64,
    pub ub: u64,
    pub eval: u128,
    pub gamma: Vec<(Slot, JobIdx)>,
}

impl BeamNode {
    pub fn is_leaf(&self, instance: &Instance) -> bool {
        self.partial.selected_count() == instance.n
    }

    fn rank_key(&self) -> (u128, u64, &[u16]) {
        (self.eval, self.ub, &self.path)
    }
}

struct Search<'c, 'a> {
    instance: &'c Instance,
    blocks: BlockStructure,
    spt: Vec<JobIdx>,
    config: &'c RbsConfig<'a>,
}

/// A completed schedule produced while evaluating a node.
struct Evaluated {
    node: BeamNode,
    complete: BlockSchedule,
}

impl Search<'_, '_> {
    fn eval_of(&self, lb: u64, ub: u64) -> u128 {
        let a = self.config.alpha_micro as u128;
        a * lb as u128 + (ALPHA_SCALE as u128 - a) * ub as u128
    }

    fn finish(&self, mut complete: BlockSchedule) -> (BlockSchedule, u64) {
        settle_ties(self.instance, &self.blocks, &mut complete);
        let w = complete.weighted_tardy(self.instance, &self.blocks);
        (complete, w)
    }

    fn evaluate(&self, mut node: BeamNode) -> Result<Evaluated> {
        let (complete, gamma) = if node.is_leaf(self.instance) {
            (node.partial.clone(), Vec::new())
        } else {
            let c = complete_partial(
                self.instance,
                &self.blocks,
                &node.partial,
                &self.spt[node.next..],
            )?;
            (c.schedule, c.gamma)
        };
        let (complete, ub) = self.finish(complete);
        node.lb = self.config.lower_bound.bound(self.instance, &self.blocks, &node.partial);
        node.ub = ub;
        node.eval = self.eval_of(node.lb, ub);
        node.gamma = gamma;
        Ok(Evaluated { node, complete })
    }

    fn children(&self, node: &BeamNode) -> Vec<BeamNode> {
        let n_total = self.instance.job_count();
        let job = self.spt[node.next];
        let mut out = Vec::new();
        if node.partial.selected_count() < self.instance.n {
            let b = first_open_block(&self.blocks, &node.partial);
            for s in 0..self.blocks.block(b).capacity() {
                if node.partial.job_at((b, s)).is_none() {
                    let mut child = node.clone();
                    child.partial.set((b, s), Some(job));
                    child.next += 1;
                    child.path.push(s as u16);
                    child.gamma.clear();
                    out.push(child);
                }
            }
        }
        if node.removed.len() < n_total - self.instance.n {
            let mut child = node.clone();
            child.removed.push(job);
            child.next += 1;
            child.path.push(REMOVE);
            child.gamma.clear();
            out.push(child);
        }
        out
    }

    fn with_gamma(&self, partial: &BlockSchedule, gamma: &[(Slot, JobIdx)]) -> BlockSchedule {
        let mut full = partial.clone();
        for &(slot, j) in gamma {
            full.set(slot, Some(j));
        }
        full
    }

    /// Best-improvement exchanges of removed and scheduled jobs inside the
    /// filled blocks, scored against the cached completion.
    fn recover(
        &self,
        node: &mut BeamNode,
        meter: &mut Meter,
        found: &mut Vec<(BlockSchedule, u64)>,
    ) -> u64 {
        let mut adopted = 0;
        let cursor = first_open_block(&self.blocks, &node.partial);
        loop {
            let mut pairs = Vec::new();
            for (k, &r) in node.removed.iter().enumerate() {
                for s in node.partial.selected() {
                    if node.partial.location(s).is_some_and(|(b, _)| b < cursor) {
                        pairs.push((k, r, s));
                    }
                }
            }
            if pairs.is_empty() {
                return adopted;
            }
            let granted = meter.claim(pairs.len());
            pairs.truncate(granted);
            let scored: Vec<Option<(BlockSchedule, BlockSchedule, u64)>> = pairs
                .par_iter()
                .map(|&(_, r, s)| {
                    let swapped = leader_swap_within(
                        self.instance,
                        &self.blocks,
                        &node.partial,
                        s,
                        r,
                        cursor,
                    )?;
                    let (complete, w) = self.finish(self.with_gamma(&swapped, &node.gamma));
                    Some((swapped, complete, w))
                })
                .collect();
            let mut best: Option<(usize, u64)> = None;
            for (idx, item) in scored.iter().enumerate() {
                if let Some((_, _, w)) = item {
                    if *w < node.ub && best.is_none_or(|(_, bw)| *w < bw) {
                        best = Some((idx, *w));
                    }
                }
            }
            let Some((idx, w)) = best else {
                return adopted;
            };
            let (k, _, s) = pairs[idx];
            let (swapped, complete, _) = scored.into_iter().nth(idx).flatten().expect("scored");
            node.partial = swapped;
            node.removed[k] = s;
            node.removed.sort_unstable();
            node.ub = w;
            node.lb = self.config.lower_bound.bound(self.instance, &self.blocks, &node.partial);
            node.eval = self.eval_of(node.lb, w);
            found.push((complete, w));
            adopted += 1;
            if meter.exhausted() {
                return adopted;
            }
        }
    }
}

struct Incumbent {
    schedule: BlockSchedule,
    w: u64,
}

impl Incumbent {
    fn offer(&mut self, schedule: &BlockSchedule, w: u64) {
        if w < self.w {
            self.w = w;
            self.schedule = schedule.clone();
        }
    }
}

pub fn run_rbs(instance: &Instance, config: &RbsConfig<'_>) -> Result<RbsOutcome> {
    let blocks = compute_blocks(instance.n, &instance.machines);
    let mut meter = Meter::new(config.budget);
    run_rbs_with(instance, &blocks, config, &mut meter)
}

pub fn run_rbs_with(
    instance: &Instance,
    blocks: &BlockStructure,
    config: &RbsConfig<'_>,
    meter: &mut Meter,
) -> Result<RbsOutcome> {
    let search = Search {
        instance,
        blocks: blocks.clone(),
        spt: instance.spt_order(),
        config,
    };
    let steps_before = meter.steps();
    let fallback = initial_schedule(instance, blocks);
    let fallback_w = fallback.weighted_tardy(instance, blocks);
    let mut best = Incumbent {
        schedule: fallback,
        w: fallback_w,
    };
    let mut stats = RbsStats::default();

    let record = |best: &mut Incumbent, complete: &BlockSchedule, w: u64, leaf: bool| {
        best.offer(complete, w);
        if let Some(pool) = config.pool {
            pool.offer(complete, w, leaf);
        }
    };

    let mut beam: Vec<BeamNode> = Vec::new();
    if meter.claim(1) == 1 {
        let root = BeamNode {
            partial: BlockSchedule::empty(blocks, instance.job_count()),
            next: 0,
            removed: Vec::new(),
            path: Vec::new(),
            lb: 0,
            ub: 0,
            eval: 0,
            gamma: Vec::new(),
        };
        let ev = search.evaluate(root)?;
        stats.nodes_evaluated += 1;
        let leaf = ev.node.is_leaf(instance);
        record(&mut best, &ev.complete, ev.node.ub, leaf);
        if leaf {
            stats.leaves += 1;
        } else {
            beam.push(ev.node);
        }
    } else {
        stats.fallback = true;
    }

    'levels: while !beam.is_empty() {
        stats.levels += 1;
        let mut next_level: Vec<BeamNode> = Vec::new();
        for parent in &beam {
            if meter.exhausted() {
                break 'levels;
            }
            let mut kids = search.children(parent);
            stats.nodes_expanded += 1;
            let granted = meter.claim(kids.len());
            kids.truncate(granted);
            let evaluated: Vec<Result<Evaluated>> =
                kids.into_par_iter().map(|c| search.evaluate(c)).collect();
            for ev in evaluated {
                let ev = ev?;
                stats.nodes_evaluated += 1;
                let leaf = ev.node.is_leaf(instance);
                record(&mut best, &ev.complete, ev.node.ub, leaf);
                if leaf {
                    stats.leaves += 1;
                } else {
                    next_level.push(ev.node);
                }
            }
        }
        next_level.sort_by(|a, b| a.rank_key().cmp(&b.rank_key()));
        let truncated = next_level.len() > config.beam_width;
        next_level.truncate(config.beam_width);
        if truncated {
            for node in next_level.iter_mut() {
                if meter.exhausted() {
                    break;
                }
                let mut found = Vec::new();
                stats.recoveries += search.recover(node, meter, &mut found);
                for (complete, w) in found {
                    record(&mut best, &complete, w, false);
                }
            }
        }
        beam = next_level;
    }
    stats.budget_hit = meter.exhausted();
    stats.steps = meter.steps() - steps_before;
    stats.elapsed = meter.elapsed();

    let solution = best.schedule.to_solution(instance, blocks);
    let objectives = best.schedule.objectives(instance, blocks);
    Ok(RbsOutcome {
        schedule: best.schedule,
        solution,
        objectives,
        stats,
    })
}
