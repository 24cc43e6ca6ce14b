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

//! Local search over leader selections and within-block permutations.
//!
//! Follower neighborhoods permute jobs inside one block, which never changes
//! the sum of completion times:
//!
//! - `N_Fa` ([`follower_pass_assignment`]) solves one assignment problem per
//!   block, sweeping forward and then backward until nothing improves.
//! - `N_Fs` ([`follower_pass_swaps`]) applies the best single exchange inside
//!   a block until no exchange helps.
//!
//! The leader neighborhood `N_Ls` ([`leader_swap`]) exchanges a selected job
//! with an unselected one and repairs the block structure with a chain of
//! single-job shifts between adjacent blocks. [`full_assignment_pass`] merges
//! both decisions into one assignment per block, and [`complete_partial`]
//! fills the open positions of a partial schedule.

use std::cmp::Ordering;

use crate::budget::{Budget, Meter};
use crate::error::{Error, Result};
use crate::follower::{canonical_schedule, BlockSchedule, BlockStructure, Slot};
use crate::hungarian::{solve_assignment, CostMatrix, FORBIDDEN};
use crate::model::{Instance, JobIdx, Objectives, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LsVariant {
    /// `LS_a`: follower moves by per-block assignment.
    Assignment,
    /// `LS_s`: follower moves by within-block exchanges.
    Swap,
    /// `LS_fa`: per-block assignment that may also bring in unselected jobs.
    FullAssignment,
}

impl LsVariant {
    pub fn name(&self) -> &'static str {
        match self {
            LsVariant::Assignment => "lsa",
            LsVariant::Swap => "lss",
            LsVariant::FullAssignment => "lsfa",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LsConfig {
    pub variant: LsVariant,
    /// Cap on improving rounds; `None` means `10 * N`.
    pub max_rounds: Option<usize>,
    pub budget: Budget,
    /// Keep only the `q` leader neighbors with the lowest raw weighted
    /// tardiness before running the follower pass on them.
    pub prefilter: Option<usize>,
}

impl LsConfig {
    pub fn new(variant: LsVariant) -> Self {
        LsConfig {
            variant,
            max_rounds: None,
            budget: Budget::Unlimited,
            prefilter: None,
        }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_max_rounds(mut self, rounds: usize) -> Self {
        self.max_rounds = Some(rounds);
        self
    }
}

#[derive(Debug, Clone)]
pub struct LsOutcome {
    pub schedule: BlockSchedule,
    pub solution: Solution,
    pub objectives: Objectives,
    pub rounds: usize,
    /// Incumbent weighted tardiness after the initial pass and after every
    /// accepted move.
    pub trace: Vec<u64>,
    pub budget_hit: bool,
    pub steps: u64,
}

fn block_costs(
    instance: &Instance,
    blocks: &BlockStructure,
    sched: &BlockSchedule,
    b: usize,
    occupants: &[Option<JobIdx>],
) -> CostMatrix {
    let cap = blocks.block(b).capacity();
    let mut costs = CostMatrix::new(occupants.len(), cap, 0).expect("rows <= cols");
    for (c, pos) in blocks.block(b).positions.iter().enumerate() {
        for (r, &job) in occupants.iter().enumerate() {
            let cost = sched.machine_tardy(instance, blocks, pos.machine, Some(((b, c), job)));
            costs.set(r, c, cost);
        }
    }
    costs
}

/// Optimal permutation of block `b` (including its empty slots). Applied only
/// on strict improvement.
fn assign_block(
    instance: &Instance,
    blocks: &BlockStructure,
    sched: &mut BlockSchedule,
    b: usize,
) -> bool {
    let occupants: Vec<Option<JobIdx>> = sched.block_slots(b).to_vec();
    if occupants.len() < 2 || occupants.iter().all(Option::is_none) {
        return false;
    }
    let costs = block_costs(instance, blocks, sched, b, &occupants);
    let current: u64 = (0..occupants.len()).map(|r| costs.get(r, r)).sum();
    let best = solve_assignment(&costs).expect("finite square matrix");
    if best.total_cost >= current {
        return false;
    }
    for s in 0..occupants.len() {
        sched.set((b, s), None);
    }
    for (r, &c) in best.columns.iter().enumerate() {
        if let Some(j) = occupants[r] {
            sched.set((b, c), Some(j));
        }
    }
    true
}

fn sweep(
    blocks: &BlockStructure,
    sched: &mut BlockSchedule,
    mut step: impl FnMut(&mut BlockSchedule, usize) -> bool,
) {
    let nb = blocks.len();
    loop {
        let mut improved = false;
        for b in 0..nb {
            improved |= step(sched, b);
        }
        if !improved {
            return;
        }
        improved = false;
        for b in (0..nb).rev() {
            improved |= step(sched, b);
        }
        if !improved {
            return;
        }
    }
}

/// `N_Fa`: per-block assignment passes to a fixed point.
pub fn follower_pass_assignment(
    instance: &Instance,
    blocks: &BlockStructure,
    sched: &BlockSchedule,
) -> BlockSchedule {
    let mut out = sched.clone();
    sweep(blocks, &mut out, |s, b| assign_block(instance, blocks, s, b));
    out
}

/// `N_Fs`: best-improvement exchanges inside blocks until none improves.
pub fn follower_pass_swaps(
    instance: &Instance,
    blocks: &BlockStructure,
    sched: &BlockSchedule,
) -> BlockSchedule {
    let mut out = sched.clone();
    let m = blocks.machine_count();
    let mut tardy: Vec<u64> = (0..m)
        .map(|i| out.machine_tardy(instance, blocks, i, None))
        .collect();
    loop {
        let mut best: Option<(u64, Slot, Slot)> = None;
        for (b, block) in blocks.blocks().iter().enumerate() {
            for s1 in 0..block.capacity() {
                for s2 in s1 + 1..block.capacity() {
                    let (j1, j2) = (out.job_at((b, s1)), out.job_at((b, s2)));
                    if j1.is_none() && j2.is_none() {
                        continue;
                    }
                    let (i1, i2) = (block.positions[s1].machine, block.positions[s2].machine);
                    let old = tardy[i1] + tardy[i2];
                    let new = out.machine_tardy(instance, blocks, i1, Some(((b, s1), j2)))
                        + out.machine_tardy(instance, blocks, i2, Some(((b, s2), j1)));
                    if new < old && best.is_none_or(|(gain, _, _)| old - new > gain) {
                        best = Some((old - new, (b, s1), (b, s2)));
                    }
                }
            }
        }
        let Some((_, a, c)) = best else {
            return out;
        };
        let (ja, jc) = (out.job_at(a), out.job_at(c));
        out.set(a, None);
        out.set(c, None);
        out.set(a, jc);
        out.set(c, ja);
        for slot in [a, c] {
            let i = blocks.position(slot).machine;
            tardy[i] = out.machine_tardy(instance, blocks, i, None);
        }
    }
}

/// One `LS_fa` step on block `b`: choose which of the block's jobs and the
/// compatible unselected jobs occupy the block, and where.
fn full_assign_block(
    instance: &Instance,
    blocks: &BlockStructure,
    sched: &mut BlockSchedule,
    b: usize,
) -> bool {
    let block = blocks.block(b);
    let cap = block.capacity();
    let occ = block.occupancy;
    let occupants: Vec<Option<JobIdx>> = sched.block_slots(b).to_vec();
    let lo = if b > 0 {
        sched.block_max_p(instance, b - 1)
    } else {
        None
    };
    let hi = if b + 1 < blocks.len() {
        sched.block_min_p(instance, b + 1)
    } else {
        None
    };
    let mut cands: Vec<JobIdx> = occupants.iter().flatten().copied().collect();
    cands.extend(sched.unselected().filter(|&j| {
        let p = instance.jobs[j].p;
        lo.is_none_or(|lo| p >= lo) && hi.is_none_or(|hi| p <= hi)
    }));
    let k = cands.len();
    let empties = cap - occ;
    if k + empties < 2 {
        return false;
    }
    let size = k + empties;
    let mut costs = CostMatrix::new(size, size, 0).expect("square");
    for (c, pos) in block.positions.iter().enumerate() {
        for (r, &j) in cands.iter().enumerate() {
            let cost = sched.machine_tardy(instance, blocks, pos.machine, Some(((b, c), Some(j))));
            costs.set(r, c, cost);
        }
        let empty = sched.machine_tardy(instance, blocks, pos.machine, Some(((b, c), None)));
        for r in k..size {
            costs.set(r, c, empty);
        }
    }
    for r in k..size {
        for c in cap..size {
            costs.set(r, c, FORBIDDEN);
        }
    }
    let current: u64 = block
        .positions
        .iter()
        .map(|pos| sched.machine_tardy(instance, blocks, pos.machine, None))
        .sum();
    let best = solve_assignment(&costs).expect("a matching without forbidden entries exists");
    if best.total_cost >= current {
        return false;
    }
    for s in 0..cap {
        sched.set((b, s), None);
    }
    for (r, &c) in best.columns.iter().enumerate().take(k) {
        if c < cap {
            sched.set((b, c), Some(cands[r]));
        }
    }
    true
}

/// `LS_fa` core: per-block selection-and-placement passes to a fixed point.
pub fn full_assignment_pass(
    instance: &Instance,
    blocks: &BlockStructure,
    sched: &BlockSchedule,
) -> BlockSchedule {
    let mut out = sched.clone();
    sweep(blocks, &mut out, |s, b| full_assign_block(instance, blocks, s, b));
    out
}

fn by_p_id(instance: &Instance, a: JobIdx, b: JobIdx) -> Ordering {
    let (ja, jb) = (&instance.jobs[a], &instance.jobs[b]);
    (ja.p, ja.id).cmp(&(jb.p, jb.id))
}

/// Leader swap restricted to blocks `0..upto`. Returns `None` when `incoming`
/// cannot be seated inside that range.
pub(crate) fn leader_swap_within(
    instance: &Instance,
    blocks: &BlockStructure,
    sched: &BlockSchedule,
    outgoing: JobIdx,
    incoming: JobIdx,
    upto: usize,
) -> Option<BlockSchedule> {
    let freed = sched.location(outgoing)?;
    if sched.is_selected(incoming) || freed.0 >= upto {
        return None;
    }
    let b_out = freed.0;
    let p_in = instance.jobs[incoming].p;

    let (mut less, mut le) = (0usize, 1usize);
    for b in 0..upto {
        for j in sched.block_jobs(b).filter(|&j| j != outgoing) {
            let p = instance.jobs[j].p;
            less += (p < p_in) as usize;
            le += (p <= p_in) as usize;
        }
    }
    // Valid 1-based ranks for the incoming job are less+1 ..= le.
    let mut b_in: Option<usize> = None;
    let mut cum = 0;
    for b in 0..upto {
        let (start, end) = (cum + 1, cum + blocks.block(b).occupancy);
        cum = end;
        if start <= le && less < end {
            let closer = b_in.is_none_or(|cur: usize| b.abs_diff(b_out) < cur.abs_diff(b_out));
            if closer {
                b_in = Some(b);
            }
        }
    }
    let b_in = b_in?;

    let mut next = sched.clone();
    next.set(freed, None);
    let mut carried = incoming;
    let mut b = b_in;
    while b != b_out {
        let pick = |a: &JobIdx, c: &JobIdx| by_p_id(instance, *a, *c);
        let shifted = if b > b_out {
            next.block_jobs(b).min_by(pick)
        } else {
            next.block_jobs(b).max_by(pick)
        }?;
        let slot = next.location(shifted).expect("job in block");
        next.set(slot, Some(carried));
        carried = shifted;
        b = if b > b_out { b - 1 } else { b + 1 };
    }
    next.set(freed, Some(carried));

    if upto < blocks.len() {
        // The incoming job must not outrun jobs already placed further on.
        if let (Some(mx), Some(mn)) = (
            next.block_max_p(instance, upto - 1),
            next.block_min_p(instance, upto),
        ) {
            if mx > mn {
                return None;
            }
        }
    }
    Some(next)
}

/// `N_Ls` move: replace selected `outgoing` with unselected `incoming` and
/// shift single jobs between adjacent blocks until the structure is restored.
pub fn leader_swap(
    instance: &Instance,
    blocks: &BlockStructure,
    sched: &BlockSchedule,
    outgoing: JobIdx,
    incoming: JobIdx,
) -> Result<BlockSchedule> {
    if !sched.is_selected(outgoing) {
        return Err(Error::Argument(format!(
            "job {} is not selected",
            instance.jobs[outgoing].id
        )));
    }
    if sched.is_selected(incoming) {
        return Err(Error::Argument(format!(
            "job {} is already selected",
            instance.jobs[incoming].id
        )));
    }
    leader_swap_within(instance, blocks, sched, outgoing, incoming, blocks.len())
        .ok_or_else(|| Error::Infeasible("leader swap found no block for the incoming job".into()))
}

/// Result of completing a partial schedule.
#[derive(Debug, Clone)]
pub struct Completion {
    pub schedule: BlockSchedule,
    /// Slots filled by the completion, i.e. the complementary schedule.
    pub gamma: Vec<(Slot, JobIdx)>,
}

/// First block whose fill count is below its target, or `blocks.len()`.
pub(crate) fn first_open_block(blocks: &BlockStructure, sched: &BlockSchedule) -> usize {
    (0..blocks.len())
        .find(|&b| sched.block_filled(b) < blocks.block(b).occupancy)
        .unwrap_or(blocks.len())
}

/// `LS_fac`: fills the open slots of a partial schedule from `undecided`,
/// last block first, using completion times estimated with the mean
/// processing time of the undecided jobs.
pub fn complete_partial(
    instance: &Instance,
    blocks: &BlockStructure,
    partial: &BlockSchedule,
    undecided: &[JobIdx],
) -> Result<Completion> {
    let nb = blocks.len();
    let open = first_open_block(blocks, partial);
    if open == nb {
        return Ok(Completion {
            schedule: partial.clone(),
            gamma: Vec::new(),
        });
    }
    let need: Vec<usize> = (0..nb)
        .map(|b| {
            if b < open {
                0
            } else {
                blocks.block(b).occupancy - partial.block_filled(b)
            }
        })
        .collect();
    let total_need: usize = need.iter().sum();
    if undecided.len() < total_need {
        return Err(Error::Infeasible(format!(
            "{} undecided jobs for {} open positions",
            undecided.len(),
            total_need
        )));
    }

    let sum_p: u64 = undecided.iter().map(|&j| instance.jobs[j].p).sum();
    let cnt = undecided.len() as u64;
    let p_bar = (2 * sum_p + cnt) / (2 * cnt);

    // Estimated completions are scaled by `den` so a partially needed open
    // block can contribute its expected share of p_bar exactly.
    let open_free = blocks.block(open).capacity() - partial.block_filled(open);
    let den = open_free.max(1) as i64;
    let open_share = need[open] as i64;

    let mut pool: Vec<JobIdx> = undecided.to_vec();
    pool.sort_by(|&a, &b| by_p_id(instance, a, b));
    let mut used = vec![false; pool.len()];
    let mut ceiling: Option<u64> = None;
    let mut sched = partial.clone();
    let mut gamma = Vec::new();

    for b in (open..nb).rev() {
        let k = need[b];
        if k == 0 {
            continue;
        }
        let reserved: usize = need[open..b].iter().sum();
        let eligible: Vec<JobIdx> = pool
            .iter()
            .enumerate()
            .filter(|&(idx, &j)| !used[idx] && ceiling.is_none_or(|c| instance.jobs[j].p <= c))
            .map(|(_, &j)| j)
            .skip(reserved)
            .collect();
        if eligible.len() < k {
            return Err(Error::Infeasible("not enough compatible undecided jobs".into()));
        }
        let free: Vec<usize> = (0..blocks.block(b).capacity())
            .filter(|&s| partial.job_at((b, s)).is_none())
            .collect();
        let idle = free.len() - k;
        let mut costs = CostMatrix::new(free.len(), eligible.len() + idle, 0)?;
        for (r, &s) in free.iter().enumerate() {
            let machine = blocks.position((b, s)).machine;
            let factor = instance.factor(machine) as i64;
            let mut before = 0i64;
            for &slot in blocks.lane(machine) {
                if slot == (b, s) {
                    break;
                }
                match partial.job_at(slot) {
                    Some(j) => before += den * instance.duration(j, machine),
                    None if slot.0 == open => before += open_share * p_bar as i64 * factor,
                    None => before += den * p_bar as i64 * factor,
                }
            }
            for (c, &j) in eligible.iter().enumerate() {
                let est = before + den * instance.duration(j, machine);
                let tardy = est > den * instance.jobs[j].d;
                costs.set(r, c, if tardy { instance.jobs[j].w } else { 0 });
            }
        }
        let result = solve_assignment(&costs)?;
        let mut chosen_min: Option<u64> = None;
        for (r, &c) in result.columns.iter().enumerate() {
            if c < eligible.len() {
                let j = eligible[c];
                let slot = (b, free[r]);
                sched.set(slot, Some(j));
                gamma.push((slot, j));
                let idx = pool.iter().position(|&x| x == j).expect("pool member");
                used[idx] = true;
                let p = instance.jobs[j].p;
                chosen_min = Some(chosen_min.map_or(p, |m: u64| m.min(p)));
            }
        }
        ceiling = chosen_min.or(ceiling);
    }
    Ok(Completion {
        schedule: sched,
        gamma,
    })
}

/// Initial leader decision: the `n` jobs with the smallest `(p - d) / w`,
/// ties by id, compared exactly in scaled units.
pub fn initial_selection(instance: &Instance) -> Vec<JobIdx> {
    let l = instance.scale().lcm as i128;
    let key = |j: JobIdx| {
        let job = &instance.jobs[j];
        (job.p as i128 * l - job.d as i128, job.w as i128)
    };
    let mut order: Vec<JobIdx> = (0..instance.job_count()).collect();
    order.sort_by(|&a, &b| {
        let (na, wa) = key(a);
        let (nb, wb) = key(b);
        (na * wb)
            .cmp(&(nb * wa))
            .then(instance.jobs[a].id.cmp(&instance.jobs[b].id))
    });
    order.truncate(instance.n);
    order
}

pub fn initial_schedule(instance: &Instance, blocks: &BlockStructure) -> BlockSchedule {
    canonical_schedule(instance, &initial_selection(instance), blocks)
        .expect("initial selection has n jobs")
}

pub fn initial_solution(instance: &Instance, blocks: &BlockStructure) -> Solution {
    initial_schedule(instance, blocks).to_solution(instance, blocks)
}

/// Applies the follower pass that belongs to `variant`.
pub fn improve_follower(
    instance: &Instance,
    blocks: &BlockStructure,
    sched: &BlockSchedule,
    variant: LsVariant,
) -> BlockSchedule {
    match variant {
        LsVariant::Assignment => follower_pass_assignment(instance, blocks, sched),
        LsVariant::Swap => follower_pass_swaps(instance, blocks, sched),
        LsVariant::FullAssignment => full_assignment_pass(instance, blocks, sched),
    }
}

/// Runs the local search from a feasible solution.
pub fn run_ls(instance: &Instance, start: &Solution, config: &LsConfig) -> Result<LsOutcome> {
    let blocks = crate::follower::compute_blocks(instance.n, &instance.machines);
    let sched = BlockSchedule::from_solution(instance, &blocks, start)?;
    if sched.selected_count() != instance.n || !sched.is_feasible(instance, &blocks) {
        return Err(Error::Infeasible("local search needs a feasible start".into()));
    }
    let mut meter = Meter::new(config.budget);
    Ok(run_ls_schedule(instance, &blocks, sched, config, &mut meter, &mut |_| {}))
}

/// Local search on a block schedule. `observer` sees the incumbent after the
/// initial follower pass and after every accepted leader move.
pub fn run_ls_schedule(
    instance: &Instance,
    blocks: &BlockStructure,
    start: BlockSchedule,
    config: &LsConfig,
    meter: &mut Meter,
    observer: &mut dyn FnMut(&BlockSchedule),
) -> LsOutcome {
    let max_rounds = config
        .max_rounds
        .unwrap_or(10 * instance.job_count())
        .max(1);
    let steps_before = meter.steps();
    let mut current = improve_follower(instance, blocks, &start, config.variant);
    let mut current_w = current.weighted_tardy(instance, blocks);
    observer(&current);
    let mut trace = vec![current_w];
    let mut rounds = 0;
    let mut budget_hit = meter.exhausted();

    while rounds < max_rounds && !budget_hit {
        rounds += 1;
        let selected: Vec<JobIdx> = current.selected().collect();
        let unselected: Vec<JobIdx> = current.unselected().collect();
        let mut moves: Vec<(JobIdx, JobIdx, BlockSchedule)> =
            Vec::with_capacity(selected.len() * unselected.len());
        for &out in &selected {
            for &inc in &unselected {
                if let Some(nb) =
                    leader_swap_within(instance, blocks, &current, out, inc, blocks.len())
                {
                    moves.push((out, inc, nb));
                }
            }
        }
        if let Some(q) = config.prefilter {
            let mut keyed: Vec<(u64, usize)> = moves
                .iter()
                .enumerate()
                .map(|(k, (_, _, nb))| (nb.weighted_tardy(instance, blocks), k))
                .collect();
            keyed.sort();
            let mut keep: Vec<usize> = keyed.into_iter().take(q).map(|(_, k)| k).collect();
            keep.sort_unstable();
            let mut kept = Vec::with_capacity(keep.len());
            for (k, mv) in moves.into_iter().enumerate() {
                if keep.binary_search(&k).is_ok() {
                    kept.push(mv);
                }
            }
            moves = kept;
        }

        // Moves are generated in (outgoing, incoming) index order, which is
        // id order, so the first strict minimum wins ties.
        let mut best: Option<(u64, BlockSchedule)> = None;
        for (_, _, nb) in moves {
            if !meter.step() {
                budget_hit = true;
                break;
            }
            let improved = improve_follower(instance, blocks, &nb, config.variant);
            let w = improved.weighted_tardy(instance, blocks);
            if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
                best = Some((w, improved));
            }
        }
        match best {
            Some((w, sched)) if w < current_w => {
                current = sched;
                current_w = w;
                observer(&current);
                trace.push(w);
            }
            _ => break,
        }
    }

    let solution = current.to_solution(instance, blocks);
    let objectives = current.objectives(instance, blocks);
    LsOutcome {
        schedule: current,
        solution,
        objectives,
        rounds,
        trace,
        budget_hit,
        steps: meter.steps() - steps_before,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::table1;
    use crate::follower::compute_blocks;
    use crate::model::MachineConfig;

    fn identical(n: usize, jobs: &[(u32, u64, u64, i64)]) -> Instance {
        Instance::from_raw(n, MachineConfig::new(0, 2, 2, 1).unwrap(), jobs, None).unwrap()
    }

    fn schedule_of(inst: &Instance, bs: &BlockStructure, sigma: &[Vec<u32>]) -> BlockSchedule {
        let sol = Solution::from_ids(inst, sigma).unwrap();
        BlockSchedule::from_solution(inst, bs, &sol).unwrap()
    }

    fn ids(inst: &Instance, bs: &BlockStructure, s: &BlockSchedule) -> Vec<Vec<u32>> {
        s.to_solution(inst, bs).sigma_ids(inst)
    }

    #[test]
    fn leader_swap_shifts_left() {
        let jobs: Vec<_> = [2, 3, 4, 5, 7, 8, 11]
            .iter()
            .enumerate()
            .map(|(k, &p)| (k as u32 + 1, p, 1, 50))
            .collect();
        let inst = identical(4, &jobs);
        let bs = compute_blocks(4, &inst.machines);
        let s = schedule_of(&inst, &bs, &[vec![1, 6], vec![2, 4]]);
        let j2 = inst.index_of(2).unwrap();
        let j5 = inst.index_of(5).unwrap();
        let next = leader_swap(&inst, &bs, &s, j2, j5).unwrap();
        assert_eq!(ids(&inst, &bs, &next), vec![vec![1, 6], vec![4, 5]]);
        assert!(next.is_feasible(&inst, &bs));
    }

    #[test]
    fn leader_swap_same_p_substitutes_in_place() {
        let inst = identical(
            2,
            &[(1, 3, 1, 9), (2, 5, 1, 9), (3, 5, 4, 9), (4, 9, 1, 9)],
        );
        let bs = compute_blocks(2, &inst.machines);
        let s = schedule_of(&inst, &bs, &[vec![2], vec![1]]);
        let next = leader_swap(&inst, &bs, &s, 1, 2).unwrap();
        assert_eq!(ids(&inst, &bs, &next), vec![vec![3], vec![1]]);
    }

    #[test]
    fn leader_swap_rejects_bad_membership() {
        let inst = table1();
        let bs = compute_blocks(4, &inst.machines);
        let s = canonical_schedule(&inst, &[0, 1, 2, 3], &bs).unwrap();
        assert!(matches!(
            leader_swap(&inst, &bs, &s, 5, 6),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            leader_swap(&inst, &bs, &s, 0, 1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn leader_swap_matches_canonical_total() {
        let inst = table1();
        let inst = Instance::new(5, inst.machines, inst.jobs.clone(), None).unwrap();
        let bs = compute_blocks(5, &inst.machines);
        let s = canonical_schedule(&inst, &[0, 2, 4, 6, 8], &bs).unwrap();
        for out in [0, 2, 4, 6, 8] {
            for inc in [1, 3, 5, 7] {
                let next = leader_swap(&inst, &bs, &s, out, inc).unwrap();
                assert!(next.is_feasible(&inst, &bs));
                let sel: Vec<_> = next.selected().collect();
                let canon = canonical_schedule(&inst, &sel, &bs).unwrap();
                assert_eq!(
                    next.objectives(&inst, &bs).total_completion,
                    canon.objectives(&inst, &bs).total_completion
                );
            }
        }
    }

    #[test]
    fn assignment_pass_single_position_unchanged() {
        let inst = Instance::from_raw(
            1,
            MachineConfig::new(0, 1, 2, 1).unwrap(),
            &[(1, 4, 2, 1)],
            None,
        )
        .unwrap();
        let bs = compute_blocks(1, &inst.machines);
        let s = canonical_schedule(&inst, &[0], &bs).unwrap();
        assert_eq!(follower_pass_assignment(&inst, &bs, &s), s);
    }

    #[test]
    fn assignment_pass_finds_cross_configuration() {
        // J4 is late behind J3 but on time behind J1.
        let inst = identical(
            4,
            &[(1, 1, 1, 100), (2, 2, 1, 100), (3, 3, 1, 100), (4, 4, 5, 5)],
        );
        let bs = compute_blocks(4, &inst.machines);
        let s = schedule_of(&inst, &bs, &[vec![1, 3], vec![2, 4]]);
        assert_eq!(s.weighted_tardy(&inst, &bs), 5);
        let out = follower_pass_assignment(&inst, &bs, &s);
        assert_eq!(out.weighted_tardy(&inst, &bs), 0);
        assert_eq!(
            out.objectives(&inst, &bs).total_completion,
            s.objectives(&inst, &bs).total_completion
        );
        let swapped = follower_pass_swaps(&inst, &bs, &s);
        assert_eq!(swapped.weighted_tardy(&inst, &bs), 0);
    }

    #[test]
    fn swap_pass_is_idempotent() {
        let inst = table1();
        let bs = compute_blocks(9, &inst.machines);
        let s = canonical_schedule(&inst, &(0..9).collect::<Vec<_>>(), &bs).unwrap();
        let once = follower_pass_swaps(&inst, &bs, &s);
        assert!(once.weighted_tardy(&inst, &bs) <= s.weighted_tardy(&inst, &bs));
        assert_eq!(follower_pass_swaps(&inst, &bs, &once), once);
    }

    #[test]
    fn full_assignment_swaps_dominated_occupant() {
        // J3 has the same p as J2 and is on time where J2 is late.
        let inst = identical(2, &[(1, 2, 1, 100), (2, 3, 1, 1), (3, 3, 1, 3)]);
        let bs = compute_blocks(2, &inst.machines);
        let start = canonical_schedule(&inst, &[0, 1], &bs).unwrap();
        assert_eq!(start.weighted_tardy(&inst, &bs), 1);
        let out = full_assignment_pass(&inst, &bs, &start);
        assert!(out.is_selected(inst.index_of(3).unwrap()));
        assert_eq!(out.selected_count(), 2);
        assert_eq!(out.weighted_tardy(&inst, &bs), 0);
        assert!(out.is_feasible(&inst, &bs));
    }

    #[test]
    fn complete_partial_trivial_cases() {
        let inst = table1();
        let bs = compute_blocks(9, &inst.machines);
        let full = canonical_schedule(&inst, &(0..9).collect::<Vec<_>>(), &bs).unwrap();
        let done = complete_partial(&inst, &bs, &full, &[]).unwrap();
        assert!(done.gamma.is_empty());
        assert_eq!(done.schedule, full);

        let mut partial = full.clone();
        let slot = partial.location(8).unwrap();
        partial.set(slot, None);
        let done = complete_partial(&inst, &bs, &partial, &[8]).unwrap();
        assert_eq!(done.gamma, vec![(slot, 8)]);
        assert!(done.schedule.is_feasible(&inst, &bs));

        assert!(matches!(
            complete_partial(&inst, &bs, &partial, &[]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn complete_partial_fills_to_n() {
        let inst = table1();
        let inst = Instance::new(6, inst.machines, inst.jobs.clone(), None).unwrap();
        let bs = compute_blocks(6, &inst.machines);
        let partial = BlockSchedule::empty(&bs, inst.job_count());
        let all: Vec<_> = (0..inst.job_count()).collect();
        let done = complete_partial(&inst, &bs, &partial, &all).unwrap();
        assert_eq!(done.schedule.selected_count(), 6);
        assert_eq!(done.gamma.len(), 6);
        assert!(done.schedule.is_feasible(&inst, &bs));
    }

    #[test]
    fn initial_solution_is_feasible() {
        let inst = table1();
        let inst = Instance::new(5, inst.machines, inst.jobs.clone(), None).unwrap();
        let bs = compute_blocks(5, &inst.machines);
        let sel = initial_selection(&inst);
        assert_eq!(sel.len(), 5);
        // (p - d) / w is -3 for J1, the unique minimum.
        assert_eq!(inst.jobs[sel[0]].id, 1);
        let sol = initial_solution(&inst, &bs);
        assert!(validate_ok(&inst, &sol, &bs));
    }

    fn validate_ok(inst: &Instance, sol: &Solution, bs: &BlockStructure) -> bool {
        crate::model::validate_feasible(inst, sol, bs).is_feasible()
    }

    #[test]
    fn ls_never_worsens_and_stays_feasible() {
        let inst = table1();
        let inst = Instance::new(5, inst.machines, inst.jobs.clone(), None).unwrap();
        let bs = compute_blocks(5, &inst.machines);
        let start = initial_solution(&inst, &bs);
        let start_w = evaluate_w(&inst, &start);
        for variant in [LsVariant::Assignment, LsVariant::Swap, LsVariant::FullAssignment] {
            let out = run_ls(&inst, &start, &LsConfig::new(variant)).unwrap();
            assert!(out.objectives.weighted_tardy <= start_w);
            assert!(out.trace.windows(2).all(|w| w[1] < w[0]));
            assert!(validate_ok(&inst, &out.solution, &bs));
            let again = run_ls(&inst, &out.solution, &LsConfig::new(variant)).unwrap();
            assert_eq!(again.objectives.weighted_tardy, out.objectives.weighted_tardy);
        }
    }

    fn evaluate_w(inst: &Instance, sol: &Solution) -> u64 {
        crate::model::evaluate(sol, inst).unwrap().weighted_tardy
    }
}
