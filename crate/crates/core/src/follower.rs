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

//! Block structure of the total-completion-time optimal schedules.
//!
//! The job at depth `k` (counted from the end) on machine `i` contributes
//! `k * p / V_i` to the sum of completion times, so a schedule of `n` jobs is
//! optimal exactly when it uses the `n` positions with the smallest
//! coefficients `k / V_i` and pairs larger coefficients with smaller jobs.
//! Positions sharing a coefficient form a block; jobs may be permuted freely
//! within a block. Blocks are ordered by descending coefficient, so block 0
//! holds the earliest positions and the last block holds the depth-1 positions
//! of the fastest machines.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};
use crate::hungarian::{solve_assignment, CostMatrix};
use crate::model::{Instance, JobIdx, MachineConfig, Objectives, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub machine: usize,
    /// Position counted from the end of the machine's sequence, starting at 1.
    pub depth: u32,
    /// `depth * L / V` where `L` is the speed lcm; the coefficient is `coeff / L`.
    pub coeff: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub coeff: u64,
    /// Ordered by machine index, i.e. fast machines first.
    pub positions: Vec<Position>,
    pub occupancy: usize,
}

impl Block {
    #[inline]
    pub fn capacity(&self) -> usize {
        self.positions.len()
    }
}

/// `(block index, slot index within the block)`.
pub type Slot = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    n: usize,
    blocks: Vec<Block>,
    /// Per machine, its slots in processing order (earliest first).
    lanes: Vec<Vec<Slot>>,
}

impl BlockStructure {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    #[inline]
    pub fn block(&self, b: usize) -> &Block {
        &self.blocks[b]
    }

    #[inline]
    pub fn position(&self, (b, s): Slot) -> Position {
        self.blocks[b].positions[s]
    }

    #[inline]
    pub fn lane(&self, machine: usize) -> &[Slot] {
        &self.lanes[machine]
    }

    pub fn machine_count(&self) -> usize {
        self.lanes.len()
    }

    pub fn capacities(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::capacity).collect()
    }

    pub fn occupancies(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.occupancy).collect()
    }

    /// Jobs per machine when the partial first block is filled in slot order.
    pub fn machine_totals(&self) -> Vec<usize> {
        let mut totals = vec![0; self.lanes.len()];
        for block in &self.blocks {
            for pos in block.positions.iter().take(block.occupancy) {
                totals[pos.machine] += 1;
            }
        }
        totals
    }

    /// Slot of position `(machine, depth)` if it belongs to a block.
    pub fn locate(&self, machine: usize, depth: u32) -> Option<Slot> {
        let lane = self.lanes.get(machine)?;
        // Lanes run from the deepest position down to depth 1.
        let idx = lane.len().checked_sub(depth as usize)?;
        lane.get(idx).copied()
    }

    /// Number of jobs in blocks `0..b`.
    pub fn cumulative_before(&self, b: usize) -> usize {
        self.blocks[..b].iter().map(|bl| bl.occupancy).sum()
    }
}

/// Computes the block structure for `n` selected jobs.
pub fn compute_blocks(n: usize, machines: &MachineConfig) -> BlockStructure {
    let m = machines.count();
    let scale = machines.time_scale();
    let factor: Vec<u64> = (0..m).map(|i| scale.factor(machines.speed(i))).collect();

    let mut cutoff = 0u64;
    let mut heap: BinaryHeap<Reverse<(u64, usize, u32)>> =
        (0..m).map(|i| Reverse((factor[i], i, 1))).collect();
    for _ in 0..n {
        let Reverse((coeff, i, k)) = heap.pop().expect("machine streams are infinite");
        cutoff = coeff;
        heap.push(Reverse((factor[i] * (k as u64 + 1), i, k + 1)));
    }

    let mut groups: BTreeMap<Reverse<u64>, Vec<Position>> = BTreeMap::new();
    if n > 0 {
        for (i, &f) in factor.iter().enumerate() {
            for k in 1..=(cutoff / f) as u32 {
                let coeff = f * k as u64;
                groups.entry(Reverse(coeff)).or_default().push(Position {
                    machine: i,
                    depth: k,
                    coeff,
                });
            }
        }
    }

    let below: usize = groups
        .iter()
        .filter(|(c, _)| c.0 < cutoff)
        .map(|(_, v)| v.len())
        .sum();
    let blocks: Vec<Block> = groups
        .into_iter()
        .map(|(Reverse(coeff), positions)| {
            let occupancy = if coeff == cutoff {
                n - below
            } else {
                positions.len()
            };
            Block {
                coeff,
                positions,
                occupancy,
            }
        })
        .collect();

    let mut lanes = vec![Vec::new(); m];
    for (b, block) in blocks.iter().enumerate() {
        for (s, pos) in block.positions.iter().enumerate() {
            lanes[pos.machine].push((b, s));
        }
    }
    BlockStructure { n, blocks, lanes }
}

/// Block (0-based) holding the job of 1-based SPT rank `rank`.
pub fn block_of_rank(rank: usize, blocks: &BlockStructure) -> Result<usize> {
    if rank == 0 || rank > blocks.n() {
        return Err(Error::Argument(format!(
            "rank {rank} outside 1..={}",
            blocks.n()
        )));
    }
    let mut cum = 0;
    for (b, block) in blocks.blocks().iter().enumerate() {
        cum += block.occupancy;
        if rank <= cum {
            return Ok(b);
        }
    }
    unreachable!("occupancies sum to n")
}

/// Job-to-slot assignment over a block structure. This is the working
/// representation of all neighborhoods; [`Solution`] is derived from it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockSchedule {
    slots: Vec<Vec<Option<JobIdx>>>,
    loc: Vec<Option<Slot>>,
}

impl BlockSchedule {
    pub fn empty(blocks: &BlockStructure, job_count: usize) -> Self {
        BlockSchedule {
            slots: blocks
                .blocks()
                .iter()
                .map(|b| vec![None; b.capacity()])
                .collect(),
            loc: vec![None; job_count],
        }
    }

    #[inline]
    pub fn job_at(&self, (b, s): Slot) -> Option<JobIdx> {
        self.slots[b][s]
    }

    #[inline]
    pub fn location(&self, j: JobIdx) -> Option<Slot> {
        self.loc[j]
    }

    #[inline]
    pub fn is_selected(&self, j: JobIdx) -> bool {
        self.loc[j].is_some()
    }

    #[inline]
    pub fn job_count(&self) -> usize {
        self.loc.len()
    }

    #[inline]
    pub fn block_slots(&self, b: usize) -> &[Option<JobIdx>] {
        &self.slots[b]
    }

    /// Writes `job` into `slot`, unplacing whatever was there. A job that is
    /// already placed elsewhere is moved.
    pub fn set(&mut self, slot: Slot, job: Option<JobIdx>) {
        if let Some(old) = self.slots[slot.0][slot.1] {
            self.loc[old] = None;
        }
        if let Some(j) = job {
            if let Some(prev) = self.loc[j] {
                self.slots[prev.0][prev.1] = None;
            }
            self.loc[j] = Some(slot);
        }
        self.slots[slot.0][slot.1] = job;
    }

    pub fn selected_count(&self) -> usize {
        self.loc.iter().filter(|l| l.is_some()).count()
    }

    pub fn selected(&self) -> impl Iterator<Item = JobIdx> + '_ {
        self.loc
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.map(|_| j))
    }

    pub fn unselected(&self) -> impl Iterator<Item = JobIdx> + '_ {
        self.loc
            .iter()
            .enumerate()
            .filter_map(|(j, l)| if l.is_none() { Some(j) } else { None })
    }

    pub fn block_jobs(&self, b: usize) -> impl Iterator<Item = JobIdx> + '_ {
        self.slots[b].iter().filter_map(|s| *s)
    }

    pub fn block_filled(&self, b: usize) -> usize {
        self.slots[b].iter().filter(|s| s.is_some()).count()
    }

    pub fn block_min_p(&self, instance: &Instance, b: usize) -> Option<u64> {
        self.block_jobs(b).map(|j| instance.jobs[j].p).min()
    }

    pub fn block_max_p(&self, instance: &Instance, b: usize) -> Option<u64> {
        self.block_jobs(b).map(|j| instance.jobs[j].p).max()
    }

    pub fn machine_sequence(&self, blocks: &BlockStructure, machine: usize) -> Vec<JobIdx> {
        blocks
            .lane(machine)
            .iter()
            .filter_map(|&slot| self.job_at(slot))
            .collect()
    }

    pub fn to_solution(&self, instance: &Instance, blocks: &BlockStructure) -> Solution {
        let sigma = (0..blocks.machine_count())
            .map(|i| self.machine_sequence(blocks, i))
            .collect();
        Solution::from_sigma(instance, sigma).expect("block schedule places each job once")
    }

    /// Maps machine sequences back onto slots. Fails when a job sits at a
    /// position outside every block.
    pub fn from_solution(
        instance: &Instance,
        blocks: &BlockStructure,
        solution: &Solution,
    ) -> Result<Self> {
        let mut sched = BlockSchedule::empty(blocks, instance.job_count());
        for (i, seq) in solution.sigma.iter().enumerate() {
            let total = seq.len() as u32;
            for (q, &j) in seq.iter().enumerate() {
                let depth = total - q as u32;
                let slot = blocks.locate(i, depth).ok_or_else(|| {
                    Error::StructuralInvalid(format!(
                        "machine {} depth {depth} lies outside the block structure",
                        i + 1
                    ))
                })?;
                if sched.loc[j].is_some() {
                    return Err(Error::StructuralInvalid(format!(
                        "job {} scheduled twice",
                        instance.jobs[j].id
                    )));
                }
                sched.set(slot, Some(j));
            }
        }
        Ok(sched)
    }

    pub fn completions(&self, instance: &Instance, blocks: &BlockStructure) -> Vec<Option<i64>> {
        let mut c = vec![None; self.loc.len()];
        for i in 0..blocks.machine_count() {
            let mut t = 0;
            for &slot in blocks.lane(i) {
                if let Some(j) = self.job_at(slot) {
                    t += instance.duration(j, i);
                    c[j] = Some(t);
                }
            }
        }
        c
    }

    /// Weighted tardy count of one machine, optionally with `slot`
    /// overridden by another occupant.
    pub fn machine_tardy(
        &self,
        instance: &Instance,
        blocks: &BlockStructure,
        machine: usize,
        patch: Option<(Slot, Option<JobIdx>)>,
    ) -> u64 {
        let mut t = 0i64;
        let mut tardy = 0u64;
        for &slot in blocks.lane(machine) {
            let occupant = match patch {
                Some((ps, job)) if ps == slot => job,
                _ => self.job_at(slot),
            };
            if let Some(j) = occupant {
                t += instance.duration(j, machine);
                if instance.is_tardy(j, t) {
                    tardy += instance.jobs[j].w;
                }
            }
        }
        tardy
    }

    pub fn weighted_tardy(&self, instance: &Instance, blocks: &BlockStructure) -> u64 {
        (0..blocks.machine_count())
            .map(|i| self.machine_tardy(instance, blocks, i, None))
            .sum()
    }

    pub fn objectives(&self, instance: &Instance, blocks: &BlockStructure) -> Objectives {
        let mut total_completion = 0;
        let mut weighted_tardy = 0;
        for i in 0..blocks.machine_count() {
            let mut t = 0;
            for &slot in blocks.lane(i) {
                if let Some(j) = self.job_at(slot) {
                    t += instance.duration(j, i);
                    total_completion += t;
                    if instance.is_tardy(j, t) {
                        weighted_tardy += instance.jobs[j].w;
                    }
                }
            }
        }
        Objectives {
            total_completion,
            weighted_tardy,
        }
    }

    /// Whether every block holds its target count and consecutive blocks are
    /// ordered by processing time.
    pub fn is_feasible(&self, instance: &Instance, blocks: &BlockStructure) -> bool {
        self.blocks_consistent(instance, blocks, blocks.len())
    }

    /// Feasibility restricted to blocks `0..upto`.
    pub fn blocks_consistent(
        &self,
        instance: &Instance,
        blocks: &BlockStructure,
        upto: usize,
    ) -> bool {
        let mut prev_max: Option<u64> = None;
        for b in 0..upto {
            if self.block_filled(b) != blocks.block(b).occupancy {
                return false;
            }
            if let (Some(pm), Some(mn)) = (prev_max, self.block_min_p(instance, b)) {
                if pm > mn {
                    return false;
                }
            }
            if let Some(mx) = self.block_max_p(instance, b) {
                prev_max = Some(mx);
            }
        }
        true
    }

    /// Sorted selected job indices, as a compact key.
    pub fn selection_key(&self) -> Vec<u64> {
        let mut key = vec![0u64; self.loc.len().div_ceil(64)];
        for (j, l) in self.loc.iter().enumerate() {
            if l.is_some() {
                key[j / 64] |= 1 << (j % 64);
            }
        }
        key
    }
}

/// Canonical optimal schedule for `selected`: SPT order (ties by id), largest
/// jobs into the last block, each block filled in slot order.
pub fn canonical_schedule(
    instance: &Instance,
    selected: &[JobIdx],
    blocks: &BlockStructure,
) -> Result<BlockSchedule> {
    if selected.len() != blocks.n() {
        return Err(Error::Cardinality {
            expected: blocks.n(),
            got: selected.len(),
        });
    }
    let mut jobs = selected.to_vec();
    jobs.sort_by_key(|&j| (instance.jobs[j].p, instance.jobs[j].id));
    jobs.dedup();
    if jobs.len() != selected.len() {
        return Err(Error::Argument("duplicate job in selection".into()));
    }
    let mut sched = BlockSchedule::empty(blocks, instance.job_count());
    let mut next = 0;
    for (b, block) in blocks.blocks().iter().enumerate() {
        for s in 0..block.occupancy {
            sched.set((b, s), Some(jobs[next]));
            next += 1;
        }
    }
    Ok(sched)
}

pub fn build_canonical(
    instance: &Instance,
    selected: &[JobIdx],
    blocks: &BlockStructure,
) -> Result<Solution> {
    Ok(canonical_schedule(instance, selected, blocks)?.to_solution(instance, blocks))
}

/// Optimally re-seats jobs of equal processing time among the slots they
/// jointly occupy. Swapping equal-length jobs leaves every completion time
/// unchanged, so each group is an independent assignment with fixed
/// completion times. This may move jobs across block boundaries.
pub fn settle_ties(instance: &Instance, blocks: &BlockStructure, sched: &mut BlockSchedule) -> bool {
    let mut groups: BTreeMap<u64, Vec<JobIdx>> = BTreeMap::new();
    for j in sched.selected() {
        groups.entry(instance.jobs[j].p).or_default().push(j);
    }
    if groups.values().all(|g| g.len() < 2) {
        return false;
    }
    let completions = sched.completions(instance, blocks);
    let mut changed = false;
    for group in groups.values().filter(|g| g.len() >= 2) {
        let slots: Vec<Slot> = group.iter().map(|&j| sched.location(j).unwrap()).collect();
        let times: Vec<i64> = group.iter().map(|&j| completions[j].unwrap()).collect();
        let k = group.len();
        let mut costs = CostMatrix::new(k, k, 0).expect("square");
        let mut current = 0;
        for (r, &j) in group.iter().enumerate() {
            for (c, &t) in times.iter().enumerate() {
                let cost = if instance.is_tardy(j, t) { instance.jobs[j].w } else { 0 };
                costs.set(r, c, cost);
            }
            current += costs.get(r, r);
        }
        let best = solve_assignment(&costs).expect("square finite matrix");
        if best.total_cost < current {
            for (r, &c) in best.columns.iter().enumerate() {
                sched.set(slots[c], Some(group[r]));
            }
            changed = true;
        }
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::table1;
    use crate::model::{evaluate, validate_feasible};

    #[test]
    fn table1_blocks() {
        let bs = compute_blocks(9, &MachineConfig::standard(2, 2));
        assert_eq!(bs.occupancies(), vec![1, 2, 4, 2]);
        assert_eq!(bs.capacities(), vec![4, 2, 4, 2]);
        let coeffs: Vec<u64> = bs.blocks().iter().map(|b| b.coeff).collect();
        assert_eq!(coeffs, vec![4, 3, 2, 1]);
    }

    #[test]
    fn single_machine_single_job() {
        let bs = compute_blocks(1, &MachineConfig::new(0, 1, 2, 1).unwrap());
        assert_eq!(bs.occupancies(), vec![1]);
        assert_eq!(bs.capacities(), vec![1]);
    }

    #[test]
    fn two_identical_machines_four_jobs() {
        let bs = compute_blocks(4, &MachineConfig::new(0, 2, 2, 1).unwrap());
        assert_eq!(bs.occupancies(), vec![2, 2]);
    }

    #[test]
    fn rank_to_block() {
        let bs = compute_blocks(9, &MachineConfig::standard(2, 2));
        assert_eq!(block_of_rank(1, &bs).unwrap(), 0);
        assert_eq!(block_of_rank(9, &bs).unwrap(), 3);
        assert_eq!(block_of_rank(4, &bs).unwrap(), 2);
        assert!(block_of_rank(0, &bs).is_err());
        assert!(block_of_rank(10, &bs).is_err());
    }

    #[test]
    fn canonical_table1_total_completion() {
        let inst = table1();
        let bs = compute_blocks(9, &inst.machines);
        let all: Vec<_> = (0..9).collect();
        let sol = build_canonical(&inst, &all, &bs).unwrap();
        let obj = evaluate(&sol, &inst).unwrap();
        assert_eq!(obj.total_completion_raw(inst.scale()), 58.0);
        assert!(validate_feasible(&inst, &sol, &bs).is_feasible());
        assert_eq!(sol.sigma_ids(&inst)[0], vec![1, 2, 4, 8]);
    }

    #[test]
    fn canonical_single_job_on_fast_machine() {
        let inst = Instance::from_raw(
            1,
            MachineConfig::new(1, 0, 2, 1).unwrap(),
            &[(1, 4, 1, 0)],
            None,
        )
        .unwrap();
        let bs = compute_blocks(1, &inst.machines);
        let sol = build_canonical(&inst, &[0], &bs).unwrap();
        assert_eq!(inst.scale().to_raw(sol.completions[0].unwrap()), 2.0);
    }

    #[test]
    fn canonical_rejects_wrong_cardinality() {
        let inst = table1();
        let bs = compute_blocks(9, &inst.machines);
        assert!(matches!(
            build_canonical(&inst, &[0, 1], &bs),
            Err(Error::Cardinality { expected: 9, got: 2 })
        ));
    }

    #[test]
    fn lanes_run_deepest_first() {
        let bs = compute_blocks(9, &MachineConfig::standard(2, 2));
        let depths: Vec<u32> = bs.lane(0).iter().map(|&s| bs.position(s).depth).collect();
        assert_eq!(depths, vec![4, 3, 2, 1]);
        assert_eq!(bs.locate(2, 1), Some((2, 2)));
        assert_eq!(bs.locate(2, 3), None);
    }

    #[test]
    fn settle_ties_fixes_equal_length_misplacement() {
        // Two equal jobs on one machine; the later position should carry the
        // job with the looser due date.
        let inst = Instance::from_raw(
            2,
            MachineConfig::new(0, 1, 2, 1).unwrap(),
            &[(1, 3, 5, 100), (2, 3, 1, 3)],
            None,
        )
        .unwrap();
        let bs = compute_blocks(2, &inst.machines);
        let mut sched = canonical_schedule(&inst, &[0, 1], &bs).unwrap();
        // job 1 first (C=3), job 2 second (C=6 > 3): tardy weight 1.
        assert_eq!(sched.weighted_tardy(&inst, &bs), 1);
        assert!(settle_ties(&inst, &bs, &mut sched));
        assert_eq!(sched.weighted_tardy(&inst, &bs), 0);
        assert!(sched.is_feasible(&inst, &bs));
    }
}
