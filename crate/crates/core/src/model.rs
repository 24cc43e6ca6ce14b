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

//! Problem data, exact time arithmetic, and objective evaluation.
//!
//! All times are integers in units of `1 / L`, where `L` is the least common
//! multiple of the machine speeds. A job with raw processing time `p` runs for
//! exactly `p * L / V` units on a machine of speed `V`; due dates are stored
//! multiplied by `L`. Nothing in the crate uses floating-point time.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::follower::BlockStructure;

/// Index of a job inside [`Instance::jobs`]. Jobs are kept sorted by id, so
/// index order and id order agree.
pub type JobIdx = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub id: u32,
    /// Raw processing time.
    pub p: u64,
    pub w: u64,
    /// Due date in scaled units.
    pub d: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub m1: usize,
    pub m0: usize,
    pub v1: u64,
    pub v0: u64,
}

impl MachineConfig {
    pub fn new(m1: usize, m0: usize, v1: u64, v0: u64) -> Result<Self> {
        let mc = MachineConfig { m1, m0, v1, v0 };
        mc.validate()?;
        Ok(mc)
    }

    /// `m1` machines of speed 2 and `m0` of speed 1.
    pub fn standard(m1: usize, m0: usize) -> Self {
        MachineConfig { m1, m0, v1: 2, v0: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m1 + self.m0 == 0 {
            return Err(Error::InvalidInstance("at least one machine is required".into()));
        }
        if self.v0 == 0 || self.v1 == 0 {
            return Err(Error::InvalidInstance("machine speeds must be positive".into()));
        }
        if self.v0 >= self.v1 {
            return Err(Error::InvalidInstance(format!(
                "low speed V0={} must be below high speed V1={}",
                self.v0, self.v1
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.m1 + self.m0
    }

    /// Speed of machine `i`; fast machines come first.
    #[inline]
    pub fn speed(&self, i: usize) -> u64 {
        if i < self.m1 {
            self.v1
        } else {
            self.v0
        }
    }

    pub fn time_scale(&self) -> TimeScale {
        TimeScale::for_speeds(self.v1, self.v0)
    }

    /// Aggregate speed `m1 * V1 + m0 * V0`.
    pub fn capacity(&self) -> u64 {
        self.m1 as u64 * self.v1 + self.m0 as u64 * self.v0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeScale {
    pub lcm: u64,
}

impl TimeScale {
    pub fn for_speeds(v1: u64, v0: u64) -> Self {
        TimeScale { lcm: lcm(v1, v0) }
    }

    /// Scaled duration of one raw time unit on a machine of the given speed.
    #[inline]
    pub fn factor(&self, speed: u64) -> u64 {
        self.lcm / speed
    }

    pub fn to_raw(&self, scaled: i64) -> f64 {
        scaled as f64 / self.lcm as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub tf: f64,
    pub rdd: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub n: usize,
    pub jobs: Vec<Job>,
    pub machines: MachineConfig,
    pub meta: Option<InstanceMeta>,
    scale: TimeScale,
    /// Per-machine multiplier from raw processing time to scaled duration.
    factors: Vec<u64>,
}

impl Instance {
    /// Builds an instance from `(id, p, w, d)` tuples with `d` in raw units.
    pub fn from_raw(
        n: usize,
        machines: MachineConfig,
        jobs: &[(u32, u64, u64, i64)],
        meta: Option<InstanceMeta>,
    ) -> Result<Self> {
        machines.validate()?;
        let scale = machines.time_scale();
        let l = scale.lcm as i64;
        let jobs = jobs
            .iter()
            .map(|&(id, p, w, d)| Job { id, p, w, d: d * l })
            .collect();
        Instance::new(n, machines, jobs, meta)
    }

    /// Builds an instance from jobs whose due dates are already scaled.
    pub fn new(
        n: usize,
        machines: MachineConfig,
        mut jobs: Vec<Job>,
        meta: Option<InstanceMeta>,
    ) -> Result<Self> {
        machines.validate()?;
        if n == 0 || n > jobs.len() {
            return Err(Error::InvalidInstance(format!(
                "selection size n={} must lie in 1..={}",
                n,
                jobs.len()
            )));
        }
        for j in &jobs {
            if j.p == 0 || j.w == 0 {
                return Err(Error::InvalidInstance(format!(
                    "job {} needs p >= 1 and w >= 1",
                    j.id
                )));
            }
        }
        jobs.sort_by_key(|j| j.id);
        if jobs.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidInstance("duplicate job id".into()));
        }
        let scale = machines.time_scale();
        let factors = (0..machines.count())
            .map(|i| scale.factor(machines.speed(i)))
            .collect();
        Ok(Instance {
            n,
            jobs,
            machines,
            meta,
            scale,
            factors,
        })
    }

    #[inline]
    pub fn job_count(&self) -> usize {
        self.jobs.len()
    }

    #[inline]
    pub fn machine_count(&self) -> usize {
        self.machines.count()
    }

    #[inline]
    pub fn scale(&self) -> TimeScale {
        self.scale
    }

    /// Scaled duration of job `j` on machine `i`.
    #[inline]
    pub fn duration(&self, j: JobIdx, machine: usize) -> i64 {
        (self.jobs[j].p * self.factors[machine]) as i64
    }

    #[inline]
    pub fn factor(&self, machine: usize) -> u64 {
        self.factors[machine]
    }

    #[inline]
    pub fn is_tardy(&self, j: JobIdx, completion: i64) -> bool {
        completion > self.jobs[j].d
    }

    pub fn index_of(&self, id: u32) -> Option<JobIdx> {
        self.jobs.binary_search_by_key(&id, |j| j.id).ok()
    }

    /// All job indices ordered by `(p, id)`.
    pub fn spt_order(&self) -> Vec<JobIdx> {
        let mut order: Vec<JobIdx> = (0..self.jobs.len()).collect();
        order.sort_by_key(|&j| (self.jobs[j].p, self.jobs[j].id));
        order
    }

    /// Sum of the `n` largest weights; no solution can exceed it.
    pub fn weight_cap(&self) -> u64 {
        let mut w: Vec<u64> = self.jobs.iter().map(|j| j.w).collect();
        w.sort_unstable_by(|a, b| b.cmp(a));
        w.iter().take(self.n).sum()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&InstanceFile::from(self))?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Instance::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }
}

/// On-disk instance layout. Due dates are in raw units.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(rename = "N")]
    big_n: usize,
    n: usize,
    m1: usize,
    m0: usize,
    #[serde(rename = "V1")]
    v1: u64,
    #[serde(rename = "V0")]
    v0: u64,
    jobs: Vec<JobRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<InstanceMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JobRecord {
    id: u32,
    p: u64,
    w: u64,
    d: i64,
}

impl InstanceFile {
    fn into_instance(self) -> Result<Instance> {
        if self.big_n != self.jobs.len() {
            return Err(Error::InvalidInstance(format!(
                "N={} but {} jobs listed",
                self.big_n,
                self.jobs.len()
            )));
        }
        let machines = MachineConfig::new(self.m1, self.m0, self.v1, self.v0)?;
        let raw: Vec<_> = self.jobs.iter().map(|j| (j.id, j.p, j.w, j.d)).collect();
        Instance::from_raw(self.n, machines, &raw, self.meta)
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        let l = inst.scale.lcm as i64;
        InstanceFile {
            big_n: inst.jobs.len(),
            n: inst.n,
            m1: inst.machines.m1,
            m0: inst.machines.m0,
            v1: inst.machines.v1,
            v0: inst.machines.v0,
            jobs: inst
                .jobs
                .iter()
                .map(|j| JobRecord {
                    id: j.id,
                    p: j.p,
                    w: j.w,
                    d: j.d.div_euclid(l),
                })
                .collect(),
            meta: inst.meta,
        }
    }
}

/// A (possibly partial) solution: machine sequences plus the leader's split
/// of jobs into selected and unselected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub sigma: Vec<Vec<JobIdx>>,
    pub selected: BTreeSet<JobIdx>,
    pub unselected: BTreeSet<JobIdx>,
    /// Scaled completion time per job index, `None` for unscheduled jobs.
    pub completions: Vec<Option<i64>>,
}

impl Solution {
    /// Derives the selection and completion times from machine sequences.
    pub fn from_sigma(instance: &Instance, sigma: Vec<Vec<JobIdx>>) -> Result<Self> {
        let mut completions = vec![None; instance.job_count()];
        let mut selected = BTreeSet::new();
        if sigma.len() != instance.machine_count() {
            return Err(Error::StructuralInvalid(format!(
                "{} machine sequences for {} machines",
                sigma.len(),
                instance.machine_count()
            )));
        }
        for (i, seq) in sigma.iter().enumerate() {
            let mut t = 0i64;
            for &j in seq {
                if j >= instance.job_count() {
                    return Err(Error::StructuralInvalid(format!("unknown job index {j}")));
                }
                if !selected.insert(j) {
                    return Err(Error::StructuralInvalid(format!(
                        "job {} scheduled twice",
                        instance.jobs[j].id
                    )));
                }
                t += instance.duration(j, i);
                completions[j] = Some(t);
            }
        }
        let unselected = (0..instance.job_count())
            .filter(|j| !selected.contains(j))
            .collect();
        Ok(Solution {
            sigma,
            selected,
            unselected,
            completions,
        })
    }

    /// Same as [`Solution::from_sigma`] but with 1-based job ids.
    pub fn from_ids(instance: &Instance, sigma: &[Vec<u32>]) -> Result<Self> {
        let seqs = sigma
            .iter()
            .map(|seq| {
                seq.iter()
                    .map(|&id| {
                        instance
                            .index_of(id)
                            .ok_or_else(|| Error::Argument(format!("unknown job id {id}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Solution::from_sigma(instance, seqs)
    }

    pub fn empty(instance: &Instance) -> Self {
        Solution {
            sigma: vec![Vec::new(); instance.machine_count()],
            selected: BTreeSet::new(),
            unselected: (0..instance.job_count()).collect(),
            completions: vec![None; instance.job_count()],
        }
    }

    pub fn selected_ids(&self, instance: &Instance) -> Vec<u32> {
        self.selected.iter().map(|&j| instance.jobs[j].id).collect()
    }

    pub fn sigma_ids(&self, instance: &Instance) -> Vec<Vec<u32>> {
        self.sigma
            .iter()
            .map(|seq| seq.iter().map(|&j| instance.jobs[j].id).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Objectives {
    /// Sum of completion times in scaled units.
    pub total_completion: i64,
    pub weighted_tardy: u64,
}

impl Objectives {
    pub fn total_completion_raw(&self, scale: TimeScale) -> f64 {
        scale.to_raw(self.total_completion)
    }
}

/// Recomputes both objectives from the machine sequences of `solution`.
pub fn evaluate(solution: &Solution, instance: &Instance) -> Result<Objectives> {
    if solution.sigma.len() != instance.machine_count() {
        return Err(Error::StructuralInvalid("machine count mismatch".into()));
    }
    let mut seen = vec![false; instance.job_count()];
    let mut total_completion = 0i64;
    let mut weighted_tardy = 0u64;
    for (i, seq) in solution.sigma.iter().enumerate() {
        let mut t = 0i64;
        for &j in seq {
            if j >= instance.job_count() {
                return Err(Error::StructuralInvalid(format!("unknown job index {j}")));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::StructuralInvalid(format!(
                    "job {} appears twice",
                    instance.jobs[j].id
                )));
            }
            if !solution.selected.contains(&j) {
                return Err(Error::StructuralInvalid(format!(
                    "job {} is scheduled but not selected",
                    instance.jobs[j].id
                )));
            }
            t += instance.duration(j, i);
            total_completion += t;
            if instance.is_tardy(j, t) {
                weighted_tardy += instance.jobs[j].w;
            }
        }
    }
    if let Some(&j) = solution.selected.iter().find(|&&j| !seen[j]) {
        return Err(Error::StructuralInvalid(format!(
            "selected job {} is on no machine",
            instance.jobs[j].id
        )));
    }
    Ok(Objectives {
        total_completion,
        weighted_tardy,
    })
}

/// First rule a solution breaks, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Cardinality { expected: usize, got: usize },
    Partition,
    Structure(String),
    /// A job sits at a position that belongs to no block.
    OutsideBlocks { machine: usize, depth: u32 },
    Occupancy { block: usize, expected: usize, got: usize },
    Monotonicity { block: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible(Violation),
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }
}

/// Checks that `solution` selects `n` jobs and follows the block structure.
pub fn validate_feasible(
    instance: &Instance,
    solution: &Solution,
    blocks: &BlockStructure,
) -> Verdict {
    use Verdict::Infeasible;
    if solution.selected.len() != blocks.n() {
        return Infeasible(Violation::Cardinality {
            expected: blocks.n(),
            got: solution.selected.len(),
        });
    }
    let all = instance.job_count();
    if solution.selected.len() + solution.unselected.len() != all
        || solution.selected.intersection(&solution.unselected).next().is_some()
    {
        return Infeasible(Violation::Partition);
    }
    if let Err(e) = evaluate(solution, instance) {
        return Infeasible(Violation::Structure(e.to_string()));
    }

    let nb = blocks.blocks().len();
    let mut count = vec![0usize; nb];
    let mut min_p = vec![u64::MAX; nb];
    let mut max_p = vec![0u64; nb];
    for (i, seq) in solution.sigma.iter().enumerate() {
        let total = seq.len() as u32;
        for (q, &j) in seq.iter().enumerate() {
            let depth = total - q as u32;
            let Some((b, _)) = blocks.locate(i, depth) else {
                return Infeasible(Violation::OutsideBlocks { machine: i, depth });
            };
            count[b] += 1;
            min_p[b] = min_p[b].min(instance.jobs[j].p);
            max_p[b] = max_p[b].max(instance.jobs[j].p);
        }
    }
    for (b, block) in blocks.blocks().iter().enumerate() {
        if count[b] != block.occupancy {
            return Infeasible(Violation::Occupancy {
                block: b,
                expected: block.occupancy,
                got: count[b],
            });
        }
    }
    for b in 1..nb {
        if count[b - 1] > 0 && count[b] > 0 && max_p[b - 1] > min_p[b] {
            return Infeasible(Violation::Monotonicity { block: b });
        }
    }
    Verdict::Feasible
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::follower::compute_blocks;
    use crate::fixtures::table1;

    fn fig2(inst: &Instance) -> Solution {
        Solution::from_ids(
            inst,
            &[vec![1, 3, 7, 8], vec![2, 6, 9], vec![5], vec![4]],
        )
        .unwrap()
    }

    #[test]
    fn fig2_schedule_objectives() {
        let inst = table1();
        let obj = evaluate(&fig2(&inst), &inst).unwrap();
        assert_eq!(inst.scale().lcm, 2);
        assert_eq!(obj.total_completion, 116);
        assert_eq!(obj.total_completion_raw(inst.scale()), 58.0);
        assert_eq!(obj.weighted_tardy, 8);
    }

    #[test]
    fn completion_equal_to_due_date_is_on_time() {
        let inst = table1();
        let sol = fig2(&inst);
        let j3 = inst.index_of(3).unwrap();
        assert_eq!(sol.completions[j3], Some(inst.jobs[j3].d));
        assert!(!inst.is_tardy(j3, sol.completions[j3].unwrap()));
    }

    #[test]
    fn empty_solution_has_zero_objectives() {
        let inst = table1();
        let obj = evaluate(&Solution::empty(&inst), &inst).unwrap();
        assert_eq!(obj, Objectives { total_completion: 0, weighted_tardy: 0 });
    }

    #[test]
    fn duplicate_job_is_structural_error() {
        let inst = table1();
        let mut sol = fig2(&inst);
        sol.sigma[3].push(0);
        assert!(matches!(evaluate(&sol, &inst), Err(Error::StructuralInvalid(_))));
    }

    #[test]
    fn selected_but_unscheduled_is_structural_error() {
        let inst = table1();
        let mut sol = fig2(&inst);
        sol.sigma[2].clear();
        assert!(matches!(evaluate(&sol, &inst), Err(Error::StructuralInvalid(_))));
    }

    #[test]
    fn fig2_is_feasible_and_swap_breaks_monotonicity() {
        let inst = table1();
        let blocks = compute_blocks(9, &inst.machines);
        assert!(validate_feasible(&inst, &fig2(&inst), &blocks).is_feasible());

        let swapped =
            Solution::from_ids(&inst, &[vec![8, 3, 7, 1], vec![2, 6, 9], vec![5], vec![4]])
                .unwrap();
        assert!(matches!(
            validate_feasible(&inst, &swapped, &blocks),
            Verdict::Infeasible(Violation::Monotonicity { .. })
        ));
    }

    #[test]
    fn short_selection_is_infeasible() {
        let inst = table1();
        let blocks = compute_blocks(9, &inst.machines);
        let sol =
            Solution::from_ids(&inst, &[vec![1, 3, 7, 8], vec![2, 6, 9], vec![5], vec![]])
                .unwrap();
        assert!(matches!(
            validate_feasible(&inst, &sol, &blocks),
            Verdict::Infeasible(Violation::Cardinality { expected: 9, got: 8 })
        ));
    }

    #[test]
    fn json_round_trip_keeps_raw_due_dates() {
        let inst = table1();
        let text = inst.to_json_string().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["N"], 9);
        assert_eq!(v["V1"], 2);
        assert_eq!(v["jobs"][1]["d"], 1);
        let back = Instance::from_json_str(&text).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn json_job_count_mismatch_is_rejected() {
        let text = r#"{"N":2,"n":1,"m1":1,"m0":0,"V1":2,"V0":1,
                       "jobs":[{"id":1,"p":3,"w":1,"d":2}]}"#;
        assert!(Instance::from_json_str(text).is_err());
    }

    #[test]
    fn weight_cap_sums_largest_weights() {
        let inst = table1();
        // weights 1,3,1,1,2,3,2,2,1 -> all nine
        assert_eq!(inst.weight_cap(), 16);
    }
}
