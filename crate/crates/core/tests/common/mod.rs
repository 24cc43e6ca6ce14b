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

#![allow(dead_code)]

use bilevel_sched::{Instance, JobIdx, MachineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Optimistic follower value of one selection by enumeration: every machine
/// assignment, SPT per machine, every order of equal-length jobs. Returns the
/// lexicographic minimum `(sum C, W)` in scaled units.
pub fn follower_optimum(inst: &Instance, selected: &[JobIdx]) -> (i64, u64) {
    let m = inst.machine_count();
    let n = selected.len();
    let mut best = (i64::MAX, u64::MAX);
    let mut assign = vec![0usize; n];
    loop {
        let mut total = 0i64;
        let mut tardy = 0u64;
        for i in 0..m {
            let mut seq: Vec<JobIdx> = (0..n).filter(|&k| assign[k] == i).map(|k| selected[k]).collect();
            seq.sort_by_key(|&j| inst.jobs[j].p);
            let (c, w) = best_tie_order(inst, i, &seq);
            total += c;
            tardy += w;
        }
        if (total, tardy) < best {
            best = (total, tardy);
        }
        let mut k = 0;
        while k < n {
            assign[k] += 1;
            if assign[k] < m {
                break;
            }
            assign[k] = 0;
            k += 1;
        }
        if k == n {
            return best;
        }
    }
}

fn best_tie_order(inst: &Instance, machine: usize, seq: &[JobIdx]) -> (i64, u64) {
    let mut t = 0i64;
    let mut total = 0i64;
    let mut tardy = 0u64;
    let mut start = 0;
    while start < seq.len() {
        let p = inst.jobs[seq[start]].p;
        let mut end = start;
        while end < seq.len() && inst.jobs[seq[end]].p == p {
            end += 1;
        }
        let dur = inst.duration(seq[start], machine);
        let times: Vec<i64> = (1..=(end - start) as i64).map(|k| t + k * dur).collect();
        total += times.iter().sum::<i64>();
        let mut group: Vec<JobIdx> = seq[start..end].to_vec();
        tardy += min_over_perms(inst, &mut group, 0, &times);
        t = *times.last().unwrap();
        start = end;
    }
    (total, tardy)
}

fn min_over_perms(inst: &Instance, g: &mut Vec<JobIdx>, k: usize, times: &[i64]) -> u64 {
    if k == g.len() {
        return g
            .iter()
            .zip(times)
            .filter(|(&j, &c)| c > inst.jobs[j].d)
            .map(|(&j, _)| inst.jobs[j].w)
            .sum();
    }
    let mut best = u64::MAX;
    for i in k..g.len() {
        g.swap(k, i);
        best = best.min(min_over_perms(inst, g, k + 1, times));
        g.swap(k, i);
    }
    best
}

/// Optimistic bilevel optimum `W` over all selections of size `n`.
pub fn bilevel_optimum(inst: &Instance) -> u64 {
    let nn = inst.job_count();
    let mut best = u64::MAX;
    for mask in 0u32..(1 << nn) {
        if mask.count_ones() as usize != inst.n {
            continue;
        }
        let sel: Vec<JobIdx> = (0..nn).filter(|&j| mask >> j & 1 == 1).collect();
        best = best.min(follower_optimum(inst, &sel).1);
    }
    best
}

/// Small random instance with up to 3 machines and frequent ties.
pub fn small_instance(seed: u64, max_jobs: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nn = rng.gen_range(2..=max_jobs);
    let n = rng.gen_range(1..=nn);
    let (m1, m0) = loop {
        let m1 = rng.gen_range(0..=2);
        let m0 = rng.gen_range(0..=2);
        if (1..=3).contains(&(m1 + m0)) {
            break (m1, m0);
        }
    };
    let v1 = rng.gen_range(2..=3);
    let machines = MachineConfig::new(m1, m0, v1, 1).unwrap();
    let jobs: Vec<(u32, u64, u64, i64)> = (1..=nn as u32)
        .map(|id| {
            (
                id,
                rng.gen_range(1..=6),
                rng.gen_range(1..=5),
                rng.gen_range(1..=12),
            )
        })
        .collect();
    Instance::from_raw(n, machines, &jobs, None).unwrap()
}
