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

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with
//! `cargo test -p bilevel-sched --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bilevel_sched::bench::{full_grid, generate_instance, generate_suite, solve, Algo, GenSpec, SolveOptions};
use bilevel_sched::fixtures::table1;
use bilevel_sched::follower::{build_canonical, canonical_schedule, compute_blocks, BlockSchedule};
use bilevel_sched::hungarian::{solve_assignment, CostMatrix};
use bilevel_sched::localsearch::{initial_schedule, run_ls_schedule, LsConfig, LsVariant};
use bilevel_sched::params::{msls_params, rbs_params};
use bilevel_sched::rbs::{run_rbs, RbsConfig};
use bilevel_sched::tuner::{build_database, objective, tune, ParamSpace, RandomSearch, RbsRunner, RBS_BASELINE};
use bilevel_sched::params::NormBounds;
use bilevel_sched::{evaluate, validate_feasible, Budget, Instance, MachineConfig, Meter};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn ac1() -> Check {
    let inst = table1();
    let t = Instant::now();
    let bs = compute_blocks(inst.n, &inst.machines);
    let sel: Vec<usize> = (0..inst.job_count()).collect();
    let sol = build_canonical(&inst, &sel, &bs).map_err(|e| e.to_string())?;
    let obj = evaluate(&sol, &inst).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let raw = obj.total_completion_raw(inst.scale());
    ensure(raw == 58.0, || format!("sum C = {raw}"))?;
    ensure(bs.occupancies() == vec![1, 2, 4, 2], || format!("{:?}", bs.occupancies()))?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("sum C = 58, occupancies [1,2,4,2], {elapsed:?}"))
}

fn ac2() -> Check {
    let t = Instant::now();
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=9);
        let nn = n + rng.gen_range(0..=3);
        let (m1, m0) = loop {
            let m1 = rng.gen_range(0..=3);
            let m0 = rng.gen_range(0..=3);
            if (1..=3).contains(&(m1 + m0)) {
                break (m1, m0);
            }
        };
        let jobs: Vec<_> = (1..=nn as u32)
            .map(|id| (id, rng.gen_range(1..=20), rng.gen_range(1..=10), rng.gen_range(1..=40)))
            .collect();
        let inst = Instance::from_raw(n, MachineConfig::new(m1, m0, 2, 1).unwrap(), &jobs, None)
            .map_err(|e| e.to_string())?;
        let mut ids: Vec<usize> = (0..nn).collect();
        ids.shuffle(&mut rng);
        let sel = &ids[..n];
        let bs = compute_blocks(n, &inst.machines);
        let sol = build_canonical(&inst, sel, &bs).map_err(|e| e.to_string())?;
        let got = evaluate(&sol, &inst).map_err(|e| e.to_string())?.total_completion;
        let (want, _) = common::follower_optimum(&inst, sel);
        ensure(got == want, || format!("seed {seed}: canonical {got}, enumeration {want}"))?;
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("500 instances exact, {elapsed:?}"))
}

fn permutation_min(rows: &[Vec<u64>]) -> u64 {
    let k = rows.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = u64::MAX;
    fn rec(rows: &[Vec<u64>], perm: &mut Vec<usize>, i: usize, best: &mut u64) {
        if i == perm.len() {
            *best = (*best).min(perm.iter().enumerate().map(|(r, &c)| rows[r][c]).sum());
            return;
        }
        for j in i..perm.len() {
            perm.swap(i, j);
            rec(rows, perm, i + 1, best);
            perm.swap(i, j);
        }
    }
    rec(rows, &mut perm, 0, &mut best);
    best
}

fn ac3() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let k = rng.gen_range(1..=7);
        let rows: Vec<Vec<u64>> = (0..k).map(|_| (0..k).map(|_| rng.gen_range(0..=99)).collect()).collect();
        let got = solve_assignment(&CostMatrix::from_rows(rows.clone()).unwrap())
            .map_err(|e| e.to_string())?
            .total_cost;
        let want = permutation_min(&rows);
        ensure(got == want, || format!("case {case}: {got} vs {want}"))?;
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("200 matrices exact, {elapsed:?}"))
}

fn ac4() -> Check {
    let t = Instant::now();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let nn: usize = rng.gen_range(2..=8);
        let n = (3 * nn).div_ceil(4);
        let jobs: Vec<_> = (1..=nn as u32)
            .map(|id| (id, rng.gen_range(1..=10), rng.gen_range(1..=10), rng.gen_range(1..=15)))
            .collect();
        let inst = Instance::from_raw(n, MachineConfig::new(1, 1, 2, 1).unwrap(), &jobs, None)
            .map_err(|e| e.to_string())?;
        let out = run_rbs(&inst, &RbsConfig::new(1_000_000, 0.0)).map_err(|e| e.to_string())?;
        let want = common::bilevel_optimum(&inst);
        let got = out.objectives.weighted_tardy;
        ensure(got == want, || format!("seed {seed}: beam {got}, optimum {want}"))?;
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!("100 instances exact, {elapsed:?}"))
}

fn ac5() -> Check {
    let t = Instant::now();
    let variants = [LsVariant::Assignment, LsVariant::Swap, LsVariant::FullAssignment];
    let mut moves = 0usize;
    for run in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(run);
        let nn = rng.gen_range(6..=40);
        let spec = GenSpec {
            tf: [0.2, 0.4, 0.6, 0.8, 1.0][rng.gen_range(0..5)],
            rdd: [0.2, 0.4, 0.6, 0.8, 1.0][rng.gen_range(0..5)],
            seed: 55,
            ..GenSpec::new(nn, rng.gen_range(2..nn), rng.gen_range(1..=3), rng.gen_range(0..=3))
        };
        let inst = generate_instance(&spec, run).map_err(|e| e.to_string())?;
        let bs = compute_blocks(inst.n, &inst.machines);
        let variant = variants[run as usize % 3];
        let mut problems: Vec<String> = Vec::new();
        let mut ws: Vec<u64> = Vec::new();
        let mut observer = |s: &BlockSchedule| {
            let sol = s.to_solution(&inst, &bs);
            if !validate_feasible(&inst, &sol, &bs).is_feasible() {
                problems.push("infeasible incumbent".into());
            }
            let sel: Vec<usize> = s.selected().collect();
            let canon = canonical_schedule(&inst, &sel, &bs).unwrap();
            if s.objectives(&inst, &bs).total_completion != canon.objectives(&inst, &bs).total_completion {
                problems.push("total completion off the canonical optimum".into());
            }
            ws.push(s.weighted_tardy(&inst, &bs));
        };
        run_ls_schedule(
            &inst,
            &bs,
            initial_schedule(&inst, &bs),
            &LsConfig::new(variant),
            &mut Meter::unlimited(),
            &mut observer,
        );
        ensure(problems.is_empty(), || format!("run {run} {variant:?}: {}", problems[0]))?;
        ensure(ws.windows(2).all(|w| w[1] <= w[0]), || format!("run {run}: W sequence {ws:?}"))?;
        moves += ws.len();
    }
    Ok(format!("200 runs, {moves} incumbents checked, 0 violations, {:?}", t.elapsed()))
}

fn ac6() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = GenSpec {
        seed: 6,
        ..GenSpec::new(30, 15, 2, 2)
    };
    let files = generate_suite(&spec, &full_grid(), dir.path()).map_err(|e| e.to_string())?;
    let opts = SolveOptions {
        budget: Some(Budget::Steps(3000)),
        ..SolveOptions::default()
    };
    for f in &files {
        let inst = Instance::load(f).map_err(|e| e.to_string())?;
        let rep = solve(&inst, Algo::Msls, &opts).map_err(|e| e.to_string())?;
        let seeds = rep.seed_ws.clone().unwrap_or_default();
        let min_seed = seeds.iter().copied().min().unwrap_or(u64::MAX);
        ensure(rep.weighted_tardy <= min_seed && rep.weighted_tardy <= rep.fallback_w, || {
            format!("{}: W {} seeds min {min_seed} fallback {}", f.display(), rep.weighted_tardy, rep.fallback_w)
        })?;
    }
    Ok(format!("{} instances, 0 violations", files.len()))
}

fn ac7() -> Check {
    let r = rbs_params(100, 75, 10);
    ensure(r.beam_width == 1 && r.alpha == 0.0, || format!("rbs_params(100,75,10) = {r:?}"))?;
    for (nn, m, w) in [(40, 2, 5), (100, 2, 3), (100, 10, 5)] {
        let p = msls_params(nn, m);
        ensure(p.beam_width == w, || format!("msls width at ({nn},{m}) = {}", p.beam_width))?;
    }
    for nn in 1..=200 {
        for m in 1..=12 {
            let p = msls_params(nn, m);
            ensure(p.k == 1459 && p.ls_fraction == 0.328, || format!("K/fraction at ({nn},{m})"))?;
        }
    }
    Ok("rbs (1, 0); msls widths 5, 3, 5; K = 1459, fraction 0.328".into())
}

fn ac8() -> Check {
    let runner = RbsRunner {
        budget: Budget::Steps(200),
        norm: NormBounds::default(),
    };
    let instances: Vec<_> = (0..8).map(|s| (format!("t{s}"), common::small_instance(s, 10))).collect();
    let db = build_database(instances, &RBS_BASELINE, &runner).map_err(|e| e.to_string())?;
    let zero = objective(&RBS_BASELINE, &db, &runner);
    ensure(zero.value == Ratio::from_integer(0), || format!("objective(baseline) = {}", zero.value))?;
    let rep = tune(&ParamSpace::rbs(), &mut RandomSearch::new(8), 12, &db, &runner, Some(&RBS_BASELINE), 8)
        .map_err(|e| e.to_string())?;
    ensure(rep.best_score >= 0.0, || format!("best score {}", rep.best_score))?;
    Ok(format!("objective(baseline) = 0, tuned best {}", rep.best_score))
}

fn ac9() -> Check {
    let t = Instant::now();
    let spec = GenSpec {
        seed: 9,
        ..GenSpec::new(100, 50, 2, 2)
    };
    let (mut sp, mut sw, mut k) = (0u64, 0u64, 0u64);
    for index in 0..100 {
        for j in generate_instance(&spec, index).map_err(|e| e.to_string())?.jobs {
            sp += j.p;
            sw += j.w;
            k += 1;
        }
    }
    let (mp, mw) = (sp as f64 / k as f64, sw as f64 / k as f64);
    ensure((mp - 50.5).abs() <= 0.505, || format!("mean p {mp}"))?;
    ensure((mw - 5.5).abs() <= 0.11, || format!("mean w {mw}"))?;
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let small = GenSpec { count: 2, seed: 9, ..GenSpec::new(20, 10, 1, 1) };
    let fa = generate_suite(&small, &full_grid(), a.path()).map_err(|e| e.to_string())?;
    let fb = generate_suite(&small, &full_grid(), b.path()).map_err(|e| e.to_string())?;
    for (x, y) in fa.iter().zip(&fb) {
        ensure(std::fs::read(x).ok() == std::fs::read(y).ok(), || format!("{} differs", x.display()))?;
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("{k} draws: mean p {mp:.3}, mean w {mw:.3}; {} files identical; {elapsed:?}", fa.len()))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 9] = [
        ("AC1 golden example", ac1),
        ("AC2 follower optimality oracle", ac2),
        ("AC3 assignment oracle", ac3),
        ("AC4 exhaustive beam exactness", ac4),
        ("AC5 local search invariants", ac5),
        ("AC6 multi-start dominance", ac6),
        ("AC7 parameter formulas", ac7),
        ("AC8 tuner identity", ac8),
        ("AC9 generator statistics", ac9),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why}");
            }
        }
    }
    println!("[NOTE] AC10 published tables are not reproduced; `bilevel-sched bench` emits the same report schema on generated suites");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
