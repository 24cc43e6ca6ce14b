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

//! Random instance generation, algorithm dispatch, and experiment reports.
//!
//! The generator is ChaCha8 (`rand_chacha`) seeded with `seed_from_u64(seed)`
//! and switched to stream `index`, so each `(seed, index)` pair yields the
//! same instance on every platform. Jobs draw `p` then `w`; due dates are
//! drawn afterwards, once the load `P` is known.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::follower::compute_blocks;
use crate::localsearch::{initial_solution, run_ls, LsConfig, LsVariant};
use crate::model::{Instance, InstanceMeta, MachineConfig, Objectives, Solution};
use crate::msls::{run_msls, MslsConfig};
use crate::params::{msls_params, rbs_params};
use crate::rbs::{run_rbs, RbsConfig};

pub const GRID: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
pub const THREADS_ENV: &str = "BILEVEL_SCHED_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub n_jobs: usize,
    pub n: usize,
    pub m1: usize,
    pub m0: usize,
    pub v1: u64,
    pub v0: u64,
    pub tf: f64,
    pub rdd: f64,
    pub count: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(n_jobs: usize, n: usize, m1: usize, m0: usize) -> Self {
        GenSpec {
            n_jobs,
            n,
            m1,
            m0,
            v1: 2,
            v0: 1,
            tf: 0.2,
            rdd: 0.2,
            count: 1,
            seed: 0,
        }
    }

    pub fn file_name(&self, index: u64) -> String {
        format!(
            "N{}_n{}_m{}-{}_tf{:.1}_rdd{:.1}_{:04}.json",
            self.n_jobs, self.n, self.m1, self.m0, self.tf, self.rdd, index
        )
    }
}

/// `P = sum p / (m1 V1 + m0 V0)`.
pub fn load_factor(p_sum: u64, machines: &MachineConfig) -> Ratio<i64> {
    let cap = machines.m1 as u64 * machines.v1 + machines.m0 as u64 * machines.v0;
    Ratio::new(p_sum as i64, cap as i64)
}

/// Due-date window `[P (1 - tf - rdd/2), P (1 - tf + rdd/2)]`.
pub fn due_window(p: Ratio<i64>, tf: f64, rdd: f64) -> (f64, f64) {
    let pf = *p.numer() as f64 / *p.denom() as f64;
    (pf * (1.0 - tf - rdd / 2.0), pf * (1.0 - tf + rdd / 2.0))
}

pub fn generate_instance(spec: &GenSpec, index: u64) -> Result<Instance> {
    let machines = MachineConfig::new(spec.m1, spec.m0, spec.v1, spec.v0)?;
    if spec.n == 0 || spec.n > spec.n_jobs {
        return Err(Error::Argument(format!(
            "n={} must lie in 1..={}",
            spec.n, spec.n_jobs
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let pw: Vec<(u64, u64)> = (0..spec.n_jobs)
        .map(|_| (rng.gen_range(1..=100), rng.gen_range(1..=10)))
        .collect();
    let p_sum = pw.iter().map(|&(p, _)| p).sum();
    let (lo, hi) = due_window(load_factor(p_sum, &machines), spec.tf, spec.rdd);
    let jobs: Vec<(u32, u64, u64, i64)> = pw
        .iter()
        .enumerate()
        .map(|(k, &(p, w))| {
            let d = lo + rng.gen::<f64>() * (hi - lo);
            (k as u32 + 1, p, w, d.round() as i64)
        })
        .collect();
    let meta = InstanceMeta {
        tf: spec.tf,
        rdd: spec.rdd,
        seed: spec.seed,
    };
    Instance::from_raw(spec.n, machines, &jobs, Some(meta))
}

/// Writes `spec.count` instances per `(tf, rdd)` class into `dir`. Streams
/// are numbered across classes so no two files share random draws.
pub fn generate_suite(spec: &GenSpec, classes: &[(f64, f64)], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for (c, &(tf, rdd)) in classes.iter().enumerate() {
        let class = GenSpec { tf, rdd, ..*spec };
        for k in 0..spec.count {
            let index = (c * spec.count + k) as u64;
            let inst = generate_instance(&class, index)?;
            let path = dir.join(class.file_name(index));
            inst.save(&path)?;
            out.push(path);
        }
    }
    Ok(out)
}

pub fn full_grid() -> Vec<(f64, f64)> {
    GRID.iter()
        .flat_map(|&tf| GRID.iter().map(move |&rdd| (tf, rdd)))
        .collect()
}

/// Relative gap in percent, `(best - current) / best * 100`; `None` when the
/// reference is zero and the current value is not.
pub fn delta(best: u64, current: u64) -> Option<f64> {
    if best == 0 {
        return (current == 0).then_some(0.0);
    }
    Some((best as f64 - current as f64) / best as f64 * 100.0)
}

pub fn delta_sigma(best_sum: u64, current_sum: u64) -> Option<f64> {
    delta(best_sum, current_sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Lsa,
    Lss,
    Lsfa,
    Rbs,
    Msls,
}

impl Algo {
    pub const ALL: [Algo; 5] = [Algo::Lsa, Algo::Lss, Algo::Lsfa, Algo::Rbs, Algo::Msls];

    pub fn name(&self) -> &'static str {
        match self {
            Algo::Lsa => "lsa",
            Algo::Lss => "lss",
            Algo::Lsfa => "lsfa",
            Algo::Rbs => "rbs",
            Algo::Msls => "msls",
        }
    }

    pub fn parse(s: &str) -> Result<Algo> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Argument(format!("unknown algorithm {s:?}")))
    }

    pub fn parse_list(s: &str) -> Result<Vec<Algo>> {
        s.split(',').filter(|t| !t.trim().is_empty()).map(Algo::parse).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub budget: Option<Budget>,
    pub beam_width: Option<usize>,
    pub alpha: Option<f64>,
    pub seeds: Option<usize>,
    pub ls_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub algo: &'static str,
    pub weighted_tardy: u64,
    pub sum_cj_raw: f64,
    pub selected: Vec<u32>,
    pub sequences: Vec<Vec<u32>>,
    pub time_ms: f64,
    pub budget_hit: bool,
    pub beam_width: Option<usize>,
    pub alpha: Option<f64>,
    /// Seed `W` values processed by MSLS.
    pub seed_ws: Option<Vec<u64>>,
    pub fallback_w: u64,
    #[serde(skip)]
    pub solution: Solution,
    #[serde(skip)]
    pub objectives: Objectives,
}

pub fn solve(instance: &Instance, algo: Algo, opts: &SolveOptions) -> Result<SolveReport> {
    let budget = opts.budget.unwrap_or(Budget::Unlimited);
    let blocks = compute_blocks(instance.n, &instance.machines);
    let start = initial_solution(instance, &blocks);
    let fallback_w = crate::model::evaluate(&start, instance)?.weighted_tardy;
    let big_n = instance.job_count() as u64;
    let m = instance.machine_count() as u64;
    let timer = Instant::now();
    let (solution, objectives, budget_hit, beam_width, alpha, seed_ws) = match algo {
        Algo::Lsa | Algo::Lss | Algo::Lsfa => {
            let variant = match algo {
                Algo::Lsa => LsVariant::Assignment,
                Algo::Lss => LsVariant::Swap,
                _ => LsVariant::FullAssignment,
            };
            let out = run_ls(instance, &start, &LsConfig::new(variant).with_budget(budget))?;
            (out.solution, out.objectives, out.budget_hit, None, None, None)
        }
        Algo::Rbs => {
            let p = rbs_params(big_n, instance.n as u64, m);
            let w = opts.beam_width.unwrap_or(p.beam_width);
            let a = opts.alpha.unwrap_or(p.alpha);
            let out = run_rbs(instance, &RbsConfig::new(w, a).with_budget(budget))?;
            let hit = out.stats.budget_hit;
            (out.solution, out.objectives, hit, Some(w), Some(a), None)
        }
        Algo::Msls => {
            let p = msls_params(big_n, m);
            let cfg = MslsConfig::new(
                opts.beam_width.unwrap_or(p.beam_width),
                opts.seeds.unwrap_or(p.k),
                opts.ls_fraction.unwrap_or(p.ls_fraction),
            )
            .with_budget(budget);
            let out = run_msls(instance, &cfg)?;
            let hit = out.stats.budget_hit;
            let ws = out.stats.seed_ws;
            (out.solution, out.objectives, hit, Some(cfg.beam_width), None, Some(ws))
        }
    };
    let elapsed = timer.elapsed();
    Ok(SolveReport {
        algo: algo.name(),
        weighted_tardy: objectives.weighted_tardy,
        sum_cj_raw: objectives.total_completion_raw(instance.scale()),
        selected: solution.selected_ids(instance),
        sequences: solution.sigma_ids(instance),
        time_ms: ms(elapsed),
        budget_hit,
        beam_width,
        alpha,
        seed_ws,
        fallback_w,
        solution,
        objectives,
    })
}

/// Milliseconds rounded to whole microseconds.
fn ms(d: Duration) -> f64 {
    d.as_micros() as f64 / 1000.0
}

/// One CSV row. Columns and their order are fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub instance: String,
    #[serde(rename = "N")]
    pub n_jobs: Option<usize>,
    pub n: Option<usize>,
    pub m1: Option<usize>,
    pub m0: Option<usize>,
    pub tf: Option<f64>,
    pub rdd: Option<f64>,
    pub algo: String,
    #[serde(rename = "W")]
    pub w: Option<u64>,
    pub sum_cj_raw: Option<f64>,
    pub time_ms: f64,
    pub budget_hit: bool,
    pub seed: Option<u64>,
}

pub const CSV_HEADER: &str = "instance,N,n,m1,m0,tf,rdd,algo,W,sum_cj_raw,time_ms,budget_hit,seed";

/// Per-group aggregates. `delta_*` compare against the best `W` found by any
/// algorithm in the same run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    #[serde(rename = "N")]
    pub n_jobs: usize,
    pub n: usize,
    pub m1: usize,
    pub m0: usize,
    pub algo: String,
    pub instances: usize,
    pub t_avg_ms: f64,
    pub t_max_ms: f64,
    pub delta_avg_vs_run_best: Option<f64>,
    pub delta_med_vs_run_best: Option<f64>,
    pub delta_sigma_vs_run_best: Option<f64>,
    pub sum_obj: u64,
    pub undefined_deltas: usize,
}

pub fn worker_count(flag: Option<usize>) -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or(flag)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Instance files of `dir` in name order.
pub fn suite_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn run_cell(path: &Path, instance: &Result<Instance>, algo: Algo, opts: &SolveOptions) -> Row {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut row = Row {
        instance: name,
        n_jobs: None,
        n: None,
        m1: None,
        m0: None,
        tf: None,
        rdd: None,
        algo: algo.name().into(),
        w: None,
        sum_cj_raw: None,
        time_ms: 0.0,
        budget_hit: false,
        seed: None,
    };
    let Ok(inst) = instance else {
        return row;
    };
    row.n_jobs = Some(inst.job_count());
    row.n = Some(inst.n);
    row.m1 = Some(inst.machines.m1);
    row.m0 = Some(inst.machines.m0);
    if let Some(meta) = &inst.meta {
        row.tf = Some(meta.tf);
        row.rdd = Some(meta.rdd);
        row.seed = Some(meta.seed);
    }
    let timer = Instant::now();
    match solve(inst, algo, opts) {
        Ok(rep) => {
            row.w = Some(rep.weighted_tardy);
            row.sum_cj_raw = Some(rep.sum_cj_raw);
            row.budget_hit = rep.budget_hit;
        }
        Err(e) => eprintln!("warning: {} on {}: {e}", algo.name(), path.display()),
    }
    row.time_ms = ms(timer.elapsed());
    row
}

/// Runs every algorithm on every instance of `files`. Unreadable instances
/// produce rows with empty metrics.
pub fn run_experiment(
    files: &[PathBuf],
    algos: &[Algo],
    opts: &SolveOptions,
    workers: usize,
) -> Result<Vec<Row>> {
    let instances: Vec<Result<Instance>> = files.iter().map(Instance::load).collect();
    for (path, inst) in files.iter().zip(&instances) {
        if let Err(e) = inst {
            eprintln!("warning: skipping {}: {e}", path.display());
        }
    }
    let cells: Vec<(usize, Algo)> = (0..files.len())
        .flat_map(|i| algos.iter().map(move |&a| (i, a)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, a)| run_cell(&files[i], &instances[i], a, opts))
            .collect()
    }))
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    })
}

pub fn summarize(rows: &[Row]) -> Vec<SummaryRow> {
    let mut best: BTreeMap<&str, u64> = BTreeMap::new();
    for r in rows {
        if let Some(w) = r.w {
            let e = best.entry(r.instance.as_str()).or_insert(w);
            *e = (*e).min(w);
        }
    }
    type Key = (usize, usize, usize, usize, String);
    let mut groups: BTreeMap<Key, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        if let (Some(nn), Some(n), Some(m1), Some(m0), Some(_)) = (r.n_jobs, r.n, r.m1, r.m0, r.w) {
            groups.entry((nn, n, m1, m0, r.algo.clone())).or_default().push(r);
        }
    }
    groups
        .into_iter()
        .map(|((n_jobs, n, m1, m0, algo), rs)| {
            let times: Vec<f64> = rs.iter().map(|r| r.time_ms).collect();
            let mut deltas = Vec::new();
            let mut undefined = 0;
            let (mut sum_best, mut sum_obj) = (0u64, 0u64);
            for r in &rs {
                let w = r.w.expect("grouped rows have W");
                let b = best[r.instance.as_str()];
                sum_best += b;
                sum_obj += w;
                match delta(b, w) {
                    Some(d) => deltas.push(d),
                    None => undefined += 1,
                }
            }
            let avg = (!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / deltas.len() as f64);
            SummaryRow {
                n_jobs,
                n,
                m1,
                m0,
                algo,
                instances: rs.len(),
                t_avg_ms: times.iter().sum::<f64>() / times.len() as f64,
                t_max_ms: times.iter().copied().fold(0.0, f64::max),
                delta_avg_vs_run_best: avg,
                delta_med_vs_run_best: median(&mut deltas),
                delta_sigma_vs_run_best: delta_sigma(sum_best, sum_obj),
                sum_obj,
                undefined_deltas: undefined,
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// Path of the summary written next to `out`: `results.csv` becomes
/// `results.summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.summary.csv"))
}
