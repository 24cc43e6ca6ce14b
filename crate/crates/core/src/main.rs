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

use std::path::PathBuf;

use anyhow::{bail, Context};
use bilevel_sched::bench::{
    full_grid, generate_suite, run_experiment, solve, suite_files, summarize, summary_path,
    worker_count, write_csv, Algo, GenSpec, SolveOptions, GRID,
};
use bilevel_sched::params::NormBounds;
use bilevel_sched::tuner::{
    build_database, tune, GpUcb, Maximizer, MslsRunner, ParamSpace, RandomSearch, RbsRunner,
    Runner, MSLS_BASELINE, RBS_BASELINE,
};
use bilevel_sched::{Budget, Instance};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bilevel-sched", version, about = "Bilevel job selection and scheduling on uniform machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instances; omitted tf/rdd sweep the 0.2..1.0 grid.
    Gen {
        #[arg(long = "N")]
        n_jobs: usize,
        #[arg(long = "n")]
        n: usize,
        #[arg(long)]
        m1: usize,
        #[arg(long)]
        m0: usize,
        #[arg(long = "V1", default_value_t = 2)]
        v1: u64,
        #[arg(long = "V0", default_value_t = 1)]
        v0: u64,
        #[arg(long)]
        tf: Option<f64>,
        #[arg(long)]
        rdd: Option<f64>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance file.
    Solve {
        #[arg(long)]
        algo: String,
        #[arg(long)]
        instance: PathBuf,
        /// Wall-clock budget in seconds.
        #[arg(long, default_value_t = 60.0)]
        budget: f64,
        #[arg(long)]
        beam_width: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        ls_fraction: Option<f64>,
        /// Deterministic step budget; replaces --budget.
        #[arg(long)]
        step_budget: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Run algorithms over a directory of instances and write CSV reports.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value = "lsa,lss,lsfa,rbs,msls")]
        algos: String,
        #[arg(long, default_value_t = 60.0)]
        budget: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        step_budget: Option<u64>,
    },
    /// Tune formula coefficients against the baseline on a training set.
    Tune {
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        db: PathBuf,
        #[arg(long, default_value_t = 53)]
        evals: usize,
        #[arg(long, value_enum, default_value_t = MaximizerKind::GpUcb)]
        maximizer: MaximizerKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Per-run step budget, which keeps scores reproducible.
        #[arg(long, default_value_t = 2000)]
        step_budget: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Rbs,
    Msls,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaximizerKind {
    Random,
    GpUcb,
}

fn budget_of(secs: f64, steps: Option<u64>) -> anyhow::Result<Budget> {
    if let Some(s) = steps {
        return Ok(Budget::Steps(s));
    }
    if !(secs.is_finite() && secs >= 0.0) {
        bail!("budget must be a non-negative number of seconds");
    }
    Ok(Budget::from_secs_f64(secs))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Gen {
            n_jobs,
            n,
            m1,
            m0,
            v1,
            v0,
            tf,
            rdd,
            count,
            seed,
            out,
        } => {
            let classes: Vec<(f64, f64)> = match (tf, rdd) {
                (Some(t), Some(r)) => vec![(t, r)],
                (Some(t), None) => GRID.iter().map(|&r| (t, r)).collect(),
                (None, Some(r)) => GRID.iter().map(|&t| (t, r)).collect(),
                (None, None) => full_grid(),
            };
            if count == 0 {
                bail!("--count must be at least 1");
            }
            let spec = GenSpec {
                n_jobs,
                n,
                m1,
                m0,
                v1,
                v0,
                tf: 0.0,
                rdd: 0.0,
                count,
                seed,
            };
            let files = generate_suite(&spec, &classes, &out)?;
            println!("wrote {} instances to {}", files.len(), out.display());
        }
        Command::Solve {
            algo,
            instance,
            budget,
            beam_width,
            alpha,
            seeds,
            ls_fraction,
            step_budget,
            json,
        } => {
            let algo = Algo::parse(&algo)?;
            let inst = Instance::load(&instance)
                .with_context(|| format!("loading {}", instance.display()))?;
            let opts = SolveOptions {
                budget: Some(budget_of(budget, step_budget)?),
                beam_width,
                alpha,
                seeds,
                ls_fraction,
            };
            let rep = solve(&inst, algo, &opts)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rep)?);
            } else {
                println!("algo        {}", rep.algo);
                println!("W           {}", rep.weighted_tardy);
                println!("sum Cj      {}", rep.sum_cj_raw);
                println!("time ms     {:.3}", rep.time_ms);
                println!("budget hit  {}", rep.budget_hit);
                for (i, seq) in rep.sequences.iter().enumerate() {
                    let ids: Vec<String> = seq.iter().map(|j| format!("J{j}")).collect();
                    println!("M{:<10} {}", i + 1, ids.join(" "));
                }
            }
        }
        Command::Bench {
            suite,
            algos,
            budget,
            out,
            workers,
            step_budget,
        } => {
            let algos = Algo::parse_list(&algos)?;
            if algos.is_empty() {
                bail!("--algos is empty");
            }
            let files = suite_files(&suite)?;
            if files.is_empty() {
                bail!("no instance files in {}", suite.display());
            }
            let opts = SolveOptions {
                budget: Some(budget_of(budget, step_budget)?),
                ..SolveOptions::default()
            };
            let rows = run_experiment(&files, &algos, &opts, worker_count(workers))?;
            write_csv(&out, &rows)?;
            let summary = summarize(&rows);
            let spath = summary_path(&out);
            write_csv(&spath, &summary)?;
            println!(
                "{} rows to {}, {} groups to {}",
                rows.len(),
                out.display(),
                summary.len(),
                spath.display()
            );
        }
        Command::Tune {
            target,
            db,
            evals,
            maximizer,
            seed,
            out,
            step_budget,
        } => {
            let files = suite_files(&db)?;
            if files.is_empty() {
                bail!("no instance files in {}", db.display());
            }
            let mut instances = Vec::new();
            for f in &files {
                let id = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                instances.push((id, Instance::load(f)?));
            }
            let budget = Budget::Steps(step_budget);
            let norm = NormBounds::default();
            let (space, baseline, runner): (ParamSpace, &[f64], Box<dyn Runner>) = match target {
                Target::Rbs => (ParamSpace::rbs(), &RBS_BASELINE, Box::new(RbsRunner { budget, norm })),
                Target::Msls => (
                    ParamSpace::msls(),
                    &MSLS_BASELINE,
                    Box::new(MslsRunner { budget, norm }),
                ),
            };
            let mut m: Box<dyn Maximizer> = match maximizer {
                MaximizerKind::Random => Box::new(RandomSearch::new(seed)),
                MaximizerKind::GpUcb => Box::new(GpUcb::new(seed)),
            };
            let records = build_database(instances, baseline, runner.as_ref())?;
            let report = tune(
                &space,
                m.as_mut(),
                evals,
                &records,
                runner.as_ref(),
                Some(baseline),
                seed,
            )?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            println!("best score {} after {} evals", report.best_score, report.evals);
        }
    }
    Ok(())
}
