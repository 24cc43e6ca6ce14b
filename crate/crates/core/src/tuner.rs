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

//! Parameter tuning. A parameter vector is scored by the summed, normalized
//! improvement of its heuristic over a baseline vector on a training set, and
//! a black-box maximizer searches the box of admissible vectors.

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::model::Instance;
use crate::msls::{run_msls, MslsConfig};
use crate::params::{AlphaFormula, NormBounds, WidthFormula};
use crate::rbs::{run_rbs, RbsConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Real { lo: f64, hi: f64 },
    Int { lo: i64, hi: i64 },
}

impl Domain {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Real { lo, hi } => (lo, hi),
            Domain::Int { lo, hi } => (lo as f64, hi as f64),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Real { lo, hi } => x >= lo && x <= hi,
            Domain::Int { lo, hi } => x.fract() == 0.0 && x >= lo as f64 && x <= hi as f64,
        }
    }

    /// Maps `u` in `[0, 1]` into the domain, rounding integer components.
    pub fn from_unit(&self, u: f64) -> f64 {
        let (lo, hi) = self.bounds();
        let x = lo + u.clamp(0.0, 1.0) * (hi - lo);
        match self {
            Domain::Real { .. } => x.clamp(lo, hi),
            Domain::Int { .. } => x.round().clamp(lo, hi),
        }
    }

    pub fn to_unit(&self, x: f64) -> f64 {
        let (lo, hi) = self.bounds();
        if hi > lo {
            (x - lo) / (hi - lo)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpace {
    pub domains: Vec<Domain>,
}

impl ParamSpace {
    pub fn new(domains: Vec<Domain>) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::Config("parameter space has no dimensions".into()));
        }
        for d in &domains {
            let ok = match *d {
                Domain::Real { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
                Domain::Int { lo, hi } => lo <= hi,
            };
            if !ok {
                return Err(Error::Config(format!("empty domain {d:?}")));
            }
        }
        Ok(ParamSpace { domains })
    }

    /// Four width coefficients, then four `alpha` coefficients.
    pub fn rbs() -> Self {
        let r = |lo, hi| Domain::Real { lo, hi };
        let mut d = vec![r(-4.61, 4.61), r(-4.61, 4.61), r(-10.0, 10.0)];
        d.push(Domain::Int { lo: 0, hi: 100 });
        d.extend(std::iter::repeat_n(r(-1.0, 1.0), 4));
        ParamSpace { domains: d }
    }

    /// Four width coefficients, the seed count, and the local search share.
    pub fn msls() -> Self {
        let r = |lo, hi| Domain::Real { lo, hi };
        ParamSpace {
            domains: vec![
                r(-4.61, 4.61),
                r(-4.61, 4.61),
                r(-10.0, 10.0),
                Domain::Int { lo: 0, hi: 100 },
                Domain::Int { lo: 1, hi: 2000 },
                r(0.01, 0.98),
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.domains.len()
    }

    pub fn contains(&self, beta: &[f64]) -> bool {
        beta.len() == self.dim() && self.domains.iter().zip(beta).all(|(d, &x)| d.contains(x))
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        self.domains.iter().zip(u).map(|(d, &x)| d.from_unit(x)).collect()
    }

    pub fn to_unit(&self, beta: &[f64]) -> Vec<f64> {
        self.domains.iter().zip(beta).map(|(d, &x)| d.to_unit(x)).collect()
    }
}

pub const RBS_BASELINE: [f64; 8] = [0.0, -4.61, 0.0, 1.0, 0.0, 0.0, 0.0, 0.5];
pub const MSLS_BASELINE: [f64; 6] = [0.0, -4.61, 0.0, 5.0, 1000.0, 0.5];

/// Runs a parameterized heuristic and reports its weighted tardiness.
pub trait Runner: Sync {
    fn run(&self, beta: &[f64], instance: &Instance) -> Result<u64>;
}

fn tilde(instance: &Instance, norm: &NormBounds) -> Result<(f64, f64, f64)> {
    let f = |x: u64, lo: u64, hi: u64| -> Result<f64> {
        let r = crate::params::normalize(x, lo, hi)?;
        Ok(*r.numer() as f64 / *r.denom() as f64)
    };
    Ok((
        f(instance.job_count() as u64, norm.n_jobs_min, norm.n_jobs_max)?,
        f(instance.n as u64, norm.n_sel_min, norm.n_sel_max)?,
        f(instance.machine_count() as u64, norm.m_min, norm.m_max)?,
    ))
}

fn width(beta: &[f64], nt: f64, mt: f64) -> usize {
    WidthFormula {
        b1: beta[0],
        b2: beta[1],
        b3: beta[2],
        b4: beta[3],
    }
    .eval(nt, mt)
}

#[derive(Debug, Clone)]
pub struct RbsRunner {
    pub budget: Budget,
    pub norm: NormBounds,
}

impl Runner for RbsRunner {
    fn run(&self, beta: &[f64], instance: &Instance) -> Result<u64> {
        let (nt, st, mt) = tilde(instance, &self.norm)?;
        let alpha = AlphaFormula {
            a5: beta[4],
            a6: beta[5],
            a7: beta[6],
            a8: beta[7],
        }
        .eval(nt, st, mt);
        let cfg = RbsConfig::new(width(beta, nt, mt), alpha).with_budget(self.budget);
        Ok(run_rbs(instance, &cfg)?.objectives.weighted_tardy)
    }
}

#[derive(Debug, Clone)]
pub struct MslsRunner {
    pub budget: Budget,
    pub norm: NormBounds,
}

impl Runner for MslsRunner {
    fn run(&self, beta: &[f64], instance: &Instance) -> Result<u64> {
        let (nt, _, mt) = tilde(instance, &self.norm)?;
        let cfg = MslsConfig::new(width(beta, nt, mt), beta[4] as usize, beta[5])
            .with_budget(self.budget);
        Ok(run_msls(instance, &cfg)?.objectives.weighted_tardy)
    }
}

#[derive(Debug, Clone)]
pub struct TrainRecord {
    pub id: String,
    pub instance: Instance,
    pub ub_baseline: u64,
    pub w_cap: u64,
}

/// Scores every instance with the baseline vector.
pub fn build_database(
    instances: Vec<(String, Instance)>,
    baseline: &[f64],
    runner: &dyn Runner,
) -> Result<Vec<TrainRecord>> {
    instances
        .into_par_iter()
        .map(|(id, instance)| {
            let ub_baseline = runner.run(baseline, &instance)?;
            let w_cap = instance.weight_cap();
            Ok(TrainRecord {
                id,
                instance,
                ub_baseline,
                w_cap,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub value: Ratio<i128>,
    /// Records whose run failed and were scored as zero.
    pub failed: Vec<String>,
}

impl Score {
    pub fn to_f64(&self) -> f64 {
        *self.value.numer() as f64 / *self.value.denom() as f64
    }
}

/// `sum over records of (UB_baseline - UB(beta)) / W_cap`, exactly.
pub fn objective(beta: &[f64], db: &[TrainRecord], runner: &dyn Runner) -> Score {
    let terms: Vec<std::result::Result<Ratio<i128>, String>> = db
        .par_iter()
        .map(|r| match runner.run(beta, &r.instance) {
            Ok(ub) => Ok(Ratio::new(
                r.ub_baseline as i128 - ub as i128,
                r.w_cap.max(1) as i128,
            )),
            Err(_) => Err(r.id.clone()),
        })
        .collect();
    let mut value = Ratio::from_integer(0);
    let mut failed = Vec::new();
    for t in terms {
        match t {
            Ok(v) => value += v,
            Err(id) => failed.push(id),
        }
    }
    Score { value, failed }
}

/// Propose/observe loop driver.
pub trait Maximizer {
    fn propose(&mut self, space: &ParamSpace, history: &[(Vec<f64>, f64)]) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct RandomSearch {
    rng: ChaCha8Rng,
}

impl RandomSearch {
    pub fn new(seed: u64) -> Self {
        RandomSearch {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Maximizer for RandomSearch {
    fn propose(&mut self, space: &ParamSpace, _: &[(Vec<f64>, f64)]) -> Vec<f64> {
        let u: Vec<f64> = (0..space.dim()).map(|_| self.rng.gen::<f64>()).collect();
        space.from_unit(&u)
    }
}

/// Gaussian-process upper confidence bound with a squared-exponential kernel
/// on unit-cube coordinates. The acquisition is maximized over random
/// candidates; integer components are rounded when a candidate is mapped
/// back into the domain, so the surrogate only ever sees feasible points.
#[derive(Debug, Clone)]
pub struct GpUcb {
    rng: ChaCha8Rng,
    pub kappa: f64,
    pub length_scale: f64,
    pub noise: f64,
    pub candidates: usize,
    pub initial_random: usize,
}

impl GpUcb {
    pub fn new(seed: u64) -> Self {
        GpUcb {
            rng: ChaCha8Rng::seed_from_u64(seed),
            kappa: 2.0,
            length_scale: 0.3,
            noise: 1e-6,
            candidates: 512,
            initial_random: 4,
        }
    }

    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (-0.5 * d2 / (self.length_scale * self.length_scale)).exp()
    }
}

impl Maximizer for GpUcb {
    fn propose(&mut self, space: &ParamSpace, history: &[(Vec<f64>, f64)]) -> Vec<f64> {
        let dim = space.dim();
        let random_point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let u: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            space.from_unit(&u)
        };
        if history.len() < self.initial_random {
            return random_point(&mut self.rng);
        }
        let xs: Vec<Vec<f64>> = history.iter().map(|(b, _)| space.to_unit(b)).collect();
        let ys: Vec<f64> = history.iter().map(|(_, s)| *s).collect();
        let k = xs.len();
        let mean = ys.iter().sum::<f64>() / k as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / k as f64;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        let y = DVector::from_iterator(k, ys.iter().map(|v| (v - mean) / sd));
        let gram = DMatrix::from_fn(k, k, |i, j| {
            self.kernel(&xs[i], &xs[j]) + if i == j { self.noise } else { 0.0 }
        });
        let Some(chol) = gram.cholesky() else {
            return random_point(&mut self.rng);
        };
        let weights = chol.solve(&y);

        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..self.candidates {
            let beta = random_point(&mut self.rng);
            let u = space.to_unit(&beta);
            let kstar = DVector::from_iterator(k, xs.iter().map(|x| self.kernel(x, &u)));
            let mu = kstar.dot(&weights);
            let v = chol.l().solve_lower_triangular(&kstar).unwrap_or_else(|| kstar.clone());
            let s2 = (1.0 - v.dot(&v)).max(0.0);
            let ucb = mu + self.kappa * s2.sqrt();
            if best.as_ref().is_none_or(|(b, _)| ucb > *b) {
                best = Some((ucb, beta));
            }
        }
        best.map(|(_, b)| b).unwrap_or_else(|| random_point(&mut self.rng))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub beta: Vec<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneReport {
    pub best_beta: Vec<f64>,
    pub best_score: f64,
    pub trace: Vec<TracePoint>,
    pub evals: usize,
    pub seed: u64,
}

/// Runs `evals` objective evaluations. `baseline`, when given, is the first
/// point evaluated. The best point wins ties by earlier evaluation.
pub fn tune(
    space: &ParamSpace,
    maximizer: &mut dyn Maximizer,
    evals: usize,
    db: &[TrainRecord],
    runner: &dyn Runner,
    baseline: Option<&[f64]>,
    seed: u64,
) -> Result<TuneReport> {
    if evals == 0 {
        return Err(Error::Config("at least one evaluation is required".into()));
    }
    if let Some(b) = baseline {
        if !space.contains(b) {
            return Err(Error::Config("baseline lies outside the parameter space".into()));
        }
    }
    let mut history: Vec<(Vec<f64>, f64)> = Vec::with_capacity(evals);
    let mut best: Option<(Ratio<i128>, Vec<f64>)> = None;
    for i in 0..evals {
        let beta = match (i, baseline) {
            (0, Some(b)) => b.to_vec(),
            _ => maximizer.propose(space, &history),
        };
        debug_assert!(space.contains(&beta));
        let score = objective(&beta, db, runner);
        if best.as_ref().is_none_or(|(b, _)| score.value > *b) {
            best = Some((score.value, beta.clone()));
        }
        history.push((beta, score.to_f64()));
    }
    let (value, best_beta) = best.expect("at least one evaluation");
    Ok(TuneReport {
        best_beta,
        best_score: *value.numer() as f64 / *value.denom() as f64,
        trace: history
            .into_iter()
            .map(|(beta, score)| TracePoint { beta, score })
            .collect(),
        evals,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::table1;

    struct Table(u64);

    impl Runner for Table {
        fn run(&self, beta: &[f64], _: &Instance) -> Result<u64> {
            if beta[0] < 0.0 {
                return Err(Error::Argument("negative".into()));
            }
            Ok(self.0.saturating_sub(beta[0] as u64))
        }
    }

    fn record(id: &str, ub: u64, cap: u64) -> TrainRecord {
        TrainRecord {
            id: id.into(),
            instance: table1(),
            ub_baseline: ub,
            w_cap: cap,
        }
    }

    #[test]
    fn one_term_arithmetic() {
        let db = vec![record("a", 10, 20)];
        let s = objective(&[2.0], &db, &Table(10));
        assert_eq!(s.value, Ratio::new(1, 10));
        assert!(s.failed.is_empty());
    }

    #[test]
    fn failures_score_zero() {
        let db = vec![record("a", 10, 20), record("b", 10, 20)];
        let s = objective(&[-1.0], &db, &Table(10));
        assert_eq!(s.value, Ratio::from_integer(0));
        assert_eq!(s.failed, vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn spaces_accept_baselines() {
        assert!(ParamSpace::rbs().contains(&RBS_BASELINE));
        assert!(ParamSpace::msls().contains(&MSLS_BASELINE));
        assert!(!ParamSpace::msls().contains(&[0.0, 0.0, 0.0, 5.5, 10.0, 0.5]));
        assert!(ParamSpace::new(vec![]).is_err());
        assert!(ParamSpace::new(vec![Domain::Int { lo: 3, hi: 1 }]).is_err());
    }

    #[test]
    fn baseline_width_and_alpha() {
        let (nt, st, mt) = tilde(&table1(), &NormBounds::default()).unwrap();
        assert_eq!(width(&RBS_BASELINE, nt, mt), 1);
        assert_eq!(width(&MSLS_BASELINE, nt, mt), 5);
        let a = AlphaFormula {
            a5: 0.0,
            a6: 0.0,
            a7: 0.0,
            a8: 0.5,
        };
        assert_eq!(a.eval(nt, st, mt), 0.5);
    }

    #[test]
    fn proposals_stay_in_domain() {
        for space in [ParamSpace::rbs(), ParamSpace::msls()] {
            let mut rs = RandomSearch::new(3);
            let mut gp = GpUcb::new(3);
            let mut hist = Vec::new();
            for i in 0..12 {
                let a = rs.propose(&space, &hist);
                let b = gp.propose(&space, &hist);
                assert!(space.contains(&a), "{a:?}");
                assert!(space.contains(&b), "{b:?}");
                hist.push((b, (i % 3) as f64));
            }
        }
    }
}
