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

//! Heuristics for the optimistic bilevel problem in which a leader selects
//! `n` of `N` jobs to minimize the weighted number of tardy jobs and a
//! follower schedules the selection on uniform parallel machines to minimize
//! total completion time.
//!
//! Every solution produced here is optimal for the follower: schedules are
//! kept inside the block structure of [`follower`], and the heuristics search
//! over leader selections and within-block permutations.
//!
//! - [`localsearch`]: follower neighborhoods, the leader swap neighborhood,
//!   and the `LS_a` / `LS_s` / `LS_fa` drivers.
//! - [`rbs`]: recovering beam search over simultaneous select/place decisions.
//! - [`msls`]: multi-start local search seeded by the beam search.
//! - [`params`] and [`tuner`]: fitted parameter formulas and their tuning
//!   objective.
//! - [`bench`]: instance generator, experiment runner, and reports.

pub mod bench;
pub mod budget;
pub mod error;
pub mod fixtures;
pub mod follower;
pub mod hungarian;
pub mod localsearch;
pub mod model;
pub mod msls;
pub mod params;
pub mod rbs;
pub mod tuner;

pub use budget::{Budget, Meter};
pub use error::{Error, Result};
pub use follower::{compute_blocks, BlockSchedule, BlockStructure};
pub use model::{evaluate, validate_feasible, Instance, JobIdx, MachineConfig, Objectives, Solution};
