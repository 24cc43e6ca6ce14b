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

//! Small reference instances.

use crate::model::{Instance, MachineConfig};

/// The nine-job instance on two speed-2 and two speed-1 machines, with all
/// nine jobs to be selected.
pub fn table1() -> Instance {
    let p = [2, 3, 4, 5, 7, 8, 11, 12, 13];
    let d = [5, 1, 3, 6, 4, 10, 9, 13, 8];
    let w = [1, 3, 1, 1, 2, 3, 2, 2, 1];
    let jobs: Vec<_> = (0..9).map(|k| (k as u32 + 1, p[k], w[k], d[k])).collect();
    Instance::from_raw(9, MachineConfig::standard(2, 2), &jobs, None)
        .expect("reference instance is valid")
}
