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

//! Instance-dependent defaults for the beam width, `alpha`, and the MSLS
//! seed settings, from fitted closed forms over normalized `(N, n, m)`.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct NormBounds {
    pub n_jobs_min: u64,
    pub n_jobs_max: u64,
    pub n_sel_min: u64,
    pub n_sel_max: u64,
    pub m_min: u64,
    pub m_max: u64,
}

impl Default for NormBounds {
    fn default() -> Self {
        NormBounds {
            n_jobs_min: 40,
            n_jobs_max: 100,
            n_sel_min: 10,
            n_sel_max: 75,
            m_min: 2,
            m_max: 10,
        }
    }
}

impl NormBounds {
    pub fn validate(&self) -> Result<()> {
        for (name, lo, hi) in [
            ("N", self.n_jobs_min, self.n_jobs_max),
            ("n", self.n_sel_min, self.n_sel_max),
            ("m", self.m_min, self.m_max),
        ] {
            if lo >= hi {
                return Err(Error::Config(format!("bounds for {name} need min < max")));
            }
        }
        Ok(())
    }
}

/// `(x - lo) / (hi - lo)` with `x` clamped into `[lo, hi]` first.
pub fn normalize(x: u64, lo: u64, hi: u64) -> Result<Ratio<i64>> {
    if lo >= hi {
        return Err(Error::Config(format!("normalization needs lo < hi, got {lo} >= {hi}")));
    }
    let x = x.clamp(lo, hi);
    Ok(Ratio::new((x - lo) as i64, (hi - lo) as i64))
}

/// `clip[1,100](floor(exp(b1 * N~ + b2) + b3 * m~) + b4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthFormula {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
}

impl WidthFormula {
    pub fn eval(&self, nt: f64, mt: f64) -> usize {
        let inner = ((self.b1 * nt + self.b2).exp() + self.b3 * mt).floor() + self.b4;
        inner.clamp(1.0, 100.0) as usize
    }
}

/// `clip[0,1](a5 * N~ + a6 * n~ + a7 * m~ + a8)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFormula {
    pub a5: f64,
    pub a6: f64,
    pub a7: f64,
    pub a8: f64,
}

impl AlphaFormula {
    pub fn eval(&self, nt: f64, st: f64, mt: f64) -> f64 {
        (self.a5 * nt + self.a6 * st + self.a7 * mt + self.a8).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamConstants {
    pub rbs_width: WidthFormula,
    pub rbs_alpha: AlphaFormula,
    pub msls_width: WidthFormula,
    pub msls_k: usize,
    pub msls_ls_fraction: f64,
    pub norm: NormBounds,
}

impl Default for ParamConstants {
    fn default() -> Self {
        ParamConstants {
            rbs_width: WidthFormula {
                b1: -1.15969,
                b2: -1.65353,
                b3: -10.0,
                b4: 5.0,
            },
            rbs_alpha: AlphaFormula {
                a5: -1.0,
                a6: -1.0,
                a7: -1.0,
                a8: 1.0,
            },
            msls_width: WidthFormula {
                b1: -1.36890,
                b2: 0.92932,
                b3: 1.38553,
                b4: 3.0,
            },
            msls_k: 1459,
            msls_ls_fraction: 0.328,
            norm: NormBounds::default(),
        }
    }
}

impl ParamConstants {
    /// Applies overrides such as `{"rbs.b1": -1.0, "msls.K": 500,
    /// "norm.N_min": 30}`.
    pub fn with_overrides(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        for (key, &v) in overrides {
            let as_count = || -> Result<u64> {
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::Config(format!("{key} must be a non-negative integer")));
                }
                Ok(v as u64)
            };
            match key.as_str() {
                "rbs.b1" => self.rbs_width.b1 = v,
                "rbs.b2" => self.rbs_width.b2 = v,
                "rbs.b3" => self.rbs_width.b3 = v,
                "rbs.b4" => self.rbs_width.b4 = v,
                "rbs.a5" => self.rbs_alpha.a5 = v,
                "rbs.a6" => self.rbs_alpha.a6 = v,
                "rbs.a7" => self.rbs_alpha.a7 = v,
                "rbs.a8" => self.rbs_alpha.a8 = v,
                "msls.b1" => self.msls_width.b1 = v,
                "msls.b2" => self.msls_width.b2 = v,
                "msls.b3" => self.msls_width.b3 = v,
                "msls.b4" => self.msls_width.b4 = v,
                "msls.K" => self.msls_k = as_count()?.max(1) as usize,
                "msls.ls_fraction" => {
                    if !(v > 0.0 && v < 1.0) {
                        return Err(Error::Config("msls.ls_fraction must lie in (0, 1)".into()));
                    }
                    self.msls_ls_fraction = v
                }
                "norm.N_min" => self.norm.n_jobs_min = as_count()?,
                "norm.N_max" => self.norm.n_jobs_max = as_count()?,
                "norm.n_min" => self.norm.n_sel_min = as_count()?,
                "norm.n_max" => self.norm.n_sel_max = as_count()?,
                "norm.m_min" => self.norm.m_min = as_count()?,
                "norm.m_max" => self.norm.m_max = as_count()?,
                _ => return Err(Error::Config(format!("unknown parameter key {key}"))),
            }
        }
        self.norm.validate()?;
        Ok(self)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
        ParamConstants::default().with_overrides(&map)
    }

    fn tilde(&self, n_jobs: u64, n_sel: u64, m: u64) -> Result<(f64, f64, f64)> {
        let b = &self.norm;
        let f = |r: Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
        Ok((
            f(normalize(n_jobs, b.n_jobs_min, b.n_jobs_max)?),
            f(normalize(n_sel, b.n_sel_min, b.n_sel_max)?),
            f(normalize(m, b.m_min, b.m_max)?),
        ))
    }

    pub fn rbs_params(&self, n_jobs: u64, n_sel: u64, m: u64) -> Result<RbsParams> {
        let (nt, st, mt) = self.tilde(n_jobs, n_sel, m)?;
        Ok(RbsParams {
            beam_width: self.rbs_width.eval(nt, mt),
            alpha: self.rbs_alpha.eval(nt, st, mt),
        })
    }

    pub fn msls_params(&self, n_jobs: u64, m: u64) -> Result<MslsParams> {
        let (nt, _, mt) = self.tilde(n_jobs, self.norm.n_sel_min, m)?;
        Ok(MslsParams {
            beam_width: self.msls_width.eval(nt, mt),
            k: self.msls_k,
            ls_fraction: self.msls_ls_fraction,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RbsParams {
    pub beam_width: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MslsParams {
    pub beam_width: usize,
    pub k: usize,
    pub ls_fraction: f64,
}

/// RBS settings from the default constants.
pub fn rbs_params(n_jobs: u64, n_sel: u64, m: u64) -> RbsParams {
    ParamConstants::default()
        .rbs_params(n_jobs, n_sel, m)
        .expect("default bounds are valid")
}

/// MSLS settings from the default constants.
pub fn msls_params(n_jobs: u64, m: u64) -> MslsParams {
    ParamConstants::default()
        .msls_params(n_jobs, m)
        .expect("default bounds are valid")
}
