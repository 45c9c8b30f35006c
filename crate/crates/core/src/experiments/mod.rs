//! Runnable scenarios, each producing a [`Report`].
//!
//! Every scenario is registered under a stable name with a parameter schema;
//! [`run_experiment`] validates `key=value` parameters against it.
//!
//! | name | parameters (defaults) |
//! |---|---|
//! | `roshambo` | `bound=8`, `detCost=1`, `randCost=2`, `coinBits=4` |
//! | `primality` | `bitLength=10`, `stepThreshold=2`, `wrongPenalty=-1000` |
//! | `frpd` | `N=10`, `delta=9/10`, `alpha=auto`, `bound=8` |
//! | `first-impressions` | `rho=7/10`, `c=1/100`, `n=20` |
//! | `tennis-prg` | `ell0=4`, `ell=8`, `generator=lfsr4`, `p0=auto` |
//! | `revelation` | `n=6`, `k=2` |

pub mod first_impressions;
pub mod frpd;
pub mod primality;
pub mod revelation;
pub mod roshambo;
pub mod tennis;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rational::{parse_q, Q};
use crate::report::Report;

pub use first_impressions::{exp_first_impressions, optimal_reading_policy, ReadingPolicy};
pub use frpd::exp_frpd;
pub use primality::exp_primality;
pub use revelation::exp_revelation;
pub use roshambo::exp_roshambo;
pub use tennis::{exp_tennis_prg, prg_max_advantage, Generator};

/// One parameter of a registered experiment.
#[derive(Clone, Copy, Debug)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
}

const fn p(name: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { name, default, help }
}

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "roshambo",
        summary: "rock-paper-scissors with costly randomization",
        params: &[
            p("bound", "8", "largest mixer denominator (rounded down to a power of two)"),
            p("detCost", "1", "complexity of a deterministic machine"),
            p("randCost", "2", "complexity of a randomized machine"),
            p("coinBits", "4", "coin budget of the budgeted-sampler variant"),
        ],
    },
    ExperimentInfo {
        name: "primality",
        summary: "prime-or-composite guessing with a costly tester",
        params: &[
            p("bitLength", "10", "bit length of the odd types"),
            p("stepThreshold", "2", "runs of at least this many steps cost 2"),
            p("wrongPenalty", "-1000", "payoff for a wrong guess"),
        ],
    },
    ExperimentInfo {
        name: "frpd",
        summary: "finitely repeated prisoner's dilemma with memory costs",
        params: &[
            p("N", "10", "number of rounds"),
            p("delta", "9/10", "discount factor"),
            p("alpha", "auto", "memory penalty; auto means 2*delta^N"),
            p("bound", "8", "largest mixer denominator (rounded down to a power of two)"),
        ],
    },
    ExperimentInfo {
        name: "first-impressions",
        summary: "optimal reading of costly binary signals",
        params: &[
            p("rho", "7/10", "signal accuracy, in (1/2, 1)"),
            p("c", "1/100", "cost per signal read"),
            p("n", "20", "number of available signals, at most 30"),
        ],
    },
    ExperimentInfo {
        name: "tennis-prg",
        summary: "next-bit prediction game against a pseudorandom generator",
        params: &[
            p("ell0", "4", "seed length, at most 16"),
            p("ell", "8", "output length"),
            p("generator", "lfsr4", "constant | identity | lfsr4"),
            p("p0", "auto", "predictor penalty; auto means epsilonStar*ell + 1"),
        ],
    },
    ExperimentInfo {
        name: "revelation",
        summary: "same-or-different types with a comparing mediator",
        params: &[
            p("n", "6", "type length, at most 8"),
            p("k", "2", "agreement bound, k + 1 < n"),
        ],
    },
];

pub fn experiment_info(name: &str) -> Option<&'static ExperimentInfo> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Parameter values after defaults are applied.
#[derive(Clone, Debug)]
pub struct Params {
    experiment: &'static str,
    values: BTreeMap<String, String>,
}

impl Params {
    /// Merges `overrides` into the experiment's defaults, rejecting unknown keys.
    pub fn new(info: &'static ExperimentInfo, overrides: &[(String, String)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            info.params.iter().map(|p| (p.name.to_string(), p.default.to_string())).collect();
        for (k, v) in overrides {
            if !values.contains_key(k) {
                return Err(Error::validation(
                    format!("--param {k}"),
                    format!("unknown parameter for {}", info.name),
                ));
            }
            values.insert(k.clone(), v.clone());
        }
        Ok(Params {
            experiment: info.name,
            values,
        })
    }

    pub fn defaults(name: &str) -> Result<Self> {
        let info = experiment_info(name).ok_or_else(|| Error::validation("experiment", format!("unknown experiment {name}")))?;
        Self::new(info, &[])
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("parameter declared in the schema")
    }

    fn bad(&self, key: &str, message: impl Into<String>) -> Error {
        Error::validation(format!("{}.{key}", self.experiment), message)
    }

    pub fn q(&self, key: &str) -> Result<Q> {
        parse_q(self.raw(key)).map_err(|e| self.bad(key, e.to_string()))
    }

    /// `None` for the literal `auto`.
    pub fn q_or_auto(&self, key: &str) -> Result<Option<Q>> {
        if self.raw(key) == "auto" {
            Ok(None)
        } else {
            self.q(key).map(Some)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.raw(key)
            .parse()
            .map_err(|_| self.bad(key, format!("expected a nonnegative integer, got {}", self.raw(key))))
    }
}

/// Runs a registered experiment.
pub fn run_experiment(name: &str, overrides: &[(String, String)]) -> Result<Report> {
    let info = experiment_info(name).ok_or_else(|| Error::validation("experiment", format!("unknown experiment {name}")))?;
    let p = Params::new(info, overrides)?;
    match name {
        "roshambo" => exp_roshambo(p.usize("bound")?, p.q("detCost")?, p.q("randCost")?, p.usize("coinBits")?),
        "primality" => exp_primality(p.usize("bitLength")?, p.usize("stepThreshold")? as u64, p.q("wrongPenalty")?),
        "frpd" => exp_frpd(p.usize("N")?, p.q("delta")?, p.q_or_auto("alpha")?, p.usize("bound")?),
        "first-impressions" => exp_first_impressions(p.q("rho")?, p.q("c")?, p.usize("n")?),
        "tennis-prg" => {
            let g: Generator = p.raw("generator").parse().map_err(|e: Error| p.bad("generator", e.to_string()))?;
            exp_tennis_prg(p.usize("ell0")?, p.usize("ell")?, g, p.q_or_auto("p0")?)
        }
        "revelation" => exp_revelation(p.usize("n")?, p.usize("k")?),
        _ => unreachable!("registry and dispatch agree"),
    }
}

/// Largest power of two not above `bound`, as an exponent.
pub(crate) fn dyadic_exponent(bound: usize) -> u32 {
    usize::BITS - 1 - bound.leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_parameters_are_rejected() {
        let err = run_experiment("primality", &[("bits".into(), "3".into())]).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
        assert!(run_experiment("nope", &[]).is_err());
    }

    #[test]
    fn exponent_rounds_down() {
        assert_eq!(dyadic_exponent(8), 3);
        assert_eq!(dyadic_exponent(9), 3);
        assert_eq!(dyadic_exponent(2), 1);
    }
}
