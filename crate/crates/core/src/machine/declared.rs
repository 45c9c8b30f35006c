use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Budgets, RunTrace, StaticMetrics};
use crate::bits::BitString;
use crate::coins::{CoinSource, Interrupt};
use crate::error::Error;
use crate::rational::DyadicDist;

/// Stipulated complexity of a declared machine on one type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredMetrics {
    pub steps: u64,
    pub states_used: u64,
    pub randomized: bool,
}

impl DeclaredMetrics {
    pub fn new(steps: u64, states_used: u64, randomized: bool) -> Self {
        DeclaredMetrics {
            steps,
            states_used,
            randomized,
        }
    }
}

const ANY_TYPE: &str = "*";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct DeclaredRaw {
    id: String,
    behavior: BTreeMap<String, DyadicDist<String>>,
    metrics: BTreeMap<String, DeclaredMetrics>,
}

/// A machine given by its behavior table and declared metrics rather than a
/// transition table.
///
/// Per-type entries take precedence over the `"*"` entry, which covers every
/// other type. A type with neither is outside the machine's domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DeclaredRaw", into = "DeclaredRaw")]
pub struct DeclaredMachine {
    pub id: String,
    default_behavior: Option<DyadicDist<String>>,
    behavior: BTreeMap<BitString, DyadicDist<String>>,
    default_metrics: Option<DeclaredMetrics>,
    metrics: BTreeMap<BitString, DeclaredMetrics>,
}

impl TryFrom<DeclaredRaw> for DeclaredMachine {
    type Error = Error;

    fn try_from(raw: DeclaredRaw) -> Result<Self, Error> {
        let mut m = DeclaredMachine {
            id: raw.id,
            default_behavior: None,
            behavior: BTreeMap::new(),
            default_metrics: None,
            metrics: BTreeMap::new(),
        };
        for (key, dist) in raw.behavior {
            if key == ANY_TYPE {
                m.default_behavior = Some(dist);
            } else {
                m.behavior.insert(key.parse()?, dist);
            }
        }
        for (key, metrics) in raw.metrics {
            if key == ANY_TYPE {
                m.default_metrics = Some(metrics);
            } else {
                m.metrics.insert(key.parse()?, metrics);
            }
        }
        Ok(m)
    }
}

impl From<DeclaredMachine> for DeclaredRaw {
    fn from(m: DeclaredMachine) -> Self {
        let mut behavior: BTreeMap<String, _> = m.behavior.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        if let Some(d) = m.default_behavior {
            behavior.insert(ANY_TYPE.into(), d);
        }
        let mut metrics: BTreeMap<String, _> = m.metrics.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        if let Some(d) = m.default_metrics {
            metrics.insert(ANY_TYPE.into(), d);
        }
        DeclaredRaw {
            id: m.id,
            behavior,
            metrics,
        }
    }
}

impl DeclaredMachine {
    /// Same behavior and metrics on every type.
    pub fn uniform(id: impl Into<String>, behavior: DyadicDist<String>, metrics: DeclaredMetrics) -> Self {
        DeclaredMachine {
            id: id.into(),
            default_behavior: Some(behavior),
            behavior: BTreeMap::new(),
            default_metrics: Some(metrics),
            metrics: BTreeMap::new(),
        }
    }

    /// Outputs `word` on every type in one step.
    pub fn constant(id: impl Into<String>, word: impl Into<String>) -> Self {
        Self::uniform(id, DyadicDist::point(word.into()), DeclaredMetrics::new(1, 1, false))
    }

    /// A machine defined type by type.
    pub fn per_type(
        id: impl Into<String>,
        entries: impl IntoIterator<Item = (BitString, DyadicDist<String>, DeclaredMetrics)>,
    ) -> Self {
        let mut m = DeclaredMachine {
            id: id.into(),
            default_behavior: None,
            behavior: BTreeMap::new(),
            default_metrics: None,
            metrics: BTreeMap::new(),
        };
        for (t, dist, metrics) in entries {
            m.behavior.insert(t.clone(), dist);
            m.metrics.insert(t, metrics);
        }
        m
    }

    fn lookup(&self, input: &BitString) -> Result<(&DyadicDist<String>, DeclaredMetrics, bool), Error> {
        let (dist, reads_type) = match self.behavior.get(input) {
            Some(d) => (d, true),
            None => match &self.default_behavior {
                Some(d) => (d, false),
                None => return Err(Error::Domain(format!("machine {} has no behavior for type {input:?}", self.id))),
            },
        };
        let metrics = self
            .metrics
            .get(input)
            .or(self.default_metrics.as_ref())
            .copied()
            .ok_or_else(|| Error::Domain(format!("machine {} declares no metrics for type {input:?}", self.id)))?;
        Ok((dist, metrics, reads_type))
    }

    pub fn declared_metrics(&self, input: &BitString) -> Result<DeclaredMetrics, Error> {
        self.lookup(input).map(|(_, m, _)| m)
    }

    pub fn is_deterministic(&self) -> bool {
        self.default_behavior.iter().chain(self.behavior.values()).all(|d| d.is_point())
    }

    /// Echoes the declared state count (largest over types) and randomization flag.
    pub fn static_metrics(&self) -> StaticMetrics {
        let all = || self.default_metrics.iter().chain(self.metrics.values());
        StaticMetrics {
            state_count: all().map(|m| m.states_used).max().unwrap_or(0),
            description_size: (self.behavior.len() + usize::from(self.default_behavior.is_some())) as u64,
            randomized: all().any(|m| m.randomized) || !self.is_deterministic(),
        }
    }

    /// A type-specific entry counts as reading the whole type; the `"*"` entry reads nothing.
    pub(crate) fn execute(&self, input: &BitString, coins: &mut dyn CoinSource, budgets: Budgets) -> Result<RunTrace, Interrupt> {
        let (dist, metrics, reads_type) = self.lookup(input)?;
        let input_bits = if reads_type { input.len() as u64 } else { 0 };
        let bits = u64::from(dist.bits());
        if metrics.steps > budgets.steps || bits > budgets.coins {
            return Ok(RunTrace::exhausted(metrics.steps.min(budgets.steps), 0, input_bits, 0));
        }
        let choice = if dist.is_point() { 0 } else { coins.draw(&dist.numerators(), dist.bits())? };
        let coin_bits = if dist.is_point() { 0 } else { bits };
        Ok(RunTrace::halted(dist.get(choice).clone(), metrics.steps, coin_bits, input_bits))
    }
}
