//! The fair-coin interval sampler.
//!
//! The machine reads coins `r1 r2 ...` one at a time. After `n` coins the
//! binary decimal `.r1...rn...` is known to lie in the dyadic interval
//! `[x, x + 2^-n]`. Target cells are `[s0, s1]` and `(s_k, s_{k+1}]` for
//! `k >= 1`. Up to a measure-zero set of coin strings, the decimal lies in
//! cell `k` for every continuation exactly when `s_k <= x` and
//! `x + 2^-n <= s_{k+1}`, so the machine outputs `a_k` at the first depth
//! where that holds. Each cell boundary straddles at most two intervals per
//! depth, which bounds the undecided mass after `n` coins by
//! `2 (N + 1) 2^-n`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{Budgets, Machine, RunTrace, StaticMetrics};
use crate::bits::Action;
use crate::coins::{enumerate, CoinSource, Interrupt};
use crate::error::Error;
use crate::rational::{serde_q_vec, Q};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct SamplerRaw {
    id: String,
    #[serde(with = "serde_q_vec")]
    cumulative: Vec<Q>,
    actions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SamplerRaw", into = "SamplerRaw")]
pub struct IntervalSampler {
    pub id: String,
    cumulative: Vec<Q>,
    actions: Vec<String>,
}

impl TryFrom<SamplerRaw> for IntervalSampler {
    type Error = Error;

    fn try_from(raw: SamplerRaw) -> Result<Self, Error> {
        IntervalSampler::new(raw.id, raw.cumulative, raw.actions)
    }
}

impl From<IntervalSampler> for SamplerRaw {
    fn from(s: IntervalSampler) -> Self {
        SamplerRaw {
            id: s.id,
            cumulative: s.cumulative,
            actions: s.actions,
        }
    }
}

/// Exact output distribution of a sampler under a coin budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplerStats {
    /// Decided probability per action, in action order.
    pub mass: Vec<Q>,
    /// Probability of exhausting the coin budget (output BOT).
    pub undecided: Q,
    pub expected_bits: Q,
}

impl IntervalSampler {
    pub fn new(id: impl Into<String>, cumulative: Vec<Q>, actions: Vec<String>) -> Result<Self, Error> {
        if actions.is_empty() || cumulative.len() != actions.len() + 1 {
            return Err(Error::Definition(format!(
                "{} cumulative points for {} actions",
                cumulative.len(),
                actions.len()
            )));
        }
        if !cumulative[0].is_zero() || !cumulative[actions.len()].is_one() {
            return Err(Error::Definition("cumulative points must start at 0 and end at 1".into()));
        }
        if (1..actions.len()).any(|i| actions[..i].contains(&actions[i])) {
            return Err(Error::Definition("sampler actions must be distinct".into()));
        }
        if cumulative.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Definition("cumulative points must be nondecreasing".into()));
        }
        Ok(IntervalSampler {
            id: id.into(),
            cumulative,
            actions,
        })
    }

    /// Builds the cumulative points from per-action probabilities.
    pub fn from_probabilities(id: impl Into<String>, probs: &[Q], actions: Vec<String>) -> Result<Self, Error> {
        let mut cumulative = vec![Q::zero()];
        for p in probs {
            let next = cumulative.last().expect("nonempty") + p;
            cumulative.push(next);
        }
        Self::new(id, cumulative, actions)
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    fn cell_containing(&self, lo: &Q, width: &Q) -> Option<usize> {
        let hi = lo + width;
        self.cumulative
            .windows(2)
            .position(|w| w[0] < w[1] && w[0] <= *lo && hi <= w[1])
    }

    pub fn is_deterministic(&self) -> bool {
        self.cell_containing(&Q::zero(), &Q::one()).is_some()
    }

    pub fn metrics(&self) -> StaticMetrics {
        StaticMetrics {
            state_count: self.actions.len() as u64,
            description_size: self.cumulative.len() as u64,
            randomized: !self.is_deterministic(),
        }
    }

    /// One step per coin read.
    pub(crate) fn execute(&self, coins: &mut dyn CoinSource, budgets: Budgets) -> Result<RunTrace, Interrupt> {
        let mut lo = Q::zero();
        let mut width = Q::one();
        let mut bits = 0u64;
        loop {
            if let Some(k) = self.cell_containing(&lo, &width) {
                return Ok(RunTrace::halted(self.actions[k].clone(), bits, bits, 0));
            }
            if bits >= budgets.coins || bits >= budgets.steps {
                return Ok(RunTrace::exhausted(bits, bits, 0, 0));
            }
            let bit = coins.draw(&[1, 1], 1)?;
            bits += 1;
            width /= Q::from_integer(2.into());
            if bit == 1 {
                lo += &width;
            }
        }
    }

    /// Exact per-action mass, undecided mass and expected coins at `coin_budget`.
    pub fn stats(&self, coin_budget: u64) -> Result<SamplerStats, Error> {
        let budgets = Budgets::new(coin_budget, coin_budget);
        let leaves = enumerate(1, |c| self.execute(&mut c[0], budgets))?;
        let mut mass = vec![Q::zero(); self.actions.len()];
        let mut undecided = Q::zero();
        let mut expected_bits = Q::zero();
        for leaf in leaves {
            expected_bits += &leaf.weight * Q::from_integer(leaf.value.coin_bits.into());
            match &leaf.value.output {
                Action::Bot => undecided += &leaf.weight,
                Action::Word(w) => {
                    let k = self.actions.iter().position(|a| a == w).expect("sampler emits its own actions");
                    mass[k] += &leaf.weight;
                }
            }
        }
        Ok(SamplerStats {
            mass,
            undecided,
            expected_bits,
        })
    }
}

/// Builds the sampler machine and its exact statistics at `coin_budget`.
pub fn build_interval_sampler(
    id: impl Into<String>,
    cumulative: Vec<Q>,
    actions: Vec<String>,
    coin_budget: u64,
) -> Result<(Machine, SamplerStats), Error> {
    let sampler = IntervalSampler::new(id, cumulative, actions)?;
    let stats = sampler.stats(coin_budget)?;
    Ok((Machine::Sampler(sampler), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn degenerate_target_needs_no_coins() {
        let (m, stats) = build_interval_sampler("s", vec![q(0, 1), q(0, 1), q(1, 1)], labels(2), 8).unwrap();
        assert!(m.is_deterministic());
        assert_eq!(stats.mass, vec![q(0, 1), q(1, 1)]);
        assert_eq!(stats.expected_bits, q(0, 1));
    }

    #[test]
    fn dyadic_target_is_exact_at_its_depth() {
        let (_, stats) = build_interval_sampler("s", vec![q(0, 1), q(1, 4), q(1, 1)], labels(2), 2).unwrap();
        assert_eq!(stats.mass, vec![q(1, 4), q(3, 4)]);
        assert_eq!(stats.undecided, q(0, 1));
        // first coin 1 decides action 1 (1/2), otherwise a second coin decides: 1/2*1 + 1/2*2
        assert_eq!(stats.expected_bits, q(3, 2));
    }

    #[test]
    fn rejects_malformed_cumulative() {
        assert!(IntervalSampler::new("s", vec![q(0, 1), q(1, 2)], labels(1)).is_err());
        assert!(IntervalSampler::new("s", vec![q(0, 1), q(2, 3), q(1, 2), q(1, 1)], labels(3)).is_err());
        assert!(IntervalSampler::new("s", vec![q(1, 8), q(1, 1)], labels(1)).is_err());
    }
}
