use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Budgets, RunTrace, StaticMetrics};
use crate::coins::{CoinSource, Interrupt};
use crate::error::Error;
use crate::rational::{Dyadic, DyadicDist};

/// Cooperate or defect. Encoded on the wire as `"0"` and `"1"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    C,
    D,
}

impl Move {
    pub const ALL: [Move; 2] = [Move::C, Move::D];

    pub fn bit(self) -> &'static str {
        match self {
            Move::C => "0",
            Move::D => "1",
        }
    }

    pub fn from_bit(s: &str) -> Option<Move> {
        match s {
            "0" => Some(Move::C),
            "1" => Some(Move::D),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Move::C => "C",
            Move::D => "D",
        }
    }

    pub fn from_label(s: &str) -> Option<Move> {
        match s {
            "C" => Some(Move::C),
            "D" => Some(Move::D),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

type Transition = DyadicDist<(Move, usize)>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct StepRow {
    #[serde(rename = "C")]
    on_c: Transition,
    #[serde(rename = "D")]
    on_d: Transition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct TransducerRaw {
    id: String,
    states: usize,
    start: usize,
    first: Transition,
    step: Vec<StepRow>,
}

/// A finite reactive strategy over the observation alphabet `{C, D}`.
///
/// The first move is drawn from `first`; afterwards each move is drawn from
/// `step[state][observation]`, where the observation is the opponent's
/// previous move.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TransducerRaw", into = "TransducerRaw")]
pub struct Transducer {
    pub id: String,
    states: usize,
    start: usize,
    first: Transition,
    step: Vec<[Transition; 2]>,
}

impl TryFrom<TransducerRaw> for Transducer {
    type Error = Error;

    fn try_from(raw: TransducerRaw) -> Result<Self, Error> {
        Transducer::new(
            raw.id,
            raw.states,
            raw.start,
            raw.first,
            raw.step.into_iter().map(|r| [r.on_c, r.on_d]).collect(),
        )
    }
}

impl From<Transducer> for TransducerRaw {
    fn from(t: Transducer) -> Self {
        TransducerRaw {
            id: t.id,
            states: t.states,
            start: t.start,
            first: t.first,
            step: t
                .step
                .into_iter()
                .map(|[on_c, on_d]| StepRow { on_c, on_d })
                .collect(),
        }
    }
}

impl Transducer {
    pub fn new(id: impl Into<String>, states: usize, start: usize, first: Transition, step: Vec<[Transition; 2]>) -> Result<Self, Error> {
        let id = id.into();
        if states == 0 || start >= states {
            return Err(Error::Definition(format!("transducer {id}: bad state count or start state")));
        }
        if step.len() != states {
            return Err(Error::Definition(format!(
                "transducer {id}: step table has {} rows for {states} states",
                step.len()
            )));
        }
        let targets_ok = std::iter::once(&first)
            .chain(step.iter().flatten())
            .all(|d| d.outcomes().iter().all(|((_, s), _)| *s < states));
        if !targets_ok {
            return Err(Error::Definition(format!("transducer {id}: transition to unknown state")));
        }
        Ok(Transducer {
            id,
            states,
            start,
            first,
            step,
        })
    }

    /// A one-state strategy whose moves are independent dyadic draws.
    pub fn memoryless(id: impl Into<String>, first: DyadicDist<Move>, on_c: DyadicDist<Move>, on_d: DyadicDist<Move>) -> Self {
        let stay = |d: &DyadicDist<Move>| d.map(|&m| (m, 0));
        Transducer::new(id, 1, 0, stay(&first), vec![[stay(&on_c), stay(&on_d)]]).expect("one-state transducer is well formed")
    }

    /// Memoryless strategy that cooperates with the given dyadic probabilities.
    pub fn memoryless_mixed(id: impl Into<String>, p_first: Dyadic, p_after_c: Dyadic, p_after_d: Dyadic) -> Self {
        let coop = |p: Dyadic| {
            let rest = Dyadic::new((1u64 << p.exponent()) - p.numerator(), p.exponent()).expect("complement of a probability");
            DyadicDist::new(vec![(Move::C, p), (Move::D, rest)]).expect("two-point distribution")
        };
        Self::memoryless(id, coop(p_first), coop(p_after_c), coop(p_after_d))
    }

    /// Grim trigger: cooperate until the opponent defects once, then defect forever.
    pub fn grim_trigger(id: impl Into<String>) -> Self {
        let p = |m, s| DyadicDist::point((m, s));
        Transducer::new(
            id,
            2,
            0,
            p(Move::C, 0),
            vec![[p(Move::C, 0), p(Move::D, 1)], [p(Move::D, 1), p(Move::D, 1)]],
        )
        .expect("grim trigger is well formed")
    }

    /// Tit for tat for rounds `1..k`, then defects from round `k` on.
    ///
    /// State `s` counts completed rounds, saturating at `k - 1`, so the
    /// machine uses `k` states.
    pub fn defect_from_round(id: impl Into<String>, k: usize) -> Self {
        assert!(k >= 2, "defecting from round 1 is the memoryless always-defect");
        let p = |m, s| DyadicDist::point((m, s));
        let last = k - 1;
        let step = (0..k)
            .map(|s| {
                if s >= last {
                    [p(Move::D, last), p(Move::D, last)]
                } else {
                    [p(Move::C, s + 1), p(Move::D, s + 1)]
                }
            })
            .collect();
        Transducer::new(id, k, 0, p(Move::C, 1), step).expect("counter transducer is well formed")
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn metrics(&self) -> StaticMetrics {
        StaticMetrics {
            state_count: self.states as u64,
            description_size: 1 + 2 * self.states as u64,
            randomized: !self.is_deterministic(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        std::iter::once(&self.first).chain(self.step.iter().flatten()).all(|d| d.is_point())
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn first(&self) -> &DyadicDist<(Move, usize)> {
        &self.first
    }

    pub fn transition(&self, state: usize, observed: Move) -> &DyadicDist<(Move, usize)> {
        &self.step[state][observed.index()]
    }

    /// Draws the next `(move, state)`; `observed = None` selects the first move.
    /// Returns the coin bits consumed alongside.
    pub fn next(&self, state: usize, observed: Option<Move>, coins: &mut dyn CoinSource) -> Result<((Move, usize), u32), Interrupt> {
        let dist = match observed {
            None => &self.first,
            Some(o) => self.transition(state, o),
        };
        if dist.is_point() {
            return Ok((*dist.get(0), 0));
        }
        let i = coins.draw(&dist.numerators(), dist.bits())?;
        Ok((*dist.get(i), dist.bits()))
    }

    /// As a one-shot machine the transducer plays its first move.
    pub(crate) fn execute_one_shot(&self, coins: &mut dyn CoinSource, budgets: Budgets) -> Result<RunTrace, Interrupt> {
        let bits = u64::from(if self.first.is_point() { 0 } else { self.first.bits() });
        if bits > budgets.coins || budgets.steps == 0 {
            return Ok(RunTrace::exhausted(0, 0, 0, 0));
        }
        let ((m, _), used) = self.next(self.start, None, coins)?;
        Ok(RunTrace::halted(m.label().to_string(), 1, u64::from(used), 0))
    }
}

/// Builds a one-state (memoryless) deterministic transducer.
pub fn build_transducer(id: impl Into<String>, first: Move, response: &BTreeMap<Move, Move>) -> Result<Transducer, Error> {
    let id = id.into();
    let reply = |obs: Move| {
        response
            .get(&obs)
            .copied()
            .ok_or_else(|| Error::Definition(format!("transducer {id}: no response to {obs}")))
    };
    let on_c = reply(Move::C)?;
    let on_d = reply(Move::D)?;
    Ok(Transducer::memoryless(
        id.clone(),
        DyadicDist::point(first),
        DyadicDist::point(on_c),
        DyadicDist::point(on_d),
    ))
}

/// All eight deterministic memoryless strategies, named `det-<first><afterC><afterD>`.
pub fn deterministic_memoryless() -> Vec<Transducer> {
    let mut out = Vec::new();
    for first in Move::ALL {
        for on_c in Move::ALL {
            for on_d in Move::ALL {
                let map = BTreeMap::from([(Move::C, on_c), (Move::D, on_d)]);
                let id = format!("det-{first}{on_c}{on_d}");
                out.push(build_transducer(id, first, &map).expect("total response map"));
            }
        }
    }
    out
}
