//! Interpreted three-tape Turing machines.
//!
//! Tapes: a read-only input tape holding the type, an unbounded work tape,
//! and a write-only output tape whose head advances on every write. Each
//! transition is keyed on `(state, input symbol, work symbol)` and selects a
//! dyadic distribution over actions, so randomized machines flip fair coins.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Budgets, RunTrace, StaticMetrics};
use crate::bits::BitString;
use crate::coins::{CoinSource, Interrupt};
use crate::error::Error;
use crate::rational::DyadicDist;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sym {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "_")]
    Blank,
}

impl Sym {
    const ALL: [Sym; 3] = [Sym::Zero, Sym::One, Sym::Blank];

    fn index(self) -> usize {
        self as usize
    }

    fn from_bit(b: Option<bool>) -> Sym {
        match b {
            Some(false) => Sym::Zero,
            Some(true) => Sym::One,
            None => Sym::Blank,
        }
    }
}

/// A symbol in a rule's key; `"*"` matches any symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymPattern {
    #[serde(rename = "*")]
    Any,
    #[serde(untagged)]
    Is(Sym),
}

impl SymPattern {
    fn matches(self, s: Sym) -> bool {
        match self {
            SymPattern::Any => true,
            SymPattern::Is(t) => t == s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    L,
    R,
    S,
}

impl Head {
    fn delta(self) -> i64 {
        match self {
            Head::L => -1,
            Head::R => 1,
            Head::S => 0,
        }
    }
}

/// What one transition does.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TmAction {
    pub next: usize,
    /// Symbol written under the work head; `None` leaves the cell unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub work_write: Option<Sym>,
    /// Digit appended to the output tape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<char>,
    #[serde(default = "stay")]
    pub input_move: Head,
    #[serde(default = "stay")]
    pub work_move: Head,
}

fn stay() -> Head {
    Head::S
}

impl TmAction {
    pub fn goto(next: usize) -> Self {
        TmAction {
            next,
            work_write: None,
            output: None,
            input_move: Head::S,
            work_move: Head::S,
        }
    }

    pub fn emit(mut self, c: char) -> Self {
        self.output = Some(c);
        self
    }

    pub fn write_work(mut self, s: Sym) -> Self {
        self.work_write = Some(s);
        self
    }

    pub fn moves(mut self, input: Head, work: Head) -> Self {
        self.input_move = input;
        self.work_move = work;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TmRule {
    pub state: usize,
    pub input: SymPattern,
    pub work: SymPattern,
    pub outcomes: DyadicDist<TmAction>,
}

impl TmRule {
    pub fn new(state: usize, input: SymPattern, work: SymPattern, outcomes: DyadicDist<TmAction>) -> Self {
        TmRule {
            state,
            input,
            work,
            outcomes,
        }
    }

    /// A rule for `state` regardless of the symbols under the heads.
    pub fn any(state: usize, outcomes: DyadicDist<TmAction>) -> Self {
        Self::new(state, SymPattern::Any, SymPattern::Any, outcomes)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct TmSpecRaw {
    state_count: usize,
    start: usize,
    halt: Vec<usize>,
    rules: Vec<TmRule>,
}

/// A validated transition table.
///
/// Rules are matched first-to-last; every `(non-halting state, input, work)`
/// combination must be covered by some rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TmSpecRaw", into = "TmSpecRaw")]
pub struct TmSpec {
    raw: TmSpecRaw,
    /// `table[state * 9 + input * 3 + work]` is a rule index.
    table: Vec<Option<usize>>,
    halting: Vec<bool>,
}

impl From<TmSpec> for TmSpecRaw {
    fn from(spec: TmSpec) -> Self {
        spec.raw
    }
}

impl TryFrom<TmSpecRaw> for TmSpec {
    type Error = Error;

    fn try_from(raw: TmSpecRaw) -> Result<Self, Error> {
        TmSpec::new(raw.state_count, raw.start, raw.halt, raw.rules)
    }
}

impl TmSpec {
    pub fn new(state_count: usize, start: usize, halt: Vec<usize>, rules: Vec<TmRule>) -> Result<Self, Error> {
        if state_count == 0 {
            return Err(Error::Definition("a machine needs at least one state".into()));
        }
        if start >= state_count {
            return Err(Error::Definition(format!("start state {start} out of range")));
        }
        if halt.is_empty() || halt.iter().any(|&h| h >= state_count) {
            return Err(Error::Definition("halt states must be a nonempty subset of the states".into()));
        }
        let mut halting = vec![false; state_count];
        for &h in &halt {
            halting[h] = true;
        }
        let mut table = vec![None; state_count * 9];
        for (i, rule) in rules.iter().enumerate() {
            if rule.state >= state_count {
                return Err(Error::Definition(format!("rule {i} refers to state {}", rule.state)));
            }
            for action in rule.outcomes.outcomes().iter().map(|(a, _)| a) {
                if action.next >= state_count {
                    return Err(Error::Definition(format!("rule {i} moves to state {}", action.next)));
                }
            }
            for input in Sym::ALL {
                for work in Sym::ALL {
                    if rule.input.matches(input) && rule.work.matches(work) {
                        let slot = &mut table[rule.state * 9 + input.index() * 3 + work.index()];
                        if slot.is_none() {
                            *slot = Some(i);
                        }
                    }
                }
            }
        }
        for state in (0..state_count).filter(|&s| !halting[s]) {
            for input in Sym::ALL {
                for work in Sym::ALL {
                    if table[state * 9 + input.index() * 3 + work.index()].is_none() {
                        return Err(Error::Definition(format!(
                            "transition map is not total: no rule for (state {state}, input {input:?}, work {work:?})"
                        )));
                    }
                }
            }
        }
        Ok(TmSpec {
            raw: TmSpecRaw {
                state_count,
                start,
                halt,
                rules,
            },
            table,
            halting,
        })
    }

    pub fn state_count(&self) -> usize {
        self.raw.state_count
    }

    pub fn metrics(&self) -> StaticMetrics {
        StaticMetrics {
            state_count: self.raw.state_count as u64,
            description_size: self.table.iter().filter(|e| e.is_some()).count() as u64,
            randomized: !self.is_deterministic(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.raw.rules.iter().all(|r| r.outcomes.is_point())
    }

    pub(crate) fn execute(&self, input: &BitString, coins: &mut dyn CoinSource, budgets: Budgets) -> Result<RunTrace, Interrupt> {
        let mut state = self.raw.start;
        let mut input_head: i64 = 0;
        let mut work: HashMap<i64, Sym> = HashMap::new();
        let mut work_head: i64 = 0;
        let mut output = String::new();
        let (mut steps, mut coin_bits, mut input_bits) = (0u64, 0u64, 0u64);

        while !self.halting[state] {
            if steps >= budgets.steps {
                return Ok(RunTrace::exhausted(steps, coin_bits, input_bits, output.len() as u64));
            }
            let in_bit = input.get(input_head as usize);
            if in_bit.is_some() {
                input_bits = input_bits.max(input_head as u64 + 1);
            }
            let in_sym = Sym::from_bit(in_bit);
            let work_sym = work.get(&work_head).copied().unwrap_or(Sym::Blank);
            let rule = self.table[state * 9 + in_sym.index() * 3 + work_sym.index()].expect("validated total table");
            let outcomes = &self.raw.rules[rule].outcomes;
            let choice = if outcomes.is_point() {
                0
            } else {
                let bits = u64::from(outcomes.bits());
                if coin_bits + bits > budgets.coins {
                    return Ok(RunTrace::exhausted(steps, coin_bits, input_bits, output.len() as u64));
                }
                let i = coins.draw(&outcomes.numerators(), outcomes.bits())?;
                coin_bits += bits;
                i
            };
            let action = outcomes.get(choice);
            if let Some(s) = action.work_write {
                work.insert(work_head, s);
            }
            if let Some(c) = action.output {
                output.push(c);
            }
            input_head = (input_head + action.input_move.delta()).max(0);
            work_head += action.work_move.delta();
            state = action.next;
            steps += 1;
        }
        Ok(RunTrace::halted(output, steps, coin_bits, input_bits))
    }
}
