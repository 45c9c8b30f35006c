//! Machines and metered execution.
//!
//! Four machine kinds share one execution contract: given a type input, a
//! coin source and explicit budgets, produce a [`RunTrace`]. A run that
//! exhausts a budget outputs [`Action::Bot`].

mod declared;
mod sampler;
mod tm;
mod transducer;

pub use declared::{DeclaredMachine, DeclaredMetrics};
pub use sampler::{build_interval_sampler, IntervalSampler, SamplerStats};
pub use tm::{Head, Sym, SymPattern, TmAction, TmRule, TmSpec};
pub use transducer::{build_transducer, deterministic_memoryless, Move, Transducer};

use serde::{Deserialize, Serialize};

use crate::bits::{Action, BitString};
use crate::coins::{BitCoins, CoinSource, Interrupt};
use crate::error::Result;

/// Explicit resource limits for one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub steps: u64,
    pub coins: u64,
}

impl Budgets {
    pub fn new(steps: u64, coins: u64) -> Self {
        Budgets { steps, coins }
    }
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            steps: 10_000,
            coins: 64,
        }
    }
}

/// Output and measured resources of one execution.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunTrace {
    pub output: Action,
    pub steps: u64,
    pub coin_bits: u64,
    pub input_bits: u64,
    pub output_len: u64,
    pub budget_exceeded: bool,
}

impl RunTrace {
    pub(crate) fn halted(output: String, steps: u64, coin_bits: u64, input_bits: u64) -> Self {
        let output_len = output.chars().count() as u64;
        RunTrace {
            output: Action::Word(output),
            steps,
            coin_bits,
            input_bits,
            output_len,
            budget_exceeded: false,
        }
    }

    pub(crate) fn exhausted(steps: u64, coin_bits: u64, input_bits: u64, output_len: u64) -> Self {
        RunTrace {
            output: Action::Bot,
            steps,
            coin_bits,
            input_bits,
            output_len,
            budget_exceeded: true,
        }
    }
}

/// Static description metrics of a machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticMetrics {
    pub state_count: u64,
    pub description_size: u64,
    pub randomized: bool,
}

/// The portion of type, coins and message history a run actually read.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct View {
    pub type_prefix: BitString,
    pub coin_prefix: BitString,
    pub messages: Vec<BitString>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Machine {
    Tm { id: String, spec: TmSpec },
    Declared(DeclaredMachine),
    Transducer(Transducer),
    Sampler(IntervalSampler),
}

impl Machine {
    pub fn tm(id: impl Into<String>, spec: TmSpec) -> Self {
        Machine::Tm { id: id.into(), spec }
    }

    pub fn id(&self) -> &str {
        match self {
            Machine::Tm { id, .. } => id,
            Machine::Declared(m) => &m.id,
            Machine::Transducer(t) => &t.id,
            Machine::Sampler(s) => &s.id,
        }
    }

    pub fn run(
        &self,
        input: &BitString,
        coins: &mut dyn CoinSource,
        budgets: Budgets,
    ) -> std::result::Result<RunTrace, Interrupt> {
        match self {
            Machine::Tm { spec, .. } => spec.execute(input, coins, budgets),
            Machine::Declared(m) => m.execute(input, coins, budgets),
            Machine::Transducer(t) => t.execute_one_shot(coins, budgets),
            Machine::Sampler(s) => s.execute(coins, budgets),
        }
    }

    pub fn metrics(&self) -> StaticMetrics {
        match self {
            Machine::Tm { spec, .. } => spec.metrics(),
            Machine::Declared(m) => m.static_metrics(),
            Machine::Transducer(t) => t.metrics(),
            Machine::Sampler(s) => s.metrics(),
        }
    }

    /// True when no reachable choice is random.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Machine::Tm { spec, .. } => spec.is_deterministic(),
            Machine::Declared(m) => m.is_deterministic(),
            Machine::Transducer(t) => t.is_deterministic(),
            Machine::Sampler(s) => s.is_deterministic(),
        }
    }
}

pub fn machine_metrics(m: &Machine) -> StaticMetrics {
    m.metrics()
}

pub fn run_tm(spec: &TmSpec, input: &BitString, coins: &mut dyn CoinSource, budgets: Budgets) -> Result<RunTrace> {
    spec.execute(input, coins, budgets).map_err(Interrupt::into_error)
}

pub fn run_declared(m: &DeclaredMachine, input: &BitString, coins: &mut dyn CoinSource, budgets: Budgets) -> Result<RunTrace> {
    m.execute(input, coins, budgets).map_err(Interrupt::into_error)
}

/// Runs against a fixed coin string and reports the view actually read.
pub fn run_with_view(m: &Machine, input: &BitString, coins: BitString, budgets: Budgets) -> Result<(RunTrace, View)> {
    let mut source = BitCoins::new(coins);
    let trace = m.run(input, &mut source, budgets).map_err(Interrupt::into_error)?;
    let view = View {
        type_prefix: input.prefix(trace.input_bits as usize),
        coin_prefix: source.consumed(),
        messages: Vec::new(),
    };
    Ok((trace, view))
}
