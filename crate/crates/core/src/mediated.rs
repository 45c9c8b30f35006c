//! Machine games with a mediator.
//!
//! A game runs for a fixed number of stages. Each stage has three phases:
//!
//! 1. every player sends one message (possibly the empty message λ),
//! 2. the mediator replies to every player,
//! 3. every player acts.
//!
//! A player's machine sees only its own type, its own coins and the replies
//! addressed to it, so the order in which players are scheduled within a
//! phase cannot change the transcript. Bits sent count payload bits only;
//! λ costs nothing.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bits::{Action, BitString};
use crate::coins::{enumerate, CoinSource, Interrupt};
use crate::equilibrium::{Identified, StrategicGame};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr, Scope};
use crate::game::{ComplexityEnv, GameDef, TypeProfile, UtilityEnv};
use crate::machine::{Budgets, Move, RunTrace, StaticMetrics, Transducer};
use crate::rational::{pow_q, Q};

/// What a machine emits in one phase.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Message(BitString),
    Action(Action),
}

/// A strategy for a mediated game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InteractiveMachine {
    /// Sends its move each stage, reads the relayed opponent move, and plays
    /// the move it sent. A λ or malformed relay is observed as a defection.
    Transducer(Transducer),
    /// Sends the first `bits` bits of its type in stage one, then acts out
    /// whatever the mediator replies (λ becomes the empty action).
    Reporter { id: String, bits: usize },
    /// Emits a fixed `(message phase, action phase)` pair per stage; λ and
    /// the empty action once the script runs out. Reads nothing.
    Scripted { id: String, script: Vec<(Emit, Emit)> },
    /// λ messages and empty actions.
    Silent { id: String },
}

impl Identified for InteractiveMachine {
    fn id(&self) -> &str {
        match self {
            InteractiveMachine::Transducer(t) => &t.id,
            InteractiveMachine::Reporter { id, .. }
            | InteractiveMachine::Scripted { id, .. }
            | InteractiveMachine::Silent { id } => id,
        }
    }
}

impl InteractiveMachine {
    pub fn reporter(id: impl Into<String>, bits: usize) -> Self {
        InteractiveMachine::Reporter { id: id.into(), bits }
    }

    pub fn silent(id: impl Into<String>) -> Self {
        InteractiveMachine::Silent { id: id.into() }
    }

    /// Never talks; plays `word` in every stage.
    pub fn constant(id: impl Into<String>, word: &str, stages: usize) -> Self {
        InteractiveMachine::Scripted {
            id: id.into(),
            script: vec![(Emit::Message(BitString::empty()), Emit::Action(Action::word(word))); stages],
        }
    }

    pub fn metrics(&self) -> StaticMetrics {
        match self {
            InteractiveMachine::Transducer(t) => t.metrics(),
            InteractiveMachine::Reporter { .. } | InteractiveMachine::Silent { .. } => StaticMetrics {
                state_count: 1,
                description_size: 1,
                randomized: false,
            },
            InteractiveMachine::Scripted { script, .. } => StaticMetrics {
                state_count: script.len().max(1) as u64,
                description_size: 2 * script.len() as u64,
                randomized: false,
            },
        }
    }

    fn message_phase(
        &self,
        run: &mut PlayerRun,
        stage: usize,
        ty: &BitString,
        coins: &mut dyn CoinSource,
        budgets: Budgets,
    ) -> std::result::Result<Emit, Interrupt> {
        match self {
            InteractiveMachine::Transducer(t) => {
                let observed = (stage > 0).then(|| run.observed.unwrap_or(Move::D));
                let dist = match observed {
                    None => t.first(),
                    Some(o) => t.transition(run.state, o),
                };
                let bits = if dist.is_point() { 0 } else { u64::from(dist.bits()) };
                if bits > budgets.coins || budgets.steps == 0 {
                    run.exceeded = true;
                    run.pending = None;
                    return Ok(Emit::Message(BitString::empty()));
                }
                let ((m, next), used) = t.next(run.state, observed, coins)?;
                run.state = next;
                run.pending = Some(m);
                run.steps += 1;
                run.coin_bits += u64::from(used);
                Ok(Emit::Message(m.bit().parse().expect("move bit")))
            }
            InteractiveMachine::Reporter { bits, .. } => {
                if stage > 0 {
                    return Ok(Emit::Message(BitString::empty()));
                }
                let take = (*bits).min(ty.len());
                if take as u64 + 1 > budgets.steps {
                    run.exceeded = true;
                    return Ok(Emit::Message(BitString::empty()));
                }
                run.steps += take as u64 + 1;
                run.input_bits = run.input_bits.max(take as u64);
                Ok(Emit::Message(ty.prefix(take)))
            }
            InteractiveMachine::Scripted { script, .. } => Ok(script
                .get(stage)
                .map(|(m, _)| m.clone())
                .unwrap_or(Emit::Message(BitString::empty()))),
            InteractiveMachine::Silent { .. } => Ok(Emit::Message(BitString::empty())),
        }
    }

    fn action_phase(&self, run: &mut PlayerRun, stage: usize, reply: &BitString) -> Emit {
        match self {
            InteractiveMachine::Transducer(_) => {
                run.read(reply);
                run.observed = Move::from_bit(&reply.to_string());
                Emit::Action(match run.pending.take() {
                    Some(m) => Action::word(m.label()),
                    None => Action::Bot,
                })
            }
            InteractiveMachine::Reporter { .. } => {
                if run.exceeded {
                    return Emit::Action(Action::Bot);
                }
                run.read(reply);
                run.steps += reply.len() as u64;
                Emit::Action(Action::word(reply.to_string()))
            }
            InteractiveMachine::Scripted { script, .. } => script
                .get(stage)
                .map(|(_, a)| a.clone())
                .unwrap_or(Emit::Action(Action::word(""))),
            InteractiveMachine::Silent { .. } => Emit::Action(Action::word("")),
        }
    }
}

#[derive(Clone, Debug, Default)]
struct PlayerRun {
    state: usize,
    observed: Option<Move>,
    pending: Option<Move>,
    steps: u64,
    coin_bits: u64,
    input_bits: u64,
    bits_sent: u64,
    bits_read: u64,
    exceeded: bool,
    read_log: Vec<BitString>,
}

impl PlayerRun {
    fn read(&mut self, reply: &BitString) {
        self.bits_read += reply.len() as u64;
        self.read_log.push(reply.clone());
    }
}

/// The mediator's program. None of the bundled mediators keep state beyond
/// the current stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mediator {
    /// Player `i` receives the message of player `i + 1 (mod m)`; with two
    /// players, each receives the other's.
    Relay,
    Echo,
    Silent,
    /// Once every player has sent at least `k + 1` bits, replies `"1"` to all
    /// when the `(k + 1)`-bit prefixes agree and `"0"` otherwise; λ before.
    PrefixCompare { k: usize },
    /// Flips one coin per stage and sends it to everyone.
    CoinFlip,
}

impl Mediator {
    fn reply(&self, messages: &[BitString], coins: &mut dyn CoinSource) -> std::result::Result<(Vec<BitString>, u64), Interrupt> {
        let m = messages.len();
        Ok(match self {
            Mediator::Relay => ((0..m).map(|i| messages[(i + 1) % m].clone()).collect(), 0),
            Mediator::Echo => (messages.to_vec(), 0),
            Mediator::Silent => (vec![BitString::empty(); m], 0),
            Mediator::PrefixCompare { k } => {
                if messages.iter().all(|msg| msg.len() > *k) {
                    let first = messages[0].prefix(k + 1);
                    let same = messages.iter().all(|msg| msg.prefix(k + 1) == first);
                    (vec![if same { "1" } else { "0" }.into(); m], 0)
                } else {
                    (vec![BitString::empty(); m], 0)
                }
            }
            Mediator::CoinFlip => {
                let bit = coins.draw(&[1, 1], 1)?;
                (vec![if bit == 1 { "1" } else { "0" }.into(); m], 1)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub messages: Vec<BitString>,
    pub replies: Vec<BitString>,
    pub actions: Vec<Action>,
}

/// Per-player totals over the whole transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSummary {
    pub trace: RunTrace,
    pub bits_sent: u64,
    pub bits_read: u64,
    /// Replies the machine actually read, in order.
    pub messages_read: Vec<BitString>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub stages: Vec<StageRecord>,
    pub players: Vec<PlayerSummary>,
    pub mediator_coin_bits: u64,
}

impl Transcript {
    pub fn final_actions(&self) -> Vec<Action> {
        self.players.iter().map(|p| p.trace.output.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcripts serialize")
    }
}

/// `(bits sent, bits read)` by `player`.
pub fn comm_metrics(tr: &Transcript, player: usize) -> (u64, u64) {
    let p = &tr.players[player];
    (p.bits_sent, p.bits_read)
}

fn run_transcript(
    profile: &[&InteractiveMachine],
    mediator: &Mediator,
    stages: usize,
    types: &[BitString],
    coins: &mut [impl CoinSource],
    budgets: Budgets,
    order: &[usize],
) -> std::result::Result<Transcript, Interrupt> {
    let m = profile.len();
    let mut runs = vec![PlayerRun::default(); m];
    let mut records = Vec::with_capacity(stages);
    let mut mediator_coin_bits = 0;
    let mut last_actions = vec![Action::word(""); m];
    for stage in 0..stages {
        let mut messages = vec![BitString::empty(); m];
        for &i in order {
            match profile[i].message_phase(&mut runs[i], stage, &types[i], &mut coins[i], budgets)? {
                Emit::Message(msg) => {
                    runs[i].bits_sent += msg.len() as u64;
                    messages[i] = msg;
                }
                Emit::Action(_) => {
                    return Err(Interrupt::Failed(Error::Protocol {
                        stage: stage + 1,
                        phase: "message",
                        player: i + 1,
                    }))
                }
            }
        }
        let (replies, used) = mediator.reply(&messages, &mut coins[m])?;
        mediator_coin_bits += used;
        let mut actions = vec![Action::Bot; m];
        for &i in order {
            match profile[i].action_phase(&mut runs[i], stage, &replies[i]) {
                Emit::Action(a) => actions[i] = a,
                Emit::Message(_) => {
                    return Err(Interrupt::Failed(Error::Protocol {
                        stage: stage + 1,
                        phase: "action",
                        player: i + 1,
                    }))
                }
            }
        }
        last_actions.clone_from(&actions);
        records.push(StageRecord {
            messages,
            replies,
            actions,
        });
    }
    let players = runs
        .into_iter()
        .zip(last_actions)
        .map(|(r, output)| {
            let output_len = output.len().unwrap_or(0) as u64;
            let budget_exceeded = r.exceeded;
            PlayerSummary {
                trace: RunTrace {
                    output,
                    steps: r.steps,
                    coin_bits: r.coin_bits,
                    input_bits: r.input_bits,
                    output_len,
                    budget_exceeded,
                },
                bits_sent: r.bits_sent,
                bits_read: r.bits_read,
                messages_read: r.read_log,
            }
        })
        .collect();
    Ok(Transcript {
        stages: records,
        players,
        mediator_coin_bits,
    })
}

/// Runs one transcript. `coins` holds one source per player followed by
/// the mediator's.
pub fn execute_mediated(
    profile: &[&InteractiveMachine],
    mediator: &Mediator,
    stages: usize,
    types: &[BitString],
    coins: &mut [impl CoinSource],
    budgets: Budgets,
) -> Result<Transcript> {
    let order: Vec<usize> = (0..profile.len()).collect();
    execute_mediated_in_order(profile, mediator, stages, types, coins, budgets, &order)
}

/// As [`execute_mediated`], scheduling players within each phase in `order`.
pub fn execute_mediated_in_order(
    profile: &[&InteractiveMachine],
    mediator: &Mediator,
    stages: usize,
    types: &[BitString],
    coins: &mut [impl CoinSource],
    budgets: Budgets,
    order: &[usize],
) -> Result<Transcript> {
    check_shape(profile.len(), types.len(), coins.len(), order)?;
    run_transcript(profile, mediator, stages, types, coins, budgets, order).map_err(Interrupt::into_error)
}

fn check_shape(players: usize, types: usize, coins: usize, order: &[usize]) -> Result<()> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if types != players || coins != players + 1 || sorted != (0..players).collect::<Vec<_>>() {
        return Err(Error::Definition(format!(
            "{players} players need {players} types, {} coin sources and a permutation order",
            players + 1
        )));
    }
    Ok(())
}

/// Discounted payoff stream `sum_{m=1}^N delta^m r_m`, each `r_m` evaluated
/// on stage `m`'s actions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamPayoff {
    pub delta: Q,
    pub payoffs: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MediatedGameDef {
    /// Types, complexity models, final-stage utility and budgets. Utility
    /// expressions may mention `bitsSent1..m`; `ai` is the final action.
    pub game: GameDef,
    pub mediator: Mediator,
    pub stages: usize,
    pub stream: Option<StreamPayoff>,
}

impl MediatedGameDef {
    pub fn new(
        players: usize,
        profiles: Vec<TypeProfile>,
        complexity: &[&str],
        utility: &[&str],
        budgets: Budgets,
        mediator: Mediator,
        stages: usize,
    ) -> Result<Self> {
        if stages == 0 {
            return Err(Error::Definition("a mediated game needs at least one stage".into()));
        }
        Ok(MediatedGameDef {
            game: GameDef::build(players, profiles, complexity, utility, budgets, true)?,
            mediator,
            stages,
            stream: None,
        })
    }

    pub fn with_stream(mut self, delta: Q, payoffs: &[&str]) -> Result<Self> {
        let scope = Scope::Utility {
            players: self.game.players,
            mediated: true,
        };
        let payoffs = payoffs.iter().map(|p| parse_expression(p, scope)).collect::<Result<Vec<_>>>()?;
        if payoffs.len() != self.game.players {
            return Err(Error::Definition("one stream payoff per player".into()));
        }
        self.stream = Some(StreamPayoff { delta, payoffs });
        Ok(self)
    }

    pub fn costs(&self, profile: &[&InteractiveMachine], tr: &Transcript) -> Result<Vec<Q>> {
        profile
            .iter()
            .zip(&tr.players)
            .zip(&self.game.complexity)
            .map(|((m, p), c)| {
                c.complexity(&ComplexityEnv {
                    trace: &p.trace,
                    metrics: m.metrics(),
                    bits_sent: p.bits_sent,
                })
            })
            .collect()
    }

    /// Per-player utility of one transcript.
    pub fn transcript_utility(&self, tp: &TypeProfile, profile: &[&InteractiveMachine], tr: &Transcript) -> Result<Vec<Q>> {
        let costs = self.costs(profile, tr)?;
        let bits_sent: Vec<u64> = tr.players.iter().map(|p| p.bits_sent).collect();
        let final_actions = tr.final_actions();
        let env = UtilityEnv {
            nature: &tp.nature,
            types: &tp.types,
            actions: &final_actions,
            costs: &costs,
            bits_sent: &bits_sent,
        };
        let mut u: Vec<Q> = self.game.utility.iter().map(|e| e.num(&env)).collect();
        if let Some(stream) = &self.stream {
            let mut weight = Q::one();
            for stage in &tr.stages {
                weight *= &stream.delta;
                let env = UtilityEnv {
                    actions: &stage.actions,
                    ..env
                };
                for (acc, e) in u.iter_mut().zip(&stream.payoffs) {
                    *acc += &weight * e.num(&env);
                }
            }
        }
        Ok(u)
    }

    pub fn run(&self, profile: &[&InteractiveMachine], types: &[BitString], coins: &mut [impl CoinSource]) -> Result<Transcript> {
        execute_mediated(profile, &self.mediator, self.stages, types, coins, self.game.budgets)
    }
}

/// Exact expected utility, branching on every player's and the mediator's coins.
pub fn expected_utility_mediated(g: &MediatedGameDef, profile: &[&InteractiveMachine]) -> Result<Vec<Q>> {
    let m = g.game.players;
    if profile.len() != m {
        return Err(Error::Definition(format!("profile has {} machines for {m} players", profile.len())));
    }
    let order: Vec<usize> = (0..m).collect();
    let mut total = vec![Q::zero(); m];
    for tp in &g.game.profiles {
        if tp.prob.is_zero() {
            continue;
        }
        let leaves = enumerate(m + 1, |coins| {
            run_transcript(profile, &g.mediator, g.stages, &tp.types, coins, g.game.budgets, &order)
        })?;
        for leaf in leaves {
            let w = &tp.prob * &leaf.weight;
            for (acc, u) in total.iter_mut().zip(g.transcript_utility(tp, profile, &leaf.value)?) {
                *acc += &w * u;
            }
        }
    }
    Ok(total)
}

impl StrategicGame for MediatedGameDef {
    type Strategy = InteractiveMachine;

    fn player_count(&self) -> usize {
        self.game.players
    }

    fn utilities(&self, profile: &[&InteractiveMachine]) -> Result<Vec<Q>> {
        expected_utility_mediated(self, profile)
    }
}

/// Stage payoffs of a two-player, two-move game, indexed `[own][other]`
/// with `C = 0`, `D = 1`.
pub type StageTable = [[(Q, Q); 2]; 2];

fn stage_expr(table: &StageTable, me: usize) -> String {
    let (own, other) = if me == 0 { ("a1", "a2") } else { ("a2", "a1") };
    let pay = |a: usize, b: usize| {
        let (x, y) = if me == 0 { &table[a][b] } else { &table[b][a] };
        if me == 0 { x.clone() } else { y.clone() }
    };
    let worst = (0..2)
        .flat_map(|a| (0..2).map(move |b| (a, b)))
        .map(|(a, b)| pay(a, b))
        .min()
        .expect("four entries");
    format!(
        "if isBot({own}) then {worst} else if {own} == \"C\" then (if {other} == \"C\" then {} else {}) else (if {other} == \"C\" then {} else {})",
        pay(0, 0),
        pay(0, 1),
        pay(1, 0),
        pay(1, 1)
    )
}

/// `N`-round repeated game with discount `delta`: the mediator relays each
/// move to the other player, and utility is the discounted stage payoff
/// stream minus `complexity`. A player whose move is BOT gets the worst
/// stage payoff for that round.
pub fn make_repeated_game(table: &StageTable, rounds: usize, delta: Q, complexity: &str) -> Result<MediatedGameDef> {
    if rounds == 0 || delta <= Q::zero() || delta > Q::one() {
        return Err(Error::Definition("need N >= 1 and 0 < delta <= 1".into()));
    }
    let profile = TypeProfile::new(vec![BitString::empty(); 2], BitString::empty(), Q::one());
    let g = MediatedGameDef::new(
        2,
        vec![profile],
        &[complexity, complexity],
        &["0 - c1", "0 - c2"],
        Budgets::default(),
        Mediator::Relay,
        rounds,
    )?;
    let p1 = stage_expr(table, 0);
    let p2 = stage_expr(table, 1);
    g.with_stream(delta, &[&p1, &p2])
}

/// The prisoner's dilemma stage table: `(C,C) = (3,3)`, `(C,D) = (-5,5)`,
/// `(D,C) = (5,-5)`, `(D,D) = (-3,-3)`.
pub fn prisoners_dilemma() -> StageTable {
    let p = |a: i64, b: i64| (Q::from_integer(a.into()), Q::from_integer(b.into()));
    [[p(3, 3), p(-5, 5)], [p(5, -5), p(-3, -3)]]
}

/// `sum_{m=1}^N delta^m r` for a constant stage payoff `r`.
pub fn geometric_stream(r: &Q, delta: &Q, rounds: u32) -> Q {
    (1..=rounds).fold(Q::zero(), |acc, m| acc + pow_q(delta, m) * r)
}
