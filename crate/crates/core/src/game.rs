//! Bayesian machine games and expected-utility evaluation.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use num_bigint::{BigInt, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::bits::{Action, BitString};
use crate::coins::{enumerate, CoinSource, Interrupt, RngCoins};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Env, Expr, Metric, Scope, Value, Var};
use crate::machine::{Budgets, Machine, RunTrace, StaticMetrics};
use crate::rational::{q_to_f64, serde_q, Q};

/// One row of the joint type table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeProfile {
    pub types: Vec<BitString>,
    #[serde(default, skip_serializing_if = "BitString::is_empty")]
    pub nature: BitString,
    #[serde(with = "serde_q")]
    pub prob: Q,
}

impl TypeProfile {
    pub fn new(types: Vec<BitString>, nature: BitString, prob: Q) -> Self {
        TypeProfile { types, nature, prob }
    }
}

/// Values visible to a complexity expression.
pub struct ComplexityEnv<'a> {
    pub trace: &'a RunTrace,
    pub metrics: StaticMetrics,
    pub bits_sent: u64,
}

impl Env for ComplexityEnv<'_> {
    fn get(&self, v: &Var) -> Value {
        let n = |x: u64| Value::Num(Q::from_integer(x.into()));
        match v {
            Var::Metric(Metric::Steps) => n(self.trace.steps),
            Var::Metric(Metric::CoinBits) => n(self.trace.coin_bits),
            Var::Metric(Metric::InputBits) => n(self.trace.input_bits),
            Var::Metric(Metric::OutputLen) => n(self.trace.output_len),
            Var::Metric(Metric::StateCount) => n(self.metrics.state_count),
            Var::Metric(Metric::BitsSent) => n(self.bits_sent),
            Var::Metric(Metric::Randomized) => Value::Bool(self.metrics.randomized),
            other => unreachable!("{other} is not in complexity scope"),
        }
    }
}

/// Values visible to a utility expression.
pub struct UtilityEnv<'a> {
    pub nature: &'a BitString,
    pub types: &'a [BitString],
    pub actions: &'a [Action],
    pub costs: &'a [Q],
    pub bits_sent: &'a [u64],
}

impl Env for UtilityEnv<'_> {
    fn get(&self, v: &Var) -> Value {
        match *v {
            Var::Type(0) => Value::Word(Action::word(self.nature.to_string())),
            Var::Type(i) => Value::Word(Action::word(self.types[i - 1].to_string())),
            Var::Action(i) => Value::Word(self.actions[i - 1].clone()),
            Var::Cost(i) => Value::Num(self.costs[i - 1].clone()),
            Var::BitsSent(i) => Value::Num(Q::from_integer(self.bits_sent[i - 1].into())),
            Var::Metric(m) => unreachable!("{m:?} is not in utility scope"),
        }
    }
}

/// A Bayesian machine game with an explicit joint type table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameDef {
    pub players: usize,
    pub profiles: Vec<TypeProfile>,
    pub complexity: Vec<Expr>,
    pub utility: Vec<Expr>,
    pub budgets: Budgets,
    /// Bounds on every utility value; required for Monte Carlo intervals.
    pub utility_range: Option<(Q, Q)>,
}

impl GameDef {
    /// Parses the expressions and validates the prior.
    pub fn new(
        players: usize,
        profiles: Vec<TypeProfile>,
        complexity: &[&str],
        utility: &[&str],
        budgets: Budgets,
    ) -> Result<Self> {
        Self::build(players, profiles, complexity, utility, budgets, false)
    }

    pub(crate) fn build(
        players: usize,
        profiles: Vec<TypeProfile>,
        complexity: &[&str],
        utility: &[&str],
        budgets: Budgets,
        mediated: bool,
    ) -> Result<Self> {
        if players == 0 {
            return Err(Error::Definition("a game needs at least one player".into()));
        }
        if complexity.len() != players || utility.len() != players {
            return Err(Error::Definition(format!(
                "{players} players but {} complexity and {} utility expressions",
                complexity.len(),
                utility.len()
            )));
        }
        validate_prior(players, &profiles)?;
        let complexity = complexity
            .iter()
            .map(|s| parse_expression(s, Scope::Complexity))
            .collect::<Result<_>>()?;
        let scope = Scope::Utility { players, mediated };
        let utility = utility.iter().map(|s| parse_expression(s, scope)).collect::<Result<_>>()?;
        Ok(GameDef {
            players,
            profiles,
            complexity,
            utility,
            budgets,
            utility_range: None,
        })
    }

    pub fn with_utility_range(mut self, lo: Q, hi: Q) -> Self {
        self.utility_range = Some((lo, hi));
        self
    }

    /// A game with one type profile of empty types.
    pub fn single_type(players: usize, complexity: &[&str], utility: &[&str], budgets: Budgets) -> Result<Self> {
        let profile = TypeProfile::new(vec![BitString::empty(); players], BitString::empty(), Q::one());
        Self::new(players, vec![profile], complexity, utility, budgets)
    }

    /// Complexity of one run of `machine` by `player`.
    pub fn cost(&self, player: usize, machine: &Machine, trace: &RunTrace) -> Result<Q> {
        self.complexity[player].complexity(&ComplexityEnv {
            trace,
            metrics: machine.metrics(),
            bits_sent: 0,
        })
    }

    /// Utility of every player at one outcome.
    pub fn payoffs(&self, profile: &TypeProfile, actions: &[Action], costs: &[Q]) -> Vec<Q> {
        let env = UtilityEnv {
            nature: &profile.nature,
            types: &profile.types,
            actions,
            costs,
            bits_sent: &[],
        };
        self.utility.iter().map(|u| u.num(&env)).collect()
    }

    /// Marginal prior of `t` as player `player`'s type.
    pub fn marginal(&self, player: usize, t: &BitString) -> Q {
        self.profiles
            .iter()
            .filter(|p| p.types[player] == *t)
            .fold(Q::zero(), |acc, p| acc + &p.prob)
    }

    /// The distinct types of `player`, in first-appearance order.
    pub fn types_of(&self, player: usize) -> Vec<BitString> {
        let mut out: Vec<BitString> = Vec::new();
        for p in &self.profiles {
            if !out.contains(&p.types[player]) {
                out.push(p.types[player].clone());
            }
        }
        out
    }

    fn check_profile(&self, profile: &[&Machine]) -> Result<()> {
        if profile.len() != self.players {
            return Err(Error::Definition(format!(
                "profile has {} machines for {} players",
                profile.len(),
                self.players
            )));
        }
        Ok(())
    }
}

pub(crate) fn validate_prior(players: usize, profiles: &[TypeProfile]) -> Result<()> {
    if profiles.is_empty() {
        return Err(Error::validation("types", "type table is empty"));
    }
    let mut total = Q::zero();
    for (i, p) in profiles.iter().enumerate() {
        if p.types.len() != players {
            return Err(Error::validation(
                format!("types[{i}]"),
                format!("{} types for {players} players", p.types.len()),
            ));
        }
        if p.prob.is_negative() {
            return Err(Error::validation(format!("types[{i}].prob"), "negative probability"));
        }
        total += &p.prob;
    }
    if !total.is_one() {
        return Err(Error::validation("types", format!("prior sums to {total}, not 1")));
    }
    Ok(())
}

/// One player's exact output distribution on one type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub prob: Q,
    pub action: Action,
    pub cost: Q,
}

/// Exact distribution over `(action, complexity)` of one machine on one type.
pub fn outcome_distribution(g: &GameDef, player: usize, machine: &Machine, t: &BitString) -> Result<Vec<Outcome>> {
    let leaves = enumerate(1, |c| machine.run(t, &mut c[0], g.budgets))?;
    let mut out: Vec<Outcome> = Vec::new();
    for leaf in leaves {
        let cost = g.cost(player, machine, &leaf.value).map_err(|e| match e {
            Error::Eval { message, .. } => Error::Eval {
                branch: format!("player {} machine {} type {t:?}", player + 1, machine.id()),
                message,
            },
            e => e,
        })?;
        match out.iter_mut().find(|o| o.action == leaf.value.output && o.cost == cost) {
            Some(o) => o.prob += leaf.weight,
            None => out.push(Outcome {
                prob: leaf.weight,
                action: leaf.value.output,
                cost,
            }),
        }
    }
    Ok(out)
}

/// One joint leaf of the exact evaluation tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub weight: Q,
    /// Index into the game's type table.
    pub profile: usize,
    pub actions: Vec<Action>,
    pub costs: Vec<Q>,
}

type Slot = usize;

/// Exact engine with per-(player, machine, type) memoization.
///
/// Machines are identified by their full serialized definition, so two
/// candidates sharing an id never share a cache entry.
pub struct ExactEvaluator<'g> {
    game: &'g GameDef,
    slots: RefCell<HashMap<String, Slot>>,
    cache: RefCell<HashMap<(usize, Slot, BitString), Rc<Vec<Outcome>>>>,
}

impl<'g> ExactEvaluator<'g> {
    pub fn new(game: &'g GameDef) -> Self {
        ExactEvaluator {
            game,
            slots: RefCell::default(),
            cache: RefCell::default(),
        }
    }

    pub fn game(&self) -> &'g GameDef {
        self.game
    }

    fn slot(&self, m: &Machine) -> Slot {
        let key = serde_json::to_string(m).expect("machines serialize");
        let mut slots = self.slots.borrow_mut();
        let next = slots.len();
        *slots.entry(key).or_insert(next)
    }

    fn outcomes(&self, player: usize, slot: Slot, m: &Machine, t: &BitString) -> Result<Rc<Vec<Outcome>>> {
        let key = (player, slot, t.clone());
        if let Some(hit) = self.cache.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let fresh = Rc::new(outcome_distribution(self.game, player, m, t)?);
        self.cache.borrow_mut().insert(key, fresh.clone());
        Ok(fresh)
    }

    /// Every joint leaf, weighted by prior and coin probabilities.
    pub fn leaves(&self, profile: &[&Machine]) -> Result<Vec<Leaf>> {
        let g = self.game;
        g.check_profile(profile)?;
        let slots: Vec<Slot> = profile.iter().map(|m| self.slot(m)).collect();
        let mut out = Vec::new();
        for (pi, tp) in g.profiles.iter().enumerate() {
            if tp.prob.is_zero() {
                continue;
            }
            let per_player = (0..g.players)
                .map(|i| self.outcomes(i, slots[i], profile[i], &tp.types[i]))
                .collect::<Result<Vec<_>>>()?;
            let mut partial = vec![(tp.prob.clone(), Vec::new(), Vec::new())];
            for dist in &per_player {
                let mut next = Vec::with_capacity(partial.len() * dist.len());
                for (w, acts, costs) in &partial {
                    for o in dist.iter() {
                        let mut acts: Vec<Action> = acts.clone();
                        let mut costs: Vec<Q> = costs.clone();
                        acts.push(o.action.clone());
                        costs.push(o.cost.clone());
                        next.push((w * &o.prob, acts, costs));
                    }
                }
                partial = next;
            }
            out.extend(partial.into_iter().map(|(weight, actions, costs)| Leaf {
                weight,
                profile: pi,
                actions,
                costs,
            }));
        }
        Ok(out)
    }

    pub fn expected_utility(&self, profile: &[&Machine]) -> Result<Vec<Q>> {
        self.fold(profile, |_| true)
    }

    /// Expected utility of `player` conditioned on their type being `t`.
    pub fn conditional_utility(&self, profile: &[&Machine], player: usize, t: &BitString) -> Result<Q> {
        let g = self.game;
        let marginal = g.marginal(player, t);
        if marginal.is_zero() {
            return Err(Error::ZeroProbability(t.to_string()));
        }
        let joint = self.fold(profile, |tp| tp.types[player] == *t)?;
        Ok(&joint[player] / marginal)
    }

    fn fold(&self, profile: &[&Machine], keep: impl Fn(&TypeProfile) -> bool) -> Result<Vec<Q>> {
        let g = self.game;
        let mut total = vec![Q::zero(); g.players];
        for leaf in self.leaves(profile)? {
            let tp = &g.profiles[leaf.profile];
            if !keep(tp) {
                continue;
            }
            for (acc, u) in total.iter_mut().zip(g.payoffs(tp, &leaf.actions, &leaf.costs)) {
                *acc += &leaf.weight * u;
            }
        }
        Ok(total)
    }
}

pub fn expected_utility_exact(g: &GameDef, profile: &[&Machine]) -> Result<Vec<Q>> {
    ExactEvaluator::new(g).expected_utility(profile)
}

pub fn conditional_utility(g: &GameDef, profile: &[&Machine], player: usize, t: &BitString) -> Result<Q> {
    ExactEvaluator::new(g).conditional_utility(profile, player, t)
}

/// Monte Carlo estimate of expected utility.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    /// Exact sample means.
    pub mean: Vec<Q>,
    pub samples: u64,
    pub range: Option<(Q, Q)>,
}

impl McEstimate {
    /// Hoeffding half-width at `confidence` for a utility range of width `b - a`:
    /// `(b - a) sqrt(ln(2 / (1 - confidence)) / (2 n))`.
    pub fn half_width(&self, confidence: f64) -> Result<f64> {
        let (lo, hi) = self.range.as_ref().ok_or(Error::MissingRange)?;
        let width = q_to_f64(&(hi - lo));
        let delta = 1.0 - confidence;
        Ok(width * ((2.0 / delta).ln() / (2.0 * self.samples as f64)).sqrt())
    }

    /// Per-player `(lo, hi)` confidence intervals.
    pub fn intervals(&self, confidence: f64) -> Result<Vec<(f64, f64)>> {
        let h = self.half_width(confidence)?;
        Ok(self
            .mean
            .iter()
            .map(|m| {
                let m = q_to_f64(m);
                (m - h, m + h)
            })
            .collect())
    }
}

/// Counter-based stream layout: sample `i` draws its type profile from
/// stream `i (m + 1)` and player `p`'s coins from stream `i (m + 1) + 1 + p`,
/// so every sample is independent of evaluation order.
pub fn mc_stream(sample: u64, players: usize, party: Option<usize>) -> u64 {
    let stride = players as u64 + 1;
    sample * stride + party.map_or(0, |p| p as u64 + 1)
}

fn sample_profile(g: &GameDef, rng: &mut ChaCha8Rng) -> usize {
    let lcm = g
        .profiles
        .iter()
        .fold(BigInt::one(), |acc, p| acc.lcm(p.prob.denom()));
    let u = BigInt::from_biguint(Sign::Plus, rng.gen_biguint_below(lcm.magnitude()));
    let mut acc = BigInt::zero();
    for (i, p) in g.profiles.iter().enumerate() {
        acc += p.prob.numer() * (&lcm / p.prob.denom());
        if u < acc {
            return i;
        }
    }
    unreachable!("prior sums to one")
}

pub fn expected_utility_mc(g: &GameDef, profile: &[&Machine], samples: u64, seed: u64) -> Result<McEstimate> {
    g.check_profile(profile)?;
    if samples == 0 {
        return Err(Error::Definition("at least one sample is required".into()));
    }
    let mut total = vec![Q::zero(); g.players];
    for i in 0..samples {
        let mut nature = ChaCha8Rng::seed_from_u64(seed);
        nature.set_stream(mc_stream(i, g.players, None));
        let tp = &g.profiles[sample_profile(g, &mut nature)];
        let mut actions = Vec::with_capacity(g.players);
        let mut costs = Vec::with_capacity(g.players);
        for (p, m) in profile.iter().enumerate() {
            let mut coins = RngCoins::new(seed, mc_stream(i, g.players, Some(p)));
            let trace = m
                .run(&tp.types[p], &mut coins as &mut dyn CoinSource, g.budgets)
                .map_err(Interrupt::into_error)?;
            costs.push(g.cost(p, m, &trace)?);
            actions.push(trace.output);
        }
        for (acc, u) in total.iter_mut().zip(g.payoffs(tp, &actions, &costs)) {
            *acc += u;
        }
    }
    let n = Q::from_integer(samples.into());
    Ok(McEstimate {
        mean: total.into_iter().map(|t| t / &n).collect(),
        samples,
        range: g.utility_range.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{DeclaredMachine, DeclaredMetrics};
    use crate::rational::{q, qi, Dyadic, DyadicDist};

    const PAYOFF: &str = "(if a1 == a2 then 0 else if a2 == rot(a1) then -1 else 1)";

    fn roshambo() -> GameDef {
        let u1 = format!("{PAYOFF} - c1");
        let u2 = "(if a1 == a2 then 0 else if a1 == rot(a2) then -1 else 1) - c2".to_string();
        GameDef::single_type(
            2,
            &["if randomized then 2 else 1"; 2],
            &[&u1, &u2],
            Budgets::default(),
        )
        .unwrap()
    }

    fn half_half() -> Machine {
        Machine::Declared(DeclaredMachine::uniform(
            "mix01",
            DyadicDist::new(vec![("0".into(), Dyadic::half()), ("1".into(), Dyadic::half())]).unwrap(),
            DeclaredMetrics::new(1, 1, true),
        ))
    }

    #[test]
    fn rock_versus_paper() {
        let g = roshambo();
        let r = Machine::Declared(DeclaredMachine::constant("const-0", "0"));
        let p = Machine::Declared(DeclaredMachine::constant("const-1", "1"));
        assert_eq!(expected_utility_exact(&g, &[&r, &p]).unwrap(), vec![qi(-2), qi(0)]);
    }

    /// One coin: rock vs scissors gives (1, -1), paper vs scissors (-1, 1);
    /// costs 2 and 1.
    #[test]
    fn mixer_against_scissors_by_hand() {
        let g = roshambo();
        let s = Machine::Declared(DeclaredMachine::constant("const-2", "2"));
        let u = expected_utility_exact(&g, &[&half_half(), &s]).unwrap();
        assert_eq!(u, vec![qi(-2), qi(-1)]);
    }

    #[test]
    fn conditional_on_single_type_is_unconditional() {
        let g = roshambo();
        let s = Machine::Declared(DeclaredMachine::constant("const-2", "2"));
        let ev = ExactEvaluator::new(&g);
        let c = ev.conditional_utility(&[&half_half(), &s], 0, &BitString::empty()).unwrap();
        assert_eq!(c, ev.expected_utility(&[&half_half(), &s]).unwrap()[0]);
        assert!(matches!(
            ev.conditional_utility(&[&half_half(), &s], 0, &"1".into()),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn prior_must_sum_to_one() {
        let tp = |t: &str| TypeProfile::new(vec![t.into()], BitString::empty(), q(1, 3));
        let err = GameDef::new(1, vec![tp("0"), tp("1")], &["0"], &["0"], Budgets::default());
        assert!(matches!(err, Err(Error::Validation { .. })));
    }

    #[test]
    fn mc_is_seed_deterministic_and_needs_a_range() {
        let g = roshambo();
        let s = Machine::Declared(DeclaredMachine::constant("const-2", "2"));
        let a = expected_utility_mc(&g, &[&half_half(), &s], 200, 7).unwrap();
        let b = expected_utility_mc(&g, &[&half_half(), &s], 200, 7).unwrap();
        assert_eq!(a, b);
        assert!(matches!(a.half_width(0.95), Err(Error::MissingRange)));
        let ranged = g.clone().with_utility_range(qi(-3), qi(1));
        let est = expected_utility_mc(&ranged, &[&half_half(), &s], 10_000, 7).unwrap();
        let exact = expected_utility_exact(&ranged, &[&half_half(), &s]).unwrap();
        for ((lo, hi), e) in est.intervals(0.99).unwrap().into_iter().zip(exact) {
            let e = q_to_f64(&e);
            assert!(lo <= e && e <= hi, "{lo} <= {e} <= {hi}");
        }
    }

    #[test]
    fn mc_on_deterministic_profile_is_exact() {
        let g = roshambo();
        let r = Machine::Declared(DeclaredMachine::constant("const-0", "0"));
        let s = Machine::Declared(DeclaredMachine::constant("const-2", "2"));
        let est = expected_utility_mc(&g, &[&r, &s], 1, 3).unwrap();
        assert_eq!(est.mean, expected_utility_exact(&g, &[&r, &s]).unwrap());
    }
}
