//! Forward evaluation of two-transducer repeated games.
//!
//! Enumerating transcripts costs one branch per coin path, which is
//! exponential in the number of rounds for randomized transducers. Here the
//! joint distribution over (states, last observations) is pushed forward
//! round by round instead; the result is the same exact expectation that
//! [`expected_utility_mediated`](crate::mediated::expected_utility_mediated)
//! computes for games built by
//! [`make_repeated_game`](crate::mediated::make_repeated_game).

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::bits::Action;
use crate::equilibrium::{Identified, StrategicGame};
use crate::error::{Error, Result};
use crate::expr::{Metric, Var};
use crate::game::{ComplexityEnv, UtilityEnv};
use crate::machine::{Move, RunTrace, Transducer};
use crate::mediated::{MediatedGameDef, Mediator};
use crate::rational::Q;

impl Identified for Transducer {
    fn id(&self) -> &str {
        &self.id
    }
}

/// A relay-mediated two-player repeated game whose complexity models use
/// only static metrics, evaluated by forward propagation.
pub struct MarkovRepeated<'g> {
    game: &'g MediatedGameDef,
}

type Joint = (usize, usize, Move, Move);

impl<'g> MarkovRepeated<'g> {
    pub fn new(game: &'g MediatedGameDef) -> Result<Self> {
        let def = &game.game;
        if def.players != 2 || game.mediator != Mediator::Relay || def.profiles.len() != 1 || game.stream.is_none() {
            return Err(Error::Definition(
                "forward evaluation needs a two-player relay game with one type profile and a payoff stream".into(),
            ));
        }
        for c in &def.complexity {
            for v in c.variables() {
                if !matches!(v, Var::Metric(Metric::StateCount | Metric::Randomized)) {
                    return Err(Error::Definition(format!(
                        "complexity `{c}` mentions {v}, which varies between runs"
                    )));
                }
            }
        }
        Ok(MarkovRepeated { game })
    }

    pub fn game(&self) -> &'g MediatedGameDef {
        self.game
    }

    fn costs(&self, profile: &[&Transducer]) -> Result<Vec<Q>> {
        let placeholder = RunTrace {
            output: Action::Bot,
            steps: 0,
            coin_bits: 0,
            input_bits: 0,
            output_len: 0,
            budget_exceeded: false,
        };
        profile
            .iter()
            .zip(&self.game.game.complexity)
            .map(|(t, c)| {
                c.complexity(&ComplexityEnv {
                    trace: &placeholder,
                    metrics: t.metrics(),
                    bits_sent: 0,
                })
            })
            .collect()
    }

    /// Exact discounted utilities of a transducer pair.
    pub fn utilities(&self, profile: &[&Transducer]) -> Result<Vec<Q>> {
        if profile.len() != 2 {
            return Err(Error::Definition("repeated games have two players".into()));
        }
        let def = &self.game.game;
        let stream = self.game.stream.as_ref().expect("checked in new");
        let tp = &def.profiles[0];
        let costs = self.costs(profile)?;
        let no_bits = [0u64, 0];
        let word = |m: Option<Move>| m.map_or(Action::Bot, |m| Action::word(m.label()));
        let moves = [None, Some(Move::C), Some(Move::D)];
        let mut stage_pay: BTreeMap<(Option<Move>, Option<Move>), Vec<Q>> = BTreeMap::new();
        let mut final_pay: BTreeMap<(Option<Move>, Option<Move>), Vec<Q>> = BTreeMap::new();
        for &a in &moves {
            for &b in &moves {
                let actions = [word(a), word(b)];
                let env = UtilityEnv {
                    nature: &tp.nature,
                    types: &tp.types,
                    actions: &actions,
                    costs: &costs,
                    bits_sent: &no_bits,
                };
                stage_pay.insert((a, b), stream.payoffs.iter().map(|e| e.num(&env)).collect());
                final_pay.insert((a, b), def.utility.iter().map(|e| e.num(&env)).collect());
            }
        }

        let budgets = def.budgets;
        let step = |t: &Transducer, round: usize, state: usize, obs: Move| -> Vec<(Option<Move>, usize, Q)> {
            let dist = if round == 0 { t.first() } else { t.transition(state, obs) };
            let bits = if dist.is_point() { 0 } else { u64::from(dist.bits()) };
            if bits > budgets.coins || budgets.steps == 0 {
                return vec![(None, state, Q::one())];
            }
            dist.outcomes().iter().map(|((m, s), w)| (Some(*m), *s, w.to_q())).collect()
        };

        let mut total = vec![Q::zero(); 2];
        let mut weight = Q::one();
        let mut dist: BTreeMap<Joint, Q> = BTreeMap::new();
        dist.insert((profile[0].start(), profile[1].start(), Move::D, Move::D), Q::one());
        for round in 0..self.game.stages {
            weight *= &stream.delta;
            let last = round + 1 == self.game.stages;
            let mut next: BTreeMap<Joint, Q> = BTreeMap::new();
            for ((s1, s2, o1, o2), p) in &dist {
                for (m1, n1, w1) in step(profile[0], round, *s1, *o1) {
                    for (m2, n2, w2) in step(profile[1], round, *s2, *o2) {
                        let w = p * &w1 * &w2;
                        for (acc, r) in total.iter_mut().zip(&stage_pay[&(m1, m2)]) {
                            *acc += &weight * &w * r;
                        }
                        if last {
                            for (acc, u) in total.iter_mut().zip(&final_pay[&(m1, m2)]) {
                                *acc += &w * u;
                            }
                        } else {
                            // The relay shows each player the other's move; BOT
                            // arrives as the empty message, read as D.
                            let key = (n1, n2, m2.unwrap_or(Move::D), m1.unwrap_or(Move::D));
                            *next.entry(key).or_insert_with(Q::zero) += w;
                        }
                    }
                }
            }
            dist = next;
        }
        Ok(total)
    }
}

impl StrategicGame for MarkovRepeated<'_> {
    type Strategy = Transducer;

    fn player_count(&self) -> usize {
        2
    }

    fn utilities(&self, profile: &[&Transducer]) -> Result<Vec<Q>> {
        MarkovRepeated::utilities(self, profile)
    }
}
