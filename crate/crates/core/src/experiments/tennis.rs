//! Serving against a predictor.
//!
//! Player 1 emits bits `x_0 .. x_{l-1}`; in round `i` player 2 either passes
//! or guesses `x_i` having seen `x_0 .. x_{i-1}`. A correct guess scores +1
//! for player 2 and -1 for player 1, a wrong one the reverse, a pass 0.
//! Player 1 pays `l + 1` for reading more than `l0` coins; player 2 pays
//! `p0` for any machine that ever guesses.
//!
//! Player 2's machines are per-round tables from observed prefixes to
//! guesses, which include the best possible predictor for every position.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::bits::BitString;
use crate::equilibrium::{certify_epsilon_nash, CandidateSet, Identified, StrategicGame};
use crate::error::{Error, Result};
use crate::rational::{q, Q};
use crate::report::{Report, Rule, Table};

/// Generators `{0,1}^l0 -> {0,1}^l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    /// All zeros, whatever the seed.
    Constant,
    /// The seed, then zeros.
    IdentityPrefix,
    /// The seed, then `x_t = x_{t-4} xor x_{t-3}`; needs `l0 >= 4`.
    Lfsr4,
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Generator::Constant),
            "identity" => Ok(Generator::IdentityPrefix),
            "lfsr4" => Ok(Generator::Lfsr4),
            other => Err(Error::Definition(format!("unknown generator {other}"))),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Constant => "constant",
            Generator::IdentityPrefix => "identity",
            Generator::Lfsr4 => "lfsr4",
        })
    }
}

pub const MAX_SEED_BITS: usize = 16;
pub const MAX_OUTPUT_BITS: usize = 20;

impl Generator {
    /// Output for `seed`, whose bit `j` (from the most significant of `l0`)
    /// is seed bit `j`.
    pub fn expand(self, seed: u32, ell0: usize, ell: usize) -> Vec<bool> {
        let seed_bit = |j: usize| (seed >> (ell0 - 1 - j)) & 1 == 1;
        let mut x = Vec::with_capacity(ell);
        for t in 0..ell {
            let bit = match self {
                Generator::Constant => false,
                Generator::IdentityPrefix => t < ell0 && seed_bit(t),
                Generator::Lfsr4 => {
                    if t < ell0 {
                        seed_bit(t)
                    } else {
                        x[t - 4] ^ x[t - 3]
                    }
                }
            };
            x.push(bit);
        }
        x
    }

    fn check(self, ell0: usize, ell: usize) -> Result<()> {
        if ell0 == 0 || ell0 > MAX_SEED_BITS {
            return Err(Error::validation("tennis-prg.ell0", format!("must be between 1 and {MAX_SEED_BITS}")));
        }
        if ell == 0 || ell > MAX_OUTPUT_BITS {
            return Err(Error::validation("tennis-prg.ell", format!("must be between 1 and {MAX_OUTPUT_BITS}")));
        }
        if self == Generator::Lfsr4 && ell0 < 4 {
            return Err(Error::validation("tennis-prg.ell0", "lfsr4 needs a seed of at least 4 bits"));
        }
        Ok(())
    }
}

fn prefix_key(x: &[bool]) -> BitString {
    x.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>().parse().expect("binary")
}

/// For each position `i`, counts of `(x_i = 0, x_i = 1)` per observed key.
/// The key is the last `window` bits of the prefix (all of it when `window`
/// is `None`).
fn position_counts(outputs: &[Vec<bool>], ell: usize, window: Option<usize>) -> Vec<HashMap<BitString, [u64; 2]>> {
    (0..ell)
        .map(|i| {
            let mut counts: HashMap<BitString, [u64; 2]> = HashMap::new();
            for x in outputs {
                let from = window.map_or(0, |w| i.saturating_sub(w));
                counts.entry(prefix_key(&x[from..i])).or_default()[usize::from(x[i])] += 1;
            }
            counts
        })
        .collect()
}

fn all_outputs(g: Generator, ell0: usize, ell: usize) -> Vec<Vec<bool>> {
    (0..1u32 << ell0).map(|s| g.expand(s, ell0, ell)).collect()
}

fn advantage(counts: &[HashMap<BitString, [u64; 2]>], seeds: u64) -> Q {
    counts
        .iter()
        .map(|c| {
            let hits: u64 = c.values().map(|[a, b]| *a.max(b)).sum();
            Q::new(hits.into(), seeds.into()) - q(1, 2)
        })
        .max()
        .unwrap_or_else(Q::zero)
}

/// `max_i (success of the best next-bit predictor at position i) - 1/2`
/// over uniform seeds. Fails when `ell <= ell0`: the generator does not
/// expand, so there are no positions to predict.
pub fn prg_max_advantage(g: Generator, ell0: usize, ell: usize) -> Result<Q> {
    g.check(ell0, ell)?;
    if ell <= ell0 {
        return Err(Error::Definition(format!("no expansion: output length {ell} <= seed length {ell0}")));
    }
    let outputs = all_outputs(g, ell0, ell);
    Ok(advantage(&position_counts(&outputs, ell, None), outputs.len() as u64))
}

/// As [`prg_max_advantage`], for predictors that see only the last
/// `window` bits.
pub fn prg_advantage_windowed(g: Generator, ell0: usize, ell: usize, window: usize) -> Result<Q> {
    g.check(ell0, ell)?;
    let outputs = all_outputs(g, ell0, ell);
    Ok(advantage(&position_counts(&outputs, ell, Some(window)), outputs.len() as u64))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Server {
    /// Reads `l0` coins as a seed and plays `g(seed)`.
    Prg(Generator),
    /// Reads `l` coins and plays them.
    TrulyRandom,
    Zeros,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TennisStrategy {
    Server(Server),
    Pass,
    /// `rounds[i]` maps an observed prefix of length `i` to a guess.
    Predictor { id: String, rounds: Vec<BTreeMap<BitString, bool>> },
}

impl TennisStrategy {
    fn guesses(&self) -> bool {
        matches!(self, TennisStrategy::Predictor { rounds, .. } if rounds.iter().any(|r| !r.is_empty()))
    }
}

impl Identified for TennisStrategy {
    fn id(&self) -> &str {
        match self {
            TennisStrategy::Server(Server::Prg(_)) => "prg",
            TennisStrategy::Server(Server::TrulyRandom) => "truly-random",
            TennisStrategy::Server(Server::Zeros) => "zeros",
            TennisStrategy::Pass => "pass",
            TennisStrategy::Predictor { id, .. } => id,
        }
    }
}

pub struct TennisGame {
    pub ell0: usize,
    pub ell: usize,
    pub p0: Q,
}

impl TennisGame {
    /// Uniform distribution over player 1's output strings, as a list of
    /// equally likely outputs.
    fn outputs(&self, s: &Server) -> Vec<Vec<bool>> {
        match s {
            Server::Prg(g) => all_outputs(*g, self.ell0, self.ell),
            Server::TrulyRandom => (0..1u32 << self.ell)
                .map(|v| (0..self.ell).map(|t| (v >> (self.ell - 1 - t)) & 1 == 1).collect())
                .collect(),
            Server::Zeros => vec![vec![false; self.ell]],
        }
    }

    fn server_penalty(&self, s: &Server) -> Q {
        let coins = match s {
            Server::Prg(_) => self.ell0,
            Server::TrulyRandom => self.ell,
            Server::Zeros => 0,
        };
        if coins > self.ell0 {
            Q::from_integer((self.ell as i64 + 1).into())
        } else {
            Q::zero()
        }
    }

    /// Expected score of player 2.
    fn score(outputs: &[Vec<bool>], rounds: &[BTreeMap<BitString, bool>]) -> Q {
        let mut total: i64 = 0;
        for x in outputs {
            for (i, table) in rounds.iter().enumerate().take(x.len()) {
                if let Some(&guess) = table.get(&prefix_key(&x[..i])) {
                    total += if guess == x[i] { 1 } else { -1 };
                }
            }
        }
        Q::new(total.into(), (outputs.len() as i64).into())
    }

    /// The table maximizing player 2's utility against `s` over all
    /// per-round tables, with the pass machine as the fallback when no table
    /// beats it. Rounds separate, and so do prefixes within a round: every
    /// cell whose majority guess has positive expected score is kept; if none
    /// has, the single least bad cell is used so that the table guesses.
    pub fn best_table(&self, s: &Server) -> TennisStrategy {
        let outputs = self.outputs(s);
        let counts = position_counts(&outputs, self.ell, None);
        let mut rounds = vec![BTreeMap::new(); self.ell];
        let mut fallback: Option<(i64, usize, BitString, bool)> = None;
        for (i, c) in counts.iter().enumerate() {
            let mut keys: Vec<&BitString> = c.keys().collect();
            keys.sort();
            for key in keys {
                let [zeros, ones] = c[key];
                let guess = ones > zeros;
                let margin = ones as i64 - zeros as i64;
                let margin = if guess { margin } else { -margin };
                if margin > 0 {
                    rounds[i].insert(key.clone(), guess);
                } else if fallback.as_ref().map_or(true, |(m, ..)| margin > *m) {
                    fallback = Some((margin, i, key.clone(), guess));
                }
            }
        }
        if rounds.iter().all(BTreeMap::is_empty) {
            if let Some((_, i, key, guess)) = fallback {
                rounds[i].insert(key, guess);
            }
        }
        TennisStrategy::Predictor {
            id: format!("best-table-vs-{}", TennisStrategy::Server(s.clone()).id()),
            rounds,
        }
    }
}

impl StrategicGame for TennisGame {
    type Strategy = TennisStrategy;

    fn player_count(&self) -> usize {
        2
    }

    fn utilities(&self, profile: &[&TennisStrategy]) -> Result<Vec<Q>> {
        let TennisStrategy::Server(s) = profile[0] else {
            return Err(Error::Definition(format!("{} is not a server", profile[0].id())));
        };
        let (score, pen2) = match profile[1] {
            TennisStrategy::Pass => (Q::zero(), Q::zero()),
            p @ TennisStrategy::Predictor { rounds, .. } => {
                let pen = if p.guesses() { self.p0.clone() } else { Q::zero() };
                (Self::score(&self.outputs(s), rounds), pen)
            }
            other => return Err(Error::Definition(format!("{} is not a receiver", other.id()))),
        };
        Ok(vec![-score.clone() - self.server_penalty(s), score - pen2])
    }
}

pub fn exp_tennis_prg(ell0: usize, ell: usize, g: Generator, p0: Option<Q>) -> Result<Report> {
    g.check(ell0, ell)?;
    let mut report = Report::new("tennis-prg");
    report.param("ell0", ell0);
    report.param("ell", ell);
    report.param("generator", g);

    let outputs = all_outputs(g, ell0, ell);
    let counts = position_counts(&outputs, ell, None);
    let seeds = outputs.len() as u64;
    let mut positions = Table::new("positions", &["i", "bestSuccess", "advantage"]);
    for (i, c) in counts.iter().enumerate() {
        let hits: u64 = c.values().map(|[a, b]| *a.max(b)).sum();
        let success = Q::new(hits.into(), seeds.into());
        let adv = &success - q(1, 2);
        positions.push(vec![i.into(), success.into(), adv.into()]);
    }
    report.table(positions);

    let mut expansion = Table::new("expansion", &["quantity", "value"]);
    expansion.push(vec!["noExpansion".into(), (ell <= ell0).into()]);
    let eps = match prg_max_advantage(g, ell0, ell) {
        Ok(e) => Some(e),
        Err(Error::Definition(_)) => None,
        Err(e) => return Err(e),
    };
    report.table(expansion);
    report.finding(
        "noExpansion",
        Rule::CellEquals {
            cell: crate::report::cell("expansion", "noExpansion", "value"),
            value: "true".into(),
        },
    );
    let Some(eps) = eps else {
        report.note("output is no longer than the seed; the generator does not expand and no certificate is issued");
        return Ok(report);
    };
    let p0 = p0.unwrap_or_else(|| &eps * Q::from_integer((ell as i64).into()) + Q::one());
    if p0.is_negative() {
        return Err(Error::validation("tennis-prg.p0", "must be nonnegative"));
    }
    report.param("p0", &p0);

    let game = TennisGame { ell0, ell, p0: p0.clone() };
    let server = Server::Prg(g);
    let best = game.best_table(&server);
    let (best_score, best_pen) = {
        let u = game.utilities(&[&TennisStrategy::Server(server.clone()), &best])?;
        (u[1].clone() + &p0, p0.clone())
    };
    let mut summary = Table::new("summary", &["quantity", "value"]);
    summary.push(vec!["epsilonStar".into(), (&eps).into()]);
    summary.push(vec!["p0".into(), (&p0).into()]);
    summary.push(vec!["bestPredictorScore".into(), best_score.into()]);
    summary.push(vec!["bestPredictorPenalty".into(), best_pen.into()]);
    report.table(summary);

    let servers = CandidateSet::new(
        vec![
            TennisStrategy::Server(server.clone()),
            TennisStrategy::Server(Server::TrulyRandom),
            TennisStrategy::Server(Server::Zeros),
        ],
        "seeded generator, truly random, all zeros",
    )?;
    let receivers = CandidateSet::new(
        vec![TennisStrategy::Pass, best],
        "always pass and every per-round prefix table; the optimal table is constructed exactly",
    )?;
    let profile = [&servers.items()[0], &receivers.items()[0]];
    let cert = certify_epsilon_nash(&game, &profile, &[servers.clone(), receivers.clone()], &Q::zero())?;
    report.certificate("prg-vs-pass", true, cert);
    report.finding(
        "prgEquilibrium",
        Rule::CellEquals {
            cell: crate::report::cell("certificates", "prg-vs-pass", "verdict"),
            value: "true".into(),
        },
    );
    report.note("the predictor class is every per-round prefix table, which dominates any time-bounded class");
    Ok(report)
}
