//! Best-response gaps and ε-Nash certification over explicit candidate sets.
//!
//! Every claim is relative to the finite candidate sets supplied; the
//! certificate records each set's provenance note.

mod normal_form;

pub use normal_form::{
    induced_normal_form, lmm_small_support_search, mixed_gaps, solve_2p_support_enumeration, MatrixGame, MixedProfile,
    PayoffTensor, SmallSupport, SupportEnumeration,
};

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::ExactEvaluator;
use crate::machine::Machine;
use crate::rational::{serde_q, serde_q_vec, Q};

/// Anything that can appear in a candidate set.
pub trait Identified {
    fn id(&self) -> &str;
}

impl Identified for Machine {
    fn id(&self) -> &str {
        Machine::id(self)
    }
}

/// A game whose expected utilities can be computed exactly for any profile.
pub trait StrategicGame {
    type Strategy: Identified;

    fn player_count(&self) -> usize;

    fn utilities(&self, profile: &[&Self::Strategy]) -> Result<Vec<Q>>;
}

impl StrategicGame for ExactEvaluator<'_> {
    type Strategy = Machine;

    fn player_count(&self) -> usize {
        self.game().players
    }

    fn utilities(&self, profile: &[&Machine]) -> Result<Vec<Q>> {
        self.expected_utility(profile)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Mc,
}

/// An ordered, nonempty set of strategies with unique ids.
#[derive(Clone, Debug)]
pub struct CandidateSet<S> {
    items: Vec<S>,
    pub provenance: String,
}

impl<S: Identified> CandidateSet<S> {
    pub fn new(items: Vec<S>, provenance: impl Into<String>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Definition("candidate set is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &items {
            if !seen.insert(s.id()) {
                return Err(Error::Definition(format!("duplicate candidate id {}", s.id())));
            }
        }
        Ok(CandidateSet {
            items,
            provenance: provenance.into(),
        })
    }

    pub fn items(&self) -> &[S] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&S> {
        self.items.iter().find(|s| s.id() == id)
    }
}

/// Result of one player's best-response check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerGap {
    pub player: usize,
    #[serde(with = "serde_q")]
    pub gap: Q,
    pub argmax: String,
    /// Every deviation to a different id is strictly worse.
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub profile: Vec<String>,
    #[serde(with = "serde_q_vec")]
    pub utilities: Vec<Q>,
    pub gaps: Vec<PlayerGap>,
    #[serde(with = "serde_q")]
    pub epsilon: Q,
    pub engine: Engine,
    pub provenance: Vec<String>,
    pub strict: bool,
    pub verdict: bool,
}

impl EquilibriumCertificate {
    pub fn max_gap(&self) -> &Q {
        self.gaps.iter().map(|g| &g.gap).max().expect("at least one player")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }

    /// One row per player.
    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "profile: {} | epsilon: {} | engine: {:?} | verdict: {} | strict: {}\n\n",
            self.profile.join(", "),
            self.epsilon,
            self.engine,
            if self.verdict { "epsilon-NE" } else { "not an epsilon-NE" },
            self.strict
        );
        out.push_str("| player | machine | utility | gap | argmax deviation | strict | candidates |\n");
        out.push_str("|---|---|---|---|---|---|---|\n");
        for (g, (id, (u, prov))) in self
            .gaps
            .iter()
            .zip(self.profile.iter().zip(self.utilities.iter().zip(&self.provenance)))
        {
            let _ = writeln!(
                out,
                "| {} | {id} | {u} | {} | {} | {} | {prov} |",
                g.player + 1,
                g.gap,
                g.argmax,
                g.strict
            );
        }
        out
    }
}

fn with_deviation<'a, S>(profile: &[&'a S], player: usize, dev: &'a S) -> Vec<&'a S> {
    let mut p = profile.to_vec();
    p[player] = dev;
    p
}

fn gap_from_values<'a>(base: &Q, own_id: &str, values: impl IntoIterator<Item = (&'a str, Q)>) -> (Q, String, bool) {
    let mut best: Option<(Q, &str)> = None;
    let mut strict = true;
    for (id, u) in values {
        let gap = u - base;
        if id != own_id && !gap.is_negative() {
            strict = false;
        }
        let better = match &best {
            None => true,
            Some((g, bid)) => gap > *g || (gap == *g && id < *bid),
        };
        if better {
            best = Some((gap, id));
        }
    }
    let (gap, id) = best.expect("nonempty candidate set");
    (gap, id.to_string(), strict)
}

/// Largest gain from a unilateral deviation by `player` within `candidates`.
pub fn best_response_gap<G: StrategicGame>(
    game: &G,
    profile: &[&G::Strategy],
    player: usize,
    candidates: &CandidateSet<G::Strategy>,
) -> Result<(Q, String)> {
    let base = game.utilities(profile)?[player].clone();
    let (gap, id, _) = player_gap(game, profile, player, candidates, &base)?;
    Ok((gap, id))
}

fn player_gap<G: StrategicGame>(
    game: &G,
    profile: &[&G::Strategy],
    player: usize,
    candidates: &CandidateSet<G::Strategy>,
    base: &Q,
) -> Result<(Q, String, bool)> {
    let values = candidates
        .items()
        .iter()
        .map(|c| Ok((c.id(), game.utilities(&with_deviation(profile, player, c))?[player].clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(gap_from_values(base, profile[player].id(), values))
}

pub fn certify_epsilon_nash<G: StrategicGame>(
    game: &G,
    profile: &[&G::Strategy],
    candidates: &[CandidateSet<G::Strategy>],
    epsilon: &Q,
) -> Result<EquilibriumCertificate> {
    let m = game.player_count();
    if profile.len() != m || candidates.len() != m {
        return Err(Error::Definition(format!(
            "{m} players but {} profile entries and {} candidate sets",
            profile.len(),
            candidates.len()
        )));
    }
    let utilities = game.utilities(profile)?;
    let gaps = (0..m)
        .map(|i| {
            let (gap, argmax, strict) = player_gap(game, profile, i, &candidates[i], &utilities[i])?;
            Ok(PlayerGap {
                player: i,
                gap,
                argmax,
                strict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(
        profile.iter().map(|s| s.id().to_string()).collect(),
        utilities,
        gaps,
        epsilon,
        candidates.iter().map(|c| c.provenance.clone()).collect(),
    ))
}

fn assemble(
    profile: Vec<String>,
    utilities: Vec<Q>,
    gaps: Vec<PlayerGap>,
    epsilon: &Q,
    provenance: Vec<String>,
) -> EquilibriumCertificate {
    let verdict = gaps.iter().all(|g| g.gap <= *epsilon);
    let strict = gaps.iter().all(|g| g.strict);
    EquilibriumCertificate {
        profile,
        utilities,
        gaps,
        epsilon: epsilon.clone(),
        engine: Engine::Exact,
        provenance,
        strict,
        verdict,
    }
}

/// Default cap on the number of profiles `search_pure_nash` will enumerate.
pub const DEFAULT_PROFILE_CAP: u128 = 1_000_000;

/// Every ε-NE in the product of the candidate sets, in lexicographic order
/// of candidate indices.
pub fn search_pure_nash<G: StrategicGame>(
    game: &G,
    candidates: &[CandidateSet<G::Strategy>],
    epsilon: &Q,
    cap: u128,
) -> Result<Vec<EquilibriumCertificate>> {
    let m = game.player_count();
    if candidates.len() != m {
        return Err(Error::Definition(format!("{m} players but {} candidate sets", candidates.len())));
    }
    let size = candidates.iter().map(|c| c.len() as u128).product::<u128>();
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    let mut table: HashMap<Vec<usize>, Vec<Q>> = HashMap::new();
    let mut lookup = |idx: &[usize]| -> Result<Vec<Q>> {
        if let Some(u) = table.get(idx) {
            return Ok(u.clone());
        }
        let profile: Vec<&G::Strategy> = idx.iter().enumerate().map(|(i, &j)| &candidates[i].items()[j]).collect();
        let u = game.utilities(&profile)?;
        table.insert(idx.to_vec(), u.clone());
        Ok(u)
    };
    let mut found = Vec::new();
    let mut idx = vec![0usize; m];
    'profiles: loop {
        let utilities = lookup(&idx)?;
        let mut gaps = Vec::with_capacity(m);
        for i in 0..m {
            let mut values = Vec::with_capacity(candidates[i].len());
            for (j, c) in candidates[i].items().iter().enumerate() {
                let mut dev = idx.clone();
                dev[i] = j;
                values.push((c.id(), lookup(&dev)?[i].clone()));
            }
            let own = candidates[i].items()[idx[i]].id();
            let (gap, argmax, strict) = gap_from_values(&utilities[i], own, values);
            if gap > *epsilon {
                break;
            }
            gaps.push(PlayerGap {
                player: i,
                gap,
                argmax,
                strict,
            });
        }
        if gaps.len() == m {
            found.push(assemble(
                idx.iter().enumerate().map(|(i, &j)| candidates[i].items()[j].id().to_string()).collect(),
                utilities,
                gaps,
                epsilon,
                candidates.iter().map(|c| c.provenance.clone()).collect(),
            ));
        }
        for i in (0..m).rev() {
            idx[i] += 1;
            if idx[i] < candidates[i].len() {
                continue 'profiles;
            }
            idx[i] = 0;
        }
        break;
    }
    Ok(found)
}
