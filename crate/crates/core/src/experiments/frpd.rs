//! Finitely repeated prisoner's dilemma where memory costs `alpha`.
//!
//! Machines are transducers; any transducer with more than one state pays
//! `alpha`. Tit for tat is the one-state transducer `det-CCD`.

use num_traits::{One, Signed, Zero};

use crate::bits::BitString;
use crate::coins::BitCoins;
use crate::equilibrium::{certify_epsilon_nash, CandidateSet};
use crate::error::{Error, Result};
use crate::machine::{deterministic_memoryless, Move, Transducer};
use crate::mediated::{
    execute_mediated, expected_utility_mediated, geometric_stream, make_repeated_game, prisoners_dilemma,
    InteractiveMachine, MediatedGameDef,
};
use crate::rational::{pow_q, qi, Dyadic, DyadicDist, Q};
use crate::repeated::MarkovRepeated;
use crate::report::{cell, Report, Rule, Table};

use super::dyadic_exponent;

pub const TIT_FOR_TAT: &str = "det-CCD";

pub fn frpd_game(rounds: usize, delta: &Q, alpha: &Q) -> Result<MediatedGameDef> {
    make_repeated_game(&prisoners_dilemma(), rounds, delta.clone(), &format!("if stateCount > 1 then {alpha} else 0"))
}

/// Memoryless transducers cooperating with probabilities `(first, after C,
/// after D)` on the grid `j / 2^exp`, excluding the eight deterministic ones.
pub fn memoryless_mixers(exp: u32) -> Vec<Transducer> {
    let top = 1u64 << exp;
    let mut out = Vec::new();
    for a in 0..=top {
        for b in 0..=top {
            for c in 0..=top {
                if [a, b, c].iter().all(|&x| x == 0 || x == top) {
                    continue;
                }
                let d = |x| Dyadic::new(x, exp).expect("on the grid");
                out.push(Transducer::memoryless_mixed(format!("mix-{a}-{b}-{c}of{top}"), d(a), d(b), d(c)));
            }
        }
    }
    out
}

/// Tit for tat until round `k - 1`, then defect for good, for `k = 2..=N`,
/// plus grim trigger.
pub fn counters(rounds: usize) -> Vec<Transducer> {
    let mut out: Vec<Transducer> = (2..=rounds)
        .map(|k| Transducer::defect_from_round(format!("tft-defect-from-{k}"), k))
        .collect();
    out.push(Transducer::grim_trigger("grim"));
    out
}

pub fn candidate_pool(rounds: usize, exp: u32) -> Vec<Transducer> {
    let mut pool = deterministic_memoryless();
    pool.extend(memoryless_mixers(exp));
    pool.extend(counters(rounds));
    pool
}

fn tit_for_tat() -> Transducer {
    deterministic_memoryless()
        .into_iter()
        .find(|t| t.id == TIT_FOR_TAT)
        .expect("tit for tat is memoryless")
}

/// Moves of a deterministic pair, from one transcript.
fn deterministic_moves(g: &MediatedGameDef, a: &Transducer, b: &Transducer) -> Result<Vec<(String, String)>> {
    let (ia, ib) = (InteractiveMachine::Transducer(a.clone()), InteractiveMachine::Transducer(b.clone()));
    let mut coins = vec![BitCoins::new(BitString::empty()); 3];
    let tr = execute_mediated(&[&ia, &ib], &g.mediator, g.stages, &[BitString::empty(), BitString::empty()], &mut coins, g.game.budgets)?;
    Ok(tr
        .stages
        .iter()
        .map(|s| (s.actions[0].as_word().unwrap_or("BOT").to_string(), s.actions[1].as_word().unwrap_or("BOT").to_string()))
        .collect())
}

pub fn exp_frpd(rounds: usize, delta: Q, alpha: Option<Q>, bound: usize) -> Result<Report> {
    if rounds < 2 {
        return Err(Error::validation("frpd.N", "need at least two rounds"));
    }
    if delta <= Q::zero() || delta > Q::one() {
        return Err(Error::validation("frpd.delta", "must lie in (0, 1]"));
    }
    if bound < 2 {
        return Err(Error::validation("frpd.bound", "must be at least 2"));
    }
    let two_delta_n = qi(2) * pow_q(&delta, rounds as u32);
    let alpha = alpha.unwrap_or_else(|| two_delta_n.clone());
    if alpha.is_negative() {
        return Err(Error::validation("frpd.alpha", "must be nonnegative"));
    }
    let exp = dyadic_exponent(bound);
    let n = rounds as u32;

    let mut report = Report::new("frpd");
    report.param("N", rounds);
    report.param("delta", &delta);
    report.param("alpha", &alpha);
    report.param("bound", bound);

    let pool = candidate_pool(rounds, exp);
    let provenance = format!(
        "8 deterministic memoryless transducers, {} memoryless mixers on the 1/{} grid, {} counters",
        pool.len() - 8 - rounds,
        1u64 << exp,
        rounds
    );
    let set = CandidateSet::new(pool.clone(), provenance)?;
    let sets = [set.clone(), set.clone()];
    let tft = tit_for_tat();

    let g = frpd_game(rounds, &delta, &alpha)?;
    let fwd = MarkovRepeated::new(&g)?;
    let cert = certify_epsilon_nash(&fwd, &[&tft, &tft], &sets, &Q::zero())?;
    report.certificate("tit-for-tat", true, cert);

    let g0 = frpd_game(rounds, &delta, &Q::zero())?;
    let fwd0 = MarkovRepeated::new(&g0)?;
    let cert0 = certify_epsilon_nash(&fwd0, &[&tft, &tft], &sets, &Q::zero())?;
    report.certificate("tit-for-tat-free-memory", false, cert0);

    // Tit for tat against itself, by both engines and in closed form.
    let itft = InteractiveMachine::Transducer(tft.clone());
    let mut value = Table::new("titForTatValue", &["route", "utility"]);
    value.push(vec!["forward".into(), fwd.utilities(&[&tft, &tft])?.remove(0).into()]);
    value.push(vec!["transcript".into(), expected_utility_mediated(&g, &[&itft, &itft])?.remove(0).into()]);
    value.push(vec!["closedForm".into(), geometric_stream(&qi(3), &delta, n).into()]);
    report.table(value);
    report.finding(
        "titForTatValueAgrees",
        Rule::All {
            rules: vec![
                Rule::Same {
                    lhs: cell("titForTatValue", "forward", "utility"),
                    rhs: cell("titForTatValue", "transcript", "utility"),
                },
                Rule::Same {
                    lhs: cell("titForTatValue", "forward", "utility"),
                    rhs: cell("titForTatValue", "closedForm", "utility"),
                },
            ],
        },
    );

    // Payoff-only values against tit for tat.
    let base = fwd0.utilities(&[&tft, &tft])?.remove(0);
    let payoff_gain = |t: &Transducer| -> Result<Q> { Ok(fwd0.utilities(&[t, &tft])?.remove(0) - &base) };

    let mut losses = Table::new("firstDefectionLoss", &["machine", "k", "loss", "bound"]);
    for t in pool.iter().filter(|t| t.is_deterministic()) {
        let moves = deterministic_moves(&g0, t, &tft)?;
        let Some(k) = moves.iter().position(|(a, _)| a == "D").map(|i| i + 1) else {
            continue;
        };
        if k >= rounds {
            continue;
        }
        let loss = -payoff_gain(t)?;
        let bound = qi(6) * pow_q(&delta, k as u32 + 1) - qi(2) * pow_q(&delta, k as u32);
        losses.push(vec![t.id.as_str().into(), k.into(), loss.into(), bound.into()]);
    }
    report.table(losses);
    report.finding(
        "earlyDefectionLossBound",
        Rule::All {
            rules: vec![
                Rule::NonEmpty {
                    table: "firstDefectionLoss".into(),
                },
                Rule::ColumnsLe {
                    table: "firstDefectionLoss".into(),
                    lhs: "bound".into(),
                    rhs: "loss".into(),
                },
            ],
        },
    );

    let mut stateless = Table::new("statelessGain", &["machine", "pLastRoundDefection", "gain", "bound"]);
    let factor = pow_q(&delta, n - 1) * (qi(2) - qi(4) * &delta);
    for t in pool.iter().filter(|t| t.state_count() == 1) {
        let coop = |d: &DyadicDist<(Move, usize)>| {
            d.outcomes()
                .iter()
                .filter(|((m, _), _)| *m == Move::C)
                .fold(Q::zero(), |acc, (_, w)| acc + w.to_q())
        };
        let p_first = coop(t.first());
        let p_cc = coop(t.transition(0, Move::C));
        let p = p_first * pow_q(&p_cc, n - 2) * (Q::one() - &p_cc);
        let gain = payoff_gain(t)?;
        let bound = &p * &factor;
        stateless.push(vec![t.id.as_str().into(), p.into(), gain.into(), bound.into()]);
    }
    report.table(stateless);
    report.finding(
        "statelessGainBound",
        Rule::ColumnsLe {
            table: "statelessGain".into(),
            lhs: "gain".into(),
            rhs: "bound".into(),
        },
    );

    // Memory threshold: the largest payoff gain any memory user achieves.
    let mut alpha_star = Q::zero();
    let mut gains = Vec::with_capacity(pool.len());
    for t in &pool {
        let gain = payoff_gain(t)?;
        if t.state_count() > 1 && gain > alpha_star {
            alpha_star = gain.clone();
        }
        gains.push((t.state_count() > 1, gain));
    }
    let mut thresholds = Table::new("threshold", &["quantity", "value"]);
    thresholds.push(vec!["alphaStar".into(), (&alpha_star).into()]);
    thresholds.push(vec!["twoDeltaN".into(), (&two_delta_n).into()]);
    report.table(thresholds);
    report.finding(
        "memoryThresholdIsTwoDeltaN",
        Rule::Same {
            lhs: cell("threshold", "alphaStar", "value"),
            rhs: cell("threshold", "twoDeltaN", "value"),
        },
    );

    let mut sweep = Table::new("alphaSweep", &["alpha", "gap", "nash"]);
    let half = Q::new(1.into(), 2.into());
    let mut alphas = vec![Q::zero(), &alpha_star * &half, alpha_star.clone(), &alpha_star * qi(2)];
    alphas.dedup();
    for a in alphas {
        let gap = gains
            .iter()
            .map(|(memory, gain)| if *memory { gain - &a } else { gain.clone() })
            .max()
            .expect("nonempty pool");
        let nash = !gap.is_positive();
        sweep.push(vec![a.into(), gap.into(), nash.into()]);
    }
    report.table(sweep);

    report.note("memory is charged exactly alpha for any transducer with more than one state");
    report.note("certificates are relative to the listed transducer class");
    Ok(report)
}
