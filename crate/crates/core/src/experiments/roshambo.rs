//! Rock-paper-scissors where randomizing costs more than playing a constant.
//!
//! Actions are `"0"` (rock), `"1"` (paper), `"2"` (scissors); `x` beats
//! `y` when `x == rot(y)`.

use num_traits::{One, Signed, Zero};

use crate::equilibrium::{
    best_response_gap, certify_epsilon_nash, induced_normal_form, search_pure_nash, solve_2p_support_enumeration,
    CandidateSet, DEFAULT_PROFILE_CAP,
};
use crate::error::Result;
use crate::game::{outcome_distribution, ExactEvaluator, GameDef};
use crate::machine::{Budgets, DeclaredMachine, DeclaredMetrics, Machine, TmAction, TmRule, TmSpec};
use crate::rational::{pow_q, q, Dyadic, DyadicDist, Q};
use crate::report::{cell, Report, Rule, Table};

use super::dyadic_exponent;

pub const ACTIONS: [&str; 3] = ["0", "1", "2"];

fn payoff(me: &str, other: &str) -> String {
    format!(
        "(if isBot({me}) then -1 else if isBot({other}) then 1 else if {me} == {other} then 0 else if {other} == rot({me}) then -1 else 1) - c{}",
        &me[1..]
    )
}

/// The game with the given complexities for deterministic and randomized
/// machines. BOT loses to everything.
pub fn roshambo_game(det_cost: &Q, rand_cost: &Q, budgets: Budgets) -> Result<GameDef> {
    let complexity = format!("if randomized then {rand_cost} else {det_cost}");
    let hi = Q::one() + Q::zero().max(-det_cost.clone()).max(-rand_cost.clone());
    let lo = -Q::one() - det_cost.clone().max(rand_cost.clone());
    Ok(GameDef::single_type(
        2,
        &[&complexity, &complexity],
        &[&payoff("a1", "a2"), &payoff("a2", "a1")],
        budgets,
    )?
    .with_utility_range(lo, hi))
}

pub fn constants() -> Vec<Machine> {
    ACTIONS
        .iter()
        .map(|a| Machine::Declared(DeclaredMachine::constant(format!("const-{a}"), *a)))
        .collect()
}

/// Every mixture `(r, p, s) / 2^exp` that is not a point mass.
pub fn mixers(exp: u32) -> Vec<Machine> {
    let total = 1u64 << exp;
    let mut out = Vec::new();
    for r in 0..=total {
        for p in 0..=total - r {
            let s = total - r - p;
            if [r, p, s].contains(&total) {
                continue;
            }
            let w = |n| Dyadic::new(n, exp).expect("numerator within 2^exp");
            let dist = DyadicDist::new(vec![("0".to_string(), w(r)), ("1".to_string(), w(p)), ("2".to_string(), w(s))])
                .expect("weights sum to one");
            out.push(Machine::Declared(DeclaredMachine::uniform(
                format!("mix-{r}-{p}-{s}of{total}"),
                dist,
                DeclaredMetrics::new(1, 1, true),
            )));
        }
    }
    out
}

/// Draws two coins per round: rock, paper, scissors, or retry. After
/// `rounds` retries it plays rock.
pub fn rejection_sampler(rounds: usize) -> Machine {
    assert!(rounds >= 1);
    let quarter = Dyadic::new(1, 2).expect("1/4");
    let halt = rounds;
    let rules = (0..rounds)
        .map(|r| {
            let retry = if r + 1 == rounds {
                TmAction::goto(halt).emit('0')
            } else {
                TmAction::goto(r + 1)
            };
            let outcomes = DyadicDist::new(vec![
                (TmAction::goto(halt).emit('0'), quarter),
                (TmAction::goto(halt).emit('1'), quarter),
                (TmAction::goto(halt).emit('2'), quarter),
                (retry, quarter),
            ])
            .expect("four quarters");
            TmRule::any(r, outcomes)
        })
        .collect();
    let spec = TmSpec::new(rounds + 1, 0, vec![halt], rules).expect("sampler table is total");
    Machine::tm(format!("sampler-{rounds}"), spec)
}

/// Mixer denominators are rounded down to a power of two; costs are
/// `det_cost` for constants and `rand_cost` for mixers.
pub fn exp_roshambo(bound: usize, det_cost: Q, rand_cost: Q, coin_bits: usize) -> Result<Report> {
    if bound < 2 {
        return Err(crate::Error::validation("roshambo.bound", "must be at least 2"));
    }
    let exp = dyadic_exponent(bound);
    let mut report = Report::new("roshambo");
    report.param("bound", bound);
    report.param("detCost", &det_cost);
    report.param("randCost", &rand_cost);
    report.param("coinBits", coin_bits);

    // Costly randomization: no pure equilibrium over constants and mixers.
    let g = roshambo_game(&det_cost, &rand_cost, Budgets::default())?;
    let ev = ExactEvaluator::new(&g);
    let mut pool = constants();
    pool.extend(mixers(exp));
    let provenance = format!("constants and dyadic mixers with denominator {}", 1u64 << exp);
    let set = CandidateSet::new(pool.clone(), provenance)?;
    let sets = [set.clone(), set.clone()];
    let found = search_pure_nash(&ev, &sets, &Q::zero(), DEFAULT_PROFILE_CAP)?;
    let mut nash = Table::new("pureNash", &["profile", "max_gap"]);
    for c in &found {
        nash.push(vec![c.profile.join(" ").into(), c.max_gap().into()]);
    }
    report.table(nash);
    report.finding("noPureNE", Rule::Empty { table: "pureNash".into() });

    // Smallest epsilon any profile achieves, from the full utility table.
    let n = pool.len();
    let mut u = vec![vec![(Q::zero(), Q::zero()); n]; n];
    for i in 0..n {
        for j in 0..n {
            let v = ev.expected_utility(&[&pool[i], &pool[j]])?;
            u[i][j] = (v[0].clone(), v[1].clone());
        }
    }
    let mut best: Option<(Q, usize, usize)> = None;
    for i in 0..n {
        for j in 0..n {
            let g1 = (0..n).map(|k| &u[k][j].0 - &u[i][j].0).max().expect("nonempty");
            let g2 = (0..n).map(|k| &u[i][k].1 - &u[i][j].1).max().expect("nonempty");
            let gap = g1.max(g2);
            let key = (pool[i].id(), pool[j].id());
            let better = match &best {
                None => true,
                Some((b, bi, bj)) => gap < *b || (gap == *b && key < (pool[*bi].id(), pool[*bj].id())),
            };
            if better {
                best = Some((gap, i, j));
            }
        }
    }
    let (eps, bi, bj) = best.expect("nonempty pool");
    let mut least = Table::new("leastEpsilon", &["profile", "epsilon"]);
    least.push(vec![format!("{} {}", pool[bi].id(), pool[bj].id()).into(), (&eps).into()]);
    report.table(least);
    let cert = certify_epsilon_nash(&ev, &[&pool[bi], &pool[bj]], &sets, &eps)?;
    report.certificate("least-epsilon", false, cert);
    let uniformish = pool
        .iter()
        .filter(|m| m.id().starts_with("mix-"))
        .min_by_key(|m| {
            let d = outcome_distribution(&g, 0, m, &Default::default()).expect("declared mixers run");
            let third = q(1, 3);
            d.iter().map(|o| (&o.prob - &third).abs()).max().expect("nonempty")
        })
        .expect("some mixer");
    let near = certify_epsilon_nash(&ev, &[uniformish, uniformish], &sets, &Q::zero())?;
    let mut near_table = Table::new("nearUniform", &["profile", "gap"]);
    near_table.push(vec![near.profile.join(" ").into(), near.max_gap().into()]);
    report.table(near_table);
    report.certificate("near-uniform-mixers", false, near);
    report.finding(
        "mixersBeatenByConstants",
        Rule::Less {
            lhs: cell("certificates", "near-uniform-mixers", "epsilon"),
            rhs: cell("certificates", "near-uniform-mixers", "max_gap"),
        },
    );

    // Cost-free: the induced normal form over constants has the uniform NE.
    let free = roshambo_game(&Q::zero(), &Q::zero(), Budgets::default())?;
    let free_ev = ExactEvaluator::new(&free);
    let mg = induced_normal_form(&free_ev, &[constants(), constants()])?.matrix()?;
    let solved = solve_2p_support_enumeration(&mg);
    let mut eq = Table::new("costFreeEquilibria", &["index", "row0", "row1", "row2", "col0", "col1", "col2"]);
    for (k, e) in solved.equilibria.iter().enumerate() {
        let mut row = vec![k.into()];
        row.extend(e.row.iter().map(Into::into));
        row.extend(e.col.iter().map(Into::into));
        eq.push(row);
    }
    report.table(eq);
    let third = q(1, 3).to_string();
    let all_third = ["row0", "row1", "row2", "col0", "col1", "col2"].map(|c| Rule::AllEqual {
        table: "costFreeEquilibria".into(),
        column: c.into(),
        value: third.clone(),
    });
    let mut rules = vec![Rule::RowCount {
        table: "costFreeEquilibria".into(),
        count: 1,
    }];
    rules.extend(all_third);
    report.finding("costFreeUniformNE", Rule::All { rules });

    // Budgeted samplers: cost free, but only `coin_bits` coins per run.
    let budgeted = roshambo_game(&Q::zero(), &Q::zero(), Budgets::new(1000, coin_bits as u64))?;
    let bev = ExactEvaluator::new(&budgeted);
    let max_rounds = coin_bits / 2 + 1;
    let mut bpool = constants();
    bpool.extend((1..=max_rounds).map(rejection_sampler));
    let bset = CandidateSet::new(bpool.clone(), format!("constants and rejection samplers with a {coin_bits}-bit coin budget"))?;
    let mut sweep = Table::new(
        "budgetedSamplers",
        &["machine", "rounds", "pRock", "pPaper", "pScissors", "pBot", "epsilon", "argmax"],
    );
    for (r, m) in bpool.iter().enumerate().skip(3) {
        let dist = outcome_distribution(&budgeted, 0, m, &Default::default())?;
        let mass = |w: Option<&str>| {
            dist.iter()
                .filter(|o| o.action.as_word() == w)
                .fold(Q::zero(), |acc, o| acc + &o.prob)
        };
        let (gap, argmax) = best_response_gap(&bev, &[m, m], 1, &bset)?;
        sweep.push(vec![
            m.id().into(),
            (r - 2).into(),
            mass(Some("0")).into(),
            mass(Some("1")).into(),
            mass(Some("2")).into(),
            mass(None).into(),
            gap.into(),
            argmax.into(),
        ]);
    }
    report.table(sweep);
    let within = coin_bits / 2;
    if within >= 1 {
        let sampler = &bpool[2 + within];
        let eps = pow_q(&q(1, 4), within as u32);
        let cert = certify_epsilon_nash(&bev, &[sampler, sampler], &[bset.clone(), bset.clone()], &eps)?;
        report.certificate("budgeted-sampler", true, cert);
        report.finding(
            "budgetedResidualEpsilon",
            Rule::AnyDiffers {
                table: "budgetedSamplers".into(),
                column: "epsilon".into(),
                value: "0".into(),
            },
        );
    }
    report.note("certificates are relative to the listed candidate sets, not to all machines");
    Ok(report)
}
