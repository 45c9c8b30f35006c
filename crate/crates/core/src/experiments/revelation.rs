//! Same-or-different guessing through a comparing mediator.
//!
//! Each player holds an `n`-bit type. Types are either equal or agree in at
//! most `k` positions, all such pairs equally likely. A player earns 1 for
//! guessing correctly (`"1"` for same, `"0"` for different) while having
//! sent fewer than `k + 2` bits, else 0. The mediator answers once both
//! players have sent `k + 1` bits, so reporting a `(k + 1)`-bit prefix is
//! enough, and reporting the whole type is too expensive.

use num_traits::Zero;

use crate::bits::BitString;
use crate::coins::BitCoins;
use crate::equilibrium::{best_response_gap, certify_epsilon_nash, CandidateSet};
use crate::error::{Error, Result};
use crate::game::TypeProfile;
use crate::machine::Budgets;
use crate::mediated::{comm_metrics, expected_utility_mediated, InteractiveMachine, MediatedGameDef, Mediator};
use crate::rational::Q;
use crate::report::{cell, Report, Rule, Table};

pub fn type_pairs(n: usize, k: usize) -> Vec<(BitString, BitString)> {
    let word = |v: u32| -> BitString { format!("{v:0n$b}").parse().expect("binary") };
    let mut out = Vec::new();
    for a in 0..1u32 << n {
        for b in 0..1u32 << n {
            let agree = n as u32 - (a ^ b).count_ones();
            if a == b || agree as usize <= k {
                out.push((word(a), word(b)));
            }
        }
    }
    out
}

pub fn revelation_game(n: usize, k: usize) -> Result<MediatedGameDef> {
    let pairs = type_pairs(n, k);
    let prob = Q::new(1.into(), (pairs.len() as u64).into());
    let profiles = pairs
        .into_iter()
        .map(|(a, b)| TypeProfile::new(vec![a, b], BitString::empty(), prob.clone()))
        .collect();
    let limit = k + 2;
    let utility = |me: usize| {
        format!(
            "if ((a{me} == \"1\" and t1 == t2) or (a{me} == \"0\" and t1 != t2)) and c{me} < {limit} then 1 else 0"
        )
    };
    MediatedGameDef::new(
        2,
        profiles,
        &["bitsSent", "bitsSent"],
        &[&utility(1), &utility(2)],
        Budgets::new(10_000, 0),
        Mediator::PrefixCompare { k },
        1,
    )
}

/// Reporters of every prefix length, then the two constant guessers.
pub fn candidates(n: usize) -> Vec<InteractiveMachine> {
    let mut out: Vec<InteractiveMachine> = (0..=n).map(|j| InteractiveMachine::reporter(format!("report-{j}"), j)).collect();
    out.push(InteractiveMachine::constant("guess-same", "1", 1));
    out.push(InteractiveMachine::constant("guess-different", "0", 1));
    out
}

pub fn exp_revelation(n: usize, k: usize) -> Result<Report> {
    if n > 8 {
        return Err(Error::validation("revelation.n", "at most 8"));
    }
    if k + 1 >= n {
        return Err(Error::validation("revelation.k", "need k + 1 < n"));
    }
    let g = revelation_game(n, k)?;
    let pool = candidates(n);
    let set = CandidateSet::new(pool.clone(), "prefix reporters of every length and constant same/different guessers")?;
    let sets = [set.clone(), set.clone()];

    let mut report = Report::new("revelation");
    report.param("n", n);
    report.param("k", k);

    let mut types = Table::new("typeSpace", &["quantity", "value"]);
    let pairs = type_pairs(n, k);
    let equal = pairs.iter().filter(|(a, b)| a == b).count();
    types.push(vec!["pairs".into(), pairs.len().into()]);
    types.push(vec!["pEqual".into(), Q::new(equal.into(), pairs.len().into()).into()]);
    report.table(types);

    let mut gaps = Table::new("reportLength", &["j", "bitsSent", "utility", "gap", "argmax"]);
    for j in 0..=n {
        let m = &pool[j];
        let mut coins = vec![BitCoins::new(BitString::empty()); 3];
        let tr = g.run(&[m, m], &[pairs[0].0.clone(), pairs[0].1.clone()], &mut coins)?;
        let (sent, _) = comm_metrics(&tr, 0);
        let u = expected_utility_mediated(&g, &[m, m])?;
        let (gap, argmax) = best_response_gap(&g, &[m, m], 0, &set)?;
        gaps.push(vec![j.into(), sent.into(), u[0].clone().into(), gap.into(), argmax.into()]);
    }
    report.table(gaps);

    let prefix = &pool[k + 1];
    let full = &pool[n];
    report.certificate("prefix-report", true, certify_epsilon_nash(&g, &[prefix, prefix], &sets, &Q::zero())?);
    report.certificate("full-report", false, certify_epsilon_nash(&g, &[full, full], &sets, &Q::zero())?);

    let prefix_key = (k + 1).to_string();
    let full_key = n.to_string();
    report.finding(
        "revelationFails",
        Rule::All {
            rules: vec![
                Rule::CellEquals {
                    cell: cell("certificates", "prefix-report", "verdict"),
                    value: "true".into(),
                },
                Rule::CellEquals {
                    cell: cell("reportLength", &prefix_key, "utility"),
                    value: "1".into(),
                },
                Rule::CellEquals {
                    cell: cell("reportLength", &full_key, "utility"),
                    value: "0".into(),
                },
                Rule::CellEquals {
                    cell: cell("certificates", "full-report", "verdict"),
                    value: "false".into(),
                },
            ],
        },
    );
    report.note("the candidate set adds two constant guessers to the prefix reporters");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn type_space_size() {
        let pairs = type_pairs(6, 2);
        assert_eq!(pairs.len(), 1472);
        assert_eq!(pairs.iter().filter(|(a, b)| a == b).count(), 64);
    }

    #[test]
    fn small_instance() {
        let r = exp_revelation(4, 1).unwrap();
        assert_eq!(r.finding_value("revelationFails"), Some(true));
        let full = &r.certificates[1].certificate;
        assert!(*full.max_gap() > q(0, 1));
    }
}
