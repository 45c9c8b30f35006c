//! Guessing whether an odd number is prime, with the option of playing safe.
//!
//! The single player's type is an odd `L`-bit number; nature's type is `"1"`
//! when it is prime. Output `"1"` claims prime, `"0"` composite, `"2"` plays
//! safe. A correct claim pays 2, a wrong one the penalty, safe pays 1, and
//! any run of at least the threshold number of steps costs 2.

use num_traits::Zero;

use crate::bits::BitString;
use crate::equilibrium::{search_pure_nash, CandidateSet, DEFAULT_PROFILE_CAP};
use crate::error::{Error, Result};
use crate::game::{ExactEvaluator, GameDef, TypeProfile};
use crate::machine::{Budgets, DeclaredMachine, DeclaredMetrics, Machine};
use crate::rational::{DyadicDist, Q};
use crate::report::{cell, Report, Rule, Table};

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Odd `bit_length`-bit numbers, most significant bit first.
pub fn odd_types(bit_length: usize) -> Vec<(u64, BitString)> {
    let lo = 1u64 << (bit_length - 1);
    (lo..lo << 1)
        .filter(|n| n % 2 == 1)
        .map(|n| (n, format!("{n:0bit_length$b}").parse().expect("binary digits")))
        .collect()
}

pub fn primality_game(bit_length: usize, step_threshold: u64, wrong_penalty: &Q) -> Result<GameDef> {
    let types = odd_types(bit_length);
    let prob = Q::new(1.into(), (types.len() as u64).into());
    let profiles = types
        .iter()
        .map(|(n, t)| {
            let nature: BitString = if is_prime(*n) { "1" } else { "0" }.parse().expect("bit");
            TypeProfile::new(vec![t.clone()], nature, prob.clone())
        })
        .collect();
    let complexity = format!("if steps < {step_threshold} then 0 else 2");
    let utility = format!("if a1 == \"2\" then 1 - c1 else if a1 == t0 then 2 - c1 else {wrong_penalty} - c1");
    GameDef::new(1, profiles, &[&complexity], &[&utility], Budgets::new(step_threshold.max(bit_length as u64) + 1, 0))
}

/// Always answers correctly, taking `max(threshold, L)` steps.
pub fn tester(bit_length: usize, step_threshold: u64) -> Machine {
    let steps = step_threshold.max(bit_length as u64);
    Machine::Declared(DeclaredMachine::per_type(
        "tester",
        odd_types(bit_length).into_iter().map(|(n, t)| {
            let answer = if is_prime(n) { "1" } else { "0" };
            (t, DyadicDist::point(answer.to_string()), DeclaredMetrics::new(steps, 1, false))
        }),
    ))
}

pub fn candidates(bit_length: usize, step_threshold: u64) -> Vec<Machine> {
    let mut out: Vec<Machine> = ["0", "1", "2"]
        .iter()
        .map(|a| Machine::Declared(DeclaredMachine::constant(format!("const-{a}"), *a)))
        .collect();
    out.push(tester(bit_length, step_threshold));
    out
}

pub fn exp_primality(bit_length: usize, step_threshold: u64, wrong_penalty: Q) -> Result<Report> {
    if !(2..=12).contains(&bit_length) {
        return Err(Error::validation("primality.bitLength", "must be between 2 and 12"));
    }
    let g = primality_game(bit_length, step_threshold, &wrong_penalty)?;
    let ev = ExactEvaluator::new(&g);
    let pool = candidates(bit_length, step_threshold);
    let set = CandidateSet::new(pool.clone(), "constant guesses and a correct tester")?;

    let mut report = Report::new("primality");
    report.param("bitLength", bit_length);
    report.param("stepThreshold", step_threshold);
    report.param("wrongPenalty", &wrong_penalty);

    let mut ex_ante = Table::new("exAnte", &["machine", "utility"]);
    for m in &pool {
        ex_ante.push(vec![m.id().into(), ev.expected_utility(&[m])?.remove(0).into()]);
    }
    report.table(ex_ante);

    let found = search_pure_nash(&ev, &[set.clone()], &Q::zero(), DEFAULT_PROFILE_CAP)?;
    let mut nash = Table::new("pureNash", &["profile", "utility"]);
    for c in &found {
        nash.push(vec![c.profile.join(" ").into(), (&c.utilities[0]).into()]);
    }
    report.table(nash);
    if let Some(c) = found.first() {
        report.certificate("ex-ante", true, c.clone());
    }

    let mut interim = Table::new(
        "interim",
        &["type", "number", "prime", "const-0", "const-1", "const-2", "tester", "best"],
    );
    let mut primes = 0usize;
    for (n, t) in odd_types(bit_length) {
        let mut row = vec![t.to_string().into(), (n as usize).into(), is_prime(n).into()];
        let mut best: Option<(Q, &str)> = None;
        for m in &pool {
            let u = ev.conditional_utility(&[m], 0, &t)?;
            if best.as_ref().map_or(true, |(b, _)| u > *b) {
                best = Some((u.clone(), m.id()));
            }
            row.push(u.into());
        }
        row.push(best.expect("four candidates").1.into());
        primes += usize::from(is_prime(n));
        interim.push(row);
    }
    report.table(interim);

    let mut summary = Table::new("summary", &["quantity", "value"]);
    summary.push(vec!["primes".into(), primes.into()]);
    summary.push(vec!["types".into(), odd_types(bit_length).len().into()]);
    report.table(summary);

    report.finding(
        "exAnteInterimDiverge",
        Rule::All {
            rules: vec![
                Rule::RowCount {
                    table: "pureNash".into(),
                    count: 1,
                },
                Rule::CellEquals {
                    cell: cell("pureNash", "const-2", "profile"),
                    value: "const-2".into(),
                },
                Rule::AnyDiffers {
                    table: "interim".into(),
                    column: "best".into(),
                    value: "const-2".into(),
                },
            ],
        },
    );
    report.finding(
        "testerLosesToSafe",
        Rule::Less {
            lhs: cell("exAnte", "tester", "utility"),
            rhs: cell("exAnte", "const-2", "utility"),
        },
    );
    report.note("the tester's complexity is declared, not measured from a primality algorithm");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    #[test]
    fn seventy_five_primes_at_ten_bits() {
        assert_eq!(odd_types(10).iter().filter(|(n, _)| is_prime(*n)).count(), 75);
        assert_eq!(odd_types(10).len(), 256);
    }

    #[test]
    fn interim_best_responses() {
        let r = exp_primality(6, 2, qi(-1000)).unwrap();
        assert_eq!(r.finding_value("exAnteInterimDiverge"), Some(true));
        assert_eq!(r.finding_value("testerLosesToSafe"), Some(true));
        let interim = r.tables.iter().find(|t| t.name == "interim").unwrap();
        for row in &interim.rows {
            let expected = if row[2].to_string() == "true" { "const-1" } else { "const-0" };
            assert_eq!(row[7].to_string(), expected);
        }
    }
}
