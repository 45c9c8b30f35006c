//! Costly signal reading.
//!
//! Nature picks a bit uniformly. Each of `n` signals independently equals it
//! with probability `rho`. The agent reads signals one at a time and then
//! guesses; after reading `m` signals a correct guess pays `1 - m c` and a
//! wrong one `-m c`. The state of the reader is `(m, d)` where `d` counts
//! signals for 1 minus signals for 0.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{pow_q, q, Q};
use crate::report::{cell, Report, Rule, Table};

/// An optimal stopping rule and its value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadingPolicy {
    pub n: usize,
    /// `(m, d)` states, reachable or not, at which reading strictly beats
    /// stopping.
    pub read: BTreeMap<(usize, i64), bool>,
    pub value: Q,
    /// One past the largest `m` at which a reachable state reads; the
    /// policy never reads more than this many signals.
    pub read_bound: usize,
}

impl ReadingPolicy {
    pub fn reads(&self, m: usize, d: i64) -> bool {
        self.read.get(&(m, d)).copied().unwrap_or(false)
    }

    /// Guess after stopping at difference `d`; ties go to 1.
    pub fn guess(d: i64) -> u8 {
        u8::from(d >= 0)
    }
}

/// Probability that the hidden bit is 1 given difference `d`.
pub fn posterior(rho: &Q, d: i64) -> Q {
    let a = pow_q(rho, d.unsigned_abs() as u32);
    let b = pow_q(&(Q::one() - rho), d.unsigned_abs() as u32);
    if d >= 0 {
        &a / (&a + &b)
    } else {
        &b / (&a + &b)
    }
}

struct Dp {
    stop: BTreeMap<(usize, i64), Q>,
    value: BTreeMap<(usize, i64), Q>,
    read: BTreeMap<(usize, i64), bool>,
}

fn solve(rho: &Q, c: &Q, n: usize) -> Dp {
    let mut dp = Dp {
        stop: BTreeMap::new(),
        value: BTreeMap::new(),
        read: BTreeMap::new(),
    };
    for m in (0..=n).rev() {
        let mq = Q::from_integer((m as i64).into());
        for d in (-(m as i64)..=m as i64).step_by(2) {
            let post = posterior(rho, d);
            let stop = post.clone().max(Q::one() - &post) - &mq * c;
            let (value, read) = if m < n {
                let up = &post * rho + (Q::one() - &post) * (Q::one() - rho);
                let cont = &up * &dp.value[&(m + 1, d + 1)] + (Q::one() - &up) * &dp.value[&(m + 1, d - 1)];
                if cont > stop {
                    (cont, true)
                } else {
                    (stop.clone(), false)
                }
            } else {
                (stop.clone(), false)
            };
            dp.stop.insert((m, d), stop);
            dp.value.insert((m, d), value);
            dp.read.insert((m, d), read);
        }
    }
    dp
}

fn check(rho: &Q, c: &Q, n: usize) -> Result<()> {
    if *rho <= q(1, 2) || *rho >= Q::one() {
        return Err(Error::validation("first-impressions.rho", "must lie strictly between 1/2 and 1"));
    }
    if c.is_negative() {
        return Err(Error::validation("first-impressions.c", "must be nonnegative"));
    }
    if n > 30 {
        return Err(Error::validation("first-impressions.n", "at most 30 signals"));
    }
    Ok(())
}

/// Exact optimal policy by backward induction over `(m, d)`.
pub fn optimal_reading_policy(rho: &Q, c: &Q, n: usize) -> Result<ReadingPolicy> {
    check(rho, c, n)?;
    let dp = solve(rho, c, n);
    let mut frontier = vec![0i64];
    let mut read_bound = 0;
    for m in 0..n {
        let reading: Vec<i64> = frontier.iter().copied().filter(|&d| dp.read[&(m, d)]).collect();
        if reading.is_empty() {
            break;
        }
        read_bound = m + 1;
        let mut next: Vec<i64> = reading.iter().flat_map(|&d| [d - 1, d + 1]).collect();
        next.sort_unstable();
        next.dedup();
        frontier = next;
    }
    Ok(ReadingPolicy {
        n,
        read: dp.read,
        value: dp.value[&(0, 0)].clone(),
        read_bound,
    })
}

/// Probability that the majority of `count` signals names the hidden bit,
/// ties guessed as 1.
fn majority_correct(rho: &Q, count: usize) -> Q {
    let mut binom = Q::one();
    let mut total = Q::zero();
    for agree in 0..=count {
        if agree > 0 {
            binom = binom * Q::from_integer(((count - agree + 1) as i64).into()) / Q::from_integer((agree as i64).into());
        }
        let p = &binom * pow_q(rho, agree as u32) * pow_q(&(Q::one() - rho), (count - agree) as u32);
        match (2 * agree).cmp(&count) {
            std::cmp::Ordering::Greater => total += p,
            std::cmp::Ordering::Equal => total += p * q(1, 2),
            std::cmp::Ordering::Less => {}
        }
    }
    total
}

/// Value of reading exactly `count` signals and then following the majority.
pub fn fixed_count_value(rho: &Q, c: &Q, count: usize) -> Q {
    majority_correct(rho, count) - Q::from_integer((count as i64).into()) * c
}

/// Smallest best number of signals to read when the count is fixed in
/// advance, with its value.
pub fn fixed_count_bound(rho: &Q, c: &Q, n: usize) -> Result<(usize, Q)> {
    check(rho, c, n)?;
    let mut best = (0, fixed_count_value(rho, c, 0));
    for count in 1..=n {
        let v = fixed_count_value(rho, c, count);
        if v > best.1 {
            best = (count, v);
        }
    }
    Ok(best)
}

pub fn exp_first_impressions(rho: Q, c: Q, n: usize) -> Result<Report> {
    let policy = optimal_reading_policy(&rho, &c, n)?;
    let dp = solve(&rho, &c, n);
    let mut report = Report::new("first-impressions");
    report.param("rho", &rho);
    report.param("c", &c);
    report.param("n", n);

    let mut summary = Table::new("summary", &["quantity", "value"]);
    summary.push(vec!["value".into(), (&policy.value).into()]);
    summary.push(vec!["readBound".into(), policy.read_bound.into()]);
    summary.push(vec!["n".into(), n.into()]);
    let (fixed, fixed_value) = fixed_count_bound(&rho, &c, n)?;
    summary.push(vec!["fixedBound".into(), fixed.into()]);
    summary.push(vec!["fixedValue".into(), fixed_value.into()]);
    report.table(summary);

    let mut states = Table::new("reachableStates", &["state", "m", "d", "posterior", "stop", "value", "action"]);
    let mut frontier = vec![0i64];
    for m in 0..=n {
        for &d in &frontier {
            let action = if policy.reads(m, d) {
                "read".to_string()
            } else {
                format!("guess {}", ReadingPolicy::guess(d))
            };
            states.push(vec![
                format!("{m}:{d}").into(),
                m.into(),
                Q::from_integer(d.into()).into(),
                posterior(&rho, d).into(),
                (&dp.stop[&(m, d)]).into(),
                (&dp.value[&(m, d)]).into(),
                action.into(),
            ]);
        }
        let mut next: Vec<i64> = frontier.iter().filter(|&&d| policy.reads(m, d)).flat_map(|&d| [d - 1, d + 1]).collect();
        next.sort_unstable();
        next.dedup();
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    report.table(states);

    let mut sweep = Table::new("horizonSweep", &["n", "readBound", "value", "fixedBound", "fixedValue"]);
    let start = policy.read_bound.min(fixed).max(1);
    for horizon in start..=30 {
        let p = optimal_reading_policy(&rho, &c, horizon)?;
        let (f, fv) = fixed_count_bound(&rho, &c, horizon)?;
        sweep.push(vec![horizon.into(), p.read_bound.into(), p.value.into(), f.into(), fv.into()]);
    }
    report.table(sweep);
    report.finding(
        "ignoresLateSignals",
        Rule::All {
            rules: vec![
                Rule::Constant {
                    table: "horizonSweep".into(),
                    column: "readBound".into(),
                },
                Rule::Less {
                    lhs: cell("summary", "readBound", "value"),
                    rhs: cell("summary", "n", "value"),
                },
            ],
        },
    );
    report.finding(
        "fixedCountIgnoresLateSignals",
        Rule::All {
            rules: vec![
                Rule::Constant {
                    table: "horizonSweep".into(),
                    column: "fixedBound".into(),
                },
                Rule::Less {
                    lhs: cell("summary", "fixedBound", "value"),
                    rhs: cell("summary", "n", "value"),
                },
            ],
        },
    );
    report.note("at an even split reading one more signal gains rho - 1/2 - c, so an adaptive reader with rho - 1/2 > c keeps reading on ties until the horizon");
    if c.is_zero() {
        report.note("with free signals reading never hurts, so the read bound can reach n");
    }
    Ok(report)
}
