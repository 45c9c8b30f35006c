//! Random small games and brute-force oracles shared by the integration
//! suites.

#![allow(dead_code)]

use mgame::bits::BitString;
use mgame::coins::BitCoins;
use mgame::game::{GameDef, TypeProfile};
use mgame::machine::{Budgets, Machine, SymPattern, Sym, TmAction, TmRule, TmSpec, Head};
use mgame::rational::{Dyadic, DyadicDist, Q};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_action(rng: &mut ChaCha8Rng, states: usize) -> TmAction {
    let mut a = TmAction::goto(rng.gen_range(0..=states));
    if rng.gen_bool(0.6) {
        a = a.emit(*['0', '1', '2'].choose(rng).unwrap());
    }
    if rng.gen_bool(0.5) {
        a = a.moves(Head::R, Head::S);
    }
    a
}

/// A TM with up to three working states plus one halting state. Rules key
/// on the input symbol, loops are allowed, and each rule flips zero, one or
/// two fair coins.
pub fn random_tm(rng: &mut ChaCha8Rng, id: &str) -> Machine {
    let states = rng.gen_range(1..=3);
    let halt = states;
    let mut rules = Vec::new();
    for s in 0..states {
        for sym in [Sym::Zero, Sym::One, Sym::Blank] {
            let bits = *[0u32, 0, 1, 1, 2].choose(rng).unwrap();
            let n = 1usize << bits;
            let w = Dyadic::new(1, bits).unwrap();
            let outcomes: Vec<(TmAction, Dyadic)> = (0..n).map(|_| (random_action(rng, halt), w)).collect();
            let dist = DyadicDist::new(outcomes).unwrap();
            rules.push(TmRule::new(s, SymPattern::Is(sym), SymPattern::Any, dist));
        }
    }
    Machine::tm(id, TmSpec::new(states + 1, 0, vec![halt], rules).unwrap())
}

const COMPLEXITY: [&str; 6] = ["0", "steps", "coinBits", "if randomized then 1 else 0", "steps + 2 * coinBits", "1/4 * stateCount"];

fn utility(rng: &mut ChaCha8Rng, me: usize, players: usize) -> String {
    let other = if players == 1 { me } else { 3 - me };
    let choices = [
        format!("if isBot(a{me}) then -2 else (if a{me} == t{me} then 3 else 1) - c{me}"),
        format!("if isBot(a{me}) then -2 else if a{me} == \"1\" then 2 - c{me} else 0 - c{me}"),
        format!("if isBot(a{me}) then -2 else if a{me} == a{other} then 1 - c{me} else 0 - c{me}"),
        format!("(if a{me} == t0 then 2 else -1) - 1/2 * c{me}"),
    ];
    choices.choose(rng).unwrap().clone()
}

fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> BitString {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| if rng.gen_bool(0.5) { '1' } else { '0' }).collect::<String>().parse().unwrap()
}

pub const COIN_BITS: u64 = 3;

/// One or two players, at most three type profiles, TMs reading at most
/// three coins each.
pub fn random_game(seed: u64) -> (GameDef, Vec<Vec<Machine>>) {
    random_game_scaled(seed, None)
}

/// As [`random_game`], with `player`'s utility replaced by `alpha u + beta`.
pub fn random_game_scaled(seed: u64, scale: Option<(usize, &Q, &Q)>) -> (GameDef, Vec<Vec<Machine>>) {
    let mut rng = rng(seed);
    let players = rng.gen_range(1..=2);
    let count = rng.gen_range(1..=3);
    let weights: Vec<u64> = (0..count).map(|_| rng.gen_range(1..=5)).collect();
    let total: u64 = weights.iter().sum();
    let profiles = weights
        .iter()
        .map(|&w| {
            let types = (0..players).map(|_| random_word(&mut rng, 2)).collect();
            let nature = random_word(&mut rng, 1);
            TypeProfile::new(types, nature, Q::new(w.into(), total.into()))
        })
        .collect();
    let complexity: Vec<String> = (0..players).map(|_| COMPLEXITY.choose(&mut rng).unwrap().to_string()).collect();
    let mut utility: Vec<String> = (1..=players).map(|i| utility(&mut rng, i, players)).collect();
    if let Some((p, alpha, beta)) = scale {
        if p < players {
            utility[p] = format!("({alpha}) * ({}) + ({beta})", utility[p]);
        }
    }
    let c: Vec<&str> = complexity.iter().map(String::as_str).collect();
    let u: Vec<&str> = utility.iter().map(String::as_str).collect();
    let g = GameDef::new(players, profiles, &c, &u, Budgets::new(12, COIN_BITS)).unwrap();
    let machines = (0..players)
        .map(|p| {
            let n = rng.gen_range(1..=3);
            (0..n).map(|k| random_tm(&mut rng, &format!("m{p}-{k}"))).collect()
        })
        .collect();
    (g, machines)
}

/// Every coin string of length `bits`.
pub fn coin_strings(bits: u64) -> Vec<BitString> {
    (0..1u64 << bits)
        .map(|v| {
            (0..bits)
                .map(|i| if (v >> (bits - 1 - i)) & 1 == 1 { '1' } else { '0' })
                .collect::<String>()
                .parse()
                .unwrap()
        })
        .collect()
}

/// Expected utility by running every player on every fixed coin string of
/// length `bits` and averaging.
pub fn brute_force_utility(g: &GameDef, profile: &[&Machine], bits: u64) -> Vec<Q> {
    let strings = coin_strings(bits);
    let per = Q::new(1.into(), (1u64 << bits).into());
    let mut total = vec![Q::zero(); g.players];
    for tp in &g.profiles {
        let mut combos: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..g.players {
            combos = combos
                .into_iter()
                .flat_map(|c| (0..strings.len()).map(move |s| [c.clone(), vec![s]].concat()))
                .collect();
        }
        for combo in combos {
            let mut actions = Vec::new();
            let mut costs = Vec::new();
            let mut weight = tp.prob.clone();
            for (p, &s) in combo.iter().enumerate() {
                let mut coins = BitCoins::new(strings[s].clone());
                let trace = profile[p].run(&tp.types[p], &mut coins, g.budgets).unwrap_or_else(|_| panic!("coins ran out"));
                costs.push(g.cost(p, profile[p], &trace).unwrap());
                actions.push(trace.output);
                weight = weight * &per;
            }
            for (acc, u) in total.iter_mut().zip(g.payoffs(tp, &actions, &costs)) {
                *acc += &weight * u;
            }
        }
    }
    total
}

/// All profiles of the product of `sets`.
pub fn profiles<T>(sets: &[Vec<T>]) -> Vec<Vec<&T>> {
    let mut out: Vec<Vec<&T>> = vec![vec![]];
    for set in sets {
        out = out.into_iter().flat_map(|p| set.iter().map(move |m| [p.clone(), vec![m]].concat())).collect();
    }
    out
}
