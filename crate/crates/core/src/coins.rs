//! Coin sources.
//!
//! A machine never sees an infinite random string directly; it asks its coin
//! source for one dyadic draw at a time. A draw over numerators `n_i / 2^k`
//! reads exactly `k` fair bits: the bits are interpreted big-endian as an
//! integer `u < 2^k` and outcome `i` is chosen when `u` falls in its
//! cumulative cell. Three sources implement this contract:
//!
//! * [`BitCoins`] replays a fixed bit string (the brute-force oracle),
//! * [`RngCoins`] reads a seeded ChaCha stream (Monte Carlo),
//! * [`ScriptCoins`] replays a script of outcome indices and interrupts the
//!   run when it runs dry, which is how [`enumerate`] walks every branch.

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::Error;
use crate::rational::Q;

/// Why a run stopped before producing a result.
#[derive(Debug)]
pub enum Interrupt {
    /// A [`ScriptCoins`] source needs the enumerator to branch.
    Pending,
    Failed(Error),
}

impl From<Error> for Interrupt {
    fn from(e: Error) -> Self {
        Interrupt::Failed(e)
    }
}

impl Interrupt {
    /// Converts to an error for sources that never interrupt.
    pub fn into_error(self) -> Error {
        match self {
            Interrupt::Failed(e) => e,
            Interrupt::Pending => Error::Definition("coin source requested branching outside an enumerator".into()),
        }
    }
}

pub trait CoinSource {
    /// Draws an index `i` with probability `numerators[i] / 2^bits`.
    fn draw(&mut self, numerators: &[u64], bits: u32) -> Result<usize, Interrupt>;
}

fn cell_of(numerators: &[u64], u: u64) -> usize {
    let mut acc = 0u64;
    for (i, &n) in numerators.iter().enumerate() {
        acc += n;
        if u < acc {
            return i;
        }
    }
    numerators.len() - 1
}

/// Replays a fixed, finite coin string.
#[derive(Clone, Debug)]
pub struct BitCoins {
    bits: BitString,
    pos: usize,
}

impl BitCoins {
    pub fn new(bits: BitString) -> Self {
        BitCoins { bits, pos: 0 }
    }

    /// The prefix actually consumed so far.
    pub fn consumed(&self) -> BitString {
        self.bits.prefix(self.pos)
    }
}

impl CoinSource for BitCoins {
    fn draw(&mut self, numerators: &[u64], bits: u32) -> Result<usize, Interrupt> {
        let end = self.pos + bits as usize;
        if end > self.bits.len() {
            return Err(Error::CoinsExhausted(self.bits.len()).into());
        }
        let u = BitString::new(self.bits.bits()[self.pos..end].to_vec()).to_uint();
        self.pos = end;
        Ok(cell_of(numerators, u))
    }
}

/// Coins from a seeded ChaCha8 stream.
///
/// Stream `s` of seed `seed` is independent of every other stream, so sample
/// `i` of party `p` can use stream `i * parties + p` and be reproduced without
/// generating the samples before it.
pub struct RngCoins {
    rng: ChaCha8Rng,
    consumed: u64,
}

impl RngCoins {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngCoins { rng, consumed: 0 }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }
}

impl CoinSource for RngCoins {
    fn draw(&mut self, numerators: &[u64], bits: u32) -> Result<usize, Interrupt> {
        self.consumed += u64::from(bits);
        let u = if bits == 0 { 0 } else { self.rng.gen::<u64>() >> (64 - bits) };
        Ok(cell_of(numerators, u))
    }
}

/// Replays outcome indices; interrupts with [`Interrupt::Pending`] when the
/// script is exhausted, remembering the draw that was requested.
#[derive(Clone, Debug, Default)]
pub struct ScriptCoins {
    script: Vec<usize>,
    pos: usize,
    pending: Option<(Vec<u64>, u32)>,
}

impl ScriptCoins {
    pub fn new(script: Vec<usize>) -> Self {
        ScriptCoins {
            script,
            pos: 0,
            pending: None,
        }
    }
}

impl CoinSource for ScriptCoins {
    fn draw(&mut self, numerators: &[u64], bits: u32) -> Result<usize, Interrupt> {
        if let Some(&i) = self.script.get(self.pos) {
            self.pos += 1;
            return Ok(i);
        }
        self.pending = Some((numerators.to_vec(), bits));
        Err(Interrupt::Pending)
    }
}

/// One leaf of the coin tree: its exact probability and the run's result.
#[derive(Clone, Debug)]
pub struct Branch<T> {
    pub weight: Q,
    pub value: T,
}

/// Runs `run` on every branch of the joint coin tree of `parties`
/// independent coin sources.
///
/// `run` must be a pure function of the coins it draws. Leaves are returned
/// in lexicographic order of their outcome scripts and their weights sum to
/// exactly one.
pub fn enumerate<T>(
    parties: usize,
    mut run: impl FnMut(&mut [ScriptCoins]) -> Result<T, Interrupt>,
) -> Result<Vec<Branch<T>>, Error> {
    let mut leaves = Vec::new();
    let mut stack = vec![(vec![Vec::<usize>::new(); parties], Q::one())];
    while let Some((scripts, weight)) = stack.pop() {
        let mut sources: Vec<ScriptCoins> = scripts.iter().cloned().map(ScriptCoins::new).collect();
        match run(&mut sources) {
            Ok(value) => leaves.push(Branch { weight, value }),
            Err(Interrupt::Failed(e)) => return Err(e),
            Err(Interrupt::Pending) => {
                let (party, (numerators, bits)) = sources
                    .iter_mut()
                    .enumerate()
                    .find_map(|(p, s)| s.pending.take().map(|d| (p, d)))
                    .ok_or_else(|| Error::Definition("run interrupted without a pending draw".into()))?;
                let den = BigInt::one() << bits;
                for (i, &n) in numerators.iter().enumerate().rev() {
                    if n == 0 {
                        continue;
                    }
                    let mut next = scripts.clone();
                    next[party].push(i);
                    stack.push((next, &weight * Q::new(BigInt::from(n), den.clone())));
                }
            }
        }
    }
    Ok(leaves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn bit_coins_read_big_endian_cells() {
        // cells: [0,3) -> 0, [3,8) -> 1
        let mut coins = BitCoins::new("011010".into());
        assert_eq!(coins.draw(&[3, 5], 3).unwrap(), 1); // 011 = 3
        assert_eq!(coins.draw(&[3, 5], 3).unwrap(), 0); // 010 = 2
        assert_eq!(coins.consumed().len(), 6);
        assert!(coins.draw(&[1, 1], 1).is_err());
    }

    #[test]
    fn enumerate_weights_sum_to_one() {
        let leaves = enumerate(2, |c| {
            let a = c[0].draw(&[1, 3], 2)?;
            let b = if a == 1 { c[1].draw(&[1, 1], 1)? } else { 9 };
            Ok((a, b))
        })
        .unwrap();
        let values: Vec<_> = leaves.iter().map(|l| l.value).collect();
        assert_eq!(values, vec![(0, 9), (1, 0), (1, 1)]);
        let weights: Vec<_> = leaves.iter().map(|l| l.weight.clone()).collect();
        assert_eq!(weights, vec![q(1, 4), q(3, 8), q(3, 8)]);
    }
}
