use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::StrategicGame;
use crate::error::{Error, Result};
use crate::game::ExactEvaluator;
use crate::machine::Machine;
use crate::rational::{serde_q_vec, Q};

/// Exact payoffs of every pure profile; entries are row-major with the last
/// player's index varying fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PayoffTensor {
    pub labels: Vec<Vec<String>>,
    pub entries: Vec<Vec<Q>>,
}

impl PayoffTensor {
    pub fn payoff(&self, idx: &[usize]) -> &[Q] {
        let flat = idx
            .iter()
            .zip(&self.labels)
            .fold(0, |acc, (&i, l)| acc * l.len() + i);
        &self.entries[flat]
    }

    pub fn matrix(&self) -> Result<MatrixGame> {
        if self.labels.len() != 2 {
            return Err(Error::Definition(format!("{} players is not a bimatrix game", self.labels.len())));
        }
        let (r, c) = (self.labels[0].len(), self.labels[1].len());
        let grid = |p: usize| -> Vec<Vec<Q>> {
            (0..r).map(|i| (0..c).map(|j| self.payoff(&[i, j])[p].clone()).collect()).collect()
        };
        MatrixGame::new(self.labels[0].clone(), self.labels[1].clone(), grid(0), grid(1))
    }
}

/// Normal form induced by deterministic machine sets, complexities included.
pub fn induced_normal_form(ev: &ExactEvaluator<'_>, m0: &[Vec<Machine>]) -> Result<PayoffTensor> {
    let m = ev.player_count();
    if m0.len() != m || m0.iter().any(|s| s.is_empty()) {
        return Err(Error::Definition(format!("need a nonempty machine set for each of {m} players")));
    }
    if let Some(bad) = m0.iter().flatten().find(|x| !x.is_deterministic()) {
        return Err(Error::Definition(format!("machine {} is randomized", bad.id())));
    }
    let mut entries = Vec::new();
    let mut idx = vec![0usize; m];
    'outer: loop {
        let profile: Vec<&Machine> = idx.iter().enumerate().map(|(i, &j)| &m0[i][j]).collect();
        entries.push(ev.utilities(&profile)?);
        for i in (0..m).rev() {
            idx[i] += 1;
            if idx[i] < m0[i].len() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    Ok(PayoffTensor {
        labels: m0.iter().map(|s| s.iter().map(|x| x.id().to_string()).collect()).collect(),
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixGame {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    #[serde(with = "grid")]
    pub a: Vec<Vec<Q>>,
    #[serde(with = "grid")]
    pub b: Vec<Vec<Q>>,
}

mod grid {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::rational::{parse_q, Q};

    pub fn serialize<S: Serializer>(g: &[Vec<Q>], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<Vec<String>> = g.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Q>>, D::Error> {
        let text = Vec::<Vec<String>>::deserialize(d)?;
        text.iter()
            .map(|r| r.iter().map(|x| parse_q(x).map_err(serde::de::Error::custom)).collect())
            .collect()
    }
}

impl MatrixGame {
    pub fn new(rows: Vec<String>, cols: Vec<String>, a: Vec<Vec<Q>>, b: Vec<Vec<Q>>) -> Result<Self> {
        let shape_ok = |g: &Vec<Vec<Q>>| g.len() == rows.len() && g.iter().all(|r| r.len() == cols.len());
        if rows.is_empty() || cols.is_empty() || !shape_ok(&a) || !shape_ok(&b) {
            return Err(Error::Definition("payoff matrices must both be rows x cols and nonempty".into()));
        }
        Ok(MatrixGame { rows, cols, a, b })
    }

    /// Zero-sum game with row payoffs `a`.
    pub fn zero_sum(rows: Vec<String>, cols: Vec<String>, a: Vec<Vec<Q>>) -> Result<Self> {
        let b = a.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        Self::new(rows, cols, a, b)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    /// Expected payoff of each pure row against the column mixture `y`.
    pub fn row_values(&self, y: &[Q]) -> Vec<Q> {
        self.a.iter().map(|r| dot(r, y)).collect()
    }

    /// Expected payoff of each pure column against the row mixture `x`.
    pub fn col_values(&self, x: &[Q]) -> Vec<Q> {
        (0..self.cols.len())
            .map(|j| x.iter().zip(&self.b).fold(Q::zero(), |acc, (xi, r)| acc + xi * &r[j]))
            .collect()
    }
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MixedProfile {
    #[serde(with = "serde_q_vec")]
    pub row: Vec<Q>,
    #[serde(with = "serde_q_vec")]
    pub col: Vec<Q>,
}

/// Best-response gaps `(row, col)` of a mixed profile against pure deviations.
pub fn mixed_gaps(mg: &MatrixGame, p: &MixedProfile) -> (Q, Q) {
    let rv = mg.row_values(&p.col);
    let cv = mg.col_values(&p.row);
    let gap = |values: &[Q], mix: &[Q]| {
        let best = values.iter().max().expect("nonempty").clone();
        best - dot(values, mix)
    };
    (gap(&rv, &p.row), gap(&cv, &p.col))
}

/// Solves a square system exactly; `None` when singular.
fn solve(mut m: Vec<Vec<Q>>, mut rhs: Vec<Q>) -> Option<Vec<Q>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = Q::one() / &m[col][col];
        for c in col..n {
            m[col][c] = &m[col][c] * &inv;
        }
        rhs[col] = &rhs[col] * &inv;
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..n {
                    let sub = &f * &m[col][c];
                    m[r][c] -= sub;
                }
                let sub = &f * &rhs[col];
                rhs[r] -= sub;
            }
        }
    }
    Some(rhs)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Mixture over `support` that makes the opponent indifferent among
/// `opp_support`: solves `sum_s pay(o, s) z_s = v` for every `o` and
/// `sum_s z_s = 1`.
fn indifference(support: &[usize], opp_support: &[usize], pay: impl Fn(usize, usize) -> Q, dim: usize) -> Option<Vec<Q>> {
    let k = support.len();
    let mut m = Vec::with_capacity(k + 1);
    let mut rhs = Vec::with_capacity(k + 1);
    for &o in opp_support {
        let mut row: Vec<Q> = support.iter().map(|&s| pay(o, s)).collect();
        row.push(-Q::one());
        m.push(row);
        rhs.push(Q::zero());
    }
    let mut sum = vec![Q::one(); k];
    sum.push(Q::zero());
    m.push(sum);
    rhs.push(Q::one());
    let sol = solve(m, rhs)?;
    let mut full = vec![Q::zero(); dim];
    for (i, &s) in support.iter().enumerate() {
        full[s] = sol[i].clone();
    }
    Some(full)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportEnumeration {
    pub equilibria: Vec<MixedProfile>,
    /// Support pairs whose indifference system had no unique solution. When
    /// nonzero the game is degenerate and equilibria may have been missed.
    pub singular_supports: usize,
}

/// All equilibria found on equal-size support pairs, in enumeration order.
pub fn solve_2p_support_enumeration(mg: &MatrixGame) -> SupportEnumeration {
    let (r, c) = mg.shape();
    let mut equilibria: Vec<MixedProfile> = Vec::new();
    let mut singular = 0;
    for k in 1..=r.min(c) {
        for rows in subsets(r, k) {
            for cols in subsets(c, k) {
                let y = indifference(&cols, &rows, |i, j| mg.a[i][j].clone(), c);
                let x = indifference(&rows, &cols, |j, i| mg.b[i][j].clone(), r);
                let (Some(x), Some(y)) = (x, y) else {
                    singular += 1;
                    continue;
                };
                if x.iter().chain(&y).any(|v| v.is_negative()) {
                    continue;
                }
                let p = MixedProfile { row: x, col: y };
                let (gr, gc) = mixed_gaps(mg, &p);
                if gr.is_zero() && gc.is_zero() && !equilibria.contains(&p) {
                    equilibria.push(p);
                }
            }
        }
    }
    SupportEnumeration {
        equilibria,
        singular_supports: singular,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallSupport {
    pub profile: MixedProfile,
    /// Multisets of action indices; each mixture is uniform over its multiset.
    pub row_multiset: Vec<usize>,
    pub col_multiset: Vec<usize>,
    #[serde(with = "serde_q_vec")]
    pub gaps: Vec<Q>,
}

fn multisets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, size, &mut Vec::new(), &mut out);
    out
}

fn uniform_over(multiset: &[usize], n: usize) -> Vec<Q> {
    let w = Q::new(1.into(), (multiset.len() as i64).into());
    let mut out = vec![Q::zero(); n];
    for &i in multiset {
        out[i] += &w;
    }
    out
}

/// First pair of uniform multiset mixtures with both gaps at most `epsilon`.
///
/// Sizes are visited by increasing `max(s1, s2)`, then `(s1, s2)`; multisets
/// of one size in lexicographic order.
pub fn lmm_small_support_search(mg: &MatrixGame, epsilon: &Q, max_support: usize) -> Result<Option<SmallSupport>> {
    if !epsilon.is_positive() {
        return Err(Error::Definition("small-support search needs epsilon > 0".into()));
    }
    let (r, c) = mg.shape();
    let by_size = |n: usize| -> Vec<Vec<(Vec<usize>, Vec<Q>)>> {
        (0..=max_support)
            .map(|s| {
                if s == 0 {
                    return Vec::new();
                }
                multisets(n, s)
                    .into_iter()
                    .map(|ms| {
                        let mix = uniform_over(&ms, n);
                        (ms, mix)
                    })
                    .collect()
            })
            .collect()
    };
    let rows = by_size(r);
    let cols = by_size(c);
    for s in 1..=max_support {
        for s1 in 1..=s {
            for s2 in 1..=s {
                if s1.max(s2) != s {
                    continue;
                }
                for (rm, x) in &rows[s1] {
                    let cv = mg.col_values(x);
                    for (cm, y) in &cols[s2] {
                        let p = MixedProfile { row: x.clone(), col: y.clone() };
                        let col_gap = cv.iter().max().expect("nonempty").clone() - dot(&cv, y);
                        if col_gap > *epsilon {
                            continue;
                        }
                        let (row_gap, _) = mixed_gaps(mg, &p);
                        if row_gap <= *epsilon {
                            return Ok(Some(SmallSupport {
                                profile: p,
                                row_multiset: rm.clone(),
                                col_multiset: cm.clone(),
                                gaps: vec![row_gap, col_gap],
                            }));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}
