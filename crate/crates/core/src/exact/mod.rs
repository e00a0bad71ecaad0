//! Exact computations over the reachable lattice.
//!
//! After `n` draws the urn sits at `initial + (k_0 m_0, ..., k_{q-1} m_{q-1})`
//! for some composition `k` of `n`, so every law here is a finite sparse map.

mod birth;
mod prob;

use std::collections::{BTreeMap, BTreeSet};

use num::BigRational;

pub use birth::{birth_process_distribution, BirthDistribution, DEFAULT_TAIL_TOLERANCE};
pub use prob::{Compensated, Probability};

use crate::error::{Result, UrnError};
use crate::urn::{DominanceCriterion, ReplacementRule, UrnState};

/// Cumulative number of live states the DP may touch.
pub const DEFAULT_STATE_BUDGET: u64 = 10_000_000;
pub const DEFAULT_PATH_CAP: u64 = 1_000_000;
/// Horizons up to this length run in rational arithmetic under [`Arithmetic::Auto`].
pub const EXACT_AUTO_LIMIT: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    Exact,
    Float,
    #[default]
    Auto,
}

impl Arithmetic {
    pub fn is_exact_for(self, n: u64) -> bool {
        match self {
            Arithmetic::Exact => true,
            Arithmetic::Float => false,
            Arithmetic::Auto => n <= EXACT_AUTO_LIMIT,
        }
    }
}

impl std::str::FromStr for Arithmetic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" | "rational" => Ok(Arithmetic::Exact),
            "float" => Ok(Arithmetic::Float),
            "auto" => Ok(Arithmetic::Auto),
            other => Err(format!("unknown arithmetic mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution<P> {
    pub step: u64,
    pub entries: BTreeMap<Vec<u64>, P>,
}

pub type ExactDistribution = StateDistribution<BigRational>;

impl<P: Probability> StateDistribution<P> {
    pub fn point_mass(state: &UrnState) -> Self {
        Self {
            step: state.step,
            entries: BTreeMap::from([(state.counts.clone(), P::one())]),
        }
    }

    pub fn total_mass(&self) -> P {
        let mut acc = P::zero();
        for p in self.entries.values() {
            acc.add_assign(p);
        }
        acc
    }

    pub fn probability(&self, counts: &[u64]) -> P {
        self.entries.get(counts).cloned().unwrap_or_else(P::zero)
    }

    /// Probability of the event `pred(counts)`.
    pub fn mass_where(&self, mut pred: impl FnMut(&[u64]) -> bool) -> P {
        let mut acc = P::zero();
        for (k, p) in &self.entries {
            if pred(k) {
                acc.add_assign(p);
            }
        }
        acc
    }

    pub fn to_f64(&self) -> BTreeMap<Vec<u64>, f64> {
        self.entries
            .iter()
            .map(|(k, p)| (k.clone(), p.to_f64()))
            .collect()
    }
}

/// `p_0, ..., p_N`: probability that the criterion held at every step up to `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve<P> {
    pub values: Vec<P>,
}

impl<P: Probability> SurvivalCurve<P> {
    pub fn at(&self, n: usize) -> &P {
        &self.values[n]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Probability::to_f64).collect()
    }
}

pub fn reachable_states(initial: &UrnState, rule: &ReplacementRule, n: u64) -> BTreeSet<Vec<u64>> {
    let mut out = BTreeSet::new();
    let mut k = vec![0u64; initial.colours()];
    compositions(&mut k, 0, n, &mut |k| {
        out.insert(
            initial
                .counts
                .iter()
                .zip(k)
                .enumerate()
                .map(|(i, (&c, &ki))| c + ki * rule.reinforcement(i))
                .collect(),
        );
    });
    out
}

fn compositions(k: &mut Vec<u64>, idx: usize, remaining: u64, f: &mut impl FnMut(&[u64])) {
    if idx + 1 == k.len() {
        k[idx] = remaining;
        f(k);
        return;
    }
    for x in 0..=remaining {
        k[idx] = x;
        compositions(k, idx + 1, remaining - x, f);
    }
}

fn check_rule(initial: &UrnState, rule: &ReplacementRule) -> Result<()> {
    if initial.colours() != rule.colours() {
        return Err(UrnError::DimensionMismatch {
            expected: rule.colours(),
            got: initial.colours(),
        });
    }
    if initial.total() == 0 {
        return Err(UrnError::EmptyUrn);
    }
    Ok(())
}

/// One step of the forward recursion: `P'(s + m_i e_i) += P(s) s_i / |s|`.
fn push_forward<P: Probability>(
    current: &BTreeMap<Vec<u64>, P>,
    rule: &ReplacementRule,
) -> BTreeMap<Vec<u64>, P> {
    let mut next: BTreeMap<Vec<u64>, P> = BTreeMap::new();
    for (counts, p) in current {
        let total: u64 = counts.iter().sum();
        for (i, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mut to = counts.clone();
            to[i] += rule.reinforcement(i);
            let w = p.scaled(c, total);
            next.entry(to).or_insert_with(P::zero).add_assign(&w);
        }
    }
    next
}

/// Exact law of the urn after `n` draws.
pub fn state_distribution<P: Probability>(
    initial: &UrnState,
    rule: &ReplacementRule,
    n: u64,
    budget: u64,
) -> Result<StateDistribution<P>> {
    check_rule(initial, rule)?;
    let mut entries = BTreeMap::from([(initial.counts.clone(), P::one())]);
    let mut touched = 1u64;
    for _ in 0..n {
        entries = push_forward(&entries, rule);
        touched += entries.len() as u64;
        if touched > budget {
            return Err(UrnError::BudgetExceeded {
                what: "state",
                limit: budget,
            });
        }
    }
    Ok(StateDistribution {
        step: initial.step + n,
        entries,
    })
}

/// Survival curve of a dominance criterion up to step `n`.
///
/// States that ever violated the criterion are lumped into one absorbing
/// failure class and dropped, so only live states are propagated.
pub fn survival_probability<P: Probability>(
    initial: &UrnState,
    rule: &ReplacementRule,
    n: u64,
    crit: &DominanceCriterion,
    budget: u64,
) -> Result<SurvivalCurve<P>> {
    check_rule(initial, rule)?;
    crit.validate(initial.colours())?;
    let mut live = BTreeMap::new();
    if crit.holds(&initial.counts) {
        live.insert(initial.counts.clone(), P::one());
    }
    let mut values = Vec::with_capacity(n as usize + 1);
    values.push(mass(&live));
    let mut touched = 1u64;
    for _ in 0..n {
        let mut next = push_forward(&live, rule);
        next.retain(|k, _| crit.holds(k));
        live = next;
        touched += live.len() as u64;
        if touched > budget {
            return Err(UrnError::BudgetExceeded {
                what: "state",
                limit: budget,
            });
        }
        values.push(mass(&live));
    }
    Ok(SurvivalCurve { values })
}

fn mass<P: Probability>(m: &BTreeMap<Vec<u64>, P>) -> P {
    let mut acc = P::zero();
    for p in m.values() {
        acc.add_assign(p);
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathProbability {
    pub draws: Vec<usize>,
    pub probability: BigRational,
}

/// Every length-`n` draw sequence with its exact probability.
///
/// Sequences that draw an absent colour have probability zero and are still
/// listed, so the output always has `q^n` entries.
pub fn enumerate_paths(
    initial: &UrnState,
    rule: &ReplacementRule,
    n: u64,
    cap: u64,
) -> Result<Vec<PathProbability>> {
    check_rule(initial, rule)?;
    let q = initial.colours() as u64;
    let count = u32::try_from(n)
        .ok()
        .and_then(|n| q.checked_pow(n))
        .filter(|&c| c <= cap)
        .ok_or(UrnError::BudgetExceeded {
            what: "path",
            limit: cap,
        })?;
    let mut out = Vec::with_capacity(count as usize);
    let mut draws = Vec::with_capacity(n as usize);
    let mut counts = initial.counts.clone();
    walk(
        &mut counts,
        &mut draws,
        <BigRational as Probability>::one(),
        n,
        rule,
        &mut out,
    );
    Ok(out)
}

fn walk(
    counts: &mut Vec<u64>,
    draws: &mut Vec<usize>,
    prob: BigRational,
    remaining: u64,
    rule: &ReplacementRule,
    out: &mut Vec<PathProbability>,
) {
    if remaining == 0 {
        out.push(PathProbability {
            draws: draws.clone(),
            probability: prob,
        });
        return;
    }
    let total: u64 = counts.iter().sum();
    for i in 0..counts.len() {
        let p = prob.scaled(counts[i], total);
        counts[i] += rule.reinforcement(i);
        draws.push(i);
        walk(counts, draws, p, remaining - 1, rule, out);
        draws.pop();
        counts[i] -= rule.reinforcement(i);
    }
}

/// Sums path probabilities by end state.
pub fn aggregate_paths(
    paths: &[PathProbability],
    initial: &UrnState,
    rule: &ReplacementRule,
) -> BTreeMap<Vec<u64>, BigRational> {
    let mut out: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
    for path in paths {
        if Probability::is_zero(&path.probability) {
            continue;
        }
        let mut end = initial.counts.clone();
        for &d in &path.draws {
            end[d] += rule.reinforcement(d);
        }
        out.entry(end)
            .or_insert_with(<BigRational as Probability>::zero)
            .add_assign(&path.probability);
    }
    out
}
