//! Discrete-time unfair Pólya urn.
//!
//! A ball is drawn uniformly at random; if it has colour `i` it goes back
//! together with `m[i]` extra balls of colour `i`. Colour 0 plays the role of
//! "black" in the two-colour setting, colour 1 is "white".

use std::fmt;

use crate::error::{Result, UrnError};
use crate::variates::VariateSource;

/// Per-colour reinforcement counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReplacementRule {
    m: Vec<u64>,
}

impl ReplacementRule {
    pub fn new(m: Vec<u64>) -> Result<Self> {
        if m.len() < 2 {
            return Err(UrnError::TooFewColours(m.len()));
        }
        if let Some(colour) = m.iter().position(|&x| x == 0) {
            return Err(UrnError::NonPositiveReinforcement { colour });
        }
        Ok(Self { m })
    }

    /// Same as [`ReplacementRule::new`] but accepts signed input, so that
    /// non-positive entries can be reported rather than rejected by the type.
    pub fn from_signed(m: &[i64]) -> Result<Self> {
        if let Some(colour) = m.iter().position(|&x| x <= 0) {
            return Err(UrnError::NonPositiveReinforcement { colour });
        }
        Self::new(m.iter().map(|&x| x as u64).collect())
    }

    pub fn colours(&self) -> usize {
        self.m.len()
    }

    pub fn reinforcement(&self, colour: usize) -> u64 {
        self.m[colour]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.m
    }
}

/// Ball counts per colour after `step` draws.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UrnState {
    pub counts: Vec<u64>,
    pub step: u64,
}

impl UrnState {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn colours(&self) -> usize {
        self.counts.len()
    }

    /// Adds `m[colour]` balls of `colour` and advances the step counter.
    pub fn reinforce(&mut self, colour: usize, rule: &ReplacementRule) {
        self.counts[colour] += rule.reinforcement(colour);
        self.step += 1;
    }
}

impl fmt::Display for UrnState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Validates the initial composition against `rule` and returns the step-0 state.
///
/// Two colours may start with one colour absent, e.g. `w0 = 0`. With three or
/// more colours every colour needs at least one ball.
pub fn new_urn(initial_counts: &[u64], rule: &ReplacementRule) -> Result<UrnState> {
    if initial_counts.len() != rule.colours() {
        return Err(UrnError::DimensionMismatch {
            expected: rule.colours(),
            got: initial_counts.len(),
        });
    }
    if initial_counts.iter().all(|&c| c == 0) {
        return Err(UrnError::EmptyUrn);
    }
    if initial_counts.len() > 2 {
        if let Some(colour) = initial_counts.iter().position(|&c| c == 0) {
            return Err(UrnError::MissingColour {
                colour,
                colours: initial_counts.len(),
            });
        }
    }
    Ok(UrnState {
        counts: initial_counts.to_vec(),
        step: 0,
    })
}

/// Picks a ball uniformly among `total` and returns its colour.
pub(crate) fn pick_colour<V: VariateSource + ?Sized>(
    counts: &[u64],
    total: u64,
    rng: &mut V,
) -> usize {
    let mut ball = rng.next_below(total);
    for (i, &c) in counts.iter().enumerate() {
        if ball < c {
            return i;
        }
        ball -= c;
    }
    unreachable!("ball index beyond total count")
}

/// One draw: colour `i` with probability `counts[i] / total`, then reinforce.
pub fn draw_step<V: VariateSource + ?Sized>(
    state: &UrnState,
    rule: &ReplacementRule,
    rng: &mut V,
) -> Result<(usize, UrnState)> {
    let total = state.total();
    if total == 0 {
        return Err(UrnError::EmptyUrn);
    }
    let colour = pick_colour(&state.counts, total, rng);
    let mut next = state.clone();
    next.reinforce(colour, rule);
    Ok((colour, next))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub initial: UrnState,
    pub draws: Vec<usize>,
    /// `states[k]` is the state after `draws[k]`.
    pub states: Vec<UrnState>,
}

impl Trajectory {
    /// Builds a trajectory by applying a fixed draw sequence.
    pub fn from_draws(initial: UrnState, draws: Vec<usize>, rule: &ReplacementRule) -> Self {
        let mut current = initial.clone();
        let states = draws
            .iter()
            .map(|&c| {
                current.reinforce(c, rule);
                current.clone()
            })
            .collect();
        Self {
            initial,
            draws,
            states,
        }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// State at step `n`, where step 0 is the initial state.
    pub fn state_at(&self, n: usize) -> &UrnState {
        if n == 0 {
            &self.initial
        } else {
            &self.states[n - 1]
        }
    }

    pub fn final_state(&self) -> &UrnState {
        self.states.last().unwrap_or(&self.initial)
    }

    /// Initial state followed by every post-draw state.
    pub fn iter_states(&self) -> impl Iterator<Item = &UrnState> {
        std::iter::once(&self.initial).chain(self.states.iter())
    }
}

pub fn run_trajectory<V: VariateSource + ?Sized>(
    state: &UrnState,
    rule: &ReplacementRule,
    n_steps: u64,
    rng: &mut V,
) -> Result<Trajectory> {
    if state.total() == 0 {
        return Err(UrnError::EmptyUrn);
    }
    let mut draws = Vec::with_capacity(n_steps as usize);
    let mut states = Vec::with_capacity(n_steps as usize);
    let mut current = state.clone();
    let mut total = current.total();
    for _ in 0..n_steps {
        let colour = pick_colour(&current.counts, total, rng);
        current.reinforce(colour, rule);
        total += rule.reinforcement(colour);
        draws.push(colour);
        states.push(current.clone());
    }
    Ok(Trajectory {
        initial: state.clone(),
        draws,
        states,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    /// Focus colour strictly ahead of the single other colour (two colours only).
    PairwiseStrict,
    /// Focus colour strictly more than all other colours combined.
    Majority,
    /// Focus colour strictly more than every other single colour.
    Plurality,
}

impl CriterionKind {
    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::PairwiseStrict => "pairwise",
            CriterionKind::Majority => "majority",
            CriterionKind::Plurality => "plurality",
        }
    }
}

impl std::str::FromStr for CriterionKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pairwise" | "pairwise-strict" => Ok(CriterionKind::PairwiseStrict),
            "majority" => Ok(CriterionKind::Majority),
            "plurality" => Ok(CriterionKind::Plurality),
            other => Err(format!("unknown criterion '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DominanceCriterion {
    pub kind: CriterionKind,
    pub focus: usize,
}

impl DominanceCriterion {
    pub fn new(kind: CriterionKind) -> Self {
        Self { kind, focus: 0 }
    }

    pub fn with_focus(kind: CriterionKind, focus: usize) -> Self {
        Self { kind, focus }
    }

    pub fn pairwise() -> Self {
        Self::new(CriterionKind::PairwiseStrict)
    }

    pub fn validate(&self, colours: usize) -> Result<()> {
        let ok = match self.kind {
            CriterionKind::PairwiseStrict => colours == 2,
            CriterionKind::Majority | CriterionKind::Plurality => colours >= 2,
        } && self.focus < colours;
        if ok {
            Ok(())
        } else {
            Err(UrnError::IncompatibleCriterion {
                criterion: format!("{}(focus={})", self.kind.name(), self.focus),
                colours,
            })
        }
    }

    /// Whether the counts satisfy the criterion. Ties are failures.
    pub fn holds(&self, counts: &[u64]) -> bool {
        let lead = counts[self.focus];
        let others = counts
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.focus)
            .map(|(_, &c)| c);
        match self.kind {
            CriterionKind::PairwiseStrict | CriterionKind::Plurality => {
                others.into_iter().all(|c| lead > c)
            }
            CriterionKind::Majority => lead > others.sum::<u64>(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DominanceCheck {
    pub holds: bool,
    /// Smallest step at which the criterion fails, step 0 included.
    pub first_failure: Option<u64>,
}

pub fn check_dominance_prefix(
    traj: &Trajectory,
    crit: &DominanceCriterion,
) -> Result<DominanceCheck> {
    crit.validate(traj.initial.colours())?;
    let first_failure = traj
        .iter_states()
        .position(|s| !crit.holds(&s.counts))
        .map(|n| n as u64);
    Ok(DominanceCheck {
        holds: first_failure.is_none(),
        first_failure,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofPath {
    pub trajectory: Trajectory,
    pub positive_throughout: bool,
}

/// `k_b` black draws followed by `k_w` white draws from `(b0, w0)`.
///
/// Along such a path `B_n - W_n` rises and then falls, so it stays positive
/// exactly when it is positive at both ends. `positive_throughout` is decided
/// from the two endpoints only.
pub fn construct_proof_path(
    b0: u64,
    w0: u64,
    rule: &ReplacementRule,
    k_b: u64,
    k_w: u64,
) -> Result<ProofPath> {
    if rule.colours() != 2 {
        return Err(UrnError::DimensionMismatch {
            expected: 2,
            got: rule.colours(),
        });
    }
    if b0 <= w0 {
        return Err(UrnError::Precondition(format!(
            "proof path needs b0 > w0, got b0={b0}, w0={w0}"
        )));
    }
    let initial = new_urn(&[b0, w0], rule)?;
    let draws: Vec<usize> = std::iter::repeat_n(0, k_b as usize)
        .chain(std::iter::repeat_n(1, k_w as usize))
        .collect();
    let trajectory = Trajectory::from_draws(initial, draws, rule);
    let b_end = b0 + k_b * rule.reinforcement(0);
    let w_end = w0 + k_w * rule.reinforcement(1);
    Ok(ProofPath {
        trajectory,
        positive_throughout: b_end > w_end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variates::{seeded_rng, ScriptedVariates};

    fn rule(m: &[u64]) -> ReplacementRule {
        ReplacementRule::new(m.to_vec()).unwrap()
    }

    #[test]
    fn new_urn_examples() {
        let s = new_urn(&[2, 1], &rule(&[1, 1])).unwrap();
        assert_eq!(s.counts, vec![2, 1]);
        assert_eq!(s.step, 0);
        let s = new_urn(&[1, 1], &rule(&[5, 3])).unwrap();
        assert_eq!(s.counts, vec![1, 1]);
        assert_eq!(new_urn(&[0, 0], &rule(&[1, 1])), Err(UrnError::EmptyUrn));
    }

    #[test]
    fn new_urn_errors() {
        assert!(matches!(
            new_urn(&[2, 1, 1], &rule(&[1, 1])),
            Err(UrnError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
        assert_eq!(
            ReplacementRule::from_signed(&[1, 0]),
            Err(UrnError::NonPositiveReinforcement { colour: 1 })
        );
        assert_eq!(
            ReplacementRule::from_signed(&[-2, 1]),
            Err(UrnError::NonPositiveReinforcement { colour: 0 })
        );
        assert_eq!(
            ReplacementRule::new(vec![3]),
            Err(UrnError::TooFewColours(1))
        );
        // w0 = 0 is fine for two colours but not for three.
        assert!(new_urn(&[2, 0], &rule(&[1, 1])).is_ok());
        assert!(matches!(
            new_urn(&[2, 0, 1], &rule(&[1, 1, 1])),
            Err(UrnError::MissingColour { colour: 1, .. })
        ));
    }

    #[test]
    fn draw_step_adds_reinforcement() {
        let r = rule(&[2, 3]);
        let s = new_urn(&[2, 1], &r).unwrap();
        // Ball index 2 of 3 is the white one.
        let mut v = ScriptedVariates::new(vec![0.9]);
        let (c, next) = draw_step(&s, &r, &mut v).unwrap();
        assert_eq!(c, 1);
        assert_eq!(next.counts, vec![2, 4]);
        assert_eq!(next.step, 1);
    }

    #[test]
    fn draw_step_never_picks_absent_colour() {
        let r = rule(&[4, 7]);
        let s = new_urn(&[5, 0], &r).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..1000 {
            assert_eq!(draw_step(&s, &r, &mut rng).unwrap().0, 0);
        }
    }

    #[test]
    fn run_trajectory_forced_draws() {
        let r = rule(&[1, 1]);
        let s = new_urn(&[2, 1], &r).unwrap();
        // totals 3, 4, 5: u=0.1 -> black, 0.1 -> black, 0.9 -> white
        let mut v = ScriptedVariates::new(vec![0.1, 0.1, 0.9]);
        let t = run_trajectory(&s, &r, 3, &mut v).unwrap();
        assert_eq!(t.draws, vec![0, 0, 1]);
        let counts: Vec<_> = t.states.iter().map(|s| s.counts.clone()).collect();
        assert_eq!(counts, vec![vec![3, 1], vec![4, 1], vec![4, 2]]);

        let empty = run_trajectory(&s, &r, 0, &mut v).unwrap();
        assert!(empty.draws.is_empty() && empty.states.is_empty());
        assert_eq!(empty.final_state(), &s);
    }

    #[test]
    fn dominance_prefix_examples() {
        let r = rule(&[1, 1]);
        let s = new_urn(&[2, 1], &r).unwrap();
        let tie = Trajectory::from_draws(s.clone(), vec![1], &r);
        let check = check_dominance_prefix(&tie, &DominanceCriterion::pairwise()).unwrap();
        assert_eq!(
            check,
            DominanceCheck {
                holds: false,
                first_failure: Some(1)
            }
        );

        let ok = Trajectory::from_draws(s, vec![0, 0, 1], &r);
        let check = check_dominance_prefix(&ok, &DominanceCriterion::pairwise()).unwrap();
        assert!(check.holds);
        assert_eq!(check.first_failure, None);
    }

    #[test]
    fn majority_and_plurality_at_step_zero() {
        let r = rule(&[1, 1, 1]);
        let s = new_urn(&[3, 2, 2], &r).unwrap();
        let t = Trajectory::from_draws(s, vec![], &r);
        let maj =
            check_dominance_prefix(&t, &DominanceCriterion::new(CriterionKind::Majority)).unwrap();
        assert_eq!(maj.first_failure, Some(0));
        let plu =
            check_dominance_prefix(&t, &DominanceCriterion::new(CriterionKind::Plurality)).unwrap();
        assert!(plu.holds);
        assert!(check_dominance_prefix(&t, &DominanceCriterion::pairwise()).is_err());
    }

    #[test]
    fn proof_path_examples() {
        let r = rule(&[1, 1]);
        let p = construct_proof_path(2, 1, &r, 2, 1).unwrap();
        let counts: Vec<_> = p
            .trajectory
            .iter_states()
            .map(|s| s.counts.clone())
            .collect();
        assert_eq!(counts, vec![vec![2, 1], vec![3, 1], vec![4, 1], vec![4, 2]]);
        assert!(p.positive_throughout);

        let p = construct_proof_path(2, 1, &r, 0, 1).unwrap();
        assert_eq!(p.trajectory.final_state().counts, vec![2, 2]);
        assert!(!p.positive_throughout);

        let r = rule(&[3, 2]);
        let p = construct_proof_path(4, 1, &r, 5, 7).unwrap();
        assert_eq!(
            p.trajectory.final_state().counts,
            vec![4 + 5 * 3, 1 + 7 * 2]
        );

        assert!(construct_proof_path(1, 1, &r, 1, 1).is_err());
        assert!(construct_proof_path(2, 1, &rule(&[1, 1, 1]), 1, 1).is_err());
    }
}
