//! Continuous-time embedding of the urn.
//!
//! Each ball carries an independent Exp(1) clock; when a colour-`i` clock
//! rings the ball is replaced by `m[i] + 1` balls of colour `i`. Colours then
//! evolve as independent pure-birth processes, and the sequence of states at
//! ring times is the urn chain.
//!
//! The race between clocks is simulated by superposition: the next ring comes
//! after an Exp(total) wait and belongs to a uniformly chosen ball. Waits use
//! inverse transform on the variate stream.

use crate::error::{Result, UrnError};
use crate::urn::{pick_colour, ReplacementRule, Trajectory, UrnState};
use crate::variates::VariateSource;

pub const DEFAULT_EVENT_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub colour: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousTrajectory {
    pub initial: UrnState,
    pub events: Vec<Event>,
    /// `states[k]` holds from `events[k].time` until the next event.
    pub states: Vec<UrnState>,
    pub horizon: f64,
}

impl ContinuousTrajectory {
    /// Counts at time `t` (right-continuous: the state after the last event at or before `t`).
    pub fn counts_at(&self, t: f64) -> Result<&[u64]> {
        if t > self.horizon {
            return Err(UrnError::BeyondHorizon {
                t,
                horizon: self.horizon,
            });
        }
        let k = self.events.partition_point(|e| e.time <= t);
        Ok(if k == 0 {
            &self.initial.counts
        } else {
            &self.states[k - 1].counts
        })
    }
}

/// Waiting time to the next ring and the colour of the ringing ball.
pub fn next_event<V: VariateSource + ?Sized>(
    state: &UrnState,
    rng: &mut V,
) -> Result<(f64, usize)> {
    let total = state.total();
    if total == 0 {
        return Err(UrnError::EmptyUrn);
    }
    Ok(race(&state.counts, total, rng))
}

fn race<V: VariateSource + ?Sized>(counts: &[u64], total: u64, rng: &mut V) -> (f64, usize) {
    let wait = -rng.next_open01().ln() / total as f64;
    let colour = pick_colour(counts, total, rng);
    (wait, colour)
}

/// Simulates every event with time at most `t_max`.
pub fn run_until<V: VariateSource + ?Sized>(
    state: &UrnState,
    rule: &ReplacementRule,
    t_max: f64,
    event_cap: u64,
    rng: &mut V,
) -> Result<ContinuousTrajectory> {
    let mut events = Vec::new();
    let mut states = Vec::new();
    let mut current = state.clone();
    drive(
        &mut current,
        rule,
        t_max,
        event_cap,
        rng,
        |time, colour, s| {
            events.push(Event { time, colour });
            states.push(s.clone());
        },
    )?;
    Ok(ContinuousTrajectory {
        initial: state.clone(),
        events,
        states,
        horizon: t_max,
    })
}

/// Counts at `t_max` without recording the path. Consumes the variate
/// stream exactly as [`run_until`] does.
pub fn counts_at_time<V: VariateSource + ?Sized>(
    state: &UrnState,
    rule: &ReplacementRule,
    t_max: f64,
    event_cap: u64,
    rng: &mut V,
) -> Result<UrnState> {
    let mut current = state.clone();
    drive(&mut current, rule, t_max, event_cap, rng, |_, _, _| {})?;
    Ok(current)
}

fn drive<V, F>(
    current: &mut UrnState,
    rule: &ReplacementRule,
    t_max: f64,
    event_cap: u64,
    rng: &mut V,
    mut on_event: F,
) -> Result<()>
where
    V: VariateSource + ?Sized,
    F: FnMut(f64, usize, &UrnState),
{
    if t_max.is_nan() || t_max <= 0.0 {
        return Err(UrnError::Precondition(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    let mut total = current.total();
    if total == 0 {
        return Err(UrnError::EmptyUrn);
    }
    let mut time = 0.0;
    let mut n_events = 0u64;
    loop {
        let (wait, colour) = race(&current.counts, total, rng);
        let next = time + wait;
        if next > t_max {
            return Ok(());
        }
        // Waits underflowing the time resolution would break strict ordering.
        time = if next > time {
            next
        } else {
            f64::from_bits(time.to_bits() + 1)
        };
        n_events += 1;
        if n_events > event_cap {
            return Err(UrnError::EventCapExceeded {
                cap: event_cap,
                t_max,
            });
        }
        current.reinforce(colour, rule);
        total += rule.reinforcement(colour);
        on_event(time, colour, current);
    }
}

/// The discrete chain observed at ring times.
pub fn jump_chain(ctraj: &ContinuousTrajectory) -> Trajectory {
    Trajectory {
        initial: ctraj.initial.clone(),
        draws: ctraj.events.iter().map(|e| e.colour).collect(),
        states: ctraj.states.clone(),
    }
}

/// Per-colour `exp(-m_i t) X_i(t)` at one time point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSample {
    pub t: f64,
    pub values: Vec<f64>,
}

impl ScaledSample {
    pub fn from_counts(counts: &[u64], rule: &ReplacementRule, t: f64) -> Self {
        let values = counts
            .iter()
            .enumerate()
            .map(|(i, &x)| x as f64 * (-(rule.reinforcement(i) as f64) * t).exp())
            .collect();
        Self { t, values }
    }

    /// `values[1] / values[0]`; equals `W_t / B_t` when both reinforcements agree.
    pub fn ratio(&self) -> f64 {
        self.values[1] / self.values[0]
    }
}

pub fn scaled_sample(
    ctraj: &ContinuousTrajectory,
    rule: &ReplacementRule,
    t: f64,
) -> Result<ScaledSample> {
    if t < 0.0 {
        return Err(UrnError::Precondition(format!(
            "t must be non-negative, got {t}"
        )));
    }
    let counts = ctraj.counts_at(t)?;
    Ok(ScaledSample::from_counts(counts, rule, t))
}
