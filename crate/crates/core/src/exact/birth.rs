use crate::error::{Result, UrnError};

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-9;

/// Finite-time law of a single-colour pure-birth process.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDistribution {
    pub b0: u64,
    pub m: u64,
    pub t: f64,
    /// Lattice points `b0, b0 + m, ...` up to the truncation.
    pub support: Vec<u64>,
    pub probabilities: Vec<f64>,
    /// Mass that left the truncated lattice.
    pub tail_mass: f64,
}

impl BirthDistribution {
    pub fn pmf(&self, k: u64) -> f64 {
        if k < self.b0 || !(k - self.b0).is_multiple_of(self.m) {
            return 0.0;
        }
        let j = ((k - self.b0) / self.m) as usize;
        self.probabilities.get(j).copied().unwrap_or(0.0)
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.probabilities)
            .take_while(|(&k, _)| k as f64 <= x)
            .map(|(_, p)| p)
            .sum()
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.probabilities)
            .take_while(|(&k, _)| (k as f64) < x)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probabilities)
            .map(|(&k, p)| k as f64 * p)
            .sum()
    }
}

/// Integrates the forward equations `p'_k = (k - m) p_{k-m} - k p_k` on
/// `{b0, b0 + m, ..., <= max_count}` with classical RK4.
///
/// The step is `min(1e-3, 1 / (10 max_count))`, shrunk so that it divides `t`.
pub fn birth_process_distribution(
    b0: u64,
    m: u64,
    t: f64,
    max_count: u64,
    tail_tolerance: f64,
) -> Result<BirthDistribution> {
    if b0 == 0 || m == 0 || t.is_nan() || t <= 0.0 || max_count <= b0 {
        return Err(UrnError::Precondition(format!(
            "birth process needs b0 >= 1, m >= 1, t > 0 and truncation > b0 \
             (b0={b0}, m={m}, t={t}, truncation={max_count})"
        )));
    }
    let support: Vec<u64> = (b0..=max_count).step_by(m as usize).collect();
    let rates: Vec<f64> = support.iter().map(|&k| k as f64).collect();
    let mut p = vec![0.0; support.len()];
    p[0] = 1.0;

    let h_max = (1e-3_f64).min(1.0 / (10.0 * max_count as f64));
    let steps = (t / h_max).ceil().max(1.0) as usize;
    let h = t / steps as f64;

    let deriv = |p: &[f64], out: &mut [f64]| {
        for j in 0..p.len() {
            let inflow = if j > 0 { rates[j - 1] * p[j - 1] } else { 0.0 };
            out[j] = inflow - rates[j] * p[j];
        }
    };
    let n = p.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for _ in 0..steps {
        deriv(&p, &mut k1);
        for j in 0..n {
            tmp[j] = p[j] + 0.5 * h * k1[j];
        }
        deriv(&tmp, &mut k2);
        for j in 0..n {
            tmp[j] = p[j] + 0.5 * h * k2[j];
        }
        deriv(&tmp, &mut k3);
        for j in 0..n {
            tmp[j] = p[j] + h * k3[j];
        }
        deriv(&tmp, &mut k4);
        for j in 0..n {
            p[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }

    let tail_mass = (1.0 - p.iter().sum::<f64>()).max(0.0);
    if tail_mass > tail_tolerance {
        return Err(UrnError::TailMassTooLarge {
            mass: tail_mass,
            tolerance: tail_tolerance,
        });
    }
    Ok(BirthDistribution {
        b0,
        m,
        t,
        support,
        probabilities: p,
        tail_mass,
    })
}
