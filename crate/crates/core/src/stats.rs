//! Confidence intervals and goodness-of-fit checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Result, UrnError};

/// Significance used by the automated acceptance checks.
pub const ACCEPTANCE_SIGNIFICANCE: f64 = 1e-3;

const Z_TABLE: [(f64, f64); 4] = [
    (0.90, 1.644_853_626_951_472_2),
    (0.95, 1.959_963_984_540_054),
    (0.99, 2.575_829_303_548_900_4),
    (0.999, 3.290_526_731_491_925_5),
];

/// Two-sided normal critical value for `confidence`.
pub fn z_value(confidence: f64) -> f64 {
    Z_TABLE
        .iter()
        .find(|(c, _)| (c - confidence).abs() < 1e-12)
        .map(|&(_, z)| z)
        .unwrap_or_else(|| inverse_normal_cdf(0.5 + confidence / 2.0))
}

/// Acklam's rational approximation of the standard normal quantile
/// (relative error below 1.2e-9 on (0, 1)).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    assert!(p > 0.0 && p < 1.0, "quantile level must be in (0, 1)");
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Wilson score interval for a binomial proportion, clamped to [0, 1].
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials || !(confidence > 0.0 && confidence < 1.0) {
        return Err(UrnError::Precondition(format!(
            "wilson interval needs 0 <= successes <= trials, trials >= 1 and confidence in (0, 1) \
             (got {successes}/{trials} at {confidence})"
        )));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = z_value(confidence);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).clamp(0.0, p)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (centre + half).clamp(p, 1.0)
    };
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofResult {
    pub statistic: f64,
    /// Degrees of freedom for chi-square tests, sample size for KS.
    pub size: usize,
    pub significance: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn chi_square_threshold(df: usize, significance: f64) -> f64 {
    ChiSquared::new(df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - significance)
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    observed: f64,
    expected: f64,
}

/// Merges every cell with expected count below 5 into one; if that pool is
/// still below 5 it absorbs the smallest remaining cell. The result depends
/// only on the multiset of cells, not their order.
fn pool_cells(mut cells: Vec<Cell>) -> Vec<Cell> {
    cells.sort_by(|a, b| {
        a.expected
            .total_cmp(&b.expected)
            .then(a.observed.total_cmp(&b.observed))
    });
    let split = cells.partition_point(|c| c.expected < 5.0);
    if split == 0 {
        return cells;
    }
    let mut rest = cells.split_off(split);
    let mut pooled = cells.iter().fold(
        Cell {
            observed: 0.0,
            expected: 0.0,
        },
        |acc, c| Cell {
            observed: acc.observed + c.observed,
            expected: acc.expected + c.expected,
        },
    );
    if pooled.expected < 5.0 && !rest.is_empty() {
        let smallest = rest.remove(0);
        pooled.observed += smallest.observed;
        pooled.expected += smallest.expected;
    }
    rest.push(pooled);
    rest
}

/// Pearson chi-square goodness of fit with small-cell pooling.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], significance: f64) -> Result<GofResult> {
    if observed.len() != expected.len() {
        return Err(UrnError::DimensionMismatch {
            expected: expected.len(),
            got: observed.len(),
        });
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(UrnError::AllZeroObserved);
    }
    let mass: f64 = expected.iter().sum();
    if (mass - 1.0).abs() > 1e-9 || expected.iter().any(|&p| p < 0.0) {
        return Err(UrnError::Precondition(format!(
            "expected probabilities must be non-negative and sum to 1 (sum = {mass})"
        )));
    }
    let cells = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| Cell {
            observed: o as f64,
            expected: p * n as f64,
        })
        .collect();
    let cells = pool_cells(cells);
    if cells.len() < 2 {
        return Err(UrnError::InsufficientDegreesOfFreedom);
    }
    let statistic = cells
        .iter()
        .map(|c| (c.observed - c.expected).powi(2) / c.expected)
        .sum();
    let df = cells.len() - 1;
    let threshold = chi_square_threshold(df, significance);
    Ok(GofResult {
        statistic,
        size: df,
        significance,
        threshold,
        passed: statistic <= threshold,
    })
}

/// Two-sample chi-square homogeneity test on paired category counts.
///
/// Categories whose smaller-sample expected count is below 5 are pooled the
/// same way as in [`chi_square_gof`].
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], significance: f64) -> Result<GofResult> {
    if a.len() != b.len() {
        return Err(UrnError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(UrnError::AllZeroObserved);
    }
    let share = na.min(nb) / (na + nb);
    // Pool on the combined column using the smaller row's expectation, then
    // split each pooled column back into its two rows.
    let mut cols: Vec<(f64, u64, u64)> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| ((x + y) as f64 * share, x, y))
        .collect();
    cols.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let split = cols.partition_point(|c| c.0 < 5.0);
    let mut merged: Vec<(f64, u64, u64)> = cols.split_off(split);
    if split > 0 {
        let mut pool = cols.iter().fold((0.0, 0, 0), |acc, c| {
            (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2)
        });
        if pool.0 < 5.0 && !merged.is_empty() {
            let s = merged.remove(0);
            pool = (pool.0 + s.0, pool.1 + s.1, pool.2 + s.2);
        }
        merged.push(pool);
    }
    if merged.len() < 2 {
        return Err(UrnError::InsufficientDegreesOfFreedom);
    }
    let total = na + nb;
    let statistic = merged
        .iter()
        .map(|&(_, x, y)| {
            let col = (x + y) as f64;
            let ea = na * col / total;
            let eb = nb * col / total;
            (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb
        })
        .sum();
    let df = merged.len() - 1;
    let threshold = chi_square_threshold(df, significance);
    Ok(GofResult {
        statistic,
        size: df,
        significance,
        threshold,
        passed: statistic <= threshold,
    })
}

/// A reference distribution for [`ks_distance`].
pub trait Cdf {
    /// `P(X <= x)`.
    fn cdf(&self, x: f64) -> f64;

    /// `P(X < x)`; equal to `cdf` for continuous laws.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}

impl Cdf for crate::exact::BirthDistribution {
    fn cdf(&self, x: f64) -> f64 {
        crate::exact::BirthDistribution::cdf(self, x)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        crate::exact::BirthDistribution::cdf_left(self, x)
    }
}

/// Kolmogorov-Smirnov distance between a sorted sample and a reference law.
///
/// Both sides of every jump are compared, so atoms in the reference are
/// handled exactly. The decision uses the asymptotic threshold
/// `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`.
pub fn ks_distance<C: Cdf + ?Sized>(
    sample: &[f64],
    reference: &C,
    significance: f64,
) -> Result<GofResult> {
    if sample.is_empty() {
        return Err(UrnError::Precondition(
            "KS distance needs a non-empty sample".into(),
        ));
    }
    if sample.windows(2).any(|w| w[0] > w[1]) {
        return Err(UrnError::Precondition("KS sample must be sorted".into()));
    }
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    let mut below = 0usize;
    let mut i = 0;
    while i < sample.len() {
        let v = sample[i];
        let mut j = i;
        while j < sample.len() && sample[j] == v {
            j += 1;
        }
        let left = (below as f64 / n - reference.cdf_left(v)).abs();
        let right = (j as f64 / n - reference.cdf(v)).abs();
        d = d.max(left).max(right);
        below = j;
        i = j;
    }
    let threshold = (-0.5 * (significance / 2.0).ln()).sqrt() / n.sqrt();
    Ok(GofResult {
        statistic: d.min(1.0),
        size: sample.len(),
        significance,
        threshold,
        passed: d <= threshold,
    })
}
