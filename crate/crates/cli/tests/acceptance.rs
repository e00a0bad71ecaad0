//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num::{BigInt, BigRational};
use unfair_urn::embed::{counts_at_time, next_event, DEFAULT_EVENT_CAP};
use unfair_urn::exact::{
    aggregate_paths, birth_process_distribution, enumerate_paths, state_distribution,
    survival_probability, DEFAULT_PATH_CAP, DEFAULT_STATE_BUDGET, DEFAULT_TAIL_TOLERANCE,
};
use unfair_urn::mc::{
    derive_replication_seed, estimate_dominance, estimate_ratio_stats, sample_scaled_limits,
    survival_curve_mc, ExperimentPlan, Horizon,
};
use unfair_urn::stats::{
    chi_square_gof, chi_square_homogeneity, ks_distance, ACCEPTANCE_SIGNIFICANCE,
};
use unfair_urn::{
    check_dominance_prefix, construct_proof_path, new_urn, run_trajectory, seeded_rng,
    DominanceCriterion, ReplacementRule,
};

type Outcome = Result<String, String>;

fn rule(m: &[u64]) -> ReplacementRule {
    ReplacementRule::new(m.to_vec()).unwrap()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exact_matches_enumeration() -> Outcome {
    let mut instances = 0;
    for total in 1..=5u64 {
        for b0 in 0..=total {
            for mb in 1..=3 {
                for mw in 1..=3 {
                    let r = rule(&[mb, mw]);
                    let s0 = new_urn(&[b0, total - b0], &r).map_err(|e| e.to_string())?;
                    for n in 0..=8 {
                        let dp =
                            state_distribution::<BigRational>(&s0, &r, n, DEFAULT_STATE_BUDGET)
                                .map_err(|e| e.to_string())?;
                        let paths = enumerate_paths(&s0, &r, n, DEFAULT_PATH_CAP)
                            .map_err(|e| e.to_string())?;
                        if dp.entries != aggregate_paths(&paths, &s0, &r) {
                            return Err(format!(
                                "mismatch at init=({b0},{}) m=[{mb},{mw}] n={n}",
                                total - b0
                            ));
                        }
                        instances += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{instances} configurations identical"))
}

fn dominance_oracle_values() -> Outcome {
    let r = rule(&[1, 1]);
    let s0 = new_urn(&[2, 1], &r).unwrap();
    let curve = survival_probability::<BigRational>(
        &s0,
        &r,
        3,
        &DominanceCriterion::pairwise(),
        DEFAULT_STATE_BUDGET,
    )
    .map_err(|e| e.to_string())?;
    let frac = |n: u64, d: u64| BigRational::new(BigInt::from(n), BigInt::from(d));
    if curve.values[1] != frac(2, 3) || curve.values[3] != frac(3, 5) {
        return Err(format!("p_1={} p_3={}", curve.values[1], curve.values[3]));
    }
    let covered = (0..20u64)
        .filter(|&seed| {
            let plan =
                ExperimentPlan::new(&[2, 1], r.clone(), Horizon::Steps(3), 100_000, seed).unwrap();
            estimate_dominance(&plan).unwrap().covers(0.6)
        })
        .count();
    check(
        covered >= 18,
        format!("p_1=2/3 p_3=3/5, Wilson 95% covers 3/5 in {covered}/20 seeds"),
    )
}

fn jump_chain_equivalence() -> Outcome {
    let r = rule(&[2, 1]);
    let s0 = new_urn(&[2, 1], &r).unwrap();
    let exact = state_distribution::<BigRational>(&s0, &r, 5, DEFAULT_STATE_BUDGET).unwrap();
    let states: Vec<Vec<u64>> = exact.entries.keys().cloned().collect();
    let probs: Vec<f64> = exact.to_f64().into_values().collect();
    let reps = 100_000;
    let mut discrete = vec![0u64; states.len()];
    let mut embedded = vec![0u64; states.len()];
    let mut rng_d = seeded_rng(derive_replication_seed(3, 0));
    let mut rng_c = seeded_rng(derive_replication_seed(3, 1));
    for _ in 0..reps {
        let end = run_trajectory(&s0, &r, 5, &mut rng_d).unwrap();
        discrete[states.binary_search(&end.final_state().counts).unwrap()] += 1;
        let mut s = s0.clone();
        for _ in 0..5 {
            let (_, c) = next_event(&s, &mut rng_c).unwrap();
            s.reinforce(c, &r);
        }
        embedded[states.binary_search(&s.counts).unwrap()] += 1;
    }
    let two = chi_square_homogeneity(&discrete, &embedded, ACCEPTANCE_SIGNIFICANCE).unwrap();
    let gd = chi_square_gof(&discrete, &probs, ACCEPTANCE_SIGNIFICANCE).unwrap();
    let gc = chi_square_gof(&embedded, &probs, ACCEPTANCE_SIGNIFICANCE).unwrap();
    check(
        two.passed && gd.passed && gc.passed,
        format!(
            "two-sample chi2={:.2} (df {}, crit {:.2}); vs exact: discrete {:.2}, embedding {:.2}",
            two.statistic, two.size, two.threshold, gd.statistic, gc.statistic
        ),
    )
}

fn pure_birth_law() -> Outcome {
    let t = std::f64::consts::LN_2;
    let law = birth_process_distribution(1, 1, t, 80, DEFAULT_TAIL_TOLERANCE)
        .map_err(|e| e.to_string())?;
    let mut tv = law.tail_mass;
    for (&k, &p) in law.support.iter().zip(&law.probabilities) {
        tv += (p - 0.5f64.powi(k as i32)).abs();
    }
    tv += 0.5f64.powi(*law.support.last().unwrap() as i32);
    tv /= 2.0;
    let r = rule(&[1, 1]);
    let s0 = new_urn(&[1, 1], &r).unwrap();
    let mut sample: Vec<f64> = (0..10_000u64)
        .map(|rep| {
            let mut rng = seeded_rng(derive_replication_seed(4, rep));
            counts_at_time(&s0, &r, t, DEFAULT_EVENT_CAP, &mut rng)
                .unwrap()
                .counts[0] as f64
        })
        .collect();
    sample.sort_by(f64::total_cmp);
    let ks = ks_distance(&sample, &law, ACCEPTANCE_SIGNIFICANCE).unwrap();
    check(
        tv < 1e-6 && ks.passed,
        format!(
            "TV={tv:.2e}; KS D={:.4} vs threshold {:.4} (R=10^4)",
            ks.statistic, ks.threshold
        ),
    )
}

fn martingale_mean() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in [1.0, 2.0, 4.0] {
        let plan =
            ExperimentPlan::new(&[2, 1], rule(&[2, 1]), Horizon::Time(t), 10_000, 5).unwrap();
        let lim = sample_scaled_limits(&plan).map_err(|e| e.to_string())?;
        for (i, x0) in [2.0, 1.0].into_iter().enumerate() {
            worst = worst.max((lim.means[i] - x0).abs() / lim.std_errors[i]);
        }
    }
    check(
        worst < 3.0,
        format!("max |mean - x0| / SE = {worst:.2} over t in {{1,2,4}}, both colours"),
    )
}

fn ratio_collapse() -> Outcome {
    let median = |n| {
        let plan =
            ExperimentPlan::new(&[2, 1], rule(&[2, 1]), Horizon::Steps(n), 10_000, 6).unwrap();
        estimate_ratio_stats(&plan, &[0.5]).unwrap().median
    };
    let (small, large) = (median(100), median(10_000));
    check(
        large < small && large < 0.05,
        format!("median W/B: N=10^2 {small:.4}, N=10^4 {large:.4}"),
    )
}

fn perpetual_dominance() -> Outcome {
    let plan =
        ExperimentPlan::new(&[2, 1], rule(&[2, 1]), Horizon::Steps(1000), 1_000_000, 7).unwrap();
    let grid = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];
    let curve = survival_curve_mc(&plan, &grid).map_err(|e| e.to_string())?;
    let p: Vec<f64> = curve.iter().map(|c| c.estimate.estimate).collect();
    let monotone = curve
        .windows(2)
        .all(|w| w[1].estimate.successes <= w[0].estimate.successes);
    let last = curve.last().unwrap().estimate;
    check(
        last.lo > 0.0 && monotone,
        format!(
            "p_1000={:.5} (95% lower {:.5}), p_10-p_100={:.2e}, p_100-p_1000={:.2e}",
            last.estimate,
            last.lo,
            p[3] - p[6],
            p[6] - p[9]
        ),
    )
}

fn proof_path_grid() -> Outcome {
    let crit = DominanceCriterion::pairwise();
    let mut instances = 0u64;
    for b0 in 1..=10u64 {
        for w0 in 0..b0 {
            for mb in 1..=5 {
                for mw in 1..=5 {
                    let r = rule(&[mb, mw]);
                    for kb in 0..=10 {
                        for kw in 0..=10 {
                            let path = construct_proof_path(b0, w0, &r, kb, kw)
                                .map_err(|e| e.to_string())?;
                            let scan = check_dominance_prefix(&path.trajectory, &crit).unwrap();
                            if scan.holds != path.positive_throughout {
                                return Err(format!(
                                    "disagree at ({b0},{w0}) m=[{mb},{mw}] kb={kb} kw={kw}"
                                ));
                            }
                            instances += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{instances} instances agree"))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = ["--m", "2,1", "--init", "2,1", "--seed", "42"];
    let runs: [(&str, &[&str]); 10] = [
        ("simulate", &["--steps", "500"]),
        ("simulate", &["--steps", "500", "--reps", "2000"]),
        ("embed", &["--tmax", "2"]),
        ("exact", &["--steps", "30"]),
        ("dominance", &["--steps", "30", "--exact"]),
        (
            "dominance",
            &[
                "--steps",
                "1000",
                "--reps",
                "20000",
                "--grid",
                "10,100,1000",
            ],
        ),
        (
            "dominance",
            &["--steps", "300", "--reps", "3000", "--format", "csv"],
        ),
        ("limits", &["--tmax", "2", "--reps", "3000"]),
        (
            "limits",
            &["--tmax", "2", "--reps", "3000", "--format", "csv"],
        ),
        ("path", &["--kb", "3", "--kw", "4"]),
    ];
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_urn"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.success() {
            Ok(())
        } else {
            Err(format!(
                "urn {args:?} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ))
        }
    };
    let read = |p: &std::path::Path| std::fs::read(p).map_err(|e| e.to_string());
    let mut checked = 0;
    for (i, (sub, extra)) in runs.iter().enumerate() {
        let mut files = Vec::new();
        for (j, threads) in ["1", "8", "8"].into_iter().enumerate() {
            let out = dir.path().join(format!("run{i}_{j}"));
            let mut args = vec![*sub];
            args.extend(base);
            args.extend(*extra);
            args.extend(["--threads", threads, "--out", out.to_str().unwrap()]);
            run(&args)?;
            files.push(read(&out)?);
        }
        if files.iter().any(|f| f != &files[0]) {
            return Err(format!("{sub} {extra:?} differs across thread counts"));
        }
        if *sub == "dominance" && extra.contains(&"csv") {
            let report = dir.path().join("report");
            let mut outputs = Vec::new();
            for threads in ["1", "8"] {
                let input = dir.path().join(format!("run{i}_0"));
                run(&[
                    "report",
                    "--inputs",
                    input.to_str().unwrap(),
                    "--grid",
                    "10,300",
                    "--threads",
                    threads,
                    "--out",
                    report.to_str().unwrap(),
                ])?;
                outputs.push(read(&report)?);
            }
            if outputs[0] != outputs[1] {
                return Err("report differs across thread counts".into());
            }
            checked += 1;
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} commands byte-identical under --threads 1 and 8"
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria = [
        Criterion {
            id: 1,
            name: "exact vs enumeration",
            limit: Duration::from_secs(10),
            run: exact_matches_enumeration,
        },
        Criterion {
            id: 2,
            name: "dominance oracle values",
            limit: Duration::from_secs(30),
            run: dominance_oracle_values,
        },
        Criterion {
            id: 3,
            name: "jump-chain equivalence",
            limit: Duration::from_secs(30),
            run: jump_chain_equivalence,
        },
        Criterion {
            id: 4,
            name: "pure-birth finite-time law",
            limit: Duration::from_secs(20),
            run: pure_birth_law,
        },
        Criterion {
            id: 5,
            name: "martingale mean",
            limit: Duration::from_secs(60),
            run: martingale_mean,
        },
        Criterion {
            id: 6,
            name: "ratio collapse",
            limit: Duration::from_secs(60),
            run: ratio_collapse,
        },
        Criterion {
            id: 7,
            name: "perpetual dominance",
            limit: Duration::from_secs(300),
            run: perpetual_dominance,
        },
        Criterion {
            id: 8,
            name: "proof-path grid",
            limit: Duration::from_secs(5),
            run: proof_path_grid,
        },
        Criterion {
            id: 9,
            name: "CLI determinism",
            limit: Duration::from_secs(30),
            run: cli_determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; over time limit {:?}", c.limit)),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {} {} {}: {} [{:.2}s]",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.name,
            detail,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
