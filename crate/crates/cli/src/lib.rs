//! Command-line front end: parse a run configuration, execute it, write results.
//!
//! Every run produces a results document (`--out`, or stdout) holding the
//! subcommand, a config echo, the seed and the results. The document is a
//! deterministic function of the config, independent of `--threads`. Wall
//! time goes into a separate summary line so it never perturbs the results.

mod args;
mod output;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::time::Instant;

use num::BigRational;
use serde_json::{json, Map, Value};
use unfair_urn::embed::{run_until, ScaledSample};
use unfair_urn::exact::{
    state_distribution, survival_probability, Compensated, Probability, StateDistribution,
};
use unfair_urn::mc::{
    estimate_ratio_stats, replication_records, sample_scaled_limits, survival_curve_mc,
    ExperimentPlan, Horizon, ReplicationRecord,
};
use unfair_urn::{construct_proof_path, new_urn, run_trajectory, seeded_rng, UrnError};

pub use args::{parse_args, Format, HorizonArg, RunConfig, SubcommandKind};
pub use output::{decimal17, read_replication_csv, REPLICATION_CSV_PREFIX};

use output::{estimate_json, num, CsvTable};

#[derive(Debug)]
pub enum CliError {
    Help(String),
    Usage(String),
    Run(UrnError),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => 0,
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Run(e) if e.is_resource_limit() => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Help(s) => write!(f, "{s}"),
            CliError::Usage(s) => write!(f, "usage error:\n{s}"),
            CliError::Run(e) => write!(f, "error: {e}"),
            CliError::Io(s) => write!(f, "i/o error: {s}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<UrnError> for CliError {
    fn from(e: UrnError) -> Self {
        CliError::Run(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// What a subcommand produced, before serialisation.
enum Payload {
    Json(Value),
    Csv(CsvTable),
    Text(String),
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_args(args).and_then(|cfg| run(&cfg)) {
        Ok(()) => 0,
        Err(CliError::Help(s)) => {
            print!("{s}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let payload = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| execute(cfg))?,
        None => execute(cfg)?,
    };
    let wall = start.elapsed().as_secs_f64();

    let mut summary = header(cfg);
    summary.insert("wall_time_s".into(), json!(wall));
    match (payload, &cfg.out) {
        (Payload::Json(results), Some(path)) => {
            let mut doc = header(cfg);
            doc.insert("results".into(), results);
            fs::write(path, pretty(&Value::Object(doc)))?;
            summary.insert("output".into(), json!(path.display().to_string()));
            println!("{}", Value::Object(summary));
        }
        (Payload::Json(results), None) => {
            let mut doc = summary;
            doc.insert("results".into(), results);
            print!("{}", pretty(&Value::Object(doc)));
        }
        (Payload::Csv(table), Some(path)) => {
            fs::write(path, table.render())?;
            summary.insert("output".into(), json!(path.display().to_string()));
            println!("{}", Value::Object(summary));
        }
        (Payload::Csv(table), None) => {
            io::stdout().write_all(table.render().as_bytes())?;
            eprintln!("{}", Value::Object(summary));
        }
        (Payload::Text(text), Some(path)) => {
            fs::write(path, text)?;
            summary.insert("output".into(), json!(path.display().to_string()));
            println!("{}", Value::Object(summary));
        }
        (Payload::Text(text), None) => print!("{text}"),
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

/// `{subcommand, config, seed}` shared by the results document and the summary.
fn header(cfg: &RunConfig) -> Map<String, Value> {
    let mut config = Map::new();
    if let Some(rule) = &cfg.rule {
        config.insert("m".into(), json!(rule.as_slice()));
        config.insert("init".into(), json!(cfg.init));
    }
    match cfg.horizon {
        HorizonArg::Steps(n) => {
            config.insert("steps".into(), json!(n));
        }
        HorizonArg::Time(t) => {
            config.insert("tmax".into(), num(t));
        }
        HorizonArg::None => {}
    }
    match cfg.subcommand {
        SubcommandKind::Simulate => {
            config.insert("reps".into(), json!(cfg.replications));
        }
        SubcommandKind::Embed => {
            config.insert("event_cap".into(), json!(cfg.event_cap));
        }
        SubcommandKind::Exact => {
            config.insert("arith".into(), json!(arith_name(cfg)));
            config.insert("budget".into(), json!(cfg.budget));
        }
        SubcommandKind::Dominance => {
            config.insert("criterion".into(), json!(cfg.criterion.kind.name()));
            config.insert("focus".into(), json!(cfg.criterion.focus));
            config.insert("exact".into(), json!(cfg.exact));
            if cfg.exact {
                config.insert("arith".into(), json!(arith_name(cfg)));
                config.insert("budget".into(), json!(cfg.budget));
            } else {
                config.insert("reps".into(), json!(cfg.replications));
                config.insert("grid".into(), json!(cfg.grid));
                config.insert("confidence".into(), num(cfg.confidence));
            }
        }
        SubcommandKind::Limits => {
            config.insert("reps".into(), json!(cfg.replications));
            config.insert("event_cap".into(), json!(cfg.event_cap));
            config.insert("confidence".into(), num(cfg.confidence));
        }
        SubcommandKind::Path => {
            config.insert("kb".into(), json!(cfg.k_b));
            config.insert("kw".into(), json!(cfg.k_w));
        }
        SubcommandKind::Report => {
            let inputs: Vec<String> = cfg.inputs.iter().map(|p| p.display().to_string()).collect();
            config.insert("inputs".into(), json!(inputs));
            config.insert("grid".into(), json!(cfg.grid));
            config.insert("confidence".into(), num(cfg.confidence));
        }
    }
    config.insert("format".into(), json!(format_name(cfg.format)));

    let mut doc = Map::new();
    doc.insert("subcommand".into(), json!(cfg.subcommand.name()));
    doc.insert("config".into(), Value::Object(config));
    doc.insert("seed".into(), json!(cfg.seed));
    doc
}

fn arith_name(cfg: &RunConfig) -> &'static str {
    if cfg.arithmetic.is_exact_for(cfg.steps()) {
        "exact"
    } else {
        "float"
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Text => "text",
    }
}

fn execute(cfg: &RunConfig) -> Result<Payload, CliError> {
    match cfg.subcommand {
        SubcommandKind::Simulate => simulate(cfg),
        SubcommandKind::Embed => embed(cfg),
        SubcommandKind::Exact => exact(cfg),
        SubcommandKind::Dominance if cfg.exact => dominance_exact(cfg),
        SubcommandKind::Dominance => dominance_mc(cfg),
        SubcommandKind::Limits => limits(cfg),
        SubcommandKind::Path => path(cfg),
        SubcommandKind::Report => report(cfg),
    }
}

fn rule(cfg: &RunConfig) -> &unfair_urn::ReplacementRule {
    cfg.rule.as_ref().expect("validated config carries a rule")
}

fn plan(cfg: &RunConfig, horizon: Horizon) -> Result<ExperimentPlan, CliError> {
    Ok(ExperimentPlan::new(
        &cfg.init,
        rule(cfg).clone(),
        horizon,
        cfg.replications,
        cfg.seed,
    )?
    .with_criterion(cfg.criterion)
    .with_confidence(cfg.confidence)
    .with_event_cap(cfg.event_cap))
}

fn count_headers(prefix: &str, q: usize) -> Vec<String> {
    (0..q).map(|i| format!("{prefix}{i}")).collect()
}

fn simulate(cfg: &RunConfig) -> Result<Payload, CliError> {
    let r = rule(cfg);
    if cfg.replications > 1 {
        let p = plan(cfg, Horizon::Steps(cfg.steps()))?;
        if cfg.format == Format::Csv {
            return Ok(Payload::Csv(records_table(
                &replication_records(&p)?,
                r.colours(),
            )));
        }
        let levels = [0.05, 0.25, 0.5, 0.75, 0.95];
        let stats = estimate_ratio_stats(&p, &levels)?;
        let quantiles: Vec<Value> = stats
            .quantiles
            .iter()
            .map(|&(l, v)| json!({"level": num(l), "value": num(v)}))
            .collect();
        return Ok(Payload::Json(json!({
            "ratio": "W_N/B_N",
            "median": num(stats.median),
            "mean": num(stats.mean),
            "quantiles": quantiles,
            "below_one": estimate_json(&stats.below_one),
        })));
    }
    let state = new_urn(&cfg.init, r)?;
    let traj = run_trajectory(&state, r, cfg.steps(), &mut seeded_rng(cfg.seed))?;
    match cfg.format {
        Format::Csv => {
            let mut header = vec!["step".to_string(), "draw".to_string()];
            header.extend(count_headers("count_", r.colours()));
            let mut t = CsvTable::new(header);
            for (n, s) in traj.iter_states().enumerate() {
                let draw = if n == 0 {
                    String::new()
                } else {
                    traj.draws[n - 1].to_string()
                };
                let mut row = vec![n.to_string(), draw];
                row.extend(s.counts.iter().map(u64::to_string));
                t.push(row);
            }
            Ok(Payload::Csv(t))
        }
        _ => Ok(Payload::Json(json!({
            "draws": traj.draws,
            "states": traj.states.iter().map(|s| s.counts.clone()).collect::<Vec<_>>(),
            "final_counts": traj.final_state().counts,
        }))),
    }
}

fn embed(cfg: &RunConfig) -> Result<Payload, CliError> {
    let r = rule(cfg);
    let state = new_urn(&cfg.init, r)?;
    let c = run_until(
        &state,
        r,
        cfg.time(),
        cfg.event_cap,
        &mut seeded_rng(cfg.seed),
    )?;
    let end = c.counts_at(cfg.time())?;
    match cfg.format {
        Format::Csv => {
            let mut header = vec![
                "event".to_string(),
                "time".to_string(),
                "colour".to_string(),
            ];
            header.extend(count_headers("count_", r.colours()));
            let mut t = CsvTable::new(header);
            for (k, (e, s)) in c.events.iter().zip(&c.states).enumerate() {
                let mut row = vec![(k + 1).to_string(), decimal17(e.time), e.colour.to_string()];
                row.extend(s.counts.iter().map(u64::to_string));
                t.push(row);
            }
            Ok(Payload::Csv(t))
        }
        _ => {
            let events: Vec<Value> = c
                .events
                .iter()
                .map(|e| json!({"time": num(e.time), "colour": e.colour}))
                .collect();
            let scaled = ScaledSample::from_counts(end, r, cfg.time());
            Ok(Payload::Json(json!({
                "n_events": c.events.len(),
                "events": events,
                "final_counts": end,
                "scaled": scaled.values.iter().map(|&v| num(v)).collect::<Vec<_>>(),
            })))
        }
    }
}

fn distribution_payload<P: Probability>(
    d: &StateDistribution<P>,
    q: usize,
    format: Format,
    exact_str: impl Fn(&P) -> Option<String>,
) -> Payload {
    match format {
        Format::Csv => {
            let mut header = count_headers("count_", q);
            header.push("probability".into());
            let mut t = CsvTable::new(header);
            for (k, p) in &d.entries {
                let mut row: Vec<String> = k.iter().map(u64::to_string).collect();
                row.push(decimal17(p.to_f64()));
                t.push(row);
            }
            Payload::Csv(t)
        }
        _ => {
            let entries: Vec<Value> = d
                .entries
                .iter()
                .map(|(k, p)| {
                    let mut e = json!({"counts": k, "probability": num(p.to_f64())});
                    if let Some(s) = exact_str(p) {
                        e["exact"] = json!(s);
                    }
                    e
                })
                .collect();
            Payload::Json(json!({
                "step": d.step,
                "states": d.entries.len(),
                "total_mass": num(d.total_mass().to_f64()),
                "entries": entries,
            }))
        }
    }
}

fn exact(cfg: &RunConfig) -> Result<Payload, CliError> {
    let r = rule(cfg);
    let state = new_urn(&cfg.init, r)?;
    let n = cfg.steps();
    if cfg.arithmetic.is_exact_for(n) {
        let d = state_distribution::<BigRational>(&state, r, n, cfg.budget)?;
        Ok(distribution_payload(&d, r.colours(), cfg.format, |p| {
            Some(p.to_string())
        }))
    } else {
        let d = state_distribution::<Compensated>(&state, r, n, cfg.budget)?;
        Ok(distribution_payload(&d, r.colours(), cfg.format, |_| None))
    }
}

fn dominance_exact(cfg: &RunConfig) -> Result<Payload, CliError> {
    let r = rule(cfg);
    let state = new_urn(&cfg.init, r)?;
    let n = cfg.steps();
    let (values, exact_strings): (Vec<f64>, Option<Vec<String>>) = if cfg.arithmetic.is_exact_for(n)
    {
        let c = survival_probability::<BigRational>(&state, r, n, &cfg.criterion, cfg.budget)?;
        (
            c.to_f64(),
            Some(c.values.iter().map(|p| p.to_string()).collect()),
        )
    } else {
        let c = survival_probability::<Compensated>(&state, r, n, &cfg.criterion, cfg.budget)?;
        (c.to_f64(), None)
    };
    match cfg.format {
        Format::Csv => {
            let mut t = CsvTable::new(vec!["step".into(), "p".into()]);
            for (k, p) in values.iter().enumerate() {
                t.push(vec![k.to_string(), decimal17(*p)]);
            }
            Ok(Payload::Csv(t))
        }
        _ => {
            let mut res = json!({
                "mode": "exact",
                "p": values.iter().map(|&v| num(v)).collect::<Vec<_>>(),
            });
            if let Some(s) = exact_strings {
                res["p_exact"] = json!(s);
            }
            Ok(Payload::Json(res))
        }
    }
}

fn records_table(records: &[ReplicationRecord], q: usize) -> CsvTable {
    let mut header: Vec<String> = REPLICATION_CSV_PREFIX
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(count_headers("final_count_", q));
    let mut t = CsvTable::new(header);
    for rec in records {
        let mut row = vec![
            rec.rep.to_string(),
            rec.seed.to_string(),
            rec.first_failure.map(|f| f.to_string()).unwrap_or_default(),
        ];
        row.extend(rec.final_counts.iter().map(u64::to_string));
        t.push(row);
    }
    t
}

fn dominance_mc(cfg: &RunConfig) -> Result<Payload, CliError> {
    let p = plan(cfg, Horizon::Steps(cfg.steps()))?;
    if cfg.format == Format::Csv {
        return Ok(Payload::Csv(records_table(
            &replication_records(&p)?,
            p.initial.colours(),
        )));
    }
    let mut grid = cfg.grid.clone();
    if grid.last() != Some(&cfg.steps()) {
        grid.push(cfg.steps());
    }
    let curve = survival_curve_mc(&p, &grid)?;
    let last = curve.last().expect("grid holds the horizon").estimate;
    let increments: Vec<Value> = curve
        .windows(2)
        .map(|w| {
            json!({
                "from": w[0].steps,
                "to": w[1].steps,
                "difference": num(w[1].estimate.estimate - w[0].estimate.estimate),
            })
        })
        .collect();
    Ok(Payload::Json(json!({
        "mode": "monte-carlo",
        "estimate": estimate_json(&last),
        "curve": curve
            .iter()
            .map(|pt| {
                let mut e = estimate_json(&pt.estimate);
                e["steps"] = json!(pt.steps);
                e
            })
            .collect::<Vec<_>>(),
        "increments": increments,
    })))
}

fn limits(cfg: &RunConfig) -> Result<Payload, CliError> {
    let p = plan(cfg, Horizon::Time(cfg.time()))?;
    let s = sample_scaled_limits(&p)?;
    if cfg.format == Format::Csv {
        let mut header = vec!["rep".to_string(), "seed".to_string()];
        header.extend(count_headers("scaled_", p.initial.colours()));
        let mut t = CsvTable::new(header);
        for (rep, sample) in s.samples.iter().enumerate() {
            let mut row = vec![
                rep.to_string(),
                unfair_urn::mc::derive_replication_seed(cfg.seed, rep as u64).to_string(),
            ];
            row.extend(sample.values.iter().map(|&v| decimal17(v)));
            t.push(row);
        }
        return Ok(Payload::Csv(t));
    }
    let mut ratios = s.ratios();
    ratios.sort_by(f64::total_cmp);
    let q = |l: f64| num(unfair_urn::mc::quantile_sorted(&ratios, l));
    let min = s
        .samples
        .iter()
        .flat_map(|x| x.values.iter().copied())
        .fold(f64::INFINITY, f64::min);
    Ok(Payload::Json(json!({
        "t": num(s.t),
        "means": s.means.iter().map(|&v| num(v)).collect::<Vec<_>>(),
        "std_errors": s.std_errors.iter().map(|&v| num(v)).collect::<Vec<_>>(),
        "min": num(min),
        "ratio_quantiles": {"0.05": q(0.05), "0.5": q(0.5), "0.95": q(0.95)},
        "second_below_first": estimate_json(&s.second_below_first),
    })))
}

fn path(cfg: &RunConfig) -> Result<Payload, CliError> {
    let r = rule(cfg);
    let (b0, w0) = (cfg.init[0], cfg.init[1]);
    let p = construct_proof_path(b0, w0, r, cfg.k_b, cfg.k_w)?;
    let states: Vec<Vec<u64>> = p
        .trajectory
        .iter_states()
        .map(|s| s.counts.clone())
        .collect();
    match cfg.format {
        Format::Text => {
            let mut out = String::new();
            for (n, s) in p.trajectory.iter_states().enumerate() {
                out.push_str(&format!("{n} {s}\n"));
            }
            out.push_str(&format!("positive_throughout={}\n", p.positive_throughout));
            Ok(Payload::Text(out))
        }
        Format::Csv => {
            let mut t = CsvTable::new(vec![
                "step".into(),
                "draw".into(),
                "count_0".into(),
                "count_1".into(),
            ]);
            for (n, s) in states.iter().enumerate() {
                let draw = if n == 0 {
                    String::new()
                } else {
                    p.trajectory.draws[n - 1].to_string()
                };
                t.push(vec![
                    n.to_string(),
                    draw,
                    s[0].to_string(),
                    s[1].to_string(),
                ]);
            }
            Ok(Payload::Csv(t))
        }
        Format::Json => Ok(Payload::Json(json!({
            "draws": p.trajectory.draws,
            "states": states,
            "positive_throughout": p.positive_throughout,
        }))),
    }
}

fn report(cfg: &RunConfig) -> Result<Payload, CliError> {
    let mut records = Vec::new();
    let mut colours = None;
    for input in &cfg.inputs {
        let (q, mut recs) = read_replication_csv(input)?;
        if colours.is_some_and(|c| c != q) {
            return Err(CliError::Usage(format!(
                "{}: colour count {q} differs from earlier inputs",
                input.display()
            )));
        }
        colours = Some(q);
        records.append(&mut recs);
    }
    let q = colours.unwrap_or(0);
    let n = records.len() as u64;
    if n == 0 {
        return Err(CliError::Usage(
            "report inputs contain no replications".into(),
        ));
    }
    let alive = records.iter().filter(|r| r.first_failure.is_none()).count() as u64;
    let est = unfair_urn::mc::EstimateWithCI::from_counts(alive, n, cfg.confidence)?;
    let mut means = vec![0.0; q];
    for r in &records {
        for (m, &c) in means.iter_mut().zip(&r.final_counts) {
            *m += c as f64;
        }
    }
    let curve = cfg
        .grid
        .iter()
        .map(|&g| {
            let s = records
                .iter()
                .filter(|r| r.first_failure.is_none_or(|f| f > g))
                .count() as u64;
            let mut e = estimate_json(&unfair_urn::mc::EstimateWithCI::from_counts(
                s,
                n,
                cfg.confidence,
            )?);
            e["steps"] = json!(g);
            Ok(e)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if cfg.format == Format::Csv {
        let mut t = CsvTable::new(vec![
            "steps".into(),
            "estimate".into(),
            "lo".into(),
            "hi".into(),
        ]);
        for e in &curve {
            t.push(vec![
                e["steps"].to_string(),
                e["estimate"].to_string(),
                e["lo"].to_string(),
                e["hi"].to_string(),
            ]);
        }
        return Ok(Payload::Csv(t));
    }
    Ok(Payload::Json(json!({
        "replications": n,
        "dominance": estimate_json(&est),
        "mean_final_counts": means.iter().map(|m| num(m / n as f64)).collect::<Vec<_>>(),
        "curve": curve,
    })))
}
