use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use unfair_urn::embed::DEFAULT_EVENT_CAP;
use unfair_urn::exact::{Arithmetic, DEFAULT_STATE_BUDGET, DEFAULT_TAIL_TOLERANCE};
use unfair_urn::{CriterionKind, DominanceCriterion, ReplacementRule};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "urn",
    about = "Unfair Pólya urn simulation and exact dominance probabilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the discrete urn (one trajectory, or replicated W/B statistics)
    Simulate {
        #[command(flatten)]
        urn: UrnArgs,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the continuous-time branching embedding up to a time horizon
    Embed {
        #[command(flatten)]
        urn: UrnArgs,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EVENT_CAP)]
        event_cap: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exact state distribution after a number of draws
    Exact {
        #[command(flatten)]
        urn: UrnArgs,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long, default_value = "auto")]
        arith: String,
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        budget: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Survival curve of a dominance criterion, exact or Monte Carlo
    Dominance {
        #[command(flatten)]
        urn: UrnArgs,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value = "auto")]
        arith: String,
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value = "pairwise")]
        criterion: String,
        #[arg(long, default_value_t = 0)]
        focus: usize,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<u64>,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Scaled samples exp(-m_i t) X_i(t) at a time horizon
    Limits {
        #[command(flatten)]
        urn: UrnArgs,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = DEFAULT_EVENT_CAP)]
        event_cap: u64,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Build the black-then-white path from (b0, w0)
    Path {
        #[command(flatten)]
        urn: UrnArgs,
        #[arg(long)]
        kb: Option<u64>,
        #[arg(long)]
        kw: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Aggregate per-replication CSV dumps
    Report {
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<u64>,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
struct UrnArgs {
    /// Reinforcement per colour, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    m: Vec<i64>,
    /// Initial ball counts per colour, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    init: Vec<i64>,
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcommandKind {
    Simulate,
    Embed,
    Exact,
    Dominance,
    Limits,
    Path,
    Report,
}

impl SubcommandKind {
    pub fn name(self) -> &'static str {
        match self {
            SubcommandKind::Simulate => "simulate",
            SubcommandKind::Embed => "embed",
            SubcommandKind::Exact => "exact",
            SubcommandKind::Dominance => "dominance",
            SubcommandKind::Limits => "limits",
            SubcommandKind::Path => "path",
            SubcommandKind::Report => "report",
        }
    }
}

/// Discrete step count or continuous time horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HorizonArg {
    None,
    Steps(u64),
    Time(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: SubcommandKind,
    pub rule: Option<ReplacementRule>,
    pub init: Vec<u64>,
    pub horizon: HorizonArg,
    pub replications: u64,
    pub seed: u64,
    pub criterion: DominanceCriterion,
    pub exact: bool,
    pub arithmetic: Arithmetic,
    pub budget: u64,
    pub event_cap: u64,
    pub tail_tolerance: f64,
    pub confidence: f64,
    pub grid: Vec<u64>,
    pub k_b: u64,
    pub k_w: u64,
    pub inputs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

impl RunConfig {
    fn base(subcommand: SubcommandKind, common: CommonArgs) -> Self {
        let default_format = if subcommand == SubcommandKind::Path {
            Format::Text
        } else {
            Format::Json
        };
        Self {
            subcommand,
            rule: None,
            init: Vec::new(),
            horizon: HorizonArg::None,
            replications: 1,
            seed: common.seed,
            criterion: DominanceCriterion::pairwise(),
            exact: false,
            arithmetic: Arithmetic::Auto,
            budget: DEFAULT_STATE_BUDGET,
            event_cap: DEFAULT_EVENT_CAP,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            confidence: 0.95,
            grid: Vec::new(),
            k_b: 0,
            k_w: 0,
            inputs: Vec::new(),
            out: common.out,
            format: common.format.unwrap_or(default_format),
            threads: common.threads,
        }
    }

    pub fn steps(&self) -> u64 {
        match self.horizon {
            HorizonArg::Steps(n) => n,
            _ => 0,
        }
    }

    pub fn time(&self) -> f64 {
        match self.horizon {
            HorizonArg::Time(t) => t,
            _ => 0.0,
        }
    }
}

/// Collects every violated constraint instead of stopping at the first.
#[derive(Default)]
struct Problems(Vec<String>);

impl Problems {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }
}

fn check_urn(urn: UrnArgs, cfg: &mut RunConfig, problems: &mut Problems) {
    if urn.m.is_empty() {
        problems.push("missing required flag --m");
    }
    if urn.init.is_empty() {
        problems.push("missing required flag --init");
    }
    if !urn.m.is_empty() {
        match ReplacementRule::from_signed(&urn.m) {
            Ok(rule) => cfg.rule = Some(rule),
            Err(e) => problems.push(format!("--m: {e}")),
        }
    }
    if urn.init.iter().any(|&c| c < 0) {
        problems.push("--init: counts must be non-negative");
    } else {
        cfg.init = urn.init.iter().map(|&c| c as u64).collect();
    }
    if !urn.m.is_empty() && !urn.init.is_empty() && urn.m.len() != urn.init.len() {
        problems.push(format!(
            "dimension mismatch: --m has {} colours, --init has {}",
            urn.m.len(),
            urn.init.len()
        ));
    } else if let Some(rule) = &cfg.rule {
        if cfg.init.len() == rule.colours() {
            if let Err(e) = unfair_urn::new_urn(&cfg.init, rule) {
                problems.push(format!("--init: {e}"));
            }
        }
    }
}

fn require_steps(steps: Option<u64>, cfg: &mut RunConfig, problems: &mut Problems) {
    match steps {
        Some(n) => cfg.horizon = HorizonArg::Steps(n),
        None => problems.push("missing required flag --steps"),
    }
}

fn require_time(tmax: Option<f64>, cfg: &mut RunConfig, problems: &mut Problems) {
    match tmax {
        Some(t) if t > 0.0 && t.is_finite() => cfg.horizon = HorizonArg::Time(t),
        Some(t) => problems.push(format!("--tmax must be positive and finite, got {t}")),
        None => problems.push("missing required flag --tmax"),
    }
}

fn check_reps(reps: u64, cfg: &mut RunConfig, problems: &mut Problems) {
    if reps == 0 {
        problems.push("--reps must be at least 1");
    }
    cfg.replications = reps;
}

fn check_confidence(c: f64, cfg: &mut RunConfig, problems: &mut Problems) {
    if !(c > 0.0 && c < 1.0) {
        problems.push(format!("--confidence must lie in (0, 1), got {c}"));
    }
    cfg.confidence = c;
}

fn check_arith(s: &str, cfg: &mut RunConfig, problems: &mut Problems) {
    match s.parse() {
        Ok(a) => cfg.arithmetic = a,
        Err(e) => problems.push(format!("--arith: {e}")),
    }
}

/// Parses and validates a full argument vector (program name first).
pub fn parse_args<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Help(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    })?;
    let mut p = Problems::default();
    let cfg = match cli.command {
        Command::Simulate {
            urn,
            steps,
            reps,
            common,
        } => {
            let mut cfg = RunConfig::base(SubcommandKind::Simulate, common);
            check_urn(urn, &mut cfg, &mut p);
            require_steps(steps, &mut cfg, &mut p);
            check_reps(reps, &mut cfg, &mut p);
            if reps > 1 && cfg.init.len() != 2 {
                p.push("replicated simulate reports W/B and needs exactly two colours");
            }
            if reps > 1 && cfg.init.first() == Some(&0) {
                p.push("replicated simulate reports W/B and needs b0 >= 1");
            }
            cfg
        }
        Command::Embed {
            urn,
            tmax,
            event_cap,
            common,
        } => {
            let mut cfg = RunConfig::base(SubcommandKind::Embed, common);
            check_urn(urn, &mut cfg, &mut p);
            require_time(tmax, &mut cfg, &mut p);
            cfg.event_cap = event_cap;
            cfg
        }
        Command::Exact {
            urn,
            steps,
            arith,
            budget,
            common,
        } => {
            let mut cfg = RunConfig::base(SubcommandKind::Exact, common);
            check_urn(urn, &mut cfg, &mut p);
            require_steps(steps, &mut cfg, &mut p);
            check_arith(&arith, &mut cfg, &mut p);
            cfg.budget = budget;
            cfg
        }
        Command::Dominance {
            urn,
            steps,
            exact,
            arith,
            budget,
            reps,
            criterion,
            focus,
            grid,
            confidence,
            common,
        } => {
            let mut cfg = RunConfig::base(SubcommandKind::Dominance, common);
            check_urn(urn, &mut cfg, &mut p);
            require_steps(steps, &mut cfg, &mut p);
            check_arith(&arith, &mut cfg, &mut p);
            check_reps(reps, &mut cfg, &mut p);
            check_confidence(confidence, &mut cfg, &mut p);
            cfg.exact = exact;
            cfg.budget = budget;
            match criterion.parse::<CriterionKind>() {
                Ok(kind) => {
                    cfg.criterion = DominanceCriterion::with_focus(kind, focus);
                    if !cfg.init.is_empty() {
                        if let Err(e) = cfg.criterion.validate(cfg.init.len()) {
                            p.push(format!("--criterion: {e}"));
                        }
                    }
                }
                Err(e) => p.push(format!("--criterion: {e}")),
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                p.push("--grid must be strictly increasing");
            }
            if let (Some(&last), HorizonArg::Steps(n)) = (grid.last(), cfg.horizon) {
                if last > n {
                    p.push(format!("--grid entries must not exceed --steps {n}"));
                }
            }
            cfg.grid = grid;
            cfg
        }
        Command::Limits {
            urn,
            tmax,
            reps,
            event_cap,
            confidence,
            common,
        } => {
            let mut cfg = RunConfig::base(SubcommandKind::Limits, common);
            check_urn(urn, &mut cfg, &mut p);
            require_time(tmax, &mut cfg, &mut p);
            check_reps(reps, &mut cfg, &mut p);
            check_confidence(confidence, &mut cfg, &mut p);
            cfg.event_cap = event_cap;
            cfg
        }
        Command::Path {
            urn,
            kb,
            kw,
            common,
        } => {
            let mut cfg = RunConfig::base(SubcommandKind::Path, common);
            check_urn(urn, &mut cfg, &mut p);
            if cfg.init.len() != 2 && !cfg.init.is_empty() {
                p.push("path needs exactly two colours");
            }
            if let [b0, w0] = cfg.init[..] {
                if b0 <= w0 {
                    p.push(format!("path needs b0 > w0, got {b0},{w0}"));
                }
            }
            match (kb, kw) {
                (Some(b), Some(w)) => {
                    cfg.k_b = b;
                    cfg.k_w = w;
                }
                _ => p.push("missing required flags --kb and --kw"),
            }
            cfg
        }
        Command::Report {
            inputs,
            grid,
            confidence,
            common,
        } => {
            let mut cfg = RunConfig::base(SubcommandKind::Report, common);
            check_confidence(confidence, &mut cfg, &mut p);
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                p.push("--grid must be strictly increasing");
            }
            cfg.grid = grid;
            cfg.inputs = inputs;
            cfg
        }
    };
    if cfg.threads == Some(0) {
        p.push("--threads must be at least 1");
    }
    if cfg.format == Format::Text && cfg.subcommand != SubcommandKind::Path {
        p.push("--format text is only available for path");
    }
    if p.0.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Usage(p.0.join("\n")))
    }
}
