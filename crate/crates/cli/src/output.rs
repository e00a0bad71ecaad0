use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Number, Value};
use unfair_urn::mc::{EstimateWithCI, ReplicationRecord};

use crate::CliError;

/// Leading columns of a per-replication dump; `final_count_0..` follow.
pub const REPLICATION_CSV_PREFIX: [&str; 3] = ["rep", "seed", "first_failure_step"];

/// 17 significant digits, enough to round-trip any double.
pub fn decimal17(x: f64) -> String {
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((mantissa, exp)) if !exp.starts_with('-') => format!("{mantissa}e+{exp}"),
        _ => s,
    }
}

/// JSON number carrying [`decimal17`] text verbatim.
pub(crate) fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(Number::from_str(&decimal17(x)).expect("valid JSON number"))
}

pub(crate) fn estimate_json(e: &EstimateWithCI) -> Value {
    json!({
        "estimate": num(e.estimate),
        "lo": num(e.lo),
        "hi": num(e.hi),
        "confidence": num(e.confidence),
        "std_error": num(e.std_error),
        "successes": e.successes,
        "replications": e.replications,
    })
}

pub(crate) struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// Reads a per-replication dump, returning the colour count and the rows.
pub fn read_replication_csv(path: &Path) -> Result<(usize, Vec<ReplicationRecord>), CliError> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let q = header.len().saturating_sub(REPLICATION_CSV_PREFIX.len());
    let expected: Vec<String> = REPLICATION_CSV_PREFIX
        .iter()
        .map(|s| s.to_string())
        .chain((0..q).map(|i| format!("final_count_{i}")))
        .collect();
    if q == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<u64, CliError> {
            rec[i]
                .parse()
                .map_err(|_| bad(format!("row {}: bad integer '{}'", line + 1, &rec[i])))
        };
        let first_failure = if rec[2].is_empty() {
            None
        } else {
            Some(field(2)?)
        };
        out.push(ReplicationRecord {
            rep: field(0)?,
            seed: field(1)?,
            first_failure,
            final_counts: (3..3 + q).map(field).collect::<Result<_, _>>()?,
        });
    }
    Ok((q, out))
}
