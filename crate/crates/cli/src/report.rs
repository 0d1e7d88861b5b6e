//! Reports printed by the commands, in text and JSON form.
//!
//! JSON reports carry a `format` name and a `version`; fields are only ever
//! added under a new version.

use std::fmt::Write as _;

use sdfeas::procedures::ReductionStep;
use sdfeas::{ApproachSequence, CertificateEnvelope, Config, FeasibilityStatus, SymMatrix};
use serde::{Deserialize, Serialize};

pub const REPORT_FORMAT: &str = "sdfeas-report";
pub const APPROACH_FORMAT: &str = "sdfeas-approach";
pub const SELFTEST_FORMAT: &str = "sdfeas-selftest";
pub const REPORT_VERSION: u32 = 1;

/// Outcome label for runs that did not produce a status.
pub const AMBIGUOUS: &str = "NumericallyAmbiguous";
pub const INPUT_ERROR: &str = "InputError";

/// One Backward-Procedure level, without the matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub order: usize,
    pub directions: usize,
    pub block_sizes: Vec<usize>,
    pub last_order: usize,
    pub last_dim: usize,
    /// Status of the last subproblem.
    pub verdict: FeasibilityStatus,
    /// Order of the sliced problem passed to the next level; absent when
    /// the chain stops here or the slice is empty.
    pub next_order: Option<usize>,
}

impl LevelSummary {
    pub fn of(step: &ReductionStep) -> Self {
        LevelSummary {
            order: step.order,
            directions: step.fp.m(),
            block_sizes: step.fp.block_sizes.clone(),
            last_order: step.fp.last.n(),
            last_dim: step.fp.last.dim_l(),
            verdict: step.verdict,
            next_order: step.slice.as_ref().and_then(|s| s.reduced.as_ref()).map(|r| r.n()),
        }
    }

    fn line(&self, idx: usize) -> String {
        let dirs = if self.directions == 1 { "direction" } else { "directions" };
        let mut s = format!(
            "level {idx}: order {}, {} {dirs}, blocks {:?}, last subproblem order {} dim {}: {}",
            self.order, self.directions, self.block_sizes, self.last_order, self.last_dim, self.verdict
        );
        if self.verdict == FeasibilityStatus::WeaklyFeasible {
            match self.next_order {
                Some(k) => write!(s, ", sliced to order {k}").expect("string write"),
                None => s.push_str(", slice is empty"),
            }
        }
        s
    }
}

/// Result of classifying one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub format: String,
    pub version: u32,
    pub input: String,
    /// A status name, [`AMBIGUOUS`] or [`INPUT_ERROR`].
    pub outcome: String,
    pub status: Option<FeasibilityStatus>,
    pub exit_code: i32,
    pub message: Option<String>,
    pub levels: Vec<LevelSummary>,
    pub tolerances: Config,
    /// Full reduction chain, enough to re-check the result without solving.
    pub chain: Vec<ReductionStep>,
    pub certificate: Option<CertificateEnvelope>,
}

impl ClassifyReport {
    pub fn text(&self) -> String {
        let mut s = format!("{}: {}", self.input, self.outcome);
        if let Some(m) = &self.message {
            write!(s, " ({m})").expect("string write");
        }
        s.push('\n');
        for (i, l) in self.levels.iter().enumerate() {
            writeln!(s, "  {}", l.line(i)).expect("string write");
        }
        s
    }
}

/// Result of `sdfeas approach`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachReport {
    pub format: String,
    pub version: u32,
    pub input: String,
    pub status: FeasibilityStatus,
    pub eps: f64,
    pub alphas: Vec<f64>,
    pub distance: f64,
    pub stage_distances: Vec<f64>,
    pub cprime: SymMatrix,
    pub point: SymMatrix,
}

impl ApproachReport {
    pub fn new(input: String, seq: ApproachSequence) -> Self {
        ApproachReport {
            format: APPROACH_FORMAT.into(),
            version: REPORT_VERSION,
            input,
            status: FeasibilityStatus::WeaklyInfeasible,
            eps: seq.eps,
            alphas: seq.alphas,
            distance: seq.distance,
            stage_distances: seq.stage_distances,
            cprime: seq.cprime,
            point: seq.point,
        }
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{}: {}", self.input, self.status).expect("string write");
        writeln!(s, "eps: {:e}", self.eps).expect("string write");
        writeln!(s, "alphas: {}", plain(&self.alphas)).expect("string write");
        writeln!(s, "distance: {:e}", self.distance).expect("string write");
        writeln!(s, "stage distances: {}", list(&self.stage_distances)).expect("string write");
        s.push_str("c':\n");
        s.push_str(&rows(&self.cprime));
        s.push_str("point:\n");
        s.push_str(&rows(&self.point));
        s
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
    format!("[{}]", items.join(", "))
}

fn plain(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

fn rows(m: &SymMatrix) -> String {
    let n = m.dim();
    let mut s = String::new();
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| m.get(i, j)).collect();
        writeln!(s, "  {}", plain(&row)).expect("string write");
    }
    s
}
