use harmcoord::calculus::CheckRecord;
use harmcoord::BoundsReport;
use serde::Serialize;

pub const SCHEMA: u32 = 1;

/// How a record is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// `residual ≤ tol`
    Absolute { tol: f64 },
    /// `relative ≤ tol`
    Relative { tol: f64 },
    /// `lhs ≥ rhs`
    AtLeast,
    /// `lhs ≤ rhs`
    AtMost,
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    #[serde(flatten)]
    pub record: CheckRecord,
    pub criterion: Criterion,
    pub pass: bool,
}

impl Check {
    pub fn new(record: CheckRecord, criterion: Criterion) -> Self {
        let pass = match criterion {
            Criterion::Absolute { tol } => record.residual <= tol,
            Criterion::Relative { tol } => record.relative <= tol,
            Criterion::AtLeast => record.lhs >= record.rhs,
            Criterion::AtMost => record.lhs <= record.rhs,
            Criterion::Info => true,
        };
        Check {
            record,
            criterion,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BuilderRun {
    pub graph: String,
    #[serde(flatten)]
    pub report: BoundsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub suite: String,
    pub seed: u64,
    pub coordinate_choice: &'static str,
    pub records: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub builder: Vec<BuilderRun>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn new(suite: &str, seed: u64) -> Self {
        Report {
            schema: SCHEMA,
            suite: suite.to_string(),
            seed,
            coordinate_choice: harmcoord::sg::COORDINATE_CHOICE,
            records: Vec::new(),
            builder: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn push(&mut self, record: CheckRecord, criterion: Criterion) {
        self.records.push(Check::new(record, criterion));
    }

    pub fn push_builder(&mut self, graph: String, report: BoundsReport) {
        self.builder.push(BuilderRun { graph, report });
    }

    pub fn extend(&mut self, other: Report) {
        self.records.extend(other.records);
        self.builder.extend(other.builder);
    }

    /// Collect failing records and builder violations into `failures`.
    pub fn finish(mut self) -> Self {
        self.failures = self
            .records
            .iter()
            .filter(|c| !c.pass)
            .map(|c| {
                format!(
                    "{} [{} @ {}]: lhs {} rhs {} residual {:e}",
                    c.record.check,
                    c.record.model,
                    c.record.level_or_grid,
                    c.record.lhs,
                    c.record.rhs,
                    c.record.residual
                )
            })
            .chain(self.builder.iter().flat_map(|b| {
                b.report
                    .violations
                    .iter()
                    .map(move |v| format!("builder {}: {v}", b.graph))
            }))
            .collect();
        self
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}
