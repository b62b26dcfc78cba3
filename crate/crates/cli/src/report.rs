use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Ctx;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// The run showed what it was meant to show.
    pub expected: bool,
    pub summary: String,
}

/// Machine-readable record of one run. Keys inside `parameters` and
/// `metrics` are emitted in sorted order, so equal runs serialize to equal
/// bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub seed: String,
    pub suite: String,
    pub parameters: Value,
    pub outcome: Outcome,
    pub metrics: Value,
    /// Short name of the weakness a demo reproduces.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finding: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl RunReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        command: &str,
        ctx: &Ctx,
        parameters: Value,
        metrics: Value,
        expected: bool,
        summary: String,
        finding: Option<&'static str>,
        timestamp: bool,
    ) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed: hex::encode(ctx.seed),
            suite: ctx.suite.name().to_string(),
            parameters,
            outcome: Outcome { expected, summary },
            metrics,
            finding: finding.map(str::to_string),
            timestamp: timestamp.then(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "{} [{}] seed {}\n{}: {}\n",
            self.command,
            self.suite,
            self.seed,
            if self.outcome.expected { "EXPECTED" } else { "UNEXPECTED" },
            self.outcome.summary
        );
        if let Some(f) = &self.finding {
            out.push_str(&format!("finding: {f}\n"));
        }
        flatten(&self.metrics, "", &mut out);
        out.truncate(out.trim_end().len());
        out
    }
}

fn flatten(v: &Value, prefix: &str, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(v, &key, out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object() || i.is_array()) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, &format!("{prefix}[{i}]"), out);
            }
        }
        other => out.push_str(&format!("  {prefix}: {other}\n")),
    }
}
