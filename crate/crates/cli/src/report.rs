//! JSON run report. The key set is documented in `docs/report.md`.

use std::time::Duration;

use dqi_core::chase::ChaseStats;
use dqi_core::textio::format_fact;
use dqi_core::{Answer, Certificate, ChaseBudget, Instance, Verdict};
use serde_json::{json, Value};

/// Exit status for a verdict.
pub fn exit_code(a: &Answer) -> i32 {
    match a {
        Answer::True => 0,
        Answer::False => 1,
        Answer::Unknown(_) => 2,
    }
}

pub fn answer_name(a: &Answer) -> &'static str {
    match a {
        Answer::True => "true",
        Answer::False => "false",
        Answer::Unknown(_) => "unknown",
    }
}

pub fn facts_json(i: &Instance) -> Value {
    Value::Array(i.facts().map(|f| Value::String(format_fact(&f))).collect())
}

pub fn stats_json(s: &ChaseStats) -> Value {
    json!({
        "nodes": s.nodes,
        "open": s.open,
        "internal": s.internal,
        "leaves": s.leaves,
        "dummies": s.dummies,
        "budget_cut": s.budget_cut,
        "closed": s.closed,
        "max_depth": s.max_depth,
    })
}

pub fn budget_json(b: &ChaseBudget) -> Value {
    json!({
        "max_nodes": b.max_nodes,
        "max_facts": b.max_facts,
        "max_depth": b.max_depth,
    })
}

/// One run of the tool.
pub struct RunReport {
    pub command: Vec<String>,
    pub verdict: Answer,
    pub exact: bool,
    pub method: String,
    pub certificate: Value,
    pub budget: Value,
    pub consumed: Value,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn from_verdict(command: Vec<String>, v: &Verdict, b: &ChaseBudget, elapsed: Duration) -> Self {
        let (certificate, consumed) = match &v.certificate {
            Some(Certificate::Witness(w)) => (json!({"kind": "witness", "facts": facts_json(w)}), Value::Null),
            Some(Certificate::ChaseExhausted(st)) => (json!({"kind": "chase_exhausted"}), stats_json(st)),
            Some(Certificate::ClassExact(r)) => (json!({"kind": "class_exact", "method": r}), Value::Null),
            None => (Value::Null, Value::Null),
        };
        RunReport {
            command,
            verdict: v.value.clone(),
            exact: !v.is_unknown(),
            method: v.method.clone(),
            certificate,
            budget: budget_json(b),
            consumed,
            elapsed,
        }
    }

    pub fn to_json(&self) -> Value {
        let reason = match &self.verdict {
            Answer::Unknown(r) => Value::String(r.clone()),
            _ => Value::Null,
        };
        json!({
            "command": self.command,
            "verdict": answer_name(&self.verdict),
            "exit_code": exit_code(&self.verdict),
            "exact": self.exact,
            "method": self.method,
            "reason": reason,
            "certificate": self.certificate,
            "budget": self.budget,
            "consumed": self.consumed,
            "wall_time_ms": self.elapsed.as_secs_f64() * 1000.0,
        })
    }
}

/// Report for a run that ended in an error.
pub fn error_json(command: Vec<String>, msg: &str, elapsed: Duration) -> Value {
    json!({
        "command": command,
        "verdict": "error",
        "exit_code": 3,
        "exact": false,
        "method": Value::Null,
        "reason": msg,
        "certificate": Value::Null,
        "budget": Value::Null,
        "consumed": Value::Null,
        "wall_time_ms": elapsed.as_secs_f64() * 1000.0,
    })
}
