//! JSON run reports. Every failure carries its reproducer: seed, parameters,
//! the sampled point and the witness indices.

use std::time::Duration;

use qrefl::{Budget, CheckRecord};
use serde_json::{json, Map, Value};

use crate::suites::Suite;

fn object(kv: impl Iterator<Item = (String, String)>) -> Value {
    Value::Object(kv.map(|(k, v)| (k, Value::String(v))).collect::<Map<_, _>>())
}

pub fn record(r: &CheckRecord) -> Value {
    let mut v = json!({
        "id": r.id,
        "params": object(r.params.iter().cloned()),
        "status": r.status.to_string(),
        "points_passed": r.points_passed,
        "points_tried": r.points_tried,
        "poles_resampled": r.poles_resampled,
        "seed": r.seed,
        "elapsed_ms": r.elapsed.as_millis() as u64,
    });
    let m = v.as_object_mut().expect("object");
    if let Some(w) = &r.witness {
        m.insert("witness".into(), json!({ "indices": w.indices, "detail": w.detail, "lhs": w.lhs, "rhs": w.rhs }));
    }
    if let Some(p) = &r.failing_point {
        m.insert("point".into(), object(p.iter().map(|(k, v)| (k.clone(), v.to_fraction_string()))));
    }
    if let Some(n) = &r.note {
        m.insert("note".into(), Value::String(n.clone()));
    }
    v
}

pub fn report(suite: Suite, budget: &Budget, records: &[CheckRecord], elapsed: Duration) -> Value {
    let failed = records.iter().filter(|r| !r.passed()).count();
    json!({
        "suite": suite.name(),
        "seed": budget.seed,
        "points": budget.points,
        "bound": budget.bound,
        "passed": failed == 0,
        "failed": failed,
        "checks": records.iter().map(record).collect::<Vec<_>>(),
        "elapsed_ms": elapsed.as_millis() as u64,
    })
}
