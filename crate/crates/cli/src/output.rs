use std::io::Write;

use serde::Serialize;
use serde_json::Value;

/// Serializes `value` with every float rounded to `precision` decimals.
pub fn rounded_json<S: Serialize>(value: &S, precision: usize) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize");
    round_floats(&mut v, precision);
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

fn round_floats(v: &mut Value, precision: usize) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r: f64 = format!("{x:.precision$}").parse().unwrap_or(x);
            if let Some(m) = serde_json::Number::from_f64(r) {
                *n = m;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|x| round_floats(x, precision)),
        Value::Object(map) => map.values_mut().for_each(|x| round_floats(x, precision)),
        _ => {}
    }
}

/// Writes to stdout, ignoring a closed pipe.
pub fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}
