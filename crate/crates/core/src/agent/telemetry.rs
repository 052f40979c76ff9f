//! Telemetry report. The layout is written by hand so the bytes stay fixed:
//! one line per iteration, then totals and per-iteration averages.

use super::session::Session;

/// Fixed-point with trailing zeros removed; never prints `-0`.
pub fn trim_number(v: f64, decimals: usize) -> String {
    if !v.is_finite() {
        return "null".into();
    }
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// `{"seconds": .., "usd": .., "input_tokens": .., "output_tokens": .., "calls": ..}`
pub fn format_summary(seconds: f64, usd: f64, input_tokens: f64, output_tokens: f64, calls: f64) -> String {
    format!(
        "{{\"seconds\": {}, \"usd\": {}, \"input_tokens\": {}, \"output_tokens\": {}, \"calls\": {}}}",
        trim_number(seconds, 3),
        trim_number(usd, 6),
        trim_number(input_tokens, 3),
        trim_number(output_tokens, 3),
        trim_number(calls, 3),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Totals {
    pub seconds: f64,
    pub usd: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub calls: u64,
}

pub fn totals(session: &Session) -> Totals {
    session.iterations.iter().fold(Totals::default(), |t, r| Totals {
        seconds: t.seconds + r.seconds,
        usd: t.usd + r.usd,
        input_tokens: t.input_tokens + r.input_tokens,
        output_tokens: t.output_tokens + r.output_tokens,
        calls: t.calls + r.calls,
    })
}

pub fn record_telemetry(session: &Session) -> String {
    let mut s = String::from("{\n");
    s.push_str(&format!("  \"outcome\": \"{}\",\n", session.outcome.as_str()));
    s.push_str(&format!("  \"restarts\": {},\n", session.restarts));
    s.push_str("  \"iterations\": [");
    for (i, r) in session.iterations.iter().enumerate() {
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        s.push_str(&format!(
            "    {{\"index\": {}, \"seconds\": {}, \"usd\": {}, \"input_tokens\": {}, \"output_tokens\": {}, \"calls\": {}, \"converged\": {}, \"accepted\": {}, \"errors\": {}}}",
            r.index,
            trim_number(r.seconds, 3),
            trim_number(r.usd, 6),
            r.input_tokens,
            r.output_tokens,
            r.calls,
            r.converged,
            r.accepted,
            r.diagnostics.iter().filter(|d| d.is_error()).count(),
        ));
    }
    s.push_str(if session.iterations.is_empty() { "],\n" } else { "\n  ],\n" });
    let t = totals(session);
    s.push_str(&format!(
        "  \"totals\": {},\n",
        format_summary(t.seconds, t.usd, t.input_tokens as f64, t.output_tokens as f64, t.calls as f64)
    ));
    let n = session.iterations.len().max(1) as f64;
    s.push_str(&format!(
        "  \"per_iteration\": {}\n",
        format_summary(
            t.seconds / n,
            t.usd / n,
            t.input_tokens as f64 / n,
            t.output_tokens as f64 / n,
            t.calls as f64 / n
        )
    ));
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_formatting() {
        assert_eq!(
            format_summary(745.0, 0.79, 914000.0, 111000.0, 23.4),
            r#"{"seconds": 745, "usd": 0.79, "input_tokens": 914000, "output_tokens": 111000, "calls": 23.4}"#
        );
        assert_eq!(trim_number(-0.0001, 3), "0");
        assert_eq!(trim_number(10.0, 3), "10");
        assert_eq!(trim_number(0.1 + 0.2, 6), "0.3");
    }
}
