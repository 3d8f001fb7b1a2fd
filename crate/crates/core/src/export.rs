//! CSV rows for estimates and event logs.

use crate::simulate::{EventRecord, MCEstimate};

pub const ESTIMATE_HEADER: &str = "estimand,u,a,b,s,n,value,stderr,censored_frac,seed";
pub const EVENT_HEADER: &str = "t,kind,size,state_before,state_after";

/// One estimate with the parameters it was computed at. Parameters that do
/// not apply are left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub estimand: String,
    pub u: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub s: Option<f64>,
    pub estimate: MCEstimate,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl EstimateRow {
    pub fn to_csv_line(&self) -> String {
        let e = &self.estimate;
        format!(
            "{},{},{},{},{},{},{:?},{:?},{:?},{}",
            quote(&self.estimand),
            opt(self.u),
            opt(self.a),
            opt(self.b),
            opt(self.s),
            e.n,
            e.value,
            e.stderr,
            e.censored_frac,
            e.seed
        )
    }
}

pub fn estimates_csv(rows: &[EstimateRow]) -> String {
    let mut s = format!("{ESTIMATE_HEADER}\n");
    for r in rows {
        s.push_str(&r.to_csv_line());
        s.push('\n');
    }
    s
}

pub fn event_log_csv(log: &[EventRecord]) -> String {
    let mut s = format!("{EVENT_HEADER}\n");
    for e in log {
        s.push_str(&format!(
            "{:?},{},{:?},{},{}\n",
            e.t,
            e.kind.as_str(),
            e.size,
            e.state_before + 1,
            e.state_after + 1
        ));
    }
    s
}
