//! Plain-text model configuration.
//!
//! ```text
//! [chain]
//! m = 1
//! q = [0.0]
//!
//! [state.1]
//! lambda1 = 2.0
//! lambda2 = 1.0
//! c = 1.0
//! claim = "erlang"
//! claim_shape = 2
//! claim_rate = 20.0
//! ```
//!
//! States are numbered from 1. Unknown keys are rejected.

use std::fmt::Write;

use nalgebra::DMatrix;
use toml::{Table, Value};

use super::{ChainSpec, ClaimLaw, ModelSpec, StateParams};
use crate::error::{Error, Result};

const STATE_KEYS: &[&str] = &[
    "lambda1",
    "lambda2",
    "c",
    "claim",
    "claim_rate",
    "claim_shape",
    "claim_weights",
    "claim_rates",
];

/// Parses a configuration document into an (unvalidated) [`ModelSpec`].
pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let doc: Table = toml::from_str(text).map_err(|e| Error::Syntax(e.to_string().trim().to_string()))?;
    for key in doc.keys() {
        if key != "chain" && key != "state" {
            return Err(Error::UnknownKey(key.clone()));
        }
    }
    let chain = table(&doc, "chain", "chain")?;
    for key in chain.keys() {
        if key != "m" && key != "q" {
            return Err(Error::UnknownKey(format!("chain.{key}")));
        }
    }
    let m = integer(chain, "m", "chain.m")?;
    if m < 1 {
        return Err(Error::BadValue {
            key: "chain.m".into(),
            message: format!("state count must be >= 1, got {m}"),
        });
    }
    let m = m as usize;
    let q = float_list(chain, "q", "chain.q")?;
    if q.len() != m * m {
        return Err(Error::BadValue {
            key: "chain.q".into(),
            message: format!("expected {} entries (m*m), got {}", m * m, q.len()),
        });
    }
    let states_tbl = table(&doc, "state", "state")?;
    for key in states_tbl.keys() {
        let ok = key.parse::<usize>().map(|k| (1..=m).contains(&k)).unwrap_or(false);
        if !ok {
            return Err(Error::UnknownKey(format!("state.{key}")));
        }
    }
    let mut states = Vec::with_capacity(m);
    for k in 1..=m {
        let path = format!("state.{k}");
        let st = table(states_tbl, &k.to_string(), &path)?;
        for key in st.keys() {
            if !STATE_KEYS.contains(&key.as_str()) {
                return Err(Error::UnknownKey(format!("{path}.{key}")));
            }
        }
        let kind = string(st, "claim", &format!("{path}.claim"))?;
        let claim = match kind {
            "erlang" => {
                reject(st, &["claim_weights", "claim_rates"], &path)?;
                let shape = integer(st, "claim_shape", &format!("{path}.claim_shape"))?;
                if shape < 1 || shape > u32::MAX as i64 {
                    return Err(Error::BadValue {
                        key: format!("{path}.claim_shape"),
                        message: format!("shape must be a positive integer, got {shape}"),
                    });
                }
                ClaimLaw::Erlang {
                    shape: shape as u32,
                    rate: float(st, "claim_rate", &format!("{path}.claim_rate"))?,
                }
            }
            "exp" => {
                reject(st, &["claim_shape", "claim_weights", "claim_rates"], &path)?;
                ClaimLaw::Exponential {
                    rate: float(st, "claim_rate", &format!("{path}.claim_rate"))?,
                }
            }
            "hyperexp" => {
                reject(st, &["claim_shape", "claim_rate"], &path)?;
                ClaimLaw::HyperExponential {
                    weights: float_list(st, "claim_weights", &format!("{path}.claim_weights"))?,
                    rates: float_list(st, "claim_rates", &format!("{path}.claim_rates"))?,
                }
            }
            other => {
                return Err(Error::BadValue {
                    key: format!("{path}.claim"),
                    message: format!("expected erlang|exp|hyperexp, got `{other}`"),
                })
            }
        };
        states.push(StateParams {
            lambda1: float(st, "lambda1", &format!("{path}.lambda1"))?,
            lambda2: float(st, "lambda2", &format!("{path}.lambda2"))?,
            c: float(st, "c", &format!("{path}.c"))?,
            claim,
        });
    }
    Ok(ModelSpec {
        chain: ChainSpec::new(DMatrix::from_row_slice(m, m, &q)),
        states,
    })
}

/// Writes a model back in the configuration format accepted by [`parse_model`].
pub fn serialize_model(spec: &ModelSpec) -> String {
    let mut out = String::new();
    let q: Vec<f64> = spec.chain.q.transpose().iter().copied().collect();
    let _ = writeln!(out, "[chain]\nm = {}\nq = {}", spec.chain.m, list(&q));
    for (k, s) in spec.states.iter().enumerate() {
        let _ = writeln!(
            out,
            "\n[state.{}]\nlambda1 = {:?}\nlambda2 = {:?}\nc = {:?}",
            k + 1,
            s.lambda1,
            s.lambda2,
            s.c
        );
        let _ = match &s.claim {
            ClaimLaw::Erlang { shape, rate } => writeln!(
                out,
                "claim = \"erlang\"\nclaim_shape = {shape}\nclaim_rate = {rate:?}"
            ),
            ClaimLaw::Exponential { rate } => {
                writeln!(out, "claim = \"exp\"\nclaim_rate = {rate:?}")
            }
            ClaimLaw::HyperExponential { weights, rates } => writeln!(
                out,
                "claim = \"hyperexp\"\nclaim_weights = {}\nclaim_rates = {}",
                list(weights),
                list(rates)
            ),
        };
    }
    out
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn get<'a>(t: &'a Table, key: &str, path: &str) -> Result<&'a Value> {
    t.get(key).ok_or_else(|| Error::MissingKey(path.to_string()))
}

fn table<'a>(t: &'a Table, key: &str, path: &str) -> Result<&'a Table> {
    match get(t, key, path)? {
        Value::Table(inner) => Ok(inner),
        other => Err(Error::BadValue {
            key: path.to_string(),
            message: format!("expected a section, got {}", other.type_str()),
        }),
    }
}

fn reject(t: &Table, keys: &[&str], path: &str) -> Result<()> {
    match keys.iter().find(|k| t.contains_key(**k)) {
        Some(k) => Err(Error::UnknownKey(format!("{path}.{k}"))),
        None => Ok(()),
    }
}

fn as_float(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::BadValue {
            key: path.to_string(),
            message: format!("expected a number, got {}", other.type_str()),
        }),
    }
}

fn float(t: &Table, key: &str, path: &str) -> Result<f64> {
    as_float(get(t, key, path)?, path)
}

fn integer(t: &Table, key: &str, path: &str) -> Result<i64> {
    match get(t, key, path)? {
        Value::Integer(i) => Ok(*i),
        other => Err(Error::BadValue {
            key: path.to_string(),
            message: format!("expected an integer, got {}", other.type_str()),
        }),
    }
}

fn string<'a>(t: &'a Table, key: &str, path: &str) -> Result<&'a str> {
    match get(t, key, path)? {
        Value::String(s) => Ok(s),
        other => Err(Error::BadValue {
            key: path.to_string(),
            message: format!("expected a string, got {}", other.type_str()),
        }),
    }
}

fn float_list(t: &Table, key: &str, path: &str) -> Result<Vec<f64>> {
    match get(t, key, path)? {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, v)| as_float(v, &format!("{path}[{i}]")))
            .collect(),
        other => Err(Error::BadValue {
            key: path.to_string(),
            message: format!("expected a list of numbers, got {}", other.type_str()),
        }),
    }
}
