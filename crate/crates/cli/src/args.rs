//! `key=value` argument groups and JSON-or-file inputs.

use std::collections::BTreeMap;
use std::fs;

use serde::de::DeserializeOwned;
use serde_json::{Map, Number, Value};
use sympcap::potential::Potential1D;
use sympcap::{Error, Result};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

/// Parsed `key=value` tokens. Every key must be consumed before [`KeyValues::finish`].
#[derive(Debug, Default)]
pub struct KeyValues {
    what: String,
    map: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(what: &str, tokens: &[String]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in tokens {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| invalid(format!("{what}: expected key=value, got '{t}'")))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(invalid(format!("{what}: key '{k}' given twice")));
            }
        }
        Ok(Self { what: what.to_string(), map })
    }

    fn take(&mut self, keys: &[&str]) -> Result<Option<(String, String)>> {
        let found: Vec<&str> = keys.iter().copied().filter(|k| self.map.contains_key(*k)).collect();
        match found.as_slice() {
            [] => Ok(None),
            [k] => Ok(self.map.remove(*k).map(|v| (k.to_string(), v))),
            _ => Err(invalid(format!("{}: keys {found:?} are aliases, give one", self.what))),
        }
    }

    pub fn f64(&mut self, keys: &[&str]) -> Result<Option<f64>> {
        match self.take(keys)? {
            None => Ok(None),
            Some((k, v)) => parse_f64(&v)
                .map(Some)
                .map_err(|_| invalid(format!("{}: {k}={v} is not a number", self.what))),
        }
    }

    pub fn require_f64(&mut self, keys: &[&str]) -> Result<f64> {
        self.f64(keys)?
            .ok_or_else(|| invalid(format!("{}: missing {}", self.what, keys[0])))
    }

    pub fn usize(&mut self, keys: &[&str]) -> Result<Option<usize>> {
        match self.take(keys)? {
            None => Ok(None),
            Some((k, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| invalid(format!("{}: {k}={v} is not a nonnegative integer", self.what))),
        }
    }

    pub fn require_usize(&mut self, keys: &[&str]) -> Result<usize> {
        self.usize(keys)?
            .ok_or_else(|| invalid(format!("{}: missing {}", self.what, keys[0])))
    }

    pub fn list(&mut self, keys: &[&str]) -> Result<Option<Vec<f64>>> {
        match self.take(keys)? {
            None => Ok(None),
            Some((k, v)) => parse_list(&v)
                .map(Some)
                .map_err(|_| invalid(format!("{}: {k}={v} is not a comma-separated list of numbers", self.what))),
        }
    }

    pub fn string(&mut self, keys: &[&str]) -> Result<Option<String>> {
        Ok(self.take(keys)?.map(|(_, v)| v))
    }

    pub fn finish(self) -> Result<()> {
        if let Some(k) = self.map.keys().next() {
            return Err(invalid(format!("{}: unknown key '{k}'", self.what)));
        }
        Ok(())
    }
}

pub fn parse_f64(s: &str) -> std::result::Result<f64, ()> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse::<f64>().map_err(|_| ()),
    }
}

pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, ()> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_f64).collect()
}

pub fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| invalid(format!("'{s}' is not a list of quantum numbers"))))
        .collect()
}

/// Inline JSON, or `@path` to read it from a file.
pub fn json_input<T: DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    let body = match text.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|e| invalid(format!("{what}: cannot read {path}: {e}")))?,
        None => text.to_string(),
    };
    serde_json::from_str(&body).map_err(|e| invalid(format!("{what}: {e}")))
}

/// A potential given as `kind key=value ...` or as one JSON object.
pub fn potential(tokens: &[String]) -> Result<Potential1D> {
    let (head, rest) = tokens
        .split_first()
        .ok_or_else(|| invalid("--potential needs a kind, e.g. 'harmonic omega=1'"))?;
    let pot: Potential1D = if head.trim_start().starts_with('{') || head.starts_with('@') {
        if !rest.is_empty() {
            return Err(invalid("--potential: extra tokens after a JSON descriptor"));
        }
        json_input("--potential", head)?
    } else {
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(head.clone()));
        for t in rest {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| invalid(format!("--potential: expected key=value, got '{t}'")))?;
            let values = parse_list(v).map_err(|_| invalid(format!("--potential: {k}={v} is not numeric")))?;
            let num = |x: f64| {
                Number::from_f64(x)
                    .map(Value::Number)
                    .ok_or_else(|| invalid(format!("--potential: {k}={v} is not finite")))
            };
            let value = if v.contains(',') || k == "coeffs" {
                Value::Array(values.into_iter().map(num).collect::<Result<_>>()?)
            } else {
                num(values[0])?
            };
            obj.insert(k.to_string(), value);
        }
        serde_json::from_value(Value::Object(obj)).map_err(|e| invalid(format!("--potential: {e}")))?
    };
    pot.validate()?;
    Ok(pot)
}

/// Splits `kind k=v ... kind k=v ...` into one token group per potential.
pub fn potential_groups(tokens: &[String]) -> Vec<Vec<String>> {
    let mut groups: Vec<Vec<String>> = Vec::new();
    for t in tokens {
        match groups.last_mut() {
            Some(g) if t.contains('=') && !t.trim_start().starts_with('{') => g.push(t.clone()),
            _ => groups.push(vec![t.clone()]),
        }
    }
    groups
}

pub fn potentials(tokens: &[String]) -> Result<Vec<Potential1D>> {
    potential_groups(tokens).iter().map(|g| potential(g)).collect()
}
