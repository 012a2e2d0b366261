//! Flattened `section.key` parameter table with usage tracking.
//!
//! Every read records the key and the value actually used (explicit or
//! default), so the run can echo its resolved configuration and warn about
//! keys nobody asked for.

use crate::error::CliError;
use std::cell::RefCell;
use std::collections::BTreeMap;
use toml::Value;

#[derive(Debug, Default)]
pub struct Params {
    values: BTreeMap<String, Value>,
    resolved: RefCell<BTreeMap<String, Value>>,
}

fn flatten(prefix: &str, t: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => flatten(&key, inner, out),
            _ => {
                out.insert(key, v.clone());
            }
        }
    }
}

/// Parse a command-line value: TOML literal if it is one, bare string otherwise.
pub fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a number",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a date",
        Value::Array(_) => "a list",
        Value::Table(_) => "a table",
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Params {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let t: toml::Table = text.parse().map_err(|e| CliError::Config(format!("config: {e}")))?;
        let mut p = Self::default();
        p.merge_table(&t);
        Ok(p)
    }

    pub fn merge_table(&mut self, t: &toml::Table) {
        flatten("", t, &mut self.values);
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.values.insert(key.to_string(), v);
    }

    /// `key=value` from the command line.
    pub fn set_assignment(&mut self, s: &str) -> Result<(), CliError> {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("`{s}`: expected key=value")))?;
        let k = k.trim();
        if k.is_empty() || !k.contains('.') {
            return Err(CliError::Config(format!("`{k}`: keys take the form section.key")));
        }
        self.set(k, parse_value(v.trim()));
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    /// Overwrite the echoed value of `key` with what was finally used.
    pub fn note(&self, key: &str, v: Value) {
        self.record(key, v);
    }

    fn record(&self, key: &str, v: Value) {
        self.resolved.borrow_mut().insert(key.to_string(), v);
    }

    fn bad(key: &str, want: &str, v: &Value) -> CliError {
        CliError::Config(format!("`{key}`: expected {want}, got {}", type_name(v)))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                let x = as_f64(v).ok_or_else(|| Self::bad(key, "a number", v))?;
                if !x.is_finite() {
                    return Err(CliError::Config(format!("`{key}`: must be finite")));
                }
                self.record(key, Value::Float(x));
                Ok(Some(x))
            }
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let x = self.opt_f64(key)?.unwrap_or(default);
        self.record(key, Value::Float(x));
        Ok(x)
    }

    /// Strictly positive number.
    pub fn positive_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let x = self.f64_or(key, default)?;
        if !(x > 0.0) {
            return Err(CliError::Config(format!("`{key}`: must be positive, got {x}")));
        }
        Ok(x)
    }

    pub fn opt_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                let n = match v {
                    Value::Integer(i) if *i >= 0 => *i as u64,
                    // counts like 1e6 arrive as floats
                    Value::Float(x) if *x >= 0.0 && x.fract() == 0.0 && *x < 9.007e15 => *x as u64,
                    _ => return Err(Self::bad(key, "a non-negative whole number", v)),
                };
                self.record(key, Value::Integer(n as i64));
                Ok(Some(n))
            }
        }
    }

    pub fn count_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let n = self.opt_u64(key)?.unwrap_or(default as u64) as usize;
        self.record(key, Value::Integer(n as i64));
        Ok(n)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        let b = match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(v) => return Err(Self::bad(key, "true or false", v)),
        };
        self.record(key, Value::Boolean(b));
        Ok(b)
    }

    pub fn opt_str(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => {
                self.record(key, Value::String(s.clone()));
                Ok(Some(s.clone()))
            }
            Some(v) => Err(Self::bad(key, "a string", v)),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> Result<String, CliError> {
        let s = self.opt_str(key)?.unwrap_or_else(|| default.to_string());
        self.record(key, Value::String(s.clone()));
        Ok(s)
    }

    /// One of a fixed set of words.
    pub fn choice(&self, key: &str, default: &str, allowed: &[&str]) -> Result<String, CliError> {
        let s = self.str_or(key, default)?;
        if allowed.contains(&s.as_str()) {
            Ok(s)
        } else {
            Err(CliError::Config(format!(
                "`{key}`: unknown value `{s}` (one of: {})",
                allowed.join(", ")
            )))
        }
    }

    /// A number or a list of numbers.
    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let xs = match self.raw(key) {
            None => default.to_vec(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| as_f64(v).ok_or_else(|| Self::bad(key, "a list of numbers", v)))
                .collect::<Result<_, _>>()?,
            Some(v) => vec![as_f64(v).ok_or_else(|| Self::bad(key, "a number or list of numbers", v))?],
        };
        if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("`{key}`: needs at least one finite value")));
        }
        self.record(key, Value::Array(xs.iter().map(|&x| Value::Float(x)).collect()));
        Ok(xs)
    }

    pub fn count_list_or(&self, key: &str, default: &[u64]) -> Result<Vec<u64>, CliError> {
        let xs = self.f64_list_or(key, &default.iter().map(|&n| n as f64).collect::<Vec<_>>())?;
        if xs.iter().any(|x| *x < 0.0 || x.fract() != 0.0) {
            return Err(CliError::Config(format!("`{key}`: expected whole numbers")));
        }
        let ns: Vec<u64> = xs.into_iter().map(|x| x as u64).collect();
        self.record(key, Value::Array(ns.iter().map(|&n| Value::Integer(n as i64)).collect()));
        Ok(ns)
    }

    /// Two-number list such as a window `[lo, hi]`.
    pub fn raw_list_pair(&self, key: &str) -> Result<Option<(f64, f64)>, CliError> {
        if !self.contains(key) {
            return Ok(None);
        }
        match self.f64_list_or(key, &[])?.as_slice() {
            [a, b] => Ok(Some((*a, *b))),
            _ => Err(CliError::Config(format!("`{key}`: expected two numbers [lo, hi]"))),
        }
    }

    /// Seed for a stochastic scenario; required.
    pub fn seed(&self) -> Result<u64, CliError> {
        self.opt_u64("run.seed")?.ok_or_else(|| {
            CliError::Config("missing required key `run.seed` (this scenario is stochastic; pass --seed)".into())
        })
    }

    /// Keys present but never read, sorted.
    pub fn unused(&self) -> Vec<String> {
        let r = self.resolved.borrow();
        self.values.keys().filter(|k| !r.contains_key(*k)).cloned().collect()
    }

    /// Resolved values as a nested TOML-like JSON object.
    pub fn echo(&self) -> serde_json::Value {
        let mut root = serde_json::Map::new();
        for (k, v) in self.resolved.borrow().iter() {
            let (sec, key) = k.split_once('.').unwrap_or(("", k));
            let entry = root
                .entry(sec.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
            if let serde_json::Value::Object(m) = entry {
                m.insert(key.to_string(), serde_json::to_value(v).unwrap_or(serde_json::Value::Null));
            }
        }
        serde_json::Value::Object(root)
    }
}
