//! JSON chain configuration.
//!
//! ```json
//! { "n_spins": 4, "tau_ms": 2.1,
//!   "couplings_hz": { "1,2": -1233.7, "2,3": -716.0 },
//!   "shifts_hz": [106.2, -187.7, -58.6, 91.3],
//!   "full_space_cap": 14 }
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ChainSpec, DEFAULT_FULL_SPACE_CAP};
use crate::error::{Error, Result};

/// Couplings in document order; duplicate literal keys are rejected.
struct PairTable(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for PairTable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PairVisitor;

        impl<'de> Visitor<'de> for PairVisitor {
            type Value = PairTable;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from \"j,k\" to a coupling in Hz")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<PairTable, A::Error> {
                let mut entries: Vec<(String, Value)> = Vec::new();
                while let Some((key, value)) = map.next_entry::<String, Value>()? {
                    if entries.iter().any(|(k, _)| *k == key) {
                        return Err(de::Error::custom(format!(
                            "couplings_hz.{key}: duplicate pair"
                        )));
                    }
                    entries.push((key, value));
                }
                Ok(PairTable(entries))
            }
        }

        deserializer.deserialize_map(PairVisitor)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_spins: Option<Value>,
    tau_ms: Option<Value>,
    couplings_hz: Option<PairTable>,
    shifts_hz: Option<Value>,
    full_space_cap: Option<Value>,
}

#[derive(Serialize)]
struct ConfigOut<'a> {
    n_spins: usize,
    tau_ms: f64,
    couplings_hz: BTreeMap<PairKey, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shifts_hz: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    full_space_cap: Option<usize>,
}

/// Orders keys numerically so "2,3" sorts before "10,11".
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct PairKey(usize, usize);

impl Serialize for PairKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{},{}", self.0, self.1))
    }
}

/// Parses and validates a JSON chain configuration.
pub fn parse_chain_spec(text: &str) -> Result<ChainSpec> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let key = msg
            .strip_prefix("couplings_hz.")
            .and_then(|rest| rest.split(':').next())
            .map(|k| format!("couplings_hz.{k}"))
            .unwrap_or_else(|| "<document>".to_string());
        Error::parse(key, msg)
    })?;

    let n_spins = match raw.n_spins {
        None => return Err(Error::parse("n_spins", "missing required key")),
        Some(v) => as_count(&v, "n_spins")?,
    };
    let tau_ms = match raw.tau_ms {
        None => return Err(Error::parse("tau_ms", "missing required key")),
        Some(v) => as_number(&v, "tau_ms")?,
    };
    if !tau_ms.is_finite() || tau_ms <= 0.0 {
        return Err(Error::parse("tau_ms", format!("must be positive, got {tau_ms}")));
    }

    let mut couplings = Vec::new();
    let mut seen = BTreeMap::new();
    for (key, value) in raw.couplings_hz.map(|t| t.0).unwrap_or_default() {
        let name = format!("couplings_hz.{key}");
        let (j, k) = parse_pair(&key, n_spins).map_err(|m| Error::parse(&name, m))?;
        let d = as_number(&value, &name)?;
        if let Some(previous) = seen.insert((j, k), key.clone()) {
            return Err(Error::parse(
                name,
                format!("duplicate pair, already given as \"{previous}\""),
            ));
        }
        couplings.push(((j, k), d));
    }

    let mut spec = ChainSpec::build(n_spins, couplings, tau_ms / 1e3, tau_ms)
        .map_err(|e| Error::parse("couplings_hz", e.to_string()))?;

    if let Some(v) = raw.shifts_hz {
        let items = v
            .as_array()
            .ok_or_else(|| Error::parse("shifts_hz", "expected an array of numbers"))?;
        let shifts = items
            .iter()
            .enumerate()
            .map(|(i, x)| as_number(x, &format!("shifts_hz[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        spec = spec
            .with_shifts(shifts)
            .map_err(|e| Error::parse("shifts_hz", e.to_string()))?;
    }
    if let Some(v) = raw.full_space_cap {
        spec = spec.with_full_space_cap(as_count(&v, "full_space_cap")?);
    }
    Ok(spec)
}

impl ChainSpec {
    /// Serializes to the configuration format read by [`parse_chain_spec`].
    pub fn to_config_json(&self) -> String {
        let out = ConfigOut {
            n_spins: self.n_spins,
            tau_ms: self.tau_ms,
            couplings_hz: self
                .couplings
                .iter()
                .map(|(&(j, k), &d)| (PairKey(j, k), d))
                .collect(),
            shifts_hz: self.shifts(),
            full_space_cap: (self.full_space_cap != DEFAULT_FULL_SPACE_CAP)
                .then_some(self.full_space_cap),
        };
        serde_json::to_string_pretty(&out).expect("config serialization cannot fail")
    }
}

impl Serialize for ChainSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let value: Value = serde_json::from_str(&self.to_config_json()).map_err(serde::ser::Error::custom)?;
        value.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChainSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        parse_chain_spec(&value.to_string()).map_err(de::Error::custom)
    }
}

fn parse_pair(key: &str, n_spins: usize) -> std::result::Result<(usize, usize), String> {
    let (a, b) = key
        .split_once(',')
        .ok_or_else(|| format!("pair key \"{key}\" is not of the form \"j,k\""))?;
    let index = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("\"{}\" is not a spin index", s.trim()))
    };
    let (j, k) = (index(a)?, index(b)?);
    if j == 0 || k == 0 {
        return Err("spin indices start at 1".into());
    }
    if j >= k {
        return Err(format!("pair key must satisfy j < k, got {j},{k}"));
    }
    if k > n_spins {
        return Err(format!("spin {k} exceeds n_spins = {n_spins}"));
    }
    Ok((j, k))
}

fn as_number(v: &Value, key: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(key, format!("expected a number, got {v}")))
}

fn as_count(v: &Value, key: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::parse(key, format!("expected a non-negative integer, got {v}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = include_str!("../../fixtures/paper4.json");

    fn parse_err_key(text: &str) -> String {
        match parse_chain_spec(text) {
            Err(Error::Parse { key, .. }) => key,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn measured_fixture() {
        let spec = parse_chain_spec(FIXTURE).unwrap();
        assert_eq!(spec.n_spins(), 4);
        assert_eq!(spec.coupling(3, 4), Some(-1677.5));
        assert_eq!(spec.coupling(1, 2), Some(-1233.7));
        assert_eq!(spec.shifts().unwrap()[0], 106.2);
        assert!((spec.tau() - 2.1e-3).abs() < 1e-18);
    }

    #[test]
    fn minimal_round_trip() {
        let text = r#"{"n_spins": 2, "tau_ms": 0.5, "couplings_hz": {"1,2": 1000.0}}"#;
        let spec = parse_chain_spec(text).unwrap();
        let once = spec.to_config_json();
        let again = parse_chain_spec(&once).unwrap();
        assert_eq!(spec, again);
        assert_eq!(once, again.to_config_json());
    }

    #[test]
    fn out_of_range_pair() {
        let text = r#"{"n_spins": 4, "tau_ms": 1, "couplings_hz": {"5,2": 1.0}}"#;
        assert_eq!(parse_err_key(text), "couplings_hz.5,2");
    }

    #[test]
    fn descending_pair() {
        let text = r#"{"n_spins": 3, "tau_ms": 1, "couplings_hz": {"2,1": 1.0}}"#;
        assert_eq!(parse_err_key(text), "couplings_hz.2,1");
    }

    #[test]
    fn duplicate_pairs() {
        let text = r#"{"n_spins": 3, "tau_ms": 1, "couplings_hz": {"1,2": 1.0, "1,2": 2.0}}"#;
        assert_eq!(parse_err_key(text), "couplings_hz.1,2");
        let text = r#"{"n_spins": 3, "tau_ms": 1, "couplings_hz": {"1,2": 1.0, " 1,2": 2.0}}"#;
        assert_eq!(parse_err_key(text), "couplings_hz. 1,2");
    }

    #[test]
    fn missing_n_spins() {
        let text = r#"{"tau_ms": 1, "couplings_hz": {"1,2": 1.0}}"#;
        assert_eq!(parse_err_key(text), "n_spins");
    }

    #[test]
    fn non_numeric_values() {
        let text = r#"{"n_spins": 2, "tau_ms": 1, "couplings_hz": {"1,2": "strong"}}"#;
        assert_eq!(parse_err_key(text), "couplings_hz.1,2");
        let text = r#"{"n_spins": 2, "tau_ms": "x", "couplings_hz": {"1,2": 1}}"#;
        assert_eq!(parse_err_key(text), "tau_ms");
        let text = r#"{"n_spins": 2.5, "tau_ms": 1, "couplings_hz": {"1,2": 1}}"#;
        assert_eq!(parse_err_key(text), "n_spins");
    }

    #[test]
    fn shift_count_checked() {
        let text = r#"{"n_spins": 2, "tau_ms": 1, "couplings_hz": {"1,2": 1}, "shifts_hz": [1]}"#;
        assert_eq!(parse_err_key(text), "shifts_hz");
    }

    #[test]
    fn serde_impls_agree() {
        let spec = parse_chain_spec(FIXTURE).unwrap().with_full_space_cap(8);
        let json = serde_json::to_string(&spec).unwrap();
        let back: ChainSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
