//! JSON report building blocks.
//!
//! Floats are written with 17 significant digits in scientific notation
//! (non-finite values become `null`); field order follows declaration order,
//! so identical inputs produce byte-identical reports.

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::series::Complex;

/// A float serialized with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl Sig17 {
    pub fn text(self) -> String {
        if self.0.is_finite() {
            format!("{:.16e}", self.0)
        } else {
            "null".to_string()
        }
    }
}

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(self.text()).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl From<f64> for Sig17 {
    fn from(x: f64) -> Self {
        Sig17(x)
    }
}

/// A complex number as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CPair(pub Complex);

impl Serialize for CPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(2))?;
        seq.serialize_element(&Sig17(self.0.re))?;
        seq.serialize_element(&Sig17(self.0.im))?;
        seq.end()
    }
}

pub fn pairs(values: &[Complex]) -> Vec<CPair> {
    values.iter().copied().map(CPair).collect()
}

pub fn sig17s(values: &[f64]) -> Vec<Sig17> {
    values.iter().copied().map(Sig17).collect()
}

/// Named float metrics, serialized as a JSON object in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics(Vec<(String, f64)>);

impl Metrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.0.push((name.into(), value));
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(n, v)| (n.as_str(), *v))
    }
}

impl Serialize for Metrics {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, &Sig17(*v))?;
        }
        map.end()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(Sig17(0.5).text(), "5.0000000000000000e-1");
        assert_eq!(serde_json::to_string(&Sig17(f64::NAN)).unwrap(), "null");
        let v: f64 = serde_json::from_str(&serde_json::to_string(&Sig17(0.1)).unwrap()).unwrap();
        assert_eq!(v, 0.1);
    }

    #[test]
    fn metrics_keep_order() {
        let mut m = Metrics::new();
        m.push("zeta", 1.0).push("alpha", 2.0);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.find("zeta").unwrap() < s.find("alpha").unwrap());
        assert_eq!(m.get("alpha"), Some(2.0));
    }
}
