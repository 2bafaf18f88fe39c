//! Doubly infinite coefficient sequences with eventually constant tails.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A real sequence over all integers that is constant outside a finite
/// window: `window` lists exceptional values by index, `left_tail` applies
/// for indices below the window, `right_tail` above (and everywhere the
/// window is silent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSeq {
    pub left_tail: f64,
    #[serde(with = "int_key_map", default)]
    pub window: BTreeMap<i64, f64>,
    pub right_tail: f64,
}

impl CoeffSeq {
    /// Sequence equal to `v` everywhere.
    pub fn constant(v: f64) -> Self {
        CoeffSeq {
            left_tail: v,
            window: BTreeMap::new(),
            right_tail: v,
        }
    }

    /// Sequence with the given tails and exceptional values.
    pub fn with_window(left_tail: f64, window: BTreeMap<i64, f64>, right_tail: f64) -> Self {
        CoeffSeq {
            left_tail,
            window,
            right_tail,
        }
    }

    /// Value at index `n`.
    pub fn get(&self, n: i64) -> f64 {
        if let Some(&v) = self.window.get(&n) {
            return v;
        }
        if n < 0 {
            self.left_tail
        } else {
            self.right_tail
        }
    }

    /// Tail value governing index `n` (ignoring the window).
    pub fn tail_at(&self, n: i64) -> f64 {
        if n < 0 {
            self.left_tail
        } else {
            self.right_tail
        }
    }

    /// Largest |index| whose value differs from the governing tail; 0 when
    /// the sequence is constant on each side.
    pub fn window_extent(&self) -> i64 {
        self.window
            .iter()
            .filter(|(&k, &v)| v != self.tail_at(k))
            .map(|(&k, _)| k.abs())
            .max()
            .unwrap_or(0)
    }
}

/// Serde adapter storing integer map keys as decimal strings (JSON object
/// keys must be strings); keys serialize in ascending numeric order.
pub mod int_key_map {
    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;
    use serde::{Deserializer, Serializer};
    use std::collections::BTreeMap;
    use std::fmt;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<i64, f64>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let mut m = ser.serialize_map(Some(map.len()))?;
        for (k, v) in map {
            m.serialize_entry(&k.to_string(), v)?;
        }
        m.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<i64, f64>, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = BTreeMap<i64, f64>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from integer strings to numbers")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((k, v)) = access.next_entry::<String, f64>()? {
                    let idx: i64 = k
                        .parse()
                        .map_err(|_| serde::de::Error::custom(format!("bad integer key: {k:?}")))?;
                    if out.insert(idx, v).is_some() {
                        return Err(serde::de::Error::custom(format!("duplicate key: {k:?}")));
                    }
                }
                Ok(out)
            }
        }
        de.deserialize_map(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_lookup() {
        let s = CoeffSeq::constant(0.25);
        assert_eq!(s.get(-100), 0.25);
        assert_eq!(s.get(0), 0.25);
        assert_eq!(s.get(100), 0.25);
        assert_eq!(s.window_extent(), 0);
    }

    #[test]
    fn window_overrides_and_extent() {
        let mut w = BTreeMap::new();
        w.insert(-3, 0.5);
        w.insert(2, 0.1);
        w.insert(7, 0.25); // equal to the tail: must not count toward extent
        let s = CoeffSeq::with_window(0.25, w, 0.25);
        assert_eq!(s.get(-3), 0.5);
        assert_eq!(s.get(2), 0.1);
        assert_eq!(s.get(3), 0.25);
        assert_eq!(s.window_extent(), 3);
    }

    #[test]
    fn json_round_trip_with_string_keys() {
        let mut w = BTreeMap::new();
        w.insert(-1, 0.0875);
        w.insert(1, 0.107142857142857);
        let s = CoeffSeq::with_window(0.125, w, 0.125);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"-1\""));
        let back: CoeffSeq = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = r#"{"left_tail":0.1,"right_tail":0.1,"bogus":3}"#;
        assert!(serde_json::from_str::<CoeffSeq>(json).is_err());
    }
}
