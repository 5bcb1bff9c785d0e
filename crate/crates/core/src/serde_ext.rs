//! JSON has no infinities; non-finite floats travel as the strings
//! `"-inf"`, `"inf"` and `"nan"`.

pub mod ext_f64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&format_non_finite(*v))
        }
    }

    pub fn format_non_finite(v: f64) -> String {
        if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    }

    struct F64Visitor;

    impl Visitor<'_> for F64Visitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(F64Visitor)
    }
}

/// Same encoding for optional floats.
pub mod ext_f64_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => super::ext_f64::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::ext_f64")] f64);
        Option::<Wrap>::deserialize(d).map(|o| o.map(|w| w.0))
    }
}

/// Formats a float for CSV output: shortest round-trip form, `-inf`/`inf`/`nan`
/// for non-finite values.
pub fn csv_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        ext_f64::format_non_finite(v)
    }
}

#[cfg(test)]
mod tests {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct S {
        #[serde(with = "super::ext_f64")]
        v: f64,
    }

    #[test]
    fn infinities_round_trip() {
        let text = serde_json::to_string(&S { v: f64::NEG_INFINITY }).unwrap();
        assert_eq!(text, r#"{"v":"-inf"}"#);
        assert_eq!(serde_json::from_str::<S>(&text).unwrap().v, f64::NEG_INFINITY);
        assert_eq!(serde_json::from_str::<S>(r#"{"v":2}"#).unwrap().v, 2.0);
        assert!(serde_json::from_str::<S>(r#"{"v":"x"}"#).is_err());
    }
}
