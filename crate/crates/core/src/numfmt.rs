//! Fixed-precision number rendering shared by the CSV and JSON writers.

/// Scientific notation with 17 significant digits, enough to round-trip any `f64`.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `sig17` as a JSON number that serializes verbatim.
pub(crate) fn json_number(x: f64) -> serde_json::Number {
    debug_assert!(x.is_finite());
    sig17(x).parse().expect("sig17 output is a valid JSON number")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(sig17(2.95), "2.9500000000000002e0");
        assert_eq!(sig17(0.0), "0.0000000000000000e0");
        assert_eq!(sig17(-1e-3), "-1.0000000000000000e-3");
    }

    proptest! {
        #[test]
        fn round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(sig17(x).parse::<f64>().unwrap(), x);
            prop_assert_eq!(json_number(x).as_f64().unwrap(), x);
        }
    }
}
