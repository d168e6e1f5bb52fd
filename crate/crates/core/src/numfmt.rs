/// Formats with 17 significant digits, enough for an exact `f64` round trip.
pub(crate) fn exact(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trips_bit_exact(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back = parse(&exact(v)).unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
