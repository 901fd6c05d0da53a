//! Number formatting shared by every CSV writer.

/// Scientific notation with 17 significant digits, enough to round-trip any
/// `f64`.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.0, -1.5, 0.1, 1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt(1.0), "1.0000000000000000e0");
    }
}
