mod common;

use common::{acf_brute, pearson_two_pass};
use proptest::prelude::*;
use tcf_core::{pearson, sample_acf, DegeneratePolicy, Error};

const Z: DegeneratePolicy = DegeneratePolicy::ZeroFill;

fn series(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, 2..max_len)
}

fn pair(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..max_len).prop_flat_map(|k| (prop::collection::vec(-1e3..1e3f64, k), prop::collection::vec(-1e3..1e3f64, k)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bounded((a, b) in pair(200)) {
        prop_assert!(pearson(&a, &b, Z).unwrap().abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn symmetric_bit_for_bit((a, b) in pair(200)) {
        prop_assert_eq!(pearson(&a, &b, Z).unwrap().to_bits(), pearson(&b, &a, Z).unwrap().to_bits());
    }

    #[test]
    fn self_correlation_is_one(a in series(200)) {
        prop_assume!(a.iter().any(|x| *x != a[0]));
        prop_assert!((pearson(&a, &a, Z).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn positive_affine_invariance((a, b) in pair(200), alpha in 1e-3..1e3f64, beta in -1e3..1e3f64) {
        let scaled: Vec<f64> = a.iter().map(|x| alpha * x + beta).collect();
        prop_assume!(scaled.iter().any(|x| *x != scaled[0]));
        let d = pearson(&scaled, &b, Z).unwrap() - pearson(&a, &b, Z).unwrap();
        prop_assert!(d.abs() <= 1e-9, "difference {d}");
    }

    #[test]
    fn sign_flip((a, b) in pair(200), alpha in -1e3..-1e-3f64, beta in -1e3..1e3f64) {
        let flipped: Vec<f64> = a.iter().map(|x| alpha * x + beta).collect();
        prop_assume!(flipped.iter().any(|x| *x != flipped[0]));
        let s = pearson(&flipped, &b, Z).unwrap() + pearson(&a, &b, Z).unwrap();
        prop_assert!(s.abs() <= 1e-9, "sum {s}");
    }

    #[test]
    fn constant_input_gives_zero(b in series(100), c in -1e3..1e3f64) {
        let a = vec![c; b.len()];
        prop_assert_eq!(pearson(&a, &b, Z).unwrap(), 0.0);
        prop_assert_eq!(pearson(&b, &a, Z).unwrap(), 0.0);
    }

    #[test]
    fn matches_two_pass_reference((a, b) in pair(500)) {
        let d = pearson(&a, &b, Z).unwrap() - pearson_two_pass(&a, &b);
        prop_assert!(d.abs() <= 1e-12, "difference {d}");
    }

    #[test]
    fn acf_bounded_and_matches_reference(a in series(120), lags in prop::collection::vec(1usize..150, 0..8)) {
        let acf = sample_acf(&a, &lags, Z).unwrap();
        prop_assert_eq!(acf.coefficients.len(), lags.len());
        prop_assert_eq!(acf.truncated_lags, lags.iter().filter(|l| **l >= a.len()).count());
        for (r, lag) in acf.coefficients.iter().zip(&lags) {
            prop_assert!(r.abs() <= 1.0 + 1e-12);
            prop_assert!((r - acf_brute(&a, *lag)).abs() <= 1e-12);
        }
    }
}

#[test]
fn documented_examples() {
    assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], Z).unwrap(), 1.0);
    assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0], Z).unwrap(), -1.0);
    assert_eq!(pearson(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0], Z).unwrap(), 0.0);
    let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0], Z).unwrap();
    assert!((r - 0.8).abs() < 1e-15);
    assert_eq!(sample_acf(&[7.0; 4], &[1, 2], Z).unwrap().coefficients, vec![0.0, 0.0]);
    assert!(sample_acf(&[1.0, 2.0, 4.0], &[], Z).unwrap().coefficients.is_empty());
}

#[test]
fn invalid_inputs() {
    assert!(matches!(pearson(&[1.0, 2.0], &[1.0], Z), Err(Error::LengthMismatch { .. })));
    assert!(matches!(pearson(&[1.0], &[1.0], Z), Err(Error::TooShort { .. })));
    assert!(matches!(pearson(&[1.0, f64::NAN], &[1.0, 2.0], Z), Err(Error::NonFinite { .. })));
    assert!(matches!(sample_acf(&[1.0], &[1], Z), Err(Error::TooShort { .. })));
    assert!(sample_acf(&[1.0, f64::INFINITY, 2.0], &[1], Z).is_err());
}
