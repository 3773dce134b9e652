#![allow(clippy::needless_range_loop)]

use num_rational::Ratio;
use proptest::prelude::*;
use rxguard_core::domain::{InteractionClass, Verdict};
use rxguard_core::evaluation::compute_metrics;
use rxguard_core::{ExactMetrics, Metrics};

fn verdict() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::Suitable), Just(Verdict::Risky), Just(Verdict::NA)]
}

/// Confusion-matrix oracle: rows are truth (Suitable, Risky), columns are
/// predictions (Suitable, Risky, N/A).
fn oracle(pairs: &[(Verdict, Verdict)]) -> Option<(f64, f64, f64, f64)> {
    let idx = |v: Verdict| match v {
        Verdict::Suitable => 0,
        Verdict::Risky => 1,
        Verdict::NA => 2,
    };
    let mut m = [[0u32; 3]; 2];
    for (p, e) in pairs {
        if *e != Verdict::NA {
            m[idx(*e)][idx(*p)] += 1;
        }
    }
    let n: u32 = m.iter().flatten().sum();
    if n == 0 {
        return None;
    }
    let n = n as f64;
    let acc = (m[0][0] + m[1][1]) as f64 / n;
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for l in 0..2 {
        let tp = m[l][l] as f64;
        let col = (m[0][l] + m[1][l]) as f64;
        let row = m[l].iter().sum::<u32>() as f64;
        let pl = if col == 0.0 { 0.0 } else { tp / col };
        let rl = if row == 0.0 { 0.0 } else { tp / row };
        let fl = if pl + rl == 0.0 { 0.0 } else { 2.0 * pl * rl / (pl + rl) };
        p += row / n * pl;
        r += row / n * rl;
        f += row / n * fl;
    }
    Some((acc, p, r, f))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn matches_confusion_matrix(pairs in prop::collection::vec((verdict(), verdict()), 0..60)) {
        let got = compute_metrics::<f64>(InteractionClass::Dose, &pairs);
        match oracle(&pairs) {
            None => prop_assert!(got.is_err()),
            Some((a, p, r, f)) => {
                let m: Metrics = got.unwrap();
                prop_assert!((m.accuracy - a).abs() < 1e-12);
                prop_assert!((m.precision - p).abs() < 1e-12);
                prop_assert!((m.recall - r).abs() < 1e-12);
                prop_assert!((m.f1 - f).abs() < 1e-12);
                let exact: ExactMetrics = compute_metrics(InteractionClass::Dose, &pairs).unwrap();
                prop_assert_eq!(exact.recall, exact.accuracy);
                prop_assert!(exact.precision >= Ratio::from_integer(0) && exact.precision <= Ratio::from_integer(1));
            }
        }
    }
}

// A class where every prediction is right reports 1 everywhere; the
// reverse reports 0 everywhere.
#[test]
fn extremes() {
    let right = [(Verdict::Risky, Verdict::Risky), (Verdict::Suitable, Verdict::Suitable)];
    let m: Metrics = compute_metrics(InteractionClass::Age, &right).unwrap();
    assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    let wrong = [(Verdict::Suitable, Verdict::Risky), (Verdict::NA, Verdict::Suitable)];
    let m: Metrics = compute_metrics(InteractionClass::Age, &wrong).unwrap();
    assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (0.0, 0.0, 0.0, 0.0));
}

// 17 of 20 right: accuracy and weighted recall both 0.85.
#[test]
fn weighted_recall_equals_accuracy_at_085() {
    let mut pairs = vec![(Verdict::Suitable, Verdict::Suitable); 12];
    pairs.extend([(Verdict::Risky, Verdict::Risky); 5]);
    pairs.extend([(Verdict::Suitable, Verdict::Risky); 2]);
    pairs.push((Verdict::NA, Verdict::Suitable));
    let m: ExactMetrics = compute_metrics(InteractionClass::Age, &pairs).unwrap();
    assert_eq!(m.accuracy, Ratio::new(17, 20));
    assert_eq!(m.recall, m.accuracy);
}
