mod common;

use std::path::Path;

use common::t_reference::{lattice, paired_cases, paired_vector};
use recdp_core::stats::{paired_t_test, student_two_tail, Tail};

fn data_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data"))
}

#[test]
fn two_tail_matches_high_precision_lattice() {
    let points = lattice(data_dir());
    assert!(points.len() > 800);
    let mut worst = (0.0f64, 0, 0.0);
    for pt in &points {
        for t in [pt.t, -pt.t] {
            let err = (student_two_tail(t, pt.df) - pt.p).abs();
            if err > worst.0 {
                worst = (err, pt.df, t);
            }
        }
    }
    assert!(
        worst.0 <= 1e-12,
        "max abs error {:e} at df={} t={}",
        worst.0,
        worst.1,
        worst.2
    );
}

#[test]
fn paired_test_matches_high_precision_reference() {
    let cases = paired_cases(data_dir());
    assert_eq!(cases.len(), 1000);
    for case in &cases {
        let (x, y) = paired_vector(case.seed);
        assert_eq!(x.len(), case.n, "generator drifted from the reference script");
        let p = paired_t_test(&x, &y, Tail::Two).unwrap();
        assert!((p - case.p).abs() <= 1e-9, "seed {}: {p} vs {}", case.seed, case.p);
        assert_eq!(p, paired_t_test(&y, &x, Tail::Two).unwrap());
        assert_eq!(paired_t_test(&x, &y, Tail::One).unwrap(), 0.5 * p);
    }
}
