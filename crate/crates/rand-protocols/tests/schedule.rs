use proptest::prelude::*;
use rand::SeedableRng;
use rand_protocols::{
    binom_one, draw_label, label_for, label_mass, make_schedule, RandError, ScheduleKind,
};

fn geo(g: f64) -> ScheduleKind {
    ScheduleKind::Geometric { gamma: g }
}

#[test]
fn geometric_doubling() {
    let s = make_schedule(geo(2.0), 14).unwrap();
    assert_eq!(
        (1..=4).map(|i| s.d(i)).collect::<Vec<_>>(),
        vec![14, 28, 56, 112]
    );
    assert_eq!(s.d(0), 0);
    assert_eq!(s.index_of(56), Some(3));
    assert_eq!(s.index_of(57), None);
}

#[test]
fn polynomial_second_term() {
    let s = make_schedule(ScheduleKind::Polynomial { eps: 2.0 }, 14).unwrap();
    assert_eq!(s.d(2), 196);
}

#[test]
fn slow_geometric_reaches_index_four_early() {
    let s = make_schedule(geo(1.05), 14).unwrap();
    assert_eq!(
        (1..=4).map(|i| s.d(i)).collect::<Vec<_>>(),
        vec![14, 15, 16, 17]
    );
    assert_eq!(s.target_index(17.0), 4);
}

#[test]
fn slowest_double_exp_still_grows() {
    let s = make_schedule(ScheduleKind::DoubleExp { eps: 0.54 }, 14).unwrap();
    assert_eq!(
        (1..=4).map(|i| s.d(i)).collect::<Vec<_>>(),
        vec![14, 18, 23, 28]
    );
    assert!(make_schedule(ScheduleKind::DoubleExp { eps: 0.53 }, 14).is_err());
}

#[test]
fn target_index_is_least_cover() {
    let s = make_schedule(geo(2.0), 14).unwrap();
    assert_eq!(s.target_index(12.0), 1);
    assert_eq!(s.target_index(14.0), 1);
    assert_eq!(s.target_index(14.5), 2);
    assert_eq!(s.target_index(40.0), 3);
}

#[test]
fn rejects_bad_schedules() {
    let bad = |k, d1| matches!(make_schedule(k, d1), Err(RandError::InvalidSchedule(_)));
    assert!(bad(geo(2.0), 10));
    assert!(bad(geo(1.0), 14));
    assert!(bad(geo(0.5), 14));
    assert!(bad(ScheduleKind::Polynomial { eps: 0.0 }, 14));
    assert!(bad(ScheduleKind::Exponential { b: 1.1 }, 14));
    // fixed point at 16
    assert!(bad(ScheduleKind::DoubleExp { eps: 0.5 }, 14));
}

#[test]
fn cli_syntax_round_trips() {
    for s in ["geometric:2", "poly:0.5", "exp:2", "double-exp:0.6"] {
        let k: ScheduleKind = s.parse().unwrap();
        assert_eq!(k.to_string(), s);
    }
    assert!("spiral:2".parse::<ScheduleKind>().is_err());
    assert!("geometric".parse::<ScheduleKind>().is_err());
}

#[test]
fn label_mass_and_edges() {
    let m = 2f64.powi(-7) / (1.0 - 0.5f64.sqrt());
    assert!((label_mass(14) - m).abs() < 1e-15);
    assert!((label_mass(14) - 0.02667).abs() < 1e-4);
    assert_eq!(label_for(0.0, 14), Some(14));
    assert_eq!(label_for(2f64.powi(-7) - 1e-12, 14), Some(14));
    assert_eq!(label_for(2f64.powi(-7), 14), Some(15));
    assert_eq!(label_for(m, 14), None);
    assert_eq!(label_for(0.5, 14), None);
}

#[test]
fn label_frequencies_match() {
    let draws = 10_000_000u64;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut hist = [0u64; 8];
    let mut none = 0u64;
    for _ in 0..draws {
        match draw_label(&mut rng, 14) {
            Some(k) if k < 22 => hist[(k - 14) as usize] += 1,
            Some(_) => {}
            None => none += 1,
        }
    }
    let mut chi2 = 0.0;
    for (j, &h) in hist.iter().enumerate() {
        let p = 2f64.powf(-(14.0 + j as f64) / 2.0);
        let mean = draws as f64 * p;
        let sd = (mean * (1.0 - p)).sqrt();
        assert!(
            (h as f64 - mean).abs() <= 3.0 * sd,
            "label {} seen {h}, expected {mean:.0}",
            14 + j
        );
        chi2 += (h as f64 - mean).powi(2) / mean;
    }
    let q = 1.0 - label_mass(14);
    chi2 += (none as f64 - draws as f64 * q).powi(2) / (draws as f64 * q);
    // df 8, p = 0.001
    assert!(chi2 < 26.12, "chi2 {chi2}");
}

#[test]
fn binomial_fact_holds_on_grid() {
    let mut n = 100.0f64;
    while n <= 1e6 {
        let ni = n.round() as u64;
        for r in [1.0, 1.2, 1.5] {
            for nt in [n * r, n / r] {
                if nt >= 100.0 {
                    assert!(binom_one(ni, nt) > 0.33, "n {ni} ñ {nt}");
                }
            }
        }
        for r in [1.9, 2.5, 4.0, 16.0] {
            for nt in [n * r, n / r] {
                if nt >= 100.0 {
                    assert!(binom_one(ni, nt) < 0.32, "n {ni} ñ {nt}");
                }
            }
        }
        n *= 1.37;
    }
}

#[test]
fn label_structure_near_log_n() {
    // counts per label for n = 2^12, labels starting low enough to include 11 and 12
    let n = 1usize << 12;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut good = 0;
    for _ in 0..500 {
        let mut c = [0u32; 64];
        for _ in 0..n {
            if let Some(k) = draw_label(&mut rng, 4) {
                if k < 64 {
                    c[k as usize] += 1;
                }
            }
        }
        let fits = |k: usize| {
            let t = 2f64.powf(k as f64 / 2.0);
            let x = c[k] as f64;
            x >= t / 1.5 && x <= 1.5 * t
        };
        if fits(11) || fits(12) {
            good += 1;
        }
    }
    assert!(good >= 475, "{good}/500");
}

proptest! {
    #[test]
    fn geometric_grows_by_gamma(gamma in 1.01f64..4.0, d1 in 14u64..40) {
        let s = make_schedule(geo(gamma), d1).unwrap();
        for i in 1..8 {
            prop_assert!(s.d(i + 1) as f64 >= gamma * s.d(i) as f64 - 1e-9);
            prop_assert!(s.d(i + 1) > s.d(i));
        }
    }

    #[test]
    fn every_schedule_is_strictly_increasing(eps in 0.6f64..3.0, d1 in 14u64..30) {
        for k in [ScheduleKind::Polynomial { eps }, ScheduleKind::DoubleExp { eps }] {
            let s = make_schedule(k, d1).unwrap();
            let mut i = 1;
            while s.d(i + 1) != u64::MAX {
                prop_assert!(s.d(i + 1) > s.d(i));
                i += 1;
            }
        }
    }

    #[test]
    fn labels_are_at_least_d1(u in 0.0f64..1.0, d1 in 14u64..30) {
        if let Some(k) = label_for(u, d1) {
            prop_assert!(k >= d1);
            prop_assert!(u < label_mass(d1));
        } else {
            prop_assert!(u >= label_mass(d1));
        }
    }
}
