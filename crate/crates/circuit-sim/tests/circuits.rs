use circuit_sim::{eval_circuit, eval_gates, Circuit, CircuitError, Gate, GateFn, Src};
use proptest::prelude::*;
use rand::SeedableRng;

fn and2() -> Circuit {
    Circuit::new(
        2,
        vec![Gate::new(GateFn::And, vec![Src::Input(0), Src::Input(1)])],
        0,
    )
    .unwrap()
}

#[test]
fn and_gate() {
    assert!(eval_circuit(&and2(), &[true, true]).unwrap());
    assert!(!eval_circuit(&and2(), &[true, false]).unwrap());
    assert!(matches!(
        eval_circuit(&and2(), &[true]),
        Err(CircuitError::InvalidCircuit(_))
    ));
}

#[test]
fn parses_majority() {
    let text = "# majority\ninputs 3\ngate 0 AND x0 x1\ngate 1 AND x1 x2\ngate 2 AND x0 x2\ngate 3 OR g0 g1\ngate 4 OR g3 g2\noutput 4\n";
    let c = Circuit::parse(text).unwrap();
    for v in 0..8u32 {
        let bits: Vec<bool> = (0..3).map(|k| v >> k & 1 == 1).collect();
        assert_eq!(eval_circuit(&c, &bits).unwrap(), v.count_ones() >= 2);
    }
}

#[test]
fn table_rows_put_first_source_high() {
    // 0010: true only for (x0, x1) = (1, 0)
    let c = Circuit::parse("inputs 2\ngate 0 TABLE 0010 x0 x1\noutput 0").unwrap();
    assert!(eval_circuit(&c, &[true, false]).unwrap());
    assert!(!eval_circuit(&c, &[false, true]).unwrap());
}

#[test]
fn parse_errors_carry_line_numbers() {
    let cases = [
        ("inputs 2\ngate 0 AND x0 x1\ngate 1 AND g1 x0\noutput 1", 3),
        ("inputs 2\ngate 0 AND x0 x5\noutput 0", 2),
        ("inputs 2\ngate 0 NAND x0 x1\noutput 0", 2),
        ("inputs 2\ngate 0 AND x0 x1 x1\noutput 0", 2),
        ("inputs 2\ngate 1 AND x0 x1\noutput 1", 2),
        ("inputs 2\ngate 0 TABLE 011 x0 x1\noutput 0", 2),
        ("inputs 2\ngate 0 NOT x0 x1\noutput 0", 2),
        ("gate 0 AND x0 x1\ninputs 2", 1),
        ("inputs 2\ngate 0 AND x0 y1\noutput 0", 2),
        ("inputs 2\ngate 0 AND x0 x1\noutput 3", 3),
        ("inputs 2\n\ngate 0 AND x0 x1\noutput 0\noutput 0", 5),
        ("inputs 2\ngate 0 AND x0 x1", 2),
        ("inputs two", 1),
        ("wires 2", 1),
    ];
    for (text, line) in cases {
        match Circuit::parse(text) {
            Err(CircuitError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn wider_fan_in_on_request() {
    let text = "inputs 3\ngate 0 AND x0 x1 x2\noutput 0";
    assert!(Circuit::parse(text).is_err());
    assert!(Circuit::parse_with_fan_in(text, 3).is_ok());
}

#[test]
fn threshold_counts() {
    for l in 1..=8u32 {
        for t in 1..=l {
            let c = Circuit::threshold(l, t);
            assert!(c.gates().iter().all(|g| g.srcs.len() <= 2));
            for v in 0..1u32 << l {
                let bits: Vec<bool> = (0..l).map(|k| v >> k & 1 == 1).collect();
                assert_eq!(
                    eval_circuit(&c, &bits).unwrap(),
                    v.count_ones() >= t,
                    "l {l} t {t} v {v:b}"
                );
            }
        }
    }
}

/// Independent evaluator: recursion from the output over the truth tables.
fn brute(c: &Circuit, x: &[bool], g: u32) -> bool {
    let gate = &c.gates()[g as usize];
    let bits: Vec<bool> = gate
        .srcs
        .iter()
        .map(|s| match *s {
            Src::Input(i) => x[i as usize],
            Src::Gate(q) => brute(c, x, q),
        })
        .collect();
    let table: Vec<bool> = (0..1usize << bits.len())
        .map(|row| {
            let r: Vec<bool> = (0..bits.len())
                .map(|k| row >> (bits.len() - 1 - k) & 1 == 1)
                .collect();
            match &gate.func {
                GateFn::And => r.iter().all(|&b| b),
                GateFn::Or => r.iter().any(|&b| b),
                GateFn::Not => !r[0],
                GateFn::Xor => r.iter().filter(|&&b| b).count() % 2 == 1,
                GateFn::Table(t) => t[row],
            }
        })
        .collect();
    let row = bits.iter().fold(0, |a, &b| a * 2 + b as usize);
    table[row]
}

#[test]
fn random_circuits_match_brute_force() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let l = 10;
        let c = Circuit::random(&mut rng, l, 20, 2);
        for v in 0..1u32 << l {
            let x: Vec<bool> = (0..l).map(|k| v >> k & 1 == 1).collect();
            assert_eq!(eval_circuit(&c, &x).unwrap(), brute(&c, &x, c.output()));
        }
    }
}

proptest! {
    #[test]
    fn text_round_trips(seed in any::<u64>(), l in 1u32..6, g in 1usize..12, f in 1usize..4) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c = Circuit::random(&mut rng, l, g, f);
        prop_assert_eq!(Circuit::parse_with_fan_in(&c.to_string(), f).unwrap(), c);
    }

    #[test]
    fn gate_values_feed_forward(seed in any::<u64>(), v in any::<u8>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c = Circuit::random(&mut rng, 4, 10, 2);
        let x: Vec<bool> = (0..4).map(|k| v >> k & 1 == 1).collect();
        let vals = eval_gates(&c, &x).unwrap();
        prop_assert_eq!(vals.len(), 10);
        prop_assert_eq!(vals[c.output() as usize], brute(&c, &x, c.output()));
    }
}
