use std::path::PathBuf;

use livsic::herglotz::WeylEvaluator;
use livsic::io::{measure_to_json, parse_measure, parse_triple, triple_to_json};
use livsic::measure::{Atom, DensityPiece, RealMeasure};
use livsic::mobius::MobiusMap;
use livsic::Complex;
use proptest::prelude::*;

fn upper_point() -> impl Strategy<Value = Complex> {
    (-10.0..10.0f64, 0.05..10.0f64).prop_map(|(x, y)| Complex::new(x, y))
}

/// Atoms plus one power-law piece on a bounded interval.
fn measure_strategy() -> impl Strategy<Value = RealMeasure> {
    (
        prop::collection::vec((-5.0..5.0f64, 0.1..3.0f64), 0..4),
        -4.0..4.0f64,
        0.2..3.0f64,
        -0.8..0.8f64,
        0.1..2.0f64,
    )
        .prop_map(|(atoms, lo, len, nu, c)| {
            let mut atoms: Vec<Atom> = atoms.into_iter().map(|(position, mass)| Atom { position, mass }).collect();
            atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
            atoms.dedup_by(|a, b| (a.position - b.position).abs() < 1e-9);
            RealMeasure::new(atoms, vec![DensityPiece::power(lo, lo + len, c, nu, lo)]).unwrap()
        })
}

fn affine_strategy() -> impl Strategy<Value = MobiusMap> {
    (0.2..4.0f64, -5.0..5.0f64).prop_map(|(a, b)| MobiusMap::affine(a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weyl_function_is_herglotz_and_conjugate_symmetric(m in measure_strategy(), z in upper_point()) {
        let w = WeylEvaluator::from_measure(m.normalize().unwrap()).unwrap();
        let v = w.weyl_m(z).unwrap();
        prop_assert!(v.im > 0.0);
        let lower = w.eval(z.conj()).unwrap();
        prop_assert!((lower - v.conj()).norm() < 1e-10 * (1.0 + v.norm()));
    }

    #[test]
    fn normalize_is_idempotent(m in measure_strategy()) {
        let once = m.normalize().unwrap();
        let twice = once.normalize().unwrap();
        prop_assert!((once.scale() - twice.scale()).abs() < 1e-12 * once.scale());
        prop_assert!(twice.is_normalized(1e-10).unwrap());
    }

    #[test]
    fn affine_pushforward_round_trips(m in measure_strategy(), f in affine_strategy()) {
        let back = m.pushforward(&f).unwrap().pushforward(&f.inverse()).unwrap();
        let a = m.weighted_total().unwrap().value;
        let b = back.weighted_total().unwrap().value;
        prop_assert!((a - b).norm() < 1e-9 * a.norm(), "{a} vs {b}");
        for z in [Complex::new(0.3, 0.7), Complex::new(-2.0, 1.5)] {
            let x = m.cauchy_integral(z).unwrap().value;
            let y = back.cauchy_integral(z).unwrap().value;
            prop_assert!((x - y).norm() < 1e-8 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn json_round_trip(m in measure_strategy()) {
        let again = parse_measure(&measure_to_json(&m).to_string()).unwrap();
        let z = Complex::new(0.4, 0.9);
        let x = m.cauchy_integral(z).unwrap().value;
        let y = again.cauchy_integral(z).unwrap().value;
        prop_assert!((x - y).norm() < 1e-12 * (1.0 + x.norm()));
    }
}

#[test]
fn corpus_triples_round_trip_through_json() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if path.file_name().unwrap() == "malformed.json" {
            assert!(parse_triple(&text).is_err());
            continue;
        }
        let t = parse_triple(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = parse_triple(&triple_to_json(&t).to_string()).unwrap();
        assert_eq!(t.kappa(), again.kappa());
        let z = Complex::new(-0.7, 0.35);
        let (a, b) = (t.weyl().weyl_m(z).unwrap(), again.weyl().weyl_m(z).unwrap());
        assert!((a - b).norm() < 1e-10, "{}: {a} vs {b}", path.display());
        seen += 1;
    }
    assert!(seen >= 8);
}
