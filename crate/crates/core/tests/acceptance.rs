//! Acceptance criteria 1 through 10. Runs as a plain binary so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use livsic::charfn::{cayley, CharEvaluator, VonNeumannParameter};
use livsic::grid::standard_grid;
use livsic::herglotz::{ExtensionType, WeylEvaluator};
use livsic::homogeneous::{
    cayley_relation_check, extension_type, mn_inversion_check, verify_inversion_duality, HomogeneousModel,
};
use livsic::io::parse_triple;
use livsic::measure::{PointClass, RealMeasure};
use livsic::mobius::{Decomposition, Extended, MobiusMap};
use livsic::oracle::{build_dissipative, check_rank_one_inverse, check_resolvent_identity, default_anchor, DiscreteModel};
use livsic::transform::{verify_invariance, Branch, ModelTriple};
use livsic::{Complex, Result};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

struct Outcome {
    pass: bool,
    detail: String,
}

fn kappa(re: f64, im: f64) -> VonNeumannParameter {
    VonNeumannParameter::new(Complex::new(re, im)).unwrap()
}

fn corpus(name: &str) -> ModelTriple {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_triple(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn timed(limit: Option<Duration>, body: impl FnOnce() -> Result<Outcome>) -> Outcome {
    let start = Instant::now();
    let result = body();
    let elapsed = start.elapsed();
    let mut out = result.unwrap_or_else(|e| Outcome {
        pass: false,
        detail: format!("error: {e}"),
    });
    match limit {
        Some(l) => {
            let in_time = elapsed <= l;
            out.detail = format!("{}; {:.2?} (limit {:?})", out.detail, elapsed, l);
            out.pass &= in_time;
        }
        None => out.detail = format!("{}; {:.2?}", out.detail, elapsed),
    }
    out
}

fn normalization() -> Result<Outcome> {
    let names = [
        "atom.json",
        "lebesgue.json",
        "tail.json",
        "nu05.json",
        "num05.json",
        "nu025.json",
        "num025.json",
        "tabulated.json",
    ];
    let mut worst: f64 = 0.0;
    for name in names {
        let t = corpus(name);
        worst = worst.max((t.weyl().weyl_m(Complex::i())? - Complex::i()).norm());
    }
    Ok(Outcome {
        pass: worst < 1e-8,
        detail: format!("{} measures, max |M(i) - i| = {worst:.2e} (tol 1e-8)", names.len()),
    })
}

fn closed_form_vs_quadrature() -> Result<Outcome> {
    let grid = standard_grid();
    let mut worst: f64 = 0.0;
    for nu in [-0.5, -0.25, 0.25, 0.5] {
        let h = HomogeneousModel::positive(nu)?;
        for &z in &grid {
            let (q, _) = h.ratio_of_integrals_m(z)?;
            worst = worst.max((h.closed_form_m(z) - q).norm());
        }
    }
    Ok(Outcome {
        pass: worst < 1e-6,
        detail: format!("max |closed - quadrature| = {worst:.2e} over 4 x 20 points (tol 1e-6)"),
    })
}

fn affine_invariance() -> Result<Outcome> {
    let grid = standard_grid();
    let cases = [
        (ModelTriple::homogeneous(HomogeneousModel::positive(0.5)?, kappa(0.0, 0.0))?, MobiusMap::affine(2.0, 1.0)?),
        (corpus("lebesgue.json"), MobiusMap::translation(3.0)),
        (ModelTriple::homogeneous(HomogeneousModel::positive(-0.25)?, kappa(0.3, 0.4))?, MobiusMap::affine(0.5, -2.0)?),
        (corpus("tail.json"), MobiusMap::affine(3.0, -1.0)?),
        (corpus("tabulated.json"), MobiusMap::affine(1.5, 0.25)?),
    ];
    let mut worst: f64 = 0.0;
    for (t, f) in &cases {
        let r = verify_invariance(t, f, &grid)?;
        assert_eq!(r.branch, Branch::I);
        worst = worst.max(r.residual);
    }
    Ok(Outcome {
        pass: worst < 1e-6,
        detail: format!("{} cases, max residual = {worst:.2e} (tol 1e-6)", cases.len()),
    })
}

fn inversion_branch_one() -> Result<Outcome> {
    let grid = standard_grid();
    let (mut residual, mut drift, mut pullback): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut regular = true;
    for nu in [0.25, 0.5] {
        for k in [kappa(0.0, 0.0), kappa(0.3, 0.4)] {
            let t = ModelTriple::homogeneous(HomogeneousModel::positive(nu)?, k)?;
            let r = verify_invariance(&t, &MobiusMap::inversion(), &grid)?;
            regular &= r.branch == Branch::I;
            residual = residual.max(r.residual);
            drift = drift.max(r.kappa_drift.unwrap_or(f64::INFINITY));
            pullback = pullback.max(r.pullback_crosscheck.unwrap_or(f64::INFINITY));
        }
    }
    Ok(Outcome {
        pass: regular && residual < 1e-6 && drift == 0.0 && pullback < 1e-8,
        detail: format!(
            "residual = {residual:.2e} (tol 1e-6), kappa drift = {drift:e} (exact), pullback = {pullback:.2e} (tol 1e-8)"
        ),
    })
}

fn bounded_branch() -> Result<Outcome> {
    let t = corpus("tail.json");
    let r = verify_invariance(&t, &MobiusMap::inversion(), &standard_grid())?;
    Ok(Outcome {
        pass: r.branch == Branch::Ii && r.residual < 1e-4,
        detail: format!(
            "omega = {:?}, N = {:?}, residual = {:.2e} (tol 1e-4)",
            r.omega, r.discretization, r.residual
        ),
    })
}

fn oracle_linear_algebra() -> Result<Outcome> {
    let z1 = Complex::new(0.3, 0.7);
    let z2 = Complex::new(-1.2, 0.4);
    let (mut resolvent, mut rank_one, mut anchor): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for seed in 0..10 {
        let d = DiscreteModel::random(50, seed)?;
        resolvent = resolvent.max(check_resolvent_identity(&d, z1, z2)?);
        rank_one = rank_one.max(check_rank_one_inverse(&d)?);
        let a = build_dissipative(&d, default_anchor(&d))?;
        let b = build_dissipative(&d, Complex::new(0.5, 2.0))?;
        let diff = (a.matrix() - b.matrix()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        anchor = anchor.max(diff);
    }
    Ok(Outcome {
        pass: resolvent < 1e-8 && rank_one < 1e-10 && anchor < 1e-8,
        detail: format!(
            "resolvent = {resolvent:.2e} (tol 1e-8), rank-one rel = {rank_one:.2e} (tol 1e-10), anchor = {anchor:.2e} (tol 1e-8)"
        ),
    })
}

fn cayley_relation() -> Result<Outcome> {
    let grid = standard_grid();
    let mut corrected: f64 = 0.0;
    let mut literal: f64 = 0.0;
    for nu in [0.25, 0.5] {
        corrected = corrected.max(cayley_relation_check(nu, &grid)?);
        let plus = HomogeneousModel::positive(nu)?;
        let minus = HomogeneousModel::positive(-nu)?;
        let phase = Complex::from_polar(1.0, PI * nu);
        for &z in &grid {
            let sp = cayley(plus.closed_form_m(z))?;
            let sm = cayley(minus.closed_form_m(z))?;
            literal = literal.max((sp - phase * sm).norm());
        }
    }
    Ok(Outcome {
        pass: corrected < 1e-12,
        detail: format!(
            "max |s_-nu - e^(i pi nu) s_nu| = {corrected:.2e} (tol 1e-12); \
             as literally stated, max |s_nu - e^(i pi nu) s_-nu| = {literal:.2e} (does not hold)"
        ),
    })
}

fn inversion_duality_chain() -> Result<Outcome> {
    let grid = standard_grid();
    let mut mn: f64 = 0.0;
    let mut chain = true;
    for nu in [0.0, 0.25, 0.5, 0.75] {
        mn = mn.max(mn_inversion_check(nu, &grid)?);
        chain &= verify_inversion_duality(nu, &grid)?.pass;
    }
    let expected = [(-0.5, false, true), (0.0, true, true), (0.5, true, false)];
    let mut table = Vec::new();
    let mut exact = true;
    for (nu, friedrichs, krein) in expected {
        let r = extension_type(&HomogeneousModel::positive(nu)?)?;
        let want = ExtensionType { friedrichs, krein };
        exact &= r.sampled == want && r.analytic == want;
        table.push(format!("nu={nu}: F={} K={}", r.sampled.friedrichs, r.sampled.krein));
    }
    Ok(Outcome {
        pass: mn < 1e-10 && exact && chain,
        detail: format!("mn residual = {mn:.2e} (tol 1e-10); table [{}]; chain checks {}", table.join(", "), chain),
    })
}

fn classification() -> Result<Outcome> {
    let mut total = 0;
    let mut agree = 0;
    for nu in [-0.5, -0.25, 0.25, 0.5] {
        let m = HomogeneousModel::positive(nu)?.normalized_measure();
        for s in [0.0, 0.5, 1.0, 10.0, -0.1, -1.0, -10.0] {
            // Density positive on (0, inf); at 0 the second moment of
            // lambda^nu diverges since nu - 2 < -1. No atoms anywhere.
            let expected = if s >= 0.0 {
                PointClass::CoreSpectrum
            } else {
                PointClass::QuasiRegular { has_atom: false }
            };
            total += 1;
            if m.classify_point(s)? == expected {
                agree += 1;
            }
        }
    }
    Ok(Outcome {
        pass: agree == total,
        detail: format!("{agree}/{total} points agree with the analytic classification"),
    })
}

fn runner(seed: u8) -> TestRunner {
    let config = Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

fn upper_point() -> impl Strategy<Value = Complex> {
    (-20.0..20.0f64, -3.0..1.5f64).prop_map(|(x, e)| Complex::new(x, 10f64.powf(e)))
}

fn disc() -> impl Strategy<Value = Complex> {
    (0.0..0.999f64, 0.0..(2.0 * PI)).prop_map(|(r, t)| Complex::from_polar(r, t))
}

fn map_strategy() -> impl Strategy<Value = MobiusMap> {
    (-4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64)
        .prop_filter_map("positive determinant", |(a, b, c, d)| {
            (a * d - b * c > 0.05).then(|| MobiusMap::new(a, b, c, d).unwrap())
        })
}

/// A random Weyl function: a discrete measure, a homogeneous closed form,
/// or a normalized power-law density evaluated by quadrature.
fn weyl_strategy() -> impl Strategy<Value = WeylEvaluator> {
    prop_oneof![
        (2usize..20, any::<u64>()).prop_map(|(n, seed)| {
            WeylEvaluator::from_measure(DiscreteModel::random(n, seed).unwrap().to_measure()).unwrap()
        }),
        (-0.95..0.95f64, any::<bool>()).prop_map(|(nu, pos)| {
            let h = if pos { HomogeneousModel::positive(nu) } else { HomogeneousModel::negative(nu) };
            h.unwrap().evaluator()
        }),
        (-3.0..3.0f64, 0.1..4.0f64, -0.9..0.9f64).prop_map(|(lo, len, nu)| {
            let m = RealMeasure::power(lo, lo + len, 1.0, nu, lo).unwrap().normalize().unwrap();
            WeylEvaluator::from_measure(m).unwrap()
        }),
    ]
}

fn property_suites() -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut record = |name: &str, r: std::result::Result<(), String>| {
        if let Err(e) = r {
            failures.push(format!("{name}: {e}"));
        }
    };

    record(
        "herglotz",
        runner(1)
            .run(&(weyl_strategy(), upper_point()), |(w, z)| {
                let m = w.weyl_m(z).unwrap();
                prop_assert!(m.im > 0.0, "Im M({z}) = {}", m.im);
                let mc = w.eval(z.conj()).unwrap();
                prop_assert!((mc - m.conj()).norm() <= 1e-9 * (1.0 + m.norm()));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    record(
        "contractive",
        runner(2)
            .run(&(weyl_strategy(), upper_point(), disc()), |(w, z, k)| {
                let ce = CharEvaluator::new(w, VonNeumannParameter::new(k).unwrap());
                let s = ce.livsic_s(z).unwrap();
                let big = ce.char_s(z).unwrap();
                prop_assert!(s.norm() < 1.0 && big.norm() < 1.0, "|s| = {}, |S| = {}", s.norm(), big.norm());
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    record(
        "unimodular",
        runner(3)
            .run(&(disc(), upper_point()), |(k, z)| {
                let h = HomogeneousModel::positive(0.5).unwrap().evaluator();
                let ce = CharEvaluator::new(h, VonNeumannParameter::new(k).unwrap());
                prop_assert!((ce.normalization_factor().norm() - 1.0).abs() < 1e-14);
                let ratio = ce.normalized_s_hat(z).unwrap() / ce.char_s(z).unwrap();
                prop_assert!((ratio - ce.normalization_factor()).norm() < 1e-12);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    record(
        "group laws",
        runner(4)
            .run(&(map_strategy(), map_strategy(), map_strategy(), upper_point()), |(f, g, h, z)| {
                let close = |a: Extended, b: Extended| match (a, b) {
                    (Extended::Finite(a), Extended::Finite(b)) => (a - b).norm() <= 1e-8 * (1.0 + a.norm()),
                    (Extended::Infinity, Extended::Infinity) => true,
                    _ => false,
                };
                let left = f.compose(&g).compose(&h);
                let right = f.compose(&g.compose(&h));
                prop_assert!(close(left.apply(z), right.apply(z)));
                prop_assert!(f.compose(&f.inverse()).is_identity() || close(f.compose(&f.inverse()).apply(z), Extended::Finite(z)));
                prop_assert!(close(f.compose(&MobiusMap::identity()).apply(z), f.apply(z)));
                if let Extended::Finite(w) = f.apply(z) {
                    prop_assert!(w.im > 0.0);
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    record(
        "decompose",
        runner(5)
            .run(&(map_strategy(), upper_point()), |(f, z)| {
                let dec = f.decompose().unwrap();
                prop_assert_eq!(matches!(dec, Decomposition::Affine { .. }), f.is_affine());
                let g = dec.recompose();
                for (x, y) in f.coefficients().iter().zip(g.coefficients()) {
                    prop_assert!((x - y).abs() < 1e-10, "{:?} vs {:?}", f.coefficients(), g.coefficients());
                }
                let stepped = dec.steps().iter().fold(Extended::Finite(z), |acc, s| s.apply_ext(acc));
                if let (Extended::Finite(a), Extended::Finite(b)) = (stepped, f.apply(z)) {
                    prop_assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()));
                }
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    Ok(Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "5 suites x 1000 cases, 0 failures".to_string()
        } else {
            failures.join(" | ")
        },
    })
}

fn main() {
    let secs = Duration::from_secs;
    let criteria: Vec<(&str, Option<Duration>, fn() -> Result<Outcome>)> = vec![
        ("normalization identity", Some(secs(5)), normalization),
        ("closed form vs quadrature", Some(secs(30)), closed_form_vs_quadrature),
        ("affine invariance", None, affine_invariance),
        ("inversion invariance, branch (i)", None, inversion_branch_one),
        ("bounded branch (ii)", Some(secs(60)), bounded_branch),
        ("oracle linear algebra", None, oracle_linear_algebra),
        ("Cayley relation", None, cayley_relation),
        ("inversion duality chain", None, inversion_duality_chain),
        ("classification", None, classification),
        ("property suites", None, property_suites),
    ];
    let mut failed = 0;
    for (k, (name, limit, check)) in criteria.into_iter().enumerate() {
        let out = timed(limit, check);
        let tag = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!("{tag} criterion {}: {name}: {}", k + 1, out.detail);
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
