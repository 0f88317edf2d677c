//! Invariants of the long-time expansions.

use std::sync::Arc;

use carnot::asymptotics::{
    fit_decay_slope, run_decay_experiments, DecayExperiment, DecayOptions, ExpansionCoefficients,
    ExpansionOrder, SamplingOptions,
};
use carnot::grid::{builtin_datum, parse_datum_spec};
use carnot::{GridFunction, KernelSpec, StratifiedAlgebra};

fn datum(spec: &str) -> GridFunction {
    let (name, params) = parse_datum_spec(spec).unwrap();
    builtin_datum(Arc::new(StratifiedAlgebra::heisenberg()), &name, &params).unwrap()
}

fn coarse_sup() -> SamplingOptions {
    SamplingOptions {
        radius: 3.0,
        nodes: Some(vec![13; 3]),
        du: 0.5,
        refine: false,
    }
}

#[test]
fn first_order_expansion_beats_zeroth_order() {
    let f0 = datum("shifted_bump");
    let exp =
        DecayExperiment::new(&f0, &KernelSpec::heisenberg(), f64::INFINITY, coarse_sup()).unwrap();
    let e0 = ExpansionCoefficients::from_datum(&f0, ExpansionOrder::Zero);
    let e1 = ExpansionCoefficients::from_datum(&f0, ExpansionOrder::One);
    let norms = exp.residual_norms(&[32.0], &[e0, e1]).unwrap();
    assert!(norms[1][0] < 0.5 * norms[0][0], "{norms:?}");
}

#[test]
fn vertical_term_does_not_change_the_rate() {
    // X^3 has weight 2, so A_3 X^3 P_t decays one power of t faster than
    // the zeroth-order residual and leaves its slope unchanged.
    let f0 = datum("shifted_bump(h=0.125)");
    let times = [16.0, 32.0, 64.0, 128.0, 256.0];
    let e0 = ExpansionCoefficients::from_datum(&f0, ExpansionOrder::Zero);
    let e3 = e0.clone().with_term(2, 0.5);
    let exp =
        DecayExperiment::new(&f0, &KernelSpec::heisenberg(), f64::INFINITY, coarse_sup()).unwrap();
    let norms = exp.residual_norms(&times, &[e0, e3]).unwrap();
    let (s0, err0) = fit_decay_slope(&times, &norms[0]).unwrap();
    let (s3, err3) = fit_decay_slope(&times, &norms[1]).unwrap();
    assert!((s0 - s3).abs() < 0.1 + 2.0 * (err0 + err3), "{s0} vs {s3}");
}

#[test]
fn horizontal_term_does_change_the_rate() {
    let f0 = datum("shifted_bump(h=0.125)");
    let times = [16.0, 32.0, 64.0, 128.0, 256.0];
    let e1 = ExpansionCoefficients::from_datum(&f0, ExpansionOrder::One);
    let wrong = e1.clone().with_term(0, 0.5);
    let exp =
        DecayExperiment::new(&f0, &KernelSpec::heisenberg(), f64::INFINITY, coarse_sup()).unwrap();
    let norms = exp.residual_norms(&times, &[e1, wrong]).unwrap();
    let (s1, _) = fit_decay_slope(&times, &norms[0]).unwrap();
    let (sw, _) = fit_decay_slope(&times, &norms[1]).unwrap();
    assert!(s1 < -2.8 && sw > -2.7, "{s1} {sw}");
}

#[test]
fn finite_q_slopes_respect_the_upper_bound() {
    let f0 = datum("asym_poly_bump(h=0.2)");
    let opts = DecayOptions {
        sampling: Some(SamplingOptions {
            radius: 4.0,
            nodes: Some(vec![17, 17, 33]),
            du: 0.5,
            refine: false,
        }),
        ..DecayOptions::default()
    };
    let expansions = [
        ExpansionCoefficients::from_datum(&f0, ExpansionOrder::Zero),
        ExpansionCoefficients::from_datum(&f0, ExpansionOrder::One),
    ];
    let times = [8.0, 16.0, 32.0, 64.0, 128.0];
    let reports = run_decay_experiments(
        &f0,
        &KernelSpec::heisenberg(),
        &expansions,
        1.0,
        2.0,
        &times,
        &opts,
    )
    .unwrap();
    // q = 2: −Q(1 − 1/2)/2 − k/2
    assert_eq!(reports[0].predicted_slope, -1.5);
    assert_eq!(reports[1].predicted_slope, -2.0);
    for r in &reports {
        assert!(r.verdict.pass, "{}", r.verdict.message);
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    }
}

#[test]
fn centred_datum_needs_no_first_order_terms() {
    let f0 = datum("gaussian_bump(h=0.125)");
    let e1 = ExpansionCoefficients::from_datum(&f0, ExpansionOrder::One);
    assert!(e1.terms.iter().all(|(_, a)| a.abs() < 1e-12));
}
