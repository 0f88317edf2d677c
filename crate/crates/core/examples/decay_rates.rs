//! Long-time decay of f(t) − expansion for the zeroth- and first-order
//! expansions, with a deliberately wrong A_0 as a control.

use std::sync::Arc;

use carnot::asymptotics::{
    run_decay_experiments, DecayOptions, ExpansionCoefficients, ExpansionOrder,
};
use carnot::grid::{builtin_datum, DatumParams};
use carnot::{KernelSpec, StratifiedAlgebra};

fn main() -> carnot::Result<()> {
    let alg = Arc::new(StratifiedAlgebra::heisenberg());
    let f0 = builtin_datum(alg, "shifted_bump", &DatumParams::new())?;
    let expansions = [
        ExpansionCoefficients::from_datum(&f0, ExpansionOrder::Zero),
        ExpansionCoefficients::from_datum(&f0, ExpansionOrder::One),
        ExpansionCoefficients::from_datum(&f0, ExpansionOrder::Zero).scale_a0(0.5),
    ];
    let times = [8.0, 16.0, 32.0, 64.0, 128.0];
    let reports = run_decay_experiments(
        &f0,
        &KernelSpec::heisenberg(),
        &expansions,
        1.0,
        f64::INFINITY,
        &times,
        &DecayOptions::default(),
    )?;
    for (label, r) in ["order 0", "order 1", "A0 halved"].iter().zip(&reports) {
        println!(
            "{label}: slope {:.3} ± {:.3} (predicted {}) → {}",
            r.fitted_slope, r.slope_stderr, r.predicted_slope, r.verdict.message
        );
        for (t, n) in r.times.iter().zip(&r.residual_norms) {
            println!("    t = {t:>5}: {n:.4e}");
        }
    }
    Ok(())
}
