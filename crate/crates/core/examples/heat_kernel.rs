//! Heisenberg heat kernel: values, horizontal derivatives, the scaling law
//! and L^q norms.

use carnot::kernel::{LqOptions, QuadratureRule};
use carnot::{HeatKernel, KernelSpec, StratifiedAlgebra};

fn main() -> carnot::Result<()> {
    let k = HeatKernel::heisenberg();
    println!("P_1(0) = {:.15}", k.value(1.0, &[0.0; 3])?.value);
    for x in [
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, -1.0, 2.0],
        [0.0, 0.0, 30.0],
    ] {
        let v = k.value(1.0, &x)?;
        let d = k.field_derivative(0, 1.0, &x)?;
        println!(
            "P_1({x:?}) = {:.6e} ± {:.1e},  X^1 P_1 = {:.6e}",
            v.value, v.est_abs_err, d.value
        );
    }

    let adaptive = HeatKernel::new(
        KernelSpec::heisenberg().with_rule(QuadratureRule::Adaptive),
        &StratifiedAlgebra::heisenberg(),
    )?;
    let x = [0.3, 0.2, 5.0];
    println!(
        "\ntrapezoid {:.12e}, adaptive {:.12e}",
        k.value(1.0, &x)?.value,
        adaptive.value(1.0, &x)?.value
    );

    let (r, x) = (2.0, [0.5, -0.4, 0.3]);
    let lhs = k.value(r * r, &[r * x[0], r * x[1], r * r * x[2]])?.value;
    println!(
        "P_4(δ_2 x) = {lhs:.6e}, 2^-4 P_1(x) = {:.6e}",
        k.value(1.0, &x)?.value / 16.0
    );

    let opts = LqOptions::default();
    for q in [1.0, 2.0, f64::INFINITY] {
        let n1 = k.lq_norm(&[], 1.0, q, &opts)?;
        let n4 = k.lq_norm(&[], 4.0, q, &opts)?;
        println!("q = {q}: ‖P_1‖ = {n1:.5}, ‖P_4‖/‖P_1‖ = {:.5}", n4 / n1);
    }
    Ok(())
}
