//! Moments of a datum, the divergence-form fields of the zeroth- and
//! first-order decompositions, their weak identities and norm bounds.

use std::sync::Arc;

use carnot::decomp::{
    builtin_pairs, fields_f_first, fields_f_order1, moments, norm_bounds, weak_residual_order0,
    weak_residual_order1,
};
use carnot::grid::{builtin_datum, DatumParams};
use carnot::StratifiedAlgebra;

fn main() -> carnot::Result<()> {
    let alg = Arc::new(StratifiedAlgebra::heisenberg());
    let f0 = builtin_datum(alg.clone(), "shifted_bump", &DatumParams::new())?;
    let m = moments(&f0);
    println!("A0 = {:.6}, A = {:?}", m.a0, m.a);

    let first = fields_f_first(&f0)?;
    println!("F_1, F_2, F_3 on {:?} nodes", first[0].shape());
    let o1 = fields_f_order1(&f0)?;
    println!(
        "F_11 on {:?} nodes, F_1 present: {}",
        o1.fij(0, 0).shape(),
        o1.fi(0).is_some()
    );

    println!("\nweak identities (relative residual):");
    for (name, phi) in builtin_pairs() {
        let f = builtin_datum(alg.clone(), name, &DatumParams::new())?;
        let r0 = weak_residual_order0(&f, &phi)?;
        let r1 = weak_residual_order1(&f, &phi)?;
        println!(
            "  {name:<15} order 0 {:.2e}, order 1 {:.2e}",
            r0.relative(),
            r1.relative()
        );
    }

    println!("\nnorm bounds at p = 1:");
    for b in norm_bounds(&f0, 1.0)? {
        println!(
            "  {:<6} {:.4e} ≤ {:.4e}  {}",
            b.field,
            b.measured,
            b.bound,
            if b.holds() { "ok" } else { "VIOLATED" }
        );
    }
    Ok(())
}
