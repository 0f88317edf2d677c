//! Left-invariant vector fields: closed-form coefficients, exact action on
//! a polynomial and the grid stencil on sampled data.

use std::sync::Arc;

use carnot::fields::{apply_field_exact, apply_field_grid, left_invariant_frame, Polynomial};
use carnot::{GridFunction, StratifiedAlgebra};

fn main() {
    let alg = StratifiedAlgebra::heisenberg();
    let frame = left_invariant_frame(&alg);
    let names = ["x", "y", "z"];
    for i in 0..alg.dim() {
        let parts: Vec<String> = (0..alg.dim())
            .filter(|&k| !frame.coefficient(i, k).is_zero())
            .map(|k| format!("({}) ∂_{}", frame.coefficient(i, k), names[k]))
            .collect();
        println!("X^{} = {}", i + 1, parts.join(" + "));
    }
    println!("(x1, x2, x3) = (x, y, z)");

    // f = x z, so X^1 f = z − x y / 2
    let f = Polynomial::from_terms(3, vec![(1.0, vec![1, 0, 1])]);
    let p = [0.4, -1.2, 0.3];
    println!(
        "\nX^1(xz) at {p:?}: {:.6} (closed form {:.6})",
        apply_field_exact(&frame, 0, &f, &p),
        p[2] - p[0] * p[1] / 2.0
    );

    let alg = Arc::new(alg);
    let h = 0.05;
    let g = GridFunction::from_fn(alg, vec![-1.0; 3], vec![h; 3], vec![41; 3], |x| x[0] * x[2]);
    let xg = apply_field_grid(&frame, 0, &g).unwrap();
    let idx = g.ravel(&[20, 10, 30]);
    let node = g.node_coords(idx);
    println!(
        "grid stencil at {node:?}: {:.6} (closed form {:.6})",
        xg.values()[idx],
        node[2] - node[0] * node[1] / 2.0
    );
}
