//! Reading a stratified algebra from its text description and running the
//! group on it. Pass a path to use another file.

use carnot::{GroupPoint, StratifiedAlgebra};

fn main() -> carnot::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/engel.txt").to_string()
    });
    let text = std::fs::read_to_string(&path)?;
    let alg = StratifiedAlgebra::parse(&text)?;
    println!(
        "{path}: dim {}, step {}, weights {:?}, Q = {}",
        alg.dim(),
        alg.step(),
        alg.weights(),
        alg.homogeneous_dimension()
    );

    let x = GroupPoint::new((0..alg.dim()).map(|k| 0.3 * (k as f64 + 1.0)).collect());
    let y = GroupPoint::new((0..alg.dim()).map(|k| 1.0 - 0.2 * k as f64).collect());
    println!("x·y = {:?}", alg.product(&x, &y).coords());
    println!("\n{}", alg.to_text());

    let broken = "dim = 3\nstep = 2\nlayer_dims = 2, 1\nbracket = 1, 3, 3, 1.0\n";
    match StratifiedAlgebra::parse(broken) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
