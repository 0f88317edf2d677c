//! Solving the heat equation: f0 ∗ P_t on a self-similar output box, and
//! a direct grid–grid group convolution.

use std::sync::Arc;

use carnot::grid::{
    builtin_datum, convolve_with_kernel, group_convolve_grids, DatumParams, SelfSimilarBox,
};
use carnot::{GroupPoint, HeatKernel, StratifiedAlgebra};

fn main() -> carnot::Result<()> {
    let alg = Arc::new(StratifiedAlgebra::heisenberg());
    let f0 = builtin_datum(alg.clone(), "shifted_bump", &DatumParams::new())?;
    let kernel = HeatKernel::heisenberg();
    println!("∫f0 = {:.6}, {} nodes", f0.integrate(), f0.len());

    let bx = SelfSimilarBox::with_extents(&alg, vec![5.0; 3], vec![17; 3])?;
    for t in [1.0, 4.0, 16.0] {
        let u = convolve_with_kernel(&f0, &kernel, t, &bx.points(t))?;
        let mass = u.iter().sum::<f64>() * bx.weight(t);
        let peak = u.iter().fold(0.0f64, |m, v| m.max(*v));
        println!(
            "t = {t:>4}: mass {mass:.5}, max {peak:.5e}, t² · max {:.5}",
            t * t * peak
        );
    }

    let mut params = DatumParams::new();
    params.insert("h".into(), 0.1);
    let g = builtin_datum(alg.clone(), "gaussian_bump", &params)?;
    let points: Vec<GroupPoint> = [[0.0, 0.0, 0.0], [0.7, -0.3, 0.0], [0.7, -0.3, 0.4]]
        .iter()
        .map(|p| GroupPoint::new(p.to_vec()))
        .collect();
    let c = group_convolve_grids(&f0, &g, &points)?;
    for (p, v) in points.iter().zip(c) {
        println!("(f0 ∗ g)({:?}) = {v:.6}", p.coords());
    }
    Ok(())
}
