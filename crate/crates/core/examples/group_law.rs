//! Group law, inverse, dilations and the homogeneous norm on the
//! Heisenberg group and the free step-3 group of rank 2.

use carnot::{GroupPoint, StratifiedAlgebra};

fn main() {
    let h = StratifiedAlgebra::heisenberg();
    println!("{h}");
    let x = GroupPoint::new(vec![1.0, 0.0, 0.0]);
    let y = GroupPoint::new(vec![0.0, 1.0, 0.0]);
    let xy = h.product(&x, &y);
    let yx = h.product(&y, &x);
    println!("x·y = {:?}", xy.coords());
    println!("y·x = {:?}", yx.coords());
    println!("x^-1 = {:?}", h.inverse(&x).coords());

    let d = h.dilate(2.0, &xy).unwrap();
    println!(
        "δ_2(x·y) = {:?}, ‖·‖ = {:.4} (2 × {:.4})",
        d.coords(),
        h.hom_norm(&d),
        h.hom_norm(&xy)
    );

    let f = StratifiedAlgebra::free_rank2_step3();
    println!(
        "\nfree rank-2 step-3: dim {}, layers {:?}, Q = {}",
        f.dim(),
        f.layer_dims(),
        f.homogeneous_dimension()
    );
    let a = GroupPoint::new(vec![1.0, 0.5, 0.0, 0.0, 0.0]);
    let b = GroupPoint::new(vec![-0.3, 2.0, 0.1, 0.0, 0.0]);
    let c = GroupPoint::new(vec![0.7, -1.0, 0.0, 0.2, -0.4]);
    let left = f.product(&f.product(&a, &b), &c);
    let right = f.product(&a, &f.product(&b, &c));
    println!("(a·b)·c = {:?}", left.coords());
    println!("a·(b·c) = {:?}", right.coords());
}
