//! Grid convolution against independent oracles.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use carnot::grid::{
    convolve_with_kernel, group_convolve_grids, group_convolve_kernel, lattice_box_bounds,
    SelfSimilarBox,
};
use carnot::{GridFunction, GroupPoint, HeatKernel, KernelSpec, StratifiedAlgebra};

fn random_grid(
    alg: &Arc<StratifiedAlgebra>,
    rng: &mut ChaCha8Rng,
    h: f64,
    shape: [usize; 3],
) -> GridFunction {
    let values = (0..shape.iter().product::<usize>())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    GridFunction::new(
        alg.clone(),
        vec![0.5 * h; 3],
        vec![h; 3],
        shape.to_vec(),
        values,
    )
    .unwrap()
}

#[test]
fn euclidean_matches_discrete_convolution() {
    // On the lattice (m + ½)h the sum f1 ∗ f2 at (m + 1)h only reads f2 at
    // its nodes, so it equals the index-space convolution times h³.
    let alg = Arc::new(StratifiedAlgebra::euclidean(3));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 0.2;
    for _ in 0..5 {
        let (s1, s2) = ([3, 4, 2], [2, 3, 4]);
        let f1 = random_grid(&alg, &mut rng, h, s1);
        let f2 = random_grid(&alg, &mut rng, h, s2);
        let mut points = Vec::new();
        let mut oracle = Vec::new();
        for m in 0..4 {
            for n in 0..6 {
                for p in 0..5 {
                    points.push(GroupPoint::new(vec![
                        (m + 1) as f64 * h,
                        (n + 1) as f64 * h,
                        (p + 1) as f64 * h,
                    ]));
                    let mut acc = 0.0;
                    for a in 0..s1[0] {
                        for b in 0..s1[1] {
                            for c in 0..s1[2] {
                                let (i, j, k) = (
                                    m as i64 - a as i64,
                                    n as i64 - b as i64,
                                    p as i64 - c as i64,
                                );
                                if (0..s2[0] as i64).contains(&i)
                                    && (0..s2[1] as i64).contains(&j)
                                    && (0..s2[2] as i64).contains(&k)
                                {
                                    acc += f1.values()[f1.ravel(&[a, b, c])]
                                        * f2.values()
                                            [f2.ravel(&[i as usize, j as usize, k as usize])];
                                }
                            }
                        }
                    }
                    oracle.push(acc * h * h * h);
                }
            }
        }
        let got = group_convolve_grids(&f1, &f2, &points).unwrap();
        for (g, o) in got.iter().zip(&oracle) {
            assert!((g - o).abs() < 1e-13, "{g} vs {o}");
        }
    }
}

#[test]
fn unit_cell_at_identity_reproduces_interpolant() {
    let alg = Arc::new(StratifiedAlgebra::heisenberg());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 0.1;
    let delta = GridFunction::new(
        alg.clone(),
        vec![0.0; 3],
        vec![h; 3],
        vec![1; 3],
        vec![1.0 / (h * h * h)],
    )
    .unwrap();
    let f = random_grid(&alg, &mut rng, h, [5, 5, 5]);
    let points: Vec<GroupPoint> = (0..40)
        .map(|_| GroupPoint::new((0..3).map(|_| rng.gen_range(0.0..0.6)).collect()))
        .collect();
    let got = group_convolve_grids(&delta, &f, &points).unwrap();
    for (p, g) in points.iter().zip(&got) {
        assert!((g - f.interpolate(p.coords())).abs() < 1e-12);
    }
}

#[test]
fn convolution_is_bilinear() {
    let alg = Arc::new(StratifiedAlgebra::heisenberg());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (f, g, k) = (
        random_grid(&alg, &mut rng, 0.1, [4, 4, 4]),
        random_grid(&alg, &mut rng, 0.1, [4, 4, 4]),
        random_grid(&alg, &mut rng, 0.1, [3, 5, 4]),
    );
    let sum = f
        .with_values(
            f.values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| 2.0 * a - b)
                .collect(),
        )
        .unwrap();
    let points: Vec<GroupPoint> = (0..30)
        .map(|_| GroupPoint::new((0..3).map(|_| rng.gen_range(0.0..0.8)).collect()))
        .collect();
    let (cf, cg, cs) = (
        group_convolve_grids(&f, &k, &points).unwrap(),
        group_convolve_grids(&g, &k, &points).unwrap(),
        group_convolve_grids(&sum, &k, &points).unwrap(),
    );
    for i in 0..points.len() {
        assert!((cs[i] - 2.0 * cf[i] + cg[i]).abs() < 1e-12);
    }
}

#[test]
fn kernel_convolution_conserves_mass() {
    let alg = Arc::new(StratifiedAlgebra::heisenberg());
    let f0 = carnot::grid::builtin_datum(alg.clone(), "shifted_bump", &Default::default()).unwrap();
    let kernel = HeatKernel::heisenberg();
    let bx = SelfSimilarBox::with_extents(&alg, vec![5.0; 3], vec![17; 3]).unwrap();
    for t in [1.0, 4.0] {
        let values = convolve_with_kernel(&f0, &kernel, t, &bx.points(t)).unwrap();
        let mass: f64 = values.iter().sum::<f64>() * bx.weight(t);
        assert!((mass - f0.integrate()).abs() < 2e-3, "t = {t}: {mass}");
    }
}

#[test]
fn kernel_path_converges_under_refinement() {
    // f0 = P_s sampled on a grid, so f0 ∗ P_t = P_{s+t} exactly.
    for (alg, spec, s, h) in [
        (
            StratifiedAlgebra::euclidean(3),
            KernelSpec::euclidean(),
            0.05,
            0.4,
        ),
        (
            StratifiedAlgebra::heisenberg(),
            KernelSpec::heisenberg(),
            0.5,
            0.4,
        ),
    ] {
        let alg = Arc::new(alg);
        let kernel = HeatKernel::new(spec, &alg).unwrap();
        let t = 0.25;
        let out = [
            GroupPoint::new(vec![0.0, 0.0, 0.0]),
            GroupPoint::new(vec![0.4, -0.3, 0.2]),
            GroupPoint::new(vec![-0.7, 0.1, -0.5]),
        ];
        let err = |h: f64| {
            let b = lattice_box_bounds(alg.clone(), &[-6.0, -6.0, -4.0], &[6.0, 6.0, 4.0], &[h; 3]);
            let f0 = GridFunction::from_fn(
                alg.clone(),
                b.origin().to_vec(),
                vec![h; 3],
                b.shape().to_vec(),
                |x| kernel.value(s, x).unwrap().value,
            );
            let got = group_convolve_kernel(&f0, &spec, t, &out).unwrap();
            out.iter()
                .zip(got)
                .map(|(g, v)| (v - kernel.value(s + t, g.coords()).unwrap().value).abs())
                .fold(0.0f64, f64::max)
        };
        let (coarse, fine) = (err(h), err(h / 2.0));
        assert!(
            coarse > fine * 3.0,
            "{:?}: {coarse:e} → {fine:e}",
            spec.kind
        );
        assert!(
            fine < 1e-2 * kernel.value(s + t, &[0.0; 3]).unwrap().value,
            "{fine:e}"
        );
    }
}
