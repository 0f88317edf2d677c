//! One-dimensional quadrature rules, deterministic summation and a small
//! derivative-free local maximizer.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// Kronrod abscissae of the 21-point rule on [-1, 1], decreasing, positive
/// half only. Odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

/// Weights of the embedded 10-point Gauss rule, for nodes `XGK[1], XGK[3], …`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Result of a single 21-point panel for an `M`-component integrand.
#[derive(Debug, Clone, Copy)]
pub struct Panel<const M: usize> {
    pub a: f64,
    pub b: f64,
    pub value: [f64; M],
    pub err: [f64; M],
    pub resabs: [f64; M],
}

/// Applies the Gauss–Kronrod (10, 21) pair on `[a, b]`.
pub fn gk21<const M: usize>(f: &mut impl FnMut(f64) -> [f64; M], a: f64, b: f64) -> Panel<M> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = [0.0; M];
    let mut gauss = [0.0; M];
    let mut resabs = [0.0; M];
    for c in 0..M {
        kron[c] = WGK[10] * fc[c];
        resabs[c] = WGK[10] * fc[c].abs();
    }
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for c in 0..M {
            let s = f1[c] + f2[c];
            kron[c] += WGK[j] * s;
            resabs[c] += WGK[j] * (f1[c].abs() + f2[c].abs());
            if j % 2 == 1 {
                gauss[c] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; M];
    let mut err = [0.0; M];
    for c in 0..M {
        value[c] = kron[c] * half;
        err[c] = ((kron[c] - gauss[c]) * half).abs();
        resabs[c] *= half.abs();
    }
    Panel {
        a,
        b,
        value,
        err,
        resabs,
    }
}

/// Controls for [`adaptive_gk`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial panels are no wider than this.
    pub max_width: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_width: f64::INFINITY,
            max_panels: 2000,
        }
    }
}

/// Globally adaptive Gauss–Kronrod integration of a vector-valued
/// integrand. Returns the integral and a per-component error estimate.
///
/// A component is converged when its error is below
/// `max(rel_tol·|I|, abs_tol, 50ε·∫|f|)`; the last term is the
/// cancellation floor for integrals much smaller than their absolute mass.
pub fn adaptive_gk<const M: usize>(
    mut f: impl FnMut(f64) -> [f64; M],
    a: f64,
    b: f64,
    opts: &AdaptiveOptions,
) -> Result<([f64; M], [f64; M])> {
    if a == b {
        return Ok(([0.0; M], [0.0; M]));
    }
    let pieces = if opts.max_width.is_finite() && opts.max_width > 0.0 {
        ((b - a).abs() / opts.max_width).ceil().max(1.0) as usize
    } else {
        1
    };
    if pieces > opts.max_panels {
        return Err(Error::QuadratureNotConverged(format!(
            "{pieces} initial panels exceed the budget of {}",
            opts.max_panels
        )));
    }
    let width = (b - a) / pieces as f64;
    let mut panels: Vec<Panel<M>> = (0..pieces)
        .map(|p| {
            let lo = a + p as f64 * width;
            let hi = if p + 1 == pieces { b } else { lo + width };
            gk21(&mut f, lo, hi)
        })
        .collect();
    loop {
        let mut total = [0.0; M];
        let mut err = [0.0; M];
        let mut resabs = [0.0; M];
        for p in &panels {
            for c in 0..M {
                total[c] += p.value[c];
                err[c] += p.err[c];
                resabs[c] += p.resabs[c];
            }
        }
        let tol: [f64; M] = std::array::from_fn(|c| {
            (opts.rel_tol * total[c].abs())
                .max(opts.abs_tol)
                .max(50.0 * f64::EPSILON * resabs[c])
        });
        if (0..M).all(|c| err[c] <= tol[c]) {
            return Ok((total, err));
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::QuadratureNotConverged(format!(
                "panel budget {} exhausted on [{a}, {b}] (error {:e}, tolerance {:e})",
                opts.max_panels,
                err.iter().cloned().fold(0.0, f64::max),
                tol.iter().cloned().fold(0.0, f64::max)
            )));
        }
        // bisect the panel contributing most to the worst-converged component
        let worst_c = (0..M)
            .max_by(|&x, &y| {
                let rx = err[x] / tol[x].max(f64::MIN_POSITIVE);
                let ry = err[y] / tol[y].max(f64::MIN_POSITIVE);
                rx.total_cmp(&ry)
            })
            .unwrap_or(0);
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err[worst_c].total_cmp(&y.1.err[worst_c]))
            .expect("at least one panel");
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a.min(p.b) || mid >= p.a.max(p.b) {
            return Err(Error::QuadratureNotConverged(format!(
                "panel [{}, {}] cannot be subdivided further",
                p.a, p.b
            )));
        }
        panels.push(gk21(&mut f, p.a, mid));
        panels.push(gk21(&mut f, mid, p.b));
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. Nodes are returned in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Pairwise (cascade) summation: deterministic, with `O(ε log n)` error.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Compass search for a local maximum of `f` starting at `x0`.
///
/// Steps are halved whenever no axis move improves the value, down to
/// `min_step` (relative to the initial step per axis). Returns the best point
/// and its value.
pub fn compass_maximize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    min_step_ratio: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut best = f(&x);
    let mut scale = 1.0;
    let mut evals = 1;
    let mut trial = x.clone();
    while scale > min_step_ratio && evals < max_evals {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                trial.copy_from_slice(&x);
                trial[k] += dir * scale * step[k];
                let v = f(&trial);
                evals += 1;
                if v > best {
                    best = v;
                    x.copy_from_slice(&trial);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            scale *= 0.5;
        }
    }
    (x, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn monomial_integral(k: i32) -> f64 {
        // ∫_{-1}^{1} (x + 0.3)^k dx
        ((1.3f64).powi(k + 1) - (-0.7f64).powi(k + 1)) / (k + 1) as f64
    }

    #[test]
    fn kronrod_and_gauss_exactness() {
        for k in 0..=31 {
            let p = gk21(&mut |x: f64| [(x + 0.3).powi(k)], -1.0, 1.0);
            let exact = monomial_integral(k);
            assert_relative_eq!(p.value[0], exact, max_relative = 1e-13);
            if k <= 19 {
                // the embedded Gauss rule is exact too, so the error estimate vanishes
                assert!(
                    p.err[0] <= 1e-13 * exact.abs().max(1.0),
                    "k={k} err={}",
                    p.err[0]
                );
            }
        }
        let p = gk21(&mut |x: f64| [(x + 0.3).powi(20)], -1.0, 1.0);
        assert!(p.err[0] > 1e-10);
        let wsum: f64 = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        assert_relative_eq!(wsum, 2.0, max_relative = 1e-15);
        let gsum: f64 = 2.0 * WG.iter().sum::<f64>();
        assert_relative_eq!(gsum, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn adaptive_handles_oscillation_and_peaks() {
        let opts = AdaptiveOptions {
            rel_tol: 1e-12,
            max_width: 0.5,
            ..Default::default()
        };
        let (v, e) = adaptive_gk(
            |x: f64| [(20.0 * x).cos(), 1.0 / (1e-3 + x * x)],
            0.0,
            3.0,
            &opts,
        )
        .unwrap();
        assert_relative_eq!(v[0], (60.0f64).sin() / 20.0, max_relative = 1e-11);
        let exact = (3.0 / 1e-3f64.sqrt()).atan() / 1e-3f64.sqrt();
        assert_relative_eq!(v[1], exact, max_relative = 1e-11);
        assert!(e[0] >= 0.0 && e[1] >= 0.0);
    }

    #[test]
    fn adaptive_reports_budget_exhaustion() {
        let opts = AdaptiveOptions {
            rel_tol: 1e-14,
            max_panels: 4,
            ..Default::default()
        };
        let err = adaptive_gk(|x: f64| [(x.abs() + 1e-12).ln()], -1.0, 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged(_)));
    }

    #[test]
    fn gauss_legendre_rules() {
        for n in [1, 2, 5, 16, 40] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for k in 0..(2 * n as i32) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * (x + 0.3).powi(k)).sum();
                assert_relative_eq!(
                    q,
                    monomial_integral(k),
                    max_relative = 1e-11,
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn compass_search_finds_quadratic_peak() {
        let (x, v) = compass_maximize(
            |p| -(p[0] - 0.3).powi(2) - 2.0 * (p[1] + 0.1).powi(2),
            &[0.0, 0.0],
            &[0.25, 0.25],
            1e-6,
            10_000,
        );
        assert!((x[0] - 0.3).abs() < 1e-6 && (x[1] + 0.1).abs() < 1e-6);
        assert!(v.abs() < 1e-11);
    }
}
