//! Seeded invariant suites over an algebra, its group law and its frame.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::StratifiedAlgebra;
use crate::fields::FrameCoefficients;

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub pass: bool,
    pub skipped: bool,
    pub checks: usize,
    pub max_defect: f64,
    pub tolerance: f64,
    /// First failing case.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupcheckReport {
    pub algebra: String,
    pub dim: usize,
    pub step: usize,
    pub layer_dims: Vec<usize>,
    pub seed: u64,
    pub samples: usize,
    pub pass: bool,
    pub suites: Vec<SuiteResult>,
}

struct Suite {
    name: &'static str,
    tolerance: f64,
    checks: usize,
    max_defect: f64,
    failure: Option<String>,
}

impl Suite {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            checks: 0,
            max_defect: 0.0,
            failure: None,
        }
    }

    /// Records `|a − b|` against `tolerance · (1 + scale)`.
    fn compare(&mut self, a: &[f64], b: &[f64], what: impl FnOnce() -> String) {
        let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
        let defect = a
            .iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
            / (1.0 + scale);
        self.checks += 1;
        if defect > self.max_defect || defect.is_nan() {
            self.max_defect = defect;
        }
        if !(defect <= self.tolerance) && self.failure.is_none() {
            self.failure = Some(format!("{} (defect {defect:.3e})", what()));
        }
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            name: self.name,
            pass: self.failure.is_none(),
            skipped: false,
            checks: self.checks,
            max_defect: self.max_defect,
            tolerance: self.tolerance,
            failure: self.failure,
        }
    }
}

fn skipped(name: &'static str, tolerance: f64) -> SuiteResult {
    SuiteResult {
        name,
        pass: false,
        skipped: true,
        checks: 0,
        max_defect: 0.0,
        tolerance,
        failure: Some("structure constants are invalid".into()),
    }
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

const SUITES: [&str; 7] = [
    "associativity",
    "inverse",
    "dilation_automorphism",
    "norm_homogeneity",
    "frame_is_left_translation",
    "frame_homogeneity",
    "frame_brackets",
];

/// Runs every suite with `samples` seeded random cases each. The group-law
/// suites are skipped when the structure constants fail validation.
pub fn run_groupcheck(
    alg: &StratifiedAlgebra,
    label: &str,
    seed: u64,
    samples: usize,
    tolerance: f64,
) -> GroupcheckReport {
    let mut suites = Vec::new();
    let structure = match alg.validate() {
        Ok(()) => SuiteResult {
            name: "structure_constants",
            pass: true,
            skipped: false,
            checks: 1,
            max_defect: 0.0,
            tolerance,
            failure: None,
        },
        Err(e) => SuiteResult {
            name: "structure_constants",
            pass: false,
            skipped: false,
            checks: 1,
            max_defect: match e {
                crate::Error::Jacobi { defect, .. } => defect,
                _ => f64::INFINITY,
            },
            tolerance,
            failure: Some(e.to_string()),
        },
    };
    let valid = structure.pass;
    suites.push(structure);
    if valid {
        suites.extend(group_suites(alg, seed, samples, tolerance));
    } else {
        suites.extend(SUITES.iter().map(|name| skipped(name, tolerance)));
    }
    GroupcheckReport {
        algebra: label.to_string(),
        dim: alg.dim(),
        step: alg.step(),
        layer_dims: alg.layer_dims().to_vec(),
        seed,
        samples,
        pass: suites.iter().all(|s| s.pass),
        suites,
    }
}

fn group_suites(alg: &StratifiedAlgebra, seed: u64, samples: usize, tol: f64) -> Vec<SuiteResult> {
    let n = alg.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = FrameCoefficients::new(alg);
    let mut assoc = Suite::new(SUITES[0], tol);
    let mut inverse = Suite::new(SUITES[1], tol);
    let mut dil = Suite::new(SUITES[2], tol);
    let mut norm = Suite::new(SUITES[3], tol);
    // Richardson-extrapolated central differences of a cubic polynomial are
    // exact up to rounding
    let mut left = Suite::new(SUITES[4], tol.max(1e-9));
    let mut homog = Suite::new(SUITES[5], tol);
    let mut brackets = Suite::new(SUITES[6], tol);
    let zero = vec![0.0; n];
    let mut t1 = vec![0.0; n];
    let mut t2 = vec![0.0; n];
    for _ in 0..samples {
        let x = random_point(&mut rng, n);
        let y = random_point(&mut rng, n);
        let z = random_point(&mut rng, n);
        let r: f64 = rng.gen_range(0.25..4.0);

        alg.product_into(&x, &y, &mut t1);
        let mut lhs = vec![0.0; n];
        alg.product_into(&t1, &z, &mut lhs);
        alg.product_into(&y, &z, &mut t2);
        let mut rhs = vec![0.0; n];
        alg.product_into(&x, &t2, &mut rhs);
        assoc.compare(&lhs, &rhs, || format!("x={x:?} y={y:?} z={z:?}"));

        let inv: Vec<f64> = x.iter().map(|v| -v).collect();
        alg.product_into(&x, &inv, &mut t1);
        inverse.compare(&t1, &zero, || format!("x={x:?}"));

        alg.product_into(&x, &y, &mut t1);
        alg.dilate_in_place(r, &mut t1);
        let (mut dx, mut dy) = (x.clone(), y.clone());
        alg.dilate_in_place(r, &mut dx);
        alg.dilate_in_place(r, &mut dy);
        alg.product_into(&dx, &dy, &mut t2);
        dil.compare(&t1, &t2, || format!("r={r} x={x:?} y={y:?}"));

        let nx = alg.hom_norm_slice(&x);
        norm.compare(&[alg.hom_norm_slice(&dx)], &[r * nx], || {
            format!("r={r} x={x:?}")
        });

        for i in 0..n {
            let mut a = vec![0.0; n];
            frame.coefficients_at(i, &x, &mut a);
            let d = |s: f64, t1: &mut [f64], t2: &mut [f64]| -> Vec<f64> {
                let mut e = vec![0.0; n];
                e[i] = s;
                alg.product_into(&x, &e, t1);
                e[i] = -s;
                alg.product_into(&x, &e, t2);
                t1.iter()
                    .zip(t2.iter())
                    .map(|(p, m)| (p - m) / (2.0 * s))
                    .collect()
            };
            let s = 1e-2;
            let d1 = d(s, &mut t1, &mut t2);
            let d2 = d(2.0 * s, &mut t1, &mut t2);
            let fd: Vec<f64> = d1
                .iter()
                .zip(&d2)
                .map(|(a, b)| (4.0 * a - b) / 3.0)
                .collect();
            left.compare(&a, &fd, || format!("field X^{} at x={x:?}", i + 1));

            let mut ar = vec![0.0; n];
            frame.coefficients_at(i, &dx, &mut ar);
            let scaled: Vec<f64> = (0..n)
                .map(|k| a[k] * r.powi(alg.weights()[k] as i32 - alg.weights()[i] as i32))
                .collect();
            homog.compare(&ar, &scaled, || format!("field X^{} r={r} x={x:?}", i + 1));
        }

        for i in 0..n {
            for j in (i + 1)..n {
                let lhs: Vec<f64> = (0..n)
                    .map(|k| commutator_coefficient(&frame, i, j, k, &x))
                    .collect();
                let mut rhs = vec![0.0; n];
                let mut a = vec![0.0; n];
                for l in 0..n {
                    let c = alg.c(i, j, l);
                    if c != 0.0 {
                        frame.coefficients_at(l, &x, &mut a);
                        rhs.iter_mut().zip(&a).for_each(|(r, v)| *r += c * v);
                    }
                }
                brackets.compare(&lhs, &rhs, || {
                    format!("[X^{}, X^{}] at x={x:?}", i + 1, j + 1)
                });
            }
        }
    }
    vec![
        assoc.finish(),
        inverse.finish(),
        dil.finish(),
        norm.finish(),
        left.finish(),
        homog.finish(),
        brackets.finish(),
    ]
}

/// Coefficient of `∂_k` in `[X^i, X^j] = Σ_m (a_im ∂_m a_jk − a_jm ∂_m a_ik) ∂_k`.
fn commutator_coefficient(
    frame: &FrameCoefficients,
    i: usize,
    j: usize,
    k: usize,
    x: &[f64],
) -> f64 {
    let n = x.len();
    let mut out = 0.0;
    for m in 0..n {
        let aim = frame.coefficient(i, m).eval(x);
        let ajm = frame.coefficient(j, m).eval(x);
        if aim != 0.0 {
            out += aim * frame.coefficient(j, k).derivative(m).eval(x);
        }
        if ajm != 0.0 {
            out -= ajm * frame.coefficient(i, k).derivative(m).eval(x);
        }
    }
    out
}
