//! Heat kernels: the Heisenberg kernel through its one-dimensional Fourier
//! integral, and the Euclidean Gaussian as a reference.
//!
//! On the Heisenberg group with `Δ = (X^1)² + (X^2)²`,
//!
//! ```text
//! P_t(x, y, z) = 1/(2πt)² ∫_ℝ 2τ/sinh(2τ) · exp(−τ(x²+y²)/(2t·tanh 2τ)) · cos(2zτ/t) dτ.
//! ```
//!
//! With `a = (x²+y²)/t` and `b = z/t` the integral depends on `(a, b)` only,
//! which makes the scaling law `P_{r²t}(δ_r x) = r^{−4} P_t(x)` exact.
//! Two rules evaluate it:
//!
//! * [`QuadratureRule::Trapezoid`] (default): the integrand is analytic in the
//!   strip `|Im τ| < π/4` where `Re(c) ≥ 0`, so the trapezoid rule on the
//!   whole line converges geometrically in the node density. Node tables for
//!   a ladder of step sizes are built once and shared.
//! * [`QuadratureRule::Adaptive`]: Gauss–Kronrod panels on `[0, τ_max]`,
//!   panel width capped at one period of the cosine.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{GroupPoint, StratifiedAlgebra};
use crate::error::{Error, Result};
use crate::fields::{left_invariant_frame, FrameCoefficients};
use crate::grid::SelfSimilarBox;
use crate::quadrature::{adaptive_gk, compass_maximize, AdaptiveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    HeisenbergGaveau,
    EuclideanGaussian,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::HeisenbergGaveau => "heisenberg_gaveau",
            KernelKind::EuclideanGaussian => "euclidean_gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Exponentially convergent trapezoid rule on ℝ; falls back to
    /// `Adaptive` for very large `|z|/t`.
    Trapezoid,
    /// Adaptive Gauss–Kronrod on `[0, τ_max]`.
    Adaptive,
}

/// Which kernel to evaluate and how.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Relative tolerance of the adaptive rule.
    pub quad_rel_tol: f64,
    /// Largest initial panel of the adaptive rule.
    pub tau_panel: f64,
    /// The `τ` integral is truncated where the non-oscillatory envelope
    /// drops below this value.
    pub tail_cut: f64,
    pub rule: QuadratureRule,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::heisenberg()
    }
}

impl KernelSpec {
    pub fn heisenberg() -> Self {
        Self {
            kind: KernelKind::HeisenbergGaveau,
            quad_rel_tol: 1e-9,
            tau_panel: 1.0,
            tail_cut: 1e-17,
            rule: QuadratureRule::Trapezoid,
        }
    }

    pub fn euclidean() -> Self {
        Self {
            kind: KernelKind::EuclideanGaussian,
            ..Self::heisenberg()
        }
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quad_rel_tol > 0.0) {
            return Err(Error::param(format!(
                "quad_rel_tol must be positive, got {}",
                self.quad_rel_tol
            )));
        }
        if !(self.tail_cut > 0.0) {
            return Err(Error::param(format!(
                "tail_cut must be positive, got {}",
                self.tail_cut
            )));
        }
        if !(self.tau_panel > 0.0) {
            return Err(Error::param(format!(
                "tau_panel must be positive, got {}",
                self.tau_panel
            )));
        }
        Ok(())
    }
}

/// A kernel value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    pub est_abs_err: f64,
}

/// `W(τ) = 2τ/sinh(2τ)` and `c(τ) = τ/(2 tanh 2τ)` in forms that are exact
/// at `τ = 0` and do not overflow for large `τ`.
#[inline]
pub fn gaveau_weights(tau: f64) -> (f64, f64) {
    let s = tau.abs();
    if s < 1e-5 {
        let u = 4.0 * s * s;
        return (1.0 - u / 6.0, 0.25 * (1.0 + u / 3.0));
    }
    let e = (-4.0 * s).exp();
    let one_minus = -(-4.0 * s).exp_m1();
    let w = 4.0 * s * (-2.0 * s).exp() / one_minus;
    let c = s * (1.0 + e) / (2.0 * one_minus);
    (w, c)
}

// Trapezoid node tables: step h_l = 2π/Ω_l, Ω_l = 44·2^{l/4}.
const OMEGA0: f64 = 44.0;
const LEVELS: usize = 36;
const TAU_TABLE: f64 = 24.0;
const TAU_FAR: f64 = 9.0;

struct Level {
    h: f64,
    omega: f64,
    w: Vec<f64>,
    c: Vec<f64>,
    j_far: usize,
}

static TABLES: [OnceLock<Level>; LEVELS] = [const { OnceLock::new() }; LEVELS];

fn level(l: usize) -> &'static Level {
    TABLES[l].get_or_init(|| {
        let omega = OMEGA0 * 2f64.powf(l as f64 / 4.0);
        let h = 2.0 * PI / omega;
        let n = (TAU_TABLE / h).ceil() as usize + 1;
        let (w, c): (Vec<f64>, Vec<f64>) = (0..n).map(|j| gaveau_weights(j as f64 * h)).unzip();
        let j_far = (TAU_FAR / h).ceil() as usize;
        Level {
            h,
            omega,
            w,
            c,
            j_far,
        }
    })
}

/// The three τ-integrals behind `P`, `∂_{x,y}P` and `∂_z P`:
/// `∫W e cos`, `∫W e c cos`, `∫W e τ sin` with `e = exp(−a c(τ))`.
#[derive(Debug, Clone, Copy)]
struct TauIntegrals {
    value: [f64; 3],
    err: [f64; 3],
}

fn trapezoid_integrals(a: f64, b: f64, tail_cut: f64) -> Option<TauIntegrals> {
    let b_abs = b.abs();
    let needed = OMEGA0 + 6.0 * b_abs + a / PI;
    let l = (4.0 * (needed / OMEGA0).log2()).ceil().max(0.0) as usize;
    if l >= LEVELS {
        return None;
    }
    let lv = level(l);
    let h = lv.h;
    let e0 = (-0.25 * a).exp();
    let mut s = [e0, 0.25 * e0, 0.0];
    let mut sabs = [e0, 0.25 * e0, 0.0];
    let (sin_t, cos_t) = (2.0 * b * h).sin_cos();
    let (mut sj, mut cj) = (sin_t, cos_t);
    let rho = (-0.5 * a * h).exp();
    let mut e_far = 0.0;
    let mut last = 0.0;
    let n = lv.w.len();
    let mut j = 1;
    while j < n {
        let tau = j as f64 * h;
        let e = if j < lv.j_far {
            (-a * lv.c[j]).exp()
        } else if j == lv.j_far {
            e_far = (-a * lv.c[j]).exp();
            e_far
        } else {
            e_far *= rho;
            e_far
        };
        let m = lv.w[j] * e;
        last = m * (1.0 + tau);
        if last < tail_cut {
            break;
        }
        if j % 64 == 0 {
            let (sn, cs) = (2.0 * b * tau).sin_cos();
            sj = sn;
            cj = cs;
        }
        let c = lv.c[j];
        s[0] += 2.0 * m * cj;
        s[1] += 2.0 * m * c * cj;
        s[2] += 2.0 * m * tau * sj;
        sabs[0] += 2.0 * m;
        sabs[1] += 2.0 * m * c;
        sabs[2] += 2.0 * m * tau;
        let next_c = cj * cos_t - sj * sin_t;
        sj = sj * cos_t + cj * sin_t;
        cj = next_c;
        j += 1;
    }
    let disc = 8.0 * (-(PI / 4.0) * (lv.omega - 2.0 * b_abs)).exp();
    let tail = 2.0 * last / (1.0 - (-2.0 * h).exp()) * h;
    let value = [s[0] * h, s[1] * h, s[2] * h];
    let err = std::array::from_fn(|k| {
        disc * (1.0 + b_abs) + tail * TAU_TABLE + 16.0 * f64::EPSILON * sabs[k] * h
    });
    Some(TauIntegrals { value, err })
}

fn adaptive_integrals(a: f64, b: f64, spec: &KernelSpec) -> Result<TauIntegrals> {
    let envelope =
        |tau: f64| 4.0 * tau * (-2.0 * tau).exp() * (-0.5 * a * tau).exp() * (1.0 + tau).powi(2);
    let mut hi = 1.0;
    while envelope(hi) >= spec.tail_cut {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::QuadratureNotConverged(
                "tail cut not reached for τ ≤ 1e4".into(),
            ));
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if envelope(mid) >= spec.tail_cut {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_max = hi;
    let mut max_width = spec.tau_panel;
    if b != 0.0 {
        max_width = max_width.min(PI / b.abs());
    }
    let opts = AdaptiveOptions {
        rel_tol: spec.quad_rel_tol,
        abs_tol: 0.0,
        max_width,
        max_panels: 20_000,
    };
    let (v, e) = adaptive_gk(
        |tau| {
            let (w, c) = gaveau_weights(tau);
            let m = w * (-a * c).exp();
            let (sn, cs) = (2.0 * b * tau).sin_cos();
            [m * cs, m * c * cs, m * tau * sn]
        },
        0.0,
        tau_max,
        &opts,
    )?;
    let tail = 2.0 * spec.tail_cut;
    Ok(TauIntegrals {
        value: [2.0 * v[0], 2.0 * v[1], 2.0 * v[2]],
        err: [2.0 * e[0] + tail, 2.0 * e[1] + tail, 2.0 * e[2] + tail],
    })
}

fn tau_integrals(a: f64, b: f64, spec: &KernelSpec) -> Result<TauIntegrals> {
    if spec.rule == QuadratureRule::Trapezoid {
        if let Some(r) = trapezoid_integrals(a, b, spec.tail_cut) {
            return Ok(r);
        }
    }
    adaptive_integrals(a, b, spec)
}

fn is_heisenberg(alg: &StratifiedAlgebra) -> bool {
    alg.layer_dims() == [2, 1]
        && alg.nonzero_brackets().len() == 2
        && alg.c(0, 1, 2) == 1.0
        && alg.c(1, 0, 2) == -1.0
}

/// A heat kernel bound to an algebra, with its frame cached.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    spec: KernelSpec,
    algebra: StratifiedAlgebra,
    frame: FrameCoefficients,
}

impl HeatKernel {
    /// Fails with `KernelMismatch` unless the algebra is the Heisenberg
    /// algebra (Gaveau kernel) or abelian (Gaussian kernel).
    pub fn new(spec: KernelSpec, algebra: &StratifiedAlgebra) -> Result<Self> {
        spec.validate()?;
        match spec.kind {
            KernelKind::HeisenbergGaveau if !is_heisenberg(algebra) => {
                return Err(Error::KernelMismatch {
                    kernel: spec.kind.name().into(),
                    reason: format!("needs the Heisenberg algebra, got {algebra}"),
                })
            }
            KernelKind::EuclideanGaussian if !algebra.is_abelian() => {
                return Err(Error::KernelMismatch {
                    kernel: spec.kind.name().into(),
                    reason: format!("needs an abelian algebra, got {algebra}"),
                })
            }
            _ => {}
        }
        Ok(Self {
            spec,
            algebra: algebra.clone(),
            frame: left_invariant_frame(algebra),
        })
    }

    /// Heisenberg kernel with default controls.
    pub fn heisenberg() -> Self {
        Self::new(KernelSpec::heisenberg(), &StratifiedAlgebra::heisenberg())
            .expect("matching kernel")
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn algebra(&self) -> &StratifiedAlgebra {
        &self.algebra
    }

    pub fn frame(&self) -> &FrameCoefficients {
        &self.frame
    }

    fn check(&self, t: f64, x: &[f64]) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::param(format!(
                "time must be positive and finite, got {t}"
            )));
        }
        if x.len() != self.algebra.dim() {
            return Err(Error::param(format!(
                "point has {} coordinates, algebra has dimension {}",
                x.len(),
                self.algebra.dim()
            )));
        }
        Ok(())
    }

    /// `P_t(x)`.
    pub fn value(&self, t: f64, x: &[f64]) -> Result<KernelValue> {
        self.check(t, x)?;
        match self.spec.kind {
            KernelKind::EuclideanGaussian => {
                let v = gaussian(t, x);
                Ok(KernelValue {
                    value: v,
                    est_abs_err: 4.0 * f64::EPSILON * v,
                })
            }
            KernelKind::HeisenbergGaveau => {
                let a = (x[0] * x[0] + x[1] * x[1]) / t;
                let b = x[2] / t;
                let r = tau_integrals(a, b, &self.spec)?;
                let pref = 1.0 / (4.0 * PI * PI * t * t);
                Ok(KernelValue {
                    value: pref * r.value[0],
                    est_abs_err: pref * r.err[0],
                })
            }
        }
    }

    /// `P_t(x)` together with its coordinate gradient `∂_k P_t(x)` written
    /// into `grad`; the returned error bound covers all components.
    pub fn value_and_gradient(&self, t: f64, x: &[f64], grad: &mut [f64]) -> Result<KernelValue> {
        self.check(t, x)?;
        match self.spec.kind {
            KernelKind::EuclideanGaussian => {
                let v = gaussian(t, x);
                for (g, xi) in grad.iter_mut().zip(x) {
                    *g = -xi / (2.0 * t) * v;
                }
                Ok(KernelValue {
                    value: v,
                    est_abs_err: 4.0 * f64::EPSILON * v,
                })
            }
            KernelKind::HeisenbergGaveau => {
                let a = (x[0] * x[0] + x[1] * x[1]) / t;
                let b = x[2] / t;
                let r = tau_integrals(a, b, &self.spec)?;
                let pref = 1.0 / (4.0 * PI * PI * t * t);
                grad[0] = -2.0 * x[0] / t * pref * r.value[1];
                grad[1] = -2.0 * x[1] / t * pref * r.value[1];
                grad[2] = -2.0 / t * pref * r.value[2];
                let gerr = (2.0 * x[0].abs().max(x[1].abs()) * r.err[1]).max(2.0 * r.err[2]) / t;
                Ok(KernelValue {
                    value: pref * r.value[0],
                    est_abs_err: pref * r.err[0].max(gerr),
                })
            }
        }
    }

    /// `(X^i P_t)(x)`, 0-based `i`.
    pub fn field_derivative(&self, i: usize, t: f64, x: &[f64]) -> Result<KernelValue> {
        let n = self.algebra.dim();
        if i >= n {
            return Err(Error::param(format!(
                "field index {i} out of range for dimension {n}"
            )));
        }
        let mut g = vec![0.0; n];
        let kv = self.value_and_gradient(t, x, &mut g)?;
        let mut a = vec![0.0; n];
        self.frame.coefficients_at(i, x, &mut a);
        let value = a.iter().zip(&g).map(|(a, g)| a * g).sum();
        let scale: f64 = a.iter().map(|a| a.abs()).sum();
        Ok(KernelValue {
            value,
            est_abs_err: scale * kv.est_abs_err,
        })
    }

    /// `X^{m_1} ⋯ X^{m_k} P_t` for a multi-index of length at most 2 (the
    /// rightmost field acts first). Second order uses a central difference
    /// along the group curve `x·exp(±h X^{m_1})`.
    pub fn derivative(&self, multi: &[usize], t: f64, x: &[f64]) -> Result<KernelValue> {
        match multi {
            [] => self.value(t, x),
            [i] => self.field_derivative(*i, t, x),
            [j, i] => {
                let n = self.algebra.dim();
                if *j >= n {
                    return Err(Error::param(format!(
                        "field index {j} out of range for dimension {n}"
                    )));
                }
                let h = 1e-4 * t.powf(self.algebra.weights()[*j] as f64 / 2.0);
                let mut e = vec![0.0; n];
                let mut p = vec![0.0; n];
                e[*j] = h;
                self.algebra.product_into(x, &e, &mut p);
                let fp = self.field_derivative(*i, t, &p)?;
                e[*j] = -h;
                self.algebra.product_into(x, &e, &mut p);
                let fm = self.field_derivative(*i, t, &p)?;
                let value = (fp.value - fm.value) / (2.0 * h);
                let trunc = 1e-8 * (fp.value.abs() + fm.value.abs()) / h;
                Ok(KernelValue {
                    value,
                    est_abs_err: (fp.est_abs_err + fm.est_abs_err) / (2.0 * h) + trunc,
                })
            }
            _ => Err(Error::param(
                "derivative multi-index longer than 2".to_string(),
            )),
        }
    }

    /// `‖X^{multi} P_t‖_q` by self-similar tensor quadrature; `q = ∞` takes
    /// the node maximum refined by a local compass search.
    pub fn lq_norm(&self, multi: &[usize], t: f64, q: f64, opts: &LqOptions) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::param(format!("q must be in [1, ∞], got {q}")));
        }
        let bx = SelfSimilarBox::with_spacing(&self.algebra, opts.radius, opts.du)?
            .clip_to_ball(opts.clip_to_ball);
        let points = bx.points(t);
        let values = points
            .par_iter()
            .map(|p| self.derivative(multi, t, p.coords()).map(|v| v.value))
            .collect::<Result<Vec<f64>>>()?;
        if q.is_infinite() {
            let (best, vmax) = values
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(bi, bv), (i, v)| {
                    if v.abs() > bv {
                        (i, v.abs())
                    } else {
                        (bi, bv)
                    }
                });
            if !opts.refine {
                return Ok(vmax);
            }
            let step: Vec<f64> = bx
                .u_spacing()
                .iter()
                .zip(self.algebra.weights())
                .map(|(du, &w)| du * t.powf(w as f64 / 2.0))
                .collect();
            let mut failure = None;
            let (_, refined) = compass_maximize(
                |p| match self.derivative(multi, t, p) {
                    Ok(v) => v.value.abs(),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                points[best].coords(),
                &step,
                1e-4,
                400,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            return Ok(refined.max(vmax));
        }
        Ok(bx.lq_norm(&values, t, q))
    }
}

/// Controls for kernel `L^q` norms: the `u`-box is `{‖u‖ ≤ radius}` sampled
/// with spacing about `du`, mapped to `δ_{√t}(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqOptions {
    pub radius: f64,
    pub du: f64,
    pub refine: bool,
    pub clip_to_ball: bool,
}

impl Default for LqOptions {
    fn default() -> Self {
        Self {
            radius: 6.0,
            du: 0.5,
            refine: true,
            clip_to_ball: true,
        }
    }
}

fn gaussian(t: f64, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (4.0 * PI * t).powf(-(x.len() as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
}

fn implied_algebra(spec: &KernelSpec, dim: usize) -> StratifiedAlgebra {
    match spec.kind {
        KernelKind::HeisenbergGaveau => StratifiedAlgebra::heisenberg(),
        KernelKind::EuclideanGaussian => StratifiedAlgebra::euclidean(dim.max(1)),
    }
}

/// `P_t(x)` for the algebra implied by `spec.kind` (Heisenberg, or `R^N`
/// with `N = x.dim()`).
pub fn eval_kernel(spec: &KernelSpec, t: f64, x: &GroupPoint) -> Result<KernelValue> {
    HeatKernel::new(*spec, &implied_algebra(spec, x.dim()))?.value(t, x.coords())
}

/// `(X^i P_t)(x)` with 0-based `i`.
pub fn eval_kernel_derivative(
    spec: &KernelSpec,
    frame: &FrameCoefficients,
    i: usize,
    t: f64,
    x: &GroupPoint,
) -> Result<KernelValue> {
    let k = HeatKernel::new(*spec, &implied_algebra(spec, frame.dim()))?;
    k.field_derivative(i, t, x.coords())
}

/// `‖X^{multi} P_t‖_q` with default sampling controls.
pub fn kernel_lq_norm(
    spec: &KernelSpec,
    frame: &FrameCoefficients,
    multi: &[usize],
    t: f64,
    q: f64,
) -> Result<f64> {
    let k = HeatKernel::new(*spec, &implied_algebra(spec, frame.dim()))?;
    k.lq_norm(multi, t, q, &LqOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values from a 30-digit independent quadrature.
    const ORACLE: [(f64, [f64; 3], f64); 6] = [
        (1.0, [0.5, 0.3, 0.2], 0.048_779_458_658_861_93),
        (1.0, [1.0, -0.5, 0.7], 0.018_578_221_233_938_957),
        (2.0, [0.3, 1.2, -1.5], 0.004_624_818_688_259_054),
        (0.5, [0.1, 0.1, 0.05], 0.239_234_022_949_339_04),
        (1.0, [0.0, 0.0, 2.0], 0.000_465_121_883_924_763_33),
        (1.0, [2.0, 1.0, 0.0], 0.009_052_150_606_128_182),
    ];

    fn both_rules() -> [HeatKernel; 2] {
        let h = StratifiedAlgebra::heisenberg();
        [
            HeatKernel::new(KernelSpec::heisenberg(), &h).unwrap(),
            HeatKernel::new(
                KernelSpec::heisenberg().with_rule(QuadratureRule::Adaptive),
                &h,
            )
            .unwrap(),
        ]
    }

    #[test]
    fn origin_value() {
        for k in both_rules() {
            let v = k.value(1.0, &[0.0; 3]).unwrap();
            assert_relative_eq!(v.value, 1.0 / 16.0, max_relative = 1e-12);
            assert!(v.est_abs_err >= 0.0 && v.est_abs_err < 1e-10);
        }
    }

    #[test]
    fn matches_high_precision_oracle() {
        for k in both_rules() {
            for (t, x, p) in ORACLE {
                let v = k.value(t, &x).unwrap();
                assert_relative_eq!(v.value, p, max_relative = 1e-10);
                assert!((v.value - p).abs() <= v.est_abs_err.max(1e-16) * 10.0 + 1e-12 * p);
            }
        }
    }

    #[test]
    fn gradient_matches_oracle() {
        let expected = [
            -0.021_212_026_305_162_144,
            -0.012_727_215_783_097_285,
            -0.039_848_180_404_571_06,
        ];
        for k in both_rules() {
            let mut g = [0.0; 3];
            k.value_and_gradient(1.0, &[0.5, 0.3, 0.2], &mut g).unwrap();
            for c in 0..3 {
                assert_relative_eq!(g[c], expected[c], max_relative = 1e-9);
            }
            let x1 = k.field_derivative(0, 1.0, &[0.5, 0.3, 0.2]).unwrap().value;
            let x2 = k.field_derivative(1, 1.0, &[0.5, 0.3, 0.2]).unwrap().value;
            assert_relative_eq!(x1, -0.015234799244476483, max_relative = 1e-9);
            assert_relative_eq!(x2, -0.022_689_260_884_240_05, max_relative = 1e-9);
        }
    }

    #[test]
    fn weights_are_exact_near_zero() {
        assert_eq!(gaveau_weights(0.0), (1.0, 0.25));
        let (w, c) = gaveau_weights(1e-3);
        assert_relative_eq!(w, 2e-3 / (2e-3f64).sinh(), max_relative = 1e-14);
        assert_relative_eq!(c, 1e-3 / (2.0 * (2e-3f64).tanh()), max_relative = 1e-14);
        let (w, c) = gaveau_weights(400.0);
        assert!((0.0..1e-300).contains(&w));
        assert_relative_eq!(c, 200.0, max_relative = 1e-15);
    }

    #[test]
    fn symmetries() {
        let k = HeatKernel::heisenberg();
        let p = k.value(0.7, &[0.4, -0.9, 0.6]).unwrap().value;
        assert_eq!(k.value(0.7, &[-0.4, 0.9, -0.6]).unwrap().value, p);
        assert_eq!(k.value(0.7, &[0.4, -0.9, -0.6]).unwrap().value, p);
        assert_eq!(k.value(0.7, &[0.9, 0.4, 0.6]).unwrap().value, p);
    }

    #[test]
    fn extreme_oscillation() {
        let k = HeatKernel::heisenberg();
        let v = k.value(1e-3, &[0.0, 0.0, 1.0]).unwrap();
        assert!(v.value.abs() <= v.est_abs_err + 1e-300);
        // beyond the trapezoid ladder the adaptive rule runs out of panels
        let err = k.value(1e-3, &[0.0, 0.0, 6.0]).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged(_)));
    }

    #[test]
    fn euclidean_reference() {
        let v = eval_kernel(&KernelSpec::euclidean(), 1.0, &GroupPoint::identity(3)).unwrap();
        assert_relative_eq!(v.value, (4.0 * PI).powf(-1.5), max_relative = 1e-15);
    }

    #[test]
    fn mismatched_kernel_is_rejected() {
        let err = HeatKernel::new(KernelSpec::heisenberg(), &StratifiedAlgebra::euclidean(3))
            .unwrap_err();
        assert!(matches!(err, Error::KernelMismatch { .. }));
        let err =
            HeatKernel::new(KernelSpec::euclidean(), &StratifiedAlgebra::heisenberg()).unwrap_err();
        assert!(matches!(err, Error::KernelMismatch { .. }));
        let bad = KernelSpec {
            tail_cut: 0.0,
            ..KernelSpec::heisenberg()
        };
        assert!(HeatKernel::new(bad, &StratifiedAlgebra::heisenberg()).is_err());
        assert!(HeatKernel::heisenberg().value(0.0, &[0.0; 3]).is_err());
    }

    #[test]
    fn second_derivative_realizes_bracket() {
        let k = HeatKernel::heisenberg();
        let x = [0.4, -0.2, 0.3];
        let x12 = k.derivative(&[0, 1], 1.0, &x).unwrap().value;
        let x21 = k.derivative(&[1, 0], 1.0, &x).unwrap().value;
        let x3 = k.derivative(&[2], 1.0, &x).unwrap().value;
        assert_relative_eq!(x12 - x21, x3, max_relative = 1e-6);
    }
}
