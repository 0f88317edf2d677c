//! Large-time behaviour of `f(t) = f0 ∗ P_t`: expansion residuals, decay
//! slope fits and the comparison with the predicted exponents.
//!
//! The first-order expansion is
//!
//! ```text
//! f0 ∗ P_t (g) ≈ A_0 P_t(g) + Σ_{i≤n} A_i (X^i P_t)(g^{-1}),   A_0 = ∫f0, A_i = ∫f0 x_i.
//! ```
//!
//! The field derivative is taken at `g^{-1}`: Taylor-expanding
//! `P_t(h^{-1} g) = P_t(g^{-1} h)` in `h` at the identity produces the
//! left-invariant derivative at `g^{-1}`. [`FirstOrderForm::Literal`]
//! evaluates `X^i P_t` at `g` instead, for comparison.

use serde::{Deserialize, Serialize, Serializer};

use crate::algebra::{GroupPoint, StratifiedAlgebra};
use crate::decomp::coordinate_moments;
use crate::error::{Error, Result};
use crate::grid::{convolve_with_kernel, Gauge, GridFunction, SelfSimilarBox, WeightedNorm};
use crate::kernel::{HeatKernel, KernelSpec};
use crate::quadrature::compass_maximize;

/// Order of the expansion: 0 keeps `A_0 P_t`, 1 adds the first-layer
/// derivative terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpansionOrder {
    Zero,
    One,
}

impl ExpansionOrder {
    pub fn k(self) -> u32 {
        match self {
            ExpansionOrder::Zero => 0,
            ExpansionOrder::One => 1,
        }
    }

    pub fn from_k(k: u32) -> Result<Self> {
        match k {
            0 => Ok(ExpansionOrder::Zero),
            1 => Ok(ExpansionOrder::One),
            other => Err(Error::param(format!(
                "expansion order must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// Where the first-order derivative terms are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FirstOrderForm {
    /// `(X^i P_t)(g^{-1})`.
    #[default]
    InversePoint,
    /// `(X^i P_t)(g)`.
    Literal,
}

/// Coefficients of the expansion `A_0 P_t + Σ A_i X^i P_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionCoefficients {
    pub order: ExpansionOrder,
    pub a0: f64,
    /// `(i, A_i)` pairs, 0-based field index.
    pub terms: Vec<(usize, f64)>,
    pub form: FirstOrderForm,
}

impl ExpansionCoefficients {
    /// Signed moments of `f0`; order 1 uses the first layer only.
    pub fn from_datum(f0: &GridFunction, order: ExpansionOrder) -> Self {
        let a0 = f0.integrate();
        let terms = match order {
            ExpansionOrder::Zero => Vec::new(),
            ExpansionOrder::One => {
                let m = coordinate_moments(f0);
                (0..f0.algebra().horizontal_dim())
                    .map(|i| (i, m[i]))
                    .collect()
            }
        };
        Self {
            order,
            a0,
            terms,
            form: FirstOrderForm::InversePoint,
        }
    }

    /// Multiplies `A_0` by `factor` (a deliberately wrong expansion).
    pub fn scale_a0(mut self, factor: f64) -> Self {
        self.a0 *= factor;
        self
    }

    /// Adds a derivative term along direction `i` with coefficient `coef`.
    pub fn with_term(mut self, i: usize, coef: f64) -> Self {
        self.terms.push((i, coef));
        self
    }

    pub fn with_form(mut self, form: FirstOrderForm) -> Self {
        self.form = form;
        self
    }

    /// Value of the expansion at `g`.
    pub fn eval(&self, kernel: &HeatKernel, t: f64, g: &[f64]) -> Result<f64> {
        let mut v = self.a0 * kernel.value(t, g)?.value;
        if !self.terms.is_empty() {
            let at: Vec<f64> = match self.form {
                FirstOrderForm::InversePoint => g.iter().map(|c| -c).collect(),
                FirstOrderForm::Literal => g.to_vec(),
            };
            for &(i, a) in &self.terms {
                v += a * kernel.field_derivative(i, t, &at)?.value;
            }
        }
        Ok(v)
    }
}

/// `f(t) = f0 ∗ P_t` at the output points.
pub fn solve_cauchy(
    f0: &GridFunction,
    spec: &KernelSpec,
    t: f64,
    out_points: &[GroupPoint],
) -> Result<Vec<f64>> {
    let kernel = HeatKernel::new(*spec, f0.algebra())?;
    convolve_with_kernel(f0, &kernel, t, out_points)
}

/// `−Q(1/p − 1/q)/2 − (k+1)/2`.
pub fn predicted_slope(
    alg: &StratifiedAlgebra,
    p: f64,
    q: f64,
    order: ExpansionOrder,
) -> Result<f64> {
    let qd = alg.homogeneous_dimension() as f64;
    let invalid = |reason: &str| Error::InvalidNormPair {
        p,
        q,
        reason: reason.to_string(),
    };
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(invalid("norm indices must lie in [1, ∞]"));
    }
    if p > q {
        return Err(invalid("p must not exceed q"));
    }
    if qd > 1.0 && p >= qd / (qd - 1.0) {
        return Err(invalid(&format!(
            "p must be below Q/(Q−1) = {}",
            qd / (qd - 1.0)
        )));
    }
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    Ok(-qd * (1.0 / p - inv_q) / 2.0 - (order.k() as f64 + 1.0) / 2.0)
}

/// Least-squares slope of `log(residual)` against `log(t)` and its standard
/// error. Needs at least 4 samples, positive residuals and times spanning a
/// decade.
pub fn fit_decay_slope(times: &[f64], residuals: &[f64]) -> Result<(f64, f64)> {
    if times.len() != residuals.len() {
        return Err(Error::DegenerateFit(format!(
            "{} times but {} residuals",
            times.len(),
            residuals.len()
        )));
    }
    check_fit_times(times)?;
    if let Some(r) = residuals.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::DegenerateFit(format!(
            "residual {r} is not positive"
        )));
    }
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// The sampling requirements of [`fit_decay_slope`] on the times alone.
pub fn check_fit_times(times: &[f64]) -> Result<()> {
    if times.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "{} sample(s); at least 4 are needed",
            times.len()
        )));
    }
    if let Some(t) = times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::DegenerateFit(format!("time {t} is not positive")));
    }
    let (lo, hi) = times
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if (hi / lo).log10() < 1.0 - 1e-12 {
        return Err(Error::DegenerateFit(format!(
            "times span {:.2} decade(s); at least 1 is needed",
            (hi / lo).log10()
        )));
    }
    Ok(())
}

/// Geometric time sequence `start · ratio^j`, `j < count`.
pub fn geometric_times(start: f64, ratio: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0) || !(ratio > 1.0) || count == 0 {
        return Err(Error::param(format!(
            "times need start > 0, ratio > 1, count ≥ 1 (got {start}:{ratio}:{count})"
        )));
    }
    Ok((0..count).map(|j| start * ratio.powi(j as i32)).collect())
}

/// How residual norms are sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingOptions {
    /// Radius `R` of the `u`-box `|u_k| ≤ R^{w^k}`.
    pub radius: f64,
    /// Odd node count per axis; `None` picks `2⌈R^{w}/du⌉ + 1`.
    pub nodes: Option<Vec<usize>>,
    pub du: f64,
    /// Compass-search refinement of the sup-norm.
    pub refine: bool,
}

impl SamplingOptions {
    /// `R = 3` with 17 nodes per axis for `q = ∞`; `R = 5` with spacing 0.5
    /// otherwise, since finite `q` needs the tails.
    pub fn for_q(alg: &StratifiedAlgebra, q: f64) -> Self {
        if q.is_infinite() {
            Self {
                radius: 3.0,
                nodes: Some(vec![17; alg.dim()]),
                du: 0.375,
                refine: true,
            }
        } else {
            Self {
                radius: 5.0,
                nodes: None,
                du: 0.5,
                refine: false,
            }
        }
    }

    fn build(&self, alg: &StratifiedAlgebra) -> Result<SelfSimilarBox> {
        match &self.nodes {
            Some(n) => SelfSimilarBox::with_nodes(alg, self.radius, n.clone()),
            None => SelfSimilarBox::with_spacing(alg, self.radius, self.du),
        }
    }
}

/// Pass/fail of a decay experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub slope_tol: f64,
    pub message: String,
}

fn ser_norm_index<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

/// Outcome of [`run_decay_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub order: u32,
    #[serde(serialize_with = "ser_norm_index")]
    pub p: f64,
    #[serde(serialize_with = "ser_norm_index")]
    pub q: f64,
    pub times: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub predicted_slope: f64,
    pub verdict: Verdict,
    pub coefficients: ExpansionCoefficients,
    pub warnings: Vec<String>,
}

/// Convolution and residual machinery shared by several expansions of the
/// same datum.
pub struct DecayExperiment<'a> {
    f0: &'a GridFunction,
    kernel: HeatKernel,
    q: f64,
    sampling: SamplingOptions,
    bx: SelfSimilarBox,
}

impl<'a> DecayExperiment<'a> {
    pub fn new(
        f0: &'a GridFunction,
        spec: &KernelSpec,
        q: f64,
        sampling: SamplingOptions,
    ) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::param(format!("q must be in [1, ∞], got {q}")));
        }
        let kernel = HeatKernel::new(*spec, f0.algebra())?;
        let bx = sampling.build(f0.algebra())?;
        Ok(Self {
            f0,
            kernel,
            q,
            sampling,
            bx,
        })
    }

    pub fn kernel(&self) -> &HeatKernel {
        &self.kernel
    }

    /// `f(t)` on the self-similar sample points at time `t`.
    pub fn solution(&self, t: f64) -> Result<(Vec<GroupPoint>, Vec<f64>)> {
        let points = self.bx.points(t);
        let values = convolve_with_kernel(self.f0, &self.kernel, t, &points)?;
        Ok((points, values))
    }

    /// `‖f(t) − expansion‖_q` given the solution samples from
    /// [`solution`](Self::solution).
    pub fn residual_norm(
        &self,
        t: f64,
        points: &[GroupPoint],
        solution: &[f64],
        coeffs: &ExpansionCoefficients,
    ) -> Result<f64> {
        let residual: Vec<f64> = points
            .iter()
            .zip(solution)
            .map(|(g, s)| Ok(s - coeffs.eval(&self.kernel, t, g.coords())?))
            .collect::<Result<_>>()?;
        if !self.q.is_infinite() {
            return Ok(self.bx.lq_norm(&residual, t, self.q));
        }
        let (best, vmax) = residual
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            });
        if !self.sampling.refine {
            return Ok(vmax);
        }
        let alg = self.f0.algebra();
        let r = t.sqrt();
        let u0: Vec<f64> = self.bx.u_points()[best].clone();
        let mut failure = None;
        let (_, refined) = compass_maximize(
            |u| {
                let mut g = u.to_vec();
                alg.dilate_in_place(r, &mut g);
                let point = [GroupPoint::new(g)];
                let eval = convolve_with_kernel(self.f0, &self.kernel, t, &point)
                    .and_then(|s| Ok(s[0] - coeffs.eval(&self.kernel, t, point[0].coords())?));
                match eval {
                    Ok(v) => v.abs(),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            &u0,
            &self.bx.u_spacing(),
            1e-3,
            300,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(refined.max(vmax))
    }

    /// Residual norms of several expansions at each time.
    pub fn residual_norms(
        &self,
        times: &[f64],
        expansions: &[ExpansionCoefficients],
    ) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![Vec::with_capacity(times.len()); expansions.len()];
        for &t in times {
            let (points, sol) = self.solution(t)?;
            for (e, row) in expansions.iter().zip(out.iter_mut()) {
                row.push(self.residual_norm(t, &points, &sol, e)?);
            }
        }
        Ok(out)
    }
}

/// `‖f(t) − expansion‖_q` with default sampling.
pub fn expansion_residual(
    f0: &GridFunction,
    spec: &KernelSpec,
    coeffs: &ExpansionCoefficients,
    t: f64,
    q: f64,
) -> Result<f64> {
    let exp = DecayExperiment::new(f0, spec, q, SamplingOptions::for_q(f0.algebra(), q))?;
    let (points, sol) = exp.solution(t)?;
    exp.residual_norm(t, &points, &sol, coeffs)
}

/// Options of [`run_decay_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecayOptions {
    pub slope_tol: f64,
    pub sampling: Option<SamplingOptions>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            slope_tol: 0.2,
            sampling: None,
        }
    }
}

/// Runs the experiment for one or more expansions of the same datum,
/// sharing the convolutions.
pub fn run_decay_experiments(
    f0: &GridFunction,
    spec: &KernelSpec,
    expansions: &[ExpansionCoefficients],
    p: f64,
    q: f64,
    times: &[f64],
    opts: &DecayOptions,
) -> Result<Vec<DecayReport>> {
    let alg = f0.algebra();
    let predicted: Vec<f64> = expansions
        .iter()
        .map(|e| predicted_slope(alg, p, q, e.order))
        .collect::<Result<_>>()?;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(
            "times must be strictly increasing".to_string(),
        ));
    }
    check_fit_times(times)?;
    let mut warnings = Vec::new();
    if p > 1.0 {
        let m1 = f0.lq_norm(&WeightedNorm::new(p, 1)?.with_gauge(Gauge::AlgebraEuclidean));
        let m2 = f0.lq_norm(&WeightedNorm::new(p, 2)?.with_gauge(Gauge::AlgebraEuclidean));
        if !(m1.is_finite() && m2.is_finite()) {
            warnings.push(format!(
                "weighted norms of the datum are not finite for p = {p}"
            ));
        }
    }
    let sampling = opts
        .sampling
        .clone()
        .unwrap_or_else(|| SamplingOptions::for_q(alg, q));
    let exp = DecayExperiment::new(f0, spec, q, sampling)?;
    let norms = exp.residual_norms(times, expansions)?;
    let mut reports = Vec::with_capacity(expansions.len());
    for ((e, pred), res) in expansions.iter().zip(predicted).zip(norms) {
        let mut w = warnings.clone();
        if res.windows(2).any(|r| r[1] >= r[0]) {
            w.push("residual norms are not strictly decreasing".into());
        }
        let (slope, stderr) = fit_decay_slope(times, &res)?;
        let pass = slope <= pred + opts.slope_tol;
        let message = if pass {
            format!(
                "fitted slope {slope:.3} ≤ predicted {pred:.3} + {}",
                opts.slope_tol
            )
        } else {
            format!(
                "fitted slope {slope:.3} is shallower than predicted {pred:.3} + {}",
                opts.slope_tol
            )
        };
        reports.push(DecayReport {
            order: e.order.k(),
            p,
            q,
            times: times.to_vec(),
            residual_norms: res,
            fitted_slope: slope,
            slope_stderr: stderr,
            predicted_slope: pred,
            verdict: Verdict {
                pass,
                slope_tol: opts.slope_tol,
                message,
            },
            coefficients: e.clone(),
            warnings: w,
        });
    }
    Ok(reports)
}

/// Single-expansion experiment with the signed moments of `f0`.
pub fn run_decay_experiment(
    f0: &GridFunction,
    spec: &KernelSpec,
    order: ExpansionOrder,
    p: f64,
    q: f64,
    times: &[f64],
) -> Result<DecayReport> {
    let e = ExpansionCoefficients::from_datum(f0, order);
    Ok(run_decay_experiments(f0, spec, &[e], p, q, times, &DecayOptions::default())?.remove(0))
}
