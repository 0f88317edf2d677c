//! Left-invariant vector fields as first-order differential operators with
//! polynomial coefficients.
//!
//! `X^i = Σ_k a_{ik}(x) ∂_k` is the differential of left translation applied
//! to the basis vector `X^i`. The coefficients follow from the truncated BCH
//! product: `a_{ik}(x) = δ_{ik} + ½ Σ_j x_j c^k_{ji} + (1/12) Σ_{j,l} x_j x_l c^m_{li} c^k_{jm}`.
//! Field indices are 0-based in this API.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::algebra::StratifiedAlgebra;
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// One term `coef · Π_v x_v^{powers[v]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.powers.iter().zip(x).fold(
            self.coef,
            |acc, (&p, &v)| if p == 0 { acc } else { acc * v.powi(p as i32) },
        )
    }
}

/// Variables print as `x1, x2, …`; e.g. `-0.5 x2 + x1^2 x3`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, m) in self.terms.iter().enumerate() {
            let vars: Vec<String> = m
                .powers
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(v, &p)| {
                    if p == 1 {
                        format!("x{}", v + 1)
                    } else {
                        format!("x{}^{p}", v + 1)
                    }
                })
                .collect();
            let c = if n == 0 { m.coef } else { m.coef.abs() };
            if n > 0 {
                write!(f, " {} ", if m.coef < 0.0 { '-' } else { '+' })?;
            }
            let vars = vars.join(" ");
            if vars.is_empty() {
                write!(f, "{c}")?;
            } else if c == 1.0 {
                write!(f, "{vars}")?;
            } else if c == -1.0 {
                write!(f, "-{vars}")?;
            } else {
                write!(f, "{c} {vars}")?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial in `nvars` variables. Like terms are merged and zero
/// terms dropped on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_terms(nvars, vec![(c, vec![0; nvars])])
    }

    pub fn from_terms(nvars: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (c, p) in terms {
            assert_eq!(p.len(), nvars, "monomial arity mismatch");
            *merged.entry(p).or_insert(0.0) += c;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(powers, coef)| Monomial { coef, powers })
            .collect();
        Self { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.powers[var] > 0)
            .map(|t| {
                let mut p = t.powers.clone();
                p[var] -= 1;
                (t.coef * t.powers[var] as f64, p)
            })
            .collect();
        Self::from_terms(self.nvars, terms)
    }

    /// Weighted degree of each term, `Σ_v weights[v]·powers[v]`.
    pub fn weighted_degrees(&self, weights: &[u32]) -> Vec<u32> {
        self.terms
            .iter()
            .map(|t| t.powers.iter().zip(weights).map(|(p, w)| p * w).sum())
            .collect()
    }
}

/// A smooth scalar function with exact first (and optionally second)
/// derivatives.
pub trait SmoothFunction: Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// Row-major `N×N` Hessian. The default uses central differences of the
    /// exact gradient with step `1e-5`.
    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let h = 1e-5;
        let mut xp = x.to_vec();
        let mut gp = vec![0.0; n];
        let mut gm = vec![0.0; n];
        for k in 0..n {
            xp[k] = x[k] + h;
            self.gradient(&xp, &mut gp);
            xp[k] = x[k] - h;
            self.gradient(&xp, &mut gm);
            xp[k] = x[k];
            for m in 0..n {
                out[k * n + m] = (gp[m] - gm[m]) / (2.0 * h);
            }
        }
    }
}

/// A [`SmoothFunction`] built from a value closure and a gradient closure.
pub struct ClosureFunction<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> SmoothFunction for ClosureFunction<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out)
    }
}

impl SmoothFunction for Polynomial {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.derivative(k).eval(x);
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let n = self.nvars;
        for k in 0..n {
            let dk = self.derivative(k);
            for m in 0..n {
                out[k * n + m] = dk.derivative(m).eval(x);
            }
        }
    }
}

/// Coefficients `a_{ik}` of the left-invariant frame and their first
/// derivatives.
#[derive(Debug, Clone)]
pub struct FrameCoefficients {
    dim: usize,
    weights: Vec<u32>,
    coeffs: Vec<Polynomial>,
    // d_coeffs[(i * dim + k) * dim + l] = ∂_l a_{ik}
    d_coeffs: Vec<Polynomial>,
    support: Vec<Vec<usize>>,
}

/// Builds the frame of left-invariant fields of `alg`.
pub fn left_invariant_frame(alg: &StratifiedAlgebra) -> FrameCoefficients {
    FrameCoefficients::new(alg)
}

impl FrameCoefficients {
    pub fn new(alg: &StratifiedAlgebra) -> Self {
        let n = alg.dim();
        let unit = |v: &[usize]| {
            let mut p = vec![0u32; n];
            for &j in v {
                p[j] += 1;
            }
            p
        };
        let mut coeffs = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                let mut terms = Vec::new();
                if i == k {
                    terms.push((1.0, vec![0; n]));
                }
                for j in 0..n {
                    let c = alg.c(j, i, k);
                    if c != 0.0 {
                        terms.push((0.5 * c, unit(&[j])));
                    }
                }
                if alg.step() >= 3 {
                    for j in 0..n {
                        for l in 0..n {
                            let s: f64 = (0..n).map(|m| alg.c(l, i, m) * alg.c(j, m, k)).sum();
                            if s != 0.0 {
                                terms.push((s / 12.0, unit(&[j, l])));
                            }
                        }
                    }
                }
                coeffs.push(Polynomial::from_terms(n, terms));
            }
        }
        let d_coeffs = coeffs
            .iter()
            .flat_map(|p| (0..n).map(move |l| p.derivative(l)))
            .collect();
        let support = (0..n)
            .map(|i| (0..n).filter(|&k| !coeffs[i * n + k].is_zero()).collect())
            .collect();
        Self {
            dim: n,
            weights: alg.weights().to_vec(),
            coeffs,
            d_coeffs,
            support,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Polynomial `a_{ik}`.
    pub fn coefficient(&self, i: usize, k: usize) -> &Polynomial {
        &self.coeffs[i * self.dim + k]
    }

    /// Coordinates `k` for which `a_{ik}` is not identically zero.
    pub fn support(&self, i: usize) -> &[usize] {
        &self.support[i]
    }

    /// Values `a_{ik}(x)` for all `k`.
    pub fn coefficients_at(&self, i: usize, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &k in &self.support[i] {
            out[k] = self.coeffs[i * self.dim + k].eval(x);
        }
    }

    /// `Σ_k a_{ik}(x) g_k` for a given gradient `g` of some function at `x`.
    pub fn apply_to_gradient(&self, i: usize, x: &[f64], grad: &[f64]) -> f64 {
        self.support[i]
            .iter()
            .map(|&k| self.coeffs[i * self.dim + k].eval(x) * grad[k])
            .sum()
    }

    /// `X^j X^i f` from the gradient and Hessian of `f` at `x`.
    pub fn apply_pair_to_derivatives(
        &self,
        j: usize,
        i: usize,
        x: &[f64],
        grad: &[f64],
        hess: &[f64],
    ) -> f64 {
        let n = self.dim;
        let mut total = 0.0;
        for &k in &self.support[j] {
            let ajk = self.coeffs[j * n + k].eval(x);
            let mut inner = 0.0;
            for &m in &self.support[i] {
                let dk_aim = &self.d_coeffs[(i * n + m) * n + k];
                if !dk_aim.is_zero() {
                    inner += dk_aim.eval(x) * grad[m];
                }
                inner += self.coeffs[i * n + m].eval(x) * hess[k * n + m];
            }
            total += ajk * inner;
        }
        total
    }
}

/// `(X^i f)(x)` using the exact gradient of `f`.
pub fn apply_field_exact(
    frame: &FrameCoefficients,
    i: usize,
    f: &impl SmoothFunction,
    x: &[f64],
) -> f64 {
    let mut g = vec![0.0; frame.dim()];
    f.gradient(x, &mut g);
    frame.apply_to_gradient(i, x, &g)
}

/// `(X^j X^i f)(x)` using the exact gradient and Hessian of `f`.
pub fn apply_field_pair_exact(
    frame: &FrameCoefficients,
    j: usize,
    i: usize,
    f: &impl SmoothFunction,
    x: &[f64],
) -> f64 {
    let n = frame.dim();
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n * n];
    f.gradient(x, &mut g);
    f.hessian(x, &mut h);
    frame.apply_pair_to_derivatives(j, i, x, &g, &h)
}

/// Second-order finite-difference partial derivative of grid values along
/// `axis`; one-sided three-point stencils on the first and last nodes.
pub fn partial_grid(g: &GridFunction, axis: usize) -> Result<Vec<f64>> {
    let shape = g.shape();
    let nodes = shape[axis];
    if nodes < 3 {
        return Err(Error::GridTooSmall { axis, nodes });
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let h = g.spacing()[axis];
    let v = g.values();
    let out = (0..v.len())
        .into_par_iter()
        .map(|idx| {
            let m = (idx / stride) % nodes;
            let at = |o: isize| v[(idx as isize + o * stride as isize) as usize];
            if m == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else if m == nodes - 1 {
                (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h)
            } else {
                (at(1) - at(-1)) / (2.0 * h)
            }
        })
        .collect();
    Ok(out)
}

/// Applies `X^i` to a grid function by finite differences. Only the axes on
/// which `a_{ik}` does not vanish identically need three or more nodes.
pub fn apply_field_grid(
    frame: &FrameCoefficients,
    i: usize,
    g: &GridFunction,
) -> Result<GridFunction> {
    let n = frame.dim();
    if g.algebra().dim() != n {
        return Err(Error::GridMismatch(format!(
            "frame has dimension {n}, grid has {}",
            g.algebra().dim()
        )));
    }
    let mut out = vec![0.0; g.len()];
    for &k in frame.support(i) {
        let dk = partial_grid(g, k)?;
        let coeff = frame.coefficient(i, k);
        out.par_iter_mut().enumerate().for_each_init(
            || vec![0.0; n],
            |x, (idx, o)| {
                g.node_coords_into(idx, x);
                *o += coeff.eval(x) * dk[idx];
            },
        );
    }
    g.with_values(out)
}

/// `div F = Σ_i X^i F_i` on a common grid.
pub fn divergence_grid(frame: &FrameCoefficients, fields: &[GridFunction]) -> Result<GridFunction> {
    let n = frame.dim();
    if fields.len() != n {
        return Err(Error::GridMismatch(format!(
            "expected {n} field components, got {}",
            fields.len()
        )));
    }
    let first = &fields[0];
    for (i, f) in fields.iter().enumerate().skip(1) {
        if !f.same_grid(first) {
            return Err(Error::GridMismatch(format!(
                "component {i} lives on a different grid"
            )));
        }
    }
    let mut total = vec![0.0; first.len()];
    for (i, f) in fields.iter().enumerate() {
        let xf = apply_field_grid(frame, i, f)?;
        for (t, v) in total.iter_mut().zip(xf.values()) {
            *t += v;
        }
    }
    first.with_values(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn heis() -> (StratifiedAlgebra, FrameCoefficients) {
        let h = StratifiedAlgebra::heisenberg();
        let f = left_invariant_frame(&h);
        (h, f)
    }

    #[test]
    fn heisenberg_frame_matches_closed_form() {
        let (_, f) = heis();
        let x = [0.7, -1.3, 2.0];
        let mut a = [0.0; 3];
        f.coefficients_at(0, &x, &mut a);
        assert_eq!(a, [1.0, 0.0, 1.3 / 2.0]);
        f.coefficients_at(1, &x, &mut a);
        assert_eq!(a, [0.0, 1.0, 0.7 / 2.0]);
        f.coefficients_at(2, &x, &mut a);
        assert_eq!(a, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn euclidean_frame_is_coordinate_frame() {
        let e = StratifiedAlgebra::euclidean(4);
        let f = left_invariant_frame(&e);
        for i in 0..4 {
            for k in 0..4 {
                let p = f.coefficient(i, k);
                if i == k {
                    assert_eq!(p, &Polynomial::constant(4, 1.0));
                } else {
                    assert!(p.is_zero());
                }
            }
        }
    }

    #[test]
    fn frame_invariants_for_step_three() {
        let alg = StratifiedAlgebra::free_rank2_step3();
        let f = left_invariant_frame(&alg);
        let zero = vec![0.0; 5];
        for i in 0..5 {
            for k in 0..5 {
                let p = f.coefficient(i, k);
                assert_eq!(p.eval(&zero), if i == k { 1.0 } else { 0.0 });
                let wi = alg.weights()[i] as i64;
                let wk = alg.weights()[k] as i64;
                for d in p.weighted_degrees(alg.weights()) {
                    assert_eq!(d as i64, wk - wi, "a_({i},{k})");
                }
            }
        }
    }

    #[test]
    fn frame_is_differential_of_left_translation() {
        for alg in [
            StratifiedAlgebra::heisenberg(),
            StratifiedAlgebra::free_rank2_step3(),
        ] {
            let f = left_invariant_frame(&alg);
            let n = alg.dim();
            let x: Vec<f64> = (0..n).map(|k| 0.3 * k as f64 - 0.5).collect();
            for i in 0..n {
                let h = 1e-6;
                let mut e = vec![0.0; n];
                e[i] = h;
                let mut plus = vec![0.0; n];
                alg.product_into(&x, &e, &mut plus);
                e[i] = -h;
                let mut minus = vec![0.0; n];
                alg.product_into(&x, &e, &mut minus);
                let mut a = vec![0.0; n];
                f.coefficients_at(i, &x, &mut a);
                for k in 0..n {
                    assert_abs_diff_eq!((plus[k] - minus[k]) / (2.0 * h), a[k], epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn exact_application_examples() {
        let (_, f) = heis();
        let z = Polynomial::from_terms(3, vec![(1.0, vec![0, 0, 1])]);
        assert_abs_diff_eq!(apply_field_exact(&f, 0, &z, &[0.0, 2.0, 0.0]), -1.0);
        let r2 = Polynomial::from_terms(3, vec![(1.0, vec![2, 0, 0]), (1.0, vec![0, 2, 0])]);
        assert_eq!(apply_field_exact(&f, 2, &r2, &[0.4, -2.0, 5.0]), 0.0);
    }

    #[test]
    fn bracket_realized_by_fields() {
        let (_, f) = heis();
        let p = Polynomial::from_terms(
            3,
            vec![
                (1.0, vec![1, 2, 1]),
                (-2.0, vec![3, 0, 0]),
                (0.5, vec![0, 1, 2]),
                (1.0, vec![1, 0, 0]),
            ],
        );
        for x in [[0.2, -0.4, 1.0], [1.5, 0.5, -2.0]] {
            let x12 = apply_field_pair_exact(&f, 0, 1, &p, &x);
            let x21 = apply_field_pair_exact(&f, 1, 0, &p, &x);
            let x3 = apply_field_exact(&f, 2, &p, &x);
            assert_abs_diff_eq!(x12 - x21, x3, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_application_on_linear_data() {
        let h = Arc::new(StratifiedAlgebra::heisenberg());
        let f = left_invariant_frame(&h);
        let g = GridFunction::from_fn(
            h.clone(),
            vec![-1.0, -1.0, -1.0],
            vec![0.25; 3],
            vec![9, 9, 9],
            |x| x[0],
        );
        let x1 = apply_field_grid(&f, 0, &g).unwrap();
        assert!(x1.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let c = GridFunction::from_fn(h.clone(), vec![0.0; 3], vec![0.5; 3], vec![4, 4, 4], |_| {
            3.0
        });
        let dc = apply_field_grid(&f, 1, &c).unwrap();
        assert!(dc.values().iter().all(|v| v.abs() < 1e-12));
        let thin = GridFunction::from_fn(h, vec![0.0; 3], vec![0.5; 3], vec![4, 4, 2], |_| 1.0);
        assert!(matches!(
            apply_field_grid(&f, 0, &thin),
            Err(Error::GridTooSmall { axis: 2, nodes: 2 })
        ));
    }

    #[test]
    fn polynomial_display() {
        let p = Polynomial::from_terms(
            3,
            vec![
                (-0.5, vec![0, 1, 0]),
                (1.0, vec![2, 0, 1]),
                (3.0, vec![0; 3]),
            ],
        );
        assert_eq!(p.to_string(), "3 - 0.5 x2 + x1^2 x3");
        assert_eq!(Polynomial::zero(2).to_string(), "0");
        assert_eq!(
            Polynomial::from_terms(1, vec![(-1.0, vec![1])]).to_string(),
            "-x1"
        );
    }
}
