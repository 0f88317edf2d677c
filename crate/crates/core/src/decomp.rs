//! Moments and the fields of the moment decompositions.
//!
//! For integrable `f` with enough decay,
//!
//! * `f = (∫f) δ_0 − div F` with `F_i(x) = w^i x_i ∫_0^1 f(δ_{1/r} x) r^{−Q−1} dr`,
//! * `f = (∫f) δ_0 − Σ_{i≤n} (∫f x_i) X^i δ_0 + Σ_{i,j} X^i X^j F_{ij} − Σ_{i>n} X^i F_i`
//!   with `F_{ij} = w^i w^j x_i x_j ∫_0^1 f(δ_{1/r}x)(1−r) r^{−Q−2} dr` and
//!   `F_i = w^i (w^i−1) x_i ∫_0^1 f(δ_{1/r}x)(1−r) r^{−Q−2} dr`,
//!
//! both in the sense of distributions. The signs are those forced by the
//! weak form. Tested against `φ` they read
//!
//! ```text
//! ∫fφ − (∫f)φ(0) − Σ_i ∫F_i X^iφ = 0
//! ∫fφ − (∫f)φ(0) − Σ_{i≤n}(∫f x_i)(X^iφ)(0) − Σ_{i,j}∫F_{ij} X^jX^iφ − Σ_{i>n}∫F_i X^iφ = 0
//! ```
//!
//! The radial Taylor expansion behind these identities uses
//! `d/dr φ(δ_r x) = Σ_i w^i r^{w^i−1} x_i (X^iφ)(δ_r x)`, which holds for
//! step ≤ 2; the weak residuals refuse deeper algebras.
//!
//! Radial integrals are taken over the ray `u ↦ δ_u x` (`u = 1/r`) against
//! the multilinear interpolant of the data. The ray is split at every cell
//! face, and on each piece the integrand is a polynomial in `u`, so a
//! Gauss–Legendre rule of `Q + 1` nodes is exact.

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::StratifiedAlgebra;
use crate::error::{Error, Result};
use crate::fields::{left_invariant_frame, FrameCoefficients, SmoothFunction};
use crate::grid::{lattice_box_bounds, Gauge, GridFunction, WeightedNorm};
use crate::quadrature::{gauss_legendre, pairwise_sum};

/// `a0 = ∫f` and the first-layer moments `a[i] = ∫ f x_i`, `i < n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentVector {
    pub a0: f64,
    pub a: Vec<f64>,
}

/// Midpoint moments of `f0` over the first-layer coordinates.
pub fn moments(f0: &GridFunction) -> MomentVector {
    let all = coordinate_moments(f0);
    let n = f0.algebra().horizontal_dim();
    MomentVector {
        a0: f0.integrate(),
        a: all[..n].to_vec(),
    }
}

/// `∫ f x_k` for every coordinate `k`.
pub fn coordinate_moments(f0: &GridFunction) -> Vec<f64> {
    let n = f0.algebra().dim();
    let cv = f0.cell_volume();
    (0..n)
        .map(|k| {
            let terms: Vec<f64> = (0..f0.len())
                .map(|idx| {
                    let v = f0.values()[idx];
                    if v == 0.0 {
                        0.0
                    } else {
                        v * f0.node_coords(idx)[k]
                    }
                })
                .collect();
            pairwise_sum(&terms) * cv
        })
        .collect()
}

/// `∫ f̃ x_i x_j` for the multilinear interpolant `f̃` of the samples.
fn second_moment(f0: &GridFunction, i: usize, j: usize) -> f64 {
    let cv = f0.cell_volume();
    let terms: Vec<f64> = (0..f0.len())
        .map(|idx| {
            let v = f0.values()[idx];
            if v == 0.0 {
                return 0.0;
            }
            let x = f0.node_coords(idx);
            v * x[i] * x[j]
        })
        .collect();
    let mut m = pairwise_sum(&terms) * cv;
    if i == j {
        let h = f0.spacing()[i];
        m += h * h / 6.0 * f0.integrate();
    }
    m
}

/// Where the `F` fields are sampled: the lattice `(m + ½)h` covering the
/// data box and the origin (every dilation cone `{δ_r y : r ≤ 1}` lies in
/// that hull). `h` is `spacing` if given, else the data spacing divided by
/// `oversample`.
#[derive(Debug, Clone)]
pub struct FieldOptions {
    pub spacing: Option<Vec<f64>>,
    pub oversample: usize,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self {
            spacing: None,
            oversample: 2,
        }
    }
}

fn field_grid(f0: &GridFunction, opts: &FieldOptions) -> GridFunction {
    let n = f0.algebra().dim();
    let over = opts.oversample.max(1) as f64;
    let h = opts
        .spacing
        .clone()
        .unwrap_or_else(|| f0.spacing().iter().map(|h| h / over).collect());
    let upper = f0.upper_corner();
    let lo: Vec<f64> = (0..n)
        .map(|k| (f0.origin()[k] - f0.spacing()[k]).min(0.0))
        .collect();
    let hi: Vec<f64> = (0..n)
        .map(|k| (upper[k] + f0.spacing()[k]).max(0.0))
        .collect();
    lattice_box_bounds(f0.algebra_arc().clone(), &lo, &hi, &h)
}

/// Ray integrals `∫ f̃(δ_u x) · weight(u) du` on one node, exact for the
/// multilinear interpolant.
struct RayIntegrator<'a> {
    f: &'a GridFunction,
    weights: Vec<u32>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    gl_x: Vec<f64>,
    gl_w: Vec<f64>,
}

impl<'a> RayIntegrator<'a> {
    fn new(f: &'a GridFunction) -> Self {
        let q = f.algebra().homogeneous_dimension() as usize;
        let (gl_x, gl_w) = gauss_legendre(q + 2);
        let upper = f.upper_corner();
        let n = f.algebra().dim();
        Self {
            f,
            weights: f.algebra().weights().to_vec(),
            lo: (0..n).map(|k| f.origin()[k] - f.spacing()[k]).collect(),
            hi: (0..n).map(|k| upper[k] + f.spacing()[k]).collect(),
            gl_x,
            gl_w,
        }
    }

    /// The interval of `u ∈ [u_min, u_max]` where `δ_u x` can be inside the
    /// interpolant's support, or `None`.
    fn active_range(&self, x: &[f64], u_min: f64, u_max: f64) -> Option<(f64, f64)> {
        let (mut a, mut b) = (u_min, u_max);
        for k in 0..x.len() {
            let w = self.weights[k] as f64;
            if x[k] == 0.0 {
                if !(self.lo[k] < 0.0 && 0.0 < self.hi[k]) {
                    return None;
                }
                continue;
            }
            // coordinate x_k u^w moves monotonically away from 0
            let (near, far) = if x[k] > 0.0 {
                (self.lo[k], self.hi[k])
            } else {
                (-self.hi[k], -self.lo[k])
            };
            let ax = x[k].abs();
            if far <= 0.0 {
                return None;
            }
            let enter = if near > 0.0 {
                (near / ax).powf(1.0 / w)
            } else {
                0.0
            };
            let leave = (far / ax).powf(1.0 / w);
            a = a.max(enter);
            b = b.min(leave);
        }
        (a < b).then_some((a, b))
    }

    /// `Σ_m ∫ f̃(δ_u x) g_m(u) du` over `[u_min, u_max]` for the weight
    /// functions `g` (evaluated together).
    fn integrate<const M: usize>(
        &self,
        x: &[f64],
        u_min: f64,
        u_max: f64,
        g: impl Fn(f64) -> [f64; M],
        breaks: &mut Vec<f64>,
        y: &mut [f64],
    ) -> [f64; M] {
        let mut out = [0.0; M];
        let Some((a, b)) = self.active_range(x, u_min, u_max) else {
            return out;
        };
        breaks.clear();
        breaks.push(a);
        breaks.push(b);
        let f = self.f;
        for k in 0..x.len() {
            if x[k] == 0.0 {
                continue;
            }
            let w = self.weights[k] as f64;
            let h = f.spacing()[k];
            // faces are node lines o + m h, m = −1 ..= shape
            let ya = x[k] * a.powf(w);
            let yb = x[k] * b.powf(w);
            let (ymin, ymax) = if ya < yb { (ya, yb) } else { (yb, ya) };
            let m0 = ((ymin - f.origin()[k]) / h).ceil() as i64;
            let m1 = ((ymax - f.origin()[k]) / h).floor() as i64;
            for m in m0..=m1 {
                let p = f.origin()[k] + m as f64 * h;
                let ratio = p / x[k];
                if ratio > 0.0 {
                    let u = ratio.powf(1.0 / w);
                    if u > a && u < b {
                        breaks.push(u);
                    }
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        for seg in breaks.windows(2) {
            let (s0, s1) = (seg[0], seg[1]);
            if s1 <= s0 {
                continue;
            }
            let half = 0.5 * (s1 - s0);
            let mid = 0.5 * (s1 + s0);
            for (gx, gw) in self.gl_x.iter().zip(&self.gl_w) {
                let u = mid + half * gx;
                for k in 0..x.len() {
                    y[k] = x[k] * u.powi(self.weights[k] as i32);
                }
                let fv = f.interpolate(y);
                if fv == 0.0 {
                    continue;
                }
                let gv = g(u);
                for m in 0..M {
                    out[m] += half * gw * fv * gv[m];
                }
            }
        }
        out
    }
}

/// Per-node radial integrals `J0 = ∫_1^∞ f̃(δ_u x) u^{Q−1} du` and
/// `J1 = ∫_1^∞ f̃(δ_u x) u^{Q−1}(u−1) du`.
fn radial_integrals(f0: &GridFunction, grid: &GridFunction) -> Vec<[f64; 2]> {
    let q = f0.algebra().homogeneous_dimension() as i32;
    let n = f0.algebra().dim();
    let ray = RayIntegrator::new(f0);
    (0..grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], Vec::new()),
            |(x, y, breaks), idx| {
                grid.node_coords_into(idx, x);
                if x.iter().all(|v| *v == 0.0) {
                    return [0.0, 0.0];
                }
                ray.integrate(
                    x,
                    1.0,
                    f64::INFINITY,
                    |u| {
                        let p = u.powi(q - 1);
                        [p, p * (u - 1.0)]
                    },
                    breaks,
                    y,
                )
            },
        )
        .collect()
}

/// `F_i` of the first-case decomposition for every `i` (0-based), sampled
/// on the default field grid.
pub fn fields_f_first(f0: &GridFunction) -> Result<Vec<GridFunction>> {
    fields_f_first_with(f0, &FieldOptions::default())
}

pub fn fields_f_first_with(f0: &GridFunction, opts: &FieldOptions) -> Result<Vec<GridFunction>> {
    let grid = field_grid(f0, opts);
    let j = radial_integrals(f0, &grid);
    let alg = f0.algebra();
    (0..alg.dim())
        .map(|i| {
            let w = alg.weights()[i] as f64;
            let vals = (0..grid.len())
                .map(|idx| w * grid.node_coords(idx)[i] * j[idx][0])
                .collect();
            grid.with_values(vals)
        })
        .collect()
}

/// `F_i(x) = w^i x_i ∫_0^1 f(δ_{1/r}x) r^{−Q−1} dr`, 0-based `i`.
pub fn field_f_first(f0: &GridFunction, i: usize) -> Result<GridFunction> {
    check_index(f0.algebra(), i)?;
    Ok(fields_f_first(f0)?.swap_remove(i))
}

/// `F_i(x) = w^i x_i ∫_0^1 r^{Q−1} f(δ_r x) dr`, the field of the
/// second case (large `p`), 0-based `i`.
pub fn field_f_second(f0: &GridFunction, i: usize) -> Result<GridFunction> {
    check_index(f0.algebra(), i)?;
    let grid = field_grid(f0, &FieldOptions::default());
    let alg = f0.algebra();
    let q = alg.homogeneous_dimension() as i32;
    let w = alg.weights()[i] as f64;
    let n = alg.dim();
    let ray = RayIntegrator::new(f0);
    let vals = (0..grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], Vec::new()),
            |(x, y, breaks), idx| {
                grid.node_coords_into(idx, x);
                if x[i] == 0.0 {
                    return 0.0;
                }
                let [v] = ray.integrate(x, 0.0, 1.0, |r| [r.powi(q - 1)], breaks, y);
                w * x[i] * v
            },
        )
        .collect();
    grid.with_values(vals)
}

/// Fields of the first-order decomposition: symmetric `F_{ij}` (stored for
/// `i ≤ j`) and `F_i` for the non-horizontal directions `i ≥ n`.
#[derive(Debug, Clone)]
pub struct Order1Fields {
    dim: usize,
    horizontal: usize,
    upper: Vec<GridFunction>,
    vertical: Vec<GridFunction>,
}

impl Order1Fields {
    fn tri(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    /// `F_{ij} = F_{ji}`.
    pub fn fij(&self, i: usize, j: usize) -> &GridFunction {
        &self.upper[self.tri(i, j)]
    }

    /// `F_i` for `i ≥ n`; `None` for horizontal directions.
    pub fn fi(&self, i: usize) -> Option<&GridFunction> {
        i.checked_sub(self.horizontal)
            .and_then(|k| self.vertical.get(k))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizontal_dim(&self) -> usize {
        self.horizontal
    }
}

pub fn fields_f_order1(f0: &GridFunction) -> Result<Order1Fields> {
    fields_f_order1_with(f0, &FieldOptions::default())
}

pub fn fields_f_order1_with(f0: &GridFunction, opts: &FieldOptions) -> Result<Order1Fields> {
    let grid = field_grid(f0, opts);
    let j = radial_integrals(f0, &grid);
    let alg = f0.algebra();
    let n = alg.dim();
    let w = alg.weights();
    let coords: Vec<Vec<f64>> = (0..grid.len()).map(|idx| grid.node_coords(idx)).collect();
    let mut upper = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            let c = (w[a] * w[b]) as f64;
            let vals = coords
                .iter()
                .zip(&j)
                .map(|(x, j)| c * x[a] * x[b] * j[1])
                .collect();
            upper.push(grid.with_values(vals)?);
        }
    }
    let horizontal = alg.horizontal_dim();
    let vertical = (horizontal..n)
        .map(|i| {
            let c = (w[i] * (w[i] - 1)) as f64;
            let vals = coords
                .iter()
                .zip(&j)
                .map(|(x, j)| c * x[i] * j[1])
                .collect();
            grid.with_values(vals)
        })
        .collect::<Result<_>>()?;
    Ok(Order1Fields {
        dim: n,
        horizontal,
        upper,
        vertical,
    })
}

fn check_index(alg: &StratifiedAlgebra, i: usize) -> Result<()> {
    if i >= alg.dim() {
        return Err(Error::param(format!(
            "field index {i} out of range for dimension {}",
            alg.dim()
        )));
    }
    Ok(())
}

/// Test function `φ(x) = χ(|x|²) · (c0 + Σ_{i<n} α_i x_i)` with a `C^∞`
/// radial cutoff: `χ = 1` for `|x| ≤ r0` and `χ = 0` for `|x| ≥ r1`
/// (Euclidean norm of the coordinates). `φ` is affine near the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub c0: f64,
    pub tilt: Vec<f64>,
    pub r0: f64,
    pub r1: f64,
}

fn psi(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0; 3];
    }
    let e = (-1.0 / s).exp();
    let s2 = s * s;
    [e, e / s2, e * (1.0 - 2.0 * s) / (s2 * s2)]
}

/// Smooth step `S` with `S = 0` for `s ≤ 0`, `S = 1` for `s ≥ 1`; returns
/// `S, S', S''`.
fn smooth_step(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0; 3];
    }
    if s >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let [a, a1, a2] = psi(s);
    let [b, b1, b2] = psi(1.0 - s);
    let d = a + b;
    let num = a1 * b + a * b1;
    let dn = a2 * b - a * b2;
    let dd = a1 - b1;
    [
        a / d,
        num / (d * d),
        (dn * d - 2.0 * num * dd) / (d * d * d),
    ]
}

impl TestFunction {
    /// Constant `c0` on `|x| ≤ r0`.
    pub fn plateau(c0: f64, r0: f64, r1: f64) -> Result<Self> {
        Self::tilted_plateau(c0, Vec::new(), r0, r1)
    }

    /// `c0 + α·x` on `|x| ≤ r0`; `tilt` holds `α` for the leading coordinates.
    pub fn tilted_plateau(c0: f64, tilt: Vec<f64>, r0: f64, r1: f64) -> Result<Self> {
        if !(r0 >= 0.0 && r1 > r0) {
            return Err(Error::param(format!(
                "plateau radii need 0 ≤ r0 < r1, got {r0}, {r1}"
            )));
        }
        Ok(Self { c0, tilt, r0, r1 })
    }

    /// Support radius `r1`.
    pub fn support_radius(&self) -> f64 {
        self.r1
    }

    fn cutoff(&self, x: &[f64]) -> (f64, f64, f64) {
        let v: f64 = x.iter().map(|c| c * c).sum();
        let span = self.r1 * self.r1 - self.r0 * self.r0;
        let [s, s1, s2] = smooth_step((v - self.r0 * self.r0) / span);
        (1.0 - s, -s1 / span, -s2 / (span * span))
    }

    fn linear(&self, x: &[f64]) -> f64 {
        self.c0 + self.tilt.iter().zip(x).map(|(a, x)| a * x).sum::<f64>()
    }
}

impl SmoothFunction for TestFunction {
    fn value(&self, x: &[f64]) -> f64 {
        let (chi, _, _) = self.cutoff(x);
        if chi == 0.0 {
            0.0
        } else {
            chi * self.linear(x)
        }
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        // χ(v), v = |x|²: ∂_k χ = 2 x_k χ'
        let (chi, d1, _) = self.cutoff(x);
        let l = self.linear(x);
        for k in 0..x.len() {
            let a = self.tilt.get(k).copied().unwrap_or(0.0);
            out[k] = l * 2.0 * x[k] * d1 + chi * a;
        }
    }

    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let (chi, d1, d2) = self.cutoff(x);
        let _ = chi;
        let l = self.linear(x);
        for k in 0..n {
            let ak = self.tilt.get(k).copied().unwrap_or(0.0);
            for m in 0..n {
                let am = self.tilt.get(m).copied().unwrap_or(0.0);
                let delta = if k == m { 1.0 } else { 0.0 };
                let hchi = 4.0 * x[k] * x[m] * d2 + 2.0 * delta * d1;
                out[k * n + m] = l * hchi + 2.0 * x[k] * d1 * am + 2.0 * x[m] * d1 * ak;
            }
        }
    }
}

/// Signed weak-form defect and the reference scale `|∫f0 φ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakResidual {
    pub residual: f64,
    pub reference: f64,
}

impl WeakResidual {
    pub fn abs(&self) -> f64 {
        self.residual.abs()
    }

    pub fn relative(&self) -> f64 {
        self.residual.abs() / self.reference
    }
}

fn require_step_two(alg: &StratifiedAlgebra) -> Result<()> {
    if alg.step() > 2 {
        return Err(Error::StepUnsupported { step: alg.step() });
    }
    Ok(())
}

fn pairing(f: &GridFunction, g: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let n = f.algebra().dim();
    let terms: Vec<f64> = (0..f.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |x, idx| {
                let v = f.values()[idx];
                if v == 0.0 {
                    return 0.0;
                }
                f.node_coords_into(idx, x);
                v * g(x)
            },
        )
        .collect();
    pairwise_sum(&terms) * f.cell_volume()
}

/// `∫ f̃ g` for the multilinear interpolant `f̃`: a 3-point Gauss rule per
/// axis on every cell, including the ramp cells next to the box.
fn interpolant_pairing(f: &GridFunction, g: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let n = f.algebra().dim();
    let (gx, gw) = gauss_legendre(3);
    let cells: Vec<usize> = f.shape().iter().map(|s| s + 1).collect();
    let total: usize = cells.iter().product();
    let per_cell = gw.len().pow(n as u32);
    let terms: Vec<f64> = (0..total)
        .into_par_iter()
        .map_init(
            || (vec![0usize; n], vec![0.0; n]),
            |(c, y), idx| {
                let mut rem = idx;
                for k in (0..n).rev() {
                    c[k] = rem % cells[k];
                    rem /= cells[k];
                }
                let mut acc = 0.0;
                for q in 0..per_cell {
                    let mut r = q;
                    let mut w = 1.0;
                    for k in 0..n {
                        let j = r % gx.len();
                        r /= gx.len();
                        // cell between node c−1 and c
                        y[k] = f.origin()[k]
                            + (c[k] as f64 - 1.0 + 0.5 * (1.0 + gx[j])) * f.spacing()[k];
                        w *= 0.5 * gw[j];
                    }
                    let v = f.interpolate(y);
                    if v != 0.0 {
                        acc += w * v * g(y);
                    }
                }
                acc
            },
        )
        .collect();
    pairwise_sum(&terms) * f.cell_volume()
}

/// `∫ F g` for a field singular at the origin: the midpoint sum of
/// `F·(g − g(0))` plus `g(0)` times the exact total `∫F`.
fn singular_pairing(
    field: &GridFunction,
    exact_total: f64,
    g: impl Fn(&[f64]) -> f64 + Sync,
) -> f64 {
    let g0 = g(&vec![0.0; field.algebra().dim()]);
    pairing(field, |x| g(x) - g0) + g0 * exact_total
}

/// `∫f0φ − (∫f0)φ(0) − Σ_i ∫F_i X^iφ`.
pub fn weak_residual_order0(f0: &GridFunction, phi: &TestFunction) -> Result<WeakResidual> {
    weak_residual_order0_with(f0, phi, &FieldOptions::default())
}

pub fn weak_residual_order0_with(
    f0: &GridFunction,
    phi: &TestFunction,
    opts: &FieldOptions,
) -> Result<WeakResidual> {
    let alg = f0.algebra();
    require_step_two(alg)?;
    let frame = left_invariant_frame(alg);
    let fields = fields_f_first_with(f0, opts)?;
    let first = coordinate_moments(f0);
    let fphi = interpolant_pairing(f0, |x| phi.value(x));
    let origin = vec![0.0; alg.dim()];
    let mut r = fphi - f0.integrate() * phi.value(&origin);
    for (i, field) in fields.iter().enumerate() {
        r -= singular_pairing(field, first[i], |x| field_of(&frame, i, phi, x));
    }
    Ok(WeakResidual {
        residual: r,
        reference: fphi.abs(),
    })
}

/// `∫f0φ − (∫f0)φ(0) − Σ_{i<n} A_i (X^iφ)(0) − Σ_{i,j}∫F_{ij} X^jX^iφ − Σ_{i≥n}∫F_i X^iφ`.
pub fn weak_residual_order1(f0: &GridFunction, phi: &TestFunction) -> Result<WeakResidual> {
    weak_residual_order1_with(f0, phi, &FieldOptions::default())
}

pub fn weak_residual_order1_with(
    f0: &GridFunction,
    phi: &TestFunction,
    opts: &FieldOptions,
) -> Result<WeakResidual> {
    let alg = f0.algebra();
    require_step_two(alg)?;
    let n = alg.dim();
    let frame = left_invariant_frame(alg);
    let fields = fields_f_order1_with(f0, opts)?;
    let first = coordinate_moments(f0);
    let fphi = interpolant_pairing(f0, |x| phi.value(x));
    let origin = vec![0.0; n];
    let mut r = fphi - f0.integrate() * phi.value(&origin);
    for i in 0..alg.horizontal_dim() {
        r -= first[i] * field_of(&frame, i, phi, &origin);
    }
    let w = alg.weights();
    for i in 0..n {
        for j in 0..n {
            let s = (w[i] + w[j]) as f64;
            let total = (w[i] * w[j]) as f64 / (s * (s - 1.0)) * second_moment(f0, i, j);
            r -= singular_pairing(fields.fij(i, j), total, |x| pair_of(&frame, j, i, phi, x));
        }
    }
    for i in alg.horizontal_dim()..n {
        let field = fields.fi(i).expect("vertical field");
        r -= singular_pairing(field, first[i], |x| field_of(&frame, i, phi, x));
    }
    Ok(WeakResidual {
        residual: r,
        reference: fphi.abs(),
    })
}

fn field_of(frame: &FrameCoefficients, i: usize, phi: &TestFunction, x: &[f64]) -> f64 {
    let mut g = vec![0.0; x.len()];
    phi.gradient(x, &mut g);
    frame.apply_to_gradient(i, x, &g)
}

fn pair_of(frame: &FrameCoefficients, j: usize, i: usize, phi: &TestFunction, x: &[f64]) -> f64 {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n * n];
    phi.gradient(x, &mut g);
    phi.hessian(x, &mut h);
    frame.apply_pair_to_derivatives(j, i, x, &g, &h)
}

/// Constant in `‖F_i‖_p ≤ C ‖ |x| f ‖_p` for the first-case field:
/// `w^i ∫_0^1 r^{w^i + Q/p − Q − 1} dr`, or `None` where it diverges.
pub fn bound_factor_first(alg: &StratifiedAlgebra, i: usize, p: f64) -> Option<f64> {
    let w = alg.weights()[i] as f64;
    let e = w + alg.homogeneous_dimension() as f64 / p - alg.homogeneous_dimension() as f64;
    (e > 0.0).then(|| w / e)
}

/// `w^i ∫_0^1 r^{−Q/p + Q − 1 − w^i} dr` for the second-case field.
pub fn bound_factor_second(alg: &StratifiedAlgebra, i: usize, p: f64) -> Option<f64> {
    let w = alg.weights()[i] as f64;
    let q = alg.homogeneous_dimension() as f64;
    let e = -q / p + q - w;
    (e > 0.0).then(|| w / e)
}

/// `w^i w^j ∫_0^1 r^{w^i + w^j − 2 − Q + Q/p}(1 − r) dr` for `F_{ij}`.
pub fn bound_factor_pair(alg: &StratifiedAlgebra, i: usize, j: usize, p: f64) -> Option<f64> {
    let w = alg.weights();
    let q = alg.homogeneous_dimension() as f64;
    let a = (w[i] + w[j]) as f64 + q / p - q - 1.0;
    (a > 0.0).then(|| (w[i] * w[j]) as f64 / (a * (a + 1.0)))
}

/// `w^i (w^i − 1) ∫_0^1 r^{w^i − 2 − Q + Q/p}(1 − r) dr` for the first-order
/// `F_i`, `i ≥ n`.
pub fn bound_factor_vertical(alg: &StratifiedAlgebra, i: usize, p: f64) -> Option<f64> {
    let w = alg.weights()[i] as f64;
    let q = alg.homogeneous_dimension() as f64;
    let b = w + q / p - q - 1.0;
    (b > 0.0).then(|| w * (w - 1.0) / (b * (b + 1.0)))
}

/// One measured norm against its explicit bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormBound {
    pub field: String,
    pub p: f64,
    pub measured: f64,
    pub bound: f64,
}

impl NormBound {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound
    }
}

/// Measures `‖F_i‖_p` and `‖F_{ij}‖_p` for `f0` and compares them with the
/// explicit constants times `‖ |x| f0 ‖_p` and `‖ |x|² f0 ‖_p`, `|x|` being
/// the Euclidean norm of the exponential coordinates.
pub fn norm_bounds(f0: &GridFunction, p: f64) -> Result<Vec<NormBound>> {
    let alg = f0.algebra();
    let weighted = |m: u32| -> Result<f64> {
        Ok(f0.lq_norm(&WeightedNorm::new(p, m)?.with_gauge(Gauge::AlgebraEuclidean)))
    };
    let m1 = weighted(1)?;
    let m2 = weighted(2)?;
    let plain = WeightedNorm::plain(p)?;
    let mut out = Vec::new();
    for (i, field) in fields_f_first(f0)?.iter().enumerate() {
        if let Some(c) = bound_factor_first(alg, i, p) {
            out.push(NormBound {
                field: format!("F_{}", i + 1),
                p,
                measured: field.lq_norm(&plain),
                bound: c * m1,
            });
        }
    }
    if alg.step() <= 2 {
        let o1 = fields_f_order1(f0)?;
        for i in 0..alg.dim() {
            for j in i..alg.dim() {
                if let Some(c) = bound_factor_pair(alg, i, j, p) {
                    out.push(NormBound {
                        field: format!("F_{}{}", i + 1, j + 1),
                        p,
                        measured: o1.fij(i, j).lq_norm(&plain),
                        bound: c * m2,
                    });
                }
            }
        }
        for i in alg.horizontal_dim()..alg.dim() {
            if let Some(c) = bound_factor_vertical(alg, i, p) {
                out.push(NormBound {
                    field: format!("F_{} (first order)", i + 1),
                    p,
                    measured: o1.fi(i).expect("vertical field").lq_norm(&plain),
                    bound: c * m1,
                });
            }
        }
    }
    Ok(out)
}

/// The built-in `(datum, test function)` pairs used to certify the weak
/// identities.
pub fn builtin_pairs() -> Vec<(&'static str, TestFunction)> {
    let tp = |c0: f64, tilt: Vec<f64>, r0: f64, r1: f64| {
        TestFunction::tilted_plateau(c0, tilt, r0, r1).expect("valid radii")
    };
    vec![
        ("gaussian_bump", tp(1.0, vec![0.3, -0.2], 0.2, 1.4)),
        ("shifted_bump", tp(1.0, vec![0.5, 0.4], 0.3, 1.6)),
        ("ring", tp(0.8, vec![-0.3, 0.6], 0.25, 1.5)),
        ("asym_poly_bump", tp(1.2, vec![0.2, 0.2], 0.2, 1.5)),
        ("gaussian_bump", tp(1.0, vec![], 0.1, 0.9)),
    ]
}
