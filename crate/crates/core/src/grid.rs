//! Sampled functions on the group, their integrals and norms, the group
//! convolution, built-in test data and the CSV grid format.
//!
//! A [`GridFunction`] stores node values on an axis-aligned box in
//! exponential coordinates. Haar measure is Lebesgue measure there, so every
//! integral is a midpoint sum with weight `Π spacing`. Off-node values use
//! multilinear interpolation with implicit zero nodes outside the box, which
//! makes the interpolant integrate to exactly the same midpoint sum.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{GroupPoint, StratifiedAlgebra};
use crate::error::{Error, Result};
use crate::kernel::{HeatKernel, KernelSpec};
use crate::quadrature::pairwise_sum;

/// A compactly supported function sampled on a uniform box.
#[derive(Debug, Clone)]
pub struct GridFunction {
    algebra: Arc<StratifiedAlgebra>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.same_grid(other) && self.values == other.values
    }
}

impl GridFunction {
    /// Row-major values, last axis fastest.
    pub fn new(
        algebra: Arc<StratifiedAlgebra>,
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n = algebra.dim();
        if origin.len() != n || spacing.len() != n || shape.len() != n {
            return Err(Error::GridMismatch(format!(
                "origin/spacing/shape must have {n} entries, got {}/{}/{}",
                origin.len(),
                spacing.len(),
                shape.len()
            )));
        }
        if let Some(h) = spacing.iter().find(|h| !(**h > 0.0) || !h.is_finite()) {
            return Err(Error::GridMismatch(format!(
                "spacing must be positive, got {h}"
            )));
        }
        if shape.contains(&0) {
            return Err(Error::GridMismatch(
                "every axis needs at least one node".into(),
            ));
        }
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::GridMismatch(format!(
                "shape needs {len} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::GridMismatch("grid values must be finite".into()));
        }
        Ok(Self {
            algebra,
            origin,
            spacing,
            shape,
            values,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(
        algebra: Arc<StratifiedAlgebra>,
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
        f: impl Fn(&[f64]) -> f64 + Sync,
    ) -> Self {
        let n = algebra.dim();
        let len: usize = shape.iter().product();
        let mut g = Self {
            algebra,
            origin,
            spacing,
            shape,
            values: Vec::new(),
        };
        g.values = (0..len)
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |x, idx| {
                    g.node_coords_into(idx, x);
                    f(x)
                },
            )
            .collect();
        g
    }

    /// All-zero function on the same grid.
    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(
            self.algebra.clone(),
            self.origin.clone(),
            self.spacing.clone(),
            self.shape.clone(),
            values,
        )
    }

    pub fn algebra(&self) -> &StratifiedAlgebra {
        &self.algebra
    }

    pub fn algebra_arc(&self) -> &Arc<StratifiedAlgebra> {
        &self.algebra
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Same algebra, origin, spacing and shape.
    pub fn same_grid(&self, other: &Self) -> bool {
        *self.algebra == *other.algebra
            && self.origin == other.origin
            && self.spacing == other.spacing
            && self.shape == other.shape
    }

    /// Multi-index of a flat node index.
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for k in (0..self.shape.len()).rev() {
            out[k] = idx % self.shape[k];
            idx /= self.shape[k];
        }
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&m, &s)| acc * s + m)
    }

    /// Coordinates of node `idx`.
    #[inline]
    pub fn node_coords_into(&self, mut idx: usize, out: &mut [f64]) {
        for k in (0..self.shape.len()).rev() {
            let m = idx % self.shape[k];
            idx /= self.shape[k];
            out[k] = self.origin[k] + m as f64 * self.spacing[k];
        }
    }

    pub fn node_coords(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.shape.len()];
        self.node_coords_into(idx, &mut x);
        x
    }

    /// Coordinates of the far corner of the box.
    pub fn upper_corner(&self) -> Vec<f64> {
        (0..self.shape.len())
            .map(|k| self.origin[k] + (self.shape[k] - 1) as f64 * self.spacing[k])
            .collect()
    }

    /// Multilinear interpolation, with zero nodes assumed outside the box.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.shape.len();
        let mut base = [0usize; 8];
        let mut frac = [0.0f64; 8];
        let mut lo_ok = [false; 8];
        let mut hi_ok = [false; 8];
        assert!(n <= 8, "interpolation supports up to 8 dimensions");
        for k in 0..n {
            let s = (x[k] - self.origin[k]) / self.spacing[k];
            if !(s > -1.0 && s < self.shape[k] as f64) {
                return 0.0;
            }
            let f = s.floor();
            let i = f as isize;
            frac[k] = s - f;
            lo_ok[k] = i >= 0;
            hi_ok[k] = i + 1 < self.shape[k] as isize;
            base[k] = if i >= 0 { i as usize } else { 0 };
        }
        let mut total = 0.0;
        'corner: for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            for k in 0..n {
                let up = (corner >> (n - 1 - k)) & 1 == 1;
                let m = if up {
                    if !hi_ok[k] {
                        continue 'corner;
                    }
                    w *= frac[k];
                    if lo_ok[k] {
                        base[k] + 1
                    } else {
                        0
                    }
                } else {
                    if !lo_ok[k] {
                        continue 'corner;
                    }
                    w *= 1.0 - frac[k];
                    base[k]
                };
                idx = idx * self.shape[k] + m;
            }
            if w != 0.0 {
                total += w * self.values[idx];
            }
        }
        total
    }

    /// `∫ f`, the midpoint sum.
    pub fn integrate(&self) -> f64 {
        pairwise_sum(&self.values) * self.cell_volume()
    }

    /// `(∫ |f · ‖x‖^m|^p)^{1/p}`, the maximum for `p = ∞`.
    pub fn lq_norm(&self, norm: &WeightedNorm) -> f64 {
        let alg = &*self.algebra;
        let n = alg.dim();
        let terms: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |x, idx| {
                    let v = self.values[idx];
                    if v == 0.0 {
                        return 0.0;
                    }
                    let mut w = v.abs();
                    if norm.radial_power > 0 {
                        self.node_coords_into(idx, x);
                        w *= norm.gauge.eval(alg, x).powi(norm.radial_power as i32);
                    }
                    if norm.p.is_infinite() {
                        w
                    } else {
                        w.powf(norm.p)
                    }
                },
            )
            .collect();
        if norm.p.is_infinite() {
            terms.iter().cloned().fold(0.0, f64::max)
        } else {
            (pairwise_sum(&terms) * self.cell_volume()).powf(1.0 / norm.p)
        }
    }

    /// Nonzero nodes as `(coords, value · cell volume)` pairs, flattened.
    pub(crate) fn weighted_sources(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.shape.len();
        let cv = self.cell_volume();
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        let mut x = vec![0.0; n];
        for (idx, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                self.node_coords_into(idx, &mut x);
                coords.extend_from_slice(&x);
                weights.push(v * cv);
            }
        }
        (coords, weights)
    }

    /// Writes the CSV grid format.
    pub fn to_csv(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let shape: Vec<String> = self.shape.iter().map(|s| s.to_string()).collect();
        let mut s = format!(
            "# carnot-grid N={} origin={} spacing={} shape={}\n",
            self.shape.len(),
            join(&self.origin),
            join(&self.spacing),
            shape.join(",")
        );
        let mut multi = vec![0; self.shape.len()];
        for (idx, v) in self.values.iter().enumerate() {
            self.unravel(idx, &mut multi);
            for m in &multi {
                let _ = write!(s, "{m},");
            }
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    /// Reads the CSV grid format. Nodes without a row are zero.
    pub fn from_csv(text: &str, algebra: Arc<StratifiedAlgebra>) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty grid file".into(),
        })?;
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let body = header
            .trim()
            .strip_prefix("# carnot-grid")
            .ok_or_else(|| perr(1, "missing `# carnot-grid` header".into()))?;
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for tok in body.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| perr(1, format!("bad header token `{tok}`")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| perr(1, format!("header lacks `{k}`")))
        };
        let n: usize = get("N")?
            .parse()
            .map_err(|e| perr(1, format!("bad N: {e}")))?;
        let floats = |k: &str| -> Result<Vec<f64>> {
            get(k)?
                .split(',')
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| perr(1, format!("bad {k} entry `{f}`: {e}")))
                })
                .collect()
        };
        let origin = floats("origin")?;
        let spacing = floats("spacing")?;
        let shape: Vec<usize> = get("shape")?
            .split(',')
            .map(|f| {
                f.parse::<usize>()
                    .map_err(|e| perr(1, format!("bad shape entry `{f}`: {e}")))
            })
            .collect::<Result<_>>()?;
        if n != algebra.dim() || origin.len() != n || spacing.len() != n || shape.len() != n {
            return Err(perr(
                1,
                format!(
                    "header dimensions do not match the algebra (N={})",
                    algebra.dim()
                ),
            ));
        }
        let len: usize = shape.iter().product();
        let mut values = vec![0.0; len];
        for (lineno, line) in lines {
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != n + 1 {
                return Err(perr(
                    lineno + 1,
                    format!("expected {} fields, got {}", n + 1, parts.len()),
                ));
            }
            let mut idx = 0;
            for k in 0..n {
                let m: usize = parts[k]
                    .parse()
                    .map_err(|e| perr(lineno + 1, format!("bad index `{}`: {e}", parts[k])))?;
                if m >= shape[k] {
                    return Err(perr(
                        lineno + 1,
                        format!("index {m} out of range on axis {k}"),
                    ));
                }
                idx = idx * shape[k] + m;
            }
            values[idx] = parts[n]
                .parse()
                .map_err(|e| perr(lineno + 1, format!("bad value `{}`: {e}", parts[n])))?;
        }
        Self::new(algebra, origin, spacing, shape, values)
    }
}

/// Which gauge weights a norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// The homogeneous norm `‖x‖_R`.
    #[default]
    Homogeneous,
    /// The Euclidean norm of the coordinate vector in the Lie algebra.
    AlgebraEuclidean,
}

impl Gauge {
    pub fn eval(self, alg: &StratifiedAlgebra, x: &[f64]) -> f64 {
        match self {
            Gauge::Homogeneous => alg.hom_norm_slice(x),
            Gauge::AlgebraEuclidean => StratifiedAlgebra::algebra_norm(x),
        }
    }
}

/// `L^p` norm with weight `gauge(x)^radial_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub p: f64,
    pub radial_power: u32,
    pub gauge: Gauge,
}

impl WeightedNorm {
    pub fn new(p: f64, radial_power: u32) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::param(format!("p must be in [1, ∞], got {p}")));
        }
        Ok(Self {
            p,
            radial_power,
            gauge: Gauge::Homogeneous,
        })
    }

    pub fn plain(p: f64) -> Result<Self> {
        Self::new(p, 0)
    }

    pub fn with_gauge(mut self, gauge: Gauge) -> Self {
        self.gauge = gauge;
        self
    }
}

/// `∫ g`.
pub fn integrate(g: &GridFunction) -> f64 {
    g.integrate()
}

/// Weighted `L^p` norm of a grid function; `p = f64::INFINITY` for the max.
pub fn lq_norm(g: &GridFunction, p: f64, radial_power: u32) -> Result<f64> {
    Ok(g.lq_norm(&WeightedNorm::new(p, radial_power)?))
}

/// `(f0 ∗ P_t)(g) = Σ_h f0(h) P_t(h^{-1}·g) · cell volume` at each output
/// point, with `P_t` evaluated at the exact group point.
pub fn group_convolve_kernel(
    f0: &GridFunction,
    spec: &KernelSpec,
    t: f64,
    out_points: &[GroupPoint],
) -> Result<Vec<f64>> {
    let kernel = HeatKernel::new(*spec, f0.algebra())?;
    convolve_with_kernel(f0, &kernel, t, out_points)
}

/// As [`group_convolve_kernel`], reusing a constructed kernel.
pub fn convolve_with_kernel(
    f0: &GridFunction,
    kernel: &HeatKernel,
    t: f64,
    out_points: &[GroupPoint],
) -> Result<Vec<f64>> {
    let alg = f0.algebra();
    if kernel.algebra() != alg {
        return Err(Error::GridMismatch(
            "kernel and grid use different algebras".into(),
        ));
    }
    let n = alg.dim();
    let (coords, weights) = f0.weighted_sources();
    out_points
        .par_iter()
        .map_init(
            || vec![0.0; n],
            |y, g| {
                if g.dim() != n {
                    return Err(Error::GridMismatch(format!(
                        "output point has {} coordinates, expected {n}",
                        g.dim()
                    )));
                }
                let mut acc = 0.0;
                for (h, w) in coords.chunks_exact(n).zip(&weights) {
                    alg.inverse_product_into(h, g.coords(), y);
                    acc += w * kernel.value(t, y)?.value;
                }
                Ok(acc)
            },
        )
        .collect()
}

/// `(f ∗ g2)(g) = Σ_h f(h) g2(h^{-1}·g) · cell volume`, interpolating `g2`
/// multilinearly (zero outside its box).
pub fn group_convolve_grids(
    f: &GridFunction,
    g2: &GridFunction,
    out_points: &[GroupPoint],
) -> Result<Vec<f64>> {
    if f.algebra() != g2.algebra() {
        return Err(Error::GridMismatch(
            "convolution factors use different algebras".into(),
        ));
    }
    let alg = f.algebra();
    let n = alg.dim();
    let (coords, weights) = f.weighted_sources();
    out_points
        .par_iter()
        .map_init(
            || vec![0.0; n],
            |y, g| {
                if g.dim() != n {
                    return Err(Error::GridMismatch(format!(
                        "output point has {} coordinates, expected {n}",
                        g.dim()
                    )));
                }
                let mut acc = 0.0;
                for (h, w) in coords.chunks_exact(n).zip(&weights) {
                    alg.inverse_product_into(h, g.coords(), y);
                    acc += w * g2.interpolate(y);
                }
                Ok(acc)
            },
        )
        .collect()
}

/// All nodes of `g` as group points (for convolving onto a grid).
pub fn grid_points(g: &GridFunction) -> Vec<GroupPoint> {
    (0..g.len())
        .map(|i| GroupPoint::new(g.node_coords(i)))
        .collect()
}

/// Samples at `δ_{√t}(u)` for `u` on a fixed box `|u_k| ≤ R^{w^k}`, the
/// frame in which heat-kernel profiles keep a fixed shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarBox {
    weights: Vec<u32>,
    q_dim: u32,
    radius: f64,
    extents: Vec<f64>,
    nodes: Vec<usize>,
    clip: bool,
    u_points: Vec<Vec<f64>>,
    hom: StratifiedAlgebra,
}

impl SelfSimilarBox {
    /// Odd node counts per axis with spacing at most `du`.
    pub fn with_spacing(alg: &StratifiedAlgebra, radius: f64, du: f64) -> Result<Self> {
        if !(du > 0.0) {
            return Err(Error::param(format!(
                "u-spacing must be positive, got {du}"
            )));
        }
        let nodes = alg
            .weights()
            .iter()
            .map(|&w| 2 * (radius.powi(w as i32) / du).ceil() as usize + 1)
            .collect();
        Self::with_nodes(alg, radius, nodes)
    }

    /// Given node counts per axis; they must be odd so that `u = 0` is a
    /// node.
    pub fn with_nodes(alg: &StratifiedAlgebra, radius: f64, nodes: Vec<usize>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::NonPositiveRadius(radius));
        }
        let extents = alg
            .weights()
            .iter()
            .map(|&w| radius.powi(w as i32))
            .collect();
        Self::build(alg, radius, extents, nodes)
    }

    /// Box `|u_k| ≤ extents[k]` with odd node counts; for profiles whose
    /// spread is not balanced by the dilation weights. The ball used by
    /// [`clip_to_ball`](Self::clip_to_ball) has radius `max_k extents[k]^{1/w^k}`.
    pub fn with_extents(
        alg: &StratifiedAlgebra,
        extents: Vec<f64>,
        nodes: Vec<usize>,
    ) -> Result<Self> {
        if extents.len() != alg.dim() || extents.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::param(format!(
                "self-similar box needs {} positive extents, got {extents:?}",
                alg.dim()
            )));
        }
        let radius = extents
            .iter()
            .zip(alg.weights())
            .fold(0.0f64, |m, (e, &w)| m.max(e.powf(1.0 / w as f64)));
        Self::build(alg, radius, extents, nodes)
    }

    fn build(
        alg: &StratifiedAlgebra,
        radius: f64,
        extents: Vec<f64>,
        nodes: Vec<usize>,
    ) -> Result<Self> {
        if nodes.len() != alg.dim() || nodes.iter().any(|&m| m < 3 || m % 2 == 0) {
            return Err(Error::param(format!(
                "self-similar box needs {} odd node counts ≥ 3, got {nodes:?}",
                alg.dim()
            )));
        }
        let mut b = Self {
            weights: alg.weights().to_vec(),
            q_dim: alg.homogeneous_dimension(),
            radius,
            extents,
            nodes,
            clip: false,
            u_points: Vec::new(),
            hom: alg.clone(),
        };
        b.rebuild();
        Ok(b)
    }

    /// Restrict samples to the ball `‖u‖_R ≤ R` (default off).
    pub fn clip_to_ball(mut self, clip: bool) -> Self {
        self.clip = clip;
        self.rebuild();
        self
    }

    fn rebuild(&mut self) {
        let du = self.u_spacing();
        let total: usize = self.nodes.iter().product();
        let n = self.nodes.len();
        let mut pts = Vec::new();
        let mut u = vec![0.0; n];
        for mut idx in 0..total {
            for k in (0..n).rev() {
                let m = idx % self.nodes[k];
                idx /= self.nodes[k];
                u[k] = (m as f64 - (self.nodes[k] / 2) as f64) * du[k];
            }
            if self.clip && self.hom.hom_norm_slice(&u) > self.radius * (1.0 + 1e-12) {
                continue;
            }
            pts.push(u.clone());
        }
        self.u_points = pts;
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn u_spacing(&self) -> Vec<f64> {
        self.extents
            .iter()
            .zip(&self.nodes)
            .map(|(&e, &m)| 2.0 * e / (m - 1) as f64)
            .collect()
    }

    pub fn u_points(&self) -> &[Vec<f64>] {
        &self.u_points
    }

    pub fn len(&self) -> usize {
        self.u_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_points.is_empty()
    }

    /// Sample points `δ_{√t}(u)`.
    pub fn points(&self, t: f64) -> Vec<GroupPoint> {
        let r = t.sqrt();
        self.u_points
            .iter()
            .map(|u| {
                let mut x = u.clone();
                self.hom.dilate_in_place(r, &mut x);
                GroupPoint::new(x)
            })
            .collect()
    }

    /// Haar weight of one sample: `t^{Q/2} Π du_k`.
    pub fn weight(&self, t: f64) -> f64 {
        t.powf(self.q_dim as f64 / 2.0) * self.u_spacing().iter().product::<f64>()
    }

    /// `L^q` norm of values sampled at [`points`](Self::points); the maximum
    /// of `|v|` for `q = ∞`.
    pub fn lq_norm(&self, values: &[f64], t: f64, q: f64) -> f64 {
        if q.is_infinite() {
            return values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
        let terms: Vec<f64> = values.iter().map(|v| v.abs().powf(q)).collect();
        (pairwise_sum(&terms) * self.weight(t)).powf(1.0 / q)
    }
}

/// Parameters of a built-in datum, keyed by name (`h`, `mass`, …).
pub type DatumParams = BTreeMap<String, f64>;

/// Names accepted by [`builtin_datum`].
pub const BUILTIN_DATA: [&str; 4] = ["gaussian_bump", "shifted_bump", "ring", "asym_poly_bump"];

/// `exp(1 − 1/(1 − s²))` for `|s| < 1`, else 0.
pub fn smooth_bump(s2: f64) -> f64 {
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

/// Deterministic smooth compactly supported test data, normalized to
/// `mass` (default 1). Nodes sit at `(m + ½)h`, `h` defaulting to 0.1.
///
/// * `gaussian_bump`: `exp(−|x|²/(2σ²))` under a smooth cutoff of radius
///   `radius` (σ = 0.4, radius = 1), centred at 0.
/// * `shifted_bump`: the same profile with σ = 0.25, radius = 0.5, centred at
///   `(a, b, c)` = (0.7, −0.3, 0); first moments are `a·mass`, `b·mass`.
/// * `ring`: a bump around the circle of radius `r0` = 0.6 in the first two
///   coordinates, times a bump in the rest.
/// * `asym_poly_bump`: `(1 + 0.4x − 0.3y + 0.1xy + 0.1z)` times the centred
///   bump of radius 1; all first moments are nonzero.
pub fn builtin_datum(
    alg: Arc<StratifiedAlgebra>,
    name: &str,
    params: &DatumParams,
) -> Result<GridFunction> {
    let n = alg.dim();
    let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    let h = get("h", 0.1);
    let mass = get("mass", 1.0);
    if !(h > 0.0) {
        return Err(Error::param(format!(
            "datum spacing h must be positive, got {h}"
        )));
    }
    let allowed: &[&str] = match name {
        "gaussian_bump" => &["h", "mass", "sigma", "radius"],
        "shifted_bump" => &["h", "mass", "sigma", "radius", "a", "b", "c"],
        "ring" => &["h", "mass", "r0", "width", "radius"],
        "asym_poly_bump" => &["h", "mass", "radius"],
        other => return Err(Error::UnknownDatum(other.to_string())),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::param(format!(
            "datum `{name}` has no parameter `{k}`"
        )));
    }
    let mut center = vec![0.0; n];
    type Profile = Box<dyn Fn(&[f64]) -> f64 + Sync>;
    let (extent, profile): (f64, Profile) = match name {
        "gaussian_bump" | "shifted_bump" => {
            let shifted = name == "shifted_bump";
            let sigma = get("sigma", if shifted { 0.25 } else { 0.4 });
            let radius = get("radius", if shifted { 0.5 } else { 1.0 });
            if shifted {
                for (k, key) in ["a", "b", "c"].iter().enumerate().take(n) {
                    center[k] = get(key, [0.7, -0.3, 0.0][k]);
                }
            }
            let c = center.clone();
            (
                radius,
                Box::new(move |x: &[f64]| {
                    let r2: f64 = x.iter().zip(&c).map(|(x, c)| (x - c) * (x - c)).sum();
                    (-r2 / (2.0 * sigma * sigma)).exp() * smooth_bump(r2 / (radius * radius))
                }),
            )
        }
        "ring" => {
            let r0 = get("r0", 0.6);
            let width = get("width", 0.3);
            let radius = get("radius", 0.5);
            (
                (r0 + width).max(radius),
                Box::new(move |x: &[f64]| {
                    let planar = x.iter().take(2).map(|v| v * v).sum::<f64>().sqrt();
                    let rest: f64 = x.iter().skip(2).map(|v| v * v).sum();
                    let s = (planar - r0) / width;
                    smooth_bump(s * s) * smooth_bump(rest / (radius * radius))
                }),
            )
        }
        _ => {
            let radius = get("radius", 1.0);
            (
                radius,
                Box::new(move |x: &[f64]| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let c = |k: usize| x.get(k).copied().unwrap_or(0.0);
                    let poly = 1.0 + 0.4 * c(0) - 0.3 * c(1) + 0.1 * c(0) * c(1) + 0.1 * c(2);
                    poly * smooth_bump(r2 / (radius * radius))
                }),
            )
        }
    };
    let grid = lattice_box(alg, &center, extent, h);
    let raw = GridFunction::from_fn(
        grid.algebra.clone(),
        grid.origin.clone(),
        grid.spacing.clone(),
        grid.shape.clone(),
        |x| profile(x),
    );
    let total = raw.integrate();
    if total == 0.0 {
        return Err(Error::param(format!(
            "datum `{name}` is identically zero at h = {h}"
        )));
    }
    let scale = mass / total;
    let values = raw.values.iter().map(|v| v * scale).collect();
    raw.with_values(values)
}

/// Parses `name` or `name(key=value, …)` into a datum name and parameters.
pub fn parse_datum_spec(spec: &str) -> Result<(String, DatumParams)> {
    let spec = spec.trim();
    let Some(open) = spec.find('(') else {
        return Ok((spec.to_string(), DatumParams::new()));
    };
    let name = spec[..open].trim().to_string();
    let inner = spec[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::param(format!("unbalanced parentheses in `{spec}`")))?;
    let mut params = DatumParams::new();
    for kv in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::param(format!("expected key=value, got `{kv}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| Error::param(format!("bad value for `{}`: {e}", k.trim())))?;
        params.insert(k.trim().to_string(), v);
    }
    Ok((name, params))
}

/// Zero grid on the lattice `(m + ½)h` covering the cube of half-width
/// `extent` around `center`.
pub fn lattice_box(
    alg: Arc<StratifiedAlgebra>,
    center: &[f64],
    extent: f64,
    h: f64,
) -> GridFunction {
    let lo: Vec<f64> = center.iter().map(|c| c - extent).collect();
    let hi: Vec<f64> = center.iter().map(|c| c + extent).collect();
    lattice_box_bounds(alg, &lo, &hi, &vec![h; center.len()])
}

/// Zero grid on the lattice `(m + ½)h_k` whose nodes cover `[lo, hi]`.
pub fn lattice_box_bounds(
    alg: Arc<StratifiedAlgebra>,
    lo: &[f64],
    hi: &[f64],
    h: &[f64],
) -> GridFunction {
    let mut origin = Vec::with_capacity(lo.len());
    let mut shape = Vec::with_capacity(lo.len());
    for k in 0..lo.len() {
        let m0 = (lo[k] / h[k] - 0.5).floor();
        let m1 = (hi[k] / h[k] - 0.5).ceil();
        origin.push((m0 + 0.5) * h[k]);
        shape.push((m1 - m0) as usize + 1);
    }
    let len = shape.iter().product();
    GridFunction {
        algebra: alg,
        origin,
        spacing: h.to_vec(),
        shape,
        values: vec![0.0; len],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn heis() -> Arc<StratifiedAlgebra> {
        Arc::new(StratifiedAlgebra::heisenberg())
    }

    #[test]
    fn unit_cell_integrates_to_one() {
        let mut g = lattice_box(heis(), &[0.0; 3], 0.3, 0.1);
        let cv = g.cell_volume();
        g.values_mut()[13] = 1.0 / cv;
        assert_relative_eq!(g.integrate(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(lq_norm(&g, 1.0, 0).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn sampled_gaussian_integrates_to_one() {
        let e = Arc::new(StratifiedAlgebra::euclidean(3));
        let g = lattice_box(e, &[0.0; 3], 8.0, 0.1);
        let f = GridFunction::from_fn(
            g.algebra_arc().clone(),
            g.origin().to_vec(),
            g.spacing().to_vec(),
            g.shape().to_vec(),
            |x| {
                (2.0 * std::f64::consts::PI).powf(-1.5)
                    * (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()
            },
        );
        assert_relative_eq!(f.integrate(), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_vanishes_outside() {
        let g = GridFunction::from_fn(
            heis(),
            vec![0.0; 3],
            vec![0.5, 0.25, 1.0],
            vec![3, 4, 5],
            |x| 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[2] + x[0] * x[2],
        );
        for idx in 0..g.len() {
            assert_relative_eq!(
                g.interpolate(&g.node_coords(idx)),
                g.values()[idx],
                max_relative = 1e-14
            );
        }
        // multilinear data are reproduced inside cells
        let x = [0.3, 0.4, 2.7];
        assert_relative_eq!(
            g.interpolate(&x),
            1.0 + 0.3 - 0.8 + 1.35 + 0.81,
            max_relative = 1e-13
        );
        assert_eq!(g.interpolate(&[-0.6, 0.0, 0.0]), 0.0);
        // half a cell outside the first node: half of it
        assert_relative_eq!(
            g.interpolate(&[-0.25, 0.0, 0.0]),
            0.5 * g.values()[0],
            max_relative = 1e-14
        );
    }

    #[test]
    fn builtin_data_have_documented_mass_and_moments() {
        for name in BUILTIN_DATA {
            let g = builtin_datum(heis(), name, &DatumParams::new()).unwrap();
            assert_relative_eq!(g.integrate(), 1.0, max_relative = 1e-12);
        }
        let mut p = DatumParams::new();
        p.insert("mass".into(), 2.5);
        let g = builtin_datum(heis(), "ring", &p).unwrap();
        assert_relative_eq!(g.integrate(), 2.5, max_relative = 1e-12);
        assert!(matches!(
            builtin_datum(heis(), "nope", &DatumParams::new()),
            Err(Error::UnknownDatum(_))
        ));
        p.insert("zeta".into(), 1.0);
        assert!(builtin_datum(heis(), "ring", &p).is_err());
    }

    #[test]
    fn datum_spec_parsing() {
        let (n, p) = parse_datum_spec("shifted_bump(a=0.5, h=0.05)").unwrap();
        assert_eq!(n, "shifted_bump");
        assert_eq!(p["a"], 0.5);
        assert_eq!(p["h"], 0.05);
        let (n, p) = parse_datum_spec("ring").unwrap();
        assert_eq!(n, "ring");
        assert!(p.is_empty());
        assert!(parse_datum_spec("ring(h=").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = builtin_datum(heis(), "asym_poly_bump", &[("h".to_string(), 0.25)].into()).unwrap();
        let back = GridFunction::from_csv(&g.to_csv(), heis()).unwrap();
        assert_eq!(back, g);
        let err = GridFunction::from_csv(
            "# carnot-grid N=3 origin=0,0,0 spacing=1,1,1 shape=2,2,2\n0,0,9,1.0\n",
            heis(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn self_similar_box_geometry() {
        let h = StratifiedAlgebra::heisenberg();
        let b = SelfSimilarBox::with_nodes(&h, 3.0, vec![5, 5, 7]).unwrap();
        assert_eq!(b.len(), 175);
        assert_eq!(b.u_spacing(), vec![1.5, 1.5, 3.0]);
        let p = b.points(4.0);
        let u = &b.u_points()[0];
        assert_eq!(p[0].coords(), &[2.0 * u[0], 2.0 * u[1], 4.0 * u[2]]);
        assert_relative_eq!(b.weight(4.0), 16.0 * 1.5 * 1.5 * 3.0);
        let clipped = b.clone().clip_to_ball(true);
        assert!(clipped.len() < b.len());
        assert!(SelfSimilarBox::with_nodes(&h, 3.0, vec![4, 5, 5]).is_err());
    }

    #[test]
    fn self_similar_box_from_extents() {
        let h = StratifiedAlgebra::heisenberg();
        let b = SelfSimilarBox::with_extents(&h, vec![5.0, 5.0, 4.0], vec![11, 11, 9]).unwrap();
        assert_eq!(b.u_spacing(), vec![1.0, 1.0, 1.0]);
        assert_relative_eq!(b.radius(), 5.0);
        assert_eq!(b.len(), 11 * 11 * 9);
        assert!(SelfSimilarBox::with_extents(&h, vec![5.0, 5.0], vec![3, 3, 3]).is_err());
        assert!(SelfSimilarBox::with_extents(&h, vec![5.0, 0.0, 5.0], vec![3, 3, 3]).is_err());
    }
}
