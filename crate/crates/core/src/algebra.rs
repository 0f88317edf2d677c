//! Stratified Lie algebras and exact group arithmetic in exponential
//! coordinates of the first kind.
//!
//! A [`StratifiedAlgebra`] is described by its layer dimensions and a dense
//! table of structure constants `c^k_{ij}` with `[X^i, X^j] = Σ_k c^k_{ij} X^k`.
//! Group elements are [`GroupPoint`]s, i.e. coordinates of `exp(Σ x_i X^i)`.
//! The product is the Baker–Campbell–Hausdorff series, which terminates for
//! nilpotent algebras; steps up to 3 are supported and anything deeper is
//! rejected at construction.
//!
//! ```
//! use carnot::algebra::{StratifiedAlgebra, GroupPoint};
//!
//! let h = StratifiedAlgebra::heisenberg();
//! let p = h.product(&GroupPoint::from(vec![1.0, 0.0, 0.0]), &GroupPoint::from(vec![0.0, 1.0, 0.0]));
//! assert_eq!(p.coords(), &[1.0, 1.0, 0.5]);
//! assert_eq!(h.homogeneous_dimension(), 4);
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest nilpotency step handled by the truncated BCH product.
pub const MAX_STEP: usize = 3;

const INVARIANT_TOL: f64 = 1e-12;

/// Coordinates of a group element `exp(Σ x_i X^i)`. The identity is the zero
/// vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    coords: Vec<f64>,
}

impl GroupPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl From<Vec<f64>> for GroupPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

impl From<&[f64]> for GroupPoint {
    fn from(coords: &[f64]) -> Self {
        Self {
            coords: coords.to_vec(),
        }
    }
}

/// One nonzero structure constant, 0-based: `[X^i, X^j]` has `value` in
/// component `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

/// Static description of a stratified Lie algebra (and of the simply
/// connected group it exponentiates to).
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedAlgebra {
    dim: usize,
    layer_dims: Vec<usize>,
    weights: Vec<u32>,
    // c[(i * dim + j) * dim + k] = c^k_{ij}
    constants: Vec<f64>,
    nonzero: Vec<BracketEntry>,
}

impl StratifiedAlgebra {
    /// Builds and validates an algebra from 0-based bracket entries. Each
    /// entry `(i, j, k, v)` sets `c^k_{ij} = v` and `c^k_{ji} = -v`; a later
    /// entry contradicting an earlier one is an antisymmetry violation.
    pub fn from_brackets(
        layer_dims: Vec<usize>,
        brackets: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let alg = Self::from_brackets_unchecked(layer_dims, brackets)?;
        alg.validate()?;
        Ok(alg)
    }

    /// Like [`from_brackets`](Self::from_brackets) but only checks shapes, so
    /// that invariant violations can be reported separately.
    pub fn from_brackets_unchecked(
        layer_dims: Vec<usize>,
        brackets: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let dim = check_layers(&layer_dims)?;
        let mut constants = vec![0.0; dim * dim * dim];
        let mut set = vec![false; dim * dim * dim];
        for &(i, j, k, v) in brackets {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::InvalidAlgebra(format!(
                    "bracket index ({}, {}, {}) out of range for dimension {dim}",
                    i + 1,
                    j + 1,
                    k + 1
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidAlgebra(format!(
                    "non-finite structure constant for ({}, {}, {})",
                    i + 1,
                    j + 1,
                    k + 1
                )));
            }
            let a = (i * dim + j) * dim + k;
            let b = (j * dim + i) * dim + k;
            if (set[a] && constants[a] != v)
                || (set[b] && constants[b] != -v)
                || (i == j && v != 0.0)
            {
                return Err(Error::Antisymmetry {
                    i: i + 1,
                    j: j + 1,
                    k: k + 1,
                });
            }
            constants[a] = v;
            constants[b] = -v;
            set[a] = true;
            set[b] = true;
        }
        Ok(Self::assemble(layer_dims, constants))
    }

    /// Builds an algebra from a dense constant table without validating the
    /// Lie-algebra invariants. Call [`validate`](Self::validate) afterwards.
    pub fn from_dense_unchecked(layer_dims: Vec<usize>, constants: Vec<f64>) -> Result<Self> {
        let dim = check_layers(&layer_dims)?;
        if constants.len() != dim * dim * dim {
            return Err(Error::InvalidAlgebra(format!(
                "expected {} structure constants, got {}",
                dim * dim * dim,
                constants.len()
            )));
        }
        Ok(Self::assemble(layer_dims, constants))
    }

    fn assemble(layer_dims: Vec<usize>, constants: Vec<f64>) -> Self {
        let dim: usize = layer_dims.iter().sum();
        let weights = layer_dims
            .iter()
            .enumerate()
            .flat_map(|(layer, &d)| std::iter::repeat_n(layer as u32 + 1, d))
            .collect();
        let mut nonzero = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let value = constants[(i * dim + j) * dim + k];
                    if value != 0.0 {
                        nonzero.push(BracketEntry { i, j, k, value });
                    }
                }
            }
        }
        Self {
            dim,
            layer_dims,
            weights,
            constants,
            nonzero,
        }
    }

    /// Checks antisymmetry, grading and the Jacobi identity, in that order,
    /// and reports the first failing index tuple (1-based).
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        let scale = self.constants.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if (self.c(i, j, k) + self.c(j, i, k)).abs() > INVARIANT_TOL * scale {
                        return Err(Error::Antisymmetry {
                            i: i + 1,
                            j: j + 1,
                            k: k + 1,
                        });
                    }
                }
            }
        }
        for e in &self.nonzero {
            if self.weights[e.k] != self.weights[e.i] + self.weights[e.j] {
                return Err(Error::Grading {
                    i: e.i + 1,
                    j: e.j + 1,
                    k: e.k + 1,
                });
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let defect: f64 = (0..n)
                            .map(|m| {
                                self.c(i, j, m) * self.c(m, k, l)
                                    + self.c(j, k, m) * self.c(m, i, l)
                                    + self.c(k, i, m) * self.c(m, j, l)
                            })
                            .sum();
                        if defect.abs() > INVARIANT_TOL * scale * scale {
                            return Err(Error::Jacobi {
                                i: i + 1,
                                j: j + 1,
                                k: k + 1,
                                l: l + 1,
                                defect,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The three-dimensional Heisenberg algebra: `[X^1, X^2] = X^3`.
    pub fn heisenberg() -> Self {
        Self::from_brackets(vec![2, 1], &[(0, 1, 2, 1.0)]).expect("heisenberg algebra is valid")
    }

    /// The abelian algebra `R^n` (step 1, trivial brackets).
    pub fn euclidean(n: usize) -> Self {
        assert!(n >= 1, "euclidean algebra needs n >= 1");
        Self::from_brackets(vec![n], &[]).expect("abelian algebra is valid")
    }

    /// Free nilpotent algebra of rank 2 and step 3 (dimension 5):
    /// `[X^1,X^2]=X^3`, `[X^1,X^3]=X^4`, `[X^2,X^3]=X^5`.
    pub fn free_rank2_step3() -> Self {
        Self::from_brackets(
            vec![2, 1, 2],
            &[(0, 1, 2, 1.0), (0, 2, 3, 1.0), (1, 2, 4, 1.0)],
        )
        .expect("free step-3 algebra is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Layer index `w^i` of every basis vector.
    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// `n = dim L_1`, the number of horizontal directions.
    pub fn horizontal_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Structure constant `c^k_{ij}` (0-based).
    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.constants[(i * self.dim + j) * self.dim + k]
    }

    pub fn structure_constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn nonzero_brackets(&self) -> &[BracketEntry] {
        &self.nonzero
    }

    pub fn is_abelian(&self) -> bool {
        self.nonzero.is_empty()
    }

    /// `Q = Σ_i i · dim L_i`.
    pub fn homogeneous_dimension(&self) -> u32 {
        self.weights.iter().sum()
    }

    /// Lie bracket of two algebra elements, written into `out`.
    #[inline]
    pub fn bracket_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for e in &self.nonzero {
            out[e.k] += e.value * x[e.i] * y[e.j];
        }
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.bracket_into(x, y, &mut out);
        out
    }

    /// BCH product `x + y + ½[x,y] + (1/12)([x,[x,y]] + [y,[y,x]])`, exact
    /// for step ≤ 3.
    #[inline]
    pub fn product_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for k in 0..self.dim {
            out[k] = x[k] + y[k];
        }
        if self.nonzero.is_empty() {
            return;
        }
        if self.step() <= 2 {
            for e in &self.nonzero {
                out[e.k] += 0.5 * e.value * x[e.i] * y[e.j];
            }
            return;
        }
        let xy = self.bracket(x, y);
        let x_xy = self.bracket(x, &xy);
        let yx: Vec<f64> = xy.iter().map(|v| -v).collect();
        let y_yx = self.bracket(y, &yx);
        for k in 0..self.dim {
            out[k] += 0.5 * xy[k] + (x_xy[k] + y_yx[k]) / 12.0;
        }
    }

    pub fn product(&self, x: &GroupPoint, y: &GroupPoint) -> GroupPoint {
        assert_eq!(x.dim(), self.dim, "point dimension mismatch");
        assert_eq!(y.dim(), self.dim, "point dimension mismatch");
        let mut out = vec![0.0; self.dim];
        self.product_into(&x.coords, &y.coords, &mut out);
        GroupPoint::new(out)
    }

    /// `h^{-1} · g` without allocating the inverse.
    #[inline]
    pub fn inverse_product_into(&self, h: &[f64], g: &[f64], out: &mut [f64]) {
        if self.step() <= 2 {
            for k in 0..self.dim {
                out[k] = g[k] - h[k];
            }
            for e in &self.nonzero {
                out[e.k] -= 0.5 * e.value * h[e.i] * g[e.j];
            }
        } else {
            let neg: Vec<f64> = h.iter().map(|v| -v).collect();
            self.product_into(&neg, g, out);
        }
    }

    /// `exp(X)^{-1} = exp(-X)`: negation in exponential coordinates.
    pub fn inverse(&self, x: &GroupPoint) -> GroupPoint {
        GroupPoint::new(x.coords.iter().map(|v| -v).collect())
    }

    /// Anisotropic dilation `δ_r`, scaling coordinate `i` by `r^{w^i}`.
    pub fn dilate(&self, r: f64, x: &GroupPoint) -> Result<GroupPoint> {
        if !(r > 0.0) {
            return Err(Error::NonPositiveRadius(r));
        }
        let mut out = x.coords.clone();
        self.dilate_in_place(r, &mut out);
        Ok(GroupPoint::new(out))
    }

    #[inline]
    pub fn dilate_in_place(&self, r: f64, x: &mut [f64]) {
        let r2 = r * r;
        for (v, &w) in x.iter_mut().zip(&self.weights) {
            *v *= match w {
                1 => r,
                2 => r2,
                _ => r2 * r,
            };
        }
    }

    /// Jacobian determinant of `δ_r` in exponential coordinates, `r^Q`.
    pub fn dilation_jacobian(&self, r: f64) -> f64 {
        self.weights.iter().map(|&w| r.powi(w as i32)).product()
    }

    /// Euclidean norm `|X_i|` of the layer-`layer` (1-based) block of `x`.
    pub fn layer_norm(&self, x: &[f64], layer: usize) -> f64 {
        x.iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w as usize == layer)
            .map(|(v, _)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Homogeneous norm `(Σ_i |X_i|^{2(s!)/i})^{1/(2(s!))}`; degree-1
    /// homogeneous under [`dilate`](Self::dilate).
    pub fn hom_norm(&self, x: &GroupPoint) -> f64 {
        self.hom_norm_slice(&x.coords)
    }

    pub fn hom_norm_slice(&self, x: &[f64]) -> f64 {
        let s = self.step();
        let exponent = 2 * factorial(s) as i32;
        // |X_i|^{1/i} are degree-1 quantities; factor out the largest to avoid
        // overflow in the high powers.
        let roots: Vec<f64> = (1..=s)
            .map(|i| self.layer_norm(x, i).powf(1.0 / i as f64))
            .collect();
        let m = roots.iter().cloned().fold(0.0f64, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        let sum: f64 = roots.iter().map(|r| (r / m).powi(exponent)).sum();
        m * sum.powf(1.0 / exponent as f64)
    }

    /// Euclidean norm of the coordinate vector, i.e. the norm of the
    /// orthonormal inner product on the whole algebra.
    pub fn algebra_norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Serializes to the key-value text format read by [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        let mut s = String::from("# carnot algebra\n");
        s.push_str(&format!("dim = {}\n", self.dim));
        s.push_str(&format!("step = {}\n", self.step()));
        let dims: Vec<String> = self.layer_dims.iter().map(|d| d.to_string()).collect();
        s.push_str(&format!("layer_dims = {}\n", dims.join(", ")));
        for e in &self.nonzero {
            if e.i < e.j {
                s.push_str(&format!(
                    "bracket = {}, {}, {}, {:e}\n",
                    e.i + 1,
                    e.j + 1,
                    e.k + 1,
                    e.value
                ));
            }
        }
        s
    }

    /// Parses and validates the text format.
    ///
    /// ```text
    /// # comments start with '#'
    /// dim = 3
    /// step = 2
    /// layer_dims = 2, 1
    /// bracket = 1, 2, 3, 1.0    # [X^1, X^2] = 1.0 X^3 (1-based)
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let alg = Self::parse_unchecked(text)?;
        alg.validate()?;
        Ok(alg)
    }

    /// Parses the text format, checking shapes but not Lie invariants.
    pub fn parse_unchecked(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut step = None;
        let mut layer_dims: Option<Vec<usize>> = None;
        let mut brackets = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected `key = value`, got `{line}`")))?;
            let fields: Vec<&str> = value
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let int = |f: &str| {
                f.parse::<usize>()
                    .map_err(|e| perr(format!("bad integer `{f}`: {e}")))
            };
            match key.trim() {
                "dim" => dim = Some(int(value.trim())?),
                "step" => step = Some(int(value.trim())?),
                "layer_dims" => {
                    layer_dims = Some(fields.iter().map(|f| int(f)).collect::<Result<_>>()?)
                }
                "bracket" => {
                    if fields.len() != 4 {
                        return Err(perr(format!(
                            "bracket needs `i, j, k, value`, got `{}`",
                            value.trim()
                        )));
                    }
                    let (i, j, k) = (int(fields[0])?, int(fields[1])?, int(fields[2])?);
                    if i == 0 || j == 0 || k == 0 {
                        return Err(perr("bracket indices are 1-based".into()));
                    }
                    let v: f64 = fields[3]
                        .parse()
                        .map_err(|e| perr(format!("bad value `{}`: {e}", fields[3])))?;
                    brackets.push((i - 1, j - 1, k - 1, v));
                }
                other => return Err(perr(format!("unknown key `{other}`"))),
            }
        }
        let layer_dims =
            layer_dims.ok_or_else(|| Error::InvalidAlgebra("missing `layer_dims`".into()))?;
        let total: usize = layer_dims.iter().sum();
        if let Some(d) = dim {
            if d != total {
                return Err(Error::InvalidAlgebra(format!(
                    "dim = {d} but layer_dims sum to {total}"
                )));
            }
        }
        if let Some(s) = step {
            if s != layer_dims.len() {
                return Err(Error::InvalidAlgebra(format!(
                    "step = {s} but {} layer dimension(s) given",
                    layer_dims.len()
                )));
            }
        }
        Self::from_brackets_unchecked(layer_dims, &brackets)
    }
}

impl fmt::Display for StratifiedAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stratified algebra N={} step={} layers={:?} Q={}",
            self.dim,
            self.step(),
            self.layer_dims,
            self.homogeneous_dimension()
        )
    }
}

fn check_layers(layer_dims: &[usize]) -> Result<usize> {
    if layer_dims.is_empty() {
        return Err(Error::InvalidAlgebra(
            "at least one layer is required".into(),
        ));
    }
    if layer_dims.len() > MAX_STEP {
        return Err(Error::StepUnsupported {
            step: layer_dims.len(),
        });
    }
    if layer_dims.contains(&0) {
        return Err(Error::InvalidAlgebra(
            "layer dimensions must be positive".into(),
        ));
    }
    Ok(layer_dims.iter().sum())
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}
