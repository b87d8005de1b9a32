//! Uniform rectangular grids, nodal fields and the discrete gradient /
//! divergence pair.
//!
//! Index conventions, with `h` the mesh width:
//!
//! * [`Lattice::Interior`]: `nx × ny` values, node `(i, j)` sits at
//!   `(x0 + (i+1)h, y0 + (j+1)h)`. Values outside are taken to be zero.
//! * [`Lattice::Cell`]: `(nx+1) × (ny+1)` values, entry `(i, j)` sits at
//!   `(x0 + i h, y0 + j h)`, the lower-left corner of mesh cell `(i, j)`.
//!
//! Storage is row-major with `x` varying fastest: `values[j * width + i]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQUARE_CELL_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl GridSpec {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
            return Err(Error::Grid("non-finite domain corner".into()));
        }
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::Grid(format!(
                "empty domain ({x0}, {y0})-({x1}, {y1})"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::Grid("node counts must be positive".into()));
        }
        let hx = (x1 - x0) / (nx + 1) as f64;
        let hy = (y1 - y0) / (ny + 1) as f64;
        if (hx - hy).abs() > SQUARE_CELL_RTOL * hx.max(hy) {
            return Err(Error::Grid(format!("cells are not square: hx={hx}, hy={hy}")));
        }
        Ok(Self { x0, y0, x1, y1, nx, ny, h: hx })
    }

    /// `n × n` interior nodes on `(0,1)²`, so `h = 1/(n+1)`.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(0.0, 0.0, 1.0, 1.0, n, n)
    }

    pub fn dims(&self, lattice: Lattice) -> (usize, usize) {
        match lattice {
            Lattice::Interior => (self.nx, self.ny),
            Lattice::Cell => (self.nx + 1, self.ny + 1),
        }
    }

    pub fn len(&self, lattice: Lattice) -> usize {
        let (w, h) = self.dims(lattice);
        w * h
    }

    pub fn point(&self, lattice: Lattice, i: usize, j: usize) -> (f64, f64) {
        let offset = match lattice {
            Lattice::Interior => 1.0,
            Lattice::Cell => 0.0,
        };
        (
            self.x0 + (i as f64 + offset) * self.h,
            self.y0 + (j as f64 + offset) * self.h,
        )
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Quadrature weight `h²`.
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.x0 == other.x0
            && self.y0 == other.y0
            && self.x1 == other.x1
            && self.y1 == other.y1
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::Mismatch(format!(
                "grids differ: {}x{} on ({}, {})-({}, {}) vs {}x{} on ({}, {})-({}, {})",
                self.nx, self.ny, self.x0, self.y0, self.x1, self.y1,
                other.nx, other.ny, other.x0, other.y0, other.x1, other.y1
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lattice {
    /// Interior nodes; zero-Dirichlet unknowns and nodal data such as `H`.
    Interior,
    /// Lower-left corners of the mesh cells; vector fields and the weight `a`.
    Cell,
}

impl Lattice {
    pub fn name(self) -> &'static str {
        match self {
            Lattice::Interior => "interior",
            Lattice::Cell => "cell",
        }
    }
}

impl std::str::FromStr for Lattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(Lattice::Interior),
            "cell" => Ok(Lattice::Cell),
            other => Err(Error::Parse(format!("unknown lattice `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl Norms {
    fn from_magnitudes(h2: f64, mags: impl Iterator<Item = f64>) -> Self {
        let (mut l1, mut sq, mut linf) = (0.0, 0.0, 0.0f64);
        for m in mags {
            l1 += m;
            sq += m * m;
            linf = linf.max(m);
        }
        Norms { l1: h2 * l1, l2: (h2 * sq).sqrt(), linf }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    lattice: Lattice,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec, lattice: Lattice) -> Self {
        Self { spec, lattice, values: vec![0.0; spec.len(lattice)] }
    }

    pub fn constant(spec: GridSpec, lattice: Lattice, c: f64) -> Self {
        Self { spec, lattice, values: vec![c; spec.len(lattice)] }
    }

    /// Samples `f` at every point of `lattice`.
    pub fn from_fn(spec: GridSpec, lattice: Lattice, f: impl Fn(f64, f64) -> f64) -> Self {
        let (w, hgt) = spec.dims(lattice);
        let mut values = Vec::with_capacity(w * hgt);
        for j in 0..hgt {
            for i in 0..w {
                let (x, y) = spec.point(lattice, i, j);
                values.push(f(x, y));
            }
        }
        Self { spec, lattice, values }
    }

    pub fn from_values(spec: GridSpec, lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len(lattice) {
            return Err(Error::Mismatch(format!(
                "expected {} values for the {} lattice, got {}",
                spec.len(lattice),
                lattice.name(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value at flat index {k}")));
        }
        Ok(Self { spec, lattice, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dims(&self) -> (usize, usize) {
        self.spec.dims(self.lattice)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.dims().0 + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let w = self.dims().0;
        self.values[j * w + i] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            lattice: self.lattice,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            spec: self.spec,
            lattice: self.lattice,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norms(&self) -> Norms {
        Norms::from_magnitudes(self.spec.cell_area(), self.values.iter().map(|v| v.abs()))
    }

    /// `h² Σ a·b`.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(self.spec.cell_area() * s)
    }

    pub fn check_compatible(&self, other: &ScalarField) -> Result<()> {
        self.spec.check_same(&other.spec)?;
        if self.lattice != other.lattice {
            return Err(Error::Mismatch(format!(
                "lattices differ: {} vs {}",
                self.lattice.name(),
                other.lattice.name()
            )));
        }
        Ok(())
    }
}

/// Two-component field on the cell lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    spec: GridSpec,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(spec: GridSpec) -> Self {
        let n = spec.len(Lattice::Cell);
        Self { spec, x: vec![0.0; n], y: vec![0.0; n] }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (w, hgt) = spec.dims(Lattice::Cell);
        let mut x = Vec::with_capacity(w * hgt);
        let mut y = Vec::with_capacity(w * hgt);
        for j in 0..hgt {
            for i in 0..w {
                let (px, py) = spec.point(Lattice::Cell, i, j);
                let (vx, vy) = f(px, py);
                x.push(vx);
                y.push(vy);
            }
        }
        Self { spec, x, y }
    }

    pub fn from_components(spec: GridSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = spec.len(Lattice::Cell);
        if x.len() != n || y.len() != n {
            return Err(Error::Mismatch(format!(
                "expected {n} values per component, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite vector component".into()));
        }
        Ok(Self { spec, x, y })
    }

    pub fn from_scalars(x: &ScalarField, y: &ScalarField) -> Result<Self> {
        x.check_compatible(y)?;
        if x.lattice() != Lattice::Cell {
            return Err(Error::Mismatch("vector components must live on the cell lattice".into()));
        }
        Ok(Self { spec: *x.spec(), x: x.values.clone(), y: y.values.clone() })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn components_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.x, &mut self.y)
    }

    pub fn component(&self, axis: usize) -> ScalarField {
        let values = if axis == 0 { self.x.clone() } else { self.y.clone() };
        ScalarField { spec: self.spec, lattice: Lattice::Cell, values }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        let k = j * (self.spec.nx + 1) + i;
        (self.x[k], self.y[k])
    }

    pub fn at(&self, k: usize) -> (f64, f64) {
        (self.x[k], self.y[k])
    }

    pub fn set(&mut self, i: usize, j: usize, v: (f64, f64)) {
        let k = j * (self.spec.nx + 1) + i;
        self.x[k] = v.0;
        self.y[k] = v.1;
    }

    /// Value at the cell lattice point that coincides with interior node `(i, j)`.
    pub fn at_node(&self, i: usize, j: usize) -> (f64, f64) {
        self.get(i + 1, j + 1)
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }

    pub fn magnitude(&self) -> ScalarField {
        ScalarField {
            spec: self.spec,
            lattice: Lattice::Cell,
            values: self.x.iter().zip(&self.y).map(|(a, b)| a.hypot(*b)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &VectorField,
        f: impl Fn((f64, f64), (f64, f64)) -> (f64, f64),
    ) -> Result<Self> {
        self.spec.check_same(&other.spec)?;
        let mut out = VectorField::zeros(self.spec);
        for k in 0..self.len() {
            let (a, b) = f(self.at(k), other.at(k));
            out.x[k] = a;
            out.y[k] = b;
        }
        Ok(out)
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        self.zip_with(other, |a, b| (a.0 + b.0, a.1 + b.1))
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        self.zip_with(other, |a, b| (a.0 - b.0, a.1 - b.1))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            spec: self.spec,
            x: self.x.iter().map(|v| v * c).collect(),
            y: self.y.iter().map(|v| v * c).collect(),
        }
    }

    /// Norms of the pointwise Euclidean magnitude.
    pub fn norms(&self) -> Norms {
        Norms::from_magnitudes(
            self.spec.cell_area(),
            self.x.iter().zip(&self.y).map(|(a, b)| a.hypot(*b)),
        )
    }

    /// `h² Σ p·q`.
    pub fn inner(&self, other: &VectorField) -> Result<f64> {
        self.spec.check_same(&other.spec)?;
        let s: f64 = (0..self.len())
            .map(|k| self.x[k] * other.x[k] + self.y[k] * other.y[k])
            .sum();
        Ok(self.spec.cell_area() * s)
    }

    /// Discrete curl `∂x p_y − ∂y p_x` on the `nx × ny` cells whose four
    /// corners are all lattice points.
    pub fn curl(&self) -> Vec<f64> {
        let (nx, ny, h) = (self.spec.nx, self.spec.ny, self.spec.h);
        let w = nx + 1;
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * w + i;
                let dpy = (self.y[k + 1] - self.y[k]) / h;
                let dpx = (self.x[k + w] - self.x[k]) / h;
                out.push(dpy - dpx);
            }
        }
        out
    }
}

/// Forward-difference gradient of a zero-Dirichlet interior field.
///
/// Entry `(i, j)` of the result is `((U[i+1,j]−U[i,j])/h, (U[i,j+1]−U[i,j])/h)`
/// in full-grid indexing, where `U` is zero on the boundary.
pub fn gradient(u: &ScalarField) -> VectorField {
    assert_eq!(u.lattice(), Lattice::Interior, "gradient expects an interior field");
    let spec = *u.spec();
    let (nx, ny, h) = (spec.nx, spec.ny, spec.h);
    let inv_h = 1.0 / h;
    let full = |i: usize, j: usize| -> f64 {
        if i == 0 || j == 0 || i > nx || j > ny {
            0.0
        } else {
            u.values[(j - 1) * nx + (i - 1)]
        }
    };
    let mut out = VectorField::zeros(spec);
    let w = nx + 1;
    for j in 0..=ny {
        for i in 0..=nx {
            let c = full(i, j);
            out.x[j * w + i] = (full(i + 1, j) - c) * inv_h;
            out.y[j * w + i] = (full(i, j + 1) - c) * inv_h;
        }
    }
    out
}

/// Backward-difference divergence; the negative adjoint of [`gradient`].
pub fn divergence(p: &VectorField) -> ScalarField {
    let spec = *p.spec();
    let (nx, ny, h) = (spec.nx, spec.ny, spec.h);
    let inv_h = 1.0 / h;
    let w = nx + 1;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 1..=ny {
        for i in 1..=nx {
            let k = j * w + i;
            values.push((p.x[k] - p.x[k - 1] + p.y[k] - p.y[k - w]) * inv_h);
        }
    }
    ScalarField { spec, lattice: Lattice::Interior, values }
}

/// `divergence(gradient(u))`, the 5-point Dirichlet Laplacian.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    divergence(&gradient(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1.0, 0.0, 0.0, 1.0, 4, 4).is_err());
        assert!(GridSpec::new(0.0, 0.0, 1.0, 1.0, 0, 4).is_err());
        assert!(GridSpec::new(0.0, 0.0, 1.0, 2.0, 4, 4).is_err());
        let g = GridSpec::new(0.0, 0.0, 1.0, 2.0, 4, 9).unwrap();
        assert!((g.h - 0.2).abs() < 1e-15);
    }

    #[test]
    fn gradient_of_zero_is_zero() {
        let g = GridSpec::unit_square(7).unwrap();
        let p = gradient(&ScalarField::zeros(g, Lattice::Interior));
        assert!(p.x().iter().chain(p.y()).all(|&v| v == 0.0));
    }

    #[test]
    fn single_node_gradient() {
        let g = GridSpec::unit_square(1).unwrap();
        assert_eq!(g.h, 0.5);
        let c = 3.0;
        let u = ScalarField::constant(g, Lattice::Interior, c);
        let p = gradient(&u);
        assert_eq!(p.at_node(0, 0), (-2.0 * c, -2.0 * c));
        // left and bottom neighbours see the jump up from the zero boundary
        assert_eq!(p.get(0, 1), (2.0 * c, 0.0));
        assert_eq!(p.get(1, 0), (0.0, 2.0 * c));
    }

    #[test]
    fn divergence_of_zero_is_zero() {
        let g = GridSpec::unit_square(5).unwrap();
        let d = divergence(&VectorField::zeros(g));
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_of_affine_field() {
        let g = GridSpec::unit_square(99).unwrap();
        let d = divergence(&VectorField::from_fn(g, |x, y| (1.0, x + y)));
        let err = d.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn constant_norms() {
        let g = GridSpec::unit_square(99).unwrap();
        let n = ScalarField::constant(g, Lattice::Interior, 1.0).norms();
        assert!((n.l1 - 0.9801).abs() < 1e-12);
        assert!((n.l2 - 0.99).abs() < 1e-12);
        assert_eq!(n.linf, 1.0);
        let z = ScalarField::zeros(g, Lattice::Interior).norms();
        assert_eq!((z.l1, z.l2, z.linf), (0.0, 0.0, 0.0));
    }

    #[test]
    fn bubble_l1_tends_to_one_36th() {
        let bubble = |x: f64, y: f64| x * y * (1.0 - x) * (1.0 - y);
        let errs: Vec<f64> = [15, 31, 63, 127]
            .iter()
            .map(|&n| {
                let g = GridSpec::unit_square(n).unwrap();
                (ScalarField::from_fn(g, Lattice::Interior, bubble).norms().l1 - 1.0 / 36.0).abs()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        assert!(errs[3] < 1e-5);
    }

    #[test]
    fn inner_product_basics() {
        let g = GridSpec::unit_square(6).unwrap();
        let u = ScalarField::from_fn(g, Lattice::Interior, |x, y| x - 2.0 * y);
        let z = ScalarField::zeros(g, Lattice::Interior);
        assert_eq!(z.inner(&u).unwrap(), 0.0);
        assert!((u.inner(&u).unwrap() - u.norms().l2.powi(2)).abs() < 1e-14);
        let other = GridSpec::unit_square(5).unwrap();
        assert!(matches!(
            u.inner(&ScalarField::zeros(other, Lattice::Interior)),
            Err(Error::Mismatch(_))
        ));
        assert!(u.inner(&ScalarField::zeros(g, Lattice::Cell)).is_err());
    }

    #[test]
    fn curl_of_example_field() {
        // F = −∇u + (1, x+y) has curl 1 for any smooth u
        let g = GridSpec::unit_square(20).unwrap();
        let f = VectorField::from_fn(g, |x, y| (1.0, x + y));
        assert!(f.curl().iter().all(|c| (c - 1.0).abs() < 1e-10));
    }
}
