//! Problem data `(a, F, H)` for `min ∫ a|∇u+F| + Hu`, the unit-square
//! benchmark with exact minimizer `u = xy(1−x)(1−y)`, and a generator for
//! further manufactured problems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{divergence, gradient, GridSpec, Lattice, ScalarField, VectorField};

type Scalar2 = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Vector2 = Box<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// How closed-form data is turned into grid data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// `F = −∇_h u + W` and `H = ∇_h·J` with the grid operators, so the
    /// sampled exact solution is an exact minimizer of the discrete problem.
    #[default]
    Consistent,
    /// Every field is the closed form evaluated at the lattice points.
    Pointwise,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub spec: GridSpec,
    /// Weight, cell lattice.
    pub a: ScalarField,
    /// Cell lattice.
    pub f: VectorField,
    /// Prescribed curvature, interior lattice.
    pub h: ScalarField,
    pub exact_u: Option<ScalarField>,
    pub exact_j: Option<VectorField>,
    /// Interior samples of a potential `f` with `∇f = F`, when `F` is conservative.
    pub potential: Option<ScalarField>,
    pub m: f64,
    pub big_m: f64,
    pub k1: f64,
}

impl ProblemSpec {
    pub fn new(name: impl Into<String>, a: ScalarField, f: VectorField, h: ScalarField) -> Result<Self> {
        let spec = *a.spec();
        if a.lattice() != Lattice::Cell {
            return Err(Error::Mismatch("weight `a` must live on the cell lattice".into()));
        }
        if h.lattice() != Lattice::Interior {
            return Err(Error::Mismatch("`H` must live on the interior lattice".into()));
        }
        if !spec.same_as(f.spec()) || !spec.same_as(h.spec()) {
            return Err(Error::Mismatch("problem fields sampled on different grids".into()));
        }
        if !(a.is_finite() && f.is_finite() && h.is_finite()) {
            return Err(Error::Invalid("problem data contains non-finite values".into()));
        }
        let m = a.min();
        if m <= 0.0 {
            return Err(Error::Invalid(format!("weight must be positive, min a = {m}")));
        }
        Ok(Self {
            name: name.into(),
            spec,
            big_m: a.max(),
            k1: f.norms().l1,
            m,
            a,
            f,
            h,
            exact_u: None,
            exact_j: None,
            potential: None,
        })
    }

    pub fn with_exact(mut self, u: ScalarField, j: Option<VectorField>) -> Result<Self> {
        u.check_compatible(&self.h)?;
        if let Some(j) = &j {
            if !self.spec.same_as(j.spec()) {
                return Err(Error::Mismatch("exact J on a different grid".into()));
            }
        }
        self.exact_u = Some(u);
        self.exact_j = j;
        Ok(self)
    }

    /// Same `a` and `F`, new curvature. Exact fields are dropped since they
    /// belong to the original `H`.
    pub fn with_curvature(&self, h: ScalarField) -> Result<Self> {
        h.check_compatible(&self.h)?;
        let mut p = ProblemSpec::new(self.name.clone(), self.a.clone(), self.f.clone(), h)?;
        p.potential = self.potential.clone();
        Ok(p)
    }

    pub fn zero(spec: GridSpec) -> Self {
        let p = ProblemSpec::new(
            "zero",
            ScalarField::constant(spec, Lattice::Cell, 1.0),
            VectorField::zeros(spec),
            ScalarField::zeros(spec, Lattice::Interior),
        )
        .expect("constant data is valid");
        let mut p = p
            .with_exact(ScalarField::zeros(spec, Lattice::Interior), None)
            .expect("same grid");
        p.potential = Some(ScalarField::zeros(spec, Lattice::Interior));
        p
    }

    /// Checks that `other` shares this problem's grid, weight and `F`.
    pub fn check_same_data(&self, other: &ProblemSpec) -> Result<()> {
        if !self.spec.same_as(&other.spec) {
            return Err(Error::Mismatch("problems live on different grids".into()));
        }
        if self.a != other.a || self.f != other.f {
            return Err(Error::Mismatch("problems differ in `a` or `F`".into()));
        }
        Ok(())
    }
}

/// Weight used by [`Manufactured`].
pub enum Weight {
    /// `a = |W|`, which makes `σ ≡ 1`.
    Magnitude,
    Custom(Scalar2),
}

/// Closed-form recipe for a problem with known minimizer.
///
/// The minimizer `u` must vanish on `∂Ω`. With `∇u + F = W`, the dual field is
/// `J = a W/|W|` and the curvature `H = ∇·J`.
pub struct Manufactured {
    pub name: String,
    pub u: Scalar2,
    pub grad_u: Option<Vector2>,
    pub w: Vector2,
    pub weight: Weight,
    /// Analytic `∇·J`; otherwise centered differences with step `h/4`.
    pub div_j: Option<Scalar2>,
}

impl Manufactured {
    fn weight_at(&self, x: f64, y: f64) -> f64 {
        match &self.weight {
            Weight::Magnitude => {
                let (wx, wy) = (self.w)(x, y);
                wx.hypot(wy)
            }
            Weight::Custom(a) => a(x, y),
        }
    }

    fn j_at(&self, x: f64, y: f64) -> (f64, f64) {
        let (wx, wy) = (self.w)(x, y);
        let s = self.weight_at(x, y) / wx.hypot(wy);
        (s * wx, s * wy)
    }
}

pub fn manufacture(recipe: &Manufactured, spec: GridSpec, sampling: Sampling) -> Result<ProblemSpec> {
    let w_field = VectorField::from_fn(spec, &recipe.w);
    let w_mag = w_field.magnitude();
    let w_scale = w_mag.max().max(1.0);
    if w_mag.min() <= 1e-12 * w_scale {
        return Err(Error::Invalid(format!(
            "manufactured `{}` has |∇u+F| vanishing on the grid (characteristic point)",
            recipe.name
        )));
    }
    let a = ScalarField::from_fn(spec, Lattice::Cell, |x, y| recipe.weight_at(x, y));
    if a.min() <= 0.0 || !a.is_finite() {
        return Err(Error::Invalid(format!("manufactured `{}` has a non-positive weight", recipe.name)));
    }
    let u = ScalarField::from_fn(spec, Lattice::Interior, &recipe.u);
    let j = VectorField::from_fn(spec, |x, y| recipe.j_at(x, y));
    let step = spec.h / 4.0;

    let (f, h) = match sampling {
        Sampling::Consistent => (w_field.sub(&gradient(&u))?, divergence(&j)),
        Sampling::Pointwise => {
            let f = VectorField::from_fn(spec, |x, y| {
                let (gx, gy) = match &recipe.grad_u {
                    Some(g) => g(x, y),
                    None => (
                        ((recipe.u)(x + step, y) - (recipe.u)(x - step, y)) / (2.0 * step),
                        ((recipe.u)(x, y + step) - (recipe.u)(x, y - step)) / (2.0 * step),
                    ),
                };
                let (wx, wy) = (recipe.w)(x, y);
                (wx - gx, wy - gy)
            });
            let h = ScalarField::from_fn(spec, Lattice::Interior, |x, y| match &recipe.div_j {
                Some(d) => d(x, y),
                None => {
                    let dx = recipe.j_at(x + step, y).0 - recipe.j_at(x - step, y).0;
                    let dy = recipe.j_at(x, y + step).1 - recipe.j_at(x, y - step).1;
                    (dx + dy) / (2.0 * step)
                }
            });
            (f, h)
        }
    };
    ProblemSpec::new(recipe.name.clone(), a, f, h)?.with_exact(u, Some(j))
}

/// `u = xy(1−x)(1−y)`, `W = (1, x+y)`, `a = |W|`, `H = 1`.
pub fn paper_recipe() -> Manufactured {
    Manufactured {
        name: "example-4.1".into(),
        u: Box::new(|x, y| x * y * (1.0 - x) * (1.0 - y)),
        grad_u: Some(Box::new(|x, y| {
            ((1.0 - 2.0 * x) * y * (1.0 - y), (1.0 - 2.0 * y) * x * (1.0 - x))
        })),
        w: Box::new(|x, y| (1.0, x + y)),
        weight: Weight::Magnitude,
        div_j: Some(Box::new(|_, _| 1.0)),
    }
}

/// The unit-square benchmark problem; `spec` must cover `(0,1)²`.
pub fn example_paper(spec: GridSpec, sampling: Sampling) -> Result<ProblemSpec> {
    if (spec.x0, spec.y0, spec.x1, spec.y1) != (0.0, 0.0, 1.0, 1.0) {
        return Err(Error::Invalid(format!(
            "example-4.1 is posed on the unit square, got ({}, {})-({}, {})",
            spec.x0, spec.y0, spec.x1, spec.y1
        )));
    }
    manufacture(&paper_recipe(), spec, sampling)
}

/// `W = (cos θ, sin θ)`, `a ≡ 1`: divergence-free dual field, `H = 0`.
pub fn uniform_flow_recipe(theta: f64) -> Manufactured {
    let (c, s) = (theta.cos(), theta.sin());
    Manufactured {
        name: "uniform-flow".into(),
        u: Box::new(|x, y| x * y * (1.0 - x) * (1.0 - y)),
        grad_u: None,
        w: Box::new(move |_, _| (c, s)),
        weight: Weight::Custom(Box::new(|_, _| 1.0)),
        div_j: Some(Box::new(|_, _| 0.0)),
    }
}

/// `W = (x, y)`, `a = |W|` on a domain away from the origin: `J = (x, y)`, `H = 2`.
pub fn radial_recipe(spec: &GridSpec) -> Manufactured {
    let (x0, y0, x1, y1) = (spec.x0, spec.y0, spec.x1, spec.y1);
    Manufactured {
        name: "radial".into(),
        u: Box::new(move |x, y| (x - x0) * (x1 - x) * (y - y0) * (y1 - y)),
        grad_u: None,
        w: Box::new(|x, y| (x, y)),
        weight: Weight::Magnitude,
        div_j: Some(Box::new(|_, _| 2.0)),
    }
}

/// Non-trivial weight: `W = (2 + y, 1 + x)`, `a = 1 + x²`, `u = sin(πx) sin(πy)/10`.
pub fn swirl_recipe() -> Manufactured {
    use std::f64::consts::PI;
    Manufactured {
        name: "swirl".into(),
        u: Box::new(|x, y| 0.1 * (PI * x).sin() * (PI * y).sin()),
        grad_u: None,
        w: Box::new(|x, y| (2.0 + y, 1.0 + x)),
        weight: Weight::Custom(Box::new(|x, _| 1.0 + x * x)),
        div_j: None,
    }
}

/// Looks up a built-in problem by name.
pub fn builtin(name: &str, n: usize, sampling: Sampling) -> Result<ProblemSpec> {
    match name {
        "example-4.1" => example_paper(GridSpec::unit_square(n)?, sampling),
        "zero" => Ok(ProblemSpec::zero(GridSpec::unit_square(n)?)),
        "radial" => {
            let spec = GridSpec::new(1.0, 1.0, 2.0, 2.0, n, n)?;
            manufacture(&radial_recipe(&spec), spec, sampling)
        }
        "swirl" => manufacture(&swirl_recipe(), GridSpec::unit_square(n)?, sampling),
        other => Err(Error::Invalid(format!(
            "unknown problem `{other}` (expected example-4.1, zero, radial, swirl or a manifest path)"
        ))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub m: f64,
    pub big_m: f64,
    pub k1: f64,
    pub h_linf: f64,
    pub c_omega: f64,
    /// `‖H‖_∞ < m / C_Ω`.
    pub smallness_holds: bool,
    /// Sup norm of the discrete curl of `F`; zero for conservative `F`.
    pub curl_f_linf: f64,
}

impl HypothesisReport {
    /// A priori ceiling on `‖u‖₁` given `C₁ = |∫ a|∇u+F| + Hu|`, available only
    /// when the smallness condition holds.
    pub fn l1_ceiling(&self, c1: f64) -> Option<f64> {
        self.smallness_holds.then(|| {
            (self.c_omega * c1 + self.m * self.k1 * self.c_omega)
                / (self.m - self.c_omega * self.h_linf)
        })
    }
}

/// Reports the data bounds and the smallness condition on `H`. `c_omega` is
/// the Poincaré-type constant of the domain, supplied by the caller; 0.5 is a
/// heuristic choice for the unit square.
pub fn validate_hypotheses(p: &ProblemSpec, c_omega: f64) -> Result<HypothesisReport> {
    if c_omega <= 0.0 {
        return Err(Error::Invalid("C_Ω must be positive".into()));
    }
    let h_linf = p.h.norms().linf;
    Ok(HypothesisReport {
        m: p.m,
        big_m: p.big_m,
        k1: p.k1,
        h_linf,
        c_omega,
        smallness_holds: h_linf < p.m / c_omega,
        curl_f_linf: p.f.curl().iter().fold(0.0, |acc, c| acc.max(c.abs())),
    })
}
