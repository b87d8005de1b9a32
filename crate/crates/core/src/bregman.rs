//! Alternating split Bregman iteration for `min ∫ a|∇u+F| + Hu`.
//!
//! With the splitting `d = ∇u` and Bregman variable `b`, one sweep is
//!
//! 1. `Δu = −∇·(b − d) + H/λ`, `u = 0` on `∂Ω`
//! 2. `d = shrink(b + ∇u + F, a/λ) − F`
//! 3. `b = b + ∇u − d`
//!
//! At a fixed point `d = ∇u`, `λ b = a(∇u+F)/|∇u+F|` and `∇·(λ b) = H`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{divergence, gradient, ScalarField, VectorField};
use crate::poisson::PoissonSolver;
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    /// Threshold on `‖u^{k+1} − u^k‖₂ / ‖u^{k+1}‖₂`.
    pub tol: f64,
    pub max_iter: usize,
    pub history_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { lambda: 1.0, tol: 1e-7, max_iter: 20_000, history_stride: 1 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Invalid(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_iter == 0 || self.history_stride == 0 {
            return Err(Error::Invalid("max_iter and history_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: ScalarField,
    pub d: VectorField,
    pub b: VectorField,
    pub iterations: usize,
    pub converged: bool,
    /// Recorded every `history_stride` iterations, plus the final one.
    pub rel_change_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    /// Iteration index of each history entry.
    pub history_iterations: Vec<usize>,
}

impl SolveResult {
    pub fn final_rel_change(&self) -> f64 {
        self.rel_change_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_energy(&self) -> f64 {
        self.energy_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Pointwise shrinkage: with `s = w + F`, returns `max(|s| − a/λ, 0) s/|s| − F`,
/// or `−F` where `s = 0`.
pub fn shrink(w: &VectorField, a: &ScalarField, f: &VectorField, lambda: f64) -> Result<VectorField> {
    if !w.spec().same_as(a.spec()) || !w.spec().same_as(f.spec()) || a.values().len() != w.len() {
        return Err(Error::Mismatch("shrink inputs must share the cell lattice".into()));
    }
    if let Some(k) = a.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::Invalid(format!("weight must be positive, a = {} at flat index {k}", a.values()[k])));
    }
    let mut out = w.clone();
    let (ox, oy) = out.components_mut();
    shrink_into(ox, oy, a.values(), f.x(), f.y(), 1.0 / lambda);
    Ok(out)
}

/// In-place shrink on raw components; `wx, wy` hold `w` on entry.
fn shrink_into(wx: &mut [f64], wy: &mut [f64], a: &[f64], fx: &[f64], fy: &[f64], inv_lambda: f64) {
    for k in 0..wx.len() {
        let sx = wx[k] + fx[k];
        let sy = wy[k] + fy[k];
        let mag = sx.hypot(sy);
        if mag == 0.0 {
            wx[k] = -fx[k];
            wy[k] = -fy[k];
        } else {
            let scale = (mag - a[k] * inv_lambda).max(0.0) / mag;
            wx[k] = scale * sx - fx[k];
            wy[k] = scale * sy - fy[k];
        }
    }
}

/// `h² Σ_cells a|∇u+F| + h² Σ_nodes H u`.
pub fn energy(problem: &ProblemSpec, u: &ScalarField) -> Result<f64> {
    u.check_compatible(&problem.h)?;
    let g = gradient(u);
    Ok(energy_with_gradient(problem, u, &g))
}

fn energy_with_gradient(problem: &ProblemSpec, u: &ScalarField, g: &VectorField) -> f64 {
    let (gx, gy) = (g.x(), g.y());
    let (fx, fy) = (problem.f.x(), problem.f.y());
    let a = problem.a.values();
    let mut s = 0.0;
    for k in 0..a.len() {
        s += a[k] * (gx[k] + fx[k]).hypot(gy[k] + fy[k]);
    }
    let hu: f64 = problem.h.values().iter().zip(u.values()).map(|(h, u)| h * u).sum();
    problem.spec.cell_area() * (s + hu)
}

fn l2_raw(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs the split Bregman iteration from `init = (d⁰, b⁰)`, zero by default.
pub fn solve(
    problem: &ProblemSpec,
    config: &SolverConfig,
    init: Option<(VectorField, VectorField)>,
) -> Result<SolveResult> {
    config.validate()?;
    let spec = problem.spec;
    if problem.a.min() <= 0.0 {
        return Err(Error::Invalid("weight must be positive".into()));
    }
    let (mut d, mut b) = match init {
        Some((d, b)) => {
            if !spec.same_as(d.spec()) || !spec.same_as(b.spec()) {
                return Err(Error::Mismatch("initial d, b on a different grid".into()));
            }
            (d, b)
        }
        None => (VectorField::zeros(spec), VectorField::zeros(spec)),
    };

    let poisson = PoissonSolver::cached(&spec);
    let inv_lambda = 1.0 / config.lambda;
    let h_over_lambda: Vec<f64> = problem.h.values().iter().map(|v| v * inv_lambda).collect();
    let mut u = problem.h.map(|_| 0.0);

    let mut rel_hist = Vec::new();
    let mut energy_hist = Vec::new();
    let mut iters_hist = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=config.max_iter {
        iterations = k;
        // step 1
        let diff = b.sub(&d)?;
        let mut rhs = divergence(&diff).into_values();
        for (r, s) in rhs.iter_mut().zip(&h_over_lambda) {
            *r = -*r + s;
        }
        poisson.solve_in_place(&mut rhs);
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: k });
        }
        let change = l2_raw(rhs.iter().zip(u.values()).map(|(a, b)| a - b));
        let size = l2_raw(rhs.iter().copied());
        u.values_mut().copy_from_slice(&rhs);

        // steps 2 and 3
        let g = gradient(&u);
        {
            let (dx, dy) = d.components_mut();
            for i in 0..dx.len() {
                let (bx, by) = b.at(i);
                dx[i] = bx + g.x()[i];
                dy[i] = by + g.y()[i];
            }
            shrink_into(dx, dy, problem.a.values(), problem.f.x(), problem.f.y(), inv_lambda);
        }
        {
            let (bx, by) = b.components_mut();
            for i in 0..bx.len() {
                bx[i] += g.x()[i] - d.x()[i];
                by[i] += g.y()[i] - d.y()[i];
            }
        }
        if !(d.is_finite() && b.is_finite()) {
            return Err(Error::Diverged { iteration: k });
        }

        let rel = if size > 0.0 { change / size } else { change };
        // u¹ is compared with the implicit u⁰ = 0, which says nothing about
        // convergence when H = 0 makes u¹ vanish too.
        let done = k >= 2 && rel < config.tol;
        converged = done;
        let last = done || k == config.max_iter;
        if k % config.history_stride == 0 || last {
            rel_hist.push(rel);
            energy_hist.push(energy_with_gradient(problem, &u, &g));
            iters_hist.push(k);
        }
        if done {
            break;
        }
    }

    Ok(SolveResult {
        u,
        d,
        b,
        iterations,
        converged,
        rel_change_history: rel_hist,
        energy_history: energy_hist,
        history_iterations: iters_hist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, Lattice};

    fn unit_cell_field(spec: GridSpec, v: (f64, f64)) -> VectorField {
        VectorField::from_fn(spec, move |_, _| v)
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig { lambda: 0.0, ..Default::default() },
            SolverConfig { tol: 1.0, ..Default::default() },
            SolverConfig { tol: 0.0, ..Default::default() },
            SolverConfig { max_iter: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn shrink_zero_input_returns_minus_f() {
        let g = GridSpec::unit_square(2).unwrap();
        let f = unit_cell_field(g, (0.5, -2.0));
        let w = f.scale(-1.0);
        let a = ScalarField::constant(g, Lattice::Cell, 1.0);
        let out = shrink(&w, &a, &f, 1.0).unwrap();
        assert!(out.x().iter().all(|&v| v == -0.5) && out.y().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn shrink_exact_threshold() {
        let g = GridSpec::unit_square(1).unwrap();
        let f = unit_cell_field(g, (1.0, 0.0));
        let w = unit_cell_field(g, (2.0, 4.0)); // s = (3, 4)
        let a = ScalarField::constant(g, Lattice::Cell, 5.0);
        let out = shrink(&w, &a, &f, 1.0).unwrap();
        assert_eq!(out.get(0, 0), (-1.0, 0.0));
    }

    #[test]
    fn shrink_vanishing_threshold_is_identity() {
        let g = GridSpec::unit_square(3).unwrap();
        let f = VectorField::from_fn(g, |x, y| (x, -y));
        let w = VectorField::from_fn(g, |x, y| (y + 0.3, x * x - 1.0));
        let a = ScalarField::constant(g, Lattice::Cell, 1.0);
        let out = shrink(&w, &a, &f, 1e12).unwrap();
        assert!(out.sub(&w).unwrap().norms().linf < 1e-11);
    }

    #[test]
    fn shrink_rejects_nonpositive_weight() {
        let g = GridSpec::unit_square(2).unwrap();
        let z = VectorField::zeros(g);
        let mut a = ScalarField::constant(g, Lattice::Cell, 1.0);
        a.set(1, 1, 0.0);
        assert!(matches!(shrink(&z, &a, &z, 1.0), Err(Error::Invalid(_))));
    }

    #[test]
    fn zero_problem_converges_immediately() {
        let p = ProblemSpec::zero(GridSpec::unit_square(12).unwrap());
        let r = solve(&p, &SolverConfig::default(), None).unwrap();
        assert!(r.converged && r.iterations <= 2);
        assert!(r.u.norms().linf < 1e-14);
        assert_eq!(energy(&p, &r.u).unwrap(), 0.0);
    }

    #[test]
    fn max_iter_stops_without_convergence() {
        let p = crate::problems::example_paper(
            GridSpec::unit_square(9).unwrap(),
            crate::problems::Sampling::Consistent,
        )
        .unwrap();
        let cfg = SolverConfig { max_iter: 1, ..Default::default() };
        let r = solve(&p, &cfg, None).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.rel_change_history.len(), 1);
    }
}
