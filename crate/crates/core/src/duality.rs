//! Dual field `J = a(∇u+F)/|∇u+F|`, the factor `σ = a/|∇u+F|`, and the
//! residuals that certify a computed `u` as a minimizer: `∇·J = H`, `|J| ≤ a`
//! and a vanishing gap `E(u) − ⟨F, J⟩`.

use serde::{Deserialize, Serialize};

use crate::bregman::energy;
use crate::error::Result;
use crate::grid::{divergence, gradient, Lattice, ScalarField, VectorField};
use crate::problems::ProblemSpec;

/// Relative threshold below which `|∇u+F|` counts as characteristic; scaled
/// by the weight's lower bound `m`.
pub const EPS_CHAR_REL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DualFields {
    pub j: VectorField,
    /// Cell lattice; zero on the characteristic mask.
    pub sigma: ScalarField,
    /// Cell lattice; `true` where `|∇u+F| < eps_char`.
    pub mask: Vec<bool>,
}

impl DualFields {
    pub fn mask_fraction(&self) -> f64 {
        if self.mask.is_empty() {
            return 0.0;
        }
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }

    pub fn mask_field(&self) -> ScalarField {
        let values = self.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        ScalarField::from_values(*self.j.spec(), Lattice::Cell, values).expect("mask has cell length")
    }
}

pub fn default_eps_char(problem: &ProblemSpec) -> f64 {
    EPS_CHAR_REL * problem.m
}

pub fn extract(problem: &ProblemSpec, u: &ScalarField, eps_char: f64) -> Result<DualFields> {
    u.check_compatible(&problem.h)?;
    let g = gradient(u).add(&problem.f)?;
    let a = problem.a.values();
    let spec = problem.spec;
    let n = g.len();
    let mut jx = vec![0.0; n];
    let mut jy = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    let mut mask = vec![false; n];
    for k in 0..n {
        let (gx, gy) = g.at(k);
        let mag = gx.hypot(gy);
        if mag < eps_char {
            mask[k] = true;
        } else {
            let s = a[k] / mag;
            jx[k] = s * gx;
            jy[k] = s * gy;
            sigma[k] = s;
        }
    }
    Ok(DualFields {
        j: VectorField::from_components(spec, jx, jy)?,
        sigma: ScalarField::from_values(spec, Lattice::Cell, sigma)?,
        mask,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FeasibilityResiduals {
    /// `‖∇·J − H‖₁` over nodes whose stencil avoids the mask.
    pub div_residual_l1: f64,
    /// `max(|J| − a, 0)` in the sup norm.
    pub magnitude_violation_linf: f64,
    pub energy: f64,
    /// `⟨F, J⟩`
    pub pairing: f64,
    /// `energy − pairing`
    pub gap: f64,
}

/// Interior nodes `(i, j)` whose divergence stencil touches a masked cell.
fn stencil_touches_mask(mask: &[bool], nx: usize, ny: usize) -> Vec<bool> {
    let w = nx + 1;
    let mut out = Vec::with_capacity(nx * ny);
    for q in 1..=ny {
        for p in 1..=nx {
            let k = q * w + p;
            out.push(mask[k] || mask[k - 1] || mask[k - w]);
        }
    }
    out
}

pub fn feasibility_residuals(
    problem: &ProblemSpec,
    u: &ScalarField,
    dual: &DualFields,
) -> Result<FeasibilityResiduals> {
    let spec = problem.spec;
    let div = divergence(&dual.j);
    let skip = stencil_touches_mask(&dual.mask, spec.nx, spec.ny);
    let div_residual: f64 = div
        .values()
        .iter()
        .zip(problem.h.values())
        .zip(&skip)
        .filter(|(_, &s)| !s)
        .map(|((d, h), _)| (d - h).abs())
        .sum();
    let mag = dual.j.magnitude();
    let violation = mag
        .values()
        .iter()
        .zip(problem.a.values())
        .map(|(j, a)| (j - a).max(0.0))
        .fold(0.0, f64::max);
    let energy = energy(problem, u)?;
    let pairing = problem.f.inner(&dual.j)?;
    Ok(FeasibilityResiduals {
        div_residual_l1: spec.cell_area() * div_residual,
        magnitude_violation_linf: violation,
        energy,
        pairing,
        gap: energy - pairing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::problems::{example_paper, Sampling};

    #[test]
    fn exact_example_fields() {
        let g = GridSpec::unit_square(99).unwrap();
        let p = example_paper(g, Sampling::Consistent).unwrap();
        let u = p.exact_u.clone().unwrap();
        let d = extract(&p, &u, default_eps_char(&p)).unwrap();
        assert_eq!(d.mask_fraction(), 0.0);
        assert!(d.sigma.values().iter().all(|s| (s - 1.0).abs() < 1e-12));
        let jx = p.exact_j.as_ref().unwrap();
        assert!(d.j.sub(jx).unwrap().norms().linf < 1e-12);

        let r = feasibility_residuals(&p, &u, &d).unwrap();
        assert!(r.div_residual_l1 < 1e-9, "{}", r.div_residual_l1);
        assert!(r.magnitude_violation_linf < 1e-12);
        assert!(r.gap.abs() < 1e-10, "{}", r.gap);
        // the pairing tends to 79/36 at first order
        assert!((r.pairing - 79.0 / 36.0).abs() < 2.0 * g.h * 2.0, "{}", r.pairing);
    }

    #[test]
    fn pointwise_sampling_residuals_are_first_order() {
        let g = GridSpec::unit_square(99).unwrap();
        let p = example_paper(g, Sampling::Pointwise).unwrap();
        let u = p.exact_u.clone().unwrap();
        let d = extract(&p, &u, default_eps_char(&p)).unwrap();
        let r = feasibility_residuals(&p, &u, &d).unwrap();
        assert!(r.div_residual_l1 < 5.0 * g.h, "{}", r.div_residual_l1);
        assert!((r.pairing - 79.0 / 36.0).abs() < 5.0 * g.h);
    }

    #[test]
    fn characteristic_node_is_masked() {
        let g = GridSpec::unit_square(3).unwrap();
        let p = ProblemSpec::zero(g);
        let u = ScalarField::zeros(g, Lattice::Interior);
        let d = extract(&p, &u, 1e-8).unwrap();
        assert_eq!(d.mask_fraction(), 1.0);
        assert!(d.j.norms().linf == 0.0 && d.sigma.norms().linf == 0.0);
        let r = feasibility_residuals(&p, &u, &d).unwrap();
        assert_eq!((r.div_residual_l1, r.magnitude_violation_linf, r.gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn magnitude_equals_weight_off_mask() {
        let g = GridSpec::unit_square(17).unwrap();
        let p = example_paper(g, Sampling::Pointwise).unwrap();
        let u = ScalarField::from_fn(g, Lattice::Interior, |x, y| (7.0 * x).sin() * (3.0 * y).cos());
        let d = extract(&p, &u, default_eps_char(&p)).unwrap();
        let mag = d.j.magnitude();
        for k in 0..d.mask.len() {
            if !d.mask[k] {
                assert!((mag.values()[k] - p.a.values()[k]).abs() < 1e-12);
            }
        }
    }
}
