//! Marching-squares level curves and the admissibility report.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::duality::DualFields;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    pub iso: f64,
    pub length: f64,
    pub touches_boundary: bool,
    pub closed: bool,
    pub polyline: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub iso_values: Vec<f64>,
    pub components: Vec<Vec<Component>>,
    /// Longest traced component.
    pub k_observed: f64,
    pub interior_component_count: usize,
    pub min_grad_magnitude: f64,
    /// The traced field was constant; nothing to trace.
    pub constant: bool,
}

impl LevelSetReport {
    pub fn all_components(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().flatten()
    }

    /// `iso,component,x,y` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iso,component,x,y\n");
        for (id, c) in self.all_components().enumerate() {
            for &(x, y) in &c.polyline {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    crate::io::fmt_f64(c.iso),
                    id,
                    crate::io::fmt_f64(x),
                    crate::io::fmt_f64(y)
                ));
            }
        }
        out
    }
}

/// Iso values at the `k/(n+1)` quantiles of `v`, `k = 1..=n`.
pub fn quantile_isos(v: &ScalarField, num_iso: usize) -> Vec<f64> {
    let mut sorted = v.values().to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let last = (sorted.len() - 1) as f64;
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    (1..=num_iso)
        .map(|k| {
            let pos = last * k as f64 / (num_iso + 1) as f64;
            let i = pos.floor() as usize;
            let t = pos - i as f64;
            let q = if i + 1 < sorted.len() { sorted[i] * (1.0 - t) + sorted[i + 1] * t } else { sorted[i] };
            // keep strictly inside the range
            q.clamp(lo, hi)
        })
        .filter(|&q| q > lo && q < hi)
        .collect()
}

pub fn trace(v: &ScalarField, num_iso: usize) -> Result<LevelSetReport> {
    if num_iso == 0 {
        return Err(Error::Invalid("need at least one iso value".into()));
    }
    if !v.is_finite() {
        return Err(Error::Invalid("cannot trace a non-finite field".into()));
    }
    if v.max() == v.min() {
        return Ok(LevelSetReport { constant: true, ..Default::default() });
    }
    trace_at(v, &quantile_isos(v, num_iso))
}

pub fn trace_at(v: &ScalarField, isos: &[f64]) -> Result<LevelSetReport> {
    if v.max() == v.min() {
        return Ok(LevelSetReport { constant: true, ..Default::default() });
    }
    let components: Vec<Vec<Component>> = isos.iter().map(|&c| contour(v, c)).collect();
    let all = components.iter().flatten();
    let k_observed = all.clone().map(|c| c.length).fold(0.0, f64::max);
    let interior = all.filter(|c| !c.touches_boundary).count();
    Ok(LevelSetReport {
        iso_values: isos.to_vec(),
        components,
        k_observed,
        interior_component_count: interior,
        min_grad_magnitude: min_gradient(v),
        constant: false,
    })
}

/// Smallest `|∇v|` over the sampled nodes, with centered differences inside
/// and one-sided differences on the frame.
fn min_gradient(v: &ScalarField) -> f64 {
    let (w, hgt) = v.dims();
    let h = v.spec().h;
    let d = |lo: f64, hi: f64, span: usize| if span == 0 { 0.0 } else { (hi - lo) / (span as f64 * h) };
    let mut best = f64::INFINITY;
    for j in 0..hgt {
        for i in 0..w {
            let (il, ir) = (i.saturating_sub(1), (i + 1).min(w - 1));
            let (jl, jr) = (j.saturating_sub(1), (j + 1).min(hgt - 1));
            let gx = d(v.get(il, j), v.get(ir, j), ir - il);
            let gy = d(v.get(i, jl), v.get(i, jr), jr - jl);
            best = best.min(gx.hypot(gy));
        }
    }
    best
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// `(i, j)`–`(i+1, j)`
    H(usize, usize),
    /// `(i, j)`–`(i, j+1)`
    V(usize, usize),
}

fn contour(v: &ScalarField, iso: f64) -> Vec<Component> {
    let spec: GridSpec = *v.spec();
    let lattice = v.lattice();
    let (w, hgt) = v.dims();
    let inside = |i: usize, j: usize| v.get(i, j) >= iso;

    let edge_point = |e: Edge| -> (f64, f64) {
        let ((i0, j0), (i1, j1)) = match e {
            Edge::H(i, j) => ((i, j), (i + 1, j)),
            Edge::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (a, b) = (v.get(i0, j0), v.get(i1, j1));
        let t = (iso - a) / (b - a);
        let p0 = spec.point(lattice, i0, j0);
        let p1 = spec.point(lattice, i1, j1);
        (p0.0 + t * (p1.0 - p0.0), p0.1 + t * (p1.1 - p0.1))
    };
    let on_frame = |e: Edge| match e {
        Edge::H(_, j) => j == 0 || j == hgt - 1,
        Edge::V(i, _) => i == 0 || i == w - 1,
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..hgt.saturating_sub(1) {
        for i in 0..w.saturating_sub(1) {
            // corners: bottom-left, bottom-right, top-right, top-left
            let c = [inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)];
            let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
            // edge e joins corners e and e+1
            let crossed: Vec<usize> = (0..4).filter(|&e| c[e] != c[(e + 1) % 4]).collect();
            match crossed.len() {
                2 => segments.push((edges[crossed[0]], edges[crossed[1]])),
                4 => {
                    let center = 0.25 * (v.get(i, j) + v.get(i + 1, j) + v.get(i + 1, j + 1) + v.get(i, j + 1));
                    let center_inside = center >= iso;
                    // cut off each corner on the other side from the center;
                    // corner k touches edges k-1 and k
                    for k in 0..4 {
                        if c[k] != center_inside {
                            segments.push((edges[(k + 3) % 4], edges[k]));
                        }
                    }
                }
                _ => {}
            }
        }
    }

    let mut adjacency: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(s);
        adjacency.entry(b).or_default().push(s);
    }

    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start_seg: usize, start: Edge, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut chain = vec![start];
        let mut seg = start_seg;
        let mut at = start;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            chain.push(next);
            at = next;
            match adjacency[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        chain
    };

    // open chains first, starting from edges with a single segment; iterate
    // in segment order so the output is deterministic
    let mut starts: Vec<(usize, Edge)> = Vec::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        for e in [a, b] {
            if adjacency[&e].len() == 1 {
                starts.push((s, e));
            }
        }
    }
    for (s, e) in starts {
        if !used[s] {
            out.push(walk(s, e, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            out.push(walk(s, segments[s].0, &mut used));
        }
    }

    out.into_iter()
        .map(|chain| {
            let closed = chain.len() > 2 && chain.first() == chain.last();
            let touches_boundary = chain.iter().any(|&e| on_frame(e));
            let polyline: Vec<(f64, f64)> = chain.iter().map(|&e| edge_point(e)).collect();
            let length = polyline.windows(2).map(|p| (p[1].0 - p[0].0).hypot(p[1].1 - p[0].1)).sum();
            Component { iso, length, touches_boundary, closed, polyline }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub j_min: f64,
    pub j_max: f64,
    pub mask_fraction: f64,
    pub curl_f_linf: f64,
    pub conservative: bool,
    /// `"u+f"` when a potential of `F` was available, else `"u"`.
    pub traced: String,
    pub admissible: bool,
    pub levelsets: LevelSetReport,
}

pub fn admissibility_report(
    problem: &ProblemSpec,
    u: &ScalarField,
    dual: &DualFields,
    num_iso: usize,
) -> Result<AdmissibilityReport> {
    u.check_compatible(&problem.h)?;
    let off: Vec<usize> = (0..dual.mask.len()).filter(|&k| !dual.mask[k]).collect();
    let range = |vals: &[f64]| -> (f64, f64) {
        if off.is_empty() {
            return (0.0, 0.0);
        }
        off.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| (lo.min(vals[k]), hi.max(vals[k])))
    };
    let (sigma_min, sigma_max) = range(dual.sigma.values());
    let (j_min, j_max) = range(dual.j.magnitude().values());
    let curl_f_linf = problem.f.curl().iter().fold(0.0, |acc: f64, c| acc.max(c.abs()));
    let f_scale = problem.f.norms().linf.max(1.0) / problem.spec.h;
    let conservative = curl_f_linf <= 1e-8 * f_scale;
    let (v, traced) = match &problem.potential {
        Some(f) => (u.add(f)?, "u+f"),
        None => (u.clone(), "u"),
    };
    let levelsets = trace(&v, num_iso)?;
    Ok(AdmissibilityReport {
        sigma_min,
        sigma_max,
        j_min,
        j_max,
        mask_fraction: dual.mask_fraction(),
        curl_f_linf,
        conservative,
        traced: traced.into(),
        admissible: !off.is_empty() && dual.mask_fraction() == 0.0 && sigma_min > 0.0,
        levelsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::{default_eps_char, extract};
    use crate::grid::Lattice;
    use crate::problems::{example_paper, manufacture, radial_recipe, Sampling};

    fn unit(n: usize) -> GridSpec {
        GridSpec::unit_square(n).unwrap()
    }

    #[test]
    fn vertical_line() {
        let v = ScalarField::from_fn(unit(99), Lattice::Interior, |x, _| x);
        let r = trace_at(&v, &[0.5]).unwrap();
        assert_eq!(r.components[0].len(), 1);
        let c = &r.components[0][0];
        assert!(c.touches_boundary && !c.closed);
        // interior nodes span y ∈ [h, 1−h]
        assert!((c.length - 0.98).abs() < 1e-12, "{}", c.length);
    }

    #[test]
    fn circle() {
        let v = ScalarField::from_fn(unit(99), Lattice::Interior, |x, y| {
            (x - 0.5).powi(2) + (y - 0.5).powi(2)
        });
        let r = trace_at(&v, &[0.04]).unwrap();
        assert_eq!(r.components[0].len(), 1);
        let c = &r.components[0][0];
        assert!(c.closed && !c.touches_boundary);
        assert_eq!(c.polyline.first(), c.polyline.last());
        let exact = 2.0 * std::f64::consts::PI * 0.2;
        assert!(((c.length - exact) / exact).abs() < 0.02, "{}", c.length);
        assert_eq!(r.interior_component_count, 1);
    }

    #[test]
    fn constant_field_is_flagged() {
        let v = ScalarField::constant(unit(10), Lattice::Interior, 2.0);
        let r = trace(&v, 3).unwrap();
        assert!(r.constant && r.components.is_empty());
    }

    #[test]
    fn quantile_isos_stay_inside_range() {
        let v = ScalarField::from_fn(unit(20), Lattice::Interior, |x, y| x * y);
        let isos = quantile_isos(&v, 5);
        assert_eq!(isos.len(), 5);
        assert!(isos.windows(2).all(|w| w[0] <= w[1]));
        assert!(isos.iter().all(|&c| c > v.min() && c < v.max()));
    }

    #[test]
    fn saddle_cells_split_consistently() {
        // v = (x−½)(y−½) has a saddle at the center; iso 0 gives the two axes
        let v = ScalarField::from_fn(unit(20), Lattice::Interior, |x, y| (x - 0.5) * (y - 0.5) + 1e-3);
        let r = trace_at(&v, &[0.0]).unwrap();
        assert_eq!(r.components[0].len(), 2);
        assert!(r.components[0].iter().all(|c| c.touches_boundary));
    }

    #[test]
    fn k_observed_is_shift_invariant() {
        let v = ScalarField::from_fn(unit(40), Lattice::Interior, |x, y| (3.0 * x).sin() + y * y);
        let a = trace(&v, 6).unwrap();
        let b = trace(&v.map(|t| t + 10.0), 6).unwrap();
        assert!((a.k_observed - b.k_observed).abs() < 1e-9);
    }

    #[test]
    fn example_level_curves_cross_the_square() {
        // φ = (x+y−1)eʸ has ∇φ = eʸ(1, x+y), parallel to ∇u+F
        let v = ScalarField::from_fn(unit(99), Lattice::Interior, |x, y| (x + y - 1.0) * y.exp());
        let r = trace(&v, 9).unwrap();
        assert!(r.all_components().all(|c| c.touches_boundary));
        assert!(r.k_observed <= 2f64.sqrt() * 1.2, "{}", r.k_observed);
        assert!(r.min_grad_magnitude > 0.9);
    }

    #[test]
    fn example_admissibility() {
        let p = example_paper(unit(99), Sampling::Consistent).unwrap();
        let u = p.exact_u.clone().unwrap();
        let d = extract(&p, &u, default_eps_char(&p)).unwrap();
        let r = admissibility_report(&p, &u, &d, 5).unwrap();
        assert!((r.sigma_min - 1.0).abs() < 1e-6 && (r.sigma_max - 1.0).abs() < 1e-6);
        assert!((r.j_min - 1.0).abs() < 1e-12);
        assert!(r.j_max <= 5f64.sqrt() + 1e-12);
        assert_eq!(r.mask_fraction, 0.0);
        assert!((r.curl_f_linf - 1.0).abs() < 1e-6);
        assert!(!r.conservative && r.traced == "u" && r.admissible);
    }

    #[test]
    fn zero_problem_is_inadmissible() {
        let p = ProblemSpec::zero(unit(8));
        let u = ScalarField::zeros(p.spec, Lattice::Interior);
        let d = extract(&p, &u, default_eps_char(&p)).unwrap();
        let r = admissibility_report(&p, &u, &d, 3).unwrap();
        assert_eq!(r.mask_fraction, 1.0);
        assert!(!r.admissible && r.levelsets.constant);
    }

    #[test]
    fn radial_admissibility() {
        let g = GridSpec::new(1.0, 1.0, 2.0, 2.0, 49, 49).unwrap();
        let p = manufacture(&radial_recipe(&g), g, Sampling::Consistent).unwrap();
        let u = p.exact_u.clone().unwrap();
        let d = extract(&p, &u, default_eps_char(&p)).unwrap();
        let r = admissibility_report(&p, &u, &d, 3).unwrap();
        assert!((r.sigma_min - 1.0).abs() < 1e-12 && (r.sigma_max - 1.0).abs() < 1e-12);
        // the cell lattice spans [1, 2−h]²
        assert!((r.j_min - 2f64.sqrt()).abs() < 1e-12);
        assert!(r.j_max <= 2.0 * 2f64.sqrt());
        assert!(r.conservative);
    }
}
