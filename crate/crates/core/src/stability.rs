//! Perturbation experiments on the prescribed curvature `H`.
//!
//! A noisy curvature `H̃ = H + γR` is built from i.i.d. standard normal `R`
//! with `γ = δ‖H‖/‖R‖`. For every perturbed solve we record how far `ũ`,
//! `∇ũ`, `J̃` and `σ̃` move, evaluate both sides of the energy, alignment and
//! `L¹` inequalities on the computed fields, and fit log-log decay exponents
//! against `ε = ‖H − H̃‖_∞`.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bregman::{self, energy, SolveResult, SolverConfig};
use crate::duality::{default_eps_char, extract, DualFields};
use crate::error::{Error, Result};
use crate::grid::{gradient, ScalarField, VectorField};
use crate::parallel::{map_ordered, Execution};
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NoiseNorm {
    /// Euclidean norm of the raw node values, no `h²` weight.
    #[default]
    L2Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub delta: f64,
    pub seed: u64,
    pub norm_kind: NoiseNorm,
}

impl NoiseModel {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Invalid(format!("noise level must be nonnegative, got {delta}")));
        }
        Ok(Self { delta, seed, norm_kind: NoiseNorm::L2Grid })
    }
}

#[derive(Debug, Clone)]
pub struct Perturbed {
    pub h: ScalarField,
    pub gamma: f64,
    /// `H ≡ 0` with `δ > 0`: the scaling collapses to `γ = 0`.
    pub degenerate: bool,
}

fn raw_l2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn perturb(h: &ScalarField, model: &NoiseModel) -> Perturbed {
    if model.delta == 0.0 {
        return Perturbed { h: h.clone(), gamma: 0.0, degenerate: false };
    }
    let h_norm = raw_l2(h.values());
    if h_norm == 0.0 {
        return Perturbed { h: h.clone(), gamma: 0.0, degenerate: true };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let n = h.values().len();
    let (r, r_norm) = loop {
        let r: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = raw_l2(&r);
        if norm > 0.0 {
            break (r, norm);
        }
    };
    let gamma = model.delta * h_norm / r_norm;
    let mut out = h.clone();
    for (v, r) in out.values_mut().iter_mut().zip(&r) {
        *v += gamma * r;
    }
    Perturbed { h: out, gamma, degenerate: false }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyStability {
    /// `|E(u) − Ẽ(ũ)|`
    pub lhs: f64,
    /// `max(‖u‖₁, ‖ũ‖₁) ‖H − H̃‖_∞`
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Compares minimum energies of two problems that differ only in `H`.
pub fn check_energy_stability(
    p: &ProblemSpec,
    p_tilde: &ProblemSpec,
    u: &ScalarField,
    u_tilde: &ScalarField,
    solver_tol: f64,
) -> Result<EnergyStability> {
    p.check_same_data(p_tilde)?;
    let e = energy(p, u)?;
    let e_tilde = energy(p_tilde, u_tilde)?;
    let eps = p.h.sub(&p_tilde.h)?.norms().linf;
    let lhs = (e - e_tilde).abs();
    let rhs = u.norms().l1.max(u_tilde.norms().l1) * eps;
    let slack = 10.0 * (p.spec.h + solver_tol) * (1.0 + e.abs());
    Ok(EnergyStability { lhs, rhs, slack, holds: lhs <= rhs + slack })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JAlignment {
    /// `h² Σ (|J||J̃| − J·J̃)`
    pub lemma24_lhs: f64,
    /// `‖J − J̃‖₁`
    pub theorem25_lhs: f64,
    /// `√(2|Ω|) (lemma24_lhs)^½`
    pub theorem25_rhs: f64,
    /// Smallest `(|J||J̃| − J·J̃)/a²` over unmasked cells.
    pub min_alignment: f64,
    /// Largest `| |J−J̃|² − (2a² − 2J·J̃) |` over unmasked cells.
    pub identity_error: f64,
    pub cells: usize,
}

/// Alignment integrals over cells outside both characteristic masks.
pub fn check_j_alignment(dual: &DualFields, dual_tilde: &DualFields, a: &ScalarField) -> Result<JAlignment> {
    let spec = *dual.j.spec();
    if !spec.same_as(dual_tilde.j.spec()) || !spec.same_as(a.spec()) {
        return Err(Error::Mismatch("alignment inputs on different grids".into()));
    }
    let (mut l24, mut l1, mut min_align, mut ident) = (0.0, 0.0, f64::INFINITY, 0.0f64);
    let mut cells = 0;
    for k in 0..dual.j.len() {
        if dual.mask[k] || dual_tilde.mask[k] {
            continue;
        }
        cells += 1;
        let (jx, jy) = dual.j.at(k);
        let (tx, ty) = dual_tilde.j.at(k);
        let dot = jx * tx + jy * ty;
        let term = jx.hypot(jy) * tx.hypot(ty) - dot;
        let diff = (jx - tx).hypot(jy - ty);
        let ak = a.values()[k];
        l24 += term;
        l1 += diff;
        min_align = min_align.min(term / (ak * ak));
        ident = ident.max((diff * diff - (2.0 * ak * ak - 2.0 * dot)).abs());
    }
    let h2 = spec.cell_area();
    let lemma24_lhs = h2 * l24;
    Ok(JAlignment {
        lemma24_lhs,
        theorem25_lhs: h2 * l1,
        theorem25_rhs: (2.0 * spec.area()).sqrt() * lemma24_lhs.max(0.0).sqrt(),
        min_alignment: if cells == 0 { 0.0 } else { min_align },
        identity_error: ident,
        cells,
    })
}

#[derive(Debug, Clone)]
pub struct GFieldDiagnostics {
    /// `(J̃ − J)/σ̃` off the masks, zero on them.
    pub g: VectorField,
    /// `Σᵢ ‖∇Gᵢ‖₁` over cells whose centered stencil stays off the masks.
    pub grad_g_l1: f64,
    pub j_diff_l1: f64,
    /// `grad_g_l1 / ‖J − J̃‖₁^½`; `None` when `J̃ = J`.
    pub ratio: Option<f64>,
}

pub fn g_field_diagnostics(
    dual: &DualFields,
    dual_tilde: &DualFields,
    sigma_tilde: &ScalarField,
) -> Result<GFieldDiagnostics> {
    let spec = *dual.j.spec();
    if !spec.same_as(dual_tilde.j.spec()) || !spec.same_as(sigma_tilde.spec()) {
        return Err(Error::Mismatch("G-field inputs on different grids".into()));
    }
    let n = dual.j.len();
    let off: Vec<bool> = (0..n)
        .map(|k| !dual.mask[k] && !dual_tilde.mask[k] && sigma_tilde.values()[k] > 0.0)
        .collect();
    if !off.iter().any(|&o| o) {
        return Err(Error::Diagnostic("no cells outside the characteristic masks".into()));
    }
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut j_diff = 0.0;
    for k in 0..n {
        if off[k] {
            let (jx, jy) = dual.j.at(k);
            let (tx, ty) = dual_tilde.j.at(k);
            let s = sigma_tilde.values()[k];
            gx[k] = (tx - jx) / s;
            gy[k] = (ty - jy) / s;
            j_diff += (tx - jx).hypot(ty - jy);
        }
    }
    let (w, hgt) = (spec.nx + 1, spec.ny + 1);
    let inv_2h = 0.5 / spec.h;
    let mut grad_l1 = 0.0;
    for j in 1..hgt - 1 {
        for i in 1..w - 1 {
            let k = j * w + i;
            if !(off[k] && off[k - 1] && off[k + 1] && off[k - w] && off[k + w]) {
                continue;
            }
            for comp in [&gx, &gy] {
                let dx = (comp[k + 1] - comp[k - 1]) * inv_2h;
                let dy = (comp[k + w] - comp[k - w]) * inv_2h;
                grad_l1 += dx.hypot(dy);
            }
        }
    }
    let h2 = spec.cell_area();
    let grad_g_l1 = h2 * grad_l1;
    let j_diff_l1 = h2 * j_diff;
    Ok(GFieldDiagnostics {
        g: VectorField::from_components(spec, gx, gy)?,
        grad_g_l1,
        j_diff_l1,
        ratio: (j_diff_l1 > 0.0).then(|| grad_g_l1 / j_diff_l1.sqrt()),
    })
}

/// One `(δ, seed)` run of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub seed: u64,
    pub gamma: f64,
    /// `‖H − H̃‖_∞`
    pub eps: f64,
    pub rel_l2_err: f64,
    pub u_l1_diff: f64,
    pub j_l1_diff: f64,
    pub grad_l1_diff: f64,
    pub sigma_l1_diff: f64,
    pub energy_diff: f64,
    pub lemma23_rhs: f64,
    pub lemma23_slack: f64,
    pub lemma23_holds: bool,
    pub lemma24_lhs: f64,
    pub min_alignment: f64,
    pub theorem25_lhs: f64,
    pub theorem25_rhs: f64,
    pub grad_g_l1: f64,
    pub g_ratio: f64,
    pub mask_fraction: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const ROW_COLUMNS: [&str; 23] = [
    "delta", "seed", "gamma", "eps", "rel_l2_err", "u_l1_diff", "J_l1_diff", "grad_l1_diff",
    "sigma_l1_diff", "energy_diff", "lemma23_rhs", "lemma23_slack", "lemma23_holds",
    "lemma24_lhs", "min_alignment", "theorem25_lhs", "theorem25_rhs", "grad_G_l1", "G_ratio",
    "mask_fraction", "iterations", "converged", "status",
];

impl SweepRow {
    fn failed(delta: f64, seed: u64, iteration: usize) -> Self {
        SweepRow {
            delta,
            seed,
            gamma: f64::NAN,
            eps: f64::NAN,
            rel_l2_err: f64::NAN,
            u_l1_diff: f64::NAN,
            j_l1_diff: f64::NAN,
            grad_l1_diff: f64::NAN,
            sigma_l1_diff: f64::NAN,
            energy_diff: f64::NAN,
            lemma23_rhs: f64::NAN,
            lemma23_slack: f64::NAN,
            lemma23_holds: false,
            lemma24_lhs: f64::NAN,
            min_alignment: f64::NAN,
            theorem25_lhs: f64::NAN,
            theorem25_rhs: f64::NAN,
            grad_g_l1: f64::NAN,
            g_ratio: f64::NAN,
            mask_fraction: f64::NAN,
            iterations: iteration,
            converged: false,
        }
    }

    /// Usable for fits and medians.
    pub fn is_valid(&self) -> bool {
        self.converged && self.eps.is_finite()
    }

    pub fn theorem25_holds(&self) -> bool {
        self.theorem25_lhs <= self.theorem25_rhs + 1e-8
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Confidence range: min/max pairwise slope for three points, slope ± 2
    /// standard errors for more.
    pub low: f64,
    pub high: f64,
    pub points: usize,
}

/// Least-squares slope of `ln y` against `ln x`. Needs at least three
/// positive pairs with distinct `x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<ExponentFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (low, high) = if n == 3 {
        let mut s = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if pts[j].0 != pts[i].0 {
                    s.push((pts[j].1 - pts[i].1) / (pts[j].0 - pts[i].0));
                }
            }
        }
        (
            s.iter().copied().fold(f64::INFINITY, f64::min),
            s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    } else {
        let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        let se = (rss / (n as f64 - 2.0) / sxx).sqrt();
        (slope - 2.0 * se, slope + 2.0 * se)
    };
    Some(ExponentFit { slope, intercept, low, high, points: n })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-δ medians across seeds, over valid rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub delta: f64,
    pub runs: usize,
    pub eps: f64,
    pub rel_l2_err: f64,
    pub u_l1_diff: f64,
    pub j_l1_diff: f64,
    pub grad_l1_diff: f64,
    pub sigma_l1_diff: f64,
    pub iterations: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Exponents {
    pub j_vs_eps: Option<ExponentFit>,
    pub u_vs_eps: Option<ExponentFit>,
    pub grad_vs_eps: Option<ExponentFit>,
    pub sigma_vs_eps: Option<ExponentFit>,
}

/// Iterate history of one sweep run.
#[derive(Debug, Clone)]
pub struct RunHistory {
    pub delta: f64,
    pub seed: u64,
    pub iterations: Vec<usize>,
    pub rel_change: Vec<f64>,
    pub energy: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub problem: String,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub config: SolverConfig,
    /// Whether `rel_l2_err` is measured against the exact solution (`true`)
    /// or against the zero-noise solve.
    pub exact_reference: bool,
    pub reference_iterations: usize,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<DeltaSummary>,
    pub exponents: Exponents,
    #[serde(skip)]
    pub histories: Vec<RunHistory>,
}

impl StabilityReport {
    pub fn to_csv(&self) -> String {
        let mut out = ROW_COLUMNS.join(",");
        out.push('\n');
        for r in &self.rows {
            let f = |v: f64| crate::io::fmt_f64(v);
            let status = if !r.eps.is_finite() {
                "diverged"
            } else if r.converged {
                "ok"
            } else {
                "max_iter"
            };
            let cols = [
                f(r.delta),
                r.seed.to_string(),
                f(r.gamma),
                f(r.eps),
                f(r.rel_l2_err),
                f(r.u_l1_diff),
                f(r.j_l1_diff),
                f(r.grad_l1_diff),
                f(r.sigma_l1_diff),
                f(r.energy_diff),
                f(r.lemma23_rhs),
                f(r.lemma23_slack),
                r.lemma23_holds.to_string(),
                f(r.lemma24_lhs),
                f(r.min_alignment),
                f(r.theorem25_lhs),
                f(r.theorem25_rhs),
                f(r.grad_g_l1),
                f(r.g_ratio),
                f(r.mask_fraction),
                r.iterations.to_string(),
                r.converged.to_string(),
                status.to_string(),
            ];
            out.push_str(&cols.join(","));
            out.push('\n');
        }
        out
    }

    /// Rows violating an inequality that must hold on every run.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for r in self.rows.iter().filter(|r| r.is_valid()) {
            let tag = format!("delta={} seed={}", r.delta, r.seed);
            if !r.lemma23_holds {
                v.push(format!("{tag}: energy bound {} > {} + {}", r.energy_diff, r.lemma23_rhs, r.lemma23_slack));
            }
            if r.min_alignment < -1e-12 {
                v.push(format!("{tag}: pointwise alignment {} < -1e-12", r.min_alignment));
            }
            if r.lemma24_lhs < -1e-10 {
                v.push(format!("{tag}: alignment integral {} < -1e-10", r.lemma24_lhs));
            }
            if !r.theorem25_holds() {
                v.push(format!("{tag}: L1 chain {} > {} + 1e-8", r.theorem25_lhs, r.theorem25_rhs));
            }
        }
        v
    }
}

struct Reference {
    u: ScalarField,
    grad: VectorField,
    dual: DualFields,
}

fn run_row(
    base: &ProblemSpec,
    reference: &Reference,
    compare_to: &ScalarField,
    config: &SolverConfig,
    delta: f64,
    seed: u64,
) -> Result<(SweepRow, Option<RunHistory>)> {
    let model = NoiseModel::new(delta, seed)?;
    let noisy = perturb(&base.h, &model);
    let p_tilde = base.with_curvature(noisy.h)?;
    let res: SolveResult = match bregman::solve(&p_tilde, config, None) {
        Ok(r) => r,
        Err(Error::Diverged { iteration }) => return Ok((SweepRow::failed(delta, seed, iteration), None)),
        Err(e) => return Err(e),
    };
    let u_t = &res.u;
    let eps = base.h.sub(&p_tilde.h)?.norms().linf;
    let dual_t = extract(&p_tilde, u_t, default_eps_char(&p_tilde))?;
    let energy = check_energy_stability(base, &p_tilde, &reference.u, u_t, config.tol)?;
    let align = check_j_alignment(&reference.dual, &dual_t, &base.a)?;

    let mut sigma_diff = 0.0;
    for k in 0..dual_t.mask.len() {
        if !(reference.dual.mask[k] || dual_t.mask[k]) {
            sigma_diff += (reference.dual.sigma.values()[k] - dual_t.sigma.values()[k]).abs();
        }
    }
    let (grad_g_l1, g_ratio) = match g_field_diagnostics(&reference.dual, &dual_t, &dual_t.sigma) {
        Ok(g) => (g.grad_g_l1, g.ratio.unwrap_or(f64::NAN)),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let err = u_t.sub(compare_to)?;
    let compare_norm = compare_to.norms().l2;
    let rel_l2_err = if compare_norm > 0.0 { err.norms().l2 / compare_norm } else { err.norms().l2 };

    let row = SweepRow {
        delta,
        seed,
        gamma: noisy.gamma,
        eps,
        rel_l2_err,
        u_l1_diff: u_t.sub(&reference.u)?.norms().l1,
        j_l1_diff: align.theorem25_lhs,
        grad_l1_diff: gradient(u_t).sub(&reference.grad)?.norms().l1,
        sigma_l1_diff: base.spec.cell_area() * sigma_diff,
        energy_diff: energy.lhs,
        lemma23_rhs: energy.rhs,
        lemma23_slack: energy.slack,
        lemma23_holds: energy.holds,
        lemma24_lhs: align.lemma24_lhs,
        min_alignment: align.min_alignment,
        theorem25_lhs: align.theorem25_lhs,
        theorem25_rhs: align.theorem25_rhs,
        grad_g_l1,
        g_ratio,
        mask_fraction: dual_t.mask_fraction(),
        iterations: res.iterations,
        converged: res.converged,
    };
    let hist = RunHistory {
        delta,
        seed,
        iterations: res.history_iterations,
        rel_change: res.rel_change_history,
        energy: res.energy_history,
    };
    Ok((row, Some(hist)))
}

fn summarize(rows: &[SweepRow], deltas: &[f64]) -> Vec<DeltaSummary> {
    deltas
        .iter()
        .map(|&delta| {
            let rs: Vec<&SweepRow> = rows.iter().filter(|r| r.delta == delta && r.is_valid()).collect();
            let med = |f: fn(&SweepRow) -> f64| median(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            DeltaSummary {
                delta,
                runs: rs.len(),
                eps: med(|r| r.eps),
                rel_l2_err: med(|r| r.rel_l2_err),
                u_l1_diff: med(|r| r.u_l1_diff),
                j_l1_diff: med(|r| r.j_l1_diff),
                grad_l1_diff: med(|r| r.grad_l1_diff),
                sigma_l1_diff: med(|r| r.sigma_l1_diff),
                iterations: med(|r| r.iterations as f64),
            }
        })
        .collect()
}

fn fit_exponents(summary: &[DeltaSummary]) -> Exponents {
    let pts: Vec<&DeltaSummary> = summary.iter().filter(|s| s.runs > 0 && s.eps > 0.0).collect();
    let eps: Vec<f64> = pts.iter().map(|s| s.eps).collect();
    let fit = |f: fn(&DeltaSummary) -> f64| fit_loglog(&eps, &pts.iter().map(|s| f(s)).collect::<Vec<_>>());
    Exponents {
        j_vs_eps: fit(|s| s.j_l1_diff),
        u_vs_eps: fit(|s| s.u_l1_diff),
        grad_vs_eps: fit(|s| s.grad_l1_diff),
        sigma_vs_eps: fit(|s| s.sigma_l1_diff),
    }
}

/// Runs one perturbed solve per `(delta, seed)` pair and collects the
/// metrics. Inequalities are evaluated against the zero-noise solve of `base`;
/// `rel_l2_err` uses `base.exact_u` when present.
pub fn run_sweep(
    base: &ProblemSpec,
    deltas: &[f64],
    seeds: &[u64],
    config: &SolverConfig,
    exec: Execution,
) -> Result<StabilityReport> {
    config.validate()?;
    if deltas.is_empty() || seeds.is_empty() {
        return Err(Error::Invalid("sweep needs at least one delta and one seed".into()));
    }
    if deltas.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::Invalid("deltas must be strictly ascending".into()));
    }
    for &d in deltas {
        NoiseModel::new(d, 0)?;
    }

    let ref_solve = bregman::solve(base, config, None)?;
    let dual = extract(base, &ref_solve.u, default_eps_char(base))?;
    let reference = Reference {
        grad: gradient(&ref_solve.u),
        u: ref_solve.u,
        dual,
    };
    let compare_to = base.exact_u.clone().unwrap_or_else(|| reference.u.clone());

    let jobs: Vec<(f64, u64)> = deltas.iter().flat_map(|&d| seeds.iter().map(move |&s| (d, s))).collect();
    let results = map_ordered(&jobs, exec, |&(delta, seed)| {
        run_row(base, &reference, &compare_to, config, delta, seed)
    });

    let mut rows = Vec::with_capacity(jobs.len());
    let mut histories = Vec::new();
    for r in results {
        let (row, hist) = r?;
        rows.push(row);
        histories.extend(hist);
    }
    let summary = summarize(&rows, deltas);
    let exponents = fit_exponents(&summary);
    Ok(StabilityReport {
        problem: base.name.clone(),
        nx: base.spec.nx,
        ny: base.spec.ny,
        h: base.spec.h,
        config: *config,
        exact_reference: base.exact_u.is_some(),
        reference_iterations: ref_solve.iterations,
        rows,
        summary,
        exponents,
        histories,
    })
}
