//! `parea` command line: `solve`, `experiment`, `diagnose` and `export`.
//!
//! Settings come from an optional flat JSON file (`--config`) with flags
//! taking precedence. Exit codes: 0 success, 1 configuration or I/O error,
//! 2 the solver hit `max_iter` without converging.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bregman::{self, SolveResult, SolverConfig};
use crate::duality::{default_eps_char, extract, feasibility_residuals};
use crate::error::{Error, Result};
use crate::io;
use crate::levelsets::admissibility_report;
use crate::parallel::Execution;
use crate::problems::{self, validate_hypotheses, ProblemSpec, Sampling};
use crate::stability::{self, check_j_alignment, g_field_diagnostics, perturb, NoiseModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

pub const OUT_DIR_ENV: &str = "PAREA_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "parea", version, about = "Split Bregman solver and stability experiments for weighted p-area problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write u, d, b, the history and a summary.
    Solve(CommonArgs),
    /// Noise sweep over deltas × seeds; writes report.csv and report.json.
    Experiment(CommonArgs),
    /// Duality, admissibility and (with a twin) G-field diagnostics.
    Diagnose(CommonArgs),
    /// Write a problem manifest with its field CSVs.
    Export(CommonArgs),
}

/// Flat settings shared by every subcommand. Each one may also appear in the
/// JSON config file under the same name with underscores.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommonArgs {
    /// JSON file with default values for any of the other options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Built-in problem (example-4.1, zero, radial, swirl) or manifest path.
    #[arg(long)]
    pub problem: Option<String>,
    /// Interior nodes per axis.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long = "history-stride")]
    pub history_stride: Option<usize>,
    /// consistent | pointwise
    #[arg(long)]
    pub sampling: Option<String>,
    /// Output directory; defaults to $PAREA_OUT_DIR, then ./parea-out.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write PGM renders of the fields.
    #[arg(long)]
    pub pgm: Option<bool>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Worker count for sweeps; 1 runs serially, 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write per-run convergence histories in experiment mode.
    #[arg(long)]
    pub histories: Option<bool>,
    /// Existing `solve` output directory to diagnose.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Noise level of the perturbed twin in diagnose mode.
    #[arg(long = "twin-delta")]
    pub twin_delta: Option<f64>,
    #[arg(long = "twin-seed")]
    pub twin_seed: Option<u64>,
    #[arg(long = "num-iso")]
    pub num_iso: Option<usize>,
    /// Poincaré-type constant of the domain for the smallness check.
    #[arg(long = "c-omega")]
    pub c_omega: Option<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl CommonArgs {
    /// File values with command-line values laid on top.
    pub fn resolve(&self) -> Result<CommonArgs> {
        let mut base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)?;
                serde_json::from_str::<CommonArgs>(&text)?
            }
            None => CommonArgs::default(),
        };
        let top = self;
        overlay!(
            base, top, problem, n, lambda, tol, max_iter, history_stride, sampling, out, pgm, deltas,
            seeds, jobs, histories, from, twin_delta, twin_seed, num_iso, c_omega
        );
        Ok(base)
    }

    fn problem_name(&self) -> String {
        self.problem.clone().unwrap_or_else(|| "example-4.1".into())
    }

    fn grid_n(&self) -> usize {
        self.n.unwrap_or(99)
    }

    fn sampling(&self) -> Result<Sampling> {
        match self.sampling.as_deref() {
            None | Some("consistent") => Ok(Sampling::Consistent),
            Some("pointwise") => Ok(Sampling::Pointwise),
            Some(other) => Err(Error::Invalid(format!("unknown sampling `{other}`"))),
        }
    }

    fn solver_config(&self) -> Result<SolverConfig> {
        let d = SolverConfig { max_iter: 20_000, ..SolverConfig::default() };
        let c = SolverConfig {
            lambda: self.lambda.unwrap_or(d.lambda),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            history_stride: self.history_stride.unwrap_or(d.history_stride),
        };
        c.validate()?;
        Ok(c)
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("parea-out"))
    }

    fn load_problem(&self) -> Result<ProblemSpec> {
        let name = self.problem_name();
        if name.ends_with(".json") || Path::new(&name).is_file() {
            io::load_problem(&name)
        } else {
            problems::builtin(&name, self.grid_n(), self.sampling()?)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Solve(a) => cmd_solve(&a.resolve()?),
        Command::Experiment(a) => cmd_experiment(&a.resolve()?),
        Command::Diagnose(a) => cmd_diagnose(&a.resolve()?),
        Command::Export(a) => cmd_export(&a.resolve()?),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn history_csv(iterations: &[usize], rel: &[f64], energy: &[f64]) -> String {
    let mut out = String::from("iteration,rel_change,energy\n");
    for k in 0..iterations.len() {
        out.push_str(&format!("{},{},{}\n", iterations[k], io::fmt_f64(rel[k]), io::fmt_f64(energy[k])));
    }
    out
}

fn exact_errors(problem: &ProblemSpec, res: &SolveResult) -> Result<Option<(f64, f64)>> {
    let Some(exact) = &problem.exact_u else { return Ok(None) };
    let err = res.u.sub(exact)?.norms();
    let denom = exact.norms().l2;
    let rel = if denom > 0.0 { err.l2 / denom } else { err.l2 };
    Ok(Some((rel, err.linf)))
}

pub fn cmd_solve(args: &CommonArgs) -> Result<i32> {
    let problem = args.load_problem()?;
    let config = args.solver_config()?;
    let out = args.out_dir();
    fs::create_dir_all(&out)?;

    let res = bregman::solve(&problem, &config, None)?;
    io::write_scalar(out.join("u.csv"), &res.u)?;
    io::write_vector(&out, "d", &res.d)?;
    io::write_vector(&out, "b", &res.b)?;
    fs::write(
        out.join("history.csv"),
        history_csv(&res.history_iterations, &res.rel_change_history, &res.energy_history),
    )?;
    if args.pgm.unwrap_or(false) {
        io::write_pgm(out.join("u.pgm"), &res.u)?;
    }
    let errors = exact_errors(&problem, &res)?;
    let summary = json!({
        "problem": args.problem_name(),
        "name": problem.name,
        "n": args.grid_n(),
        "sampling": args.sampling()?,
        "grid": problem.spec,
        "config": config,
        "iterations": res.iterations,
        "converged": res.converged,
        "final_rel_change": res.final_rel_change(),
        "final_energy": res.final_energy(),
        "rel_l2_error": errors.map(|e| e.0),
        "max_error": errors.map(|e| e.1),
    });
    write_json(&out.join("summary.json"), &summary)?;

    println!(
        "{}: {} after {} iterations, rel change {:.3e}, energy {:.10}",
        problem.name,
        if res.converged { "converged" } else { "not converged" },
        res.iterations,
        res.final_rel_change(),
        res.final_energy()
    );
    if let Some((rel, max)) = errors {
        println!("relative L2 error {rel:.4e}, max error {max:.4e}");
    }
    Ok(if res.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn cmd_experiment(args: &CommonArgs) -> Result<i32> {
    let problem = args.load_problem()?;
    let config = args.solver_config()?;
    let deltas = args.deltas.clone().unwrap_or_else(|| vec![0.01, 0.035, 0.06]);
    let seeds = args.seeds.clone().unwrap_or_else(|| (0..5).collect());
    let exec = Execution::from_jobs(args.jobs.unwrap_or(1));
    let out = args.out_dir();
    fs::create_dir_all(&out)?;

    let report = stability::run_sweep(&problem, &deltas, &seeds, &config, exec)?;
    fs::write(out.join("report.csv"), report.to_csv())?;
    write_json(&out.join("report.json"), &serde_json::to_value(&report)?)?;
    if args.histories.unwrap_or(false) {
        let dir = out.join("histories");
        fs::create_dir_all(&dir)?;
        for h in &report.histories {
            let name = format!("history_delta{}_seed{}.csv", h.delta, h.seed);
            fs::write(dir.join(name), history_csv(&h.iterations, &h.rel_change, &h.energy))?;
        }
    }

    println!("{:>8}  {:>14}  {:>14}  {:>5}", "delta", "median rel L2", "median iters", "runs");
    for s in &report.summary {
        println!("{:>8}  {:>14.4e}  {:>14}  {:>5}", s.delta, s.rel_l2_err, s.iterations, s.runs);
    }
    if let Some(f) = &report.exponents.u_vs_eps {
        println!("‖u−ũ‖₁ ~ ε^{:.3} (range {:.3}..{:.3})", f.slope, f.low, f.high);
    }
    if let Some(f) = &report.exponents.j_vs_eps {
        println!("‖J−J̃‖₁ ~ ε^{:.3} (range {:.3}..{:.3})", f.slope, f.low, f.high);
    }
    for v in report.violations() {
        eprintln!("violation: {v}");
    }
    let all_converged = report.rows.iter().all(|r| r.converged);
    Ok(if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Deserialize)]
struct SolveSummary {
    problem: String,
    n: usize,
    sampling: Sampling,
    config: SolverConfig,
}

pub fn cmd_diagnose(args: &CommonArgs) -> Result<i32> {
    let (problem, u, config) = match &args.from {
        Some(dir) => {
            let text = fs::read_to_string(dir.join("summary.json")).map_err(|e| {
                Error::Invalid(format!("cannot read {}: {e}", dir.join("summary.json").display()))
            })?;
            let s: SolveSummary = serde_json::from_str(&text)?;
            let from = CommonArgs {
                problem: Some(s.problem),
                n: Some(s.n),
                sampling: Some(match s.sampling {
                    Sampling::Consistent => "consistent".into(),
                    Sampling::Pointwise => "pointwise".into(),
                }),
                ..Default::default()
            };
            let problem = from.load_problem()?;
            let u = io::read_scalar(dir.join("u.csv"))?;
            u.check_compatible(&problem.h)?;
            (problem, u, s.config)
        }
        None => {
            let problem = args.load_problem()?;
            let config = args.solver_config()?;
            let res = bregman::solve(&problem, &config, None)?;
            (problem, res.u, config)
        }
    };
    let out = args.out_dir();
    fs::create_dir_all(&out)?;

    let dual = extract(&problem, &u, default_eps_char(&problem))?;
    let feas = feasibility_residuals(&problem, &u, &dual)?;
    let gap_band = 5.0 * (problem.spec.h + config.tol) * (1.0 + feas.energy.abs());
    let adm = admissibility_report(&problem, &u, &dual, args.num_iso.unwrap_or(9))?;
    let hyp = validate_hypotheses(&problem, args.c_omega.unwrap_or(0.5))?;

    let mut report = json!({
        "problem": problem.name,
        "feasibility": feas,
        "gap_band": gap_band,
        "gap_within_band": feas.gap.abs() <= gap_band,
        "admissibility": {
            "sigma_min": adm.sigma_min,
            "sigma_max": adm.sigma_max,
            "j_min": adm.j_min,
            "j_max": adm.j_max,
            "mask_fraction": adm.mask_fraction,
            "curl_f_linf": adm.curl_f_linf,
            "conservative": adm.conservative,
            "traced": adm.traced,
            "admissible": adm.admissible,
            "iso_values": adm.levelsets.iso_values,
            "k_observed": adm.levelsets.k_observed,
            "interior_component_count": adm.levelsets.interior_component_count,
            "min_grad_magnitude": adm.levelsets.min_grad_magnitude,
            "constant": adm.levelsets.constant,
        },
        "hypotheses": hyp,
    });

    if let Some(delta) = args.twin_delta {
        let model = NoiseModel::new(delta, args.twin_seed.unwrap_or(0))?;
        let twin = problem.with_curvature(perturb(&problem.h, &model).h)?;
        let res = bregman::solve(&twin, &config, None)?;
        let dual_t = extract(&twin, &res.u, default_eps_char(&twin))?;
        let align = check_j_alignment(&dual, &dual_t, &problem.a)?;
        let g = g_field_diagnostics(&dual, &dual_t, &dual_t.sigma)?;
        report["twin"] = json!({
            "delta": delta,
            "seed": model.seed,
            "iterations": res.iterations,
            "converged": res.converged,
            "eps": problem.h.sub(&twin.h)?.norms().linf,
            "alignment": align,
            "g_field": {
                "grad_g_l1": g.grad_g_l1,
                "j_diff_l1": g.j_diff_l1,
                "ratio": g.ratio,
            },
        });
    }
    write_json(&out.join("diagnostics.json"), &report)?;
    fs::write(out.join("levelsets.csv"), adm.levelsets.to_csv())?;
    io::write_pgm(out.join("J_mag.pgm"), &dual.j.magnitude())?;
    io::write_pgm(out.join("sigma.pgm"), &dual.sigma)?;
    io::write_pgm(out.join("mask.pgm"), &dual.mask_field())?;

    println!(
        "gap {:.3e} (band {:.3e}), div residual {:.3e}, sigma in [{:.6}, {:.6}], mask fraction {:.4}",
        feas.gap, gap_band, feas.div_residual_l1, adm.sigma_min, adm.sigma_max, adm.mask_fraction
    );
    if adm.mask_fraction == 1.0 {
        eprintln!("warning: every cell is characteristic (∇u+F = 0); J and σ are undefined");
    } else if !adm.admissible {
        eprintln!("warning: solution is not admissible (mask fraction {:.4})", adm.mask_fraction);
    }
    Ok(EXIT_OK)
}

pub fn cmd_export(args: &CommonArgs) -> Result<i32> {
    let problem = args.load_problem()?;
    let path = io::save_problem(args.out_dir(), &problem)?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}
