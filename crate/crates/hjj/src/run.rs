//! Subcommand drivers. Each returns its artifacts; [`execute`] writes them
//! only when the whole run succeeded.

use std::path::Path;

use hjj_core::approximation::{self, check_widths};
use hjj_core::dpp::{self, DppConfig};
use hjj_core::{scheme, ControlSystem, Grid, JunctionProblem, SolutionField};
use rayon::prelude::*;
use serde::Serialize;

use crate::cli::{Cli, Command, RunOptions};
use crate::config::{Overrides, ProblemFile, SignalSpec};
use crate::output::{field_csv, json_bytes, snapshot_tsv, time_tag, Artifacts};
use crate::RunError;

/// Runs `cli` on a thread pool capped by `HJJ_THREADS`, writes the
/// artifacts and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = match cli.opts.threads {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(RunError::Config(format!("thread pool: {e}"))),
        },
        _ => run(cli),
    };
    match result.and_then(|a| a.write_all(&cli.opts.out)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("hjj {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<Artifacts, RunError> {
    let opts = &cli.opts;
    let path = opts.problem.as_deref().ok_or_else(|| RunError::Config("--problem is required".into()))?;
    let file = ProblemFile::load(path)?;
    run_file(cli.command, &file, opts)
}

/// Same as [`run`] with an already parsed problem file.
pub fn run_file(command: Command, file: &ProblemFile, opts: &RunOptions) -> Result<Artifacts, RunError> {
    let o = Overrides { horizon: opts.horizon, r_domain: opts.r_domain, controls: opts.controls };
    match command {
        Command::Solve => run_solve(file, &o, opts),
        Command::Value => run_value(file, &o, opts),
        Command::Compare => run_compare(file, &o, opts),
        Command::Approx => run_approx(file, &o, opts),
        Command::Validate => run_validate(file, &o, opts),
    }
}

fn report_times(opts: &RunOptions, horizon: f64) -> Result<Vec<f64>, RunError> {
    let times = opts.report_times.clone().unwrap_or_else(|| vec![horizon]);
    if let Some(t) = times.iter().find(|&&t| !(0.0..=horizon).contains(&t)) {
        return Err(RunError::Config(format!("report time {t} outside [0, {horizon}]")));
    }
    Ok(times)
}

fn time_step(opts: &RunOptions, speed: f64) -> Result<f64, RunError> {
    if !(opts.dx > 0.0) {
        return Err(RunError::Config("--dx must be positive".into()));
    }
    if let Some(dt) = opts.dt {
        return Ok(dt);
    }
    if !(opts.cfl_safety > 0.0 && opts.cfl_safety <= 1.0) {
        return Err(RunError::Config("--cfl-safety must lie in (0, 1]".into()));
    }
    Ok(Grid::cfl_step(opts.dx, speed, opts.cfl_safety))
}

/// Information travels at most `speed · T`; the truncation radius has to
/// exceed that for the reported field to be unaffected by the boundary.
fn check_truncation(r_domain: f64, speed: f64, horizon: f64) -> Result<(), RunError> {
    if r_domain < speed * horizon {
        return Err(RunError::Validation(format!(
            "R_domain {r_domain} is below the propagation distance {}",
            speed * horizon
        )));
    }
    Ok(())
}

fn validated(problem: &JunctionProblem, seed: u64) -> Result<(), RunError> {
    problem.validate_seeded(seed)?;
    check_truncation(problem.r_domain(), problem.max_lipschitz_p(), problem.horizon())
}

fn field_artifacts(prefix: &str, field: &SolutionField, times: &[f64]) -> Result<Artifacts, RunError> {
    let mut a = Artifacts::default();
    a.add(format!("{prefix}_field.csv"), field_csv(field)?);
    for &t in times {
        a.add(format!("{prefix}_{}.tsv", time_tag(t)), snapshot_tsv(field, t)?);
    }
    Ok(a)
}

fn run_solve(file: &ProblemFile, o: &Overrides, opts: &RunOptions) -> Result<Artifacts, RunError> {
    let problem = file.problem(o)?;
    validated(&problem, opts.seed)?;
    let times = report_times(opts, problem.horizon())?;
    let dt = time_step(opts, problem.max_lipschitz_p())?;
    let grid = Grid::for_problem(&problem, opts.dx, dt)?;
    let field = scheme::solve(&problem, &grid)?;
    field_artifacts("solve", &field, &times)
}

fn dpp_config(opts: &RunOptions, cs: &ControlSystem, r_domain: f64) -> Result<DppConfig, RunError> {
    let dt = time_step(opts, cs.speed_bound())?;
    Ok(DppConfig::new(opts.dx, dt, r_domain))
}

fn run_value(file: &ProblemFile, o: &Overrides, opts: &RunOptions) -> Result<Artifacts, RunError> {
    let cs = file.control_system(o)?;
    let horizon = o.horizon.unwrap_or(file.horizon);
    let r_domain = o.r_domain.unwrap_or(file.r_domain);
    let u0 = file.u0.build();
    if horizon > 0.0 {
        validated(&cs.to_problem(u0.clone(), horizon, r_domain)?, opts.seed)?;
    }
    check_truncation(r_domain, cs.speed_bound(), horizon)?;
    let times = report_times(opts, horizon)?;
    let cfg = dpp_config(opts, &cs, r_domain)?;
    let field = dpp::value_function(&cs, &u0, horizon, &cfg)?;
    field_artifacts("value", &field, &times)
}

#[derive(Debug, Serialize)]
struct GridReport {
    dx: f64,
    dt: f64,
    steps: usize,
    r_domain: f64,
    horizon: f64,
}

impl GridReport {
    fn of(g: &Grid) -> Self {
        Self { dx: g.dx(), dt: g.dt(), steps: g.steps(), r_domain: g.r_domain(), horizon: g.horizon() }
    }
}

#[derive(Debug, Serialize)]
struct GapAtTime {
    t: f64,
    linf: f64,
    l1: f64,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    grid: GridReport,
    linf_all_levels: f64,
    per_time: Vec<GapAtTime>,
}

/// `L∞` and `L¹` gaps (node weight `dx`) between two fields on one grid at
/// the level nearest each report time.
pub fn field_gaps(a: &SolutionField, b: &SolutionField, times: &[f64]) -> Result<(f64, Vec<(f64, f64, f64)>), RunError> {
    let all = a.max_abs_diff(b)?;
    let g = a.grid();
    let per = times
        .iter()
        .map(|&t| {
            let level = g.nearest_level(t);
            let (mut linf, mut l1) = (0.0f64, 0.0);
            for (x, y) in a.level(level).iter().zip(b.level(level)) {
                linf = linf.max((x - y).abs());
                l1 += (x - y).abs() * g.dx();
            }
            (g.time(level), linf, l1)
        })
        .collect();
    Ok((all, per))
}

fn run_compare(file: &ProblemFile, o: &Overrides, opts: &RunOptions) -> Result<Artifacts, RunError> {
    let cs = file.control_system(o)?;
    let horizon = o.horizon.unwrap_or(file.horizon);
    let r_domain = o.r_domain.unwrap_or(file.r_domain);
    let u0 = file.u0.build();
    let problem = cs.to_problem(u0.clone(), horizon, r_domain)?;
    validated(&problem, opts.seed)?;
    let times = report_times(opts, horizon)?;
    let dt = time_step(opts, problem.max_lipschitz_p().max(cs.speed_bound()))?;
    let grid = Grid::for_problem(&problem, opts.dx, dt)?;
    let cfg = DppConfig::new(opts.dx, grid.dt(), r_domain);
    let (fd, dp) = rayon::join(|| scheme::solve(&problem, &grid), || dpp::value_function(&cs, &u0, horizon, &cfg));
    let (fd, dp) = (fd?, dp?);
    if !fd.grid().compatible(dp.grid()) {
        return Err(RunError::Config("solvers produced fields on different grids".into()));
    }
    let (all, per) = field_gaps(&fd, &dp, &times)?;
    let report = CompareReport {
        grid: GridReport::of(&grid),
        linf_all_levels: all,
        per_time: per.into_iter().map(|(t, linf, l1)| GapAtTime { t, linf, l1 }).collect(),
    };
    let mut a = Artifacts::default();
    a.add("compare.json", json_bytes(&report)?);
    Ok(a)
}

#[derive(Debug, Serialize)]
struct WidthReport {
    eps: f64,
    kn_l1: f64,
    solution_gap: f64,
    ordering_violation: f64,
    within_bound: bool,
    kn: SignalSpec,
}

#[derive(Debug, Serialize)]
struct ApproxReport {
    #[serde(rename = "K")]
    slope_bound: f64,
    radius: f64,
    grid_points: usize,
    grid: GridReport,
    widths: Vec<WidthReport>,
}

fn run_approx(file: &ProblemFile, o: &Overrides, opts: &RunOptions) -> Result<Artifacts, RunError> {
    let spec = file
        .approx
        .as_ref()
        .ok_or_else(|| RunError::Config("problem file has no \"approx\" block".into()))?;
    check_widths(&spec.widths)?;
    let problem = file.problem(o)?;
    validated(&problem, opts.seed)?;
    let dt = time_step(opts, problem.max_lipschitz_p())?;
    let grid = Grid::for_problem(&problem, opts.dx, dt)?;
    let base = scheme::solve(&problem, &grid)?;
    let slope_bound = spec.slope_bound.unwrap_or_else(|| approximation::default_slope_bound(&base));
    let radius = spec.radius.unwrap_or(problem.r_domain());
    let results = spec
        .widths
        .par_iter()
        .map(|&eps| approximation::study_width(&problem, &grid, &base, eps, slope_bound, radius, spec.grid_points))
        .collect::<Result<Vec<_>, _>>()?;
    let report = ApproxReport {
        slope_bound,
        radius,
        grid_points: spec.grid_points,
        grid: GridReport::of(&grid),
        widths: results
            .iter()
            .map(|r| WidthReport {
                eps: r.eps,
                kn_l1: r.kn_l1,
                solution_gap: r.solution_gap,
                ordering_violation: r.ordering_violation,
                within_bound: r.within_bound,
                kn: SignalSpec::from(&r.kn),
            })
            .collect(),
    };
    let mut a = Artifacts::default();
    a.add("approx.json", json_bytes(&report)?);
    Ok(a)
}

#[derive(Debug, Serialize)]
struct CheckReport {
    name: String,
    passed: bool,
    worst_at: Option<String>,
    worst_value: Option<f64>,
}

fn run_validate(file: &ProblemFile, o: &Overrides, opts: &RunOptions) -> Result<Artifacts, RunError> {
    let problem = file.problem(o)?;
    let report = problem.validate_seeded(opts.seed)?;
    let mut checks: Vec<CheckReport> = report
        .checks
        .iter()
        .map(|c| CheckReport {
            name: c.name.clone(),
            passed: c.passed,
            worst_at: c.worst.as_ref().map(|w| w.0.clone()),
            worst_value: c.worst.as_ref().map(|w| w.1),
        })
        .collect();
    let speed = problem.max_lipschitz_p();
    checks.push(CheckReport {
        name: "truncation_radius".into(),
        passed: check_truncation(problem.r_domain(), speed, problem.horizon()).is_ok(),
        worst_at: Some(format!("R_domain={}", problem.r_domain())),
        worst_value: Some(speed * problem.horizon()),
    });
    if file.control.is_some() {
        let cs = file.control_system(o)?;
        let times = problem.sample_times(20);
        let positions: Vec<f64> = (0..=20).map(|k| problem.r_domain() * k as f64 / 20.0).collect();
        let shortfall = cs.controllability_shortfall(&times, &positions);
        checks.push(CheckReport {
            name: "controllability".into(),
            passed: shortfall == 0.0,
            worst_at: None,
            worst_value: Some(shortfall),
        });
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(RunError::Validation(failed.join(", ")));
    }
    let mut a = Artifacts::default();
    a.add("validation.json", json_bytes(&checks)?);
    Ok(a)
}

/// Loads a problem file and runs `command` without touching the disk
/// beyond reading the file.
pub fn run_path(command: Command, path: &Path, opts: &RunOptions) -> Result<Artifacts, RunError> {
    run_file(command, &ProblemFile::load(path)?, opts)
}
