//! Explicit monotone finite-difference scheme.
//!
//! Edge interiors use the Godunov flux `max(H⁺(D⁻u), H⁻(D⁺u))`, the
//! junction node uses the flux-limited update
//! `u₀ - dt · max{Ā, H̄_j⁻((u_{j,1} - u₀)/dx)}`. Time-measurable data are
//! frozen on each step at their window means, so only integrals of the data
//! enter the discrete solution. The update is monotone whenever
//! `dt · C₂ ≤ dx`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{Grid, SolutionField};
use crate::hamiltonian::{EnvelopePair, Hamiltonian, LocalEnvelope};
use crate::problem::JunctionProblem;

/// Godunov numerical Hamiltonian `max(H⁺(p⁻), H⁻(p⁺))`.
pub fn godunov_flux(env: &EnvelopePair, t: f64, x: f64, p_minus: f64, p_plus: f64) -> Result<f64> {
    Ok(env.h_plus(t, x, p_minus)?.max(env.h_minus(t, x, p_plus)?))
}

#[inline]
fn local_flux(h: &Hamiltonian, env: &LocalEnvelope, t: f64, y: f64, p_minus: f64, p_plus: f64) -> f64 {
    env.plus(p_minus, h.eval(t, y, p_minus)).max(env.minus(p_plus, h.eval(t, y, p_plus)))
}

/// Advances nodal values from `t_n` to `t_n + dt`.
///
/// Nodes at the truncation radius use a constant ghost value, i.e. a zero
/// outer slope, which keeps the update monotone.
pub fn step(problem: &JunctionProblem, grid: &Grid, u: &[f64], t_n: f64, dt: f64) -> Result<Vec<f64>> {
    let c2 = problem.max_lipschitz_p();
    let limit = if c2 > 0.0 { grid.dx() / c2 } else { f64::INFINITY };
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    if u.len() != grid.node_count() {
        return Err(Error::InvalidProblem("node values do not match the grid".into()));
    }
    let t_end = t_n + dt;
    let a_bar = problem.flux_limiter().average(t_n, t_end.min(problem.flux_limiter().horizon()))?;
    let dx = grid.dx();
    let n = grid.nodes_per_edge();
    let mut next = vec![0.0; u.len()];
    let mut junction_flux = a_bar;

    for (j, edge) in problem.edges().iter().enumerate() {
        let h = edge.hamiltonian.frozen(t_n, t_end);
        let x_dep = h.x_dependent();
        let (p_hat, h_min) = h.argmin(t_n, 0.0)?;
        let at_junction = LocalEnvelope { p_hat, h_min };

        let q = (u[grid.node(j, 1)] - u[0]) / dx;
        junction_flux = junction_flux.max(at_junction.minus(q, h.eval(t_n, 0.0, q)));

        for k in 1..=n {
            let y = k as f64 * dx;
            let env = if x_dep {
                let (p_hat, h_min) = h.argmin(t_n, y)?;
                LocalEnvelope { p_hat, h_min }
            } else {
                at_junction
            };
            let here = u[grid.node(j, k)];
            let p_minus = (here - u[grid.node(j, k - 1)]) / dx;
            let p_plus = if k < n { (u[grid.node(j, k + 1)] - here) / dx } else { 0.0 };
            next[grid.node(j, k)] = here - dt * local_flux(&h, &env, t_n, y, p_minus, p_plus);
        }
    }
    next[0] = u[0] - dt * junction_flux;
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { level: grid.nearest_level(t_end) });
    }
    Ok(next)
}

/// Initial datum sampled on the grid nodes.
pub fn sample_initial(problem: &JunctionProblem, grid: &Grid) -> Vec<f64> {
    (0..grid.node_count())
        .map(|node| problem.initial_datum().eval(grid.point(node).edge, grid.signed_position(node)))
        .collect()
}

/// Solves from the sampled initial datum.
pub fn solve(problem: &JunctionProblem, grid: &Grid) -> Result<SolutionField> {
    solve_from(problem, grid, sample_initial(problem, grid))
}

/// Solves from arbitrary nodal data at `t = 0`.
pub fn solve_from(problem: &JunctionProblem, grid: &Grid, initial: Vec<f64>) -> Result<SolutionField> {
    if initial.len() != grid.node_count() {
        return Err(Error::InvalidProblem("initial values do not match the grid".into()));
    }
    let mut levels = Vec::with_capacity(grid.levels());
    levels.push(initial);
    for n in 0..grid.steps() {
        let t_n = grid.time(n);
        let dt = grid.time(n + 1) - t_n;
        let next = step(problem, grid, &levels[n], t_n, dt).map_err(|e| match e {
            Error::NonFinite { .. } => Error::NonFinite { level: n + 1 },
            other => other,
        })?;
        levels.push(next);
    }
    SolutionField::new(grid.clone(), levels)
}

/// `‖u₀‖∞ + t · max(sup|A|, sup_j |H_j(·, ·, 0)|)` sampled on the grid: the
/// sup-norm growth bound of the monotone scheme.
pub fn stability_bound(problem: &JunctionProblem, grid: &Grid, initial_sup: f64, t: f64) -> f64 {
    let a = problem.flux_limiter().sup_abs();
    let mut h0: f64 = 0.0;
    for n in 0..grid.steps().max(1) {
        let (t0, t1) = (grid.time(n), grid.time(n + 1).max(grid.time(n) + grid.dt()));
        for e in problem.edges() {
            let h = e.hamiltonian.frozen(t0, t1);
            for k in 0..=grid.nodes_per_edge() {
                h0 = h0.max(h.eval(t0, k as f64 * grid.dx(), 0.0).abs());
                if !h.x_dependent() {
                    break;
                }
            }
        }
    }
    initial_sup + t * a.max(h0)
}
