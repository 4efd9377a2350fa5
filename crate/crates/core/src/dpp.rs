//! Value function of the junction control problem by forward dynamic
//! programming, and a brute-force trajectory enumerator that checks it on
//! tiny instances.
//!
//! One step of the semi-Lagrangian recursion reads
//! `u(y, t + dt) = min_α û(y - v(α) dt, t) + ℓ̄(α) dt` along each edge, with
//! `û` the piecewise-linear interpolant and `ℓ̄` the window mean of the
//! running cost. At the junction a trajectory may also park, paying
//! `-∫A`. Feet that fall behind the junction are split there so the cost
//! switches regime exactly at the crossing.

use alloc::vec;
use alloc::vec::Vec;

use crate::control::ControlSystem;
use crate::error::{Error, Result};
use crate::field::{Grid, SolutionField};
use crate::problem::{InitialDatum, StarPoint};
use crate::time_signal::TimeSignal;

/// Discretization parameters of the dynamic programming solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DppConfig {
    pub dx: f64,
    pub dt: f64,
    pub r_domain: f64,
    /// Resamples every edge's control interval when set.
    pub controls_per_edge: Option<usize>,
    pub park_allowed: bool,
}

impl DppConfig {
    pub fn new(dx: f64, dt: f64, r_domain: f64) -> Self {
        Self { dx, dt, r_domain, controls_per_edge: None, park_allowed: true }
    }

    fn system(&self, cs: &ControlSystem) -> Result<ControlSystem> {
        match self.controls_per_edge {
            Some(n) if n < 3 => Err(Error::InvalidProblem("at least three controls per edge".into())),
            Some(n) => Ok(cs.with_control_count(n)),
            None => Ok(cs.clone()),
        }
    }
}

struct Stepper<'a> {
    cs: &'a ControlSystem,
    grid: &'a Grid,
    limiter: TimeSignal,
    park_allowed: bool,
}

impl<'a> Stepper<'a> {
    fn new(cs: &'a ControlSystem, grid: &'a Grid, park_allowed: bool) -> Result<Self> {
        if grid.edge_count() != cs.edges().len() || grid.orientations() != cs.orientations() {
            return Err(Error::InvalidProblem("grid and control system disagree on the geometry".into()));
        }
        let limiter = cs.flux_limiter();
        if limiter.horizon() < grid.horizon() * (1.0 - 1e-12) {
            return Err(Error::HorizonTooShort { signal: limiter.horizon(), required: grid.horizon() });
        }
        let speed = cs.speed_bound();
        grid.check_cfl(speed)?;
        Ok(Self { cs, grid, limiter, park_allowed })
    }

    fn limiter_integral(&self, a: f64, b: f64) -> f64 {
        let hz = self.limiter.horizon();
        let (a, b) = (a.clamp(0.0, hz), b.clamp(0.0, hz));
        if b > a {
            self.limiter.integral(a, b).expect("window inside horizon")
        } else {
            0.0
        }
    }

    /// Linear interpolation along an edge; distances past the truncation
    /// radius read the last node.
    #[inline]
    fn interp(&self, u: &[f64], edge: usize, dist: f64) -> f64 {
        let g = self.grid;
        let n = g.nodes_per_edge();
        let s = (dist / g.dx()).clamp(0.0, n as f64);
        let k = libm::floor(s) as usize;
        if k >= n {
            return u[g.node(edge, n)];
        }
        let w = s - k as f64;
        let lo = u[g.node(edge, k)];
        if w == 0.0 {
            lo
        } else {
            lo * (1.0 - w) + u[g.node(edge, k + 1)] * w
        }
    }

    /// Edge-local `(speed, cost)` pairs on edge `j` at distance `y`, frozen
    /// over `[t0, t1]`.
    fn local_pairs(&self, frozen: &crate::control::ControlEdge, j: usize, t0: f64, y: f64) -> Vec<(f64, f64)> {
        let sign = self.cs.orientations()[j].sign();
        frozen
            .speed_cost_pairs(t0, sign * y)
            .into_iter()
            .map(|(f, l)| (sign * f, l))
            .collect()
    }

    fn step(&self, u: &[f64], t0: f64, dt: f64) -> Result<Vec<f64>> {
        let g = self.grid;
        let n = g.nodes_per_edge();
        let dx = g.dx();
        let t1 = t0 + dt;
        let frozen: Vec<_> = self.cs.edges().iter().map(|e| e.frozen(t0, t1)).collect();
        let at_junction: Vec<Vec<(f64, f64)>> =
            frozen.iter().enumerate().map(|(j, e)| self.local_pairs(e, j, t0, 0.0)).collect();

        let mut next = vec![0.0; u.len()];

        // junction: park, or arrive along some edge
        let mut best = f64::INFINITY;
        if self.park_allowed {
            best = u[0] - self.limiter_integral(t0, t1);
        }
        for (m, pairs) in at_junction.iter().enumerate() {
            for &(w, l) in pairs {
                if w < 0.0 {
                    best = best.min(self.interp(u, m, -w * dt) + l * dt);
                }
            }
        }
        if !best.is_finite() {
            return Err(Error::NoAdmissibleControl { edge: 0, sign: "inbound", t: t0, x: 0.0 });
        }
        next[0] = best;

        for (j, edge) in frozen.iter().enumerate() {
            let x_dep = edge.x_dependent();
            let shared = if x_dep { None } else { Some(&at_junction[j]) };
            for k in 1..=n {
                let y = k as f64 * dx;
                let owned;
                let pairs = match shared {
                    Some(p) => p,
                    None => {
                        owned = self.local_pairs(edge, j, t0, y);
                        &owned
                    }
                };
                let mut best = f64::INFINITY;
                for &(v, l) in pairs {
                    let foot = y - v * dt;
                    let cand = if foot >= 0.0 {
                        self.interp(u, j, foot) + l * dt
                    } else {
                        self.split_at_junction(u, &at_junction, t0, dt, y / v, l)
                    };
                    best = best.min(cand);
                }
                next[g.node(j, k)] = best;
            }
        }
        Ok(next)
    }

    /// Best value for a trajectory that spends the last `tau` of the step
    /// on its edge (cost rate `l`) after leaving the junction.
    fn split_at_junction(&self, u: &[f64], at_junction: &[Vec<(f64, f64)>], t0: f64, dt: f64, tau: f64, l: f64) -> f64 {
        let before = dt - tau;
        let mut best = f64::INFINITY;
        if self.park_allowed {
            best = u[0] - self.limiter_integral(t0, t0 + before);
        }
        for (m, pairs) in at_junction.iter().enumerate() {
            for &(w, lm) in pairs {
                if w < 0.0 {
                    best = best.min(self.interp(u, m, -w * before) + lm * before);
                }
            }
        }
        best + l * tau
    }
}

fn sample_datum(u0: &InitialDatum, grid: &Grid) -> Vec<f64> {
    (0..grid.node_count())
        .map(|node| u0.eval(grid.point(node).edge, grid.signed_position(node)))
        .collect()
}

/// Grid used by [`value_function`].
pub fn grid_for(cs: &ControlSystem, horizon: f64, cfg: &DppConfig) -> Result<Grid> {
    Grid::new(cfg.dx, cfg.dt, horizon, cfg.r_domain, cs.orientations().to_vec())
}

/// Value function on `[0, horizon]` from the initial cost `u0`.
pub fn value_function(cs: &ControlSystem, u0: &InitialDatum, horizon: f64, cfg: &DppConfig) -> Result<SolutionField> {
    let cs = cfg.system(cs)?;
    let grid = grid_for(&cs, horizon, cfg)?;
    let initial = sample_datum(u0, &grid);
    value_function_from(&cs, &grid, initial, cfg.park_allowed)
}

/// Value function from arbitrary nodal data at `t = 0`.
pub fn value_function_from(cs: &ControlSystem, grid: &Grid, initial: Vec<f64>, park_allowed: bool) -> Result<SolutionField> {
    let levels = march(cs, grid, initial, 0, park_allowed)?;
    SolutionField::new(grid.clone(), levels)
}

fn march(cs: &ControlSystem, grid: &Grid, start: Vec<f64>, start_level: usize, park: bool) -> Result<Vec<Vec<f64>>> {
    if start.len() != grid.node_count() {
        return Err(Error::InvalidProblem("initial values do not match the grid".into()));
    }
    let stepper = Stepper::new(cs, grid, park)?;
    let mut levels = Vec::with_capacity(grid.levels() - start_level);
    levels.push(start);
    for n in start_level..grid.steps() {
        let t0 = grid.time(n);
        let dt = grid.time(n + 1) - t0;
        let next = stepper.step(levels.last().expect("non-empty"), t0, dt)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { level: n + 1 });
        }
        levels.push(next);
    }
    Ok(levels)
}

/// Restarts the recursion from level `s` of `field` and returns the largest
/// deviation from `field` over all later levels.
pub fn dpp_consistency_check(cs: &ControlSystem, field: &SolutionField, s: f64, park_allowed: bool) -> Result<f64> {
    let grid = field.grid();
    let level = grid
        .level_of(s)
        .ok_or_else(|| Error::InvalidProblem(alloc::format!("restart time {s} is not on the grid")))?;
    let restarted = march(cs, grid, field.level(level).to_vec(), level, park_allowed)?;
    let mut worst: f64 = 0.0;
    for (offset, values) in restarted.iter().enumerate() {
        for (a, b) in values.iter().zip(field.level(level + offset)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Constants of the boundedness and Lipschitz estimates for the value
/// function: `L = max_i ‖l_i‖∞`, `Ā = |A₀| + ‖l₀‖∞` and the controllability
/// radius `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueBounds {
    pub cost: f64,
    pub junction: f64,
    pub delta: f64,
}

impl ValueBounds {
    pub fn of(cs: &ControlSystem) -> Self {
        Self { cost: cs.cost_bound(), junction: cs.junction_cost_bound(), delta: cs.delta() }
    }

    /// `2L + Ā`
    pub fn rate(&self) -> f64 {
        2.0 * self.cost + self.junction
    }

    /// `(2L + Ā) T + ‖u₀‖∞`
    pub fn sup_bound(&self, horizon: f64, initial_sup: f64) -> f64 {
        self.rate() * horizon + initial_sup
    }

    /// `2 (2L + Ā) / δ`
    pub fn space_lipschitz(&self) -> f64 {
        2.0 * self.rate() / self.delta
    }
}

/// Measured counterparts of [`ValueBounds`] on a computed field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsAudit {
    pub sup: f64,
    pub sup_bound: f64,
    /// `max (|u(x,t) - u(x,s)| - (2L+Ā)|t-s|)` over nodes and level pairs.
    pub time_excess: f64,
    pub space_lipschitz: f64,
    pub space_bound: f64,
}

/// Compares a field against the value-function estimates; the spatial
/// quotient is measured within `radius` of the junction.
pub fn audit_bounds(cs: &ControlSystem, field: &SolutionField, initial_sup: f64, radius: f64) -> BoundsAudit {
    let b = ValueBounds::of(cs);
    let g = field.grid();
    let rate = b.rate();
    let mut time_excess = f64::NEG_INFINITY;
    for node in 0..g.node_count() {
        for n in 0..g.levels() {
            for m in (n + 1)..g.levels() {
                let d = (field.value(m, node) - field.value(n, node)).abs() - rate * (g.time(m) - g.time(n));
                time_excess = time_excess.max(d);
            }
        }
    }
    BoundsAudit {
        sup: field.sup_norm(),
        sup_bound: b.sup_bound(g.horizon(), initial_sup),
        time_excess: time_excess.max(0.0),
        space_lipschitz: field.space_lipschitz_within(radius),
        space_bound: b.space_lipschitz(),
    }
}

/// Regime of a trajectory on one time interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Edge(usize),
    Junction,
}

/// A piecewise-linear trajectory with its controls and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub times: Vec<f64>,
    pub points: Vec<StarPoint>,
    /// One entry per interval.
    pub regimes: Vec<Regime>,
    /// Control value per interval (`None` while parked).
    pub controls: Vec<Option<f64>>,
    pub cost: f64,
}

impl TrajectorySample {
    /// Signed positions (whole-line coordinates on the two-edge line).
    pub fn signed_positions(&self, cs: &ControlSystem) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| if p.is_junction() { 0.0 } else { cs.orientations()[p.edge].sign() * p.dist })
            .collect()
    }

    /// Regimes agree with positions and parked intervals do not move.
    pub fn is_consistent(&self) -> bool {
        if self.times.len() != self.points.len() || self.regimes.len() + 1 != self.times.len() {
            return false;
        }
        self.regimes.iter().enumerate().all(|(i, r)| {
            let (a, b) = (self.points[i], self.points[i + 1]);
            match r {
                Regime::Junction => a.is_junction() && b.is_junction(),
                Regime::Edge(j) => (a.is_junction() || a.edge == *j) && (b.is_junction() || b.edge == *j),
            }
        })
    }
}

/// Largest number of trajectories [`enumerate_trajectories`] will explore.
pub const ENUMERATION_BUDGET: f64 = 1e7;
pub const MAX_PIECES: usize = 6;
pub const MAX_CONTROLS_PER_PIECE: usize = 7;

#[derive(Clone, Copy)]
enum Action {
    Park,
    Move { edge: usize, control: f64 },
}

struct Enumerator<'a> {
    cs: &'a ControlSystem,
    limiter: TimeSignal,
    actions: Vec<Action>,
    breaks: Vec<f64>,
    target: StarPoint,
    best: Option<TrajectorySample>,
}

const POSITION_TOL: f64 = 1e-9;

fn normalize(p: StarPoint) -> StarPoint {
    if p.dist.abs() <= 1e-12 {
        StarPoint::junction()
    } else {
        p
    }
}

fn same_point(a: StarPoint, b: StarPoint) -> bool {
    if a.dist <= POSITION_TOL && b.dist <= POSITION_TOL {
        return true;
    }
    a.edge == b.edge && (a.dist - b.dist).abs() <= POSITION_TOL
}

impl Enumerator<'_> {
    fn limiter_integral(&self, a: f64, b: f64) -> f64 {
        let hz = self.limiter.horizon();
        let (a, b) = (a.clamp(0.0, hz), b.clamp(0.0, hz));
        if b > a {
            self.limiter.integral(a, b).expect("inside horizon")
        } else {
            0.0
        }
    }

    fn search(&mut self, piece: usize, path: &mut TrajectorySample) {
        if piece + 1 == self.breaks.len() {
            let end = *path.points.last().expect("non-empty");
            if same_point(end, self.target) && self.best.as_ref().map_or(true, |b| path.cost < b.cost) {
                self.best = Some(path.clone());
            }
            return;
        }
        let (a, b) = (self.breaks[piece], self.breaks[piece + 1]);
        let here = *path.points.last().expect("non-empty");
        for i in 0..self.actions.len() {
            let action = self.actions[i];
            let saved = (path.times.len(), path.cost);
            let ok = match action {
                Action::Park => {
                    if !here.is_junction() {
                        false
                    } else {
                        path.cost -= self.limiter_integral(a, b);
                        path.times.push(b);
                        path.points.push(StarPoint::junction());
                        path.regimes.push(Regime::Junction);
                        path.controls.push(None);
                        true
                    }
                }
                Action::Move { edge, control } => self.apply_move(path, here, edge, control, a, b),
            };
            if ok {
                self.search(piece + 1, path);
            }
            path.times.truncate(saved.0);
            path.points.truncate(saved.0);
            path.regimes.truncate(saved.0 - 1);
            path.controls.truncate(saved.0 - 1);
            path.cost = saved.1;
        }
    }

    fn apply_move(&self, path: &mut TrajectorySample, here: StarPoint, edge: usize, control: f64, a: f64, b: f64) -> bool {
        if !here.is_junction() && here.edge != edge {
            return false;
        }
        let ctrl = &self.cs.edges()[edge];
        let frozen = ctrl.frozen(a, b);
        let sign = self.cs.orientations()[edge].sign();
        let x = sign * here.dist;
        let speed = sign * frozen.dynamics().eval(a, x, control);
        let cost = frozen.cost().eval(a, x, control);
        let h = b - a;
        if here.is_junction() && speed <= 0.0 {
            // staying at the vertex is parking
            return false;
        }
        let y = here.dist + speed * h;
        if y < -1e-12 {
            let tau = here.dist / -speed;
            path.cost += cost * tau - self.limiter_integral(a + tau, b);
            path.times.push(a + tau);
            path.points.push(StarPoint::junction());
            path.regimes.push(Regime::Edge(edge));
            path.controls.push(Some(control));
            path.times.push(b);
            path.points.push(StarPoint::junction());
            path.regimes.push(Regime::Junction);
            path.controls.push(None);
        } else {
            path.cost += cost * h;
            path.times.push(b);
            path.points.push(normalize(StarPoint { edge, dist: y.max(0.0) }));
            path.regimes.push(Regime::Edge(edge));
            path.controls.push(Some(control));
        }
        true
    }
}

/// Exact minimum over piecewise-constant controls with `pieces` equal pieces
/// on `[t_start, t_end]`, from `from` to `to`, including the initial cost
/// `u0(from)`. Returns `None` in the trajectory slot's place when no
/// enumerated trajectory hits the target.
pub fn enumerate_trajectories(
    cs: &ControlSystem,
    u0: &InitialDatum,
    from: (StarPoint, f64),
    to: (StarPoint, f64),
    pieces: usize,
) -> Result<Option<(f64, TrajectorySample)>> {
    let (start, t_start) = (normalize(from.0), from.1);
    let (target, t_end) = (normalize(to.0), to.1);
    let sign = |p: StarPoint| if p.is_junction() { 0.0 } else { cs.orientations()[p.edge].sign() * p.dist };
    let initial = u0.eval(start.edge, sign(start));
    if t_end < t_start {
        return Err(Error::InvalidProblem("trajectory ends before it starts".into()));
    }
    if t_end == t_start {
        let sample = TrajectorySample {
            times: vec![t_start],
            points: vec![start],
            regimes: Vec::new(),
            controls: Vec::new(),
            cost: initial,
        };
        return Ok(same_point(start, target).then_some((initial, sample)));
    }
    if pieces == 0 {
        return Err(Error::InvalidProblem("need at least one piece".into()));
    }
    let per_edge = cs.edges().iter().map(|e| e.samples().len());
    let branching = 1 + per_edge.clone().sum::<usize>();
    let branches = libm::pow(branching as f64, pieces as f64);
    if pieces > MAX_PIECES || per_edge.clone().any(|n| n > MAX_CONTROLS_PER_PIECE) || branches > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { branches });
    }
    let mut actions = vec![Action::Park];
    for (edge, e) in cs.edges().iter().enumerate() {
        actions.extend(e.samples().iter().map(|&control| Action::Move { edge, control }));
    }
    let breaks = (0..=pieces)
        .map(|k| if k == pieces { t_end } else { t_start + (t_end - t_start) * k as f64 / pieces as f64 })
        .collect();
    let mut search = Enumerator { cs, limiter: cs.flux_limiter(), actions, breaks, target, best: None };
    let mut path = TrajectorySample {
        times: vec![t_start],
        points: vec![start],
        regimes: Vec::new(),
        controls: Vec::new(),
        cost: initial,
    };
    search.search(0, &mut path);
    Ok(search.best.map(|b| (b.cost, b)))
}
