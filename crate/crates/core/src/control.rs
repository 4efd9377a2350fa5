//! Optimal-control data on the junction: per-edge controls, dynamics and
//! running costs, plus the junction cost. Induces the edge Hamiltonians
//! through `H(t, x, p) = sup_α { f(t, x, α) p - l(t, x, α) }`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::hamiltonian::{Coefficient, Hamiltonian};
use crate::problem::{InitialDatum, JunctionProblem, Orientation};
use crate::time_signal::TimeSignal;

type ExprFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// Scalar function of `(t, x, α)` used for dynamics and running costs.
#[derive(Clone)]
pub enum ControlExpr {
    /// `Σ_k c_k(t) α^k`
    Poly(Vec<Coefficient>),
    /// Opaque `(t, x, α) ↦ value` with a declared bound on `|value|`.
    Custom {
        eval: Arc<ExprFn>,
        bound: f64,
        x_dependent: bool,
        time_dependent: bool,
        frozen_at: Option<f64>,
    },
}

impl fmt::Debug for ControlExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlExpr::Poly(c) => f.debug_tuple("Poly").field(c).finish(),
            ControlExpr::Custom { bound, .. } => f.debug_struct("Custom").field("bound", bound).finish(),
        }
    }
}

impl ControlExpr {
    pub fn constant(c: impl Into<Coefficient>) -> Self {
        ControlExpr::Poly(alloc::vec![c.into()])
    }

    /// `scale · α`
    pub fn linear(scale: f64) -> Self {
        ControlExpr::Poly(alloc::vec![Coefficient::Const(0.0), Coefficient::Const(scale)])
    }

    /// `c0 + c1 α`
    pub fn affine(c0: impl Into<Coefficient>, c1: impl Into<Coefficient>) -> Self {
        ControlExpr::Poly(alloc::vec![c0.into(), c1.into()])
    }

    pub fn custom(
        eval: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        bound: f64,
        x_dependent: bool,
        time_dependent: bool,
    ) -> Self {
        ControlExpr::Custom { eval: Arc::new(eval), bound, x_dependent, time_dependent, frozen_at: None }
    }

    pub fn eval(&self, t: f64, x: f64, alpha: f64) -> f64 {
        match self {
            ControlExpr::Poly(coeffs) => {
                let mut acc = 0.0;
                let mut power = 1.0;
                for c in coeffs {
                    acc += c.eval(t) * power;
                    power *= alpha;
                }
                acc
            }
            ControlExpr::Custom { eval, frozen_at, .. } => eval(frozen_at.unwrap_or(t), x, alpha),
        }
    }

    /// Upper bound on `|value|` over the given control samples.
    pub fn bound_over(&self, samples: &[f64]) -> f64 {
        match self {
            ControlExpr::Poly(coeffs) => samples
                .iter()
                .map(|&a| {
                    let mut power = 1.0;
                    let mut acc = 0.0;
                    for c in coeffs {
                        acc += c.sup_abs() * power;
                        power *= a.abs();
                    }
                    acc
                })
                .fold(0.0, f64::max),
            ControlExpr::Custom { bound, .. } => *bound,
        }
    }

    pub fn x_dependent(&self) -> bool {
        matches!(self, ControlExpr::Custom { x_dependent: true, .. })
    }

    pub fn is_time_constant(&self) -> bool {
        match self {
            ControlExpr::Poly(coeffs) => coeffs.iter().all(|c| c.signal().is_none()),
            ControlExpr::Custom { time_dependent, frozen_at, .. } => !time_dependent || frozen_at.is_some(),
        }
    }

    fn opaque_in_time(&self) -> bool {
        matches!(self, ControlExpr::Custom { time_dependent: true, frozen_at: None, .. })
    }

    pub fn time_signals(&self) -> Vec<&TimeSignal> {
        match self {
            ControlExpr::Poly(coeffs) => coeffs.iter().filter_map(Coefficient::signal).collect(),
            ControlExpr::Custom { .. } => Vec::new(),
        }
    }

    /// Window means of the signal coefficients; opaque expressions are
    /// sampled at the window midpoint.
    pub fn frozen(&self, a: f64, b: f64) -> Self {
        match self {
            ControlExpr::Poly(coeffs) => ControlExpr::Poly(coeffs.iter().map(|c| c.frozen(a, b)).collect()),
            ControlExpr::Custom { eval, bound, x_dependent, time_dependent, frozen_at } => ControlExpr::Custom {
                eval: eval.clone(),
                bound: *bound,
                x_dependent: *x_dependent,
                time_dependent: *time_dependent,
                frozen_at: frozen_at.or(if *time_dependent { Some(0.5 * (a + b)) } else { None }),
            },
        }
    }

    pub fn mollified(&self, eps: f64) -> Result<Self> {
        match self {
            ControlExpr::Poly(coeffs) => {
                Ok(ControlExpr::Poly(coeffs.iter().map(|c| c.mollify(eps)).collect::<Result<_>>()?))
            }
            other if other.opaque_in_time() => Err(Error::NonSeparableTimeDependence),
            other => Ok(other.clone()),
        }
    }
}

/// Uniform sample of a compact control interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSet {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl ControlSet {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    /// Sample points including both endpoints (a single point when `n == 1`).
    pub fn samples(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => alloc::vec![self.min],
            n => (0..n)
                .map(|k| {
                    if k == n - 1 {
                        self.max
                    } else {
                        self.min + (self.max - self.min) * (k as f64 / (n - 1) as f64)
                    }
                })
                .collect(),
        }
    }

    pub fn mesh_width(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.n - 1) as f64
        }
    }
}

/// Controls, dynamics `f` and running cost `l` of one edge, in the edge's
/// own (whole-line) coordinate.
#[derive(Clone)]
pub struct ControlEdge {
    dynamics: ControlExpr,
    cost: ControlExpr,
    controls: ControlSet,
    samples: Vec<f64>,
    // (f, l) per sample when both are independent of (t, x)
    pairs: Option<Vec<(f64, f64)>>,
    // costs at zero-speed controls found between samples, cached like `pairs`
    rest_costs: Option<Vec<f64>>,
}

impl fmt::Debug for ControlEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlEdge")
            .field("dynamics", &self.dynamics)
            .field("cost", &self.cost)
            .field("controls", &self.controls)
            .finish()
    }
}

impl ControlEdge {
    pub fn new(dynamics: ControlExpr, cost: ControlExpr, controls: ControlSet) -> Self {
        let samples = controls.samples();
        let static_data = !dynamics.x_dependent()
            && !cost.x_dependent()
            && dynamics.is_time_constant()
            && cost.is_time_constant();
        let pairs = static_data
            .then(|| samples.iter().map(|&a| (dynamics.eval(0.0, 0.0, a), cost.eval(0.0, 0.0, a))).collect());
        let mut edge = Self { dynamics, cost, controls, samples, pairs, rest_costs: None };
        if static_data {
            edge.rest_costs = Some(edge.zero_speed_costs(0.0, 0.0));
        }
        edge
    }

    /// Cost at every control where the speed changes sign strictly between
    /// two neighbouring samples. Bisection, so only continuity in `α` is used.
    fn zero_speed_costs(&self, t: f64, x: f64) -> Vec<f64> {
        let f = |a: f64| self.dynamics.eval(t, x, a);
        let mut out = Vec::new();
        for w in self.samples.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let (flo, fhi) = (f(lo), f(hi));
            if !(flo * fhi < 0.0) {
                continue;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (f(mid) < 0.0) == (flo < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(self.cost.eval(t, x, 0.5 * (lo + hi)));
        }
        out
    }

    pub fn dynamics(&self) -> &ControlExpr {
        &self.dynamics
    }

    pub fn cost(&self) -> &ControlExpr {
        &self.cost
    }

    pub fn controls(&self) -> ControlSet {
        self.controls
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn with_control_count(&self, n: usize) -> Self {
        Self::new(self.dynamics.clone(), self.cost.clone(), ControlSet { n, ..self.controls })
    }

    /// `(f, l)` for every control sample at `(t, x)`.
    pub fn speed_cost_pairs(&self, t: f64, x: f64) -> Vec<(f64, f64)> {
        match &self.pairs {
            Some(p) => p.clone(),
            None => self
                .samples
                .iter()
                .map(|&a| (self.dynamics.eval(t, x, a), self.cost.eval(t, x, a)))
                .collect(),
        }
    }

    fn fold_pairs(&self, t: f64, x: f64, mut visit: impl FnMut(f64, f64)) {
        match &self.pairs {
            Some(p) => p.iter().for_each(|&(f, l)| visit(f, l)),
            None => self
                .samples
                .iter()
                .for_each(|&a| visit(self.dynamics.eval(t, x, a), self.cost.eval(t, x, a))),
        }
    }

    /// `max_α f p - l` over the control samples.
    pub fn hamiltonian(&self, t: f64, x: f64, p: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        self.fold_pairs(t, x, |f, l| best = best.max(f * p - l));
        best
    }

    /// `max f p - l` over the samples with `sign · f ≥ 0`, or `None` when
    /// no sample qualifies.
    pub fn restricted_hamiltonian(&self, t: f64, x: f64, p: f64, sign: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        self.fold_pairs(t, x, |f, l| {
            if sign * f >= 0.0 {
                let v = f * p - l;
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        });
        // a control with zero speed qualifies for either sign
        let rest = match &self.rest_costs {
            Some(c) => c.iter().fold(f64::INFINITY, |m, &l| m.min(l)),
            None => self.zero_speed_costs(t, x).into_iter().fold(f64::INFINITY, f64::min),
        };
        if rest.is_finite() {
            best = Some(best.map_or(-rest, |b| b.max(-rest)));
        }
        best
    }

    pub fn speed_bound(&self) -> f64 {
        match &self.pairs {
            Some(p) => p.iter().fold(0.0, |m, &(f, _)| f64::max(m, f.abs())),
            None => self.dynamics.bound_over(&self.samples),
        }
    }

    pub fn cost_bound(&self) -> f64 {
        match &self.pairs {
            Some(p) => p.iter().fold(0.0, |m, &(_, l)| f64::max(m, l.abs())),
            None => self.cost.bound_over(&self.samples),
        }
    }

    pub fn x_dependent(&self) -> bool {
        self.dynamics.x_dependent() || self.cost.x_dependent()
    }

    pub fn has_opaque_time_dependence(&self) -> bool {
        self.dynamics.opaque_in_time() || self.cost.opaque_in_time()
    }

    pub fn time_signals(&self) -> Vec<&TimeSignal> {
        let mut v = self.dynamics.time_signals();
        v.extend(self.cost.time_signals());
        v
    }

    pub fn frozen(&self, a: f64, b: f64) -> Self {
        if self.pairs.is_some() {
            return self.clone();
        }
        Self::new(self.dynamics.frozen(a, b), self.cost.frozen(a, b), self.controls)
    }

    pub fn mollified(&self, eps: f64) -> Result<Self> {
        Ok(Self::new(self.dynamics.mollified(eps)?, self.cost.mollified(eps)?, self.controls))
    }
}

/// Complete control model on a star junction.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    edges: Vec<Arc<ControlEdge>>,
    orientations: Vec<Orientation>,
    a0: f64,
    l0: TimeSignal,
    delta: f64,
}

impl ControlSystem {
    /// Two-edge line: edge 0 lives on `x > 0`, edge 1 on `x < 0`, both given
    /// in whole-line coordinates.
    pub fn line(right: ControlEdge, left: ControlEdge, a0: f64, l0: TimeSignal, delta: f64) -> Result<Self> {
        Self::new(
            alloc::vec![right, left],
            alloc::vec![Orientation::Outward, Orientation::Reflected],
            a0,
            l0,
            delta,
        )
    }

    /// Star with every edge parameterized by distance from the junction.
    pub fn star(edges: Vec<ControlEdge>, a0: f64, l0: TimeSignal, delta: f64) -> Result<Self> {
        let orientations = alloc::vec![Orientation::Outward; edges.len()];
        Self::new(edges, orientations, a0, l0, delta)
    }

    pub fn new(
        edges: Vec<ControlEdge>,
        orientations: Vec<Orientation>,
        a0: f64,
        l0: TimeSignal,
        delta: f64,
    ) -> Result<Self> {
        if edges.len() < 2 || edges.len() != orientations.len() {
            return Err(Error::InvalidProblem("a junction needs at least two edges".into()));
        }
        if let Some(edge) = edges.iter().position(|e| e.samples().is_empty()) {
            return Err(Error::EmptyControlSet { edge });
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidProblem("controllability delta must be positive".into()));
        }
        if !a0.is_finite() {
            return Err(Error::InvalidProblem("A0 must be finite".into()));
        }
        Ok(Self { edges: edges.into_iter().map(Arc::new).collect(), orientations, a0, l0, delta })
    }

    pub fn edges(&self) -> &[Arc<ControlEdge>] {
        &self.edges
    }

    pub fn edge(&self, edge: usize) -> Result<&Arc<ControlEdge>> {
        self.edges
            .get(edge)
            .ok_or_else(|| Error::InvalidProblem(alloc::format!("no edge {edge}")))
    }

    pub fn orientations(&self) -> &[Orientation] {
        &self.orientations
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn l0(&self) -> &TimeSignal {
        &self.l0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_control_count(&self, n: usize) -> Self {
        Self {
            edges: self.edges.iter().map(|e| Arc::new(e.with_control_count(n))).collect(),
            ..self.clone()
        }
    }

    /// `A(t) = max(-l₀(t), A₀)`.
    pub fn flux_limiter(&self) -> TimeSignal {
        let a0 = self.a0;
        self.l0.map(|l| (-l).max(a0))
    }

    /// Hamiltonian of edge `edge` in its own whole-line coordinate.
    pub fn induced_hamiltonian(&self, edge: usize) -> Result<Hamiltonian> {
        Ok(Hamiltonian::induced(self.edge(edge)?.clone()))
    }

    /// The same Hamiltonian read in distance-from-junction coordinates.
    pub fn edge_local_hamiltonian(&self, edge: usize) -> Result<Hamiltonian> {
        let h = self.induced_hamiltonian(edge)?;
        Ok(match self.orientations[edge] {
            Orientation::Outward => h,
            Orientation::Reflected => h.reflected(),
        })
    }

    /// Envelopes built from controls with nonpositive / nonnegative speed.
    pub fn restricted_envelopes(&self, edge: usize) -> Result<RestrictedEnvelopes> {
        Ok(RestrictedEnvelopes { edge: self.edge(edge)?.clone(), index: edge })
    }

    /// `max_i sup |l_i|` over the control samples.
    pub fn cost_bound(&self) -> f64 {
        self.edges.iter().map(|e| e.cost_bound()).fold(0.0, f64::max)
    }

    pub fn speed_bound(&self) -> f64 {
        self.edges.iter().map(|e| e.speed_bound()).fold(0.0, f64::max)
    }

    /// `|A₀| + ‖l₀‖∞`.
    pub fn junction_cost_bound(&self) -> f64 {
        self.a0.abs() + self.l0.sup_abs()
    }

    /// Checks that on every sampled `(t, x)` the reachable speeds reach
    /// `±δ` and leave no gap wider than `δ` inside `[-δ, δ]`. Returns the
    /// worst shortfall (0 when the condition holds).
    pub fn controllability_shortfall(&self, times: &[f64], positions: &[f64]) -> f64 {
        let delta = self.delta;
        let mut worst: f64 = 0.0;
        for edge in &self.edges {
            for &t in times {
                for &x in positions {
                    let mut speeds: Vec<f64> = edge.speed_cost_pairs(t, x).iter().map(|p| p.0).collect();
                    speeds.sort_by(f64::total_cmp);
                    let lo = speeds[0];
                    let hi = speeds[speeds.len() - 1];
                    worst = worst.max(lo + delta).max(delta - hi);
                    let gap = speeds
                        .windows(2)
                        .filter(|w| w[1] >= -delta && w[0] <= delta)
                        .map(|w| w[1] - w[0])
                        .fold(0.0, f64::max);
                    worst = worst.max(gap - delta);
                }
            }
        }
        worst.max(0.0)
    }

    /// Junction problem whose edge Hamiltonians are induced by the controls
    /// and whose flux limiter is `max(-l₀, A₀)`.
    pub fn to_problem(&self, u0: InitialDatum, horizon: f64, r_domain: f64) -> Result<JunctionProblem> {
        let hs = (0..self.edges.len())
            .map(|j| self.edge_local_hamiltonian(j))
            .collect::<Result<Vec<_>>>()?;
        JunctionProblem::new(hs, self.orientations.clone(), self.flux_limiter(), u0, horizon, r_domain)
    }
}

/// `H⁻` / `H⁺` as sups over controls with `f ≤ 0` / `f ≥ 0`.
#[derive(Debug, Clone)]
pub struct RestrictedEnvelopes {
    edge: Arc<ControlEdge>,
    index: usize,
}

impl RestrictedEnvelopes {
    pub fn h_minus(&self, t: f64, x: f64, p: f64) -> Result<f64> {
        self.edge
            .restricted_hamiltonian(t, x, p, -1.0)
            .ok_or(Error::NoAdmissibleControl { edge: self.index, sign: "nonpositive", t, x })
    }

    pub fn h_plus(&self, t: f64, x: f64, p: f64) -> Result<f64> {
        self.edge
            .restricted_hamiltonian(t, x, p, 1.0)
            .ok_or(Error::NoAdmissibleControl { edge: self.index, sign: "nonnegative", t, x })
    }
}
