//! Junction problem instances: star geometry, edge Hamiltonians, flux
//! limiter, initial datum and horizon.
//!
//! Every edge is parameterized by the distance `y ≥ 0` from the junction and
//! its Hamiltonian is stored in that coordinate. The two-edge line is the
//! star whose edge 0 is `x = y > 0` and whose edge 1 is `x = -y < 0`; on
//! edge 1 the stored Hamiltonian is the mirror `H₂(t, -y, -q)` of the
//! whole-line one. With that convention the vertex condition reads
//! `u_t + max{A(t), H̃_j⁻(t, 0, q_j)} = 0` for every `J`, where `q_j` is the
//! outward slope along edge `j`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::hamiltonian::{a0_floor, Hamiltonian, SampleBox};
use crate::time_signal::TimeSignal;

/// How an edge's distance coordinate maps to the whole line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `x = y`
    Outward,
    /// `x = -y`
    Reflected,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Outward => 1.0,
            Orientation::Reflected => -1.0,
        }
    }
}

/// A point of the star: distance `dist` along edge `edge`; `dist == 0` is
/// the junction whatever the edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarPoint {
    pub edge: usize,
    pub dist: f64,
}

impl StarPoint {
    pub fn junction() -> Self {
        Self { edge: 0, dist: 0.0 }
    }

    /// Point of the two-edge line at whole-line coordinate `x`.
    pub fn on_line(x: f64) -> Self {
        if x < 0.0 {
            Self { edge: 1, dist: -x }
        } else {
            Self { edge: 0, dist: x }
        }
    }

    pub fn is_junction(&self) -> bool {
        self.dist == 0.0
    }
}

type DatumFn = dyn Fn(usize, f64) -> f64 + Send + Sync;

/// Lipschitz initial datum. Named forms act on the signed coordinate
/// `x = sign · y`; custom data receive `(edge, x)`.
#[derive(Clone)]
pub enum InitialDatum {
    Constant(f64),
    /// `scale · |x|`
    Abs { scale: f64 },
    /// `min(cap, |x|)`
    MinAbs { cap: f64 },
    /// `slope · x + intercept`
    Linear { slope: f64, intercept: f64 },
    Custom { eval: Arc<DatumFn>, lipschitz: f64 },
}

impl fmt::Debug for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDatum::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            InitialDatum::Abs { scale } => f.debug_struct("Abs").field("scale", scale).finish(),
            InitialDatum::MinAbs { cap } => f.debug_struct("MinAbs").field("cap", cap).finish(),
            InitialDatum::Linear { slope, intercept } => {
                f.debug_struct("Linear").field("slope", slope).field("intercept", intercept).finish()
            }
            InitialDatum::Custom { lipschitz, .. } => f.debug_struct("Custom").field("lipschitz", lipschitz).finish(),
        }
    }
}

impl InitialDatum {
    pub fn custom(eval: impl Fn(usize, f64) -> f64 + Send + Sync + 'static, lipschitz: f64) -> Self {
        InitialDatum::Custom { eval: Arc::new(eval), lipschitz }
    }

    pub fn eval(&self, edge: usize, x: f64) -> f64 {
        match self {
            InitialDatum::Constant(c) => *c,
            InitialDatum::Abs { scale } => scale * x.abs(),
            InitialDatum::MinAbs { cap } => x.abs().min(*cap),
            InitialDatum::Linear { slope, intercept } => slope * x + intercept,
            InitialDatum::Custom { eval, .. } => eval(edge, x),
        }
    }

    /// Declared Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match self {
            InitialDatum::Constant(_) => 0.0,
            InitialDatum::Abs { scale } => scale.abs(),
            InitialDatum::MinAbs { .. } => 1.0,
            InitialDatum::Linear { slope, .. } => slope.abs(),
            InitialDatum::Custom { lipschitz, .. } => *lipschitz,
        }
    }
}

/// One edge of the star.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Hamiltonian in distance-from-junction coordinates.
    pub hamiltonian: Hamiltonian,
    pub orientation: Orientation,
}

/// Validated problem instance consumed by both solvers.
#[derive(Debug, Clone)]
pub struct JunctionProblem {
    edges: Vec<Edge>,
    flux_limiter: TimeSignal,
    initial_datum: InitialDatum,
    horizon: f64,
    r_domain: f64,
}

/// Outcome of one assumption audit.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst sample and its offending value, if any sample was inspected.
    pub worst: Option<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl JunctionProblem {
    /// Star problem; `hamiltonians` are in distance-from-junction
    /// coordinates.
    pub fn new(
        hamiltonians: Vec<Hamiltonian>,
        orientations: Vec<Orientation>,
        flux_limiter: TimeSignal,
        initial_datum: InitialDatum,
        horizon: f64,
        r_domain: f64,
    ) -> Result<Self> {
        if hamiltonians.len() < 2 {
            return Err(Error::InvalidProblem("a junction needs at least two edges".into()));
        }
        if hamiltonians.len() != orientations.len() {
            return Err(Error::InvalidProblem("one orientation per edge".into()));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidProblem("horizon must be positive".into()));
        }
        if !(r_domain > 0.0) || !r_domain.is_finite() {
            return Err(Error::InvalidProblem("domain radius must be positive".into()));
        }
        let signals = core::iter::once(&flux_limiter).chain(hamiltonians.iter().flat_map(|h| h.time_signals()));
        for s in signals {
            if s.horizon() < horizon * (1.0 - 1e-12) {
                return Err(Error::HorizonTooShort { signal: s.horizon(), required: horizon });
            }
        }
        let edges = hamiltonians
            .into_iter()
            .zip(orientations)
            .map(|(hamiltonian, orientation)| Edge { hamiltonian, orientation })
            .collect();
        Ok(Self { edges, flux_limiter, initial_datum, horizon, r_domain })
    }

    /// Whole-line problem: `h_right` on `x > 0`, `h_left` on `x < 0`, both in
    /// whole-line coordinates.
    pub fn line(
        h_right: Hamiltonian,
        h_left: Hamiltonian,
        flux_limiter: TimeSignal,
        initial_datum: InitialDatum,
        horizon: f64,
        r_domain: f64,
    ) -> Result<Self> {
        Self::new(
            alloc::vec![h_right, h_left.reflected()],
            alloc::vec![Orientation::Outward, Orientation::Reflected],
            flux_limiter,
            initial_datum,
            horizon,
            r_domain,
        )
    }

    /// Star with all edges in distance-from-junction coordinates.
    pub fn star(
        hamiltonians: Vec<Hamiltonian>,
        flux_limiter: TimeSignal,
        initial_datum: InitialDatum,
        horizon: f64,
        r_domain: f64,
    ) -> Result<Self> {
        let orientations = alloc::vec![Orientation::Outward; hamiltonians.len()];
        Self::new(hamiltonians, orientations, flux_limiter, initial_datum, horizon, r_domain)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn orientations(&self) -> Vec<Orientation> {
        self.edges.iter().map(|e| e.orientation).collect()
    }

    pub fn is_line(&self) -> bool {
        self.edges.len() == 2
            && self.edges[0].orientation == Orientation::Outward
            && self.edges[1].orientation == Orientation::Reflected
    }

    /// Edge Hamiltonian in its whole-line coordinate.
    pub fn whole_line_hamiltonian(&self, edge: usize) -> Hamiltonian {
        let e = &self.edges[edge];
        match e.orientation {
            Orientation::Outward => e.hamiltonian.clone(),
            Orientation::Reflected => e.hamiltonian.reflected(),
        }
    }

    /// `(H₁, H₂)` of the whole-line form, for two-edge line problems.
    pub fn to_line(&self) -> Result<(Hamiltonian, Hamiltonian)> {
        if !self.is_line() {
            return Err(Error::InvalidProblem("not a two-edge line problem".into()));
        }
        Ok((self.whole_line_hamiltonian(0), self.whole_line_hamiltonian(1)))
    }

    pub fn flux_limiter(&self) -> &TimeSignal {
        &self.flux_limiter
    }

    pub fn initial_datum(&self) -> &InitialDatum {
        &self.initial_datum
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn r_domain(&self) -> f64 {
        self.r_domain
    }

    /// Largest declared slope-Lipschitz constant over the edges.
    pub fn max_lipschitz_p(&self) -> f64 {
        self.edges.iter().map(|e| e.hamiltonian.lipschitz_p()).fold(0.0, f64::max)
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(
            self.edges.iter().map(|e| e.hamiltonian.clone()).collect(),
            self.orientations(),
            self.flux_limiter.clone(),
            self.initial_datum.clone(),
            horizon,
            self.r_domain,
        )
    }

    pub fn with_r_domain(&self, r_domain: f64) -> Result<Self> {
        let mut p = self.clone();
        if !(r_domain > 0.0) {
            return Err(Error::InvalidProblem("domain radius must be positive".into()));
        }
        p.r_domain = r_domain;
        Ok(p)
    }

    /// Same geometry and datum with replaced edge Hamiltonians (edge-local)
    /// and flux limiter.
    pub fn with_data(&self, hamiltonians: Vec<Hamiltonian>, flux_limiter: TimeSignal) -> Result<Self> {
        if hamiltonians.len() != self.edges.len() {
            return Err(Error::InvalidProblem("one Hamiltonian per edge".into()));
        }
        Self::new(
            hamiltonians,
            self.orientations(),
            flux_limiter,
            self.initial_datum.clone(),
            self.horizon,
            self.r_domain,
        )
    }

    pub fn with_initial_datum(&self, initial_datum: InitialDatum) -> Self {
        Self { initial_datum, ..self.clone() }
    }

    /// Times at which a.e. conditions are sampled: midpoints of the cells of
    /// the union of the data breakpoints and a uniform mesh of `uniform`
    /// cells.
    pub fn sample_times(&self, uniform: usize) -> Vec<f64> {
        let mesh = TimeSignal::uniform(alloc::vec![0.0; uniform.max(1)], self.horizon).expect("positive horizon");
        let signals = core::iter::once(&self.flux_limiter)
            .chain(core::iter::once(&mesh))
            .chain(self.edges.iter().flat_map(|e| e.hamiltonian.time_signals()));
        let pts = TimeSignal::merged_breakpoints(signals, self.horizon);
        pts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// `max_j min_p H_j(t, 0, p)`.
    pub fn a0_floor(&self, t: f64) -> Result<f64> {
        a0_floor(self.edges.iter().map(|e| &e.hamiltonian), t)
    }

    /// Audits the standing assumptions. Fails hard only when the flux
    /// limiter drops below the floor; the other checks are reported.
    pub fn validate(&self) -> Result<ValidationReport> {
        self.validate_seeded(0)
    }

    /// [`validate`](Self::validate) with the random sampling of the
    /// convexity and slope audits driven by `seed`.
    pub fn validate_seeded(&self, seed: u64) -> Result<ValidationReport> {
        let mut checks = Vec::new();
        let times = self.sample_times(100);

        let mut worst: Option<(f64, f64)> = None;
        for &t in &times {
            let deficit = self.a0_floor(t)? - self.flux_limiter.eval(t)?;
            if worst.map_or(true, |(_, d)| deficit > d) {
                worst = Some((t, deficit));
            }
        }
        if let Some((t, deficit)) = worst {
            if deficit > 1e-9 {
                return Err(Error::FluxLimiterBelowFloor { t, deficit });
            }
            checks.push(Check {
                name: "flux_limiter_floor".into(),
                passed: true,
                worst: Some((format!("t={t}"), deficit)),
            });
        }

        let dx = self.r_domain / 400.0;
        let declared = self.initial_datum.lipschitz();
        let mut worst_q: (String, f64) = (String::new(), 0.0);
        for (j, e) in self.edges.iter().enumerate() {
            let sign = e.orientation.sign();
            let mut prev = self.initial_datum.eval(j, 0.0);
            for k in 1..=400 {
                let x = sign * k as f64 * dx;
                let cur = self.initial_datum.eval(j, x);
                let q = (cur - prev).abs() / dx;
                if q > worst_q.1 {
                    worst_q = (format!("edge {j}, x={x}"), q);
                }
                prev = cur;
            }
        }
        checks.push(Check {
            name: "initial_datum_lipschitz".into(),
            passed: worst_q.1 <= declared * (1.0 + 1e-6) + 1e-12,
            worst: Some(worst_q),
        });

        for (j, e) in self.edges.iter().enumerate() {
            let h = &e.hamiltonian;
            let bracket = 4.0 * h.lipschitz_p().max(1.0);
            let domain = SampleBox::new((0.0, self.horizon), (0.0, self.r_domain), (-bracket, bracket));
            let convex = h.check_convexity(domain, 200, seed.wrapping_add(17 + j as u64));
            let reach = bracket.min(h.slope_range());
            let slopes = SampleBox::new((0.0, self.horizon), (0.0, self.r_domain), (-reach, reach));
            checks.push(Check {
                name: format!("edge{j}_convexity"),
                passed: convex.is_ok(),
                worst: convex.err().map(|e| (format!("{e}"), 1.0)),
            });
            let measured = h.sampled_lipschitz_p(slopes, 200, seed.wrapping_add(29 + j as u64));
            checks.push(Check {
                name: format!("edge{j}_slope_lipschitz"),
                passed: measured <= h.lipschitz_p() * (1.0 + 1e-6),
                worst: Some((format!("declared {}", h.lipschitz_p()), measured)),
            });
            let coercive = times.iter().try_for_each(|&t| h.argmin(t, 0.0).map(|_| ()));
            checks.push(Check {
                name: format!("edge{j}_coercivity"),
                passed: coercive.is_ok(),
                worst: coercive.err().map(|e| (format!("{e}"), 1.0)),
            });
        }
        Ok(ValidationReport { checks })
    }

    /// `max{A, H̃_j⁻(t, 0, q_j)}` from outward edge slopes `q_j` and a given
    /// limiter value.
    pub fn junction_flux_local(&self, t: f64, a: f64, outward_slopes: &[f64]) -> Result<f64> {
        if outward_slopes.len() != self.edges.len() {
            return Err(Error::SlopeCountMismatch { expected: self.edges.len(), got: outward_slopes.len() });
        }
        let mut flux = a;
        for (e, &q) in self.edges.iter().zip(outward_slopes) {
            let (p_hat, h_min) = e.hamiltonian.argmin(t, 0.0)?;
            let h_minus = if q <= p_hat { e.hamiltonian.eval(t, 0.0, q) } else { h_min };
            flux = flux.max(h_minus);
        }
        Ok(flux)
    }

    /// Vertex Hamiltonian at time `t`. For the two-edge line the slopes are
    /// the whole-line one-sided derivatives `[u_x(0⁺), u_x(0⁻)]`, giving
    /// `max{A(t), H₁⁻(t, 0, u_x(0⁺)), H₂⁺(t, 0, u_x(0⁻))}`; for other stars
    /// they are outward slopes along each edge.
    pub fn junction_hamiltonian(&self, t: f64, slopes: &[f64]) -> Result<f64> {
        if slopes.len() != self.edges.len() {
            return Err(Error::SlopeCountMismatch { expected: self.edges.len(), got: slopes.len() });
        }
        let outward: Vec<f64> = self.edges.iter().zip(slopes).map(|(e, &s)| e.orientation.sign() * s).collect();
        self.junction_flux_local(t, self.flux_limiter.eval(t)?, &outward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn eikonal_line(a: f64, u0: InitialDatum) -> JunctionProblem {
        JunctionProblem::line(
            Hamiltonian::eikonal(),
            Hamiltonian::eikonal(),
            TimeSignal::constant(a, 1.0).unwrap(),
            u0,
            1.0,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn validate_accepts_admissible_limiter() {
        let report = eikonal_line(0.0, InitialDatum::Constant(0.0)).validate().unwrap();
        assert!(report.all_passed(), "{report:?}");
    }

    #[test]
    fn validate_rejects_limiter_below_floor() {
        let p = JunctionProblem::line(
            Hamiltonian::abs_shift(0.0),
            Hamiltonian::abs_shift(0.0),
            TimeSignal::constant(-0.5, 1.0).unwrap(),
            InitialDatum::Constant(0.0),
            1.0,
            2.0,
        )
        .unwrap();
        match p.validate() {
            Err(Error::FluxLimiterBelowFloor { deficit, .. }) => assert!((deficit - 0.5).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_finds_floor_violation_on_a_short_interval() {
        let a = TimeSignal::new(vec![0.0, 0.5, 0.501, 1.0], vec![0.0, -1.5, 0.0]).unwrap();
        let p = JunctionProblem::line(
            Hamiltonian::eikonal(),
            Hamiltonian::eikonal(),
            a,
            InitialDatum::Constant(0.0),
            1.0,
            2.0,
        )
        .unwrap();
        assert!(matches!(p.validate(), Err(Error::FluxLimiterBelowFloor { .. })));
    }

    #[test]
    fn lipschitz_audit_on_abs_datum() {
        let report = eikonal_line(0.0, InitialDatum::Abs { scale: 1.0 }).validate().unwrap();
        assert!(report.check("initial_datum_lipschitz").unwrap().passed);
        let lying = InitialDatum::custom(|_, x| 3.0 * x.abs(), 1.0);
        let report = eikonal_line(0.0, lying).validate().unwrap();
        assert!(!report.check("initial_datum_lipschitz").unwrap().passed);
    }

    #[test]
    fn junction_hamiltonian_examples() {
        let p = eikonal_line(0.0, InitialDatum::Constant(0.0));
        assert_eq!(p.junction_hamiltonian(0.5, &[0.0, 0.0]).unwrap(), 0.0);
        let p = eikonal_line(-1.0, InitialDatum::Constant(0.0));
        assert_eq!(p.junction_hamiltonian(0.5, &[0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(p.junction_hamiltonian(0.5, &[-2.0, 2.0]).unwrap(), 1.0);
        assert!(matches!(
            p.junction_hamiltonian(0.5, &[0.0]),
            Err(Error::SlopeCountMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn junction_hamiltonian_uses_one_sided_envelopes() {
        // H₁⁻ sees only decreasing branch on the right, H₂⁺ only the
        // increasing branch on the left
        let p = eikonal_line(-1.0, InitialDatum::Constant(0.0));
        assert_eq!(p.junction_hamiltonian(0.0, &[2.0, -2.0]).unwrap(), -1.0);
    }

    #[test]
    fn line_round_trip_preserves_vertex_values() {
        let p = JunctionProblem::line(
            Hamiltonian::quadratic(1.0, 0.5, -1.0, 5.0).unwrap(),
            Hamiltonian::quadratic(2.0, -0.3, -0.5, 5.0).unwrap(),
            TimeSignal::constant(0.0, 1.0).unwrap(),
            InitialDatum::Constant(0.0),
            1.0,
            1.0,
        )
        .unwrap();
        let (h1, h2) = p.to_line().unwrap();
        let q = JunctionProblem::line(h1, h2, p.flux_limiter().clone(), InitialDatum::Constant(0.0), 1.0, 1.0).unwrap();
        for pr in [-2.0, -0.1, 0.0, 0.7, 3.0] {
            for pl in [-1.5, 0.0, 0.2, 2.5] {
                assert_eq!(
                    p.junction_hamiltonian(0.3, &[pr, pl]).unwrap(),
                    q.junction_hamiltonian(0.3, &[pr, pl]).unwrap()
                );
            }
        }
    }

    #[test]
    fn junction_operator_is_monotone() {
        let p = JunctionProblem::line(
            Hamiltonian::quadratic(1.0, 0.2, -1.0, 5.0).unwrap(),
            Hamiltonian::eikonal(),
            TimeSignal::constant(-0.5, 1.0).unwrap(),
            InitialDatum::Constant(0.0),
            1.0,
            1.0,
        )
        .unwrap();
        let grid: Vec<f64> = (0..41).map(|k| -2.0 + 0.1 * k as f64).collect();
        for &pl in &grid {
            for w in grid.windows(2) {
                assert!(p.junction_hamiltonian(0.0, &[w[1], pl]).unwrap() <= p.junction_hamiltonian(0.0, &[w[0], pl]).unwrap());
                assert!(p.junction_hamiltonian(0.0, &[pl, w[0]]).unwrap() <= p.junction_hamiltonian(0.0, &[pl, w[1]]).unwrap());
            }
        }
        let lifted = p.with_data(
            p.edges().iter().map(|e| e.hamiltonian.clone()).collect(),
            TimeSignal::constant(0.5, 1.0).unwrap(),
        )
        .unwrap();
        assert!(lifted.junction_hamiltonian(0.0, &[0.3, -0.3]).unwrap() >= p.junction_hamiltonian(0.0, &[0.3, -0.3]).unwrap());
    }

    #[test]
    fn star_requires_two_edges_and_long_signals() {
        assert!(JunctionProblem::star(
            vec![Hamiltonian::eikonal()],
            TimeSignal::constant(0.0, 1.0).unwrap(),
            InitialDatum::Constant(0.0),
            1.0,
            1.0
        )
        .is_err());
        assert!(matches!(
            JunctionProblem::star(
                vec![Hamiltonian::eikonal(); 3],
                TimeSignal::constant(0.0, 0.5).unwrap(),
                InitialDatum::Constant(0.0),
                1.0,
                1.0
            ),
            Err(Error::HorizonTooShort { .. })
        ));
    }
}
