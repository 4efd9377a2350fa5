//! Convex coercive Hamiltonians `H(t, x, p)` and their monotone envelopes.
//!
//! The envelopes split `H(t, x, ·)` at a minimizer `p̂`:
//! `H⁺` is `min H` left of `p̂` and `H` to the right, `H⁻` is `H` left of `p̂`
//! and `min H` to the right. They are exactly the two branches of the
//! Godunov flux for convex Hamiltonians and the building blocks of the
//! junction condition.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::ControlEdge;
use crate::error::{Error, Result};
use crate::time_signal::TimeSignal;

/// Scalar coefficient that is either constant or a piecewise-constant
/// signal of time.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Const(f64),
    Signal(TimeSignal),
}

impl Coefficient {
    /// Value at `t`; times past the signal horizon read the closing value.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Coefficient::Const(c) => *c,
            Coefficient::Signal(s) => s.eval(t.clamp(0.0, s.horizon())).expect("clamped into horizon"),
        }
    }

    /// Mean over `[a, b]` (clamped to the signal horizon).
    pub fn average(&self, a: f64, b: f64) -> f64 {
        match self {
            Coefficient::Const(c) => *c,
            Coefficient::Signal(s) => {
                let hz = s.horizon();
                let (a, b) = (a.clamp(0.0, hz), b.clamp(0.0, hz));
                if b > a {
                    s.average(a, b).expect("window inside horizon")
                } else {
                    s.eval(a).expect("clamped into horizon")
                }
            }
        }
    }

    pub fn mollify(&self, eps: f64) -> Result<Self> {
        match self {
            Coefficient::Const(c) => Ok(Coefficient::Const(*c)),
            Coefficient::Signal(s) => Ok(Coefficient::Signal(s.mollify(eps)?)),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self {
            Coefficient::Const(c) => c.abs(),
            Coefficient::Signal(s) => s.sup_abs(),
        }
    }

    pub fn inf(&self) -> f64 {
        match self {
            Coefficient::Const(c) => *c,
            Coefficient::Signal(s) => s.ess_inf(),
        }
    }

    pub fn signal(&self) -> Option<&TimeSignal> {
        match self {
            Coefficient::Signal(s) if !s.is_constant() => Some(s),
            _ => None,
        }
    }

    pub fn frozen(&self, a: f64, b: f64) -> Self {
        Coefficient::Const(self.average(a, b))
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Coefficient::Const(c)
    }
}

impl From<TimeSignal> for Coefficient {
    fn from(s: TimeSignal) -> Self {
        Coefficient::Signal(s)
    }
}

type Evaluator = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
struct Custom {
    eval: Arc<Evaluator>,
    lipschitz_p: f64,
    bracket: f64,
    x_dependent: bool,
    time_dependent: bool,
    frozen_at: Option<f64>,
}

#[derive(Clone)]
enum Kind {
    /// `|p| + c(t)`
    AbsShift { c: Coefficient },
    /// `a(t)(p - b(t))² + c(t)` on slopes `|p| ≤ slope_bound`
    Quadratic { a: Coefficient, b: Coefficient, c: Coefficient, slope_bound: f64 },
    /// `sup_α f p - l` over sampled controls
    Induced(Arc<ControlEdge>),
    Custom(Custom),
    /// `H(t, -x, -p)`
    Reflected(Arc<Hamiltonian>),
}

/// Convex, coercive, slope-Lipschitz Hamiltonian `H(t, x, p)`.
#[derive(Clone)]
pub struct Hamiltonian {
    kind: Kind,
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::AbsShift { c } => f.debug_struct("AbsShift").field("c", c).finish(),
            Kind::Quadratic { a, b, c, slope_bound } => f
                .debug_struct("Quadratic")
                .field("a", a)
                .field("b", b)
                .field("c", c)
                .field("slope_bound", slope_bound)
                .finish(),
            Kind::Induced(edge) => f.debug_tuple("Induced").field(edge).finish(),
            Kind::Custom(c) => f
                .debug_struct("Custom")
                .field("lipschitz_p", &c.lipschitz_p)
                .field("x_dependent", &c.x_dependent)
                .field("time_dependent", &c.time_dependent)
                .finish(),
            Kind::Reflected(h) => f.debug_tuple("Reflected").field(h).finish(),
        }
    }
}

/// Number of random midpoint checks run when a user evaluator is wrapped.
pub const CONVEXITY_SAMPLES: usize = 1000;
const MAX_DOUBLINGS: usize = 60;
const TERNARY_ITERATIONS: usize = 200;

impl Hamiltonian {
    /// `|p| + c`.
    pub fn abs_shift(c: impl Into<Coefficient>) -> Self {
        Self { kind: Kind::AbsShift { c: c.into() } }
    }

    /// `|p| - 1`.
    pub fn eikonal() -> Self {
        Self::abs_shift(-1.0)
    }

    /// `a (p - b)² + c` with `a > 0`. The declared slope-Lipschitz constant is
    /// taken over `|p| ≤ slope_bound`.
    pub fn quadratic(
        a: impl Into<Coefficient>,
        b: impl Into<Coefficient>,
        c: impl Into<Coefficient>,
        slope_bound: f64,
    ) -> Result<Self> {
        let a = a.into();
        if !(a.inf() > 0.0) {
            return Err(Error::InvalidProblem("quadratic coefficient a must be positive".into()));
        }
        if !(slope_bound > 0.0) {
            return Err(Error::InvalidProblem("quadratic slope bound must be positive".into()));
        }
        Ok(Self { kind: Kind::Quadratic { a, b: b.into(), c: c.into(), slope_bound } })
    }

    /// Hamiltonian induced by an edge's controls.
    pub fn induced(edge: Arc<ControlEdge>) -> Self {
        Self { kind: Kind::Induced(edge) }
    }

    /// Wraps a user evaluator. Convexity in `p` is checked with
    /// [`CONVEXITY_SAMPLES`] random midpoint tests on
    /// `t ∈ [0, 1]`, `|x| ≤ 1`, `|p| ≤ 4 bracket`.
    pub fn custom(
        eval: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        lipschitz_p: f64,
        bracket: f64,
        x_dependent: bool,
        time_dependent: bool,
    ) -> Result<Self> {
        let h = Self {
            kind: Kind::Custom(Custom {
                eval: Arc::new(eval),
                lipschitz_p,
                bracket: bracket.max(1e-6),
                x_dependent,
                time_dependent,
                frozen_at: None,
            }),
        };
        let radius = 4.0 * bracket.max(1.0);
        h.check_convexity(SampleBox::new((0.0, 1.0), (-1.0, 1.0), (-radius, radius)), CONVEXITY_SAMPLES, 0x5eed)?;
        Ok(h)
    }

    /// `H(t, -x, -p)`: the same Hamiltonian read in the mirrored coordinate.
    pub fn reflected(&self) -> Self {
        if let Kind::Reflected(inner) = &self.kind {
            return (**inner).clone();
        }
        Self { kind: Kind::Reflected(Arc::new(self.clone())) }
    }

    pub fn is_reflected(&self) -> bool {
        matches!(self.kind, Kind::Reflected(_))
    }

    pub fn eval(&self, t: f64, x: f64, p: f64) -> f64 {
        match &self.kind {
            Kind::AbsShift { c } => p.abs() + c.eval(t),
            Kind::Quadratic { a, b, c, .. } => {
                let d = p - b.eval(t);
                a.eval(t) * d * d + c.eval(t)
            }
            Kind::Induced(edge) => edge.hamiltonian(t, x, p),
            Kind::Custom(c) => (c.eval)(c.frozen_at.unwrap_or(t), x, p),
            Kind::Reflected(h) => h.eval(t, -x, -p),
        }
    }

    /// Declared bound `C₂` on `|∂H/∂p|`.
    pub fn lipschitz_p(&self) -> f64 {
        match &self.kind {
            Kind::AbsShift { .. } => 1.0,
            Kind::Quadratic { a, b, slope_bound, .. } => 2.0 * a.sup_abs() * (slope_bound + b.sup_abs()),
            Kind::Induced(edge) => edge.speed_bound(),
            Kind::Custom(c) => c.lipschitz_p,
            Kind::Reflected(h) => h.lipschitz_p(),
        }
    }

    /// Slopes `|p| ≤ slope_range()` on which [`lipschitz_p`](Self::lipschitz_p)
    /// is claimed.
    pub fn slope_range(&self) -> f64 {
        match &self.kind {
            Kind::Quadratic { slope_bound, .. } => *slope_bound,
            Kind::Reflected(h) => h.slope_range(),
            _ => f64::INFINITY,
        }
    }

    pub fn x_dependent(&self) -> bool {
        match &self.kind {
            Kind::AbsShift { .. } | Kind::Quadratic { .. } => false,
            Kind::Induced(edge) => edge.x_dependent(),
            Kind::Custom(c) => c.x_dependent,
            Kind::Reflected(h) => h.x_dependent(),
        }
    }

    /// Non-constant signal coefficients the Hamiltonian depends on.
    pub fn time_signals(&self) -> Vec<&TimeSignal> {
        match &self.kind {
            Kind::AbsShift { c } => c.signal().into_iter().collect(),
            Kind::Quadratic { a, b, c, .. } => [a, b, c].into_iter().filter_map(Coefficient::signal).collect(),
            Kind::Induced(edge) => edge.time_signals(),
            Kind::Custom(_) => Vec::new(),
            Kind::Reflected(h) => h.time_signals(),
        }
    }

    /// Whether the time dependence is opaque (a user evaluator).
    pub fn has_opaque_time_dependence(&self) -> bool {
        match &self.kind {
            Kind::Custom(c) => c.time_dependent && c.frozen_at.is_none(),
            Kind::Induced(edge) => edge.has_opaque_time_dependence(),
            Kind::Reflected(h) => h.has_opaque_time_dependence(),
            _ => false,
        }
    }

    /// The Hamiltonian with its time data frozen over `[a, b]`: signal
    /// coefficients are replaced by their window means; opaque evaluators
    /// are sampled at the window midpoint.
    pub fn frozen(&self, a: f64, b: f64) -> Self {
        let kind = match &self.kind {
            Kind::AbsShift { c } => Kind::AbsShift { c: c.frozen(a, b) },
            Kind::Quadratic { a: qa, b: qb, c, slope_bound } => Kind::Quadratic {
                a: qa.frozen(a, b),
                b: qb.frozen(a, b),
                c: c.frozen(a, b),
                slope_bound: *slope_bound,
            },
            Kind::Induced(edge) => Kind::Induced(Arc::new(edge.frozen(a, b))),
            Kind::Custom(c) => {
                let mut c = c.clone();
                if c.time_dependent && c.frozen_at.is_none() {
                    c.frozen_at = Some(0.5 * (a + b));
                }
                Kind::Custom(c)
            }
            Kind::Reflected(h) => Kind::Reflected(Arc::new(h.frozen(a, b))),
        };
        Self { kind }
    }

    /// Same closed form with every signal coefficient mollified at width
    /// `eps`.
    pub fn mollified(&self, eps: f64) -> Result<Self> {
        let kind = match &self.kind {
            Kind::AbsShift { c } => Kind::AbsShift { c: c.mollify(eps)? },
            Kind::Quadratic { a, b, c, slope_bound } => Kind::Quadratic {
                a: a.mollify(eps)?,
                b: b.mollify(eps)?,
                c: c.mollify(eps)?,
                slope_bound: *slope_bound,
            },
            Kind::Induced(edge) => Kind::Induced(Arc::new(edge.mollified(eps)?)),
            Kind::Custom(c) => {
                if c.time_dependent && c.frozen_at.is_none() {
                    return Err(Error::NonSeparableTimeDependence);
                }
                Kind::Custom(c.clone())
            }
            Kind::Reflected(h) => Kind::Reflected(Arc::new(h.mollified(eps)?)),
        };
        Ok(Self { kind })
    }

    /// Minimizer and minimum when known in closed form.
    pub fn closed_form_min(&self, t: f64, x: f64) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::AbsShift { c } => Some((0.0, c.eval(t))),
            Kind::Quadratic { b, c, .. } => Some((b.eval(t), c.eval(t))),
            Kind::Reflected(h) => h.closed_form_min(t, -x).map(|(p, m)| (-p, m)),
            Kind::Induced(_) | Kind::Custom(_) => None,
        }
    }

    fn bracket_floor(&self) -> f64 {
        match &self.kind {
            Kind::Custom(c) => c.bracket,
            Kind::Reflected(h) => h.bracket_floor(),
            _ => 1.0,
        }
    }

    /// Minimizer `p̂` and minimum value; closed form when available,
    /// numerical search otherwise.
    pub fn argmin(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        match self.closed_form_min(t, x) {
            Some(pm) => Ok(pm),
            None => argmin_p(self, t, x),
        }
    }

    /// Randomized midpoint-convexity check on a sample box.
    pub fn check_convexity(&self, domain: SampleBox, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let (t, x, p) = domain.draw(&mut rng);
            let q = rng.gen_range(domain.p.0..=domain.p.1);
            let mid = self.eval(t, x, 0.5 * (p + q));
            let chord = 0.5 * (self.eval(t, x, p) + self.eval(t, x, q));
            if mid > chord + 1e-9 {
                return Err(Error::NotConvex { t, x, p, q });
            }
        }
        Ok(())
    }

    /// Largest sampled difference quotient `|H(p) - H(q)| / |p - q|`.
    pub fn sampled_lipschitz_p(&self, domain: SampleBox, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let (t, x, p) = domain.draw(&mut rng);
            let q = rng.gen_range(domain.p.0..=domain.p.1);
            if (p - q).abs() > 1e-12 {
                worst = worst.max((self.eval(t, x, p) - self.eval(t, x, q)).abs() / (p - q).abs());
            }
        }
        worst
    }
}

/// Axis-aligned `(t, x, p)` sampling region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub p: (f64, f64),
}

impl SampleBox {
    pub fn new(t: (f64, f64), x: (f64, f64), p: (f64, f64)) -> Self {
        Self { t, x, p }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
        (
            rng.gen_range(self.t.0..=self.t.1),
            rng.gen_range(self.x.0..=self.x.1),
            rng.gen_range(self.p.0..=self.p.1),
        )
    }
}

/// Numerical minimizer of a convex coercive `p ↦ H(t, x, p)`.
///
/// Brackets by doubling a radius until both ends exceed `H(t, x, 0)`, runs
/// ternary search for the minimum value, then returns the midpoint of the
/// numerically flat argmin interval so the result is deterministic for
/// flat-bottomed Hamiltonians.
pub fn argmin_p(h: &Hamiltonian, t: f64, x: f64) -> Result<(f64, f64)> {
    let h0 = h.eval(t, x, 0.0);
    let mut radius = h.bracket_floor().max(1e-3);
    let mut found = false;
    for _ in 0..MAX_DOUBLINGS {
        if h.eval(t, x, radius) > h0 && h.eval(t, x, -radius) > h0 {
            found = true;
            break;
        }
        radius *= 2.0;
    }
    if !found {
        return Err(Error::BracketFailure { t, x });
    }
    let (mut lo, mut hi) = (-radius, radius);
    for _ in 0..TERNARY_ITERATIONS {
        if hi - lo <= 1e-12 * radius {
            break;
        }
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if h.eval(t, x, m1) <= h.eval(t, x, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mut center = 0.5 * (lo + hi);
    if h0 <= h.eval(t, x, center) {
        center = 0.0;
    }
    let min_value = h.eval(t, x, center);
    let level = min_value + 1e-12 * (1.0 + min_value.abs());
    let in_set = |p: f64| h.eval(t, x, p) <= level;
    // leftmost point of the sublevel set on [-radius, center]
    let (mut a, mut b) = (-radius, center);
    for _ in 0..120 {
        let m = 0.5 * (a + b);
        if in_set(m) {
            b = m;
        } else {
            a = m;
        }
    }
    let left = b;
    let (mut a, mut b) = (center, radius);
    for _ in 0..120 {
        let m = 0.5 * (a + b);
        if in_set(m) {
            a = m;
        } else {
            b = m;
        }
    }
    let right = a;
    let p_hat = 0.5 * (left + right);
    Ok((p_hat, h.eval(t, x, p_hat)))
}

/// `max_j min_p H_j(t, 0, p)`: the smallest admissible flux limiter.
pub fn a0_floor<'a>(hamiltonians: impl IntoIterator<Item = &'a Hamiltonian>, t: f64) -> Result<f64> {
    let mut floor = f64::NEG_INFINITY;
    for h in hamiltonians {
        floor = floor.max(h.argmin(t, 0.0)?.1);
    }
    Ok(floor)
}

/// Minimizer and minimum of `H(t, x, ·)` at one point, from which both
/// envelopes follow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEnvelope {
    pub p_hat: f64,
    pub h_min: f64,
}

impl LocalEnvelope {
    /// Nondecreasing part, given `h_at_p = H(t, x, p)`.
    #[inline]
    pub fn plus(&self, p: f64, h_at_p: f64) -> f64 {
        if p <= self.p_hat {
            self.h_min
        } else {
            h_at_p
        }
    }

    /// Nonincreasing part, given `h_at_p = H(t, x, p)`.
    #[inline]
    pub fn minus(&self, p: f64, h_at_p: f64) -> f64 {
        if p <= self.p_hat {
            h_at_p
        } else {
            self.h_min
        }
    }
}

const MEMO_CAPACITY: usize = 1 << 14;

/// `H⁺`/`H⁻` decomposition of a Hamiltonian, with `(p̂, min H)` memoized per
/// `(t, x)`.
#[derive(Clone)]
pub struct EnvelopePair {
    hamiltonian: Hamiltonian,
    memo: Arc<spin::Mutex<BTreeMap<(u64, u64), LocalEnvelope>>>,
}

impl fmt::Debug for EnvelopePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnvelopePair").field("hamiltonian", &self.hamiltonian).finish()
    }
}

impl EnvelopePair {
    pub fn new(hamiltonian: Hamiltonian) -> Self {
        Self { hamiltonian, memo: Arc::new(spin::Mutex::new(BTreeMap::new())) }
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn local(&self, t: f64, x: f64) -> Result<LocalEnvelope> {
        let key = (t.to_bits(), x.to_bits());
        if let Some(env) = self.memo.lock().get(&key) {
            return Ok(*env);
        }
        let (p_hat, h_min) = self.hamiltonian.argmin(t, x)?;
        let env = LocalEnvelope { p_hat, h_min };
        let mut memo = self.memo.lock();
        if memo.len() >= MEMO_CAPACITY {
            memo.clear();
        }
        memo.insert(key, env);
        Ok(env)
    }

    pub fn p_hat(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.local(t, x)?.p_hat)
    }

    pub fn h_min(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.local(t, x)?.h_min)
    }

    pub fn h_plus(&self, t: f64, x: f64, p: f64) -> Result<f64> {
        Ok(self.local(t, x)?.plus(p, self.hamiltonian.eval(t, x, p)))
    }

    pub fn h_minus(&self, t: f64, x: f64, p: f64) -> Result<f64> {
        Ok(self.local(t, x)?.minus(p, self.hamiltonian.eval(t, x, p)))
    }
}

/// Envelope decomposition of `h`.
pub fn envelopes(h: &Hamiltonian) -> EnvelopePair {
    EnvelopePair::new(h.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn numeric_only(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Hamiltonian {
        Hamiltonian::custom(move |_, _, p| f(p), 10.0, 1.0, false, false).unwrap()
    }

    #[test]
    fn argmin_examples() {
        let (p, m) = argmin_p(&numeric_only(|p| p * p), 0.0, 0.0).unwrap();
        assert!(p.abs() < 1e-6 && m.abs() < 1e-9, "{p} {m}");
        let (p, m) = argmin_p(&numeric_only(|p| p.abs() - 1.0), 0.0, 0.0).unwrap();
        assert!(p.abs() < 1e-9 && (m + 1.0).abs() < 1e-9, "{p} {m}");
        let (p, m) = argmin_p(&numeric_only(|p| (p - 2.0) * (p - 2.0) + 3.0), 0.0, 0.0).unwrap();
        assert!((p - 2.0).abs() < 1e-5 && (m - 3.0).abs() < 1e-9, "{p} {m}");
    }

    #[test]
    fn argmin_far_from_origin() {
        let (p, m) = argmin_p(&numeric_only(|p| (p - 300.0).abs() + 7.0), 0.0, 0.0).unwrap();
        assert!((p - 300.0).abs() < 1e-6 && (m - 7.0).abs() < 1e-9);
    }

    #[test]
    fn flat_bottom_returns_midpoint() {
        let (p, m) = argmin_p(&numeric_only(|p| (p.abs() - 1.0).max(0.0) + (p - 2.0).max(0.0)), 0.0, 0.0).unwrap();
        assert!(p.abs() < 1e-6, "{p}");
        assert!(m.abs() < 1e-12);
        let (p, _) = argmin_p(&numeric_only(|p| (p - 3.0).max(0.0) + (1.0 - p).max(0.0)), 0.0, 0.0).unwrap();
        assert!((p - 2.0).abs() < 1e-6, "{p}");
    }

    #[test]
    fn non_coercive_input_fails_to_bracket() {
        let h = Hamiltonian::custom(|_, _, _| 0.0, 1.0, 1.0, false, false).unwrap();
        assert!(matches!(argmin_p(&h, 0.0, 0.0), Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn custom_rejects_concave_evaluator() {
        assert!(matches!(
            Hamiltonian::custom(|_, _, p| -p * p, 10.0, 1.0, false, false),
            Err(Error::NotConvex { .. })
        ));
    }

    #[test]
    fn envelope_examples() {
        let env = envelopes(&Hamiltonian::eikonal());
        assert_eq!(env.h_plus(0.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(env.h_minus(0.0, 0.0, 1.0).unwrap(), -1.0);
        assert_eq!(env.h_plus(0.0, 0.0, -1.0).unwrap(), -1.0);
        assert_eq!(env.h_minus(0.0, 0.0, -1.0).unwrap(), 0.0);
        let sq = envelopes(&Hamiltonian::quadratic(1.0, 0.0, 0.0, 10.0).unwrap());
        for p in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let rebuilt = sq.h_plus(0.0, 0.0, p).unwrap().max(sq.h_minus(0.0, 0.0, p).unwrap());
            assert_eq!(rebuilt, p * p);
        }
    }

    #[test]
    fn envelopes_meet_at_p_hat() {
        let h = Hamiltonian::quadratic(2.0, 0.7, -1.0, 5.0).unwrap();
        let env = envelopes(&h);
        let p_hat = env.p_hat(0.0, 0.0).unwrap();
        assert_eq!(env.h_plus(0.0, 0.0, p_hat).unwrap(), -1.0);
        assert_eq!(env.h_minus(0.0, 0.0, p_hat).unwrap(), -1.0);
    }

    #[test]
    fn a0_floor_examples() {
        let e = Hamiltonian::eikonal();
        assert_eq!(a0_floor([&e, &e], 0.0).unwrap(), -1.0);
        let q1 = Hamiltonian::quadratic(1.0, 0.0, 0.0, 5.0).unwrap();
        let q2 = Hamiltonian::quadratic(1.0, 1.0, -2.0, 5.0).unwrap();
        assert_eq!(a0_floor([&q1, &q2], 0.0).unwrap(), 0.0);
        assert_eq!(a0_floor([&Hamiltonian::abs_shift(0.0)], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn reflection_mirrors_minimizer() {
        let h = Hamiltonian::quadratic(1.0, 2.0, 3.0, 10.0).unwrap();
        let r = h.reflected();
        assert_eq!(r.eval(0.0, 0.5, -1.0), h.eval(0.0, -0.5, 1.0));
        assert_eq!(r.argmin(0.0, 0.0).unwrap(), (-2.0, 3.0));
        assert!(!r.reflected().is_reflected());
    }

    #[test]
    fn frozen_coefficients_use_window_average() {
        let c = TimeSignal::new(vec![0.0, 1.0, 2.0], vec![0.0, -2.0]).unwrap();
        let h = Hamiltonian::abs_shift(c);
        let f = h.frozen(0.5, 1.5);
        assert_eq!(f.eval(123.0, 0.0, 0.0), -1.0);
        assert_eq!(h.eval(0.5, 0.0, 0.0), 0.0);
        assert_eq!(h.time_signals().len(), 1);
        assert!(f.time_signals().is_empty());
    }

    #[test]
    fn numeric_and_closed_form_agree_on_catalog() {
        let hs = vec![
            Hamiltonian::abs_shift(0.3),
            Hamiltonian::quadratic(0.5, -1.5, 2.0, 4.0).unwrap(),
            Hamiltonian::quadratic(3.0, 0.25, -4.0, 4.0).unwrap().reflected(),
        ];
        for h in hs {
            let (pc, mc) = h.closed_form_min(0.0, 0.0).unwrap();
            let (pn, mn) = argmin_p(&h, 0.0, 0.0).unwrap();
            assert!((pc - pn).abs() < 1e-5, "{pc} {pn}");
            assert!((mc - mn).abs() < 1e-9);
        }
    }

    #[test]
    fn lipschitz_audit_respects_declared_constant() {
        let dom = SampleBox::new((0.0, 1.0), (-1.0, 1.0), (-4.0, 4.0));
        for h in [
            Hamiltonian::eikonal(),
            Hamiltonian::quadratic(2.0, 1.0, 0.0, 4.0).unwrap(),
        ] {
            assert!(h.sampled_lipschitz_p(dom, 2000, 3) <= h.lipschitz_p() * (1.0 + 1e-6));
        }
    }

    #[test]
    fn memo_is_consistent() {
        let env = envelopes(&numeric_only(|p| (p - 0.3).abs()));
        let a = env.local(0.1, 0.2).unwrap();
        let b = env.local(0.1, 0.2).unwrap();
        assert_eq!(a, b);
    }
}
