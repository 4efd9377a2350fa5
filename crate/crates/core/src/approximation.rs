//! Continuous-in-time approximants of the data, the error signal `k_n`
//! between a problem and its approximation, and the shifted solutions
//! `u_n ∓ ∫₀ᵗ k_n` that sandwich the measurable-data solution.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{Grid, SolutionField};
use crate::hamiltonian::Hamiltonian;
use crate::problem::JunctionProblem;
use crate::scheme;
use crate::time_signal::TimeSignal;

/// Sample count per axis used by [`compute_kn`] unless overridden.
pub const DEFAULT_GRID_POINTS: usize = 64;
/// Largest number of slope tuples evaluated per time sample on a star.
const MAX_SLOPE_TUPLES: f64 = 1e5;

/// Every signal coefficient of `h` mollified at width `eps`.
pub fn approx_hamiltonian(h: &Hamiltonian, eps: f64) -> Result<Hamiltonian> {
    h.mollified(eps)
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// `H⁻` of `h` at the junction on each slope in `qs`.
fn minus_envelope(h: &Hamiltonian, t: f64, qs: &[f64]) -> Result<Vec<f64>> {
    let (p_hat, h_min) = h.argmin(t, 0.0)?;
    Ok(qs.iter().map(|&q| if q <= p_hat { h.eval(t, 0.0, q) } else { h_min }).collect())
}

/// Largest `|max{a, x_j} - max{b, y_j}|` over all tuples taking one entry
/// per edge.
fn junction_sup(a: f64, b: f64, exact: &[Vec<f64>], approx: &[Vec<f64>]) -> f64 {
    let n = exact[0].len();
    let edges = exact.len();
    let mut index = vec![0usize; edges];
    let mut worst: f64 = 0.0;
    loop {
        let mut left = a;
        let mut right = b;
        for j in 0..edges {
            left = left.max(exact[j][index[j]]);
            right = right.max(approx[j][index[j]]);
        }
        worst = worst.max((left - right).abs());
        let mut j = 0;
        loop {
            if j == edges {
                return worst;
            }
            index[j] += 1;
            if index[j] < n {
                break;
            }
            index[j] = 0;
            j += 1;
        }
    }
}

/// Error signal between `problem` and the approximants `hn` (edge-local,
/// one per edge) and `an`:
/// `k(t) = max{ sup_q |max{A, H_j⁻(q_j)} - max{A_n, H_{j,n}⁻(q_j)}|,
/// sup_{y, p} |H_j - H_{j,n}| }` with slopes in `[-K, K]` and distances in
/// `[0, R]`. Sups run over uniform grids of `grid_points` per axis; the
/// result is piecewise constant on the union of all data breakpoints, each
/// cell sampled at its midpoint.
pub fn compute_kn(
    problem: &JunctionProblem,
    hn: &[Hamiltonian],
    an: &TimeSignal,
    slope_bound: f64,
    radius: f64,
    grid_points: usize,
) -> Result<TimeSignal> {
    let edges = problem.edges();
    if hn.len() != edges.len() {
        return Err(Error::InvalidProblem("one approximant per edge".into()));
    }
    if !(slope_bound > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidProblem("slope bound and radius must be positive".into()));
    }
    let horizon = problem.horizon();
    if an.horizon() < horizon * (1.0 - 1e-12) {
        return Err(Error::HorizonTooShort { signal: an.horizon(), required: horizon });
    }
    let grid_points = grid_points.max(2);

    // per-axis slope count for the junction term, kept within budget on stars
    let cap = libm::floor(libm::pow(MAX_SLOPE_TUPLES, 1.0 / edges.len() as f64)) as usize;
    let junction_slopes = axis(-slope_bound, slope_bound, grid_points.min(cap.max(2)));
    let slopes = axis(-slope_bound, slope_bound, grid_points);

    let uniform = TimeSignal::uniform(vec![0.0; grid_points], horizon)?;
    let signals = [problem.flux_limiter(), an, &uniform]
        .into_iter()
        .chain(edges.iter().flat_map(|e| e.hamiltonian.time_signals()))
        .chain(hn.iter().flat_map(|h| h.time_signals()));
    let mesh = TimeSignal::merged_breakpoints(signals, horizon);

    TimeSignal::sample_cells(mesh, |t| {
        let mut exact = Vec::with_capacity(edges.len());
        let mut approx = Vec::with_capacity(edges.len());
        let mut worst: f64 = 0.0;
        for (e, h_n) in edges.iter().zip(hn) {
            let h = &e.hamiltonian;
            exact.push(minus_envelope(h, t, &junction_slopes)?);
            approx.push(minus_envelope(h_n, t, &junction_slopes)?);
            let positions =
                if h.x_dependent() || h_n.x_dependent() { axis(0.0, radius, grid_points) } else { vec![0.0] };
            for &y in &positions {
                for &p in &slopes {
                    worst = worst.max((h.eval(t, y, p) - h_n.eval(t, y, p)).abs());
                }
            }
        }
        let a = problem.flux_limiter().eval(t)?;
        let a_n = an.eval(t)?;
        Ok(worst.max(junction_sup(a, a_n, &exact, &approx)))
    })
}

/// Direction of the shift applied by [`shift_functions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    /// `u - ∫₀ᵗ k`
    Sub,
    /// `u + ∫₀ᵗ k`
    Super,
}

/// `u ∓ ∫₀ᵗ k` at every level, with the exact integral of the piecewise
/// constant `k`.
pub fn shift_functions(u: &SolutionField, kn: &TimeSignal, direction: ShiftDirection) -> Result<SolutionField> {
    let lowest = kn.ess_inf();
    if lowest < -1e-12 {
        let t = kn
            .breakpoints()
            .iter()
            .zip(kn.values())
            .find(|(_, &v)| v == lowest)
            .map_or(0.0, |(&b, _)| b);
        return Err(Error::NegativeKn { t, value: lowest });
    }
    let horizon = u.grid().horizon();
    if kn.horizon() < horizon * (1.0 - 1e-12) {
        return Err(Error::HorizonTooShort { signal: kn.horizon(), required: horizon });
    }
    let sign = match direction {
        ShiftDirection::Sub => -1.0,
        ShiftDirection::Super => 1.0,
    };
    Ok(u.shifted(|t| sign * kn.integral_to(t)))
}

/// Outcome of the comparison run at one mollification width.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthResult {
    pub eps: f64,
    pub kn: TimeSignal,
    /// `∫₀ᵀ k_n`
    pub kn_l1: f64,
    /// `sup |u_n - u|` over all nodes and levels.
    pub solution_gap: f64,
    /// How far `u_n - ∫k_n ≤ u ≤ u_n + ∫k_n` fails (0 when it holds).
    pub ordering_violation: f64,
    /// `solution_gap ≤ kn_l1` up to rounding.
    pub within_bound: bool,
}

/// Approximation study over a decreasing sequence of widths.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationStudy {
    pub widths: Vec<f64>,
    pub slope_bound: f64,
    pub radius: f64,
    pub grid_points: usize,
    pub results: Vec<WidthResult>,
}

impl ApproximationStudy {
    pub fn kn_l1(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.kn_l1).collect()
    }

    pub fn solution_gaps(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.solution_gap).collect()
    }
}

/// Widths must be a non-empty, strictly decreasing sequence of positive
/// numbers.
pub fn check_widths(widths: &[f64]) -> Result<()> {
    if widths.is_empty() {
        return Err(Error::InvalidProblem("no mollification widths".into()));
    }
    if widths.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidProblem("mollification widths must be positive".into()));
    }
    if widths.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidProblem("mollification widths must be strictly decreasing".into()));
    }
    Ok(())
}

/// `1.1 ×` the measured discrete Lipschitz constant, floored at a small
/// positive value.
pub fn default_slope_bound(field: &SolutionField) -> f64 {
    (1.1 * field.discrete_lipschitz()).max(1e-6)
}

/// Problem with all time data mollified at width `eps`.
pub fn approximate_problem(problem: &JunctionProblem, eps: f64) -> Result<(JunctionProblem, Vec<Hamiltonian>, TimeSignal)> {
    let hn = problem
        .edges()
        .iter()
        .map(|e| approx_hamiltonian(&e.hamiltonian, eps))
        .collect::<Result<Vec<_>>>()?;
    let an = problem.flux_limiter().mollify(eps)?;
    let approx = problem.with_data(hn.clone(), an.clone())?;
    Ok((approx, hn, an))
}

/// Runs the comparison at one width against an already computed
/// measurable-data solution `base` on `grid`.
pub fn study_width(
    problem: &JunctionProblem,
    grid: &Grid,
    base: &SolutionField,
    eps: f64,
    slope_bound: f64,
    radius: f64,
    grid_points: usize,
) -> Result<WidthResult> {
    let (approx, hn, an) = approximate_problem(problem, eps)?;
    let kn = compute_kn(problem, &hn, &an, slope_bound, radius, grid_points)?;
    let kn_l1 = kn.integral_to(kn.horizon());
    let u_n = scheme::solve(&approx, grid)?;
    let solution_gap = u_n.max_abs_diff(base)?;
    let below = shift_functions(&u_n, &kn, ShiftDirection::Sub)?;
    let above = shift_functions(&u_n, &kn, ShiftDirection::Super)?;
    let mut ordering_violation: f64 = 0.0;
    for ((lo, hi), mid) in below.levels().iter().zip(above.levels()).zip(base.levels()) {
        for ((&l, &h), &m) in lo.iter().zip(hi).zip(mid) {
            ordering_violation = ordering_violation.max(l - m).max(m - h);
        }
    }
    let within_bound = solution_gap <= kn_l1 + 1e-9 * (1.0 + kn_l1);
    Ok(WidthResult { eps, kn, kn_l1, solution_gap, ordering_violation, within_bound })
}

/// Solves `problem` and its mollified approximations at every width on the
/// same grid and reports `∫k_n` and the solution gaps.
pub fn comparison_diagnostic(
    problem: &JunctionProblem,
    grid: &Grid,
    widths: &[f64],
    slope_bound: Option<f64>,
    radius: f64,
    grid_points: usize,
) -> Result<ApproximationStudy> {
    check_widths(widths)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidProblem("radius must be positive".into()));
    }
    let base = scheme::solve(problem, grid)?;
    let slope_bound = slope_bound.unwrap_or_else(|| default_slope_bound(&base));
    let results = widths
        .iter()
        .map(|&eps| study_width(problem, grid, &base, eps, slope_bound, radius, grid_points))
        .collect::<Result<Vec<_>>>()?;
    Ok(ApproximationStudy { widths: widths.to_vec(), slope_bound, radius, grid_points, results })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::InitialDatum;
    use proptest::prelude::*;

    fn step_limiter(horizon: f64) -> TimeSignal {
        TimeSignal::new(vec![0.0, 0.5 * horizon, horizon], vec![0.0, -1.0]).unwrap()
    }

    fn model(a: TimeSignal) -> JunctionProblem {
        JunctionProblem::line(Hamiltonian::eikonal(), Hamiltonian::eikonal(), a, InitialDatum::Constant(0.0), 1.0, 2.0)
            .unwrap()
    }

    #[test]
    fn time_independent_hamiltonian_is_unchanged() {
        let h = Hamiltonian::quadratic(2.0, 0.5, -1.0, 3.0).unwrap();
        let hn = approx_hamiltonian(&h, 0.1).unwrap();
        for p in [-2.0, 0.0, 0.7, 3.0] {
            assert_eq!(hn.eval(0.3, 0.0, p), h.eval(0.3, 0.0, p));
        }
    }

    #[test]
    fn step_coefficient_is_mollified() {
        let c = step_limiter(1.0);
        let h = Hamiltonian::abs_shift(c.clone());
        let hn = approx_hamiltonian(&h, 0.1).unwrap();
        let mc = c.mollify(0.1).unwrap();
        for t in [0.0, 0.33, 0.47, 0.5, 0.52, 0.9] {
            assert_eq!(hn.eval(t, 0.0, 1.5), 1.5 + mc.eval(t).unwrap());
        }
        // sup over |p| ≤ 2 of |H_eps - H| is |c - c_eps|, whose integral is
        // below eps times the jump
        let p = JunctionProblem::line(h.clone(), h, TimeSignal::constant(0.0, 1.0).unwrap(), InitialDatum::Constant(0.0), 1.0, 1.0)
            .unwrap();
        let hns = [approx_hamiltonian(&p.edges()[0].hamiltonian, 0.1).unwrap(), approx_hamiltonian(&p.edges()[1].hamiltonian, 0.1).unwrap()];
        let k = compute_kn(&p, &hns, p.flux_limiter(), 2.0, 1.0, 64).unwrap();
        let l1 = k.integral_to(1.0);
        assert!(l1 > 0.0 && l1 <= 0.1 * 1.0, "{l1}");
    }

    #[test]
    fn identity_approximants_give_zero() {
        let p = model(step_limiter(1.0));
        let hs: Vec<_> = p.edges().iter().map(|e| e.hamiltonian.clone()).collect();
        let k = compute_kn(&p, &hs, p.flux_limiter(), 1.5, 2.0, 32).unwrap();
        assert!(k.values().iter().all(|&v| v == 0.0));
    }

    fn midpoint_l1(a: &TimeSignal, b: &TimeSignal, n: usize) -> f64 {
        let h = a.horizon() / n as f64;
        (0..n)
            .map(|k| {
                let t = (k as f64 + 0.5) * h;
                (a.eval(t).unwrap() - b.eval(t).unwrap()).abs() * h
            })
            .sum()
    }

    #[test]
    fn step_limiter_error_decreases_with_width() {
        let p = model(step_limiter(1.0));
        let mut previous = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let (_, hn, an) = approximate_problem(&p, eps).unwrap();
            let k = compute_kn(&p, &hn, &an, 1.5, 2.0, 64).unwrap();
            let l1 = k.integral_to(1.0);
            // time-independent H: k reduces to |A - A_n|
            let direct = midpoint_l1(p.flux_limiter(), &an, 200_000);
            assert!((l1 - direct).abs() <= 1e-4, "{eps}: {l1} vs {direct}");
            assert!(l1 < previous && l1 <= 1.1 * eps);
            previous = l1;
        }
    }

    #[test]
    fn shift_examples() {
        let p = model(TimeSignal::constant(-0.5, 1.0).unwrap());
        let grid = Grid::for_problem(&p, 0.1, 0.05).unwrap();
        let u = scheme::solve(&p, &grid).unwrap();
        let zero = TimeSignal::constant(0.0, 1.0).unwrap();
        assert_eq!(shift_functions(&u, &zero, ShiftDirection::Sub).unwrap(), u);
        let one = TimeSignal::constant(1.0, 1.0).unwrap();
        let down = shift_functions(&u, &one, ShiftDirection::Sub).unwrap();
        let up = shift_functions(&u, &one, ShiftDirection::Super).unwrap();
        for (node, &v) in u.last().iter().enumerate() {
            assert_eq!(down.last()[node], v - 1.0);
        }
        for ((d, m), s) in down.levels().iter().flatten().zip(u.levels().iter().flatten()).zip(up.levels().iter().flatten()) {
            assert!(d <= m && m <= s);
        }
        let negative = TimeSignal::constant(-0.1, 1.0).unwrap();
        assert!(matches!(shift_functions(&u, &negative, ShiftDirection::Super), Err(Error::NegativeKn { .. })));
    }

    #[test]
    fn width_validation() {
        assert!(check_widths(&[]).is_err());
        assert!(check_widths(&[0.1, 0.2]).is_err());
        assert!(check_widths(&[0.1, 0.1]).is_err());
        assert!(check_widths(&[0.1, -0.05]).is_err());
        assert!(check_widths(&[0.2, 0.1, 0.05]).is_ok());
    }

    #[test]
    fn constant_limiter_gaps_do_not_depend_on_width() {
        let p = model(TimeSignal::constant(-0.5, 1.0).unwrap());
        let grid = Grid::for_problem(&p, 0.05, 0.025).unwrap();
        let study = comparison_diagnostic(&p, &grid, &[0.2, 0.1, 0.05], None, 2.0, 32).unwrap();
        for r in &study.results {
            assert_eq!(r.kn_l1, 0.0);
            assert!(r.solution_gap <= 1e-12);
            assert!(r.within_bound);
        }
    }

    #[test]
    fn step_limiter_study_is_sandwiched() {
        let p = model(step_limiter(1.0));
        let grid = Grid::for_problem(&p, 0.05, 0.025).unwrap();
        let study = comparison_diagnostic(&p, &grid, &[0.2, 0.1, 0.05], None, 2.0, 64).unwrap();
        let gaps = study.solution_gaps();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{gaps:?}");
        }
        for r in &study.results {
            assert!(r.within_bound, "{r:?}");
            assert!(r.ordering_violation <= 1e-9);
        }
    }

    proptest! {
        #[test]
        fn junction_term_is_bounded_by_data_errors(
            shift in -1.0f64..1.0,
            a in -2.0f64..0.0,
            a_n in -2.0f64..0.0,
            c in -1.0f64..1.0,
            eps in 0.05f64..0.5,
        ) {
            let h = Hamiltonian::quadratic(1.0, shift, c, 3.0).unwrap();
            let h_n = Hamiltonian::quadratic(1.0, shift, c + eps, 3.0).unwrap();
            let qs = axis(-2.0, 2.0, 33);
            let exact = vec![minus_envelope(&h, 0.0, &qs).unwrap(), minus_envelope(&Hamiltonian::eikonal(), 0.0, &qs).unwrap()];
            let approx = vec![minus_envelope(&h_n, 0.0, &qs).unwrap(), exact[1].clone()];
            let k0 = junction_sup(a, a_n, &exact, &approx);
            prop_assert!(k0 >= 0.0);
            prop_assert!(k0 <= (a - a_n).abs() + eps + 1e-12);
        }
    }
}
