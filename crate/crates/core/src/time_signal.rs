//! Piecewise-constant representatives of bounded measurable functions of time.
//!
//! Every time-measurable object in the solvers (flux limiter, cost signals,
//! Hamiltonian coefficients, error signals) enters the computation only
//! through integrals, so a piecewise-constant representative is enough and
//! allows every integral to be computed exactly.
//!
//! The representative is right-continuous: on `[t_k, t_{k+1})` it takes
//! `values[k]`, and at the horizon it takes the last value.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Piecewise-constant signal on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSignal {
    /// Builds a signal from `n + 1` strictly increasing breakpoints starting at
    /// zero and `n` values.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidSignal("need at least two breakpoints"));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidSignal("values.len must equal breakpoints.len - 1"));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidSignal("first breakpoint must be 0"));
        }
        if breakpoints.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal("non-finite breakpoint or value"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSignal("breakpoints must be strictly increasing"));
        }
        Ok(Self { breakpoints, values })
    }

    /// Constant signal `c` on `[0, horizon]`.
    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![value])
    }

    /// Uniform mesh of `values.len()` cells on `[0, horizon]`.
    pub fn uniform(values: Vec<f64>, horizon: f64) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidSignal("need at least one value"));
        }
        let mut breakpoints: Vec<f64> = (0..n).map(|k| horizon * k as f64 / n as f64).collect();
        breakpoints.push(horizon);
        Self::new(breakpoints, values)
    }

    /// Signal alternating between `first` and `second` on cells of length
    /// `half_period`, starting with `first`. The last cell is clipped at the
    /// horizon.
    pub fn alternating(first: f64, second: f64, half_period: f64, horizon: f64) -> Result<Self> {
        if !(half_period > 0.0) {
            return Err(Error::InvalidSignal("half period must be positive"));
        }
        let cells = libm::ceil(horizon / half_period - 1e-9).max(1.0) as usize;
        let mut breakpoints: Vec<f64> = (0..cells).map(|k| k as f64 * half_period).collect();
        breakpoints.push(horizon);
        let values = (0..cells).map(|k| if k % 2 == 0 { first } else { second }).collect();
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().expect("non-empty by construction")
    }

    pub fn ess_sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn ess_inf(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max |s|` over the representative.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    /// Index of the interval containing `t`, with the horizon mapped to the
    /// last interval.
    fn interval_of(&self, t: f64) -> usize {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        idx.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::OutOfHorizon { t, horizon });
        }
        Ok(self.values[self.interval_of(t)])
    }

    /// `∫_0^t s`, with `t` clamped to `[0, T]`.
    pub fn integral_to(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon());
        let mut acc = 0.0;
        for (k, w) in self.breakpoints.windows(2).enumerate() {
            if w[0] >= t {
                break;
            }
            acc += self.values[k] * (w[1].min(t) - w[0]);
        }
        acc
    }

    /// `∫_a^b s` computed on the representative.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let horizon = self.horizon();
        for t in [a, b] {
            if !(0.0..=horizon).contains(&t) {
                return Err(Error::OutOfHorizon { t, horizon });
            }
        }
        if b <= a {
            return Err(Error::EmptyWindow { a, b });
        }
        let first = self.interval_of(a);
        let mut acc = 0.0;
        for k in first..self.values.len() {
            let lo = self.breakpoints[k].max(a);
            let hi = self.breakpoints[k + 1].min(b);
            if hi <= lo {
                if self.breakpoints[k] >= b {
                    break;
                }
                continue;
            }
            acc += self.values[k] * (hi - lo);
        }
        Ok(acc)
    }

    /// Mean value over `[a, b]`.
    pub fn average(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Err(Error::EmptyWindow { a, b });
        }
        let acc = self.integral(a, b)?;
        let k = self.interval_of(a);
        if b <= self.breakpoints[k + 1] {
            return Ok(self.values[k]);
        }
        Ok(acc / (b - a))
    }

    /// Box-kernel mollification: the sliding-window mean over
    /// `[t - eps, t + eps] ∩ [0, T]`, sampled at cell midpoints of a uniform
    /// mesh of width at most `eps / 4`.
    pub fn mollify(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidSignal("mollification width must be positive"));
        }
        let horizon = self.horizon();
        if self.is_constant() {
            return Ok(self.clone());
        }
        let cells = libm::ceil(4.0 * horizon / eps).max(1.0) as usize;
        let h = horizon / cells as f64;
        let values = (0..cells)
            .map(|k| {
                let mid = (k as f64 + 0.5) * h;
                let a = (mid - eps).max(0.0);
                let b = (mid + eps).min(horizon);
                self.average(a, b)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(values, horizon)
    }

    /// Sorted union of the breakpoints of several signals, truncated at
    /// `horizon` (which is always included).
    pub fn merged_breakpoints<'a>(signals: impl IntoIterator<Item = &'a TimeSignal>, horizon: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = vec![0.0, horizon];
        for s in signals {
            pts.extend(s.breakpoints.iter().copied().filter(|&b| b > 0.0 && b < horizon));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Builds a signal on `breakpoints` whose value on each cell is `f` at the
    /// cell midpoint.
    pub fn sample_cells(breakpoints: Vec<f64>, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let values = breakpoints
            .windows(2)
            .map(|w| f(0.5 * (w[0] + w[1])))
            .collect::<Result<Vec<_>>>()?;
        Self::new(breakpoints, values)
    }

    /// Pointwise combination on the merged mesh.
    pub fn zip_with(&self, other: &Self, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        if self.horizon() != other.horizon() {
            return Err(Error::HorizonMismatch { left: self.horizon(), right: other.horizon() });
        }
        let mesh = Self::merged_breakpoints([self, other], self.horizon());
        Self::sample_cells(mesh, |t| Ok(f(self.eval(t)?, other.eval(t)?)))
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `∫_0^T |s1 - s2|`.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        let diff = self.zip_with(other, |a, b| (a - b).abs())?;
        Ok(diff.integral_to(diff.horizon()))
    }

    /// Total variation of the representative.
    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Restriction to `[0, horizon]` for `horizon <= T`.
    pub fn truncate(&self, horizon: f64) -> Result<Self> {
        if horizon > self.horizon() {
            return Err(Error::HorizonTooShort { signal: self.horizon(), required: horizon });
        }
        let mesh = Self::merged_breakpoints([self], horizon);
        Self::sample_cells(mesh, |t| self.eval(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_step() -> TimeSignal {
        TimeSignal::new(vec![0.0, 1.0, 2.0], vec![2.0, 0.0]).unwrap()
    }

    #[test]
    fn eval_uses_right_continuity_and_closes_at_horizon() {
        let s = two_step();
        assert_eq!(s.eval(0.5).unwrap(), 2.0);
        assert_eq!(s.eval(1.0).unwrap(), 0.0);
        assert_eq!(s.eval(2.0).unwrap(), 0.0);
        assert!(matches!(s.eval(2.5), Err(Error::OutOfHorizon { .. })));
        assert!(matches!(s.eval(-0.1), Err(Error::OutOfHorizon { .. })));
    }

    #[test]
    fn average_examples() {
        assert_eq!(two_step().average(0.0, 2.0).unwrap(), 1.0);
        let c = TimeSignal::constant(3.5, 4.0).unwrap();
        assert_eq!(c.average(0.3, 2.9).unwrap(), 3.5);
        let sym = TimeSignal::new(vec![0.0, 0.5, 1.0], vec![1.0, -1.0]).unwrap();
        assert!(sym.average(0.25, 0.75).unwrap().abs() < 1e-15);
        assert!(matches!(sym.average(0.5, 0.5), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn constructor_rejects_bad_meshes() {
        assert!(TimeSignal::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(TimeSignal::new(vec![0.1, 1.0], vec![1.0]).is_err());
        assert!(TimeSignal::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(TimeSignal::new(vec![0.0, 1.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn l1_distance_examples() {
        let s = two_step();
        assert_eq!(s.l1_distance(&s).unwrap(), 0.0);
        let one = TimeSignal::constant(1.0, 3.0).unwrap();
        let zero3 = TimeSignal::constant(0.0, 3.0).unwrap();
        assert_eq!(one.l1_distance(&zero3).unwrap(), 3.0);
        let step = TimeSignal::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.0]).unwrap();
        let zero2 = TimeSignal::constant(0.0, 2.0).unwrap();
        assert_eq!(step.l1_distance(&zero2).unwrap(), 1.0);
        assert!(matches!(step.l1_distance(&zero3), Err(Error::HorizonMismatch { .. })));
    }

    #[test]
    fn mollify_fixes_constants() {
        let c = TimeSignal::constant(-0.7, 2.0).unwrap();
        let m = c.mollify(0.3).unwrap();
        for t in [0.0, 0.4, 1.9, 2.0] {
            assert_eq!(m.eval(t).unwrap(), -0.7);
        }
    }

    // Independent quadrature: midpoint rule on a fine mesh, not the merged-mesh
    // exact integral used by `l1_distance`.
    fn quadrature_l1(a: &TimeSignal, b: &TimeSignal, n: usize) -> f64 {
        let horizon = a.horizon();
        let h = horizon / n as f64;
        (0..n)
            .map(|k| {
                let t = (k as f64 + 0.5) * h;
                (a.eval(t).unwrap() - b.eval(t).unwrap()).abs() * h
            })
            .sum()
    }

    #[test]
    fn mollified_unit_step_is_l1_close() {
        let step = TimeSignal::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0]).unwrap();
        let m = step.mollify(0.1).unwrap();
        let quad = quadrature_l1(&step, &m, 200_000);
        assert!(quad <= 0.1, "quadrature L1 {quad}");
        assert!((quad - step.l1_distance(&m).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn mollified_step_errors_strictly_decrease() {
        let step = TimeSignal::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0]).unwrap();
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&eps| quadrature_l1(&step, &step.mollify(eps).unwrap(), 400_000))
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn mollify_reduces_variation_and_mesh_width() {
        let s = TimeSignal::alternating(0.0, -1.0, 0.125, 1.0).unwrap();
        let m = s.mollify(0.1).unwrap();
        assert!(m.total_variation() <= s.total_variation() + 1e-12);
        assert!(m.breakpoints().windows(2).all(|w| w[1] - w[0] <= 0.1 / 4.0 + 1e-15));
    }

    #[test]
    fn alternating_signal_layout() {
        let s = TimeSignal::alternating(0.0, -1.0, 0.25, 1.0).unwrap();
        assert_eq!(s.values(), &[0.0, -1.0, 0.0, -1.0]);
        assert_eq!(s.average(0.0, 1.0).unwrap(), -0.5);
    }

    #[test]
    fn integral_over_partial_cells() {
        let s = TimeSignal::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 2.0, 4.0]).unwrap();
        assert!((s.integral(0.5, 2.5).unwrap() - (0.5 + 2.0 + 2.0)).abs() < 1e-15);
        assert!((s.integral_to(2.5) - (1.0 + 2.0 + 2.0)).abs() < 1e-15);
        assert_eq!(s.integral_to(10.0), 7.0);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn signal(horizon: f64) -> impl Strategy<Value = TimeSignal> {
            prop::collection::vec((0.05f64..1.0, -5.0f64..5.0), 1..8).prop_map(move |cells| {
                let total: f64 = cells.iter().map(|c| c.0).sum();
                let mut bps = vec![0.0];
                let mut acc = 0.0;
                for (w, _) in &cells[..cells.len() - 1] {
                    acc += w / total * horizon;
                    bps.push(acc);
                }
                bps.push(horizon);
                TimeSignal::new(bps, cells.iter().map(|c| c.1).collect()).unwrap()
            })
        }

        proptest! {
            #[test]
            fn average_is_monotone(s in signal(2.0), shift in 0.0f64..3.0, a in 0.0f64..1.0, len in 0.01f64..1.0) {
                let lifted = s.map(|v| v + shift);
                let b = a + len;
                prop_assert!(s.average(a, b).unwrap() <= lifted.average(a, b).unwrap() + 1e-12);
            }

            #[test]
            fn mollify_stays_in_essential_range(s in signal(1.5), eps in 0.01f64..0.5) {
                let m = s.mollify(eps).unwrap();
                prop_assert!(m.ess_inf() >= s.ess_inf() - 1e-12);
                prop_assert!(m.ess_sup() <= s.ess_sup() + 1e-12);
                prop_assert!(m.total_variation() <= s.total_variation() + 1e-9);
            }

            #[test]
            fn l1_is_a_metric(a in signal(1.0), b in signal(1.0), c in signal(1.0)) {
                let ab = a.l1_distance(&b).unwrap();
                let ba = b.l1_distance(&a).unwrap();
                let bc = b.l1_distance(&c).unwrap();
                let ac = a.l1_distance(&c).unwrap();
                prop_assert!((ab - ba).abs() < 1e-12);
                prop_assert!(ac <= ab + bc + 1e-12);
                prop_assert!(ab >= 0.0);
            }

            #[test]
            fn mollification_error_shrinks(s in signal(1.0)) {
                let mut prev = f64::INFINITY;
                let mut eps = 0.4;
                let mut last = 0.0;
                for _ in 0..7 {
                    let err = s.mollify(eps).unwrap().l1_distance(&s).unwrap();
                    prop_assert!(err <= 2.0 * prev + 1e-12);
                    prev = err;
                    last = err;
                    eps *= 0.5;
                }
                // jumps are bounded by 10 and there are at most 7 of them
                prop_assert!(last <= 7.0 * 10.0 * 0.4 / 64.0);
            }
        }
    }
}
