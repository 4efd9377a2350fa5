//! Space-time grids on the star and the nodal solution fields both solvers
//! produce.
//!
//! Node 0 is the junction, shared by all edges. Node `1 + j·n + (k - 1)` is
//! the `k`-th node of edge `j`, at distance `k·dx` from the junction.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::problem::{JunctionProblem, Orientation, StarPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dx: f64,
    dt: f64,
    nodes_per_edge: usize,
    steps: usize,
    orientations: Vec<Orientation>,
    horizon: f64,
}

impl Grid {
    /// Grid covering distances `[0, r_domain]` on every edge and times
    /// `[0, horizon]`. The time step is shrunk so that an integer number of
    /// steps reaches the horizon.
    pub fn new(dx: f64, dt: f64, horizon: f64, r_domain: f64, orientations: Vec<Orientation>) -> Result<Self> {
        if !(dx > 0.0) || !(dt > 0.0) || !dx.is_finite() || !dt.is_finite() {
            return Err(Error::InvalidProblem("grid steps must be positive".into()));
        }
        if !(horizon >= 0.0) {
            return Err(Error::InvalidProblem("horizon must be nonnegative".into()));
        }
        let nodes_per_edge = libm::round(r_domain / dx) as usize;
        if nodes_per_edge < 2 {
            return Err(Error::InvalidProblem("domain must hold at least two cells per edge".into()));
        }
        if orientations.len() < 2 {
            return Err(Error::InvalidProblem("a junction needs at least two edges".into()));
        }
        let steps = libm::ceil(horizon / dt - 1e-9).max(0.0) as usize;
        let dt = if steps == 0 { dt } else { horizon / steps as f64 };
        Ok(Self { dx, dt, nodes_per_edge, steps, orientations, horizon })
    }

    /// Grid for `problem`, rejecting time steps above `dx / C₂`.
    pub fn for_problem(problem: &JunctionProblem, dx: f64, dt: f64) -> Result<Self> {
        let grid = Self::new(dx, dt, problem.horizon(), problem.r_domain(), problem.orientations())?;
        grid.check_cfl(problem.max_lipschitz_p())?;
        Ok(grid)
    }

    /// Time step `safety · dx / speed`.
    pub fn cfl_step(dx: f64, speed: f64, safety: f64) -> f64 {
        if speed > 0.0 {
            safety * dx / speed
        } else {
            safety * dx
        }
    }

    pub fn check_cfl(&self, speed: f64) -> Result<()> {
        let limit = if speed > 0.0 { self.dx / speed } else { f64::INFINITY };
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt: self.dt, limit });
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nodes_per_edge(&self) -> usize {
        self.nodes_per_edge
    }

    pub fn edge_count(&self) -> usize {
        self.orientations.len()
    }

    pub fn orientations(&self) -> &[Orientation] {
        &self.orientations
    }

    pub fn r_domain(&self) -> f64 {
        self.nodes_per_edge as f64 * self.dx
    }

    pub fn node_count(&self) -> usize {
        1 + self.edge_count() * self.nodes_per_edge
    }

    pub fn levels(&self) -> usize {
        self.steps + 1
    }

    pub fn time(&self, level: usize) -> f64 {
        if level == self.steps {
            self.horizon
        } else {
            level as f64 * self.dt
        }
    }

    /// Index of the `k`-th node of `edge` (`k == 0` is the junction).
    #[inline]
    pub fn node(&self, edge: usize, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            1 + edge * self.nodes_per_edge + (k - 1)
        }
    }

    pub fn point(&self, node: usize) -> StarPoint {
        if node == 0 {
            return StarPoint::junction();
        }
        let edge = (node - 1) / self.nodes_per_edge;
        let k = (node - 1) % self.nodes_per_edge + 1;
        StarPoint { edge, dist: k as f64 * self.dx }
    }

    /// Signed coordinate `sign · dist` of a node.
    pub fn signed_position(&self, node: usize) -> f64 {
        let p = self.point(node);
        if p.is_junction() {
            0.0
        } else {
            self.orientations[p.edge].sign() * p.dist
        }
    }

    /// Level whose time equals `t` (within `1e-9 dt`).
    pub fn level_of(&self, t: f64) -> Option<usize> {
        let l = libm::round(t / self.dt);
        if l < 0.0 || (l * self.dt - t).abs() > 1e-9 * self.dt.max(1.0) || l as usize > self.steps {
            return None;
        }
        Some(l as usize)
    }

    /// Level closest to `t`.
    pub fn nearest_level(&self, t: f64) -> usize {
        (libm::round(t / self.dt).max(0.0) as usize).min(self.steps)
    }

    /// Node closest to a star point.
    pub fn nearest_node(&self, p: StarPoint) -> usize {
        let k = libm::round(p.dist / self.dx).max(0.0) as usize;
        self.node(p.edge, k.min(self.nodes_per_edge))
    }

    /// Same spatial and temporal layout.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.nodes_per_edge == other.nodes_per_edge
            && self.steps == other.steps
            && self.orientations == other.orientations
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        Self { steps, horizon: steps as f64 * self.dt, ..self.clone() }
    }
}

/// Nodal values `u(node, level)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    grid: Grid,
    levels: Vec<Vec<f64>>,
}

impl SolutionField {
    pub fn new(grid: Grid, levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(|l| l.len() != grid.node_count()) {
            return Err(Error::InvalidProblem("levels do not match the grid".into()));
        }
        if let Some(level) = levels.iter().position(|l| l.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { level });
        }
        Ok(Self { grid, levels })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.levels[n]
    }

    pub fn last(&self) -> &[f64] {
        self.levels.last().expect("non-empty")
    }

    pub fn value(&self, level: usize, node: usize) -> f64 {
        self.levels[level][node]
    }

    /// Value at the node and level nearest to `(p, t)`.
    pub fn sample(&self, p: StarPoint, t: f64) -> f64 {
        self.levels[self.grid.nearest_level(t)][self.grid.nearest_node(p)]
    }

    /// Value on the two-edge line at whole-line `x`, nearest node and level.
    pub fn sample_line(&self, x: f64, t: f64) -> f64 {
        self.sample(StarPoint::on_line(x), t)
    }

    pub fn sup_norm(&self) -> f64 {
        self.levels.iter().flatten().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// `max |u - v|` over all nodes and levels.
    pub fn max_abs_diff(&self, other: &SolutionField) -> Result<f64> {
        if !self.grid.compatible(&other.grid) {
            return Err(Error::InvalidProblem("fields live on different grids".into()));
        }
        Ok(self
            .levels
            .iter()
            .flatten()
            .zip(other.levels.iter().flatten())
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs())))
    }

    /// `max |u - v|` at one level, restricted to nodes within `radius` of the
    /// junction.
    pub fn level_diff_within(&self, other: &SolutionField, level: usize, radius: f64) -> Result<f64> {
        if !self.grid.compatible(&other.grid) {
            return Err(Error::InvalidProblem("fields live on different grids".into()));
        }
        let mut worst: f64 = 0.0;
        for node in 0..self.grid.node_count() {
            if self.grid.point(node).dist <= radius + 1e-12 {
                worst = worst.max((self.levels[level][node] - other.levels[level][node]).abs());
            }
        }
        Ok(worst)
    }

    /// Largest difference quotient between neighbouring nodes over all
    /// levels (junction neighbours included).
    pub fn discrete_lipschitz(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for level in &self.levels {
            for j in 0..g.edge_count() {
                for k in 1..=g.nodes_per_edge() {
                    let d = (level[g.node(j, k)] - level[g.node(j, k - 1)]).abs() / g.dx();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    /// Largest `|u(x, t_{n+1}) - u(x, t_n)| / dt` over nodes within
    /// `radius` of the junction.
    pub fn time_lipschitz_within(&self, radius: f64) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for w in self.levels.windows(2) {
            for node in 0..g.node_count() {
                if g.point(node).dist <= radius + 1e-12 {
                    worst = worst.max((w[1][node] - w[0][node]).abs() / g.dt());
                }
            }
        }
        worst
    }

    /// Largest neighbour difference quotient within `radius`.
    pub fn space_lipschitz_within(&self, radius: f64) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for level in &self.levels {
            for j in 0..g.edge_count() {
                for k in 1..=g.nodes_per_edge() {
                    if k as f64 * g.dx() > radius + 1e-12 {
                        break;
                    }
                    worst = worst.max((level[g.node(j, k)] - level[g.node(j, k - 1)]).abs() / g.dx());
                }
            }
        }
        worst
    }

    /// Nodes ordered by signed position (whole-line order for the line).
    pub fn nodes_by_position(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = (0..self.grid.node_count()).collect();
        if self.grid.edge_count() == 2 && self.grid.orientations()[0] != self.grid.orientations()[1] {
            nodes.sort_by(|&a, &b| self.grid.signed_position(a).total_cmp(&self.grid.signed_position(b)));
        }
        nodes
    }

    /// Field restricted to its first `levels` time levels.
    pub fn truncated(&self, levels: usize) -> Self {
        let levels = levels.clamp(1, self.levels.len());
        Self { grid: self.grid.with_steps(levels - 1), levels: self.levels[..levels].to_vec() }
    }

    /// Adds `offset(t_n)` to every node of level `n`.
    pub fn shifted(&self, mut offset: impl FnMut(f64) -> f64) -> Self {
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(n, l)| {
                let c = offset(self.grid.time(n));
                l.iter().map(|&v| v + c).collect()
            })
            .collect();
        Self { grid: self.grid.clone(), levels }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line_grid() -> Grid {
        Grid::new(0.5, 0.25, 1.0, 2.0, vec![Orientation::Outward, Orientation::Reflected]).unwrap()
    }

    #[test]
    fn node_layout() {
        let g = line_grid();
        assert_eq!(g.nodes_per_edge(), 4);
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.steps(), 4);
        assert_eq!(g.node(1, 0), 0);
        assert_eq!(g.point(g.node(1, 2)), StarPoint { edge: 1, dist: 1.0 });
        assert_eq!(g.signed_position(g.node(1, 2)), -1.0);
        assert_eq!(g.signed_position(g.node(0, 4)), 2.0);
        assert_eq!(g.nearest_node(StarPoint::on_line(-0.6)), g.node(1, 1));
    }

    #[test]
    fn time_step_divides_horizon() {
        let g = Grid::new(0.1, 0.3, 1.0, 1.0, vec![Orientation::Outward; 3]).unwrap();
        assert_eq!(g.steps(), 4);
        assert_eq!(g.dt(), 0.25);
        assert_eq!(g.time(4), 1.0);
        assert_eq!(g.level_of(0.5), Some(2));
        assert_eq!(g.level_of(0.3), None);
    }

    #[test]
    fn cfl_guard() {
        let g = line_grid();
        assert!(g.check_cfl(2.0).is_ok());
        assert!(matches!(g.check_cfl(2.5), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn line_ordering() {
        let g = line_grid();
        let f = SolutionField::new(g.clone(), vec![vec![0.0; 9]; 5]).unwrap();
        let xs: Vec<f64> = f.nodes_by_position().iter().map(|&n| g.signed_position(n)).collect();
        assert_eq!(xs, vec![-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn rejects_non_finite_levels() {
        let g = line_grid();
        let mut levels = vec![vec![0.0; 9]; 5];
        levels[3][2] = f64::NAN;
        assert_eq!(SolutionField::new(g, levels).unwrap_err(), Error::NonFinite { level: 3 });
    }
}
