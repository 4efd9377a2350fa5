//! JSON problem files.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "edges": [{"hamiltonian": {"name": "eikonal"}, "length": null}, ...],
//!   "flux_limiter": 0.0,
//!   "u0": {"form": "constant", "value": 0.0},
//!   "T": 1.0,
//!   "R_domain": 2.0,
//!   "control": {...},
//!   "approx": {"widths": [0.2, 0.1]}
//! }
//! ```
//!
//! On a two-edge line, edge 0 is `x > 0` and edge 1 is `x < 0`, and both
//! Hamiltonians (or control data) are written in whole-line coordinates.
//! With three or more edges every edge uses its distance from the junction.

use std::path::Path;
use std::sync::Arc;

use hjj_core::{
    Coefficient, ControlEdge, ControlExpr, ControlSet, ControlSystem, Hamiltonian, InitialDatum, JunctionProblem,
    Orientation, TimeSignal,
};
use serde::{Deserialize, Serialize};

use crate::RunError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CONTROLS: usize = 101;

/// `{"breakpoints": [...], "values": [...]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl SignalSpec {
    pub fn build(&self) -> Result<TimeSignal, RunError> {
        Ok(TimeSignal::new(self.breakpoints.clone(), self.values.clone())?)
    }
}

impl From<&TimeSignal> for SignalSpec {
    fn from(s: &TimeSignal) -> Self {
        Self { breakpoints: s.breakpoints().to_vec(), values: s.values().to_vec() }
    }
}

/// A number or a piecewise-constant signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Const(f64),
    Signal(SignalSpec),
}

impl CoefficientSpec {
    fn coefficient(&self) -> Result<Coefficient, RunError> {
        Ok(match self {
            CoefficientSpec::Const(c) => Coefficient::Const(*c),
            CoefficientSpec::Signal(s) => Coefficient::Signal(s.build()?),
        })
    }

    /// Signal on `[0, horizon]`; constants are stretched to the horizon.
    pub fn signal(&self, horizon: f64) -> Result<TimeSignal, RunError> {
        match self {
            // a zero horizon still needs a non-empty signal
            CoefficientSpec::Const(c) => Ok(TimeSignal::constant(*c, if horizon > 0.0 { horizon } else { 1.0 })?),
            CoefficientSpec::Signal(s) => s.build(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExprSpec {
    Constant { value: CoefficientSpec },
    Linear { scale: f64 },
    Affine { c0: CoefficientSpec, c1: CoefficientSpec },
    /// `Σ_k coefficients[k] α^k`
    Poly { coefficients: Vec<CoefficientSpec> },
}

impl ExprSpec {
    fn build(&self) -> Result<ControlExpr, RunError> {
        Ok(match self {
            ExprSpec::Constant { value } => ControlExpr::constant(value.coefficient()?),
            ExprSpec::Linear { scale } => ControlExpr::linear(*scale),
            ExprSpec::Affine { c0, c1 } => ControlExpr::affine(c0.coefficient()?, c1.coefficient()?),
            ExprSpec::Poly { coefficients } => {
                ControlExpr::Poly(coefficients.iter().map(|c| c.coefficient()).collect::<Result<_, _>>()?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsSpec {
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_controls")]
    pub n: usize,
}

fn default_controls() -> usize {
    DEFAULT_CONTROLS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlEdgeSpec {
    pub f: ExprSpec,
    pub l: ExprSpec,
    pub controls: ControlsSpec,
}

impl ControlEdgeSpec {
    pub fn build(&self, count: Option<usize>) -> Result<ControlEdge, RunError> {
        let c = self.controls;
        if !(c.min <= c.max) {
            return Err(RunError::Config("control interval has min > max".into()));
        }
        let n = count.unwrap_or(c.n);
        Ok(ControlEdge::new(self.f.build()?, self.l.build()?, ControlSet::new(c.min, c.max, n)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    /// `|p| + c`
    AbsShift { c: CoefficientSpec },
    /// `|p| - 1`
    Eikonal,
    /// `a (p - b)² + c` for slopes up to `slope_bound`
    Quadratic {
        a: CoefficientSpec,
        b: CoefficientSpec,
        c: CoefficientSpec,
        #[serde(default = "default_slope_bound")]
        slope_bound: f64,
    },
    /// `sup_α f p - l`
    ControlInduced {
        f: ExprSpec,
        l: ExprSpec,
        controls: ControlsSpec,
    },
}

fn default_slope_bound() -> f64 {
    10.0
}

impl HamiltonianSpec {
    /// `count` resamples the control interval of an induced Hamiltonian.
    pub fn build(&self, count: Option<usize>) -> Result<Hamiltonian, RunError> {
        Ok(match self {
            HamiltonianSpec::AbsShift { c } => Hamiltonian::abs_shift(c.coefficient()?),
            HamiltonianSpec::Eikonal => Hamiltonian::eikonal(),
            HamiltonianSpec::Quadratic { a, b, c, slope_bound } => {
                Hamiltonian::quadratic(a.coefficient()?, b.coefficient()?, c.coefficient()?, *slope_bound)?
            }
            HamiltonianSpec::ControlInduced { f, l, controls } => {
                let edge = ControlEdgeSpec { f: f.clone(), l: l.clone(), controls: *controls }.build(count)?;
                Hamiltonian::induced(Arc::new(edge))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant { value: f64 },
    /// `scale |x|`
    Abs { scale: f64 },
    /// `min(|x|, cap)`
    MinAbs { cap: f64 },
    /// `slope x + intercept`
    Linear { slope: f64, intercept: f64 },
}

impl InitialSpec {
    pub fn build(&self) -> InitialDatum {
        match *self {
            InitialSpec::Constant { value } => InitialDatum::Constant(value),
            InitialSpec::Abs { scale } => InitialDatum::Abs { scale },
            InitialSpec::MinAbs { cap } => InitialDatum::MinAbs { cap },
            InitialSpec::Linear { slope, intercept } => InitialDatum::Linear { slope, intercept },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub hamiltonian: HamiltonianSpec,
    /// `null` for an unbounded edge.
    #[serde(default)]
    pub length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub edges: Vec<ControlEdgeSpec>,
    #[serde(rename = "A0")]
    pub a0: f64,
    pub l0: CoefficientSpec,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxSpec {
    pub widths: Vec<f64>,
    #[serde(rename = "K", default)]
    pub slope_bound: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_grid_points() -> usize {
    hjj_core::approximation::DEFAULT_GRID_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: u32,
    #[serde(default)]
    pub edges: Option<Vec<EdgeSpec>>,
    #[serde(default)]
    pub flux_limiter: Option<CoefficientSpec>,
    pub u0: InitialSpec,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "R_domain")]
    pub r_domain: f64,
    #[serde(default)]
    pub control: Option<ControlSpec>,
    #[serde(default)]
    pub approx: Option<ApproxSpec>,
}

/// Command-line overrides applied on top of a problem file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub horizon: Option<f64>,
    pub r_domain: Option<f64>,
    pub controls: Option<usize>,
}

fn orientations(count: usize) -> Vec<Orientation> {
    if count == 2 {
        vec![Orientation::Outward, Orientation::Reflected]
    } else {
        vec![Orientation::Outward; count]
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| RunError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if file.schema != SCHEMA_VERSION {
            return Err(RunError::Config(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn horizon(&self, o: &Overrides) -> f64 {
        o.horizon.unwrap_or(self.horizon)
    }

    fn r_domain(&self, o: &Overrides) -> f64 {
        o.r_domain.unwrap_or(self.r_domain)
    }

    /// Control model from the `control` block.
    pub fn control_system(&self, o: &Overrides) -> Result<ControlSystem, RunError> {
        let spec = self
            .control
            .as_ref()
            .ok_or_else(|| RunError::Config("problem file has no \"control\" block".into()))?;
        let edges = spec.edges.iter().map(|e| e.build(o.controls)).collect::<Result<Vec<_>, _>>()?;
        let count = edges.len();
        let l0 = spec.l0.signal(self.horizon(o))?;
        Ok(ControlSystem::new(edges, orientations(count), spec.a0, l0, spec.delta)?)
    }

    /// Junction problem from `edges` and `flux_limiter`, or induced by the
    /// `control` block when `edges` is absent.
    pub fn problem(&self, o: &Overrides) -> Result<JunctionProblem, RunError> {
        let horizon = self.horizon(o);
        let r_domain = self.r_domain(o);
        let u0 = self.u0.build();
        let Some(edges) = &self.edges else {
            return Ok(self.control_system(o)?.to_problem(u0, horizon, r_domain)?);
        };
        for (j, e) in edges.iter().enumerate() {
            if let Some(len) = e.length {
                if !(len >= r_domain) {
                    return Err(RunError::Config(format!(
                        "edge {j} has length {len} < R_domain {r_domain}; finite edges shorter than the domain are not supported"
                    )));
                }
            }
        }
        let limiter = match &self.flux_limiter {
            Some(a) => a.signal(horizon)?,
            None => self
                .control
                .as_ref()
                .map(|c| -> Result<TimeSignal, RunError> {
                    let l0 = c.l0.signal(horizon)?;
                    Ok(l0.map(|l| (-l).max(c.a0)))
                })
                .transpose()?
                .ok_or_else(|| RunError::Config("problem file has no \"flux_limiter\"".into()))?,
        };
        let mut hs = edges.iter().map(|e| e.hamiltonian.build(o.controls)).collect::<Result<Vec<_>, _>>()?;
        let orient = orientations(hs.len());
        for (h, or) in hs.iter_mut().zip(&orient) {
            if *or == Orientation::Reflected {
                *h = h.reflected();
            }
        }
        Ok(JunctionProblem::new(hs, orient, limiter, u0, horizon, r_domain)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL: &str = r#"{
        "schema": 1,
        "u0": {"form": "constant", "value": 0.0},
        "T": 1.0,
        "R_domain": 2.0,
        "control": {
            "edges": [
                {"f": {"form": "linear", "scale": 1.0}, "l": {"form": "constant", "value": 1.0}, "controls": {"min": -1.0, "max": 1.0, "n": 11}},
                {"f": {"form": "linear", "scale": 1.0}, "l": {"form": "constant", "value": 1.0}, "controls": {"min": -1.0, "max": 1.0, "n": 11}}
            ],
            "A0": -1.0,
            "l0": 0.0
        }
    }"#;

    #[test]
    fn induced_problem_from_control_block() {
        let file = ProblemFile::parse(MODEL).unwrap();
        let p = file.problem(&Overrides::default()).unwrap();
        assert!(p.is_line());
        assert_eq!(p.flux_limiter().values(), &[0.0]);
        let h = p.whole_line_hamiltonian(1);
        assert!((h.eval(0.0, -0.5, 2.0) - 1.0).abs() < 1e-12);
        let cs = file.control_system(&Overrides { controls: Some(5), ..Default::default() }).unwrap();
        assert_eq!(cs.edges()[0].samples().len(), 5);
    }

    #[test]
    fn signals_and_catalog_names() {
        let text = r#"{
            "schema": 1,
            "edges": [
                {"hamiltonian": {"name": "abs_shift", "c": {"breakpoints": [0, 0.5, 1], "values": [-1, 0]}}},
                {"hamiltonian": {"name": "quadratic", "a": 1, "b": 0.5, "c": -1}, "length": null},
                {"hamiltonian": {"name": "eikonal"}, "length": 5}
            ],
            "flux_limiter": {"breakpoints": [0, 1], "values": [0.5]},
            "u0": {"form": "min_abs", "cap": 1},
            "T": 1,
            "R_domain": 3
        }"#;
        let p = ProblemFile::parse(text).unwrap().problem(&Overrides::default()).unwrap();
        assert_eq!(p.edge_count(), 3);
        assert_eq!(p.edges()[0].hamiltonian.eval(0.7, 0.0, 2.0), 2.0);
        assert_eq!(p.edges()[1].hamiltonian.eval(0.0, 0.0, 0.5), -1.0);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match ProblemFile::parse("{\n  \"schema\": 1,\n  \"T\": ,\n}") {
            Err(RunError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ProblemFile::parse(&MODEL.replace("\"schema\": 1", "\"schema\": 7")),
            Err(RunError::Config(_))
        ));
    }

    #[test]
    fn missing_blocks_are_config_errors() {
        let file = ProblemFile::parse(MODEL).unwrap();
        let bare = ProblemFile { control: None, ..file };
        assert!(matches!(bare.problem(&Overrides::default()), Err(RunError::Config(_))));
        assert!(matches!(bare.control_system(&Overrides::default()), Err(RunError::Config(_))));
    }

    #[test]
    fn short_edges_are_rejected() {
        let text = MODEL.replace(
            "\"T\": 1.0,",
            "\"T\": 1.0, \"edges\": [{\"hamiltonian\": {\"name\": \"eikonal\"}, \"length\": 1.0}, {\"hamiltonian\": {\"name\": \"eikonal\"}}],",
        );
        let file = ProblemFile::parse(&text).unwrap();
        assert!(matches!(file.problem(&Overrides::default()), Err(RunError::Config(_))));
    }
}
