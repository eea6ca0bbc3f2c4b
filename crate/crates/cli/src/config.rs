use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use bvpm::domain::{GridSpec, PolarGrid};
use bvpm::kernels::BoundaryMeasure;
use bvpm::potentials::Potential;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Bounded { c: f64 },
    DistancePower { c: f64, alpha: f64 },
    ConeSingular { theta0: f64, aperture: f64, c: f64, alpha: f64 },
    RadialProfile { delta: Vec<f64>, values: Vec<f64> },
}

impl PotentialSpec {
    pub fn build(&self) -> bvpm::Result<Potential> {
        match self {
            PotentialSpec::Bounded { c } => Ok(Potential::bounded(*c)),
            PotentialSpec::DistancePower { c, alpha } => Ok(Potential::distance_power(*c, *alpha)),
            PotentialSpec::ConeSingular { theta0, aperture, c, alpha } => Potential::cone_singular(*theta0, *aperture, *c, *alpha),
            PotentialSpec::RadialProfile { delta, values } => Potential::radial_profile(delta.clone(), values.clone(), "radial profile"),
        }
    }
}

/// Boundary data. `cosine` is the density a + b cos(nθ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Uniform { density: f64 },
    Dirac { theta: f64, mass: f64 },
    Cosine { a: f64, b: f64, n: u32 },
}

impl MeasureSpec {
    pub fn build(&self, grid: &PolarGrid) -> BoundaryMeasure {
        match *self {
            MeasureSpec::Uniform { density } => BoundaryMeasure::uniform(grid, density),
            MeasureSpec::Dirac { theta, mass } => BoundaryMeasure::dirac(grid, theta, mass),
            MeasureSpec::Cosine { a, b, n } => BoundaryMeasure::from_density(grid, move |t| a + b * (n as f64 * t).cos()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceField {
    /// u_μ for the configured potential and measure.
    Solution,
    /// The radial Hardy solution for DistancePower(c, 2), u(0) = 1.
    Hardy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    pub field: TraceField,
    pub arcs: usize,
    /// Dirac candidates per mass in the extended-trace dictionary.
    pub diracs: usize,
    pub dirac_masses: Vec<f64>,
    pub uniform_arcs: usize,
    pub extended: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig { field: TraceField::Solution, arcs: 16, diracs: 8, dirac_masses: vec![0.5, 1.0], uniform_arcs: 8, extended: true }
    }
}

/// A boundary arc, written either `[θ0, θ1]` or `"θ0:θ1"` (counterclockwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArcSpec {
    Pair([f64; 2]),
    Text(String),
}

impl ArcSpec {
    pub fn bounds(&self) -> Result<(f64, f64), String> {
        match self {
            ArcSpec::Pair([a, b]) => Ok((*a, *b)),
            ArcSpec::Text(t) => {
                let (a, b) = t.split_once(':').ok_or_else(|| format!("'{t}' is not of the form theta0:theta1"))?;
                let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
                Ok((parse(a)?, parse(b)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacityConfig {
    /// Empty: `random_arcs` seeded arcs.
    pub arcs: Vec<ArcSpec>,
    pub random_arcs: usize,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig { arcs: vec![], random_arcs: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Relative residual for iterative solves.
    pub tol: f64,
    /// Truncation levels k_j; the untruncated level is always appended.
    pub kschedule: Vec<f64>,
    /// Atom mollification width in boundary cells.
    pub atom_width: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: bvpm::solver::DEFAULT_TOL, kschedule: bvpm::solver::default_schedule(), atom_width: 3.0 }
    }
}

impl SolverConfig {
    pub fn width(&self, grid: &PolarGrid) -> f64 {
        self.atom_width * grid.dtheta * grid.domain.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Boundary nodes examined by the singular-set detectors.
    pub nodes: Vec<usize>,
    /// Interior point for kernel estimates and the u_k(x0) series.
    pub x0: [f64; 2],
    pub cone_aperture: f64,
    /// Exponents for the `criteria` subcommand (DistancePower(1, α)).
    pub alphas: Vec<f64>,
    /// Criterion ids for the `suite` subcommand.
    pub criteria: Vec<u32>,
    #[serde(default)]
    pub capacity: CapacityConfig,
    #[serde(default)]
    pub trace: TraceConfig,
    /// 0 lets the thread pool decide.
    pub workers: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: GridSpec::default_disk(),
            potential: PotentialSpec::Bounded { c: 1.0 },
            measure: MeasureSpec::Uniform { density: 1.0 },
            solver: SolverConfig::default(),
            nodes: vec![0],
            x0: [0.0, 0.0],
            cone_aperture: 0.5,
            alphas: vec![1.0, 1.5, 2.0, 2.5],
            criteria: (1..=13).collect(),
            capacity: CapacityConfig::default(),
            trace: TraceConfig::default(),
            workers: 0,
            seed: 20241019,
        }
    }
}

/// Set `path` (dotted, numeric segments index arrays) inside a JSON tree.
/// The value is parsed as JSON and falls back to a plain string.
pub fn set_dotted(root: &mut Value, path: &str, raw: &str) -> Result<(), CliError> {
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad key path '{path}'")));
    }
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| CliError::Config(format!("{path}: '{part}' is not an array index")))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| CliError::Config(format!("{path}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Config(format!("{path}: '{}' is not an object", parts[..i].join(".")))),
        };
    }
    unreachable!("loop returns on the last segment")
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

impl ExperimentConfig {
    /// Defaults, then the config file, then `--set` overrides.
    pub fn load(file: Option<&str>, sets: &[(String, String)]) -> Result<Self, CliError> {
        let mut tree = serde_json::to_value(ExperimentConfig::default()).expect("default config serializes");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            let user: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            merge(&mut tree, user);
        }
        for (k, v) in sets {
            set_dotted(&mut tree, k, v)?;
        }
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(tree).map_err(|e| invalid(&e.path().to_string(), e.inner()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if g.dimension != 2 {
            return Err(invalid("grid.dimension", "the driver runs on the disk (2)"));
        }
        if g.m_radial < 8 || g.m_angular < 8 {
            return Err(invalid("grid", "need at least 8 radial and 8 angular nodes"));
        }
        if !(g.radius > 0.0) {
            return Err(invalid("grid.radius", "must be positive"));
        }
        let ks = &self.solver.kschedule;
        if ks.is_empty() || ks.windows(2).any(|w| w[1] <= w[0]) || !(ks[0] > 0.0) {
            return Err(invalid("solver.kschedule", "must be positive and increasing"));
        }
        if !(self.solver.atom_width >= 1.0) {
            return Err(invalid("solver.atom_width", "atoms must span at least one boundary cell"));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(invalid("solver.tol", "must lie in (0, 1)"));
        }
        if let Some((i, n)) = self.nodes.iter().enumerate().find(|(_, n)| **n >= g.m_angular) {
            return Err(invalid(&format!("nodes.{i}"), format!("boundary node {n} outside 0..{}", g.m_angular)));
        }
        if let Some(c) = self.criteria.iter().find(|c| !(1..=13).contains(*c)) {
            return Err(invalid("criteria", format!("unknown criterion {c}")));
        }
        if self.trace.arcs == 0 || g.m_angular % self.trace.arcs != 0 {
            return Err(invalid("trace.arcs", format!("must divide the {} boundary nodes", g.m_angular)));
        }
        if self.trace.field == TraceField::Hardy && !matches!(self.potential, PotentialSpec::DistancePower { alpha, .. } if alpha == 2.0) {
            return Err(invalid("trace.field", "the Hardy field needs potential distance_power with alpha = 2"));
        }
        for (i, a) in self.capacity.arcs.iter().enumerate() {
            let path = format!("capacity.arcs.{i}");
            let (t0, t1) = a.bounds().map_err(|e| invalid(&path, e))?;
            if !(t0.is_finite() && t1.is_finite()) || (t1 - t0).abs() > TAU {
                return Err(invalid(&path, "arc endpoints must be finite and span at most 2π"));
            }
        }
        let r0 = self.x0[0].hypot(self.x0[1]);
        if !(r0 < 0.95 * g.radius) {
            return Err(invalid("x0", "must lie inside the disk, away from the boundary"));
        }
        if !(self.cone_aperture > 0.0 && self.cone_aperture < 1.0) {
            return Err(invalid("cone_aperture", "must lie in (0, 1)"));
        }
        self.potential.build().map_err(|e| invalid("potential", e))?;
        Ok(())
    }
}

/// Recursive object merge; arrays and scalars are replaced.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let c = ExperimentConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&s).unwrap(), c);
    }

    #[test]
    fn dotted_overrides() {
        let sets = vec![("potential".to_string(), r#"{"kind":"distance_power","c":2,"alpha":2}"#.to_string()), ("solver.kschedule.0".into(), "2".into())];
        let c = ExperimentConfig::load(None, &sets).unwrap();
        assert_eq!(c.potential, PotentialSpec::DistancePower { c: 2.0, alpha: 2.0 });
        assert_eq!(c.solver.kschedule[0], 2.0);
        let c = ExperimentConfig::load(None, &[("grid.M_radial".into(), "64".into())]).unwrap();
        assert_eq!(c.grid.m_radial, 64);
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::load(None, &[("grid.M_radial".into(), "\"many\"".into())]).unwrap_err();
        assert!(e.to_string().contains("grid.M_radial"), "{e}");
        let e = ExperimentConfig::load(None, &[("nodes".into(), "[0, 999]".into())]).unwrap_err();
        assert!(e.to_string().contains("nodes.1"), "{e}");
        let e = ExperimentConfig::load(None, &[("potentail".into(), "1".into())]).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
        let e = ExperimentConfig::load(None, &[("capacity.arcs".into(), r#"["0:1", "bad"]"#.into())]).unwrap_err();
        assert!(e.to_string().contains("capacity.arcs.1"), "{e}");
        assert!(ExperimentConfig::load(None, &[("solver.kschedule.99".into(), "1".into())]).is_err());
    }
}
