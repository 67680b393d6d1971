//! Run configuration, read from TOML. All quantities are SI.

use crate::error::{Error, Result};
use crate::fem::{ProblemKind, DEFAULT_LOAD_FRACTION};
use crate::relations::PermeabilityRelation;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Young's modulus E (Pa).
    pub youngs_modulus: f64,
    /// Poisson's ratio ν.
    pub poisson_ratio: f64,
    /// Fluid viscosity η (Pa·s).
    pub viscosity: f64,
    /// Initial porosity θ₀.
    pub porosity: f64,
    /// Grain diameter d_s (m).
    pub grain_diameter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// κ in step m is evaluated from the porosity of step m − 1.
    Lagged,
    /// Re-solve step m with updated κ until the pressure settles.
    Picard { max_iter: usize, tol: f64 },
}

pub const PICARD_TOL: f64 = 1e-8;
pub const PICARD_MAX_ITER: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub width: f64,
    pub height: f64,
    pub dx: f64,
    pub dy: f64,
    pub load_fraction: f64,
    pub material: Material,
    pub relation: PermeabilityRelation,
    /// Time step τ (s).
    pub tau: f64,
    /// Final time T (s).
    pub t_end: f64,
    pub problem: ProblemKind,
    /// Pump pressure on the injection edge (Pa).
    pub p_pump: f64,
    /// Squeeze traction σ'₀ (Pa); ignored for the pump problem.
    pub sigma0: f64,
    pub stabilization: bool,
    pub coupling: Coupling,
    /// Times at which full field snapshots are kept.
    pub snapshots: Vec<f64>,
}

impl Material {
    pub fn sand() -> Self {
        Material {
            youngs_modulus: 35e6,
            poisson_ratio: 0.3,
            viscosity: 1.307e-3,
            porosity: 0.4,
            grain_diameter: 2e-4,
        }
    }
}

impl SolverConfig {
    /// The reference setup on the 2 m × 1 m rectangle with the
    /// Kozeny-Carman relation, τ = 0.5 s and T = 300 s.
    pub fn reference(problem: ProblemKind, spacing: f64) -> Self {
        let material = Material::sand();
        let p_pump = match problem {
            ProblemKind::HighPumpPressure => 5e6,
            ProblemKind::Squeeze => 5e5,
        };
        SolverConfig {
            width: 2.0,
            height: 1.0,
            dx: spacing,
            dy: spacing,
            load_fraction: DEFAULT_LOAD_FRACTION,
            material,
            relation: PermeabilityRelation::KozenyCarman {
                d_s: material.grain_diameter,
            },
            tau: 0.5,
            t_end: 300.0,
            problem,
            p_pump,
            sigma0: 3e6,
            stabilization: true,
            coupling: Coupling::Lagged,
            snapshots: vec![300.0],
        }
    }

    pub fn with_relation(&self, relation: PermeabilityRelation) -> Self {
        SolverConfig {
            relation,
            ..self.clone()
        }
    }

    /// Number of time steps, `round(T/τ)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.tau).round() as usize
    }

    /// Checks every constraint and reports all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} = {v} must be positive"));
            }
        };
        positive("mesh.length", self.width);
        positive("mesh.height", self.height);
        positive("mesh.dx", self.dx);
        positive("mesh.dy", self.dy);
        positive("material.youngs_modulus", self.material.youngs_modulus);
        positive("material.viscosity", self.material.viscosity);
        positive("material.grain_diameter", self.material.grain_diameter);
        positive("time.step", self.tau);
        let m = &self.material;
        if !(m.poisson_ratio > 0.0 && m.poisson_ratio < 0.5) {
            errs.push(format!(
                "material.poisson_ratio = {} must lie in (0, 0.5)",
                m.poisson_ratio
            ));
        }
        if !(m.porosity > 0.0 && m.porosity < 1.0) {
            errs.push(format!(
                "material.porosity = {} must lie in (0, 1)",
                m.porosity
            ));
        }
        if !(self.load_fraction > 0.0 && self.load_fraction <= 1.0) {
            errs.push(format!(
                "mesh.load_fraction = {} must lie in (0, 1]",
                self.load_fraction
            ));
        }
        if !(self.t_end >= self.tau && self.t_end.is_finite()) {
            errs.push(format!(
                "time.end = {} must be at least time.step = {}",
                self.t_end, self.tau
            ));
        }
        if !self.p_pump.is_finite() || !self.sigma0.is_finite() {
            errs.push("problem loads must be finite".into());
        }
        if let Coupling::Picard { max_iter, tol } = self.coupling {
            if max_iter == 0 || !(tol > 0.0) {
                errs.push("problem.picard_max_iter must be ≥ 1 and problem.picard_tol > 0".into());
            }
        }
        for &s in &self.snapshots {
            if !(s >= 0.0 && s <= self.t_end) {
                errs.push(format!("time.snapshots entry {s} lies outside [0, T]"));
            }
        }
        for (name, extent, step) in [("dx", self.width, self.dx), ("dy", self.height, self.dy)] {
            if extent > 0.0 && step > 0.0 {
                let n = (extent / step).round();
                if n < 1.0 || (n * step - extent).abs() > 1e-9 * extent {
                    errs.push(format!("mesh.{name} = {step} does not divide {extent}"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        raw.resolve()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    length: Option<f64>,
    height: Option<f64>,
    dx: Option<f64>,
    dy: Option<f64>,
    load_fraction: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    youngs_modulus: Option<f64>,
    poisson_ratio: Option<f64>,
    viscosity: Option<f64>,
    porosity: Option<f64>,
    grain_diameter: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRelation {
    kind: Option<String>,
    p_c: Option<f64>,
    kappa: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTime {
    step: Option<f64>,
    end: Option<f64>,
    snapshots: Option<Vec<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    kind: Option<String>,
    pump_pressure: Option<f64>,
    overburden: Option<f64>,
    stabilization: Option<bool>,
    coupling: Option<String>,
    picard_tol: Option<f64>,
    picard_max_iter: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    material: RawMaterial,
    #[serde(default)]
    relation: RawRelation,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    problem: RawProblem,
}

impl RawConfig {
    fn resolve(self) -> Result<SolverConfig> {
        let mut errs = Vec::new();
        let mut need = |key: &str, v: Option<f64>| {
            v.unwrap_or_else(|| {
                errs.push(format!("missing {key}"));
                f64::NAN
            })
        };
        let width = need("mesh.length", self.mesh.length);
        let height = need("mesh.height", self.mesh.height);
        let dx = need("mesh.dx", self.mesh.dx);
        let dy = self.mesh.dy.unwrap_or(dx);
        let material = Material {
            youngs_modulus: need("material.youngs_modulus", self.material.youngs_modulus),
            poisson_ratio: need("material.poisson_ratio", self.material.poisson_ratio),
            viscosity: need("material.viscosity", self.material.viscosity),
            porosity: need("material.porosity", self.material.porosity),
            grain_diameter: need("material.grain_diameter", self.material.grain_diameter),
        };
        let tau = need("time.step", self.time.step);
        let t_end = need("time.end", self.time.end);
        let p_pump = need("problem.pump_pressure", self.problem.pump_pressure);

        let problem = match self.problem.kind.as_deref() {
            None => {
                errs.push("missing problem.kind".into());
                ProblemKind::HighPumpPressure
            }
            Some(s) => s.parse().unwrap_or_else(|e: Error| {
                errs.push(format!("problem.kind: {e}"));
                ProblemKind::HighPumpPressure
            }),
        };
        let sigma0 = match (problem, self.problem.overburden) {
            (ProblemKind::Squeeze, None) => {
                errs.push("missing problem.overburden (required for the squeeze problem)".into());
                f64::NAN
            }
            (_, v) => v.unwrap_or(0.0),
        };
        let coupling = match self.problem.coupling.as_deref().unwrap_or("lagged") {
            "lagged" => Coupling::Lagged,
            "picard" => Coupling::Picard {
                max_iter: self.problem.picard_max_iter.unwrap_or(PICARD_MAX_ITER),
                tol: self.problem.picard_tol.unwrap_or(PICARD_TOL),
            },
            other => {
                errs.push(format!(
                    "problem.coupling = {other:?}: expected \"lagged\" or \"picard\""
                ));
                Coupling::Lagged
            }
        };

        let relation = match self.relation.kind.as_deref() {
            None => {
                errs.push("missing relation.kind".into());
                None
            }
            Some("kozeny-carman") => {
                PermeabilityRelation::kozeny_carman(material.grain_diameter).ok()
            }
            Some("network-inspired") => match self.relation.p_c {
                None => {
                    errs.push("missing relation.p_c (required for network-inspired)".into());
                    None
                }
                Some(p_c) => match PermeabilityRelation::network_inspired(
                    p_c,
                    material.porosity,
                    material.grain_diameter,
                ) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        errs.push(format!("relation: {e}"));
                        None
                    }
                },
            },
            Some("constant") => match self.relation.kappa.map(PermeabilityRelation::constant) {
                None => {
                    errs.push("missing relation.kappa (required for constant)".into());
                    None
                }
                Some(Ok(r)) => Some(r),
                Some(Err(e)) => {
                    errs.push(format!("relation: {e}"));
                    None
                }
            },
            Some(other) => {
                errs.push(format!(
                    "relation.kind = {other:?}: expected \"kozeny-carman\", \"network-inspired\" or \"constant\""
                ));
                None
            }
        };

        let cfg = SolverConfig {
            width,
            height,
            dx,
            dy,
            load_fraction: self.mesh.load_fraction.unwrap_or(DEFAULT_LOAD_FRACTION),
            material,
            relation: relation.unwrap_or(PermeabilityRelation::Constant { kappa: 0.0 }),
            tau,
            t_end,
            problem,
            p_pump,
            sigma0,
            stabilization: self.problem.stabilization.unwrap_or(true),
            coupling,
            snapshots: self.time.snapshots.unwrap_or_else(|| vec![t_end]),
        };
        // range checks only on values that were present
        if let Err(Error::Config(more)) = cfg.validate() {
            errs.extend(more.into_iter().filter(|m| !m.contains("NaN")));
        }
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE: &str = r#"
[mesh]
length = 2.0
height = 1.0
dx = 0.04

[material]
youngs_modulus = 35e6
poisson_ratio = 0.3
viscosity = 1.307e-3
porosity = 0.4
grain_diameter = 2e-4

[relation]
kind = "network-inspired"
p_c = 0.4935

[time]
step = 0.5
end = 60.0

[problem]
kind = "squeeze"
pump_pressure = 5e5
overburden = 3e6
"#;

    #[test]
    fn parses_example() {
        let cfg = SolverConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(cfg.problem, ProblemKind::Squeeze);
        assert_eq!(cfg.dy, 0.04);
        assert_eq!(cfg.steps(), 120);
        assert_eq!(cfg.snapshots, vec![60.0]);
        assert_eq!(cfg.relation.theta_hat(), Some(0.4935 * 0.4));
        assert_eq!(cfg.coupling, Coupling::Lagged);
        assert!(cfg.stabilization);
    }

    #[test]
    fn reports_all_errors_at_once() {
        let text = EXAMPLE
            .replace("poisson_ratio = 0.3", "poisson_ratio = 0.6")
            .replace("step = 0.5", "step = -1.0")
            .replace("dx = 0.04", "dx = 0.3");
        let Err(Error::Config(errs)) = SolverConfig::from_toml_str(&text) else {
            panic!()
        };
        assert_eq!(errs.len(), 4, "{errs:?}");
        let text = EXAMPLE
            .replace("p_c = 0.4935", "")
            .replace("viscosity = 1.307e-3", "");
        let Err(Error::Config(errs)) = SolverConfig::from_toml_str(&text) else {
            panic!()
        };
        assert_eq!(errs.len(), 2, "{errs:?}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = EXAMPLE.replace("[time]", "[time]\nstepp = 1.0");
        assert!(matches!(
            SolverConfig::from_toml_str(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn reference_is_valid() {
        for p in [ProblemKind::HighPumpPressure, ProblemKind::Squeeze] {
            let cfg = SolverConfig::reference(p, 0.02);
            cfg.validate().unwrap();
            assert_eq!(cfg.steps(), 600);
        }
    }
}
