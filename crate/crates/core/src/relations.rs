//! Porosity and permeability closures.

use crate::error::{Error, Result};
use std::io::Write;

/// `θ = 1 − (1 − θ₀)·exp(−div u)`. Values `θ ≤ 0` are returned as is; callers
/// treat them as degenerate.
pub fn porosity_from_dilatation(div_u: f64, theta0: f64) -> f64 {
    1.0 - (1.0 - theta0) * (-div_u).exp()
}

/// Inverse of [`porosity_from_dilatation`].
pub fn dilatation_from_porosity(theta: f64, theta0: f64) -> f64 {
    ((1.0 - theta0) / (1.0 - theta)).ln()
}

/// `κ = d_s²/180 · θ³/(1−θ)²` (m²). Negative θ is clamped to 0.
pub fn kozeny_carman(theta: f64, d_s: f64) -> Result<f64> {
    if !(theta < 1.0) {
        return Err(Error::Domain(format!(
            "Kozeny-Carman needs θ < 1, got {theta}"
        )));
    }
    let t = theta.max(0.0);
    Ok(d_s * d_s / 180.0 * t.powi(3) / (1.0 - t).powi(2))
}

/// Zero below the threshold porosity `θ̂`, linear up to `κ₀` at `θ₀`.
pub fn network_inspired(theta: f64, theta0: f64, theta_hat: f64, kappa0: f64) -> Result<f64> {
    if !(0.0 <= theta_hat && theta_hat < theta0) {
        return Err(Error::param(format!(
            "need 0 ≤ θ̂ < θ₀, got θ̂ = {theta_hat}, θ₀ = {theta0}"
        )));
    }
    Ok(if theta < theta_hat {
        0.0
    } else {
        kappa0 * ((theta - theta_hat) / (theta0 - theta_hat))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PermeabilityRelation {
    KozenyCarman {
        d_s: f64,
    },
    /// κ₀ is the Kozeny-Carman value at θ₀; see [`PermeabilityRelation::network_inspired`].
    NetworkInspired {
        p_c: f64,
        theta0: f64,
        kappa0: f64,
    },
    /// Porosity-independent κ; used for verification runs.
    Constant {
        kappa: f64,
    },
}

/// κ together with whether the porosity was degenerate (θ ≤ 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Permeability {
    pub kappa: f64,
    pub degenerate: bool,
}

impl PermeabilityRelation {
    pub fn kozeny_carman(d_s: f64) -> Result<Self> {
        if !(d_s > 0.0) {
            return Err(Error::param(format!(
                "grain size d_s = {d_s} must be positive"
            )));
        }
        Ok(Self::KozenyCarman { d_s })
    }

    /// Network-inspired relation with `κ₀ = KC(θ₀, d_s)`.
    pub fn network_inspired(p_c: f64, theta0: f64, d_s: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p_c) {
            return Err(Error::param(format!("p_c = {p_c} must lie in [0, 1)")));
        }
        if !(theta0 > 0.0 && theta0 < 1.0) {
            return Err(Error::param(format!("θ₀ = {theta0} must lie in (0, 1)")));
        }
        Self::kozeny_carman(d_s)?;
        Ok(Self::NetworkInspired {
            p_c,
            theta0,
            kappa0: kozeny_carman(theta0, d_s)?,
        })
    }

    pub fn constant(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::param(format!(
                "constant κ = {kappa} must be finite and ≥ 0"
            )));
        }
        Ok(Self::Constant { kappa })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::KozenyCarman { .. } => "kozeny-carman",
            Self::NetworkInspired { .. } => "network-inspired",
            Self::Constant { .. } => "constant",
        }
    }

    /// `θ̂ = p_c·θ₀` for the network-inspired relation.
    pub fn theta_hat(&self) -> Option<f64> {
        match *self {
            Self::NetworkInspired { p_c, theta0, .. } => Some(p_c * theta0),
            _ => None,
        }
    }

    /// Evaluates κ(θ). θ ≤ 0 gives κ = 0 with the degenerate flag set.
    pub fn evaluate(&self, theta: f64) -> Result<Permeability> {
        if theta <= 0.0 {
            return Ok(Permeability {
                kappa: 0.0,
                degenerate: true,
            });
        }
        let kappa = match *self {
            Self::KozenyCarman { d_s } => kozeny_carman(theta, d_s)?,
            Self::NetworkInspired {
                p_c,
                theta0,
                kappa0,
            } => network_inspired(theta, theta0, p_c * theta0, kappa0)?,
            Self::Constant { kappa } => kappa,
        };
        Ok(Permeability {
            kappa,
            degenerate: false,
        })
    }

    pub fn kappa(&self, theta: f64) -> Result<f64> {
        Ok(self.evaluate(theta)?.kappa)
    }

    /// Normalized curve `(θ/θ₀, κ/κ(θ₀))` at the given θ/θ₀ values.
    pub fn export_curve(&self, theta0: f64, theta_norm: &[f64]) -> Result<Vec<(f64, f64)>> {
        if theta_norm.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::param("normalized porosities must lie in (0, 1]"));
        }
        let k0 = self.kappa(theta0)?;
        if !(k0 > 0.0) {
            return Err(Error::param("relation gives κ(θ₀) = 0; cannot normalize"));
        }
        theta_norm
            .iter()
            .map(|&t| Ok((t, self.kappa(t * theta0)? / k0)))
            .collect()
    }
}

/// `theta_norm,kappa_norm` rows after `#` comment lines.
pub fn write_curve<W: Write>(mut out: W, header: &[String], curve: &[(f64, f64)]) -> Result<()> {
    crate::percolation::write_comments(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta_norm", "kappa_norm"])?;
    for (t, k) in curve {
        w.serialize((t, k))?;
    }
    w.flush()?;
    Ok(())
}
