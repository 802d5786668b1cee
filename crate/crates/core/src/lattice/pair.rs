//! Radial two-body potentials `W(x_i − x_j)` with optional finite range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PairKind {
    /// `charge / |r|`.
    Coulomb { charge: f64 },
    /// `amplitude · exp(−|r|² / (2 width²))`.
    Gaussian { amplitude: f64, width: f64 },
}

/// Multiplies the raw profile by a C² bump equal to 1 on `|r| ≤ delta − taper`
/// and exactly 0 on `|r| ≥ delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeCutoff {
    pub delta: f64,
    pub taper: f64,
}

impl RangeCutoff {
    /// Taper of two lattice spacings.
    pub fn for_grid(delta: f64, spacing: f64) -> Result<Self> {
        let c = RangeCutoff { delta, taper: 2.0 * spacing };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.taper > 0.0 && self.taper <= self.delta) {
            return Err(Error::invalid(format!(
                "range cutoff needs 0 < taper ≤ delta, got taper {} and delta {}",
                self.taper, self.delta
            )));
        }
        Ok(())
    }

    /// Bump value and radial derivative at distance `rho`.
    pub fn bump(&self, rho: f64) -> (f64, f64) {
        let a = self.delta - self.taper;
        if rho <= a {
            (1.0, 0.0)
        } else if rho >= self.delta {
            (0.0, 0.0)
        } else {
            let s = (rho - a) / self.taper;
            let step = s * s * s * (s * (6.0 * s - 15.0) + 10.0);
            let dstep = 30.0 * s * s * (s - 1.0) * (s - 1.0);
            (1.0 - step, -dstep / self.taper)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairPotential {
    pub kind: PairKind,
    #[serde(default)]
    pub cutoff: Option<RangeCutoff>,
}

impl PairPotential {
    pub fn coulomb(charge: f64) -> Self {
        PairPotential { kind: PairKind::Coulomb { charge }, cutoff: None }
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        PairPotential { kind: PairKind::Gaussian { amplitude, width }, cutoff: None }
    }

    pub fn with_cutoff(mut self, cutoff: RangeCutoff) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PairKind::Coulomb { charge } if !charge.is_finite() => {
                return Err(Error::invalid("Coulomb charge must be finite"))
            }
            PairKind::Gaussian { amplitude, width } if !(amplitude.is_finite() && width > 0.0) => {
                return Err(Error::invalid("Gaussian pair potential needs finite amplitude and positive width"))
            }
            _ => {}
        }
        if let Some(c) = &self.cutoff {
            c.validate()?;
        }
        Ok(())
    }

    /// True when the profile blows up at coincidence.
    pub fn is_singular(&self) -> bool {
        matches!(self.kind, PairKind::Coulomb { .. })
    }

    /// Distance beyond which `W` vanishes exactly, if any.
    pub fn range(&self) -> Option<f64> {
        self.cutoff.map(|c| c.delta)
    }

    /// Profile `w(ρ)` and `w'(ρ)`.
    pub fn radial(&self, rho: f64) -> (f64, f64) {
        let (w, dw) = match self.kind {
            PairKind::Coulomb { charge } => (charge / rho, -charge / (rho * rho)),
            PairKind::Gaussian { amplitude, width } => {
                let g = amplitude * (-rho * rho / (2.0 * width * width)).exp();
                (g, -rho / (width * width) * g)
            }
        };
        match &self.cutoff {
            None => (w, dw),
            Some(c) => {
                let (b, db) = c.bump(rho);
                if b == 0.0 {
                    (0.0, 0.0)
                } else {
                    (w * b, dw * b + w * db)
                }
            }
        }
    }

    pub fn value(&self, r: &[f64]) -> f64 {
        self.radial(norm(r)).0
    }

    /// `∇W(r)`; zero at `r = 0` for smooth profiles.
    pub fn gradient(&self, r: &[f64]) -> Vec<f64> {
        let rho = norm(r);
        let (_, dw) = self.radial(rho);
        if rho == 0.0 {
            return vec![if self.is_singular() { f64::NAN } else { 0.0 }; r.len()];
        }
        r.iter().map(|x| dw * x / rho).collect()
    }
}

fn norm(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}
