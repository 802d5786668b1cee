mod delta;
mod holonomy;
mod lattice;
mod potential;

use crate::config::{parse_params, Scenario};
use crate::error::Result;
use crate::Ctx;

macro_rules! plans {
    ($($variant:ident => $module:ident :: $params:ident),* $(,)?) => {
        /// A scenario with its parameters parsed and defaults filled in.
        pub(crate) enum Plan {
            $($variant($module::$params),)*
        }

        impl Plan {
            pub fn parse(scenario: Scenario, table: &toml::Table) -> Result<Self> {
                Ok(match scenario {
                    $(Scenario::$variant => {
                        let p: $module::$params = parse_params(table)?;
                        p.validate()?;
                        Plan::$variant(p)
                    })*
                })
            }

            pub fn effective(&self) -> serde_json::Value {
                match self {
                    $(Plan::$variant(p) => serde_json::to_value(p).unwrap_or(serde_json::Value::Null),)*
                }
            }

            pub fn execute(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
                match self {
                    $(Plan::$variant(p) => p.run(ctx),)*
                }
            }
        }
    };
}

plans! {
    ConsistencyCheck => holonomy::ConsistencyCheck,
    HolonomyScan => holonomy::HolonomyScan,
    Stokes => holonomy::Stokes,
    PotentialAnalyze => potential::PotentialAnalyze,
    GaugeDecompose => potential::GaugeDecompose,
    CoulombCommutator => lattice::CoulombCommutator,
    OrderGap => lattice::OrderGap,
    Lightcone => lattice::Lightcone,
    DeltaEvolve => delta::DeltaEvolve,
    OverlapTest => delta::OverlapTest,
}

/// Least-squares slope of `ln y` against `ln x`.
pub(crate) fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(crate::error::CliError::config(format!("parameters.{name} must be positive, got {x}")))
    }
}
