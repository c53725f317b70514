use serde::{Deserialize, Serialize};

use crate::besov::holder_norm;
use crate::error::{Error, Result};
use crate::gibbs::CylinderFunctional;
use crate::spectral::{FourierField, Mode};
use crate::wick::WickContext;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CylinderShape {
    Sin,
    Bump,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ObservableKind {
    /// `|⟨φ, e_k⟩|`.
    ModeMagnitude(Mode),
    /// `∫ :φ²: dξ`.
    Wick2Integral,
    LpNorm(f64),
    BesovNorm(f64),
    /// `g(⟨l, φ⟩)` with `l` the real unit direction of mode `k`.
    Cylinder(Mode, CylinderShape),
}

/// A named scalar functional of a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub name: String,
    pub kind: ObservableKind,
}

fn parse_mode(parts: &[&str], token: &str) -> Result<Mode> {
    match parts {
        [a, b] => {
            let p = |s: &str| {
                s.parse::<i64>()
                    .map_err(|_| Error::Config(format!("bad mode in observable '{token}'")))
            };
            Ok([p(a)?, p(b)?])
        }
        _ => Err(Error::Config(format!("observable '{token}' needs two mode indices"))),
    }
}

impl ObservableSpec {
    /// Parses `wick2`, `l2`, `lp:P`, `mode:K1:K2`, `besov:ALPHA`,
    /// `cyl_sin:K1:K2` or `cyl_bump:K1:K2`.
    pub fn parse(token: &str) -> Result<Self> {
        let parts: Vec<&str> = token.split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number in observable '{token}'")))
        };
        let (name, kind) = match parts[0] {
            "wick2" if parts.len() == 1 => ("wick2_integral".to_string(), ObservableKind::Wick2Integral),
            "l2" if parts.len() == 1 => ("l2_norm".to_string(), ObservableKind::LpNorm(2.0)),
            "lp" if parts.len() == 2 => {
                let p = num(parts[1])?;
                if !(p >= 1.0) {
                    return Err(Error::Config(format!("observable '{token}' needs p >= 1")));
                }
                (format!("l{}_norm", parts[1]), ObservableKind::LpNorm(p))
            }
            "besov" if parts.len() == 2 => (format!("holder_{}", parts[1]), ObservableKind::BesovNorm(num(parts[1])?)),
            "mode" => {
                let k = parse_mode(&parts[1..], token)?;
                (format!("mode_{}_{}", k[0], k[1]), ObservableKind::ModeMagnitude(k))
            }
            "cyl_sin" | "cyl_bump" => {
                let k = parse_mode(&parts[1..], token)?;
                let shape = if parts[0] == "cyl_sin" { CylinderShape::Sin } else { CylinderShape::Bump };
                (format!("{}_{}_{}", parts[0], k[0], k[1]), ObservableKind::Cylinder(k, shape))
            }
            _ => return Err(Error::Config(format!("unknown observable '{token}'"))),
        };
        Ok(Self { name, kind })
    }

    pub fn evaluate(&self, phi: &FourierField, ctx: &WickContext) -> Result<f64> {
        let in_grid = |k: Mode| {
            if phi.grid().contains(k) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("observable {} refers to a mode outside the grid", self.name)))
            }
        };
        match self.kind {
            ObservableKind::ModeMagnitude(k) => {
                in_grid(k)?;
                Ok(phi.coeff(k).norm())
            }
            ObservableKind::Wick2Integral => {
                let c = ctx.c_n;
                Ok(phi.to_physical().map(|x| x * x - c).integral())
            }
            ObservableKind::LpNorm(p) => Ok(phi.to_physical().lp_norm(p)),
            ObservableKind::BesovNorm(alpha) => Ok(holder_norm(phi, alpha)),
            ObservableKind::Cylinder(k, shape) => {
                in_grid(k)?;
                let l = FourierField::basis_direction(phi.grid(), k)?;
                let u = match shape {
                    CylinderShape::Sin => CylinderFunctional::Sin(l),
                    CylinderShape::Bump => CylinderFunctional::Bump(l, FourierField::zeros(phi.grid())),
                };
                u.value(phi)
            }
        }
    }
}

/// Evaluates every observable on `phi`, in list order.
pub fn evaluate_all(specs: &[ObservableSpec], phi: &FourierField, ctx: &WickContext) -> Result<Vec<f64>> {
    specs.iter().map(|s| s.evaluate(phi, ctx)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    #[test]
    fn parse_forms() {
        assert_eq!(ObservableSpec::parse("wick2").unwrap().name, "wick2_integral");
        assert_eq!(ObservableSpec::parse("mode:1:-2").unwrap().kind, ObservableKind::ModeMagnitude([1, -2]));
        assert_eq!(ObservableSpec::parse("lp:4").unwrap().kind, ObservableKind::LpNorm(4.0));
        assert!(ObservableSpec::parse("mode:1").is_err());
        assert!(ObservableSpec::parse("lp:0.5").is_err());
        assert!(ObservableSpec::parse("wick3").is_err());
        assert!(ObservableSpec::parse("cyl_bump:0:0").is_ok());
    }

    #[test]
    fn constant_field_values() {
        let grid = GridSpec::dealiased(3);
        let ctx = WickContext::new(grid);
        let f = FourierField::constant(grid, 0.5);
        let w = ObservableSpec::parse("wick2").unwrap().evaluate(&f, &ctx).unwrap();
        assert!((w - (0.25 - ctx.c_n) * 4.0 * PI * PI).abs() < 1e-12);
        let m = ObservableSpec::parse("mode:0:0").unwrap().evaluate(&f, &ctx).unwrap();
        assert!((m - PI).abs() < 1e-12);
        let l2 = ObservableSpec::parse("l2").unwrap().evaluate(&f, &ctx).unwrap();
        assert!((l2 - PI).abs() < 1e-12);
        assert!(ObservableSpec::parse("mode:9:0").unwrap().evaluate(&f, &ctx).is_err());
        let s = ObservableSpec::parse("cyl_sin:0:0").unwrap().evaluate(&f, &ctx).unwrap();
        assert!((s - PI.sin()).abs() < 1e-12);
    }
}
