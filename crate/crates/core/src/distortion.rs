//! Time distortion functions.
//!
//! Each kind is a monotone bijection `f` of `[0, 1]` with `f(0) = 0` and
//! `f(1) = 1`. During training `t' = f(U)` skews where the model is fitted;
//! during sampling `f` warps the evenly spaced step grid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistortionKind {
    Polyinc,
    Cos,
    Identity,
    Revcos,
    Polydec,
}

impl DistortionKind {
    pub const ALL: [DistortionKind; 5] = [
        Self::Polyinc,
        Self::Cos,
        Self::Identity,
        Self::Revcos,
        Self::Polydec,
    ];

    fn eval(self, t: f64) -> f64 {
        match self {
            Self::Polyinc => t * t,
            Self::Cos => (1.0 - (PI * t).cos()) / 2.0,
            Self::Identity => t,
            Self::Revcos => 2.0 * t - (1.0 - (PI * t).cos()) / 2.0,
            Self::Polydec => 2.0 * t - t * t,
        }
    }

    fn derivative(self, t: f64) -> f64 {
        match self {
            Self::Polyinc => 2.0 * t,
            Self::Cos => PI * (PI * t).sin() / 2.0,
            Self::Identity => 1.0,
            Self::Revcos => 2.0 - PI * (PI * t).sin() / 2.0,
            Self::Polydec => 2.0 - 2.0 * t,
        }
    }

    /// `f⁻¹(t')`; closed form except for revcos, which is bisected.
    pub fn inverse(self, t_prime: f64) -> Result<f64> {
        check_unit(t_prime)?;
        Ok(match self {
            Self::Polyinc => t_prime.sqrt(),
            Self::Identity => t_prime,
            Self::Polydec => 1.0 - (1.0 - t_prime).sqrt(),
            Self::Cos => (1.0 - 2.0 * t_prime).clamp(-1.0, 1.0).acos() / PI,
            Self::Revcos => {
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) < t_prime {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        })
    }
}

impl FromStr for DistortionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polyinc" => Ok(Self::Polyinc),
            "cos" => Ok(Self::Cos),
            "identity" => Ok(Self::Identity),
            "revcos" => Ok(Self::Revcos),
            "polydec" => Ok(Self::Polydec),
            other => Err(Error::Config(format!("unknown distortion '{other}'"))),
        }
    }
}

impl fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Polyinc => "polyinc",
            Self::Cos => "cos",
            Self::Identity => "identity",
            Self::Revcos => "revcos",
            Self::Polydec => "polydec",
        };
        f.write_str(s)
    }
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::TimeOutOfRange(t))
    }
}

pub fn distort(kind: DistortionKind, t: f64) -> Result<f64> {
    check_unit(t)?;
    Ok(kind.eval(t).clamp(0.0, 1.0))
}

/// Step start times `t_k = f(k/n)` and sizes `Δt_k = f((k+1)/n) - t_k`.
///
/// The last step ends exactly on 1 and the sizes sum to 1 up to round-off
/// (the final size is taken as `1 - t_{n-1}`).
pub fn step_schedule(kind: DistortionKind, n_steps: usize) -> Result<Vec<(f64, f64)>> {
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be at least 1".into()));
    }
    let n = n_steps as f64;
    let grid: Vec<f64> = (0..=n_steps)
        .map(|k| if k == n_steps { 1.0 } else { kind.eval(k as f64 / n) })
        .collect();
    Ok(grid.windows(2).map(|w| (w[0], w[1] - w[0])).collect())
}

/// Density of `t' = f(U)`, `U ~ U[0, 1]`.
///
/// Returns `f64::INFINITY` at an endpoint where the density diverges.
pub fn distortion_pdf(kind: DistortionKind, t_prime: f64) -> Result<f64> {
    check_unit(t_prime)?;
    let density = match kind {
        DistortionKind::Identity => 1.0,
        DistortionKind::Polyinc => 0.5 / t_prime.sqrt(),
        DistortionKind::Polydec => 0.5 / (1.0 - t_prime).sqrt(),
        DistortionKind::Cos => 1.0 / (PI * (t_prime * (1.0 - t_prime)).sqrt()),
        DistortionKind::Revcos => 1.0 / kind.derivative(kind.inverse(t_prime)?),
    };
    Ok(if density.is_finite() { density } else { f64::INFINITY })
}
