//! Numerical checks of the rate construction and of the sampler's
//! discretization error, runnable from the command line.

use rand::Rng;
use serde::Serialize;

use crate::ctmc::{combined_row, db_row, interp_prob, kolmogorov_residual, DbDesign, RateConfig, ALIVE_THRESHOLD};
use crate::datasets::toy_fixture;
use crate::denoiser::OracleDenoiser;
use crate::error::Result;
use crate::eval::exact_generated_distribution;
use crate::initial::{InitialDistribution, InitialKind};
use crate::rng::seeded;
use crate::sampling::SampleConfig;

/// Step counts of the default TV sweep.
pub const TV_SWEEP_STEPS: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A random conditional path: target `z1`, prior `p0` and time `t`.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub z1: usize,
    pub p0: Vec<f64>,
    pub t: f64,
}

const KINDS: [InitialKind; 4] = [
    InitialKind::Uniform,
    InitialKind::Masking,
    InitialKind::Marginal,
    InitialKind::Absorbing,
];

/// Draw a path over 2 to 6 data states. Marginal priors get exact zeros
/// with probability 0.2 per state so dead states are exercised.
pub fn random_path<R: Rng + ?Sized>(kind: InitialKind, rng: &mut R) -> PathSample {
    let s = rng.gen_range(2..=6);
    let p0 = match kind {
        InitialKind::Uniform => vec![1.0 / s as f64; s],
        InitialKind::Masking => {
            let mut v = vec![0.0; s + 1];
            v[s] = 1.0;
            v
        }
        InitialKind::Absorbing => {
            let mut v = vec![0.0; s];
            v[rng.gen_range(0..s)] = 1.0;
            v
        }
        InitialKind::Marginal => loop {
            let w: Vec<f64> = (0..s)
                .map(|_| if rng.gen::<f64>() < 0.2 { 0.0 } else { rng.gen::<f64>() })
                .collect();
            let total: f64 = w.iter().sum();
            if total > 0.0 {
                break w.iter().map(|x| x / total).collect();
            }
        },
    };
    PathSample {
        z1: rng.gen_range(0..s),
        p0,
        t: rng.gen::<f64>(),
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest Kolmogorov residual of `R*` and of `R* + η·R^DB` (every design)
/// over `n_paths` random paths cycling through the four prior kinds.
pub fn kolmogorov_check(n_paths: usize, seed: u64) -> Check {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for i in 0..n_paths {
        let p = random_path(KINDS[i % KINDS.len()], &mut rng);
        let eta = rng.gen_range(0.0..5.0);
        let plain = RateConfig::default();
        worst = worst.max(max_abs(&kolmogorov_residual(
            |z| combined_row(z, p.z1, &p.p0, p.t, &plain),
            p.z1,
            &p.p0,
            p.t,
        )));
        for design in DbDesign::ALL {
            let cfg = RateConfig {
                eta,
                db_design: design,
                ..RateConfig::default()
            };
            worst = worst.max(max_abs(&kolmogorov_residual(
                |z| combined_row(z, p.z1, &p.p0, p.t, &cfg),
                p.z1,
                &p.p0,
                p.t,
            )));
        }
    }
    Check {
        name: "kolmogorov".into(),
        passed: worst < 1e-9,
        detail: format!("max residual {worst:.3e} over {n_paths} paths"),
    }
}

/// Residual of `R* + R^ω` against `-ω/Z` off the target and `ω(Z-1)/Z`
/// at the target, `Z` being the number of alive states.
pub fn guidance_check(omega: f64, n_paths: usize, seed: u64) -> Check {
    let mut rng = seeded(seed);
    let cfg = RateConfig {
        omega,
        ..RateConfig::default()
    };
    let mut worst: f64 = 0.0;
    for i in 0..n_paths {
        let p = random_path(KINDS[i % KINDS.len()], &mut rng);
        let pt = interp_prob(p.z1, &p.p0, p.t);
        let z_alive = pt.iter().filter(|&&x| x > ALIVE_THRESHOLD).count() as f64;
        let res = kolmogorov_residual(|z| combined_row(z, p.z1, &p.p0, p.t, &cfg), p.z1, &p.p0, p.t);
        for (z, r) in res.iter().enumerate() {
            let expected = if pt[z] <= ALIVE_THRESHOLD {
                0.0
            } else if z == p.z1 {
                omega * (z_alive - 1.0) / z_alive
            } else {
                -omega / z_alive
            };
            worst = worst.max((r - expected).abs());
        }
    }
    Check {
        name: "guidance-violation".into(),
        passed: worst < 1e-9,
        detail: format!("omega {omega}: max deviation from -w/Z, w(Z-1)/Z is {worst:.3e}"),
    }
}

pub fn detailed_balance_check(n_paths: usize, seed: u64) -> Check {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for i in 0..n_paths {
        let p = random_path(KINDS[i % KINDS.len()], &mut rng);
        let pt = interp_prob(p.z1, &p.p0, p.t);
        for design in DbDesign::ALL {
            let rows: Vec<_> = (0..pt.len()).map(|z| db_row(z, p.z1, &p.p0, p.t, design)).collect();
            for a in 0..pt.len() {
                for b in (0..pt.len()).filter(|&b| b != a) {
                    worst = worst.max((pt[a] * rows[a].rate(b) - pt[b] * rows[b].rate(a)).abs());
                }
            }
        }
    }
    Check {
        name: "detailed-balance".into(),
        passed: worst < 1e-12,
        detail: format!("max imbalance {worst:.3e}"),
    }
}

/// TV between the exact sampler law and the toy fixture, oracle denoiser.
pub fn tv_sweep(kind: InitialKind, steps: &[usize], rate: RateConfig) -> Result<Vec<(usize, f64)>> {
    let ds = toy_fixture();
    let p0 = InitialDistribution::from_dataset(kind, &ds)?;
    let oracle = OracleDenoiser::new(ds.clone(), p0.clone());
    steps
        .iter()
        .map(|&n_steps| {
            let cfg = SampleConfig {
                n_steps,
                rate,
                ..SampleConfig::default()
            };
            let tv = exact_generated_distribution(&oracle, &p0, 2, &cfg)?.tv_to_dataset(&ds)?;
            Ok((n_steps, tv))
        })
        .collect()
}

/// TV must fall monotonically over the sweep and end below 0.05.
pub fn tv_check(kind: InitialKind) -> Result<Check> {
    let sweep = tv_sweep(kind, &[16, 64, 256, 1024], RateConfig::default())?;
    let monotone = sweep.windows(2).all(|w| w[1].1 < w[0].1);
    let last = sweep.last().map_or(f64::NAN, |s| s.1);
    Ok(Check {
        name: format!("tv-{kind}"),
        passed: monotone && last < 0.05,
        detail: sweep
            .iter()
            .map(|(n, tv)| format!("TV({n}) {tv:.3e}"))
            .collect::<Vec<_>>()
            .join(", "),
    })
}

/// Every check with its default settings.
pub fn run_all(omega: f64, n_paths: usize, seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        kolmogorov_check(n_paths, seed),
        guidance_check(omega, n_paths, seed.wrapping_add(1)),
        detailed_balance_check(n_paths, seed.wrapping_add(2)),
        tv_check(InitialKind::Uniform)?,
        tv_check(InitialKind::Masking)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let checks = run_all(0.1, 200, 3).unwrap();
        assert_eq!(checks.len(), 5);
        for c in &checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn random_paths_are_valid() {
        let mut rng = seeded(1);
        for kind in KINDS {
            for _ in 0..50 {
                let p = random_path(kind, &mut rng);
                assert!((p.p0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(p.z1 < p.p0.len() && (0.0..1.0).contains(&p.t));
                if kind == InitialKind::Masking {
                    assert_eq!(*p.p0.last().unwrap(), 1.0);
                    assert!(p.z1 < p.p0.len() - 1);
                }
            }
        }
    }

    #[test]
    fn guidance_with_zero_weight_is_exact() {
        let c = guidance_check(0.0, 100, 2);
        assert!(c.passed);
    }

    #[test]
    fn sweep_reports_every_step_count() {
        let s = tv_sweep(InitialKind::Masking, &TV_SWEEP_STEPS, RateConfig::default()).unwrap();
        assert_eq!(s.iter().map(|x| x.0).collect::<Vec<_>>(), TV_SWEEP_STEPS.to_vec());
        // first-order decay: doubling the steps roughly halves the error
        let r = s[5].1 / s[6].1;
        assert!((1.5..2.5).contains(&r), "{r}");
    }
}
