//! Conditional rate matrices and the per-dimension Euler kernel.
//!
//! All routines act on a single categorical dimension with `Z` states and a
//! prior simplex `p0` over those states. The noising path is
//! `p_{t|1}(z | z1) = t·δ(z, z1) + (1 - t)·p0(z)`.
//!
//! A state `z` is *alive* at time `t` when `p_{t|1}(z | z1) > 1e-15`. Rows
//! out of dead states vanish for `R*` and the guidance term, and `R*` never
//! sends mass into a dead state.

use crate::denoiser::ProbGraph;
use crate::error::{Error, Result};
use crate::graph::CategoricalGraph;
use crate::initial::{argmax, InitialDistribution};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const ALIVE_THRESHOLD: f64 = 1e-15;

/// Sparsity pattern of the detailed-balance term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbDesign {
    /// Every off-diagonal entry.
    General,
    /// Row and column of the state with the largest prior mass.
    ColumnMaxMarginal,
    /// Row and column of the target state `z1`.
    ColumnX1,
    /// Row and column of the most probable state under `p_{t|1}`.
    ColumnArgmaxPt,
    /// Only the pair {largest-prior state, `z1`}.
    EntryMaxMarginal,
}

impl DbDesign {
    pub const ALL: [DbDesign; 5] = [
        Self::General,
        Self::ColumnMaxMarginal,
        Self::ColumnX1,
        Self::ColumnArgmaxPt,
        Self::EntryMaxMarginal,
    ];
}

impl FromStr for DbDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Self::General),
            "column_max_marginal" => Ok(Self::ColumnMaxMarginal),
            "column_x1" => Ok(Self::ColumnX1),
            "column_argmax_pt" => Ok(Self::ColumnArgmaxPt),
            "entry_max_marginal" => Ok(Self::EntryMaxMarginal),
            other => Err(Error::Config(format!("unknown db_design '{other}'"))),
        }
    }
}

impl fmt::Display for DbDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::General => "general",
            Self::ColumnMaxMarginal => "column_max_marginal",
            Self::ColumnX1 => "column_x1",
            Self::ColumnArgmaxPt => "column_argmax_pt",
            Self::EntryMaxMarginal => "entry_max_marginal",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    /// Target guidance weight.
    pub omega: f64,
    /// Weight of the detailed-balance term.
    pub eta: f64,
    pub db_design: DbDesign,
    /// Average the rate over the whole posterior instead of one drawn target.
    pub exact_expectation: bool,
    /// Largest tolerated negative self-transition probability before the
    /// step is rejected; use `f64::INFINITY` to always clamp.
    pub max_overshoot: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            omega: 0.0,
            eta: 0.0,
            db_design: DbDesign::General,
            exact_expectation: false,
            max_overshoot: 0.1,
        }
    }
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("omega", self.omega), ("eta", self.eta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.max_overshoot >= 0.0) {
            return Err(Error::Config("max_overshoot must be >= 0".into()));
        }
        Ok(())
    }
}

/// One row of a rate matrix: off-diagonal entries are non-negative and the
/// diagonal makes the row sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    from: usize,
    rates: Vec<f64>,
}

impl RateRow {
    /// Build from off-diagonal rates; the entry at `from` is overwritten.
    pub fn from_off_diagonal(from: usize, mut rates: Vec<f64>) -> Self {
        rates[from] = 0.0;
        let out: f64 = rates.iter().sum();
        rates[from] = -out;
        Self { from, rates }
    }

    pub fn zero(from: usize, n_states: usize) -> Self {
        Self {
            from,
            rates: vec![0.0; n_states],
        }
    }

    pub fn from_state(&self) -> usize {
        self.from
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, to: usize) -> f64 {
        self.rates[to]
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Total outflow `-R(z, z)`.
    pub fn exit_rate(&self) -> f64 {
        -self.rates[self.from]
    }

    pub fn scaled(&self, c: f64) -> Self {
        let off = self
            .rates
            .iter()
            .enumerate()
            .map(|(j, &r)| if j == self.from { 0.0 } else { c * r })
            .collect();
        Self::from_off_diagonal(self.from, off)
    }

    /// Sum of rows from the same state; the diagonal is rebalanced.
    pub fn plus(&self, other: &Self) -> Self {
        debug_assert_eq!(self.from, other.from);
        let off = self
            .rates
            .iter()
            .zip(&other.rates)
            .enumerate()
            .map(|(j, (a, b))| if j == self.from { 0.0 } else { a + b })
            .collect();
        Self::from_off_diagonal(self.from, off)
    }
}

pub fn interp_prob(z1: usize, p0: &[f64], t: f64) -> Vec<f64> {
    p0.iter()
        .enumerate()
        .map(|(z, &p)| if z == z1 { t + (1.0 - t) * p } else { (1.0 - t) * p })
        .collect()
}

/// `∂_t p_{t|1}(z | z1) = δ(z, z1) - p0(z)`.
pub fn interp_deriv(z1: usize, p0: &[f64]) -> Vec<f64> {
    p0.iter()
        .enumerate()
        .map(|(z, &p)| if z == z1 { 1.0 - p } else { -p })
        .collect()
}

/// Number of states with `p_{t|1} > 0`.
pub fn alive_count(pt: &[f64]) -> usize {
    pt.iter().filter(|&&p| p > ALIVE_THRESHOLD).count()
}

fn is_alive(p: f64) -> bool {
    p > ALIVE_THRESHOLD
}

/// The minimal-jump conditional rate:
/// `R*(z_t, j) = ReLU(∂p(j) - ∂p(z_t)) / (Z⁺ · p_{t|1}(z_t))` for alive `j ≠ z_t`.
pub fn rstar_row(z_t: usize, z1: usize, p0: &[f64], t: f64) -> RateRow {
    let pt = interp_prob(z1, p0, t);
    if !is_alive(pt[z_t]) {
        return RateRow::zero(z_t, p0.len());
    }
    let d = interp_deriv(z1, p0);
    let norm = alive_count(&pt) as f64 * pt[z_t];
    let off = (0..p0.len())
        .map(|j| {
            if j == z_t || !is_alive(pt[j]) {
                0.0
            } else {
                (d[j] - d[z_t]).max(0.0) / norm
            }
        })
        .collect();
    RateRow::from_off_diagonal(z_t, off)
}

/// Target guidance: `ω·δ(j, z1) / (Z⁺ · p_{t|1}(z_t))`.
pub fn guidance_row(z_t: usize, z1: usize, p0: &[f64], t: f64, omega: f64) -> RateRow {
    let pt = interp_prob(z1, p0, t);
    let mut off = vec![0.0; p0.len()];
    if z_t != z1 && is_alive(pt[z_t]) {
        off[z1] = omega / (alive_count(&pt) as f64 * pt[z_t]);
    }
    RateRow::from_off_diagonal(z_t, off)
}

/// Entry `(a, b)`, `a ≠ b`, of the detailed-balance matrix.
///
/// Retained entries are `R(a, b) = p_{t|1}(b | z1)`, so
/// `p(a)·R(a, b) = p(a)·p(b) = p(b)·R(b, a)` for every retained pair. Each
/// pattern is symmetric, which keeps the identity true for dropped entries.
pub fn db_entry(a: usize, b: usize, z1: usize, p0: &[f64], pt: &[f64], design: DbDesign) -> f64 {
    if a == b {
        return 0.0;
    }
    let keep = match design {
        DbDesign::General => true,
        DbDesign::ColumnMaxMarginal => {
            let c = argmax(p0);
            a == c || b == c
        }
        DbDesign::ColumnX1 => a == z1 || b == z1,
        DbDesign::ColumnArgmaxPt => {
            let c = argmax(pt);
            a == c || b == c
        }
        DbDesign::EntryMaxMarginal => {
            let m = argmax(p0);
            m != z1 && ((a == m && b == z1) || (a == z1 && b == m))
        }
    };
    if keep {
        pt[b]
    } else {
        0.0
    }
}

pub fn db_row(z_t: usize, z1: usize, p0: &[f64], t: f64, design: DbDesign) -> RateRow {
    let pt = interp_prob(z1, p0, t);
    let off = (0..p0.len())
        .map(|j| db_entry(z_t, j, z1, p0, &pt, design))
        .collect();
    RateRow::from_off_diagonal(z_t, off)
}

/// `R* + η·R^DB + R^ω`.
pub fn combined_row(z_t: usize, z1: usize, p0: &[f64], t: f64, cfg: &RateConfig) -> RateRow {
    let mut row = rstar_row(z_t, z1, p0, t);
    if cfg.eta != 0.0 {
        row = row.plus(&db_row(z_t, z1, p0, t, cfg.db_design).scaled(cfg.eta));
    }
    if cfg.omega != 0.0 {
        row = row.plus(&guidance_row(z_t, z1, p0, t, cfg.omega));
    }
    row
}

/// Residual of the `z1`-conditioned Kolmogorov equation for every state:
/// inflow minus outflow minus `∂_t p_{t|1}`.
pub fn kolmogorov_residual<F>(rate_fn: F, z1: usize, p0: &[f64], t: f64) -> Vec<f64>
where
    F: Fn(usize) -> RateRow,
{
    let n = p0.len();
    let pt = interp_prob(z1, p0, t);
    let d = interp_deriv(z1, p0);
    let rows: Vec<RateRow> = (0..n).map(&rate_fn).collect();
    (0..n)
        .map(|z| {
            let inflow: f64 = (0..n)
                .filter(|&y| y != z)
                .map(|y| rows[y].rate(z) * pt[y])
                .sum();
            let outflow: f64 = (0..n)
                .filter(|&y| y != z)
                .map(|y| rows[z].rate(y) * pt[z])
                .sum();
            inflow - outflow - d[z]
        })
        .collect()
}

/// Draw `z_t ~ p_{t|1}(· | z1)`: keep `z1` with probability `t`, otherwise
/// redraw from the prior.
pub fn noise_state<R: Rng + ?Sized>(z1: usize, p0: &[f64], t: f64, rng: &mut R) -> usize {
    let keep = rng.gen::<f64>() < t;
    let fresh = crate::rng::categorical(rng, p0);
    if keep {
        z1
    } else {
        fresh
    }
}

/// Noise every dimension of a clean graph independently. The result lives
/// in the chain's state space (widened under masking).
pub fn noise_graph<R: Rng + ?Sized>(
    g1: &CategoricalGraph,
    p0: &InitialDistribution,
    t: f64,
    rng: &mut R,
) -> Result<CategoricalGraph> {
    let nodes = g1
        .node_states()
        .iter()
        .map(|&z| noise_state(z, p0.node_p0(), t, rng))
        .collect();
    let edges = g1
        .edge_states()
        .iter()
        .map(|&z| noise_state(z, p0.edge_p0(), t, rng))
        .collect();
    CategoricalGraph::new(nodes, edges, p0.x_states(), p0.e_states())
}

/// `δ(z_t, ·) + row·Δt`, with the overshoot check, clamping and renormalisation.
fn euler_vector(row: &RateRow, dt: f64, t: f64, cfg: &RateConfig) -> Result<Vec<f64>> {
    let z_t = row.from_state();
    let mut v: Vec<f64> = row.rates().iter().map(|r| r * dt).collect();
    v[z_t] += 1.0;
    if v[z_t] < -cfg.max_overshoot {
        return Err(Error::StepTooLarge { prob: v[z_t], t, dt });
    }
    for p in v.iter_mut() {
        *p = p.max(0.0);
    }
    let s: f64 = v.iter().sum();
    for p in v.iter_mut() {
        *p /= s;
    }
    Ok(v)
}

/// Posterior-averaged rate row out of `z_t`.
pub fn expected_row(
    z_t: usize,
    posterior: &[f64],
    p0: &[f64],
    t: f64,
    cfg: &RateConfig,
) -> RateRow {
    let mut off = vec![0.0; p0.len()];
    for (z1, &w) in posterior.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = combined_row(z_t, z1, p0, t, cfg);
        for (j, o) in off.iter_mut().enumerate() {
            if j != z_t {
                *o += w * row.rate(j);
            }
        }
    }
    RateRow::from_off_diagonal(z_t, off)
}

fn pad(posterior: &[f64], n_states: usize) -> Vec<f64> {
    let mut v = posterior.to_vec();
    v.resize(n_states, 0.0);
    v
}

fn is_final_step(t: f64, dt: f64) -> bool {
    t + dt >= 1.0 - 1e-12
}

/// Exact per-dimension transition vector of one Euler step with the rate
/// averaged over the posterior. On the final step (`t + Δt = 1`) the vector
/// is the posterior itself.
pub fn transition_probs(
    z_t: usize,
    posterior: &[f64],
    p0: &[f64],
    t: f64,
    dt: f64,
    cfg: &RateConfig,
) -> Result<Vec<f64>> {
    if is_final_step(t, dt) {
        return Ok(pad(posterior, p0.len()));
    }
    euler_vector(&expected_row(z_t, posterior, p0, t, cfg), dt, t, cfg)
}

/// Transition vector for one drawn target `z1`.
pub fn transition_probs_given_target(
    z_t: usize,
    z1: usize,
    p0: &[f64],
    t: f64,
    dt: f64,
    cfg: &RateConfig,
) -> Result<Vec<f64>> {
    euler_vector(&combined_row(z_t, z1, p0, t, cfg), dt, t, cfg)
}

fn step_dimension<R: Rng + ?Sized>(
    z_t: usize,
    posterior: &[f64],
    p0: &[f64],
    t: f64,
    dt: f64,
    cfg: &RateConfig,
    rng: &mut R,
) -> Result<usize> {
    if dt == 0.0 {
        return Ok(z_t);
    }
    let probs = if is_final_step(t, dt) || cfg.exact_expectation {
        transition_probs(z_t, posterior, p0, t, dt, cfg)?
    } else {
        let z1 = crate::rng::categorical(rng, posterior);
        transition_probs_given_target(z_t, z1, p0, t, dt, cfg)?
    };
    Ok(crate::rng::categorical(rng, &probs))
}

/// One independent-dimension Euler step `G_t → G_{t+Δt}`.
///
/// When the step ends at 1 the returned graph is drawn from the posterior
/// and carries the data cardinalities (no mask states remain).
pub fn euler_step<R: Rng + ?Sized>(
    g_t: &CategoricalGraph,
    posterior: &ProbGraph,
    p0: &InitialDistribution,
    t: f64,
    dt: f64,
    cfg: &RateConfig,
    rng: &mut R,
) -> Result<CategoricalGraph> {
    if !(0.0..=1.0).contains(&t) || dt < 0.0 || t + dt > 1.0 + 1e-12 {
        return Err(Error::TimeOutOfRange(t + dt));
    }
    if posterior.n_nodes() != g_t.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "posterior has {} nodes, graph has {}",
            posterior.n_nodes(),
            g_t.n_nodes()
        )));
    }
    if g_t.x_card() != p0.x_states() || g_t.e_card() != p0.e_states() {
        return Err(Error::DimensionMismatch(
            "graph cardinalities differ from the prior's state space".into(),
        ));
    }
    let nodes = g_t
        .node_states()
        .iter()
        .zip(posterior.node_probs())
        .map(|(&z, post)| step_dimension(z, post, p0.node_p0(), t, dt, cfg, rng))
        .collect::<Result<Vec<_>>>()?;
    let edges = g_t
        .edge_states()
        .iter()
        .zip(posterior.edge_probs())
        .map(|(&z, post)| step_dimension(z, post, p0.edge_p0(), t, dt, cfg, rng))
        .collect::<Result<Vec<_>>>()?;
    if is_final_step(t, dt) && dt > 0.0 {
        CategoricalGraph::new(nodes, edges, p0.x_card(), p0.e_card())
    } else {
        CategoricalGraph::new(nodes, edges, g_t.x_card(), g_t.e_card())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::InitialKind;
    use crate::rng::seeded;
    use proptest::prelude::*;

    const UNIFORM2: [f64; 2] = [0.5, 0.5];

    fn off_diag(row: &RateRow) -> Vec<f64> {
        row.rates()
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != row.from_state())
            .map(|(_, &r)| r)
            .collect()
    }

    #[test]
    fn interpolation_examples() {
        assert_eq!(interp_prob(1, &[0.2, 0.3, 0.5], 0.0), vec![0.2, 0.3, 0.5]);
        assert_eq!(interp_prob(1, &[0.2, 0.3, 0.5], 1.0), vec![0.0, 1.0, 0.0]);
        assert_eq!(interp_prob(0, &UNIFORM2, 0.5), vec![0.75, 0.25]);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(interp_deriv(0, &UNIFORM2), vec![0.5, -0.5]);
        assert_eq!(interp_deriv(2, &[0.0, 0.0, 1.0]), vec![0.0, 0.0, 0.0]);
        let p0 = [0.1, 0.6, 0.3];
        let h = 1e-5;
        let fd: Vec<f64> = interp_prob(1, &p0, 0.5 + h)
            .iter()
            .zip(interp_prob(1, &p0, 0.5 - h))
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        for (a, b) in fd.iter().zip(interp_deriv(1, &p0)) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rstar_examples() {
        let row = rstar_row(1, 1, &[0.2, 0.3, 0.5], 0.4);
        assert!(off_diag(&row).iter().all(|&r| r == 0.0));
        let row = rstar_row(1, 0, &UNIFORM2, 0.5);
        assert!((row.rate(0) - 2.0).abs() < 1e-15);
        assert!((row.rate(1) + 2.0).abs() < 1e-15);
        // absorbing prior at 0, target 1: state 2 is dead
        let row = rstar_row(2, 1, &[1.0, 0.0, 0.0], 0.3);
        assert!(row.rates().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rstar_never_targets_dead_states() {
        // masking: from the mask state only z1 is reachable
        let p0 = [0.0, 0.0, 0.0, 1.0];
        let row = rstar_row(3, 1, &p0, 0.25);
        assert_eq!(row.rate(0), 0.0);
        assert_eq!(row.rate(2), 0.0);
        assert!((row.rate(1) - 1.0 / 0.75).abs() < 1e-12);
    }

    #[test]
    fn guidance_examples() {
        assert!(guidance_row(1, 0, &UNIFORM2, 0.5, 0.0).rates().iter().all(|&r| r == 0.0));
        let row = guidance_row(1, 0, &UNIFORM2, 0.5, 0.1);
        assert!((row.rate(0) - 0.2).abs() < 1e-15);
        let row = guidance_row(2, 0, &[0.3, 0.3, 0.4], 0.5, 0.7);
        assert_eq!(row.rate(1), 0.0);
        assert!(guidance_row(0, 0, &UNIFORM2, 0.5, 0.3).rates().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn db_examples() {
        let t = 0.5;
        let pt = interp_prob(0, &UNIFORM2, t);
        let r01 = db_row(0, 0, &UNIFORM2, t, DbDesign::General).rate(1);
        let r10 = db_row(1, 0, &UNIFORM2, t, DbDesign::General).rate(0);
        assert_eq!(r01, pt[1]);
        assert_eq!(r10, pt[0]);
        assert_eq!(pt[0] * r01, pt[1] * r10);
        let base = db_row(2, 0, &[0.2, 0.5, 0.3], t, DbDesign::General);
        let scaled = base.scaled(3.0);
        for j in 0..3 {
            assert!((scaled.rate(j) - 3.0 * base.rate(j)).abs() < 1e-15);
        }
        // max-marginal state is 1, pair {1, z1 = 0}; state 2 lies outside it
        let row = db_row(2, 0, &[0.2, 0.5, 0.3], t, DbDesign::EntryMaxMarginal);
        assert!(row.rates().iter().all(|&r| r == 0.0));
        let row = db_row(1, 0, &[0.2, 0.5, 0.3], t, DbDesign::EntryMaxMarginal);
        assert!(row.rate(0) > 0.0 && row.rate(2) == 0.0);
    }

    #[test]
    fn combined_examples() {
        let neutral = RateConfig::default();
        let p0 = [0.2, 0.5, 0.3];
        assert_eq!(combined_row(2, 0, &p0, 0.3, &neutral), rstar_row(2, 0, &p0, 0.3));

        let with = RateConfig { omega: 0.4, eta: 1.5, ..neutral };
        let without = RateConfig { omega: 0.0, ..with };
        let diff: Vec<f64> = combined_row(2, 0, &p0, 0.3, &with)
            .rates()
            .iter()
            .zip(combined_row(2, 0, &p0, 0.3, &without).rates())
            .map(|(a, b)| a - b)
            .collect();
        for (a, b) in diff.iter().zip(guidance_row(2, 0, &p0, 0.3, 0.4).rates()) {
            assert!((a - b).abs() < 1e-12);
        }

        // Z = 2, uniform, z_t = 1, z1 = 0, t = 0.5, ω = 0.1, η = 1:
        // R* = 2.0, R^DB = p_t(0) = 0.75, R^ω = 0.2
        let cfg = RateConfig { omega: 0.1, eta: 1.0, ..neutral };
        let row = combined_row(1, 0, &UNIFORM2, 0.5, &cfg);
        assert!((row.rate(0) - 2.95).abs() < 1e-12);
        assert!((row.rate(1) + 2.95).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_examples() {
        let p0 = [0.1, 0.4, 0.2, 0.3];
        let (z1, t) = (2, 0.37);
        let res = kolmogorov_residual(|z| rstar_row(z, z1, &p0, t), z1, &p0, t);
        assert!(res.iter().all(|r| r.abs() < 1e-12), "{res:?}");
        let res = kolmogorov_residual(
            |z| rstar_row(z, z1, &p0, t).plus(&db_row(z, z1, &p0, t, DbDesign::General).scaled(2.0)),
            z1,
            &p0,
            t,
        );
        assert!(res.iter().all(|r| r.abs() < 1e-12), "{res:?}");
        let omega = 0.3;
        let res = kolmogorov_residual(
            |z| rstar_row(z, z1, &p0, t).plus(&guidance_row(z, z1, &p0, t, omega)),
            z1,
            &p0,
            t,
        );
        for (z, r) in res.iter().enumerate() {
            let expected = if z == z1 { omega * 3.0 / 4.0 } else { -omega / 4.0 };
            assert!((r - expected).abs() < 1e-12, "{z}: {r} vs {expected}");
        }
    }

    fn single_node(state: usize) -> CategoricalGraph {
        CategoricalGraph::new(vec![state], vec![], 2, 2).unwrap()
    }

    fn uniform_prior() -> InitialDistribution {
        InitialDistribution::build(InitialKind::Uniform, None, 2, 2).unwrap()
    }

    #[test]
    fn zero_step_keeps_graph() {
        let g = single_node(1);
        let post = ProbGraph::new(vec![vec![0.5, 0.5]], vec![]).unwrap();
        for seed in 0..20 {
            let next = euler_step(&g, &post, &uniform_prior(), 0.3, 0.0, &RateConfig::default(), &mut seeded(seed))
                .unwrap();
            assert_eq!(next, g);
        }
    }

    #[test]
    fn posterior_at_current_state_keeps_graph() {
        let g = CategoricalGraph::new(vec![1, 0], vec![1], 2, 2).unwrap();
        let post = ProbGraph::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![0.0, 1.0]]).unwrap();
        for exact in [false, true] {
            let cfg = RateConfig { exact_expectation: exact, ..Default::default() };
            for seed in 0..50 {
                let next = euler_step(&g, &post, &uniform_prior(), 0.4, 0.2, &cfg, &mut seeded(seed)).unwrap();
                assert_eq!(next, g);
            }
        }
    }

    #[test]
    fn single_node_transition_probability() {
        let probs =
            transition_probs(1, &[1.0, 0.0], &UNIFORM2, 0.5, 0.1, &RateConfig::default()).unwrap();
        assert!((probs[0] - 0.2).abs() < 1e-12);
        assert!((probs[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn overshoot_is_rejected_or_clamped() {
        // leaving a rare state: R(1 -> 2) = 0.99 / (3 * 0.005) = 66, so Δt = 0.4 overshoots
        let p0 = [0.98, 0.01, 0.01];
        let err = transition_probs(1, &[0.0, 0.0, 1.0], &p0, 0.5, 0.4, &RateConfig::default());
        assert!(matches!(err, Err(Error::StepTooLarge { .. })));
        let cfg = RateConfig { max_overshoot: f64::INFINITY, ..Default::default() };
        let probs = transition_probs(1, &[0.0, 0.0, 1.0], &p0, 0.5, 0.4, &cfg).unwrap();
        assert_eq!(probs, vec![0.0, 0.0, 1.0]);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn final_step_samples_posterior_and_drops_mask() {
        let p0 = InitialDistribution::build(InitialKind::Masking, None, 2, 2).unwrap();
        let g = CategoricalGraph::new(vec![2, 2], vec![2], 3, 3).unwrap();
        let post = ProbGraph::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![0.0, 1.0]]).unwrap();
        let next = euler_step(&g, &post, &p0, 0.9, 0.1, &RateConfig::default(), &mut seeded(0)).unwrap();
        assert_eq!(next.node_states(), &[1, 0]);
        assert_eq!(next.edge_states(), &[1]);
        assert_eq!((next.x_card(), next.e_card()), (2, 2));
    }

    #[test]
    fn exact_step_is_reproducible() {
        let g = CategoricalGraph::new(vec![1, 0, 1], vec![0, 1, 0], 2, 2).unwrap();
        let post = ProbGraph::new(
            vec![vec![0.3, 0.7], vec![0.6, 0.4], vec![0.5, 0.5]],
            vec![vec![0.2, 0.8], vec![0.9, 0.1], vec![0.5, 0.5]],
        )
        .unwrap();
        let cfg = RateConfig { exact_expectation: true, eta: 0.5, omega: 0.1, ..Default::default() };
        let a = euler_step(&g, &post, &uniform_prior(), 0.2, 0.05, &cfg, &mut seeded(5)).unwrap();
        let b = euler_step(&g, &post, &uniform_prior(), 0.2, 0.05, &cfg, &mut seeded(5)).unwrap();
        assert_eq!(a, b);
    }

    fn arb_simplex(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 2..=max_len).prop_map(|mut v| {
            // sprinkle exact zeros to exercise dead states
            if v[0] < 0.2 {
                let k = v.len() - 1;
                v[k] = 0.0;
            }
            let s: f64 = v.iter().sum();
            if s == 0.0 {
                let n = v.len();
                return vec![1.0 / n as f64; n];
            }
            v.iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn rows_are_valid_generators(
            p0 in arb_simplex(6),
            z1_seed in any::<usize>(),
            zt_seed in any::<usize>(),
            t in 0.0f64..0.999,
            omega in 0.0f64..2.0,
            eta in 0.0f64..2.0,
            d in 0usize..5,
        ) {
            let z1 = z1_seed % p0.len();
            let z_t = zt_seed % p0.len();
            let cfg = RateConfig { omega, eta, db_design: DbDesign::ALL[d], ..Default::default() };
            let row = combined_row(z_t, z1, &p0, t, &cfg);
            let sum: f64 = row.rates().iter().sum();
            prop_assert!(sum.abs() < 1e-12 * (1.0 + row.exit_rate()));
            for (j, &r) in row.rates().iter().enumerate() {
                if j != z_t { prop_assert!(r >= 0.0); }
            }
            let pt = interp_prob(z1, &p0, t);
            prop_assert!((pt.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(pt.iter().all(|&p| p >= 0.0));
        }

        #[test]
        fn db_detailed_balance(
            p0 in arb_simplex(6),
            z1_seed in any::<usize>(),
            t in 0.0f64..1.0,
            d in 0usize..5,
        ) {
            let z1 = z1_seed % p0.len();
            let design = DbDesign::ALL[d];
            let pt = interp_prob(z1, &p0, t);
            for a in 0..p0.len() {
                for b in 0..p0.len() {
                    let lhs = pt[a] * db_entry(a, b, z1, &p0, &pt, design);
                    let rhs = pt[b] * db_entry(b, a, z1, &p0, &pt, design);
                    prop_assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
    }
}
