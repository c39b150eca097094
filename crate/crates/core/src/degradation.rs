//! Gamma-process degradation discretized onto a finite state space.
//!
//! Component wear is modeled as a gamma process: over an inspection interval
//! of length `tau` the degradation increment is Gamma-distributed with shape
//! `alpha * tau` and a rate that is either a fixed `gamma` or, with random
//! effects, itself Gamma(kappa, lambda)-distributed to capture unit-to-unit
//! heterogeneity. The continuous degradation level is split into `m - 1`
//! working bins over `[0, L)` plus the absorbing failure state `m = [L, inf)`,
//! and the one-interval transition matrix is
//!
//!   Q(g, g') = F(upper(g') - d_g) - F(lower(g') - d_g)   for working g' >= g,
//!   Q(g, m)  = 1 - F(L - d_g),
//!
//! where `d_g` is the representative degradation level of state `g` and `F`
//! the increment CDF. Degradation is monotone, so `Q(g, g') = 0` for `g' < g`.
//!
//! With random effects the marginal increment CDF has the closed form
//! `P(X <= x) = I_{x/(x+lambda)}(shape, kappa)` (regularized incomplete beta),
//! since X/lambda' is beta-prime distributed when the rate is integrated out.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};

/// CDF differences smaller than this in magnitude are treated as round-off
/// and clamped to zero before row renormalization.
const NEGATIVE_FLOOR: f64 = 1e-14;

/// Finite and strictly positive.
fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Rate model of the gamma degradation process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateModel {
    /// Fixed rate parameter.
    Fixed { rate: f64 },
    /// Random effects: the rate is Gamma(kappa, lambda)-distributed.
    RandomEffect { kappa: f64, lambda: f64 },
}

/// Parameters of a (possibly heterogeneous) gamma degradation process.
///
/// The shape at time `t` is `alpha * t`; the rate is given by [`RateModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaProcessParams {
    /// Shape growth rate: the increment over an interval `tau` has shape
    /// `alpha * tau`.
    pub alpha: f64,
    #[serde(flatten)]
    pub rate: RateModel,
}

impl GammaProcessParams {
    /// Fixed-rate process.
    pub fn fixed(alpha: f64, rate: f64) -> Self {
        Self {
            alpha,
            rate: RateModel::Fixed { rate },
        }
    }

    /// Random-effects process with Gamma(kappa, lambda) rate.
    pub fn random_effect(alpha: f64, kappa: f64, lambda: f64) -> Self {
        Self {
            alpha,
            rate: RateModel::RandomEffect { kappa, lambda },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !positive(self.alpha) {
            return Err(Error::Domain(format!(
                "gamma process shape rate must be positive, got {}",
                self.alpha
            )));
        }
        match self.rate {
            RateModel::Fixed { rate } => {
                if !positive(rate) {
                    return Err(Error::Domain(format!(
                        "gamma process rate must be positive, got {rate}"
                    )));
                }
            }
            RateModel::RandomEffect { kappa, lambda } => {
                if !positive(kappa) || !positive(lambda) {
                    return Err(Error::Domain(format!(
                        "random-effect parameters must be positive, got kappa={kappa}, lambda={lambda}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// CDF of the degradation increment accumulated over an interval of
    /// length `interval`.
    pub fn increment_cdf(&self, x: f64, interval: f64) -> Result<f64> {
        if !positive(interval) {
            return Err(Error::Domain(format!(
                "inspection interval must be positive, got {interval}"
            )));
        }
        let shape = self.alpha * interval;
        match self.rate {
            RateModel::Fixed { rate } => gamma_increment_cdf(x, shape, rate),
            RateModel::RandomEffect { kappa, lambda } => {
                compound_gamma_increment_cdf(x, shape, kappa, lambda)
            }
        }
    }
}

/// `P(X <= x)` for `X ~ Gamma(shape, rate)`.
pub fn gamma_increment_cdf(x: f64, shape: f64, rate: f64) -> Result<f64> {
    if !positive(shape) || !positive(rate) {
        return Err(Error::Domain(format!(
            "gamma cdf requires positive shape and rate, got shape={shape}, rate={rate}"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("gamma cdf requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_lr(shape, rate * x))
}

/// Marginal `P(X <= x)` where `X | gamma ~ Gamma(shape, gamma)` and
/// `gamma ~ Gamma(kappa, lambda)`.
///
/// Closed form: `I_{x/(x+lambda)}(shape, kappa)` with `I` the regularized
/// incomplete beta function.
pub fn compound_gamma_increment_cdf(x: f64, shape: f64, kappa: f64, lambda: f64) -> Result<f64> {
    if !positive(shape) || !positive(kappa) || !positive(lambda) {
        return Err(Error::Domain(format!(
            "compound gamma cdf requires positive parameters, got shape={shape}, kappa={kappa}, lambda={lambda}"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!(
            "compound gamma cdf requires x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(beta_reg(shape, kappa, x / (x + lambda)))
}

/// Discretization of the continuous degradation level into `m` states.
///
/// States `1..m-1` are working states covering `[0, L)`; state `m` is the
/// failure state `[L, inf)`. Each working state carries a representative
/// level used as the "current wear" when computing transition probabilities:
/// state 1 sits exactly at 0 (as good as new), states `2..m-1` at their bin
/// midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGrid {
    m: usize,
    failure_threshold: f64,
    /// Upper edges of the `m - 1` working bins, ascending; the last equals
    /// the failure threshold.
    bin_edges: Vec<f64>,
    /// One representative level per working state.
    representative_levels: Vec<f64>,
}

impl StateGrid {
    /// Equal-width working bins over `[0, failure_threshold)`.
    pub fn equal_width(failure_threshold: f64, m: usize) -> Result<Self> {
        if !positive(failure_threshold) {
            return Err(Error::Domain(format!(
                "failure threshold must be positive, got {failure_threshold}"
            )));
        }
        if m < 2 {
            return Err(Error::Domain(format!("state count must be >= 2, got {m}")));
        }
        let bins = m - 1;
        let width = failure_threshold / bins as f64;
        let bin_edges: Vec<f64> = (1..=bins)
            .map(|g| {
                if g == bins {
                    failure_threshold
                } else {
                    width * g as f64
                }
            })
            .collect();
        let representative_levels: Vec<f64> = (1..=bins)
            .map(|g| {
                if g == 1 {
                    0.0
                } else {
                    width * (g as f64 - 1.0) + width / 2.0
                }
            })
            .collect();
        Ok(Self {
            m,
            failure_threshold,
            bin_edges,
            representative_levels,
        })
    }

    /// Number of states including the failure state.
    pub fn state_count(&self) -> usize {
        self.m
    }

    pub fn failure_threshold(&self) -> f64 {
        self.failure_threshold
    }

    /// Lower edge of working state `g` (1-based).
    pub fn lower_edge(&self, g: usize) -> f64 {
        debug_assert!((1..self.m).contains(&g));
        if g == 1 {
            0.0
        } else {
            self.bin_edges[g - 2]
        }
    }

    /// Upper edge of working state `g` (1-based).
    pub fn upper_edge(&self, g: usize) -> f64 {
        debug_assert!((1..self.m).contains(&g));
        self.bin_edges[g - 1]
    }

    /// Representative degradation level of working state `g` (1-based).
    pub fn representative_level(&self, g: usize) -> f64 {
        debug_assert!((1..self.m).contains(&g));
        self.representative_levels[g - 1]
    }
}

/// Row-stochastic one-interval state transition matrix of one component.
///
/// States are 1-based: `1` is as-good-as-new, `m` is failed. Rows for
/// working states are upper triangular (no improvement without maintenance);
/// the failure row is `(0, .., 0, 1)` by convention — the model always
/// repairs failed components before they transition, so that row never
/// enters any cost expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    m: usize,
    /// Row-major `m x m` entries.
    entries: Vec<f64>,
}

impl TransitionMatrix {
    /// Discretize a gamma process over one inspection interval.
    pub fn from_gamma(
        params: &GammaProcessParams,
        grid: &StateGrid,
        inspection_interval: f64,
    ) -> Result<Self> {
        params.validate()?;
        let m = grid.state_count();
        let threshold = grid.failure_threshold();
        let cdf = |x: f64| -> Result<f64> {
            if x <= 0.0 {
                Ok(0.0)
            } else {
                params.increment_cdf(x, inspection_interval)
            }
        };
        let mut entries = vec![0.0; m * m];
        for g in 1..m {
            let level = grid.representative_level(g);
            let row = &mut entries[(g - 1) * m..g * m];
            for gp in g..m {
                let hi = cdf(grid.upper_edge(gp) - level)?;
                let lo = cdf(grid.lower_edge(gp) - level)?;
                row[gp - 1] = hi - lo;
            }
            row[m - 1] = 1.0 - cdf(threshold - level)?;
        }
        entries[(m - 1) * m + (m - 1)] = 1.0;
        let mut matrix = Self { m, entries };
        matrix.clean_rows();
        matrix.validate()?;
        Ok(matrix)
    }

    /// Build from explicit rows; validates shape and stochasticity.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m < 2 {
            return Err(Error::Invalid(format!(
                "transition matrix needs at least 2 states, got {m}"
            )));
        }
        let mut entries = Vec::with_capacity(m * m);
        for row in &rows {
            if row.len() != m {
                return Err(Error::Invalid(format!(
                    "transition matrix must be square: {m} rows but a row of length {}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        let matrix = Self { m, entries };
        matrix.validate()?;
        Ok(matrix)
    }

    pub fn state_count(&self) -> usize {
        self.m
    }

    /// Transition probability between 1-based states.
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        debug_assert!((1..=self.m).contains(&from) && (1..=self.m).contains(&to));
        self.entries[(from - 1) * self.m + (to - 1)]
    }

    /// Probability of reaching the failure state from 1-based state `from`
    /// within one interval.
    pub fn failure_prob(&self, from: usize) -> f64 {
        self.prob(from, self.m)
    }

    /// Row of a 1-based state.
    pub fn row(&self, from: usize) -> &[f64] {
        debug_assert!((1..=self.m).contains(&from));
        &self.entries[(from - 1) * self.m..from * self.m]
    }

    /// Clamp round-off negatives to zero and renormalize each row.
    fn clean_rows(&mut self) {
        let m = self.m;
        for g in 0..m {
            let row = &mut self.entries[g * m..(g + 1) * m];
            for e in row.iter_mut() {
                if *e < 0.0 && *e > -NEGATIVE_FLOOR {
                    *e = 0.0;
                }
            }
            let sum: f64 = row.iter().sum();
            if sum > 0.0 && sum != 1.0 {
                for e in row.iter_mut() {
                    *e /= sum;
                }
            }
        }
    }

    /// Check the structural invariants: row sums within 1e-9 of one, entries
    /// in `[0, 1]`, no below-diagonal mass, absorbing failure row.
    pub fn validate(&self) -> Result<()> {
        let m = self.m;
        for g in 1..=m {
            let row = self.row(g);
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!(
                    "row {g} sums to {sum}, expected 1 within 1e-9"
                )));
            }
            for (gp, &e) in row.iter().enumerate() {
                if !(0.0..=1.0 + 1e-12).contains(&e) {
                    return Err(Error::Invalid(format!(
                        "entry ({g}, {}) = {e} outside [0, 1]",
                        gp + 1
                    )));
                }
                if gp + 1 < g && e != 0.0 {
                    return Err(Error::Invalid(format!(
                        "entry ({g}, {}) = {e} below the diagonal must be 0",
                        gp + 1
                    )));
                }
            }
        }
        if self.prob(m, m) != 1.0 {
            return Err(Error::Invalid(
                "failure row must be absorbing: Q(m, m) = 1".into(),
            ));
        }
        Ok(())
    }
}
