//! Random-instance generation and experiment harnesses.
//!
//! The generator draws component parameters from the baseline uniform ranges
//! (shape in U(1,5), rate in U(0.2,1), PM cost in U(1,5), CM cost in
//! U(10,30), setup cost 20, threshold 20, 11 states) and initial states
//! uniformly over all states, exercising both the forced-CM and PM logic.
//!
//! Reproducibility: instances are keyed by (seed, n, index) through a ChaCha8
//! stream, `stream = (n << 32) | index`, so a sweep can be regenerated
//! instance by instance in any order. The instances CSV written by the
//! harnesses is byte-identical across runs for a fixed config; timing lives
//! in the summary CSV and the JSON report only.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::degradation::{GammaProcessParams, StateGrid, TransitionMatrix};
use crate::error::{Error, Result};
use crate::model::{ComponentSpec, SystemInstance};
use crate::solvers::{
    brute_force_two_stage, exact_multistage, heuristic_two_stage, simulate_rolling_horizon,
    solve_two_stage, HeuristicConfig,
};

fn default_n_values() -> Vec<usize> {
    (10..=19).collect()
}
fn default_instances_per_n() -> usize {
    100
}
fn default_alpha_range() -> (f64, f64) {
    (1.0, 5.0)
}
fn default_rate_range() -> (f64, f64) {
    (0.2, 1.0)
}
fn default_pm_range() -> (f64, f64) {
    (1.0, 5.0)
}
fn default_cm_range() -> (f64, f64) {
    (10.0, 30.0)
}
fn default_setup_cost() -> f64 {
    20.0
}
fn default_failure_threshold() -> f64 {
    20.0
}
fn default_m() -> usize {
    11
}
fn default_interval() -> f64 {
    1.0
}
fn default_j_values() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_partition_samples() -> usize {
    100
}
fn default_brute_force_limit() -> usize {
    12
}
fn default_horizons() -> Vec<usize> {
    vec![3, 4, 5]
}
fn default_replications() -> usize {
    1000
}

/// Configuration of the experiment harnesses (baseline defaults).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// System sizes for the two-stage sweep.
    pub n_values: Vec<usize>,
    pub instances_per_n: usize,
    pub alpha_range: (f64, f64),
    pub rate_range: (f64, f64),
    pub pm_cost_range: (f64, f64),
    pub cm_cost_range: (f64, f64),
    pub setup_cost: f64,
    pub failure_threshold: f64,
    pub m: usize,
    pub inspection_interval: f64,
    pub seed: u64,
    /// Cardinality caps swept for the heuristic solver.
    pub j_values: Vec<usize>,
    /// Candidate partitions per heuristic solve.
    pub partition_samples: usize,
    /// Run brute force alongside the exact solver when `n` is at most this.
    pub brute_force_limit: usize,
    /// Per-solve wall-clock budget in seconds; exceeding it flags the row.
    pub time_limit: Option<f64>,
    /// Horizons for the multi-stage sweep (paired with every `n_values`
    /// entry that passes the exact-solver guard).
    pub horizons: Vec<usize>,
    /// Monte Carlo replications per multi-stage cell.
    pub replications: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_values: default_n_values(),
            instances_per_n: default_instances_per_n(),
            alpha_range: default_alpha_range(),
            rate_range: default_rate_range(),
            pm_cost_range: default_pm_range(),
            cm_cost_range: default_cm_range(),
            setup_cost: default_setup_cost(),
            failure_threshold: default_failure_threshold(),
            m: default_m(),
            inspection_interval: default_interval(),
            seed: 0,
            j_values: default_j_values(),
            partition_samples: default_partition_samples(),
            brute_force_limit: default_brute_force_limit(),
            time_limit: None,
            horizons: default_horizons(),
            replications: default_replications(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        for (lo, hi, name) in [
            (self.alpha_range.0, self.alpha_range.1, "alpha"),
            (self.rate_range.0, self.rate_range.1, "rate"),
            (self.pm_cost_range.0, self.pm_cost_range.1, "pm cost"),
            (self.cm_cost_range.0, self.cm_cost_range.1, "cm cost"),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi && lo > 0.0) {
                return Err(Error::Invalid(format!(
                    "{name} range must satisfy 0 < lower < upper, got ({lo}, {hi})"
                )));
            }
        }
        if self.n_values.is_empty() || self.instances_per_n == 0 {
            return Err(Error::Invalid(
                "need at least one system size and one instance".into(),
            ));
        }
        if self.m < 2 {
            return Err(Error::Invalid("state count must be >= 2".into()));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

/// Deterministically sample instance `index` of size `n`: ChaCha8 keyed by
/// the config seed with `stream = (n << 32) | index`. The two-stage sweep
/// builds instances with horizon 2; the multi-stage harness re-horizons
/// them.
pub fn sample_instance(config: &BenchConfig, n: usize, index: usize) -> Result<SystemInstance> {
    sample_instance_with_horizon(config, n, index, 2)
}

fn sample_instance_with_horizon(
    config: &BenchConfig,
    n: usize,
    index: usize,
    horizon: usize,
) -> Result<SystemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(((n as u64) << 32) | index as u64);
    let grid = StateGrid::equal_width(config.failure_threshold, config.m)?;
    let mut components = Vec::with_capacity(n);
    for id in 1..=n {
        let alpha = rng.random_range(config.alpha_range.0..config.alpha_range.1);
        let rate = rng.random_range(config.rate_range.0..config.rate_range.1);
        let pm_cost = rng.random_range(config.pm_cost_range.0..config.pm_cost_range.1);
        let cm_cost = rng.random_range(config.cm_cost_range.0..config.cm_cost_range.1);
        let state = rng.random_range(1..=config.m);
        let gamma = GammaProcessParams::fixed(alpha, rate);
        let transition = TransitionMatrix::from_gamma(&gamma, &grid, config.inspection_interval)?;
        components.push(ComponentSpec {
            id,
            pm_cost,
            cm_cost,
            gamma: Some(gamma),
            transition,
            state,
        });
    }
    SystemInstance::new(
        components,
        config.setup_cost,
        config.m,
        horizon,
        config.inspection_interval,
    )
}

/// Heuristic-solver cell of one instance row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeuristicCell {
    pub cap: usize,
    pub cost: f64,
    pub rel_error: f64,
    pub wall_s: f64,
}

/// Per-instance results of the two-stage sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStageRow {
    pub n: usize,
    pub index: usize,
    pub exact_cost: f64,
    pub exact_j_max: usize,
    pub exact_sets_examined: u64,
    pub exact_wall_s: f64,
    pub exact_cpu_s: f64,
    pub brute_cost: Option<f64>,
    /// |exact - brute| / max(1, |brute|), when brute force ran.
    pub brute_rel_error: Option<f64>,
    pub heuristics: Vec<HeuristicCell>,
    pub timed_out: bool,
}

/// Aggregates per (n, algorithm) in the shape of the large-scale tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n: usize,
    pub algorithm: String,
    pub avg_wall_s: f64,
    pub max_wall_s: f64,
    pub avg_j_max: f64,
    pub max_j_max: usize,
    pub mean_rel_error: f64,
    pub max_rel_error: f64,
}

/// One multi-stage cell: exact value vs rolling-horizon estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultistageRow {
    pub n: usize,
    pub horizon: usize,
    pub exact_value: f64,
    pub rolling_mean: f64,
    pub rolling_std_dev: f64,
    pub replications: usize,
    pub gap_percent: f64,
}

/// Full harness output.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct BenchReport {
    pub two_stage_rows: Vec<TwoStageRow>,
    pub aggregates: Vec<AggregateRow>,
    pub multistage_rows: Vec<MultistageRow>,
}

fn rel_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1.0)
}

/// Process CPU time in seconds.
pub fn process_cpu_time() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Two-stage sweep: times the exact solver per instance, compares against
/// brute force where the guard allows, and sweeps the heuristic caps.
/// Per-instance time-limit violations are recorded, never fatal.
pub fn run_two_stage_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let mut rows = Vec::new();
    for &n in &config.n_values {
        for index in 0..config.instances_per_n {
            let instance = sample_instance(config, n, index)?;

            let wall_start = Instant::now();
            let cpu_start = process_cpu_time();
            let (_, exact_cost, trace) = solve_two_stage(&instance)?;
            let exact_wall_s = wall_start.elapsed().as_secs_f64();
            let exact_cpu_s = process_cpu_time() - cpu_start;

            let (brute_cost, brute_rel_error) = if n <= config.brute_force_limit {
                let (_, cost) = brute_force_two_stage(&instance)?;
                (Some(cost), Some(rel_error(exact_cost, cost)))
            } else {
                (None, None)
            };

            let mut heuristics = Vec::with_capacity(config.j_values.len());
            for &cap in &config.j_values {
                let solver = HeuristicConfig {
                    max_cardinality: cap,
                    samples: config.partition_samples,
                    seed: config.seed,
                };
                let start = Instant::now();
                let (_, cost) = heuristic_two_stage(&instance, &solver)?;
                heuristics.push(HeuristicCell {
                    cap,
                    cost,
                    rel_error: rel_error(cost, exact_cost),
                    wall_s: start.elapsed().as_secs_f64(),
                });
            }

            let timed_out = config
                .time_limit
                .map(|limit| exact_wall_s > limit)
                .unwrap_or(false);
            rows.push(TwoStageRow {
                n,
                index,
                exact_cost,
                exact_j_max: trace.j_max,
                exact_sets_examined: trace.sets_examined,
                exact_wall_s,
                exact_cpu_s,
                brute_cost,
                brute_rel_error,
                heuristics,
                timed_out,
            });
        }
    }
    let aggregates = aggregate(config, &rows);
    Ok(BenchReport {
        two_stage_rows: rows,
        aggregates,
        multistage_rows: Vec::new(),
    })
}

fn aggregate(config: &BenchConfig, rows: &[TwoStageRow]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for &n in &config.n_values {
        let group: Vec<&TwoStageRow> = rows.iter().filter(|r| r.n == n).collect();
        if group.is_empty() {
            continue;
        }
        let count = group.len() as f64;
        let errors: Vec<f64> = group.iter().filter_map(|r| r.brute_rel_error).collect();
        out.push(AggregateRow {
            n,
            algorithm: "exact".into(),
            avg_wall_s: group.iter().map(|r| r.exact_wall_s).sum::<f64>() / count,
            max_wall_s: group.iter().map(|r| r.exact_wall_s).fold(0.0, f64::max),
            avg_j_max: group.iter().map(|r| r.exact_j_max as f64).sum::<f64>() / count,
            max_j_max: group.iter().map(|r| r.exact_j_max).max().unwrap_or(0),
            mean_rel_error: if errors.is_empty() {
                0.0
            } else {
                errors.iter().sum::<f64>() / errors.len() as f64
            },
            max_rel_error: errors.iter().copied().fold(0.0, f64::max),
        });
        for &cap in &config.j_values {
            let cells: Vec<&HeuristicCell> = group
                .iter()
                .flat_map(|r| r.heuristics.iter().filter(|c| c.cap == cap))
                .collect();
            if cells.is_empty() {
                continue;
            }
            let cn = cells.len() as f64;
            out.push(AggregateRow {
                n,
                algorithm: format!("heuristic(J={cap})"),
                avg_wall_s: cells.iter().map(|c| c.wall_s).sum::<f64>() / cn,
                max_wall_s: cells.iter().map(|c| c.wall_s).fold(0.0, f64::max),
                avg_j_max: 0.0,
                max_j_max: 0,
                mean_rel_error: cells.iter().map(|c| c.rel_error).sum::<f64>() / cn,
                max_rel_error: cells.iter().map(|c| c.rel_error).fold(0.0, f64::max),
            });
        }
    }
    out
}

/// Multi-stage sweep: exact value vs rolling-horizon Monte Carlo mean for
/// every (n, horizon) cell inside the exact-solver guard.
pub fn run_multistage_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    for &n in &config.n_values {
        if n > 3 {
            return Err(Error::Guard(format!(
                "multi-stage sweep is limited to n <= 3, got {n}"
            )));
        }
    }
    for &horizon in &config.horizons {
        if !(2..=5).contains(&horizon) {
            return Err(Error::Guard(format!(
                "multi-stage sweep is limited to 2 <= T <= 5, got {horizon}"
            )));
        }
    }
    let mut rows = Vec::new();
    for &n in &config.n_values {
        for &horizon in &config.horizons {
            let instance = sample_instance_with_horizon(config, n, 0, horizon)?;
            let exact = exact_multistage(&instance)?;
            let solver = HeuristicConfig {
                max_cardinality: n,
                samples: config.partition_samples,
                seed: config.seed,
            };
            let summary =
                simulate_rolling_horizon(&instance, config.replications, config.seed, &solver)?;
            let gap_percent = if exact.value.abs() > 0.0 {
                (summary.mean_cost - exact.value) / exact.value * 100.0
            } else {
                0.0
            };
            rows.push(MultistageRow {
                n,
                horizon,
                exact_value: exact.value,
                rolling_mean: summary.mean_cost,
                rolling_std_dev: summary.std_dev,
                replications: summary.replications,
                gap_percent,
            });
        }
    }
    Ok(BenchReport {
        two_stage_rows: Vec::new(),
        aggregates: Vec::new(),
        multistage_rows: rows,
    })
}

impl BenchReport {
    /// Deterministic per-instance CSV: everything except timing. Identical
    /// config and seed reproduce this byte for byte. The shape follows the
    /// sweep that produced the report (two-stage or multi-stage).
    pub fn instances_csv(&self) -> String {
        if self.two_stage_rows.is_empty() && !self.multistage_rows.is_empty() {
            let mut out = String::from(
                "n,horizon,exact_value,rolling_mean,rolling_std_dev,replications,gap_percent\n",
            );
            for r in &self.multistage_rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.n,
                    r.horizon,
                    r.exact_value,
                    r.rolling_mean,
                    r.rolling_std_dev,
                    r.replications,
                    r.gap_percent
                );
            }
            return out;
        }
        let mut out =
            String::from("n,index,exact_cost,exact_j_max,exact_sets_examined,brute_cost,brute_rel_error,heuristic_caps,heuristic_costs\n");
        for r in &self.two_stage_rows {
            let caps: Vec<String> = r.heuristics.iter().map(|c| c.cap.to_string()).collect();
            let costs: Vec<String> = r.heuristics.iter().map(|c| c.cost.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.index,
                r.exact_cost,
                r.exact_j_max,
                r.exact_sets_examined,
                r.brute_cost.map(|c| c.to_string()).unwrap_or_default(),
                r.brute_rel_error.map(|c| c.to_string()).unwrap_or_default(),
                caps.join(";"),
                costs.join(";"),
            );
        }
        out
    }

    /// Aggregate CSV including wall-clock timing (not reproducible byte for
    /// byte across runs).
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "n,algorithm,avg_wall_s,max_wall_s,avg_j_max,max_j_max,mean_rel_error,max_rel_error\n",
        );
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.4},{},{:.3e},{:.3e}",
                a.n,
                a.algorithm,
                a.avg_wall_s,
                a.max_wall_s,
                a.avg_j_max,
                a.max_j_max,
                a.mean_rel_error,
                a.max_rel_error
            );
        }
        for r in &self.multistage_rows {
            let _ = writeln!(
                out,
                "{},rolling_horizon(T={}),,,,,{:.6},{:.6}",
                r.n,
                r.horizon,
                (r.rolling_mean - r.exact_value).abs() / r.exact_value.abs().max(1.0),
                r.gap_percent / 100.0
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Invariant violations that should flip the harness exit code: the
    /// exact solver must match brute force wherever brute force ran, and the
    /// rolling-horizon mean may not undercut the exact value by more than 3
    /// standard errors.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.two_stage_rows {
            if let Some(err) = r.brute_rel_error {
                if err > 1e-9 {
                    out.push(format!(
                        "n={} index={}: solve_two_stage cost {} deviates from brute force {} (rel {err:.3e})",
                        r.n,
                        r.index,
                        r.exact_cost,
                        r.brute_cost.unwrap_or(f64::NAN)
                    ));
                }
            }
        }
        for r in &self.multistage_rows {
            let se = r.rolling_std_dev / (r.replications as f64).sqrt();
            if r.rolling_mean < r.exact_value - 3.0 * se {
                out.push(format!(
                    "n={} T={}: rolling-horizon mean {} undercuts exact value {} beyond 3 standard errors",
                    r.n, r.horizon, r.rolling_mean, r.exact_value
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> BenchConfig {
        BenchConfig {
            n_values: vec![3, 5],
            instances_per_n: 4,
            seed: 7,
            j_values: vec![1, 2],
            partition_samples: 16,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let config = small_config();
        let a = sample_instance(&config, 5, 2).unwrap();
        let b = sample_instance(&config, 5, 2).unwrap();
        assert_eq!(a.states(), b.states());
        for i in 0..5 {
            assert_eq!(a.component(i).pm_cost, b.component(i).pm_cost);
            assert_eq!(a.component(i).cm_cost, b.component(i).cm_cost);
            assert_eq!(a.failure_prob_current(i), b.failure_prob_current(i));
        }
        // different index differs
        let c = sample_instance(&config, 5, 3).unwrap();
        assert!(a.component(0).pm_cost != c.component(0).pm_cost);
    }

    #[test]
    fn sampled_parameters_within_ranges() {
        let config = small_config();
        for index in 0..20 {
            let inst = sample_instance(&config, 3, index).unwrap();
            for c in inst.components() {
                let (pm, cm) = (c.pm_cost, c.cm_cost);
                assert!((1.0..5.0).contains(&pm));
                assert!((10.0..30.0).contains(&cm));
                assert!(cm > pm);
                match c.gamma.unwrap().rate {
                    crate::degradation::RateModel::Fixed { rate } => {
                        assert!((0.2..1.0).contains(&rate))
                    }
                    _ => panic!("baseline generator draws fixed rates"),
                }
                assert!((1..=11).contains(&c.state));
            }
        }
    }

    #[test]
    fn two_stage_bench_has_zero_error_vs_brute() {
        let config = small_config();
        let report = run_two_stage_bench(&config).unwrap();
        assert_eq!(report.two_stage_rows.len(), 8);
        for row in &report.two_stage_rows {
            assert!(row.brute_rel_error.unwrap() <= 1e-9);
        }
        assert!(report.violations().is_empty());
    }

    #[test]
    fn instances_csv_reproducible() {
        let config = small_config();
        let a = run_two_stage_bench(&config).unwrap().instances_csv();
        let b = run_two_stage_bench(&config).unwrap().instances_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let config = BenchConfig {
            alpha_range: (5.0, 1.0),
            ..BenchConfig::default()
        };
        assert!(config.validate().is_err());
        let parsed = BenchConfig::from_json_str(r#"{"n_values": [4], "seed": 3}"#).unwrap();
        assert_eq!(parsed.n_values, vec![4]);
        assert_eq!(parsed.instances_per_n, 100);
    }

    #[test]
    fn multistage_bench_small_cell() {
        let config = BenchConfig {
            n_values: vec![2],
            horizons: vec![3],
            replications: 40,
            partition_samples: 8,
            seed: 5,
            ..BenchConfig::default()
        };
        let report = run_multistage_bench(&config).unwrap();
        assert_eq!(report.multistage_rows.len(), 1);
        let row = &report.multistage_rows[0];
        // suboptimal policy cannot beat the exact value beyond noise
        let se = row.rolling_std_dev / (row.replications as f64).sqrt();
        assert!(row.rolling_mean >= row.exact_value - 3.0 * se);
        // guard enforced
        let bad = BenchConfig {
            n_values: vec![4],
            ..config
        };
        assert!(run_multistage_bench(&bad).is_err());
    }
}
