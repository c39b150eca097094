//! Two-stage solvers: brute-force enumeration and the move-criterion search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Partition, Severity, SystemInstance};
use crate::set::{for_each_combination, ComponentSet};
use crate::structural::{
    delta_from_parts, rho, survival_prob, survival_ratio_down, survival_ratio_up,
};

/// Hard cap on brute-force enumeration (`2^n` partitions).
const BRUTE_FORCE_MAX_N: usize = 20;

/// Destination of a committed move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveDestination {
    DoNothing,
    Maintain,
}

/// One committed set move. Component ids are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoveRecord {
    pub members: Vec<usize>,
    pub destination: MoveDestination,
    pub cardinality: usize,
}

/// All moves committed during one pass at a fixed cardinality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRecord {
    /// Cardinality searched during this pass.
    pub cardinality: usize,
    pub moves: Vec<MoveRecord>,
}

/// Trace of one exact-solver run: the seeded failures, every committed
/// batch, the largest cardinality searched, and the number of candidate sets
/// examined.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchTrace {
    /// 1-based ids of components seeded into the maintenance set because
    /// they were failed at the first stage.
    pub seeded_failed: Vec<usize>,
    pub batches: Vec<BatchRecord>,
    /// Largest cardinality any pass searched.
    pub j_max: usize,
    pub sets_examined: u64,
}

/// Exhaustively enumerate all feasible partitions and return a minimizer.
///
/// Ties break toward the smallest maintenance-set bitmask (component 1 is
/// the lowest bit). Guarded to `n <= 20`; handles zero setup cost.
pub fn brute_force_two_stage(instance: &SystemInstance) -> Result<(Partition, f64)> {
    let n = instance.len();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Guard(format!(
            "brute force enumerates 2^n partitions; n = {n} exceeds {BRUTE_FORCE_MAX_N}"
        )));
    }
    let mut failed_mask = 0u64;
    for i in instance.failed_set().iter() {
        failed_mask |= 1 << i;
    }
    let mut best_mask = failed_mask;
    let mut best_cost = f64::INFINITY;
    for mask in 0..(1u64 << n) {
        if mask & failed_mask != failed_mask {
            continue;
        }
        let cost = instance.two_stage_cost_unchecked(&Partition::from_mask(n, mask));
        if cost < best_cost {
            best_cost = cost;
            best_mask = mask;
        }
    }
    Ok((Partition::from_mask(n, best_mask), best_cost))
}

/// Partial solver state: committed sets plus whatever is still undetermined.
pub(crate) struct SearchState {
    pub n1_star: ComponentSet,
    pub undetermined: ComponentSet,
    pub trace: SearchTrace,
}

fn check_solver_preconditions(instance: &SystemInstance) -> Result<()> {
    if !(instance.setup_cost().is_finite() && instance.setup_cost() > 0.0) {
        return Err(Error::Domain(
            "the move-criterion solvers require a positive setup cost (use brute force for c_s = 0)"
                .into(),
        ));
    }
    let violations: Vec<_> = instance
        .validate()
        .into_iter()
        .filter(|f| f.severity == Severity::Violation)
        .collect();
    if let Some(first) = violations.first() {
        return Err(Error::Invalid(first.message.clone()));
    }
    Ok(())
}

/// Core search loop shared by the exact and capped solvers.
///
/// Seeds the maintenance set with all failed components, then repeatedly
/// sweeps every cardinality-`j` subset of the undetermined set against the
/// stale reference partitions: candidates with `Δr(N0* ∪ Nu, N1*, N) < 1`
/// are batched into the maintenance set, else those with
/// `Δs(N0*, N1* ∪ Nu, N) >= 1` into the do-nothing set. Progress resets `j`
/// to 1; otherwise `j` grows. With `cap = Some(J)` the loop stops once `j`
/// would exceed `J`, leaving the remainder undetermined.
pub(crate) fn search(instance: &SystemInstance, cap: Option<usize>) -> Result<SearchState> {
    check_solver_preconditions(instance)?;
    let n = instance.len();
    let setup_cost = instance.setup_cost();

    let mut n1_star = instance.failed_set();
    let mut undetermined = n1_star.complement();
    let mut trace = SearchTrace {
        seeded_failed: n1_star.iter().map(|i| i + 1).collect(),
        batches: Vec::new(),
        j_max: 0,
        sets_examined: 0,
    };

    let mut rho_of = Vec::with_capacity(n);
    let mut ratio_up = Vec::with_capacity(n);
    let mut ratio_down = Vec::with_capacity(n);
    for i in 0..n {
        rho_of.push(rho(instance.component(i), setup_cost)?);
        ratio_up.push(survival_ratio_up(instance, i));
        ratio_down.push(survival_ratio_down(instance, i));
    }

    let mut j = 1usize;
    while !undetermined.is_empty() {
        if let Some(cap) = cap {
            if j > cap {
                break;
            }
        }
        trace.j_max = trace.j_max.max(j);

        // stale reference partitions for this whole pass
        let part_r = Partition::from_maintain_set(n1_star.clone());
        let mut n1_union_nu = n1_star.clone();
        n1_union_nu.union_with(&undetermined);
        let part_s = Partition::from_maintain_set(n1_union_nu);
        let p_r = survival_prob(instance, &part_r);
        let p_s = survival_prob(instance, &part_s);
        let r_charges_setup = n1_star.is_empty();
        let u = undetermined.len();
        let pool = undetermined.indices();

        let mut to_n1: Vec<Vec<usize>> = Vec::new();
        let mut to_n0: Vec<Vec<usize>> = Vec::new();
        for_each_combination(&pool, j, |members| {
            trace.sets_examined += 1;
            let mut rho_sum = 0.0;
            let mut up = 1.0;
            for &k in members {
                rho_sum += rho_of[k];
                up *= ratio_up[k];
            }
            let r_n = up - 1.0;
            if delta_from_parts(rho_sum, r_n, p_r, r_charges_setup) < 1.0 {
                to_n1.push(members.to_vec());
            } else {
                let mut down = 1.0;
                for &k in members {
                    down *= ratio_down[k];
                }
                let s_n = 1.0 - down;
                // the retained maintenance set (N1* ∪ Nu) \ N is empty iff
                // N1* is empty and N covers all of Nu
                let s_charges_setup = r_charges_setup && members.len() == u;
                if delta_from_parts(rho_sum, s_n, p_s, s_charges_setup) >= 1.0 {
                    to_n0.push(members.to_vec());
                }
            }
            true
        });

        let mut moved_n1 = ComponentSet::empty(n);
        for set in &to_n1 {
            for &i in set {
                moved_n1.insert(i);
            }
        }
        let mut moved_n0 = ComponentSet::empty(n);
        for set in &to_n0 {
            for &i in set {
                moved_n0.insert(i);
            }
        }
        // Distinct overlapping candidate sets cannot commit a component to
        // both destinations in exact arithmetic; resolve a float-induced
        // conflict toward do-nothing, matching the tie rule.
        if !moved_n1.is_disjoint_from(&moved_n0) {
            moved_n1.difference_with(&moved_n0);
        }

        if moved_n1.is_empty() && moved_n0.is_empty() {
            if j >= undetermined.len() {
                // Stalled at full cardinality: only reachable when Δr and Δs
                // straddle 1 by round-off. Commit the whole undetermined set
                // to the cheaper extreme, do-nothing on ties.
                let keep = Partition::from_maintain_set(n1_star.clone());
                let mut all = n1_star.clone();
                all.union_with(&undetermined);
                let move_all = Partition::from_maintain_set(all);
                let cost_keep = instance.two_stage_cost_unchecked(&keep);
                let cost_move = instance.two_stage_cost_unchecked(&move_all);
                let members: Vec<usize> = undetermined.iter().map(|i| i + 1).collect();
                let destination = if cost_move < cost_keep {
                    n1_star.union_with(&undetermined);
                    MoveDestination::Maintain
                } else {
                    MoveDestination::DoNothing
                };
                trace.batches.push(BatchRecord {
                    cardinality: j,
                    moves: vec![MoveRecord {
                        cardinality: members.len(),
                        members,
                        destination,
                    }],
                });
                undetermined = ComponentSet::empty(n);
                break;
            }
            j += 1;
            continue;
        }

        let mut moves = Vec::with_capacity(to_n1.len() + to_n0.len());
        for set in to_n1 {
            if set.iter().all(|&i| moved_n1.contains(i)) {
                moves.push(MoveRecord {
                    cardinality: set.len(),
                    members: set.iter().map(|&i| i + 1).collect(),
                    destination: MoveDestination::Maintain,
                });
            }
        }
        for set in to_n0 {
            moves.push(MoveRecord {
                cardinality: set.len(),
                members: set.iter().map(|&i| i + 1).collect(),
                destination: MoveDestination::DoNothing,
            });
        }
        trace.batches.push(BatchRecord {
            cardinality: j,
            moves,
        });

        undetermined.difference_with(&moved_n1);
        undetermined.difference_with(&moved_n0);
        n1_star.union_with(&moved_n1);
        j = 1;
    }

    Ok(SearchState {
        n1_star,
        undetermined,
        trace,
    })
}

/// Exact two-stage solver: returns an optimal feasible partition, its cost,
/// and the search trace.
pub fn solve_two_stage(instance: &SystemInstance) -> Result<(Partition, f64, SearchTrace)> {
    let state = search(instance, None)?;
    debug_assert!(state.undetermined.is_empty());
    let partition = Partition::from_maintain_set(state.n1_star);
    let cost = instance.two_stage_cost(&partition)?;
    Ok((partition, cost, state.trace))
}

/// Heuristic solver configuration: cardinality cap `J`, number of candidate
/// partitions `M` (two of which are the mandatory extremes), and the RNG
/// seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Largest subset cardinality the exact search may examine before early
    /// termination.
    pub max_cardinality: usize,
    /// Number of candidate completions evaluated, including the two extremes
    /// (everything undetermined to do-nothing / to maintenance).
    pub samples: usize,
    pub seed: u64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            max_cardinality: 3,
            samples: 100,
            seed: 0,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_cardinality < 1 {
            return Err(Error::Invalid("max cardinality must be >= 1".into()));
        }
        if self.samples < 2 {
            return Err(Error::Invalid(
                "need at least 2 samples to cover both mandatory extremes".into(),
            ));
        }
        Ok(())
    }
}

/// Heuristic two-stage solver: run the exact search with cardinality capped
/// at `J`, then complete the undetermined remainder by sampling `M`
/// partitions (the two extremes plus independent fair coin flips per
/// component) and keeping the cheapest. Deterministic given the seed.
pub fn heuristic_two_stage(
    instance: &SystemInstance,
    config: &HeuristicConfig,
) -> Result<(Partition, f64)> {
    config.validate()?;
    let state = search(instance, Some(config.max_cardinality))?;
    let base = state.n1_star;
    if state.undetermined.is_empty() {
        let partition = Partition::from_maintain_set(base);
        let cost = instance.two_stage_cost(&partition)?;
        return Ok((partition, cost));
    }

    let pool = state.undetermined.indices();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(Partition, f64)> = None;
    for sample in 0..config.samples {
        let mut n1 = base.clone();
        match sample {
            0 => {}
            1 => {
                for &i in &pool {
                    n1.insert(i);
                }
            }
            _ => {
                for &i in &pool {
                    if rng.random::<bool>() {
                        n1.insert(i);
                    }
                }
            }
        }
        let candidate = Partition::from_maintain_set(n1);
        let cost = instance.two_stage_cost_unchecked(&candidate);
        if best.as_ref().map_or(true, |(_, bc)| cost < *bc) {
            best = Some((candidate, cost));
        }
    }
    Ok(best.expect("samples >= 2"))
}
