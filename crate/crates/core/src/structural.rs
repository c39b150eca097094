//! Structural calculus of the two-stage model: standalone thresholds and the
//! move criteria that certify when shifting components between the do-nothing
//! and maintenance sets lowers total cost.
//!
//! For a feasible partition `(N0, N1)` and a nonempty `N ⊆ N0`, moving `N`
//! into the maintenance set strictly lowers cost iff `Δr(N0, N1, N) < 1`:
//!
//!   Δr = (Σ_{k∈N} ρ_k) / (r_N · p(N0, N1))        when N1 ≠ ∅,
//!   Δr = (1 + Σ_{k∈N} ρ_k) / (r_N · p(N0, N1))    when N1 = ∅,
//!
//! with
//!
//!   ρ_k = (c_pm,k − (Q_k(g_k, m) − Q_k(1, m)) · c_cm,k) / c_s,
//!   r_N = Π_{i∈N} (1 − Q_i(1, m)) / (1 − Q_i(g_i, m)) − 1,
//!   p(N0, N1) = Π_{i∈N0} (1 − Q_i(g_i, m)) · Π_{i∈N1} (1 − Q_i(1, m)).
//!
//! Symmetrically, moving a nonempty `N ⊆ N1` out of the maintenance set
//! strictly lowers cost iff `Δs(N0, N1, N) > 1`, with
//! `s_N = 1 − Π_{i∈N} (1 − Q_i(g_i, m)) / (1 − Q_i(1, m))` in the
//! denominator. The `1 + Σρ` numerator applies when the *retained*
//! maintenance set `N1 \ N` is empty: whether a setup charge survives the
//! move depends on what stays maintained afterwards. Both ratios are `+∞`
//! when their denominator term is nonpositive — in particular for brand-new
//! components, which are never worth maintaining.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComponentSpec, Partition, SystemInstance};
use crate::set::ComponentSet;

/// Standalone (no economic dependence) optimal decision of one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandaloneDecision {
    /// Maintain now, at the component's current state.
    pub maintain: bool,
    /// Smallest working state at which PM is standalone-optimal, or `m`
    /// when only failure triggers action.
    pub threshold_state: usize,
}

/// The pieces of a move criterion: `delta` compared against 1 decides the
/// move; the remaining fields expose the factors for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveEvaluation {
    /// Δr or Δs; may be `+∞`.
    pub delta: f64,
    /// Σ ρ_k over the moved set.
    pub rho_sum: f64,
    /// r_N or s_N.
    pub ratio_term: f64,
    /// Survival probability p(N0, N1) of the reference partition.
    pub survival: f64,
}

/// Standalone decision and PM threshold of a component facing the setup cost
/// alone: maintain iff failed, or `Q(g, m) > (c_pm + c_s)/(c_cm + c_s) + Q(1, m)`.
///
/// The threshold is found by direct scan over working states, which stays
/// correct for explicitly supplied matrices with non-monotone failure
/// columns.
pub fn standalone_decision(
    component: &ComponentSpec,
    setup_cost: f64,
) -> Result<StandaloneDecision> {
    let denom = component.cm_cost + setup_cost;
    if !(denom.is_finite() && denom > 0.0) {
        return Err(Error::Domain(format!(
            "standalone rule needs c_cm + c_s > 0, got {denom}"
        )));
    }
    let m = component.transition.state_count();
    let ratio = (component.pm_cost + setup_cost) / denom;
    let q_new = component.transition.failure_prob(1);
    let pm_optimal = |g: usize| component.transition.failure_prob(g) > ratio + q_new;

    let mut threshold_state = m;
    for g in 2..m {
        if pm_optimal(g) {
            threshold_state = g;
            break;
        }
    }
    let maintain = component.state == m || pm_optimal(component.state);
    Ok(StandaloneDecision {
        maintain,
        threshold_state,
    })
}

/// `ρ_k`: the component's first-stage maintenance premium net of the averted
/// corrective-repair risk, in units of the setup cost. May be negative.
pub fn rho(component: &ComponentSpec, setup_cost: f64) -> Result<f64> {
    if !(setup_cost.is_finite() && setup_cost > 0.0) {
        return Err(Error::Domain(format!(
            "rho requires a positive setup cost, got {setup_cost}"
        )));
    }
    let q_cur = component.transition.failure_prob(component.state);
    let q_new = component.transition.failure_prob(1);
    Ok((component.pm_cost - (q_cur - q_new) * component.cm_cost) / setup_cost)
}

/// `p(N0, N1)`: probability that no component fails in the second stage
/// given the first-stage partition.
pub fn survival_prob(instance: &SystemInstance, partition: &Partition) -> f64 {
    let mut p = 1.0;
    for i in 0..instance.len() {
        let f = if partition.maintains(i) {
            instance.failure_prob_new(i)
        } else {
            instance.failure_prob_current(i)
        };
        p *= 1.0 - f;
    }
    p
}

fn check_member_set(instance: &SystemInstance, members: &ComponentSet) -> Result<()> {
    if members.universe() != instance.len() {
        return Err(Error::Invalid(format!(
            "set universe {} does not match instance size {}",
            members.universe(),
            instance.len()
        )));
    }
    if members.is_empty() {
        return Err(Error::Invalid("move set must be nonempty".into()));
    }
    Ok(())
}

/// `r_N = Π (1 − Q_i(1,m)) / (1 − Q_i(g_i,m)) − 1`; `+∞` when a member is
/// failure-certain from its current state.
pub fn r_value(instance: &SystemInstance, members: &ComponentSet) -> Result<f64> {
    check_member_set(instance, members)?;
    let mut prod = 1.0;
    for i in members.iter() {
        prod *= survival_ratio_up(instance, i);
    }
    Ok(prod - 1.0)
}

/// `s_N = 1 − Π (1 − Q_i(g_i,m)) / (1 − Q_i(1,m))`.
pub fn s_value(instance: &SystemInstance, members: &ComponentSet) -> Result<f64> {
    check_member_set(instance, members)?;
    let mut prod = 1.0;
    for i in members.iter() {
        prod *= survival_ratio_down(instance, i);
    }
    Ok(1.0 - prod)
}

/// (1 − Q(1,m)) / (1 − Q(g,m)) with the 0/0 case pinned to 1.
pub(crate) fn survival_ratio_up(instance: &SystemInstance, i: usize) -> f64 {
    let num = 1.0 - instance.failure_prob_new(i);
    let den = 1.0 - instance.failure_prob_current(i);
    if num == den {
        1.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// (1 − Q(g,m)) / (1 − Q(1,m)) with the 0/0 case pinned to 1.
pub(crate) fn survival_ratio_down(instance: &SystemInstance, i: usize) -> f64 {
    let num = 1.0 - instance.failure_prob_current(i);
    let den = 1.0 - instance.failure_prob_new(i);
    if num == den {
        1.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Shared final step of both criteria: `+∞` whenever the denominator term is
/// not strictly positive.
pub(crate) fn delta_from_parts(
    rho_sum: f64,
    ratio_term: f64,
    survival: f64,
    charge_setup: bool,
) -> f64 {
    let numerator = if charge_setup { 1.0 + rho_sum } else { rho_sum };
    // NaN-propagating comparisons are deliberate: a nonpositive (or
    // undefined) denominator term sends the criterion to +inf
    if ratio_term.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || survival.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
    {
        return f64::INFINITY;
    }
    numerator / (ratio_term * survival)
}

pub(crate) fn rho_sum_over(instance: &SystemInstance, members: &ComponentSet) -> Result<f64> {
    let mut sum = 0.0;
    for i in members.iter() {
        sum += rho(instance.component(i), instance.setup_cost())?;
    }
    Ok(sum)
}

/// Δr criterion: moving `members ⊆ N0` into the maintenance set strictly
/// lowers the two-stage cost iff the returned delta is `< 1`.
pub fn delta_r(
    instance: &SystemInstance,
    partition: &Partition,
    members: &ComponentSet,
) -> Result<MoveEvaluation> {
    check_member_set(instance, members)?;
    if !members.is_disjoint_from(partition.n1()) {
        return Err(Error::Invalid(
            "delta_r set must lie inside the do-nothing set".into(),
        ));
    }
    let rho_sum = rho_sum_over(instance, members)?;
    let ratio_term = r_value(instance, members)?;
    let survival = survival_prob(instance, partition);
    let charge_setup = partition.n1().is_empty();
    Ok(MoveEvaluation {
        delta: delta_from_parts(rho_sum, ratio_term, survival, charge_setup),
        rho_sum,
        ratio_term,
        survival,
    })
}

/// Δs criterion: moving `members ⊆ N1` into the do-nothing set strictly
/// lowers the two-stage cost iff the returned delta is `> 1`.
pub fn delta_s(
    instance: &SystemInstance,
    partition: &Partition,
    members: &ComponentSet,
) -> Result<MoveEvaluation> {
    check_member_set(instance, members)?;
    if !members.is_subset_of(partition.n1()) {
        return Err(Error::Invalid(
            "delta_s set must lie inside the maintenance set".into(),
        ));
    }
    let rho_sum = rho_sum_over(instance, members)?;
    let ratio_term = s_value(instance, members)?;
    let survival = survival_prob(instance, partition);
    // setup charge branch tests the retained maintenance set N1 \ N
    let charge_setup = partition.maintain_count() == members.len();
    Ok(MoveEvaluation {
        delta: delta_from_parts(rho_sum, ratio_term, survival, charge_setup),
        rho_sum,
        ratio_term,
        survival,
    })
}

/// Shortcut: when every component's standalone decision is "maintain", the
/// all-maintain partition is optimal for the full problem.
pub fn prop1_shortcut(instance: &SystemInstance) -> Result<Option<Partition>> {
    for c in instance.components() {
        if !standalone_decision(c, instance.setup_cost())?.maintain {
            return Ok(None);
        }
    }
    Ok(Some(Partition::all_maintain(instance.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::TransitionMatrix;
    use crate::model::ComponentSpec;

    /// 3-state component with prescribed failure probabilities from states 1
    /// and 2.
    fn component(pm: f64, cm: f64, state: usize, q_new: f64, q_cur: f64) -> ComponentSpec {
        let rows = vec![
            vec![1.0 - q_new, 0.0, q_new],
            vec![0.0, 1.0 - q_cur, q_cur],
            vec![0.0, 0.0, 1.0],
        ];
        ComponentSpec {
            id: 1,
            pm_cost: pm,
            cm_cost: cm,
            gamma: None,
            transition: TransitionMatrix::from_rows(rows).unwrap(),
            state,
        }
    }

    fn instance(specs: Vec<ComponentSpec>, setup: f64) -> SystemInstance {
        let specs: Vec<ComponentSpec> = specs
            .into_iter()
            .enumerate()
            .map(|(i, mut c)| {
                c.id = i + 1;
                c
            })
            .collect();
        SystemInstance::new(specs, setup, 3, 2, 1.0).unwrap()
    }

    #[test]
    fn standalone_rule_examples() {
        // failed component: always maintain
        let c = component(1.0, 10.0, 3, 0.0, 0.3);
        assert!(standalone_decision(&c, 20.0).unwrap().maintain);

        // new component: the condition is unsatisfiable at state 1
        let c = component(1.0, 10.0, 1, 0.0, 0.3);
        assert!(!standalone_decision(&c, 20.0).unwrap().maintain);

        // direct substitution: ratio = 21/30 = 0.7, maintain iff Q(g,m) > 0.7
        let c = component(1.0, 10.0, 2, 0.0, 0.71);
        let d = standalone_decision(&c, 20.0).unwrap();
        assert!(d.maintain);
        assert_eq!(d.threshold_state, 2);
        let c = component(1.0, 10.0, 2, 0.0, 0.69);
        let d = standalone_decision(&c, 20.0).unwrap();
        assert!(!d.maintain);
        assert_eq!(d.threshold_state, 3);
    }

    #[test]
    fn rho_examples() {
        // (1 - 0.3*10)/20 = -0.1
        let c = component(1.0, 10.0, 2, 0.0, 0.3);
        assert!((rho(&c, 20.0).unwrap() + 0.1).abs() < 1e-15);
        // state 1: rho = c_pm / c_s > 0
        let c = component(1.0, 10.0, 1, 0.05, 0.3);
        assert!((rho(&c, 20.0).unwrap() - 1.0 / 20.0).abs() < 1e-15);
        // free PM with positive averted risk: negative
        let c = component(0.0, 10.0, 2, 0.0, 0.3);
        assert!(rho(&c, 20.0).unwrap() < 0.0);
        // zero setup cost rejected
        assert!(rho(&c, 0.0).is_err());
    }

    #[test]
    fn survival_prob_products() {
        let inst = instance(
            vec![
                component(1.0, 10.0, 2, 0.0, 0.3),
                component(1.0, 10.0, 2, 0.05, 0.4),
                component(1.0, 10.0, 2, 0.1, 0.5),
            ],
            20.0,
        );
        let p = survival_prob(&inst, &Partition::all_do_nothing(3));
        assert!((p - 0.7 * 0.6 * 0.5).abs() < 1e-12);
        let p = survival_prob(&inst, &Partition::all_maintain(3));
        assert!((p - 1.0 * 0.95 * 0.9).abs() < 1e-12);
        let p = survival_prob(&inst, &Partition::from_maintained_indices(3, &[1]));
        assert!((p - 0.7 * 0.95 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn r_and_s_values() {
        let inst = instance(vec![component(1.0, 10.0, 2, 0.0, 0.3)], 20.0);
        let set = ComponentSet::from_indices(1, &[0]);
        let r = r_value(&inst, &set).unwrap();
        let s = s_value(&inst, &set).unwrap();
        assert!((r - (1.0 / 0.7 - 1.0)).abs() < 1e-12);
        assert!((s - 0.3).abs() < 1e-12);
        // identity s = r / (1 + r)
        assert!((s - r / (1.0 + r)).abs() < 1e-12);

        // all members effectively new: both zero
        let inst = instance(vec![component(1.0, 10.0, 1, 0.1, 0.4)], 20.0);
        let set = ComponentSet::from_indices(1, &[0]);
        assert_eq!(r_value(&inst, &set).unwrap(), 0.0);
        assert_eq!(s_value(&inst, &set).unwrap(), 0.0);

        // empty set rejected
        assert!(r_value(&inst, &ComponentSet::empty(1)).is_err());
    }

    #[test]
    fn delta_r_never_maintains_new() {
        let inst = instance(
            vec![
                component(1.0, 10.0, 1, 0.0, 0.3),
                component(1.0, 10.0, 2, 0.05, 0.4),
            ],
            20.0,
        );
        let partition = Partition::from_maintained_indices(2, &[1]);
        let eval = delta_r(&inst, &partition, &ComponentSet::from_indices(2, &[0])).unwrap();
        assert!(eval.delta.is_infinite() && eval.delta > 0.0);
    }

    #[test]
    fn delta_r_worked_example() {
        // rho = -0.1, r = 0.428571.., p = 0.7 * 0.95 = 0.665
        let inst = instance(
            vec![
                component(1.0, 10.0, 2, 0.0, 0.3),
                component(1.0, 10.0, 1, 0.05, 0.4),
            ],
            20.0,
        );
        let partition = Partition::from_maintained_indices(2, &[1]);
        let eval = delta_r(&inst, &partition, &ComponentSet::from_indices(2, &[0])).unwrap();
        assert!((eval.rho_sum + 0.1).abs() < 1e-12);
        assert!((eval.ratio_term - (1.0 / 0.7 - 1.0)).abs() < 1e-12);
        assert!((eval.survival - 0.665).abs() < 1e-12);
        let expected = -0.1 / ((1.0 / 0.7 - 1.0) * 0.665);
        assert!((eval.delta - expected).abs() < 1e-12);
        assert!(eval.delta < 1.0);
    }

    #[test]
    fn delta_s_moves_new_components_out() {
        let inst = instance(
            vec![
                component(1.0, 10.0, 1, 0.0, 0.3),
                component(1.0, 10.0, 2, 0.05, 0.4),
            ],
            20.0,
        );
        let partition = Partition::from_maintained_indices(2, &[0, 1]);
        let eval = delta_s(&inst, &partition, &ComponentSet::from_indices(2, &[0])).unwrap();
        assert!(eval.delta.is_infinite());
    }

    #[test]
    fn delta_set_membership_enforced() {
        let inst = instance(
            vec![
                component(1.0, 10.0, 2, 0.0, 0.3),
                component(1.0, 10.0, 2, 0.05, 0.4),
            ],
            20.0,
        );
        let partition = Partition::from_maintained_indices(2, &[1]);
        // component 1 is in N1, not valid for delta_r
        assert!(delta_r(&inst, &partition, &ComponentSet::from_indices(2, &[1])).is_err());
        // component 0 is in N0, not valid for delta_s
        assert!(delta_s(&inst, &partition, &ComponentSet::from_indices(2, &[0])).is_err());
    }

    #[test]
    fn prop1_shortcut_cases() {
        // all failed -> all maintain
        let inst = instance(
            vec![
                component(1.0, 10.0, 3, 0.0, 0.3),
                component(1.0, 10.0, 3, 0.0, 0.4),
            ],
            20.0,
        );
        let p = prop1_shortcut(&inst).unwrap().unwrap();
        assert_eq!(p, Partition::all_maintain(2));

        // a new component can never have standalone maintain = 1
        let inst = instance(
            vec![
                component(1.0, 10.0, 3, 0.0, 0.3),
                component(1.0, 10.0, 1, 0.0, 0.4),
            ],
            20.0,
        );
        assert!(prop1_shortcut(&inst).unwrap().is_none());
    }
}
