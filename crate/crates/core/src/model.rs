//! System instance, first-stage partitions, and the two-stage cost function.
//!
//! A system of `n` independently degrading components shares a setup cost
//! `c_s` charged once per stage whenever any maintenance happens. At each
//! stage every failed component must be correctively maintained; functioning
//! components may be preventively maintained. Both repairs restore state 1.
//!
//! The two-stage problem reduces to choosing the first-stage partition
//! `(N0, N1)` of the component set (do-nothing / maintain): the last stage
//! has the closed-form optimal policy "repair exactly the failed", so the
//! expected second-stage cost is
//!
//!   V = sum_i f_i * c_cm_i + (1 - prod_i (1 - f_i)) * c_s,
//!   f_i = Q_i(1, m)      if i in N1,
//!   f_i = Q_i(g_i, m)    if i in N0,
//!
//! and the total two-stage cost adds the first-stage spend
//! `sum_{i in N1} c_pm_i + sum_{i failed} (c_cm_i - c_pm_i) + c_s * [N1 != 0]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::degradation::{GammaProcessParams, StateGrid, TransitionMatrix};
use crate::error::{Error, Result};
use crate::set::ComponentSet;

/// One component: costs, degradation model, and current observed state.
#[derive(Debug, Clone)]
pub struct ComponentSpec {
    /// 1-based identifier, used in file formats and reports.
    pub id: usize,
    /// Preventive maintenance cost.
    pub pm_cost: f64,
    /// Corrective maintenance cost.
    pub cm_cost: f64,
    /// Degradation parameters when the transition matrix was derived from a
    /// gamma process (absent for explicitly supplied matrices).
    pub gamma: Option<GammaProcessParams>,
    /// One-interval state transition matrix.
    pub transition: TransitionMatrix,
    /// Current observed state in `1..=m`.
    pub state: usize,
}

/// A multi-component system instance: the unit of all solver inputs.
#[derive(Debug, Clone)]
pub struct SystemInstance {
    components: Vec<ComponentSpec>,
    setup_cost: f64,
    m: usize,
    horizon: usize,
    inspection_interval: f64,
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Violation,
    Warning,
}

/// One validation finding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl Finding {
    fn violation(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Violation,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

impl SystemInstance {
    /// Assemble an instance from parts. Structural invariants are checked;
    /// atypical-but-legal regimes only produce warnings via [`Self::validate`].
    pub fn new(
        components: Vec<ComponentSpec>,
        setup_cost: f64,
        m: usize,
        horizon: usize,
        inspection_interval: f64,
    ) -> Result<Self> {
        let instance = Self {
            components,
            setup_cost,
            m,
            horizon,
            inspection_interval,
        };
        let violations: Vec<_> = instance
            .validate()
            .into_iter()
            .filter(|f| f.severity == Severity::Violation)
            .collect();
        if let Some(first) = violations.first() {
            return Err(Error::Invalid(format!(
                "{} ({} violation(s) total)",
                first.message,
                violations.len()
            )));
        }
        Ok(instance)
    }

    pub fn components(&self) -> &[ComponentSpec] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ComponentSpec {
        &self.components[i]
    }

    /// Number of components.
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn setup_cost(&self) -> f64 {
        self.setup_cost
    }

    /// Shared state count `m`.
    pub fn state_count(&self) -> usize {
        self.m
    }

    /// Number of decision stages.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn inspection_interval(&self) -> f64 {
        self.inspection_interval
    }

    /// Current observed states, one per component.
    pub fn states(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.state).collect()
    }

    /// Indices (0-based) of currently failed components.
    pub fn failed_set(&self) -> ComponentSet {
        let mut s = ComponentSet::empty(self.len());
        for (i, c) in self.components.iter().enumerate() {
            if c.state == self.m {
                s.insert(i);
            }
        }
        s
    }

    /// `Q_i(g_i, m)`: failure probability of component `i` from its current
    /// state if left alone.
    pub fn failure_prob_current(&self, i: usize) -> f64 {
        let c = &self.components[i];
        c.transition.failure_prob(c.state)
    }

    /// `Q_i(1, m)`: failure probability of component `i` after maintenance.
    pub fn failure_prob_new(&self, i: usize) -> f64 {
        self.components[i].transition.failure_prob(1)
    }

    /// A copy of this instance with a different stage count.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::Invalid(format!(
                "horizon must be >= 2, got {horizon}"
            )));
        }
        let mut clone = self.clone();
        clone.horizon = horizon;
        Ok(clone)
    }

    /// A copy of this instance with different observed states (used by the
    /// rolling-horizon loop and the multistage recursion).
    pub fn with_states(&self, states: &[usize]) -> Result<Self> {
        if states.len() != self.len() {
            return Err(Error::Invalid(format!(
                "expected {} states, got {}",
                self.len(),
                states.len()
            )));
        }
        let mut clone = self.clone();
        for (c, &g) in clone.components.iter_mut().zip(states.iter()) {
            if !(1..=self.m).contains(&g) {
                return Err(Error::Invalid(format!(
                    "state {g} out of range 1..={}",
                    self.m
                )));
            }
            c.state = g;
        }
        Ok(clone)
    }

    /// Check every type invariant; violations make the instance unusable,
    /// warnings flag atypical regimes (cm < pm, near-certain failure from
    /// new) that the model still handles.
    pub fn validate(&self) -> Vec<Finding> {
        let mut findings = Vec::new();
        if self.components.is_empty() {
            findings.push(Finding::violation("instance has no components"));
        }
        if self.m < 2 {
            findings.push(Finding::violation(format!(
                "state count must be >= 2, got {}",
                self.m
            )));
        }
        if self.horizon < 2 {
            findings.push(Finding::violation(format!(
                "horizon must be >= 2, got {}",
                self.horizon
            )));
        }
        if !(self.setup_cost.is_finite() && self.setup_cost >= 0.0) {
            findings.push(Finding::violation(format!(
                "setup cost must be nonnegative and finite, got {}",
                self.setup_cost
            )));
        }
        if !(self.inspection_interval.is_finite() && self.inspection_interval > 0.0) {
            findings.push(Finding::violation(format!(
                "inspection interval must be positive, got {}",
                self.inspection_interval
            )));
        }
        for c in &self.components {
            let tag = format!("component {}", c.id);
            if !(c.pm_cost.is_finite() && c.pm_cost >= 0.0) {
                findings.push(Finding::violation(format!(
                    "{tag}: pm cost must be nonnegative and finite, got {}",
                    c.pm_cost
                )));
            }
            if !(c.cm_cost.is_finite() && c.cm_cost >= 0.0) {
                findings.push(Finding::violation(format!(
                    "{tag}: cm cost must be nonnegative and finite, got {}",
                    c.cm_cost
                )));
            }
            if c.transition.state_count() != self.m {
                findings.push(Finding::violation(format!(
                    "{tag}: transition matrix has {} states, instance has {}",
                    c.transition.state_count(),
                    self.m
                )));
                continue;
            }
            if !(1..=self.m).contains(&c.state) {
                findings.push(Finding::violation(format!(
                    "{tag}: state out of range: {} not in 1..={}",
                    c.state, self.m
                )));
            }
            if let Err(e) = c.transition.validate() {
                findings.push(Finding::violation(format!("{tag}: {e}")));
            }
            if c.cm_cost < c.pm_cost {
                findings.push(Finding::warning(format!(
                    "{tag}: cm cost {} below pm cost {} (atypical regime)",
                    c.cm_cost, c.pm_cost
                )));
            }
            if c.transition.failure_prob(1) > 0.5 {
                findings.push(Finding::warning(format!(
                    "{tag}: failure probability from new is {} > 0.5 (degenerate regime)",
                    c.transition.failure_prob(1)
                )));
            }
            let anti_monotone =
                (1..self.m).any(|g| c.transition.failure_prob(g) < c.transition.failure_prob(1));
            if anti_monotone {
                findings.push(Finding::warning(format!(
                    "{tag}: some working state fails less often than a new unit; \
                     move-criteria optimality is not guaranteed on such matrices"
                )));
            }
        }
        findings
    }

    /// Optimal last-stage policy: correctively maintain exactly the failed
    /// components, nothing else.
    pub fn second_stage_policy(&self, states: &[usize]) -> StageDecision {
        let corrective: Vec<bool> = states.iter().map(|&g| g == self.m).collect();
        let setup = corrective.iter().any(|&y| y);
        StageDecision {
            maintain: corrective.clone(),
            corrective,
            setup,
        }
    }

    /// Cost of the closed-form last stage given realized states.
    pub fn last_stage_cost(&self, states: &[usize]) -> f64 {
        let mut cost = 0.0;
        let mut any = false;
        for (c, &g) in self.components.iter().zip(states.iter()) {
            if g == self.m {
                cost += c.cm_cost;
                any = true;
            }
        }
        if any {
            cost += self.setup_cost;
        }
        cost
    }

    /// Expected second-stage cost `V` of a feasible first-stage partition.
    pub fn expected_second_stage_cost(&self, partition: &Partition) -> Result<f64> {
        self.check_partition(partition)?;
        Ok(self.expected_second_stage_cost_unchecked(partition))
    }

    fn expected_second_stage_cost_unchecked(&self, partition: &Partition) -> f64 {
        let mut repair = 0.0;
        let mut survive_all = 1.0;
        for (i, c) in self.components.iter().enumerate() {
            let f = if partition.maintains(i) {
                c.transition.failure_prob(1)
            } else {
                c.transition.failure_prob(c.state)
            };
            repair += f * c.cm_cost;
            survive_all *= 1.0 - f;
        }
        repair + (1.0 - survive_all) * self.setup_cost
    }

    /// Total two-stage cost of a feasible partition: first-stage maintenance
    /// spend plus setup plus the expected second-stage cost.
    pub fn two_stage_cost(&self, partition: &Partition) -> Result<f64> {
        self.check_partition(partition)?;
        Ok(self.two_stage_cost_unchecked(partition))
    }

    pub(crate) fn two_stage_cost_unchecked(&self, partition: &Partition) -> f64 {
        let mut first = 0.0;
        let mut any = false;
        for (i, c) in self.components.iter().enumerate() {
            if partition.maintains(i) {
                first += c.pm_cost;
                any = true;
            }
            if c.state == self.m {
                first += c.cm_cost - c.pm_cost;
            }
        }
        if any {
            first += self.setup_cost;
        }
        first + self.expected_second_stage_cost_unchecked(partition)
    }

    /// Probability of jointly moving from `states` to `next_states` under a
    /// stage decision: the product of per-component row entries, with
    /// maintained components transitioning from state 1.
    pub fn node_transition_prob(
        &self,
        states: &[usize],
        decision: &StageDecision,
        next_states: &[usize],
    ) -> f64 {
        let mut p = 1.0;
        for (i, c) in self.components.iter().enumerate() {
            let from = if decision.maintain[i] { 1 } else { states[i] };
            p *= c.transition.prob(from, next_states[i]);
        }
        p
    }

    fn check_partition(&self, partition: &Partition) -> Result<()> {
        if partition.len() != self.len() {
            return Err(Error::Invalid(format!(
                "partition covers {} components, instance has {}",
                partition.len(),
                self.len()
            )));
        }
        if !partition.feasible_for(self) {
            return Err(Error::Infeasible(
                "every failed component must be maintained".into(),
            ));
        }
        Ok(())
    }
}

/// First-stage decision: the do-nothing set `N0` and maintenance set `N1`
/// partitioning the components. Feasible iff every failed component is
/// maintained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    maintain: ComponentSet,
}

impl Partition {
    /// All components in the do-nothing set.
    pub fn all_do_nothing(n: usize) -> Self {
        Self {
            maintain: ComponentSet::empty(n),
        }
    }

    /// All components in the maintenance set.
    pub fn all_maintain(n: usize) -> Self {
        Self {
            maintain: ComponentSet::full(n),
        }
    }

    /// Build from the maintenance set.
    pub fn from_maintain_set(maintain: ComponentSet) -> Self {
        Self { maintain }
    }

    /// Build from 0-based maintained indices.
    pub fn from_maintained_indices(n: usize, indices: &[usize]) -> Self {
        Self {
            maintain: ComponentSet::from_indices(n, indices),
        }
    }

    /// Build over `n <= 64` components from a bitmask of maintained indices.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self {
            maintain: ComponentSet::from_mask(n, mask),
        }
    }

    pub fn len(&self) -> usize {
        self.maintain.universe()
    }

    pub fn is_empty(&self) -> bool {
        self.maintain.universe() == 0
    }

    /// Is component `i` (0-based) in the maintenance set?
    pub fn maintains(&self, i: usize) -> bool {
        self.maintain.contains(i)
    }

    /// The maintenance set `N1`.
    pub fn n1(&self) -> &ComponentSet {
        &self.maintain
    }

    /// The do-nothing set `N0`.
    pub fn n0(&self) -> ComponentSet {
        self.maintain.complement()
    }

    pub fn maintain_count(&self) -> usize {
        self.maintain.len()
    }

    /// Move a component into the maintenance set.
    pub fn set_maintain(&mut self, i: usize) {
        self.maintain.insert(i);
    }

    /// Feasible iff every failed component is maintained.
    pub fn feasible_for(&self, instance: &SystemInstance) -> bool {
        instance.failed_set().is_subset_of(&self.maintain)
    }

    /// The stage decision this partition induces given observed states.
    pub fn to_decision(&self, instance: &SystemInstance) -> StageDecision {
        let m = instance.state_count();
        let maintain: Vec<bool> = (0..instance.len()).map(|i| self.maintains(i)).collect();
        let corrective: Vec<bool> = instance.components().iter().map(|c| c.state == m).collect();
        let setup = maintain.iter().any(|&x| x);
        StageDecision {
            maintain,
            corrective,
            setup,
        }
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        // 1-based ids in the serialized form
        let n1: Vec<usize> = self.maintain.iter().map(|i| i + 1).collect();
        let n0: Vec<usize> = self.n0().iter().map(|i| i + 1).collect();
        let mut s = serializer.serialize_struct("Partition", 2)?;
        s.serialize_field("n0", &n0)?;
        s.serialize_field("n1", &n1)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n0: Vec<usize>,
            n1: Vec<usize>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let n = raw.n0.len() + raw.n1.len();
        let mut maintain = ComponentSet::empty(n);
        for &id in &raw.n1 {
            if id == 0 || id > n {
                return Err(serde::de::Error::custom(format!(
                    "component id {id} out of range 1..={n}"
                )));
            }
            maintain.insert(id - 1);
        }
        for &id in &raw.n0 {
            if id == 0 || id > n || maintain.contains(id - 1) {
                return Err(serde::de::Error::custom(format!(
                    "n0/n1 must partition 1..={n}; id {id} repeated or out of range"
                )));
            }
        }
        Ok(Partition { maintain })
    }
}

/// Per-stage decision flags: `maintain` (x), `corrective` (y), `setup` (z).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDecision {
    pub maintain: Vec<bool>,
    pub corrective: Vec<bool>,
    pub setup: bool,
}

impl StageDecision {
    /// Stage cost: `sum c_pm x + sum (c_cm - c_pm) y + c_s z`.
    pub fn stage_cost(&self, instance: &SystemInstance) -> f64 {
        let mut cost = 0.0;
        for (i, c) in instance.components().iter().enumerate() {
            if self.maintain[i] {
                cost += c.pm_cost;
            }
            if self.corrective[i] {
                cost += c.cm_cost - c.pm_cost;
            }
        }
        if self.setup {
            cost += instance.setup_cost();
        }
        cost
    }

    /// Check the linking constraints: y <= x, x => z, failed => y.
    pub fn consistent_with(&self, states: &[usize], m: usize) -> bool {
        let n = self.maintain.len();
        if self.corrective.len() != n || states.len() != n {
            return false;
        }
        for (i, &g) in states.iter().enumerate() {
            if self.corrective[i] && !self.maintain[i] {
                return false;
            }
            if self.maintain[i] && !self.setup {
                return false;
            }
            if g == m && !self.corrective[i] {
                return false;
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Instance file format
// ---------------------------------------------------------------------------

fn default_interval() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct ComponentFile {
    id: usize,
    pm_cost: f64,
    cm_cost: f64,
    state: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<GammaProcessParams>,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    q: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    setup_cost: f64,
    m: usize,
    horizon: usize,
    #[serde(default = "default_interval")]
    inspection_interval: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure_threshold: Option<f64>,
    components: Vec<ComponentFile>,
}

impl SystemInstance {
    /// Parse an instance from its JSON document.
    ///
    /// Component transition matrices come from an explicit `"Q"` (which
    /// overrides gamma parameters) or are built from `"gamma"` plus the
    /// document's `failure_threshold`, `m`, and `inspection_interval`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let grid = match file.failure_threshold {
            Some(threshold) => Some(StateGrid::equal_width(threshold, file.m)?),
            None => None,
        };
        let mut components = Vec::with_capacity(file.components.len());
        for c in file.components {
            let transition = match (&c.q, &c.gamma) {
                (Some(rows), _) => TransitionMatrix::from_rows(rows.clone())?,
                (None, Some(gamma)) => {
                    let grid = grid.as_ref().ok_or_else(|| {
                        Error::Invalid(format!(
                            "component {}: gamma parameters require a failure_threshold",
                            c.id
                        ))
                    })?;
                    TransitionMatrix::from_gamma(gamma, grid, file.inspection_interval)?
                }
                (None, None) => {
                    return Err(Error::Invalid(format!(
                        "component {}: provide either gamma parameters or an explicit Q",
                        c.id
                    )))
                }
            };
            components.push(ComponentSpec {
                id: c.id,
                pm_cost: c.pm_cost,
                cm_cost: c.cm_cost,
                gamma: c.gamma,
                transition,
                state: c.state,
            });
        }
        SystemInstance::new(
            components,
            file.setup_cost,
            file.m,
            file.horizon,
            file.inspection_interval,
        )
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Serialize back to the instance document. Components built from gamma
    /// parameters keep them; explicitly supplied matrices are written as `Q`.
    pub fn to_json_string(&self) -> Result<String> {
        let file = InstanceFile {
            setup_cost: self.setup_cost,
            m: self.m,
            horizon: self.horizon,
            inspection_interval: self.inspection_interval,
            failure_threshold: None,
            components: self
                .components
                .iter()
                .map(|c| ComponentFile {
                    id: c.id,
                    pm_cost: c.pm_cost,
                    cm_cost: c.cm_cost,
                    state: c.state,
                    gamma: c.gamma,
                    q: Some((1..=self.m).map(|g| c.transition.row(g).to_vec()).collect()),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}
