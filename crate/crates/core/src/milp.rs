//! Linearized two-stage model and LP-format export.
//!
//! The only nonlinearity in the two-stage objective is the system survival
//! product `prod_i (b_i + a_i x_i)` with `a_i = Q_i(g_i,m) - Q_i(1,m)` and
//! `b_i = 1 - Q_i(g_i,m)`. Expanding it over subsets turns every monomial
//! `prod_{i in S} x_i` with `|S| >= 2` into a binary auxiliary `u_k^j`
//! (j = |S|, k the subset's rank) linked by the standard rows
//!
//!   u_k^j <= x_i                     for every i in the subset,
//!   u_k^j >= sum_{i in subset} x_i - (j - 1),
//!
//! while the empty and singleton monomials fold into the objective's
//! constant and per-variable coefficients. The result is exported in CPLEX
//! LP text format with a stable naming scheme: `x_i`, `y_i`, `z`, and
//! `u_<j>_<k>` where subsets of each cardinality are ranked in ascending
//! bitmask order (component 1 is the lowest bit).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemInstance;

/// `2^n` auxiliaries; keep the export tractable.
const MAX_COMPONENTS: usize = 15;

/// One auxiliary variable standing for a product of maintenance flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UVar {
    /// Bitmask of member components (bit i = component index i).
    pub members_mask: u32,
    /// Subset cardinality `j >= 2`.
    pub cardinality: usize,
    /// 1-based rank within its cardinality class, ascending mask order.
    pub rank: usize,
    /// Objective coefficient.
    pub coeff: f64,
}

/// The linearized two-stage model with collected objective coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MilpModel {
    pub n: usize,
    pub m: usize,
    /// Current observed states (drive the forced-CM rows).
    pub states: Vec<usize>,
    /// `a_i = Q_i(g_i, m) - Q_i(1, m)`.
    pub a: Vec<f64>,
    /// `b_i = 1 - Q_i(g_i, m)`.
    pub b: Vec<f64>,
    pub obj_const: f64,
    pub x_coeff: Vec<f64>,
    pub y_coeff: Vec<f64>,
    pub z_coeff: f64,
    pub u_vars: Vec<UVar>,
}

/// Build the linearized model. Guarded to `n <= 15`.
pub fn linearize(instance: &SystemInstance) -> Result<MilpModel> {
    let n = instance.len();
    if n > MAX_COMPONENTS {
        return Err(Error::Guard(format!(
            "linearization creates 2^n auxiliaries; n = {n} exceeds {MAX_COMPONENTS}"
        )));
    }
    let setup = instance.setup_cost();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        a.push(instance.failure_prob_current(i) - instance.failure_prob_new(i));
        b.push(1.0 - instance.failure_prob_current(i));
    }

    let b_all: f64 = b.iter().product();
    let mut obj_const = setup * (1.0 - b_all);
    let mut x_coeff = Vec::with_capacity(n);
    let mut y_coeff = Vec::with_capacity(n);
    for (i, c) in instance.components().iter().enumerate() {
        obj_const += instance.failure_prob_current(i) * c.cm_cost;
        let b_others: f64 = b
            .iter()
            .enumerate()
            .filter(|&(r, _)| r != i)
            .map(|(_, &v)| v)
            .product();
        x_coeff.push(c.pm_cost - a[i] * c.cm_cost - setup * a[i] * b_others);
        y_coeff.push(c.cm_cost - c.pm_cost);
    }

    let mut u_vars = Vec::new();
    for j in 2..=n {
        let mut rank = 0usize;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != j {
                continue;
            }
            rank += 1;
            let mut coeff = -setup;
            for i in 0..n {
                coeff *= if mask & (1 << i) != 0 { a[i] } else { b[i] };
            }
            u_vars.push(UVar {
                members_mask: mask,
                cardinality: j,
                rank,
                coeff,
            });
        }
    }

    Ok(MilpModel {
        n,
        m: instance.state_count(),
        states: instance.states(),
        a,
        b,
        obj_const,
        x_coeff,
        y_coeff,
        z_coeff: setup,
        u_vars,
    })
}

impl MilpModel {
    /// Expected auxiliary count: `2^n - n - 1`.
    pub fn expected_u_count(n: usize) -> usize {
        (1usize << n) - n - 1
    }

    pub fn u_name(u: &UVar) -> String {
        format!("u_{}_{}", u.cardinality, u.rank)
    }

    /// Objective value at a feasible binary assignment, with every auxiliary
    /// set consistently to the product of its member flags.
    pub fn evaluate(&self, x: &[bool], y: &[bool], z: bool) -> Result<f64> {
        if x.len() != self.n || y.len() != self.n {
            return Err(Error::Invalid(format!(
                "assignment length mismatch: expected {}",
                self.n
            )));
        }
        for i in 0..self.n {
            if x[i] && !z {
                return Err(Error::Invalid(format!("x_{} = 1 requires z = 1", i + 1)));
            }
            if y[i] && !x[i] {
                return Err(Error::Invalid(format!(
                    "y_{} = 1 requires x_{} = 1",
                    i + 1,
                    i + 1
                )));
            }
            if self.states[i] == self.m && !y[i] {
                return Err(Error::Invalid(format!(
                    "component {} is failed; y_{} must be 1",
                    i + 1,
                    i + 1
                )));
            }
        }
        let mut x_mask = 0u32;
        for (i, &xi) in x.iter().enumerate() {
            if xi {
                x_mask |= 1 << i;
            }
        }
        let mut value = self.obj_const + if z { self.z_coeff } else { 0.0 };
        for i in 0..self.n {
            if x[i] {
                value += self.x_coeff[i];
            }
            if y[i] {
                value += self.y_coeff[i];
            }
        }
        for u in &self.u_vars {
            if x_mask & u.members_mask == u.members_mask {
                value += u.coeff;
            }
        }
        Ok(value)
    }
}

fn push_term(out: &mut String, first: &mut bool, coeff: f64, name: &str) {
    if coeff == 0.0 {
        return;
    }
    if *first {
        if coeff < 0.0 {
            let _ = write!(out, "- {} {}", fmt_num(-coeff), name);
        } else {
            let _ = write!(out, "{} {}", fmt_num(coeff), name);
        }
        *first = false;
    } else if coeff < 0.0 {
        let _ = write!(out, " - {} {}", fmt_num(-coeff), name);
    } else {
        let _ = write!(out, " + {} {}", fmt_num(coeff), name);
    }
}

/// Shortest representation that round-trips through f64 parsing.
fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Render the model as CPLEX LP text. Output is deterministic: variables and
/// rows follow the fixed naming order, and coefficients print in shortest
/// round-trip form.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ two-stage maintenance model: {} components, {} states",
        model.n, model.m
    );
    out.push_str("Minimize\n obj: ");
    let mut first = true;
    for i in 0..model.n {
        push_term(
            &mut out,
            &mut first,
            model.x_coeff[i],
            &format!("x_{}", i + 1),
        );
    }
    for i in 0..model.n {
        push_term(
            &mut out,
            &mut first,
            model.y_coeff[i],
            &format!("y_{}", i + 1),
        );
    }
    push_term(&mut out, &mut first, model.z_coeff, "z");
    for u in &model.u_vars {
        push_term(&mut out, &mut first, u.coeff, &MilpModel::u_name(u));
    }
    if model.obj_const != 0.0 {
        if first {
            let _ = write!(out, "{}", fmt_num(model.obj_const));
        } else if model.obj_const < 0.0 {
            let _ = write!(out, " - {}", fmt_num(-model.obj_const));
        } else {
            let _ = write!(out, " + {}", fmt_num(model.obj_const));
        }
    } else if first {
        out.push('0');
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for i in 0..model.n {
        let _ = writeln!(out, " setup_{0}: x_{0} - z <= 0", i + 1);
    }
    for i in 0..model.n {
        // g_i (1 - y_i) <= m - 1, written as g_i y_i >= g_i - (m - 1)
        let g = model.states[i];
        let _ = writeln!(
            out,
            " force_cm_{}: {} y_{} >= {}",
            i + 1,
            g,
            i + 1,
            g as i64 - (model.m as i64 - 1)
        );
    }
    for i in 0..model.n {
        let _ = writeln!(out, " cm_link_{0}: y_{0} - x_{0} <= 0", i + 1);
    }
    for u in &model.u_vars {
        let name = MilpModel::u_name(u);
        for i in 0..model.n {
            if u.members_mask & (1 << i) != 0 {
                let _ = writeln!(out, " {}_ub_{}: {} - x_{} <= 0", name, i + 1, name, i + 1);
            }
        }
        let mut row = format!(" {}_lb: ", name);
        let mut first = true;
        for i in 0..model.n {
            if u.members_mask & (1 << i) != 0 {
                if first {
                    let _ = write!(row, "x_{}", i + 1);
                    first = false;
                } else {
                    let _ = write!(row, " + x_{}", i + 1);
                }
            }
        }
        let _ = writeln!(out, "{} - {} <= {}", row, name, u.cardinality - 1);
    }

    out.push_str("Binaries\n");
    let mut names = Vec::with_capacity(2 * model.n + 1 + model.u_vars.len());
    for i in 0..model.n {
        names.push(format!("x_{}", i + 1));
    }
    for i in 0..model.n {
        names.push(format!("y_{}", i + 1));
    }
    names.push("z".to_string());
    for u in &model.u_vars {
        names.push(MilpModel::u_name(u));
    }
    let _ = writeln!(out, " {}", names.join(" "));
    out.push_str("End\n");
    out
}
