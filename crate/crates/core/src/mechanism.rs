//! The revenue-optimal truthful mechanism for a budgeted additive buyer.
//!
//! For each type `t` the program has allocation variables `π(t) ∈ [0,1]^m`
//! and a payment `p(t) ≤ b`, and maximizes `Σ f(t)p(t)` subject to
//! `π(t)·t − p(t) ≥ π(t')·t − p(t')` for every `t'` and `π(t)·t − p(t) ≥ 0`.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::distributions::DiscreteJointDistribution;
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation};
use crate::rational::{self, Rational};

/// Default cap on the number of types handed to the exact LP.
pub const DEFAULT_MAX_TYPES: usize = 64;

/// One menu entry, offered to (and chosen by) the type it is indexed by.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MenuOption {
    #[serde(rename = "type", with = "rational::serde_fraction_vec")]
    pub ty: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    pub allocation: Vec<Rational>,
    #[serde(with = "rational::serde_fraction")]
    pub payment: Rational,
}

impl MenuOption {
    pub fn utility(&self, t: &[Rational]) -> Rational {
        rational::dot(&self.allocation, t) - &self.payment
    }
}

/// A menu indexed by type, with the implicit outside option `∅` (nothing
/// allocated, nothing paid).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mechanism {
    pub options: Vec<MenuOption>,
    #[serde(with = "rational::serde_fraction_opt")]
    pub budget: Option<Rational>,
}

/// What a buyer picks from a menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Outside,
    Option(usize),
}

impl Mechanism {
    pub fn payment(&self, choice: Choice) -> Rational {
        match choice {
            Choice::Outside => Rational::zero(),
            Choice::Option(i) => self.options[i].payment.clone(),
        }
    }

    /// Expected payment when every type takes its own option.
    pub fn revenue(&self, v: &DiscreteJointDistribution) -> Rational {
        v.iter()
            .zip(&self.options)
            .fold(Rational::zero(), |acc, ((_, q), o)| acc + q * &o.payment)
    }

    /// Check box, budget, individual rationality and incentive compatibility
    /// exactly. Returns a description of the first violation found.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let zero = Rational::zero();
        let one = Rational::one();
        for (i, o) in self.options.iter().enumerate() {
            if o.allocation.iter().any(|x| *x < zero || *x > one) {
                return Err(format!("allocation of type {i} outside [0,1]"));
            }
            if let Some(b) = &self.budget {
                if o.payment > *b {
                    return Err(format!("payment of type {i} exceeds the budget"));
                }
            }
            let own = o.utility(&o.ty);
            if own.is_negative() {
                return Err(format!("type {i} has negative utility"));
            }
            for (k, other) in self.options.iter().enumerate() {
                if other.utility(&o.ty) > own {
                    return Err(format!("type {i} prefers the option of type {k}"));
                }
            }
        }
        Ok(())
    }
}

/// The option a buyer with values `t` and budget `b` picks: among affordable
/// options (payment ≤ b, `∅` always affordable) one of maximal utility; ties go
/// to the higher payment, then to the earliest type in support order, with `∅`
/// last.
pub fn menu_best_response(mech: &Mechanism, t: &[Rational], b: &Rational) -> Choice {
    let mut best = Choice::Outside;
    let mut best_key = (Rational::zero(), Rational::zero());
    for (i, o) in mech.options.iter().enumerate() {
        if o.payment > *b {
            continue;
        }
        let key = (o.utility(t), o.payment.clone());
        if best == Choice::Outside && key >= best_key || key > best_key {
            best = Choice::Option(i);
            best_key = key;
        }
    }
    best
}

/// How the incentive constraints enter the LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStrategy {
    /// All `|T|(|T|−1)` incentive rows up front.
    Full,
    /// Start from the participation rows and add violated incentive rows
    /// until the relaxation's optimum is incentive compatible. Gives the same
    /// optimal value as `Full`.
    Lazy,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub max_types: usize,
    pub strategy: RowStrategy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_types: DEFAULT_MAX_TYPES,
            strategy: RowStrategy::Lazy,
        }
    }
}

/// `Rev^b(V)` and an optimal menu.
pub fn rev_budget(v: &DiscreteJointDistribution, b: &Rational) -> Result<(Rational, Mechanism)> {
    rev_budget_with(v, b, &SolverConfig::default())
}

/// `Rev(V)`: the budget is set to `max ‖t‖₁`, which participation already
/// implies, so it never binds.
pub fn rev_unbudgeted(v: &DiscreteJointDistribution) -> Result<(Rational, Mechanism)> {
    rev_unbudgeted_with(v, &SolverConfig::default())
}

pub fn rev_unbudgeted_with(
    v: &DiscreteJointDistribution,
    config: &SolverConfig,
) -> Result<(Rational, Mechanism)> {
    let (value, mut mech) = rev_budget_with(v, &v.max_l1(), config)?;
    mech.budget = None;
    Ok((value, mech))
}

struct Layout {
    m: usize,
}

impl Layout {
    fn pi(&self, i: usize, j: usize) -> usize {
        i * (self.m + 1) + j
    }

    fn pay(&self, i: usize) -> usize {
        i * (self.m + 1) + self.m
    }
}

/// The row `π(k)·t_i − p(k) − π(i)·t_i + p(i) ≤ 0`.
fn ic_row(lay: &Layout, types: &[Vec<Rational>], i: usize, k: usize) -> Vec<(usize, Rational)> {
    let mut row = Vec::with_capacity(2 * lay.m + 2);
    for (j, x) in types[i].iter().enumerate() {
        if !x.is_zero() {
            row.push((lay.pi(k, j), x.clone()));
            row.push((lay.pi(i, j), -x.clone()));
        }
    }
    row.push((lay.pay(k), -Rational::one()));
    row.push((lay.pay(i), Rational::one()));
    row
}

pub fn rev_budget_with(
    v: &DiscreteJointDistribution,
    b: &Rational,
    config: &SolverConfig,
) -> Result<(Rational, Mechanism)> {
    if b.is_negative() {
        return Err(Error::InvalidArgument("budget must be nonnegative".into()));
    }
    let n = v.len();
    if n > config.max_types {
        return Err(Error::SupportTooLarge {
            size: n,
            limit: config.max_types,
        });
    }
    let m = v.num_items();
    let lay = Layout { m };
    let types = v.support();

    let mut lp = LinearProgram::new(n * (m + 1));
    for (i, q) in v.masses().iter().enumerate() {
        for j in 0..m {
            lp.set_bounds(lay.pi(i, j), Some(Rational::zero()), Some(Rational::one()));
        }
        lp.set_bounds(lay.pay(i), None, Some(b.clone()));
        lp.set_objective_coeff(lay.pay(i), q.clone());
    }
    for (i, t) in types.iter().enumerate() {
        let mut row: Vec<(usize, Rational)> = t
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(j, x)| (lay.pi(i, j), -x.clone()))
            .collect();
        row.push((lay.pay(i), Rational::one()));
        lp.add_sparse_constraint(row, Relation::Le, Rational::zero())?;
    }
    let mut added = vec![vec![false; n]; n];
    if config.strategy == RowStrategy::Full {
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    lp.add_sparse_constraint(ic_row(&lay, types, i, k), Relation::Le, Rational::zero())?;
                    added[i][k] = true;
                }
            }
        }
    }

    loop {
        let sol = lp::solve(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Lp(format!("revenue program reported {:?}", sol.status)));
        }
        let options: Vec<MenuOption> = (0..n)
            .map(|i| MenuOption {
                ty: types[i].clone(),
                allocation: (0..m).map(|j| sol.assignment[lay.pi(i, j)].clone()).collect(),
                payment: sol.assignment[lay.pay(i)].clone(),
            })
            .collect();

        // For each type, the most profitable deviation that the relaxation
        // does not yet forbid.
        let mut new_rows = 0;
        for i in 0..n {
            let own = options[i].utility(&types[i]);
            let mut worst: Option<(Rational, usize)> = None;
            for k in 0..n {
                if k == i || added[i][k] {
                    continue;
                }
                let gain = options[k].utility(&types[i]) - &own;
                if gain.is_positive() && worst.as_ref().is_none_or(|(g, _)| gain > *g) {
                    worst = Some((gain, k));
                }
            }
            if let Some((_, k)) = worst {
                lp.add_sparse_constraint(ic_row(&lay, types, i, k), Relation::Le, Rational::zero())?;
                added[i][k] = true;
                new_rows += 1;
            }
        }
        if new_rows == 0 {
            let value = sol.value.expect("optimal");
            debug_assert_eq!(lp.dual_bound(&sol.dual), Some(value.clone()));
            let mech = Mechanism {
                options,
                budget: Some(b.clone()),
            };
            mech.validate().map_err(Error::Lp)?;
            return Ok((value, mech));
        }
    }
}
