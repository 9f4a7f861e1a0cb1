//! Exact rational linear programming.
//!
//! A two-phase dense-tableau primal simplex with Bland's pivoting rule. Every
//! quantity is a [`Rational`], so the returned optimum satisfies its
//! constraints with zero residual and the dual certificate closes the duality
//! gap exactly.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hybrid::Num;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// A sparse row `Σ coeffs · x  (relation)  rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .fold(Rational::zero(), |acc, (j, a)| acc + a * &x[*j])
    }

    pub fn is_satisfied(&self, x: &[Rational]) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

/// Maximize `objective · x` subject to the rows and the per-variable bounds.
/// `None` bounds are infinite. New variables default to `[0, +∞)`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<Rational>,
    constraints: Vec<Constraint>,
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![Rational::zero(); num_vars],
            constraints: Vec::new(),
            lower: vec![Some(Rational::zero()); num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[Rational] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn lower(&self, j: usize) -> Option<&Rational> {
        self.lower[j].as_ref()
    }

    pub fn upper(&self, j: usize) -> Option<&Rational> {
        self.upper[j].as_ref()
    }

    pub fn set_objective_coeff(&mut self, j: usize, c: Rational) {
        self.objective[j] = c;
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<Rational>, upper: Option<Rational>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    /// Add a dense row; its width must match the number of variables.
    pub fn add_constraint(
        &mut self,
        coeffs: &[Rational],
        relation: Relation,
        rhs: Rational,
    ) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars(),
                found: coeffs.len(),
            });
        }
        let sparse = coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(j, a)| (j, a.clone()))
            .collect();
        self.constraints.push(Constraint {
            coeffs: sparse,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Add a sparse row. Repeated indices are summed.
    pub fn add_sparse_constraint(
        &mut self,
        coeffs: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> Result<()> {
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(coeffs.len());
        let mut sorted = coeffs;
        sorted.sort_by_key(|(j, _)| *j);
        for (j, a) in sorted {
            if j >= self.num_vars() {
                return Err(Error::DimensionMismatch {
                    expected: self.num_vars(),
                    found: j + 1,
                });
            }
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|(_, a)| !a.is_zero());
        self.constraints.push(Constraint {
            coeffs: merged,
            relation,
            rhs,
        });
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for j in 0..self.num_vars() {
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l > u {
                    return Err(Error::Lp(format!("variable {j} has lower bound above upper")));
                }
            }
        }
        Ok(())
    }

    /// True when `x` satisfies every row and bound exactly.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && self.constraints.iter().all(|c| c.is_satisfied(x))
            && (0..self.num_vars()).all(|j| {
                self.lower[j].as_ref().is_none_or(|l| &x[j] >= l)
                    && self.upper[j].as_ref().is_none_or(|u| &x[j] <= u)
            })
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        crate::rational::dot(&self.objective, x)
    }

    /// Upper bound on the optimum implied by row multipliers `y` (one per
    /// constraint), or `None` when `y` is not dual feasible.
    ///
    /// With `d = c − Aᵀy`, the bound is `bᵀy + Σ_j max(d_j·u_j, d_j·l_j)`;
    /// it requires `y ≥ 0` on `≤` rows, `y ≤ 0` on `≥` rows, and a finite
    /// bound on each side `d_j` pushes toward.
    pub fn dual_bound(&self, y: &[Rational]) -> Option<Rational> {
        if y.len() != self.constraints.len() {
            return None;
        }
        let mut d = self.objective.clone();
        let mut value = Rational::zero();
        for (row, yi) in self.constraints.iter().zip(y) {
            let sign_ok = match row.relation {
                Relation::Le => !yi.is_negative(),
                Relation::Ge => !yi.is_positive(),
                Relation::Eq => true,
            };
            if !sign_ok {
                return None;
            }
            if yi.is_zero() {
                continue;
            }
            value += &row.rhs * yi;
            for (j, a) in &row.coeffs {
                d[*j] -= a * yi;
            }
        }
        for (j, dj) in d.iter().enumerate() {
            if dj.is_positive() {
                value += dj * self.upper[j].as_ref()?;
            } else if dj.is_negative() {
                value += dj * self.lower[j].as_ref()?;
            }
        }
        Some(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value, when optimal.
    pub value: Option<Rational>,
    /// Primal assignment, when optimal.
    pub assignment: Vec<Rational>,
    /// One multiplier per constraint row, when optimal. Feeding it to
    /// [`LinearProgram::dual_bound`] reproduces `value` exactly.
    pub dual: Vec<Rational>,
}

impl LpSolution {
    fn status_only(status: LpStatus) -> Self {
        Self {
            status,
            value: None,
            assignment: Vec::new(),
            dual: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// `x = lower + col`
    Shifted { col: usize, lower: Rational },
    /// `x = pos − neg`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// `rows[i]` has `ncols + 1` entries; the last one is the right-hand side.
    rows: Vec<Vec<Num>>,
    /// Reduced costs `c_j − c_B B⁻¹ A_j`, plus the negated objective value in
    /// the last slot.
    obj: Vec<Num>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Num {
        &self.rows[i][self.ncols]
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let inv = self.rows[p][q].recip();
        for v in self.rows[p].iter_mut() {
            if !v.is_zero() {
                *v = v.mul(&inv);
            }
        }
        let nz: Vec<usize> = (0..=self.ncols)
            .filter(|&j| !self.rows[p][j].is_zero())
            .collect();
        let pivot_row = std::mem::take(&mut self.rows[p]);
        let rows = self.rows.iter_mut().chain(std::iter::once(&mut self.obj));
        for row in rows {
            if row.is_empty() || row[q].is_zero() {
                continue;
            }
            let factor = row[q].clone();
            for &j in &nz {
                row[j].sub_mul(&factor, &pivot_row[j]);
            }
        }
        self.rows[p] = pivot_row;
        self.basis[p] = q;
    }

    /// Reset the objective row for costs `c` over the current basis.
    fn load_objective(&mut self, c: &[Rational]) {
        let c: Vec<Num> = c.iter().map(Num::from_rational).collect();
        let mut obj = c.clone();
        obj.push(Num::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &c[b];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    obj[j].sub_mul(cb, v);
                }
            }
        }
        self.obj = obj;
    }

    /// Run Bland's-rule simplex on the loaded objective. Returns `false` when
    /// the objective is unbounded.
    fn optimize(&mut self, allowed: impl Fn(usize) -> bool) -> bool {
        loop {
            let entering = (0..self.ncols).find(|&j| allowed(j) && self.obj[j].is_positive());
            let Some(q) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Num)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][q];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i).div(a);
                let better = match &leave {
                    None => true,
                    Some((k, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((p, _)) = leave else {
                return false;
            };
            self.pivot(p, q);
        }
    }
}

/// Solve `lp` exactly. Infeasible and unbounded programs are reported through
/// [`LpSolution::status`]; only malformed input is an error.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    // Standard form: nonnegative columns, rows with nonnegative right-hand side.
    let mut maps = Vec::with_capacity(n);
    let mut nstruct = 0usize;
    let mut obj_struct: Vec<Rational> = Vec::new();
    let mut const_obj = Rational::zero();
    // (coeffs over structural columns, relation, rhs, original row index, sign)
    let mut std_rows: Vec<(Vec<(usize, Rational)>, Relation, Rational, Option<usize>)> =
        Vec::new();
    for j in 0..n {
        let c = &lp.objective[j];
        match (&lp.lower[j], &lp.upper[j]) {
            (Some(l), u) => {
                let col = nstruct;
                nstruct += 1;
                obj_struct.push(c.clone());
                const_obj += c * l;
                if let Some(u) = u {
                    std_rows.push((vec![(col, Rational::one())], Relation::Le, u - l, None));
                }
                maps.push(VarMap::Shifted {
                    col,
                    lower: l.clone(),
                });
            }
            (None, u) => {
                let (pos, neg) = (nstruct, nstruct + 1);
                nstruct += 2;
                obj_struct.push(c.clone());
                obj_struct.push(-c.clone());
                if let Some(u) = u {
                    std_rows.push((
                        vec![(pos, Rational::one()), (neg, -Rational::one())],
                        Relation::Le,
                        u.clone(),
                        None,
                    ));
                }
                maps.push(VarMap::Split { pos, neg });
            }
        }
    }
    for (r, row) in lp.constraints.iter().enumerate() {
        let mut coeffs = Vec::with_capacity(row.coeffs.len() + 1);
        let mut rhs = row.rhs.clone();
        for (j, a) in &row.coeffs {
            match &maps[*j] {
                VarMap::Shifted { col, lower } => {
                    rhs -= a * lower;
                    coeffs.push((*col, a.clone()));
                }
                VarMap::Split { pos, neg } => {
                    coeffs.push((*pos, a.clone()));
                    coeffs.push((*neg, -a.clone()));
                }
            }
        }
        std_rows.push((coeffs, row.relation, rhs, Some(r)));
    }

    // Column layout: structural | per-row slack or surplus | artificials.
    let nrows = std_rows.len();
    let mut kinds = vec![ColKind::Structural; nstruct];
    let mut slack_col = vec![None; nrows];
    for (i, (_, rel, _, _)) in std_rows.iter().enumerate() {
        if *rel != Relation::Eq {
            slack_col[i] = Some(kinds.len());
            kinds.push(ColKind::Slack);
        }
    }
    let mut flipped = vec![false; nrows];
    let mut identity_col = vec![0usize; nrows];
    let mut art_rows = Vec::new();
    for (i, (_, rel, rhs, _)) in std_rows.iter().enumerate() {
        flipped[i] = rhs.is_negative();
        let effective = match (rel, flipped[i]) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => *r,
        };
        if effective == Relation::Le {
            identity_col[i] = slack_col[i].expect("inequality row has a slack");
        } else {
            identity_col[i] = kinds.len();
            kinds.push(ColKind::Artificial);
            art_rows.push(i);
        }
    }
    let ncols = kinds.len();

    let mut rows = Vec::with_capacity(nrows);
    for (i, (coeffs, rel, rhs, _)) in std_rows.iter().enumerate() {
        let sign = if flipped[i] { -Rational::one() } else { Rational::one() };
        let mut row = vec![Rational::zero(); ncols + 1];
        for (col, a) in coeffs {
            row[*col] += a * &sign;
        }
        if let Some(s) = slack_col[i] {
            // +s for ≤, −s for ≥, before the flip.
            let base = if *rel == Relation::Le {
                Rational::one()
            } else {
                -Rational::one()
            };
            row[s] = base * &sign;
        }
        if kinds[identity_col[i]] == ColKind::Artificial {
            row[identity_col[i]] = Rational::one();
        }
        row[ncols] = rhs * &sign;
        rows.push(row.iter().map(Num::from_rational).collect());
    }

    let mut tab = Tableau {
        rows,
        obj: Vec::new(),
        basis: identity_col.clone(),
        kinds,
        ncols,
    };

    if !art_rows.is_empty() {
        let mut c1 = vec![Rational::zero(); ncols];
        for &i in &art_rows {
            c1[identity_col[i]] = -Rational::one();
        }
        tab.load_objective(&c1);
        let bounded = tab.optimize(|_| true);
        debug_assert!(bounded, "phase one is bounded by construction");
        if !tab.obj[ncols].is_zero() {
            return Ok(LpSolution::status_only(LpStatus::Infeasible));
        }
        // Drive zero-level artificials out of the basis where possible; rows
        // where that fails are redundant and stay inert.
        for i in 0..nrows {
            if tab.kinds[tab.basis[i]] != ColKind::Artificial {
                continue;
            }
            if let Some(q) =
                (0..ncols).find(|&j| tab.kinds[j] != ColKind::Artificial && !tab.rows[i][j].is_zero())
            {
                tab.pivot(i, q);
            }
        }
    }

    let mut c2 = obj_struct.clone();
    c2.resize(ncols, Rational::zero());
    tab.load_objective(&c2);
    let kinds = tab.kinds.clone();
    if !tab.optimize(|j| kinds[j] != ColKind::Artificial) {
        return Ok(LpSolution::status_only(LpStatus::Unbounded));
    }

    let mut colval = vec![Rational::zero(); ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        colval[b] = tab.rhs(i).to_rational();
    }
    let assignment: Vec<Rational> = maps
        .iter()
        .map(|m| match m {
            VarMap::Shifted { col, lower } => lower + &colval[*col],
            VarMap::Split { pos, neg } => &colval[*pos] - &colval[*neg],
        })
        .collect();
    let value = lp.objective_value(&assignment);
    debug_assert_eq!(value, -tab.obj[ncols].to_rational() + &const_obj);

    // y_i = c_B · B⁻¹ e_i; the identity column of row i holds B⁻¹ e_i.
    let mut dual = vec![Rational::zero(); lp.num_constraints()];
    for (i, (_, _, _, orig)) in std_rows.iter().enumerate() {
        let Some(r) = orig else { continue };
        let col = identity_col[i];
        let mut y = Rational::zero();
        for (k, &b) in tab.basis.iter().enumerate() {
            if !c2[b].is_zero() && !tab.rows[k][col].is_zero() {
                y += &c2[b] * tab.rows[k][col].to_rational();
            }
        }
        // The identity column is +e_i on the possibly negated row.
        if flipped[i] {
            y = -y;
        }
        dual[*r] = y;
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: Some(value),
        assignment,
        dual,
    })
}
