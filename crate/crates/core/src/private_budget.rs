//! Private budgets drawn from a discrete distribution independent of the
//! values, and the guarantee of the menu that is optimal for one public
//! budget near the mean.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteJointDistribution;
use crate::error::{Error, Result};
use crate::mechanism::{menu_best_response, rev_budget, Mechanism};
use crate::rational::{self, int, Rational};
use crate::report::{Check, Report};
use crate::simple::{
    brev_budget, separate_pricing_revenue, srev_budget_default_grid, srev_budget_exact,
};
use crate::structure::check_main_bound;

/// A discrete budget distribution `B` with positive support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBudget")]
pub struct BudgetDistribution {
    #[serde(with = "rational::serde_fraction_vec")]
    budgets: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    masses: Vec<Rational>,
}

#[derive(Deserialize)]
struct RawBudget {
    #[serde(with = "rational::serde_fraction_vec")]
    budgets: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    masses: Vec<Rational>,
}

impl TryFrom<RawBudget> for BudgetDistribution {
    type Error = Error;

    fn try_from(raw: RawBudget) -> Result<Self> {
        Self::new(raw.budgets, raw.masses)
    }
}

impl BudgetDistribution {
    pub fn new(budgets: Vec<Rational>, masses: Vec<Rational>) -> Result<Self> {
        if budgets.is_empty() || budgets.len() != masses.len() {
            return Err(Error::InvalidDistribution(
                "budgets and masses must be nonempty and of equal length".into(),
            ));
        }
        if budgets.iter().any(|b| !b.is_positive()) {
            return Err(Error::InvalidDistribution("budgets must be positive".into()));
        }
        if budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution(
                "budgets must be strictly increasing".into(),
            ));
        }
        if masses.iter().any(|q| !q.is_positive()) {
            return Err(Error::InvalidDistribution("masses must be positive".into()));
        }
        if !rational::sum(&masses).is_one() {
            return Err(Error::InvalidDistribution("masses must sum to 1".into()));
        }
        Ok(Self { budgets, masses })
    }

    pub fn point(b: Rational) -> Result<Self> {
        Self::new(vec![b], vec![Rational::one()])
    }

    pub fn budgets(&self) -> &[Rational] {
        &self.budgets
    }

    pub fn masses(&self) -> &[Rational] {
        &self.masses
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.budgets.iter().zip(&self.masses)
    }

    /// `Pr[b ≥ x]`.
    pub fn survival(&self, x: &Rational) -> Rational {
        self.iter()
            .filter(|(b, _)| *b >= x)
            .fold(Rational::zero(), |acc, (_, q)| acc + q)
    }

    /// Discrete hazard rates `g(b_i) / Pr[b ≥ b_i]` in support order.
    pub fn hazards(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.masses.len()];
        let mut tail = Rational::zero();
        for i in (0..self.masses.len()).rev() {
            tail += &self.masses[i];
            out[i] = &self.masses[i] / &tail;
        }
        out
    }
}

pub fn is_mhr(bd: &BudgetDistribution) -> bool {
    bd.hazards().windows(2).all(|w| w[0] <= w[1])
}

pub fn budget_mean(bd: &BudgetDistribution) -> Rational {
    bd.iter().fold(Rational::zero(), |acc, (b, q)| acc + b * q)
}

/// The public budget the menu is optimized for: `⌊b*⌋`, raised to the
/// smallest budget in the support when the floor falls below it. Every
/// budget at least this large can afford the whole menu.
pub fn reference_budget(bd: &BudgetDistribution) -> Rational {
    rational::max(&rational::floor(&budget_mean(bd)), &bd.budgets[0])
}

/// A rational enclosure `lo < e < hi`, from the Taylor series truncated
/// after `1/45!`; the tail is below `2/46!`, under `10^-57`.
pub fn e_enclosure() -> (Rational, Rational) {
    let mut lo = Rational::zero();
    let mut term = Rational::one();
    for k in 1..=46u32 {
        lo += &term;
        term /= Rational::from_integer(BigInt::from(k));
    }
    // `term` is now 1/46!.
    let hi = &lo + &term * int(2);
    (lo, hi)
}

/// `lhs ≥ rhs / (k·e)`, decided with the enclosure of `e`. The reported slack
/// `lhs − rhs/(k·e_lo)` is a certified lower bound on the true slack.
pub fn check_ge_over_e(
    name: &str,
    lhs: &Rational,
    rhs: &Rational,
    k: &Rational,
) -> Result<Check> {
    let (lo, hi) = e_enclosure();
    let cautious = lhs - rhs / (k * &lo);
    let hopeful = lhs - rhs / (k * &hi);
    let mut check = Check::le(name, &Rational::zero(), &cautious);
    if !check.pass && !hopeful.is_negative() && rhs.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "{name}: comparison falls inside the enclosure of e"
        )));
    }
    check.slack = Some(cautious);
    Ok(check)
}

/// `Pr[b ≥ ⌊b*⌋] ≥ 1/e`.
pub fn check_mhr_tail(bd: &BudgetDistribution) -> Result<Report> {
    if !is_mhr(bd) {
        return Err(Error::NotMhr);
    }
    let mean = budget_mean(bd);
    let tail = bd.survival(&rational::floor(&mean));
    let mut r = Report::new();
    r.quantity("b*", &mean);
    r.quantity("Pr[b >= floor(b*)]", &tail);
    r.push(check_ge_over_e("Pr[b >= floor(b*)] >= 1/e", &tail, &int(1), &int(1))?);
    Ok(r)
}

/// Revenue of a fixed menu when the buyer's budget is private.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrivateRevenue {
    #[serde(with = "rational::serde_fraction")]
    pub b_star: Rational,
    /// The budget the menu was optimized for.
    #[serde(with = "rational::serde_fraction")]
    pub reference: Rational,
    /// `Rev^{reference}(V)`.
    #[serde(with = "rational::serde_fraction")]
    pub reference_revenue: Rational,
    pub mechanism: Mechanism,
    /// `R(b, V)` for every budget in the support.
    #[serde(with = "rational::serde_fraction_vec")]
    pub per_budget: Vec<Rational>,
    /// `R(B, V) = Σ g(b) R(b, V)`.
    #[serde(with = "rational::serde_fraction")]
    pub value: Rational,
}

/// Expected payment when each type picks its favorite affordable option.
pub fn menu_revenue(mech: &Mechanism, v: &DiscreteJointDistribution, b: &Rational) -> Rational {
    v.iter().fold(Rational::zero(), |acc, (t, q)| {
        acc + mech.payment(menu_best_response(mech, t, b)) * q
    })
}

/// `R(B, V)` for `M*`, the optimal menu at the public budget
/// [`reference_budget`].
pub fn private_revenue_of_public_optimal(
    v: &DiscreteJointDistribution,
    bd: &BudgetDistribution,
) -> Result<PrivateRevenue> {
    let b_star = budget_mean(bd);
    let reference = reference_budget(bd);
    let (reference_revenue, mechanism) = rev_budget(v, &reference)?;
    let per_budget: Vec<Rational> = bd
        .budgets
        .iter()
        .map(|b| menu_revenue(&mechanism, v, b))
        .collect();
    let value = per_budget
        .iter()
        .zip(&bd.masses)
        .fold(Rational::zero(), |acc, (r, q)| acc + r * q);
    Ok(PrivateRevenue {
        b_star,
        reference,
        reference_revenue,
        mechanism,
        per_budget,
        value,
    })
}

/// `Σ g(b) Rev^b(V)`, the revenue of a seller who learns the budget; it
/// bounds the optimal private-budget revenue from above.
pub fn known_budget_revenue(
    v: &DiscreteJointDistribution,
    bd: &BudgetDistribution,
) -> Result<(Rational, Vec<Rational>)> {
    let revs: Vec<Rational> = bd
        .budgets
        .iter()
        .map(|b| rev_budget(v, b).map(|r| r.0))
        .collect::<Result<_>>()?;
    let total = revs
        .iter()
        .zip(&bd.masses)
        .fold(Rational::zero(), |acc, (r, q)| acc + r * q);
    Ok((total, revs))
}

/// The half-over-e guarantee of `M*` against `Σ g(b) Rev^b(V)`, with the
/// budget-comparison links at the exact mean `b*`.
pub fn check_2e_guarantee(v: &DiscreteJointDistribution, bd: &BudgetDistribution) -> Result<Report> {
    let mut r = check_mhr_tail(bd)?;
    let private = private_revenue_of_public_optimal(v, bd)?;
    let (upper, revs) = known_budget_revenue(v, bd)?;
    let b_star = &private.b_star;
    let rev_star = rev_budget(v, b_star)?.0;

    r.quantity("reference budget", &private.reference);
    r.quantity("Rev^{b*}(V)", &rev_star);
    r.quantity("R(B,V)", &private.value);
    r.quantity("RevB_upper", &upper);
    r.push(check_ge_over_e(
        "R(B,V) >= RevB_upper / (2e)",
        &private.value,
        &upper,
        &int(2),
    )?);
    r.push(Check::le("R(B,V) <= RevB_upper", &private.value, &upper));
    for (b, rev_b) in bd.budgets.iter().zip(&revs) {
        let bs = rational::fmt(b);
        if b < b_star {
            r.push(Check::le(format!("Rev^b <= Rev^{{b*}} at b={bs}"), rev_b, &rev_star));
        } else if b > b_star {
            r.push(Check::le(
                format!("Rev^b <= (b/b*) Rev^{{b*}} at b={bs}"),
                rev_b,
                &(b / b_star * &rev_star),
            ));
        }
    }
    for (b, rb) in bd.budgets.iter().zip(&private.per_budget) {
        if b >= &private.reference {
            r.push(Check::eq(
                format!("menu revenue constant above reference at b={}", rational::fmt(b)),
                rb,
                &private.reference_revenue,
            ));
        }
    }
    Ok(r)
}

/// Pretending the budget is the reference budget: the separate prices and the
/// bundle price optimal there, evaluated under the private budget, keep a
/// `1/e` fraction. The resulting ratio against `Σ g(b) Rev^b(V)` is recorded.
pub fn check_theorem2(
    v: &DiscreteJointDistribution,
    bd: &BudgetDistribution,
    grid_only: bool,
) -> Result<Report> {
    let mut r = check_mhr_tail(bd)?;
    let reference = reference_budget(bd);
    r.quantity("reference budget", &reference);
    let (srev_ref, prices) = if grid_only {
        srev_budget_default_grid(v, &reference)?
    } else {
        srev_budget_exact(v, &reference)?
    };
    let (brev_ref, bundle) = brev_budget(v, &reference);

    let mut s_proxy = Rational::zero();
    let mut b_proxy = Rational::zero();
    for (b, q) in bd.iter() {
        let s_b = separate_pricing_revenue(v, &prices, b)?;
        let b_b = if &bundle.price <= b {
            &bundle.price * v.l1_survival(&bundle.price)
        } else {
            Rational::zero()
        };
        if b >= &reference {
            let bs = rational::fmt(b);
            r.push(Check::le(format!("separate proxy at b={bs} >= SRev at reference"), &srev_ref, &s_b));
            r.push(Check::eq(format!("bundle proxy at b={bs} = BRev at reference"), &b_b, &brev_ref));
        }
        s_proxy += s_b * q;
        b_proxy += b_b * q;
    }
    let (upper, _) = known_budget_revenue(v, bd)?;
    r.quantity("SRev^{reference}(V)", &srev_ref);
    r.quantity("BRev^{reference}(V)", &brev_ref);
    r.quantity("SRev proxy", &s_proxy);
    r.quantity("BRev proxy", &b_proxy);
    r.quantity("RevB_upper", &upper);
    r.push(check_ge_over_e("SRev proxy >= SRev^{reference} / e", &s_proxy, &srev_ref, &int(1))?);
    r.push(check_ge_over_e("BRev proxy >= BRev^{reference} / e", &b_proxy, &brev_ref, &int(1))?);
    let best = rational::max(&s_proxy, &b_proxy);
    if upper.is_positive() {
        r.quantity("max(SRev proxy, BRev proxy) / RevB_upper", &(&best / &upper));
    }
    if !grid_only {
        r.extend(check_main_bound(v, &reference)?);
    }
    Ok(r)
}

/// Both private-budget reports.
pub fn check_private(
    v: &DiscreteJointDistribution,
    bd: &BudgetDistribution,
    grid_only: bool,
) -> Result<Report> {
    let mut r = check_2e_guarantee(v, bd)?;
    let t2 = check_theorem2(v, bd, grid_only)?;
    // The tail check already appears in the first report.
    r.checks
        .extend(t2.checks.into_iter().filter(|c| !c.name.starts_with("Pr[b")));
    for q in t2.quantities {
        if r.get(&q.name).is_none() {
            r.quantities.push(q);
        }
    }
    Ok(r)
}
