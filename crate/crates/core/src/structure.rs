//! Structural facts about truncated distributions: coordinate-wise dominance
//! couplings, the tail bound for capped independent sums, and every link of
//! the revenue chain that bounds `Rev^b` by simple mechanisms.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::distributions::{cap_linf, condition_l1, DiscreteJointDistribution, WeaklyCorrelated};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation};
use crate::mechanism::{rev_budget, rev_unbudgeted};
use crate::rational::{self, int, Rational};
use crate::report::{Check, Report};
use crate::simple::{brev_budget, brev_unbudgeted, srev_budget_exact, srev_unbudgeted};

/// One mass transfer `from → to` with `to ≤ from` coordinate-wise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CouplingEntry {
    #[serde(with = "rational::serde_fraction_vec")]
    pub from: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    pub to: Vec<Rational>,
    #[serde(with = "rational::serde_fraction")]
    pub weight: Rational,
}

/// A joint distribution of `(x, y)` with `x ~ D1`, `y ~ D2` and `y ≤ x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coupling {
    pub entries: Vec<CouplingEntry>,
}

impl Coupling {
    /// Marginals equal `d1` and `d2` exactly and every pair is ordered.
    pub fn is_valid(&self, d1: &DiscreteJointDistribution, d2: &DiscreteJointDistribution) -> bool {
        let mut rows = vec![Rational::zero(); d1.len()];
        let mut cols = vec![Rational::zero(); d2.len()];
        for e in &self.entries {
            if !e.weight.is_positive() || !leq(&e.to, &e.from) {
                return false;
            }
            match (d1.position(&e.from), d2.position(&e.to)) {
                (Some(i), Some(k)) => {
                    rows[i] += &e.weight;
                    cols[k] += &e.weight;
                }
                _ => return false,
            }
        }
        rows.as_slice() == d1.masses() && cols.as_slice() == d2.masses()
    }
}

/// Certificate that no coupling exists: a set `Y` of points of `D2` whose
/// mass exceeds the `D1`-mass of everything that dominates some point of `Y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NotDominated {
    #[serde(serialize_with = "serialize_points")]
    pub witness: Vec<Vec<Rational>>,
    #[serde(with = "rational::serde_fraction")]
    pub witness_mass: Rational,
    #[serde(with = "rational::serde_fraction")]
    pub dominating_mass: Rational,
}

fn serialize_points<S: serde::Serializer>(
    pts: &[Vec<Rational>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(pts.len()))?;
    for t in pts {
        seq.serialize_element(&t.iter().map(rational::fmt).collect::<Vec<_>>())?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dominance {
    Dominated(Coupling),
    NotDominated(NotDominated),
}

impl Dominance {
    pub fn coupling(&self) -> Option<&Coupling> {
        match self {
            Dominance::Dominated(c) => Some(c),
            Dominance::NotDominated(_) => None,
        }
    }
}

/// `y ≤ x` coordinate-wise.
pub fn leq(y: &[Rational], x: &[Rational]) -> bool {
    y.iter().zip(x).all(|(a, b)| a <= b)
}

/// Mass of `d1` on points dominating some point of `set`.
fn dominating_mass(d1: &DiscreteJointDistribution, set: &[&Vec<Rational>]) -> Rational {
    d1.iter()
        .filter(|(x, _)| set.iter().any(|y| leq(y, x)))
        .fold(Rational::zero(), |acc, (_, q)| acc + q)
}

/// Decide whether `D1` coordinate-wise dominates `D2` (`D2 ⪯ D1`): is there a
/// coupling moving each draw of `D1` down onto a draw of `D2`?
///
/// Solved as a maximum transportation problem over ordered pairs. A value of
/// one yields the coupling; otherwise the row and column multipliers give a
/// violated Hall condition, which is re-verified directly.
pub fn check_dominance(
    d1: &DiscreteJointDistribution,
    d2: &DiscreteJointDistribution,
) -> Result<Dominance> {
    if d1.num_items() != d2.num_items() {
        return Err(Error::DimensionMismatch {
            expected: d1.num_items(),
            found: d2.num_items(),
        });
    }
    let pairs: Vec<(usize, usize)> = (0..d1.len())
        .flat_map(|i| (0..d2.len()).map(move |k| (i, k)))
        .filter(|&(i, k)| leq(&d2.support()[k], &d1.support()[i]))
        .collect();
    let mut lp = LinearProgram::new(pairs.len());
    for j in 0..pairs.len() {
        lp.set_objective_coeff(j, Rational::one());
    }
    for (i, q) in d1.masses().iter().enumerate() {
        let row = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.0 == i)
            .map(|(j, _)| (j, Rational::one()))
            .collect();
        lp.add_sparse_constraint(row, Relation::Le, q.clone())?;
    }
    for (k, q) in d2.masses().iter().enumerate() {
        let row = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.1 == k)
            .map(|(j, _)| (j, Rational::one()))
            .collect();
        lp.add_sparse_constraint(row, Relation::Le, q.clone())?;
    }
    let sol = lp::solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("transportation program reported {:?}", sol.status)));
    }
    let value = sol.value.clone().expect("optimal");
    if value == Rational::one() {
        let entries = pairs
            .iter()
            .zip(&sol.assignment)
            .filter(|(_, w)| w.is_positive())
            .map(|(&(i, k), w)| CouplingEntry {
                from: d1.support()[i].clone(),
                to: d2.support()[k].clone(),
                weight: w.clone(),
            })
            .collect();
        return Ok(Dominance::Dominated(Coupling { entries }));
    }

    // Column multipliers β: the set {β < θ} violates Hall's condition for a
    // suitable threshold θ.
    let beta = &sol.dual[d1.len()..];
    let mut thresholds: Vec<&Rational> = beta.iter().collect();
    thresholds.sort();
    thresholds.dedup();
    let candidates = thresholds
        .iter()
        .map(|t| Some(*t))
        .chain(std::iter::once(None));
    for theta in candidates {
        let set: Vec<&Vec<Rational>> = d2
            .support()
            .iter()
            .zip(beta)
            .filter(|(_, b)| theta.is_none_or(|t| *b < t))
            .map(|(y, _)| y)
            .collect();
        let witness_mass: Rational = d2
            .iter()
            .filter(|(y, _)| set.contains(y))
            .fold(Rational::zero(), |acc, (_, q)| acc + q);
        let dom = dominating_mass(d1, &set);
        if witness_mass > dom {
            return Ok(Dominance::NotDominated(NotDominated {
                witness: set.into_iter().cloned().collect(),
                witness_mass,
                dominating_mass: dom,
            }));
        }
    }
    Err(Error::Lp("no Hall violation found for an infeasible coupling".into()))
}

/// `Pr[‖v‖₁ ≥ x + y + c] ≤ Pr[‖v‖₁ ≥ x]·Pr[‖v‖₁ ≥ y]` for all positive
/// achievable sums `x, y`, and `Pr[‖v‖₁ ≥ (2k+1)c] ≤ q^k·Pr[‖v‖₁ ≥ c]` with
/// `q = Pr[‖v‖₁ ≥ c]` for every `k` up to the largest sum.
pub fn check_tail_bound(v: &DiscreteJointDistribution, c: &Rational) -> Result<Report> {
    if !v.is_independent() {
        return Err(Error::RequiresIndependence);
    }
    if !c.is_positive() || v.max_value() > *c {
        return Err(Error::InvalidArgument(
            "every coordinate must be at most the positive cap".into(),
        ));
    }
    let sums = v.l1_distribution();
    let grid: Vec<&Rational> = sums.values().iter().filter(|s| s.is_positive()).collect();
    let mut report = Report::new();
    let mut pairs_checked = 0usize;
    let mut worst: Option<Check> = None;
    for x in &grid {
        for y in &grid {
            let lhs = sums.survival(&(*x + *y + c));
            let rhs = sums.survival(x) * sums.survival(y);
            let check = Check::le("tail product bound", &lhs, &rhs).with_note(format!(
                "x = {}, y = {}",
                rational::fmt(x),
                rational::fmt(y)
            ));
            pairs_checked += 1;
            if worst.as_ref().is_none_or(|w| check.slack < w.slack) {
                worst = Some(check);
            }
        }
    }
    if let Some(w) = worst {
        report.push(w);
    }
    report.quantity("tail pairs checked", &int(pairs_checked as i64));

    let q = sums.survival(c);
    report.quantity("q", &q);
    let max_sum = sums.max_value().clone();
    let mut k = 0i64;
    loop {
        let level = int(2 * k + 1) * c;
        let lhs = sums.survival(&level);
        let rhs = num_traits::pow(q.clone(), k as usize) * &q;
        report.push(Check::le(format!("tail geometric bound k={k}"), &lhs, &rhs));
        if level > max_sum {
            break;
        }
        k += 1;
    }
    Ok(report)
}

/// The truncations used by the chain: `V'` caps each coordinate at `b`,
/// `V̂` conditions on `‖v‖₁ ≤ b/2`.
pub struct Truncations {
    pub capped: DiscreteJointDistribution,
    pub conditioned: Option<DiscreteJointDistribution>,
}

pub fn truncations(v: &DiscreteJointDistribution, b: &Rational) -> Result<Truncations> {
    let capped = cap_linf(v, b)?;
    let c = b / int(2);
    let conditioned = match condition_l1(v, &c) {
        Ok(d) => Some(d),
        Err(Error::EmptyConditioning) => None,
        Err(e) => return Err(e),
    };
    Ok(Truncations { capped, conditioned })
}

/// Verify every inequality of the chain from `Rev^b(V)` to simple mechanisms,
/// for both routes (capping each coordinate and conditioning the sum).
///
/// Links that need independent values are reported as skipped when `v` is a
/// general joint distribution.
pub fn check_theorem1_chain(v: &DiscreteJointDistribution, b: &Rational) -> Result<Report> {
    let independent = v.is_independent();
    const NEEDS_INDEPENDENCE: &str = "requires independent values";
    if !b.is_positive() {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    let mut r = Report::new();
    let Truncations { capped, conditioned } = truncations(v, b)?;
    let c = b / int(2);

    let rev_b = rev_budget(v, b)?.0;
    let srev_b = srev_budget_exact(v, b)?.0;
    let brev_b = brev_budget(v, b).0;
    r.quantity("Rev^b(V)", &rev_b);
    r.quantity("SRev^b(V)", &srev_b);
    r.quantity("BRev^b(V)", &brev_b);

    let rev_cap = rev_unbudgeted(&capped)?.0;
    let srev_cap = srev_unbudgeted(&capped).0;
    let brev_cap = brev_unbudgeted(&capped).0;
    let srev_b_cap = srev_budget_exact(&capped, b)?.0;
    let brev_b_cap = brev_budget(&capped, b).0;
    r.quantity("Rev(V')", &rev_cap);
    r.quantity("SRev(V')", &srev_cap);
    r.quantity("BRev(V')", &brev_cap);
    r.quantity("SRev^b(V')", &srev_b_cap);
    r.quantity("BRev^b(V')", &brev_b_cap);

    r.push(Check::le("simple pricing within optimum: SRev^b <= Rev^b", &srev_b, &rev_b));
    r.push(Check::le("simple pricing within optimum: BRev^b <= Rev^b", &brev_b, &rev_b));
    r.push(Check::le("revenue within budget: Rev^b <= b", &rev_b, b));

    r.push(Check::le(
        "capping: Rev^b(V) <= Rev(V') + BRev^b(V)",
        &rev_b,
        &(&rev_cap + &brev_b),
    ));

    let name_b = "small bundle revenue: BRev(V') <= 3 BRev^b(V')";
    let name_s = "small bundle revenue: SRev(V') <= SRev^b(V') + 4 BRev^b(V')";
    if !independent {
        r.push(Check::skipped(name_b, NEEDS_INDEPENDENCE));
        r.push(Check::skipped(name_s, NEEDS_INDEPENDENCE));
    } else if brev_b_cap < b / int(10) {
        r.push(Check::le(name_b, &brev_cap, &(int(3) * &brev_b_cap)));
        r.push(Check::le(name_s, &srev_cap, &(&srev_b_cap + int(4) * &brev_b_cap)));
    } else {
        r.push(Check::skipped(name_b, "hypothesis not met: BRev^b(V') >= b/10"));
        r.push(Check::skipped(name_s, "hypothesis not met: BRev^b(V') >= b/10"));
    }

    r.push(Check::le("capped monotonicity: BRev^b(V') <= BRev^b(V)", &brev_b_cap, &brev_b));
    r.push(Check::le(
        "capped monotonicity: SRev^b(V') <= 2 SRev^b(V)",
        &srev_b_cap,
        &(int(2) * &srev_b),
    ));

    let name = "unbudgeted simple mechanisms: Rev(V') <= 4 SRev(V') + 2 BRev(V')";
    if independent {
        r.push(Check::le(name, &rev_cap, &(int(4) * &srev_cap + int(2) * &brev_cap)));
    } else {
        r.push(Check::skipped(name, NEEDS_INDEPENDENCE));
    }

    match &conditioned {
        Some(hat) => {
            let rev_hat = rev_unbudgeted(hat)?.0;
            let brev_c_hat = brev_budget(hat, &c).0;
            let srev_c_hat = srev_budget_exact(hat, &c)?.0;
            r.quantity("Rev(V^)", &rev_hat);
            r.quantity("BRev^c(V^)", &brev_c_hat);
            r.quantity("SRev^c(V^)", &srev_c_hat);
            r.push(Check::le(
                "sum split: Rev^b(V) <= (b/c) BRev^b(V) + Rev(V^)",
                &rev_b,
                &(b / &c * &brev_b + &rev_hat),
            ));
            r.push(Check::le(
                "conditioned monotonicity: BRev^c(V^) <= BRev^b(V)",
                &brev_c_hat,
                &brev_b,
            ));
            let factor = rational::max(&int(1), &(int(2) * &c / b));
            r.push(Check::le(
                "conditioned monotonicity: SRev^c(V^) <= max(1, 2c/b) SRev^b(V)",
                &srev_c_hat,
                &(factor * &srev_b),
            ));
        }
        None => {
            // Every sum exceeds b/2, so the bundle at b/2 always sells.
            r.push(Check::le(
                "large sums: Rev^b(V) <= 2 BRev^b(V)",
                &rev_b,
                &(int(2) * &brev_b),
            ));
        }
    }

    if independent {
        r.extend(main_bound_checks(&rev_b, &srev_b, &brev_b));
    } else {
        r.push(Check::skipped("main bound: Rev^b <= 8 SRev^b + 24 BRev^b", NEEDS_INDEPENDENCE));
        r.push(Check::skipped("main bound: Rev^b <= 5 SRev^b + 6 BRev^b", NEEDS_INDEPENDENCE));
    }
    Ok(r)
}

fn main_bound_checks(rev_b: &Rational, srev_b: &Rational, brev_b: &Rational) -> Report {
    let mut r = Report::new();
    r.push(Check::le(
        "main bound: Rev^b <= 8 SRev^b + 24 BRev^b",
        rev_b,
        &(int(8) * srev_b + int(24) * brev_b),
    ));
    r.push(Check::le(
        "main bound: Rev^b <= 5 SRev^b + 6 BRev^b",
        rev_b,
        &(int(5) * srev_b + int(6) * brev_b),
    ));
    r
}

/// Both main-bound inequalities only, for instances where the rest of the
/// chain is not needed.
pub fn check_main_bound(v: &DiscreteJointDistribution, b: &Rational) -> Result<Report> {
    let mut r = Report::new();
    let rev_b = rev_budget(v, b)?.0;
    let srev_b = srev_budget_exact(v, b)?.0;
    let brev_b = brev_budget(v, b).0;
    r.quantity("Rev^b", &rev_b);
    r.quantity("SRev^b", &srev_b);
    r.quantity("BRev^b", &brev_b);
    r.extend(main_bound_checks(&rev_b, &srev_b, &brev_b));
    Ok(r)
}

/// The main bound with the better constants on a weakly correlated `V̂`,
/// which is correlated but closed under further conditioning of the sum.
pub fn check_weakly_correlated_bound(vhat: &WeaklyCorrelated, b: &Rational) -> Result<Report> {
    let v = vhat.dist();
    let mut r = Report::new();
    let rev_b = rev_budget(v, b)?.0;
    let srev_b = srev_budget_exact(v, b)?.0;
    let brev_b = brev_budget(v, b).0;
    r.quantity("Rev^b(V^)", &rev_b);
    r.quantity("SRev^b(V^)", &srev_b);
    r.quantity("BRev^b(V^)", &brev_b);
    r.push(Check::le(
        "weakly correlated bound: Rev^b(V^) <= 5 SRev^b(V^) + 6 BRev^b(V^)",
        &rev_b,
        &(int(5) * &srev_b + int(6) * &brev_b),
    ));
    Ok(r)
}

/// Conditioning on a smaller sum gives a dominated distribution, and any
/// conditioning is dominated by the original: `V|c1 ⪯ V|c2 ⪯ V`.
pub fn check_dominance_lemmas(
    v: &DiscreteJointDistribution,
    c1: &Rational,
    c2: &Rational,
) -> Result<Report> {
    if c1 > c2 {
        return Err(Error::InvalidArgument("c1 must not exceed c2".into()));
    }
    let lo = condition_l1(v, c1)?;
    let hi = condition_l1(v, c2)?;
    let mut r = Report::new();
    for (name, upper, lower) in [
        ("conditioning order: V|c1 below V|c2", &hi, &lo),
        ("conditioning below original: V|c1 below V", v, &lo),
        ("conditioning below original: V|c2 below V", v, &hi),
    ] {
        let check = match check_dominance(upper, lower)? {
            Dominance::Dominated(coupling) => {
                Check::holds(name, coupling.is_valid(upper, lower), None)
            }
            Dominance::NotDominated(w) => Check::holds(
                name,
                false,
                Some(format!(
                    "witness mass {} exceeds dominating mass {}",
                    rational::fmt(&w.witness_mass),
                    rational::fmt(&w.dominating_mass)
                )),
            ),
        };
        r.push(check);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{product, MarginalDistribution};
    use crate::rational::frac;

    fn ints(t: &[i64]) -> Vec<Rational> {
        t.iter().map(|&x| int(x)).collect()
    }

    fn point(t: &[i64]) -> DiscreteJointDistribution {
        DiscreteJointDistribution::new(t.len(), vec![ints(t)], vec![int(1)]).unwrap()
    }

    fn uniform(values: &[i64]) -> MarginalDistribution {
        let n = values.len() as i64;
        MarginalDistribution::new(ints(values), vec![frac(1, n); values.len()]).unwrap()
    }

    #[test]
    fn dominance_is_reflexive() {
        let v = product(&[uniform(&[0, 2]), uniform(&[1, 3])]).unwrap();
        let d = check_dominance(&v, &v).unwrap();
        assert!(d.coupling().unwrap().is_valid(&v, &v));
    }

    #[test]
    fn incomparable_points_are_not_dominated() {
        let a = point(&[1, 0]);
        let b = point(&[0, 1]);
        let Dominance::NotDominated(w) = check_dominance(&a, &b).unwrap() else {
            panic!("expected no coupling");
        };
        assert!(w.witness_mass > w.dominating_mass);
    }

    #[test]
    fn conditioning_couplings_exist() {
        let u = uniform(&[0, 2, 4]);
        let v = product(&[u.clone(), u]).unwrap();
        let lo = condition_l1(&v, &int(2)).unwrap();
        let hi = condition_l1(&v, &int(4)).unwrap();
        assert!(check_dominance(&hi, &lo).unwrap().coupling().unwrap().is_valid(&hi, &lo));
        let r = check_dominance_lemmas(&v, &int(2), &int(4)).unwrap();
        assert!(r.all_pass(), "{r:?}");
        let r = check_dominance_lemmas(&v, &int(2), &int(2)).unwrap();
        assert!(r.all_pass());
    }

    #[test]
    fn tail_bound_three_fair_bits() {
        let bit = uniform(&[0, 1]);
        let v = product(&[bit.clone(), bit.clone(), bit]).unwrap();
        let sums = v.l1_distribution();
        assert_eq!(sums.survival(&int(3)), frac(1, 8));
        assert!(sums.survival(&int(3)) <= sums.survival(&int(1)) * sums.survival(&int(1)));
        let r = check_tail_bound(&v, &int(1)).unwrap();
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn tail_bound_point_at_zero() {
        let v = product(&[MarginalDistribution::point(int(0)).unwrap()]).unwrap();
        assert!(check_tail_bound(&v, &int(1)).unwrap().all_pass());
    }

    #[test]
    fn chain_on_point_mass() {
        let v = product(&[
            MarginalDistribution::point(int(1)).unwrap(),
            MarginalDistribution::point(int(2)).unwrap(),
        ])
        .unwrap();
        let r = check_theorem1_chain(&v, &int(2)).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(r.get("Rev^b(V)"), Some(&int(2)));
        assert_eq!(r.get("Rev(V')"), Some(&int(3)));
    }

    #[test]
    fn chain_on_correlated_rows_skips_independence_links() {
        let rows = [ints(&[2, 0, 0]), ints(&[0, 1, 1]), ints(&[2, 1, 0])];
        let v = DiscreteJointDistribution::new(3, rows.to_vec(), vec![frac(1, 3); 3]).unwrap();
        let r = check_theorem1_chain(&v, &int(2)).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(r.get("Rev^b(V)"), Some(&int(2)));
        assert!(r.checks.iter().any(|c| c.status == crate::report::Status::Skipped));
    }

    #[test]
    fn chain_on_small_instance() {
        let v = product(&[uniform(&[0, 1, 3]), uniform(&[1, 2])]).unwrap();
        for b in [int(1), frac(5, 2), int(6)] {
            let r = check_theorem1_chain(&v, &b).unwrap();
            assert!(r.all_pass(), "{r:?}");
        }
    }
}
