//! Independent brute-force oracles for the exact solvers.

use budgetlab::distributions::{product, DiscreteJointDistribution, MarginalDistribution};
use budgetlab::duality::ironed_virtuals;
use budgetlab::lp::{solve, LinearProgram, LpStatus, Relation};
use budgetlab::mechanism::{rev_budget, rev_unbudgeted};
use budgetlab::rational::{frac, int};
use budgetlab::simple::{
    buyer_knapsack, srev_budget_default_grid, srev_budget_exact, PriceVector,
};
use budgetlab::structure::{check_dominance, leq, Dominance};
use budgetlab::Rational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn marginal(values: &[i64], weights: &[i64]) -> MarginalDistribution {
    let total: i64 = weights.iter().sum();
    MarginalDistribution::from_pairs(
        values
            .iter()
            .zip(weights)
            .map(|(&x, &w)| (int(x), frac(w, total))),
    )
    .unwrap()
}

/// Up to three distinct values from `0..=max` with positive weights.
fn arb_marginal(max: i64) -> impl Strategy<Value = MarginalDistribution> {
    proptest::collection::btree_set(0..=max, 1..=3).prop_flat_map(|vals| {
        let vals: Vec<i64> = vals.into_iter().collect();
        let n = vals.len();
        proptest::collection::vec(1i64..=8, n).prop_map(move |w| marginal(&vals, &w))
    })
}

fn arb_product(items: std::ops::RangeInclusive<usize>, max: i64) -> impl Strategy<Value = DiscreteJointDistribution> {
    proptest::collection::vec(arb_marginal(max), items).prop_map(|ms| product(&ms).unwrap())
}

/// Solve a square system exactly by Gauss-Jordan elimination.
fn solve_square(mut a: Vec<Vec<Rational>>, mut rhs: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        rhs.swap(col, piv);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= &p;
        }
        rhs[col] /= &p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    let v = &a[col][c] * &f;
                    a[r][c] -= v;
                }
                let v = &rhs[col] * &f;
                rhs[r] -= v;
            }
        }
    }
    Some(rhs)
}

/// Maximum of `c·x` over `{A x ≤ b, 0 ≤ x ≤ u}` by enumerating every basis.
fn lp_by_vertices(c: &[i64], rows: &[(Vec<i64>, i64)], u: i64) -> Option<Rational> {
    let n = c.len();
    let mut hyper: Vec<(Vec<Rational>, Rational)> = rows
        .iter()
        .map(|(a, b)| (a.iter().map(|&x| int(x)).collect(), int(*b)))
        .collect();
    for j in 0..n {
        let mut e = vec![Rational::zero(); n];
        e[j] = Rational::one();
        hyper.push((e.clone(), Rational::zero()));
        hyper.push((e, int(u)));
    }
    let feasible = |x: &[Rational]| {
        x.iter().all(|v| !v.is_negative() && v <= &int(u))
            && rows.iter().all(|(a, b)| {
                a.iter().zip(x).fold(Rational::zero(), |s, (&ai, xi)| s + int(ai) * xi) <= int(*b)
            })
    };
    let mut best: Option<Rational> = None;
    let k = hyper.len();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = idx.iter().map(|&i| hyper[i].0.clone()).collect();
        let rhs = idx.iter().map(|&i| hyper[i].1.clone()).collect();
        if let Some(x) = solve_square(a, rhs) {
            if feasible(&x) {
                let val = c.iter().zip(&x).fold(Rational::zero(), |s, (&ci, xi)| s + int(ci) * xi);
                if best.as_ref().is_none_or(|b| &val > b) {
                    best = Some(val);
                }
            }
        }
        // Next combination of n indices out of k.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_matches_vertex_enumeration(
        c in proptest::collection::vec(-3i64..=5, 3),
        rows in proptest::collection::vec((proptest::collection::vec(-2i64..=3, 3), 0i64..=8), 1..=3),
    ) {
        let mut lp = LinearProgram::new(3);
        for (j, &cj) in c.iter().enumerate() {
            lp.set_objective_coeff(j, int(cj));
            lp.set_bounds(j, Some(int(0)), Some(int(4)));
        }
        for (a, b) in &rows {
            lp.add_constraint(&a.iter().map(|&x| int(x)).collect::<Vec<_>>(), Relation::Le, int(*b)).unwrap();
        }
        let sol = solve(&lp).unwrap();
        // The origin is feasible and the box is bounded.
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let value = sol.value.clone().unwrap();
        prop_assert_eq!(Some(value.clone()), lp_by_vertices(&c, &rows, 4));
        prop_assert!(lp.is_feasible(&sol.assignment));
        prop_assert_eq!(lp.objective_value(&sol.assignment), value.clone());
        prop_assert_eq!(lp.dual_bound(&sol.dual), Some(value));
    }
}

/// Knapsack revenue with an independent enumeration: the payment of a
/// utility-maximizing affordable bundle, taking the largest payment on ties.
fn oracle_payment(t: &[Rational], p: &[Rational], b: &Rational) -> Rational {
    let m = t.len();
    let mut best = (Rational::zero(), Rational::zero());
    for mask in 0..1usize << m {
        let (mut pay, mut val) = (Rational::zero(), Rational::zero());
        for j in 0..m {
            if mask >> j & 1 == 1 {
                pay += &p[j];
                val += &t[j];
            }
        }
        if &pay > b {
            continue;
        }
        let u = val - &pay;
        if u > best.0 || (u == best.0 && pay > best.1) {
            best = (u, pay);
        }
    }
    best.1
}

fn lattice_srev(v: &DiscreteJointDistribution, b: &Rational, step: &Rational) -> Rational {
    let m = v.num_items();
    let n = (b / step).to_integer().try_into().unwrap_or(0u64);
    let points: Vec<Rational> = (0..=n).map(|k| step * int(k as i64)).collect();
    let mut best = Rational::zero();
    let mut idx = vec![0usize; m];
    loop {
        let p: Vec<Rational> = idx.iter().map(|&k| points[k].clone()).collect();
        let rev = v
            .iter()
            .fold(Rational::zero(), |acc, (t, q)| acc + oracle_payment(t, &p, b) * q);
        if rev > best {
            best = rev;
        }
        let mut j = 0;
        loop {
            if j == m {
                return best;
            }
            idx[j] += 1;
            if idx[j] < points.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// With integer values and budget, every vertex of the price arrangement
    /// lies on the lattice of step `1/2` for two items, so the lattice
    /// optimum equals the exact optimum.
    #[test]
    fn exact_separate_pricing_matches_lattice_for_two_items(
        v in arb_product(2..=2, 4),
        b in 1i64..=6,
    ) {
        let b = int(b);
        let (exact, prices) = srev_budget_exact(&v, &b).unwrap();
        prop_assert_eq!(&exact, &lattice_srev(&v, &b, &frac(1, 2)));
        let achieved = v.iter().fold(Rational::zero(), |acc, (t, q)| {
            acc + oracle_payment(t, prices.prices(), &b) * q
        });
        prop_assert_eq!(achieved, exact.clone());
        prop_assert!(srev_budget_default_grid(&v, &b).unwrap().0 <= exact);
    }

    #[test]
    fn knapsack_matches_enumeration(
        t in proptest::collection::vec(0i64..=6, 1..=4),
        p in proptest::collection::vec(0i64..=6, 4),
        b in 0i64..=8,
    ) {
        let t: Vec<Rational> = t.iter().map(|&x| int(x)).collect();
        let p: Vec<Rational> = p[..t.len()].iter().map(|&x| int(x)).collect();
        let purchase = buyer_knapsack(&t, &PriceVector::new(p.clone()).unwrap(), &int(b)).unwrap();
        prop_assert_eq!(purchase.payment, oracle_payment(&t, &p, &int(b)));
    }
}

/// Three items need the finer lattice `1/12`; a few fixed cases keep it quick.
#[test]
fn exact_separate_pricing_matches_lattice_for_three_items() {
    let cases = [
        (vec![marginal(&[0, 2], &[1, 1]), marginal(&[1, 2], &[1, 2]), marginal(&[0, 1], &[3, 1])], 2),
        (vec![marginal(&[1, 3], &[1, 1]), marginal(&[0, 1], &[1, 1]), marginal(&[2], &[1])], 2),
        (vec![marginal(&[0, 1, 2], &[1, 2, 1]), marginal(&[1], &[1]), marginal(&[0, 2], &[2, 1])], 2),
    ];
    for (ms, b) in cases {
        let v = product(&ms).unwrap();
        let b = int(b);
        let exact = srev_budget_exact(&v, &b).unwrap().0;
        assert_eq!(exact, lattice_srev(&v, &b, &frac(1, 12)));
    }
}

/// Strassen: `D1` dominates `D2` iff every up-set of the joint support has at
/// least as much `D1`-mass as `D2`-mass.
fn dominates_by_upsets(d1: &DiscreteJointDistribution, d2: &DiscreteJointDistribution) -> bool {
    let mut pts: Vec<Vec<Rational>> = d1.support().iter().chain(d2.support()).cloned().collect();
    pts.sort();
    pts.dedup();
    let mass = |d: &DiscreteJointDistribution, set: &[&Vec<Rational>]| {
        d.iter()
            .filter(|(t, _)| set.contains(t))
            .fold(Rational::zero(), |acc, (_, q)| acc + q)
    };
    for mask in 0..1usize << pts.len() {
        let set: Vec<&Vec<Rational>> = (0..pts.len()).filter(|i| mask >> i & 1 == 1).map(|i| &pts[i]).collect();
        let upward = pts.iter().all(|x| set.contains(&x) || !set.iter().any(|y| leq(y, x)));
        if upward && mass(d1, &set) < mass(d2, &set) {
            return false;
        }
    }
    true
}

fn arb_joint() -> impl Strategy<Value = DiscreteJointDistribution> {
    proptest::collection::vec(((0i64..=2, 0i64..=2), 1i64..=4), 1..=4).prop_map(|pts| {
        let total: i64 = pts.iter().map(|p| p.1).sum();
        DiscreteJointDistribution::from_points(
            2,
            pts.into_iter().map(|((a, b), w)| (vec![int(a), int(b)], frac(w, total))),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dominance_matches_upset_enumeration(d1 in arb_joint(), d2 in arb_joint()) {
        let expected = dominates_by_upsets(&d1, &d2);
        match check_dominance(&d1, &d2).unwrap() {
            Dominance::Dominated(c) => {
                prop_assert!(expected);
                prop_assert!(c.is_valid(&d1, &d2));
            }
            Dominance::NotDominated(w) => {
                prop_assert!(!expected);
                let in_witness = |t: &Vec<Rational>| w.witness.contains(t);
                let d2_mass = d2.iter().filter(|(t, _)| in_witness(t)).fold(Rational::zero(), |a, (_, q)| a + q);
                let d1_mass = d1
                    .iter()
                    .filter(|(x, _)| w.witness.iter().any(|y| leq(y, x)))
                    .fold(Rational::zero(), |a, (_, q)| a + q);
                prop_assert_eq!(&d2_mass, &w.witness_mass);
                prop_assert_eq!(&d1_mass, &w.dominating_mass);
                prop_assert!(d1_mass < d2_mass);
            }
        }
    }
}

/// Ironed virtual values are the slopes of the least concave majorant of the
/// revenue curve `q ↦ a(q)·q` in quantile space, read from the top value down.
fn hull_slopes(values: &[Rational], masses: &[Rational]) -> Vec<Rational> {
    let n = values.len();
    // Points (q_k, R_k) with q_k = Pr[X ≥ a_k], from (0, 0) upward in q.
    let mut pts = vec![(Rational::zero(), Rational::zero())];
    let mut q = Rational::zero();
    for k in (0..n).rev() {
        q += &masses[k];
        pts.push((q.clone(), &values[k] * &q));
    }
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..pts.len() {
        while hull.len() >= 2 {
            let (a, b) = (&pts[hull[hull.len() - 2]], &pts[hull[hull.len() - 1]]);
            let c = &pts[i];
            // Drop b when it lies on or below the chord from a to c.
            let cross = (&b.0 - &a.0) * (&c.1 - &a.1) - (&b.1 - &a.1) * (&c.0 - &a.0);
            if !cross.is_negative() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    // Point index i ≥ 1 corresponds to value index n − i.
    let mut slopes = vec![Rational::zero(); n];
    for w in hull.windows(2) {
        let (a, b) = (&pts[w[0]], &pts[w[1]]);
        let s = (&b.1 - &a.1) / (&b.0 - &a.0);
        for i in w[0] + 1..=w[1] {
            slopes[n - i] = s.clone();
        }
    }
    slopes
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ironing_matches_concave_hull(
        vals in proptest::collection::btree_set(0i64..=20, 1..=6),
        seed in proptest::collection::vec(1i64..=12, 6),
    ) {
        let vals: Vec<i64> = vals.into_iter().collect();
        let m = marginal(&vals, &seed[..vals.len()]);
        let iv = ironed_virtuals(&m);
        prop_assert_eq!(&iv.ironed, &hull_slopes(m.values(), m.masses()));
        prop_assert!(iv.ironed.windows(2).all(|w| w[0] <= w[1]));
        for &(s, e) in &iv.runs {
            let raw: Rational = (s..=e).map(|k| &iv.masses[k] * &iv.raw[k]).sum();
            let ironed: Rational = (s..=e).map(|k| &iv.masses[k] * &iv.ironed[k]).sum();
            prop_assert_eq!(raw, ironed);
        }
    }

    #[test]
    fn single_item_revenue_is_the_best_posted_price(m in arb_marginal(9)) {
        let v = product(std::slice::from_ref(&m)).unwrap();
        let best = m
            .values()
            .iter()
            .map(|p| p * m.survival(p))
            .max()
            .unwrap();
        prop_assert_eq!(rev_unbudgeted(&v).unwrap().0, best);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn revenue_grows_with_budget_but_not_faster(v in arb_product(2..=2, 4)) {
        let budgets: Vec<Rational> = (1..=6).map(|k| frac(k, 2)).collect();
        let revs: Vec<Rational> = budgets.iter().map(|b| rev_budget(&v, b).unwrap().0).collect();
        for i in 1..budgets.len() {
            prop_assert!(revs[i - 1] <= revs[i]);
            prop_assert!(&revs[i] / &budgets[i] <= &revs[i - 1] / &budgets[i - 1]);
        }
        prop_assert!(revs.last().unwrap() <= &rev_unbudgeted(&v).unwrap().0);
    }
}
