//! Simple mechanisms: grand-bundle pricing and separate item pricing, with and
//! without a budget.
//!
//! Under item prices the buyer solves a knapsack problem: among bundles whose
//! total price fits the budget, buy one of maximal utility. Ties go to the
//! higher payment, then to a nonempty bundle, then to the lexicographically
//! smallest bundle.

use std::collections::HashSet;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::distributions::{l1, DiscreteJointDistribution, MarginalDistribution};
use crate::error::{Error, Result};
use crate::rational::{self, frac, int, Rational};

/// Largest item count for exhaustive bundle enumeration.
pub const MAX_KNAPSACK_ITEMS: usize = 20;

/// Per-item prices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PriceVector {
    #[serde(with = "rational::serde_fraction_vec")]
    prices: Vec<Rational>,
}

impl PriceVector {
    pub fn new(prices: Vec<Rational>) -> Result<Self> {
        if prices.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidArgument("prices must be nonnegative".into()));
        }
        Ok(Self { prices })
    }

    pub fn prices(&self) -> &[Rational] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// A price for the grand bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BundlePrice {
    #[serde(with = "rational::serde_fraction")]
    pub price: Rational,
}

/// The buyer's purchase under item pricing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Purchase {
    /// Sorted item indices.
    pub bundle: Vec<usize>,
    pub payment: Rational,
    pub utility: Rational,
}

fn bundle_items(mask: usize, m: usize) -> Vec<usize> {
    (0..m).filter(|j| mask >> j & 1 == 1).collect()
}

/// Exhaustive knapsack over all `2^m` bundles.
pub fn buyer_knapsack(t: &[Rational], prices: &PriceVector, b: &Rational) -> Result<Purchase> {
    let m = t.len();
    if prices.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: prices.len(),
        });
    }
    if m > MAX_KNAPSACK_ITEMS {
        return Err(Error::TooManyItems {
            items: m,
            limit: MAX_KNAPSACK_ITEMS,
        });
    }
    let mut best = Purchase {
        bundle: Vec::new(),
        payment: Rational::zero(),
        utility: Rational::zero(),
    };
    for mask in 1..(1usize << m) {
        let items = bundle_items(mask, m);
        let payment = rational::sum(items.iter().map(|&j| &prices.prices[j]));
        if payment > *b {
            continue;
        }
        let utility = items
            .iter()
            .fold(Rational::zero(), |acc, &j| acc + &t[j])
            - &payment;
        let better = match (utility.cmp(&best.utility), payment.cmp(&best.payment)) {
            (std::cmp::Ordering::Greater, _) => true,
            (std::cmp::Ordering::Equal, std::cmp::Ordering::Greater) => true,
            (std::cmp::Ordering::Equal, std::cmp::Ordering::Equal) => {
                best.bundle.is_empty() || items < best.bundle
            }
            _ => false,
        };
        if better {
            best = Purchase {
                bundle: items,
                payment,
                utility,
            };
        }
    }
    Ok(best)
}

/// Expected payment of a knapsack buyer with budget `b` facing `prices`.
pub fn separate_pricing_revenue(
    v: &DiscreteJointDistribution,
    prices: &PriceVector,
    b: &Rational,
) -> Result<Rational> {
    let mut total = Rational::zero();
    for (t, q) in v.iter() {
        total += buyer_knapsack(t, prices, b)?.payment * q;
    }
    Ok(total)
}

fn best_posted_price(
    candidates: impl IntoIterator<Item = Rational>,
    survival: impl Fn(&Rational) -> Rational,
) -> (Rational, Rational) {
    let mut best = (Rational::zero(), Rational::zero());
    let mut sorted: Vec<Rational> = candidates.into_iter().collect();
    sorted.sort();
    sorted.dedup();
    for p in sorted {
        let rev = &p * survival(&p);
        if rev > best.0 {
            best = (rev, p);
        }
    }
    best
}

/// `BRev^b(V)`: the best grand-bundle price `p ≤ b`. Candidates are the
/// distinct values of `‖t‖₁` up to `b`, plus `b`; the survival function of
/// `‖t‖₁` is a step function, so this set contains a maximizer. Ties go to the
/// lowest price.
pub fn brev_budget(v: &DiscreteJointDistribution, b: &Rational) -> (Rational, BundlePrice) {
    let sums = v.support().iter().map(|t| l1(t)).filter(|s| s <= b);
    let candidates = sums.chain(std::iter::once(b.clone()));
    let (value, price) = best_posted_price(candidates, |p| v.l1_survival(p));
    (value, BundlePrice { price })
}

/// `BRev(V)`: the best grand-bundle price with no budget.
pub fn brev_unbudgeted(v: &DiscreteJointDistribution) -> (Rational, BundlePrice) {
    let candidates = v.support().iter().map(|t| l1(t));
    let (value, price) = best_posted_price(candidates, |p| v.l1_survival(p));
    (value, BundlePrice { price })
}

/// The best posted price for one item, optionally capped at `b`. Returns
/// `(revenue, price)`.
pub fn posted_price(d: &MarginalDistribution, cap: Option<&Rational>) -> (Rational, Rational) {
    let values = d.values().iter().cloned();
    match cap {
        Some(b) => best_posted_price(
            values.filter(|x| x <= b).chain(std::iter::once(b.clone())),
            |p| d.survival(p),
        ),
        None => best_posted_price(values, |p| d.survival(p)),
    }
}

/// Per-item Myerson revenues `(revenue, price)` on the marginals.
pub fn srev_unbudgeted_items(v: &DiscreteJointDistribution) -> Vec<(Rational, Rational)> {
    v.marginals().iter().map(|d| posted_price(d, None)).collect()
}

/// `SRev(V)`: with no budget an additive buyer decides item by item, so the
/// optimum is the sum of per-item posted-price optima on the marginals. This
/// holds for correlated distributions too.
pub fn srev_unbudgeted(v: &DiscreteJointDistribution) -> (Rational, PriceVector) {
    let items = srev_unbudgeted_items(v);
    let value = items.iter().fold(Rational::zero(), |acc, (r, _)| acc + r);
    let prices = items.into_iter().map(|(_, p)| p).collect();
    (value, PriceVector { prices })
}

/// Limits for [`srev_budget_exact`].
#[derive(Debug, Clone, Copy)]
pub struct ExactLimits {
    pub max_items: usize,
    pub max_support_per_item: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        Self {
            max_items: 3,
            max_support_per_item: 4,
        }
    }
}

/// An instance rescaled to machine integers.
struct Scaled {
    m: usize,
    /// Per type, the value of every bundle mask.
    bundle_values: Vec<Vec<i64>>,
    weights: Vec<i128>,
    budget: i64,
    /// Price units per unit of value.
    scale: i64,
    /// Mass units per unit of probability.
    mass_scale: i64,
}

impl Scaled {
    fn new(v: &DiscreteJointDistribution, b: &Rational, extra: i64) -> Result<Self> {
        let too_large = || Error::TooLarge("scaled values overflow machine integers".into());
        let m = v.num_items();
        let den = rational::common_denominator(
            v.support().iter().flatten().chain(std::iter::once(b)),
        )
        .ok_or_else(too_large)?;
        let scale = den.checked_mul(extra).ok_or_else(too_large)?;
        let mass_scale = rational::common_denominator(v.masses()).ok_or_else(too_large)?;
        let mut bundle_values = Vec::with_capacity(v.len());
        for t in v.support() {
            let ints: Vec<i64> = t
                .iter()
                .map(|x| rational::scaled_int(x, scale).ok_or_else(too_large))
                .collect::<Result<_>>()?;
            let mut per_mask = vec![0i64; 1 << m];
            for mask in 1..(1usize << m) {
                let low = mask.trailing_zeros() as usize;
                per_mask[mask] = per_mask[mask & (mask - 1)]
                    .checked_add(ints[low])
                    .ok_or_else(too_large)?;
            }
            bundle_values.push(per_mask);
        }
        let weights = v
            .masses()
            .iter()
            .map(|q| rational::scaled_int(q, mass_scale).map(i128::from).ok_or_else(too_large))
            .collect::<Result<_>>()?;
        Ok(Self {
            m,
            bundle_values,
            weights,
            budget: rational::scaled_int(b, scale).ok_or_else(too_large)?,
            scale,
            mass_scale,
        })
    }

    /// Expected payment, in units of `1/(scale·mass_scale)`.
    fn revenue(&self, prices: &[i64], bundle_prices: &mut [i64]) -> i128 {
        for mask in 1..(1usize << self.m) {
            let low = mask.trailing_zeros() as usize;
            bundle_prices[mask] = bundle_prices[mask & (mask - 1)] + prices[low];
        }
        let mut total = 0i128;
        for (vals, w) in self.bundle_values.iter().zip(&self.weights) {
            let (mut best_u, mut best_p) = (0i64, 0i64);
            for mask in 1..(1usize << self.m) {
                let p = bundle_prices[mask];
                if p > self.budget {
                    continue;
                }
                let u = vals[mask] - p;
                if u > best_u || (u == best_u && p > best_p) {
                    best_u = u;
                    best_p = p;
                }
            }
            total += w * best_p as i128;
        }
        total
    }

    fn to_value(&self, total: i128) -> Rational {
        Rational::new(total.into(), (self.scale as i128 * self.mass_scale as i128).into())
    }

    fn to_prices(&self, prices: &[i64]) -> PriceVector {
        PriceVector {
            prices: prices.iter().map(|&p| frac(p, self.scale)).collect(),
        }
    }

    /// Maximize over the given integer price vectors; ties go to the
    /// lexicographically smallest vector.
    fn best<'a>(&self, candidates: impl IntoIterator<Item = &'a [i64]>) -> (Rational, PriceVector) {
        let mut scratch = vec![0i64; 1 << self.m];
        let mut best: Option<(i128, &[i64])> = None;
        for p in candidates {
            let r = self.revenue(p, &mut scratch);
            let better = match best {
                None => true,
                Some((br, bp)) => r > br || (r == br && p < bp),
            };
            if better {
                best = Some((r, p));
            }
        }
        let (r, p) = best.expect("at least one candidate");
        (self.to_value(r), self.to_prices(p))
    }
}

/// Least common multiple of the absolute determinants of `m×m` matrices with
/// entries in `{−1, 0, 1}` (these are 1 and 2 for `m = 2`, 1 to 4 for `m = 3`).
fn det_lcm(m: usize) -> i64 {
    match m {
        1 => 1,
        2 => 2,
        3 => 12,
        _ => unreachable!("exact separate pricing supports at most three items"),
    }
}

fn det(a: &[Vec<i64>]) -> i64 {
    match a.len() {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        n => (0..n)
            .map(|c| {
                let minor: Vec<Vec<i64>> = a[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(k, _)| *k != c).map(|(_, x)| *x).collect())
                    .collect();
                let sign = if c % 2 == 0 { 1 } else { -1 };
                sign * a[0][c] * det(&minor)
            })
            .sum(),
    }
}

/// Cofactor matrix `C` with `C[k][i]` the cofactor of entry `(k, i)`, so that
/// the solution of `A p = o` is `p_i = Σ_k C[k][i] o_k / det(A)`.
fn cofactors(a: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    if n == 1 {
        return vec![vec![1]];
    }
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let minor: Vec<Vec<i64>> = a
                        .iter()
                        .enumerate()
                        .filter(|(r, _)| *r != k)
                        .map(|(_, row)| {
                            row.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, x)| *x).collect()
                        })
                        .collect();
                    let sign = if (k + i) % 2 == 0 { 1 } else { -1 };
                    sign * det(&minor)
                })
                .collect()
        })
        .collect()
}

/// Directions in `{−1,0,1}^m` whose first nonzero entry is `+1`.
fn directions(m: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let total = 3usize.pow(m as u32);
    for code in 0..total {
        let mut d = Vec::with_capacity(m);
        let mut c = code;
        for _ in 0..m {
            d.push((c % 3) as i64 - 1);
            c /= 3;
        }
        if d.iter().find(|x| **x != 0) == Some(&1) {
            out.push(d);
        }
    }
    out
}

fn choose(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in choose(n, k - 1) {
            if rest.first().is_none_or(|&r| r > first) {
                let mut c = vec![first];
                c.extend(rest);
                out.push(c);
            }
        }
    }
    out
}

/// `SRev^b(V)` exactly, with a maximizing price vector (the lexicographically
/// smallest among maximizers).
///
/// Every buyer decision is constant on the cells of the arrangement of
/// hyperplanes `d·p = d·t` (utility comparisons between bundles, `d` in
/// `{−1,0,1}^m`), `1_S·p = b` (affordability) and the faces of `[0,b]^m`.
/// Revenue is linear on each cell, and with payment-favoring ties it is
/// upper semicontinuous: at a cell boundary every type's payment is at least
/// its limit from inside the cell, because a bundle that becomes affordable
/// there costs exactly `b`. So the supremum over the box is attained at a
/// vertex of the arrangement, and the vertices are enumerated exactly.
pub fn srev_budget_exact(v: &DiscreteJointDistribution, b: &Rational) -> Result<(Rational, PriceVector)> {
    srev_budget_exact_with(v, b, &ExactLimits::default())
}

pub fn srev_budget_exact_with(
    v: &DiscreteJointDistribution,
    b: &Rational,
    limits: &ExactLimits,
) -> Result<(Rational, PriceVector)> {
    if !b.is_positive() {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    let m = v.num_items();
    if m > limits.max_items.min(3) {
        return Err(Error::TooLarge(format!(
            "{m} items; exact separate pricing handles at most {}",
            limits.max_items.min(3)
        )));
    }
    for (j, d) in v.marginals().iter().enumerate() {
        if d.len() > limits.max_support_per_item {
            return Err(Error::TooLarge(format!(
                "item {j} has {} values; the limit is {}",
                d.len(),
                limits.max_support_per_item
            )));
        }
    }
    let lcm = det_lcm(m);
    let inst = Scaled::new(v, b, lcm)?;
    let bb = inst.budget;

    // Offsets in price units: d·t·scale.
    let dirs = directions(m);
    let offsets: Vec<Vec<i64>> = dirs
        .iter()
        .map(|d| {
            let mut o: Vec<i64> = inst
                .bundle_values
                .iter()
                .map(|vals| {
                    (0..m)
                        .map(|j| d[j] * (vals[1 << j]))
                        .sum::<i64>()
                })
                .collect();
            if d.iter().all(|x| *x >= 0) {
                o.push(bb);
            }
            if d.iter().filter(|x| **x != 0).count() == 1 {
                o.push(0);
            }
            o.sort_unstable();
            o.dedup();
            o
        })
        .collect();

    let mut vertices: HashSet<[i64; 3]> = HashSet::new();
    for combo in choose(dirs.len(), m) {
        let a: Vec<Vec<i64>> = combo.iter().map(|&k| dirs[k].clone()).collect();
        let dt = det(&a);
        if dt == 0 {
            continue;
        }
        let cof = cofactors(&a);
        // Values are already multiplied by `lcm`, so `Σ C o / det` is integral.
        let lists: Vec<&Vec<i64>> = combo.iter().map(|&k| &offsets[k]).collect();
        let mut idx = vec![0usize; m];
        'odometer: loop {
            let mut p = [0i64; 3];
            let mut inside = true;
            for i in 0..m {
                let num: i128 = (0..m)
                    .map(|k| cof[k][i] as i128 * lists[k][idx[k]] as i128)
                    .sum();
                debug_assert_eq!(num % dt as i128, 0);
                let x = num / dt as i128;
                if x < 0 || x > bb as i128 {
                    inside = false;
                    break;
                }
                p[i] = x as i64;
            }
            if inside {
                vertices.insert(p);
            }
            for k in 0..m {
                idx[k] += 1;
                if idx[k] < lists[k].len() {
                    continue 'odometer;
                }
                idx[k] = 0;
            }
            break;
        }
    }
    let mut sorted: Vec<[i64; 3]> = vertices.into_iter().collect();
    sorted.sort_unstable();
    Ok(inst.best(sorted.iter().map(|p| &p[..m])))
}

/// Default per-item grid for [`srev_budget_grid`]: the item's values, `b` and
/// `b/2`, and `b − s` for every sum `s` of base candidates taken from at most
/// `m − 1` other items, all clipped to `[0, b]`.
pub fn default_price_grid(v: &DiscreteJointDistribution, b: &Rational) -> Vec<Vec<Rational>> {
    let m = v.num_items();
    let zero = Rational::zero();
    let clip = |x: Rational| rational::max(&zero, &rational::min(&x, b));
    let base: Vec<Vec<Rational>> = v
        .marginals()
        .iter()
        .map(|d| {
            let mut c: Vec<Rational> = d.values().iter().cloned().map(&clip).collect();
            c.push(b.clone());
            c.push(b / int(2));
            c.sort();
            c.dedup();
            c
        })
        .collect();
    (0..m)
        .map(|j| {
            let others: Vec<usize> = (0..m).filter(|&k| k != j).collect();
            let mut sums: Vec<Rational> = vec![Rational::zero()];
            let mut all = base[j].clone();
            for &k in &others {
                let mut next = sums.clone();
                for s in &sums {
                    for c in &base[k] {
                        next.push(s + c);
                    }
                }
                next.sort();
                next.dedup();
                sums = next;
            }
            for s in sums.iter().filter(|s| !s.is_zero()) {
                all.push(clip(b - s));
            }
            all.sort();
            all.dedup();
            all
        })
        .collect()
}

/// Best separate pricing over a finite grid (the Cartesian product of the
/// per-item candidate lists); a lower bound on `SRev^b(V)`.
pub fn srev_budget_grid(
    v: &DiscreteJointDistribution,
    b: &Rational,
    grid: &[Vec<Rational>],
) -> Result<(Rational, PriceVector)> {
    let m = v.num_items();
    if grid.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: grid.len(),
        });
    }
    if m > MAX_KNAPSACK_ITEMS {
        return Err(Error::TooManyItems {
            items: m,
            limit: MAX_KNAPSACK_ITEMS,
        });
    }
    if grid.iter().any(|g| g.is_empty()) {
        return Err(Error::InvalidArgument("every item needs a candidate price".into()));
    }
    if grid.iter().flatten().any(|p| p.is_negative()) {
        return Err(Error::InvalidArgument("prices must be nonnegative".into()));
    }
    let grid_den = rational::common_denominator(grid.iter().flatten())
        .ok_or_else(|| Error::TooLarge("grid denominators overflow".into()))?;
    let inst = Scaled::new(v, b, grid_den)?;
    let int_grid: Vec<Vec<i64>> = grid
        .iter()
        .map(|g| {
            let mut c: Vec<i64> = g
                .iter()
                .map(|p| rational::scaled_int(p, inst.scale))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::TooLarge("grid prices overflow".into()))?;
            c.sort_unstable();
            c.dedup();
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let mut vectors: Vec<Vec<i64>> = vec![Vec::new()];
    for c in &int_grid {
        vectors = vectors
            .into_iter()
            .flat_map(|p| {
                c.iter().map(move |&x| {
                    let mut p = p.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    Ok(inst.best(vectors.iter().map(|p| p.as_slice())))
}

/// [`srev_budget_grid`] on [`default_price_grid`].
pub fn srev_budget_default_grid(
    v: &DiscreteJointDistribution,
    b: &Rational,
) -> Result<(Rational, PriceVector)> {
    srev_budget_grid(v, b, &default_price_grid(v, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::product;

    fn ints(t: &[i64]) -> Vec<Rational> {
        t.iter().map(|&x| int(x)).collect()
    }

    fn uniform_rows(rows: &[&[i64]]) -> DiscreteJointDistribution {
        let n = rows.len() as i64;
        DiscreteJointDistribution::new(
            rows[0].len(),
            rows.iter().map(|r| ints(r)).collect(),
            vec![frac(1, n); rows.len()],
        )
        .unwrap()
    }

    #[test]
    fn knapsack_buys_the_first_item() {
        let prices = PriceVector::new(ints(&[2, 1, 1])).unwrap();
        let buy = buyer_knapsack(&ints(&[2, 1, 0]), &prices, &int(2)).unwrap();
        assert_eq!(buy.bundle, vec![0]);
        assert_eq!(buy.payment, int(2));
    }

    #[test]
    fn knapsack_buys_the_last_two_items() {
        let prices = PriceVector::new(ints(&[2, 1, 1])).unwrap();
        let buy = buyer_knapsack(&ints(&[0, 1, 1]), &prices, &int(2)).unwrap();
        assert_eq!(buy.bundle, vec![1, 2]);
        assert_eq!(buy.payment, int(2));
    }

    #[test]
    fn knapsack_buys_only_the_second_item() {
        let prices = PriceVector::new(ints(&[2, 1, 1])).unwrap();
        let buy = buyer_knapsack(&ints(&[2, 2, 0]), &prices, &int(2)).unwrap();
        assert_eq!(buy.bundle, vec![1]);
        assert_eq!(buy.payment, int(1));
    }

    #[test]
    fn knapsack_item_limit() {
        let t = vec![int(1); 21];
        let prices = PriceVector::new(vec![int(1); 21]).unwrap();
        assert!(matches!(
            buyer_knapsack(&t, &prices, &int(1)),
            Err(Error::TooManyItems { items: 21, .. })
        ));
    }

    #[test]
    fn bundle_pricing_examples() {
        let point = uniform_rows(&[&[2, 3]]);
        let (value, price) = brev_budget(&point, &int(3));
        assert_eq!((value, price.price), (int(3), int(3)));

        let rows = uniform_rows(&[&[2, 0, 0], &[0, 1, 1], &[2, 1, 0]]);
        let (value, price) = brev_budget(&rows, &int(2));
        assert_eq!((value, price.price), (int(2), int(2)));

        let sums = uniform_rows(&[&[1], &[2]]);
        assert_eq!(brev_budget(&sums, &int(100)).0, int(1));
        assert_eq!(brev_unbudgeted(&sums).0, int(1));
    }

    #[test]
    fn unbudgeted_separate_pricing() {
        let u = MarginalDistribution::new(ints(&[1, 2]), vec![frac(1, 2), frac(1, 2)]).unwrap();
        let v = product(&[u.clone(), u]).unwrap();
        assert_eq!(srev_unbudgeted(&v).0, int(2));
        let point = uniform_rows(&[&[2, 3]]);
        assert_eq!(srev_unbudgeted(&point).0, int(5));
    }

    #[test]
    fn exact_single_item_is_capped_posted_price() {
        let d = MarginalDistribution::new(ints(&[1, 3, 4]), vec![frac(1, 2), frac(1, 4), frac(1, 4)])
            .unwrap();
        let v = product(&[d.clone()]).unwrap();
        for b in [int(1), frac(5, 2), int(3), int(7)] {
            let (exact, _) = srev_budget_exact(&v, &b).unwrap();
            assert_eq!(exact, posted_price(&d, Some(&b)).0, "b = {b}");
        }
    }

    #[test]
    fn exact_reproduces_the_nonmonotonicity_example() {
        let v1 = uniform_rows(&[&[2, 0, 0], &[0, 1, 1], &[2, 1, 0]]);
        let (value, prices) = srev_budget_exact(&v1, &int(2)).unwrap();
        assert_eq!(value, int(2));
        assert_eq!(prices.prices(), ints(&[2, 1, 1]).as_slice());

        let v2 = uniform_rows(&[&[2, 0, 0], &[0, 1, 1], &[2, 2, 0]]);
        let (value, _) = srev_budget_exact(&v2, &int(2)).unwrap();
        assert!(value < int(2));
    }

    #[test]
    fn single_grid_point_is_its_own_revenue() {
        let v1 = uniform_rows(&[&[2, 0, 0], &[0, 1, 1], &[2, 1, 0]]);
        let grid = vec![vec![int(2)], vec![int(1)], vec![int(1)]];
        let (value, _) = srev_budget_grid(&v1, &int(2), &grid).unwrap();
        let prices = PriceVector::new(ints(&[2, 1, 1])).unwrap();
        assert_eq!(value, separate_pricing_revenue(&v1, &prices, &int(2)).unwrap());
        assert!(srev_budget_default_grid(&v1, &int(2)).unwrap().0 >= int(2));
    }

    #[test]
    fn exact_rejects_large_instances() {
        let d = MarginalDistribution::new(ints(&[0, 1, 2, 3, 4]), vec![frac(1, 5); 5]).unwrap();
        let v = product(&[d]).unwrap();
        assert!(matches!(srev_budget_exact(&v, &int(2)), Err(Error::TooLarge(_))));
    }

    #[test]
    fn direction_counts() {
        assert_eq!(directions(1).len(), 1);
        assert_eq!(directions(2).len(), 4);
        assert_eq!(directions(3).len(), 13);
    }
}
