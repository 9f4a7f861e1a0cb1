//! Finite discrete valuation distributions with exact masses.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Default cap on the number of points a product distribution may have.
pub const DEFAULT_SUPPORT_LIMIT: usize = 1_000_000;

fn check_masses(masses: &[Rational]) -> Result<()> {
    if masses.iter().any(|q| !q.is_positive()) {
        return Err(Error::InvalidDistribution("masses must be positive".into()));
    }
    if rational::sum(masses) != Rational::one() {
        return Err(Error::InvalidDistribution(format!(
            "masses sum to {}, not 1",
            rational::fmt(&rational::sum(masses))
        )));
    }
    Ok(())
}

/// Distribution of a single item's value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarginalDistribution {
    #[serde(with = "rational::serde_fraction_vec")]
    values: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    masses: Vec<Rational>,
}

impl MarginalDistribution {
    /// Values must be strictly increasing and nonnegative; masses positive
    /// and summing to one.
    pub fn new(values: Vec<Rational>, masses: Vec<Rational>) -> Result<Self> {
        if values.is_empty() || values.len() != masses.len() {
            return Err(Error::InvalidDistribution(
                "values and masses must be nonempty and of equal length".into(),
            ));
        }
        if values[0].is_negative() {
            return Err(Error::InvalidDistribution("values must be nonnegative".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution(
                "values must be strictly increasing".into(),
            ));
        }
        check_masses(&masses)?;
        Ok(Self { values, masses })
    }

    /// Build from unordered `(value, mass)` pairs, merging repeated values and
    /// dropping zero masses.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Rational, Rational)>) -> Result<Self> {
        let mut acc: BTreeMap<Rational, Rational> = BTreeMap::new();
        for (v, q) in pairs {
            *acc.entry(v).or_insert_with(Rational::zero) += q;
        }
        acc.retain(|_, q| !q.is_zero());
        let (values, masses) = acc.into_iter().unzip();
        Self::new(values, masses)
    }

    pub fn point(value: Rational) -> Result<Self> {
        Self::new(vec![value], vec![Rational::one()])
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn masses(&self) -> &[Rational] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> &Rational {
        self.values.last().expect("nonempty")
    }

    /// `Pr[v ≥ x]`.
    pub fn survival(&self, x: &Rational) -> Rational {
        self.values
            .iter()
            .zip(&self.masses)
            .filter(|(v, _)| *v >= x)
            .fold(Rational::zero(), |acc, (_, q)| acc + q)
    }

    pub fn mean(&self) -> Rational {
        rational::dot(&self.values, &self.masses)
    }
}

/// Joint distribution over `m`-vectors of item values.
///
/// Support points are distinct, carry positive mass and are kept in
/// lexicographic order. Distributions built by [`product`] or [`cap_linf`]
/// remember their factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscreteJointDistribution {
    num_items: usize,
    #[serde(serialize_with = "serialize_support")]
    support: Vec<Vec<Rational>>,
    #[serde(with = "rational::serde_fraction_vec")]
    masses: Vec<Rational>,
    #[serde(skip)]
    factors: Option<Vec<MarginalDistribution>>,
}

fn serialize_support<S: serde::Serializer>(
    support: &[Vec<Rational>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(support.len()))?;
    for t in support {
        let row: Vec<String> = t.iter().map(rational::fmt).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

impl DiscreteJointDistribution {
    /// Build from points and masses. Repeated points are merged and
    /// zero-mass points removed.
    pub fn new(num_items: usize, support: Vec<Vec<Rational>>, masses: Vec<Rational>) -> Result<Self> {
        if support.len() != masses.len() {
            return Err(Error::InvalidDistribution(
                "support and masses must have equal length".into(),
            ));
        }
        Self::from_points(num_items, support.into_iter().zip(masses))
    }

    pub fn from_points(
        num_items: usize,
        points: impl IntoIterator<Item = (Vec<Rational>, Rational)>,
    ) -> Result<Self> {
        if num_items == 0 {
            return Err(Error::InvalidDistribution("at least one item required".into()));
        }
        let mut acc: BTreeMap<Vec<Rational>, Rational> = BTreeMap::new();
        for (t, q) in points {
            if t.len() != num_items {
                return Err(Error::DimensionMismatch {
                    expected: num_items,
                    found: t.len(),
                });
            }
            if t.iter().any(|v| v.is_negative()) {
                return Err(Error::InvalidDistribution("values must be nonnegative".into()));
            }
            *acc.entry(t).or_insert_with(Rational::zero) += q;
        }
        acc.retain(|_, q| !q.is_zero());
        if acc.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let (support, masses): (Vec<_>, Vec<_>) = acc.into_iter().unzip();
        check_masses(&masses)?;
        Ok(Self {
            num_items,
            support,
            masses,
            factors: None,
        })
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn support(&self) -> &[Vec<Rational>] {
        &self.support
    }

    pub fn masses(&self) -> &[Rational] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<Rational>, &Rational)> {
        self.support.iter().zip(&self.masses)
    }

    /// The factors of an independent distribution, if known.
    pub fn factors(&self) -> Option<&[MarginalDistribution]> {
        self.factors.as_deref()
    }

    pub fn is_independent(&self) -> bool {
        self.factors.is_some()
    }

    /// Index of `t` in the support.
    pub fn position(&self, t: &[Rational]) -> Option<usize> {
        self.support.binary_search_by(|s| s.as_slice().cmp(t)).ok()
    }

    /// Marginal distribution of item `j`.
    pub fn marginal(&self, j: usize) -> MarginalDistribution {
        if let Some(f) = &self.factors {
            return f[j].clone();
        }
        MarginalDistribution::from_pairs(self.iter().map(|(t, q)| (t[j].clone(), q.clone())))
            .expect("marginal of a valid joint is valid")
    }

    pub fn marginals(&self) -> Vec<MarginalDistribution> {
        (0..self.num_items).map(|j| self.marginal(j)).collect()
    }

    /// Distribution of `‖t‖₁`.
    pub fn l1_distribution(&self) -> MarginalDistribution {
        MarginalDistribution::from_pairs(self.iter().map(|(t, q)| (l1(t), q.clone())))
            .expect("sum distribution of a valid joint is valid")
    }

    /// `Pr[‖t‖₁ ≥ x]`.
    pub fn l1_survival(&self, x: &Rational) -> Rational {
        self.iter()
            .filter(|(t, _)| l1(t) >= *x)
            .fold(Rational::zero(), |acc, (_, q)| acc + q)
    }

    pub fn max_l1(&self) -> Rational {
        self.support.iter().map(|t| l1(t)).max().expect("nonempty")
    }

    pub fn max_value(&self) -> Rational {
        self.support
            .iter()
            .flat_map(|t| t.iter())
            .max()
            .cloned()
            .expect("nonempty")
    }

    /// `E[g(t)]`.
    pub fn expect(&self, g: impl Fn(&[Rational]) -> Rational) -> Rational {
        self.iter()
            .fold(Rational::zero(), |acc, (t, q)| acc + g(t) * q)
    }
}

/// `‖t‖₁` for a nonnegative vector.
pub fn l1(t: &[Rational]) -> Rational {
    rational::sum(t)
}

/// Independent joint distribution of the given marginals.
pub fn product(marginals: &[MarginalDistribution]) -> Result<DiscreteJointDistribution> {
    product_with_limit(marginals, DEFAULT_SUPPORT_LIMIT)
}

pub fn product_with_limit(
    marginals: &[MarginalDistribution],
    limit: usize,
) -> Result<DiscreteJointDistribution> {
    if marginals.is_empty() {
        return Err(Error::InvalidDistribution("at least one marginal required".into()));
    }
    let size = marginals
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(d.len()))
        .unwrap_or(usize::MAX);
    if size > limit {
        return Err(Error::SupportTooLarge { size, limit });
    }
    let mut points: Vec<(Vec<Rational>, Rational)> = vec![(Vec::new(), Rational::one())];
    for d in marginals {
        let mut next = Vec::with_capacity(points.len() * d.len());
        for (t, q) in &points {
            for (v, w) in d.values.iter().zip(&d.masses) {
                let mut t = t.clone();
                t.push(v.clone());
                next.push((t, q * w));
            }
        }
        points = next;
    }
    let mut joint = DiscreteJointDistribution::from_points(marginals.len(), points)?;
    joint.factors = Some(marginals.to_vec());
    Ok(joint)
}

/// Cap every coordinate at `b`: each value `v` becomes `min(v, b)`. An
/// independent input stays independent, with capped factors.
pub fn cap_linf(v: &DiscreteJointDistribution, b: &Rational) -> Result<DiscreteJointDistribution> {
    if !b.is_positive() {
        return Err(Error::InvalidArgument("cap must be positive".into()));
    }
    let Some(factors) = v.factors() else {
        return DiscreteJointDistribution::from_points(
            v.num_items,
            v.iter().map(|(t, q)| {
                (t.iter().map(|x| rational::min(x, b)).collect(), q.clone())
            }),
        );
    };
    let capped: Vec<MarginalDistribution> = factors
        .iter()
        .map(|d| {
            MarginalDistribution::from_pairs(
                d.values
                    .iter()
                    .zip(&d.masses)
                    .map(|(x, q)| (rational::min(x, b), q.clone())),
            )
        })
        .collect::<Result<_>>()?;
    product(&capped)
}

/// Condition on `‖t‖₁ ≤ c` and renormalize.
pub fn condition_l1(v: &DiscreteJointDistribution, c: &Rational) -> Result<DiscreteJointDistribution> {
    let kept: Vec<(Vec<Rational>, Rational)> = v
        .iter()
        .filter(|(t, _)| l1(t) <= *c)
        .map(|(t, q)| (t.clone(), q.clone()))
        .collect();
    let total: Rational = kept.iter().fold(Rational::zero(), |acc, (_, q)| acc + q);
    if total.is_zero() {
        return Err(Error::EmptyConditioning);
    }
    let unchanged = kept.len() == v.len();
    let mut out = DiscreteJointDistribution::from_points(
        v.num_items,
        kept.into_iter().map(|(t, q)| (t, q / &total)),
    )?;
    if unchanged {
        out.factors = v.factors.clone();
    }
    Ok(out)
}

/// Distribution of `v_j` given `v_{−j} = t_minus_j`.
pub fn conditional_marginal(
    v: &DiscreteJointDistribution,
    j: usize,
    t_minus_j: &[Rational],
) -> Result<MarginalDistribution> {
    if j >= v.num_items || t_minus_j.len() + 1 != v.num_items {
        return Err(Error::DimensionMismatch {
            expected: v.num_items - 1,
            found: t_minus_j.len(),
        });
    }
    let matches = |t: &[Rational]| {
        t.iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, x)| x)
            .eq(t_minus_j.iter())
    };
    let pairs: Vec<(Rational, Rational)> = v
        .iter()
        .filter(|(t, _)| matches(t))
        .map(|(t, q)| (t[j].clone(), q.clone()))
        .collect();
    let total: Rational = pairs.iter().fold(Rational::zero(), |acc, (_, q)| acc + q);
    if total.is_zero() {
        return Err(Error::EmptyConditioning);
    }
    MarginalDistribution::from_pairs(pairs.into_iter().map(|(x, q)| (x, q / &total)))
}

/// `t` with coordinate `j` removed.
pub fn drop_coord(t: &[Rational], j: usize) -> Vec<Rational> {
    t.iter()
        .enumerate()
        .filter(|(k, _)| *k != j)
        .map(|(_, x)| x.clone())
        .collect()
}

/// An independent distribution conditioned on `‖t‖₁ ≤ cap`.
#[derive(Debug, Clone)]
pub struct WeaklyCorrelated {
    base: DiscreteJointDistribution,
    cap: Rational,
    dist: DiscreteJointDistribution,
}

impl WeaklyCorrelated {
    pub fn new(base: DiscreteJointDistribution, cap: Rational) -> Result<Self> {
        if !base.is_independent() {
            return Err(Error::RequiresIndependence);
        }
        if !cap.is_positive() {
            return Err(Error::InvalidArgument("cap must be positive".into()));
        }
        let dist = condition_l1(&base, &cap)?;
        Ok(Self { base, cap, dist })
    }

    pub fn base(&self) -> &DiscreteJointDistribution {
        &self.base
    }

    pub fn cap(&self) -> &Rational {
        &self.cap
    }

    pub fn dist(&self) -> &DiscreteJointDistribution {
        &self.dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn marg(values: &[i64], masses: &[(i64, i64)]) -> MarginalDistribution {
        MarginalDistribution::new(
            values.iter().map(|&v| int(v)).collect(),
            masses.iter().map(|&(a, b)| frac(a, b)).collect(),
        )
        .unwrap()
    }

    fn vec_of(t: &[i64]) -> Vec<Rational> {
        t.iter().map(|&v| int(v)).collect()
    }

    #[test]
    fn product_of_uniforms() {
        let u = marg(&[1, 2], &[(1, 2), (1, 2)]);
        let joint = product(&[u.clone(), u]).unwrap();
        assert_eq!(joint.len(), 4);
        assert!(joint.masses().iter().all(|q| *q == frac(1, 4)));
        assert!(joint.is_independent());
    }

    #[test]
    fn product_of_point_mass() {
        let joint = product(&[MarginalDistribution::point(int(5)).unwrap()]).unwrap();
        assert_eq!(joint.support(), &[vec_of(&[5])]);
        assert_eq!(joint.masses(), &[int(1)]);
    }

    #[test]
    fn product_mass_is_product_of_masses() {
        let a = marg(&[0, 2], &[(1, 2), (1, 2)]);
        let b = marg(&[0, 3], &[(1, 3), (2, 3)]);
        let joint = product(&[a, b]).unwrap();
        let i = joint.position(&vec_of(&[2, 3])).unwrap();
        assert_eq!(joint.masses()[i], frac(1, 3));
    }

    #[test]
    fn product_respects_limit() {
        let a = marg(&[0, 2], &[(1, 2), (1, 2)]);
        assert_eq!(
            product_with_limit(&[a.clone(), a.clone(), a], 7),
            Err(Error::SupportTooLarge { size: 8, limit: 7 })
        );
    }

    #[test]
    fn capping_merges_values() {
        let v = product(&[marg(&[1, 3], &[(1, 2), (1, 2)])]).unwrap();
        let capped = cap_linf(&v, &int(2)).unwrap();
        assert_eq!(capped.factors().unwrap()[0], marg(&[1, 2], &[(1, 2), (1, 2)]));

        let v = product(&[marg(&[1, 2, 3], &[(1, 3), (1, 3), (1, 3)])]).unwrap();
        let capped = cap_linf(&v, &int(2)).unwrap();
        assert_eq!(capped.factors().unwrap()[0], marg(&[1, 2], &[(1, 3), (2, 3)]));
    }

    #[test]
    fn non_binding_cap_is_identity() {
        let v = product(&[marg(&[1, 3], &[(1, 4), (3, 4)]), marg(&[0, 2], &[(1, 2), (1, 2)])]).unwrap();
        assert_eq!(cap_linf(&v, &int(3)).unwrap(), v);
        assert_eq!(condition_l1(&v, &int(5)).unwrap(), v);
    }

    #[test]
    fn conditioning_renormalizes() {
        let u = marg(&[0, 2], &[(1, 2), (1, 2)]);
        let v = product(&[u.clone(), u]).unwrap();
        let hat = condition_l1(&v, &int(2)).unwrap();
        assert_eq!(hat.support(), &[vec_of(&[0, 0]), vec_of(&[0, 2]), vec_of(&[2, 0])]);
        assert!(hat.masses().iter().all(|q| *q == frac(1, 3)));
    }

    #[test]
    fn conditioning_below_support_fails() {
        let u = marg(&[1, 2], &[(1, 2), (1, 2)]);
        let v = product(&[u.clone(), u]).unwrap();
        assert_eq!(condition_l1(&v, &int(1)), Err(Error::EmptyConditioning));
    }

    #[test]
    fn conditional_of_product_is_marginal() {
        let a = marg(&[0, 2], &[(1, 2), (1, 2)]);
        let b = marg(&[1, 3], &[(1, 3), (2, 3)]);
        let v = product(&[a, b.clone()]).unwrap();
        assert_eq!(conditional_marginal(&v, 1, &vec_of(&[2])).unwrap(), b);
    }

    #[test]
    fn conditional_on_weakly_correlated() {
        let u = marg(&[0, 2], &[(1, 2), (1, 2)]);
        let v = product(&[u.clone(), u]).unwrap();
        let hat = condition_l1(&v, &int(2)).unwrap();
        let c = conditional_marginal(&hat, 1, &vec_of(&[2])).unwrap();
        assert_eq!(c, marg(&[0], &[(1, 1)]));
        assert_eq!(
            conditional_marginal(&hat, 1, &vec_of(&[1])),
            Err(Error::EmptyConditioning)
        );
    }

    #[test]
    fn duplicate_points_merge_and_zero_mass_drops() {
        let joint = DiscreteJointDistribution::new(
            1,
            vec![vec_of(&[1]), vec_of(&[1]), vec_of(&[2])],
            vec![frac(1, 2), frac(1, 2), int(0)],
        )
        .unwrap();
        assert_eq!(joint.support(), &[vec_of(&[1])]);
    }

    #[test]
    fn invalid_marginals_rejected() {
        assert!(MarginalDistribution::new(vec_of(&[2, 1]), vec![frac(1, 2), frac(1, 2)]).is_err());
        assert!(MarginalDistribution::new(vec_of(&[1, 2]), vec![frac(1, 2), frac(1, 3)]).is_err());
        assert!(MarginalDistribution::new(vec_of(&[-1]), vec![int(1)]).is_err());
    }

    #[test]
    fn weakly_correlated_requires_factors() {
        let joint = DiscreteJointDistribution::new(1, vec![vec_of(&[1])], vec![int(1)]).unwrap();
        assert!(matches!(
            WeaklyCorrelated::new(joint, int(1)),
            Err(Error::RequiresIndependence)
        ));
    }
}
