//! The TOML instance format and the seeded instance generator.
//!
//! ```toml
//! budget = "2"
//! cap = "3"
//!
//! [distribution]
//! kind = "independent"
//! marginals = [
//!     { values = ["1", "3"], masses = ["1/2", "1/2"] },
//!     { values = ["0", "2"], masses = ["1/3", "2/3"] },
//! ]
//!
//! [budget_distribution]
//! budgets = ["1", "2"]
//! masses = ["1/2", "1/2"]
//! ```
//!
//! A correlated distribution uses `kind = "joint"` with `num_items` and
//! `points = [{ value = ["2", "0"], mass = "1/3" }, ...]`.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{
    condition_l1, l1, product_with_limit, DiscreteJointDistribution, MarginalDistribution,
    WeaklyCorrelated, DEFAULT_SUPPORT_LIMIT,
};
use crate::error::{Error, Result};
use crate::private_budget::BudgetDistribution;
use crate::rational::{self, frac, int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalSpec {
    #[serde(with = "rational::serde_fraction_vec")]
    pub values: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    pub masses: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSpec {
    #[serde(with = "rational::serde_fraction_vec")]
    pub value: Vec<Rational>,
    #[serde(with = "rational::serde_fraction")]
    pub mass: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Independent { marginals: Vec<MarginalSpec> },
    Joint { num_items: usize, points: Vec<PointSpec> },
}

/// Where a generated instance came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub seed: u64,
    pub index: u64,
    pub params: GeneratorParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(with = "rational::serde_fraction")]
    pub budget: Rational,
    #[serde(
        default,
        with = "rational::serde_fraction_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub cap: Option<Rational>,
    pub distribution: DistributionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_distribution: Option<BudgetDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
}

impl InstanceSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("instance specs always serialize")
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !self.budget.is_positive() {
            return Err(Error::InvalidArgument("budget must be positive".into()));
        }
        if let Some(c) = &self.cap {
            if !c.is_positive() {
                return Err(Error::InvalidArgument("cap must be positive".into()));
            }
        }
        self.marginals()?;
        Ok(())
    }

    /// The marginals of an independent instance; `None` for a joint one.
    pub fn marginals(&self) -> Result<Option<Vec<MarginalDistribution>>> {
        match &self.distribution {
            DistributionSpec::Independent { marginals } => marginals
                .iter()
                .map(|m| MarginalDistribution::new(m.values.clone(), m.masses.clone()))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            DistributionSpec::Joint { .. } => Ok(None),
        }
    }

    pub fn joint(&self) -> Result<DiscreteJointDistribution> {
        self.joint_with_limit(DEFAULT_SUPPORT_LIMIT)
    }

    pub fn joint_with_limit(&self, limit: usize) -> Result<DiscreteJointDistribution> {
        match &self.distribution {
            DistributionSpec::Independent { .. } => {
                let marginals = self.marginals()?.expect("independent instance");
                product_with_limit(&marginals, limit)
            }
            DistributionSpec::Joint { num_items, points } => {
                if points.len() > limit {
                    return Err(Error::SupportTooLarge {
                        size: points.len(),
                        limit,
                    });
                }
                DiscreteJointDistribution::from_points(
                    *num_items,
                    points.iter().map(|p| (p.value.clone(), p.mass.clone())),
                )
            }
        }
    }

    /// `V` conditioned on `‖v‖₁ ≤ cap`, when the instance is independent and
    /// has a cap.
    pub fn weakly_correlated(&self, limit: usize) -> Result<WeaklyCorrelated> {
        let cap = self.cap.as_ref().ok_or(Error::RequiresWeaklyCorrelated)?;
        let v = self.joint_with_limit(limit)?;
        if !v.is_independent() {
            return Err(Error::RequiresWeaklyCorrelated);
        }
        WeaklyCorrelated::new(v, cap.clone())
    }
}

/// Bounds for [`generate_instance`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub min_items: usize,
    pub max_items: usize,
    /// At most this many distinct values per item.
    pub max_values: usize,
    /// Values are drawn from `{0, …, max_grid_value}` times a rational unit.
    pub max_grid_value: u32,
    /// Every mass and hazard is drawn with a denominator at most this.
    pub max_denominator: u32,
    pub with_budget_distribution: bool,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            min_items: 2,
            max_items: 3,
            max_values: 3,
            max_grid_value: 6,
            max_denominator: 8,
            with_budget_distribution: false,
        }
    }
}

/// A random fraction `n/d` in `(0, 1]` with `d ≤ max_den`.
pub fn random_unit_fraction(rng: &mut impl Rng, max_den: u32) -> Rational {
    let d = rng.gen_range(1..=max_den.max(1));
    let n = rng.gen_range(1..=d);
    frac(n as i64, d as i64)
}

/// Random positive weights with bounded denominators, normalized exactly.
fn random_masses(rng: &mut impl Rng, k: usize, max_den: u32) -> Vec<Rational> {
    let raw: Vec<Rational> = (0..k).map(|_| random_unit_fraction(rng, max_den)).collect();
    let total = rational::sum(&raw);
    raw.into_iter().map(|q| q / &total).collect()
}

/// A uniformly random rational `k/d ∈ (0, top]` with `d ≤ 4`.
fn random_level(rng: &mut impl Rng, top: &Rational) -> Rational {
    let d = rng.gen_range(1..=4i64);
    let steps = (top * int(d)).ceil().to_integer();
    let steps: i64 = steps.try_into().unwrap_or(i64::MAX).max(1);
    frac(rng.gen_range(1..=steps), d)
}

/// An MHR budget distribution on contiguous integers: nondecreasing hazards
/// ending at 1 determine the masses.
fn random_mhr_budget(rng: &mut impl Rng, max_den: u32) -> BudgetDistribution {
    let start = rng.gen_range(1..=3i64);
    let len = rng.gen_range(1..=4usize);
    let mut hazards: Vec<Rational> = (0..len - 1)
        .map(|_| loop {
            let h = random_unit_fraction(rng, max_den);
            if !h.is_one() {
                break h;
            }
        })
        .collect();
    hazards.sort();
    hazards.push(Rational::one());
    let mut alive = Rational::one();
    let mut masses = Vec::with_capacity(len);
    for h in &hazards {
        masses.push(&alive * h);
        alive *= Rational::one() - h;
    }
    let budgets = (0..len as i64).map(|i| int(start + i)).collect();
    BudgetDistribution::new(budgets, masses).expect("hazard construction is valid")
}

/// A deterministic instance for `(seed, index)`: independent items with
/// values from a small grid times a random unit, a random budget, a cap at or
/// above the smallest positive sum, and optionally an MHR budget
/// distribution.
pub fn generate_instance(seed: u64, index: u64, params: &GeneratorParams) -> InstanceSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let m = rng.gen_range(params.min_items..=params.max_items.max(params.min_items));
    let unit = frac(rng.gen_range(1..=2), rng.gen_range(1..=2));
    let marginals: Vec<MarginalSpec> = (0..m)
        .map(|_| {
            let k = rng.gen_range(1..=params.max_values.max(1));
            let mut grid: Vec<u32> = (0..=params.max_grid_value).collect();
            let mut picked = Vec::with_capacity(k);
            for _ in 0..k.min(grid.len()) {
                picked.push(grid.swap_remove(rng.gen_range(0..grid.len())));
            }
            picked.sort_unstable();
            MarginalSpec {
                values: picked.iter().map(|&x| int(x as i64) * &unit).collect(),
                masses: random_masses(&mut rng, picked.len(), params.max_denominator),
            }
        })
        .collect();

    let max_sum: Rational = marginals
        .iter()
        .map(|m| m.values.last().expect("nonempty").clone())
        .fold(Rational::zero(), |a, x| a + x);
    let top = if max_sum.is_positive() { max_sum.clone() } else { int(1) };
    let budget = random_level(&mut rng, &top);

    // Positive achievable sums; conditioning on any of them is nonempty.
    let v = product_with_limit(
        &marginals
            .iter()
            .map(|m| MarginalDistribution::new(m.values.clone(), m.masses.clone()))
            .collect::<Result<Vec<_>>>()
            .expect("generated marginals are valid"),
        DEFAULT_SUPPORT_LIMIT,
    )
    .expect("generated support is small");
    let sums: Vec<Rational> = v
        .l1_distribution()
        .values()
        .iter()
        .filter(|s| s.is_positive())
        .cloned()
        .collect();
    let cap = if sums.is_empty() {
        int(1)
    } else {
        sums[rng.gen_range(0..sums.len())].clone()
    };
    debug_assert!(condition_l1(&v, &cap).is_ok());
    debug_assert!(v.support().iter().any(|t| l1(t) <= cap));

    let budget_distribution = params
        .with_budget_distribution
        .then(|| random_mhr_budget(&mut rng, params.max_denominator));

    InstanceSpec {
        budget,
        cap: Some(cap),
        distribution: DistributionSpec::Independent { marginals },
        budget_distribution,
        generator: Some(GeneratorInfo {
            seed,
            index,
            params: params.clone(),
        }),
    }
}
