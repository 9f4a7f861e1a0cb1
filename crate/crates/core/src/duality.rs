//! Lagrangian duality certificates for a weakly correlated `V̂`.
//!
//! The canonical flow sends mass down coordinate `j` inside the region `R_j`
//! of types whose favorite item is `j`. Its virtual values
//! `Φ(t) = t − (1/f(t))·Σ λ(t',t)(t' − t)` give the upper bound
//! `Σ f(t) π(t)·Φ(t) ≥ Rev(V̂)`, which splits into Single, Core and Tail.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::distributions::{
    conditional_marginal, drop_coord, l1, DiscreteJointDistribution, MarginalDistribution,
    WeaklyCorrelated,
};
use crate::error::{Error, Result};
use crate::mechanism::{rev_unbudgeted, Mechanism};
use crate::rational::{self, Rational};
use crate::report::{Check, Report};
use crate::simple::{brev_unbudgeted, srev_unbudgeted, srev_unbudgeted_items};

/// Favorite item of every support point, in support order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Regions {
    pub favorite: Vec<usize>,
}

impl Regions {
    pub fn members(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.favorite
            .iter()
            .enumerate()
            .filter(move |(_, &k)| k == j)
            .map(|(i, _)| i)
    }
}

/// Smallest index attaining the maximum coordinate.
pub fn favorite_item(t: &[Rational]) -> usize {
    let mut best = 0;
    for (j, x) in t.iter().enumerate() {
        if x > &t[best] {
            best = j;
        }
    }
    best
}

pub fn compute_regions(v: &DiscreteJointDistribution) -> Regions {
    Regions {
        favorite: v.support().iter().map(|t| favorite_item(t)).collect(),
    }
}

/// Myerson virtual values of a discrete distribution, before and after
/// ironing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IronedVirtualValue {
    #[serde(with = "rational::serde_fraction_vec")]
    pub values: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    pub masses: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    pub raw: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    pub ironed: Vec<Rational>,
    /// Maximal index ranges `[start, end]` on which `ironed` is pooled.
    pub runs: Vec<(usize, usize)>,
}

impl IronedVirtualValue {
    pub fn at(&self, x: &Rational) -> Option<&Rational> {
        self.values
            .binary_search(x)
            .ok()
            .map(|k| &self.ironed[k])
    }
}

/// `φ(a_k) = a_k − Pr[X > a_k]/f(a_k)·(a_{k+1} − a_k)` for ascending values,
/// with `φ` of the top value equal to the value. Masses need not be
/// normalized.
fn raw_virtuals(values: &[Rational], masses: &[Rational]) -> Vec<Rational> {
    let n = values.len();
    let mut out = vec![Rational::zero(); n];
    let mut above = Rational::zero();
    for k in (0..n).rev() {
        out[k] = if k + 1 == n {
            values[k].clone()
        } else {
            &values[k] - &above / &masses[k] * (&values[k + 1] - &values[k])
        };
        above += &masses[k];
    }
    out
}

/// Pool adjacent violators: the nondecreasing sequence closest to `raw` in
/// mass-weighted least squares, which is the slope sequence of the convex
/// hull of the revenue curve. Returns the ironed values and the pooled runs.
fn pool_adjacent_violators(
    raw: &[Rational],
    masses: &[Rational],
) -> (Vec<Rational>, Vec<(usize, usize)>) {
    // Blocks of (start, end, mass, mass-weighted sum).
    let mut blocks: Vec<(usize, usize, Rational, Rational)> = Vec::new();
    for (k, (phi, f)) in raw.iter().zip(masses).enumerate() {
        blocks.push((k, k, f.clone(), f * phi));
        while blocks.len() >= 2 {
            let (_, _, f2, s2) = &blocks[blocks.len() - 1];
            let (_, _, f1, s1) = &blocks[blocks.len() - 2];
            // Merge while the earlier average exceeds the later one.
            if s1 * f2 <= s2 * f1 {
                break;
            }
            let (_, end, f2, s2) = blocks.pop().expect("two blocks");
            let last = blocks.last_mut().expect("one block");
            last.1 = end;
            last.2 += f2;
            last.3 += s2;
        }
    }
    let mut ironed = Vec::with_capacity(raw.len());
    let mut runs = Vec::new();
    for (start, end, f, s) in blocks {
        let avg = s / f;
        for _ in start..=end {
            ironed.push(avg.clone());
        }
        if end > start {
            runs.push((start, end));
        }
    }
    (ironed, runs)
}

pub fn ironed_virtuals(marg: &MarginalDistribution) -> IronedVirtualValue {
    let values = marg.values().to_vec();
    let masses = marg.masses().to_vec();
    let raw = raw_virtuals(&values, &masses);
    let (ironed, runs) = pool_adjacent_violators(&raw, &masses);
    IronedVirtualValue {
        values,
        masses,
        raw,
        ironed,
        runs,
    }
}

/// One positive flow entry `λ(from, to)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowEdge {
    #[serde(with = "rational::serde_fraction_vec")]
    pub from: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    pub to: Vec<Rational>,
    #[serde(with = "rational::serde_fraction")]
    pub weight: Rational,
}

/// Flow between support points, indexed in support order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalFlow {
    types: Vec<Vec<Rational>>,
    masses: Vec<Rational>,
    lambda: BTreeMap<(usize, usize), Rational>,
    sink: Vec<Rational>,
    virtuals: Vec<Vec<Rational>>,
}

impl CanonicalFlow {
    pub fn types(&self) -> &[Vec<Rational>] {
        &self.types
    }

    /// `λ(from, to)` by support index; absent entries are zero.
    pub fn lambda(&self, from: usize, to: usize) -> Rational {
        self.lambda
            .get(&(from, to))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// `λ(t, ∅)`.
    pub fn sink(&self, t: usize) -> &Rational {
        &self.sink[t]
    }

    /// `Φ(t)` by support index.
    pub fn virtuals(&self) -> &[Vec<Rational>] {
        &self.virtuals
    }

    pub fn edges(&self) -> Vec<FlowEdge> {
        self.lambda
            .iter()
            .map(|(&(a, b), w)| FlowEdge {
                from: self.types[a].clone(),
                to: self.types[b].clone(),
                weight: w.clone(),
            })
            .collect()
    }

    /// `f(t) + Σ λ(t',t) − Σ λ(t,t') − λ(t,∅)` per type.
    pub fn conservation_residuals(&self) -> Vec<Rational> {
        let mut res: Vec<Rational> = self
            .masses
            .iter()
            .zip(&self.sink)
            .map(|(f, s)| f - s)
            .collect();
        for (&(a, b), w) in &self.lambda {
            res[b] += w;
            res[a] -= w;
        }
        res
    }

    pub fn is_conserved(&self) -> bool {
        self.conservation_residuals().iter().all(Zero::is_zero)
            && self.sink.iter().all(|s| !s.is_negative())
            && self.lambda.values().all(|w| !w.is_negative())
    }

    /// Every positive edge joins two types of the same region that differ
    /// only in that region's coordinate.
    pub fn stays_within_regions(&self, regions: &Regions) -> bool {
        self.lambda.keys().all(|&(a, b)| {
            let j = regions.favorite[a];
            regions.favorite[b] == j
                && drop_coord(&self.types[a], j) == drop_coord(&self.types[b], j)
        })
    }

    /// Serializable view with the full `λ`.
    pub fn audit(&self) -> FlowAudit {
        FlowAudit {
            edges: self.edges(),
            sink: self
                .types
                .iter()
                .zip(&self.sink)
                .filter(|(_, s)| !s.is_zero())
                .map(|(t, s)| FlowEdge {
                    from: t.clone(),
                    to: Vec::new(),
                    weight: s.clone(),
                })
                .collect(),
            virtuals: self
                .types
                .iter()
                .zip(&self.virtuals)
                .map(|(t, phi)| TypeVirtual {
                    ty: t.clone(),
                    phi: phi.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeVirtual {
    #[serde(rename = "type", with = "rational::serde_fraction_vec")]
    pub ty: Vec<Rational>,
    #[serde(with = "rational::serde_fraction_vec")]
    pub phi: Vec<Rational>,
}

/// `λ` as edge lists; sink edges have an empty `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowAudit {
    pub edges: Vec<FlowEdge>,
    pub sink: Vec<FlowEdge>,
    pub virtuals: Vec<TypeVirtual>,
}

/// Types of `R_j` sharing `t_{−j}`, ascending in `t_j`.
fn region_chains(v: &DiscreteJointDistribution, regions: &Regions) -> Vec<(usize, Vec<usize>)> {
    let mut chains = Vec::new();
    for j in 0..v.num_items() {
        let mut groups: BTreeMap<Vec<Rational>, Vec<usize>> = BTreeMap::new();
        for i in regions.members(j) {
            groups
                .entry(drop_coord(&v.support()[i], j))
                .or_default()
                .push(i);
        }
        for (_, mut chain) in groups {
            chain.sort_by(|&a, &b| v.support()[a][j].cmp(&v.support()[b][j]));
            chains.push((j, chain));
        }
    }
    chains
}

fn add_flow(lambda: &mut BTreeMap<(usize, usize), Rational>, from: usize, to: usize, w: &Rational) {
    if !w.is_zero() {
        *lambda.entry((from, to)).or_insert_with(Rational::zero) += w;
    }
}

/// `Φ(t) = t − (1/f(t))·Σ λ(t',t)(t' − t)`, computed from `λ` alone.
fn virtuals_from_flow(
    types: &[Vec<Rational>],
    masses: &[Rational],
    lambda: &BTreeMap<(usize, usize), Rational>,
) -> Vec<Vec<Rational>> {
    let mut pull: Vec<Vec<Rational>> = types
        .iter()
        .map(|t| vec![Rational::zero(); t.len()])
        .collect();
    for (&(from, to), w) in lambda {
        for (k, acc) in pull[to].iter_mut().enumerate() {
            *acc += w * (&types[from][k] - &types[to][k]);
        }
    }
    types
        .iter()
        .zip(masses)
        .zip(pull)
        .map(|((t, f), p)| t.iter().zip(p).map(|(x, q)| x - q / f).collect())
        .collect()
}

/// The canonical flow: inside each region chain, every type passes all flow
/// it receives to its predecessor in coordinate `j`, the bottom of the chain
/// drains to `∅`, and cycles between neighbours iron `Φ_j` along the chain.
pub fn build_canonical_flow(v: &DiscreteJointDistribution) -> CanonicalFlow {
    let regions = compute_regions(v);
    let types = v.support().to_vec();
    let masses = v.masses().to_vec();
    let n = types.len();
    let mut lambda = BTreeMap::new();
    let mut sink = vec![Rational::zero(); n];
    for (j, chain) in region_chains(v, &regions) {
        let vals: Vec<Rational> = chain.iter().map(|&i| types[i][j].clone()).collect();
        let fs: Vec<Rational> = chain.iter().map(|&i| masses[i].clone()).collect();
        let mut above = Rational::zero();
        for k in (0..chain.len()).rev() {
            if k + 1 < chain.len() {
                add_flow(&mut lambda, chain[k + 1], chain[k], &above);
            }
            above += &fs[k];
        }
        sink[chain[0]] = above;

        // A cycle of w units between neighbours k < k+1 moves
        // w·(t_{k+1} − t_k) of weighted virtual value from k to k+1. The
        // prefix excess over the run average is nonnegative on a pooled run.
        let raw = raw_virtuals(&vals, &fs);
        let (_, runs) = pool_adjacent_violators(&raw, &fs);
        for (start, end) in runs {
            let mass = rational::sum(&fs[start..=end]);
            let total = (start..=end).fold(Rational::zero(), |acc, k| acc + &fs[k] * &raw[k]);
            let avg = total / mass;
            let mut excess = Rational::zero();
            for k in start..end {
                excess += &fs[k] * (&raw[k] - &avg);
                let w = &excess / (&vals[k + 1] - &vals[k]);
                add_flow(&mut lambda, chain[k], chain[k + 1], &w);
                add_flow(&mut lambda, chain[k + 1], chain[k], &w);
            }
        }
    }
    let virtuals = virtuals_from_flow(&types, &masses, &lambda);
    CanonicalFlow {
        types,
        masses,
        lambda,
        sink,
        virtuals,
    }
}

/// Conditional ironed virtual values `φ̃(t_j | t_{−j})`, cached by `(j, t_{−j})`.
struct ConditionalVirtuals<'a> {
    v: &'a DiscreteJointDistribution,
    cache: BTreeMap<(usize, Vec<Rational>), IronedVirtualValue>,
}

impl<'a> ConditionalVirtuals<'a> {
    fn new(v: &'a DiscreteJointDistribution) -> Self {
        Self {
            v,
            cache: BTreeMap::new(),
        }
    }

    fn get(&mut self, t: &[Rational], j: usize) -> Result<Rational> {
        let key = (j, drop_coord(t, j));
        if !self.cache.contains_key(&key) {
            let marg = conditional_marginal(self.v, j, &key.1)?;
            self.cache.insert(key.clone(), ironed_virtuals(&marg));
        }
        Ok(self.cache[&key]
            .at(&t[j])
            .cloned()
            .expect("type lies in its own conditional support"))
    }
}

/// Property (1): `Φ_j(t) = t_j` off the region. Property (2): `Φ_j(t) ≤
/// φ̃(t_j | t_{−j})` on it. Returns the number of types violating each.
pub fn flow_property_violations(
    v: &DiscreteJointDistribution,
    flow: &CanonicalFlow,
) -> Result<(usize, usize)> {
    let regions = compute_regions(v);
    let mut cond = ConditionalVirtuals::new(v);
    let (mut off, mut on) = (0, 0);
    for (i, t) in v.support().iter().enumerate() {
        for (j, phi) in flow.virtuals[i].iter().enumerate() {
            if regions.favorite[i] == j {
                if phi > &cond.get(t, j)? {
                    on += 1;
                }
            } else if phi != &t[j] {
                off += 1;
            }
        }
    }
    Ok((off, on))
}

/// The three components of the flow upper bound for a fixed allocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    #[serde(with = "rational::serde_fraction")]
    pub single: Rational,
    #[serde(with = "rational::serde_fraction")]
    pub core: Rational,
    #[serde(with = "rational::serde_fraction")]
    pub tail: Rational,
    /// `Σ f(t) π(t)·Φ(t)` for the canonical flow.
    #[serde(with = "rational::serde_fraction")]
    pub flow_bound: Rational,
    /// The threshold scale `r = SRev(V̂)`.
    #[serde(with = "rational::serde_fraction")]
    pub r: Rational,
}

impl Decomposition {
    pub fn total(&self) -> Rational {
        &self.single + &self.core + &self.tail
    }
}

/// Allocation of each support point, looked up by the menu's type labels.
fn allocations(v: &DiscreteJointDistribution, mech: &Mechanism) -> Result<Vec<Vec<Rational>>> {
    v.support()
        .iter()
        .map(|t| {
            mech.options
                .iter()
                .find(|o| &o.ty == t)
                .map(|o| o.allocation.clone())
                .ok_or_else(|| Error::InvalidArgument("mechanism has no option for a type".into()))
        })
        .collect()
}

/// Single, Core and Tail for the allocation of `mech`, with `r = SRev(V̂)`.
pub fn decompose(v: &DiscreteJointDistribution, mech: &Mechanism) -> Result<Decomposition> {
    let (r, _) = srev_unbudgeted(v);
    let pi = allocations(v, mech)?;
    let regions = compute_regions(v);
    let flow = build_canonical_flow(v);
    let threshold = &r + &r;
    let mut cond = ConditionalVirtuals::new(v);
    let (mut single, mut core, mut tail, mut bound) = (
        Rational::zero(),
        Rational::zero(),
        Rational::zero(),
        Rational::zero(),
    );
    for (i, (t, f)) in v.iter().enumerate() {
        bound += f * rational::dot(&pi[i], &flow.virtuals[i]);
        for j in 0..v.num_items() {
            let weight = f * &pi[i][j];
            if regions.favorite[i] == j {
                single += &weight * cond.get(t, j)?;
            } else if t[j] <= threshold {
                core += &weight * &t[j];
            } else {
                tail += &weight * &t[j];
            }
        }
    }
    Ok(Decomposition {
        single,
        core,
        tail,
        flow_bound: bound,
        r,
    })
}

/// Result of the duality suite: the report, and the flow for audit.
#[derive(Debug, Clone)]
pub struct DualityOutcome {
    pub report: Report,
    pub flow: CanonicalFlow,
    pub decomposition: Decomposition,
}

/// Maximum support size for which the full `λ` is included in JSON output.
pub const FLOW_AUDIT_LIMIT: usize = 16;

/// The canonical-flow properties and the Single, Core and Tail bounds, each
/// checked exactly.
pub fn check_core_tail_lemmas(vhat: &WeaklyCorrelated) -> Result<DualityOutcome> {
    let v = vhat.dist();
    let (rev, mech) = rev_unbudgeted(v)?;
    let (srev, _) = srev_unbudgeted(v);
    let (brev, _) = brev_unbudgeted(v);
    let flow = build_canonical_flow(v);
    let regions = compute_regions(v);
    let dec = decompose(v, &mech)?;
    let (off, on) = flow_property_violations(v, &flow)?;

    let mut report = Report::new();
    report.quantity("Rev(V^)", &rev);
    report.quantity("SRev(V^)", &srev);
    report.quantity("BRev(V^)", &brev);
    report.quantity("Single", &dec.single);
    report.quantity("Core", &dec.core);
    report.quantity("Tail", &dec.tail);
    report.quantity("flow bound", &dec.flow_bound);

    report.push(Check::holds("flow conservation", flow.is_conserved(), None));
    report.push(Check::holds(
        "flow stays within regions",
        flow.stays_within_regions(&regions),
        None,
    ));
    report.push(Check::holds(
        "virtual value off region equals value",
        off == 0,
        (off > 0).then(|| format!("{off} coordinates differ")),
    ));
    report.push(Check::holds(
        "virtual value on region at most conditional ironed virtual value",
        on == 0,
        (on > 0).then(|| format!("{on} coordinates exceed")),
    ));
    report.push(Check::le("Rev(V^) <= flow bound", &rev, &dec.flow_bound));
    report.push(Check::le(
        "flow bound <= Single + Core + Tail",
        &dec.flow_bound,
        &dec.total(),
    ));
    let two = Rational::from_integer(2.into());
    let three = Rational::from_integer(3.into());
    let four = Rational::from_integer(4.into());
    let five = Rational::from_integer(5.into());
    report.push(Check::le(
        "Single <= 2 BRev + SRev",
        &dec.single,
        &(&two * &brev + &srev),
    ));
    report.push(Check::le("Tail <= SRev", &dec.tail, &srev));
    report.push(Check::le(
        "Core <= 2 BRev + 3 SRev",
        &dec.core,
        &(&two * &brev + &three * &srev),
    ));
    report.push(Check::le(
        "Rev(V^) <= 5 SRev + 4 BRev",
        &rev,
        &(&five * &srev + &four * &brev),
    ));
    Ok(DualityOutcome {
        report,
        flow,
        decomposition: dec,
    })
}

/// Concentration of the truncated values `s_j = min(v̂_j, 2r)`.
pub fn check_variance_lemma(vhat: &WeaklyCorrelated, r: &Rational) -> Result<Report> {
    let v = vhat.dist();
    let m = v.num_items();
    let cut = r + r;
    let s: Vec<Vec<Rational>> = v
        .support()
        .iter()
        .map(|t| t.iter().map(|x| rational::min(x, &cut)).collect())
        .collect();
    let expect = |g: &dyn Fn(&[Rational]) -> Rational| {
        s.iter()
            .zip(v.masses())
            .fold(Rational::zero(), |acc, (x, f)| acc + f * g(x))
    };
    let means: Vec<Rational> = (0..m).map(|j| expect(&|x| x[j].clone())).collect();
    let items = srev_unbudgeted_items(v);
    let four = Rational::from_integer(4.into());

    let mut report = Report::new();
    report.quantity("r", r);
    for i in 0..m {
        for j in i + 1..m {
            let cov = expect(&|x| &x[i] * &x[j]) - &means[i] * &means[j];
            report.push(Check::le(
                format!("Cov(s_{}, s_{}) <= 0", i + 1, j + 1),
                &cov,
                &Rational::zero(),
            ));
        }
    }
    for (j, (rj, _)) in items.iter().enumerate() {
        let var = expect(&|x| &x[j] * &x[j]) - &means[j] * &means[j];
        report.quantity(format!("r_{}", j + 1), rj);
        report.push(Check::le(
            format!("Var(s_{}) <= 4 r r_{}", j + 1, j + 1),
            &var,
            &(&four * r * rj),
        ));
    }
    let mean_norm = rational::sum(&means);
    let var_norm = expect(&|x| {
        let d = l1(x) - &mean_norm;
        &d * &d
    });
    report.quantity("E[|s|_1]", &mean_norm);
    report.quantity("Var(|s|_1)", &var_norm);
    report.push(Check::le("Var(|s|_1) <= 4 r^2", &var_norm, &(&four * r * r)));

    // The bundle priced at E‖s‖₁ − 3r sells with probability at least 5/9.
    let price = &mean_norm - &(Rational::from_integer(3.into()) * r);
    let sold = v
        .iter()
        .filter(|(t, _)| l1(t) >= price)
        .fold(Rational::zero(), |acc, (_, f)| acc + f);
    report.push(Check::le(
        "Pr[|v|_1 >= E[|s|_1] - 3r] >= 5/9",
        &rational::frac(5, 9),
        &sold,
    ));
    Ok(report)
}

/// Wrap a distribution and cap as `V̂`, failing unless the base is a product.
pub fn weakly_correlated(v: &DiscreteJointDistribution, cap: &Rational) -> Result<WeaklyCorrelated> {
    WeaklyCorrelated::new(v.clone(), cap.clone()).map_err(|e| match e {
        Error::RequiresIndependence => Error::RequiresWeaklyCorrelated,
        other => other,
    })
}

/// Both duality reports on one `V̂`, with `r = SRev(V̂)`.
pub fn check_duality(vhat: &WeaklyCorrelated) -> Result<DualityOutcome> {
    let mut out = check_core_tail_lemmas(vhat)?;
    let r = out.decomposition.r.clone();
    out.report.extend(check_variance_lemma(vhat, &r)?);
    Ok(out)
}
