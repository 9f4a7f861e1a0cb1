//! Suites over instances, the seeded fuzz driver, and the counterexample
//! reproduction for separate pricing.

use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{cap_linf, DiscreteJointDistribution, DEFAULT_SUPPORT_LIMIT};
use crate::duality::{check_duality, FlowAudit, FLOW_AUDIT_LIMIT};
use crate::error::{Error, Result};
use crate::instance::{generate_instance, GeneratorParams, InstanceSpec};
use crate::mechanism::{rev_budget, rev_unbudgeted, Mechanism};
use crate::private_budget::check_private;
use crate::rational::{self, frac, int, Rational};
use crate::report::{Check, Quantity, Report};
use crate::simple::{
    brev_budget, buyer_knapsack, separate_pricing_revenue, srev_budget_default_grid,
    srev_budget_exact, BundlePrice, PriceVector,
};
use crate::structure::{
    check_dominance, check_dominance_lemmas, check_tail_bound, check_theorem1_chain,
    check_weakly_correlated_bound, Dominance,
};

/// Environment variable overriding the fuzz worker count.
pub const WORKERS_ENV: &str = "BUDGETLAB_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Theorem1,
    Structure,
    Duality,
    Private,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Suite::Theorem1),
            "structure" => Ok(Suite::Structure),
            "duality" => Ok(Suite::Duality),
            "private" => Ok(Suite::Private),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!("unknown suite {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub support_limit: usize,
    /// Use the default price grid instead of the exact separate-pricing
    /// optimum.
    pub grid_only: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            support_limit: DEFAULT_SUPPORT_LIMIT,
            grid_only: false,
        }
    }
}

/// Quantities and checks for one instance.
#[derive(Debug, Clone, Serialize)]
pub struct RevenueReport {
    pub instance_hash: String,
    pub suite: Suite,
    pub pass: bool,
    pub quantities: Vec<Quantity>,
    pub checks: Vec<Check>,
    /// The full canonical flow, for small supports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowAudit>,
    /// The instance in TOML, present when some check failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay: Option<String>,
}

impl RevenueReport {
    fn new(spec: &InstanceSpec, suite: Suite, report: Report, flow: Option<FlowAudit>) -> Self {
        let pass = report.all_pass();
        Self {
            instance_hash: spec.hash(),
            suite,
            pass,
            quantities: report.quantities,
            checks: report.checks,
            flow,
            replay: (!pass).then(|| spec.to_toml()),
        }
    }
}

/// `Rev^b`, `SRev^b` and `BRev^b` with the main bound, where the separate
/// pricing value comes from the grid (a lower bound on the optimum).
fn grid_main_bound(v: &DiscreteJointDistribution, b: &Rational) -> Result<Report> {
    let mut r = Report::new();
    let rev_b = rev_budget(v, b)?.0;
    let srev_b = srev_budget_default_grid(v, b)?.0;
    let brev_b = brev_budget(v, b).0;
    r.quantity("Rev^b(V)", &rev_b);
    r.quantity("SRev^b(V) grid", &srev_b);
    r.quantity("BRev^b(V)", &brev_b);
    r.push(Check::le(
        "main bound with grid SRev: Rev^b <= 5 SRev^b + 6 BRev^b",
        &rev_b,
        &(int(5) * &srev_b + int(6) * &brev_b),
    ));
    Ok(r)
}

fn theorem1(spec: &InstanceSpec, opts: &RunOptions) -> Result<Report> {
    let v = spec.joint_with_limit(opts.support_limit)?;
    if opts.grid_only {
        return grid_main_bound(&v, &spec.budget);
    }
    let mut r = check_theorem1_chain(&v, &spec.budget)?;
    if let Ok(vhat) = spec.weakly_correlated(opts.support_limit) {
        r.extend(check_weakly_correlated_bound(&vhat, &spec.budget)?);
    }
    Ok(r)
}

fn structure(spec: &InstanceSpec, opts: &RunOptions) -> Result<Report> {
    let v = spec.joint_with_limit(opts.support_limit)?;
    let b = &spec.budget;
    let mut r = Report::new();
    if v.is_independent() {
        r.extend(check_tail_bound(&cap_linf(&v, b)?, b)?);
    } else {
        r.push(Check::skipped("tail product bound", "requires independent values"));
    }
    // Two caps from the instance: the cap and the budget, in order.
    let cap = spec.cap.clone().unwrap_or_else(|| b / int(2));
    let (c1, c2) = if &cap <= b { (cap, b.clone()) } else { (b.clone(), cap) };
    match check_dominance_lemmas(&v, &c1, &c2) {
        Ok(rep) => r.extend(rep),
        Err(Error::EmptyConditioning) => r.push(Check::skipped(
            "conditioning order: V|c1 below V|c2",
            "conditioning event has zero probability",
        )),
        Err(e) => return Err(e),
    }
    Ok(r)
}

fn duality(spec: &InstanceSpec, opts: &RunOptions) -> Result<(Report, Option<FlowAudit>)> {
    let vhat = spec.weakly_correlated(opts.support_limit)?;
    let out = check_duality(&vhat)?;
    let audit = (vhat.dist().len() <= FLOW_AUDIT_LIMIT).then(|| out.flow.audit());
    Ok((out.report, audit))
}

fn private(spec: &InstanceSpec, opts: &RunOptions) -> Result<Report> {
    let bd = spec
        .budget_distribution
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("instance has no budget distribution".into()))?;
    let v = spec.joint_with_limit(opts.support_limit)?;
    check_private(&v, bd, opts.grid_only)
}

/// Run one suite. `All` runs every suite whose inputs the instance provides.
pub fn run_suite(spec: &InstanceSpec, suite: Suite, opts: &RunOptions) -> Result<RevenueReport> {
    let mut flow = None;
    let report = match suite {
        Suite::Theorem1 => theorem1(spec, opts)?,
        Suite::Structure => structure(spec, opts)?,
        Suite::Duality => {
            let (r, f) = duality(spec, opts)?;
            flow = f;
            r
        }
        Suite::Private => private(spec, opts)?,
        Suite::All => {
            let mut r = theorem1(spec, opts)?;
            r.extend(structure(spec, opts)?);
            match duality(spec, opts) {
                Ok((d, f)) => {
                    r.extend(d);
                    flow = f;
                }
                Err(Error::RequiresWeaklyCorrelated) => r.push(Check::skipped(
                    "duality suite",
                    "instance is not weakly correlated",
                )),
                Err(e) => return Err(e),
            }
            if spec.budget_distribution.is_some() {
                r.extend(private(spec, opts)?);
            }
            r
        }
    };
    Ok(RevenueReport::new(spec, suite, report, flow))
}

/// Revenues under the public budget with their witnesses.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub instance_hash: String,
    #[serde(with = "rational::serde_fraction")]
    pub budget: Rational,
    #[serde(with = "rational::serde_fraction")]
    pub rev_budget: Rational,
    pub mechanism: Mechanism,
    #[serde(with = "rational::serde_fraction_opt")]
    pub srev_budget_exact: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_prices: Option<PriceVector>,
    #[serde(with = "rational::serde_fraction")]
    pub srev_budget_grid: Rational,
    pub grid_prices: PriceVector,
    #[serde(with = "rational::serde_fraction")]
    pub brev_budget: Rational,
    pub bundle_price: BundlePrice,
    #[serde(with = "rational::serde_fraction")]
    pub rev_unbudgeted: Rational,
}

pub fn solve(spec: &InstanceSpec, opts: &RunOptions) -> Result<SolveReport> {
    let v = spec.joint_with_limit(opts.support_limit)?;
    let b = &spec.budget;
    let (rev_b, mechanism) = rev_budget(&v, b)?;
    let (exact, exact_prices) = if opts.grid_only {
        (None, None)
    } else {
        let (value, prices) = srev_budget_exact(&v, b)?;
        (Some(value), Some(prices))
    };
    let (grid, grid_prices) = srev_budget_default_grid(&v, b)?;
    let (brev, bundle_price) = brev_budget(&v, b);
    let rev = rev_unbudgeted(&v)?.0;
    Ok(SolveReport {
        instance_hash: spec.hash(),
        budget: b.clone(),
        rev_budget: rev_b,
        mechanism,
        srev_budget_exact: exact,
        exact_prices,
        srev_budget_grid: grid,
        grid_prices,
        brev_budget: brev,
        bundle_price,
        rev_unbudgeted: rev,
    })
}

/// Summary of one fuzzed instance.
#[derive(Debug, Clone, Serialize)]
pub struct FuzzEntry {
    pub index: u64,
    pub instance_hash: String,
    pub pass: bool,
    pub checks: usize,
    pub violations: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// The instance in TOML, present on any violation or error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub suite: Suite,
    pub seed: u64,
    pub count: u64,
    pub pass: bool,
    pub violations: usize,
    pub errors: usize,
    pub instances: Vec<FuzzEntry>,
}

/// Generator parameters suited to a suite.
pub fn params_for(suite: Suite) -> GeneratorParams {
    GeneratorParams {
        with_budget_distribution: matches!(suite, Suite::Private | Suite::All),
        ..GeneratorParams::default()
    }
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n > 0)
}

fn fuzz_one(suite: Suite, seed: u64, index: u64, params: &GeneratorParams, opts: &RunOptions) -> FuzzEntry {
    let spec = generate_instance(seed, index, params);
    let hash = spec.hash();
    match run_suite(&spec, suite, opts) {
        Ok(rep) => {
            let violations: Vec<Check> =
                rep.checks.iter().filter(|c| c.is_violation()).cloned().collect();
            FuzzEntry {
                index,
                instance_hash: hash,
                pass: violations.is_empty(),
                checks: rep.checks.len(),
                replay: (!violations.is_empty()).then(|| spec.to_toml()),
                violations,
                error: None,
            }
        }
        Err(e) => FuzzEntry {
            index,
            instance_hash: hash,
            pass: false,
            checks: 0,
            violations: Vec::new(),
            error: Some(e.to_string()),
            replay: Some(spec.to_toml()),
        },
    }
}

/// Run `suite` on generated instances `0..count`. Instances run in a worker
/// pool and are merged in index order, so the report does not depend on the
/// worker count.
pub fn fuzz(
    suite: Suite,
    count: u64,
    seed: u64,
    params: &GeneratorParams,
    opts: &RunOptions,
    workers: Option<usize>,
) -> Result<FuzzReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers.or_else(workers_from_env) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let instances: Vec<FuzzEntry> = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| fuzz_one(suite, seed, i, params, opts))
            .collect()
    });
    let violations = instances.iter().map(|e| e.violations.len()).sum();
    let errors = instances.iter().filter(|e| e.error.is_some()).count();
    Ok(FuzzReport {
        suite,
        seed,
        count,
        pass: instances.iter().all(|e| e.pass),
        violations,
        errors,
        instances,
    })
}

fn uniform_rows(rows: &[[i64; 3]]) -> DiscreteJointDistribution {
    DiscreteJointDistribution::from_points(
        3,
        rows.iter()
            .map(|r| (r.iter().map(|&x| int(x)).collect(), frac(1, rows.len() as i64))),
    )
    .expect("rows form a distribution")
}

pub const NON_MONOTONE_V1: [[i64; 3]; 3] = [[2, 0, 0], [0, 1, 1], [2, 1, 0]];
pub const NON_MONOTONE_V2: [[i64; 3]; 3] = [[2, 0, 0], [0, 1, 1], [2, 2, 0]];

/// Separate pricing is not monotone under dominance: `V1 ⪯ V2` yet at budget
/// 2, `SRev(V1) = 2` and `SRev(V2) < 2`.
pub fn reproduce_appendix_b() -> Result<Report> {
    let v1 = uniform_rows(&NON_MONOTONE_V1);
    let v2 = uniform_rows(&NON_MONOTONE_V2);
    let b = int(2);
    let prices = PriceVector::new(vec![int(2), int(1), int(1)])?;
    let mut r = Report::new();

    let (s1, p1) = srev_budget_exact(&v1, &b)?;
    let (s2, p2) = srev_budget_exact(&v2, &b)?;
    r.quantity("SRev^2(V1)", &s1);
    r.quantity("SRev^2(V2)", &s2);
    r.push(Check::eq("SRev^2(V1) = 2", &s1, &b).with_note(format!(
        "optimal prices {}",
        fmt_vec(p1.prices())
    )));
    r.push(Check::lt("SRev^2(V2) < 2", &s2, &b).with_note(format!(
        "optimal prices {}",
        fmt_vec(p2.prices())
    )));
    r.push(Check::eq(
        "prices (2,1,1) earn 2 on V1",
        &separate_pricing_revenue(&v1, &prices, &b)?,
        &b,
    ));

    // Items are 0-based here: item 1 of the narration is index 0.
    let behaviours: [(&str, [i64; 3], &[usize], i64); 4] = [
        ("type (2,0,0) buys the first item", [2, 0, 0], &[0], 2),
        ("type (0,1,1) buys the last two items", [0, 1, 1], &[1, 2], 2),
        ("type (2,1,0) buys the first item", [2, 1, 0], &[0], 2),
        ("type (2,2,0) buys only the second item", [2, 2, 0], &[1], 1),
    ];
    for (name, t, bundle, pay) in behaviours {
        let t: Vec<Rational> = t.iter().map(|&x| int(x)).collect();
        let purchase = buyer_knapsack(&t, &prices, &b)?;
        r.push(Check::holds(
            name,
            purchase.bundle == bundle && purchase.payment == int(pay),
            Some(format!(
                "bundle {:?}, payment {}",
                purchase.bundle.iter().map(|j| j + 1).collect::<Vec<_>>(),
                rational::fmt(&purchase.payment)
            )),
        ));
    }

    match check_dominance(&v2, &v1)? {
        Dominance::Dominated(coupling) => {
            let row3 = coupling.entries.iter().any(|e| {
                e.from == [int(2), int(2), int(0)]
                    && e.to == [int(2), int(1), int(0)]
                    && e.weight.is_positive()
            });
            r.push(Check::holds("V1 below V2", coupling.is_valid(&v2, &v1), None));
            r.push(Check::holds("coupling maps (2,2,0) to (2,1,0)", row3, None));
        }
        Dominance::NotDominated(_) => r.push(Check::holds("V1 below V2", false, None)),
    }
    Ok(r)
}

fn fmt_vec(v: &[Rational]) -> String {
    format!(
        "({})",
        v.iter().map(rational::fmt).collect::<Vec<_>>().join(",")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_monotone_example_reproduces() {
        let r = reproduce_appendix_b().unwrap();
        assert!(r.all_pass(), "{:?}", r.violations().collect::<Vec<_>>());
        assert_eq!(r.get("SRev^2(V1)"), Some(&int(2)));
        assert!(r.get("SRev^2(V2)").unwrap() < &int(2));
    }

    #[test]
    fn empty_fuzz_passes() {
        let rep = fuzz(Suite::All, 0, 1, &params_for(Suite::All), &RunOptions::default(), Some(1))
            .unwrap();
        assert!(rep.pass);
        assert!(rep.instances.is_empty());
    }

    #[test]
    fn fuzz_is_deterministic_across_worker_counts() {
        let params = params_for(Suite::Structure);
        let opts = RunOptions::default();
        let a = fuzz(Suite::Structure, 4, 11, &params, &opts, Some(1)).unwrap();
        let b = fuzz(Suite::Structure, 4, 11, &params, &opts, Some(2)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.pass);
    }

    #[test]
    fn suite_names() {
        assert_eq!("duality".parse::<Suite>().unwrap(), Suite::Duality);
        assert!("nope".parse::<Suite>().is_err());
    }
}
