//! Acceptance suite: nine criteria on seeded instances, one PASS/FAIL line
//! each. Every criterion uses generator seed 1; the process exits nonzero if
//! any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use budgetlab::distributions::{cap_linf, product, MarginalDistribution};
use budgetlab::duality::{check_core_tail_lemmas, check_variance_lemma};
use budgetlab::harness::reproduce_appendix_b;
use budgetlab::instance::{generate_instance, GeneratorParams, InstanceSpec};
use budgetlab::mechanism::{rev_budget, rev_unbudgeted};
use budgetlab::private_budget::check_private;
use budgetlab::rational::{self, frac, int};
use budgetlab::report::{Check, Report};
use budgetlab::simple::{srev_budget_default_grid, srev_budget_exact, srev_unbudgeted};
use budgetlab::structure::{
    check_dominance_lemmas, check_main_bound, check_tail_bound, check_weakly_correlated_bound,
};
use budgetlab::{Rational, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;
const SUPPORT_LIMIT: usize = 4096;

/// Outcome of one criterion over its instances.
struct Tally {
    instances: usize,
    checks: usize,
    failed: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            instances: 0,
            checks: 0,
            failed: Vec::new(),
        }
    }

    fn record(&mut self, label: &str, outcome: Result<Vec<Check>>) {
        self.instances += 1;
        match outcome {
            Ok(checks) => {
                self.checks += checks.len();
                if let Some(c) = checks.iter().find(|c| c.is_violation()) {
                    let slack = c
                        .slack
                        .as_ref()
                        .map(|s| format!(" slack {}", rational::fmt(s)))
                        .unwrap_or_default();
                    let note = c.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default();
                    self.failed.push(format!("{label}: {}{slack}{note}", c.name));
                }
            }
            Err(e) => self.failed.push(format!("{label}: error {e}")),
        }
    }
}

fn report_line(id: usize, title: &str, tally: &Tally, elapsed: Duration, limit: Option<Duration>) -> bool {
    let slow = limit.is_some_and(|l| elapsed > l);
    let pass = tally.failed.is_empty() && !slow;
    let mut line = format!(
        "{} {id} {title}: {} instances, {} checks, {} failing, {:.1}s",
        if pass { "PASS" } else { "FAIL" },
        tally.instances,
        tally.checks,
        tally.failed.len(),
        elapsed.as_secs_f64()
    );
    if slow {
        line.push_str(&format!(" exceeds {}s", limit.unwrap().as_secs()));
    }
    if let Some(first) = tally.failed.first() {
        line.push_str(&format!("; first: {first}"));
    }
    println!("{line}");
    pass
}

fn label(spec: &InstanceSpec, index: u64) -> String {
    format!("instance {index} ({})", &spec.hash()[..12])
}

fn checks(r: Report) -> Vec<Check> {
    r.checks
}

fn instances(params: &GeneratorParams, count: u64) -> impl Iterator<Item = (u64, InstanceSpec)> + '_ {
    (0..count).map(move |i| (i, generate_instance(SEED, i, params)))
}

fn two_item_example() -> Tally {
    let mut t = Tally::new();
    t.record("two-item example", reproduce_appendix_b().map(checks));
    t
}

fn main_bounds() -> Tally {
    let mut t = Tally::new();
    for (i, spec) in instances(&GeneratorParams::default(), 200) {
        let out = spec
            .joint_with_limit(SUPPORT_LIMIT)
            .and_then(|v| check_main_bound(&v, &spec.budget))
            .map(checks);
        t.record(&label(&spec, i), out);
    }
    t
}

fn weakly_correlated_bound() -> Tally {
    let mut t = Tally::new();
    for (i, spec) in instances(&GeneratorParams::default(), 50) {
        let out = spec
            .weakly_correlated(SUPPORT_LIMIT)
            .and_then(|vhat| check_weakly_correlated_bound(&vhat, &spec.budget))
            .map(checks);
        t.record(&label(&spec, i), out);
    }
    t
}

fn tail_bound() -> Tally {
    let mut t = Tally::new();
    for (i, spec) in instances(&GeneratorParams::default(), 100) {
        let out = spec
            .joint_with_limit(SUPPORT_LIMIT)
            .and_then(|v| cap_linf(&v, &spec.budget))
            .and_then(|capped| check_tail_bound(&capped, &spec.budget))
            .map(checks);
        t.record(&label(&spec, i), out);
    }
    t
}

/// Two caps drawn from the achievable sums, so neither conditioning is empty,
/// with `c1 ≤ c2` from a stream keyed by the instance index.
fn dominance() -> Tally {
    let mut t = Tally::new();
    for (i, spec) in instances(&GeneratorParams::default(), 50) {
        let out = spec.joint_with_limit(SUPPORT_LIMIT).and_then(|v| {
            let sums: Vec<Rational> = v.l1_distribution().values().to_vec();
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            rng.set_stream(i);
            let a = rng.gen_range(0..sums.len());
            let b = rng.gen_range(0..sums.len());
            let (c1, c2) = (&sums[a.min(b)], &sums[a.max(b)]);
            check_dominance_lemmas(&v, c1, c2).map(checks)
        });
        t.record(&label(&spec, i), out);
    }
    t
}

fn duality() -> Tally {
    let mut t = Tally::new();
    for (i, spec) in instances(&GeneratorParams::default(), 50) {
        let out = spec
            .weakly_correlated(SUPPORT_LIMIT)
            .and_then(|vhat| check_core_tail_lemmas(&vhat))
            .map(|o| checks(o.report));
        t.record(&label(&spec, i), out);
    }
    t
}

/// Only the covariance and variance inequalities.
fn variance() -> Tally {
    let mut t = Tally::new();
    for (i, spec) in instances(&GeneratorParams::default(), 100) {
        let out = spec.weakly_correlated(SUPPORT_LIMIT).and_then(|vhat| {
            let r = srev_unbudgeted(vhat.dist()).0;
            check_variance_lemma(&vhat, &r).map(|rep| {
                rep.checks
                    .into_iter()
                    .filter(|c| c.name.starts_with("Cov") || c.name.starts_with("Var"))
                    .collect()
            })
        });
        t.record(&label(&spec, i), out);
    }
    t
}

fn private_budget() -> Tally {
    let params = GeneratorParams {
        with_budget_distribution: true,
        ..GeneratorParams::default()
    };
    let mut t = Tally::new();
    for (i, spec) in instances(&params, 30) {
        let out = spec.joint_with_limit(SUPPORT_LIMIT).and_then(|v| {
            let bd = spec.budget_distribution.as_ref().expect("generated with a budget distribution");
            check_private(&v, bd, false).map(checks)
        });
        t.record(&label(&spec, i), out);
    }
    t
}

/// The best single posted price, computed from the survival function directly.
fn best_posted_price(m: &MarginalDistribution) -> Rational {
    m.values()
        .iter()
        .map(|p| {
            let above: Rational = m
                .values()
                .iter()
                .zip(m.masses())
                .filter(|(x, _)| *x >= p)
                .map(|(_, q)| q.clone())
                .sum();
            p * above
        })
        .max()
        .expect("nonempty support")
}

fn tiny_oracles() -> Tally {
    let tiny = GeneratorParams {
        min_items: 2,
        max_items: 2,
        max_values: 2,
        max_grid_value: 3,
        max_denominator: 4,
        with_budget_distribution: false,
    };
    let single = GeneratorParams {
        min_items: 1,
        max_items: 1,
        ..tiny.clone()
    };
    let mut t = Tally::new();
    for i in 0..30 {
        let spec = generate_instance(SEED, i, &tiny);
        let out = (|| -> Result<Vec<Check>> {
            let v = spec.joint_with_limit(SUPPORT_LIMIT)?;
            let b = &spec.budget;
            let mut out = vec![Check::le(
                "grid SRev^b <= exact SRev^b",
                &srev_budget_default_grid(&v, b)?.0,
                &srev_budget_exact(&v, b)?.0,
            )];
            let top = v.max_l1().max(int(1));
            let sweep: Vec<Rational> = (1..=10).map(|k| &top * frac(k, 10)).collect();
            let revs = sweep
                .iter()
                .map(|b| rev_budget(&v, b).map(|r| r.0))
                .collect::<Result<Vec<_>>>()?;
            for k in 1..sweep.len() {
                let at = rational::fmt(&sweep[k]);
                out.push(Check::le(format!("Rev^b nondecreasing at b={at}"), &revs[k - 1], &revs[k]));
                out.push(Check::le(
                    format!("Rev^b / b nonincreasing at b={at}"),
                    &(&revs[k] / &sweep[k]),
                    &(&revs[k - 1] / &sweep[k - 1]),
                ));
            }

            let one = generate_instance(SEED, i, &single);
            let m = one.marginals()?.expect("independent instance").remove(0);
            let rev = rev_unbudgeted(&product(std::slice::from_ref(&m))?)?.0;
            out.push(Check::eq("single item Rev = best posted price", &rev, &best_posted_price(&m)));
            Ok(out)
        })();
        t.record(&label(&spec, i), out);
    }
    t
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Tally, Option<Duration>);
    let criteria: [Criterion; 9] = [
        ("two-item counterexample reproduction", two_item_example, Some(Duration::from_secs(60))),
        ("main bounds with both constants", main_bounds, Some(Duration::from_secs(600))),
        ("weakly correlated 5/6 bound", weakly_correlated_bound, None),
        ("tail bound on coordinate-capped values", tail_bound, None),
        ("dominance between two sum caps", dominance, None),
        ("canonical flow and Single/Core/Tail", duality, None),
        ("covariance and variance bounds", variance, None),
        ("private budget guarantees", private_budget, None),
        ("oracle cross-checks on tiny instances", tiny_oracles, None),
    ];
    let mut all = true;
    for (k, (title, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let tally = run();
        all &= report_line(k + 1, title, &tally, start.elapsed(), limit);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
