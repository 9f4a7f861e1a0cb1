//! `budgetlab`: exact revenue computations and structural checks from the
//! command line. Exit codes: 0 all checks pass, 1 a check failed, 2 input
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use budgetlab::harness::{
    self, fuzz, params_for, reproduce_appendix_b, run_suite, RunOptions, Suite,
};
use budgetlab::instance::InstanceSpec;
use budgetlab::rational;
use budgetlab::report::{Check, Quantity, Status};
use budgetlab::distributions::DEFAULT_SUPPORT_LIMIT;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "budgetlab", version, about = "Revenue of a budget-constrained additive buyer, computed exactly")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Refuse joint supports larger than this.
    #[arg(long, global = true, default_value_t = DEFAULT_SUPPORT_LIMIT)]
    limit_support: usize,
    /// Use the default price grid instead of the exact separate-pricing
    /// optimum.
    #[arg(long, global = true)]
    grid_only: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rev^b, SRev^b, BRev^b and Rev for one instance file.
    Solve { file: PathBuf },
    /// Run a check suite on one instance file.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        file: PathBuf,
    },
    /// Run a check suite on generated instances.
    Fuzz {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; defaults to the BUDGETLAB_WORKERS variable, then
        /// to the number of cores.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Reproduce a published example.
    Reproduce {
        #[arg(value_enum)]
        example: Example,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Theorem1,
    Structure,
    Duality,
    Private,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Theorem1 => Suite::Theorem1,
            SuiteArg::Structure => Suite::Structure,
            SuiteArg::Duality => Suite::Duality,
            SuiteArg::Private => Suite::Private,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    AppendixB,
}

const PASS: u8 = 0;
const VIOLATION: u8 = 1;
const INPUT_ERROR: u8 = 2;

fn load(path: &PathBuf) -> Result<InstanceSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    InstanceSpec::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("reports serialize")
    );
}

fn print_quantities(quantities: &[Quantity]) {
    for q in quantities {
        println!("{} = {} (~{:.6})", q.name, rational::fmt(&q.value), q.decimal);
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        let tag = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let slack = c
            .slack
            .as_ref()
            .map(|s| format!(" slack {}", rational::fmt(s)))
            .unwrap_or_default();
        let note = c.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default();
        println!("{tag} {}{slack}{note}", c.name);
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    let opts = RunOptions {
        support_limit: cli.limit_support,
        grid_only: cli.grid_only,
    };
    match cli.command {
        Command::Solve { file } => {
            let spec = load(&file)?;
            let rep = harness::solve(&spec, &opts).map_err(|e| e.to_string())?;
            if cli.json {
                print_json(&rep);
            } else {
                println!("instance {}", rep.instance_hash);
                println!("b = {}", rational::fmt(&rep.budget));
                println!("Rev^b = {}", rational::fmt(&rep.rev_budget));
                if let (Some(s), Some(p)) = (&rep.srev_budget_exact, &rep.exact_prices) {
                    println!("SRev^b = {} at prices {}", rational::fmt(s), fmt_prices(p.prices()));
                }
                println!(
                    "SRev^b on grid = {} at prices {}",
                    rational::fmt(&rep.srev_budget_grid),
                    fmt_prices(rep.grid_prices.prices())
                );
                println!(
                    "BRev^b = {} at price {}",
                    rational::fmt(&rep.brev_budget),
                    rational::fmt(&rep.bundle_price.price)
                );
                println!("Rev = {}", rational::fmt(&rep.rev_unbudgeted));
            }
            Ok(PASS)
        }
        Command::Verify { suite, file } => {
            let spec = load(&file)?;
            let rep = run_suite(&spec, suite.into(), &opts).map_err(|e| e.to_string())?;
            if cli.json {
                print_json(&rep);
            } else {
                println!("instance {}", rep.instance_hash);
                print_quantities(&rep.quantities);
                print_checks(&rep.checks);
            }
            Ok(if rep.pass { PASS } else { VIOLATION })
        }
        Command::Fuzz {
            suite,
            count,
            seed,
            workers,
        } => {
            let suite: Suite = suite.into();
            let rep = fuzz(suite, count, seed, &params_for(suite), &opts, workers)
                .map_err(|e| e.to_string())?;
            if cli.json {
                print_json(&rep);
            } else {
                for e in rep.instances.iter().filter(|e| !e.pass) {
                    println!("instance {} ({})", e.index, e.instance_hash);
                    if let Some(err) = &e.error {
                        println!("ERROR {err}");
                    }
                    print_checks(&e.violations);
                    if let Some(replay) = &e.replay {
                        println!("{replay}");
                    }
                }
                println!(
                    "{} instances, {} violations, {} errors",
                    rep.count, rep.violations, rep.errors
                );
            }
            Ok(if rep.pass { PASS } else { VIOLATION })
        }
        Command::Reproduce {
            example: Example::AppendixB,
        } => {
            let rep = reproduce_appendix_b().map_err(|e| e.to_string())?;
            if cli.json {
                print_json(&rep);
            } else {
                print_quantities(&rep.quantities);
                print_checks(&rep.checks);
            }
            Ok(if rep.all_pass() { PASS } else { VIOLATION })
        }
    }
}

fn fmt_prices(p: &[budgetlab::Rational]) -> String {
    format!(
        "({})",
        p.iter().map(rational::fmt).collect::<Vec<_>>().join(", ")
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
