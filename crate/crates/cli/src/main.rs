//! `wallet` — command-line front end for the digital wallet engine.
//!
//! Exit codes: 0 success, 2 validation/permanent failure, 3 transient
//! failure, 4 usage error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use wallet_cli::persist::{self, PersistError};
use wallet_cli::sim::{self, SimConfig};
use wallet_core::{
    BusinessCalendar, CustomerId, Engine, EngineError, FaultConfig, InvestError, Money,
    PendingRequest, SimulatedGateway, SubwalletId, Transaction, TransactionId, TransactionStatus,
    WalletError, WalletType,
};

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 2;
const EXIT_TRANSIENT: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "wallet", version, about = "Transactional digital wallet engine")]
struct Cli {
    /// Directory holding persisted state
    #[arg(long, global = true, default_value = "state")]
    state_dir: PathBuf,

    /// Print machine-readable JSON
    #[arg(long, global = true)]
    json: bool,

    /// Override the logical clock (RFC 3339, e.g. 2025-01-03T00:00:00Z)
    #[arg(long, global = true)]
    now: Option<DateTime<Utc>>,

    /// Holiday list file for the business calendar, one ISO date per line
    #[arg(long, global = true)]
    holidays: Option<PathBuf>,

    /// Fail the next k external gateway calls
    #[arg(long, global = true, env = "GW_FAIL_NEXT_K", default_value_t = 0)]
    gw_fail_next_k: u64,

    /// Probability in [0,1] that an external gateway call fails
    #[arg(long, global = true, env = "GW_FAIL_PROB", default_value_t = 0.0)]
    gw_fail_prob: f64,

    /// Seed for the gateway fault generator
    #[arg(long, global = true, env = "GW_SEED", default_value_t = 0)]
    gw_seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Customer management
    Customer {
        #[command(subcommand)]
        action: CustomerCmd,
    },
    /// Investment policy management
    Policy {
        #[command(subcommand)]
        action: PolicyCmd,
    },
    /// Deposit external funds into the real-money wallet
    Deposit(CustomerAmount),
    /// Withdraw real-money funds to an external account
    Withdraw(CustomerAmount),
    /// Instant transfers between real-money and emergency funds
    Emergency {
        #[command(subcommand)]
        action: EmergencyCmd,
    },
    /// Hold real-money funds for investment, settled next business day
    Invest(CustomerAmount),
    /// Hold investment funds for liquidation, settled next business day
    Liquidate(CustomerAmount),
    /// Settle pending requests initiated on an earlier business day
    Settle {
        /// Settlement date (YYYY-MM-DD); also advances the logical clock
        #[arg(long)]
        date: NaiveDate,
    },
    /// Re-enter processing for a retryable transaction
    Retry {
        #[arg(long = "txn-id")]
        txn_id: String,
    },
    /// Balance summary for one customer
    Balance {
        #[arg(long)]
        customer: String,
    },
    /// Journal inspection
    Ledger {
        #[command(subcommand)]
        action: LedgerCmd,
    },
    /// State import/export
    State {
        #[command(subcommand)]
        action: StateCmd,
    },
    /// Run the seeded simulation harness (does not touch the state dir)
    Simulate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        ops: u64,
    },
}

#[derive(Subcommand)]
enum CustomerCmd {
    /// Create the three wallets of a new customer
    Create {
        #[arg(long)]
        customer: String,
        /// Investment option names, comma separated (e.g. stocks,bonds)
        #[arg(long, value_delimiter = ',', required = true)]
        options: Vec<String>,
    },
}

#[derive(Subcommand)]
enum PolicyCmd {
    /// Store the customer's allocation as name=basis-points pairs summing to 10000
    Set {
        #[arg(long)]
        customer: String,
        /// e.g. stocks=5000,realEstate=3000,bonds=1500,crypto=500
        #[arg(long, value_delimiter = ',', required = true)]
        alloc: Vec<String>,
    },
}

#[derive(Subcommand)]
enum EmergencyCmd {
    /// Move real-money funds into the emergency-funds wallet
    Allocate(CustomerAmount),
    /// Move emergency funds back to the real-money wallet
    Release(CustomerAmount),
}

#[derive(Subcommand)]
enum LedgerCmd {
    /// Print the journal as JSON lines, ordered by seq
    Dump,
}

#[derive(Subcommand)]
enum StateCmd {
    /// Write the current state into a directory
    Export {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Replace the current state with a previously exported directory
    Import {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct CustomerAmount {
    #[arg(long)]
    customer: String,
    /// Decimal amount with at most 2 fraction digits (e.g. 100.00)
    #[arg(long, allow_hyphen_values = true)]
    amount: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::from(EXIT_OK);
            }
            eprint!("{err}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn failed(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_FAILED,
            message: message.into(),
        }
    }
}

impl From<PersistError> for Failure {
    fn from(err: PersistError) -> Self {
        Failure::failed(err.to_string())
    }
}

impl From<WalletError> for Failure {
    fn from(err: WalletError) -> Self {
        Failure::failed(err.to_string())
    }
}

impl From<EngineError> for Failure {
    fn from(err: EngineError) -> Self {
        Failure::failed(err.to_string())
    }
}

fn parse_amount(raw: &str) -> Result<Money, Failure> {
    Money::parse_decimal(raw).map_err(|e| Failure::usage(format!("--amount {raw:?}: {e}")))
}

fn load_calendar(path: &Path) -> Result<BusinessCalendar, Failure> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("--holidays {}: {e}", path.display())))?;
    let mut calendar = BusinessCalendar::new();
    for (number, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let date: NaiveDate = line
            .parse()
            .map_err(|e| Failure::usage(format!("--holidays line {}: {e}", number + 1)))?;
        calendar.add_holiday(date);
    }
    Ok(calendar)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if !(0.0..=1.0).contains(&cli.gw_fail_prob) {
        return Err(Failure::usage("--gw-fail-prob must be within [0, 1]"));
    }

    // simulate is self-contained: fresh engine, no persistence
    if let Command::Simulate { seed, ops } = &cli.command {
        let mut config = SimConfig::new(*seed, *ops);
        config.gateway = FaultConfig {
            fail_next_k: cli.gw_fail_next_k,
            fail_probability: cli.gw_fail_prob,
            seed: cli.gw_seed,
        };
        let (report, _) = sim::run(&config);
        if cli.json {
            println!("{}", report.to_json());
        } else {
            println!(
                "simulate seed={} ops={}: {} completed, {} failed, {} transient, {} settled",
                report.seed,
                report.ops_requested,
                report.operations.completed,
                report.operations.failed,
                report.operations.transient,
                report.operations.settled,
            );
            println!(
                "invariant checks: {}, violations: {}",
                report.invariant_checks,
                report.violations.len()
            );
            for violation in &report.violations {
                println!("violation: {violation}");
            }
        }
        return Ok(if report.violations.is_empty() {
            EXIT_OK
        } else {
            EXIT_FAILED
        });
    }

    let mut engine = persist::load_or_default(&cli.state_dir)?;
    engine.gateway.set_fault_config(FaultConfig {
        fail_next_k: cli.gw_fail_next_k,
        fail_probability: cli.gw_fail_prob,
        seed: cli.gw_seed,
    });
    if let Some(now) = cli.now {
        engine.clock.advance_to(now);
    }
    if let Some(path) = &cli.holidays {
        engine.calendar = load_calendar(path)?;
    }

    let out = Output { json: cli.json };
    match cli.command {
        Command::Simulate { .. } => unreachable!("handled above"),
        Command::Customer {
            action: CustomerCmd::Create { customer, options },
        } => {
            let customer = CustomerId::new(customer);
            let (rm, ef, inv) = engine
                .create_customer(&customer, &options)
                .map_err(|e| Failure::failed(e.to_string()))?;
            persist::export(&engine, &cli.state_dir)?;
            out.emit(
                json!({
                    "customer": customer,
                    "wallets": [rm, ef, inv],
                }),
                format!(
                    "created wallets for {customer}: real-money {}, emergency-funds {}, investment {} ({} options)",
                    rm.id,
                    ef.id,
                    inv.id,
                    inv.subwallets.len()
                ),
            );
            Ok(EXIT_OK)
        }
        Command::Policy {
            action: PolicyCmd::Set { customer, alloc },
        } => {
            let customer = CustomerId::new(customer);
            let allocations = parse_allocations(&engine, &customer, &alloc)?;
            let policy = engine
                .set_policy(&customer, allocations)
                .map_err(|e| Failure::failed(e.to_string()))?;
            persist::export(&engine, &cli.state_dir)?;
            out.emit(
                json!({ "policy": policy }),
                format!(
                    "stored policy for {customer} over {} subwallets",
                    policy.allocations.len()
                ),
            );
            Ok(EXIT_OK)
        }
        Command::Deposit(args) => {
            let amount = parse_amount(&args.amount)?;
            let txn = engine.deposit(&CustomerId::new(args.customer), amount)?;
            finish_transaction(&engine, &cli.state_dir, &out, txn)
        }
        Command::Withdraw(args) => {
            let amount = parse_amount(&args.amount)?;
            let txn = engine.withdraw(&CustomerId::new(args.customer), amount)?;
            finish_transaction(&engine, &cli.state_dir, &out, txn)
        }
        Command::Emergency { action } => {
            let txn = match action {
                EmergencyCmd::Allocate(args) => {
                    let amount = parse_amount(&args.amount)?;
                    engine.emergency_allocate(&CustomerId::new(args.customer), amount)?
                }
                EmergencyCmd::Release(args) => {
                    let amount = parse_amount(&args.amount)?;
                    engine.emergency_release(&CustomerId::new(args.customer), amount)?
                }
            };
            finish_transaction(&engine, &cli.state_dir, &out, txn)
        }
        Command::Invest(args) => {
            let amount = parse_amount(&args.amount)?;
            let result = engine.invest(&CustomerId::new(args.customer), amount);
            finish_pending(&engine, &cli.state_dir, &out, result)
        }
        Command::Liquidate(args) => {
            let amount = parse_amount(&args.amount)?;
            let result = engine.liquidate(&CustomerId::new(args.customer), amount);
            finish_pending(&engine, &cli.state_dir, &out, result)
        }
        Command::Settle { date } => {
            engine.clock.advance_to_date(date);
            let run = engine.settle(date);
            persist::export(&engine, &cli.state_dir)?;
            let settled_ids: Vec<&str> = run.settled.iter().map(|r| r.id.as_str()).collect();
            out.emit(
                json!({
                    "date": date,
                    "settled": run.settled,
                    "failed": run
                        .failed
                        .iter()
                        .map(|(id, reason)| json!({ "request_id": id, "reason": format!("{reason:?}") }))
                        .collect::<Vec<_>>(),
                }),
                format!(
                    "settled {} request(s) as of {date}{}{}",
                    run.settled.len(),
                    if settled_ids.is_empty() { "" } else { ": " },
                    settled_ids.join(", ")
                ),
            );
            Ok(EXIT_OK)
        }
        Command::Retry { txn_id } => {
            let txn = engine.retry_transaction(&TransactionId::new(txn_id))?;
            finish_transaction(&engine, &cli.state_dir, &out, txn)
        }
        Command::Balance { customer } => {
            let summary = engine.wallet_summary(&CustomerId::new(customer))?;
            let mut human = format!("balances for {}:\n", summary.customer);
            for wallet in &summary.wallets {
                human.push_str(&format!(
                    "  {:<16} available {:>12}  holding {:>12}\n",
                    wallet.wallet_type.to_string(),
                    wallet.available.to_string(),
                    wallet.holding.to_string()
                ));
                if wallet.wallet_type == WalletType::Investment {
                    for sub in &wallet.subwallets {
                        human.push_str(&format!(
                            "    {:<14} available {:>12}  holding {:>12}\n",
                            sub.name,
                            sub.available.to_string(),
                            sub.holding.to_string()
                        ));
                    }
                }
            }
            out.emit(json!(summary), human.trim_end().to_owned());
            Ok(EXIT_OK)
        }
        Command::Ledger {
            action: LedgerCmd::Dump,
        } => {
            print!("{}", engine.ledger.export_jsonl());
            Ok(EXIT_OK)
        }
        Command::State { action } => match action {
            StateCmd::Export { dir } => {
                persist::export(&engine, &dir)?;
                out.emit(
                    json!({ "exported_to": dir }),
                    format!("state exported to {}", dir.display()),
                );
                Ok(EXIT_OK)
            }
            StateCmd::Import { dir } => {
                let imported = persist::import(&dir)?;
                persist::export(&imported, &cli.state_dir)?;
                out.emit(
                    json!({ "imported_from": dir }),
                    format!("state imported from {}", dir.display()),
                );
                Ok(EXIT_OK)
            }
        },
    }
}

/// Resolves `name=bp` pairs against the customer's investment subwallets.
/// Accepts subwallet ids as well as display names.
fn parse_allocations(
    engine: &Engine<SimulatedGateway>,
    customer: &CustomerId,
    pairs: &[String],
) -> Result<BTreeMap<SubwalletId, u32>, Failure> {
    let wallet = engine
        .wallets
        .wallet_of(customer, WalletType::Investment)
        .ok_or_else(|| Failure::failed(format!("unknown customer {customer}")))?;
    let mut allocations = BTreeMap::new();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--alloc entry {pair:?} is not name=bp")))?;
        let basis_points: u32 = value
            .parse()
            .map_err(|e| Failure::usage(format!("--alloc {pair:?}: {e}")))?;
        let by_id = wallet.subwallets.iter().find(|s| s.id.as_str() == key);
        let subwallet = match by_id {
            Some(s) => s,
            None => {
                let mut matches = wallet.subwallets.iter().filter(|s| s.name == key);
                let first = matches.next().ok_or_else(|| {
                    Failure::usage(format!("no investment subwallet named {key:?}"))
                })?;
                if matches.next().is_some() {
                    return Err(Failure::usage(format!(
                        "subwallet name {key:?} is ambiguous; use its id"
                    )));
                }
                first
            }
        };
        if allocations.insert(subwallet.id.clone(), basis_points).is_some() {
            return Err(Failure::usage(format!("duplicate --alloc entry for {key:?}")));
        }
    }
    Ok(allocations)
}

struct Output {
    json: bool,
}

impl Output {
    fn emit(&self, machine: serde_json::Value, human: String) {
        if self.json {
            println!(
                "{}",
                serde_json::to_string_pretty(&machine).expect("output serializes")
            );
        } else {
            println!("{human}");
        }
    }
}

fn exit_code_for(status: TransactionStatus) -> u8 {
    match status {
        TransactionStatus::Completed => EXIT_OK,
        TransactionStatus::Failed => EXIT_FAILED,
        TransactionStatus::TransientError => EXIT_TRANSIENT,
        TransactionStatus::Processing => EXIT_FAILED,
    }
}

fn finish_transaction(
    engine: &Engine<SimulatedGateway>,
    state_dir: &Path,
    out: &Output,
    txn: Transaction,
) -> Result<u8, Failure> {
    persist::export(engine, state_dir)?;
    let human = match (&txn.status, &txn.last_error) {
        (TransactionStatus::Completed, _) => {
            format!("{} completed (attempts {})", txn.id, txn.attempts)
        }
        (status, Some(err)) => format!("{} {status}: {err}", txn.id),
        (status, None) => format!("{} {status}", txn.id),
    };
    out.emit(json!({ "transaction": txn }), human);
    Ok(exit_code_for(txn.status))
}

fn finish_pending(
    engine: &Engine<SimulatedGateway>,
    state_dir: &Path,
    out: &Output,
    result: Result<PendingRequest, InvestError>,
) -> Result<u8, Failure> {
    persist::export(engine, state_dir)?;
    match result {
        Ok(request) => {
            out.emit(
                json!({ "request": request }),
                format!(
                    "{} pending: {} across {} bucket(s), settles next business day after {}",
                    request.id,
                    request.amount,
                    request.per_subwallet_amounts.len(),
                    request.initiated_on
                ),
            );
            Ok(EXIT_OK)
        }
        Err(err) => {
            let code = match err {
                InvestError::HoldTransient => EXIT_TRANSIENT,
                _ => EXIT_FAILED,
            };
            Err(Failure {
                code,
                message: err.to_string(),
            })
        }
    }
}
