//! Deterministic simulation harness. A seeded generator drives customers,
//! policies, and a random interleaving of the six wallet request kinds plus
//! settle ticks, retries, and gateway fault reconfigurations; after every
//! operation the financial invariants are re-checked incrementally. The same
//! seed and configuration always produce a byte-identical report.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use wallet_core::gateway::CallOutcome;
use wallet_core::{
    BalanceType, CustomerId, Engine, FaultConfig, Money, RequestOutcome, SimulatedGateway,
    SubwalletId, TransactionId, TransactionStatus, WalletRequest, WalletRequestKind, WalletSummary,
    WalletType,
};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub ops: u64,
    pub customers: u8,
    pub gateway: FaultConfig,
}

impl SimConfig {
    pub fn new(seed: u64, ops: u64) -> Self {
        SimConfig {
            seed,
            ops,
            customers: 3,
            gateway: FaultConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationCounts {
    pub attempted: u64,
    pub completed: u64,
    pub failed: u64,
    pub transient: u64,
    pub pending_recorded: u64,
    pub settled: u64,
    pub settle_runs: u64,
    pub retries: u64,
    pub fault_reconfigs: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStats {
    pub calls: u64,
    pub transient_failures: u64,
    pub reversals: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub ops_requested: u64,
    pub operations: OperationCounts,
    pub invariant_checks: u64,
    pub violations: Vec<String>,
    pub gateway: GatewayStats,
    pub final_balances: BTreeMap<String, WalletSummary>,
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Incremental invariant checker. It accumulates its own view of the ledger
/// (sums, pair counts, balances, per-customer flows) independently of the
/// engine's caches, so a divergence on either side is caught.
struct Checker {
    entries_seen: usize,
    txns_seen: usize,
    running_sum: i128,
    pair_info: HashMap<TransactionId, (u8, i128)>,
    balances: HashMap<(SubwalletId, BalanceType), i128>,
    funds_by_customer: BTreeMap<CustomerId, i128>,
    external_by_customer: BTreeMap<CustomerId, i128>,
    statuses: HashMap<TransactionId, TransactionStatus>,
    owner_cache: HashMap<SubwalletId, CustomerId>,
    checks: u64,
    violations: Vec<String>,
}

impl Checker {
    fn new() -> Self {
        Checker {
            entries_seen: 0,
            txns_seen: 0,
            running_sum: 0,
            pair_info: HashMap::new(),
            balances: HashMap::new(),
            funds_by_customer: BTreeMap::new(),
            external_by_customer: BTreeMap::new(),
            statuses: HashMap::new(),
            owner_cache: HashMap::new(),
            checks: 0,
            violations: Vec::new(),
        }
    }

    fn violation(&mut self, message: String) {
        // cap so a systematic bug does not balloon the report
        if self.violations.len() < 100 {
            self.violations.push(message);
        }
    }

    fn owner(&mut self, engine: &Engine<SimulatedGateway>, subwallet_id: &SubwalletId) -> CustomerId {
        if let Some(owner) = self.owner_cache.get(subwallet_id) {
            return owner.clone();
        }
        let owner = engine
            .wallets
            .owner_of_subwallet(subwallet_id)
            .map(|w| w.customer.clone())
            .unwrap_or_else(|| CustomerId::from("<unknown>"));
        self.owner_cache.insert(subwallet_id.clone(), owner.clone());
        owner
    }

    /// Consumes everything the last operation appended and re-checks the
    /// commit-point invariants.
    fn after_operation(&mut self, engine: &Engine<SimulatedGateway>) {
        self.checks += 1;
        let entries = engine.ledger.entries();
        let new = entries[self.entries_seen..].to_vec();
        self.entries_seen = entries.len();

        for pair in new.chunks(2) {
            if pair.len() != 2 {
                self.violation("ledger grew by an odd number of entries".to_owned());
                continue;
            }
            let mut customer_delta: BTreeMap<CustomerId, i128> = BTreeMap::new();
            let mut external_delta: BTreeMap<CustomerId, i128> = BTreeMap::new();
            for entry in pair {
                let amount = entry.amount.minor_units() as i128;
                self.running_sum += amount;
                let slot = self.pair_info.entry(entry.transaction_id.clone()).or_insert((0, 0));
                slot.0 = slot.0.saturating_add(1);
                slot.1 += amount;
                if slot.0 > 2 {
                    self.violation(format!(
                        "transaction {} has more than 2 ledger entries",
                        entry.transaction_id
                    ));
                }
                match &entry.subwallet_id {
                    Some(subwallet_id) => {
                        let key = (subwallet_id.clone(), entry.balance_type);
                        let balance = self.balances.entry(key).or_insert(0);
                        *balance += amount;
                        if *balance < 0 {
                            self.violation(format!(
                                "negative {:?} balance on {} after seq {}",
                                entry.balance_type, subwallet_id, entry.seq
                            ));
                        }
                        let owner = self.owner(engine, subwallet_id);
                        *customer_delta.entry(owner).or_default() += amount;
                    }
                    None => {
                        // external flow: attribute to the paired entry's owner
                        let partner = pair.iter().find(|e| e.subwallet_id.is_some());
                        match partner {
                            Some(partner) => {
                                let owner = self.owner(
                                    engine,
                                    partner.subwallet_id.as_ref().expect("checked"),
                                );
                                *external_delta.entry(owner).or_default() -= amount;
                            }
                            None => self.violation(format!(
                                "pair of transaction {} has two internal entries",
                                entry.transaction_id
                            )),
                        }
                    }
                }
            }
            let (count, sum) = self.pair_info[&pair[0].transaction_id];
            if count == 2 && sum != 0 {
                self.violation(format!(
                    "entry pair of {} sums to {sum}",
                    pair[0].transaction_id
                ));
            }
            for (customer, delta) in customer_delta {
                *self.funds_by_customer.entry(customer).or_default() += delta;
            }
            for (customer, delta) in external_delta {
                *self.external_by_customer.entry(customer).or_default() += delta;
            }
        }

        if self.running_sum != 0 {
            self.violation(format!("ledger sum drifted to {}", self.running_sum));
        }

        // conservation: funds on hand equal net external flows, per customer
        let mismatches: Vec<String> = self
            .funds_by_customer
            .iter()
            .filter_map(|(customer, funds)| {
                let external = self.external_by_customer.get(customer).copied().unwrap_or(0);
                (*funds != external).then(|| {
                    format!("customer {customer} holds {funds} but net external flow is {external}")
                })
            })
            .collect();
        for message in mismatches {
            self.violation(message);
        }

        // track newly created transactions
        let new_ids: Vec<TransactionId> = engine.transactions.ids_from(self.txns_seen).to_vec();
        self.txns_seen += new_ids.len();
        for id in new_ids {
            if let Some(txn) = engine.transactions.get(&id) {
                self.statuses.insert(id, txn.status);
            }
        }
    }

    /// Records a status observation for a transaction the driver touched.
    fn observe(&mut self, id: &TransactionId, status: TransactionStatus) {
        if let Some(previous) = self.statuses.get(id) {
            let legal = match previous {
                TransactionStatus::Processing => true,
                TransactionStatus::TransientError => matches!(
                    status,
                    TransactionStatus::TransientError
                        | TransactionStatus::Completed
                        | TransactionStatus::Failed
                ),
                TransactionStatus::Failed | TransactionStatus::Completed => status == *previous,
            };
            if !legal {
                self.violation(format!(
                    "transaction {id} moved {previous} -> {status} outside the state machine"
                ));
            }
        }
        self.statuses.insert(id.clone(), status);
    }

    /// Final sweep: the independently accumulated balances must equal both
    /// the engine's cached sums and the full-scan oracle.
    fn final_check(&mut self, engine: &Engine<SimulatedGateway>) {
        for ((subwallet_id, balance_type), tracked) in
            self.balances.iter().map(|(k, v)| (k.clone(), *v)).collect::<Vec<_>>()
        {
            let cached = engine.ledger.balance_unchecked(&subwallet_id, balance_type);
            let scanned = engine.ledger.balance_of_full_scan(&subwallet_id, balance_type);
            if cached.minor_units() as i128 != tracked || cached != scanned {
                self.violation(format!(
                    "balance mismatch on {subwallet_id} {balance_type:?}: tracked {tracked}, cached {}, scanned {}",
                    cached.minor_units(),
                    scanned.minor_units()
                ));
            }
        }
        if let Err(reason) = engine.verify_consistency() {
            self.violation(format!("consistency sweep: {reason}"));
        }
    }
}

const OPTION_SETS: [&[&str]; 3] = [
    &["stocks", "realEstate", "bonds", "crypto"],
    &["stocks", "bonds"],
    &["stocks"],
];

fn random_policy(
    rng: &mut ChaCha8Rng,
    subwallets: &[SubwalletId],
) -> BTreeMap<SubwalletId, u32> {
    let mut cuts: Vec<u32> = (0..subwallets.len() - 1)
        .map(|_| rng.gen_range(0..=10_000))
        .collect();
    cuts.sort_unstable();
    let mut allocations = BTreeMap::new();
    let mut previous = 0u32;
    for (subwallet, cut) in subwallets.iter().zip(cuts.iter().chain(std::iter::once(&10_000))) {
        allocations.insert(subwallet.clone(), cut - previous);
        previous = *cut;
    }
    allocations
}

/// Runs the simulation and returns the report together with the final engine
/// state (handy for persistence round-trip checks).
pub fn run(config: &SimConfig) -> (SimulationReport, Engine<SimulatedGateway>) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut engine = Engine::with_fault_config(config.gateway);
    let mut checker = Checker::new();
    let mut counts = OperationCounts::default();
    let mut transient_pool: Vec<TransactionId> = Vec::new();

    let customers: Vec<CustomerId> = (0..config.customers.max(1))
        .map(|i| {
            let customer = CustomerId::new(format!("customer-{i:02}"));
            let options: Vec<String> = OPTION_SETS[i as usize % OPTION_SETS.len()]
                .iter()
                .map(|s| s.to_string())
                .collect();
            engine.create_customer(&customer, &options).expect("fresh customer");
            let subwallets: Vec<SubwalletId> = engine
                .wallets
                .wallet_of(&customer, WalletType::Investment)
                .expect("created")
                .subwallets
                .iter()
                .map(|s| s.id.clone())
                .collect();
            let policy = random_policy(&mut rng, &subwallets);
            engine.set_policy(&customer, policy).expect("valid policy");
            customer
        })
        .collect();
    checker.after_operation(&engine);

    for _ in 0..config.ops {
        counts.attempted += 1;
        let customer = customers[rng.gen_range(0..customers.len())].clone();
        let amount = if rng.gen_range(0..100) < 5 {
            Money::from_minor(rng.gen_range(-10..=0))
        } else {
            Money::from_minor(rng.gen_range(1..=50_000))
        };
        let dice = rng.gen_range(0..100u32);
        match dice {
            0..=19 => self::request(&mut engine, &mut checker, &mut counts, &mut transient_pool, WalletRequestKind::Deposit, customer, amount),
            20..=31 => self::request(&mut engine, &mut checker, &mut counts, &mut transient_pool, WalletRequestKind::Withdraw, customer, amount),
            32..=43 => self::request(&mut engine, &mut checker, &mut counts, &mut transient_pool, WalletRequestKind::EmergencyAllocation, customer, amount),
            44..=53 => self::request(&mut engine, &mut checker, &mut counts, &mut transient_pool, WalletRequestKind::EmergencyRelease, customer, amount),
            54..=67 => self::request(&mut engine, &mut checker, &mut counts, &mut transient_pool, WalletRequestKind::Investment, customer, amount),
            68..=79 => self::request(&mut engine, &mut checker, &mut counts, &mut transient_pool, WalletRequestKind::Liquidation, customer, amount),
            80..=87 => {
                counts.settle_runs += 1;
                engine.clock.advance_days(1);
                let run = engine.settle(engine.clock.today());
                counts.settled += run.settled.len() as u64;
            }
            88..=93 => {
                counts.retries += 1;
                if !transient_pool.is_empty() {
                    let index = rng.gen_range(0..transient_pool.len());
                    let id = transient_pool.swap_remove(index);
                    if let Ok(txn) = engine.retry_transaction(&id) {
                        checker.observe(&id, txn.status);
                        match txn.status {
                            TransactionStatus::Completed => counts.completed += 1,
                            TransactionStatus::TransientError => {
                                counts.transient += 1;
                                transient_pool.push(id);
                            }
                            TransactionStatus::Failed => counts.failed += 1,
                            TransactionStatus::Processing => {}
                        }
                    }
                }
            }
            _ => {
                counts.fault_reconfigs += 1;
                let fail_probability = [0.0, 0.0, 0.2, 0.5][rng.gen_range(0..4)];
                let fault = FaultConfig {
                    fail_next_k: rng.gen_range(0..3),
                    fail_probability,
                    seed: rng.gen(),
                };
                engine.gateway.set_fault_config(fault);
            }
        }
        checker.after_operation(&engine);
    }

    checker.final_check(&engine);

    let final_balances: BTreeMap<String, WalletSummary> = customers
        .iter()
        .map(|c| {
            (
                c.as_str().to_owned(),
                engine.wallet_summary(c).expect("customer exists"),
            )
        })
        .collect();
    let gateway_log = engine.gateway.log();
    let report = SimulationReport {
        seed: config.seed,
        ops_requested: config.ops,
        operations: counts,
        invariant_checks: checker.checks,
        violations: checker.violations.clone(),
        gateway: GatewayStats {
            calls: gateway_log.len() as u64,
            transient_failures: gateway_log
                .iter()
                .filter(|c| c.outcome == CallOutcome::TransientFailure)
                .count() as u64,
            reversals: gateway_log
                .iter()
                .filter(|c| matches!(c.kind, wallet_core::gateway::GatewayCallKind::Reversal))
                .count() as u64,
        },
        final_balances,
    };
    (report, engine)
}

fn request(
    engine: &mut Engine<SimulatedGateway>,
    checker: &mut Checker,
    counts: &mut OperationCounts,
    transient_pool: &mut Vec<TransactionId>,
    kind: WalletRequestKind,
    customer: CustomerId,
    amount: Money,
) {
    let outcome = engine.handle_request(&WalletRequest {
        kind,
        customer,
        amount,
    });
    match outcome {
        Ok(RequestOutcome::Transaction(txn)) => {
            checker.observe(&txn.id, txn.status);
            match txn.status {
                TransactionStatus::Completed => counts.completed += 1,
                TransactionStatus::Failed => counts.failed += 1,
                TransactionStatus::TransientError => {
                    counts.transient += 1;
                    transient_pool.push(txn.id);
                }
                TransactionStatus::Processing => {}
            }
        }
        Ok(RequestOutcome::Pending(_)) => {
            counts.completed += 1;
            counts.pending_recorded += 1;
        }
        Err(_) => counts.failed += 1,
    }
}
