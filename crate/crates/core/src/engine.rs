//! The engine wires the stores, ledger, gateway, clock, and id source into
//! one single-writer context. Service operations live in `impl` blocks next
//! to their module: transaction lifecycle in [`crate::transactions`], wallet
//! requests in [`crate::wallets`], investments in [`crate::investments`].

use thiserror::Error;

use crate::domain::{
    BatchId, Clock, CustomerId, IdGen, PolicyStore, TransactionId, TransactionStatus,
    TransactionStore, Wallet, WalletCreateError, WalletStore,
};
use crate::gateway::{FaultConfig, Gateway, SimulatedGateway};
use crate::investments::{BusinessCalendar, PendingRequest, PendingStatus};
use crate::ledger::Ledger;
use crate::transactions::RetryPolicy;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown transaction {0}")]
    UnknownTransaction(TransactionId),
    #[error("transaction {id} is {status} and cannot be processed")]
    NotRetryable {
        id: TransactionId,
        status: TransactionStatus,
    },
    #[error("batch {0} is not pending")]
    BatchNotPending(BatchId),
}

/// The assembled digital-wallet engine. One instance serializes every
/// state-mutating operation; reads see consistent committed state.
#[derive(Debug)]
pub struct Engine<G: Gateway = SimulatedGateway> {
    pub wallets: WalletStore,
    pub policies: PolicyStore,
    pub transactions: TransactionStore,
    pub pending: Vec<PendingRequest>,
    pub ledger: Ledger,
    pub gateway: G,
    pub clock: Clock,
    pub calendar: BusinessCalendar,
    pub retry_policy: RetryPolicy,
    pub ids: IdGen,
}

impl Engine<SimulatedGateway> {
    pub fn new() -> Self {
        Engine::with_gateway(SimulatedGateway::default())
    }

    pub fn with_fault_config(config: FaultConfig) -> Self {
        Engine::with_gateway(SimulatedGateway::new(config))
    }
}

impl Default for Engine<SimulatedGateway> {
    fn default() -> Self {
        Engine::new()
    }
}

impl<G: Gateway> Engine<G> {
    pub fn with_gateway(gateway: G) -> Self {
        Engine {
            wallets: WalletStore::new(),
            policies: PolicyStore::new(),
            transactions: TransactionStore::new(),
            pending: Vec::new(),
            ledger: Ledger::new(),
            gateway,
            clock: Clock::default(),
            calendar: BusinessCalendar::default(),
            retry_policy: RetryPolicy::default(),
            ids: IdGen::default(),
        }
    }

    /// Creates the customer's three wallets and returns them in
    /// (real-money, emergency-funds, investment) order.
    pub fn create_customer(
        &mut self,
        customer: &CustomerId,
        investment_options: &[String],
    ) -> Result<(Wallet, Wallet, Wallet), WalletCreateError> {
        let (rm, ef, inv) =
            self.wallets
                .create_customer_wallets(&mut self.ids, customer, investment_options)?;
        let clone = |id| self.wallets.wallet(id).cloned().expect("just created");
        Ok((clone(&rm), clone(&ef), clone(&inv)))
    }

    /// Cross-store consistency sweep, used when importing persisted state and
    /// as a whole-system assertion in tests. Returns the first violation.
    pub fn verify_consistency(&self) -> Result<(), String> {
        self.wallets.verify()?;

        // ledger-level invariants
        let total = self.ledger.total_sum();
        if total != 0 {
            return Err(format!("ledger sum is {total}, expected 0"));
        }
        let mut per_txn: std::collections::BTreeMap<&TransactionId, (usize, i128)> =
            std::collections::BTreeMap::new();
        for entry in self.ledger.entries() {
            if let (Some(wallet_id), Some(subwallet_id)) = (&entry.wallet_id, &entry.subwallet_id) {
                if self.wallets.resolve_ref(wallet_id, subwallet_id).is_none() {
                    return Err(format!(
                        "entry {} references unknown wallet {wallet_id}/{subwallet_id}",
                        entry.entry_id
                    ));
                }
            }
            let slot = per_txn.entry(&entry.transaction_id).or_insert((0, 0));
            slot.0 += 1;
            slot.1 += entry.amount.minor_units() as i128;
        }
        for (txn_id, (count, sum)) in &per_txn {
            if *count != 2 || *sum != 0 {
                return Err(format!(
                    "transaction {txn_id} has {count} entries summing {sum}"
                ));
            }
        }

        // exactly-once ledger effect per transaction status
        for txn in self.transactions.iter() {
            let has_pair = per_txn.contains_key(&txn.id);
            let completed = txn.status == TransactionStatus::Completed;
            if completed != has_pair {
                return Err(format!(
                    "transaction {} is {} but has {} ledger entries",
                    txn.id,
                    txn.status,
                    if has_pair { 2 } else { 0 }
                ));
            }
        }
        for txn_id in per_txn.keys() {
            if self.transactions.get(txn_id).is_none() {
                return Err(format!("ledger references unknown transaction {txn_id}"));
            }
        }

        // every stored party still resolves
        for txn in self.transactions.iter() {
            for party in [&txn.originator, &txn.beneficiary] {
                if let crate::domain::Party::WalletRef {
                    wallet_id,
                    subwallet_id,
                } = party
                {
                    if self.wallets.resolve_ref(wallet_id, subwallet_id).is_none() {
                        return Err(format!(
                            "transaction {} references unknown party {wallet_id}/{subwallet_id}",
                            txn.id
                        ));
                    }
                }
            }
        }

        // stored policies remain valid
        for (customer, policy) in self.policies.iter() {
            if let Err(err) = crate::domain::validate_policy(policy, &self.wallets) {
                return Err(format!("policy for {customer} is invalid: {err}"));
            }
        }

        // pending requests are internally consistent
        for request in &self.pending {
            if self.wallets.customer_wallets(&request.customer).is_none() {
                return Err(format!(
                    "pending request {} references unknown customer {}",
                    request.id, request.customer
                ));
            }
            let sum: i128 = request
                .per_subwallet_amounts
                .values()
                .map(|m| m.minor_units() as i128)
                .sum();
            if sum != request.amount.minor_units() as i128 {
                return Err(format!(
                    "pending request {} splits {} but totals {sum}",
                    request.id, request.amount
                ));
            }
            if request.status == PendingStatus::Pending
                && request.policy_snapshot.basis_point_sum()
                    != crate::domain::InvestmentPolicy::FULL_SHARE
            {
                return Err(format!(
                    "pending request {} carries an invalid policy snapshot",
                    request.id
                ));
            }
        }
        Ok(())
    }
}
