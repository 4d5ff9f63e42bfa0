//! Transaction lifecycle: validation against the route compatibility matrix,
//! journal-pair construction per type, execution through the bank gateway,
//! the status state machine, a reusable retry combinator, and atomic batches.

use std::num::NonZeroU32;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    BatchId, InvalidReason, Money, Party, SubwalletId, Transaction, TransactionFailure,
    TransactionId, TransactionStatus, TransactionType, WalletStore, WalletType,
};
use crate::engine::{Engine, EngineError};
use crate::gateway::{Direction, Gateway, GatewayRequest, TransientGatewayError};
use crate::ledger::{EntryLine, EntryPair, JournalTarget, LedgerError};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidationOutcome {
    Valid,
    Invalid(InvalidReason),
}

impl ValidationOutcome {
    pub fn is_valid(self) -> bool {
        matches!(self, ValidationOutcome::Valid)
    }
}

enum ResolvedParty<'a> {
    External,
    Wallet {
        wallet_type: WalletType,
        subwallet_id: &'a SubwalletId,
    },
}

fn resolve_party<'a>(party: &'a Party, wallets: &WalletStore) -> Option<ResolvedParty<'a>> {
    match party {
        Party::External { .. } => Some(ResolvedParty::External),
        Party::WalletRef {
            wallet_id,
            subwallet_id,
        } => {
            let (wallet, _) = wallets.resolve_ref(wallet_id, subwallet_id)?;
            Some(ResolvedParty::Wallet {
                wallet_type: wallet.wallet_type,
                subwallet_id,
            })
        }
    }
}

fn type_pair_is(a: WalletType, b: WalletType, x: WalletType, y: WalletType) -> bool {
    (a == x && b == y) || (a == y && b == x)
}

/// Applies, in order: amount positivity, party resolution, the route
/// compatibility matrix, and the balance check (every type except Deposit).
///
/// Matrix: Deposit external -> real-money; Withdrawal real-money -> external;
/// Transfer between real-money and emergency-funds in either direction; Hold
/// on one real-money or investment subwallet (originator = beneficiary);
/// TransferFromHold between real-money and investment in either direction.
pub fn validate<J: JournalTarget + ?Sized>(
    txn: &Transaction,
    wallets: &WalletStore,
    journal: &J,
) -> ValidationOutcome {
    use InvalidReason::*;
    use ValidationOutcome::*;

    if !txn.amount.is_positive() {
        return Invalid(NonPositiveAmount);
    }
    let Some(originator) = resolve_party(&txn.originator, wallets) else {
        return Invalid(UnknownParty);
    };
    let Some(beneficiary) = resolve_party(&txn.beneficiary, wallets) else {
        return Invalid(UnknownParty);
    };

    let source_subwallet: &SubwalletId = match txn.txn_type {
        TransactionType::Deposit => {
            let ResolvedParty::External = originator else {
                return Invalid(IncompatibleRoute);
            };
            let ResolvedParty::Wallet { wallet_type, .. } = beneficiary else {
                return Invalid(IncompatibleRoute);
            };
            if wallet_type != WalletType::RealMoney {
                return Invalid(IncompatibleWallet);
            }
            return Valid; // deposits skip the balance check
        }
        TransactionType::Withdrawal => {
            let ResolvedParty::Wallet {
                wallet_type,
                subwallet_id,
            } = originator
            else {
                return Invalid(IncompatibleRoute);
            };
            let ResolvedParty::External = beneficiary else {
                return Invalid(IncompatibleRoute);
            };
            if wallet_type != WalletType::RealMoney {
                return Invalid(IncompatibleWallet);
            }
            subwallet_id
        }
        TransactionType::Transfer => {
            let (ResolvedParty::Wallet { wallet_type: from, subwallet_id }, ResolvedParty::Wallet { wallet_type: to, subwallet_id: to_sub }) = (originator, beneficiary) else {
                return Invalid(IncompatibleRoute);
            };
            if subwallet_id == to_sub {
                return Invalid(SameSubwallet);
            }
            if !type_pair_is(from, to, WalletType::RealMoney, WalletType::EmergencyFunds) {
                return Invalid(IncompatibleWallet);
            }
            subwallet_id
        }
        TransactionType::Hold => {
            let (ResolvedParty::Wallet { wallet_type, subwallet_id }, ResolvedParty::Wallet { subwallet_id: to_sub, .. }) = (originator, beneficiary) else {
                return Invalid(IncompatibleRoute);
            };
            // a hold reserves funds in place: both parties name the same subwallet
            if txn.originator != txn.beneficiary || subwallet_id != to_sub {
                return Invalid(IncompatibleRoute);
            }
            if !matches!(wallet_type, WalletType::RealMoney | WalletType::Investment) {
                return Invalid(IncompatibleWallet);
            }
            subwallet_id
        }
        TransactionType::TransferFromHold => {
            let (ResolvedParty::Wallet { wallet_type: from, subwallet_id }, ResolvedParty::Wallet { wallet_type: to, subwallet_id: to_sub }) = (originator, beneficiary) else {
                return Invalid(IncompatibleRoute);
            };
            if subwallet_id == to_sub {
                return Invalid(SameSubwallet);
            }
            if !type_pair_is(from, to, WalletType::RealMoney, WalletType::Investment) {
                return Invalid(IncompatibleWallet);
            }
            subwallet_id
        }
    };

    let funds = match txn.txn_type {
        TransactionType::TransferFromHold => journal.holding(source_subwallet),
        _ => journal.available(source_subwallet),
    };
    if funds < txn.amount {
        return Invalid(InsufficientFunds);
    }
    Valid
}

// ---------------------------------------------------------------------------
// Journal pair layouts
// ---------------------------------------------------------------------------

fn wallet_ref(party: &Party) -> (&crate::domain::WalletId, &SubwalletId) {
    match party {
        Party::WalletRef {
            wallet_id,
            subwallet_id,
        } => (wallet_id, subwallet_id),
        Party::External { .. } => {
            panic!("journal layout needs an internal party; transaction was not validated")
        }
    }
}

/// Pure mapping from a validated transaction to its zero-sum entry pair.
/// Negative marks the source of funds, positive the destination.
pub fn journal_pair_for(txn: &Transaction) -> EntryPair {
    use crate::domain::BalanceType::{Available, Holding};
    let amount = txn.amount;
    let negated = amount
        .checked_neg()
        .expect("validated amounts are positive and negate cleanly");

    let (first, second) = match txn.txn_type {
        TransactionType::Deposit => {
            let (wallet, sub) = wallet_ref(&txn.beneficiary);
            (
                EntryLine::internal(negated),
                EntryLine::subwallet(wallet.clone(), sub.clone(), Available, amount),
            )
        }
        TransactionType::Withdrawal => {
            let (wallet, sub) = wallet_ref(&txn.originator);
            (
                EntryLine::subwallet(wallet.clone(), sub.clone(), Available, negated),
                EntryLine::internal(amount),
            )
        }
        TransactionType::Transfer => {
            let (from_wallet, from_sub) = wallet_ref(&txn.originator);
            let (to_wallet, to_sub) = wallet_ref(&txn.beneficiary);
            (
                EntryLine::subwallet(from_wallet.clone(), from_sub.clone(), Available, negated),
                EntryLine::subwallet(to_wallet.clone(), to_sub.clone(), Available, amount),
            )
        }
        TransactionType::Hold => {
            let (wallet, sub) = wallet_ref(&txn.originator);
            (
                EntryLine::subwallet(wallet.clone(), sub.clone(), Available, negated),
                EntryLine::subwallet(wallet.clone(), sub.clone(), Holding, amount),
            )
        }
        TransactionType::TransferFromHold => {
            let (from_wallet, from_sub) = wallet_ref(&txn.originator);
            let (to_wallet, to_sub) = wallet_ref(&txn.beneficiary);
            (
                EntryLine::subwallet(from_wallet.clone(), from_sub.clone(), Holding, negated),
                EntryLine::subwallet(to_wallet.clone(), to_sub.clone(), Available, amount),
            )
        }
    };
    EntryPair {
        transaction_id: txn.id.clone(),
        first,
        second,
    }
}

// ---------------------------------------------------------------------------
// State machine
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransactionEvent {
    ValidationFailed,
    ExecutionSucceeded,
    ExecutionFailedTransiently,
    RetriesExhausted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("{status} is a terminal state")]
    TerminalState { status: TransactionStatus },
    #[error("event {event:?} is not legal in state {status}")]
    InvalidEvent {
        status: TransactionStatus,
        event: TransactionEvent,
    },
}

/// Advances the lifecycle state machine by one event. Terminal states accept
/// nothing.
pub fn transition(
    status: TransactionStatus,
    event: TransactionEvent,
) -> Result<TransactionStatus, StateError> {
    use TransactionEvent::*;
    use TransactionStatus::*;
    match (status, event) {
        (Processing, ValidationFailed) => Ok(Failed),
        (Processing, ExecutionSucceeded) => Ok(Completed),
        (Processing, ExecutionFailedTransiently) => Ok(TransientError),
        (TransientError, ExecutionSucceeded) => Ok(Completed),
        (TransientError, ExecutionFailedTransiently) => Ok(TransientError),
        (TransientError, RetriesExhausted) => Ok(Failed),
        (status, _) if status.is_terminal() => Err(StateError::TerminalState { status }),
        (status, event) => Err(StateError::InvalidEvent { status, event }),
    }
}

// ---------------------------------------------------------------------------
// Retry combinator
// ---------------------------------------------------------------------------

/// At most this many invocations of a retried operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: NonZeroU32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: NonZeroU32::new(3).unwrap(),
        }
    }
}

impl RetryPolicy {
    pub fn times(max_attempts: u32) -> Option<Self> {
        NonZeroU32::new(max_attempts).map(|max_attempts| RetryPolicy { max_attempts })
    }
}

/// Invokes `op` up to `policy.max_attempts` times, returning the first
/// success immediately or the last failure once attempts are exhausted.
/// Generic over any fallible operation, not only transactions.
pub fn retry<T, E>(policy: RetryPolicy, mut op: impl FnMut() -> Result<T, E>) -> Result<T, E> {
    let mut last_failure = None;
    for _ in 0..policy.max_attempts.get() {
        match op() {
            Ok(value) => return Ok(value),
            Err(err) => last_failure = Some(err),
        }
    }
    Err(last_failure.expect("max_attempts is at least 1"))
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ExecutionError {
    #[error(transparent)]
    Gateway(#[from] TransientGatewayError),
    #[error("ledger post failed: {0}")]
    LedgerPost(LedgerError),
}

/// One execution attempt: deposits and withdrawals first cross the bank
/// gateway (a failure there leaves the ledger untouched), then the journal
/// pair is posted atomically. Each invocation counts one attempt.
pub fn execute<J, G>(
    txn: &mut Transaction,
    journal: &mut J,
    gateway: &mut G,
    wallets: &WalletStore,
    now: DateTime<Utc>,
) -> Result<EntryPair, ExecutionError>
where
    J: JournalTarget + ?Sized,
    G: Gateway + ?Sized,
{
    txn.attempts += 1;

    let gateway_leg = match txn.txn_type {
        TransactionType::Deposit => Some((Direction::Inbound, &txn.originator)),
        TransactionType::Withdrawal => Some((Direction::Outbound, &txn.beneficiary)),
        _ => None,
    };
    if let Some((direction, party)) = gateway_leg {
        let external_ref = match party {
            Party::External { reference } => reference.clone().unwrap_or_default(),
            Party::WalletRef { .. } => String::new(),
        };
        gateway.external_transfer(GatewayRequest {
            direction,
            amount: txn.amount,
            external_ref,
            request_id: txn.id.clone(),
        })?;
    }

    let pair = journal_pair_for(txn);
    journal
        .post(pair.clone(), wallets, now)
        .map_err(ExecutionError::LedgerPost)?;
    Ok(pair)
}

/// Full lifecycle pass over one transaction: validate, then execute under the
/// retry policy. Validation failure is permanent; exhausted retries leave the
/// transaction in `TransientError`, still eligible for a later retry.
///
/// A retried transaction that no longer validates takes the
/// `TransientError -> Failed` edge, the machine's only legal path to a
/// permanent failure from that state.
pub fn process_transaction<J, G>(
    txn: &mut Transaction,
    policy: RetryPolicy,
    journal: &mut J,
    gateway: &mut G,
    wallets: &WalletStore,
    now: DateTime<Utc>,
) where
    J: JournalTarget + ?Sized,
    G: Gateway + ?Sized,
{
    debug_assert!(
        matches!(
            txn.status,
            TransactionStatus::Processing | TransactionStatus::TransientError
        ),
        "process_transaction on {} transaction",
        txn.status
    );

    match validate(txn, wallets, journal) {
        ValidationOutcome::Invalid(reason) => {
            let event = if txn.status == TransactionStatus::TransientError {
                TransactionEvent::RetriesExhausted
            } else {
                TransactionEvent::ValidationFailed
            };
            txn.status = transition(txn.status, event).expect("validation failure edge is legal");
            txn.last_error = Some(TransactionFailure::Validation(reason));
        }
        ValidationOutcome::Valid => {
            let outcome = retry(policy, || {
                match execute(txn, journal, gateway, wallets, now) {
                    Ok(pair) => {
                        txn.status = transition(txn.status, TransactionEvent::ExecutionSucceeded)
                            .expect("success edge is legal");
                        Ok(pair)
                    }
                    Err(err) => {
                        txn.status =
                            transition(txn.status, TransactionEvent::ExecutionFailedTransiently)
                                .expect("transient edge is legal");
                        txn.last_error = Some(match &err {
                            ExecutionError::Gateway(_) => TransactionFailure::GatewayUnavailable,
                            ExecutionError::LedgerPost(e) => {
                                TransactionFailure::LedgerPost(e.to_string())
                            }
                        });
                        Err(err)
                    }
                }
            });
            if outcome.is_ok() {
                txn.last_error = None;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchStatus {
    Pending,
    Completed,
    Failed,
}

/// An ordered group of transactions that commits all-or-nothing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub id: BatchId,
    pub transaction_ids: Vec<TransactionId>,
    pub status: BatchStatus,
}

/// Why a batch rolled back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BatchFailure {
    Validation(InvalidReason),
    Transient,
    Internal(String),
}

impl<G: Gateway> Engine<G> {
    /// Stores a new transaction with `Processing` status. Creation always
    /// succeeds; bad data is caught by validation.
    pub fn create_transaction(
        &mut self,
        txn_type: TransactionType,
        amount: Money,
        originator: Party,
        beneficiary: Party,
    ) -> TransactionId {
        let txn = Transaction {
            id: self.ids.transaction_id(),
            txn_type,
            amount,
            originator,
            beneficiary,
            status: TransactionStatus::Processing,
            attempts: 0,
            batch_id: None,
            created_at: self.clock.now(),
            last_error: None,
        };
        let id = txn.id.clone();
        self.transactions.insert(txn);
        id
    }

    /// Runs a stored transaction through [`process_transaction`] with the
    /// engine's committed ledger, under the given retry policy.
    pub fn process_stored_with(
        &mut self,
        id: &TransactionId,
        policy: RetryPolicy,
    ) -> Result<Transaction, EngineError> {
        let mut txn = self
            .transactions
            .get(id)
            .ok_or_else(|| EngineError::UnknownTransaction(id.clone()))?
            .clone();
        if txn.status.is_terminal() {
            return Err(EngineError::NotRetryable {
                id: id.clone(),
                status: txn.status,
            });
        }
        process_transaction(
            &mut txn,
            policy,
            &mut self.ledger,
            &mut self.gateway,
            &self.wallets,
            self.clock.now(),
        );
        self.transactions.update(txn.clone());
        Ok(txn)
    }

    pub fn process_stored(&mut self, id: &TransactionId) -> Result<Transaction, EngineError> {
        self.process_stored_with(id, self.retry_policy)
    }

    /// Re-enters processing for a `Processing` or `TransientError`
    /// transaction.
    pub fn retry_transaction(&mut self, id: &TransactionId) -> Result<Transaction, EngineError> {
        self.process_stored(id)
    }

    /// Groups stored transactions into a pending batch, stamping each member
    /// with the batch id.
    pub fn create_batch(&mut self, transaction_ids: Vec<TransactionId>) -> Result<Batch, EngineError> {
        for id in &transaction_ids {
            if self.transactions.get(id).is_none() {
                return Err(EngineError::UnknownTransaction(id.clone()));
            }
        }
        let batch_id = self.ids.batch_id();
        for id in &transaction_ids {
            self.transactions
                .get_mut(id)
                .expect("checked above")
                .batch_id = Some(batch_id.clone());
        }
        Ok(Batch {
            id: batch_id,
            transaction_ids,
            status: BatchStatus::Pending,
        })
    }

    /// Processes the members of a pending batch in order, each under the
    /// retry policy, staging their ledger effects. All members completing
    /// commits every pair; any member failing rolls everything back: the
    /// ledger is left in its exact pre-batch state, provisionally succeeded
    /// members revert to their pre-batch record, and their external gateway
    /// legs are compensated. Members already `Completed` are skipped.
    pub fn retry_batch(&mut self, mut batch: Batch, policy: RetryPolicy) -> Result<Batch, EngineError> {
        if batch.status != BatchStatus::Pending {
            return Err(EngineError::BatchNotPending(batch.id.clone()));
        }
        let now = self.clock.now();
        let mut staged = crate::ledger::StagedJournal::new(&self.ledger);
        // Store writes are buffered until the batch outcome is known, so a
        // rollback leaves every provisionally succeeded member untouched.
        let mut provisional: Vec<Transaction> = Vec::new();
        let mut failed_member: Option<Transaction> = None;

        for id in &batch.transaction_ids {
            let stored = self
                .transactions
                .get(id)
                .ok_or_else(|| EngineError::UnknownTransaction(id.clone()))?;
            match stored.status {
                TransactionStatus::Completed => continue,
                TransactionStatus::Failed => {
                    failed_member = Some(stored.clone());
                    break;
                }
                TransactionStatus::Processing | TransactionStatus::TransientError => {}
            }
            let mut txn = stored.clone();
            process_transaction(
                &mut txn,
                policy,
                &mut staged,
                &mut self.gateway,
                &self.wallets,
                now,
            );
            if txn.status == TransactionStatus::Completed {
                provisional.push(txn);
            } else {
                failed_member = Some(txn);
                break;
            }
        }

        match failed_member {
            None => {
                let pairs = staged.into_pairs();
                match self.ledger.commit_staged(pairs, &self.wallets) {
                    Ok(()) => {
                        for txn in provisional {
                            self.transactions.update(txn);
                        }
                        batch.status = BatchStatus::Completed;
                    }
                    Err(err) => {
                        // Nothing was appended; treat like a member failure.
                        self.roll_back_members(&provisional);
                        batch.status = BatchStatus::Failed;
                        debug_assert!(false, "staged batch failed to commit: {err}");
                    }
                }
            }
            Some(txn) => {
                drop(staged);
                self.roll_back_members(&provisional);
                // The failing member keeps its outcome on record.
                self.transactions.update(txn);
                batch.status = BatchStatus::Failed;
            }
        }
        Ok(batch)
    }

    fn roll_back_members(&mut self, provisional: &[Transaction]) {
        for txn in provisional {
            if matches!(
                txn.txn_type,
                TransactionType::Deposit | TransactionType::Withdrawal
            ) {
                let _ = self.gateway.compensate(&txn.id);
            }
        }
    }

    /// First failure recorded on a batch's members, for error reporting.
    pub fn batch_failure_reason(&self, batch: &Batch) -> BatchFailure {
        for id in &batch.transaction_ids {
            let Some(txn) = self.transactions.get(id) else {
                continue;
            };
            match txn.status {
                TransactionStatus::Failed => {
                    return match &txn.last_error {
                        Some(TransactionFailure::Validation(reason)) => {
                            BatchFailure::Validation(*reason)
                        }
                        other => BatchFailure::Internal(format!("{other:?}")),
                    };
                }
                TransactionStatus::TransientError => return BatchFailure::Transient,
                _ => {}
            }
        }
        BatchFailure::Internal("no failed member found".to_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Clock, CustomerId, IdGen, WalletId};
    use crate::ledger::Ledger;

    struct Fixture {
        wallets: WalletStore,
        rm: WalletId,
        rm_sub: SubwalletId,
        ef: WalletId,
        ef_sub: SubwalletId,
        inv: WalletId,
        inv_subs: Vec<SubwalletId>,
    }

    fn fixture() -> Fixture {
        let mut wallets = WalletStore::new();
        let mut ids = IdGen::default();
        let alice = CustomerId::from("alice");
        let options: Vec<String> = ["stocks", "bonds"].iter().map(|s| s.to_string()).collect();
        let (rm, ef, inv) = wallets
            .create_customer_wallets(&mut ids, &alice, &options)
            .unwrap();
        let rm_sub = wallets.wallet(&rm).unwrap().single_subwallet().id.clone();
        let ef_sub = wallets.wallet(&ef).unwrap().single_subwallet().id.clone();
        let inv_subs = wallets
            .wallet(&inv)
            .unwrap()
            .subwallets
            .iter()
            .map(|s| s.id.clone())
            .collect();
        Fixture {
            wallets,
            rm,
            rm_sub,
            ef,
            ef_sub,
            inv,
            inv_subs,
        }
    }

    fn txn(txn_type: TransactionType, amount: i64, originator: Party, beneficiary: Party) -> Transaction {
        Transaction {
            id: TransactionId::from("t-test"),
            txn_type,
            amount: Money::from_minor(amount),
            originator,
            beneficiary,
            status: TransactionStatus::Processing,
            attempts: 0,
            batch_id: None,
            created_at: Clock::default().now(),
            last_error: None,
        }
    }

    #[test]
    fn validate_deposit_routes() {
        let f = fixture();
        let ledger = Ledger::new();
        let rm_ref = Party::subwallet(f.rm.clone(), f.rm_sub.clone());
        let inv_ref = Party::subwallet(f.inv.clone(), f.inv_subs[0].clone());

        let ok = txn(TransactionType::Deposit, 100, Party::external(), rm_ref.clone());
        assert_eq!(validate(&ok, &f.wallets, &ledger), ValidationOutcome::Valid);

        let wrong_wallet = txn(TransactionType::Deposit, 100, Party::external(), inv_ref);
        assert_eq!(
            validate(&wrong_wallet, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::IncompatibleWallet)
        );

        let wrong_route = txn(TransactionType::Deposit, 100, rm_ref.clone(), rm_ref);
        assert_eq!(
            validate(&wrong_route, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::IncompatibleRoute)
        );
    }

    #[test]
    fn validate_checks_amount_then_parties() {
        let f = fixture();
        let ledger = Ledger::new();
        let rm_ref = Party::subwallet(f.rm.clone(), f.rm_sub.clone());

        let zero = txn(TransactionType::Deposit, 0, Party::external(), rm_ref.clone());
        assert_eq!(
            validate(&zero, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::NonPositiveAmount)
        );

        let ghost = Party::subwallet(WalletId::from("ghost"), f.rm_sub.clone());
        let unknown = txn(TransactionType::Deposit, 1, Party::external(), ghost);
        assert_eq!(
            validate(&unknown, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::UnknownParty)
        );

        // subwallet must belong to the referenced wallet
        let mismatched = Party::subwallet(f.rm.clone(), f.ef_sub.clone());
        let unknown2 = txn(TransactionType::Deposit, 1, Party::external(), mismatched);
        assert_eq!(
            validate(&unknown2, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::UnknownParty)
        );
    }

    #[test]
    fn validate_balance_check_on_all_but_deposit() {
        let f = fixture();
        let ledger = Ledger::new(); // empty: everything has balance 0
        let rm_ref = Party::subwallet(f.rm.clone(), f.rm_sub.clone());
        let ef_ref = Party::subwallet(f.ef.clone(), f.ef_sub.clone());
        let inv_ref = Party::subwallet(f.inv.clone(), f.inv_subs[0].clone());

        let withdrawal = txn(TransactionType::Withdrawal, 999_999, rm_ref.clone(), Party::external());
        assert_eq!(
            validate(&withdrawal, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::InsufficientFunds)
        );
        let transfer = txn(TransactionType::Transfer, 100, rm_ref.clone(), ef_ref);
        assert_eq!(
            validate(&transfer, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::InsufficientFunds)
        );
        let hold = txn(TransactionType::Hold, 100, rm_ref.clone(), rm_ref.clone());
        assert_eq!(
            validate(&hold, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::InsufficientFunds)
        );
        let tfh = txn(TransactionType::TransferFromHold, 100, rm_ref, inv_ref);
        assert_eq!(
            validate(&tfh, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::InsufficientFunds)
        );
    }

    #[test]
    fn validate_hold_requires_same_subwallet() {
        let f = fixture();
        let ledger = Ledger::new();
        let a = Party::subwallet(f.inv.clone(), f.inv_subs[0].clone());
        let b = Party::subwallet(f.inv.clone(), f.inv_subs[1].clone());
        let split_hold = txn(TransactionType::Hold, 100, a.clone(), b.clone());
        assert_eq!(
            validate(&split_hold, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::IncompatibleRoute)
        );

        let ef_ref = Party::subwallet(f.ef.clone(), f.ef_sub.clone());
        let ef_hold = txn(TransactionType::Hold, 100, ef_ref.clone(), ef_ref);
        assert_eq!(
            validate(&ef_hold, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::IncompatibleWallet)
        );
    }

    #[test]
    fn validate_self_transfer_is_same_subwallet() {
        let f = fixture();
        let ledger = Ledger::new();
        let rm_ref = Party::subwallet(f.rm.clone(), f.rm_sub.clone());
        let self_transfer = txn(TransactionType::Transfer, 100, rm_ref.clone(), rm_ref.clone());
        assert_eq!(
            validate(&self_transfer, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::SameSubwallet)
        );
        let self_tfh = txn(TransactionType::TransferFromHold, 100, rm_ref.clone(), rm_ref);
        assert_eq!(
            validate(&self_tfh, &f.wallets, &ledger),
            ValidationOutcome::Invalid(InvalidReason::SameSubwallet)
        );
    }

    #[test]
    fn journal_layouts_sum_to_zero() {
        let f = fixture();
        let rm_ref = Party::subwallet(f.rm.clone(), f.rm_sub.clone());
        let ef_ref = Party::subwallet(f.ef.clone(), f.ef_sub.clone());

        // hold splits available into holding on the same subwallet
        let hold = txn(TransactionType::Hold, 4_000, rm_ref.clone(), rm_ref.clone());
        let pair = journal_pair_for(&hold);
        assert_eq!(pair.first.balance_type, crate::domain::BalanceType::Available);
        assert_eq!(pair.first.amount, Money::from_minor(-4_000));
        assert_eq!(pair.second.balance_type, crate::domain::BalanceType::Holding);
        assert_eq!(pair.second.amount, Money::from_minor(4_000));
        assert_eq!(pair.first.subwallet_id, pair.second.subwallet_id);

        // deposit pairs an internal line with the wallet line
        let deposit = txn(TransactionType::Deposit, 10_000, Party::external(), rm_ref.clone());
        let pair = journal_pair_for(&deposit);
        assert_eq!(pair.first.balance_type, crate::domain::BalanceType::Internal);
        assert_eq!(pair.first.wallet_id, None);
        assert_eq!(pair.first.amount, Money::from_minor(-10_000));
        assert_eq!(pair.second.amount, Money::from_minor(10_000));

        // transfer moves available between subwallets
        let transfer = txn(TransactionType::Transfer, 30, rm_ref, ef_ref);
        let pair = journal_pair_for(&transfer);
        assert_eq!(pair.first.subwallet_id.as_ref(), Some(&f.rm_sub));
        assert_eq!(pair.second.subwallet_id.as_ref(), Some(&f.ef_sub));
        assert_eq!(
            pair.first.amount.minor_units() + pair.second.amount.minor_units(),
            0
        );
    }

    #[test]
    fn transition_follows_legal_edges_only() {
        use TransactionEvent::*;
        use TransactionStatus::*;
        assert_eq!(transition(Processing, ValidationFailed), Ok(Failed));
        assert_eq!(transition(Processing, ExecutionSucceeded), Ok(Completed));
        assert_eq!(transition(Processing, ExecutionFailedTransiently), Ok(TransientError));
        assert_eq!(transition(TransientError, ExecutionSucceeded), Ok(Completed));
        assert_eq!(transition(TransientError, ExecutionFailedTransiently), Ok(TransientError));
        assert_eq!(transition(TransientError, RetriesExhausted), Ok(Failed));

        for event in [ValidationFailed, ExecutionSucceeded, ExecutionFailedTransiently, RetriesExhausted] {
            assert_eq!(
                transition(Completed, event),
                Err(StateError::TerminalState { status: Completed })
            );
            assert_eq!(
                transition(Failed, event),
                Err(StateError::TerminalState { status: Failed })
            );
        }
        assert_eq!(
            transition(Processing, RetriesExhausted),
            Err(StateError::InvalidEvent {
                status: Processing,
                event: RetriesExhausted
            })
        );
    }

    #[test]
    fn retry_invocation_counts() {
        let policy = RetryPolicy::times(3).unwrap();

        let mut calls = 0;
        let result: Result<u32, &str> = retry(policy, || {
            calls += 1;
            Ok(7)
        });
        assert_eq!(result, Ok(7));
        assert_eq!(calls, 1, "early return on first success");

        let mut calls = 0;
        let result: Result<u32, &str> = retry(policy, || {
            calls += 1;
            if calls < 3 {
                Err("transient")
            } else {
                Ok(9)
            }
        });
        assert_eq!(result, Ok(9));
        assert_eq!(calls, 3);

        let mut calls = 0;
        let result: Result<u32, &str> = retry(policy, || {
            calls += 1;
            Err("always")
        });
        assert_eq!(result, Err("always"));
        assert_eq!(calls, 3);
    }
}
