//! Append-only journal of zero-sum entry pairs and balance aggregation.
//!
//! Entries are never mutated or deleted after commit. The two entries of a
//! pair become visible atomically, with consecutive sequence numbers.
//! Balances are served from running per-(subwallet, balance type) sums; the
//! full-scan summation over the entry sequence is kept as the definitional
//! oracle and stays available for verification.

use std::collections::{HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    BalanceType, EntryId, Money, SubwalletId, TransactionId, WalletId, WalletStore, WalletType,
};

/// An immutable ledger record. `wallet_id` and `subwallet_id` are absent
/// exactly when `balance_type` is `Internal`, which models the external-bank
/// side of a deposit or withdrawal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub entry_id: EntryId,
    pub transaction_id: TransactionId,
    pub wallet_id: Option<WalletId>,
    pub subwallet_id: Option<SubwalletId>,
    pub amount: Money,
    pub balance_type: BalanceType,
    pub seq: u64,
    pub created_at: DateTime<Utc>,
}

/// One side of an entry pair before the ledger assigns ids and sequence
/// numbers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryLine {
    pub wallet_id: Option<WalletId>,
    pub subwallet_id: Option<SubwalletId>,
    pub amount: Money,
    pub balance_type: BalanceType,
}

impl EntryLine {
    /// External-bank side: no wallet reference.
    pub fn internal(amount: Money) -> Self {
        EntryLine {
            wallet_id: None,
            subwallet_id: None,
            amount,
            balance_type: BalanceType::Internal,
        }
    }

    pub fn subwallet(
        wallet_id: WalletId,
        subwallet_id: SubwalletId,
        balance_type: BalanceType,
        amount: Money,
    ) -> Self {
        EntryLine {
            wallet_id: Some(wallet_id),
            subwallet_id: Some(subwallet_id),
            amount,
            balance_type,
        }
    }
}

/// The two sides of one completed transaction's ledger effect. The amounts
/// must cancel exactly: negative marks the source, positive the destination.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryPair {
    pub transaction_id: TransactionId,
    pub first: EntryLine,
    pub second: EntryLine,
}

impl EntryPair {
    pub fn lines(&self) -> [&EntryLine; 2] {
        [&self.first, &self.second]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("entry pair does not sum to zero (sum {sum})")]
    UnbalancedPair { sum: i128 },
    #[error("entry amount must not be zero")]
    ZeroAmountEntry,
    #[error("unknown wallet {0}")]
    UnknownWallet(WalletId),
    #[error("unknown subwallet {0}")]
    UnknownSubwallet(SubwalletId),
    #[error("entry line shape invalid: {0}")]
    InvalidEntryShape(&'static str),
    #[error("posting would drive {subwallet_id} {balance_type:?} balance negative")]
    NegativeBalance {
        subwallet_id: SubwalletId,
        balance_type: BalanceType,
    },
    #[error("balance arithmetic overflow")]
    AmountOverflow,
    #[error("sequence numbers not strictly increasing at seq {0}")]
    SequenceOrder(u64),
    #[error("ledger entries are not paired per transaction")]
    BrokenPairing,
    #[error("transaction {0} already has a committed entry pair")]
    DuplicateTransaction(TransactionId),
}

/// Uniform write/read surface used by transaction execution: either the
/// committed ledger itself or a batch staging overlay.
pub trait JournalTarget {
    fn available(&self, subwallet_id: &SubwalletId) -> Money;
    fn holding(&self, subwallet_id: &SubwalletId) -> Money;
    fn post(
        &mut self,
        pair: EntryPair,
        wallets: &WalletStore,
        at: DateTime<Utc>,
    ) -> Result<(), LedgerError>;
}

/// The append-only journal store.
#[derive(Clone, Debug, Default)]
pub struct Ledger {
    entries: Vec<JournalEntry>,
    next_seq: u64,
    cache: HashMap<(SubwalletId, BalanceType), Money>,
    posted_txns: HashSet<TransactionId>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger {
            entries: Vec::new(),
            next_seq: 1,
            cache: HashMap::new(),
            posted_txns: HashSet::new(),
        }
    }

    /// True when a pair for this transaction is already committed.
    pub fn has_transaction(&self, transaction_id: &TransactionId) -> bool {
        self.posted_txns.contains(transaction_id)
    }

    pub fn entries(&self) -> &[JournalEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of every committed amount; zero at every commit point.
    pub fn total_sum(&self) -> i128 {
        self.entries
            .iter()
            .map(|e| e.amount.minor_units() as i128)
            .sum()
    }

    /// Structural validation of a pair, without touching balances.
    pub fn validate_pair(&self, pair: &EntryPair, wallets: &WalletStore) -> Result<(), LedgerError> {
        for line in pair.lines() {
            if line.amount.is_zero() {
                return Err(LedgerError::ZeroAmountEntry);
            }
            match (&line.wallet_id, &line.subwallet_id, line.balance_type) {
                (None, None, BalanceType::Internal) => {}
                (Some(wallet_id), Some(subwallet_id), bt) if bt != BalanceType::Internal => {
                    let wallet = wallets
                        .wallet(wallet_id)
                        .ok_or_else(|| LedgerError::UnknownWallet(wallet_id.clone()))?;
                    if wallet.subwallet(subwallet_id).is_none() {
                        return Err(LedgerError::UnknownSubwallet(subwallet_id.clone()));
                    }
                }
                (None, None, _) => {
                    return Err(LedgerError::InvalidEntryShape(
                        "non-internal entry requires wallet and subwallet",
                    ))
                }
                (Some(_), Some(_), BalanceType::Internal) => {
                    return Err(LedgerError::InvalidEntryShape(
                        "internal entry must not reference a wallet",
                    ))
                }
                _ => {
                    return Err(LedgerError::InvalidEntryShape(
                        "wallet and subwallet must be present together",
                    ))
                }
            }
        }
        let sum =
            pair.first.amount.minor_units() as i128 + pair.second.amount.minor_units() as i128;
        if sum != 0 {
            return Err(LedgerError::UnbalancedPair { sum });
        }
        Ok(())
    }

    /// Appends both entries of a validated pair atomically with consecutive
    /// sequence numbers. Returns the assigned sequence numbers.
    pub fn post_pair(
        &mut self,
        pair: EntryPair,
        wallets: &WalletStore,
        at: DateTime<Utc>,
    ) -> Result<(u64, u64), LedgerError> {
        self.validate_pair(&pair, wallets)?;
        if self.posted_txns.contains(&pair.transaction_id) {
            return Err(LedgerError::DuplicateTransaction(pair.transaction_id));
        }

        // Work out the new balances first so the append is all-or-nothing.
        let mut updates: Vec<((SubwalletId, BalanceType), Money)> = Vec::new();
        for line in pair.lines() {
            if let Some(subwallet_id) = &line.subwallet_id {
                let key = (subwallet_id.clone(), line.balance_type);
                let current = updates
                    .iter()
                    .find(|(k, _)| *k == key)
                    .map(|(_, v)| *v)
                    .unwrap_or_else(|| self.balance_unchecked(subwallet_id, line.balance_type));
                let next = current
                    .checked_add(line.amount)
                    .ok_or(LedgerError::AmountOverflow)?;
                if next.is_negative() {
                    return Err(LedgerError::NegativeBalance {
                        subwallet_id: subwallet_id.clone(),
                        balance_type: line.balance_type,
                    });
                }
                updates.retain(|(k, _)| *k != key);
                updates.push((key, next));
            }
        }

        for (key, value) in updates {
            self.cache.insert(key, value);
        }
        let first_seq = self.next_seq;
        let EntryPair {
            transaction_id,
            first,
            second,
        } = pair;
        self.posted_txns.insert(transaction_id.clone());
        for line in [first, second] {
            let seq = self.next_seq;
            self.next_seq += 1;
            self.entries.push(JournalEntry {
                entry_id: EntryId::new(format!("ent-{seq:08}")),
                transaction_id: transaction_id.clone(),
                wallet_id: line.wallet_id,
                subwallet_id: line.subwallet_id,
                amount: line.amount,
                balance_type: line.balance_type,
                seq,
                created_at: at,
            });
        }
        Ok((first_seq, first_seq + 1))
    }

    /// Cached balance; zero when the subwallet has no entries.
    pub fn balance_unchecked(&self, subwallet_id: &SubwalletId, balance_type: BalanceType) -> Money {
        self.cache
            .get(&(subwallet_id.clone(), balance_type))
            .copied()
            .unwrap_or(Money::ZERO)
    }

    /// Balance of one subwallet bucket, checking that the subwallet exists.
    pub fn balance_of(
        &self,
        wallets: &WalletStore,
        subwallet_id: &SubwalletId,
        balance_type: BalanceType,
    ) -> Result<Money, LedgerError> {
        if wallets.owner_of_subwallet(subwallet_id).is_none() {
            return Err(LedgerError::UnknownSubwallet(subwallet_id.clone()));
        }
        Ok(self.balance_unchecked(subwallet_id, balance_type))
    }

    /// The definitional balance computation: a full scan over the committed
    /// entry sequence. Kept independent of the cached sums so the two routes
    /// can be checked against each other.
    pub fn balance_of_full_scan(
        &self,
        subwallet_id: &SubwalletId,
        balance_type: BalanceType,
    ) -> Money {
        let total: i128 = self
            .entries
            .iter()
            .filter(|e| {
                e.balance_type == balance_type && e.subwallet_id.as_ref() == Some(subwallet_id)
            })
            .map(|e| e.amount.minor_units() as i128)
            .sum();
        Money::from_minor(total as i64)
    }

    fn wallet_balance(
        &self,
        wallets: &WalletStore,
        wallet_id: &WalletId,
        balance_type: BalanceType,
    ) -> Result<Money, LedgerError> {
        let wallet = wallets
            .wallet(wallet_id)
            .ok_or_else(|| LedgerError::UnknownWallet(wallet_id.clone()))?;
        match wallet.wallet_type {
            WalletType::RealMoney | WalletType::EmergencyFunds => {
                Ok(self.balance_unchecked(&wallet.single_subwallet().id, balance_type))
            }
            WalletType::Investment => {
                let mut total = Money::ZERO;
                for subwallet in &wallet.subwallets {
                    total = total
                        .checked_add(self.balance_unchecked(&subwallet.id, balance_type))
                        .ok_or(LedgerError::AmountOverflow)?;
                }
                Ok(total)
            }
        }
    }

    /// Available balance of a wallet: the single subwallet's balance for
    /// real-money and emergency-funds wallets, the sum over all subwallets
    /// for investment wallets.
    pub fn available_balance(
        &self,
        wallets: &WalletStore,
        wallet_id: &WalletId,
    ) -> Result<Money, LedgerError> {
        self.wallet_balance(wallets, wallet_id, BalanceType::Available)
    }

    /// Reserved balance of a wallet, aggregated the same way as
    /// [`Ledger::available_balance`].
    pub fn holding_balance(
        &self,
        wallets: &WalletStore,
        wallet_id: &WalletId,
    ) -> Result<Money, LedgerError> {
        self.wallet_balance(wallets, wallet_id, BalanceType::Holding)
    }

    /// All committed entries for a transaction, in sequence order. Empty when
    /// the transaction never executed.
    pub fn entries_for_transaction(&self, transaction_id: &TransactionId) -> Vec<&JournalEntry> {
        self.entries
            .iter()
            .filter(|e| &e.transaction_id == transaction_id)
            .collect()
    }

    /// One JSON object per line, ordered by seq.
    pub fn export_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("journal entry serializes"));
            out.push('\n');
        }
        out
    }

    /// Rebuilds a ledger from previously exported entries, revalidating the
    /// structural invariants: strictly increasing seq, consecutive zero-sum
    /// pairs, line shape, and non-negative subwallet balances.
    pub fn from_entries(entries: Vec<JournalEntry>) -> Result<Ledger, LedgerError> {
        if !entries.len().is_multiple_of(2) {
            return Err(LedgerError::BrokenPairing);
        }
        let mut cache: HashMap<(SubwalletId, BalanceType), Money> = HashMap::new();
        let mut last_seq = 0u64;
        for pair in entries.chunks(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.transaction_id != b.transaction_id {
                return Err(LedgerError::BrokenPairing);
            }
            let sum = a.amount.minor_units() as i128 + b.amount.minor_units() as i128;
            if sum != 0 {
                return Err(LedgerError::UnbalancedPair { sum });
            }
            for entry in [a, b] {
                if entry.seq <= last_seq {
                    return Err(LedgerError::SequenceOrder(entry.seq));
                }
                last_seq = entry.seq;
                if entry.amount.is_zero() {
                    return Err(LedgerError::ZeroAmountEntry);
                }
                match (&entry.wallet_id, &entry.subwallet_id, entry.balance_type) {
                    (None, None, BalanceType::Internal) => {}
                    (Some(_), Some(subwallet_id), bt) if bt != BalanceType::Internal => {
                        let slot = cache
                            .entry((subwallet_id.clone(), bt))
                            .or_insert(Money::ZERO);
                        *slot = slot
                            .checked_add(entry.amount)
                            .ok_or(LedgerError::AmountOverflow)?;
                    }
                    _ => {
                        return Err(LedgerError::InvalidEntryShape(
                            "wallet/subwallet presence must match balance type",
                        ))
                    }
                }
            }
            // Non-negativity is a commit-point invariant, checked per pair.
            for entry in [a, b] {
                if let Some(subwallet_id) = &entry.subwallet_id {
                    let balance = cache[&(subwallet_id.clone(), entry.balance_type)];
                    if balance.is_negative() {
                        return Err(LedgerError::NegativeBalance {
                            subwallet_id: subwallet_id.clone(),
                            balance_type: entry.balance_type,
                        });
                    }
                }
            }
        }
        Ok(Ledger {
            next_seq: last_seq + 1,
            entries,
            cache,
        })
    }
}

impl JournalTarget for Ledger {
    fn available(&self, subwallet_id: &SubwalletId) -> Money {
        self.balance_unchecked(subwallet_id, BalanceType::Available)
    }

    fn holding(&self, subwallet_id: &SubwalletId) -> Money {
        self.balance_unchecked(subwallet_id, BalanceType::Holding)
    }

    fn post(
        &mut self,
        pair: EntryPair,
        wallets: &WalletStore,
        at: DateTime<Utc>,
    ) -> Result<(), LedgerError> {
        self.post_pair(pair, wallets, at).map(|_| ())
    }
}

/// Staging overlay used for atomic batches. Pairs are buffered here and only
/// reach the committed ledger when the whole batch succeeds; an abandoned
/// overlay leaves the ledger untouched, so it never contains retracted
/// entries.
#[derive(Debug)]
pub struct StagedJournal<'a> {
    base: &'a Ledger,
    pairs: Vec<(EntryPair, DateTime<Utc>)>,
    deltas: HashMap<(SubwalletId, BalanceType), Money>,
}

impl<'a> StagedJournal<'a> {
    pub fn new(base: &'a Ledger) -> Self {
        StagedJournal {
            base,
            pairs: Vec::new(),
            deltas: HashMap::new(),
        }
    }

    fn effective(&self, subwallet_id: &SubwalletId, balance_type: BalanceType) -> Money {
        let committed = self.base.balance_unchecked(subwallet_id, balance_type);
        match self.deltas.get(&(subwallet_id.clone(), balance_type)) {
            Some(delta) => committed.checked_add(*delta).unwrap_or(committed),
            None => committed,
        }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn into_pairs(self) -> Vec<(EntryPair, DateTime<Utc>)> {
        self.pairs
    }
}

impl JournalTarget for StagedJournal<'_> {
    fn available(&self, subwallet_id: &SubwalletId) -> Money {
        self.effective(subwallet_id, BalanceType::Available)
    }

    fn holding(&self, subwallet_id: &SubwalletId) -> Money {
        self.effective(subwallet_id, BalanceType::Holding)
    }

    fn post(
        &mut self,
        pair: EntryPair,
        wallets: &WalletStore,
        at: DateTime<Utc>,
    ) -> Result<(), LedgerError> {
        self.base.validate_pair(&pair, wallets)?;
        for line in pair.lines() {
            if let Some(subwallet_id) = &line.subwallet_id {
                let next = self
                    .effective(subwallet_id, line.balance_type)
                    .checked_add(line.amount)
                    .ok_or(LedgerError::AmountOverflow)?;
                if next.is_negative() {
                    return Err(LedgerError::NegativeBalance {
                        subwallet_id: subwallet_id.clone(),
                        balance_type: line.balance_type,
                    });
                }
            }
        }
        for line in pair.lines() {
            if let Some(subwallet_id) = &line.subwallet_id {
                let slot = self
                    .deltas
                    .entry((subwallet_id.clone(), line.balance_type))
                    .or_insert(Money::ZERO);
                *slot = slot
                    .checked_add(line.amount)
                    .ok_or(LedgerError::AmountOverflow)?;
            }
        }
        self.pairs.push((pair, at));
        Ok(())
    }
}

impl Ledger {
    /// Commits a staged batch: every pair is appended, in staging order, as
    /// one atomic extension of the journal. Nothing is appended on error.
    pub fn commit_staged(
        &mut self,
        staged: Vec<(EntryPair, DateTime<Utc>)>,
        wallets: &WalletStore,
    ) -> Result<(), LedgerError> {
        // Dry-run the whole batch against a scratch overlay first; staged
        // pairs were validated against the same arithmetic, so a failure here
        // means the overlay and ledger disagree and nothing may be applied.
        {
            let mut scratch = StagedJournal::new(self);
            for (pair, at) in &staged {
                scratch.post(pair.clone(), wallets, *at)?;
            }
        }
        for (pair, at) in staged {
            self.post_pair(pair, wallets, at)
                .expect("dry-run validated batch commits cleanly");
        }
        Ok(())
    }
}
