//! Core value objects and entities shared by every other module: money,
//! identifiers, wallets and subwallets, transactions, and investment policies.
//!
//! All amounts are signed integers in minor units of a single implicit
//! currency. Arithmetic is checked; overflow is reported, never wrapped.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

// ---------------------------------------------------------------------------
// Money
// ---------------------------------------------------------------------------

/// A signed amount in minor units (cents).
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn from_minor(units: i64) -> Self {
        Money(units)
    }

    pub fn minor_units(self) -> i64 {
        self.0
    }

    pub fn checked_add(self, other: Money) -> Option<Money> {
        self.0.checked_add(other.0).map(Money)
    }

    pub fn checked_sub(self, other: Money) -> Option<Money> {
        self.0.checked_sub(other.0).map(Money)
    }

    pub fn checked_neg(self) -> Option<Money> {
        self.0.checked_neg().map(Money)
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Parses a decimal string ("100", "100.5", "-0.05") into minor units.
    ///
    /// At most two fraction digits are accepted and the conversion is exact
    /// string arithmetic; floating point is never involved.
    pub fn parse_decimal(s: &str) -> Result<Money, MoneyParseError> {
        let (negative, rest) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        let (whole, frac) = match rest.split_once('.') {
            Some((w, f)) => (w, Some(f)),
            None => (rest, None),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(MoneyParseError::Malformed);
        }
        let frac_units: i128 = match frac {
            None => 0,
            Some(f) => {
                if f.is_empty() || f.len() > 2 || !f.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(MoneyParseError::Malformed);
                }
                let parsed: i128 = f.parse().expect("digits");
                if f.len() == 1 {
                    parsed * 10
                } else {
                    parsed
                }
            }
        };
        let whole_units: i128 = whole.parse().map_err(|_| MoneyParseError::OutOfRange)?;
        let mut total = whole_units
            .checked_mul(100)
            .and_then(|w| w.checked_add(frac_units))
            .ok_or(MoneyParseError::OutOfRange)?;
        if negative {
            total = -total;
        }
        i64::try_from(total)
            .map(Money)
            .map_err(|_| MoneyParseError::OutOfRange)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let units = self.0 as i128;
        let (sign, abs) = if units < 0 { ("-", -units) } else { ("", units) };
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MoneyParseError {
    #[error("malformed amount: expected a decimal string with at most 2 fraction digits")]
    Malformed,
    #[error("amount out of representable range")]
    OutOfRange,
}

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(value: impl Into<String>) -> Self {
                $name(value.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(value: &str) -> Self {
                $name(value.to_owned())
            }
        }
    };
}

id_type!(CustomerId);
id_type!(WalletId);
id_type!(SubwalletId);
id_type!(TransactionId);
id_type!(BatchId);
id_type!(EntryId);
id_type!(
    /// Identifier of a pending investment/liquidation request.
    RequestId
);

/// Sequential id source. Counter-based rather than random so that simulated
/// runs are reproducible and ids stay unique across process restarts once the
/// counter is persisted with the rest of the state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdGen {
    next: u64,
}

impl Default for IdGen {
    fn default() -> Self {
        IdGen { next: 1 }
    }
}

impl IdGen {
    pub fn starting_from(next: u64) -> Self {
        IdGen { next }
    }

    pub fn next_value(&self) -> u64 {
        self.next
    }

    fn take(&mut self, prefix: &str) -> String {
        let n = self.next;
        self.next += 1;
        format!("{prefix}-{n:06}")
    }

    pub fn wallet_id(&mut self) -> WalletId {
        WalletId(self.take("wal"))
    }

    pub fn subwallet_id(&mut self) -> SubwalletId {
        SubwalletId(self.take("sub"))
    }

    pub fn transaction_id(&mut self) -> TransactionId {
        TransactionId(self.take("txn"))
    }

    pub fn batch_id(&mut self) -> BatchId {
        BatchId(self.take("bat"))
    }

    pub fn request_id(&mut self) -> RequestId {
        RequestId(self.take("req"))
    }
}

// ---------------------------------------------------------------------------
// Clock
// ---------------------------------------------------------------------------

/// Logical clock injected everywhere a timestamp is needed. It only moves
/// forward, and only when explicitly advanced, so runs are reproducible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clock {
    now: DateTime<Utc>,
}

impl Default for Clock {
    fn default() -> Self {
        Clock {
            now: Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
        }
    }
}

impl Clock {
    pub fn starting_at(now: DateTime<Utc>) -> Self {
        Clock { now }
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.now
    }

    pub fn today(&self) -> NaiveDate {
        self.now.date_naive()
    }

    /// Moves the clock to `at` if that is later than the current value.
    pub fn advance_to(&mut self, at: DateTime<Utc>) {
        if at > self.now {
            self.now = at;
        }
    }

    /// Moves the clock to midnight UTC of `date` if that is later.
    pub fn advance_to_date(&mut self, date: NaiveDate) {
        if let Some(at) = date.and_hms_opt(0, 0, 0) {
            self.advance_to(at.and_utc());
        }
    }

    pub fn advance_days(&mut self, days: i64) {
        self.now += chrono::Duration::days(days);
    }
}

// ---------------------------------------------------------------------------
// Wallets
// ---------------------------------------------------------------------------

/// The three wallet kinds a customer owns, one of each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WalletType {
    RealMoney,
    EmergencyFunds,
    Investment,
}

impl WalletType {
    pub const ALL: [WalletType; 3] = [
        WalletType::RealMoney,
        WalletType::EmergencyFunds,
        WalletType::Investment,
    ];
}

impl fmt::Display for WalletType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            WalletType::RealMoney => "real-money",
            WalletType::EmergencyFunds => "emergency-funds",
            WalletType::Investment => "investment",
        };
        f.write_str(name)
    }
}

/// A named subdivision of a wallet's funds. Names are display-only;
/// identity is the id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subwallet {
    pub id: SubwalletId,
    pub wallet_id: WalletId,
    pub name: String,
}

/// A typed container of customer funds. Real-money and emergency-funds
/// wallets hold exactly one subwallet; investment wallets hold one subwallet
/// per investment option.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wallet {
    pub id: WalletId,
    pub customer: CustomerId,
    pub wallet_type: WalletType,
    pub subwallets: Vec<Subwallet>,
}

impl Wallet {
    /// The unique subwallet of a single-subwallet wallet.
    pub fn single_subwallet(&self) -> &Subwallet {
        debug_assert!(
            self.subwallets.len() == 1,
            "single_subwallet on a multi-subwallet wallet"
        );
        &self.subwallets[0]
    }

    pub fn subwallet(&self, id: &SubwalletId) -> Option<&Subwallet> {
        self.subwallets.iter().find(|s| &s.id == id)
    }
}

/// One side of a transaction: an external bank account or a specific
/// (wallet, subwallet) pair inside the system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    External {
        reference: Option<String>,
    },
    WalletRef {
        wallet_id: WalletId,
        subwallet_id: SubwalletId,
    },
}

impl Party {
    pub fn external() -> Self {
        Party::External { reference: None }
    }

    pub fn external_ref(reference: impl Into<String>) -> Self {
        Party::External {
            reference: Some(reference.into()),
        }
    }

    pub fn subwallet(wallet_id: WalletId, subwallet_id: SubwalletId) -> Self {
        Party::WalletRef {
            wallet_id,
            subwallet_id,
        }
    }

    pub fn is_external(&self) -> bool {
        matches!(self, Party::External { .. })
    }
}

/// Wallet ids of one customer, one per wallet type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomerWallets {
    pub real_money: WalletId,
    pub emergency_funds: WalletId,
    pub investment: WalletId,
}

impl CustomerWallets {
    pub fn of_type(&self, wallet_type: WalletType) -> &WalletId {
        match wallet_type {
            WalletType::RealMoney => &self.real_money,
            WalletType::EmergencyFunds => &self.emergency_funds,
            WalletType::Investment => &self.investment,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WalletCreateError {
    #[error("customer {0} already has wallets")]
    DuplicateCustomer(CustomerId),
    #[error("investment option list must not be empty")]
    EmptyInvestmentOptions,
    #[error("customer id must not be empty")]
    EmptyCustomerId,
}

/// Registry of all wallets and subwallets. Single writer; readers may hold
/// snapshots.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletStore {
    wallets: BTreeMap<WalletId, Wallet>,
    by_customer: BTreeMap<CustomerId, CustomerWallets>,
}

impl WalletStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates the three wallets of a new customer: a real-money wallet and
    /// an emergency-funds wallet with one subwallet each, plus an investment
    /// wallet with one subwallet per option.
    pub fn create_customer_wallets(
        &mut self,
        ids: &mut IdGen,
        customer: &CustomerId,
        investment_options: &[String],
    ) -> Result<(WalletId, WalletId, WalletId), WalletCreateError> {
        if customer.is_empty() {
            return Err(WalletCreateError::EmptyCustomerId);
        }
        if self.by_customer.contains_key(customer) {
            return Err(WalletCreateError::DuplicateCustomer(customer.clone()));
        }
        if investment_options.is_empty() {
            return Err(WalletCreateError::EmptyInvestmentOptions);
        }

        let mut make_wallet = |wallet_type: WalletType, names: &[String]| {
            let wallet_id = ids.wallet_id();
            let subwallets = names
                .iter()
                .map(|name| Subwallet {
                    id: ids.subwallet_id(),
                    wallet_id: wallet_id.clone(),
                    name: name.clone(),
                })
                .collect();
            let wallet = Wallet {
                id: wallet_id.clone(),
                customer: customer.clone(),
                wallet_type,
                subwallets,
            };
            self.wallets.insert(wallet_id.clone(), wallet);
            wallet_id
        };

        let real_money = make_wallet(WalletType::RealMoney, &["real-money".to_owned()]);
        let emergency_funds =
            make_wallet(WalletType::EmergencyFunds, &["emergency-funds".to_owned()]);
        let investment = make_wallet(WalletType::Investment, investment_options);

        self.by_customer.insert(
            customer.clone(),
            CustomerWallets {
                real_money: real_money.clone(),
                emergency_funds: emergency_funds.clone(),
                investment: investment.clone(),
            },
        );
        Ok((real_money, emergency_funds, investment))
    }

    pub fn wallet(&self, id: &WalletId) -> Option<&Wallet> {
        self.wallets.get(id)
    }

    pub fn customer_wallets(&self, customer: &CustomerId) -> Option<&CustomerWallets> {
        self.by_customer.get(customer)
    }

    pub fn wallet_of(&self, customer: &CustomerId, wallet_type: WalletType) -> Option<&Wallet> {
        let ids = self.by_customer.get(customer)?;
        self.wallets.get(ids.of_type(wallet_type))
    }

    pub fn customers(&self) -> impl Iterator<Item = &CustomerId> {
        self.by_customer.keys()
    }

    pub fn wallets(&self) -> impl Iterator<Item = &Wallet> {
        self.wallets.values()
    }

    /// Resolves a subwallet id to its owning wallet.
    pub fn owner_of_subwallet(&self, subwallet_id: &SubwalletId) -> Option<&Wallet> {
        self.wallets
            .values()
            .find(|w| w.subwallets.iter().any(|s| &s.id == subwallet_id))
    }

    /// Checks that a wallet exists and that the subwallet belongs to it.
    pub fn resolve_ref(
        &self,
        wallet_id: &WalletId,
        subwallet_id: &SubwalletId,
    ) -> Option<(&Wallet, &Subwallet)> {
        let wallet = self.wallets.get(wallet_id)?;
        let subwallet = wallet.subwallet(subwallet_id)?;
        Some((wallet, subwallet))
    }

    /// Structural self-check, used when rebuilding a store from persisted
    /// state: every customer slot resolves to a wallet of the right type,
    /// subwallet counts match the wallet type, back-references hold, and
    /// subwallet ids are unique system-wide.
    pub fn verify(&self) -> Result<(), String> {
        let mut seen_subwallets: std::collections::BTreeSet<&SubwalletId> =
            std::collections::BTreeSet::new();
        let mut claimed: std::collections::BTreeSet<&WalletId> = std::collections::BTreeSet::new();
        for (customer, slots) in &self.by_customer {
            for wallet_type in WalletType::ALL {
                let wallet_id = slots.of_type(wallet_type);
                let Some(wallet) = self.wallets.get(wallet_id) else {
                    return Err(format!("customer {customer} references missing wallet {wallet_id}"));
                };
                if wallet.wallet_type != wallet_type {
                    return Err(format!("wallet {wallet_id} has type {:?}, slot says {wallet_type:?}", wallet.wallet_type));
                }
                if wallet.customer != *customer {
                    return Err(format!("wallet {wallet_id} belongs to {}, slot says {customer}", wallet.customer));
                }
                let count = wallet.subwallets.len();
                let count_ok = match wallet_type {
                    WalletType::RealMoney | WalletType::EmergencyFunds => count == 1,
                    WalletType::Investment => count >= 1,
                };
                if !count_ok {
                    return Err(format!("wallet {wallet_id} has {count} subwallets"));
                }
                for subwallet in &wallet.subwallets {
                    if subwallet.wallet_id != *wallet_id {
                        return Err(format!("subwallet {} back-references {}", subwallet.id, subwallet.wallet_id));
                    }
                    if !seen_subwallets.insert(&subwallet.id) {
                        return Err(format!("subwallet id {} is not unique", subwallet.id));
                    }
                }
                claimed.insert(wallet_id);
            }
        }
        if claimed.len() != self.wallets.len() {
            return Err("wallet store contains wallets not owned by any customer".to_owned());
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Transactions
// ---------------------------------------------------------------------------

/// The five supported movement kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransactionType {
    Deposit,
    Withdrawal,
    Transfer,
    Hold,
    TransferFromHold,
}

impl TransactionType {
    pub const ALL: [TransactionType; 5] = [
        TransactionType::Deposit,
        TransactionType::Withdrawal,
        TransactionType::Transfer,
        TransactionType::Hold,
        TransactionType::TransferFromHold,
    ];
}

/// Lifecycle states. `Failed` and `Completed` are terminal;
/// `TransientError` is cyclic and eligible for retry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransactionStatus {
    Processing,
    Failed,
    TransientError,
    Completed,
}

impl TransactionStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, TransactionStatus::Failed | TransactionStatus::Completed)
    }
}

impl fmt::Display for TransactionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TransactionStatus::Processing => "processing",
            TransactionStatus::Failed => "failed",
            TransactionStatus::TransientError => "transient-error",
            TransactionStatus::Completed => "completed",
        };
        f.write_str(name)
    }
}

/// Why a transaction was rejected by validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvalidReason {
    IncompatibleWallet,
    IncompatibleRoute,
    InsufficientFunds,
    SameSubwallet,
    UnknownParty,
    NonPositiveAmount,
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            InvalidReason::IncompatibleWallet => "incompatible-wallet",
            InvalidReason::IncompatibleRoute => "incompatible-route",
            InvalidReason::InsufficientFunds => "insufficient-funds",
            InvalidReason::SameSubwallet => "same-subwallet",
            InvalidReason::UnknownParty => "unknown-party",
            InvalidReason::NonPositiveAmount => "non-positive-amount",
        };
        f.write_str(name)
    }
}

/// Last failure recorded on a transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransactionFailure {
    Validation(InvalidReason),
    GatewayUnavailable,
    LedgerPost(String),
}

impl fmt::Display for TransactionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransactionFailure::Validation(reason) => write!(f, "validation: {reason}"),
            TransactionFailure::GatewayUnavailable => f.write_str("gateway unavailable"),
            TransactionFailure::LedgerPost(detail) => write!(f, "ledger post: {detail}"),
        }
    }
}

/// A stateful attempt to move funds between two parties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TransactionId,
    pub txn_type: TransactionType,
    pub amount: Money,
    pub originator: Party,
    pub beneficiary: Party,
    pub status: TransactionStatus,
    pub attempts: u32,
    pub batch_id: Option<BatchId>,
    pub created_at: DateTime<Utc>,
    pub last_error: Option<TransactionFailure>,
}

/// Ordered transaction registry.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransactionStore {
    txns: BTreeMap<TransactionId, Transaction>,
    order: Vec<TransactionId>,
}

impl TransactionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, txn: Transaction) {
        debug_assert!(!self.txns.contains_key(&txn.id), "duplicate transaction id");
        self.order.push(txn.id.clone());
        self.txns.insert(txn.id.clone(), txn);
    }

    pub fn get(&self, id: &TransactionId) -> Option<&Transaction> {
        self.txns.get(id)
    }

    pub fn get_mut(&mut self, id: &TransactionId) -> Option<&mut Transaction> {
        self.txns.get_mut(id)
    }

    pub fn update(&mut self, txn: Transaction) {
        debug_assert!(self.txns.contains_key(&txn.id), "update of unknown transaction");
        self.txns.insert(txn.id.clone(), txn);
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Transactions in creation order.
    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.order.iter().filter_map(|id| self.txns.get(id))
    }

    /// Creation-order slice starting at `from`, for incremental consumers.
    pub fn ids_from(&self, from: usize) -> &[TransactionId] {
        &self.order[from.min(self.order.len())..]
    }
}

// ---------------------------------------------------------------------------
// Balance types
// ---------------------------------------------------------------------------

/// Which bucket of a balance a journal entry touches. `Internal` is the
/// external-bank side of a deposit or withdrawal and carries no wallet
/// reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BalanceType {
    Internal,
    Available,
    Holding,
}

// ---------------------------------------------------------------------------
// Investment policy
// ---------------------------------------------------------------------------

/// Basis-point allocation over the subwallets of a customer's investment
/// wallet. The shares must sum to exactly 10000 (100%).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvestmentPolicy {
    pub customer: CustomerId,
    pub allocations: BTreeMap<SubwalletId, u32>,
}

impl InvestmentPolicy {
    pub const FULL_SHARE: u64 = 10_000;

    pub fn basis_point_sum(&self) -> u64 {
        self.allocations.values().map(|&bp| bp as u64).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("allocation basis points sum to {actual}, expected 10000")]
    PolicySumInvalid { actual: u64 },
    #[error("subwallet {0} is not part of the customer's investment wallet")]
    ForeignSubwallet(SubwalletId),
    #[error("customer has no wallets")]
    UnknownCustomer,
}

/// Valid iff basis points sum to 10000 and every key is a subwallet of the
/// customer's investment wallet. Zero-valued entries are permitted.
pub fn validate_policy(policy: &InvestmentPolicy, wallets: &WalletStore) -> Result<(), PolicyError> {
    let actual = policy.basis_point_sum();
    if actual != InvestmentPolicy::FULL_SHARE {
        return Err(PolicyError::PolicySumInvalid { actual });
    }
    let investment = wallets
        .wallet_of(&policy.customer, WalletType::Investment)
        .ok_or(PolicyError::UnknownCustomer)?;
    for subwallet_id in policy.allocations.keys() {
        if investment.subwallet(subwallet_id).is_none() {
            return Err(PolicyError::ForeignSubwallet(subwallet_id.clone()));
        }
    }
    Ok(())
}

/// Per-customer policy registry. Storing goes through [`validate_policy`], so
/// an invalid policy is never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyStore {
    policies: BTreeMap<CustomerId, InvestmentPolicy>,
}

impl PolicyStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(
        &mut self,
        policy: InvestmentPolicy,
        wallets: &WalletStore,
    ) -> Result<(), PolicyError> {
        validate_policy(&policy, wallets)?;
        self.policies.insert(policy.customer.clone(), policy);
        Ok(())
    }

    pub fn get(&self, customer: &CustomerId) -> Option<&InvestmentPolicy> {
        self.policies.get(customer)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CustomerId, &InvestmentPolicy)> {
        self.policies.iter()
    }
}
