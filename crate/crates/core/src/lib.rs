//! Transactional digital-wallet engine: typed wallets and subwallets, a
//! double-entry journal ledger, a five-type transaction lifecycle with
//! validation and retry, atomic batches, investment-policy allocation, and
//! business-day settlement.

pub mod domain;
pub mod engine;
pub mod gateway;
pub mod investments;
pub mod ledger;
pub mod transactions;
pub mod wallets;

pub use domain::{
    BalanceType, BatchId, Clock, CustomerId, EntryId, IdGen, InvalidReason, InvestmentPolicy,
    Money, Party, PolicyError, PolicyStore, RequestId, Subwallet, SubwalletId, Transaction,
    TransactionFailure, TransactionId, TransactionStatus, TransactionStore, TransactionType,
    Wallet, WalletId, WalletStore, WalletType,
};
pub use engine::{Engine, EngineError};
pub use gateway::{FaultConfig, Gateway, GatewayRequest, SimulatedGateway};
pub use investments::{
    allocate, AllocationError, BusinessCalendar, InvestError, PendingKind, PendingRequest,
    PendingStatus, SettlementRun,
};
pub use ledger::{EntryLine, EntryPair, JournalEntry, JournalTarget, Ledger, LedgerError, StagedJournal};
pub use transactions::{
    journal_pair_for, process_transaction, retry, transition, validate, Batch, BatchFailure,
    BatchStatus, RetryPolicy, StateError, TransactionEvent, ValidationOutcome,
};
pub use wallets::{
    RequestError, RequestOutcome, WalletError, WalletRequest, WalletRequestKind, WalletSummary,
};
