//! State directory persistence. Layout:
//!
//! ```text
//! ledger.jsonl        one journal entry per line, ordered by seq
//! wallets.json        wallet store
//! transactions.json   transactions in creation order
//! policies.json       investment policies per customer
//! pending.json        pending investment/liquidation requests
//! clock.json          logical clock and the id counter
//! ```
//!
//! Import revalidates every invariant the engine maintains; a tampered file
//! surfaces as `CorruptState` naming the file and the reason.

use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use wallet_core::investments::PendingRequest;
use wallet_core::{
    Clock, Engine, IdGen, JournalEntry, Ledger, PolicyStore, SimulatedGateway, Transaction,
    TransactionStore, WalletStore,
};

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const WALLETS_FILE: &str = "wallets.json";
pub const TRANSACTIONS_FILE: &str = "transactions.json";
pub const POLICIES_FILE: &str = "policies.json";
pub const PENDING_FILE: &str = "pending.json";
pub const CLOCK_FILE: &str = "clock.json";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt state in {file}: {reason}")]
    CorruptState { file: String, reason: String },
}

fn io_err(file: &str, source: std::io::Error) -> PersistError {
    PersistError::Io {
        file: file.to_owned(),
        source,
    }
}

fn corrupt(file: &str, reason: impl Into<String>) -> PersistError {
    PersistError::CorruptState {
        file: file.to_owned(),
        reason: reason.into(),
    }
}

#[derive(Serialize, Deserialize)]
struct ClockFile {
    now: DateTime<Utc>,
    next_id: u64,
}

/// Writes the full system state into `dir`, creating it if needed.
pub fn export(engine: &Engine<SimulatedGateway>, dir: &Path) -> Result<(), PersistError> {
    fs::create_dir_all(dir).map_err(|e| io_err(&dir.display().to_string(), e))?;
    let write = |file: &str, contents: String| -> Result<(), PersistError> {
        fs::write(dir.join(file), contents).map_err(|e| io_err(file, e))
    };

    write(LEDGER_FILE, engine.ledger.export_jsonl())?;
    write(
        WALLETS_FILE,
        serde_json::to_string_pretty(&engine.wallets).expect("wallet store serializes"),
    )?;
    let transactions: Vec<&Transaction> = engine.transactions.iter().collect();
    write(
        TRANSACTIONS_FILE,
        serde_json::to_string_pretty(&transactions).expect("transactions serialize"),
    )?;
    write(
        POLICIES_FILE,
        serde_json::to_string_pretty(&engine.policies).expect("policies serialize"),
    )?;
    write(
        PENDING_FILE,
        serde_json::to_string_pretty(&engine.pending).expect("pending requests serialize"),
    )?;
    write(
        CLOCK_FILE,
        serde_json::to_string_pretty(&ClockFile {
            now: engine.clock.now(),
            next_id: engine.ids.next_value(),
        })
        .expect("clock serializes"),
    )?;
    Ok(())
}

fn read_file(dir: &Path, file: &str) -> Result<String, PersistError> {
    fs::read_to_string(dir.join(file)).map_err(|e| io_err(file, e))
}

fn parse_json<T: serde::de::DeserializeOwned>(file: &str, raw: &str) -> Result<T, PersistError> {
    serde_json::from_str(raw).map_err(|e| corrupt(file, e.to_string()))
}

/// Reads a complete state directory back into a fresh engine and revalidates
/// every invariant before returning it.
pub fn import(dir: &Path) -> Result<Engine<SimulatedGateway>, PersistError> {
    let mut entries = Vec::new();
    for (number, line) in read_file(dir, LEDGER_FILE)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: JournalEntry = serde_json::from_str(line)
            .map_err(|e| corrupt(LEDGER_FILE, format!("line {}: {e}", number + 1)))?;
        entries.push(entry);
    }
    let ledger = Ledger::from_entries(entries).map_err(|e| corrupt(LEDGER_FILE, e.to_string()))?;

    let wallets: WalletStore = parse_json(WALLETS_FILE, &read_file(dir, WALLETS_FILE)?)?;
    wallets
        .verify()
        .map_err(|reason| corrupt(WALLETS_FILE, reason))?;

    let txn_list: Vec<Transaction> = parse_json(TRANSACTIONS_FILE, &read_file(dir, TRANSACTIONS_FILE)?)?;
    let mut transactions = TransactionStore::new();
    for txn in txn_list {
        if transactions.get(&txn.id).is_some() {
            return Err(corrupt(
                TRANSACTIONS_FILE,
                format!("duplicate transaction id {}", txn.id),
            ));
        }
        transactions.insert(txn);
    }

    let policies: PolicyStore = parse_json(POLICIES_FILE, &read_file(dir, POLICIES_FILE)?)?;
    let pending: Vec<PendingRequest> = parse_json(PENDING_FILE, &read_file(dir, PENDING_FILE)?)?;
    let clock_file: ClockFile = parse_json(CLOCK_FILE, &read_file(dir, CLOCK_FILE)?)?;

    // The id counter must be ahead of every counter-issued id on record,
    // otherwise future ids would collide.
    let mut max_suffix = 0u64;
    let mut observe = |id: &str| {
        if let Some((_, digits)) = id.rsplit_once('-') {
            if let Ok(n) = digits.parse::<u64>() {
                max_suffix = max_suffix.max(n);
            }
        }
    };
    for wallet in wallets.wallets() {
        observe(wallet.id.as_str());
        for subwallet in &wallet.subwallets {
            observe(subwallet.id.as_str());
        }
    }
    for txn in transactions.iter() {
        observe(txn.id.as_str());
        if let Some(batch_id) = &txn.batch_id {
            observe(batch_id.as_str());
        }
    }
    for request in &pending {
        observe(request.id.as_str());
    }
    if clock_file.next_id <= max_suffix {
        return Err(corrupt(
            CLOCK_FILE,
            format!(
                "next_id {} is not ahead of the largest persisted id suffix {max_suffix}",
                clock_file.next_id
            ),
        ));
    }

    let mut engine = Engine::with_gateway(SimulatedGateway::default());
    engine.wallets = wallets;
    engine.policies = policies;
    engine.transactions = transactions;
    engine.pending = pending;
    engine.ledger = ledger;
    engine.clock = Clock::starting_at(clock_file.now);
    engine.ids = IdGen::starting_from(clock_file.next_id);

    engine
        .verify_consistency()
        .map_err(|reason| corrupt("state", reason))?;
    Ok(engine)
}

/// Imports an existing state directory, or starts fresh when the directory
/// does not exist yet (or exists but has no state files).
pub fn load_or_default(dir: &Path) -> Result<Engine<SimulatedGateway>, PersistError> {
    if dir.join(CLOCK_FILE).exists() {
        import(dir)
    } else {
        Ok(Engine::new())
    }
}
