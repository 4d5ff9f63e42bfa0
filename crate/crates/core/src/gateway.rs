//! Third-party bank gateway abstraction with a deterministic fault-injecting
//! simulator. Deposits and withdrawals cross this boundary; failures here are
//! the transient errors the retry machinery exists for.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

use crate::domain::{Money, TransactionId};

/// Whether funds enter or leave the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Inbound,
    Outbound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayRequest {
    pub direction: Direction,
    pub amount: Money,
    pub external_ref: String,
    pub request_id: TransactionId,
}

/// Token returned by the partner on success.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confirmation {
    pub token: String,
}

/// Always retryable by contract.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("third-party gateway unavailable")]
pub struct TransientGatewayError;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("no successful transfer recorded for {0}")]
pub struct UnknownRequest(pub TransactionId);

pub trait Gateway {
    /// Executes an external transfer. Outcomes are deterministic for a given
    /// fault configuration and call order.
    fn external_transfer(
        &mut self,
        request: GatewayRequest,
    ) -> Result<Confirmation, TransientGatewayError>;

    /// Records a compensating reversal for a previously confirmed transfer.
    /// One-shot per request id; used only by batch rollback.
    fn compensate(&mut self, request_id: &TransactionId) -> Result<(), UnknownRequest>;
}

/// Fault injection parameters. The next `fail_next_k` calls fail
/// unconditionally; after that each call fails when the seeded generator
/// draws below `fail_probability`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    pub fail_next_k: u64,
    pub fail_probability: f64,
    pub seed: u64,
}

impl Default for FaultConfig {
    fn default() -> Self {
        FaultConfig {
            fail_next_k: 0,
            fail_probability: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GatewayCallKind {
    Transfer { direction: Direction, amount: Money },
    Reversal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CallOutcome {
    Success,
    TransientFailure,
}

/// One row of the inspectable call log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayCall {
    pub request_id: TransactionId,
    pub kind: GatewayCallKind,
    pub outcome: CallOutcome,
}

/// The bundled simulator implementation. Single-threaded per instance;
/// callers serialize access.
#[derive(Clone, Debug)]
pub struct SimulatedGateway {
    config: FaultConfig,
    fail_credits: u64,
    rng: ChaCha8Rng,
    log: Vec<GatewayCall>,
    confirmed: BTreeSet<TransactionId>,
    next_token: u64,
}

impl Default for SimulatedGateway {
    fn default() -> Self {
        SimulatedGateway::new(FaultConfig::default())
    }
}

impl SimulatedGateway {
    pub fn new(config: FaultConfig) -> Self {
        SimulatedGateway {
            fail_credits: config.fail_next_k,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            log: Vec::new(),
            confirmed: BTreeSet::new(),
            next_token: 1,
        }
    }

    /// Replaces the fault configuration, rearming the failure credits and
    /// reseeding the generator.
    pub fn set_fault_config(&mut self, config: FaultConfig) {
        self.fail_credits = config.fail_next_k;
        self.rng = ChaCha8Rng::seed_from_u64(config.seed);
        self.config = config;
    }

    pub fn fault_config(&self) -> FaultConfig {
        self.config
    }

    pub fn log(&self) -> &[GatewayCall] {
        &self.log
    }

    fn next_call_fails(&mut self) -> bool {
        if self.fail_credits > 0 {
            self.fail_credits -= 1;
            return true;
        }
        self.config.fail_probability > 0.0
            && self.rng.gen::<f64>() < self.config.fail_probability
    }
}

impl Gateway for SimulatedGateway {
    fn external_transfer(
        &mut self,
        request: GatewayRequest,
    ) -> Result<Confirmation, TransientGatewayError> {
        let kind = GatewayCallKind::Transfer {
            direction: request.direction,
            amount: request.amount,
        };
        if self.next_call_fails() {
            self.log.push(GatewayCall {
                request_id: request.request_id,
                kind,
                outcome: CallOutcome::TransientFailure,
            });
            return Err(TransientGatewayError);
        }
        let token = format!("conf-{:06}", self.next_token);
        self.next_token += 1;
        self.confirmed.insert(request.request_id.clone());
        self.log.push(GatewayCall {
            request_id: request.request_id,
            kind,
            outcome: CallOutcome::Success,
        });
        Ok(Confirmation { token })
    }

    fn compensate(&mut self, request_id: &TransactionId) -> Result<(), UnknownRequest> {
        if !self.confirmed.remove(request_id) {
            return Err(UnknownRequest(request_id.clone()));
        }
        self.log.push(GatewayCall {
            request_id: request_id.clone(),
            kind: GatewayCallKind::Reversal,
            outcome: CallOutcome::Success,
        });
        Ok(())
    }
}
