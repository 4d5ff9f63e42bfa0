//! Wallet service: translates customer money-movement requests into
//! transactions and exposes ledger-backed balance queries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    CustomerId, Money, Party, SubwalletId, Transaction, TransactionType, WalletId, WalletType,
};
use crate::engine::Engine;
use crate::gateway::Gateway;
use crate::investments::{InvestError, PendingRequest};

/// The six request kinds customers can issue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalletRequestKind {
    Deposit,
    Withdraw,
    EmergencyAllocation,
    EmergencyRelease,
    Investment,
    Liquidation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletRequest {
    pub kind: WalletRequestKind,
    pub customer: CustomerId,
    pub amount: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WalletError {
    #[error("unknown customer {0}")]
    UnknownCustomer(CustomerId),
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RequestError {
    #[error(transparent)]
    Wallet(#[from] WalletError),
    #[error(transparent)]
    Invest(#[from] InvestError),
}

/// Outcome of a dispatched [`WalletRequest`]: instant kinds yield the
/// processed transaction, investment kinds a pending request.
#[derive(Clone, Debug, PartialEq)]
pub enum RequestOutcome {
    Transaction(Transaction),
    Pending(PendingRequest),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwalletBalances {
    pub subwallet_id: SubwalletId,
    pub name: String,
    pub available: Money,
    pub holding: Money,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletBalances {
    pub wallet_id: WalletId,
    pub wallet_type: WalletType,
    pub available: Money,
    pub holding: Money,
    pub subwallets: Vec<SubwalletBalances>,
}

/// Read-only aggregate of one customer's balances, in
/// real-money / emergency-funds / investment order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalletSummary {
    pub customer: CustomerId,
    pub wallets: Vec<WalletBalances>,
}

impl<G: Gateway> Engine<G> {
    /// Party reference to the single subwallet of one of the customer's
    /// single-subwallet wallets.
    fn single_subwallet_ref(
        &self,
        customer: &CustomerId,
        wallet_type: WalletType,
    ) -> Result<Party, WalletError> {
        let wallet = self
            .wallets
            .wallet_of(customer, wallet_type)
            .ok_or_else(|| WalletError::UnknownCustomer(customer.clone()))?;
        Ok(Party::subwallet(
            wallet.id.clone(),
            wallet.single_subwallet().id.clone(),
        ))
    }

    /// Deposits external funds into the customer's real-money wallet.
    pub fn deposit(
        &mut self,
        customer: &CustomerId,
        amount: Money,
    ) -> Result<Transaction, WalletError> {
        let rm = self.single_subwallet_ref(customer, WalletType::RealMoney)?;
        let id = self.create_transaction(TransactionType::Deposit, amount, Party::external(), rm);
        Ok(self.process_stored(&id).expect("freshly created"))
    }

    /// Withdraws real-money funds to an external account; the balance check
    /// applies.
    pub fn withdraw(
        &mut self,
        customer: &CustomerId,
        amount: Money,
    ) -> Result<Transaction, WalletError> {
        let rm = self.single_subwallet_ref(customer, WalletType::RealMoney)?;
        let id =
            self.create_transaction(TransactionType::Withdrawal, amount, rm, Party::external());
        Ok(self.process_stored(&id).expect("freshly created"))
    }

    /// Instant transfer real-money -> emergency-funds (no settlement).
    pub fn emergency_allocate(
        &mut self,
        customer: &CustomerId,
        amount: Money,
    ) -> Result<Transaction, WalletError> {
        let rm = self.single_subwallet_ref(customer, WalletType::RealMoney)?;
        let ef = self.single_subwallet_ref(customer, WalletType::EmergencyFunds)?;
        let id = self.create_transaction(TransactionType::Transfer, amount, rm, ef);
        Ok(self.process_stored(&id).expect("freshly created"))
    }

    /// Instant transfer emergency-funds -> real-money.
    pub fn emergency_release(
        &mut self,
        customer: &CustomerId,
        amount: Money,
    ) -> Result<Transaction, WalletError> {
        let rm = self.single_subwallet_ref(customer, WalletType::RealMoney)?;
        let ef = self.single_subwallet_ref(customer, WalletType::EmergencyFunds)?;
        let id = self.create_transaction(TransactionType::Transfer, amount, ef, rm);
        Ok(self.process_stored(&id).expect("freshly created"))
    }

    /// Pure read over the ledger: per-wallet available/holding totals plus a
    /// per-subwallet breakdown.
    pub fn wallet_summary(&self, customer: &CustomerId) -> Result<WalletSummary, WalletError> {
        let ids = self
            .wallets
            .customer_wallets(customer)
            .ok_or_else(|| WalletError::UnknownCustomer(customer.clone()))?;
        let mut wallets = Vec::with_capacity(3);
        for wallet_type in WalletType::ALL {
            let wallet = self
                .wallets
                .wallet(ids.of_type(wallet_type))
                .expect("customer wallet ids resolve");
            let subwallets: Vec<SubwalletBalances> = wallet
                .subwallets
                .iter()
                .map(|s| SubwalletBalances {
                    subwallet_id: s.id.clone(),
                    name: s.name.clone(),
                    available: self
                        .ledger
                        .balance_unchecked(&s.id, crate::domain::BalanceType::Available),
                    holding: self
                        .ledger
                        .balance_unchecked(&s.id, crate::domain::BalanceType::Holding),
                })
                .collect();
            wallets.push(WalletBalances {
                wallet_id: wallet.id.clone(),
                wallet_type,
                available: self
                    .ledger
                    .available_balance(&self.wallets, &wallet.id)
                    .expect("wallet exists"),
                holding: self
                    .ledger
                    .holding_balance(&self.wallets, &wallet.id)
                    .expect("wallet exists"),
                subwallets,
            });
        }
        Ok(WalletSummary {
            customer: customer.clone(),
            wallets,
        })
    }

    /// Total dispatch over the six request kinds.
    pub fn handle_request(
        &mut self,
        request: &WalletRequest,
    ) -> Result<RequestOutcome, RequestError> {
        let WalletRequest {
            kind,
            customer,
            amount,
        } = request;
        match kind {
            WalletRequestKind::Deposit => Ok(RequestOutcome::Transaction(
                self.deposit(customer, *amount)?,
            )),
            WalletRequestKind::Withdraw => Ok(RequestOutcome::Transaction(
                self.withdraw(customer, *amount)?,
            )),
            WalletRequestKind::EmergencyAllocation => Ok(RequestOutcome::Transaction(
                self.emergency_allocate(customer, *amount)?,
            )),
            WalletRequestKind::EmergencyRelease => Ok(RequestOutcome::Transaction(
                self.emergency_release(customer, *amount)?,
            )),
            WalletRequestKind::Investment => {
                Ok(RequestOutcome::Pending(self.invest(customer, *amount)?))
            }
            WalletRequestKind::Liquidation => {
                Ok(RequestOutcome::Pending(self.liquidate(customer, *amount)?))
            }
        }
    }
}
