//! Investment service: policy management, proportional allocation with
//! largest-remainder rounding, the hold-based invest/liquidate flows, and
//! business-day settlement.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    CustomerId, InvalidReason, InvestmentPolicy, Money, Party, PolicyError, RequestId, SubwalletId,
    TransactionFailure, TransactionId, TransactionStatus, TransactionType, WalletType,
};
use crate::engine::Engine;
use crate::gateway::Gateway;
use crate::transactions::{Batch, BatchFailure, BatchStatus};

// ---------------------------------------------------------------------------
// Business calendar
// ---------------------------------------------------------------------------

/// Monday-Friday working week with a configurable holiday list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusinessCalendar {
    holidays: BTreeSet<NaiveDate>,
}

impl BusinessCalendar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_holidays(holidays: impl IntoIterator<Item = NaiveDate>) -> Self {
        BusinessCalendar {
            holidays: holidays.into_iter().collect(),
        }
    }

    pub fn add_holiday(&mut self, date: NaiveDate) {
        self.holidays.insert(date);
    }

    pub fn holidays(&self) -> impl Iterator<Item = &NaiveDate> {
        self.holidays.iter()
    }

    pub fn is_business_day(&self, date: NaiveDate) -> bool {
        !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) && !self.holidays.contains(&date)
    }

    /// Smallest date strictly after `date` that is a business day.
    pub fn next_business_day(&self, date: NaiveDate) -> NaiveDate {
        let mut candidate = date.succ_opt().expect("date within calendar range");
        while !self.is_business_day(candidate) {
            candidate = candidate.succ_opt().expect("date within calendar range");
        }
        candidate
    }
}

// ---------------------------------------------------------------------------
// Allocation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AllocationError {
    #[error("policy basis points sum to {actual_sum}, expected 10000")]
    InvalidPolicy { actual_sum: u64 },
    #[error("allocation amount must be positive")]
    NonPositiveAmount,
}

/// Splits `amount` across the policy's buckets: each gets
/// floor(amount * bp / 10000), and the remainder goes one unit at a time to
/// the buckets with the largest fractional remainders, ties broken by
/// ascending subwallet id. The result sums exactly to `amount`; buckets that
/// end up with nothing (zero basis points, or rounded to zero) are omitted.
pub fn allocate(
    amount: Money,
    policy: &InvestmentPolicy,
) -> Result<BTreeMap<SubwalletId, Money>, AllocationError> {
    if !amount.is_positive() {
        return Err(AllocationError::NonPositiveAmount);
    }
    let actual_sum = policy.basis_point_sum();
    if actual_sum != InvestmentPolicy::FULL_SHARE {
        return Err(AllocationError::InvalidPolicy { actual_sum });
    }

    let total = amount.minor_units() as i128;
    struct Bucket<'a> {
        id: &'a SubwalletId,
        share: i128,
        remainder: i128,
    }
    // BTreeMap iteration is ascending by id; the stable sort below keeps that
    // order among equal remainders.
    let mut buckets: Vec<Bucket> = policy
        .allocations
        .iter()
        .filter(|(_, bp)| **bp > 0)
        .map(|(id, bp)| {
            let product = total * (*bp as i128);
            Bucket {
                id,
                share: product / InvestmentPolicy::FULL_SHARE as i128,
                remainder: product % InvestmentPolicy::FULL_SHARE as i128,
            }
        })
        .collect();

    let floor_sum: i128 = buckets.iter().map(|b| b.share).sum();
    let leftover = (total - floor_sum) as usize;
    let mut order: Vec<usize> = (0..buckets.len()).collect();
    order.sort_by(|&a, &b| buckets[b].remainder.cmp(&buckets[a].remainder));
    for &i in order.iter().take(leftover) {
        buckets[i].share += 1;
    }

    Ok(buckets
        .into_iter()
        .filter(|b| b.share > 0)
        .map(|b| (b.id.clone(), Money::from_minor(b.share as i64)))
        .collect())
}

// ---------------------------------------------------------------------------
// Pending requests
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PendingKind {
    Investment,
    Liquidation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PendingStatus {
    Pending,
    Settled,
    Failed,
}

/// A multi-step investment or liquidation awaiting business-day settlement.
/// The policy snapshot is frozen at creation; settlement uses the recorded
/// per-subwallet split, not the live policy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingRequest {
    pub id: RequestId,
    pub customer: CustomerId,
    pub kind: PendingKind,
    pub amount: Money,
    pub policy_snapshot: InvestmentPolicy,
    pub hold_txn_ids: Vec<TransactionId>,
    pub per_subwallet_amounts: BTreeMap<SubwalletId, Money>,
    pub initiated_on: NaiveDate,
    pub status: PendingStatus,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum InvestError {
    #[error("unknown customer {0}")]
    UnknownCustomer(CustomerId),
    #[error("customer has no investment policy")]
    PolicyNotFound,
    #[error("amount must be positive")]
    NonPositiveAmount,
    #[error("hold failed validation: {0}")]
    HoldFailed(InvalidReason),
    #[error("hold hit a transient error and stays retryable")]
    HoldTransient,
    #[error("liquidation batch failed: {0:?}")]
    BatchFailed(BatchFailure),
}

/// Outcome of one settlement run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SettlementRun {
    pub settled: Vec<PendingRequest>,
    pub failed: Vec<(RequestId, BatchFailure)>,
}

impl<G: Gateway> Engine<G> {
    /// Validates and stores the customer's investment policy, replacing any
    /// previous one. Snapshots inside already-pending requests are
    /// unaffected.
    pub fn set_policy(
        &mut self,
        customer: &CustomerId,
        allocations: BTreeMap<SubwalletId, u32>,
    ) -> Result<InvestmentPolicy, PolicyError> {
        let policy = InvestmentPolicy {
            customer: customer.clone(),
            allocations,
        };
        self.policies.set(policy.clone(), &self.wallets)?;
        Ok(policy)
    }

    /// Reserves `amount` on the real-money subwallet with a hold and records
    /// a pending investment split per the stored policy. The transfers into
    /// the investment subwallets happen at settlement on the next business
    /// day.
    pub fn invest(
        &mut self,
        customer: &CustomerId,
        amount: Money,
    ) -> Result<PendingRequest, InvestError> {
        if self.wallets.customer_wallets(customer).is_none() {
            return Err(InvestError::UnknownCustomer(customer.clone()));
        }
        let Some(policy) = self.policies.get(customer).cloned() else {
            return Err(InvestError::PolicyNotFound);
        };

        let rm_wallet = self
            .wallets
            .wallet_of(customer, WalletType::RealMoney)
            .expect("customer wallets exist");
        let rm_ref = Party::subwallet(rm_wallet.id.clone(), rm_wallet.single_subwallet().id.clone());
        let hold_id =
            self.create_transaction(TransactionType::Hold, amount, rm_ref.clone(), rm_ref);
        let hold = self.process_stored(&hold_id).expect("freshly created");

        match hold.status {
            TransactionStatus::Completed => {
                let per_subwallet_amounts =
                    allocate(amount, &policy).expect("stored policy is valid, amount validated");
                let request = PendingRequest {
                    id: self.ids.request_id(),
                    customer: customer.clone(),
                    kind: PendingKind::Investment,
                    amount,
                    policy_snapshot: policy,
                    hold_txn_ids: vec![hold_id],
                    per_subwallet_amounts,
                    initiated_on: self.clock.today(),
                    status: PendingStatus::Pending,
                };
                self.pending.push(request.clone());
                Ok(request)
            }
            TransactionStatus::TransientError => Err(InvestError::HoldTransient),
            TransactionStatus::Failed => {
                let Some(TransactionFailure::Validation(reason)) = hold.last_error else {
                    unreachable!("a freshly processed hold fails only validation");
                };
                Err(InvestError::HoldFailed(reason))
            }
            TransactionStatus::Processing => unreachable!("processed hold cannot stay Processing"),
        }
    }

    /// Splits `amount` per the stored policy and places one hold per bucket
    /// on the corresponding investment subwallet, all-or-nothing. On success
    /// records a pending liquidation settled on the next business day.
    pub fn liquidate(
        &mut self,
        customer: &CustomerId,
        amount: Money,
    ) -> Result<PendingRequest, InvestError> {
        if self.wallets.customer_wallets(customer).is_none() {
            return Err(InvestError::UnknownCustomer(customer.clone()));
        }
        let Some(policy) = self.policies.get(customer).cloned() else {
            return Err(InvestError::PolicyNotFound);
        };
        if !amount.is_positive() {
            return Err(InvestError::NonPositiveAmount);
        }
        let per_subwallet_amounts =
            allocate(amount, &policy).expect("stored policy is valid, amount checked");

        let investment_wallet_id = self
            .wallets
            .customer_wallets(customer)
            .expect("checked above")
            .investment
            .clone();
        let hold_txn_ids: Vec<TransactionId> = per_subwallet_amounts
            .iter()
            .map(|(subwallet_id, bucket_amount)| {
                let bucket_ref =
                    Party::subwallet(investment_wallet_id.clone(), subwallet_id.clone());
                self.create_transaction(
                    TransactionType::Hold,
                    *bucket_amount,
                    bucket_ref.clone(),
                    bucket_ref,
                )
            })
            .collect();

        let batch = self
            .create_batch(hold_txn_ids.clone())
            .expect("holds just created");
        let batch = self
            .retry_batch(batch, self.retry_policy)
            .expect("fresh batch is pending");
        match batch.status {
            BatchStatus::Completed => {
                let request = PendingRequest {
                    id: self.ids.request_id(),
                    customer: customer.clone(),
                    kind: PendingKind::Liquidation,
                    amount,
                    policy_snapshot: policy,
                    hold_txn_ids,
                    per_subwallet_amounts,
                    initiated_on: self.clock.today(),
                    status: PendingStatus::Pending,
                };
                self.pending.push(request.clone());
                Ok(request)
            }
            BatchStatus::Failed => Err(InvestError::BatchFailed(self.batch_failure_reason(&batch))),
            BatchStatus::Pending => unreachable!("retry_batch resolves the batch"),
        }
    }

    /// Settles every pending request whose earliest settlement date — the
    /// first business day strictly after initiation — has arrived. Each
    /// request settles as one atomic batch of transfers-from-hold; a failed
    /// batch leaves the request pending for a later run.
    pub fn settle(&mut self, as_of: NaiveDate) -> SettlementRun {
        let due: Vec<usize> = self
            .pending
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                r.status == PendingStatus::Pending
                    && self.calendar.next_business_day(r.initiated_on) <= as_of
            })
            .map(|(i, _)| i)
            .collect();

        let mut run = SettlementRun::default();
        for index in due {
            let request = self.pending[index].clone();
            let customer_wallets = self
                .wallets
                .customer_wallets(&request.customer)
                .expect("pending request references existing customer");
            let rm_wallet_id = customer_wallets.real_money.clone();
            let investment_wallet_id = customer_wallets.investment.clone();
            let rm_ref = {
                let wallet = self.wallets.wallet(&rm_wallet_id).expect("wallet exists");
                Party::subwallet(rm_wallet_id.clone(), wallet.single_subwallet().id.clone())
            };

            let transfer_ids: Vec<TransactionId> = request
                .per_subwallet_amounts
                .iter()
                .map(|(subwallet_id, bucket_amount)| {
                    let bucket_ref =
                        Party::subwallet(investment_wallet_id.clone(), subwallet_id.clone());
                    let (originator, beneficiary) = match request.kind {
                        PendingKind::Investment => (rm_ref.clone(), bucket_ref),
                        PendingKind::Liquidation => (bucket_ref, rm_ref.clone()),
                    };
                    self.create_transaction(
                        TransactionType::TransferFromHold,
                        *bucket_amount,
                        originator,
                        beneficiary,
                    )
                })
                .collect();

            let batch = self
                .create_batch(transfer_ids)
                .expect("transfers just created");
            let batch: Batch = self
                .retry_batch(batch, self.retry_policy)
                .expect("fresh batch is pending");
            match batch.status {
                BatchStatus::Completed => {
                    self.pending[index].status = PendingStatus::Settled;
                    run.settled.push(self.pending[index].clone());
                }
                BatchStatus::Failed => {
                    run.failed
                        .push((request.id.clone(), self.batch_failure_reason(&batch)));
                }
                BatchStatus::Pending => unreachable!("retry_batch resolves the batch"),
            }
        }
        run
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn policy_of(pairs: &[(&str, u32)]) -> InvestmentPolicy {
        InvestmentPolicy {
            customer: CustomerId::from("c"),
            allocations: pairs
                .iter()
                .map(|(id, bp)| (SubwalletId::from(*id), *bp))
                .collect(),
        }
    }

    #[test]
    fn next_business_day_rolls_over_weekends() {
        let cal = BusinessCalendar::new();
        // Friday 2025-01-03 -> Monday 2025-01-06
        assert_eq!(cal.next_business_day(date(2025, 1, 3)), date(2025, 1, 6));
        // Monday -> Tuesday
        assert_eq!(cal.next_business_day(date(2025, 1, 6)), date(2025, 1, 7));
        // Saturday -> Monday
        assert_eq!(cal.next_business_day(date(2025, 1, 4)), date(2025, 1, 6));
    }

    #[test]
    fn next_business_day_skips_holidays() {
        let cal = BusinessCalendar::with_holidays([date(2025, 1, 6)]);
        // Friday with Monday as a holiday -> Tuesday
        assert_eq!(cal.next_business_day(date(2025, 1, 3)), date(2025, 1, 7));
        assert!(!cal.is_business_day(date(2025, 1, 6)));
    }

    #[test]
    fn allocate_exact_division() {
        let policy = policy_of(&[("a-stocks", 5_000), ("b-realEstate", 3_000), ("c-bonds", 1_500), ("d-crypto", 500)]);
        let split = allocate(Money::from_minor(10_000), &policy).unwrap();
        let get = |id: &str| split[&SubwalletId::from(id)].minor_units();
        assert_eq!(get("a-stocks"), 5_000);
        assert_eq!(get("b-realEstate"), 3_000);
        assert_eq!(get("c-bonds"), 1_500);
        assert_eq!(get("d-crypto"), 500);
    }

    #[test]
    fn allocate_single_bucket_and_unit_amount() {
        let policy = policy_of(&[("a", 10_000)]);
        let split = allocate(Money::from_minor(1), &policy).unwrap();
        assert_eq!(split[&SubwalletId::from("a")], Money::from_minor(1));
        assert_eq!(split.len(), 1);
    }

    #[test]
    fn allocate_largest_remainder() {
        // exact shares: 33.33, 33.33, 33.34 -> remainders 3300, 3300, 3400
        let policy = policy_of(&[("a", 3_333), ("b", 3_333), ("c", 3_334)]);
        let split = allocate(Money::from_minor(100), &policy).unwrap();
        assert_eq!(split[&SubwalletId::from("a")], Money::from_minor(33));
        assert_eq!(split[&SubwalletId::from("b")], Money::from_minor(33));
        assert_eq!(split[&SubwalletId::from("c")], Money::from_minor(34));
    }

    #[test]
    fn allocate_ties_break_by_ascending_id() {
        // 1 unit across two equal buckets: both remainders 5000, "a" wins
        let policy = policy_of(&[("b", 5_000), ("a", 5_000)]);
        let split = allocate(Money::from_minor(1), &policy).unwrap();
        assert_eq!(split.get(&SubwalletId::from("a")), Some(&Money::from_minor(1)));
        assert_eq!(split.get(&SubwalletId::from("b")), None);
    }

    #[test]
    fn allocate_omits_zero_buckets_and_rejects_bad_input() {
        let policy = policy_of(&[("a", 0), ("b", 10_000)]);
        let split = allocate(Money::from_minor(50), &policy).unwrap();
        assert!(!split.contains_key(&SubwalletId::from("a")));
        assert_eq!(split[&SubwalletId::from("b")], Money::from_minor(50));

        assert_eq!(
            allocate(Money::ZERO, &policy),
            Err(AllocationError::NonPositiveAmount)
        );
        let bad = policy_of(&[("a", 9_999)]);
        assert_eq!(
            allocate(Money::from_minor(10), &bad),
            Err(AllocationError::InvalidPolicy { actual_sum: 9_999 })
        );
    }
}
