//! Funding-structure rules and cost-increase sharing.

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::{Finding, FindingStatus};
use crate::model::{Currency, ModelError, Money, PriceBasis};

const LOCAL_SHARE_PCT: u32 = 10;
const LIGHT_RAIL_LOCAL_SHARE_PCT: u32 = 25;

/// How a scheme's gross cost is financed.
#[derive(Debug, Clone, PartialEq)]
pub struct FundingStructure {
    gross_cost: Money,
    local_contribution: Money,
    private_capital_no_guarantee: Money,
    pub is_light_rail: bool,
    pub bidder_bears_overrun_risk: bool,
    /// Design-build-finance-operate-maintain style bundling.
    pub contract_bundled: bool,
}

/// JSON form of [`FundingStructure`]; amounts share one currency and basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FundingDocument {
    pub currency: String,
    pub price_basis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_year: Option<i32>,
    pub gross_cost: Decimal,
    pub local_contribution: Decimal,
    pub private_capital_no_guarantee: Decimal,
    #[serde(default)]
    pub is_light_rail: bool,
    #[serde(default)]
    pub bidder_bears_overrun_risk: bool,
    #[serde(default)]
    pub contract_bundled: bool,
}

impl FundingStructure {
    pub fn new(
        gross_cost: Money,
        local_contribution: Money,
        private_capital_no_guarantee: Money,
    ) -> Result<Self, ModelError> {
        for (name, part) in [
            ("local_contribution", &local_contribution),
            (
                "private_capital_no_guarantee",
                &private_capital_no_guarantee,
            ),
        ] {
            if part.cmp_amount(&gross_cost)?.is_gt() {
                return Err(ModelError::Invalid(format!(
                    "{name} {part} exceeds gross cost {gross_cost}"
                )));
            }
        }
        Ok(FundingStructure {
            gross_cost,
            local_contribution,
            private_capital_no_guarantee,
            is_light_rail: false,
            bidder_bears_overrun_risk: false,
            contract_bundled: false,
        })
    }

    pub fn from_document(doc: &FundingDocument) -> Result<Self, ModelError> {
        let currency = Currency::new(&doc.currency)?;
        let basis = PriceBasis::from_parts(&doc.price_basis, doc.base_year)?;
        let money = |amount| Money::new(amount, currency.clone(), basis);
        let mut s = FundingStructure::new(
            money(doc.gross_cost)?,
            money(doc.local_contribution)?,
            money(doc.private_capital_no_guarantee)?,
        )?;
        s.is_light_rail = doc.is_light_rail;
        s.bidder_bears_overrun_risk = doc.bidder_bears_overrun_risk;
        s.contract_bundled = doc.contract_bundled;
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: FundingDocument =
            serde_json::from_str(text).map_err(|e| ModelError::Invalid(e.to_string()))?;
        FundingStructure::from_document(&doc)
    }

    pub fn gross_cost(&self) -> &Money {
        &self.gross_cost
    }
    pub fn local_contribution(&self) -> &Money {
        &self.local_contribution
    }
    pub fn private_capital_no_guarantee(&self) -> &Money {
        &self.private_capital_no_guarantee
    }
}

pub const RULE_LOCAL_CONTRIBUTION: &str = "R1-local-contribution";
pub const RULE_PRIVATE_CAPITAL: &str = "R2-private-capital";
pub const RULE_RISK_TRANSFER: &str = "R3-bidder-risk-transfer";
pub const RULE_BUNDLING: &str = "R4-contract-bundling";

/// Evaluates R1..R4. Thresholds are inclusive.
pub fn check_funding(s: &FundingStructure) -> Vec<Finding> {
    let gross = s.gross_cost.amount();
    let pct = if s.is_light_rail {
        LIGHT_RAIL_LOCAL_SHARE_PCT
    } else {
        LOCAL_SHARE_PCT
    };
    let local = s.local_contribution.amount();
    let required_local = gross * Decimal::from(pct) / Decimal::from(100);
    let private = s.private_capital_no_guarantee.amount();
    vec![
        Finding::check(
            RULE_LOCAL_CONTRIBUTION,
            local * Decimal::from(100) >= gross * Decimal::from(pct),
            format!(
                "local contribution {local} vs required {pct}% of gross = {required_local}{}",
                if s.is_light_rail { " (light rail)" } else { "" }
            ),
        ),
        Finding::check(
            RULE_PRIVATE_CAPITAL,
            private * Decimal::from(3) >= gross,
            format!(
                "private capital without sovereign guarantee {private} vs one third of gross = {}",
                (gross / Decimal::from(3)).round_dp(4)
            ),
        ),
        Finding::check(
            RULE_RISK_TRANSFER,
            s.bidder_bears_overrun_risk,
            if s.bidder_bears_overrun_risk {
                "bidder carries cost-overrun risk"
            } else {
                "cost-overrun risk stays with the public sponsor"
            },
        ),
        Finding::new(
            RULE_BUNDLING,
            FindingStatus::Info,
            if s.contract_bundled {
                "design, build, finance, operation and maintenance bundled in one contract"
            } else {
                "delivery not bundled into a single contract"
            },
        ),
    ]
}

/// A cost increase arising during implementation.
#[derive(Debug, Clone, PartialEq)]
pub struct CostIncreaseEvent {
    pub amount: Money,
    pub cumulative_prior_increases: Money,
    pub risk_allowance: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Apportionment {
    #[serde(serialize_with = "amount_only")]
    pub local_share: Money,
    #[serde(serialize_with = "amount_only")]
    pub funder_share: Money,
    /// Part of the increase still covered by the risk allowance.
    #[serde(serialize_with = "amount_only")]
    pub within_allowance: Money,
    #[serde(serialize_with = "amount_only")]
    pub excess: Money,
    pub requires_new_approval: bool,
}

fn amount_only<S: serde::Serializer>(m: &Money, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&m.amount(), s)
}

/// Splits an increase: the part within the remaining risk allowance is
/// shared 50/50 with no new approval; anything beyond it is funded locally
/// and needs new approval.
pub fn apportion_cost_increase(event: &CostIncreaseEvent) -> Result<Apportionment, ModelError> {
    let amount = &event.amount;
    let remaining = if event
        .cumulative_prior_increases
        .cmp_amount(&event.risk_allowance)?
        .is_ge()
    {
        amount.with_amount(Decimal::ZERO)?
    } else {
        event
            .risk_allowance
            .checked_sub(&event.cumulative_prior_increases)?
    };
    let within = amount.min(&remaining)?;
    let excess = amount.checked_sub(&within)?;
    let funder_share = within.with_amount(within.amount() / Decimal::TWO)?;
    let local_share = within.checked_sub(&funder_share)?.checked_add(&excess)?;
    debug_assert_eq!(
        local_share.amount() + funder_share.amount(),
        amount.amount()
    );
    Ok(Apportionment {
        requires_new_approval: !excess.is_zero(),
        local_share,
        funder_share,
        within_allowance: within,
        excess,
    })
}
