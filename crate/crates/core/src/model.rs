//! Lattice calibration, node prices, quoted bid/ask prices, payoff
//! processes and the seller's and buyer's expense functions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pwl::PwlFunction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("node ({t}, {l}) is outside a lattice of {steps} steps")]
    NodeOutOfRange { t: usize, l: usize, steps: usize },
    #[error("bull spread needs long strike < short strike, got {long} and {short}")]
    SpreadStrikes { long: f64, short: f64 },
}

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), ModelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value, reason })
    }
}

/// Calibrated per-step lattice constants plus the inputs they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub s0: f64,
    pub sigma: f64,
    pub rate: f64,
    pub expiry: f64,
    pub steps: usize,
    pub cost_rate: f64,
    /// Up factor `exp(sigma * sqrt(expiry / steps))`.
    pub u: f64,
    /// Down factor `1 / u`.
    pub d: f64,
    /// One-step cash growth `exp(rate * expiry / steps)`.
    pub r: f64,
    log_u: f64,
}

pub fn calibrate(
    s0: f64,
    sigma: f64,
    rate: f64,
    expiry: f64,
    steps: usize,
    cost_rate: f64,
) -> Result<ModelParams, ModelError> {
    check("s0", s0, s0 > 0.0, "must be positive")?;
    check("sigma", sigma, sigma > 0.0, "must be positive")?;
    check("rate", rate, true, "must be finite")?;
    check("expiry", expiry, expiry > 0.0, "must be positive")?;
    check("steps", steps as f64, steps >= 1, "must be at least 1")?;
    check(
        "cost_rate",
        cost_rate,
        (0.0..1.0).contains(&cost_rate),
        "must lie in [0, 1)",
    )?;
    let dt = expiry / steps as f64;
    let log_u = sigma * dt.sqrt();
    let u = log_u.exp();
    Ok(ModelParams {
        s0,
        sigma,
        rate,
        expiry,
        steps,
        cost_rate,
        u,
        d: 1.0 / u,
        r: (rate * dt).exp(),
        log_u,
    })
}

impl ModelParams {
    /// Leaf level of the costs-mode lattice (one step past expiry).
    pub fn costs_leaf_level(&self) -> usize {
        self.steps + 1
    }

    /// Stock price at node `(t, l)`, where `l` counts down-moves.
    pub fn node_stock_price(&self, t: usize, l: usize) -> Result<f64, ModelError> {
        if t > self.steps + 1 || l > t {
            return Err(ModelError::NodeOutOfRange {
                t,
                l,
                steps: self.steps,
            });
        }
        Ok(self.price_at_offset(t as i64 - 2 * l as i64))
    }

    /// `s0 * u^j`, the price `j` net up-moves from the root.
    fn price_at_offset(&self, j: i64) -> f64 {
        self.s0 * (self.log_u * j as f64).exp()
    }

    /// Every node price of the costs-mode lattice, indexed by net up-moves.
    pub fn price_ladder(&self) -> PriceLadder {
        let top = self.steps as i64 + 1;
        PriceLadder {
            offset: top,
            prices: (-top..=top).map(|j| self.price_at_offset(j)).collect(),
        }
    }

    pub fn quoted(&self, t: usize, price: f64) -> QuotedPrices {
        if t == 0 {
            QuotedPrices {
                ask: price,
                bid: price,
                mid: price,
            }
        } else {
            QuotedPrices {
                ask: (1.0 + self.cost_rate) * price,
                bid: (1.0 - self.cost_rate) * price,
                mid: price,
            }
        }
    }
}

/// Precomputed node prices; `price(t, l)` equals `node_stock_price(t, l)` bit for bit.
#[derive(Debug, Clone)]
pub struct PriceLadder {
    offset: i64,
    prices: Vec<f64>,
}

impl PriceLadder {
    #[inline]
    pub fn price(&self, t: usize, l: usize) -> f64 {
        self.prices[(t as i64 - 2 * l as i64 + self.offset) as usize]
    }
}

/// Stock prices a trader faces at a node: buy at `ask`, sell at `bid`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotedPrices {
    pub ask: f64,
    pub bid: f64,
    pub mid: f64,
}

/// Payoff process `(xi_t, zeta_t)`: cash and stock delivered on exercise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PayoffSpec {
    /// Holder sells one share for the strike.
    PutPhysical { strike: f64 },
    /// Holder buys one share for the strike.
    CallPhysical { strike: f64 },
    /// `(S - long)^+ - (S - short)^+` settled in cash.
    BullSpreadCash { long_strike: f64, short_strike: f64 },
    /// Arbitrary piecewise-linear cash payoff of the stock price.
    CustomCash { payoff: PwlFunction },
}

impl PayoffSpec {
    pub fn put(strike: f64) -> Self {
        PayoffSpec::PutPhysical { strike }
    }

    pub fn call(strike: f64) -> Self {
        PayoffSpec::CallPhysical { strike }
    }

    pub fn bull_spread(long_strike: f64, short_strike: f64) -> Result<Self, ModelError> {
        if long_strike.partial_cmp(&short_strike) != Some(std::cmp::Ordering::Less) {
            return Err(ModelError::SpreadStrikes {
                long: long_strike,
                short: short_strike,
            });
        }
        Ok(PayoffSpec::BullSpreadCash {
            long_strike,
            short_strike,
        })
    }

    pub fn custom(payoff: PwlFunction) -> Self {
        PayoffSpec::CustomCash { payoff }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            PayoffSpec::PutPhysical { strike } | PayoffSpec::CallPhysical { strike } => {
                check("strike", strike, true, "must be finite")
            }
            PayoffSpec::BullSpreadCash {
                long_strike,
                short_strike,
            } => Self::bull_spread(long_strike, short_strike).map(|_| ()),
            PayoffSpec::CustomCash { .. } => Ok(()),
        }
    }

    /// `(xi_t, zeta_t)` at time `t` of an `steps`-step lattice. Past expiry
    /// (`t = steps + 1`) every option pays `(0, 0)`.
    pub fn payoff(&self, t: usize, steps: usize, price: f64) -> (f64, f64) {
        if t > steps {
            return (0.0, 0.0);
        }
        match self {
            PayoffSpec::PutPhysical { strike } => (*strike, -1.0),
            PayoffSpec::CallPhysical { strike } => (-*strike, 1.0),
            PayoffSpec::BullSpreadCash { .. } | PayoffSpec::CustomCash { .. } => {
                (self.exercise_value(price), 0.0)
            }
        }
    }

    /// Scalar exercise value used without transaction costs.
    pub fn exercise_value(&self, price: f64) -> f64 {
        match self {
            PayoffSpec::PutPhysical { strike } => (strike - price).max(0.0),
            PayoffSpec::CallPhysical { strike } => (price - strike).max(0.0),
            PayoffSpec::BullSpreadCash {
                long_strike,
                short_strike,
            } => (price - long_strike).max(0.0) - (price - short_strike).max(0.0),
            PayoffSpec::CustomCash { payoff } => payoff.evaluate(price),
        }
    }
}

fn expense(cash: f64, kink: f64, q: QuotedPrices) -> PwlFunction {
    if q.ask == q.bid {
        return PwlFunction::linear(-q.ask, cash + q.ask * kink);
    }
    let value_at_zero = if 0.0 >= kink {
        cash - q.bid * (0.0 - kink)
    } else {
        cash + q.ask * (kink - 0.0)
    };
    PwlFunction::from_sorted(&[kink], &[-q.ask, -q.bid], value_at_zero)
}

/// Seller's expense `y -> xi + (y - zeta)^- ask - (y - zeta)^+ bid`.
pub fn seller_expense(xi: f64, zeta: f64, q: QuotedPrices) -> PwlFunction {
    expense(xi, zeta, q)
}

/// Buyer's expense `y -> -xi + (y + zeta)^- ask - (y + zeta)^+ bid`.
pub fn buyer_expense(xi: f64, zeta: f64, q: QuotedPrices) -> PwlFunction {
    expense(-xi, -zeta, q)
}
