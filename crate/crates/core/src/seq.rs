//! Reference sequential pricers.
//!
//! Per-node arithmetic lives in [`NodeKernel`] implementations so that the
//! sequential driver here and the parallel engine evaluate every node with
//! exactly the same floating-point operations.

use thiserror::Error;

use crate::model::{buyer_expense, seller_expense, ModelError, ModelParams, PayoffSpec, PriceLadder};
use crate::pwl::{PwlError, PwlFunction, SlopeInterval};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("at node ({t}, {l}): {source}")]
    Algebra {
        t: usize,
        l: usize,
        #[source]
        source: PwlError,
    },
    #[error("risk-neutral probability {0} outside [0, 1]; the lattice admits arbitrage")]
    Arbitrage(f64),
}

/// Per-node work of a backward induction over a recombining lattice.
///
/// Node `(t, l)` has children `(t + 1, l)` (up) and `(t + 1, l + 1)` (down).
pub trait NodeKernel: Sync {
    type Value: Clone + Default + Send + Sync;
    type Error: Send;

    /// Deepest level of the lattice; it holds `leaf_level() + 1` nodes.
    fn leaf_level(&self) -> usize;

    fn leaf(&self, l: usize) -> Result<Self::Value, Self::Error>;

    fn node(
        &self,
        t: usize,
        l: usize,
        up: &Self::Value,
        down: &Self::Value,
    ) -> Result<Self::Value, Self::Error>;
}

/// Rolls a single level array back from the leaves to the root.
pub fn backward_induction<K: NodeKernel>(kernel: &K) -> Result<K::Value, K::Error> {
    let top = kernel.leaf_level();
    let mut level = (0..=top).map(|l| kernel.leaf(l)).collect::<Result<Vec<_>, _>>()?;
    for t in (0..top).rev() {
        for l in 0..=t {
            level[l] = kernel.node(t, l, &level[l], &level[l + 1])?;
        }
        level.truncate(t + 1);
    }
    Ok(level.swap_remove(0))
}

/// Seller's and buyer's `z` functions at one node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostsPair {
    pub seller: PwlFunction,
    pub buyer: PwlFunction,
}

/// Ask and bid price of an option.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceQuote {
    pub ask: f64,
    pub bid: f64,
}

impl CostsPair {
    pub fn quote(&self) -> PriceQuote {
        PriceQuote {
            ask: self.seller.value_at_zero(),
            bid: 0.0 - self.buyer.value_at_zero(),
        }
    }
}

fn costs_leaf(m: &ModelParams, t: usize, price: f64) -> CostsPair {
    let q = m.quoted(t, price);
    CostsPair {
        seller: seller_expense(0.0, 0.0, q),
        buyer: buyer_expense(0.0, 0.0, q),
    }
}

fn costs_step(
    m: &ModelParams,
    spec: &PayoffSpec,
    t: usize,
    l: usize,
    price: f64,
    upper: &CostsPair,
    lower: &CostsPair,
) -> Result<CostsPair, PricingError> {
    let algebra = |source| PricingError::Algebra { t, l, source };
    let q = m.quoted(t, price);
    let (xi, zeta) = spec.payoff(t, m.steps, price);
    let cone = SlopeInterval::new(-q.ask, -q.bid).map_err(algebra)?;
    let discount = 1.0 / m.r;

    let continuation = |up: &PwlFunction, down: &PwlFunction| {
        up.pointwise_max(down)
            .scale(discount)
            .and_then(|w| w.restrict_slopes(cone))
            .map_err(algebra)
    };
    let seller_v = continuation(&upper.seller, &lower.seller)?;
    let buyer_v = continuation(&upper.buyer, &lower.buyer)?;
    Ok(CostsPair {
        seller: seller_expense(xi, zeta, q).pointwise_max(&seller_v),
        buyer: buyer_expense(xi, zeta, q).pointwise_min(&buyer_v),
    })
}

/// One backward step with transaction costs at node `(t, l)`, given the
/// children's values at `(t + 1, l)` and `(t + 1, l + 1)`.
pub fn step_back_costs(
    m: &ModelParams,
    spec: &PayoffSpec,
    t: usize,
    l: usize,
    upper: &CostsPair,
    lower: &CostsPair,
) -> Result<CostsPair, PricingError> {
    let price = m.node_stock_price(t, l)?;
    costs_step(m, spec, t, l, price, upper, lower)
}

/// Transaction-cost kernel over levels `steps + 1 ..= 0`.
pub struct CostsKernel<'a> {
    model: &'a ModelParams,
    spec: &'a PayoffSpec,
    ladder: PriceLadder,
}

impl<'a> CostsKernel<'a> {
    pub fn new(model: &'a ModelParams, spec: &'a PayoffSpec) -> Result<Self, PricingError> {
        spec.validate()?;
        Ok(CostsKernel {
            model,
            spec,
            ladder: model.price_ladder(),
        })
    }
}

impl NodeKernel for CostsKernel<'_> {
    type Value = CostsPair;
    type Error = PricingError;

    fn leaf_level(&self) -> usize {
        self.model.costs_leaf_level()
    }

    fn leaf(&self, l: usize) -> Result<CostsPair, PricingError> {
        let t = self.leaf_level();
        Ok(costs_leaf(self.model, t, self.ladder.price(t, l)))
    }

    #[inline]
    fn node(&self, t: usize, l: usize, up: &CostsPair, down: &CostsPair) -> Result<CostsPair, PricingError> {
        costs_step(self.model, self.spec, t, l, self.ladder.price(t, l), up, down)
    }
}

/// Ask and bid prices with proportional transaction costs.
pub fn price_with_costs(m: &ModelParams, spec: &PayoffSpec) -> Result<PriceQuote, PricingError> {
    let kernel = CostsKernel::new(m, spec)?;
    Ok(backward_induction(&kernel)?.quote())
}

pub fn risk_neutral_probability(m: &ModelParams) -> Result<f64, PricingError> {
    let p = (m.r - m.d) / (m.u - m.d);
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(PricingError::Arbitrage(p))
    }
}

/// Scalar kernel without transaction costs over levels `steps ..= 0`.
pub struct FrictionlessKernel<'a> {
    steps: usize,
    spec: &'a PayoffSpec,
    ladder: PriceLadder,
    up_weight: f64,
    down_weight: f64,
    early_exercise: bool,
}

impl<'a> FrictionlessKernel<'a> {
    pub fn new(m: &ModelParams, spec: &'a PayoffSpec) -> Result<Self, PricingError> {
        Self::with_exercise(m, spec, true)
    }

    /// European variant: exercise only at expiry.
    pub fn european(m: &ModelParams, spec: &'a PayoffSpec) -> Result<Self, PricingError> {
        Self::with_exercise(m, spec, false)
    }

    fn with_exercise(m: &ModelParams, spec: &'a PayoffSpec, early_exercise: bool) -> Result<Self, PricingError> {
        spec.validate()?;
        let p = risk_neutral_probability(m)?;
        Ok(FrictionlessKernel {
            steps: m.steps,
            spec,
            ladder: m.price_ladder(),
            up_weight: p / m.r,
            down_weight: (1.0 - p) / m.r,
            early_exercise,
        })
    }
}

impl NodeKernel for FrictionlessKernel<'_> {
    type Value = f64;
    type Error = PricingError;

    fn leaf_level(&self) -> usize {
        self.steps
    }

    fn leaf(&self, l: usize) -> Result<f64, PricingError> {
        Ok(self.spec.exercise_value(self.ladder.price(self.steps, l)))
    }

    #[inline]
    fn node(&self, t: usize, l: usize, up: &f64, down: &f64) -> Result<f64, PricingError> {
        let continuation = self.up_weight * up + self.down_weight * down;
        if self.early_exercise {
            Ok(self.spec.exercise_value(self.ladder.price(t, l)).max(continuation))
        } else {
            Ok(continuation)
        }
    }
}

/// American option price without transaction costs (`cost_rate` is ignored).
pub fn frictionless_price(m: &ModelParams, spec: &PayoffSpec) -> Result<f64, PricingError> {
    backward_induction(&FrictionlessKernel::new(m, spec)?)
}

pub fn european_price(m: &ModelParams, spec: &PayoffSpec) -> Result<f64, PricingError> {
    backward_induction(&FrictionlessKernel::european(m, spec)?)
}
