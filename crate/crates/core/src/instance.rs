//! Discretized auction instances: item atoms, buyer atoms, validation.
//!
//! An instance is a finite market: item types with probabilities and
//! reserves, buyer types with weights and budgets, and `n` bidders drawn
//! i.i.d. from the buyer distribution per auction. Validation derives the
//! budget floor `b_min` and the value bound `omega`, which together fix
//! the dual search box `[0, omega / b_min]` for pacing multipliers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Probability sums may be off by at most this much before rejection.
pub const PROB_SUM_TOL: f64 = 1e-9;
/// Below this the sum is treated as exactly one and left untouched,
/// which keeps validation idempotent bit-for-bit.
const PROB_SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance needs at least 2 bidders per auction, got {0}")]
    BidderCount(usize),
    #[error("feature dimension must be at least 1")]
    ZeroDimension,
    #[error("empty {0} list")]
    EmptyAtoms(&'static str),
    #[error("dimension mismatch: {kind} atom {index} has {got} entries, instance d = {want}")]
    DimensionMismatch {
        kind: &'static str,
        index: usize,
        got: usize,
        want: usize,
    },
    #[error("item atom {0}: features must be nonnegative and finite with at least one positive entry")]
    BadFeatures(usize),
    #[error("item atom {0}: reserve must be nonnegative and finite")]
    BadReserve(usize),
    #[error("buyer atom {0}: weights must be nonnegative and finite with at least one positive entry")]
    BadWeights(usize),
    #[error("buyer atom {index}: budget floor violated, budget must be strictly positive (got {budget})")]
    BudgetFloor { index: usize, budget: f64 },
    #[error("{kind} atom {index}: probability must lie in (0, 1] (got {probability})")]
    BadProbability {
        kind: &'static str,
        index: usize,
        probability: f64,
    },
    #[error("{kind} probability mass sums to {sum}, more than {PROB_SUM_TOL} away from 1")]
    ProbabilityMass { kind: &'static str, sum: f64 },
    #[error("omega must be positive: some buyer must value some item")]
    ZeroOmega,
    #[error("arc generator: count must be at least 1, got {0}")]
    ArcCount(usize),
    #[error("arc generator: need 1 <= a < b, got a = {a}, b = {b}")]
    ArcRange { a: f64, b: f64 },
    #[error("pacing profile has {got} multipliers, instance has {want} buyer atoms")]
    ProfileLength { got: usize, want: usize },
    #[error("pacing profile entry {index} = {value} outside [0, {max}]")]
    ProfileRange { index: usize, value: f64, max: f64 },
}

/// An item type: context vector, sampling probability and reserve price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemAtom {
    pub features: Vec<f64>,
    pub probability: f64,
    pub reserve: f64,
}

/// A buyer type: weight vector, budget and sampling probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuyerAtom {
    pub weights: Vec<f64>,
    pub budget: f64,
    pub probability: f64,
}

/// On-disk instance document, prior to validation.
///
/// Field layout matches the instance JSON file:
/// `{n, d, items: [{features, probability, reserve}], buyers: [{weights, budget, probability}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInstance {
    pub n: usize,
    pub d: usize,
    pub items: Vec<ItemAtom>,
    pub buyers: Vec<BuyerAtom>,
}

/// A validated instance with derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionInstance {
    n: usize,
    d: usize,
    items: Vec<ItemAtom>,
    buyers: Vec<BuyerAtom>,
    b_min: f64,
    omega: f64,
}

impl AuctionInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn items(&self) -> &[ItemAtom] {
        &self.items
    }

    pub fn buyers(&self) -> &[BuyerAtom] {
        &self.buyers
    }

    /// Smallest budget across buyer atoms.
    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    /// Largest value `w^T alpha` over all (buyer, item) pairs.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Upper end of the dual search box, `omega / b_min`.
    pub fn t_max(&self) -> f64 {
        self.omega / self.b_min
    }

    /// Raw value of buyer `b` for item `i`, summed in ascending index order.
    pub fn value_of(&self, buyer: usize, item: usize) -> f64 {
        dot(&self.buyers[buyer].weights, &self.items[item].features)
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            n: self.n,
            d: self.d,
            items: self.items.clone(),
            buyers: self.buyers.clone(),
        }
    }

    /// Non-fatal oddities worth surfacing to a user.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.d == 1 {
            out.push(
                "d = 1 instance: single-feature markets are degenerate (all values are scalar \
                 multiples of one another); results are computed but structurally uninteresting"
                    .to_string(),
            );
        }
        out
    }
}

impl Serialize for AuctionInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AuctionInstance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawInstance::deserialize(deserializer)?;
        validate_instance(raw).map_err(serde::de::Error::custom)
    }
}

fn dot(w: &[f64], a: &[f64]) -> f64 {
    assert_eq!(w.len(), a.len(), "dimension mismatch in inner product");
    let mut sum = 0.0;
    for i in 0..w.len() {
        sum += w[i] * a[i];
    }
    sum
}

fn checked_mass(kind: &'static str, probs: &mut [f64]) -> Result<(), InstanceError> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(InstanceError::ProbabilityMass { kind, sum });
    }
    if (sum - 1.0).abs() > PROB_SNAP_TOL {
        for p in probs.iter_mut() {
            *p /= sum;
        }
    }
    Ok(())
}

/// Validate a raw description and derive `b_min` and `omega`.
///
/// Probabilities within `1e-9` of summing to one are renormalized; sums
/// further out are rejected. Weight vectors may contain zero entries (a
/// buyer may ignore a feature entirely) but not be all-zero.
pub fn validate_instance(raw: RawInstance) -> Result<AuctionInstance, InstanceError> {
    let RawInstance {
        n,
        d,
        mut items,
        mut buyers,
    } = raw;
    if n < 2 {
        return Err(InstanceError::BidderCount(n));
    }
    if d == 0 {
        return Err(InstanceError::ZeroDimension);
    }
    if items.is_empty() {
        return Err(InstanceError::EmptyAtoms("items"));
    }
    if buyers.is_empty() {
        return Err(InstanceError::EmptyAtoms("buyers"));
    }

    for (i, item) in items.iter().enumerate() {
        if item.features.len() != d {
            return Err(InstanceError::DimensionMismatch {
                kind: "item",
                index: i,
                got: item.features.len(),
                want: d,
            });
        }
        let ok = item.features.iter().all(|&f| f.is_finite() && f >= 0.0)
            && item.features.iter().any(|&f| f > 0.0);
        if !ok {
            return Err(InstanceError::BadFeatures(i));
        }
        if !item.reserve.is_finite() || item.reserve < 0.0 {
            return Err(InstanceError::BadReserve(i));
        }
        if !(item.probability > 0.0 && item.probability <= 1.0) {
            return Err(InstanceError::BadProbability {
                kind: "item",
                index: i,
                probability: item.probability,
            });
        }
    }
    for (i, buyer) in buyers.iter().enumerate() {
        if buyer.weights.len() != d {
            return Err(InstanceError::DimensionMismatch {
                kind: "buyer",
                index: i,
                got: buyer.weights.len(),
                want: d,
            });
        }
        let ok = buyer.weights.iter().all(|&w| w.is_finite() && w >= 0.0)
            && buyer.weights.iter().any(|&w| w > 0.0);
        if !ok {
            return Err(InstanceError::BadWeights(i));
        }
        if !(buyer.budget.is_finite() && buyer.budget > 0.0) {
            return Err(InstanceError::BudgetFloor {
                index: i,
                budget: buyer.budget,
            });
        }
        if !(buyer.probability > 0.0 && buyer.probability <= 1.0) {
            return Err(InstanceError::BadProbability {
                kind: "buyer",
                index: i,
                probability: buyer.probability,
            });
        }
    }

    {
        let mut ip: Vec<f64> = items.iter().map(|a| a.probability).collect();
        checked_mass("item", &mut ip)?;
        for (a, p) in items.iter_mut().zip(ip) {
            a.probability = p;
        }
        let mut bp: Vec<f64> = buyers.iter().map(|a| a.probability).collect();
        checked_mass("buyer", &mut bp)?;
        for (a, p) in buyers.iter_mut().zip(bp) {
            a.probability = p;
        }
    }

    let b_min = buyers.iter().map(|b| b.budget).fold(f64::INFINITY, f64::min);
    let mut omega: f64 = 0.0;
    for buyer in &buyers {
        for item in &items {
            omega = omega.max(dot(&buyer.weights, &item.features));
        }
    }
    if omega <= 0.0 {
        return Err(InstanceError::ZeroOmega);
    }

    Ok(AuctionInstance {
        n,
        d,
        items,
        buyers,
        b_min,
        omega,
    })
}

/// One pacing multiplier per buyer atom, each in `[0, omega / b_min]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacingProfile {
    pub multipliers: Vec<f64>,
}

impl PacingProfile {
    pub fn zeros(len: usize) -> Self {
        PacingProfile {
            multipliers: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.multipliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multipliers.is_empty()
    }

    pub fn validate(&self, instance: &AuctionInstance) -> Result<(), InstanceError> {
        if self.multipliers.len() != instance.buyers().len() {
            return Err(InstanceError::ProfileLength {
                got: self.multipliers.len(),
                want: instance.buyers().len(),
            });
        }
        let max = instance.t_max();
        for (i, &t) in self.multipliers.iter().enumerate() {
            if !(t.is_finite() && t >= 0.0 && t <= max) {
                return Err(InstanceError::ProfileRange {
                    index: i,
                    value: t,
                    max,
                });
            }
        }
        Ok(())
    }
}
