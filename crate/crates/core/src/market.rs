//! The market as seen under a frozen pacing profile: per-item paced-value
//! and highest-competitor distributions, shared read-only by every
//! buyer's dual problem and by the bid oracles.

use crate::auctions::{bid_oracle, AuctionError, AuctionFormat};
use crate::dist::{highest_competitor_distribution, paced_value_distribution, ValueDistribution};
use crate::dual::{DualItemView, DualProblem};
use crate::instance::{AuctionInstance, PacingProfile};

pub struct PacedMarket<'a> {
    instance: &'a AuctionInstance,
    profile: &'a PacingProfile,
    /// Raw values `w^T alpha`, indexed `[buyer][item]`.
    raw_values: Vec<Vec<f64>>,
    lambdas: Vec<ValueDistribution>,
    highest: Vec<ValueDistribution>,
}

impl<'a> PacedMarket<'a> {
    pub fn new(instance: &'a AuctionInstance, profile: &'a PacingProfile) -> PacedMarket<'a> {
        profile
            .validate(instance)
            .expect("pacing profile must be valid for the instance");
        let raw_values: Vec<Vec<f64>> = (0..instance.buyers().len())
            .map(|b| {
                (0..instance.items().len())
                    .map(|i| instance.value_of(b, i))
                    .collect()
            })
            .collect();
        let lambdas: Vec<ValueDistribution> = (0..instance.items().len())
            .map(|i| paced_value_distribution(instance, profile, i))
            .collect();
        let highest = lambdas
            .iter()
            .map(|lam| highest_competitor_distribution(lam, instance.n()))
            .collect();
        PacedMarket {
            instance,
            profile,
            raw_values,
            lambdas,
            highest,
        }
    }

    pub fn instance(&self) -> &AuctionInstance {
        self.instance
    }

    pub fn profile(&self) -> &PacingProfile {
        self.profile
    }

    /// Paced-value distribution for one item.
    pub fn lambda(&self, item: usize) -> &ValueDistribution {
        &self.lambdas[item]
    }

    /// Highest-competitor distribution for one item.
    pub fn highest(&self, item: usize) -> &ValueDistribution {
        &self.highest[item]
    }

    pub fn paced_value_of(&self, buyer: usize, item: usize) -> f64 {
        self.raw_values[buyer][item] / (1.0 + self.profile.multipliers[buyer])
    }

    /// The dual problem `buyer` faces against this market.
    pub fn dual_problem(&self, buyer: usize) -> DualProblem<'_> {
        let items = self
            .instance
            .items()
            .iter()
            .enumerate()
            .map(|(i, item)| DualItemView {
                probability: item.probability,
                reserve: item.reserve,
                value: self.raw_values[buyer][i],
                highest: &self.highest[i],
            })
            .collect();
        DualProblem::new(items, self.instance.buyers()[buyer].budget, self.instance.t_max())
    }

    /// Equilibrium bid of `buyer` on `item`: the format's bid oracle
    /// applied to the paced value against this market's `H`.
    pub fn equilibrium_bid(
        &self,
        buyer: usize,
        item: usize,
        format: AuctionFormat,
    ) -> Result<f64, AuctionError> {
        let reserve = self.instance.items()[item].reserve;
        if format == AuctionFormat::AllPay && reserve > 0.0 {
            return Err(AuctionError::AllPayWithReserve { item, reserve });
        }
        let x = self.paced_value_of(buyer, item);
        Ok(bid_oracle(format, &self.highest[item], reserve, x))
    }
}
