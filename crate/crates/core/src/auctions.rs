//! Standard-auction bid oracles, interim payments and utilities, and the
//! Monte Carlo revenue simulator.
//!
//! All three formats share the interim expected payment
//! `m(x) = 1{x >= r} (x·H(x) − ∫_r^x H)`, which is what makes revenue
//! equivalence checkable: analytic per-type payments coincide across
//! formats by construction, and the simulator provides the independent
//! stochastic check.

use crate::dist::{sigma, ValueDistribution};
use crate::instance::{AuctionInstance, PacingProfile};
use crate::market::PacedMarket;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AuctionError {
    #[error("all-pay format requires zero reserves, item {item} has reserve {reserve}")]
    AllPayWithReserve { item: usize, reserve: f64 },
    #[error("simulation needs at least one sample")]
    NoSamples,
    #[error("revenue report needs at least one auction format")]
    NoFormats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuctionFormat {
    FirstPrice,
    SecondPrice,
    AllPay,
}

impl AuctionFormat {
    pub fn tag(&self) -> &'static str {
        match self {
            AuctionFormat::FirstPrice => "fp",
            AuctionFormat::SecondPrice => "sp",
            AuctionFormat::AllPay => "ap",
        }
    }
}

/// Symmetric-equilibrium bid at value `x` against highest competitor `H`
/// with reserve `r`.
///
/// First price bids `sigma`; second price bids truthfully; all-pay bids
/// the first-price expected payment (and requires `r = 0`).
pub fn bid_oracle(format: AuctionFormat, h: &ValueDistribution, r: f64, x: f64) -> f64 {
    match format {
        AuctionFormat::FirstPrice => sigma(h, r, x),
        AuctionFormat::SecondPrice => x,
        AuctionFormat::AllPay => {
            assert!(r == 0.0, "all-pay bid oracle requires a zero reserve");
            expected_payment(AuctionFormat::FirstPrice, h, 0.0, x)
        }
    }
}

/// Interim expected payment `m(x) = 1{x >= r} (x·H(x) − ∫_r^x H)`.
///
/// The same for every standard format; the format argument documents the
/// call site.
pub fn expected_payment(_format: AuctionFormat, h: &ValueDistribution, r: f64, x: f64) -> f64 {
    assert!(x >= 0.0);
    if x < r {
        return 0.0;
    }
    x * h.cdf(x) - h.cdf_integral(r, x)
}

/// Interim expected utility `U(x) = 1{x >= r} ∫_r^x H`.
pub fn interim_utility(h: &ValueDistribution, r: f64, x: f64) -> f64 {
    assert!(x >= 0.0);
    if x < r {
        return 0.0;
    }
    h.cdf_integral(r, x)
}

/// Monte Carlo estimate of per-auction revenue under one format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedRevenue {
    pub format: AuctionFormat,
    pub samples: u64,
    pub seed: u64,
    /// Mean revenue per auction.
    pub mean_revenue: f64,
    /// Sample standard deviation / sqrt(samples).
    pub std_error: f64,
    /// Fraction of rounds whose winning bid was shared by two or more
    /// bidders.
    pub tie_frequency: f64,
    /// Mean per-auction payment made by each buyer type.
    pub per_type_payment: Vec<f64>,
    pub per_type_se: Vec<f64>,
}

const SHARD_SIZE: u64 = 1 << 16;

#[derive(Clone)]
struct ShardAccum {
    revenue_sum: f64,
    revenue_sq_sum: f64,
    ties: u64,
    type_payment_sum: Vec<f64>,
    type_payment_sq_sum: Vec<f64>,
}

/// Simulate `samples` auctions: draw an item, draw `n` buyer types
/// i.i.d., bid through the format's oracle at paced values, award to the
/// highest bid at or above the reserve with uniform tie-breaking.
///
/// Sampling is sharded into fixed-size blocks, each driven by its own
/// ChaCha stream derived from the master seed; shards run in parallel and
/// merge in shard order, so results are identical for a given seed
/// regardless of thread count.
pub fn simulate_revenue(
    instance: &AuctionInstance,
    profile: &PacingProfile,
    format: AuctionFormat,
    samples: u64,
    seed: u64,
) -> Result<SimulatedRevenue, AuctionError> {
    if samples == 0 {
        return Err(AuctionError::NoSamples);
    }
    if format == AuctionFormat::AllPay {
        for (i, item) in instance.items().iter().enumerate() {
            if item.reserve > 0.0 {
                return Err(AuctionError::AllPayWithReserve {
                    item: i,
                    reserve: item.reserve,
                });
            }
        }
    }
    let market = PacedMarket::new(instance, profile);
    let n_types = instance.buyers().len();
    let n_items = instance.items().len();
    let n = instance.n();

    // Bids depend only on (type, item); precompute the table.
    let mut bids = vec![vec![0.0; n_items]; n_types];
    for (b, row) in bids.iter_mut().enumerate() {
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = market
                .equilibrium_bid(b, i, format)
                .expect("reserves already checked");
        }
    }
    let item_cdf = cumulative(instance.items().iter().map(|a| a.probability));
    let buyer_cdf = cumulative(instance.buyers().iter().map(|a| a.probability));
    let reserves: Vec<f64> = instance.items().iter().map(|a| a.reserve).collect();

    let shards: u64 = samples.div_ceil(SHARD_SIZE);
    let accums: Vec<ShardAccum> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let lo = shard * SHARD_SIZE;
            let hi = (lo + SHARD_SIZE).min(samples);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard + 1);
            let mut acc = ShardAccum {
                revenue_sum: 0.0,
                revenue_sq_sum: 0.0,
                ties: 0,
                type_payment_sum: vec![0.0; n_types],
                type_payment_sq_sum: vec![0.0; n_types],
            };
            let mut drawn = vec![0usize; n];
            let mut round_payment: Vec<(usize, f64)> = Vec::with_capacity(n);
            for _ in lo..hi {
                let item = draw(&item_cdf, rng.gen::<f64>());
                for slot in drawn.iter_mut() {
                    *slot = draw(&buyer_cdf, rng.gen::<f64>());
                }
                let r = reserves[item];
                let mut max_bid = f64::NEG_INFINITY;
                for &b in &drawn {
                    max_bid = max_bid.max(bids[b][item]);
                }
                let eligible = max_bid >= r;
                let mut tied = 0usize;
                if eligible {
                    for &b in &drawn {
                        if bids[b][item] == max_bid {
                            tied += 1;
                        }
                    }
                }
                if tied >= 2 {
                    acc.ties += 1;
                }
                let winner_slot = if eligible {
                    let pick = if tied > 1 { rng.gen_range(0..tied) } else { 0 };
                    let mut seen = 0usize;
                    let mut slot = usize::MAX;
                    for (s, &b) in drawn.iter().enumerate() {
                        if bids[b][item] == max_bid {
                            if seen == pick {
                                slot = s;
                                break;
                            }
                            seen += 1;
                        }
                    }
                    Some(slot)
                } else {
                    None
                };

                round_payment.clear();
                let revenue = match format {
                    AuctionFormat::FirstPrice => {
                        if let Some(slot) = winner_slot {
                            round_payment.push((drawn[slot], max_bid));
                            max_bid
                        } else {
                            0.0
                        }
                    }
                    AuctionFormat::SecondPrice => {
                        if let Some(slot) = winner_slot {
                            let mut second = f64::NEG_INFINITY;
                            for (s, &b) in drawn.iter().enumerate() {
                                if s != slot {
                                    second = second.max(bids[b][item]);
                                }
                            }
                            let payment = r.max(second);
                            round_payment.push((drawn[slot], payment));
                            payment
                        } else {
                            0.0
                        }
                    }
                    AuctionFormat::AllPay => {
                        let mut total = 0.0;
                        for &b in &drawn {
                            let bid = bids[b][item];
                            total += bid;
                            round_payment.push((b, bid));
                        }
                        total
                    }
                };
                acc.revenue_sum += revenue;
                acc.revenue_sq_sum += revenue * revenue;
                // merge duplicate types drawn in the same round before squaring
                round_payment.sort_unstable_by_key(|&(ty, _)| ty);
                let mut i = 0;
                while i < round_payment.len() {
                    let (ty, mut amount) = round_payment[i];
                    let mut j = i + 1;
                    while j < round_payment.len() && round_payment[j].0 == ty {
                        amount += round_payment[j].1;
                        j += 1;
                    }
                    acc.type_payment_sum[ty] += amount;
                    acc.type_payment_sq_sum[ty] += amount * amount;
                    i = j;
                }
            }
            acc
        })
        .collect();

    let mut revenue_sum = 0.0;
    let mut revenue_sq_sum = 0.0;
    let mut ties = 0u64;
    let mut type_sum = vec![0.0; n_types];
    let mut type_sq_sum = vec![0.0; n_types];
    for acc in accums {
        revenue_sum += acc.revenue_sum;
        revenue_sq_sum += acc.revenue_sq_sum;
        ties += acc.ties;
        for t in 0..n_types {
            type_sum[t] += acc.type_payment_sum[t];
            type_sq_sum[t] += acc.type_payment_sq_sum[t];
        }
    }
    let count = samples as f64;
    let mean = revenue_sum / count;
    let std_error = sample_se(revenue_sum, revenue_sq_sum, count);
    let per_type_payment: Vec<f64> = type_sum.iter().map(|s| s / count).collect();
    let per_type_se: Vec<f64> = type_sum
        .iter()
        .zip(&type_sq_sum)
        .map(|(&s, &sq)| sample_se(s, sq, count))
        .collect();

    Ok(SimulatedRevenue {
        format,
        samples,
        seed,
        mean_revenue: mean,
        std_error,
        tie_frequency: ties as f64 / count,
        per_type_payment,
        per_type_se,
    })
}

fn sample_se(sum: f64, sq_sum: f64, count: f64) -> f64 {
    if count < 2.0 {
        return 0.0;
    }
    let variance = ((sq_sum - sum * sum / count) / (count - 1.0)).max(0.0);
    (variance / count).sqrt()
}

fn cumulative(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        out.push(acc);
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Per-format revenue summary at a fixed pacing profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatRevenue {
    pub format: AuctionFormat,
    /// `n · g_θ · E_α[m]` per type: the analytic per-auction payment.
    pub per_type_analytic: Vec<f64>,
    pub analytic_total: f64,
    pub mc_total: f64,
    pub mc_std_error: f64,
    pub tie_frequency: f64,
    pub per_type_mc: Vec<f64>,
    pub per_type_mc_se: Vec<f64>,
    /// |mc − analytic| / std error, the headline equivalence gap.
    pub total_gap_in_se: f64,
}

/// Revenue-equivalence report: analytic per-type payments per format plus
/// Monte Carlo estimates, with discrepancy flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueReport {
    pub seed: u64,
    pub samples: u64,
    pub formats: Vec<FormatRevenue>,
    /// Largest per-type gap between any two formats' analytic payments.
    pub max_cross_format_analytic_gap: f64,
    /// Formats whose MC total sits more than three standard errors from
    /// the analytic total.
    pub flagged_formats: Vec<AuctionFormat>,
}

pub fn revenue_equivalence_report(
    instance: &AuctionInstance,
    profile: &PacingProfile,
    formats: &[AuctionFormat],
    samples: u64,
    seed: u64,
) -> Result<RevenueReport, AuctionError> {
    if formats.is_empty() {
        return Err(AuctionError::NoFormats);
    }
    let market = PacedMarket::new(instance, profile);
    let n = instance.n() as f64;

    let mut format_reports = Vec::with_capacity(formats.len());
    for &format in formats {
        let per_type_analytic: Vec<f64> = instance
            .buyers()
            .iter()
            .enumerate()
            .map(|(b, buyer)| {
                let interim: f64 = instance
                    .items()
                    .iter()
                    .enumerate()
                    .map(|(i, item)| {
                        item.probability
                            * expected_payment(
                                format,
                                market.highest(i),
                                item.reserve,
                                market.paced_value_of(b, i),
                            )
                    })
                    .sum();
                n * buyer.probability * interim
            })
            .collect();
        let analytic_total: f64 = per_type_analytic.iter().sum();
        let sim = simulate_revenue(instance, profile, format, samples, seed)?;
        let gap = if sim.std_error > 0.0 {
            (sim.mean_revenue - analytic_total).abs() / sim.std_error
        } else {
            0.0
        };
        format_reports.push(FormatRevenue {
            format,
            per_type_analytic,
            analytic_total,
            mc_total: sim.mean_revenue,
            mc_std_error: sim.std_error,
            tie_frequency: sim.tie_frequency,
            per_type_mc: sim.per_type_payment,
            per_type_mc_se: sim.per_type_se,
            total_gap_in_se: gap,
        });
    }

    let mut max_gap: f64 = 0.0;
    for a in &format_reports {
        for b in &format_reports {
            for (x, y) in a.per_type_analytic.iter().zip(&b.per_type_analytic) {
                max_gap = max_gap.max((x - y).abs());
            }
        }
    }
    let flagged = format_reports
        .iter()
        .filter(|f| f.total_gap_in_se > 3.0)
        .map(|f| f.format)
        .collect();

    Ok(RevenueReport {
        seed,
        samples,
        formats: format_reports,
        max_cross_format_analytic_gap: max_gap,
        flagged_formats: flagged,
    })
}
