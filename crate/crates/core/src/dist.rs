//! Paced values, paced-value distributions, and the first-price bid
//! function sigma.
//!
//! CDF convention throughout: right-continuous, `cdf(x) = P(X <= x)`,
//! so an atom at `x` is included in `cdf(x)`. Integrals of CDFs are exact:
//! piecewise-constant sums for step distributions, closed-form
//! antiderivative differences for analytic ones. There is no numeric
//! quadrature anywhere in this module.

use crate::instance::{AuctionInstance, PacingProfile};

/// Paced value `w^T alpha / (1 + t)`, with the inner product summed in
/// ascending index order so results are reproducible bit-for-bit.
pub fn paced_value(weights: &[f64], features: &[f64], t: f64) -> f64 {
    assert_eq!(
        weights.len(),
        features.len(),
        "dimension mismatch between weights and features"
    );
    assert!(t >= 0.0, "pacing multiplier must be nonnegative");
    let mut sum = 0.0;
    for i in 0..weights.len() {
        sum += weights[i] * features[i];
    }
    sum / (1.0 + t)
}

/// Step CDF over finitely many support points.
///
/// `cumulative[i]` is the probability of drawing at most `support[i]`;
/// `prefix_area[i]` is the exact integral of the CDF from `support[0]`
/// to `support[i]`, kept so that interval integrals are two lookups.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    support: Vec<f64>,
    cumulative: Vec<f64>,
    prefix_area: Vec<f64>,
}

impl StepCdf {
    /// Build from weighted values. Values equal bit-for-bit are merged;
    /// near-equal values stay distinct so no probability mass silently
    /// moves. Total mass must be within `1e-9` of one and is snapped to
    /// exactly one at the top.
    pub fn from_weighted_values(pairs: &[(f64, f64)]) -> StepCdf {
        assert!(!pairs.is_empty(), "step CDF needs at least one atom");
        let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support = Vec::with_capacity(sorted.len());
        let mut cumulative = Vec::with_capacity(sorted.len());
        let mut running = 0.0;
        for (value, mass) in sorted {
            assert!(value.is_finite(), "step CDF support must be finite");
            assert!(mass > 0.0, "step CDF masses must be positive");
            running += mass;
            if support.last() == Some(&value) {
                *cumulative.last_mut().unwrap() = running.min(1.0);
            } else {
                support.push(value);
                cumulative.push(running.min(1.0));
            }
        }
        assert!(
            (running - 1.0).abs() <= 1e-9,
            "step CDF mass sums to {running}, not 1"
        );
        *cumulative.last_mut().unwrap() = 1.0;
        let prefix_area = prefix_areas(&support, &cumulative);
        StepCdf {
            support,
            cumulative,
            prefix_area,
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    fn powered(&self, exponent: u32) -> StepCdf {
        let cumulative: Vec<f64> = self
            .cumulative
            .iter()
            .map(|c| c.powi(exponent as i32))
            .collect();
        let prefix_area = prefix_areas(&self.support, &cumulative);
        StepCdf {
            support: self.support.clone(),
            cumulative,
            prefix_area,
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let idx = self.support.partition_point(|&s| s <= x);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    /// Integral of the CDF from the lowest support point to `x`.
    fn antiderivative(&self, x: f64) -> f64 {
        let idx = self.support.partition_point(|&s| s <= x);
        if idx == 0 {
            0.0
        } else {
            self.prefix_area[idx - 1] + self.cumulative[idx - 1] * (x - self.support[idx - 1])
        }
    }
}

fn prefix_areas(support: &[f64], cumulative: &[f64]) -> Vec<f64> {
    let mut areas = Vec::with_capacity(support.len());
    areas.push(0.0);
    for i in 1..support.len() {
        let step = cumulative[i - 1] * (support[i] - support[i - 1]);
        areas.push(areas[i - 1] + step);
    }
    areas
}

/// Closed-form CDFs with exact antiderivatives, all supported on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticCdf {
    /// Uniform on `[0, 1]`: `cdf(s) = s`.
    Uniform,
    /// Maximum of `k` i.i.d. uniforms: `cdf(s) = s^k`.
    UniformPower(u32),
    /// Axis projection of a uniform direction on the quarter circle:
    /// `cdf(s) = 2·asin(s)/π`.
    QuarterArc,
}

impl AnalyticCdf {
    fn cdf(&self, x: f64) -> f64 {
        let s = x.clamp(0.0, 1.0);
        match self {
            AnalyticCdf::Uniform => s,
            AnalyticCdf::UniformPower(k) => s.powi(*k as i32),
            AnalyticCdf::QuarterArc => 2.0 * s.asin() / std::f64::consts::PI,
        }
    }

    /// Antiderivative of the CDF with `F(0) = 0`, extended linearly with
    /// slope one above the support.
    fn antiderivative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x > 1.0 {
            return self.antiderivative(1.0) + (x - 1.0);
        }
        match self {
            AnalyticCdf::Uniform => 0.5 * x * x,
            AnalyticCdf::UniformPower(k) => x.powi(*k as i32 + 1) / (*k as f64 + 1.0),
            AnalyticCdf::QuarterArc => {
                2.0 / std::f64::consts::PI * (x * x.asin() + (1.0 - x * x).sqrt() - 1.0)
            }
        }
    }

    fn powered(&self, exponent: u32) -> AnalyticCdf {
        match (self, exponent) {
            (any, 1) => *any,
            (AnalyticCdf::Uniform, k) => AnalyticCdf::UniformPower(k),
            (AnalyticCdf::UniformPower(j), k) => AnalyticCdf::UniformPower(j * k),
            (AnalyticCdf::QuarterArc, k) => panic!(
                "no exact antiderivative for QuarterArc^{k}; only power 1 is supported analytically"
            ),
        }
    }
}

/// A distribution of (paced) values, either empirical or closed-form.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueDistribution {
    Step(StepCdf),
    Analytic(AnalyticCdf),
}

impl ValueDistribution {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ValueDistribution::Step(s) => s.cdf(x),
            ValueDistribution::Analytic(a) => a.cdf(x),
        }
    }

    /// Exact `∫_a^b cdf(s) ds`. Panics if `b < a`.
    pub fn cdf_integral(&self, a: f64, b: f64) -> f64 {
        assert!(b >= a, "inverted integration bounds: [{a}, {b}]");
        match self {
            ValueDistribution::Step(s) => s.antiderivative(b) - s.antiderivative(a),
            ValueDistribution::Analytic(an) => an.antiderivative(b) - an.antiderivative(a),
        }
    }
}

/// `cdf_integral` as a free function, for symmetry with the other
/// distribution operations.
pub fn cdf_integral(dist: &ValueDistribution, a: f64, b: f64) -> f64 {
    dist.cdf_integral(a, b)
}

/// Distribution of paced values for one item under a pacing profile:
/// the multiset `{w_j^T alpha / (1 + t_j)}` weighted by buyer
/// probabilities, with bit-equal values merged.
pub fn paced_value_distribution(
    instance: &AuctionInstance,
    profile: &PacingProfile,
    item: usize,
) -> ValueDistribution {
    assert_eq!(
        profile.len(),
        instance.buyers().len(),
        "profile must cover all buyer atoms"
    );
    let features = &instance.items()[item].features;
    let pairs: Vec<(f64, f64)> = instance
        .buyers()
        .iter()
        .zip(&profile.multipliers)
        .map(|(buyer, &t)| (paced_value(&buyer.weights, features, t), buyer.probability))
        .collect();
    ValueDistribution::Step(StepCdf::from_weighted_values(&pairs))
}

/// Distribution of the highest of `n - 1` i.i.d. draws: the CDF raised to
/// the `n - 1` power, on the same support.
pub fn highest_competitor_distribution(lambda: &ValueDistribution, n: usize) -> ValueDistribution {
    assert!(n >= 2, "need at least two bidders, got n = {n}");
    let exponent = (n - 1) as u32;
    match lambda {
        ValueDistribution::Step(s) => ValueDistribution::Step(s.powered(exponent)),
        ValueDistribution::Analytic(a) => ValueDistribution::Analytic(a.powered(exponent)),
    }
}

/// First-price symmetric-equilibrium bid at value `x` against highest
/// competitor `H` with reserve `r`:
///
/// * `x < r`: bid `x` (identity below the reserve, so losing values never
///   produce bids above the reserve);
/// * `H(x) = 0`: bid 0;
/// * otherwise `x − (∫_r^x H) / H(x)`, i.e. the expectation of
///   `max(Y, r)` conditioned on being the highest value.
pub fn sigma(h: &ValueDistribution, r: f64, x: f64) -> f64 {
    assert!(x >= 0.0, "sigma expects a nonnegative value, got {x}");
    if x < r {
        return x;
    }
    let hx = h.cdf(x);
    if hx == 0.0 {
        return 0.0;
    }
    x - h.cdf_integral(r, x) / hx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::gen_arc_instance;
    use crate::instance::PacingProfile;
    use std::f64::consts::PI;

    fn step(pairs: &[(f64, f64)]) -> ValueDistribution {
        ValueDistribution::Step(StepCdf::from_weighted_values(pairs))
    }

    #[test]
    fn paced_value_examples() {
        assert_eq!(paced_value(&[1.0, 1.0], &[1.0, 0.0], 1.0), 0.5);
        // t = 0 is the identity
        assert_eq!(paced_value(&[0.3, 0.9], &[2.0, 1.5], 0.0), 0.3 * 2.0 + 0.9 * 1.5);
        // ‖w‖ − 1 pacing lands the paced vector on the unit arc
        assert_eq!(paced_value(&[2.0, 0.0], &[1.0, 0.0], 1.0), 1.0);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn paced_value_rejects_dimension_mismatch() {
        paced_value(&[1.0], &[1.0, 2.0], 0.0);
    }

    #[test]
    fn two_atom_distribution_cdf() {
        let d = step(&[(0.2, 0.5), (0.8, 0.5)]);
        assert_eq!(d.cdf(0.5), 0.5);
        assert_eq!(d.cdf(0.8), 1.0);
        assert_eq!(d.cdf(0.1), 0.0);
    }

    #[test]
    fn single_atom_is_unit_step() {
        let d = step(&[(0.7, 1.0)]);
        assert_eq!(d.cdf(0.699), 0.0);
        assert_eq!(d.cdf(0.7), 1.0);
        assert_eq!(d.cdf(2.0), 1.0);
    }

    #[test]
    fn equal_paced_values_merge() {
        let d = step(&[(0.4, 0.25), (0.4, 0.25), (0.9, 0.5)]);
        match &d {
            ValueDistribution::Step(s) => {
                assert_eq!(s.support(), &[0.4, 0.9]);
                assert_eq!(s.cumulative(), &[0.5, 1.0]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn highest_competitor_power_rule() {
        let lam = step(&[(0.5, 0.5), (1.0, 0.5)]);
        let h2 = highest_competitor_distribution(&lam, 2);
        assert_eq!(h2, lam);
        let h3 = highest_competitor_distribution(&lam, 3);
        assert_eq!(h3.cdf(0.5), 0.25);
        assert_eq!(h3.cdf(1.0), 1.0);
    }

    #[test]
    #[should_panic(expected = "at least two bidders")]
    fn highest_competitor_rejects_single_bidder() {
        let lam = step(&[(0.5, 1.0)]);
        highest_competitor_distribution(&lam, 1);
    }

    #[test]
    fn cdf_integral_examples() {
        // unit step at 0.5 over [0, 1]: half the interval at height 1
        let unit = step(&[(0.5, 1.0)]);
        assert_eq!(unit.cdf_integral(0.0, 1.0), 0.5);
        // atoms {0.25: 0.5, 0.75: 0.5}: 0·0.25 + 0.5·0.5 + 1·0.25
        let two = step(&[(0.25, 0.5), (0.75, 0.5)]);
        assert_eq!(two.cdf_integral(0.0, 1.0), 0.5);
        // analytic uniform
        let uni = ValueDistribution::Analytic(AnalyticCdf::Uniform);
        assert_eq!(uni.cdf_integral(0.0, 1.0), 0.5);
    }

    #[test]
    #[should_panic(expected = "inverted integration bounds")]
    fn cdf_integral_rejects_inverted_bounds() {
        let unit = step(&[(0.5, 1.0)]);
        unit.cdf_integral(1.0, 0.0);
    }

    #[test]
    fn sigma_examples() {
        let uni = ValueDistribution::Analytic(AnalyticCdf::Uniform);
        // uniform H, r = 0: sigma(x) = x/2
        assert!((sigma(&uni, 0.0, 0.8) - 0.4).abs() < 1e-15);
        // below the reserve sigma is the identity
        assert_eq!(sigma(&uni, 0.3, 0.2), 0.2);
        // H(x) = 0 maps to a zero bid
        let high = step(&[(0.5, 1.0)]);
        assert_eq!(sigma(&high, 0.0, 0.1), 0.0);
        // quarter-arc H at x = 1: 1 − (π/2 − 1)/(π/2) = 2/π
        let arc = ValueDistribution::Analytic(AnalyticCdf::QuarterArc);
        assert!((sigma(&arc, 0.0, 1.0) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn sigma_for_uniform_powers_is_linear() {
        for n in [2usize, 3, 5] {
            let h = highest_competitor_distribution(
                &ValueDistribution::Analytic(AnalyticCdf::Uniform),
                n,
            );
            for i in 1..=100 {
                let x = i as f64 / 100.0;
                let expected = x * (n as f64 - 1.0) / n as f64;
                assert!(
                    (sigma(&h, 0.0, x) - expected).abs() <= 1e-12,
                    "n={n} x={x}"
                );
            }
        }
    }

    #[test]
    fn quarter_arc_antiderivative_matches_closed_form() {
        let arc = ValueDistribution::Analytic(AnalyticCdf::QuarterArc);
        // ∫_0^1 2·asin/π = 1 − 2/π
        assert!((arc.cdf_integral(0.0, 1.0) - (1.0 - 2.0 / PI)).abs() < 1e-15);
        // slope-one extension above the support
        assert!((arc.cdf_integral(1.0, 2.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn arc_lattice_cdf_tracks_arcsine_law() {
        // At the closed-form profile t = ‖w‖ − 1 the paced values for the
        // first basis item follow 2·asin(s)/π; the 320-point lattice stays
        // within 0.02 of it in sup norm over the support.
        let inst = gen_arc_instance(2.0, 3.0, 320).unwrap();
        let profile = PacingProfile {
            multipliers: inst
                .buyers()
                .iter()
                .map(|b| b.weights[0].hypot(b.weights[1]) - 1.0)
                .collect(),
        };
        let lam = paced_value_distribution(&inst, &profile, 0);
        let h = highest_competitor_distribution(&lam, inst.n());
        match &h {
            ValueDistribution::Step(s) => {
                let mut worst: f64 = 0.0;
                for (v, c) in s.support().iter().zip(s.cumulative()) {
                    let analytic = 2.0 * v.clamp(0.0, 1.0).asin() / PI;
                    worst = worst.max((c - analytic).abs());
                }
                assert!(worst <= 0.02, "sup-norm gap {worst}");
            }
            _ => unreachable!(),
        }
    }
}
