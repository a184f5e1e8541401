//! Best-response dynamics over pacing profiles and the structural checks
//! an approximate equilibrium should satisfy.
//!
//! Each round freezes the profile, computes every type's smallest
//! dual-optimal multiplier against it (a Jacobi update, parallel across
//! types), and moves the profile by a damped convex combination. The
//! dynamics are not guaranteed to converge; a non-converged report is a
//! result, not an error.

use crate::dual::MULTIPLIER_TOL;
use crate::instance::{AuctionInstance, PacingProfile};
use crate::market::PacedMarket;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Step size toward the best response, in (0, 1].
    pub damping: f64,
    pub max_rounds: usize,
    /// Convergence threshold on the L-infinity multiplier change.
    pub fixpoint_tol: f64,
    /// Relative budget-violation threshold used in reporting.
    pub budget_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            damping: 0.5,
            max_rounds: 10_000,
            fixpoint_tol: 1e-8,
            budget_tol: 1e-6,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        if !(self.fixpoint_tol > 0.0) {
            return Err("fixpoint tolerance must be positive".into());
        }
        if !(self.budget_tol > 0.0) {
            return Err("budget tolerance must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// Detected residual cycle length (1..=4) when the dynamics stalled.
    pub oscillation_period: Option<usize>,
    pub paced_types: usize,
    pub unpaced_types: usize,
    /// Largest |t · (B − expenditure)| across types at the final profile.
    pub max_abs_slackness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub profile: PacingProfile,
    pub rounds: usize,
    /// Multiplier changes reached `fixpoint_tol`. Budget feasibility is
    /// reported separately through `max_budget_violation`.
    pub converged: bool,
    /// Last-round L-infinity multiplier change; absent when no round ran.
    pub linf_residual: Option<f64>,
    /// Max over types of (expenditure − budget)+ / budget.
    pub max_budget_violation: f64,
    pub diagnostics: SolveDiagnostics,
}

/// One damped Jacobi round: every type best-responds to the same frozen
/// profile, then the profile moves by `damping` toward those responses.
pub fn best_response_step(
    instance: &AuctionInstance,
    profile: &PacingProfile,
    damping: f64,
) -> PacingProfile {
    assert!(damping > 0.0 && damping <= 1.0);
    let market = PacedMarket::new(instance, profile);
    let responses: Vec<f64> = (0..instance.buyers().len())
        .into_par_iter()
        .map(|b| market.dual_problem(b).best_response().t_star)
        .collect();
    let multipliers = profile
        .multipliers
        .iter()
        .zip(&responses)
        .map(|(&old, &new)| (1.0 - damping) * old + damping * new)
        .collect();
    PacingProfile { multipliers }
}

/// Iterate [`best_response_step`] from the all-zeros profile until the
/// multiplier change drops below `fixpoint_tol` or rounds run out.
pub fn solve_equilibrium(instance: &AuctionInstance, options: &SolveOptions) -> EquilibriumReport {
    options.validate().expect("invalid solve options");
    let mut profile = PacingProfile::zeros(instance.buyers().len());
    let mut residuals: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut rounds = 0;
    for _ in 0..options.max_rounds {
        let next = best_response_step(instance, &profile, options.damping);
        let residual = profile
            .multipliers
            .iter()
            .zip(&next.multipliers)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        residuals.push(residual);
        profile = next;
        rounds += 1;
        if residual <= options.fixpoint_tol {
            converged = true;
            break;
        }
    }

    let budgets = check_budgets(instance, &profile);
    let max_budget_violation = budgets
        .iter()
        .map(|b| b.violation / b.budget)
        .fold(0.0, f64::max);
    let max_abs_slackness = budgets
        .iter()
        .map(|b| b.slackness.abs())
        .fold(0.0, f64::max);
    let paced_types = profile
        .multipliers
        .iter()
        .filter(|&&t| t > MULTIPLIER_TOL)
        .count();
    let oscillation_period = if converged {
        None
    } else {
        detect_cycle(&residuals)
    };

    EquilibriumReport {
        rounds,
        converged,
        linf_residual: residuals.last().copied(),
        max_budget_violation,
        diagnostics: SolveDiagnostics {
            oscillation_period,
            paced_types,
            unpaced_types: profile.multipliers.len() - paced_types,
            max_abs_slackness,
        },
        profile,
    }
}

/// Look for a short cycle in the tail of the residual sequence: period
/// `p <= 4` such that the last `2p` entries repeat the `p` before them.
fn detect_cycle(residuals: &[f64]) -> Option<usize> {
    let k = residuals.len();
    for period in 1..=4usize {
        if k < 3 * period {
            continue;
        }
        let matches = (1..=2 * period).all(|i| {
            let a = residuals[k - i];
            let b = residuals[k - i - period];
            (a - b).abs() <= 1e-12 * (1.0 + a.abs())
        });
        if matches {
            return Some(period);
        }
    }
    None
}

/// Per-type budget accounting at a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCheck {
    pub buyer: usize,
    pub multiplier: f64,
    pub expenditure: f64,
    pub budget: f64,
    /// (expenditure − budget)+
    pub violation: f64,
    /// t · (budget − expenditure), the complementary-slackness product.
    pub slackness: f64,
}

pub fn check_budgets(instance: &AuctionInstance, profile: &PacingProfile) -> Vec<BudgetCheck> {
    let market = PacedMarket::new(instance, profile);
    (0..instance.buyers().len())
        .map(|b| {
            let t = profile.multipliers[b];
            let budget = instance.buyers()[b].budget;
            let expenditure = market.dual_problem(b).expenditure(t);
            BudgetCheck {
                buyer: b,
                multiplier: t,
                expenditure,
                budget,
                violation: (expenditure - budget).max(0.0),
                slackness: t * (budget - expenditure),
            }
        })
        .collect()
}

pub const MONOTONICITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub lower: usize,
    pub higher: usize,
    /// "weight" when `higher` dominates in one weight component,
    /// "budget" when it has the larger budget.
    pub kind: String,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub weight_pairs: usize,
    pub budget_pairs: usize,
    pub violations: Vec<MonotonicityViolation>,
    /// No comparable pairs existed.
    pub vacuous: bool,
}

/// Check that multipliers are nondecreasing in each weight component at a
/// fixed budget and nonincreasing in the budget at fixed weights.
///
/// Pairs are comparable only when every other coordinate matches
/// bit-for-bit, which is the situation grid-generated instances produce.
pub fn check_monotonicity(instance: &AuctionInstance, profile: &PacingProfile) -> MonotonicityReport {
    profile
        .validate(instance)
        .expect("pacing profile must be valid for the instance");
    let buyers = instance.buyers();
    let t = &profile.multipliers;
    let mut weight_pairs = 0;
    let mut budget_pairs = 0;
    let mut violations = Vec::new();
    for i in 0..buyers.len() {
        for j in 0..buyers.len() {
            if i == j {
                continue;
            }
            let (wi, wj) = (&buyers[i].weights, &buyers[j].weights);
            if buyers[i].budget == buyers[j].budget {
                let mut lower_in = None;
                let mut comparable = true;
                for k in 0..wi.len() {
                    if wi[k] == wj[k] {
                        continue;
                    }
                    if lower_in.is_some() {
                        comparable = false;
                        break;
                    }
                    if wi[k] < wj[k] {
                        lower_in = Some(k);
                    } else {
                        comparable = false;
                        break;
                    }
                }
                if comparable && lower_in.is_some() {
                    weight_pairs += 1;
                    if t[i] > t[j] + MONOTONICITY_TOL {
                        violations.push(MonotonicityViolation {
                            lower: i,
                            higher: j,
                            kind: "weight".to_string(),
                            gap: t[i] - t[j],
                        });
                    }
                }
            } else if wi == wj && buyers[i].budget < buyers[j].budget {
                budget_pairs += 1;
                // larger budget must not pace harder
                if t[j] > t[i] + MONOTONICITY_TOL {
                    violations.push(MonotonicityViolation {
                        lower: i,
                        higher: j,
                        kind: "budget".to_string(),
                        gap: t[j] - t[i],
                    });
                }
            }
        }
    }
    MonotonicityReport {
        weight_pairs,
        budget_pairs,
        vacuous: weight_pairs + budget_pairs == 0,
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColinearGroup {
    pub members: Vec<usize>,
    pub paced_members: usize,
    /// Largest pairwise distance between paced members' paced vectors.
    pub max_pairwise_deviation: f64,
    /// Distance from paced vectors to the largest unpaced member's
    /// weights, when the group has unpaced members.
    pub collapse_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColinearReport {
    pub groups: Vec<ColinearGroup>,
    pub max_pairwise_deviation: f64,
    pub max_collapse_deviation: Option<f64>,
    /// No group had two or more members.
    pub vacuous: bool,
}

fn quantize(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

/// Group buyer atoms by (direction rounded to 1e-9, budget rounded to
/// 1e-9) and measure how tightly paced members' paced weight vectors
/// collapse, and onto the largest unpaced member where one exists.
pub fn check_colinear_pacing(
    instance: &AuctionInstance,
    profile: &PacingProfile,
) -> ColinearReport {
    profile
        .validate(instance)
        .expect("pacing profile must be valid for the instance");
    let buyers = instance.buyers();
    let mut groups: std::collections::BTreeMap<Vec<i64>, Vec<usize>> =
        std::collections::BTreeMap::new();
    for (b, buyer) in buyers.iter().enumerate() {
        let norm = buyer.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let mut key: Vec<i64> = buyer.weights.iter().map(|w| quantize(w / norm)).collect();
        key.push(quantize(buyer.budget));
        groups.entry(key).or_default().push(b);
    }

    let mut out_groups = Vec::new();
    let mut max_pairwise: f64 = 0.0;
    let mut max_collapse: Option<f64> = None;
    let mut vacuous = true;
    for members in groups.into_values() {
        if members.len() < 2 {
            continue;
        }
        vacuous = false;
        let paced: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&b| profile.multipliers[b] > MULTIPLIER_TOL)
            .collect();
        let paced_vec = |b: usize| -> Vec<f64> {
            let t = profile.multipliers[b];
            buyers[b].weights.iter().map(|w| w / (1.0 + t)).collect()
        };
        let mut pairwise: f64 = 0.0;
        for (a, &i) in paced.iter().enumerate() {
            for &j in &paced[a + 1..] {
                pairwise = pairwise.max(distance(&paced_vec(i), &paced_vec(j)));
            }
        }
        let unpaced: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&b| profile.multipliers[b] <= MULTIPLIER_TOL)
            .collect();
        let collapse = if !unpaced.is_empty() && !paced.is_empty() {
            let largest = unpaced
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let na: f64 = buyers[a].weights.iter().map(|w| w * w).sum::<f64>();
                    let nb: f64 = buyers[b].weights.iter().map(|w| w * w).sum::<f64>();
                    na.total_cmp(&nb)
                })
                .unwrap();
            let target = &buyers[largest].weights;
            let mut worst: f64 = 0.0;
            for &b in &paced {
                worst = worst.max(distance(&paced_vec(b), target));
            }
            Some(worst)
        } else {
            None
        };
        max_pairwise = max_pairwise.max(pairwise);
        if let Some(c) = collapse {
            max_collapse = Some(max_collapse.map_or(c, |m: f64| m.max(c)));
        }
        out_groups.push(ColinearGroup {
            paced_members: paced.len(),
            members,
            max_pairwise_deviation: pairwise,
            collapse_deviation: collapse,
        });
    }
    ColinearReport {
        groups: out_groups,
        max_pairwise_deviation: max_pairwise,
        max_collapse_deviation: max_collapse,
        vacuous,
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Population dual objective `f(profile, candidate)`: the
/// probability-weighted sum of each type's dual value at the candidate's
/// multiplier, with competitor distributions frozen at `profile`.
pub fn population_dual_objective(
    instance: &AuctionInstance,
    profile: &PacingProfile,
    candidate: &PacingProfile,
) -> f64 {
    assert_eq!(candidate.len(), instance.buyers().len());
    let market = PacedMarket::new(instance, profile);
    let mut total = 0.0;
    for (b, buyer) in instance.buyers().iter().enumerate() {
        total += buyer.probability
            * market
                .dual_problem(b)
                .dual_value(candidate.multipliers[b]);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_arc_instance, gen_grid_instance};
    use crate::instance::{validate_instance, BuyerAtom, ItemAtom, RawInstance};

    fn small_arc() -> AuctionInstance {
        gen_arc_instance(2.0, 3.0, 40).unwrap()
    }

    #[test]
    fn fixed_point_profile_is_stationary_undamped() {
        let inst = small_arc();
        let options = SolveOptions {
            max_rounds: 400,
            ..SolveOptions::default()
        };
        let report = solve_equilibrium(&inst, &options);
        assert!(report.converged);
        let stepped = best_response_step(&inst, &report.profile, 1.0);
        let drift = report
            .profile
            .multipliers
            .iter()
            .zip(&stepped.multipliers)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(drift <= 1e-6, "fixed point drifted by {drift}");
    }

    #[test]
    fn damped_step_is_the_convex_combination() {
        let inst = small_arc();
        let zeros = PacingProfile::zeros(inst.buyers().len());
        let full = best_response_step(&inst, &zeros, 1.0);
        let half = best_response_step(&inst, &zeros, 0.5);
        for (f, h) in full.multipliers.iter().zip(&half.multipliers) {
            assert!((h - 0.5 * f).abs() <= 1e-15);
        }
    }

    #[test]
    fn damped_step_stays_in_the_dual_box() {
        let inst = small_arc();
        let mut profile = PacingProfile::zeros(inst.buyers().len());
        for _ in 0..3 {
            profile = best_response_step(&inst, &profile, 0.7);
            for &t in &profile.multipliers {
                assert!(t >= 0.0 && t <= inst.t_max());
            }
        }
    }

    #[test]
    fn zero_round_budget_is_a_report_not_an_error() {
        let inst = small_arc();
        let options = SolveOptions {
            max_rounds: 0,
            ..SolveOptions::default()
        };
        let report = solve_equilibrium(&inst, &options);
        assert_eq!(report.rounds, 0);
        assert!(!report.converged);
        assert_eq!(report.linf_residual, None);
        assert!(report.profile.multipliers.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn single_type_solve_matches_scalar_iteration() {
        let inst = validate_instance(RawInstance {
            n: 2,
            d: 2,
            items: vec![
                ItemAtom {
                    features: vec![1.0, 0.2],
                    probability: 0.6,
                    reserve: 0.1,
                },
                ItemAtom {
                    features: vec![0.1, 1.0],
                    probability: 0.4,
                    reserve: 0.0,
                },
            ],
            buyers: vec![BuyerAtom {
                weights: vec![0.9, 0.7],
                budget: 0.25,
                probability: 1.0,
            }],
        })
        .unwrap();
        let options = SolveOptions::default();
        let report = solve_equilibrium(&inst, &options);

        let mut t = 0.0;
        for _ in 0..options.max_rounds {
            let profile = PacingProfile {
                multipliers: vec![t],
            };
            let market = PacedMarket::new(&inst, &profile);
            let ell = market.dual_problem(0).best_response().t_star;
            let next = 0.5 * t + 0.5 * ell;
            let residual = (next - t).abs();
            t = next;
            if residual <= options.fixpoint_tol {
                break;
            }
        }
        assert!((report.profile.multipliers[0] - t).abs() <= 1e-8);
    }

    #[test]
    fn unpaced_overspending_is_reported_not_raised() {
        let inst = small_arc();
        let zeros = PacingProfile::zeros(inst.buyers().len());
        let checks = check_budgets(&inst, &zeros);
        assert!(checks.iter().any(|c| c.violation > 0.0));
        // unpaced types have zero slackness product by definition
        assert!(checks.iter().all(|c| c.slackness == 0.0));
    }

    #[test]
    fn constant_profile_is_monotone() {
        let inst = gen_grid_instance();
        let profile = PacingProfile {
            multipliers: vec![0.3; 100],
        };
        let report = check_monotonicity(&inst, &profile);
        assert!(!report.vacuous);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn planted_inversion_is_detected() {
        let inst = gen_grid_instance();
        let mut profile = PacingProfile {
            multipliers: vec![0.3; 100],
        };
        // buyer 0 is (1.05, 1.05); buyer 10 is (1.15, 1.05): same second
        // coordinate, larger first. Give the smaller type a larger t.
        profile.multipliers[0] = 0.4;
        let report = check_monotonicity(&inst, &profile);
        assert!(report
            .violations
            .iter()
            .any(|v| v.lower == 0 && v.kind == "weight"));
    }

    #[test]
    fn monotonicity_without_comparable_pairs_is_vacuous() {
        let inst = small_arc(); // lattice: all directions distinct
        let profile = PacingProfile::zeros(inst.buyers().len());
        let report = check_monotonicity(&inst, &profile);
        assert!(report.vacuous);
    }

    #[test]
    fn colinear_groups_on_lattice_are_vacuous() {
        let inst = small_arc();
        let profile = PacingProfile::zeros(inst.buyers().len());
        let report = check_colinear_pacing(&inst, &profile);
        assert!(report.vacuous);
        assert_eq!(report.max_pairwise_deviation, 0.0);
    }

    #[test]
    fn colinear_collapse_is_measured() {
        // two colinear buyers, the larger paced exactly onto the smaller
        let inst = validate_instance(RawInstance {
            n: 2,
            d: 2,
            items: vec![ItemAtom {
                features: vec![1.0, 1.0],
                probability: 1.0,
                reserve: 0.0,
            }],
            buyers: vec![
                BuyerAtom {
                    weights: vec![1.0, 2.0],
                    budget: 0.5,
                    probability: 0.5,
                },
                BuyerAtom {
                    weights: vec![2.0, 4.0],
                    budget: 0.5,
                    probability: 0.5,
                },
            ],
        })
        .unwrap();
        let profile = PacingProfile {
            multipliers: vec![0.0, 1.0],
        };
        let report = check_colinear_pacing(&inst, &profile);
        assert_eq!(report.groups.len(), 1);
        assert_eq!(report.groups[0].paced_members, 1);
        assert_eq!(report.groups[0].collapse_deviation, Some(0.0));

        // plant a spread instead
        let spread = PacingProfile {
            multipliers: vec![0.0, 0.5],
        };
        let report = check_colinear_pacing(&inst, &spread);
        let dev = report.groups[0].collapse_deviation.unwrap();
        assert!(dev > 0.1);
    }

    #[test]
    fn population_objective_reduces_to_dual_value_for_one_type() {
        let inst = validate_instance(RawInstance {
            n: 2,
            d: 1,
            items: vec![ItemAtom {
                features: vec![1.0],
                probability: 1.0,
                reserve: 0.0,
            }],
            buyers: vec![BuyerAtom {
                weights: vec![0.8],
                budget: 0.3,
                probability: 1.0,
            }],
        })
        .unwrap();
        let profile = PacingProfile {
            multipliers: vec![0.2],
        };
        let candidate = PacingProfile {
            multipliers: vec![0.7],
        };
        let market = PacedMarket::new(&inst, &profile);
        let direct = market.dual_problem(0).dual_value(0.7);
        let pop = population_dual_objective(&inst, &profile, &candidate);
        assert_eq!(pop, direct);
    }

    #[test]
    fn best_responses_minimize_the_population_objective() {
        use rand::{Rng, SeedableRng};
        let inst = small_arc();
        let profile = PacingProfile {
            multipliers: vec![0.4; inst.buyers().len()],
        };
        let market = PacedMarket::new(&inst, &profile);
        let best = PacingProfile {
            multipliers: (0..inst.buyers().len())
                .map(|b| market.dual_problem(b).best_response().t_star)
                .collect(),
        };
        let base = population_dual_objective(&inst, &profile, &best);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let candidate = PacingProfile {
                multipliers: (0..inst.buyers().len())
                    .map(|_| rng.gen_range(0.0..inst.t_max()))
                    .collect(),
            };
            let value = population_dual_objective(&inst, &profile, &candidate);
            assert!(value + 1e-9 >= base);
        }
    }

    #[test]
    fn cycle_detector_finds_short_periods() {
        let flat: Vec<f64> = vec![0.5, 0.25, 0.1, 0.2, 0.1, 0.2, 0.1, 0.2];
        assert_eq!(detect_cycle(&flat), Some(2));
        let constant = vec![0.1; 8];
        assert_eq!(detect_cycle(&constant), Some(1));
        let decay: Vec<f64> = (0..10).map(|i| 0.5f64.powi(i)).collect();
        assert_eq!(detect_cycle(&decay), None);
    }
}
