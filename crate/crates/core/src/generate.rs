//! Generators for the two reference markets used throughout the test
//! and acceptance suites.

use crate::instance::{
    validate_instance, AuctionInstance, BuyerAtom, InstanceError, ItemAtom, RawInstance,
};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Budget assigned to weight vector `(w1, w2)` on the quarter-annulus
/// market: `(2‖w‖ − w1 − w2) / (π‖w‖)`. Depends only on the direction of
/// `w`, so colinear buyers share a budget.
pub fn arc_budget(w1: f64, w2: f64) -> f64 {
    let norm = w1.hypot(w2);
    (2.0 * norm - w1 - w2) / (std::f64::consts::PI * norm)
}

/// Quarter-annulus market: two basis items, `n = 2`, buyer weight vectors
/// spread over `{w >= 0 : a <= ‖w‖ <= b}` with budgets from [`arc_budget`].
///
/// Atoms are placed deterministically on a golden-angle lattice: atom `k`
/// has angle `(π/2)·frac(k/φ)` and radius swept linearly from `b` down to
/// `a`. Every atom gets a distinct direction, which keeps the paced-value
/// distributions free of avoidable coincident atoms; atom 0 sits at
/// `(b, 0)` so the instance attains `omega = b` exactly.
pub fn gen_arc_instance(a: f64, b: f64, count: usize) -> Result<AuctionInstance, InstanceError> {
    if count < 1 {
        return Err(InstanceError::ArcCount(count));
    }
    if !(a >= 1.0 && b > a && a.is_finite() && b.is_finite()) {
        return Err(InstanceError::ArcRange { a, b });
    }
    let prob = 1.0 / count as f64;
    let mut buyers = Vec::with_capacity(count);
    for k in 0..count {
        let frac = (k as f64 * INV_PHI).fract();
        let theta = std::f64::consts::FRAC_PI_2 * frac;
        let radius = if count == 1 {
            b
        } else {
            b - (b - a) * k as f64 / (count - 1) as f64
        };
        let w1 = radius * theta.cos();
        let w2 = radius * theta.sin();
        buyers.push(BuyerAtom {
            weights: vec![w1, w2],
            budget: arc_budget(w1, w2),
            probability: prob,
        });
    }
    let items = vec![
        ItemAtom {
            features: vec![1.0, 0.0],
            probability: 0.5,
            reserve: 0.0,
        },
        ItemAtom {
            features: vec![0.0, 1.0],
            probability: 0.5,
            reserve: 0.0,
        },
    ];
    validate_instance(RawInstance {
        n: 2,
        d: 2,
        items,
        buyers,
    })
}

/// Grid market: `n = 3`, 100 buyer atoms on a 10x10 grid of cell midpoints
/// over `(1,2)^2`, all with budget 0.6; 10 item atoms evenly spaced along
/// the simplex segment `{(x, 1-x) : x in [0,1]}`, reserve 0.
pub fn gen_grid_instance() -> AuctionInstance {
    let mut buyers = Vec::with_capacity(100);
    for i in 0..10 {
        for j in 0..10 {
            let w1 = 1.0 + (i as f64 + 0.5) / 10.0;
            let w2 = 1.0 + (j as f64 + 0.5) / 10.0;
            buyers.push(BuyerAtom {
                weights: vec![w1, w2],
                budget: 0.6,
                probability: 0.01,
            });
        }
    }
    let mut items = Vec::with_capacity(10);
    for i in 0..10 {
        let x = i as f64 / 9.0;
        items.push(ItemAtom {
            features: vec![x, 1.0 - x],
            probability: 0.1,
            reserve: 0.0,
        });
    }
    validate_instance(RawInstance {
        n: 3,
        d: 2,
        items,
        buyers,
    })
    .expect("grid instance is valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_budget_matches_closed_form() {
        // axis direction: (2·2 − 2 − 0) / (2π) = 1/π
        let axis = arc_budget(2.0, 0.0);
        assert!((axis - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        // diagonal: ‖w‖ = 2, budget (2 − √2)/π
        let s = std::f64::consts::SQRT_2;
        let diag = arc_budget(s, s);
        assert!((diag - (2.0 - s) / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn arc_instance_shape_matches_reference_setup() {
        let inst = gen_arc_instance(2.0, 3.0, 320).unwrap();
        assert_eq!(inst.buyers().len(), 320);
        assert_eq!(inst.items().len(), 2);
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.d(), 2);
        assert!(inst.items().iter().all(|a| a.reserve == 0.0));
    }

    #[test]
    fn arc_budget_identity_holds_for_every_atom() {
        let inst = gen_arc_instance(2.0, 3.0, 320).unwrap();
        for atom in inst.buyers() {
            let (w1, w2) = (atom.weights[0], atom.weights[1]);
            let norm = w1.hypot(w2);
            let lhs = atom.budget * std::f64::consts::PI * norm;
            let rhs = 2.0 * norm - w1 - w2;
            assert!((lhs - rhs).abs() <= 1e-12, "atom {w1},{w2}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn arc_omega_is_outer_radius() {
        let inst = gen_arc_instance(2.0, 3.0, 320).unwrap();
        assert!((inst.omega() - 3.0).abs() <= 1e-12);
        let small = gen_arc_instance(1.0, 4.5, 7).unwrap();
        assert!((small.omega() - 4.5).abs() <= 1e-12);
    }

    #[test]
    fn arc_radii_stay_in_band() {
        let inst = gen_arc_instance(2.0, 3.0, 57).unwrap();
        for atom in inst.buyers() {
            let norm = atom.weights[0].hypot(atom.weights[1]);
            assert!(norm >= 2.0 - 1e-12 && norm <= 3.0 + 1e-12);
        }
    }

    #[test]
    fn arc_rejects_bad_parameters() {
        assert!(gen_arc_instance(2.0, 3.0, 0).is_err());
        assert!(gen_arc_instance(0.5, 3.0, 10).is_err());
        assert!(gen_arc_instance(2.0, 2.0, 10).is_err());
    }

    #[test]
    fn grid_instance_matches_reference_setup() {
        let inst = gen_grid_instance();
        assert_eq!(inst.buyers().len(), 100);
        assert_eq!(inst.items().len(), 10);
        assert_eq!(inst.n(), 3);
        assert!(inst.buyers().iter().all(|b| b.budget == 0.6));
        assert!(inst.items().iter().all(|a| a.reserve == 0.0));
        for item in inst.items() {
            assert!((item.features[0] + item.features[1] - 1.0).abs() < 1e-15);
        }
    }
}
