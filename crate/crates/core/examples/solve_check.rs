use paced_auctions::*;
use std::time::Instant;

fn main() {
    let inst = gen_arc_instance(2.0, 3.0, 320).unwrap();
    let start = Instant::now();
    let report = solve_equilibrium(&inst, &SolveOptions::default());
    let dt = start.elapsed();
    let mut max_err: f64 = 0.0;
    let mut min_norm = f64::INFINITY;
    let mut max_norm: f64 = 0.0;
    for (b, atom) in inst.buyers().iter().enumerate() {
        let norm = atom.weights[0].hypot(atom.weights[1]);
        let t = report.profile.multipliers[b];
        max_err = max_err.max((t - (norm - 1.0)).abs());
        let pn = norm / (1.0 + t);
        min_norm = min_norm.min(pn);
        max_norm = max_norm.max(pn);
    }
    println!(
        "arc: rounds={} converged={} residual={:?} time={dt:?}",
        report.rounds, report.converged, report.linf_residual
    );
    println!(
        "  max|t-(norm-1)|={max_err:.4} paced norms=[{min_norm:.4},{max_norm:.4}] viol={:.3e}",
        report.max_budget_violation
    );

    let grid = gen_grid_instance();
    let start = Instant::now();
    let report = solve_equilibrium(&grid, &SolveOptions::default());
    let dt = start.elapsed();
    println!(
        "grid: rounds={} converged={} residual={:?} time={dt:?} viol={:.3e}",
        report.rounds, report.converged, report.linf_residual, report.max_budget_violation
    );
    let mono = check_monotonicity(&grid, &report.profile);
    let col = check_colinear_pacing(&grid, &report.profile);
    println!(
        "  mono: pairs={} violations={} | colinear: groups={} pairwise={:.2e} collapse={:?} paced={} unpaced={}",
        mono.weight_pairs,
        mono.violations.len(),
        col.groups.len(),
        col.max_pairwise_deviation,
        col.max_collapse_deviation,
        report.diagnostics.paced_types,
        report.diagnostics.unpaced_types
    );

    // revenue equivalence at the arc fixed point
    let inst = gen_arc_instance(2.0, 3.0, 320).unwrap();
    let eq = solve_equilibrium(&inst, &SolveOptions::default());
    let start = Instant::now();
    let rep = revenue_equivalence_report(
        &inst,
        &eq.profile,
        &[AuctionFormat::FirstPrice, AuctionFormat::SecondPrice, AuctionFormat::AllPay],
        1_000_000,
        0,
    )
    .unwrap();
    let dt = start.elapsed();
    println!("revenue (arc, 1e6 samples x3): time={dt:?} cross-format analytic gap={:.2e}", rep.max_cross_format_analytic_gap);
    for f in &rep.formats {
        println!(
            "  {:?}: analytic={:.6} mc={:.6} se={:.2e} gap={:.1} SE tie_freq={:.4}",
            f.format, f.analytic_total, f.mc_total, f.mc_std_error, f.total_gap_in_se, f.tie_frequency
        );
    }
}
