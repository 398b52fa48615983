use fracsis::control::{euler_uncontrolled, trajectory_cost, FeedbackHistory, FeedbackPairing};
use fracsis::hjb::{interpolate_nodes, solve, ExitCost, Grid1D, SnapshotPolicy};
use fracsis::model::ModelParams;

struct Run {
    max_xi_early: f64,
}

fn scenario(alpha: f64, x0: f64) -> Run {
    let p = ModelParams::reference(alpha, 1.5).unwrap();
    let grid = Grid1D::new(4.0, 5.0, 200, 4000).unwrap();
    let sol = solve(&p, grid, &ExitCost::Linear, &SnapshotPolicy::AllLevels).unwrap();
    let traj = FeedbackHistory::new(&sol.field)
        .unwrap()
        .trajectory(&p, x0, FeedbackPairing::RemainingHorizon)
        .unwrap();
    let free = euler_uncontrolled(&p, &grid, x0).unwrap();
    let cost = trajectory_cost(&traj, &ExitCost::Linear).unwrap();
    let free_cost = trajectory_cost(&free, &ExitCost::Linear).unwrap();
    let value = interpolate_nodes(&sol.field.current, grid.dx(), x0);

    assert!(cost <= free_cost + 1e-6, "alpha {alpha} x0 {x0}: {cost} > {free_cost}");
    assert!((cost - value).abs() <= 0.05 * value + 2.0 * grid.dx(), "alpha {alpha} x0 {x0}: {cost} vs {value}");
    assert!(traj.states.iter().all(|&y| y >= 0.0));
    assert_eq!(traj.clamp_events, 0);
    Run {
        max_xi_early: traj.max_abs_control_within(0.0, 0.5),
    }
}

#[test]
fn scenario_invariants_and_effort_comparison() {
    for alpha in [0.5, 1.0] {
        scenario(alpha, 0.5);
    }
    let half = scenario(0.5, 1.25);
    let one = scenario(1.0, 1.25);
    assert!(
        half.max_xi_early > one.max_xi_early,
        "{} vs {}",
        half.max_xi_early,
        one.max_xi_early
    );
}
