//! Euler, midpoint and RK4 on fields with known solutions.

use motion_flow::numerics::DenseArray;
use motion_flow::net::Condition;
use motion_flow::sampler::{draw_noise, integrate, SinglePointField, Solver};

fn main() -> motion_flow::Result<()> {
    let target = DenseArray::new(vec![1, 2, 3], vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0])?;
    let field = SinglePointField { target: target.clone() };
    let x0 = draw_noise(4, &[1, 2, 3]);
    let conds = [Condition::Null];
    // Straight paths: one Euler step already lands on the target. The field is
    // singular at t = 1, where the last RK4 stage evaluates it, so RK4 is off here.
    for solver in [Solver::Euler, Solver::Midpoint, Solver::Rk4] {
        for steps in [1, 2, 10] {
            let traj = integrate(&field, x0.clone(), &conds, solver, steps)?;
            println!(
                "{solver:?} N={steps:<3} NFE={:<3} terminal error {:.1e}",
                steps * solver.stages(),
                traj.last().max_abs_diff(&target)
            );
        }
    }
    let traj = integrate(&field, x0.clone(), &conds, Solver::Euler, 4)?;
    for (t, est) in traj.times.iter().zip(&traj.x1_estimates) {
        println!("t={t:.2}  |x1_hat - x1| = {:.1e}", est.max_abs_diff(&target));
    }
    Ok(())
}
