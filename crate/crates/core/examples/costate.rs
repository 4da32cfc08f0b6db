//! Costate of the Example-1 system along the zero-control trajectory. The
//! leader component is what the optimal control reacts to.

use frachk::adjoint::right_complement_integral;
use frachk::{solve_adjoint, solve_forward, terminal_condition_residual, Bundled, ControlSignal};

fn main() -> frachk::Result<()> {
    let s = Bundled::Example1.scenario().with_intervals(1024)?;
    let grid = s.grid();
    let state = solve_forward(&s, &ControlSignal::zeros(grid, 1, s.bound())?)?;
    let costate = solve_adjoint(&state, s.network())?;

    println!("{:>6} {:>12} {:>12}", "t", "lambda_0", "lambda_1");
    for k in (0..=1024).step_by(128) {
        println!(
            "{:>6.3} {:>12.6} {:>12.6}",
            grid.node(k),
            costate.leader_at(k)[0],
            costate.at(k)[1]
        );
    }
    println!("\nmax |lambda| = {:.6}", costate.max_abs());
    println!(
        "I^(1-a)_(T-)[lambda] at T: {:e}",
        terminal_condition_residual(&costate)
    );
    println!(
        "I^(1-a)_(T-)[lambda] at 0: {:?}",
        right_complement_integral(&costate, 0)
    );
    Ok(())
}
