//! Uncontrolled dynamics of both bundled networks: the agents' spread over
//! time, with and without the leader coupling.

use frachk::{solve_forward, solve_uncontrolled, Bundled, ControlSignal};

fn main() -> frachk::Result<()> {
    for bundled in [Bundled::Example1, Bundled::Example2] {
        let s = bundled.scenario().with_intervals(512)?;
        let grid = s.grid();
        let idle = ControlSignal::zeros(grid, s.network().dim(), s.bound())?;
        let led = solve_forward(&s, &idle)?;
        let free = solve_uncontrolled(&s)?;
        println!(
            "{} (alpha {}, singular coefficients {:?})",
            bundled.name(),
            s.alpha().value(),
            free.singular_coeff()
        );
        println!("{:>6} {:>14} {:>14}", "t", "with leader", "leaderless");
        for k in (64..=512).step_by(64) {
            println!(
                "{:>6.3} {:>14.6} {:>14.6}",
                grid.node(k),
                led.agent_diameter(k)?,
                free.agent_diameter(k)?
            );
        }
        println!();
    }
    Ok(())
}
