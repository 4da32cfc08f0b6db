//! Forward-backward sweep on both bundled scenarios, with the PMP check and
//! the comparison against doing nothing.

use frachk::sweep::zero_control_cost;
use frachk::{pmp_pointwise_check, sweep, Bundled};

fn main() -> frachk::Result<()> {
    for bundled in [Bundled::Example1, Bundled::Example2] {
        for alpha in [0.6, 0.9] {
            let s = bundled.scenario().with_alpha(alpha)?;
            let sol = sweep(&s, s.sweep())?;
            let history = &sol.report.cost_history;
            println!(
                "{} alpha {alpha}: {} iterations, converged {}, cost {:.6} (first iterate {:.6}, u = 0 gives {:.6})",
                bundled.name(),
                sol.report.iterations,
                sol.report.converged,
                sol.cost,
                history[0],
                zero_control_cost(&s)?
            );
            let grid = s.grid();
            let samples: Vec<String> = (0..=8)
                .map(|i| format!("{:+.3}", sol.control.at(i * grid.intervals() / 8)[0]))
                .collect();
            println!("  u at t = 0, T/8, ..., T: {}", samples.join(" "));
            println!(
                "  pmp violation {:.2e}",
                pmp_pointwise_check(&sol, s.network(), s.cost(), 256)
            );
        }
    }
    Ok(())
}
