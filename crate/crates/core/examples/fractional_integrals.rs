//! Left and right Riemann-Liouville integrals of sampled functions, checked
//! against the power rule.

use frachk::special::gamma;
use frachk::{rl_integral_left, rl_integral_right, Scheme, UniformGrid};

fn main() -> frachk::Result<()> {
    let grid = UniformGrid::new(1.0, 64)?;
    let f: Vec<f64> = grid.nodes().map(|t| t * t).collect();

    println!("I^a[s^2](1) = 2 / Gamma(3 + a)");
    println!(
        "{:>5} {:>14} {:>14} {:>14}",
        "a", "rectangle", "trapezoid", "exact"
    );
    for alpha in [0.3, 0.5, 0.7, 0.9, 1.0, 1.5] {
        let rect = rl_integral_left(&f, alpha, grid, Scheme::Rectangle)?;
        let trap = rl_integral_left(&f, alpha, grid, Scheme::Trapezoid)?;
        let exact = 2.0 / gamma(3.0 + alpha);
        println!(
            "{alpha:>5} {:>14.10} {:>14.10} {exact:>14.10}",
            rect[64], trap[64]
        );
    }

    // the right integral integrates toward T; for f = T - s it mirrors the above
    let g: Vec<f64> = grid.nodes().map(|t| 1.0 - t).collect();
    let right = rl_integral_right(&g, 0.5, grid, Scheme::Trapezoid)?;
    println!(
        "\nI^0.5_(T-)[T - s](0) = {:.12}, closed form {:.12}",
        right[0],
        1.0 / gamma(2.5)
    );
    Ok(())
}
