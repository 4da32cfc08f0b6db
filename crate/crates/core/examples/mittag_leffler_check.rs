//! Scalar relaxation `D^a x = -x` with `I^(1-a) x(0) = 1`, solved on the grid
//! and compared with `t^(a-1) E_(a,a)(-t^a)`.

use frachk::kernels::{ConvolutionWeights, FractionalOrder};
use frachk::{mittag_leffler, solve_linear, Scheme, UniformGrid};
use nalgebra::DMatrix;

fn main() -> frachk::Result<()> {
    let alpha = 0.6;
    let order = FractionalOrder::new(alpha)?;
    let minus_one = DMatrix::from_element(1, 1, -1.0);
    println!("{:>6} {:>12}", "n", "max rel err");
    for n in [256, 1024, 4096] {
        let grid = UniformGrid::new(1.0, n)?;
        let weights = ConvolutionWeights::new(alpha, grid, Scheme::Trapezoid)?;
        let traj = solve_linear(
            &weights,
            order,
            &minus_one,
            &[1.0],
            &vec![0.0; grid.len()],
            1,
            false,
        )?;
        let mut worst = 0.0_f64;
        for k in 1..=n {
            let t = grid.node(k);
            if t >= 0.1 {
                let exact = t.powf(alpha - 1.0) * mittag_leffler(alpha, alpha, -t.powf(alpha))?;
                worst = worst.max((traj.sample(k)?[0] / exact - 1.0).abs());
            }
        }
        println!("{n:>6} {worst:>12.3e}");
    }
    Ok(())
}
