//! Fractional-order leader-follower opinion dynamics with bounded optimal
//! control.
//!
//! The agents follow a Hegselmann-Krause type linear system of
//! Riemann-Liouville order α ∈ (1/2, 1), steered through a virtual leader.
//! The crate discretizes the fractional integrals by product integration,
//! solves the state forward and the costate backward, and runs a relaxed
//! forward-backward sweep on the pointwise Hamiltonian minimizer.

pub mod adjoint;
pub mod error;
pub mod forward;
pub mod kernels;
pub mod model;
pub mod output;
pub mod scenario;
pub mod special;
pub mod sweep;

pub use adjoint::{solve_adjoint, terminal_condition_residual, AdjointSolver, CostateTrajectory};
pub use error::{Error, Result};
pub use forward::{
    solve_forward, solve_linear, solve_uncontrolled, ControlSignal, StateTrajectory,
};
pub use kernels::{
    rl_integral_left, rl_integral_right, ConvolutionWeights, FractionalOrder, Scheme, Start,
    UniformGrid,
};
pub use model::{build_system_matrices, cost_gradient, drift, CostParams, Network, StackedState};
pub use scenario::{parse_scenario, scenario_from_json, Bundled, Scenario};
pub use special::mittag_leffler;
pub use sweep::{
    evaluate_cost, pmp_control, pmp_pointwise_check, sweep, OptimalSolution, SweepConfig,
    SweepReport,
};
