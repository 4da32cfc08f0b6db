//! Forward-backward sweep for the bounded-control consensus problem.
//!
//! The problem is optimized in its discretized form. The cost is a fixed
//! quadrature of the state samples and control samples, and the state is
//! the product-integration solution. Each iteration solves the state
//! forward, then the exact discrete adjoint of that pair backward. The
//! adjoint yields a multiplier `λ^h` with
//! `∂J/∂u_k = ω_k (ν u_k + λ^h_0(t_k))`, so the pointwise minimizer
//! `ū_k = pmp_control(λ^h_0(t_k))` is the discrete form of the minimum
//! condition. The control moves to `(1-θ) u + θ ū` when the cost does not
//! go up; otherwise θ is halved until it drops below the floor. The cost
//! change of a trial step is read off its exact quadratic expansion, which
//! stays accurate when the change is far below the rounding level of the
//! cost itself.
//!
//! `λ^h` approximates the continuous costate from
//! [`crate::adjoint::solve_adjoint`] and agrees with it away from the
//! endpoints. The reported solution carries the continuous costate of the
//! final state.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjoint::{AdjointSolver, CostateTrajectory};
use crate::error::{Error, Result};
use crate::forward::{solve_forward_with, solve_linear, ControlSignal, StateTrajectory};
use crate::kernels::{ConvolutionWeights, Scheme, Start};
use crate::model::{
    build_system_matrices, control_cost, cost_gradient, state_cost, CostParams, Network,
    StackedState,
};
use crate::scenario::Scenario;
use crate::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    /// Initial relaxation θ of every iteration.
    pub relaxation: f64,
    pub max_iterations: usize,
    /// Stop once `|ū - u|_∞ / max(1, |ū|_∞)` falls below this.
    pub tolerance: f64,
    /// Backtracking gives up when θ would drop below this.
    pub min_relaxation: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            relaxation: 0.5,
            max_iterations: 500,
            tolerance: 1e-6,
            min_relaxation: 1e-3,
        }
    }
}

impl SweepConfig {
    pub fn validated(self) -> Result<Self> {
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::field(
                "sweep.relaxation",
                format!("must lie in (0, 1], got {}", self.relaxation),
            ));
        }
        if !(self.min_relaxation > 0.0 && self.min_relaxation <= self.relaxation) {
            return Err(Error::field(
                "sweep.min_relaxation",
                format!("must lie in (0, relaxation], got {}", self.min_relaxation),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::field("sweep.max_iterations", "must be at least 1"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::field(
                "sweep.tolerance",
                format!("must be positive, got {}", self.tolerance),
            ));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Sweep iterations performed (forward, backward and update attempts).
    pub iterations: usize,
    /// Cost of the initial control and of every accepted update.
    pub cost_history: Vec<f64>,
    /// Relative fixed-point gap at the last iteration.
    pub final_change: f64,
    pub converged: bool,
    /// Backtracking reached the floor without finding a non-increasing step.
    pub stalled: bool,
}

#[derive(Debug, Clone)]
pub struct OptimalSolution {
    pub state: StateTrajectory,
    /// Continuous costate along the final state.
    pub costate: CostateTrajectory,
    /// Discrete multiplier the final control is the pointwise minimizer of.
    pub multiplier: CostateTrajectory,
    pub control: ControlSignal,
    pub cost: f64,
    pub report: SweepReport,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizer of `(ν/2)|u|² + ⟨λ₀, u⟩` over the ball `|u| ≤ K`.
pub fn pmp_control(lambda0: &[f64], nu: f64, bound: f64) -> Vec<f64> {
    let size = norm(lambda0);
    if size <= nu * bound {
        lambda0.iter().map(|l| -l / nu).collect()
    } else {
        lambda0.iter().map(|l| -bound * l / size).collect()
    }
}

/// Node weights of the cost quadrature.
///
/// `f = ½ xᵀ G x + (ν/2)|u|²` with `x = c t^{α-1} + y` splits into
/// `½ cᵀGc t^{2α-2}` (integrated exactly), `t^{α-1} (Gc)ᵀ y` (a right
/// fractional integral at t = 0 on the product weights) and the bounded
/// remainder (composite trapezoid). The forward solve never reads `u_0`: its
/// first cell is a rectangle anchored at t_1, and the control effort is
/// integrated the same way. At the other end the state terms use a last cell
/// anchored at t_{n-1}, mirroring it. Every term stays second order in the
/// bounded part.
#[derive(Debug, Clone)]
struct CostQuadrature {
    state: Vec<f64>,
    control: Vec<f64>,
    cross: Vec<f64>,
    singular: f64,
    gamma_alpha: f64,
}

impl CostQuadrature {
    fn new(weights: &ConvolutionWeights) -> Self {
        let grid = weights.grid();
        let n = grid.intervals();
        let h = grid.step();
        let alpha = weights.order();
        let state = (0..=n)
            .map(|k| match k {
                0 => 0.5 * h,
                _ if k == n => 0.0,
                _ if k == n - 1 => 1.5 * h,
                _ => h,
            })
            .collect();
        let control = (0..=n)
            .map(|k| match k {
                0 => 0.0,
                1 => 1.5 * h,
                _ if k == n => 0.5 * h,
                _ => h,
            })
            .collect();
        // the right integral at 0 read as a left one of the reversed samples
        let cross = (0..=n)
            .map(|k| {
                if k == n {
                    0.0
                } else {
                    weights.start_weight(n, n - k, Start::Singular)
                }
            })
            .collect();
        Self {
            state,
            control,
            cross,
            singular: grid.horizon().powf(2.0 * alpha - 1.0) / (2.0 * alpha - 1.0),
            gamma_alpha: gamma(alpha),
        }
    }

    fn evaluate(
        &self,
        state: &StateTrajectory,
        control: &ControlSignal,
        params: CostParams,
    ) -> f64 {
        let d = state.dim();
        let c = StackedState::from_raw(d, state.singular_coeff().to_vec());
        let gc = cost_gradient(&c).into_vec();
        let mut total = state_cost(&c) * self.singular;
        for (k, ((ws, wu), wc)) in self
            .state
            .iter()
            .zip(&self.control)
            .zip(&self.cross)
            .enumerate()
        {
            let y = state.regular_at(k);
            let cross: f64 = gc.iter().zip(y).map(|(a, b)| a * b).sum();
            total += ws * state_cost(&StackedState::from_raw(d, y.to_vec()))
                + self.gamma_alpha * wc * cross
                + wu * control_cost(control.at(k), params);
        }
        total
    }

    /// `∂J/∂y_k`, node-major.
    fn state_sensitivity(&self, state: &StateTrajectory) -> Vec<f64> {
        let d = state.dim();
        let gc =
            cost_gradient(&StackedState::from_raw(d, state.singular_coeff().to_vec())).into_vec();
        let width = state.width();
        let mut out = vec![0.0; state.grid().len() * width];
        for k in 0..state.grid().len() {
            let gy =
                cost_gradient(&StackedState::from_raw(d, state.regular_at(k).to_vec())).into_vec();
            for c in 0..width {
                out[k * width + c] =
                    self.state[k] * gy[c] + self.gamma_alpha * self.cross[k] * gc[c];
            }
        }
        out
    }
}

fn check_cost_inputs(state: &StateTrajectory, control: &ControlSignal) -> Result<()> {
    let alpha = state.alpha().value();
    if alpha <= 0.5 {
        return Err(Error::OptimalityRange { alpha });
    }
    if control.grid() != state.grid() {
        return Err(Error::GridMismatch("control and state grids differ".into()));
    }
    if !state.with_leader() || control.dim() != state.dim() {
        return Err(Error::Dimension {
            block: "control".into(),
            expected: state.dim(),
            got: control.dim(),
        });
    }
    Ok(())
}

/// `∫_0^T f(x, u) dt` for a trajectory `x = c t^{α-1} + y`.
pub fn evaluate_cost(
    state: &StateTrajectory,
    control: &ControlSignal,
    params: CostParams,
) -> Result<f64> {
    check_cost_inputs(state, control)?;
    let weights = ConvolutionWeights::new(state.alpha().value(), *state.grid(), Scheme::Trapezoid)?;
    Ok(CostQuadrature::new(&weights).evaluate(state, control, params))
}

/// Exact adjoint of the discrete forward equations and cost quadrature.
///
/// With `y_k = known_k + Σ_{1≤j≤k} W_{kj} (A y_j + B u_j)` the multiplier
/// `η` solves `η_j = p_j + Aᵀ ζ_j`, `ζ_j = Σ_{k≥j} W_{kj} η_k`, with `p = ∂J/∂y`.
/// Then `∂J/∂u_j = ω_j ν u_j + Bᵀ ζ_j` and `λ^h_j = ζ_j / ω_j`.
fn discrete_multiplier(
    weights: &ConvolutionWeights,
    quad: &CostQuadrature,
    transposed: &DMatrix<f64>,
    state: &StateTrajectory,
) -> Result<CostateTrajectory> {
    let grid = *weights.grid();
    let n = grid.intervals();
    let m = transposed.nrows();
    let p = quad.state_sensitivity(state);
    let mut eta = vec![0.0; (n + 1) * m];
    let mut lambda = vec![0.0; (n + 1) * m];
    let identity = DMatrix::<f64>::identity(m, m);
    let mut cached: Option<(f64, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)> = None;
    let mut tail = vec![0.0; m];
    for j in (1..=n).rev() {
        tail.iter_mut().for_each(|v| *v = 0.0);
        for k in j + 1..=n {
            let w = weights.start_weight(k, j, Start::Singular);
            for c in 0..m {
                tail[c] += w * eta[k * m + c];
            }
        }
        let wjj = weights.diagonal(j, Start::Singular);
        if cached.as_ref().is_none_or(|(w, _)| *w != wjj) {
            let lu = (&identity - transposed * wjj).lu();
            if !lu.is_invertible() {
                return Err(Error::SingularStep {
                    node: j,
                    step: grid.step(),
                    matrix_norm: transposed.norm(),
                });
            }
            cached = Some((wjj, lu));
        }
        let (_, lu) = cached.as_ref().expect("factorization cached above");
        let tail_vec = DVector::from_column_slice(&tail);
        let rhs = DVector::from_column_slice(&p[j * m..(j + 1) * m]) + transposed * &tail_vec;
        let eta_j = lu.solve(&rhs).ok_or(Error::SingularStep {
            node: j,
            step: grid.step(),
            matrix_norm: transposed.norm(),
        })?;
        for c in 0..m {
            eta[j * m + c] = eta_j[c];
            lambda[j * m + c] = (wjj * eta_j[c] + tail[c]) / quad.control[j];
        }
    }
    // u_0 is never read; give it the first-cell value
    let (head, rest) = lambda.split_at_mut(m);
    head.copy_from_slice(&rest[..m]);
    CostateTrajectory::new(grid, state.alpha(), state.dim(), lambda)
}

/// Everything the sweep reuses across iterations.
struct Workspace<'a> {
    scenario: &'a Scenario,
    weights: ConvolutionWeights,
    quad: CostQuadrature,
    transposed: DMatrix<f64>,
}

impl<'a> Workspace<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self> {
        let weights = scenario.weights()?;
        let quad = CostQuadrature::new(&weights);
        let transposed = build_system_matrices(scenario.network()).a.transpose();
        Ok(Self {
            scenario,
            weights,
            quad,
            transposed,
        })
    }

    fn forward(&self, control: &ControlSignal) -> Result<(StateTrajectory, f64)> {
        let state = solve_forward_with(self.scenario, &self.weights, control)?;
        let cost = self.quad.evaluate(&state, control, self.scenario.cost());
        Ok((state, cost))
    }

    /// State response `z` to a control change `δ` (zero initial data).
    fn response(&self, delta: &[f64]) -> Result<StateTrajectory> {
        let net = self.scenario.network();
        let (d, m) = (net.dim(), net.state_len());
        let mut forcing = vec![0.0; self.scenario.grid().len() * m];
        for (k, dk) in delta.chunks(d).enumerate() {
            forcing[k * m..k * m + d].copy_from_slice(dk);
        }
        let a = self.transposed.transpose();
        solve_linear(
            &self.weights,
            self.scenario.alpha(),
            &a,
            &vec![0.0; m],
            &forcing,
            d,
            true,
        )
    }

    /// Coefficients of `J(u + θδ) - J(u) = θ L + θ² Q`. The cost is
    /// quadratic and the state affine in the control, so the expansion is
    /// exact and free of the cancellation in a difference of two costs.
    fn expansion(
        &self,
        state: &StateTrajectory,
        control: &ControlSignal,
        delta: &[f64],
        z: &StateTrajectory,
    ) -> (f64, f64) {
        let params = self.scenario.cost();
        let d = control.dim();
        let p = self.quad.state_sensitivity(state);
        let width = state.width();
        let mut linear = 0.0;
        let mut quadratic = 0.0;
        for k in 0..state.grid().len() {
            let zk = z.regular_at(k);
            let dk = &delta[k * d..(k + 1) * d];
            let wu = self.quad.control[k];
            linear += p[k * width..(k + 1) * width]
                .iter()
                .zip(zk)
                .map(|(a, b)| a * b)
                .sum::<f64>();
            linear += wu
                * params.nu()
                * control
                    .at(k)
                    .iter()
                    .zip(dk)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            quadratic += self.quad.state[k] * state_cost(&StackedState::from_raw(d, zk.to_vec()))
                + wu * control_cost(dk, params);
        }
        (linear, quadratic)
    }

    fn candidate(&self, state: &StateTrajectory) -> Result<(CostateTrajectory, ControlSignal)> {
        let multiplier = discrete_multiplier(&self.weights, &self.quad, &self.transposed, state)?;
        let grid = self.scenario.grid();
        let (nu, bound) = (self.scenario.nu(), self.scenario.bound());
        let samples = (0..grid.len())
            .flat_map(|k| pmp_control(multiplier.leader_at(k), nu, bound))
            .collect();
        let control = ControlSignal::new(grid, self.scenario.network().dim(), bound, samples)?;
        Ok((multiplier, control))
    }
}

fn relative_gap(current: &ControlSignal, target: &ControlSignal) -> f64 {
    let d = current.dim();
    let diff = current
        .samples()
        .chunks(d)
        .zip(target.samples().chunks(d))
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    diff / target.sup_norm().max(1.0)
}

fn blend(current: &ControlSignal, target: &ControlSignal, theta: f64) -> Result<ControlSignal> {
    let samples = current
        .samples()
        .iter()
        .zip(target.samples())
        .map(|(u, v)| (1.0 - theta) * u + theta * v)
        .collect();
    ControlSignal::new(*current.grid(), current.dim(), current.bound(), samples)
}

/// Runs the sweep from `u ≡ 0`.
pub fn sweep(scenario: &Scenario, config: &SweepConfig) -> Result<OptimalSolution> {
    let config = config.validated()?;
    let ws = Workspace::new(scenario)?;
    let mut control =
        ControlSignal::zeros(scenario.grid(), scenario.network().dim(), scenario.bound())?;
    let (mut state, mut cost) = ws.forward(&control)?;
    if !cost.is_finite() {
        return Err(Error::NonFiniteCost { iteration: 0 });
    }
    let mut report = SweepReport {
        iterations: 0,
        cost_history: vec![cost],
        final_change: f64::INFINITY,
        converged: false,
        stalled: false,
    };
    let multiplier = loop {
        report.iterations += 1;
        let iteration = report.iterations;
        let (multiplier, target) = ws.candidate(&state)?;
        report.final_change = relative_gap(&control, &target);
        if report.final_change < config.tolerance {
            report.converged = true;
            break multiplier;
        }
        if iteration > config.max_iterations {
            // the last pass only measured the gap
            report.iterations -= 1;
            break multiplier;
        }

        let delta: Vec<f64> = target
            .samples()
            .iter()
            .zip(control.samples())
            .map(|(t, u)| t - u)
            .collect();
        let z = ws.response(&delta)?;
        let (linear, quadratic) = ws.expansion(&state, &control, &delta, &z);
        if !(linear.is_finite() && quadratic.is_finite()) {
            return Err(Error::NonFiniteCost { iteration });
        }
        let mut theta = config.relaxation;
        let mut accepted = None;
        while theta >= config.min_relaxation {
            let change = theta * linear + theta * theta * quadratic;
            if change <= 0.0 {
                accepted = Some((theta, change));
                break;
            }
            theta *= 0.5;
        }
        match accepted {
            Some((theta, change)) => {
                control = blend(&control, &target, theta)?;
                state = solve_forward_with(scenario, &ws.weights, &control)?;
                cost += change;
                report.cost_history.push(cost);
            }
            None => {
                report.stalled = true;
                break multiplier;
            }
        }
    };
    let costate = AdjointSolver::new(ws.weights.clone())?.solve(&state, scenario.network())?;
    Ok(OptimalSolution {
        state,
        costate,
        multiplier,
        control,
        cost,
        report,
    })
}

/// Relative change `|ū - u|_∞ / max(1, |ū|_∞)` one more sweep pass would
/// ask of `control`.
pub fn fixed_point_gap(scenario: &Scenario, control: &ControlSignal) -> Result<f64> {
    let ws = Workspace::new(scenario)?;
    let (state, _) = ws.forward(control)?;
    let (_, target) = ws.candidate(&state)?;
    Ok(relative_gap(control, &target))
}

/// Cost of the admissible competitor `u ≡ 0`.
pub fn zero_control_cost(scenario: &Scenario) -> Result<f64> {
    let ws = Workspace::new(scenario)?;
    let control =
        ControlSignal::zeros(scenario.grid(), scenario.network().dim(), scenario.bound())?;
    Ok(ws.forward(&control)?.1)
}

/// Points of the control set used by the brute-force Hamiltonian check.
fn ball_samples(dim: usize, bound: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    match dim {
        1 => (0..10_000)
            .map(|i| vec![-bound + 2.0 * bound * i as f64 / 9_999.0])
            .collect(),
        2 => {
            let mut pts = Vec::with_capacity(10_000);
            for i in 0..100 {
                let r = bound * i as f64 / 99.0;
                for j in 0..100 {
                    let phi = std::f64::consts::TAU * j as f64 / 100.0;
                    pts.push(vec![r * phi.cos(), r * phi.sin()]);
                }
            }
            pts
        }
        _ => (0..10_000)
            .map(|_| loop {
                let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-bound..=bound)).collect();
                if norm(&p) <= bound {
                    break p;
                }
            })
            .collect(),
    }
}

/// Full Hamiltonian `f(x, u) + ⟨λ, A x + B u⟩` at one instant.
fn hamiltonian(x: &StackedState, lambda: &[f64], ax: &[f64], u: &[f64], params: CostParams) -> f64 {
    let drift: f64 = lambda.iter().zip(ax).map(|(l, v)| l * v).sum();
    let steer: f64 = lambda.iter().zip(u).map(|(l, v)| l * v).sum();
    state_cost(x) + control_cost(u, params) + drift + steer
}

/// Largest scaled gap `(H(u*) - min_M H) / (1 + |H(u*)|)` over sampled
/// nodes, with the minimum taken over a 10⁴-point discretization of the
/// control ball. Nodes are drawn with a fixed seed; `samples ≥ n` checks
/// every node from 1 to n.
pub fn pmp_pointwise_check(
    solution: &OptimalSolution,
    net: &Network,
    params: CostParams,
    samples: usize,
) -> f64 {
    let grid = *solution.state.grid();
    let n = grid.intervals();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let nodes: Vec<usize> = if samples >= n {
        (1..=n).collect()
    } else {
        (0..samples).map(|_| rng.gen_range(1..=n)).collect()
    };
    let ball = ball_samples(net.dim(), solution.control.bound(), &mut rng);
    let a = build_system_matrices(net).a;
    nodes
        .iter()
        .map(|&k| {
            let x = solution
                .state
                .sample_state(k)
                .expect("nodes past 0 are regular");
            let ax = &a * nalgebra::DVector::from_column_slice(x.as_slice());
            let lambda = solution.costate.at(k);
            let h = |u: &[f64]| hamiltonian(&x, lambda, ax.as_slice(), u, params);
            let at_control = h(solution.control.at(k));
            let best = ball.iter().map(|u| h(u)).fold(f64::INFINITY, f64::min);
            (at_control - best).max(0.0) / (1.0 + at_control.abs())
        })
        .fold(0.0, f64::max)
}
