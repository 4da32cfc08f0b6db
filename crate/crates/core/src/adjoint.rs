//! Backward costate solve `λ(t) = I^α_{T-}[Aᵀ λ + f_x(x)](t)`.
//!
//! The cost gradient is linear, `f_x(x) = G x`, so along a trajectory
//! `x = c t^{α-1} + y` the source splits into `G c t^{α-1}` and `G y`. The
//! singular piece is integrated exactly through the profile
//! `S(t) = I^α_{T-}[s^{α-1}](t)`, which is finite on the whole interval for
//! α > 1/2. What remains is mirrored with `s = T - t` into a left-sided
//! Volterra equation and marched with the forward weights from a regular
//! start, since `λ(T) = 0`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::forward::{march, march_residual, StateTrajectory};
use crate::kernels::{ConvolutionWeights, FractionalOrder, Scheme, Start, UniformGrid};
use crate::model::{build_system_matrices, cost_gradient, Network, StackedState};
use crate::special::{gamma, gauss_legendre};

/// Costate samples `λ_k`, `k = 0..=n`, node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostateTrajectory {
    grid: UniformGrid,
    alpha: FractionalOrder,
    dim: usize,
    samples: Vec<f64>,
}

impl CostateTrajectory {
    pub fn new(
        grid: UniformGrid,
        alpha: FractionalOrder,
        dim: usize,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || samples.is_empty() || !samples.len().is_multiple_of(grid.len() * dim) {
            return Err(Error::Dimension {
                block: "costate samples".into(),
                expected: grid.len() * dim,
                got: samples.len(),
            });
        }
        let width = samples.len() / grid.len();
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i / width });
        }
        Ok(Self {
            grid,
            alpha,
            dim,
            samples,
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.samples.len() / self.grid.len()
    }

    pub fn at(&self, k: usize) -> &[f64] {
        let w = self.width();
        &self.samples[k * w..(k + 1) * w]
    }

    /// Leader block `λ_0(t_k)`, the only part that reaches the control.
    pub fn leader_at(&self, k: usize) -> &[f64] {
        &self.at(k)[..self.dim]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

const PANEL_POINTS: usize = 20;

/// `I^α_{T-}[s^{α-1}](t)` for `0 ≤ t ≤ T`.
///
/// With `q = (s - t)^α` the integral becomes
/// `(1/Γ(α+1)) ∫_0^{(T-t)^α} (t + q^{1/α})^{α-1} dq`, whose integrand is
/// bounded. It changes character around `q ≈ t^α`, so the range is cut
/// into panels halving toward 0 and each panel gets a Gauss-Legendre rule.
fn singular_profile_at(alpha: f64, horizon: f64, t: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    if t >= horizon {
        return 0.0;
    }
    if t == 0.0 {
        return horizon.powf(2.0 * alpha - 1.0) / ((2.0 * alpha - 1.0) * gamma(alpha));
    }
    let top = (horizon - t).powf(alpha);
    let floor = 1e-3 * top.min(t.powf(alpha));
    let f = |q: f64| (t + q.powf(1.0 / alpha)).powf(alpha - 1.0);
    let (nodes, weights) = rule;
    let panel = |a: f64, b: f64| {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * nodes
            .iter()
            .zip(weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    };
    let mut total = 0.0;
    let mut hi = top;
    while hi > floor {
        let lo = 0.5 * hi;
        total += panel(lo, hi);
        hi = lo;
    }
    total += panel(0.0, hi);
    total / gamma(alpha + 1.0)
}

/// Backward solver bound to one grid and order. Building it precomputes the
/// singular profile, so a sweep that solves many costates reuses it.
#[derive(Debug, Clone)]
pub struct AdjointSolver {
    weights: ConvolutionWeights,
    alpha: FractionalOrder,
    profile: Vec<f64>,
}

impl AdjointSolver {
    pub fn new(weights: ConvolutionWeights) -> Result<Self> {
        if weights.scheme() != Scheme::Trapezoid {
            return Err(Error::invalid("the costate solve uses trapezoid weights"));
        }
        let alpha = FractionalOrder::for_control(weights.order())?;
        let grid = *weights.grid();
        let rule = gauss_legendre(PANEL_POINTS);
        let a = alpha.value();
        let profile = (0..=grid.intervals())
            .map(|k| {
                if k == grid.intervals() {
                    0.0
                } else {
                    singular_profile_at(a, grid.horizon(), grid.node(k), &rule)
                }
            })
            .collect();
        Ok(Self {
            weights,
            alpha,
            profile,
        })
    }

    pub fn weights(&self) -> &ConvolutionWeights {
        &self.weights
    }

    /// `I^α_{T-}[s^{α-1}](t_k)` for every node.
    pub fn singular_profile(&self) -> &[f64] {
        &self.profile
    }

    fn mirrored_inputs(
        &self,
        singular_source: &[f64],
        regular_source: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let m = singular_source.len();
        let n = self.weights.grid().intervals();
        let mut known = vec![0.0; (n + 1) * m];
        let mut forcing = vec![0.0; (n + 1) * m];
        for k in 0..=n {
            let src = n - k;
            for c in 0..m {
                known[k * m + c] = singular_source[c] * self.profile[src];
                forcing[k * m + c] = regular_source[src * m + c];
            }
        }
        (known, forcing)
    }

    fn check_inputs(
        &self,
        transposed: &DMatrix<f64>,
        singular_source: &[f64],
        regular_source: &[f64],
    ) -> Result<()> {
        let m = transposed.nrows();
        if transposed.ncols() != m {
            return Err(Error::invalid("costate matrix must be square"));
        }
        if singular_source.len() != m {
            return Err(Error::Dimension {
                block: "singular source".into(),
                expected: m,
                got: singular_source.len(),
            });
        }
        let len = self.weights.grid().len() * m;
        if regular_source.len() != len {
            return Err(Error::Dimension {
                block: "regular source".into(),
                expected: len,
                got: regular_source.len(),
            });
        }
        if let Some(i) = regular_source.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i / m });
        }
        Ok(())
    }

    /// Solves `λ = I^α_{T-}[M λ + g s^{α-1} + r]` where `M = transposed`,
    /// `g = singular_source` and `r` is sampled node-major.
    pub fn solve_linear(
        &self,
        transposed: &DMatrix<f64>,
        singular_source: &[f64],
        regular_source: &[f64],
        dim: usize,
    ) -> Result<CostateTrajectory> {
        self.check_inputs(transposed, singular_source, regular_source)?;
        let m = transposed.nrows();
        let n = self.weights.grid().intervals();
        let (known, forcing) = self.mirrored_inputs(singular_source, regular_source);
        let mirrored = march(&self.weights, Start::Regular, transposed, &known, &forcing)?;
        let mut samples = vec![0.0; (n + 1) * m];
        for k in 0..=n {
            samples[k * m..(k + 1) * m].copy_from_slice(&mirrored[(n - k) * m..(n - k + 1) * m]);
        }
        CostateTrajectory::new(*self.weights.grid(), self.alpha, dim, samples)
    }

    /// Largest node residual of the mirrored discrete equation.
    pub fn linear_residual(
        &self,
        transposed: &DMatrix<f64>,
        singular_source: &[f64],
        regular_source: &[f64],
        costate: &CostateTrajectory,
    ) -> f64 {
        let m = transposed.nrows();
        let n = self.weights.grid().intervals();
        let (known, forcing) = self.mirrored_inputs(singular_source, regular_source);
        let mut mirrored = vec![0.0; (n + 1) * m];
        for k in 0..=n {
            mirrored[k * m..(k + 1) * m].copy_from_slice(costate.at(n - k));
        }
        march_residual(
            &self.weights,
            Start::Regular,
            transposed,
            &known,
            &forcing,
            &mirrored,
        )
    }

    fn sources(
        &self,
        state: &StateTrajectory,
        net: &Network,
    ) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
        if state.grid() != self.weights.grid() {
            return Err(Error::GridMismatch(format!(
                "state has {} intervals over T = {}, solver has {} over T = {}",
                state.grid().intervals(),
                state.grid().horizon(),
                self.weights.grid().intervals(),
                self.weights.grid().horizon()
            )));
        }
        if state.alpha() != self.alpha {
            return Err(Error::invalid(format!(
                "state solved with alpha = {}, solver built for {}",
                state.alpha().value(),
                self.alpha.value()
            )));
        }
        if !state.with_leader() || state.dim() != net.dim() || state.width() != net.state_len() {
            return Err(Error::Dimension {
                block: "state".into(),
                expected: net.state_len(),
                got: state.width(),
            });
        }
        let d = net.dim();
        let transposed = build_system_matrices(net).a.transpose();
        let singular =
            cost_gradient(&StackedState::from_raw(d, state.singular_coeff().to_vec())).into_vec();
        let regular = state
            .regular_samples()
            .chunks(net.state_len())
            .flat_map(|y| cost_gradient(&StackedState::from_raw(d, y.to_vec())).into_vec())
            .collect();
        Ok((transposed, singular, regular))
    }

    /// Costate of the leader-agent problem along `state`.
    pub fn solve(&self, state: &StateTrajectory, net: &Network) -> Result<CostateTrajectory> {
        let (transposed, singular, regular) = self.sources(state, net)?;
        self.solve_linear(&transposed, &singular, &regular, net.dim())
    }

    /// Residual of [`AdjointSolver::solve`] output in its discrete equation.
    pub fn residual(
        &self,
        state: &StateTrajectory,
        net: &Network,
        costate: &CostateTrajectory,
    ) -> Result<f64> {
        let (transposed, singular, regular) = self.sources(state, net)?;
        Ok(self.linear_residual(&transposed, &singular, &regular, costate))
    }
}

/// One-off costate solve; builds the weights and the singular profile.
pub fn solve_adjoint(state: &StateTrajectory, net: &Network) -> Result<CostateTrajectory> {
    let alpha = FractionalOrder::for_control(state.alpha().value())?;
    let weights = ConvolutionWeights::new(alpha.value(), *state.grid(), Scheme::Trapezoid)?;
    AdjointSolver::new(weights)?.solve(state, net)
}

/// Norm of the discrete `I^{1-α}_{T-}[λ]` at `t = T`.
pub fn terminal_condition_residual(costate: &CostateTrajectory) -> f64 {
    let at_end = right_complement_integral(costate, costate.grid().intervals());
    at_end.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Discrete `I^{1-α}_{T-}[λ](t_k)`, one entry per component.
pub fn right_complement_integral(costate: &CostateTrajectory, k: usize) -> Vec<f64> {
    let grid = *costate.grid();
    let weights = ConvolutionWeights::new(
        costate.alpha().complement().value(),
        grid,
        Scheme::Trapezoid,
    )
    .expect("complement order is positive");
    let n = grid.intervals();
    let width = costate.width();
    // right integral at t_k = left integral of the reversed samples at n - k
    let target = n - k;
    (0..width)
        .map(|c| {
            (0..=target)
                .map(|j| weights.start_weight(target, j, Start::Regular) * costate.at(n - j)[c])
                .sum()
        })
        .collect()
}
