//! Forward solve of `D^α x = A x + f(t)` with `I^{1-α} x(0) = x0`.
//!
//! The solution is split as `x(t) = c t^{α-1} + y(t)` with `c = x0 / Γ(α)`.
//! Substituting into the equivalent Volterra equation
//! `x = c t^{α-1} + I^α[A x + f]` gives
//!
//! ```text
//! y(t) = (Γ(α)/Γ(2α)) t^{2α-1} A c + I^α[A y + f](t)
//! ```
//!
//! where the singular part has been integrated in closed form with the Beta
//! function B(α, α). The remaining integral is discretized with the
//! product-integration weights; its first cell is a rectangle anchored at
//! t_1 so that node 0 is never evaluated. Every node is solved implicitly
//! with a dense LU factorization of `I - w_kk A`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{ConvolutionWeights, FractionalOrder, Start, UniformGrid};
use crate::model::{agent_matrix, build_system_matrices, StackedState};
use crate::scenario::Scenario;
use crate::special::gamma;

/// Values of the control on every grid node, with the bound it respects.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    grid: UniformGrid,
    dim: usize,
    bound: f64,
    samples: Vec<f64>,
}

/// Slack allowed on `|u_k| ≤ K` for rounding in the projection.
pub const BOUND_SLACK: f64 = 1e-12;

impl ControlSignal {
    pub fn new(grid: UniformGrid, dim: usize, bound: f64, samples: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("control dimension must be at least 1"));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::field(
                "K",
                format!("control bound must be positive, got {bound}"),
            ));
        }
        if samples.len() != grid.len() * dim {
            return Err(Error::Dimension {
                block: "control".into(),
                expected: grid.len() * dim,
                got: samples.len(),
            });
        }
        for (k, u) in samples.chunks(dim).enumerate() {
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { node: k });
            }
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > bound + BOUND_SLACK {
                return Err(Error::invalid(format!(
                    "control at node {k} has norm {norm} above the bound {bound}"
                )));
            }
        }
        Ok(Self {
            grid,
            dim,
            bound,
            samples,
        })
    }

    pub fn zeros(grid: UniformGrid, dim: usize, bound: f64) -> Result<Self> {
        Self::new(grid, dim, bound, vec![0.0; grid.len() * dim])
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.samples[k * self.dim..(k + 1) * self.dim]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `max_k |u_k|` in the Euclidean block norm.
    pub fn sup_norm(&self) -> f64 {
        self.samples
            .chunks(self.dim)
            .map(|u| u.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// `x(t) = c t^{α-1} + y(t)` sampled on a uniform grid.
///
/// `regular` holds `y` node-major with `width` entries per node; its node-0
/// entry is the limit value 0 and is never used when `c ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    grid: UniformGrid,
    alpha: FractionalOrder,
    dim: usize,
    with_leader: bool,
    singular: Vec<f64>,
    regular: Vec<f64>,
}

impl StateTrajectory {
    pub fn new(
        grid: UniformGrid,
        alpha: FractionalOrder,
        dim: usize,
        with_leader: bool,
        singular: Vec<f64>,
        regular: Vec<f64>,
    ) -> Result<Self> {
        let width = singular.len();
        if dim == 0 || width == 0 || !width.is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "state width {width} is not a multiple of the block dimension {dim}"
            )));
        }
        if regular.len() != width * grid.len() {
            return Err(Error::Dimension {
                block: "regular samples".into(),
                expected: width * grid.len(),
                got: regular.len(),
            });
        }
        if let Some(i) = singular.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "singular coefficient {i} is not finite"
            )));
        }
        if let Some(i) = regular.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: i / width });
        }
        Ok(Self {
            grid,
            alpha,
            dim,
            with_leader,
            singular,
            regular,
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

    /// Whether block 0 is the leader.
    pub fn with_leader(&self) -> bool {
        self.with_leader
    }

    /// Number of entries per node.
    pub fn width(&self) -> usize {
        self.singular.len()
    }

    /// Coefficient `c = x0 / Γ(α)` of the `t^{α-1}` mode.
    pub fn singular_coeff(&self) -> &[f64] {
        &self.singular
    }

    pub fn is_regular(&self) -> bool {
        self.singular.iter().all(|&c| c == 0.0)
    }

    /// Regular remainder `y_k`.
    pub fn regular_at(&self, k: usize) -> &[f64] {
        let w = self.width();
        &self.regular[k * w..(k + 1) * w]
    }

    pub fn regular_samples(&self) -> &[f64] {
        &self.regular
    }

    fn check_node(&self, k: usize) -> Result<()> {
        if k > self.grid.intervals() {
            return Err(Error::NodeOutOfRange {
                index: k,
                last: self.grid.intervals(),
            });
        }
        if k == 0 && !self.is_regular() {
            return Err(Error::SingularNode);
        }
        Ok(())
    }

    /// `x(t_k)` including the singular term.
    pub fn sample(&self, k: usize) -> Result<Vec<f64>> {
        self.check_node(k)?;
        let y = self.regular_at(k);
        if k == 0 {
            return Ok(y.to_vec());
        }
        let factor = self.grid.node(k).powf(self.alpha.value() - 1.0);
        Ok(self
            .singular
            .iter()
            .zip(y)
            .map(|(c, y)| c * factor + y)
            .collect())
    }

    /// `x(t_k)` as a stacked leader/agent state.
    pub fn sample_state(&self, k: usize) -> Result<StackedState> {
        if !self.with_leader {
            return Err(Error::invalid(
                "trajectory has no leader block; use sample() or agents_at()",
            ));
        }
        StackedState::new(self.dim, self.sample(k)?)
    }

    /// Agent blocks at node `k`, leader excluded.
    pub fn agents_at(&self, k: usize) -> Result<Vec<Vec<f64>>> {
        let x = self.sample(k)?;
        let skip = usize::from(self.with_leader);
        Ok(x.chunks(self.dim).skip(skip).map(<[f64]>::to_vec).collect())
    }

    /// Largest distance between two agents at node `k`.
    pub fn agent_diameter(&self, k: usize) -> Result<f64> {
        let agents = self.agents_at(k)?;
        let mut best = 0.0_f64;
        for (i, a) in agents.iter().enumerate() {
            for b in &agents[i + 1..] {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                best = best.max(d2);
            }
        }
        Ok(best.sqrt())
    }
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Implicit marching for `y_k = known_k + Σ_j W_{k,j} (M y_j + z_j)`.
///
/// `known` and `forcing` are node-major with `M.nrows()` entries per node.
/// With a regular start `y_0 = known_0`; with a singular start node 0 is
/// skipped and `y_0` is stored as 0.
pub(crate) fn march(
    weights: &ConvolutionWeights,
    start: Start,
    matrix: &DMatrix<f64>,
    known: &[f64],
    forcing: &[f64],
) -> Result<Vec<f64>> {
    let m = matrix.nrows();
    let n = weights.grid().intervals();
    debug_assert_eq!(known.len(), (n + 1) * m);
    debug_assert_eq!(forcing.len(), (n + 1) * m);

    let mut y = vec![0.0; (n + 1) * m];
    // integrand r_j = M y_j + z_j
    let mut integrand = vec![0.0; (n + 1) * m];
    if start == Start::Regular {
        y[..m].copy_from_slice(&known[..m]);
        let r0 = matrix * DVector::from_column_slice(&y[..m]);
        for c in 0..m {
            integrand[c] = r0[c] + forcing[c];
        }
    }

    let identity = DMatrix::<f64>::identity(m, m);
    let mut cached: Option<(f64, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)> = None;
    let mut history = vec![0.0; m];
    let h = weights.grid().step();

    for k in 1..=n {
        let wkk = weights.diagonal(k, start);
        let refresh = cached.as_ref().is_none_or(|(w, _)| *w != wkk);
        if refresh {
            let lu = (&identity - matrix * wkk).lu();
            if !lu.is_invertible() {
                return Err(Error::SingularStep {
                    node: k,
                    step: h,
                    matrix_norm: frobenius(matrix),
                });
            }
            cached = Some((wkk, lu));
        }
        let (_, lu) = cached.as_ref().expect("factorization cached above");

        weights.history(k, start, &integrand, m, &mut history);
        let zk = &forcing[k * m..(k + 1) * m];
        let rhs = DVector::from_iterator(
            m,
            (0..m).map(|c| known[k * m + c] + history[c] + wkk * zk[c]),
        );
        let yk = lu.solve(&rhs).ok_or(Error::SingularStep {
            node: k,
            step: h,
            matrix_norm: frobenius(matrix),
        })?;
        if yk.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { node: k });
        }
        let rk = matrix * &yk;
        for c in 0..m {
            y[k * m + c] = yk[c];
            integrand[k * m + c] = rk[c] + zk[c];
        }
    }
    Ok(y)
}

/// Largest node residual of the discrete equation solved by [`march`].
pub(crate) fn march_residual(
    weights: &ConvolutionWeights,
    start: Start,
    matrix: &DMatrix<f64>,
    known: &[f64],
    forcing: &[f64],
    y: &[f64],
) -> f64 {
    let m = matrix.nrows();
    let n = weights.grid().intervals();
    let first = match start {
        Start::Regular => 0,
        Start::Singular => 1,
    };
    let integrand: Vec<f64> = (0..=n)
        .flat_map(|j| {
            let r = matrix * DVector::from_column_slice(&y[j * m..(j + 1) * m]);
            (0..m).map(move |c| r[c] + forcing[j * m + c])
        })
        .collect();
    let mut worst = 0.0_f64;
    for k in first.max(1)..=n {
        for c in 0..m {
            let sum: f64 = (first..=k)
                .map(|j| weights.start_weight(k, j, start) * integrand[j * m + c])
                .sum();
            worst = worst.max((y[k * m + c] - known[k * m + c] - sum).abs());
        }
    }
    worst
}

/// Known term `(Γ(α)/Γ(2α)) t^{2α-1} A c` at every node (zero at node 0).
fn singular_drift(
    grid: &UniformGrid,
    alpha: f64,
    matrix: &DMatrix<f64>,
    coeff: &[f64],
) -> Vec<f64> {
    let m = coeff.len();
    let ac = matrix * DVector::from_column_slice(coeff);
    let scale = gamma(alpha) / gamma(2.0 * alpha);
    let mut known = vec![0.0; grid.len() * m];
    for k in 1..=grid.intervals() {
        let factor = scale * grid.node(k).powf(2.0 * alpha - 1.0);
        for c in 0..m {
            known[k * m + c] = factor * ac[c];
        }
    }
    known
}

/// General linear solve `D^α x = A x + f`, `I^{1-α} x(0) = x0`.
///
/// `forcing` holds `f(t_k)` node-major; its node-0 entry is never read.
/// `dim` and `with_leader` only describe how the result is laid out.
pub fn solve_linear(
    weights: &ConvolutionWeights,
    alpha: FractionalOrder,
    matrix: &DMatrix<f64>,
    x0: &[f64],
    forcing: &[f64],
    dim: usize,
    with_leader: bool,
) -> Result<StateTrajectory> {
    let m = matrix.nrows();
    if matrix.ncols() != m {
        return Err(Error::invalid("system matrix must be square"));
    }
    if x0.len() != m {
        return Err(Error::Dimension {
            block: "x0".into(),
            expected: m,
            got: x0.len(),
        });
    }
    let grid = *weights.grid();
    if forcing.len() != grid.len() * m {
        return Err(Error::Dimension {
            block: "forcing".into(),
            expected: grid.len() * m,
            got: forcing.len(),
        });
    }
    if (weights.order() - alpha.value()).abs() > 0.0 {
        return Err(Error::invalid(format!(
            "weights built for order {} but alpha is {}",
            weights.order(),
            alpha.value()
        )));
    }
    let a = alpha.value();
    let coeff: Vec<f64> = x0.iter().map(|v| v / gamma(a)).collect();
    let known = singular_drift(&grid, a, matrix, &coeff);
    let regular = march(weights, Start::Singular, matrix, &known, forcing)?;
    StateTrajectory::new(grid, alpha, dim, with_leader, coeff, regular)
}

/// Residual of a [`solve_linear`] result plugged back into its discrete equation.
pub fn linear_residual(
    weights: &ConvolutionWeights,
    matrix: &DMatrix<f64>,
    forcing: &[f64],
    traj: &StateTrajectory,
) -> f64 {
    let known = singular_drift(
        weights.grid(),
        traj.alpha().value(),
        matrix,
        traj.singular_coeff(),
    );
    march_residual(
        weights,
        Start::Singular,
        matrix,
        &known,
        forcing,
        traj.regular_samples(),
    )
}

/// `B u` laid out node-major over the stacked state.
pub(crate) fn control_forcing(state_len: usize, control: &ControlSignal) -> Vec<f64> {
    let d = control.dim();
    let nodes = control.grid().len();
    let mut forcing = vec![0.0; nodes * state_len];
    for k in 0..nodes {
        forcing[k * state_len..k * state_len + d].copy_from_slice(control.at(k));
    }
    forcing
}

/// Controlled leader-agent system driven by `control`.
pub fn solve_forward(scenario: &Scenario, control: &ControlSignal) -> Result<StateTrajectory> {
    let weights = scenario.weights()?;
    solve_forward_with(scenario, &weights, control)
}

pub(crate) fn solve_forward_with(
    scenario: &Scenario,
    weights: &ConvolutionWeights,
    control: &ControlSignal,
) -> Result<StateTrajectory> {
    if control.grid() != &scenario.grid() {
        return Err(Error::GridMismatch(format!(
            "control has {} intervals over T = {}, scenario has {} over T = {}",
            control.grid().intervals(),
            control.grid().horizon(),
            scenario.grid().intervals(),
            scenario.grid().horizon()
        )));
    }
    let net = scenario.network();
    if control.dim() != net.dim() {
        return Err(Error::Dimension {
            block: "control".into(),
            expected: net.dim(),
            got: control.dim(),
        });
    }
    let sys = build_system_matrices(net);
    let forcing = control_forcing(net.state_len(), control);
    solve_linear(
        weights,
        scenario.alpha(),
        &sys.a,
        &scenario.stacked_x0(),
        &forcing,
        net.dim(),
        true,
    )
}

/// Leaderless comparison system: agents only, no couplings to `x_0`, no control.
pub fn solve_uncontrolled(scenario: &Scenario) -> Result<StateTrajectory> {
    let weights = scenario.weights()?;
    let net = scenario.network();
    let a = agent_matrix(net);
    let x0: Vec<f64> = scenario.agents_x0().concat();
    let forcing = vec![0.0; scenario.grid().len() * x0.len()];
    solve_linear(
        &weights,
        scenario.alpha(),
        &a,
        &x0,
        &forcing,
        net.dim(),
        false,
    )
}
