//! Hegselmann-Krause dynamics with a controlled virtual leader.
//!
//! The stacked state is `x = (x_0, x_1, ..., x_N)` with `x_0` the leader and
//! each block of length `d`. The leader follows `D^α x_0 = u`; agent `i`
//! follows `D^α x_i = Σ_j a_ij (x_j - x_i) + c_i (x_0 - x_i)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Interaction weights between agents and their couplings to the leader.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    dim: usize,
    weights: Vec<Vec<f64>>,
    couplings: Vec<f64>,
}

impl Network {
    pub fn new(dim: usize, weights: Vec<Vec<f64>>, couplings: Vec<f64>) -> Result<Self> {
        let agents = couplings.len();
        if agents == 0 {
            return Err(Error::field("couplings", "need at least one agent"));
        }
        if dim == 0 {
            return Err(Error::field("dim", "state dimension must be at least 1"));
        }
        if weights.len() != agents {
            return Err(Error::field(
                "weights",
                format!(
                    "expected {agents} rows to match couplings, got {}",
                    weights.len()
                ),
            ));
        }
        for (i, row) in weights.iter().enumerate() {
            if row.len() != agents {
                return Err(Error::field(
                    format!("weights[{i}]"),
                    format!("expected {agents} entries, got {}", row.len()),
                ));
            }
            for (j, &a) in row.iter().enumerate() {
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::field(
                        format!("weights[{i}][{j}]"),
                        format!("must be finite and non-negative, got {a}"),
                    ));
                }
            }
            if row[i] != 0.0 {
                return Err(Error::field(
                    format!("weights[{i}][{i}]"),
                    format!("self-influence must be 0, got {}", row[i]),
                ));
            }
        }
        for (i, &c) in couplings.iter().enumerate() {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::field(
                    format!("couplings[{i}]"),
                    format!("must be finite and non-negative, got {c}"),
                ));
            }
        }
        Ok(Self {
            dim,
            weights,
            couplings,
        })
    }

    /// Number of agents `N` (the leader is not counted).
    pub fn agents(&self) -> usize {
        self.couplings.len()
    }

    /// Per-agent dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Length of a stacked state, `(N + 1) d`.
    pub fn state_len(&self) -> usize {
        (self.agents() + 1) * self.dim
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// `s_i = -(Σ_{j≠i} a_ij + c_i)` for agent `i` (zero based).
    pub fn self_term(&self, i: usize) -> f64 {
        -(self.weights[i].iter().sum::<f64>() + self.couplings[i])
    }

    /// The same network with every leader coupling removed.
    pub fn without_leader(&self) -> Self {
        Self {
            dim: self.dim,
            weights: self.weights.clone(),
            couplings: vec![0.0; self.agents()],
        }
    }
}

/// `D^α x = A x + B u` in block form.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

pub fn build_system_matrices(net: &Network) -> SystemMatrices {
    let d = net.dim();
    let n = net.agents();
    let size = net.state_len();
    let mut a = DMatrix::zeros(size, size);
    for i in 0..n {
        let row = (i + 1) * d;
        for r in 0..d {
            a[(row + r, r)] = net.couplings()[i];
            a[(row + r, row + r)] = net.self_term(i);
            for j in (0..n).filter(|&j| j != i) {
                a[(row + r, (j + 1) * d + r)] = net.weight(i, j);
            }
        }
    }
    let mut b = DMatrix::zeros(size, d);
    for r in 0..d {
        b[(r, r)] = 1.0;
    }
    SystemMatrices { a, b }
}

/// Agent-only coupling matrix `N d × N d` of the leaderless system.
pub fn agent_matrix(net: &Network) -> DMatrix<f64> {
    let d = net.dim();
    let n = net.agents();
    let free = net.without_leader();
    let mut a = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for r in 0..d {
            a[(i * d + r, i * d + r)] = free.self_term(i);
            for j in (0..n).filter(|&j| j != i) {
                a[(i * d + r, j * d + r)] = free.weight(i, j);
            }
        }
    }
    a
}

/// Blocks `x_0, ..., x_N` each of length `d`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    dim: usize,
    data: Vec<f64>,
}

impl StackedState {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() < 2 * dim || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "stacked state of length {} does not split into leader + agents of dimension {dim}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "stacked state entry {i} (block {}) is not finite",
                i / dim
            )));
        }
        Ok(Self { dim, data })
    }

    /// Builds a state from per-block vectors.
    pub fn from_blocks(blocks: &[Vec<f64>]) -> Result<Self> {
        let dim = blocks.first().map_or(0, Vec::len);
        for (i, b) in blocks.iter().enumerate() {
            if b.len() != dim {
                return Err(Error::Dimension {
                    block: format!("block {i}"),
                    expected: dim,
                    got: b.len(),
                });
            }
        }
        Self::new(dim, blocks.concat())
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of agents `N`.
    pub fn agents(&self) -> usize {
        self.data.len() / self.dim - 1
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn leader(&self) -> &[f64] {
        self.block(0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Weight `ν` of the control effort in the running cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    nu: f64,
}

impl CostParams {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > 0.0 {
            Ok(Self { nu })
        } else {
            Err(Error::field(
                "nu",
                format!("control weight must be positive, got {nu}"),
            ))
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

fn check_state(x: &StackedState, net: &Network) -> Result<()> {
    if x.dim() != net.dim() {
        return Err(Error::Dimension {
            block: "block 0".into(),
            expected: net.dim(),
            got: x.dim(),
        });
    }
    if x.agents() != net.agents() {
        return Err(Error::Dimension {
            block: format!("block {}", net.agents().min(x.agents()) + 1),
            expected: net.state_len(),
            got: x.as_slice().len(),
        });
    }
    Ok(())
}

fn check_control(u: &[f64], dim: usize) -> Result<()> {
    if u.len() != dim {
        return Err(Error::Dimension {
            block: "control".into(),
            expected: dim,
            got: u.len(),
        });
    }
    Ok(())
}

/// Right-hand side of the fractional system at one instant.
pub fn drift(x: &StackedState, u: &[f64], net: &Network) -> Result<StackedState> {
    check_state(x, net)?;
    check_control(u, net.dim())?;
    let d = net.dim();
    let mut out = vec![0.0; net.state_len()];
    out[..d].copy_from_slice(u);
    let leader = x.leader();
    for i in 0..net.agents() {
        let xi = x.block(i + 1);
        let slot = &mut out[(i + 1) * d..(i + 2) * d];
        for j in 0..net.agents() {
            let a = net.weight(i, j);
            if a != 0.0 {
                for (s, (xj, xi)) in slot.iter_mut().zip(x.block(j + 1).iter().zip(xi)) {
                    *s += a * (xj - xi);
                }
            }
        }
        let c = net.couplings()[i];
        for (s, (x0, xi)) in slot.iter_mut().zip(leader.iter().zip(xi)) {
            *s += c * (x0 - xi);
        }
    }
    Ok(StackedState::from_raw(d, out))
}

fn agent_mean(x: &StackedState) -> Vec<f64> {
    let n = x.agents();
    let mut mean = vec![0.0; x.dim()];
    for i in 1..=n {
        for (m, v) in mean.iter_mut().zip(x.block(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    mean
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// State part of the running cost,
/// `(1/(2N²)) Σ_{i,j} |x_i - x_j|² + (1/2) Σ_i |x_0 - x_i|²`.
pub fn state_cost(x: &StackedState) -> f64 {
    let n = x.agents();
    let mean = agent_mean(x);
    // Σ_{i,j} |x_i - x_j|² = 2N Σ_i |x_i - mean|²
    let spread: f64 = (1..=n).map(|i| sq_dist(x.block(i), &mean)).sum();
    let leader_gap: f64 = (1..=n).map(|i| sq_dist(x.leader(), x.block(i))).sum();
    spread / n as f64 + 0.5 * leader_gap
}

/// Control part of the running cost, `(ν/2)|u|²`.
pub fn control_cost(u: &[f64], params: CostParams) -> f64 {
    0.5 * params.nu() * u.iter().map(|v| v * v).sum::<f64>()
}

/// Full running cost `f(x, u)`.
pub fn cost_integrand(x: &StackedState, u: &[f64], params: CostParams) -> Result<f64> {
    check_control(u, x.dim())?;
    Ok(state_cost(x) + control_cost(u, params))
}

/// `∂f/∂x`; the control does not enter.
pub fn cost_gradient(x: &StackedState) -> StackedState {
    let d = x.dim();
    let n = x.agents();
    let nf = n as f64;
    let mean = agent_mean(x);
    let mut out = vec![0.0; x.as_slice().len()];
    for r in 0..d {
        out[r] = nf * x.leader()[r] - nf * mean[r];
    }
    for i in 1..=n {
        let xi = x.block(i);
        for r in 0..d {
            out[i * d + r] = 2.0 / nf * (xi[r] - mean[r]) + (xi[r] - x.leader()[r]);
        }
    }
    StackedState::from_raw(d, out)
}

/// Largest pairwise distance between agents (and optionally the leader).
pub fn consensus_diameter(x: &StackedState, include_leader: bool) -> f64 {
    let first = if include_leader { 0 } else { 1 };
    let last = x.agents();
    let mut best = 0.0_f64;
    for i in first..=last {
        for j in i + 1..=last {
            best = best.max(sq_dist(x.block(i), x.block(j)));
        }
    }
    best.sqrt()
}
