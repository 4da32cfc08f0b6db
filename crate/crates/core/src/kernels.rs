//! Product-integration weights for the Riemann-Liouville integral on a
//! uniform grid, and left/right integral evaluation built on them.
//!
//! For a target node t_k the left integral
//! `(1/Γ(α)) ∫_0^{t_k} (t_k - s)^{α-1} f(s) ds` is replaced by
//! `Σ_j w_{k,j} f(t_j)`, where the kernel is integrated exactly against a
//! piecewise-constant (rectangle) or piecewise-linear (trapezoid)
//! interpolant of `f`. Away from the first column the weights only depend on
//! `k - j`, so one row of `n` coefficients plus the boundary column is all
//! that is stored.

use crate::error::{Error, Result};
use crate::special::gamma;

/// Fractional order α of the model, restricted to the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::field(
                "alpha",
                format!("must lie in (0, 1), got {alpha}"),
            ))
        }
    }

    /// Order admissible for the optimal control problem: α ∈ (1/2, 1).
    pub fn for_control(alpha: f64) -> Result<Self> {
        let order = Self::new(alpha)?;
        if alpha <= 0.5 {
            return Err(Error::OptimalityRange { alpha });
        }
        Ok(order)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The complementary order 1 - α.
    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

/// Nodes `t_k = k T / n`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    horizon: f64,
    intervals: usize,
}

impl UniformGrid {
    pub fn new(horizon: f64, intervals: usize) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::field(
                "n",
                format!("need at least 2 intervals, got {intervals}"),
            ));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::field(
                "T",
                format!("horizon must be positive and finite, got {horizon}"),
            ));
        }
        let step = horizon / intervals as f64;
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::field(
                "n",
                format!("step T/n = {step} is not usable"),
            ));
        }
        Ok(Self { horizon, intervals })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of intervals `n`; there are `n + 1` nodes.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.intervals).map(move |k| self.node(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Piecewise constant, each cell takes the value at its left node.
    Rectangle,
    /// Piecewise linear interpolation between nodes.
    Trapezoid,
}

/// How the first cell `[t_0, t_1]` of an integral is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// The sample at node 0 is used as any other sample.
    Regular,
    /// Node 0 is never read; the first cell is a rectangle anchored at t_1.
    Singular,
}

/// `(m+1)^p - m^p` without cancellation for large m.
fn first_difference(p: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let m = m as f64;
    m.powf(p) * (p * (1.0 / m).ln_1p()).exp_m1()
}

const SERIES_SWITCH: usize = 16;

/// `(m+1)^p - 2 m^p + (m-1)^p`, m ≥ 1.
fn second_difference(p: f64, m: usize) -> f64 {
    if m < SERIES_SWITCH {
        let mf = m as f64;
        return (mf + 1.0).powf(p) - 2.0 * mf.powf(p) + (mf - 1.0).powf(p);
    }
    // m^p * 2 Σ_{i≥1} C(p, 2i) m^{-2i}
    let x = 1.0 / m as f64;
    let mut coeff = 1.0;
    let mut power = 1.0;
    let mut sum = 0.0;
    for i in 1..60 {
        coeff *= (p - i as f64 + 1.0) / i as f64;
        power *= x;
        if i % 2 == 0 {
            let term = coeff * power;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
    }
    2.0 * (m as f64).powf(p) * sum
}

/// `(k-1)^p - (k - p) k^{p-1}`, the trapezoid boundary-column numerator
/// written with p = α + 1.
fn boundary_numerator(p: f64, k: usize) -> f64 {
    let kf = k as f64;
    if k < SERIES_SWITCH {
        return (kf - 1.0).powf(p) - (kf - p) * kf.powf(p - 1.0);
    }
    // k^p [(1 - x)^p - 1 + p x] = k^p Σ_{i≥2} C(p, i) (-x)^i
    let x = 1.0 / kf;
    let mut coeff = p;
    let mut power = -x;
    let mut sum = 0.0;
    for i in 2..60 {
        coeff *= (p - i as f64 + 1.0) / i as f64;
        power *= -x;
        let term = coeff * power;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    kf.powf(p) * sum
}

/// Product-integration weights for `I^order` on a uniform grid.
///
/// Row `k` has entries `w_{k,0..=k}`:
/// * `w_{k,0}` is the boundary column,
/// * `w_{k,j} = interior[k - j]` for `0 < j < k`,
/// * `w_{k,k} = diagonal`.
#[derive(Debug, Clone)]
pub struct ConvolutionWeights {
    order: f64,
    grid: UniformGrid,
    scheme: Scheme,
    diagonal: f64,
    interior: Vec<f64>,
    boundary: Vec<f64>,
    /// Exact kernel integral over a single cell ending `m` cells before the target.
    cell: Vec<f64>,
}

impl ConvolutionWeights {
    /// Builds weights for an integral of any positive order.
    pub fn new(order: f64, grid: UniformGrid, scheme: Scheme) -> Result<Self> {
        if !(order.is_finite() && order > 0.0) {
            return Err(Error::field(
                "order",
                format!("integral order must be positive, got {order}"),
            ));
        }
        let n = grid.intervals();
        let h = grid.step();
        let scale1 = h.powf(order) / gamma(order + 1.0);
        let cell: Vec<f64> = (0..n)
            .map(|m| scale1 * first_difference(order, m))
            .collect();

        let (diagonal, interior, boundary) = match scheme {
            Scheme::Rectangle => {
                let mut interior = vec![0.0; n + 1];
                interior[1..].copy_from_slice(&cell);
                let boundary = interior.clone();
                (0.0, interior, boundary)
            }
            Scheme::Trapezoid => {
                let p = order + 1.0;
                let scale2 = h.powf(order) / gamma(order + 2.0);
                let mut interior = vec![0.0; n + 1];
                let mut boundary = vec![0.0; n + 1];
                for m in 1..=n {
                    interior[m] = scale2 * second_difference(p, m);
                    boundary[m] = scale2 * boundary_numerator(p, m);
                }
                (scale2, interior, boundary)
            }
        };
        let weights = Self {
            order,
            grid,
            scheme,
            diagonal,
            interior,
            boundary,
            cell,
        };
        if let Some((k, j)) = weights.first_non_finite() {
            return Err(Error::invalid(format!("weight w[{k},{j}] is not finite")));
        }
        Ok(weights)
    }

    fn first_non_finite(&self) -> Option<(usize, usize)> {
        let n = self.grid.intervals();
        if !self.diagonal.is_finite() {
            return Some((1, 1));
        }
        (1..=n)
            .find(|&m| !(self.interior[m].is_finite() && self.boundary[m].is_finite()))
            .map(|m| (m, 0))
            .or_else(|| {
                self.cell
                    .iter()
                    .position(|w| !w.is_finite())
                    .map(|m| (m + 1, 0))
            })
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// `w_{k,j}` for a regular start; zero when `j > k` or `k == 0`.
    pub fn weight(&self, k: usize, j: usize) -> f64 {
        if k == 0 || j > k {
            0.0
        } else if j == k {
            self.diagonal
        } else if j == 0 {
            self.boundary[k]
        } else {
            self.interior[k - j]
        }
    }

    /// Weight of node `j` in row `k` under the given start rule.
    pub fn start_weight(&self, k: usize, j: usize, start: Start) -> f64 {
        match start {
            Start::Regular => self.weight(k, j),
            Start::Singular => {
                if k == 0 || j == 0 || j > k {
                    0.0
                } else if j == 1 {
                    // first cell anchored at t_1, then the grid restarted at t_1
                    let shifted = if k == 1 { 0.0 } else { self.boundary[k - 1] };
                    self.cell[k - 1] + shifted
                } else if j == k {
                    self.diagonal
                } else {
                    self.interior[k - j]
                }
            }
        }
    }

    /// Full row `k` (length `k + 1`).
    pub fn row(&self, k: usize, start: Start) -> Vec<f64> {
        (0..=k).map(|j| self.start_weight(k, j, start)).collect()
    }

    /// Weight multiplying the unknown at node `k` in row `k`.
    pub fn diagonal(&self, k: usize, start: Start) -> f64 {
        self.start_weight(k, k, start)
    }

    /// `Σ_{j<k} w_{k,j} f_j` for vector samples stored node-major with
    /// `width` components per node; written into `out`.
    pub(crate) fn history(
        &self,
        k: usize,
        start: Start,
        samples: &[f64],
        width: usize,
        out: &mut [f64],
    ) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if k == 0 {
            return;
        }
        let first = match start {
            Start::Regular => 0,
            Start::Singular => 1,
        };
        for j in first..k {
            let w = self.start_weight(k, j, start);
            let node = &samples[j * width..(j + 1) * width];
            for (o, v) in out.iter_mut().zip(node) {
                *o += w * v;
            }
        }
    }

    /// Left integral `(I^order_{0+} f)(t_k)` for every node.
    pub fn integrate_left(&self, samples: &[f64], start: Start) -> Result<Vec<f64>> {
        let n = self.grid.intervals();
        if samples.len() != n + 1 {
            return Err(Error::Dimension {
                block: "samples".into(),
                expected: n + 1,
                got: samples.len(),
            });
        }
        let first = match start {
            Start::Regular => 0,
            Start::Singular => 1,
        };
        if let Some(node) = (first..=n).find(|&j| !samples[j].is_finite()) {
            return Err(Error::NonFinite { node });
        }
        let mut out = vec![0.0; n + 1];
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = (first..=k)
                .map(|j| self.start_weight(k, j, start) * samples[j])
                .sum();
        }
        Ok(out)
    }

    /// Right integral `(I^order_{T-} f)(t_k)`, computed by reflecting the
    /// samples and reusing the left weights. `start` refers to node `n`.
    pub fn integrate_right(&self, samples: &[f64], start: Start) -> Result<Vec<f64>> {
        let reversed: Vec<f64> = samples.iter().rev().copied().collect();
        let mut out = self.integrate_left(&reversed, start).map_err(|e| match e {
            Error::NonFinite { node } => Error::NonFinite {
                node: self.grid.intervals() - node,
            },
            other => other,
        })?;
        out.reverse();
        Ok(out)
    }
}

/// `I^α_{0+}` of grid samples with fresh weights.
pub fn rl_integral_left(
    samples: &[f64],
    order: f64,
    grid: UniformGrid,
    scheme: Scheme,
) -> Result<Vec<f64>> {
    ConvolutionWeights::new(order, grid, scheme)?.integrate_left(samples, Start::Regular)
}

/// `I^α_{T-}` of grid samples with fresh weights.
pub fn rl_integral_right(
    samples: &[f64],
    order: f64,
    grid: UniformGrid,
    scheme: Scheme,
) -> Result<Vec<f64>> {
    ConvolutionWeights::new(order, grid, scheme)?.integrate_right(samples, Start::Regular)
}
