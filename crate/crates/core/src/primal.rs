//! Direct fixed-step integration of the chain equations
//!
//! ```text
//! m v' + d v + K(x) - f(t) = 0,    x' = v
//! ```
//!
//! These trajectories are the reference against which dual recovery is judged.

use nalgebra::{DMatrix, DVector};

use crate::chain::ChainParams;
use crate::error::{check_len, Error, Result};

/// Uniform grid `t_k = k T / M`, `k = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, intervals: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidParameter(format!("final time must be positive, got {t_final}")));
        }
        if intervals < 1 {
            return Err(Error::InvalidParameter("grid needs at least one interval".into()));
        }
        Ok(Self { t_final, intervals })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    pub fn step(&self) -> f64 {
        self.t_final / self.intervals as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.intervals {
            self.t_final
        } else {
            k as f64 * self.t_final / self.intervals as f64
        }
    }

    /// Same final time, `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            t_final: self.t_final,
            intervals: self.intervals * factor.max(1),
        }
    }
}

/// Time-sampled primal state on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub x: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, x: Vec<DVector<f64>>, v: Vec<DVector<f64>>) -> Result<Self> {
        check_len("trajectory positions", grid.nodes(), x.len())?;
        check_len("trajectory velocities", grid.nodes(), v.len())?;
        let n = x[0].len();
        for (xi, vi) in x.iter().zip(&v) {
            check_len("trajectory position vector", n, xi.len())?;
            check_len("trajectory velocity vector", n, vi.len())?;
        }
        Ok(Self { grid, x, v })
    }

    pub fn n(&self) -> usize {
        self.x[0].len()
    }

    /// Samples every `factor`-th node, e.g. to bring a refined solve back
    /// onto a coarse grid.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.grid.intervals().is_multiple_of(factor) {
            return Err(Error::InvalidParameter(format!(
                "cannot subsample {} intervals by {factor}",
                self.grid.intervals()
            )));
        }
        let grid = TimeGrid::new(self.grid.t_final(), self.grid.intervals() / factor)?;
        Ok(Self {
            grid,
            x: self.x.iter().step_by(factor).cloned().collect(),
            v: self.v.iter().step_by(factor).cloned().collect(),
        })
    }

    /// Max-norm distance over all nodes and components.
    pub fn max_deviation(&self, other: &Trajectory) -> Result<f64> {
        check_len("compared trajectory nodes", self.x.len(), other.x.len())?;
        let mut worst = 0.0_f64;
        for k in 0..self.x.len() {
            worst = worst.max((&self.x[k] - &other.x[k]).amax());
            worst = worst.max((&self.v[k] - &other.v[k]).amax());
        }
        Ok(worst)
    }

    /// Max-norm distance of positions only.
    pub fn max_position_deviation(&self, other: &Trajectory) -> Result<f64> {
        check_len("compared trajectory nodes", self.x.len(), other.x.len())?;
        Ok(self
            .x
            .iter()
            .zip(&other.x)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).amax())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4,
    ImplicitMidpoint,
}

fn acceleration(params: &ChainParams, t: f64, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    let f = params.forcing.eval(t)?;
    let k = params.force.eval(x)?;
    Ok((f - v * params.damping - k) / params.mass)
}

fn rk4_step(
    params: &ChainParams,
    t: f64,
    h: f64,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let a1 = acceleration(params, t, x, v)?;
    let x2 = x + v * (0.5 * h);
    let v2 = v + &a1 * (0.5 * h);
    let a2 = acceleration(params, t + 0.5 * h, &x2, &v2)?;
    let x3 = x + &v2 * (0.5 * h);
    let v3 = v + &a2 * (0.5 * h);
    let a3 = acceleration(params, t + 0.5 * h, &x3, &v3)?;
    let x4 = x + &v3 * h;
    let v4 = v + &a3 * h;
    let a4 = acceleration(params, t + h, &x4, &v4)?;
    let xn = x + (v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
    let vn = v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
    Ok((xn, vn))
}

const MIDPOINT_TOL: f64 = 1e-12;
const MIDPOINT_MAX_ITER: usize = 20;

/// One implicit-midpoint step, solved by Newton on the end state.
fn midpoint_step(
    params: &ChainParams,
    step: usize,
    t: f64,
    h: f64,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = x.len();
    let (m, d) = (params.mass, params.damping);
    let f = params.forcing.eval(t + 0.5 * h)?;
    let mut xn = x.clone();
    let mut vn = v.clone();
    for _ in 0..MIDPOINT_MAX_ITER {
        let xm = (x + &xn) * 0.5;
        let vm = (v + &vn) * 0.5;
        let kx = params.force.eval(&xm)?;
        let rx = &xn - x - &vm * h;
        let rv = (&vn - v) * m + (&vm * d + kx - &f) * h;
        let jk = params.force.jacobian(&xm)?;
        let mut jac = DMatrix::zeros(2 * n, 2 * n);
        jac.view_mut((0, 0), (n, n)).fill_with_identity();
        jac.view_mut((0, n), (n, n)).copy_from(&(DMatrix::identity(n, n) * (-0.5 * h)));
        jac.view_mut((n, 0), (n, n)).copy_from(&(jk * (0.5 * h)));
        jac.view_mut((n, n), (n, n))
            .copy_from(&(DMatrix::identity(n, n) * (m + 0.5 * h * d)));
        let mut rhs = DVector::zeros(2 * n);
        rhs.rows_mut(0, n).copy_from(&rx);
        rhs.rows_mut(n, n).copy_from(&rv);
        let delta = jac.lu().solve(&(-rhs)).ok_or(Error::StepFailed { step })?;
        xn += delta.rows(0, n);
        vn += delta.rows(n, n);
        let scale = 1.0 + xn.amax().max(vn.amax());
        if !delta.iter().all(|v| v.is_finite()) {
            return Err(Error::BlowUp { step });
        }
        if delta.amax() <= MIDPOINT_TOL * scale {
            return Ok((xn, vn));
        }
    }
    Err(Error::StepFailed { step })
}

/// Integrates the chain from `(x0, v0)` over `grid`.
pub fn integrate_primal(
    params: &ChainParams,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    grid: TimeGrid,
    method: Method,
) -> Result<Trajectory> {
    let n = params.n();
    check_len("initial position", n, x0.len())?;
    check_len("initial velocity", n, v0.len())?;
    params.forcing.check_covers(grid.t_final())?;
    let h = grid.step();
    let mut xs = Vec::with_capacity(grid.nodes());
    let mut vs = Vec::with_capacity(grid.nodes());
    xs.push(x0.clone());
    vs.push(v0.clone());
    for k in 0..grid.intervals() {
        let t = grid.t(k);
        let (xn, vn) = match method {
            Method::Rk4 => rk4_step(params, t, h, &xs[k], &vs[k])?,
            Method::ImplicitMidpoint => midpoint_step(params, k + 1, t, h, &xs[k], &vs[k])?,
        };
        if !xn.iter().chain(vn.iter()).all(|v| v.is_finite()) {
            return Err(Error::BlowUp { step: k + 1 });
        }
        xs.push(xn);
        vs.push(vn);
    }
    Ok(Trajectory { grid, x: xs, v: vs })
}

/// Second-order finite-difference derivative of a node series: central in the
/// interior, one-sided three-point at the ends (two-point when `M = 1`).
pub(crate) fn nodal_derivative(series: &[DVector<f64>], h: f64, k: usize) -> DVector<f64> {
    let last = series.len() - 1;
    if last == 1 {
        return (&series[1] - &series[0]) / h;
    }
    if k == 0 {
        (&series[1] * 4.0 - &series[0] * 3.0 - &series[2]) / (2.0 * h)
    } else if k == last {
        (&series[last] * 3.0 - &series[last - 1] * 4.0 + &series[last - 2]) / (2.0 * h)
    } else {
        (&series[k + 1] - &series[k - 1]) / (2.0 * h)
    }
}

/// Per-node residuals of the two equation blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalResidual {
    pub momentum: Vec<f64>,
    pub kinematic: Vec<f64>,
}

impl PrimalResidual {
    pub fn max_momentum(&self) -> f64 {
        self.momentum.iter().fold(0.0, |a: f64, &b| a.max(b))
    }

    pub fn max_kinematic(&self) -> f64 {
        self.kinematic.iter().fold(0.0, |a: f64, &b| a.max(b))
    }

    pub fn max(&self) -> f64 {
        self.max_momentum().max(self.max_kinematic())
    }
}

/// Finite-difference residual of the chain equations along `traj`, measured in
/// the max norm at each node.
pub fn primal_residual(traj: &Trajectory, params: &ChainParams) -> Result<PrimalResidual> {
    check_len("trajectory dimension", params.n(), traj.n())?;
    let h = traj.grid.step();
    let mut momentum = Vec::with_capacity(traj.x.len());
    let mut kinematic = Vec::with_capacity(traj.x.len());
    for k in 0..traj.x.len() {
        let dx = nodal_derivative(&traj.x, h, k);
        let dv = nodal_derivative(&traj.v, h, k);
        let f = params.forcing.eval(traj.grid.t(k))?;
        let kx = params.force.eval(&traj.x[k])?;
        let rm = dv * params.mass + &traj.v[k] * params.damping + kx - f;
        momentum.push(rm.amax());
        kinematic.push((dx - &traj.v[k]).amax());
    }
    Ok(PrimalResidual { momentum, kinematic })
}

/// Total energy `1/2 m |v|^2 + V(x)` at every node; requires `K = grad V`.
pub fn energy_series(traj: &Trajectory, params: &ChainParams) -> Result<Vec<f64>> {
    check_len("trajectory dimension", params.n(), traj.n())?;
    if !params.force.is_gradient(1e-12) {
        return Err(Error::NotGradient(
            "A must be symmetric and B fully symmetric".into(),
        ));
    }
    Ok(traj
        .x
        .iter()
        .zip(&traj.v)
        .map(|(x, v)| 0.5 * params.mass * v.norm_squared() + params.force.potential(x))
        .collect())
}
