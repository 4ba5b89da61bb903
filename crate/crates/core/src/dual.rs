//! The dual action functional, the dual-to-primal map and the exact
//! derivatives of the discrete action.
//!
//! Unknowns are the multiplier pair `(gamma, lambda)`, conjugate to the
//! kinematic and momentum equations. With the shifted quadratic auxiliary
//! potential `1/2 c_x |x - xbar|^2 + 1/2 c_v |v - vbar|^2`, the primal state is
//! recovered pointwise from the duals and their rates:
//!
//! ```text
//! c_x KK(lambda) (x - xbar) = gamma' - A_bar^T lambda
//! c_v (v - vbar)            = gamma + m lambda' - d lambda
//! ```
//!
//! with `KK(lambda) = I + lambda_j B_j / c_x`, and the action is
//!
//! ```text
//! S = -1/2 int (1/c_v)|gamma + m lambda' - d lambda|^2 + (1/c_x) q . KK^{-1} q dt
//!     + int -vbar.(gamma + m lambda' - d lambda) - xbar.gamma' + lambda.K(xbar) - lambda.f dt
//!     - lambda(0).m v0 - gamma(0).x0,            q = gamma' - A_bar^T lambda
//! ```
//!
//! Discretization: `(gamma, lambda)` are nodal and piecewise linear, rates are
//! constant per element, and every integrand is evaluated once at the element
//! midpoint with the base state interpolated there. Unknowns are ordered node
//! by node as `[gamma_k, lambda_k]`.
//!
//! Differentiating the element Lagrangian gives the primal state back:
//! `dL/dgamma = -v`, `dL/dgamma' = -x`, `dL/dlambda' = -m v` and
//! `dL/dlambda = d v + K(x) - f`, so the discrete Euler-Lagrange equations are
//! a midpoint discretization of the chain equations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::{stiffness_lambda, ChainParams, ExpandedForce};
use crate::error::{check_len, Error, Result};
use crate::linalg::BlockTridiagonal;
use crate::primal::{TimeGrid, Trajectory};

/// Condition number of `KK` above which the dual-to-primal map is treated as
/// undefined.
pub const STIFFNESS_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub c_x: f64,
    pub c_v: f64,
}

impl ScaleParams {
    pub fn new(c_x: f64, c_v: f64) -> Result<Self> {
        for (name, v) in [("c_x", c_x), ("c_v", c_v)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { c_x, c_v })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseProvenance {
    Zero,
    Constant,
    PrimalSolve,
    UserTable,
}

/// The trajectory `(xbar, vbar)` about which the auxiliary potential is centred.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseState {
    pub grid: TimeGrid,
    pub xbar: Vec<DVector<f64>>,
    pub vbar: Vec<DVector<f64>>,
    pub provenance: BaseProvenance,
}

impl BaseState {
    pub fn new(
        grid: TimeGrid,
        xbar: Vec<DVector<f64>>,
        vbar: Vec<DVector<f64>>,
        provenance: BaseProvenance,
    ) -> Result<Self> {
        check_len("base positions", grid.nodes(), xbar.len())?;
        check_len("base velocities", grid.nodes(), vbar.len())?;
        let n = xbar[0].len();
        for (x, v) in xbar.iter().zip(&vbar) {
            check_len("base position vector", n, x.len())?;
            check_len("base velocity vector", n, v.len())?;
            if !x.iter().chain(v.iter()).all(|e| e.is_finite()) {
                return Err(Error::InvalidParameter("base state must be finite".into()));
            }
        }
        Ok(Self {
            grid,
            xbar,
            vbar,
            provenance,
        })
    }

    pub fn zero(grid: TimeGrid, n: usize) -> Self {
        Self {
            grid,
            xbar: vec![DVector::zeros(n); grid.nodes()],
            vbar: vec![DVector::zeros(n); grid.nodes()],
            provenance: BaseProvenance::Zero,
        }
    }

    pub fn constant(grid: TimeGrid, x: DVector<f64>, v: DVector<f64>) -> Result<Self> {
        check_len("constant base velocity", x.len(), v.len())?;
        Self::new(
            grid,
            vec![x; grid.nodes()],
            vec![v; grid.nodes()],
            BaseProvenance::Constant,
        )
    }

    pub fn from_trajectory(traj: &Trajectory, provenance: BaseProvenance) -> Self {
        Self {
            grid: traj.grid,
            xbar: traj.x.clone(),
            vbar: traj.v.clone(),
            provenance,
        }
    }

    pub fn n(&self) -> usize {
        self.xbar[0].len()
    }

    pub fn to_trajectory(&self) -> Trajectory {
        Trajectory {
            grid: self.grid,
            x: self.xbar.clone(),
            v: self.vbar.clone(),
        }
    }
}

/// Nodal values of the multipliers `(gamma, lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    pub grid: TimeGrid,
    pub gamma: Vec<DVector<f64>>,
    pub lambda: Vec<DVector<f64>>,
}

impl DualField {
    pub fn zeros(grid: TimeGrid, n: usize) -> Self {
        Self {
            grid,
            gamma: vec![DVector::zeros(n); grid.nodes()],
            lambda: vec![DVector::zeros(n); grid.nodes()],
        }
    }

    pub fn n(&self) -> usize {
        self.gamma[0].len()
    }

    pub(crate) fn check_shape(&self, grid: TimeGrid, n: usize) -> Result<()> {
        if self.grid != grid {
            return Err(Error::InvalidParameter("dual field grid differs from problem grid".into()));
        }
        check_len("dual gamma nodes", grid.nodes(), self.gamma.len())?;
        check_len("dual lambda nodes", grid.nodes(), self.lambda.len())?;
        for (g, l) in self.gamma.iter().zip(&self.lambda) {
            check_len("dual gamma vector", n, g.len())?;
            check_len("dual lambda vector", n, l.len())?;
        }
        Ok(())
    }

    /// Max-norm over all nodal values.
    pub fn amax(&self) -> f64 {
        self.gamma
            .iter()
            .chain(&self.lambda)
            .fold(0.0_f64, |acc, v| acc.max(v.amax()))
    }

    /// Packs nodes `0..M` into the unknown vector `[gamma_k, lambda_k]_k`.
    pub(crate) fn pack(&self) -> DVector<f64> {
        let n = self.n();
        let m = self.grid.intervals();
        let mut z = DVector::zeros(2 * n * m);
        for k in 0..m {
            z.rows_mut(2 * n * k, n).copy_from(&self.gamma[k]);
            z.rows_mut(2 * n * k + n, n).copy_from(&self.lambda[k]);
        }
        z
    }

    /// Inverse of [`pack`](Self::pack). Node `M` is zero (`periodic == false`)
    /// or a copy of node 0.
    pub(crate) fn unpack(grid: TimeGrid, n: usize, z: &DVector<f64>, periodic: bool) -> Self {
        let m = grid.intervals();
        let mut gamma = Vec::with_capacity(m + 1);
        let mut lambda = Vec::with_capacity(m + 1);
        for k in 0..m {
            gamma.push(z.rows(2 * n * k, n).clone_owned());
            lambda.push(z.rows(2 * n * k + n, n).clone_owned());
        }
        if periodic {
            gamma.push(gamma[0].clone());
            lambda.push(lambda[0].clone());
        } else {
            gamma.push(DVector::zeros(n));
            lambda.push(DVector::zeros(n));
        }
        Self { grid, gamma, lambda }
    }
}

/// Everything defining one initial-value dual solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub params: ChainParams,
    pub scales: ScaleParams,
    pub base: BaseState,
    pub grid: TimeGrid,
    pub x0: DVector<f64>,
    pub v0: DVector<f64>,
    /// Keep the origin-frame `A` instead of re-expanding it along the base.
    pub freeze_a: bool,
}

impl ProblemSpec {
    pub fn new(
        params: ChainParams,
        scales: ScaleParams,
        base: BaseState,
        x0: DVector<f64>,
        v0: DVector<f64>,
    ) -> Result<Self> {
        let n = params.n();
        check_len("base dimension", n, base.n())?;
        check_len("initial position", n, x0.len())?;
        check_len("initial velocity", n, v0.len())?;
        params.forcing.check_covers(base.grid.t_final())?;
        Ok(Self {
            params,
            scales,
            grid: base.grid,
            base,
            x0,
            v0,
            freeze_a: false,
        })
    }

    pub fn with_frozen_a(mut self, freeze: bool) -> Self {
        self.freeze_a = freeze;
        self
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub(crate) fn discretization(&self) -> Result<Discretization<'_>> {
        if self.grid != self.base.grid {
            return Err(Error::InvalidParameter("base grid differs from problem grid".into()));
        }
        Ok(Discretization {
            params: &self.params,
            scales: self.scales,
            base: &self.base,
            freeze_a: self.freeze_a,
            initial: Some((&self.x0, &self.v0)),
            linear: self.params.force.is_linear(),
        })
    }
}

/// Primal state recovered at one point together with the pieces the action
/// and its derivatives reuse.
pub(crate) struct LocalMap {
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub u: DVector<f64>,
    pub p: DVector<f64>,
    pub q: DVector<f64>,
    /// `KK^{-1} / c_x`.
    pub kinv: DMatrix<f64>,
}

/// Inverse of the symmetric matrix `kk`, or the singular-stiffness error when
/// its condition number exceeds [`STIFFNESS_CONDITION_LIMIT`].
fn invert_stiffness(kk: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = kk.nrows();
    let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || kk[(i, j)] == 0.0));
    let (values, vectors) = if is_diag {
        (kk.diagonal(), None)
    } else {
        let eig = SymmetricEigen::new(kk);
        (eig.eigenvalues, Some(eig.eigenvectors))
    };
    let max = values.amax();
    let min = values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if !(min > 0.0) || max / min > STIFFNESS_CONDITION_LIMIT || !max.is_finite() {
        return Err(Error::SingularStiffness {
            location: None,
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
        });
    }
    let inv = values.map(|v| 1.0 / v);
    Ok(match vectors {
        None => DMatrix::from_diagonal(&inv),
        Some(q) => &q * DMatrix::from_diagonal(&inv) * q.transpose(),
    })
}

fn at_location(err: Error, index: usize) -> Error {
    match err {
        Error::SingularStiffness { condition, .. } => Error::SingularStiffness {
            location: Some(index),
            condition,
        },
        other => other,
    }
}

/// Assembly of the discrete action over a grid, shared by the initial-value
/// and the periodic problems.
pub(crate) struct Discretization<'a> {
    pub params: &'a ChainParams,
    pub scales: ScaleParams,
    pub base: &'a BaseState,
    pub freeze_a: bool,
    /// `(x0, v0)` for the initial-value form; `None` means periodic closure.
    pub initial: Option<(&'a DVector<f64>, &'a DVector<f64>)>,
    pub linear: bool,
}

pub(crate) struct ElementEval {
    pub lagrangian: f64,
    /// Derivative with respect to `[gamma_a, lambda_a, gamma_b, lambda_b]`,
    /// already multiplied by the element length.
    pub grad: DVector<f64>,
    pub hess: Option<DMatrix<f64>>,
}

impl<'a> Discretization<'a> {
    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn grid(&self) -> TimeGrid {
        self.base.grid
    }

    pub fn periodic(&self) -> bool {
        self.initial.is_none()
    }

    /// Number of free nodes: nodes `0..M`.
    pub fn blocks(&self) -> usize {
        self.grid().intervals()
    }

    pub fn unknowns(&self) -> usize {
        2 * self.n() * self.blocks()
    }

    pub fn expansion(&self, xbar: &DVector<f64>) -> Result<ExpandedForce<'a>> {
        if self.freeze_a {
            self.params.force.frozen_expansion(xbar)
        } else {
            self.params.force.reexpand(xbar)
        }
    }

    /// Applies the dual-to-primal map at one point.
    pub fn local_map(
        &self,
        ef: &ExpandedForce<'_>,
        vbar: &DVector<f64>,
        gamma: &DVector<f64>,
        lambda: &DVector<f64>,
        gammadot: &DVector<f64>,
        lambdadot: &DVector<f64>,
    ) -> Result<LocalMap> {
        let (m, d) = (self.params.mass, self.params.damping);
        let ScaleParams { c_x, c_v } = self.scales;
        let p = gamma + lambdadot * m - lambda * d;
        let q = gammadot - ef.a_bar.tr_mul(lambda);
        let kinv = if self.linear {
            DMatrix::identity(self.n(), self.n()) / c_x
        } else {
            invert_stiffness(stiffness_lambda(ef.force(), lambda, c_x)?)? / c_x
        };
        let u = &kinv * &q;
        let x = &ef.xbar + &u;
        let v = vbar + &p / c_v;
        Ok(LocalMap { x, v, u, p, q, kinv })
    }

    pub fn element(
        &self,
        e: usize,
        ga: &DVector<f64>,
        la: &DVector<f64>,
        gb: &DVector<f64>,
        lb: &DVector<f64>,
        with_hessian: bool,
    ) -> Result<ElementEval> {
        let n = self.n();
        let grid = self.grid();
        let h = grid.step();
        let (m, d) = (self.params.mass, self.params.damping);
        let c_v = self.scales.c_v;

        let xbar = (&self.base.xbar[e] + &self.base.xbar[e + 1]) * 0.5;
        let vbar = (&self.base.vbar[e] + &self.base.vbar[e + 1]) * 0.5;
        let t_mid = (grid.t(e) + grid.t(e + 1)) * 0.5;
        let f = self.params.forcing.eval(t_mid)?;
        let ef = self.expansion(&xbar)?;

        let g = (ga + gb) * 0.5;
        let l = (la + lb) * 0.5;
        let gd = (gb - ga) / h;
        let ld = (lb - la) / h;
        let loc = self
            .local_map(&ef, &vbar, &g, &l, &gd, &ld)
            .map_err(|err| at_location(err, e))?;

        let lagrangian = -0.5 * (loc.p.norm_squared() / c_v + loc.q.dot(&loc.u)) - vbar.dot(&loc.p)
            - xbar.dot(&gd)
            + l.dot(&ef.k0)
            - l.dot(&f);

        let resid = &loc.v * d + ef.eval_offset(&loc.u) - &f;
        let mut grad = DVector::zeros(4 * n);
        grad.rows_mut(0, n).copy_from(&(&loc.v * (-0.5 * h) + &loc.x));
        grad.rows_mut(n, n).copy_from(&(&resid * (0.5 * h) + &loc.v * m));
        grad.rows_mut(2 * n, n).copy_from(&(&loc.v * (-0.5 * h) - &loc.x));
        grad.rows_mut(3 * n, n).copy_from(&(&resid * (0.5 * h) - &loc.v * m));

        let hess = if with_hessian {
            // Velocity part: dp = alpha . dz (scalar multiples of I).
            let alpha = [0.5, -m / h - 0.5 * d, 0.5, m / h - 0.5 * d];
            // Position part: dr = dgamma' - J^T dlambda, dx = kinv dr.
            let jt = ef.jacobian_offset(&loc.u).transpose();
            let ident = DMatrix::<f64>::identity(n, n);
            let beta = [&ident * (-1.0 / h), &jt * -0.5, &ident / h, &jt * -0.5];
            let kb: Vec<DMatrix<f64>> = beta.iter().map(|b| &loc.kinv * b).collect();
            let mut hm = DMatrix::zeros(4 * n, 4 * n);
            for i in 0..4 {
                for j in 0..4 {
                    let mut blk = beta[i].tr_mul(&kb[j]) * (-h);
                    let vel = -h * alpha[i] * alpha[j] / c_v;
                    for r in 0..n {
                        blk[(r, r)] += vel;
                    }
                    hm.view_mut((i * n, j * n), (n, n)).copy_from(&blk);
                }
            }
            Some(hm)
        } else {
            None
        };

        Ok(ElementEval {
            lagrangian,
            grad,
            hess,
        })
    }

    fn node_values<'z>(&self, field: &'z DualField, k: usize) -> (&'z DVector<f64>, &'z DVector<f64>) {
        (&field.gamma[k], &field.lambda[k])
    }

    /// Index of the free node at the right end of element `e`, `None` when it
    /// is the constrained final node.
    fn right_node(&self, e: usize) -> Option<usize> {
        if e + 1 < self.blocks() {
            Some(e + 1)
        } else if self.periodic() {
            Some(0)
        } else {
            None
        }
    }

    pub fn check_field(&self, field: &DualField) -> Result<()> {
        field.check_shape(self.grid(), self.n())?;
        let m = self.blocks();
        if self.periodic() {
            if field.gamma[m] != field.gamma[0] || field.lambda[m] != field.lambda[0] {
                return Err(Error::InvalidParameter(
                    "periodic dual field must repeat its first node at t = P".into(),
                ));
            }
        } else if field.gamma[m].iter().chain(field.lambda[m].iter()).any(|&v| v != 0.0) {
            return Err(Error::FinalCondition);
        }
        Ok(())
    }

    pub fn field_from(&self, z: &DVector<f64>) -> DualField {
        DualField::unpack(self.grid(), self.n(), z, self.periodic())
    }

    fn evaluate(
        &self,
        field: &DualField,
        want_grad: bool,
        want_hess: bool,
    ) -> Result<(f64, Option<DVector<f64>>, Option<BlockTridiagonal>)> {
        self.check_field(field)?;
        let n = self.n();
        let bs = 2 * n;
        let m = self.blocks();
        let h = self.grid().step();
        let mut action = 0.0;
        let mut grad = want_grad.then(|| DVector::zeros(self.unknowns()));
        let mut hess = want_hess.then(|| BlockTridiagonal::zeros(m, bs, self.periodic()));

        for e in 0..m {
            let (ga, la) = self.node_values(field, e);
            let (gb, lb) = self.node_values(field, e + 1);
            let el = self.element(e, ga, la, gb, lb, want_hess)?;
            action += h * el.lagrangian;
            let right = self.right_node(e);
            if let Some(gv) = grad.as_mut() {
                let mut left = gv.rows_mut(bs * e, bs);
                left += el.grad.rows(0, bs);
                if let Some(b) = right {
                    let mut r = gv.rows_mut(bs * b, bs);
                    r += el.grad.rows(bs, bs);
                }
            }
            if let (Some(hm), Some(eh)) = (hess.as_mut(), el.hess.as_ref()) {
                hm.diag[e] += eh.view((0, 0), (bs, bs));
                if let Some(b) = right {
                    hm.diag[b] += eh.view((bs, bs), (bs, bs));
                    if b == e + 1 {
                        hm.lower[e] += eh.view((bs, 0), (bs, bs));
                    } else if let Some(c) = hm.corner.as_mut() {
                        // Element M-1 couples node M-1 (left) with node 0 (right).
                        *c += eh.view((0, bs), (bs, bs));
                    }
                }
            }
        }

        if let Some((x0, v0)) = self.initial {
            let (g0, l0) = self.node_values(field, 0);
            action -= l0.dot(v0) * self.params.mass + g0.dot(x0);
            if let Some(gv) = grad.as_mut() {
                let mut gg = gv.rows_mut(0, n);
                gg -= x0;
                let mut gl = gv.rows_mut(n, n);
                gl -= v0 * self.params.mass;
            }
        }
        Ok((action, grad, hess))
    }

    pub fn action(&self, field: &DualField) -> Result<f64> {
        Ok(self.evaluate(field, false, false)?.0)
    }

    pub fn action_and_gradient(&self, field: &DualField) -> Result<(f64, DVector<f64>)> {
        let (s, g, _) = self.evaluate(field, true, false)?;
        Ok((s, g.expect("gradient requested")))
    }

    pub fn gradient(&self, field: &DualField) -> Result<DVector<f64>> {
        Ok(self.action_and_gradient(field)?.1)
    }

    pub fn hessian(&self, field: &DualField) -> Result<BlockTridiagonal> {
        Ok(self.evaluate(field, false, true)?.2.expect("hessian requested"))
    }

    /// Recovers the primal state at every node. Nodal rates are central
    /// differences; the initial-value form uses three-point one-sided
    /// differences at both ends, the periodic form wraps around.
    pub fn recover(&self, field: &DualField) -> Result<Trajectory> {
        self.check_field(field)?;
        let grid = self.grid();
        let h = grid.step();
        let m = grid.intervals();
        let rate = |series: &[DVector<f64>], k: usize| -> DVector<f64> {
            if self.periodic() {
                let prev = if k == 0 { m - 1 } else { k - 1 };
                let next = if k == m { 1 } else { k + 1 };
                (&series[next] - &series[prev]) / (2.0 * h)
            } else if m >= 3 && (k == 0 || k == m) {
                end_rate(series, h, k == 0)
            } else {
                crate::primal::nodal_derivative(series, h, k)
            }
        };
        let mut xs: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
        let mut vs: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
        for k in 0..=m {
            if self.periodic() && k == m {
                xs.push(xs[0].clone());
                vs.push(vs[0].clone());
                continue;
            }
            let ef = self.expansion(&self.base.xbar[k])?;
            let gd = rate(&field.gamma, k);
            let ld = rate(&field.lambda, k);
            let loc = self
                .local_map(&ef, &self.base.vbar[k], &field.gamma[k], &field.lambda[k], &gd, &ld)
                .map_err(|err| at_location(err, k))?;
            xs.push(loc.x);
            vs.push(loc.v);
        }
        Ok(Trajectory { grid, x: xs, v: vs })
    }

    /// Smallest eigenvalue of `diag(m^2/c_v I, KK^{-1}/c_x)` at every node.
    pub fn ellipticity(&self, field: &DualField) -> Result<Vec<f64>> {
        field.check_shape(self.grid(), self.n())?;
        let ScaleParams { c_x, c_v } = self.scales;
        let velocity = self.params.mass * self.params.mass / c_v;
        let mut out = Vec::with_capacity(field.lambda.len());
        for lambda in &field.lambda {
            let kk = stiffness_lambda(&self.params.force, lambda, c_x)?;
            let n = kk.nrows();
            let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || kk[(i, j)] == 0.0));
            let values = if is_diag {
                kk.diagonal()
            } else {
                SymmetricEigen::new(kk).eigenvalues
            };
            let scale = values.amax().max(1.0);
            let mut worst = velocity;
            for &kappa in values.iter() {
                let value = if kappa.abs() <= 1e-14 * scale {
                    0.0
                } else {
                    1.0 / (c_x * kappa)
                };
                worst = worst.min(value);
            }
            out.push(worst);
        }
        Ok(out)
    }
}

/// One-sided rate at an end node whose leading error, `h^2 f'''/6`, equals
/// that of the central difference used in the interior, so the recovered
/// trajectory has a smooth discretization error up to the ends.
fn end_rate(series: &[DVector<f64>], h: f64, start: bool) -> DVector<f64> {
    let m = series.len() - 1;
    let (f, sign) = if start {
        ([&series[0], &series[1], &series[2], &series[3]], 1.0)
    } else {
        ([&series[m], &series[m - 1], &series[m - 2], &series[m - 3]], -1.0)
    };
    (f[0] * -4.0 + f[1] * 7.0 - f[2] * 4.0 + f[3]) * (sign / (2.0 * h))
}

/// `|g|_inf / h`: the discrete Euler-Lagrange residual per unit time.
pub fn scaled_residual(gradient: &DVector<f64>, grid: TimeGrid) -> f64 {
    gradient.amax() / grid.step()
}

/// Dual-to-primal map at one point: returns `(x, v)` for the given duals and
/// rates about the base point `(xbar, vbar)`.
pub fn dtp_map(
    lambda: &DVector<f64>,
    lambdadot: &DVector<f64>,
    gamma: &DVector<f64>,
    gammadot: &DVector<f64>,
    xbar: &DVector<f64>,
    vbar: &DVector<f64>,
    spec: &ProblemSpec,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = spec.n();
    for (what, v) in [
        ("lambda", lambda),
        ("lambda rate", lambdadot),
        ("gamma", gamma),
        ("gamma rate", gammadot),
        ("base position", xbar),
        ("base velocity", vbar),
    ] {
        check_len(what, n, v.len())?;
    }
    let disc = spec.discretization()?;
    let ef = disc.expansion(xbar)?;
    let loc = disc.local_map(&ef, vbar, gamma, lambda, gammadot, lambdadot)?;
    Ok((loc.x, loc.v))
}

/// Discrete dual action.
pub fn action(field: &DualField, spec: &ProblemSpec) -> Result<f64> {
    spec.discretization()?.action(field)
}

/// Derivative of the discrete action with respect to the free nodal values
/// (nodes `0..M`, laid out as `[gamma_k, lambda_k]`).
pub fn gradient(field: &DualField, spec: &ProblemSpec) -> Result<DVector<f64>> {
    spec.discretization()?.gradient(field)
}

/// Second derivative of the discrete action, block-tridiagonal in time with
/// `2n x 2n` blocks.
pub fn hessian(field: &DualField, spec: &ProblemSpec) -> Result<BlockTridiagonal> {
    spec.discretization()?.hessian(field)
}

/// Per-node minimum eigenvalue of the ellipticity matrix. A non-positive entry
/// marks a node where `KK` has lost positive definiteness.
pub fn ellipticity_check(field: &DualField, spec: &ProblemSpec) -> Result<Vec<f64>> {
    spec.discretization()?.ellipticity(field)
}
