//! Physical data of the particle chain and pointwise force evaluations.
//!
//! The interaction force is an at-most-quadratic polynomial in the positions,
//!
//! ```text
//! K_j(x) = C_j + A_jr x_r + 1/2 B_jrs x_r x_s
//! ```
//!
//! with coefficients always stored about the origin. Expansions about another
//! base configuration are produced on demand by [`QuadraticForce::reexpand`],
//! which is exact for quadratic polynomials.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

/// Coefficients `(C, A, B)` of a quadratic interaction force.
///
/// `B` is stored as `n` matrices, `b[j][(r, s)] = B_jrs`, each symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForce {
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: Vec<DMatrix<f64>>,
}

impl QuadraticForce {
    /// Builds a force, symmetrizing `B` in its last two indices by averaging.
    /// Averaging leaves `K(x)` unchanged.
    pub fn new(c: DVector<f64>, a: DMatrix<f64>, b: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = c.len();
        if n == 0 {
            return Err(Error::InvalidParameter("particle count must be at least 1".into()));
        }
        check_len("A rows", n, a.nrows())?;
        check_len("A columns", n, a.ncols())?;
        check_len("B leading index", n, b.len())?;
        let mut sym = Vec::with_capacity(n);
        for bj in b {
            check_len("B rows", n, bj.nrows())?;
            check_len("B columns", n, bj.ncols())?;
            sym.push((&bj + bj.transpose()) * 0.5);
        }
        let finite = c.iter().chain(a.iter()).chain(sym.iter().flat_map(|m| m.iter())).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("force coefficients must be finite".into()));
        }
        Ok(Self { c, a, b: sym })
    }

    /// Linear force `K(x) = C + A x`.
    pub fn linear(c: DVector<f64>, a: DMatrix<f64>) -> Result<Self> {
        let n = c.len();
        Self::new(c, a, vec![DMatrix::zeros(n, n); n])
    }

    /// Builds a force from coordinate triplets `(j, r, s, value)` for `B`.
    pub fn from_triplets(
        c: DVector<f64>,
        a: DMatrix<f64>,
        triplets: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        let n = c.len();
        let mut b = vec![DMatrix::zeros(n, n); n];
        for &(j, r, s, v) in triplets {
            if j >= n || r >= n || s >= n {
                return Err(Error::InvalidParameter(format!(
                    "B index ({j}, {r}, {s}) out of range for n = {n}"
                )));
            }
            b[j][(r, s)] += v;
        }
        Self::new(c, a, b)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The `j`-th slice `B_j[(r, s)] = B_jrs`.
    pub fn b(&self, j: usize) -> &DMatrix<f64> {
        &self.b[j]
    }

    pub fn is_linear(&self) -> bool {
        self.b.iter().all(|m| m.iter().all(|&v| v == 0.0))
    }

    /// `M_jr = B_jrs u_s`.
    pub(crate) fn contract_last(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let row = &self.b[j] * u;
            m.row_mut(j).copy_from(&row.transpose());
        }
        m
    }

    /// `w_j = B_jrs u_r u_s`.
    pub(crate) fn quadratic(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.b.iter().map(|bj| u.dot(&(bj * u))))
    }

    /// Evaluates `K(x)`.
    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("position", self.n(), x.len())?;
        Ok(&self.c + &self.a * x + self.quadratic(x) * 0.5)
    }

    /// Jacobian `dK_j/dx_r = A_jr + B_jrs x_s`.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_len("position", self.n(), x.len())?;
        Ok(&self.a + self.contract_last(x))
    }

    /// Re-expands the force about `xbar`.
    pub fn reexpand(&self, xbar: &DVector<f64>) -> Result<ExpandedForce<'_>> {
        let k0 = self.eval(xbar)?;
        let a_bar = &self.a + self.contract_last(xbar);
        Ok(ExpandedForce {
            xbar: xbar.clone(),
            k0,
            a_bar,
            force: self,
        })
    }

    /// Expansion about `xbar` that keeps the origin-frame `A` as the linear
    /// coefficient. Differs from [`reexpand`](Self::reexpand) whenever `B != 0`
    /// and `xbar != 0`; used only to compare the two readings of the model.
    pub fn frozen_expansion(&self, xbar: &DVector<f64>) -> Result<ExpandedForce<'_>> {
        let k0 = self.eval(xbar)?;
        Ok(ExpandedForce {
            xbar: xbar.clone(),
            k0,
            a_bar: self.a.clone(),
            force: self,
        })
    }

    /// Returns `true` when `A` is symmetric and `B` is symmetric under every
    /// index permutation, i.e. when `K` is the gradient of a cubic potential.
    pub fn is_gradient(&self, tol: f64) -> bool {
        let n = self.n();
        let scale = self
            .a
            .iter()
            .chain(self.b.iter().flat_map(|m| m.iter()))
            .fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let eps = tol * scale;
        if (&self.a - self.a.transpose()).amax() > eps {
            return false;
        }
        for j in 0..n {
            for r in 0..n {
                for s in 0..n {
                    if (self.b[j][(r, s)] - self.b[r][(j, s)]).abs() > eps {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// `V(x) = C.x + 1/2 x.A x + 1/6 B_jrs x_j x_r x_s`.
    pub(crate) fn potential(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x) + 0.5 * x.dot(&(&self.a * x)) + self.quadratic(x).dot(x) / 6.0
    }
}

/// A [`QuadraticForce`] expanded about a base configuration:
/// `K(x) = K0 + A_bar (x - xbar) + 1/2 B (x - xbar)(x - xbar)`.
#[derive(Debug, Clone)]
pub struct ExpandedForce<'a> {
    pub xbar: DVector<f64>,
    pub k0: DVector<f64>,
    pub a_bar: DMatrix<f64>,
    force: &'a QuadraticForce,
}

impl ExpandedForce<'_> {
    pub fn force(&self) -> &QuadraticForce {
        self.force
    }

    /// Force at offset `u = x - xbar`.
    pub fn eval_offset(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.k0 + &self.a_bar * u + self.force.quadratic(u) * 0.5
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("position", self.force.n(), x.len())?;
        Ok(self.eval_offset(&(x - &self.xbar)))
    }

    /// Jacobian at offset `u`: `A_bar + B u`.
    pub fn jacobian_offset(&self, u: &DVector<f64>) -> DMatrix<f64> {
        &self.a_bar + self.force.contract_last(u)
    }
}

/// Boundary treatment for [`fput_alpha`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Particles `1` and `n` are each bonded to a wall at the origin.
    FixedEnds,
    Free,
}

/// Incidence vectors of the bonds of a nearest-neighbour chain.
fn bond_incidences(n: usize, boundary: Boundary) -> Vec<DVector<f64>> {
    let mut bonds = Vec::new();
    if boundary == Boundary::FixedEnds {
        let mut g = DVector::zeros(n);
        g[0] = 1.0;
        bonds.push(g);
    }
    for i in 0..n.saturating_sub(1) {
        let mut g = DVector::zeros(n);
        g[i] = -1.0;
        g[i + 1] = 1.0;
        bonds.push(g);
    }
    if boundary == Boundary::FixedEnds {
        let mut g = DVector::zeros(n);
        g[n - 1] = -1.0;
        bonds.push(g);
    }
    bonds
}

/// FPUT-alpha chain: `K = grad V` with `V = sum over bonds of r^2/2 + alpha r^3/3`.
pub fn fput_alpha(n: usize, alpha: f64, boundary: Boundary) -> Result<QuadraticForce> {
    if n < 1 {
        return Err(Error::InvalidParameter("particle count must be at least 1".into()));
    }
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter("alpha must be finite".into()));
    }
    let mut a = DMatrix::zeros(n, n);
    let mut b = vec![DMatrix::zeros(n, n); n];
    for g in bond_incidences(n, boundary) {
        a += &g * g.transpose();
        // alpha r^2 g_i with r = g.x gives B_irs = 2 alpha g_i g_r g_s.
        let outer = &g * g.transpose();
        for (i, bi) in b.iter_mut().enumerate() {
            if g[i] != 0.0 {
                *bi += &outer * (2.0 * alpha * g[i]);
            }
        }
    }
    QuadraticForce::new(DVector::zeros(n), a, b)
}

/// Bond potential of the FPUT-alpha chain. Used by tests as an independent
/// route to the force.
pub fn fput_alpha_potential(x: &DVector<f64>, alpha: f64, boundary: Boundary) -> f64 {
    bond_incidences(x.len(), boundary)
        .iter()
        .map(|g| {
            let r = g.dot(x);
            0.5 * r * r + alpha / 3.0 * r * r * r
        })
        .sum()
}

/// Shifted stiffness `KK_ir = delta_ir + (1/c_x) lambda_j B_jir`.
pub fn stiffness_lambda(force: &QuadraticForce, lambda: &DVector<f64>, c_x: f64) -> Result<DMatrix<f64>> {
    if !(c_x > 0.0) {
        return Err(Error::InvalidParameter(format!("c_x must be positive, got {c_x}")));
    }
    let n = force.n();
    check_len("lambda", n, lambda.len())?;
    let mut k = DMatrix::identity(n, n);
    for (j, bj) in force.b.iter().enumerate() {
        if lambda[j] != 0.0 {
            k += bj * (lambda[j] / c_x);
        }
    }
    Ok(k)
}

/// `amplitude * cos(omega t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Uniformly sampled table on `[0, dt * (len - 1)]`, linearly interpolated.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledTable {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl SampledTable {
    pub fn end(&self) -> f64 {
        self.dt * (self.values.len().saturating_sub(1)) as f64
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let end = self.end();
        let slack = 1e-12 * end.max(1.0);
        if !(t >= -slack && t <= end + slack) {
            return Err(Error::OutsideTable { t, end });
        }
        let last = self.values.len() - 1;
        if last == 0 {
            return Ok(self.values[0]);
        }
        let s = (t / self.dt).clamp(0.0, last as f64);
        let nearest = s.round();
        if (s - nearest).abs() <= 1e-9 {
            return Ok(self.values[nearest as usize]);
        }
        let k = (s.floor() as usize).min(last - 1);
        let w = s - k as f64;
        if w == 0.0 {
            return Ok(self.values[k]);
        }
        Ok((1.0 - w) * self.values[k] + w * self.values[k + 1])
    }
}

/// Forcing of one particle: constant plus sinusoids plus an optional table.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signal {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub sinusoids: Vec<Sinusoid>,
    #[serde(default)]
    pub table: Option<SampledTable>,
}

impl Signal {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            ..Self::default()
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let mut f = self.constant;
        for s in &self.sinusoids {
            f += s.amplitude * (s.omega * t + s.phase).cos();
        }
        if let Some(table) = &self.table {
            f += table.eval(t)?;
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    pub signals: Vec<Signal>,
}

impl ForcingSpec {
    pub fn zero(n: usize) -> Self {
        Self {
            signals: vec![Signal::default(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.signals.len()
    }

    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let mut f = DVector::zeros(self.n());
        for (fi, s) in f.iter_mut().zip(&self.signals) {
            *fi = s.eval(t)?;
        }
        Ok(f)
    }

    /// Checks that every tabulated signal covers `[0, t_final]`.
    pub fn check_covers(&self, t_final: f64) -> Result<()> {
        for s in &self.signals {
            if let Some(table) = &s.table {
                if table.end() < t_final * (1.0 - 1e-12) {
                    return Err(Error::OutsideTable {
                        t: t_final,
                        end: table.end(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Checks that the forcing repeats with period `period`: no tables, and
    /// every sinusoid completes an integer number of cycles within 1e-12.
    pub fn check_period(&self, period: f64) -> Result<()> {
        for s in &self.signals {
            if s.table.is_some() {
                return Err(Error::InvalidParameter(
                    "tabulated forcing is not allowed in periodic problems".into(),
                ));
            }
            for sin in &s.sinusoids {
                let cycles = sin.omega.abs() * period / std::f64::consts::TAU;
                if (cycles - cycles.round()).abs() > 1e-12 * cycles.max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "forcing frequency {} does not repeat over period {period}",
                        sin.omega
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Mass, damping, interaction force and forcing of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub mass: f64,
    pub damping: f64,
    pub force: QuadraticForce,
    pub forcing: ForcingSpec,
}

impl ChainParams {
    pub fn new(mass: f64, damping: f64, force: QuadraticForce, forcing: ForcingSpec) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if !(damping >= 0.0) || !damping.is_finite() {
            return Err(Error::InvalidParameter(format!("damping must be non-negative, got {damping}")));
        }
        check_len("forcing", force.n(), forcing.n())?;
        Ok(Self {
            mass,
            damping,
            force,
            forcing,
        })
    }

    pub fn n(&self) -> usize {
        self.force.n()
    }
}

/// Evaluates `K(x)` for the origin-frame coefficients.
pub fn eval_force(force: &QuadraticForce, x: &DVector<f64>) -> Result<DVector<f64>> {
    force.eval(x)
}

pub fn reexpand<'a>(force: &'a QuadraticForce, xbar: &DVector<f64>) -> Result<ExpandedForce<'a>> {
    force.reexpand(xbar)
}

pub fn eval_forcing(forcing: &ForcingSpec, t: f64) -> Result<DVector<f64>> {
    forcing.eval(t)
}
