//! Time-periodic dual extremals for periodically forced chains.
//!
//! The period is fixed to a multiple of the forcing period. Node `M` is
//! identified with node 0, the initial-data boundary terms are dropped, and
//! the Newton system is cyclic block-tridiagonal.

use nalgebra::{DVector, SymmetricEigen};

use crate::chain::ChainParams;
use crate::dual::{BaseState, Discretization, DualField, ScaleParams};
use crate::error::{check_len, Error, Result};
use crate::primal::{TimeGrid, Trajectory};
use crate::solver::{newton, verify_with, DualSolution, SolveOptions, VerificationReport};

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpec {
    pub params: ChainParams,
    pub scales: ScaleParams,
    /// Periodic base over one period: node `M` must equal node 0.
    pub base: BaseState,
    pub grid: TimeGrid,
    pub freeze_a: bool,
}

impl PeriodicSpec {
    pub fn new(params: ChainParams, scales: ScaleParams, base: BaseState) -> Result<Self> {
        check_len("base dimension", params.n(), base.n())?;
        let grid = base.grid;
        if grid.intervals() < 3 {
            return Err(Error::InvalidParameter("periodic grid needs at least 3 intervals".into()));
        }
        params.forcing.check_period(grid.t_final())?;
        let m = grid.intervals();
        if base.xbar[m] != base.xbar[0] || base.vbar[m] != base.vbar[0] {
            return Err(Error::InvalidParameter("periodic base must satisfy xbar(0) = xbar(P), vbar(0) = vbar(P)".into()));
        }
        Ok(Self {
            params,
            scales,
            base,
            grid,
            freeze_a: false,
        })
    }

    pub fn with_frozen_a(mut self, freeze: bool) -> Self {
        self.freeze_a = freeze;
        self
    }

    pub fn period(&self) -> f64 {
        self.grid.t_final()
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
            initial: None,
            linear: self.params.force.is_linear(),
        })
    }

    /// Periodic action (integral terms only).
    pub fn action(&self, field: &DualField) -> Result<f64> {
        self.discretization()?.action(field)
    }

    pub fn gradient(&self, field: &DualField) -> Result<DVector<f64>> {
        self.discretization()?.gradient(field)
    }

    pub fn hessian(&self, field: &DualField) -> Result<crate::linalg::BlockTridiagonal> {
        self.discretization()?.hessian(field)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicDualSolution {
    /// Dual field with node `M` a copy of node 0.
    pub field: DualField,
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub residual_scale: f64,
    pub tolerance: f64,
    pub inertia: crate::linalg::Inertia,
}

impl PeriodicDualSolution {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::INFINITY)
    }
}

/// Newton on the periodic discrete Euler-Lagrange system.
pub fn solve_periodic(spec: &PeriodicSpec, opts: &SolveOptions) -> Result<PeriodicDualSolution> {
    let disc = spec.discretization()?;
    let z0 = match &opts.initial_guess {
        Some(guess) => {
            disc.check_field(guess)?;
            guess.pack()
        }
        None => DVector::zeros(disc.unknowns()),
    };
    check_resonance(&spec.params)?;
    // Other singular cyclic systems surface here.
    disc.hessian(&disc.field_from(&z0))?.factor()?;
    let out = newton(&disc, z0, opts)?;
    Ok(PeriodicDualSolution {
        field: disc.field_from(&out.z),
        converged: out.converged,
        iterations: out.iterations,
        residual_history: out.residual_history,
        residual_scale: out.residual_scale,
        tolerance: opts.tolerance,
        inertia: out.inertia,
    })
}

const RESONANCE_TOL: f64 = 1e-9;

/// Rejects an undamped linear chain driven at a natural frequency with a
/// nonzero modal projection. The discrete cyclic system is then only
/// singular up to the midpoint phase error, so it is caught analytically.
fn check_resonance(params: &ChainParams) -> Result<()> {
    let force = &params.force;
    if params.damping != 0.0 || !force.is_linear() {
        return Ok(());
    }
    let a = force.a();
    let sym = (a + a.transpose()) * 0.5;
    if (a - &sym).amax() > 1e-12 * a.amax().max(1.0) {
        return Ok(());
    }
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.amax().max(1.0);
    let signals = &params.forcing.signals;
    let mut freqs: Vec<f64> = vec![0.0];
    for s in signals {
        freqs.extend(s.sinusoids.iter().map(|w| w.omega.abs()));
    }
    for (j, &mu) in eig.eigenvalues.iter().enumerate() {
        let omega = (mu.max(0.0) / params.mass).sqrt();
        let mode = eig.eigenvectors.column(j);
        for &f in &freqs {
            let hit = if f == 0.0 {
                mu.abs() <= RESONANCE_TOL * scale
            } else {
                (f - omega).abs() <= RESONANCE_TOL * omega.max(1.0)
            };
            if !hit {
                continue;
            }
            // Complex modal amplitude of the forcing at frequency f.
            let (mut re, mut im) = (0.0, 0.0);
            for (i, s) in signals.iter().enumerate() {
                let (mut fr, mut fi) = if f == 0.0 { (s.constant, 0.0) } else { (0.0, 0.0) };
                for w in s.sinusoids.iter().filter(|w| (w.omega.abs() - f).abs() <= RESONANCE_TOL * f.max(1.0)) {
                    fr += w.amplitude * w.phase.cos();
                    fi += w.amplitude * w.phase.sin() * w.omega.signum();
                }
                re += mode[i] * fr;
                im += mode[i] * fi;
            }
            if re.hypot(im) > 1e-12 {
                return Err(Error::Resonance { frequency: omega });
            }
        }
    }
    Ok(())
}

/// Primal orbit over one period; the last node repeats the first exactly.
pub fn recover_periodic_orbit(sol: &PeriodicDualSolution, spec: &PeriodicSpec) -> Result<Trajectory> {
    spec.discretization()?.recover(&sol.field)
}

/// Verification report for a periodic solution; `oracle` is compared over one
/// period.
pub fn verify_periodic(
    sol: &PeriodicDualSolution,
    spec: &PeriodicSpec,
    oracle: Option<&Trajectory>,
) -> Result<VerificationReport> {
    let disc = spec.discretization()?;
    let as_dual = DualSolution {
        field: sol.field.clone(),
        converged: sol.converged,
        iterations: sol.iterations,
        residual_history: sol.residual_history.clone(),
        residual_scale: sol.residual_scale,
        tolerance: sol.tolerance,
        inertia: sol.inertia,
    };
    verify_with(&disc, &as_dual, oracle, sol.tolerance * sol.residual_scale)
}

/// Amplitude and phase lag of component `i` of `x` against `cos(omega t)`,
/// from the first Fourier coefficients over one period (trapezoid rule).
pub fn fundamental_harmonic(orbit: &Trajectory, i: usize, omega: f64) -> (f64, f64) {
    let grid = orbit.grid;
    let m = grid.intervals();
    let h = grid.step();
    let (mut a, mut b) = (0.0, 0.0);
    for k in 0..m {
        let t = grid.t(k);
        a += orbit.x[k][i] * (omega * t).cos();
        b += orbit.x[k][i] * (omega * t).sin();
    }
    let scale = 2.0 * h / grid.t_final();
    let (a, b) = (a * scale, b * scale);
    ((a * a + b * b).sqrt(), b.atan2(a))
}
