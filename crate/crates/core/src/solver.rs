//! Newton solution of the discrete dual Euler-Lagrange system, primal
//! recovery and verification reports.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dual::{scaled_residual, Discretization, DualField, ProblemSpec};
use crate::error::{Error, Result};
use crate::linalg::Inertia;
use crate::primal::{primal_residual, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepControl {
    /// Newton with backtracking on the action; falls back to a trust-region
    /// step when the Hessian is not negative definite.
    DampedNewton,
    /// Always take shifted (trust-region) steps judged on the residual norm.
    TrustRegion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Tolerance on the scaled residual `|gradient|_inf / h`, relative to the
    /// size of the linearized system (see [`DualSolution::residual_scale`]).
    pub tolerance: f64,
    pub step_control: StepControl,
    pub initial_guess: Option<DualField>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-10,
            step_control: StepControl::DampedNewton,
            initial_guess: None,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub field: DualField,
    pub converged: bool,
    pub iterations: usize,
    /// Scaled residual before each iteration and at the final iterate.
    pub residual_history: Vec<f64>,
    /// `max(1, |z|_inf |H|_inf / h)` at the returned field; convergence means
    /// `final residual <= tolerance * residual_scale`.
    pub residual_scale: f64,
    /// Relative tolerance the solve was run with.
    pub tolerance: f64,
    /// Inertia of the Hessian at the returned field.
    pub inertia: Inertia,
}

impl DualSolution {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::INFINITY)
    }

    /// Turns a non-converged solution into [`Error::NotConverged`].
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.final_residual(),
            })
        }
    }
}

/// Coefficient of the sufficient-ascent test `S(new) >= S(old) - c |step|^2`.
const ASCENT_SLACK: f64 = 1e-4;
const MIN_STEP_FRACTION: f64 = 1.0 / 1024.0;

pub(crate) struct NewtonOutcome {
    pub z: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub residual_scale: f64,
    pub inertia: Inertia,
}

fn trial(disc: &Discretization<'_>, z: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
    disc.action_and_gradient(&disc.field_from(z)).ok()
}

/// Newton iteration on `gradient(z) = 0`, maximizing the action.
pub(crate) fn newton(disc: &Discretization<'_>, z0: DVector<f64>, opts: &SolveOptions) -> Result<NewtonOutcome> {
    opts.validate()?;
    let grid = disc.grid();
    let mut z = z0;
    let (mut s, mut g) = disc.action_and_gradient(&disc.field_from(&z))?;
    let h = grid.step();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut shift = 0.0_f64;
    let mut accepted_last = true;

    // Round-off in the gradient after a linear solve is about
    // eps * |H| * |z|, so the tolerance is scaled by that magnitude.
    let (converged, residual_scale, inertia) = loop {
        let hess = disc.hessian(&disc.field_from(&z))?;
        let norm = hess.norm_inf();
        let scale = (z.amax() * norm / h).max(1.0);
        let factor = hess.factor();
        let inertia = factor.as_ref().map(|f| f.inertia()).unwrap_or_default();
        let residual = scaled_residual(&g, grid);
        history.push(residual);
        if residual <= opts.tolerance * scale {
            break (true, scale, inertia);
        }
        if iterations >= opts.max_iterations || !accepted_last {
            break (false, scale, inertia);
        }

        let newton_ok = opts.step_control == StepControl::DampedNewton
            && matches!(&factor, Ok(f) if f.inertia().is_negative_definite());
        let mut accepted = None;
        if newton_ok {
            let step = -factor.as_ref().unwrap().solve(&g);
            let step_norm2 = step.norm_squared();
            let mut frac = 1.0;
            while frac >= MIN_STEP_FRACTION {
                let cand = &z + &step * frac;
                if let Some((sc, gc)) = trial(disc, &cand) {
                    if sc >= s - ASCENT_SLACK * frac * frac * step_norm2 {
                        accepted = Some((cand, sc, gc));
                        break;
                    }
                }
                frac *= 0.5;
            }
        }

        if accepted.is_none() {
            // Shifted step (H - mu I) dz = -g with H - mu I negative definite,
            // accepted when the residual norm decreases.
            let current = g.amax();
            shift = if shift > 0.0 { shift * 0.1 } else { 1e-6 * norm };
            while shift <= 1e12 * norm {
                if let Ok(f) = hess.shifted(shift).factor() {
                    if f.inertia().is_negative_definite() {
                        let cand = &z - f.solve(&g);
                        if let Some((sc, gc)) = trial(disc, &cand) {
                            if gc.amax() < current {
                                accepted = Some((cand, sc, gc));
                                break;
                            }
                        }
                    }
                }
                shift *= 10.0;
            }
        }

        iterations += 1;
        accepted_last = accepted.is_some();
        if let Some((zn, sn, gn)) = accepted {
            z = zn;
            s = sn;
            g = gn;
        }
    };

    Ok(NewtonOutcome {
        z,
        converged,
        iterations,
        residual_history: history,
        residual_scale,
        inertia,
    })
}

/// Solves for an extremal of the dual action with the duals pinned to zero at
/// the final time. Non-convergence is reported through
/// [`DualSolution::converged`]; see [`DualSolution::ensure_converged`].
pub fn solve_dual(spec: &ProblemSpec, opts: &SolveOptions) -> Result<DualSolution> {
    let disc = spec.discretization()?;
    let z0 = match &opts.initial_guess {
        Some(guess) => {
            disc.check_field(guess)?;
            guess.pack()
        }
        None => DVector::zeros(disc.unknowns()),
    };
    let out = newton(&disc, z0, opts)?;
    Ok(DualSolution {
        field: disc.field_from(&out.z),
        converged: out.converged,
        iterations: out.iterations,
        residual_history: out.residual_history,
        residual_scale: out.residual_scale,
        tolerance: opts.tolerance,
        inertia: out.inertia,
    })
}

/// Maps a dual solution back to a primal trajectory node by node.
pub fn recover_primal(sol: &DualSolution, spec: &ProblemSpec) -> Result<Trajectory> {
    spec.discretization()?.recover(&sol.field)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityCheck {
    pub inertia: Inertia,
    /// Whether the interaction force is linear, the case where negative
    /// semidefiniteness is asserted rather than reported.
    pub linear: bool,
    pub negative_semidefinite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub converged: bool,
    pub iterations: usize,
    /// Scaled residual `|gradient|_inf / h` at the solution.
    pub gradient_norm: f64,
    pub primal_residual_momentum: Option<f64>,
    pub primal_residual_kinematic: Option<f64>,
    pub oracle_max_deviation: Option<f64>,
    pub ellipticity_min: f64,
    pub concavity: ConcavityCheck,
    /// Human-readable findings; empty when every check passed.
    pub flags: Vec<String>,
}

/// Builds a report for `sol`. Failures appear as report entries, not errors.
pub fn verify(sol: &DualSolution, spec: &ProblemSpec, oracle: Option<&Trajectory>) -> Result<VerificationReport> {
    let disc = spec.discretization()?;
    verify_with(&disc, sol, oracle, sol.tolerance * sol.residual_scale)
}

pub(crate) fn verify_with(
    disc: &Discretization<'_>,
    sol: &DualSolution,
    oracle: Option<&Trajectory>,
    tolerance: f64,
) -> Result<VerificationReport> {
    let mut flags = Vec::new();
    let grid = disc.grid();
    let gradient_norm = match disc.gradient(&sol.field) {
        Ok(g) => scaled_residual(&g, grid),
        Err(e) => {
            flags.push(format!("gradient unavailable: {e}"));
            f64::MAX
        }
    };
    if gradient_norm > tolerance {
        flags.push(format!("gradient norm {gradient_norm:e} exceeds tolerance {tolerance:e}"));
    }
    if !sol.converged {
        flags.push("solver did not converge".into());
    }

    let (mut momentum, mut kinematic, mut deviation) = (None, None, None);
    match disc.recover(&sol.field) {
        Ok(traj) => {
            let r = primal_residual(&traj, disc.params)?;
            momentum = Some(r.max_momentum());
            kinematic = Some(r.max_kinematic());
            if let Some(o) = oracle {
                deviation = Some(traj.max_deviation(o)?);
            }
        }
        Err(e) => flags.push(format!("primal recovery failed: {e}")),
    }

    let ellipticity = disc.ellipticity(&sol.field)?;
    let ellipticity_min = ellipticity.iter().copied().fold(f64::INFINITY, f64::min);
    if ellipticity_min <= 0.0 {
        let node = ellipticity.iter().position(|&v| v <= 0.0).unwrap_or(0);
        flags.push(format!("ellipticity lost: non-positive value {ellipticity_min:e} (first at node {node})"));
    }

    let inertia = match disc.hessian(&sol.field).and_then(|h| h.factor()) {
        Ok(f) => f.inertia(),
        Err(e) => {
            flags.push(format!("hessian inertia unavailable: {e}"));
            sol.inertia
        }
    };
    let concavity = ConcavityCheck {
        inertia,
        linear: disc.linear,
        negative_semidefinite: inertia.is_negative_semidefinite(),
    };
    if concavity.linear && !concavity.negative_semidefinite {
        flags.push("linear chain hessian is not negative semidefinite".into());
    }

    Ok(VerificationReport {
        converged: sol.converged,
        iterations: sol.iterations,
        gradient_norm,
        primal_residual_momentum: momentum,
        primal_residual_kinematic: kinematic,
        oracle_max_deviation: deviation,
        ellipticity_min,
        concavity,
        flags,
    })
}
