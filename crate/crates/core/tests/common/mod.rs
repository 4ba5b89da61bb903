#![allow(dead_code)]

use dualchain::chain::Boundary;
use dualchain::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn oscillator(m: f64, d: f64, k: f64, forcing: Signal) -> ChainParams {
    let force = QuadraticForce::linear(DVector::zeros(1), DMatrix::from_element(1, 1, k)).unwrap();
    ChainParams::new(m, d, force, ForcingSpec { signals: vec![forcing] }).unwrap()
}

pub fn cosine(amplitude: f64, omega: f64) -> Signal {
    Signal {
        sinusoids: vec![Sinusoid {
            amplitude,
            omega,
            phase: 0.0,
        }],
        ..Signal::default()
    }
}

pub fn fput(n: usize, alpha: f64, damping: f64, forcing: ForcingSpec) -> ChainParams {
    ChainParams::new(1.0, damping, fput_alpha(n, alpha, Boundary::FixedEnds).unwrap(), forcing).unwrap()
}

/// Forcing `amplitude cos(omega t)` on the first particle only.
pub fn drive_first(n: usize, amplitude: f64, omega: f64) -> ForcingSpec {
    let mut f = ForcingSpec::zero(n);
    f.signals[0] = cosine(amplitude, omega);
    f
}

pub fn scalar(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

/// Samples `(x(t), v(t))` on the grid of `grid`.
pub fn sampled(grid: TimeGrid, f: impl Fn(f64) -> (DVector<f64>, DVector<f64>)) -> Trajectory {
    let (x, v) = (0..=grid.intervals()).map(|k| f(grid.t(k))).unzip();
    Trajectory::new(grid, x, v).unwrap()
}

/// Observed ratios between successive entries.
pub fn ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

/// Random quadratic chain with small `B`, smooth random base, random forcing
/// and a random dual field of size `scale` that vanishes at the final node.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64) -> (ProblemSpec, DualField) {
    let c = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.3..0.3));
    let a = DMatrix::identity(n, n) * 2.0 + &r * r.transpose();
    let mut triplets = Vec::new();
    for _ in 0..2 * n {
        triplets.push((
            rng.random_range(0..n),
            rng.random_range(0..n),
            rng.random_range(0..n),
            rng.random_range(-0.4..0.4),
        ));
    }
    let force = QuadraticForce::from_triplets(c, a, &triplets).unwrap();
    let signals = (0..n)
        .map(|_| Signal {
            constant: rng.random_range(-0.2..0.2),
            sinusoids: vec![Sinusoid {
                amplitude: rng.random_range(0.0..0.5),
                omega: rng.random_range(0.5..3.0),
                phase: rng.random_range(0.0..6.0),
            }],
            table: None,
        })
        .collect();
    let params = ChainParams::new(
        rng.random_range(0.5..2.0),
        rng.random_range(0.0..0.5),
        force,
        ForcingSpec { signals },
    )
    .unwrap();
    let grid = TimeGrid::new(rng.random_range(0.5..2.0), m).unwrap();
    let (w, ph): (f64, f64) = (rng.random_range(0.5..2.0), rng.random_range(0.0..3.0));
    let xbar = (0..=m)
        .map(|k| DVector::from_fn(n, |i, _| 0.3 * (w * grid.t(k) + ph + i as f64).sin()))
        .collect();
    let vbar = (0..=m)
        .map(|k| DVector::from_fn(n, |i, _| 0.3 * w * (w * grid.t(k) + ph + i as f64).cos()))
        .collect();
    let base = BaseState::new(grid, xbar, vbar, BaseProvenance::UserTable).unwrap();
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
    let v0 = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
    let scales = ScaleParams::new(rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)).unwrap();
    let spec = ProblemSpec::new(params, scales, base, x0, v0).unwrap();
    let mut field = DualField::zeros(grid, n);
    for k in 0..m {
        field.gamma[k] = DVector::from_fn(n, |_, _| rng.random_range(-scale..scale));
        field.lambda[k] = DVector::from_fn(n, |_, _| rng.random_range(-scale..scale));
    }
    (spec, field)
}

/// The functional before eliminating the primal variables, evaluated with
/// `(x, v)` from the dual-to-primal map. Same quadrature as the solver:
/// element midpoints, element-constant rates.
pub fn pre_dual(field: &DualField, spec: &ProblemSpec) -> f64 {
    let grid = spec.grid;
    let h = grid.step();
    let p = &spec.params;
    let (cx, cv) = (spec.scales.c_x, spec.scales.c_v);
    let mid = |a: &[DVector<f64>], e: usize| (&a[e] + &a[e + 1]) * 0.5;
    let mut s = 0.0;
    for e in 0..grid.intervals() {
        let (g, l) = (mid(&field.gamma, e), mid(&field.lambda, e));
        let gd = (&field.gamma[e + 1] - &field.gamma[e]) / h;
        let ld = (&field.lambda[e + 1] - &field.lambda[e]) / h;
        let (xb, vb) = (mid(&spec.base.xbar, e), mid(&spec.base.vbar, e));
        let (x, v) = dtp_map(&l, &ld, &g, &gd, &xb, &vb, spec).unwrap();
        let f = p.forcing.eval((grid.t(e) + grid.t(e + 1)) * 0.5).unwrap();
        let k = p.force.eval(&x).unwrap();
        let integrand = -p.mass * v.dot(&ld) + p.damping * l.dot(&v) + l.dot(&k) - l.dot(&f) - x.dot(&gd) - g.dot(&v)
            + 0.5 * cx * (&x - &xb).norm_squared()
            + 0.5 * cv * (&v - &vb).norm_squared();
        s += h * integrand;
    }
    s - p.mass * field.lambda[0].dot(&spec.v0) - field.gamma[0].dot(&spec.x0)
}

/// Central finite-difference gradient of `f` at `z`.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, z: &DVector<f64>, eps: f64) -> DVector<f64> {
    DVector::from_fn(z.len(), |i, _| {
        let (mut zp, mut zm) = (z.clone(), z.clone());
        zp[i] += eps;
        zm[i] -= eps;
        (f(&zp) - f(&zm)) / (2.0 * eps)
    })
}

/// Packs the free unknowns (nodes `0..M-1`) of an initial-value field.
pub fn pack(field: &DualField) -> DVector<f64> {
    let n = field.n();
    let m = field.grid.intervals();
    let mut z = DVector::zeros(2 * n * m);
    for k in 0..m {
        z.rows_mut(2 * n * k, n).copy_from(&field.gamma[k]);
        z.rows_mut(2 * n * k + n, n).copy_from(&field.lambda[k]);
    }
    z
}

pub fn unpack(grid: TimeGrid, n: usize, z: &DVector<f64>) -> DualField {
    let mut field = DualField::zeros(grid, n);
    for k in 0..grid.intervals() {
        field.gamma[k] = z.rows(2 * n * k, n).into_owned();
        field.lambda[k] = z.rows(2 * n * k + n, n).into_owned();
    }
    field
}
