//! Delimited text files for trajectories and dual fields.
//!
//! Columns are `t, x_1..x_n, v_1..v_n` (or `gamma`/`lambda` for dual fields),
//! one row per grid node. Values are written with 17 significant digits, which
//! is enough for every `f64` to re-parse to the same bits.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use crate::dual::DualField;
use crate::error::{Error, Result};
use crate::primal::{TimeGrid, Trajectory};

fn header(first: &str, second: &str, n: usize) -> String {
    let mut h = String::from("t");
    for name in [first, second] {
        for i in 1..=n {
            write!(h, ",{name}_{i}").unwrap();
        }
    }
    h
}

fn table(grid: TimeGrid, first: &str, a: &[DVector<f64>], second: &str, b: &[DVector<f64>]) -> String {
    let n = a.first().map_or(0, |v| v.len());
    let mut out = header(first, second, n);
    out.push('\n');
    for k in 0..grid.nodes() {
        write!(out, "{:.16e}", grid.t(k)).unwrap();
        for e in a[k].iter().chain(b[k].iter()) {
            write!(out, ",{e:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

type Columns = (TimeGrid, Vec<DVector<f64>>, Vec<DVector<f64>>);

fn parse_table(text: &str, first: &str, second: &str) -> Result<Columns> {
    let bad = |msg: String| Error::Config(msg);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or_else(|| bad("empty table".into()))?;
    let cols = head.split(',').count();
    if cols < 3 || cols % 2 == 0 {
        return Err(bad(format!("unexpected column count {cols}")));
    }
    let n = (cols - 1) / 2;
    if head.trim() != header(first, second, n) {
        return Err(bad(format!("unexpected header {head:?}")));
    }
    let (mut ts, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for (row, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", row + 1)))?;
        if vals.len() != cols {
            return Err(bad(format!("row {}: expected {cols} columns, got {}", row + 1, vals.len())));
        }
        ts.push(vals[0]);
        a.push(DVector::from_column_slice(&vals[1..=n]));
        b.push(DVector::from_column_slice(&vals[n + 1..]));
    }
    if ts.len() < 2 || ts[0] != 0.0 {
        return Err(bad("table needs at least two rows starting at t = 0".into()));
    }
    let grid = TimeGrid::new(*ts.last().unwrap(), ts.len() - 1)?;
    let tol = 1e-9 * grid.step();
    if let Some(k) = (0..grid.nodes()).find(|&k| (grid.t(k) - ts[k]).abs() > tol) {
        return Err(bad(format!("time column is not uniform at row {}", k + 1)));
    }
    Ok((grid, a, b))
}

pub fn format_trajectory(traj: &Trajectory) -> String {
    table(traj.grid, "x", &traj.x, "v", &traj.v)
}

pub fn parse_trajectory(text: &str) -> Result<Trajectory> {
    let (grid, x, v) = parse_table(text, "x", "v")?;
    Trajectory::new(grid, x, v)
}

pub fn format_dual_field(field: &DualField) -> String {
    table(field.grid, "gamma", &field.gamma, "lambda", &field.lambda)
}

pub fn parse_dual_field(text: &str) -> Result<DualField> {
    let (grid, gamma, lambda) = parse_table(text, "gamma", "lambda")?;
    Ok(DualField { grid, gamma, lambda })
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    Ok(std::fs::write(path, format_trajectory(traj))?)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    parse_trajectory(&std::fs::read_to_string(path)?)
}

pub fn write_dual_field(path: &Path, field: &DualField) -> Result<()> {
    Ok(std::fs::write(path, format_dual_field(field))?)
}

pub fn read_dual_field(path: &Path) -> Result<DualField> {
    parse_dual_field(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        assert_eq!(header("x", "v", 2), "t,x_1,x_2,v_1,v_2");
    }

    #[test]
    fn rejects_ragged_rows() {
        let text = "t,x_1,v_1\n0,1,2\n1,2\n";
        assert!(matches!(parse_trajectory(text), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn trajectory_round_trip_is_bit_exact(
            n in 1usize..4,
            m in 1usize..12,
            t_final in 1e-3f64..1e3,
            seed in proptest::collection::vec(-1e6f64..1e6, 100),
        ) {
            let grid = TimeGrid::new(t_final, m).unwrap();
            let pick = |k: usize, i: usize, off: usize| seed[(k * 7 + i * 3 + off) % seed.len()] / (1.0 + k as f64).powi(3);
            let x = (0..=m).map(|k| DVector::from_fn(n, |i, _| pick(k, i, 0))).collect();
            let v = (0..=m).map(|k| DVector::from_fn(n, |i, _| pick(k, i, 1))).collect();
            let traj = Trajectory::new(grid, x, v).unwrap();
            let back = parse_trajectory(&format_trajectory(&traj)).unwrap();
            prop_assert_eq!(back, traj);
        }
    }
}
